"""Experiment configuration: strict YAML schema, named presets, and the
derivation of per-component RNG seeds from one top-level seed.

Unknown keys are rejected with their full path; a misspelled key never
silently falls back to a default.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field, fields

import yaml

from .network import NetworkParams, ProtocolSpec
from .reduced import FiringRateParams
from .tripartite import AstrocyteParams, NeuronParams


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the key path."""


SCENARIOS = (
    "case1", "case2", "case3", "pulse",
    "tripartite-short", "tripartite-persistent",
    "wm-strong", "wm-weak", "wm-none",
    "stability-report",
)

_NEURON_KEYS = {f.name for f in fields(NeuronParams)} - {"is_excitatory"}
_ASTRO_KEYS = {f.name for f in fields(AstrocyteParams)}
_RATE_KEYS = {f.name for f in fields(FiringRateParams)}
_NETWORK_KEYS = {f.name for f in fields(NetworkParams)} - {"seed"}
_PROTOCOL_KEYS = {f.name for f in fields(ProtocolSpec)}
_STABILITY_KEYS = {"n_trials", "input_levels"}
_TRIPARTITE_KEYS = {"eta", "i_app_amplitude", "i_app_duration",
                    "use_smooth_i_astro", "j_glu_mode", "k_s"}
_EXPORT_KEYS = {"timeseries", "plotdata"}

_SECTIONS = {
    "neuron": _NEURON_KEYS,
    "astrocyte": _ASTRO_KEYS,
    "firing_rate": _RATE_KEYS,
    "network": _NETWORK_KEYS,
    "protocol": _PROTOCOL_KEYS,
    "stability": _STABILITY_KEYS,
    "tripartite": _TRIPARTITE_KEYS,
    "exports": _EXPORT_KEYS,
}
_SCALAR_KEYS = {"scenario", "seed", "dt", "duration", "output_dir",
                "stride", "astro_stride"}


def validate_config_dict(data: dict) -> None:
    """Strict structural validation; raises ConfigError with the key path."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    for key, value in data.items():
        if key in _SCALAR_KEYS:
            continue
        if key not in _SECTIONS:
            raise ConfigError(f"unknown key: {key}")
        if not isinstance(value, dict):
            raise ConfigError(f"section {key} must be a mapping")
        for sub in value:
            if sub not in _SECTIONS[key]:
                raise ConfigError(f"unknown key: {key}.{sub}")
    if "scenario" in data and data["scenario"] not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {data['scenario']!r}; expected one of {', '.join(SCENARIOS)}")


@dataclass
class ExperimentConfig:
    """Resolved experiment settings (scenario, seed, overrides per section)."""

    scenario: str
    seed: int = 0
    dt: float | None = None
    duration: float | None = None
    output_dir: str = "out"
    stride: int = 1
    astro_stride: int = 100
    exports: dict = field(default_factory=lambda: {"timeseries": True, "plotdata": True})
    neuron: dict = field(default_factory=dict)
    astrocyte: dict = field(default_factory=dict)
    firing_rate: dict = field(default_factory=dict)
    network: dict = field(default_factory=dict)
    protocol: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    tripartite: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        validate_config_dict(data)
        if "scenario" not in data:
            raise ConfigError("missing required key: scenario")
        kwargs = dict(data)
        exports = dict(timeseries=True, plotdata=True)
        exports.update(kwargs.pop("exports", {}))
        try:
            cfg = cls(exports=exports, **kwargs)
            cfg.seed = int(cfg.seed)
            cfg.stride = int(cfg.stride)
            cfg.astro_stride = int(cfg.astro_stride)
            if cfg.dt is not None:
                cfg.dt = float(cfg.dt)
            if cfg.duration is not None:
                cfg.duration = float(cfg.duration)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"invalid value: {err}") from err
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # --- materialized parameter objects -------------------------------
    def neuron_params(self, **extra) -> NeuronParams:
        return _build(NeuronParams, {**self.neuron, **extra}, "neuron")

    def astro_params(self) -> AstrocyteParams:
        return _build(AstrocyteParams, self.astrocyte, "astrocyte")

    def rate_params(self, **extra) -> FiringRateParams:
        return _build(FiringRateParams, {**self.firing_rate, **extra}, "firing_rate")

    def network_params(self) -> NetworkParams:
        return _build(NetworkParams, {**self.network, "seed": subseed(self.seed, "topology")},
                      "network")

    def protocol_spec(self, preset_defaults: dict) -> ProtocolSpec:
        merged = {**preset_defaults, **self.protocol}
        if "target_set" in merged and merged["target_set"] is not None:
            merged["target_set"] = tuple(merged["target_set"])
        return _build(ProtocolSpec, merged, "protocol")


def _build(cls, overrides: dict, section: str):
    try:
        return cls(**overrides)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid {section} parameters: {err}") from err


def load_config(path) -> ExperimentConfig:
    """Parse and strictly validate a YAML experiment file."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    return ExperimentConfig.from_dict(data)


def apply_set_override(data: dict, assignment: str) -> None:
    """Apply one ``key.path=value`` override to a raw config mapping.

    Values are parsed as YAML scalars, so ``--set protocol.eta=0.5`` and
    ``--set exports.plotdata=false`` both work.
    """
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key_path, raw = assignment.split("=", 1)
    keys = key_path.strip().split(".")
    if not all(keys):
        raise ConfigError(f"bad key path {key_path!r}")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into scalar at {key!r}")
    node[keys[-1]] = yaml.safe_load(raw)


def subseed(seed: int, name: str) -> int:
    """Stable named sub-seed; the same (seed, name) pair always maps to the
    same stream regardless of other configuration."""
    digest = hashlib.blake2s(f"{seed}:{name}".encode()).digest()[:8]
    return int.from_bytes(digest, "little")
