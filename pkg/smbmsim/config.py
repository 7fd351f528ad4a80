"""
config.py — Run configuration for SmbmSim.

Layers, lowest precedence first:

  1. DEFAULTS below (the published 4x4, Nrf=2, QPSK scenario)
  2. SMBMSIM_WORKERS / SMBMSIM_LOG_LEVEL from the environment
  3. a flat YAML config file (`--config run.yaml`), one `key: value` per line
  4. command-line flags

Config-file keys are the long flag names with dashes turned into
underscores (`nt`, `nrf`, `mod`, `snr`, `block_length`, ...), so every key
has a flag and every flag has a key. Unknown keys, nested values and empty
values are rejected with a ConfigError naming the key.

Environment:
  SMBMSIM_OUTPUT_DIR  — directory for output files when --out is not given
  SMBMSIM_WORKERS     — default worker-process count
  SMBMSIM_LOG_LEVEL   — default log level
"""

import logging
import math
import os
import re
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import yaml

from smbmsim.constellation import ModulationKind, ModulationSpec
from smbmsim.engine import SweepConfig
from smbmsim.errors import ConfigError
from smbmsim.estimation import Estimator
from smbmsim.mapping import SystemConfig

logger = logging.getLogger("smbmsim.config")

MODES = ("mse", "ber", "abep")

DEFAULTS: Dict[str, Any] = {
    "mode": "ber",
    "mod": "qpsk",
    "es": 1.0,
    "nt": 4,
    "nr": 4,
    "nrf": 2,
    "csi": "lmmse",
    "snr": "-4:2:16",
    "seed": 0,
    "block_length": 100,
    "min_errors": 200,
    "max_blocks": 1_000_000,
    "min_blocks": 1,
    "mse_blocks": 10_000,
    "workers": 1,
    "out": None,
    "plot": False,
    "strict": False,
    "log_level": "INFO",
}

# Dataclass field names → user-facing keys, so errors raised deep in the
# domain types still name the flag the user typed.
_FIELD_KEYS = {
    "n_tx": "nt",
    "n_rx": "nr",
    "n_rf": "nrf",
    "modulation": "mod",
    "symbol_energy": "es",
    "min_bit_errors": "min_errors",
}

_ENV_KEYS = {
    "SMBMSIM_WORKERS": "workers",
    "SMBMSIM_LOG_LEVEL": "log_level",
}


@dataclass(frozen=True)
class OutputSettings:
    mode: str
    out_path: str
    plot_path: Optional[str]
    strict: bool
    mse_blocks: int
    log_level: str

    @property
    def manifest_path(self) -> str:
        return self.out_path + ".manifest.json"


# ─── Value Parsing ───

def _as_int(key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected an integer, got {value!r}") from None
    if not as_float.is_integer():
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return int(as_float)


def _as_float(key: str, value: Any) -> float:
    try:
        result = float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {value!r}") from None
    if not math.isfinite(result):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    return result


def _as_bool(key: str, value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected true/false, got {value!r}")


def parse_snr_grid(text: Any) -> Tuple[float, ...]:
    """`start:step:stop` (stop included when on grid), a comma list, or one value."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return (float(text),)
    text = str(text).strip()
    if not text:
        raise ConfigError("snr", "SNR grid is empty")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("snr", f"expected start:step:stop, got {text!r}")
        start, step, stop = (_as_float("snr", p) for p in parts)
        if step <= 0:
            raise ConfigError("snr", f"step must be > 0, got {step}")
        if stop < start:
            raise ConfigError("snr", f"stop ({stop}) is below start ({start})")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    return tuple(_as_float("snr", p) for p in text.split(","))


_MOD_RE = re.compile(r"^(\d+)?-?(psk|qam)$")


def parse_modulation(name: Any, symbol_energy: float = 1.0) -> ModulationSpec:
    """bpsk, qpsk, 8psk, 16psk, 4qam, 16qam, 64qam, ... → ModulationSpec."""
    text = str(name).strip().lower()
    aliases = {"bpsk": (ModulationKind.PSK, 2), "qpsk": (ModulationKind.PSK, 4)}
    if text in aliases:
        kind, order = aliases[text]
    else:
        match = _MOD_RE.match(text)
        if not match or not match.group(1):
            raise ConfigError("mod", f"unknown modulation {name!r} (try qpsk, 8psk, 16qam)")
        kind, order = ModulationKind(match.group(2)), int(match.group(1))
    try:
        return ModulationSpec(kind=kind, order=order, symbol_energy=symbol_energy)
    except ConfigError as e:
        raise ConfigError(_FIELD_KEYS.get(e.field, e.field), e.message) from None


# ─── Layers ───

def load_config_file(path: str) -> Dict[str, Any]:
    """Read a flat YAML mapping of config keys."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e.strerror}") from None
    except yaml.YAMLError as e:
        raise ConfigError("config", f"YAML syntax error in {path}: {e}") from None

    if data is None:
        return {}
    if isinstance(data, str) and "=" in data:
        raise ConfigError("config", f"{path} uses INI-style key = value lines; write YAML key: value lines instead")
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must contain a key: value mapping")

    values: Dict[str, Any] = {}
    for raw_key, value in data.items():
        key = str(raw_key).replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown config key")
        if isinstance(value, (dict, list)):
            raise ConfigError(key, "config values must be scalars (flat key: value file)")
        if value is None:
            raise ConfigError(key, "missing value")
        values[key] = value
    logger.info("Loaded %d config keys from %s", len(values), path)
    return values


def env_overrides(environ: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    environ = os.environ if environ is None else environ
    return {key: environ[name] for name, key in _ENV_KEYS.items() if environ.get(name)}


def default_output_dir(environ: Optional[Dict[str, str]] = None) -> str:
    environ = os.environ if environ is None else environ
    return environ.get("SMBMSIM_OUTPUT_DIR") or "."


def merge_layers(file_values: Dict[str, Any], flag_values: Dict[str, Any],
                 environ: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    """DEFAULTS < environment < config file < flags. None flag values do not override."""
    values = dict(DEFAULTS)
    values.update(env_overrides(environ))
    values.update(file_values)
    values.update({k: v for k, v in flag_values.items() if v is not None})
    return values


# ─── Builders ───

def build_sweep_config(values: Dict[str, Any]) -> SweepConfig:
    """Validated SweepConfig from merged key/value settings."""
    try:
        modulation = parse_modulation(values["mod"], _as_float("es", values["es"]))
        system = SystemConfig(
            n_tx=_as_int("nt", values["nt"]),
            n_rx=_as_int("nr", values["nr"]),
            n_rf=_as_int("nrf", values["nrf"]),
            modulation=modulation,
        )
        csi = str(values["csi"]).strip().lower()
        if csi not in {e.value for e in Estimator}:
            raise ConfigError("csi", f"expected perfect, ls or lmmse, got {values['csi']!r}")
        return SweepConfig(
            system=system,
            snr_grid_db=parse_snr_grid(values["snr"]),
            csi_mode=Estimator(csi),
            block_length=_as_int("block_length", values["block_length"]),
            min_bit_errors=_as_int("min_errors", values["min_errors"]),
            max_blocks=_as_int("max_blocks", values["max_blocks"]),
            master_seed=_as_int("seed", values["seed"]),
            min_blocks=_as_int("min_blocks", values["min_blocks"]),
            workers=_as_int("workers", values["workers"]),
        )
    except ConfigError as e:
        raise ConfigError(_FIELD_KEYS.get(e.field, e.field), e.message) from None


def build_output_settings(values: Dict[str, Any], environ: Optional[Dict[str, str]] = None) -> OutputSettings:
    mode = str(values["mode"]).strip().lower()
    if mode not in MODES:
        raise ConfigError("mode", f"expected one of {', '.join(MODES)}, got {values['mode']!r}")
    out = values.get("out") or os.path.join(default_output_dir(environ), f"smbm_{mode}.csv")
    plot = _as_bool("plot", values["plot"])
    level = str(values["log_level"]).upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigError("log_level", f"unknown log level {values['log_level']!r}")
    mse_blocks = _as_int("mse_blocks", values["mse_blocks"])
    if mse_blocks < 1:
        raise ConfigError("mse_blocks", f"must be >= 1, got {mse_blocks}")
    return OutputSettings(
        mode=mode,
        out_path=str(out),
        plot_path=os.path.splitext(str(out))[0] + ".gp" if plot else None,
        strict=_as_bool("strict", values["strict"]),
        mse_blocks=mse_blocks,
        log_level=level,
    )
