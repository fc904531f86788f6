"""Run configuration: built-in defaults, JSON overrides, channel presets.

A config file is a JSON object that overrides any subset of DEFAULTS; keys
that do not exist in the defaults are rejected rather than silently
ignored, and values must match the default's type.  Seeds resolve in the
order command line, then the FWMQKD_SEED environment variable, then the
config file.
"""

from __future__ import annotations

import copy
import json
import math
import os
from pathlib import Path

from .errors import ConfigError, SchemaError
from .photons import AttenuationConfig
from .reconstruct import GridSpec
from .session import SessionConfig
from .spectral import DELTA_EV, EXCITON_WAVELENGTH_NM, ModelParams

ENV_OUTPUT_DIR = "FWMQKD_OUTPUT_DIR"
ENV_SEED = "FWMQKD_SEED"

# Named channels used throughout: wavelength of the carrier and the wave
# plate setting Bob's sifting keeps.  The 540 nm channel decodes at the
# splitting setting where the two delays sit far apart; the 500 nm channel
# has to decode at the mixing setting and its contrast ordering is inverted.
CHANNEL_PRESETS = {
    "500nm": {"lambda_nm": 500.0, "decode_theta_deg": 45.0},
    "540nm": {"lambda_nm": 540.0, "decode_theta_deg": 0.0},
}

DEFAULTS: dict = {
    "seed": 20260814,
    "threads": 1,
    "output_dir": None,
    "model": {
        "delta": 1.0,
        "k_spin": 0.01,
        "hilbert_sign": 1,
        "lambda_x_nm": EXCITON_WAVELENGTH_NM,
        "delta_ev": DELTA_EV,
    },
    "grid": {
        "psi_step": 0.005,
        "phi_step": 0.01,
        "xi": 1e-9,
    },
    "spectra": {
        "t_list": [0.0],
        "e_min": -6.0,
        "e_max": 6.0,
        "points": 2048,
        "conditions": ["RRRR", "RRLL", "RRVV", "RRVH"],
    },
    "contrast_map": {
        "t_list": [0.0, 500.0],
        "lambda_min": 495.0,
        "lambda_max": 545.0,
        "points": 101,
    },
    "reconstruct": {
        "input": None,
    },
    "qkd": {
        "preset": "540nm",
        "lambda_nm": None,
        "decode_theta_deg": None,
        "message": "Tar Heel",
        "cycles": 1200,
        "mean_total_photons": 1.0,
        "g2_target": 1.0,
        "max_photons": 5,
        "delay_bit1": 0.0,
        "delay_bit0": 500.0,
        "threshold_mode": "running-mean",
    },
    "detector_check": {
        "lambda_nm": 540.0,
        "t": 0.0,
        "pulses": 20000,
        "mean_total_photons": 1.0,
        "g2_target": 1.2,
        "max_photons": 5,
    },
}


def load_config(path: str | os.PathLike | None) -> dict:
    """Read a JSON config and merge it over the defaults.

    Raises OSError when the file cannot be read, SchemaError when it is not
    valid JSON or a value has the wrong shape, and ConfigError for unknown
    keys.
    """
    merged = copy.deepcopy(DEFAULTS)
    if path is None:
        return merged
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError("config root must be a JSON object")
    _merge(merged, data, "")
    return merged


def _merge(base: dict, override: dict, prefix: str) -> None:
    for key, value in override.items():
        where = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        current = base[key]
        if isinstance(current, dict):
            if not isinstance(value, dict):
                raise SchemaError(f"config key {where!r} must be an object")
            _merge(current, value, where + ".")
        else:
            base[key] = _coerced(current, value, where)


def _coerced(default, value, where: str):
    if isinstance(default, bool) or isinstance(value, bool):
        if isinstance(default, bool) and isinstance(value, bool):
            return value
        raise SchemaError(f"config key {where!r} has the wrong type")
    if default is None:
        # Nullable slots take a number, a string, or stay null.
        if value is None:
            return None
        if isinstance(value, (int, float)) and math.isfinite(value):
            return float(value)
        if isinstance(value, str):
            return value
        raise SchemaError(f"config key {where!r} must be a number, string, or null")
    if isinstance(default, float):
        if isinstance(value, (int, float)) and math.isfinite(value):
            return float(value)
        raise SchemaError(f"config key {where!r} must be a finite number")
    if isinstance(default, int):
        if isinstance(value, int):
            return value
        raise SchemaError(f"config key {where!r} must be an integer")
    if isinstance(default, str):
        if isinstance(value, str):
            return value
        raise SchemaError(f"config key {where!r} must be a string")
    if isinstance(default, list):
        if not isinstance(value, list):
            raise SchemaError(f"config key {where!r} must be a list")
        if default and isinstance(default[0], str):
            if all(isinstance(item, str) for item in value):
                return list(value)
            raise SchemaError(f"config key {where!r} must be a list of strings")
        if all(isinstance(item, (int, float)) and not isinstance(item, bool)
               and math.isfinite(item) for item in value):
            return [float(item) for item in value]
        raise SchemaError(f"config key {where!r} must be a list of finite numbers")
    raise SchemaError(f"config key {where!r} has an unsupported type")


def resolve_seed(cli_seed: int | None, config: dict) -> int:
    """Seed precedence: --seed flag, then FWMQKD_SEED, then the config."""
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env, 0)
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env!r}") from None
    return int(config["seed"])


def model_params_from(config: dict) -> ModelParams:
    m = config["model"]
    return ModelParams(
        delta=m["delta"],
        k_spin=m["k_spin"],
        hilbert_sign=int(m["hilbert_sign"]),
        lambda_x_nm=m["lambda_x_nm"],
        delta_ev=m["delta_ev"],
    )


def grid_spec_from(config: dict) -> GridSpec:
    g = config["grid"]
    return GridSpec(psi_step=g["psi_step"], phi_step=g["phi_step"], xi=g["xi"])


def attenuation_from(section: dict) -> AttenuationConfig:
    return AttenuationConfig(
        mean_total_photons=section["mean_total_photons"],
        g2_target=section["g2_target"],
        max_photons=int(section["max_photons"]),
    )


def session_config_from(config: dict, seed: int) -> SessionConfig:
    """Assemble a SessionConfig, filling channel fields from the preset."""
    q = config["qkd"]
    lam = q["lambda_nm"]
    theta_deg = q["decode_theta_deg"]
    if lam is None or theta_deg is None:
        preset = q["preset"]
        if preset not in CHANNEL_PRESETS:
            known = ", ".join(sorted(CHANNEL_PRESETS))
            raise ConfigError(f"unknown channel preset {preset!r}; known presets: {known}")
        base = CHANNEL_PRESETS[preset]
        lam = base["lambda_nm"] if lam is None else lam
        theta_deg = base["decode_theta_deg"] if theta_deg is None else theta_deg
    try:
        lam = float(lam)
        theta_deg = float(theta_deg)
    except (TypeError, ValueError):
        raise ConfigError("qkd.lambda_nm and qkd.decode_theta_deg must be numbers") from None
    return SessionConfig(
        message=q["message"],
        cycles=int(q["cycles"]),
        seed=seed,
        lambda_nm=lam,
        decode_theta=math.radians(theta_deg),
        delay_bit1=q["delay_bit1"],
        delay_bit0=q["delay_bit0"],
        threshold_mode=q["threshold_mode"],
        attenuation=attenuation_from(q),
        params=model_params_from(config),
    )
