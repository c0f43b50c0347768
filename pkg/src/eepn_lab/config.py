"""JSON configuration parsing and the run manifest.

Config files use engineering units (GBd, kHz, km, ps^2/km, dB); they are
converted to SI on load. Unknown keys are a hard error so typos cannot
silently fall back to defaults.
"""

from __future__ import annotations

import json
import time

import numpy as np

from .link import LinkConfig

# key -> (LinkConfig attribute, scale factor to SI)
_LINK_KEYS = {
    "symbol_rate_gbd": ("symbol_rate", 1e9),
    "f_sim_thz": ("f_sim", 1e12),
    "rolloff": ("rolloff", 1.0),
    "beta2_ps2_km": ("beta2", 1e-24 / 1e3),
    "length_km": ("length", 1e3),
    "linewidth_tx_khz": ("linewidth_tx", 1e3),
    "linewidth_rx_khz": ("linewidth_rx", 1e3),
    "baseline_snr_db": ("baseline_snr", 1.0),
    "num_symbols": ("num_symbols", 1),
    "seed": ("seed", 1),
    "rrc_span": ("rrc_span", 1),
}

# experiment-level keys passed through unscaled (lengths in symbols,
# linewidths in kHz converted below)
_EXPERIMENT_KEYS = {
    "seeds", "symbols_per_run", "tr_grid", "cpr_grid",
    "linewidths_khz", "tr_avglen", "cpr_avglen", "n_s_grid", "runs",
}


def parse_config(text: str):
    """Parse a JSON config into (LinkConfig, experiment parameter dict).

    Unspecified link fields take the built-in defaults; an empty object
    gives the full default configuration.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("config must be a JSON object")

    link_kwargs = {}
    experiment = {}
    for key, value in doc.items():
        if key in _LINK_KEYS:
            attr, scale = _LINK_KEYS[key]
            if value is None:
                link_kwargs[attr] = None
            elif isinstance(scale, int):
                link_kwargs[attr] = int(value)
            else:
                link_kwargs[attr] = float(value) * scale
        elif key in _EXPERIMENT_KEYS:
            experiment[key] = value
        else:
            raise ValueError(f"unknown config key: {key!r}")

    if "linewidths_khz" in experiment:
        experiment["linewidths"] = [float(v) * 1e3
                                    for v in experiment.pop("linewidths_khz")]
    try:
        config = LinkConfig(**link_kwargs)
    except ValueError as exc:
        raise ValueError(f"invalid config value: {exc}") from exc
    return config, experiment


def config_echo(config: LinkConfig) -> dict:
    """Resolved configuration in the file's engineering units."""
    out = {}
    for key, (attr, scale) in _LINK_KEYS.items():
        value = getattr(config, attr)
        if value is None or isinstance(scale, int):
            out[key] = value
        else:
            out[key] = value / scale
    return out


def write_manifest(path, config: LinkConfig, seed: int, wall_time_s: float,
                   extra: dict | None = None):
    from . import __version__
    doc = {
        "tool": "eepn-lab",
        "version": __version__,
        "config": config_echo(config),
        "seed": int(seed),
        "wall_time_s": round(float(wall_time_s), 3),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")
