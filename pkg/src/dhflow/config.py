"""Run configuration: INI files with a closed key table.

Every recognized key lives in the _SCHEMA table below together with its
parser and default; anything else is rejected by name, so a typo like
"epsilonn" fails the parse instead of silently running the default.  All
defaults together form a valid configuration, so a minimal file only states
what it changes.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

PRESETS = (
    "decoupled_sweep",
    "degree1_blowup",
    "convergence",
    "epsilon_sweep",
    "identities",
)

TWO_PI = 6.283185307179586


@dataclass(frozen=True)
class RunConfig:
    lx: float
    ly: float
    nx: int
    ny: int
    spin: tuple
    kind: str
    q: int
    eps: float
    t_end: float
    cfl_safety: float
    min_dt: float
    max_dt: float
    fixed_dt: float | None
    cadence: int
    delta1: float
    radii: tuple | None
    preset: str
    eps_factors: tuple
    eps_halvings: int
    amp: float
    psi_amp: float
    r0: float
    mode_k: tuple | None
    branch: int
    noise: float
    seed: int
    out_dir: str


def _parse_float(text):
    return float(text)


def _parse_int(text):
    return int(text)


def _parse_str(text):
    return text.strip()


def _parse_pair_int(text):
    parts = text.split()
    if len(parts) != 2:
        raise ValueError(f"expected two integers, got {text!r}")
    return (int(parts[0]), int(parts[1]))


def _parse_opt_float(text):
    text = text.strip()
    return None if not text else float(text)


def _parse_opt_floats(text):
    text = text.strip()
    return None if not text else tuple(float(p) for p in text.split())


def _parse_floats(text):
    return tuple(float(p) for p in text.split())


def _parse_opt_pair_int(text):
    text = text.strip()
    return None if not text else _parse_pair_int(text)


# section -> key -> (field, parser, default)
_SCHEMA = {
    "grid": {
        "lx": ("lx", _parse_float, TWO_PI),
        "ly": ("ly", _parse_float, TWO_PI),
        "nx": ("nx", _parse_int, 32),
        "ny": ("ny", _parse_int, 32),
        "spin": ("spin", _parse_pair_int, (0, 0)),
    },
    "target": {
        "kind": ("kind", _parse_str, "sphere"),
        "q": ("q", _parse_int, 3),
    },
    "flow": {
        "eps": ("eps", _parse_float, 4.0),
        "t_end": ("t_end", _parse_float, 1.0),
        "cfl_safety": ("cfl_safety", _parse_float, 0.5),
        "min_dt": ("min_dt", _parse_float, 1e-10),
        "max_dt": ("max_dt", _parse_float, 1e-2),
        "fixed_dt": ("fixed_dt", _parse_opt_float, None),
    },
    "monitor": {
        "cadence": ("cadence", _parse_int, 1),
        "delta1": ("delta1", _parse_float, 1.0),
        "radii": ("radii", _parse_opt_floats, None),
    },
    "experiment": {
        "preset": ("preset", _parse_str, "convergence"),
        "eps_factors": ("eps_factors", _parse_floats, (0.75, 1.25)),
        "eps_halvings": ("eps_halvings", _parse_int, 6),
    },
    "initial": {
        "amp": ("amp", _parse_float, 0.3),
        "psi_amp": ("psi_amp", _parse_float, 0.2),
        "r0": ("r0", _parse_float, 1.6),
        "mode_k": ("mode_k", _parse_opt_pair_int, None),
        "branch": ("branch", _parse_int, -1),
        "noise": ("noise", _parse_float, 0.0),
        "seed": ("seed", _parse_int, 0),
    },
    "output": {
        "out_dir": ("out_dir", _parse_str, "runs/out"),
    },
}


def _validate(cfg):
    def need(cond, message):
        if not cond:
            raise ValueError(message)

    need(cfg.nx >= 4 and cfg.ny >= 4, f"grid.nx/grid.ny must be >= 4, got {(cfg.nx, cfg.ny)}")
    need(cfg.lx > 0 and cfg.ly > 0, f"grid.lx/grid.ly must be > 0, got {(cfg.lx, cfg.ly)}")
    need(cfg.spin[0] in (0, 1) and cfg.spin[1] in (0, 1),
         f"grid.spin bits must be 0 or 1, got {cfg.spin}")
    need(cfg.kind in ("sphere", "flat"), f"target.kind must be sphere or flat, got {cfg.kind!r}")
    need(cfg.q >= 1, f"target.q must be >= 1, got {cfg.q}")
    need(cfg.eps > 0, "flow.eps must be > 0")
    need(cfg.t_end >= 0, f"flow.t_end must be >= 0, got {cfg.t_end}")
    need(0 < cfg.cfl_safety <= 1, f"flow.cfl_safety must lie in (0, 1], got {cfg.cfl_safety}")
    need(0 < cfg.min_dt <= cfg.max_dt,
         f"flow.min_dt/flow.max_dt must satisfy 0 < min <= max, got {(cfg.min_dt, cfg.max_dt)}")
    need(cfg.fixed_dt is None or cfg.fixed_dt > 0,
         f"flow.fixed_dt must be > 0 when set, got {cfg.fixed_dt}")
    need(cfg.cadence >= 1, f"monitor.cadence must be >= 1, got {cfg.cadence}")
    need(cfg.delta1 > 0, f"monitor.delta1 must be > 0, got {cfg.delta1}")
    need(cfg.radii is None or all(r > 0 for r in cfg.radii),
         f"monitor.radii must be positive, got {cfg.radii}")
    need(cfg.preset in PRESETS,
         f"experiment.preset must be one of {', '.join(PRESETS)}, got {cfg.preset!r}")
    need(cfg.eps_factors and all(f > 0 for f in cfg.eps_factors),
         f"experiment.eps_factors must be positive, got {cfg.eps_factors}")
    need(cfg.eps_halvings >= 1,
         f"experiment.eps_halvings must be >= 1, got {cfg.eps_halvings}")
    need(cfg.amp >= 0, f"initial.amp must be >= 0, got {cfg.amp}")
    need(cfg.psi_amp >= 0, f"initial.psi_amp must be >= 0, got {cfg.psi_amp}")
    need(cfg.r0 > 0, f"initial.r0 must be > 0, got {cfg.r0}")
    need(cfg.branch in (-1, 1), f"initial.branch must be -1 or +1, got {cfg.branch}")
    need(cfg.noise >= 0, f"initial.noise must be >= 0, got {cfg.noise}")
    need(cfg.out_dir.strip() != "", "output.out_dir must not be empty")
    return cfg


def parse_config_text(text, source="<config>"):
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        parser.read_string(text, source=source)
    except configparser.Error as err:
        raise ValueError(f"{source}: {err}") from err

    values = {
        field: default
        for section in _SCHEMA.values()
        for field, _, default in section.values()
    }
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValueError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ValueError(f"{source}: unknown key '{key}' in section [{section}]")
            field, parse, _ = _SCHEMA[section][key]
            try:
                values[field] = parse(raw)
            except ValueError as err:
                raise ValueError(f"{source}: bad value for {section}.{key}: {err}") from err
    return _validate(RunConfig(**values))


def parse_config(path):
    """Parse and fully validate one INI file; unknown keys are errors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ValueError(f"cannot read config {path}: {err}") from err
    return parse_config_text(text, source=str(path))


def effective_text(cfg):
    """Render a config back to INI with every key explicit.

    Sweep sub-runs echo this instead of the parent file so the per-run eps
    and spin land in the run directory; the rendering is deterministic.
    """
    lines = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (field, _, _) in keys.items():
            value = getattr(cfg, field)
            if value is None:
                text = ""
            elif isinstance(value, tuple):
                text = " ".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in value)
            elif isinstance(value, float):
                text = f"{value:.17g}"
            else:
                text = str(value)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)
