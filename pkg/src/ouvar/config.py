"""Plain-text experiment configuration: `[section]` headers and `key = value`
lines, `#` comments.  Unknown sections or keys are rejected, every number is
range-checked at parse time, and errors carry file:line provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ouvar.oukernel import DiscreteMeasure

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config"]

KINDS = ("distribution", "large-time", "local", "paper-suite")

_SCHEMA = {
    "run": {"kind", "seed"},
    "measure": {"atoms", "file", "normalize"},
    "rho": {"value"},
    "grids": {
        "t_min", "t_max", "t_points",
        "t_large_min", "t_large_max", "t_large_points",
        "x_order", "local_x_points",
    },
    "alpha": {"min", "max", "per_decade"},
    "outputs": {"dir", "prefix"},
    "local": {"j"},
}


class ConfigError(ValueError):
    """Configuration file problem, with file:line provenance in the message."""


@dataclass
class ExperimentConfig:
    kind: str = "distribution"
    seed: int = 0
    measure: DiscreteMeasure | None = None
    normalize: bool = True
    rho: float = 3.0
    t_min: float = 1e-6
    t_max: float = 1.0
    t_points: int = 512
    t_large_min: float = 1.0
    t_large_max: float = 20.0
    t_large_points: int = 256
    x_order: int = 2048
    local_x_points: int = 1024
    alpha_min: float = 1e-2
    alpha_max: float = 1e6
    alpha_per_decade: int = 64
    out_dir: str = "."
    prefix: str = ""
    local_j: int = 0
    warnings: list = field(default_factory=list)


def _raise(where: tuple[str, int], message: str):
    raise ConfigError(f"{where[0]}:{where[1]}: {message}")


def _parse_number(raw: str, where, kind=float):
    try:
        return kind(raw)
    except ValueError:
        _raise(where, f"expected a {kind.__name__}, got {raw!r}")


def _parse_bool(raw: str, where) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    _raise(where, f"expected a boolean, got {raw!r}")


def _parse_atoms(raw: str, where) -> DiscreteMeasure:
    locs, ws = [], []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.replace(":", " ").split()
        if len(parts) != 2:
            _raise(where, f"atom needs 'location weight' (or location:weight), got {chunk!r}")
        locs.append(_parse_number(parts[0], where))
        ws.append(_parse_number(parts[1], where))
    if not locs:
        _raise(where, "no atoms given")
    return DiscreteMeasure(locs, ws)


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    base_dir = Path(base_dir) if base_dir is not None else Path(".")
    section = None
    seen_measure_key = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        where = (source, lineno)
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                _raise(where, f"unknown section [{section}]")
            continue
        if section is None:
            _raise(where, "key outside of any [section]")
        if "=" not in line:
            _raise(where, f"expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _SCHEMA[section]:
            _raise(where, f"unknown key {key!r} in section [{section}]")
        if not value:
            _raise(where, f"empty value for {key!r}")

        if section == "run":
            if key == "kind":
                if value not in KINDS:
                    _raise(where, f"kind must be one of {', '.join(KINDS)}")
                cfg.kind = value
            else:
                cfg.seed = _parse_number(value, where, int)
                if cfg.seed < 0:
                    _raise(where, "seed must be >= 0")
        elif section == "measure":
            if key == "normalize":
                cfg.normalize = _parse_bool(value, where)
            else:
                if seen_measure_key and seen_measure_key != key:
                    _raise(where, "give either 'atoms' or 'file', not both")
                seen_measure_key = key
                if key == "atoms":
                    cfg.measure = _parse_atoms(value, where)
                else:
                    path = base_dir / value
                    if not path.exists():
                        _raise(where, f"measure file not found: {path}")
                    cfg.measure = DiscreteMeasure.from_text(path.read_text())
        elif section == "rho":
            cfg.rho = _parse_number(value, where)
            if cfg.rho < 1.0:
                _raise(where, "rho must be >= 1")
            if cfg.rho <= 2.0:
                cfg.warnings.append(
                    f"{source}:{lineno}: rho = {cfg.rho} <= 2; the weak-type "
                    "statements need rho > 2, proceeding anyway"
                )
        elif section == "grids":
            num = _parse_number(value, where, int if key.endswith("points") or key == "x_order" else float)
            if key in ("t_points", "t_large_points", "x_order", "local_x_points") and num < 2:
                _raise(where, f"{key} must be >= 2")
            if key in ("t_min", "t_large_min") and num <= 0:
                _raise(where, f"{key} must be > 0")
            setattr(cfg, key, num)
        elif section == "alpha":
            attr = {"min": "alpha_min", "max": "alpha_max", "per_decade": "alpha_per_decade"}[key]
            num = _parse_number(value, where, int if key == "per_decade" else float)
            setattr(cfg, attr, num)
            if key in ("min", "max") and num <= 0:
                _raise(where, f"alpha {key} must be > 0")
            if key == "per_decade" and num < 1:
                _raise(where, "per_decade must be >= 1")
        elif section == "outputs":
            setattr(cfg, "out_dir" if key == "dir" else "prefix", value)
        elif section == "local":
            cfg.local_j = _parse_number(value, where, int)
            if cfg.local_j < 0:
                _raise(where, "j must be >= 0 (negative side follows by reflection)")

    if cfg.t_min >= cfg.t_max:
        raise ConfigError(f"{source}: need t_min < t_max")
    if cfg.t_large_min >= cfg.t_large_max:
        raise ConfigError(f"{source}: need t_large_min < t_large_max")
    if cfg.alpha_min >= cfg.alpha_max:
        raise ConfigError(f"{source}: need alpha min < max")
    if cfg.kind != "paper-suite" and cfg.measure is None:
        raise ConfigError(f"{source}: section [measure] with atoms or file is required")
    if not cfg.prefix:
        cfg.prefix = cfg.kind
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), source=str(path), base_dir=path.parent)
