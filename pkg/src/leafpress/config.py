"""Flat `key = value` experiment configs.

Values are Python-style literals (numbers, strings, lists) or inline tables
`{ a = 1, b = "x" }`.  Lines starting with `#` are comments.  Relative paths are
resolved against the config file's directory.
"""
from __future__ import annotations

import ast
import itertools
import os
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_INLINE_KEY = re.compile(r"([{,]\s*)([A-Za-z_][A-Za-z0-9_]*)\s*=")
SWEEP_PREFIX = "sweep_"


def parse_value(text: str):
    text = text.strip()
    if text.startswith("{"):
        text = _INLINE_KEY.sub(lambda m: f'{m.group(1)}"{m.group(2)}":', text)
    if text in ("true", "false"):
        return text == "true"
    return ast.literal_eval(text)


def parse_text(text: str) -> dict:
    """Parse config text into a dict; errors carry 1-based line numbers."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`")
        key, value = (s.strip() for s in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            out[key] = parse_value(value)
        except (ValueError, SyntaxError):
            raise ConfigError(f"line {lineno}: cannot parse value {value!r}") from None
    return out


def parse_n_window(v) -> list[int]:
    if isinstance(v, str):
        m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", v)
        if not m:
            raise ConfigError(f"n_window {v!r} is not `a..b`")
        a, b = int(m.group(1)), int(m.group(2))
        return list(range(a, b + 1))
    return [int(n) for n in v]


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    matrix: tuple = ((2, 1), (1, 1))
    model_path: str | None = None
    potential: dict = field(default_factory=lambda: {"flavor": "zero"})
    base: tuple = ()  # empty: drawn from the seed
    delta: float = 0.25
    K: int = 131072
    scheme: str = "uniform-grid"
    seed: int = 0
    n_window: tuple = (4, 5, 6, 7, 8, 9)
    eps_ladder: tuple = (0.125, 0.1, 0.0833)
    gamma_ladder: tuple = (0.05,)
    partition_side: float = 0.25
    pressure_kind: str = "spanning"
    strategy: str = "greedy"
    bowen_tol: float = 1e-3
    lyapunov_n: int = 64
    lyapunov_samples: int = 64
    sampler: str = "lebesgue"
    tolerance: float = 0.10
    insensitivity_tolerance: float = 0.05
    base_points: tuple = ()  # empty: three points drawn from the seed
    output_dir: str = "."
    sweep: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        d = asdict(self)
        d["matrix"] = [list(r) for r in self.matrix]
        return d


_TUPLE_FIELDS = {"base", "n_window", "eps_ladder", "gamma_ladder"}


def from_dict(raw: dict, root: Path | None = None) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    kw, sweep = {}, {}
    for key, value in raw.items():
        if key.startswith(SWEEP_PREFIX):
            target = key[len(SWEEP_PREFIX) :]
            if target not in known or not isinstance(value, list):
                raise ConfigError(f"bad sweep key {key!r}")
            sweep[target] = value
            continue
        if key == "model":
            key = "model_path"
        if key not in known:
            raise ConfigError(f"unknown key {key!r}")
        kw[key] = value
    try:
        if "model_path" in kw and kw["model_path"] is not None:
            path = Path(kw["model_path"])
            if root is not None and not path.is_absolute():
                path = root / path
            kw["model_path"] = str(path.resolve())
            if "matrix" not in kw:
                from .dynamics import read_model_matrix

                kw["matrix"] = read_model_matrix(path.read_text())
        if "matrix" in kw:
            kw["matrix"] = tuple(tuple(int(v) for v in row) for row in kw["matrix"])
        if "n_window" in kw:
            kw["n_window"] = tuple(parse_n_window(kw["n_window"]))
        for key in _TUPLE_FIELDS - {"n_window"}:
            if key in kw:
                kw[key] = tuple(float(v) for v in kw[key])
        if "base_points" in kw:
            kw["base_points"] = tuple(tuple(float(v) for v in p) for p in kw["base_points"])
        if "potential" in kw and not isinstance(kw["potential"], dict):
            raise ConfigError("potential must be an inline table")
        for key in ("K", "seed", "lyapunov_n", "lyapunov_samples"):
            if key in kw:
                kw[key] = int(kw[key])
        for key in ("delta", "partition_side", "bowen_tol", "tolerance", "insensitivity_tolerance"):
            if key in kw:
                kw[key] = float(kw[key])
    except OSError as e:
        raise ConfigError(f"cannot read model file: {e}") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None
    if root is not None and "output_dir" in kw and not Path(kw["output_dir"]).is_absolute():
        kw["output_dir"] = str((root / kw["output_dir"]).resolve())
    cfg = ExperimentConfig(**kw, sweep=sweep)
    env_seed = os.environ.get("LEAFPRESS_SEED")
    if env_seed is not None:
        try:
            cfg = replace(cfg, seed=int(env_seed))
        except ValueError:
            raise ConfigError(f"LEAFPRESS_SEED={env_seed!r} is not an integer") from None
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return from_dict(parse_text(text), path.parent)


def expand_sweep(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    """Cartesian product over the sweep keys; names get a running suffix."""
    if not cfg.sweep:
        return [cfg]
    keys = sorted(cfg.sweep)
    out = []
    for i, combo in enumerate(itertools.product(*(cfg.sweep[k] for k in keys))):
        raw = {k: v for k, v in zip(keys, combo)}
        for k in _TUPLE_FIELDS:
            if k in raw:
                raw[k] = tuple(parse_n_window(raw[k])) if k == "n_window" else tuple(float(v) for v in raw[k])
        out.append(replace(cfg, name=f"{cfg.name}_{i:03d}", sweep={}, **raw))
    return out
