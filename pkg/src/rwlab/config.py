"""Flat key=value configuration files and typed access.

Grammar: one `key = value` pair per line, `#` starts a comment, blank lines
ignored. Keys are dotted lowercase words. Values stay strings until a typed
getter converts them; booleans accept true/false/yes/no/on/off/1/0.
Command-line overrides replace pairs after the file is read.
"""

from __future__ import annotations

import re

from .field import Grid, WeightProfile
from .geometry import (BALL, CONE, CYLINDER, HALFSPACE, Geometry, MediumPair)
from .operator import DIRICHLET, SOMMERFELD, SolveConfig
from .spectral import MINUS, PLUS, SpectralParam

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*(\.[a-z][a-z0-9_]*)*$")

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


class ConfigError(ValueError):
    pass


class Config:
    def __init__(self, pairs: "dict[str, str] | None" = None):
        self.pairs: "dict[str, str]" = dict(pairs or {})

    def __contains__(self, key: str) -> bool:
        return key in self.pairs

    def set(self, key: str, value: str) -> None:
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"bad key {key!r}")
        self.pairs[key] = value.strip()

    def get_str(self, key: str, default: "str | None" = None) -> str:
        if key in self.pairs:
            return self.pairs[key]
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default

    def get_float(self, key: str, default: "float | None" = None) -> float:
        if key not in self.pairs:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return default
        try:
            return float(self.pairs[key])
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: not a number: {self.pairs[key]!r}") from exc

    def get_int(self, key: str, default: "int | None" = None) -> int:
        if key not in self.pairs:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return default
        try:
            return int(self.pairs[key], 10)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: not an integer: {self.pairs[key]!r}") from exc

    def get_bool(self, key: str, default: "bool | None" = None) -> bool:
        if key not in self.pairs:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return default
        raw = self.pairs[key].lower()
        if raw in _TRUE:
            return True
        if raw in _FALSE:
            return False
        raise ConfigError(f"key {key!r}: not a boolean: {self.pairs[key]!r}")

    def get_floats(self, key: str, default: "list[float] | None" = None):
        if key not in self.pairs:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return list(default)
        raw = self.pairs[key].replace(",", " ").split()
        if not raw:
            raise ConfigError(f"key {key!r}: empty list")
        try:
            return [float(tok) for tok in raw]
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: bad list {self.pairs[key]!r}") from exc


def parse_config_text(text: str) -> Config:
    cfg = Config()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        try:
            cfg.set(key, value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return cfg


def load_config(path) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def apply_overrides(cfg: Config, overrides) -> None:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, _, value = item.partition("=")
        cfg.set(key, value)


_GEOMETRY_KINDS = {CYLINDER, CONE, HALFSPACE, BALL}


def build_geometry(cfg: Config) -> Geometry:
    kind = cfg.get_str("geometry.kind")
    if kind not in _GEOMETRY_KINDS:
        raise ConfigError(f"geometry.kind must be one of {sorted(_GEOMETRY_KINDS)}")
    dim = cfg.get_int("grid.dim")
    media = MediumPair(cfg.get_float("geometry.mu1"), cfg.get_float("geometry.mu2"))
    kwargs = {"invert": cfg.get_bool("geometry.invert", False)}
    if kind in (CYLINDER, BALL):
        kwargs["radius"] = cfg.get_float("geometry.radius")
    if kind in (CYLINDER, CONE):
        kwargs["axis"] = cfg.get_int("geometry.axis", dim)
    if kind == CONE:
        kwargs["half_angle"] = cfg.get_float("geometry.half_angle")
    if kind == HALFSPACE:
        kwargs["plane_index"] = cfg.get_int("geometry.plane_index", 1)
        kwargs["offset"] = cfg.get_float("geometry.offset", 0.0)
    return Geometry(kind, dim, media, **kwargs)


def build_grid(cfg: Config) -> Grid:
    return Grid(cfg.get_int("grid.dim"), cfg.get_float("grid.extent"),
                cfg.get_int("grid.nodes"))


def build_param(cfg: Config) -> SpectralParam:
    lam = cfg.get_float("spectral.lambda")
    eta = cfg.get_float("spectral.eta", 0.0)
    half = cfg.get_str("spectral.half_plane", "")
    if half and half not in (PLUS, MINUS):
        raise ConfigError("spectral.half_plane must be 'plus' or 'minus'")
    return SpectralParam(lam, eta, half)


def build_solve_config(cfg: Config) -> SolveConfig:
    closure = cfg.get_str("solver.closure", SOMMERFELD)
    if closure not in (SOMMERFELD, DIRICHLET):
        raise ConfigError("solver.closure must be 'sommerfeld' or 'dirichlet'")
    return SolveConfig(
        method=cfg.get_str("solver.method", "iterative"),
        tolerance=cfg.get_float("solver.tolerance", 1e-8),
        max_iterations=cfg.get_int("solver.max_iterations", 1000),
        closure=closure,
        damping=cfg.get_float("solver.damping", 0.5),
    )


def build_weight_profile(cfg: Config) -> WeightProfile:
    kind = cfg.get_str("weight.kind", "power_delta")
    if kind == "truncated":
        return WeightProfile.truncated(cfg.get_float("weight.r0"))
    if kind == "power_delta":
        return WeightProfile.power_delta(cfg.get_float("weight.delta", 1.0))
    if kind == "twod_alpha":
        return WeightProfile.twod_alpha(cfg.get_float("weight.r0"),
                                        cfg.get_float("weight.alpha"))
    if kind == "twod_delta":
        return WeightProfile.twod_delta(cfg.get_float("weight.delta", 1.0))
    raise ConfigError(f"unknown weight.kind {kind!r}")


def sorted_pairs(cfg: Config):
    return sorted(cfg.pairs.items())
