"""Run configuration: TOML-syntax ``.cfg`` files, environment overrides, validation."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import tomli

from .graphene import A0_ANGSTROM, UNIT_CONVENTIONS
from .radial import B2_VARIANTS, G_SIGNS, SQRT_CONVENTIONS, BranchConfig, PhysicalParams, QuantumState
from .wavefunction import RadialGrid

__all__ = [
    "ConfigError",
    "RunConfig",
    "BandsConfig",
    "ENV_PREFIX",
    "BRANCH_ALIASES",
    "load_config",
    "parse_config",
    "parse_states",
    "bundled_config_path",
    "bundled_configs",
]

ENV_PREFIX = "DIRAC_MORSE_"
BRANCH_ALIASES = {"printed": "as-printed", "magnitude": "magnitude", "signed": "signed-alternative"}


class ConfigError(ValueError):
    """Invalid configuration; ``location`` names the file position or key path."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


@dataclass(frozen=True)
class BandsConfig:
    a0: float = A0_ANGSTROM
    m_tilde: float | None = None  # falls back to the physics mass
    C_p: float | None = None
    unit_convention: str = "identity"
    w_eval: str | float = "lattice"
    resolution: tuple[int, int] = (64, 64)
    k_window: tuple[float, float, float, float] | None = None


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicalParams
    states: tuple[QuantumState, ...]
    branch: BranchConfig = field(default_factory=BranchConfig)
    references: Mapping[tuple[int, int], float] = field(default_factory=dict)
    wavefunction_states: tuple[QuantumState, ...] = ()
    grid: RadialGrid = field(default_factory=RadialGrid)
    bands: BandsConfig = field(default_factory=BandsConfig)
    out_dir: str = "out"
    verify_draws: int = 100
    verify_seed: int = 20240601
    source: str = "<defaults>"


_TOP_KEYS = {"D_e", "alpha", "r_e", "m", "C_p", "C_s", "states"}
_SECTIONS = {
    "branch": {"sqrt_convention", "g_sign", "b2_variant", "root_window", "tol", "scan_points",
               "flip_a", "flip_b", "flip_c"},
    "reference": {"energies"},
    "wavefunction": {"states", "r_min", "r_max", "points", "spacing"},
    "bands": {"a0", "m", "C_p", "unit_convention", "w_eval", "resolution", "k_window"},
    "output": {"dir"},
    "verify": {"draws", "seed"},
}
_REQUIRED = ("D_e", "alpha", "r_e", "m")


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", where)
    return float(v)


def _int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}", where)
    return v


def _bool(v, where: str) -> bool:
    if not isinstance(v, bool):
        raise ConfigError(f"expected true/false, got {v!r}", where)
    return v


def _str(v, where: str) -> str:
    if not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r}", where)
    return v


def parse_states(value: Any, where: str = "states") -> tuple[QuantumState, ...]:
    """``[[N, k], ...]`` or ``"N:k,N:k"``."""
    pairs: list[tuple[int, int]] = []
    if isinstance(value, str):
        text = value.strip()
        for i, item in enumerate(t for t in text.split(",") if t.strip()):
            try:
                n, k = item.split(":")
                pairs.append((int(n), int(k)))
            except ValueError:
                raise ConfigError(f"state {item.strip()!r} is not of the form N:k", f"{where}[{i}]") from None
    elif isinstance(value, list):
        for i, item in enumerate(value):
            if not (isinstance(item, list) and len(item) == 2):
                raise ConfigError(f"expected [N, k], got {item!r}", f"{where}[{i}]")
            pairs.append((_int(item[0], f"{where}[{i}]"), _int(item[1], f"{where}[{i}]")))
    else:
        raise ConfigError(f"expected a list of [N, k] or an 'N:k,...' string, got {value!r}", where)
    out = []
    for i, (n, k) in enumerate(pairs):
        try:
            out.append(QuantumState(n, k))
        except ValueError as exc:
            raise ConfigError(str(exc), f"{where}[{i}]") from None
    return tuple(out)


def _check_keys(table: Mapping, allowed: set[str], prefix: str) -> None:
    for key in table:
        if key not in allowed:
            loc = f"{prefix}.{key}" if prefix else key
            raise ConfigError(f"unknown key {key!r}; allowed: {', '.join(sorted(allowed))}", loc)


def _pair(v, where: str, conv=_num) -> tuple:
    if not (isinstance(v, list) and len(v) == 2):
        raise ConfigError(f"expected a two-element list, got {v!r}", where)
    return tuple(conv(x, where) for x in v)


def parse_config(data: Mapping[str, Any], source: str = "<mapping>") -> RunConfig:
    """Validate a decoded configuration table."""
    top = {k: v for k, v in data.items() if not isinstance(v, dict)}
    _check_keys(top, _TOP_KEYS, "")
    for key, v in data.items():
        if isinstance(v, dict):
            if key not in _SECTIONS:
                raise ConfigError(f"unknown section [{key}]; allowed: {', '.join(sorted(_SECTIONS))}", key)
            _check_keys(v, _SECTIONS[key], key)
    for key in _REQUIRED:
        if key not in data:
            raise ConfigError(f"missing required key {key!r}", key)
    try:
        physics = PhysicalParams(
            D_e=_num(data["D_e"], "D_e"),
            alpha=_num(data["alpha"], "alpha"),
            r_e=_num(data["r_e"], "r_e"),
            m_tilde=_num(data["m"], "m"),
            C_p=_num(data.get("C_p", 0.0), "C_p"),
            C_s=_num(data["C_s"], "C_s") if "C_s" in data else None,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "physics") from None
    states = parse_states(data.get("states", []), "states")

    b = data.get("branch", {})
    kw: dict[str, Any] = {}
    if "sqrt_convention" in b:
        v = _str(b["sqrt_convention"], "branch.sqrt_convention")
        v = BRANCH_ALIASES.get(v, v)
        if v not in SQRT_CONVENTIONS:
            raise ConfigError(f"must be one of {SQRT_CONVENTIONS}", "branch.sqrt_convention")
        kw["sqrt_convention"] = v
    if "g_sign" in b:
        v = _str(b["g_sign"], "branch.g_sign")
        if v not in G_SIGNS:
            raise ConfigError(f"must be one of {G_SIGNS}", "branch.g_sign")
        kw["g_sign"] = v
    if "b2_variant" in b:
        v = _str(b["b2_variant"], "branch.b2_variant")
        if v not in B2_VARIANTS:
            raise ConfigError(f"must be one of {B2_VARIANTS}", "branch.b2_variant")
        kw["b2_variant"] = v
    if "root_window" in b:
        kw["root_window"] = _pair(b["root_window"], "branch.root_window")
    if "tol" in b:
        kw["tol"] = _num(b["tol"], "branch.tol")
    if "scan_points" in b:
        kw["scan_points"] = _int(b["scan_points"], "branch.scan_points")
    for flag in ("flip_a", "flip_b", "flip_c"):
        if flag in b:
            kw[flag] = _bool(b[flag], f"branch.{flag}")
    try:
        branch = BranchConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc), "branch") from None

    refs: dict[tuple[int, int], float] = {}
    for i, row in enumerate(data.get("reference", {}).get("energies", [])):
        where = f"reference.energies[{i}]"
        if not (isinstance(row, list) and len(row) == 3):
            raise ConfigError(f"expected [N, k, E], got {row!r}", where)
        refs[(_int(row[0], where), _int(row[1], where))] = _num(row[2], where)

    w = data.get("wavefunction", {})
    wf_states = parse_states(w["states"], "wavefunction.states") if "states" in w else ()
    try:
        grid = RadialGrid(
            r_min=_num(w.get("r_min", 0.05), "wavefunction.r_min"),
            r_max=_num(w.get("r_max", 15.0), "wavefunction.r_max"),
            points=_int(w.get("points", 2000), "wavefunction.points"),
            spacing=_str(w.get("spacing", "uniform"), "wavefunction.spacing"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "wavefunction") from None

    bd = data.get("bands", {})
    units = _str(bd.get("unit_convention", "identity"), "bands.unit_convention")
    if units not in UNIT_CONVENTIONS:
        raise ConfigError(f"must be one of {sorted(UNIT_CONVENTIONS)}", "bands.unit_convention")
    w_eval = bd.get("w_eval", "lattice")
    if isinstance(w_eval, bool) or not isinstance(w_eval, (str, int, float)):
        raise ConfigError(f"expected a preset name or a number, got {w_eval!r}", "bands.w_eval")
    kwin = bd.get("k_window")
    if kwin is not None:
        if not (isinstance(kwin, list) and len(kwin) == 4):
            raise ConfigError("expected [kx_min, kx_max, ky_min, ky_max]", "bands.k_window")
        kwin = tuple(_num(x, "bands.k_window") for x in kwin)
    res = _pair(bd.get("resolution", [64, 64]), "bands.resolution", _int)
    if min(res) < 2:
        raise ConfigError("resolution must be at least 2 per axis", "bands.resolution")
    a0 = _num(bd.get("a0", A0_ANGSTROM), "bands.a0")
    if a0 <= 0:
        raise ConfigError("a0 must be positive", "bands.a0")
    bands = BandsConfig(
        a0=a0,
        m_tilde=_num(bd["m"], "bands.m") if "m" in bd else None,
        C_p=_num(bd["C_p"], "bands.C_p") if "C_p" in bd else None,
        unit_convention=units,
        w_eval=w_eval,
        resolution=res,
        k_window=kwin,
    )
    out_dir = _str(data.get("output", {}).get("dir", "out"), "output.dir")
    vf = data.get("verify", {})
    draws = _int(vf.get("draws", 100), "verify.draws")
    seed = _int(vf.get("seed", 20240601), "verify.seed")
    return RunConfig(physics, states, branch, refs, wf_states, grid, bands, out_dir, draws, seed, source)


def bundled_configs() -> list[str]:
    root = resources.files("dirac_morse") / "data"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def bundled_config_path(name: str) -> Path:
    if not name.endswith(".cfg"):
        name += ".cfg"
    p = resources.files("dirac_morse") / "data" / name
    if not p.is_file():
        raise ConfigError(f"no bundled config named {name!r}; available: {', '.join(bundled_configs())}")
    return Path(str(p))


def _resolve_path(path: str | os.PathLike) -> Path:
    p = Path(path)
    if p.is_file():
        return p
    if p.parent == Path(".") and not p.exists():
        return bundled_config_path(p.name)
    raise ConfigError(f"config file not found: {path}")


def load_config(path: str | os.PathLike) -> RunConfig:
    """Read a ``.cfg`` file (TOML syntax) or a bundled config by name."""
    p = _resolve_path(path)
    text = p.read_text(encoding="utf-8")
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        msg = getattr(exc, "msg", str(exc))
        raise ConfigError(f"syntax error: {msg}", f"{p}:line {exc.lineno}, column {exc.colno}") from None
    return parse_config(data, source=p.name)


def apply_overrides(cfg: RunConfig, *, out: str | None = None, branch: str | None = None,
                    units: str | None = None, w_eval: str | None = None,
                    states: str | None = None) -> RunConfig:
    """Apply CLI-level overrides; ``None`` leaves the config value in place."""
    if out is not None:
        cfg = replace(cfg, out_dir=out)
    if branch is not None:
        if branch not in BRANCH_ALIASES:
            raise ConfigError(f"unknown branch {branch!r}; use one of {sorted(BRANCH_ALIASES)}", "--branch")
        cfg = replace(cfg, branch=replace(cfg.branch, sqrt_convention=BRANCH_ALIASES[branch]))
    if units is not None:
        if units not in UNIT_CONVENTIONS:
            raise ConfigError(f"unknown unit convention {units!r}", "--units")
        cfg = replace(cfg, bands=replace(cfg.bands, unit_convention=units))
    if w_eval is not None:
        cfg = replace(cfg, bands=replace(cfg.bands, w_eval=w_eval))
    if states is not None:
        parsed = parse_states(states, "--states")
        cfg = replace(cfg, states=parsed, wavefunction_states=parsed)
    return cfg


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    """``DIRAC_MORSE_{CONFIG,OUT,BRANCH,UNITS,W_EVAL,STATES}`` as option names."""
    environ = os.environ if environ is None else environ
    out = {}
    for name in ("config", "out", "branch", "units", "w_eval", "states"):
        v = environ.get(ENV_PREFIX + name.upper())
        if v:
            out[name] = v
    return out
