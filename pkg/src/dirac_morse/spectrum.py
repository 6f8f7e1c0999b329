"""Bound-state energies from the first polynomial condition, and the reference table."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .heun import first_termination_residual, termination_determinant
from .radial import (
    B2_VARIANTS,
    SQRT_CONVENTIONS,
    BranchConfig,
    PhysicalParams,
    QuantumState,
    TABLE1_PARAMS,
    heun_params_from_physics,
    is_resonance,
)

__all__ = [
    "BranchConfig",
    "SpectrumResult",
    "SpectrumTable",
    "NoRootFoundError",
    "TABLE1_ENERGIES",
    "TABLE1_PARAMS",
    "table1_states",
    "g_factor",
    "energy_residual",
    "solve_state",
    "spectrum_table",
    "residual_matrix",
]

# (N, k) -> published energy in fm^-1, as printed
TABLE1_ENERGIES: dict[tuple[int, int], float] = {
    (1, -4): -9.264477593,
    (1, -3): -9.421012900,
    (1, -2): -9.57951865,
    (1, -1): -9.727001781,
    (1, 2): -9.727001781,
    (1, 3): -9.579518653,
    (1, 4): -9.421012900,
    (1, 5): -9.264477593,
    (2, -4): -9.091901523,
    (2, -3): -9.237705059,
    (2, -2): -9.399442093,
    (2, -1): -9.564374480,
    (2, 2): -9.564374480,
    (2, 3): -9.399442093,
    (2, 4): -9.237705059,
    (2, 5): -9.091901523,
}


def table1_states() -> list[QuantumState]:
    return [QuantumState(N, k) for (N, k) in sorted(TABLE1_ENERGIES)]


class NoRootFoundError(RuntimeError):
    def __init__(self, result: "SpectrumResult"):
        d = result.diagnostics
        super().__init__(
            f"no root for N={result.state.N}, k={result.state.k}: "
            f"min |residual| = {d.get('min_abs_residual')} at E = {d.get('argmin_energy')}"
        )
        self.result = result


def g_factor(q: QuantumState, cfg: BranchConfig) -> float:
    """``N + k + 1/2`` on the upper branch, ``N - k + 3/2`` on the lower one."""
    return q.N + q.k + 0.5 if cfg.upper(q.k) else q.N - q.k + 1.5


def _sqrt(x, convention: str):
    x = np.asarray(x, dtype=complex)
    if convention == "as-printed":
        return np.sqrt(x)
    mag = np.sqrt(np.abs(x))
    if convention == "magnitude":
        return mag
    if convention == "signed-alternative":
        return -mag
    raise ValueError(f"unknown sqrt convention {convention!r}")


def energy_residual(p: PhysicalParams, q: QuantumState, E_tilde, cfg: BranchConfig | None = None):
    """Residual of the energy equation obtained from the first polynomial condition.

    ``2 alpha g S + alpha^2 g^2 - alpha^2 k(k-1)/12 + s (E + m)(E - m - C_p)``
    with ``S`` the configured square root of ``D_e (E - m - C_p)`` and
    ``s = +1`` for the derived ``b^2`` (the printed energy equation) or ``-1``
    for the printed ``b^2``.
    """
    cfg = cfg or BranchConfig()
    g = g_factor(q, cfg)
    E = np.asarray(E_tilde, dtype=complex)
    eps1 = E - p.m_tilde - p.C_p
    S = _sqrt(p.D_e * eps1, cfg.sqrt_convention)
    sign = 1.0 if cfg.b2_variant == "derived" else -1.0
    a = p.alpha
    res = 2 * a * g * S + a**2 * g**2 - a**2 * q.k * (q.k - 1) / 12.0 + sign * (E + p.m_tilde) * eps1
    return complex(res) if res.ndim == 0 else res


@dataclass
class SpectrumResult:
    """Outcome of one ``(N, k)`` solve; ``energy`` is ``None`` when nothing was found."""

    state: QuantumState
    energy: float | None
    roots: tuple[float, ...]
    residual_at_root: float | None
    determinant_diag: float | None  # log10 |Delta_{N+1}(mu)| at the root
    termination_residual: float | None  # |mu + nu + N a| at the root
    branch: BranchConfig
    table1_reference: float | None = None
    deviation: float | None = None
    resonance: bool | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.energy is not None

    @property
    def ambiguous(self) -> bool:
        return len(self.roots) > 1

    def require(self) -> float:
        if self.energy is None:
            raise NoRootFoundError(self)
        return self.energy

    def to_dict(self) -> dict:
        return {
            "N": self.state.N,
            "k": self.state.k,
            "label": self.state.label,
            "energy": self.energy,
            "roots": list(self.roots),
            "ambiguous": self.ambiguous,
            "residual_at_root": self.residual_at_root,
            "log10_abs_determinant": self.determinant_diag,
            "termination_residual": self.termination_residual,
            "resonance": self.resonance,
            "reference": self.table1_reference,
            "deviation": self.deviation,
            "diagnostics": self.diagnostics,
        }


def _refine_sign_change(f, lo, hi):
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def _refine_minimum(f_abs, lo, hi):
    res = minimize_scalar(f_abs, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14, "maxiter": 500})
    return float(res.x)


def _candidates(p, q, cfg, E_grid):
    """Scan for roots: sign changes where the residual is real, |residual| minima elsewhere."""
    res = energy_residual(p, q, E_grid, cfg)
    absres = np.abs(res)
    real = np.abs(res.imag) <= 1e-12 * (1.0 + absres)
    found = []
    f_real = lambda E: energy_residual(p, q, E, cfg).real  # noqa: E731
    f_abs = lambda E: abs(energy_residual(p, q, E, cfg))  # noqa: E731
    for i in range(len(E_grid) - 1):
        if real[i] and real[i + 1]:
            r0, r1 = res[i].real, res[i + 1].real
            if r0 == 0.0:
                found.append(float(E_grid[i]))
            elif r0 * r1 < 0:
                found.append(_refine_sign_change(f_real, E_grid[i], E_grid[i + 1]))
    for i in range(1, len(E_grid) - 1):
        if real[i]:
            continue
        if absres[i] <= absres[i - 1] and absres[i] < absres[i + 1]:
            E = _refine_minimum(f_abs, E_grid[i - 1], E_grid[i + 1])
            found.append(E)
    if len(E_grid) and res[-1].real == 0.0 and real[-1]:
        found.append(float(E_grid[-1]))
    return found, res


def solve_state(p: PhysicalParams, q: QuantumState, cfg: BranchConfig | None = None,
                reference: float | None = None) -> SpectrumResult:
    """Find every root of the energy equation inside the configured window."""
    cfg = cfg or BranchConfig()
    lo, hi = cfg.window(p)
    E_grid = np.linspace(lo, hi, cfg.scan_points)
    cands, res = _candidates(p, q, cfg, E_grid)
    roots = []
    for E in sorted(cands):
        r = abs(energy_residual(p, q, E, cfg))
        if r <= cfg.tol and all(abs(E - x) > 1e-9 for x in roots):
            roots.append(float(E))
    imin = int(np.argmin(np.abs(res)))
    diagnostics = {
        "window": [lo, hi],
        "scan_points": cfg.scan_points,
        "min_abs_residual": float(np.abs(res[imin])),
        "argmin_energy": float(E_grid[imin]),
        "candidates": len(cands),
    }
    if not roots:
        diagnostics["message"] = "no root of the energy equation inside the window"
        return SpectrumResult(q, None, (), None, None, None, cfg, reference, None, None, diagnostics)
    if len(roots) > 1:
        diagnostics["message"] = f"{len(roots)} roots in window; reporting the lowest"
    E = roots[0]
    params = heun_params_from_physics(p, q, E, cfg)
    det = termination_determinant(params, q.N)
    return SpectrumResult(
        state=q,
        energy=E,
        roots=tuple(roots),
        residual_at_root=abs(energy_residual(p, q, E, cfg)),
        determinant_diag=det.log10_abs,
        termination_residual=abs(first_termination_residual(params, q.N)),
        branch=cfg,
        table1_reference=reference,
        deviation=None if reference is None else E - reference,
        resonance=is_resonance(params),
        diagnostics=diagnostics,
    )


@dataclass
class SpectrumTable:
    results: list[SpectrumResult]

    @property
    def all_solved(self) -> bool:
        return all(r.ok for r in self.results)

    def plot_data(self) -> dict[int, list[tuple[int, float | None]]]:
        """Energy against k for each N, the layout of the energy-versus-k figure."""
        out: dict[int, list[tuple[int, float | None]]] = {}
        for r in self.results:
            out.setdefault(r.state.N, []).append((r.state.k, r.energy))
        return out

    def report(self) -> dict:
        rows = [r.to_dict() for r in self.results]
        have_ref = any(r.table1_reference is not None for r in self.results)
        out = {"rows": rows, "solved": sum(r.ok for r in self.results), "total": len(rows)}
        if have_ref:
            devs = [abs(r.deviation) for r in self.results if r.deviation is not None]
            out["max_abs_deviation"] = max(devs) if devs else None
        return out


def spectrum_table(p: PhysicalParams, states: Iterable[QuantumState], cfg: BranchConfig | None = None,
                   references: dict[tuple[int, int], float] | None = None) -> SpectrumTable:
    """Solve a batch of states; order is by ``(N, k)`` whatever the input order."""
    cfg = cfg or BranchConfig()
    references = references or {}
    results = []
    for q in sorted(states, key=lambda s: (s.N, s.k)):
        results.append(solve_state(p, q, cfg, references.get((q.N, q.k))))
    return SpectrumTable(results)


def residual_matrix(p: PhysicalParams = TABLE1_PARAMS,
                    energies: dict[tuple[int, int], float] = TABLE1_ENERGIES,
                    base: BranchConfig | None = None) -> list[dict]:
    """Energy-equation residuals at fixed energies under every sqrt convention and b^2 variant."""
    base = base or BranchConfig()
    rows = []
    for (N, k), E in sorted(energies.items()):
        q = QuantumState(N, k)
        eps1 = E - p.m_tilde - p.C_p
        entry = {
            "N": N, "k": k, "energy": E, "eps1": eps1,
            "sqrt_argument": p.D_e * eps1,
            "sqrt_argument_negative": p.D_e * eps1 < 0,
            "residuals": {},
        }
        for conv in SQRT_CONVENTIONS:
            for var in B2_VARIANTS:
                cfg = replace(base, sqrt_convention=conv, b2_variant=var)
                r = energy_residual(p, q, E, cfg)
                entry["residuals"][f"{conv}/{var}"] = {"re": r.real, "im": r.imag, "abs": abs(r)}
        rows.append(entry)
    return rows


def _finite(x) -> bool:
    return x is not None and math.isfinite(x)
