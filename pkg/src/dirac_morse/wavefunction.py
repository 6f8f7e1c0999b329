"""Spinor components on a radial grid: psi2 = F H, psi1 from the first-order coupling."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy.integrate import trapezoid

from .heun import DEFAULT_MARGIN, DEFAULT_MAX_TERMS, DEFAULT_TOL, ConfluentHeunParams, HeunDomainError
from .heun import heunc_with_derivatives
from .radial import (
    BranchConfig,
    PhysicalParams,
    QuantumState,
    centrifugal_approx,
    heun_params_from_physics,
    morse_potential,
)

__all__ = [
    "RadialGrid",
    "Psi2Profile",
    "SpinorProfile",
    "SingularDenominatorError",
    "ZeroNormError",
    "build_psi2",
    "build_psi1_from_psi2",
    "build_spinor",
    "first_order_residual",
    "normalize",
]


class SingularDenominatorError(ZeroDivisionError):
    """``-E + m + C_p`` vanishes: the coupling cannot be inverted."""


class ZeroNormError(ValueError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    r_min: float = 0.05
    r_max: float = 15.0
    points: int = 2000
    spacing: Literal["uniform", "log"] = "uniform"

    def __post_init__(self) -> None:
        if not 0 < self.r_min < self.r_max:
            raise ValueError(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")
        if self.points < 2:
            raise ValueError("points must be at least 2")
        if self.spacing not in ("uniform", "log"):
            raise ValueError(f"unknown spacing {self.spacing!r}")

    def nodes(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.r_min, self.r_max, self.points)
        return np.linspace(self.r_min, self.r_max, self.points)

    def refined(self) -> "RadialGrid":
        """Grid with every old node kept and one new node in each interval (uniform only)."""
        return replace(self, points=2 * self.points - 1)


@dataclass(frozen=True)
class Psi2Profile:
    r: np.ndarray
    psi2: np.ndarray
    dpsi2: np.ndarray
    d2psi2: np.ndarray
    params: ConfluentHeunParams


@dataclass(frozen=True)
class SpinorProfile:
    grid: RadialGrid
    r: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    dpsi1: np.ndarray
    dpsi2: np.ndarray
    state: QuantumState
    energy: float
    norm: float
    params: ConfluentHeunParams | None = None

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.psi1) ** 2 + np.abs(self.psi2) ** 2

    def scaled(self, factor: complex) -> "SpinorProfile":
        return replace(self, psi1=self.psi1 * factor, psi2=self.psi2 * factor,
                       dpsi1=self.dpsi1 * factor, dpsi2=self.dpsi2 * factor)


def _integer_power(base: np.ndarray, s: complex):
    """``base**s`` on the principal branch, exact for integer ``s``."""
    if s.imag == 0 and float(s.real).is_integer():
        return np.power(base.astype(complex), int(s.real))
    return np.exp(s * np.log(base.astype(complex)))


def build_psi2(p: PhysicalParams, q: QuantumState, E: float, cfg: BranchConfig | None = None,
               grid: RadialGrid | None = None, *, tol: float = DEFAULT_TOL,
               max_terms: int = DEFAULT_MAX_TERMS, margin: float = DEFAULT_MARGIN) -> Psi2Profile:
    """``psi2(r) = e^(a z/2) z^(b/2) (z-1)^((c+1)/2) H(z)`` at ``z = e^(-alpha r)``, with r-derivatives.

    Derivatives come from the analytic product rule and the term-wise
    differentiated series.
    """
    cfg = cfg or BranchConfig()
    grid = grid or RadialGrid()
    params = heun_params_from_physics(p, q, E, cfg)
    r = grid.nodes()
    z = np.exp(-p.alpha * r)
    if z.max() >= 1.0 - margin:
        raise HeunDomainError(
            f"r_min = {grid.r_min:g} fm maps to z = {z.max():.6g}, outside the disc |z| < 1 - {margin:g}"
        )
    H, dH, d2H = heunc_with_derivatives(params, z, tol=tol, max_terms=max_terms, margin=margin)
    a, b, c = params.a, params.b, params.c
    s = (c + 1) / 2
    zc = z.astype(complex)
    F = np.exp(a * zc / 2) * np.exp(b / 2 * np.log(zc)) * _integer_power(zc - 1, s)
    L = a / 2 + b / (2 * zc) + s / (zc - 1)
    dL = -b / (2 * zc**2) - s / (zc - 1) ** 2
    psi_z = F * (dH + L * H)
    psi_zz = F * (d2H + 2 * L * dH + (L**2 + dL) * H)
    psi = F * H
    dpsi = -p.alpha * z * psi_z
    d2psi = p.alpha**2 * (z**2 * psi_zz + z * psi_z)
    return Psi2Profile(r, psi, dpsi, d2psi, params)


def _denominator(p: PhysicalParams, E: float) -> float:
    D = -E + p.m_tilde + p.C_p
    if abs(D) < 1e-12:
        raise SingularDenominatorError(f"-E + m + C_p = {D:g} at E = {E!r}")
    return D


def build_psi1_from_psi2(p: PhysicalParams, q: QuantumState, E: float, prof: Psi2Profile):
    """``psi1 = (psi2' - k psi2 / r) / (-E + m + C_p)`` and its r-derivative."""
    D = _denominator(p, E)
    r, k = prof.r, q.k
    psi1 = (prof.dpsi2 - k * prof.psi2 / r) / D
    dpsi1 = (prof.d2psi2 - k * prof.dpsi2 / r + k * prof.psi2 / r**2) / D
    return psi1, dpsi1


def build_spinor(p: PhysicalParams, q: QuantumState, E: float, cfg: BranchConfig | None = None,
                 grid: RadialGrid | None = None, normalized: bool = True, **kw) -> SpinorProfile:
    grid = grid or RadialGrid()
    prof = build_psi2(p, q, E, cfg, grid, **kw)
    psi1, dpsi1 = build_psi1_from_psi2(p, q, E, prof)
    out = SpinorProfile(grid, prof.r, psi1, prof.psi2, dpsi1, prof.dpsi2, q, float(E), 1.0, prof.params)
    return normalize(out) if normalized else out


def first_order_residual(p: PhysicalParams, prof: SpinorProfile,
                         centrifugal: Literal["exact", "approximated"] = "exact"):
    """Residuals of both rows of the first-order system, divided by ``max(|psi1|, |psi2|)``.

    ``psi1_row``: ``psi1' + k psi1/r - (E + m - W) psi2``.
    ``psi2_row``: ``psi2' - k psi2/r - (-E + m + C_p) psi1`` (zero by construction).

    With ``centrifugal='approximated'`` the psi1 row is corrected by
    ``k(k-1) (1/r^2 - C(r)) psi2 / (-E + m + C_p)``, which removes the part
    of the residual due to replacing ``1/r^2`` with the exponential form.
    """
    r, k, E = prof.r, prof.state.k, prof.energy
    W = morse_potential(p, r)
    D = _denominator(p, E)
    row1 = prof.dpsi1 + k * prof.psi1 / r - (E + p.m_tilde - W) * prof.psi2
    row2 = prof.dpsi2 - k * prof.psi2 / r - D * prof.psi1
    if centrifugal == "approximated":
        row1 = row1 + k * (k - 1) * (1.0 / r**2 - centrifugal_approx(p, r)) * prof.psi2 / D
    elif centrifugal != "exact":
        raise ValueError(f"unknown centrifugal treatment {centrifugal!r}")
    scale = max(np.max(np.abs(prof.psi1)), np.max(np.abs(prof.psi2)))
    if scale == 0:
        return np.zeros_like(r), np.zeros_like(r)
    return np.abs(row1) / scale, np.abs(row2) / scale


def normalize(prof: SpinorProfile) -> SpinorProfile:
    """Scale so the trapezoidal integral of ``|psi1|^2 + |psi2|^2`` over the grid is 1."""
    n2 = trapezoid(prof.density, prof.r)
    if not np.isfinite(n2) or n2 <= 0:
        raise ZeroNormError(f"cannot normalize profile with integral {n2!r}")
    f = 1.0 / np.sqrt(n2)
    out = prof.scaled(f)
    return replace(out, norm=float(prof.norm * f))
