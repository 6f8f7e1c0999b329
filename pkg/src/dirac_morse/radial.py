"""Physical parameters, quantum numbers, the Morse potential and the map to Heun parameters.

Units follow the scaled convention ``E~ = E / (v_F hbar)``: energies, masses and
potentials are in fm^-1, lengths in fm.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .heun import ConfluentHeunParams

__all__ = [
    "PhysicalParams",
    "QuantumState",
    "SymmetryMode",
    "BranchConfig",
    "GridTooCoarseError",
    "TABLE1_PARAMS",
    "morse_potential",
    "centrifugal_approx",
    "heun_params_from_physics",
    "is_resonance",
    "second_order_residual",
    "spectroscopic_label",
    "orbital_letter",
    "z_of_r",
]

SqrtConvention = Literal["as-printed", "magnitude", "signed-alternative"]
GSign = Literal["from-k", "forced-upper", "forced-lower"]
B2Variant = Literal["printed", "derived"]

SQRT_CONVENTIONS = ("as-printed", "magnitude", "signed-alternative")
G_SIGNS = ("from-k", "forced-upper", "forced-lower")
B2_VARIANTS = ("printed", "derived")


class GridTooCoarseError(ValueError):
    """Finite-difference derivatives were supplied with too large a step."""


@dataclass(frozen=True)
class PhysicalParams:
    """Morse and Dirac constants.

    ``m_tilde`` is the scaled mass ``m c^2 / (v_F hbar)``; ``C_p`` the constant
    sum ``U = V + S`` fixed by pseudospin symmetry.  ``C_s`` is only carried for
    classification.
    """

    D_e: float
    alpha: float
    r_e: float
    m_tilde: float
    C_p: float = 0.0
    C_s: float | None = None
    z_e: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.D_e > 0:
            raise ValueError(f"D_e must be positive, got {self.D_e}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.r_e > 0:
            raise ValueError(f"r_e must be positive, got {self.r_e}")
        object.__setattr__(self, "z_e", math.exp(self.alpha * self.r_e))


TABLE1_PARAMS = PhysicalParams(D_e=5.0, alpha=0.988879, r_e=2.40873, m_tilde=10.0, C_p=0.0)


@dataclass(frozen=True)
class SymmetryMode:
    mode: Literal["pseudospin", "spin"] = "pseudospin"
    constant: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("pseudospin", "spin"):
            raise ValueError(f"unknown symmetry mode {self.mode!r}")


@dataclass(frozen=True)
class QuantumState:
    """Radial label ``N`` and spin-orbit number ``k`` with derived labels.

    ``mode='pseudospin'`` (the solved regime) rejects ``k = 1``; spin mode
    rejects ``k = -1``.
    """

    N: int
    k: int
    mode: Literal["pseudospin", "spin"] = "pseudospin"

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"N must be a nonnegative integer, got {self.N}")
        if int(self.k) != self.k or self.k == 0:
            raise ValueError(f"k must be a nonzero integer, got {self.k}")
        if self.mode == "pseudospin" and self.k == 1:
            raise ValueError("k = +1 is not in the pseudospin list k = -1, +-2, +-3, ...")
        if self.mode == "spin" and self.k == -1:
            raise ValueError("k = -1 is not in the spin list k = +1, +-2, +-3, ...")

    @property
    def alignment(self) -> str:
        return "aligned" if self.k < 0 else "unaligned"

    @property
    def l(self) -> int:
        # from k(k+1) = l(l+1)
        return self.k if self.k > 0 else -(self.k + 1)

    @property
    def l_pseudo(self) -> int:
        return -self.k if self.k < 0 else self.k - 1

    @property
    def j_pseudo_times2(self) -> int:
        lt = self.l_pseudo
        return 2 * lt - 1 if self.k < 0 else 2 * lt + 1

    @property
    def j_pseudo(self) -> float:
        return self.j_pseudo_times2 / 2

    @property
    def label(self) -> str:
        return spectroscopic_label(self)


@dataclass(frozen=True)
class BranchConfig:
    """Every choice left open when turning the closed-form results into numbers.

    ``sqrt_convention``: how ``sqrt(D_e (E - m - C_p))`` in the energy equation is
    taken (principal complex root, ``sqrt|x|``, or ``-sqrt|x|``).
    ``g_sign``: which of the two ``N +- k + 1 -+ 1/2`` factors is used; the
    ``c`` root follows it so the two stay consistent.
    ``b2_variant``: ``printed`` uses ``+4 eps`` in ``b^2``, ``derived`` the ``-4 eps``
    that the indicial analysis gives and the energy equation assumes.
    ``flip_a``/``flip_b``/``flip_c`` negate the principal roots.
    """

    sqrt_convention: SqrtConvention = "as-printed"
    g_sign: GSign = "from-k"
    b2_variant: B2Variant = "derived"
    root_window: tuple[float, float] | None = None
    tol: float = 1e-9
    scan_points: int = 10_000
    flip_a: bool = False
    flip_b: bool = False
    flip_c: bool = False

    def __post_init__(self) -> None:
        if self.sqrt_convention not in SQRT_CONVENTIONS:
            raise ValueError(f"unknown sqrt_convention {self.sqrt_convention!r}")
        if self.g_sign not in G_SIGNS:
            raise ValueError(f"unknown g_sign {self.g_sign!r}")
        if self.b2_variant not in B2_VARIANTS:
            raise ValueError(f"unknown b2_variant {self.b2_variant!r}")
        if self.root_window is not None:
            lo, hi = self.root_window
            if not lo < hi:
                raise ValueError(f"root_window must satisfy E_min < E_max, got {self.root_window}")
            object.__setattr__(self, "root_window", (float(lo), float(hi)))
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.scan_points < 3:
            raise ValueError("scan_points must be at least 3")

    def window(self, p: PhysicalParams) -> tuple[float, float]:
        if self.root_window is not None:
            return self.root_window
        return (-p.m_tilde + 1e-3, p.m_tilde - 1e-3)

    def upper(self, k: int) -> bool:
        """True when the ``N + k + 1/2`` branch applies."""
        if self.g_sign == "forced-upper":
            return True
        if self.g_sign == "forced-lower":
            return False
        return k > 0

    def to_dict(self) -> dict:
        return {
            "sqrt_convention": self.sqrt_convention,
            "g_sign": self.g_sign,
            "b2_variant": self.b2_variant,
            "root_window": list(self.root_window) if self.root_window else None,
            "tol": self.tol,
            "scan_points": self.scan_points,
            "flip_a": self.flip_a,
            "flip_b": self.flip_b,
            "flip_c": self.flip_c,
        }


def z_of_r(p: PhysicalParams, r):
    return np.exp(-p.alpha * np.asarray(r, dtype=float))


def morse_potential(p: PhysicalParams, r):
    """``D_e (1 - exp(-alpha (r - r_e)))**2``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    out = p.D_e * (-np.expm1(-p.alpha * (r - p.r_e))) ** 2
    return float(out) if out.ndim == 0 else out


def centrifugal_approx(p: PhysicalParams | float, r):
    """Exponential stand-in for ``1/r**2``: ``alpha^2 e^-ar/(1-e^-ar)^2 + alpha^2/12``."""
    alpha = p.alpha if isinstance(p, PhysicalParams) else float(p)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    # e^-x / (1 - e^-x)^2 == 1 / (4 sinh^2(x/2)); the sinh form keeps small x accurate
    out = alpha**2 / (4.0 * np.sinh(0.5 * alpha * r) ** 2) + alpha**2 / 12.0
    return float(out) if out.ndim == 0 else out


def _c_root(q: QuantumState, branch: BranchConfig) -> int:
    c = 2 * q.k - 1 if branch.upper(q.k) else 1 - 2 * q.k
    return -c if branch.flip_c else c


def heun_params_from_physics(p: PhysicalParams, q: QuantumState, E_tilde,
                             branch: BranchConfig | None = None) -> ConfluentHeunParams:
    """Match the transformed radial equation onto the confluent Heun form.

    ``a^2`` and ``b^2`` are taken from the matching conditions and rooted on the
    principal branch (then flipped on request); ``c`` is the root of
    ``(2k-1)^2`` selected by the ``g_sign`` branch, which by default makes
    ``(c+1)/2 = max(k, 1-k)`` so the prefactor vanishes at ``r = 0``.
    """
    branch = branch or BranchConfig()
    if q.mode != "pseudospin":
        raise ValueError("only the pseudospin regime is solved")
    E = complex(E_tilde)
    if not cmath.isfinite(E):
        raise ValueError("E_tilde must be finite")
    eps1 = E - p.m_tilde - p.C_p
    eps = eps1 * (E + p.m_tilde)
    kk = q.k * (q.k - 1)
    a2 = 4.0 * eps1 * p.D_e * p.z_e**2 / p.alpha**2
    sign = -4.0 if branch.b2_variant == "derived" else 4.0
    b2 = (4.0 * p.D_e * eps1 + sign * eps) / p.alpha**2 + kk / 3.0
    a = cmath.sqrt(a2)
    b = cmath.sqrt(b2)
    if branch.flip_a:
        a = -a
    if branch.flip_b:
        b = -b
    c = _c_root(q, branch)
    delta = a2 / (2.0 * p.z_e)
    eta = kk - a2 / (2.0 * p.z_e) + 0.5
    return ConfluentHeunParams(a, b, c, delta, eta)


def is_resonance(params: ConfluentHeunParams, rel: float = 1e-12) -> bool:
    """True when ``b`` is (numerically) purely imaginary: no decay as r grows."""
    return abs(params.b.real) <= rel * max(abs(params.b), 1.0)


def second_order_residual(p: PhysicalParams, q: QuantumState, E_tilde, r, psi2, d2psi2,
                          centrifugal: Literal["approximated", "exact"] = "approximated",
                          fd_step: float | None = None):
    """Pointwise ``psi2'' - k(k-1) C(r) psi2 - eps1 W psi2 + eps psi2``.

    ``C(r)`` is ``1/r^2`` for ``centrifugal='exact'`` or the exponential
    approximation otherwise.  ``fd_step`` declares that ``d2psi2`` came from
    finite differences with that step; steps above 1e-4 fm are refused.
    """
    if fd_step is not None and fd_step > 1e-4:
        raise GridTooCoarseError(f"finite-difference step {fd_step:g} fm exceeds 1e-4 fm")
    r = np.asarray(r, dtype=float)
    psi2 = np.asarray(psi2)
    d2psi2 = np.asarray(d2psi2)
    eps1 = E_tilde - p.m_tilde - p.C_p
    eps = eps1 * (E_tilde + p.m_tilde)
    if centrifugal == "exact":
        cent = 1.0 / r**2
    elif centrifugal == "approximated":
        cent = centrifugal_approx(p, r)
    else:
        raise ValueError(f"unknown centrifugal treatment {centrifugal!r}")
    W = morse_potential(p, r)
    return d2psi2 - q.k * (q.k - 1) * cent * psi2 - eps1 * W * psi2 + eps * psi2


_LETTERS = "spdfghiklmnoqrtuvwxyz"


def orbital_letter(l: int) -> str:
    """Spectroscopic letter for orbital angular momentum ``l`` (j is skipped after i)."""
    if l < 0:
        raise ValueError("l must be nonnegative")
    if l >= len(_LETTERS):
        raise ValueError(f"no spectroscopic letter for l = {l}")
    return _LETTERS[l]


def spectroscopic_label(q: QuantumState, N: int | None = None) -> str:
    """Label such as ``1f_{7/2}``: prefix N (k < 0) or N-1 (k > 0), letter from l."""
    if q.mode != "pseudospin":
        raise ValueError("labels are defined for the pseudospin classification")
    N = q.N if N is None else N
    prefix = N if q.k < 0 else N - 1
    return f"{prefix}{orbital_letter(q.l)}_{{{q.j_pseudo_times2}/2}}"
