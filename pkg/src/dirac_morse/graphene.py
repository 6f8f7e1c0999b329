"""Honeycomb lattice geometry and the massive dispersion with a Morse term."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .radial import PhysicalParams, morse_potential

__all__ = [
    "A0_ANGSTROM",
    "GAP_REFERENCE",
    "UNIT_CONVENTIONS",
    "LatticeGeometry",
    "BandParams",
    "BandGrid",
    "lattice_geometry",
    "dirac_magnitude",
    "unit_factor",
    "resolve_w_eval",
    "dispersion_roots",
    "band_surface",
    "dirac_point_gap",
]

A0_ANGSTROM = 1.42
# published (E+, E-, gap) in fm^-1
GAP_REFERENCE = (11.47442062, 7.695552073, 3.778868546)

UNIT_CONVENTIONS = {
    # numeric value in A^-1 reused as fm^-1
    "identity": 1.0,
    # 1 A^-1 = 1e-5 fm^-1
    "physical": 1e-5,
}


def unit_factor(convention: str) -> float:
    try:
        return UNIT_CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown unit convention {convention!r}; use one of {sorted(UNIT_CONVENTIONS)}") from None


@dataclass(frozen=True)
class LatticeGeometry:
    a0: float
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    dirac_points: np.ndarray  # shape (6, 2), K triple then K' triple

    @property
    def dirac_labels(self) -> list[str]:
        return ["K1", "K2", "K3", "K'1", "K'2", "K'3"]


def dirac_magnitude(a0: float) -> float:
    return 4 * math.pi / (3 * math.sqrt(3) * a0)


def lattice_geometry(a0: float = A0_ANGSTROM) -> LatticeGeometry:
    """Direct and reciprocal vectors of the honeycomb lattice plus its six Dirac points (A, A^-1)."""
    if not a0 > 0:
        raise ValueError("a0 must be positive")
    s3 = math.sqrt(3.0)
    a1 = a0 / 2 * np.array([3.0, s3])
    a2 = a0 / 2 * np.array([3.0, -s3])
    g = 2 * math.pi / (3 * a0)
    b1 = g * np.array([1.0, s3])
    b2 = g * np.array([1.0, -s3])
    kx = 2 * math.pi / (3 * a0)
    ky = 2 * math.pi / (3 * s3 * a0)
    ky0 = 4 * math.pi / (3 * s3 * a0)
    dirac = np.array([
        [kx, ky], [-kx, ky], [0.0, -ky0],
        [kx, -ky], [-kx, -ky], [0.0, ky0],
    ])
    return LatticeGeometry(a0, a1, a2, b1, b2, dirac)


@dataclass(frozen=True)
class BandParams:
    m_tilde: float
    C_p: float = 0.0
    W_eval: float = 0.0
    unit_convention: str = "identity"

    def __post_init__(self) -> None:
        unit_factor(self.unit_convention)


def resolve_w_eval(preset: str | float, p: PhysicalParams | None = None, a0: float = A0_ANGSTROM) -> float:
    """Morse value used in the dispersion: ``zero``, ``de`` (= D_e), ``lattice`` (= W(a0)) or a number."""
    if isinstance(preset, (int, float)):
        return float(preset)
    key = str(preset).strip().lower()
    if key == "zero":
        return 0.0
    if key in ("de", "lattice"):
        if p is None:
            raise ValueError(f"W_eval preset {preset!r} needs Morse parameters")
        return p.D_e if key == "de" else float(morse_potential(p, a0))
    try:
        return float(key)
    except ValueError:
        raise ValueError(f"unknown W_eval {preset!r}; use zero, de, lattice or a number") from None


def dispersion_roots(m_tilde: float, C_p: float, W_eval: float, kx, ky):
    """Roots of ``(E - m - C_p)(E + m - W) = Kx^2 + Ky^2`` as ``(E_plus, E_minus, complex_flag)``.

    ``kx``, ``ky`` must already be in the energy units.  Roots come from the
    cancellation-free form of the quadratic formula.
    """
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    K2 = kx**2 + ky**2
    B = -(W_eval + C_p)
    C0 = -(m_tilde + C_p) * (m_tilde - W_eval) - K2
    disc = B * B - 4.0 * C0
    is_complex = disc < 0
    sq = np.sqrt(disc.astype(complex))
    sgn = 1.0 if B >= 0 else -1.0
    qq = -0.5 * (B + sgn * sq)
    safe = np.where(qq == 0, 1.0, qq)
    r1 = qq
    r2 = np.where(qq == 0, 0.0, C0 / safe)
    if not np.any(is_complex):
        r1, r2 = r1.real, r2.real
        E_plus, E_minus = np.maximum(r1, r2), np.minimum(r1, r2)
    else:
        swap = r1.real < r2.real
        E_plus, E_minus = np.where(swap, r2, r1), np.where(swap, r1, r2)
    if E_plus.ndim == 0:
        return E_plus[()], E_minus[()], bool(is_complex)
    return E_plus, E_minus, is_complex


@dataclass(frozen=True)
class BandGrid:
    kx: np.ndarray  # A^-1
    ky: np.ndarray
    E_plus: np.ndarray  # fm^-1
    E_minus: np.ndarray
    W_eval: float
    unit_convention: str
    complex_flag: np.ndarray

    def rows(self):
        """Flattened ``(kx, ky, E_minus, E_plus)`` rows, ky-major then kx."""
        for j in range(self.kx.shape[0]):
            for i in range(self.kx.shape[1]):
                yield self.kx[j, i], self.ky[j, i], self.E_minus[j, i], self.E_plus[j, i]


def band_surface(geometry: LatticeGeometry, params: BandParams,
                 k_window: tuple[float, float, float, float] | None = None,
                 resolution: tuple[int, int] = (64, 64)) -> BandGrid:
    """Both bands on a rectangular wavevector mesh (default: the square bounding the Dirac points)."""
    nx, ny = resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2 per axis")
    if k_window is None:
        k = 1.1 * dirac_magnitude(geometry.a0)
        k_window = (-k, k, -k, k)
    x0, x1, y0, y1 = k_window
    KX, KY = np.meshgrid(np.linspace(x0, x1, nx), np.linspace(y0, y1, ny))
    f = unit_factor(params.unit_convention)
    Ep, Em, flag = dispersion_roots(params.m_tilde, params.C_p, params.W_eval, KX * f, KY * f)
    return BandGrid(KX, KY, Ep, Em, params.W_eval, params.unit_convention, np.asarray(flag))


def dirac_point_gap(geometry: LatticeGeometry, params: BandParams, reference: float = GAP_REFERENCE[2]) -> dict:
    """Band gap at each Dirac point with its deviation from ``reference``."""
    f = unit_factor(params.unit_convention)
    pts = geometry.dirac_points
    Ep, Em, flag = dispersion_roots(params.m_tilde, params.C_p, params.W_eval, pts[:, 0] * f, pts[:, 1] * f)
    gaps = Ep - Em
    rows = []
    for name, (kx, ky), ep, em, g, cf in zip(geometry.dirac_labels, pts, Ep, Em, gaps, np.atleast_1d(flag)):
        rows.append({
            "point": name, "kx": float(kx), "ky": float(ky),
            "E_plus": _num(ep), "E_minus": _num(em), "gap": _num(g), "complex_roots": bool(cf),
        })
    g0 = gaps[0]
    return {
        "a0": geometry.a0,
        "unit_convention": params.unit_convention,
        "unit_factor": f,
        "m_tilde": params.m_tilde,
        "C_p": params.C_p,
        "W_eval": params.W_eval,
        "points": rows,
        "gap": _num(g0),
        "gap_spread": float(np.max(np.abs(gaps - g0))),
        "complex_roots": bool(np.any(flag)),
        "reference_gap": reference,
        "reference_E_plus": GAP_REFERENCE[0],
        "reference_E_minus": GAP_REFERENCE[1],
        "deviation": _num(g0 - reference),
    }


def _num(x):
    x = complex(x)
    return x.real if x.imag == 0 else {"re": x.real, "im": x.imag}
