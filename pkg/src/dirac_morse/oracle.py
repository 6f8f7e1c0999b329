"""Independent checks: direct ODE integration, approximation scans, brute-force equivalences.

Nothing here calls the series summation except to seed initial data a short
distance from ``z = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.integrate import DOP853, RK45

from .heun import (
    DEFAULT_MARGIN,
    DEFAULT_MAX_TERMS,
    DEFAULT_TOL,
    ConfluentHeunParams,
    _evaluate,
    heunc_eval,
    heunc_with_derivatives,
    series_coefficients,
    termination_determinant,
    determinant_matrix,
)
from .radial import (
    PhysicalParams,
    QuantumState,
    centrifugal_approx,
    morse_potential,
)

__all__ = [
    "IntegratorSpec",
    "StepLimitError",
    "SingularityMarginError",
    "integrate_heun_ode",
    "integrate_radial_ode",
    "approximation_scan",
    "heun_cross_validation",
    "shooting_mismatch",
    "random_terminating_params",
    "termination_equivalence",
]

_METHODS = {"DOP853": DOP853, "RK45": RK45}


class StepLimitError(RuntimeError):
    pass


class SingularityMarginError(ValueError):
    pass


@dataclass(frozen=True)
class IntegratorSpec:
    """Adaptive embedded Runge-Kutta settings."""

    method: Literal["DOP853", "RK45"] = "DOP853"
    rel_tol: float = 1e-13
    abs_tol: float = 1e-15
    max_steps: int = 200_000

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    def tightened(self, factor: float = 100.0) -> "IntegratorSpec":
        return IntegratorSpec(self.method, self.rel_tol / factor, self.abs_tol / factor, self.max_steps)


def _pack(u: complex, v: complex) -> np.ndarray:
    return np.array([u.real, u.imag, v.real, v.imag])


def _integrate(rhs, t0: float, t1: float, y0: np.ndarray, spec: IntegratorSpec) -> np.ndarray:
    solver = _METHODS[spec.method](rhs, t0, y0, t1, rtol=spec.rel_tol, atol=spec.abs_tol)
    steps = 0
    while solver.status == "running":
        if steps >= spec.max_steps:
            raise StepLimitError(f"step limit {spec.max_steps} reached at t = {solver.t:.6g}")
        msg = solver.step()
        steps += 1
        if solver.status == "failed":
            raise RuntimeError(f"integrator failed: {msg}")
    return solver.y


def integrate_heun_ode(params: ConfluentHeunParams, z_start: float, z_end: float,
                       spec: IntegratorSpec | None = None, initial: tuple[complex, complex] | None = None,
                       margin: float = 1e-3) -> tuple[complex, complex]:
    """Integrate the confluent Heun equation along the real segment ``[z_start, z_end]``.

    ``initial`` defaults to series values at ``z_start``.
    """
    spec = spec or IntegratorSpec()
    lo, hi = min(z_start, z_end), max(z_start, z_end)
    if lo < margin or hi > 1 - margin:
        raise SingularityMarginError(f"path [{lo:g}, {hi:g}] comes within {margin:g} of z = 0 or z = 1")
    if initial is None:
        H0, dH0, _ = heunc_with_derivatives(params, z_start)
    else:
        H0, dH0 = initial
    a, b, c, mu, nu = params.a, params.b, params.c, params.mu, params.nu

    def rhs(z, y):
        H = y[0] + 1j * y[1]
        dH = y[2] + 1j * y[3]
        d2H = -(a + (b + 1) / z + (c + 1) / (z - 1)) * dH - (mu / z + nu / (z - 1)) * H
        return [dH.real, dH.imag, d2H.real, d2H.imag]

    y = _integrate(rhs, z_start, z_end, _pack(complex(H0), complex(dH0)), spec)
    return complex(y[0], y[1]), complex(y[2], y[3])


def _radial_rhs(p: PhysicalParams, q: QuantumState, E: float, centrifugal: str):
    eps1 = E - p.m_tilde - p.C_p
    eps = eps1 * (E + p.m_tilde)
    kk = q.k * (q.k - 1)
    if centrifugal == "exact":
        cent = lambda r: 1.0 / r**2  # noqa: E731
    elif centrifugal == "approximated":
        cent = lambda r: centrifugal_approx(p, r)  # noqa: E731
    else:
        raise ValueError(f"unknown centrifugal treatment {centrifugal!r}")

    def rhs(r, y):
        f = kk * cent(r) + eps1 * morse_potential(p, r) - eps
        return [y[2], y[3], f * y[0], f * y[1]]

    return rhs


def integrate_radial_ode(p: PhysicalParams, q: QuantumState, E: float, r_span: tuple[float, float],
                         initial: tuple[complex, complex], spec: IntegratorSpec | None = None,
                         centrifugal: Literal["exact", "approximated"] = "approximated"
                         ) -> tuple[complex, complex]:
    """Integrate ``psi2'' = [k(k-1) C(r) + eps1 W - eps] psi2`` from ``r_span[0]`` to ``r_span[1]``."""
    spec = spec or IntegratorSpec()
    r0, r1 = r_span
    if not (r0 > 0 and r1 > 0):
        raise ValueError("r_span must lie in (0, inf)")
    y = _integrate(_radial_rhs(p, q, E, centrifugal), r0, r1, _pack(complex(initial[0]), complex(initial[1])), spec)
    return complex(y[0], y[1]), complex(y[2], y[3])


def approximation_scan(alpha: float | PhysicalParams, r_range: tuple[float, float], samples: int) -> dict:
    """Tabulate ``1/r^2`` against the exponential approximation on a uniform grid."""
    a = alpha.alpha if isinstance(alpha, PhysicalParams) else float(alpha)
    lo, hi = r_range
    if not 0 < lo < hi:
        raise ValueError("r_range must satisfy 0 < r_min < r_max")
    r = np.linspace(lo, hi, samples)
    lhs = 1.0 / r**2
    rhs = centrifugal_approx(a, r)
    abs_err = np.abs(rhs - lhs)
    return {"r": r, "lhs": lhs, "rhs": rhs, "abs_err": abs_err, "rel_err": abs_err * r**2}


def heun_cross_validation(params: ConfluentHeunParams, zs: Sequence[float] = (0.1, 0.3, 0.5),
                          z0: float = 0.01, spec: IntegratorSpec | None = None,
                          q_perturbation: float = 0.0) -> list[dict]:
    """Series value against the integrated equation, seeded at ``z0``.

    ``q_perturbation`` is added to every ``Q_n`` on the series side only, to
    confirm the comparison catches a corrupted recurrence.
    """
    spec = spec or IntegratorSpec()
    rows = []
    H0, dH0, _ = heunc_with_derivatives(params, z0)
    z_prev, state = z0, (H0, dH0)
    for z in sorted(zs):
        state = integrate_heun_ode(params, z_prev, z, spec, initial=state)
        z_prev = z
        if q_perturbation:
            sums, _, _ = _evaluate(params, z, (0,), DEFAULT_TOL, DEFAULT_MAX_TERMS, DEFAULT_MARGIN, q_perturbation)
            series = complex(sums[0])
        else:
            series = heunc_eval(params, z)
        ode = state[0]
        rows.append({"z": z, "series": series, "ode": ode,
                     "rel_diff": abs(series - ode) / max(abs(ode), 1e-300)})
    return rows


def shooting_mismatch(p: PhysicalParams, q: QuantumState, E: float, r_min: float = 0.05,
                      r_max: float = 15.0, r_match: float | None = None,
                      spec: IntegratorSpec | None = None,
                      centrifugal: Literal["exact", "approximated"] = "approximated") -> dict:
    """Log-derivative mismatch at ``r_match`` between regular outward and decaying inward solutions.

    Outward data: ``psi2 ~ r^s`` with ``s = max(k, 1-k)``.  Inward data:
    ``psi2 ~ exp(-kappa r)`` with ``kappa^2`` the large-r limit of the
    potential term (principal root).
    """
    spec = spec or IntegratorSpec(rel_tol=1e-11, abs_tol=1e-14)
    r_match = r_match if r_match is not None else p.r_e
    s = max(q.k, 1 - q.k)
    eps1 = E - p.m_tilde - p.C_p
    eps = eps1 * (E + p.m_tilde)
    kk = q.k * (q.k - 1)
    kappa2 = eps1 * p.D_e - eps + (kk * p.alpha**2 / 12.0 if centrifugal == "approximated" else 0.0)
    kappa = complex(np.sqrt(complex(kappa2)))
    out = integrate_radial_ode(p, q, E, (r_min, r_match), (r_min**s, s * r_min ** (s - 1)), spec, centrifugal)
    inn = integrate_radial_ode(p, q, E, (r_max, r_match), (1.0 + 0j, -kappa), spec, centrifugal)
    L_out = out[1] / out[0]
    L_in = inn[1] / inn[0]
    mismatch = abs(L_out - L_in) / max(1.0, abs(L_in), abs(L_out))
    return {"r_match": r_match, "L_out": L_out, "L_in": L_in, "kappa": kappa, "mismatch": mismatch}


def random_terminating_params(rng: np.random.Generator, N: int, scale: float = 1.5) -> ConfluentHeunParams:
    """Random complex ``a, b, c, eta`` with ``delta`` chosen so ``mu + nu + N a = 0``."""
    a, b, c, eta = (scale * complex(*rng.standard_normal(2)) for _ in range(4))
    delta = -a * ((b + c) / 2 + N + 1)
    return ConfluentHeunParams(a, b, c, delta, eta)


def _with_mu(params: ConfluentHeunParams, mu: complex) -> ConfluentHeunParams:
    a, b, c = params.a, params.b, params.c
    eta = 0.5 * (a - b - c + a * b - b * c) - mu
    return ConfluentHeunParams(a, b, c, params.delta, eta)


def _recurrence_scale(lam: Sequence[complex], params: ConfluentHeunParams, n: int) -> float:
    """Term-wise magnitude of ``Q_n lambda_{n-1} + R_n lambda_{n-2}`` over ``|P_n|``.

    Each of ``Q_n`` and ``R_n`` is bounded by the sum of the magnitudes of its
    parts, so exact cancellation (e.g. ``mu = 0``) still gives a usable scale.
    """
    a, b, c, d, e = params.astuple()
    P = 1 + b / n
    Qabs = 1 + abs(-a + b + c - 1) / n + (abs(e) + 0.5 * abs(a - b - c - a * b + b * c)) / n**2
    Rabs = (abs(d) + abs(a) * (abs((b + c) / 2) + n - 1)) / n**2
    tail = Rabs * abs(lam[n - 2]) if n >= 2 else 0.0
    return (Qabs * abs(lam[n - 1]) + tail) / abs(P)


def termination_equivalence(draws: int = 100, Ns: Sequence[int] = (0, 1, 2, 3, 4), seed: int = 20240601,
                            tol: float = 1e-10) -> dict:
    """Compare the zero sets of ``Delta_{N+1}(mu)`` and ``lambda_{N+1}(mu)``.

    For each draw the ``N + 1`` roots of the determinant in ``mu`` are the
    eigenvalues of ``-M0`` (``M0`` the matrix with ``mu = 0``); at each root
    ``lambda_{N+1}`` must vanish relative to its recurrence terms.
    Conversely, at random ``mu`` the scaled coefficient
    ``(-1)^(N+1) prod i(i+b) lambda_{N+1}`` must equal ``Delta_{N+1}``, so the
    two polynomials (and their zero sets) coincide.
    """
    rng = np.random.default_rng(seed)
    worst_forward = 0.0
    worst_identity = 0.0
    failures = []
    count = 0
    for N in Ns:
        for _ in range(draws):
            params = random_terminating_params(rng, N)
            base = _with_mu(params, 0.0)
            M0 = determinant_matrix(base, N)
            roots = np.linalg.eigvals(-M0)
            for mu in roots:
                pr = _with_mu(params, complex(mu))
                lam = series_coefficients(pr, N + 1)
                rel = abs(lam[N + 1]) / max(_recurrence_scale(lam, pr, N + 1), 1e-300)
                worst_forward = max(worst_forward, rel)
                if rel > tol:
                    failures.append({"N": N, "mu": complex(mu), "rel": rel})
            mu = complex(*rng.standard_normal(2)) * 3.0
            pr = _with_mu(params, mu)
            lam = series_coefficients(pr, N + 1)
            prod = np.prod([i * (i + pr.b) for i in range(1, N + 2)])
            lhs = (-1) ** (N + 1) * prod * lam[N + 1]
            det = termination_determinant(pr, N).value
            rel = abs(lhs - det) / max(abs(det), abs(lhs), 1e-300)
            worst_identity = max(worst_identity, rel)
            if rel > tol:
                failures.append({"N": N, "mu": mu, "identity_rel": rel})
            count += 1
    return {
        "draws": count,
        "seed": seed,
        "Ns": list(Ns),
        "max_rel_lambda_at_det_roots": worst_forward,
        "max_rel_identity": worst_identity,
        "failures": failures,
        "ok": not failures,
    }
