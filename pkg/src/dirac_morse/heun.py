"""Confluent Heun function: power series, derivatives and polynomial conditions.

The series ``H(z) = sum_n lambda_n z**n`` solves

    H'' + (a + (b+1)/z + (c+1)/(z-1)) H' + (mu/z + nu/(z-1)) H = 0

with ``H(0) = 1``.  Coefficients come from the three-term recurrence
``P_n lambda_n = Q_n lambda_{n-1} + R_n lambda_{n-2}``.

For large ``|a|`` the terms of the series grow enormously before they
decay, so a double precision sum is destroyed by cancellation.  Every
evaluation therefore runs a cheap double precision pass first, estimates the
rounding error from the term magnitudes, and re-sums the points that fail the
budget in extended precision (gmpy2) at a precision chosen from the
observed cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpc

__all__ = [
    "ConfluentHeunParams",
    "SeriesState",
    "ScaledDeterminant",
    "HeunError",
    "DegenerateParametersError",
    "HeunDomainError",
    "HeunConvergenceError",
    "DEFAULT_MARGIN",
    "DEFAULT_TOL",
    "DEFAULT_MAX_TERMS",
    "recurrence_coefficients",
    "series_coefficients",
    "heunc_eval",
    "heunc_derivative",
    "heunc_second_derivative",
    "heunc_series",
    "heunc_with_derivatives",
    "heunc_real",
    "heun_ode_residual",
    "first_termination_residual",
    "termination_determinant",
    "determinant_matrix",
]

DEFAULT_MARGIN = 1e-3
DEFAULT_TOL = 1e-13
DEFAULT_MAX_TERMS = 10_000

# relative rounding-error budget a double precision pass must meet
_DOUBLE_BUDGET = 1e-12
_EPS = np.finfo(float).eps
_BASE_PREC = 192
_GUARD_BITS = 64


class HeunError(Exception):
    """Base class for Heun evaluation failures."""


class DegenerateParametersError(HeunError, ValueError):
    """``P_n = 1 + b/n`` vanished: ``b`` is the negative integer ``-n``."""


class HeunDomainError(HeunError, ValueError):
    """Evaluation point outside the disc where the series is trusted."""


class HeunConvergenceError(HeunError, ArithmeticError):
    """The stopping rule did not fire within ``max_terms`` terms."""


@dataclass(frozen=True)
class ConfluentHeunParams:
    """The five confluent Heun parameters plus the derived ``mu`` and ``nu``."""

    a: complex
    b: complex
    c: complex
    delta: complex
    eta: complex
    mu: complex = field(init=False)
    nu: complex = field(init=False)

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "delta", "eta"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        a, b, c = self.a, self.b, self.c
        object.__setattr__(
            self, "mu", 0.5 * (a - b - c + a * b - b * c) - self.eta
        )
        object.__setattr__(
            self, "nu", 0.5 * (a + b + c + a * c + b * c) + self.delta + self.eta
        )

    def astuple(self) -> tuple[complex, complex, complex, complex, complex]:
        return (self.a, self.b, self.c, self.delta, self.eta)


@dataclass(frozen=True)
class SeriesState:
    """Bookkeeping for one truncated series evaluation."""

    coefficients: tuple[complex, ...]
    truncation_index: int
    converged: bool
    tail_estimate: float


@dataclass(frozen=True)
class ScaledDeterminant:
    """A determinant stored as ``mantissa * 2**exponent`` to dodge overflow."""

    mantissa: complex
    exponent: int

    @property
    def value(self) -> complex:
        if self.mantissa == 0:
            return 0j
        try:
            return complex(
                math.ldexp(self.mantissa.real, self.exponent),
                math.ldexp(self.mantissa.imag, self.exponent),
            )
        except OverflowError:
            return complex(math.inf, math.inf)

    @property
    def log10_abs(self) -> float:
        if self.mantissa == 0:
            return -math.inf
        return math.log10(abs(self.mantissa)) + self.exponent * math.log10(2.0)

    def is_zero(self) -> bool:
        return self.mantissa == 0


# --------------------------------------------------------------------------
# recurrence
# --------------------------------------------------------------------------

def _pqr(a, b, c, delta, eta, n):
    """P_n, Q_n, R_n in whatever number type the parameters carry."""
    P = 1 + b / n
    Q = 1 + (-a + b + c - 1) / n + (eta + (a - b - c - a * b + b * c) / 2) / (n * n)
    # cleared form of (a/n^2)(delta/a + (b+c)/2 + n - 1); no division by a
    R = (delta + a * ((b + c) / 2 + (n - 1))) / (n * n)
    return P, Q, R


def recurrence_coefficients(params: ConfluentHeunParams, n: int):
    """Return ``(P_n, Q_n, R_n)`` for ``n >= 1``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    P, Q, R = _pqr(*params.astuple(), n)
    if P == 0:
        raise DegenerateParametersError(
            f"P_{n} = 0 (b = {params.b!r}); perturb or reject this parameter set"
        )
    return complex(P), complex(Q), complex(R)


class _Coefficients:
    """Lazily extended recurrence coefficients at one binary precision."""

    def __init__(self, params: ConfluentHeunParams, prec: int, q_perturbation: float = 0.0):
        self.prec = prec
        self._q_scale = 1.0 + q_perturbation
        with gmpy2.context(precision=prec):
            self._p = tuple(mpc(x) for x in params.astuple())
        self._params = params
        self.hp: list = []
        self._double: np.ndarray | None = None

    def extend(self, count: int) -> None:
        """Make sure ``lambda_0 .. lambda_count`` are available."""
        lam = self.hp
        if len(lam) > count:
            return
        a, b, c, delta, eta = self._p
        with gmpy2.context(precision=self.prec):
            if not lam:
                lam.append(mpc(1))
            for n in range(len(lam), count + 1):
                P, Q, R = _pqr(a, b, c, delta, eta, n)
                if P == 0:
                    raise DegenerateParametersError(
                        f"P_{n} = 0 (b = {self._params.b!r}); perturb or reject this parameter set"
                    )
                if self._q_scale != 1.0:
                    Q = Q * self._q_scale
                prev2 = lam[n - 2] if n >= 2 else 0
                lam.append((Q * lam[n - 1] + R * prev2) / P)
        self._double = None

    def as_complex(self, count: int) -> np.ndarray:
        self.extend(count)
        if self._double is None or len(self._double) <= count:
            self._double = np.array([complex(x) for x in self.hp], dtype=complex)
        return self._double[: count + 1]


def series_coefficients(params: ConfluentHeunParams, count: int) -> list[complex]:
    """Return ``[lambda_0, ..., lambda_count]`` with ``lambda_0 = 1``.

    The recurrence runs in extended precision, so the returned values are
    correctly rounded even when the recurrence itself cancels.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    coefs = _Coefficients(params, _BASE_PREC)
    return [complex(x) for x in coefs.as_complex(count)]


# --------------------------------------------------------------------------
# series evaluation engine
# --------------------------------------------------------------------------

@dataclass
class _PointResult:
    sums: list  # one complex per requested order, as sum of n^(k) lambda_n z^n
    truncation_index: int
    tail_estimate: float


def _check_domain(z: np.ndarray, margin: float) -> None:
    bad = np.abs(z) >= 1.0 - margin
    if np.any(bad):
        worst = z[bad][np.argmax(np.abs(z[bad]))]
        raise HeunDomainError(
            f"|z| = {abs(worst):.6g} is outside the trusted disc |z| < 1 - {margin:g}"
        )


def _falling(n: int, order: int) -> int:
    out = 1
    for j in range(order):
        out *= n - j
    return out


def _double_pass(coefs: _Coefficients, z: np.ndarray, orders: Sequence[int], tol: float,
                 max_terms: int):
    """Vectorised double precision sums with the stopping rule applied per point.

    Returns the sums (shape ``(len(orders), npts)``), truncation indices, tail
    estimates and a boolean mask of points whose rounding budget is met.
    """
    npts = z.size
    nord = len(orders)
    sums = np.zeros((nord, npts), dtype=complex)
    abs_weighted = np.zeros((nord, npts))
    trunc = np.full(npts, -1, dtype=int)
    tail = np.zeros(npts)
    run = np.zeros(npts, dtype=int)
    active = np.arange(npts)
    zp = np.ones(npts, dtype=complex)
    chunk = 256
    lam = coefs.as_complex(min(chunk, max_terms))
    finite = True
    for n in range(max_terms + 1):
        if n >= len(lam):
            lam = coefs.as_complex(min(len(lam) + max(chunk, len(lam)), max_terms))
        zz = z[active]
        base = lam[n] * zp
        small = np.ones(active.size, dtype=bool)
        for i, k in enumerate(orders):
            term = base * _falling(n, k)
            s = sums[i, active] + term
            sums[i, active] = s
            at = np.abs(term)
            abs_weighted[i, active] += (n + 1) * at
            small &= at <= tol * np.abs(s)
        run[active] = np.where(small, run[active] + 1, 0)
        if not np.all(np.isfinite(base)):
            finite = False
            break
        done = run[active] >= 3
        if np.any(done):
            idx = active[done]
            trunc[idx] = n
            az = np.abs(z[idx])
            tail[idx] = np.abs(base[done]) * az / (1.0 - az)
            active = active[~done]
            zp = zp[~done]
            zz = zz[~done]
            if active.size == 0:
                break
        zp = zp * zz
    converged = trunc >= 0
    if not finite:
        ok = np.zeros(npts, dtype=bool)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            err = _EPS * abs_weighted
            ok = np.all(
                (err <= _DOUBLE_BUDGET * np.abs(sums)) | (abs_weighted == 0), axis=0
            ) & converged
    return sums, trunc, tail, ok, converged


def _hp_point(coefs: _Coefficients, z: complex, orders: Sequence[int], tol: float,
              max_terms: int) -> tuple[_PointResult, float]:
    """Extended precision sum at one point; returns result and the cancellation ratio."""
    prec = coefs.prec
    with gmpy2.context(precision=prec):
        zz = mpc(z)
        zp = mpc(1)
        sums = [mpc(0)] * len(orders)
        absum = [gmpy2.mpfr(0)] * len(orders)
        tol_m = gmpy2.mpfr(tol)
        run = 0
        lam = coefs.hp
        for n in range(max_terms + 1):
            if n >= len(lam):
                coefs.extend(min(max(2 * len(lam), 256), max_terms))
                lam = coefs.hp
            base = lam[n] * zp
            small = True
            for i, k in enumerate(orders):
                term = base * _falling(n, k) if k else base
                sums[i] = sums[i] + term
                at = abs(term)
                absum[i] = absum[i] + at
                if at > tol_m * abs(sums[i]):
                    small = False
            run = run + 1 if small else 0
            if run >= 3:
                az = abs(z)
                tail = float(abs(base)) * az / (1.0 - az) if az < 1 else math.inf
                ratio = 1.0
                for s, t in zip(sums, absum):
                    if s != 0:
                        ratio = max(ratio, float(t / abs(s)))
                return _PointResult([complex(s) for s in sums], n, tail), ratio
            zp = zp * zz
    raise HeunConvergenceError(
        f"series at z = {z!r} did not converge within {max_terms} terms"
    )


def _evaluate(params: ConfluentHeunParams, z, orders: Sequence[int], tol: float,
              max_terms: int, margin: float, q_perturbation: float = 0.0):
    """Core engine: sums ``sum_n n^(k) lambda_n z^n`` for each order ``k``.

    Returns ``(sums, trunc, tail)`` where ``sums`` has shape
    ``(len(orders),) + z.shape``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    zarr = np.atleast_1d(np.asarray(z, dtype=complex))
    shape = np.shape(z)
    flat = zarr.ravel()
    _check_domain(flat, margin)

    coefs = _Coefficients(params, _BASE_PREC, q_perturbation)
    sums, trunc, tail, ok, converged = _double_pass(coefs, flat, orders, tol, max_terms)

    todo = np.flatnonzero(~ok)
    if todo.size:
        # precision from the observed spread of term magnitudes
        need = _BASE_PREC
        lam_abs = np.abs(coefs.as_complex(min(len(coefs.hp) - 1, max_terms)))
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            for j in todo:
                az = abs(flat[j])
                n = np.arange(lam_abs.size)
                mags = lam_abs * az ** n
                peak = np.nanmax(mags) if np.all(np.isfinite(mags)) else math.inf
                if math.isfinite(peak) and peak > 0:
                    need = max(need, int(math.log2(peak)) + 53 + _GUARD_BITS)
                else:
                    need = max(need, 2 * _BASE_PREC)
        hp = _Coefficients(params, need, q_perturbation)
        for j in todo:
            while True:
                res, ratio = _hp_point(hp, complex(flat[j]), orders, tol, max_terms)
                want = int(math.log2(max(ratio, 1.0))) + 53 + _GUARD_BITS
                if want <= hp.prec:
                    break
                hp = _Coefficients(params, want + 32, q_perturbation)
            sums[:, j] = res.sums
            trunc[j] = res.truncation_index
            tail[j] = res.tail_estimate
    elif not np.all(converged):
        bad = flat[~converged][0]
        raise HeunConvergenceError(
            f"series at z = {bad!r} did not converge within {max_terms} terms"
        )

    sums = sums.reshape((len(orders),) + (shape if shape else (1,)))
    trunc = trunc.reshape(shape if shape else (1,))
    tail = tail.reshape(shape if shape else (1,))
    if not shape:
        return sums[:, 0], int(trunc[0]), float(tail[0])
    return sums, trunc, tail


_TINY_Z = 1e-30


def _derivative_from_sums(sums, z, order):
    """Turn ``sum n^(k) lambda_n z^n`` into the k-th derivative."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        out = sums / z**order
    return out


def heunc_eval(params: ConfluentHeunParams, z, tol: float = DEFAULT_TOL,
               max_terms: int = DEFAULT_MAX_TERMS, margin: float = DEFAULT_MARGIN):
    """HeunC(a, b, c, delta, eta, z) for scalar or array ``z`` inside the disc.

    Terms are summed until ``|lambda_n z^n| <= tol * |partial sum|`` for three
    consecutive ``n``.
    """
    sums, _, _ = _evaluate(params, z, (0,), tol, max_terms, margin)
    out = sums[0]
    return complex(out) if np.ndim(out) == 0 else out


def heunc_derivative(params: ConfluentHeunParams, z, tol: float = DEFAULT_TOL,
                     max_terms: int = DEFAULT_MAX_TERMS, margin: float = DEFAULT_MARGIN):
    """First derivative by term-wise differentiation of the series."""
    return heunc_with_derivatives(params, z, tol, max_terms, margin, order=1)[1]


def heunc_second_derivative(params: ConfluentHeunParams, z, tol: float = DEFAULT_TOL,
                            max_terms: int = DEFAULT_MAX_TERMS,
                            margin: float = DEFAULT_MARGIN):
    """Second derivative by term-wise differentiation of the series."""
    return heunc_with_derivatives(params, z, tol, max_terms, margin, order=2)[2]


def heunc_with_derivatives(params: ConfluentHeunParams, z, tol: float = DEFAULT_TOL,
                           max_terms: int = DEFAULT_MAX_TERMS,
                           margin: float = DEFAULT_MARGIN, order: int = 2):
    """Return ``(H, H', ..., H^(order))`` from a single pass over the series."""
    orders = tuple(range(order + 1))
    sums, _, _ = _evaluate(params, z, orders, tol, max_terms, margin)
    zarr = np.asarray(z, dtype=complex)
    out = [sums[0]]
    for k in orders[1:]:
        d = _derivative_from_sums(sums[k], zarr, k)
        # near z = 0 dividing by z^k underflows; two Taylor terms are exact to O(z^2)
        tiny = np.abs(zarr) < _TINY_Z
        if np.any(tiny):
            lam = series_coefficients(params, k + 1)
            taylor = math.factorial(k) * lam[k] + math.factorial(k + 1) * lam[k + 1] * zarr
            d = np.where(tiny, taylor, d)
        out.append(d)
    if np.ndim(z) == 0:
        return tuple(complex(np.asarray(x).reshape(-1)[0]) for x in out)
    return tuple(np.asarray(x) for x in out)


def heunc_series(params: ConfluentHeunParams, z: complex, tol: float = DEFAULT_TOL,
                 max_terms: int = DEFAULT_MAX_TERMS,
                 margin: float = DEFAULT_MARGIN) -> tuple[complex, SeriesState]:
    """Scalar evaluation that also reports how the series was truncated."""
    sums, trunc, tail = _evaluate(params, complex(z), (0,), tol, max_terms, margin)
    coefs = series_coefficients(params, max(trunc, 1))[: trunc + 1]
    state = SeriesState(tuple(coefs), trunc, True, tail)
    return complex(sums[0]), state


def heunc_real(a: float, b: float, c: float, delta: float, eta: float, z: float,
               tol: float = DEFAULT_TOL, real_tol: float = 1e-10) -> tuple[complex, bool]:
    """Real-argument convenience: the complex value and whether it is real."""
    value = heunc_eval(ConfluentHeunParams(a, b, c, delta, eta), z, tol)
    return value, abs(value.imag) <= real_tol * max(1.0, abs(value))


def heun_ode_residual(params: ConfluentHeunParams, z, tol: float = DEFAULT_TOL):
    """Left side of the confluent Heun equation using series values.

    Returns the residual and the scale ``|H''| + |p H'| + |q H|`` it should be
    compared against.
    """
    H, dH, d2H = heunc_with_derivatives(params, z, tol)
    z = np.asarray(z, dtype=complex)
    p = params.a + (params.b + 1) / z + (params.c + 1) / (z - 1)
    q = params.mu / z + params.nu / (z - 1)
    res = d2H + p * dH + q * H
    scale = np.abs(d2H) + np.abs(p * dH) + np.abs(q * H)
    if res.ndim == 0:
        return complex(res), float(scale)
    return res, scale


# --------------------------------------------------------------------------
# polynomial (termination) conditions
# --------------------------------------------------------------------------

def first_termination_residual(params: ConfluentHeunParams, N: int) -> complex:
    """``mu + nu + N a``; zero when ``R_{N+2}`` vanishes."""
    return params.mu + params.nu + N * params.a


def determinant_matrix(params: ConfluentHeunParams, N: int) -> np.ndarray:
    """The (N+1)x(N+1) tridiagonal matrix whose determinant is ``Delta_{N+1}(mu)``."""
    a, b, c, mu = params.a, params.b, params.c, params.mu
    size = N + 1
    M = np.zeros((size, size), dtype=complex)
    for i in range(1, size + 1):
        q_i = (i - 1) * (i + b + c)
        M[i - 1, i - 1] = mu - q_i + (i - 1) * a
        if i < size:
            M[i - 1, i] = i * (i + b)
        if i > 1:
            M[i - 1, i - 2] = (N + 2 - i) * a
    return M


def termination_determinant(params: ConfluentHeunParams, N: int) -> ScaledDeterminant:
    """``Delta_{N+1}(mu)`` via leading principal minors with per-step rescaling."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    a, b, c, mu = params.a, params.b, params.c, params.mu
    prev, cur = 0j, 1 + 0j  # D_{-1} is unused; D_0 = 1
    exponent = 0
    for i in range(1, N + 2):
        diag = mu - (i - 1) * (i + b + c) + (i - 1) * a
        if i == 1:
            nxt = diag * cur
        else:
            sub = (N + 2 - i) * a
            sup = (i - 1) * (i - 1 + b)
            nxt = diag * cur - sub * sup * prev
        prev, cur = cur, nxt
        big = max(abs(cur), abs(prev))
        if big == 0:
            return ScaledDeterminant(0j, 0)
        if not math.isfinite(big):
            raise OverflowError("determinant recurrence overflowed between rescalings")
        _, e = math.frexp(big)
        if e:
            prev = complex(math.ldexp(prev.real, -e), math.ldexp(prev.imag, -e))
            cur = complex(math.ldexp(cur.real, -e), math.ldexp(cur.imag, -e))
            exponent += e
    return ScaledDeterminant(cur, exponent)
