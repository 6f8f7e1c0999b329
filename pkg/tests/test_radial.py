import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dirac_morse.radial import (
    BranchConfig,
    GridTooCoarseError,
    PhysicalParams,
    QuantumState,
    TABLE1_PARAMS,
    centrifugal_approx,
    heun_params_from_physics,
    is_resonance,
    morse_potential,
    orbital_letter,
    second_order_residual,
    spectroscopic_label,
    z_of_r,
)

pseudo_k = st.integers(-10, 10).filter(lambda k: k not in (0, 1))


def test_physical_params_validation():
    with pytest.raises(ValueError):
        PhysicalParams(D_e=0, alpha=1, r_e=1, m_tilde=1)
    with pytest.raises(ValueError):
        PhysicalParams(D_e=1, alpha=-1, r_e=1, m_tilde=1)
    with pytest.raises(ValueError):
        PhysicalParams(D_e=1, alpha=1, r_e=0, m_tilde=1)
    assert TABLE1_PARAMS.z_e == pytest.approx(math.exp(0.988879 * 2.40873))
    assert TABLE1_PARAMS.z_e > 1


def test_morse_values(table1):
    assert morse_potential(table1, table1.r_e) == 0
    assert morse_potential(table1, 1e4) == pytest.approx(table1.D_e)
    assert morse_potential(table1, table1.r_e + math.log(2) / table1.alpha) == pytest.approx(table1.D_e / 4)
    with pytest.raises(ValueError):
        morse_potential(table1, -1.0)


def test_morse_bounds(table1):
    r = np.linspace(table1.r_e, 50, 500)
    W = morse_potential(table1, r)
    assert np.all(W >= 0) and np.all(W <= table1.D_e)
    assert morse_potential(table1, 0.0) == pytest.approx(table1.D_e * (1 - table1.z_e) ** 2)
    assert morse_potential(table1, 0.0) > table1.D_e


def test_centrifugal_relative_error_small_r():
    alpha = 0.988879
    r = np.linspace(1e-4, 0.5 / alpha, 1000)
    rel = np.abs(centrifugal_approx(alpha, r) - 1 / r**2) * r**2
    assert rel.max() <= 1e-2


def test_centrifugal_series_terms():
    # e^-x/(1-e^-x)^2 = 1/x^2 - 1/12 + x^2/240 - x^4/6048 + ...
    alpha, x = 1.0, 0.01
    exact = math.exp(-x) / (-math.expm1(-x)) ** 2
    series = 1 / x**2 - 1 / 12 + x**2 / 240 - x**4 / 6048
    assert exact == pytest.approx(series, abs=1e-10)
    assert centrifugal_approx(alpha, x) - alpha**2 / 12 == pytest.approx(exact, rel=1e-13)


def test_centrifugal_difference_vanishes_at_origin():
    alpha = 0.988879
    r = np.array([1e-1, 1e-2, 1e-3])
    diff = np.abs(centrifugal_approx(alpha, r) - 1 / r**2)
    assert np.all(np.diff(diff) < 0) and diff[-1] < 1e-5
    with pytest.raises(ValueError):
        centrifugal_approx(alpha, 0.0)


@given(st.floats(1e-3, 50), st.floats(1e-3, 50))
def test_z_map_monotone(r1, r2):
    z1, z2 = z_of_r(TABLE1_PARAMS, r1), z_of_r(TABLE1_PARAMS, r2)
    assert 0 < z1 < 1 and 0 < z2 < 1
    if r1 < r2:
        assert z1 > z2


def test_quantum_state_validation():
    with pytest.raises(ValueError):
        QuantumState(1, 0)
    with pytest.raises(ValueError):
        QuantumState(1, 1)
    with pytest.raises(ValueError):
        QuantumState(-1, 2)
    with pytest.raises(ValueError):
        QuantumState(1, -1, mode="spin")
    assert QuantumState(1, 1, mode="spin").l == 1


@given(st.integers(0, 5), pseudo_k)
def test_pseudospin_classification(N, k):
    q = QuantumState(N, k)
    if k < 0:
        assert q.l_pseudo == -k and q.j_pseudo == q.l_pseudo - 0.5 and q.alignment == "aligned"
    else:
        assert q.l_pseudo == k - 1 and q.j_pseudo == q.l_pseudo + 0.5 and q.alignment == "unaligned"
    assert q.l * (q.l + 1) == k * (k + 1)
    assert q.l_pseudo * (q.l_pseudo + 1) == k * (k - 1)


@given(st.integers(0, 5), pseudo_k)
def test_k_and_one_minus_k_share_pseudo_orbital(N, k):
    a, b = QuantumState(N, k), QuantumState(N, 1 - k)
    assert a.l_pseudo == b.l_pseudo
    assert abs(a.j_pseudo - b.j_pseudo) == 1


@pytest.mark.parametrize("N,k,label", [
    (1, -4, "1f_{7/2}"), (1, -3, "1d_{5/2}"), (1, -2, "1p_{3/2}"), (1, -1, "1s_{1/2}"),
    (1, 2, "0d_{3/2}"), (1, 3, "0f_{5/2}"), (1, 4, "0g_{7/2}"), (1, 5, "0h_{9/2}"),
    (2, -4, "2f_{7/2}"), (2, 5, "1h_{9/2}"),
])
def test_labels(N, k, label):
    assert spectroscopic_label(QuantumState(N, k)) == label


def test_letters_beyond_h():
    assert [orbital_letter(l) for l in range(9)] == list("spdfghikl")


def test_heun_params_fixture(table1):
    # independent substitution (complex arithmetic by hand) for N=1, k=-1, E=-9.727001781
    got = heun_params_from_physics(table1, QuantumState(1, -1), -9.727001781, BranchConfig(b2_variant="derived"))
    assert got.a == pytest.approx(217.45373692634533j, rel=1e-13)
    assert got.b == pytest.approx(19.513285885597398j, rel=1e-13)
    assert got.c == 3
    assert got.delta == pytest.approx(-2183.932771267601, rel=1e-13)
    assert got.eta == pytest.approx(2186.432771267601, rel=1e-13)
    assert got.mu == pytest.approx(-4309.551239035232 + 69.70029669197785j, rel=1e-13)
    assert got.nu == pytest.approx(4 + 473.9340456238854j, rel=1e-13)
    printed = heun_params_from_physics(table1, QuantumState(1, -1), -9.727001781, BranchConfig(b2_variant="printed"))
    assert printed.b == pytest.approx(20.61131498736989j, rel=1e-13)
    assert is_resonance(got) and is_resonance(printed)


@given(st.integers(0, 4), pseudo_k, st.floats(-9.99, 9.99))
def test_heun_params_relations(N, k, E):
    p = heun_params_from_physics(TABLE1_PARAMS, QuantumState(N, k), E)
    assert p.c**2 == (2 * k - 1) ** 2
    assert (p.c + 1) / 2 == max(k, 1 - k)
    assert abs(p.delta + (p.eta - k * (k - 1) - 0.5)) <= 1e-12 * abs(p.delta)


def test_branch_flips(table1):
    q, E = QuantumState(1, -2), -9.5
    base = heun_params_from_physics(table1, q, E)
    f = heun_params_from_physics(table1, q, E, BranchConfig(flip_a=True, flip_b=True, flip_c=True))
    assert (f.a, f.b, f.c) == (-base.a, -base.b, -base.c)


def test_branch_config_validation(table1):
    with pytest.raises(ValueError):
        BranchConfig(root_window=(1.0, 0.0))
    with pytest.raises(ValueError):
        BranchConfig(tol=0)
    with pytest.raises(ValueError):
        BranchConfig(sqrt_convention="other")
    assert BranchConfig().window(table1) == (-10 + 1e-3, 10 - 1e-3)


def test_second_order_residual_zero_and_grid_guard(table1):
    r = np.linspace(0.5, 10, 50)
    z = np.zeros_like(r)
    q = QuantumState(1, -1)
    assert np.all(second_order_residual(table1, q, -9.7, r, z, z) == 0)
    with pytest.raises(GridTooCoarseError):
        second_order_residual(table1, q, -9.7, r, z, z, fd_step=1e-3)
