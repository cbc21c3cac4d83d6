import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_genlaguerre

from nondissipative.averaging import GammaTimeLaw, averaged_propagate
from nondissipative.qcore import evolve_unitary, pure_state, spectral_decompose
from nondissipative.models import (
    CavityQedParams,
    DoubletModel,
    IonTrapParams,
    damped_rabi_probability,
    gamma_n_predicted,
    gamma_nu_exact,
    gamma_small_tau,
    ion_doublet,
    ion_probability,
    ion_rabi_frequency,
    ion_sideband_generator,
    jc_hamiltonian,
    jc_index,
    laguerre_assoc,
    omega_from_omega0,
    vacuum_rabi_probability,
)

W_R = 2 * np.pi * 25e3
W_0 = 2 * np.pi * 94e3
ETA = 0.202


def ion(eta=ETA, n_max=16):
    return IonTrapParams(omega_from_omega0(W_0, eta), eta, n_max)


def test_jc_vacuum_block_is_sigma_x():
    g = jc_hamiltonian(CavityQedParams(W_R, 1)).matrix
    e0, g1 = jc_index("e", 0, 1), jc_index("g", 1, 1)
    block = g[np.ix_([e0, g1], [e0, g1])]
    np.testing.assert_array_equal(block, W_R * np.array([[0, 1], [1, 0]]))
    others = [i for i in range(4) if i not in (e0, g1)]
    assert np.all(g[np.ix_(others, range(4))] == 0)


@pytest.mark.parametrize("n_max", [1, 3, 6])
def test_jc_dressed_spectrum(n_max):
    s = spectral_decompose(jc_hamiltonian(CavityQedParams(W_R, n_max)))
    expected = [0.0, 0.0]  # |g,0> and the truncated |e,n_max>
    for n in range(n_max):
        expected += [W_R * math.sqrt(n + 1), -W_R * math.sqrt(n + 1)]
    np.testing.assert_allclose(s.eigenvalues, sorted(expected), atol=1e-9 * W_R)


def test_ground_state_is_null_vector():
    g = jc_hamiltonian(CavityQedParams(W_R, 3)).matrix
    v = np.zeros(g.shape[0])
    v[jc_index("g", 0, 3)] = 1
    assert np.all(g @ v == 0)


def test_vacuum_rabi_values():
    assert vacuum_rabi_probability(W_R, 0.0) == 0.0
    assert vacuum_rabi_probability(W_R, 10e-6) == pytest.approx(1.0, abs=1e-15)


def test_vacuum_rabi_matches_jc_evolution():
    p = CavityQedParams(W_R, 2)
    g = jc_hamiltonian(p)
    rho0 = pure_state(g.dim, jc_index("e", 0, 2))
    for t in np.linspace(0, 100e-6, 23):
        rho = evolve_unitary(rho0, g, t)
        assert abs(rho.population(jc_index("g", 1, 2)) - vacuum_rabi_probability(W_R, t)) < 1e-12


def test_damped_rabi_reference_and_limits():
    assert damped_rabi_probability(W_R, 5.066e-7, 40e-6) == pytest.approx(0.31476917731897, abs=1e-12)
    assert damped_rabi_probability(W_R, 5.066e-7, 5e-3) == pytest.approx(0.5, abs=1e-12)
    t = np.linspace(0, 100e-6, 500)
    np.testing.assert_allclose(damped_rabi_probability(W_R, 1e-12 / W_R, t), vacuum_rabi_probability(W_R, t), atol=1e-9)


def test_damped_rabi_matches_averaged_doublet():
    d = DoubletModel(W_R, ("e,0", "g,1"))
    for t in np.linspace(1e-6, 100e-6, 17):
        rho = averaged_propagate(d.initial_state(0), d.generator(), GammaTimeLaw(t, 5.066e-7))
        assert abs(rho.population(1) - damped_rabi_probability(W_R, 5.066e-7, t)) < 1e-12


def test_gamma_nu_cavity_values():
    tau = 0.15915 / (2 * W_R)
    gamma, nu = gamma_nu_exact(W_R, tau)
    assert gamma == pytest.approx(2.469e4, rel=1e-3)
    assert nu / (2 * W_R) == pytest.approx(0.9917, abs=1e-4)


def test_gamma_nu_special_point():
    tau = 1 / (2 * W_R)
    gamma, nu = gamma_nu_exact(W_R, tau)
    assert gamma == pytest.approx(math.log(2) / (2 * tau), rel=1e-14)
    assert nu == pytest.approx((math.pi / 4) / tau, rel=1e-14)


def test_gamma_nu_small_tau_limit():
    tau = 1e-9 / W_R
    gamma, nu = gamma_nu_exact(W_R, tau)
    assert gamma / (2 * W_R**2 * tau) == pytest.approx(1, abs=1e-12)
    assert nu / (2 * W_R) == pytest.approx(1, abs=1e-12)


def test_gamma_small_tau():
    assert gamma_small_tau(W_R, 0.5e-6) == pytest.approx(2.467e4, rel=1e-3)
    assert gamma_small_tau(W_R, 0.0) == 0.0
    ratio = gamma_small_tau(W_R, 5.066e-7) / gamma_nu_exact(W_R, 5.066e-7)[0]
    assert ratio == pytest.approx(1.0127, abs=2e-4)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(1e2, 1e7),
    st.floats(1e-10, 1e-4),
)
def test_gamma_nu_bounds(omega, tau):
    gamma, nu = gamma_nu_exact(omega, tau)
    assert nu <= 2 * omega
    assert gamma <= 2 * omega**2 * tau
    if 2 * omega * tau > 1e-4:
        assert nu < 2 * omega
        assert gamma < 2 * omega**2 * tau


@settings(max_examples=100, deadline=None)
@given(st.floats(1e3, 1e6), st.floats(1e-9, 1e-5), st.floats(1.01, 3.0))
def test_gamma_nu_monotone(omega, tau, k):
    g0, n0 = gamma_nu_exact(omega, tau)
    g1, n1 = gamma_nu_exact(omega * k, tau)
    assert g1 > g0 and n1 > n0
    # in tau the rate peaks near 2*omega*tau = 1.98; monotone only below that
    if 2 * omega * tau * k < 1.98:
        g2, _ = gamma_nu_exact(omega, tau * k)
        assert g2 > g0


@settings(max_examples=200, deadline=None)
@given(st.floats(1e3, 1e6), st.floats(0, 1e-5), st.floats(0, 1e-3), st.integers(0, 16))
def test_probabilities_in_unit_interval(omega, tau, t, n):
    p = damped_rabi_probability(omega, tau, t)
    q = ion_probability(n, t, tau, ion(), mode="exact")
    r = ion_probability(n, t, tau, ion(), mode="small-tau")
    for v in (p, q, r, vacuum_rabi_probability(omega, t)):
        assert 0.0 <= v <= 1.0


@pytest.mark.parametrize("n", range(12))
@pytest.mark.parametrize("x", [0.0, 0.040804, 0.3, 1.0])
def test_laguerre_matches_scipy(n, x):
    assert laguerre_assoc(n, 1, x) == pytest.approx(eval_genlaguerre(n, 1, x), rel=1e-13, abs=1e-14)


def test_laguerre_closed_forms():
    x = 0.0408
    assert laguerre_assoc(0, 1, 7.3) == 1.0
    assert laguerre_assoc(1, 1, x) == pytest.approx(2 - x, rel=1e-15)
    assert laguerre_assoc(2, 1, x) == pytest.approx(3 - 3 * x + x * x / 2, rel=1e-15)
    assert laguerre_assoc(1, 1, x) == pytest.approx(1.9592, abs=1e-12)
    assert laguerre_assoc(2, 1, x) == pytest.approx(2.8784, abs=1e-4)


def test_ion_rabi_ground():
    p = IonTrapParams(1e6, ETA, 3)
    assert ion_rabi_frequency(p, 0) == pytest.approx(1e6 * ETA * math.exp(-(ETA**2) / 2), rel=1e-15)


def test_ion_rabi_ratios():
    p = ion()
    w0 = ion_rabi_frequency(p, 0)
    assert w0 == pytest.approx(W_0, rel=1e-14)
    assert ion_rabi_frequency(p, 1) / w0 == pytest.approx((2 - ETA**2) / math.sqrt(2), rel=1e-14)
    assert ion_rabi_frequency(p, 1) / w0 == pytest.approx(1.385, abs=1e-3)
    r16 = ion_rabi_frequency(p, 16) / w0
    assert r16 == pytest.approx(eval_genlaguerre(16, 1, ETA**2) / math.sqrt(17), rel=1e-12)
    assert r16 == pytest.approx(2.91, abs=0.01)
    assert abs(r16 / 17**0.35 - 1) < 0.10


def test_lamb_dicke_limit():
    p = ion(eta=0.01)
    w0 = ion_rabi_frequency(p, 0)
    for n in range(17):
        assert ion_rabi_frequency(p, n) / w0 == pytest.approx(math.sqrt(n + 1), rel=2e-3)


def test_ion_probability_limits():
    p = ion()
    assert ion_probability(3, 0.0, 1.706e-8, p) == 1.0
    assert ion_probability(3, 1.0, 1.706e-8, p) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("n", [0, 5, 16])
def test_ion_probability_matches_averaged_doublet(n):
    p = ion()
    tau = 1.706e-8
    d = ion_doublet(p, n)
    for t in np.linspace(0, 20e-6, 9):
        rho = averaged_propagate(d.initial_state(0), d.generator(), GammaTimeLaw(t, tau))
        assert abs(rho.population(0) - ion_probability(n, t, tau, p)) < 1e-9


def test_doublet_reduction_unitary():
    p = ion()
    for n in (0, 7):
        d = ion_doublet(p, n)
        for t in np.linspace(0, 20e-6, 11):
            rho = evolve_unitary(d.initial_state(0), d.generator(), t)
            assert abs(rho.population(0) - ion_probability(n, t, 0.0, p)) < 1e-12


def test_small_tau_mode():
    p = ion()
    tau = 1.706e-8
    w = ion_rabi_frequency(p, 2)
    t = 7e-6
    expected = 0.5 * (1 + math.exp(-2 * w * w * tau * t) * math.cos(2 * w * t))
    assert ion_probability(2, t, tau, p, mode="small-tau") == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValueError):
        ion_probability(2, t, tau, p, mode="bogus")


def test_sideband_generator_blocks():
    p = ion(n_max=3)
    g = ion_sideband_generator(p)
    s = spectral_decompose(g)
    rabis = sorted([ion_rabi_frequency(p, n) for n in range(4)] + [-ion_rabi_frequency(p, n) for n in range(4)])
    np.testing.assert_allclose(s.eigenvalues, rabis, rtol=1e-12)


def test_gamma_n_predicted():
    p = ion()
    assert gamma_n_predicted(p, 1.706e-8, 0) == pytest.approx(1.19e4, rel=1e-3)
    w0 = ion_rabi_frequency(p, 0)
    for n in range(17):
        ratio = gamma_n_predicted(p, 1.706e-8, n) / gamma_n_predicted(p, 1.706e-8, 0)
        assert ratio == pytest.approx((ion_rabi_frequency(p, n) / w0) ** 2, rel=1e-14)


def test_param_validation():
    with pytest.raises(ValueError):
        IonTrapParams(1.0, 1.5)
    with pytest.raises(ValueError):
        IonTrapParams(1.0, 0.2, delta=1.0, omega_z=2.0)
    assert IonTrapParams(1.0, 0.2, omega_z=3.0).delta == 3.0
    with pytest.raises(ValueError):
        CavityQedParams(0.0)
    with pytest.raises(ValueError):
        DoubletModel(-1.0)
    with pytest.raises(ValueError):
        ion_rabi_frequency(ion(n_max=2), 3)
