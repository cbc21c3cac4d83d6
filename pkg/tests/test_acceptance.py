"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` and read the
"acceptance criteria" section of the terminal summary.
"""

import math

import numpy as np

from nondissipative.analysis import TimeSeries, estimate_tau_small, fit_damped_cosine, fit_power_law
from nondissipative.averaging import (
    GammaTimeLaw,
    PulseAreaLaw,
    area_moments,
    area_pdf,
    averaged_propagate,
    averaged_propagate_mc,
    averaging_factors,
    gamma_pdf,
    integrate_me_generalized,
    integrate_me_second_order,
    kernel_moments,
)
from nondissipative.models import (
    DoubletModel,
    IonTrapParams,
    damped_rabi_probability,
    gamma_n_predicted,
    gamma_nu_exact,
    ion_rabi_frequency,
    omega_from_omega0,
)
from nondissipative.qcore import (
    DensityMatrix,
    HermitianGenerator,
    bohr_frequencies,
    evolve_unitary,
    spectral_decompose,
    to_eigenbasis,
)

W_R = 2 * np.pi * 25e3
W_0 = 2 * np.pi * 94e3
GAMMA_CAVITY = 1 / 40e-6
GAMMA_ION = 11.9e3


def test_01_cavity_tau_estimate(criterion):
    tau = estimate_tau_small(GAMMA_CAVITY, W_R)
    ok = abs(tau / 5.07e-7 - 1) <= 1e-3 and abs(tau / 0.5e-6 - 1) <= 0.05
    criterion(1, ok, f"tau = {tau:.4e} s (target 5.07e-7, within 5% of 0.5e-6)")


def test_02_frequency_shift(criterion):
    tau = estimate_tau_small(GAMMA_CAVITY, W_R)
    _, nu = gamma_nu_exact(W_R, tau)
    r = nu / (2 * W_R)
    criterion(2, 0.985 <= r <= 1.0, f"nu/2Omega_R = {r:.5f} (band [0.985, 1.0], shift {100 * (1 - r):.2f}%)")


def test_03_oracle_equivalence(criterion):
    tau = 5.066e-7
    d = DoubletModel(W_R)
    g, rho0 = d.generator(), d.initial_state(0)
    spec = spectral_decompose(g)
    t = np.linspace(0, 100e-6, 101)
    closed = damped_rabi_probability(W_R, tau, t)
    mc = np.array(
        [0.0]
        + [
            averaged_propagate_mc(rho0, g, GammaTimeLaw(tk, tau), 10**5, seed=k, spec=spec).population(1)
            for k, tk in enumerate(t[1:], start=1)
        ]
    )
    me = integrate_me_generalized(rho0, g, tau, t, spec=spec).expectation(1)
    d_mc = np.abs(mc - closed).max()
    d_me = np.abs(me - closed).max()
    criterion(3, d_mc <= 5e-3 and d_me <= 1e-8, f"max|mc-closed| = {d_mc:.2e} (<=5e-3), max|me-closed| = {d_me:.2e} (<=1e-8)")


def _fitted_rates(omega, tau, t):
    d = DoubletModel(omega)
    rho0, g = d.initial_state(0), d.generator()
    second = integrate_me_second_order(rho0, g, tau, t).expectation(1)
    general = integrate_me_generalized(rho0, g, tau, t).expectation(1)
    return fit_damped_cosine(TimeSeries(t, second)).gamma, fit_damped_cosine(TimeSeries(t, general)).gamma


def test_04_second_order_departure(criterion):
    omega = 100.0
    g2, gg = _fitted_rates(omega, 0.5 / omega, np.linspace(0, 0.1, 1001))
    big = g2 / gg
    g2s, ggs = _fitted_rates(omega, 0.01 / omega, np.linspace(0, 2.0, 4001))
    small = g2s / ggs
    ok = big >= 1.30 and abs(big - 0.5 / (math.log(2) / 2)) < 1e-4 and abs(small - 1) <= 1e-3
    criterion(4, ok, f"rate ratio {big:.4f} at Omega*tau=0.5 (>=1.30), {small:.5f} at Omega*tau=0.01 (within 0.1%)")


def test_05_ion_ground_rate(criterion):
    eta = 0.202
    tau = estimate_tau_small(GAMMA_ION, W_0)
    p = IonTrapParams(omega_from_omega0(W_0, eta), eta, 16)
    g0 = gamma_n_predicted(p, tau, 0)
    ok = abs(g0 / GAMMA_ION - 1) <= 1e-12 and 1.4e-8 <= tau <= 1.8e-8
    criterion(5, ok, f"gamma_0 = {g0:.10g} 1/s (round trip of 1.19e4), tau = {tau:.4e} s in [1.4e-8, 1.8e-8]")


def _omega_exponent(eta):
    p = IonTrapParams(omega_from_omega0(W_0, eta), eta, 16)
    r = np.array([ion_rabi_frequency(p, n) / W_0 for n in range(17)])
    x = np.arange(1, 18)
    return fit_power_law(np.column_stack([x, r])), fit_power_law(np.column_stack([x, r**2]))


def test_06_power_laws(criterion):
    om, ga = _omega_exponent(0.202)
    ld, _ = _omega_exponent(0.01)
    ok = (
        0.32 <= om.exponent <= 0.40
        and om.max_rel_dev <= 0.10
        and 0.64 <= ga.exponent <= 0.80
        and abs(ld.exponent - 0.5) <= 0.01
    )
    criterion(
        6,
        ok,
        f"Omega_n exponent {om.exponent:.4f} (max dev {om.max_rel_dev:.3f}), "
        f"gamma_n exponent {ga.exponent:.4f}, Lamb-Dicke exponent {ld.exponent:.4f}",
    )


def test_07_kernel_properties(criterion):
    t, tau = 3e-6, 2e-7
    m = kernel_moments(GammaTimeLaw(t, tau))
    x = np.linspace(0, 10 * tau, 201)
    expo = np.max(np.abs(gamma_pdf(GammaTimeLaw(tau, tau), x) * tau - np.exp(-x / tau)))
    skew = kernel_moments(GammaTimeLaw(100 * tau, tau))["skewness"]
    ok = (
        abs(m["normalization"] - 1) <= 1e-9
        and abs(m["mean"] / t - 1) <= 1e-8
        and abs(m["variance"] / (t * tau) - 1) <= 1e-8
        and expo <= 1e-12
        and abs(skew - 0.2) <= 1e-6
    )
    criterion(
        7,
        ok,
        f"norm-1 = {m['normalization'] - 1:.1e}, mean/t-1 = {m['mean'] / t - 1:.1e}, "
        f"var/(t tau)-1 = {m['variance'] / (t * tau) - 1:.1e}, exp dev = {expo:.1e}, skew(100 tau) = {skew:.8f}",
    )


def _random_case(rng):
    d = int(rng.integers(2, 7))
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    g = HermitianGenerator(1e5 * (a + a.conj().T) / 2)
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = b @ b.conj().T
    return DensityMatrix(m / np.trace(m)), g


def test_08_superoperator_properties(criterion):
    rng = np.random.default_rng(20240608)
    worst = dict(trace=0.0, herm=0.0, eig=0.0, semigroup=0.0, unitary=0.0)
    diag_exact = True
    for _ in range(200):
        rho0, g = _random_case(rng)
        spec = spectral_decompose(g)
        tau = 10 ** rng.uniform(-8, -5)
        t1, t2 = rng.uniform(0, 5e-5, size=2)
        one = averaged_propagate(rho0, g, GammaTimeLaw(t1 + t2, tau), spec=spec)
        mid = averaged_propagate(rho0, g, GammaTimeLaw(t1, tau), spec=spec)
        two = averaged_propagate(mid, g, GammaTimeLaw(t2, tau), spec=spec)
        m = one.matrix
        worst["trace"] = max(worst["trace"], abs(np.trace(m) - 1))
        worst["herm"] = max(worst["herm"], np.abs(m - m.conj().T).max())
        worst["eig"] = min(worst["eig"], np.linalg.eigvalsh(m)[0])
        worst["semigroup"] = max(worst["semigroup"], np.abs(one.matrix - two.matrix).max())

        f = averaging_factors(bohr_frequencies(spec), t1 + t2, tau)
        x = to_eigenbasis(rho0, spec)
        diag_exact &= bool(np.all(np.diag(f) == 1.0) and np.array_equal(np.diag(x * f), np.diag(x)))

        tiny = averaged_propagate(rho0, g, GammaTimeLaw(t1 + t2, 1e-15 * (t1 + t2)), spec=spec)
        unitary = evolve_unitary(rho0, g, t1 + t2, spec=spec)
        worst["unitary"] = max(worst["unitary"], np.abs(tiny.matrix - unitary.matrix).max())
    ok = (
        worst["trace"] <= 1e-12
        and worst["herm"] <= 1e-12
        and worst["eig"] >= -1e-10
        and diag_exact
        and worst["semigroup"] <= 1e-12
        and worst["unitary"] <= 1e-8
    )
    criterion(
        8,
        ok,
        f"200 cases: trace {worst['trace']:.1e}, herm {worst['herm']:.1e}, min eig {worst['eig']:.1e}, "
        f"diag exact {diag_exact}, semigroup {worst['semigroup']:.1e}, tau->0 {worst['unitary']:.1e}",
    )


def test_09_fit_round_trip(criterion):
    tau = 5.066e-7
    gamma, nu = gamma_nu_exact(W_R, tau)
    t = np.linspace(0, 100e-6, 400)
    fit = fit_damped_cosine(TimeSeries(t, damped_rabi_probability(W_R, tau, t)))
    late = damped_rabi_probability(W_R, tau, 2e-3)
    dg, dn = abs(fit.gamma / gamma - 1), abs(fit.nu / nu - 1)
    ok = dg <= 1e-6 and dn <= 1e-6 and abs(late - 0.5) <= 1e-6 and abs(fit.offset - 0.5) <= 1e-6
    criterion(9, ok, f"rel err gamma {dg:.1e}, nu {dn:.1e}; P(2 ms) = {late:.9f}, fitted offset {fit.offset:.9f}")


def test_10_pulse_area(criterion):
    t, tau = 1e-6, 1.71e-8
    law = PulseAreaLaw(t, tau, W_0)
    a = np.linspace(0, 3 * W_0 * t, 301)[1:]
    lhs = area_pdf(law, a)
    rhs = gamma_pdf(GammaTimeLaw(t, tau), a / W_0) / W_0
    cov = np.max(np.abs(lhs - rhs) / rhs.max())
    _, var = area_moments(law)
    qvar = kernel_moments(law)["variance"]
    spread = math.sqrt(var) / (W_0 * t)
    ok = (
        cov <= 1e-12
        and abs(qvar / (W_0**2 * t * tau) - 1) <= 1e-8
        and abs(spread - math.sqrt(tau / t)) <= 1e-15
        and 0.10 <= spread <= 0.14
        and round(spread, 2) == 0.13
    )
    criterion(10, ok, f"change of variables dev {cov:.1e}, variance/(Omega^2 t tau) = {qvar / (W_0**2 * t * tau):.10f}, spread {spread:.4f}")
