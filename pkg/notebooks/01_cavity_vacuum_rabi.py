"""Damped vacuum Rabi oscillation of an atom in a resonant cavity.

Walks through the averaged propagator on the Jaynes-Cummings model, the
closed-form decay rate and frequency, and the inversion from a measured
decay time back to the time-averaging parameter tau.
"""
import numpy as np

from nondissipative import (
    CavityQedParams,
    GammaTimeLaw,
    averaged_propagate,
    estimate_tau_exact,
    estimate_tau_small,
    gamma_nu_exact,
    jc_hamiltonian,
    jc_index,
    pure_state,
    spectral_decompose,
    transit_time_spread,
    vacuum_rabi_probability,
)

# %%
# Coupling of 25 kHz, truncated at two photons so the vacuum doublet sits
# inside a larger Hilbert space.
omega_r = 2 * np.pi * 25e3
params = CavityQedParams(omega_r, n_max=2)
g = jc_hamiltonian(params)
spec = spectral_decompose(g)
print("dressed energies / Omega_R:", np.round(spec.eigenvalues / omega_r, 6))

# %%
# Start in |e,0> and watch the population of |g,1>.
rho0 = pure_state(g.dim, jc_index("e", 0, params.n_max))
target = jc_index("g", 1, params.n_max)
tau = 5.066e-7
for t in np.linspace(0, 100e-6, 11):
    p_avg = averaged_propagate(rho0, g, GammaTimeLaw(t, tau), spec=spec).population(target) if t > 0 else 0.0
    print(f"t = {t * 1e6:6.1f} us   unitary {vacuum_rabi_probability(omega_r, t):.4f}   averaged {p_avg:.4f}")

# %%
# Decay rate and oscillation frequency of the averaged signal. The
# frequency is pulled slightly below 2*Omega_R.
gamma, nu = gamma_nu_exact(omega_r, tau)
print(f"gamma = {gamma:.5g} 1/s  (1/gamma = {1e6 / gamma:.2f} us)")
print(f"nu / 2 Omega_R = {nu / (2 * omega_r):.5f}")

# %%
# Going the other way: which tau reproduces a 40 us decay time?
gamma_meas = 1 / 40e-6
print(f"tau (leading order) = {estimate_tau_small(gamma_meas, omega_r):.4e} s")
print(f"tau (exact rate)    = {estimate_tau_exact(gamma_meas, omega_r):.4e} s")

# %%
# For comparison, the spread of atomic transit times through a 6 mm waist
# at 300 m/s with a 1% velocity spread.
t_mean, dt = transit_time_spread(0.006, 300.0, 0.01)
print(f"transit time {t_mean * 1e6:.2f} us, spread {dt * 1e9:.1f} ns")
