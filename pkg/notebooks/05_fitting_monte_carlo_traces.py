"""Fitting a Monte Carlo averaged trace and recovering tau from the fit.

Sampled evolution times give a noisy version of the averaged population.
A damped-cosine fit pulls out the decay rate, and inverting the rate
formula returns the time-averaging parameter.
"""
import numpy as np

from nondissipative import (
    DoubletModel,
    GammaTimeLaw,
    TimeSeries,
    averaged_propagate_mc,
    estimate_tau_exact,
    fit_damped_cosine,
    gamma_nu_exact,
    spectral_decompose,
)

# %%
omega_r = 2 * np.pi * 25e3
tau = 5.066e-7
d = DoubletModel(omega_r)
g, rho0 = d.generator(), d.initial_state(0)
spec = spectral_decompose(g)
t = np.linspace(0, 100e-6, 201)
y = np.zeros_like(t)
for k in range(1, t.size):
    y[k] = averaged_propagate_mc(rho0, g, GammaTimeLaw(t[k], tau), 20_000, seed=k, spec=spec).population(1)

# %%
fit = fit_damped_cosine(TimeSeries(t, y))
gamma, nu = gamma_nu_exact(omega_r, tau)
print(f"fitted gamma {fit.gamma:.5g} vs {gamma:.5g};  fitted nu {fit.nu:.6g} vs {nu:.6g}")
print(f"rms residual {fit.rms_residual:.2e}")

# %%
print(f"tau recovered from the fitted rate: {estimate_tau_exact(fit.gamma, omega_r):.4e} s (true {tau:.4e} s)")
