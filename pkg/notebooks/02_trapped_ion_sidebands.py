"""Blue-sideband Rabi oscillations of a trapped ion prepared in Fock states.

Each |down, n> couples only to |up, n+1>, so the dynamics splits into
independent doublets whose Rabi frequencies follow from Laguerre
polynomials of eta**2. Averaging over the evolution time damps each
doublet at a rate that grows with n.
"""
import numpy as np

from nondissipative import (
    GammaTimeLaw,
    IonTrapParams,
    averaged_propagate,
    estimate_tau_small,
    fit_power_law,
    gamma_n_predicted,
    ion_doublet,
    ion_probability,
    ion_rabi_frequency,
    omega_from_omega0,
)

# %%
# Choose the bare coupling so that the n = 0 sideband Rabi frequency is
# 94 kHz at eta = 0.202, then fix tau from the measured n = 0 decay rate.
eta = 0.202
omega0 = 2 * np.pi * 94e3
p = IonTrapParams(omega_from_omega0(omega0, eta), eta, n_max=16)
tau = estimate_tau_small(11.9e3, omega0)
print(f"tau = {tau:.4e} s")

# %%
rows = []
for n in range(p.n_max + 1):
    w = ion_rabi_frequency(p, n)
    rows.append((n, w / omega0, gamma_n_predicted(p, tau, n)))
    print(f"n = {n:2d}   Omega_n/Omega_0 = {w / omega0:.4f}   gamma_n = {rows[-1][2]:.4g} 1/s")

# %%
# Power-law fits in n + 1. Outside the Lamb-Dicke regime the exponent sits
# well below 1/2.
x = np.arange(1, p.n_max + 2)
om = fit_power_law(np.column_stack([x, [r[1] for r in rows]]))
ga = fit_power_law(np.column_stack([x, [r[2] for r in rows]]))
print(f"Omega_n ~ (n+1)^{om.exponent:.3f}  (max deviation {100 * om.max_rel_dev:.1f}%)")
print(f"gamma_n ~ (n+1)^{ga.exponent:.3f}")

# %%
# The closed-form ground-state probability agrees with averaging the
# doublet density matrix directly.
d = ion_doublet(p, 3)
for t in (2e-6, 8e-6, 15e-6):
    direct = averaged_propagate(d.initial_state(0), d.generator(), GammaTimeLaw(t, tau)).population(0)
    print(f"t = {t * 1e6:4.1f} us   P_down closed {ion_probability(3, t, tau, p):.6f}   averaged {direct:.6f}")
