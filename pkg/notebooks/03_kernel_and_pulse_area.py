"""The Gamma kernel over evolution times, and its pulse-area counterpart.

The laboratory time t maps to a distribution of effective evolution times
with mean t and variance t*tau. Rescaling by a Rabi frequency gives the
distribution of pulse areas.
"""
import math

import numpy as np

from nondissipative import (
    GammaTimeLaw,
    PulseAreaLaw,
    area_moments,
    area_pdf,
    gamma_pdf,
    kernel_moments,
    sample_times,
)

# %%
# At t = tau the kernel is a plain exponential.
tau = 2e-7
x = np.linspace(0, 5 * tau, 6)
print(np.c_[x / tau, gamma_pdf(GammaTimeLaw(tau, tau), x) * tau, np.exp(-x / tau)])

# %%
# Moments by quadrature against the closed forms, for several t/tau.
for ratio in (0.5, 1, 10, 100):
    law = GammaTimeLaw(ratio * tau, tau)
    m = kernel_moments(law)
    print(
        f"t/tau = {ratio:5g}   mean/t = {m['mean'] / law.t:.12f}   "
        f"var/(t tau) = {m['variance'] / (law.t * tau):.12f}   skew = {m['skewness']:.6f} "
        f"(2/sqrt(t/tau) = {2 / math.sqrt(ratio):.6f})"
    )

# %%
# Seeded samples reproduce the same moments.
law = GammaTimeLaw(3e-6, tau)
s = sample_times(law, 200_000, seed=7)
print(f"sample mean/t = {s.mean() / law.t:.4f}, sample var/(t tau) = {s.var() / (law.t * tau):.4f}")

# %%
# Pulse area for a 1 us pulse at 94 kHz: the relative spread is sqrt(tau/t).
omega = 2 * np.pi * 94e3
area = PulseAreaLaw(1e-6, 1.706e-8, omega)
mean, var = area_moments(area)
print(f"area mean {mean:.4f} rad, std {math.sqrt(var):.4f} rad, relative {math.sqrt(var) / mean:.3f}")
a = np.linspace(0.2, 1.0, 5)
print(np.c_[a, area_pdf(area, a), gamma_pdf(GammaTimeLaw(1e-6, 1.706e-8), a / omega) / omega])
