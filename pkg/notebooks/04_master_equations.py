"""All-orders logarithmic master equation versus its double-commutator truncation.

On a doublet with Rabi frequency Omega the exact averaged dynamics decays
at ln(1 + 4 Omega^2 tau^2) / (2 tau). The truncated equation decays at
2 Omega^2 tau instead, which overshoots once Omega*tau is not small.
"""
import math

import numpy as np

from nondissipative import (
    DoubletModel,
    TimeSeries,
    fit_damped_cosine,
    integrate_me_generalized,
    integrate_me_second_order,
)

# %%
omega = 100.0
for x in (0.01, 0.1, 0.25, 0.5):
    tau = x / omega
    t = np.linspace(0, 10 / (2 * omega**2 * tau) if x < 0.1 else 0.1, 2001)
    d = DoubletModel(omega)
    rho0, g = d.initial_state(0), d.generator()
    second = integrate_me_second_order(rho0, g, tau, t).expectation(1)
    general = integrate_me_generalized(rho0, g, tau, t).expectation(1)
    f2 = fit_damped_cosine(TimeSeries(t, second))
    fg = fit_damped_cosine(TimeSeries(t, general))
    exact = math.log1p(4 * x * x) / (2 * tau)
    print(
        f"Omega*tau = {x:5.2f}   fitted rates: truncated {f2.gamma:9.4g}  all-orders {fg.gamma:9.4g}"
        f"  (closed form {exact:9.4g})   ratio {f2.gamma / fg.gamma:.4f}"
    )

# %%
# The all-orders equation leaves energy-basis populations untouched and
# keeps the trace at one along the whole trajectory.
traj = integrate_me_generalized(DoubletModel(omega).initial_state(0), DoubletModel(omega).generator(), 0.5 / omega, np.linspace(0, 0.05, 6))
for t, rho in zip(traj.times, traj.states):
    print(f"t = {t:.3f}   trace = {np.trace(rho.matrix).real:.15f}   P1 = {rho.population(1):.6f}")
