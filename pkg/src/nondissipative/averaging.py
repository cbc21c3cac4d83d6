"""Averaging unitary evolution over a Gamma-distributed evolution time.

The laboratory time ``t`` and the fluctuation strength ``tau`` define a Gamma
law for the true evolution time with shape ``t/tau`` and scale ``tau``. Its
characteristic function turns the average of ``exp(-iLt')`` into the
closed-form propagator ``(1 + iL tau)^(-t/tau)``, which acts elementwise in
the eigenbasis of the generator.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .qcore import (
    DensityMatrix,
    HermitianGenerator,
    SpectralDecomposition,
    ValidationError,
    bohr_frequencies,
    from_eigenbasis,
    spectral_decompose,
    to_eigenbasis,
)

__all__ = [
    "RNG_ALGORITHM",
    "GammaTimeLaw",
    "PulseAreaLaw",
    "Trajectory",
    "IntegrationError",
    "gamma_pdf",
    "kernel_moments",
    "sample_gamma",
    "sample_times",
    "averaging_factors",
    "averaged_propagate",
    "averaged_propagate_mc",
    "mc_phase_average",
    "integrate_me_generalized",
    "integrate_me_second_order",
    "rk4_step",
    "area_pdf",
    "area_moments",
    "averaged_propagate_area",
]

RNG_ALGORITHM = "numpy PCG64 (SeedSequence[seed, chunk]) + Marsaglia-Tsang gamma rejection"
MC_CHUNK = 1 << 14


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GammaTimeLaw:
    """Gamma law of the evolution time: shape ``t/tau``, scale ``tau``."""

    t: float
    tau: float

    def __post_init__(self):
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise ValueError(f"t must be finite and >= 0, got {self.t}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be finite and > 0, got {self.tau}")
        if not math.isfinite(self.t / self.tau):
            raise ValueError("shape t/tau is not finite")

    @property
    def shape(self) -> float:
        return self.t / self.tau


@dataclass(frozen=True)
class PulseAreaLaw:
    """Gamma law of the pulse area ``A``: shape ``t/tau``, scale ``omega*tau``."""

    t: float
    tau: float
    omega: float

    def __post_init__(self):
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise ValueError(f"t must be finite and >= 0, got {self.t}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be finite and > 0, got {self.tau}")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be finite and > 0, got {self.omega}")

    @property
    def shape(self) -> float:
        return self.t / self.tau

    @property
    def scale(self) -> float:
        return self.omega * self.tau


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: list = field(default_factory=list)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if len(times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(times) < 0):
            raise ValueError("times must be ascending")
        object.__setattr__(self, "times", times)

    def __len__(self):
        return len(self.times)

    def expectation(self, index: int) -> np.ndarray:
        """Population of basis state ``index`` along the trajectory."""
        return np.array([s.matrix[index, index].real for s in self.states])


def _gamma_logpdf(x, shape, scale):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = x / scale
        out = -z + (shape - 1.0) * np.log(z) - math.log(scale) - gammaln(shape)
    # x = 0: the power term is 0**(shape-1)
    at_zero = x == 0
    if np.any(at_zero):
        if shape == 1.0:
            val = -math.log(scale)
        elif shape > 1.0:
            val = -np.inf
        else:
            val = np.inf
        out = np.where(at_zero, val, out)
    return out


def gamma_pdf(law: GammaTimeLaw, tprime):
    """Density of the true evolution time ``tprime`` (1/s).

    ``law.t == 0`` is the Dirac limit and is rejected; callers handle it.
    """
    if law.t == 0:
        raise ValueError("t = 0: the kernel is a Dirac delta at t' = 0 and has no density")
    tp = np.asarray(tprime, dtype=float)
    if np.any(tp < 0):
        raise ValueError("tprime must be >= 0")
    out = np.exp(_gamma_logpdf(tp, law.shape, law.tau))
    return float(out) if out.ndim == 0 else out


def area_pdf(law: PulseAreaLaw, a):
    """Density of the dimensionless pulse area ``a``."""
    if law.t == 0:
        raise ValueError("t = 0: the area law is a Dirac delta at A = 0 and has no density")
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("area must be >= 0")
    out = np.exp(_gamma_logpdf(a, law.shape, law.scale))
    return float(out) if out.ndim == 0 else out


def area_moments(law: PulseAreaLaw):
    """Mean ``omega*t`` and variance ``omega**2 * t * tau`` of the pulse area."""
    return law.omega * law.t, law.omega**2 * law.t * law.tau


def kernel_moments(law, rtol=1e-12):
    """Mean, variance and skewness of a time or area law, by quadrature.

    The integrals are taken in the standardised variable ``x/scale`` so that
    quad sees an O(1) integrand.
    """
    if law.t == 0:
        raise ValueError("t = 0 has no density")
    k = law.shape
    scale = law.scale if isinstance(law, PulseAreaLaw) else law.tau

    def pdf(z):
        return math.exp(float(_gamma_logpdf(z, k, 1.0)))

    def moment(f):
        # split at the mode so quad resolves the peak for large shapes
        pts = [0.0, max(k - 1.0, 0.0), k + 40.0 * math.sqrt(k) + 60.0]
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi > lo:
                total += integrate.quad(lambda z: f(z) * pdf(z), lo, hi, epsabs=0, epsrel=rtol, limit=400)[0]
        total += integrate.quad(lambda z: f(z) * pdf(z), pts[-1], np.inf, epsabs=0, epsrel=rtol, limit=400)[0]
        return total

    norm = moment(lambda z: 1.0)
    mean = moment(lambda z: z) / norm
    var = moment(lambda z: (z - mean) ** 2) / norm
    third = moment(lambda z: (z - mean) ** 3) / norm
    return {
        "normalization": norm,
        "mean": mean * scale,
        "variance": var * scale**2,
        "skewness": third / var**1.5,
    }


def sample_gamma(shape: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-scale Gamma variates by Marsaglia-Tsang squeeze rejection.

    For ``shape < 1`` draws at ``shape + 1`` and multiplies by ``U**(1/shape)``.
    """
    if shape <= 0:
        raise ValueError(f"shape must be > 0, got {shape}")
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        m = int(need * 1.1) + 16
        x = rng.standard_normal(m)
        u = rng.random(m)
        v = (1.0 + c * x) ** 3
        ok = v > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            accept = ok & (
                (u < 1.0 - 0.0331 * x**4)
                | (np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(np.where(ok, v, 1.0))))
            )
        got = (d * v)[accept][:need]
        out[filled : filled + got.size] = got
        filled += got.size
    if boost:
        out *= rng.random(size) ** (1.0 / shape)
    return out


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), chunk])))


def _chunks(n):
    return [(k, min(MC_CHUNK, n - k * MC_CHUNK)) for k in range((n + MC_CHUNK - 1) // MC_CHUNK)]


def sample_times(law: GammaTimeLaw, n: int, seed: int) -> np.ndarray:
    """``n`` draws of the true evolution time, reproducible for a fixed seed.

    Draws are produced in fixed-size chunks, each from its own PCG64 stream
    keyed by ``(seed, chunk_index)``, so parallel evaluation reproduces the
    serial sequence.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if law.t == 0:
        return np.zeros(n)
    parts = [sample_gamma(law.shape, size, _chunk_rng(seed, k)) for k, size in _chunks(n)]
    return np.concatenate(parts) * law.tau


def averaging_factors(omega, t: float, tau: float):
    """Elementwise factor ``(1 + i*omega*tau)**(-t/tau)`` on the principal branch.

    ``omega`` may be an array of Bohr frequencies. ``tau == 0`` gives the
    unitary phase ``exp(-i*omega*t)``.
    """
    w = np.asarray(omega, dtype=float)
    if tau == 0:
        return np.exp(-1j * w * t)
    x = w * tau
    k = t / tau
    return np.exp(-k * (0.5 * np.log1p(x * x) + 1j * np.arctan2(x, 1.0)))


def _resolve(rho0, g, spec):
    if spec is None:
        if not isinstance(g, HermitianGenerator):
            g = HermitianGenerator(g)
        spec = spectral_decompose(g)
    if spec.dim != rho0.dim:
        raise ValidationError(f"dimension mismatch: state is {rho0.dim}, generator is {spec.dim}")
    return spec


def averaged_propagate(rho0: DensityMatrix, g, law: GammaTimeLaw, spec: SpectralDecomposition | None = None):
    """Closed-form time-averaged state ``V(t) rho0``; ``law.t == 0`` returns ``rho0``."""
    spec = _resolve(rho0, g, spec)
    if law.t == 0:
        return rho0
    f = averaging_factors(bohr_frequencies(spec), law.t, law.tau)
    return DensityMatrix._trusted(from_eigenbasis(to_eigenbasis(rho0, spec) * f, spec))


def mc_phase_average(omega, times: np.ndarray) -> np.ndarray:
    """Sample mean of ``exp(-i*omega*t')`` over the drawn times."""
    w = np.asarray(omega, dtype=float)
    flat = w.ravel()
    acc = np.zeros(flat.shape, dtype=complex)
    for start in range(0, len(times), 4096):
        tt = times[start : start + 4096]
        acc += np.exp(-1j * np.outer(tt, flat)).sum(axis=0)
    return (acc / len(times)).reshape(w.shape)


def averaged_propagate_mc(
    rho0: DensityMatrix,
    g,
    law: GammaTimeLaw,
    n_samples: int,
    seed: int,
    workers: int = 1,
    spec: SpectralDecomposition | None = None,
):
    """Monte-Carlo estimate of the averaged state.

    Averages exact unitary evolution over ``n_samples`` Gamma draws. Chunks
    are evaluated on ``workers`` threads and summed in chunk order, so the
    result does not depend on ``workers``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    spec = _resolve(rho0, g, spec)
    if law.t == 0:
        return rho0
    omega = bohr_frequencies(spec)

    def chunk_sum(item):
        k, size = item
        tt = sample_gamma(law.shape, size, _chunk_rng(seed, k)) * law.tau
        return mc_phase_average(omega, tt) * size

    chunks = _chunks(n_samples)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sums = list(pool.map(chunk_sum, chunks))
    else:
        sums = [chunk_sum(c) for c in chunks]
    f = np.sum(sums, axis=0) / n_samples
    # exact zeros of omega give factor 1 up to round-off; pin it
    f[omega == 0] = 1.0
    return DensityMatrix._trusted(from_eigenbasis(to_eigenbasis(rho0, spec) * f, spec))


def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D sequence")
    if t[0] != 0:
        raise ValueError("t_grid must start at 0")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly ascending")
    return t


def integrate_me_generalized(rho0: DensityMatrix, g, tau: float, t_grid, method: str = "exponential", spec=None) -> Trajectory:
    """Integrate the log-generator master equation on ``t_grid``.

    In the eigenbasis each coherence obeys
    ``d rho_mn/dt = -(1/tau) log(1 + i*w_mn*tau) rho_mn``.

    ``method="exponential"`` advances interval by interval with the exact
    exponential of the generator. ``method="dop853"`` hands the same linear
    system to an adaptive Runge-Kutta integrator (rtol 1e-12) instead.
    """
    t = _check_grid(t_grid)
    if tau <= 0:
        raise ValueError("tau must be > 0")
    spec = _resolve(rho0, g, spec)
    omega = bohr_frequencies(spec)
    rate = -np.log(1.0 + 1j * omega * tau) / tau
    x0 = to_eigenbasis(rho0, spec)

    if method == "exponential":
        states = [rho0]
        x = x0
        for dt in np.diff(t):
            x = x * np.exp(rate * dt)
            states.append(DensityMatrix._trusted(from_eigenbasis(x, spec)))
        return Trajectory(t, states)
    if method == "dop853":
        d = x0.shape[0]
        r = rate.ravel()

        def rhs(_, y):
            z = y[: d * d] + 1j * y[d * d :]
            dz = r * z
            return np.concatenate([dz.real, dz.imag])

        y0 = np.concatenate([x0.ravel().real, x0.ravel().imag])
        sol = integrate.solve_ivp(rhs, (t[0], t[-1]), y0, method="DOP853", t_eval=t, rtol=1e-12, atol=1e-14)
        if not sol.success:
            raise IntegrationError(sol.message)
        states = []
        for k in range(len(t)):
            z = (sol.y[: d * d, k] + 1j * sol.y[d * d :, k]).reshape(d, d)
            states.append(DensityMatrix._trusted(from_eigenbasis(z, spec)))
        return Trajectory(t, states)
    raise ValueError(f"unknown method {method!r}")


def rk4_step(f, y, h):
    """One classical fourth-order Runge-Kutta step for ``y' = f(y)``."""
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


MAX_SUBSTEPS = 10**9
# RK4 phase error per radian is about (h*w)**4/120
PHASE_STEP = 5e-3


def integrate_me_second_order(rho0: DensityMatrix, g, tau: float, t_grid, spec=None) -> Trajectory:
    """Fixed-step RK4 solution of the double-commutator dephasing equation.

    Solves ``d rho/dt = -i[G, rho] - (tau/2)[G, [G, rho]]``, the second-order
    truncation of the log generator. Every grid interval is split into equal
    substeps no longer than ``min(tau, 2*pi/w_max)/50`` (``2*pi/w_max/50`` when
    ``tau == 0``) and no longer than ``PHASE_STEP/w_max``.

    The right-hand side is diagonal in the eigenbasis of ``G``, so one RK4
    substep multiplies each coherence by the same complex amplification
    factor. That factor is obtained by running :func:`rk4_step` once on a
    vector of ones and then raised to the substep count.
    """
    t = _check_grid(t_grid)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    spec = _resolve(rho0, g, spec)
    omega = bohr_frequencies(spec)
    w_max = float(np.max(np.abs(omega)))
    lam = -1j * omega - 0.5 * tau * omega**2
    x = to_eigenbasis(rho0, spec)
    tr0 = np.trace(x).real

    if w_max == 0.0:
        return Trajectory(t, [rho0] * len(t))
    h_max = (min(tau, 2 * np.pi / w_max) if tau > 0 else 2 * np.pi / w_max) / 50.0
    h_max = min(h_max, PHASE_STEP / w_max)
    states = [rho0]
    for dt in np.diff(t):
        nsub = int(math.ceil(dt / h_max * (1 - 1e-12)))
        nsub = max(nsub, 1)
        h = dt / nsub
        if nsub > MAX_SUBSTEPS or h == 0.0 or t[-1] + h == t[-1]:
            raise IntegrationError(
                f"step size underflow: interval {dt:.3e} s needs {nsub} substeps of {h:.3e} s "
                f"(tau={tau:.3e} s, w_max={w_max:.3e} rad/s)"
            )
        amp = rk4_step(lambda y: lam * y, np.ones_like(lam), h)
        x = x * amp**nsub
        drift = abs(np.trace(x).real - tr0)
        if drift > 1e-9:
            raise IntegrationError(f"trace drift {drift:.3e} exceeds 1e-9")
        states.append(DensityMatrix._trusted(from_eigenbasis(x, spec)))
    return Trajectory(t, states)


def averaged_propagate_area(rho0: DensityMatrix, g_unit, law: PulseAreaLaw, spec=None):
    """Average over a Gamma-distributed pulse area.

    ``g_unit`` is the generator per unit Rabi frequency (dimensionless), so
    the evolution for area ``A`` is ``exp(-i g_unit A)``. The result equals
    :func:`averaged_propagate` with generator ``omega * g_unit``.
    """
    spec = _resolve(rho0, g_unit, spec)
    if law.t == 0:
        return rho0
    f = averaging_factors(bohr_frequencies(spec) * law.omega, law.t, law.tau)
    return DensityMatrix._trusted(from_eigenbasis(to_eigenbasis(rho0, spec) * f, spec))
