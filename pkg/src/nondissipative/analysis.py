"""Damped-cosine and power-law fits, and estimators for the fluctuation time."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

__all__ = [
    "FitError",
    "TimeSeries",
    "DampedCosineFit",
    "PowerLawFit",
    "damped_cosine",
    "fit_damped_cosine",
    "fit_power_law",
    "estimate_tau_small",
    "estimate_tau_exact",
    "transit_time_spread",
]


class FitError(RuntimeError):
    """A fit or root search failed. ``last`` holds the final iterate, if any."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True, eq=False)
class TimeSeries:
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != y.shape:
            raise ValueError("t and values must be 1-D and the same length")
        if t.size < 8:
            raise ValueError(f"need at least 8 points, got {t.size}")
        if np.any(np.diff(t) <= 0):
            raise ValueError("t must be strictly ascending")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", y)

    @classmethod
    def from_pairs(cls, points):
        arr = np.asarray(points, dtype=float)
        return cls(arr[:, 0], arr[:, 1])


@dataclass(frozen=True)
class DampedCosineFit:
    gamma: float
    nu: float
    amplitude: float
    offset: float
    sign: int
    rms_residual: float
    iterations: int = 0

    def __call__(self, t):
        return damped_cosine(t, self.gamma, self.nu, self.amplitude, self.offset, self.sign)

    def as_dict(self):
        return {
            "gamma": self.gamma,
            "nu": self.nu,
            "amplitude": self.amplitude,
            "offset": self.offset,
            "sign": self.sign,
            "rms_residual": self.rms_residual,
        }


@dataclass(frozen=True)
class PowerLawFit:
    prefactor: float
    exponent: float
    max_rel_dev: float

    def __call__(self, x):
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent

    def as_dict(self):
        return {"prefactor": self.prefactor, "exponent": self.exponent, "max_rel_dev": self.max_rel_dev}


def damped_cosine(t, gamma, nu, amplitude, offset, sign=1):
    t = np.asarray(t, dtype=float)
    return offset + sign * amplitude * np.exp(-gamma * t) * np.cos(nu * t)


def _fourier_peak(t, y):
    """Angular frequency of the dominant non-DC spectral peak."""
    n = t.size
    grid = np.linspace(t[0], t[-1], n)
    yu = np.interp(grid, t, y)
    yu = yu - yu.mean()
    dt = grid[1] - grid[0]
    nfft = 1 << int(math.ceil(math.log2(16 * n)))
    spec = np.abs(np.fft.rfft(yu, nfft))
    freqs = np.fft.rfftfreq(nfft, dt)
    k = int(np.argmax(spec))
    if k == 0 or spec[k] <= 1e-12 * max(np.abs(yu).max(), 1e-300) * n:
        raise FitError("no oscillation detected: spectral peak at zero frequency")
    if 0 < k < spec.size - 1:
        a, b, c = np.log(spec[k - 1 : k + 2] + 1e-300)
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    return 2 * np.pi * (freqs[k] + shift * (freqs[1] - freqs[0]))


def _envelope_rate(t, y, offset):
    """Decay rate from a log-linear fit through the local extrema of ``|y - offset|``."""
    r = np.abs(y - offset)
    idx = [i for i in range(1, r.size - 1) if r[i] >= r[i - 1] and r[i] > r[i + 1] and r[i] > 0]
    if len(idx) < 2:
        return 0.0
    slope = np.polyfit(t[idx], np.log(r[idx]), 1)[0]
    return max(-slope, 0.0)


def fit_damped_cosine(series: TimeSeries, xtol=1e-10, max_iter=200) -> DampedCosineFit:
    """Least-squares fit of ``offset + sign*amplitude*exp(-gamma t)*cos(nu t)``.

    The frequency is seeded from the Fourier peak and the rate from the
    extrema envelope; a Levenberg-Marquardt refinement (MINPACK via scipy)
    then runs in time units scaled to the series span. ``sign`` is fixed from
    the first point relative to the initial offset.
    """
    if not isinstance(series, TimeSeries):
        series = TimeSeries.from_pairs(series)
    t, y = series.t, series.values
    span = t[-1] - t[0]
    s = t / span

    offset0 = float(y.mean())
    sign = 1 if y[0] >= offset0 else -1
    nu0 = _fourier_peak(t, y) * span
    gamma0 = _envelope_rate(t, y, offset0) * span
    amp0 = max(abs(y[0] - offset0), 0.5 * (y.max() - y.min()), 1e-12)

    def resid(p):
        g, nu, a, c = p
        return c + sign * a * np.exp(-g * s) * np.cos(nu * s) - y

    best = None
    for scale in (1.0, 0.98, 1.02, 0.95, 1.05):
        p0 = np.array([gamma0, nu0 * scale, amp0, offset0])
        try:
            res = least_squares(resid, p0, method="lm", xtol=xtol, ftol=1e-15, gtol=1e-15, max_nfev=max_iter * 5)
        except ValueError as exc:
            raise FitError(str(exc), last=p0) from exc
        if best is None or res.cost < best.cost:
            best = res
        if res.success and math.sqrt(2 * res.cost / y.size) < 1e-9 * max(np.ptp(y), 1e-300):
            break
    if best.status <= 0:
        raise FitError(f"damped cosine fit did not converge: {best.message}", last=best.x / [span, span, 1, 1])

    g, nu, a, c = best.x
    sgn = sign
    if a < 0:
        a, sgn = -a, -sgn
    if nu < 0:
        nu = -nu
    gamma = g / span
    if gamma < 0:
        if abs(g) < 1e-8:
            gamma = 0.0
        else:
            raise FitError(f"fitted oscillation grows (gamma = {gamma:.3e} 1/s)", last=best.x)
    rms = math.sqrt(np.mean(best.fun**2))
    return DampedCosineFit(float(gamma), float(nu / span), float(a), float(c), int(sgn), rms, int(best.nfev))


def fit_power_law(pairs) -> PowerLawFit:
    """Ordinary least squares of ``log(value)`` against ``log(n + 1)``.

    ``pairs`` holds ``(n_plus_1, value)`` rows.
    """
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise ValueError("need at least 3 (n_plus_1, value) pairs")
    x, v = arr[:, 0], arr[:, 1]
    if np.any(x <= 0) or np.any(v <= 0):
        raise ValueError("power-law fit requires positive abscissae and values")
    exponent, log_pre = np.polyfit(np.log(x), np.log(v), 1)
    fitted = np.exp(log_pre) * x**exponent
    return PowerLawFit(float(np.exp(log_pre)), float(exponent), float(np.max(np.abs(fitted / v - 1.0))))


def estimate_tau_small(gamma, omega):
    """Invert ``gamma = 2 omega^2 tau``."""
    if gamma < 0 or omega <= 0:
        raise ValueError("need gamma >= 0 and omega > 0")
    return gamma / (2.0 * omega**2)


def _peak_x():
    # maximiser of log(1 + x^2)/x: 2x^2/(1+x^2) = log(1+x^2)
    lo, hi = 1.0, 3.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 2 * mid * mid / (1 + mid * mid) - math.log1p(mid * mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


_X_PEAK = _peak_x()


def estimate_tau_exact(gamma, omega, rtol=1e-12):
    """Smallest ``tau`` with ``log(1 + 4 omega^2 tau^2)/(2 tau) = gamma``, by bisection.

    The left-hand side rises from 0, peaks near ``2 omega tau = 1.98`` and
    then falls, so the small-``tau`` branch is bracketed by
    ``[gamma/(2 omega^2), min(1e3 gamma/(2 omega^2), tau_peak)]``.
    """
    if gamma <= 0 or omega <= 0:
        raise ValueError("need gamma > 0 and omega > 0")

    def f(tau):
        return math.log1p(4 * omega * omega * tau * tau) / (2 * tau) - gamma

    lo = estimate_tau_small(gamma, omega)
    hi = min(1e3 * lo, _X_PEAK / (2 * omega))
    if hi <= lo or f(hi) < 0:
        raise FitError(
            f"no tau reproduces gamma = {gamma:.4g} 1/s at omega = {omega:.4g} rad/s "
            f"(maximum reachable rate is {f(_X_PEAK / (2 * omega)) + gamma:.4g} 1/s); "
            "use estimate_tau_small"
        )
    if f(lo) >= 0:
        return lo
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def transit_time_spread(waist, v_mean, frac_v):
    """Mean transit time ``sqrt(pi) w / v`` and its spread ``t * dv/v``."""
    if waist <= 0 or v_mean <= 0 or frac_v < 0:
        raise ValueError("waist and v_mean must be > 0, frac_v >= 0")
    t_mean = math.sqrt(math.pi) * waist / v_mean
    return t_mean, t_mean * frac_v
