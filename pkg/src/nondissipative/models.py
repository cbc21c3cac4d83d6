"""Jaynes-Cummings vacuum Rabi oscillations and trapped-ion blue-sideband doublets.

All frequencies are angular (rad/s). Closed-form damped oscillation
predictions follow from the averaged propagator applied to a two-level
doublet whose Bohr frequencies are ``0`` and ``+-2*rabi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcore import DensityMatrix, HermitianGenerator

__all__ = [
    "CavityQedParams",
    "IonTrapParams",
    "DoubletModel",
    "jc_basis",
    "jc_index",
    "jc_hamiltonian",
    "vacuum_rabi_probability",
    "damped_rabi_probability",
    "gamma_nu_exact",
    "gamma_small_tau",
    "laguerre_assoc",
    "ion_rabi_frequency",
    "omega_from_omega0",
    "ion_doublet",
    "ion_sideband_generator",
    "ion_probability",
    "gamma_n_predicted",
]


@dataclass(frozen=True)
class CavityQedParams:
    omega_r: float
    n_max: int = 1

    def __post_init__(self):
        if not self.omega_r > 0:
            raise ValueError("omega_r must be > 0")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError("n_max must be an integer >= 1")


@dataclass(frozen=True)
class IonTrapParams:
    """Sideband model parameters.

    ``delta`` defaults to ``omega_z`` (blue sideband); when both are given
    they must agree.
    """

    omega: float
    eta: float
    n_max: int = 16
    delta: float | None = None
    omega_z: float | None = None
    phi: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be > 0")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValueError("n_max must be an integer >= 0")
        if self.delta is None and self.omega_z is not None:
            object.__setattr__(self, "delta", self.omega_z)
        elif self.omega_z is None and self.delta is not None:
            object.__setattr__(self, "omega_z", self.delta)
        elif self.delta is not None and not math.isclose(self.delta, self.omega_z, rel_tol=1e-12):
            raise ValueError("blue-sideband driving requires delta == omega_z")


@dataclass(frozen=True)
class DoubletModel:
    """Resonant two-level exchange ``rabi * (e^{i phi}|1><0| + h.c.)``."""

    rabi: float
    labels: tuple = ("0", "1")
    phi: float = 0.0

    def __post_init__(self):
        if not self.rabi > 0:
            raise ValueError("rabi must be > 0")

    def generator(self) -> HermitianGenerator:
        c = self.rabi * np.exp(1j * self.phi)
        return HermitianGenerator(np.array([[0.0, np.conj(c)], [c, 0.0]]))

    def initial_state(self, index: int = 0) -> DensityMatrix:
        m = np.zeros((2, 2), dtype=complex)
        m[index, index] = 1.0
        return DensityMatrix(m)


def jc_basis(n_max: int) -> list[str]:
    """Basis labels in storage order: atom (e, g) outer, photon number inner."""
    return [f"{a},{n}" for a in ("e", "g") for n in range(n_max + 1)]


def jc_index(atom: str, n: int, n_max: int) -> int:
    return {"e": 0, "g": 1}[atom] * (n_max + 1) + n


def jc_hamiltonian(p: CavityQedParams) -> HermitianGenerator:
    """``omega_r (|e><g| a + |g><e| a^dag)`` on the truncated Fock space."""
    dim = p.n_max + 1
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    sigma_plus = np.array([[0.0, 1.0], [0.0, 0.0]])
    h = np.kron(sigma_plus, a)
    return HermitianGenerator(p.omega_r * (h + h.T))


def vacuum_rabi_probability(omega_r, t):
    """Probability of finding the atom in ``g`` with no averaging."""
    return 0.5 * (1.0 - np.cos(2.0 * omega_r * np.asarray(t, dtype=float)))


def gamma_nu_exact(omega, tau):
    """Decay rate and oscillation frequency of a Gamma-averaged doublet.

    Returns ``(log(1 + 4 w^2 tau^2) / (2 tau), arctan(2 w tau) / tau)``.
    """
    omega = np.asarray(omega, dtype=float)
    tau = np.asarray(tau, dtype=float)
    x = 2.0 * omega * tau
    gamma = np.log1p(x * x) / (2.0 * tau)
    nu = np.arctan(x) / tau
    if gamma.ndim == 0:
        return float(gamma), float(nu)
    return gamma, nu


def gamma_small_tau(omega, tau):
    return 2.0 * np.asarray(omega, dtype=float) ** 2 * tau


def _decay(omega, tau, mode="exact"):
    if mode not in ("exact", "small-tau"):
        raise ValueError(f"unknown decay mode {mode!r}")
    if tau == 0:
        return 0.0, 2.0 * omega
    if mode == "small-tau":
        return float(gamma_small_tau(omega, tau)), 2.0 * omega
    return gamma_nu_exact(omega, tau)


def damped_rabi_probability(omega_r, tau, t, mode="exact"):
    """``(1 - exp(-gamma t) cos(nu t)) / 2`` for the averaged vacuum doublet."""
    gamma, nu = _decay(omega_r, tau, mode)
    t = np.asarray(t, dtype=float)
    return 0.5 * (1.0 - np.exp(-gamma * t) * np.cos(nu * t))


def laguerre_assoc(n: int, alpha: float, x):
    """Generalised Laguerre polynomial by the ascending three-term recurrence."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur if np.ndim(cur) else float(cur)


def ion_rabi_frequency(p: IonTrapParams, n: int) -> float:
    """Rabi frequency of the ``|down,n> <-> |up,n+1>`` sideband doublet."""
    if not 0 <= n <= p.n_max:
        raise ValueError(f"n must lie in [0, {p.n_max}]")
    eta2 = p.eta * p.eta
    return p.omega * math.exp(-eta2 / 2) * p.eta * laguerre_assoc(n, 1, eta2) / math.sqrt(n + 1)


def omega_from_omega0(omega0: float, eta: float) -> float:
    """Bare coupling ``omega`` that gives ground-doublet frequency ``omega0``."""
    return omega0 / (eta * math.exp(-eta * eta / 2))


def ion_doublet(p: IonTrapParams, n: int) -> DoubletModel:
    """Doublet in the basis ``(|down,n>, |up,n+1>)``."""
    return DoubletModel(abs(ion_rabi_frequency(p, n)), (f"down,{n}", f"up,{n + 1}"), p.phi)


def ion_sideband_generator(p: IonTrapParams) -> HermitianGenerator:
    """Block-diagonal generator over all doublets ``n = 0..n_max``.

    Basis order is ``|down,0>, |up,1>, |down,1>, |up,2>, ...``.
    """
    blocks = [ion_doublet(p, n).generator().matrix for n in range(p.n_max + 1)]
    dim = 2 * len(blocks)
    m = np.zeros((dim, dim), dtype=complex)
    for n, b in enumerate(blocks):
        m[2 * n : 2 * n + 2, 2 * n : 2 * n + 2] = b
    return HermitianGenerator(m)


def ion_probability(n, t, tau, p: IonTrapParams, mode="exact"):
    """Probability of ``|down>`` after preparing ``|down,n>``.

    ``mode="exact"`` uses the exact decay rate and shifted frequency;
    ``mode="small-tau"`` uses ``2 Omega_n^2 tau`` and the bare ``2 Omega_n``.
    """
    omega_n = abs(ion_rabi_frequency(p, n))
    gamma, nu = _decay(omega_n, tau, mode)
    t = np.asarray(t, dtype=float)
    return 0.5 * (1.0 + np.exp(-gamma * t) * np.cos(nu * t))


def gamma_n_predicted(p: IonTrapParams, tau: float, n: int) -> float:
    return 2.0 * ion_rabi_frequency(p, n) ** 2 * tau
