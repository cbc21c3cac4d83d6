"""Dense Hermitian linear algebra, density matrices and unitary evolution.

Generators are stored as ``H/hbar`` in rad/s, so no Planck constant appears
anywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ValidationError",
    "HermitianGenerator",
    "DensityMatrix",
    "SpectralDecomposition",
    "jacobi_eigh",
    "spectral_decompose",
    "evolve_unitary",
    "to_eigenbasis",
    "from_eigenbasis",
    "bohr_frequencies",
    "pure_state",
]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
JACOBI_TOL = 1e-14


class ValidationError(ValueError):
    """Raised when a matrix violates the invariants of its type."""


def _as_square(matrix, name):
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    m.setflags(write=False)
    return m


def _check_hermitian(m, name, tol=HERMITIAN_TOL):
    scale = max(np.max(np.abs(m)), 1.0 if name == "density matrix" else 0.0)
    if scale == 0.0:
        return
    dev = np.abs(m - m.conj().T)
    i, j = np.unravel_index(np.argmax(dev), dev.shape)
    if dev[i, j] > tol * scale:
        raise ValidationError(
            f"{name} is not Hermitian: entry ({i}, {j}) = {m[i, j]!r} but "
            f"conj of ({j}, {i}) = {np.conj(m[j, i])!r}"
        )


@dataclass(frozen=True, eq=False)
class HermitianGenerator:
    """``H/hbar`` in rad/s."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix, "generator")
        _check_hermitian(m, "generator")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __mul__(self, scale: float) -> "HermitianGenerator":
        return HermitianGenerator(self.matrix * float(scale))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix, "density matrix")
        _check_hermitian(m, "density matrix")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -POSITIVITY_TOL:
            raise ValidationError(f"density matrix has negative eigenvalue {lo!r}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def population(self, index: int) -> float:
        return float(self.matrix[index, index].real)

    @classmethod
    def _trusted(cls, matrix: np.ndarray) -> "DensityMatrix":
        # Hermitian symmetrisation kills round-off asymmetry from basis changes.
        m = 0.5 * (matrix + matrix.conj().T)
        return cls(m)


def pure_state(dim: int, index: int) -> DensityMatrix:
    """Projector onto basis state ``index``."""
    m = np.zeros((dim, dim), dtype=complex)
    m[index, index] = 1.0
    return DensityMatrix(m)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues (rad/s) and unitary eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def jacobi_eigh(a, tol=JACOBI_TOL, max_sweeps=100):
    """Cyclic Jacobi diagonalisation of a complex Hermitian matrix.

    Each rotation first removes the phase of ``a[p, q]`` and then applies the
    real symmetric Jacobi rotation to the resulting 2x2 block.

    Parameters
    ----------
    a : array_like
        Hermitian matrix.
    tol : float
        Stop when the off-diagonal Frobenius norm falls below ``tol`` times
        the Frobenius norm of ``a``.
    max_sweeps : int
        Upper bound on full cyclic sweeps.

    Returns
    -------
    w : ndarray
        Eigenvalues, unsorted.
    v : ndarray
        Unitary matrix whose columns are the eigenvectors.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    total = np.linalg.norm(a)
    if n == 1 or total == 0.0:
        return a.diagonal().real.copy(), v
    threshold = tol * total

    mask = ~np.eye(n, dtype=bool)

    def off_norm(m):
        return np.linalg.norm(m[mask])

    for _ in range(max_sweeps):
        if off_norm(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                zeta = (aqq - app) / (2.0 * mag)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]] restricted to (p, q)
                jpp, jpq = c, s
                jqp, jqq = -s * np.conj(phase), c * np.conj(phase)
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = colp * jpp + colq * jqp
                a[:, q] = colp * jpq + colq * jqq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = np.conj(jpp) * rowp + np.conj(jqp) * rowq
                a[q, :] = np.conj(jpq) * rowp + np.conj(jqq) * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp * jpp + vq * jqp
                v[:, q] = vp * jpq + vq * jqq
    else:
        if off_norm(a) > threshold:
            raise np.linalg.LinAlgError("Jacobi iteration did not converge")
    return a.diagonal().real.copy(), v


def spectral_decompose(g: HermitianGenerator) -> SpectralDecomposition:
    """Eigen-decompose a generator.

    Eigenvalues are returned ascending. Each eigenvector is rephased so that
    its first component with modulus above 1e-12 is real and positive. Within
    a degenerate subspace any orthonormal basis may come back.
    """
    if not isinstance(g, HermitianGenerator):
        g = HermitianGenerator(g)
    w, v = jacobi_eigh(g.matrix)
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    for k in range(v.shape[1]):
        col = v[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            lead = col[nz[0]]
            v[:, k] = col * (abs(lead) / lead)
            v[nz[0], k] = abs(lead)
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(w, v)


def bohr_frequencies(spec: SpectralDecomposition) -> np.ndarray:
    """Matrix of eigenvalue differences ``w[m] - w[n]``."""
    w = spec.eigenvalues
    return w[:, None] - w[None, :]


def to_eigenbasis(rho, spec: SpectralDecomposition) -> np.ndarray:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    u = spec.eigenvectors
    return u.conj().T @ m @ u


def from_eigenbasis(m, spec: SpectralDecomposition) -> np.ndarray:
    u = spec.eigenvectors
    return u @ m @ u.conj().T


def _check_dims(rho, g):
    if rho.dim != g.dim:
        raise ValidationError(f"dimension mismatch: state is {rho.dim}, generator is {g.dim}")


def evolve_unitary(rho0: DensityMatrix, g, t: float, spec: SpectralDecomposition | None = None) -> DensityMatrix:
    """Return ``exp(-iGt) rho0 exp(iGt)``.

    ``spec`` may be passed to reuse an existing decomposition of ``g``.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if spec is None:
        if not isinstance(g, HermitianGenerator):
            g = HermitianGenerator(g)
        _check_dims(rho0, g)
        spec = spectral_decompose(g)
    elif spec.dim != rho0.dim:
        raise ValidationError(f"dimension mismatch: state is {rho0.dim}, generator is {spec.dim}")
    if t == 0:
        return rho0
    phases = np.exp(-1j * bohr_frequencies(spec) * t)
    return DensityMatrix._trusted(from_eigenbasis(to_eigenbasis(rho0, spec) * phases, spec))
