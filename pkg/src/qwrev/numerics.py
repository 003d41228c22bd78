"""Dense complex linear algebra used throughout the package.

Matrices and vectors are plain ``numpy`` complex arrays. The eigensolvers
are written out here (cyclic Jacobi for Hermitian input, a Hermitian
pencil for unitaries) so that eigenvector ordering and phase gauge are
fully under our control and reproducible from a seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qwrev.errors import (
    ContractError,
    ConvergenceError,
    DegenerateSpectrum,
    DimensionError,
    UnsupportedSizeError,
)

TWO_PI = 2.0 * math.pi

UNITARY_TOL = 1e-12
STATE_TOL = 1e-12
DEGENERACY_TOL = 1e-8
JACOBI_OFF_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
EIG_RESIDUAL_TOL = 1e-10
EIG_REDRAWS = 5
# components below this modulus are skipped when fixing the eigenvector gauge
_GAUGE_ZERO = 1e-8


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs in matching order; ``vectors[:, j]`` pairs with ``phases[j]``.

    For unitary input ``phases`` are eigenphases in ``[0, 2*pi)``. For
    Hermitian input the same field holds the (real) eigenvalues.
    """

    phases: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.phases.shape[0]

    @property
    def values(self) -> np.ndarray:
        return self.phases

    @property
    def eigenvalues(self) -> np.ndarray:
        """Unit-modulus eigenvalues ``exp(i*phase)`` (unitary case)."""
        return np.exp(1j * self.phases)

    def reconstruct(self, unitary: bool = True) -> np.ndarray:
        lam = self.eigenvalues if unitary else self.phases.astype(complex)
        return (self.vectors * lam) @ self.vectors.conj().T

    @property
    def min_gap(self) -> float:
        return min_circular_gap(self.phases)


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def _square(m) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def unitarity_defect(m) -> float:
    """Largest entry of ``|M^dagger M - I|``."""
    a = _square(m)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))))


def is_unitary(m, tol: float = UNITARY_TOL) -> bool:
    return unitarity_defect(m) <= tol


def hermiticity_defect(m) -> float:
    a = _square(m)
    return float(np.max(np.abs(a - a.conj().T)))


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def min_circular_gap(phases: Sequence[float]) -> float:
    """Smallest distance between sorted angles, wrapping around the circle."""
    p = np.sort(np.mod(np.asarray(phases, dtype=float), TWO_PI))
    if p.size < 2:
        return math.inf
    gaps = np.diff(p)
    wrap = TWO_PI - p[-1] + p[0]
    return float(min(gaps.min(), wrap))


def _jacobi_rotation(a_pp: float, a_qq: float, a_pq: complex) -> np.ndarray:
    """2x2 unitary whose columns diagonalize ``[[a_pp, a_pq], [conj(a_pq), a_qq]]``."""
    r = abs(a_pq)
    e = a_pq / r
    phi = 0.5 * math.atan2(2.0 * r, a_pp - a_qq)
    c, s = math.cos(phi), math.sin(phi)
    ec = e.conjugate()
    return np.array([[c, -s], [s * ec, c * ec]], dtype=complex)


def hermitian_eigendecompose(
    m,
    tol: float = 1e-12,
    *,
    off_tol: float = JACOBI_OFF_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> EigenSystem:
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Parameters
    ----------
    m : array_like
        Square matrix with ``max|M - M^dagger| <= tol``.
    tol : float
        Hermiticity tolerance for the precondition.
    off_tol : float
        Sweeps stop once the off-diagonal Frobenius norm falls to
        ``off_tol`` (or to a few ulps of ``||M||_F`` for large matrices).
    max_sweeps : int
        Iteration budget.

    Returns
    -------
    EigenSystem
        Eigenvalues ascending in ``phases`` with orthonormal columns in
        ``vectors``.
    """
    a = _square(m).copy()
    if hermiticity_defect(a) > tol:
        raise ContractError("matrix is not Hermitian within tolerance")
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    # absolute target, floored at what rounding permits for large norms
    threshold = max(off_tol, 8.0 * np.finfo(float).eps * float(np.linalg.norm(a)))

    offdiag = ~np.eye(n, dtype=bool)

    def off_norm() -> float:
        return float(np.linalg.norm(a[offdiag]))

    for _ in range(max_sweeps):
        if off_norm() <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = complex(a[p, q])
                if apq == 0:
                    continue
                w = _jacobi_rotation(a[p, p].real, a[q, q].real, apq)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ w
                a[idx, :] = w.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ w
    else:
        if off_norm() > threshold:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")

    values = np.real(np.diag(a))
    order = np.argsort(values, kind="stable")
    return EigenSystem(values[order], v[:, order])


def fix_gauge(vectors: np.ndarray) -> np.ndarray:
    """Rephase each column so its first non-negligible entry is real positive."""
    out = np.array(vectors, dtype=complex, copy=True)
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > _GAUGE_ZERO)
        if nz.size:
            lead = col[nz[0]]
            out[:, j] = col * (abs(lead) / lead)
    return out


def _wrap_phases(phases: np.ndarray) -> np.ndarray:
    w = np.mod(phases, TWO_PI)
    # -1e-17 must map to 0, not to a hair below 2*pi
    w[TWO_PI - w < 1e-12] = 0.0
    return w


def unitary_eigendecompose(
    m,
    strict: bool = False,
    *,
    seed: int | np.random.Generator | None = 0,
    gap_tol: float = DEGENERACY_TOL,
    residual_tol: float = EIG_RESIDUAL_TOL,
    redraws: int = EIG_REDRAWS,
) -> EigenSystem:
    """Spectral decomposition of a unitary matrix.

    A random real combination ``B = a(M + M^dagger) + b*i(M - M^dagger)``
    is Hermitian and shares the eigenvectors of ``M``; it is diagonalized
    with :func:`hermitian_eigendecompose` and each eigenphase is read off as
    ``arg <v|M|v>``. When an unlucky draw of ``(a, b)`` merges two distinct
    eigenvalues of ``M`` the recovered vectors fail the residual check and
    a fresh pair is drawn, up to ``redraws`` times.

    Phases are returned ascending in ``[0, 2*pi)`` and each eigenvector's
    first non-negligible component is real and positive.

    Raises
    ------
    ContractError
        If ``M`` is not unitary to 1e-12.
    DegenerateSpectrum
        In ``strict`` mode when two eigenphases lie within ``gap_tol`` on
        the circle, or in any mode when no draw separates the spectrum.
    """
    u = _square(m)
    if unitarity_defect(u) > UNITARY_TOL:
        raise ContractError("matrix is not unitary within 1e-12")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = u.shape[0]
    herm = u + u.conj().T
    skew = 1j * (u - u.conj().T)

    for _ in range(redraws + 1):
        alpha, beta = rng.standard_normal(2)
        es = hermitian_eigendecompose(alpha * herm + beta * skew, tol=1e-10)
        vecs = es.vectors
        lam = np.einsum("ij,ik,kj->j", vecs.conj(), u, vecs)
        lam = lam / np.abs(lam)
        residual = float(np.max(np.abs(u @ vecs - vecs * lam))) if n else 0.0
        if residual <= residual_tol:
            break
    else:
        raise DegenerateSpectrum(
            f"could not separate eigenvectors after {redraws} redraws (residual {residual:.2e})"
        )

    phases = _wrap_phases(np.angle(lam))
    order = np.argsort(phases, kind="stable")
    result = EigenSystem(phases[order], fix_gauge(vecs[:, order]))
    if strict:
        gap = result.min_gap
        if gap <= gap_tol:
            raise DegenerateSpectrum(f"eigenphases coincide (min circular gap {gap:.3e})", gap=gap)
    return result


def fft_nd(v, shape: Sequence[int], inverse: bool = False) -> np.ndarray:
    """Unitary-normalized DFT over a power-of-two lattice.

    ``v`` is either flat with ``prod(shape)`` entries, in which case the
    result is flat too, or has ``shape`` as its trailing axes, in which case
    any leading axes are carried through untouched.
    """
    shape = tuple(int(s) for s in shape)
    bad = [s for s in shape if not is_power_of_two(s)]
    if bad:
        raise UnsupportedSizeError(f"lattice dimensions must be powers of two, got {bad}")
    arr = np.asarray(v, dtype=complex)
    nd = len(shape)
    if arr.shape[-nd:] == shape:
        work, flat = arr, False
    elif arr.size == math.prod(shape):
        work, flat = arr.reshape(shape), True
    else:
        raise DimensionError(f"vector of size {arr.size} does not fit lattice {shape}")
    axes = tuple(range(work.ndim - nd, work.ndim))
    fn = np.fft.ifftn if inverse else np.fft.fftn
    out = fn(work, axes=axes, norm="ortho")
    return out.reshape(-1) if flat else out


def phase_fidelity(a, b) -> float:
    """``|<a|b>|`` for normalized states; 1 exactly when they differ by a global phase."""
    x = np.asarray(a, dtype=complex)
    y = np.asarray(b, dtype=complex)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    return float(min(1.0, abs(np.vdot(x.ravel(), y.ravel()))))


def normalize(v) -> np.ndarray:
    x = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ContractError("cannot normalize the zero vector")
    return x / nrm
