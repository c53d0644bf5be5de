"""Dense complex matrix kernel.

Every operator in this package lives at a finite truncation level and is a
plain complex ``numpy`` array.  The helpers here pin the conventions used
everywhere else: operator norms are largest singular values, Hermitian
eigendecompositions return ascending eigenvalues, and tensor / direct-sum
assembly is guarded by a dense-capacity cap.  All functions are pure and
never mutate their arguments, so they are safe to call from concurrent
workers.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import CapacityError, InputError

#: Hard cap on the linear dimension of assembled dense operators.
MAX_DIM = 16384

#: Relative tolerance below which a matrix counts as Hermitian.
HERMITIAN_RTOL = 1e-12


def as_cmatrix(m) -> np.ndarray:
    """Validate ``m`` as a nonempty 2-d complex matrix and return a copy-free
    complex view of it."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.size == 0:
        raise InputError(f"expected a nonempty matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InputError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def opnorm(m) -> float:
    """Operator norm, i.e. the largest singular value.

    For Hermitian input this equals the largest absolute eigenvalue.
    Computed by full SVD; no power iteration shortcuts.
    """
    a = as_cmatrix(m)
    return float(np.linalg.svd(a, compute_uv=False)[0])


def hermitian_defect(m) -> float:
    """max |M - M*| relative to max |M| (0 for the zero matrix)."""
    a = as_cmatrix(m)
    scale = np.abs(a).max()
    if scale == 0.0:
        return 0.0
    return float(np.abs(a - dagger(a)).max() / scale)


def symmetrize(m) -> np.ndarray:
    a = as_cmatrix(m)
    return 0.5 * (a + dagger(a))


def herm_eig(m, rtol: float = HERMITIAN_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigs, u)`` with eigenvalues ascending and ``u`` unitary such
    that ``m = u @ diag(eigs) @ u.conj().T``.  Input is symmetrized before
    the decomposition; drift beyond ``rtol`` (relative) is rejected.
    """
    a = as_cmatrix(m)
    if hermitian_defect(a) > rtol:
        raise InputError("matrix is not Hermitian within tolerance")
    eigs, u = np.linalg.eigh(symmetrize(a))
    return eigs, u


def herm_spectrum(m, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (values only, faster)."""
    a = as_cmatrix(m)
    if hermitian_defect(a) > rtol:
        raise InputError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh(symmetrize(a))


def kron_dirsum(a, b, mode: str = "tensor", max_dim: int = MAX_DIM) -> np.ndarray:
    """Tensor product or direct sum of two matrices.

    ``tensor`` returns the Kronecker product ``a (x) b`` (size grows
    multiplicatively), ``directsum`` the block diagonal ``a (+) b`` (size
    grows additively).  Raises :class:`CapacityError` when the result would
    exceed ``max_dim`` rows or columns.
    """
    am = as_cmatrix(a)
    bm = as_cmatrix(b)
    if mode == "tensor":
        rows = am.shape[0] * bm.shape[0]
        cols = am.shape[1] * bm.shape[1]
    elif mode == "directsum":
        rows = am.shape[0] + bm.shape[0]
        cols = am.shape[1] + bm.shape[1]
    else:
        raise InputError(f"unknown mode {mode!r}, expected 'tensor' or 'directsum'")
    if max(rows, cols) > max_dim:
        raise CapacityError(
            f"{mode} result would be {rows}x{cols}, exceeding max dimension {max_dim}"
        )
    if mode == "tensor":
        return np.kron(am, bm)
    return scipy.linalg.block_diag(am, bm).astype(complex)


def blockdiag(blocks) -> np.ndarray:
    """Direct sum of a sequence of matrices."""
    mats = [as_cmatrix(b) for b in blocks]
    if not mats:
        raise InputError("blockdiag of an empty sequence")
    return scipy.linalg.block_diag(*mats).astype(complex)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish unitary from the QR factorization of a Ginibre matrix."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return symmetrize(z)
