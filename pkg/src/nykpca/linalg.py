"""Dense symmetric eigensolver and regularized matrix functions."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import NumericError, UsageError

# Relative eigenvalue floor (times the trace) below which a direction is
# treated as numerically null.
DEFAULT_RELATIVE_FLOOR = 1e-12
SIGN_THRESHOLD = 1e-12


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted descending; column ``i`` of ``vectors`` pairs with ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray


def _square_symmetric(A, name="A"):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise UsageError(f"{name} contains non-finite entries")
    return 0.5 * (A + A.T)


def _fix_signs(V):
    # make the first entry with |v| > SIGN_THRESHOLD positive in each column
    big = np.abs(V) > SIGN_THRESHOLD
    first = np.argmax(big, axis=0)
    pivots = V[first, np.arange(V.shape[1])]
    signs = np.where(pivots < 0, -1.0, 1.0)
    return V * signs


def sym_eig(A, *, vectors=True) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix.

    The input is symmetrized as ``(A + A.T) / 2``. Eigenvalues come back in
    descending order (stable with respect to LAPACK's ordering for ties) and
    each eigenvector has its first non-negligible entry positive.

    Raises
    ------
    UsageError
        On non-square or non-finite input.
    NumericError
        If LAPACK fails to converge.
    """
    S = _square_symmetric(A)
    try:
        if vectors:
            w, V = scipy.linalg.eigh(S, driver="evd", check_finite=False)
        else:
            w = scipy.linalg.eigh(S, eigvals_only=True, driver="evd", check_finite=False)
            V = None
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"symmetric eigensolver did not converge (size {S.shape[0]}): {exc}") from exc
    order = np.argsort(-w, kind="stable")
    w = w[order]
    if V is not None:
        V = _fix_signs(V[:, order])
    return EigenDecomposition(w, V)


def default_floor(A):
    return DEFAULT_RELATIVE_FLOOR * abs(float(np.trace(A)))


def inv_sqrt_psd(A, floor=None):
    """Spectral pseudo-inverse square root of a symmetric PSD matrix.

    Eigenvalues above ``floor`` map to ``lam ** -0.5``, the rest to zero.
    ``floor`` defaults to ``1e-12 * trace(A)``.

    Returns
    -------
    R : ndarray
        Symmetric matrix with ``R @ A @ R`` the orthogonal projector onto the
        retained eigenspace.
    rank : int
        Number of retained eigenvalues.
    """
    S = _square_symmetric(A)
    if floor is None:
        floor = default_floor(S)
    if floor < 0:
        raise UsageError(f"floor must be nonnegative, got {floor}")
    w, V = sym_eig(S)
    keep = w > floor
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        raise NumericError("matrix numerically zero: no eigenvalue above the floor")
    Vk = V[:, keep]
    R = (Vk * w[keep] ** -0.5) @ Vk.T
    return 0.5 * (R + R.T), rank


def psd_solve(A, shift, B):
    """Solve ``(A + shift * I) X = B`` by Cholesky, for symmetric PSD ``A``."""
    if not shift > 0:
        raise UsageError(f"shift must be positive, got {shift}")
    S = _square_symmetric(A)
    B = np.asarray(B, dtype=np.float64)
    if B.shape[0] != S.shape[0]:
        raise UsageError(f"right-hand side has {B.shape[0]} rows, expected {S.shape[0]}")
    S[np.diag_indices_from(S)] += shift
    try:
        factor = scipy.linalg.cho_factor(S, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Cholesky factorization failed with shift {shift}: {exc}") from exc
    return scipy.linalg.cho_solve(factor, B, check_finite=False)
