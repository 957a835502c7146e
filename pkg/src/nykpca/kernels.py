"""Kernel functions and Gram-matrix assembly.

Three families are supported:

* ``gaussian``   k(x, y) = exp(-sigma * ||x - y||^2)
* ``linear``     k(x, y) = <x, y>
* ``polynomial`` k(x, y) = (<x, y> + offset) ** degree

Gram blocks are assembled in fixed row chunks so that the result does not
depend on whether the chunks are evaluated serially or on a thread pool.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import UsageError

# Rows per assembly chunk. Fixed so that serial and threaded assembly perform
# exactly the same floating point operations.
CHUNK_ROWS = 512


class KernelFamily(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its parameters.

    ``sigma`` multiplies the squared distance in the Gaussian exponent, so it
    has units of 1/length^2 (larger sigma means a narrower kernel).
    """

    family: KernelFamily = KernelFamily.GAUSSIAN
    sigma: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        try:
            family = KernelFamily(self.family)
        except ValueError:
            raise UsageError(
                f"unknown kernel family {self.family!r}; "
                f"expected one of {[f.value for f in KernelFamily]}"
            ) from None
        object.__setattr__(self, "family", family)
        if family is KernelFamily.GAUSSIAN and not self.sigma > 0:
            raise UsageError(f"gaussian kernel requires sigma > 0, got {self.sigma}")
        if family is KernelFamily.POLYNOMIAL:
            if int(self.degree) != self.degree or self.degree < 1:
                raise UsageError(f"polynomial degree must be an integer >= 1, got {self.degree}")
            if not self.offset >= 0:
                raise UsageError(f"polynomial offset must be >= 0, got {self.offset}")
            object.__setattr__(self, "degree", int(self.degree))

    @classmethod
    def gaussian(cls, sigma):
        return cls(KernelFamily.GAUSSIAN, sigma=sigma)

    @classmethod
    def linear(cls):
        return cls(KernelFamily.LINEAR)

    @classmethod
    def polynomial(cls, degree, offset=0.0):
        return cls(KernelFamily.POLYNOMIAL, degree=degree, offset=offset)

    def to_dict(self):
        out = {"family": self.family.value}
        if self.family is KernelFamily.GAUSSIAN:
            out["sigma"] = self.sigma
        elif self.family is KernelFamily.POLYNOMIAL:
            out["degree"] = self.degree
            out["offset"] = self.offset
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        family = d.pop("family", KernelFamily.GAUSSIAN.value)
        unknown = set(d) - {"sigma", "degree", "offset"}
        if unknown:
            raise UsageError(f"unknown kernel parameters: {sorted(unknown)}")
        return cls(family, **d)


def _as_points(X, name):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise UsageError(f"{name} must be a 2-D array, got shape {X.shape}")
    if X.shape[1] < 1:
        raise UsageError(f"{name} has no feature columns")
    if not np.all(np.isfinite(X)):
        raise UsageError(f"{name} contains non-finite entries")
    return X


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate ``k(x, y)`` for two vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise UsageError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise UsageError("kernel arguments must be finite")
    if spec.family is KernelFamily.GAUSSIAN:
        # same per-pair arithmetic as the Gram assembly, so entries agree exactly
        return float(_block(spec, x[None, :], y[None, :])[0, 0])
    inner = float(np.dot(x, y))
    if spec.family is KernelFamily.LINEAR:
        return inner
    return (inner + spec.offset) ** spec.degree


def _block(spec, A, B):
    if spec.family is KernelFamily.GAUSSIAN:
        # cdist evaluates sum((a - b)**2) per pair; no ||a||^2 + ||b||^2 - 2<a,b>
        # expansion, which loses all precision for near-duplicate rows.
        return np.exp(-spec.sigma * cdist(A, B, "sqeuclidean"))
    G = A @ B.T
    if spec.family is KernelFamily.POLYNOMIAL:
        G += spec.offset
        G **= spec.degree
    return G


def _assemble(spec, A, B, n_jobs):
    starts = range(0, A.shape[0], CHUNK_ROWS)
    out = np.empty((A.shape[0], B.shape[0]))

    def work(start):
        stop = min(start + CHUNK_ROWS, A.shape[0])
        out[start:stop] = _block(spec, A[start:stop], B)

    if n_jobs is None or n_jobs == 1 or len(starts) == 1:
        for s in starts:
            work(s)
    else:
        workers = None if n_jobs == -1 else n_jobs
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    return out


def _precedes(A, B):
    """Total order on arrays used to pick one canonical orientation."""
    if A.shape != B.shape:
        return A.shape < B.shape
    return A.tobytes() <= B.tobytes()


def gram(spec: KernelSpec, A, B=None, *, n_jobs=None) -> np.ndarray:
    """Kernel matrix ``[k(A_i, B_j)]``.

    With ``B`` omitted (or ``B is A``) the square Gram matrix of ``A`` is
    returned, exactly symmetric by construction. For distinct operands the
    block is always computed in one canonical orientation, so that
    ``gram(spec, A, B)`` is bitwise equal to ``gram(spec, B, A).T``.

    ``n_jobs`` > 1 (or -1) assembles row chunks on a thread pool; the output
    is identical to serial assembly.
    """
    same = B is None or B is A
    A = _as_points(A, "A")
    if same:
        G = _assemble(spec, A, A, n_jobs)
        upper = np.triu_indices(A.shape[0], 1)
        G.T[upper] = G[upper]
        return G
    B = _as_points(B, "B")
    if A.shape[1] != B.shape[1]:
        raise UsageError(f"feature dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if _precedes(A, B):
        return _assemble(spec, A, B, n_jobs)
    return np.ascontiguousarray(_assemble(spec, B, A, n_jobs).T)


def kernel_diagonal(spec: KernelSpec, X) -> np.ndarray:
    """``k(X_i, X_i)`` for every row, in O(n d) without forming the Gram matrix."""
    X = _as_points(X, "X")
    if spec.family is KernelFamily.GAUSSIAN:
        return np.ones(X.shape[0])
    sq = np.einsum("ij,ij->i", X, X)
    if spec.family is KernelFamily.LINEAR:
        return sq
    return (sq + spec.offset) ** spec.degree
