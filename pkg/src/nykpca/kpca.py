"""Exact and Nystrom-approximated kernel PCA as scikit-learn transformers.

Both estimators work with the *uncentered* empirical covariance operator
``C_n = (1/n) sum_i k(., X_i) (x) k(., X_i)``; no kernel centering is done.

Each retained component is an RKHS function ``f_i = sum_j c_ji k(., P_j)``
expanded over a set of points ``P`` (the training set for
:class:`EmpiricalKPCA`, the landmarks for :class:`NystromKPCA`). The
coefficient matrix ``dual_coef_`` has one column per component, normalized so
that the components are orthonormal in the RKHS.
"""

from __future__ import annotations

import time

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import UsageError
from .kernels import KernelFamily, KernelSpec, gram, kernel_diagonal
from .linalg import DEFAULT_RELATIVE_FLOOR, inv_sqrt_psd, sym_eig
from .sampling import (
    LandmarkSet,
    Scheme,
    approx_leverage_scores,
    als_sample,
    derive_seed,
    uniform_without_replacement,
)


class _KernelPCABase(TransformerMixin, BaseEstimator):
    """Shared kernel parameters, projection and error bookkeeping."""

    def kernel_spec(self):
        return KernelSpec(self.kernel, sigma=self.sigma, degree=self.degree, offset=self.offset)

    def _check_components(self, eigenvalues, trace_over_n):
        ell = int(self.n_components)
        if ell < 0:
            raise UsageError(f"n_components must be >= 0, got {ell}")
        floor = DEFAULT_RELATIVE_FLOOR * trace_over_n
        rank = int(np.count_nonzero(eigenvalues > floor))
        if ell > rank:
            raise UsageError(
                f"n_components={ell} exceeds the numerical rank {rank} "
                f"(eigenvalues above {floor:.3g})"
            )
        return ell, rank

    def _validate_points(self, X):
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise UsageError(
                f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}"
            )
        return X

    def transform(self, X):
        """Component scores ``f_i(x)`` for each row ``x`` of ``X``."""
        X = self._validate_points(X)
        return gram(self.kernel_spec(), X, self._expansion_points()) @ self.dual_coef_

    def _ell(self, n_components):
        check_is_fitted(self, "dual_coef_")
        ell = self.n_components_ if n_components is None else int(n_components)
        if not 0 <= ell <= len(self.all_eigenvalues_):
            raise UsageError(
                f"n_components must lie in [0, {len(self.all_eigenvalues_)}], got {ell}"
            )
        return ell


class EmpiricalKPCA(_KernelPCABase):
    """Kernel PCA from the full eigendecomposition of ``(1/n) K``.

    Costs O(n^3) time and O(n^2) memory.

    Parameters
    ----------
    n_components : int
        Number of retained components (0 is allowed and retains nothing).
    kernel : {"gaussian", "linear", "polynomial"}
    sigma : float
        Gaussian scale in ``exp(-sigma * ||x - y||^2)``.
    degree, offset : int, float
        Polynomial kernel ``(<x, y> + offset) ** degree``.
    n_jobs : int, optional
        Threads for Gram assembly.

    Attributes
    ----------
    eigenvalues_ : ndarray (n_components,)
        Leading eigenvalues of ``(1/n) K``, descending.
    all_eigenvalues_ : ndarray (n,)
        Full spectrum of ``(1/n) K``.
    dual_coef_ : ndarray (n, n_components)
        Column ``i`` is ``u_i / sqrt(n * eigenvalues_[i])``.
    X_fit_ : ndarray (n, d)
        Training data, needed to evaluate components at new points.
    trace_over_n_ : float
    effective_rank_ : int
    fit_time_ : float
        Seconds spent on Gram assembly and the eigensolve.
    """

    def __init__(self, n_components=1, *, kernel="gaussian", sigma=1.0, degree=2, offset=1.0,
                 n_jobs=None):
        self.n_components = n_components
        self.kernel = kernel
        self.sigma = sigma
        self.degree = degree
        self.offset = offset
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        n = X.shape[0]
        spec = self.kernel_spec()

        start = time.perf_counter()
        K = gram(spec, X, n_jobs=self.n_jobs)
        values, vectors = sym_eig(K / n)
        self.fit_time_ = time.perf_counter() - start

        self.trace_over_n_ = float(np.trace(K)) / n
        ell, rank = self._check_components(values, self.trace_over_n_)
        self.n_components_ = ell
        self.effective_rank_ = rank
        self.eigenvalues_ = values[:ell].copy()
        self.all_eigenvalues_ = values
        self.dual_coef_ = vectors[:, :ell] / np.sqrt(n * values[:ell])
        self.X_fit_ = X
        self.n_features_in_ = X.shape[1]
        return self

    def _expansion_points(self):
        return self.X_fit_

    def reconstruction_error(self, n_components=None):
        """Empirical reconstruction error ``sum_{i > ell} eigenvalue_i``.

        Any ``ell`` up to ``n`` can be evaluated from the stored spectrum.
        """
        ell = self._ell(n_components)
        return float(np.sum(self.all_eigenvalues_[ell:]))


class NystromKPCA(_KernelPCABase):
    """Kernel PCA restricted to the span of ``k(., x)`` over landmark points.

    With ``m`` distinct landmarks the fit forms ``K_mm`` and ``K_nm``,
    ``R = K_mm^{-1/2}`` (spectral pseudo-inverse, floored at
    ``1e-12 * trace``) and the m x m matrix ``M = R K_mn K_nm R``, then
    eigendecomposes ``(1/n) M``. The components are ``f_i = sum_j (R u_i)_j
    k(., landmark_j)``. Time O(n m^2 + m^3); the fitted model keeps only
    O(m (d + n_components)) numbers.

    Parameters
    ----------
    n_components : int
    n_landmarks : int
        Number of landmark draws ``m``.
    sampling : {"uniform", "als"}
        ``"uniform"`` draws without replacement; ``"als"`` draws with
        replacement proportional to approximate leverage scores (duplicates
        are collapsed before fitting).
    als_reg : float, optional
        Leverage-score regularization ``s``, required for ``"als"``.
    pilot_size : int, optional
        Pilot landmarks for approximate leverage scores; defaults to
        ``min(n, n_landmarks)``.
    kernel, sigma, degree, offset, n_jobs
        As for :class:`EmpiricalKPCA`.
    random_state : int
        Unsigned seed; all sampling is a pure function of it.

    Attributes
    ----------
    eigenvalues_ : ndarray (n_components,)
    all_eigenvalues_ : ndarray (m_distinct,)
        Full spectrum of ``(1/n) M``.
    dual_coef_ : ndarray (m_distinct, n_components)
    landmarks_ : ndarray (m_distinct, d)
    landmark_set_ : LandmarkSet
    m_distinct_ : int
    trace_over_n_ : float
        ``(1/n) tr(K)`` from the kernel diagonal.
    landmark_rank_ : int
        Retained rank of ``K_mm``.
    fit_time_ : float
        Seconds spent on Gram assembly and the eigensolve.
    """

    def __init__(self, n_components=1, n_landmarks=100, *, sampling="uniform", als_reg=None,
                 pilot_size=None, kernel="gaussian", sigma=1.0, degree=2, offset=1.0,
                 random_state=0, n_jobs=None):
        self.n_components = n_components
        self.n_landmarks = n_landmarks
        self.sampling = sampling
        self.als_reg = als_reg
        self.pilot_size = pilot_size
        self.kernel = kernel
        self.sigma = sigma
        self.degree = degree
        self.offset = offset
        self.random_state = random_state
        self.n_jobs = n_jobs

    def sample_landmarks(self, X):
        """Draw the landmark set this estimator would use on ``X``."""
        n = X.shape[0]
        scheme = Scheme(self.sampling)
        seed = int(self.random_state)
        if scheme is Scheme.PLAIN_UNIFORM:
            return uniform_without_replacement(n, self.n_landmarks, seed)
        if self.als_reg is None:
            raise UsageError("sampling='als' requires als_reg")
        pilot = min(n, self.n_landmarks) if self.pilot_size is None else self.pilot_size
        scores = approx_leverage_scores(X, self.kernel_spec(), self.als_reg, pilot,
                                        derive_seed(seed, 0))
        return als_sample(scores, self.n_landmarks, derive_seed(seed, 1))

    def fit(self, X, y=None, landmarks=None):
        """Fit on ``X``; ``landmarks`` (a LandmarkSet or index array) overrides sampling."""
        X = check_array(X, dtype=np.float64)
        n = X.shape[0]
        spec = self.kernel_spec()
        if landmarks is None:
            landmarks = self.sample_landmarks(X)
        elif not isinstance(landmarks, LandmarkSet):
            landmarks = LandmarkSet(landmarks, Scheme(self.sampling), int(self.random_state))
        idx = landmarks.distinct_indices
        if len(idx) == 0 or idx[0] < 0 or idx[-1] >= n:
            raise UsageError(f"landmark indices must lie in [0, {n})")
        XL = X[idx]

        start = time.perf_counter()
        R, kmm_rank = inv_sqrt_psd(gram(spec, XL, n_jobs=self.n_jobs))
        G = gram(spec, X, XL, n_jobs=self.n_jobs) @ R
        values, vectors = sym_eig((G.T @ G) / n)
        self.fit_time_ = time.perf_counter() - start
        del G

        self.trace_over_n_ = float(np.mean(kernel_diagonal(spec, X)))
        ell, rank = self._check_components(values, self.trace_over_n_)
        self.n_components_ = ell
        self.effective_rank_ = rank
        self.landmark_rank_ = kmm_rank
        self.eigenvalues_ = values[:ell].copy()
        self.all_eigenvalues_ = values
        self.dual_coef_ = R @ vectors[:, :ell]
        self.landmarks_ = XL
        self.landmark_set_ = landmarks
        self.m_distinct_ = len(idx)
        self.n_samples_fit_ = n
        self.n_features_in_ = X.shape[1]
        return self

    def _expansion_points(self):
        return self.landmarks_

    def reconstruction_error(self, n_components=None):
        """Empirical reconstruction error ``(1/n) tr(K) - sum_{i <= ell} eigenvalue_i``."""
        ell = self._ell(n_components)
        return self.trace_over_n_ - float(np.sum(self.all_eigenvalues_[:ell]))


def _kernel_params(spec: KernelSpec):
    return {"kernel": spec.family.value, "sigma": spec.sigma, "degree": spec.degree,
            "offset": spec.offset}


def fit_ekpca(X, spec: KernelSpec, ell) -> EmpiricalKPCA:
    return EmpiricalKPCA(n_components=ell, **_kernel_params(spec)).fit(X)


def fit_nystrom(X, spec: KernelSpec, landmarks, ell) -> NystromKPCA:
    if isinstance(landmarks, LandmarkSet):
        params = {"sampling": landmarks.scheme.value, "random_state": landmarks.seed,
                  "n_landmarks": len(landmarks)}
    else:
        params = {"n_landmarks": len(landmarks)}
    model = NystromKPCA(n_components=ell, **params, **_kernel_params(spec))
    return model.fit(X, landmarks=landmarks)


def recon_error_oracle(X, spec: KernelSpec, coef, points, *, tol=1e-6):
    """Reconstruction error of an explicit RKHS-orthonormal basis, by brute force.

    The basis is ``f_j = sum_a coef[a, j] k(., points[a])``. Returns
    ``(1/n) sum_i [k(X_i, X_i) - sum_j f_j(X_i)^2]``, i.e. the mean squared
    RKHS distance between ``k(., X_i)`` and its projection onto the span.
    """
    X = np.asarray(X, dtype=np.float64)
    coef = np.asarray(coef, dtype=np.float64)
    if coef.ndim == 1:
        coef = coef[:, None]
    diag = kernel_diagonal(spec, X)
    if coef.shape[1] == 0:
        return float(np.mean(diag))
    points = np.asarray(points, dtype=np.float64)
    if coef.shape[0] != points.shape[0]:
        raise UsageError(f"{coef.shape[0]} coefficient rows for {points.shape[0]} points")
    gram_basis = coef.T @ gram(spec, points) @ coef
    deviation = float(np.max(np.abs(gram_basis - np.eye(coef.shape[1]))))
    if deviation > tol:
        raise UsageError(f"basis is not RKHS-orthonormal (max deviation {deviation:.3g})")
    F = gram(spec, X, points) @ coef
    return float(np.mean(diag - np.einsum("ij,ij->i", F, F)))


__all__ = [
    "EmpiricalKPCA",
    "KernelFamily",
    "NystromKPCA",
    "fit_ekpca",
    "fit_nystrom",
    "recon_error_oracle",
]
