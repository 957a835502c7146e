"""Nystrom-approximated kernel PCA with leverage-score sampling."""

__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    BoundReport,
    SpectrumSpec,
    bound_report,
    effective_dimension,
    empirical_max_leverage,
    fit_rate,
    generate_spectrum_dataset,
    m_threshold_als,
    m_threshold_plain,
    reconstruction_bound,
    select_als_regularization,
)
from .exceptions import DataFormatError, InfeasibleError, NumericError, UsageError  # noqa: E402
from .kernels import KernelSpec, eval_kernel, gram, kernel_diagonal  # noqa: E402
from .kpca import EmpiricalKPCA, NystromKPCA, fit_ekpca, fit_nystrom, recon_error_oracle  # noqa: E402
from .linalg import inv_sqrt_psd, psd_solve, sym_eig  # noqa: E402
from .sampling import (  # noqa: E402
    LandmarkSet,
    LeverageScores,
    als_sample,
    approx_leverage_scores,
    approximation_factor,
    exact_leverage_scores,
    uniform_without_replacement,
)
