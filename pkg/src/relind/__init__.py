"""Tests of relevant dependence between the components of high-dimensional data.

The dependence between columns ``i`` and ``j`` is measured by a U-statistic
(covariance, Kendall's tau, the dominating term of Spearman's rho,
Hoeffding's D, Blum-Kiefer-Rosenblatt's R or Bergsma-Dassios' tau*). The
null hypothesis ``max_{i<j} |d_ij| <= delta`` is tested with a Gumbel
approximation or one of three bootstrap statistics.
"""

__version__ = "0.1.0"

from relind._backend import active_name as backend_name  # noqa: E402
from relind.errors import (  # noqa: E402
    DataError,
    DegenerateVarianceError,
    NumericError,
    RelindError,
    ResourceCapError,
    UsageError,
)
from relind.kernels import KernelId, eval_kernel, kernel_bound, kernel_order  # noqa: E402
from relind.testing import (  # noqa: E402
    Direction,
    Method,
    TestConfig,
    TestReport,
    Variant,
    run_full_test,
)
from relind.ustat import PairGrid, UStatResult, ustat_matrix, vstat  # noqa: E402

__all__ = [
    "__version__",
    "backend_name",
    "DataError",
    "DegenerateVarianceError",
    "NumericError",
    "RelindError",
    "ResourceCapError",
    "UsageError",
    "KernelId",
    "eval_kernel",
    "kernel_bound",
    "kernel_order",
    "Direction",
    "Method",
    "TestConfig",
    "TestReport",
    "Variant",
    "run_full_test",
    "PairGrid",
    "UStatResult",
    "ustat_matrix",
    "vstat",
]
