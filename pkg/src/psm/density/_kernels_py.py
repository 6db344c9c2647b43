"""Pure-numpy implementation of the Gaussian log-density kernel.

Same contract as the compiled extension in psm._ckernels; selected as a
fallback at import time by psm.density.kernels.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular


def component_logpdf(X, means, chols, log_norms, out=None):
    """Per-component Gaussian log densities.

    X: (n, d) points; means: (K, d); chols: (K, d, d) lower Cholesky
    factors; log_norms: (K,) precomputed ``-d/2 log(2 pi) - sum(log diag L)``.
    Returns (n, K).
    """
    n = X.shape[0]
    K = means.shape[0]
    if out is None:
        out = np.empty((n, K), dtype=np.float64)
    for k in range(K):
        diff = (X - means[k]).T
        z = solve_triangular(chols[k], diff, lower=True, check_finite=False)
        out[:, k] = log_norms[k] - 0.5 * np.einsum("ij,ij->j", z, z)
    return out
