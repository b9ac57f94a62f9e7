"""Dense brute-force references used by tests and acceptance runs.

Nothing here belongs in a fast path; the hard size guards exist so that a
test cannot silently run a dense reference at an unintended scale.
"""

from __future__ import annotations

import numpy as np

from .densefun import FunctionSpec, eval_matrix_function
from .errors import OracleScaleError

DENSE_UPDATE_LIMIT = 2000
BLOCK_LEMMA_LIMIT = 500


def _as_dense(a) -> np.ndarray:
    to_dense = getattr(a, "to_dense", None)
    if to_dense is not None:
        return to_dense()
    return np.asarray(a)


def dense_update_reference(a, b, c, f: FunctionSpec) -> np.ndarray:
    """Ground truth f(A + B C^*) - f(A) by two dense evaluations."""
    a = _as_dense(a)
    n = a.shape[0]
    if n > DENSE_UPDATE_LIMIT:
        raise OracleScaleError(f"dense reference limited to n <= {DENSE_UPDATE_LIMIT}")
    b = np.atleast_2d(np.asarray(b).T).T if np.asarray(b).ndim == 1 else np.asarray(b)
    c = np.atleast_2d(np.asarray(c).T).T if np.asarray(c).ndim == 1 else np.asarray(c)
    modified = a + b @ c.conj().T
    return eval_matrix_function(modified, f) - eval_matrix_function(a, f)


def telescope_check(m, n, j) -> float:
    """Residual of the power-difference identity

        M^j - N^j = sum_{k=0}^{j-1} N^(j-1-k) (M - N) M^k

    which underpins exactness of the projected updates."""
    m = np.asarray(m)
    n = np.asarray(n)
    if m.shape != n.shape or m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("M and N must be square and of equal size")
    if j < 0:
        raise ValueError("power must be nonnegative")
    dim = m.shape[0]
    dtype = np.result_type(m, n)
    lhs = np.linalg.matrix_power(m.astype(dtype), j) - np.linalg.matrix_power(n.astype(dtype), j)
    rhs = np.zeros_like(lhs)
    diff = (m - n).astype(dtype)
    m_pow = np.eye(dim, dtype=dtype)
    n_pows = [np.eye(dim, dtype=dtype)]
    for _ in range(j - 1):
        n_pows.append(n_pows[-1] @ n)
    for k in range(j):
        rhs += n_pows[j - 1 - k] @ diff @ m_pow
        m_pow = m_pow @ m
    return float(np.linalg.norm(lhs - rhs, 2))


def block_lemma_check(a, b, c, f: FunctionSpec) -> float:
    """Residual between the (1,2) block of f applied to

        [ A   b c^* ]
        [ 0   A + b c^* ]

    and the directly computed dense update; the two agree exactly for any f
    analytic on both spectra."""
    a = _as_dense(a)
    n = a.shape[0]
    if n > BLOCK_LEMMA_LIMIT:
        raise OracleScaleError(f"block check limited to n <= {BLOCK_LEMMA_LIMIT}")
    b = np.asarray(b)
    c = np.asarray(c)
    outer = np.outer(b, c.conj())
    dtype = np.result_type(a, outer)
    big = np.zeros((2 * n, 2 * n), dtype=dtype)
    big[:n, :n] = a
    big[:n, n:] = outer
    big[n:, n:] = a + outer
    f_big = eval_matrix_function(big, f)
    reference = dense_update_reference(a, b.reshape(-1, 1), c.reshape(-1, 1), f)
    return float(np.linalg.norm(f_big[:n, n:] - reference, 2))
