"""Orthonormal Krylov bases and compressed matrices.

Lanczos serves Hermitian operators (tridiagonal compression, optional full
reorthogonalization), Arnoldi serves general ones (Hessenberg compression,
modified Gram-Schmidt with one reorthogonalization pass). Both are exposed
as single-shot functions and as incrementally extensible processes so that
callers can grow a decomposition while monitoring convergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = np.finfo(np.float64).eps


def as_operator(a):
    """Normalizes matrices and matvec-bearing objects to a callable x -> A x."""
    if isinstance(a, np.ndarray):
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("operator matrix must be square")
        return lambda x: a @ x
    matvec = getattr(a, "matvec", None)
    if matvec is not None:
        return matvec
    if callable(a):
        return a
    raise TypeError(f"cannot interpret {type(a).__name__} as an operator")


@dataclass
class KrylovDecomposition:
    """Outcome of m Krylov steps: A U_m = U_m G_m + next_norm * u_{m+1} e_m^*.

    ``basis`` holds U_m columnwise (empty in basis-free two-pass runs),
    ``compressed`` is G_m (tridiagonal for Lanczos, upper Hessenberg for
    Arnoldi), ``next_norm`` the trailing recurrence norm, ``next_vector``
    the would-be next basis vector (None after breakdown) and
    ``start_norm`` the norm of the starting vector.
    """

    basis: np.ndarray
    compressed: np.ndarray
    next_norm: float
    next_vector: np.ndarray | None
    start_norm: float
    breakdown: bool = False

    @property
    def m(self) -> int:
        return self.compressed.shape[0]


class _ProcessBase:
    def __init__(self, apply_a, b):
        self._apply = as_operator(apply_a)
        b = np.asarray(b)
        if b.ndim != 1:
            raise ValueError("starting vector must be one-dimensional")
        self.n = b.shape[0]
        self.start_norm = float(np.linalg.norm(b))
        if self.start_norm == 0.0 or not np.isfinite(self.start_norm):
            raise ValueError("starting vector must be nonzero and finite")
        self.breakdown = False
        self._scale = 0.0  # largest recurrence coefficient magnitude seen

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def _breakdown_tol(self) -> float:
        return self.n * _EPS * max(self._scale, 1e-300)

    def advance(self, steps: int) -> None:
        for _ in range(max(0, int(steps))):
            if self.breakdown:
                return
            self._step()

    def _step(self) -> None:
        raise NotImplementedError


class LanczosProcess(_ProcessBase):
    """Three-term Lanczos recurrence for a Hermitian operator.

    ``reorth`` is "full" (basis stored, two orthogonalization sweeps per
    step) or "none" (three live vectors). With ``store_basis=False`` only
    the recurrence coefficients are retained, which is the first sweep of
    the two-pass strategy.
    """

    def __init__(self, apply_a, b, reorth="full", store_basis=True):
        super().__init__(apply_a, b)
        if reorth not in ("full", "none"):
            raise ValueError("reorth must be 'full' or 'none'")
        if reorth == "full" and not store_basis:
            raise ValueError("full reorthogonalization requires a stored basis")
        self.reorth = reorth
        self._store = store_basis
        self.alphas: list[float] = []
        self.betas: list[float] = []  # betas[j] produced at step j+1
        self._u_prev = None
        self._u = b / self.start_norm
        self._columns = [self._u] if store_basis else None
        self._stack = None  # cached column_stack of _columns

    @property
    def dimension(self) -> int:
        return len(self.alphas)

    def _basis_array(self, upto) -> np.ndarray:
        if self._stack is None or self._stack.shape[1] < upto:
            self._stack = np.column_stack(self._columns)
        return self._stack[:, :upto]

    def _step(self) -> None:
        j = len(self.alphas)
        w = self._apply(self._u)
        if j > 0:
            w = w - self.betas[j - 1] * self._u_prev
        alpha = float(np.real(np.vdot(self._u, w)))
        w = w - alpha * self._u
        if self.reorth == "full" and j > 0:
            basis = self._basis_array(j + 1)
            for _ in range(2):
                w = w - basis @ (basis.conj().T @ w)
        beta = float(np.linalg.norm(w))
        self.alphas.append(alpha)
        self._scale = max(self._scale, abs(alpha), beta)
        if beta <= self._breakdown_tol():
            self.betas.append(beta)
            self.breakdown = True
            self._u_prev, self._u = self._u, None
            return
        self.betas.append(beta)
        u_next = w / beta
        self._u_prev, self._u = self._u, u_next
        if self._store:
            self._columns.append(u_next)
            self._stack = None

    def compressed(self, m=None) -> np.ndarray:
        m = self.dimension if m is None else m
        g = np.diag(np.asarray(self.alphas[:m], dtype=np.float64))
        if m > 1:
            off = np.asarray(self.betas[: m - 1], dtype=np.float64)
            g += np.diag(off, 1) + np.diag(off, -1)
        return g

    def basis_matrix(self, m=None) -> np.ndarray:
        if not self._store:
            raise ValueError("basis was not stored")
        m = self.dimension if m is None else m
        return self._basis_array(m)

    def decomposition(self, m=None) -> KrylovDecomposition:
        m = self.dimension if m is None else m
        if not 1 <= m <= self.dimension:
            raise ValueError("invalid decomposition size")
        next_norm = self.betas[m - 1]
        if self._store:
            basis = self._basis_array(m)
            next_vector = self._columns[m] if m < len(self._columns) else None
        else:
            basis = np.empty((self.n, 0))
            next_vector = self._u if m == self.dimension else None
        broke = self.breakdown and m == self.dimension
        return KrylovDecomposition(basis, self.compressed(m), next_norm,
                                   next_vector, self.start_norm, broke)


class ArnoldiProcess(_ProcessBase):
    """Arnoldi recurrence with modified Gram-Schmidt and one
    reorthogonalization pass; stores the full basis."""

    _GROW = 32

    def __init__(self, apply_a, b):
        super().__init__(apply_a, b)
        self._m = 0
        dtype = np.result_type(np.asarray(b).dtype, np.float64)
        self._v = np.zeros((self.n, self._GROW), dtype=dtype)
        self._h = np.zeros((self._GROW + 1, self._GROW), dtype=dtype)
        self._v[:, 0] = np.asarray(b) / self.start_norm

    @property
    def dimension(self) -> int:
        return self._m

    def _ensure_capacity(self, cols, dtype):
        grown = max(cols, self._v.shape[1])
        dtype = np.result_type(self._v.dtype, dtype)
        if grown > self._v.shape[1] or dtype != self._v.dtype:
            cap = max(grown, 2 * self._v.shape[1])
            v = np.zeros((self.n, cap), dtype=dtype)
            v[:, : self._m + 1] = self._v[:, : self._m + 1]
            h = np.zeros((cap + 1, cap), dtype=dtype)
            h[: self._m + 1, : self._m] = self._h[: self._m + 1, : self._m]
            self._v, self._h = v, h

    def _step(self) -> None:
        j = self._m
        w = self._apply(self._v[:, j])
        self._ensure_capacity(j + 2, w.dtype)
        w = w.astype(self._v.dtype, copy=True)
        for i in range(j + 1):
            hij = np.vdot(self._v[:, i], w)
            self._h[i, j] += hij
            w -= hij * self._v[:, i]
        for i in range(j + 1):  # one reorthogonalization pass
            corr = np.vdot(self._v[:, i], w)
            self._h[i, j] += corr
            w -= corr * self._v[:, i]
        beta = float(np.linalg.norm(w))
        self._h[j + 1, j] = beta
        self._scale = max(self._scale, float(np.abs(self._h[: j + 2, j]).max()))
        self._m = j + 1
        if beta <= self._breakdown_tol():
            self.breakdown = True
            return
        self._v[:, j + 1] = w / beta

    def compressed(self, m=None) -> np.ndarray:
        m = self._m if m is None else m
        return self._h[:m, :m].copy()

    def basis_matrix(self, m=None) -> np.ndarray:
        m = self._m if m is None else m
        return self._v[:, :m]

    def decomposition(self, m=None) -> KrylovDecomposition:
        m = self._m if m is None else m
        if not 1 <= m <= self._m:
            raise ValueError("invalid decomposition size")
        next_norm = float(np.real(self._h[m, m - 1]))
        broke = self.breakdown and m == self._m
        next_vector = None if broke else self._v[:, m].copy() if m < self._v.shape[1] else None
        return KrylovDecomposition(self._v[:, :m].copy(), self.compressed(m),
                                   next_norm, next_vector, self.start_norm, broke)


def lanczos(apply_a, b, m, reorth="full") -> KrylovDecomposition:
    """Runs m Lanczos steps for a Hermitian operator.

    Returns early with the breakdown flag set when the recurrence norm
    falls below n*eps times the largest coefficient seen, in which case the
    Krylov space is invariant and the decomposition exact.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    proc = LanczosProcess(apply_a, b, reorth=reorth)
    proc.advance(m)
    return proc.decomposition()


def arnoldi(apply_a, b, m) -> KrylovDecomposition:
    """Runs m Arnoldi steps; Hessenberg compression, breakdown as in lanczos."""
    if m < 1:
        raise ValueError("m must be at least 1")
    proc = ArnoldiProcess(apply_a, b)
    proc.advance(m)
    return proc.decomposition()


def lanczos_twopass(apply_a, b, m, consume) -> KrylovDecomposition:
    """Two-pass Lanczos without storing the basis.

    The first sweep runs the plain recurrence (three live vectors) and
    records the tridiagonal coefficients. If ``consume`` has a ``start``
    method it is then called with the basis-free decomposition, which is
    the point where the caller derives whatever small matrix it wants to
    contract against. The second sweep replays the recurrence with the
    recorded coefficients, in the exact operation order of the first, so
    regenerated vectors are bitwise identical, and hands each column to
    ``consume(j, u_j)``. A ``finish`` method, when present, is called last.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    proc = LanczosProcess(apply_a, b, reorth="none", store_basis=False)
    proc.advance(m)
    decomp = proc.decomposition()
    start = getattr(consume, "start", None)
    if start is not None:
        start(decomp)

    apply_fn = as_operator(apply_a)
    b = np.asarray(b)
    steps = proc.dimension
    u_prev = None
    u = b / proc.start_norm
    for j in range(steps):
        consume(j, u)
        if j == steps - 1:
            break
        w = apply_fn(u)
        if j > 0:
            w = w - proc.betas[j - 1] * u_prev
        w = w - proc.alphas[j] * u
        u_prev, u = u, w / proc.betas[j]
    finish = getattr(consume, "finish", None)
    if finish is not None:
        finish()
    return decomp


class DiagonalAccumulator:
    """Streams diag(U X U^*) out of a two-pass run.

    ``make_x`` receives the basis-free decomposition and returns the small
    matrix X. The accumulator owns an (n, m) workspace for the streamed
    columns; the recurrence itself stays at three live vectors.
    """

    def __init__(self, make_x):
        self._make_x = make_x
        self.x = None
        self._cols = None
        self.diagonal = None

    def start(self, decomp: KrylovDecomposition) -> None:
        self.x = np.asarray(self._make_x(decomp))
        self._m = decomp.m
        self._cols = None

    def __call__(self, j, u):
        if self._cols is None:
            dtype = np.result_type(u.dtype, self.x.dtype)
            self._cols = np.zeros((u.shape[0], self._m), dtype=dtype)
        self._cols[:, j] = u

    def finish(self) -> None:
        w = self._cols @ self.x
        self.diagonal = np.sum(w * self._cols.conj(), axis=1)


class FullAccumulator:
    """Materializes U X U^* from a two-pass run; testing at small n only."""

    def __init__(self, make_x):
        self._make_x = make_x
        self.x = None
        self._cols = None
        self.matrix = None

    def start(self, decomp: KrylovDecomposition) -> None:
        self.x = np.asarray(self._make_x(decomp))
        self._m = decomp.m
        self._cols = None

    def __call__(self, j, u):
        if self._cols is None:
            dtype = np.result_type(u.dtype, self.x.dtype)
            self._cols = np.zeros((u.shape[0], self._m), dtype=dtype)
        self._cols[:, j] = u

    def finish(self) -> None:
        self.matrix = self._cols @ self.x @ self._cols.conj().T
