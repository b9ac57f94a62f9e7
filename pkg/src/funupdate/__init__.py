"""Krylov-projection updates of matrix functions under low-rank modifications.

Approximates f(A + D) - f(A) for a large sparse A and a rank-k modification
D as a tensorized factor U X V^* built from matrix-vector products with A
and A^*, together with a-priori convergence and decay bound calculators, a
dense reference oracle, and a CLI for network-centrality updating.
"""

from .bounds import (BoundValue, DecayParams, Ellipse, Interval, SpectralRegion,
                     Wedge, bound_exp_superlinear, bound_exp_wedge, bound_markov,
                     bound_markov_hpd, chebyshev_poly_bound, decay_params_from_matrix,
                     demko_decay, field_of_values_boundary, leftmost_real_point,
                     phi_abs, stieltjes_k_constant, stieltjes_update_decay)
from .densefun import (EigenDecomposition, FunctionSpec, eigen_decompose,
                       eval_matrix_function, expm_dense, function_from_name,
                       is_hermitian, scalar_derivative, scalar_values, spectral_norm)
from .errors import DomainError, MatrixMarketError, OracleScaleError
from .krylov import (ArnoldiProcess, DiagonalAccumulator, FullAccumulator,
                     KrylovDecomposition, LanczosProcess, arnoldi, as_operator,
                     lanczos, lanczos_twopass)
from .oracle import block_lemma_check, dense_update_reference, telescope_check
from .sparse import (Graph, SparseMatrix, check_declared_symmetry, gen_convdiff1d,
                     gen_laplace2d, graph_distance, graph_distances,
                     load_matrix_market, spmv)
from .update import (LowRankModification, SolveOptions, UpdateFactor,
                     build_block_compression, error_estimate, extract_diagonal,
                     general_factor, general_update, hermitian_factor,
                     hermitian_update, rank_k_update, split_hermitian, xm_hermitian)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
