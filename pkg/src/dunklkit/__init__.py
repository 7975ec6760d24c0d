"""Type-A Dunkl kernel and intertwining operator by recursive rank reduction.

The rank-``n`` kernel ``E_k(X, lam)`` for dominant ``lam`` is written as an
alternating-sum integral of rank ``n - 1`` kernels over the interlacing box of
``lam``; :func:`kernel_reduce` evaluates it with tensor Gauss-Jacobi rules
that absorb the endpoint singularities of the weight. Independent oracles
(truncated intertwining-operator series, the rank-one closed form, simplex
integrals, exact polynomial identities) are provided for cross-checking.

Indices are 0-based in the Python API.
"""

from __future__ import annotations

from dunklkit.algebra import (
    Permutation,
    SparsePolynomial,
    all_permutations,
    divided_difference,
    eval_poly,
    permute_poly,
    pi_product,
    poly_arith,
)
from dunklkit.dunkl import (
    FunctionHandle,
    check_commutativity,
    dunkl_apply_fn,
    dunkl_apply_poly,
)
from dunklkit.errors import (
    ArityMismatchError,
    CostGuardError,
    DegenerateLambdaError,
    DunklError,
    IntertwineSolveError,
    RecursionDepthError,
)
from dunklkit.intertwine import (
    IntertwineTable,
    apply_intertwine,
    build_intertwine,
    intertwine_reduction,
    kernel_series,
    restrict_f_lambda,
    xu_univariate,
)
from dunklkit.kernel import (
    DominantPoint,
    EvalReport,
    KernelConfig,
    alternating_q_sum,
    c_norm,
    change_of_vars_t,
    jacobian_t,
    kernel_a1_closed,
    kernel_compact,
    kernel_reduce,
    kernel_symmetrized,
    kernel_unsorted,
    kernel_xu,
    negativity_witness,
    q_factor,
    w_weight_regular,
)
from dunklkit.quadrature import box_grid, gauss_jacobi, simplex_rule

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
