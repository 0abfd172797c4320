"""Hot-loop dispatch: compiled kernels by default, numpy with PTL_BACKEND=numpy."""
from ._backend import BACKEND

if BACKEND == "numba":
    from ._nb import (chain_product, hyperboloid_points, pair_max_exceeds,
                      max_pair_log_norm, running_log_norms, side_sums,
                      vector_growth)
else:
    from ._np import (chain_product, hyperboloid_points, pair_max_exceeds,
                      max_pair_log_norm, running_log_norms, side_sums,
                      vector_growth)

__all__ = [
    "BACKEND",
    "chain_product",
    "hyperboloid_points",
    "max_pair_log_norm",
    "pair_max_exceeds",
    "running_log_norms",
    "side_sums",
    "vector_growth",
]
