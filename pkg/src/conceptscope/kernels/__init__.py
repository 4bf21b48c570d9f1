"""Hot-kernel dispatch: numba build when available, numpy fallback otherwise.

See :mod:`conceptscope.backend` for the selection flag.
"""

from ..backend import BACKEND

if BACKEND == "numba":
    from .numba_impl import log_sigmoid, logp_grad, row_dists, sigmoid
else:
    from .numpy_impl import log_sigmoid, logp_grad, row_dists, sigmoid

__all__ = ["sigmoid", "log_sigmoid", "logp_grad", "row_dists", "BACKEND"]
