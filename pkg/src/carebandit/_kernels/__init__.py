"""Backend selection for the replay hot kernels.

The compiled extension is preferred when it imported cleanly; otherwise
the numpy fallback is used.  ``CAREBANDIT_KERNELS`` forces a backend:
``auto`` (default), ``cython``, or ``python``.
"""

import os

_requested = os.environ.get("CAREBANDIT_KERNELS", "auto").strip().lower()
if _requested not in ("auto", "cython", "python"):
    raise ImportError(
        f"CAREBANDIT_KERNELS must be 'auto', 'cython' or 'python', got {_requested!r}"
    )

if _requested == "python":
    from . import _ridge_py as _impl

    BACKEND = "python"
elif _requested == "cython":
    from . import _ridge_cy as _impl

    BACKEND = "cython"
else:
    try:
        from . import _ridge_cy as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _ridge_py as _impl

        BACKEND = "python"

sm_update = _impl.sm_update
quad_form = _impl.quad_form
ucb_scores = _impl.ucb_scores
mean_scores = _impl.mean_scores

__all__ = ["BACKEND", "sm_update", "quad_form", "ucb_scores", "mean_scores"]
