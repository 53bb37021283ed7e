"""Step-kernel backends.

The compiled extension is preferred when it was built; the pure-Python
kernel is a drop-in replacement. Selection happens here at import time and
can be overridden per bank via the ``backend`` argument.
"""

from __future__ import annotations

from . import step_py

try:
    from . import _step_cy

    HAVE_COMPILED = True
except ImportError:  # extension not built
    _step_cy = None
    HAVE_COMPILED = False

DEFAULT_BACKEND = "cython" if HAVE_COMPILED else "python"


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if HAVE_COMPILED else ("python",)


def make_kernel(token_of, kind, skip, owner, n_tokens, dim, backend: str = "auto"):
    if backend == "auto":
        backend = DEFAULT_BACKEND
    if backend == "cython":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return _step_cy.StepKernel(token_of, kind, skip, owner, n_tokens, dim)
    if backend == "python":
        return step_py.StepKernel(token_of, kind, skip, owner, n_tokens, dim)
    raise ValueError(f"unknown backend {backend!r} (expected auto, cython, or python)")
