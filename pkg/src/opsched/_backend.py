"""Kernel backend selection.

The hot cost-model kernels exist twice: a Cython extension
(``opsched._kernels``) and a pure-Python fallback (``opsched._kernels_py``).
The compiled one is preferred when importable.  Set ``OPSCHED_BACKEND`` to
``compiled`` or ``python`` to force a choice (forcing ``compiled`` raises if
the extension was not built).
"""

import os

_forced = os.environ.get("OPSCHED_BACKEND")

if _forced == "python":
    from . import _kernels_py as kernels
elif _forced == "compiled":
    from . import _kernels as kernels  # noqa: F401  (ImportError is the signal)
elif _forced:
    raise ImportError(
        f"OPSCHED_BACKEND={_forced!r} is not recognized; use 'compiled' or 'python'"
    )
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.BACKEND


def load_backend(name):
    """Explicitly load one backend module ('compiled' or 'python')."""
    if name == "python":
        from . import _kernels_py

        return _kernels_py
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
