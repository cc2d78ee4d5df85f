"""Backend selection for the event loops.

The compiled extension is used when it imports; otherwise the pure-Python
twins are used.  Both can be requested explicitly by name.
"""
from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

AVAILABLE = ("compiled", "python") if _compiled is not None else ("python",)
DEFAULT = AVAILABLE[0]


def get(backend: str = "auto"):
    """Return the kernel module for ``backend`` ('auto', 'compiled' or 'python')."""
    if backend == "auto":
        backend = DEFAULT
    if backend == "python":
        return _pykernels
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")
