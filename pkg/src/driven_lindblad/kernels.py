"""Backend selection for the RK4 hot loops.

The compiled extension is used when importable. Set
``DRIVEN_LINDBLAD_BACKEND=python`` to force the pure-Python fallback.
"""

import os

from . import _kernel_py

UNITARY = _kernel_py.UNITARY
ADME = _kernel_py.ADME
TDME = _kernel_py.TDME
TDME_INTERACTION = _kernel_py.TDME_INTERACTION

_compiled = None
if os.environ.get("DRIVEN_LINDBLAD_BACKEND", "").lower() != "python":
    try:
        from . import _kernel as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernel_py

closed_rk4 = _impl.closed_rk4
evolve_rk4 = _impl.evolve_rk4


def get_backend(name: str = None):
    """Module implementing the kernels: ``"cython"``, ``"python"`` or the
    active one when ``name`` is None."""
    if name is None:
        return _impl
    if name == "python":
        return _kernel_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel extension is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
