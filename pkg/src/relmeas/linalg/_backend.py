"""Pick the Jacobi kernel at import time.

The compiled extension is used when it imports; otherwise the pure-Python
sweep.  ``use_backend`` switches explicitly (benchmarks and the kernel
parity tests use it).
"""
from . import _jacobi_py

try:
    from . import _jacobi_ext
except ImportError:  # extension not built
    _jacobi_ext = None

KERNELS = {"python": _jacobi_py.jacobi_sweeps}
if _jacobi_ext is not None:
    KERNELS["compiled"] = _jacobi_ext.jacobi_sweeps

BACKEND = "compiled" if "compiled" in KERNELS else "python"
jacobi_sweeps = KERNELS[BACKEND]


def use_backend(name):
    """Select the kernel named ``name`` ("python" or "compiled")."""
    global BACKEND, jacobi_sweeps
    if name not in KERNELS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(KERNELS)}")
    BACKEND = name
    jacobi_sweeps = KERNELS[name]


def current_backend():
    return BACKEND


def available_backends():
    return sorted(KERNELS)
