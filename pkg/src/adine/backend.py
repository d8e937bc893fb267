"""Kernel backend selection: compiled extension if importable, numpy otherwise.

``kernels`` is the active backend module. The selection happens once at
import; :func:`set_backend` swaps it explicitly (used by the kernel benchmark
and by tests that exercise both implementations). Switching while runs are in
flight is not supported.
"""

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:
    _kernels_c = None

kernels = _kernels_c if _kernels_c is not None else _kernels_py

HAS_COMPILED = _kernels_c is not None


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if HAS_COMPILED else ("python",)


def active_backend() -> str:
    return kernels.NAME


def set_backend(name: str) -> None:
    global kernels
    if name == "python":
        kernels = _kernels_py
    elif name == "compiled":
        if _kernels_c is None:
            raise ValueError("compiled backend is not available (extension not built)")
        kernels = _kernels_c
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'compiled' or 'python'")
