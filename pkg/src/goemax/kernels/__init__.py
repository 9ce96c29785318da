"""Kernel backend selection.

Prefers the compiled extension; falls back to the pure-Python twin when the
extension is unavailable or GOEMAX_PURE_PYTHON is set. Both implement the same
operations in the same order and produce bit-identical results.
"""

import os

from goemax.kernels import _pyloops

if os.environ.get("GOEMAX_PURE_PYTHON"):
    _impl = _pyloops
else:
    try:
        from goemax.kernels import _cyloops as _impl
    except ImportError:
        _impl = _pyloops

run_slots = _impl.run_slots
error_chain = _impl.error_chain


def backend_name() -> str:
    return _impl.BACKEND


def available_backends():
    names = ["python"]
    try:
        from goemax.kernels import _cyloops  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    if name == "python":
        return _pyloops
    if name == "cython":
        from goemax.kernels import _cyloops

        return _cyloops
    raise ValueError(f"unknown kernel backend {name!r}")
