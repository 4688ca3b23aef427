"""Graph kernel backend selection.

The compiled extension is used when importable; set ``MOBSOC_PURE_PYTHON=1``
to force the pure-Python implementation.
"""
import os

from . import _pykernels

if os.environ.get("MOBSOC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

edge_betweenness = _impl.edge_betweenness
component_of = _impl.component_of
component_labels = _impl.component_labels


def backends():
    """Available kernel modules by name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
