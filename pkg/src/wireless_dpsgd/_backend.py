"""Pick the rate-search implementation at import time.

The compiled kernel is used when it was built; set
``WIRELESS_DPSGD_PURE_PYTHON=1`` to force the pure-Python search.
"""
import os

from . import _search_py

try:
    if os.environ.get("WIRELESS_DPSGD_PURE_PYTHON") == "1":
        raise ImportError("pure Python requested")
    from . import _search_ext
except ImportError:
    _search_ext = None

BACKENDS = {"python": _search_py}
if _search_ext is not None:
    BACKENDS["cython"] = _search_ext

DEFAULT = "cython" if _search_ext is not None else "python"


def get(name=None):
    name = name or DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"search backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
