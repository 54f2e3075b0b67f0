"""Pick the compiled core when it is importable, else the numpy fallback.

Set ``QCLASSIFY_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pycore

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None


def available() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def get(name: str) -> ModuleType:
    if name == "python":
        return _pycore
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled core is not built; run `pip install -e . --no-build-isolation`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


if _compiled is not None and not os.environ.get("QCLASSIFY_PURE_PYTHON"):
    NAME = "cython"
else:
    NAME = "python"

core = get(NAME)
