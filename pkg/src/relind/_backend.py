"""Selects the compiled core or the pure Python fallback at import time.

Set ``RELIND_PURE_PYTHON=1`` to force the fallback.
"""

import os

from relind import _fallback

_FORCE_PYTHON = os.environ.get("RELIND_PURE_PYTHON", "").strip() not in ("", "0")

try:
    from relind import _core
except ImportError:  # extension not built
    _core = None

if _core is not None and not _FORCE_PYTHON:
    _active = _core
else:
    _active = _fallback


def available():
    """Names of the importable backends."""
    return ["compiled", "python"] if _core is not None else ["python"]


def get(name=None):
    """Return a backend module by name; ``None`` gives the active one."""
    if name is None:
        return _active
    if not isinstance(name, str):
        return name
    if name == "python":
        return _fallback
    if name == "compiled":
        if _core is None:
            raise ImportError("compiled core is not built; run `pip install -e .`")
        return _core
    raise ValueError(f"unknown backend {name!r}")


def set_active(name):
    global _active
    _active = get(name)


def active_name():
    return _active.NAME
