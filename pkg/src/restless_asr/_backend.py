"""Selects the compiled kernels when available.

Set ``RESTLESS_ASR_BACKEND=python`` to force the pure-Python path.
"""
from __future__ import annotations

import os

try:
    from . import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

BACKENDS = ("compiled", "python")
DEFAULT = "python" if compiled is None or os.environ.get("RESTLESS_ASR_BACKEND") == "python" else "compiled"


def resolve(name: str | None = None) -> str:
    if name in (None, "auto"):
        return DEFAULT
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    if name == "compiled" and compiled is None:
        raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
    return name
