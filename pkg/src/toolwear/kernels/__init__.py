"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the
pure-Python kernels take over. Both produce bit-identical results. Set
TOOLWEAR_KERNELS=pure|compiled to force a backend (compiled raises if the
extension is missing); the default is auto.
"""

from __future__ import annotations

import os

_requested = os.environ.get("TOOLWEAR_KERNELS", "auto").lower()

if _requested == "pure":
    from . import _pure as _impl
    BACKEND = "pure"
elif _requested == "compiled":
    from . import _core as _impl  # ImportError here means no built extension
    BACKEND = "compiled"
elif _requested == "auto":
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        from . import _pure as _impl
        BACKEND = "pure"
else:
    raise RuntimeError(
        f"TOOLWEAR_KERNELS={_requested!r} not understood "
        "(expected auto, pure, or compiled)")

build_forest = _impl.build_forest
predict_votes = _impl.predict_votes
coalition_values = _impl.coalition_values


def available_backends() -> dict:
    """Name -> kernel module for every importable backend."""
    from . import _pure
    found = {"pure": _pure}
    try:
        from . import _core
        found["compiled"] = _core
    except ImportError:
        pass
    return found
