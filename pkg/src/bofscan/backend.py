"""Selects the kernel backend at import time.

Prefers the compiled extension; falls back to the numpy implementation when
the extension is missing or BOFSCAN_PURE_PYTHON is set to a non-empty value
other than "0".
"""

import os

if os.environ.get("BOFSCAN_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as kernels

    COMPILED = False
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from . import _kernels_py as kernels

        COMPILED = False


def backend_name() -> str:
    return "compiled" if COMPILED else "python"
