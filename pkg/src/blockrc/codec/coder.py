"""Coefficient-coder kernel selection.

Prefers the compiled extension (_coder) and falls back to the pure-Python
twin (_coder_py); both produce bit-identical payloads.  Set BLOCKRC_PURE_PY=1
to force the fallback, e.g. for the kernel benchmark or parity tests.
"""

from __future__ import annotations

import os

if os.environ.get("BLOCKRC_PURE_PY"):
    from . import _coder_py as _impl

    COMPILED = False
else:
    try:
        from . import _coder as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from . import _coder_py as _impl

        COMPILED = False

encode_coefficients = _impl.encode_coefficients
decode_coefficients = _impl.decode_coefficients


def kernel_name() -> str:
    return "compiled" if COMPILED else "pure-python"
