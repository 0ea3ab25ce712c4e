"""Numeric kernels: compiled extension when available, pure Python otherwise.

Set ``SKEWFORMS_PURE=1`` to force the pure backend.  ``BACKEND`` reports the
selected implementation; program compilation is always the pure module's.
"""

from __future__ import annotations

import os

from . import pure
from .pure import (  # noqa: F401  (re-exported surface)
    KernelUnsupportedError,
    Program,
    SystemPack,
    compile_program,
    pack_programs,
)

if os.environ.get("SKEWFORMS_PURE"):
    _impl = pure
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = "pure" if _impl is pure else "compiled"

eval_one = _impl.eval_one
eval_many = _impl.eval_many
rk4 = _impl.rk4
