"""Hot-kernel backend selection.

Imports the compiled extension when available; falls back to the numpy
reference implementation otherwise. Set UAVSEC_PURE_PYTHON=1 to force
the fallback (used by the backend-equivalence tests and the benchmark).
"""

import os

from . import _ref

BACKEND = "python"
secrecy_accumulate = _ref.secrecy_accumulate
comm_sweep = _ref.comm_sweep

if os.environ.get("UAVSEC_PURE_PYTHON", "") != "1":
    try:
        from . import _core

        secrecy_accumulate = _core.secrecy_accumulate
        comm_sweep = _core.comm_sweep
        BACKEND = "compiled"
    except ImportError:
        pass

__all__ = ["BACKEND", "secrecy_accumulate", "comm_sweep", "_ref"]
