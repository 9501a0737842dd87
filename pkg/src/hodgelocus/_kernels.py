"""Select the compiled enumeration kernel when available, else the Python one.

Set HODGELOCUS_PURE_PYTHON=1 to force the fallback.
"""

import os

from . import _fpenum_py

if os.environ.get("HODGELOCUS_PURE_PYTHON") == "1":
    fincke_pohst = _fpenum_py.fincke_pohst
    BACKEND = "python"
else:
    try:
        from ._fpenum import fincke_pohst  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        fincke_pohst = _fpenum_py.fincke_pohst
        BACKEND = "python"

__all__ = ["fincke_pohst", "BACKEND"]
