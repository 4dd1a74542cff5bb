"""Action-angle machinery and spherically symmetric Vlasov-Poisson flows in an
external Kepler potential.

The compiled core lives in ``kepmix._kepmix`` inside an installed wheel; for
in-tree runs the ``KEPMIX_EXT_DIR`` environment variable points at the build
directory that holds the extension.
"""

import os
import sys

try:
    from . import _kepmix as _core
except ImportError:
    _ext_dir = os.environ.get("KEPMIX_EXT_DIR", "")
    if _ext_dir and _ext_dir not in sys.path:
        sys.path.insert(0, _ext_dir)
    import _kepmix as _core

_EXPORTED = [name for name in dir(_core) if not name.startswith("_")]
globals().update({name: getattr(_core, name) for name in _EXPORTED})

__all__ = _EXPORTED
__version__ = "0.1.0"
