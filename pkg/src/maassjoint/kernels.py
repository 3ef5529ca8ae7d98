"""Kernel selector: compiled extension when available, numpy otherwise.

Set ``MAASSJOINT_PURE=1`` to force the pure-Python versions.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("MAASSJOINT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py

kbessel_scaled = _impl.kbessel_scaled
kloosterman = _impl.kloosterman
kloosterman_table = _impl.kloosterman_table
jbessel_imag_scaled = _impl.jbessel_imag_scaled
