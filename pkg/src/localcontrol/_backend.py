"""Backend selection for the hot kernels.

The compiled Cython extension is preferred; the pure numpy fallback is
used when it is missing.  Set LOCALCONTROL_BACKEND=python (or =compiled)
to force a choice.
"""

import os

from . import _fallback

_choice = os.environ.get("LOCALCONTROL_BACKEND", "").lower()

if _choice == "python":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _fallback
        BACKEND = "python"

METHOD_WARD = _fallback.METHOD_WARD
METHOD_COMPLETE = _fallback.METHOD_COMPLETE
METHOD_AVERAGE = _fallback.METHOD_AVERAGE
METHOD_MCQUITTY = _fallback.METHOD_MCQUITTY
METHOD_MEDIAN = _fallback.METHOD_MEDIAN
METHOD_CENTROID = _fallback.METHOD_CENTROID

lw_linkage = _impl.lw_linkage
best_split_sorted = _impl.best_split_sorted
grouped_spearman = _impl.grouped_spearman
