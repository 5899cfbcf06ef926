"""Hot numeric kernels: compiled extension when available, numpy fallback.

Set ``NOMASIM_PURE_PYTHON=1`` to force the fallback even if the compiled
extension is installed (used by the kernel benchmark and parity tests).
"""

import os

from . import _python

_impl = _python
if os.environ.get("NOMASIM_PURE_PYTHON") != "1":
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        pass

waterfill_rows = _impl.waterfill_rows
candidate_rates = _impl.candidate_rates
viterbi_decode_batch = _impl.viterbi_decode_batch
viterbi_decode_soft_batch = _impl.viterbi_decode_soft_batch


def backend() -> str:
    """Name of the active kernel implementation: 'native' or 'python'."""
    return "python" if _impl is _python else "native"
