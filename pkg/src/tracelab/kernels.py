"""Backend dispatch for the hot kernels.

Prefers the compiled extension, falls back to the numpy versions.  The
active backend is recorded in BACKEND so reports and benchmarks can say
which one ran.
"""

from tracelab import _pykernels

try:
    from tracelab import _ckernels as _impl

    COMPILED = True
except ImportError:
    _impl = _pykernels
    COMPILED = False

BACKEND = "compiled" if COMPILED else "python"

pair_sups = _impl.pair_sups
pair_l1_dists = _impl.pair_l1_dists
subsequence_count_batch = _impl.subsequence_count_batch
scatter_traces = _impl.scatter_traces

# Both implementations, for parity tests and benchmarks.
IMPLEMENTATIONS = {"python": _pykernels}
if COMPILED:
    IMPLEMENTATIONS["compiled"] = _impl
