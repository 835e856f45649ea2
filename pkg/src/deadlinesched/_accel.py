"""JIT shim: compile hot kernels with numba when available.

Set DEADLINESCHED_NUMBA=0 to force the pure-numpy fallback path (useful for
debugging kernels and for the benchmark comparison in benchmarks/).
"""

import os

try:
    import numba as nb

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but be graceful
    _HAVE_NUMBA = False

JIT_ENABLED = _HAVE_NUMBA and os.environ.get("DEADLINESCHED_NUMBA", "1") != "0"


def njit(*args, **kwargs):
    if JIT_ENABLED:
        return nb.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda func: func
