"""Pure-numpy fallback for the resonator-bank kernel.

Vectorizes across modes inside a per-sample loop, rotating three work
buffers instead of copying state. Slower than the compiled kernel (see
benchmarks/resonator_bench.py) but numerically interchangeable; unlike the
compiled kernel it allocates its three work buffers per call.
"""

import numpy as np

# Flush decayed states to zero between calls (subnormal floats would slow
# the whole bank down ~25x); same threshold as the compiled kernel.
_FLUSH = 1e-250


def run_resonators(a1, a2, y1, y2, pend, out, start, n):
    """Advance every two-pole resonator by n samples, summing into out.

    Matches sonomat._kernel.run_resonators: y[i] = a1*y[i-1] + a2*y[i-2]
    with pend added at the first sample; y1/y2/pend updated in place.
    """
    if n <= 0:
        return
    u = y1.copy()   # y[i-1]
    v = y2.copy()   # y[i-2]
    w = np.empty_like(u)
    scratch = np.empty_like(u)
    for i in range(start, start + n):
        np.multiply(a1, u, out=w)
        np.multiply(a2, v, out=scratch)
        w += scratch
        if i == start:
            w += pend
        out[i] += w.sum()
        u, v, w = w, u, v
    u[np.abs(u) < _FLUSH] = 0.0
    v[np.abs(v) < _FLUSH] = 0.0
    y1[:] = u
    y2[:] = v
    pend[:] = 0.0
