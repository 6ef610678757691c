# cython: boundscheck=False, wraparound=False, cdivision=True
# Resonator-bank inner loop, sample-major: the recurrence is serial per
# mode but independent across modes, so the inner mode loop vectorizes.
# State arrays (a few hundred KB at worst) stay cache-resident.

# States below this are flushed to zero between calls: decayed modes would
# otherwise drift into subnormal floats, where the FPU is ~25x slower. The
# threshold sits ~500 dB under the audio floor and far above the subnormal
# range, so one block (<= 4096 samples) can never decay across it into
# subnormal territory.
cdef double FLUSH = 1e-250


def run_resonators(double[::1] a1, double[::1] a2,
                   double[::1] y1, double[::1] y2,
                   double[::1] pend, double[::1] out,
                   Py_ssize_t start, Py_ssize_t n):
    """Advance every two-pole resonator by n samples, summing into out.

    y[i] = a1*y[i-1] + a2*y[i-2], with pend[k] added at the first sample
    and consumed. State arrays are updated in place; nothing is allocated.
    """
    cdef Py_ssize_t nmodes = a1.shape[0]
    cdef Py_ssize_t k, i
    cdef double acc, w
    if n <= 0:
        return
    with nogil:
        acc = 0.0
        for k in range(nmodes):  # first sample consumes the pending impulses
            w = a1[k] * y1[k] + a2[k] * y2[k] + pend[k]
            y2[k] = y1[k]
            y1[k] = w
            pend[k] = 0.0
            acc += w
        out[start] += acc
        for i in range(start + 1, start + n):
            acc = 0.0
            for k in range(nmodes):
                w = a1[k] * y1[k] + a2[k] * y2[k]
                y2[k] = y1[k]
                y1[k] = w
                acc += w
            out[i] += acc
        for k in range(nmodes):
            if -FLUSH < y1[k] < FLUSH:
                y1[k] = 0.0
            if -FLUSH < y2[k] < FLUSH:
                y2[k] = 0.0
