"""Compiled inner loop of the sliding-DFT processor."""
import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def sliding_blocks(xp, starts, spectra, block_len, n_out, hann, lo, hi1, offsets,
                   gains, level_start, level_step, floor_db, out):
    """Run the hop-1 recurrence from each exact spectrum in ``spectra``.

    ``spectra[b]`` is the rectangular DFT (bins 0..N/2) of the frame
    starting at ``starts[b]``; each block emits up to ``block_len`` samples.
    """
    n_bins = spectra.shape[1]
    n = 2 * (n_bins - 1)
    n_levels = gains.shape[1]
    tw = np.empty(n_bins, dtype=np.complex128)
    for k in range(n_bins):
        tw[k] = complex(math.cos(2.0 * math.pi * k / n), math.sin(2.0 * math.pi * k / n))
    x = np.empty(n_bins, dtype=np.complex128)
    xw = np.empty(n_bins, dtype=np.complex128)
    cs = np.empty(n_bins + 1)
    inv_n = 1.0 / n
    ln10_20 = math.log(10.0) / 20.0
    for b in range(starts.shape[0]):
        m0 = starts[b]
        for k in range(n_bins):
            x[k] = spectra[b, k]
        stop = min(block_len, n_out - m0)
        for i in range(stop):
            m = m0 + i
            if i > 0:
                delta = xp[m - 1 + n] - xp[m - 1]
                for k in range(n_bins):
                    x[k] = (x[k] + delta) * tw[k]
            if hann:
                xw[0] = 0.5 * x[0] - 0.5 * x[1].real
                for k in range(1, n_bins - 1):
                    xw[k] = 0.5 * x[k] - 0.25 * (x[k - 1] + x[k + 1])
                xw[n_bins - 1] = 0.5 * x[n_bins - 1] - 0.5 * x[n_bins - 2].real
            else:
                for k in range(n_bins):
                    xw[k] = x[k]
            cs[0] = 0.0
            for k in range(n_bins):
                p = xw[k].real * xw[k].real + xw[k].imag * xw[k].imag
                if 0 < k < n_bins - 1:
                    p *= 2.0
                cs[k + 1] = cs[k] + p
            acc = 0.0
            sign = 1.0
            for k in range(n_bins):
                s = cs[hi1[k]] - cs[lo[k]]
                level = floor_db
                if s > 0.0:
                    level = 10.0 * math.log10(s) + offsets[k]
                    if level < floor_db:
                        level = floor_db
                pos = (level - level_start) / level_step
                if pos < 0.0:
                    pos = 0.0
                elif pos > n_levels - 1.0:
                    pos = n_levels - 1.0
                i0 = int(pos)
                if i0 > n_levels - 2:
                    i0 = n_levels - 2
                frac = pos - i0
                g_db = gains[k, i0] * (1.0 - frac) + gains[k, i0 + 1] * frac
                term = math.exp(g_db * ln10_20) * xw[k].real * sign
                if 0 < k < n_bins - 1:
                    term *= 2.0
                acc += term
                sign = -sign
            out[m] = acc * inv_n
