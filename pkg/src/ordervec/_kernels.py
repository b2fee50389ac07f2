"""Compiled inner loops for training.

The epoch kernel applies one AdaGrad update per record, strictly in the
order given, so a single-worker run is bit-reproducible. ``nogil=True`` lets
multiple threads run the kernel on disjoint slices of the shuffled record
order against shared parameter arrays (lock-free, last write wins per
scalar) when reproducibility is traded for speed.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def shuffle(order, seed):
    """In-place Fisher-Yates driven by the splitmix stream for ``seed``.

    Must stay bit-compatible with ordervec.rng: draw n is
    mix64(seed + (n+1) * GOLDEN).
    """
    state = seed
    for i in range(order.shape[0] - 1, 0, -1):
        state = state + _GOLDEN
        j = int(_mix64(state) % np.uint64(i + 1))
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp


@njit(cache=True, nogil=True)
def run_epoch(pivot, context, pivot_bias, context_bias,
              gp, gc, gpb, gcb,
              rows, cols, log_x, weight, order, eta):
    """One pass of AdaGrad updates over records in ``order``.

    For record (i, j) the residual is pivot[i]·context[j] + biases - ln X_ij
    and the loss term is weight * residual**2; updates descend its exact
    gradient. A record whose update would produce a non-finite parameter is
    skipped and counted instead of committed. Returns (loss sum over
    committed records, skipped count).
    """
    k = pivot.shape[1]
    wi_new = np.empty(k)
    wj_new = np.empty(k)
    total = 0.0
    skipped = 0
    for idx in range(order.shape[0]):
        r = order[idx]
        i = rows[r]
        j = cols[r]
        dot = 0.0
        for c in range(k):
            dot += pivot[i, c] * context[j, c]
        diff = dot + pivot_bias[i] + context_bias[j] - log_x[r]
        f = weight[r]
        loss = f * diff * diff
        fdiff = 2.0 * f * diff

        ok = np.isfinite(loss)
        bi_new = 0.0
        bj_new = 0.0
        if ok:
            for c in range(k):
                gi = fdiff * context[j, c]
                gj = fdiff * pivot[i, c]
                wi_new[c] = pivot[i, c] - eta * gi / np.sqrt(gp[i, c] + gi * gi)
                wj_new[c] = context[j, c] - eta * gj / np.sqrt(gc[j, c] + gj * gj)
                if not (np.isfinite(wi_new[c]) and np.isfinite(wj_new[c])):
                    ok = False
            bi_new = pivot_bias[i] - eta * fdiff / np.sqrt(gpb[i] + fdiff * fdiff)
            bj_new = context_bias[j] - eta * fdiff / np.sqrt(gcb[j] + fdiff * fdiff)
            if not (np.isfinite(bi_new) and np.isfinite(bj_new)):
                ok = False
        if not ok:
            skipped += 1
            continue

        total += loss
        for c in range(k):
            gi = fdiff * context[j, c]
            gj = fdiff * pivot[i, c]
            gp[i, c] += gi * gi
            gc[j, c] += gj * gj
            pivot[i, c] = wi_new[c]
            context[j, c] = wj_new[c]
        gpb[i] += fdiff * fdiff
        gcb[j] += fdiff * fdiff
        pivot_bias[i] = bi_new
        context_bias[j] = bj_new
    return total, skipped
