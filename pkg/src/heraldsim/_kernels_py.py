"""Pure-Python reference kernels.

These are the sequential inner loops of the simulator and correlator. The
compiled twins in ``_ckernels.pyx`` must return identical results; the test
suite runs both against each other.
"""
import numpy as np


def coincidence_mask(a, b, offset, half_window):
    """Greedy earliest-first one-to-one matching of tags ``a`` against ``b``.

    A pair matches when ``-half_window <= b - a - offset < half_window``.
    Both inputs must be sorted ascending. Returns a boolean mask over ``a``
    marking the tags that found a partner.
    """
    a_list = np.asarray(a, dtype=np.float64).tolist()
    b_list = np.asarray(b, dtype=np.float64).tolist()
    matched = np.zeros(len(a_list), dtype=bool)
    nb = len(b_list)
    j = 0
    for i, t in enumerate(a_list):
        # b tags earlier than this window can never match a later a tag
        while j < nb and b_list[j] - t - offset < -half_window:
            j += 1
        if j == nb:
            break
        if b_list[j] - t - offset < half_window:
            matched[i] = True
            j += 1
    return matched


def dead_time_filter(times, dead_time):
    """Non-paralyzable dead time; exact duplicates collapse to one click."""
    t_list = np.asarray(times, dtype=np.float64).tolist()
    kept = []
    last = None
    for t in t_list:
        if last is None or (t > last and t - last >= dead_time):
            kept.append(t)
            last = t
    return np.asarray(kept, dtype=np.float64)


def merge_gates(clicks, latency, width):
    """Open one ``[t + latency, t + latency + width)`` window per click and merge overlaps."""
    c_list = np.asarray(clicks, dtype=np.float64).tolist()
    opens = []
    closes = []
    for t in c_list:
        lo = t + latency
        hi = lo + width
        if closes and lo <= closes[-1]:
            if hi > closes[-1]:
                closes[-1] = hi
        else:
            opens.append(lo)
            closes.append(hi)
    return np.asarray(opens, dtype=np.float64), np.asarray(closes, dtype=np.float64)
