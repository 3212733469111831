"""Pure-Python implementations of the hot kernels.

Inputs are CSR-style numpy arrays: ``ptr[i]:ptr[i+1]`` indexes the key ids of
transaction ``i`` inside ``ids``. Transactions are identified by position,
which is commit order.
"""

import numpy as np


def correlated_pairs(key_ptr, key_ids, failed, n_keys):
    """All (x, y), x < y, sharing a key where at least one of them failed.

    Returns two int64 arrays sorted lexicographically by (x, y).
    """
    n = len(key_ptr) - 1
    key_ptr = key_ptr.tolist()
    key_ids = key_ids.tolist()
    failed = failed.tolist()
    seen_all = [[] for _ in range(n_keys)]
    seen_failed = [[] for _ in range(n_keys)]
    stamp = [-1] * n
    xs: list[int] = []
    ys: list[int] = []
    for y in range(n):
        keys = key_ids[key_ptr[y]:key_ptr[y + 1]]
        y_failed = failed[y]
        for k in keys:
            for x in (seen_all[k] if y_failed else seen_failed[k]):
                if stamp[x] != y:
                    stamp[x] = y
                    xs.append(x)
                    ys.append(y)
        for k in keys:
            seen_all[k].append(y)
            if y_failed:
                seen_failed[k].append(y)
    xs_a = np.asarray(xs, dtype=np.int64)
    ys_a = np.asarray(ys, dtype=np.int64)
    order = np.lexsort((ys_a, xs_a))
    return xs_a[order], ys_a[order]


def pair_flags(xs, ys, w_ptr, w_ids, r_ptr, r_ids):
    """Per-pair bit flags.

    bit 0: write-key sets of x and y are disjoint.
    bit 1: x wrote a key that y read (point or range read).
    """
    w_ptr = w_ptr.tolist()
    w_ids = w_ids.tolist()
    r_ptr = r_ptr.tolist()
    r_ids = r_ids.tolist()
    out = np.zeros(len(xs), dtype=np.uint8)
    for i, (x, y) in enumerate(zip(xs.tolist(), ys.tolist())):
        wx = w_ids[w_ptr[x]:w_ptr[x + 1]]
        wy = w_ids[w_ptr[y]:w_ptr[y + 1]]
        ry = r_ids[r_ptr[y]:r_ptr[y + 1]]
        flag = 0
        if not any(k in wy for k in wx):
            flag |= 1
        if any(k in ry for k in wx):
            flag |= 2
        out[i] = flag
    return out
