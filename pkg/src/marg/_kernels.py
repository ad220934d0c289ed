"""Compiled inner loops. All kernels release the GIL so sweeps can use threads."""

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def grow_bfs(img, seed_h, seed_w, tau_l3, tau_s3, modular, stamp, mark, queue):
    """Breadth-first dual-threshold growth from one seed.

    ``img`` is an int32 ``(H, W, 3)`` array; thresholds are passed as three
    times their value so the comparison runs on integer channel sums. Pixels
    are stamped with ``mark`` when admitted, which lets one ``stamp`` buffer
    serve many regions. Returns the number of admitted pixels; their flat
    indices are ``queue[:n]`` in admission order.
    """
    H = img.shape[0]
    W = img.shape[1]
    s0 = img[seed_h, seed_w, 0]
    s1 = img[seed_h, seed_w, 1]
    s2 = img[seed_h, seed_w, 2]
    start = seed_h * W + seed_w
    stamp[start] = mark
    queue[0] = start
    head = 0
    tail = 1
    while head < tail:
        p = queue[head]
        head += 1
        h = p // W
        w = p - h * W
        c0 = img[h, w, 0]
        c1 = img[h, w, 1]
        c2 = img[h, w, 2]
        for di in range(-1, 2):
            for dj in range(-1, 2):
                if di == 0 and dj == 0:
                    continue
                hh = h + di
                ww = w + dj
                if modular:
                    if hh < 0:
                        hh += H
                    elif hh >= H:
                        hh -= H
                    if ww < 0:
                        ww += W
                    elif ww >= W:
                        ww -= W
                elif hh < 0 or hh >= H or ww < 0 or ww >= W:
                    continue
                q = hh * W + ww
                if stamp[q] == mark:
                    continue
                v0 = img[hh, ww, 0]
                v1 = img[hh, ww, 1]
                v2 = img[hh, ww, 2]
                if abs(v0 - c0) + abs(v1 - c1) + abs(v2 - c2) > tau_l3:
                    continue
                if abs(v0 - s0) + abs(v1 - s1) + abs(v2 - s2) > tau_s3:
                    continue
                stamp[q] = mark
                queue[tail] = q
                tail += 1
    return tail


@njit(nogil=True, cache=True)
def nearest_fill(labels):
    """Multi-source 8-connected BFS filling zeros with the nearest label.

    Sources are processed level by level; within a level a pixel reached from
    several sources keeps the smallest label.
    """
    H, W = labels.shape
    out = labels.copy()
    n = H * W
    frontier = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    nf = 0
    for p in range(n):
        if out.flat[p] != 0:
            frontier[nf] = p
            nf += 1
    while nf > 0:
        nn = 0
        for t in range(nf):
            p = frontier[t]
            h = p // W
            w = p - h * W
            lab = out[h, w]
            for di in range(-1, 2):
                for dj in range(-1, 2):
                    if di == 0 and dj == 0:
                        continue
                    hh = h + di
                    ww = w + dj
                    if hh < 0 or hh >= H or ww < 0 or ww >= W:
                        continue
                    cur = out[hh, ww]
                    if cur == 0:
                        out[hh, ww] = -lab
                        nxt[nn] = hh * W + ww
                        nn += 1
                    elif cur < 0 and -cur > lab:
                        out[hh, ww] = -lab
        for t in range(nn):
            q = nxt[t]
            out.flat[q] = -out.flat[q]
            frontier[t] = q
        nf = nn
    return out
