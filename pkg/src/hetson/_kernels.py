"""Compiled inner loops for link-budget evaluation."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def wall_crossings(ax, ay, bx, by, cx, cy, r):
    """Number of times segment a-b crosses the circle (c, r): 0, 1 or 2."""
    da = (ax - cx) ** 2 + (ay - cy) ** 2 < r * r
    db = (bx - cx) ** 2 + (by - cy) ** 2 < r * r
    if da != db:
        return 1
    if da:
        return 0
    ux = bx - ax
    uy = by - ay
    seg2 = ux * ux + uy * uy
    if seg2 == 0.0:
        return 0
    t = ((cx - ax) * ux + (cy - ay) * uy) / seg2
    if t <= 0.0 or t >= 1.0:
        return 0
    px = ax + t * ux - cx
    py = ay + t * uy - cy
    if px * px + py * py < r * r:
        return 2
    return 0


@njit(cache=True)
def _shadow(grid, x0, y0, spacing, x, y):
    nx = grid.shape[0]
    ny = grid.shape[1]
    gx = (x - x0) / spacing
    gy = (y - y0) / spacing
    gx = min(max(gx, 0.0), nx - 1.000001)
    gy = min(max(gy, 0.0), ny - 1.000001)
    ix = int(gx)
    iy = int(gy)
    fx = gx - ix
    fy = gy - iy
    return ((1 - fx) * (1 - fy) * grid[ix, iy] + fx * (1 - fy) * grid[ix + 1, iy]
            + (1 - fx) * fy * grid[ix, iy + 1] + fx * fy * grid[ix + 1, iy + 1])


@njit(cache=True)
def rsrp_matrix(rx, tx, intercept, slope, power, active, apt_c, apt_r,
                shadow, x0, y0, spacing, wall_loss, min_coupling):
    """RSRP (dBm) for every receiver/transmitter pair; inactive cells give -inf."""
    n = rx.shape[0]
    c = tx.shape[0]
    na = apt_c.shape[0]
    out = np.empty((n, c))
    for i in range(n):
        ax = rx[i, 0]
        ay = rx[i, 1]
        for j in range(c):
            if not active[j]:
                out[i, j] = -np.inf
                continue
            bx = tx[j, 0]
            by = tx[j, 1]
            lox = min(ax, bx)
            hix = max(ax, bx)
            loy = min(ay, by)
            hiy = max(ay, by)
            walls = 0
            for k in range(na):
                cx = apt_c[k, 0]
                cy = apt_c[k, 1]
                r = apt_r[k]
                if cx + r < lox or cx - r > hix or cy + r < loy or cy - r > hiy:
                    continue
                walls += wall_crossings(ax, ay, bx, by, cx, cy, r)
            d = math.sqrt((ax - bx) ** 2 + (ay - by) ** 2)
            d = max(d, 1.0)
            loss = intercept[j] + slope[j] * math.log10(d / 1000.0) + walls * wall_loss
            loss = max(loss, min_coupling)
            out[i, j] = power[j] - loss - _shadow(shadow[j], x0, y0, spacing, ax, ay)
    return out
