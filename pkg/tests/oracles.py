"""Independent brute-force oracles the test suite checks the library against.

Everything here is deliberately naive: per-pixel Python loops, BFS flood
fill, all-pairs distance scans. No numpy vectorization, no shared helpers
with the library, so agreement between the two is evidence rather than
tautology. Where exact float equality is asserted, the oracle mirrors the
documented arithmetic (same operation order, fsum means, nearest-rank
percentiles) on top of exact integer geometry.
"""

import math


# ---------------------------------------------------------------- ensemble

def oracle_frequency(mask_list, x, y):
    """Foreground frequency at one pixel: plain count / total."""
    count = 0
    for m in mask_list:
        count += int(m[y][x])
    return count / len(mask_list)


def oracle_majority(mask_list, x, y, t_ave):
    return 1 if oracle_frequency(mask_list, x, y) > t_ave else 0


def oracle_uncertainty(f, formula, eps):
    if formula == "variance":
        return f * (1.0 - f)
    value = -0.5 * (f * math.log(f + eps) + (1.0 - f) * math.log(1.0 - f + eps))
    return max(value, 0.0)


def oracle_uncertainty_threshold(values, t_uc):
    """Min-max interpolated cut; returns per-value 0/1 list, all-zero if flat.

    Difference form (v - lo > t_uc * (hi - lo)) so the t_uc endpoints stay
    exact under positive rescaling of the values.
    """
    lo = min(values)
    hi = max(values)
    if hi == lo:
        return [0] * len(values)
    span = t_uc * (hi - lo)
    return [1 if v - lo > span else 0 for v in values]


# ------------------------------------------------------- connected components

def oracle_components(grid):
    """4-connected foreground components of a 2-D 0/1 nested list, as sets."""
    h = len(grid)
    w = len(grid[0])
    seen = [[False] * w for _ in range(h)]
    components = []
    for y0 in range(h):
        for x0 in range(w):
            if grid[y0][x0] and not seen[y0][x0]:
                comp = set()
                stack = [(x0, y0)]
                seen[y0][x0] = True
                while stack:
                    x, y = stack.pop()
                    comp.add((x, y))
                    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        nx, ny = x + dx, y + dy
                        if 0 <= nx < w and 0 <= ny < h and grid[ny][nx] and not seen[ny][nx]:
                            seen[ny][nx] = True
                            stack.append((nx, ny))
                components.append(comp)
    return components


# ------------------------------------------------------------------- metrics

def oracle_dice(a, b):
    """a, b: nested 0/1 lists (any rank flattened by caller to 2-D)."""
    na = nb = inter = 0
    for row_a, row_b in zip(a, b):
        for va, vb in zip(row_a, row_b):
            na += va
            nb += vb
            inter += va & vb
    if na + nb == 0:
        return 1.0
    return 2.0 * inter / (na + nb)


def oracle_boundary(grid):
    """Foreground cells with a background 4-neighbor; border is background."""
    h = len(grid)
    w = len(grid[0])
    out = [[0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            if not grid[y][x]:
                continue
            on_edge = x == 0 or x == w - 1 or y == 0 or y == h - 1
            if on_edge:
                out[y][x] = 1
                continue
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                if not grid[y + dy][x + dx]:
                    out[y][x] = 1
                    break
    return out


def _boundary_coords(grid):
    b = oracle_boundary(grid)
    return [(y, x) for y in range(len(grid)) for x in range(len(grid[0])) if b[y][x]]


def oracle_directed_distances(src, dst):
    """All-pairs scan: exact integer min squared distance, one sqrt at the end."""
    out = []
    for sy, sx in src:
        best = None
        for dy, dx in dst:
            d2 = (sy - dy) * (sy - dy) + (sx - dx) * (sx - dx)
            if best is None or d2 < best:
                best = d2
        out.append(math.sqrt(best))
    return out


def oracle_surface_metrics(a, b):
    """(assd, hd, hd95) between two nonempty 2-D 0/1 nested lists."""
    pa = _boundary_coords(a)
    pb = _boundary_coords(b)
    d_ab = oracle_directed_distances(pa, pb)
    d_ba = oracle_directed_distances(pb, pa)
    assd = (math.fsum(d_ab) + math.fsum(d_ba)) / (len(d_ab) + len(d_ba))
    hd = max(max(d_ab), max(d_ba))

    def rank95(dists):
        s = sorted(dists)
        k = -(-95 * len(s) // 100)
        return s[k - 1]

    hd95 = max(rank95(d_ab), rank95(d_ba))
    return assd, hd, hd95
