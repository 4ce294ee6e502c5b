"""Independent oracles used across the test suite.

Everything here is deliberately written against the raw definitions (brute
force, dense sampling, exhaustive enumeration) without calling the package's
own computational paths, so a test cross-checks two genuinely different
routes to the same value.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_diameter(points) -> float:
    """O(n^2) max pairwise distance with pure-python arithmetic."""
    pts = np.asarray(points, dtype=float)
    best = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = math.sqrt(sum((a - b) ** 2 for a, b in zip(pts[i], pts[j])))
            best = max(best, d)
    return best


def brute_hausdorff(a, b) -> float:
    """O(n*m) symmetric Hausdorff distance, pure python."""
    def directed(u, v):
        worst = 0.0
        for p in u:
            nearest = min(math.sqrt(sum((x - y) ** 2 for x, y in zip(p, q))) for q in v)
            worst = max(worst, nearest)
        return worst

    pa = [tuple(p) for p in np.asarray(a, dtype=float)]
    pb = [tuple(p) for p in np.asarray(b, dtype=float)]
    return max(directed(pa, pb), directed(pb, pa))


def saturation_closed_form(latent, t, t0=273.16, e0=611.657, r=8.31) -> float:
    """Constant-latent-heat closed form, written out by hand."""
    return e0 * math.exp(-(latent / r) * (1.0 / t - 1.0 / t0))


def dense_mixing_classification(exhaust, ambient, e_liq, e_ice, samples=100_000,
                                t_min=180.0, t_max=320.0):
    """Dense-sampling oracle for the mixing-line scenarios.

    Returns (outcome, liquid crossing brackets): the line is sampled on the
    overlap of [T_amb, T_exh] and the curve domain, crossings located by sign
    change, persistence by the ambient endpoint against the ice curve.
    """
    t_e, p_e = exhaust
    t_a, p_a = ambient

    def line(t):
        return p_a + (p_e - p_a) * (t - t_a) / (t_e - t_a)

    lo, hi = max(t_a, t_min), min(t_e, t_max)
    ts = np.linspace(hi, lo, samples)
    f = np.array([line(t) - e_liq(t) for t in ts])
    brackets = []
    for i in range(len(ts) - 1):
        if f[i] == 0.0 or f[i] * f[i + 1] < 0:
            brackets.append((ts[i + 1], ts[i]))
    if f[-1] == 0.0:
        brackets.append((ts[-1], ts[-1]))

    if not brackets:
        return "no_contrail", brackets
    outcome = "persistent" if p_a >= e_ice(max(min(t_a, t_max), t_min)) else "non_persistent"
    return outcome, brackets


def point_in_polygon(point, polygon) -> bool:
    """Ray casting; polygon is a closed cycle without the repeated vertex."""
    x, y = point
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def points_in_polygon(points, polygon) -> np.ndarray:
    """Vectorized ray casting for many query points."""
    pts = np.asarray(points, dtype=float)
    poly = np.asarray(polygon, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        straddles = (y1 > y) != (y2 > y)
        if not np.any(straddles):
            continue
        x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles & (x < x_cross)
    return inside


def monte_carlo_polygon_area(polygon, samples=1_000_000, seed=0) -> float:
    poly = np.asarray(polygon, dtype=float)
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(samples, 2))
    hits = int(points_in_polygon(pts, poly).sum())
    box = float(np.prod(hi - lo))
    return box * hits / samples


def segments_intersect(p1, p2, p3, p4) -> bool:
    """Proper intersection of open segments (shared endpoints do not count)."""
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def boundary_is_simple(boundary) -> bool:
    """No two non-adjacent edges of the closed cycle intersect."""
    b = np.asarray(boundary, dtype=float)
    n = len(b)
    edges = [(b[i], b[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex
            if segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def dbscan_oracle(points, eps, min_pts):
    """Connected components of the eps-graph restricted to core points, via
    a brute-force distance matrix and BFS; borders attach to the lowest
    produced cluster id reachable, ids renumbered by min contained index."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    within = dist <= eps
    core = within.sum(axis=1) >= min_pts

    labels = np.full(n, -1, dtype=int)
    cluster = 0
    order = np.argsort(np.arange(n))  # index order = particle order here
    for seed in order:
        if not core[seed] or labels[seed] >= 0:
            continue
        stack = [seed]
        labels[seed] = cluster
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(within[u] & core):
                if labels[v] < 0:
                    labels[v] = cluster
                    stack.append(v)
        cluster += 1
    for i in range(n):
        if labels[i] < 0:
            reachable = sorted(labels[j] for j in np.flatnonzero(within[i] & core) if labels[j] >= 0)
            if reachable:
                labels[i] = reachable[0]
    # renumber by minimal contained index for comparability
    remap = {}
    for g in sorted(set(labels[labels >= 0]), key=lambda g: np.flatnonzero(labels == g).min()):
        remap[g] = len(remap)
    return np.array([remap[g] if g >= 0 else -1 for g in labels])


def partitions_equal(labels_a, labels_b) -> bool:
    """Same grouping regardless of label values; noise (-1) must match."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if len(a) != len(b):
        return False
    if not np.array_equal(a == -1, b == -1):
        return False
    keep = a >= 0
    seen = {}
    for x, y in zip(a[keep], b[keep]):
        if x in seen:
            if seen[x] != y:
                return False
        else:
            seen[x] = y
    return len(set(seen.values())) == len(seen)


def exhaustive_min_crossings(graph) -> int:
    """Minimum crossing count over all per-column row orders (fixtures only)."""
    from contrailscope.tracking import crossing_count

    columns = [[n.id for n in col] for col in graph.columns]
    best = None
    def assign(perms):
        rows = {}
        for col_ids, perm in zip(columns, perms):
            for row, nid in enumerate(perm):
                rows[nid] = row
        return rows

    for perms in itertools.product(*(itertools.permutations(c) for c in columns)):
        count = crossing_count(graph, assign(perms))
        best = count if best is None else min(best, count)
    return best


def two_means_split(values: dict[str, float], iters=64):
    """1-D two-means; returns (low ids, high ids)."""
    ids = sorted(values)
    xs = np.array([values[i] for i in ids])
    c1, c2 = float(xs.min()), float(xs.max())
    for _ in range(iters):
        assign = np.abs(xs - c1) <= np.abs(xs - c2)
        n1, n2 = float(xs[assign].mean()), float(xs[~assign].mean())
        if (n1, n2) == (c1, c2):
            break
        c1, c2 = n1, n2
    low = [i for i, a in zip(ids, assign) if (a if c1 <= c2 else not a)]
    high = [i for i in ids if i not in low]
    return sorted(low), sorted(high)


def canonical_truth_events(truth_events, expand):
    return {(e["type"], e["time"], frozenset(frozenset(expand(n).tolist()) for n in e["nodes"]))
            for e in truth_events}


def canonical_graph_events(graph, assignments):
    members = {}
    for col, a in enumerate(assignments):
        for g in a.groups:
            members[f"{col}:{g.id}"] = frozenset(int(i) for i in g.particle_ids)
    return {(e.type, e.time, frozenset(members[nid] for nid in e.node_ids))
            for e in graph.events}
