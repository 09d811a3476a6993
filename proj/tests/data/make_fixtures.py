"""Regenerates the CLI fixtures and the golden error curve.

The golden curve comes from a separate numpy/scipy implementation of the
unfolded-edge geodesic graph, so it checks the C++ code rather than echoing it.

    python tests/data/make_fixtures.py
"""

from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

HERE = Path(__file__).resolve().parent
RADIUS = 20.0
AMPLITUDE = 0.3


def icosphere(levels):
    t = (1.0 + 5.0**0.5) / 2.0
    v = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
         (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(p, float) / np.linalg.norm(p) for p in v]
    for _ in range(levels):
        cache, faces = {}, []

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        f = faces
    return np.array(verts), np.array(f)


def write_off(path, v, f):
    with open(path, "w") as out:
        out.write(f"OFF\n{len(v)} {len(f)} 0\n")
        for p in v:
            out.write(" ".join(repr(float(x)) for x in p) + "\n")
        for t in f:
            out.write("3 " + " ".join(str(int(i)) for i in t) + "\n")


def write_pairs(path, pairs):
    with open(path, "w") as out:
        for a, b in pairs:
            out.write(f"{a} {b}\n")


def geodesic_graph(v, f):
    """Edge graph plus one planar-unfolding shortcut per interior edge."""
    opposite = {}
    for tri in f:
        for i in range(3):
            a, b, c = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
            opposite.setdefault((min(a, b), max(a, b)), []).append(c)
    rows, cols, vals = [], [], []
    for (a, b), opp in opposite.items():
        rows.append(a), cols.append(b), vals.append(np.linalg.norm(v[a] - v[b]))
        if len(opp) != 2:
            continue
        # Lay the edge on the x axis, opposite vertices on either side.
        e = v[b] - v[a]
        length = np.linalg.norm(e)
        x_axis = e / length
        flat = []
        for sign, c in zip((1.0, -1.0), opp):
            d = v[c] - v[a]
            x = d @ x_axis
            y = np.linalg.norm(d - x * x_axis)
            flat.append(np.array([x, sign * y]))
        p, q = flat
        # Where the segment p-q meets y = 0; it must lie strictly inside the edge.
        s = p[1] / (p[1] - q[1])
        x = p[0] + s * (q[0] - p[0])
        if 0.0 < x < length:
            rows.append(opp[0]), cols.append(opp[1]), vals.append(np.linalg.norm(p - q))
    n = len(v)
    g = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return g


def error_curve(v, f, corr, truth):
    g = geodesic_graph(v, f)
    area = 0.5 * np.linalg.norm(np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]]), axis=1).sum()
    d = dijkstra(g, directed=False, indices=truth)
    errors = d[np.arange(len(corr)), corr] / np.sqrt(area)
    thresholds = 0.25 * np.arange(200) / 199
    fractions = (errors[None, :] <= thresholds[:, None]).mean(axis=1)
    return thresholds, fractions


def main():
    v, f = icosphere(2)
    source = RADIUS * v
    target = source * np.exp(AMPLITUDE * v[:, 2])[:, None]
    n = len(v)
    write_off(HERE / "sphere_source.off", source, f)
    write_off(HERE / "sphere_target.off", target, f)

    rng = np.random.default_rng(5)
    write_pairs(HERE / "landmarks.txt", [(i, i) for i in rng.choice(n, 20, replace=False)])
    write_pairs(HERE / "truth.txt", [(i, i) for i in range(n)])

    # Every third vertex sent to a random neighbour, a few sent anywhere.
    neighbours = [set() for _ in range(n)]
    for a, b, c in f:
        neighbours[a] |= {b, c}
        neighbours[b] |= {a, c}
        neighbours[c] |= {a, b}
    corr = np.arange(n)
    for i in range(0, n, 3):
        corr[i] = rng.choice(sorted(neighbours[i]))
    for i in rng.choice(n, 10, replace=False):
        corr[i] = rng.integers(n)
    write_pairs(HERE / "corr_perturbed.txt", list(enumerate(corr)))
    write_pairs(HERE / "corr_short.txt", [(i, i) for i in range(n - 1)])

    thresholds, fractions = error_curve(target, f, corr, np.arange(n))
    with open(HERE / "golden_error_curve.csv", "w") as out:
        out.write("threshold,fraction\n")
        for t, p in zip(thresholds, fractions):
            out.write(f"{float(t)!r},{float(p)!r}\n")


if __name__ == "__main__":
    main()
