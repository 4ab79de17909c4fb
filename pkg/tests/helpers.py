"""Fixtures shared by the test modules: random morphisms, clouds, the torus and the circle cloud."""
from __future__ import annotations

import random

import numpy as np

from brute import columns_matrix, matmul_mod_p, rank_mod_p
from mvss.barcode import INF, BarcodeBasis, Interval, critical_values
from mvss.errors import CoverViolationError
from mvss.complexes import FilteredComplex, cover_from_vertex_sets, cubical_cover, vietoris_rips
from mvss.persistence import PersistenceMatrix

CIRCLE_POINTS = [(0, 0), (0, 0.5), (0, 1), (0.5, 0), (0.5, 1), (1, 0), (1, 1), (1, 0.2), (1, 0.8),
                 (1.5, 0), (1.5, 1), (2, 0), (2, 0.5), (2, 1)]


def rand_bars(rng: random.Random, n: int) -> BarcodeBasis:
    out = []
    for _ in range(n):
        a = rng.randint(0, 6)
        out.append(Interval(a, rng.choice([a + rng.randint(1, 5), INF])))
    return BarcodeBasis.sort(out)[0]


def rand_morphism(rng: random.Random, p: int = 5, max_bars: int = 12) -> PersistenceMatrix:
    A = rand_bars(rng, rng.randint(0, max_bars))
    B = rand_bars(rng, rng.randint(0, max_bars))
    cols = []
    for a in A:
        col = {}
        for i, b in enumerate(B):
            if b.birth <= a.birth < b.death and b.death <= a.death and rng.random() < 0.5:
                col[i] = rng.randint(1, p - 1)
        cols.append(col)
    return PersistenceMatrix(A, B, cols, p)


def image_kernel_failures(M: PersistenceMatrix, res) -> list:
    """Critical values where the result disagrees with brute-force elimination."""
    p = M.p
    bad = []
    for v in critical_values(M.domain, M.codomain):
        if v == INF:
            continue
        rows, cols, mat = M.pointwise(v)
        rk = rank_mod_p(mat, p) if rows and cols else 0
        I = [x.evaluate(M.codomain.bars, v) for x in res.image if x.assoc.contains(v)]
        K = [x.evaluate(M.domain.bars, v) for x in res.kernel if x.assoc.contains(v)]
        ok = len(I) == rk and len(K) == len(cols) - rk
        if I:
            Im = columns_matrix(I, rows, p)
            ok &= rank_mod_p(Im.tolist(), p) == rk
            both = np.hstack([np.array(mat, dtype=np.int64).reshape(len(rows), -1), Im])
            ok &= rank_mod_p(both.tolist(), p) == rk
        if K:
            Km = columns_matrix(K, cols, p)
            ok &= rank_mod_p(Km.tolist(), p) == len(K)
            ok &= not matmul_mod_p(mat, Km, p).any()
        for x, t in zip(res.image, res.preimages or []):
            if not x.assoc.contains(v):
                continue
            img = {}
            for j, c in t.evaluate(M.domain.bars, v).items():
                for i, y in M.columns[j].items():
                    if M.codomain[i].contains(v):
                        img[i] = (img.get(i, 0) + c * y) % p
            ok &= {i: c for i, c in img.items() if c} == x.evaluate(M.codomain.bars, v)
        if not ok:
            bad.append(v)
    return bad


def torus(cols: int = 4, rows: int = 3):
    """Triangulated torus on a cols x rows grid, everything at value 0, and its two-cylinder cover."""
    vid = lambda i, j: (i % cols) * rows + (j % rows)  # noqa: E731
    items = {}
    for i in range(cols):
        for j in range(rows):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            for t in ((a, b, c), (a, d, c)):
                t = tuple(sorted(t))
                items[t] = 0.0
                for e in ((t[0], t[1]), (t[0], t[2]), (t[1], t[2])):
                    items[e] = 0.0
            items[(a,)] = 0.0
    K = FilteredComplex(items)
    half = cols // 2
    U = {vid(i, j) for i in range(half + 1) for j in range(rows)}
    V = {vid(i, j) for i in range(half, cols + 1) for j in range(rows)}
    return K, cover_from_vertex_sets(K, [U, V])


def circle_cover():
    K = vietoris_rips(CIRCLE_POINTS, 2, 1.0)
    return K, cubical_cover(CIRCLE_POINTS, (2, 1), 1.0, K=K)


def random_cloud_case(rng: np.random.Generator, trial: int):
    """A cloud of at most 40 planar points with a 2x2 or 3x3 cover that satisfies the cover invariant."""
    n = int(rng.integers(10, 41))
    pts = rng.random((n, 2))
    max_filt = float(rng.uniform(0.15, 0.35))
    div = ((2, 2), (3, 3))[trial % 2]
    K = vietoris_rips(pts, 2, max_filt)
    # 2 * max_filt always works (a box grown by max_filt per side holds any simplex
    # of that diameter); start below it and grow until every simplex is covered
    overlap = 2 * max_filt * float(rng.uniform(0.4, 1.0))
    while True:
        try:
            return pts, max_filt, div, overlap, K, cubical_cover(pts, div, overlap, K=K)
        except CoverViolationError:
            overlap = min(overlap * 1.15, 2 * max_filt)


def random_cloud_cases(count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    return [random_cloud_case(rng, t) for t in range(count)]


def bar_pairs(ext_record):
    return sorted((b.birth, b.death) for b, _ in ext_record.bars)


def cech_exactness_failures(cover, nv, q: int, p: int = 5) -> list:
    """Pointwise check that 0 <- S_q(K) <- C_0 <- C_1 <- ... is exact.

    Returns a list of (k, r) where the rank count fails.
    """
    from mvss.barcode import critical_values as crit

    maps = [cech_map for cech_map in (_cech(cover, nv, k, q, p) for k in range(nv.dim + 1))]
    values = crit(*(m.domain for m in maps), maps[0].codomain)
    bad = []
    for r in values:
        if r == INF:
            continue
        ranks = []
        for M in maps:
            rows, cols, mat = M.pointwise(r)
            ranks.append(rank_mod_p(mat, p) if rows and cols else 0)
        ranks.append(0)
        base = sum(1 for b in maps[0].codomain if b.contains(r))
        if ranks[0] != base:
            bad.append((-1, r))
        for k, M in enumerate(maps):
            dim_k = sum(1 for b in M.domain if b.contains(r))
            if dim_k != ranks[k] + ranks[k + 1]:
                bad.append((k, r))
    return bad


def _cech(cover, nv, k, q, p):
    from mvss.complexes import cech_differential

    return cech_differential(cover, nv, k, q, p)[0]


def random_vertex_cover(rng: random.Random, K, n_patches: int):
    """Random vertex-set cover: every maximal simplex is put in some patch."""
    sets = [set() for _ in range(n_patches)]
    for q in range(len(K.simplices) - 1, -1, -1):
        for s in K.simplices[q]:
            if not any(all(v in S for v in s) for S in sets):
                sets[rng.randrange(n_patches)].update(s)
    for v in K.vertices():
        if rng.random() < 0.3:
            sets[rng.randrange(n_patches)].add(v)
    return cover_from_vertex_sets(K, [S for S in sets if S])
