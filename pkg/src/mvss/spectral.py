"""Persistence Mayer-Vietoris spectral sequence over barcode bases.

Chains of the double complex are dicts keyed by (block, simplex), where block
indexes a nerve simplex within its column. A total chain is a dict
column -> chain; its total degree is carried separately.

Every generator of E^r_{p,q} carries a total-complex representative lying in
Z^r (its total differential sits in columns <= p - r). Class coordinates of a
chain are computed on the first page by a local solve per nerve simplex and
then carried page to page by solving against (incoming image | next page).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

from .barcode import INF, BarcodeBasis, BarcodeVector, Interval, basis_key, make_vector
from .complexes import CoverAssignment, FilteredComplex, Nerve, boundary_column, boundary_matrix, nerve, restrict
from .errors import InternalConsistencyError, UsageError
from .persistence import (ImageKernel, PersistenceMatrix, PointwiseSolver, axpy, degree_homology, image_kernel,
                          presentation_barcode, quotient_basis)
from .runtime import parallel_map_deterministic


# ---------------------------------------------------------------- chain helpers

def chain_add(acc: dict, a: int, x: dict, p: int) -> None:
    axpy(acc, a, x, p)


def total_add(acc: dict, a: int, x: dict, p: int) -> None:
    for col, ch in x.items():
        tgt = acc.setdefault(col, {})
        axpy(tgt, a, ch, p)
        if not tgt:
            del acc[col]


NO_COLUMN = -(10 ** 9)


def total_top(z: dict) -> int:
    """Highest column with a nonzero component (NO_COLUMN for the zero chain)."""
    return max((c for c, ch in z.items() if ch), default=NO_COLUMN)


def is_zero_total(z: dict) -> bool:
    return not any(z.values())


class DoubleComplex:
    """S_{p,q} = sum over sigma in N_p of S_q(U_sigma), with d and (-1)^q delta."""

    def __init__(self, cover: CoverAssignment, nv: Nerve, p: int = 5, max_q: int | None = None):
        self.cover = cover
        self.nerve = nv
        self.p = p
        K = cover.complex
        self.max_q = K.dim if max_q is None else min(max_q, K.dim)
        self.max_p = nv.dim
        self.blocks = [[restrict(cover, s) for s in nv[c]] for c in range(nv.dim + 1)]
        self._faces = [self._face_table(c) for c in range(nv.dim + 1)]

    def _face_table(self, c: int):
        out = []
        for sigma in self.nerve[c]:
            row = []
            if c >= 1:
                for i in range(c + 1):
                    tau = sigma[:i] + sigma[i + 1:]
                    row.append((self.nerve.index[c - 1][tau], (-1) ** i % self.p))
            out.append(row)
        return out

    def value(self, s) -> float:
        return self.cover.complex.value(s)

    def d(self, chain: dict) -> dict:
        p = self.p
        out: dict = {}
        for (b, s), x in chain.items():
            for f, sg in boundary_column(s, p):
                key = (b, f)
                v = (out.get(key, 0) + sg * x) % p
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
        return out

    def delta(self, col: int, chain: dict) -> dict:
        """Unsigned Čech map from column col to column col - 1."""
        p = self.p
        out: dict = {}
        if col == 0:
            return out
        faces = self._faces[col]
        for (b, s), x in chain.items():
            for t, sg in faces[b]:
                key = (t, s)
                v = (out.get(key, 0) + sg * x) % p
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
        return out

    def dtot(self, z: dict, n: int) -> dict:
        """Total differential of a chain of total degree n."""
        p = self.p
        out: dict = {}
        for col, ch in z.items():
            if not ch:
                continue
            q = n - col
            if q >= 1:
                total_add(out, 1, {col: self.d(ch)}, p)
            if col >= 1:
                sign = (-1) ** q % p
                total_add(out, sign, {col - 1: self.delta(col, ch)}, p)
        return {c: ch for c, ch in out.items() if ch}

    def chain_value(self, z: dict) -> float:
        v = -INF
        for ch in z.values():
            for (_, s) in ch:
                v = max(v, self.value(s))
        return v


# ---------------------------------------------------------------- zero page

@dataclass
class LocalE1:
    """Local persistent homology of U_sigma in degree q, with data for local solves."""

    col: int
    block: int
    q: int
    bars: list
    reps: list  # chains {simplex: coeff}
    image: list  # BarcodeVector over local q-simplex indices
    preimages: list  # BarcodeVector over local (q+1)-simplex indices
    seconds: float = 0.0
    _solver: PointwiseSolver | None = field(default=None, repr=False)


def local_homology_task(args) -> LocalE1:
    """One zero-page task: PH_q of a single patch intersection."""
    col, block, U, q, p = args
    t0 = time.perf_counter()
    Vq = U.bars(q)
    d_out = boundary_matrix(U, q, p) if q >= 1 and U.n_simplices(q) else None
    d_in = boundary_matrix(U, q + 1, p) if U.n_simplices(q + 1) else None
    if d_out is not None and not len(d_out.codomain):
        d_out = None
    hd = degree_homology(Vq, d_out, d_in, p)
    sims = U.simplices[q] if q < len(U.simplices) else []
    reps = [{sims[i]: x for i, x in v.coeffs.items()} for v in hd.reps]
    return LocalE1(col, block, q, list(hd.bars), reps, hd.image, hd.preimages, time.perf_counter() - t0)


def _local_solver(loc: LocalE1, U: FilteredComplex, p: int) -> PointwiseSolver:
    if loc._solver is None:
        idx = U.index[loc.q] if loc.q < len(U.index) else {}
        cols = list(loc.image)
        for bar, rep in zip(loc.bars, loc.reps):
            cols.append(BarcodeVector({idx[s]: x for s, x in rep.items()}, bar.birth, bar))
        rows = U.bars(loc.q).bars
        loc._solver = PointwiseSolver(cols, rows, p)
    return loc._solver


# ---------------------------------------------------------------- pages

@dataclass
class PageEntry:
    """Generators of E^r_{p,q} with representatives and page data."""

    r: int
    pos: tuple
    bars: list
    reps: list  # total chains, degree p + q
    coords: list | None = None  # vectors over E^{r-1} at the same position
    diff: PersistenceMatrix | None = None  # d^r out of this position
    ik: ImageKernel | None = None
    next_solver: PointwiseSolver | None = None  # (incoming image | E^{r+1}) over E^r
    n_incoming: int = 0
    incoming_pre: list | None = None  # preimages (over source E^r) of incoming image vectors
    origin: list | None = None  # for r = 1: (block, local index) per generator

    @property
    def basis(self) -> BarcodeBasis:
        return BarcodeBasis(self.bars)

    def __len__(self) -> int:
        return len(self.bars)


@dataclass
class ExtensionRecord:
    """Gluing data of one total degree."""

    n: int
    gens: list  # (position, index in E^inf entry, bar), in generator order
    relations: list  # (degree, {generator: coeff}, generators involved, originating generator)
    bars: list  # resulting (Interval, positions) pairs
    deaths: list = field(default_factory=list)


class SpectralSequence:
    def __init__(self, cover: CoverAssignment, nv: Nerve | None = None, p: int = 5, max_q: int | None = None,
                 workers: int = 1, verify: bool = True):
        self.p = p
        self.nerve = nerve(cover) if nv is None else nv
        self.dc = DoubleComplex(cover, self.nerve, p, max_q)
        self.workers = workers
        self.verify = verify
        self.pages: dict[int, dict[tuple, PageEntry]] = {}
        self.local: dict[tuple, list[LocalE1]] = {}
        self.task_seconds: list[float] = []
        self.collapse_page: int | None = None
        self.L = self.nerve.dim + 1

    # positions of the double complex
    def positions(self) -> list[tuple]:
        return [(c, q) for c in range(self.dc.max_p + 1) for q in range(self.dc.max_q + 1)]

    def entry(self, r: int, pos: tuple) -> PageEntry | None:
        return self.pages.get(r, {}).get(pos)

    # ------------------------------------------------------------ page 1
    def zero_page(self) -> dict:
        dc, p = self.dc, self.p
        tasks = []
        for c in range(dc.max_p + 1):
            for b, U in enumerate(dc.blocks[c]):
                for q in range(dc.max_q + 1):
                    tasks.append((c, b, U, q, p))
        results = parallel_map_deterministic(local_homology_task, tasks, self.workers, backend="process")
        self.task_seconds = [res.seconds for res in results]
        for res in results:
            self.local.setdefault((res.col, res.q), []).append(res)
        page = {}
        for pos in self.positions():
            locs = self.local.get(pos, [])
            bars, reps, origin = [], [], []
            for loc in locs:
                for k, (bar, rep) in enumerate(zip(loc.bars, loc.reps)):
                    bars.append(bar)
                    reps.append({pos[0]: {(loc.block, s): x for s, x in rep.items()}})
                    origin.append((loc.block, k))
            basis, perm = BarcodeBasis.sort(bars)
            page[pos] = PageEntry(1, pos, basis.bars, [reps[i] for i in perm], origin=[origin[i] for i in perm])
            page[pos]._e1_index = {origin[i]: k for k, i in enumerate(perm)}
        self.pages[1] = page
        return page

    # ------------------------------------------------------------ class coordinates
    def e1_coords(self, col: int, q: int, chain: dict, r: float):
        """E^1 coordinates at value r of a vertical cycle in S_{col,q}, plus a vertical preimage."""
        p = self.p
        entry = self.pages[1][(col, q)]
        locs = self.local.get((col, q), [])
        per_block: dict[int, dict] = {}
        for (b, s), x in chain.items():
            per_block.setdefault(b, {})[s] = x
        coords: dict[int, int] = {}
        w: dict = {}
        for b, ch in per_block.items():
            loc = locs[b]
            U = self.dc.blocks[col][b]
            solver = _local_solver(loc, U, p)
            idx = U.index[q]
            try:
                y = {idx[s]: x for s, x in ch.items()}
            except KeyError as exc:
                raise InternalConsistencyError(f"chain leaves U_{self.nerve[col][b]}") from exc
            sol = solver.solve(y, r)
            if sol is None:
                raise InternalConsistencyError(
                    f"local solve failed at value {r} in U_{self.nerve[col][b]}, degree {q}")
            n_img = len(loc.image)
            up = U.simplices[q + 1] if q + 1 < len(U.simplices) else []
            for i, x in sol.items():
                if i < n_img:
                    for k, y2 in loc.preimages[i].coeffs.items():
                        key = (b, up[k])
                        v = (w.get(key, 0) + x * y2) % p
                        if v:
                            w[key] = v
                        else:
                            w.pop(key, None)
                else:
                    g = entry._e1_index[(b, i - n_img)]
                    coords[g] = (coords.get(g, 0) + x) % p
        return {g: x for g, x in coords.items() if x}, w

    def lift(self, z: dict, col: int, q: int, r: float, upto: int):
        """Coordinates of z on pages 1..upto at column col (z must lie in Z^upto there).

        Returns (xs, ys, w1) where xs[j-1] are E^j coordinates, ys[j-1] the
        coefficients on incoming d^j image vectors, and w1 the vertical preimage.
        """
        x, w1 = self.e1_coords(col, q, z.get(col, {}), r)
        xs, ys = [x], []
        for j in range(1, upto):
            ent = self.pages[j][(col, q)]
            if not x:
                xs.append({})
                ys.append({})
                x = {}
                continue
            sol = ent.next_solver.solve(x, r)
            if sol is None:
                raise InternalConsistencyError(
                    f"page {j} class at {(col, q)} value {r} is not in (image | next page)")
            nin = ent.n_incoming
            y = {i: v for i, v in sol.items() if i < nin}
            x = {i - nin: v for i, v in sol.items() if i >= nin}
            xs.append(x)
            ys.append(y)
        return xs, ys, w1

    def push_down(self, z: dict, col: int, n: int, r: float, R: int):
        """Given a total cycle z of degree n in F_col whose E^R class at value r is zero,
        return (z', W) with z' = z - dtot(W) lying in F_{col-1}."""
        p = self.p
        W: dict = {}
        q = n - col
        for _ in range(R + 2):
            if not z.get(col):
                return z, W
            xs, ys, w1 = self.lift(z, col, q, r, R)
            if not xs[0]:
                h = {col: w1}
                total_add(W, 1, h, p)
                total_add(z, -1, self.dc.dtot(h, n + 1), p)
                if z.get(col):
                    raise InternalConsistencyError(f"vertical preimage left a residue in column {col}")
                return z, W
            m = next((j for j in range(1, len(xs)) if not xs[j]), None)
            if m is None:
                raise InternalConsistencyError(f"class at {(col, q)} value {r} does not vanish on page {R}")
            y = ys[m - 1]
            src = self.pages[m][(col, q)]
            src_pos = (col + m, q - m + 1)
            sent = self.pages[m][src_pos]
            u: dict[int, int] = {}
            for i, x in y.items():
                pre = src.incoming_pre[i]
                for k, c in pre.evaluate(sent.bars, r).items():
                    u[k] = (u.get(k, 0) + x * c) % p
            h: dict = {}
            for k, c in u.items():
                if c:
                    total_add(h, c, sent.reps[k], p)
            total_add(W, 1, h, p)
            total_add(z, -1, self.dc.dtot(h, n + 1), p)
        raise InternalConsistencyError("push_down did not terminate")

    # ------------------------------------------------------------ differentials
    def page_differential(self, k: int, pos: tuple) -> PersistenceMatrix:
        """Matrix of d^k out of E^k at pos, into E^k at (p-k, q+k-1)."""
        c, q = pos
        ent = self.pages[k][pos]
        tgt_pos = (c - k, q + k - 1)
        tgt = self.pages[k].get(tgt_pos)
        dom = BarcodeBasis(ent.bars)
        if tgt is None:
            return PersistenceMatrix.zero(dom, BarcodeBasis([]), self.p)
        cod = BarcodeBasis(tgt.bars)
        n = c + q
        cols = []
        for a, rep in enumerate(ent.reps):
            z = self.dc.dtot(rep, n)
            if total_top(z) > c - k:
                raise InternalConsistencyError(f"representative {a} at {pos} is not in Z^{k}")
            if not z.get(c - k):
                cols.append({})
                continue
            xs, _, _ = self.lift(z, c - k, q + k - 1, ent.bars[a].birth, k)
            cols.append(xs[-1])
        M = PersistenceMatrix(dom, cod, cols, self.p)
        bad = M.naturality_violations()
        if bad:
            raise InternalConsistencyError(f"d^{k} at {pos} is not natural at entries {bad[:3]}")
        return M

    def _diff_task(self, args):
        k, pos = args
        ent = self.pages[k][pos]
        M = self.page_differential(k, pos)
        ik = image_kernel(M, want_preimages=True, check=False) if not M.is_zero() else None
        return pos, M, ik

    def _turn_task(self, args):
        k, pos = args
        p = self.p
        c, q = pos
        n = c + q
        ent = self.pages[k][pos]
        Vb = ent.bars
        src = self.pages[k].get((c + k, q - k + 1))
        if src is not None and src.ik is not None:
            H, Hpre = src.ik.image, src.ik.preimages
        else:
            H, Hpre = [], []
        if ent.ik is not None:
            G = ent.ik.kernel
        else:
            G = [make_vector({i: 1}, b.birth, Vb, p) for i, b in enumerate(Vb)]
        Q = quotient_basis(H, G, Vb, p)
        reps = []
        for bar, vec in zip(Q.bars, Q.reps):
            rep: dict = {}
            for i, x in vec.coeffs.items():
                total_add(rep, x, ent.reps[i], p)
            z = self.dc.dtot(rep, n)
            if total_top(z) > c - k:
                raise InternalConsistencyError(f"new generator at {pos} is not in Z^{k}")
            if z.get(c - k):
                if c - k < 0:
                    raise InternalConsistencyError("cycle residue below column 0")
                _, W = self.push_down(z, c - k, n - 1, bar.birth, k)
                total_add(rep, -1, W, p)
            if self.verify:
                top = total_top(self.dc.dtot(rep, n))
                if top > c - k - 1:
                    raise InternalConsistencyError(f"updated representative at {pos} is not in Z^{k + 1}")
            reps.append(rep)
        cols = list(H) + [BarcodeVector(v.coeffs, bar.birth, bar) for bar, v in zip(Q.bars, Q.reps)]
        solver = PointwiseSolver(cols, Vb, p)
        new = PageEntry(k + 1, pos, list(Q.bars), reps, coords=[dict(v.coeffs) for v in Q.reps])
        return pos, new, solver, len(H), Hpre

    def run_page(self, k: int) -> bool:
        """Compute d^k everywhere and turn to page k+1. Returns whether any d^k is nonzero."""
        positions = [pos for pos in self.positions() if self.pages[k].get(pos) is not None]
        diffs = parallel_map_deterministic(self._diff_task, [(k, pos) for pos in positions],
                                           self.workers, backend="thread")
        nonzero = False
        for pos, M, ik in diffs:
            ent = self.pages[k][pos]
            ent.diff, ent.ik = M, ik
            nonzero |= ik is not None
        turned = parallel_map_deterministic(self._turn_task, [(k, pos) for pos in positions],
                                            self.workers, backend="thread")
        page = {}
        for pos, new, solver, nin, hpre in turned:
            ent = self.pages[k][pos]
            ent.next_solver, ent.n_incoming, ent.incoming_pre = solver, nin, hpre
            page[pos] = new
        self.pages[k + 1] = page
        return nonzero

    def run(self) -> "SpectralSequence":
        if 1 not in self.pages:
            self.zero_page()
        last_nonzero = 0
        for k in range(1, self.L):
            if self.run_page(k):
                last_nonzero = k
        self.collapse_page = last_nonzero + 1
        return self

    def detect_collapse(self) -> tuple[int, int]:
        """(structural collapse page L, first page after the last nonzero differential)."""
        return self.L, self.collapse_page if self.collapse_page is not None else self.L

    @property
    def infinity(self) -> dict[tuple, PageEntry]:
        return self.pages[self.L]

    def page_dims(self, r: int, value: float) -> dict[tuple, int]:
        return {pos: sum(1 for b in e.bars if b.contains(value)) for pos, e in self.pages[r].items()}

    # ------------------------------------------------------------ extension
    def solve_extension(self, n: int) -> ExtensionRecord:
        """Glue the E^inf bars of total degree n into the barcode of H_n."""
        p, L = self.p, self.L
        inf = self.infinity
        gens = []
        for c in range(min(n, self.dc.max_p) + 1):
            pos = (c, n - c)
            ent = inf.get(pos)
            if ent is None:
                continue
            for i, bar in enumerate(ent.bars):
                gens.append((pos, i, bar))
        order = sorted(range(len(gens)), key=lambda g: (gens[g][2].birth, gens[g][0][0], gens[g][1]))
        gens = [gens[g] for g in order]
        gidx = {(g[0], g[1]): k for k, g in enumerate(gens)}
        relations = []
        for k, (pos, i, bar) in enumerate(gens):
            if bar.death == INF:
                continue
            b = bar.death
            c0 = pos[0]
            z: dict = {}
            total_add(z, 1, inf[pos].reps[i], p)
            rel = {k: 1}
            for col in range(c0, -1, -1):
                if not z.get(col):
                    continue
                xs, _, _ = self.lift(z, col, n - col, b, L)
                x = xs[-1]
                if col == c0 and x:
                    raise InternalConsistencyError(f"E^inf generator at {pos} survives past its death")
                for j, cj in x.items():
                    total_add(z, -cj, inf[(col, n - col)].reps[j], p)
                    g = gidx[((col, n - col), j)]
                    rel[g] = (rel.get(g, 0) - cj) % p
                z, _ = self.push_down(z, col, n, b, L)
            if not is_zero_total(z):
                raise InternalConsistencyError(f"extension of generator at {pos} left a residue")
            rel = {g: x for g, x in rel.items() if x}
            relations.append((b, rel, sorted(rel), k))
        births = [g[2].birth for g in gens]
        deaths, killer, used = presentation_barcode(births, [(b, rel) for b, rel, _, _ in relations], p)
        out = []
        for k, (pos, i, bar) in enumerate(gens):
            if deaths[k] <= births[k]:
                continue
            srcs = {pos}
            if killer[k] is not None:
                for ri in used[k]:
                    srcs |= {gens[g][0] for g in relations[ri][2]}
            out.append((Interval(births[k], deaths[k]), tuple(sorted(srcs, key=lambda s: (-s[0], s[1])))))
        out.sort(key=lambda e: (e[0].birth, e[0].death, e[1]))
        return ExtensionRecord(n, gens, relations, out, deaths)


def zero_page(cover: CoverAssignment, nv: Nerve | None = None, max_q: int | None = None, p: int = 5,
              workers: int = 1) -> SpectralSequence:
    ss = SpectralSequence(cover, nv, p, max_q, workers)
    ss.zero_page()
    return ss


def run_spectral_sequence(cover: CoverAssignment, nv: Nerve | None = None, max_q: int | None = None, p: int = 5,
                          workers: int = 1) -> SpectralSequence:
    return SpectralSequence(cover, nv, p, max_q, workers).run()


def persistent_homology(cover: CoverAssignment, max_dim: int | None = None, p: int = 5, workers: int = 1,
                        nv: Nerve | None = None):
    """PH_n bars for n <= max_dim via the spectral sequence and extension."""
    ss = run_spectral_sequence(cover, nv, None, p, workers)
    top = ss.dc.max_q if max_dim is None else max_dim
    return ss, {n: ss.solve_extension(n) for n in range(top + 1)}
