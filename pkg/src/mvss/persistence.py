"""Exact linear algebra of persistence modules given by barcode bases.

Matrices are stored as sparse columns ``{row: coeff}`` over GF(p). Domain
columns and codomain rows are indexed by positions in their barcode bases.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .barcode import INF, BarcodeBasis, BarcodeVector, Interval, basis_key, critical_values, make_vector
from .errors import InternalConsistencyError, UsageError


def inv(x: int, p: int) -> int:
    return pow(x, p - 2, p)


def axpy(y: dict, a: int, x: Mapping[int, int], p: int, keep=None) -> None:
    """y += a*x in place, mod p. ``keep`` filters which indices may be written."""
    for k, v in x.items():
        if keep is not None and not keep(k):
            continue
        nv = (y.get(k, 0) + a * v) % p
        if nv:
            y[k] = nv
        else:
            y.pop(k, None)


@dataclass
class PersistenceMatrix:
    """Coefficients k_{beta,alpha} of a persistence morphism A -> B."""

    domain: BarcodeBasis
    codomain: BarcodeBasis
    columns: list  # list[dict[int, int]], one per domain generator
    p: int = 5

    @classmethod
    def from_dense(cls, domain, codomain, rows, p: int = 5) -> "PersistenceMatrix":
        n_rows, n_cols = len(codomain), len(domain)
        if len(rows) != n_rows or any(len(r) != n_cols for r in rows):
            raise UsageError("dense matrix shape does not match the bases")
        cols = [{} for _ in range(n_cols)]
        for i, row in enumerate(rows):
            for j, x in enumerate(row):
                x %= p
                if x:
                    cols[j][i] = x
        return cls(domain, codomain, cols, p)

    @classmethod
    def zero(cls, domain, codomain, p: int = 5) -> "PersistenceMatrix":
        return cls(domain, codomain, [{} for _ in range(len(domain))], p)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.codomain), len(self.domain)

    def to_dense(self) -> list[list[int]]:
        out = [[0] * len(self.domain) for _ in range(len(self.codomain))]
        for j, col in enumerate(self.columns):
            for i, x in col.items():
                out[i][j] = x
        return out

    def is_zero(self) -> bool:
        return not any(self.columns)

    def naturality_violations(self) -> list[tuple[int, int]]:
        bad = []
        for j, col in enumerate(self.columns):
            a = self.domain[j]
            for i in col:
                b = self.codomain[i]
                if not (b.birth <= a.birth < b.death and b.death <= a.death):
                    bad.append((i, j))
        return bad

    def check_natural(self) -> None:
        bad = self.naturality_violations()
        if bad:
            i, j = bad[0]
            raise UsageError(
                f"entry ({i},{j}) breaks naturality: row {self.codomain[i]} column {self.domain[j]}")

    def pointwise(self, r: float) -> tuple[list[int], list[int], list[list[int]]]:
        """Rows B^r, columns A^r and the dense restricted matrix at r."""
        rows = [i for i, b in enumerate(self.codomain) if b.contains(r)]
        cols = [j for j, a in enumerate(self.domain) if a.contains(r)]
        pos = {i: k for k, i in enumerate(rows)}
        mat = [[0] * len(cols) for _ in rows]
        for c, j in enumerate(cols):
            for i, x in self.columns[j].items():
                if i in pos:
                    mat[pos[i]][c] = x
        return rows, cols, mat


@dataclass
class ImageKernel:
    """Output of image_kernel.

    kernel: vectors over the domain, in basis order, each with its step.
    image: vectors over the codomain, in basis order.
    preimages: for each image vector, a domain vector mapping onto it.
    """

    kernel: list
    image: list
    preimages: list | None = None

    @property
    def kernel_basis(self) -> BarcodeBasis:
        return BarcodeBasis([v.assoc for v in self.kernel])

    @property
    def image_basis(self) -> BarcodeBasis:
        return BarcodeBasis([v.assoc for v in self.image])


def _row_keys(bars: Sequence[Interval]) -> list:
    # pivot order: latest death first, ties go to the later basis position
    return [(b.death, i) for i, b in enumerate(bars)]


def _image(M: PersistenceMatrix, reduce_fully: bool):
    A, B, p = M.domain.bars, M.codomain.bars, M.p
    rkey = _row_keys(B)
    rdeath = [b.death for b in B]
    pivots: dict[int, int] = {}
    reduced: list[tuple[dict, dict, int, float]] = []  # (v, t, lead, step)
    for j, col in enumerate(M.columns):
        a = A[j].birth
        alive = lambda r, a=a: rdeath[r] > a
        v = {r: x for r, x in col.items() if rdeath[r] > a}
        t = {j: 1}
        lead = None
        while v:
            r = max(v, key=rkey.__getitem__)
            k = pivots.get(r)
            if k is None:
                lead = r
                break
            w, tw, lw, _ = reduced[k]
            f = (-v[r] * inv(w[r], p)) % p
            axpy(v, f, w, p, alive)
            axpy(t, f, tw, p)
        if lead is None:
            continue
        if reduce_fully:
            bound = rkey[lead]
            while True:
                cands = [r for r in v if rkey[r] < bound and r in pivots]
                if not cands:
                    break
                r = max(cands, key=rkey.__getitem__)
                w, tw, _, _ = reduced[pivots[r]]
                f = (-v[r] * inv(w[r], p)) % p
                axpy(v, f, w, p, alive)
                axpy(t, f, tw, p)
                bound = rkey[r]
        pivots[lead] = len(reduced)
        reduced.append((v, t, lead, a))
    return reduced


def _kernel(M: PersistenceMatrix):
    A, B, p = M.domain.bars, M.codomain.bars, M.p
    rkey = _row_keys(B)
    ckey = _row_keys(A)
    rdeath = [b.death for b in B]
    adeath = [a.death for a in A]
    by_birth: dict[float, list[int]] = {}
    for j, a in enumerate(A):
        if a.birth < a.death:
            by_birth.setdefault(a.birth, []).append(j)
    row_deaths = {d for d in rdeath if d < INF}
    events = sorted(set(by_birth) | row_deaths)

    pairs: list[list] = []  # [v, t]
    piv: dict[int, int] = {}  # lead row -> index into pairs
    kern: list[tuple[dict, float, int]] = []  # (t, step, pivot column)
    kpiv: dict[int, int] = {}  # active kernel pivot column -> index into kern

    def reduce_pair(idx):
        v, t = pairs[idx]
        while v:
            r = max(v, key=rkey.__getitem__)
            k = piv.get(r)
            if k is None:
                piv[r] = idx
                return True
            w, tw = pairs[k]
            f = (-v[r] * inv(w[r], p)) % p
            axpy(v, f, w, p)
            axpy(t, f, tw, p)
        return False

    for c in events:
        for col in [k for k in kpiv if adeath[k] <= c]:
            del kpiv[col]
        todo = []
        if c in row_deaths:
            for idx, pair in enumerate(pairs):
                if pair is None:
                    continue
                v = pair[0]
                if any(rdeath[r] <= c for r in v):
                    pair[0] = {r: x for r, x in v.items() if rdeath[r] > c}
            for r in [r for r in piv if rdeath[r] <= c]:
                todo.append(piv.pop(r))
            todo.sort()
        for j in by_birth.get(c, ()):
            v = {r: x for r, x in M.columns[j].items() if rdeath[r] > c}
            pairs.append([v, {j: 1}])
            todo.append(len(pairs) - 1)
        for idx in todo:
            if reduce_pair(idx):
                continue
            t = {i: x for i, x in pairs[idx][1].items() if adeath[i] > c}
            pairs[idx] = [{}, {}]
            while t:
                i = max(t, key=ckey.__getitem__)
                k = kpiv.get(i)
                if k is None:
                    break
                kt = kern[k][0]
                f = (-t[i] * inv(kt[i], p)) % p
                axpy(t, f, kt, p, lambda q: adeath[q] > c)
            if not t:
                continue
            lead = max(t, key=ckey.__getitem__)
            s = inv(t[max(t)], p)
            t = {i: (x * s) % p for i, x in t.items()}
            kpiv[lead] = len(kern)
            kern.append((t, c, lead))
    return kern


def image_kernel(A, B=None, M=None, want_preimages: bool = True, p: int | None = None,
                 reduce_fully: bool = True, check: bool = True) -> ImageKernel:
    """Barcode bases for the kernel and image of a persistence morphism.

    Accepts either a PersistenceMatrix, or (A, B, dense rows).
    """
    if isinstance(A, PersistenceMatrix):
        mat = A
    else:
        if M is None or B is None:
            raise UsageError("image_kernel needs a PersistenceMatrix or (A, B, M)")
        mat = M if isinstance(M, PersistenceMatrix) else PersistenceMatrix.from_dense(A, B, M, p or 5)
    if check:
        mat.check_natural()
    Abars, Bbars, pp = mat.domain.bars, mat.codomain.bars, mat.p

    image, pre = [], []
    for v, t, lead, a in _image(mat, reduce_fully):
        iv = make_vector(v, a, Bbars, pp)
        if iv.assoc.death != Bbars[lead].death:
            raise InternalConsistencyError("image vector lost its pivot")
        image.append(iv)
        pre.append(make_vector(t, a, Abars, pp))
    order = sorted(range(len(image)), key=lambda k: basis_key(image[k].assoc, k))
    image = [image[k] for k in order]
    pre = [pre[k] for k in order]

    kernel = []
    for t, c, lead in _kernel(mat):
        kv = make_vector(t, c, Abars, pp)
        if kv.assoc.death != Abars[lead].death or kv.assoc.birth != c:
            raise InternalConsistencyError("kernel vector has inconsistent bar")
        kernel.append(kv)
    korder = sorted(range(len(kernel)), key=lambda k: basis_key(kernel[k].assoc, k))
    kernel = [kernel[k] for k in korder]
    return ImageKernel(kernel, image, pre if want_preimages else None)


class PointwiseSolver:
    """Express vectors at a parameter value in the columns alive there.

    Columns are BarcodeVectors over a row basis; at value r the columns whose
    bar contains r must be linearly independent once evaluated at r.
    Echelon forms are cached per segment between breakpoints.
    """

    def __init__(self, columns: Sequence[BarcodeVector], row_bars: Sequence[Interval], p: int):
        self.columns = list(columns)
        self.row_bars = list(row_bars)
        self.p = p
        self.rkey = _row_keys(self.row_bars)
        pts = set()
        for v in self.columns:
            if not v.is_zero:
                pts.add(v.assoc.birth)
                pts.add(v.assoc.death)
        for b in self.row_bars:
            pts.add(b.death)
        self.breaks = sorted(x for x in pts if x < INF)
        self._cache: dict[int, tuple[dict, dict]] = {}

    def _echelon(self, r: float):
        seg = bisect.bisect_right(self.breaks, r)
        hit = self._cache.get(seg)
        if hit is not None:
            return hit
        p, rkey, rb = self.p, self.rkey, self.row_bars
        vecs: dict[int, dict] = {}
        combs: dict[int, dict] = {}
        for j, col in enumerate(self.columns):
            if not col.assoc.contains(r):
                continue
            v = {i: x for i, x in col.coeffs.items() if rb[i].death > r}
            t = {j: 1}
            while v:
                i = max(v, key=rkey.__getitem__)
                if i not in vecs:
                    break
                f = (-v[i] * inv(vecs[i][i], p)) % p
                axpy(v, f, vecs[i], p)
                axpy(t, f, combs[i], p)
            if not v:
                raise InternalConsistencyError(f"columns alive at {r} are dependent")
            i = max(v, key=rkey.__getitem__)
            vecs[i] = v
            combs[i] = t
        self._cache[seg] = (vecs, combs)
        return vecs, combs

    def solve(self, y: Mapping[int, int], r: float) -> dict[int, int] | None:
        """Coefficients x with sum x_j col_j(r) = y(r); None if y(r) is outside the span."""
        vecs, combs = self._echelon(r)
        p, rkey, rb = self.p, self.rkey, self.row_bars
        y = {i: x % p for i, x in y.items() if x % p and rb[i].death > r}
        x: dict[int, int] = {}
        while y:
            i = max(y, key=rkey.__getitem__)
            v = vecs.get(i)
            if v is None:
                return None
            f = y[i] * inv(v[i], p) % p
            axpy(y, -f, v, p)
            axpy(x, f, combs[i], p)
        return x


def presentation_barcode(gen_births: Sequence[float], relations: Sequence[tuple[float, Mapping[int, int]]],
                         p: int):
    """Barcode of a module given by generators and relations.

    Generators are indexed 0..n-1 and are assumed listed in an order refining
    birth. Each relation is (degree, {generator: coeff}) and may only involve
    generators born at or before its degree. Returns (deaths, columns, sources)
    where deaths[g] is the death of generator g (INF if never killed),
    columns[g] is the reduced relation column that killed g (or None) and
    sources[g] lists the relations combined into that column.
    """
    n = len(gen_births)
    for k in range(1, n):
        if gen_births[k - 1] > gen_births[k]:
            raise UsageError("generators must be listed in birth order")
    order = sorted(range(len(relations)), key=lambda k: (relations[k][0], k))
    deaths = [INF] * n
    killer: list = [None] * n
    sources: list = [None] * n
    low: dict[int, tuple[dict, set]] = {}
    for k in order:
        deg, rel = relations[k]
        col = {g: x % p for g, x in rel.items() if x % p}
        used = {k}
        for g in col:
            if gen_births[g] > deg:
                raise UsageError(f"relation at {deg} uses generator {g} born at {gen_births[g]}")
        while col:
            g = max(col)
            hit = low.get(g)
            if hit is None:
                low[g] = (col, used)
                deaths[g] = deg
                killer[g] = col
                sources[g] = sorted(used)
                break
            w, wused = hit
            f = (-col[g] * inv(w[g], p)) % p
            axpy(col, f, w, p)
            used |= wused
    return deaths, killer, sources


@dataclass
class Quotient:
    """Barcode basis of G/H with representatives over V and coordinates over G."""

    bars: list
    reps: list
    gcoords: list
    gen_index: list = field(default_factory=list)

    @property
    def basis(self) -> BarcodeBasis:
        return BarcodeBasis(self.bars)


def quotient_basis(H: Sequence[BarcodeVector], G: Sequence[BarcodeVector], V: BarcodeBasis | Sequence[Interval],
                   p: int) -> Quotient:
    """Barcode basis of G/H for submodules H <= G <= V given by barcode vectors.

    G/H is presented with the G generators and two kinds of relations: each
    h in H written in G coordinates at its birth, and each g at its death.
    """
    Vb = list(V)
    G = [g for g in G if not g.is_zero]
    H = [h for h in H if not h.is_zero]
    gorder = sorted(range(len(G)), key=lambda k: basis_key(G[k].assoc, k))
    G = [G[k] for k in gorder]
    solver = PointwiseSolver(G, Vb, p)
    rels = []
    for h in H:
        a = h.assoc.birth
        x = solver.solve(h.evaluate(Vb, a), a)
        if x is None:
            raise UsageError(f"H generator born at {a} is not contained in G")
        rels.append((a, x))
    for k, g in enumerate(G):
        if g.assoc.death < INF:
            rels.append((g.assoc.death, {k: 1}))
    births = [g.assoc.birth for g in G]
    deaths, killer, _ = presentation_barcode(births, rels, p)
    out = []
    for k, g in enumerate(G):
        b = deaths[k]
        if b <= births[k]:
            continue
        if killer[k] is None:
            coords = {k: 1}
            rep = g
        else:
            col = killer[k]
            s = inv(col[k], p)
            coords = {i: (x * s) % p for i, x in col.items()}
            acc: dict[int, int] = {}
            for i, x in coords.items():
                axpy(acc, x, G[i].coeffs, p)
            rep = make_vector(acc, births[k], Vb, p)
        out.append((Interval(births[k], b), rep, coords, k))
    out.sort(key=lambda e: basis_key(e[0], e[3]))
    return Quotient([e[0] for e in out], [e[1] for e in out], [e[2] for e in out], [e[3] for e in out])


def _compose_zero(d1: PersistenceMatrix, d2: PersistenceMatrix) -> bool:
    """Whether d1 o d2 vanishes pointwise at every critical value."""
    mid = d1.domain.bars
    p = d1.p
    if all(b.death == INF for b in mid):
        for col in d2.columns:
            acc: dict[int, int] = {}
            for i, x in col.items():
                axpy(acc, x, d1.columns[i], p)
            if acc:
                return False
        return True
    outer = d1.codomain.bars
    for r in critical_values(d2.domain.bars, mid, outer):
        if r == INF:
            continue
        for j, a in enumerate(d2.domain.bars):
            if not a.contains(r):
                continue
            acc = {}
            for i, x in d2.columns[j].items():
                if mid[i].contains(r):
                    axpy(acc, x, d1.columns[i], p)
            if any(outer[k].contains(r) for k in acc):
                return False
    return True


@dataclass
class HomologyDegree:
    """Homology of a chain of persistence modules in one degree."""

    quotient: Quotient
    kernel: list
    image: list  # image of the incoming differential, vectors over V_j
    preimages: list  # matching vectors over V_{j+1}

    @property
    def bars(self) -> list:
        return self.quotient.bars

    @property
    def reps(self) -> list:
        return self.quotient.reps


def degree_homology(Vj: BarcodeBasis, d_out: PersistenceMatrix | None, d_in: PersistenceMatrix | None,
                    p: int) -> HomologyDegree:
    """Ker(d_out)/Im(d_in) at one degree of a chain complex."""
    if d_out is None:
        kernel = [make_vector({i: 1}, b.birth, Vj.bars, p) for i, b in enumerate(Vj) if b.birth < b.death]
    else:
        kernel = image_kernel(d_out, want_preimages=False, check=False).kernel
    if d_in is None:
        image, pre = [], []
    else:
        ik = _image(d_in, reduce_fully=False)
        image, pre = [], []
        for v, t, lead, a in ik:
            image.append(make_vector(v, a, Vj.bars, p))
            pre.append(make_vector(t, a, d_in.domain.bars, p))
    q = quotient_basis(image, kernel, Vj, p)
    return HomologyDegree(q, kernel, image, pre)


def chain_homology(modules: Sequence[BarcodeBasis], differentials: Sequence[PersistenceMatrix],
                   p: int = 5, check: bool = True) -> list[HomologyDegree]:
    """Homology of 0 <- V_0 <- V_1 <- ... <- V_n, where differentials[j-1] is d_j: V_j -> V_{j-1}."""
    n = len(modules) - 1
    if len(differentials) != n:
        raise UsageError("need exactly one differential per positive degree")
    for j, d in enumerate(differentials, start=1):
        if d.domain != modules[j] or d.codomain != modules[j - 1]:
            raise UsageError(f"d_{j} does not map V_{j} to V_{j-1}")
        if check:
            d.check_natural()
    if check:
        for j in range(1, n):
            if not _compose_zero(differentials[j - 1], differentials[j]):
                raise UsageError(f"d_{j} o d_{j+1} is not zero")
    out = []
    for j in range(n + 1):
        d_out = differentials[j - 1] if j >= 1 else None
        d_in = differentials[j] if j < n else None
        out.append(degree_homology(modules[j], d_out, d_in, p))
    return out
