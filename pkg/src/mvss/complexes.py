"""Filtered simplicial complexes, covers by subcomplexes, nerves and Čech maps."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .barcode import INF, BarcodeBasis, Interval
from .errors import ConfigError, CoverViolationError, UsageError
from .persistence import PersistenceMatrix

Simplex = tuple  # strictly increasing tuple of vertex ids

# filtration values are rounded once, so equal geometric distances compare equal
DISTANCE_DECIMALS = 12


class FilteredComplex:
    """Simplices per dimension, sorted by (filtration value, vertex tuple)."""

    def __init__(self, simplices: Mapping[Simplex, float] | Iterable[tuple[Simplex, float]], check: bool = True):
        items = simplices.items() if isinstance(simplices, Mapping) else simplices
        by_dim: dict[int, list] = {}
        seen: dict[Simplex, float] = {}
        for s, v in items:
            s = tuple(s)
            if any(s[i] >= s[i + 1] for i in range(len(s) - 1)) or not s:
                raise UsageError(f"simplex {s} is not a strictly increasing nonempty tuple")
            if s in seen:
                raise UsageError(f"simplex {s} listed twice")
            seen[s] = float(v)
            by_dim.setdefault(len(s) - 1, []).append((s, float(v)))
        top = max(by_dim) if by_dim else -1
        self.simplices: list[list[Simplex]] = []
        self.values: list[list[float]] = []
        for q in range(top + 1):
            lst = sorted(by_dim.get(q, []), key=lambda e: (e[1], e[0]))
            self.simplices.append([e[0] for e in lst])
            self.values.append([e[1] for e in lst])
        self.index = [{s: i for i, s in enumerate(lst)} for lst in self.simplices]
        if check:
            self.check()

    @classmethod
    def _from_sorted(cls, simplices, values) -> "FilteredComplex":
        obj = cls.__new__(cls)
        obj.simplices = simplices
        obj.values = values
        obj.index = [{s: i for i, s in enumerate(lst)} for lst in simplices]
        return obj

    def check(self) -> None:
        for q in range(1, len(self.simplices)):
            for s, v in zip(self.simplices[q], self.values[q]):
                for face in itertools.combinations(s, q):
                    k = self.index[q - 1].get(face)
                    if k is None:
                        raise UsageError(f"face {face} of {s} is missing")
                    if self.values[q - 1][k] > v:
                        raise UsageError(f"face {face} enters after {s}")

    @property
    def dim(self) -> int:
        return len(self.simplices) - 1

    def __len__(self) -> int:
        return sum(len(x) for x in self.simplices)

    def n_simplices(self, q: int) -> int:
        return len(self.simplices[q]) if 0 <= q < len(self.simplices) else 0

    def value(self, s: Simplex) -> float:
        return self.values[len(s) - 1][self.index[len(s) - 1][s]]

    def items(self):
        for q in range(len(self.simplices)):
            yield from zip(self.simplices[q], self.values[q])

    def bars(self, q: int) -> BarcodeBasis:
        if not 0 <= q < len(self.simplices):
            return BarcodeBasis([])
        return BarcodeBasis([Interval(v, INF) for v in self.values[q]])

    def vertices(self) -> list[int]:
        return [s[0] for s in self.simplices[0]] if self.simplices else []

    def induced(self, vertex_set) -> "FilteredComplex":
        """Subcomplex of simplices whose vertices all lie in ``vertex_set``."""
        sims, vals = [], []
        for q in range(len(self.simplices)):
            ks = [i for i, s in enumerate(self.simplices[q]) if all(v in vertex_set for v in s)]
            if not ks:
                break
            sims.append([self.simplices[q][i] for i in ks])
            vals.append([self.values[q][i] for i in ks])
        return FilteredComplex._from_sorted(sims, vals)

    def truncated(self, max_filt: float) -> "FilteredComplex":
        return FilteredComplex(((s, v) for s, v in self.items() if v <= max_filt), check=False)

    def dump(self) -> str:
        lines = []
        for q in range(len(self.simplices)):
            for s, v in zip(self.simplices[q], self.values[q]):
                lines.append(f"{q}; {','.join(map(str, s))}; {v!r}")
        return "\n".join(lines) + ("\n" if lines else "")

    def __eq__(self, other) -> bool:
        return isinstance(other, FilteredComplex) and self.simplices == other.simplices and self.values == other.values


def parse_complex(text: str) -> FilteredComplex:
    items = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        q, verts, v = (x.strip() for x in line.split(";"))
        s = tuple(int(x) for x in verts.split(","))
        if len(s) != int(q) + 1:
            raise UsageError(f"dimension mismatch in line {line!r}")
        items.append((s, float(v)))
    return FilteredComplex(items)


def distance_matrix(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.zeros((0, 0))
    if pts.ndim == 1:
        pts = pts[:, None]
    diff = pts[:, None, :] - pts[None, :, :]
    return np.round(np.sqrt((diff * diff).sum(-1)), DISTANCE_DECIMALS)


def vietoris_rips(points, max_dim: int, max_filt: float = INF, dist: np.ndarray | None = None) -> FilteredComplex:
    """Vietoris-Rips complex with the distance-threshold convention.

    A simplex enters at the largest pairwise distance among its vertices.
    """
    if max_dim < 0:
        raise UsageError("max_dim must be >= 0")
    D = distance_matrix(points) if dist is None else dist
    n = D.shape[0]
    items: list[tuple[Simplex, float]] = [((i,), 0.0) for i in range(n)]
    nbrs = [[j for j in range(i + 1, n) if D[i, j] <= max_filt] for i in range(n)]
    nbr_sets = [set(x) for x in nbrs]
    level = [((i,), 0.0, nbrs[i]) for i in range(n)]
    for q in range(1, max_dim + 1):
        nxt = []
        for s, v, cand in level:
            for j in cand:
                w = max(v, max(float(D[i, j]) for i in s))
                t = s + (j,)
                items.append((t, w))
                nxt.append((t, w, [k for k in cand if k > j and k in nbr_sets[j]]))
        level = nxt
    return FilteredComplex(items, check=False)


def read_points_csv(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(x.strip() for x in r)]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        pts = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"non-numeric entry in {path}: {exc}") from exc
    if len(rows) and len({len(r) for r in rows}) != 1:
        raise ConfigError(f"rows of {path} have different lengths")
    return pts


@dataclass
class CoverAssignment:
    """A cover of a filtered complex by vertex-induced subcomplexes.

    A simplex belongs to patch i iff all of its vertices lie in vertex_sets[i].
    """

    complex: FilteredComplex
    vertex_sets: list  # list[frozenset[int]]
    boxes: list | None = None  # per patch (lower corner, upper corner), if geometric
    _patches: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vertex_sets = [frozenset(v) for v in self.vertex_sets]
        self.check()

    @property
    def n_patches(self) -> int:
        return len(self.vertex_sets)

    def check(self) -> None:
        for q in range(len(self.complex.simplices)):
            for s in self.complex.simplices[q]:
                if not any(all(v in vs for v in s) for vs in self.vertex_sets):
                    raise CoverViolationError(f"simplex {s} lies in no cover patch")

    def intersection_vertices(self, sigma: Sequence[int]) -> frozenset:
        sigma = tuple(sigma)
        if not sigma:
            raise UsageError("empty nerve simplex")
        out = self.vertex_sets[sigma[0]]
        for i in sigma[1:]:
            out = out & self.vertex_sets[i]
        return out

    def patch(self, i: int) -> FilteredComplex:
        return restrict(self, (i,))


def cover_from_vertex_sets(K: FilteredComplex, vertex_sets) -> CoverAssignment:
    return CoverAssignment(K, list(vertex_sets))


def cubical_cover(points, divisions: Sequence[int], overlap: float, K: FilteredComplex | None = None,
                  max_dim: int = 1, max_filt: float = INF) -> CoverAssignment:
    """Grid cover of the bounding box; each box is enlarged by overlap/2 per side.

    If K is None a Vietoris-Rips complex is built from the points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    d = pts.shape[1] if pts.size else len(divisions)
    divisions = list(divisions)
    if len(divisions) != d:
        raise UsageError(f"need one division count per axis ({d}), got {divisions}")
    if any(int(x) != x or x < 1 for x in divisions):
        raise UsageError("divisions must be integers >= 1")
    if overlap < 0:
        raise UsageError("overlap must be >= 0")
    if K is None:
        K = vietoris_rips(pts, max_dim, max_filt)
    if not len(pts):
        return CoverAssignment(K, [frozenset()], [])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    width = (hi - lo) / np.array(divisions, dtype=float)
    sets, boxes = [], []
    for cell in itertools.product(*(range(int(k)) for k in divisions)):
        c = np.array(cell, dtype=float)
        blo = lo + c * width - overlap / 2
        bhi = lo + (c + 1) * width + overlap / 2
        inside = np.all((pts >= blo) & (pts <= bhi), axis=1)
        sets.append(frozenset(int(i) for i in np.nonzero(inside)[0]))
        boxes.append((tuple(blo.tolist()), tuple(bhi.tolist())))
    return CoverAssignment(K, sets, boxes)


def restrict(cover: CoverAssignment, sigma: Sequence[int]) -> FilteredComplex:
    """U_sigma, the intersection of the patches in sigma."""
    sigma = tuple(sigma)
    if any(i < 0 or i >= cover.n_patches for i in sigma) or list(sigma) != sorted(set(sigma)):
        raise UsageError(f"{sigma} is not a simplex on the patch indices")
    hit = cover._patches.get(sigma)
    if hit is not None:
        return hit
    verts = cover.intersection_vertices(sigma)
    if not verts:
        raise UsageError(f"{sigma} is not in the nerve (empty intersection)")
    out = cover.complex.induced(verts)
    cover._patches[sigma] = out
    return out


class Nerve:
    """Simplices sigma of patch indices with nonempty U_sigma, lexicographic per dimension."""

    def __init__(self, simplices: list):
        self.simplices = simplices
        self.index = [{s: i for i, s in enumerate(lst)} for lst in simplices]

    @property
    def dim(self) -> int:
        return len(self.simplices) - 1

    def __getitem__(self, k: int) -> list:
        return self.simplices[k] if 0 <= k < len(self.simplices) else []

    def __contains__(self, sigma) -> bool:
        sigma = tuple(sigma)
        k = len(sigma) - 1
        return 0 <= k < len(self.index) and sigma in self.index[k]

    def __len__(self) -> int:
        return sum(len(x) for x in self.simplices)


def nerve(cover: CoverAssignment, max_nerve_dim: int | None = None) -> Nerve:
    m = cover.n_patches
    if max_nerve_dim is None:
        max_nerve_dim = m - 1
    level = [((i,), cover.vertex_sets[i]) for i in range(m) if cover.vertex_sets[i]]
    out = []
    while level and len(out) <= max_nerve_dim:
        out.append([s for s, _ in level])
        nxt = []
        for s, verts in level:
            for j in range(s[-1] + 1, m):
                w = verts & cover.vertex_sets[j]
                if w:
                    nxt.append((s + (j,), w))
        level = nxt
    return Nerve(out)


def boundary_column(s: Simplex, p: int):
    """(face, sign) pairs of the boundary of s; the face omitting vertex i has sign (-1)^i."""
    q = len(s) - 1
    if q == 0:
        return []
    return [(s[:i] + s[i + 1:], (-1) ** i % p) for i in range(q + 1)]


def boundary_matrix(X: FilteredComplex, q: int, p: int = 5) -> PersistenceMatrix:
    """d_q: S_q(X) -> S_{q-1}(X) with simplices as bars [value, inf)."""
    if q < 1:
        raise UsageError("boundary_matrix needs q >= 1")
    dom, cod = X.bars(q), X.bars(q - 1)
    cols = []
    if q < len(X.simplices):
        idx = X.index[q - 1]
        for s in X.simplices[q]:
            cols.append({idx[f]: sgn for f, sgn in boundary_column(s, p)})
    return PersistenceMatrix(dom, cod, cols, p)


@dataclass
class BlockBasis:
    """Basis of a direct sum of simplicial chain groups, sorted in basis order.

    labels[i] = (block index, simplex) for the generator stored at position i.
    """

    basis: BarcodeBasis
    labels: list
    position: dict


def block_basis(blocks: Sequence[FilteredComplex], q: int) -> BlockBasis:
    bars, labels = [], []
    for b, X in enumerate(blocks):
        if q < len(X.simplices):
            for s, v in zip(X.simplices[q], X.values[q]):
                bars.append(Interval(v, INF))
                labels.append((b, s))
    basis, perm = BarcodeBasis.sort(bars)
    labels = [labels[i] for i in perm]
    return BlockBasis(basis, labels, {lab: i for i, lab in enumerate(labels)})


def cech_differential(cover: CoverAssignment, nv: Nerve, k: int, q: int, p: int = 5):
    """Čech map from the sum over N_k of S_q(U_sigma) to the sum over N_{k-1}.

    For k = 0 the codomain is S_q(K) and each component maps by the identity.
    Returns (matrix, domain BlockBasis, codomain BlockBasis).
    """
    if k < 0:
        raise UsageError("k must be >= 0")
    dom_cx = [restrict(cover, s) for s in nv[k]]
    dom = block_basis(dom_cx, q)
    if k == 0:
        cod = block_basis([cover.complex], q)
    else:
        cod = block_basis([restrict(cover, s) for s in nv[k - 1]], q)
    cols = []
    for b, s in dom.labels:
        col = {}
        if k == 0:
            col[cod.position[(0, s)]] = 1
        else:
            sigma = nv[k][b]
            for i in range(k + 1):
                tau = sigma[:i] + sigma[i + 1:]
                t = nv.index[k - 1][tau]
                col[cod.position[(t, s)]] = (-1) ** i % p
        cols.append(col)
    return PersistenceMatrix(dom.basis, cod.basis, cols, p), dom, cod
