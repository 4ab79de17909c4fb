"""Ground-truth persistent homology by plain column reduction of the global boundary matrix."""
from __future__ import annotations

from collections import Counter

from .barcode import INF
from .complexes import FilteredComplex


def filtration_order(K: FilteredComplex, max_dim: int | None = None):
    top = K.dim if max_dim is None else min(K.dim, max_dim + 1)
    cells = []
    for q in range(top + 1):
        for s, v in zip(K.simplices[q], K.values[q]):
            cells.append((v, q, s))
    cells.sort()
    return cells


def standard_reduction_ph(K: FilteredComplex, max_dim: int | None = None, p: int = 5) -> dict[int, list]:
    """Bars (birth, death) of PH_q(K) for q <= max_dim; essential classes die at INF.

    Simplices up to dimension max_dim + 1 take part so that deaths in the top
    requested degree are seen.
    """
    if max_dim is None:
        max_dim = K.dim
    cells = filtration_order(K, max_dim)
    pos = {c[2]: i for i, c in enumerate(cells)}
    low_of: dict[int, int] = {}
    cols: dict[int, dict[int, int]] = {}
    paired = set()
    bars: dict[int, list] = {q: [] for q in range(max_dim + 1)}
    for j, (v, q, s) in enumerate(cells):
        col = {}
        if q > 0:
            for i in range(q + 1):
                col[pos[s[:i] + s[i + 1:]]] = (-1) ** i % p
        while col:
            low = max(col)
            k = low_of.get(low)
            if k is None:
                break
            other = cols[k]
            f = (-col[low] * pow(other[low], p - 2, p)) % p
            for r, x in other.items():
                y = (col.get(r, 0) + f * x) % p
                if y:
                    col[r] = y
                else:
                    col.pop(r, None)
        if col:
            low = max(col)
            low_of[low] = j
            cols[j] = col
            paired.add(low)
            paired.add(j)
            bv, bq, _ = cells[low]
            if bq <= max_dim and bv < v:
                bars[bq].append((bv, v))
    for j, (v, q, s) in enumerate(cells):
        if j not in paired and q <= max_dim:
            bars[q].append((v, INF))
    return {q: sorted(b) for q, b in bars.items()}


def as_multiset(bars) -> Counter:
    return Counter((float(a), float(b)) for a, b in bars)
