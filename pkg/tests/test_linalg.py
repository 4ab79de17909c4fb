import random

import numpy as np
import pytest

from brute import rank_mod_p
from helpers import image_kernel_failures, rand_bars, rand_morphism
from mvss.barcode import INF, BarcodeBasis, Interval, critical_values, generator, make_vector
from mvss.complexes import FilteredComplex, boundary_matrix
from mvss.errors import UsageError
from mvss.oracle import standard_reduction_ph
from mvss.persistence import (PersistenceMatrix, PointwiseSolver, chain_homology, image_kernel,
                              presentation_barcode, quotient_basis)

P = 5


def worked_example():
    A = BarcodeBasis([Interval(1, 5), Interval(1, 4), Interval(2, 5)])
    B = BarcodeBasis([Interval(0, 5), Interval(0, 3), Interval(1, 4)])
    return A, B, [[0, 0, 1], [1, 0, 0], [1, 1, 1]]


def proportional(u: dict, v: dict, p: int = P) -> bool:
    if set(u) != set(v) or not u:
        return False
    k = next(iter(u))
    s = v[k] * pow(u[k], p - 2, p) % p
    return all(v[i] == u[i] * s % p for i in u)


def test_worked_example_kernel_and_image():
    A, B, F = worked_example()
    res = image_kernel(A, B, F, p=P)
    assert [k.assoc for k in res.kernel] == [Interval(3, 5)]
    assert res.kernel[0].step == 3
    assert proportional(res.kernel[0].coeffs, {0: P - 1, 1: 1})
    expected = {Interval(1, 3): {1: P - 1}, Interval(1, 4): {1: P - 1, 2: P - 1}, Interval(2, 5): {0: 1}}
    assert sorted(v.assoc for v in res.image) == sorted(expected)
    for v in res.image:
        assert proportional(v.coeffs, expected[v.assoc])


def test_zero_matrix_kernel_is_everything():
    A = BarcodeBasis([Interval(0, 3), Interval(1, INF)])
    B = BarcodeBasis([Interval(0, 2)])
    res = image_kernel(PersistenceMatrix.zero(A, B, P))
    assert [v.assoc for v in res.kernel] == list(A) and res.image == []
    assert [v.step for v in res.kernel] == [0, 1]


def test_identity_matrix():
    A = BarcodeBasis([Interval(0, 3), Interval(1, INF), Interval(2, 4)])
    res = image_kernel(A, A, [[1, 0, 0], [0, 1, 0], [0, 0, 1]], p=P)
    assert res.kernel == [] and [v.assoc for v in res.image] == list(A)


def test_non_natural_matrix_rejected():
    A = BarcodeBasis([Interval(0, 3)])
    B = BarcodeBasis([Interval(1, 3)])
    with pytest.raises(UsageError):
        image_kernel(A, B, [[1]], p=P)


def test_death_ordered_pivot_case():
    # Lowest-row pivoting would pair alpha2 with a short bar here and miss
    # that beta1 + beta3 outlives beta3 alone.
    A = BarcodeBasis([Interval(0, 10), Interval(1, 5)])
    B = BarcodeBasis([Interval(0, 10), Interval(0, 5), Interval(1, 5)])
    M = PersistenceMatrix(A, B, [{0: 1, 1: 1}, {1: 1}], P)
    res = image_kernel(M)
    assert image_kernel_failures(M, res) == []
    assert sorted(v.assoc for v in res.image) == [Interval(0, 10), Interval(1, 5)]


@pytest.mark.parametrize("seed", range(4))
def test_random_morphisms_against_brute_force(seed):
    rng = random.Random(seed)
    for _ in range(100):
        M = rand_morphism(rng)
        assert image_kernel_failures(M, image_kernel(M)) == []


def test_kernel_generator_death_is_a_support_death():
    rng = random.Random(5)
    for _ in range(200):
        M = rand_morphism(rng)
        for k in image_kernel(M).kernel:
            assert any(M.domain[j].death == k.assoc.death for j in k.coeffs)


def test_partial_reduction_gives_same_bars():
    rng = random.Random(9)
    for _ in range(200):
        M = rand_morphism(rng)
        full = image_kernel(M)
        part = image_kernel(M, reduce_fully=False)
        assert [v.assoc for v in full.image] == [v.assoc for v in part.image]
        assert image_kernel_failures(M, part) == []


def test_quotient_examples():
    V = BarcodeBasis([Interval(0, 2), Interval(0, 1)])
    G = [generator(0, V.bars), generator(1, V.bars)]
    q = quotient_basis([G[0]], G, V, P)
    assert q.bars == [Interval(0, 1)]
    assert quotient_basis([], G, V, P).bars == list(V)
    assert quotient_basis(G, G, V, P).bars == []


def test_quotient_pointwise_dimensions():
    rng = random.Random(13)
    checked = 0
    for _ in range(300):
        M = rand_morphism(rng)
        res = image_kernel(M)
        V = M.codomain
        G = [generator(i, V.bars) for i in range(len(V))]
        q = quotient_basis(res.image, G, V, P)
        for r in critical_values(V, [v.assoc for v in res.image]):
            if r == INF:
                continue
            g = sum(1 for b in V if b.contains(r))
            h = sum(1 for v in res.image if v.assoc.contains(r))
            assert sum(1 for b in q.bars if b.contains(r)) == g - h
            checked += 1
    assert checked > 100


def test_quotient_rejects_non_containment():
    V = BarcodeBasis([Interval(0, 2), Interval(0, 2)])
    with pytest.raises(UsageError):
        quotient_basis([generator(1, V.bars)], [generator(0, V.bars)], V, P)


def test_solver_round_trip():
    rng = random.Random(17)
    for _ in range(100):
        M = rand_morphism(rng)
        res = image_kernel(M)
        if not res.image:
            continue
        solver = PointwiseSolver(res.image, M.codomain.bars, P)
        for r in critical_values(M.codomain):
            alive = [k for k, v in enumerate(res.image) if v.assoc.contains(r)]
            for k in alive:
                x = solver.solve(res.image[k].evaluate(M.codomain.bars, r), r)
                assert x == {k: 1}


def test_presentation_barcode():
    # two generators born at 0, the relation e0 - e1 at 2 kills the younger one, e0 at 5 kills the other
    deaths, killer, sources = presentation_barcode([0, 0], [(2, {0: 1, 1: P - 1}), (5, {0: 1})], P)
    assert deaths == [5, 2]
    assert sources[0] == [1]


def triangle(filled: bool):
    items = {(0,): 0, (1,): 0, (2,): 0, (0, 1): 1, (0, 2): 1, (1, 2): 1}
    if filled:
        items[(0, 1, 2)] = 2
    return FilteredComplex(items)


@pytest.mark.parametrize("filled", [False, True])
def test_chain_homology_triangle(filled):
    K = triangle(filled)
    top = K.dim
    modules = [K.bars(q) for q in range(top + 1)]
    diffs = [boundary_matrix(K, q, P) for q in range(1, top + 1)]
    hs = chain_homology(modules, diffs, P)
    oracle = standard_reduction_ph(K, 1, P)
    assert sorted((b.birth, b.death) for b in hs[0].bars) == oracle[0] == [(0, 1), (0, 1), (0, INF)]
    expected1 = [(1, 2)] if filled else [(1, INF)]
    assert sorted((b.birth, b.death) for b in hs[1].bars) == oracle[1] == expected1


def test_chain_homology_zero_differentials():
    V0 = BarcodeBasis([Interval(0, 3)])
    V1 = BarcodeBasis([Interval(0, INF), Interval(1, 2)])
    hs = chain_homology([V0, V1], [PersistenceMatrix.zero(V1, V0, P)], P)
    assert hs[0].bars == list(V0) and sorted(hs[1].bars) == sorted(V1)


def test_chain_homology_rejects_non_chain():
    V = BarcodeBasis([Interval(0, INF)])
    one = PersistenceMatrix(V, V, [{0: 1}], P)
    with pytest.raises(UsageError):
        chain_homology([V, V, V], [one, one], P)


def _pointwise_betti(K, q, r):
    def mat(d):
        rows, cols, m = d.pointwise(r)
        return rank_mod_p(m, P) if rows and cols else 0
    nq = sum(1 for v in K.values[q] if v <= r) if q < len(K.values) else 0
    rk_out = mat(boundary_matrix(K, q, P)) if q >= 1 else 0
    rk_in = mat(boundary_matrix(K, q + 1, P)) if q + 1 < len(K.simplices) else 0
    return nq - rk_out - rk_in


def test_chain_homology_matches_pointwise_betti():
    rng = np.random.default_rng(2)
    from mvss.complexes import vietoris_rips
    for _ in range(10):
        K = vietoris_rips(rng.random((12, 2)), 2, 0.5)
        modules = [K.bars(q) for q in range(K.dim + 1)]
        diffs = [boundary_matrix(K, q, P) for q in range(1, K.dim + 1)]
        hs = chain_homology(modules, diffs, P)
        for r in sorted({v for vals in K.values for v in vals}):
            for q in range(K.dim):
                assert sum(1 for b in hs[q].bars if b.contains(r)) == _pointwise_betti(K, q, r)


def test_worked_example_with_make_vector_api():
    A, B, F = worked_example()
    res = image_kernel(A, B, F, p=P)
    k = res.kernel[0]
    assert make_vector(k.coeffs, 3, A.bars, P) == k
