import numpy as np
import pytest
from fractions import Fraction
from itertools import combinations

from graphbalance.graphcore import degree_stats, make_graph, sample_iid
from graphbalance.offline import (
    as_multigraph,
    bipartize,
    induced_density,
    lower_bounds,
    max_density,
    offline_opt,
    optimal_orientation,
    peel_approx,
    peel_certificate,
)


# --- independent oracles -----------------------------------------------------


def brute_density(g):
    """Exhaustive max density over all nonempty vertex subsets."""
    n, eu, ev, mult = as_multigraph(g)
    best = Fraction(0)
    best_set = None
    for k in range(1, n + 1):
        for subset in combinations(range(n), k):
            val = induced_density(n, eu, ev, mult, list(subset))
            if val > best:
                best, best_set = val, subset
    return best, best_set


def brute_min_max_indegree(g):
    """Exhaustive minimum over all 2^m orientations of the max in-degree."""
    eu, ev = g.edges_u, g.edges_v
    m = eu.size
    assert m <= 20
    masks = np.arange(1 << m, dtype=np.int64)
    loads = np.zeros((1 << m, g.n), dtype=np.int32)
    for e in range(m):
        bit = ((masks >> e) & 1).astype(np.int32)
        loads[:, eu[e]] += bit
        loads[:, ev[e]] += 1 - bit
    return int(loads.max(axis=1).min())


def random_multigraph(rng, n_max=8, m_max=16):
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    pairs = []
    while len(pairs) < m:
        u, v = rng.integers(0, n, size=2)
        if u != v:
            pairs.append((int(u), int(v)))
    return make_graph(n, pairs)


# --- max_density -------------------------------------------------------------


class TestMaxDensity:
    def test_triangle(self):
        g = make_graph(3, [(0, 1), (1, 2), (0, 2)])
        cert = max_density(g)
        assert cert.value == 1
        assert set(cert.witness) == {0, 1, 2}

    def test_k4_vs_bruteforce(self):
        g = make_graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        assert max_density(g).value == brute_density(g)[0] == Fraction(3, 2)

    def test_three_parallel_edges(self):
        g = make_graph(2, [(0, 1)] * 3)
        assert max_density(g).value == Fraction(3, 2)

    def test_witness_achieves_value(self):
        rng = np.random.default_rng(5)
        for _ in range(60):
            g = random_multigraph(rng)
            cert = max_density(g)
            n, eu, ev, mult = as_multigraph(g)
            assert induced_density(n, eu, ev, mult, cert.witness) == cert.value
            assert cert.value >= Fraction(g.m, g.n)

    def test_matches_bruteforce_random(self):
        rng = np.random.default_rng(6)
        for _ in range(60):
            g = random_multigraph(rng)
            assert max_density(g).value == brute_density(g)[0]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            max_density(make_graph(3, []))


# --- peeling -----------------------------------------------------------------


class TestPeel:
    def test_star_orients_into_leaves(self):
        # hub last so the end-of-peel degree-1 tie also resolves to a leaf
        g = make_graph(6, [(i, 5) for i in range(5)])
        value, orient = peel_approx(g)
        assert orient.max_in_degree == 1
        assert np.all(orient.heads != 5)
        assert value >= Fraction(1, 2)

    def test_single_edge(self):
        value, orient = peel_approx(make_graph(2, [(0, 1)]))
        assert orient.max_in_degree == 1 and value >= Fraction(1, 2)

    def test_k4_bounds(self):
        g = make_graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        value, orient = peel_approx(g)
        assert 2 <= orient.max_in_degree <= 3  # >= ceil(rho*) = 2, <= 2*rho* = 3

    def test_sandwich_and_orientation_guarantee(self):
        rng = np.random.default_rng(7)
        for _ in range(80):
            g = random_multigraph(rng)
            rho = max_density(g).value
            value, orient = peel_approx(g)
            assert value <= rho <= 2 * value
            assert orient.max_in_degree <= 2 * rho
            # heads really orient every edge copy at a valid endpoint
            assert np.all((orient.heads == g.edges_u) | (orient.heads == g.edges_v))

    def test_peel_certificate_is_witnessed(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            g = random_multigraph(rng)
            cert = peel_certificate(g)
            n, eu, ev, mult = as_multigraph(g)
            assert induced_density(n, eu, ev, mult, cert.witness) == cert.value
            assert not cert.exact


# --- optimal orientation -----------------------------------------------------


class TestOptimalOrientation:
    def test_even_cycle(self):
        g = make_graph(6, [(i, (i + 1) % 6) for i in range(6)])
        assert optimal_orientation(g).max_in_degree == 1

    def test_k4(self):
        g = make_graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        o = optimal_orientation(g)
        assert o.max_in_degree == 2 == brute_min_max_indegree(g)

    def test_three_parallel(self):
        g = make_graph(2, [(0, 1)] * 3)
        assert optimal_orientation(g).max_in_degree == 2

    def test_hakimi_identity_random(self):
        # ceil(rho*) == flow orientation == exhaustive orientation search
        rng = np.random.default_rng(9)
        for _ in range(40):
            g = random_multigraph(rng, m_max=12)
            rho = max_density(g).value
            o = optimal_orientation(g)
            want = -((-rho.numerator) // rho.denominator)
            assert o.max_in_degree == want == brute_min_max_indegree(g)
            indeg = np.bincount(o.heads, minlength=g.n)
            assert indeg.max() == o.max_in_degree


# --- offline optimum of samples ----------------------------------------------


class TestOfflineOpt:
    def test_tiny_samples(self):
        g = make_graph(2, [(0, 1)])
        assert offline_opt(sample_iid(g, 1, 0)) == 1
        assert offline_opt(sample_iid(g, 2, 0)) == 1
        assert offline_opt(sample_iid(g, 3, 0)) == 2
        assert offline_opt(sample_iid(g, 0, 0)) == 0

    def test_permutation_invariance(self):
        g = make_graph(6, [(i, j) for i in range(6) for j in range(i + 1, 6)])
        s = sample_iid(g, 40, seed=11)
        base = offline_opt(s)
        rng = np.random.default_rng(12)
        for _ in range(5):
            s.arrivals = rng.permutation(s.arrivals)
            assert offline_opt(s) == base


# --- bipartization -----------------------------------------------------------


class TestBipartize:
    def test_single_edge(self):
        g = make_graph(2, [(0, 1)])
        bip = bipartize(g)
        assert bip.graph.n == 4 and bip.graph.m == 1
        assert degree_stats(bip.graph).max_left_degree == 1

    def test_k4(self):
        g = make_graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        bip = bipartize(g)
        assert bip.graph.n == 8 and bip.graph.m == 6
        assert degree_stats(bip.graph).max_left_degree <= 2

    def test_split_degrees_match_orientation(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            g = random_multigraph(rng)
            bip = bipartize(g)
            h = bip.graph
            indeg = np.bincount(bip.orientation.heads, minlength=g.n)
            deg_h = h.degrees()
            assert np.array_equal(deg_h[: g.n], indeg)
            assert np.array_equal(deg_h[g.n :], g.degrees() - indeg)
            # max left degree equals ceil(rho*) by construction
            rho = max_density(g).value
            assert degree_stats(h).max_left_degree == -((-rho.numerator) // rho.denominator)

    def test_load_translation_back_doubles_at_most(self):
        rng = np.random.default_rng(14)
        for _ in range(30):
            g = random_multigraph(rng)
            bip = bipartize(g)
            h = bip.graph
            # arbitrary assignment on h
            pick = rng.integers(0, 2, size=h.m)
            heads_h = np.where(pick == 0, h.edges_u, h.edges_v)
            loads_h = np.bincount(heads_h, minlength=h.n)
            folded = bip.fold_loads(loads_h)
            assert folded.max() <= 2 * loads_h.max()
            assert folded.sum() == h.m

    def test_lift_preserves_max_load(self):
        rng = np.random.default_rng(15)
        for _ in range(30):
            g = random_multigraph(rng)
            bip = bipartize(g)
            pick = rng.integers(0, 2, size=g.m)
            heads_g = np.where(pick == 0, g.edges_u, g.edges_v)
            lifted = bip.lift_heads(heads_g)
            loads_h = np.bincount(lifted, minlength=bip.graph.n)
            loads_g = np.bincount(heads_g, minlength=g.n)
            assert loads_h.max() <= loads_g.max()


# --- lower bounds ------------------------------------------------------------


class TestLowerBounds:
    def test_path_tree(self):
        # a tree with rho* = d_av/2 gives density_lb = 1 at T = n
        g = make_graph(5, [(i, i + 1) for i in range(4)])
        lb = lower_bounds(g, T=5)
        assert lb.density_lb == 1

    def test_complete_graph(self):
        n = 8
        g = make_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
        lb = lower_bounds(g, T=n)
        assert lb.density_lb == 1

    def test_multiplicity_formula(self):
        # n = 2^16, d_av = 16, T = n: lg n / log2(16 * 16) = 16/8 = 2
        n = 2**16
        fake = (n, np.array([0]), np.array([1]), np.array([1]))

        class Stub:
            pass

        g = Stub()
        g.n = n
        g.m = n * 8
        g.is_bipartite = False
        g.n_left = None
        g.degrees = lambda: np.full(n, 16, dtype=np.int64)
        from graphbalance.offline import DensityCertificate

        cert = DensityCertificate(Fraction(8), np.arange(n), exact=True)
        lb = lower_bounds(g, T=n, certificate=cert)
        assert lb.multiplicity_lb == 2

    def test_above_n_arrivals_no_multiplicity_bound(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        lb = lower_bounds(g, T=100)
        assert lb.multiplicity_lb == 0
        assert lb.density_lb == Fraction(2 * 100 * Fraction(2, 3), 3 * Fraction(4, 3))
