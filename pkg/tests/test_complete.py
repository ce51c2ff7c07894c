import numpy as np
import pytest
from fractions import Fraction

from graphbalance.complete import CompleteGraph
from graphbalance.generators import gen_complete
from graphbalance.graphcore import degree_stats, sample_iid
from graphbalance.offline import max_density, optimal_orientation


class TestCompleteGraph:
    def test_decode_roundtrip_all_sizes(self):
        for n in (2, 3, 6, 7, 16, 17, 64):
            g = CompleteGraph(n)
            u, v = g.endpoints(np.arange(g.m))
            assert np.all((0 <= u) & (u < v) & (v < n))
            back = np.array([g.edge_index(int(a), int(b)) for a, b in zip(u, v)])
            assert np.array_equal(back, np.arange(g.m))

    def test_matches_materialized(self):
        g = CompleteGraph(10)
        mat = gen_complete(10)
        u, v = g.endpoints(np.arange(g.m))
        assert np.array_equal(u, mat.edges_u) and np.array_equal(v, mat.edges_v)

    def test_density_certificate_exact(self):
        for n in (4, 7, 12):
            cert = CompleteGraph(n).density_certificate()
            assert cert.exact
            assert cert.value == max_density(gen_complete(n)).value == Fraction(n - 1, 2)

    def test_orientation_achieves_hakimi_bound(self):
        for n in (4, 5, 8, 9, 16, 33):
            g = CompleteGraph(n)
            u, v = g.endpoints(np.arange(g.m))
            heads = g.orient_heads(u, v)
            indeg = np.bincount(heads, minlength=n)
            want = optimal_orientation(gen_complete(n)).max_in_degree
            assert indeg.max() == want == -(-(n - 1) // 2)
            assert np.array_equal(indeg, g.in_degree(np.arange(n)))

    def test_in_rank_is_ascending_tail_order(self):
        for n in (5, 6, 9, 12):
            g = CompleteGraph(n)
            u, v = g.endpoints(np.arange(g.m))
            heads = g.orient_heads(u, v)
            tails = u + v - heads
            for w in range(n):
                ts = np.sort(tails[heads == w])
                ranks = g.in_rank(np.full(ts.size, w), ts)
                assert np.array_equal(ranks, np.arange(ts.size))

    def test_sampling_and_stats(self):
        g = CompleteGraph(128)
        st = degree_stats(g)
        assert st.avg_degree == 127
        s = sample_iid(g, 1000, seed=4)
        u, v = s.endpoint_arrays()
        assert np.all(u < v) and v.max() < 128
        s2 = sample_iid(g, 1000, seed=4)
        assert np.array_equal(s.arrivals, s2.arrivals)


class TestBipartizedComplete:
    def test_structure(self):
        bip = CompleteGraph(16).bipartized()
        h = bip.graph
        assert h.n == 32 and h.n_left == 16 and h.m == 120
        deg = h.degrees()
        assert deg[:16].max() == 8  # ceil(15/2)
        assert deg.sum() == 2 * h.m

    def test_fold_loads(self):
        bip = CompleteGraph(8).bipartized()
        loads = np.arange(16)
        folded = bip.fold_loads(loads)
        assert np.array_equal(folded, np.arange(8) + np.arange(8, 16))

    def test_chunked_matches_direct_replay(self):
        # per left vertex: class-i chunk sizes must follow the cap schedule,
        # caps recomputed from scratch
        for n in (8, 16, 63, 64):
            g = CompleteGraph(n)
            h = g.bipartized().graph
            dec = h.chunked_decomposition()
            idx = np.arange(g.m)
            cls = dec.class_of(idx)
            hu, hv = h.endpoints(idx)
            assert cls.min() >= 1 and cls.max() <= dec.h
            for i in range(1, dec.h + 1):
                mask = cls == i
                if mask.any():
                    dl = np.bincount(hu[mask], minlength=n).max()
                    assert dl <= dec.left_cap(i)
            for i in range(1, dec.h):
                resid = cls > i
                if resid.any():
                    rl = np.bincount(hu[resid], minlength=n).max()
                    assert rl <= dec.residual_caps[i - 1]

    def test_chunked_partition_complete(self):
        g = CompleteGraph(32)
        dec = g.bipartized().graph.chunked_decomposition()
        cls = dec.class_of(np.arange(g.m))
        assert np.bincount(cls)[1:].sum() == g.m

    def test_rejects_bad_s(self):
        with pytest.raises(ValueError):
            CompleteGraph(8).bipartized().graph.chunked_decomposition(Fraction(1, 2))

    def test_large_instance_lazy(self):
        g = CompleteGraph(1 << 16)
        assert g.m == (1 << 15) * ((1 << 16) - 1)
        dec = g.bipartized().graph.chunked_decomposition()
        assert dec.h >= 3
        sample = sample_iid(g, 1000, seed=0)
        cls = dec.class_of(sample.arrivals)
        assert cls.min() >= 1 and cls.max() <= dec.h
