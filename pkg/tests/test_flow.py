import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from graphbalance.flow import FlowNetwork


def scipy_max_flow(n, tail, head, cap, s, t):
    dense = np.zeros((n, n), dtype=np.int64)
    for a, b, c in zip(tail, head, cap):
        dense[a, b] += c
    return int(maximum_flow(csr_matrix(dense), s, t).flow_value)


def test_textbook_instance():
    # classic 6-node example with max flow 5
    tail = np.array([0, 0, 1, 1, 2, 3, 3, 4])
    head = np.array([1, 2, 2, 3, 4, 4, 5, 5])
    cap = np.array([3, 3, 2, 3, 2, 4, 2, 2])
    net = FlowNetwork(6, tail, head, cap)
    assert net.max_flow(0, 5) == scipy_max_flow(6, tail, head, cap, 0, 5)


def test_disconnected_zero():
    net = FlowNetwork(4, np.array([0]), np.array([1]), np.array([5]))
    assert net.max_flow(0, 3) == 0


def test_against_scipy_on_random_networks():
    rng = np.random.default_rng(3)
    for _ in range(150):
        n = int(rng.integers(2, 12))
        m = int(rng.integers(1, 30))
        tail = rng.integers(0, n, size=m)
        head = rng.integers(0, n, size=m)
        keep = tail != head
        tail, head = tail[keep], head[keep]
        cap = rng.integers(1, 20, size=tail.size)
        s, t = 0, n - 1
        ours = FlowNetwork(n, tail, head, cap).max_flow(s, t)
        assert ours == scipy_max_flow(n, tail, head, cap, s, t)


def test_min_cut_separates_source_from_sink():
    rng = np.random.default_rng(4)
    for _ in range(60):
        n = int(rng.integers(3, 10))
        m = int(rng.integers(2, 25))
        tail = rng.integers(0, n, size=m)
        head = rng.integers(0, n, size=m)
        keep = tail != head
        tail, head = tail[keep], head[keep]
        if tail.size == 0:
            continue
        cap = rng.integers(1, 10, size=tail.size)
        net = FlowNetwork(n, tail, head, cap)
        value = net.max_flow(0, n - 1)
        mask = net.min_cut_source_side(0)
        assert mask[0] and not mask[n - 1]
        # cut capacity across (S, V-S) equals the flow value
        cut = sum(int(c) for a, b, c in zip(tail, head, cap) if mask[a] and not mask[b])
        assert cut == value


def test_flows_accessor():
    tail = np.array([0, 0, 1, 2])
    head = np.array([1, 2, 3, 3])
    cap = np.array([2, 2, 2, 2])
    net = FlowNetwork(4, tail, head, cap)
    assert net.max_flow(0, 3) == 4
    assert np.array_equal(net.flows(), np.array([2, 2, 2, 2]))


def test_rejects_negative_capacity():
    with pytest.raises(ValueError):
        FlowNetwork(2, np.array([0]), np.array([1]), np.array([-1]))
