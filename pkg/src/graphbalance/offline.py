"""Offline optimum machinery: exact max-density, peeling 2-approximation,
optimal orientations, bipartization preprocessing and analytic lower bounds.

Densities are exact Fractions throughout; every flow runs on integer
capacities (rational density guesses p/q are tested with capacities scaled
by q, so no floating-point threshold ever decides an outcome).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from .flow import FlowNetwork
from .graphcore import BaseGraph, SampledStream, ceil_frac, degree_stats, lg


@dataclass
class DensityCertificate:
    """A witnessed subgraph density; `exact` marks it as the true maximum."""

    value: Fraction
    witness: np.ndarray
    exact: bool = True


@dataclass
class Orientation:
    """Per-edge head choice plus the resulting maximum in-degree."""

    heads: np.ndarray
    max_in_degree: int


@dataclass(frozen=True)
class LowerBounds:
    """Heuristic lower-bound guides on the expected offline optimum.

    density_lb is 2*T*rho/(n*d_av); multiplicity_lb evaluates the
    log n / log((n*d_av/T) * log n) form with its constant fixed to 1, so it
    is a guide, not a certified bound.
    """

    density_lb: Fraction
    multiplicity_lb: Fraction


def _round_frac(x: float) -> Fraction:
    return Fraction(round(x * 10**9), 10**9)


def _log2_frac(x: Fraction) -> float:
    return math.log2(x.numerator) - math.log2(x.denominator)


def as_multigraph(h) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """Bundle an input (graph or stream) into (n, u, v, multiplicity)."""
    if isinstance(h, SampledStream):
        n = h.base.n
        u, v = h.endpoint_arrays()
    elif isinstance(h, tuple):
        n, u, v, mult = h
        return n, np.asarray(u), np.asarray(v), np.asarray(mult, dtype=np.int64)
    else:
        n = h.n
        u, v = h.edges_u, h.edges_v
    a = np.minimum(u, v)
    b = np.maximum(u, v)
    key = a * n + b
    uniq, counts = np.unique(key, return_counts=True)
    return n, uniq // n, uniq % n, counts.astype(np.int64)


def _weighted_degrees(n, eu, ev, mult) -> np.ndarray:
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, eu, mult)
    np.add.at(deg, ev, mult)
    return deg


def _copy_layout(h, n, bundle_u, bundle_v, mult):
    """Map caller edge indices onto the bundled-copy layout.

    Copies of bundle j occupy positions starts[j]..starts[j]+mult[j)-1 in
    np.repeat order; caller edges of one bundle take those slots in
    ascending index order. Returns (inv, rank, starts).
    """
    if isinstance(h, SampledStream):
        ou, ov = h.endpoint_arrays()
    elif isinstance(h, tuple):
        _, tu, tv, tm = h
        ou, ov = np.repeat(tu, tm), np.repeat(tv, tm)
    else:
        ou, ov = h.edges_u, h.edges_v
    key = np.minimum(ou, ov) * n + np.maximum(ou, ov)
    bundle_key = bundle_u * n + bundle_v
    inv = np.searchsorted(bundle_key, key)
    order = np.argsort(inv, kind="stable")
    starts = np.zeros(bundle_u.size + 1, dtype=np.int64)
    np.cumsum(mult, out=starts[1:])
    rank = np.empty(key.size, dtype=np.int64)
    rank[order] = np.arange(key.size) - starts[inv[order]]
    return inv, rank, starts


def induced_density(n, eu, ev, mult, subset) -> Fraction:
    inside = np.zeros(n, dtype=bool)
    inside[subset] = True
    keep = inside[eu] & inside[ev]
    return Fraction(int(mult[keep].sum()), len(subset))


def _denser_witness(n, eu, ev, mult, m_tot, guess: Fraction):
    """Return a vertex set with density > guess, or None if none exists.

    One exact max-flow on the edge-node network: s->edge (q*mult),
    edge->endpoints (q*mult), vertex->t (p), for guess p/q.
    """
    q, p = guess.denominator, guess.numerator
    ne = eu.size
    s, t = n + ne, n + ne + 1
    enode = n + np.arange(ne, dtype=np.int64)
    scaled = q * mult
    tail = np.concatenate([np.full(ne, s, dtype=np.int64), enode, enode,
                           np.arange(n, dtype=np.int64)])
    head = np.concatenate([enode, eu, ev, np.full(n, t, dtype=np.int64)])
    cap = np.concatenate([scaled, scaled, scaled, np.full(n, p, dtype=np.int64)])
    net = FlowNetwork(t + 1, tail, head, cap)
    if net.max_flow(s, t) >= q * m_tot:
        return None
    mask = net.min_cut_source_side(s)
    return np.where(mask[:n])[0]


def max_density(h) -> DensityCertificate:
    """Exact rho* = max_S |E(H[S])|/|S| with a witness set from the min cut.

    Newton-style exact search over the candidate densities p/q (q <= n): each
    candidate is tested with one integer max-flow at capacities scaled by q;
    a non-saturating flow yields a strictly denser witness from the min cut,
    a saturating one proves the current witness maximal. Densities strictly
    increase through a finite candidate set, so termination is guaranteed
    and no floating-point threshold is ever consulted.
    """
    special = getattr(h, "density_certificate", None)
    if special is not None:
        return special()
    n, eu, ev, mult = as_multigraph(h)
    m_tot = int(mult.sum())
    if m_tot == 0:
        raise ValueError("max_density needs at least one edge")
    value = Fraction(m_tot, n)
    witness = np.arange(n, dtype=np.int64)
    while True:
        denser = _denser_witness(n, eu, ev, mult, m_tot, value)
        if denser is None:
            return DensityCertificate(value=value, witness=np.sort(witness), exact=True)
        val = induced_density(n, eu, ev, mult, denser)
        if val <= value:
            raise AssertionError("min cut returned a non-improving witness")
        value, witness = val, denser


# ---------------------------------------------------------------------------
# Peeling (repeatedly remove a minimum-degree vertex)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _peel_kernel(indptr, nbr, eid, m_tot):
    """True minimum-degree peeling via a lazy binary heap of (degree, vertex)
    keys; stale heap entries are skipped on pop."""
    n = indptr.size - 1
    deg = np.empty(n, dtype=np.int64)
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
    cap = 2 * m_tot + n + 1
    heap = np.empty(cap, dtype=np.int64)
    size = 0
    for v in range(n):
        heap[size] = deg[v] * n + v
        size += 1
        j = size - 1
        while j > 0:
            p = (j - 1) >> 1
            if heap[p] <= heap[j]:
                break
            heap[p], heap[j] = heap[j], heap[p]
            j = p

    heads = np.full(m_tot, -1, dtype=np.int64)
    peeled = np.zeros(n, dtype=np.bool_)
    vert = np.empty(n, dtype=np.int64)
    rem_e = m_tot
    rem_v = n
    best_num, best_den, best_step = m_tot, n, 0
    max_in = 0
    for i in range(n):
        while True:
            key = heap[0]
            v = key % n
            d = key // n
            # pop
            size -= 1
            heap[0] = heap[size]
            j = 0
            while True:
                l = 2 * j + 1
                if l >= size:
                    break
                r = l + 1
                c = l if (r >= size or heap[l] <= heap[r]) else r
                if heap[j] <= heap[c]:
                    break
                heap[j], heap[c] = heap[c], heap[j]
                j = c
            if not peeled[v] and deg[v] == d:
                break
        vert[i] = v
        dv = deg[v]
        if dv > max_in:
            max_in = dv
        for k in range(indptr[v], indptr[v + 1]):
            e = eid[k]
            if heads[e] == -1:
                heads[e] = v
                w = nbr[k]
                if not peeled[w]:
                    deg[w] -= 1
                    heap[size] = deg[w] * n + w
                    size += 1
                    j = size - 1
                    while j > 0:
                        p = (j - 1) >> 1
                        if heap[p] <= heap[j]:
                            break
                        heap[p], heap[j] = heap[j], heap[p]
                        j = p
        peeled[v] = True
        rem_e -= dv
        rem_v -= 1
        if rem_v > 0 and rem_e * best_den > best_num * rem_v:
            best_num, best_den, best_step = rem_e, rem_v, i + 1
    return heads, max_in, best_num, best_den, best_step, vert


def _multigraph_csr(n, eu, ev, mult):
    """CSR listing every parallel copy, entries carrying (neighbor, copy id)."""
    m_tot = int(mult.sum())
    cu = np.repeat(eu, mult)
    cv = np.repeat(ev, mult)
    deg = np.bincount(cu, minlength=n) + np.bincount(cv, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    nbr = np.empty(2 * m_tot, dtype=np.int64)
    eid = np.empty(2 * m_tot, dtype=np.int64)
    cursor = indptr[:-1].copy()
    _fill_csr(cu, cv, cursor, nbr, eid)
    return indptr, nbr, eid, m_tot, cu, cv


@njit(cache=True)
def _fill_csr(cu, cv, cursor, nbr, eid):
    for e in range(cu.size):
        u, v = cu[e], cv[e]
        nbr[cursor[u]] = v
        eid[cursor[u]] = e
        cursor[u] += 1
        nbr[cursor[v]] = u
        eid[cursor[v]] = e
        cursor[v] += 1


def peel_full(h):
    """Peeling pass returning (value, orientation, witness_subset).

    value is the best remaining-graph density seen, a certified lower bound
    on rho* within factor 2; the orientation directs every edge into the
    endpoint peeled first.
    """
    n, eu, ev, mult = as_multigraph(h)
    if int(mult.sum()) == 0:
        raise ValueError("peel needs at least one edge")
    indptr, nbr, eid, m_tot, cu, cv = _multigraph_csr(n, eu, ev, mult)
    copy_heads, max_in, bn, bd, bstep, vert = _peel_kernel(indptr, nbr, eid, m_tot)
    value = Fraction(int(bn), int(bd))
    witness = np.sort(vert[bstep:])
    inv, rank, starts = _copy_layout(h, n, eu, ev, mult)
    heads = copy_heads[starts[inv] + rank]
    return value, Orientation(heads=heads, max_in_degree=int(max_in)), witness


def peel_approx(h) -> tuple[Fraction, Orientation]:
    """2-approximation of rho* by minimum-degree peeling (see peel_full)."""
    value, orientation, _ = peel_full(h)
    return value, orientation


def peel_certificate(h) -> DensityCertificate:
    """Witnessed (non-maximal) density from peeling, for above-budget inputs."""
    value, _, witness = peel_full(h)
    return DensityCertificate(value=value, witness=witness, exact=False)


# ---------------------------------------------------------------------------
# Optimal orientation (Hakimi: achievable max in-degree equals ceil(rho*))
# ---------------------------------------------------------------------------


def _orientation_feasible(n, eu, ev, mult, m_tot, k):
    ne = eu.size
    s, t = n + ne, n + ne + 1
    enode = n + np.arange(ne, dtype=np.int64)
    tail = np.concatenate([np.full(ne, s, dtype=np.int64), enode, enode,
                           np.arange(n, dtype=np.int64)])
    head = np.concatenate([enode, eu, ev, np.full(n, t, dtype=np.int64)])
    cap = np.concatenate([mult, mult, mult, np.full(n, k, dtype=np.int64)])
    net = FlowNetwork(t + 1, tail, head, cap)
    if net.max_flow(s, t) < m_tot:
        return None
    flows = net.flows()
    return flows[ne : 2 * ne]  # units oriented into the bundle's u endpoint


def optimal_orientation(h) -> Orientation:
    """Minimize the maximum in-degree: binary search on the target load k,
    one exact feasibility max-flow per candidate (edges supply one unit,
    vertices capped at k)."""
    special = getattr(h, "optimal_orientation", None)
    if special is not None:
        return special()
    n, eu, ev, mult = as_multigraph(h)
    m_tot = int(mult.sum())
    if m_tot == 0:
        raise ValueError("orientation needs at least one edge")
    deg = _weighted_degrees(n, eu, ev, mult)
    lo, hi = 1, int(deg.max())
    best = None
    while lo < hi:
        mid = (lo + hi) // 2
        got = _orientation_feasible(n, eu, ev, mult, m_tot, mid)
        if got is None:
            lo = mid + 1
        else:
            hi = mid
            best = got
    if best is None:
        best = _orientation_feasible(n, eu, ev, mult, m_tot, lo)
        if best is None:
            raise AssertionError("orientation infeasible at max degree")
    heads = _expand_bundle_heads(h, n, eu, ev, mult, best)
    indeg = np.bincount(heads, minlength=n)
    k_star = int(indeg.max())
    if k_star != lo:
        raise AssertionError("extracted orientation does not match the search optimum")
    return Orientation(heads=heads, max_in_degree=k_star)


def _expand_bundle_heads(h, n, eu, ev, mult, flow_to_u):
    """Distribute per-bundle head counts back onto original edge indices."""
    inv, rank, _ = _copy_layout(h, n, eu, ev, mult)
    to_u = rank < flow_to_u[inv]
    return np.where(to_u, eu[inv], ev[inv]).astype(np.int64)


def offline_opt(sample: SampledStream) -> int:
    """Exact offline optimum of a sample: ceil of the multigraph's rho*."""
    if sample.T == 0:
        return 0
    return ceil_frac(max_density(sample).value)


# ---------------------------------------------------------------------------
# Bipartization (split every vertex; edges follow an optimal orientation)
# ---------------------------------------------------------------------------


@dataclass
class Bipartization:
    """The left-degree-bounded bipartite companion H of a base graph.

    Vertex u splits into u_L = u and u_R = n + u; edge i of the base maps to
    edge i of H, drawn from the orientation's head (Left) to its tail
    (Right). Folding the two halves back onto u inflates loads by at most 2.
    """

    graph: BaseGraph
    base: object
    orientation: Orientation

    def vertex_to_base(self, v: int) -> int:
        return v if v < self.base.n else v - self.base.n

    def edge_to_base(self, e: int) -> int:
        return e

    def fold_loads(self, loads_h: np.ndarray) -> np.ndarray:
        n = self.base.n
        return loads_h[:n] + loads_h[n:]

    def lift_heads(self, heads_g: np.ndarray) -> np.ndarray:
        """Map a base-graph assignment onto H (load-preserving direction)."""
        n = self.base.n
        hu = self.graph.edges_u[: heads_g.size]
        return np.where(heads_g == hu, hu, self.graph.edges_v[: heads_g.size])


def bipartize(g) -> Bipartization:
    """Build H = (V_L, V_R) from an exact optimal orientation of g, so that
    the maximum Left degree is ceil(rho*(g))."""
    special = getattr(g, "bipartized", None)
    if special is not None:
        return special()
    if g.m == 0:
        raise ValueError("bipartize needs at least one edge")
    orient = optimal_orientation(g)
    heads = orient.heads
    tails = g.edges_u + g.edges_v - heads
    h = BaseGraph(n=2 * g.n, edges_u=heads.copy(), edges_v=g.n + tails, n_left=g.n)
    h.validate()
    return Bipartization(graph=h, base=g, orientation=orient)


def lower_bounds(g, T: int, certificate: DensityCertificate | None = None) -> LowerBounds:
    """Analytic guides on OPT(G, T); constants fixed to 1, logs base 2."""
    if T < 1:
        raise ValueError("T must be >= 1")
    stats = degree_stats(g)
    if stats.is_empty:
        return LowerBounds(Fraction(0), Fraction(0))
    cert = certificate if certificate is not None else max_density(g)
    density_lb = Fraction(2 * T) * cert.value / (g.n * stats.avg_degree)
    if T <= g.n:
        lgn = lg(g.n)
        arg = Fraction(g.n, T) * stats.avg_degree * lgn
        if arg < 2:
            arg = Fraction(2)  # clamp degenerate sparsity (d_av < 1) to keep the log defined
        mlb = _round_frac(lgn / _log2_frac(arg))
    else:
        mlb = Fraction(0)
    return LowerBounds(density_lb=density_lb, multiplicity_lb=mlb)


# serialization per the documented formats -----------------------------------


def save_orientation(o: Orientation, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, head in enumerate(o.heads):
            fh.write(f"{i} {head}\n")


def save_certificate(c: DensityCertificate, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{c.value.numerator} {c.value.denominator}\n")
        fh.write(" ".join(str(v) for v in c.witness) + "\n")
