"""Log-skewness scoring and decomposition into skew-biregular edge classes.

A left-degree-bounded bipartite graph is peeled round by round: round i
builds a flow network on the residual (source->left capacity = degree excess
over floor(16*rho/f_i^2), unit edge capacities, right->sink capacity
floor(16*rho*(f_i*log n)^ceil(2s)) with f_i = 2^(2^i)) and the flow-carrying
edges become class i. When the sink capacities cannot bind, the max flow is
taken greedily without running the solver; the result is still a maximum
flow saturating the source. A round with zero excess ends the loop and the
residual is flushed into the current class, which keeps the classes an exact
partition at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from .flow import FlowNetwork
from .graphcore import degree_stats, floor_frac, lg
from .offline import max_density

_MAX_ROUNDS = 64


@dataclass(frozen=True)
class SkewScore:
    """Log-skewness of a bipartite subgraph (A, B) with |A| >= |B|.

    value is log2(|A|/|B|) / log2(d_av * log_n^2 / d_A_min) rounded to 1e-9;
    None signals the +infinity sentinel (denominator <= 0, i.e. the minimum
    A-degree already exceeds d_av * log_n^2).
    """

    value: Fraction | None
    a_size: int
    b_size: int
    d_a_min: int
    log_n: int
    d_av: Fraction

    @property
    def is_infinite(self) -> bool:
        return self.value is None


def skew_of_subgraph(g, A, B) -> SkewScore:
    """Score the subgraph induced between vertex sets A and B of a bipartite
    base graph; the larger side is treated as A. d_av and log n come from the
    full base graph."""
    if not g.is_bipartite:
        raise ValueError("skew scoring needs a bipartite base graph")
    A = np.unique(np.asarray(list(A), dtype=np.int64))
    B = np.unique(np.asarray(list(B), dtype=np.int64))
    if A.size == 0 or B.size == 0:
        raise ValueError("both sides must be nonempty")
    for name, side in (("A", A), ("B", B)):
        left = side < g.n_left
        if left.any() and not left.all():
            raise ValueError(f"{name} mixes Left and Right vertices")
    if (A[0] < g.n_left) == (B[0] < g.n_left):
        raise ValueError("A and B must lie on opposite sides")
    if A.size < B.size:
        A, B = B, A
    in_a = np.zeros(g.n, dtype=bool)
    in_a[A] = True
    in_b = np.zeros(g.n, dtype=bool)
    in_b[B] = True
    # degrees of A-vertices into B over the induced edges
    if A[0] < g.n_left:
        keep = in_a[g.edges_u] & in_b[g.edges_v]
        ends = g.edges_u[keep]
    else:
        keep = in_b[g.edges_u] & in_a[g.edges_v]
        ends = g.edges_v[keep]
    deg_a = np.bincount(ends, minlength=g.n)[A]
    if deg_a.size and deg_a.min() == 0:
        bad = int(A[int(np.argmin(deg_a))])
        raise ValueError(f"vertex {bad} of A is isolated within (A, B)")
    d_a_min = int(deg_a.min())
    stats = degree_stats(g)
    lgn = lg(g.n)
    if A.size == B.size:
        value: Fraction | None = Fraction(0)
    else:
        arg = stats.avg_degree * lgn * lgn / d_a_min
        if arg <= 1:
            value = None  # +infinity sentinel; caller treats as maximally skewed
        else:
            num = math.log2(A.size) - math.log2(B.size)
            den = math.log2(arg.numerator) - math.log2(arg.denominator)
            value = Fraction(round(num / den * 10**9), 10**9)
    return SkewScore(
        value=value,
        a_size=int(A.size),
        b_size=int(B.size),
        d_a_min=d_a_min,
        log_n=lgn,
        d_av=stats.avg_degree,
    )


@dataclass
class Decomposition:
    """Edge partition into classes G_1..G_h with per-class degree certificates."""

    edge_class: np.ndarray
    h: int
    s: Fraction
    rho_star: Fraction
    log_n: int
    exponent: int
    f: list[int]
    residual_caps: list[int]
    sink_caps: list[int]
    class_left_deg: list[int]
    class_right_deg: list[int]
    flushed: int = 0
    certified: bool = True

    def class_of(self, idx) -> np.ndarray:
        return self.edge_class[np.asarray(idx, dtype=np.int64)]

    def classes(self) -> list[np.ndarray]:
        return [np.where(self.edge_class == i)[0] for i in range(1, self.h + 1)]

    def left_cap(self, i: int) -> Fraction:
        return 16 * self.rho_star / self.f[i - 1]

    def right_cap(self, i: int) -> Fraction:
        return 16 * self.rho_star * Fraction(self.f[i - 1] * self.log_n) ** self.exponent


@njit(cache=True)
def _take_first_per_left(indptr, sorted_eidx, alive, excess, edge_class, label):
    for u in range(indptr.size - 1):
        need = excess[u]
        if need <= 0:
            continue
        j = indptr[u]
        while need > 0:
            e = sorted_eidx[j]
            if alive[e]:
                edge_class[e] = label
                alive[e] = False
                need -= 1
            j += 1


def _left_csr(g):
    order = np.argsort(g.edges_u, kind="stable")
    counts = np.bincount(g.edges_u, minlength=g.n_left)
    indptr = np.zeros(g.n_left + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, order.astype(np.int64)


def decompose(g, s, rho_star: Fraction | None = None) -> Decomposition | None:
    """Partition g's edges into skew-biregular classes at skew parameter s.

    Returns None when some round's flow cannot saturate the left excess
    (infeasible at this s)."""
    if not g.is_bipartite:
        raise ValueError("decompose needs a bipartite graph")
    s = Fraction(s)
    if s < 1:
        raise ValueError("s must be >= 1")
    if g.m == 0:
        raise ValueError("decompose needs at least one edge")
    rho = Fraction(rho_star) if rho_star is not None else max_density(g).value
    stats = degree_stats(g)
    if stats.max_left_degree > 4 * rho:
        raise ValueError(
            f"left-degree bound violated: Delta_L={stats.max_left_degree} > 4*rho*={4*rho}"
        )
    lgn = lg(g.n)
    exponent = math.ceil(2 * s)
    indptr, sorted_eidx = _left_csr(g)

    alive = np.ones(g.m, dtype=np.bool_)
    edge_class = np.zeros(g.m, dtype=np.int16)
    res_left = np.bincount(g.edges_u, minlength=g.n_left).astype(np.int64)
    f: list[int] = []
    residual_caps: list[int] = []
    sink_caps: list[int] = []
    flushed = 0
    i = 0
    while True:
        i += 1
        if i > _MAX_ROUNDS:
            raise AssertionError("decomposition did not terminate")
        f_i = 1 << (1 << i)
        cap_l = floor_frac(16 * rho / (f_i * f_i))
        cap_r = floor_frac(16 * rho * Fraction(f_i * lgn) ** exponent)
        f.append(f_i)
        residual_caps.append(cap_l)
        sink_caps.append(cap_r)
        excess = res_left - min(cap_l, 1 << 62)
        np.clip(excess, 0, None, out=excess)
        total_excess = int(excess.sum())
        if total_excess == 0:
            # nothing to extract at this scale: flush the residual here
            flushed = int(alive.sum())
            edge_class[alive] = i
            alive[:] = False
            break
        res_right = np.bincount(g.edges_v[alive], minlength=g.n).astype(np.int64)
        max_right = int(res_right.max()) if res_right.size else 0
        if cap_r >= max_right:
            # sink caps cannot bind: taking any excess(u) residual edges per
            # left vertex is already a saturating maximum flow
            _take_first_per_left(indptr, sorted_eidx, alive, excess, edge_class, i)
        else:
            if not _flow_round(g, alive, excess, total_excess, cap_r, edge_class, i):
                return None
        res_left = np.bincount(g.edges_u[alive], minlength=g.n_left).astype(np.int64)
        if not alive.any():
            break
        if 16 * rho < f_i * f_i:  # next scale is below one edge per vertex
            flushed = int(alive.sum())
            edge_class[alive] = i
            alive[:] = False
            break
    h = i
    class_left = []
    class_right = []
    for c in range(1, h + 1):
        mask = edge_class == c
        if mask.any():
            class_left.append(int(np.bincount(g.edges_u[mask]).max()))
            class_right.append(int(np.bincount(g.edges_v[mask]).max()))
        else:
            class_left.append(0)
            class_right.append(0)
    return Decomposition(
        edge_class=edge_class,
        h=h,
        s=s,
        rho_star=rho,
        log_n=lgn,
        exponent=exponent,
        f=f,
        residual_caps=residual_caps,
        sink_caps=sink_caps,
        class_left_deg=class_left,
        class_right_deg=class_right,
        flushed=flushed,
    )


def _flow_round(g, alive, excess, total_excess, cap_r, edge_class, label) -> bool:
    """Exact max-flow for one round; marks the flow-carrying edges."""
    lefts = np.where(excess > 0)[0]
    included = np.where(alive & (excess[g.edges_u] > 0))[0]
    rights = np.unique(g.edges_v[included])
    left_id = np.full(g.n_left, -1, dtype=np.int64)
    left_id[lefts] = np.arange(lefts.size)
    right_id = np.full(g.n, -1, dtype=np.int64)
    right_id[rights] = lefts.size + np.arange(rights.size)
    s_node = lefts.size + rights.size
    t_node = s_node + 1
    cap_r_eff = int(min(cap_r, total_excess))
    tail = np.concatenate([
        np.full(lefts.size, s_node, dtype=np.int64),
        left_id[g.edges_u[included]],
        right_id[rights],
    ])
    head = np.concatenate([
        left_id[lefts],
        right_id[g.edges_v[included]],
        np.full(rights.size, t_node, dtype=np.int64),
    ])
    cap = np.concatenate([
        excess[lefts],
        np.ones(included.size, dtype=np.int64),
        np.full(rights.size, cap_r_eff, dtype=np.int64),
    ])
    net = FlowNetwork(t_node + 1, tail, head, cap)
    if net.max_flow(s_node, t_node) < total_excess:
        return False
    carried = net.flows()[lefts.size : lefts.size + included.size] > 0
    chosen = included[carried]
    edge_class[chosen] = label
    alive[chosen] = False
    return True


def estimate_skew(g, rho_star: Fraction | None = None, with_decomposition: bool = False):
    """Smallest s in the doubling sequence 1, 2, 4, ... whose decomposition
    succeeds. Always terminates: by s >= log2 n the sink caps exceed any
    right degree."""
    rho = Fraction(rho_star) if rho_star is not None else max_density(g).value
    s = 1
    limit = 4 * max(1, lg(g.n))
    while True:
        dec = decompose(g, Fraction(s), rho)
        if dec is not None:
            return (Fraction(s), dec) if with_decomposition else Fraction(s)
        s *= 2
        if s > limit:
            raise AssertionError("skew estimation exceeded its guaranteed ceiling")


@dataclass
class VerifyReport:
    ok: bool
    lines: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def text(self) -> str:
        return "\n".join(self.lines)


def verify_decomposition(g, d: Decomposition) -> VerifyReport:
    """Recompute every decomposition invariant from scratch."""
    lines: list[str] = []
    failures: list[str] = []
    if d.edge_class.size != g.m:
        return VerifyReport(False, ["partition: FAIL (size mismatch)"], ["size mismatch"])
    labels_ok = bool(((d.edge_class >= 1) & (d.edge_class <= d.h)).all())
    covered = int(np.bincount(d.edge_class, minlength=d.h + 1)[1:].sum())
    if not labels_ok or covered != g.m:
        failures.append("classes do not partition the edge set")
    lines.append(f"partition: {'PASS' if not failures else 'FAIL'} ({covered}/{g.m} edges)")
    for i in range(1, d.h + 1):
        mask = d.edge_class == i
        cap_l = d.left_cap(i)
        cap_r = d.right_cap(i)
        if mask.any():
            dl_per = np.bincount(g.edges_u[mask], minlength=g.n_left)
            dr_per = np.bincount(g.edges_v[mask], minlength=g.n)
            dl, dr = int(dl_per.max()), int(dr_per.max())
        else:
            dl_per = dr_per = None
            dl = dr = 0
        bad_vertex = None
        if dl > cap_l:
            bad_vertex = int(np.argmax(dl_per))
        elif dr > cap_r:
            bad_vertex = int(np.argmax(dr_per))
        status = "PASS" if bad_vertex is None else f"FAIL {bad_vertex}"
        lines.append(f"class {i}: dL={dl} cap={cap_l} dR={dr} cap={cap_r} {status}")
        if bad_vertex is not None:
            failures.append(f"class {i} degree cap violated at vertex {bad_vertex}")
    # property (ii): residual left degree after round i
    for i in range(1, d.h):
        residual = d.edge_class > i
        bound = 16 * d.rho_star / d.f[i]  # = 16 rho / f_{i+1}
        if residual.any():
            rl = int(np.bincount(g.edges_u[residual], minlength=g.n_left).max())
        else:
            rl = 0
        if rl > bound:
            failures.append(f"residual after round {i} exceeds {bound}")
            lines.append(f"residual {i}: dL={rl} cap={bound} FAIL")
        else:
            lines.append(f"residual {i}: dL={rl} cap={bound} PASS")
    bound_h = round_count_bound(d.rho_star)
    if d.h > bound_h:
        failures.append(f"h={d.h} exceeds bound {bound_h}")
    lines.append(f"rounds: h={d.h} bound={bound_h} {'PASS' if d.h <= bound_h else 'FAIL'}")
    return VerifyReport(ok=not failures, lines=lines, failures=failures)


def round_count_bound(rho_star: Fraction) -> int:
    """ceil(log2 log2 (16 rho*)) + 1, evaluated exactly."""
    target = 16 * Fraction(rho_star)
    k = 0
    while Fraction(1 << (1 << k)) < target:
        k += 1
        if k > 10:  # 2^(2^10) dwarfs any representable density
            break
    return k + 1


def save_decomposition(d: Decomposition, path) -> None:
    """Header 'h s rho_num rho_den', then one 'edge_index class' line per edge."""
    s_txt = str(d.s.numerator) if d.s.denominator == 1 else f"{d.s.numerator}/{d.s.denominator}"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{d.h} {s_txt} {d.rho_star.numerator} {d.rho_star.denominator}\n")
        for e, c in enumerate(d.edge_class):
            fh.write(f"{e} {c}\n")


def load_decomposition(path, g) -> Decomposition:
    with open(path, "r", encoding="utf-8") as fh:
        h_txt, s_txt, rn, rd = fh.readline().split()
        h = int(h_txt)
        s = Fraction(s_txt)
        rho = Fraction(int(rn), int(rd))
        edge_class = np.zeros(g.m, dtype=np.int16)
        seen = 0
        for line in fh:
            if not line.strip():
                continue
            e_txt, c_txt = line.split()
            edge_class[int(e_txt)] = int(c_txt)
            seen += 1
    if seen != g.m:
        raise ValueError(f"decomposition covers {seen} of {g.m} edges")
    lgn = lg(g.n)
    exponent = math.ceil(2 * s)
    f = [1 << (1 << i) for i in range(1, h + 1)]
    class_left = []
    class_right = []
    for c in range(1, h + 1):
        mask = edge_class == c
        class_left.append(int(np.bincount(g.edges_u[mask]).max()) if mask.any() else 0)
        class_right.append(int(np.bincount(g.edges_v[mask]).max()) if mask.any() else 0)
    return Decomposition(
        edge_class=edge_class,
        h=h,
        s=s,
        rho_star=rho,
        log_n=lgn,
        exponent=exponent,
        f=f,
        residual_caps=[floor_frac(16 * rho / (fi * fi)) for fi in f],
        sink_caps=[floor_frac(16 * rho * Fraction(fi * lgn) ** exponent) for fi in f],
        class_left_deg=class_left,
        class_right_deg=class_right,
    )
