"""Base graphs, degree statistics, i.i.d. edge sampling and component sizes.

Graphs are immutable after construction and safe to share across workers.
Edge lists are stored as parallel int64 arrays; for bipartite graphs the
first endpoint of every edge is the Left vertex. Parallel edges are allowed
(the sampled multigraphs need them); self-loops are not.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .rng import sample_uniform


class GraphFormat(Enum):
    EDGE_LIST = "edge_list"


class GraphFormatError(ValueError):
    """Raised on malformed edge-list input; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class Side(Enum):
    LEFT = "L"
    RIGHT = "R"


def lg(n: int) -> int:
    """Artifact-wide integral base-2 log: max(2, floor(log2 n))."""
    if n < 1:
        raise ValueError("lg needs a positive argument")
    return max(2, n.bit_length() - 1)


def loglog(n: int) -> int:
    """max(1, floor(log2 lg(n)))."""
    return max(1, lg(n).bit_length() - 1)


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def floor_frac(x: Fraction) -> int:
    return x.numerator // x.denominator


@dataclass
class BaseGraph:
    """An undirected base graph, optionally bipartite-tagged.

    When `n_left` is set, vertices 0..n_left-1 are Left, the rest Right, and
    every stored edge is normalized to (left, right).
    """

    n: int
    edges_u: np.ndarray
    edges_v: np.ndarray
    n_left: int | None = None
    _degrees: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.edges_u = np.asarray(self.edges_u, dtype=np.int64)
        self.edges_v = np.asarray(self.edges_v, dtype=np.int64)
        if self.edges_u.shape != self.edges_v.shape:
            raise ValueError("endpoint arrays must have equal length")

    @property
    def m(self) -> int:
        return int(self.edges_u.size)

    @property
    def is_bipartite(self) -> bool:
        return self.n_left is not None

    def side_of(self, v: int) -> Side | None:
        if self.n_left is None:
            return None
        return Side.LEFT if v < self.n_left else Side.RIGHT

    def endpoints(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(idx, dtype=np.int64)
        return self.edges_u[idx], self.edges_v[idx]

    def edge(self, i: int) -> tuple[int, int]:
        return int(self.edges_u[i]), int(self.edges_v[i])

    def degrees(self) -> np.ndarray:
        if self._degrees is None:
            d = np.bincount(self.edges_u, minlength=self.n)
            d += np.bincount(self.edges_v, minlength=self.n)
            self._degrees = d.astype(np.int64)
        return self._degrees

    def validate(self) -> None:
        """Re-check all structural invariants; raises ValueError on failure."""
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        if self.m:
            lo = min(self.edges_u.min(), self.edges_v.min())
            hi = max(self.edges_u.max(), self.edges_v.max())
            if lo < 0 or hi >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(self.edges_u == self.edges_v):
                raise ValueError("self-loops are not allowed")
        if self.n_left is not None:
            if not 0 <= self.n_left <= self.n:
                raise ValueError("bad Left part size")
            if self.m and (
                np.any(self.edges_u >= self.n_left) or np.any(self.edges_v < self.n_left)
            ):
                raise ValueError("bipartite edge does not join Left to Right")

    def hash_token(self) -> str:
        """Stable 16-hex digest of the graph's content (used in stream headers)."""
        h = hashlib.sha256()
        h.update(f"el:{self.n}:{self.n_left}".encode())
        h.update(self.edges_u.tobytes())
        h.update(self.edges_v.tobytes())
        return h.hexdigest()[:16]


def make_graph(n, pairs, n_left=None) -> BaseGraph:
    """Build and validate a BaseGraph from an iterable of endpoint pairs."""
    pairs = list(pairs)
    if pairs:
        eu = np.array([p[0] for p in pairs], dtype=np.int64)
        ev = np.array([p[1] for p in pairs], dtype=np.int64)
    else:
        eu = np.empty(0, dtype=np.int64)
        ev = np.empty(0, dtype=np.int64)
    if n_left is not None and eu.size:
        # normalize so the Left endpoint comes first
        swap = eu >= n_left
        eu2 = np.where(swap, ev, eu)
        ev2 = np.where(swap, eu, ev)
        eu, ev = eu2, ev2
    g = BaseGraph(n=n, edges_u=eu, edges_v=ev, n_left=n_left)
    g.validate()
    return g


_EMPTY = object()


@dataclass(frozen=True)
class GraphStats:
    """Exact rational degree statistics of a base graph."""

    avg_degree: Fraction
    max_left_degree: int
    max_right_degree: int
    density: Fraction
    edge_count: int

    @property
    def is_empty(self) -> bool:
        return self.edge_count == 0


EMPTY_STATS = GraphStats(Fraction(0), 0, 0, Fraction(0), 0)


def degree_stats(g) -> GraphStats:
    """d^av = 2m/n, density m/n and side maxima, all exact.

    For non-bipartite graphs both side maxima equal the max degree. An empty
    edge set yields the distinguished EMPTY_STATS value.
    """
    if g.n < 1:
        raise ValueError("graph is empty")
    if g.m == 0:
        return EMPTY_STATS
    deg = g.degrees()
    if g.is_bipartite:
        dl = int(deg[: g.n_left].max()) if g.n_left > 0 else 0
        dr = int(deg[g.n_left :].max()) if g.n_left < g.n else 0
    else:
        dl = dr = int(deg.max())
    return GraphStats(
        avg_degree=Fraction(2 * g.m, g.n),
        max_left_degree=dl,
        max_right_degree=dr,
        density=Fraction(g.m, g.n),
        edge_count=g.m,
    )


@dataclass
class SampledStream:
    """An ordered multiset of T i.i.d. edge draws, with seed provenance."""

    base: BaseGraph
    arrivals: np.ndarray
    seed: int
    T: int

    def __post_init__(self):
        self.arrivals = np.asarray(self.arrivals, dtype=np.int64)
        if self.arrivals.size != self.T:
            raise ValueError("arrival count does not match T")

    def endpoint_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.base.endpoints(self.arrivals)


def sample_iid(g, T: int, seed: int) -> SampledStream:
    """Draw T edge indices uniformly with replacement from g's edge set.

    Identical (g, T, seed) always reproduces the identical stream.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    if g.m == 0 and T > 0:
        raise ValueError("cannot sample from an empty edge set")
    arrivals = sample_uniform(seed, T, max(g.m, 1))
    return SampledStream(base=g, arrivals=arrivals, seed=seed, T=T)


def components(g, edge_subset) -> list[int]:
    """Sizes (descending) of the components induced by an edge-index subset.

    Isolated vertices are excluded, so the sizes sum to the number of
    vertices touched by the subset.
    """
    idx = np.asarray(list(edge_subset), dtype=np.int64)
    if idx.size == 0:
        return []
    u, v = g.endpoints(idx)
    verts = np.unique(np.concatenate([u, v]))
    pos = {int(w): i for i, w in enumerate(verts)}
    parent = list(range(len(verts)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in zip(u, v):
        ra, rb = find(pos[int(a)]), find(pos[int(b)])
        if ra != rb:
            parent[ra] = rb
    sizes: dict[int, int] = {}
    for i in range(len(verts)):
        r = find(i)
        sizes[r] = sizes.get(r, 0) + 1
    return sorted(sizes.values(), reverse=True)


# ---------------------------------------------------------------------------
# Edge-list text format
#
#   header:  "n m"  or  "bipartite nL nR m"
#   then m lines "u v" (0-based). Lines starting with '#' are comments.
# ---------------------------------------------------------------------------


def _parse_edge_list(lines) -> BaseGraph:
    header = None
    n = n_left = m = 0
    eu: list[int] = []
    ev: list[int] = []
    for line_no, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        toks = text.split()
        if header is None:
            if toks[0] == "bipartite":
                if len(toks) != 4:
                    raise GraphFormatError("bipartite header needs 'bipartite nL nR m'", line_no)
                try:
                    nl, nr, m = (int(t) for t in toks[1:])
                except ValueError:
                    raise GraphFormatError("non-integer field in header", line_no) from None
                if nl < 0 or nr < 0 or m < 0 or nl + nr < 1:
                    raise GraphFormatError("bad sizes in bipartite header", line_no)
                n, n_left = nl + nr, nl
                header = "bipartite"
            else:
                if len(toks) != 2:
                    raise GraphFormatError("header must be 'n m' or 'bipartite nL nR m'", line_no)
                try:
                    n, m = int(toks[0]), int(toks[1])
                except ValueError:
                    raise GraphFormatError("non-integer field in header", line_no) from None
                if n < 1 or m < 0:
                    raise GraphFormatError("bad sizes in header", line_no)
                n_left = None
                header = "plain"
            continue
        if len(toks) != 2:
            raise GraphFormatError("edge line must be 'u v'", line_no)
        try:
            u, v = int(toks[0]), int(toks[1])
        except ValueError:
            raise GraphFormatError("non-integer endpoint", line_no) from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"endpoint out of range [0, {n})", line_no)
        if u == v:
            raise GraphFormatError("self-loop", line_no)
        if n_left is not None:
            us, vs = u < n_left, v < n_left
            if us == vs:
                raise GraphFormatError("edge does not join Left to Right", line_no)
            if not us:
                u, v = v, u
        if len(eu) >= m:
            raise GraphFormatError(f"more than the declared {m} edges", line_no)
        eu.append(u)
        ev.append(v)
    if header is None:
        raise GraphFormatError("missing header line")
    if len(eu) != m:
        raise GraphFormatError(f"declared {m} edges but found {len(eu)}")
    return BaseGraph(
        n=n,
        edges_u=np.array(eu, dtype=np.int64),
        edges_v=np.array(ev, dtype=np.int64),
        n_left=n_left,
    )


def load_graph(path, format: GraphFormat = GraphFormat.EDGE_LIST) -> BaseGraph:
    """Parse an edge-list file into a validated BaseGraph."""
    if format is not GraphFormat.EDGE_LIST:
        raise ValueError(f"unsupported format: {format}")
    with open(path, "r", encoding="utf-8") as fh:
        g = _parse_edge_list(fh)
    g.validate()
    return g


def loads_graph(text: str) -> BaseGraph:
    g = _parse_edge_list(text.splitlines())
    g.validate()
    return g


def save_graph(g: BaseGraph, path, comments: list[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in comments or []:
            fh.write(f"# {c}\n")
        if g.is_bipartite:
            fh.write(f"bipartite {g.n_left} {g.n - g.n_left} {g.m}\n")
        else:
            fh.write(f"{g.n} {g.m}\n")
        for u, v in zip(g.edges_u, g.edges_v):
            fh.write(f"{u} {v}\n")


def save_stream(stream: SampledStream, path) -> None:
    """Serialize a stream as 'sample base_hash T seed' plus one index per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"sample {stream.base.hash_token()} {stream.T} {stream.seed}\n")
        for a in stream.arrivals:
            fh.write(f"{a}\n")


def load_stream(path, base) -> SampledStream:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "sample":
            raise GraphFormatError("stream header must be 'sample base_hash T seed'", 1)
        tok, T, seed = header[1], int(header[2]), int(header[3])
        if tok != base.hash_token():
            raise GraphFormatError("stream base hash does not match the given graph", 1)
        arrivals = np.array([int(line) for line in fh if line.strip()], dtype=np.int64)
    if arrivals.size and (arrivals.min() < 0 or arrivals.max() >= base.m):
        raise GraphFormatError("arrival index out of range")
    return SampledStream(base=base, arrivals=arrivals, seed=seed, T=T)
