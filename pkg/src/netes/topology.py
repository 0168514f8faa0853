"""Communication-graph generation, validation, and statistics.

Graphs are undirected and simple (symmetric boolean adjacency, zero
diagonal). Four generative families are supported, plus an edgeless
placeholder used by broadcast-only control runs. Generation is fully
deterministic in (family, params, seed).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class GraphFamily(str, Enum):
    COMPLETE = "complete"
    ERDOS_RENYI = "erdos_renyi"
    SMALL_WORLD = "small_world"
    SCALE_FREE = "scale_free"
    EDGELESS = "edgeless"


class TopologyError(ValueError):
    """Invalid size or family parameters."""


class ConnectivityError(RuntimeError):
    """No connected graph was produced within the allowed attempts."""

    def __init__(self, family: "GraphFamily", attempts: int):
        self.family = family
        self.attempts = attempts
        super().__init__(
            f"no connected {family.value} graph in {attempts} attempt(s)"
        )


@dataclass(eq=False)
class Graph:
    """Immutable undirected simple graph over agent indices 0..n-1."""

    n: int
    edges: np.ndarray  # (n, n) bool, symmetric, zero diagonal
    family: GraphFamily
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=bool)
        if self.edges.shape != (self.n, self.n):
            raise TopologyError(
                f"adjacency shape {self.edges.shape} does not match n={self.n}"
            )
        if self.edges.diagonal().any():
            raise TopologyError("adjacency has nonzero diagonal")
        if not np.array_equal(self.edges, self.edges.T):
            raise TopologyError("adjacency is not symmetric")
        self.edges.flags.writeable = False

    @property
    def degrees(self) -> np.ndarray:
        return self.edges.sum(axis=1).astype(int)

    @property
    def edge_count(self) -> int:
        return int(self.edges.sum()) // 2

    def edge_list(self) -> list[tuple[int, int]]:
        """Edges as sorted (i, j) pairs with i < j."""
        rows, cols = np.nonzero(np.triu(self.edges, 1))
        return list(zip(rows.tolist(), cols.tolist()))


@dataclass
class DegreeStats:
    min_degree: int
    max_degree: int
    mean_degree: float
    degrees: list[int]


def _require_size(n: int) -> None:
    if n < 2:
        raise TopologyError(f"node count must be at least 2, got {n}")


def _symmetrize(upper: np.ndarray) -> np.ndarray:
    return upper | upper.T


def generate_complete(n: int) -> Graph:
    """Graph with every pair of nodes linked; degree n-1 everywhere."""
    _require_size(n)
    edges = ~np.eye(n, dtype=bool)
    return Graph(n, edges, GraphFamily.COMPLETE, {}, 0)


def generate_edgeless(n: int) -> Graph:
    """Graph with no edges at all (broadcast-only control topology)."""
    _require_size(n)
    return Graph(n, np.zeros((n, n), dtype=bool), GraphFamily.EDGELESS, {}, 0)


def generate_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """Each unordered pair linked independently with probability p.

    p=1 yields the complete graph exactly.
    """
    _require_size(n)
    if not 0.0 < p <= 1.0:
        raise TopologyError(f"edge probability must be in (0, 1], got {p}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    edges = np.zeros((n, n), dtype=bool)
    iu = np.triu_indices(n, k=1)
    edges[iu] = rng.random(len(iu[0])) < p
    return Graph(n, _symmetrize(edges), GraphFamily.ERDOS_RENYI, {"p": p}, seed)


def generate_watts_strogatz(n: int, k: int, beta: float, seed: int) -> Graph:
    """Ring lattice of even degree k with each edge rewired with probability beta.

    Rewiring moves edges, never adds or removes them, so the edge count is
    exactly n*k/2. No self-loops or duplicate edges are created.
    """
    _require_size(n)
    if k % 2 != 0:
        raise TopologyError(f"ring degree must be even, got {k}")
    if not 0 < k < n:
        raise TopologyError(f"ring degree must satisfy 0 < k < n, got k={k}, n={n}")
    if not 0.0 <= beta <= 1.0:
        raise TopologyError(f"rewiring probability must be in [0, 1], got {beta}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    edges = np.zeros((n, n), dtype=bool)
    for j in range(1, k // 2 + 1):
        idx = np.arange(n)
        edges[idx, (idx + j) % n] = True
        edges[(idx + j) % n, idx] = True
    for j in range(1, k // 2 + 1):
        for i in range(n):
            old = (i + j) % n
            if rng.random() >= beta:
                continue
            if edges[i].sum() >= n - 1:
                continue  # node already saturated, nothing to rewire to
            target = int(rng.integers(n))
            while target == i or edges[i, target]:
                target = int(rng.integers(n))
            edges[i, old] = edges[old, i] = False
            edges[i, target] = edges[target, i] = True
    return Graph(
        n, edges, GraphFamily.SMALL_WORLD, {"k": k, "beta": beta}, seed
    )


def generate_barabasi_albert(n: int, m: int, seed: int) -> Graph:
    """Preferential-attachment growth from an m-node seed clique.

    Each of the n-m added nodes attaches m distinct edges to existing nodes
    picked proportionally to degree, giving exactly
    m*(m-1)/2 + m*(n-m) edges.
    """
    _require_size(n)
    if m < 1:
        raise TopologyError(f"attachment count must be at least 1, got {m}")
    if m >= n:
        raise TopologyError(f"attachment count must be below n, got m={m}, n={n}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    edges = np.zeros((n, n), dtype=bool)
    edges[:m, :m] = ~np.eye(m, dtype=bool)
    # every node appears once per incident edge; uniform draws from this
    # list realize degree-proportional attachment
    repeated: list[int] = [i for i in range(m) for _ in range(max(m - 1, 1))]
    for new in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(repeated[int(rng.integers(len(repeated)))])
        for t in targets:
            edges[new, t] = edges[t, new] = True
            repeated.append(t)
        repeated.extend([new] * m)
    return Graph(n, edges, GraphFamily.SCALE_FREE, {"m": m}, seed)


_GENERATORS = {
    GraphFamily.COMPLETE: lambda n, params, seed: generate_complete(n),
    GraphFamily.EDGELESS: lambda n, params, seed: generate_edgeless(n),
    GraphFamily.ERDOS_RENYI: lambda n, params, seed: generate_erdos_renyi(
        n, params["p"], seed
    ),
    GraphFamily.SMALL_WORLD: lambda n, params, seed: generate_watts_strogatz(
        n, params["k"], params.get("beta", 0.1), seed
    ),
    GraphFamily.SCALE_FREE: lambda n, params, seed: generate_barabasi_albert(
        n, params["m"], seed
    ),
}


def generate(family: GraphFamily, n: int, params: dict, seed: int) -> Graph:
    """Dispatch to the family generator."""
    return _GENERATORS[GraphFamily(family)](n, params, seed)


def is_connected(g: Graph) -> bool:
    """True iff a traversal from node 0 reaches all n nodes."""
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    frontier = seen.copy()
    while frontier.any():
        reached = g.edges[frontier].any(axis=0) & ~seen
        seen |= reached
        frontier = reached
    return bool(seen.all())


def sample_connected(
    family: GraphFamily,
    n: int,
    params: dict,
    seed: int,
    max_attempts: int = 100,
) -> Graph:
    """First connected graph from the family, advancing the seed per attempt.

    Attempt t uses seed+t, so retries are reproducible. Raises
    ConnectivityError carrying the attempt count when every attempt yields
    a disconnected graph.
    """
    if max_attempts < 1:
        raise TopologyError(f"max_attempts must be at least 1, got {max_attempts}")
    family = GraphFamily(family)
    for attempt in range(max_attempts):
        g = generate(family, n, params, seed + attempt)
        if is_connected(g):
            return g
    raise ConnectivityError(family, max_attempts)


def degree_stats(g: Graph) -> DegreeStats:
    degrees = g.degrees
    return DegreeStats(
        min_degree=int(degrees.min()),
        max_degree=int(degrees.max()),
        mean_degree=float(degrees.mean()),
        degrees=degrees.tolist(),
    )


# ---------------------------------------------------------------------------
# Density matching across families
# ---------------------------------------------------------------------------

def ring_degree_for_density(n: int, density: float) -> int:
    """Even ring degree whose edge budget n*k/2 matches the target density."""
    k = 2 * round(density * (n - 1) / 2)
    k = max(2, min(k, n - 1 if (n - 1) % 2 == 0 else n - 2))
    return k


def attachment_count_for_density(n: int, density: float) -> int:
    """Largest m whose clique-plus-growth edge count stays within budget."""
    budget = density * n * (n - 1) / 2
    m = 1
    for candidate in range(1, n):
        if candidate * (candidate - 1) / 2 + candidate * (n - candidate) <= budget:
            m = candidate
        else:
            break
    return m


def params_for_density(
    family: GraphFamily, n: int, density: float, beta: float = 0.1
) -> dict:
    """Family parameters giving edge budgets comparable at the target density."""
    family = GraphFamily(family)
    if family is GraphFamily.ERDOS_RENYI:
        return {"p": density}
    if family is GraphFamily.SMALL_WORLD:
        return {"k": ring_degree_for_density(n, density), "beta": beta}
    if family is GraphFamily.SCALE_FREE:
        return {"m": attachment_count_for_density(n, density)}
    return {}


# ---------------------------------------------------------------------------
# Edge-list export / import
# ---------------------------------------------------------------------------

def save_edge_list(g: Graph, path: str | Path) -> None:
    """Write `i j` pairs (0-indexed, i < j, lexicographically sorted)."""
    lines = [f"# netes-graph n={g.n} family={g.family.value} seed={g.seed}"]
    lines.extend(f"{i} {j}" for i, j in g.edge_list())
    Path(path).write_text("\n".join(lines) + "\n")


def load_edge_list(path: str | Path) -> Graph:
    """Read a graph written by save_edge_list. Family params are not stored."""
    text = Path(path).read_text().strip().splitlines()
    if not text or not text[0].startswith("# netes-graph"):
        raise TopologyError(f"{path}: missing netes-graph header")
    fields = dict(
        part.split("=", 1) for part in text[0].removeprefix("# netes-graph").split()
    )
    n = int(fields["n"])
    family = GraphFamily(fields["family"])
    seed = int(fields["seed"])
    edges = np.zeros((n, n), dtype=bool)
    for line in text[1:]:
        if not line.strip():
            continue
        i, j = (int(x) for x in line.split())
        if not 0 <= i < j < n:
            raise TopologyError(f"{path}: bad edge line {line!r}")
        edges[i, j] = edges[j, i] = True
    return Graph(n, edges, family, {}, seed)
