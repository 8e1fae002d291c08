"""Communication graphs and the consensus matrices built on them."""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from kermab.errors import GenerationError, InputError, NumericalError, ParseError
from kermab.seeding import substream

GRAPH_KINDS = ("path", "cycle", "star", "complete", "erdos_renyi")
MAX_ER_ATTEMPTS = 1000


def _normalize_edges(n: int, edges: Iterable[tuple[int, int]]) -> frozenset:
    out = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise InputError(f"self-loop on node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise InputError(f"edge ({i}, {j}) out of range for n={n}")
        out.add((min(i, j), max(i, j)))
    return frozenset(out)


@dataclass(frozen=True)
class CommGraph:
    """Undirected simple graph on nodes ``0..n-1``.

    Connectivity is not enforced here (edge lists may be disconnected);
    consensus constructions check it.
    """

    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"graph needs at least one node, got n={self.n}")
        object.__setattr__(self, "edges", _normalize_edges(self.n, self.edges))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "CommGraph":
        return cls(n, frozenset(edges))

    @cached_property
    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(int)

    def neighbors(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.adjacency[i])]

    def _csr(self) -> csr_matrix:
        return csr_matrix(self.adjacency)

    def components(self) -> np.ndarray:
        """Component label per node."""
        _, labels = connected_components(self._csr(), directed=False)
        return labels

    def is_connected(self) -> bool:
        return self.n == 1 or connected_components(self._csr(), directed=False)[0] == 1


@dataclass(frozen=True)
class ConsensusMatrices:
    weights: np.ndarray
    perron: np.ndarray
    lambda2: float
    eigenvalues: np.ndarray


def _require_connected(g: CommGraph):
    if not g.is_connected():
        raise InputError(f"graph with n={g.n}, |E|={len(g.edges)} is not connected")


def metropolis_weights(g: CommGraph) -> np.ndarray:
    """Metropolis-Hastings weights ``w_ij = 1 / (1 + max(d_i, d_j))`` on edges.

    The diagonal absorbs the remainder so every row sums to one.
    """
    _require_connected(g)
    deg = g.degrees
    w = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    # off-diagonal row sums are at most d_i / (1 + d_i) < 1, so the diagonal stays positive
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w


def laplacian(weights: np.ndarray) -> np.ndarray:
    off = weights - np.diag(np.diag(weights))
    return np.diag(off.sum(axis=1)) - off


def perron_matrix(g: CommGraph) -> ConsensusMatrices:
    w = metropolis_weights(g)
    p = np.eye(g.n) - laplacian(w)
    try:
        eig = np.linalg.eigvalsh(p)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition of the Perron matrix failed: {exc}") from exc
    eig = eig[np.argsort(-np.abs(eig), kind="stable")]
    lambda2 = float(np.abs(eig[1])) if g.n > 1 else 0.0
    return ConsensusMatrices(weights=w, perron=p, lambda2=lambda2, eigenvalues=np.sort(eig)[::-1])


def gen_graph(kind: str, n: int, p: float = 0.0, seed: int = 0) -> CommGraph:
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if kind == "path":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "cycle":
        edges = [(i, (i + 1) % n) for i in range(n)] if n >= 3 else [(i, i + 1) for i in range(n - 1)]
    elif kind == "star":
        edges = [(0, i) for i in range(1, n)]
    elif kind == "complete":
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif kind == "erdos_renyi":
        return _erdos_renyi_connected(n, p, seed)
    else:
        raise InputError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
    return CommGraph.from_edges(n, edges)


def _erdos_renyi_connected(n: int, p: float, seed: int) -> CommGraph:
    if not 0 < p <= 1:
        raise InputError(f"edge probability must be in (0, 1], got {p}")
    iu, ju = np.triu_indices(n, k=1)
    for attempt in range(MAX_ER_ATTEMPTS):
        rng = substream(seed, "erdos_renyi", attempt)
        keep = rng.random(iu.shape[0]) < p
        g = CommGraph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))
        if g.is_connected():
            return g
    raise GenerationError(
        f"no connected Erdos-Renyi graph with n={n}, p={p} after {MAX_ER_ATTEMPTS} attempts")


def load_edge_list(text) -> CommGraph:
    """Parse whitespace-separated node pairs; ``#`` lines are comments.

    Node ids are relabeled to ``0..n-1`` in order of first appearance.
    Self-loops and repeated edges are dropped.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    ids: dict[int, int] = {}
    edges = set()
    for lineno, line in enumerate(text, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ParseError(f"expected two node ids, got {stripped!r}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node id in {stripped!r}", lineno) from None
        ia = ids.setdefault(a, len(ids))
        ib = ids.setdefault(b, len(ids))
        if ia != ib:
            edges.add((min(ia, ib), max(ia, ib)))
    if not ids:
        raise ParseError("edge list contains no edges")
    return CommGraph(len(ids), frozenset(edges))


def induced_subgraph(g: CommGraph, nodes: list[int]) -> CommGraph:
    """Subgraph on ``nodes``, relabeled by their position in the list."""
    index = {v: k for k, v in enumerate(nodes)}
    edges = [(index[i], index[j]) for i, j in g.edges if i in index and j in index]
    return CommGraph.from_edges(len(nodes), edges)


def sample_connected_subgraph(g: CommGraph, k: int, seed: int) -> CommGraph:
    """BFS-truncated connected sample of ``k`` nodes from the largest component."""
    if not 1 <= k <= g.n:
        raise InputError(f"k must be in [1, {g.n}], got {k}")
    labels = g.components()
    sizes = np.bincount(labels)
    largest = int(np.argmax(sizes))
    if sizes[largest] < k:
        raise InputError(f"largest connected component has {sizes[largest]} nodes, need {k}")
    members = np.flatnonzero(labels == largest)
    rng = substream(seed, "subgraph_start")
    start = int(members[rng.integers(len(members))])
    order = breadth_first_order(g._csr(), start, directed=False, return_predecessors=False)
    return induced_subgraph(g, [int(v) for v in order[:k]])
