"""Collaboration graphs: configuration-model static graphs and Poisson-degree dynamic graphs.

Stub pairing: every user contributes one stub per target degree, stubs are
shuffled and paired consecutively, then self-loops and repeated pairs are cut.
Realized degrees can therefore undershoot their targets by a few edges.

All randomness comes from a single ``numpy.random.Generator``; passing an int
seed or an existing generator are both accepted.
"""

from __future__ import annotations

import logging
from pathlib import Path

import networkx as nx
import numpy as np

from collaboration.models import (
    DegreeProfile,
    DynamicGraphModel,
    EmptyTableError,
    Graph,
    InvalidArgumentError,
)

logger = logging.getLogger(__name__)

SeedLike = int | np.random.Generator | None


# ---------------------------------------------------------------------------
# Stub pairing
# ---------------------------------------------------------------------------

def _make_even(degrees: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Bump one uniformly chosen user's degree when the stub total is odd."""
    degrees = degrees.astype(np.int64, copy=True)
    if degrees.sum() % 2 == 1:
        degrees[rng.integers(len(degrees))] += 1
    return degrees


def _pair_stubs(degrees: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Pair shuffled stubs; return unique undirected edges (u < v) as an (E, 2) array."""
    stubs = np.repeat(np.arange(len(degrees)), degrees)
    rng.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs = np.sort(pairs, axis=1)
    edges = np.unique(pairs, axis=0) if len(pairs) else pairs.reshape(0, 2)
    pruned = len(stubs) // 2 - len(edges)
    if pruned:
        logger.debug("Cut %d self-loop/duplicate pairs out of %d", pruned, len(stubs) // 2)
    return edges


def graph_from_edges(n_users: int, edges: np.ndarray) -> Graph:
    """Build the immutable adjacency representation from an (E, 2) edge array."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    both = np.vstack([edges, edges[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=n_users)
    neighbors = np.split(both[:, 1], np.cumsum(counts)[:-1]) if n_users else []
    return Graph(
        n_users=n_users,
        adjacency=tuple(tuple(nbrs.tolist()) for nbrs in neighbors),
        degrees=tuple(counts.tolist()),
    )


# ---------------------------------------------------------------------------
# Static graphs
# ---------------------------------------------------------------------------

def build_configuration_graph(n_users: int, profile: DegreeProfile, seed: SeedLike = None) -> Graph:
    """Configuration-model graph with iid target degrees drawn from ``profile``."""
    if n_users < 2:
        raise InvalidArgumentError(f"n_users must be >= 2, got {n_users}")
    if not profile.support:
        raise InvalidArgumentError("degree profile has empty support")
    rng = np.random.default_rng(seed)
    targets = _make_even(profile.sample(n_users, rng), rng)
    graph = graph_from_edges(n_users, _pair_stubs(targets, rng))
    logger.debug(
        "Configuration graph: n=%d, target stubs=%d, realized edges=%d",
        n_users, int(targets.sum()), graph.edge_count,
    )
    return graph


# ---------------------------------------------------------------------------
# Dynamic graphs
# ---------------------------------------------------------------------------

def sample_realized_degrees(expected_degrees, seed: SeedLike = None) -> np.ndarray:
    """Independent Poisson(expected degree) draw per user."""
    expected = np.asarray(expected_degrees, dtype=float)
    if expected.size and np.any(expected < 1):
        raise InvalidArgumentError("expected degrees must all be >= 1")
    rng = np.random.default_rng(seed)
    return rng.poisson(expected).astype(np.int64)


def regenerate_dynamic_graph(model: DynamicGraphModel, seed: SeedLike = None) -> Graph:
    """Fresh graph for the model's users; degree-0 users come out isolated."""
    rng = np.random.default_rng(seed)
    realized = _make_even(sample_realized_degrees(model.expected_degrees, rng), rng)
    return graph_from_edges(model.n_users, _pair_stubs(realized, rng))


def build_dynamic_model(
    n_users: int,
    profile: DegreeProfile,
    seed: SeedLike = None,
    regeneration_rate: float = 1.0,
) -> DynamicGraphModel:
    """Draw expected degrees from ``profile`` and an initial realized graph."""
    if n_users < 2:
        raise InvalidArgumentError(f"n_users must be >= 2, got {n_users}")
    if not regeneration_rate > 0:
        raise InvalidArgumentError(f"regeneration_rate must be > 0, got {regeneration_rate}")
    rng = np.random.default_rng(seed)
    expected = tuple(profile.sample(n_users, rng).tolist())
    model = DynamicGraphModel(expected_degrees=expected, regeneration_rate=regeneration_rate)
    return DynamicGraphModel(
        expected_degrees=expected,
        regeneration_rate=regeneration_rate,
        current=regenerate_dynamic_graph(model, rng),
    )


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def empirical_conditional_degree_pmf(graph: Graph) -> dict[int, dict[int, float]]:
    """p̂(k'|k): over ordered edges (u, v), the degree of v given the degree of u."""
    edges = graph.edges()
    if len(edges) == 0:
        raise EmptyTableError("graph has no edges")
    degrees = np.asarray(graph.degrees)
    ordered = np.vstack([edges, edges[:, ::-1]])
    pairs, counts = np.unique(
        np.column_stack([degrees[ordered[:, 0]], degrees[ordered[:, 1]]]),
        axis=0,
        return_counts=True,
    )
    table: dict[int, dict[int, float]] = {}
    for (k, k_prime), c in zip(pairs.tolist(), counts.tolist()):
        table.setdefault(k, {})[k_prime] = float(c)
    for k, row in table.items():
        total = sum(row.values())
        table[k] = {k_prime: c / total for k_prime, c in row.items()}
    return table


def conditional_pmf_tv_distance(
    table: dict[int, dict[int, float]], profile: DegreeProfile
) -> dict[int, float]:
    """Total-variation distance of each support row from k'p(k')/k̄."""
    target = dict(zip(profile.support, profile.neighbor_pmf().tolist()))
    distances: dict[int, float] = {}
    for k in profile.support:
        row = table.get(k)
        if row is None:
            continue
        keys = set(row) | set(target)
        distances[k] = 0.5 * sum(abs(row.get(j, 0.0) - target.get(j, 0.0)) for j in keys)
    return distances


def to_networkx(graph: Graph) -> nx.Graph:
    """networkx view of ``graph``; every user is a node, isolated ones included."""
    g = nx.Graph()
    g.add_nodes_from(range(graph.n_users))
    g.add_edges_from(graph.edges().tolist())
    return g


def component_count(graph: Graph) -> int:
    """Number of connected components (isolated users count as one each)."""
    return nx.number_connected_components(to_networkx(graph))


# ---------------------------------------------------------------------------
# Edge-list files
# ---------------------------------------------------------------------------

def write_edge_list(graph: Graph, path: str | Path) -> Path:
    """Write one "u v" line per undirected edge (0-based ids)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nx.write_edgelist(to_networkx(graph), path, data=False)
    return path


def read_edge_list(path: str | Path, n_users: int | None = None) -> Graph:
    """Inverse of write_edge_list; ``n_users`` defaults to max id + 1."""
    g = nx.read_edgelist(path, nodetype=int)
    if n_users is None:
        n_users = max(g.nodes, default=-1) + 1
    g.add_nodes_from(range(n_users))
    if g.number_of_nodes() != n_users:
        raise InvalidArgumentError(f"edge list names users outside 0..{n_users - 1}")
    graph = graph_from_edges(n_users, np.array(sorted(g.edges()), dtype=np.int64))
    graph.validate()
    return graph
