"""
Structural features of a game network.

Every function is pure over an immutable graph. Quantities that are not
defined for a graph (too few nodes, no edges, zero degree variance) are
returned as None and serialized as null.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config import MetricsConfig
from tools.errors import DataError
from tools.embedding import wl_hash
from tools.graph_core import Graph, PlayerId, build_graph, connected_components
from tools.powerlaw_fit import PowerLawFit, powerlaw_fit

logger = logging.getLogger(__name__)

UNDEFINED = None

# per-game CSV columns, in the order of the cluster statistics table
PROFILE_COLUMNS = [
    "game_id", "n_nodes", "density", "mean_degree", "std_degree", "avg_clustering",
    "n_components", "lcc_fraction", "modularity", "assortativity", "powerlaw_verdict",
    "degree_centralization", "betweenness_centralization",
    "n_edges", "powerlaw_alpha", "powerlaw_xmin", "powerlaw_ks_stat", "powerlaw_p_value",
]


def density(g: Graph) -> Optional[float]:
    if g.number_of_nodes() < 2:
        return UNDEFINED
    return nx.density(g)


def degree_stats(g: Graph) -> Tuple[float, float]:
    """Mean degree 2|E|/|V| and population standard deviation of the degrees"""
    n = g.number_of_nodes()
    if n == 0:
        raise DataError("degree statistics of an empty graph are undefined")
    degrees = np.fromiter((d for _, d in g.degree()), dtype=float, count=n)
    return 2.0 * g.number_of_edges() / n, float(degrees.std())


def assortativity(g: Graph) -> Optional[float]:
    if g.number_of_edges() == 0:
        return UNDEFINED
    stub_degrees = np.array([g.degree(u) for u, v in g.edges()] + [g.degree(v) for u, v in g.edges()], dtype=float)
    if np.var(stub_degrees) == 0:
        return UNDEFINED
    r = nx.degree_pearson_correlation_coefficient(g)
    if r is None or not np.isfinite(r):
        return UNDEFINED
    return float(np.clip(r, -1.0, 1.0))


def degree_centralization(g: Graph) -> Optional[float]:
    """Freeman degree centralization: 1 on stars, 0 on regular graphs"""
    n = g.number_of_nodes()
    if n < 3:
        return UNDEFINED
    degrees = np.array([d for _, d in g.degree()], dtype=float)
    return float(np.sum(degrees.max() - degrees) / ((n - 1) * (n - 2)))


def betweenness(g: Graph) -> Dict[PlayerId, float]:
    """Shortest-path betweenness normalized by (n-1)(n-2)/2; unreachable pairs contribute nothing"""
    values = nx.betweenness_centrality(g, normalized=True)
    return {v: values[v] for v in sorted(values)}


def betweenness_centralization(g: Graph, values: Optional[Dict[PlayerId, float]] = None) -> Optional[float]:
    n = g.number_of_nodes()
    if n < 3:
        return UNDEFINED
    b = np.array(list((values if values is not None else betweenness(g)).values()), dtype=float)
    return float(np.sum(b.max() - b) / (n - 1))


def avg_clustering(g: Graph) -> Optional[float]:
    # nodes with degree < 2 count as 0
    if g.number_of_nodes() == 0:
        return UNDEFINED
    return float(nx.average_clustering(g))


def components_summary(g: Graph) -> Tuple[int, Optional[float]]:
    partition = connected_components(g)
    n = g.number_of_nodes()
    if n == 0:
        return 0, UNDEFINED
    return len(partition.components), len(partition.largest) / n


class Communities(NamedTuple):
    communities: List[frozenset]
    q: float


def modularity(g: Graph, communities: Sequence) -> float:
    return float(nx.community.modularity(g, communities, resolution=1))


def structural_order(g: Graph) -> List[PlayerId]:
    """
    Nodes ordered by degree, then by refined 1-WL color, then by id.
    Only structurally equivalent nodes are left to the id tie-break.
    """
    labels = {v: str(d) for v, d in g.degree()}
    classes = len(set(labels.values()))
    for _ in range(g.number_of_nodes()):
        refined = {v: wl_hash(labels[v], [labels[u] for u in g[v]]) for v in g}
        n_refined = len(set(refined.values()))
        if n_refined <= classes:
            break
        labels, classes = refined, n_refined
    return sorted(g.nodes(), key=lambda v: (g.degree(v), labels[v], v))


def modularity_score(g: Graph, seed: int = 0) -> Optional[Communities]:
    """
    Louvain communities (resolution 1, fixed seed) and their modularity.

    Louvain visits nodes in graph order, so it runs on a copy relabeled by
    structural_order; isomorphic graphs then get the same partition and
    the same score whatever their player ids. The connected-component
    partition is returned instead whenever it scores higher.
    """
    if g.number_of_edges() == 0:
        return UNDEFINED

    order = structural_order(g)
    index = {v: i for i, v in enumerate(order)}
    canonical = build_graph(range(len(order)), (tuple(sorted((index[u], index[v]))) for u, v in g.edges()))

    found = sorted((frozenset(c) for c in nx.community.louvain_communities(canonical, resolution=1, seed=seed)),
                   key=min)
    q = modularity(canonical, found)
    components = connected_components(canonical).components
    q_components = modularity(canonical, components)
    if q_components > q:
        found, q = components, q_components

    communities = sorted((frozenset(order[i] for i in c) for c in found), key=min)
    return Communities(communities, q)


@dataclass
class StructuralProfile:
    n_nodes: int
    n_edges: int
    density: Optional[float]
    mean_degree: float
    std_degree: float
    assortativity: Optional[float]
    degree_centralization: Optional[float]
    betweenness_centralization: Optional[float]
    avg_clustering: Optional[float]
    n_components: int
    lcc_fraction: Optional[float]
    modularity: Optional[float]
    powerlaw: PowerLawFit = field(default_factory=lambda: PowerLawFit(None, None, None, None, "inconclusive"))

    def to_dict(self) -> Dict:
        data = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "powerlaw"}
        data["powerlaw"] = self.powerlaw.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "StructuralProfile":
        values = dict(data)
        values["powerlaw"] = PowerLawFit.from_dict(values["powerlaw"])
        return cls(**values)

    def to_row(self, game_id: int) -> Dict:
        row = {k: v for k, v in self.to_dict().items() if k != "powerlaw"}
        row.update({
            "game_id": game_id,
            "powerlaw_verdict": self.powerlaw.verdict,
            "powerlaw_alpha": self.powerlaw.alpha,
            "powerlaw_xmin": self.powerlaw.xmin,
            "powerlaw_ks_stat": self.powerlaw.ks_stat,
            "powerlaw_p_value": self.powerlaw.p_value,
        })
        return {k: row[k] for k in PROFILE_COLUMNS}


def profile(g: Graph, cfg: Optional[MetricsConfig] = None, seed: Optional[int] = None) -> StructuralProfile:
    cfg = cfg or MetricsConfig()
    seed = cfg.seed if seed is None else seed
    if g.number_of_nodes() == 0:
        raise DataError("cannot profile an empty graph")

    mean_degree, std_degree = degree_stats(g)
    n_components, lcc_fraction = components_summary(g)
    communities = modularity_score(g, seed=seed)
    fit = powerlaw_fit((d for _, d in g.degree()), reps=cfg.bootstrap_reps, seed=seed,
                       p_threshold=cfg.p_threshold, min_tail=cfg.min_tail)

    return StructuralProfile(
        n_nodes=g.number_of_nodes(),
        n_edges=g.number_of_edges(),
        density=density(g),
        mean_degree=mean_degree,
        std_degree=std_degree,
        assortativity=assortativity(g),
        degree_centralization=degree_centralization(g),
        betweenness_centralization=betweenness_centralization(g),
        avg_clustering=avg_clustering(g),
        n_components=n_components,
        lcc_fraction=lcc_fraction,
        modularity=communities.q if communities else UNDEFINED,
        powerlaw=fit,
    )


def graph_seed(master_seed: int, game_id: int) -> int:
    """Per-graph seed; independent of corpus order and worker scheduling"""
    return int(np.random.SeedSequence([master_seed, game_id]).generate_state(1)[0])


def profile_corpus(graphs: Sequence[Tuple[int, Graph]], cfg: Optional[MetricsConfig] = None,
                   jobs: int = 1) -> List[Tuple[int, StructuralProfile]]:
    """Profiles in input order, computed on up to `jobs` worker threads"""
    cfg = cfg or MetricsConfig()

    def work(item):
        game_id, g = item
        result = profile(g, cfg, seed=graph_seed(cfg.seed, game_id))
        logger.info(f"Profiled game {game_id}: {result.n_nodes} nodes, verdict {result.powerlaw.verdict}")
        return game_id, result

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        return list(executor.map(work, graphs))
