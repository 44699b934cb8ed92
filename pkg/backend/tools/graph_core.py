"""
Canonical undirected simple graphs of players.

Graphs are frozen networkx.Graph objects whose nodes (and adjacency rows)
are inserted in ascending player-id order, so two graphs built from the same
edge set iterate identically no matter how the input was ordered.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple

import networkx as nx

from tools.errors import DataError, EdgeListParseError

logger = logging.getLogger(__name__)

PlayerId = int
Graph = nx.Graph


@dataclass(frozen=True)
class ComponentPartition:
    components: List[frozenset]
    lcc_index: Optional[int]

    @property
    def sizes(self) -> List[int]:
        return [len(c) for c in self.components]

    @property
    def largest(self) -> frozenset:
        if self.lcc_index is None:
            return frozenset()
        return self.components[self.lcc_index]


def _to_id(value) -> PlayerId:
    if isinstance(value, bool):
        raise ValueError(f"not a player id: {value!r}")
    if isinstance(value, int):
        if value < 0:
            raise ValueError(f"negative player id: {value}")
        return value
    text = str(value).strip()
    if not text.isdigit():
        raise ValueError(f"not a decimal player id: {value!r}")
    return int(text)


def build_graph(nodes: Iterable[PlayerId], edges: Iterable[Tuple[PlayerId, PlayerId]],
                self_loops: int = 0, duplicates: int = 0) -> Graph:
    g = nx.Graph()
    g.add_nodes_from(sorted(nodes))
    g.add_edges_from(sorted(edges))
    g.graph["self_loops_dropped"] = self_loops
    g.graph["duplicates_dropped"] = duplicates
    return nx.freeze(g)


def _accumulate(records: Iterable[Tuple[int, object, object]], source: str) -> Graph:
    nodes: Set[PlayerId] = set()
    edges: Set[Tuple[PlayerId, PlayerId]] = set()
    self_loops = 0
    duplicates = 0

    for line_no, raw_u, raw_v in records:
        try:
            u, v = _to_id(raw_u), _to_id(raw_v)
        except (TypeError, ValueError):
            raise EdgeListParseError(line_no, f"{raw_u}\t{raw_v}", source)

        nodes.add(u)
        nodes.add(v)
        if u == v:
            self_loops += 1
            continue
        key = (u, v) if u < v else (v, u)
        if key in edges:
            duplicates += 1
        else:
            edges.add(key)

    if self_loops:
        logger.warning(f"Dropped {self_loops} self-loop(s) from {source}")
    if duplicates:
        logger.info(f"Collapsed {duplicates} duplicate edge record(s) from {source}")

    return build_graph(nodes, edges, self_loops, duplicates)


def from_edge_list(pairs: Iterable[Tuple[object, object]], source: str = "<pairs>") -> Graph:
    """
    Build a simple undirected graph from (u, v) pairs.

    Args:
        pairs: sequence of 2-tuples of player ids (ints or decimal strings)
        source: label used in parse errors and log messages

    Returns:
        Frozen graph; self-loops and duplicates are dropped and their counts
        kept in g.graph["self_loops_dropped"] / g.graph["duplicates_dropped"]
    """
    def records():
        for line_no, pair in enumerate(pairs, 1):
            try:
                u, v = pair
            except (TypeError, ValueError):
                raise EdgeListParseError(line_no, repr(pair), source)
            yield line_no, u, v

    return _accumulate(records(), source)


def read_edge_list(path) -> Graph:
    """Read a tab-separated edge list ('#' comments and blank lines are skipped)"""
    path = Path(path)

    def records():
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                fields = line.rstrip("\r\n").split("\t")
                if len(fields) != 2:
                    raise EdgeListParseError(line_no, stripped, str(path))
                yield line_no, fields[0], fields[1]

    g = _accumulate(records(), str(path))
    logger.info(f"Loaded {path}: {g.number_of_nodes()} nodes, {g.number_of_edges()} edges")
    return g


def format_edge_list(g: Graph) -> str:
    """Serialize edges (isolated nodes are not representable in this format)"""
    lines = [f"{u}\t{v}\n" for u, v in sorted(_canonical_edges(g))]
    return "".join(lines)


def _canonical_edges(g: Graph) -> List[Tuple[PlayerId, PlayerId]]:
    return [(u, v) if u < v else (v, u) for u, v in g.edges()]


def induced_subgraph(g: Graph, keep: Iterable[PlayerId]) -> Graph:
    keep_set = set(keep)
    nodes = [n for n in g.nodes() if n in keep_set]
    edges = [(u, v) for u, v in _canonical_edges(g) if u in keep_set and v in keep_set]
    return build_graph(nodes, edges)


def connected_components(g: Graph) -> ComponentPartition:
    components = sorted((frozenset(c) for c in nx.connected_components(g)), key=min)
    if not components:
        return ComponentPartition(components=[], lcc_index=None)

    # first maximum wins, i.e. the one with the smallest minimum id
    lcc_index = max(range(len(components)), key=lambda i: (len(components[i]), -i))
    return ComponentPartition(components=components, lcc_index=lcc_index)


def largest_connected_component(g: Graph) -> Graph:
    if g.number_of_nodes() == 0:
        raise DataError("largest connected component of an empty graph is undefined")
    partition = connected_components(g)
    return induced_subgraph(g, partition.largest)


def graph_to_record(game_id: int, g: Graph) -> Dict:
    return {
        "game_id": game_id,
        "nodes": sorted(g.nodes()),
        "edges": [list(e) for e in sorted(_canonical_edges(g))],
    }


def graph_from_record(record: Dict) -> Tuple[int, Graph]:
    try:
        nodes = [_to_id(n) for n in record["nodes"]]
        edges = [(_to_id(u), _to_id(v)) for u, v in record["edges"]]
        game_id = int(record["game_id"])
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed graph record: {e}")
    return game_id, build_graph(nodes, edges)
