"""
Deterministic synthetic data: the bundled offline fixture and structural
graph families for clustering experiments.
"""

import json
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np

from tools.artifacts import write_json, write_text
from tools.graph_core import Graph, build_graph
from tools.sampling import ObservationWindow

logger = logging.getLogger(__name__)

# fixture players get Steam-like 64-bit ids
STEAM_ID_BASE = 76561198000000000
GAME_ID_BASE = 1000

DEFAULT_WINDOW = ObservationWindow(date(2020, 4, 13), date(2020, 4, 17))

GENRES = ["Action", "Adventure", "Casual", "Indie", "RPG", "Simulation", "Strategy", "Sports", "Racing"]
TAGS = [
    "online co-op", "local multiplayer", "team-based", "competitive", "esports", "singleplayer",
    "massively multiplayer", "free to play", "crafting", "building", "survival", "open world",
    "third person", "first-person", "shooter", "puzzle", "story rich", "atmospheric", "sandbox",
    "pvp", "cute", "horror", "strategy", "simulation", "casual", "fps", "great soundtrack",
]
UBIQUITOUS_TAG = "multiplayer"


@dataclass(frozen=True)
class FixtureInfo:
    root: Path
    seeds: List[int]
    n_players: int
    games: List[int]
    window: ObservationWindow
    private: int


def _player(i: int) -> int:
    return STEAM_ID_BASE + i


def write_synthetic_fixture(root, n_players: int = 2000, n_games: int = 20, seed: int = 42,
                            window: Optional[ObservationWindow] = None, n_seeds: int = 10,
                            private_share: float = 0.05, min_nodes: int = 20) -> FixtureInfo:
    """
    Write a complete offline fixture under root:

        friends/<id>.json, playtime/<day>/<id>.json, seeds.txt, catalog.jsonl, config.json

    Friendships follow a clustered preferential-attachment graph. Each game
    spreads over friendship edges at its own rate, so game subgraphs differ
    in density and fragmentation.
    """
    root = Path(root)
    window = window or DEFAULT_WINDOW
    rng = np.random.default_rng(seed)

    g = nx.powerlaw_cluster_graph(n_players, 3, 0.3, seed=int(rng.integers(2 ** 31)))
    nodes = np.arange(n_players)
    edges = np.array(sorted(g.edges()), dtype=np.int64).reshape(-1, 2)

    hub = max(nodes.tolist(), key=lambda v: (g.degree(v), -v))
    candidates = sorted(g.neighbors(hub))
    rng.shuffle(candidates)
    seeds = sorted([hub] + candidates[:n_seeds - 1])

    non_seeds = np.setdiff1d(nodes, seeds)
    private = set(rng.choice(non_seeds, size=int(private_share * n_players), replace=False).tolist())

    for v in nodes.tolist():
        payload = {"private": True} if v in private else sorted(_player(u) for u in g.neighbors(v))
        write_text(root / "friends" / f"{_player(v)}.json", json.dumps(payload) + "\n")
    write_text(root / "seeds.txt", "# synthetic seed players\n" + "".join(f"{_player(s)}\n" for s in seeds))

    # ownership: random adopters, then one round of spread along friendships
    games = [GAME_ID_BASE + 10 * j for j in range(n_games)]
    base_rates = 0.35 / np.sqrt(1.0 + np.arange(n_games))
    spread_rates = np.linspace(0.05, 0.6, n_games)
    rng.shuffle(spread_rates)
    owns = np.zeros((n_players, n_games), dtype=bool)
    for j in range(n_games):
        adopters = rng.random(n_players) < base_rates[j]
        spread = np.zeros(n_players, dtype=bool)
        if edges.size:
            for a, b in ((0, 1), (1, 0)):
                hit = adopters[edges[:, a]] & (rng.random(len(edges)) < spread_rates[j])
                spread[edges[hit, b]] = True
        owns[:, j] = adopters | spread

    # cumulative playtime per day; a fifth of the players never play
    engaged = rng.random(n_players) >= 0.2
    totals = rng.integers(0, 5000, size=(n_players, n_games)) * owns
    for day in window.days():
        plays = owns & engaged[:, None] & (rng.random((n_players, n_games)) < 0.35)
        totals = totals + plays * rng.integers(15, 240, size=(n_players, n_games))
        folder = root / "playtime" / day.isoformat()
        for v in nodes.tolist():
            if v in private:
                continue
            owned = np.flatnonzero(owns[v]).tolist()
            payload = {"games": [{"appid": games[j], "playtime_forever": int(totals[v, j])} for j in owned]}
            write_text(folder / f"{_player(v)}.json", json.dumps(payload, sort_keys=True) + "\n")

    catalog_lines = []
    for j, game in enumerate(games):
        tags = rng.choice(TAGS, size=int(rng.integers(3, 12)), replace=False).tolist()
        genres = sorted(rng.choice(GENRES, size=int(rng.integers(1, 4)), replace=False).tolist())
        entry = {"game_id": game, "name": f"Synthetic Game {j:02d}", "genres": genres,
                 "tags": [UBIQUITOUS_TAG] + tags}
        catalog_lines.append(json.dumps(entry, sort_keys=True) + "\n")
    write_text(root / "catalog.jsonl", "".join(catalog_lines))

    write_json(root / "config.json", {
        "provider": {"mode": "fixture", "fixture_root": "."},
        "seeds_file": "seeds.txt",
        "catalog": "catalog.jsonl",
        "window_start": window.start.isoformat(),
        "window_end": window.end.isoformat(),
        "top_n": n_games,
        "min_nodes": min_nodes,
        "output_dir": "run",
        "seed": seed,
    })

    logger.info(f"Synthetic fixture written to {root}: {n_players} players ({len(private)} private), "
                f"{n_games} games, {len(window.days())} days")
    return FixtureInfo(root, [_player(s) for s in seeds], n_players, games, window, len(private))


# ----------------------------------------------------------------------
# Structural families
# ----------------------------------------------------------------------

FAMILIES = ("dense_random", "preferential_attachment", "disjoint_cliques")


def _canonical(g: nx.Graph) -> Graph:
    return build_graph(g.nodes(), ((min(u, v), max(u, v)) for u, v in g.edges()))


def family_graph(family: str, rng: np.random.Generator) -> Graph:
    s = int(rng.integers(2 ** 31))
    if family == "dense_random":
        return _canonical(nx.gnp_random_graph(int(rng.integers(30, 61)), 0.5, seed=s))
    if family == "preferential_attachment":
        return _canonical(nx.barabasi_albert_graph(int(rng.integers(30, 61)), 1, seed=s))
    if family == "disjoint_cliques":
        sizes = rng.integers(4, 7, size=int(rng.integers(5, 11)))
        return _canonical(nx.disjoint_union_all([nx.complete_graph(int(n)) for n in sizes]))
    raise ValueError(f"unknown graph family {family!r}")


def family_corpus(n_per_family: int = 20, seed: int = 0,
                  families: Tuple[str, ...] = FAMILIES) -> List[Tuple[int, Graph, int]]:
    """(graph_id, graph, family index) triples, families in blocks"""
    rng = np.random.default_rng(seed)
    corpus = []
    for f, family in enumerate(families):
        for _ in range(n_per_family):
            corpus.append((len(corpus) + 1, family_graph(family, rng), f))
    return corpus
