"""
Cluster characterization: TF-IDF tag selection, tag frequencies, genre
distributions and per-cluster averages of the structural features.
"""

import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from tools.artifacts import read_jsonl
from tools.errors import CoverageError, DataError
from tools.metrics import StructuralProfile
from tools.powerlaw_fit import POWER_LAW

logger = logging.getLogger(__name__)

AVERAGED_FIELDS = [
    "n_nodes", "n_edges", "density", "mean_degree", "std_degree", "avg_clustering", "n_components",
    "lcc_fraction", "modularity", "assortativity", "degree_centralization", "betweenness_centralization",
]

# cluster statistics table: cluster, size, then the columns of the per-game table with %pl in place
CLUSTER_COLUMNS = [
    "cluster", "size", "n_nodes", "density", "mean_degree", "std_degree", "avg_clustering", "n_components",
    "lcc_fraction", "modularity", "assortativity", "%pl", "degree_centralization", "betweenness_centralization",
]


def normalize_tag(text: str) -> str:
    return " ".join(str(text).split()).lower()


@dataclass(frozen=True)
class GameMeta:
    game_id: int
    name: str
    genres: Tuple[str, ...] = ()
    tags: Tuple[str, ...] = ()

    @classmethod
    def create(cls, game_id: int, name: str, genres: Iterable[str] = (), tags: Iterable[str] = ()) -> "GameMeta":
        seen = set()
        unique_tags = []
        for tag in tags:
            norm = normalize_tag(tag)
            if norm and norm not in seen:
                seen.add(norm)
                unique_tags.append(norm)
        return cls(int(game_id), str(name), tuple(genres), tuple(unique_tags))


def load_catalog(path) -> List[GameMeta]:
    """JSON-lines catalog, one {game_id, name, genres, tags} object per game"""
    catalog = []
    seen = set()
    for i, row in enumerate(read_jsonl(path), 1):
        try:
            meta = GameMeta.create(row["game_id"], row.get("name", str(row["game_id"])),
                                   row.get("genres") or [], row.get("tags") or [])
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"{path}: catalog entry {i} is malformed ({e})")
        if meta.game_id in seen:
            raise DataError(f"{path}: game {meta.game_id} listed twice")
        seen.add(meta.game_id)
        catalog.append(meta)
    logger.info(f"Loaded catalog with {len(catalog)} games from {path}")
    return catalog


def catalog_tag_stats(catalog: Sequence[GameMeta]) -> Dict[str, float]:
    counts = pd.Series([len(g.tags) for g in catalog], dtype=float)
    return {"games": int(counts.size), "mean": float(counts.mean()), "std": float(counts.std())}


@dataclass(frozen=True)
class TagScore:
    tag: str
    tf: float
    idf: float
    score: float


def tfidf_select(catalog: Sequence[GameMeta], top_k: int = 10) -> Dict[int, List[TagScore]]:
    """
    Per-game tags ranked by tf * idf, with tf = 1/|tags| and idf = ln(N/df);
    ties broken by tag, truncated to top_k.
    """
    if not catalog:
        raise DataError("TF-IDF needs a non-empty catalog")
    n_docs = len(catalog)
    df = Counter(tag for game in catalog for tag in set(game.tags))

    selections: Dict[int, List[TagScore]] = {}
    for game in sorted(catalog, key=lambda g: g.game_id):
        if not game.tags:
            selections[game.game_id] = []
            continue
        tf = 1.0 / len(game.tags)
        scores = [TagScore(tag, tf, math.log(n_docs / df[tag]), tf * math.log(n_docs / df[tag])) for tag in game.tags]
        scores.sort(key=lambda s: (-s.score, s.tag))
        selections[game.game_id] = scores[:top_k]
    return selections


def _selected_tags(selection) -> List[str]:
    return [s.tag if isinstance(s, TagScore) else str(s) for s in selection]


def cluster_tag_frequencies(assignment: Mapping[int, int], selections: Mapping[int, Sequence],
                            n_clusters: Optional[int] = None) -> Dict[int, Dict[str, int]]:
    missing = [g for g in assignment if g not in selections]
    if missing:
        raise CoverageError("no tag selection for assigned game(s)", missing)

    clusters = set(assignment.values()) | set(range(n_clusters or 0))
    counts: Dict[int, Counter] = {c: Counter() for c in clusters}
    for game, cluster in assignment.items():
        counts[cluster].update(_selected_tags(selections[game]))
    return {c: dict(sorted(counts[c].items(), key=lambda kv: (-kv[1], kv[0]))) for c in sorted(counts)}


def genre_distribution(assignment: Mapping[int, int], catalog: Sequence[GameMeta],
                       n_clusters: Optional[int] = None) -> Dict[int, Dict[str, float]]:
    """Genre occurrences over members divided by all genre occurrences in the cluster"""
    by_id = {g.game_id: g for g in catalog}
    clusters = set(assignment.values()) | set(range(n_clusters or 0))
    counts: Dict[int, Counter] = {c: Counter() for c in clusters}
    for game, cluster in assignment.items():
        if game in by_id:
            counts[cluster].update(by_id[game].genres)

    result = {}
    for c in sorted(counts):
        total = sum(counts[c].values())
        result[c] = {genre: n / total for genre, n in sorted(counts[c].items(), key=lambda kv: (-kv[1], kv[0]))}
    return result


def _mean(values: List[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return math.fsum(present) / len(present)


@dataclass
class ClusterProfile:
    cluster: int
    size: int
    avg_metrics: Dict[str, Optional[float]]
    powerlaw_share: float
    tag_frequencies: Dict[str, int]
    genre_distribution: Dict[str, float]
    members: List[str]
    member_ids: List[int] = field(default_factory=list)

    @property
    def tag_shares(self) -> Dict[str, float]:
        return {tag: n / self.size for tag, n in self.tag_frequencies.items()}

    @property
    def top_genre(self) -> Optional[Tuple[str, float]]:
        if not self.genre_distribution:
            return None
        return min(self.genre_distribution.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["tag_shares"] = self.tag_shares
        data["top_genre"] = list(self.top_genre) if self.top_genre else None
        data["tag_frequencies"] = dict(self.tag_frequencies)
        return data

    def to_row(self) -> Dict:
        row = {"cluster": self.cluster, "size": self.size, "%pl": 100.0 * self.powerlaw_share}
        row.update(self.avg_metrics)
        return {k: row[k] for k in CLUSTER_COLUMNS}


def build_cluster_profiles(assignment: Mapping[int, int], profiles: Mapping[int, StructuralProfile],
                           catalog: Sequence[GameMeta], selections: Mapping[int, Sequence]) -> List[ClusterProfile]:
    by_id = {g.game_id: g for g in catalog}
    universe = set(assignment) | set(profiles) | set(by_id)
    missing = sorted(g for g in universe if g not in assignment or g not in profiles or g not in by_id)
    if missing:
        raise CoverageError("assignment, profiles and catalog cover different games", missing)

    tag_counts = cluster_tag_frequencies(assignment, selections)
    genres = genre_distribution(assignment, catalog)

    result = []
    for cluster in sorted(set(assignment.values())):
        member_ids = sorted(g for g, c in assignment.items() if c == cluster)
        members = [profiles[g] for g in member_ids]
        avg = {f: _mean([getattr(p, f) for p in members]) for f in AVERAGED_FIELDS}
        share = sum(1 for p in members if p.powerlaw.verdict == POWER_LAW) / len(members)
        result.append(ClusterProfile(
            cluster=cluster,
            size=len(member_ids),
            avg_metrics=avg,
            powerlaw_share=share,
            tag_frequencies=tag_counts[cluster],
            genre_distribution=genres[cluster],
            members=sorted((by_id[g].name for g in member_ids), key=lambda s: (s.lower(), s)),
            member_ids=member_ids,
        ))
        logger.info(f"Cluster {cluster}: {len(member_ids)} game(s), {share:.0%} scale-free")
    return result


def cluster_profiles_frame(profiles: Sequence[ClusterProfile]) -> pd.DataFrame:
    return pd.DataFrame([p.to_row() for p in profiles], columns=CLUSTER_COLUMNS)
