"""
K-means over graph embeddings, with the distortion sweep and silhouette
analysis used to choose k. The tool never picks k itself.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.cluster import KMeans
from sklearn.metrics import adjusted_rand_score, silhouette_samples

from config import ClusteringConfig
from tools.errors import ClusteringError, DataError

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["k", "inertia", "silhouette"]


@dataclass
class ClusterAssignment:
    graph_ids: List[int]
    labels: np.ndarray
    centers: np.ndarray
    inertia: float

    @property
    def k(self) -> int:
        return int(self.centers.shape[0])

    def label_map(self) -> Dict[int, int]:
        return {g: int(c) for g, c in zip(self.graph_ids, self.labels)}

    def members(self) -> Dict[int, List[int]]:
        groups: Dict[int, List[int]] = {c: [] for c in range(self.k)}
        for g, c in zip(self.graph_ids, self.labels):
            groups[int(c)].append(g)
        return groups

    def to_csv(self) -> str:
        df = pd.DataFrame({"graph_id": self.graph_ids, "cluster": self.labels.astype(int)})
        return df.to_csv(index=False, lineterminator="\n")


def read_assignment_csv(path) -> Dict[int, int]:
    df = pd.read_csv(path)
    if list(df.columns) != ["graph_id", "cluster"]:
        raise DataError(f"{path}: expected columns graph_id,cluster")
    return {int(g): int(c) for g, c in zip(df["graph_id"], df["cluster"])}


def inertia(points: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    return float(np.sum((points - centers[labels]) ** 2))


def _canonical_labels(labels: np.ndarray, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # number clusters by first appearance in input order
    order: List[int] = []
    for c in labels.tolist():
        if c not in order:
            order.append(c)
    order.extend(c for c in range(centers.shape[0]) if c not in order)
    remap = np.empty(centers.shape[0], dtype=np.int64)
    remap[order] = np.arange(len(order))
    return remap[labels], centers[order]


def kmeans(points: np.ndarray, cfg: Optional[ClusteringConfig] = None, k: Optional[int] = None,
           seed: Optional[int] = None, graph_ids: Optional[Sequence[int]] = None) -> ClusterAssignment:
    """
    Best of n_init Lloyd runs seeded with k-means++.

    Empty clusters are re-seeded from the points farthest from their centers.
    Raises ClusteringError when there are fewer than k distinct points.
    """
    cfg = cfg or ClusteringConfig()
    k = cfg.k if k is None else k
    seed = cfg.seed if seed is None else seed
    points = np.asarray(points, dtype=float)
    graph_ids = list(graph_ids) if graph_ids is not None else list(range(points.shape[0]))

    if k < 2:
        raise ClusteringError(f"k must be at least 2, got {k}")
    distinct = np.unique(points, axis=0).shape[0] if points.size else 0
    if distinct < k:
        raise ClusteringError(f"k={k} needs at least {k} distinct points, got {distinct}")

    model = KMeans(n_clusters=k, init="k-means++", n_init=cfg.n_init, max_iter=cfg.max_iter,
                   tol=cfg.tol, random_state=seed, algorithm="lloyd")
    model.fit(points)
    labels, centers = _canonical_labels(model.labels_.astype(np.int64), model.cluster_centers_)
    result = ClusterAssignment(graph_ids, labels, centers, inertia(points, labels, centers))
    logger.info(f"K-means k={k}: inertia {result.inertia:.6g} after {model.n_iter_} iterations")
    return result


def silhouette(points: np.ndarray, labels: Sequence[int]) -> Tuple[float, np.ndarray]:
    """Mean and per-point Euclidean silhouette; points alone in their cluster score 0"""
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    n_labels = np.unique(labels).size
    if n_labels < 2:
        raise ClusteringError(f"silhouette needs at least 2 clusters, got {n_labels}")
    if n_labels == labels.size:
        scores = np.zeros(labels.size)
    else:
        scores = silhouette_samples(points, labels, metric="euclidean")
    return float(scores.mean()), scores


@dataclass(frozen=True)
class SweepRow:
    k: int
    inertia: float
    silhouette: float
    monotone_violation: bool = False

    def to_dict(self) -> Dict:
        return asdict(self)


def sweep_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def sweep(points: np.ndarray, cfg: Optional[ClusteringConfig] = None) -> List[SweepRow]:
    cfg = cfg or ClusteringConfig()
    points = np.asarray(points, dtype=float)
    if cfg.k_max > points.shape[0] - 1:
        raise ClusteringError(f"k_max={cfg.k_max} needs at least {cfg.k_max + 1} samples, got {points.shape[0]}")

    rows: List[SweepRow] = []
    for k in range(cfg.k_min, cfg.k_max + 1):
        result = kmeans(points, cfg, k=k, seed=sweep_seed(cfg.seed, k))
        mean_s, _ = silhouette(points, result.labels)
        violation = bool(rows) and result.inertia > rows[-1].inertia
        if violation:
            logger.warning(f"Inertia rose from k={k - 1} ({rows[-1].inertia:.6g}) to k={k} ({result.inertia:.6g})")
        rows.append(SweepRow(k, result.inertia, mean_s, violation))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    df = pd.DataFrame([(r.k, r.inertia, r.silhouette) for r in rows], columns=SWEEP_COLUMNS)
    return df.to_csv(index=False, float_format="%.9g", lineterminator="\n")


def adjusted_rand(labels_a: Sequence[int], labels_b: Sequence[int]) -> float:
    return float(adjusted_rand_score(labels_a, labels_b))
