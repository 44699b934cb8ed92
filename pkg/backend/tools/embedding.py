"""
Whole-graph embedding.

Each graph becomes a document of Weisfeiler-Lehman subtree tokens, and a
distributed-bag-of-words document model with negative sampling learns one
vector per document.

Determinism: every document draws from its own generator keyed on
(seed, content hash), and output-layer updates are accumulated against a
copy frozen at the start of the epoch and applied once at its end. Identical
documents therefore get identical vectors, and a document's vector does not
depend on where it sits in the corpus.
"""

import hashlib
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from config import EmbeddingConfig
from tools.errors import DataError, EmptyVocabularyError
from tools.graph_core import Graph

logger = logging.getLogger(__name__)

NOISE_EXPONENT = 0.75


# ----------------------------------------------------------------------
# WL documents
# ----------------------------------------------------------------------

def wl_hash(label: str, neighbor_labels: Sequence[str]) -> str:
    """64-bit BLAKE2b of the node label and its sorted neighbor labels, as 16 hex chars"""
    payload = label + "|" + ",".join(sorted(neighbor_labels))
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=8).hexdigest()


@dataclass(frozen=True)
class WLDocument:
    graph_id: int
    tokens: Tuple[str, ...]

    @property
    def content_hash(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()

    def to_dict(self) -> Dict:
        return {"graph_id": self.graph_id, "tokens": list(self.tokens)}

    @classmethod
    def from_dict(cls, data: Dict) -> "WLDocument":
        return cls(int(data["graph_id"]), tuple(sorted(data["tokens"])))


def wl_document(g: Graph, h: int, graph_id: int = 0) -> WLDocument:
    """Tokens "<i>:<label>" for every node and iteration 0..h; iteration 0 labels are degrees"""
    labels = {v: str(d) for v, d in g.degree()}
    tokens = [f"0:{label}" for label in labels.values()]
    for i in range(1, h + 1):
        labels = {v: wl_hash(labels[v], [labels[u] for u in g.neighbors(v)]) for v in g.nodes()}
        tokens.extend(f"{i}:{label}" for label in labels.values())
    return WLDocument(graph_id, tuple(sorted(tokens)))


# ----------------------------------------------------------------------
# Training
# ----------------------------------------------------------------------

def negative_sampling_loss(doc_vec: np.ndarray, out_rows: np.ndarray,
                           labels: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Logistic loss of one (document, token) pair and its gradients.

    Args:
        doc_vec: document vector, shape (d,)
        out_rows: output vectors of the target and the negatives, shape (k+1, d)
        labels: 1 for the target, 0 for negatives, shape (k+1,)

    Returns:
        (loss, d loss / d doc_vec, d loss / d out_rows)
    """
    scores = out_rows @ doc_vec
    # -log sigmoid(s) for positives, -log sigmoid(-s) for negatives
    loss = float(np.sum(np.where(labels > 0, np.logaddexp(0.0, -scores), np.logaddexp(0.0, scores))))
    err = expit(scores) - labels
    return loss, err @ out_rows, np.outer(err, doc_vec)


def build_vocabulary(corpus: Sequence[WLDocument], min_count: int) -> Tuple[Dict[str, int], np.ndarray]:
    counts = Counter(t for doc in corpus for t in doc.tokens)
    kept = sorted(t for t, c in counts.items() if c >= min_count)
    if not kept:
        raise EmptyVocabularyError(f"no token occurs at least {min_count} time(s) in the corpus")
    return {t: i for i, t in enumerate(kept)}, np.array([counts[t] for t in kept], dtype=float)


def _doc_rng(seed: int, content_hash: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, int(content_hash, 16)]))


@dataclass
class EmbeddingModel:
    graph_ids: List[int]
    doc_vectors: np.ndarray
    vocabulary: Dict[str, int]
    loss_history: List[float] = field(default_factory=list)

    def vector(self, graph_id: int) -> np.ndarray:
        return self.doc_vectors[self.graph_ids.index(graph_id)]

    def to_frame(self) -> pd.DataFrame:
        columns = [f"v{i}" for i in range(self.doc_vectors.shape[1])]
        df = pd.DataFrame(self.doc_vectors, columns=columns)
        df.insert(0, "graph_id", self.graph_ids)
        return df

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, float_format="%.9g", lineterminator="\n")

    def loss_csv(self) -> str:
        df = pd.DataFrame({"epoch": range(1, len(self.loss_history) + 1), "loss": self.loss_history})
        return df.to_csv(index=False, float_format="%.9g", lineterminator="\n")


def read_embedding_csv(path) -> Tuple[List[int], np.ndarray]:
    df = pd.read_csv(path)
    if df.columns[0] != "graph_id" or df.shape[1] < 2:
        raise DataError(f"{path}: expected columns graph_id,v0,...")
    return df["graph_id"].astype(int).tolist(), df.drop(columns="graph_id").to_numpy(dtype=float)


def train(corpus: Sequence[WLDocument], cfg: Optional[EmbeddingConfig] = None) -> EmbeddingModel:
    cfg = cfg or EmbeddingConfig()
    if not corpus:
        raise DataError("cannot train an embedding on an empty corpus")

    vocabulary, counts = build_vocabulary(corpus, cfg.min_token_count)
    n_vocab, d, k = len(vocabulary), cfg.d, cfg.negative_samples
    noise = np.cumsum(counts ** NOISE_EXPONENT)
    noise /= noise[-1]

    hashes = [doc.content_hash for doc in corpus]
    rngs = [_doc_rng(cfg.seed, h) for h in hashes]
    doc_vectors = np.vstack([(rng.random(d) - 0.5) / d for rng in rngs])
    token_ids = [np.array(sorted(vocabulary[t] for t in doc.tokens if t in vocabulary), dtype=np.int64)
                 for doc in corpus]
    out = np.zeros((n_vocab, d))
    labels = np.zeros(k + 1)
    labels[0] = 1.0

    order = sorted(range(len(corpus)), key=lambda i: (hashes[i], i))
    logger.info(f"Training {d}-d embedding: {len(corpus)} documents, vocabulary {n_vocab}, {cfg.epochs} epochs")

    loss_history = []
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) * epoch / cfg.epochs
        frozen = out.copy()
        delta = np.zeros_like(out)
        total, pairs = 0.0, 0

        for i in order:
            rng = rngs[i]
            targets = token_ids[i].copy()
            if targets.size == 0:
                continue
            rng.shuffle(targets)

            negatives = np.searchsorted(noise, rng.random((targets.size, k)), side="right")
            if n_vocab > 1:
                clash = negatives == targets[:, None]
                while clash.any():
                    negatives[clash] = np.searchsorted(noise, rng.random(int(clash.sum())), side="right")
                    clash = negatives == targets[:, None]
            np.minimum(negatives, n_vocab - 1, out=negatives)

            vec = doc_vectors[i]
            for target, negs in zip(targets, negatives):
                rows = np.concatenate(([target], negs))
                loss, grad_doc, grad_out = negative_sampling_loss(vec, frozen[rows], labels)
                vec -= lr * grad_doc
                np.add.at(delta, rows, -lr * grad_out)
                total += loss
                pairs += 1

        out += delta
        loss_history.append(total / pairs if pairs else 0.0)
        logger.info(f"Epoch {epoch + 1}/{cfg.epochs}: lr={lr:.5f}, loss={loss_history[-1]:.6f}")

    if not np.all(np.isfinite(doc_vectors)):
        raise DataError("embedding training diverged (non-finite vectors)")
    return EmbeddingModel([doc.graph_id for doc in corpus], doc_vectors, vocabulary, loss_history)


def training_loss(corpus: Sequence[WLDocument], cfg: EmbeddingConfig, epoch: int) -> float:
    """Mean logistic loss of a 1-based epoch"""
    history = train(corpus, cfg).loss_history
    if not 1 <= epoch <= len(history):
        raise ValueError(f"epoch {epoch} outside 1..{len(history)}")
    return history[epoch - 1]


def cosine_similarity_matrix(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    unit = np.divide(matrix, norms, out=np.zeros_like(matrix, dtype=float), where=norms > 0)
    return unit @ unit.T
