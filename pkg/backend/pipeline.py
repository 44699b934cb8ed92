from pathlib import Path
from typing import Callable, Dict, List, Optional
import logging

import pandas as pd

from config import PipelineConfig
from report import write_report
from tools.artifacts import Manifest, read_json, read_jsonl, write_json, write_jsonl, write_text
from tools.characterization import (
    build_cluster_profiles,
    catalog_tag_stats,
    cluster_profiles_frame,
    load_catalog,
    tfidf_select,
)
from tools.clustering import kmeans, read_assignment_csv, sweep, sweep_csv
from tools.embedding import read_embedding_csv, train, wl_document
from tools.errors import CoverageError, DataError, UsageError
from tools.graph_core import format_edge_list, graph_from_record, graph_to_record, read_edge_list
from tools.metrics import PROFILE_COLUMNS, StructuralProfile, profile_corpus
from tools.sampling import (
    ActivityLog,
    FriendProvider,
    ObservationWindow,
    SnowballSampler,
    active_players,
    game_subgraph,
    prune_inactive,
    rank_games,
    read_seeds,
)
from tools.steam_client import SnapshotArchive, load_activity, make_provider

logger = logging.getLogger(__name__)

STAGES = ["sample", "subgraphs", "metrics", "embed", "cluster", "characterize", "report"]

# stage artifacts, relative to the output directory
GRAPH = "graph.tsv"
ACTIVITY = "activity.csv"
SAMPLING = "sampling.json"
TOP_GAMES = "top_games.json"
SUBGRAPHS = "subgraphs.jsonl"
PROFILES = "profiles.jsonl"
PROFILES_CSV = "profiles.csv"
WL_DOCUMENTS = "wl_documents.jsonl"
EMBEDDING = "embedding.csv"
EMBEDDING_LOSS = "embedding_loss.csv"
SWEEP = "sweep.csv"
ASSIGNMENT = "assignment.csv"
CLUSTERS = "clusters.json"
TAG_SELECTIONS = "tag_selections.json"
CLUSTER_PROFILES = "cluster_profiles.json"
CLUSTER_PROFILES_CSV = "cluster_profiles.csv"
TAG_FREQUENCIES = "tag_frequencies.json"
GENRE_DISTRIBUTION = "genre_distribution.json"
# partial crawl state, only present after an aborted sample stage
FRONTIER = "frontier.json"


class Pipeline:
    """
    Stage-wise workflow over an output directory:
    1. sample        friendship graph and activity log
    2. subgraphs     top games and their induced player networks
    3. metrics       structural profile per game network
    4. embed         WL documents and document vectors
    5. cluster       k sweep and the final K-means assignment
    6. characterize  tags, genres and averaged metrics per cluster
    7. report        tables, figure data and summary from the artifacts above

    Each stage checks its inputs against the hashes recorded in the manifest
    by the stage that produced them, then records its own outputs.
    """

    def __init__(self, cfg: PipelineConfig, provider: Optional[FriendProvider] = None):
        self.cfg = cfg
        self.out_dir = Path(cfg.output_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = Manifest.load(self.out_dir)
        self.window = ObservationWindow(cfg.window_start, cfg.window_end)
        self._provider = provider
        self._steps: Dict[str, Callable[[], List[Path]]] = {
            "sample": self._sample,
            "subgraphs": self._subgraphs,
            "metrics": self._metrics,
            "embed": self._embed,
            "cluster": self._cluster,
            "characterize": self._characterize,
            "report": self._report,
        }
        logger.info(f"Pipeline initialized: output {self.out_dir}, config {cfg.config_hash()[:12]}")

    @property
    def provider(self) -> FriendProvider:
        if self._provider is None:
            if self.cfg.provider is None:
                raise UsageError("this stage needs a provider section in the configuration")
            self._provider = make_provider(self.cfg.provider)
        return self._provider

    def path(self, artifact: str) -> Path:
        return self.out_dir / artifact

    def run_stage(self, stage: str) -> List[Path]:
        if stage not in self._steps:
            raise UsageError(f"unknown stage '{stage}'; expected one of {', '.join(STAGES)}")
        logger.info(f"Running stage '{stage}'")
        outputs = self._steps[stage]()
        logger.info(f"Stage '{stage}' wrote {len(outputs)} artifact(s)")
        return outputs

    def run_all(self) -> Dict[str, List[Path]]:
        return {stage: self.run_stage(stage) for stage in STAGES}

    def _record(self, stage: str, inputs: List[Path], outputs: List[Path]):
        self.manifest.record_stage(stage, self.cfg.config_hash(), inputs, outputs)

    # ------------------------------------------------------------------
    # Step 1: sample
    # ------------------------------------------------------------------

    def _sample(self) -> List[Path]:
        cfg = self.cfg
        inputs: List[Path] = []
        trace = None

        if cfg.edge_list:
            g = read_edge_list(cfg.edge_list)
            inputs.append(Path(cfg.edge_list))
        elif cfg.seeds_file:
            seeds = read_seeds(cfg.seeds_file)
            inputs.append(Path(cfg.seeds_file))
            frontier = Path(cfg.frontier_file) if cfg.frontier_file else self.path(FRONTIER)
            sampler = SnowballSampler(self.provider, self._max_in_flight(), frontier)
            g = sampler.build(seeds)
            if not cfg.frontier_file and frontier.exists():
                frontier.unlink()
            trace = sampler.trace.to_dict()
        else:
            raise UsageError("sample needs either edge_list or seeds_file")

        log = self._load_activity(g, inputs)
        pruned = prune_inactive(g, active_players(log, self.window))
        if pruned.number_of_nodes() == 0:
            raise DataError("no active player keeps a friendship edge inside the observation window")

        outputs = [
            write_text(self.path(GRAPH), format_edge_list(pruned)),
            write_text(self.path(ACTIVITY), log.to_csv()),
            write_json(self.path(SAMPLING), {
                "snowball": trace,
                "network": {"nodes": g.number_of_nodes(), "edges": g.number_of_edges()},
                "active_network": {"nodes": pruned.number_of_nodes(), "edges": pruned.number_of_edges()},
                "activity": log.summary(self.window),
                "window": {"start": self.window.start.isoformat(), "end": self.window.end.isoformat()},
            }),
        ]
        self._record("sample", inputs, outputs)
        return outputs

    def _max_in_flight(self) -> int:
        return self.cfg.provider.max_in_flight if self.cfg.provider else 8

    def _load_activity(self, g, inputs: List[Path]) -> ActivityLog:
        cfg = self.cfg
        if cfg.activity_csv:
            inputs.append(Path(cfg.activity_csv))
            return ActivityLog.from_csv(cfg.activity_csv)

        source = self._provider if isinstance(self._provider, SnapshotArchive) else None
        if source is None and cfg.provider is not None:
            if cfg.provider.mode == "fixture":
                source = self.provider
            elif cfg.provider.fixture_root is not None:
                # live crawls archive their daily snapshots in the fixture layout
                source = SnapshotArchive(cfg.provider.fixture_root)
        if source is None:
            raise UsageError("no activity source: set activity_csv or a provider with snapshots")
        logger.info(f"Deriving activity from daily snapshots over {len(self.window.days())} day(s)")
        return load_activity(source, g.nodes(), self.window)

    # ------------------------------------------------------------------
    # Step 2: subgraphs
    # ------------------------------------------------------------------

    def _subgraphs(self) -> List[Path]:
        graph_path, activity_path = self.manifest.verify_inputs(
            "subgraphs", {GRAPH: "sample", ACTIVITY: "sample"})
        g = read_edge_list(graph_path)
        log = ActivityLog.from_csv(activity_path)

        ranks = rank_games(g, log, self.window, self.cfg.top_n, self.cfg.min_nodes)
        if not ranks:
            raise DataError(f"no game reaches {self.cfg.min_nodes} active players in the sampled network")
        logger.info(f"Selected {len(ranks)} game(s), sizes {ranks[-1].n_players}..{ranks[0].n_players}")

        records = [graph_to_record(r.game_id, game_subgraph(g, log, self.window, r.game_id)) for r in ranks]
        outputs = [
            write_json(self.path(TOP_GAMES), [
                {"rank": i, "game_id": r.game_id, "n_players": r.n_players, "total_minutes": r.total_minutes}
                for i, r in enumerate(ranks, 1)
            ]),
            write_jsonl(self.path(SUBGRAPHS), records),
        ]
        self._record("subgraphs", [graph_path, activity_path], outputs)
        return outputs

    def _load_subgraphs(self, path: Path):
        return [graph_from_record(record) for record in read_jsonl(path)]

    # ------------------------------------------------------------------
    # Step 3: metrics
    # ------------------------------------------------------------------

    def _metrics(self) -> List[Path]:
        (subgraphs_path,) = self.manifest.verify_inputs("metrics", {SUBGRAPHS: "subgraphs"})
        graphs = self._load_subgraphs(subgraphs_path)
        profiles = profile_corpus(graphs, self.cfg.metrics, jobs=self.cfg.jobs)

        frame = pd.DataFrame([p.to_row(game_id) for game_id, p in profiles], columns=PROFILE_COLUMNS)
        outputs = [
            write_jsonl(self.path(PROFILES), [{"game_id": game_id, "profile": p.to_dict()} for game_id, p in profiles]),
            write_text(self.path(PROFILES_CSV), frame.to_csv(index=False, float_format="%.9g", lineterminator="\n")),
        ]
        self._record("metrics", [subgraphs_path], outputs)
        return outputs

    # ------------------------------------------------------------------
    # Step 4: embed
    # ------------------------------------------------------------------

    def _embed(self) -> List[Path]:
        (subgraphs_path,) = self.manifest.verify_inputs("embed", {SUBGRAPHS: "subgraphs"})
        h = self.cfg.embedding.wl_iterations
        corpus = [wl_document(g, h, graph_id=game_id) for game_id, g in self._load_subgraphs(subgraphs_path)]
        model = train(corpus, self.cfg.embedding)

        outputs = [
            write_jsonl(self.path(WL_DOCUMENTS), [doc.to_dict() for doc in corpus]),
            write_text(self.path(EMBEDDING), model.to_csv()),
            write_text(self.path(EMBEDDING_LOSS), model.loss_csv()),
        ]
        self._record("embed", [subgraphs_path], outputs)
        return outputs

    # ------------------------------------------------------------------
    # Step 5: cluster
    # ------------------------------------------------------------------

    def _cluster(self) -> List[Path]:
        (embedding_path,) = self.manifest.verify_inputs("cluster", {EMBEDDING: "embed"})
        graph_ids, points = read_embedding_csv(embedding_path)
        cfg = self.cfg.clustering

        k_max = min(cfg.k_max, len(graph_ids) - 1)
        if k_max < cfg.k_max:
            logger.warning(f"Only {len(graph_ids)} graphs; k sweep capped at k={k_max}")
        sweep_cfg = cfg.model_copy(update={"k_max": k_max, "k_min": min(cfg.k_min, k_max)})
        rows = sweep(points, sweep_cfg) if k_max >= 2 else []
        assignment = kmeans(points, cfg, graph_ids=graph_ids)

        outputs = [
            write_text(self.path(SWEEP), sweep_csv(rows)),
            write_text(self.path(ASSIGNMENT), assignment.to_csv()),
            write_json(self.path(CLUSTERS), {
                "k": assignment.k,
                "inertia": assignment.inertia,
                "sizes": {str(c): len(m) for c, m in assignment.members().items()},
                "monotone_violations": [r.k for r in rows if r.monotone_violation],
            }),
        ]
        self._record("cluster", [embedding_path], outputs)
        return outputs

    # ------------------------------------------------------------------
    # Step 6: characterize
    # ------------------------------------------------------------------

    def _characterize(self) -> List[Path]:
        if not self.cfg.catalog:
            raise UsageError("characterize needs a catalog file")
        assignment_path, profiles_path = self.manifest.verify_inputs(
            "characterize", {ASSIGNMENT: "cluster", PROFILES: "metrics"})
        assignment = read_assignment_csv(assignment_path)
        profiles = {int(row["game_id"]): StructuralProfile.from_dict(row["profile"])
                    for row in read_jsonl(profiles_path)}

        full_catalog = load_catalog(self.cfg.catalog)
        by_id = {g.game_id: g for g in full_catalog}
        missing = sorted(g for g in assignment if g not in by_id)
        if missing:
            raise CoverageError("catalog has no entry for clustered game(s)", missing)
        catalog = [by_id[g] for g in sorted(assignment)]

        selections = tfidf_select(catalog, self.cfg.characterization.top_k)
        clusters = build_cluster_profiles(assignment, profiles, catalog, selections)

        outputs = [
            write_json(self.path(TAG_SELECTIONS), {
                "catalog_tags": catalog_tag_stats(catalog),
                "games": {str(g): [{"tag": s.tag, "score": s.score} for s in sel] for g, sel in selections.items()},
            }),
            write_json(self.path(CLUSTER_PROFILES), [c.to_dict() for c in clusters]),
            write_text(self.path(CLUSTER_PROFILES_CSV),
                       cluster_profiles_frame(clusters).to_csv(index=False, float_format="%.9g", lineterminator="\n")),
            write_json(self.path(TAG_FREQUENCIES), {str(c.cluster): c.tag_frequencies for c in clusters}),
            write_json(self.path(GENRE_DISTRIBUTION), {str(c.cluster): c.genre_distribution for c in clusters}),
        ]
        self._record("characterize", [assignment_path, profiles_path, Path(self.cfg.catalog)], outputs)
        return outputs

    # ------------------------------------------------------------------
    # Step 7: report
    # ------------------------------------------------------------------

    def _report(self) -> List[Path]:
        inputs = self.manifest.verify_inputs("report", {
            TOP_GAMES: "subgraphs",
            SUBGRAPHS: "subgraphs",
            SWEEP: "cluster",
            CLUSTER_PROFILES: "characterize",
            TAG_FREQUENCIES: "characterize",
        })
        top_games_path, subgraphs_path, sweep_path, clusters_path, tags_path = inputs
        sizes = [(len(r["nodes"]), len(r["edges"])) for r in read_jsonl(subgraphs_path)]
        outputs = write_report(
            self.out_dir / "report",
            sizes=sizes,
            top_games=read_json(top_games_path),
            sweep=pd.read_csv(sweep_path),
            clusters=read_json(clusters_path),
            tag_frequencies=read_json(tags_path),
        )
        self._record("report", inputs, outputs)
        return outputs


def run_stage(stage: str, cfg: PipelineConfig, provider: Optional[FriendProvider] = None) -> List[Path]:
    if stage == "pipeline":
        return [p for paths in Pipeline(cfg, provider).run_all().values() for p in paths]
    return Pipeline(cfg, provider).run_stage(stage)
