"""
Report bundle: corpus size distribution, per-cluster statistics, k-sweep and
tag-frequency series, membership lists and a readable summary.

Everything here is built from serialized artifacts; nothing is recomputed
from graphs or embeddings.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from tools.artifacts import write_json, write_text
from tools.characterization import AVERAGED_FIELDS, CLUSTER_COLUMNS

logger = logging.getLogger(__name__)

SIZE_COLUMNS = ["Min", "25%", "50%", "75%", "Max", "Mean", "Std"]
DESCRIBE_KEYS = ["min", "25%", "50%", "75%", "max", "mean", "std"]

TABLE1_CSV = "table1_sizes.csv"
TABLE1_TXT = "table1_sizes.txt"
TABLE2_CSV = "table2_clusters.csv"
FIG1_CSV = "fig1_sweep.csv"
FIG2_JSON = "fig2_tag_frequencies.json"
MEMBERSHIP_JSON = "membership.json"
MEMBERSHIP_MD = "membership.md"
SUMMARY_MD = "summary.md"

SUMMARY_TAGS = 5


def size_distribution(nodes: Sequence[int], edges: Sequence[int]) -> pd.DataFrame:
    """
    Min/quartiles/Max/Mean/Std of graph sizes, one row each for nodes and
    edges. Quartiles interpolate linearly between order statistics; Std uses
    n - 1 in the denominator.
    """
    rows = {}
    for name, values in (("nodes", nodes), ("edges", edges)):
        stats = pd.Series(list(values), dtype=float).describe()
        rows[name] = [stats[k] for k in DESCRIBE_KEYS]
    return pd.DataFrame.from_dict(rows, orient="index", columns=SIZE_COLUMNS)


def _format_number(value: float, always_decimals: bool) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    if not always_decimals and float(value).is_integer():
        return f"{int(value):,}"
    return f"{value:,.2f}"


def format_table1_row(values: Sequence[float]) -> str:
    """Min | 25% | 50% | 75% | Max | Mean | Std with thousands separators"""
    cells = [_format_number(v, always_decimals=i >= 5) for i, v in enumerate(values)]
    return " | ".join(cells)


def parse_table1_row(text: str) -> List[float]:
    return [float(cell.strip().replace(",", "")) for cell in text.split("|")]


def format_table1(table: pd.DataFrame) -> str:
    lines = ["Size | " + " | ".join(SIZE_COLUMNS)]
    for name, row in table.iterrows():
        lines.append(f"{name} | " + format_table1_row(row.tolist()))
    return "\n".join(lines) + "\n"


def _cluster_row(cluster: Mapping) -> Dict:
    row = {"cluster": cluster["cluster"], "size": cluster["size"], "%pl": 100.0 * cluster["powerlaw_share"]}
    row.update(cluster["avg_metrics"])
    return {k: row.get(k) for k in CLUSTER_COLUMNS}


def cluster_table(clusters: Sequence[Mapping]) -> pd.DataFrame:
    return pd.DataFrame([_cluster_row(c) for c in clusters], columns=CLUSTER_COLUMNS)


def membership(clusters: Sequence[Mapping]) -> Dict[str, List[str]]:
    return {str(c["cluster"]): list(c["members"]) for c in clusters}


def format_membership(clusters: Sequence[Mapping]) -> str:
    lines = ["# Cluster membership", ""]
    for c in clusters:
        lines.append(f"## Cluster {c['cluster']} ({c['size']} games)")
        lines.append("")
        lines.extend(f"- {name}" for name in c["members"])
        lines.append("")
    return "\n".join(lines)


def _fmt(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def format_summary(table: pd.DataFrame, top_games: Sequence[Mapping], sweep: pd.DataFrame,
                   clusters: Sequence[Mapping]) -> str:
    lines = ["# Game network report", ""]

    lines.append(f"{len(top_games)} game network(s) analysed.")
    if top_games:
        head = ", ".join(f"{g['game_id']} ({g['n_players']} players)" for g in top_games[:5])
        lines.append(f"Largest: {head}.")
    lines.extend(["", "## Network sizes", "", "```", format_table1(table).rstrip("\n"), "```", ""])

    if not sweep.empty:
        lines.extend(["## K sweep", "", "k | inertia | silhouette", "--- | --- | ---"])
        for row in sweep.itertuples(index=False):
            lines.append(f"{int(row.k)} | {row.inertia:.4f} | {row.silhouette:.4f}")
        best = sweep.sort_values(["silhouette", "k"], ascending=[False, True]).iloc[0]
        lines.extend(["", f"Highest mean silhouette at k={int(best.k)} ({best.silhouette:.4f}).", ""])

    lines.extend(["## Clusters", ""])
    for c in clusters:
        lines.append(f"### Cluster {c['cluster']}: {c['size']} game(s)")
        lines.append("")
        shares = sorted(c["tag_shares"].items(), key=lambda kv: (-kv[1], kv[0]))[:SUMMARY_TAGS]
        if shares:
            lines.append("Tags: " + ", ".join(f"{tag} ({share:.0%})" for tag, share in shares))
        if c.get("top_genre"):
            genre, share = c["top_genre"]
            lines.append(f"Top genre: {genre} ({share:.0%})")
        lines.append(f"Scale-free share: {c['powerlaw_share']:.0%}")
        lines.append("")
        lines.extend(f"- {field}: {_fmt(c['avg_metrics'].get(field))}" for field in AVERAGED_FIELDS)
        lines.append("")
        lines.append("Members: " + ", ".join(c["members"]))
        lines.append("")
    return "\n".join(lines)


def write_report(report_dir, sizes: Sequence[Tuple[int, int]], top_games: Sequence[Mapping],
                 sweep: pd.DataFrame, clusters: Sequence[Mapping], tag_frequencies: Mapping) -> List[Path]:
    report_dir = Path(report_dir)
    table = size_distribution([n for n, _ in sizes], [m for _, m in sizes])

    outputs = [
        write_text(report_dir / TABLE1_CSV, table.to_csv(index_label="size", float_format="%.9g", lineterminator="\n")),
        write_text(report_dir / TABLE1_TXT, format_table1(table)),
        write_text(report_dir / TABLE2_CSV,
                   cluster_table(clusters).to_csv(index=False, float_format="%.9g", lineterminator="\n")),
        write_text(report_dir / FIG1_CSV, sweep.to_csv(index=False, float_format="%.9g", lineterminator="\n")),
        write_json(report_dir / FIG2_JSON, tag_frequencies),
        write_json(report_dir / MEMBERSHIP_JSON, membership(clusters)),
        write_text(report_dir / MEMBERSHIP_MD, format_membership(clusters)),
        write_text(report_dir / SUMMARY_MD, format_summary(table, top_games, sweep, clusters)),
    ]
    logger.info(f"Report written to {report_dir} ({len(outputs)} files)")
    return outputs
