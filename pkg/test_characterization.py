"""
Tests for TF-IDF tag selection and cluster characterization
Run with: pytest test_characterization.py
"""

import sys
import os
import json
import math

import pytest

# Add backend to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'backend'))

from tools.characterization import (
    CLUSTER_COLUMNS,
    GameMeta,
    build_cluster_profiles,
    catalog_tag_stats,
    cluster_profiles_frame,
    cluster_tag_frequencies,
    genre_distribution,
    load_catalog,
    normalize_tag,
    tfidf_select,
)
from tools.errors import CoverageError, DataError
from tools.metrics import StructuralProfile
from tools.powerlaw_fit import INCONCLUSIVE, NOT_POWER_LAW, POWER_LAW, PowerLawFit


def three_games():
    return [
        GameMeta.create(1, "Alpha", ["Action"], ["rare", "common"]),
        GameMeta.create(2, "Beta", ["Action", "Indie"], ["common", "shared"]),
        GameMeta.create(3, "Gamma", ["Strategy"], ["common", "shared", "solo"]),
    ]


def make_profile(density, assortativity, verdict):
    return StructuralProfile(
        n_nodes=10, n_edges=12, density=density, mean_degree=2.4, std_degree=1.0,
        assortativity=assortativity, degree_centralization=0.2, betweenness_centralization=0.3,
        avg_clustering=0.1, n_components=1, lcc_fraction=1.0, modularity=0.4,
        powerlaw=PowerLawFit(2.5, 1, 0.05, 0.5 if verdict != INCONCLUSIVE else None, verdict, 30),
    )


def test_normalize_tag():
    assert normalize_tag("  Online   Co-op ") == "online co-op"
    assert normalize_tag("FPS") == "fps"


def test_tags_deduplicated_after_normalization():
    game = GameMeta.create(1, "Dup", [], ["FPS", "fps", " Fps ", "Shooter"])
    assert game.tags == ("fps", "shooter")


def test_tfidf_hand_computed():
    selections = tfidf_select(three_games(), top_k=10)
    alpha = {s.tag: s.score for s in selections[1]}
    assert abs(alpha["rare"] - 0.5 * math.log(3)) < 1e-12
    assert alpha["common"] == 0.0
    gamma = {s.tag: s.score for s in selections[3]}
    assert abs(gamma["solo"] - math.log(3) / 3) < 1e-12
    assert abs(gamma["shared"] - math.log(1.5) / 3) < 1e-12


def test_tfidf_ordering_and_truncation():
    selections = tfidf_select(three_games(), top_k=2)
    assert [s.tag for s in selections[3]] == ["solo", "shared"]
    assert all(len(sel) <= 2 for sel in selections.values())
    ties = tfidf_select([GameMeta.create(1, "A", [], ["b", "a"]), GameMeta.create(2, "B", [], ["c"])])
    assert [s.tag for s in ties[1]] == ["a", "b"]


def test_tfidf_game_without_tags():
    selections = tfidf_select([GameMeta.create(1, "A", [], []), GameMeta.create(2, "B", [], ["x"])])
    assert selections[1] == []


def test_tfidf_empty_catalog():
    with pytest.raises(DataError):
        tfidf_select([])


def test_load_catalog(tmp_path):
    path = tmp_path / "catalog.jsonl"
    rows = [{"game_id": 10, "name": "Ten", "genres": ["RPG"], "tags": ["Open World", "open  world"]},
            {"game_id": 20, "name": "Twenty", "genres": [], "tags": []}]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    catalog = load_catalog(path)
    assert [g.game_id for g in catalog] == [10, 20]
    assert catalog[0].tags == ("open world",)


def test_load_catalog_rejects_duplicates(tmp_path):
    path = tmp_path / "catalog.jsonl"
    path.write_text('{"game_id": 1, "name": "A"}\n{"game_id": 1, "name": "B"}\n', encoding="utf-8")
    with pytest.raises(DataError):
        load_catalog(path)


def test_catalog_tag_stats():
    stats = catalog_tag_stats(three_games())
    assert stats["games"] == 3
    assert stats["mean"] == pytest.approx(7 / 3)
    assert stats["std"] == pytest.approx(math.sqrt(((2 - 7 / 3) ** 2 * 2 + (3 - 7 / 3) ** 2) / 2))


def test_cluster_tag_frequencies():
    selections = {1: ["rare", "common"], 2: ["common", "shared"], 3: ["shared"]}
    counts = cluster_tag_frequencies({1: 0, 2: 0, 3: 1}, selections)
    assert counts == {0: {"common": 2, "rare": 1, "shared": 1}, 1: {"shared": 1}}


def test_cluster_tag_frequencies_missing_selection():
    with pytest.raises(CoverageError) as info:
        cluster_tag_frequencies({1: 0, 2: 1}, {1: ["x"]})
    assert info.value.missing == [2]


def test_genre_distribution():
    dist = genre_distribution({1: 0, 2: 0, 3: 1}, three_games())
    assert dist[0] == pytest.approx({"Action": 2 / 3, "Indie": 1 / 3})
    assert dist[1] == {"Strategy": 1.0}
    assert sum(dist[0].values()) == pytest.approx(1.0)


def test_build_cluster_profiles():
    catalog = three_games()
    profiles = {
        1: make_profile(0.5, 0.1, POWER_LAW),
        2: make_profile(0.3, None, NOT_POWER_LAW),
        3: make_profile(0.2, -0.2, POWER_LAW),
    }
    selections = tfidf_select(catalog, top_k=10)
    clusters = build_cluster_profiles({1: 0, 2: 0, 3: 1}, profiles, catalog, selections)

    first, second = clusters
    assert first.size == 2
    assert first.member_ids == [1, 2]
    assert first.members == ["Alpha", "Beta"]
    assert first.avg_metrics["density"] == pytest.approx(0.4)
    # undefined values are skipped, not counted as zero
    assert first.avg_metrics["assortativity"] == pytest.approx(0.1)
    assert first.powerlaw_share == 0.5
    assert first.tag_shares["common"] == 1.0
    assert first.top_genre == ("Action", pytest.approx(2 / 3))
    assert second.powerlaw_share == 1.0

    row = first.to_row()
    assert list(row) == CLUSTER_COLUMNS
    assert row["%pl"] == 50.0
    frame = cluster_profiles_frame(clusters)
    assert list(frame.columns) == CLUSTER_COLUMNS
    assert len(frame) == 2
    json.dumps(first.to_dict())


def test_build_cluster_profiles_coverage():
    catalog = three_games()
    profiles = {1: make_profile(0.5, 0.1, POWER_LAW), 2: make_profile(0.3, 0.0, POWER_LAW)}
    with pytest.raises(CoverageError) as info:
        build_cluster_profiles({1: 0, 2: 1, 3: 1}, profiles, catalog, tfidf_select(catalog))
    assert info.value.missing == [3]
