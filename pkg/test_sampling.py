"""
Tests for snowball sampling, activity and top-game selection
Run with: pytest test_sampling.py
"""

import sys
import os
import json
import threading
from datetime import date

import pytest

# Add backend to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'backend'))

from tools.errors import DataError, SamplingError, TransientProviderError
from tools.graph_core import build_graph, from_edge_list
from tools.sampling import (
    PRIVATE,
    PUBLIC,
    ActivityLog,
    FriendProvider,
    ObservationWindow,
    SnowballSampler,
    active_players,
    game_subgraph,
    players_by_game,
    prune_inactive,
    rank_games,
    read_seeds,
    snowball_build,
    top_games,
)

DAY = date(2020, 4, 13)
WINDOW = ObservationWindow(date(2020, 4, 13), date(2020, 4, 17))


class DictProvider(FriendProvider):
    def __init__(self, friends, failing=()):
        self.friends = friends
        self.failing = set(failing)
        self.calls = []
        self._lock = threading.Lock()

    def friends_of(self, player):
        with self._lock:
            self.calls.append(player)
        if player in self.failing:
            raise TransientProviderError(f"timeout for {player}")
        return self.friends[player]


# ----------------------------------------------------------------------
# Snowball
# ----------------------------------------------------------------------

def test_symmetric_pair():
    g = snowball_build(DictProvider({1: [2], 2: [1]}), {1})
    assert sorted(g.nodes()) == [1, 2]
    assert g.number_of_edges() == 1


def test_lcc_tie_keeps_one_pair():
    provider = DictProvider({1: [2], 2: [1], 3: [4], 4: [3]})
    g = snowball_build(provider, {1, 3})
    assert sorted(g.nodes()) == [1, 2]


def test_private_profiles_removed():
    provider = DictProvider({1: [2, 3], 2: [1, 3], 3: PRIVATE})
    sampler = SnowballSampler(provider)
    g = sampler.build([1])
    assert sorted(g.nodes()) == [1, 2]
    assert sorted(g.edges()) == [(1, 2)]
    assert sampler.trace.private_removed == 1


def test_closure_adds_edges_but_no_nodes():
    provider = DictProvider({1: [2], 2: [1, 3, 4], 3: [2, 4, 5], 4: [2, 3], 5: [3]})
    sampler = SnowballSampler(provider)
    g = sampler.build([1])
    assert sorted(g.nodes()) == [1, 2, 3, 4]
    assert sorted(g.edges()) == [(1, 2), (2, 3), (2, 4), (3, 4)]
    assert sampler.trace.lcc_nodes == 2
    assert sampler.trace.step3_nodes == 4
    assert sampler.trace.closure_edges == 1
    assert 5 not in provider.calls


def test_each_player_fetched_once():
    provider = DictProvider({1: [2], 2: [1, 3, 4], 3: [2, 4, 5], 4: [2, 3], 5: [3]})
    snowball_build(provider, [1], max_in_flight=4)
    assert sorted(provider.calls) == sorted(set(provider.calls))


def test_no_seeds():
    with pytest.raises(SamplingError):
        snowball_build(DictProvider({}), [])


def test_private_seed_rejected():
    with pytest.raises(SamplingError):
        snowball_build(DictProvider({1: PRIVATE}), [1])


def test_transient_failure_persists_and_resumes_frontier(tmp_path):
    friends = {1: [2], 2: [1, 3, 4], 3: [2, 4], 4: [2, 3]}
    frontier = tmp_path / "frontier.json"

    with pytest.raises(TransientProviderError) as info:
        SnowballSampler(DictProvider(friends, failing={3}), frontier_path=frontier).build([1])
    assert info.value.frontier_path == str(frontier)
    saved = json.loads(frontier.read_text(encoding="utf-8"))["fetched"]
    assert sorted(saved) == ["1", "2", "4"]

    healthy = DictProvider(friends)
    sampler = SnowballSampler(healthy, frontier_path=frontier)
    g = sampler.build([1])
    assert healthy.calls == [3]
    assert sampler.trace.resumed == 3
    assert sorted(g.nodes()) == [1, 2, 3, 4]


def test_default_visibility():
    provider = DictProvider({1: [2], 2: PRIVATE})
    assert provider.visibility(1) == PUBLIC
    assert provider.visibility(2) == PRIVATE


# ----------------------------------------------------------------------
# Activity
# ----------------------------------------------------------------------

def test_window_validation():
    with pytest.raises(DataError):
        ObservationWindow(date(2020, 5, 1), date(2020, 4, 1))
    window = ObservationWindow.parse("2020-04-13", "2020-04-15")
    assert len(window.days()) == 3


def test_active_players():
    assert active_players(ActivityLog(), WINDOW) == set()
    log = ActivityLog([(1, 10, DAY, 30), (2, 10, DAY, 0), (3, 10, date(2020, 6, 1), 50)])
    assert active_players(log, WINDOW) == {1}


def test_activity_log_invariants():
    with pytest.raises(DataError):
        ActivityLog([(1, 10, DAY, 5), (1, 10, DAY, 7)])
    with pytest.raises(DataError):
        ActivityLog([(1, 10, DAY, -1)])


def test_activity_csv(tmp_path):
    log = ActivityLog([(2, 10, DAY, 30), (1, 10, DAY, 15)])
    path = tmp_path / "activity.csv"
    path.write_text(log.to_csv(), encoding="utf-8")
    assert path.read_text(encoding="utf-8").splitlines()[0] == "player_id,game_id,date,playtime_minutes"
    assert ActivityLog.from_csv(path) == log


def test_activity_csv_bad_row(tmp_path):
    path = tmp_path / "activity.csv"
    path.write_text("player_id,game_id,date,playtime_minutes\n1,10,2020-04-13,5\n2,10,yesterday,5\n",
                    encoding="utf-8")
    with pytest.raises(DataError, match=":3:"):
        ActivityLog.from_csv(path)


def test_activity_summary():
    log = ActivityLog([(1, 10, DAY, 30), (2, 10, DAY, 0), (1, 20, date(2020, 4, 14), 5)])
    summary = log.summary(WINDOW)
    assert summary["records"] == 3
    assert summary["active_players"] == 1
    assert summary["records_per_day"] == {"2020-04-13": 2, "2020-04-14": 1}


# ----------------------------------------------------------------------
# Pruning and game selection
# ----------------------------------------------------------------------

def test_prune_path_ends():
    g = from_edge_list([(1, 2), (2, 3)])
    assert prune_inactive(g, {1, 3}).number_of_nodes() == 0


def test_prune_identity_on_active_triangle():
    g = from_edge_list([(1, 2), (2, 3), (1, 3)])
    assert sorted(prune_inactive(g, {1, 2, 3}).edges()) == [(1, 2), (1, 3), (2, 3)]


def test_prune_star_without_center():
    g = from_edge_list([(0, 1), (0, 2), (0, 3)])
    assert prune_inactive(g, {1, 2, 3}).number_of_nodes() == 0


def test_prune_minimum_degree():
    g = from_edge_list([(1, 2), (2, 3), (3, 4), (5, 6)])
    pruned = prune_inactive(g, {1, 2, 3, 5})
    assert sorted(pruned.nodes()) == [1, 2, 3]
    assert min(d for _, d in pruned.degree()) >= 1


def _complete(n):
    return build_graph(range(1, n + 1), [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)])


def test_top_games_by_player_count():
    g = _complete(5)
    log = ActivityLog([(p, 10, DAY, 10) for p in range(1, 6)] + [(p, 20, DAY, 100) for p in range(1, 4)])
    assert top_games(g, log, WINDOW, n=10, min_nodes=1) == [10, 20]
    assert top_games(g, log, WINDOW, n=1, min_nodes=1) == [10]
    assert top_games(g, log, WINDOW, n=10, min_nodes=4) == [10]


def test_top_games_ties_by_playtime_then_id():
    g = _complete(3)
    log = ActivityLog([(1, 30, DAY, 5), (2, 30, DAY, 5),
                       (1, 20, DAY, 50), (2, 20, DAY, 50),
                       (1, 10, DAY, 5), (2, 10, DAY, 5)])
    assert top_games(g, log, WINDOW, n=3, min_nodes=0) == [20, 10, 30]


def test_top_games_counts_players_in_graph_only():
    g = _complete(2)
    log = ActivityLog([(1, 10, DAY, 5), (2, 10, DAY, 5), (3, 20, DAY, 5), (4, 20, DAY, 5), (5, 20, DAY, 5)])
    ranks = rank_games(g, log, WINDOW)
    assert [(r.game_id, r.n_players) for r in ranks] == [(10, 2)]


def test_top_games_requires_positive_n():
    with pytest.raises(ValueError):
        top_games(_complete(2), ActivityLog(), WINDOW, n=0, min_nodes=0)


def test_game_subgraph():
    g = from_edge_list([(1, 2), (2, 3), (3, 4)])
    log = ActivityLog([(1, 10, DAY, 5), (2, 10, DAY, 5), (4, 10, DAY, 5), (3, 10, DAY, 0)])
    sub = game_subgraph(g, log, WINDOW, 10)
    assert sorted(sub.nodes()) == [1, 2, 4]
    assert sorted(sub.edges()) == [(1, 2)]
    assert set(sub.nodes()) <= active_players(log, WINDOW)
    assert game_subgraph(g, log, WINDOW, 99).number_of_nodes() == 0


def test_players_by_game_sums_minutes():
    log = ActivityLog([(1, 10, DAY, 5), (1, 10, date(2020, 4, 14), 7)])
    assert players_by_game(log, WINDOW) == {10: {1: 12}}


def test_read_seeds(tmp_path):
    path = tmp_path / "seeds.txt"
    path.write_text("# seeds\n3\n1  # hub\n\n3\n", encoding="utf-8")
    assert read_seeds(path) == [1, 3]
    path.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(DataError):
        read_seeds(path)
