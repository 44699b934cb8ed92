"""
Tests for the fixture provider, the live Web API client (offline, with a
fake session and clock) and activity derivation
Run with: pytest test_steam_client.py
"""

import sys
import os
import json
import logging
from datetime import date

import pytest
from pydantic import ValidationError

# Add backend to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'backend'))

from config import PipelineConfig, ProviderConfig
from tools.errors import DataError, FixtureError, TransientProviderError
from tools.fixtures import write_synthetic_fixture
from tools.sampling import PRIVATE, PUBLIC, ObservationWindow, active_players
from tools.steam_client import (
    FRIEND_LIST,
    FixtureProvider,
    PlaytimeSnapshot,
    ResponseCache,
    SnapshotArchive,
    SteamWebAPI,
    TokenBucket,
    derive_activity,
    load_activity,
    write_snapshot_fixture,
)

D1, D2, D3 = date(2020, 4, 13), date(2020, 4, 14), date(2020, 4, 15)


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.sleeps = []

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.sleeps.append(seconds)
        self.now += seconds


class FakeResponse:
    def __init__(self, status_code, payload=None):
        self.status_code = status_code
        self.content = json.dumps(payload).encode("utf-8") if payload is not None else b""


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.headers = {}
        self.calls = []

    def get(self, url, params=None, timeout=None):
        self.calls.append((url, dict(params or {})))
        return self.responses.pop(0)


def make_client(tmp_path, responses, **overrides):
    settings = {"mode": "live", "api_key": "secret", "cache_dir": tmp_path / "cache",
                "max_attempts": 3, "backoff_base": 1.0, "backoff_factor": 2.0, "burst": 10}
    settings.update(overrides)
    clock = FakeClock()
    session = FakeSession(responses)
    client = SteamWebAPI(ProviderConfig(**settings), session=session, clock=clock, sleep=clock.sleep)
    return client, session, clock


def write_fixture(root, friends, playtimes=None):
    (root / "friends").mkdir(parents=True)
    for player, payload in friends.items():
        (root / "friends" / f"{player}.json").write_text(json.dumps(payload), encoding="utf-8")
    for (player, day), games in (playtimes or {}).items():
        folder = root / "playtime" / day.isoformat()
        folder.mkdir(parents=True, exist_ok=True)
        payload = {"games": [{"appid": g, "playtime_forever": m} for g, m in games]}
        (folder / f"{player}.json").write_text(json.dumps(payload), encoding="utf-8")


# ----------------------------------------------------------------------
# Fixture provider
# ----------------------------------------------------------------------

def test_fixture_friend_lists(tmp_path):
    write_fixture(tmp_path, {1: [3, 2], 2: {"private": True}})
    provider = FixtureProvider(tmp_path)
    assert provider.friends_of(1) == [3, 2]
    assert provider.friends_of(2) is PRIVATE
    assert provider.visibility(1) == PUBLIC
    provider.friends_of(1)
    assert provider.request_count == 2


def test_fixture_errors(tmp_path):
    with pytest.raises(FixtureError):
        FixtureProvider(tmp_path)
    write_fixture(tmp_path, {1: {"friends": []}, 2: ["a"]})
    (tmp_path / "friends" / "3.json").write_text("[1, 2", encoding="utf-8")
    provider = FixtureProvider(tmp_path)
    for player in (1, 2, 3, 4):
        with pytest.raises(FixtureError):
            provider.friends_of(player)


def test_fixture_snapshots(tmp_path):
    write_fixture(tmp_path, {1: []}, {(1, D1): [(20, 5), (10, 100)]})
    snapshots = FixtureProvider(tmp_path).snapshot_playtimes([1, 2], D1)
    assert snapshots == [PlaytimeSnapshot(1, 10, D1, 100), PlaytimeSnapshot(1, 20, D1, 5)]


def test_malformed_snapshot(tmp_path):
    write_fixture(tmp_path, {1: []})
    folder = tmp_path / "playtime" / D1.isoformat()
    folder.mkdir(parents=True)
    (folder / "1.json").write_text('{"games": [{"playtime_forever": 3}]}', encoding="utf-8")
    with pytest.raises(FixtureError):
        SnapshotArchive(tmp_path).snapshot_playtimes([1], D1)


# ----------------------------------------------------------------------
# Activity derivation
# ----------------------------------------------------------------------

def test_derive_activity_baseline_and_clamp(caplog):
    snapshots = [PlaytimeSnapshot(1, 10, D2, 130), PlaytimeSnapshot(1, 10, D1, 100),
                 PlaytimeSnapshot(1, 10, D3, 120)]
    with caplog.at_level(logging.WARNING):
        log = derive_activity(snapshots)
    assert [(r.day, r.playtime_minutes) for r in log] == [(D1, 0), (D2, 30), (D3, 0)]
    assert "clamped" in caplog.text


def test_derive_activity_steady_totals():
    snapshots = [PlaytimeSnapshot(7, 570, day, total) for day, total in zip((D1, D2, D3), (100, 130, 130))]
    log = derive_activity(snapshots)
    assert [r.playtime_minutes for r in log] == [0, 30, 0]
    assert active_players(log, ObservationWindow(D1, D3)) == {7}


def test_load_activity_from_fixture(tmp_path):
    write_fixture(tmp_path, {1: [], 2: []}, {
        (1, D1): [(10, 50)], (1, D2): [(10, 80)],
        (2, D1): [(10, 0)], (2, D2): [(10, 0), (20, 40)],
    })
    log = load_activity(FixtureProvider(tmp_path), [1, 2], ObservationWindow(D1, D2))
    assert [(r.player, r.game, r.day, r.playtime_minutes) for r in log] == [
        (1, 10, D1, 0), (1, 10, D2, 30), (2, 10, D1, 0), (2, 10, D2, 0), (2, 20, D2, 0),
    ]


def test_snapshot_archive_written_in_fixture_layout(tmp_path):
    source = tmp_path / "source"
    write_fixture(source, {1: [], 2: []}, {(1, D1): [(10, 50)]})
    archive = tmp_path / "archive"
    assert write_snapshot_fixture(FixtureProvider(source), [1, 2], D1, archive) == 2
    assert SnapshotArchive(archive).snapshot_playtimes([1, 2], D1) == [PlaytimeSnapshot(1, 10, D1, 50)]
    assert json.loads((archive / "playtime" / D1.isoformat() / "2.json").read_text()) == {"games": []}


# ----------------------------------------------------------------------
# Live client
# ----------------------------------------------------------------------

def test_live_mode_requires_key():
    with pytest.raises(ValidationError):
        ProviderConfig(mode="live", api_key="")


def test_friend_list_parsed(tmp_path):
    payload = {"friendslist": {"friends": [{"steamid": "30"}, {"steamid": "20"}]}}
    client, session, _ = make_client(tmp_path, [FakeResponse(200, payload)])
    assert client.friends_of(1) == [20, 30]
    url, params = session.calls[0]
    assert url.endswith(f"/{FRIEND_LIST}/")
    assert params["key"] == "secret"
    assert params["steamid"] == 1


def test_responses_cached(tmp_path):
    payload = {"friendslist": {"friends": [{"steamid": "2"}]}}
    client, session, _ = make_client(tmp_path, [FakeResponse(200, payload)])
    assert client.friends_of(1) == [2]
    assert client.friends_of(1) == [2]
    assert len(session.calls) == 1


def test_unauthorized_means_private(tmp_path):
    client, session, _ = make_client(tmp_path, [FakeResponse(401)])
    assert client.friends_of(1) is PRIVATE
    assert client.friends_of(1) is PRIVATE
    assert len(session.calls) == 1


def test_retry_with_backoff(tmp_path):
    payload = {"friendslist": {"friends": []}}
    client, session, clock = make_client(tmp_path, [FakeResponse(503), FakeResponse(429), FakeResponse(200, payload)])
    assert client.friends_of(1) == []
    assert len(session.calls) == 3
    assert clock.sleeps == [1.0, 2.0]


def test_retries_exhausted(tmp_path):
    client, _, _ = make_client(tmp_path, [FakeResponse(500)] * 3)
    with pytest.raises(TransientProviderError):
        client.friends_of(1)


def test_unexpected_status_is_data_error(tmp_path):
    client, _, _ = make_client(tmp_path, [FakeResponse(404)])
    with pytest.raises(DataError):
        client.friends_of(1)


def test_visibility(tmp_path):
    public = {"response": {"players": [{"communityvisibilitystate": 3}]}}
    private = {"response": {"players": [{"communityvisibilitystate": 1}]}}
    client, _, _ = make_client(tmp_path, [FakeResponse(200, public), FakeResponse(200, private)])
    assert client.visibility(1) == PUBLIC
    assert client.visibility(2) == PRIVATE


def test_owned_games_per_day(tmp_path):
    first = {"response": {"games": [{"appid": 20, "playtime_forever": 5}, {"appid": 10, "playtime_forever": 60}]}}
    second = {"response": {"games": [{"appid": 10, "playtime_forever": 90}]}}
    client, session, _ = make_client(tmp_path, [FakeResponse(200, first), FakeResponse(200, second)])
    assert client.owned_games(1, D1) == [(10, 60), (20, 5)]
    # the snapshot day is part of the cache key
    assert client.owned_games(1, D2) == [(10, 90)]
    assert len(session.calls) == 2


def test_cache_key_ignores_api_key():
    assert ResponseCache.key(FRIEND_LIST, {"steamid": 1, "key": "a"}) == ResponseCache.key(FRIEND_LIST, {"steamid": 1})
    assert ResponseCache.key(FRIEND_LIST, {"steamid": 1}) != ResponseCache.key(FRIEND_LIST, {"steamid": 2})


# ----------------------------------------------------------------------
# Rate limiting
# ----------------------------------------------------------------------

def test_token_bucket_rate():
    clock = FakeClock()
    bucket = TokenBucket(rate=1.0, capacity=2, clock=clock, sleep=clock.sleep)
    for _ in range(5):
        bucket.acquire()
    assert sum(clock.sleeps) == pytest.approx(3.0)


def test_token_bucket_daily_quota():
    clock = FakeClock()
    bucket = TokenBucket(rate=100.0, capacity=10, daily_quota=3, clock=clock, sleep=clock.sleep)
    for _ in range(3):
        bucket.acquire()
    with pytest.raises(TransientProviderError):
        bucket.acquire()
    clock.now += 86400
    bucket.acquire()


# ----------------------------------------------------------------------
# Synthetic fixture
# ----------------------------------------------------------------------

def test_synthetic_fixture(tmp_path):
    info = write_synthetic_fixture(tmp_path / "a", n_players=150, n_games=4, seed=3, min_nodes=5)
    again = write_synthetic_fixture(tmp_path / "b", n_players=150, n_games=4, seed=3, min_nodes=5)
    assert info.seeds == again.seeds
    for rel in ("seeds.txt", "catalog.jsonl", f"friends/{info.seeds[0]}.json"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    provider = FixtureProvider(info.root)
    assert all(provider.friends_of(s) is not PRIVATE for s in info.seeds)

    cfg = PipelineConfig.from_file(info.root / "config.json")
    assert cfg.provider.fixture_root == info.root.resolve()
    assert cfg.top_n == 4
    assert cfg.clustering.seed == 3
