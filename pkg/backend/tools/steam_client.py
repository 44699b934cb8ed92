"""
Data ingestion: friend lists and daily playtime snapshots.

FixtureProvider reads a directory layout and is fully offline. SteamWebAPI
talks to the public Steam Web API through a shared token bucket, an on-disk
response cache and a retry loop with exponential backoff.
"""

import hashlib
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple
from urllib.parse import urlencode

import requests

from config import ProviderConfig
from tools.artifacts import write_bytes, write_json
from tools.errors import DataError, FixtureError, TransientProviderError
from tools.sampling import (
    PRIVATE,
    PUBLIC,
    ActivityLog,
    FriendList,
    FriendProvider,
    GameId,
    ObservationWindow,
    Visibility,
)
from tools.graph_core import PlayerId

logger = logging.getLogger(__name__)

FRIEND_LIST = "ISteamUser/GetFriendList/v1"
PLAYER_SUMMARIES = "ISteamUser/GetPlayerSummaries/v2"
OWNED_GAMES = "IPlayerService/GetOwnedGames/v1"
RECENTLY_PLAYED = "IPlayerService/GetRecentlyPlayedGames/v1"

# communityvisibilitystate value of a public profile
PUBLIC_PROFILE_STATE = 3

RETRYABLE_STATUS = {429, 500, 502, 503, 504}
UNAUTHORIZED_STATUS = {401, 403}


@dataclass(frozen=True, order=True)
class PlaytimeSnapshot:
    player: PlayerId
    game: GameId
    day: date
    playtime_forever_minutes: int


def _parse_games(payload, source: str) -> List[Tuple[GameId, int]]:
    """Steam owned-games shape: {"games": [{"appid": .., "playtime_forever": ..}, ...]}"""
    if isinstance(payload, dict) and "response" in payload:
        payload = payload["response"]
    if not isinstance(payload, dict):
        raise DataError(f"{source}: expected an object with a 'games' list")
    games = []
    for entry in payload.get("games", []):
        try:
            games.append((int(entry["appid"]), int(entry.get("playtime_forever", 0))))
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"{source}: malformed game entry {entry!r} ({e})")
    return sorted(games)


# ----------------------------------------------------------------------
# Fixture provider
# ----------------------------------------------------------------------

class SnapshotArchive:
    """
    Daily playtime snapshots stored on disk:

        playtime/<YYYY-MM-DD>/<id>.json  {"games": [{"appid", "playtime_forever"}]}
    """

    def __init__(self, root):
        self.root = Path(root)
        self.request_count = 0
        self._lock = threading.Lock()

    def _read(self, path: Path):
        with self._lock:
            self.request_count += 1
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except ValueError as e:
            raise FixtureError(f"malformed fixture {path}: {e}")

    def snapshot_playtimes(self, players: Iterable[PlayerId], day: date) -> List[PlaytimeSnapshot]:
        folder = self.root / "playtime" / day.isoformat()
        snapshots = []
        for player in sorted(set(players)):
            path = folder / f"{player}.json"
            if not path.exists():
                continue
            data = self._read(path)
            try:
                games = _parse_games(data, str(path))
            except DataError as e:
                raise FixtureError(str(e))
            snapshots.extend(PlaytimeSnapshot(player, game, day, minutes) for game, minutes in games)
        return snapshots


class FixtureProvider(SnapshotArchive, FriendProvider):
    """
    Offline provider over a snapshot archive that also holds friend lists:

        friends/<playerid>.json          array of ids, or {"private": true}
    """

    def __init__(self, root):
        super().__init__(root)
        if not (self.root / "friends").is_dir():
            raise FixtureError(f"fixture root {self.root} has no friends/ directory")
        self._cache: Dict[PlayerId, FriendList] = {}

    def friends_of(self, player: PlayerId) -> FriendList:
        with self._lock:
            if player in self._cache:
                return self._cache[player]

        path = self.root / "friends" / f"{player}.json"
        if not path.exists():
            raise FixtureError(f"no friend-list fixture for player {player} ({path})")
        data = self._read(path)

        if isinstance(data, dict) and data.get("private") is True:
            result: FriendList = PRIVATE
        elif isinstance(data, list):
            try:
                result = [int(v) for v in data]
            except (TypeError, ValueError):
                raise FixtureError(f"malformed fixture {path}: friend ids must be integers")
        else:
            raise FixtureError(f"malformed fixture {path}: expected a list or {{\"private\": true}}")

        with self._lock:
            self._cache[player] = result
        return result


# ----------------------------------------------------------------------
# Live client plumbing
# ----------------------------------------------------------------------

class TokenBucket:
    """
    Shared rate limiter: `rate` tokens per second up to `capacity`, plus a
    hard cap of `daily_quota` acquisitions per rolling day.
    """

    def __init__(self, rate: float, capacity: int, daily_quota: Optional[int] = None,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        if rate <= 0 or capacity < 1:
            raise ValueError("token bucket needs a positive rate and capacity")
        self.rate = rate
        self.capacity = capacity
        self.daily_quota = daily_quota
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._tokens = float(capacity)
        self._updated = clock()
        self._day_start = self._updated
        self._used_today = 0

    def _refill(self):
        now = self._clock()
        self._tokens = min(self.capacity, self._tokens + (now - self._updated) * self.rate)
        self._updated = now
        if now - self._day_start >= 86400:
            self._day_start = now
            self._used_today = 0

    def acquire(self):
        with self._lock:
            self._refill()
            if self.daily_quota is not None and self._used_today >= self.daily_quota:
                raise TransientProviderError(f"daily request quota of {self.daily_quota} exhausted")
            while self._tokens < 1:
                self._sleep((1 - self._tokens) / self.rate)
                self._refill()
            self._tokens -= 1
            self._used_today += 1


class ResponseCache:
    """Response bodies on disk as <key>.<status>, keyed by endpoint and parameters"""

    def __init__(self, cache_dir):
        self.cache_dir = Path(cache_dir)

    @staticmethod
    def key(endpoint: str, params: Dict) -> str:
        query = urlencode(sorted((k, str(v)) for k, v in params.items() if k != "key"))
        return hashlib.sha256(f"{endpoint}?{query}".encode("utf-8")).hexdigest()

    def get(self, key: str) -> Optional[Tuple[int, bytes]]:
        for status in (200, 401):
            path = self.cache_dir / f"{key}.{status}"
            if path.exists():
                return status, path.read_bytes()
        return None

    def put(self, key: str, status: int, body: bytes):
        try:
            write_bytes(self.cache_dir / f"{key}.{status}", body)
        except OSError as e:
            logger.warning(f"Could not write cache entry {key}: {e}")


class SteamWebAPI(FriendProvider):
    """Live provider; every HTTP request goes through one shared TokenBucket"""

    def __init__(self, config: ProviderConfig, session: Optional[requests.Session] = None,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        if not config.api_key:
            raise DataError("live mode requires STEAM_API_KEY")
        self.config = config
        self.base_url = config.base_url.rstrip("/")
        self.session = session or requests.Session()
        self.session.headers.update({"Accept": "application/json"})
        self.bucket = TokenBucket(config.requests_per_day / 86400.0, config.burst,
                                  config.requests_per_day, clock=clock, sleep=sleep)
        self.cache = ResponseCache(config.cache_dir)
        self._sleep = sleep
        self._lock = threading.Lock()
        self.request_count = 0

    def _request(self, endpoint: str, params: Dict, cache_params: Optional[Dict] = None) -> Tuple[int, bytes]:
        key = self.cache.key(endpoint, {**params, **(cache_params or {})})
        cached = self.cache.get(key)
        if cached is not None:
            return cached

        url = f"{self.base_url}/{endpoint}/"
        last_error = ""
        for attempt in range(self.config.max_attempts):
            if attempt:
                delay = self.config.backoff_base * self.config.backoff_factor ** (attempt - 1)
                logger.info(f"Retrying {endpoint} in {delay:.1f}s (attempt {attempt + 1}/{self.config.max_attempts})")
                self._sleep(delay)

            self.bucket.acquire()
            with self._lock:
                self.request_count += 1
            try:
                response = self.session.get(url, params={**params, "key": self.config.api_key},
                                            timeout=self.config.timeout)
            except requests.exceptions.RequestException as e:
                last_error = f"{type(e).__name__}: {e}"
                logger.warning(f"{endpoint} request failed: {last_error}")
                continue

            if response.status_code in RETRYABLE_STATUS:
                last_error = f"HTTP {response.status_code}"
                logger.warning(f"{endpoint} returned {response.status_code}")
                continue
            if response.status_code in UNAUTHORIZED_STATUS:
                self.cache.put(key, 401, response.content)
                return 401, response.content
            if response.status_code != 200:
                raise DataError(f"{endpoint} returned HTTP {response.status_code}")

            self.cache.put(key, 200, response.content)
            return 200, response.content

        raise TransientProviderError(f"{endpoint} failed after {self.config.max_attempts} attempts ({last_error})")

    def _json(self, endpoint: str, body: bytes):
        try:
            return json.loads(body.decode("utf-8")) if body else {}
        except ValueError as e:
            raise DataError(f"{endpoint} returned malformed JSON: {e}")

    def friends_of(self, player: PlayerId) -> FriendList:
        status, body = self._request(FRIEND_LIST, {"steamid": player, "relationship": "friend"})
        if status == 401:
            return PRIVATE
        data = self._json(FRIEND_LIST, body)
        friends = data.get("friendslist", {}).get("friends", [])
        try:
            return sorted(int(f["steamid"]) for f in friends)
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"{FRIEND_LIST}: malformed friend entry ({e})")

    def visibility(self, player: PlayerId) -> Visibility:
        status, body = self._request(PLAYER_SUMMARIES, {"steamids": player})
        if status == 401:
            return PRIVATE
        players = self._json(PLAYER_SUMMARIES, body).get("response", {}).get("players", [])
        if not players:
            return PRIVATE
        return PUBLIC if players[0].get("communityvisibilitystate") == PUBLIC_PROFILE_STATE else PRIVATE

    def owned_games(self, player: PlayerId, day: date) -> List[Tuple[GameId, int]]:
        params = {"steamid": player, "include_played_free_games": 1, "include_appinfo": 0}
        status, body = self._request(OWNED_GAMES, params, {"day": day.isoformat()})
        if status == 401:
            return []
        return _parse_games(self._json(OWNED_GAMES, body), OWNED_GAMES)

    def recently_played(self, player: PlayerId, day: date) -> List[Tuple[GameId, int]]:
        status, body = self._request(RECENTLY_PLAYED, {"steamid": player}, {"day": day.isoformat()})
        if status == 401:
            return []
        return _parse_games(self._json(RECENTLY_PLAYED, body), RECENTLY_PLAYED)

    def snapshot_playtimes(self, players: Iterable[PlayerId], day: date) -> List[PlaytimeSnapshot]:
        players = sorted(set(players))
        with ThreadPoolExecutor(max_workers=self.config.max_in_flight) as executor:
            owned = list(executor.map(lambda p: self.owned_games(p, day), players))
        snapshots = []
        for player, games in zip(players, owned):
            snapshots.extend(PlaytimeSnapshot(player, game, day, minutes) for game, minutes in games)
        logger.info(f"Snapshot {day}: {len(snapshots)} playtime entries for {len(players)} players")
        return snapshots


def make_provider(config: ProviderConfig) -> FriendProvider:
    if config.mode == "live":
        return SteamWebAPI(config)
    return FixtureProvider(config.fixture_root)


# ----------------------------------------------------------------------
# Activity derivation
# ----------------------------------------------------------------------

def derive_activity(snapshots: Iterable[PlaytimeSnapshot]) -> ActivityLog:
    """
    Daily playtime from cumulative totals. The first observed day of each
    (player, game) is a baseline and records 0; negative deltas clamp to 0.
    """
    series: Dict[Tuple[PlayerId, GameId], List[PlaytimeSnapshot]] = {}
    for s in snapshots:
        series.setdefault((s.player, s.game), []).append(s)

    records = []
    clamped = 0
    for (player, game), items in sorted(series.items()):
        items.sort(key=lambda s: s.day)
        previous: Optional[int] = None
        for s in items:
            delta = 0 if previous is None else s.playtime_forever_minutes - previous
            if delta < 0:
                clamped += 1
                logger.warning(f"Playtime of player {player} in game {game} dropped on {s.day} "
                               f"({previous} -> {s.playtime_forever_minutes}); delta clamped to 0")
                delta = 0
            records.append((player, game, s.day, delta))
            previous = s.playtime_forever_minutes

    log = ActivityLog(records)
    logger.info(f"Derived {len(log)} activity records ({clamped} clamped)")
    return log


def load_activity(provider, players: Iterable[PlayerId], window: ObservationWindow) -> ActivityLog:
    players = sorted(set(players))
    snapshots: List[PlaytimeSnapshot] = []
    for day in window.days():
        snapshots.extend(provider.snapshot_playtimes(players, day))
    return derive_activity(snapshots)


def write_snapshot_fixture(provider, players: Iterable[PlayerId], day: date, root) -> int:
    """Persist one day of snapshots in the fixture layout; returns files written"""
    folder = Path(root) / "playtime" / day.isoformat()
    by_player: Dict[PlayerId, List[Dict]] = {p: [] for p in set(players)}
    for s in provider.snapshot_playtimes(by_player, day):
        by_player[s.player].append({"appid": s.game, "playtime_forever": s.playtime_forever_minutes})
    for player, games in sorted(by_player.items()):
        write_json(folder / f"{player}.json", {"games": games})
    logger.info(f"Wrote {len(by_player)} playtime snapshot(s) to {folder}")
    return len(by_player)
