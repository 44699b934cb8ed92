"""
Friendship-graph construction and top-game corpus selection.

The snowball procedure runs in four steps over an abstract FriendProvider:
seed expansion, restriction to the largest connected component, expansion
of the component's friends, and a closure pass that only adds edges between
nodes already present. Private profiles are pruned at the end.
"""

import json
import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Set, Tuple, Union

import pandas as pd
from dateutil.parser import isoparse

from tools.artifacts import write_text
from tools.errors import DataError, SamplingError, TransientProviderError
from tools.graph_core import (
    Graph,
    PlayerId,
    build_graph,
    connected_components,
    induced_subgraph,
)

logger = logging.getLogger(__name__)

GameId = int

ACTIVITY_COLUMNS = ["player_id", "game_id", "date", "playtime_minutes"]


class Visibility(str, Enum):
    PUBLIC = "public"
    PRIVATE = "private"


PRIVATE = Visibility.PRIVATE
PUBLIC = Visibility.PUBLIC

FriendList = Union[List[PlayerId], Visibility]


class FriendProvider(ABC):
    """Source of friend lists; implementations must be thread-safe"""

    @abstractmethod
    def friends_of(self, player: PlayerId) -> FriendList:
        """Friend ids of a player, or PRIVATE when the list is not visible"""

    def visibility(self, player: PlayerId) -> Visibility:
        return PRIVATE if self.friends_of(player) is PRIVATE else PUBLIC


# ----------------------------------------------------------------------
# Observation window and activity
# ----------------------------------------------------------------------

def _to_date(value) -> date:
    if isinstance(value, date):
        return value
    try:
        return isoparse(str(value).strip()).date()
    except (TypeError, ValueError) as e:
        raise DataError(f"not an ISO-8601 date: {value!r} ({e})")


@dataclass(frozen=True)
class ObservationWindow:
    start: date
    end: date

    def __post_init__(self):
        if self.start > self.end:
            raise DataError(f"observation window start {self.start} is after end {self.end}")

    @classmethod
    def parse(cls, start, end) -> "ObservationWindow":
        return cls(_to_date(start), _to_date(end))

    def contains(self, day: date) -> bool:
        return self.start <= day <= self.end

    def days(self) -> List[date]:
        span = (self.end - self.start).days
        return [self.start + timedelta(days=i) for i in range(span + 1)]


class ActivityRecord(NamedTuple):
    player: PlayerId
    game: GameId
    day: date
    playtime_minutes: int


class ActivityLog:
    """
    Per-(player, game, day) playtime records.

    At most one record per (player, game, day); playtime is a nonnegative
    integer number of minutes played on that day.
    """

    def __init__(self, records: Iterable[Tuple[PlayerId, GameId, date, int]] = ()):
        self._records: Dict[Tuple[PlayerId, GameId, date], int] = {}
        for player, game, day, minutes in records:
            key = (int(player), int(game), _to_date(day))
            if key in self._records:
                raise DataError(f"duplicate activity record for player {key[0]}, game {key[1]}, day {key[2]}")
            if int(minutes) < 0:
                raise DataError(f"negative playtime {minutes} for player {key[0]}, game {key[1]}, day {key[2]}")
            self._records[key] = int(minutes)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        for key in sorted(self._records):
            yield ActivityRecord(*key, self._records[key])

    def __eq__(self, other) -> bool:
        return isinstance(other, ActivityLog) and self._records == other._records

    def records_in(self, window: ObservationWindow) -> List[ActivityRecord]:
        return [r for r in self if window.contains(r.day)]

    def summary(self, window: Optional[ObservationWindow] = None) -> Dict:
        records = self.records_in(window) if window else list(self)
        per_day: Dict[str, int] = {}
        for r in records:
            per_day[r.day.isoformat()] = per_day.get(r.day.isoformat(), 0) + 1
        return {
            "records": len(records),
            "active_players": len({r.player for r in records if r.playtime_minutes > 0}),
            "games": len({r.game for r in records}),
            "records_per_day": dict(sorted(per_day.items())),
        }

    @classmethod
    def from_csv(cls, path) -> "ActivityLog":
        path = Path(path)
        try:
            df = pd.read_csv(path, dtype=str, keep_default_na=False)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DataError(f"cannot read activity file {path}: {e}")

        if list(df.columns) != ACTIVITY_COLUMNS:
            raise DataError(f"{path}: expected header {','.join(ACTIVITY_COLUMNS)}, got {','.join(df.columns)}")

        records = []
        # header is line 1
        for line_no, row in enumerate(df.itertuples(index=False), 2):
            try:
                records.append((int(row.player_id), int(row.game_id), isoparse(row.date).date(),
                                int(row.playtime_minutes)))
            except (TypeError, ValueError) as e:
                raise DataError(f"{path}:{line_no}: malformed activity record ({e})")

        log = cls(records)
        logger.info(f"Loaded {len(log)} activity records from {path}")
        return log

    def to_frame(self) -> pd.DataFrame:
        rows = [(r.player, r.game, r.day.isoformat(), r.playtime_minutes) for r in self]
        return pd.DataFrame(rows, columns=ACTIVITY_COLUMNS)

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, lineterminator="\n")


def active_players(log: ActivityLog, window: ObservationWindow) -> Set[PlayerId]:
    return {r.player for r in log.records_in(window) if r.playtime_minutes > 0}


def players_by_game(log: ActivityLog, window: ObservationWindow) -> Dict[GameId, Dict[PlayerId, int]]:
    """game -> {active player -> minutes played in the window}"""
    games: Dict[GameId, Dict[PlayerId, int]] = {}
    for r in log.records_in(window):
        if r.playtime_minutes <= 0:
            continue
        players = games.setdefault(r.game, {})
        players[r.player] = players.get(r.player, 0) + r.playtime_minutes
    return games


def prune_inactive(g: Graph, active: Iterable[PlayerId]) -> Graph:
    """Keep active players, then drop nodes left without edges until none remain"""
    pruned = induced_subgraph(g, active)
    while True:
        isolated = [n for n, d in pruned.degree() if d == 0]
        if not isolated:
            break
        pruned = induced_subgraph(pruned, set(pruned.nodes()) - set(isolated))
    logger.info(f"Pruned inactive players: {g.number_of_nodes()} -> {pruned.number_of_nodes()} nodes")
    return pruned


@dataclass(frozen=True)
class GameRank:
    game_id: GameId
    n_players: int
    total_minutes: int


def rank_games(g: Graph, log: ActivityLog, window: ObservationWindow,
               n: Optional[int] = None, min_nodes: int = 0) -> List[GameRank]:
    """
    Rank games by distinct active players present in g, then total playtime,
    then game id. The min_nodes floor is applied before truncating to n.
    """
    if n is not None and n < 1:
        raise ValueError(f"n must be at least 1, got {n}")

    nodes = set(g.nodes())
    ranks = []
    for game, players in players_by_game(log, window).items():
        present = [p for p in players if p in nodes]
        ranks.append(GameRank(game, len(present), sum(players[p] for p in present)))

    ranks.sort(key=lambda r: (-r.n_players, -r.total_minutes, r.game_id))
    eligible = [r for r in ranks if r.n_players >= min_nodes and r.n_players > 0]
    if len(eligible) < len(ranks):
        logger.info(f"{len(ranks) - len(eligible)} game(s) below the {min_nodes}-node floor")
    return eligible[:n] if n is not None else eligible


def top_games(g: Graph, log: ActivityLog, window: ObservationWindow, n: int, min_nodes: int) -> List[GameId]:
    return [r.game_id for r in rank_games(g, log, window, n, min_nodes)]


def game_subgraph(g: Graph, log: ActivityLog, window: ObservationWindow, game: GameId) -> Graph:
    players = players_by_game(log, window).get(game, {})
    return induced_subgraph(g, players)


def read_seeds(path) -> List[PlayerId]:
    """Seed-list file: one player id per line, '#' comments allowed"""
    seeds: Set[PlayerId] = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if not text.isdigit():
                raise DataError(f"{path}:{line_no}: not a player id: {text!r}")
            seeds.add(int(text))
    if not seeds:
        raise DataError(f"seed file {path} lists no players")
    return sorted(seeds)


# ----------------------------------------------------------------------
# Snowball sampling
# ----------------------------------------------------------------------

@dataclass
class SnowballTrace:
    """Node and edge counts after each step of the crawl"""
    seeds: int = 0
    step1_nodes: int = 0
    step1_edges: int = 0
    lcc_nodes: int = 0
    lcc_edges: int = 0
    step3_nodes: int = 0
    step3_edges: int = 0
    closure_edges: int = 0
    private_removed: int = 0
    final_nodes: int = 0
    final_edges: int = 0
    requests: int = 0
    resumed: int = 0
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return asdict(self)


class SnowballSampler:
    """
    Four-step snowball crawl with a resumable frontier.

    Friend lists are fetched at most once per player. Results fetched before a
    TransientProviderError are written to frontier_path so a rerun resumes
    where the failed one stopped.
    """

    def __init__(self, provider: FriendProvider, max_in_flight: int = 8,
                 frontier_path: Optional[Path] = None):
        self.provider = provider
        self.max_in_flight = max(1, max_in_flight)
        self.frontier_path = Path(frontier_path) if frontier_path else None
        self.trace = SnowballTrace()
        self._fetched: Dict[PlayerId, FriendList] = {}
        self._load_frontier()

    def _load_frontier(self):
        if not self.frontier_path or not self.frontier_path.exists():
            return
        try:
            with open(self.frontier_path, "r", encoding="utf-8") as f:
                data = json.load(f)
            for key, value in data.get("fetched", {}).items():
                self._fetched[int(key)] = PRIVATE if value == PRIVATE.value else [int(v) for v in value]
        except (OSError, ValueError, TypeError, AttributeError) as e:
            raise DataError(f"unreadable frontier file {self.frontier_path}: {e}")
        self.trace.resumed = len(self._fetched)
        logger.info(f"Resuming crawl: {len(self._fetched)} friend lists loaded from {self.frontier_path}")

    def _save_frontier(self):
        payload = {
            "fetched": {
                str(p): (PRIVATE.value if friends is PRIVATE else sorted(friends))
                for p, friends in sorted(self._fetched.items())
            }
        }
        write_text(self.frontier_path, json.dumps(payload, sort_keys=True) + "\n")
        logger.warning(f"Crawl frontier with {len(self._fetched)} fetched players saved to {self.frontier_path}")

    def _fetch(self, players: Iterable[PlayerId]):
        todo = sorted(set(players) - set(self._fetched))
        if not todo:
            return

        logger.info(f"Fetching {len(todo)} friend list(s) with {self.max_in_flight} in flight")
        failure: Optional[TransientProviderError] = None
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as executor:
            futures = {executor.submit(self.provider.friends_of, p): p for p in todo}
            for future in as_completed(futures):
                player = futures[future]
                try:
                    self._fetched[player] = future.result()
                    self.trace.requests += 1
                except TransientProviderError as e:
                    failure = failure or e

        if failure is not None:
            path = None
            if self.frontier_path:
                self._save_frontier()
                path = str(self.frontier_path)
            raise TransientProviderError(f"crawl aborted: {failure}", frontier_path=path)

    def _friends(self, player: PlayerId) -> List[PlayerId]:
        friends = self._fetched[player]
        return [] if friends is PRIVATE else [f for f in friends if f != player]

    def build(self, seeds: Iterable[PlayerId]) -> Graph:
        seeds = sorted(set(seeds))
        if not seeds:
            raise SamplingError("snowball sampling needs at least one seed")
        self.trace.seeds = len(seeds)

        # Step 1: seeds and their friends
        self._fetch(seeds)
        private_seeds = [s for s in seeds if self._fetched[s] is PRIVATE]
        if private_seeds:
            raise SamplingError(f"seed profiles must be public; private: {private_seeds[:10]}")

        nodes: Set[PlayerId] = set(seeds)
        edges: Set[Tuple[PlayerId, PlayerId]] = set()
        for s in seeds:
            for f in self._friends(s):
                nodes.add(f)
                edges.add((min(s, f), max(s, f)))
        step1 = build_graph(nodes, edges)
        self.trace.step1_nodes, self.trace.step1_edges = step1.number_of_nodes(), step1.number_of_edges()
        logger.info(f"Step 1: {self.trace.step1_nodes} nodes, {self.trace.step1_edges} edges")

        # Step 2: largest connected component
        lcc_nodes = connected_components(step1).largest
        lcc = induced_subgraph(step1, lcc_nodes)
        self.trace.lcc_nodes, self.trace.lcc_edges = lcc.number_of_nodes(), lcc.number_of_edges()
        logger.info(f"Step 2: LCC has {self.trace.lcc_nodes} nodes, {self.trace.lcc_edges} edges")

        # Step 3: friends of every LCC member
        self._fetch(lcc_nodes)
        nodes = set(lcc_nodes)
        edges = {(min(u, v), max(u, v)) for u, v in lcc.edges()}
        for p in sorted(lcc_nodes):
            for f in self._friends(p):
                nodes.add(f)
                edges.add((min(p, f), max(p, f)))
        self.trace.step3_nodes, self.trace.step3_edges = len(nodes), len(edges)
        logger.info(f"Step 3: {self.trace.step3_nodes} nodes, {self.trace.step3_edges} edges")

        # Step 4: closure pass, no new nodes
        added = nodes - set(lcc_nodes)
        self._fetch(added)
        before = len(edges)
        for p in sorted(added):
            for f in self._friends(p):
                if f in nodes:
                    edges.add((min(p, f), max(p, f)))
        self.trace.closure_edges = len(edges) - before
        logger.info(f"Step 4: closure added {self.trace.closure_edges} edges")

        private = {p for p in nodes if self._fetched.get(p) is PRIVATE}
        self.trace.private_removed = len(private)
        final = induced_subgraph(build_graph(nodes, edges), nodes - private)
        self.trace.final_nodes, self.trace.final_edges = final.number_of_nodes(), final.number_of_edges()
        logger.info(f"Removed {len(private)} private profile(s); final network "
                    f"{self.trace.final_nodes} nodes, {self.trace.final_edges} edges")
        return final


def snowball_build(provider: FriendProvider, seeds: Iterable[PlayerId], max_in_flight: int = 8,
                   frontier_path: Optional[Path] = None) -> Graph:
    return SnowballSampler(provider, max_in_flight, frontier_path).build(seeds)
