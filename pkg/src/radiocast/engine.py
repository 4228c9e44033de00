"""Synchronous radio channel simulation.

Channel model, per round: every station either transmits or listens (while
uninformed it always listens). A listening station receives the message in a
round exactly when precisely one of its neighbors transmits in that round;
two or more simultaneous neighbor transmissions collide and are
indistinguishable from silence, and a transmitting station hears nothing
itself. Energy is the number of rounds a station spends transmitting,
collisions included.

A trial replays StationSchedules produced by a protocol builder: the origin
is informed before round 0 (conventional reception round -1), every newly
informed station gets a private RNG stream derived from (seed, station) and
builds its schedule once, and the trial runs until every informed station's
schedule is exhausted or the round horizon is hit. Rounds in which no station
transmits cannot change any state, so the default loop skips them; a naive
round-by-round mode is kept for equivalence checking and both modes produce
identical results, including the optional trace.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Iterable, Protocol

import numpy as np

from .errors import InvalidParameterError
from .topology import Graph

__all__ = [
    "ScheduleBuilder",
    "TrialResult",
    "derive_rng",
    "resolve_round",
    "run_trial",
]


class ScheduleBuilder(Protocol):
    def build(self, reception_round: int, rng: np.random.Generator): ...


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one broadcast trial.

    reception_round[v] is the round in which v first received the message
    (-1 for the origin, None if never informed). completion_round is the
    first round by which every station was informed (None on failure);
    termination_round is the round by which every informed station had
    finished its schedule, capped at the horizon when one was hit.
    collision_rounds counts simulated rounds in which some listening station
    had two or more transmitting neighbors (observability only).
    """

    reception_round: tuple[int | None, ...]
    energy: tuple[int, ...]
    completion_round: int | None
    termination_round: int
    success: bool
    collision_rounds: int


def derive_rng(seed: int, node: int) -> np.random.Generator:
    """Private RNG stream for one station.

    The mapping is fixed: numpy default_rng seeded with SeedSequence([seed,
    node]), so streams for different stations (or different trial seeds) are
    independent and a trial is reproducible from (seed, node) alone.
    """
    if seed < 0 or node < 0:
        raise InvalidParameterError(f"seed and node must be >= 0, got {seed}, {node}")
    return np.random.default_rng(np.random.SeedSequence([seed, node]))


def _receiving_stations(g: Graph, transmitters: list[int]) -> tuple[list[int], bool]:
    """Stations hearing exactly one transmitting neighbor, plus a flag for
    whether any listening station saw a collision. Deterministic order."""
    counts: dict[int, int] = {}
    for u in transmitters:
        for v in g.adj[u]:
            counts[v] = counts.get(v, 0) + 1
    tx = set(transmitters)
    receivers = sorted(v for v, c in counts.items() if c == 1 and v not in tx)
    collided = any(c >= 2 and v not in tx for v, c in counts.items())
    return receivers, collided


def resolve_round(g: Graph, transmitters: Iterable[int]) -> list[bool]:
    """Per-station reception feedback for a single round.

    Returns a list where entry v is True exactly when v would receive: v is
    not transmitting and exactly one neighbor of v is transmitting.
    """
    txs = sorted(set(transmitters))
    for u in txs:
        if not (0 <= u < g.n):
            raise InvalidParameterError(f"transmitter {u} not in 0..{g.n - 1}")
    received = [False] * g.n
    for v in _receiving_stations(g, txs)[0]:
        received[v] = True
    return received


def run_trial(
    g: Graph,
    protocol: ScheduleBuilder,
    origin: int = 0,
    seed: int = 0,
    max_rounds: int | None = None,
    naive: bool = False,
    trace: Callable[[str], None] | None = None,
) -> TrialResult:
    """Simulate one broadcast from origin and return the trial outcome.

    max_rounds bounds the simulated horizon (rounds 0..max_rounds-1); a trial
    truncated by the horizon reports success only if everyone was informed in
    time, never raises. naive=True replays every round individually instead
    of skipping transmission-free rounds; results are identical. trace, if
    given, is called with one line per round that had at least one
    transmitter: "round=<t> tx=<u1,u2,...> informed=<v1,v2,...>" (newly
    informed stations only).
    """
    if not (0 <= origin < g.n):
        raise InvalidParameterError(f"origin {origin} not in 0..{g.n - 1}")
    if max_rounds is not None and max_rounds < 1:
        raise InvalidParameterError(f"need max_rounds >= 1, got {max_rounds}")
    if g.n == 1:
        # Nobody to deliver to: complete before round 0, nothing transmits.
        return TrialResult((-1,), (0,), 0, 0, True, 0)

    reception: list[int | None] = [None] * g.n
    energy = [0] * g.n
    finish: list[int] = []
    collision_rounds = 0

    # round -> stations scheduled to transmit; rounds at/after the horizon
    # are never simulated.
    pending: dict[int, list[int]] = {}
    heap: list[int] = []

    def activate(v: int, at_round: int) -> None:
        reception[v] = at_round
        sched = protocol.build(at_round, derive_rng(seed, v))
        assert all(r > at_round for r in sched.transmit_rounds)
        finish.append(sched.finish_round)
        for r in sched.transmit_rounds:
            if max_rounds is not None and r >= max_rounds:
                break
            bucket = pending.get(r)
            if bucket is None:
                pending[r] = [v]
                heapq.heappush(heap, r)
            else:
                bucket.append(v)

    activate(origin, -1)

    def process(t: int) -> None:
        nonlocal collision_rounds
        txs = sorted(pending.pop(t))
        for u in txs:
            energy[u] += 1
        receivers, collided = _receiving_stations(g, txs)
        if collided:
            collision_rounds += 1
        fresh = [v for v in receivers if reception[v] is None]
        for v in fresh:
            activate(v, t)
        if trace is not None:
            trace(
                f"round={t} tx={','.join(map(str, txs))} "
                f"informed={','.join(map(str, fresh))}"
            )

    if naive:
        t = 0
        while True:
            horizon = max(finish)
            if max_rounds is not None:
                horizon = min(horizon, max_rounds)
            if t >= horizon:
                break
            if t in pending:
                process(t)
            t += 1
    else:
        while heap:
            t = heapq.heappop(heap)
            if t in pending:
                process(t)

    success = all(r is not None for r in reception)
    completion = max(0, *(r for r in reception if r is not None)) if success else None
    termination = max(finish)
    if max_rounds is not None and termination > max_rounds:
        termination = max_rounds
    return TrialResult(
        reception_round=tuple(reception),
        energy=tuple(energy),
        completion_round=completion,
        termination_round=termination,
        success=success,
        collision_rounds=collision_rounds,
    )
