"""Broadcast protocols as station transmission schedules.

Every protocol here is oblivious: once a station learns the message (its
reception round), the rest of its behavior is a fixed random tape, so a
station's whole run can be materialized up front as a StationSchedule, the
set of absolute rounds in which it will transmit plus the round at which it
stops acting. The engine replays these schedules; no feedback flows back into
a schedule, which is what makes per-protocol energy accounting exact.

Conventions shared by the schedule builders:

* Logarithms are base 2 throughout.
* Geometric samples use the continue-probability convention: X is a positive
  integer with P(X > i) = q^i.
* All ceilings of float expressions snap to the nearest integer first when
  within 1e-9 relative distance, so exact powers (e.g. 4096^(1/3)) do not
  round up twice.
* A station never acts in its reception round. Schedule windows open at the
  first multiple of the window length strictly after the reception round; a
  position already on a boundary between iterations is treated as aligned.
  The originator has reception round -1, so it aligns at round 0.
* The number of RNG draws per decision point is fixed and documented by each
  builder, making schedules a pure function of (params, reception_round, rng
  stream).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "StationSchedule",
    "sample_geo",
    "balls_into_bins_offset",
    "green_decay_schedule",
    "GgbParams",
    "ggb_params",
    "GgbProtocol",
    "GbParams",
    "gb_params",
    "GbProtocol",
    "DecayBaselineProtocol",
    "FixedPatternProtocol",
    "make_protocol",
]


def _snap_ceil(x: float) -> int:
    """Ceiling with a 1e-9 relative snap to the nearest integer."""
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


@dataclass(frozen=True)
class StationSchedule:
    """A station's materialized run.

    transmit_rounds: strictly increasing absolute round numbers.
    finish_round: first round at which the station no longer acts (exclusive
        end of its run); never smaller than any transmit round + 1.
    """

    transmit_rounds: tuple[int, ...]
    finish_round: int

    def __post_init__(self):
        rounds = self.transmit_rounds
        assert all(rounds[i] < rounds[i + 1] for i in range(len(rounds) - 1))
        assert not rounds or self.finish_round > rounds[-1]


def sample_geo(q: float, rng: np.random.Generator, size: int | None = None):
    """Geometric sample(s) with continue probability q: P(X > i) = q^i.

    Support is {1, 2, ...}; q = 0 yields the constant 1. Sampled by inverse
    transform from one uniform draw per value. Returns an int when size is
    None, else an int64 array of the given length.
    """
    if not (0.0 <= q < 1.0):
        raise InvalidParameterError(f"continue probability must be in [0,1), got {q}")
    u = rng.random() if size is None else rng.random(size)
    if q == 0.0:
        return 1 if size is None else np.ones(size, dtype=np.int64)
    # 1 - u is in (0, 1]: avoids log(0) when the generator returns exactly 0.
    x = np.floor(np.log(1.0 - u) / math.log(q)) + 1.0
    if size is None:
        return int(x)
    return x.astype(np.int64)


def balls_into_bins_offset(k: int, rng: np.random.Generator) -> int:
    """Uniform transmit offset in {0, ..., k-1} for one k-round slot window."""
    if k < 1:
        raise InvalidParameterError(f"need k >= 1, got {k}")
    return int(rng.integers(0, k))


def green_decay_schedule(k: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Offsets transmitted during one k-round contention window.

    The station always transmits at offset 0. For offsets 1..k-1 in order it
    flips a fair coin and transmits at the first offset whose coin is 1, then
    stops; if every coin is 0 it transmits only at offset 0. The k-1 coins are
    drawn as one batch; entries past the first 1 are unused. Result is (0,) or
    (0, j) with 1 <= j <= k-1, so one invocation costs 1 or 2 transmissions.
    """
    if k < 2:
        raise InvalidParameterError(f"need k >= 2, got {k}")
    coins = rng.integers(0, 2, size=k - 1)
    hits = np.flatnonzero(coins)
    if hits.size == 0:
        return (0,)
    return (0, int(hits[0]) + 1)


def _first_window(reception_round: int, window: int) -> int:
    """First multiple of window strictly after the reception round."""
    return window * (-((reception_round + 1) // -window))


# ---------------------------------------------------------------------------
# Energy-parameterized broadcast (protocol name "ggb")
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GgbParams:
    """Derived constants for the energy-parameterized schedule.

    a: number of k-round slot windows per phase.
    k: rounds per slot window (24 * ceil(n^(1/phi)) + 1).
    t_ph: phase length in rounds (a * k).
    repeats: phases executed per station, which is also its exact energy.
    geo_continue_prob: q = phi / n^(1/phi) for the slot-window draw.
    """

    n: int
    phi: float
    eps: float
    a: int
    k: int
    t_ph: int
    repeats: int
    geo_continue_prob: float


def ggb_params(n: int, phi: float, eps: float) -> GgbParams:
    """Resolve the derived constants for energy parameter phi and failure
    budget eps.

    Requires n >= 4, phi >= 1, 0 < eps < 1, and phi * log2(phi) < log2(n)
    (equivalently phi < n^(1/phi)), which keeps the per-phase slot count
    positive and the geometric continue-probability below 1. Larger phi values
    are accepted with a warning once the clean time/energy tradeoff regime is
    left behind.
    """
    if n < 4:
        raise InvalidParameterError(f"need n >= 4, got {n}")
    if phi < 1:
        raise InvalidParameterError(f"need phi >= 1, got {phi}")
    if not (0.0 < eps < 1.0):
        raise InvalidParameterError(f"need 0 < eps < 1, got {eps}")
    log_n = math.log2(n)
    phi_log_phi = phi * math.log2(phi) if phi > 1 else 0.0
    if phi_log_phi >= log_n:
        raise InvalidParameterError(
            f"phi={phi} too large for n={n}: need phi*log2(phi) < log2(n)"
        )
    log_log_n = math.log2(log_n)
    if phi >= log_n / log_log_n:
        warnings.warn(
            f"phi={phi} is at or above log n/log log n ({log_n / log_log_n:.3f}) "
            f"for n={n}; the success guarantee no longer applies",
            stacklevel=2,
        )
    elif phi > log_n / (2 * log_log_n):
        warnings.warn(
            f"phi={phi} exceeds log n/(2 log log n) ({log_n / (2 * log_log_n):.3f}) "
            f"for n={n}; the time bound degrades in this range",
            stacklevel=2,
        )
    root = n ** (1.0 / phi)
    a = _snap_ceil(phi * log_n / (log_n - phi_log_phi))
    k = 24 * _snap_ceil(root) + 1
    repeats = _snap_ceil(phi * (1.0 + math.log2(2.0 / eps) / log_n))
    return GgbParams(
        n=n,
        phi=phi,
        eps=eps,
        a=a,
        k=k,
        t_ph=a * k,
        repeats=repeats,
        geo_continue_prob=phi / root,
    )


@dataclass(frozen=True)
class GgbProtocol:
    """Schedule builder for the energy-parameterized protocol.

    Per phase the station waits for the next phase boundary, draws a
    geometric slot index x (continue probability q), skips min(x, a) - 1 slot
    windows of k rounds, and transmits at a uniform offset inside the next
    slot window. It runs `repeats` phases and transmits exactly once per
    phase, so its energy is exactly `repeats` on every tape.

    RNG draw order: all `repeats` geometric draws first (one uniform each),
    then all `repeats` slot offsets (one batched integer draw).
    """

    params: GgbParams

    def build(self, reception_round: int, rng: np.random.Generator) -> StationSchedule:
        p = self.params
        xs = sample_geo(p.geo_continue_prob, rng, size=p.repeats)
        offsets = rng.integers(0, p.k, size=p.repeats)
        boundary = _first_window(reception_round, p.t_ph)
        rounds = []
        last_end = boundary
        for i in range(p.repeats):
            slot = min(int(xs[i]), p.a) - 1
            start = boundary + slot * p.k
            rounds.append(start + int(offsets[i]))
            last_end = start + p.k
            boundary += p.t_ph
        return StationSchedule(tuple(rounds), last_end)

    def describe(self) -> str:
        p = self.params
        return (
            f"protocol=ggb n={p.n} phi={p.phi:g} eps={p.eps:g} "
            f"a={p.a} k={p.k} t_ph={p.t_ph} repeats={p.repeats}"
        )


# ---------------------------------------------------------------------------
# Low-energy broadcast without an energy knob (protocol name "gb")
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GbParams:
    """Derived constants for the low-energy schedule.

    ll: phases per epoch (ceil(log2 log2 n)).
    k: sub-slot length in rounds (24 * ceil(log2 n) + 1).
    t_ph: phase window length, 3k (sub-slots A, B, C of k rounds each).
    repeats: phase windows each station participates in (2*ceil(log2 n) + 2).
    """

    n: int
    ll: int
    k: int
    t_ph: int
    repeats: int


def gb_params(n: int) -> GbParams:
    if n < 4:
        raise InvalidParameterError(f"need n >= 4, got {n}")
    log_n = math.ceil(math.log2(n))
    ll = _snap_ceil(math.log2(math.log2(n)))
    k = 24 * log_n + 1
    return GbParams(n=n, ll=ll, k=k, t_ph=3 * k, repeats=2 * log_n + 2)


@dataclass(frozen=True)
class GbProtocol:
    """Schedule builder for the low-energy protocol.

    Global time is divided into 3k-round phase windows; window number w has
    phase index w mod ll, and a run of ll consecutive phases (index 0 first)
    forms an epoch. Each window splits into sub-slots A, B, C of k rounds.

    A station participates in `repeats` consecutive windows starting at the
    first boundary after its reception round and tracks two variables, its
    state (new or normal) and a phase pick myPhase:

    * A station that is still new at a phase-index-0 window becomes normal
      before acting, so it never uses sub-slot A there.
    * While new (joining mid-epoch): one slot-window transmission in sub-slot
      A, then it goes normal.
    * While normal, every phase-index-0 window: one slot-window transmission
      in sub-slot B.
    * Whenever it acted as new or the phase index is 0, it re-draws myPhase
      uniformly from {0..ll-1} (so once per epoch boundary plus once at join).
    * In any window whose phase index equals myPhase it runs the two-shot
      contention scheme of green_decay_schedule in sub-slot C.

    Per window the RNG draws are, in order: the sub-slot transmit offset (if
    the station transmits in A or B), the myPhase redraw (if due), then the
    contention coins (if sub-slot C is used). Energy per tape is at most
    1 + 3 * (ceil(repeats/ll) + 1): one join transmission plus at most one
    slot transmission and one two-shot contention per epoch touched.
    """

    params: GbParams

    def build(self, reception_round: int, rng: np.random.Generator) -> StationSchedule:
        p = self.params
        start = _first_window(reception_round, p.t_ph)
        rounds: list[int] = []
        state_new = True
        my_phase = -1
        w = start
        for _ in range(p.repeats):
            phase = (w // p.t_ph) % p.ll
            if phase == 0 and state_new:
                state_new = False
            if state_new:
                rounds.append(w + balls_into_bins_offset(p.k, rng))
            elif phase == 0:
                rounds.append(w + p.k + balls_into_bins_offset(p.k, rng))
            if phase == 0 or state_new:
                state_new = False
                my_phase = int(rng.integers(0, p.ll))
            if phase == my_phase:
                for off in green_decay_schedule(p.k, rng):
                    rounds.append(w + 2 * p.k + off)
            w += p.t_ph
        return StationSchedule(tuple(rounds), start + p.repeats * p.t_ph)

    def describe(self) -> str:
        p = self.params
        return (
            f"protocol=gb n={p.n} ll={p.ll} k={p.k} t_ph={p.t_ph} repeats={p.repeats}"
        )


# ---------------------------------------------------------------------------
# Classic decay baseline and fixed patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayBaselineProtocol:
    """Energy-oblivious baseline: repeated truncated-decay windows.

    Uses k = 2*ceil(log2 n) rounds per window and the same number of windows.
    In each window the station transmits in rounds 1..X of the window, where X
    is the index of its first fair-coin 1, capped at k. All window coins are
    drawn as one (repeats, k) batch; entries past the first 1 in a row are
    unused. Expected energy per window is just under 2, but the maximum over
    many stations grows with the network size, which is what the low-energy
    protocol avoids.
    """

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParameterError(f"need n >= 2, got {self.n}")

    @property
    def k(self) -> int:
        return 2 * math.ceil(math.log2(self.n))

    @property
    def repeats(self) -> int:
        return 2 * math.ceil(math.log2(self.n))

    def build(self, reception_round: int, rng: np.random.Generator) -> StationSchedule:
        k, repeats = self.k, self.repeats
        start = _first_window(reception_round, k)
        coins = rng.integers(0, 2, size=(repeats, k))
        rounds = []
        for j in range(repeats):
            hits = np.flatnonzero(coins[j])
            x = int(hits[0]) + 1 if hits.size else k
            base = start + j * k
            rounds.extend(range(base, base + x))
        return StationSchedule(tuple(rounds), start + repeats * k)

    def describe(self) -> str:
        return f"protocol=decay-baseline n={self.n} k={self.k} repeats={self.repeats}"


@dataclass(frozen=True)
class FixedPatternProtocol:
    """Deterministic pattern: transmit at the given offsets after reception.

    Offset o maps to absolute round reception_round + 1 + o, so offset 0 is
    the first round after reception. Useful as a baseline and as the witness
    that deterministic schedules cannot break symmetric neighborhoods.
    """

    offsets: tuple[int, ...]

    def __post_init__(self):
        if any(o < 0 for o in self.offsets):
            raise InvalidParameterError(f"offsets must be >= 0, got {self.offsets}")
        if len(set(self.offsets)) != len(self.offsets):
            raise InvalidParameterError(f"duplicate offsets in {self.offsets}")

    def build(self, reception_round: int, rng: np.random.Generator) -> StationSchedule:
        rounds = tuple(sorted(reception_round + 1 + o for o in self.offsets))
        finish = rounds[-1] + 1 if rounds else reception_round + 1
        return StationSchedule(rounds, finish)

    def describe(self) -> str:
        return f"protocol=fixed offsets={','.join(str(o) for o in self.offsets)}"


def make_protocol(name: str, n: int, phi: float | None = None, eps: float | None = None):
    """Instantiate a protocol by its registry name.

    Names: "ggb" (needs phi and eps), "gb", "decay-baseline", and
    "fixed:<comma-separated offsets>" (e.g. "fixed:0,5").
    """
    if name == "ggb":
        if phi is None or eps is None:
            raise InvalidParameterError("protocol ggb needs --phi and --eps")
        return GgbProtocol(ggb_params(n, phi, eps))
    if name == "gb":
        return GbProtocol(gb_params(n))
    if name == "decay-baseline":
        return DecayBaselineProtocol(n)
    if name.startswith("fixed:"):
        spec = name[len("fixed:"):]
        try:
            offsets = tuple(int(part) for part in spec.split(",") if part != "")
        except ValueError:
            raise InvalidParameterError(f"bad fixed offsets {spec!r}")
        if not offsets:
            raise InvalidParameterError("fixed protocol needs at least one offset")
        return FixedPatternProtocol(offsets)
    raise InvalidParameterError(f"unknown protocol {name!r}")
