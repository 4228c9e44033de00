"""Independent oracles for the probability facts the protocols rely on.

Everything here is implemented against the definitions, not against the
protocol code: exact big-integer counting where feasible and seeded,
vectorized Monte Carlo with Wilson confidence intervals where not. The
simulator and schedule builders are deliberately not imported, so these
routines can serve as a second route when validating simulation results.

The checks covered:

* no-singleton probability of m uniform balls in k bins, exactly, and the
  derived slot-window success bound (every m up to the occupancy cap stays
  below 1/(2 n^(1/phi)));
* the truncated-geometric slot-count argument behind the phase analysis
  (some slot value is chosen at least once and at most the occupancy cap);
* success probability of the two-shot contention window (a common listener
  is informed with probability 2/3 in the untruncated limit and above 1/2
  once the window spans twice log n);
* collision probability of iid transmit-slot draws: sum of squared
  probabilities is at least 1/(2k) for mean-k distributions with even k;
* the counting bound on distinguishable transmission patterns,
  alpha(T, E) = sum_{i<=E} C(T, i) <= (e T / E)^E.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist

import numpy as np

from .errors import BudgetExceededError, InvalidParameterError

__all__ = [
    "wilson_interval",
    "p_no_singleton_exact",
    "Lemma1Report",
    "check_lemma1",
    "DiscreteDistribution",
    "collision_prob_exact",
    "CollisionReport",
    "check_collision_bound",
    "pattern_count",
    "pattern_count_bound",
    "PatternReport",
    "check_pattern_bound",
    "McReport",
    "green_decay_success_mc",
    "slot_choice_mc",
    "OracleResult",
    "write_oracle_csv",
    "DEFAULT_COUNT_BUDGET",
]

DEFAULT_COUNT_BUDGET = 500_000_000  # in m*m*k units, see p_no_singleton_exact


def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not (0 <= successes <= trials):
        raise InvalidParameterError(f"bad counts {successes}/{trials}")
    if not (0.0 < confidence < 1.0):
        raise InvalidParameterError(f"bad confidence {confidence}")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# Exact no-singleton counting
# ---------------------------------------------------------------------------


def _no_singleton_counts(k: int, m_max: int) -> list[int]:
    """counts[m] = assignments of m labeled balls to k labeled bins in which
    no bin holds exactly one ball, for every m in 0..m_max.

    Inclusion-exclusion over the set of bins holding exactly one ball:
    counts[m] = sum_s (-1)^s C(k,s) (m)_s (k-s)^(m-s). The power table is
    maintained incrementally across m, so the whole row costs
    O(m_max * min(m_max, k)) big-integer multiplications.
    """
    smax = min(k, m_max)
    counts: list[int] = []
    pw: list[int] = []  # pw[s] = (k-s)^(m-s), appended when m reaches s
    for m in range(m_max + 1):
        if m <= smax:
            pw.append(1)
        for s in range(min(m - 1, smax) + 1):
            pw[s] *= k - s
        total = 0
        falling = 1  # (m)_s
        comb = 1  # C(k, s)
        for s in range(min(m, smax) + 1):
            term = comb * falling * pw[s]
            total += -term if s & 1 else term
            falling *= m - s
            comb = comb * (k - s) // (s + 1)
        counts.append(total)
    return counts


def p_no_singleton_exact(m: int, k: int, budget: int = DEFAULT_COUNT_BUDGET) -> Fraction:
    """Exact probability that m uniform balls in k bins leave no bin with
    exactly one ball.

    Work is bounded by the m*m*k budget; a call that would exceed it raises
    BudgetExceededError so callers can fall back to Monte Carlo.
    """
    if m < 0 or k < 1:
        raise InvalidParameterError(f"need m >= 0 and k >= 1, got m={m}, k={k}")
    if m * m * k > budget:
        raise BudgetExceededError(f"m^2*k = {m * m * k} exceeds budget {budget}")
    return Fraction(_no_singleton_counts(k, m)[m], k**m)


@dataclass(frozen=True)
class Lemma1Report:
    """Outcome of the slot-window success check across all occupancies."""

    n: int
    phi: float
    k: int
    m_max: int
    bound: Fraction
    bound_exact: bool  # bound is the exact rational 1/(2 n^(1/phi))
    max_ratio: float  # worst p/bound over m in 1..m_max
    worst_m: int
    passed: bool
    exact: bool  # True: exact counting; False: Monte Carlo fallback
    confidence: float | None  # None when exact

    def as_result(self) -> "OracleResult":
        return OracleResult(
            operation="lemma1",
            params={"n": self.n, "phi": self.phi, "k": self.k, "m_max": self.m_max,
                    "exact": self.exact},
            value=self.max_ratio,
            bound=1.0,
            passed=self.passed,
        )


def check_lemma1(
    n: int,
    phi: float,
    budget: int = DEFAULT_COUNT_BUDGET,
    mc_trials: int = 4000,
    seed: int = 0,
) -> Lemma1Report:
    """Check that one slot window misses a singleton with probability at most
    1/(2 n^(1/phi)) for every participant count m up to the occupancy cap
    ceil((12/phi) n^(1/phi) ln n), with k = 24 ceil(n^(1/phi)) + 1 bins.

    Uses exact counting when the work budget allows; otherwise falls back to
    seeded Monte Carlo per m, comparing the 99% Wilson upper bound against
    the threshold (the report flags this with exact=False).
    """
    if n < 2:
        raise InvalidParameterError(f"need n >= 2, got {n}")
    if phi < 1:
        raise InvalidParameterError(f"need phi >= 1, got {phi}")
    root = n ** (1.0 / phi)
    k = 24 * math.ceil(root) + 1
    m_max = math.ceil((12.0 / phi) * root * math.log(n))
    c = round(root)
    bound_exact = phi == int(phi) and c ** int(phi) == n
    bound = Fraction(1, 2 * c) if bound_exact else Fraction(1.0 / (2.0 * root))

    try:
        if m_max * m_max * k > budget:
            raise BudgetExceededError(f"m_max^2*k = {m_max * m_max * k} > {budget}")
        counts = _no_singleton_counts(k, m_max)
        max_ratio, worst_m, passed = 0.0, 0, True
        for m in range(1, m_max + 1):
            p = Fraction(counts[m], k**m)
            if p > bound:
                passed = False
            ratio = float(p / bound)
            if ratio > max_ratio:
                max_ratio, worst_m = ratio, m
        return Lemma1Report(n, phi, k, m_max, bound, bound_exact,
                            max_ratio, worst_m, passed, True, None)
    except BudgetExceededError:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        fbound = float(bound)
        max_ratio, worst_m, passed = 0.0, 0, True
        for m in range(1, m_max + 1):
            bins = rng.integers(0, k, size=(mc_trials, m))
            flat = bins + (np.arange(mc_trials) * k)[:, None]
            occ = np.bincount(flat.ravel(), minlength=mc_trials * k).reshape(mc_trials, k)
            misses = int((~(occ == 1).any(axis=1)).sum())
            upper = wilson_interval(misses, mc_trials, 0.99)[1]
            if upper > fbound:
                passed = False
            ratio = (misses / mc_trials) / fbound
            if ratio > max_ratio:
                max_ratio, worst_m = ratio, m
        return Lemma1Report(n, phi, k, m_max, bound, bound_exact,
                            max_ratio, worst_m, passed, False, 0.99)


# ---------------------------------------------------------------------------
# Discrete distributions and the collision bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite distribution over integer transmit slots with exact weights.

    pmf maps value -> probability (Fractions). Weights must be positive and
    sum to 1 within 1e-12; truncated constructions leave a tail below that
    tolerance and remain usable for the exact collision arithmetic.
    """

    pmf: dict[int, Fraction] = field()

    def __post_init__(self):
        if not self.pmf:
            raise InvalidParameterError("empty distribution")
        total = Fraction(0)
        for v, p in self.pmf.items():
            if not isinstance(v, int):
                raise InvalidParameterError(f"non-integer support value {v!r}")
            if p <= 0:
                raise InvalidParameterError(f"non-positive probability at {v}")
            total += p
        if abs(float(total - 1)) > 1e-12:
            raise InvalidParameterError(f"probabilities sum to {float(total)}, not 1")

    def mean(self) -> Fraction:
        return sum((Fraction(v) * p for v, p in self.pmf.items()), Fraction(0))

    @staticmethod
    def uniform_range(lo: int, hi: int) -> "DiscreteDistribution":
        """Uniform on {lo, ..., hi} inclusive."""
        if hi < lo:
            raise InvalidParameterError(f"empty range {lo}..{hi}")
        p = Fraction(1, hi - lo + 1)
        return DiscreteDistribution({v: p for v in range(lo, hi + 1)})

    @staticmethod
    def point_mass(v: int) -> "DiscreteDistribution":
        return DiscreteDistribution({v: Fraction(1)})

    @staticmethod
    def two_point(v1: int, v2: int, p1: Fraction = Fraction(1, 2)) -> "DiscreteDistribution":
        if v1 == v2:
            raise InvalidParameterError("two_point needs distinct values")
        p1 = Fraction(p1)
        return DiscreteDistribution({v1: p1, v2: 1 - p1})

    @staticmethod
    def truncated_geometric(q, tail: float = 1e-12) -> "DiscreteDistribution":
        """Geometric on {1, 2, ...} with continue probability q, truncated at
        the first point where the remaining tail q^N drops below `tail`.

        Pass q as a Fraction for exact arithmetic (e.g. Fraction(k-1, k) for
        mean k); floats are converted to their exact binary value.
        """
        q = Fraction(q)
        if not (0 <= q < 1):
            raise InvalidParameterError(f"need 0 <= q < 1, got {q}")
        if q == 0:
            return DiscreteDistribution.point_mass(1)
        pmf: dict[int, Fraction] = {}
        weight = 1 - q  # q^(i-1) * (1-q)
        tail_left = Fraction(1)
        i = 1
        while float(tail_left) > tail:
            pmf[i] = weight
            tail_left *= q
            weight *= q
            i += 1
        return DiscreteDistribution(pmf)


def collision_prob_exact(dist: DiscreteDistribution) -> Fraction:
    """Probability that two independent draws from dist coincide."""
    return sum((p * p for p in dist.pmf.values()), Fraction(0))


@dataclass(frozen=True)
class CollisionReport:
    value: Fraction
    mean: Fraction
    k: int | None  # the even-integer mean when the bound applies
    bound: Fraction | None
    applicable: bool
    passed: bool

    def as_result(self) -> "OracleResult":
        return OracleResult(
            operation="fact1",
            params={"mean": float(self.mean), "applicable": self.applicable},
            value=float(self.value),
            bound=float(self.bound) if self.bound is not None else None,
            passed=self.passed,
        )


def check_collision_bound(dist: DiscreteDistribution) -> CollisionReport:
    """Check the lower bound sum p_i^2 >= 1/(2k) for mean-k slot
    distributions whenever k is an even integer >= 2.

    Truncated constructions can miss an integer mean by their sub-1e-12
    tail, so the mean is matched to the nearest integer within 1e-9. When
    the bound does not apply the check passes vacuously and reports
    applicable=False.
    """
    value = collision_prob_exact(dist)
    mean = dist.mean()
    k = round(float(mean))
    applicable = abs(float(mean) - k) <= 1e-9 and k >= 2 and k % 2 == 0
    if not applicable:
        return CollisionReport(value, mean, None, None, False, True)
    bound = Fraction(1, 2 * k)
    return CollisionReport(value, mean, k, bound, True, value >= bound)


# ---------------------------------------------------------------------------
# Pattern counting bound
# ---------------------------------------------------------------------------


def pattern_count(T: int, E: int) -> int:
    """Number of transmission patterns over T rounds using at most E of them:
    alpha(T, E) = sum_{i=0}^{E} C(T, i). Exact."""
    if T < 0 or not (0 <= E <= T):
        raise InvalidParameterError(f"need 0 <= E <= T, got T={T}, E={E}")
    return sum(math.comb(T, i) for i in range(E + 1))


def pattern_count_bound(T: int, E: int) -> float:
    """Upper bound (e T / E)^E for alpha(T, E); requires E >= 1."""
    if E < 1 or T < E:
        raise InvalidParameterError(f"need 1 <= E <= T, got T={T}, E={E}")
    return math.exp(E * (1.0 + math.log(T) - math.log(E)))


@dataclass(frozen=True)
class PatternReport:
    T: int
    E: int
    count: int
    bound: float
    passed: bool

    def as_result(self) -> "OracleResult":
        return OracleResult(
            operation="alpha",
            params={"T": self.T, "E": self.E},
            value=float(self.count),
            bound=self.bound,
            passed=self.passed,
        )


def check_pattern_bound(T: int, E: int) -> PatternReport:
    """alpha(T, E) <= (e T / E)^E, with a 1e-9 relative float guard."""
    count = pattern_count(T, E)
    bound = pattern_count_bound(T, E)
    return PatternReport(T, E, count, bound, float(count) <= bound * (1.0 + 1e-9))


# ---------------------------------------------------------------------------
# Monte-Carlo estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class McReport:
    successes: int
    trials: int
    frequency: float
    wilson_low: float
    wilson_high: float
    confidence: float
    params: dict = field(default_factory=dict)

    def as_result(self) -> "OracleResult":
        return OracleResult(
            operation=str(self.params.get("operation", "mc")),
            params={k: v for k, v in self.params.items() if k != "operation"},
            value=self.frequency,
            bound=None,
            passed=True,
        )


def _mc_report(operation: str, successes: int, trials: int, confidence: float, **params) -> McReport:
    low, high = wilson_interval(successes, trials, confidence)
    return McReport(successes, trials, successes / trials, low, high, confidence,
                    {"operation": operation, **params})


def green_decay_success_mc(
    n: int, k: int, trials: int, seed: int = 0, confidence: float = 0.99
) -> McReport:
    """Estimate the probability that a station listening to n stations which
    all start a k-round two-shot contention window together hears a clean
    transmission.

    Every participant transmits at offset 0 and at its first fair-coin
    success among offsets 1..k-1 (if any), so for n >= 2 the listener is
    informed exactly when some offset in 1..k-1 is picked by precisely one
    participant. Sampling draws each participant's stop offset directly from
    the geometric law of the coin sequence, which is an implementation
    independent of the schedule builder; a single listener with n = 1 always
    succeeds via the offset-0 transmission.
    """
    if n < 1 or k < 2 or trials < 1:
        raise InvalidParameterError(f"need n >= 1, k >= 2, trials >= 1")
    if n == 1:
        return _mc_report("thm4", trials, trials, confidence, n=n, k=k)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    successes = 0
    chunk = max(1, min(trials, 4_000_000 // n))
    left = trials
    while left:
        c = min(chunk, left)
        left -= c
        stops = rng.geometric(0.5, size=(c, n))
        stops[stops > k - 1] = 0  # coins never hit: only the offset-0 shot
        flat = stops + (np.arange(c) * k)[:, None]
        occ = np.bincount(flat.ravel(), minlength=c * k).reshape(c, k)
        successes += int((occ[:, 1:] == 1).any(axis=1).sum())
    return _mc_report("thm4", successes, trials, confidence, n=n, k=k)


def slot_choice_mc(
    n: int,
    n_hat: int,
    phi: float,
    trials: int,
    seed: int = 0,
    confidence: float = 0.99,
) -> McReport:
    """Estimate the probability that n_hat stations drawing capped geometric
    slot values Y = min(X, a) (continue probability q = phi/n^(1/phi),
    a = ceil(phi log n / (log n - phi log phi))) produce some slot value
    chosen at least once and at most ceil((12/phi) n^(1/phi) ln n) times.

    The per-value counts of the n_hat iid draws follow a multinomial law,
    which is sampled directly instead of materializing individual draws. The
    phase analysis needs this frequency to be at least 1 - 2/n^2.
    """
    if n < 4 or n_hat < 1 or trials < 1:
        raise InvalidParameterError("need n >= 4, n_hat >= 1, trials >= 1")
    log_n = math.log2(n)
    phi_log_phi = phi * math.log2(phi) if phi > 1 else 0.0
    if phi < 1 or phi_log_phi >= log_n:
        raise InvalidParameterError(f"phi={phi} out of range for n={n}")
    root = n ** (1.0 / phi)
    q = phi / root
    a = math.ceil(phi * log_n / (log_n - phi_log_phi))
    cap = math.floor((12.0 / phi) * root * math.log(n))
    pvec = np.array(
        [(q ** (y - 1)) * (1 - q) for y in range(1, a)] + [q ** (a - 1)], dtype=float
    )
    pvec /= pvec.sum()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    successes = 0
    chunk = max(1, min(trials, 2_000_000 // a))
    left = trials
    while left:
        c = min(chunk, left)
        left -= c
        counts = rng.multinomial(n_hat, pvec, size=c)
        ok = ((counts >= 1) & (counts <= cap)).any(axis=1)
        successes += int(ok.sum())
    return _mc_report("lemma2", successes, trials, confidence,
                      n=n, n_hat=n_hat, phi=phi, a=a, cap=cap)


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    operation: str
    params: dict
    value: float
    bound: float | None
    passed: bool

    def csv_row(self) -> list[str]:
        return [
            self.operation,
            json.dumps(self.params, sort_keys=True),
            repr(self.value),
            "" if self.bound is None else repr(self.bound),
            "true" if self.passed else "false",
        ]


def write_oracle_csv(results: list[OracleResult], path: str) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["operation", "params", "value", "bound", "passed"])
        for r in results:
            writer.writerow(r.csv_row())
