"""Slotted Monte Carlo simulation of the cognitive-relay protocol.

Each slot consumes eight uniform draws, one per random event, taken from a
Philox counter stream keyed by the seed: draw ``j`` of slot ``t`` is word
``8*t + j`` of the stream.  A chunk of slots can therefore be generated
without touching any other chunk, and dominant- and original-mode runs with
the same seed see the same arrivals, sensing outcomes and channel states.

Per-slot order: arrivals, then the primary transmits if its queue is
non-empty (the secondary stays silent when it detects it, otherwise the two
collide), otherwise the secondary transmits unless it raises a false alarm,
serving the relay queue before its own.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _slots_py as K
from ._backend import get_kernel
from .model import SystemConfig, check

DRAWS_PER_SLOT = 8
CHUNK_SLOTS = 1 << 16
Z95 = 1.96
EPS_SLOPE = 1e-6
N_BATCHES = 32


class Verdict(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


class RelayOverflowError(AssertionError):
    pass


def _thresholds(config: SystemConfig) -> np.ndarray:
    return np.array([
        config.lambda_p, config.lambda_s, config.p_d,
        1.0 - config.p_pp, 1.0 - config.p_ps, 1.0 - config.p_f,
        1.0 - config.p_sp, 1.0 - config.p_ss,
    ])


_BITS = (1 << np.arange(DRAWS_PER_SLOT)).astype(np.uint8)


def slot_uniforms(seed: int, start: int, n: int) -> np.ndarray:
    """Uniforms in [0, 1) for slots ``start .. start+n-1``, shape ``(n, 8)``."""
    # Philox emits four 64-bit words per counter step, so two steps per slot
    bitgen = np.random.Philox(key=seed, counter=[2 * start, 0, 0, 0])
    raw = bitgen.random_raw(DRAWS_PER_SLOT * n).reshape(n, DRAWS_PER_SLOT)
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def slot_flags(config: SystemConfig, seed: int, start: int, n: int) -> np.ndarray:
    """Event bitmask per slot (bit order as in ``_slots_py``)."""
    hits = slot_uniforms(seed, start, n) < _thresholds(config)
    return (hits.astype(np.uint8) * _BITS).sum(axis=1, dtype=np.uint8)


@dataclass(frozen=True)
class Estimate:
    """Conditional frequency with a 95% confidence half-width.

    ``half_width`` comes from batch means (Student t over per-batch ratios),
    which accounts for the correlation between successive slots.
    ``binomial_half_width`` is the i.i.d. figure ``1.96 sqrt(p(1-p)/n)``,
    kept for reference; it is too narrow whenever the queues are correlated.
    """

    value: float
    half_width: float
    n: int
    binomial_half_width: float = math.nan

    @classmethod
    def from_batches(cls, hits, totals) -> "Estimate":
        hits = np.asarray(hits, dtype=np.float64)
        totals = np.asarray(totals, dtype=np.float64)
        n = int(totals.sum())
        if n == 0:
            return cls(math.nan, math.nan, 0)
        p = float(hits.sum()) / n
        binom = Z95 * math.sqrt(p * (1.0 - p) / n)
        used = totals > 0
        b = int(used.sum())
        if b < 2:
            return cls(p, binom, n, binom)
        ratios = hits[used] / totals[used]
        sd = float(np.std(ratios, ddof=1))
        half = float(stats.t.ppf(0.975, b - 1)) * sd / math.sqrt(b)
        return cls(p, half, n, binom)

    def covers(self, x: float, slack: float = 0.0) -> bool:
        return abs(self.value - x) <= self.half_width + slack


@dataclass(frozen=True)
class SimulationResult:
    slots: int
    seed: int
    dominant: bool
    emp_mu_p: Estimate
    emp_lambda_ps: Estimate
    emp_mu_ps: Estimate
    emp_mu_s: Estimate
    mean_qp: float
    mean_qps: float
    mean_qs: float
    relay_occupancy_histogram: np.ndarray
    collisions: int
    stability_verdict: dict
    counts: dict
    final_qp: int
    final_qps: int
    final_qs: int

    def to_dict(self) -> dict:
        def est(e):
            return {"value": _finite(e.value), "ci_halfwidth": _finite(e.half_width),
                    "binomial_halfwidth": _finite(e.binomial_half_width), "n": e.n}
        return {
            "slots": self.slots, "seed": self.seed, "dominant": self.dominant,
            "emp_mu_p": est(self.emp_mu_p),
            "emp_lambda_ps": est(self.emp_lambda_ps),
            "emp_mu_ps": est(self.emp_mu_ps),
            "emp_mu_s": est(self.emp_mu_s),
            "mean_qp": self.mean_qp, "mean_qps": self.mean_qps,
            "mean_qs": self.mean_qs,
            "relay_occupancy_histogram": [float(x) for x in self.relay_occupancy_histogram],
            "collisions": self.collisions,
            "stability_verdict": {k: v.value for k, v in self.stability_verdict.items()},
            "counts": dict(self.counts),
            "final": {"q_p": self.final_qp, "q_ps": self.final_qps, "q_s": self.final_qs},
        }


def _finite(x):
    return x if math.isfinite(x) else None


COUNTER_NAMES = (
    "pu_arrivals", "su_arrivals", "pu_attempts", "pu_direct", "relay_admissions",
    "collisions", "relay_served", "own_virtual", "own_served", "relay_virtual",
    "sum_qp", "sum_qps", "sum_qs", "relay_full", "idle_slots",
)


def _window_verdict(sums: np.ndarray, sizes: np.ndarray) -> Verdict:
    means = sums / sizes
    centers = np.cumsum(sizes) - sizes / 2.0
    slope = np.polyfit(centers, means, 1)[0] if len(means) > 1 else 0.0
    if slope < EPS_SLOPE and means[-1] <= 10.0 * np.median(means):
        return Verdict.STABLE
    if slope > 10.0 * EPS_SLOPE:
        return Verdict.UNSTABLE
    return Verdict.INCONCLUSIVE


def simulate(config: SystemConfig, n_slots: int, seed: int, dominant: bool = True,
             window_count: int = 10, backend: str | None = None) -> SimulationResult:
    """Run the slotted protocol for ``n_slots`` slots from empty queues.

    Empirical rates:

    - ``emp_mu_p``: primary departures (direct or relay-acknowledged) per
      primary transmission attempt.
    - ``emp_lambda_ps``: relay admissions per slot.
    - ``emp_mu_ps``: relay service opportunities per slot, i.e. slots with an
      idle primary, no false alarm and a good S_s->D_p link, whether or not a
      relayed packet was waiting.
    - ``emp_mu_s``: the same for the secondary's own queue, which also
      requires an empty relay queue.

    The last two count virtual service so they estimate per-slot service
    rates even when the queue happened to be empty.
    """
    check(config, allow_degenerate=True)
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    if window_count < 1:
        raise ValueError("window_count must be >= 1")
    _, run_chunk = get_kernel(backend)
    m = config.m
    window_len = max(1, -(-n_slots // window_count))
    n_windows = -(-n_slots // window_len)

    state = np.zeros(3, dtype=np.int64)
    counts = np.zeros(K.N_COUNTERS, dtype=np.int64)
    hist = np.zeros(m + 1, dtype=np.int64)
    win = np.zeros((3, n_windows), dtype=np.int64)

    n_batches = min(N_BATCHES, n_slots)
    edges = [len(b) for b in np.array_split(np.arange(n_slots), n_batches)]
    batch_counts = np.zeros((n_batches, K.N_COUNTERS), dtype=np.int64)
    start = 0
    for b, size in enumerate(edges):
        before = counts.copy()
        end = start + size
        while start < end:
            n = min(CHUNK_SLOTS, end - start)
            flags = slot_flags(config, seed, start, n)
            status = run_chunk(flags, state, m, bool(dominant), counts, hist,
                               start, window_len, win[0], win[1], win[2])
            if status:
                raise RelayOverflowError(f"relay queue exceeded m={m}")
            start += n
        batch_counts[b] = counts - before

    c = dict(zip(COUNTER_NAMES, (int(v) for v in counts)))
    bc = {name: batch_counts[:, i] for i, name in enumerate(COUNTER_NAMES)}
    slots_per_batch = np.array(edges)
    sizes = np.full(n_windows, window_len, dtype=np.float64)
    sizes[-1] = n_slots - window_len * (n_windows - 1)
    verdict = {
        "Q_p": _window_verdict(win[0], sizes),
        # a finite buffer cannot grow without bound
        "Q_ps": Verdict.STABLE,
        "Q_s": _window_verdict(win[2], sizes),
    }
    return SimulationResult(
        slots=n_slots, seed=seed, dominant=bool(dominant),
        emp_mu_p=Estimate.from_batches(bc["pu_direct"] + bc["relay_admissions"],
                                       bc["pu_attempts"]),
        emp_lambda_ps=Estimate.from_batches(bc["relay_admissions"], slots_per_batch),
        emp_mu_ps=Estimate.from_batches(bc["relay_virtual"], slots_per_batch),
        emp_mu_s=Estimate.from_batches(bc["own_virtual"], slots_per_batch),
        mean_qp=c["sum_qp"] / n_slots,
        mean_qps=c["sum_qps"] / n_slots,
        mean_qs=c["sum_qs"] / n_slots,
        relay_occupancy_histogram=hist / n_slots,
        collisions=c["collisions"],
        stability_verdict=verdict,
        counts=c,
        final_qp=int(state[0]), final_qps=int(state[1]), final_qs=int(state[2]),
    )


def stability_probe(config: SystemConfig, n_slots: int, seed: int,
                    window_count: int = 10, dominant: bool = True) -> dict:
    """Empirical stability verdict for ``Q_p``, ``Q_ps`` and ``Q_s``.

    A queue is Stable when the regression slope of its per-window mean length
    is below 1e-6 packets/slot and the last window's mean is at most ten
    times the median window mean, Unstable when the slope exceeds 1e-5, and
    Inconclusive otherwise.
    """
    if window_count < 4:
        raise ValueError("window_count must be >= 4")
    res = simulate(config, n_slots, seed, dominant=dominant, window_count=window_count)
    return res.stability_verdict
