"""Exact stationary analysis of the dominant system as a Markov chain.

States are ``(q_p, q_ps)`` at slot boundaries, with the primary queue
truncated at ``k_max`` by dropping arrivals there.  The transition law is the
simulator's slot dynamics in dominant mode (the secondary always has a packet
to send), so the secondary's own queue does not enter the state.  Rates are
derived by weighting per-state event probabilities with the stationary
vector, using the same definitions as the simulator's empirical rates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import SystemConfig, check

DEFAULT_K_MAX = 200
MAX_STATES = 10 ** 6
TRUNCATION_LIMIT = 1e-8
POWER_TOL = 1e-12
POWER_CAP = 10 ** 6


class OracleError(RuntimeError):
    pass


class OracleNonConvergence(OracleError):
    pass


class TruncationError(OracleError):
    def __init__(self, message, k_max, truncation_mass):
        super().__init__(message)
        self.k_max = k_max
        self.truncation_mass = truncation_mass


@dataclass(frozen=True)
class Chain:
    """Sparse transition matrix plus per-state event probabilities."""

    config: SystemConfig
    k_max: int
    P: sp.csr_matrix
    attempt: np.ndarray        # P(primary transmits)
    depart: np.ndarray         # P(primary packet leaves Q_p)
    admit: np.ndarray          # P(packet enters relay buffer)
    relay_virtual: np.ndarray  # P(relay service opportunity)
    relay_served: np.ndarray   # P(relayed packet delivered)
    own_virtual: np.ndarray    # P(own-queue service opportunity)
    success_given_attempt: np.ndarray

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def n_states(self) -> int:
        return (self.k_max + 1) * (self.m + 1)

    def index(self, q_p: int, q_ps: int) -> int:
        return q_p * (self.m + 1) + q_ps


def build_chain(config: SystemConfig, k_max: int = DEFAULT_K_MAX) -> Chain:
    """Transition structure of the dominant-system chain over ``(q_p, q_ps)``."""
    check(config, allow_degenerate=True)
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    m = config.m
    lam, p_d, p_f = config.lambda_p, config.p_d, config.p_f
    p_pp, p_ps, p_sp = config.p_pp, config.p_ps, config.p_sp

    q, r = np.divmod(np.arange((k_max + 1) * (m + 1)), m + 1)
    idx = lambda qq, rr: qq * (m + 1) + rr  # noqa: E731
    src_all = idx(q, r)
    rows, cols, vals = [], [], []

    def add(src, dst, prob):
        keep = prob > 0.0
        rows.append(src[keep])
        cols.append(dst[keep])
        vals.append(prob[keep])

    lam_eff = np.where(q < k_max, lam, 0.0)
    room = r < m
    for arrived, pa in ((1, lam_eff), (0, 1.0 - lam_eff)):
        q1 = q + arrived
        busy = q1 > 0
        s, b = src_all[busy], pa[busy]
        qb, rb, roomb = q1[busy], r[busy], room[busy]
        # missed detection: collision, nothing moves
        add(s, idx(qb, rb), b * (1.0 - p_d))
        add(s, idx(qb - 1, rb), b * p_d * (1.0 - p_pp))
        relay = b * p_d * p_pp * (1.0 - p_ps)
        add(s[roomb], idx(qb[roomb] - 1, rb[roomb] + 1), relay[roomb])
        add(s[~roomb], idx(qb[~roomb], rb[~roomb]), relay[~roomb])
        add(s, idx(qb, rb), b * p_d * p_pp * p_ps)

        idle = ~busy
        s, b, ri = src_all[idle], pa[idle], r[idle]
        served = b * (1.0 - p_f) * (1.0 - p_sp) * (ri > 0)
        add(s, idx(0, np.maximum(ri - 1, 0)), served)
        add(s, idx(0, ri), b - served)

    n = (k_max + 1) * (m + 1)
    P = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))
    P.sum_duplicates()

    attempt = np.where(q > 0, 1.0, lam_eff)
    success = p_d * ((1.0 - p_pp) + p_pp * (1.0 - p_ps) * room)
    idle_p = 1.0 - attempt
    return Chain(
        config=config, k_max=k_max, P=P,
        attempt=attempt,
        depart=attempt * success,
        admit=attempt * p_d * p_pp * (1.0 - p_ps) * room,
        relay_virtual=idle_p * (1.0 - p_f) * (1.0 - p_sp),
        relay_served=idle_p * (1.0 - p_f) * (1.0 - p_sp) * (r > 0),
        own_virtual=idle_p * (1.0 - p_f) * (1.0 - config.p_ss) * (r == 0),
        success_given_attempt=success,
    )


@dataclass(frozen=True)
class JointStationary:
    k_max: int
    m: int
    pi: np.ndarray            # shape (k_max + 1, m + 1)
    truncation_mass: float
    mu_p: float
    lambda_ps: float
    mu_ps: float
    mu_s: float
    relay_throughput: float
    residual: float
    iterations: int

    @property
    def relay_marginal(self) -> np.ndarray:
        return self.pi.sum(axis=0)

    @property
    def primary_marginal(self) -> np.ndarray:
        return self.pi.sum(axis=1)

    def rates(self) -> dict:
        return {"mu_p": self.mu_p, "lambda_ps": self.lambda_ps,
                "mu_ps": self.mu_ps, "mu_s": self.mu_s}

    def to_dict(self) -> dict:
        return {
            "k_max": self.k_max, "m": self.m,
            "truncation_mass": self.truncation_mass,
            **self.rates(),
            "relay_throughput": self.relay_throughput,
            "residual": self.residual, "iterations": self.iterations,
            "relay_marginal": [float(x) for x in self.relay_marginal],
        }


def power_iteration(P, x0=None, tol: float = POWER_TOL, cap: int = POWER_CAP):
    """Left fixed vector of a row-stochastic sparse matrix.

    Iterates ``x <- x P`` until successive iterates differ by at most ``tol``
    in max norm.  Returns ``(x, iterations, residual)``.
    """
    n = P.shape[0]
    PT = sp.csr_matrix(P.T)
    if x0 is None:
        x = np.full(n, 1.0 / n)
    else:
        x = np.asarray(x0, dtype=np.float64).copy()
    for it in range(1, cap + 1):
        nxt = PT @ x
        nxt /= nxt.sum()
        diff = np.max(np.abs(nxt - x))
        x = nxt
        if diff <= tol:
            residual = float(np.max(np.abs(PT @ x - x)))
            return x, it, residual
    raise OracleNonConvergence(f"power iteration did not converge in {cap} iterations")


def stationary(chain: Chain, tol: float = POWER_TOL, cap: int = POWER_CAP,
               check_truncation: bool = True) -> JointStationary:
    """Stationary distribution of ``chain`` and the rates it implies."""
    x0 = np.zeros(chain.n_states)
    x0[0] = 1.0
    x, iterations, residual = power_iteration(chain.P, x0, tol=tol, cap=cap)
    pi = x.reshape(chain.k_max + 1, chain.m + 1)
    trunc = float(pi[-1].sum())
    if check_truncation and trunc > TRUNCATION_LIMIT:
        raise TruncationError(
            f"stationary mass {trunc:.3e} at q_p=k_max={chain.k_max}",
            chain.k_max, trunc)
    attempts = float(x @ chain.attempt)
    if attempts > 0.0:
        mu_p = float(x @ chain.depart) / attempts
    else:
        mu_p = float(x @ chain.success_given_attempt)
    return JointStationary(
        k_max=chain.k_max, m=chain.m, pi=pi, truncation_mass=trunc,
        mu_p=mu_p,
        lambda_ps=float(x @ chain.admit),
        mu_ps=float(x @ chain.relay_virtual),
        mu_s=float(x @ chain.own_virtual),
        relay_throughput=float(x @ chain.relay_served),
        residual=residual, iterations=iterations,
    )


def solve(config: SystemConfig, k_max: int = DEFAULT_K_MAX, tol: float = POWER_TOL,
          cap: int = POWER_CAP) -> JointStationary:
    """Build and solve the chain, doubling ``k_max`` while truncation is too heavy.

    Doubling stops early once the mass at the cap is not decaying
    geometrically (at least 1e-3, or shrinking less than tenfold per
    doubling): the primary queue is then unstable and no cap will do.
    """
    previous = None
    while True:
        chain = build_chain(config, k_max)
        try:
            return stationary(chain, tol=tol, cap=cap)
        except TruncationError as exc:
            nxt = 2 * k_max
            saturated = exc.truncation_mass >= 1e-3 or (
                previous is not None and exc.truncation_mass > previous / 10.0)
            if saturated or (nxt + 1) * (config.m + 1) > MAX_STATES:
                raise
            previous = exc.truncation_mass
            k_max = nxt
