"""Decoupled rate equations, the relay-load fixed point and region tracing.

The relay queue is modelled as an M/M/1/m queue with loading factor
``rho = lambda_ps / mu_ps``.  Its arrival and service rates both depend on the
primary service rate, which in turn depends on the relay blocking
probability, so ``rho`` is the solution of a scalar fixed-point equation.

The solver works on the cleared form

    G(rho) = rho * c1 * (mu_p(rho) - lambda_p) - lambda_p * c2 * (1 - B(rho))

where ``c2 = P_d (1 - p_ps) p_pp`` and ``c1 = (1 - p_sp)(1 - p_f)`` (times
``P_d`` in paper mode).  ``G`` is continuous on ``[0, inf)``, whereas the raw
map ``rho -> lambda_ps / mu_ps`` blows up where the primary queue saturates.
Roots of ``G`` with ``mu_p > lambda_p`` are exactly the fixed points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .model import EqMode, SystemConfig, check

RHO_ONE_GUARD = 1e-9
FIXED_POINT_TOL = 1e-10
BISECT_WIDTH = 1e-12
BISECT_CAP = 200
LAMBDA_MAX_TOL = 1e-8
SCAN_POINTS = 129


class AnalyticError(ArithmeticError):
    pass


class InstabilityError(AnalyticError):
    """lambda_p >= mu_p: the primary queue is not stable at this operating point."""


class NoSolutionError(AnalyticError):
    """No relay load rho keeps the primary queue stable."""


class NonConvergenceError(AnalyticError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


# ---------------------------------------------------------------------------
# M/M/1/m occupancy


def _check_rho(rho):
    if not rho >= 0.0:  # also rejects NaN
        raise ValueError(f"loading factor must be >= 0, got {rho}")


def _norm(rho: float, m: int) -> float:
    """(1 - rho) / (1 - rho**(m+1)) for 0 <= rho <= 1, accurate near 1."""
    if rho == 0.0:
        return 1.0
    return (1.0 - rho) / -math.expm1((m + 1) * math.log(rho))


def occupancy(rho: float, m: int) -> np.ndarray:
    """Stationary occupancy ``[P(Q=0), ..., P(Q=m)]`` of an M/M/1/m queue.

    ``pi_k = (1 - rho) rho**k / (1 - rho**(m+1))``; the uniform limit is
    used within 1e-9 of ``rho = 1``.  For ``rho > 1`` the vector is the
    reversal of the ``1/rho`` vector, which avoids overflow.
    """
    _check_rho(rho)
    if m < 1:
        raise ValueError(f"capacity must be >= 1, got {m}")
    if math.isinf(rho):
        out = np.zeros(m + 1)
        out[m] = 1.0
        return out
    if abs(rho - 1.0) < RHO_ONE_GUARD:
        return np.full(m + 1, 1.0 / (m + 1))
    if rho > 1.0:
        return occupancy(1.0 / rho, m)[::-1].copy()
    k = np.arange(m + 1)
    return _norm(rho, m) * rho ** k


def blocking_probability(rho: float, m: int) -> float:
    """P(Q = m) for the M/M/1/m queue."""
    _check_rho(rho)
    if math.isinf(rho):
        return 1.0
    if abs(rho - 1.0) < RHO_ONE_GUARD:
        return 1.0 / (m + 1)
    if rho > 1.0:
        return _norm(1.0 / rho, m)
    if rho == 0.0:
        return 0.0
    return _norm(rho, m) * rho ** m


def empty_probability(rho: float, m: int) -> float:
    """P(Q = 0) for the M/M/1/m queue."""
    _check_rho(rho)
    if math.isinf(rho):
        return 0.0
    if abs(rho - 1.0) < RHO_ONE_GUARD:
        return 1.0 / (m + 1)
    if rho > 1.0:
        r = 1.0 / rho
        return _norm(r, m) * r ** m
    return _norm(rho, m)


# ---------------------------------------------------------------------------
# coupled rates


def _idle_factor(config: SystemConfig) -> float:
    return config.p_d if config.eq_mode is EqMode.PAPER else 1.0


def _utilization(config: SystemConfig, mu_p: float) -> float:
    if config.lambda_p == 0.0:
        return 0.0
    if not config.lambda_p < mu_p:
        raise InstabilityError(
            f"lambda_p={config.lambda_p} >= mu_p={mu_p}: primary queue unstable")
    return config.lambda_p / mu_p


def primary_service_rate(config: SystemConfig, rho_ps: float) -> float:
    """Success probability of a primary transmission given relay load ``rho_ps``."""
    no_block = 1.0 - blocking_probability(rho_ps, config.m)
    return config.p_d * ((1.0 - config.p_pp)
                         + config.p_pp * (1.0 - config.p_ps) * no_block)


def relay_arrival_rate(config: SystemConfig, mu_p: float, rho_ps: float) -> float:
    u = _utilization(config, mu_p)
    no_block = 1.0 - blocking_probability(rho_ps, config.m)
    return no_block * u * config.p_d * (1.0 - config.p_ps) * config.p_pp


def relay_service_rate(config: SystemConfig, mu_p: float) -> float:
    u = _utilization(config, mu_p)
    return ((1.0 - u) * _idle_factor(config)
            * (1.0 - config.p_sp) * (1.0 - config.p_f))


def secondary_service_rate(config: SystemConfig, rho_ps: float, mu_p: float) -> float:
    u = _utilization(config, mu_p)
    return (empty_probability(rho_ps, config.m) * (1.0 - u)
            * _idle_factor(config) * (1.0 - config.p_ss) * (1.0 - config.p_f))


# ---------------------------------------------------------------------------
# fixed point


@dataclass(frozen=True)
class RateSolution:
    rho_ps: float
    mu_p: float
    lambda_ps: float
    mu_ps: float
    mu_s: float
    p_block: float
    p_empty: float
    primary_stable: bool
    secondary_stable: bool
    residual: float
    iterations: int
    converged: bool
    m: int = field(default=1, repr=False)

    @property
    def occupancy(self) -> np.ndarray:
        return occupancy(self.rho_ps, self.m)

    def to_dict(self) -> dict:
        d = {
            "rho_ps": self.rho_ps, "mu_p": self.mu_p,
            "lambda_ps": self.lambda_ps, "mu_ps": self.mu_ps,
            "mu_s": self.mu_s, "p_block": self.p_block,
            "p_empty": self.p_empty, "primary_stable": self.primary_stable,
            "secondary_stable": self.secondary_stable,
            "residual": self.residual, "iterations": self.iterations,
            "converged": self.converged,
        }
        # JSON has no infinity; an unserved relay buffer is reported as null
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in d.items()}


def _coefficients(config: SystemConfig) -> tuple[float, float]:
    c1 = _idle_factor(config) * (1.0 - config.p_sp) * (1.0 - config.p_f)
    c2 = config.p_d * (1.0 - config.p_ps) * config.p_pp
    return c1, c2


def _cleared(config: SystemConfig, c1: float, c2: float, rho: float) -> float:
    mu_p = primary_service_rate(config, rho)
    no_block = 1.0 - blocking_probability(rho, config.m)
    return rho * c1 * (mu_p - config.lambda_p) - config.lambda_p * c2 * no_block


def relay_load_map(config: SystemConfig, rho: float) -> float:
    """``lambda_ps(rho) / mu_ps(rho)``, the map whose fixed point is sought."""
    mu_p = primary_service_rate(config, rho)
    mu_ps = relay_service_rate(config, mu_p)
    lam_ps = relay_arrival_rate(config, mu_p, rho)
    if mu_ps == 0.0:
        return math.inf if lam_ps > 0.0 else 0.0
    return lam_ps / mu_ps


def _saturation_load(config: SystemConfig) -> float:
    """Smallest rho at which mu_p(rho) drops to lambda_p."""
    lam = config.lambda_p
    lo, hi = 0.0, 1.0
    while primary_service_rate(config, hi) > lam:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            return math.inf
    for _ in range(BISECT_CAP):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= BISECT_WIDTH * max(1.0, hi):
            break
        if primary_service_rate(config, mid) > lam:
            lo = mid
        else:
            hi = mid
    return lo


def _bracket(config: SystemConfig, c1: float, c2: float) -> tuple[float, float]:
    """Interval [a, b] with G(a) <= 0 < G(b) around the smallest root."""
    lam = config.lambda_p
    alpha = config.p_d * (1.0 - config.p_pp)
    if alpha > lam:
        # G(rho) >= rho*c1*(alpha - lam) - lam*c2 > 0 beyond this point
        hi = lam * c2 / (c1 * (alpha - lam)) + 1.0
    else:
        hi = _saturation_load(config)
        if not math.isfinite(hi):
            hi = lam * c2 / (c1 * max(config.p_d * config.p_pp * (1 - config.p_ps),
                                      1e-300)) + 1.0
    grid = hi * np.linspace(0.0, 1.0, SCAN_POINTS) ** 2
    values = [_cleared(config, c1, c2, r) for r in grid]
    prev = 0.0
    for r, v in zip(grid, values):
        if v > 0.0:
            return prev, r
        prev = r
    # a narrow positive excursion can hide between grid points
    best = int(np.argmax(values))
    lo_b = grid[max(best - 1, 0)]
    hi_b = grid[min(best + 1, len(grid) - 1)]
    res = minimize_scalar(lambda r: -_cleared(config, c1, c2, r),
                          bounds=(lo_b, hi_b), method="bounded",
                          options={"xatol": 1e-14 * max(hi, 1.0)})
    if -res.fun > 0.0:
        return lo_b, float(res.x)
    raise NoSolutionError(
        f"no relay load keeps the primary queue stable at lambda_p={lam}")


def _build_solution(config, rho, iterations, tol) -> RateSolution:
    m = config.m
    mu_p = primary_service_rate(config, rho)
    lam_ps = relay_arrival_rate(config, mu_p, rho)
    mu_ps = relay_service_rate(config, mu_p)
    mu_s = secondary_service_rate(config, rho, mu_p)
    if math.isinf(rho):
        residual = 0.0
    else:
        residual = abs(rho - relay_load_map(config, rho))
    return RateSolution(
        rho_ps=rho, mu_p=mu_p, lambda_ps=lam_ps, mu_ps=mu_ps, mu_s=mu_s,
        p_block=blocking_probability(rho, m), p_empty=empty_probability(rho, m),
        primary_stable=config.lambda_p < mu_p or config.lambda_p == 0.0,
        secondary_stable=config.lambda_s < mu_s,
        residual=residual, iterations=iterations, converged=residual <= tol,
        m=m,
    )


def solve_fixed_point(config: SystemConfig, tol: float = FIXED_POINT_TOL) -> RateSolution:
    """Solve for the relay loading factor and every rate that depends on it.

    Bisection on the cleared equation, started from the first sign change of
    a scan over the admissible interval, so the smallest fixed point is the
    one returned.

    Raises
    ------
    NoSolutionError
        If ``lambda_p >= mu_p`` for every admissible relay load.
    NonConvergenceError
        If the residual is still above ``tol`` after the iteration cap.
    """
    check(config)
    lam = config.lambda_p
    c1, c2 = _coefficients(config)
    if lam > 0.0 and not lam < primary_service_rate(config, 0.0):
        raise NoSolutionError(
            f"lambda_p={lam} >= mu_p(0)={primary_service_rate(config, 0.0)}")
    if lam == 0.0 or c2 == 0.0:
        return _build_solution(config, 0.0, 0, tol)
    if c1 == 0.0:
        # the relay is never served: its buffer fills and stays full
        if lam < config.p_d * (1.0 - config.p_pp):
            return _build_solution(config, math.inf, 0, tol)
        raise NoSolutionError(
            f"relay never served and lambda_p={lam} >= P_d(1-p_pp)")

    a, b = _bracket(config, c1, c2)
    iterations = 0
    rho = 0.5 * (a + b)
    while iterations < BISECT_CAP:
        iterations += 1
        rho = 0.5 * (a + b)
        if rho in (a, b):
            break
        if _cleared(config, c1, c2, rho) > 0.0:
            b = rho
        else:
            a = rho
        if b - a <= BISECT_WIDTH:
            rho = 0.5 * (a + b)
            sol = _build_solution(config, rho, iterations, tol)
            if sol.converged:
                return sol
    sol = _build_solution(config, rho, iterations, tol)
    if not sol.converged:
        raise NonConvergenceError(
            f"fixed point residual {sol.residual:.3e} > {tol:g} "
            f"after {iterations} iterations", sol)
    return sol


def _feasible(config: SystemConfig) -> bool:
    try:
        sol = solve_fixed_point(config)
    except AnalyticError:
        return False
    return sol.primary_stable and config.lambda_p < sol.mu_p


def max_primary_rate(config: SystemConfig, tol: float = LAMBDA_MAX_TOL) -> float:
    """Supremum of lambda_p for which a stable operating point exists.

    The configured lambda_p is ignored.  The result lies between
    ``P_d (1 - p_pp)`` (no relaying) and ``P_d (1 - p_pp p_ps)`` (relaying
    with an unblocked buffer).
    """
    check(config)
    lo = config.p_d * (1.0 - config.p_pp)
    hi = config.p_d * (1.0 - config.p_pp * config.p_ps)
    if hi <= lo:
        return lo
    if _feasible(config.with_(lambda_p=hi)):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _feasible(config.with_(lambda_p=mid)):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# region boundary


FIXED_POINT = "fixed"
PAPER_CLOSED_FORM = "closed"


@dataclass(frozen=True)
class BoundaryPoint:
    lambda_p: float
    lambda_s_max: float
    rho_ps: float
    mu_p: float
    converged: bool


@dataclass(frozen=True)
class RegionBoundary:
    points: tuple[BoundaryPoint, ...]
    m: int
    method: str

    @property
    def lambda_p(self) -> np.ndarray:
        return np.array([p.lambda_p for p in self.points])

    @property
    def lambda_s_max(self) -> np.ndarray:
        return np.array([p.lambda_s_max for p in self.points])


def default_grid(config: SystemConfig, n_points: int = 201) -> np.ndarray:
    lam_max = max_primary_rate(config)
    return np.linspace(0.0, lam_max * (1.0 - 1e-6), n_points)


def _fixed_point_boundary(config, grid) -> list[BoundaryPoint]:
    points = []
    for lam in grid:
        lam = float(lam)
        try:
            sol = solve_fixed_point(config.with_(lambda_p=lam))
        except AnalyticError:
            points.append(BoundaryPoint(lam, 0.0, math.nan, math.nan, False))
            continue
        lam_s = sol.mu_s if sol.primary_stable else 0.0
        points.append(BoundaryPoint(lam, lam_s, sol.rho_ps, sol.mu_p, sol.converged))
    return points


def _closed_form_boundary(config, n_points) -> list[BoundaryPoint]:
    """Scan rho over [0, 1] through the displayed closed-form relations."""
    aux_den = 1.0 - config.p_pp * config.p_ps
    phi = (1.0 - config.p_ps) * config.p_pp / aux_den
    psi = (1.0 - config.p_f) * (1.0 - config.p_sp)
    m = config.m
    scale = _idle_factor(config) * (1.0 - config.p_f) * (1.0 - config.p_ss)
    points = []
    for rho in np.linspace(0.0, 1.0, n_points):
        rho = float(rho)
        mu_p = primary_service_rate(config, rho)
        relay_in = ((1.0 - blocking_probability(rho, m)) * config.p_d
                    * (1.0 - config.p_ps) * config.p_pp)
        # rho = lam/(mu_p - lam) * relay_in / psi, solved for lam
        if psi == 0.0:
            lam = 0.0 if relay_in > 0.0 else mu_p
        else:
            k = relay_in / psi
            lam = rho * mu_p / (rho + k) if rho + k > 0.0 else 0.0
        if points and lam <= points[-1].lambda_p:
            continue
        u = lam / mu_p if mu_p > 0.0 else 1.0
        if u >= 1.0:
            lam_s = 0.0
        else:
            x = phi * lam / (psi * (1.0 - u)) if psi > 0.0 else math.inf
            lam_s = empty_probability(x, m) * (1.0 - u) * scale
        points.append(BoundaryPoint(lam, lam_s, rho, mu_p, True))
    return points


def trace_region(config: SystemConfig, n_points: int = 201,
                 method: str = FIXED_POINT, lambda_grid=None) -> RegionBoundary:
    """Trace the (lambda_p, lambda_s_max) boundary of the stable region.

    ``method="fixed"`` solves the fixed point on a lambda_p grid (default:
    ``n_points`` uniform points on ``[0, lambda_p_max)``); a custom
    ``lambda_grid`` lets several buffer sizes share the same abscissae, and
    grid points beyond ``lambda_p_max`` come back as unconverged zero-rate
    points.  ``method="closed"`` scans the relay load over ``[0, 1]``
    through the closed-form relations instead.
    """
    check(config)
    if method == FIXED_POINT:
        grid = default_grid(config, n_points) if lambda_grid is None else lambda_grid
        points = _fixed_point_boundary(config, grid)
    elif method == PAPER_CLOSED_FORM:
        if lambda_grid is not None:
            raise ValueError("the closed-form scan is parametrised by rho, not lambda_p")
        points = _closed_form_boundary(config, n_points)
    else:
        raise ValueError(f"unknown method {method!r}")
    return RegionBoundary(points=tuple(points), m=config.m, method=method)
