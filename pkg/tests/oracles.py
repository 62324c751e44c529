"""Independent reference computations used by several test modules.

These are derived by hand from the rate equations and deliberately avoid the
library's solver code paths.
"""
import math

import numpy as np


def _coeffs(cfg):
    idle = cfg.p_d if cfg.eq_mode.value == "paper" else 1.0
    c1 = idle * (1 - cfg.p_sp) * (1 - cfg.p_f)
    c2 = cfg.p_d * (1 - cfg.p_ps) * cfg.p_pp
    alpha = cfg.p_d * (1 - cfg.p_pp)
    beta = cfg.p_d * cfg.p_pp * (1 - cfg.p_ps)
    return c1, c2, alpha, beta


def m1_quadratic_root(cfg):
    """Smallest positive relay load solving the m=1 fixed point.

    With B = rho/(1+rho) the fixed point clears to
    c1 (alpha - lam) rho^2 + c1 (alpha + beta - lam) rho - lam c2 = 0.
    For alpha > lam there is one positive root; for alpha <= lam both roots
    are positive and the smaller is the stable operating point.  Written in
    the rationalised form 2 lam c2 / (b + sqrt(b^2 + 4 a lam c2)), which
    covers a = 0 and avoids cancellation.
    """
    assert cfg.m == 1
    c1, c2, alpha, beta = _coeffs(cfg)
    lam = cfg.lambda_p
    a = c1 * (alpha - lam)
    b = c1 * (alpha + beta - lam)
    disc = b * b + 4 * a * lam * c2
    assert disc >= 0 and b > 0
    return 2 * lam * c2 / (b + math.sqrt(disc))


def m1_mu_p(cfg, rho):
    _, _, alpha, beta = _coeffs(cfg)
    return alpha + beta / (1 + rho)


def large_buffer_lambda_max(cfg, rho_max=2000.0, n=400001):
    """lambda_p_max in the m -> infinity limit of the rate equations.

    For rho < 1 the buffer never blocks, mu_p = alpha + beta and the fixed
    point gives lam = M rho / (rho + k).  For rho > 1 the blocking tends to
    1 - 1/rho, mu_p = alpha + beta/rho and lam = rho (alpha rho + beta) /
    (rho^2 + k).  Here k = c2/c1.  The supremum over rho is taken on a grid.
    """
    c1, c2, alpha, beta = _coeffs(cfg)
    k = c2 / c1
    M = alpha + beta
    rho = np.linspace(0.0, rho_max, n)
    low = M * rho / (rho + k)
    high = rho * (alpha * rho + beta) / (rho ** 2 + k)
    return float(np.max(np.where(rho < 1.0, low, high)))
