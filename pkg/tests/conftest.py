import numpy as np
import pytest

from cogrelay.model import SystemConfig

ACCEPTANCE_LINES = []


def record(criterion: int, passed: bool, detail: str = ""):
    line = f"[criterion {criterion}] {'PASS' if passed else 'FAIL'} {detail}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def flat(**kw) -> SystemConfig:
    return SystemConfig.from_flat(**kw)


# m=1 worked case used across modules
WORKED = dict(p_pp=0.5, p_ps=0.0, p_sp=0.0, p_ss=0.0, p_d=1.0, p_f=0.0, m=1,
              lambda_p=0.3, lambda_s=0.1)

HIGH_OUTAGE = dict(p_pp=0.8, p_ps=0.1, p_sp=0.1, p_ss=0.1, p_d=1.0, p_f=0.0)

BENCHMARKS = [
    dict(p_pp=0.5, m=1, lambda_p=0.3, lambda_s=0.1, eq_mode="physical"),
    dict(p_pp=0.6, p_ps=0.2, p_sp=0.3, p_ss=0.2, p_d=0.9, p_f=0.1, m=2,
         lambda_p=0.25, lambda_s=0.1, eq_mode="physical"),
    dict(p_pp=0.7, p_ps=0.1, p_sp=0.1, p_ss=0.3, p_d=0.95, p_f=0.05, m=3,
         lambda_p=0.15, lambda_s=0.05, eq_mode="physical"),
]


def random_config(rng: np.random.Generator, m: int, **fixed) -> SystemConfig:
    """Random valid config with lambda_p = 0 (callers set it)."""
    kw = dict(
        p_pp=rng.uniform(0.05, 0.95), p_ps=rng.uniform(0.0, 0.9),
        p_sp=rng.uniform(0.0, 0.9), p_ss=rng.uniform(0.0, 0.9),
        p_d=rng.uniform(0.5, 1.0), p_f=rng.uniform(0.0, 0.5), m=m,
        lambda_p=0.0, lambda_s=rng.uniform(0.0, 0.3),
    )
    kw.update(fixed)
    return SystemConfig.from_flat(**kw)


@pytest.fixture
def worked():
    return flat(**WORKED)
