import numpy as np
import pytest

from cogrelay import analytic as A
from cogrelay import sim as S
from cogrelay._backend import BACKEND, get_kernel

from conftest import BENCHMARKS, flat

needs_ext = pytest.mark.skipif(BACKEND != "cython", reason="compiled kernel not built")


def test_uniform_stream_is_random_access():
    whole = S.slot_uniforms(9, 0, 1000)
    assert np.array_equal(whole[300:700], S.slot_uniforms(9, 300, 400))
    assert whole.min() >= 0.0 and whole.max() < 1.0
    cfg = flat(lambda_p=0.3, lambda_s=0.2, p_pp=0.4)
    assert np.array_equal(S.slot_flags(cfg, 9, 0, 1000)[123:456],
                          S.slot_flags(cfg, 9, 123, 333))


def test_uniforms_look_uniform():
    u = S.slot_uniforms(1, 0, 50_000)
    assert np.allclose(u.mean(axis=0), 0.5, atol=0.01)
    assert abs(np.corrcoef(u[:, 0], u[:, 1])[0, 1]) < 0.02


def test_no_primary_traffic_secondary_rate():
    cfg = flat(lambda_p=0.0, lambda_s=0.3, p_ss=0.3, p_d=1.0, p_f=0.0)
    res = S.simulate(cfg, 1_000_000, 42)
    assert res.emp_mu_s.covers(0.7)
    assert res.collisions == 0 and res.counts["pu_attempts"] == 0
    assert np.isnan(res.emp_mu_p.value)


def test_perfect_detection_and_link():
    cfg = flat(lambda_p=0.4, lambda_s=0.3, p_pp=0.0, p_d=1.0)
    res = S.simulate(cfg, 200_000, 3)
    assert res.collisions == 0
    assert res.emp_mu_p.value == 1.0
    assert res.counts["pu_direct"] == res.counts["pu_attempts"]


def test_broken_relay_link_never_admits():
    cfg = flat(lambda_p=0.2, p_pp=0.5, p_ps=1.0, m=4)
    res = S.simulate(cfg, 200_000, 5)
    assert res.emp_lambda_ps.value == 0.0
    assert list(res.relay_occupancy_histogram) == [1.0, 0.0, 0.0, 0.0, 0.0]


@pytest.mark.parametrize("mode", ["paper", "physical"])
@pytest.mark.parametrize("dominant", [True, False])
def test_packet_conservation(mode, dominant):
    cfg = flat(**{**BENCHMARKS[1], "eq_mode": mode})
    res = S.simulate(cfg, 300_000, 11, dominant=dominant)
    c = res.counts
    assert c["pu_arrivals"] == c["pu_direct"] + c["relay_admissions"] + res.final_qp
    assert c["relay_admissions"] == c["relay_served"] + res.final_qps
    assert c["su_arrivals"] == c["own_served"] + res.final_qs
    assert c["pu_attempts"] + c["idle_slots"] == res.slots


def test_relay_never_exceeds_buffer():
    cfg = flat(lambda_p=0.45, p_pp=0.9, p_ps=0.0, p_sp=0.7, m=2)
    res = S.simulate(cfg, 100_000, 8)
    assert len(res.relay_occupancy_histogram) == 3
    assert res.relay_occupancy_histogram.sum() == pytest.approx(1.0)
    assert res.counts["relay_full"] > 0


def test_deterministic_for_fixed_seed():
    cfg = flat(**BENCHMARKS[2])
    a = S.simulate(cfg, 150_000, 42).to_dict()
    b = S.simulate(cfg, 150_000, 42).to_dict()
    assert a == b
    assert S.simulate(cfg, 150_000, 43).to_dict() != a


def test_result_independent_of_chunking(monkeypatch):
    cfg = flat(**BENCHMARKS[1])
    ref = S.simulate(cfg, 100_000, 4).to_dict()
    monkeypatch.setattr(S, "CHUNK_SLOTS", 777)
    assert S.simulate(cfg, 100_000, 4).to_dict() == ref


@needs_ext
@pytest.mark.parametrize("dominant", [True, False])
def test_backends_agree_exactly(dominant):
    for kw in BENCHMARKS:
        cfg = flat(**kw)
        a = S.simulate(cfg, 120_000, 42, dominant=dominant, backend="python")
        b = S.simulate(cfg, 120_000, 42, dominant=dominant, backend="cython")
        assert a.to_dict() == b.to_dict()


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        get_kernel("fortran")


def test_dominance_only_adds_collisions():
    # with no relay traffic and no secondary arrivals the non-dominant
    # secondary never transmits, so every collision is due to dominance
    cfg = flat(lambda_p=0.3, lambda_s=0.0, p_pp=0.5, p_ps=1.0, p_d=0.8)
    dom = S.simulate(cfg, 100_000, 42, dominant=True)
    real = S.simulate(cfg, 100_000, 42, dominant=False)
    assert real.collisions == 0 and dom.collisions > 0
    share = dom.collisions / dom.counts["pu_attempts"]
    assert share == pytest.approx(0.2, abs=0.01)


def test_dominant_collisions_exceed_real_on_benchmarks():
    for kw in BENCHMARKS:
        cfg = flat(**kw)
        dom = S.simulate(cfg, 200_000, 42, dominant=True)
        real = S.simulate(cfg, 200_000, 42, dominant=False)
        assert dom.collisions >= real.collisions


def test_estimate_from_batches():
    e = S.Estimate.from_batches([5, 5, 5, 5], [10, 10, 10, 10])
    assert e.value == 0.5 and e.half_width == 0.0 and e.n == 40
    assert e.binomial_half_width == pytest.approx(1.96 * np.sqrt(0.25 / 40), rel=1e-3)
    assert np.isnan(S.Estimate.from_batches([0], [0]).value)


def test_stable_below_capacity():
    cfg = flat(p_pp=0.5, p_ps=0.2, p_sp=0.1, p_ss=0.1, p_d=0.95, p_f=0.05, m=2,
               lambda_s=0.05)
    cfg = cfg.with_(lambda_p=0.5 * A.max_primary_rate(cfg))
    v = S.stability_probe(cfg, 1_000_000, 42)
    assert v["Q_p"] is S.Verdict.STABLE
    assert v["Q_s"] is S.Verdict.STABLE
    assert v["Q_ps"] is S.Verdict.STABLE


def test_unstable_when_primary_cannot_be_served():
    cfg = flat(lambda_p=1.0, p_pp=1.0, p_ps=1.0, p_d=1.0, m=3)
    v = S.stability_probe(cfg, 100_000, 1)
    assert v["Q_p"] is S.Verdict.UNSTABLE
    assert v["Q_ps"] is S.Verdict.STABLE


def test_probe_needs_four_windows():
    with pytest.raises(ValueError):
        S.stability_probe(flat(), 1000, 1, window_count=3)


def test_bad_slot_count():
    with pytest.raises(ValueError):
        S.simulate(flat(), 0, 1)


def test_result_serialises():
    res = S.simulate(flat(**BENCHMARKS[0]), 10_000, 2)
    d = res.to_dict()
    assert d["slots"] == 10_000 and d["stability_verdict"]["Q_ps"] == "Stable"
    assert len(d["relay_occupancy_histogram"]) == 2
