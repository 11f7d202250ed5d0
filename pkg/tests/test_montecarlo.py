"""Tests of the Monte Carlo harness: pairing, reductions, CSV output."""
import io
import math

import numpy as np
import pytest

import specsense.harness as harness
from specsense.detector import ThresholdMode, closed_form_pd, static_threshold
from specsense.harness import (
    PointResult,
    SweepResult,
    TrialPlan,
    run_point,
    sweep_pfa,
    sweep_snr,
    sweep_threshold_factor,
    write_results,
)
from specsense.noise_estimator import EstimationFailure


def _static_plan(**overrides) -> TrialPlan:
    base = dict(
        n_trials=1000,
        n=128,
        l=8,
        target_pfa=0.1,
        mode=ThresholdMode.STATIC,
        sigma_s2=0.5,
        mismatch_db=0.0,
        master_seed=1234,
    )
    base.update(overrides)
    return TrialPlan(**base)


def test_trial_plan_validation():
    with pytest.raises(ValueError):
        _static_plan(n_trials=0)
    with pytest.raises(ValueError):
        _static_plan(target_pfa=1.0)
    with pytest.raises(ValueError):
        _static_plan(l=1)
    with pytest.raises(ValueError):
        _static_plan(n=4, l=8)
    with pytest.raises(ValueError):
        _static_plan(sigma_w2_true=0.0)
    with pytest.raises(ValueError):
        _static_plan(sigma_s2=-1.0)
    with pytest.raises(ValueError):
        _static_plan(mismatch_db=-0.5)


def test_sps_defaults_to_snapshot_length():
    assert _static_plan().sps == 8
    assert _static_plan(samples_per_symbol=2).sps == 2


def test_zero_signal_gives_identical_pd_and_pfa():
    r = run_point(_static_plan(sigma_s2=0.0, n_trials=600))
    assert r.pd == r.pfa  # the two hypotheses share the same stream


def test_static_point_tracks_closed_forms():
    plan = _static_plan(n_trials=4000)
    r = run_point(plan)
    lam = static_threshold(1.0, 0.1, 128)
    pd_closed = closed_form_pd(lam, 128, 1.0, 0.5)
    assert abs(r.pfa - 0.1) < 0.02
    assert abs(r.pd - pd_closed) < 0.02
    assert r.mean_sigma_hat2 is None
    assert r.failed_trials == 0
    assert r.n_effective == 4000


def test_ci_halfwidth_formula():
    r = run_point(_static_plan(n_trials=500))
    expected = 2.576 * math.sqrt(r.pfa * (1.0 - r.pfa) / r.n_effective)
    np.testing.assert_allclose(r.pfa_ci, expected, rtol=1e-12)


def test_run_point_deterministic():
    plan = _static_plan(n_trials=700)  # not a multiple of the chunk size
    assert run_point(plan) == run_point(plan)


def test_dynamic_point_reports_noise_estimate():
    plan = _static_plan(
        mode=ThresholdMode.DYNAMIC, n=64, n_trials=150, sigma_s2=0.0
    )
    r = run_point(plan)
    assert r.mean_sigma_hat2 is not None
    assert abs(r.mean_sigma_hat2 - 1.0) < 0.1
    assert r.pd == r.pfa


def test_mismatch_wander_changes_results_only_when_enabled():
    quiet = run_point(_static_plan(n_trials=400))
    wander = run_point(_static_plan(n_trials=400, mismatch_db=3.0))
    again = run_point(_static_plan(n_trials=400, mismatch_db=3.0))
    assert wander == again
    assert wander != quiet


def test_excessive_estimation_failures_abort(monkeypatch):
    def always_fails(frm, m_grid):
        raise EstimationFailure("synthetic failure")

    monkeypatch.setattr(harness, "estimate_noise", always_fails)
    plan = _static_plan(mode=ThresholdMode.DYNAMIC, n_trials=200)
    with pytest.raises(RuntimeError, match="failed"):
        run_point(plan)


def test_sweep_snr_produces_both_modes():
    plan = _static_plan(n_trials=200, n=64)
    curves = sweep_snr(plan, [-4.0, 0.0], workers=1)
    assert set(curves) == {ThresholdMode.STATIC, ThresholdMode.DYNAMIC}
    for result in curves.values():
        assert result.sweep_name == "snr_db"
        assert result.values == (-4.0, 0.0)
        assert len(result.points) == 2


def test_sweep_snr_pd_increases():
    plan = _static_plan(n_trials=400)
    curves = sweep_snr(plan, [-10.0, -2.0, 3.0], modes=(ThresholdMode.STATIC,))
    pds = [pt.pd for pt in curves[ThresholdMode.STATIC].points]
    assert pds[0] < pds[1] <= pds[2]
    assert pds[2] > 0.99


def test_sweep_pfa_tracks_targets():
    plan = _static_plan(n_trials=2000, sigma_s2=0.0)
    curves = sweep_pfa(plan, [0.05, 0.2], modes=(ThresholdMode.STATIC,))
    points = curves[ThresholdMode.STATIC].points
    assert abs(points[0].pfa - 0.05) < 0.02
    assert abs(points[1].pfa - 0.2) < 0.03
    assert points[0].pfa < points[1].pfa


def test_sweep_factor_orders_pd_exactly_under_pairing():
    plan = _static_plan(n_trials=300)
    curves = sweep_threshold_factor(plan, [1.0, 1.5, 2.0, 2.5], [-6.0, -2.0, 0.0])
    for idx in range(3):
        pds = [curves[f].points[idx].pd for f in (1.0, 1.5, 2.0, 2.5)]
        # same streams, rising thresholds: detection can only shrink
        assert pds[0] >= pds[1] >= pds[2] >= pds[3]


def test_write_results_csv_layout():
    result = SweepResult(
        sweep_name="snr_db",
        values=(-2.0,),
        points=(
            PointResult(
                pd=0.5,
                pfa=0.125,
                pd_ci=0.01,
                pfa_ci=0.02,
                mean_sigma_hat2=None,
                failed_trials=0,
                n_effective=100,
            ),
        ),
    )
    buf = io.StringIO()
    write_results(result, buf)
    text = buf.getvalue()
    lines = text.split("\n")
    assert lines[0] == "sweep_value,pd,pfa,pd_ci,pfa_ci,mean_sigma_hat2,failed_trials"
    assert lines[1] == "-2.0,0.5,0.125,0.01,0.02,,0"
    assert text.endswith("\n")
    assert "\r" not in text


def test_write_results_floats_round_trip():
    plan = _static_plan(n_trials=300, n=64, mode=ThresholdMode.DYNAMIC)
    curves = sweep_snr(plan, [-3.0], modes=(ThresholdMode.DYNAMIC,))
    buf = io.StringIO()
    write_results(curves[ThresholdMode.DYNAMIC], buf)
    header, row = buf.getvalue().strip().split("\n")
    fields = row.split(",")
    point = curves[ThresholdMode.DYNAMIC].points[0]
    assert float(fields[1]) == point.pd
    assert float(fields[5]) == point.mean_sigma_hat2
    assert int(fields[6]) == point.failed_trials


def test_write_results_to_file_and_worker_independence(tmp_path):
    plan = _static_plan(
        mode=ThresholdMode.DYNAMIC, n=64, n_trials=320, sigma_s2=0.25
    )
    paths = []
    for workers in (1, 2):
        curves = sweep_snr(plan, [-2.0, 1.0], modes=(ThresholdMode.DYNAMIC,),
                           workers=workers)
        path = tmp_path / f"w{workers}.csv"
        write_results(curves[ThresholdMode.DYNAMIC], str(path))
        paths.append(path.read_bytes())
    assert paths[0] == paths[1]
