"""Monte Carlo harness: paired-hypothesis trials, sweeps, CSV output.

Every trial derives its own signal/noise/mismatch substreams from a single
master seed, so results are bit-for-bit reproducible for any worker count
and any subset of sweep points.  Detection counts are integers and the
per-chunk diagnostics are reduced in fixed chunk order, which keeps CSV
output byte-identical across reruns.
"""
from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, replace
from typing import IO, Iterable, Sequence

import numpy as np

from .detector import ThresholdMode, dynamic_threshold, static_threshold
from .noise_estimator import EstimationFailure, estimate_noise
from .signal_model import Hypothesis, add_awgn, derive_seed, frame, generate_qpsk

__all__ = [
    "PointResult",
    "SweepResult",
    "TrialPlan",
    "run_point",
    "sweep_pfa",
    "sweep_snr",
    "sweep_threshold_factor",
    "write_results",
]

_CI_Z = 2.576  # two-sided 99% normal quantile
_CHUNK = 128  # trials per work unit; fixed so reductions never reorder

_ROLE_SIGNAL = 0
_ROLE_NOISE = 1
_ROLE_MISMATCH = 2


@dataclass(frozen=True)
class TrialPlan:
    """Everything one Monte Carlo point needs to be reproducible.

    Attributes:
        n_trials: number of trials.
        n: detector window length; also the snapshot count (columns) of the
            covariance frame, so each trial consumes l*n samples.
        l: snapshot length (covariance dimension).
        target_pfa: false-alarm probability the threshold is set for.
        mode: STATIC (threshold from sigma_nominal2, fixed) or DYNAMIC
            (threshold from the per-trial blind noise estimate).
        sigma_w2_true: true noise power before any per-trial mismatch.
        sigma_nominal2: noise power the static threshold assumes.
        sigma_s2: primary-user transmit power under H1 (0 disables it).
        hypothesis: which hypothesis single-shot sensing simulates.
        master_seed: root of all per-trial substreams.
        m_grid: grid resolution of the blind noise estimator.
        mismatch_db: half-width of the uniform per-trial wander of the true
            noise power, in dB (0 disables the wander).
        samples_per_symbol: oversampling of the H1 waveform; None means l,
            which keeps each snapshot inside one symbol (rank-1 signal).
    """

    n_trials: int
    n: int = 128
    l: int = 8
    target_pfa: float = 0.1
    mode: ThresholdMode = ThresholdMode.DYNAMIC
    sigma_w2_true: float = 1.0
    sigma_nominal2: float = 1.0
    sigma_s2: float = 1.0
    hypothesis: Hypothesis = Hypothesis.H1
    master_seed: int = 42
    m_grid: int = 100
    mismatch_db: float = 0.0
    samples_per_symbol: int | None = None

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise ValueError("n_trials must be positive")
        if self.l < 2 or self.n < self.l:
            raise ValueError("need l >= 2 and n >= l")
        if not 0.0 < self.target_pfa < 1.0:
            raise ValueError("target_pfa must lie strictly between 0 and 1")
        if self.sigma_w2_true <= 0.0 or self.sigma_nominal2 <= 0.0:
            raise ValueError("noise powers must be positive")
        if self.sigma_s2 < 0.0:
            raise ValueError("sigma_s2 must be non-negative")
        if self.m_grid < 2:
            raise ValueError("m_grid must be at least 2")
        if self.mismatch_db < 0.0:
            raise ValueError("mismatch_db must be non-negative")
        if self.samples_per_symbol is not None and self.samples_per_symbol < 1:
            raise ValueError("samples_per_symbol must be >= 1")

    @property
    def sps(self) -> int:
        return self.l if self.samples_per_symbol is None else self.samples_per_symbol


@dataclass(frozen=True)
class PointResult:
    """Empirical detection/false-alarm rates for one parameter point."""

    pd: float
    pfa: float
    pd_ci: float
    pfa_ci: float
    mean_sigma_hat2: float | None
    failed_trials: int
    n_effective: int


@dataclass(frozen=True)
class SweepResult:
    """Rows of (sweep value, point result) for one curve."""

    sweep_name: str
    values: tuple[float, ...]
    points: tuple[PointResult, ...]


def _trial_statistic(samples: np.ndarray, n: int) -> float:
    """Energy of the detector window at the real-sample convention.

    Takes the scaled in-phase rail of the first ``n`` complex samples;
    each term is a real Gaussian of variance sigma_w2 under H0, so the
    total follows the chi-square law the closed forms approximate.
    """
    block = samples[:n].real
    return float(np.sum(2.0 * block * block))


def _synthesize_pair(plan: TrialPlan, trial: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Generate the (H1 stream, H0 stream, true noise power) for a trial.

    The H0 stream is the H1 stream's own noise realization, so comparisons
    between hypotheses are paired sample-for-sample.
    """
    n_samples = plan.l * plan.n
    sigma_true = plan.sigma_w2_true
    if plan.mismatch_db > 0.0:
        rng = np.random.default_rng(derive_seed(plan.master_seed, trial, _ROLE_MISMATCH))
        offset_db = rng.uniform(-plan.mismatch_db, plan.mismatch_db)
        sigma_true = sigma_true * 10.0 ** (offset_db / 10.0)
    noise = add_awgn(
        np.zeros(n_samples, dtype=np.complex128),
        sigma_true,
        derive_seed(plan.master_seed, trial, _ROLE_NOISE),
    )
    if plan.sigma_s2 > 0.0:
        x = generate_qpsk(
            n_samples,
            plan.sigma_s2,
            derive_seed(plan.master_seed, trial, _ROLE_SIGNAL),
            samples_per_symbol=plan.sps,
        )
        return x + noise, noise, sigma_true
    return noise.copy(), noise, sigma_true


def _run_chunk(plan: TrialPlan, start: int, stop: int) -> tuple[int, int, int, float, int]:
    """Run trials [start, stop); returns order-independent tallies.

    Returns:
        (h1 detections, h0 detections, failed trials, sum of noise
        estimates, completed trials).
    """
    det_h1 = 0
    det_h0 = 0
    failed = 0
    sigma_sum = 0.0
    completed = 0
    static_lambda = static_threshold(plan.sigma_nominal2, plan.target_pfa, plan.n)

    for trial in range(start, stop):
        y1, y0, _ = _synthesize_pair(plan, trial)
        if plan.mode is ThresholdMode.STATIC:
            lambda_h1 = lambda_h0 = static_lambda
        else:
            try:
                est1 = estimate_noise(frame(y1, plan.l, plan.n), plan.m_grid)
                est0 = estimate_noise(frame(y0, plan.l, plan.n), plan.m_grid)
            except EstimationFailure:
                failed += 1
                continue
            lambda_h1 = dynamic_threshold(est1.sigma_hat2, plan.target_pfa, plan.n)
            lambda_h0 = dynamic_threshold(est0.sigma_hat2, plan.target_pfa, plan.n)
            sigma_sum += est1.sigma_hat2 + est0.sigma_hat2
        if _trial_statistic(y1, plan.n) > lambda_h1:
            det_h1 += 1
        if _trial_statistic(y0, plan.n) > lambda_h0:
            det_h0 += 1
        completed += 1
    return det_h1, det_h0, failed, sigma_sum, completed


def _chunk_bounds(n_trials: int) -> list[tuple[int, int]]:
    return [(s, min(s + _CHUNK, n_trials)) for s in range(0, n_trials, _CHUNK)]


def _ci_halfwidth(p: float, n: int) -> float:
    if n <= 0:
        return math.nan
    return _CI_Z * math.sqrt(p * (1.0 - p) / n)


def run_point(plan: TrialPlan, workers: int = 1) -> PointResult:
    """Estimate (Pd, Pfa) for one plan by paired Monte Carlo trials.

    Trials whose blind noise estimation fails are excluded from both the
    numerator and denominator and reported in ``failed_trials``; more than
    1% failures aborts, because the estimate would no longer be comparable
    across points.

    Args:
        plan: the point description.
        workers: process count; results are identical for any value.
    """
    bounds = _chunk_bounds(plan.n_trials)
    if workers <= 1:
        tallies = [_run_chunk(plan, s, e) for s, e in bounds]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(_run_chunk, *zip(*[(plan, s, e) for s, e in bounds])))

    det_h1 = sum(t[0] for t in tallies)
    det_h0 = sum(t[1] for t in tallies)
    failed = sum(t[2] for t in tallies)
    completed = sum(t[4] for t in tallies)
    sigma_sum = 0.0
    for t in tallies:  # fixed chunk order: float reduction is reproducible
        sigma_sum += t[3]

    if failed > 0.01 * plan.n_trials:
        raise RuntimeError(
            f"noise estimation failed in {failed}/{plan.n_trials} trials"
        )
    if completed == 0:
        raise RuntimeError("no trial completed")

    pd = det_h1 / completed
    pfa = det_h0 / completed
    mean_sigma = None
    if plan.mode is ThresholdMode.DYNAMIC:
        mean_sigma = sigma_sum / (2.0 * completed)
    return PointResult(
        pd=pd,
        pfa=pfa,
        pd_ci=_ci_halfwidth(pd, completed),
        pfa_ci=_ci_halfwidth(pfa, completed),
        mean_sigma_hat2=mean_sigma,
        failed_trials=failed,
        n_effective=completed,
    )


def _snr_to_sigma_s2(plan: TrialPlan, snr_db_value: float) -> float:
    return plan.sigma_w2_true * 10.0 ** (snr_db_value / 10.0)


def sweep_snr(
    plan: TrialPlan,
    snr_grid_db: Sequence[float],
    modes: Sequence[ThresholdMode] = (ThresholdMode.STATIC, ThresholdMode.DYNAMIC),
    workers: int = 1,
) -> dict[ThresholdMode, SweepResult]:
    """Pd/Pfa versus SNR for each threshold mode.

    All modes and points share the master seed, so curves are paired
    trial-for-trial and differences reflect thresholds, not sampling noise.
    """
    out: dict[ThresholdMode, SweepResult] = {}
    for mode in modes:
        points = []
        for snr in snr_grid_db:
            p = replace(plan, mode=mode, sigma_s2=_snr_to_sigma_s2(plan, snr))
            points.append(run_point(p, workers=workers))
        out[mode] = SweepResult(
            sweep_name="snr_db", values=tuple(float(s) for s in snr_grid_db),
            points=tuple(points),
        )
    return out


def sweep_pfa(
    plan: TrialPlan,
    pfa_grid: Sequence[float],
    modes: Sequence[ThresholdMode] = (ThresholdMode.STATIC, ThresholdMode.DYNAMIC),
    workers: int = 1,
) -> dict[ThresholdMode, SweepResult]:
    """Pd/Pfa versus the target false-alarm setting at fixed SNR."""
    out: dict[ThresholdMode, SweepResult] = {}
    for mode in modes:
        points = []
        for pfa in pfa_grid:
            p = replace(plan, mode=mode, target_pfa=float(pfa))
            points.append(run_point(p, workers=workers))
        out[mode] = SweepResult(
            sweep_name="target_pfa", values=tuple(float(v) for v in pfa_grid),
            points=tuple(points),
        )
    return out


def sweep_threshold_factor(
    plan: TrialPlan,
    factors: Sequence[float],
    snr_grid_db: Sequence[float],
    workers: int = 1,
) -> dict[float, SweepResult]:
    """Static-mode Pd versus SNR for a family of threshold scale factors.

    Factor f runs the static detector with threshold f times the unit-
    nominal value, i.e. an assumed noise power of f.
    """
    out: dict[float, SweepResult] = {}
    for factor in factors:
        points = []
        for snr in snr_grid_db:
            p = replace(
                plan,
                mode=ThresholdMode.STATIC,
                sigma_nominal2=float(factor),
                sigma_s2=_snr_to_sigma_s2(plan, snr),
            )
            points.append(run_point(p, workers=workers))
        out[float(factor)] = SweepResult(
            sweep_name="snr_db", values=tuple(float(s) for s in snr_grid_db),
            points=tuple(points),
        )
    return out


_CSV_HEADER = "sweep_value,pd,pfa,pd_ci,pfa_ci,mean_sigma_hat2,failed_trials"


def write_results(result: SweepResult, destination: str | IO[str]) -> None:
    """Write one sweep curve as CSV.

    UTF-8, LF line endings, '.' decimal separator, full-precision floats
    (shortest round-trip form); mean_sigma_hat2 is empty for static-mode
    rows.  Identical results always produce identical bytes.
    """
    lines = [_CSV_HEADER]
    for value, point in zip(result.values, result.points):
        mean = "" if point.mean_sigma_hat2 is None else repr(point.mean_sigma_hat2)
        lines.append(
            ",".join(
                (
                    repr(float(value)),
                    repr(point.pd),
                    repr(point.pfa),
                    repr(point.pd_ci),
                    repr(point.pfa_ci),
                    mean,
                    str(point.failed_trials),
                )
            )
        )
    payload = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(payload)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
