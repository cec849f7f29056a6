"""Fit the free turbulence/lock parameters to observed dual-CUT interval shares.

Three knobs are searched against the dual-CUT percentages:

* scintillation index - sets how often the DP-16QAM channel crosses the FEC limit,
* lock-loss threshold - sets how often the DP-QPSK channel fails (its BER
  margin is far larger, so receiver unlocks dominate),
* lost duration - splits failed intervals into Uncorrected and Lost.

Each knob moves one share monotonically, so the search is coordinate-wise:
bisection for the first two, a 0.1-ms grid for the third.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Mapping

from .campaign import CampaignConfig, run_dual_cut
from .linkbudget import LinkConfig
from .plan import ChannelPlan
from .report import TelemetryLog, interval_percentages

log = logging.getLogger(__name__)

# interval shares (valid, uncorrected, lost %) measured on the dual-CUT pair
FIELD_TRIAL_QAM16 = (61.34, 38.61, 0.05)
FIELD_TRIAL_QPSK = (99.54, 0.41, 0.05)
DEFAULT_TOLERANCE = (3.0, 3.0, 0.05)

SCINTILLATION_RANGE = (0.0, 2.0)
THRESHOLD_RANGE_DB = (0.1, 30.0)
LOST_DURATION_GRID_MS = [round(0.1 * k, 1) for k in range(1, 101)]


class CalibrationError(RuntimeError):
    """Targets cannot be matched within tolerance (or are infeasible for the model)."""

    def __init__(self, message: str, result: "CalibrationResult | None" = None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class CalibrationTargets:
    qam16: tuple[float, float, float] = FIELD_TRIAL_QAM16
    qpsk: tuple[float, float, float] | None = FIELD_TRIAL_QPSK
    tolerance: tuple[float, float, float] = DEFAULT_TOLERANCE

    def check_feasible(self) -> None:
        for name, t in (("16QAM", self.qam16), ("QPSK", self.qpsk)):
            if t is None:
                continue
            if any(v < 0 for v in t) or abs(sum(t) - 100.0) > 0.01:
                raise CalibrationError(f"{name} targets {t} must be non-negative and sum to 100")
            # a lost interval needs a fade deep and long enough to unlock the
            # receiver; the shallower fades around it already break the FEC, so
            # under this model lost intervals never outnumber uncorrected ones
            if t[2] > t[1]:
                raise CalibrationError(f"{name} targets {t}: Lost share exceeds Uncorrected share")
        if self.qpsk is not None:
            if self.qpsk[0] < self.qam16[0]:
                raise CalibrationError("QPSK needs less OSNR than 16QAM, so its Valid share cannot be lower")
            if abs(self.qpsk[2] - self.qam16[2]) > self.tolerance[2] * 2:
                raise CalibrationError("both CUTs share one fading process, so their Lost shares must agree")


@dataclass
class CalibrationResult:
    scintillation_index: float
    lock_loss_threshold: float
    lost_duration: float
    achieved_qam16: tuple[float, float, float]
    achieved_qpsk: tuple[float, float, float]
    targets: CalibrationTargets
    error: float
    evaluations: int = 0

    @property
    def within_tolerance(self) -> bool:
        pairs = [(self.achieved_qam16, self.targets.qam16)]
        if self.targets.qpsk is not None:
            pairs.append((self.achieved_qpsk, self.targets.qpsk))
        return all(
            abs(a - t) <= tol + 1e-9
            for achieved, target in pairs
            for a, t, tol in zip(achieved, target, self.targets.tolerance)
        )

    def apply(self, config: CampaignConfig) -> CampaignConfig:
        turb = replace(
            config.turbulence,
            scintillation_index=self.scintillation_index,
            lock_loss_threshold=self.lock_loss_threshold,
        )
        return replace(config, turbulence=turb, lost_duration=self.lost_duration)


class _Evaluator:
    def __init__(self, plan, link, config, targets, **dual_kwargs):
        self.plan = plan
        self.link = link
        self.base = replace(config, schedule="fixed")
        self.targets = targets
        self.dual_kwargs = dual_kwargs
        self.count = 0
        self._cache: dict = {}

    def shares(self, s2: float, thr: float, lost: float):
        key = (s2, thr, lost)
        if key not in self._cache:
            turb = replace(self.base.turbulence, scintillation_index=s2, lock_loss_threshold=thr)
            run = run_dual_cut(
                self.plan, self.link, replace(self.base, turbulence=turb, lost_duration=lost), **self.dual_kwargs
            )
            tlog = TelemetryLog(run.records)
            even, odd = run.dual_slots
            self._cache[key] = (_triple(tlog, even), _triple(tlog, odd))
            self.count += 1
        return self._cache[key]

    def error(self, s2: float, thr: float, lost: float) -> float:
        q16, qpsk = self.shares(s2, thr, lost)
        err = sum((a - t) ** 2 for a, t in zip(q16, self.targets.qam16))
        if self.targets.qpsk is not None:
            err += sum((a - t) ** 2 for a, t in zip(qpsk, self.targets.qpsk))
        return err


def _triple(tlog: TelemetryLog, slot: int) -> tuple[float, float, float]:
    p = interval_percentages(tlog, slot)
    return (p["valid_pct"], p["uncorrected_pct"], p["lost_pct"])


def _bisect_crossing(f, target: float, lo: float, hi: float, decreasing: bool, iters: int = 40) -> float:
    """Boundary of {x : f(x) <= target} (decreasing f) or {x : f(x) >= target} (increasing f).

    Returns whichever of the two bracketing points lands closer to ``target``.
    """

    def reached(x):
        return f(x) <= target if decreasing else f(x) >= target

    if reached(lo):
        return lo
    if not reached(hi):
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return min((lo, hi), key=lambda x: (abs(f(x) - target), x))


def calibrate(
    plan: ChannelPlan,
    link: LinkConfig,
    config: CampaignConfig,
    targets: CalibrationTargets = CalibrationTargets(),
    passes: int = 2,
    offsets: Mapping[int, float] | None = None,
    even_slot: int | None = None,
    odd_slot: int | None = None,
) -> CalibrationResult:
    """Search (scintillation index, lock threshold, lost duration) for the dual-CUT targets.

    Raises ``CalibrationError`` (carrying the best result) when the targets are
    infeasible or the best fit misses a tolerance.
    """
    targets.check_feasible()
    ev = _Evaluator(plan, link, config, targets, even_slot=even_slot, odd_slot=odd_slot, offsets=offsets)
    s2 = config.turbulence.scintillation_index
    thr = config.turbulence.lock_loss_threshold
    lost = config.lost_duration

    for _ in range(passes):
        s2 = _bisect_crossing(
            lambda x: ev.shares(x, thr, lost)[0][0], targets.qam16[0], *SCINTILLATION_RANGE, decreasing=True
        )
        if targets.qpsk is not None:
            thr = _bisect_crossing(
                lambda x: ev.shares(s2, x, lost)[1][0], targets.qpsk[0], *THRESHOLD_RANGE_DB, decreasing=False
            )
        lost = min(LOST_DURATION_GRID_MS, key=lambda x: (ev.error(s2, thr, x), abs(x - config.lost_duration)))
        log.info("pass: s2=%.5f thr=%.3f dB lost=%.1f ms err=%.4f", s2, thr, lost, ev.error(s2, thr, lost))

    q16, qpsk = ev.shares(s2, thr, lost)
    result = CalibrationResult(s2, thr, lost, q16, qpsk, targets, ev.error(s2, thr, lost), ev.count)
    if not result.within_tolerance:
        raise CalibrationError("calibration did not reach the target tolerance", result)
    return result
