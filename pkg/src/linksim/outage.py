"""End-to-end outage: link budget, closed-form CDF and the Monte Carlo estimator.

The system is a two-hop decode-and-forward chain. The first hop picks the
best of ``N`` satellite-HAPS optical links. The second hop combines the
HAPS-ground optical and RF branches by selection. The end-to-end SNR is the
smaller of the two hop SNRs.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from . import atmosphere
from .errors import NumericalError
from .fading import (
    EwParams,
    FsoHop,
    PointingParams,
    SrParams,
    ew_fit,
    ew_snr_cdf_series,
    pointing_geometry,
    selection_cdf,
    sr_sample,
    sr_snr_cdf,
)
from .scenario import LINK_HAPS_GS, LINK_SAT_HAPS, ScenarioConfig, slant_range

DEFAULT_TRIALS = 1_000_000
MIN_TRIALS = 10_000
MC_CHUNK = 1 << 18
Z95 = 1.96


def _db(x: float) -> float:
    try:
        return 10.0 ** (x / 10.0)
    except OverflowError:
        raise NumericalError(f"{x:g} dB does not fit in a double") from None


@dataclass(frozen=True)
class LinkBudget:
    """Everything the outage laws need for one scenario and transmit power.

    Average SNRs are linear. ``avg_snr_haps_gs_rf`` is the mean RF SNR; the
    shadowed-Rician law is evaluated on the un-normalised gain, so its scale
    is this value divided by ``shadowing.mean_power``.
    """

    avg_snr_sat_haps: float
    avg_snr_haps_gs_fso: float
    avg_snr_haps_gs_rf: float
    strat_gain: float
    fso_gain: float
    ew_sat_haps: EwParams
    ew_haps_gs: EwParams
    shadowing: SrParams
    pointing: PointingParams | None
    n_haps: int
    snr_threshold: float
    fso_enabled: bool = True
    rf_enabled: bool = True
    attenuation: atmosphere.AttenuationBreakdown | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("avg_snr_sat_haps", "avg_snr_haps_gs_fso", "avg_snr_haps_gs_rf"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise NumericalError(f"{name} is not a positive finite number ({v!r})")

    @property
    def first_hop(self) -> FsoHop:
        return FsoHop(self.avg_snr_sat_haps, self.strat_gain, self.ew_sat_haps, self.pointing)

    @property
    def fso_hop(self) -> FsoHop:
        return FsoHop(self.avg_snr_haps_gs_fso, self.fso_gain, self.ew_haps_gs)

    @property
    def rf_scale(self) -> float:
        return self.avg_snr_haps_gs_rf / self.shadowing.mean_power


@dataclass(frozen=True)
class _PowerFree:
    """Power-independent part of a link budget (fits, gains, noise)."""

    att: atmosphere.AttenuationBreakdown
    ew_sh: EwParams
    ew_hg: EwParams
    sr: SrParams
    pointing: PointingParams | None


def _power_free(scenario: ScenarioConfig) -> _PowerFree:
    att = atmosphere.link_attenuation(scenario)
    ew_sh = ew_fit(atmosphere.link_turbulence(scenario, LINK_SAT_HAPS).scintillation_index)
    ew_hg = ew_fit(atmosphere.link_turbulence(scenario, LINK_HAPS_GS).scintillation_index)
    sh = scenario.shadowing
    pointing = None
    if scenario.pointing_errors_enabled:
        g = scenario.geometry
        pointing = pointing_geometry(
            g.beam_divergence_rad,
            slant_range(g.satellite_altitude_m, g.haps_altitude_m, g.zenith_sat_haps_deg),
            g.receiver_aperture_diameter_m / 2.0,
            g.jitter_stddev_m,
        )
    return _PowerFree(att, ew_sh, ew_hg, SrParams(sh.m, sh.b, sh.omega), pointing)


def _assemble(scenario: ScenarioConfig, pf: _PowerFree) -> LinkBudget:
    r = scenario.radio
    p_s = _db(scenario.tx_power_sat_dBW)
    p_h = _db(scenario.tx_power_haps_dBW)
    att = pf.att
    return LinkBudget(
        avg_snr_sat_haps=r.oe_conversion * p_s / att.noise_power_sat_haps_W,
        avg_snr_haps_gs_fso=r.oe_conversion * p_h / att.noise_power_haps_gs_W,
        avg_snr_haps_gs_rf=p_h * _db(att.rf_path_loss_dB) / att.noise_power_haps_gs_W,
        strat_gain=att.stratospheric,
        fso_gain=att.total_fso_gain,
        ew_sat_haps=pf.ew_sh,
        ew_haps_gs=pf.ew_hg,
        shadowing=pf.sr,
        pointing=pf.pointing,
        n_haps=scenario.n_haps,
        snr_threshold=r.snr_threshold,
        fso_enabled=scenario.fso_enabled,
        rf_enabled=scenario.rf_enabled,
        attenuation=att,
    )


def build_link_budget(scenario: ScenarioConfig, tx_power_dBW: float | None = None) -> LinkBudget:
    """Resolve average SNRs, path gains and fading parameters.

    ``tx_power_dBW`` sets the satellite power (the HAPS keeps its configured
    offset); ``None`` uses the scenario's powers as they are.
    """
    if tx_power_dBW is not None:
        scenario = scenario.with_power(tx_power_dBW)
    return _assemble(scenario, _power_free(scenario))


def _compose(f_first, f_second):
    # 1 - (1-a)(1-b) written so it stays monotone in both arguments under rounding
    return f_first + f_second * (1.0 - f_first)


def second_hop_cdf(gamma, budget: LinkBudget):
    """CDF of the better of the enabled ground-hop branches."""
    out = 1.0
    if budget.fso_enabled:
        out = out * budget.fso_hop.cdf(gamma)
    if budget.rf_enabled:
        out = out * sr_snr_cdf(gamma, budget.shadowing, budget.rf_scale)
    return out


def end_to_end_cdf(gamma, budget: LinkBudget, n_haps: int | None = None):
    """``1 - (1 - F_SH^N)(1 - F_FSO F_RF)`` at ``gamma``."""
    n = budget.n_haps if n_haps is None else n_haps
    f_first = selection_cdf(gamma, [budget.first_hop] * n)
    return _compose(f_first, second_hop_cdf(gamma, budget))


@dataclass(frozen=True)
class AnalyticResult:
    """Closed-form outage probability plus evaluation diagnostics.

    ``terms_used`` and ``truncation_bound`` are zero for the closed-form
    method. For the series method the bound covers the whole OP: the
    first-hop factor enters ``N`` times, and the composition is 1-Lipschitz
    in each CDF.
    """

    op: float
    method: str
    terms_used: int = 0
    truncation_bound: float = 0.0
    notes: tuple[str, ...] = ()


def _series_outage(budget: LinkBudget, rtol: float, max_terms: int) -> AnalyticResult:
    gth = budget.snr_threshold
    notes = []
    terms = 0
    bound = 0.0
    if budget.pointing is None:
        s1 = ew_snr_cdf_series(gth, budget.avg_snr_sat_haps, budget.strat_gain, budget.ew_sat_haps,
                               rtol=rtol, max_terms=max_terms)
        f_first = s1.value ** budget.n_haps
        terms += s1.terms
        bound += budget.n_haps * s1.tail_bound
    else:
        f_first = float(selection_cdf(gth, [budget.first_hop] * budget.n_haps))
        notes.append("first hop with pointing errors evaluated by quadrature")
    f_second = 1.0
    if budget.fso_enabled:
        s2 = ew_snr_cdf_series(gth, budget.avg_snr_haps_gs_fso, budget.fso_gain, budget.ew_haps_gs,
                               rtol=rtol, max_terms=max_terms)
        f_second *= s2.value
        terms += s2.terms
        bound += s2.tail_bound
    if budget.rf_enabled:
        f_second *= float(sr_snr_cdf(gth, budget.shadowing, budget.rf_scale))
    op = min(max(_compose(f_first, f_second), 0.0), 1.0)
    return AnalyticResult(op, "series", terms, bound, tuple(notes))


def analytic_outage(scenario: ScenarioConfig, tx_power_dBW: float | None = None, *,
                    method: str = "closed", rtol: float = 1e-12, max_terms: int = 500,
                    budget: LinkBudget | None = None) -> AnalyticResult:
    """Outage probability ``P[γ0 < γ_th]``.

    ``method="closed"`` evaluates every CDF in closed form. ``"series"``
    expands the EW factors in their binomial series and reports the terms
    used and a tail bound; it raises :class:`NumericalError` when the series
    needs more than ``max_terms`` terms, which happens at high SNR.
    """
    if budget is None:
        budget = build_link_budget(scenario, tx_power_dBW)
    if method == "closed":
        op = float(end_to_end_cdf(budget.snr_threshold, budget))
        return AnalyticResult(min(max(op, 0.0), 1.0), "closed")
    if method == "series":
        return _series_outage(budget, rtol, max_terms)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McResult:
    op: float
    halfwidth: float
    n_trials: int
    starved: bool


def point_rng(seed: int, point_index: int) -> np.random.Generator:
    """Independent stream for one grid point, identical in serial and parallel runs."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(point_index)]))


def _mc_count(budget: LinkBudget, n_trials: int, rng: np.random.Generator, chunk: int) -> int:
    n = budget.n_haps
    first = budget.first_hop
    fso = budget.fso_hop
    gth = budget.snr_threshold
    outages = 0
    done = 0
    while done < n_trials:
        c = min(chunk, n_trials - done)
        # every branch is drawn even when disabled so that flag variants share random numbers
        g_first = first.sample_snr(rng, (c, n)).max(axis=1)
        g_fso = fso.sample_snr(rng, c)
        g_rf = budget.avg_snr_haps_gs_rf * sr_sample(budget.shadowing, rng, c)
        if budget.fso_enabled and budget.rf_enabled:
            g_second = np.maximum(g_fso, g_rf)
        elif budget.fso_enabled:
            g_second = g_fso
        else:
            g_second = g_rf
        outages += int(np.count_nonzero(np.minimum(g_first, g_second) < gth))
        done += c
    return outages


def mc_outage(scenario: ScenarioConfig, tx_power_dBW: float | None = None,
              n_trials: int = DEFAULT_TRIALS, seed: int = 0, *, point_index: int = 0,
              chunk: int = MC_CHUNK, budget: LinkBudget | None = None) -> McResult:
    """Monte Carlo estimate of the outage probability.

    Deterministic in ``(seed, point_index)``. The 95% half-width is the
    normal-approximation ``1.96 sqrt(p(1-p)/n)``; estimates below
    ``10 / n_trials`` are flagged as starved.
    """
    if n_trials < MIN_TRIALS:
        raise ValueError(f"n_trials must be at least {MIN_TRIALS}")
    if budget is None:
        budget = build_link_budget(scenario, tx_power_dBW)
    count = _mc_count(budget, int(n_trials), point_rng(seed, point_index), chunk)
    p = count / n_trials
    return McResult(p, Z95 * math.sqrt(p * (1.0 - p) / n_trials), int(n_trials), p < 10.0 / n_trials)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutagePoint:
    tx_power_dBW: float
    analytic_op: float | None
    mc_op: float | None = None
    mc_halfwidth: float | None = None
    n_trials: int | None = None
    mc_starved: bool = False


@dataclass(frozen=True)
class OutageCurve:
    curve_id: str
    scenario_digest: str
    points: tuple[OutagePoint, ...]
    seed: int | None = None
    mode: str = "analytic"
    notes: tuple[str, ...] = ()

    @property
    def powers(self) -> np.ndarray:
        return np.array([p.tx_power_dBW for p in self.points])

    @property
    def analytic(self) -> np.ndarray:
        return np.array([np.nan if p.analytic_op is None else p.analytic_op for p in self.points])


def worker_count() -> int:
    """Process count for sweeps, capped by ``LINKSIM_THREADS``."""
    cap = os.environ.get("LINKSIM_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"LINKSIM_THREADS must be an integer, got {cap!r}") from None
    return n


def _mc_task(args):
    budget, n_trials, seed, idx = args
    count = _mc_count(budget, n_trials, point_rng(seed, idx), MC_CHUNK)
    return count


def _check_grid(power_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(power_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("power grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("power grid must be strictly increasing")
    return grid


def sweep(scenario: ScenarioConfig, power_grid: Sequence[float], *, mode: str = "both",
          n_trials: int = DEFAULT_TRIALS, seed: int = 0, curve_id: str = "default",
          workers: int | None = None) -> OutageCurve:
    """Evaluate the outage on a power grid.

    ``mode`` is ``"analytic"``, ``"mc"`` or ``"both"``. Monte Carlo points
    run in a process pool; point ``i`` always uses stream ``(seed, i)`` so
    the result does not depend on the pool size.
    """
    if mode not in ("analytic", "mc", "both"):
        raise ValueError(f"unknown mode {mode!r}")
    grid = _check_grid(power_grid)
    pf = _power_free(scenario)
    budgets = [_assemble(scenario.with_power(p), pf) for p in grid]

    analytic = [None] * len(grid)
    if mode in ("analytic", "both"):
        analytic = [min(max(float(end_to_end_cdf(b.snr_threshold, b)), 0.0), 1.0) for b in budgets]

    counts = [None] * len(grid)
    if mode in ("mc", "both"):
        if n_trials < MIN_TRIALS:
            raise ValueError(f"n_trials must be at least {MIN_TRIALS}")
        tasks = [(b, int(n_trials), seed, i) for i, b in enumerate(budgets)]
        nw = min(workers or worker_count(), len(tasks))
        if nw > 1:
            with ProcessPoolExecutor(max_workers=nw) as pool:
                counts = list(pool.map(_mc_task, tasks))
        else:
            counts = [_mc_task(t) for t in tasks]

    points = []
    for p, a, c in zip(grid, analytic, counts):
        if c is None:
            points.append(OutagePoint(float(p), a))
            continue
        phat = c / n_trials
        points.append(OutagePoint(float(p), a, phat, Z95 * math.sqrt(phat * (1 - phat) / n_trials),
                                  int(n_trials), phat < 10.0 / n_trials))
    return OutageCurve(curve_id, scenario.digest(), tuple(points),
                       seed if mode != "analytic" else None, mode)


# ---------------------------------------------------------------------------
# grid helpers
# ---------------------------------------------------------------------------

def _log_op(scenario: ScenarioConfig, pf: _PowerFree, power: float) -> float:
    op = float(end_to_end_cdf(scenario.radio.snr_threshold, _assemble(scenario.with_power(power), pf)))
    return math.log10(op) if op > 0 else -400.0


def crossing_power(scenario: ScenarioConfig, target_op: float, *, start: float | None = None,
                   step: float = 20.0, xtol: float = 1e-6) -> float:
    """Transmit power (dBW) at which the analytic OP falls to ``target_op``.

    Brackets by stepping from ``start`` (default: the scenario's satellite
    power) and refines with Brent's method on log10 OP.
    """
    if not 0 < target_op < 1:
        raise ValueError("target OP must be in (0, 1)")
    pf = _power_free(scenario)
    target = math.log10(target_op)

    def f(p):
        return _log_op(scenario, pf, p) - target

    lo = scenario.tx_power_sat_dBW if start is None else float(start)
    flo = f(lo)
    for _ in range(400):
        if flo > 0:
            break
        lo -= step
        flo = f(lo)
    hi = lo + step
    fhi = f(hi)
    for _ in range(400):
        if fhi < 0:
            break
        lo, flo = hi, fhi
        hi += step
        fhi = f(hi)
    if not (flo > 0 > fhi):
        raise NumericalError(f"could not bracket OP = {target_op:g} in transmit power")
    return float(optimize.brentq(f, lo, hi, xtol=xtol))


def suggest_power_grid(scenarios: Sequence[ScenarioConfig], n_points: int = 20, *,
                       op_high: float = 0.5, op_low: float = 1e-7) -> np.ndarray:
    """Grid spanning OP from ``op_high`` down to ``op_low`` across all ``scenarios``.

    End points are widened to whole dB so the grid is readable.
    """
    if n_points < 2:
        raise ValueError("need at least two grid points")
    lo = min(crossing_power(s, op_high) for s in scenarios)
    hi = max(crossing_power(s, op_low) for s in scenarios)
    return np.linspace(math.floor(lo), math.ceil(hi), n_points)
