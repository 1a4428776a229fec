"""Fading distributions, samplers and the special functions behind them.

Three channel models are covered:

* exponentiated Weibull (EW) irradiance for the optical hops, with its
  parameter fit from the scintillation index,
* shadowed-Rician power gain for the RF hop (integer ``m`` only),
* zero-boresight pointing-error loss.

All distribution objects are frozen; samplers take a caller-owned
:class:`numpy.random.Generator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .errors import FitDomainError, ModelDomainError, NumericalError

SERIES_RTOL = 1e-12
SERIES_MAX_TERMS = 500
POINTING_QUAD_RTOL = 1e-8


# ---------------------------------------------------------------------------
# exponentiated Weibull
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EwParams:
    """Exponentiated Weibull shape ``alpha``, ``beta`` and scale ``eta``.

    ``sigma_i2`` records the scintillation index the parameters were fitted
    from (NaN when constructed directly).
    """

    alpha: float
    beta: float
    eta: float
    sigma_i2: float = math.nan

    def __post_init__(self):
        for name in ("alpha", "beta", "eta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ModelDomainError(f"EW {name} must be positive and finite, got {v!r}")

    def mean(self) -> float:
        return ew_moment(self, 1)

    def second_moment(self) -> float:
        return ew_moment(self, 2)


def _falling_binomial_terms(a: float):
    """Yield (-1)^k * (a)(a-1)...(a-k+1) / k! for k = 0, 1, 2, ..."""
    c = 1.0
    k = 0
    while True:
        yield c
        c *= (k - a) / (k + 1)
        k += 1


def g1_series(alpha: float, beta: float, *, rtol: float = SERIES_RTOL,
              max_terms: int = SERIES_MAX_TERMS) -> float:
    """Normalizing constant of the EW fit by direct series summation.

    Sums ``(-1)^k Γ(α) / (k! (k+1)^(1+1/β) Γ(α-k))`` with the gamma ratio
    taken as the falling factorial ``(α-1)...(α-k)``. Stops once a term is
    below ``rtol`` of the partial sum.

    Raises
    ------
    NumericalError
        If ``max_terms`` terms are not enough. The tail of this series decays
        only like ``k^-(α+1+1/β)``, so non-integer ``α`` below about 3 usually
        lands here; :func:`g1` has no such limitation.
    """
    if alpha <= 0 or beta <= 0:
        raise ModelDomainError("g1 needs alpha, beta > 0")
    p = 1.0 + 1.0 / beta
    total = 0.0
    comp = 0.0  # Kahan compensation
    coeffs = _falling_binomial_terms(alpha - 1.0)
    for k in range(max_terms):
        term = next(coeffs) / (k + 1) ** p
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) < rtol * abs(total):
            return total
    raise NumericalError(f"g1 series did not converge in {max_terms} terms",
                         achieved=abs(term) / abs(total))


def _log_power_integral(alpha: float, power: float) -> float:
    """∫_0^1 (-ln(1-u))^power u^(alpha-1) du.

    Evaluated as ∫_0^∞ t^power (1-e^-t)^(alpha-1) e^-t dt after t = -ln(1-u),
    with the t^(power+alpha-1) behaviour at the origin weighted exactly.
    """
    def smooth(t):
        return (-math.expm1(-t) / t) ** (alpha - 1.0) * math.exp(-t) if t > 0 else 1.0

    head, err_h = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(power + alpha - 1.0, 0.0),
                                 epsabs=0.0, epsrel=1e-13, limit=200)
    tail, err_t = integrate.quad(lambda t: t ** power * (-math.expm1(-t)) ** (alpha - 1.0) * math.exp(-t),
                                 1.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    val, err = head + tail, err_h + err_t
    if not math.isfinite(val) or err > 1e-10 * abs(val):
        raise NumericalError("EW moment integral failed", achieved=err / abs(val) if val else err)
    return val


def g1(alpha: float, beta: float) -> float:
    """Normalizing constant of the EW fit, by quadrature.

    Equal to the sum computed by :func:`g1_series` (the series is the
    binomial expansion of this integral) but accurate for every ``alpha > 0``.
    """
    if alpha <= 0 or beta <= 0:
        raise ModelDomainError("g1 needs alpha, beta > 0")
    return _log_power_integral(alpha, 1.0 / beta) / special.gamma(1.0 + 1.0 / beta)


def ew_moment(params: EwParams, order: float) -> float:
    """Raw moment E[I^order] of the EW distribution."""
    a, b, eta = params.alpha, params.beta, params.eta
    return eta ** order * a * _log_power_integral(a, order / b)


def ew_fit(sigma_i2: float) -> EwParams:
    """Fit (α, β, η) to a scintillation index, normalised to unit mean irradiance.

    The fractional exponents act on the amplitude σ_I, so ``σ^(2/3)`` is
    ``(σ_I²)^(1/3)``.
    """
    if not (math.isfinite(sigma_i2) and sigma_i2 > 0):
        raise FitDomainError(f"scintillation index must be positive, got {sigma_i2!r}")
    gamma_arg = 2.487 * sigma_i2 ** (1.0 / 6.0) - 0.104
    if gamma_arg <= 0:
        raise FitDomainError(f"scintillation index {sigma_i2:.3g} puts the fit's gamma "
                             f"argument at {gamma_arg:.3g} (must be > 0)")
    alpha = 7.220 * sigma_i2 ** (1.0 / 3.0) / special.gamma(gamma_arg)
    beta = 1.012 * (alpha * sigma_i2) ** (-13.0 / 25.0) + 0.142
    eta = 1.0 / (alpha * special.gamma(1.0 + 1.0 / beta) * g1(alpha, beta))
    return EwParams(float(alpha), float(beta), float(eta), float(sigma_i2))


def ew_cdf(x, params: EwParams):
    """CDF ``(1 - exp(-(x/η)^β))^α``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        w = (np.maximum(x, 0.0) / params.eta) ** params.beta
        out = np.exp(params.alpha * np.log(-np.expm1(-w)))
    return out[()] if out.ndim == 0 else out


def ew_pdf(x, params: EwParams):
    """Density of the EW distribution."""
    a, b, eta = params.alpha, params.beta, params.eta
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (x / eta) ** b
        out = (a * b / eta) * (x / eta) ** (b - 1.0) * np.exp(-w) * (-np.expm1(-w)) ** (a - 1.0)
    out = np.where(x > 0, out, 0.0)
    return out[()] if out.ndim == 0 else out


def ew_sample(params: EwParams, rng: np.random.Generator, size=None):
    """Exact inverse-CDF draws ``η (-ln(1 - u^(1/α)))^(1/β)``."""
    u = rng.random(size)
    return params.eta * (-np.log1p(-(u ** (1.0 / params.alpha)))) ** (1.0 / params.beta)


def _ew_snr_log_w(gamma, avg_snr: float, path_gain: float, params: EwParams):
    """log of ``(γ / (γ̄ (I^l η)²))^(β/2)``; -inf at γ = 0, +inf when the gain is zero."""
    gamma = np.asarray(gamma, dtype=float)
    if path_gain <= 0:
        return np.full(gamma.shape, np.inf)
    with np.errstate(divide="ignore"):
        log_ratio = np.log(gamma) - math.log(avg_snr) - 2.0 * (math.log(path_gain) + math.log(params.eta))
    return 0.5 * params.beta * log_ratio


def ew_snr_cdf(gamma, avg_snr: float, path_gain: float, params: EwParams):
    """CDF of ``γ̄ (I^l I)²`` with ``I`` exponentiated Weibull.

    Evaluated in the log domain so that extreme path gains and average SNRs
    do not overflow. A zero path gain means the link never closes (CDF 1).
    """
    if avg_snr <= 0:
        raise ModelDomainError("average SNR must be positive")
    if path_gain < 0:
        raise ModelDomainError("path gain must be non-negative")
    with np.errstate(over="ignore"):
        w = np.exp(_ew_snr_log_w(gamma, avg_snr, path_gain, params))
    with np.errstate(divide="ignore"):
        out = np.exp(params.alpha * np.log(-np.expm1(-w)))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SeriesValue:
    """A truncated series with its bookkeeping."""

    value: float
    terms: int
    tail_bound: float


def ew_snr_cdf_series(gamma: float, avg_snr: float, path_gain: float, params: EwParams, *,
                      rtol: float = SERIES_RTOL, max_terms: int = SERIES_MAX_TERMS) -> SeriesValue:
    """Single-link EW SNR CDF through the generalized binomial expansion.

    ``(1 - e^-w)^α = Σ_ρ C(α, ρ) (-1)^ρ e^(-ρ w)``. Past ``ρ > α + 1`` the
    terms share one sign and shrink geometrically by at least ``e^-w``, so
    ``|t_(R+1)| / (1 - e^-w)`` bounds the discarded tail rigorously.

    Raises
    ------
    NumericalError
        If the tail bound is still above ``rtol`` times the partial sum
        after ``max_terms`` terms. This happens at high SNR where ``w`` is
        small; the closed form has no such issue.
    """
    with np.errstate(over="ignore"):
        w = float(np.exp(_ew_snr_log_w(gamma, avg_snr, path_gain, params)))
    if w == 0.0:
        return SeriesValue(0.0, 0, 0.0)
    if math.isinf(w):
        return SeriesValue(1.0, 0, 0.0)
    q = math.exp(-w)
    denom = -math.expm1(-w)
    a = params.alpha
    total = 0.0
    c = 1.0
    qk = 1.0
    bound = math.inf
    for k in range(max_terms):
        total += c * qk
        c_next = c * (k - a) / (k + 1)
        q_next = qk * q
        if c_next == 0.0:
            return SeriesValue(total, k + 1, 0.0)
        if k + 1 > a + 1:
            bound = abs(c_next) * q_next / denom
            if bound <= rtol * abs(total):
                return SeriesValue(total, k + 1, bound)
        c, qk = c_next, q_next
    raise NumericalError(f"EW binomial series did not converge in {max_terms} terms",
                         achieved=bound / abs(total) if total else bound)


# ---------------------------------------------------------------------------
# shadowed-Rician
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SrParams:
    """Shadowed-Rician parameters with integer Nakagami ``m``.

    ``2b`` is the scatter power and ``omega`` the mean LOS power, so an
    un-normalised gain ``|f|²`` has mean ``2b + omega``.
    """

    m: int
    b: float
    omega: float

    def __post_init__(self):
        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ModelDomainError(f"shadowed-Rician m must be an integer >= 1, got {self.m!r}")
        if not (self.b > 0 and self.omega > 0):
            raise ModelDomainError("shadowed-Rician b and omega must be positive")

    @property
    def mu(self) -> float:
        two_b = 2.0 * self.b
        return (1.0 / two_b) * (two_b * self.m / (two_b * self.m + self.omega)) ** self.m

    @property
    def delta(self) -> float:
        two_b = 2.0 * self.b
        return self.omega / (two_b * (two_b * self.m + self.omega))

    @property
    def nu(self) -> float:
        return 1.0 / (2.0 * self.b)

    @property
    def mean_power(self) -> float:
        return 2.0 * self.b + self.omega

    def vartheta(self, avg_snr: float) -> float:
        return (self.nu - self.delta) / avg_snr

    def _weights(self) -> np.ndarray:
        """``μ (1-m)_l (-δ)^l / (l! (ν-δ)^(l+1))`` for l < m; all non-negative."""
        l = np.arange(self.m)
        poch = np.concatenate([[1.0], np.cumprod(self.m - 1.0 - np.arange(self.m - 1))])
        s = self.nu - self.delta
        return self.mu * poch * self.delta ** l / (special.factorial(l) * s ** (l + 1))


def sr_snr_pdf(gamma, params: SrParams, avg_snr: float):
    """Density of ``γ̄ |f|²`` (un-normalised ``|f|²``)."""
    g = np.asarray(gamma, dtype=float)
    l = np.arange(params.m)
    poch = np.concatenate([[1.0], np.cumprod(params.m - 1.0 - np.arange(params.m - 1))])
    coef = params.mu * poch * params.delta ** l / (avg_snr ** (l + 1) * special.factorial(l) ** 2)
    gg = np.maximum(g, 0.0)[..., None]
    out = np.sum(coef * gg ** l, axis=-1) * np.exp(-params.vartheta(avg_snr) * np.maximum(g, 0.0))
    out = np.where(g >= 0, out, 0.0)
    return out[()] if out.ndim == 0 else out


def sr_snr_cdf(gamma, params: SrParams, avg_snr: float):
    """CDF of ``γ̄ |f|²``.

    The closed-form double sum (a finite sum of ``γ^k e^(-ϑγ)`` terms) is
    regrouped as a weighted sum of regularized lower incomplete gammas,
    which keeps full relative precision in the deep lower tail.
    """
    g = np.maximum(np.asarray(gamma, dtype=float), 0.0)
    w = params._weights()
    l = np.arange(params.m)
    x = params.vartheta(avg_snr) * g
    out = np.sum(w * special.gammainc(l + 1.0, x[..., None]), axis=-1)
    out = np.minimum(out, 1.0)
    return out[()] if out.ndim == 0 else out


def sr_sample(params: SrParams, rng: np.random.Generator, size=None, *, normalize: bool = True):
    """Draw power gains ``|ξ e^(iφ) + Z|²``.

    ``ξ²`` is Gamma(m, Ω/m) (Nakagami-m LOS amplitude), ``φ`` uniform, and
    ``Z`` circular complex Gaussian with ``E|Z|² = 2b``. With ``normalize``
    the result is divided by ``2b + Ω`` so that ``E|f|² = 1``.
    """
    los_power = rng.gamma(params.m, params.omega / params.m, size)
    phase = rng.uniform(0.0, 2.0 * np.pi, size)
    scale = math.sqrt(params.b)
    zr = rng.standard_normal(size) * scale
    zi = rng.standard_normal(size) * scale
    amp = np.sqrt(los_power)
    power = (amp * np.cos(phase) + zr) ** 2 + (amp * np.sin(phase) + zi) ** 2
    return power / params.mean_power if normalize else power


# ---------------------------------------------------------------------------
# pointing errors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointingParams:
    """Zero-boresight pointing-error model for a Gaussian beam on a circular aperture."""

    beam_width_at_rx_m: float
    equiv_beam_width_m: float
    a0: float
    g: float
    sigma_s_m: float
    aperture_radius_m: float

    @property
    def y(self) -> float:
        return math.sqrt(math.pi / 2.0) * self.aperture_radius_m / self.beam_width_at_rx_m

    @property
    def g2(self) -> float:
        return self.g * self.g


def pointing_geometry(divergence_rad: float, length_m: float, aperture_radius_m: float,
                      sigma_s_m: float) -> PointingParams:
    """Beam footprint, equivalent width and capture fraction at the receiver."""
    for name, v in (("divergence_rad", divergence_rad), ("length_m", length_m),
                    ("aperture_radius_m", aperture_radius_m), ("sigma_s_m", sigma_s_m)):
        if not v > 0:
            raise ModelDomainError(f"{name} must be positive")
    w_z = divergence_rad * length_m
    y = math.sqrt(math.pi / 2.0) * aperture_radius_m / w_z
    erf_y = math.erf(y)
    # log form; a footprint far smaller than the aperture gives an unbounded width
    log_ratio = 0.5 * math.log(math.pi) + math.log(erf_y) + y * y - math.log(2.0 * y)
    w_eq = w_z * math.exp(0.5 * log_ratio) if log_ratio < 1400.0 else math.inf
    return PointingParams(
        beam_width_at_rx_m=w_z,
        equiv_beam_width_m=w_eq,
        a0=erf_y ** 2,
        g=w_eq / (2.0 * sigma_s_m),
        sigma_s_m=sigma_s_m,
        aperture_radius_m=aperture_radius_m,
    )


def pointing_cdf(x, params: PointingParams):
    """CDF ``(x / A0)^(g²)`` on ``[0, A0]``."""
    x = np.asarray(x, dtype=float)
    r = np.clip(x / params.a0, 0.0, 1.0)
    out = r ** params.g2
    return out[()] if out.ndim == 0 else out


def pointing_pdf(x, params: PointingParams):
    """Density ``g² x^(g²-1) / A0^(g²)`` on ``(0, A0]``."""
    x = np.asarray(x, dtype=float)
    g2 = params.g2
    inside = (x > 0) & (x <= params.a0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(inside, g2 / params.a0 * (x / params.a0) ** (g2 - 1.0), 0.0)
    return out[()] if out.ndim == 0 else out


def pointing_sample(params: PointingParams, rng: np.random.Generator, size=None):
    """``A0 exp(-2 r² / w_eq²)`` with Rayleigh radial jitter ``r``."""
    r = rng.rayleigh(params.sigma_s_m, size)
    return params.a0 * np.exp(-2.0 * r * r / params.equiv_beam_width_m ** 2)


def ew_pointing_snr_cdf(gamma, avg_snr: float, path_gain: float, params: EwParams,
                        pointing: PointingParams):
    """SNR CDF of an EW link that also suffers pointing loss.

    Averages the EW SNR CDF, with the path gain scaled by ``I^p``, over the
    pointing distribution. With ``I^p = A0 e^(-t/g²)`` and ``t ~ Exp(1)``
    the average becomes ``∫_0^∞ e^-t F(γ | A0 e^(-t/g²)) dt``.
    """
    gammas = np.atleast_1d(np.asarray(gamma, dtype=float))
    out = np.empty_like(gammas)
    base = path_gain * pointing.a0
    g2 = pointing.g2
    for i, gm in enumerate(gammas):
        if gm <= 0:
            out[i] = 0.0
            continue

        def integrand(t, gm=gm):
            return math.exp(-t) * float(ew_snr_cdf(gm, avg_snr, base * math.exp(-t / g2), params))

        val, err = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0,
                                  epsrel=POINTING_QUAD_RTOL, limit=200)
        if not math.isfinite(val) or (val > 0 and err > 1e2 * POINTING_QUAD_RTOL * val):
            raise NumericalError("pointing-error CDF quadrature failed",
                                 achieved=err / val if val else err)
        out[i] = min(val, 1.0)
    return out[0] if np.ndim(gamma) == 0 else out.reshape(np.shape(gamma))


# ---------------------------------------------------------------------------
# selection over optical hops
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FsoHop:
    """One optical link: EW fading, deterministic path gain, optional pointing loss."""

    avg_snr: float
    path_gain: float
    ew: EwParams
    pointing: PointingParams | None = None

    def cdf(self, gamma):
        if self.pointing is None:
            return ew_snr_cdf(gamma, self.avg_snr, self.path_gain, self.ew)
        return ew_pointing_snr_cdf(gamma, self.avg_snr, self.path_gain, self.ew, self.pointing)

    def sample_snr(self, rng: np.random.Generator, size=None):
        gain = self.path_gain * ew_sample(self.ew, rng, size)
        if self.pointing is not None:
            gain = gain * pointing_sample(self.pointing, rng, size)
        return self.avg_snr * gain * gain


def selection_cdf(gamma, hops: Sequence[FsoHop]):
    """CDF of the best of several independent hops: the product of their CDFs."""
    if len(hops) == 0:
        raise ValueError("selection needs at least one hop")
    out = np.ones(np.shape(gamma))
    for hop in hops:
        out = out * hop.cdf(gamma)
    return out[()] if np.ndim(out) == 0 else out
