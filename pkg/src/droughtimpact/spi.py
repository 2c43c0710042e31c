"""Standardized Precipitation Index in the Pearson Type III distribution.

Monthly precipitation is summed over rolling windows of 1, 3, 6, 9, and
12 months, a zero-inflated Pearson Type III distribution is fitted to
each calendar month's aggregates, and the fitted cumulative probability
is mapped through the inverse standard normal. The mixed CDF is

    H(x) = q + (1 - q) * G(x)   for x > 0,      H(0) = q,

with ``q`` the fraction of exactly-zero aggregates and ``G`` the Pearson
Type III CDF fitted to the nonzero aggregates by L-moments (the standard
estimator in operational SPI software). SPI values are clamped to
[-3.09, +3.09], about the 0.1/99.9 percentile of the standard normal, so
extreme tails never map to infinity.

The calibration period is the full record that is supplied. Fits become
unreliable on short records; fewer than 240 monthly samples (20 years)
triggers a warning, and a calendar month with fewer than 20 defined
aggregates refuses to fit at all.

All math is 64-bit; identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln, ndtr, ndtri

from .errors import FitError, ValidationError
from .ingest import MonthlySeries

#: Supported aggregation windows, in months.
WINDOWS = (1, 3, 6, 9, 12)

#: SPI values are clamped to +/- this bound.
SPI_CLAMP = 3.09

#: Minimum defined aggregates per calendar month for a fit.
MIN_FIT_SAMPLES = 20

#: Records shorter than this (in months) trigger a calibration warning.
CALIBRATION_WARN_MONTHS = 240

#: Below this absolute L-skewness the fit degenerates to a normal.
_SKEW_EPS = 1e-7


def _pearson3_cdf(x, skew: float, loc: float, scale: float) -> np.ndarray:
    """Pearson Type III CDF in (skew, mean, standard deviation) form.

    The distribution is a shifted gamma with shape 4/skew^2, reflected
    for negative skew; at |skew| ~ 0 it degenerates to a normal.
    Equivalent to scipy.stats.pearson3.cdf but evaluated directly
    through the regularized incomplete gamma ufuncs.
    """
    x = np.asarray(x, dtype=np.float64)
    if abs(skew) < _SKEW_EPS:
        return ndtr((x - loc) / scale)
    alpha = 4.0 / (skew * skew)
    beta = 0.5 * scale * abs(skew)
    if skew > 0:
        lower = loc - 2.0 * scale / skew
        return gammainc(alpha, np.maximum((x - lower) / beta, 0.0))
    upper = loc + 2.0 * scale / abs(skew)
    return gammaincc(alpha, np.maximum((upper - x) / beta, 0.0))


@dataclass(frozen=True)
class AggregateSeries:
    """Rolling k-month precipitation sums aligned to the window's end month.

    Entries before index ``window - 1`` are undefined and stored as NaN.
    """

    region_id: str
    window: int
    start: int
    values: np.ndarray

    @property
    def months(self) -> np.ndarray:
        return self.start + np.arange(len(self.values))


@dataclass(frozen=True)
class DistributionFit:
    """Zero-inflated Pearson Type III fit for one calendar month and window.

    ``shape`` is the skew parameter of :data:`scipy.stats.pearson3`;
    ``location`` and ``scale`` are the mean and standard deviation of the
    nonzero aggregates implied by their L-moments.
    """

    calendar_month: int
    window: int
    q_zero: float
    shape: float
    scale: float
    location: float
    n_fit: int

    def cdf(self, x: np.ndarray) -> np.ndarray:
        """Mixed CDF H(x); exactly ``q_zero`` at x == 0."""
        x = np.asarray(x, dtype=np.float64)
        g = _pearson3_cdf(x, self.shape, self.location, self.scale)
        return np.where(x > 0.0, self.q_zero + (1.0 - self.q_zero) * g, self.q_zero)


@dataclass(frozen=True)
class SpiSeries:
    """SPI values for one region and window; NaN marks undefined entries."""

    region_id: str
    window: int
    start: int
    values: np.ndarray

    @property
    def months(self) -> np.ndarray:
        return self.start + np.arange(len(self.values))


def aggregate(series: MonthlySeries, window: int) -> AggregateSeries:
    """Rolling ``window``-month sums of a monthly series.

    Output has the input's length; the first ``window - 1`` entries are NaN.
    """
    if window not in WINDOWS:
        raise ValidationError(
            f"region {series.region_id}: unsupported window {window}; "
            f"choose one of {WINDOWS}"
        )
    n = len(series.values)
    if n < window:
        raise ValidationError(
            f"region {series.region_id}: series of {n} months is shorter "
            f"than the {window}-month window"
        )
    values = np.full(n, np.nan)
    if window == 1:
        values[:] = series.values
    else:
        sums = np.lib.stride_tricks.sliding_window_view(series.values, window).sum(axis=1)
        values[window - 1:] = sums
    return AggregateSeries(series.region_id, window, series.start, values)


def _sample_lmoments(x: np.ndarray) -> tuple[float, float, float]:
    """First three sample L-moments from unbiased probability-weighted moments."""
    x = np.sort(x)
    n = len(x)
    i = np.arange(n, dtype=np.float64)
    b0 = x.mean()
    b1 = float(np.sum(x * i) / (n * (n - 1.0)))
    b2 = float(np.sum(x * i * (i - 1.0)) / (n * (n - 1.0) * (n - 2.0)))
    l1 = b0
    l2 = 2.0 * b1 - b0
    l3 = 6.0 * b2 - 6.0 * b1 + b0
    return l1, l2, l3


def _pearson3_from_lmoments(l1: float, l2: float, t3: float) -> tuple[float, float, float]:
    """Pearson Type III (skew, location, scale) from L-moments.

    Hosking's rational-polynomial estimator: the shape alpha of the
    underlying gamma is approximated from the L-skewness t3, then
    converted to scipy's (skew, loc, scale) parameterization.
    """
    if abs(t3) < _SKEW_EPS:
        return 0.0, l1, l2 * np.sqrt(np.pi)
    t = abs(t3)
    if t < 1.0 / 3.0:
        z = 3.0 * np.pi * t * t
        alpha = (1.0 + 0.2906 * z) / (z + 0.1882 * z * z + 0.0442 * z ** 3)
    else:
        z = 1.0 - t
        alpha = (0.36067 * z - 0.59567 * z * z + 0.25361 * z ** 3) / (
            1.0 - 2.78861 * z + 2.56096 * z * z - 0.77045 * z ** 3
        )
    skew = 2.0 / np.sqrt(alpha) * np.sign(t3)
    # sigma = l2 * sqrt(pi * alpha) * Gamma(alpha) / Gamma(alpha + 1/2)
    sigma = l2 * np.sqrt(np.pi * alpha) * np.exp(gammaln(alpha) - gammaln(alpha + 0.5))
    return float(skew), float(l1), float(sigma)


def _cover_sample_tails(shape: float, location: float, scale: float,
                        sample: np.ndarray) -> float:
    """Shrink the skew until the fitted tails cover the observed sample.

    Small-sample L-moment fits occasionally place their support bound
    inside the sample range, so an observed extreme maps to cumulative
    probability near 0 or 1 and the transformed record grows a spurious
    clamped outlier. Requiring at least 1/(2(n+1)) tail mass beyond the
    sample extremes (half the usual plotting position) leaves
    well-behaved fits untouched.
    """
    if shape == 0.0:
        return shape
    floor = 1.0 / (2.0 * (len(sample) + 1.0))
    extremes = np.array([float(sample.min()), float(sample.max())])
    for _ in range(200):
        g = _pearson3_cdf(extremes, shape, location, scale)
        if g[0] >= floor and g[1] <= 1.0 - floor:
            break
        shape *= 0.95
    return shape


def fit_month(
    aggregates: np.ndarray, *, calendar_month: int, window: int
) -> DistributionFit:
    """Fit the zero-inflated Pearson Type III to one calendar month's aggregates.

    ``aggregates`` are the defined k-month sums of one calendar month
    across years. Requires at least 20 samples and at least 3 distinct
    nonzero values; otherwise the fit is refused rather than left
    silently unstable.
    """
    x = np.asarray(aggregates, dtype=np.float64)
    x = x[~np.isnan(x)]
    where = f"calendar month {calendar_month:02d}, window {window}"
    if len(x) < MIN_FIT_SAMPLES:
        raise FitError(
            f"{where}: {len(x)} defined samples, at least {MIN_FIT_SAMPLES} required"
        )
    nonzero = x[x > 0.0]
    if len(np.unique(nonzero)) < 3:
        raise FitError(
            f"{where}: degenerate sample, need at least 3 distinct nonzero values"
        )
    q_zero = float(np.count_nonzero(x == 0.0) / len(x))
    l1, l2, l3 = _sample_lmoments(nonzero)
    if not l2 > 0.0:
        raise FitError(f"{where}: degenerate sample, zero L-scale")
    shape, location, scale = _pearson3_from_lmoments(l1, l2, l3 / l2)
    shape = _cover_sample_tails(shape, location, scale, nonzero)
    if not (np.isfinite(shape) and np.isfinite(location) and np.isfinite(scale) and scale > 0):
        raise FitError(f"{where}: fit produced non-finite parameters")
    return DistributionFit(
        calendar_month=calendar_month,
        window=window,
        q_zero=q_zero,
        shape=shape,
        scale=scale,
        location=location,
        n_fit=len(x),
    )


def fit_all_months(agg: AggregateSeries) -> dict[int, DistributionFit]:
    """Fit every calendar month of an aggregate series; full record calibrates."""
    months = agg.months
    fits = {}
    for cm in range(1, 13):
        mask = (months % 12 + 1 == cm) & ~np.isnan(agg.values)
        if not mask.any():
            continue
        fits[cm] = fit_month(agg.values[mask], calendar_month=cm, window=agg.window)
    return fits


def transform(agg: AggregateSeries, fits: dict[int, DistributionFit]) -> SpiSeries:
    """Map aggregates through their calendar month's mixed CDF to SPI.

    SPI = ndtri(H(x)) clamped to [-3.09, +3.09]; undefined aggregates
    stay undefined. A calendar month without a fit is rejected.
    """
    months = agg.months
    values = np.full(len(agg.values), np.nan)
    defined = ~np.isnan(agg.values)
    for cm in np.unique(months[defined] % 12 + 1):
        fit = fits.get(int(cm))
        if fit is None:
            raise FitError(
                f"region {agg.region_id}, window {agg.window}: no distribution "
                f"fit for calendar month {int(cm):02d}"
            )
        mask = defined & (months % 12 + 1 == cm)
        h = fit.cdf(agg.values[mask])
        with np.errstate(divide="ignore"):
            values[mask] = np.clip(ndtri(h), -SPI_CLAMP, SPI_CLAMP)
    return SpiSeries(agg.region_id, agg.window, agg.start, values)


def compute_spi(series: MonthlySeries, windows=WINDOWS) -> dict[int, SpiSeries]:
    """Aggregate, fit, and transform one region's record at each window.

    The full supplied record is the calibration period; records shorter
    than 240 months are accepted with a warning because the resulting
    fits rest on thin per-month samples.
    """
    if len(series) < CALIBRATION_WARN_MONTHS:
        warnings.warn(
            f"region {series.region_id}: record of {len(series)} months is "
            f"shorter than {CALIBRATION_WARN_MONTHS}; SPI fits may be unstable",
            stacklevel=2,
        )
    out = {}
    for window in windows:
        agg = aggregate(series, window)
        fits = fit_all_months(agg)
        out[window] = transform(agg, fits)
    return out
