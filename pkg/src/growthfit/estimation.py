"""Maximum-likelihood fitting over grids, interval partitions, and changepoints.

All fits are grid argmaxes, so results are deterministic and reproducible:
ties resolve to the first grid point scanned (the smallest exponent, the
lexicographically smallest weight vector, the earliest change time).  The
mixture-weight grid is the unit simplex sampled at a fixed resolution; the
exponent grid is linear.  Interval fits split the stream into J groups,
either with equal increment counts or with equal timestamp spans, and fit
weights independently per group; nested fits with growing J are compared
with a likelihood-ratio test whose null distribution is chi-square with
(L - 1) * (J1 - J0) degrees of freedom.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import (
    FitError,
    IntervalUnderflowError,
    NestingViolationError,
    NoFeasibleFitError,
)
from .graph import GrowthStream
from .likelihood import (
    ChoiceCache,
    DPTrace,
    LikelihoodSummary,
    build_choice_cache,
    build_dp_trace,
    cache_logratios,
    cache_loglik,
    dp_trace_logp,
    dp_trace_loglik,
    per_choice_ratio,
    score_stream,
)
from .models import BoundaryMode, Component, MixtureInterval, ModelSchedule
from .modelspec import format_component, parse_model_spec

DEFAULT_WEIGHT_STEP = 0.01


def default_alpha_grid() -> np.ndarray:
    """Exponent grid -0.10 .. 2.10 inclusive, step 0.01 (221 points)."""
    return np.round(np.arange(-10, 211) * 0.01, 10)


def simplex_grid(num_components: int, step: float = DEFAULT_WEIGHT_STEP) -> np.ndarray:
    """All weight vectors on the unit simplex at the given resolution.

    Rows are in ascending lexicographic order of the integer unit counts, so
    the first-maximum rule picks the lexicographically smallest tie.
    """
    units = round(1.0 / step)
    if abs(units * step - 1.0) > 1e-9 or units < 1:
        raise FitError(f"weight step {step} must divide 1")
    if num_components == 1:
        return np.ones((1, 1))

    def compositions(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for rest in compositions(total - head, parts - 1):
                yield (head, *rest)

    lattice = np.array(list(compositions(units, num_components)), dtype=np.float64)
    return lattice / units


def _argmax_first(values: np.ndarray) -> int:
    """Index of the strict maximum, earliest on ties; rejects all-impossible."""
    best = int(np.argmax(values))
    if values[best] == -np.inf or np.isnan(values[best]):
        raise NoFeasibleFitError("every grid point has zero likelihood")
    return best


@dataclass
class ScalarFit:
    """Best exponent for a one-parameter family on a fixed grid."""

    value: float
    loglik: float
    loglik_rand: float
    total_choices: int
    grid: np.ndarray
    logliks: np.ndarray

    @property
    def c0(self) -> float:
        return per_choice_ratio(self.loglik, self.loglik_rand, self.total_choices)


def fit_degree_exponent(
    source: GrowthStream | DPTrace,
    grid: np.ndarray | None = None,
    seed: int = 0,
    ordering_samples: int | None = None,
) -> ScalarFit:
    """Scan the degree-power exponent over a grid (single-component model)."""
    if isinstance(source, DPTrace):
        trace = source
    else:
        kwargs = {} if ordering_samples is None else {"ordering_samples": ordering_samples}
        trace = build_dp_trace(source, seed=seed, **kwargs)
    grid = default_alpha_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    logliks = dp_trace_loglik(trace, grid)
    best = _argmax_first(logliks)
    return ScalarFit(
        value=float(grid[best]),
        loglik=float(logliks[best]),
        loglik_rand=float(trace.logp_rand.sum()),
        total_choices=trace.total_choices,
        grid=grid,
        logliks=logliks,
    )


def fit_component_family(
    stream: GrowthStream,
    family: Callable[[float], Component],
    grid: Sequence[float],
    seed: int = 0,
) -> ScalarFit:
    """Generic grid fit of any one-parameter component family (full rescoring)."""
    logliks = []
    summary: LikelihoodSummary | None = None
    for value in grid:
        summary, _ = score_stream(stream, family(float(value)), seed=seed)
        logliks.append(summary.loglik)
    logliks = np.array(logliks)
    best = _argmax_first(logliks)
    assert summary is not None
    return ScalarFit(
        value=float(grid[best]),
        loglik=float(logliks[best]),
        loglik_rand=summary.loglik_rand,
        total_choices=summary.total_choices,
        grid=np.asarray(grid, dtype=np.float64),
        logliks=logliks,
    )


@dataclass
class WeightFit:
    """Best mixture weights over one increment range."""

    weights: np.ndarray
    loglik: float
    loglik_rand: float
    total_choices: int
    start: int
    stop: int


def fit_mixture_weights(
    cache: ChoiceCache,
    start: int = 0,
    stop: int | None = None,
    step: float = DEFAULT_WEIGHT_STEP,
    threads: int = 1,
    grid: np.ndarray | None = None,
) -> WeightFit:
    """Grid argmax of mixture weights over one increment range of a cache."""
    stop = cache.num_increments if stop is None else stop
    if stop <= start:
        raise IntervalUnderflowError(f"empty increment range [{start}, {stop})")
    grid = simplex_grid(len(cache.components), step) if grid is None else grid
    if threads > 1 and grid.shape[0] > 256:
        bounds = np.linspace(0, grid.shape[0], threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(
                    lambda lohi: cache_loglik(cache, grid[lohi[0] : lohi[1]], start, stop),
                    zip(bounds[:-1], bounds[1:]),
                )
            )
        logliks = np.concatenate(parts)
    else:
        logliks = cache_loglik(cache, grid, start, stop)
    best = _argmax_first(logliks)
    return WeightFit(
        weights=grid[best].copy(),
        loglik=float(logliks[best]),
        loglik_rand=float(cache.logp_rand[start:stop].sum()),
        total_choices=int(cache.num_choices[start:stop].sum()),
        start=start,
        stop=stop,
    )


def partition_indices(cache: ChoiceCache, j: int, mode: str = "count") -> list[tuple[int, int]]:
    """Split the cache's increments into J contiguous groups.

    count mode: group sizes differ by at most one (cut at floor(j*I/J));
    time mode: equal spans of the observed timestamp range, each increment
    assigned by its timestamp with span edges as inclusive upper bounds.
    Every group must be nonempty.
    """
    n = cache.num_increments
    if j < 1:
        raise FitError("need at least one interval")
    if mode == "count":
        cuts = [n * k // j for k in range(j + 1)]
    elif mode == "time":
        ts = cache.timestamps
        lo, hi = float(ts[0]), float(ts[-1])
        edges = [lo + (hi - lo) * k / j for k in range(1, j)]
        cuts = [0] + [int(np.searchsorted(ts, e, side="right")) for e in edges] + [n]
    else:
        raise FitError(f"unknown interval mode {mode!r}")
    groups = list(zip(cuts[:-1], cuts[1:]))
    for lo, hi in groups:
        if hi <= lo:
            raise IntervalUnderflowError(
                f"interval partition J={j} ({mode}) leaves an empty group"
            )
    return groups


@dataclass
class FitResult:
    """A fitted piecewise-constant mixture with its score and diagnostics."""

    components: list[str]
    mode: str
    intervals: list[dict]
    loglik: float
    loglik_rand: float
    total_choices: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def num_intervals(self) -> int:
        return len(self.intervals)

    @property
    def c0(self) -> float:
        return per_choice_ratio(self.loglik, self.loglik_rand, self.total_choices)

    def to_dict(self) -> dict:
        return {
            "components": self.components,
            "mode": self.mode,
            "intervals": self.intervals,
            "logL": self.loglik,
            "logL_rand": self.loglik_rand,
            "choices": self.total_choices,
            "c0": self.c0,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def from_json(text: str) -> "FitResult":
        raw = json.loads(text)
        return FitResult(
            components=list(raw["components"]),
            mode=raw["mode"],
            intervals=list(raw["intervals"]),
            loglik=float(raw["logL"]),
            loglik_rand=float(raw["logL_rand"]),
            total_choices=int(raw["choices"]),
            diagnostics=dict(raw.get("diagnostics", {})),
        )

    def schedule(self) -> ModelSchedule:
        """Rebuild the fitted schedule for re-scoring or generation."""
        comps = tuple(parse_model_spec(c).components[0] for c in self.components)
        intervals = tuple(
            MixtureInterval(tuple(float(w) for w in iv["weights"]), comps)
            for iv in self.intervals
        )
        if self.mode == "time":
            boundaries = tuple(float(iv["end_time"]) for iv in self.intervals[:-1])
            return ModelSchedule(intervals, boundaries, BoundaryMode.TIMESTAMP)
        boundaries = tuple(float(iv["end_index"]) for iv in self.intervals[:-1])
        return ModelSchedule(intervals, boundaries, BoundaryMode.INDEX)


def fit_intervals(
    cache: ChoiceCache,
    j: int = 1,
    mode: str = "count",
    step: float = DEFAULT_WEIGHT_STEP,
    threads: int = 1,
) -> FitResult:
    """Independent weight fits on a J-interval partition of the stream."""
    groups = partition_indices(cache, j, mode)
    intervals: list[dict] = []
    loglik = 0.0
    for lo, hi in groups:
        part = fit_mixture_weights(cache, lo, hi, step=step, threads=threads)
        loglik += part.loglik
        intervals.append(
            {
                "weights": [float(w) for w in part.weights],
                "start_index": lo,
                "end_index": hi - 1,
                "start_time": int(cache.timestamps[lo]),
                "end_time": int(cache.timestamps[hi - 1]),
                "increments": hi - lo,
                "choices": part.total_choices,
            }
        )
    return FitResult(
        components=[format_component(c) for c in cache.components],
        mode=mode,
        intervals=intervals,
        loglik=loglik,
        loglik_rand=float(cache.logp_rand.sum()),
        total_choices=cache.total_choices,
        diagnostics={
            "sampled_increments": cache.sampled_increments,
            "fallback_choices": cache.fallback_choices,
            "weight_step": step,
        },
    )


def scan_interval_counts(
    cache: ChoiceCache,
    jmin: int = 1,
    jmax: int = 8,
    mode: str = "count",
    step: float = DEFAULT_WEIGHT_STEP,
    threads: int = 1,
) -> list[FitResult]:
    """fit_intervals at every J in [jmin, jmax]."""
    if jmin < 1 or jmax < jmin:
        raise FitError(f"bad interval-count range [{jmin}, {jmax}]")
    return [
        fit_intervals(cache, j, mode=mode, step=step, threads=threads)
        for j in range(jmin, jmax + 1)
    ]


@dataclass
class ChangepointFit:
    """Best single switch time between two fixed per-increment score series."""

    t_hat: float
    loglik: float
    grid: np.ndarray
    logliks: np.ndarray


def fit_changepoint(
    logp_pre: np.ndarray,
    logp_post: np.ndarray,
    timestamps: np.ndarray,
    grid: np.ndarray | None = None,
) -> ChangepointFit:
    """Maximize sum(pre logp for t <= T) + sum(post logp for t > T) over T.

    The candidate grid defaults to every observed timestamp.  Ties pick the
    earliest T, so a changeless stream (identical series) reports the start
    of the searched range.
    """
    logp_pre = np.asarray(logp_pre, dtype=np.float64)
    logp_post = np.asarray(logp_post, dtype=np.float64)
    timestamps = np.asarray(timestamps)
    if not (len(logp_pre) == len(logp_post) == len(timestamps)):
        raise FitError("score series and timestamps must have equal length")
    if len(timestamps) == 0:
        raise FitError("empty stream")
    if grid is None:
        grid = np.unique(timestamps)
    grid = np.asarray(grid, dtype=np.float64)
    pre_prefix = np.concatenate(([0.0], np.cumsum(logp_pre)))
    post_prefix = np.concatenate(([0.0], np.cumsum(logp_post)))
    post_total = post_prefix[-1]
    splits = np.searchsorted(timestamps, grid, side="right")
    logliks = pre_prefix[splits] + (post_total - post_prefix[splits])
    best = _argmax_first(logliks)
    return ChangepointFit(
        t_hat=float(grid[best]),
        loglik=float(logliks[best]),
        grid=grid,
        logliks=logliks,
    )


def changepoint_grid(t_lo: float, t_hi: float, points: int = 1000) -> np.ndarray:
    """Evenly spaced candidate switch times across [t_lo, t_hi]."""
    if t_hi < t_lo:
        raise FitError("empty changepoint range")
    return np.linspace(t_lo, t_hi, points + 1)


def fit_dp_changepoint(
    source: GrowthStream | DPTrace,
    alpha_pre: float,
    alpha_post: float,
    grid: np.ndarray | None = None,
    seed: int = 0,
) -> ChangepointFit:
    """Changepoint between two known degree-power exponents."""
    trace = source if isinstance(source, DPTrace) else build_dp_trace(source, seed=seed)
    return fit_changepoint(
        dp_trace_logp(trace, alpha_pre),
        dp_trace_logp(trace, alpha_post),
        trace.timestamps,
        grid=grid,
    )


@dataclass
class DPChangepointJointFit:
    t_hat: float
    alpha_pre: float
    alpha_post: float
    loglik: float


def fit_dp_changepoint_joint(
    source: GrowthStream | DPTrace,
    alpha_grid: np.ndarray | None = None,
    t_grid: np.ndarray | None = None,
    seed: int = 0,
) -> DPChangepointJointFit:
    """Jointly fit (T, pre exponent, post exponent) for a one-switch schedule."""
    trace = source if isinstance(source, DPTrace) else build_dp_trace(source, seed=seed)
    alpha_grid = default_alpha_grid() if alpha_grid is None else np.asarray(alpha_grid)
    if t_grid is None:
        t_grid = np.unique(trace.timestamps).astype(np.float64)
    logp = np.stack([dp_trace_logp(trace, float(a)) for a in alpha_grid])
    prefix = np.concatenate((np.zeros((len(alpha_grid), 1)), np.cumsum(logp, axis=1)), axis=1)
    total = prefix[:, -1]
    splits = np.searchsorted(trace.timestamps, t_grid, side="right")
    pre = prefix[:, splits]
    post = total[:, None] - pre
    pre_best = pre.argmax(axis=0)
    post_best = post.argmax(axis=0)
    scores = pre[pre_best, np.arange(len(splits))] + post[post_best, np.arange(len(splits))]
    best = _argmax_first(scores)
    return DPChangepointJointFit(
        t_hat=float(t_grid[best]),
        alpha_pre=float(alpha_grid[pre_best[best]]),
        alpha_post=float(alpha_grid[post_best[best]]),
        loglik=float(scores[best]),
    )


@dataclass
class WilksReport:
    """Likelihood-ratio test of nested fits."""

    statistic: float
    df: int
    p_value: float
    loglik_null: float
    loglik_alt: float

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "logL_null": self.loglik_null,
            "logL_alt": self.loglik_alt,
        }


def chi_square_sf(stat: float, df: int) -> float:
    """Upper tail of the chi-square distribution (regularized gamma Q)."""
    return float(special.gammaincc(df / 2.0, stat / 2.0))


def wilks_test(loglik_null: float, loglik_alt: float, df: int) -> WilksReport:
    """Two-times-log-likelihood-ratio test against chi-square with df dof.

    The alternative must nest the null; a lower alternative likelihood
    (beyond rounding) violates nesting and raises.
    """
    if df < 1:
        raise FitError(f"degrees of freedom must be positive, got {df}")
    stat = 2.0 * (loglik_alt - loglik_null)
    if stat < -1e-6:
        raise NestingViolationError(
            f"alternative logL {loglik_alt} below null {loglik_null}; models not nested"
        )
    stat = max(stat, 0.0)
    return WilksReport(
        statistic=stat,
        df=df,
        p_value=chi_square_sf(stat, df),
        loglik_null=loglik_null,
        loglik_alt=loglik_alt,
    )


def compare_interval_fits(coarse: FitResult, fine: FitResult) -> WilksReport:
    """Wilks test between two interval fits of the same component list.

    Degrees of freedom: (L - 1) extra free weights per added interval.
    """
    if coarse.components != fine.components:
        raise NestingViolationError("fits use different component lists")
    if fine.num_intervals <= coarse.num_intervals:
        raise NestingViolationError("alternative must use more intervals than the null")
    num_components = len(coarse.components)
    if num_components < 2:
        raise FitError("single-component fits have no free weights to test")
    df = (num_components - 1) * (fine.num_intervals - coarse.num_intervals)
    return wilks_test(coarse.loglik, fine.loglik, df)


def fit_stream_mixture(
    stream: GrowthStream,
    components: Sequence[Component],
    j: int = 1,
    mode: str = "count",
    step: float = DEFAULT_WEIGHT_STEP,
    seed: int = 0,
    ordering_samples: int | None = None,
    threads: int = 1,
    progress=None,
) -> tuple[FitResult, ChoiceCache]:
    """Build a cache and fit a J-interval mixture in one call."""
    kwargs = {} if ordering_samples is None else {"ordering_samples": ordering_samples}
    cache = build_choice_cache(stream, components, seed=seed, progress=progress, **kwargs)
    result = fit_intervals(cache, j, mode=mode, step=step, threads=threads)
    return result, cache


def changepoint_series_from_cache(cache: ChoiceCache, weights: np.ndarray) -> np.ndarray:
    """Per-increment logp under fixed mixture weights (for changepoint scans)."""
    return cache_logratios(cache, np.asarray(weights, dtype=np.float64)) + cache.logp_rand
