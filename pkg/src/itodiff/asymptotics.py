"""Finite-sample verdicts for ``o_p(h)`` and ``O_p(h)`` window conditions.

A statistic ``S(h)`` is evaluated on a geometric ladder of window lengths;
the empirical ``quantile`` of ``S(h)`` is regressed on ``h`` in log-log
coordinates, and the slope is compared with ``1``:

* slope ``> 1 + tol``        ``LITTLE_O``
* ``|slope - 1| <= tol``  ``BIG_O``
* slope ``< 1 - tol``        ``UNBOUNDED``

A ladder only samples the "for every sequence ``h_n -> 0``" quantifier, so
every verdict is a diagnostic, not a proof.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import (
    GridCoverageError,
    InvalidArgumentError,
    ShapeMismatchError,
    UnsupportedProcessError,
)
from .paths import (
    PathBundle,
    ProcessKind,
    ProcessSpec,
    TimeGrid,
    simulate,
    simulate_brownian,
)
from .variation import WindowKind, window_stat

__all__ = [
    "Verdict",
    "LadderConfig",
    "AsymptoticVerdict",
    "verdict_for_slope",
    "classify_curve",
    "classify_samples",
    "classify_order",
    "classify_levels",
    "MeanForwardEstimate",
    "mean_forward_derivative",
    "DifferentialCheck",
    "as_differential_check",
    "increment_correlation",
    "LADDER_CAVEAT",
]

LADDER_CAVEAT = "finite ladder: heuristic sample of the all-sequences quantifier"
MIN_PATHS = 100


class Verdict(str, enum.Enum):
    LITTLE_O = "LITTLE_O"
    BIG_O = "BIG_O"
    UNBOUNDED = "UNBOUNDED"

    @property
    def bounded(self) -> bool:
        return self is not Verdict.UNBOUNDED


@dataclass(frozen=True)
class LadderConfig:
    """Geometric ladder ``h_max * ratio**k``, ``k = 0..n_levels-1``."""

    h_max: float = 2.0**-4
    ratio: float = 0.5
    n_levels: int = 9
    quantile: float = 0.95
    slope_tol: float = 0.15

    def __post_init__(self):
        if not self.h_max > 0:
            raise InvalidArgumentError("h_max must be positive")
        if not 0 < self.ratio < 1:
            raise InvalidArgumentError("ratio must lie in (0, 1)")
        if int(self.n_levels) != self.n_levels or self.n_levels < 4:
            raise InvalidArgumentError("the slope fit needs at least 4 levels")
        if not 0 < self.quantile < 1:
            raise InvalidArgumentError("quantile must lie in (0, 1)")
        if not self.slope_tol > 0:
            raise InvalidArgumentError("slope_tol must be positive")

    @property
    def levels(self) -> np.ndarray:
        """Window lengths, strictly decreasing."""
        return self.h_max * self.ratio ** np.arange(self.n_levels)

    @property
    def h_min(self) -> float:
        return float(self.levels[-1])

    def check_grid(self, grid: TimeGrid, t: float) -> None:
        if self.h_min < 2 * grid.step * (1 - 1e-9):
            raise InvalidArgumentError(
                f"smallest window {self.h_min} spans fewer than two grid steps ({grid.step})"
            )
        if not grid.covers(t, t + self.h_max):
            raise GridCoverageError(f"ladder [{t}, {t + self.h_max}] outside the grid")

    def grid_for(self, t: float, steps_per_min_window: int = 16) -> TimeGrid:
        """Grid on ``[t, t + h_max]`` with the given resolution of the smallest window."""
        n = int(round(self.h_max / self.h_min)) * int(steps_per_min_window)
        return TimeGrid(t, t + self.h_max, n)


@dataclass(frozen=True)
class AsymptoticVerdict:
    verdict: Verdict
    slope: float
    slope_stderr: float
    quantile_curve: tuple  # ((h, quantile), ...)
    degenerate: bool = False
    notes: str = LADDER_CAVEAT

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "slope": json_number(self.slope),
            "slope_stderr": json_number(self.slope_stderr),
            "levels": [{"h": h, "quantile": q} for h, q in self.quantile_curve],
            "degenerate": self.degenerate,
            "notes": self.notes,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def json_number(v: float):
    """Finite floats pass through; non-finite ones become strings for strict JSON."""
    v = float(v)
    if math.isfinite(v):
        return v
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def verdict_for_slope(slope: float, tol: float = 0.15) -> Verdict:
    if slope > 1 + tol:
        return Verdict.LITTLE_O
    if slope >= 1 - tol:
        return Verdict.BIG_O
    return Verdict.UNBOUNDED


def classify_curve(h: Sequence[float], q: Sequence[float], tol: float = 0.15) -> AsymptoticVerdict:
    """Fit the log-log slope of a quantile curve and classify it.

    A curve that is zero at every level is ``LITTLE_O`` with slope ``+inf``.
    Zeros confined to the finest levels mean faster-than-power decay and get
    the same treatment.
    """
    h = np.asarray(h, dtype=float)
    q = np.asarray(q, dtype=float)
    if h.shape != q.shape or h.size < 4:
        raise ShapeMismatchError("need matching h and quantile arrays of length >= 4")
    if np.any(np.diff(h) >= 0):
        raise InvalidArgumentError("ladder h must be strictly decreasing")
    curve = tuple((float(a), float(b)) for a, b in zip(h, q))
    if np.any(q < 0):
        raise InvalidArgumentError("window statistics must be nonnegative")
    if np.any(q == 0):
        return AsymptoticVerdict(Verdict.LITTLE_O, math.inf, 0.0, curve, degenerate=True)
    fit = stats.linregress(np.log(h), np.log(q))
    slope = float(fit.slope)
    return AsymptoticVerdict(verdict_for_slope(slope, tol), slope, float(fit.stderr), curve)


def classify_samples(h: Sequence[float], samples: Sequence[np.ndarray], cfg: LadderConfig = LadderConfig()):
    """Classify per-level sample arrays ``S(h_k)`` with the ladder's quantile rule."""
    q = [float(np.quantile(np.asarray(s, dtype=float), cfg.quantile)) for s in samples]
    return classify_curve(h, q, cfg.slope_tol)


def ladder_samples(
    bundle: PathBundle, kind, t: float, cfg: LadderConfig, components=None, norm=2
) -> list:
    """Per-path window statistics at every ladder level.

    ``RUNNING_MAX`` is squared so that all three kinds scale like ``h`` for a
    Brownian driver.
    """
    kind = WindowKind(kind)
    if kind is WindowKind.QCOV:
        raise InvalidArgumentError("QCOV is signed and cannot be classified")
    cfg.check_grid(bundle.grid, t)
    out = []
    for h in cfg.levels:
        s = window_stat(bundle, kind, t, float(h), components, norm=norm).value_per_path
        out.append(s**2 if kind is WindowKind.RUNNING_MAX else s)
    return out


def classify_order(
    bundle: PathBundle, kind, t: float, cfg: LadderConfig = LadderConfig(), components=None, norm=2
) -> AsymptoticVerdict:
    """Order-in-``h`` verdict for ``TV``, ``QV`` or squared ``RUNNING_MAX`` at ``t``.

    Parameters
    ----------
    bundle : PathBundle
        At least 100 paths, sampled on a grid covering ``[t, t + h_max]``
        with two or more steps in the smallest window.
    kind : WindowKind or str
    t : float
    cfg : LadderConfig
    """
    if bundle.n_paths < MIN_PATHS:
        raise InvalidArgumentError(f"classification needs at least {MIN_PATHS} paths")
    samples = ladder_samples(bundle, kind, t, cfg, components, norm)
    return classify_samples(cfg.levels, samples, cfg)


def classify_levels(
    bundles: Sequence[PathBundle], kind, t: float, cfg: LadderConfig = LadderConfig(),
    components=None, norm=2,
) -> AsymptoticVerdict:
    """Like :func:`classify_order`, with one independently simulated bundle per level.

    Bundle ``k`` must cover ``[t, t + h_k]``; its own grid is the partition.
    Regenerating each level with a fixed number of steps per window removes
    the resolution drift that nested windows on one grid impose on the
    quantiles (small windows see few steps, large windows many).
    """
    kind = WindowKind(kind)
    if kind is WindowKind.QCOV:
        raise InvalidArgumentError("QCOV is signed and cannot be classified")
    if len(bundles) != cfg.n_levels:
        raise ShapeMismatchError(f"need {cfg.n_levels} level bundles, got {len(bundles)}")
    samples = []
    for b, h in zip(bundles, cfg.levels):
        if b.n_paths < MIN_PATHS:
            raise InvalidArgumentError(f"classification needs at least {MIN_PATHS} paths")
        if b.grid.window_indices(t, float(h))[1] - b.grid.window_indices(t, float(h))[0] < 2:
            raise InvalidArgumentError("each level window needs at least two grid steps")
        s = window_stat(b, kind, t, float(h), components, norm=norm).value_per_path
        samples.append(s**2 if kind is WindowKind.RUNNING_MAX else s)
    return classify_samples(cfg.levels, samples, cfg)


# -- mean forward derivative ------------------------------------------------


@dataclass(frozen=True)
class MeanForwardEstimate:
    """Conditional drift and diffusion-covariance estimates at ``t``.

    ``mu`` and ``sigma_sq`` are taken at the smallest ladder level; the
    standard errors are the cross-trunk dispersion of per-trunk estimates.
    ``curve`` keeps ``(h, mu, sigma_sq)`` at every level.
    """

    t: float
    mu: np.ndarray
    mu_se: np.ndarray
    sigma_sq: np.ndarray
    sigma_sq_se: np.ndarray
    curve: tuple = field(repr=False, default=())


def _driver_dims(spec: ProcessSpec) -> int:
    if spec.kind is ProcessKind.ITO:
        x = spec.x0_vector[None, :]
        sig = np.asarray(spec.diffusion_fn(0.0, x), dtype=float)
        return int(sig.shape[-1]) if sig.ndim >= 2 else 1
    if spec.kind is ProcessKind.BROWNIAN:
        return int(spec.x0_vector.shape[0])
    return 1


def _continue_driver(grid: TimeGrid, w_t: np.ndarray, n: int, seed: int, first_path: int) -> PathBundle:
    fresh = simulate_brownian(TimeGrid(0.0, grid.t_end - grid.t_start, grid.n_steps),
                              w_t.shape[0], n, seed, first_path=first_path)
    return PathBundle(grid, fresh.values + w_t, seed, fresh.path_seed_rule,
                      {"first_path": first_path, "branched": True})


def mean_forward_derivative(
    spec: ProcessSpec,
    t: float,
    trunk_paths: int,
    branches: int,
    h_ladder: LadderConfig = LadderConfig(),
    seed: int = 0,
    *,
    steps_per_min_window: int = 16,
    transform: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
) -> MeanForwardEstimate:
    """Estimate ``lim E[X_{t,t+h} | F_t] / h`` and the conditional covariance rate.

    Each of ``trunk_paths`` trunks is simulated on ``[0, t]``; from its state
    ``branches`` independent continuations are simulated on ``[t, t + h_max]``.
    Trunk ``i`` uses paths ``0..trunk_paths-1`` of ``seed``; its branches use
    stream keys starting at ``(i + 1) << 32``.

    ``transform(times, values)`` maps branch values ``(n, k, m)`` to
    ``(n, k, q)`` before increments are taken, so the estimate is for
    ``f(X)`` rather than ``X``.

    ``TIME_ROOT`` is not Markov in the driver's clock and is rejected.
    """
    if branches < 2:
        raise InvalidArgumentError("need at least two branches per trunk")
    if trunk_paths < 1:
        raise InvalidArgumentError("need at least one trunk")
    if t < 0:
        raise InvalidArgumentError("t must be non-negative")
    if spec.kind is ProcessKind.TIME_ROOT:
        raise UnsupportedProcessError("TIME_ROOT has no Markov branching in its driver clock")
    d = _driver_dims(spec)
    bgrid = h_ladder.grid_for(t, steps_per_min_window)
    if t > 0:
        n_trunk = max(1, int(math.ceil(t / bgrid.step - 1e-9)))
        tgrid = TimeGrid(0.0, t, n_trunk)
        tdriver = simulate_brownian(tgrid, d, trunk_paths, seed)
        trunk = simulate(spec, tgrid, tdriver)
        x_t = trunk.values[:, -1, :]
        w_t = tdriver.values[:, -1, :]
    else:
        x_t = None
        w_t = np.zeros((trunk_paths, d))

    idx = [bgrid.window_indices(t, float(h))[1] for h in h_ladder.levels]
    per_mu, per_sig = [], []
    for i in range(trunk_paths):
        driver = _continue_driver(bgrid, w_t[i], branches, seed, (i + 1) << 32)
        if x_t is None:
            branch = simulate(spec, bgrid, driver)
        elif spec.kind is ProcessKind.ITO:
            branch = simulate(spec, bgrid, driver, x_start=x_t[i])
        elif spec.kind in (ProcessKind.BROWNIAN, ProcessKind.W2_DRIFT, ProcessKind.PATHOLOGICAL_BV):
            branch = simulate(spec, bgrid, driver)
        else:  # OSCILLATING_INTEGRAL restarts from the trunk state
            shifted = ProcessSpec(spec.kind, x0=float(x_t[i, 0]), params=spec.params)
            branch = simulate(shifted, bgrid, driver)
        vals = branch.values
        if transform is not None:
            vals = np.asarray(transform(bgrid.times, vals), dtype=float)
            if vals.ndim == 2:
                vals = vals[:, :, None]
        x0 = vals[:, 0, :]
        mus, sigs = [], []
        for h, k in zip(h_ladder.levels, idx):
            inc = vals[:, k, :] - x0
            mus.append(inc.mean(axis=0) / h)
            dev = inc - inc.mean(axis=0)
            sigs.append(dev.T @ dev / (branches - 1) / h)
        per_mu.append(mus)
        per_sig.append(sigs)
    per_mu = np.asarray(per_mu)  # (trunk, level, m)
    per_sig = np.asarray(per_sig)  # (trunk, level, m, m)

    def se(a):
        if trunk_paths < 2:
            return np.full(a.shape[1:], np.nan)
        return a.std(axis=0, ddof=1) / math.sqrt(trunk_paths)

    curve = tuple(
        (float(h), per_mu[:, k].mean(axis=0), per_sig[:, k].mean(axis=0))
        for k, h in enumerate(h_ladder.levels)
    )
    return MeanForwardEstimate(
        float(t),
        per_mu[:, -1].mean(axis=0),
        se(per_mu[:, -1]),
        per_sig[:, -1].mean(axis=0),
        se(per_sig[:, -1]),
        curve,
    )


# -- alternative differential along coefficient paths -----------------------


@dataclass(frozen=True)
class DifferentialCheck:
    holds: bool
    mu_averages: np.ndarray
    sigma_averages: np.ndarray
    mu_exponent: float
    sigma_exponent: float
    levels: np.ndarray

    def __bool__(self):
        return self.holds


def _window_average(fn: Callable[[float], float], t: float, h: float) -> float:
    val, _ = integrate.quad(fn, t, t + h, limit=200)
    return val / h


def _decay(h: np.ndarray, avg: np.ndarray, atol: float, min_exponent: float):
    avg = np.abs(avg)
    if np.all(avg <= atol):
        return True, math.inf
    if np.any(avg <= 0):
        pos = avg > 0
        if pos.sum() < 2:
            return True, math.inf
        h, avg = h[pos], avg[pos]
    slope = float(stats.linregress(np.log(h), np.log(avg)).slope)
    return slope >= min_exponent, slope


def as_differential_check(
    mu_path: Callable[[float], np.ndarray],
    sigma_path: Callable[[float], np.ndarray],
    t: float,
    h_ladder: LadderConfig = LadderConfig(),
    *,
    atol: float = 1e-12,
    min_exponent: float = 0.1,
) -> DifferentialCheck:
    """Pathwise test that ``(1/h) int_t^{t+h} |mu_s| ds`` and the same average of
    ``|sigma_s sigma_s^T|`` both tend to zero.

    An average "tends to zero" when it is below ``atol`` on the whole ladder
    or its log-log decay exponent is at least ``min_exponent``.
    """

    def mu_norm(s):
        return float(np.linalg.norm(np.atleast_1d(np.asarray(mu_path(s), dtype=float))))

    def sig_norm(s):
        sig = np.atleast_2d(np.asarray(sigma_path(s), dtype=float))
        return float(np.linalg.norm(sig @ sig.T))

    h = h_ladder.levels
    mu_avg = np.array([_window_average(mu_norm, t, float(x)) for x in h])
    sig_avg = np.array([_window_average(sig_norm, t, float(x)) for x in h])
    mu_ok, mu_exp = _decay(h, mu_avg, atol, min_exponent)
    sig_ok, sig_exp = _decay(h, sig_avg, atol, min_exponent)
    return DifferentialCheck(mu_ok and sig_ok, mu_avg, sig_avg, mu_exp, sig_exp, h)


def increment_correlation(x: PathBundle, y: PathBundle, t: float, cfg: LadderConfig = LadderConfig()):
    """Sample correlation of ``X_{t,t+h}`` and ``Y_{t,t+h}`` at each ladder level.

    Returns an array of shape ``(n_levels, 2)`` holding ``(h, corr)``.
    """
    if x.grid != y.grid or x.n_paths != y.n_paths:
        raise ShapeMismatchError("bundles must share grid and path count")
    cfg.check_grid(x.grid, t)
    rows = []
    for h in cfg.levels:
        i0, i1 = x.grid.window_indices(t, float(h))
        dx = x.values[:, i1, 0] - x.values[:, i0, 0]
        dy = y.values[:, i1, 0] - y.values[:, i0, 0]
        rows.append((float(h), float(np.corrcoef(dx, dy)[0, 1])))
    return np.array(rows)
