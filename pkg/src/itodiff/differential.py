"""Itô differentials as coefficient tuples, and empirical zero tests.

For an Itô process the differential at ``t`` lives in the module spanned by
``dt, dW^1, ..., dW^d`` with ``F_t``-measurable coefficients.  A differential
is stored as its coefficients realized on ``S`` scenarios:

* ``drift``      ``(S, m)``     coefficient of ``dt``
* ``diffusion``  ``(S, m, d)``  coefficients of ``dW^j``

Equality of differentials is equality of coefficients.  Processes outside
this span only get the path-based tests at the bottom of the module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .asymptotics import (
    AsymptoticVerdict,
    LadderConfig,
    MeanForwardEstimate,
    Verdict,
    classify_levels,
    classify_order,
    json_number,
    mean_forward_derivative,
)
from .errors import (
    DecompositionError,
    InvalidArgumentError,
    ShapeMismatchError,
    UnsupportedProcessError,
)
from .paths import (
    Decomposition,
    PathBundle,
    ProcessKind,
    ProcessSpec,
    TimeGrid,
    decompose,
    oscillating_phi,
    simulate_brownian,
)

__all__ = [
    "ATOL",
    "ItoDifferential",
    "dt",
    "dW",
    "zero",
    "basis",
    "add",
    "star",
    "scale",
    "expectation",
    "inner",
    "stack",
    "differential_of",
    "chain_rule",
    "DifferentialVerdict",
    "window_driver",
    "windowed_split",
    "level_splits",
    "test_zero",
    "test_equal",
    "FTCReport",
    "verify_ftc",
    "ChainRuleReport",
    "verify_chain_rule",
]

ATOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    v = a.view()
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class ItoDifferential:
    """Coefficients of a differential at time ``t`` on ``S`` scenarios.

    ``state`` optionally records the scenario values ``X_t`` the coefficients
    were evaluated at; it takes no part in the algebra.
    """

    t: float
    drift: np.ndarray
    diffusion: np.ndarray
    state: Optional[np.ndarray] = None

    def __post_init__(self):
        drift = np.asarray(self.drift, dtype=float)
        diffusion = np.asarray(self.diffusion, dtype=float)
        if drift.ndim != 2 or diffusion.ndim != 3:
            raise ShapeMismatchError("drift must be (S, m) and diffusion (S, m, d)")
        if diffusion.shape[:2] != drift.shape:
            raise ShapeMismatchError(
                f"drift {drift.shape} and diffusion {diffusion.shape} disagree on (S, m)"
            )
        if not (np.isfinite(drift).all() and np.isfinite(diffusion).all()):
            raise InvalidArgumentError("differential coefficients must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "drift", _readonly(drift))
        object.__setattr__(self, "diffusion", _readonly(diffusion))
        if self.state is not None:
            st = np.asarray(self.state, dtype=float)
            if st.ndim == 1:
                st = st[:, None]
            if st.shape[0] != drift.shape[0]:
                raise ShapeMismatchError("state must have one row per scenario")
            object.__setattr__(self, "state", _readonly(st))

    @property
    def n_scenarios(self) -> int:
        return self.drift.shape[0]

    @property
    def m(self) -> int:
        return self.drift.shape[1]

    @property
    def d(self) -> int:
        return self.diffusion.shape[2]

    def _like(self, drift, diffusion) -> "ItoDifferential":
        return ItoDifferential(self.t, drift, diffusion, self.state)

    def __add__(self, other: "ItoDifferential") -> "ItoDifferential":
        return add(self, other)

    def __neg__(self) -> "ItoDifferential":
        return self._like(-self.drift, -self.diffusion)

    def __sub__(self, other: "ItoDifferential") -> "ItoDifferential":
        return add(self, -other)

    def __rmul__(self, h) -> "ItoDifferential":
        return scale(h, self)

    def equals(self, other: "ItoDifferential", atol: float = ATOL) -> bool:
        _check_same(self, other)
        return bool(
            np.allclose(self.drift, other.drift, rtol=0, atol=atol)
            and np.allclose(self.diffusion, other.diffusion, rtol=0, atol=atol)
        )

    def is_zero(self, atol: float = ATOL) -> bool:
        return bool(np.all(np.abs(self.drift) <= atol) and np.all(np.abs(self.diffusion) <= atol))

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "m": self.m,
            "d": self.d,
            "drift": self.drift.tolist(),
            "diffusion": self.diffusion.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "ItoDifferential":
        drift = np.asarray(data["drift"], dtype=float).reshape(-1, int(data["m"]))
        diffusion = np.asarray(data["diffusion"], dtype=float).reshape(
            drift.shape[0], int(data["m"]), int(data["d"])
        )
        return cls(data["t"], drift, diffusion)

    @classmethod
    def from_json(cls, text: str) -> "ItoDifferential":
        return cls.from_dict(json.loads(text))


# -- constructors -------------------------------------------------------------


def zero(t: float, m: int = 1, d: int = 1, n_scenarios: int = 1) -> ItoDifferential:
    return ItoDifferential(t, np.zeros((n_scenarios, m)), np.zeros((n_scenarios, m, d)))


def dt(t: float, d: int = 1, n_scenarios: int = 1) -> ItoDifferential:
    """The scalar differential ``dt``."""
    return ItoDifferential(t, np.ones((n_scenarios, 1)), np.zeros((n_scenarios, 1, d)))


def dW(t: float, i: int, d: int = 1, n_scenarios: int = 1) -> ItoDifferential:
    """The scalar differential of the ``i``-th Brownian component (0-based)."""
    if not 0 <= i < d:
        raise InvalidArgumentError(f"Brownian index {i} outside 0..{d - 1}")
    diff = np.zeros((n_scenarios, 1, d))
    diff[:, 0, i] = 1.0
    return ItoDifferential(t, np.zeros((n_scenarios, 1)), diff)


def basis(t: float, d: int = 1, n_scenarios: int = 1) -> list:
    """Generating set ``[dt, dW^1, ..., dW^d]``."""
    return [dt(t, d, n_scenarios)] + [dW(t, i, d, n_scenarios) for i in range(d)]


# -- algebra ------------------------------------------------------------------


def _check_same(a: ItoDifferential, b: ItoDifferential, scalar: bool = False):
    if a.t != b.t:
        raise ShapeMismatchError(f"differentials at different times {a.t} and {b.t}")
    if a.drift.shape != b.drift.shape or a.d != b.d:
        raise ShapeMismatchError("differentials must share scenario count, m and d")
    if scalar and a.m != 1:
        raise ShapeMismatchError("operation defined for scalar differentials (m = 1)")


def add(a: ItoDifferential, b: ItoDifferential) -> ItoDifferential:
    _check_same(a, b)
    return a._like(a.drift + b.drift, a.diffusion + b.diffusion)


def star(a: ItoDifferential, b: ItoDifferential) -> ItoDifferential:
    """Covariation product: ``dW^i * dW^j = delta_ij dt`` and ``dt`` absorbs."""
    _check_same(a, b, scalar=True)
    drift = np.einsum("sj,sj->s", a.diffusion[:, 0, :], b.diffusion[:, 0, :])[:, None]
    return a._like(drift, np.zeros_like(a.diffusion))


def _scenario_scalars(h, n: int) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.ndim == 0:
        return np.full(n, float(h))
    h = h.reshape(-1)
    if h.shape[0] != n:
        raise ShapeMismatchError(f"{h.shape[0]} scalars for {n} scenarios")
    return h


def scale(h, a: ItoDifferential) -> ItoDifferential:
    """Multiply by ``F_t``-measurable scalars ``h`` (one per scenario)."""
    h = _scenario_scalars(h, a.n_scenarios)
    return a._like(a.drift * h[:, None], a.diffusion * h[:, None, None])


def expectation(a: ItoDifferential) -> np.ndarray:
    """``E_t[a]``: the ``dt`` coefficient, per scenario."""
    if a.m != 1:
        raise ShapeMismatchError("expectation is defined for scalar differentials")
    return a.drift[:, 0].copy()


def inner(a: ItoDifferential, b: ItoDifferential) -> np.ndarray:
    """``E_t[a] E_t[b] + E_t[a * b]``, per scenario."""
    _check_same(a, b, scalar=True)
    return a.drift[:, 0] * b.drift[:, 0] + np.einsum(
        "sj,sj->s", a.diffusion[:, 0, :], b.diffusion[:, 0, :]
    )


def stack(parts: Sequence[ItoDifferential]) -> ItoDifferential:
    """Vector differential from scalar (or vector) parts, concatenated on ``m``."""
    if not parts:
        raise InvalidArgumentError("nothing to stack")
    first = parts[0]
    for p in parts[1:]:
        if p.t != first.t or p.n_scenarios != first.n_scenarios or p.d != first.d:
            raise ShapeMismatchError("stacked parts must share t, scenarios and d")
    return ItoDifferential(
        first.t,
        np.concatenate([p.drift for p in parts], axis=1),
        np.concatenate([p.diffusion for p in parts], axis=1),
    )


def component(a: ItoDifferential, i: int) -> ItoDifferential:
    if not 0 <= i < a.m:
        raise ShapeMismatchError(f"component {i} outside 0..{a.m - 1}")
    st = None if a.state is None else a.state[:, i : i + 1]
    return ItoDifferential(a.t, a.drift[:, i : i + 1], a.diffusion[:, i : i + 1, :], st)


def differential_of(spec: ProcessSpec, t: float, states) -> ItoDifferential:
    """Coefficient differential of ``spec`` at ``t`` on the given scenario states.

    ``states`` holds ``X_t`` for ``ITO`` and ``BROWNIAN``.  ``W2_DRIFT`` is a
    function of the driver, so its ``states`` are the driver values ``W_t``;
    the recorded state is then ``X_t = W_t**2 - t + t**2``.
    """
    kind = spec.kind
    x = np.asarray(states, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if kind is ProcessKind.ITO:
        m = x.shape[1]
        mu = np.broadcast_to(np.asarray(spec.drift_fn(t, x), dtype=float), (n, m))
        sig = np.asarray(spec.diffusion_fn(t, x), dtype=float)
        if sig.ndim == 0:
            sig = np.full((n, m, 1), float(sig))
        elif sig.ndim == 2:
            sig = np.broadcast_to(sig, (n,) + sig.shape)
        return ItoDifferential(t, mu, sig, x)
    if kind is ProcessKind.BROWNIAN:
        d = x.shape[1]
        return ItoDifferential(t, np.zeros((n, d)), np.broadcast_to(np.eye(d), (n, d, d)), x)
    if kind is ProcessKind.W2_DRIFT:
        w = x[:, :1]
        return ItoDifferential(t, np.full((n, 1), 2.0 * t), (2.0 * w)[:, :, None], w**2 - t + t**2)
    if kind is ProcessKind.OSCILLATING_INTEGRAL:
        if not 0 < t < 1:
            raise UnsupportedProcessError(
                "the oscillating integral has no dt/dW representation at t = 0"
            )
        phi = float(oscillating_phi(np.array([t]))[0])
        return ItoDifferential(t, np.zeros((n, 1)), np.full((n, 1, 1), phi), x[:, :1])
    raise UnsupportedProcessError(f"{kind.value} has no coefficient form")


def _jet_arrays(jet, n: int, p: int):
    J = np.asarray(jet.jacobian, dtype=float)
    H = np.asarray(jet.hessians, dtype=float)
    if J.ndim == 2:
        J = J[None]
        H = H[None]
    if J.shape[2] != p:
        raise ShapeMismatchError(f"jet domain dimension {J.shape[2]} != differential dimension {p}")
    if J.shape[0] not in (1, n):
        raise ShapeMismatchError("jet and differential scenario counts differ")
    return np.broadcast_to(J, (n,) + J.shape[1:]), np.broadcast_to(H, (n,) + H.shape[1:])


def chain_rule(jet, a: ItoDifferential, *, check_base: bool = True) -> ItoDifferential:
    """Differential of ``f(X)`` from the 2-jet of ``f`` at ``X_t`` and ``a = d(X)_t``.

    ``drift' = J drift + 1/2 H : (diffusion diffusion^T)`` and
    ``diffusion' = J diffusion``, per scenario.  ``jet`` needs ``jacobian``
    ``(S, q, p)``, ``hessians`` ``(S, q, p, p)`` and ``base_point``; when ``a``
    carries a state the base point must match it.
    """
    n, p = a.n_scenarios, a.m
    J, H = _jet_arrays(jet, n, p)
    if check_base and a.state is not None and getattr(jet, "base_point", None) is not None:
        base = np.broadcast_to(np.asarray(jet.base_point, dtype=float), a.state.shape)
        if not np.allclose(base, a.state, rtol=1e-12, atol=ATOL):
            raise InvalidArgumentError("jet base point does not match the differential's state")
    cov = np.einsum("skd,sld->skl", a.diffusion, a.diffusion)
    drift = np.einsum("sqp,sp->sq", J, a.drift) + 0.5 * np.einsum("sqkl,skl->sq", H, cov)
    diffusion = np.einsum("sqp,spd->sqd", J, a.diffusion)
    value = getattr(jet, "value", None)
    state = None
    if value is not None:
        value = np.asarray(value, dtype=float)
        state = np.broadcast_to(value if value.ndim == 2 else value[None], (n, J.shape[1]))
    return ItoDifferential(a.t, drift, diffusion, state)


# -- empirical tests ------------------------------------------------------------


@dataclass(frozen=True)
class DifferentialVerdict:
    """Outcome of the window test at ``t``.

    ``tv`` classifies ``TV(A)_{t,t+h}`` and ``qv`` classifies
    ``[M]_{t,t+h}``.  ``zero`` needs both ``LITTLE_O``; ``cbp`` needs both
    bounded.
    """

    t: float
    tv: AsymptoticVerdict
    qv: AsymptoticVerdict
    running_max: Optional[AsymptoticVerdict] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def zero(self) -> bool:
        return self.tv.verdict is Verdict.LITTLE_O and self.qv.verdict is Verdict.LITTLE_O

    @property
    def cbp(self) -> bool:
        return self.tv.verdict.bounded and self.qv.verdict.bounded

    def to_dict(self) -> dict:
        out = {
            "t": self.t,
            "zero": self.zero,
            "cbp": self.cbp,
            "tv": self.tv.to_dict(),
            "qv": self.qv.to_dict(),
        }
        if self.running_max is not None:
            out["running_max"] = self.running_max.to_dict()
        out["diagnostics"] = self.diagnostics
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _driver_dims(spec: ProcessSpec, t: float) -> int:
    if spec.kind is ProcessKind.ITO:
        sig = np.asarray(spec.diffusion_fn(t, spec.x0_vector[None, :]), dtype=float)
        return int(sig.shape[-1]) if sig.ndim >= 2 else 1
    if spec.kind is ProcessKind.BROWNIAN:
        return int(spec.x0_vector.shape[0])
    return 1


def window_driver(
    spec: ProcessSpec, grid: TimeGrid, n_paths: int, seed: int, *, first_path: int = 0,
    root_refine: int = 16,
) -> PathBundle:
    """Brownian driver for simulating ``spec`` on ``grid``.

    ``TIME_ROOT`` gets a driver on ``[sqrt(t_start), sqrt(t_end)]`` whose step
    is ``root_refine`` times finer than the smallest square-root-time gap of
    ``grid``, keeping the interpolation bias in the bracket small.
    """
    if spec.kind is ProcessKind.TIME_ROOT:
        lo, hi = math.sqrt(grid.t_start), math.sqrt(grid.t_end)
        min_gap = hi - math.sqrt(grid.t_end - grid.step)
        n = int(2 ** math.ceil(math.log2(root_refine * (hi - lo) / min_gap)))
        return simulate_brownian(TimeGrid(lo, hi, n), 1, n_paths, seed, first_path=first_path)
    return simulate_brownian(grid, _driver_dims(spec, grid.t_start), n_paths, seed,
                             first_path=first_path)


def windowed_split(
    spec: ProcessSpec, t: float, cfg: LadderConfig = LadderConfig(), n_paths: int = 10_000,
    seed: int = 0, steps_per_min_window: int = 16,
) -> Decomposition:
    """Simulate ``spec`` on ``[t, t + h_max]`` and return its canonical split.

    All ladder windows are nested on this one grid.  Only the window is
    simulated; for ``t > 0`` the driver starts from an exact ``N(0, t)``
    draw (``ITO`` starts from ``x0`` at ``t``).
    """
    grid = cfg.grid_for(t, steps_per_min_window)
    return decompose(spec, grid, window_driver(spec, grid, n_paths, seed))


LEVEL_STREAM_SHIFT = 40


def level_splits(
    spec: ProcessSpec, t: float, cfg: LadderConfig = LadderConfig(), n_paths: int = 10_000,
    seed: int = 0, steps_per_window: int = 16,
) -> list:
    """One independent split per ladder level, each on ``[t, t + h_k]`` with
    ``steps_per_window`` steps.

    Level ``k`` uses stream keys starting at ``k << 40`` under ``seed``.
    """
    out = []
    for k, h in enumerate(cfg.levels):
        grid = TimeGrid(t, t + float(h), steps_per_window)
        driver = window_driver(spec, grid, n_paths, seed, first_path=k << LEVEL_STREAM_SHIFT)
        out.append(decompose(spec, grid, driver))
    return out


def _as_split(split) -> Decomposition:
    if isinstance(split, Decomposition):
        return split
    if isinstance(split, tuple) and len(split) == 2:
        return Decomposition(*split)
    raise DecompositionError("need a Decomposition or an (fv, martingale) pair of bundles")


def _as_splits(split):
    """Normalise to either one Decomposition or a list of per-level ones."""
    if isinstance(split, list):
        return [_as_split(s) for s in split]
    return _as_split(split)


def test_zero(
    split: Union[Decomposition, tuple, list], t: float, cfg: LadderConfig = LadderConfig(),
    *, cross_check: bool = False,
) -> DifferentialVerdict:
    """Window test for ``d(X)_t = 0`` given the split ``X = X0 + A + M``.

    ``split`` is a single decomposition (windows nested on its grid) or a
    list with one decomposition per ladder level.  Classifies ``TV(A)`` and
    ``[M]`` on the ladder.  With ``cross_check`` the squared running maximum
    of ``X - X_t`` is classified too, as the alternative bounded-chords
    statistic.
    """
    s = _as_splits(split)
    if isinstance(s, list):
        tv = classify_levels([x.fv for x in s], "TV", t, cfg)
        qv = classify_levels([x.martingale for x in s], "QV", t, cfg)
        rm = (classify_levels([x.fv + x.martingale for x in s], "RUNNING_MAX", t, cfg)
              if cross_check else None)
        diag = {"partition": "per-level", "steps_per_window": s[0].fv.grid.n_steps}
    else:
        tv = classify_order(s.fv, "TV", t, cfg)
        qv = classify_order(s.martingale, "QV", t, cfg)
        rm = classify_order(s.fv + s.martingale, "RUNNING_MAX", t, cfg) if cross_check else None
        diag = {"partition": "nested", "grid_steps": s.fv.grid.n_steps}
    return DifferentialVerdict(float(t), tv, qv, rm, diag)


test_zero.__test__ = False


def test_equal(
    split_x: Union[Decomposition, tuple, list], split_y: Union[Decomposition, tuple, list], t: float,
    cfg: LadderConfig = LadderConfig(), *, cross_check: bool = False,
) -> DifferentialVerdict:
    """``d(X)_t = d(Y)_t`` tested as ``d(X - Y)_t = 0``."""
    sx, sy = _as_splits(split_x), _as_splits(split_y)
    if isinstance(sx, list) != isinstance(sy, list):
        raise ShapeMismatchError("both splits must be nested or both per-level")
    diff = [a - b for a, b in zip(sx, sy)] if isinstance(sx, list) else sx - sy
    return test_zero(diff, t, cfg, cross_check=cross_check)


test_equal.__test__ = False


@dataclass(frozen=True)
class FTCReport:
    t: float
    precondition_ok: bool
    x_verdict: DifferentialVerdict
    residual: DifferentialVerdict
    drift_rate: float
    drift_rate_curve: tuple
    symbolic: Optional[ItoDifferential] = None

    @property
    def zero(self) -> bool:
        return self.residual.zero

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "precondition_ok": self.precondition_ok,
            "precondition": "X has chords bounded in probability" if self.precondition_ok
            else "FAILED: X does not have chords bounded in probability",
            "residual_zero": self.zero if self.precondition_ok else None,
            "residual": self.residual.to_dict(),
            "x": self.x_verdict.to_dict(),
            "residual_drift_rate": json_number(self.drift_rate),
            "drift_rate_curve": [{"h": h, "rate": json_number(r)} for h, r in self.drift_rate_curve],
            "symbolic": None if self.symbolic is None else self.symbolic.to_dict(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _eval_scalar(fn, t: float, x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(fn(t, x), dtype=float).reshape(-1), (x.shape[0],))


def verify_ftc(
    H: Callable[[float, np.ndarray], np.ndarray],
    x_spec: Optional[ProcessSpec],
    t: float,
    cfg: LadderConfig = LadderConfig(),
    *,
    n_paths: int = 10_000,
    seed: int = 0,
    x_split: Optional[Decomposition] = None,
) -> FTCReport:
    """Check ``d(int H dX)_t = H_t d(X)_t`` on simulated windows.

    The residual ``Y_s = int_t^s (H_u - H_t) dX_u`` is built by left-point
    sums and split along ``X``'s own decomposition.  ``H(time, state)`` maps
    states ``(n, m)`` to ``(n,)``; scalar ``X`` only.  Pass ``x_split`` to
    supply ``X`` directly (e.g. a deterministic finite-variation path);
    otherwise ``x_spec`` is simulated on the window.

    ``drift_rate`` is ``mean(Y^A_{t+h}) / h`` at the largest ladder level,
    where the Riemann sums are finest.
    """
    split = x_split if x_split is not None else windowed_split(x_spec, t, cfg, n_paths, seed)
    split = _as_split(split)
    x_verdict = test_zero(split, t, cfg)
    grid = split.fv.grid
    i0 = grid.index_of(t)
    A = split.fv.values[:, :, 0]
    M = split.martingale.values[:, :, 0]
    X = A + M
    times = grid.times
    h_t = _eval_scalar(H, times[i0], X[:, i0 : i0 + 1])
    yA = np.zeros((X.shape[0], grid.n_steps + 1))
    yM = np.zeros_like(yA)
    for k in range(i0, grid.n_steps):
        w = _eval_scalar(H, times[k], X[:, k : k + 1]) - h_t
        yA[:, k + 1] = yA[:, k] + w * (A[:, k + 1] - A[:, k])
        yM[:, k + 1] = yM[:, k] + w * (M[:, k + 1] - M[:, k])

    def wrap(v, part):
        b = split.fv
        return PathBundle(grid, v, b.seed, b.path_seed_rule, {"part": part, "ftc_residual": True})

    residual = test_zero(Decomposition(wrap(yA, "fv"), wrap(yM, "martingale")), t, cfg)
    curve = []
    for h in cfg.levels:
        k = grid.window_indices(t, float(h))[1]
        curve.append((float(h), float(np.mean(yA[:, k]) / h)))
    symbolic = None
    if x_spec is not None and x_split is None and x_spec.kind is not ProcessKind.W2_DRIFT:
        try:
            symbolic = scale(h_t, differential_of(x_spec, t, X[:, i0 : i0 + 1]))
        except UnsupportedProcessError:
            pass
    return FTCReport(float(t), x_verdict.cbp, x_verdict, residual, curve[0][1], tuple(curve), symbolic)


@dataclass(frozen=True)
class ChainRuleReport:
    """Symbolic ``d(f(X))_t`` against Monte Carlo mean forward derivatives."""

    t: float
    symbolic: ItoDifferential
    estimate: MeanForwardEstimate

    @property
    def drift_z(self) -> np.ndarray:
        return (self.estimate.mu - self.symbolic.drift[0]) / self.estimate.mu_se

    @property
    def sigma_sq_z(self) -> np.ndarray:
        sig = self.symbolic.diffusion[0]
        return (self.estimate.sigma_sq - sig @ sig.T) / self.estimate.sigma_sq_se

    def to_dict(self) -> dict:
        sig = self.symbolic.diffusion[0]
        return {
            "t": self.t,
            "symbolic_drift": self.symbolic.drift[0].tolist(),
            "symbolic_sigma_sq": (sig @ sig.T).tolist(),
            "mc_drift": self.estimate.mu.tolist(),
            "mc_drift_se": self.estimate.mu_se.tolist(),
            "mc_sigma_sq": self.estimate.sigma_sq.tolist(),
            "mc_sigma_sq_se": self.estimate.sigma_sq_se.tolist(),
            "drift_z": self.drift_z.tolist(),
            "sigma_sq_z": self.sigma_sq_z.tolist(),
        }


def verify_chain_rule(
    spec: ProcessSpec,
    f: Callable[[np.ndarray], np.ndarray],
    jet_fn: Callable[[np.ndarray], object],
    cfg: LadderConfig = LadderConfig(),
    *,
    trunk_paths: int = 20,
    branches: int = 500,
    seed: int = 0,
) -> ChainRuleReport:
    """Compare ``chain_rule(jet_fn(x0), d(X)_0)`` with simulated ``f(X)`` at ``t = 0``.

    ``f`` maps states ``(..., m)`` to ``(..., q)``; ``jet_fn(x)`` returns the
    2-jet of ``f`` at ``x``.
    """
    x0 = spec.x0_vector
    if spec.kind is ProcessKind.W2_DRIFT:
        raise UnsupportedProcessError("chain-rule check needs a state-driven process")
    a = differential_of(spec, 0.0, x0[None, :])
    sym = chain_rule(jet_fn(x0), a)

    def transform(_times, values):
        return f(values)

    est = mean_forward_derivative(spec, 0.0, trunk_paths, branches, cfg, seed, transform=transform)
    return ChainRuleReport(0.0, sym, est)
