"""Reproducible sample-path ensembles.

Every path owns a Philox stream keyed by ``(seed, path index)``, so a bundle,
or any contiguous slice of one, can be regenerated bit-for-bit without shared
generator state.  Processes are built from a Brownian *driver* bundle:

* ``BROWNIAN``              the driver itself (shifted by ``x0``)
* ``ITO``                   Euler-Maruyama on user coefficients
* ``W2_DRIFT``              ``W_t**2 - t + t**2`` evaluated exactly
* ``TIME_ROOT``             ``W_{sqrt(t)}`` by linear lookup into the driver
* ``OSCILLATING_INTEGRAL``  ``int phi dW`` with ``phi = (-1)**n`` on ``[1/(n+1), 1/n)``
* ``PATHOLOGICAL_BV``       a deterministic bounded-variation function with
                            ``f(h)/h -> 0`` but ``TV(f)_h / h`` unbounded
"""

from __future__ import annotations

import enum
import io
import math
import struct
from dataclasses import dataclass, field
from os import PathLike
from typing import Any, Callable, Mapping, Optional, Union

import numpy as np

from .errors import (
    DecompositionError,
    GridCoverageError,
    InvalidArgumentError,
    ShapeMismatchError,
)

__all__ = [
    "ProcessKind",
    "TimeGrid",
    "PathBundle",
    "ProcessSpec",
    "Decomposition",
    "path_generator",
    "simulate_brownian",
    "simulate",
    "decompose",
    "oscillating_phi",
    "oscillating_truncation_index",
    "evaluate_pathological",
    "pathological_nodes",
    "pathological_touch_points",
    "pathological_band_tv",
    "pathological_band_bounds",
    "pathological_tv_to_root",
    "numeric_total_variation",
]

_MASK64 = (1 << 64) - 1
_GRID_TOL = 1e-9

PATH_SEED_RULE = (
    "philox4x32-10, key=(path_index<<64)|seed; per path: dims normals for "
    "W(t_start), then n_steps x dims increment normals in (step, component) order"
)

StateFn = Callable[[float, np.ndarray], np.ndarray]


class ProcessKind(str, enum.Enum):
    BROWNIAN = "BROWNIAN"
    ITO = "ITO"
    W2_DRIFT = "W2_DRIFT"
    TIME_ROOT = "TIME_ROOT"
    OSCILLATING_INTEGRAL = "OSCILLATING_INTEGRAL"
    PATHOLOGICAL_BV = "PATHOLOGICAL_BV"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_start + k * step`` for ``k = 0..n_steps``."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise InvalidArgumentError("grid endpoints must be finite")
        if not self.t_end > self.t_start:
            raise InvalidArgumentError(
                f"t_end ({self.t_end}) must exceed t_start ({self.t_start})"
            )
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InvalidArgumentError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.t_start + np.arange(self.n_steps + 1) * self.step

    def time(self, k: int) -> float:
        return self.t_start + k * self.step

    def covers(self, t0: float, t1: float) -> bool:
        slack = _GRID_TOL * self.step
        return self.t_start - slack <= t0 and t1 <= self.t_end + slack

    def window_indices(self, t: float, h: float) -> tuple[int, int]:
        """Grid indices ``(i0, i1)`` of the points bounding ``[t, t + h]``.

        Points within ``1e-9`` steps of the window ends count as inside.
        """
        if not h > 0:
            raise InvalidArgumentError(f"window length must be positive, got {h}")
        if not self.covers(t, t + h):
            raise GridCoverageError(
                f"window [{t}, {t + h}] outside grid [{self.t_start}, {self.t_end}]"
            )
        i0 = math.ceil((t - self.t_start) / self.step - _GRID_TOL)
        i1 = math.floor((t + h - self.t_start) / self.step + _GRID_TOL)
        i0 = max(i0, 0)
        i1 = min(i1, self.n_steps)
        if i1 <= i0:
            raise GridCoverageError(
                f"window [{t}, {t + h}] contains no grid step (step {self.step})"
            )
        return i0, i1

    def index_of(self, t: float) -> int:
        """Index of the grid point at ``t``; raises if ``t`` is not on the grid."""
        if not self.covers(t, t):
            raise GridCoverageError(f"time {t} outside grid")
        k = round((t - self.t_start) / self.step)
        if abs(self.time(k) - t) > _GRID_TOL * self.step * 10 + 1e-15:
            raise GridCoverageError(f"time {t} is not a grid point")
        return int(k)

    def refine(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.t_start, self.t_end, self.n_steps * int(factor))


@dataclass(frozen=True, eq=False)
class PathBundle:
    """Ensemble of ``R^m``-valued sample paths on a shared grid.

    ``values`` has shape ``(n_paths, n_steps + 1, dims)`` and is made
    read-only on construction.
    """

    grid: TimeGrid
    values: np.ndarray
    seed: int = 0
    path_seed_rule: str = PATH_SEED_RULE
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 2:
            values = values[:, :, None]
        if values.ndim != 3:
            raise ShapeMismatchError("values must be (n_paths, n_steps + 1, dims)")
        if values.shape[1] != self.grid.n_steps + 1:
            raise ShapeMismatchError(
                f"values have {values.shape[1]} time points, grid has {self.grid.n_steps + 1}"
            )
        if values.shape[0] < 1 or values.shape[2] < 1:
            raise ShapeMismatchError("bundles need at least one path and one component")
        if not np.isfinite(values).all():
            raise InvalidArgumentError("path values must be finite")
        view = values.view()
        view.setflags(write=False)
        object.__setattr__(self, "values", view)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[2]

    def at(self, t: float) -> np.ndarray:
        """States ``(n_paths, dims)`` at grid time ``t``."""
        return self.values[:, self.grid.index_of(t), :]

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=1)

    def component(self, i: int) -> "PathBundle":
        if not 0 <= i < self.dims:
            raise ShapeMismatchError(f"component {i} not in bundle of dimension {self.dims}")
        return self._with(self.values[:, :, i : i + 1])

    def _with(self, values: np.ndarray, **meta) -> "PathBundle":
        return PathBundle(self.grid, values, self.seed, self.path_seed_rule, {**self.meta, **meta})

    def _check_compatible(self, other: "PathBundle"):
        if other.grid != self.grid or other.values.shape != self.values.shape:
            raise ShapeMismatchError("bundles must share grid, path count and dimension")

    def __add__(self, other: "PathBundle") -> "PathBundle":
        self._check_compatible(other)
        return self._with(self.values + other.values)

    def __sub__(self, other: "PathBundle") -> "PathBundle":
        self._check_compatible(other)
        return self._with(self.values - other.values)

    def __neg__(self) -> "PathBundle":
        return self._with(-self.values)

    def __mul__(self, c: float) -> "PathBundle":
        return self._with(self.values * float(c))

    __rmul__ = __mul__

    # serialisation -----------------------------------------------------

    def to_csv(self, target: Union[str, PathLike, io.TextIOBase]) -> None:
        """Columnar CSV with header ``path,t,component,value``."""
        n, k, m = self.values.shape
        p_idx, t_idx, c_idx = np.meshgrid(np.arange(n), np.arange(k), np.arange(m), indexing="ij")
        table = np.column_stack(
            [p_idx.ravel(), self.grid.times[t_idx.ravel()], c_idx.ravel(), self.values.ravel()]
        )
        np.savetxt(
            target, table, delimiter=",", fmt=["%d", "%.17g", "%d", "%.17g"],
            header="path,t,component,value", comments="",
        )

    @classmethod
    def from_csv(cls, source, seed: int = 0) -> "PathBundle":
        table = np.loadtxt(source, delimiter=",", skiprows=1, ndmin=2)
        n = int(table[:, 0].max()) + 1
        m = int(table[:, 2].max()) + 1
        times = np.unique(table[:, 1])
        grid = TimeGrid(times[0], times[-1], len(times) - 1)
        values = table[:, 3].reshape(n, len(times), m)
        return cls(grid, values, seed)

    _MAGIC = b"ITODPB01"
    _HEADER = struct.Struct("<8sQQQddQI")

    def to_binary(self, target: Union[str, PathLike]) -> None:
        """Write the compact layout documented in the README."""
        rule = self.path_seed_rule.encode("utf-8")
        n, k, m = self.values.shape
        header = self._HEADER.pack(
            self._MAGIC, n, k - 1, m, self.grid.t_start, self.grid.t_end,
            self.seed & _MASK64, len(rule),
        )
        with open(target, "wb") as fh:
            fh.write(header)
            fh.write(rule)
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, source: Union[str, PathLike]) -> "PathBundle":
        with open(source, "rb") as fh:
            raw = fh.read()
        magic, n, steps, m, t0, t1, seed, rule_len = cls._HEADER.unpack_from(raw, 0)
        if magic != cls._MAGIC:
            raise InvalidArgumentError("not an itodiff path bundle")
        offset = cls._HEADER.size
        rule = raw[offset : offset + rule_len].decode("utf-8")
        offset += rule_len
        values = np.frombuffer(raw, dtype="<f8", offset=offset).reshape(n, steps + 1, m)
        return cls(TimeGrid(t0, t1, steps), values.astype(float), seed, rule)


@dataclass(frozen=True)
class ProcessSpec:
    """Description of a process to be driven by a Brownian bundle.

    For ``ITO`` the coefficient callables take ``(t, x)`` with ``x`` of shape
    ``(n, m)`` and return arrays broadcastable to ``(n, m)`` (drift) and
    ``(n, m, d)`` (diffusion).
    """

    kind: ProcessKind
    drift_fn: Optional[StateFn] = None
    diffusion_fn: Optional[StateFn] = None
    x0: Any = 0.0
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ProcessKind(self.kind))
        if self.kind is ProcessKind.ITO and (self.drift_fn is None or self.diffusion_fn is None):
            raise InvalidArgumentError("ITO processes need both drift_fn and diffusion_fn")
        if self.kind is ProcessKind.PATHOLOGICAL_BV:
            if "alpha" not in self.params or "beta" not in self.params:
                raise InvalidArgumentError("PATHOLOGICAL_BV needs params alpha and beta")
            _check_pathological(self.params["alpha"], self.params["beta"])

    @property
    def x0_vector(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.x0, dtype=float))


@dataclass(frozen=True)
class Decomposition:
    """Finite-variation part and local-martingale part of a process."""

    fv: PathBundle
    martingale: PathBundle

    def __post_init__(self):
        self.fv._check_compatible(self.martingale)

    def __sub__(self, other: "Decomposition") -> "Decomposition":
        return Decomposition(self.fv - other.fv, self.martingale - other.martingale)

    def __add__(self, other: "Decomposition") -> "Decomposition":
        return Decomposition(self.fv + other.fv, self.martingale + other.martingale)


# -- Brownian driver ------------------------------------------------------


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    """The generator owning path ``path_index`` of a bundle seeded with ``seed``."""
    if not 0 <= int(seed) <= _MASK64:
        raise InvalidArgumentError("seed must be an unsigned 64-bit integer")
    if int(path_index) < 0:
        raise InvalidArgumentError("path index must be non-negative")
    return np.random.Generator(np.random.Philox(key=(int(path_index) << 64) | int(seed)))


def simulate_brownian(
    grid: TimeGrid, dims: int = 1, n_paths: int = 1, seed: int = 0, *, first_path: int = 0
) -> PathBundle:
    """Independent standard Brownian components sampled on ``grid``.

    ``W(t_start)`` is drawn from ``N(0, t_start)`` so bundles may start
    mid-stream; it is exactly zero when ``t_start == 0``.  ``first_path``
    offsets the stream keys, letting large ensembles be generated in slices
    that match a monolithic run bit-for-bit.
    """
    if int(dims) != dims or dims < 1:
        raise InvalidArgumentError("dims must be a positive integer")
    if int(n_paths) != n_paths or n_paths < 1:
        raise InvalidArgumentError("n_paths must be a positive integer")
    sq_step = math.sqrt(grid.step)
    sq_start = math.sqrt(grid.t_start) if grid.t_start > 0 else 0.0
    values = np.empty((n_paths, grid.n_steps + 1, dims))
    for i in range(n_paths):
        gen = path_generator(seed, first_path + i)
        start = gen.standard_normal(dims)
        values[i, 0] = start * sq_start if sq_start else 0.0
        values[i, 1:] = gen.standard_normal((grid.n_steps, dims))
    chunk = 1024
    for lo in range(0, n_paths, chunk):
        blk = values[lo : lo + chunk]
        blk[:, 1:] *= sq_step
        np.cumsum(blk, axis=1, out=blk)
    return PathBundle(grid, values, seed, PATH_SEED_RULE, {"first_path": first_path})


# -- named processes ------------------------------------------------------


def oscillating_phi(s: np.ndarray, truncation: Optional[int] = None) -> np.ndarray:
    """``phi(s) = (-1)**n`` on ``[1/(n+1), 1/n)``, zero for ``s >= 1``.

    Bands beyond ``truncation`` are merged: on ``(0, 1/(truncation+1))`` the
    sign of band ``truncation + 1`` is used.  Without truncation, ``s = 0``
    maps to ``+1``.
    """
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    with np.errstate(divide="ignore"):
        n = np.floor(1.0 / np.where(inside, s, 1.0))
    # floor(1/s) can be one off at band edges
    n = np.where(inside & (s < 1.0 / (n + 1)), n + 1, n)
    n = np.where(inside & (s >= 1.0 / np.maximum(n, 1)), n - 1, n)
    if truncation is not None:
        n = np.minimum(n, truncation + 1)
        inside_or_zero = (s >= 0) & (s < 1)
        n = np.where(s == 0, truncation + 1, n)
    else:
        inside_or_zero = inside
        out = np.where(s == 0, 1.0, out)
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    return np.where(inside_or_zero, sign, out)


def oscillating_truncation_index(step: float) -> int:
    """Largest ``n`` whose band ``[1/(n+1), 1/n)`` is at least one grid step wide."""
    n = max(int(math.floor((-1 + math.sqrt(1 + 4 / step)) / 2)), 1)
    while 1.0 / (n * (n + 1)) < step and n > 1:
        n -= 1
    while 1.0 / ((n + 1) * (n + 2)) >= step:
        n += 1
    return n


def _state_start(spec: ProcessSpec, n_paths: int, x_start) -> np.ndarray:
    x = spec.x0_vector if x_start is None else np.asarray(x_start, dtype=float)
    if x.ndim == 1:
        x = np.broadcast_to(x, (n_paths, x.shape[0]))
    if x.ndim != 2 or x.shape[0] != n_paths:
        raise ShapeMismatchError("start state must be (m,) or (n_paths, m)")
    return np.array(x, dtype=float)


def _coefficients(spec: ProcessSpec, t: float, x: np.ndarray, d: int):
    n, m = x.shape
    mu = np.broadcast_to(np.asarray(spec.drift_fn(t, x), dtype=float), (n, m))
    sig = np.asarray(spec.diffusion_fn(t, x), dtype=float)
    if sig.ndim == 0:
        sig = np.broadcast_to(sig, (n, m, d))
    elif sig.ndim == 2 and sig.shape == (m, d):
        sig = np.broadcast_to(sig, (n, m, d))
    if sig.shape != (n, m, d):
        raise ShapeMismatchError(
            f"diffusion_fn returned shape {sig.shape}, expected {(n, m, d)}"
        )
    return mu, sig


def _euler(spec: ProcessSpec, grid: TimeGrid, driver: PathBundle, x_start):
    n, d = driver.n_paths, driver.dims
    x = _state_start(spec, n, x_start)
    m = x.shape[1]
    dW = driver.increments()
    times = grid.times
    X = np.empty((n, grid.n_steps + 1, m))
    A = np.zeros_like(X)
    M = np.zeros_like(X)
    X[:, 0] = x
    for k in range(grid.n_steps):
        mu, sig = _coefficients(spec, times[k], x, d)
        a_inc = mu * grid.step
        m_inc = np.einsum("nij,nj->ni", sig, dW[:, k])
        x = x + a_inc + m_inc
        X[:, k + 1] = x
        A[:, k + 1] = A[:, k] + a_inc
        M[:, k + 1] = M[:, k] + m_inc
    return X, A, M


def _require_same_grid(grid: TimeGrid, driver: PathBundle):
    if driver.grid != grid:
        raise ShapeMismatchError("driver must be sampled on the output grid for this kind")


def _require_scalar_driver(driver: PathBundle, kind: ProcessKind):
    if driver.dims != 1:
        raise ShapeMismatchError(f"{kind.value} needs a one-dimensional Brownian driver")


def _time_root_values(grid: TimeGrid, driver: PathBundle) -> np.ndarray:
    roots = np.sqrt(grid.times)
    dg = driver.grid
    if not dg.covers(roots[0], roots[-1]):
        raise GridCoverageError(
            f"TIME_ROOT needs the driver on [{roots[0]}, {roots[-1]}], "
            f"driver covers [{dg.t_start}, {dg.t_end}]"
        )
    pos = np.clip((roots - dg.t_start) / dg.step, 0.0, dg.n_steps)
    idx = np.minimum(np.floor(pos).astype(int), dg.n_steps - 1)
    frac = pos - idx
    w = driver.values[:, :, 0]
    return w[:, idx] * (1.0 - frac) + w[:, idx + 1] * frac


def _oscillating(grid: TimeGrid, driver: PathBundle, x0: float):
    trunc = oscillating_truncation_index(grid.step)
    phi = oscillating_phi(grid.times[:-1], truncation=trunc)
    dW = driver.increments()[:, :, 0]
    X = np.empty((driver.n_paths, grid.n_steps + 1))
    X[:, 0] = x0
    X[:, 1:] = x0 + np.cumsum(phi * dW, axis=1)
    return X, trunc


def simulate(
    spec: ProcessSpec,
    grid: TimeGrid,
    driver: Optional[PathBundle] = None,
    x_start=None,
) -> PathBundle:
    """Sample ``spec`` on ``grid`` from the Brownian ``driver`` bundle.

    Parameters
    ----------
    spec : ProcessSpec
    grid : TimeGrid
        Output grid.  Must equal ``driver.grid`` except for ``TIME_ROOT``,
        whose driver must cover ``[sqrt(t_start), sqrt(t_end)]``.
    driver : PathBundle
        Brownian paths.  Optional only for the deterministic
        ``PATHOLOGICAL_BV`` kind (one path is produced).
    x_start : array_like, optional
        Initial state at ``grid.t_start`` for ``ITO`` (defaults to ``spec.x0``).

    Returns
    -------
    PathBundle
    """
    kind = spec.kind
    if driver is None and kind is not ProcessKind.PATHOLOGICAL_BV:
        raise InvalidArgumentError(f"{kind.value} needs a driver bundle")
    seed = driver.seed if driver is not None else 0
    rule = (driver.path_seed_rule if driver is not None else "deterministic") + f" -> {kind.value}"
    meta: dict = {"kind": kind.value}

    if kind is ProcessKind.BROWNIAN:
        _require_same_grid(grid, driver)
        x0 = spec.x0_vector
        if x0.shape[0] not in (1, driver.dims):
            raise ShapeMismatchError("x0 must match the driver dimension")
        values = driver.values if not np.any(x0) else driver.values + x0
    elif kind is ProcessKind.ITO:
        _require_same_grid(grid, driver)
        values, _, _ = _euler(spec, grid, driver, x_start)
    elif kind is ProcessKind.W2_DRIFT:
        _require_same_grid(grid, driver)
        _require_scalar_driver(driver, kind)
        t = grid.times[None, :, None]
        values = driver.values**2 - t + t**2
    elif kind is ProcessKind.TIME_ROOT:
        _require_scalar_driver(driver, kind)
        values = _time_root_values(grid, driver)
    elif kind is ProcessKind.OSCILLATING_INTEGRAL:
        _require_same_grid(grid, driver)
        _require_scalar_driver(driver, kind)
        values, trunc = _oscillating(grid, driver, float(spec.x0_vector[0]))
        meta["band_truncation_index"] = trunc
    elif kind is ProcessKind.PATHOLOGICAL_BV:
        n = driver.n_paths if driver is not None else 1
        f = evaluate_pathological(grid.times, spec.params["alpha"], spec.params["beta"])
        values = np.broadcast_to(f[None, :, None], (n, grid.n_steps + 1, 1))
    else:  # pragma: no cover
        raise InvalidArgumentError(f"unknown kind {kind}")
    return PathBundle(grid, values, seed, rule, meta)


def decompose(
    spec: ProcessSpec, grid: TimeGrid, driver: Optional[PathBundle] = None, x_start=None
) -> Decomposition:
    """Canonical split ``X = X0 + A + M`` sampled on ``grid``.

    ``ITO`` uses the Euler accumulations of drift and diffusion terms, so
    ``x_start + A + M`` reproduces :func:`simulate` exactly.  ``W2_DRIFT`` uses
    the closed forms ``A_s = s**2`` and ``M_s = W_s**2 - s``.
    """
    kind = spec.kind
    x = simulate(spec, grid, driver, x_start)
    zeros = np.broadcast_to(0.0, x.values.shape)

    def wrap(values, part):
        return PathBundle(grid, values, x.seed, x.path_seed_rule, {**x.meta, "part": part})

    if kind is ProcessKind.ITO:
        _, A, M = _euler(spec, grid, driver, x_start)
        return Decomposition(wrap(A, "fv"), wrap(M, "martingale"))
    if kind is ProcessKind.W2_DRIFT:
        t = grid.times[None, :, None]
        A = np.broadcast_to(t**2, x.values.shape)
        M = driver.values**2 - t
        return Decomposition(wrap(A, "fv"), wrap(M, "martingale"))
    if kind in (ProcessKind.BROWNIAN, ProcessKind.TIME_ROOT, ProcessKind.OSCILLATING_INTEGRAL):
        return Decomposition(wrap(zeros, "fv"), wrap(x.values, "martingale"))
    if kind is ProcessKind.PATHOLOGICAL_BV:
        return Decomposition(wrap(x.values, "fv"), wrap(zeros, "martingale"))
    raise DecompositionError(f"no decomposition for {kind}")  # pragma: no cover


# -- pathological bounded-variation function ---------------------------------


def _check_pathological(alpha: float, beta: float):
    if not (beta > 0 and 2 * alpha + beta < -1 < alpha + beta):
        raise InvalidArgumentError(
            f"(alpha, beta) = ({alpha}, {beta}) violates beta > 0, 2 alpha + beta < -1 < alpha + beta"
        )


def _omega(n, beta):
    return np.floor(np.asarray(n, dtype=float) ** beta)


def pathological_nodes(n: int, alpha: float = -2.0, beta: float = 2.0):
    """Breakpoints and tent heights on ``[x_{n+1}, x_n]``.

    The band holds ``2 * omega_n + 1`` equally spaced nodes alternating
    root / touch / root ... root; touch nodes sit on ``t**2``.
    """
    _check_pathological(alpha, beta)
    if n < 1:
        raise InvalidArgumentError("band index starts at 1")
    a, b = float(n + 1) ** alpha, float(n) ** alpha
    w = int(_omega(n, beta))
    j = np.arange(2 * w + 1)
    p = a + j * ((b - a) / (2 * w))
    p[-1] = b
    heights = np.where(j % 2 == 1, p**2, 0.0)
    return p, heights


def pathological_touch_points(n: int, alpha: float = -2.0, beta: float = 2.0) -> np.ndarray:
    p, _ = pathological_nodes(n, alpha, beta)
    return p[1::2]


def evaluate_pathological(t, alpha: float = -2.0, beta: float = 2.0):
    """Evaluate the pathological function at ``t`` (scalar or array).

    On band ``(x_{n+1}, x_n)`` with ``x_n = n**alpha`` the function is the
    piecewise-linear tent through the band nodes, capped by ``t**2`` so that
    ``0 <= f(t) <= t**2``; rising pieces stay monotone under the cap, so the
    band's total variation is twice the sum of squared touch points.
    """
    _check_pathological(alpha, beta)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    live = (t > 0) & (t < 1)
    if np.any(live):
        s = t[live]
        n = np.maximum(np.floor(s ** (1.0 / alpha)), 1.0)
        for _ in range(2):
            n = np.where(s > n**alpha, n - 1, n)
            n = np.where(s <= (n + 1) ** alpha, n + 1, n)
        a, b = (n + 1) ** alpha, n**alpha
        w = _omega(n, beta)
        delta = (b - a) / (2 * w)
        u = (s - a) / delta
        near = np.round(u)
        u = np.where(np.abs(u - near) < 1e-9, near, u)
        j = np.minimum(np.floor(u), 2 * w - 1)
        frac = u - j

        def node(k):
            return np.where(k % 2 == 1, (a + k * delta) ** 2, 0.0)

        val = node(j) * (1 - frac) + node(j + 1) * frac
        val = np.minimum(val, s**2)
        val = np.where(s == b, 0.0, val)
        out[live] = np.maximum(val, 0.0)
    return float(out[0]) if scalar else out


def pathological_band_tv(n, alpha: float = -2.0, beta: float = 2.0):
    """Exact total variation of the function over ``[x_{n+1}, x_n]``.

    Closed form of ``2 * sum_k (a + (2k - 1) delta)**2`` over the touch points.
    """
    _check_pathological(alpha, beta)
    n = np.asarray(n, dtype=float)
    a, b = (n + 1) ** alpha, n**alpha
    w = _omega(n, beta)
    delta = (b - a) / (2 * w)
    sq = w * a**2 + 2 * a * delta * w**2 + delta**2 * w * (4 * w**2 - 1) / 3
    return 2 * sq


def pathological_band_bounds(n, alpha: float = -2.0, beta: float = 2.0):
    """Sandwich ``(2 omega_n x_{n+1}**2, 2 omega_n x_n**2)`` for the band TV."""
    n = np.asarray(n, dtype=float)
    w = _omega(n, beta)
    return 2 * w * (n + 1) ** (2 * alpha), 2 * w * n ** (2 * alpha)


def pathological_tv_to_root(n, alpha: float = -2.0, beta: float = 2.0, n_terms: int = 1_000_000):
    """``TV(f)`` over ``[0, x_n]`` for each requested ``n``.

    Bands up to ``n_terms`` are summed exactly; the remainder is replaced by
    the integral of its leading term ``2 m**(2 alpha + beta)``.
    """
    _check_pathological(alpha, beta)
    n = np.atleast_1d(np.asarray(n, dtype=int))
    if n.min() < 1 or n.max() > n_terms:
        raise InvalidArgumentError("band index out of range for the truncation")
    m = np.arange(1, n_terms + 1)
    band = pathological_band_tv(m, alpha, beta)
    expo = 2 * alpha + beta + 1
    tail = -2.0 * float(n_terms) ** expo / expo
    suffix = np.cumsum(band[::-1])[::-1] + tail
    return suffix[n - 1]


def numeric_total_variation(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray) -> float:
    """Sum of absolute increments of ``fn`` over sorted sample ``points``."""
    pts = np.sort(np.asarray(points, dtype=float))
    return float(np.sum(np.abs(np.diff(fn(pts)))))
