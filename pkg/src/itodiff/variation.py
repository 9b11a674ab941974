"""Windowed pathwise statistics on the simulation grid.

The grid points inside ``[t, t + h]`` form the partition; statistics are
Riemann sums over it, so they approximate the probability limits only to the
reported ``partition_steps`` resolution.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidArgumentError, ShapeMismatchError
from .paths import PathBundle

__all__ = ["WindowKind", "WindowStat", "window_stat", "qcov", "window_values"]


class WindowKind(str, enum.Enum):
    RUNNING_MAX = "RUNNING_MAX"
    TV = "TV"
    QV = "QV"
    QCOV = "QCOV"


@dataclass(frozen=True)
class WindowStat:
    t: float
    h: float
    kind: WindowKind
    value_per_path: np.ndarray
    partition_steps: int

    def to_csv(self, target) -> None:
        """Write ``path,value`` rows."""
        table = np.column_stack([np.arange(self.value_per_path.size), self.value_per_path])
        np.savetxt(target, table, delimiter=",", fmt=["%d", "%.17g"],
                   header="path,value", comments="")

    def mean(self) -> float:
        return float(np.mean(self.value_per_path))


def _select(bundle: PathBundle, components: Optional[Sequence[int]]) -> np.ndarray:
    if components is None:
        return bundle.values
    comps = list(components)
    if not comps or min(comps) < 0 or max(comps) >= bundle.dims:
        raise ShapeMismatchError(f"components {comps} not available in dimension {bundle.dims}")
    return bundle.values[:, :, comps]


def window_values(bundle: PathBundle, t: float, h: float, components=None) -> np.ndarray:
    """Slice ``(n_paths, k + 1, m)`` of the grid points in ``[t, t + h]``."""
    i0, i1 = bundle.grid.window_indices(t, h)
    return _select(bundle, components)[:, i0 : i1 + 1, :]


def _norm(x: np.ndarray, norm: Union[int, float]) -> np.ndarray:
    if norm == 2:
        return np.sqrt(np.sum(x * x, axis=-1))
    if norm == 1:
        return np.sum(np.abs(x), axis=-1)
    if norm == np.inf:
        return np.max(np.abs(x), axis=-1)
    raise InvalidArgumentError(f"unsupported norm {norm}")


def window_stat(
    bundle: PathBundle,
    kind: Union[WindowKind, str],
    t: float,
    h: float,
    components: Optional[Sequence[int]] = None,
    *,
    norm: Union[int, float] = 2,
    other: Optional[PathBundle] = None,
) -> WindowStat:
    """Per-path statistic over the window ``[t, t + h]``.

    Parameters
    ----------
    bundle : PathBundle
    kind : WindowKind
        ``RUNNING_MAX`` is ``max_i sup_u |X^i_u - X^i_t|``; ``TV`` sums the
        ``norm`` of increments; ``QV`` sums squared Euclidean increments, i.e.
        the trace of the bracket; ``QCOV`` needs ``other`` and works per
        component by polarisation.
    t, h : float
        Window start and length.
    components : sequence of int, optional
        Component subset; all components by default.
    norm : {1, 2, inf}
        Vector norm used for ``TV``.
    other : PathBundle, optional
        Second argument for ``QCOV``.
    """
    kind = WindowKind(kind)
    if not h > 0:
        raise InvalidArgumentError(f"window length must be positive, got {h}")
    if kind is WindowKind.QCOV:
        if other is None:
            raise InvalidArgumentError("QCOV needs a second bundle")
        return qcov(bundle, other, t, h, components)
    seg = window_values(bundle, t, h, components)
    steps = seg.shape[1] - 1
    if kind is WindowKind.RUNNING_MAX:
        val = np.max(np.abs(seg - seg[:, :1, :]), axis=(1, 2))
    else:
        inc = np.diff(seg, axis=1)
        if kind is WindowKind.TV:
            val = np.sum(_norm(inc, norm), axis=1)
        else:
            val = np.sum(inc * inc, axis=(1, 2))
    return WindowStat(float(t), float(h), kind, val, steps)


def qcov(
    x: PathBundle, y: PathBundle, t: float, h: float, components: Optional[Sequence[int]] = None
) -> WindowStat:
    """Grid covariation ``([X + Y] - [X] - [Y]) / 2`` summed over components."""
    if x.grid != y.grid or x.values.shape != y.values.shape:
        raise ShapeMismatchError("qcov needs bundles on identical grids with equal shapes")
    dx = np.diff(window_values(x, t, h, components), axis=1)
    dy = np.diff(window_values(y, t, h, components), axis=1)

    def q(z):
        return np.sum(z * z, axis=(1, 2))

    val = 0.5 * (q(dx + dy) - q(dx) - q(dy))
    return WindowStat(float(t), float(h), WindowKind.QCOV, val, dx.shape[1])
