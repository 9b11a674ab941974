"""Instantaneous SDEs on embedded manifolds via 2-jets.

Manifolds are embedded in ``R^n`` and described by a constraint function.
An SDE at an instant is a *curve family*: for each anchor state ``x`` a map
``dz -> gamma(x, dz)`` with ``gamma(x, 0) = x``.  Its 2-jet at ``dz = 0``
pushes the driver's differential forward to the manifold.

Two integrators are provided.  The jet scheme steps ``X <- gamma(X, dZ)`` and
so never leaves the manifold.  The coordinate scheme Euler-steps the
second-order expansion of ``gamma`` and drifts off the manifold at first
order in the step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .differential import ItoDifferential, chain_rule
from .errors import InvalidArgumentError, ManifoldIntegrityError, ShapeMismatchError
from .paths import PathBundle

__all__ = [
    "Jet2",
    "pushforward",
    "compose_jets",
    "ManifoldKind",
    "EmbeddedManifold",
    "CurveFamily",
    "circle_rotation",
    "sphere_exponential",
    "linear_family",
    "integrate_jet_scheme",
    "integrate_coordinate_scheme",
    "residual_report",
]

SYMMETRY_TOL = 1e-12
INTEGRITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Jet2:
    """Batched 2-jet of a map ``R^p -> R^q`` at ``S`` base points.

    Shapes: ``base_point (S, p)``, ``value (S, q)``, ``jacobian (S, q, p)``,
    ``hessians (S, q, p, p)``.  Unbatched inputs get ``S = 1``.
    """

    base_point: np.ndarray
    value: np.ndarray
    jacobian: np.ndarray
    hessians: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.base_point, dtype=float))
        v = np.atleast_1d(np.asarray(self.value, dtype=float))
        J = np.asarray(self.jacobian, dtype=float)
        H = np.asarray(self.hessians, dtype=float)
        if J.ndim == 2:
            x, v, J, H = x[None], v[None], J[None], H[None]
        if J.ndim != 3 or H.ndim != 4:
            raise ShapeMismatchError("jacobian must be (S, q, p) and hessians (S, q, p, p)")
        n, q, p = J.shape
        if x.shape != (n, p) or v.shape != (n, q) or H.shape != (n, q, p, p):
            raise ShapeMismatchError(
                f"inconsistent jet shapes: base {x.shape}, value {v.shape}, "
                f"jacobian {J.shape}, hessians {H.shape}"
            )
        for a in (x, v, J, H):
            if not np.isfinite(a).all():
                raise InvalidArgumentError("jet entries must be finite")
        scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
        if np.max(np.abs(H - np.swapaxes(H, -1, -2)), initial=0.0) > SYMMETRY_TOL * scale:
            raise InvalidArgumentError("hessians must be symmetric")
        for name, a in (("base_point", x), ("value", v), ("jacobian", J), ("hessians", H)):
            a = a.view()
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.jacobian.shape[0]

    @property
    def p(self) -> int:
        return self.jacobian.shape[2]

    @property
    def q(self) -> int:
        return self.jacobian.shape[1]

    @classmethod
    def identity(cls, x) -> "Jet2":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n, p = x.shape
        return cls(x, x, np.broadcast_to(np.eye(p), (n, p, p)), np.zeros((n, p, p, p)))

    @classmethod
    def linear(cls, A, x, b=None) -> "Jet2":
        """Jet of ``y = A x + b``."""
        A = np.asarray(A, dtype=float)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = x.shape[0]
        val = x @ A.T + (0.0 if b is None else np.asarray(b, dtype=float))
        q, p = A.shape
        return cls(x, val, np.broadcast_to(A, (n, q, p)), np.zeros((n, q, p, p)))


def pushforward(jet: Jet2, a: ItoDifferential) -> ItoDifferential:
    """Differential of ``F(X)`` at ``t`` from the 2-jet of ``F`` at ``X_t``."""
    if jet.p != a.m:
        raise ShapeMismatchError(f"jet domain dimension {jet.p} != differential dimension {a.m}")
    return chain_rule(jet, a)


def compose_jets(outer: Jet2, inner: Jet2) -> Jet2:
    """2-jet of ``G o F`` from the jets of ``G`` at ``F(x)`` and of ``F`` at ``x``."""
    if outer.p != inner.q:
        raise ShapeMismatchError(f"outer domain {outer.p} != inner codomain {inner.q}")
    if outer.n not in (1, inner.n) and inner.n != 1:
        raise ShapeMismatchError("jet batch sizes differ")
    n = max(outer.n, inner.n)
    ob = np.broadcast_to(outer.base_point, (n, outer.p))
    iv = np.broadcast_to(inner.value, (n, inner.q))
    if not np.allclose(ob, iv, rtol=1e-12, atol=1e-12):
        raise ShapeMismatchError("outer jet must be based at the inner jet's value")
    JG = np.broadcast_to(outer.jacobian, (n,) + outer.jacobian.shape[1:])
    HG = np.broadcast_to(outer.hessians, (n,) + outer.hessians.shape[1:])
    JF = np.broadcast_to(inner.jacobian, (n,) + inner.jacobian.shape[1:])
    HF = np.broadcast_to(inner.hessians, (n,) + inner.hessians.shape[1:])
    J = JG @ JF
    H = np.einsum("sai,skab,sbj->skij", JF, HG, JF) + np.einsum("skm,smij->skij", JG, HF)
    H = 0.5 * (H + np.swapaxes(H, -1, -2))
    return Jet2(
        np.broadcast_to(inner.base_point, (n, inner.p)),
        np.broadcast_to(outer.value, (n, outer.q)),
        J,
        H,
    )


class ManifoldKind(str, enum.Enum):
    CIRCLE = "CIRCLE"
    SPHERE = "SPHERE"
    CUSTOM = "CUSTOM"


@dataclass(frozen=True)
class EmbeddedManifold:
    ambient_dim: int
    constraint: Callable[[np.ndarray], np.ndarray]
    name: ManifoldKind = ManifoldKind.CUSTOM

    def residual(self, x: np.ndarray) -> np.ndarray:
        """``|constraint(x)|`` per point, max over constraint components."""
        r = np.asarray(self.constraint(np.asarray(x, dtype=float)), dtype=float)
        return np.abs(r) if r.ndim == np.ndim(x) - 1 else np.max(np.abs(r), axis=-1)

    @classmethod
    def circle(cls) -> "EmbeddedManifold":
        return cls(2, _unit_norm, ManifoldKind.CIRCLE)

    @classmethod
    def sphere(cls) -> "EmbeddedManifold":
        return cls(3, _unit_norm, ManifoldKind.SPHERE)


def _unit_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1) - 1.0


@dataclass(frozen=True)
class CurveFamily:
    """``gamma(x, dz)`` with anchor ``dz = 0`` and its 2-jet in ``dz``.

    ``gamma`` and ``jet_at`` take batched ``x (S, n)`` and ``dz (S, k)``.
    """

    gamma: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jet_at: Callable[[np.ndarray, np.ndarray], Jet2]
    driver_dim: int
    manifold: Optional[EmbeddedManifold] = None

    def anchor_jet(self, x: np.ndarray) -> Jet2:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.jet_at(x, np.zeros((x.shape[0], self.driver_dim)))


def circle_rotation() -> CurveFamily:
    """``gamma(x, dz) = R(dz) x`` on the unit circle, one-dimensional driver."""

    def gamma(x, dz):
        c, s = np.cos(dz[:, 0]), np.sin(dz[:, 0])
        return np.stack([c * x[:, 0] - s * x[:, 1], s * x[:, 0] + c * x[:, 1]], axis=1)

    def jet_at(x, dz):
        c, s = np.cos(dz[:, 0]), np.sin(dz[:, 0])
        val = gamma(x, dz)
        d1 = np.stack([-s * x[:, 0] - c * x[:, 1], c * x[:, 0] - s * x[:, 1]], axis=1)
        return Jet2(dz, val, d1[:, :, None], -val[:, :, None, None])

    return CurveFamily(gamma, jet_at, 1, EmbeddedManifold.circle())


def sphere_exponential() -> CurveFamily:
    """Geodesic exponential of the tangential projection of an ambient step.

    ``v = (I - x x^T) dz`` and ``gamma = cos|v| x + sin|v| v / |v|``.  The jet
    is available only at the anchor ``dz = 0``: ``J = I - x x^T`` and
    ``H_k = -x_k (I - x x^T)``.
    """

    def gamma(x, dz):
        v = dz - np.sum(x * dz, axis=1, keepdims=True) * x
        r = np.linalg.norm(v, axis=1, keepdims=True)
        safe = np.where(r > 0, r, 1.0)
        return np.cos(r) * x + np.where(r > 0, np.sin(r) / safe, 1.0) * v

    def jet_at(x, dz):
        if np.any(dz != 0):
            raise InvalidArgumentError("sphere family jets are implemented at the anchor only")
        P = np.eye(3)[None] - x[:, :, None] * x[:, None, :]
        H = -x[:, :, None, None] * P[:, None, :, :]
        return Jet2(dz, x, P, H)

    return CurveFamily(gamma, jet_at, 3, EmbeddedManifold.sphere())


def linear_family(A: np.ndarray) -> CurveFamily:
    """``gamma(x, dz) = x + A dz``, a flat family with zero Hessian."""
    A = np.asarray(A, dtype=float)

    def gamma(x, dz):
        return x + dz @ A.T

    def jet_at(x, dz):
        n = x.shape[0]
        q, k = A.shape
        return Jet2(dz, gamma(x, dz), np.broadcast_to(A, (n, q, k)), np.zeros((n, q, k, k)))

    return CurveFamily(gamma, jet_at, A.shape[1])


def _start(curves: CurveFamily, driver: PathBundle, x0) -> np.ndarray:
    if driver.dims != curves.driver_dim:
        raise ShapeMismatchError(
            f"driver has {driver.dims} components, curve family needs {curves.driver_dim}"
        )
    x = np.asarray(x0, dtype=float)
    if x.ndim == 1:
        x = np.broadcast_to(x, (driver.n_paths, x.shape[0]))
    if x.shape[0] != driver.n_paths:
        raise ShapeMismatchError("one start state per driver path is required")
    m = curves.manifold
    if m is not None and np.max(m.residual(x)) > INTEGRITY_TOL:
        raise InvalidArgumentError("initial state is not on the manifold")
    return np.array(x)


def integrate_jet_scheme(
    curves: CurveFamily, driver: PathBundle, x0, *, tol: float = INTEGRITY_TOL
) -> PathBundle:
    """Step ``X_{k+1} = gamma(X_k, Z_{k+1} - Z_k)`` along each driver path.

    Raises ``ManifoldIntegrityError`` if a step lands further than ``tol``
    from the manifold.
    """
    x = _start(curves, driver, x0)
    dZ = driver.increments()
    out = np.empty((driver.n_paths, driver.grid.n_steps + 1, x.shape[1]))
    out[:, 0] = x
    m = curves.manifold
    for k in range(driver.grid.n_steps):
        x = curves.gamma(x, dZ[:, k])
        if m is not None:
            worst = float(np.max(m.residual(x)))
            if worst > tol:
                raise ManifoldIntegrityError(f"step {k + 1}: constraint residual {worst:.3e}")
        out[:, k + 1] = x
    return PathBundle(driver.grid, out, driver.seed, driver.path_seed_rule, {"scheme": "jet"})


def integrate_coordinate_scheme(
    curves: CurveFamily, driver: PathBundle, x0, *, bracket: str = "realized"
) -> PathBundle:
    """Euler scheme for the ambient Itô equation of the curve family.

    Each step adds ``J dZ + 1/2 H : B`` with the jet taken at the anchor.
    ``bracket="realized"`` uses ``B = dZ dZ^T``; ``"deterministic"`` uses the
    expected bracket ``I dt``, which leaves the manifold at rate
    ``sqrt(step)`` instead of ``step``.
    """
    if bracket not in ("realized", "deterministic"):
        raise InvalidArgumentError("bracket must be 'realized' or 'deterministic'")
    x = _start(curves, driver, x0)
    dZ = driver.increments()
    k_dim = curves.driver_dim
    eye = np.eye(k_dim) * driver.grid.step
    out = np.empty((driver.n_paths, driver.grid.n_steps + 1, x.shape[1]))
    out[:, 0] = x
    for k in range(driver.grid.n_steps):
        jet = curves.anchor_jet(x)
        dz = dZ[:, k]
        if bracket == "realized":
            B = dz[:, :, None] * dz[:, None, :]
        else:
            B = np.broadcast_to(eye, (dz.shape[0], k_dim, k_dim))
        x = (
            x
            + np.einsum("sqk,sk->sq", jet.jacobian, dz)
            + 0.5 * np.einsum("sqij,sij->sq", jet.hessians, B)
        )
        out[:, k + 1] = x
    return PathBundle(driver.grid, out, driver.seed, driver.path_seed_rule,
                      {"scheme": "coordinate", "bracket": bracket})


def residual_report(bundle: PathBundle, manifold: EmbeddedManifold) -> np.ndarray:
    """``(n_steps + 1, 2)`` table of ``(step, max residual over paths)``."""
    res = manifold.residual(bundle.values).max(axis=0)
    return np.column_stack([np.arange(res.size), res])


def write_residual_csv(table: np.ndarray, target) -> None:
    np.savetxt(target, table, delimiter=",", fmt=["%d", "%.17g"],
               header="step,max_residual", comments="")
