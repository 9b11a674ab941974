"""Instantaneous portfolios in a complete diffusion market.

Asset prices follow ``dX = mu(t, X) dt + sigma(t, X) dW`` with a risk-free
rate ``r``.  At a fixed time the market differential is ``lambda . dW`` with
``lambda = sigma^{-1} (r x - mu)``, and a pair ``(cost, eta)`` is an
instantaneous portfolio when

    E_t[eta] + lambda . diffusion(eta) = r * cost

holds scenario-wise.  All quantities are scenario-parallel: states ``x`` are
``(S, d)`` and costs are ``(S,)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .differential import ItoDifferential
from .errors import (
    InvalidArgumentError,
    ShapeMismatchError,
    SingularVolatilityError,
    UndefinedWeightsError,
    ZeroMarketPriceOfRiskError,
)

__all__ = [
    "DiffusionMarket",
    "InstantaneousPortfolio",
    "PortfolioFunctionals",
    "one_asset_market",
    "market_price_of_risk",
    "market_differential",
    "constraint_residual",
    "functionals",
    "risk",
    "risk_free_portfolio",
    "market_portfolio",
    "one_fund",
    "one_fund_weights",
    "combine",
    "ampr",
    "portfolio_report",
]

COND_LIMIT = 1e10


@dataclass(frozen=True)
class DiffusionMarket:
    """``mu(t, x)`` returns ``(S, d)``; ``sigma(t, x)`` returns ``(S, d, d)`` or ``(d, d)``."""

    r: float
    d: int
    mu: Callable[[float, np.ndarray], np.ndarray]
    sigma: Callable[[float, np.ndarray], np.ndarray]

    def states(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1, 1)
        elif x.ndim == 1:
            x = x[None, :] if x.shape[0] == self.d else x[:, None]
        if x.ndim != 2 or x.shape[1] != self.d:
            raise ShapeMismatchError(f"states must be (S, {self.d})")
        return x

    def coefficients(self, t: float, x):
        x = self.states(x)
        n = x.shape[0]
        mu = np.broadcast_to(np.asarray(self.mu(t, x), dtype=float), (n, self.d))
        sig = np.broadcast_to(np.asarray(self.sigma(t, x), dtype=float), (n, self.d, self.d))
        cond = np.linalg.cond(sig)
        if not np.all(np.isfinite(cond)) or np.any(cond > COND_LIMIT):
            raise SingularVolatilityError(
                f"volatility condition number {float(np.max(cond)):.3e} exceeds {COND_LIMIT:.0e}"
            )
        return x, mu, sig


def one_asset_market(r: float, alpha: float, s: float) -> DiffusionMarket:
    """Geometric Brownian asset: ``mu = alpha x``, ``sigma = s x``."""
    return DiffusionMarket(
        r, 1, lambda t, x: alpha * x, lambda t, x: (s * x)[:, :, None]
    )


@dataclass(frozen=True)
class InstantaneousPortfolio:
    cost: np.ndarray
    eta: ItoDifferential
    weights: Optional[tuple] = None

    def __post_init__(self):
        cost = np.atleast_1d(np.asarray(self.cost, dtype=float))
        if self.eta.m != 1:
            raise ShapeMismatchError("portfolio differentials are scalar")
        if cost.shape != (self.eta.n_scenarios,):
            raise ShapeMismatchError("one cost per scenario is required")
        object.__setattr__(self, "cost", cost)


def market_price_of_risk(mkt: DiffusionMarket, t: float, x) -> np.ndarray:
    """``lambda = sigma^{-1} (r x - mu)``, shape ``(S, d)``."""
    x, mu, sig = mkt.coefficients(t, x)
    return np.linalg.solve(sig, (mkt.r * x - mu)[:, :, None])[:, :, 0]


def market_differential(mkt: DiffusionMarket, t: float, x) -> ItoDifferential:
    lam = market_price_of_risk(mkt, t, x)
    return ItoDifferential(t, np.zeros((lam.shape[0], 1)), lam[:, None, :])


def ampr(mkt: DiffusionMarket, t: float, x) -> np.ndarray:
    """Absolute market price of risk ``|lambda|``."""
    return np.linalg.norm(market_price_of_risk(mkt, t, x), axis=1)


def _lam_for(mkt, t, x, p: InstantaneousPortfolio):
    lam = market_price_of_risk(mkt, t, x)
    if lam.shape[0] != p.eta.n_scenarios or p.eta.d != mkt.d:
        raise ShapeMismatchError("portfolio and market states disagree")
    return lam


def constraint_residual(mkt: DiffusionMarket, t: float, x, p: InstantaneousPortfolio) -> np.ndarray:
    """``E_t[eta] + lambda . diffusion(eta) - r * cost`` per scenario."""
    lam = _lam_for(mkt, t, x, p)
    return p.eta.drift[:, 0] + np.einsum("sj,sj->s", lam, p.eta.diffusion[:, 0, :]) - mkt.r * p.cost


@dataclass(frozen=True)
class PortfolioFunctionals:
    """Risk, cost, payoff and the return ratios.

    ``expected_return`` and ``relative_risk`` are NaN where the cost is zero;
    ``undefined`` marks those scenarios.
    """

    risk: np.ndarray
    cost: np.ndarray
    payoff: np.ndarray
    expected_return: np.ndarray
    relative_risk: np.ndarray
    undefined: np.ndarray


def risk(p: InstantaneousPortfolio, other: Optional[InstantaneousPortfolio] = None) -> np.ndarray:
    """Bilinear risk ``diffusion(eta) . diffusion(eta')``; diagonal when ``other`` is omitted."""
    q = p if other is None else other
    return np.einsum("sj,sj->s", p.eta.diffusion[:, 0, :], q.eta.diffusion[:, 0, :])


def functionals(p: InstantaneousPortfolio) -> PortfolioFunctionals:
    rk = risk(p)
    payoff = p.cost + p.eta.drift[:, 0]
    bad = p.cost == 0
    safe = np.where(bad, 1.0, p.cost)
    er = np.where(bad, np.nan, (payoff - p.cost) / safe)
    rr = np.where(bad, np.nan, np.sqrt(rk) / safe)
    return PortfolioFunctionals(rk, p.cost.copy(), payoff, er, rr, bad)


def risk_free_portfolio(mkt: DiffusionMarket, X, t: float = 0.0) -> InstantaneousPortfolio:
    """``(X, r X dt)``."""
    X = np.atleast_1d(np.asarray(X, dtype=float))
    n = X.shape[0]
    return InstantaneousPortfolio(
        X, ItoDifferential(t, (mkt.r * X)[:, None], np.zeros((n, 1, mkt.d))), weights=(1.0, 0.0)
    )


def market_portfolio(mkt: DiffusionMarket, t: float, x, X) -> InstantaneousPortfolio:
    """``(X, r X / |lambda|**2 * lambda . dW)``, the zero-return risk minimiser."""
    lam = market_price_of_risk(mkt, t, x)
    n = lam.shape[0]
    X = np.broadcast_to(np.asarray(X, dtype=float), (n,)).copy()
    norm2 = np.sum(lam * lam, axis=1)
    if np.any(norm2 == 0):
        raise ZeroMarketPriceOfRiskError("market price of risk is zero; no market portfolio")
    c = mkt.r * X / norm2
    return InstantaneousPortfolio(
        X, ItoDifferential(t, np.zeros((n, 1)), (c[:, None] * lam)[:, None, :]), weights=(0.0, 1.0)
    )


def one_fund_weights(r: float, mu_target: float) -> tuple:
    """``(mu / r, (r - mu) / r)`` on the risk-free and market portfolios."""
    if r == 0:
        raise UndefinedWeightsError("fund weights need a non-zero risk-free rate")
    return mu_target / r, (r - mu_target) / r


def one_fund(mkt: DiffusionMarket, t: float, x, X, mu_target: float) -> InstantaneousPortfolio:
    """Risk-minimising portfolio of cost ``X`` and expected return ``mu_target``."""
    w0, w1 = one_fund_weights(mkt.r, mu_target)
    mkt_p = market_portfolio(mkt, t, x, X)
    rf = risk_free_portfolio(mkt, mkt_p.cost, t)
    drift = w0 * rf.eta.drift + w1 * mkt_p.eta.drift
    diffusion = w0 * rf.eta.diffusion + w1 * mkt_p.eta.diffusion
    return InstantaneousPortfolio(mkt_p.cost, ItoDifferential(t, drift, diffusion), weights=(w0, w1))


def combine(portfolios: Sequence[InstantaneousPortfolio], weights: Sequence) -> InstantaneousPortfolio:
    """Scenario-weighted sum ``sum_i H_i p_i`` of portfolios."""
    if len(portfolios) != len(weights) or not portfolios:
        raise InvalidArgumentError("need one weight per portfolio")
    n = portfolios[0].eta.n_scenarios
    cost = np.zeros(n)
    drift = np.zeros((n, 1))
    diffusion = np.zeros_like(portfolios[0].eta.diffusion)
    for p, h in zip(portfolios, weights):
        h = np.broadcast_to(np.asarray(h, dtype=float), (n,))
        cost = cost + h * p.cost
        drift = drift + h[:, None] * p.eta.drift
        diffusion = diffusion + h[:, None, None] * p.eta.diffusion
    return InstantaneousPortfolio(cost, ItoDifferential(portfolios[0].eta.t, drift, diffusion))


def portfolio_report(mkt: DiffusionMarket, t: float, x, p: InstantaneousPortfolio) -> dict:
    """JSON-ready ``{cost, drift, diffusion, ER, RR, residual, ampr}``."""
    f = functionals(p)

    def lst(a):
        return [None if not np.isfinite(v) else float(v) for v in np.ravel(a)]

    out = {
        "cost": lst(p.cost),
        "drift": lst(p.eta.drift[:, 0]),
        "diffusion": p.eta.diffusion[:, 0, :].tolist(),
        "ER": lst(f.expected_return),
        "RR": lst(f.relative_risk),
        "residual": lst(constraint_residual(mkt, t, x, p)),
        "ampr": lst(ampr(mkt, t, x)),
    }
    if p.weights is not None:
        out["weights"] = [float(w) for w in p.weights]
    return out


def portfolio_json(mkt: DiffusionMarket, t: float, x, p: InstantaneousPortfolio, **kw) -> str:
    return json.dumps(portfolio_report(mkt, t, x, p), **kw)
