"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are printed even under
output capture) or ``python tests/test_acceptance.py`` for the bare table.
"""

import time

import numpy as np
import pytest

from itodiff.asymptotics import LadderConfig
from itodiff.cli import fan_tables
from itodiff.differential import (
    ItoDifferential,
    add,
    basis,
    chain_rule,
    dt,
    dW,
    inner,
    level_splits,
    scale,
    star,
    test_zero as zero_test,
    verify_ftc,
    zero,
)
from itodiff.manifold import (
    EmbeddedManifold,
    Jet2,
    circle_rotation,
    compose_jets,
    integrate_coordinate_scheme,
    integrate_jet_scheme,
    pushforward,
    sphere_exponential,
)
from itodiff.market import (
    DiffusionMarket,
    InstantaneousPortfolio,
    ampr,
    constraint_residual,
    functionals,
    market_portfolio,
    market_price_of_risk,
    one_fund,
    one_fund_weights,
    risk_free_portfolio,
)
from itodiff.paths import (
    Decomposition,
    PathBundle,
    ProcessSpec,
    TimeGrid,
    evaluate_pathological,
    numeric_total_variation,
    pathological_band_bounds,
    pathological_band_tv,
    pathological_nodes,
    pathological_tv_to_root,
    simulate_brownian,
)

SEED = 2024
_printer = print


def report(number, checks):
    """Print one line for the criterion and fail on any failed check."""
    ok = all(c for c, _ in checks)
    detail = "; ".join(f"{'ok' if c else 'FAILED'} {msg}" for c, msg in checks)
    _printer(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _printer

    def emit(line):
        with capsys.disabled():
            print("\n" + line)

    _printer = emit
    yield
    _printer = print


# -- 1. fan diagrams --------------------------------------------------------------


def test_criterion_1_fan_diagrams():
    t0 = time.perf_counter()
    tabs = fan_tables(n_paths=100_000, n_steps=2048, seed=SEED)
    elapsed = time.perf_counter() - t0
    t = tabs["W2_DRIFT"]["t"]
    w2 = tabs["W2_DRIFT"]
    dev = np.abs(w2["mean"] - t**2)
    a_ok = bool(np.all(dev <= 3 * w2["se"]))
    z = np.max(dev[1:] / w2["se"][1:])
    late = t >= 0.05
    rb = tabs["BROWNIAN"]["p95"][late] / np.sqrt(t[late])
    b_ok = bool(np.all((rb >= 1.56) & (rb <= 1.73)))
    early = (t > 0) & (t <= 0.2)
    rs = tabs["W_SQUARED"]["p95"][early] / t[early]
    c_ok = bool(np.all((rs >= 3.5) & (rs <= 4.2)))
    report(1, [
        (a_ok, f"(a) max |mean - t^2|/SE = {z:.2f} <= 3"),
        (b_ok, f"(b) p95/sqrt(t) in [{rb.min():.3f}, {rb.max():.3f}]"),
        (c_ok, f"(c) p95/t in [{rs.min():.3f}, {rs.max():.3f}]"),
        (elapsed < 60, f"runtime {elapsed:.1f} s for all three panels"),
    ])


# -- 2. classifier table ----------------------------------------------------------------


def test_criterion_2_classifier_table():
    cfg = LadderConfig(h_max=2.0**-4, n_levels=9)
    n = 10_000

    def verdict(kind, t, seed):
        return zero_test(level_splits(ProcessSpec(kind), t, cfg, n, seed=seed), t, cfg)

    w0 = verdict("W2_DRIFT", 0.0, SEED)
    w5 = verdict("W2_DRIFT", 0.5, SEED + 1)
    b0 = verdict("BROWNIAN", 0.0, SEED + 2)
    b5 = verdict("BROWNIAN", 0.5, SEED + 3)
    tr = verdict("TIME_ROOT", 0.0, SEED + 4)
    report(2, [
        (w0.zero, f"W2_DRIFT t=0 zero (TV slope {w0.tv.slope:.3f}, QV slope {w0.qv.slope:.3f})"),
        (w5.cbp and not w5.zero, f"W2_DRIFT t=0.5 CBP not zero (TV slope {w5.tv.slope:.3f})"),
        (b0.cbp and not b0.zero and abs(b0.qv.slope - 1) <= 0.15,
         f"BROWNIAN t=0 QV slope {b0.qv.slope:.3f}"),
        (b5.cbp and not b5.zero and abs(b5.qv.slope - 1) <= 0.15,
         f"BROWNIAN t=0.5 QV slope {b5.qv.slope:.3f}"),
        (not tr.cbp and abs(tr.qv.slope - 0.5) <= 0.1, f"TIME_ROOT t=0 not CBP, QV slope {tr.qv.slope:.3f}"),
    ])


# -- 3. fundamental theorem ------------------------------------------------------------


def test_criterion_3_ftc():
    cfg = LadderConfig()
    cos = verify_ftc(lambda s, x: np.cos(x[:, 0]), ProcessSpec("BROWNIAN"), 0.0, cfg,
                     n_paths=10_000, seed=SEED)
    grid = cfg.grid_for(0.0)
    root = np.broadcast_to(np.sqrt(grid.times)[None, :, None], (100, grid.n_steps + 1, 1))
    split = Decomposition(PathBundle(grid, root), PathBundle(grid, np.zeros(root.shape)))
    sq = verify_ftc(lambda s, x: np.sqrt(s), None, 0.0, cfg, x_split=split)
    report(3, [
        (cos.zero, "H=cos(W) residual verdict zero"),
        (abs(cos.residual.qv.slope - 2) <= 0.2,
         f"H=cos(W) residual QV slope {cos.residual.qv.slope:.3f} vs 2 +- 0.2"),
        (not sq.precondition_ok, "H=sqrt(t), X=sqrt(t) flagged as CBP-precondition failure"),
        (abs(sq.drift_rate - 0.5) <= 0.02, f"residual drift rate {sq.drift_rate:.4f} vs 0.5 +- 0.02"),
    ])


# -- 4. algebra ------------------------------------------------------------------------


def test_criterion_4_algebra():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    n, d, T = 10_000, 3, 0.25

    def rnd():
        return ItoDifferential(T, rng.uniform(-1, 1, (n, 1)), rng.uniform(-1, 1, (n, 1, d)))

    a, b, c = rnd(), rnd(), rnd()
    h, k = rng.uniform(-1, 1, (2, n))
    z = zero(T, d=d, n_scenarios=n)
    tol = 1e-12
    ring = all([
        add(a, b).equals(add(b, a), tol),
        add(add(a, b), c).equals(add(a, add(b, c)), tol),
        add(a, z).equals(a, tol),
        add(a, scale(-1, a)).is_zero(tol),
        star(a, b).equals(star(b, a), tol),
        star(scale(h, a), b).equals(scale(h, star(a, b)), tol),
        star(add(a, b), c).equals(add(star(a, c), star(b, c)), tol),
        scale(h, add(a, b)).equals(add(scale(h, a), scale(h, b)), tol),
        scale(h * k, a).equals(scale(h, scale(k, a)), tol),
        star(a, z).is_zero(tol),
        bool(np.all(star(a, b).diffusion == 0)),
    ])
    table = all(
        star(dW(T, i, d, n), dW(T, j, d, n)).equals(dt(T, d, n) if i == j else z, tol)
        for i in range(d) for j in range(d)
    ) and star(dt(T, d, n), rnd()).is_zero(tol)
    triple = star(star(a, b), c).is_zero(tol)
    q = inner(a, a)
    pd = bool(np.all(q > 0)) and np.all(inner(z, z) == 0) and np.allclose(inner(a, b), inner(b, a), atol=tol)
    H = rng.uniform(-1, 1, (d + 1, n))
    comb = z
    for coef, e in zip(H, basis(T, d, n)):
        comb = add(comb, scale(coef, e))
    coeffs = np.concatenate([comb.drift, comb.diffusion[:, 0, :]], axis=1)
    indep = np.allclose(coeffs, H.T, atol=tol, rtol=0)
    # chain rule: square, product, and two-step composition sin then exp
    x, y = rng.uniform(-1, 1, (2, n))
    ax = ItoDifferential(T, a.drift, a.diffusion, x[:, None])
    sq_jet = Jet2(x[:, None], (x**2)[:, None], (2 * x)[:, None, None], np.full((n, 1, 1, 1), 2.0))
    square = chain_rule(sq_jet, ax).equals(add(scale(2 * x, a), star(a, a)), tol)
    both = ItoDifferential(T, np.concatenate([a.drift, b.drift], 1),
                           np.concatenate([a.diffusion, b.diffusion], 1), np.stack([x, y], 1))
    pj = Jet2(np.stack([x, y], 1), (x * y)[:, None], np.stack([y, x], 1)[:, None, :],
              np.broadcast_to(np.array([[0.0, 1.0], [1.0, 0.0]]), (n, 1, 2, 2)))
    product = chain_rule(pj, both).equals(add(add(scale(x, b), scale(y, a)), star(a, b)), tol)
    fx = np.sin(x)
    jf = Jet2(x[:, None], fx[:, None], np.cos(x)[:, None, None], -np.sin(x)[:, None, None, None])
    e = np.exp(fx)
    jg = Jet2(fx[:, None], e[:, None], e[:, None, None], e[:, None, None, None])
    jgf = Jet2(x[:, None], e[:, None], (e * np.cos(x))[:, None, None],
               (e * (np.cos(x) ** 2 - np.sin(x)))[:, None, None, None])
    compose = chain_rule(jgf, ax).equals(chain_rule(jg, chain_rule(jf, ax)), tol)
    elapsed = time.perf_counter() - t0
    report(4, [
        (ring, "ring/module axioms"),
        (table, "dW^i * dW^j = delta_ij dt and dt absorbs"),
        (triple, "triple star vanishes"),
        (pd, f"inner product positive definite (min <a,a> = {q.min():.2e})"),
        (indep, "{dt, dW^i} linearly independent"),
        (square and product and compose, "chain/product rule identities"),
        (elapsed < 1.0, f"{n} instances in {elapsed:.2f} s"),
    ])


# -- 5. manifolds ---------------------------------------------------------------------------


def _random_jet(rng, n, p, q, base=None):
    base = rng.normal(size=(n, p)) if base is None else base
    H = rng.normal(size=(n, q, p, p))
    return Jet2(base, rng.normal(size=(n, q)), rng.normal(size=(n, q, p)), H + np.swapaxes(H, -1, -2))


def test_criterion_5_manifolds():
    grid = TimeGrid(0.0, 1.0, 1024)
    circ = integrate_jet_scheme(circle_rotation(), simulate_brownian(grid, 1, 100, SEED),
                                np.array([1.0, 0.0]))
    sph = integrate_jet_scheme(sphere_exponential(), simulate_brownian(grid, 3, 100, SEED + 1),
                               np.array([0.0, 0.0, 1.0]))
    rc = float(EmbeddedManifold.circle().residual(circ.values).max())
    rs = float(EmbeddedManifold.sphere().residual(sph.values).max())

    fine = simulate_brownian(grid, 1, 2000, SEED + 2)
    coarse = PathBundle(TimeGrid(0.0, 1.0, 512), fine.values[:, ::2])

    def radial(drv):
        out = integrate_coordinate_scheme(circle_rotation(), drv, np.array([1.0, 0.0]))
        return float(np.mean(np.abs(np.linalg.norm(out.values[:, -1], axis=1) - 1)))

    ratio = radial(coarse) / radial(fine)

    rng = np.random.default_rng(SEED)
    n = 1000
    f = _random_jet(rng, n, 3, 2)
    g = _random_jet(rng, n, 2, 3, base=np.array(f.value))
    a = ItoDifferential(0.0, rng.normal(size=(n, 3)), rng.normal(size=(n, 3, 2)), np.array(f.base_point))
    lhs = pushforward(compose_jets(g, f), a)
    rhs = pushforward(g, pushforward(f, a))
    err = max(np.abs(lhs.drift - rhs.drift).max(), np.abs(lhs.diffusion - rhs.diffusion).max())
    report(5, [
        (rc < 1e-10, f"circle jet scheme max residual {rc:.1e}"),
        (rs < 1e-10, f"sphere jet scheme max residual {rs:.1e}"),
        (1.5 <= ratio <= 3, f"coordinate scheme radial error ratio {ratio:.2f}"),
        (err < 1e-10, f"functoriality error {err:.1e} over {n} jet pairs"),
    ])


# -- 6. market ------------------------------------------------------------------------


def test_criterion_6_market():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    d = 3
    mu = rng.normal(0.05, 0.1, d)
    sig = rng.normal(size=(d, d)) + 2 * np.eye(d)
    mkt = DiffusionMarket(0.04, d, lambda t, x: mu * x, lambda t, x: sig)
    n = 1000
    x = rng.uniform(50, 150, (n, d))
    X = rng.uniform(1, 100, n)
    built = [risk_free_portfolio(mkt, X), market_portfolio(mkt, 0, x, X), one_fund(mkt, 0, x, X, 0.01)]
    res = max(float(np.abs(constraint_residual(mkt, 0, x, p)).max()) for p in built)

    am = ampr(mkt, 0, x)
    rr = functionals(built[1]).relative_risk
    rr_err = float(np.abs(rr - mkt.r / am).max())

    x1 = x[:1]
    lam = market_price_of_risk(mkt, 0, x1)[0]
    bound = mkt.r / np.linalg.norm(lam)
    cost = 10.0
    w = rng.normal(size=(n, d)) * rng.uniform(0, 10, (n, 1))
    w -= np.outer(w @ lam, lam) / (lam @ lam)
    diff = mkt.r * cost * lam / (lam @ lam) + w
    rand = InstantaneousPortfolio(np.full(n, cost), ItoDifferential(0, np.zeros((n, 1)), diff[:, None, :]))
    feas = float(np.abs(constraint_residual(mkt, 0, np.broadcast_to(x1, (n, d)), rand)).max())
    opt = bool(np.all(functionals(rand).relative_risk >= bound * (1 - 1e-9)))

    fund_ok = True
    for _ in range(100):
        r = float(rng.choice([-1, 1]) * rng.uniform(0.001, 0.2))
        m_t = float(rng.uniform(-0.2, 0.2))
        Xc = float(rng.uniform(1, 100))
        w0, w1 = one_fund_weights(r, m_t)
        m1 = DiffusionMarket(r, d, lambda t, x: mu * x, lambda t, x: sig)
        p = one_fund(m1, 0, x1, [Xc], m_t)
        rf, mp = risk_free_portfolio(m1, [Xc]), market_portfolio(m1, 0, x1, [Xc])
        fund_ok &= (w0, w1) == (m_t / r, (r - m_t) / r)
        fund_ok &= p.eta.equals(add(scale(w0, rf.eta), scale(w1, mp.eta)))
        fund_ok &= abs(p.eta.drift[0, 0] - m_t * Xc) < 1e-12 * max(1.0, Xc)
        fund_ok &= abs(constraint_residual(m1, 0, x1, p)[0]) < 1e-12 * max(1.0, Xc)
    elapsed = time.perf_counter() - t0
    report(6, [
        (res < 1e-12, f"constructed portfolios max |residual| {res:.1e}"),
        (rr_err < 1e-12, f"market RR = r/AMPR to {rr_err:.1e}"),
        (feas < 1e-12 and opt, f"{n} random zero-ER portfolios feasible ({feas:.1e}) with RR >= r/AMPR"),
        (bool(fund_ok), "one-fund weights and combination for 100 random (r, mu, X)"),
        (elapsed < 1.0, f"{elapsed:.2f} s"),
    ])


# -- 7. pathological function ------------------------------------------------------------------


def test_criterion_7_pathological():
    a, b = -2.0, 2.0
    h = np.concatenate([np.logspace(-8, 0, 20_001)[:-1]]
                       + [pathological_nodes(n, a, b)[0] for n in range(1, 41)])
    f = evaluate_pathological(h, a, b)
    # f/h <= h checked as f <= h**2: at touch points f = h**2 and h**2/h rounds up by an ulp
    cap = bool(np.all(f <= h * h))
    n = np.arange(1, 41)
    ratio = pathological_tv_to_root(n, a, b) / n.astype(float) ** a
    inc = bool(np.all(np.diff(ratio[1:]) > 0))
    band = pathological_band_tv(n, a, b)
    lo, hi = pathological_band_bounds(n, a, b)
    inside = bool(np.all((band >= lo) & (band <= hi)))
    direct = max(
        abs(numeric_total_variation(lambda s: evaluate_pathological(s, a, b),
                                    np.concatenate([pathological_nodes(k, a, b)[0],
                                                    np.linspace(float(k + 1) ** a, float(k) ** a, 4001)]))
            - band[k - 1]) / band[k - 1]
        for k in range(1, 11)
    )
    report(7, [
        (cap, f"f(h)/h <= h at {h.size} sampled h"),
        (inc, f"TV/x_n strictly increasing for n = 2..40 ({ratio[1]:.3f} -> {ratio[-1]:.3f})"),
        (inside, "band TV inside sandwich bounds for n = 1..40"),
        (direct < 1e-9, f"closed-form band TV matches tent summation to {direct:.1e}"),
    ])


if __name__ == "__main__":  # pragma: no cover
    import sys

    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    sys.exit(0)
