"""Command-line entry point: ``itodiff <command> [options]``.

Every command writes data only (CSV or JSON).  The first output line is a
versioned header echoing the resolved configuration:

* CSV: ``# itodiff.<command>/1 {json config}`` followed by the column header
* JSON: ``{"schema": "itodiff.<command>/1", "config": {...}, "result": ...}``

Exit status is 0 for a completed run whatever the verdict, 1 for library
errors and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .asymptotics import LadderConfig, increment_correlation
from .differential import (
    level_splits,
    test_equal,
    test_zero,
    verify_chain_rule,
    verify_ftc,
    windowed_split,
)
from .errors import InvalidArgumentError, ItodiffError
from .manifold import (
    Jet2,
    circle_rotation,
    integrate_coordinate_scheme,
    integrate_jet_scheme,
    residual_report,
    sphere_exponential,
)
from .market import (
    ampr,
    market_portfolio,
    one_asset_market,
    one_fund,
    portfolio_report,
    risk_free_portfolio,
)
from .paths import (
    Decomposition,
    PathBundle,
    ProcessKind,
    ProcessSpec,
    TimeGrid,
    oscillating_phi,
    pathological_band_bounds,
    pathological_band_tv,
    pathological_tv_to_root,
    simulate,
    simulate_brownian,
)

SCHEMA_VERSION = 1
FAN_KINDS = ("W2_DRIFT", "BROWNIAN", "W_SQUARED")


@dataclass
class RunConfig:
    command: str
    seed: int = 2024
    paths: Optional[int] = None
    steps: Optional[int] = None
    t: Optional[float] = None
    h_max: float = 2.0**-4
    levels: int = 9
    quantile: float = 0.95
    out: Optional[str] = None
    format: Optional[str] = None
    options: dict = field(default_factory=dict)

    def ladder(self) -> LadderConfig:
        return LadderConfig(h_max=self.h_max, n_levels=self.levels, quantile=self.quantile)

    def schema(self) -> str:
        return f"itodiff.{self.command}/{SCHEMA_VERSION}"


# -- fan -----------------------------------------------------------------------


def _fan_values(kind: str, w: np.ndarray, t: np.ndarray) -> np.ndarray:
    if kind == "BROWNIAN":
        return w
    if kind == "W_SQUARED":
        return w * w
    return w * w - t + t * t


def fan_tables(kinds=FAN_KINDS, n_paths: int = 100_000, n_steps: int = 2048, seed: int = 2024,
               t_end: float = 1.0, chunk: int = 5000) -> dict:
    """Fan data for several kinds from one set of Brownian paths.

    Per-time moments accumulate in float64 while the paths stream in slices
    with stable per-path keys.  Only ``W`` is stored (float32, time-major);
    percentiles of ``W**2`` and ``W**2 - t + t**2`` are read from it, the
    latter by the deterministic shift of the former.
    """
    kinds = tuple(kinds)
    for kind in kinds:
        if kind not in FAN_KINDS:
            raise InvalidArgumentError(f"fan kind must be one of {FAN_KINDS}")
    grid = TimeGrid(0.0, t_end, n_steps)
    t = grid.times
    store = np.empty((n_steps + 1, n_paths), dtype=np.float32)
    s1 = {k: np.zeros(n_steps + 1) for k in kinds}
    s2 = {k: np.zeros(n_steps + 1) for k in kinds}
    sample = {}
    for lo in range(0, n_paths, chunk):
        n = min(chunk, n_paths - lo)
        w = simulate_brownian(grid, 1, n, seed, first_path=lo).values[:, :, 0]
        for kind in kinds:
            x = _fan_values(kind, w, t)
            if kind not in sample:
                sample[kind] = x[0].copy()
            s1[kind] += x.sum(axis=0)
            s2[kind] += (x * x).sum(axis=0)
        store[:, lo : lo + n] = w.T
    need_w = "BROWNIAN" in kinds
    need_sq = "W_SQUARED" in kinds or "W2_DRIFT" in kinds
    q_w = np.empty((2, n_steps + 1))
    q_sq = np.empty((2, n_steps + 1))
    block = 64
    for lo in range(0, n_steps + 1, block):
        rows = store[lo : lo + block].astype(np.float64)
        if need_w:
            q_w[:, lo : lo + block] = np.quantile(rows, [0.05, 0.95], axis=1)
        if need_sq:
            q_sq[:, lo : lo + block] = np.quantile(rows * rows, [0.05, 0.95], axis=1)
    out = {}
    for kind in kinds:
        mean = s1[kind] / n_paths
        var = np.maximum(s2[kind] / n_paths - mean**2, 0.0) * n_paths / max(n_paths - 1, 1)
        if kind == "BROWNIAN":
            q = q_w
        elif kind == "W_SQUARED":
            q = q_sq
        else:
            q = q_sq + (t * t - t)
        out[kind] = {"t": t, "mean": mean, "se": np.sqrt(var / n_paths),
                     "p05": q[0].copy(), "p95": q[1].copy(), "sample": sample[kind]}
    return out


def fan_table(kind: str, n_paths: int = 100_000, n_steps: int = 2048, seed: int = 2024,
              t_end: float = 1.0, chunk: int = 5000) -> dict:
    """Mean, standard error, 5th/95th percentiles and one sample path per grid time."""
    return fan_tables((kind,), n_paths, n_steps, seed, t_end, chunk)[kind]


def cmd_fan(cfg: RunConfig):
    kind = cfg.options["kind"]
    tab = fan_table(kind, cfg.paths or 100_000, cfg.steps or 2048, cfg.seed, cfg.t or 1.0)
    return "table", tab


# -- differential experiments -----------------------------------------------------


def _splits(spec: ProcessSpec, t: float, cfg: RunConfig):
    if cfg.options.get("partition", "per-level") == "nested":
        return windowed_split(spec, t, cfg.ladder(), cfg.paths or 10_000, cfg.seed, cfg.steps or 16)
    return level_splits(spec, t, cfg.ladder(), cfg.paths or 10_000, cfg.seed, cfg.steps or 16)


def cmd_classify(cfg: RunConfig):
    spec = ProcessSpec(ProcessKind(cfg.options["kind"]))
    t = cfg.t if cfg.t is not None else 0.0
    v = test_zero(_splits(spec, t, cfg), t, cfg.ladder(),
                  cross_check=cfg.options.get("cross_check", False))
    return "dict", v.to_dict()


def _ftc_case(name: str, cfg: RunConfig, t: float):
    ladder = cfg.ladder()
    n = cfg.paths or 10_000
    if name == "sqrt":
        grid = ladder.grid_for(t, cfg.steps or 16)
        root = np.broadcast_to(np.sqrt(grid.times)[None, :, None], (max(n, 100), grid.n_steps + 1, 1))
        fv = PathBundle(grid, root, cfg.seed, "deterministic", {"case": "sqrt"})
        mart = PathBundle(grid, np.broadcast_to(0.0, root.shape), cfg.seed, "deterministic")
        return verify_ftc(lambda s, x: np.sqrt(s), None, t, ladder, x_split=Decomposition(fv, mart))
    fns = {
        "cos": lambda s, x: np.cos(x[:, 0]),
        "sin": lambda s, x: np.sin(x[:, 0]),
        "one": lambda s, x: np.ones(x.shape[0]),
    }
    return verify_ftc(fns[name], ProcessSpec("BROWNIAN"), t, ladder, n_paths=n, seed=cfg.seed)


def cmd_ftc(cfg: RunConfig):
    t = cfg.t if cfg.t is not None else 0.0
    return "dict", _ftc_case(cfg.options["case"], cfg, t).to_dict()


def cmd_equal(cfg: RunConfig):
    """``W`` against ``W + t**2`` (equal at 0) or against ``2 W``."""
    t = cfg.t if cfg.t is not None else 0.0
    w = _splits(ProcessSpec("BROWNIAN"), t, cfg)

    def variant(s: Decomposition) -> Decomposition:
        if cfg.options["other"] == "two-w":
            return Decomposition(s.fv, s.martingale * 2.0)
        g = s.fv.grid
        shift = np.broadcast_to(g.times[None, :, None] ** 2, s.fv.values.shape)
        return Decomposition(s.fv + PathBundle(g, shift), s.martingale)

    y = [variant(s) for s in w] if isinstance(w, list) else variant(w)
    return "dict", test_equal(w, y, t, cfg.ladder()).to_dict()


def cmd_chain(cfg: RunConfig):
    case = cfg.options["case"]
    ladder = cfg.ladder()
    trunks = cfg.options.get("trunks", 20)
    branches = cfg.options.get("branches", 500)
    if case == "square":
        x0 = float(cfg.options.get("x0", 0.5))
        spec = ProcessSpec("BROWNIAN", x0=x0)

        def f(v):
            return v**2

        def jet(x):
            return Jet2(x, x**2, (2 * x).reshape(1, 1), np.full((1, 1, 1), 2.0))
    else:
        x0 = np.array([0.5, -1.0])
        spec = ProcessSpec("BROWNIAN", x0=x0)

        def f(v):
            return v[..., :1] * v[..., 1:]

        def jet(x):
            return Jet2(x, [x[0] * x[1]], [[x[1], x[0]]], [[[0.0, 1.0], [1.0, 0.0]]])

    rep = verify_chain_rule(spec, f, jet, ladder, trunk_paths=trunks, branches=branches, seed=cfg.seed)
    return "dict", rep.to_dict()


# -- manifold ---------------------------------------------------------------------------


def cmd_manifold(cfg: RunConfig):
    family = cfg.options["family"]
    curves = circle_rotation() if family == "circle" else sphere_exponential()
    x0 = np.array([1.0, 0.0]) if family == "circle" else np.array([0.0, 0.0, 1.0])
    grid = TimeGrid(0.0, cfg.t or 1.0, cfg.steps or 1024)
    driver = simulate_brownian(grid, curves.driver_dim, cfg.paths or 100, cfg.seed)
    if cfg.options["scheme"] == "jet":
        out = integrate_jet_scheme(curves, driver, x0)
    else:
        out = integrate_coordinate_scheme(curves, driver, x0, bracket=cfg.options.get("bracket", "realized"))
    rep = residual_report(out, curves.manifold)
    return "table", {"step": rep[:, 0].astype(int), "max_residual": rep[:, 1]}


# -- market ---------------------------------------------------------------------------------


def cmd_portfolio(cfg: RunConfig):
    o = cfg.options
    mkt = one_asset_market(o["r"], o["alpha"], o["s"])
    x = np.array([[o["price"]]])
    X = np.array([o["cost"]])
    t = cfg.t or 0.0
    result = {
        "ampr": float(ampr(mkt, t, x)[0]),
        "risk_free": portfolio_report(mkt, t, x, risk_free_portfolio(mkt, X, t)),
        "market": portfolio_report(mkt, t, x, market_portfolio(mkt, t, x, X)),
        "one_fund": portfolio_report(mkt, t, x, one_fund(mkt, t, x, X, o["mu_target"])),
    }
    return "dict", result


# -- pathological ----------------------------------------------------------------------------


def cmd_pathological(cfg: RunConfig):
    a, b = cfg.options["alpha"], cfg.options["beta"]
    n = np.arange(1, cfg.options["n_max"] + 1)
    xn = n.astype(float) ** a
    tv = pathological_tv_to_root(n, a, b)
    lo, hi = pathological_band_bounds(n, a, b)
    return "table", {
        "n": n, "x_n": xn, "tv_to_x_n": tv, "tv_over_x_n": tv / xn,
        "band_tv": pathological_band_tv(n, a, b), "band_lower": lo, "band_upper": hi,
    }


# -- increment correlation -------------------------------------------------------------------


def cmd_correlate(cfg: RunConfig):
    """Correlation of oscillating-integral and Brownian increments at ``t``."""
    t = cfg.t if cfg.t is not None else 0.0
    ladder = cfg.ladder()
    grid = ladder.grid_for(t, cfg.steps or 16)
    driver = simulate_brownian(grid, 1, cfg.paths or 10_000, cfg.seed)
    osc = simulate(ProcessSpec("OSCILLATING_INTEGRAL"), grid, driver)
    tab = increment_correlation(osc, driver, t, ladder)
    trunc = osc.meta["band_truncation_index"]
    fine = np.linspace(0.0, 1.0, 4097)
    oracle = []
    for h in tab[:, 0]:
        s = t + h * (fine[:-1] + fine[1:]) / 2
        oracle.append(float(np.mean(oscillating_phi(s, truncation=trunc))))
    return "table", {"h": tab[:, 0], "corr": tab[:, 1], "oracle": np.array(oracle)}


COMMANDS = {
    "fan": cmd_fan,
    "classify": cmd_classify,
    "ftc": cmd_ftc,
    "equal": cmd_equal,
    "chain": cmd_chain,
    "manifold": cmd_manifold,
    "portfolio": cmd_portfolio,
    "pathological": cmd_pathological,
    "correlate": cmd_correlate,
}
DEFAULT_FORMAT = {"fan": "csv", "manifold": "csv", "pathological": "csv", "correlate": "csv"}


# -- argument parsing and output -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=2024, help="64-bit base seed (default 2024)")
    common.add_argument("--paths", type=int, help="number of sample paths")
    common.add_argument("--steps", type=int,
                        help="grid steps (fan, manifold) or steps per smallest window (ladder commands)")
    common.add_argument("--t", type=float, help="evaluation time, or horizon for fan/manifold")
    common.add_argument("--h-max", type=float, default=2.0**-4, help="largest ladder window")
    common.add_argument("--levels", type=int, default=9, help="ladder levels (ratio 1/2)")
    common.add_argument("--quantile", type=float, default=0.95, help="ladder quantile")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")

    p = argparse.ArgumentParser(prog="itodiff", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"itodiff {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fan", parents=[common], help="mean / percentile fan data")
    s.add_argument("--kind", choices=FAN_KINDS, default="W2_DRIFT")

    s = sub.add_parser("classify", parents=[common], help="zero / CBP window verdicts")
    s.add_argument("--kind", choices=[k.value for k in ProcessKind if k is not ProcessKind.ITO],
                   default="W2_DRIFT")
    s.add_argument("--cross-check", action="store_true", help="also classify the squared running max")
    s.add_argument("--partition", choices=("per-level", "nested"), default="per-level",
                   help="regenerate each ladder level, or nest all windows on one grid")

    s = sub.add_parser("ftc", parents=[common], help="fundamental-theorem residual test")
    s.add_argument("--case", choices=("cos", "sin", "one", "sqrt"), default="cos")

    s = sub.add_parser("equal", parents=[common], help="equality of differentials of W and a variant")
    s.add_argument("--other", choices=("w-plus-t2", "two-w"), default="w-plus-t2")
    s.add_argument("--partition", choices=("per-level", "nested"), default="per-level")

    s = sub.add_parser("chain", parents=[common], help="chain rule against Monte Carlo drift")
    s.add_argument("--case", choices=("square", "product"), default="square")
    s.add_argument("--x0", type=float, default=0.5)
    s.add_argument("--trunks", type=int, default=20)
    s.add_argument("--branches", type=int, default=500)

    s = sub.add_parser("manifold", parents=[common], help="jet / coordinate scheme residuals")
    s.add_argument("--family", choices=("circle", "sphere"), default="circle")
    s.add_argument("--scheme", choices=("jet", "coordinate"), default="jet")
    s.add_argument("--bracket", choices=("realized", "deterministic"), default="realized")

    s = sub.add_parser("portfolio", parents=[common], help="one-asset instantaneous portfolios")
    s.add_argument("--r", type=float, default=0.05)
    s.add_argument("--alpha", type=float, default=0.1)
    s.add_argument("--s", type=float, default=0.2)
    s.add_argument("--price", type=float, default=1.0, help="asset price at t")
    s.add_argument("--cost", type=float, default=100.0, help="portfolio cost X")
    s.add_argument("--mu-target", type=float, default=0.02)

    s = sub.add_parser("pathological", parents=[common], help="bounded-variation counterexample table")
    s.add_argument("--alpha", type=float, default=-2.0)
    s.add_argument("--beta", type=float, default=2.0)
    s.add_argument("--n-max", type=int, default=40)

    sub.add_parser("correlate", parents=[common], help="oscillating-integral increment correlation")
    return p


_COMMON = ("seed", "paths", "steps", "t", "h_max", "levels", "quantile", "out", "format")


def resolve(args: argparse.Namespace) -> RunConfig:
    ns = vars(args).copy()
    command = ns.pop("command")
    common = {k: ns.pop(k) for k in _COMMON}
    common["format"] = common["format"] or DEFAULT_FORMAT.get(command, "json")
    return RunConfig(command=command, options=ns, **common)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    return v


def render(cfg: RunConfig, kind: str, payload) -> str:
    conf = asdict(cfg)
    if cfg.format == "json":
        doc = {"schema": cfg.schema(), "config": conf, "result": _jsonable(payload)}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if kind != "table":
        raise UsageError(f"command '{cfg.command}' produces a JSON report; use --format json")
    buf = io.StringIO()
    buf.write(f"# {cfg.schema()} {json.dumps(conf, sort_keys=True)}\n")
    cols = list(payload)
    buf.write(",".join(cols) + "\n")
    arrays = [np.asarray(payload[c]) for c in cols]
    for row in zip(*arrays):
        buf.write(",".join(str(int(v)) if np.issubdtype(type(v), np.integer)
                           else repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


class UsageError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = resolve(args)
    try:
        kind, payload = COMMANDS[cfg.command](cfg)
        text = render(cfg, kind, payload)
    except UsageError as exc:
        parser.error(str(exc))
    except (ItodiffError, ValueError) as exc:
        print(f"itodiff: error: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
