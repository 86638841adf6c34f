"""``geonc`` command line: analytic curves, simulations, rate regions,
rate optimisation, connectivity gains, geo store and lifecycle replay.

Exit codes: 0 success, 2 usage or configuration error, 3 infeasible budget.
Every file written starts with ``#`` comment lines carrying the invocation,
the seed where one is used, and the schema version.
"""
import argparse
import csv
import io
import json
import math
import sys
from importlib import resources

import jsonschema

from . import __version__
from .analytics import PathProfile, reliability_nc, reliability_uncoded, residual_snc
from .channel import ChannelScenario, monte_carlo
from .exceptions import ConfigError, DomainError, InfeasibleBudget, InvalidTransition, MissingLink
from .geo import GeoRecord, GeoStore
from .lifecycle import CodingFunction, Event
from .optimizer import BETA0_LOW, connectivity, operative_range, optimize_rate
from .rate_region import area_ratio, default_axis, region_grid, square_diagnostic, write_region_csv
from .rng import default_seed
from .snc import SncParams

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 2, 3


class UsageError(Exception):
    pass


def load_schema():
    return json.loads(resources.files("geonc").joinpath("schemas/scenario.schema.json").read_text())


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _n_range(text):
    # "a:b" inclusive, or a single value
    try:
        parts = [int(x) for x in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or A:B, got {text!r}") from None
    if len(parts) == 1:
        return parts[0], parts[0]
    if len(parts) != 2 or parts[0] > parts[1]:
        raise argparse.ArgumentTypeError(f"expected A:B with A <= B, got {text!r}")
    return tuple(parts)


def _header(argv, seed=None, **extra):
    lines = ["# geonc " + " ".join(argv), f"# schema_version={SCHEMA_VERSION}"]
    if seed is not None:
        lines.append(f"# seed={seed}")
    lines += [f"# {k}={v}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"


def _emit(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv(columns, rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _g(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.10g}"


def cmd_analyze(args, argv):
    k, q = args.k, args.q
    lo, hi = args.n_range if args.n_range else (k, k + 10)
    if lo < k:
        raise UsageError(f"--n-range must start at or above k={k}")
    path = PathProfile(args.eps)
    rows = []
    for h in range(1, path.hops + 1):
        prefix = PathProfile(path.eps[:h])
        unc = reliability_uncoded(prefix)
        for n in range(lo, hi + 1):
            rho = reliability_nc(k, n, q, prefix)
            rows.append({
                "h": h,
                "n": n,
                "eta": _g(residual_snc(k, n, q, path.eps[h - 1])),
                "rho_nc": _g(rho),
                "rho_unc": _g(unc),
                "meets_rho0": int(rho >= args.rho0),
            })
    cols = ("h", "n", "eta", "rho_nc", "rho_unc", "meets_rho0")
    _emit(_header(argv) + _csv(cols, rows), args.output)


SIM_COLUMNS = (
    "k", "n", "m", "q", "hops", "eps", "codec", "relay_mode", "mixing", "trials",
    "failure", "failure_se", "residual", "residual_se", "analytic_residual", "mean_ops",
)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {path} invalid at {where}: {exc.message}") from None
    return cfg


def cmd_simulate(args, argv):
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.get("seed", default_seed())
    ns = cfg["n"] if isinstance(cfg["n"], list) else [cfg["n"]]
    m, q = cfg.get("m", 1), cfg.get("q", 8)
    rows = []
    for eps in cfg["paths"]:
        for n in ns:
            try:
                params = SncParams(cfg["k"], n, m, q)
                scn = ChannelScenario(
                    params, tuple(eps), cfg.get("codec", "systematic"),
                    cfg.get("relay_mode", "decode_reencode"), seed, cfg.get("mixing", False),
                )
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            st = monte_carlo(scn, cfg["trials"])
            fail, res = st.failure, st.residual
            analytic = None
            if scn.codec == "systematic" and scn.relay_mode == "decode_reencode" and not scn.mixing:
                analytic = 1.0 - reliability_nc(params.k, n, q, eps)
            rows.append({
                "k": params.k, "n": n, "m": m, "q": q, "hops": len(eps),
                "eps": ";".join(f"{e:g}" for e in eps),
                "codec": scn.codec, "relay_mode": scn.relay_mode, "mixing": int(scn.mixing),
                "trials": st.trials,
                "failure": _g(fail.mean), "failure_se": _g(fail.stderr),
                "residual": _g(res.mean), "residual_se": _g(res.stderr),
                "analytic_residual": _g(analytic), "mean_ops": _g(st.mean_ops),
            })
    out = args.output or cfg.get("output")
    _emit(_header(argv, seed) + _csv(SIM_COLUMNS, rows), out)


def cmd_rate_region(args, argv):
    if not 0.0 < args.r_min < args.r_max <= 1.0:
        raise UsageError("need 0 < --r-min < --r-max <= 1")
    if args.grid < 1:
        raise UsageError("--grid must be >= 1")
    if args.diagnostic is not None:
        d = square_diagnostic(args.diagnostic, args.eta0, args.r_min, args.r_max, args.k, args.q)
        text = _header(argv, r0=f"{d.r0:.10g}", n0=d.n0, eta1=f"{d.eta1:.10g}", breakpoint=_g(d.breakpoint))
        text += _csv(("eps2", "eta2", "eta_nc", "R_nc", "r_star"), list(d.rows()))
        _emit(text, args.output)
        return
    ax = default_axis(args.grid, args.eps_max) if args.grid > 1 else [0.0]
    nc = region_grid(ax, ax, args.eta0, args.r_min, args.r_max, args.k, args.q, "nc")
    e2e = region_grid(ax, ax, args.eta0, args.r_min, args.r_max, args.k, args.q, "e2e")
    ar = area_ratio(nc, e2e)
    buf = io.StringIO()
    write_region_csv([nc, e2e], buf)
    summary = f"# area_ratio={_g(ar.ratio) or 'undefined'} nc_cells={ar.nc_cells} e2e_cells={ar.e2e_cells}\n"
    _emit(_header(argv) + buf.getvalue() + summary, args.output)


def _point_dict(p):
    return {k: getattr(p, k) for k in ("n", "r", "rho_pred", "utility", "beta_s", "beta_r", "beta_d", "feasible", "target_met")}


def cmd_optimize(args, argv):
    pt = optimize_rate(args.k, args.m, args.q, args.eps, args.rho0, args.beta0, args.method)
    rng = operative_range(args.k, args.m, args.q, args.eps, args.rho0, args.beta0, args.u_min)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "invocation": "geonc " + " ".join(argv),
        "point": _point_dict(pt),
        "operative_range": {
            "n_opt": rng.n_opt,
            "u_max": rng.u_max,
            "u_min": None if math.isnan(rng.u_min) else rng.u_min,
            "acceptable": [list(a) for a in rng.acceptable],
            "activate": rng.activate(args.u_accept),
        },
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.output)


def cmd_connectivity(args, argv):
    rows = []
    for beta0 in args.beta0:
        for rho0 in args.rho0:
            for eps in args.eps:
                c = connectivity(args.k, args.m, args.q, eps, rho0, beta0, args.h_max)
                rows.append({
                    "beta0": _g(beta0), "rho0": _g(rho0), "eps": _g(eps),
                    "h_nc": c.h_nc, "h_unc": c.h_unc, "gamma": _g(c.gamma),
                    "undefined_flag": int(c.undefined_flag),
                })
    cols = ("beta0", "rho0", "eps", "h_nc", "h_unc", "gamma", "undefined_flag")
    _emit(_header(argv) + _csv(cols, rows), args.output)


def cmd_geo(args, argv):
    store = GeoStore.load(args.store, args.alpha)
    if args.action == "ingest":
        reports = []
        for f in args.files:
            r = store.ingest(f)
            reports.append({"file": f, "accepted": r.accepted, "rejected": r.rejected, "stale": r.stale,
                            "errors": [list(e) for e in r.errors]})
        store.save(args.store)
        doc = {"schema_version": SCHEMA_VERSION, "reports": reports, "links": len(store)}
    else:
        if not args.path:
            raise UsageError("geo query needs --path")
        nodes = args.path.split(",")
        doc = {"schema_version": SCHEMA_VERSION, "path": nodes, "eps": list(store.query_path(nodes))}
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.output)


def _load_script(path):
    # JSON list of events (strings or {"event": ..., "records": [...]}) or one event per line
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        items = json.loads(text)
    except json.JSONDecodeError:
        items = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    out = []
    for it in items:
        if isinstance(it, str):
            it = {"event": it}
        try:
            ev = Event(it["event"])
            recs = [GeoRecord.from_row({k: str(v) for k, v in r.items()}) for r in it.get("records", [])]
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad lifecycle script entry {it!r}: {exc}") from None
        out.append((ev, recs))
    return out


def cmd_lifecycle(args, argv):
    script = _load_script(args.script)
    store = GeoStore.load(args.store) if args.store else GeoStore()
    nodes = tuple(args.path.split(",")) if args.path else ()
    fn = CodingFunction(store, nodes, args.k, args.m, args.q, args.rho0, args.beta0)
    lines = [_header(argv).rstrip("\n")]
    status = EXIT_OK
    for ev, recs in script:
        try:
            entry = fn.handle(ev, recs)
        except InvalidTransition as exc:
            entry = {"from": fn.state.value, "event": ev.value, "error": str(exc)}
            status = EXIT_USAGE if args.strict else status
        lines.append(json.dumps(entry, sort_keys=True))
    lines.append(json.dumps({"final_state": fn.state.value}))
    _emit("\n".join(lines) + "\n", args.output)
    return status


def build_parser():
    p = argparse.ArgumentParser(prog="geonc", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"geonc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def out(sp):
        sp.add_argument("--output", "-o", help="output file (default stdout)")

    def code(sp, m_default=100):
        sp.add_argument("--k", type=int, required=True, help="source packets per generation")
        sp.add_argument("--q", type=int, default=8, help="field exponent, GF(2^q)")
        sp.add_argument("--m", type=int, default=m_default, help="symbols per packet")

    a = sub.add_parser("analyze", help="closed-form residual and reliability curves")
    code(a)
    a.add_argument("--eps", type=_floats, required=True, help="per-hop erasure rates, comma separated")
    a.add_argument("--n-range", type=_n_range, help="block lengths A:B (default k:k+10)")
    a.add_argument("--rho0", type=float, default=0.8)
    out(a)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="Monte Carlo sweep from a ScenarioConfig JSON file")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, help="overrides the config seed and NCF_SEED")
    out(s)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("rate-region", help="two-hop rate regions, hop-by-hop vs end-to-end")
    r.add_argument("--eta0", type=float, default=0.05)
    r.add_argument("--r-min", type=float, default=0.5)
    r.add_argument("--r-max", type=float, default=1.0)
    r.add_argument("--grid", type=int, default=61, help="points per axis")
    r.add_argument("--eps-max", type=float, default=0.6)
    r.add_argument("--k", type=int, default=50)
    r.add_argument("--q", type=int, default=8)
    r.add_argument("--diagnostic", type=float, metavar="EPS1", help="emit the fixed-rate sweep over eps2 instead")
    out(r)
    r.set_defaults(func=cmd_rate_region)

    o = sub.add_parser("optimize", help="best block length for a path under a budget")
    code(o)
    o.add_argument("--eps", type=_floats, required=True, help="per-hop erasure rates")
    o.add_argument("--rho0", type=float, default=0.8)
    o.add_argument("--beta0", type=float, required=True, help="per-node operation budget")
    o.add_argument("--method", choices=("auto", "exhaustive", "ternary"), default="auto")
    o.add_argument("--u-min", type=float, help="utility floor override for the operative range")
    o.add_argument("--u-accept", type=float, help="activation threshold on the maximal utility")
    out(o)
    o.set_defaults(func=cmd_optimize)

    c = sub.add_parser("connectivity", help="hop horizons with and without coding")
    code(c)
    c.add_argument("--eps", type=_floats, required=True, help="uniform per-hop erasure rates to sweep")
    c.add_argument("--rho0", type=_floats, default=[0.8])
    c.add_argument("--beta0", type=_floats, required=True)
    c.add_argument("--h-max", type=int, default=10000)
    out(c)
    c.set_defaults(func=cmd_connectivity)

    g = sub.add_parser("geo", help="geo-tagged link statistics store")
    g.add_argument("action", choices=("ingest", "query"))
    g.add_argument("files", nargs="*", help="GeoRecord CSV files to ingest")
    g.add_argument("--store", required=True, help="store CSV path")
    g.add_argument("--path", help="comma-separated node sequence for query")
    g.add_argument("--alpha", type=float, default=0.2, help="moving-average weight")
    out(g)
    g.set_defaults(func=cmd_geo)

    lc = sub.add_parser("lifecycle", help="replay a lifecycle event script")
    lc.add_argument("--script", required=True)
    lc.add_argument("--store", help="GeoRecord store used for path queries")
    lc.add_argument("--path", help="comma-separated node sequence served")
    lc.add_argument("--k", type=int, default=50)
    lc.add_argument("--m", type=int, default=100)
    lc.add_argument("--q", type=int, default=8)
    lc.add_argument("--rho0", type=float, default=0.8)
    lc.add_argument("--beta0", type=float, default=BETA0_LOW)
    lc.add_argument("--strict", action="store_true", help="exit 2 on an invalid transition")
    out(lc)
    lc.set_defaults(func=cmd_lifecycle)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args, argv) or EXIT_OK
    except InfeasibleBudget as exc:
        print(f"geonc: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, ConfigError, DomainError, MissingLink, OSError, ValueError) as exc:
        print(f"geonc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
