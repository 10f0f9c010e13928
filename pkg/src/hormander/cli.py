"""Command line front end.

Exit codes: 0 when every gate passes, 1 on a gate failure, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import harness, kernel, maximal, weights
from .kernel import DyadicKernel, HormanderQuery
from .sampled import CsvFormatError, DomainError, GridFunction, Interval, generate, load_csv, save_csv
from .seqnorm import from_dict as seqnorm_from_dict
from .vvop import ConfigurationError, OperatorSpec, apply_commutator, s_norm
from .young import from_dict as young_from_dict, luxemburg_average

EXIT_OK, EXIT_GATE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _pair(text: str, kind):
    try:
        a, b = text.split(",")
        return kind(a), kind(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}") from None


def _grid(text):
    L, N = _pair(text, float)
    if N != int(N):
        raise argparse.ArgumentTypeError("N must be an integer")
    return L, int(N)


def _levels(text):
    return _pair(text, int)


def _json_arg(text: str):
    p = Path(text)
    src = p.read_text() if p.suffix == ".json" and p.exists() else text
    try:
        return json.loads(src)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not JSON: {exc}") from None


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def default_config_path(suite: str) -> Path:
    return Path(str(resources.files("hormander") / "data" / "configs" / f"{suite}.json"))


# ---------------------------------------------------------------------------
# output


def _csv_text(rows: list[dict]) -> str:
    cols = []
    for r in rows:
        for k, v in r.items():
            if k not in cols and (v is None or isinstance(v, (str, int, float, bool))):
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in cols})
    return buf.getvalue()


def _emit(args, payload, rows=None, stem="result"):
    """JSON (or CSV rows) to --out/<stem>.<ext>, or stdout."""
    if args.format == "csv":
        text = _csv_text(rows if rows is not None else [payload])
    else:
        text = json.dumps(payload, sort_keys=True, indent=1, default=_json_default) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.{args.format}").write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def _emit_function(args, f: GridFunction, stem: str):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_csv(f, out / f"{stem}.csv")
    else:
        sys.stdout.write("x,value\n")
        for xi, vi in zip(f.x, f.samples):
            sys.stdout.write(f"{float(xi)!r},{float(vi)!r}\n")


def _load_input(args) -> GridFunction:
    if args.input:
        return load_csv(args.input)
    if args.generate:
        L, N = args.grid or (2.0**10, 2**16)
        spec = args.generate
        return generate(spec["kind"], spec.get("params"), L, N)
    raise UsageError("give an input CSV or --generate")


# ---------------------------------------------------------------------------
# subcommands


def cmd_young(args) -> int:
    phi = young_from_dict(args.phi)
    if args.op == "complement":
        phi = phi.complementary()
        rows = [{"t": t, "value": float(phi(t))} for t in args.t] if args.t else []
        _emit(args, {"function": phi.to_dict(), "values": rows}, rows, "young")
        return EXIT_OK
    fn = phi if args.op == "evaluate" else phi.inverse
    rows = [{"t": t, "value": float(fn(t))} for t in args.t]
    _emit(args, {"function": phi.to_dict(), "op": args.op, "values": rows}, rows, "young")
    return EXIT_OK


def cmd_lux(args) -> int:
    f = _load_input(args)
    phi = young_from_dict(args.phi)
    B = Interval.from_endpoints(*args.interval) if args.interval else Interval(0.0, f.L)
    val = luxemburg_average(f, B, phi)
    _emit(args, {"phi": phi.to_dict(), "interval": [B.left, B.right], "value": val}, stem="lux")
    return EXIT_OK


def cmd_maximal(args) -> int:
    f = _load_input(args)
    fam = maximal.FINE if args.family == "fine" else maximal.COARSE
    kind = args.kind
    if kind == "hl":
        out = maximal.hl_maximal(f, fam)
    elif kind == "iterated":
        out = maximal.iterated_maximal(f, args.k, fam)
    elif kind == "orlicz":
        out = maximal.orlicz_maximal(f, young_from_dict(args.phi), fam)
    elif kind == "fractional":
        out = maximal.fractional_orlicz_maximal(f, young_from_dict(args.phi), args.alpha, fam)
    elif kind == "sharp":
        out = maximal.sharp_maximal(f, fam)
    else:
        out = maximal.sharp_maximal_delta(f, args.delta, fam)
    _emit_function(args, out, f"maximal_{kind}")
    return EXIT_OK


def cmd_weights(args) -> int:
    w = _load_input(args)
    c = args.constant
    if c == "ap":
        rep = weights.ap_constant(w, args.p).to_dict()
    elif c == "a1":
        rep = weights.a1_constant(w).to_dict()
    elif c == "apq":
        rep = weights.apq_constant(w, args.p, args.q).to_dict()
    else:
        rep = weights.bmo_norm(w).to_dict()
    rep["kind"] = c
    _emit(args, rep, stem=f"weights_{c}")
    return EXIT_OK


def cmd_hormander(args) -> int:
    spec = args.query
    what = spec.get("query", "dagger")
    body = {k: v for k, v in spec.items() if k not in ("query", "levels", "alpha", "s_values")}
    if what in ("dagger", "plain"):
        q = HormanderQuery.from_dict({**body, "flavor": what})
        lmin, lmax = args.levels or spec.get("levels") or (None, None)
        kern = kernel.covering_kernel(q.R, q.m_max) if lmin is None else DyadicKernel(lmin, lmax)
        fn = kernel.dagger_sum if what == "dagger" else kernel.plain_sum
        res = fn(kern, q).to_dict()
    elif what == "prop3":
        cf = kernel.prop3_closed_form(
            young_from_dict(spec["phi"]), int(spec.get("k", 0)),
            seqnorm_from_dict(spec.get("X", {"variant": "lp", "p": 2})), int(spec.get("m_max", 80)),
        )
        res = cf.to_dict() if hasattr(cf, "to_dict") else vars(cf)
    elif what == "s-alpha":
        lmin, lmax = args.levels or spec.get("levels") or (-4, 24)
        rep = kernel.s_alpha_check(
            DyadicKernel(lmin, lmax, float(spec.get("alpha", 0.5))), young_from_dict(spec["phi"]),
            seqnorm_from_dict(spec.get("X", {"variant": "lp", "p": 2})), spec.get("s_values", [2.0**j for j in range(11)]),
        )
        res = rep.to_dict() if hasattr(rep, "to_dict") else vars(rep)
    else:
        raise UsageError(f"unknown query {what!r} (dagger, plain, prop3, s-alpha)")
    _emit(args, {"query": what, "result": res}, stem=f"hormander_{what}")
    return EXIT_OK


def cmd_operator(args) -> int:
    f = _load_input(args)
    lmin, lmax = args.levels or (-4, 14)
    b = None
    if args.k >= 1:
        if not args.symbol:
            raise UsageError("--symbol is required when k >= 1")
        b = generate(args.symbol["kind"], args.symbol.get("params"), f.L, f.N)
    spec = OperatorSpec(DyadicKernel(lmin, lmax, args.alpha), seqnorm_from_dict(args.X), args.k, b, args.symbol)
    if args.norm:
        _emit_function(args, s_norm(spec, f), "operator_norm")
        return EXIT_OK
    F = apply_commutator(spec, f)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        F.save_csv(out / "operator_levels.csv")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["x"] + [f"level_{l}" for l in F.levels])
        for i, xi in enumerate(F.grid.x):
            w.writerow([repr(float(xi))] + [repr(float(v)) for v in F.data[:, i]])
    return EXIT_OK


def _suite_config(args) -> harness.ExperimentConfig:
    name = args.name
    path = args.config
    if path is None and name is not None and default_config_path(name).exists():
        path = default_config_path(name)
    cfg = harness.ExperimentConfig.load(path) if path else harness.ExperimentConfig(suite=name or "coifman")
    d = cfg.to_dict()
    if name is not None:
        d["suite"] = name
    if args.seed is not None:
        d["seed"] = args.seed
    if args.grid:
        d["L"], d["N"] = args.grid
    if args.levels:
        d["l_min"], d["l_max"] = args.levels
    return harness.ExperimentConfig.from_dict(d)


def cmd_suite(args) -> int:
    cfg = _suite_config(args)
    store = None if args.no_regression else harness.RegressionStore(args.regression)
    rep = harness.run_suite(cfg, store, record=args.record)
    if args.record and store is not None:
        store.save()
    d = rep.to_dict()
    _emit(args, d, d["cases"], stem=f"report_{rep.suite}")
    for gate, ok in sorted(rep.gates.items()):
        sys.stderr.write(f"{rep.suite}: {gate}: {'n/a' if ok is None else ('pass' if ok else 'FAIL')}\n")
    return EXIT_OK if rep.passed else EXIT_GATE


def cmd_report(args) -> int:
    merged = {"reports": [], "rows": []}
    for path in args.reports:
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: not JSON ({exc})") from None
        merged["reports"].append({k: d.get(k) for k in ("suite", "config_hash", "gates", "passed")})
        for row in d.get("cases", []):
            merged["rows"].append({"source": Path(path).name, "suite": d.get("suite"), **row})
    _emit(args, merged, merged["rows"], stem="merged")
    ok = all(r.get("passed", True) is not False for r in merged["reports"])
    return EXIT_OK if ok else EXIT_GATE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON or TOML experiment config")
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, help="u64 seed")
    common.add_argument("--grid", type=_grid, help="L,N")
    common.add_argument("--levels", type=_levels, help="lmin,lmax")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("input", nargs="?", help="CSV with header x,value")
    data.add_argument("--generate", type=_json_arg, help='battery function, e.g. {"kind": "bump"}')

    parser = argparse.ArgumentParser(prog="hormander", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("young", parents=[common], help="evaluate, invert or complement a Young function")
    p.add_argument("op", choices=("evaluate", "invert", "complement"))
    p.add_argument("--phi", type=_json_arg, required=True)
    p.add_argument("--t", type=_floats, default=[])
    p.set_defaults(run=cmd_young)

    p = sub.add_parser("lux", parents=[common, data], help="Luxemburg average of a CSV function")
    p.add_argument("--phi", type=_json_arg, required=True)
    p.add_argument("--interval", type=lambda s: _pair(s, float), help="a,b (default: whole grid)")
    p.set_defaults(run=cmd_lux)

    p = sub.add_parser("maximal", parents=[common, data], help="run a maximal operator")
    p.add_argument("--kind", choices=("hl", "iterated", "orlicz", "fractional", "sharp", "sharp-delta"), default="hl")
    p.add_argument("--phi", type=_json_arg)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--delta", type=float, default=1.0 / 3.0)
    p.add_argument("--family", choices=("fine", "coarse"), default="coarse")
    p.set_defaults(run=cmd_maximal)

    p = sub.add_parser("weights", parents=[common, data], help="A_p / A_1 / A_pq constants and BMO norms")
    p.add_argument("--constant", choices=("ap", "a1", "apq", "bmo"), default="ap")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=2.0)
    p.set_defaults(run=cmd_weights)

    p = sub.add_parser("hormander", parents=[common], help="dagger / plain / prop3 / s-alpha queries")
    p.add_argument("query", type=_json_arg, help="JSON file or literal with a 'query' key")
    p.set_defaults(run=cmd_hormander)

    p = sub.add_parser("operator", parents=[common, data], help="apply T or its commutator")
    p.add_argument("--X", type=_json_arg, default={"variant": "lp", "p": 2})
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--symbol", type=_json_arg)
    p.add_argument("--norm", action="store_true", help="emit x -> ||Tf(x)||_X instead of the levels")
    p.set_defaults(run=cmd_operator)

    p = sub.add_parser("suite", parents=[common], help="run a named experiment")
    p.add_argument("name", nargs="?", choices=sorted(harness.SUITES))
    p.add_argument("--record", action="store_true", help="store constants not yet locked")
    p.add_argument("--regression", type=Path, help="regression store (default: the packaged one)")
    p.add_argument("--no-regression", action="store_true")
    p.set_defaults(run=cmd_suite)

    p = sub.add_parser("report", parents=[common], help="merge JSON reports, emit CSV rows")
    p.add_argument("reports", nargs="+")
    p.set_defaults(run=cmd_report)
    return parser


# options whose values may start with a minus sign ("--levels -4,14")
_SIGNED = ("--levels", "--interval", "--grid", "--t")


def _join_signed(argv):
    out = []
    it = iter(argv)
    for a in it:
        if a in _SIGNED:
            v = next(it, None)
            out.append(a if v is None else f"{a}={v}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_signed(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.run(args)
    except (UsageError, ConfigurationError, DomainError, CsvFormatError, FileNotFoundError, KeyError, ValueError) as exc:
        sys.stderr.write(f"hormander {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
