"""Command-line front end: ``afrelay {eval,sweep,validate,slope,coefficients}``.

All powers are given in dB and converted with value_db = 10 log10(linear);
``--rhoi-db -inf`` switches the interferer off. Exit codes: 0 success, 1
validation failure or numeric failure, 2 usage error.

A flat JSON file passed with ``--config`` supplies defaults for any option
(keys are the option names with dashes replaced by underscores); options on
the command line override it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from itertools import product

from afrelay import analytic
from afrelay.analytic import UnsupportedCaseError
from afrelay.model import AsymptoticQuery, Scheme, SystemConfig, Topology
from afrelay.montecarlo import diversity_slope, estimate_outage
from afrelay.quadrature import QuadratureError

CSV_COLUMNS = (
    "topology", "scheme", "ici", "n_antennas", "rho1_db", "rho2_db", "rhoi_db",
    "gamma_th_db", "method", "probability", "numeric_error_or_ci", "n_samples", "seed",
)
METHODS = ("exact", "lower", "asymptotic", "mc")
SCHEMES = ("fixed", "variable", "variable-ici")
TOPOLOGIES = tuple(t.value for t in Topology)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def db_to_linear(db: float) -> float:
    return 0.0 if db == -math.inf else 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return -math.inf if x == 0 else 10.0 * math.log10(x)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def parse_grid(text: str) -> list[float]:
    """'0:40:10' (inclusive start:stop:step) or a comma list '30,40,50'."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(count)]
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError(f"grid must be non-empty and strictly increasing: {text!r}")
    return vals


def parse_methods(text: str) -> list[str]:
    vals = [t.strip() for t in str(text).split(",") if t.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("at least one method is required")
    bad = [v for v in vals if v not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {METHODS}")
    return vals


def _db(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a dB value: {text!r}") from None
    if math.isnan(val) or val == math.inf:
        raise argparse.ArgumentTypeError(f"not a finite dB value: {text!r}")
    return val


def make_config(topology: str, scheme: str, n: int, rho1_db: float, rho2_db: float,
                rhoi_db: float, gamma_th_db: float) -> SystemConfig:
    """Build a config from dB quantities; raises UsageError on invalid input."""
    ici = scheme == "variable-ici"
    if ici and topology != Topology.ONE_N_ONE.value:
        raise UsageError("scheme 'variable-ici' exists only for topology 1n1")
    for name, val in (("rho1-db", rho1_db), ("rho2-db", rho2_db), ("gamma-th-db", gamma_th_db)):
        if not math.isfinite(val):
            raise UsageError(f"--{name} must be finite")
    try:
        return SystemConfig(
            topology=Topology(topology),
            scheme=Scheme.VARIABLE if ici else Scheme(scheme),
            n_antennas=n,
            rho1=db_to_linear(rho1_db),
            rho2=db_to_linear(rho2_db),
            rho_i=db_to_linear(rhoi_db),
            gamma_th=db_to_linear(gamma_th_db),
            ici_at_relay=ici,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def scheme_token(cfg: SystemConfig) -> str:
    return "variable-ici" if cfg.ici_at_relay else cfg.scheme.value


@dataclass(frozen=True)
class Row:
    cfg: SystemConfig
    rho1_db: float
    rho2_db: float
    rhoi_db: float
    gamma_th_db: float
    method: str
    probability: float
    error: float
    n_samples: int | None = None
    seed: int | None = None

    def csv_fields(self) -> list[str]:
        return [
            self.cfg.topology.value, self.cfg.scheme.value,
            "true" if self.cfg.ici_at_relay else "false", str(self.cfg.n_antennas),
            _fmt(self.rho1_db), _fmt(self.rho2_db), _fmt(self.rhoi_db), _fmt(self.gamma_th_db),
            self.method, _fmt(self.probability), _fmt(self.error),
            "" if self.n_samples is None else str(self.n_samples),
            "" if self.seed is None else str(self.seed),
        ]


def evaluate(cfg: SystemConfig, method: str, mu: float, args) -> tuple[float, float, int | None, int | None]:
    """(probability, error or CI half-width, n_samples, seed) for one method."""
    if method == "exact":
        v = analytic.outage_exact(cfg, precision=args.precision)
        return v.probability, v.numeric_error, None, None
    if method == "lower":
        v = analytic.outage_lower_variable(cfg, precision=args.precision)
        return v.probability, v.numeric_error, None, None
    if method == "asymptotic":
        v = analytic.outage_high_snr(cfg, AsymptoticQuery(mu, cfg.rho1))
        return v.probability, v.numeric_error, None, None
    est = estimate_outage(cfg, n_samples=args.mc_samples, seed=args.seed,
                          sampler=args.sampler, workers=args.workers)
    return est.p_hat, est.ci_half_width_95, est.n_samples, est.seed


# --------------------------------------------------------------------------
# subcommands


def cmd_eval(args) -> int:
    methods = [m for m in METHODS if getattr(args, m)]
    if not methods:
        raise UsageError("select at least one of --exact, --lower, --asymptotic, --mc")
    scheme = "variable-ici" if args.ici else args.scheme
    if args.ici and args.scheme != "variable":
        raise UsageError("--ici needs --scheme variable")
    cfg = make_config(args.topology, scheme, args.n, args.rho1_db, args.rho2_db,
                      args.rhoi_db, args.gamma_th_db)
    mu = args.mu if args.mu is not None else cfg.rho2 / cfg.rho1
    rows = [(m, *evaluate(cfg, m, mu, args)) for m in methods]
    print(f"{cfg.label}  rho1={args.rho1_db:g} dB  rho2={args.rho2_db:g} dB  "
          f"rhoI={args.rhoi_db:g} dB  gamma_th={args.gamma_th_db:g} dB")
    print(f"{'method':<12}{'probability':>24}{'error/ci95':>14}")
    for m, p, err, n, _ in rows:
        note = f"  (n={n}, seed={args.seed})" if n is not None else ""
        print(f"{m:<12}{p:>24.15g}{err:>14.3g}{note}")
    return EXIT_OK


def _systems(args):
    """(topology, scheme token) pairs requested, dropping impossible ones."""
    for top, sch in product(args.topology, args.scheme):
        if sch == "variable-ici" and top != Topology.ONE_N_ONE.value:
            continue
        yield top, sch


def sweep_rows(args):
    mu_db = linear_to_db(args.mu)
    skipped = set()
    for (top, sch), n in product(list(_systems(args)), args.n):
        for r1 in args.rho1_grid_db:
            r2 = r1 + mu_db
            cfg = make_config(top, sch, n, r1, r2, args.rhoi_db, args.gamma_th_db)
            for m in args.methods:
                try:
                    p, err, ns, seed = evaluate(cfg, m, args.mu, args)
                except UnsupportedCaseError as exc:
                    if (cfg.label, m) not in skipped:
                        skipped.add((cfg.label, m))
                        print(f"skip {cfg.label} {m}: {exc}", file=sys.stderr)
                    continue
                yield Row(cfg, r1, r2, args.rhoi_db, args.gamma_th_db, m, p, err, ns, seed)


def write_csv(rows, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())


def cmd_sweep(args) -> int:
    # render fully before touching the output so a failure leaves no partial file
    buf = io.StringIO()
    write_csv(sweep_rows(args), buf)
    if args.output == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


def cmd_validate(args) -> int:
    results, failures = [], []
    exact_by_point: dict = {}
    for (top, sch), n in product(list(_systems(args)), args.n):
        for r in args.rho_grid_db:
            cfg = make_config(top, sch, n, r, r, args.rhoi_db, args.gamma_th_db)
            try:
                v = analytic.outage_exact(cfg, precision=args.precision)
                est = estimate_outage(cfg, n_samples=args.mc_samples, seed=args.seed,
                                      sampler=args.sampler, workers=args.workers)
            except (QuadratureError, FloatingPointError, UnsupportedCaseError) as exc:
                failures.append(f"{cfg.label} rho={r:g} dB: {exc}")
                continue
            sigma = est.sigma(v.probability)
            z = abs(v.probability - est.p_hat) / sigma if sigma > 0 else (
                0.0 if v.probability == est.p_hat else math.inf)
            results.append((z, cfg, r, v.probability, est))
            exact_by_point.setdefault((sch.replace("-ici", ""), n, r), []).append((cfg, v.probability))

    results.sort(key=lambda t: -t[0])
    bad = [t for t in results if t[0] > args.k]
    print(f"analytic vs Monte Carlo: {len(results)} configs, k = {args.k:g} sigma, "
          f"{args.mc_samples} samples, seed {args.seed}")
    print(f"{'system':<24}{'rho dB':>8}{'exact':>16}{'mc':>14}{'z':>8}")
    for z, cfg, r, p, est in results[: max(args.worst, len(bad))]:
        flag = "  FAIL" if z > args.k else ""
        print(f"{cfg.label:<24}{r:>8g}{p:>16.9g}{est.p_hat:>14.7g}{z:>8.2f}{flag}")

    collapse = [(key, pts) for key, pts in exact_by_point.items() if key[1] == 1 and len(pts) > 1]
    if collapse:
        print("N=1 cross-topology agreement:")
        for (sch, _, r), pts in sorted(collapse):
            ref = pts[0][1]
            rel = max(abs(p - ref) / ref for _, p in pts)
            mark = "exact" if rel <= 1e-10 else "MISMATCH"
            names = ",".join(c.topology.value for c, _ in pts)
            print(f"  {sch:<9} rho={r:g} dB [{names}] max rel diff {rel:.2e} {mark}")
            if mark != "exact":
                failures.append(f"N=1 collapse mismatch {sch} rho={r:g} dB ({rel:.2e})")
    for f in failures:
        print(f"error: {f}")
    ok = not bad and not failures
    print("PASS" if ok else f"FAIL ({len(bad)} outside {args.k:g} sigma, {len(failures)} errors)")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_slope(args) -> int:
    rhos = args.rho1_grid_db
    if len(rhos) < 2:
        raise UsageError("need at least two rho1 points")
    mu_db = linear_to_db(args.mu)
    print(f"{'system':<24}{'method':<12}{'slope':>10}")
    for (top, sch), n in product(list(_systems(args)), args.n):
        for m in args.methods:
            pts = []
            try:
                for r1 in rhos:
                    cfg = make_config(top, sch, n, r1, r1 + mu_db, args.rhoi_db, args.gamma_th_db)
                    pts.append((cfg.rho1, evaluate(cfg, m, args.mu, args)[0]))
            except UnsupportedCaseError as exc:
                print(f"skip {top}/{sch}/N={n} {m}: {exc}", file=sys.stderr)
                continue
            label = make_config(top, sch, n, rhos[0], rhos[0], args.rhoi_db, args.gamma_th_db).label
            print(f"{label:<24}{m:<12}{diversity_slope(pts):>10.4f}")
    return EXIT_OK


def cmd_coefficients(args) -> int:
    rho_i = db_to_linear(args.rhoi_db)
    print(f"{'N':>4}{'mu':>10}{'a_N11':>14}{'a_11N':>14}{'a_1N1':>14}")
    for n in args.n:
        a = analytic.coefficient_report(n, args.mu, rho_i)
        print(f"{n:>4}{args.mu:>10g}" + "".join(f"{x:>14.6g}" for x in a))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _positive_int(text) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {val}")
    return val


def _positive_float(text) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(val) and val > 0):
        raise argparse.ArgumentTypeError(f"must be finite and > 0, got {text!r}")
    return val


def _add_common(p, multi: bool):
    nargs = "+" if multi else None
    p.add_argument("--topology", choices=TOPOLOGIES, nargs=nargs, required=True)
    p.add_argument("--scheme", choices=SCHEMES if multi else SCHEMES[:2], nargs=nargs, required=True)
    p.add_argument("--n", type=_positive_int, nargs=nargs, required=True, help="antenna count N")
    p.add_argument("--rhoi-db", type=_db, default=0.0, help="interference-to-noise ratio (dB, -inf = off)")
    p.add_argument("--gamma-th-db", type=_db, default=0.0, help="SINR threshold (dB)")
    p.add_argument("--precision", choices=("auto", "double", "extended"), default="auto")
    _add_mc(p)


def _add_mc(p, samples: int = 10**7):
    p.add_argument("--mc-samples", type=_positive_int, default=samples)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sampler", choices=("vector", "equivalent"), default="vector")
    p.add_argument("--workers", type=_positive_int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="afrelay", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat JSON file of option defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="outage at one operating point")
    _add_common(p, multi=False)
    p.add_argument("--ici", action="store_true", help="1-N-1 variable gain with interferer CSI")
    p.add_argument("--rho1-db", type=_db, required=True)
    p.add_argument("--rho2-db", type=_db, required=True)
    p.add_argument("--mu", type=_positive_float, help="rho2/rho1 for --asymptotic (default: from the config)")
    for m in METHODS:
        p.add_argument(f"--{m}", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="CSV of outage over a rho1 grid with rho2 = mu rho1")
    _add_common(p, multi=True)
    p.add_argument("--rho1-grid-db", type=parse_grid, default=parse_grid("0:40:5"))
    p.add_argument("--mu", type=_positive_float, default=1.0)
    p.add_argument("--methods", type=parse_methods, default=["exact"])
    p.add_argument("--output", default="-", help="CSV path, '-' for stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="analytic vs Monte Carlo over a grid")
    p.add_argument("--topology", choices=TOPOLOGIES, nargs="+", default=list(TOPOLOGIES))
    p.add_argument("--scheme", choices=SCHEMES, nargs="+", default=list(SCHEMES))
    p.add_argument("--n", type=_positive_int, nargs="+", default=[1, 2, 4])
    p.add_argument("--rho-grid-db", type=parse_grid, default=parse_grid("0,10,20"),
                   help="rho1 = rho2 values (dB)")
    p.add_argument("--rhoi-db", type=_db, default=0.0)
    p.add_argument("--gamma-th-db", type=_db, default=0.0)
    p.add_argument("--k", type=float, default=4.0, help="allowed deviation in binomial sigmas")
    p.add_argument("--worst", type=int, default=10, help="rows listed in the report")
    p.add_argument("--precision", choices=("auto", "double", "extended"), default="auto")
    _add_mc(p, samples=10**6)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("slope", help="diversity order from a high-SNR grid")
    _add_common(p, multi=True)
    p.add_argument("--rho1-grid-db", type=parse_grid, default=parse_grid("30,40,50"))
    p.add_argument("--mu", type=_positive_float, default=1.0)
    p.add_argument("--methods", type=parse_methods, default=["exact"])
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("coefficients", help="high-SNR fixed-gain coefficients a_N11, a_11N, a_1N1")
    p.add_argument("--n", type=_positive_int, nargs="+", default=[2])
    p.add_argument("--mu", type=_positive_float, default=1.0)
    p.add_argument("--rhoi-db", type=_db, default=0.0)
    p.set_defaults(func=cmd_coefficients)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config) as fh:
            values = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(values, dict):
        raise UsageError("config file must hold a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((tok for tok in argv if tok in subparsers.choices), None)
    if command is None:
        return
    sp = subparsers.choices[command]
    actions = {a.dest: a for a in sp._actions}
    unknown = sorted(k for k in values if k.replace("-", "_") not in actions)
    if unknown:
        raise UsageError(f"config keys not understood by '{command}': {unknown}")
    defaults = {}
    for key, val in values.items():
        key = key.replace("-", "_")
        act = actions[key]
        if act.nargs == "+" and not isinstance(val, list):
            val = [val]
        try:
            if act.type is not None:
                val = [act.type(v) for v in val] if isinstance(val, list) else act.type(val)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"config {key}: {exc}") from None
        for item in val if isinstance(val, list) else [val]:
            if act.choices is not None and item not in act.choices:
                raise UsageError(f"config {key}: {item!r} not in {list(act.choices)}")
        defaults[key] = val
        # a value from the file satisfies a required option
        act.required = False
    sp.set_defaults(**defaults)


def _glue_negative_values(argv: list[str]) -> list[str]:
    # argparse reads '-inf' as an option name; attach it to the preceding flag
    out: list[str] = []
    for tok in argv:
        if out and tok.lower() in ("-inf", "-infinity") and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv: list[str] | None = None) -> int:
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, argparse.ArgumentTypeError) as exc:
        print(f"afrelay: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UnsupportedCaseError, QuadratureError, FloatingPointError) as exc:
        print(f"afrelay: numeric failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"afrelay: I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
