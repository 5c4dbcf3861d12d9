"""Command-line front end: ``riscap eval | sweep | pdf | claims``.

Exit codes: 0 ok, 2 usage error, 3 numerical failure, 4 claim check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import capacity
from .capacity import CapacityResult, Method, QuadratureError
from .channel import SystemConfig, fit_params, pdf_a, pdf_a_single
from .montecarlo import McConfig, estimate_ec, estimate_pdf
from .specfun import ConvergenceError

SWEEP_SCHEMA = "riscap-sweep/1"
PDF_SCHEMA = "riscap-pdf/1"
SWEEP_COLUMNS = ("n", "snr_db", "method", "ec_bits_s_hz", "err_estimate", "fallback", "status")
EVAL_COLUMNS = SWEEP_COLUMNS[:-1]

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_CLAIMS = 4

METHOD_NAMES = tuple(m.value for m in Method)
DEFAULT_N = (1, 2, 10, 25, 50, 100)
DEFAULT_SNR_RANGE = "-10:30:1"
DEFAULT_SWEEP_METHODS = ("closed", "high-snr", "high-snr-n")

_NUMERICAL_ERRORS = (ConvergenceError, QuadratureError, ArithmeticError)

# Operation named in failure messages, per method.
_OPERATION = {
    Method.CLOSED_FORM: "ec_closed_form",
    Method.HIGH_SNR: "ec_high_snr",
    Method.HIGH_SNR_HIGH_N: "ec_high_snr_high_n",
    Method.SINGLE_RU: "ec_single_ru",
    Method.QUADRATURE: "ec_quadrature",
    Method.MONTE_CARLO: "estimate_ec",
}

DEFAULTS = {
    "n": None,
    "snr_db": None,
    "snr_db_range": None,
    "method": None,
    "mc_samples": 1_000_000,
    "seed": 0,
    "workers": 1,
    "format": "csv",
    "bins": 200,
    "exact_density": False,
}


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    return f"{x:.12g}"


def parse_range(spec: str) -> list[float]:
    """``lo:hi:step`` inclusive of ``hi`` (within rounding)."""
    try:
        lo, hi, step = (float(p) for p in spec.split(":"))
    except ValueError:
        raise UsageError(f"bad range {spec!r}; expected lo:hi:step") from None
    if step <= 0:
        raise UsageError(f"range step must be > 0 in {spec!r}")
    count = math.floor((hi - lo) / step + 1e-9) + 1
    return [round(lo + i * step, 10) for i in range(max(count, 0))]


def evaluate(cfg: SystemConfig, method: Method, mc: McConfig | None = None,
             exact_density: bool = False) -> CapacityResult:
    if method is Method.MONTE_CARLO:
        return estimate_ec(cfg, mc or McConfig()).as_capacity()
    return capacity.evaluate(cfg, method, exact_single=exact_density)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    n_list: tuple[int, ...]
    snr_db_list: tuple[float, ...]
    methods: tuple[str, ...]
    output_format: str = "csv"
    mc: McConfig | None = field(default=None)

    def __post_init__(self):
        if not self.methods:
            raise UsageError("select at least one method")
        unknown = set(self.methods) - set(METHOD_NAMES)
        if unknown:
            raise UsageError(f"unknown method(s): {', '.join(sorted(unknown))}")
        if not self.n_list:
            raise UsageError("empty N list")
        if any(n < 1 for n in self.n_list):
            raise UsageError("N values must be positive integers")
        if not self.snr_db_list:
            raise UsageError("empty SNR list")
        if "single-ru" in self.methods and set(self.n_list) != {1}:
            raise UsageError("single-ru requires every N to be 1")
        if self.output_format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.output_format!r}")

    def provenance(self) -> dict:
        # workers is deliberately left out: it never changes the numbers.
        out = {
            "n": list(self.n_list),
            "snr_db": list(self.snr_db_list),
            "methods": sorted(self.methods),
        }
        if self.mc is not None and "mc" in self.methods:
            out["mc_samples"] = self.mc.samples
            out["seed"] = self.mc.seed
        return out


def _sweep_cell(args):
    n, snr, method_name, mc = args
    method = Method(method_name)
    row = {"n": n, "snr_db": snr, "method": method_name}
    try:
        res = evaluate(SystemConfig(n, snr), method, mc)
    except (*_NUMERICAL_ERRORS, ValueError) as exc:
        row.update(ec_bits_s_hz=None, err_estimate=None, fallback=None,
                   status=f"error: {_OPERATION[method]}: {exc}")
        return row
    row.update(ec_bits_s_hz=res.value, err_estimate=res.err_estimate,
               fallback=res.fallback_used, status="ok")
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    cells = [
        (n, snr, m, spec.mc)
        for n in sorted(set(spec.n_list))
        for snr in sorted(set(spec.snr_db_list))
        for m in sorted(set(spec.methods))
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_cell, cells))
    return [_sweep_cell(c) for c in cells]


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not isinstance(v, bool):
        return float(fmt(v))
    return v


def render_rows(rows, columns, fmt_name, schema, provenance) -> str:
    if fmt_name == "json":
        doc = {
            "schema": schema,
            "config": provenance,
            "rows": [{k: _json_value(r[k]) for k in columns} for r in rows],
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# {schema} {json.dumps(provenance, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_value(r[k]) for k in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# claims
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClaimCheck:
    name: str
    claimed: float
    computed: float
    tolerance: float
    unit: str

    @property
    def deviation(self) -> float:
        return self.computed - self.claimed

    @property
    def passed(self) -> bool:
        return abs(self.deviation) <= self.tolerance


def _ec(n, snr_db):
    return capacity.ec_closed_form(SystemConfig(n, snr_db)).value


def compute_claims() -> list[ClaimCheck]:
    """Recompute the three quoted capacity trends from the closed form."""
    checks = [
        ClaimCheck("N=2, 5->10 dB relative gain", 34.2,
                   100.0 * (_ec(2, 10.0) / _ec(2, 5.0) - 1.0), 1.0, "%"),
        ClaimCheck("10 dB, N=50->100 relative gain", 12.64,
                   100.0 * (_ec(100, 10.0) / _ec(50, 10.0) - 1.0), 0.5, "%"),
    ]
    for snr in (10.0, 20.0):
        for lo, hi in ((25, 50), (50, 100)):
            checks.append(ClaimCheck(f"{snr:g} dB, N={lo}->{hi} absolute gain", 2.0,
                                     _ec(hi, snr) - _ec(lo, snr), 0.2, "bits/s/Hz"))
    return checks


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="riscap", description="Ergodic capacity of RIS-assisted links.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON file with default flag values")
        sp.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default=None)

    def mc_flags(sp):
        sp.add_argument("--mc-samples", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)

    e = sub.add_parser("eval", help="evaluate one (N, SNR) point")
    e.add_argument("--n", type=int, default=None)
    e.add_argument("--snr-db", type=float, default=None)
    e.add_argument("--method", choices=METHOD_NAMES, default=None)
    e.add_argument("--exact-density", action="store_true", default=None,
                   help="quadrature over x K0(x) instead of the Gamma fit (N = 1)")
    common(e)
    mc_flags(e)

    s = sub.add_parser("sweep", help="grid of (N, SNR, method) evaluations")
    s.add_argument("--n", type=int, nargs="+", default=None)
    s.add_argument("--snr-db", type=float, nargs="+", default=None)
    s.add_argument("--snr-db-range", metavar="LO:HI:STEP", default=None)
    s.add_argument("--method", nargs="+", choices=METHOD_NAMES, default=None)
    common(s)
    mc_flags(s)

    d = sub.add_parser("pdf", help="histogram of A with fitted/exact densities")
    d.add_argument("--n", type=int, default=None)
    d.add_argument("--bins", type=int, default=None)
    d.add_argument("--no-fit", dest="include_fit", action="store_false", default=True)
    common(d)
    mc_flags(d)

    c = sub.add_parser("claims", help="check the quoted capacity trends")
    common(c)
    return p


def _resolve(args) -> dict:
    """Flags > config file > defaults."""
    file_cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        file_cfg = {k.replace("-", "_"): v for k, v in file_cfg.items()}
    out = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else file_cfg.get(key, default)
    return out


def _mc_from(opts) -> McConfig:
    try:
        return McConfig(samples=int(opts["mc_samples"]), seed=int(opts["seed"]),
                        workers=int(opts["workers"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _system(n, snr):
    try:
        return SystemConfig(int(n), float(snr))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_eval(args, opts) -> int:
    if opts["n"] is None or opts["snr_db"] is None or opts["method"] is None:
        raise UsageError("eval needs --n, --snr-db and --method")
    cfg = _system(opts["n"], opts["snr_db"])
    method = Method(opts["method"])
    if method is Method.SINGLE_RU and cfg.n_units != 1:
        raise UsageError("single-ru requires --n 1")
    if opts["exact_density"] and (method is not Method.QUADRATURE or cfg.n_units != 1):
        raise UsageError("--exact-density applies to --method quadrature with --n 1")
    try:
        res = evaluate(cfg, method, _mc_from(opts), bool(opts["exact_density"]))
    except _NUMERICAL_ERRORS as exc:
        print(f"riscap: numerical failure in {_OPERATION[method]}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    row = {"n": cfg.n_units, "snr_db": cfg.rho_t_db, "method": method.value,
           "ec_bits_s_hz": res.value, "err_estimate": res.err_estimate,
           "fallback": res.fallback_used}
    prov = {"n": cfg.n_units, "snr_db": cfg.rho_t_db, "method": method.value}
    _emit(render_rows([row], EVAL_COLUMNS, opts["format"], SWEEP_SCHEMA, prov), args.out)
    return 0


def cmd_sweep(args, opts) -> int:
    n_list = opts["n"] if opts["n"] is not None else list(DEFAULT_N)
    if isinstance(n_list, int):
        n_list = [n_list]
    if opts["snr_db"] is not None and opts["snr_db_range"] is not None:
        raise UsageError("give --snr-db or --snr-db-range, not both")
    if opts["snr_db"] is not None:
        snrs = opts["snr_db"] if isinstance(opts["snr_db"], list) else [opts["snr_db"]]
    else:
        snrs = parse_range(opts["snr_db_range"] or DEFAULT_SNR_RANGE)
    methods = opts["method"] if opts["method"] is not None else list(DEFAULT_SWEEP_METHODS)
    if isinstance(methods, str):
        methods = [methods]
    mc = _mc_from(opts)
    spec = SweepSpec(tuple(int(n) for n in n_list), tuple(float(s) for s in snrs),
                     tuple(methods), opts["format"], mc if "mc" in methods else None)
    rows = run_sweep(spec, workers=mc.workers)
    _emit(render_rows(rows, SWEEP_COLUMNS, spec.output_format, SWEEP_SCHEMA,
                      spec.provenance()), args.out)
    return 0


def cmd_pdf(args, opts) -> int:
    if opts["n"] is None:
        raise UsageError("pdf needs --n")
    cfg = _system(opts["n"], 0.0)
    try:
        mc = McConfig(samples=int(opts["mc_samples"]), seed=int(opts["seed"]),
                      workers=int(opts["workers"]), histogram_bins=int(opts["bins"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    hist = estimate_pdf(cfg, mc)
    columns = ["bin_center", "empirical_density", "empirical_std_err"]
    params = fit_params(cfg)
    if args.include_fit:
        columns.append("fit_density")
        if cfg.n_units == 1:
            columns.append("exact_density")
    rows = []
    for x, dens, se in zip(hist.centers, hist.density, hist.std_err):
        row = {"bin_center": float(x), "empirical_density": float(dens),
               "empirical_std_err": float(se)}
        if args.include_fit:
            row["fit_density"] = pdf_a(params, float(x))
            if cfg.n_units == 1:
                row["exact_density"] = pdf_a_single(float(x))
        rows.append(row)
    prov = {"n": cfg.n_units, "mc_samples": mc.samples, "seed": mc.seed,
            "bins": mc.histogram_bins, "include_fit": bool(args.include_fit)}
    _emit(render_rows(rows, columns, opts["format"], PDF_SCHEMA, prov), args.out)
    return 0


def cmd_claims(args, opts) -> int:
    try:
        checks = compute_claims()
    except _NUMERICAL_ERRORS as exc:
        print(f"riscap: numerical failure in ec_closed_form: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    lines = [f"{'claim':<34} {'claimed':>9} {'computed':>11} {'deviation':>10} {'tol':>6}  status"]
    for c in checks:
        lines.append(
            f"{c.name:<34} {c.claimed:>9.4g} {c.computed:>11.6f} {c.deviation:>+10.4f} "
            f"{c.tolerance:>6.2g}  {'PASS' if c.passed else 'FAIL'}  [{c.unit}]"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if all(c.passed for c in checks) else EXIT_CLAIMS


def _attach_range_values(argv):
    # argparse reads "-10:30:1" as an option, so glue it to its flag.
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok == "--snr-db-range" and out[i + 1].startswith("-"):
            out[i:i + 2] = [f"{tok}={out[i + 1]}"]
            break
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parser.parse_args(_attach_range_values(argv))
        opts = _resolve(args)
        handler = {"eval": cmd_eval, "sweep": cmd_sweep, "pdf": cmd_pdf, "claims": cmd_claims}
        return handler[args.command](args, opts)
    except UsageError as exc:
        print(f"riscap: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
