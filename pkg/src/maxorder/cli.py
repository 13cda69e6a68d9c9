"""Command-line interface.

Exit codes: 0 success, 1 property or audit failure, 2 configuration error,
3 resource ceiling reached.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import __version__
from .config import ConfigError, RunConfig, load_config, set_value
from .constructions import (
    ResourceCeilingError,
    ScheduleCeilingError,
    build_counterexample,
    champion_series,
    counterexample_scan,
    empirical_scan,
    height_probes,
    phi_champion_series,
)
from .divisors import InvalidSystemError, a_divisors, check_multiplicative
from .extremal import (
    EXP_MINUS_GAMMA,
    HypothesisViolation,
    InfiniteLocalFactor,
    PrimeSetFilter,
    maximal_order_constant,
    minimal_order_constant_phi,
    rho,
)
from .functions import Unsolvable, phi_a, solve_phi
from .primes import SieveCeilingError, factor_range, primes_up_to

SCHEMA_VERSION = 1

EXIT_OK, EXIT_AUDIT, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3

CSV_COLUMNS = {
    "rho": ["p", "rho", "status"],
    "champion": ["x", "log_n", "ratio", "target", "deviation"],
    "scan": ["n", "ratio"],
    "phi_grid": ["p", "nu", "phi"],
    "phi_list": ["n", "phi"],
}

_num = {"oneOf": [{"type": "number"}, {"enum": ["inf"]}]}
_num_or_null = {"oneOf": [{"type": "number"}, {"enum": ["inf"]}, {"type": "null"}]}
_header = {
    "schema_version": {"const": SCHEMA_VERSION},
    "command": {"type": "string"},
}

SCHEMAS = {
    "rho": {
        "type": "object",
        "required": ["schema_version", "command", "function", "rows"],
        "properties": {**_header, "function": {"type": "string"}, "rows": {
            "type": "array",
            "items": {"type": "object", "required": ["p", "rho", "status"],
                      "properties": {"p": {"type": "integer"}, "rho": _num,
                                     "status": {"type": "string"}}}}},
    },
    "constant": {
        "type": "object",
        "required": ["schema_version", "command", "kind", "function", "constant_lower",
                     "constant_upper", "cutoff", "certified", "tail_source", "notes",
                     "hypothesis_audit", "assertion_flags"],
        "properties": {
            **_header,
            "kind": {"enum": ["maximal", "minimal"]},
            "function": {"type": "string"},
            "constant_lower": _num, "constant_upper": _num,
            "cutoff": {"type": "integer"},
            "certified": {"type": "boolean"},
            "tail_source": {"enum": ["envelope", "exact-hint", "none"]},
            "notes": {"type": "array", "items": {"type": "string"}},
            "hypothesis_audit": {"type": "object", "required": ["passed"]},
            "assertion_flags": {"type": "object"},
        },
    },
    "champion": {
        "type": "object",
        "required": ["schema_version", "command", "rows"],
        "properties": {**_header, "rows": {"type": "array", "items": {
            "type": "object", "required": CSV_COLUMNS["champion"],
            "properties": {"x": {"type": "integer"}, "log_n": {"type": "number"},
                           "ratio": {"type": "number"}, "target": _num_or_null,
                           "deviation": _num_or_null}}}},
    },
    "scan": {
        "type": "object",
        "required": ["schema_version", "command", "n_max", "rows"],
        "properties": {**_header, "n_max": {"type": "integer"}, "rows": {"type": "array", "items": {
            "type": "object", "required": ["n", "ratio"]}}},
    },
    "counterexample": {
        "type": "object",
        "required": ["schema_version", "command", "S", "complete", "schedule", "scan"],
        "properties": {
            **_header,
            "S": {"type": "string"},
            "complete": {"type": "boolean"},
            "error": {"type": ["string", "null"]},
            "schedule": {"type": "array", "items": {
                "type": "object", "required": ["j", "p", "nu", "log_q", "g_at_log_q"]}},
            "scan": {"type": "object", "required": ["height_max", "heights_non_increasing",
                                                    "factorial_bound_ok"]},
        },
    },
    "phi": {
        "type": "object",
        "required": ["schema_version", "command", "system", "rows"],
        "properties": {**_header, "system": {"type": "string"}, "rows": {"type": "array"}},
    },
    "check": {
        "type": "object",
        "required": ["schema_version", "command", "system", "witness", "reconstruction"],
        "properties": {
            **_header,
            "system": {"type": "string"},
            "witness": {"type": "object", "required": ["verdict", "bound", "violation"]},
            "reconstruction": {"type": "object", "required": ["bound", "ok", "first_failure"]},
        },
    },
}


def _jf(v):
    if v is None:
        return None
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("inf" if isinstance(r[k], float) and math.isinf(r[k])
                        else "" if r[k] is None else r[k]) for k in columns})
    return buf.getvalue()


class Result:
    def __init__(self, text: str, code: int = EXIT_OK):
        self.text = text
        self.code = code


def _tabular(cfg: RunConfig, command: str, table: str, rows: list[dict], extra: dict) -> str:
    if cfg.format == "json":
        return _json({"schema_version": SCHEMA_VERSION, "command": command, **extra, "rows": rows})
    return _csv(CSV_COLUMNS[table], rows)


# --- commands ------------------------------------------------------------------

def cmd_rho(cfg: RunConfig) -> Result:
    f = cfg.build_function()
    rows = []
    for p in primes_up_to(cfg.bound).tolist():
        r = rho(f, p, cfg.scan_limit)
        status = "exact-by-" + r.source if r.exact else r.status
        rows.append({"p": p, "rho": _jf(r.value), "status": status})
    return Result(_tabular(cfg, "rho", "rho", rows, {"function": f.name}))


def cmd_constant(cfg: RunConfig) -> Result:
    flt = cfg.prime_filter()
    f = cfg.build_function()
    code = EXIT_OK
    flags = {"upper_bound_route": cfg.route,
             "route_machine_checked": False,
             "excluded_set": flt.label if flt else None,
             "declared_thin": cfg.declared_thin if flt else None}
    if cfg.function == "phi":
        kind = "minimal"
        try:
            est = minimal_order_constant_phi(cfg.build_system(), cfg.cutoff, cfg.scan_limit)
            audit = {"passed": True, **(est.audit or {})}
        except HypothesisViolation as exc:
            return Result(_json({
                "schema_version": SCHEMA_VERSION, "command": "constant", "kind": kind,
                "function": f.name, "constant_lower": 0.0, "constant_upper": "inf",
                "cutoff": cfg.cutoff, "certified": False, "tail_source": "none",
                "notes": [str(exc)],
                "hypothesis_audit": {"passed": False, "prime": exc.p, "inequality": exc.inequality},
                "assertion_flags": flags}), EXIT_AUDIT)
    else:
        kind = "maximal"
        try:
            est = maximal_order_constant(f, cfg.cutoff, flt, cfg.route, cfg.scan_limit)
            audit = {"passed": True, **(est.audit or {})}
        except HypothesisViolation as exc:
            est = maximal_order_constant(f, cfg.cutoff, flt, cfg.route, cfg.scan_limit, audit=False)
            audit = {"passed": False, "prime": exc.p, "inequality": exc.inequality}
            code = EXIT_AUDIT
    doc = {
        "schema_version": SCHEMA_VERSION, "command": "constant", "kind": kind,
        "function": f.name,
        "constant_lower": _jf(est.lower), "constant_upper": _jf(est.upper),
        "cutoff": est.cutoff, "certified": est.certified, "tail_source": est.tail_source,
        "notes": list(est.notes), "hypothesis_audit": audit, "assertion_flags": flags,
    }
    return Result(_json(doc), code)


def cmd_champion(cfg: RunConfig) -> Result:
    if cfg.function == "phi":
        sys_ = cfg.build_system()
        target = minimal_order_constant_phi(sys_, min(cfg.cutoff, 10**5), cfg.scan_limit).mid
        pts = phi_champion_series(sys_, cfg.x_grid, target=target)
    else:
        pts = champion_series(cfg.build_function(), cfg.x_grid, eps=cfg.eps,
                              cutoff=min(cfg.cutoff, 10**6))
    rows = [{"x": p.x, "log_n": p.log_n, "ratio": p.ratio, "target": p.target,
             "deviation": p.deviation} for p in pts]
    return Result(_tabular(cfg, "champion", "champion", rows, {}))


def cmd_scan(cfg: RunConfig) -> Result:
    recs = empirical_scan(cfg.build_function(), cfg.n_max)
    rows = [{"n": r.n, "ratio": r.ratio} for r in recs]
    return Result(_tabular(cfg, "scan", "scan", rows, {"n_max": cfg.n_max}))


def cmd_counterexample(cfg: RunConfig) -> Result:
    flt = cfg.prime_filter()
    if flt is None or flt.declared_thin:
        raise ConfigError("counterexample needs analysis.exclude = mod M:R with declared_thin = false")
    error = None
    try:
        cf = build_counterexample(flt, cfg.j_max, cfg.prime_bound, cfg.nu_ceiling,
                                  cfg.literal_base)
    except ScheduleCeilingError as exc:
        cf, error = exc.partial, str(exc)
    rep = counterexample_scan(cf, height_probes(cf, [float(h) for h in cfg.heights]))
    doc = {
        "schema_version": SCHEMA_VERSION, "command": "counterexample",
        "S": flt.label, "complete": error is None, "error": error,
        "schedule": [{"j": q.j, "p": q.p, "nu": q.nu, "log_q": q.log_q,
                      "g_at_log_q": q.g_at_log_q} for q in cf.schedule],
        "scan": {
            "height_max": {str(int(h)): v for h, v in sorted(rep.height_max.items())},
            "heights_non_increasing": rep.heights_non_increasing,
            "factorial_bound_ok": rep.factorial_bound_ok,
            "free_part_ok": rep.free_part_ok,
        },
    }
    if error is not None:
        code = EXIT_RESOURCE
    elif not (rep.heights_non_increasing and rep.factorial_bound_ok):
        code = EXIT_AUDIT
    else:
        code = EXIT_OK
    return Result(_json(doc), code)


def cmd_phi(cfg: RunConfig) -> Result:
    sys_ = cfg.build_system()
    try:
        if cfg.n_list:
            from .primes import factorize
            rows = [{"n": n, "phi": phi_a(sys_, factorize(n))} for n in cfg.n_list]
            table = "phi_list"
        else:
            rows = []
            for p in cfg.p:
                t = solve_phi(sys_, p, cfg.nu_max)
                rows += [{"p": p, "nu": nu, "phi": t[nu]} for nu in range(cfg.nu_max + 1)]
            table = "phi_grid"
    except Unsolvable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return Result("", EXIT_AUDIT)
    if cfg.format == "json":
        return Result(_json({"schema_version": SCHEMA_VERSION, "command": "phi",
                             "system": sys_.name, "rows": rows}))
    return Result(_csv(CSV_COLUMNS[table], rows))


def cmd_check(cfg: RunConfig) -> Result:
    sys_ = cfg.build_system()
    bound = min(cfg.bound, 10**4)
    w = check_multiplicative(sys_, bound)
    first = None
    ok = True
    try:
        ns = factor_range(bound)
        for n in range(1, bound + 1):
            total = sum(phi_a(sys_, d) for d in a_divisors(sys_, ns[n]))
            if total != n:
                first, ok = n, False
                break
    except Unsolvable as exc:
        ok, first = False, exc.p**exc.nu
    doc = {
        "schema_version": SCHEMA_VERSION, "command": "check", "system": sys_.name,
        "witness": {"verdict": w.verdict, "bound": w.bound,
                    "violation": list(w.violation) if w.violation else None},
        "reconstruction": {"bound": bound, "ok": ok, "first_failure": first},
    }
    return Result(_json(doc), EXIT_OK if (w.ok and ok) else EXIT_AUDIT)


COMMANDS = {
    "rho": cmd_rho,
    "constant": cmd_constant,
    "champion": cmd_champion,
    "scan": cmd_scan,
    "counterexample": cmd_counterexample,
    "phi": cmd_phi,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxorder", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--system", metavar="KIND")
    ap.add_argument("--function", metavar="KIND")
    ap.add_argument("--cutoff", type=int, metavar="N")
    ap.add_argument("--x-grid", metavar="LIST")
    ap.add_argument("--out", metavar="PATH")
    ap.add_argument("--format", choices=["csv", "json"])
    ap.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                    help="override any config key, e.g. --set analysis.n_max=1000")
    ap.add_argument("--print-effective-config", action="store_true")
    return ap


def _effective_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.system:
        cfg.system = args.system
    if args.function:
        cfg.function = args.function
    if args.cutoff is not None:
        set_value(cfg, "analysis", "cutoff", str(args.cutoff))
    if args.x_grid:
        set_value(cfg, "analysis", "x_grid", args.x_grid)
    if args.out:
        cfg.out = args.out
    if args.format:
        cfg.format = args.format
    for item in args.set:
        lhs, sep, value = item.partition("=")
        section, dot, key = lhs.strip().rpartition(".")
        if not sep or not dot:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        set_value(cfg, section, key, value)
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _effective_config(args)
        if args.print_effective_config:
            sys.stdout.write(cfg.to_ini())
            return EXIT_OK
        result = COMMANDS[args.command](cfg)
    except (ConfigError, InvalidSystemError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SieveCeilingError, ResourceCeilingError) as exc:
        print(f"resource ceiling: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (HypothesisViolation, InfiniteLocalFactor, Unsolvable) as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    if cfg.out in ("-", ""):
        sys.stdout.write(result.text)
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(result.text)
    return result.code


if __name__ == "__main__":
    sys.exit(main())
