"""Command line front end: ``weilspin <cmd> --config <path> [--seed N] [--cases M] [--format json|md]``.

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid config,
3 degenerate instance (zero rank or a degenerate W).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

from . import __version__
from . import hodge as H
from . import orlov as O
from . import secant as S
from . import suites
from .errors import ConfigError, DegenerateW, FieldMismatch, NotInFamily, ZeroRank
from .exterior import Multivector, power
from .fieldtower import TowerSpec, is_squarefree, parse_F, rat, rat_str
from .weilstructure import RMData, WeilContext, build_context, darboux_rm

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2, 3
COMMANDS = ("dims", "secant", "criterion", "hodge", "suite", "report")
NAMED_CLASSES = ("alpha0", "betaprime")

FLAGSHIP = {"field": {"t": 3, "q": "1"}, "rank_d": 4, "unit_f": ["2", "1"]}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------
@dataclass
class JobConfig:
    t: int
    q: object
    rank_d: int
    theta: object = "darboux"
    unit_f: list | None = None
    classes: dict | None = None
    checks: list | None = None
    seed: int = 0
    case_count: int = 100

    @property
    def spec(self) -> TowerSpec:
        return TowerSpec(self.t, self.q)

    def to_json(self) -> dict:
        out = {
            "field": {"t": self.t, "q": rat_str(self.q)},
            "rank_d": self.rank_d,
            "theta": self.theta,
            "seed": self.seed,
            "case_count": self.case_count,
        }
        if self.unit_f is not None:
            out["unit_f"] = self.unit_f
        if self.classes is not None:
            out["classes"] = self.classes
        if self.checks is not None:
            out["checks"] = self.checks
        return out


_TOP_KEYS = {"field", "rank_d", "theta", "unit_f", "classes", "checks", "seed", "case_count"}


def _rational(value, path: str):
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(path, "rationals must be integers or 'p/q' strings")
    try:
        return rat(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(path, f"not a rational: {value!r}") from exc


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, "must be an integer")
    return value


def _F_pair(value, path: str) -> list:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(path, "must be a pair [a, b] meaning a + b sqrt(t)")
    return [rat_str(_rational(v, f"{path}[{i}]")) for i, v in enumerate(value)]


def parse_config(raw) -> JobConfig:
    """Validate a decoded config document; raises ConfigError with a field path."""
    if not isinstance(raw, dict):
        raise ConfigError("$", "config must be a JSON object")
    extra = sorted(set(raw) - _TOP_KEYS)
    if extra:
        raise ConfigError(extra[0], "unknown key")
    fld = raw.get("field")
    if not isinstance(fld, dict):
        raise ConfigError("field", "required object {t, q}")
    if set(fld) - {"t", "q"}:
        raise ConfigError("field." + sorted(set(fld) - {"t", "q"})[0], "unknown key")
    if "t" not in fld or "q" not in fld:
        raise ConfigError("field", "needs both t and q")
    t = _int(fld["t"], "field.t")
    if t != 0 and (t < 2 or not is_squarefree(t)):
        raise ConfigError("field.t", f"must be 0 or a squarefree integer > 1, got {t}")
    q = _rational(fld["q"], "field.q")
    if q <= 0:
        raise ConfigError("field.q", "must be positive")
    if "rank_d" not in raw:
        raise ConfigError("rank_d", "required")
    d = _int(raw["rank_d"], "rank_d")
    if d < 2 or d % 2:
        raise ConfigError("rank_d", f"d must be a positive even integer, got {d}")

    theta = raw.get("theta", "darboux")
    if theta != "darboux":
        if not isinstance(theta, list) or len(theta) != d or any(not isinstance(r, list) or len(r) != d for r in theta):
            raise ConfigError("theta", f"must be 'darboux' or a {d}x{d} matrix of [a, b] entries")
        theta = [[_F_pair(e, f"theta[{i}][{j}]") for j, e in enumerate(row)] for i, row in enumerate(theta)]
        if t == 0 and any(e[1] != "0/1" for row in theta for e in row):
            raise ConfigError("theta", "sqrt(t) parts must vanish when t = 0")

    unit_f = raw.get("unit_f")
    if unit_f is not None:
        unit_f = _F_pair(unit_f, "unit_f")
        if t == 0 and unit_f[1] != "0/1":
            raise ConfigError("unit_f", "sqrt(t) part must vanish when t = 0")

    classes = raw.get("classes")
    if classes is not None and (not isinstance(classes, dict) or set(classes) - {"alpha", "beta"}):
        raise ConfigError("classes", "must be an object with keys alpha and beta")
    if classes is not None:
        classes = {"alpha": "alpha0", "beta": "betaprime", **classes}
    for key, val in (classes or {}).items():
        path = f"classes.{key}"
        if isinstance(val, str):
            if val not in NAMED_CLASSES:
                raise ConfigError(path, f"unknown named class {val!r}; expected one of {', '.join(NAMED_CLASSES)}")
        elif isinstance(val, list):
            for i, term in enumerate(val):
                if not isinstance(term, dict) or set(term) != {"mask", "coeff"}:
                    raise ConfigError(f"{path}[{i}]", "terms are {mask, coeff} objects")
                _int(term["mask"], f"{path}[{i}].mask")
                if not isinstance(term["coeff"], list) or len(term["coeff"]) != 4:
                    raise ConfigError(f"{path}[{i}].coeff", "must list four rationals")
                for j, c in enumerate(term["coeff"]):
                    _rational(c, f"{path}[{i}].coeff[{j}]")
        else:
            raise ConfigError(path, "must be a named class or a list of terms")

    checks = raw.get("checks")
    if checks is not None:
        if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
            raise ConfigError("checks", "must be a list of suite names")
        for i, c in enumerate(checks):
            if c not in suites.FAMILIES:
                raise ConfigError(f"checks[{i}]", f"unknown suite {c!r}")
    seed = _int(raw.get("seed", 0), "seed")
    cases = _int(raw.get("case_count", 100), "case_count")
    if cases < 1:
        raise ConfigError("case_count", "must be positive")
    return JobConfig(t, q, d, theta, unit_f, classes, checks, seed, cases)


def load_config(path: str) -> JobConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("$", f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# building the instance
# ---------------------------------------------------------------------------
def build_ctx(cfg: JobConfig) -> WeilContext:
    spec = cfg.spec
    if cfg.theta == "darboux":
        rm = darboux_rm(spec, cfg.rank_d)
    else:
        try:
            rm = RMData(spec, cfg.rank_d, [[parse_F(spec, e) for e in row] for row in cfg.theta])
            rm.check()
        except ValueError as exc:
            raise ConfigError("theta", str(exc)) from exc
    return build_context(spec, rm, cfg.rank_d)


def named_class(ctx: WeilContext, cfg: JobConfig, name: str, path: str) -> Multivector:
    q = ctx.spec.q
    theta = ctx.rm.theta
    if name == "alpha0":
        return theta - power(theta, 3).scale(q / 6)
    if cfg.unit_f is None:
        raise ConfigError("unit_f", f"required by {path} = 'betaprime'")
    f = parse_F(ctx.spec, cfg.unit_f)
    if f.is_zero():
        raise ConfigError("unit_f", "must be non-zero")
    f2 = f * f
    try:
        return S.theta_family_class(ctx, f2, f2.inv() * (-q / 6))
    except NotInFamily as exc:
        raise ConfigError(path, f"betaprime needs t > 0 and rank_d = 4 ({exc})") from exc


def default_classes(ctx: WeilContext, cfg: JobConfig) -> dict | None:
    """alpha0 and betaprime when the Theta family and a unit are available."""
    if ctx.spec.t and ctx.d == 4 and cfg.unit_f is not None:
        return {"alpha": "alpha0", "beta": "betaprime"}
    return None


def class_of(ctx: WeilContext, cfg: JobConfig, key: str) -> Multivector:
    val = (cfg.classes or default_classes(ctx, cfg))[key]
    path = f"classes.{key}"
    if isinstance(val, str):
        return named_class(ctx, cfg, val, path)
    if any(not 0 <= int(term["mask"]) < 1 << ctx.h for term in val):
        raise ConfigError(path, f"mask out of range for rank {ctx.h}")
    try:
        return Multivector.from_json(ctx.h, val, ctx.spec)
    except FieldMismatch as exc:
        raise ConfigError(path, str(exc)) from exc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
@dataclass
class RunReport:
    command: str
    config: dict
    sections: dict = field(default_factory=dict)
    passed: bool = True
    degenerate: bool = False
    timings: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.degenerate:
            return EXIT_DEGENERATE
        return EXIT_PASS if self.passed else EXIT_FAIL

    def to_json(self, with_timings: bool = False) -> dict:
        out = {
            "command": self.command,
            "config": self.config,
            "passed": self.passed,
            "version": __version__,
            **self.sections,
        }
        if self.degenerate:
            out["degenerate"] = True
        if with_timings:
            out["timings"] = {k: f"{v:.3f}" for k, v in sorted(self.timings.items())}
        return out


def dims_ledger(ctx: WeilContext) -> dict:
    return {
        "dimB": S.secant_basis(ctx).dim,
        "dimHW": ctx.HW.dim,
        "dimA2": len(ctx.A2),
        "BB": S.bb_dims(ctx),
        "dimKB1": S.kb1_subspace(ctx).dim,
        "dimH11alg": S.h11_algebra(ctx).dim,
    }


def _cmd_dims(ctx, cfg, rep):
    rep.sections["dims"] = dims_ledger(ctx)


def _cmd_secant(ctx, cfg, rep):
    rep.sections["secant"] = S.secant_report(ctx)


def _cmd_criterion(ctx, cfg, rep):
    if ctx.d <= 2:
        rep.sections["criterion"] = {"skipped": "the criterion needs d > 2"}
        return
    if cfg.classes is None and default_classes(ctx, cfg) is None:
        rep.sections["criterion"] = {"skipped": "no classes configured and no default for this tower"}
        return
    chF1 = class_of(ctx, cfg, "alpha")
    chF2 = class_of(ctx, cfg, "beta")
    space = S.secant_basis(ctx).space
    for key, x in (("alpha", chF1), ("beta", chF2)):
        if not space.member(dict(x.terms)):
            raise ConfigError(f"classes.{key}", "class does not lie in the secant space B")
    crit = O.criterion_check(ctx, chF1, chF2)
    rep.sections["criterion"] = crit.to_json()
    if not crit.r:
        rep.degenerate = True
    rep.passed &= crit.verdict


def _cmd_hodge(ctx, cfg, rep):
    rm, I = H.builtin_fixture(ctx.spec, ctx.d)
    fctx = ctx if cfg.theta == "darboux" else build_context(ctx.spec, rm, ctx.d)
    out = H.hodge_report(fctx, I)
    rep.sections["hodge"] = out
    rep.passed &= all(out["hodgeB"]) and out["omega"]["member"]


def _cmd_suite(ctx, cfg, rep):
    results = suites.run_suites(ctx, cfg.checks, cfg.seed, cfg.case_count)
    rep.sections["suite"] = {name: r.to_json() for name, r in results.items()}
    rep.passed &= all(r.passed for r in results.values())


def _cmd_report(ctx, cfg, rep):
    for name, fn in (("dims", _cmd_dims), ("secant", _cmd_secant), ("criterion", _cmd_criterion),
                     ("hodge", _cmd_hodge), ("suite", _cmd_suite)):
        t0 = time.perf_counter()
        fn(ctx, cfg, rep)
        rep.timings[name] = time.perf_counter() - t0


_DISPATCH = {
    "dims": _cmd_dims,
    "secant": _cmd_secant,
    "criterion": _cmd_criterion,
    "hodge": _cmd_hodge,
    "suite": _cmd_suite,
    "report": _cmd_report,
}


def run_command(cmd: str, cfg: JobConfig) -> RunReport:
    if cmd not in _DISPATCH:
        raise ValueError(f"unknown command {cmd!r}")
    rep = RunReport(cmd, cfg.to_json())
    t0 = time.perf_counter()
    try:
        ctx = build_ctx(cfg)
        _DISPATCH[cmd](ctx, cfg, rep)
    except (ZeroRank, DegenerateW) as exc:
        rep.degenerate = True
        rep.passed = False
        rep.sections["error"] = f"{type(exc).__name__}: {exc}"
    rep.timings.setdefault("total", time.perf_counter() - t0)
    return rep


# ---------------------------------------------------------------------------
# emitters
# ---------------------------------------------------------------------------
def emit_json(report: RunReport, with_timings: bool = False) -> str:
    return json.dumps(report.to_json(with_timings), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _md_value(v) -> str:
    if isinstance(v, (dict, list)):
        return "`" + json.dumps(v, sort_keys=True, ensure_ascii=False) + "`"
    return str(v)


def emit_markdown(report: RunReport, with_timings: bool = False) -> str:
    doc = report.to_json(with_timings)
    lines = [f"# weilspin {doc['command']}", "", f"Overall: **{'pass' if doc['passed'] else 'fail'}**", ""]
    for key in sorted(doc):
        if key in ("command", "passed", "version"):
            continue
        val = doc[key]
        lines.append(f"## {key}")
        lines.append("")
        if key == "suite":
            lines.append("| family | statement | cases | result | counterexample |")
            lines.append("|---|---|---|---|---|")
            for name, r in val.items():
                result = "skipped" if r.get("skipped") else ("pass" if r["passed"] else "FAIL")
                ce = _md_value(r["counterexample"]) if "counterexample" in r else ""
                lines.append(f"| {name} | {r['statement']} | {r['cases']} | {result} | {ce} |")
        elif isinstance(val, dict):
            lines.append("| key | value |")
            lines.append("|---|---|")
            for k in sorted(val):
                lines.append(f"| {k} | {_md_value(val[k])} |")
        else:
            lines.append(_md_value(val))
        lines.append("")
    return "\n".join(lines)


def emit_report(report: RunReport, fmt: str = "json", with_timings: bool = False) -> str:
    if fmt == "json":
        return emit_json(report, with_timings)
    if fmt == "md":
        return emit_markdown(report, with_timings)
    raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weilspin", description="Exact checks for Weil classes, pure spinors and the Orlov transform.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON job config (default: the built-in genus-4 flagship)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--cases", type=int, help="override the config case_count")
    p.add_argument("--format", choices=("json", "md"), default="json")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings (makes output non-deterministic)")
    p.add_argument("--version", action="version", version=f"weilspin {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else parse_config(FLAGSHIP)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.cases is not None:
            if args.cases < 1:
                raise ConfigError("--cases", "must be positive")
            cfg.case_count = args.cases
        report = run_command(args.command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(emit_report(report, args.format, args.timings))
    if report.sections.get("error"):
        print(report.sections["error"], file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
