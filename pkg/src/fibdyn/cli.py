"""Command-line front end.

    fibdyn decompose  --m 16 --level 6 --source both
    fibdyn classify   --m 28 --level 10
    fibdyn verify     --suite periodicity --max-l 8
    fibdyn conjecture --case 4 --d 0 --max-level 14

Every command builds one JSON-ready record; ``--format text`` renders a
summary of that same record.  Exit codes: 0 success, 1 a verification or
conjecture check failed, 2 bad input, 3 engine and catalog disagree,
4 more unresolved cycles than ``--fail-on-unresolved`` allows.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .catalog import (CONJECTURE_Q, BrokenDichotomy, CatalogError, UnsupportedM, catalog_case,
                      catalog_decompose, g_sequence, level10_cycle_table)
from .engine import analyze_cycle, cycles_at_level, decompose
from .fibpoly import FibMap
from .report import compare_reports
from .verify import SUITES, run_suite

SCHEMA_VERSION = 1
WORKERS_ENV = "FIBDYN_WORKERS"

ECHO_FIELDS = {
    "decompose": ("command", "m", "level", "max_n", "source", "fail_on_unresolved"),
    "classify": ("command", "m", "level"),
    "verify": ("command", "suite", "max_l", "m", "level"),
    "conjecture": ("command", "case", "d", "max_level"),
}
EXIT_OK, EXIT_FAILED, EXIT_BAD_INPUT, EXIT_DISAGREE, EXIT_SATURATED = 0, 1, 2, 3, 4


class BadInput(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    m: list[int] = field(default_factory=list)
    level: int = 10
    max_n: int | None = None
    d: int = 0
    case: int = 4
    source: str = "catalog"
    format: str = "json"
    out: str | None = None
    workers: int = 1
    fail_on_unresolved: int | None = None
    suite: str = "all"
    max_l: int | None = None
    max_level: int = 14
    stream: bool = False
    timing: bool = False
    level_given: bool = False

    def validate(self) -> None:
        if self.command == "decompose" and self.level < 3:
            raise BadInput("--level must be at least 3")
        if self.level < 1:
            raise BadInput("--level must be positive")
        if self.max_n is not None and self.max_n < 1:
            raise BadInput("--max-n must be at least 1")
        if self.workers < 1:
            raise BadInput("worker count must be at least 1")
        if self.d < 0:
            raise BadInput("--d must be nonnegative")
        if any(m < 2 for m in self.m):
            raise BadInput("m must be at least 2 (F_0 and F_1 are constant)")

    def echo(self) -> dict:
        """The inputs that determine this command's output."""
        rec = asdict(self)
        return {key: rec[key] for key in ECHO_FIELDS[self.command]}


def parse_m(text: str) -> list[int]:
    """'16' or a range 'A..B' (inclusive)."""
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split("..", 1))
            if hi < lo:
                raise BadInput(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError as exc:
        raise BadInput(f"cannot read m from {text!r}") from exc


# -- commands -------------------------------------------------------------------

def _decompose_one(m: int, cfg: RunConfig, stream=None) -> dict:
    rec: dict = {"m": m}
    start = time.perf_counter()
    cat = eng = None
    if cfg.source in ("catalog", "both"):
        cat = catalog_decompose(m, cfg.level, cfg.max_n)
        rec["catalog"] = cat.to_record()
    if cfg.source in ("engine", "both"):
        on_component = None
        if stream is not None:
            def on_component(comp, m=m):
                print(json.dumps({"m": m, **comp.to_record()}, sort_keys=True), file=stream, flush=True)
        eng = decompose(FibMap(m), cfg.level, workers=cfg.workers, on_component=on_component)
        rec["engine"] = eng.to_record()
        rec["engine"]["unresolved_cycles"] = len(eng.unresolved_cycles)
    if cat is not None and eng is not None:
        rec["agreement"] = compare_reports(cat, eng).to_record()
    if cfg.timing:
        rec["elapsed_seconds"] = round(time.perf_counter() - start, 3)
    return rec


def _decompose_worker(args) -> dict:
    m, cfg = args
    return _decompose_one(m, cfg)


def cmd_decompose(cfg: RunConfig) -> tuple[dict, int]:
    for m in cfg.m:
        catalog_case(m)     # reject unsupported m before doing any work
    stream = sys.stderr if cfg.stream else None
    if len(cfg.m) > 1 and cfg.workers > 1:
        inner = RunConfig(**{**asdict(cfg), "workers": 1})
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_decompose_worker, [(m, inner) for m in cfg.m]))
    else:
        results = [_decompose_one(m, cfg, stream) for m in cfg.m]
    code = EXIT_OK
    if any(not r.get("agreement", {"agree": True})["agree"] for r in results):
        code = EXIT_DISAGREE
    elif cfg.fail_on_unresolved is not None and any(
            r.get("engine", {}).get("unresolved_cycles", 0) > cfg.fail_on_unresolved for r in results):
        code = EXIT_SATURATED
    return {"results": results}, code


def _template_labels(m: int, level: int) -> dict:
    info = catalog_case(m)
    if level != 10 or not info.conjecture:
        return {}
    return {c.elements: (label, str(beh)) for c, beh, label in
            level10_cycle_table(info.conjecture, info.d)}


def cmd_classify(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.level > 20:
        raise BadInput("classify enumerates every residue; use --level <= 20")
    results = []
    for m in cfg.m:
        f = FibMap(m)
        labels = _template_labels(m, cfg.level)
        cycles = []
        for c in cycles_at_level(f, cfg.level):
            an = analyze_cycle(f, c, valuation_guard=0)
            row = {"cycle": list(c.elements), "length": c.length, "a_mod_4": an.a,
                   "b_mod_2": an.b, "behavior": str(an.behavior)}
            if c.elements in labels:
                row["template"], row["predicted"] = labels[c.elements]
            cycles.append(row)
        counts: dict[str, int] = {}
        for row in cycles:
            counts[row["behavior"]] = counts.get(row["behavior"], 0) + 1
        rec = {"m": m, "level": cfg.level, "cycle_count": len(cycles),
               "behaviors": dict(sorted(counts.items())), "cycles": cycles}
        if labels:
            rec["template_mismatches"] = sum(1 for r in cycles
                                             if "predicted" in r and r["predicted"] != r["behavior"])
        results.append(rec)
    return {"results": results}, EXIT_OK


def _suite_params(name: str, cfg: RunConfig) -> dict:
    params: dict = {}
    if cfg.max_l is not None and name in ("periodicity", "valuation", "derivatives"):
        params["max_l"] = cfg.max_l
    if name == "lift-laws":
        if cfg.m:
            params["ms"] = tuple(cfg.m)
        if cfg.level_given:
            params["level"] = cfg.level
    return params


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    suites = [run_suite(n, **_suite_params(n, cfg)).to_record(timing=cfg.timing) for n in names]
    ok = all(s["passed"] for s in suites)
    return {"passed": ok, "suites": suites}, EXIT_OK if ok else EXIT_FAILED


def cmd_conjecture(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.case not in CONJECTURE_Q:
        raise BadInput("--case must be 4 or 8")
    if cfg.max_level < 11:
        raise BadInput("--max-level must be at least 11")
    try:
        seq = g_sequence(cfg.case, cfg.d, cfg.max_level)
    except BrokenDichotomy as exc:
        rec = {"holds": False, "failure": {"kind": "broken-dichotomy", "message": str(exc)},
               "sequence": exc.partial.to_record()}
        return rec, EXIT_FAILED
    holds = seq.all_certified
    rec = {"holds": holds, "max_level": cfg.max_level, "sequence": seq.to_record()}
    return rec, EXIT_OK if holds else EXIT_FAILED


COMMANDS = {"decompose": cmd_decompose, "classify": cmd_classify,
            "verify": cmd_verify, "conjecture": cmd_conjecture}


# -- rendering --------------------------------------------------------------------

def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _text_report(tag: str, rep: dict) -> list[str]:
    c = rep["counts"]
    lines = [f"  {tag} (level {rep['level']}): {c['periodic']} periodic, "
             f"{c['minimal_components']} minimal components, {c['basin_regions']} basin regions, "
             f"{c['unresolved']} open regions"]
    for comp in rep["components"][:40]:
        flag = " [conditional]" if comp.get("conditional") else ""
        centers = comp["centers"]
        shown = ", ".join(map(str, centers[:6])) + (", ..." if len(centers) > 6 else "")
        lines.append(f"    {comp['kind']:<15} level {comp['level']:>2}  {{{shown}}}{flag}")
    if len(rep["components"]) > 40:
        lines.append(f"    ... {len(rep['components']) - 40} more")
    return lines


def render_text(doc: dict) -> str:
    cmd = doc["command"]
    lines = [f"fibdyn {cmd}"]
    body = doc["output"]
    if cmd == "decompose":
        for r in body["results"]:
            lines.append(f"m = {r['m']}")
            for tag in ("catalog", "engine"):
                if tag in r:
                    lines += _text_report(tag, r[tag])
            if "agreement" in r:
                a = r["agreement"]
                lines.append(f"  agreement: {a['agree']} (exact: {a['exact']})")
    elif cmd == "classify":
        for r in body["results"]:
            lines.append(f"m = {r['m']}, level {r['level']}: {r['cycle_count']} cycles {r['behaviors']}")
            for row in r["cycles"][:64]:
                extra = f"  {row['template']}" if "template" in row else ""
                lines.append(f"  {row['cycle'][:6]} len {row['length']}: a={row['a_mod_4']} "
                             f"b={row['b_mod_2']} {row['behavior']}{extra}")
    elif cmd == "verify":
        for s in body["suites"]:
            lines.append(f"{'PASS' if s['passed'] else 'FAIL'}  {s['suite']}")
            for c in s["checks"]:
                lines.append(f"  {'ok  ' if c['passed'] else 'FAIL'} {c['name']} ({c['cases']} cases)")
                if "counterexample" in c:
                    lines.append(f"       counterexample: {c['counterexample']}")
    else:
        seq = body["sequence"]
        lines.append(f"m = {seq['m']} (case {seq['case']}, d = {seq['d']}): holds = {body['holds']}")
        for e in seq["entries"]:
            lines.append(f"  l={e['level']:>3}  g={e['g']:<10} g'={e['g_prime']:<10} "
                         f"certified={e['certified']}")
        if "failure" in body:
            lines.append(f"  failure: {body['failure']['message']}")
    return "\n".join(lines) + "\n"


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fibdyn", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=["json", "text"], default="json")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--timing", action="store_true", help="include wall-clock timings")

    p = sub.add_parser("decompose", help="minimal decomposition of F_m mod 2^K")
    p.add_argument("--m", required=True, help="index m, or an inclusive range A..B")
    p.add_argument("--level", type=int, default=10, help="truncation level K")
    p.add_argument("--max-n", type=int, default=None, help="expand indexed families for n <= this")
    p.add_argument("--source", choices=["catalog", "engine", "both"], default="catalog")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default: ${WORKERS_ENV} or 1)")
    p.add_argument("--fail-on-unresolved", type=int, default=None, metavar="N",
                   help="exit 4 when the engine leaves more than N cycles unresolved")
    p.add_argument("--stream", action="store_true",
                   help="print engine components to stderr as they are found")
    common(p)

    p = sub.add_parser("classify", help="list every cycle at a level with its behavior")
    p.add_argument("--m", required=True)
    p.add_argument("--level", type=int, required=True)
    common(p)

    p = sub.add_parser("verify", help="run named verification suites")
    p.add_argument("--suite", choices=["all", *SUITES], default="all")
    p.add_argument("--max-l", type=int, default=None)
    p.add_argument("--m", default=None, help="maps for the lift-laws suite, e.g. 28 or 8..16")
    p.add_argument("--level", type=int, default=None, help="level for the lift-laws suite")
    common(p)

    p = sub.add_parser("conjecture", help="compute the g_l sequence of a conditional class")
    p.add_argument("--case", type=int, required=True, choices=sorted(CONJECTURE_Q))
    p.add_argument("--d", type=int, default=0)
    p.add_argument("--max-level", type=int, default=14)
    common(p)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command, format=ns.format, out=ns.out, timing=ns.timing)
    if getattr(ns, "m", None) is not None:
        cfg.m = parse_m(ns.m)
    if getattr(ns, "level", None) is not None:
        cfg.level = ns.level
    cfg.level_given = getattr(ns, "level", None) is not None
    for name in ("max_n", "source", "fail_on_unresolved", "stream", "suite", "max_l",
                 "case", "d", "max_level"):
        if getattr(ns, name, None) is not None:
            setattr(cfg, name, getattr(ns, name))
    workers = getattr(ns, "workers", None)
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        try:
            workers = int(env) if env else 1
        except ValueError as exc:
            raise BadInput(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
    cfg.workers = workers
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        output, code = COMMANDS[cfg.command](cfg)
    except (BadInput, UnsupportedM, CatalogError) as exc:
        print(f"fibdyn: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    doc = {"schema_version": SCHEMA_VERSION, "command": cfg.command, "input": cfg.echo(),
           "output": output, "exit_code": code}
    text = render_json(doc) if cfg.format == "json" else render_text(doc)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
