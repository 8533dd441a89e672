"""Job specifications, the job runner and the corpus runner.

A job is a JSON object::

    {"subcommand": "lift-curve",
     "system": {"family": "symmetric_complex", "n": 2},
     "input": {"f": ["0", "-t"]},
     "options": {"truncation": 8},
     "expect": {"chart_count": 2, "residual": "exact"}}

``run_job`` returns an exit status, a JSON-ready result and a flat summary;
the corpus runner compares the summary with the ``expect`` block.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .desingularizer import check_descent, resolve_nc_2d, verify_certificates
from .errors import InputError, InvliftError, VerificationFailed
from .invariants import InvariantSystem, membership_test
from .lifter import LiftOptions, LiftProblem, chart_residual, lift, residual_is_zero
from .scalar import max_precision, parse_scalar, scalar_to_json
from .series import INF, format_series, parse_series
from .weak import WeakLift, assemble_weak_lift, sample_rows, section_map, verify

SUBCOMMANDS = ("describe", "lift-curve", "lift-surface", "resolve", "check-membership",
               "section", "verify-lift", "run-corpus")


@dataclass
class JobOptions:
    precision: int = 128
    truncation: int = 8
    budget: int = 64
    depth: int = 16
    grid_levels: list | None = None
    grid: int = 64
    tol: float = 1e-3
    box: list = field(default_factory=lambda: ["1", "1"])
    workers: int = 1

    def validate(self):
        if not 16 <= self.precision <= max_precision():
            raise InputError(f"precision must be between 16 and {max_precision()} bits")
        if not 2 <= self.truncation <= 64:
            raise InputError("truncation must be between 2 and 64")
        if not 1 <= self.budget <= 4096:
            raise InputError("budget must be between 1 and 4096")
        if not 1 <= self.depth <= 64:
            raise InputError("depth must be between 1 and 64")
        if self.grid_levels is not None:
            lv = list(self.grid_levels)
            if len(lv) != 2 or not 1 <= lv[0] < lv[1] <= 14:
                raise InputError("grid levels must be a pair lo < hi within 1..14")
        if not 2 <= self.grid <= 512:
            raise InputError("grid must be between 2 and 512 samples per axis")
        if not 0 < self.tol < 1:
            raise InputError("tolerance must be in (0, 1)")
        if not 1 <= self.workers <= 64:
            raise InputError("workers must be between 1 and 64")
        try:
            box = [Fraction(b) for b in self.box]
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"bad box {self.box!r}") from exc
        if not box or any(b <= 0 for b in box):
            raise InputError("box half-widths must be positive")

    def levels(self):
        if self.grid_levels is None:
            return None
        lo, hi = self.grid_levels
        return list(range(lo, hi + 1))

    def lift_options(self):
        box = [Fraction(b) for b in self.box]
        box = (box + box)[:2]
        return LiftOptions(precision=self.precision, truncation=self.truncation,
                           budget=self.budget, depth=self.depth, box=tuple(box))


@dataclass
class JobSpec:
    subcommand: str
    system: dict | None = None
    payload: dict = field(default_factory=dict)
    options: JobOptions = field(default_factory=JobOptions)
    seed: int = 0
    expect: dict | None = None
    name: str = ""

    @staticmethod
    def from_json(obj, name=""):
        if not isinstance(obj, dict) or "subcommand" not in obj:
            raise InputError("a job needs a 'subcommand'")
        sub = obj["subcommand"]
        if sub not in SUBCOMMANDS:
            raise InputError(f"unknown subcommand {sub!r}")
        known = set(JobOptions.__dataclass_fields__)
        raw = dict(obj.get("options", {}))
        extra = set(raw) - known
        if extra:
            raise InputError(f"unknown options {sorted(extra)}")
        opts = JobOptions(**raw)
        opts.validate()
        return JobSpec(sub, obj.get("system"), dict(obj.get("input", {})), opts,
                       int(obj.get("seed", 0)), obj.get("expect"), obj.get("name", name))

    def to_json(self):
        out = {"subcommand": self.subcommand, "input": self.payload,
               "options": asdict(self.options), "seed": self.seed}
        if self.system is not None:
            out["system"] = self.system
        if self.expect is not None:
            out["expect"] = self.expect
        if self.name:
            out["name"] = self.name
        return out


@dataclass
class JobResult:
    exit_code: int
    result: dict
    summary: dict
    csv_rows: list | None = None

    def document(self):
        """Deterministic JSON document with a versioned header."""
        return {"invlift": __version__, "format": 1, "exit_code": self.exit_code,
                "result": self.result}


def _no_floats(obj):
    if isinstance(obj, float):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _no_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_no_floats(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text; stray floats become their repr strings."""
    return json.dumps(_no_floats(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# -- individual subcommands ----------------------------------------------------

def _system(spec):
    if spec.system is None:
        raise InputError("this subcommand needs a 'system' descriptor")
    return InvariantSystem.from_json(spec.system)


def _data(spec, nvars):
    f = spec.payload.get("f")
    if not isinstance(f, list):
        raise InputError("input 'f' must be a list of series literals")
    trunc = spec.payload.get("trunc")
    trunc = INF if trunc in (None, "inf") else int(trunc)
    return tuple(parse_series(str(s), nvars=nvars, trunc=trunc) for s in f)


def _lift_job(spec, nvars):
    system = _system(spec)
    problem = LiftProblem(system, _data(spec, nvars), spec.options.lift_options())
    res = lift(problem)
    residual = "exact"
    for ch in res.charts:
        r = chart_residual(problem, ch)
        if all(s.is_zero() for s in r):
            continue
        if residual_is_zero(r):
            residual = "enclosed"
        else:
            residual = "nonzero"
            break
    powers = [[m.to_json() for m in ch.power_maps() if max(m.gamma) > 1] for ch in res.charts]
    checks = [{"kind": c.kind, "alphas": [list(a) if isinstance(a, tuple) else a for a in c.alphas],
               "delta": list(c.delta) if c.delta is not None else None, "ok": c.ok}
              for c in res.checks]
    result = {
        "system": system.to_json(),
        "f": [format_series(s) for s in problem.f],
        "charts": [ch.to_json() for ch in res.charts],
        "checks": checks,
        "residual": residual,
    }
    summary = {
        "chart_count": len(res.charts),
        "residual": residual,
        "power_free": all(not p for p in powers),
        "checks_ok": all(c.ok for c in res.checks),
        "gammas": sorted({tuple(m["gamma"]) for p in powers for m in p}),
        "exact_lifts": all(s.is_exact for ch in res.charts for s in ch.lift),
    }
    summary["gammas"] = [list(g) for g in summary["gammas"]]
    rows = [["chart", "component", "exponent", "coefficient"]]
    for i, ch in enumerate(res.charts):
        for j, s in enumerate(ch.lift):
            for e, c in sorted(s.coeffs.items()):
                c = scalar_to_json(c)
                rows.append([i, j, " ".join(map(str, e)), c if isinstance(c, str) else json.dumps(c)])
    return result, summary, rows


def _resolve_job(spec):
    f = _data(spec, 2)
    tree = resolve_nc_2d(list(f), budget=spec.options.budget, max_depth=spec.options.depth,
                         box=tuple(Fraction(b) for b in (spec.options.box + spec.options.box)[:2]),
                         precision=spec.options.precision)
    problems = verify_certificates(tree)
    logs = tree.descent_logs()
    descent_ok = all(check_descent(lg, spec.options.depth) for lg in logs)
    result = {"tree": tree.to_json(), "certificate_problems": problems,
              "descent_logs": [[list(p) for p in lg] for lg in logs], "descent_ok": descent_ok}
    summary = {"leaves": len(tree.leaves()), "depth": tree.depth(),
               "certificates_ok": not problems, "descent_ok": descent_ok}
    return result, summary, None


def _membership_job(spec):
    system = _system(spec)
    z = spec.payload.get("z")
    if not isinstance(z, list):
        raise InputError("input 'z' must be a list of scalar literals")
    verdict = membership_test(system, [parse_scalar(str(v)) for v in z])
    return {"system": system.to_json(), "z": [str(v) for v in z], "verdict": verdict.value}, \
        {"verdict": verdict.value}, None


def _report_summary(report):
    s = {f"verdicts.{k}": v for k, v in report.verdicts.items()}
    s["passed"] = report.passed()
    if report.levels:
        s["gradient_integral"] = round(report.gradient_integral, 6)
    s["e_measure"] = round(report.e_measure, 9)
    return s


def _report_failed(report):
    return any(report.verdicts.get(k) == "fail" for k in ("residual", "bounded", "lipschitz", "sbv"))


def _section_job(spec):
    system = _system(spec)
    box = spec.payload.get("box")
    wl, report = section_map(system, box=box, grid=spec.options.grid,
                             levels=spec.options.levels(), tol=spec.options.tol,
                             precision=spec.options.precision, center=spec.payload.get("center"))
    rows = None
    if wl.q in (1, 2):
        rows = _csv_samples(wl, report)
    return {"weak_lift": wl.to_json(), "report": report.to_json()}, _report_summary(report), rows, report


def _csv_samples(wl, report):
    level = report.levels[-1].level if report.levels else 4
    header = [f"x{j + 1}" for j in range(wl.q)]
    for j in range(wl.system.dim):
        header += [f"re{j + 1}", f"im{j + 1}"]
    header += ["grad_norm", "in_E"]
    return [header] + sample_rows(wl, min(level, 8 if wl.q == 1 else 5))


def _verify_job(spec):
    payload = spec.payload
    if "weak_lift" in payload or "weak_lift_path" in payload:
        obj = payload.get("weak_lift")
        if obj is None:
            obj = json.loads(Path(payload["weak_lift_path"]).read_text())
            obj = obj.get("result", obj).get("weak_lift", obj)
        wl = WeakLift.from_json(obj)
        report = verify(wl, levels=spec.options.levels(), tol=spec.options.tol)
    else:
        system = _system(spec)
        nvars = int(payload.get("nvars", 1))
        problem = LiftProblem(system, _data(spec, nvars), spec.options.lift_options())
        wl, report = assemble_weak_lift(problem, levels=spec.options.levels(), tol=spec.options.tol)
    return ({"weak_lift": wl.to_json(), "report": report.to_json()}, _report_summary(report),
            _csv_samples(wl, report), report)


def run_job(spec: JobSpec) -> JobResult:
    """Run one job; errors become exit codes carrying the wrapped error."""
    random.seed(spec.seed)
    try:
        sub = spec.subcommand
        rows = None
        code = 0
        if sub == "describe":
            desc = _system(spec).describe()
            result, summary = desc, {k: desc[k] for k in ("D", "degrees", "generators", "group_order")}
        elif sub in ("lift-curve", "lift-surface"):
            result, summary, rows = _lift_job(spec, 1 if sub == "lift-curve" else 2)
            if summary["residual"] == "nonzero":
                code = VerificationFailed.exit_code
        elif sub == "resolve":
            result, summary, rows = _resolve_job(spec)
            if not summary["certificates_ok"]:
                code = VerificationFailed.exit_code
        elif sub == "check-membership":
            result, summary, rows = _membership_job(spec)
        elif sub in ("section", "verify-lift"):
            result, summary, rows, report = (_section_job if sub == "section" else _verify_job)(spec)
            if _report_failed(report):
                code = VerificationFailed.exit_code
        else:
            directory = spec.payload.get("dir")
            if not directory:
                raise InputError("run-corpus needs input 'dir'")
            table = run_corpus(directory, workers=spec.options.workers)
            failures = [r for r in table if r["status"] != "PASS"]
            result = {"table": table, "failures": len(failures)}
            summary = {"jobs": len(table), "failures": len(failures)}
            code = 1 if failures else 0
        summary["exit"] = code
        return JobResult(code, result, summary, rows)
    except InvliftError as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        return JobResult(exc.exit_code, err, {"exit": exc.exit_code, "error": type(exc).__name__})


# -- corpus ---------------------------------------------------------------------

def _compare(expect, summary):
    problems = []
    for key, want in sorted(expect.items()):
        have = summary.get(key, "<missing>")
        if isinstance(want, float) and isinstance(have, (int, float)):
            ok = math.isclose(have, want, rel_tol=1e-6, abs_tol=1e-9)
        else:
            ok = have == want
        if not ok:
            problems.append(f"{key}: expected {want!r}, got {have!r}")
    return problems


def _run_file(path):
    t0 = time.perf_counter()
    name = Path(path).stem
    try:
        spec = JobSpec.from_json(json.loads(Path(path).read_text()), name=name)
    except (InvliftError, ValueError, TypeError) as exc:
        return {"name": name, "status": "FAIL", "detail": f"bad job file: {exc}", "seconds": 0.0}
    if spec.subcommand == "run-corpus":
        return {"name": spec.name, "status": "FAIL", "detail": "nested corpus jobs are not allowed",
                "seconds": 0.0}
    res = run_job(spec)
    expect = dict(spec.expect or {})
    expect.setdefault("exit", 0)
    problems = _compare(expect, res.summary)
    return {"name": spec.name, "subcommand": spec.subcommand,
            "status": "FAIL" if problems else "PASS", "detail": "; ".join(problems),
            "seconds": round(time.perf_counter() - t0, 3)}


def run_corpus(directory, workers: int = 1):
    """Run every ``*.json`` job in a directory and compare with its expectations."""
    d = Path(directory)
    if not d.is_dir():
        raise InputError(f"corpus directory {directory!r} does not exist")
    files = sorted(str(p) for p in d.glob("*.json"))
    if workers > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as pool:
            return list(pool.map(_run_file, files))
    return [_run_file(f) for f in files]


def format_table(table) -> str:
    if not table:
        return "no jobs\n"
    width = max(len(r["name"]) for r in table)
    lines = [f"{'job'.ljust(width)}  status  seconds  detail"]
    for r in table:
        lines.append(f"{r['name'].ljust(width)}  {r['status']:<6}  {r['seconds']:>7.3f}  {r['detail']}")
    fails = sum(r["status"] != "PASS" for r in table)
    lines.append(f"{len(table) - fails} passed, {fails} failed")
    return "\n".join(lines) + "\n"


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()
