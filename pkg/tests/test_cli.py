import json
import subprocess
import sys
from pathlib import Path

import pytest

from invlift.cli import main
from invlift.desingularizer import ResolutionTree
from invlift.errors import InputError
from invlift.jobs import JobOptions, JobSpec, dumps, format_table, run_corpus, run_job
from invlift.lifter import LiftChart
from invlift.weak import VerificationReport, WeakLift

LIFTER_EXAMPLES = {
    "sc2_square_root": {"subcommand": "lift-curve", "system": {"family": "symmetric_complex", "n": 2},
                        "input": {"f": ["0", "-t"]},
                        "expect": {"chart_count": 2, "gammas": [[2]], "residual": "exact"}},
    "sc2_split": {"subcommand": "lift-curve", "system": {"family": "symmetric_complex", "n": 2},
                  "input": {"f": ["t+t^2", "t^3"]},
                  "expect": {"chart_count": 1, "gammas": [], "residual": "exact"}},
    "b1_square": {"subcommand": "lift-curve", "system": {"family": "signed_perm_real", "n": 1},
                  "input": {"f": ["t^2"]},
                  "expect": {"chart_count": 1, "power_free": True, "residual": "exact"}},
}


def _write_corpus(directory, jobs):
    directory.mkdir(exist_ok=True)
    for name, job in jobs.items():
        (directory / f"{name}.json").write_text(json.dumps(job))
    return directory


def _cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- jobs -----------------------------------------------------------------------

def test_describe_c3():
    res = run_job(JobSpec("describe", {"family": "symmetric_complex", "n": 3}))
    assert res.exit_code == 0
    assert res.summary["degrees"] == [1, 2, 3]
    assert res.summary["D"] == 6


def test_lift_curve_two_charts():
    spec = JobSpec.from_json(LIFTER_EXAMPLES["sc2_square_root"])
    res = run_job(spec)
    assert res.exit_code == 0
    assert res.summary["chart_count"] == 2
    assert res.summary["gammas"] == [[2]]
    for obj in res.result["charts"]:
        ch = LiftChart.from_json(obj)
        assert ch.to_json() == obj


def test_membership_outside_is_success():
    res = run_job(JobSpec("check-membership", {"family": "signed_perm_real", "n": 1}, {"z": ["-1"]}))
    assert res.exit_code == 0
    assert res.result["verdict"] == "outside"


def test_resolve_round_trip():
    res = run_job(JobSpec("resolve", payload={"f": ["y^2-x^3"]}))
    assert res.exit_code == 0 and res.summary["descent_ok"]
    tree = ResolutionTree.from_json(res.result["tree"])
    assert tree.to_json() == res.result["tree"]


def test_section_and_verify_round_trip(tmp_path):
    opts = JobOptions(grid=8, grid_levels=[3, 5])
    res = run_job(JobSpec("section", {"family": "signed_perm_real", "n": 1},
                          {"center": ["1"], "box": ["1/2"]}, opts))
    assert res.exit_code == 0
    wl = WeakLift.from_json(res.result["weak_lift"])
    assert wl.to_json() == res.result["weak_lift"]
    report = VerificationReport.from_json(res.result["report"])
    assert report.to_json() == res.result["report"]
    path = tmp_path / "section.json"
    path.write_text(dumps(res.document()))
    again = run_job(JobSpec("verify-lift", payload={"weak_lift_path": str(path)}, options=opts))
    assert again.exit_code == 0
    assert again.summary["verdicts.residual"] == "pass"


def test_determinism():
    spec = JobSpec.from_json(LIFTER_EXAMPLES["sc2_square_root"])
    a, b = dumps(run_job(spec).document()), dumps(run_job(spec).document())
    assert a == b
    assert '"invlift"' in a


def test_no_json_floats():
    spec = JobSpec("verify-lift", {"family": "symmetric_complex", "n": 2}, {"f": ["0", "-t"]},
                   JobOptions(grid_levels=[4, 6]))
    text = dumps(run_job(spec).document())

    def walk(v):
        assert not isinstance(v, float)
        if isinstance(v, dict):
            for w in v.values():
                walk(w)
        elif isinstance(v, list):
            for w in v:
                walk(w)

    walk(json.loads(text))


def test_job_spec_round_trip():
    spec = JobSpec.from_json(LIFTER_EXAMPLES["b1_square"], name="b1")
    assert JobSpec.from_json(spec.to_json()) == spec


@pytest.mark.parametrize("options", [{"precision": 8}, {"truncation": 1}, {"budget": 0},
                                     {"grid_levels": [5, 3]}, {"tol": 2.0}, {"colour": "red"}])
def test_option_ranges(options):
    with pytest.raises(InputError):
        JobSpec.from_json({"subcommand": "describe", "options": options})


@pytest.mark.parametrize("spec,code", [
    (JobSpec("describe"), 2),
    (JobSpec("lift-curve", {"family": "signed_perm_real", "n": 1}, {"f": ["-1-t"]}), 2),
    (JobSpec("lift-curve", {"family": "symmetric_complex", "n": 2}, {"f": ["0", "-t^5"], "trunc": "6"}), 3),
    (JobSpec("resolve", payload={"f": ["x^2-y^2"]}, options=JobOptions(budget=2)), 4),
    (JobSpec("lift-curve", {"family": "e8", "n": 8}, {"f": ["t"]}), 2),
])
def test_exit_codes(spec, code):
    res = run_job(spec)
    assert res.exit_code == code
    assert "error" in res.result


# -- corpus ---------------------------------------------------------------------

def test_empty_corpus(tmp_path):
    assert run_corpus(tmp_path) == []
    assert format_table([]) == "no jobs\n"
    res = run_job(JobSpec("run-corpus", payload={"dir": str(tmp_path)}))
    assert res.exit_code == 0


def test_lifter_examples_corpus(tmp_path):
    table = run_corpus(_write_corpus(tmp_path / "c", LIFTER_EXAMPLES))
    assert [r["status"] for r in table] == ["PASS"] * 3


def test_wrong_expectation_is_reported(tmp_path):
    jobs = dict(LIFTER_EXAMPLES)
    bad = json.loads(json.dumps(jobs["sc2_square_root"]))
    bad["expect"]["chart_count"] = 3
    jobs["sc2_wrong"] = bad
    d = _write_corpus(tmp_path / "c", jobs)
    table = run_corpus(d)
    fails = [r for r in table if r["status"] == "FAIL"]
    assert [r["name"] for r in fails] == ["sc2_wrong"]
    assert "chart_count" in fails[0]["detail"]
    assert "3 passed, 1 failed" in format_table(table)
    assert run_job(JobSpec("run-corpus", payload={"dir": str(d)})).exit_code == 1


def test_parallel_corpus_matches_serial(tmp_path):
    d = _write_corpus(tmp_path / "c", LIFTER_EXAMPLES)
    strip = lambda t: [(r["name"], r["status"]) for r in t]  # noqa: E731
    assert strip(run_corpus(d, workers=2)) == strip(run_corpus(d))


# -- command line ------------------------------------------------------------------

def test_cli_describe(capsys):
    code, out, _ = _cli(capsys, "describe", "--family", "symmetric_complex", "--n", "3")
    assert code == 0
    assert json.loads(out)["result"]["D"] == 6


def test_cli_lift_curve_csv(capsys):
    code, out, _ = _cli(capsys, "lift-curve", "--family", "symmetric_complex", "--n", "2",
                        "--f", "0", "--f=-t", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "chart,component,exponent,coefficient"
    assert {line.split(",")[0] for line in lines[1:]} == {"0", "1"}


def test_cli_job_file_and_out(tmp_path, capsys):
    job = tmp_path / "job.json"
    job.write_text(json.dumps(LIFTER_EXAMPLES["sc2_split"]))
    out = tmp_path / "out.json"
    code, stdout, _ = _cli(capsys, "lift-curve", "--job", str(job), "--out", str(out))
    assert code == 0 and stdout == ""
    assert len(json.loads(out.read_text())["result"]["charts"]) == 1


def test_cli_job_file_subcommand_mismatch(tmp_path, capsys):
    job = tmp_path / "job.json"
    job.write_text(json.dumps(LIFTER_EXAMPLES["sc2_split"]))
    code, _, err = _cli(capsys, "resolve", "--job", str(job))
    assert code == 2 and "lift-curve" in err


def test_cli_membership(capsys):
    code, out, _ = _cli(capsys, "check-membership", "--family", "signed_perm_real", "--n", "1", "--z", "-1")
    assert code == 0
    assert json.loads(out)["result"]["verdict"] == "outside"


def test_cli_bad_precision(capsys):
    code, _, err = _cli(capsys, "describe", "--family", "symmetric_complex", "--n", "2", "--precision", "4")
    assert code == 2 and "precision" in err


def test_cli_run_corpus_table(tmp_path, capsys):
    d = _write_corpus(tmp_path / "c", LIFTER_EXAMPLES)
    code, out, _ = _cli(capsys, "run-corpus", str(d))
    assert code == 0
    assert out.splitlines()[-1] == "3 passed, 0 failed"


def test_console_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "invlift.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "INVLIFT_MAX_PRECISION" in proc.stdout
    for flag in ("lift-curve", "run-corpus", "verify-lift"):
        assert flag in proc.stdout


def test_shipped_corpus_passes():
    corpus = Path(__file__).resolve().parent.parent / "corpus"
    table = run_corpus(corpus, workers=2)
    assert len(table) >= 30
    assert [r["name"] for r in table if r["status"] != "PASS"] == []
