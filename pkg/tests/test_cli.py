import json
import math
import pathlib

import pytest

from tvlaplace.cli import main, run
from tvlaplace.errors import ReportIOError, ScenarioError
from tvlaplace.lorentz import quasinorm_marcinkiewicz
from tvlaplace.scenario import DEFAULT_OPTIONS, SCHEMA, load_scenario, parse_scenario

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
EXPECTED = json.loads((SCENARIOS / "expected_exit_codes.json").read_text())

BOUN = {
    "command": "solve",
    "N": 3,
    "R": 1,
    "terms": [{"c": 2, "q": 1}, {"c": 2, "q": 0.5}],
    "growth": {"family": "constant", "m": 1},
}


def write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestParseScenario:
    def test_defaults_filled_in(self):
        s = parse_scenario(BOUN)
        assert s.command == "solve"
        assert s.options["q"] == 3.0
        for key in ("grid", "tol", "policy", "envelope", "bumps"):
            assert s.options[key] == DEFAULT_OPTIONS[key]
        assert s.document["terms"][0] == {"c": 2.0, "q": 1.0, "a": 0.0, "b": 1.0}

    def test_accepts_json_text(self):
        assert parse_scenario(json.dumps(BOUN)).datum == parse_scenario(BOUN).datum

    def test_input_not_mutated(self):
        doc = json.loads(json.dumps(BOUN))
        parse_scenario(doc)
        assert doc == BOUN

    @pytest.mark.parametrize(
        "patch,match",
        [
            ({"command": "plot"}, "command"),
            ({"N": 2.5}, "N"),
            ({"terms": [{"c": 1}]}, "terms/0"),
            ({"terms": [{"c": 1, "q": 0.5, "d": 0}]}, "terms/0"),
            ({"growth": {"family": "cubic"}}, "growth/family"),
            ({"options": {"grid": 1}}, "options/grid"),
            ({"options": {"tol": 0}}, "options/tol"),
            ({"options": {"verbose": True}}, "options"),
            ({"extra": 1}, "<root>"),
        ],
    )
    def test_schema_errors(self, patch, match):
        with pytest.raises(ScenarioError, match=match):
            parse_scenario({**BOUN, **patch})

    def test_missing_required(self):
        doc = dict(BOUN)
        del doc["growth"]
        with pytest.raises(ScenarioError, match="growth"):
            parse_scenario(doc)

    def test_invalid_json(self):
        with pytest.raises(ScenarioError, match="not valid JSON"):
            parse_scenario("{")

    def test_semantic_errors(self):
        with pytest.raises(ScenarioError, match="nonnegative"):
            parse_scenario({**BOUN, "terms": [{"c": -1, "q": 0.5}]})
        with pytest.raises(ScenarioError, match="exponent"):
            parse_scenario({**BOUN, "terms": [{"c": 1, "q": 1.5}]})
        with pytest.raises(ScenarioError, match="schedule"):
            parse_scenario({**BOUN, "command": "converge"})

    def test_shipped_schema_is_current(self):
        assert json.loads((ROOT / "docs" / "scenario.schema.json").read_text()) == SCHEMA

    def test_missing_file(self, tmp_path):
        with pytest.raises(ReportIOError, match="cannot read scenario"):
            load_scenario(tmp_path / "absent.json")


class TestShippedScenarios:
    def test_every_scenario_has_an_expectation(self):
        shipped = {p.name for p in SCENARIOS.glob("*.json")} - {"expected_exit_codes.json"}
        assert shipped == set(EXPECTED)

    @pytest.mark.parametrize("name", sorted(EXPECTED))
    def test_exit_code(self, name, tmp_path):
        out = tmp_path / "out"
        code = main(["run", "--scenario", str(SCENARIOS / name), "--out", str(out)])
        assert code == EXPECTED[name]
        report = json.loads((out / "report.json").read_text())
        assert report["exit_code"] == code
        assert ("error" in report) == (code != 0)


class TestMain:
    def test_deterministic_report(self, tmp_path):
        path = write(tmp_path, BOUN)
        texts = []
        for k in range(2):
            out = tmp_path / f"run{k}"
            assert main(["solve", "--scenario", path, "--out", str(out)]) == 0
            texts.append(((out / "report.json").read_bytes(), (out / "solution.csv").read_bytes()))
        assert texts[0] == texts[1]

    def test_stdout_without_out(self, tmp_path, capsys):
        path = write(tmp_path, {**BOUN, "command": "classify"})
        assert main(["run", "--scenario", path]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["command"] == "classify"
        assert report["result"]["growth_class"]["tag"] == "StandardBounded"

    def test_command_override(self, tmp_path, capsys):
        path = write(tmp_path, BOUN)
        assert main(["norms", "--scenario", path]) == 0
        report = json.loads(capsys.readouterr().out)
        res = report["result"]
        assert res["quasinorm_marcinkiewicz"] == quasinorm_marcinkiewicz(parse_scenario(BOUN).datum, 3.0)
        # f >= 2/r and t mu(t)^(1/3) = 2 C_3^(1/3) for 2/r
        assert res["quasinorm_marcinkiewicz"] >= 2 * (4 * math.pi / 3) ** (1 / 3)

    def test_options_override(self, tmp_path):
        path = write(tmp_path, BOUN)
        out = tmp_path / "out"
        assert main(["solve", "--scenario", path, "--out", str(out), "--grid", "17"]) == 0
        assert len((out / "solution.csv").read_text().splitlines()) == 18

    def test_schema_error_exit(self, tmp_path, capsys):
        path = write(tmp_path, {**BOUN, "N": "three"})
        assert main(["run", "--scenario", path]) == 2
        assert "N" in capsys.readouterr().err

    def test_missing_scenario_exit(self, tmp_path, capsys):
        assert main(["run", "--scenario", str(tmp_path / "absent.json")]) == 7
        assert "absent.json" in capsys.readouterr().err

    def test_out_under_regular_file_exit(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        path = write(tmp_path, BOUN)
        assert main(["solve", "--scenario", path, "--out", str(blocker / "out")]) == 7

    def test_unknown_command_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["plot", "--scenario", write(tmp_path, BOUN)])
        assert exc.value.code == 2

    def test_unknown_tamper(self, tmp_path):
        doc = {**BOUN, "command": "verify", "options": {"tamper": "nope"}}
        assert main(["run", "--scenario", write(tmp_path, doc)]) == 2


class TestCandidateRoundTrip:
    def test_solution_table_verifies(self, tmp_path):
        out = tmp_path / "solve"
        assert main(["solve", "--scenario", write(tmp_path, BOUN), "--out", str(out)]) == 0
        doc = {**BOUN, "command": "verify", "options": {"candidate": str(out / "solution.csv"), "tol": 1e-4}}
        report, code = run(parse_scenario(doc))
        assert code == 0, report.get("error")
        assert report["result"]["subject"].startswith("candidate:")
        assert report["result"]["max_residual"] < 1e-4

    def test_malformed_candidate(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("r,h\n0.1,1\n")
        doc = {**BOUN, "command": "verify", "options": {"candidate": str(bad)}}
        assert main(["run", "--scenario", write(tmp_path, doc)]) == 2

    def test_missing_candidate(self, tmp_path):
        doc = {**BOUN, "command": "verify", "options": {"candidate": str(tmp_path / "none.csv")}}
        assert main(["run", "--scenario", write(tmp_path, doc)]) == 7


class TestReportContent:
    def test_solve_report(self):
        report, code = run(parse_scenario(BOUN))
        assert code == 0
        res = report["result"]
        assert res["boundary"]["kind"] == "StrongTrace"
        # h = int_r^1 2 rho^(-1/2) d rho = 4 - 4 sqrt(r)
        assert res["profile"]["unbounded_at_origin"] is False
        assert res["total_variation"] == pytest.approx(16 * math.pi / 5, rel=1e-10)

    def test_nonexistence_report(self):
        doc = {**BOUN, "terms": [{"c": 2, "q": 1}, {"c": 2, "q": 0}], "growth": {"family": "rational2"}}
        report, code = run(parse_scenario(doc))
        assert code == 5
        assert report["error"]["kind"] == "NonexistenceError"

    def test_converge_csv(self, tmp_path):
        doc = {
            "command": "converge", "N": 3, "R": 1, "terms": [{"c": 5, "q": 1}],
            "growth": {"family": "constant", "m": 1},
            "options": {"schedule": {"scheme": "TruncateDatum", "params": [10, 100]}},
        }
        report, code = run(parse_scenario(doc), str(tmp_path))
        assert code == 0
        assert (tmp_path / "convergence.csv").read_text().startswith("param,error,bv_bound,feasible")
        errs = [row["error"] for row in report["result"]["rows"]]
        assert errs[1] < errs[0] and all(math.isfinite(e) for e in errs)
