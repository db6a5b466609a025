import json

import pytest

from lagcrit.cli import EXIT_OK, EXIT_USAGE, main
from lagcrit.corpus import CBRT4, get_case
from lagcrit.problemfile import ProblemFileError, format_problem, parse_problem


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def export(tmp_path):
    def _export(case_id):
        path = tmp_path / f"{case_id}.txt"
        path.write_text(get_case(case_id).problem_file())
        return str(path)

    return _export


class TestProblemFile:
    def test_missing_objective(self):
        with pytest.raises(ProblemFileError, match="objective"):
            parse_problem("vars: x1 x2\nconstraint: x1\n")

    def test_parse_error_line(self):
        with pytest.raises(ProblemFileError, match="line 2"):
            parse_problem("vars: x1 x2\nobjective: x1 +* x2\nconstraint: x1\n")

    def test_box_count(self):
        with pytest.raises(ProblemFileError):
            parse_problem("vars: x1 x2\nobjective: x1\nconstraint: x2\nbox: 0 1\n")

    def test_format_round_trip(self):
        p = get_case("min-area-box").problem
        assert parse_problem(format_problem(p, "min area")) == p


class TestSolve:
    def test_cone_plane(self, capsys, export):
        code, out, _ = run(capsys, "solve", export("cone-plane"), "--json")
        assert code == EXIT_OK
        (pt,) = json.loads(out)["critical_points"]
        assert pt["verdict"] == "StrictLocalMin"
        assert pt["f_value"] == pytest.approx(1, abs=1e-12)

    def test_cubic_parabola_values(self, capsys, export):
        code, out, _ = run(capsys, "solve", export("cubic-parabola"), "--json")
        pts = json.loads(out)["critical_points"]
        assert [p["f_value"] for p in pts] == pytest.approx([-5 / 27, 1], abs=1e-12)
        assert pts[0]["specialized_check"]["witnesses"]["vHv"] == pytest.approx(4)

    def test_text_output(self, capsys, export):
        code, out, _ = run(capsys, "solve", export("cubic-parabola"))
        assert code == EXIT_OK
        assert "StrictLocalMax" in out and "not exhaustive" in out

    def test_missing_objective(self, capsys, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("vars: x1 x2\nconstraint: x1\n")
        code, _, err = run(capsys, "solve", str(path))
        assert code == EXIT_USAGE
        assert "objective" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "solve", str(tmp_path / "absent.txt"))
        assert code == EXIT_USAGE and err

    def test_json_floats_round_trip(self, capsys, export):
        _, out, _ = run(capsys, "solve", export("min-area-box"), "--json")
        (pt,) = json.loads(out)["critical_points"]
        assert pt["lambda"][0] == pytest.approx(-2 * CBRT4, abs=1e-12)
        assert pt["f_value"] == pytest.approx(3 * CBRT4, abs=1e-12)

    def test_no_points_found(self, capsys, tmp_path):
        path = tmp_path / "flat.txt"
        path.write_text("vars: x1 x2\nobjective: x1\nconstraint: x2\n")
        code, out, _ = run(capsys, "rank", str(path), "--json")
        rep = json.loads(out)
        assert code == EXIT_OK
        assert rep["critical_points"] == [] and rep["ranking"]["order"] == []
        assert rep["ranking"]["warnings"]


class TestRank:
    def test_septic_warns(self, capsys, export):
        code, out, _ = run(capsys, "rank", export("septic-saddles"), "--json")
        rep = json.loads(out)
        first = rep["critical_points"][rep["ranking"]["order"][0]]
        assert first["f_value"] == pytest.approx(0, abs=1e-12)
        assert first["verdict"] != "StrictLocalMin"
        assert any("not a strict local minimizer" in w for w in rep["ranking"]["warnings"])
        assert rep["ranking"]["caveats"]

    def test_min_area_single(self, capsys, export):
        _, out, _ = run(capsys, "rank", export("min-area-box"), "--json")
        rep = json.loads(out)
        assert rep["ranking"]["order"] == [0]
        assert rep["critical_points"][0]["f_value"] == pytest.approx(3 * CBRT4, abs=1e-12)
        assert rep["ranking"]["warnings"] == []

    def test_text(self, capsys, export):
        _, out, _ = run(capsys, "rank", export("septic-saddles"))
        assert "caveats:" in out


class TestCorpusCommand:
    def test_list(self, capsys):
        code, out, _ = run(capsys, "corpus", "list")
        assert code == EXIT_OK and len(out.strip().splitlines()) == 5

    def test_export_unknown(self, capsys):
        assert run(capsys, "corpus", "export", "nope")[0] == EXIT_USAGE

    def test_export_then_solve_matches_case(self, capsys, tmp_path):
        code, out, _ = run(capsys, "corpus", "export", "septic-saddles")
        path = tmp_path / "s.txt"
        path.write_text(out)
        _, out, _ = run(capsys, "solve", str(path), "--json")
        xs = [p["x"][0] for p in json.loads(out)["critical_points"]]
        assert xs == pytest.approx([0, 1, 1.5, 3], abs=1e-6)


class TestCheckGrad:
    def test_ok(self, capsys, export):
        code, out, _ = run(capsys, "check-grad", export("min-area-box"), "--point", "1,2,0.5")
        assert code == EXIT_OK and "max relative error" in out

    def test_domain_error(self, capsys, tmp_path):
        path = tmp_path / "ln.txt"
        path.write_text("vars: x y\nobjective: ln(x)\nconstraint: x - y\n")
        code, out, _ = run(capsys, "check-grad", str(path), "--point=-1,0")
        assert code == EXIT_USAGE and "domain error" in out

    def test_bad_point(self, capsys, export):
        code, _, _ = run(capsys, "check-grad", export("cone-plane"), "--point", "1,2")
        assert code == EXIT_USAGE

