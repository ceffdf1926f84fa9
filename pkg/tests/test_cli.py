import json

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import A42, WORKED, WORKED_LV
from kcoop.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return _write


def run(runner, *args, input=None):
    result = runner.invoke(main, [str(a) for a in args], input=input)
    payload = json.loads(result.stdout) if result.stdout.strip() else None
    return result, payload


def numeric_text(a):
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in a)


class TestClassify:
    def test_worked_example(self, runner, write):
        result, doc = run(runner, "classify", write("m.txt", WORKED))
        assert result.exit_code == 0
        assert doc["schema_version"] == 1
        assert doc["verdict"] == "structurally-even-positive"
        assert doc["zeta"] == 1
        assert len(doc["graph"]["edges"]) == 6

    def test_numeric_input(self, runner, write):
        a = [[0, 1, 0, -1], [1, 0, 1, 0], [0, 1, 0, 1], [-1, 0, 1, 0]]
        result, doc = run(runner, "classify", write("m.txt", numeric_text(a)))
        assert result.exit_code == 0
        assert doc["verdict"] == "structurally-even-positive"

    def test_forced_modes(self, runner, write):
        path = write("m.txt", "1 0 0 1\n1 1 1 0\n0 0 1 -1\n1 0 -1 1")
        _, auto = run(runner, "classify", path)
        _, numeric = run(runner, "classify", "--numeric", path)
        assert auto == numeric
        result, _ = run(runner, "classify", "--symbolic", path)
        assert result.exit_code == 2

    def test_tol_zeroes_small_entries(self, runner, write):
        a = np.array([[0, 1, 1e-4, -1], [1, 0, 1, 0], [0, 1, 0, 1], [-1, 0, 1, 0]], dtype=float)
        path = write("m.txt", numeric_text(a))
        assert run(runner, "classify", path)[0].exit_code == 1
        assert run(runner, "classify", "--tol", "1e-3", path)[0].exit_code == 0

    def test_json_matrix_and_stdin(self, runner, worked):
        text = json.dumps(worked.to_json())
        result, doc = run(runner, "classify", "-", input=text)
        assert result.exit_code == 0
        assert doc["verdict"] == "structurally-even-positive"

    def test_star_graph(self, runner, write):
        m = "* + + +\n+ * 0 0\n+ 0 * 0\n+ 0 0 *"
        result, doc = run(runner, "classify", write("m.txt", m))
        assert result.exit_code == 1
        assert doc["verdict"] == "not-structurally-k-positive"
        assert any(d.startswith("degree-constraint:") for d in doc["diagnostics"])

    def test_dot_export(self, runner, write, tmp_path):
        dot = tmp_path / "g.dot"
        result, _ = run(runner, "classify", write("m.txt", WORKED), "--dot", dot)
        assert result.exit_code == 0
        assert dot.read_text().startswith("digraph")

    @pytest.mark.parametrize("text", ["* +\n+ *", "* + 0\n+ *", "", "a b\nc d"])
    def test_bad_input(self, runner, write, text):
        assert run(runner, "classify", write("m.txt", text))[0].exit_code == 2

    def test_missing_file(self, runner, tmp_path):
        result, _ = run(runner, "classify", tmp_path / "nope.txt")
        assert result.exit_code == 2
        assert "cannot read" in result.stderr

    def test_output_file_and_verbose(self, runner, write, tmp_path):
        out = tmp_path / "out.json"
        result = runner.invoke(main, ["-v", "-o", str(out), "classify", write("m.txt", WORKED)])
        assert result.exit_code == 0
        assert result.stdout == ""
        assert "structurally-even-positive" in result.stderr
        assert json.loads(out.read_text())["zeta"] == 1


class TestTransform:
    def test_even(self, runner, write):
        result, doc = run(runner, "transform", write("m.txt", WORKED), "--parity", "even")
        assert result.exit_code == 0
        assert sorted(w["permutation"] for w in doc["witnesses"]) == [[2, 3, 4, 1], [3, 2, 1, 4]]
        assert sorted(doc["relabelings"]) == ["y1=x3, y2=x2, y3=x1, y4=x4",
                                              "y1=x4, y2=x1, y3=x2, y4=x3"]
        assert doc["transformed"]["n"] == 4

    def test_odd_absent(self, runner, write):
        result, doc = run(runner, "transform", write("m.txt", WORKED), "--parity", "odd")
        assert result.exit_code == 1
        assert doc["witnesses"] == []

    def test_signature_example(self, runner, write):
        m = "* 0 0 +\n- * - 0\n0 0 * -\n+ 0 - *"
        result, doc = run(runner, "transform", write("m.txt", m), "--parity", "even")
        assert result.exit_code == 0
        assert all(w["signature"] == [1, -1, 1, 1] for w in doc["witnesses"])

    def test_parity_required(self, runner, write):
        assert run(runner, "transform", write("m.txt", WORKED))[0].exit_code == 2


class TestEnumerate:
    def test_with_oracle(self, runner, write):
        result, doc = run(runner, "enumerate", write("m.txt", WORKED), "--parity", "even", "--oracle")
        assert result.exit_code == 0
        assert doc["constructive_count"] == 2
        assert doc["oracle"] == {"identity_signature_permutations": 2, "transforms": 16}
        assert doc["agree"] is True

    def test_none_found(self, runner, write):
        result, doc = run(runner, "enumerate", write("m.txt", WORKED), "--parity", "odd")
        assert result.exit_code == 1
        assert doc["constructive_count"] == 0

    def test_path_annotation(self, runner, write):
        m = "* + 0 0\n+ * + 0\n0 + * +\n0 0 + *"
        result, doc = run(runner, "enumerate", write("m.txt", m), "--parity", "odd", "--oracle")
        assert result.exit_code == 0
        assert doc["constructive_count"] == 8
        assert any("path topology" in a for a in doc["annotations"])

    def test_oracle_size_limit(self, runner, write):
        m = "\n".join(" ".join("*" if i == j else "0" for j in range(10)) for i in range(10))
        assert run(runner, "enumerate", write("m.txt", m), "--parity", "odd", "--oracle")[0].exit_code == 2


class TestVerify:
    def test_canonical_instance(self, runner, write):
        a = [[-1, 1, 0, -1], [1, -1, 1, 0], [0, 1, -1, 1], [-1, 0, 1, -1]]
        result, doc = run(runner, "verify", write("a.txt", numeric_text(a)), "--k", 2,
                          "--samples", 50, "--horizon", 3)
        assert result.exit_code == 0
        assert doc["violations"] == []
        assert doc["seed"] == 42 and doc["samples"] == 50
        assert doc["pattern_parity"] == "even"

    def test_zero_matrix(self, runner, write):
        result, _ = run(runner, "verify", write("a.txt", numeric_text(np.zeros((4, 4)))),
                        "--k", 3, "--samples", 10, "--horizon", 1)
        assert result.exit_code == 0

    def test_violation(self, runner, write):
        a = [[-1, 1, 2, -1], [1, -1, 1, 0], [0, 1, -1, 1], [-1, 0, 1, -1]]
        result, doc = run(runner, "verify", write("a.txt", numeric_text(a)), "--k", 2,
                          "--samples", 200, "--horizon", 10)
        assert result.exit_code == 1
        assert doc["violations"]

    @pytest.mark.parametrize("args", [["--k", 4], ["--k", 0], ["--k", 2, "--dt", 0]])
    def test_bad_arguments(self, runner, write, args):
        path = write("a.txt", numeric_text(np.eye(4)))
        assert run(runner, "verify", path, *args)[0].exit_code == 2

    def test_symbolic_rejected(self, runner, write):
        assert run(runner, "verify", write("a.txt", A42), "--k", 2)[0].exit_code == 2

    def test_deterministic(self, runner, write):
        path = write("a.txt", numeric_text([[-1, 1, 2, -1], [1, -1, 1, 0],
                                            [0, 1, -1, 1], [-1, 0, 1, -1]]))
        args = ["verify", path, "--k", "2", "--samples", "30", "--horizon", "2", "--seed", "7"]
        assert runner.invoke(main, args).stdout == runner.invoke(main, args).stdout


class TestLV:
    def test_worked_pattern(self, runner, write):
        result, doc = run(runner, "lv", write("s.json", json.dumps(WORKED_LV)), "--pairs", 30)
        assert result.exit_code == 0
        assert doc["k"] == 2
        assert doc["structural"]["verdict"] == "structurally-even-positive"
        assert doc["empirical"]["violations"] == []

    def test_mixed_sign_pair(self, runner, write):
        sys = {"r": [1, 1, 1, 1], "A": (-np.eye(4)).tolist()}
        sys["A"][0][1], sys["A"][1][0] = 0.5, -0.5
        result, doc = run(runner, "lv", write("s.json", json.dumps(sys)))
        assert result.exit_code == 1
        assert any(d.startswith("sign-symmetry:") for d in doc["structural"]["diagnostics"])

    def test_dimension_mismatch(self, runner, write):
        sys = {"r": [1, 1, 1], "A": (-np.eye(4)).tolist()}
        assert run(runner, "lv", write("s.json", json.dumps(sys)))[0].exit_code == 2

    def test_wrong_parity_k(self, runner, write):
        result, doc = run(runner, "lv", write("s.json", json.dumps(WORKED_LV)), "--k", 1)
        assert result.exit_code == 1
        assert "no witness" in doc["error"]

    def test_export(self, runner, write, tmp_path):
        csv_path = tmp_path / "traj.csv"
        result, doc = run(runner, "lv", write("s.json", json.dumps(WORKED_LV)), "--pairs", 5,
                          "--horizon", 1, "--export-traj", csv_path)
        assert result.exit_code == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "t,x1,x2,x3,x4"
        assert len(lines) == 1002


class TestSignvar:
    @pytest.mark.parametrize("values, expected", [
        (["1", "0", "-2.5", "0", "0", "3"], (2, 4)),
        (["0", "0", "0"], (0, 2)),
        (["1", "1", "1"], (0, 0)),
        (["1 -1 1"], (2, 2)),
    ])
    def test_values(self, runner, values, expected):
        result, doc = run(runner, "signvar", *values)
        assert result.exit_code == 0
        assert (doc["s_minus"], doc["s_plus"]) == expected

    def test_tol(self, runner):
        _, doc = run(runner, "signvar", "1", "-1e-12", "1", "--tol", "1e-9")
        assert doc["s_minus"] == 0

    @pytest.mark.parametrize("values", [["x"], ["nan"], ["1", "inf"]])
    def test_bad(self, runner, values):
        assert run(runner, "signvar", *values)[0].exit_code == 2
