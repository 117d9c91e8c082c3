import csv
import io
import json
import subprocess
import sys

import pytest

from brwext import experiments as ex
from brwext.cli import main
from brwext.errors import PreconditionError
from brwext.model import load_model, shipped_models


def rows_ok(result):
    return all(r.lower <= r.upper for r in result.rows)


class TestExperiments:
    def test_lemma_countable(self):
        res = ex.exp_lemma_countable(schedule=(10, 20, 30))
        assert not res.unresolved and rows_ok(res)
        assert [v["order"] for v in res.verdicts] == ["<", "<", "<"]
        assert res.rows[0].radius == 20

    def test_uncountable_order_follows_binary_value(self):
        res = ex.exp_uncountable(I1=(1,), I2=(2,), schedule=(20, 30))
        v = res.verdicts[0]
        assert v["verdict"] == ex.DISTINCT and v["order_matches"]
        assert res.extra["finite_union_identity"]["holds"]

    def test_uncountable_rejects_equal_values(self):
        # {1} and {2, 3, 4, ...} share the binary value 1/2
        with pytest.raises(PreconditionError):
            ex.exp_uncountable(I1=(1,), I2=ex.IndexUnion([2], tail=3), schedule=(10,))

    def test_line_extinction(self):
        res = ex.exp_line_extinction(n_max=4, radius=30)
        assert res.extra["nondecreasing"] and all(res.extra["above_qbar"])
        assert rows_ok(res)

    def test_loop(self):
        res = ex.exp_loop(schedule=(20, 30))
        assert not res.unresolved and res.extra["local_survival"]

    def test_comb(self):
        res = ex.exp_comb(schedule=(20, 30))
        assert not res.unresolved
        assert res.extra["q_transport"]["overlap"]

    def test_boundary_counterexample(self):
        res = ex.exp_boundary_counterexample(schedule=(20, 30))
        assert res.verdicts[0]["verdict"] == ex.DISTINCT
        assert res.extra["at_most_one"] and res.extra["at_least_qbar"]

    def test_finite_two_points(self):
        model, doc = load_model("finite_supercritical")
        res = ex.exp_finite_two_points(model, starts=40, model_doc=doc)
        assert res.extra["count"] == 2

    def test_bad_schedule(self):
        with pytest.raises(PreconditionError):
            ex.exp_lemma_countable(schedule=(20, 10))

    def test_compare_states(self):
        a = ex.Row("a", "0", 10, 0.1, 0.2, True)
        b = ex.Row("b", "1", 10, 0.3, 0.4, True)
        assert ex.compare(a, b)["verdict"] == ex.DISTINCT
        assert ex.compare(a, ex.Row("c", "2", 10, 0.15, 0.25, True))["verdict"] == ex.UNRESOLVED
        tight = ex.Row("d", "3", 10, 0.5, 0.5 + 1e-7, True)
        assert ex.compare(tight, ex.Row("e", "4", 10, 0.5, 0.5 + 1e-7, True))["verdict"] == ex.EQUAL
        assert ex.compare(a, ex.Row("f", "5", 10, 0.3, 0.4, False))["verdict"] == ex.UNRESOLVED


class TestProvenance:
    def test_fields(self):
        prov = ex.exp_lemma_countable(n_max=1, schedule=(20,)).provenance
        assert set(prov) >= {"model", "R_schedule", "tolerance", "max_iterations", "versions", "timestamp"}
        assert prov["model"]["family"] == "tree" and prov["R_schedule"] == [20]
        assert set(prov["versions"]) >= {"brwext", "numpy", "scipy", "python"}


class TestCli:
    def run(self, capsys, *argv):
        code = main(list(argv))
        return code, capsys.readouterr().out

    def test_solve_csv(self, capsys):
        code, out = self.run(capsys, "solve", "--model", "tree3", "--set", "T:y1", "--radius", "20",
                             "--format", "csv", "--watch", "o,y1")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ex.CSV_COLUMNS and len(rows) == 3
        assert float(rows[1][3]) <= float(rows[1][4])

    def test_solve_finite(self, capsys):
        code, out = self.run(capsys, "solve", "--model", "finite_two_site")
        assert code == 0 and json.loads(out)["converged"]

    def test_experiment_rerun_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(["experiment", "lemma_countable", "--schedule", "10,20", "--out", str(d)]) == 0
        assert (a / "lemma_countable.csv").read_bytes() == (b / "lemma_countable.csv").read_bytes()
        meta = json.loads((a / "lemma_countable.meta.json").read_text())
        assert meta["provenance"]["R_schedule"] == [10, 20]

    def test_simulate_rerun_identical(self, capsys):
        argv = ["simulate", "--model", "tree3", "--trials", "50", "--seed", "3", "--format", "csv",
                "--max-generations", "20"]
        assert self.run(capsys, *argv) == self.run(capsys, *argv)

    def test_unresolved_exit(self, capsys):
        code, _ = self.run(capsys, "experiment", "lemma_countable", "--schedule", "3")
        assert code == 2
        code, _ = self.run(capsys, "critical", "--model", "tree3", "--bisect", "--lo", "0.4",
                           "--hi", "0.45", "--radius", "15")
        assert code == 2

    def test_errors_exit_one(self, capsys):
        assert main(["solve", "--model", "does_not_exist.json"]) == 1
        assert main(["solve", "--set", "bogus:1"]) == 1
        assert main(["experiment", "nope"]) == 1
        assert main(["critical", "--model", "finite_two_site"]) == 1

    def test_critical_closed_form(self, capsys):
        code, out = self.run(capsys, "critical", "--model", "comb1")
        assert code == 0 and json.loads(out)["lambda_w"] == pytest.approx(1 / 3)

    def test_project_check(self, capsys):
        code, out = self.run(capsys, "project-check", "--model", "tree3", "--radius", "6",
                             "--samples", "2000")
        assert code == 0 and all(r["exact_pass"] for r in json.loads(out)["reports"])

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "brwext", "critical", "--model", "tree4"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and json.loads(proc.stdout)["lambda_w"] == 0.25


def test_shipped_models_load():
    for name in shipped_models():
        model, doc = load_model(name)
        assert doc["family"]
