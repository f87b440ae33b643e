import csv
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gravcollapse import cli, scenario, verify
from gravcollapse.scenario import ScenarioError

TWO_BRANCH = """\
name = tb
kind = two_branch
alpha1 = 0.6
alpha2 = 0.8
mass = 1 GeV
phi1 = -0.3
phi2 = -0.4
duration = 2 GeV^-1
n_nodes = 201
"""


def write(tmp_path, text, name="s.scn"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestParsing:
    def test_units_are_converted(self):
        sc = scenario.loads(TWO_BRANCH.replace("1 GeV", "1000 MeV"))
        assert sc.get("mass") == pytest.approx(1.0)
        assert sc.get("n_nodes") == 201

    def test_missing_unit(self):
        with pytest.raises(ScenarioError, match="mass"):
            scenario.loads(TWO_BRANCH.replace("1 GeV", "1"))

    def test_wrong_dimension(self):
        with pytest.raises(ScenarioError, match="not a mass unit"):
            scenario.loads(TWO_BRANCH.replace("1 GeV", "1 fm"))

    def test_missing_key_is_named(self):
        with pytest.raises(ScenarioError, match="'mass'"):
            scenario.loads(TWO_BRANCH.replace("mass = 1 GeV\n", ""))

    def test_unknown_key(self):
        with pytest.raises(ScenarioError, match="colour"):
            scenario.loads(TWO_BRANCH + "colour = blue\n")

    def test_duplicate_key(self):
        with pytest.raises(ScenarioError, match="duplicate"):
            scenario.loads(TWO_BRANCH + "phi1 = -0.1\n")

    @pytest.mark.parametrize("text", ["kind = two_branch\n", "name = x\nkind = nope\n",
                                      "name = bad name\nkind = two_branch\n", "just words\n"])
    def test_header_errors(self, text):
        with pytest.raises(ScenarioError):
            scenario.loads(text)

    def test_conditional_requirement(self):
        base = "name = q\nkind = estimate\nquantity = qubits\n"
        with pytest.raises(ScenarioError, match="tau"):
            scenario.loads(base + "electrons_per_qubit = 10\n")
        sc = scenario.loads(base + "electrons_per_qubit = 10\ntau = 1 s\n")
        assert sc.get("scaling") == "both"

    def test_choices(self):
        with pytest.raises(ScenarioError, match="quantity"):
            scenario.loads("name = q\nkind = estimate\nquantity = weight\n")

    def test_comments_and_lists(self):
        sc = scenario.loads("# header\nname = r\nkind = rotation  # trailing\n"
                            "alpha2_sq = 0.1, 0.5\nduration = 1 s\nschedules = linear\n")
        assert sc.get("alpha2_sq") == (0.1, 0.5)
        assert sc.get("schedules") == ("linear",)

    def test_empty_list_entry(self):
        with pytest.raises(ScenarioError):
            scenario.loads("name = r\nkind = born_race\nweights = 0.5,,0.5\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            scenario.load(tmp_path / "nope.scn")
        with pytest.raises(ScenarioError):
            scenario.resolve("no_such_scenario")


@pytest.mark.parametrize("name", sorted(scenario.bundled()))
def test_bundled_roundtrip(name):
    sc = scenario.load(scenario.bundled()[name])
    again = scenario.loads(sc.dumps())
    assert again == sc
    assert again.params() == sc.params()


@given(st.floats(1e-3, 1e3, allow_nan=False), st.sampled_from(["GeV", "MeV", "kg", "ng"]),
       st.integers(0, 10 ** 6))
def test_roundtrip_property(m, unit, seed):
    text = TWO_BRANCH.replace("1 GeV", f"{m!r} {unit}").replace("name = tb", f"name = tb\nseed = {seed}")
    sc = scenario.loads(text)
    assert scenario.loads(sc.dumps()) == sc


class TestCli:
    def test_run_writes_csv(self, tmp_path):
        out = tmp_path / "o.csv"
        assert cli.main(["run", str(write(tmp_path, TWO_BRANCH)), "--out", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0][0] == "residual_pre_numeric"
        assert rows[1][-1] in ("true", "false")

    def test_missing_mass_exit_2(self, tmp_path, capsys):
        p = write(tmp_path, TWO_BRANCH.replace("mass = 1 GeV\n", ""))
        assert cli.main(["run", str(p)]) == 2
        assert "'mass'" in capsys.readouterr().err

    def test_unknown_scenario_exit_2(self):
        assert cli.main(["run", "no_such_scenario"]) == 2

    def test_bad_arguments_exit_2(self):
        assert cli.main(["frobnicate"]) == 2
        assert cli.main(["run", "a", "b", "--out", "x.csv"]) == 2

    def test_invalid_physics_exit_4(self, tmp_path, capsys):
        p = write(tmp_path, "name = r\nkind = born_race\nweights = 0.5, 0.6\n")
        assert cli.main(["run", str(p)]) == 4
        assert "invalid physics" in capsys.readouterr().err

    def test_numerical_failure_exit_3(self, tmp_path):
        p = write(tmp_path, "name = s\nkind = sn_ground\nmass = 1 GeV\nG = 0.0\n"
                            "r_max = 10 GeV^-1\nn_points = 100\n")
        assert cli.main(["run", str(p)]) == 3

    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "outdir"))
        assert cli.main(["run", str(write(tmp_path, TWO_BRANCH))]) == 0
        assert (tmp_path / "outdir" / "tb.csv").exists()

    def test_output_key_is_relative_to_file(self, tmp_path):
        p = write(tmp_path, TWO_BRANCH + "output = res/tb_out.csv\n")
        assert cli.main(["run", str(p)]) == 0
        assert (tmp_path / "res" / "tb_out.csv").exists()

    def test_seed_override_changes_stochastic_output(self, tmp_path):
        a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
        cli.main(["run", "weak_measure", "--out", str(a)])
        cli.main(["run", "weak_measure", "--out", str(b)])
        cli.main(["run", "weak_measure", "--out", str(c), "--seed", "99"])
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes() != c.read_bytes()

    def test_extra_tables(self, tmp_path):
        out = tmp_path / "g.csv"
        assert cli.main(["run", "sn_ground", "--out", str(out)]) == 0
        prof = read_csv(tmp_path / "g_profile.csv")
        assert prof[0] == ["r", "psi", "density", "Phi"]
        assert len(prof) == 2001

    def test_parallel_jobs_match_serial(self, tmp_path, monkeypatch):
        names = ["two_branch", "rotation", "qubits"]
        for sub, jobs in (("serial", "1"), ("parallel", "2")):
            monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / sub))
            assert cli.main(["run", *names, "--jobs", jobs]) == 0
        for n in names:
            assert (tmp_path / "serial" / f"{n}.csv").read_bytes() == \
                (tmp_path / "parallel" / f"{n}.csv").read_bytes()

    def test_list_scenarios(self, capsys):
        assert cli.main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        assert "born_d5\tborn_race" in out

    def test_verify_unknown_suite(self):
        assert cli.main(["verify", "nonsense"]) == 2

    def test_verify_perturbed_born_fails(self, monkeypatch, capsys):
        orig = verify.CRITERIA[8]
        monkeypatch.setitem(verify.CRITERIA, 8,
                            lambda perturb=None: orig(seeds=4, n_samples=200_000, perturb=perturb))
        monkeypatch.setitem(verify.SUITES, "born", (8,))
        assert cli.main(["verify", "born"]) == 0
        assert cli.main(["verify", "born", "--perturb", "born_rate"]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_fmt(self):
        import numpy as np
        assert cli.fmt(True) == "true"
        assert cli.fmt(3) == "3"
        assert cli.fmt(0.1) == "0.10000000000000001"
        assert cli.fmt(np.float64(2.5)) == "2.5"
        assert cli.fmt("x") == "x"


def test_module_entry_point(tmp_path):
    out = tmp_path / "q.csv"
    r = subprocess.run([sys.executable, "-m", "gravcollapse", "run", "qubits", "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    rows = read_csv(out)
    assert [row[2] for row in rows[1:]] == ["entangled", "product"]
