import json

import pytest

from nvlab import cli


@pytest.fixture
def out(tmp_path, monkeypatch):
    d = tmp_path / "out"
    monkeypatch.setenv("NV_LAB_OUT", str(d))
    return d


def manifest(out, name):
    return json.loads((out / f"{name}-manifest.json").read_text())


def write_cfg(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def sim_cfg(**datum):
    return {"version": 1, "grid": [16, 16], "t_end": 0.01, "dt": 1e-3, "scheme": "etdrk4",
            "datum": datum or {"kind": "zero"}}


def test_count_hyperbola_prints_two(out, capsys):
    assert cli.main(["count", "hyperbola", "1", "0", "1", "--square", "0", "0", "21"]) == 0
    assert capsys.readouterr().out.strip() == "2"
    rep = json.loads((out / "count-hyperbola.json").read_text())
    assert rep["count"] == 2
    m = manifest(out, "count-hyperbola")
    assert m["outputs"] == ["count-hyperbola.json"] and m["exit_code"] == 0
    assert {"subcommand", "config", "tool_version", "seed", "started", "finished"} <= set(m)


def test_count_needs_window_and_params(out):
    assert cli.main(["count", "hyperbola", "1", "0", "--square", "0", "0", "5"]) == 1
    assert cli.main(["count", "cubic", "0", "0"]) == 1
    assert manifest(out, "count-cubic")["exit_code"] == 1


def test_count_cubic_line_and_sigma1(out, capsys):
    assert cli.main(["count", "cubic", "0", "0", "--square", "0", "0", "21"]) == 0
    assert capsys.readouterr().out.strip() == "21"
    assert cli.main(["count", "cubic", "0", "0", "--square", "0", "0", "21",
                     "--exclude-line"]) == 0
    assert capsys.readouterr().out.strip() == "0"


def test_verify_identities_and_dualpath(out, tmp_path):
    cfg = write_cfg(tmp_path, {"version": 1, "samples": 2000, "resonance_bound": 10,
                               "dualpath_fields": 5})
    assert cli.main(["verify", "identities", "--config", cfg]) == 0
    assert cli.main(["verify", "dualpath", "--config", cfg]) == 0
    rep = json.loads((out / "verify-dualpath.json").read_text())
    assert rep["pass"] is True


def test_verify_bounds_constant_free_fails_with_witness(out, tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"version": 1, "samples": 2000, "max_frequency": 20})
    assert cli.main(["verify", "bounds", "--config", cfg, "--constant-free"]) == 3
    text = capsys.readouterr().out
    assert "FAIL" in text and "witness" in text
    assert (out / "verify-bounds.json").exists()
    assert manifest(out, "verify-bounds")["exit_code"] == 3
    assert cli.main(["verify", "bounds", "--config", cfg]) == 0


def test_verify_kform_states_coefficient(out, capsys):
    assert cli.main(["verify", "kform"]) == 0
    assert "3/4" in capsys.readouterr().out


def test_simulate_zero_datum(out, tmp_path):
    assert cli.main(["simulate", "--config", write_cfg(tmp_path, sim_cfg())]) == 0
    m = manifest(out, "simulate")
    assert "simulate-diagnostics.csv" in m["outputs"]
    lines = (out / "simulate-diagnostics.csv").read_text().splitlines()
    assert lines[0].startswith("step,t,dt,l2_norm")
    assert all(",0.0," in ln or ln.count(",0") for ln in lines[1:])


def test_simulate_config_errors(out, tmp_path, capsys):
    assert cli.main(["simulate", "--config", write_cfg(tmp_path, "{not json")]) == 1
    assert cli.main(["simulate"]) == 1
    bad = sim_cfg()
    bad["dt"] = -1
    assert cli.main(["simulate", "--config", write_cfg(tmp_path, bad)]) == 1
    assert cli.main(["simulate", "--config", write_cfg(tmp_path, {"version": 2})]) == 1


def test_simulate_mean_violation(out, tmp_path, capsys):
    cfg = write_cfg(tmp_path, sim_cfg(kind="modes", modes=[[0, 0, 1, 0], [1, 0, 0.01, 0]]))
    assert cli.main(["simulate", "--config", cfg]) == 1
    assert "mean" in capsys.readouterr().err
    assert cli.main(["simulate", "--config", cfg, "--project-mean"]) == 0
    summary = json.loads((out / "simulate-summary.json").read_text())
    assert summary["projected_mean"] == [1.0, 0.0]


def test_probe_line_without_Q(out, capsys):
    code = cli.main(["probe", "--family", "counterexample_line", "--no-Q"])
    assert code == 0
    rep = json.loads((out / "probe-report.json").read_text())
    assert 0.45 <= rep["fitted_slope"] <= 0.55 and rep["use_Q"] is False


def test_scaling_lambda_one(out, capsys):
    assert cli.main(["scaling-check", "--lam", "1", "--grid", "16", "--t", "0.001",
                     "--dt", "1e-4"]) == 0
    assert json.loads((out / "scaling-report.json").read_text())["details"]["d"] == 0


def test_miura_forms(out):
    args = ["miura-check", "--dt", "2e-3"]
    assert cli.main(args) == 0
    assert cli.main(args + ["--form", "displayed"]) == 3


def test_reproducible_outputs_are_identical(tmp_path, monkeypatch):
    runs = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        monkeypatch.setenv("NV_LAB_OUT", str(d))
        assert cli.main(["probe", "--family", "random_in_disc", "--R-list", "4", "8",
                         "--trials", "2", "--seed", "5", "--reproducible"]) == 0
        runs.append({p.name: p.read_bytes() for p in d.iterdir()})
    assert runs[0] == runs[1]
    m = json.loads(runs[0]["probe-manifest.json"])
    assert "started" not in m and m["seed"] == 5


def test_out_flag_and_env_precedence(tmp_path, monkeypatch):
    monkeypatch.delenv("NV_LAB_OUT", raising=False)
    a = tmp_path / "a"
    assert cli.main(["verify", "kform", "--out", str(a)]) == 0
    assert (a / "verify-kform-manifest.json").exists()
    b = tmp_path / "b"
    monkeypatch.setenv("NV_LAB_OUT", str(b))
    assert cli.main(["verify", "kform", "--out", str(a / "x")]) == 0
    assert (b / "verify-kform-manifest.json").exists() and not (a / "x").exists()


def test_bad_arguments_exit_one(out):
    assert cli.main(["count", "nonsense"]) == 1
    assert cli.main(["verify", "kform", "--threads", "0"]) == 1
