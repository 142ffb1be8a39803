import csv
import io
import math

import numpy as np
import pytest
from click.testing import CliRunner

from ordscale import experiment as ex
from ordscale.cli import main
from ordscale.estimators import EstimatorId as E
from ordscale.risk import DEFAULT_REPLICATIONS, Scenario

MINIMAL = """\
p: 0.5
pairs:
  - [improved-bsee, bsee]
scenarios:
  - n: [3, 5]
    sigma: [0.2, 0.5]
"""


def small_rows(reps=500):
    sc = Scenario((3, 5), (0.2, 0.5), 0.5, replications=reps, seed=3)
    return [ex.run_scenario(sc, ex.TABLES[1][1])]


def test_minimal_config():
    cfg = ex.parse_config(MINIMAL, env={})
    assert len(cfg.scenarios) == 1
    sc = cfg.scenarios[0]
    assert sc.n == (3, 5) and sc.sigma == (0.2, 0.5) and sc.shape.p == 0.5
    assert sc.replications == DEFAULT_REPLICATIONS == 50_000
    assert cfg.estimator_pairs == [(E.IMPROVED_BSEE, E.BSEE)]
    assert (cfg.output_format, cfg.output_path) == ("csv", "-")


def test_unordered_sigma_rejected_with_line():
    text = MINIMAL.replace("[0.2, 0.5]", "[1.0, 0.5]")
    with pytest.raises(ex.ConfigError, match=r"line 6: scenarios\[0\]\.sigma: violates the order constraint"):
        ex.parse_config(text, env={})


@pytest.mark.parametrize(
    "edit, pattern",
    [
        (("pairs:", "pairz:"), "unknown field"),
        (("[improved-bsee, bsee]", "[improved-bsee, nope]"), r"line 3: pairs\[0\]: unknown estimator"),
        (("n: [3, 5]", "n: [3]"), "need at least two"),
        (("p: 0.5", "p: 0"), "nonzero"),
        (("[3, 5]", "[3, 5, 7]"), "expected 3 values"),
        (("scenarios:", "scenarios: 3\nx:"), "line"),
        (("  - [improved-bsee, bsee]", "  - [improved-baee, baee]\n"), None),
    ],
)
def test_schema_violations(edit, pattern):
    text = MINIMAL.replace(*edit)
    if pattern is None:
        # unknown-location estimators are fine when every n_i >= 2
        ex.parse_config(text, env={})
        with pytest.raises(ex.ConfigError, match="needs every n_i >= 2"):
            ex.parse_config(text.replace("[3, 5]", "[1, 5]"), env={})
        return
    with pytest.raises(ex.ConfigError, match=pattern):
        ex.parse_config(text, env={})


def test_env_overrides():
    text = MINIMAL + "    replications: 1234\n"
    cfg = ex.parse_config(text, env={ex.REPS_ENV: "77", ex.SEED_ENV: "5"})
    assert cfg.scenarios[0].replications == 77
    assert cfg.scenarios[0].seed == ex.derive_seed(5, 0)
    assert ex.parse_config(text, env={}).scenarios[0].replications == 1234
    with pytest.raises(ex.ConfigError, match=ex.REPS_ENV):
        ex.parse_config(text, env={ex.REPS_ENV: "many"})


def test_explicit_fields():
    text = """\
seed: 11
replications: 100
format: md
output: out.md
pairs: [[improved-rmle-unknown, rmle-unknown]]
scenarios:
  - {n: [4, 4, 6], sigma: [1, 1, 2], mu: [0, 1, 2], p: -0.5, seed: 99}
"""
    cfg = ex.parse_config(text, env={})
    sc = cfg.scenarios[0]
    assert (cfg.output_format, cfg.output_path) == ("markdown", "out.md")
    assert sc.seed == 99 and sc.replications == 100 and sc.shape.p == -0.5
    np.testing.assert_array_equal(sc.mu, [0, 1, 2])


def test_table_grid_order():
    scs = ex.table_scenarios(2, replications=10)
    assert len(scs) == 36
    assert [s.n for s in scs[::9]] == ex.SAMPLE_SIZES
    assert [s.sigma for s in scs[:9]] == ex.SIGMAS
    assert all(s.shape.p == -0.5 for s in scs)
    # row seeds are shared across tables so the tables use common draws
    assert [s.seed for s in scs] == [s.seed for s in ex.table_scenarios(3, replications=10)]
    with pytest.raises(ValueError):
        ex.table_scenarios(5)


def test_csv_shape_and_round_trip():
    rows = small_rows()
    text = ex.to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "n1,n2,sigma1,sigma2,pair,prri_1,prri_2,se_1,se_2"
    assert len(lines) == 1 + len(rows[0].pairs)
    parsed = list(csv.DictReader(io.StringIO(text)))
    for rec, pair, vals, ses in zip(parsed, rows[0].pairs, rows[0].prri, rows[0].se):
        assert rec["pair"] == ex.pair_label(pair)
        for i in (1, 2):
            v, s = float(rec[f"prri_{i}"]), float(rec[f"se_{i}"])
            assert math.isfinite(v) and math.isfinite(s) and s >= 0
            assert v == pytest.approx(vals[i - 1], rel=1e-6, abs=1e-12)
            assert s == pytest.approx(ses[i - 1], rel=1e-6, abs=1e-12)


def test_csv_pads_mixed_k():
    rows = small_rows(100)
    sc = Scenario((2, 3, 4), (1, 1, 2), 0.5, replications=100, seed=1)
    rows.append(ex.run_scenario(sc, [(E.IMPROVED_BSEE, E.BSEE)]))
    lines = ex.to_csv(rows).splitlines()
    assert lines[0].startswith("n1,n2,n3,sigma1")
    assert all(len(line.split(",")) == 13 for line in lines)


def test_markdown_table_has_36_rows():
    rows = ex.run_table(1, replications=200)
    md = ex.to_markdown(rows, ex.table_title(1))
    body = [line for line in md.splitlines() if line.startswith("| ") and not line.startswith("| n ")]
    assert len(body) == 36
    assert body[0].startswith("| (3,5) | (0.2,0.5) |")
    assert body[1].startswith("|  | (0.2,1) |")


def test_emit_to_file_and_errors(tmp_path, capsys):
    rows = small_rows(100)
    target = tmp_path / "t.csv"
    ex.emit(rows, "csv", target)
    assert target.read_text() == ex.to_csv(rows)
    ex.emit(rows, "md", "-")
    assert capsys.readouterr().out == ex.to_markdown(rows)
    missing = tmp_path / "nope" / "t.csv"
    with pytest.raises(OSError, match=str(missing)):
        ex.emit(rows, "csv", missing)
    with pytest.raises(ValueError):
        ex.emit([], "csv")


def test_run_experiment_collects_failures():
    good = Scenario((3, 5), (0.2, 0.5), 0.5, replications=100, seed=1)
    bad = Scenario((1, 5), (0.2, 0.5), 0.5, replications=100, seed=1)
    cfg = ex.ExperimentConfig([good, bad], [(E.IMPROVED_BAEE, E.BAEE)])
    res = ex.run_experiment(cfg)
    assert len(res.rows) == 1 and res.failures[0][0] == 1
    assert not res.ok


def test_flagging_threshold():
    row = small_rows(100)[0]
    assert not row.flagged
    row.redraw_count = 1
    assert row.flagged  # 1 > 0.1% of 100
    row.redraw_count, row.replications = 1, 5000
    assert not row.flagged


# ---------------------------------------------------------------- CLI


def test_cli_table_deterministic():
    runner = CliRunner()
    args = ["table", "--id", "3", "--reps", "300", "--seed", "4"]
    a = runner.invoke(main, args)
    b = runner.invoke(main, args + ["--workers", "3"])
    assert a.exit_code == 0, a.output
    assert a.output == b.output
    assert len(a.output.splitlines()) == 1 + 36 * 6


def test_cli_table_env_reps(tmp_path):
    out = tmp_path / "t.md"
    res = CliRunner().invoke(
        main, ["table", "--id", "2", "--format", "md", "--out", str(out)], env={ex.REPS_ENV: "100"}
    )
    assert res.exit_code == 0, res.output
    assert out.read_text().startswith("### Table 2")


def test_cli_run(tmp_path):
    cfg = tmp_path / "c.yaml"
    out = tmp_path / "o.csv"
    cfg.write_text(MINIMAL + f"replications: 200\noutput: {out}\n")
    res = CliRunner().invoke(main, ["run", "--config", str(cfg)])
    assert res.exit_code == 0, res.output
    assert len(out.read_text().splitlines()) == 2


def test_cli_run_reports_bad_config(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(MINIMAL.replace("[0.2, 0.5]", "[1.0, 0.5]"))
    res = CliRunner().invoke(main, ["run", "--config", str(cfg)])
    assert res.exit_code != 0
    assert "order constraint" in res.output


def test_cli_run_rejects_bad_env_override(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(MINIMAL)
    res = CliRunner().invoke(main, ["run", "--config", str(cfg)], env={ex.REPS_ENV: "0"})
    assert res.exit_code != 0
    assert ex.REPS_ENV in res.output


def test_cli_risk():
    res = CliRunner().invoke(
        main, ["risk", "--estimator", "bsee", "--n", "3,5", "--sigma", "1,1", "--p", "0.5", "--reps", "2000"]
    )
    assert res.exit_code == 0, res.output
    lines = res.output.splitlines()
    assert lines[0] == "component,risk,se" and len(lines) == 3
    bad = CliRunner().invoke(
        main, ["risk", "--estimator", "bsee", "--n", "3,5", "--sigma", "1,0.5", "--p", "0.5"]
    )
    assert bad.exit_code != 0


def test_cli_run_exit_code_on_scenario_failure(tmp_path, monkeypatch):
    cfg = tmp_path / "c.yaml"
    real = ex.run_scenario

    def flaky(sc, pairs, workers=1):
        if sc.sigma[0] == 0.3:
            raise RuntimeError("boom")
        return real(sc, pairs, workers)

    monkeypatch.setattr(ex, "run_scenario", flaky)
    text = MINIMAL.replace("scenarios:\n", "scenarios:\n  - {n: [3, 5], sigma: [0.3, 0.5]}\n")
    cfg.write_text(text + "replications: 50\n")
    res = CliRunner().invoke(main, ["run", "--config", str(cfg)])
    assert res.exit_code == 1
    assert "scenario 0 failed: RuntimeError: boom" in res.output
    assert len([l for l in res.output.splitlines() if l.startswith("3,5,")]) == 1


@pytest.mark.slow
def test_table3_far_separated_cell_has_no_improvement():
    rows = ex.run_table(3, replications=50_000)
    row = next(r for r in rows if r.n == (10, 15) and r.sigma == (0.2, 1.5))
    assert row.pairs[0] == (E.IMPROVED_BAEE, E.BAEE)
    np.testing.assert_allclose(row.prri[0], [0.0, 0.0], atol=0.05)


def test_shipped_example_config_is_valid():
    from pathlib import Path

    cfg = ex.load_config(Path(__file__).parents[1] / "configs" / "example.yaml", env={})
    assert len(cfg.scenarios) == 3 and len(cfg.estimator_pairs) == 2
    assert cfg.scenarios[2].shape.p == -0.5 and cfg.scenarios[2].replications == 50_000
