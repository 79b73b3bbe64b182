import json
import shutil
from dataclasses import replace
from pathlib import Path

import pytest

from agritrust.harness import cli
from agritrust.harness.config import ConfigError, load_config, profile_data, with_weather
from agritrust.harness.report import front_svg, per_acre_income, write_report
from agritrust.harness.runs import (
    assemble_front,
    climate_sweep,
    parse_scenario,
    rollout,
    scenario_dir_name,
    survey_weighted_rank,
    train,
)

DATA = Path(__file__).parent / "data"

TINY = {
    "eval_episodes": 2,
    "grid": [[1.0, 0.0], [0.5, 0.5]],
    "learner": {"episodes": 16, "batch_size": 16, "history": 4, "lr": 1e-3, "n_envs": 8, "warmup_episodes": 8,
                "hidden": 16},
}


@pytest.fixture
def tiny_cfg(tmp_path):
    return load_config(profile="full", output_dir=str(tmp_path / "run"), **TINY)


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny") / "run"
    cfg = load_config(profile="full", output_dir=str(out), **TINY)
    train(cfg)
    return cfg, out


# -- survey -----------------------------------------------------------------

@pytest.mark.parametrize(
    "dist,expected",
    [((0.204, 0.185, 0.259, 0.241, 0.111), 3.13), ((1, 0, 0, 0, 0), 5.0), ((0.2,) * 5, 3.0)],
)
def test_survey_weighted_rank(dist, expected):
    assert survey_weighted_rank(dist) == pytest.approx(expected, abs=0.005)


@pytest.mark.parametrize("dist", [(0.5, 0.5, 0.5, 0, 0), (1, 0, 0, 0), (1.2, -0.2, 0, 0, 0)])
def test_survey_rejects_bad_distributions(dist):
    with pytest.raises(ValueError):
        survey_weighted_rank(dist)


# -- config -----------------------------------------------------------------

def test_profiles_load():
    ci = load_config(profile="ci")
    full = load_config(profile="full")
    assert full.learner.gamma == 0.99 and full.learner.lr == 3e-5 and full.learner.batch_size == 640
    assert len(full.grid) == 11
    assert len(ci.grid) == 5 and ci.learner.episodes == 2000


def test_profile_env_var(monkeypatch):
    monkeypatch.setenv("AGRITRUST_PROFILE", "ci")
    assert load_config().learner == load_config(profile="ci").learner
    monkeypatch.setenv("AGRITRUST_PROFILE", "nope")
    with pytest.raises(ConfigError):
        profile_data()


def test_config_file_overlays_profile(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text('seed = 7\n[learner]\nepisodes = 12\n[weather]\ndelta_t = 2.0\n')
    cfg = load_config(f, profile="full")
    assert cfg.seed == 7 and cfg.learner.episodes == 12 and cfg.learner.lr == 3e-5
    assert cfg.weather.delta_t == 2.0


def test_json_config_accepted(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"scenario": 3, "reward": {"labor_cost": 5.0}}))
    cfg = load_config(f, profile="full")
    assert cfg.weights.labor_cost == 5.0


@pytest.mark.parametrize(
    "text",
    ["bogus = 1\n", "[learner]\nlr = -1.0\n", "grid = [[0.7, 0.7]]\n", "scenario = 9\n", "not toml ["],
)
def test_invalid_config_rejected(tmp_path, text):
    f = tmp_path / "bad.toml"
    f.write_text(text)
    with pytest.raises(ConfigError):
        load_config(f, profile="full")


def test_config_roundtrips_through_json(tmp_path, tiny_cfg):
    f = tmp_path / "again.json"
    f.write_text(tiny_cfg.to_json())
    assert load_config(f, profile="full") == tiny_cfg


# -- scenarios --------------------------------------------------------------

@pytest.mark.parametrize(
    "tok,expected,name",
    [("+2C", (2.0, 1.0), "temp+2C"), ("-20%", (0.0, 0.8), "precip-20pct"), ("base", (0.0, 1.0), "base")],
)
def test_parse_scenario(tok, expected, name):
    assert parse_scenario(tok) == pytest.approx(expected)
    assert scenario_dir_name(tok) == name


@pytest.mark.parametrize("tok", ["hot", "2K", "-120%"])
def test_parse_scenario_rejects(tok):
    with pytest.raises(ValueError):
        parse_scenario(tok)


# -- runs -------------------------------------------------------------------

def test_train_writes_layout(tiny_run):
    _, out = tiny_run
    for name in ("config.json", "weather.csv", "front.json", "policies.json", "meta.json", "report.md", "front.svg"):
        assert (out / name).is_file(), name
    assert sorted(p.name for p in (out / "checkpoints").iterdir()) == ["w0.bin", "w1.bin"]
    assert len(list((out / "episodes").glob("w*_eval*.csv"))) == 4
    front = json.loads((out / "front.json").read_text())
    assert isinstance(front, list) and front
    assert all(set(p) == {"reward", "trust", "run_id", "weight"} for p in front)


def test_train_is_deterministic(tiny_run, tmp_path):
    cfg, out = tiny_run
    again = tmp_path / "again" / out.name  # report.md embeds the directory name
    train(replace(cfg, output_dir=str(again)))
    for name in ("front.json", "policies.json", "report.md", "front.svg", "weather.csv"):
        assert (out / name).read_bytes() == (again / name).read_bytes(), name
    assert (out / "checkpoints" / "w1.bin").read_bytes() == (again / "checkpoints" / "w1.bin").read_bytes()


def test_identity_perturbation_equals_base(tiny_run, tmp_path):
    cfg, out = tiny_run
    same = with_weather(cfg, 0.0, 1.0, str(tmp_path / "same"))
    train(same)
    assert (out / "front.json").read_bytes() == (tmp_path / "same" / "front.json").read_bytes()


def test_scalar_grid_uses_scalar_network(tmp_path):
    cfg = load_config(profile="full", output_dir=str(tmp_path / "s"), **{**TINY, "grid": [[1.0, 0.0]]})
    doc = train(cfg)
    assert doc["selected"] == doc["agnostic"] == "w0"
    from agritrust.learner.qnet import load_checkpoint

    assert load_checkpoint(tmp_path / "s" / "checkpoints" / "w0.bin").n_objectives == 1


def test_rollout_baseline_and_policy(tiny_run):
    cfg, out = tiny_run
    expert = rollout(cfg, baseline="expert")
    assert (expert.summary.n_apps, expert.summary.total_n_kg_ha) == (1, 224.0)
    res = rollout(cfg, policy=out / "checkpoints" / "w1.bin", seed=3)
    assert res.log.complete and len(res.log.days) == 160
    with pytest.raises(ValueError):
        rollout(cfg, baseline="nope")
    with pytest.raises(ValueError):
        rollout(cfg)


def test_rollout_rejects_dimension_mismatch(tiny_run, tmp_path):
    import torch

    from agritrust.learner.qnet import QNetwork, save_checkpoint

    cfg, _ = tiny_run
    net = QNetwork(8, obs_dim=7)
    net.obs_scale = torch.ones(7)
    save_checkpoint(net, tmp_path / "odd.bin")
    with pytest.raises(ValueError, match="observation"):
        rollout(cfg, policy=tmp_path / "odd.bin")


def test_assemble_front_selection():
    pols = [
        {"run_id": "w0", "weight": [1.0, 0.0], "reward": 2000.0, "trust": 0.1},
        {"run_id": "w1", "weight": [0.5, 0.5], "reward": 1750.0, "trust": 0.87},
        {"run_id": "w2", "weight": [0.0, 1.0], "reward": 1500.0, "trust": 0.5},
    ]
    doc = assemble_front(pols, (2000.0, 1.0))
    assert [p["run_id"] for p in doc["front"]] == ["w0", "w1"]
    assert doc["selected"] == "w1" and doc["agnostic"] == "w0"


def test_climate_sweep_empty_list_is_base_only(tmp_path, tiny_cfg):
    cfg = replace(tiny_cfg, grid=((1.0, 0.0),), output_dir=str(tmp_path / "sweep"))
    rows = climate_sweep(cfg, [])
    assert {r["scenario"] for r in rows} == {"base"}
    assert (tmp_path / "sweep" / "comparison.md").is_file()


def test_climate_sweep_scenarios(tmp_path, tiny_cfg):
    cfg = replace(tiny_cfg, output_dir=str(tmp_path / "sweep"))
    rows = climate_sweep(cfg, ["+1C", "+2C", "+5C"])
    dirs = sorted(p.name for p in (tmp_path / "sweep").iterdir() if p.is_dir())
    assert dirs == ["base", "temp+1C", "temp+2C", "temp+5C"]
    for d in dirs:
        assert (tmp_path / "sweep" / d / "front.json").is_file()
    assert {r["policy"] for r in rows} == {"selected 50:50", "trust-agnostic"}
    table = (tmp_path / "sweep" / "comparison.md").read_text()
    assert "temp+5C" in table and "Trust" in table


# -- report -----------------------------------------------------------------

def test_report_golden(tmp_path):
    run = tmp_path / "golden_run"
    shutil.copytree(DATA / "golden_run", run)
    write_report([run], tmp_path / "out")
    assert (tmp_path / "out" / "report.md").read_text() == (DATA / "golden_report.md").read_text()
    assert (tmp_path / "out" / "front.svg").read_text() == (DATA / "golden_front.svg").read_text()


def test_svg_marker_counts():
    doc = json.loads((DATA / "golden_run" / "policies.json").read_text())
    svg = front_svg(doc)
    assert svg.count('class="point"') == len(doc["front"])
    assert svg.count('class="selected"') == 1


def test_report_two_runs_comparison(tmp_path):
    a, b = tmp_path / "normal", tmp_path / "hot"
    shutil.copytree(DATA / "golden_run", a)
    shutil.copytree(DATA / "golden_run", b)
    write_report([a, b], tmp_path / "out")
    md = (tmp_path / "out" / "report.md").read_text()
    assert "| Selected policy | normal | hot |" in md
    assert (tmp_path / "out" / "front_normal.svg").is_file()


def test_report_missing_artifacts(tmp_path):
    with pytest.raises(FileNotFoundError):
        write_report([tmp_path], tmp_path)


def test_net_income_of_expert_record():
    rec = {"yield_kg_ha": 9248.0, "total_n_kg_ha": 224.0, "n_apps": 1}
    assert 650 < per_acre_income(rec) < 720


# -- cli --------------------------------------------------------------------

def test_cli_survey_stats(capsys):
    assert cli.main(["survey-stats", "--dist", "0.204,0.185,0.259,0.241,0.111"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(3.13, abs=0.005)
    assert cli.main(["survey-stats", "--dist", "0.5,0.5,0.5,0,0"]) == 2


def test_cli_trust_score_flags_and_json(capsys, tmp_path):
    assert cli.main(["trust-score", "--yield-kg-ha", "9245", "--total-n", "190", "--n-apps", "2",
                     "--in-window", "2", "--leach", "0.12"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["score"] == pytest.approx(0.867, abs=0.002)
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"yield_kg_ha": 9352, "total_n_kg_ha": 190, "n_apps": 2, "in_window_apps": 2,
                             "total_leach_kg_ha": 0.09}))
    assert cli.main(["trust-score", "--summary", str(f)]) == 0
    assert json.loads(capsys.readouterr().out)["score"] == pytest.approx(0.710, abs=0.005)
    assert cli.main(["trust-score", "--total-n", "190"]) == 2
    assert cli.main(["trust-score", "--summary", "{not json"]) == 2


def test_cli_rollout_expert(capsys, monkeypatch):
    monkeypatch.setenv("AGRITRUST_PROFILE", "ci")
    assert cli.main(["rollout", "--baseline", "expert"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n_apps"] == 1 and out["total_n_kg_ha"] == 224.0


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("bogus = 1\n")
    assert cli.main(["train", "--config", str(bad)]) == 2
    assert cli.main(["train", "--config", str(tmp_path / "missing.toml")]) == 2
    assert cli.main(["report", str(tmp_path)]) == 3
    assert cli.main(["rollout", "--baseline", "nope"]) == 3
    assert cli.main(["sweep", "--config", str(bad), "--scenarios", "hot"]) == 2


def test_cli_train_and_report(tmp_path, capsys):
    f = tmp_path / "tiny.toml"
    lines = ['eval_episodes = 1', 'grid = [[1.0, 0.0], [0.5, 0.5]]', f'output_dir = "{tmp_path / "run"}"',
             "[learner]", "episodes = 8", "batch_size = 8", "history = 2", "hidden = 8", "warmup_episodes = 8"]
    f.write_text("\n".join(lines) + "\n")
    assert cli.main(["train", "--config", str(f), "--seed", "3"]) == 0
    assert json.loads((tmp_path / "run" / "config.json").read_text())["seed"] == 3
    capsys.readouterr()
    assert cli.main(["report", str(tmp_path / "run"), "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "report.md").is_file()
    assert cli.main(["rollout", "--config", str(f), "--policy", str(tmp_path / "run" / "checkpoints" / "w1.bin")]) == 0
