import json

from coevolve.cli import main
from coevolve.records import read_jsonl
from test_geometry import RIGHT, spec


def test_seed_evolve_filter_stats(tmp_path, capsys):
    d1 = tmp_path / "D1.jsonl"
    assert main(["seed", "--n", "5", "--seed", "1", "--out", str(d1)]) == 0
    assert len(read_jsonl(d1)) == 5
    d2 = tmp_path / "D2.jsonl"
    assert main(["evolve", "--dataset", str(d1), "--out", str(d2), "--report", str(tmp_path / "ev.json")]) == 0
    evolved = read_jsonl(d2)
    assert evolved and all(r.iteration == 2 or r.aux_count == 0 for r in evolved)
    train = tmp_path / "train.jsonl"
    report = tmp_path / "filter.json"
    assert main(["filter", "--dataset", str(d2), "--k", "8", "--p0", "0.5", "--seed", "3",
                 "--out", str(train), "--report", str(report)]) == 0
    rep = json.loads(report.read_text())
    assert rep["k"] == 8 and rep["total"] == len(evolved)
    assert all(r.error_rate >= 0.3 for r in read_jsonl(train))
    capsys.readouterr()
    assert main(["stats", "--dataset", str(d2)]) == 0
    assert json.loads(capsys.readouterr().out)["count"] == len(evolved)


def test_stats_reports_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": 1\n')
    assert main(["stats", "--dataset", str(bad)]) == 1
    assert json.loads(capsys.readouterr().out)["malformed"][0]["line"] == 1


def test_loop_and_external_completion(tmp_path, capsys):
    wd = str(tmp_path / "run")
    assert main(["loop", "--iterations", "2", "--workdir", wd, "--trainer", "external"]) == 0
    assert "status=awaiting-checkpoints" in capsys.readouterr().out
    assert main(["loop", "--iterations", "2", "--workdir", wd, "--trainer", "external",
                 "--complete", "1", "--checkpoints", '{"SFT": "a", "RL": "b"}']) == 0
    out = capsys.readouterr().out
    assert "t=1 phases=SFT+RL status=complete" in out and "t=2 phases=RL" in out


def test_loop_from_config(tmp_path, capsys):
    cfg = tmp_path / "loop.toml"
    cfg.write_text('[schedule]\niterations = 1\nseed = 4\n\n[synthesis]\nseed_size = 3\n')
    assert main(["loop", "--config", str(cfg), "--workdir", str(tmp_path / "r")]) == 0
    assert "t=1" in capsys.readouterr().out
    assert (tmp_path / "r" / "manifests" / "manifest_t1.json").exists()


def test_grpo_demo(tmp_path, capsys):
    metrics = tmp_path / "m.jsonl"
    assert main(["grpo-demo", "--steps", "3", "--group-size", "4", "--metrics", str(metrics)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and metrics.read_text().strip().splitlines() == lines


def test_render(tmp_path, capsys):
    path = tmp_path / "d.json"
    path.write_text(json.dumps(RIGHT))
    out = tmp_path / "d.svg"
    assert main(["render", "--spec", str(path), "--out", str(out)]) == 0
    assert "<svg" in out.read_text()
    path.write_text(json.dumps(spec({"A": (0, 0)}, [("A", "Z")])))
    assert main(["render", "--spec", str(path), "--out", str(out)]) == 2
