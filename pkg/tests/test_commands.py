import json

from typer.testing import CliRunner

from src import __version__
from src.main import app
from src.operations.reporting import config_json

runner = CliRunner()


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert result.output.strip() == __version__


def test_presets_list():
    result = runner.invoke(app, ["presets", "list"])
    assert result.exit_code == 0
    assert "synthetic-mlp-iid-fedavg" in result.output


def test_presets_show():
    result = runner.invoke(app, ["presets", "show", "mnist-mlp-noniid3-fml"])
    assert result.exit_code == 0
    config = json.loads(result.output)
    assert config["name"] == "mnist-mlp-noniid3-fml"
    assert config["partition"]["shards_per_client"] == 2


def test_unknown_preset():
    result = runner.invoke(app, ["presets", "show", "not-a-preset"])
    assert result.exit_code == 1


def test_unknown_subcommand():
    result = runner.invoke(app, ["train"])
    assert result.exit_code == 2


def test_run_preset_writes_csv(tmp_path):
    out = tmp_path / "smoke.csv"
    result = runner.invoke(app, ["run", "synthetic-mlp-iid-fedavg", "--out", str(out)])

    assert result.exit_code == 0
    rows = out.read_text(encoding="utf-8").splitlines()
    assert rows[0] == "round,entity,model,split,accuracy,loss"
    assert len(rows) == 1 + 10
    assert (tmp_path / "smoke.meta.json").exists()


def test_run_config_file_with_seed_override(make_config, tmp_path):
    config_path = tmp_path / "experiment.json"
    config_path.write_text(config_json(make_config(strategy="fml")), encoding="utf-8")
    out = tmp_path / "run.csv"

    result = runner.invoke(
        app, ["run", "--config", str(config_path), "--seed", "7", "--out", str(out)]
    )

    assert result.exit_code == 0
    meta = json.loads((tmp_path / "run.meta.json").read_text(encoding="utf-8"))
    assert meta["config"]["hyperparams"]["seed"] == 7
    assert meta["config"]["partition"]["seed"] == 7


def test_run_needs_exactly_one_experiment(make_config, tmp_path):
    config_path = tmp_path / "experiment.json"
    config_path.write_text(config_json(make_config()), encoding="utf-8")

    assert runner.invoke(app, ["run"]).exit_code == 2
    both = runner.invoke(app, ["run", "synthetic-mlp-iid-fedavg", "--config", str(config_path)])
    assert both.exit_code == 2


def test_run_invalid_config_file(tmp_path):
    config_path = tmp_path / "experiment.json"
    config_path.write_text(json.dumps({"strategy": "fml"}), encoding="utf-8")
    result = runner.invoke(app, ["run", str(config_path)])
    assert result.exit_code == 1


def test_partition_inspect():
    result = runner.invoke(app, ["partition", "inspect", "synthetic-mlp-noniid-fml"])

    assert result.exit_code == 0
    lines = result.output.strip().splitlines()
    assert lines[0] == "client,split,class_0,class_1,class_2,class_3,class_4"
    assert len(lines) == 1 + 5 * 2
    for line in lines[1:]:
        counts = [int(v) for v in line.split(",")[2:]]
        assert sum(1 for c in counts if c) == 1


def test_gradcheck_command():
    result = runner.invoke(app, ["gradcheck", "--seeds", "1", "--samples", "3"])
    assert result.exit_code == 0
    assert "mlp+mutual" in result.output


def test_run_reports_an_unwritable_output(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    out = blocker / "run.csv"
    result = runner.invoke(app, ["run", "synthetic-mlp-iid-fedavg", "--out", str(out)])

    assert result.exit_code == 1
    assert isinstance(result.exception, SystemExit)
