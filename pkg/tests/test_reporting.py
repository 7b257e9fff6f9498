import json

import pytest

from src.exceptions import ConfigurationError
from src.models.report import RoundRecord, RunReport
from src.operations.federation import run_simulation
from src.operations.reporting import (
    CSV_HEADER,
    config_json,
    emit_csv,
    metadata_path,
    parse_config,
    render_csv,
    summarize_report,
    validate_config,
)

CUSTOM_LAYERS = [
    {"kind": "flatten"},
    {"kind": "linear", "out": 8},
    {"kind": "relu"},
    {"kind": "linear", "out": 5},
]


def _write(tmp_path, data):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def _trunk_config(global_model=None, image_shape=None):
    """Two synthetic tasks of 5 and 3 classes sharing an MLP trunk."""
    second = {"name": "synthetic", "classes": 3}
    if image_shape is not None:
        second["image_shape"] = image_shape
    return {
        "dataset": {"name": "synthetic"},
        "client_datasets": [{"name": "synthetic"}, second],
        "partition": {"clients": 2},
        "strategy": "fml",
        "global_model": global_model or {"architecture": "mlp", "split_point": 4},
    }


def _record(round_index, entity="global", model="global", split="test", accuracy=0.5, loss=1.0):
    return RoundRecord(
        round=round_index, entity=entity, model=model, split=split, accuracy=accuracy, loss=loss
    )


def test_parse_config_fills_defaults(tmp_path):
    config = parse_config(_write(tmp_path, {"dataset": {"name": "mnist"}, "strategy": "fml"}))

    assert config.partition.clients == 5
    assert config.hyperparams.batch_size == 128
    assert config.global_model.architecture == "mlp"
    assert config.global_model.input_shape == (1, 28, 28)
    assert config.global_model.num_classes == 10


def test_cifar_defaults_to_cnn1(tmp_path):
    config = parse_config(_write(tmp_path, {"dataset": {"name": "cifar10"}, "strategy": "fedavg"}))
    assert config.global_model.architecture == "cnn1"
    assert config.global_model.input_shape == (3, 32, 32)


@pytest.mark.parametrize(
    ("data", "key_path"),
    [
        (
            {"dataset": {"name": "mnist"}, "strategy": "fml", "partition": {"clients": 0}},
            "partition.clients",
        ),
        (
            {"dataset": {"name": "mnist"}, "strategy": "fml", "hyperparams": {"momentum": 1.5}},
            "hyperparams.momentum",
        ),
        ({"dataset": {"name": "synthetic", "classes": 1}, "strategy": "fml"}, "dataset.classes"),
        ({"dataset": {"name": "mnist"}, "strategy": "gossip"}, "strategy"),
        ({"dataset": {"name": "mnist"}, "strategy": "fml", "colour": "red"}, "colour"),
        ({"strategy": "fml"}, "dataset"),
        (
            _trunk_config(
                global_model={
                    "architecture": "custom",
                    "split_point": 2,
                    "layers": CUSTOM_LAYERS,
                }
            ),
            "client_models",
        ),
        (_trunk_config(image_shape=[1, 3, 3]), "client_datasets.1"),
    ],
)
def test_validation_errors_carry_key_path(tmp_path, data, key_path):
    with pytest.raises(ConfigurationError) as exc_info:
        parse_config(_write(tmp_path, data))
    assert exc_info.value.key_path == key_path


def test_cross_field_errors_are_reported():
    data = {
        "dataset": {"name": "mnist"},
        "strategy": "fml",
        "client_models": [{"architecture": "mlp"}],
    }
    with pytest.raises(ConfigurationError, match="client_models") as exc_info:
        validate_config(data)
    assert exc_info.value.key_path == "client_models"


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        parse_config(tmp_path / "absent.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{ not json", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="invalid JSON"):
        parse_config(broken)

    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigurationError) as exc_info:
        parse_config(listing)
    assert str(exc_info.value).startswith("<root>")


def test_resolved_config_round_trips(make_config, tmp_path):
    config = make_config(strategy="fml", hyperparams={"distill": {"schedule": "linear"}})
    path = tmp_path / "resolved.json"
    path.write_text(config_json(config), encoding="utf-8")
    assert parse_config(path) == config


def test_render_csv_format(make_config):
    report = RunReport(
        config=make_config(),
        records=[
            _record(2, accuracy=0.98766, loss=0.1234567),
            _record(1, entity="client-1", model="local", split="validate", accuracy=1.0),
            _record(1, accuracy=0.25, loss=2.0),
        ],
    )
    lines = render_csv(report).splitlines()
    assert lines == [
        ",".join(CSV_HEADER),
        "1,global,global,test,0.2500,2.000000",
        "1,client-1,local,validate,1.0000,1.000000",
        "2,global,global,test,0.9877,0.123457",
    ]


def test_emit_csv_writes_report_and_sidecar(make_config, tmp_path):
    report = run_simulation(make_config(strategy="fml"))
    path = tmp_path / "out" / "run.csv"

    sidecar = emit_csv(report, path)

    assert sidecar == metadata_path(path) == tmp_path / "out" / "run.meta.json"
    rows = path.read_text(encoding="utf-8").splitlines()
    assert rows[0] == "round,entity,model,split,accuracy,loss"
    assert len(rows) == 1 + len(report.records)
    meta = json.loads(sidecar.read_text(encoding="utf-8"))
    assert meta["config"]["strategy"] == "fml"
    assert "normalization" in meta["metadata"]
    assert sorted(p.name for p in path.parent.iterdir()) == ["run.csv", "run.meta.json"]


def test_same_config_gives_byte_identical_csv(make_config, tmp_path):
    config = make_config(strategy="fml")
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_simulation(config), first)
    emit_csv(run_simulation(config, threads=2), second)
    assert first.read_bytes() == second.read_bytes()


def test_summary_of_a_run(make_config):
    report = RunReport(
        config=make_config(),
        records=[
            _record(1, accuracy=0.5),
            _record(2, accuracy=0.7),
            _record(3, accuracy=0.6),
            _record(3, entity="client-0", model="local", split="validate", accuracy=0.9),
            _record(3, entity="client-1", model="local", split="validate", accuracy=0.7),
        ],
    )

    summary = summarize_report(report, window=2)

    assert summary.rounds == 3
    assert summary.final_global_accuracy == pytest.approx(0.6)
    assert summary.mean_local_accuracy == pytest.approx(0.8)
    assert summary.mean_global_validate_accuracy is None
    assert summary.global_accuracy_std == pytest.approx(0.05)


def test_summary_averages_trunk_rows(make_config):
    report = RunReport(
        config=make_config(),
        records=[
            _record(1, entity="client-0", accuracy=0.4),
            _record(1, entity="client-1", accuracy=0.8),
        ],
    )
    assert summarize_report(report).final_global_accuracy == pytest.approx(0.6)


def test_empty_report_summary(make_config):
    summary = summarize_report(RunReport(config=make_config()))
    assert summary.rounds == 0
    assert summary.final_global_accuracy is None
    assert summary.global_accuracy_std is None
