import pytest

from src.data import presets_db
from src.data.presets import NO_ANCHOR
from src.exceptions import PresetNotFoundError, UsageError
from src.operations.presets import get_preset, list_presets, resolve_experiment, with_seed
from src.operations.reporting import config_json


def test_catalogue_size():
    # 6 dataset/model columns x 4 settings x 3 methods, 9 heterogeneity runs, each with a
    # desk variant, plus 4 synthetic smoke tests
    assert len(presets_db) == (72 + 9) * 2 + 4


def test_list_presets_is_sorted():
    names = [p.name for p in list_presets()]
    assert names == sorted(names)


def test_get_preset():
    preset = get_preset("mnist-mlp-iid-fedavg")
    assert "98.44" in preset.description
    assert preset.config.strategy == "fedavg"
    assert preset.config.hyperparams.rounds == 200
    assert preset.config.hyperparams.local_epochs == 5
    assert preset.config.hyperparams.batch_size == 128


def test_unknown_preset():
    with pytest.raises(PresetNotFoundError, match="Preset 'nope' not found."):
        get_preset("nope")


def test_desk_variant_only_shortens_the_run():
    full = get_preset("cifar10-cnn2-noniid2-fml").config
    desk = get_preset("cifar10-cnn2-noniid2-fml-desk").config
    assert desk.hyperparams.rounds == 50
    assert desk.model_copy(update={"name": full.name, "hyperparams": full.hyperparams}) == full


@pytest.mark.parametrize(
    ("name", "shards"),
    [
        ("mnist-lenet5-noniid1-fedprox", 6),
        ("mnist-lenet5-noniid2-fedprox", 4),
        ("mnist-lenet5-noniid3-fedprox", 2),
        ("cifar100-cnn1-noniid1-fml", 60),
        ("cifar100-cnn1-noniid3-fml", 20),
    ],
)
def test_noniid_levels(name, shards):
    partition = get_preset(name).config.partition
    assert partition.mode == "noniid"
    assert partition.shards_per_client == shards
    assert partition.clients == 5


def test_objective_heterogeneity_shares_a_trunk():
    config = get_preset("oh-cifar-fml").config
    assert config.shares_trunk
    assert [config.dataset_of(k).num_classes for k in range(2)] == [10, 100]


def test_model_heterogeneity_clients():
    config = get_preset("mh-cifar10-fml").config
    assert [config.model_of(k).architecture for k in range(5)] == [
        "mlp",
        "lenet5",
        "cnn1",
        "cnn2",
        "cnn2",
    ]


def test_resolve_preset_and_file(tmp_path):
    by_name = resolve_experiment("synthetic-mlp-iid-fedavg")
    path = tmp_path / "experiment.json"
    path.write_text(config_json(by_name), encoding="utf-8")

    assert resolve_experiment(str(path)) == by_name
    assert resolve_experiment(None, path) == by_name


def test_resolve_needs_exactly_one_source(tmp_path):
    with pytest.raises(UsageError):
        resolve_experiment(None)
    with pytest.raises(UsageError):
        resolve_experiment("synthetic-mlp-iid-fedavg", tmp_path / "experiment.json")


def test_seed_override_reaches_training_and_partition():
    config = with_seed(get_preset("synthetic-mlp-noniid-fml").config, 11)
    assert config.hyperparams.seed == 11
    assert config.partition.seed == 11
    assert resolve_experiment("synthetic-mlp-noniid-fml", seed=11) == config


def test_every_preset_names_what_it_reproduces():
    grid = get_preset("mnist-mlp-iid-fedavg")
    assert grid.anchor == "accuracy grid: MNIST / MLP / IID / FedAvg = 98.44"
    assert get_preset("mnist-mlp-iid-fedavg-desk").anchor == grid.anchor

    for preset in list_presets():
        assert preset.anchor
        if preset.name.startswith("synthetic-"):
            assert preset.anchor == NO_ANCHOR
        elif preset.anchor.startswith("accuracy grid:"):
            assert preset.anchor.rsplit("= ", 1)[1] in preset.description
        else:
            assert "study" in preset.anchor
