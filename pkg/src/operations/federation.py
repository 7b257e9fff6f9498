"""Server/client state machine: fork, local update, merge and evaluation."""

from __future__ import annotations

import copy
import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src import __version__
from src.config import normalization_stats, settings
from src.data.datasets import Dataset
from src.data.registry import load_dataset
from src.exceptions import DimensionError, FmlSimError, RoundAbortedError, UsageError
from src.models.experiment import ExperimentConfig, Strategy
from src.models.messages import MemeUpload, ModelUpload
from src.models.partition import ClientData
from src.models.report import GLOBAL_ENTITY, RoundRecord, RunReport, client_entity
from src.networks.layers import Model
from src.networks.zoo import build_model, flatten_params, load_params, splice_adaptor, split_model
from src.operations.aggregation import aggregate_uniform, aggregate_weighted
from src.operations.losses import schedule_alphabeta
from src.operations.partition import partition
from src.operations.training import (
    evaluate,
    local_update_dml,
    local_update_prox,
    local_update_sgd,
    make_optimizer,
)

logger = logging.getLogger(__name__)


class ClientState(BaseModel):
    """Everything a client keeps between rounds.

    ``local`` is the personalized model (FML and solo only); it is updated in
    place and never sent anywhere. ``adaptor`` holds the client's classification
    layer when the global model is a shared trunk.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    client_id: int
    data: ClientData
    train: Dataset
    test: Dataset
    num_classes: int
    local: Model | None = None
    local_momentum: dict[str, np.ndarray] = Field(default_factory=dict)
    adaptor: np.ndarray | None = None
    adaptor_seed: int = 0
    batch_rng: np.random.Generator


class ServerState(BaseModel):
    """The global model (a trunk when clients use adaptors) and the round counter."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: ExperimentConfig
    strategy: Strategy
    global_model: Model | None
    test: Dataset
    round: int = 0

    @property
    def is_trunk(self) -> bool:
        return self.config.shares_trunk


class _ClientResult(NamedTuple):
    client_id: int
    upload: ModelUpload | MemeUpload | None
    local: Model | None
    local_momentum: dict[str, np.ndarray]
    adaptor: np.ndarray | None
    batch_rng: np.random.Generator
    meme: Model | None = None


def _dtype(config: ExperimentConfig) -> type[np.floating]:
    return np.float64 if config.precision == "float64" else np.float32


def _client_seeds(seed: int, client_id: int) -> tuple[np.random.Generator, int, int]:
    """Independent batch-order stream plus model and adaptor init seeds of a client."""
    batch_seq, init_seq = np.random.SeedSequence(seed, spawn_key=(client_id,)).spawn(2)
    model_seed, adaptor_seed = init_seq.generate_state(2, np.uint64)
    return np.random.default_rng(batch_seq), int(model_seed), int(adaptor_seed)


def _global_seed(seed: int) -> int:
    return int(np.random.SeedSequence(seed).generate_state(1, np.uint64)[0])


def setup_partitions(
    config: ExperimentConfig, data_dir: Path
) -> list[tuple[ClientData, Dataset, Dataset]]:
    """Partition every distinct client dataset among the clients that use it."""
    k_total = config.partition.clients
    groups: dict[str, list[int]] = {}
    for k in range(k_total):
        groups.setdefault(config.dataset_of(k).model_dump_json(), []).append(k)

    assigned: dict[int, tuple[ClientData, Dataset, Dataset]] = {}
    for members in groups.values():
        train, test = load_dataset(config.dataset_of(members[0]), data_dir)
        parts = partition(train, test, config.partition, K=len(members))
        for k, part in zip(members, parts, strict=True):
            assigned[k] = (part.model_copy(update={"client_id": k}), train, test)
    return [assigned[k] for k in range(k_total)]


def setup_federation(
    config: ExperimentConfig, data_dir: Path | None = None
) -> tuple[ServerState, list[ClientState]]:
    """Load data, partition it and initialize the global and personalized models."""
    root = settings.data_dir if data_dir is None else data_dir
    dtype = _dtype(config)
    hp = config.hyperparams
    _, global_test = load_dataset(config.dataset, root)

    global_model: Model | None = None
    trunk: Model | None = None
    if config.strategy != "solo":
        assert config.global_model is not None
        global_model = build_model(config.global_model, _global_seed(hp.seed), dtype=dtype)
        if config.shares_trunk:
            assert config.global_model.split_point is not None
            trunk, _ = split_model(global_model, config.global_model.split_point)
            global_model = trunk
    server = ServerState(
        config=config, strategy=config.strategy, global_model=global_model, test=global_test
    )

    clients: list[ClientState] = []
    for k, (data, train, test) in enumerate(setup_partitions(config, root)):
        batch_rng, model_seed, adaptor_seed = _client_seeds(hp.seed, k)
        client = ClientState(
            client_id=k,
            data=data,
            train=train,
            test=test,
            num_classes=config.dataset_of(k).num_classes,
            batch_rng=batch_rng,
            adaptor_seed=adaptor_seed,
        )
        if config.strategy in ("fml", "solo"):
            client.local = build_model(config.model_of(k), model_seed, dtype=dtype)
        if trunk is not None:
            spliced = splice_adaptor(trunk.clone(), client.num_classes, adaptor_seed)
            client.adaptor = flatten_params(spliced, "local").copy()
        clients.append(client)
        logger.debug(
            "client %d: %d train / %d validate samples", k, data.num_train, data.num_validate
        )
    return server, clients


def fork(server: ServerState, client: ClientState) -> Model:
    """Copy the global model for a client, splicing its adaptor onto a shared trunk."""
    if server.global_model is None:
        msg = "the solo strategy has no global model to fork"
        raise UsageError(msg)
    twin = server.global_model.clone()
    if client.adaptor is None:
        return twin
    spliced = splice_adaptor(twin, client.num_classes, client.adaptor_seed)
    return load_params(spliced, client.adaptor, "local")


def _global_fingerprint(server: ServerState) -> str | None:
    return None if server.global_model is None else server.global_model.fingerprint("shared")


def _update_client(
    server: ServerState, client: ClientState, round_index: int
) -> _ClientResult:
    config = server.config
    hp = config.hyperparams
    lr = hp.learning_rate_at(round_index)
    rng = copy.deepcopy(client.batch_rng)
    upload: ModelUpload | MemeUpload | None = None
    local: Model | None = None
    momentum = client.local_momentum
    model: Model | None = None
    expected = _global_fingerprint(server)

    match server.strategy:
        case "fedavg" | "fedprox":
            model = fork(server, client)
            opt = make_optimizer(model, hp, learning_rate=lr)
            if server.strategy == "fedprox":
                anchor = flatten_params(model).astype(np.float64)
                local_update_prox(
                    model,
                    anchor,
                    client.data,
                    client.train,
                    hp,
                    rng,
                    optimizer=opt,
                    fingerprint=expected,
                )
            else:
                local_update_sgd(
                    model, client.data, client.train, hp, rng, optimizer=opt, fingerprint=expected
                )
            upload = ModelUpload(
                client_id=client.client_id,
                round=round_index,
                params=flatten_params(model, "shared").copy(),
                fingerprint=model.fingerprint("shared"),
                num_samples=client.data.num_train,
            )
        case "fml":
            assert client.local is not None
            model = fork(server, client)
            local = client.local.clone()
            local_opt = make_optimizer(local, hp, learning_rate=lr, state=momentum)
            meme_opt = make_optimizer(model, hp, learning_rate=lr)
            alpha, beta = schedule_alphabeta(round_index - 1, hp.rounds - 1, hp.distill)
            local_update_dml(
                model,
                local,
                client.data,
                client.train,
                hp,
                rng,
                alpha,
                beta,
                meme_optimizer=meme_opt,
                local_optimizer=local_opt,
                fingerprint=expected,
            )
            momentum = local_opt.state_dict()
            upload = MemeUpload(
                client_id=client.client_id,
                round=round_index,
                shared_params=flatten_params(model, "shared").copy(),
                fingerprint=model.fingerprint("shared"),
            )
        case "solo":
            assert client.local is not None
            local = client.local.clone()
            local_opt = make_optimizer(local, hp, learning_rate=lr, state=momentum)
            local_update_sgd(local, client.data, client.train, hp, rng, optimizer=local_opt)
            momentum = local_opt.state_dict()

    adaptor = None
    if model is not None and client.adaptor is not None:
        adaptor = flatten_params(model, "local").copy()
    meme = model if server.strategy == "fml" else None
    return _ClientResult(client.client_id, upload, local, momentum, adaptor, rng, meme)


def _run_updates(
    server: ServerState,
    clients: Sequence[ClientState],
    round_index: int,
    order: Sequence[int],
    threads: int,
) -> dict[int, _ClientResult]:
    by_id = {c.client_id: c for c in clients}

    def task(k: int) -> _ClientResult:
        try:
            return _update_client(server, by_id[k], round_index)
        except FmlSimError as exc:
            raise RoundAbortedError(round_index, k, exc) from exc

    if threads <= 1:
        return {k: task(k) for k in order}
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="client") as pool:
        futures = {k: pool.submit(task, k) for k in order}
        # Wait for every worker before raising so nothing is left half-run
        errors = [f.exception() for f in futures.values()]
        failure = next((e for e in errors if e is not None), None)
        if failure is not None:
            raise failure
        return {k: f.result() for k, f in futures.items()}


def _merge(
    server: ServerState, results: dict[int, _ClientResult], round_index: int
) -> np.ndarray | None:
    uploads = [u for k in sorted(results) if (u := results[k].upload) is not None]
    expected = _global_fingerprint(server)
    for upload in uploads:
        if upload.fingerprint != expected:
            msg = f"upload architecture {upload.fingerprint} does not match the global {expected}"
            raise RoundAbortedError(round_index, upload.client_id, DimensionError(msg))
    fingerprints = [u.fingerprint for u in uploads]
    if server.strategy == "fml":
        memes = [u for u in uploads if isinstance(u, MemeUpload)]
        return aggregate_uniform([u.shared_params for u in memes], fingerprints=fingerprints)
    if server.strategy in ("fedavg", "fedprox"):
        models = [u for u in uploads if isinstance(u, ModelUpload)]
        if server.config.hyperparams.aggregation == "uniform":
            return aggregate_uniform([u.params for u in models], fingerprints=fingerprints)
        return aggregate_weighted(
            [u.params for u in models],
            [u.num_samples for u in models],
            fingerprints=fingerprints,
        )
    return None


def _commit(
    server: ServerState,
    clients: Sequence[ClientState],
    results: dict[int, _ClientResult],
    merged: np.ndarray | None,
) -> None:
    if merged is not None:
        assert server.global_model is not None
        load_params(server.global_model, merged)
    for client in clients:
        result = results[client.client_id]
        if result.local is not None:
            assert client.local is not None
            load_params(client.local, flatten_params(result.local))
        client.local_momentum = result.local_momentum
        if result.adaptor is not None:
            client.adaptor = result.adaptor
        client.batch_rng = result.batch_rng


def _record(
    round_index: int, entity: str, model: str, split: str, scores: tuple[float, float]
) -> RoundRecord:
    accuracy, loss = scores
    return RoundRecord(
        round=round_index, entity=entity, model=model, split=split, accuracy=accuracy, loss=loss
    )


def evaluate_round(
    server: ServerState,
    clients: Sequence[ClientState],
    round_index: int,
    memes: dict[int, Model] | None = None,
) -> list[RoundRecord]:
    """Score the post-merge models of a round, plus the trained memes when given."""
    config = server.config
    records: list[RoundRecord] = []
    if server.global_model is not None:
        if server.is_trunk:
            for client in clients:
                scores = evaluate(fork(server, client), client.test)
                records.append(
                    _record(round_index, client_entity(client.client_id), "global", "test", scores)
                )
        else:
            scores = evaluate(server.global_model, server.test)
            records.append(_record(round_index, GLOBAL_ENTITY, "global", "test", scores))

    for client in clients:
        entity = client_entity(client.client_id)
        validate = client.data.validate_indices
        if server.global_model is not None and config.evaluation.global_on_validate:
            scores = evaluate(fork(server, client), client.test, validate)
            records.append(_record(round_index, entity, "global", "validate", scores))
        meme = (memes or {}).get(client.client_id)
        if meme is not None and config.evaluation.memes:
            scores = evaluate(meme, client.test, validate)
            records.append(_record(round_index, entity, "meme", "validate", scores))
        if client.local is not None:
            scores = evaluate(client.local, client.test, validate)
            records.append(_record(round_index, entity, "local", "validate", scores))
    return records


def run_round(
    server: ServerState,
    clients: list[ClientState],
    round_index: int,
    *,
    order: Sequence[int] | None = None,
    threads: int | None = None,
) -> tuple[ServerState, list[ClientState], list[RoundRecord]]:
    """Run one fork / update / merge / evaluate cycle.

    Client updates run on copies; nothing is written back until every client has
    finished, so a failing client aborts the round with all state untouched.

    Args:
        server: Server state, updated in place.
        clients: Client states, updated in place.
        round_index: 1-based round number.
        order: Client processing order (defaults to ascending id).
        threads: Worker count (defaults to ``settings.threads``).

    Returns:
        The server, the clients and the round's records.

    Raises:
        RoundAbortedError: If any client update fails.
        UsageError: If the round is out of sequence.
    """
    total = server.config.hyperparams.rounds
    if round_index != server.round + 1 or round_index > total:
        msg = f"round {round_index} cannot follow round {server.round} of {total}"
        raise UsageError(msg)
    ids = [c.client_id for c in clients] if order is None else list(order)
    if sorted(ids) != sorted(c.client_id for c in clients):
        msg = "order must be a permutation of the client ids"
        raise UsageError(msg)

    results = _run_updates(server, clients, round_index, ids, threads or settings.threads)
    merged = _merge(server, results, round_index)
    _commit(server, clients, results, merged)
    server.round = round_index
    memes = {k: r.meme for k, r in results.items() if r.meme is not None}
    records = evaluate_round(server, clients, round_index, memes)
    return server, clients, records


def run_simulation(
    config: ExperimentConfig,
    *,
    data_dir: Path | None = None,
    threads: int | None = None,
    on_round: Callable[[int, list[RoundRecord]], None] | None = None,
) -> RunReport:
    """Run every round of an experiment and collect the report.

    Results depend only on the configuration (seed included), never on the
    thread count.
    """
    server, clients = setup_federation(config, data_dir)
    report = RunReport(
        config=config,
        metadata={
            "version": __version__,
            "numpy": np.__version__,
            "normalization": normalization_stats.as_dict(),
        },
    )
    total = config.hyperparams.rounds
    logger.info(
        "running %s: %s, %d clients, %d rounds",
        config.name,
        config.strategy,
        len(clients),
        total,
    )
    for r in range(1, total + 1):
        _, _, records = run_round(server, clients, r, threads=threads)
        report.records.extend(records)
        headline = [rec for rec in records if rec.model == "global" and rec.split == "test"]
        if headline:
            mean_acc = sum(rec.accuracy for rec in headline) / len(headline)
            logger.info("round %d/%d: global accuracy %.4f", r, total, mean_acc)
        else:
            logger.info("round %d/%d done", r, total)
        if on_round is not None:
            on_round(r, records)
    return report
