import numpy as np
import pytest

from grace.config import TrainConfig
from grace.data.sbm import generate_sbm
from grace.errors import NumericalError
from grace.metrics.scores import score_labels
from grace.models.checkpoint import load_checkpoint
from grace.models.grace_model import GraceModel
from grace.propagation.operator import exact_stationary
from grace.training.trainer import GraceTrainer, TrainLog, cotrain, pretrain, raw_feature_baseline


def _build(dataset, graph, config):
    prop = exact_stationary(graph.T, config.alpha)
    return GraceModel.build(dataset.kappa, config, prop, dataset.content_kind)


def _config(tiny_config, **changes):
    values = tiny_config.echo()
    values.update(changes)
    return TrainConfig(**values)


def test_pretraining_lowers_reconstruction_loss(tiny_dataset, tiny_graph, tiny_config):
    config = _config(tiny_config, T0=200, rho=1e-2)
    model = _build(tiny_dataset, tiny_graph, config)
    before = model.forward(tiny_dataset.A, with_clustering=False).J1
    trace = GraceTrainer(config).pretrain(model, tiny_dataset.A)
    after = model.forward(tiny_dataset.A, with_clustering=False).J1
    assert len(trace) == 200
    assert after < before


def test_first_macro_step_lowers_clustering_loss(tiny_dataset, tiny_graph, tiny_config):
    config = _config(tiny_config, T0=300, T=1, micro_steps=5, dropout=0.0, rho=1e-3)
    assert config.lam == 0.1
    model = _build(tiny_dataset, tiny_graph, config)
    result = GraceTrainer(config).fit(model, tiny_dataset.A)
    first = result.macro_steps[0]
    assert first.J2_end < first.J2_start


def test_logged_clustering_loss_matches_macro_step_start(tiny_dataset, tiny_graph, tiny_config):
    model = _build(tiny_dataset, tiny_graph, tiny_config)
    result = GraceTrainer(tiny_config).fit(model, tiny_dataset.A)
    logged = result.log.column("J2", phase="cotrain")
    for t, macro in enumerate(result.macro_steps):
        assert logged[t * tiny_config.micro_steps] == macro.J2_start


def test_module_level_pretrain_and_cotrain(tiny_dataset, tiny_graph, tiny_config):
    model = _build(tiny_dataset, tiny_graph, tiny_config)
    trace = pretrain(model, tiny_dataset.A, tiny_config)
    assert len(trace) == tiny_config.pretrain_epochs
    assert model.centers is None

    result = cotrain(model, tiny_dataset.A, tiny_config)
    assert model.centers is not None
    assert len(result.macro_steps) == tiny_config.macro_steps
    assert result.labels.shape == (tiny_dataset.n,)
    np.testing.assert_allclose(result.Q.sum(axis=1), 1.0)


def test_fit_is_deterministic(tiny_dataset, tiny_graph, tiny_config):
    runs = []
    for _ in range(2):
        model = _build(tiny_dataset, tiny_graph, tiny_config)
        runs.append(GraceTrainer(tiny_config).fit(model, tiny_dataset.A))
    np.testing.assert_array_equal(runs[0].Q, runs[1].Q)
    np.testing.assert_array_equal(runs[0].labels, runs[1].labels)
    assert runs[0].log.rows == runs[1].log.rows


def test_lambda_zero_cotraining_equals_longer_pretraining(tiny_dataset, tiny_graph, tiny_config):
    config = _config(tiny_config, T0=10, T=2, micro_steps=5, **{"lambda": 0.0})
    model = _build(tiny_dataset, tiny_graph, config)
    result = GraceTrainer(config).fit(model, tiny_dataset.A)
    assert all(J2 is None for J2 in result.log.column("J2"))
    joint_trace = result.log.column("J1")

    reference = _build(tiny_dataset, tiny_graph, config)
    plain_trace = GraceTrainer(config).pretrain(reference, tiny_dataset.A, epochs=20)
    assert joint_trace == plain_trace


def test_log_rows_and_csv(tmp_path, tiny_dataset, tiny_graph, tiny_config):
    model = _build(tiny_dataset, tiny_graph, tiny_config)
    result = GraceTrainer(tiny_config).fit(model, tiny_dataset.A)
    phases = [row[0] for row in result.log.rows]
    assert phases.count("pretrain") == tiny_config.pretrain_epochs
    assert phases.count("cotrain") == tiny_config.macro_steps * tiny_config.micro_steps
    assert all(J2 is not None for J2 in result.log.column("J2", phase="cotrain"))

    path = tmp_path / "log.csv"
    result.log.write_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "phase,step,J1,J2,J"
    assert lines[1].startswith("pretrain,1,") and ",," in lines[1]
    assert len(lines) == len(result.log.rows) + 1


def test_checkpoint_after_every_macro_step(tmp_path, tiny_dataset, tiny_graph, tiny_config):
    path = str(tmp_path / "model.grace")
    model = _build(tiny_dataset, tiny_graph, tiny_config)
    GraceTrainer(tiny_config, checkpoint_path=path).fit(model, tiny_dataset.A)
    checkpoint = load_checkpoint(path)
    assert checkpoint.extra["macro_step"] == tiny_config.macro_steps
    np.testing.assert_array_equal(np.asarray(checkpoint.centers), model.centers.U)


def test_divergence_names_the_epoch(tiny_dataset, tiny_graph, tiny_config):
    model = _build(tiny_dataset, tiny_graph, tiny_config)
    model.encoder[0].weight[:] = np.inf
    with pytest.raises(NumericalError, match="epoch 1"):
        GraceTrainer(tiny_config).pretrain(model, tiny_dataset.A)


def test_train_log_column_filter():
    log = TrainLog()
    log.add("pretrain", 1, 2.0, None, 2.0)
    log.add("cotrain", 1, 1.0, 0.5, 1.05)
    assert log.column("J") == [2.0, 1.05]
    assert log.column("J2", phase="cotrain") == [0.5]


def test_raw_feature_baseline_is_seeded(tiny_dataset):
    first = raw_feature_baseline(tiny_dataset.A, 2, seed=1)
    second = raw_feature_baseline(tiny_dataset.A, 2, seed=1)
    np.testing.assert_array_equal(first, second)
    assert first.shape == (tiny_dataset.n,)


@pytest.mark.slow
def test_recovers_planted_blocks(sbm_params):
    dataset = generate_sbm(sbm_params)
    graph = dataset.graph()
    config = TrainConfig(**{"K": sbm_params.K_blocks, "seed": 0})
    model = _build(dataset, graph, config)
    result = GraceTrainer(config).fit(model, dataset.A)

    scores = score_labels(dataset.truth, result.labels)
    baseline = score_labels(dataset.truth, raw_feature_baseline(dataset.A, config.n_clusters, config.seed))
    assert scores["F1"] >= 0.9
    assert scores["JC"] >= 0.8
    assert scores["F1"] > baseline["F1"]
