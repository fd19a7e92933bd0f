"""Network, loss, optimizer-step and checkpoint tests."""
import math

import numpy as np
import pytest
import torch

from slapzero.net import (CheckpointError, NetConfig, PolicyValueNet,
                          StepMetrics, TrainHyper, Trainer, autoclip_threshold,
                          gradient_check, load_checkpoint, loss, policy_value,
                          save_checkpoint, validation_loss)

TINY = NetConfig(board_size=5, common_filters=(4, 4))


def _random_batch(config: NetConfig, batch: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    n = config.board_size
    states = rng.random((batch, config.in_channels, n, n)).astype(np.float32)
    pis = rng.random((batch, n * n)).astype(np.float32)
    pis /= pis.sum(axis=1, keepdims=True)
    zs = rng.uniform(-1, 1, size=batch).astype(np.float32)
    return states, pis, zs


def test_net_config_validation():
    with pytest.raises(ValueError):
        NetConfig(in_channels=3)
    with pytest.raises(ValueError):
        NetConfig(dropout=1.0)
    assert NetConfig().digest() == NetConfig().digest()
    assert NetConfig().digest() != NetConfig(in_channels=8).digest()


def test_forward_shapes_and_value_range():
    for config in (NetConfig(), NetConfig(in_channels=8),
                   NetConfig(num_res_blocks=2, res_filters=16),
                   NetConfig(extra_act_fc=True)):
        net = PolicyValueNet(config)
        states, _, _ = _random_batch(config, 3)
        logits, values = net(torch.from_numpy(states))
        assert logits.shape == (3, config.board_size ** 2)
        assert values.shape == (3,)
        assert (values.abs() <= 1.0).all()


def test_forward_rejects_wrong_channels():
    net = PolicyValueNet(NetConfig(in_channels=4))
    with pytest.raises(ValueError):
        net(torch.zeros((1, 8, 8, 8)))


def test_init_is_seeded():
    a = PolicyValueNet(TINY, init_seed=7)
    b = PolicyValueNet(TINY, init_seed=7)
    c = PolicyValueNet(TINY, init_seed=8)
    pa = torch.cat([p.flatten() for p in a.parameters()])
    pb = torch.cat([p.flatten() for p in b.parameters()])
    pc = torch.cat([p.flatten() for p in c.parameters()])
    assert torch.equal(pa, pb)
    assert not torch.equal(pa, pc)


def test_policy_value_normalization():
    net = PolicyValueNet(NetConfig())
    states, _, _ = _random_batch(NetConfig(), 5)
    probs, values = policy_value(net, states)
    assert probs.shape == (5, 64)
    assert np.all(probs >= 0)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
    single_probs, single_value = policy_value(net, states[0])
    assert np.allclose(single_probs, probs[0], atol=1e-6)
    assert isinstance(single_value, float)


def test_loss_worked_examples():
    # perfect prediction: zero loss apart from the policy entropy floor
    pi = np.array([[1.0, 0.0]])
    assert abs(loss(pi, np.array([0.3]), pi, np.array([0.3]))) < 1e-6
    # half-half policy against a one-hot target, value off by one
    probs = np.array([[0.5, 0.5]])
    target = np.array([[1.0, 0.0]])
    expected = 1.0 + math.log(2.0)
    assert abs(loss(probs, np.array([0.0]), target, np.array([1.0]))
               - expected) < 1e-6
    # uniform policy over 64 cells, exact value: cross entropy is ln 64
    probs64 = np.full((1, 64), 1.0 / 64.0)
    rng = np.random.default_rng(0)
    target64 = rng.random((1, 64))
    target64 /= target64.sum()
    assert abs(loss(probs64, np.array([0.5]), target64, np.array([0.5]))
               - math.log(64.0)) < 1e-6


def test_loss_rejects_non_finite():
    good = np.array([[0.5, 0.5]])
    with pytest.raises(FloatingPointError):
        loss(np.array([[np.nan, 0.5]]), np.array([0.0]), good, np.array([0.0]))
    with pytest.raises(FloatingPointError):
        loss(good, np.array([np.inf]), good, np.array([0.0]))


def test_autoclip_threshold_examples():
    assert abs(autoclip_threshold([2.0, 4.0], 10.0) - 2.2) < 1e-12
    assert autoclip_threshold([5.0], 10.0) == 5.0
    history = [1.0, 2.0, 3.0, 4.0, 5.0]
    assert autoclip_threshold(history, 0.0) == 1.0
    assert autoclip_threshold(history, 100.0) == 5.0


def test_train_hyper_validation():
    with pytest.raises(ValueError):
        TrainHyper(optimizer="rmsprop")
    with pytest.raises(ValueError):
        TrainHyper(lr=0.0)
    with pytest.raises(ValueError):
        TrainHyper(l2=-1.0)


def test_trainer_overfits_small_batch():
    net = PolicyValueNet(TINY, init_seed=1)
    trainer = Trainer(net, TrainHyper(lr=3e-3, l2=0.0, batch_size=8))
    states, pis, zs = _random_batch(TINY, 8, seed=1)
    first = trainer.step(states, pis, zs)
    assert isinstance(first, StepMetrics)
    for _ in range(150):
        last = trainer.step(states, pis, zs)
    assert last.loss < first.loss
    assert trainer.step_count == 151


def test_trainer_autoclip_per_step():
    net = PolicyValueNet(TINY, init_seed=2)
    hyper = TrainHyper(lr=1e-3, autoclip=True, clip_percentile=10.0)
    trainer = Trainer(net, hyper)
    states, pis, zs = _random_batch(TINY, 8, seed=2)
    for _ in range(12):
        metrics = trainer.step(states, pis, zs)
        threshold = autoclip_threshold(trainer.grad_norm_history, 10.0)
        assert metrics.grad_norm <= threshold + 1e-9
    assert len(trainer.grad_norm_history) == 12


def test_trainer_applies_lr_multiplier():
    net = PolicyValueNet(TINY)
    hyper = TrainHyper(lr=1e-2)
    trainer = Trainer(net, hyper)
    states, pis, zs = _random_batch(TINY, 4)
    trainer.step(states, pis, zs)
    assert trainer.optimizer.param_groups[0]["lr"] == 1e-2
    hyper.lr_multiplier = 0.5
    trainer.step(states, pis, zs)
    assert trainer.optimizer.param_groups[0]["lr"] == 5e-3


def test_sgd_optimizer_choice():
    net = PolicyValueNet(TINY)
    trainer = Trainer(net, TrainHyper(optimizer="sgd", lr=1e-2))
    assert isinstance(trainer.optimizer, torch.optim.SGD)


def test_validation_loss_matches_loss_function():
    net = PolicyValueNet(TINY, init_seed=3)
    states, pis, zs = _random_batch(TINY, 10, seed=3)
    probs, values = policy_value(net, states)
    direct = loss(probs, values, pis, zs)
    chunked = validation_loss(net, states, pis, zs, chunk=3)
    assert abs(direct - chunked) < 1e-5


def test_gradient_check_tiny_net():
    config = NetConfig(board_size=5, common_filters=(3,))
    net = PolicyValueNet(config, init_seed=4)
    states, pis, zs = _random_batch(config, 2, seed=4)
    max_err, frac = gradient_check(net, states, pis, zs, h=1e-5)
    assert max_err < 1e-3
    assert frac == 1.0


def test_checkpoint_round_trip(tmp_path):
    config = NetConfig(board_size=8, common_filters=(8, 8))
    net = PolicyValueNet(config, init_seed=5)
    hyper = TrainHyper(lr=2e-3, autoclip=True)
    path = tmp_path / "net.bin"
    save_checkpoint(net, hyper, 42, path)
    loaded, loaded_hyper, step = load_checkpoint(path, expected_config=config)
    assert step == 42
    assert loaded_hyper == hyper
    for p, q in zip(net.parameters(), loaded.parameters()):
        assert torch.equal(p, q)
    states, _, _ = _random_batch(config, 2)
    probs_a, values_a = policy_value(net, states)
    probs_b, values_b = policy_value(loaded, states)
    assert np.array_equal(probs_a, probs_b)


def test_checkpoint_errors(tmp_path):
    config = NetConfig(board_size=5, common_filters=(4,))
    net = PolicyValueNet(config)
    path = tmp_path / "net.bin"
    save_checkpoint(net, TrainHyper(), 0, path)
    data = path.read_bytes()

    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXX" + data[4:])
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)

    truncated = tmp_path / "short.bin"
    truncated.write_bytes(data[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(truncated)

    with pytest.raises(CheckpointError):
        load_checkpoint(path, expected_config=NetConfig(board_size=8))


def test_trainer_step_log_jsonl(tmp_path):
    import json

    log = tmp_path / "steps.jsonl"
    net = PolicyValueNet(TINY, init_seed=3)
    trainer = Trainer(net, TrainHyper(lr=1e-3), log_path=str(log))
    states, pis, zs = _random_batch(TINY, 4, seed=3)
    trainer.step(states, pis, zs)
    trainer.step(states, pis, zs)
    records = [json.loads(ln) for ln in log.read_text().splitlines()]
    assert [r["step"] for r in records] == [1, 2]
    assert set(records[0]) == {"step", "loss", "value_loss", "policy_loss",
                               "entropy", "grad_norm", "lr_multiplier"}
    assert records[0]["lr_multiplier"] == 1.0
