"""Policy-value CNN, loss, training step with percentile gradient clipping,
and checkpoint I/O.

The network follows a small AlphaZero-style layout: three common 3x3 conv
layers (or a 256-filter residual tower), a policy head emitting N^2 move
logits and a value head emitting a tanh-bounded scalar.
"""
from __future__ import annotations

import copy
import hashlib
import json
import struct
from dataclasses import dataclass, field, asdict

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

_LOG_CLAMP = 1e-10


class CheckpointError(Exception):
    pass


@dataclass(frozen=True)
class NetConfig:
    board_size: int = 8
    in_channels: int = 4
    common_filters: tuple = (32, 64, 128)
    num_res_blocks: int = 0
    res_filters: int = 256
    extra_act_fc: bool = False
    dropout: float = 0.0

    def __post_init__(self):
        if self.in_channels not in (4, 8):
            raise ValueError("in_channels must be 4 or 8")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class TrainHyper:
    optimizer: str = "adam"  # "adam" or "sgd"
    lr: float = 1e-3
    l2: float = 1e-4
    batch_size: int = 512
    lr_multiplier: float = 1.0
    autoclip: bool = False
    clip_percentile: float = 10.0

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        if self.lr <= 0 or self.lr_multiplier <= 0:
            raise ValueError("lr and lr_multiplier must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")


@dataclass
class StepMetrics:
    loss: float
    value_loss: float
    policy_loss: float
    entropy: float
    grad_norm: float


class _ResBlock(nn.Module):
    def __init__(self, filters: int):
        super().__init__()
        self.conv1 = nn.Conv2d(filters, filters, 3, padding=1)
        self.conv2 = nn.Conv2d(filters, filters, 3, padding=1)

    def forward(self, x):
        y = F.relu(self.conv1(x))
        y = self.conv2(y)
        return F.relu(x + y)


class PolicyValueNet(nn.Module):
    def __init__(self, config: NetConfig = NetConfig(), init_seed: int = 0):
        super().__init__()
        self.config = config
        n = config.board_size
        if config.num_res_blocks > 0:
            self.stem = nn.Conv2d(config.in_channels, config.res_filters, 3,
                                  padding=1, bias=False)
            self.blocks = nn.ModuleList(
                _ResBlock(config.res_filters) for _ in range(config.num_res_blocks))
            body_out = config.res_filters
        else:
            convs, prev = [], config.in_channels
            for f in config.common_filters:
                convs.append(nn.Conv2d(prev, f, 3, padding=1))
                prev = f
            self.commons = nn.ModuleList(convs)
            body_out = prev
        self.dropout = nn.Dropout(config.dropout)

        self.policy_conv = nn.Conv2d(body_out, 4, 1)
        if config.extra_act_fc:
            self.policy_hidden = nn.Linear(4 * n * n, 64)
            self.policy_out = nn.Linear(64, n * n)
        else:
            self.policy_out = nn.Linear(4 * n * n, n * n)

        self.value_conv = nn.Conv2d(body_out, 2, 1)
        self.value_hidden = nn.Linear(2 * n * n, 64)
        self.value_out = nn.Linear(64, 1)

        self._init_weights(init_seed)

    def _init_weights(self, seed: int):
        # fan-in scaled uniform, zero biases; seeded for reproducible runs
        rng = np.random.default_rng(seed)
        for m in self.modules():
            if isinstance(m, (nn.Conv2d, nn.Linear)):
                fan_in = m.weight[0].numel()
                bound = 1.0 / np.sqrt(fan_in)
                w = rng.uniform(-bound, bound, size=tuple(m.weight.shape))
                with torch.no_grad():
                    m.weight.copy_(torch.from_numpy(w))
                    if m.bias is not None:
                        m.bias.zero_()

    def forward(self, x):
        """Return (policy logits B x N^2, values B)."""
        if x.shape[1] != self.config.in_channels:
            raise ValueError(f"expected {self.config.in_channels} input "
                             f"channels, got {x.shape[1]}")
        if self.config.num_res_blocks > 0:
            x = F.relu(self.stem(x))
            for block in self.blocks:
                x = block(x)
        else:
            for conv in self.commons:
                x = F.relu(conv(x))
        p = self.dropout(F.relu(self.policy_conv(x))).flatten(1)
        if self.config.extra_act_fc:
            p = self.dropout(F.relu(self.policy_hidden(p)))
        logits = self.policy_out(p)
        v = self.dropout(F.relu(self.value_conv(x))).flatten(1)
        v = self.dropout(F.relu(self.value_hidden(v)))
        v = torch.tanh(self.value_out(v)).squeeze(-1)
        return logits, v


def policy_value(net: PolicyValueNet, states: np.ndarray):
    """Inference: softmax policy rows and values for a batch, as numpy."""
    states = np.asarray(states, dtype=np.float32)
    single = states.ndim == 3
    if single:
        states = states[None]
    was_training = net.training
    net.eval()
    with torch.no_grad():
        logits, values = net(torch.from_numpy(states))
        probs = F.softmax(logits, dim=1)
    if was_training:
        net.train()
    probs, values = probs.numpy(), values.numpy()
    if single:
        return probs[0], float(values[0])
    return probs, values


def loss_terms(probs, values, target_pi, target_z):
    """Mean squared value error plus policy cross-entropy (torch tensors)."""
    log_p = torch.log(torch.clamp(probs, min=_LOG_CLAMP))
    policy_loss = -(target_pi * log_p).sum(dim=1).mean()
    value_loss = ((values - target_z) ** 2).mean()
    return value_loss + policy_loss, value_loss, policy_loss


def loss(probs: np.ndarray, values: np.ndarray, target_pi: np.ndarray,
         target_z: np.ndarray) -> float:
    """Numpy-facing loss; raises on non-finite input."""
    arrays = [np.asarray(a, dtype=np.float64) for a in
              (probs, values, target_pi, target_z)]
    if any(not np.isfinite(a).all() for a in arrays):
        raise FloatingPointError("non-finite input to loss")
    probs, values, target_pi, target_z = arrays
    log_p = np.log(np.clip(probs, _LOG_CLAMP, None))
    policy_loss = float(-(target_pi * log_p).sum(axis=1).mean())
    value_loss = float(((values - target_z) ** 2).mean())
    return value_loss + policy_loss


def autoclip_threshold(history, percentile: float) -> float:
    """Linear-interpolation percentile of all observed gradient norms."""
    return float(np.percentile(np.asarray(history, dtype=np.float64), percentile))


class Trainer:
    """Owns the optimizer state and gradient-norm history for one net."""

    def __init__(self, net: PolicyValueNet, hyper: TrainHyper,
                 log_path: str | None = None):
        self.net = net
        self.hyper = hyper
        self.grad_norm_history: list[float] = []
        self.step_count = 0
        self.log_path = log_path
        if hyper.optimizer == "adam":
            self.optimizer = torch.optim.Adam(
                net.parameters(), lr=hyper.lr, betas=(0.9, 0.999), eps=1e-8,
                weight_decay=hyper.l2)
        else:
            self.optimizer = torch.optim.SGD(
                net.parameters(), lr=hyper.lr, weight_decay=hyper.l2)

    def step(self, states: np.ndarray, target_pi: np.ndarray,
             target_z: np.ndarray) -> StepMetrics:
        hyper = self.hyper
        for group in self.optimizer.param_groups:
            group["lr"] = hyper.lr * hyper.lr_multiplier
        self.net.train()
        states = torch.from_numpy(np.asarray(states, dtype=np.float32))
        pi = torch.from_numpy(np.asarray(target_pi, dtype=np.float32))
        z = torch.from_numpy(np.asarray(target_z, dtype=np.float32))
        self.optimizer.zero_grad()
        logits, values = self.net(states)
        probs = F.softmax(logits, dim=1)
        total, value_loss, policy_loss = loss_terms(probs, values, pi, z)
        if not torch.isfinite(total):
            raise FloatingPointError(
                f"non-finite training loss at step {self.step_count}")
        total.backward()
        raw_norm = float(torch.norm(torch.stack(
            [p.grad.norm() for p in self.net.parameters() if p.grad is not None])))
        if hyper.autoclip:
            self.grad_norm_history.append(raw_norm)
            threshold = autoclip_threshold(self.grad_norm_history,
                                           hyper.clip_percentile)
            nn.utils.clip_grad_norm_(self.net.parameters(), threshold)
            grad_norm = min(raw_norm, threshold)
        else:
            grad_norm = raw_norm
        self.optimizer.step()
        self.step_count += 1
        with torch.no_grad():
            entropy = float(-(probs * torch.log(
                torch.clamp(probs, min=_LOG_CLAMP))).sum(dim=1).mean())
        metrics = StepMetrics(loss=float(total.detach()),
                              value_loss=float(value_loss.detach()),
                              policy_loss=float(policy_loss.detach()),
                              entropy=entropy, grad_norm=grad_norm)
        if self.log_path is not None:
            record = {"step": self.step_count, "loss": metrics.loss,
                      "value_loss": metrics.value_loss,
                      "policy_loss": metrics.policy_loss,
                      "entropy": metrics.entropy,
                      "grad_norm": metrics.grad_norm,
                      "lr_multiplier": hyper.lr_multiplier}
            with open(self.log_path, "a") as f:
                f.write(json.dumps(record, sort_keys=True) + "\n")
        return metrics


def validation_loss(net: PolicyValueNet, states: np.ndarray, pis: np.ndarray,
                    zs: np.ndarray, chunk: int = 1024) -> float:
    """Dropout-free loss over a fixed set, averaged per sample."""
    net.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for i in range(0, len(states), chunk):
            s = torch.from_numpy(np.asarray(states[i:i + chunk], dtype=np.float32))
            pi = torch.from_numpy(np.asarray(pis[i:i + chunk], dtype=np.float32))
            z = torch.from_numpy(np.asarray(zs[i:i + chunk], dtype=np.float32))
            logits, values = net(s)
            probs = F.softmax(logits, dim=1)
            t, _, _ = loss_terms(probs, values, pi, z)
            total += float(t) * len(s)
            count += len(s)
    return total / count


def gradient_check(net: PolicyValueNet, states: np.ndarray, pis: np.ndarray,
                   zs: np.ndarray, h: float = 1e-4, jitter: float = 1e-2):
    """Central finite differences vs autograd on a float64 copy of the net.

    Parameters are jittered to a generic point first: fresh zero biases put
    ReLU pre-activations exactly on the kink, where the two-sided difference
    and the subgradient legitimately disagree.

    Returns (max relative error, fraction of parameters within 1e-3).
    """
    net64 = copy.deepcopy(net).double()
    net64.eval()
    if jitter:
        _jitter_to_generic_point(net64, states, h, jitter)
    s = torch.from_numpy(np.asarray(states, dtype=np.float64))
    pi = torch.from_numpy(np.asarray(pis, dtype=np.float64))
    z = torch.from_numpy(np.asarray(zs, dtype=np.float64))

    def compute_loss():
        logits, values = net64(s)
        probs = F.softmax(logits, dim=1)
        total, _, _ = loss_terms(probs, values, pi, z)
        return total

    net64.zero_grad()
    compute_loss().backward()
    analytic = [p.grad.clone() for p in net64.parameters()]

    errors = []
    with torch.no_grad():
        for p, g in zip(net64.parameters(), analytic):
            flat = p.view(-1)
            gflat = g.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + h
                up = compute_loss().item()
                flat[i] = orig - h
                down = compute_loss().item()
                flat[i] = orig
                numeric = (up - down) / (2 * h)
                a = gflat[i].item()
                rel = abs(a - numeric) / max(1e-6, abs(a), abs(numeric))
                errors.append(rel)
    errors = np.array(errors)
    return float(errors.max()), float((errors < 1e-3).mean())


def _jitter_to_generic_point(net64, states, h, jitter, max_tries=50):
    """Offset parameters until no ReLU pre-activation sits within the finite
    difference window of its kink (where the subgradient is ambiguous)."""
    s = torch.from_numpy(np.asarray(states, dtype=np.float64))
    base = [p.detach().clone() for p in net64.parameters()]
    for attempt in range(max_tries):
        jrng = np.random.default_rng(12345 + attempt)
        with torch.no_grad():
            for p, b in zip(net64.parameters(), base):
                offset = jrng.uniform(-jitter, jitter, size=tuple(p.shape))
                p.copy_(b + torch.from_numpy(offset))
        preacts = []
        hooks = [m.register_forward_hook(
                    lambda _m, _i, out: preacts.append(out.detach()))
                 for m in net64.modules()
                 if isinstance(m, (nn.Conv2d, nn.Linear))]
        with torch.no_grad():
            net64(s)
        for hook in hooks:
            hook.remove()
        min_gap = min(float(p.abs().min()) for p in preacts)
        if min_gap > 10 * h:
            return
    raise RuntimeError("could not find a generic point for the gradient check")


_MAGIC = b"SZPV"
_VERSION = 1


def save_checkpoint(net: PolicyValueNet, hyper: TrainHyper, step: int,
                    path) -> None:
    header = {
        "net_config": asdict(net.config),
        "hyper": asdict(hyper),
        "step": step,
        "digest": net.config.digest(),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    params = np.concatenate([
        p.detach().numpy().astype("<f4").ravel() for p in net.parameters()])
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<II", _VERSION, len(header_bytes)))
        f.write(header_bytes)
        f.write(params.tobytes())


def load_checkpoint(path, expected_config: NetConfig | None = None):
    """Returns (net, hyper, step); bit-exact parameter round trip."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != _MAGIC:
        raise CheckpointError("bad magic bytes")
    version, header_len = struct.unpack("<II", data[4:12])
    if version != _VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(data[12:12 + header_len])
    cfg_dict = dict(header["net_config"])
    cfg_dict["common_filters"] = tuple(cfg_dict["common_filters"])
    config = NetConfig(**cfg_dict)
    if header["digest"] != config.digest():
        raise CheckpointError("header digest mismatch")
    if expected_config is not None and expected_config.digest() != config.digest():
        raise CheckpointError("checkpoint config does not match expected config")
    net = PolicyValueNet(config)
    params = np.frombuffer(data[12 + header_len:], dtype="<f4")
    expected = sum(p.numel() for p in net.parameters())
    if len(params) != expected:
        raise CheckpointError(
            f"truncated checkpoint: {len(params)} values, expected {expected}")
    offset = 0
    with torch.no_grad():
        for p in net.parameters():
            count = p.numel()
            chunk = params[offset:offset + count].reshape(tuple(p.shape))
            p.copy_(torch.from_numpy(chunk.copy()))
            offset += count
    hyper = TrainHyper(**header["hyper"])
    return net, hyper, int(header["step"])
