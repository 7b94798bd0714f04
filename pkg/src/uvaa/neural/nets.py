"""Policy and vector-value networks built on the fixed layer set.

Trunk: LSTM (or a plain tanh layer when the recurrent front end is
disabled) followed by tanh fully-connected layers.  The policy head emits
per-component Gaussian means plus a state-independent log-std vector; the
value head emits one expected return per objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatchError
from .layers import (
    LinearParams,
    LstmCellParams,
    init_linear,
    init_lstm,
    linear_backward,
    linear_forward,
    lstm_backward,
    lstm_forward,
    lstm_forward_step,
)
from .sampling import LOG_STD_MAX, LOG_STD_MIN


@dataclass
class TrunkCache:
    lstm_cache: object | None
    first_pre: np.ndarray | None  # non-recurrent first layer input
    first_out: np.ndarray | None
    fc_inputs: list[np.ndarray]
    fc_outputs: list[np.ndarray]
    head_input: np.ndarray


class SequenceNet:
    """Trunk plus linear head operating on (T, B, features) sequences."""

    def __init__(
        self,
        d_in: int,
        d_out: int,
        lstm: LstmCellParams | None,
        first: LinearParams | None,
        fcs: list[LinearParams],
        head: LinearParams,
    ):
        if (lstm is None) == (first is None):
            raise ValueError("exactly one of lstm/first must be set")
        self.d_in = d_in
        self.d_out = d_out
        self.lstm = lstm
        self.first = first
        self.fcs = fcs
        self.head = head

    @property
    def recurrent(self) -> bool:
        return self.lstm is not None

    @property
    def trunk_width(self) -> int:
        if self.lstm is not None:
            return self.lstm.hidden_size
        return self.first.w.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        if self.lstm is not None:
            out["lstm.w_x"] = self.lstm.w_x
            out["lstm.w_h"] = self.lstm.w_h
            out["lstm.b"] = self.lstm.b
        else:
            out["first.w"] = self.first.w
            out["first.b"] = self.first.b
        for i, fc in enumerate(self.fcs):
            out[f"fc{i}.w"] = fc.w
            out[f"fc{i}.b"] = fc.b
        out["head.w"] = self.head.w
        out["head.b"] = self.head.b
        return out

    def param_count(self) -> int:
        return sum(a.size for a in self.params().values())

    def load_params(self, arrays: dict[str, np.ndarray]) -> None:
        own = self.params()
        if set(own) != set(arrays):
            raise ShapeMismatchError(
                f"parameter names differ: expected {sorted(own)}, got {sorted(arrays)}"
            )
        for k, target in own.items():
            src = np.asarray(arrays[k], dtype=np.float64)
            if src.shape != target.shape:
                raise ShapeMismatchError(
                    f"{k}: expected shape {target.shape}, got {src.shape}"
                )
            target[...] = src

    def init_state(self, batch: int) -> tuple[np.ndarray, np.ndarray] | None:
        if self.lstm is None:
            return None
        h = self.lstm.hidden_size
        return np.zeros((batch, h)), np.zeros((batch, h))

    def _trunk_tail(self, x: np.ndarray) -> tuple[np.ndarray, list, list]:
        ins, outs = [], []
        for fc in self.fcs:
            ins.append(x)
            x = np.tanh(linear_forward(fc, x))
            outs.append(x)
        return x, ins, outs

    def forward(
        self, x: np.ndarray
    ) -> tuple[np.ndarray, TrunkCache]:
        """Full-sequence forward from zeroed recurrent state."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != self.d_in:
            raise ShapeMismatchError(f"inputs must be (T, B, {self.d_in})")
        if self.lstm is not None:
            h0, c0 = self.init_state(x.shape[1])
            hs, _, _, lstm_cache = lstm_forward(self.lstm, x, h0, c0)
            first_pre = first_out = None
            feat = hs
        else:
            lstm_cache = None
            first_pre = x
            feat = np.tanh(linear_forward(self.first, x))
            first_out = feat
        feat, fc_ins, fc_outs = self._trunk_tail(feat)
        out = linear_forward(self.head, feat)
        cache = TrunkCache(
            lstm_cache=lstm_cache,
            first_pre=first_pre,
            first_out=first_out,
            fc_inputs=fc_ins,
            fc_outputs=fc_outs,
            head_input=feat,
        )
        return out, cache

    def step(
        self, x: np.ndarray, state: tuple[np.ndarray, np.ndarray] | None
    ) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray] | None]:
        """Single-step forward for rollouts; carries the recurrent state."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.d_in:
            raise ShapeMismatchError(f"step input must be (B, {self.d_in})")
        if self.lstm is not None:
            if state is None:
                state = self.init_state(x.shape[0])
            feat, h, c = lstm_forward_step(self.lstm, x, state[0], state[1])
            state = (h, c)
        else:
            feat = np.tanh(linear_forward(self.first, x))
        for fc in self.fcs:
            feat = np.tanh(linear_forward(fc, feat))
        return linear_forward(self.head, feat), state

    def backward(
        self,
        cache: TrunkCache,
        d_out: np.ndarray,
        bptt_chunk: int | None = None,
    ) -> dict[str, np.ndarray]:
        grads: dict[str, np.ndarray] = {}
        g_head, d_feat = linear_backward(self.head, cache.head_input, d_out)
        grads["head.w"] = g_head["w"]
        grads["head.b"] = g_head["b"]
        for i in range(len(self.fcs) - 1, -1, -1):
            d_pre = d_feat * (1.0 - cache.fc_outputs[i] ** 2)
            g_fc, d_feat = linear_backward(self.fcs[i], cache.fc_inputs[i], d_pre)
            grads[f"fc{i}.w"] = g_fc["w"]
            grads[f"fc{i}.b"] = g_fc["b"]
        if self.lstm is not None:
            g_lstm, _ = lstm_backward(self.lstm, cache.lstm_cache, d_feat, bptt_chunk)
            grads["lstm.w_x"] = g_lstm["w_x"]
            grads["lstm.w_h"] = g_lstm["w_h"]
            grads["lstm.b"] = g_lstm["b"]
        else:
            d_pre = d_feat * (1.0 - cache.first_out**2)
            g_first, _ = linear_backward(self.first, cache.first_pre, d_pre)
            grads["first.w"] = g_first["w"]
            grads["first.b"] = g_first["b"]
        return grads

    def clone(self) -> "SequenceNet":
        arrays = {k: v.copy() for k, v in self.params().items()}
        net = build_sequence_net_like(self)
        net.load_params(arrays)
        return net


def build_sequence_net(
    rng: np.random.Generator,
    d_in: int,
    d_out: int,
    lstm_hidden: int = 128,
    fc_layers: tuple[int, ...] = (256, 256, 256),
    recurrent: bool = True,
    head_scale: float = 1.0,
) -> SequenceNet:
    if recurrent:
        lstm = init_lstm(rng, d_in, lstm_hidden)
        first = None
    else:
        lstm = None
        first = init_linear(rng, d_in, lstm_hidden)
    widths = [lstm_hidden, *fc_layers]
    fcs = [init_linear(rng, widths[i], widths[i + 1]) for i in range(len(fc_layers))]
    head = init_linear(rng, widths[-1], d_out, scale=head_scale)
    return SequenceNet(d_in=d_in, d_out=d_out, lstm=lstm, first=first, fcs=fcs, head=head)


def build_sequence_net_like(net: SequenceNet) -> SequenceNet:
    rng = np.random.default_rng(0)
    fc_layers = tuple(fc.w.shape[1] for fc in net.fcs)
    return build_sequence_net(
        rng,
        net.d_in,
        net.d_out,
        lstm_hidden=net.trunk_width,
        fc_layers=fc_layers,
        recurrent=net.recurrent,
    )


class PolicyNetwork:
    """Gaussian policy: trunk means plus a free log-std vector."""

    def __init__(self, net: SequenceNet, log_std: np.ndarray):
        if log_std.shape != (net.d_out,):
            raise ShapeMismatchError("log_std must match the action dimension")
        self.net = net
        self.log_std = log_std

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        obs_dim: int,
        action_dim: int,
        lstm_hidden: int = 128,
        fc_layers: tuple[int, ...] = (256, 256, 256),
        recurrent: bool = True,
        initial_log_std: float = -0.5,
    ) -> "PolicyNetwork":
        net = build_sequence_net(
            rng,
            obs_dim,
            action_dim,
            lstm_hidden=lstm_hidden,
            fc_layers=fc_layers,
            recurrent=recurrent,
            head_scale=0.01,
        )
        return cls(net, np.full(action_dim, initial_log_std))

    @property
    def action_dim(self) -> int:
        return self.net.d_out

    def params(self) -> dict[str, np.ndarray]:
        out = self.net.params()
        out["log_std"] = self.log_std
        return out

    def param_count(self) -> int:
        return self.net.param_count() + self.log_std.size

    def load_params(self, arrays: dict[str, np.ndarray]) -> None:
        arrays = dict(arrays)
        log_std = arrays.pop("log_std")
        if np.asarray(log_std).shape != self.log_std.shape:
            raise ShapeMismatchError("log_std shape mismatch")
        self.net.load_params(arrays)
        self.log_std[...] = log_std

    def std(self) -> np.ndarray:
        return np.exp(np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX))

    def log_std_grad_mask(self) -> np.ndarray:
        return (
            (self.log_std > LOG_STD_MIN) & (self.log_std < LOG_STD_MAX)
        ).astype(np.float64)

    def init_state(self, batch: int):
        return self.net.init_state(batch)

    def forward_sequence(self, obs: np.ndarray) -> tuple[np.ndarray, TrunkCache]:
        return self.net.forward(obs)

    def step(self, obs: np.ndarray, state):
        return self.net.step(obs, state)

    def backward(
        self,
        cache: TrunkCache,
        d_means: np.ndarray,
        d_log_std: np.ndarray,
        bptt_chunk: int | None = None,
    ) -> dict[str, np.ndarray]:
        grads = self.net.backward(cache, d_means, bptt_chunk)
        grads["log_std"] = d_log_std * self.log_std_grad_mask()
        return grads

    def clone(self) -> "PolicyNetwork":
        return PolicyNetwork(self.net.clone(), self.log_std.copy())


class ValueNetwork:
    """Vector critic: one expected return per objective."""

    def __init__(self, net: SequenceNet):
        self.net = net

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        obs_dim: int,
        n_objectives: int = 2,
        lstm_hidden: int = 128,
        fc_layers: tuple[int, ...] = (256, 256, 256),
        recurrent: bool = True,
    ) -> "ValueNetwork":
        return cls(
            build_sequence_net(
                rng,
                obs_dim,
                n_objectives,
                lstm_hidden=lstm_hidden,
                fc_layers=fc_layers,
                recurrent=recurrent,
            )
        )

    @property
    def n_objectives(self) -> int:
        return self.net.d_out

    def params(self) -> dict[str, np.ndarray]:
        return self.net.params()

    def param_count(self) -> int:
        return self.net.param_count()

    def load_params(self, arrays: dict[str, np.ndarray]) -> None:
        self.net.load_params(arrays)

    def init_state(self, batch: int):
        return self.net.init_state(batch)

    def forward_sequence(self, obs: np.ndarray):
        return self.net.forward(obs)

    def step(self, obs: np.ndarray, state):
        return self.net.step(obs, state)

    def backward(self, cache, d_values, bptt_chunk: int | None = None):
        return self.net.backward(cache, d_values, bptt_chunk)

    def clone(self) -> "ValueNetwork":
        return ValueNetwork(self.net.clone())
