"""LSTM cell and linear layers with analytic reverse-mode gradients.

Everything runs in float64.  Sequences are laid out (T, B, features); the
time loop is the only Python-level iteration, all per-step math is
vectorized over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatchError


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh-based form is overflow-free for large |x|.
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def _orthogonal(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(q[:rows, :cols])


@dataclass
class LstmCellParams:
    """Fused gate parameters, gate order (input, forget, candidate, output).

    ``w_x`` is (D_in, 4H), ``w_h`` is (H, 4H), ``b`` is (4H,).  Per-gate
    matrices are exposed as views for inspection.
    """

    w_x: np.ndarray
    w_h: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        if self.w_x.ndim != 2 or self.w_h.ndim != 2 or self.b.ndim != 1:
            raise ShapeMismatchError("LSTM parameter arrays have wrong rank")
        four_h = self.w_x.shape[1]
        if four_h % 4 != 0 or self.w_h.shape[1] != four_h or self.b.shape[0] != four_h:
            raise ShapeMismatchError("LSTM gate dimensions are inconsistent")
        if self.w_h.shape[0] != four_h // 4:
            raise ShapeMismatchError("recurrent matrix must be (H, 4H)")
        if not (
            np.isfinite(self.w_x).all()
            and np.isfinite(self.w_h).all()
            and np.isfinite(self.b).all()
        ):
            raise ValueError("LSTM parameters must be finite")

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_x.shape[0]

    def _gate(self, idx: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        h = self.hidden_size
        sl = slice(idx * h, (idx + 1) * h)
        return self.w_x[:, sl], self.w_h[:, sl], self.b[sl]

    @property
    def input_gate(self):
        return self._gate(0)

    @property
    def forget_gate(self):
        return self._gate(1)

    @property
    def candidate_gate(self):
        return self._gate(2)

    @property
    def output_gate(self):
        return self._gate(3)


def init_lstm(rng: np.random.Generator, d_in: int, hidden: int) -> LstmCellParams:
    """Orthogonal per-gate blocks; forget-gate bias +1."""
    w_x = np.concatenate(
        [_orthogonal((d_in, hidden), rng) for _ in range(4)], axis=1
    )
    w_h = np.concatenate(
        [_orthogonal((hidden, hidden), rng) for _ in range(4)], axis=1
    )
    b = np.zeros(4 * hidden)
    b[hidden : 2 * hidden] = 1.0
    return LstmCellParams(w_x=w_x, w_h=w_h, b=b)


@dataclass
class LstmCache:
    x: np.ndarray  # (T, B, D)
    h_prev: np.ndarray  # (T, B, H) hidden entering each step
    c_prev: np.ndarray  # (T, B, H)
    gates: np.ndarray  # (T, B, 4H) post-activation (i, f, g, o)
    c: np.ndarray  # (T, B, H)
    tanh_c: np.ndarray  # (T, B, H)


def lstm_forward(
    params: LstmCellParams,
    inputs: np.ndarray,
    h0: np.ndarray,
    c0: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, LstmCache]:
    """Run the cell over a (T, B, D) sequence; returns hidden outputs."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 3 or inputs.shape[2] != params.input_size:
        raise ShapeMismatchError(
            f"inputs must be (T, B, {params.input_size}), got {inputs.shape}"
        )
    t_len, batch, _ = inputs.shape
    hidden = params.hidden_size
    if h0.shape != (batch, hidden) or c0.shape != (batch, hidden):
        raise ShapeMismatchError("initial state must be (B, H)")
    hs = np.empty((t_len, batch, hidden))
    cache = LstmCache(
        x=inputs,
        h_prev=np.empty((t_len, batch, hidden)),
        c_prev=np.empty((t_len, batch, hidden)),
        gates=np.empty((t_len, batch, 4 * hidden)),
        c=np.empty((t_len, batch, hidden)),
        tanh_c=np.empty((t_len, batch, hidden)),
    )
    h, c = h0, c0
    for t in range(t_len):
        cache.h_prev[t] = h
        cache.c_prev[t] = c
        z = inputs[t] @ params.w_x + h @ params.w_h + params.b
        i = sigmoid(z[:, :hidden])
        f = sigmoid(z[:, hidden : 2 * hidden])
        g = np.tanh(z[:, 2 * hidden : 3 * hidden])
        o = sigmoid(z[:, 3 * hidden :])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        cache.gates[t, :, :hidden] = i
        cache.gates[t, :, hidden : 2 * hidden] = f
        cache.gates[t, :, 2 * hidden : 3 * hidden] = g
        cache.gates[t, :, 3 * hidden :] = o
        cache.c[t] = c
        cache.tanh_c[t] = tc
        hs[t] = h
    return hs, h, c, cache


def lstm_forward_step(
    params: LstmCellParams,
    x: np.ndarray,
    h: np.ndarray,
    c: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single-step cell application for rollouts (no cache)."""
    hidden = params.hidden_size
    z = x @ params.w_x + h @ params.w_h + params.b
    i = sigmoid(z[:, :hidden])
    f = sigmoid(z[:, hidden : 2 * hidden])
    g = np.tanh(z[:, 2 * hidden : 3 * hidden])
    o = sigmoid(z[:, 3 * hidden :])
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, h_new, c_new


def lstm_backward(
    params: LstmCellParams,
    cache: LstmCache,
    d_hs: np.ndarray,
    bptt_chunk: int | None = None,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Backprop through time.

    ``d_hs`` is the gradient w.r.t. every hidden output (T, B, H).  With
    ``bptt_chunk`` set, the recurrent gradient is cut at chunk boundaries
    (forward values are unaffected, only gradients are truncated).
    """
    t_len, batch, hidden = d_hs.shape
    d_wx = np.zeros_like(params.w_x)
    d_wh = np.zeros_like(params.w_h)
    d_b = np.zeros_like(params.b)
    d_x = np.empty_like(cache.x)
    dh_next = np.zeros((batch, hidden))
    dc_next = np.zeros((batch, hidden))
    for t in range(t_len - 1, -1, -1):
        i = cache.gates[t, :, :hidden]
        f = cache.gates[t, :, hidden : 2 * hidden]
        g = cache.gates[t, :, 2 * hidden : 3 * hidden]
        o = cache.gates[t, :, 3 * hidden :]
        tc = cache.tanh_c[t]
        dh = d_hs[t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        di = dc * g
        dg = dc * i
        df = dc * cache.c_prev[t]
        dc_next = dc * f
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        d_wx += cache.x[t].T @ dz
        d_wh += cache.h_prev[t].T @ dz
        d_b += dz.sum(axis=0)
        dh_next = dz @ params.w_h.T
        d_x[t] = dz @ params.w_x.T
        if bptt_chunk is not None and t % bptt_chunk == 0:
            dh_next = np.zeros((batch, hidden))
            dc_next = np.zeros((batch, hidden))
    return {"w_x": d_wx, "w_h": d_wh, "b": d_b}, d_x


@dataclass
class LinearParams:
    w: np.ndarray  # (D_in, D_out)
    b: np.ndarray  # (D_out,)

    def __post_init__(self) -> None:
        if self.w.ndim != 2 or self.b.shape != (self.w.shape[1],):
            raise ShapeMismatchError("linear parameters inconsistent")


def init_linear(
    rng: np.random.Generator, d_in: int, d_out: int, scale: float = 1.0
) -> LinearParams:
    """Scaled-uniform fan-in initialization."""
    bound = scale / np.sqrt(d_in)
    return LinearParams(
        w=rng.uniform(-bound, bound, size=(d_in, d_out)),
        b=rng.uniform(-bound, bound, size=d_out),
    )


def linear_forward(params: LinearParams, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != params.w.shape[0]:
        raise ShapeMismatchError(
            f"linear expects last dim {params.w.shape[0]}, got {x.shape[-1]}"
        )
    return x @ params.w + params.b


def linear_backward(
    params: LinearParams, x: np.ndarray, d_out: np.ndarray
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    x2 = x.reshape(-1, x.shape[-1])
    d2 = d_out.reshape(-1, d_out.shape[-1])
    grads = {"w": x2.T @ d2, "b": d2.sum(axis=0)}
    return grads, d_out @ params.w.T


def flatten_arrays(arrays: dict[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([arrays[k].ravel() for k in arrays])


def unflatten_arrays(
    vector: np.ndarray, template: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    offset = 0
    for k, arr in template.items():
        out[k] = vector[offset : offset + arr.size].reshape(arr.shape).copy()
        offset += arr.size
    return out


def numeric_gradients(
    loss_fn, params: dict[str, np.ndarray], h: float = 1e-5
) -> dict[str, np.ndarray]:
    """Central finite differences of a scalar loss over named parameter arrays.

    ``loss_fn`` must read the arrays in ``params`` (mutated in place during
    probing) and return a float.
    """
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    for key, arr in params.items():
        flat = arr.ravel()
        g = grads[key].ravel()
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + h
            plus = loss_fn()
            flat[idx] = original - h
            minus = loss_fn()
            flat[idx] = original
            g[idx] = (plus - minus) / (2.0 * h)
    return grads
