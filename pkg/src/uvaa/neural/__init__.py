"""Minimal float64 differentiable kernel: LSTM, tanh MLP, Adam, checkpoints.

The layer set is fixed (no generic autodiff): an optional LSTM front layer,
tanh fully-connected layers, a linear head, and a tanh-squashed Gaussian
action head.  Every backward pass is analytic and verified against central
finite differences in the test suite.
"""

from .adam import AdamState, adam_update, init_adam
from .checkpoint import (
    CHECKPOINT_VERSION,
    content_id,
    load_arrays,
    load_arrays_bytes,
    save_arrays,
    save_arrays_bytes,
)
from .layers import (
    LinearParams,
    LstmCellParams,
    flatten_arrays,
    init_linear,
    init_lstm,
    linear_backward,
    linear_forward,
    lstm_backward,
    lstm_forward,
    numeric_gradients,
    unflatten_arrays,
)
from .nets import PolicyNetwork, SequenceNet, ValueNetwork
from .sampling import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    gaussian_log_prob,
    log_prob_of_raw,
    mean_action,
    sample_action,
    squash,
)

__all__ = [
    "AdamState",
    "adam_update",
    "init_adam",
    "CHECKPOINT_VERSION",
    "content_id",
    "load_arrays",
    "load_arrays_bytes",
    "save_arrays",
    "save_arrays_bytes",
    "LinearParams",
    "LstmCellParams",
    "flatten_arrays",
    "init_linear",
    "init_lstm",
    "linear_backward",
    "linear_forward",
    "lstm_backward",
    "lstm_forward",
    "numeric_gradients",
    "unflatten_arrays",
    "PolicyNetwork",
    "SequenceNet",
    "ValueNetwork",
    "LOG_STD_MAX",
    "LOG_STD_MIN",
    "gaussian_log_prob",
    "log_prob_of_raw",
    "mean_action",
    "sample_action",
    "squash",
]
