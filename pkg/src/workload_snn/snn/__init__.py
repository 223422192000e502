"""LIF spike encoding and the bio-inspired / hybrid spiking classifiers."""

from .core import (
    SURROGATE_SLOPE,
    backward,
    classify,
    delta_update,
    encode_lif,
    encode_matrix,
    forward,
    leaky_step,
    predict,
    relaxed_gradient,
    relaxed_loss,
)
from .model import LeakyParams, LifEncoderParams, SnnModel, init_bio, init_hybrid
from .training import (
    DEFAULT_GRID,
    TrainConfig,
    TrainReport,
    build_model,
    fit_snn,
    grid_search_snn,
    p_conn_sweep,
    train_bio,
    train_hybrid,
)
