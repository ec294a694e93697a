"""Linear modality embedders, the decomposed block and an affine steering head."""

from dataclasses import dataclass, fields

import numpy as np

from app.common.enums import Modality
from app.common.errors import ShapeError
from app.lttd.block import backward_batch, forward_batch, ModalityTriple
from app.lttd.params import fan_bound, init_params, LttdParams, uniform_block
from app.model.dtos import PAST_STEPS, PredictorConfig, SampleBatch, SteeringSample
from app.model.metrics import mse_loss

POSITION_BASE = 10000.0
OWN_GROUPS = (
    "embed1_weight",
    "embed1_bias",
    "embed2_weight",
    "embed2_bias",
    "embed3_weight",
    "embed3_bias",
    "head_weight",
    "head_bias",
)


@dataclass(frozen=True)
class PredictorParams:
    """Embedders, block parameters and head."""

    embed1_weight: np.ndarray
    embed1_bias: np.ndarray
    embed2_weight: np.ndarray
    embed2_bias: np.ndarray
    embed3_weight: np.ndarray
    embed3_bias: np.ndarray
    lttd: LttdParams
    head_weight: np.ndarray
    head_bias: np.ndarray

    def __post_init__(self) -> None:
        """Coerce every own group to float64."""
        for group in fields(self):
            if group.name != "lttd":
                object.__setattr__(self, group.name, np.asarray(getattr(self, group.name), dtype=np.float64))

    def to_groups(self) -> dict[str, np.ndarray]:
        """Named groups in the fixed serialization order."""
        groups = {name: getattr(self, name) for name in OWN_GROUPS[:6]}
        groups.update({f"lttd.{name}": array for name, array in self.lttd.to_groups().items()})
        groups.update({name: getattr(self, name) for name in OWN_GROUPS[6:]})
        return groups

    @classmethod
    def from_groups(cls, groups: dict[str, np.ndarray]) -> "PredictorParams":
        """Build params from named groups."""
        lttd_groups = {name.split(".", 1)[1]: array for name, array in groups.items() if name.startswith("lttd.")}
        return cls(lttd=LttdParams.from_groups(lttd_groups), **{name: groups[name] for name in OWN_GROUPS})

    def to_vector(self) -> np.ndarray:
        """Flat parameter vector theta."""
        return np.concatenate([array.reshape(-1) for array in self.to_groups().values()])

    def with_head_bias(self, bias: float) -> "PredictorParams":
        """Copy with another head bias."""
        groups = self.to_groups()
        groups["head_bias"] = np.array([bias])
        return PredictorParams.from_groups(groups)


def group_shapes(cfg: PredictorConfig) -> dict[str, tuple[int, ...]]:
    """Shapes of every group, in serialization order."""
    lttd_cfg = cfg.lttd_config()
    slice1, slice2, slice3 = lttd_cfg.slice_dims
    r_slices = cfg.r_slices
    return {
        "embed1_weight": (cfg.d_img, cfg.d1),
        "embed1_bias": (cfg.d1,),
        "embed2_weight": (cfg.d2,),
        "embed2_bias": (cfg.d2,),
        "embed3_weight": (cfg.d_img, cfg.n3 * cfg.d3),
        "embed3_bias": (cfg.n3 * cfg.d3,),
        "lttd.w1": (r_slices, cfg.d1, slice1),
        "lttd.w2": (r_slices, cfg.d2, slice2),
        "lttd.w3": (r_slices, cfg.d3, slice3),
        "lttd.cores": (r_slices, slice1, slice2, slice3),
        "lttd.wz1": (cfg.d1, cfg.d_z),
        "lttd.wz2": (cfg.d2, cfg.d_z),
        "lttd.wz3": (cfg.d3, cfg.d_z),
        "head_weight": (cfg.d_z,),
        "head_bias": (1,),
    }


def parameter_size(cfg: PredictorConfig) -> int:
    """Length of theta."""
    return sum(int(np.prod(dims)) for dims in group_shapes(cfg).values())


def from_vector(cfg: PredictorConfig, theta: np.ndarray) -> PredictorParams:
    """Unflatten theta into named groups."""
    vector = np.asarray(theta, dtype=np.float64)
    if vector.shape != (parameter_size(cfg),):
        raise ShapeError("theta has the wrong length", {"length": vector.shape, "expected": parameter_size(cfg)})
    groups = {}
    offset = 0
    for name, dims in group_shapes(cfg).items():
        width = int(np.prod(dims))
        groups[name] = vector[offset:offset + width].reshape(dims)
        offset += width
    return PredictorParams.from_groups(groups)


def init_predictor_params(cfg: PredictorConfig, seed: int) -> PredictorParams:
    """Fan-based uniform embedders and head, zero biases, block from init_params."""
    return PredictorParams(
        embed1_weight=uniform_block(seed, (cfg.d_img, cfg.d1), fan_bound(cfg.d_img, cfg.d1), "embed1", "weight", 0),
        embed1_bias=np.zeros(cfg.d1),
        embed2_weight=uniform_block(seed, (cfg.d2,), fan_bound(1, cfg.d2), "embed2", "weight", 0),
        embed2_bias=np.zeros(cfg.d2),
        embed3_weight=uniform_block(
            seed, (cfg.d_img, cfg.n3 * cfg.d3), fan_bound(cfg.d_img, cfg.n3 * cfg.d3), "embed3", "weight", 0,
        ),
        embed3_bias=np.zeros(cfg.n3 * cfg.d3),
        lttd=init_params(cfg.lttd_config(), seed),
        head_weight=uniform_block(seed, (cfg.d_z,), fan_bound(cfg.d_z, 1), "head", "weight", 0),
        head_bias=np.zeros(1),
    )


def position_offsets(steps: int, width: int) -> np.ndarray:
    """Sinusoidal time-position table, one row per past step."""
    positions = np.arange(steps, dtype=np.float64)[:, None]
    pair_index = np.arange(width, dtype=np.float64)[None, :] // 2
    angles = positions / np.power(POSITION_BASE, 2.0 * pair_index / width)
    return np.where(np.arange(width)[None, :] % 2 == 0, np.sin(angles), np.cos(angles))


@dataclass(frozen=True)
class _EmbedCache:
    batch: SampleBatch
    offsets: np.ndarray


def embed_batch(params: PredictorParams, cfg: PredictorConfig, batch: SampleBatch) -> tuple[np.ndarray, ...]:
    """Embed a batch into (S, n_l, d_l) modality tensors.

    M1 = past_frames embed1, M2[t] = s_t (embed2 + offset_t) + bias,
    M3 = current_image embed3 split into n3 rows. An excluded modality is a
    single all-ones channel.
    """
    if batch.current_image.shape[1] != cfg.d_img:
        raise ShapeError("Frame width does not match d_img", {"d_img": batch.current_image.shape[1]})
    size = batch.size
    if cfg.uses(Modality.PAST_FRAMES):
        m1 = batch.past_frames @ params.embed1_weight + params.embed1_bias
    else:
        m1 = np.ones((size, 1, cfg.d1))
    if cfg.uses(Modality.STEERING_SERIES):
        lift = params.embed2_weight[None, :] + position_offsets(PAST_STEPS, cfg.d2)
        m2 = batch.past_steering[:, :, None] * lift[None] + params.embed2_bias
    else:
        m2 = np.ones((size, 1, cfg.d2))
    flat3 = batch.current_image @ params.embed3_weight + params.embed3_bias
    m3 = flat3.reshape(size, cfg.n3, cfg.d3)
    return m1, m2, m3


def embed(sample: SteeringSample, params: PredictorParams, cfg: PredictorConfig) -> ModalityTriple:
    """Modality triple of one sample."""
    m1, m2, m3 = embed_batch(params, cfg, SampleBatch.stack([sample]))
    return ModalityTriple(m1[0], m2[0], m3[0])


def predict_batch(params: PredictorParams, cfg: PredictorConfig, batch: SampleBatch) -> np.ndarray:
    """Predicted angles for a batch."""
    m1, m2, m3 = embed_batch(params, cfg, batch)
    z = forward_batch(params.lttd, m1, m2, m3, cfg.normalize_attention)[1]
    return z @ params.head_weight + params.head_bias[0]


def predict(params: PredictorParams, cfg: PredictorConfig, sample: SteeringSample) -> float:
    """Predicted steering angle of one sample."""
    return float(predict_batch(params, cfg, SampleBatch.stack([sample]))[0])


def loss_gradient(
    params: PredictorParams, cfg: PredictorConfig, batch: SampleBatch,
) -> tuple[float, PredictorParams]:
    """MSE loss of a batch and its exact gradient for every parameter group.

    Returns:
        (loss, gradients with the same layout as params)
    """
    m1, m2, m3 = embed_batch(params, cfg, batch)
    z, cache = forward_batch(params.lttd, m1, m2, m3, cfg.normalize_attention)[1:]
    predictions = z @ params.head_weight + params.head_bias[0]
    loss = mse_loss(predictions, batch.targets)
    grad_predictions = 2.0 * (predictions - batch.targets) / batch.size

    upstream = grad_predictions[:, None] * params.head_weight[None, :]
    lttd_grads, (grad_m1, grad_m2, grad_m3) = backward_batch(params.lttd, cache, upstream)

    if cfg.uses(Modality.PAST_FRAMES):
        grad_embed1_weight = np.einsum("std,ste->de", batch.past_frames, grad_m1)
        grad_embed1_bias = grad_m1.sum(axis=(0, 1))
    else:
        grad_embed1_weight = np.zeros_like(params.embed1_weight)
        grad_embed1_bias = np.zeros_like(params.embed1_bias)
    if cfg.uses(Modality.STEERING_SERIES):
        grad_embed2_weight = np.einsum("st,ste->e", batch.past_steering, grad_m2)
        grad_embed2_bias = grad_m2.sum(axis=(0, 1))
    else:
        grad_embed2_weight = np.zeros_like(params.embed2_weight)
        grad_embed2_bias = np.zeros_like(params.embed2_bias)
    grad_flat3 = grad_m3.reshape(batch.size, cfg.n3 * cfg.d3)

    gradients = PredictorParams(
        embed1_weight=grad_embed1_weight,
        embed1_bias=grad_embed1_bias,
        embed2_weight=grad_embed2_weight,
        embed2_bias=grad_embed2_bias,
        embed3_weight=batch.current_image.T @ grad_flat3,
        embed3_bias=grad_flat3.sum(axis=0),
        lttd=lttd_grads,
        head_weight=z.T @ grad_predictions,
        head_bias=np.array([grad_predictions.sum()]),
    )
    return loss, gradients
