"""Decomposed trilinear attention: attention map, Hadamard joint representation and gradients.

Every kernel works on a leading batch axis ``s``; the single-instance
operations wrap their inputs in a batch of one. The full attention tensor and
the rank-one joint core are never materialized.
"""

from dataclasses import dataclass

import numpy as np

from app.common.enums import AttentionNormalization
from app.common.errors import ShapeError
from app.lttd.dtos import LttdConfig
from app.lttd.params import LttdParams

SUM_AXES = (1, 2, 3)


@dataclass(frozen=True)
class ModalityTriple:
    """The three inputs M1 (past frames), M2 (steering series), M3 (current image)."""

    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray

    def __post_init__(self) -> None:
        """Coerce to float64 matrices and check they are finite."""
        for name in ("m1", "m2", "m3"):
            matrix = np.asarray(getattr(self, name), dtype=np.float64)
            if matrix.ndim != 2 or 0 in matrix.shape:
                raise ShapeError(f"{name} must be a non-empty matrix", {name: matrix.shape})
            if not np.all(np.isfinite(matrix)):
                raise ShapeError(f"{name} has non-finite entries", {name: matrix.shape})
            object.__setattr__(self, name, matrix)

    @property
    def counts(self) -> tuple[int, int, int]:
        """Channel counts (n1, n2, n3)."""
        return (self.m1.shape[0], self.m2.shape[0], self.m3.shape[0])

    @property
    def dims(self) -> tuple[int, int, int]:
        """Channel dimensions (d1, d2, d3)."""
        return (self.m1.shape[1], self.m2.shape[1], self.m3.shape[1])

    def modality(self, index: int) -> np.ndarray:
        """Return M_l for l in {1, 2, 3}."""
        return (self.m1, self.m2, self.m3)[index - 1]

    def scaled(self, index: int, factor: float) -> "ModalityTriple":
        """Copy with M_l multiplied by a scalar."""
        matrices = [self.m1, self.m2, self.m3]
        matrices[index - 1] = matrices[index - 1] * factor
        return ModalityTriple(*matrices)


@dataclass(frozen=True)
class AttentionMap:
    """n1 x n2 x n3 tensor of scalar triplet weights."""

    m: np.ndarray


@dataclass(frozen=True)
class JointRepresentation:
    """d_z joint feature vector."""

    z: np.ndarray


@dataclass(frozen=True)
class BlockCache:
    """Intermediates of a batched forward pass reused by the backward pass."""

    inputs: tuple[np.ndarray, np.ndarray, np.ndarray]
    factor_proj: tuple[np.ndarray, np.ndarray, np.ndarray]
    core_p3: np.ndarray
    core_p23: np.ndarray
    attention: np.ndarray
    joint_proj: tuple[np.ndarray, np.ndarray, np.ndarray]
    weighted_p3: np.ndarray
    normalization: AttentionNormalization


@dataclass(frozen=True)
class BlockGradients:
    """Gradients of <z, upstream> for every parameter group and optionally the inputs."""

    params: LttdParams
    inputs: ModalityTriple | None = None


def _check_batch(params: LttdParams, m1: np.ndarray, m2: np.ndarray, m3: np.ndarray) -> None:
    if not m1.shape[0] == m2.shape[0] == m3.shape[0]:
        raise ShapeError("Modalities disagree on batch size", {"batch": (m1.shape[0], m2.shape[0], m3.shape[0])})
    given = (m1.shape[2], m2.shape[2], m3.shape[2])
    if given != params.dims:
        raise ShapeError("Channel dimensions do not match parameters", {"inputs": given, "params": params.dims})


def _check_config(params: LttdParams, cfg: LttdConfig, inputs: ModalityTriple) -> None:
    params.check_config(cfg)
    if inputs.counts != cfg.counts or inputs.dims != cfg.dims:
        raise ShapeError(
            "Inputs do not match the block configuration",
            {"counts": inputs.counts, "dims": inputs.dims, "expected": (cfg.counts, cfg.dims)},
        )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=SUM_AXES, keepdims=True)
    weights = np.exp(shifted)
    return weights / np.sum(weights, axis=SUM_AXES, keepdims=True)


def attention_logits_batch(
    params: LttdParams, m1: np.ndarray, m2: np.ndarray, m3: np.ndarray,
) -> tuple[np.ndarray, tuple, np.ndarray, np.ndarray]:
    """Raw attention map sum_r [[G_r; M1 W1_r, M2 W2_r, M3 W3_r]] for a batch.

    Args:
        params: Block parameters
        m1: (S, n1, d1) batch of M1
        m2: (S, n2, d2) batch of M2
        m3: (S, n3, d3) batch of M3

    Returns:
        (logits of shape (S, n1, n2, n3), factor projections, core x P3, core x P2 x P3)
    """
    _check_batch(params, m1, m2, m3)
    proj1 = np.einsum("sid,rda->sria", m1, params.w1)
    proj2 = np.einsum("sjd,rdb->srjb", m2, params.w2)
    proj3 = np.einsum("skd,rdc->srkc", m3, params.w3)
    core_p3 = np.einsum("rabc,srkc->srabk", params.cores, proj3)
    core_p23 = np.einsum("srabk,srjb->srajk", core_p3, proj2)
    logits = np.einsum("srajk,sria->sijk", core_p23, proj1)
    return logits, (proj1, proj2, proj3), core_p3, core_p23


def joint_batch(
    params: LttdParams, attention: np.ndarray, m1: np.ndarray, m2: np.ndarray, m3: np.ndarray,
) -> tuple[np.ndarray, tuple, np.ndarray]:
    """z = sum_ijk M_ijk (m1_i Wz1 * m2_j Wz2 * m3_k Wz3) for a batch.

    Returns:
        (z of shape (S, d_z), projections P_l = M_l Wz_l, attention-weighted P3)
    """
    joint1 = m1 @ params.wz1
    joint2 = m2 @ params.wz2
    joint3 = m3 @ params.wz3
    if attention.shape[1:] != (joint1.shape[1], joint2.shape[1], joint3.shape[1]):
        raise ShapeError(
            "Attention map does not match channel counts",
            {"attention": attention.shape[1:], "counts": (joint1.shape[1], joint2.shape[1], joint3.shape[1])},
        )
    weighted_p3 = np.einsum("sijk,skz->sijz", attention, joint3)
    weighted_p23 = np.einsum("sijz,sjz->siz", weighted_p3, joint2)
    z = np.einsum("siz,siz->sz", weighted_p23, joint1)
    return z, (joint1, joint2, joint3), weighted_p3


def forward_batch(
    params: LttdParams,
    m1: np.ndarray,
    m2: np.ndarray,
    m3: np.ndarray,
    normalization: AttentionNormalization = AttentionNormalization.RAW,
) -> tuple[np.ndarray, np.ndarray, BlockCache]:
    """Attention map then joint representation for a batch.

    Returns:
        (attention of shape (S, n1, n2, n3), z of shape (S, d_z), cache)
    """
    logits, factor_proj, core_p3, core_p23 = attention_logits_batch(params, m1, m2, m3)
    attention = _softmax(logits) if normalization == AttentionNormalization.SOFTMAX else logits
    z, joint_proj, weighted_p3 = joint_batch(params, attention, m1, m2, m3)
    cache = BlockCache(
        inputs=(m1, m2, m3),
        factor_proj=factor_proj,
        core_p3=core_p3,
        core_p23=core_p23,
        attention=attention,
        joint_proj=joint_proj,
        weighted_p3=weighted_p3,
        normalization=normalization,
    )
    return attention, z, cache


def backward_batch(
    params: LttdParams, cache: BlockCache, upstream: np.ndarray,
) -> tuple[LttdParams, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Reverse-mode gradients of sum_s <z_s, upstream_s>.

    Args:
        params: Parameters used in the forward pass
        cache: Forward cache
        upstream: (S, d_z) upstream gradients

    Returns:
        (parameter gradients summed over the batch, per-sample input gradients)
    """
    m1, m2, m3 = cache.inputs
    joint1, joint2, joint3 = cache.joint_proj
    proj1, proj2, proj3 = cache.factor_proj
    attention = cache.attention
    if upstream.shape != (m1.shape[0], params.d_z):
        raise ShapeError("Upstream gradient has the wrong shape", {"upstream": upstream.shape})

    # joint path: z_sz = sum_ijk A_sijk J1_siz J2_sjz J3_skz
    weighted_p23 = np.einsum("sijz,sjz->siz", cache.weighted_p3, joint2)
    grad_joint1 = weighted_p23 * upstream[:, None, :]
    grad_joint2 = np.einsum("sijz,siz->sjz", cache.weighted_p3, joint1) * upstream[:, None, :]
    pair12 = np.einsum("siz,sjz->sijz", joint1, joint2) * upstream[:, None, None, :]
    grad_attention = np.einsum("sijz,skz->sijk", pair12, joint3)
    grad_joint3 = np.einsum("sijk,sijz->skz", attention, pair12)

    if cache.normalization == AttentionNormalization.SOFTMAX:
        inner = np.sum(grad_attention * attention, axis=SUM_AXES, keepdims=True)
        grad_logits = attention * (grad_attention - inner)
    else:
        grad_logits = grad_attention

    # attention path: L_sijk = sum_r sum_abc G_rabc P1_sria P2_srjb P3_srkc
    logits_p1 = np.einsum("sijk,sria->srajk", grad_logits, proj1)
    logits_p12 = np.einsum("srajk,srjb->srabk", logits_p1, proj2)
    grad_cores = np.einsum("srabk,srkc->rabc", logits_p12, proj3)
    grad_proj3 = np.einsum("srabk,rabc->srkc", logits_p12, params.cores)
    grad_proj2 = np.einsum("srajk,srabk->srjb", logits_p1, cache.core_p3)
    grad_proj1 = np.einsum("sijk,srajk->sria", grad_logits, cache.core_p23)

    grads = LttdParams(
        w1=np.einsum("sid,sria->rda", m1, grad_proj1),
        w2=np.einsum("sjd,srjb->rdb", m2, grad_proj2),
        w3=np.einsum("skd,srkc->rdc", m3, grad_proj3),
        cores=grad_cores,
        wz1=np.einsum("sid,siz->dz", m1, grad_joint1),
        wz2=np.einsum("sjd,sjz->dz", m2, grad_joint2),
        wz3=np.einsum("skd,skz->dz", m3, grad_joint3),
    )
    grad_m1 = grad_joint1 @ params.wz1.T + np.einsum("sria,rda->sid", grad_proj1, params.w1)
    grad_m2 = grad_joint2 @ params.wz2.T + np.einsum("srjb,rdb->sjd", grad_proj2, params.w2)
    grad_m3 = grad_joint3 @ params.wz3.T + np.einsum("srkc,rdc->skd", grad_proj3, params.w3)
    return grads, (grad_m1, grad_m2, grad_m3)


def attention_map(params: LttdParams, inputs: ModalityTriple, cfg: LttdConfig) -> AttentionMap:
    """Attention map of one instance, softmax-normalized when cfg asks for it."""
    _check_config(params, cfg, inputs)
    logits = attention_logits_batch(params, inputs.m1[None], inputs.m2[None], inputs.m3[None])[0]
    if cfg.normalize_attention == AttentionNormalization.SOFTMAX:
        logits = _softmax(logits)
    return AttentionMap(m=logits[0])


def joint_representation(params: LttdParams, attention: AttentionMap, inputs: ModalityTriple) -> JointRepresentation:
    """Hadamard joint representation weighted by an attention map."""
    if inputs.dims != params.dims:
        raise ShapeError("Channel dimensions do not match parameters", {"inputs": inputs.dims, "params": params.dims})
    z = joint_batch(params, attention.m[None], inputs.m1[None], inputs.m2[None], inputs.m3[None])[0]
    return JointRepresentation(z=z[0])


def forward(params: LttdParams, inputs: ModalityTriple, cfg: LttdConfig) -> tuple[AttentionMap, JointRepresentation]:
    """Attention map then joint representation."""
    attention = attention_map(params, inputs, cfg)
    return attention, joint_representation(params, attention, inputs)


def backward(
    params: LttdParams,
    inputs: ModalityTriple,
    cfg: LttdConfig,
    upstream_grad: np.ndarray,
    with_inputs: bool = False,
) -> BlockGradients:
    """Exact gradients of <z, upstream_grad> for one instance.

    Args:
        params: Block parameters
        inputs: Modality triple
        cfg: Block configuration (selects raw or softmax attention)
        upstream_grad: d_z vector
        with_inputs: Also return gradients with respect to M1, M2, M3

    Returns:
        BlockGradients
    """
    _check_config(params, cfg, inputs)
    upstream = np.asarray(upstream_grad, dtype=np.float64)
    if upstream.shape != (cfg.d_z,):
        raise ShapeError("Upstream gradient must be a d_z vector", {"upstream": upstream.shape})
    cache = forward_batch(params, inputs.m1[None], inputs.m2[None], inputs.m3[None], cfg.normalize_attention)[2]
    grads, input_grads = backward_batch(params, cache, upstream[None])
    if not with_inputs:
        return BlockGradients(params=grads)
    return BlockGradients(
        params=grads,
        inputs=ModalityTriple(input_grads[0][0], input_grads[1][0], input_grads[2][0]),
    )
