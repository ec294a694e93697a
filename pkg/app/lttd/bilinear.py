"""Two-modality special case: the block read as a bilinear attention."""

from dataclasses import dataclass
import itertools

import numpy as np

from app.common.errors import ConfigError, ShapeError
from app.lttd.block import JointRepresentation
from app.lttd.params import fan_bound, uniform_block
from app.tensor.core import as_tensor, contract_leading, DenseTensor, hadamard, matmul


@dataclass(frozen=True)
class BilinearParams:
    """Factors w_l (R, d_l, d_l/R), cores (R, d1/R, d2/R) and projections wz_l (d_l, d_z)."""

    w1: np.ndarray
    w2: np.ndarray
    cores: np.ndarray
    wz1: np.ndarray
    wz2: np.ndarray

    def __post_init__(self) -> None:
        """Check slice shapes."""
        r_slices = self.cores.shape[0]
        if self.w1.shape != (r_slices, self.wz1.shape[0], self.cores.shape[1]):
            raise ShapeError("w1 does not match cores/wz1", {"w1": self.w1.shape})
        if self.w2.shape != (r_slices, self.wz2.shape[0], self.cores.shape[2]):
            raise ShapeError("w2 does not match cores/wz2", {"w2": self.w2.shape})
        if self.wz1.shape[1] != self.wz2.shape[1]:
            raise ShapeError("Projections disagree on d_z", {"wz1": self.wz1.shape, "wz2": self.wz2.shape})

    @property
    def dims(self) -> tuple[int, int]:
        """Channel dimensions (d1, d2)."""
        return (self.wz1.shape[0], self.wz2.shape[0])


def init_bilinear_params(d1: int, d2: int, r_slices: int, d_z: int, seed: int) -> BilinearParams:
    """Fan-based uniform initialization of the two-modality block."""
    for name, extent in (("d1", d1), ("d2", d2)):
        if extent % r_slices:
            raise ConfigError(f"r_slices={r_slices} does not divide {name}={extent}", {name: extent})
    width1, width2 = d1 // r_slices, d2 // r_slices
    w1 = np.stack([
        uniform_block(seed, (d1, width1), fan_bound(d1, width1), "bilinear", "w1", r_index)
        for r_index in range(r_slices)
    ])
    w2 = np.stack([
        uniform_block(seed, (d2, width2), fan_bound(d2, width2), "bilinear", "w2", r_index)
        for r_index in range(r_slices)
    ])
    cores = np.stack([
        uniform_block(seed, (width1, width2), fan_bound(width1, width2), "bilinear", "cores", r_index)
        for r_index in range(r_slices)
    ])
    return BilinearParams(
        w1=w1,
        w2=w2,
        cores=cores,
        wz1=uniform_block(seed, (d1, d_z), fan_bound(d1, d_z), "bilinear", "wz1", 0),
        wz2=uniform_block(seed, (d2, d_z), fan_bound(d2, d_z), "bilinear", "wz2", 0),
    )


def _check_inputs(params: BilinearParams, m1: np.ndarray, m2: np.ndarray) -> None:
    if m1.ndim != 2 or m2.ndim != 2 or (m1.shape[1], m2.shape[1]) != params.dims:
        raise ShapeError("Inputs do not match bilinear parameters", {"m1": m1.shape, "m2": m2.shape})


def bilinear_attention_map(params: BilinearParams, m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """M = sum_r [[G_r; M1 W1_r, M2 W2_r]], an n1 x n2 map."""
    _check_inputs(params, m1, m2)
    proj1 = np.einsum("id,rda->ria", m1, params.w1)
    proj2 = np.einsum("jd,rdb->rjb", m2, params.w2)
    core_p2 = np.einsum("rab,rjb->raj", params.cores, proj2)
    return np.einsum("raj,ria->ij", core_p2, proj1)


def reconstruct_bilinear_tensor(params: BilinearParams) -> DenseTensor:
    """T_M[a,b] = sum_r <G_r, W1_r o W2_r> rebuilt explicitly."""
    d1, d2 = params.dims
    total = np.zeros((d1, d2))
    for r_index in range(params.cores.shape[0]):
        core = as_tensor(params.cores[r_index])
        for a_idx, b_idx in itertools.product(range(d1), range(d2)):
            rows = [params.w1[r_index][a_idx], params.w2[r_index][b_idx]]
            total[a_idx, b_idx] += contract_leading(core, rows).item()
    return DenseTensor(total)


def bilinear_joint_sum(
    params: BilinearParams, attention: np.ndarray, m1: np.ndarray, m2: np.ndarray,
) -> JointRepresentation:
    """z = sum_i sum_j M_ij (m1_i Wz1 * m2_j Wz2), evaluated as a literal double sum."""
    _check_inputs(params, m1, m2)
    if attention.shape != (m1.shape[0], m2.shape[0]):
        raise ShapeError("Map does not match channel counts", {"map": attention.shape})
    projected1 = matmul(m1, params.wz1).array
    projected2 = matmul(m2, params.wz2).array
    z = np.zeros(params.wz1.shape[1])
    for i, j in itertools.product(range(m1.shape[0]), range(m2.shape[0])):
        z = z + attention[i, j] * hadamard([projected1[i], projected2[j]]).array
    return JointRepresentation(z=z)


def bilinear_joint_matrix(
    params: BilinearParams, attention: np.ndarray, m1: np.ndarray, m2: np.ndarray,
) -> JointRepresentation:
    """z_k = (M1 Wz1)[:, k]^T M (M2 Wz2)[:, k], one quadratic form per output coordinate."""
    _check_inputs(params, m1, m2)
    if attention.shape != (m1.shape[0], m2.shape[0]):
        raise ShapeError("Map does not match channel counts", {"map": attention.shape})
    projected1 = m1 @ params.wz1
    projected2 = m2 @ params.wz2
    z = np.array([
        projected1[:, coordinate] @ attention @ projected2[:, coordinate]
        for coordinate in range(projected1.shape[1])
    ])
    return JointRepresentation(z=z)
