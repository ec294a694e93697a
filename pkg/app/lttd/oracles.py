"""Brute-force reference evaluations of the block, built only from tensor kernels.

These follow the equations literally (full tensors, per-triplet loops) and are
meant for tiny extents in tests and the verification suite.
"""

import itertools

import numpy as np

from app.common.errors import ShapeError
from app.lttd.block import AttentionMap, JointRepresentation, ModalityTriple
from app.lttd.params import LttdParams
from app.tensor.core import as_tensor, contract_leading, DenseTensor, matmul, vectorize

MAX_ORACLE_DZ = 16


def full_joint_oracle(t_full: DenseTensor | np.ndarray, inputs: ModalityTriple) -> JointRepresentation:
    """z = <T, vec(M1) o vec(M2) o vec(M3)> with the full learnable tensor."""
    tensor = as_tensor(t_full)
    expected = tuple(count * dim for count, dim in zip(inputs.counts, inputs.dims))
    if tensor.rank != 4 or tensor.shape.dims[:3] != expected:
        raise ShapeError(
            "Full tensor does not match vectorized inputs", {"tensor": tensor.shape.dims, "inputs": expected},
        )
    vectors = [vectorize(inputs.modality(index)) for index in (1, 2, 3)]
    return JointRepresentation(z=contract_leading(tensor, vectors).array.copy())


def triplet_joint(
    t_sc: DenseTensor | np.ndarray, m1i: np.ndarray, m2j: np.ndarray, m3k: np.ndarray,
) -> JointRepresentation:
    """z_p = <T_sc, m1_i o m2_j o m3_k> for one channel triplet."""
    return JointRepresentation(z=contract_leading(t_sc, [m1i, m2j, m3k]).array.copy())


def unitary_joint_oracle(
    t_sc: DenseTensor | np.ndarray, attention: AttentionMap, inputs: ModalityTriple,
) -> JointRepresentation:
    """z = sum over all triplets of M_ijk * triplet_joint."""
    tensor = as_tensor(t_sc)
    if tensor.rank != 4 or tensor.shape.dims[:3] != inputs.dims:
        raise ShapeError("T_sc does not match channel dimensions", {"tensor": tensor.shape.dims, "dims": inputs.dims})
    if attention.m.shape != inputs.counts:
        raise ShapeError("Attention map does not match channel counts", {"attention": attention.m.shape})
    z = np.zeros(tensor.shape.dims[3])
    for i, j, k in itertools.product(*(range(count) for count in inputs.counts)):
        z_p = triplet_joint(tensor, inputs.m1[i], inputs.m2[j], inputs.m3[k]).z
        z = z + attention.m[i, j, k] * z_p
    return JointRepresentation(z=z)


def reconstruct_attention_tensor(params: LttdParams) -> DenseTensor:
    """T_M[a,b,c] = sum_r <G_r, W1_r o W2_r o W3_r> rebuilt explicitly."""
    d1, d2, d3 = params.dims
    total = np.zeros((d1, d2, d3))
    for r_index in range(params.r_slices):
        core = as_tensor(params.cores[r_index])
        factor1, factor2, factor3 = (params.factor(modality, r_index) for modality in (1, 2, 3))
        for a_idx, b_idx, c_idx in itertools.product(range(d1), range(d2), range(d3)):
            rows = [factor1[a_idx], factor2[b_idx], factor3[c_idx]]
            total[a_idx, b_idx, c_idx] += contract_leading(core, rows).item()
    return DenseTensor(total)


def attention_from_tensor_oracle(t_m: DenseTensor | np.ndarray, inputs: ModalityTriple) -> AttentionMap:
    """M_ijk = <T_M, m1_i o m2_j o m3_k>, the channel-wise reading of <T_M, M1 o M2 o M3>."""
    tensor = as_tensor(t_m)
    attention = np.zeros(inputs.counts)
    for i, j, k in itertools.product(*(range(count) for count in inputs.counts)):
        attention[i, j, k] = contract_leading(tensor, [inputs.m1[i], inputs.m2[j], inputs.m3[k]]).item()
    return AttentionMap(m=attention)


def superdiagonal(d_z: int) -> DenseTensor:
    """The d_z^4 tensor with ones at (k, k, k, k) and zeros elsewhere."""
    if d_z > MAX_ORACLE_DZ:
        raise ShapeError("Superdiagonal core too large to materialize", {"d_z": d_z, "max": MAX_ORACLE_DZ})
    core = np.zeros((d_z,) * 4)
    for index in range(d_z):
        core[index, index, index, index] = 1.0
    return DenseTensor(core)


def joint_from_attention_oracle(
    params: LttdParams,
    g_sc_superdiag: DenseTensor | np.ndarray,
    attention: AttentionMap,
    inputs: ModalityTriple,
) -> JointRepresentation:
    """z = sum M_ijk <G_sc, (m1_i Wz1) o (m2_j Wz2) o (m3_k Wz3)> with an explicit core."""
    core = as_tensor(g_sc_superdiag)
    if params.d_z > MAX_ORACLE_DZ:
        raise ShapeError("d_z too large for the explicit joint core", {"d_z": params.d_z, "max": MAX_ORACLE_DZ})
    if core.shape.dims != (params.d_z,) * 4:
        raise ShapeError("Joint core must be d_z^4", {"core": core.shape.dims, "d_z": params.d_z})
    projected = [
        matmul(inputs.modality(index), params.projection(index)).array for index in (1, 2, 3)
    ]
    z = np.zeros(params.d_z)
    for i, j, k in itertools.product(*(range(count) for count in inputs.counts)):
        rows = [projected[0][i], projected[1][j], projected[2][k]]
        z = z + attention.m[i, j, k] * contract_leading(core, rows).array
    return JointRepresentation(z=z)


def tucker_joint_tensor(params: LttdParams, g_sc: DenseTensor | np.ndarray) -> DenseTensor:
    """T_sc = <G_sc, Wz1 o Wz2 o Wz3>, the d1 x d2 x d3 x d_z tensor behind the projections."""
    core = as_tensor(g_sc).array
    return DenseTensor(np.einsum("pqrt,ap,bq,cr->abct", core, params.wz1, params.wz2, params.wz3))

