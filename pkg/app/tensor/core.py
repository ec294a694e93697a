"""Dense row-major float64 tensors and the kernels every equation is built from."""

from dataclasses import dataclass
from functools import reduce
import math
from typing import Sequence

import numpy as np

from app.common.errors import ShapeError

MAX_ELEMENTS = 2 ** 40
SCALE_FLOOR = 1e-300


@dataclass(frozen=True)
class Shape:
    """Ordered list of positive extents; the empty shape is a scalar."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate extents and element count."""
        if any(extent < 1 for extent in self.dims):
            raise ShapeError("Every extent must be >= 1", {"dims": self.dims})
        if self.size > MAX_ELEMENTS:
            raise ShapeError("Tensor too large", {"dims": self.dims, "max_elements": MAX_ELEMENTS})

    @property
    def rank(self) -> int:
        """Number of modes."""
        return len(self.dims)

    @property
    def size(self) -> int:
        """Element count (1 for a scalar)."""
        return math.prod(self.dims)


class DenseTensor:
    """Immutable N-mode array of finite 64-bit floats in row-major order."""

    shape: Shape
    _values: np.ndarray

    def __init__(self, values: np.ndarray | Sequence | float) -> None:
        """Copy values into a read-only C-ordered float64 array.

        Args:
            values: Array-like input

        Raises:
            ShapeError: If the input has a zero extent or non-finite entries
        """
        array = np.array(values, dtype=np.float64, order="C", copy=True)
        self.shape = Shape(tuple(int(extent) for extent in array.shape))
        if not np.all(np.isfinite(array)):
            raise ShapeError("Tensor entries must be finite", {"dims": self.shape.dims})
        array.setflags(write=False)
        self._values = array

    def __repr__(self) -> str:
        """Short representation with the extents."""
        return f"DenseTensor(dims={self.shape.dims})"

    @property
    def array(self) -> np.ndarray:
        """Read-only ndarray view with the tensor's extents."""
        return self._values

    @property
    def data(self) -> np.ndarray:
        """Flat row-major data."""
        return self._values.reshape(-1)

    @property
    def rank(self) -> int:
        """Number of modes."""
        return self.shape.rank

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "DenseTensor":
        """Return an all-zero tensor of the given extents."""
        return cls(np.zeros(tuple(Shape(tuple(dims)).dims)))

    def item(self) -> float:
        """Return the value of a scalar tensor."""
        if self.shape.size != 1:
            raise ShapeError("item() requires a single element", {"dims": self.shape.dims})
        return float(self.data[0])


TensorLike = DenseTensor | np.ndarray | Sequence | float


def as_tensor(values: TensorLike) -> DenseTensor:
    """Coerce an array-like into a DenseTensor (no copy for DenseTensor input)."""
    if isinstance(values, DenseTensor):
        return values
    return DenseTensor(values)


def _require_vector(tensor: DenseTensor, role: str) -> None:
    if tensor.rank != 1:
        raise ShapeError(f"{role} must be a vector", {"dims": tensor.shape.dims})


def outer_product(factors: Sequence[TensorLike]) -> DenseTensor:
    """Outer product of two or more vectors.

    Args:
        factors: Vectors a, b, c, ...

    Returns:
        Tensor whose extents are the factor lengths and entries the products

    Raises:
        ShapeError: If fewer than two factors are given or one is not a vector
    """
    if len(factors) < 2:
        raise ShapeError("outer_product needs at least two factors", {"count": len(factors)})
    vectors = [as_tensor(factor) for factor in factors]
    for vector in vectors:
        _require_vector(vector, "outer_product factor")
    return DenseTensor(reduce(np.multiply.outer, [vector.array for vector in vectors]))


def contract_leading(tensor: TensorLike, vectors: Sequence[TensorLike]) -> DenseTensor:
    """Contract the leading modes of a tensor against vectors.

    Args:
        tensor: Tensor with at least len(vectors) modes
        vectors: One vector per contracted leading mode

    Returns:
        Tensor over the trailing modes (a 0-mode scalar when all are contracted)

    Raises:
        ShapeError: If a vector length does not match its mode
    """
    target = as_tensor(tensor)
    if len(vectors) > target.rank:
        raise ShapeError(
            "More vectors than tensor modes",
            {"dims": target.shape.dims, "vectors": len(vectors)},
        )
    contracted = target.array
    for mode, raw_vector in enumerate(vectors):
        vector = as_tensor(raw_vector)
        _require_vector(vector, "contraction vector")
        if vector.shape.dims[0] != target.shape.dims[mode]:
            raise ShapeError(
                "Contraction vector length does not match mode extent",
                {"mode": mode, "dims": target.shape.dims, "length": vector.shape.dims[0]},
            )
        # leading mode of the running result is always the next one to contract
        contracted = np.tensordot(vector.array, contracted, axes=(0, 0))
    return DenseTensor(contracted)


def matmul(left: TensorLike, right: TensorLike) -> DenseTensor:
    """Standard matrix product of two 2-mode tensors."""
    left_tensor = as_tensor(left)
    right_tensor = as_tensor(right)
    if left_tensor.rank != 2 or right_tensor.rank != 2:
        raise ShapeError(
            "matmul requires 2-mode tensors",
            {"left": left_tensor.shape.dims, "right": right_tensor.shape.dims},
        )
    if left_tensor.shape.dims[1] != right_tensor.shape.dims[0]:
        raise ShapeError(
            "Inner extents disagree",
            {"left": left_tensor.shape.dims, "right": right_tensor.shape.dims},
        )
    return DenseTensor(left_tensor.array @ right_tensor.array)


def hadamard(vectors: Sequence[TensorLike]) -> DenseTensor:
    """Elementwise product of equal-length vectors, multiplied left to right."""
    if not vectors:
        raise ShapeError("hadamard needs at least one vector", {"count": 0})
    tensors = [as_tensor(vector) for vector in vectors]
    for tensor in tensors:
        _require_vector(tensor, "hadamard operand")
    lengths = {tensor.shape.dims[0] for tensor in tensors}
    if len(lengths) != 1:
        raise ShapeError("hadamard operands differ in length", {"lengths": sorted(lengths)})
    return DenseTensor(reduce(np.multiply, [tensor.array for tensor in tensors]))


def vectorize(matrix: TensorLike) -> DenseTensor:
    """Row-major flattening of a 2-mode tensor."""
    tensor = as_tensor(matrix)
    if tensor.rank != 2:
        raise ShapeError("vectorize requires a 2-mode tensor", {"dims": tensor.shape.dims})
    return DenseTensor(tensor.data)


def reshape(tensor: TensorLike, dims: Sequence[int]) -> DenseTensor:
    """Reinterpret row-major data with new extents of equal element count."""
    source = as_tensor(tensor)
    target_shape = Shape(tuple(dims))
    if target_shape.size != source.shape.size:
        raise ShapeError(
            "reshape must preserve element count",
            {"from": source.shape.dims, "to": target_shape.dims},
        )
    return DenseTensor(source.data.reshape(target_shape.dims))


def max_relative_error(actual: TensorLike | np.ndarray, expected: TensorLike | np.ndarray) -> float:
    """Normwise relative error max|a - e| / max|e|.

    The denominator is floored at 1e-300, so the result is 0 when both are
    identically zero and the raw deviation times 1e300 when only the expected
    value is zero.
    """
    actual_array = np.asarray(actual.array if isinstance(actual, DenseTensor) else actual, dtype=np.float64)
    expected_array = np.asarray(
        expected.array if isinstance(expected, DenseTensor) else expected, dtype=np.float64,
    )
    if actual_array.shape != expected_array.shape:
        raise ShapeError(
            "Compared tensors differ in shape",
            {"actual": actual_array.shape, "expected": expected_array.shape},
        )
    deviation = float(np.max(np.abs(actual_array - expected_array), initial=0))
    scale = float(np.max(np.abs(expected_array), initial=0))
    return deviation / max(scale, SCALE_FLOOR)
