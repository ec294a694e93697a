"""Tests for the dense tensor kernels."""

import itertools
import math

import numpy as np

from app.common.errors import ShapeError
from app.tensor.core import (
    contract_leading,
    DenseTensor,
    hadamard,
    matmul,
    max_relative_error,
    outer_product,
    reshape,
    Shape,
    vectorize,
)
from tests.conftest import BaseTestCase


class TestShape(BaseTestCase):
    """Test cases for Shape and DenseTensor construction."""

    def test_zero_extent_rejected(self):
        """Test that an extent of zero is a shape error."""
        with self.assertRaises(ShapeError):
            Shape((2, 0))

    def test_huge_shape_rejected(self):
        """Test that more than 2^40 elements are refused."""
        with self.assertRaises(ShapeError):
            Shape((2 ** 21, 2 ** 20))

    def test_non_finite_rejected(self):
        """Test that NaN entries are refused."""
        with self.assertRaises(ShapeError):
            DenseTensor([1.0, math.nan])

    def test_tensor_is_read_only_copy(self):
        """Test that the tensor copies its input and cannot be written."""
        source = np.array([1.0, 2.0])
        tensor = DenseTensor(source)
        source[0] = 5.0
        self.assertEqual(tensor.array[0], 1.0)
        with self.assertRaises(ValueError):
            tensor.array[0] = 3.0


class TestOuterProduct(BaseTestCase):
    """Test cases for outer_product."""

    def test_two_vectors(self):
        """Test [1,2] o [3,4]."""
        result = outer_product([[1, 2], [3, 4]])
        np.testing.assert_array_equal(result.array, [[3, 4], [6, 8]])

    def test_singletons(self):
        """Test [1] o [5]."""
        np.testing.assert_array_equal(outer_product([[1], [5]]).array, [[5]])

    def test_indicator_vectors(self):
        """Test that indicator factors select the expected entries."""
        result = outer_product([[1, 0], [0, 1], [1, 1]]).array
        expected = np.zeros((2, 2, 2))
        expected[0, 1, 0] = 1
        expected[0, 1, 1] = 1
        np.testing.assert_array_equal(result, expected)

    def test_requires_two_vectors(self):
        """Test that a single factor or a matrix factor is a shape error."""
        with self.assertRaises(ShapeError):
            outer_product([[1, 2]])
        with self.assertRaises(ShapeError):
            outer_product([[1, 2], [[1, 2], [3, 4]]])


class TestContractLeading(BaseTestCase):
    """Test cases for contract_leading."""

    def test_identity_off_diagonal(self):
        """Test picking an off-diagonal entry of the identity."""
        result = contract_leading(np.eye(2), [[1, 0], [0, 1]])
        self.assertEqual(result.rank, 0)
        self.assertEqual(result.item(), 0.0)

    def test_counting(self):
        """Test contracting all-ones with all-ones vectors."""
        result = contract_leading(np.ones((2, 2, 3)), [[1, 1], [1, 1]])
        np.testing.assert_array_equal(result.array, [4, 4, 4])

    def test_basis_vectors_select_fiber(self):
        """Test that unit basis vectors return a fiber."""
        tensor = self.rng.normal(size=(3, 3, 3, 2))
        basis = np.eye(3)
        result = contract_leading(tensor, [basis[0], basis[1], basis[2]])
        np.testing.assert_array_equal(result.array, tensor[0, 1, 2, :])

    def test_length_mismatch(self):
        """Test that a wrong vector length is a shape error."""
        with self.assertRaises(ShapeError):
            contract_leading(np.ones((2, 3)), [[1, 1, 1]])

    def test_too_many_vectors(self):
        """Test that more vectors than modes is a shape error."""
        with self.assertRaises(ShapeError):
            contract_leading(np.ones(2), [[1, 1], [1, 1]])

    def test_factorization_of_outer_product(self):
        """Test <a o b o c, a' o b' o c'> = (a.a')(b.b')(c.c')."""
        for _ in range(20):
            lengths = self.rng.integers(1, 6, size=3)
            left = [self.rng.normal(size=length) for length in lengths]
            right = [self.rng.normal(size=length) for length in lengths]
            contracted = contract_leading(outer_product(left), right).item()
            expected = math.prod(float(a @ b) for a, b in zip(left, right))
            self.assertRelativeClose(contracted, expected, 1e-12)


class TestMatmul(BaseTestCase):
    """Test cases for matmul."""

    def test_identity(self):
        """Test multiplying by the identity."""
        np.testing.assert_array_equal(matmul(np.eye(2), [[1, 2], [3, 4]]).array, [[1, 2], [3, 4]])

    def test_row_by_column(self):
        """Test a 1x2 by 2x1 product."""
        np.testing.assert_array_equal(matmul([[1, 2]], [[3], [4]]).array, [[11]])

    def test_matches_loops(self):
        """Test a random 4x3 by 3x5 product against a triple loop."""
        left = self.rng.normal(size=(4, 3))
        right = self.rng.normal(size=(3, 5))
        expected = np.zeros((4, 5))
        for i, j, k in itertools.product(range(4), range(5), range(3)):
            expected[i, j] += left[i, k] * right[k, j]
        self.assertRelativeClose(matmul(left, right).array, expected, 1e-15)

    def test_inner_mismatch(self):
        """Test that disagreeing inner extents are a shape error."""
        with self.assertRaises(ShapeError):
            matmul(np.ones((2, 3)), np.ones((2, 3)))


class TestHadamardAndVectorize(BaseTestCase):
    """Test cases for hadamard, vectorize and reshape."""

    def test_hadamard_examples(self):
        """Test two- and three-way elementwise products."""
        np.testing.assert_array_equal(hadamard([[1, 2], [3, 4]]).array, [3, 8])
        np.testing.assert_array_equal(hadamard([[1, 2], [3, 4], [5, 6]]).array, [15, 48])
        vector = self.rng.normal(size=5)
        np.testing.assert_array_equal(hadamard([vector, np.ones(5)]).array, vector)

    def test_hadamard_length_mismatch(self):
        """Test that vectors of different lengths are a shape error."""
        with self.assertRaises(ShapeError):
            hadamard([[1, 2], [1, 2, 3]])

    def test_hadamard_commutative(self):
        """Test that reordering factors changes nothing beyond rounding."""
        vectors = [self.rng.normal(size=7) for _ in range(3)]
        self.assertRelativeClose(hadamard(vectors).array, hadamard(vectors[::-1]).array, 1e-12)

    def test_vectorize_examples(self):
        """Test row-major flattening."""
        np.testing.assert_array_equal(vectorize([[1, 2], [3, 4]]).array, [1, 2, 3, 4])
        np.testing.assert_array_equal(vectorize([[1, 2, 3]]).array, [1, 2, 3])
        np.testing.assert_array_equal(vectorize(outer_product([[1, 2], [3, 4]])).array, [3, 4, 6, 8])

    def test_vectorize_requires_matrix(self):
        """Test that a vector input is a shape error."""
        with self.assertRaises(ShapeError):
            vectorize([1, 2])

    def test_reshape_inverts_vectorize(self):
        """Test reshape(vectorize(m), shape(m)) = m exactly."""
        matrix = self.rng.normal(size=(3, 4))
        np.testing.assert_array_equal(reshape(vectorize(matrix), (3, 4)).array, matrix)

    def test_reshape_count_mismatch(self):
        """Test that reshape must preserve the element count."""
        with self.assertRaises(ShapeError):
            reshape(np.ones(6), (4, 2))


class TestMaxRelativeError(BaseTestCase):
    """Test cases for max_relative_error."""

    def test_zero_cases(self):
        """Test the both-zero and only-expected-zero cases."""
        self.assertEqual(max_relative_error(np.zeros(3), np.zeros(3)), 0.0)
        error = max_relative_error(np.ones(3), np.zeros(3))
        self.assertTrue(math.isfinite(error))
        self.assertGreater(error, 1e299)

    def test_zero_expected_uses_floor(self):
        """Test that a zero expected value divides by the floor."""
        self.assertEqual(max_relative_error([1e-310], [0.0]), 1e-310 / 1e-300)

    def test_normwise(self):
        """Test that the error is scaled by the largest expected magnitude."""
        self.assertAlmostEqual(max_relative_error([1.0, 2.1], [1.0, 2.0]), 0.05)
