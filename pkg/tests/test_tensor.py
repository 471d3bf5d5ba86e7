import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adain import backend
from adain.errors import ContractError, DimensionError
from adain.tensor import (
    Tensor,
    concat,
    conv2d,
    l2_norm,
    max_pool2d,
    reflection_pad2d,
    relu,
    upsample_nearest2d,
)

from oracles import conv2d_ref, maxpool_ref, reflection_pad_ref, upsample_ref


def t4(values, requires_grad=False, dtype=np.float64):
    arr = np.asarray(values, dtype=dtype)
    while arr.ndim < 4:
        arr = arr[None]
    return Tensor(arr, requires_grad=requires_grad)


class TestConv2d:
    def test_scalar_multiply(self):
        out = conv2d(t4([[2.0]]), t4([[3.0]]), Tensor(np.zeros(1)))
        assert out.data.reshape(()) == 6.0

    def test_identity_kernel(self, rng):
        x = t4(rng.uniform(size=(2, 3, 5, 5)))
        w = np.zeros((3, 3, 1, 1))
        for c in range(3):
            w[c, c, 0, 0] = 1.0
        out = conv2d(x, t4(w), Tensor(np.zeros(3)))
        assert np.array_equal(out.data, x.data)

    def test_2x2_ones_kernel(self):
        x = t4([[1.0, 2.0], [3.0, 4.0]])
        out = conv2d(x, t4(np.ones((1, 1, 2, 2))), Tensor(np.zeros(1)))
        assert out.data.reshape(()) == 10.0

    def test_matches_scalar_reference(self, rng):
        x = rng.standard_normal((2, 3, 8, 7))
        w = rng.standard_normal((4, 3, 3, 3))
        b = rng.standard_normal(4)
        for stride in (1, 2):
            got = conv2d(t4(x), t4(w), Tensor(b), stride=stride)
            ref = conv2d_ref(x, w, b, stride=stride)
            assert np.allclose(got.data, ref, atol=1e-10)

    def test_channel_mismatch_raises(self):
        with pytest.raises(DimensionError):
            conv2d(t4(np.ones((1, 2, 4, 4))), t4(np.ones((1, 3, 3, 3))), Tensor(np.zeros(1)))

    def test_kernel_too_large_raises(self):
        with pytest.raises(DimensionError):
            conv2d(t4(np.ones((1, 1, 2, 2))), t4(np.ones((1, 1, 3, 3))), Tensor(np.zeros(1)))


class TestReflectionPad:
    def test_row_example(self):
        out = reflection_pad2d(t4([[1.0, 2.0, 3.0]]), 1)
        assert np.array_equal(out.data[0, 0, 1], [2, 1, 2, 3, 2])

    def test_constant_stays_constant(self):
        out = reflection_pad2d(t4(np.full((1, 1, 3, 3), 7.0)), 2)
        assert np.all(out.data == 7.0)

    def test_2x2_example(self):
        out = reflection_pad2d(t4([[1.0, 2.0], [3.0, 4.0]]), 1)
        expected = [[4, 3, 4, 3], [2, 1, 2, 1], [4, 3, 4, 3], [2, 1, 2, 1]]
        assert np.array_equal(out.data[0, 0], expected)

    def test_matches_scalar_reference(self, rng):
        x = rng.standard_normal((2, 2, 5, 4))
        for p in (1, 2, 3):
            got = reflection_pad2d(t4(x), p)
            assert np.array_equal(got.data, reflection_pad_ref(x, p))

    def test_pad_zero_is_identity(self, rng):
        x = t4(rng.standard_normal((1, 1, 3, 3)))
        assert reflection_pad2d(x, 0) is x

    def test_pad_too_large_raises(self):
        with pytest.raises(DimensionError):
            reflection_pad2d(t4(np.ones((1, 1, 3, 3))), 3)


class TestUpsample:
    def test_factor2_example(self):
        out = upsample_nearest2d(t4([[1.0, 2.0], [3.0, 4.0]]), 2)
        expected = [[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]]
        assert np.array_equal(out.data[0, 0], expected)

    def test_factor1_is_identity(self, rng):
        x = t4(rng.standard_normal((1, 2, 3, 3)))
        assert upsample_nearest2d(x, 1) is x

    def test_gradient_sums_copies(self):
        x = t4([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
        upsample_nearest2d(x, 2).sum().backward()
        assert np.all(x.grad == 4.0)

    def test_matches_scalar_reference(self, rng):
        x = rng.standard_normal((2, 3, 4, 5))
        got = upsample_nearest2d(t4(x), 3)
        assert np.array_equal(got.data, upsample_ref(x, 3))

    def test_factor0_raises(self):
        with pytest.raises(DimensionError):
            upsample_nearest2d(t4(np.ones((1, 1, 2, 2))), 0)


class TestMaxPool:
    def test_2x2_example(self):
        out = max_pool2d(t4([[1.0, 2.0], [3.0, 4.0]]), 2, 2)
        assert out.data.reshape(()) == 4.0

    def test_constant_input(self):
        out = max_pool2d(t4(np.full((1, 2, 4, 4), 3.5)), 2, 2)
        assert np.all(out.data == 3.5)

    def test_tie_gradient_goes_to_first(self):
        x = t4([[5.0, 5.0], [1.0, 2.0]], requires_grad=True)
        max_pool2d(x, 2, 2).sum().backward()
        assert np.array_equal(x.grad[0, 0], [[1, 0], [0, 0]])

    def test_matches_scalar_reference(self, rng):
        x = rng.standard_normal((2, 3, 6, 8))
        for k, s in [(2, 2), (3, 1), (3, 2)]:
            got = max_pool2d(t4(x), k, s)
            assert np.array_equal(got.data, maxpool_ref(x, k, s))

    def test_window_too_large_raises(self):
        with pytest.raises(DimensionError):
            max_pool2d(t4(np.ones((1, 1, 2, 2))), 3, 1)


class TestRelu:
    def test_values(self):
        out = relu(t4([[-1.0, 2.0]]))
        assert np.array_equal(out.data[0, 0, 0], [0, 2])

    def test_gradient_zero_at_zero(self):
        x = t4([[-1.0, 0.0, 2.0]], requires_grad=True)
        relu(x).sum().backward()
        assert np.array_equal(x.grad[0, 0, 0], [0, 0, 1])


class TestBackward:
    def test_sum_of_squares(self, rng):
        x = Tensor(rng.standard_normal((1, 2, 3, 3)), requires_grad=True)
        (x * x).sum().backward()
        assert np.allclose(x.grad, 2 * x.data)

    def test_relu_all_negative_blocks_grad(self):
        x = t4([[-1.0, -2.0]], requires_grad=True)
        relu(x).sum().backward()
        assert np.all(x.grad == 0)

    def test_non_scalar_loss_rejected(self):
        x = Tensor(np.ones((1, 1, 2, 2)), requires_grad=True)
        with pytest.raises(ContractError):
            (x * x).backward()

    def test_repeated_backward_accumulates(self):
        x = Tensor(np.full((1, 1, 1, 1), 3.0), requires_grad=True)
        loss = (x * x).sum()
        loss.backward()
        loss.backward()
        assert x.grad.reshape(()) == 2 * 3.0 * 2

    def test_shared_subexpression_accumulates_once_per_path(self):
        x = Tensor(np.full((1, 1, 1, 1), 2.0), requires_grad=True)
        y = x * x
        (y + y).sum().backward()
        assert x.grad.reshape(()) == 8.0

    def test_no_graph_without_requires_grad(self, rng):
        x = Tensor(rng.standard_normal((1, 1, 4, 4)))
        out = conv2d(x, Tensor(rng.standard_normal((1, 1, 3, 3))), Tensor(np.zeros(1)))
        assert out._parents == () and not out.requires_grad


class TestConcat:
    def test_forward_and_split_gradient(self, rng):
        a = Tensor(rng.standard_normal((1, 2, 2, 2)), requires_grad=True)
        b = Tensor(rng.standard_normal((1, 3, 2, 2)), requires_grad=True)
        out = concat([a, b], axis=1)
        assert out.data.shape == (1, 5, 2, 2)
        (out * out).sum().backward()
        assert np.allclose(a.grad, 2 * a.data)
        assert np.allclose(b.grad, 2 * b.data)


class TestL2Norm:
    def test_value(self):
        x = Tensor(np.array([[3.0, 4.0]]))
        assert l2_norm(x, axis=1).data[0] == 5.0

    def test_zero_input_zero_gradient(self):
        x = Tensor(np.zeros((2, 3)), requires_grad=True)
        l2_norm(x, axis=1).sum().backward()
        assert np.all(x.grad == 0)


class TestPurityAndFiniteness:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_ops_finite_on_finite_input(self, seed):
        r = np.random.default_rng(seed)
        x = Tensor(r.uniform(-10, 10, size=(1, 2, 6, 6)))
        w = Tensor(r.uniform(-1, 1, size=(3, 2, 3, 3)))
        out = max_pool2d(relu(conv2d(reflection_pad2d(x, 1), w, Tensor(np.zeros(3)))), 2, 2)
        out = upsample_nearest2d(out, 2)
        assert np.isfinite(out.data).all()

    def test_ops_do_not_mutate_inputs(self, rng):
        x_data = rng.standard_normal((1, 2, 5, 5))
        x = Tensor(x_data.copy(), requires_grad=True)
        w = Tensor(rng.standard_normal((2, 2, 3, 3)), requires_grad=True)
        out = relu(conv2d(reflection_pad2d(x, 1), w, Tensor(np.zeros(2))))
        out.sum().backward()
        assert np.array_equal(x.data, x_data)


class TestBackendParity:
    @pytest.mark.parametrize("name", backend.available_backends())
    def test_im2col_col2im_roundtrip_adjoint(self, name, rng):
        impl = backend.get_impl(name)
        x = rng.standard_normal((2, 3, 6, 7))
        cols = impl.im2col(x, 3, 3, 1)
        y = rng.standard_normal(cols.shape)
        lhs = (cols * y).sum()
        rhs = (x * impl.col2im(np.ascontiguousarray(y), 6, 7, 3, 3, 1)).sum()
        assert np.isclose(lhs, rhs, rtol=1e-12)
