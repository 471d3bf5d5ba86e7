import numpy as np
import pytest

from adain.errors import ConfigError, DimensionError
from adain.loss import LossReport, content_loss, gram_loss, style_loss, total_loss
from adain.normalization import adain, instance_stats
from adain.tensor import Tensor

from oracles import max_relative_error, numeric_gradient

EPS = 1e-5


class TestContentLoss:
    def test_zero_on_identical(self, rng):
        t = Tensor(rng.uniform(size=(2, 3, 4, 4)))
        assert content_loss(t, t).item() == 0.0

    def test_plus_one_gives_one(self, rng):
        t = rng.uniform(size=(2, 3, 4, 4))
        out = content_loss(Tensor(t + 1.0, dtype=np.float64), Tensor(t, dtype=np.float64))
        assert np.isclose(out.item(), 1.0)

    def test_symmetric(self, rng):
        a = Tensor(rng.uniform(size=(1, 2, 3, 3)))
        b = Tensor(rng.uniform(size=(1, 2, 3, 3)))
        assert np.isclose(content_loss(a, b).item(), content_loss(b, a).item())

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            content_loss(Tensor(np.ones((1, 2, 3, 3))), Tensor(np.ones((1, 2, 4, 4))))


class TestStyleLoss:
    def test_zero_on_identical(self, rng):
        feats = {t: Tensor(rng.uniform(size=(2, 3, 4, 4))) for t in ("a", "b")}
        total, per_layer = style_loss(feats, feats, eps=EPS)
        assert total.item() == 0.0
        assert all(v.item() == 0.0 for v in per_layer)

    def test_hand_computed_mu_offset(self, rng):
        # same variance per channel, means shifted by (3,4) -> loss 5
        x = rng.standard_normal((1, 2, 16, 16))
        shift = np.array([3.0, 4.0]).reshape(1, 2, 1, 1)
        total, _ = style_loss({"t": Tensor(x, dtype=np.float64)}, {"t": Tensor(x + shift, dtype=np.float64)}, eps=EPS)
        assert np.isclose(total.item(), 5.0, atol=1e-9)

    def test_scaling_increases_loss(self, rng):
        x = Tensor(rng.uniform(size=(1, 3, 8, 8)))
        doubled = Tensor(2 * x.data)
        total, _ = style_loss({"t": doubled}, {"t": x}, eps=EPS)
        assert total.item() > 0.0

    def test_per_layer_sums_to_style(self, rng):
        feats_a = {t: Tensor(rng.uniform(size=(2, 3, 6, 6))) for t in ("a", "b", "c")}
        feats_b = {t: Tensor(rng.uniform(size=(2, 3, 6, 6))) for t in ("a", "b", "c")}
        total, per_layer = style_loss(feats_a, feats_b, eps=EPS)
        assert np.isclose(total.item(), sum(v.item() for v in per_layer), rtol=1e-6)

    def test_spatial_permutation_invariant(self, rng):
        x = rng.uniform(size=(1, 3, 4, 4))
        y = rng.uniform(size=(1, 3, 4, 4))
        perm = rng.permutation(16)
        xp = x.reshape(1, 3, 16)[:, :, perm].reshape(1, 3, 4, 4)
        a, _ = style_loss({"t": Tensor(x, dtype=np.float64)}, {"t": Tensor(y, dtype=np.float64)}, eps=EPS)
        b, _ = style_loss({"t": Tensor(xp, dtype=np.float64)}, {"t": Tensor(y, dtype=np.float64)}, eps=EPS)
        assert np.isclose(a.item(), b.item(), atol=1e-10)

    def test_tap_mismatch(self, rng):
        x = {"a": Tensor(rng.uniform(size=(1, 2, 4, 4)))}
        y = {"b": Tensor(rng.uniform(size=(1, 2, 4, 4)))}
        with pytest.raises(DimensionError):
            style_loss(x, y)

    def test_adain_consistency_at_final_tap(self, rng):
        # t's statistics equal the style's: the style term on t itself is tiny
        x = Tensor(rng.uniform(size=(2, 16, 16, 16)).astype(np.float32))
        y = Tensor(rng.uniform(size=(2, 16, 16, 16)).astype(np.float32))
        t = adain(x, y, eps=EPS)
        term, _ = style_loss({"relu4_1": t}, {"relu4_1": y}, eps=EPS)
        assert term.item() < 1e-4


class TestTotalLoss:
    def test_lambda_zero(self):
        report = total_loss(1.5, 99.0, 0.0)
        assert report.total == 1.5

    def test_arithmetic(self):
        report = total_loss(1.0, 2.0, 10.0)
        assert report.total == 21.0

    def test_invariant_holds(self, rng):
        c, s, lam = rng.uniform(), rng.uniform(), rng.uniform(0, 20)
        report = total_loss(c, s, lam, per_layer_style=[s / 2, s / 2])
        assert abs(report.total - (report.content + lam * report.style)) < 1e-6
        assert abs(sum(report.per_layer_style) - report.style) < 1e-6

    def test_negative_lambda_rejected(self):
        with pytest.raises(ConfigError):
            total_loss(1.0, 1.0, -0.1)


class TestGramLoss:
    def test_zero_on_identical(self, rng):
        feats = {t: Tensor(rng.uniform(size=(1, 3, 4, 4))) for t in ("a", "b")}
        assert gram_loss(feats, feats) == 0.0

    def test_hand_computed_example(self):
        a = {"t": Tensor(np.array([1.0, 0.0]).reshape(1, 1, 1, 2))}
        b = {"t": Tensor(np.array([0.0, 1.0]).reshape(1, 1, 1, 2))}
        assert gram_loss(a, b) == 0.0

    def test_spatial_permutation_invariant(self, rng):
        x = rng.uniform(size=(1, 3, 4, 4))
        y = rng.uniform(size=(1, 3, 4, 4))
        perm = rng.permutation(16)
        xp = x.reshape(1, 3, 16)[:, :, perm].reshape(1, 3, 4, 4)
        a = gram_loss({"t": Tensor(x, dtype=np.float64)}, {"t": Tensor(y, dtype=np.float64)})
        b = gram_loss({"t": Tensor(xp, dtype=np.float64)}, {"t": Tensor(y, dtype=np.float64)})
        assert np.isclose(a, b, atol=1e-12)


class TestLossGradients:
    def test_content_loss_gradient(self, rng):
        a = rng.uniform(size=(1, 2, 4, 4))
        b = rng.uniform(size=(1, 2, 4, 4))
        at = Tensor(a.copy(), requires_grad=True)
        content_loss(at, Tensor(b)).backward()

        def scalar(arrays):
            return content_loss(Tensor(arrays[0]), Tensor(arrays[1])).item()

        numeric = numeric_gradient(scalar, [a.copy(), b.copy()], 0)
        assert max_relative_error(at.grad, numeric) < 1e-3

    def test_style_loss_gradient(self, rng):
        a = rng.uniform(size=(1, 3, 5, 5))
        b = rng.uniform(size=(1, 3, 5, 5))
        at = Tensor(a.copy(), requires_grad=True)
        total, _ = style_loss({"t": at}, {"t": Tensor(b)}, eps=EPS)
        total.backward()

        def scalar(arrays):
            out, _ = style_loss({"t": Tensor(arrays[0])}, {"t": Tensor(arrays[1])}, eps=EPS)
            return out.item()

        numeric = numeric_gradient(scalar, [a.copy(), b.copy()], 0)
        assert max_relative_error(at.grad, numeric) < 1e-3

    def test_style_loss_gradient_wrt_style(self, rng):
        a = rng.uniform(size=(1, 3, 5, 5))
        b = rng.uniform(size=(1, 3, 5, 5))
        bt = Tensor(b.copy(), requires_grad=True)
        total, _ = style_loss({"t": Tensor(a)}, {"t": bt}, eps=EPS)
        total.backward()

        def scalar(arrays):
            out, _ = style_loss({"t": Tensor(arrays[0])}, {"t": Tensor(arrays[1])}, eps=EPS)
            return out.item()

        numeric = numeric_gradient(scalar, [a.copy(), b.copy()], 1)
        assert max_relative_error(bt.grad, numeric) < 1e-3
