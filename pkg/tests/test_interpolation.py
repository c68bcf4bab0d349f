import numpy as np
import pytest

from solo_opt.interpolation import (
    DomainError,
    FitError,
    GridField,
    RbfModel,
    bilinear_interpolate,
    default_shape_distance,
    export_binary_field,
    rbf_eval,
    rbf_fit,
    sample_on_grid,
    threshold_to_volume,
)


def unit_square(values):
    return GridField(np.array([0.0, 1.0]), np.array([0.0, 1.0]),
                     np.asarray(values, dtype=float))


class TestBilinear:
    def test_constant_field(self):
        f = unit_square([[3.0, 3.0], [3.0, 3.0]])
        for p in [(0.0, 0.0), (0.5, 0.5), (0.2, 0.9), (1.0, 1.0)]:
            assert bilinear_interpolate(f, p) == pytest.approx(3.0)

    def test_linear_field_midpoint(self):
        # F(x,y) = x + y at the corners; bilinear reproduces it exactly
        f = unit_square([[0.0, 1.0], [1.0, 2.0]])
        assert bilinear_interpolate(f, (0.5, 0.5)) == pytest.approx(1.0)
        assert bilinear_interpolate(f, (0.25, 0.75)) == pytest.approx(1.0)

    def test_corner_values(self):
        f = unit_square([[0.1, 0.2], [0.3, 0.4]])
        assert bilinear_interpolate(f, (0.0, 0.0)) == pytest.approx(0.1)
        assert bilinear_interpolate(f, (1.0, 1.0)) == pytest.approx(0.4)

    def test_outside_raises(self):
        f = unit_square([[0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(DomainError):
            bilinear_interpolate(f, (1.5, 0.5))
        with pytest.raises(DomainError):
            bilinear_interpolate(f, (0.5, -0.1))

    def test_multicell_grid(self):
        x = np.array([0.0, 1.0, 3.0])
        y = np.array([0.0, 2.0])
        vals = np.array([[0.0, 2.0], [1.0, 3.0], [3.0, 5.0]])  # F = x + y
        f = GridField(x, y, vals)
        assert bilinear_interpolate(f, (2.0, 1.0)) == pytest.approx(3.0)

    def test_invalid_grid(self):
        with pytest.raises(ValueError):
            GridField(np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            GridField(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.zeros((3, 2)))


class TestRbfFit:
    def test_constant_reproduction(self):
        centers = np.random.default_rng(0).random((8, 2))
        model = rbf_fit(centers, np.full(8, 2.5))
        np.testing.assert_allclose(model.lam, 0.0, atol=1e-9)
        assert model.a[0] == pytest.approx(2.5)
        np.testing.assert_allclose(model.a[1:], 0.0, atol=1e-9)

    def test_linear_reproduction(self):
        centers = np.random.default_rng(1).random((10, 2))
        model = rbf_fit(centers, centers[:, 0].copy())
        np.testing.assert_allclose(model.lam, 0.0, atol=1e-8)
        assert model.a[1] == pytest.approx(1.0)
        assert abs(model.a[0]) < 1e-8 and abs(model.a[2]) < 1e-8

    def test_interpolation_at_centers(self):
        rng = np.random.default_rng(2)
        centers = rng.random((10, 2)) * 4.0
        values = rng.random(10)
        model = rbf_fit(centers, values)
        at_centers = rbf_eval(model, centers)
        np.testing.assert_allclose(at_centers, values, atol=1e-8)

    def test_constraint_rows(self):
        rng = np.random.default_rng(3)
        centers = rng.random((15, 2))
        model = rbf_fit(centers, rng.random(15))
        assert abs(model.lam.sum()) < 1e-8
        assert abs((model.lam * model.centers[:, 0]).sum()) < 1e-8
        assert abs((model.lam * model.centers[:, 1]).sum()) < 1e-8

    def test_interpolation_property_many_configs(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(4, 25))
            centers = rng.random((n, 2)) * 10.0
            if default_shape_distance(centers) < 1e-3:
                continue  # nearly coincident centers: ill-posed by construction
            values = rng.random(n)
            model = rbf_fit(centers, values)
            err = np.max(np.abs(rbf_eval(model, centers) - values))
            assert err < 1e-8

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            rbf_fit(np.zeros((3, 3)), np.zeros(3))
        with pytest.raises(ValueError):
            rbf_fit(np.random.default_rng(0).random((4, 2)), np.zeros(4), d=-1.0)

    def test_duplicate_centers_fail(self):
        centers = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        with pytest.raises((FitError, ValueError)):
            rbf_fit(centers, np.array([0.0, 1.0, 2.0]), d=1.0)

    def test_default_shape_distance(self):
        centers = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 3.0]])
        assert default_shape_distance(centers) == pytest.approx(0.5)


class TestRbfEval:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(5)
        centers = rng.random((12, 2))
        model = rbf_fit(centers, rng.random(12))
        pts = rng.random((30, 2))
        direct = []
        for p in pts:
            s = model.a[0] + model.a[1] * p[0] + model.a[2] * p[1]
            for lam, c in zip(model.lam, model.centers):
                s += lam * np.exp(-np.sum((p - c) ** 2) / model.d**2)
            direct.append(s)
        np.testing.assert_allclose(rbf_eval(model, pts), direct, rtol=1e-12)

    def test_far_field_is_linear_tail(self):
        rng = np.random.default_rng(6)
        centers = rng.random((8, 2))
        model = rbf_fit(centers, rng.random(8))
        p = np.array([100.0, -50.0])
        tail = model.a[0] + model.a[1] * p[0] + model.a[2] * p[1]
        assert rbf_eval(model, p) == pytest.approx(tail, abs=1e-10)

    def test_scalar_vs_batch(self):
        rng = np.random.default_rng(7)
        centers = rng.random((6, 2))
        model = rbf_fit(centers, rng.random(6))
        p = np.array([0.3, 0.7])
        assert rbf_eval(model, p) == rbf_eval(model, p[None, :])[0]


class TestThresholdToVolume:
    @staticmethod
    def ramp_model():
        # fit rho(x, y) = x on a grid of centers: the interpolant is the ramp
        xs, ys = np.meshgrid(np.linspace(0, 1, 5), np.linspace(0, 1, 5))
        centers = np.column_stack([xs.ravel(), ys.ravel()])
        return rbf_fit(centers, centers[:, 0].copy())

    BOUNDS = ((0.0, 1.0), (0.0, 1.0))

    def test_ramp_half(self):
        thr, field = threshold_to_volume(self.ramp_model(), self.BOUNDS, 50, 0.5)
        assert thr == pytest.approx(0.5, abs=0.02)
        assert field.shape == (50, 50)
        assert np.mean(field) == pytest.approx(0.5, abs=0.5 / 2500 + 1e-12)

    def test_target_near_one(self):
        model = self.ramp_model()
        thr, field = threshold_to_volume(model, self.BOUNDS, 50, 0.999)
        sampled = sample_on_grid(model, self.BOUNDS, 50)
        assert thr <= sampled.min() + 0.05

    def test_random_smooth_field_fraction(self):
        rng = np.random.default_rng(8)
        for seed in range(5):
            centers = rng.random((12, 2))
            model = rbf_fit(centers, rng.random(12))
            _, field = threshold_to_volume(model, self.BOUNDS, 40, 0.2)
            assert abs(np.mean(field) - 0.2) <= 0.5 / 1600 + 1e-12

    def test_fraction_monotone_in_threshold(self):
        model = self.ramp_model()
        field = sample_on_grid(model, self.BOUNDS, 30)
        thresholds = np.linspace(field.min(), field.max(), 20)
        fracs = [np.mean(field >= t) for t in thresholds]
        assert all(b <= a for a, b in zip(fracs, fracs[1:]))

    def test_invalid_fraction(self):
        with pytest.raises(ValueError):
            threshold_to_volume(self.ramp_model(), self.BOUNDS, 20, 0.0)

    def test_export(self, tmp_path):
        field = np.array([[1.0, 0.0], [0.0, 1.0]])
        path = tmp_path / "field.txt"
        export_binary_field(field, path)
        assert path.read_text() == "1 0\n0 1\n"
