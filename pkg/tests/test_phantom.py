import numpy as np
import pytest

from nlct.operators import ParallelRayGeometry, Radon2DOperator
from nlct.phantom import (DENSITY_PRESETS, PhantomConfig, SHEPP_LOGAN_2D,
                          SHEPP_LOGAN_3D, TEST_ELLIPSOID_INDEX, ellipsoids_for,
                          psnr, shepp_logan)


def point_in_ellipse_densities(point, config, ndim):
    """Analytic oracle: additive density at a point from the expanded table."""
    total = 0.0
    px, py, pz = point
    for ell in ellipsoids_for(config, ndim):
        qx, qy, qz = px - ell.center[0], py - ell.center[1], pz - ell.center[2]
        rz = ell.rotation[0]
        cx = np.cos(rz) * qx + np.sin(rz) * qy
        cy = -np.sin(rz) * qx + np.cos(rz) * qy
        ax, ay, az = ell.semi_axes
        if (cx / ax) ** 2 + (cy / ay) ** 2 + (qz / az) ** 2 <= 1.0:
            total += ell.density
    return max(total, 0.0)


class TestTables:
    def test_ten_entries_each(self):
        assert len(SHEPP_LOGAN_2D) == 10
        assert len(SHEPP_LOGAN_3D) == 10

    def test_3d_projects_to_2d_table(self):
        # shared columns of the two canonical tables must agree
        for row2, row3 in zip(SHEPP_LOGAN_2D, SHEPP_LOGAN_3D):
            assert row2[0] == row3[0]          # density
            assert row2[1] == row3[1]          # a
            assert row2[2] == row3[2]          # b
            assert row2[3] == row3[4]          # x0
            assert row2[4] == row3[5]          # y0
            assert row2[5] == row3[7]          # rotation

    def test_designated_test_ellipsoid(self):
        row = SHEPP_LOGAN_2D[TEST_ELLIPSOID_INDEX]
        assert (row[1], row[2]) == (0.21, 0.25)


class TestSheppLogan:
    def test_values_bounded(self):
        cfg = PhantomConfig(test_ellipsoid_density=DENSITY_PRESETS["metal"])
        sig = shepp_logan((32, 32), cfg)
        positive_sum = sum(max(r[0], 0.0) * cfg.density_scale for r in SHEPP_LOGAN_2D)
        bound = positive_sum - 0.1 * cfg.density_scale + DENSITY_PRESETS["metal"]
        assert sig.values.min() >= 0.0
        assert sig.values.max() <= bound + 1e-12

    def test_background_is_zero(self):
        sig = shepp_logan((32, 32))
        img = sig.reshaped()
        assert img[0, 0] == 0.0
        assert img[-1, -1] == 0.0

    def test_center_voxel_matches_analytic_oracle(self):
        cfg = PhantomConfig()
        sig = shepp_logan((64, 64), cfg)
        img = sig.reshaped()
        i = j = 32
        cx = (2 * i + 1) / 64 - 1
        cy = (2 * j + 1) / 64 - 1
        expected = point_in_ellipse_densities((cx, cy, 0.0), cfg, 2)
        assert img[i, j] == pytest.approx(expected, abs=1e-15)

    def test_interior_voxels_match_oracle_3d(self):
        cfg = PhantomConfig(test_ellipsoid_density=0.4)
        sig = shepp_logan((32, 32, 32), cfg)
        vol = sig.reshaped()
        rng = np.random.default_rng(0)
        for _ in range(20):
            i, j, k = rng.integers(0, 32, size=3)
            pt = tuple((2 * idx + 1) / 32 - 1 for idx in (i, j, k))
            assert vol[i, j, k] == pytest.approx(
                point_in_ellipse_densities(pt, cfg, 3), abs=1e-15)

    def test_deterministic(self):
        a = shepp_logan((32, 32, 32))
        b = shepp_logan((32, 32, 32))
        assert np.array_equal(a.values, b.values)

    def test_dims_validated(self):
        with pytest.raises(ValueError):
            shepp_logan((8, 8))
        with pytest.raises(ValueError):
            shepp_logan((32,))

    def test_enlargement_grows_support(self):
        small = shepp_logan((64, 64), PhantomConfig(test_ellipsoid_enlargement=1.0,
                                                    test_ellipsoid_density=1.0))
        big = shepp_logan((64, 64), PhantomConfig(test_ellipsoid_enlargement=1.3,
                                                  test_ellipsoid_density=1.0))
        assert np.sum(big.values >= 0.9) > np.sum(small.values >= 0.9)


class TestPsnr:
    def test_exact_match_is_infinite(self):
        sig = shepp_logan((32, 32))
        assert psnr(sig, sig) == np.inf

    def test_unit_mse_is_zero_db(self):
        a = np.zeros(100)
        b = np.ones(100)
        assert psnr(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_mse_hundredth_is_twenty_db(self):
        a = np.zeros(100)
        b = np.full(100, 0.1)
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        a = rng.random(200)
        b = rng.random(200)
        perm = rng.permutation(200)
        assert psnr(a, b) == pytest.approx(psnr(a[perm], b[perm]), rel=1e-12)

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            psnr(np.zeros(3), np.zeros(4))
        with pytest.raises(ValueError):
            psnr(np.zeros(0), np.zeros(0))


class TestDensitySweep:
    def test_projection_probe_monotone(self):
        # the peak line integral through the test feature strictly increases
        # with its density
        geom = ParallelRayGeometry(angles=np.linspace(0, np.pi, 12, endpoint=False),
                                   n_bins=96, bin_spacing=2.0 / 64)
        op = Radon2DOperator(geom, (64, 64), pixel_spacing=2.0 / 64)
        peaks = []
        for dens in (0.05, 0.25, 0.6, 1.5):
            sig = shepp_logan((64, 64), PhantomConfig(test_ellipsoid_density=dens))
            peaks.append(op.apply(sig.values).max())
        assert np.all(np.diff(peaks) > 0)

    def test_presets_ordered(self):
        assert (DENSITY_PRESETS["soft_tissue"] < DENSITY_PRESETS["bone"]
                < DENSITY_PRESETS["metal"])
