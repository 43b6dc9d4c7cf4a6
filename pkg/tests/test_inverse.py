import numpy as np
import pytest
from numpy.testing import assert_allclose

from platewave.geometry import points_inside
from platewave.inverse import (
    IndicatorField,
    SamplingGrid,
    TikhonovSolver,
    dsm_indicators,
    dsm_values_at,
    field_to_csv,
    field_to_pgm,
    localization_metrics,
    lsm_indicator,
    lsm_norms_at,
    lsm_solve,
    rhs_vector,
)
from platewave.kernels import farfield_constant
from platewave.operator import DirectionSet, FarFieldMatrix, add_noise

TWO_PI = 2 * np.pi


def identity_ff(n=32, k=TWO_PI):
    """Synthetic matrix whose weighted form (2 pi / n) U is the identity."""
    data = np.eye(n, dtype=complex) * n / (2 * np.pi)
    ds = DirectionSet.uniform(n)
    return FarFieldMatrix(data=data, k=k, nu=0.3, dirs=ds, recv=ds)


class TestSamplingGrid:
    def test_points_row_major(self):
        grid = SamplingGrid(box=(0, 1, 10, 12), nx=2, ny=3)
        expect = np.array([[0, 10], [1, 10], [0, 11], [1, 11], [0, 12], [1, 12]],
                          dtype=float)
        assert_allclose(grid.points, expect, atol=0)

    def test_validation(self):
        with pytest.raises(ValueError):
            SamplingGrid(box=(0, 1, 0, 1), nx=1, ny=5)
        with pytest.raises(ValueError):
            SamplingGrid(box=(1, 0, 0, 1), nx=4, ny=4)


class TestRhsVector:
    def test_origin_unscaled_is_ones(self):
        ds = DirectionSet.uniform(16)
        assert_allclose(rhs_vector((0, 0), ds, TWO_PI, scaled=False), 1.0, atol=0)

    def test_origin_scaled_is_constant(self):
        ds = DirectionSet.uniform(16)
        assert_allclose(rhs_vector((0, 0), ds, TWO_PI, scaled=True),
                        farfield_constant(TWO_PI), atol=0)

    def test_constant_modulus(self):
        ds = DirectionSet.uniform(32)
        vals = rhs_vector((1.3, -0.4), ds, 3.0, scaled=True)
        assert_allclose(np.abs(vals), abs(farfield_constant(3.0)), rtol=1e-14)


class TestTikhonov:
    def test_svd_reconstruction(self, ff128):
        solver = TikhonovSolver(ff128)
        weighted = (2 * np.pi / 128) * ff128.data
        recon = (solver.svd_u * solver.sigma) @ solver.svd_vh
        assert np.linalg.norm(weighted - recon) <= 1e-10 * solver.sigma[0]

    def test_identity_filter(self):
        ff = identity_ff()
        solver = TikhonovSolver(ff)
        phi_z = rhs_vector((0.3, 0.2), ff.recv, ff.k, scaled=True)
        alpha = 0.37
        g = lsm_solve(solver, phi_z, alpha)
        assert_allclose(g, phi_z / (1 + alpha), rtol=1e-12)

    def test_normal_equation_residual(self, ff128):
        solver = TikhonovSolver(ff128)
        phi_z = rhs_vector((0.4, -0.1), ff128.recv, ff128.k, scaled=True)
        alpha = 1e-4
        g = lsm_solve(solver, phi_z, alpha)
        fw = (2 * np.pi / 128) * ff128.data
        lhs = alpha * g + fw.conj().T @ (fw @ g)
        rhs = fw.conj().T @ phi_z
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)

    def test_norm_monotone_in_alpha(self, ff128):
        solver = TikhonovSolver(ff128)
        pts = np.array([[0.2, 0.1], [1.8, 0.5], [-2.2, 1.0]])
        alphas = np.logspace(-6, -1, 6)
        norms = np.stack([lsm_norms_at(solver, pts, a) for a in alphas])
        assert np.all(np.diff(norms, axis=0) <= 1e-12)

    def test_rejects_nonpositive_alpha(self, ff128):
        solver = TikhonovSolver(ff128)
        with pytest.raises(ValueError):
            solver.filtered(0.0)


class TestLsmIndicator:
    def test_exterior_blowup_versus_interior(self, ff128, mesh288):
        # regularized density norm must grow strongly (>= 10x) outside as
        # alpha shrinks, and the interior growth stays below each exterior one
        solver = TikhonovSolver(ff128)
        exterior = np.array([[2.5, 0.0], [0.0, 2.6], [-2.5, 0.5],
                             [1.9, 1.9], [-1.8, -2.0]])
        interior = np.array([[0.0, 0.0], [0.4, 0.0], [0.0, -0.4],
                             [-0.3, 0.3], [0.2, 0.25]])
        bnd = mesh288.positions
        dist = lambda p: np.sqrt(((bnd - p) ** 2).sum(-1)).min()
        assert all(dist(p) >= 1.0 for p in exterior)
        grow = lambda pts: (lsm_norms_at(solver, pts, 1e-6)
                            / lsm_norms_at(solver, pts, 1e-2))
        g_out, g_in = grow(exterior), grow(interior)
        assert np.all(g_out >= 10.0)
        assert np.all(g_in < g_out.min())

    def test_localization_clean(self, ff128, star5):
        grid = SamplingGrid(box=(-3, 3, -3, 3), nx=300, ny=300)
        field = lsm_indicator(grid, ff128, 1e-4)
        metrics = localization_metrics(field, star5)
        assert metrics["containment_top_decile"] >= 0.9

    def test_tiny_interior_grid_rescales_to_one(self, ff128):
        grid = SamplingGrid(box=(-0.1, 0.1, -0.1, 0.1), nx=2, ny=2)
        field = lsm_indicator(grid, ff128, 1e-4).rescale()
        assert field.values.max() == 1.0
        assert field.rescaled

    def test_worker_invariance(self, ff128):
        grid = SamplingGrid(box=(-3, 3, -3, 3), nx=50, ny=50)
        a = lsm_indicator(grid, ff128, 1e-3, workers=1)
        b = lsm_indicator(grid, ff128, 1e-3, workers=3)
        assert np.array_equal(a.values, b.values)


class TestDsmIndicators:
    def test_cauchy_schwarz(self, ff128):
        grid = SamplingGrid(box=(-3, 3, -3, 3), nx=25, ny=25)
        pts = grid.points
        w = 2 * np.pi / 128
        phi_d = np.exp(-1j * ff128.k * ff128.dirs.vectors @ pts.T)
        applied = w * (ff128.data @ phi_d)
        inner = np.abs(w * (phi_d.conj() * applied).sum(0))
        norms = np.sqrt(w) * np.linalg.norm(applied, axis=0)
        phin = np.sqrt(w) * np.linalg.norm(phi_d, axis=0)
        assert np.all(inner <= norms * phin * (1 + 1e-12))

    def test_decay_slope_along_ray(self, ff128, mesh288):
        ts = np.linspace(5, 10, 51)
        ray = np.stack([ts, np.zeros_like(ts)], -1)
        v1, _ = dsm_values_at(ff128, ray)
        bnd = mesh288.positions
        dists = np.array([np.sqrt(((bnd - p) ** 2).sum(-1)).min() for p in ray])
        slope = np.polyfit(np.log(dists), np.log(v1), 1)[0]
        assert slope <= -0.3

    def test_maximum_near_the_cavity(self, ff128, star5):
        grid = SamplingGrid(box=(-3, 3, -3, 3), nx=300, ny=300)
        d1, d2 = dsm_indicators(grid, ff128)
        poly = star5.position(np.linspace(0, 2 * np.pi, 1024, endpoint=False))
        cell = max(grid.cell)
        for f in (d1, d2):
            z = grid.points[np.argmax(f.values)]
            inside = bool(points_inside(poly, z[None, :])[0])
            near = np.sqrt(((poly - z) ** 2).sum(-1)).min() <= cell
            assert inside or near

    def test_scaling_invariance_of_rescaled_fields(self, ff128):
        from dataclasses import replace
        grid = SamplingGrid(box=(-2, 2, -2, 2), nx=40, ny=40)
        d1, d2 = dsm_indicators(grid, ff128)
        scaled = replace(ff128, data=(0.3 - 1.7j) * ff128.data)
        s1, s2 = dsm_indicators(grid, scaled)
        for a, b in ((d1, s1), (d2, s2)):
            assert np.argmax(a.values) == np.argmax(b.values)
            assert_allclose(a.rescale().values, b.rescale().values, rtol=1e-10)

    def test_equivalence_ratio_bounded(self, ff128):
        # ||F phi_z||^2 / |<phi_z, F phi_z>| bounded above and below on the grid
        grid = SamplingGrid(box=(-3, 3, -3, 3), nx=40, ny=40)
        d1, d2 = dsm_indicators(grid, ff128, rho1=2.0, rho2=1.0)
        ratio = d2.values ** 2 / d1.values
        assert np.all(np.isfinite(ratio)) and ratio.min() > 0
        assert ratio.max() / ratio.min() < 1e4

    def test_rejects_bad_exponent(self, ff128):
        with pytest.raises(ValueError):
            dsm_values_at(ff128, np.zeros((1, 2)), rho1=0.0)


class TestLocalizationMetrics:
    def _field_from_values(self, grid, values):
        return IndicatorField(grid=grid, values=values, method="dsm1", parameter=2.0)

    def test_exact_interior_indicator(self, star5):
        grid = SamplingGrid(box=(-3, 3, -3, 3), nx=120, ny=120)
        poly = star5.position(np.linspace(0, 2 * np.pi, 512, endpoint=False))
        values = points_inside(poly, grid.points).astype(float)
        metrics = localization_metrics(self._field_from_values(grid, values), star5)
        assert metrics["containment_top_decile"] == 1.0
        assert metrics["centroid_error"] <= 2 * max(grid.cell)

    def test_uniform_field_matches_area_ratio(self, star5):
        grid = SamplingGrid(box=(-3, 3, -3, 3), nx=120, ny=120)
        values = np.ones(grid.points.shape[0])
        metrics = localization_metrics(self._field_from_values(grid, values), star5)
        area_ratio = np.pi * (1 + 0.3 ** 2 / 2) / 36.0
        assert abs(metrics["containment_top_decile"] - area_ratio) < 0.02

    def test_three_obstacles_detected(self, ff_multi, three_stars):
        noisy = add_noise(ff_multi, "additive", 0.05, seed=7)
        grid = SamplingGrid(box=(-10, 10, -10, 10), nx=500, ny=500)
        d1, d2 = dsm_indicators(grid, noisy)
        for f in (d1, d2):
            metrics = localization_metrics(f, three_stars)
            assert metrics["peak_count"] == 3
            assert all(metrics["obstacle_detected"])

    def test_degenerate_field_flagged(self, star5):
        grid = SamplingGrid(box=(-3, 3, -3, 3), nx=10, ny=10)
        with pytest.raises(ValueError):
            localization_metrics(self._field_from_values(grid, np.zeros(100)), star5)


class TestExports:
    def test_csv_and_pgm(self, ff128, tmp_path):
        grid = SamplingGrid(box=(-2, 2, -2, 2), nx=30, ny=20)
        field, _ = dsm_indicators(grid, ff128)
        csv_path = tmp_path / "f.csv"
        pgm_path = tmp_path / "f.pgm"
        field_to_csv(field, csv_path)
        field_to_pgm(field.rescale(), pgm_path)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "x,y,value" and len(lines) == 601
        raw = pgm_path.read_bytes()
        assert raw.startswith(b"P5\n30 20\n255\n")
        assert len(raw) == len(b"P5\n30 20\n255\n") + 600

    def test_export_bytes_deterministic(self, ff128, tmp_path):
        grid = SamplingGrid(box=(-2, 2, -2, 2), nx=16, ny=16)
        field, _ = dsm_indicators(grid, ff128)
        a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
        field_to_pgm(field, a)
        field_to_pgm(field, b)
        assert a.read_bytes() == b.read_bytes()

    def test_rescale_of_zero_field_rejected(self):
        grid = SamplingGrid(box=(0, 1, 0, 1), nx=4, ny=4)
        field = IndicatorField(grid=grid, values=np.zeros(16), method="dsm1",
                               parameter=2.0)
        with pytest.raises(ValueError):
            field.rescale()
