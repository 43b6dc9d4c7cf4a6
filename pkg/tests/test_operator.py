import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from platewave.forward import PlateParams, assemble
from platewave.geometry import circle_curve, discretize
from platewave.operator import (
    DirectionSet,
    Provenance,
    add_noise,
    apply_adjoint,
    apply_operator,
    load_bhff,
    reciprocity_residual,
    save_bhff,
    save_csv,
    synthesize,
)

TWO_PI = 2 * np.pi


class TestDirectionSet:
    def test_uniform_angles(self):
        ds = DirectionSet.uniform(8)
        assert_allclose(ds.angles, 2 * np.pi * np.arange(8) / 8, atol=0)
        assert_allclose(np.linalg.norm(ds.vectors, axis=1), 1.0, atol=1e-15)

    def test_negation_closure_for_even(self):
        ds = DirectionSet.uniform(16)
        assert ds.negation_closed()
        assert_allclose(ds.vectors[(np.arange(16) + 8) % 16], -ds.vectors, atol=1e-14)

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            DirectionSet.uniform(1)


@pytest.fixture(scope="module")
def ff_circle():
    params = PlateParams(k=TWO_PI, nu=0.3)
    mesh = discretize(circle_curve(1.0), 128)
    ds = DirectionSet.uniform(64)
    return synthesize(mesh, params, ds, ds, sysmat=assemble(mesh, params))


class TestSynthesize:
    def test_circle_matrix_is_circulant(self, ff_circle):
        n = ff_circle.dirs.n
        scale = np.abs(ff_circle.data).max()
        for s in (1, 5, 30):
            rolled = np.roll(np.roll(ff_circle.data, s, axis=0), s, axis=1)
            assert np.abs(ff_circle.data - rolled).max() <= 1e-8 * scale

    def test_desk_scale_runtime(self, mesh288, params, sysmat288):
        ds = DirectionSet.uniform(128)
        t0 = time.time()
        ff = synthesize(mesh288, params, ds, ds, sysmat=sysmat288)
        assert time.time() - t0 < 60.0
        assert ff.shape == (128, 128)

    def test_column_superposition(self, ff128):
        g = np.zeros(128)
        g[3], g[40] = 1.0, 1.0
        got = apply_operator(ff128, g)
        expect = (2 * np.pi / 128) * (ff128.data[:, 3] + ff128.data[:, 40])
        assert_allclose(got, expect, atol=0)

    def test_worker_count_invariance(self, mesh288, params, sysmat288):
        ds = DirectionSet.uniform(96)
        a = synthesize(mesh288, params, ds, ds, sysmat=sysmat288, workers=1)
        b = synthesize(mesh288, params, ds, ds, sysmat=sysmat288, workers=4)
        assert np.array_equal(a.data, b.data)


class TestReciprocity:
    def test_five_arms_clean(self, ff128):
        assert reciprocity_residual(ff128) <= 1e-6

    def test_circle_clean(self, ff_circle):
        assert reciprocity_residual(ff_circle) <= 1e-8

    def test_noisy_matrix_reports_large_residual(self, ff128):
        noisy = add_noise(ff128, "additive", 0.5, seed=1)
        assert reciprocity_residual(noisy) > 1e-2

    def test_mismatched_sets_rejected(self, mesh288, params, sysmat288):
        ff = synthesize(mesh288, params, DirectionSet.uniform(32),
                        DirectionSet.uniform(64), sysmat=sysmat288)
        with pytest.raises(ValueError):
            reciprocity_residual(ff)


class TestNoise:
    def test_zero_level_is_identity(self, ff128):
        same = add_noise(ff128, "additive", 0.0, seed=9)
        assert np.array_equal(same.data, ff128.data)

    def test_additive_magnitude_exact(self, ff128):
        noisy = add_noise(ff128, "additive", 0.5, seed=7)
        dev = np.abs(np.abs(noisy.data - ff128.data) - 0.5 * np.abs(ff128.data))
        assert dev.max() <= 1e-14 * np.abs(ff128.data).max()

    def test_multiplicative_magnitude_exact(self, ff128):
        noisy = add_noise(ff128, "multiplicative", 0.25, seed=7)
        dev = np.abs(np.abs(noisy.data - ff128.data) - 0.25)
        assert dev.max() <= 1e-13

    def test_seeded_determinism(self, ff128):
        a = add_noise(ff128, "additive", 0.3, seed=42)
        b = add_noise(ff128, "additive", 0.3, seed=42)
        c = add_noise(ff128, "additive", 0.3, seed=43)
        assert np.array_equal(a.data, b.data)
        assert not np.array_equal(a.data, c.data)

    def test_unknown_kind_rejected(self, ff128):
        with pytest.raises(ValueError):
            add_noise(ff128, "gaussian", 0.1, seed=0)
        with pytest.raises(ValueError):
            add_noise(ff128, "additive", -0.1, seed=0)


class TestApply:
    def test_indicator_gives_scaled_column(self, ff128):
        g = np.zeros(128)
        g[11] = 1.0
        assert_allclose(apply_operator(ff128, g),
                        (2 * np.pi / 128) * ff128.data[:, 11], atol=0)

    def test_constant_density_on_circle_is_symmetric(self, ff_circle):
        out = apply_operator(ff_circle, np.ones(ff_circle.dirs.n))
        assert np.abs(out - out.mean()).max() <= 1e-8 * np.abs(out).max()

    def test_adjoint_consistency(self, ff128):
        rng = np.random.default_rng(5)
        g = rng.normal(size=128) + 1j * rng.normal(size=128)
        h = rng.normal(size=128) + 1j * rng.normal(size=128)
        w = 2 * np.pi / 128
        lhs = w * np.vdot(h, apply_operator(ff128, g))
        rhs = w * np.vdot(apply_adjoint(ff128, h), g)
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)

    def test_dimension_mismatch(self, ff128):
        with pytest.raises(ValueError):
            apply_operator(ff128, np.ones(64))
        with pytest.raises(ValueError):
            apply_adjoint(ff128, np.ones(64))


class TestFileFormats:
    def test_bhff_roundtrip_clean(self, ff128, tmp_path):
        path = tmp_path / "clean.bhff"
        save_bhff(ff128, path)
        back = load_bhff(path)
        assert np.array_equal(back.data, ff128.data)
        assert back.provenance == Provenance()
        assert back.k == ff128.k and back.nu == ff128.nu

    def test_bhff_roundtrip_noisy(self, ff128, tmp_path):
        noisy = add_noise(ff128, "multiplicative", 0.05, seed=99)
        path = tmp_path / "noisy.bhff"
        save_bhff(noisy, path)
        back = load_bhff(path)
        assert np.array_equal(back.data, noisy.data)
        assert back.provenance == noisy.provenance

    def test_bhff_bytes_deterministic(self, ff128, tmp_path):
        p1, p2 = tmp_path / "a.bhff", tmp_path / "b.bhff"
        save_bhff(ff128, p1)
        save_bhff(ff128, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bhff"
        path.write_bytes(b"NOPE" + bytes(64))
        with pytest.raises(ValueError):
            load_bhff(path)

    def test_csv_export(self, ff128, tmp_path):
        path = tmp_path / "ff.csv"
        save_csv(ff128, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "l,j,re,im"
        assert len(lines) == 1 + 128 * 128
        ell, j, re, im = lines[1].split(",")
        assert (int(ell), int(j)) == (0, 0)
        assert complex(float(re), float(im)) == ff128.data[0, 0]
