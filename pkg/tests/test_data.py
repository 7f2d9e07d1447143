import numpy as np
import pytest

from cospace import data
from cospace.errors import ParseError, ValidationError


class TestOnehot:
    def test_single_label(self):
        out = data.onehot_encode([2], 3)
        assert out.tolist() == [[0.0], [1.0], [0.0]]

    def test_multiple_labels(self):
        out = data.onehot_encode([1, 1, 3], 3)
        assert out.T.tolist() == [[1, 0, 0], [1, 0, 0], [0, 0, 1]]

    def test_out_of_range_names_index(self):
        with pytest.raises(ValidationError, match="index 0"):
            data.onehot_encode([4], 3)

    def test_columns_sum_to_one_and_argmax_roundtrip(self):
        rng = np.random.default_rng(3)
        labels = rng.integers(1, 6, 40)
        out = data.onehot_encode(labels, 5)
        assert np.array_equal(out.sum(axis=0), np.ones(40))
        assert np.array_equal(np.argmax(out, axis=0) + 1, labels)


class TestSimulateMs:
    def _cube(self, values, centers):
        return data.SpectralCube(samples=values, band_centers=centers)

    def test_constant_spectrum_preserved(self):
        cube = self._cube(np.full((4, 3), 2.5), [400, 500, 600, 700])
        srf = data.build_gaussian_srf([450, 650], [400, 500, 600, 700], 80)
        out = data.simulate_ms(cube, srf)
        assert np.allclose(out.samples, 2.5)

    def test_delta_srf_selects_band(self):
        cube = self._cube(np.array([[1.0, 2.0], [5.0, 7.0]]), [400, 500])
        srf = data.SrfBank(filters=np.array([[0.0, 1.0]]))
        out = data.simulate_ms(cube, srf)
        assert np.array_equal(out.samples, [[5.0, 7.0]])

    def test_weighted_average(self):
        # hand oracle: 0.5*1 + 0.5*3 = 2
        cube = self._cube(np.array([[1.0], [3.0]]), [400, 500])
        srf = data.SrfBank(filters=np.array([[0.5, 0.5]]))
        assert data.simulate_ms(cube, srf).samples[0, 0] == pytest.approx(2.0)

    def test_dimension_mismatch(self):
        cube = self._cube(np.ones((3, 2)), [400, 500, 600])
        srf = data.SrfBank(filters=np.array([[0.5, 0.5]]))
        with pytest.raises(ValidationError):
            data.simulate_ms(cube, srf)


class TestGaussianSrf:
    def test_isolated_band_is_one_hot(self):
        srf = data.build_gaussian_srf([500], [500, 900, 1000], fwhm=10)
        assert srf.filters[0, 0] == pytest.approx(1.0, abs=1e-10)

    def test_symmetric_placement(self):
        srf = data.build_gaussian_srf([500], [490, 510], fwhm=25)
        assert srf.filters[0].tolist() == [0.5, 0.5]

    def test_middle_weight_largest_outer_equal(self):
        srf = data.build_gaussian_srf([500], [490, 500, 510], fwhm=10)
        row = srf.filters[0]
        # independent evaluation of the kernel
        sigma = 10 / 2.3548200450309493
        raw = np.exp(-np.array([100.0, 0.0, 100.0]) / (2 * sigma**2))
        assert np.allclose(row, raw / raw.sum(), atol=1e-12)
        assert row[1] > row[0] == row[2]

    def test_bad_fwhm(self):
        with pytest.raises(ValidationError):
            data.build_gaussian_srf([500], [490, 510], fwhm=0)


class TestStackSystem:
    def _ds(self, ms, hs, labels, L):
        return data.PairedDataset(ms=ms, hs=hs, labels=labels, num_classes=L)

    def test_minimal_blocks(self):
        ds = self._ds([[5.0], [1.0]], [[7.0]], [1], 1)
        sys = data.stack_system(ds)
        assert sys.xtilde.tolist() == [[5, 0], [1, 0], [0, 7]]

    def test_ytilde_duplicates_onehot(self):
        ds = self._ds([[1.0, 2.0]], [[3.0, 4.0]], [1, 2], 2)
        sys = data.stack_system(ds)
        assert sys.ytilde.tolist() == [[1, 0, 1, 0], [0, 1, 0, 1]]

    def test_off_blocks_exactly_zero(self):
        rng = np.random.default_rng(0)
        ds = self._ds(rng.normal(size=(3, 6)), rng.normal(size=(5, 6)),
                      [1, 1, 2, 2, 3, 3], 3)
        sys = data.stack_system(ds)
        n = 6
        assert np.abs(sys.xtilde[:3, n:]).sum() == 0.0
        assert np.abs(sys.xtilde[3:, :n]).sum() == 0.0
        nonzero_budget = 3 * n + 5 * n
        assert np.count_nonzero(sys.xtilde) <= nonzero_budget


class TestCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        samples = rng.standard_normal((5, 7))
        labels = rng.integers(1, 4, 7)
        path = tmp_path / "x.csv"
        data.save_csv(path, samples, labels)
        back, back_labels = data.load_csv(path)
        assert np.array_equal(back, samples)
        assert np.array_equal(back_labels, labels)

    def test_round_trip_without_labels(self, tmp_path):
        samples = np.array([[1.25, -3.5]])
        path = tmp_path / "x.csv"
        data.save_csv(path, samples)
        back, labels = data.load_csv(path)
        assert labels is None
        assert np.array_equal(back, samples)

    def test_two_pixel_parse(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("band_1,band_2,label\n1.0,2.0,1\n3.0,4.0,2\n")
        samples, labels = data.load_csv(path)
        assert samples.tolist() == [[1.0, 3.0], [2.0, 4.0]]
        assert labels.tolist() == [1, 2]

    def test_ragged_row_reports_line(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("band_1,band_2\n1.0,2.0\n1.0,2.0,3.0\n")
        with pytest.raises(ParseError, match="line 3"):
            data.load_csv(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1.0,2.0\n")
        with pytest.raises(ParseError, match="header"):
            data.load_csv(path)

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("band_1\nfoo\n")
        with pytest.raises(ParseError, match="line 2"):
            data.load_csv(path)

    def test_srf_round_trip(self, tmp_path):
        srf = data.build_gaussian_srf([450, 650], [400, 500, 600, 700], 80)
        path = tmp_path / "srf.csv"
        data.save_srf_csv(path, srf)
        assert np.array_equal(data.load_srf_csv(path).filters, srf.filters)


def _scene_spec(noise=0.1, seed=0):
    hs_centers = np.arange(400.0, 700.0, 20.0)
    ms_centers = np.array([450.0, 550.0, 650.0])
    srf = data.build_gaussian_srf(ms_centers, hs_centers, 40.0)
    base = 0.5 + 0.1 * np.sin(hs_centers / 50.0)
    other = data.metamer_hs_mean(base, srf, scale=0.5, seed=1)
    third = 0.3 + 0.2 * np.cos(hs_centers / 80.0)
    return data.SceneSpec(
        classes=(
            data.ClassSpec(hs_mean=base, size=30),
            data.ClassSpec(hs_mean=other, size=30),
            data.ClassSpec(hs_mean=third, size=40),
        ),
        noise_sigma=noise,
        ms_centers=ms_centers,
        hs_centers=hs_centers,
        srf_fwhm=40.0,
        test_fraction=0.5,
        seed=seed,
    )


class TestSyntheticScene:
    def test_deterministic(self):
        spec = _scene_spec()
        a = data.make_synthetic_scene(spec)
        b = data.make_synthetic_scene(spec)
        assert np.array_equal(a[0].ms, b[0].ms)
        assert np.array_equal(a[0].hs, b[0].hs)
        assert np.array_equal(a[1], b[1])
        assert np.array_equal(a[2], b[2])

    def test_metamer_pair_noiseless(self):
        spec = _scene_spec(noise=0.0)
        ds, _, _ = data.make_synthetic_scene(spec)
        ms1 = ds.ms[:, ds.labels == 1]
        ms2 = ds.ms[:, ds.labels == 2]
        hs1 = ds.hs[:, ds.labels == 1]
        hs2 = ds.hs[:, ds.labels == 2]
        assert np.allclose(ms1[:, 0], ms2[:, 0], atol=1e-10)
        assert np.linalg.norm(hs1[:, 0] - hs2[:, 0]) > 0.1

    def test_cardinality(self):
        ds, test_ms, test_labels = data.make_synthetic_scene(_scene_spec())
        assert ds.num_samples == 15 + 15 + 20
        assert test_ms.shape[1] == test_labels.size == 15 + 15 + 20

    def test_too_few_classes(self):
        spec = _scene_spec()
        with pytest.raises(ValidationError):
            data.SceneSpec(
                classes=spec.classes[:1],
                noise_sigma=0.1,
                ms_centers=spec.ms_centers,
                hs_centers=spec.hs_centers,
                srf_fwhm=40.0,
                test_fraction=0.5,
            )

    def test_json_round_trip(self):
        spec = _scene_spec()
        back = data.SceneSpec.from_json(spec.to_json())
        assert back.to_json() == spec.to_json()
        a = data.make_synthetic_scene(spec)
        b = data.make_synthetic_scene(back)
        assert np.array_equal(a[0].hs, b[0].hs)
