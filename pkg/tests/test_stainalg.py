import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import nnls as scipy_nnls
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from stainbench import imagecore as ic
from stainbench import synthetic
from stainbench.errors import DataError, DegenerateStainPlane, InsufficientTissue, NoUsableTiles
from stainbench.stainalg import (
    ColorStatNormalizer,
    ColorStatProfile,
    MacenkoNormalizer,
    StainParams,
    StainProfile,
    VahadaneNormalizer,
    apply_colorstat,
    apply_stain_transfer,
    canonical_stain_matrix,
    compute_concentrations,
    dumps_profile,
    estimate_stain_matrix_macenko,
    fit_colorstat,
    fit_stain_profile,
    fit_vahadane_dictionary,
    load_profile,
    nnls_two_columns,
    profile_from_dict,
    pseudo_max_concentration,
    save_profile,
    stats_lab,
    transfer_od,
)
from stainbench.stainalg.vahadane import objective


def best_cosine(estimate, truth):
    """Smallest column cosine under the better of the two column pairings."""
    d = estimate.T @ truth
    return max(min(d[0, 0], d[1, 1]), min(d[0, 1], d[1, 0]))


def planted_od(seed, n=128 * 128, stains=None):
    rng = np.random.default_rng(seed)
    m = stains if stains is not None else synthetic.random_stain_matrix(rng)
    c = synthetic.planted_concentrations(rng, n)
    return c @ m.T, m, c


class TestStatsLab:
    def test_constant_gray(self):
        prof = stats_lab(np.full((8, 8, 3), 119, np.uint8))
        np.testing.assert_allclose(prof.mean, [50.0344, 0, 0], atol=1e-4)
        np.testing.assert_allclose(prof.std, 0, atol=1e-12)

    def test_black_white_pair(self):
        prof = stats_lab(np.array([[[0, 0, 0], [255, 255, 255]]], np.uint8))
        np.testing.assert_allclose(prof.mean, [50, 0, 0], atol=1e-9)
        np.testing.assert_allclose(prof.std, [50, 0, 0], atol=1e-9)

    def test_two_pass_oracle(self, rng):
        x = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        lab = ic.rgb_to_lab(x).reshape(-1, 3)
        mean = [sum(lab[:, k]) / len(lab) for k in range(3)]
        std = [np.sqrt(sum((lab[:, k] - mean[k]) ** 2) / len(lab)) for k in range(3)]
        prof = stats_lab(x)
        np.testing.assert_allclose(prof.mean, mean, atol=1e-9)
        np.testing.assert_allclose(prof.std, std, atol=1e-9)


class TestColorStat:
    def test_single_and_duplicate_corpus(self, he_tiles):
        ref = stats_lab(he_tiles[0])
        for corpus in ([he_tiles[0]], [he_tiles[0], he_tiles[0]]):
            prof = fit_colorstat(corpus)
            np.testing.assert_allclose(prof.mean, ref.mean, rtol=1e-14)
            np.testing.assert_allclose(prof.std, ref.std, rtol=1e-14)

    def test_two_tiles_average(self, he_tiles):
        a, b = stats_lab(he_tiles[0]), stats_lab(he_tiles[1])
        prof = fit_colorstat(he_tiles[:2])
        np.testing.assert_allclose(prof.mean, (a.mean + b.mean) / 2, rtol=1e-14)
        np.testing.assert_allclose(prof.std, (a.std + b.std) / 2, rtol=1e-14)

    def test_order_invariant(self, he_tiles, mt_tiles):
        corpus = list(he_tiles) + list(mt_tiles)
        a = fit_colorstat(corpus)
        b = fit_colorstat(corpus[::-1])
        np.testing.assert_array_equal(a.mean, b.mean)
        np.testing.assert_array_equal(a.std, b.std)

    def test_empty_corpus(self):
        with pytest.raises(DataError):
            fit_colorstat([])

    def test_self_identity(self, he_tiles):
        for tile in he_tiles:
            out = apply_colorstat(tile, stats_lab(tile))
            assert np.abs(out.astype(int) - tile).max() <= 2

    def test_constant_tile_maps_to_target_mean(self):
        target = ColorStatProfile([60.0, 10.0, -5.0], [12.0, 3.0, 4.0])
        out = apply_colorstat(np.full((6, 6, 3), 90, np.uint8), target)
        assert np.all(out == out[0, 0])
        np.testing.assert_allclose(ic.rgb_to_lab(out).reshape(-1, 3).mean(0), target.mean, atol=1.0)

    def test_gray_tile_turns_red(self, rng):
        gray = np.repeat(rng.integers(90, 170, (16, 16, 1), dtype=np.uint8), 3, axis=2)
        target = ColorStatProfile([55.0, 20.0, 0.0], [8.0, 0.0, 0.0])
        out = apply_colorstat(gray, target)
        lab = ic.rgb_to_lab(out).reshape(-1, 3)
        assert abs(lab[:, 1].mean() - 20) < 1.0
        assert np.all(out[..., 0] >= out[..., 1])

    def test_matches_unfused_formula(self, he_tiles, mt_tiles):
        src = he_tiles[2]
        target = fit_colorstat(mt_tiles)
        lab = ic.rgb_to_lab(src)
        mu, sd = lab.reshape(-1, 3).mean(0), lab.reshape(-1, 3).std(0)
        expect = ic.lab_to_rgb((lab - mu) * (target.std / np.maximum(sd, 1e-6)) + target.mean)
        assert np.abs(apply_colorstat(src, target).astype(int) - expect).max() <= 1


class TestCanonical:
    def test_flip_clamp_normalise_order(self):
        m = canonical_stain_matrix([[-0.1, 0.9], [-0.8, 0.3], [-0.5, -0.01]])
        np.testing.assert_allclose(np.linalg.norm(m, axis=0), 1, atol=1e-12)
        assert np.all(m >= 0)
        assert m[0, 0] >= m[0, 1]
        np.testing.assert_allclose(m[:, 1], np.array([0.1, 0.8, 0.5]) / np.linalg.norm([0.1, 0.8, 0.5]))

    def test_vanishing_column(self):
        with pytest.raises(DegenerateStainPlane):
            canonical_stain_matrix([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])


class TestConcentrations:
    def test_exact_recovery_both_solvers(self):
        od, m, c = planted_od(3)
        for solver in ("nnls", "lstsq"):
            np.testing.assert_allclose(compute_concentrations(od, m, solver), c, atol=1e-8)

    def test_zero_rows(self):
        m = synthetic.HE_STAINS
        assert np.all(compute_concentrations(np.zeros((5, 3)), m) == 0)

    def test_nnls_nonnegative_lstsq_not(self, rng):
        od, m, _ = planted_od(4)
        noisy = od + 0.05 * rng.standard_normal(od.shape)
        assert compute_concentrations(noisy, m, "lstsq").min() < 0
        assert compute_concentrations(noisy, m, "nnls").min() >= 0

    def test_matches_scipy_nnls(self, rng):
        m = synthetic.random_stain_matrix(rng)
        od = rng.normal(0.3, 0.6, (300, 3))
        ours = nnls_two_columns(od, m)
        ref = np.array([scipy_nnls(m, row)[0] for row in od])
        np.testing.assert_allclose(ours, ref, atol=1e-10)

    @settings(max_examples=80, deadline=None)
    @given(
        arrays(np.float64, (3, 2), elements=st.floats(0.01, 1.0)),
        arrays(np.float64, (4, 3), elements=st.floats(-2.0, 3.0)),
    )
    def test_nnls_kkt(self, m, od):
        m = m / np.linalg.norm(m, axis=0)
        c = nnls_two_columns(od, m)
        assert np.all(c >= 0)
        ref = np.array([scipy_nnls(m, row)[0] for row in od])
        res = lambda x: np.sum((od - x @ m.T) ** 2, axis=1)  # noqa: E731
        assert np.all(res(c) <= res(ref) + 1e-9)

    def test_unknown_solver(self):
        with pytest.raises(DataError):
            compute_concentrations(np.zeros((1, 3)), synthetic.HE_STAINS, "magic")


class TestPseudoMax:
    def test_identical_rows(self):
        np.testing.assert_array_equal(pseudo_max_concentration(np.tile([0.3, 1.7], (9, 1))), [0.3, 1.7])

    def test_uniform_grid(self):
        col = np.arange(101, dtype=float)
        np.testing.assert_allclose(pseudo_max_concentration(np.c_[col, col]), [99.0, 99.0], atol=1e-12)

    def test_sort_oracle(self, rng):
        c = rng.gamma(2.0, 1.0, (257, 2))
        out = pseudo_max_concentration(c, 99.0)
        for j in range(2):
            s = sorted(c[:, j])
            pos = 0.99 * (len(s) - 1)
            lo = int(pos)
            expect = s[lo] + (pos - lo) * (s[lo + 1] - s[lo])
            assert abs(out[j] - expect) < 1e-12


class TestMacenko:
    @pytest.mark.parametrize("seed", range(5))
    def test_planted_recovery(self, seed):
        od, m, _ = planted_od(seed)
        assert best_cosine(estimate_stain_matrix_macenko(od), m) >= 0.99

    def test_texture_tiles(self):
        for seed, stains in ((1, synthetic.HE_STAINS), (2, synthetic.MT_STAINS)):
            rng = np.random.default_rng(seed)
            od = synthetic.concentration_maps(rng, 128).reshape(-1, 2) @ stains.T
            assert best_cosine(estimate_stain_matrix_macenko(od), stains) >= 0.98

    def test_white_tile(self):
        with pytest.raises(InsufficientTissue):
            estimate_stain_matrix_macenko(ic.rgb_to_od(np.full((32, 32, 3), 255, np.uint8)))

    def test_single_stain(self):
        od, m, c = planted_od(5)
        c[:, 1] = 0
        with pytest.raises(DegenerateStainPlane):
            estimate_stain_matrix_macenko(c @ m.T)

    def test_output_invariants(self, he_tiles):
        m = estimate_stain_matrix_macenko(ic.rgb_to_od(he_tiles[0]))
        np.testing.assert_allclose(np.linalg.norm(m, axis=0), 1, atol=1e-9)
        assert np.all(m >= 0) and m[0, 0] >= m[0, 1]


class TestVahadane:
    @pytest.mark.parametrize("seed", range(5))
    def test_planted_recovery_lambda0(self, seed):
        od, m, _ = planted_od(seed)
        assert best_cosine(fit_vahadane_dictionary(od, sparsity_lambda=0.0), m) >= 0.98

    def test_sparsity_selects_planted_cone_from_far_start(self):
        # With lambda = 0 any cone containing the data is optimal; the l1 term
        # prefers the tightest one, which is the planted matrix.
        od, m, _ = planted_od(7, stains=synthetic.MT_STAINS)
        est = fit_vahadane_dictionary(od, sparsity_lambda=0.01, init=synthetic.HE_STAINS, max_iters=2000, tol=1e-12)
        assert best_cosine(est, m) >= 0.99

    @pytest.mark.parametrize("lam", [0.0, 0.1, 1.0])
    def test_monotone_from_random_start(self, lam):
        rng = np.random.default_rng(int(lam * 10))
        od, _, _ = planted_od(8)
        od = np.abs(od + 0.05 * rng.standard_normal(od.shape))
        _, _, trace = fit_vahadane_dictionary(
            od, sparsity_lambda=lam, init=synthetic.random_stain_matrix(rng), max_iters=60, tol=0, return_trace=True
        )
        assert np.all(np.diff(trace) <= 1e-10)

    def test_trace_matches_objective(self):
        od, _, _ = planted_od(9)
        m, c, trace = fit_vahadane_dictionary(od, sparsity_lambda=0.1, return_trace=True)
        tissue = od[(od > 0.15).any(axis=1)]
        assert trace[-1] == pytest.approx(objective(tissue, c, m, 0.1), rel=1e-9)

    def test_large_lambda_collapses(self):
        od, _, _ = planted_od(10)
        tissue = od[(od > 0.15).any(axis=1)]
        small = fit_vahadane_dictionary(od, sparsity_lambda=0.1, return_trace=True)
        big = fit_vahadane_dictionary(od, sparsity_lambda=1e3, return_trace=True)
        assert big[1].sum() < 0.01 * small[1].sum()
        err = lambda r: np.sum((tissue - r[1] @ r[0].T) ** 2)  # noqa: E731
        assert err(big) > err(small)

    def test_blank(self):
        with pytest.raises(InsufficientTissue):
            fit_vahadane_dictionary(np.zeros((500, 3)))


class TestCorpusFit:
    def test_single_tile_equals_estimate(self, he_tiles):
        from stainbench.stainalg import estimate_stain_profile

        one = estimate_stain_profile(he_tiles[0], "macenko")
        prof = fit_stain_profile([he_tiles[0]], "macenko")
        np.testing.assert_allclose(prof.stain_matrix, one.stain_matrix, atol=1e-15)
        np.testing.assert_allclose(prof.max_concentration, one.max_concentration, atol=1e-15)

    def test_identical_planted_matrix(self):
        m = synthetic.MT_STAINS
        ods = [synthetic.planted_concentrations(np.random.default_rng(s), 4096) @ m.T for s in (3, 4)]
        imgs = [ic.od_to_rgb(od, 64, 64) for od in ods]
        prof = fit_stain_profile(imgs, "macenko")
        # 8-bit quantisation of the rendered tiles limits the agreement.
        assert best_cosine(prof.stain_matrix, m) > 0.999

    def test_order_invariant(self, he_tiles):
        for method in ("macenko", "vahadane"):
            a = fit_stain_profile(he_tiles, method)
            b = fit_stain_profile(he_tiles[::-1], method)
            np.testing.assert_allclose(a.stain_matrix, b.stain_matrix, atol=1e-12, rtol=0)
            np.testing.assert_allclose(a.max_concentration, b.max_concentration, atol=1e-12, rtol=0)

    def test_blank_corpus_lists_reasons(self):
        blank = np.full((32, 32, 3), 255, np.uint8)
        with pytest.raises(NoUsableTiles) as info:
            fit_stain_profile([blank, blank], "macenko")
        assert len(info.value.reasons) == 2
        assert all("InsufficientTissue" in r for _, r in info.value.reasons)

    def test_skips_are_counted(self, he_tiles):
        blank = np.full(he_tiles[0].shape, 255, np.uint8)
        prof = fit_stain_profile([he_tiles[0], blank], "macenko")
        assert prof.meta["skipped"] == 1 and prof.meta["corpus_size"] == 2

    def test_accepts_paths(self, tmp_path, he_tiles):
        paths = []
        for i, t in enumerate(he_tiles[:2]):
            ic.write_image(tmp_path / f"{i}.png", t)
            paths.append(tmp_path / f"{i}.png")
        a = fit_stain_profile(paths, "macenko")
        b = fit_stain_profile(he_tiles[:2], "macenko")
        np.testing.assert_array_equal(a.stain_matrix, b.stain_matrix)


class TestStainTransfer:
    @pytest.mark.parametrize("method", ["macenko", "vahadane"])
    def test_self_transfer_near_identity(self, he_tiles, method):
        for tile in he_tiles[:3]:
            out, flag = apply_stain_transfer(tile, fit_stain_profile([tile], method))
            assert flag is None
            assert np.abs(out.astype(int) - tile).mean() <= 3

    def test_exact_algebra(self):
        od, m_src, c = planted_od(11, stains=synthetic.HE_STAINS)
        m_tgt = synthetic.MT_STAINS
        params = StainParams(beta_od_threshold=0.0)
        src_max = pseudo_max_concentration(compute_concentrations(od, estimate_stain_matrix_macenko(od, beta_od_threshold=0.0)))
        target = StainProfile("macenko", m_tgt, src_max)
        out = transfer_od(od, target, params)
        np.testing.assert_allclose(out, c @ m_tgt.T, atol=1e-6)

    def test_blank_passthrough(self, mt_tiles):
        blank = np.full((32, 32, 3), 255, np.uint8)
        out, flag = apply_stain_transfer(blank, fit_stain_profile(mt_tiles[:2], "macenko"))
        np.testing.assert_array_equal(out, blank)
        assert flag == "passthrough:InsufficientTissue"

    def test_single_stain_passthrough(self, mt_tiles):
        od = np.outer(np.linspace(0.2, 1.0, 1024), synthetic.HE_STAINS[:, 0])
        tile = ic.od_to_rgb(od, 32, 32)
        out, flag = apply_stain_transfer(tile, fit_stain_profile(mt_tiles[:2], "macenko"))
        assert flag == "passthrough:DegenerateStainPlane"
        np.testing.assert_array_equal(out, tile)


class TestProfiles:
    def test_json_round_trip_bit_exact(self, tmp_path, he_tiles):
        for prof in (fit_stain_profile(he_tiles[:2], "vahadane"), fit_colorstat(he_tiles[:2])):
            save_profile(prof, tmp_path / "p.json")
            back = load_profile(tmp_path / "p.json")
            assert type(back) is type(prof)
            assert dumps_profile(back) == dumps_profile(prof)
            for name in ("stain_matrix", "max_concentration", "mean", "std"):
                if hasattr(prof, name):
                    np.testing.assert_array_equal(getattr(back, name), getattr(prof, name))

    def test_document_fields(self, he_tiles):
        doc = fit_stain_profile(he_tiles[:2], "macenko").to_dict()
        assert doc["method"] == "macenko" and len(doc["matrix"]) == 6
        assert doc["fit"]["corpus_size"] == 2 and "params" in doc["fit"]

    @pytest.mark.parametrize(
        "doc",
        [
            {"format": "other"},
            {"format": "stainbench.profile", "version": 99, "method": "macenko"},
            {"format": "stainbench.profile", "version": 1, "method": "nope"},
            {"format": "stainbench.profile", "version": 1, "method": "macenko", "matrix": [1, 2], "max_concentration": [1, 1]},
        ],
    )
    def test_bad_documents(self, doc):
        with pytest.raises(DataError):
            profile_from_dict(doc)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_profile(tmp_path / "none.json")

    def test_invariants(self):
        with pytest.raises(DataError):
            ColorStatProfile([0, 0, 0], [1, -1, 1])
        with pytest.raises(DataError):
            StainProfile("macenko", synthetic.HE_STAINS, [-1, 1])
        assert not StainProfile("macenko", synthetic.HE_STAINS, [0, 1]).usable


class TestEstimators:
    @pytest.mark.parametrize("cls", [ColorStatNormalizer, MacenkoNormalizer, VahadaneNormalizer])
    def test_params_and_clone(self, cls):
        est = cls()
        params = est.get_params()
        assert clone(est).get_params() == params
        key = next(iter(params))
        est.set_params(**{key: params[key]})

    @pytest.mark.parametrize("cls", [ColorStatNormalizer, MacenkoNormalizer, VahadaneNormalizer])
    def test_not_fitted(self, cls, he_tiles):
        with pytest.raises(NotFittedError):
            cls().transform(he_tiles[0])

    @pytest.mark.parametrize("cls", [ColorStatNormalizer, MacenkoNormalizer, VahadaneNormalizer])
    def test_container_shapes(self, cls, he_tiles, mt_tiles):
        est = cls().fit(mt_tiles[:3])
        single = est.transform(he_tiles[0])
        assert single.shape == he_tiles[0].shape and single.dtype == np.uint8
        stack = est.transform(np.stack(he_tiles[:2]))
        assert stack.shape == (2,) + he_tiles[0].shape
        assert isinstance(est.transform(list(he_tiles[:2])), list)

    def test_matches_functions(self, he_tiles, mt_tiles):
        est = MacenkoNormalizer().fit(mt_tiles)
        prof = fit_stain_profile(mt_tiles, "macenko")
        np.testing.assert_array_equal(est.to_profile().stain_matrix, prof.stain_matrix)
        np.testing.assert_array_equal(est.transform(he_tiles[0]), apply_stain_transfer(he_tiles[0], prof)[0])

    def test_from_profile(self, he_tiles, mt_tiles):
        prof = fit_colorstat(mt_tiles)
        est = ColorStatNormalizer.from_profile(prof)
        np.testing.assert_array_equal(est.transform(he_tiles[0]), apply_colorstat(he_tiles[0], prof))
        sprof = fit_stain_profile(mt_tiles, "vahadane")
        sest = VahadaneNormalizer.from_profile(sprof)
        np.testing.assert_array_equal(sest.to_profile().stain_matrix, sprof.stain_matrix)

    def test_flags(self, mt_tiles):
        est = MacenkoNormalizer().fit(mt_tiles[:2])
        blank = np.full((32, 32, 3), 255, np.uint8)
        _, flags = est.transform_with_flags([mt_tiles[0], blank])
        assert flags == [None, "passthrough:InsufficientTissue"]
