"""Domain types, KL closed forms, and the text serialization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klconst import (
    ChannelParams,
    FileFormatError,
    LevelSet,
    MultiLevelConstellation,
    SignalPoint,
    UnitarySet,
    canonical_direction,
    inter_level_kl,
    intra_level_kl,
    kl_decomposed,
    kl_full,
    load_constellation,
    min_kl_bruteforce,
    pairwise_kl_matrix,
    save_constellation,
)

# frozen with 40-digit arithmetic: x - ln x - 1 at x = 1/2
D2_HALF = 0.19314718055994530942


def unit(v):
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def random_point(rng, K, amp_low=0.0, amp_high=1.6):
    v = unit(rng.standard_normal(K) + 1j * rng.standard_normal(K))
    return SignalPoint(rng.uniform(amp_low, amp_high), v)


@pytest.fixture()
def small_constellation():
    levels = LevelSet(
        [math.sqrt(0.5), math.sqrt(1.5)], sigma2_design=0.5, ratio=2.0
    )
    dirs = UnitarySet(np.eye(2, dtype=complex))
    return MultiLevelConstellation(levels, dirs)


# ---------------------------------------------------------------------------
# parameter and point types
# ---------------------------------------------------------------------------


class TestChannelParams:
    def test_snr_is_derived_exactly(self):
        p = ChannelParams(M=16, K=2, sigma2=0.25)
        assert p.snr == 1.0 / (2 * 0.25)

    def test_from_snr_db_round_trips(self):
        p = ChannelParams.from_snr_db(M=4, K=3, snr_db=7.5)
        assert p.snr_db == pytest.approx(7.5, abs=1e-12)
        assert p.M == 4 and p.K == 3

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(M=0, K=2, sigma2=1.0),
            dict(M=2, K=0, sigma2=1.0),
            dict(M=2, K=2, sigma2=0.0),
            dict(M=2, K=2, sigma2=-1.0),
            dict(M=2, K=2, sigma2=float("nan")),
        ],
    )
    def test_rejects_bad_arguments(self, kwargs):
        with pytest.raises(ValueError):
            ChannelParams(**kwargs)


class TestSignalPoint:
    def test_vector_reconstructs_the_block(self):
        v = unit([1.0, 1.0j])
        s = SignalPoint(1.3, v)
        np.testing.assert_allclose(s.vector(), 1.3 * v, rtol=0, atol=0)

    def test_zero_amplitude_point_is_allowed(self):
        s = SignalPoint(0.0, canonical_direction(3))
        assert np.all(s.vector() == 0)

    def test_direction_must_be_unit_norm(self):
        with pytest.raises(ValueError):
            SignalPoint(1.0, [0.5, 0.0])

    def test_direction_is_frozen(self):
        s = SignalPoint(1.0, canonical_direction(2))
        with pytest.raises(ValueError):
            s.direction[0] = 0.0


class TestUnitarySet:
    def test_cardinality_must_be_a_power_of_two(self):
        vecs = np.array([unit([1, 0]), unit([0, 1]), unit([1, 1])])
        with pytest.raises(ValueError):
            UnitarySet(vecs)

    def test_min_sq_dist_orthonormal_pair(self):
        assert UnitarySet(np.eye(2, dtype=complex)).min_sq_dist == 1.0

    def test_min_sq_dist_singleton_is_infinite(self):
        assert UnitarySet([canonical_direction(4)]).min_sq_dist == math.inf

    def test_duplicated_vector_gives_zero(self):
        v = np.array([0.6, 0.8j])  # exactly unit norm in floats
        assert UnitarySet([v, v]).min_sq_dist == 0.0

    def test_rejects_non_unit_rows(self):
        with pytest.raises(ValueError):
            UnitarySet([[1.0, 0.0], [0.0, 0.5]])

    def test_bits(self):
        assert UnitarySet(np.eye(4, dtype=complex)).bits == 2


class TestLevelSet:
    def test_power_constraint_enforced(self):
        with pytest.raises(ValueError):
            LevelSet([1.0, 2.0], sigma2_design=0.1)

    def test_strictly_increasing_enforced(self):
        a = math.sqrt(1.0)
        with pytest.raises(ValueError):
            LevelSet([a, a], sigma2_design=0.1)

    def test_geometric_chain_enforced_when_ratio_given(self):
        # amplitudes satisfy the power constraint but not the claimed chain
        with pytest.raises(ValueError):
            LevelSet(
                [math.sqrt(0.5), math.sqrt(1.5)], sigma2_design=0.1, ratio=9.0
            )

    def test_valid_chain_accepted(self):
        s2 = 0.25
        r = 2.0
        a0sq = 2 * (1 + s2) / (1 + r) - s2
        amps = np.sqrt([a0sq, (s2 + a0sq) * r - s2])
        ls = LevelSet(amps, sigma2_design=s2, ratio=r)
        assert ls.size == 2 and ls.bits == 1


class TestMultiLevelConstellation:
    def test_index_map_is_a_bijection(self, small_constellation):
        c = small_constellation
        seen = set()
        for idx in range(c.size):
            p = c.point(idx)
            n, j = divmod(idx, c.directions.size)
            assert p.amplitude == c.levels.amplitudes[n]
            np.testing.assert_array_equal(p.direction, c.directions.vectors[j])
            assert c.index_of(n, j) == idx
            seen.add(idx)
        assert len(seen) == c.size == 4

    def test_point_vectors_matches_point(self, small_constellation):
        c = small_constellation
        V = c.point_vectors()
        for idx in range(c.size):
            np.testing.assert_allclose(V[idx], c.point(idx).vector(), atol=0)

    def test_mean_energy_is_one(self, small_constellation):
        V = small_constellation.point_vectors()
        energy = np.mean(np.sum(np.abs(V) ** 2, axis=1))
        assert energy == pytest.approx(1.0, abs=1e-9)

    def test_zero_level_needs_a_single_direction(self):
        levels = LevelSet([0.0, math.sqrt(2.0)], sigma2_design=1.0, ratio=3.0)
        with pytest.raises(ValueError):
            MultiLevelConstellation(levels, UnitarySet(np.eye(2, dtype=complex)))
        # with one direction the on-off constellation is fine
        c = MultiLevelConstellation(levels, UnitarySet([canonical_direction(2)]))
        assert c.size == 2


# ---------------------------------------------------------------------------
# KL distances
# ---------------------------------------------------------------------------


class TestKlFull:
    def test_identical_points_give_zero(self, rng):
        s = random_point(rng, 3, amp_low=0.5)
        assert kl_full(s, s, 0.7) == 0.0

    def test_same_direction_energy_pair(self):
        # ||s_i||^2 = 1 against ||s_k||^2 = 3 at sigma2 = 1: pure energy term
        v = canonical_direction(2)
        d = kl_full(SignalPoint(1.0, v), SignalPoint(math.sqrt(3.0), v), 1.0)
        assert d == pytest.approx(D2_HALF, abs=1e-15)

    def test_orthogonal_unit_energy_pair(self):
        e0, e1 = np.eye(2, dtype=complex)
        d = kl_full(SignalPoint(1.0, e0), SignalPoint(1.0, e1), 1.0)
        assert d == pytest.approx(0.5, abs=1e-15)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            kl_full(
                SignalPoint(1.0, canonical_direction(2)),
                SignalPoint(1.0, canonical_direction(3)),
                1.0,
            )

    def test_nonnegative_on_bulk_random_pairs(self, rng):
        # 10^4 pairs via the vectorized pairwise matrix
        K = 3
        pts = np.array([random_point(rng, K).vector() for _ in range(101)])
        mat = pairwise_kl_matrix(pts, 0.2)
        assert mat.shape == (101, 101)
        assert np.all(mat >= 0.0)
        assert np.all(np.isfinite(mat))

    def test_pairwise_matrix_matches_scalar_evaluation(self, rng):
        pts = [random_point(rng, 2) for _ in range(5)]
        mat = pairwise_kl_matrix(np.array([p.vector() for p in pts]), 0.4)
        for i in range(5):
            for k in range(5):
                if i == k:
                    continue
                assert mat[i, k] == pytest.approx(
                    kl_full(pts[i], pts[k], 0.4), rel=1e-12, abs=1e-12
                )


class TestKlDecomposed:
    def test_same_direction_kills_d1(self, rng):
        v = unit(rng.standard_normal(2) + 1j * rng.standard_normal(2))
        d1, d2 = kl_decomposed(0.8, v, 1.2, v, 0.3)
        assert d1 == 0.0
        assert d2 > 0.0

    def test_equal_amplitudes_kill_d2(self, rng):
        v1 = unit(rng.standard_normal(2) + 1j * rng.standard_normal(2))
        v2 = unit(rng.standard_normal(2) + 1j * rng.standard_normal(2))
        d1, d2 = kl_decomposed(0.9, v1, 0.9, v2, 0.3)
        assert d2 == 0.0
        assert d1 > 0.0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_parts_sum_to_kl_full(self, seed):
        rng = np.random.default_rng(seed)
        K = int(rng.integers(1, 5))
        v_k = unit(rng.standard_normal(K) + 1j * rng.standard_normal(K))
        v_i = unit(rng.standard_normal(K) + 1j * rng.standard_normal(K))
        a_k, a_i = rng.uniform(0.05, 2.0, size=2)
        sigma2 = rng.uniform(0.01, 2.0)
        d1, d2 = kl_decomposed(a_k, v_k, a_i, v_i, sigma2)
        whole = kl_full(SignalPoint(a_i, v_i), SignalPoint(a_k, v_k), sigma2)
        assert d1 >= 0.0 and d2 >= 0.0
        assert d1 + d2 == pytest.approx(whole, abs=1e-10)


class TestLevelDistances:
    def test_intra_examples(self):
        assert intra_level_kl(1.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-15)
        assert intra_level_kl(math.sqrt(2.0), 1.0, 1.0) == pytest.approx(
            4.0 / 3.0, abs=1e-15
        )

    def test_intra_single_direction_is_infinite(self):
        assert intra_level_kl(0.7, math.inf, 0.1) == math.inf

    def test_inter_examples(self):
        assert inter_level_kl(1.0, 1.0, 0.37) == 0.0
        assert inter_level_kl(1.0, math.sqrt(3.0), 1.0) == pytest.approx(
            D2_HALF, abs=1e-15
        )

    def test_inter_asymmetry_low_to_high_is_smaller(self, rng):
        for _ in range(50):
            lo, hi = np.sort(rng.uniform(0.05, 2.0, size=2))
            if lo == hi:
                continue
            s2 = rng.uniform(0.01, 1.0)
            assert inter_level_kl(lo, hi, s2) < inter_level_kl(hi, lo, s2)

    def test_monotone_pieces_on_grids(self):
        # g grows with amplitude, h grows with ratio, and the asymmetry
        # inequality 1/x - ln(1/x) - 1 < x - ln x - 1 holds past x = 1
        alphas = np.linspace(0.01, 10.0, 400)
        g = [intra_level_kl(a, 1.0, 0.3) for a in alphas]
        assert np.all(np.diff(g) > 0)
        x = np.linspace(1.0001, 10.0, 400)
        fwd = 1.0 / x - np.log(1.0 / x) - 1.0
        bwd = x - np.log(x) - 1.0
        assert np.all(np.diff(fwd) > 0)
        assert np.all(fwd < bwd)


class TestMinKlBruteforce:
    def test_orthogonal_one_level_pair(self):
        c = MultiLevelConstellation(
            LevelSet([1.0], sigma2_design=1.0), UnitarySet(np.eye(2, dtype=complex))
        )
        value, pair = min_kl_bruteforce(c, 1.0)
        assert value == pytest.approx(0.5, abs=1e-15)
        assert pair == (0, 1)

    def test_duplicated_point_gives_zero(self):
        v = canonical_direction(2)
        c = MultiLevelConstellation(
            LevelSet([1.0], sigma2_design=1.0), UnitarySet([v, v])
        )
        value, pair = min_kl_bruteforce(c, 1.0)
        assert value == 0.0
        assert pair == (0, 1)

    def test_single_point_rejected(self):
        c = MultiLevelConstellation(
            LevelSet([1.0], sigma2_design=1.0), UnitarySet([canonical_direction(2)])
        )
        with pytest.raises(ValueError):
            min_kl_bruteforce(c, 1.0)

    def test_argmin_location_is_intra_base_or_consecutive_inter(
        self, library_k2_ls2
    ):
        # construction argument: the min sits inside the lowest level or
        # between neighbors, never across two or more level gaps
        from klconst import allocate_bits

        for sigma2 in (0.05, 0.3, 1.0):
            out = allocate_bits(2, sigma2, library_k2_ls2)
            c = out.constellation
            _, (i, k) = min_kl_bruteforce(c, sigma2)
            n_i, n_k = i // c.directions.size, k // c.directions.size
            assert (n_i == n_k == 0) or abs(n_i - n_k) == 1


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


class TestSerialization:
    def test_round_trip_is_bit_near(self, tmp_path, rng):
        s2, r = 0.31, 2.0
        a0_sq = 2 * (1 + s2) / (1 + r) - s2
        levels = LevelSet(
            np.sqrt([a0_sq, (s2 + a0_sq) * r - s2]), sigma2_design=s2, ratio=r
        )
        raw = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        dirs = UnitarySet(raw / np.linalg.norm(raw, axis=1, keepdims=True))
        c = MultiLevelConstellation(levels, dirs)
        path = tmp_path / "c.txt"
        save_constellation(c, path)
        back = load_constellation(path)
        assert back.K == 3
        np.testing.assert_allclose(
            back.levels.amplitudes, c.levels.amplitudes, rtol=0, atol=1e-15
        )
        np.testing.assert_allclose(
            back.directions.vectors, c.directions.vectors, rtol=0, atol=1e-15
        )
        assert back.sigma2_design == pytest.approx(0.31, abs=1e-15)

    def test_comments_and_blank_lines_are_skipped(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text(
            "# a constellation\n"
            "2 1 2 1.0\n"
            "\n"
            "1\n"
            "# identity directions\n"
            "1 0 0 0\n"
            "0 0 1 0\n"
        )
        c = load_constellation(path)
        assert c.size == 2

    def test_bad_header_names_the_line(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("2 1 oops 1.0\n1\n1 0 0 0\n")
        with pytest.raises(FileFormatError, match=r"c\.txt:1"):
            load_constellation(path)

    def test_off_norm_vector_names_its_line(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("2 1 2 1.0\n1\n1 0 0 0\n0.5 0 0 0\n")
        with pytest.raises(FileFormatError, match=r"c\.txt:4"):
            load_constellation(path)

    def test_wrong_component_count_rejected(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("2 1 1 1.0\n1\n1 0 0\n")
        with pytest.raises(FileFormatError, match=r"c\.txt:3"):
            load_constellation(path)

    def test_missing_lines_rejected(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("2 2 2 1.0\n1\n")
        with pytest.raises(FileFormatError):
            load_constellation(path)
