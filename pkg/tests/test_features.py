"""Feature construction: 3DJP, 3DRJDP, pair indexing, tensor i/o."""

import numpy as np
import pytest

from gaitnet.augment import mixup
from gaitnet.features import (
    NUM_PAIRS,
    PAIR_ANCHOR,
    PAIR_OTHER,
    PAIR_SWAP,
    build_jp,
    build_rjdp,
    dump_tensor,
    load_tensor,
    pair_from_index,
    pair_index,
    rjdp_from_positions,
    stack_features,
)
from gaitnet.skeleton import NUM_COORDS, NUM_JOINTS, ClassLabel

from conftest import make_sample


class TestPairIndexing:
    def test_count_is_380(self):
        assert NUM_PAIRS == NUM_JOINTS * (NUM_JOINTS - 1) == 380

    def test_bijection_over_ordered_pairs(self):
        seen = set()
        for i in range(1, NUM_JOINTS + 1):
            for j in range(1, NUM_JOINTS + 1):
                if i == j:
                    continue
                flat = pair_index(i, j)
                assert 0 <= flat < NUM_PAIRS
                assert pair_from_index(flat) == (i, j)
                seen.add(flat)
        assert len(seen) == NUM_PAIRS

    def test_anchor_major_order(self):
        # First 19 slots belong to anchor joint 1 in ascending other order.
        assert pair_index(1, 2) == 0
        assert pair_index(1, 20) == 18
        assert pair_index(2, 1) == 19

    def test_invalid_pairs_rejected(self):
        with pytest.raises(ValueError):
            pair_index(1, 1)
        with pytest.raises(ValueError):
            pair_index(0, 2)
        with pytest.raises(ValueError):
            pair_index(1, NUM_JOINTS + 1)

    def test_lookup_tables_match_scalar_function(self):
        for flat in range(NUM_PAIRS):
            i, j = pair_from_index(flat)
            assert PAIR_ANCHOR[flat] == i - 1
            assert PAIR_OTHER[flat] == j - 1
        # PAIR_SWAP maps (i, j) to (j, i).
        for flat in (0, 5, 100, 379):
            i, j = pair_from_index(flat)
            assert pair_from_index(int(PAIR_SWAP[flat])) == (j, i)


class TestRjdp:
    def test_shape_and_values(self, rng):
        s = make_sample(rng, frames=7)
        out = build_rjdp(s)
        assert out.shape == (7, NUM_PAIRS, NUM_COORDS)
        # Spot-check against the definition p_i - p_j.
        for flat in (0, 19, 211, 379):
            i, j = pair_from_index(flat)
            np.testing.assert_array_equal(
                out[:, flat], s.positions[:, i - 1] - s.positions[:, j - 1]
            )

    def test_antisymmetry_exact(self, rng):
        out = build_rjdp(make_sample(rng))
        np.testing.assert_array_equal(out, -out[:, PAIR_SWAP])

    def test_translation_invariance_exact_on_grid(self, rng):
        # On a dyadic grid the shifted sums are representable, so the
        # pairwise differences must agree bit for bit.
        s = make_sample(rng)
        s.positions[:] = np.floor(s.positions * 2**20) / 2**20
        shifted = make_sample(rng, sample_id="t")
        shifted.positions[:] = s.positions + np.array([1.5, -2.0, 0.25])
        np.testing.assert_array_equal(build_rjdp(shifted), build_rjdp(s))

    def test_translation_invariance_general_floats(self, rng):
        s = make_sample(rng)
        shifted = make_sample(rng, sample_id="t")
        shifted.positions[:] = s.positions + rng.normal(size=3)
        np.testing.assert_allclose(build_rjdp(shifted), build_rjdp(s), atol=1e-12)

    def test_linearity_mixup_commutation(self, rng):
        a = make_sample(rng, ClassLabel.HEALTHY, sample_id="a")
        b = make_sample(rng, ClassLabel.JOINT_PROBLEM, sample_id="b")
        lam = 0.9
        mixed_then_rjdp = build_rjdp(mixup(a, b, lam))
        rjdp_then_mixed = lam * build_rjdp(a) + (1 - lam) * build_rjdp(b)
        np.testing.assert_allclose(mixed_then_rjdp, rjdp_then_mixed, atol=1e-12)

    def test_result_is_contiguous(self, rng):
        out = rjdp_from_positions(rng.normal(size=(4, NUM_JOINTS, 3)))
        assert out.flags["C_CONTIGUOUS"]


def test_build_jp_is_positions_as_float64(rng):
    s = make_sample(rng)
    out = build_jp(s)
    assert out.dtype == np.float64
    np.testing.assert_array_equal(out, s.positions)


def test_stack_features(rng):
    samples = [make_sample(rng, sample_id=f"s{k}", frames=5) for k in range(3)]
    jp = stack_features(samples, build_jp)
    assert jp.shape == (3, 5, NUM_JOINTS, NUM_COORDS)
    rjdp = stack_features(samples, build_rjdp)
    assert rjdp.shape == (3, 5, NUM_PAIRS, NUM_COORDS)


class TestTensorIO:
    def test_round_trip(self, tmp_path, rng):
        data = rng.normal(size=(4, 6, 3))
        path = str(tmp_path / "t.bin")
        dump_tensor(path, data, kind="JP")
        kind, back = load_tensor(path)
        assert kind == "JP"
        np.testing.assert_array_equal(back, data)

    def test_truncated_payload_rejected(self, tmp_path, rng):
        data = rng.normal(size=(2, 3, 3))
        path = str(tmp_path / "t.bin")
        dump_tensor(path, data, kind="RJDP")
        raw = open(path, "rb").read()
        open(path, "wb").write(raw[:-8])
        with pytest.raises(ValueError):
            load_tensor(path)
