import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebm_anomaly.errors import (
    AsymmetricLateral,
    CoordinateOutOfRange,
    LengthMismatch,
    NonfiniteEntry,
    NonpositiveTemperature,
    NonzeroLateralDiagonal,
    ShapeMismatch,
)
from ebm_anomaly.types import (
    BinaryState,
    BmTopology,
    Dataset,
    Laterals,
    ModelParams,
    SampleBatch,
    decode_point,
    encode_point,
    validate_params,
)


def semi(n=2, m=0):
    return BmTopology(n, m, Laterals.VISIBLE_VISIBLE)


class TestTopology:
    def test_rbm_edges_are_bipartite(self):
        top = BmTopology(3, 2)
        assert top.edges() == [(0, 3), (0, 4), (1, 3), (1, 4), (2, 3), (2, 4)]

    def test_semi_restricted_adds_every_visible_pair_and_no_hidden_pair(self):
        top = semi(3, 2)
        edges = set(top.edges())
        assert {(0, 1), (0, 2), (1, 2)} <= edges
        assert (3, 4) not in edges
        assert len(edges) == 3 + 6

    def test_edge_mask_matches_edges(self):
        top = semi(3, 2)
        mask = top.edge_mask()
        assert np.array_equal(mask, mask.T)
        assert {(i, j) for i, j in zip(*np.nonzero(np.triu(mask)))} == set(top.edges())

    @pytest.mark.parametrize("n,m", [(0, 1), (1, -1)])
    def test_bad_sizes(self, n, m):
        with pytest.raises(ShapeMismatch):
            BmTopology(n, m)


class TestValidateParams:
    def test_default_rbm_is_valid(self):
        p = ModelParams.zeros(BmTopology(4, 3))
        assert p.w_vv is None
        validate_params(p)

    def test_asymmetric_lateral(self):
        w = np.array([[0.0, 0.3], [0.2, 0.0]])
        with pytest.raises(AsymmetricLateral):
            ModelParams(semi(), np.zeros((2, 0)), np.zeros(2), np.zeros(0), w_vv=w)

    def test_nonzero_diagonal(self):
        w = np.array([[0.1, 0.3], [0.3, 0.0]])
        with pytest.raises(NonzeroLateralDiagonal):
            ModelParams(semi(), np.zeros((2, 0)), np.zeros(2), np.zeros(0), w_vv=w)

    @pytest.mark.parametrize("field", ["temperature", "effective_temperature"])
    @pytest.mark.parametrize("value", [0.0, -1.0])
    def test_nonpositive_temperature(self, field, value):
        with pytest.raises(NonpositiveTemperature):
            ModelParams(BmTopology(1, 1), np.zeros((1, 1)), np.zeros(1), np.zeros(1), **{field: value})

    def test_nonfinite(self):
        with pytest.raises(NonfiniteEntry):
            ModelParams(BmTopology(1, 1), [[np.nan]], np.zeros(1), np.zeros(1))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            ModelParams(BmTopology(2, 1), np.zeros((1, 2)), np.zeros(2), np.zeros(1))
        with pytest.raises(ShapeMismatch):
            ModelParams(BmTopology(2, 1), np.zeros((2, 1)), np.zeros(2), np.zeros(1), w_vv=np.zeros((2, 2)))
        with pytest.raises(ShapeMismatch):
            ModelParams(semi(2, 1), np.zeros((2, 1)), np.zeros(2), np.zeros(1))

    def test_shape_is_reported_before_later_invariants(self):
        with pytest.raises(ShapeMismatch):
            ModelParams(BmTopology(2, 1), np.zeros((1, 1)), np.zeros(2), np.zeros(1), temperature=0)

    def test_arrays_are_read_only(self):
        p = ModelParams.zeros(BmTopology(2, 2))
        with pytest.raises(ValueError):
            p.w_vh[0, 0] = 1.0


class TestEncoding:
    def test_zero(self):
        assert encode_point((0, 0, 0), 7).tolist() == [0] * 21

    def test_saturation(self):
        assert encode_point((127, 0, 0), 7).tolist() == [1] * 7 + [0] * 14

    def test_msb_first(self):
        expected = [0, 0, 0, 0, 0, 0, 1] + [0, 0, 0, 0, 0, 1, 0] + [0, 0, 0, 0, 0, 1, 1]
        assert encode_point((1, 2, 3), 7).tolist() == expected

    def test_out_of_range(self):
        with pytest.raises(CoordinateOutOfRange):
            encode_point((128, 0, 0), 7)
        with pytest.raises(CoordinateOutOfRange):
            encode_point((-1,), 7)

    def test_decode(self):
        assert decode_point([0] * 21, 3, 7).tolist() == [0, 0, 0]
        assert decode_point(encode_point((64, 1, 127), 7), 3, 7).tolist() == [64, 1, 127]

    def test_decode_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            decode_point([0] * 20, 3, 7)

    def test_round_trip_1000_random_points(self, rng):
        pts = rng.integers(0, 128, size=(1000, 3))
        for x in pts:
            assert np.array_equal(decode_point(encode_point(x, 7), 3, 7), x)

    @given(st.integers(1, 10).flatmap(
        lambda b: st.tuples(st.just(b), st.lists(st.integers(0, (1 << b) - 1), min_size=1, max_size=5))
    ))
    def test_round_trip_property(self, case):
        b, pt = case
        assert decode_point(encode_point(pt, b), len(pt), b).tolist() == pt

    def test_dataset_encode_matches_pointwise(self, rng):
        pts = rng.integers(0, 128, size=(50, 3))
        enc = Dataset(pts).encode()
        assert enc.width == 21
        for row, pt in zip(enc.rows, pts):
            assert np.array_equal(row, encode_point(pt, 7))
        assert np.array_equal(enc.decode().points, pts)


class TestDataset:
    def test_labels_length_checked(self):
        with pytest.raises(LengthMismatch):
            Dataset([[1, 2, 3]], labels=[True, False])

    def test_coordinates_checked(self):
        with pytest.raises(CoordinateOutOfRange):
            Dataset([[1, 2, 200]])


class TestBinaryState:
    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            BinaryState([0, 2], [1])

    def test_joint(self):
        assert BinaryState([1, 0], [1]).joint().tolist() == [1, 0, 1]


class TestSampleBatch:
    def test_moments_are_empirical_averages(self):
        states = np.array([[1, 0, 1], [1, 1, 0], [0, 1, 1], [1, 1, 1]])
        sb = SampleBatch.from_states(states, num_visible=2)
        assert sb.mean_units.tolist() == [0.75, 0.75, 0.75]
        assert sb.mean_pairs[0, 1] == 0.5
        assert sb.mean_pairs[0, 2] == 0.5
        assert sb.mean_pairs[1, 2] == 0.5
        assert np.array_equal(np.diag(sb.mean_pairs), sb.mean_units)
        assert [s.visible.tolist() for s in sb.as_states()] == [[1, 0], [1, 1], [0, 1], [1, 1]]

    @settings(max_examples=50)
    @given(st.lists(st.lists(st.integers(0, 1), min_size=4, max_size=4), min_size=1, max_size=30))
    def test_frechet_bounds(self, rows):
        sb = SampleBatch.from_states(np.array(rows), num_visible=2)
        u = sb.mean_units
        lo = np.maximum(0.0, u[:, None] + u[None, :] - 1.0)
        hi = np.minimum(u[:, None], u[None, :])
        assert np.all(sb.mean_pairs >= lo - 1e-12)
        assert np.all(sb.mean_pairs <= hi + 1e-12)
