import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import small_random_net
from segsi.activations import relu
from segsi.errors import ValidationError
from segsi.network import (
    Activation,
    Conv2D,
    Dense,
    MaxPool2x2,
    NetworkSpec,
    OutputSign,
    SegmentationMask,
    UpsampleNearest2x,
    forward,
    forward_line,
)
from segsi.netgen import make_cnn


def test_forward_identity(identity_net):
    mask = forward(identity_net, np.array([1.0, -1.0, 2.0, -2.0]))
    assert mask.labels.tolist() == [1, 0, 1, 0]


def test_zero_network_labels_all_object():
    net = NetworkSpec((Dense(np.zeros((4, 4)), np.zeros(4)), OutputSign()), 2, 2, 1)
    mask = forward(net, np.array([3.0, -1.0, 0.5, 2.0]))
    assert mask.labels.tolist() == [1, 1, 1, 1]  # tie at 0 goes to object


def test_output_sign_must_be_last():
    with pytest.raises(ValidationError):
        NetworkSpec((OutputSign(), Dense(np.eye(4), np.zeros(4))), 2, 2, 1)


def test_shape_mismatch_names_layer():
    k1 = np.zeros((3, 3, 1, 4))
    k2 = np.zeros((3, 3, 2, 1))  # wants 2 channels, gets 4
    with pytest.raises(ValidationError, match="layer 1"):
        NetworkSpec(
            (Conv2D(k1, np.zeros(4)), Conv2D(k2, np.zeros(1)), OutputSign()), 4, 4, 1
        )


def test_label_count_must_match_pixels():
    with pytest.raises(ValidationError):
        NetworkSpec((Dense(np.zeros((3, 4)), np.zeros(3)), OutputSign()), 2, 2, 1)


def test_nonfinite_weights_rejected():
    w = np.eye(4)
    w[0, 0] = np.inf
    with pytest.raises(ValidationError):
        NetworkSpec((Dense(w, np.zeros(4)), OutputSign()), 2, 2, 1)


def test_pooling_needs_even_sides():
    with pytest.raises(ValidationError):
        NetworkSpec((MaxPool2x2(), OutputSign()), 3, 3, 1)


def test_mask_equality_and_sets():
    m1 = SegmentationMask(np.array([1, 0, 1, 0]))
    m2 = SegmentationMask(np.array([1, 0, 1, 0]))
    m3 = SegmentationMask(np.array([1, 1, 1, 0]))
    assert m1 == m2 and m1 != m3
    assert m1.object_pixels.tolist() == [0, 2]
    assert m1.background_pixels.tolist() == [1, 3]
    assert not m1.is_trivial
    assert SegmentationMask(np.ones(4)).is_trivial


# ---------------------------------------------------------------------------
# forward_line constraint semantics


def test_relu_unit_constraint(relu_net):
    # pre-activation of unit 0 is 1 - z: active at z=0, flips at z=1
    a = np.array([1.0, 1.0, 1.0, 1.0])
    b = np.array([-1.0, 0.0, 0.0, 0.0])
    _, cons = forward_line(relu_net, a, b, 0.0)
    unit0 = [c for c in cons if c.layer == 1 and c.unit == 0]
    assert len(unit0) == 1
    c = unit0[0]
    assert c.slope == pytest.approx(1.0)
    assert c.intercept == pytest.approx(-1.0)  # z <= 1


def test_maxpool_window_constraint():
    net = NetworkSpec((MaxPool2x2(), UpsampleNearest2x(), OutputSign()), 2, 2, 1)
    # window values: u1 = 2 - z, u2 = z, u3 = u4 = -5
    a = np.array([2.0, 0.0, -5.0, -5.0])
    b = np.array([-1.0, 1.0, 0.0, 0.0])
    _, cons = forward_line(net, a, b, 0.0)
    pool = sorted((c for c in cons if c.layer == 0), key=lambda c: c.slope)
    assert len(pool) == 3  # three losers against the winner u1
    # u3, u4 vs u1: (-5) - (2 - z) <= 0
    assert [c.slope for c in pool[:2]] == pytest.approx([1.0, 1.0])
    assert [c.intercept for c in pool[:2]] == pytest.approx([-7.0, -7.0])
    # runner-up u2 vs u1: z - (2 - z) <= 0, flips at z = 1
    assert pool[2].slope == pytest.approx(2.0)
    assert pool[2].intercept == pytest.approx(-2.0)


def test_output_sign_constraints(identity_net):
    a = np.array([1.0, -1.0, 2.0, -2.0])
    b = np.zeros(4)
    mask, cons = forward_line(identity_net, a, b, 0.0)
    assert mask.labels.tolist() == [1, 0, 1, 0]
    sign_cons = [c for c in cons if c.layer == 1]
    assert len(sign_cons) == 4
    # object pixels: -u <= 0, background pixels: u <= 0
    assert [c.intercept for c in sign_cons] == pytest.approx([-1.0, -1.0, -2.0, -2.0])


@pytest.mark.parametrize("seed", range(6))
def test_line_matches_plain_forward(seed):
    net = small_random_net(seed)
    rng = np.random.default_rng(100 + seed)
    a = rng.standard_normal(16)
    b = rng.standard_normal(16)
    for z in (-1.3, 0.0, 0.37, 2.1):
        mask_line, cons = forward_line(net, a, b, z)
        assert mask_line == forward(net, a + b * z)
        # constraint faithfulness at the query point
        if len(cons):
            assert float(np.max(cons.intercepts + cons.slopes * z)) <= 1e-10


def test_section4_architecture_matches_plain_forward():
    net = make_cnn(64)
    rng = np.random.default_rng(3)
    a = rng.standard_normal(64)
    b = rng.standard_normal(64)
    mask_line, _ = forward_line(net, a, b, 0.37)
    assert mask_line == forward(net, a + 0.37 * b)


def test_region_constancy_between_roots():
    net = small_random_net(3)
    rng = np.random.default_rng(42)
    a = rng.standard_normal(16)
    b = rng.standard_normal(16)
    z = 0.1
    mask, cons = forward_line(net, a, b, z)
    pos = cons.slopes > 1e-12
    roots = -cons.intercepts[pos] / cons.slopes[pos]
    ahead = roots[roots > z + 1e-12]
    assert ahead.size > 0
    z_next = float(ahead.min())
    for frac in (0.25, 0.5, 0.9):
        z_mid = z + frac * (z_next - z)
        mask2, cons2 = forward_line(net, a, b, z_mid)
        assert mask2 == mask
        assert cons2.same_signature(cons)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(-3, 3))
def test_constraints_satisfied_everywhere(seed, z):
    net = small_random_net(seed % 7)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(16)
    b = rng.standard_normal(16)
    _, cons = forward_line(net, a, b, z)
    assert float(np.max(cons.intercepts + cons.slopes * z)) <= 1e-10


def test_signature_hash_distinguishes_pieces():
    net = small_random_net(1)
    rng = np.random.default_rng(9)
    a = rng.standard_normal(16)
    b = rng.standard_normal(16)
    _, c1 = forward_line(net, a, b, -2.0)
    _, c2 = forward_line(net, a, b, 2.0)
    if not c1.same_signature(c2):
        assert c1.signature_hash() != c2.signature_hash()
    _, c3 = forward_line(net, a, b, -2.0)
    assert c1.signature_hash() == c3.signature_hash()
