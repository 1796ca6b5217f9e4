"""Effective single-mode channels: blocks, composition, invariants, dilation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rqss.channel import (
    PerturbativeChannel,
    apply_channel,
    channel_invariants,
    complex_pair_block,
    compose,
    compose_sequence,
    cp_residual,
    free_channel,
    nbar_from_sums,
    noise_block_from_sums,
    second_order_moments,
    segment_channel,
    t2_from_sums,
    thermal_lossy_forms,
    thermal_lossy_via_dilation,
)
from rqss.gaussian import coherent, rotation_block, squeeze, tensor, vacuum
from rqss.modes import mode_sums, segment_bogoliubov


def test_complex_pair_block_rotation():
    for theta in (0.0, 0.4, 2.0, -1.1):
        block = complex_pair_block(np.exp(1j * theta), 0.0)
        assert np.allclose(block, rotation_block(theta), atol=1e-15)


def test_complex_pair_block_squeeze():
    r = 0.6
    block = complex_pair_block(np.cosh(r), np.sinh(r))
    assert np.allclose(block, squeeze(r).matrix, atol=1e-14)


def test_free_channel():
    ch = free_channel(0.7)
    assert np.allclose(ch.m0, rotation_block(0.7), atol=1e-15)
    assert np.max(np.abs(ch.m2)) == 0.0
    assert np.max(np.abs(ch.n2)) == 0.0


def test_segment_channel_zeroth_order(fit20):
    u = 0.3
    ch = segment_channel(segment_bogoliubov(fit20, u), 2)
    assert np.allclose(ch.m0, rotation_block(2.0 * np.pi * 2.0 * u), atol=1e-13)


def test_identity_and_evaluate():
    ident = PerturbativeChannel.identity()
    m, n = ident.evaluate(0.02)
    assert np.array_equal(m, np.eye(2))
    assert np.array_equal(n, np.zeros((2, 2)))


def test_compose_matches_sequential_application(fit20):
    bogo = segment_bogoliubov(fit20, 0.3)
    seg = segment_channel(bogo, 1)
    leg = free_channel(1.1)
    combined = compose(leg, seg)
    h = 1e-3
    state = coherent(1.0, -0.5)
    m1, n1 = seg.evaluate(h)
    m2, n2 = leg.evaluate(h)
    stepwise = apply_channel(m2, n2, apply_channel(m1, n1, state, 0), 0)
    mc, nc = combined.evaluate(h)
    direct = apply_channel(mc, nc, state, 0)
    # Agreement to the h^4 terms the truncation drops.
    assert np.max(np.abs(direct.d - stepwise.d)) < 1e-10
    assert np.max(np.abs(direct.sigma - stepwise.sigma)) < 1e-10


def test_compose_associativity(fit20):
    bogo = segment_bogoliubov(fit20, 0.2)
    a = segment_channel(bogo, 1)
    b = free_channel(0.9)
    c = segment_channel(segment_bogoliubov(fit20, 0.4), 1)
    left = compose(a, compose(b, c))
    right = compose(compose(a, b), c)
    assert np.allclose(left.m0, right.m0, atol=1e-14)
    assert np.allclose(left.m2, right.m2, atol=1e-13)
    assert np.allclose(left.n2, right.n2, atol=1e-13)


def test_compose_sequence_singleton(fit20):
    ch = segment_channel(segment_bogoliubov(fit20, 0.3), 1)
    again = compose_sequence([ch])
    assert np.array_equal(again.m0, ch.m0)
    assert np.array_equal(again.m2, ch.m2)
    assert np.array_equal(again.n2, ch.n2)


def test_invariants_dual_route(fit20):
    u, k = 0.3, 1
    bogo = segment_bogoliubov(fit20, u)
    ch = segment_channel(bogo, k)
    sums = mode_sums(bogo, k)
    inv = channel_invariants(ch, k=k, u=u)
    # The two routes are tied by the mode-map identity, so they agree to the
    # cutoff's truncation tail rather than to machine precision.
    assert inv.t2 == pytest.approx(t2_from_sums(sums), rel=1e-5)
    assert inv.nbar == pytest.approx(nbar_from_sums(sums), abs=1e-6)
    assert np.allclose(ch.n2, noise_block_from_sums(sums), atol=1e-13)
    assert inv.rank == 2
    assert not inv.degenerate


def test_noise_trace_identity(fit20):
    bogo = segment_bogoliubov(fit20, 0.4)
    for k in (1, 2, 3):
        sums = mode_sums(bogo, k)
        ch = segment_channel(bogo, k)
        assert np.trace(ch.n2) == pytest.approx(4.0 * (sums.f_alpha + sums.f_beta), rel=1e-12)


def test_degenerate_at_integer_phase(fit20):
    ch = segment_channel(segment_bogoliubov(fit20, 1.0), 1)
    inv = channel_invariants(ch, k=1, u=1.0)
    assert inv.degenerate
    assert inv.t2 == 0.0
    assert np.isnan(inv.nbar)
    assert inv.rank == 0


def test_transmissivity_below_one(fit20):
    ch = segment_channel(segment_bogoliubov(fit20, 0.3), 1)
    inv = channel_invariants(ch, k=1, u=0.3)
    t = inv.transmissivity(0.05)
    assert 0.0 < t < 1.0


def test_thermal_lossy_dilation_oracle():
    # Beam-splitter dilation to a thermal environment reproduces the canonical
    # matrices; independent of the closed forms it is checked against.
    for t_val in (0.2, 0.6, 0.95):
        for nbar in (0.0, 0.3, 2.0):
            mc, nc = thermal_lossy_forms(t_val, nbar)
            md, nd = thermal_lossy_via_dilation(t_val, nbar)
            assert np.max(np.abs(mc - md)) < 1e-12
            assert np.max(np.abs(nc - nd)) < 1e-12
            assert cp_residual(mc, nc) > -1e-12


def test_cp_residual_flags_unphysical():
    m = np.sqrt(0.5) * np.eye(2)
    assert cp_residual(m, np.zeros((2, 2))) < -0.1


def test_apply_channel_embedding():
    state = tensor(coherent(1.0, 0.0), coherent(0.0, 2.0))
    out = apply_channel(rotation_block(np.pi), 0.1 * np.eye(2), state, mode=1)
    assert np.allclose(out.d, [1.0, 0.0, 0.0, -2.0], atol=1e-14)
    assert out.sigma[2, 2] == pytest.approx(1.1, rel=1e-14)
    assert out.sigma[0, 0] == pytest.approx(1.0, rel=1e-14)


def test_second_order_moments_identity_channel():
    d0, d2, s0, s2 = second_order_moments(PerturbativeChannel.identity(), coherent(1.0, 2.0))
    assert np.allclose(d0, [1.0, 2.0])
    assert np.max(np.abs(d2)) == 0.0
    assert np.allclose(s0, np.eye(2))
    assert np.max(np.abs(s2)) == 0.0


def test_second_order_moments_segment(fit20):
    ch = segment_channel(segment_bogoliubov(fit20, 0.3), 1)
    state = coherent(2.0, 0.0)
    d0, d2, s0, s2 = second_order_moments(ch, state)
    h = 1e-3
    m, n = ch.evaluate(h)
    full = apply_channel(m, n, state, 0)
    assert np.max(np.abs(full.d - (d0 + d2 * h * h))) < 1e-11
    assert np.max(np.abs(full.sigma - (s0 + s2 * h * h))) < 1e-11


@settings(deadline=None, max_examples=25)
@given(u=st.floats(0.05, 0.95), k=st.integers(1, 3))
def test_segment_channel_cp_on_grid(u, k, fit20):
    ch = segment_channel(segment_bogoliubov(fit20, u), k)
    m, n = ch.evaluate(0.02)
    assert cp_residual(m, n) > -1e-10
