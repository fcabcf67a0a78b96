import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dotsaa.pals import (PalsModel, csrbf, csrbf_deriv, delta, dmu_dp, dphi_dp, heaviside,
                         mu_from_pals, pack, pals_eval)

# psi(sqrt(0.37)) evaluated independently in exact rational-plus-sqrt form
PHI_EXAMPLE = 0.08083634857981312


def test_csrbf_closed_forms():
    assert csrbf(0.0) == 1.0 and csrbf_deriv(0.0) == 0.0
    assert csrbf(1.0) == 0.0 and csrbf(2.0) == 0.0
    assert csrbf(0.5) == pytest.approx(0.1875, abs=1e-15)
    assert csrbf_deriv(0.5) == pytest.approx(-1.25, abs=1e-15)
    assert csrbf_deriv(1.5) == 0.0


def test_csrbf_rejects_negative():
    with pytest.raises(ValueError):
        csrbf(-0.1)
    with pytest.raises(ValueError):
        csrbf_deriv(np.array([0.2, -1.0]))


def test_csrbf_derivative_matches_fd():
    r = np.linspace(0.01, 1.2, 57)
    h = 1e-6
    fd = (csrbf(r + h) - csrbf(r - h)) / (2 * h)
    np.testing.assert_allclose(csrbf_deriv(r), fd, atol=1e-8)


def test_heaviside_values():
    assert heaviside(0.0, 0.3) == 0.5
    assert heaviside(0.1, 0.1) == pytest.approx(0.75, abs=1e-15)
    assert heaviside(1e12, 0.1) == pytest.approx(1.0)
    assert heaviside(-1e12, 0.1) == pytest.approx(0.0, abs=1e-12)
    assert delta(0.0, 0.1) == pytest.approx(1 / (0.1 * np.pi))


@pytest.mark.parametrize("kind", ["atan", "sine"])
def test_delta_is_derivative(kind):
    r = np.linspace(-0.3, 0.3, 41) + 1e-3
    h = 1e-7
    fd = (heaviside(r + h, 0.1, kind) - heaviside(r - h, 0.1, kind)) / (2 * h)
    np.testing.assert_allclose(delta(r, 0.1, kind), fd, atol=1e-6)


def test_sine_heaviside_is_exact_outside_band():
    assert heaviside(-0.2, 0.1, "sine") == 0.0
    assert heaviside(0.2, 0.1, "sine") == 1.0
    assert heaviside(0.0, 0.1, "sine") == 0.5


def test_heaviside_errors():
    with pytest.raises(ValueError):
        heaviside(0.0, 0.0)
    with pytest.raises(ValueError):
        delta(0.0, -1.0)
    with pytest.raises(ValueError):
        heaviside(0.0, 0.1, "step")


def test_model_validation():
    with pytest.raises(ValueError):
        PalsModel(0)
    with pytest.raises(ValueError):
        PalsModel(2, gamma=0.0)
    with pytest.raises(ValueError):
        PalsModel(2, mu_in=0.01, mu_out=0.2)
    assert PalsModel(25).n_p == 100


def test_zero_expansion_gives_zero():
    m = PalsModel(3)
    p = pack(np.zeros(3), 2.0, np.zeros((3, 2)))
    pts = np.random.default_rng(0).uniform(-1, 1, (30, 2))
    assert np.all(pals_eval(m, p, pts) == 0.0)


def test_value_at_center_is_psi_gamma():
    m = PalsModel(1, gamma=0.1)
    p = pack([0.7], [3.0], [[0.2, 0.4]])
    assert pals_eval(m, p, [[0.2, 0.4]])[0] == pytest.approx(0.7 * csrbf(0.1))


def test_single_basis_example():
    m = PalsModel(1, gamma=0.1)
    p = pack([1.0], [2.0], [[0.0, 0.0]])
    assert pals_eval(m, p, [[0.3, 0.0]])[0] == pytest.approx(PHI_EXAMPLE, rel=1e-12)


def test_negative_dilation_acts_as_absolute_value():
    m = PalsModel(1)
    pts = np.random.default_rng(1).uniform(-1, 1, (20, 2))
    a = pals_eval(m, pack([1.0], [2.5], [[0.1, 0.2]]), pts)
    b = pals_eval(m, pack([1.0], [-2.5], [[0.1, 0.2]]), pts)
    np.testing.assert_array_equal(a, b)


def test_mu_limits_and_midpoint():
    m = PalsModel(1, tau=0.15, mu_in=0.2, mu_out=0.01)
    # alpha chosen so phi at the center equals tau exactly
    alpha = 0.15 / csrbf(m.gamma)
    mid = mu_from_pals(m, pack([alpha], [3.0], [[0, 0.5]]), [[0, 0.5]])[0]
    assert mid == pytest.approx(0.105)
    high = mu_from_pals(m, pack([1e9], [3.0], [[0, 0.5]]), [[0, 0.5]])[0]
    assert high == pytest.approx(0.2, rel=1e-9)


def test_mu_affine_example():
    m = PalsModel(1, mu_in=0.2, mu_out=0.01, eps=0.1, tau=0.0)
    # phi - tau = eps gives H = 0.75
    alpha = 0.1 / csrbf(m.gamma)
    mu = mu_from_pals(m, pack([alpha], [3.0], [[0, 0]]), [[0, 0]])[0]
    assert mu == pytest.approx(0.1525, rel=1e-12)


def _fd_dmu(model, p, pts, step=1e-6):
    out = np.empty((len(pts), p.size))
    for k in range(p.size):
        h = step * max(1.0, abs(p[k]))
        e = np.zeros_like(p)
        e[k] = h
        out[:, k] = (mu_from_pals(model, p + e, pts) - mu_from_pals(model, p - e, pts)) / (2 * h)
    return out


def _mp_mu(model, p, x):
    """Independent 50-digit evaluation of the absorption at one point."""
    q = [mpmath.mpf(v) for v in p]
    phi = mpmath.mpf(0)
    for j in range(model.m0):
        a, b, cx, cy = q[4 * j:4 * j + 4]
        r = mpmath.sqrt(b**2 * ((x[0] - cx) ** 2 + (x[1] - cy) ** 2) + mpmath.mpf(model.gamma) ** 2)
        if r < 1:
            phi += a * (1 - r) ** 4 * (4 * r + 1)
    H = mpmath.mpf(1) / 2 + mpmath.atan((phi - mpmath.mpf(model.tau)) / mpmath.mpf(model.eps)) / mpmath.pi
    return model.mu_out + (mpmath.mpf(model.mu_in) - model.mu_out) * H


def _mp_dmu(model, p, pts):
    out = np.empty((len(pts), p.size))
    with mpmath.workdps(50):
        for k in range(p.size):
            h = mpmath.mpf(10) ** -15 * max(1, abs(p[k]))
            lo, hi = list(p), list(p)
            lo[k] = mpmath.mpf(p[k]) - h
            hi[k] = mpmath.mpf(p[k]) + h
            for i, x in enumerate(pts):
                xm = [mpmath.mpf(v) for v in x]
                out[i, k] = float((_mp_mu(model, hi, xm) - _mp_mu(model, lo, xm)) / (2 * h))
    return out


def _draw(draw):
    r = np.random.default_rng(100 + draw)
    m = PalsModel(3, eps=0.1)
    p = pack(r.uniform(0.3, 1.0, 3) * r.choice([-1, 1], 3), r.uniform(1.5, 4, 3),
             r.uniform([-0.5, 0.2], [0.5, 0.8], (3, 2)))
    return m, p, r.uniform([-1, 0], [1, 1], (200, 2))


@pytest.mark.parametrize("draw", range(10))
def test_dmu_dp_matches_central_differences(draw):
    m, p, pts = _draw(draw)
    an = dmu_dp(m, p, pts)
    fd = _fd_dmu(m, p, pts)
    # rounding in float64 differences at this step is about 1e-11
    big = np.abs(an) > 1e-6
    rel = np.abs(an[big] - fd[big]) / np.abs(an[big])
    assert np.max(rel) <= 1e-5
    assert np.all(np.abs(fd[~big]) < 2e-6)


@pytest.mark.parametrize("draw", range(10))
def test_dmu_dp_matches_extended_precision_differences(draw):
    m, p, pts = _draw(draw)
    pts = pts[:60]
    an = dmu_dp(m, p, pts)
    fd = _mp_dmu(m, p, pts)
    big = np.abs(an) > 1e-12
    rel = np.abs(an[big] - fd[big]) / np.abs(an[big])
    assert np.max(rel) <= 1e-5
    assert np.all(fd[an == 0] == 0)


def test_point_outside_supports_has_zero_row():
    m = PalsModel(2)
    p = pack([1.0, -0.5], [5.0, 5.0], [[0.0, 0.5], [0.3, 0.5]])
    assert np.all(dmu_dp(m, p, [[-0.9, 0.05]]) == 0.0)
    assert np.all(dphi_dp(m, p, [[-0.9, 0.05]]) == 0.0)


def test_alpha_column_at_center():
    m = PalsModel(2, eps=0.1)
    p = pack([0.8, 0.4], [3.0, 6.0], [[0.0, 0.5], [0.7, 0.2]])
    x = np.array([[0.0, 0.5]])
    phi = pals_eval(m, p, x)[0]
    expected = (m.mu_in - m.mu_out) * delta(phi - m.tau, m.eps) * csrbf(m.gamma)
    assert dmu_dp(m, p, x)[0, 0] == pytest.approx(expected, rel=1e-14)


@given(st.floats(2.0, 6.0), st.floats(-0.2, 0.2), st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_far_basis_changes_nothing(beta, shift, seed):
    r = np.random.default_rng(seed)
    m1, m2 = PalsModel(1), PalsModel(2)
    base = pack([0.9], [beta], [[shift, 0.5]])
    far = np.concatenate([base, pack([r.uniform(-2, 2)], [beta], [[5.0, 5.0]])])
    pts = r.uniform([-1, 0], [1, 1], (50, 2))
    np.testing.assert_array_equal(mu_from_pals(m1, base, pts), mu_from_pals(m2, far, pts))


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_mu_within_range(seed):
    r = np.random.default_rng(seed)
    m = PalsModel(4)
    p = pack(r.uniform(-2, 2, 4), r.uniform(1, 5, 4), r.uniform(-1, 1, (4, 2)))
    mu = mu_from_pals(m, p, r.uniform(-1, 1, (64, 2)))
    assert np.all(mu >= m.mu_out) and np.all(mu <= m.mu_in)


def test_split_shape_check():
    with pytest.raises(ValueError):
        PalsModel(2).split(np.zeros(7))
