from fractions import Fraction

import numpy as np
import pytest

from bellloc import dilation as D
from bellloc import states as S
from bellloc.tensor import OperatorOnProduct, min_eigenvalue, partial_trace, site_offsets

P122 = D.SettingProfile((1, 2, 2))
P111 = D.SettingProfile((1, 1, 1))


def unit(d, j, k):
    m = np.zeros((d, d))
    m[j, k] = 1
    return m


def one_copy_reduction(src):
    keep = site_offsets(src.profile.settings)
    return partial_trace(src.op, keep).matrix


def test_profile_parse_and_limits():
    p = D.SettingProfile.parse("1,2,2")
    assert p.settings == (1, 2, 2)
    assert p.total_dim(2) == 32
    assert p.n_placements() == 4
    assert len(list(p.placements())) == 4
    with pytest.raises(ValueError):
        D.ghz_source(2, (2, 1, 1))
    with pytest.raises(ValueError):
        D.ghz_source(3, (1, 4, 4))


def test_w_single_copy_is_matrix_unit():
    for d in (2, 3):
        for j in range(d):
            for j1 in range(d):
                assert np.allclose(D.w_op(d, 1, j, j1).matrix, unit(d, j, j1), atol=1e-15)


def test_w_diagonal_is_projector_power():
    for s in (1, 2, 3):
        p = D.w_op(3, s, 1, 1).matrix
        e = unit(3, 1, 1)
        expected = e
        for _ in range(s - 1):
            expected = np.kron(expected, e)
        assert np.allclose(p, expected)
        assert np.allclose(p @ p, p)
        assert np.allclose(D.w_tilde_op(3, s, 1, 1).matrix, expected)


def test_w_partial_trace_example():
    w = D.w_op(2, 2, 0, 1)
    red = partial_trace(w, [0]).matrix
    assert np.allclose(red, unit(2, 0, 1), atol=1e-12)


def test_w_tilde_single_copy():
    wt = D.w_tilde_op(3, 1, 0, 2).matrix
    assert np.allclose(wt, unit(3, 0, 0) + unit(3, 2, 2))


@pytest.mark.parametrize("d,s", [(2, 2), (3, 2), (2, 3)])
def test_w_tilde_positive(d, s):
    for j in range(d):
        for j1 in range(d):
            if j != j1:
                assert min_eigenvalue(D.w_tilde_op(d, s, j, j1))[0] >= -1e-12


@pytest.mark.parametrize("d,s", [(2, 1), (2, 2), (3, 2), (2, 3), (3, 3)])
def test_identity_residuals(d, s):
    res = D.identity_residuals(d, s)
    assert set(res) >= {"ptrace_w", "ptrace_w_tilde", "sum_lower", "sum_offdiag", "sum_all", "permutation"}
    for key, val in res.items():
        assert val <= 1e-12, key


def test_copy_swap_invariance_direct():
    w = D.w_op(3, 3, 0, 2).matrix
    assert np.allclose(D._swap_copies(w, 3, 3, 0, 2), w)
    # a generic operator is not swap invariant, so the check has teeth
    x = np.kron(unit(3, 0, 1), np.eye(3))
    x = np.kron(x, np.eye(3))
    assert not np.allclose(D._swap_copies(x, 3, 3, 0, 2), x)


@pytest.mark.parametrize("d,s", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_domination(d, s):
    assert D.domination_violation(d, s, trials=250, seed=d * 10 + s) <= 1e-10


def test_constants():
    assert D.constant_c(2, 3) == Fraction(1, 16)
    assert D.constant_c(3, 3) == Fraction(1, 216)
    assert D.constant_c_tilde(2, 3) == Fraction(1, 64)
    assert D.constant_c_tilde(2, 2) == Fraction(1, 8)


def test_ghz_source_all_ones_is_state():
    src = D.ghz_source(3, P111)
    assert np.allclose(src.op.matrix, S.ghz_state(3, 3).matrix, atol=1e-15)


def test_ghz_source_122():
    src = D.ghz_source(2, P122)
    assert src.op.trace() == pytest.approx(1, abs=1e-12)
    assert np.allclose(one_copy_reduction(src), S.ghz_state(2, 3).matrix, atol=1e-12)
    assert src.op.is_hermitian()


@pytest.mark.parametrize("builder", [D.noise_source_ghz, D.noise_source_general])
def test_noise_sources_reduce_to_white_noise(builder):
    src = builder(2, 3, P122)
    assert np.allclose(one_copy_reduction(src), np.eye(8) / 8, atol=1e-12)
    assert src.op.trace() == pytest.approx(1, abs=1e-12)


def test_noise_ghz_positive():
    assert min_eigenvalue(D.noise_source_ghz(2, 3, P122).op)[0] >= -1e-12


def test_pure_source_from_ghz_matches_ghz_source():
    dec = S.decompose_pure(S.PureStateCoeffs.ghz(2, 3))
    assert np.allclose(D.pure_source(dec, P122).op.matrix, D.ghz_source(2, P122).op.matrix, atol=1e-12)


def test_pure_source_all_ones_and_trace():
    psi = S.PureStateCoeffs.random(2, 3, 17)
    dec = S.decompose_pure(psi)
    assert np.allclose(D.pure_source(dec, P111).op.matrix, S.density_from_pure(psi).matrix, atol=1e-12)
    assert D.pure_source(dec, P122).op.trace() == pytest.approx(1, abs=1e-10)


def test_mixture_endpoints():
    sig, noise = D.ghz_source(2, P122), D.noise_source_ghz(2, 3, P122)
    assert np.allclose(D.mixture_source(1, sig, noise).op.matrix, sig.op.matrix)
    assert np.allclose(D.mixture_source(0, sig, noise).op.matrix, noise.op.matrix)
    with pytest.raises(ValueError):
        D.mixture_source(0.5, noise, sig)


def test_mixture_dilates_noisy_state():
    src = D.mixture_source(1 / 9, D.ghz_source(2, P122), D.noise_source_ghz(2, 3, P122))
    target = S.noisy_mixture(S.NoisyMixtureSpec(1 / 9, S.ghz_state(2, 3)))
    assert np.allclose(src.target.matrix, target.matrix)
    assert D.verify_dilation(src, trials=50, seed=1).passed(1e-9)


def test_convex_source():
    a = D.pure_source(S.decompose_pure(S.PureStateCoeffs.random(2, 3, 1)), P122)
    b = D.pure_source(S.decompose_pure(S.PureStateCoeffs.random(2, 3, 2)), P122)
    mix = D.convex_source([0.3, 0.7], [a, b])
    assert D.verify_dilation(mix, trials=30, seed=0).passed()
    with pytest.raises(ValueError):
        D.convex_source([0.5, 0.6], [a, b])


def test_verify_all_ones_exact():
    psi = S.PureStateCoeffs.random(3, 3, 4)
    rep = D.verify_dilation(D.pure_source(S.decompose_pure(psi), P111), trials=20, seed=0)
    assert rep.max_residual <= 1e-12
    assert rep.exhaustive and rep.placements == 1


def test_verify_ghz_122():
    rep = D.verify_dilation(D.ghz_source(2, P122), trials=100, seed=0)
    assert rep.passed(1e-9)
    assert rep.placements == 4


def test_verify_detects_corruption():
    src = D.ghz_source(2, P122)
    m = src.op.matrix.copy()
    m[3, 3] += 1e-3
    bad = D.SourceOperator(OperatorOnProduct(src.op.dims, m), src.profile, src.d, src.target)
    assert D.verify_dilation(bad, trials=20, seed=0).max_residual > 1e-6


def test_verify_deterministic():
    src = D.noise_source_general(2, 3, P122)
    assert D.verify_dilation(src, 10, 5) == D.verify_dilation(src, 10, 5)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("prof", [(1, 1, 1), (1, 2, 1), (1, 2, 2)])
def test_all_sources_unit_trace_and_dilate(d, prof):
    psi = S.PureStateCoeffs.random(d, 3, 3)
    for src in (
        D.ghz_source(d, prof),
        D.noise_source_ghz(d, 3, prof),
        D.noise_source_general(d, 3, prof),
        D.pure_source(S.decompose_pure(psi), prof),
    ):
        assert src.op.trace() == pytest.approx(1, abs=1e-10)
        assert D.verify_dilation(src, trials=100, seed=0).passed(1e-9)


def test_group_sites():
    g = D.group_sites(D.ghz_source(2, P122).op, P122)
    assert g.dims == (2, 4, 4)
