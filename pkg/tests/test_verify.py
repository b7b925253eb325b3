from fractions import Fraction

import numpy as np
import pytest

from detrep.gaussian import QQi
from detrep.linalg import op_norm
from detrep.poly import MultiPoly
from detrep.represent import Representation, represent_affine, represent_unconstrained
from detrep.verify import (
    certify_zero_free,
    det_expand,
    pmrp_check,
    principal_minors,
    stability_radius,
    sup_norm_torus,
    verify_representation,
)
from detrep.kvh import kvh_poly

from _helpers import leibniz_det_poly, rand_complex_matrix, rand_exact_matrix, rand_poly, rand_split

THIRD = QQi(Fraction(1, 3))


def linear3():
    return MultiPoly(3, {(0, 0, 0): 1, (1, 0, 0): -THIRD, (0, 1, 0): -THIRD, (0, 0, 1): -THIRD})


def test_expand_scalar_identity():
    a = QQi(Fraction(2, 3), 1)
    K = np.array([[a, QQi(0)], [QQi(0), a]], dtype=object)
    assert det_expand(K, (2,)) == MultiPoly(1, {(0,): 1, (1,): -a}) ** 2


def test_expand_zero():
    K = np.zeros((3, 3))
    assert det_expand(K, (1, 2)) == MultiPoly.constant(1.0, 2, exact=False)


@pytest.mark.parametrize("seed", range(6))
def test_expand_matches_leibniz_exact(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 7))
    n = rand_split(rng, N)
    K = rand_exact_matrix(rng, N)
    assert det_expand(K, n) == leibniz_det_poly(K, n)


def test_expand_with_zero_diagonal():
    # structured K with zero pivots everywhere along the diagonal
    rng = np.random.default_rng(7)
    K = rand_exact_matrix(rng, 5)
    for i in range(5):
        K[i, i] = QQi(0)
    K[0, 1] = QQi(0)
    assert det_expand(K, (2, 3)) == leibniz_det_poly(K, (2, 3))


@pytest.mark.parametrize("seed", range(4))
def test_expand_matches_leibniz_float(seed):
    rng = np.random.default_rng(100 + seed)
    N = int(rng.integers(2, 7))
    n = rand_split(rng, N)
    K = rand_complex_matrix(rng, N)
    e, o = det_expand(K, n), leibniz_det_poly(K, n)
    for k in set(e.terms) | set(o.terms):
        a, b = complex(e.coeff(k)), complex(o.coeff(k))
        assert abs(a - b) <= 1e-9 * max(1.0, abs(b))


def test_expand_size_cap():
    with pytest.raises(ValueError):
        det_expand(np.zeros((25, 25)), (25,))
    with pytest.raises(ValueError):
        det_expand(np.zeros((3, 3)), (2, 2))


def test_principal_minors_exact_vs_direct():
    from detrep.linalg import det
    rng = np.random.default_rng(8)
    K = rand_exact_matrix(rng, 6)
    pm = principal_minors(K)
    for mask in range(64):
        idx = [i for i in range(6) if mask >> i & 1]
        assert pm[mask] == det(K[np.ix_(idx, idx)])


def test_verify_roundtrip_and_perturbation():
    rng = np.random.default_rng(9)
    p = rand_poly(rng, 2, 2, 5)
    rep = represent_unconstrained(p)
    report = verify_representation(p, rep)
    assert report.passed and report.max_abs_residual == 0
    K = rep.K.copy()
    K[0, 0] = K[0, 0] + QQi(Fraction(1, 100))
    bad = verify_representation(p, Representation(rep.n, K))
    assert not bad.passed and bad.max_abs_residual > 0
    assert bad.verdict == "fail"


def test_verify_linear_polynomial():
    K = np.array([[THIRD] * 3] * 3, dtype=object)
    report = verify_representation(linear3(), Representation((1, 1, 1), K), semistable=True)
    assert report.passed
    assert abs(report.norm_of_K - 1) < 1e-12
    assert report.bound_checked


def test_verify_dimension_mismatch():
    with pytest.raises(ValueError):
        verify_representation(linear3(), Representation((1,), np.zeros((1, 1))))


def test_pmrp_diagonal():
    a = [QQi(Fraction(1, 2)), QQi(0, 1), QQi(-3)]
    K = np.empty((3, 3), dtype=object)
    for i in range(3):
        for j in range(3):
            K[i, j] = a[i] if i == j else QQi(0)
    target = {}
    for k in np.ndindex(2, 2, 2):
        c = QQi(1)
        for i in range(3):
            if k[i]:
                c = c * a[i]
        target[tuple(k)] = -c if sum(k) % 2 else c
    res = pmrp_check(K, (1, 1, 1), target, (1, 1, 1))
    assert res.ok


def test_pmrp_affine_rank_one():
    rep = represent_affine([THIRD] * 3)
    res = pmrp_check(rep.K, rep.n, linear3().terms, (1, 1, 1))
    assert res.ok
    assert res.sums[(1, 1, 0)] == 0 and res.sums[(1, 0, 0)] == -THIRD


def test_pmrp_agrees_with_expand():
    rng = np.random.default_rng(10)
    for _ in range(5):
        N = int(rng.integers(2, 7))
        n = rand_split(rng, N)
        K = rand_exact_matrix(rng, N)
        res = pmrp_check(K, n, det_expand(K, n).terms, n)
        assert res.ok
    with pytest.raises(ValueError):
        pmrp_check(K, n, {}, tuple(v + 1 for v in n))


def test_pmrp_detects_wrong_target():
    rng = np.random.default_rng(11)
    K = rand_exact_matrix(rng, 3)
    target = dict(det_expand(K, (3,)).terms)
    target[(1,)] = target[(1,)] + 1
    assert not pmrp_check(K, (3,), target, (3,)).ok


def test_stability_univariate():
    a = QQi(Fraction(5, 2))
    est = stability_radius(MultiPoly(1, {(0,): 1, (1,): -a}))
    assert abs(est.upper - 0.4) < 1e-9 and est.lower <= est.upper
    assert est.upper - est.lower <= 1e-3


def test_stability_univariate_roots():
    rng = np.random.default_rng(12)
    for _ in range(5):
        p = rand_poly(rng, 1, 4, 5, exact=False)
        coeffs = [complex(p.coeff((e,))) for e in range(5)]
        expected = 1 / np.abs(np.roots(coeffs)).max()  # roots of the reversed polynomial
        est = stability_radius(p)
        assert abs(est.upper - expected) < 1e-3
        assert est.lower <= est.upper


def test_stability_linear():
    est = stability_radius(linear3())
    assert abs(est.upper - 1) < 1e-9 and abs(est.lower - 1) < 1e-9


def test_stability_requires_nonzero_constant():
    with pytest.raises(ValueError):
        stability_radius(MultiPoly.variable(0, 1))


def test_stability_norm_inequality():
    rng = np.random.default_rng(13)
    for _ in range(5):
        p = rand_poly(rng, 2, 2, 5)
        rep = represent_unconstrained(p)
        est = stability_radius(p, budget=200_000)
        assert est.lower <= est.upper + 1e-12
        assert 1 / op_norm(rep.K) <= est.upper + 1e-6


def test_certify_zero_free():
    half = Fraction(1, 2)
    p = MultiPoly(2, {(0, 0): 1, (1, 0): -half, (0, 1): -half})
    assert certify_zero_free(p, 0.9)
    assert not certify_zero_free(p, 1.1)


def test_supnorm_examples():
    s2 = sup_norm_torus(kvh_poly(2, 1))
    assert abs(s2.lower - 4) < 1e-6
    assert np.allclose(s2.argmax, [1, -1]) or np.allclose(s2.argmax, [-1, 1])
    s3 = sup_norm_torus(kvh_poly(3, 1))
    assert abs(s3.lower - 5) < 1e-3 and s3.lower <= s3.upper_heuristic
    one = sup_norm_torus(MultiPoly.constant(1, 2))
    assert one.lower == 1 and one.upper_heuristic == 1


def test_supnorm_nonhomogeneous():
    p = MultiPoly(2, {(0, 0): 1, (1, 0): QQi(Fraction(1, 2)), (0, 1): QQi(0, 1)})
    s = sup_norm_torus(p, grid_per_dim=16)
    assert abs(s.lower - 2.5) < 1e-6


def test_supnorm_grid_check():
    with pytest.raises(ValueError):
        sup_norm_torus(linear3(), grid_per_dim=4)
