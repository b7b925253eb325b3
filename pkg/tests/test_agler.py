from fractions import Fraction

import numpy as np
import pytest

from detrep.agler import (
    InnerEvalError,
    InnerFunction,
    Realization,
    RealizationError,
    agler_lower_bound,
    cd_layers,
    cd_matrix,
    extract_K_from_realization,
    inner_eval_julia,
    inner_eval_rational,
    realization_eval,
    realization_from_representation,
    unitary_completion,
)
from detrep.gaussian import QQi
from detrep.kvh import KvhConfig, kvh_poly, kvh_tuple
from detrep.linalg import as_float
from detrep.poly import CommutingTuple, MultiPoly, poly_eval
from detrep.represent import Representation, represent_affine
from detrep.verify import det_expand

from _helpers import rand_contraction, rand_disk_point, rand_split

THIRD = QQi(Fraction(1, 3))


def linear3():
    return MultiPoly(3, {(0, 0, 0): 1, (1, 0, 0): -THIRD, (0, 1, 0): -THIRD, (0, 0, 1): -THIRD})


def random_unitary(rng, n):
    Q, R = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def test_blaschke_modulus():
    a = 0.6 - 0.3j
    p = MultiPoly(1, {(0,): 1, (1,): -a})
    for th in np.linspace(0, 2 * np.pi, 7):
        assert abs(abs(inner_eval_rational(p, (1,), [np.exp(1j * th)])) - 1) < 1e-12


def test_boundary_zero_guarded():
    with pytest.raises(InnerEvalError):
        inner_eval_rational(linear3(), (1, 1, 1), [1, 1, 1])


def test_interior_modulus_below_one():
    rng = np.random.default_rng(0)
    K = rand_contraction(rng, 4, 0.8)
    p = det_expand(K, (2, 2))
    for _ in range(20):
        assert abs(inner_eval_rational(p, (2, 2), rand_disk_point(rng, 2))) < 1


def test_torus_innerness():
    rng = np.random.default_rng(1)
    for _ in range(10):
        K = rand_contraction(rng, 3) * 3
        n = (1, 2)
        p = det_expand(K, n)
        z = np.exp(2j * np.pi * rng.uniform(size=2))
        if abs(poly_eval(p, z)) > 1e-6:
            assert abs(abs(inner_eval_rational(p, n, z)) - 1) < 1e-9


def test_julia_zero_is_monomial():
    z = np.array([0.3 + 0.2j, -0.5j])
    assert abs(inner_eval_julia(np.zeros((3, 3)), (1, 2), z) - z[0] * z[1] ** 2) < 1e-14


def test_julia_linear_polynomial():
    rng = np.random.default_rng(2)
    K = np.ones((3, 3)) / 3
    for _ in range(100):
        z = rand_disk_point(rng, 3, 1.0)
        a = inner_eval_julia(K, (1, 1, 1), z)
        b = inner_eval_rational(linear3(), (1, 1, 1), z)
        assert abs(a - b) <= 1e-8 * (1 + abs(b))


def test_julia_squared_moebius():
    rng = np.random.default_rng(3)
    a = 0.4 + 0.5j
    for _ in range(10):
        z = rand_disk_point(rng, 1, 1.0)
        want = ((z[0] - np.conj(a)) / (1 - a * z[0])) ** 2
        assert abs(inner_eval_julia(a * np.eye(2), (2,), z) - want) < 1e-12


def test_julia_rejects_noncontraction():
    with pytest.raises(ValueError):
        inner_eval_julia(2 * np.eye(1), (1,), [0.1])


def test_inner_function_object():
    rep = represent_affine([THIRD] * 3)
    f = InnerFunction(linear3(), (1, 1, 1), rep)
    z = [0.2, 0.1j, -0.3]
    assert abs(f(z) - f.julia(z)) < 1e-12


def test_realization_no_feedback():
    rng = np.random.default_rng(4)
    U = random_unitary(rng, 4)
    R = Realization.from_unitary(U, (1, 2))
    R0 = Realization(R.A, R.B, R.C, np.zeros((3, 3)), (1, 2), tol=10.0)
    z = np.array([0.3, -0.4j])
    Z = np.diag([z[0], z[1], z[1]])
    assert abs(realization_eval(R0, z) - (R.A + (R.B @ Z @ R.C)[0, 0])) < 1e-14


def test_realization_contractive():
    rng = np.random.default_rng(5)
    for _ in range(20):
        R = Realization.from_unitary(random_unitary(rng, 5), (2, 2))
        assert abs(realization_eval(R, rand_disk_point(rng, 2, 1.0))) <= 1 + 1e-9


def test_realization_rejects_nonunitary():
    with pytest.raises(RealizationError):
        Realization.from_unitary(2 * np.eye(3), (1, 1))


def test_realization_value_at_origin():
    rng = np.random.default_rng(6)
    U = random_unitary(rng, 4)
    K = U[1:, 1:]
    rep = Representation((2, 1), K)
    p = det_expand(K, rep.n)
    R = realization_from_representation(rep)
    z0 = np.zeros(2)
    assert abs(realization_eval(R, z0) - inner_eval_rational(p, rep.n, z0)) < 1e-12


def test_extract_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(10):
        N = int(rng.integers(1, 7))
        n = rand_split(rng, N)
        K = random_unitary(rng, N + 1)[1:, 1:]
        p = det_expand(K, n)
        R = realization_from_representation(Representation(n, K))
        rep = extract_K_from_realization(p, R)
        assert np.allclose(rep.K, K)
        e = det_expand(rep.K, n)
        assert all(abs(complex(e.coeff(k)) - complex(p.coeff(k))) < 1e-9 for k in p.terms)


def test_extract_trivial():
    R = Realization(1.0, np.zeros((1, 0)), np.zeros((0, 1)), np.zeros((0, 0)), (0, 0))
    rep = extract_K_from_realization(MultiPoly.constant(1, 2), R)
    assert rep.size == 0


def test_extract_mismatch():
    rng = np.random.default_rng(8)
    K = random_unitary(rng, 4)[1:, 1:]
    R = realization_from_representation(Representation((3,), K))
    other = det_expand(random_unitary(rng, 4)[1:, 1:], (3,))
    with pytest.raises(RealizationError):
        extract_K_from_realization(other, R)


def test_completion_needs_rank_one_defect():
    with pytest.raises(ValueError):
        unitary_completion(0.5 * np.eye(2))


def test_agler_kvh():
    p = kvh_poly(3, 1)
    T = kvh_tuple(KvhConfig(3, 1))
    assert abs(agler_lower_bound(p, [T]) - 6) < 1e-6
    assert abs(agler_lower_bound(p * Fraction(1, 5), [T]) - 1.2) < 1e-6


def test_agler_scalar_tuples():
    rng = np.random.default_rng(9)
    p = linear3().to_float()
    pts = [rand_disk_point(rng, 3) for _ in range(10)]
    tuples = [CommutingTuple([np.array([[c]]) for c in z]) for z in pts]
    assert agler_lower_bound(p, tuples) == max(abs(poly_eval(p, z)) for z in pts)


def test_agler_rejects_noncontraction():
    with pytest.raises(ValueError):
        agler_lower_bound(linear3(), [CommutingTuple([2 * np.eye(2)] * 3)])


def test_cd_matrix_display():
    res = cd_matrix(1, 3)
    expected = [[6, -3, -3, 0], [-3, 4, 2, -3], [-3, 2, 4, -3], [0, -3, -3, 6]]
    assert res.exact
    assert all(res.matrix[i, j] == QQi(Fraction(expected[i][j], 18)) for i in range(4) for j in range(4))


def test_cd_matrix_rational_t():
    t = Fraction(3, 2)
    res = cd_matrix(t, 3)
    expected = [[6 * t * t, -3 * t, -3 * t, 0], [-3 * t, 3 * t * t + 1, 2, -3 * t],
                [-3 * t, 2, 3 * t * t + 1, -3 * t], [0, -3 * t, -3 * t, 6 * t * t]]
    assert all(res.matrix[i, j] == QQi(Fraction(expected[i][j]) / 18) for i in range(4) for j in range(4))


def test_cd_matrix_factorization():
    # the printed factor A reproduces the printed matrix only at t = 1
    t = 1.0
    s6 = np.sqrt(6)
    A = np.array([[s6 * t, -s6 / 2, -s6 / 2, 0], [0, -s6 / 2, -s6 / 2, s6 * t],
                  [0, np.sqrt(3 * (t * t - 1)), np.sqrt(3 * (t * t - 1)), 0], [0, 1, -1, 0]]) / np.sqrt(18)
    res = cd_matrix(t, 3)
    assert np.abs(res.matrix - A.T @ A).max() <= 1e-10


@pytest.mark.parametrize("t", [1.0, 1.7, 3.0])
def test_cd_matrix_float_matches_display(t):
    expected = np.array([[6 * t * t, -3 * t, -3 * t, 0], [-3 * t, 3 * t * t + 1, 2, -3 * t],
                         [-3 * t, 2, 3 * t * t + 1, -3 * t], [0, -3 * t, -3 * t, 6 * t * t]]) / 18
    res = cd_matrix(t, 3)
    assert np.abs(res.matrix - expected).max() <= 1e-12
    assert res.min_eigenvalue >= -1e-12


def test_cd_matrix_psd_small_d():
    for d in range(4, 9):
        assert cd_matrix(1, d).min_eigenvalue >= -1e-9


def test_cd_zero_layers_recorded():
    _, layers = cd_layers(1, 3, exact=True)
    assert all(3 - j - k + i == 0 for i, j, k in layers)
    assert layers


def test_cd_matrix_errors():
    with pytest.raises(ValueError):
        cd_matrix(0.5, 3)
    with pytest.raises(ValueError):
        cd_matrix(1, 1)
