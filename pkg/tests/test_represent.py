from fractions import Fraction

import numpy as np
import pytest

from detrep.gaussian import QQi
from detrep.linalg import as_float, op_norm, svd
from detrep.poly import MultiPoly, poly_eval
from detrep.represent import (
    FactorChain,
    Representation,
    RepresentationError,
    bounded_chain,
    chain_to_representation,
    factor_chain,
    lemma_det_collapse,
    norm_bound,
    prune_chain,
    represent_affine,
    represent_bounded,
    represent_unconstrained,
)
from detrep.verify import det_expand

from _helpers import rand_poly, rand_qqi

THIRD = QQi(Fraction(1, 3))


def linear3():
    return MultiPoly(3, {(0, 0, 0): 1, (1, 0, 0): -THIRD, (0, 1, 0): -THIRD, (0, 0, 1): -THIRD})


def chain_matches(chain, q, rng, points=20):
    for _ in range(points):
        z = [rand_qqi(rng) for _ in range(q.nvars)]
        if chain.evaluate(z)[0, 0] != poly_eval(q, z):
            return False
    return True


def test_constant_chain():
    q = MultiPoly.constant(QQi(5), 2)
    chain = factor_chain(q)
    assert chain.t == 0
    assert chain.matrices[0][0, 0] == 5


def test_single_variable_chain():
    z = MultiPoly.variable(0, 1)
    chain = factor_chain(z)
    assert chain.t == 1
    assert chain.evaluate([QQi(7)])[0, 0] == 7


@pytest.mark.parametrize("prune", [False, True])
def test_chain_evaluation_identity(prune):
    rng = np.random.default_rng(0)
    for _ in range(10):
        q = rand_poly(rng, 3, 2, 6)
        assert chain_matches(factor_chain(q, prune=prune), q, rng)
    z1, z2 = MultiPoly.variable(0, 2), MultiPoly.variable(1, 2)
    q = (z1 + z2) ** 2 - QQi(3) * z1 * z2
    assert chain_matches(factor_chain(q), q, rng)


def test_pruning_preserves_and_shrinks():
    rng = np.random.default_rng(1)
    q = rand_poly(rng, 2, 3, 6)
    literal = factor_chain(q)
    pruned = prune_chain(literal)
    assert sum(pruned.sizes) <= sum(literal.sizes)
    assert chain_matches(pruned, q, rng)


def test_collapse_examples():
    res = lemma_det_collapse([np.array([[2.0]]), np.array([[3.0]])])
    assert abs(res.block_det - (-5)) < 1e-12 and abs(res.product_det - (-5)) < 1e-12
    zeros = [np.zeros((2, 3)), np.zeros((3, 1)), np.zeros((1, 2))]
    res = lemma_det_collapse(zeros)
    assert res.block_det == 1 and res.product_det == 1
    with pytest.raises(ValueError):
        lemma_det_collapse([np.zeros((2, 3)), np.zeros((2, 2))])


def test_collapse_random_exact():
    rng = np.random.default_rng(2)
    from _helpers import rand_exact_matrix
    sizes = [2, 3, 1, 2]
    blocks = [rand_exact_matrix(rng, sizes[i], sizes[(i + 1) % 4]) for i in range(4)]
    res = lemma_det_collapse(blocks)
    assert res.block_det == res.product_det


def test_empty_representation():
    rep = represent_unconstrained(MultiPoly.constant(1, 2))
    assert rep.n == (0, 0) and rep.size == 0
    assert det_expand(rep.K, rep.n) == MultiPoly.constant(1, 2)


def test_univariate_linear():
    a = QQi(Fraction(2, 5), 1)
    p = MultiPoly(1, {(0,): 1, (1,): -a})
    rep = represent_unconstrained(p)
    assert rep.n == (1,) and rep.K[0, 0] == a


def test_linear3_roundtrip():
    rep = represent_unconstrained(linear3())
    assert det_expand(rep.K, rep.n) == linear3()


def test_square_roundtrip():
    a = QQi(Fraction(3, 7))
    p = MultiPoly(1, {(0,): 1, (1,): -a}) ** 2
    rep = represent_unconstrained(p)
    assert det_expand(rep.K, rep.n) == p


@pytest.mark.parametrize("d, tdeg", [(1, 3), (2, 2), (3, 2)])
def test_literal_roundtrip(d, tdeg):
    rng = np.random.default_rng(10 * d + tdeg)
    for _ in range(5):
        p = rand_poly(rng, d, tdeg, 6)
        rep = represent_unconstrained(p)
        assert det_expand(rep.K, rep.n) == p


def test_pruned_roundtrip_degree3():
    rng = np.random.default_rng(3)
    for _ in range(10):
        p = rand_poly(rng, 3, 3, 6)
        rep = represent_unconstrained(p, prune=True)
        assert det_expand(rep.K, rep.n) == p


def test_rejects_unnormalized():
    rng = np.random.default_rng(4)
    with pytest.raises(RepresentationError):
        represent_unconstrained(rand_poly(rng, 2, 2, 4, normalized=False))
    with pytest.raises(RepresentationError):
        represent_bounded(rand_poly(rng, 2, 2, 4, normalized=False))


def test_chain_to_representation_needs_scalar_chain():
    chain = FactorChain((np.eye(2, dtype=complex),), (), 1)
    with pytest.raises(RepresentationError):
        chain_to_representation(chain)


def test_bounded_examples():
    half = Fraction(1, 2)
    p = MultiPoly(2, {(0, 0): 1, (1, 0): -half, (0, 1): -half})
    b = represent_bounded(p)
    assert b.t == 1 and abs(b.beta - 1) < 1e-15 and b.rep.n == (1, 1)
    assert op_norm(b.rep.K) <= 1 + 1e-8
    p = MultiPoly(1, {(0,): 1, (2,): 1})
    b = represent_bounded(p)
    assert b.t == 2 and abs(b.beta - 1) < 1e-15 and b.rep.n == (2,)
    assert op_norm(b.rep.K) <= 1 + 1e-8
    b = represent_bounded(MultiPoly.constant(1, 3))
    assert b.rep.size == 0


def test_bounded_structure_and_bound():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = rand_poly(rng, 3, 3, 6, exact=False)
        chain, beta, kappa, t = bounded_chain(p)
        assert 0 not in chain.diagonals[0]
        support = [k for k in p.terms if any(k)]
        assert chain.nvars == 3
        b = represent_bounded(p)
        assert b.rep.n == tuple(sum(k[i] for k in support) for i in range(3))
        assert b.bound == norm_bound(beta, kappa)
        assert op_norm(b.rep.K) <= b.bound + 1e-8
        assert np.abs(det_expand(b.rep.K, b.rep.n).to_float().coeff((0, 0, 0)) - 1) < 1e-12
        e = det_expand(b.rep.K, b.rep.n)
        for k in set(e.terms) | set(p.terms):
            assert abs(complex(e.coeff(k)) - complex(p.coeff(k))) <= 1e-9 * (1 + abs(complex(p.coeff(k))))


def test_norm_bound_formula():
    assert norm_bound(1.0, 3) == 1.0
    beta, kappa = 1.5, 2
    assert abs(norm_bound(beta, kappa) - beta * np.sqrt((beta ** 2 - 1) * (1 + beta) ** 2 + 1)) < 1e-12
    assert norm_bound(0.5, 2) == 0.5


def test_affine_examples():
    rep = represent_affine([THIRD] * 3)
    assert all(v == THIRD for v in rep.K.flat)
    assert abs(op_norm(rep.K) - 1) < 1e-12
    rep = represent_affine([0, 0, 0])
    assert np.all(as_float(rep.K) == 0)
    half = QQi(Fraction(1, 2))
    rep = represent_affine([half, -half])
    expected = [[half, -half], [half, -half]]
    assert all(rep.K[i, j] == expected[i][j] for i in range(2) for j in range(2))
    assert det_expand(rep.K, rep.n) == MultiPoly(2, {(0, 0): 1, (1, 0): -half, (0, 1): half})


def test_affine_float_rank_one():
    rng = np.random.default_rng(6)
    for _ in range(20):
        d = int(rng.integers(1, 7))
        a = rng.normal(size=d) + 1j * rng.normal(size=d)
        rep = represent_affine(list(a))
        s = svd(rep.K).singular_values
        assert abs(s[0] - np.abs(a).sum()) < 1e-10
        assert d == 1 or s[1] < 1e-10
        assert np.allclose(np.diag(rep.K), a)


def test_affine_exact_requirement():
    with pytest.raises(RepresentationError):
        represent_affine([QQi(2), QQi(3)], exact=True)
    rep = represent_affine([QQi(2), QQi(3)])
    assert not rep.exact


def test_representation_json():
    rep = represent_unconstrained(linear3())
    back = Representation.from_json(rep.to_json())
    assert back.n == rep.n
    assert all(a == b for a, b in zip(back.K.flat, rep.K.flat))
