"""The Kaijser-Varopoulos-Holbrook polynomials and their commuting 4x4 tuples.

``p = (1+s) sum z_m^2 - (sum z_m)^2`` has Agler norm ``(1+s)d``, witnessed
by nilpotent 4x4 tuples built from unit vectors in the plane with zero sum,
while its sup norm on the torus is strictly smaller for odd d.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import pi, sqrt

import numpy as np

from .agler import agler_lower_bound
from .gaussian import QQi
from .linalg import exact_zeros, op_norm
from .poly import CommutingTuple, MultiPoly, poly_eval, poly_eval_tuple
from .verify import stability_radius, sup_norm_torus

S_STAR = (sqrt(13) + 1) / 6
RATIO_STAR = sqrt((35 + 13 * sqrt(13)) / 6) / 3


def _is_exact(x):
    return isinstance(x, (int, Fraction, QQi)) or type(x).__name__ == "mpq"


def kvh_poly(d, s):
    """``(1+s) sum z_m^2 - (sum z_m)^2`` as a polynomial in d variables."""
    if d < 2:
        raise ValueError("d must be at least 2")
    exact = _is_exact(s)
    sc = QQi.coerce(s) if exact else complex(s)
    terms = {}
    for i in range(d):
        k = [0] * d
        k[i] = 2
        terms[tuple(k)] = sc
        for j in range(i + 1, d):
            k = [0] * d
            k[i] = k[j] = 1
            terms[tuple(k)] = -2
    return MultiPoly(d, terms, exact=exact)


def kvh_form_matrix(d, s):
    """Symmetric A with ``p(z) = z^T A z``: ``(1+s) I - J``."""
    return (1 + s) * np.eye(d) - np.ones((d, d))


def kvh_form_norm(d, s):
    """Operator norm of the quadratic-form matrix, ``max(1+s, |s-d+1|)``.

    The closed form is checked against a numerical eigensolve.
    """
    s = float(s)
    A = kvh_form_matrix(d, s)
    w = np.linalg.eigvalsh(A)
    expected = np.array(sorted([s - d + 1] + [1 + s] * (d - 1)))
    if np.abs(w - expected).max() > 1e-10:
        raise ArithmeticError("eigenvalues of the form matrix disagree with the closed form")
    return max(1 + s, abs(s - d + 1))


@dataclass
class KvhConfig:
    d: int
    s: object = 1
    unit_vectors: np.ndarray = None

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.unit_vectors is None:
            ang = 2 * pi * np.arange(self.d) / self.d
            self.unit_vectors = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        V = np.asarray(self.unit_vectors, dtype=float)
        if V.shape != (self.d, 2):
            raise ValueError(f"need {self.d} vectors in the plane")
        if np.abs(np.linalg.norm(V, axis=1) - 1).max() > 1e-12:
            raise ValueError("vectors must have unit length")
        if np.linalg.norm(V.sum(axis=0)) > 1e-12:
            raise ValueError("vectors must sum to zero")
        self.unit_vectors = V

    @property
    def gram(self):
        return self.unit_vectors @ self.unit_vectors.T


def _tuple_from_factors(X, Y, exact):
    d = X.shape[0]
    mats = []
    for i in range(d):
        T = exact_zeros(4, 4) if exact else np.zeros((4, 4))
        T[0, 1:3] = X[i]
        T[1:3, 3] = Y[i]
        mats.append(T)
    return mats


def _rational_gram(G):
    Q = np.empty(G.shape, dtype=object)
    for idx, g in np.ndenumerate(G):
        f = Fraction(g).limit_denominator(10**6)
        if abs(float(f) - g) > 1e-12:
            raise ValueError("the Gram matrix of the unit vectors is not rational")
        Q[idx] = QQi(f)
    return Q


def kvh_tuple(config, exact=False):
    """The commuting tuple ``T_i = [[0, v_i^T, 0], [0, 0, v_i], [0, 0, 0]]``.

    With ``exact=True`` the unit vectors are replaced by a rational pair
    ``(x_i, y_i)`` with ``<x_i, y_j> = <v_i, v_j>``.  That tuple is similar to
    the contractive one through a change of basis of the middle block, so it
    has the same ``p(T)`` but not the same norms.  It exists whenever the Gram
    matrix of the vectors is rational.
    """
    if not exact:
        V = config.unit_vectors
        return CommutingTuple(_tuple_from_factors(V, V, False))
    G = _rational_gram(config.gram)
    # rank factorization G = G[:, I] G[I, I]^{-1} G[I, :] on two independent rows
    V = config.unit_vectors
    I = [0, next(i for i in range(1, config.d) if abs(V[0, 0] * V[i, 1] - V[0, 1] * V[i, 0]) > 1e-9)]
    M = G[np.ix_(I, I)]
    detM = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    Minv = np.array([[M[1, 1] / detM, -M[0, 1] / detM], [-M[1, 0] / detM, M[0, 0] / detM]], dtype=object)
    X = G[:, I] @ Minv
    Y = G[:, I]
    return CommutingTuple(_tuple_from_factors(X, Y, True))


@dataclass
class KvhReport:
    d: int
    s: float
    sup_lower: float
    sup_upper_heuristic: float
    sup_argmax: tuple
    sup_note: str
    agler_value: float
    vn_ratio_lower: float
    even_witness: float = None
    grid: int = 64
    extras: dict = field(default_factory=dict)

    def to_json(self):
        out = {
            "d": self.d,
            "s": self.s,
            "grid": self.grid,
            "sup_lower": self.sup_lower,
            "sup_upper_heuristic": self.sup_upper_heuristic,
            "sup_argmax": [[z.real, z.imag] for z in self.sup_argmax],
            "sup_note": self.sup_note,
            "agler_value": self.agler_value,
            "vn_ratio_lower": self.vn_ratio_lower,
        }
        if self.even_witness is not None:
            out["even_witness_value"] = self.even_witness
        return out


def kvh_report(d, s, grid=64, refine_steps=20):
    """Sup-norm estimate, tuple lower bound for the Agler norm and their ratio."""
    p = kvh_poly(d, s)
    sup = sup_norm_torus(p, grid_per_dim=grid, refine_steps=refine_steps)
    agler = agler_lower_bound(p, [kvh_tuple(KvhConfig(d, s))])
    target = (1 + float(s)) * d
    witness = None
    if d % 2 == 0:
        witness = abs(complex(poly_eval(p.to_float(), [(-1) ** i for i in range(d)])))
        if abs(witness - target) > 1e-9 or sup.lower < target - 1e-6:
            raise ArithmeticError("even-d sup norm does not reach (1+s)d")
        note = "even d: sup attained at (1,-1,...,1,-1)"
    else:
        gap = target - sup.upper_heuristic
        note = f"odd d: sup below (1+s)d by at least {gap:.6g} (heuristic upper bound)"
    return KvhReport(d, float(s), sup.lower, sup.upper_heuristic, sup.argmax, note,
                     agler, agler / sup.upper_heuristic, witness, grid)


def kvh_ratio_scan(s_values, d=3, grid=64, refine_steps=20):
    """``vn_ratio_lower`` of :func:`kvh_report` over a list of s values."""
    return np.array([kvh_report(d, s, grid, refine_steps).vn_ratio_lower for s in s_values])


def kvh_optimal_s(cross_check=False, s_values=None, grid=64):
    """Closed-form maximizer ``s* = (sqrt 13 + 1)/6`` and maximal ratio for d = 3.

    With ``cross_check=True`` the ratio is also maximized over ``s_values``
    (default 0.5..1.1 step 0.01) and a RuntimeError is raised if the grid
    argmax is more than 0.02 away from ``s*``.
    """
    if cross_check:
        if s_values is None:
            s_values = np.round(np.arange(0.5, 1.1 + 1e-9, 0.01), 2)
        ratios = kvh_ratio_scan(s_values, 3, grid)
        s_grid = float(s_values[int(np.argmax(ratios))])
        if abs(s_grid - S_STAR) > 0.02:
            raise RuntimeError(f"grid maximizer {s_grid} is far from the closed form {S_STAR}")
    return S_STAR, RATIO_STAR


@dataclass
class Section5Example:
    r: object
    q: MultiPoly
    numerator: MultiPoly
    f_at_tuple_norm: float
    q_stable: bool
    radius_lower: float
    radius_upper: float
    certified_beyond_one: bool

    def to_json(self):
        return {
            "r": float(self.r),
            "q": self.q.to_json(),
            "f_at_tuple_norm": self.f_at_tuple_norm,
            "q_stable": self.q_stable,
            "radius_lower": self.radius_lower,
            "radius_upper": self.radius_upper,
            "certified_beyond_one": self.certified_beyond_one,
        }


def kvh_section5_example(r, budget=2_000_000):
    """The stable polynomial ``q = 1 + (r/5) z1 z2 z3 (...)`` and its inner function at the KVH tuple.

    ``f = (z1 z2 z3)^3 + (r/5) p) / q`` with ``p`` the d = 3, s = 1 KVH
    polynomial.  At the tuple, ``q(T) = I`` and the cubic term vanishes, so
    ``||f(T)|| = 6r/5``.  Stability of q comes from :func:`stability_radius`.
    """
    if not 5 / 6 < float(r) < 1:
        raise ValueError("r must lie in (5/6, 1)")
    exact = _is_exact(r)
    rc = QQi.coerce(r) / 5 if exact else complex(r) / 5
    one = MultiPoly.constant(1, 3, exact=exact)
    z = [MultiPoly.variable(i, 3, exact=exact) for i in range(3)]
    z1, z2, z3 = z
    inner = (z1**2 * z2**2 + z2**2 * z3**2 + z3**2 * z1**2
             - 2 * z1 * z2 * z3**2 - 2 * z1 * z2**2 * z3 - 2 * z1**2 * z2 * z3)
    q = one + rc * z1 * z2 * z3 * inner
    num = (z1 * z2 * z3) ** 3 + rc * kvh_poly(3, 1 if exact else 1.0)
    T = kvh_tuple(KvhConfig(3, 1))
    fT = np.linalg.solve(poly_eval_tuple(q.to_float(), T), poly_eval_tuple(num.to_float(), T))
    est = stability_radius(q, budget=budget)
    return Section5Example(r, q, num, op_norm(fT), est.lower > 1 - 1e-3,
                           est.lower, est.upper, est.lower > 1)
