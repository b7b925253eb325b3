"""Rational inner functions, transfer-function realizations and Agler-norm tools.

For a representation ``p = det(I - K Z_n)`` with a contraction K the inner
function ``f = z^n conj(p)(1/z) / p(z)`` equals
``det(-K* + sqrt(I - K*K) Z_n (I - K Z_n)^{-1} sqrt(I - KK*))``.
Both sides are evaluated independently here.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .gaussian import QQi
from .linalg import as_float, is_exact, op_norm, psd_sqrt
from .poly import MultiPoly, poly_eval, poly_eval_tuple, poly_reverse
from .represent import Representation
from .verify import verify_representation


class InnerEvalError(ArithmeticError):
    """The denominator or resolvent is singular at the requested point."""


class RealizationError(ValueError):
    """A realization is not unitary or does not realize the given function."""


def _zn(n, z):
    return np.concatenate([np.full(ni, complex(zi)) for ni, zi in zip(n, z)]) if n else np.zeros(0)


# ---------------------------------------------------------------------------
# inner functions


def inner_eval_rational(p, n, z, guard=1e-12):
    """``z^n conj(p)(1/z) / p(z)`` from the reversed polynomial."""
    den = complex(poly_eval(p, z))
    if abs(den) <= guard:
        raise InnerEvalError(f"|p(z)| = {abs(den):.3g} is below the guard {guard:g}")
    return complex(poly_eval(poly_reverse(p, n), z)) / den


@dataclass
class InnerFunction:
    """The rational inner function attached to ``p`` and a multidegree ``n >= deg p``."""

    p: MultiPoly
    n: tuple
    rep: Representation = None

    def __post_init__(self):
        self.n = tuple(int(v) for v in self.n)
        self.numerator = poly_reverse(self.p, self.n)

    def __call__(self, z, guard=1e-12):
        return inner_eval_rational(self.p, self.n, z, guard)

    def julia(self, z):
        if self.rep is None:
            raise ValueError("no representation attached")
        return inner_eval_julia(self.rep.K, self.n, z)


def inner_eval_julia(K, n, z, tol=1e-10):
    """Evaluate ``det(-K* + sqrt(I-K*K) Z (I - K Z)^{-1} sqrt(I-KK*))``."""
    K = as_float(np.asarray(K))
    N = K.shape[0]
    if N == 0:
        return 1.0 + 0j
    if op_norm(K) > 1 + tol:
        raise ValueError("K is not a contraction")
    Z = np.diag(_zn(n, z))
    KH = K.conj().T
    left = psd_sqrt(np.eye(N) - KH @ K)
    right = psd_sqrt(np.eye(N) - K @ KH)
    M = np.eye(N) - K @ Z
    if np.linalg.cond(M) > 1e14:
        raise InnerEvalError("I - K Z_n is singular at this point")
    X = np.linalg.solve(M, right)
    return complex(np.linalg.det(-KH + left @ Z @ X))


# ---------------------------------------------------------------------------
# transfer-function realizations


@dataclass
class Realization:
    """Blocks of a unitary colligation ``U = [[A, B], [C, D]]`` with ``D`` of side ``|m|``."""

    A: complex
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    m: tuple
    tol: float = 1e-8
    residual: float = field(init=False)

    def __post_init__(self):
        self.m = tuple(int(v) for v in self.m)
        N = sum(self.m)
        self.A = complex(np.asarray(self.A).reshape(()))
        self.B = as_float(np.asarray(self.B)).reshape(1, N)
        self.C = as_float(np.asarray(self.C)).reshape(N, 1)
        self.D = as_float(np.asarray(self.D)).reshape(N, N)
        U = self.unitary()
        self.residual = float(np.abs(U.conj().T @ U - np.eye(N + 1)).max())
        if self.residual > self.tol:
            raise RealizationError(f"colligation is not unitary (residual {self.residual:.3g})")

    def unitary(self):
        top = np.concatenate([[[self.A]], self.B], axis=1)
        bottom = np.concatenate([self.C, self.D], axis=1)
        return np.concatenate([top, bottom], axis=0)

    @classmethod
    def from_unitary(cls, U, m, tol=1e-8):
        U = as_float(np.asarray(U))
        return cls(U[0, 0], U[:1, 1:], U[1:, :1], U[1:, 1:], m, tol)

    def to_json(self):
        from .linalg import matrix_to_json
        return {"m": list(self.m), "U": matrix_to_json(self.unitary()), "tol": self.tol}

    @classmethod
    def from_json(cls, data):
        from .linalg import matrix_from_json
        return cls.from_unitary(matrix_from_json(data["U"]), data["m"], data.get("tol", 1e-8))


def realization_eval(R, z):
    """``A + B Z_m (I - D Z_m)^{-1} C``."""
    N = sum(R.m)
    if N == 0:
        return R.A
    Z = np.diag(_zn(R.m, z))
    M = np.eye(N) - R.D @ Z
    if np.linalg.cond(M) > 1e14:
        raise InnerEvalError("I - D Z_m is singular at this point")
    return complex(R.A + (R.B @ Z @ np.linalg.solve(M, R.C))[0, 0])


def unitary_completion(K, tol=1e-10):
    """Embed K as the lower-right block of a unitary of side ``1 + side(K)``.

    This is possible exactly when both defect operators ``I - K*K`` and
    ``I - KK*`` have rank at most one.
    """
    K = as_float(np.asarray(K))
    N = K.shape[0]
    if op_norm(K) > 1 + tol:
        raise ValueError("K is not a contraction")
    KH = K.conj().T
    wb, vb = np.linalg.eigh(np.eye(N) - KH @ K)
    wc, vc = np.linalg.eigh(np.eye(N) - K @ KH)
    if N > 1 and (abs(wb[-2]) > tol or abs(wc[-2]) > tol):
        raise ValueError("defect rank exceeds one; no scalar unitary completion exists")
    b = np.sqrt(max(wb[-1], 0.0)) * vb[:, -1].conj()[None, :]
    c = np.sqrt(max(wc[-1], 0.0)) * vc[:, -1][:, None]
    bb = float((b @ b.conj().T).real[0, 0])
    if bb > tol:
        a = -np.conj((c.conj().T @ K @ b.conj().T)[0, 0] / bb)
    else:
        a = 1.0 + 0j
    U = np.zeros((N + 1, N + 1), dtype=complex)
    U[0, 0], U[:1, 1:], U[1:, :1], U[1:, 1:] = a, b, c, K
    return U


def realization_from_representation(rep, tol=1e-8):
    """Scalar realization of ``z^n conj(p)(1/z)/p(z)`` with ``D = K``.

    Needs a contraction with rank-one defects (see :func:`unitary_completion`).
    The first row of the completion is rotated by a unimodular constant so
    that the realized function is the inner function itself.
    """
    n = tuple(rep.n)
    U = unitary_completion(rep.K, tol)
    lam = (-1) ** sum(n) / np.linalg.det(U)
    U[0, :] *= lam
    return Realization.from_unitary(U, n, tol)


def _sample_points(d, count, seed, radius=0.9):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0, 1, (count, d)))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, (count, d)))


def extract_K_from_realization(p, R, tol=1e-8, samples=50, seed=0):
    """Return ``Representation(m, D)`` after checking that R realizes the inner function of p.

    The scattering-Schur hypothesis on ``p`` (semi-stable, no common factor
    with its reversal) is the caller's responsibility.
    """
    if len(R.m) != p.nvars:
        raise RealizationError("realization and polynomial disagree on the number of variables")
    worst = 0.0
    for z in _sample_points(p.nvars, samples, seed):
        try:
            want = inner_eval_rational(p, R.m, z)
        except InnerEvalError:
            continue
        got = realization_eval(R, z)
        worst = max(worst, abs(got - want) / (1 + abs(want)))
    if worst > tol:
        raise RealizationError(f"realization does not match the inner function (error {worst:.3g})")
    rep = Representation(R.m, R.D.copy())
    report = verify_representation(p.to_float(), rep, tol=max(tol, 1e-9))
    if not report.passed:
        raise RealizationError(
            f"det(I - D Z_m) differs from p (residual {report.max_abs_residual:.3g})")
    return rep


# ---------------------------------------------------------------------------
# Agler-norm lower bounds


def agler_lower_bound(p, tuples, rho=1 - 1e-9, tol=1e-10, return_index=False):
    """``max ||p(T)||`` over the given commuting contractive tuples.

    A tuple containing a matrix of norm 1 (within 1e-12) is evaluated at
    ``rho*T`` so that only strict contractions enter.
    """
    best, arg = -np.inf, None
    for idx, T in enumerate(tuples):
        norms = [op_norm(m) for m in T.matrices]
        if max(norms) > 1 + tol:
            raise ValueError(f"tuple {idx} is not contractive (max norm {max(norms):.6g})")
        if max(norms) >= 1 - 1e-12:
            T = T.scaled(rho)
        val = op_norm(poly_eval_tuple(p, T))
        if val > best:
            best, arg = val, idx
    if arg is None:
        raise ValueError("no tuples given")
    return (best, arg) if return_index else best


# ---------------------------------------------------------------------------
# Christoffel-Darboux matrix


@dataclass
class CdMatrix:
    matrix: np.ndarray
    min_eigenvalue: float
    zero_layers: list
    exact: bool

    def to_json(self):
        from .linalg import matrix_to_json
        return {
            "matrix": matrix_to_json(self.matrix),
            "min_eigenvalue": self.min_eigenvalue,
            "zero_layers": [list(v) for v in self.zero_layers],
            "mode": "exact" if self.exact else "float",
        }


def cd_coefficients(t, d, exact):
    """Binomially normalized symmetric coefficients of ``t - (1/d) sum z_i``."""
    one = QQi(1) if exact else 1.0
    pc = [one * 0] * (d + 1)
    pc[0] = QQi.coerce(t) if exact else complex(t)
    pc[1] = -one
    return pc


def cd_layers(t, d, exact=None):
    """Solve the Christoffel-Darboux recursion for ``B[i][j][k]``.

    Returns the nested table and the list of ``(i, j, k)`` where the
    coefficient ``d - j - k + i`` vanishes; those entries are left at 0.
    """
    if exact is None:
        exact = not isinstance(t, (float, complex))
    pc = cd_coefficients(t, d, exact)
    conj = (lambda x: x.conjugate()) if exact else np.conj
    zero = QQi(0) if exact else 0j
    B = {}
    zero_layers = []
    for j in range(d):
        for k in range(d):
            rhs = (pc[j] * conj(pc[k]) - conj(pc[d - j]) * pc[d - k]) / (comb(d, j) * comb(d, k))
            for i in range(min(j, k) + 1):
                c = d - j - k + i
                prev = B.get((i - 1, j - 1, k - 1), zero) if i > 0 else zero
                val = rhs + i * prev
                if c == 0:
                    zero_layers.append((i, j, k))
                    B[(i, j, k)] = zero
                else:
                    B[(i, j, k)] = val / c
    return B, zero_layers


def cd_matrix(t, d, exact=None):
    """The matrix ``(B^{|a & b|}_{|a|,|b|})`` over subsets of ``{1..d-1}`` and its smallest eigenvalue."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if d > 14:
        raise ValueError("d is capped at 14 (matrix side 2^(d-1))")
    if abs(complex(t)) < 1:
        raise ValueError("|t| must be at least 1")
    if exact is None:
        exact = not isinstance(t, (float, complex))
    B, zero_layers = cd_layers(t, d, exact)
    side = 1 << (d - 1)
    masks = np.arange(side)
    pop = np.bitwise_count(masks).astype(int)
    inter = np.bitwise_count(masks[:, None] & masks[None, :]).astype(int)
    if exact:
        M = np.empty((side, side), dtype=object)
        for a in range(side):
            for b in range(side):
                M[a, b] = B[(inter[a, b], pop[a], pop[b])]
        Mf = as_float(M)
    else:
        lookup = np.zeros((d, d, d), dtype=complex)
        for (i, j, k), v in B.items():
            lookup[i, j, k] = v
        M = lookup[inter, pop[:, None], pop[None, :]]
        Mf = M
    lam = float(np.linalg.eigvalsh((Mf + Mf.conj().T) / 2)[0])
    return CdMatrix(M, lam, zero_layers, exact)
