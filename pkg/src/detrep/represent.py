"""Constructions of determinantal representations ``p = det(I - K Z_n)``.

The unconstrained pipeline factors ``q = 1 - p`` as a chain
``C_0 L_1(z) C_1 ... L_t(z) C_t`` of constant matrices and diagonal
variable-assignment matrices, stacks the chain into a cyclic block matrix,
groups the constant slots first and closes the loop with a Schur
complement.  The bounded pipeline uses a specific balanced chain whose
blocks all have norm ``beta`` so that ``||K||`` can be estimated.
"""

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .gaussian import QQi, exact_sqrt
from .linalg import (as_float, det, exact_identity, exact_zeros, is_exact,
                     matrix_from_json, matrix_to_json, solve)
from .poly import MultiPoly, poly_degrees


class RepresentationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class FactorChain:
    """``q(z) = C_0 L_1(z) C_1 ... L_t(z) C_t``.

    ``diagonals[i]`` lists the symbols of ``L_{i+1}``: ``0`` stands for the
    constant 1 and ``j >= 1`` for the variable ``z_j``.
    """

    matrices: tuple
    diagonals: tuple
    nvars: int

    def __post_init__(self):
        if len(self.matrices) != len(self.diagonals) + 1:
            raise ValueError("a chain of length t needs t+1 matrices and t diagonals")
        for i, L in enumerate(self.diagonals):
            left, right = self.matrices[i], self.matrices[i + 1]
            if left.shape[1] != len(L) or right.shape[0] != len(L):
                raise ValueError(f"shape mismatch around diagonal L_{i + 1}")
            if any(not 0 <= s <= self.nvars for s in L):
                raise ValueError(f"diagonal L_{i + 1} has a symbol outside 0..{self.nvars}")

    @property
    def t(self):
        return len(self.diagonals)

    @property
    def sizes(self):
        return [self.matrices[0].shape[0]] + [len(L) for L in self.diagonals]

    @property
    def exact(self):
        return all(is_exact(C) for C in self.matrices)

    def evaluate(self, z):
        """The matrix ``q(z)`` at a numeric point."""
        exact = self.exact and all(isinstance(v, (QQi, int)) for v in z)
        out = self.matrices[0] if exact else as_float(self.matrices[0])
        for L, C in zip(self.diagonals, self.matrices[1:]):
            if exact:
                vals = [QQi(1) if s == 0 else QQi.coerce(z[s - 1]) for s in L]
                out = (out * np.array(vals, dtype=object)) @ C
            else:
                vals = np.array([1.0 if s == 0 else complex(z[s - 1]) for s in L])
                out = (out * vals) @ as_float(C)
        return out

    def polynomial_matrix(self):
        """The chain product with polynomial entries (exact chains only)."""
        d = self.nvars
        sym = [MultiPoly.constant(1, d)] + [MultiPoly.variable(i, d) for i in range(d)]
        out = _to_poly_matrix(self.matrices[0], d, self.exact)
        for L, C in zip(self.diagonals, self.matrices[1:]):
            scaled = np.empty(out.shape, dtype=object)
            for r in range(out.shape[0]):
                for c, s in enumerate(L):
                    scaled[r, c] = out[r, c] * (sym[s] if self.exact else sym[s].to_float())
            out = _poly_matmul(scaled, C, d, self.exact)
        return out


def _to_poly_matrix(M, d, exact):
    out = np.empty(M.shape, dtype=object)
    for idx in np.ndindex(*M.shape):
        out[idx] = MultiPoly.constant(M[idx], d, exact=exact)
    return out


def _poly_matmul(P, C, d, exact):
    out = np.empty((P.shape[0], C.shape[1]), dtype=object)
    for r in range(P.shape[0]):
        for c in range(C.shape[1]):
            acc = MultiPoly.zero(d, exact=exact)
            for j in range(P.shape[1]):
                if C[j, c] != 0 and not P[r, j].is_zero():
                    acc = acc + P[r, j] * (C[j, c] if exact else complex(C[j, c]))
            out[r, c] = acc
    return out


@dataclass(frozen=True)
class Representation:
    """``p(z) = det(I - K Z_n)`` with variable blocks of sizes ``n``."""

    n: tuple
    K: np.ndarray = field(repr=False)

    def __post_init__(self):
        N = sum(self.n)
        if self.K.shape != (N, N):
            raise ValueError(f"K has shape {self.K.shape}, expected {(N, N)}")

    @property
    def d(self):
        return len(self.n)

    @property
    def size(self):
        return sum(self.n)

    @property
    def exact(self):
        return is_exact(self.K)

    @property
    def variable_blocks(self):
        """Consecutive index ranges, one per variable."""
        out, start = [], 0
        for ni in self.n:
            out.append(range(start, start + ni))
            start += ni
        return out

    def slot_variables(self):
        """0-based variable index of each row/column of K."""
        return [i for i, ni in enumerate(self.n) for _ in range(ni)]

    def to_json(self):
        return {"n": list(self.n), "K": matrix_to_json(self.K)}

    @classmethod
    def from_json(cls, data):
        return cls(tuple(int(v) for v in data["n"]), matrix_from_json(data["K"]))


@dataclass(frozen=True)
class BoundedRepresentation:
    rep: Representation
    beta: float
    kappa: int
    bound: float
    t: int

    def to_json(self):
        out = self.rep.to_json()
        out.update({"beta": self.beta, "kappa": self.kappa, "bound": self.bound, "t": self.t})
        return out

    @classmethod
    def from_json(cls, data):
        return cls(Representation.from_json(data), float(data["beta"]), int(data["kappa"]),
                   float(data["bound"]), int(data.get("t", data["kappa"])))


# ---------------------------------------------------------------------------
# chain factorization


def _split_lowest_variable(q):
    """``q = q_0 + z_1 q_1 + ... + z_d q_d`` with ``q_i`` free of ``z_1..z_{i-1}``."""
    d = q.nvars
    parts = [dict() for _ in range(d + 1)]
    for k, c in q.terms.items():
        i = next((j for j, e in enumerate(k) if e), None)
        if i is None:
            parts[0][k] = c
        else:
            kk = list(k)
            kk[i] -= 1
            parts[i + 1][tuple(kk)] = c
    return [MultiPoly(d, part, exact=q.exact) for part in parts]


def _constant_matrix(Q, exact):
    if exact:
        out = exact_zeros(*Q.shape)
        for idx in np.ndindex(*Q.shape):
            out[idx] = Q[idx].constant_term()
        return out
    out = np.zeros(Q.shape, dtype=complex)
    for idx in np.ndindex(*Q.shape):
        out[idx] = complex(Q[idx].constant_term())
    return out


def _stack_identities(b, copies, exact):
    if exact:
        out = exact_zeros(copies * b, b)
        for c in range(copies):
            for j in range(b):
                out[c * b + j, j] = QQi(1)
        return out
    return np.vstack([np.eye(b, dtype=complex)] * copies)


def factor_chain(q, prune=False):
    """Factor a polynomial (or matrix of polynomials) as a chain of length tdeg.

    Follows the inductive construction: split off one variable from every
    entry, which moves the problem to a wider row polynomial of total
    degree one less, and append the diagonal ``diag(I, z_1 I, ..., z_d I)``
    and the stacked identities.  With ``prune=True`` the resulting chain is
    passed through :func:`prune_chain`.
    """
    if isinstance(q, MultiPoly):
        Q = np.empty((1, 1), dtype=object)
        Q[0, 0] = q
    else:
        Q = np.asarray(q, dtype=object)
    d = Q.flat[0].nvars
    exact = Q.flat[0].exact
    t = max(poly_degrees(e)[1] for e in Q.flat)
    chain = _factor(Q, t, d, exact)
    return prune_chain(chain) if prune else chain


def _factor(Q, t, d, exact):
    if t == 0:
        return FactorChain((_constant_matrix(Q, exact),), (), d)
    a, b = Q.shape
    R = np.empty((a, (d + 1) * b), dtype=object)
    for r in range(a):
        for c in range(b):
            for i, part in enumerate(_split_lowest_variable(Q[r, c])):
                R[r, i * b + c] = part
    head = _factor(R, t - 1, d, exact)
    L_t = tuple(i for i in range(d + 1) for _ in range(b))
    C_t = _stack_identities(b, d + 1, exact)
    return FactorChain(head.matrices + (C_t,), head.diagonals + (L_t,), d)


def _is_zero_vec(v):
    return all(x == 0 for x in v)


def prune_chain(chain, merge=True):
    """Shrink a chain without changing its product.

    Removes slots whose column in ``C_{i-1}`` or row in ``C_i`` vanishes.  With
    ``merge=True`` it also fuses two slots of one diagonal that carry the
    same symbol and identical rows of ``C_i`` (their columns of ``C_{i-1}``
    are added), or identical columns of ``C_{i-1}`` (their rows of ``C_i``
    are added).
    """
    mats = [np.array(C, copy=True) for C in chain.matrices]
    diags = [list(L) for L in chain.diagonals]
    changed = True
    while changed:
        changed = False
        for i, L in enumerate(diags):
            left, right = mats[i], mats[i + 1]
            keep = [j for j in range(len(L))
                    if not _is_zero_vec(left[:, j]) and not _is_zero_vec(right[j, :])]
            if len(keep) < len(L):
                mats[i], mats[i + 1] = left[:, keep], right[keep, :]
                diags[i] = [L[j] for j in keep]
                changed = True
            if merge and _merge_slots(mats, diags, i):
                changed = True
    return FactorChain(tuple(mats), tuple(tuple(L) for L in diags), chain.nvars)


def _row_key(v):
    return tuple((x.re, x.im) if isinstance(x, QQi) else complex(x) for x in v)


def _merge_slots(mats, diags, i):
    L = diags[i]
    left, right = mats[i], mats[i + 1]
    changed = False
    # identical rows of the right factor: add the left columns
    groups = {}
    for j, s in enumerate(L):
        groups.setdefault((s, _row_key(right[j, :])), []).append(j)
    if len(groups) < len(L):
        order = sorted(groups.values(), key=lambda g: g[0])
        new_left = np.stack([sum((left[:, j] for j in g[1:]), left[:, g[0]]) for g in order], axis=1)
        right = right[[g[0] for g in order], :]
        L = [L[g[0]] for g in order]
        left = new_left
        changed = True
    # identical left columns: add the right rows
    groups = {}
    for j, s in enumerate(L):
        groups.setdefault((s, _row_key(left[:, j])), []).append(j)
    if len(groups) < len(L):
        order = sorted(groups.values(), key=lambda g: g[0])
        new_right = np.stack([sum((right[j, :] for j in g[1:]), right[g[0], :]) for g in order], axis=0)
        left = left[:, [g[0] for g in order]]
        L = [L[g[0]] for g in order]
        right = new_right
        changed = True
    if changed:
        mats[i], mats[i + 1], diags[i] = left, right, L
    return changed


# ---------------------------------------------------------------------------
# block determinant identity


@dataclass(frozen=True)
class CollapseResult:
    block_det: complex
    product_det: complex


def lemma_det_collapse(blocks):
    """Evaluate both sides of the cyclic block-determinant identity.

    ``blocks = [A_0, ..., A_t]`` with ``A_i`` of shape ``s_i x s_{i+1}`` and
    ``A_t`` of shape ``s_t x s_0``.  Returns the determinant of the big block
    matrix (identities on the diagonal, ``-A_i`` on the cyclic
    superdiagonal) and ``det(I - A_0 ... A_t)``.
    """
    blocks = [np.asarray(A) for A in blocks]
    t = len(blocks) - 1
    sizes = [A.shape[0] for A in blocks]
    for i, A in enumerate(blocks):
        nxt = sizes[(i + 1) % (t + 1)]
        if A.shape[1] != nxt:
            raise ValueError(f"A_{i} has shape {A.shape}, expected ({sizes[i]}, {nxt})")
    exact = all(is_exact(A) for A in blocks)
    if not exact:
        blocks = [as_float(A) for A in blocks]
    N = sum(sizes)
    offs = np.cumsum([0] + sizes)
    big = exact_identity(N) if exact else np.eye(N, dtype=complex)
    for i, A in enumerate(blocks):
        j = (i + 1) % (t + 1)
        sl = (slice(offs[i], offs[i + 1]), slice(offs[j], offs[j + 1]))
        big[sl] = big[sl] - A
    prod = blocks[0]
    for A in blocks[1:]:
        prod = prod @ A
    a = sizes[0]
    small = (exact_identity(a) if exact else np.eye(a)) - prod
    return CollapseResult(det(big), det(small))


# ---------------------------------------------------------------------------
# closing the loop


def chain_to_representation(chain):
    """Turn a chain for ``q = 1 - p`` into a representation of ``p``."""
    if chain.sizes[0] != 1 or chain.matrices[-1].shape[1] != 1:
        raise RepresentationError("closing the loop needs a scalar chain")
    exact = chain.exact
    d = chain.nvars
    if chain.t == 0:
        c = chain.matrices[0][0, 0]
        if c != 0:
            raise RepresentationError("chain is a nonzero constant, so p(0) != 1")
        K = exact_zeros(0, 0) if exact else np.zeros((0, 0), dtype=complex)
        return Representation((0,) * d, K)
    mats = chain.matrices if exact else tuple(as_float(C) for C in chain.matrices)
    sizes = [1] + [len(L) for L in chain.diagonals]
    N = sum(sizes)
    offs = np.cumsum([0] + sizes)
    C = exact_zeros(N, N) if exact else np.zeros((N, N), dtype=complex)
    t = chain.t
    for i in range(t):
        C[offs[i]:offs[i + 1], offs[i + 1]:offs[i + 2]] = mats[i]
    C[offs[t]:offs[t + 1], 0:1] = mats[t]
    symbols = [0] + [s for L in chain.diagonals for s in L]
    order = sorted(range(N), key=lambda j: symbols[j])
    G = C[np.ix_(order, order)]
    ell = symbols.count(0)
    n = tuple(symbols.count(i) for i in range(1, d + 1))
    G11, G12 = G[:ell, :ell], G[:ell, ell:]
    G21, G22 = G[ell:, :ell], G[ell:, ell:]
    eye = exact_identity(ell) if exact else np.eye(ell)
    try:
        X = solve(eye - G11, G12)
    except np.linalg.LinAlgError as exc:
        raise RepresentationError("I - G11 is singular; the chain violates p(0) = 1") from exc
    K = G22 + G21 @ X
    return Representation(n, K)


def _check_normalized(p):
    if p.constant_term() != 1:
        raise RepresentationError(f"p(0) = {p.constant_term()} but a representation needs p(0) = 1")


def represent_unconstrained(p, prune=False):
    """Some ``(n, K)`` with ``det(I - K Z_n) = p``; exact for exact ``p``."""
    _check_normalized(p)
    q = MultiPoly.constant(1, p.nvars, exact=p.exact) - p
    return chain_to_representation(factor_chain(q, prune=prune))


# ---------------------------------------------------------------------------
# norm-bounded construction


def monomial_factors(k, t):
    """Expanded factor list of ``z^k`` (z_1 first), padded with ones to length t."""
    out = [i + 1 for i, e in enumerate(k) for _ in range(e)]
    return out + [0] * (t - len(out))


def norm_bound(beta, kappa):
    """``beta * max{sqrt((beta^2-1)(1+beta+...+beta^(kappa-1))^2 + 1), 1}``."""
    geo = sum(beta ** i for i in range(kappa))
    return beta * max(sqrt(max((beta * beta - 1) * geo * geo + 1, 0.0)), 1.0)


def bounded_chain(p):
    """The balanced chain for ``1 - p``; returns ``(chain, beta, kappa, t)``."""
    _check_normalized(p)
    d = p.nvars
    support = [(k, complex(c)) for k, c in p.items() if any(k)]
    t = poly_degrees(p)[1]
    if not support:
        return None, 0.0, 0, 0
    mags = np.array([abs(c) for _, c in support])
    beta = float(mags.sum() ** (1.0 / (t + 1)))
    scale = beta ** ((1 - t) / 2)
    m = len(support)
    C0 = (-scale * np.sqrt(mags)).reshape(1, m).astype(complex)
    Ct = (scale * np.array([c / sqrt(abs(c)) for _, c in support])).reshape(m, 1)
    middle = [beta * np.eye(m, dtype=complex) for _ in range(t - 1)]
    factors = [monomial_factors(k, t) for k, _ in support]
    diags = tuple(tuple(f[j] for f in factors) for j in range(t))
    chain = FactorChain((C0, *middle, Ct), diags, d)
    kappa = 1 + sum(1 for L in diags if 0 in L)
    return chain, beta, kappa, t


def represent_bounded(p):
    """Representation with ``n = sum of the support`` and an a priori norm bound."""
    chain, beta, kappa, t = bounded_chain(p)
    if chain is None:
        rep = Representation((0,) * p.nvars, np.zeros((0, 0), dtype=complex))
        return BoundedRepresentation(rep, 0.0, 0, 0.0, 0)
    rep = chain_to_representation(chain)
    return BoundedRepresentation(rep, beta, kappa, norm_bound(beta, kappa), t)


# ---------------------------------------------------------------------------
# affine polynomials


def _exact_affine(a):
    mods = []
    for x in a:
        r = exact_sqrt(x.abs2())
        if r is None:
            return None
        mods.append(r)
    d = len(a)
    K = exact_zeros(d, d)
    for j in range(d):
        for k in range(d):
            if not mods[k]:
                continue
            g = exact_sqrt(mods[j] * mods[k])
            if g is None:
                return None
            K[j, k] = a[k] * (g / mods[k])
    return K


def represent_affine(a, exact=None):
    """Rank-one ``K`` with diagonal ``a`` representing ``1 - sum a_i z_i``.

    ``K[j, k] = sqrt(|a_j a_k|) exp(i arg a_k)``.  Exact input yields an exact
    ``K`` when every square root involved is rational; ``exact=True`` makes
    that a requirement, ``exact=False`` forces floats.
    """
    d = len(a)
    if exact is not False and all(isinstance(x, (QQi, int)) or type(x).__name__ in ("mpq", "Fraction")
                                  for x in a):
        K = _exact_affine([QQi.coerce(x) for x in a])
        if K is not None:
            return Representation((1,) * d, K)
        if exact:
            raise RepresentationError("square roots of |a_j a_k| are not all rational")
    elif exact:
        raise RepresentationError("exact construction needs Gaussian-rational input")
    av = np.array([complex(x) for x in a])
    mod = np.abs(av)
    phase = np.where(mod > 0, av / np.where(mod > 0, mod, 1), 1.0)
    K = np.sqrt(np.outer(mod, mod)) * phase[None, :]
    K[:, mod == 0] = 0
    return Representation((1,) * d, K.astype(complex))
