"""Sparse multivariable polynomials over the Gaussian rationals or floats.

A :class:`MultiPoly` maps exponent tuples ``k`` (little-endian in the
variable index, ``k[0]`` is the exponent of ``z1``) to nonzero
coefficients.  Exact polynomials carry :class:`~detrep.gaussian.QQi`
coefficients, float polynomials carry Python ``complex``.  The two modes
never mix implicitly; use :meth:`MultiPoly.to_float` to promote.
"""

from fractions import Fraction
from types import MappingProxyType

import numpy as np

from .gaussian import QQi, parse_exact, to_mpq


class ModeError(TypeError):
    """Exact and float objects were combined without explicit promotion."""


def _is_exact_scalar(c):
    return isinstance(c, (QQi, int, Fraction)) or type(c).__name__ == "mpq"


def _coerce(c, exact):
    if exact:
        if isinstance(c, (complex, float)):
            raise ModeError("float coefficient in an exact polynomial")
        return QQi.coerce(c)
    return complex(c)


def grlex_key(k):
    """Graded order: total degree first, then z1-heavier monomials first."""
    return (sum(k), tuple(-e for e in k))


class MultiPoly:
    """Immutable sparse polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "exact", "_terms")

    def __init__(self, nvars, terms=(), exact=None):
        if nvars < 1:
            raise ValueError("a polynomial needs at least one variable")
        items = list(terms.items() if hasattr(terms, "items") else terms)
        if exact is None:
            exact = all(_is_exact_scalar(c) for _, c in items)
        store = {}
        for k, c in items:
            k = tuple(int(e) for e in k)
            if len(k) != nvars:
                raise ValueError(f"exponent {k} has length {len(k)}, expected {nvars}")
            if any(e < 0 for e in k):
                raise ValueError(f"negative exponent in {k}")
            c = _coerce(c, exact)
            if k in store:
                c = store[k] + c
            store[k] = c
        self.nvars = nvars
        self.exact = bool(exact)
        self._terms = {k: c for k, c in store.items() if c != 0}

    # constructors
    @classmethod
    def zero(cls, nvars, exact=True):
        return cls(nvars, {}, exact=exact)

    @classmethod
    def constant(cls, c, nvars, exact=True):
        return cls(nvars, {(0,) * nvars: c}, exact=exact)

    @classmethod
    def variable(cls, i, nvars, exact=True):
        """The coordinate ``z_{i+1}`` (0-based ``i``)."""
        k = [0] * nvars
        k[i] = 1
        return cls(nvars, {tuple(k): 1}, exact=exact)

    # views
    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def items(self):
        """Terms in graded order."""
        return sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0]))

    def coeff(self, k):
        k = tuple(k)
        if k in self._terms:
            return self._terms[k]
        return QQi(0) if self.exact else 0j

    def constant_term(self):
        return self.coeff((0,) * self.nvars)

    def is_zero(self):
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def to_float(self):
        return MultiPoly(self.nvars, {k: complex(c) for k, c in self._terms.items()}, exact=False)

    def to_exact(self):
        if self.exact:
            return self
        return MultiPoly(self.nvars, {k: QQi.coerce(c) for k, c in self._terms.items()}, exact=True)

    # ring operations
    def _check(self, other):
        if not isinstance(other, MultiPoly):
            raise TypeError("expected a MultiPoly")
        if other.nvars != self.nvars:
            raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
        if other.exact != self.exact:
            raise ModeError("cannot mix exact and float polynomials")

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(other, self.nvars, exact=self.exact)
        return poly_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return poly_scale(self, -1)

    def __sub__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(other, self.nvars, exact=self.exact)
        return poly_add(self, poly_scale(other, -1))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, MultiPoly):
            return poly_mul(self, other)
        return poly_scale(self, other)

    __rmul__ = __mul__

    def __pow__(self, e):
        if not isinstance(e, int) or e < 0:
            return NotImplemented
        result = MultiPoly.constant(1, self.nvars, exact=self.exact)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return (self.nvars == other.nvars and self.exact == other.exact
                and self._terms == other._terms)

    def __hash__(self):
        return hash((self.nvars, self.exact, frozenset(self._terms)))

    def __call__(self, *z):
        if len(z) == 1 and not np.isscalar(z[0]) and not isinstance(z[0], QQi):
            z = tuple(z[0])
        return poly_eval(self, z)

    def __repr__(self):
        return f"MultiPoly({self.nvars}, {self!s}, exact={self.exact})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for k, c in self.items():
            mono = "*".join(
                f"z{i + 1}" if e == 1 else f"z{i + 1}^{e}" for i, e in enumerate(k) if e
            )
            cs = str(c) if self.exact else f"{c:g}"
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # serialization
    def to_json(self):
        terms = []
        for k, c in self.items():
            if self.exact:
                terms.append({"exp": list(k), "re": _qstr(c.re), "im": _qstr(c.im)})
            else:
                terms.append({"exp": list(k), "re": c.real, "im": c.imag})
        return {"vars": self.nvars, "mode": "exact" if self.exact else "float", "terms": terms}

    @classmethod
    def from_json(cls, data):
        d = int(data["vars"])
        mode = data.get("mode", "exact")
        if mode not in ("exact", "float"):
            raise ValueError(f"unknown polynomial mode {mode!r}")
        exact = mode == "exact"
        terms = {}
        for t in data["terms"]:
            k = tuple(t["exp"])
            if exact:
                c = QQi(_parse_rational(t.get("re", 0)), _parse_rational(t.get("im", 0)))
            else:
                c = complex(float(t.get("re", 0)), float(t.get("im", 0)))
            terms[k] = terms.get(k, 0) + c
        return cls(d, terms, exact=exact)


def _qstr(q):
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _parse_rational(v):
    if isinstance(v, (list, tuple)):
        return to_mpq(Fraction(int(v[0]), int(v[1])))
    if isinstance(v, float):
        raise ValueError("exact polynomial coefficients must be strings or integers")
    return to_mpq(str(v))


def parse_coefficient(text, exact=True):
    if exact:
        return parse_exact(text)
    return complex(text.replace("i", "j"))


def poly_add(p, q):
    p._check(q)
    out = dict(p._terms)
    for k, c in q._terms.items():
        out[k] = out[k] + c if k in out else c
    return MultiPoly(p.nvars, out, exact=p.exact)


def poly_scale(p, c):
    c = _coerce(c, p.exact)
    return MultiPoly(p.nvars, {k: c * v for k, v in p._terms.items()}, exact=p.exact)


def poly_mul(p, q):
    p._check(q)
    out = {}
    for k1, c1 in p._terms.items():
        for k2, c2 in q._terms.items():
            k = tuple(a + b for a, b in zip(k1, k2))
            c = c1 * c2
            out[k] = out[k] + c if k in out else c
    return MultiPoly(p.nvars, out, exact=p.exact)


def poly_degrees(p):
    """Return ``(multidegree, total_degree)``; constants give zeros."""
    if not p._terms:
        return (0,) * p.nvars, 0
    ks = list(p._terms)
    deg = tuple(max(k[i] for k in ks) for i in range(p.nvars))
    return deg, max(sum(k) for k in ks)


def poly_reverse(p, n):
    """``z^n * conj(p)(1/z)``: the coefficient of ``z^(n-k)`` is ``conj(p_k)``."""
    n = tuple(int(e) for e in n)
    if len(n) != p.nvars:
        raise ValueError("degree bound has the wrong number of variables")
    deg, _ = poly_degrees(p)
    if any(m > b for m, b in zip(deg, n)):
        raise ValueError(f"reversal degree {n} is below deg p = {deg}")
    out = {tuple(b - e for b, e in zip(n, k)): c.conjugate() for k, c in p._terms.items()}
    return MultiPoly(p.nvars, out, exact=p.exact)


def _monomial(z, k):
    r = 1
    for zi, e in zip(z, k):
        if e:
            r = r * zi ** e
    return r


def poly_eval(p, z):
    z = tuple(z)
    if len(z) != p.nvars:
        raise ValueError(f"point has {len(z)} coordinates, polynomial has {p.nvars} variables")
    if p.exact and all(_is_exact_scalar(v) for v in z):
        z = tuple(QQi.coerce(v) for v in z)
        total = QQi(0)
    else:
        z = tuple(complex(v) for v in z)
        total = 0j
    for k, c in p._terms.items():
        total = total + (c if not isinstance(total, complex) else complex(c)) * _monomial(z, k)
    return total


class CompiledPoly:
    """Float polynomial prepared for vectorized evaluation at many points."""

    def __init__(self, p):
        items = p.items()
        self.nvars = p.nvars
        self.exps = np.array([k for k, _ in items], dtype=int).reshape(len(items), p.nvars)
        self.coeffs = np.array([complex(c) for _, c in items], dtype=complex)

    def __call__(self, Z):
        """Evaluate at the rows of ``Z`` (shape ``(..., d)``)."""
        Z = np.asarray(Z, dtype=complex)
        out = np.zeros(Z.shape[:-1], dtype=complex)
        maxdeg = self.exps.max(axis=0) if len(self.coeffs) else np.zeros(self.nvars, int)
        powers = []
        for i in range(self.nvars):
            pw = [np.ones(Z.shape[:-1], dtype=complex)]
            for _ in range(int(maxdeg[i])):
                pw.append(pw[-1] * Z[..., i])
            powers.append(pw)
        for k, c in zip(self.exps, self.coeffs):
            term = np.full(Z.shape[:-1], c, dtype=complex)
            for i, e in enumerate(k):
                if e:
                    term = term * powers[i][e]
            out += term
        return out

    def on_torus(self, theta, radius=1.0):
        """Evaluate at ``radius * exp(i*theta)`` for angle arrays of shape ``(..., d)``."""
        return self(radius * np.exp(1j * np.asarray(theta, dtype=float)))


class CommutingTuple:
    """A d-tuple of square matrices of common side, checked to commute."""

    def __init__(self, matrices, commutation_tolerance=1e-12):
        mats = [np.asarray(m) for m in matrices]
        if not mats:
            raise ValueError("empty tuple")
        n = mats[0].shape[0]
        for m in mats:
            if m.ndim != 2 or m.shape != (n, n):
                raise ValueError("tuple matrices must be square of a common side")
        self.exact = all(m.dtype == object for m in mats)
        if not self.exact:
            mats = [m.astype(complex) for m in mats]
        self.matrices = tuple(mats)
        self.commutation_tolerance = commutation_tolerance
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                c = mats[i] @ mats[j] - mats[j] @ mats[i]
                if self.exact:
                    ok = all(x == 0 for x in c.flat)
                else:
                    ok = np.linalg.norm(c, 2) <= commutation_tolerance
                if not ok:
                    raise ValueError(f"T{i + 1} and T{j + 1} do not commute")

    @property
    def d(self):
        return len(self.matrices)

    @property
    def side(self):
        return self.matrices[0].shape[0]

    def scaled(self, rho):
        mats = [np.asarray(m, dtype=complex) * rho for m in self.matrices]
        return CommutingTuple(mats, self.commutation_tolerance)

    def contraction_flags(self, tol=1e-10):
        from .linalg import op_norm
        return [op_norm(m) <= 1 + tol for m in self.matrices]

    def to_json(self):
        from .linalg import matrix_to_json
        return {"d": self.d, "matrices": [matrix_to_json(m) for m in self.matrices]}

    @classmethod
    def from_json(cls, data, commutation_tolerance=1e-12):
        from .linalg import matrix_from_json
        mats = [matrix_from_json(m) for m in data["matrices"]]
        if "d" in data and int(data["d"]) != len(mats):
            raise ValueError("tuple JSON: 'd' does not match the number of matrices")
        return cls(mats, commutation_tolerance)


def poly_eval_tuple(p, T):
    """``sum_k p_k T_1^k1 ... T_d^kd`` for a commuting tuple ``T``."""
    if T.d != p.nvars:
        raise ValueError(f"tuple has {T.d} matrices, polynomial has {p.nvars} variables")
    exact = p.exact and T.exact
    if not exact:
        mats = [np.asarray(m, dtype=complex) for m in T.matrices]
        eye = np.eye(T.side, dtype=complex)
        out = np.zeros((T.side, T.side), dtype=complex)
    else:
        from .linalg import exact_identity, exact_zeros
        mats = list(T.matrices)
        eye = exact_identity(T.side)
        out = exact_zeros(T.side, T.side)
    cache = {}

    def power(i, e):
        if e == 0:
            return eye
        if (i, e) not in cache:
            cache[(i, e)] = power(i, e - 1) @ mats[i]
        return cache[(i, e)]

    for k, c in p.items():
        term = eye
        for i, e in enumerate(k):
            if e:
                term = term @ power(i, e)
        out = out + (c if exact else complex(c)) * term
    return out
