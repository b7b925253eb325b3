"""Dense complex linear algebra.

Matrices are numpy arrays.  Exact matrices use ``dtype=object`` with
:class:`~detrep.gaussian.QQi` entries; float matrices use ``complex128``.
Spectral quantities (SVD, norms, square roots) are float-only.
"""

from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement
from math import factorial, sqrt

import numpy as np

from .gaussian import QQi, parse_exact

MAX_PERMANENT_SIDE = 20


def is_exact(M):
    return np.asarray(M).dtype == object


def exact_zeros(rows, cols):
    out = np.empty((rows, cols), dtype=object)
    for idx in np.ndindex(rows, cols):
        out[idx] = QQi(0)
    return out


def exact_identity(n):
    out = exact_zeros(n, n)
    for i in range(n):
        out[i, i] = QQi(1)
    return out


def exact_matrix(rows):
    """Build an exact matrix from nested lists of ints, Fractions, strings or QQi."""
    rows = [list(r) for r in rows]
    out = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, r in enumerate(rows):
        for j, x in enumerate(r):
            out[i, j] = parse_exact(x) if isinstance(x, str) else QQi.coerce(x)
    return out


def as_float(M):
    M = np.asarray(M)
    if M.dtype == object:
        return np.vectorize(complex, otypes=[complex])(M) if M.size else M.astype(complex)
    return M.astype(complex)


def conj_transpose(M):
    M = np.asarray(M)
    if M.dtype == object:
        return np.vectorize(lambda x: x.conjugate(), otypes=[object])(M.T) if M.size else M.T
    return M.conj().T


# ---------------------------------------------------------------------------
# determinants and linear solves


def _det_exact(M):
    a = [list(r) for r in M]
    n = len(a)
    det = QQi(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return QQi(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        p = a[c][c]
        det = det * p
        row_c = a[c]
        for r in range(c + 1, n):
            f = a[r][c]
            if f:
                f = f / p
                row_r = a[r]
                for j in range(c + 1, n):
                    if row_c[j]:
                        row_r[j] = row_r[j] - f * row_c[j]
    return det


def det(M):
    """Determinant; exact elimination for exact input, LU otherwise."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("determinant of a non-square matrix")
    if M.shape[0] == 0:
        return QQi(1) if M.dtype == object else 1.0 + 0j
    if M.dtype == object:
        return _det_exact(M)
    return complex(np.linalg.det(M.astype(complex)))


def solve(A, B):
    """Solve ``A X = B``; exact Gauss-Jordan for exact input."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.dtype != object:
        return np.linalg.solve(A.astype(complex), as_float(B))
    n = A.shape[0]
    vec = B.ndim == 1
    Bm = B.reshape(n, -1)
    m = Bm.shape[1]
    a = [list(A[i]) + list(Bm[i]) for i in range(n)]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            raise np.linalg.LinAlgError("singular matrix")
        a[c], a[piv] = a[piv], a[c]
        inv = QQi(1) / a[c][c]
        a[c] = [x * inv if x else x for x in a[c]]
        for r in range(n):
            if r != c and a[r][c]:
                f = a[r][c]
                a[r] = [x - f * y if y else x for x, y in zip(a[r], a[c])]
    X = np.empty((n, m), dtype=object)
    for i in range(n):
        for j in range(m):
            X[i, j] = a[i][n + j]
    return X[:, 0] if vec else X


# ---------------------------------------------------------------------------
# SVD by one-sided Jacobi


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self):
        return (self.U * self.singular_values) @ self.V.conj().T


def svd(M, tol=1e-15, max_sweeps=80):
    """Thin SVD ``M = U diag(s) V^*`` via one-sided (Hestenes) Jacobi.

    Column pairs of the working matrix are rotated until mutually
    orthogonal, which diagonalizes ``M^* M`` implicitly; the rotations are
    accumulated into ``V``.
    """
    A = as_float(M).copy()
    m, n = A.shape
    if m < n:
        r = svd(A.conj().T, tol, max_sweeps)
        return SvdResult(r.V, r.singular_values, r.U)
    V = np.eye(n, dtype=complex)
    # columns this small are numerically zero; rotating them only risks underflow
    floor = (1e-17 * np.linalg.norm(A)) ** 2
    for _ in range(max_sweeps):
        worst = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                a, b = A[:, i], A[:, j]
                alpha = np.vdot(a, a).real
                beta = np.vdot(b, b).real
                gamma = np.vdot(a, b)
                g = abs(gamma)
                if min(alpha, beta) <= floor or g <= tol * sqrt(alpha * beta):
                    continue
                worst = max(worst, g / sqrt(alpha * beta))
                phase = gamma / g
                zeta = (beta - alpha) / (2.0 * g)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                bp = b * np.conj(phase)
                A[:, i], A[:, j] = c * a - s * bp, s * a + c * bp
                vi, vj = V[:, i].copy(), V[:, j] * np.conj(phase)
                V[:, i], V[:, j] = c * vi - s * vj, s * vi + c * vj
        if worst <= tol:
            break
    sv = np.linalg.norm(A, axis=0)
    order = np.argsort(-sv, kind="stable")
    sv, A, V = sv[order], A[:, order], V[:, order]
    U = np.zeros((m, n), dtype=complex)
    cutoff = (sv[0] if n else 0.0) * 1e-14
    good = sv > cutoff
    U[:, good] = A[:, good] / sv[good]
    r = int(good.sum())
    if r < n:
        Q, _ = np.linalg.qr(np.hstack([U[:, :r], np.eye(m, dtype=complex)]))
        U[:, r:] = Q[:, r:n]
    return SvdResult(U, sv, V)


def op_norm(M):
    """Largest singular value."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(svd(M).singular_values[0])


def psd_sqrt(H, tol=1e-10):
    """Hermitian PSD square root; eigenvalues in ``[-tol, 0)`` are clamped to 0."""
    H = as_float(H)
    if H.size == 0:
        return H.copy()
    if np.linalg.norm(H - H.conj().T, 2) > tol:
        raise ValueError("psd_sqrt: matrix is not Hermitian")
    Hs = (H + H.conj().T) / 2
    w, Q = np.linalg.eigh(Hs)
    if w[0] < -tol:
        raise ValueError(f"psd_sqrt: eigenvalue {w[0]:.3e} below -{tol:g}")
    r = np.sqrt(np.clip(w, 0.0, None))
    R = (Q * r) @ Q.conj().T
    return (R + R.conj().T) / 2


def julia_operator(K, tol=1e-10):
    """The unitary ``[[-K*, sqrt(I-K*K)], [sqrt(I-KK*), K]]`` of a contraction K."""
    K = as_float(K)
    n = K.shape[0]
    if K.shape != (n, n):
        raise ValueError("julia_operator expects a square matrix")
    nk = op_norm(K)
    if nk > 1 + tol:
        raise ValueError(f"K is not a contraction: norm {nk:.12g}")
    I = np.eye(n)
    Ks = K.conj().T
    clamp = max(1e-10, 3 * tol)
    return np.block([
        [-Ks, psd_sqrt(I - Ks @ K, clamp)],
        [psd_sqrt(I - K @ Ks, clamp), K],
    ])


# ---------------------------------------------------------------------------
# compounds and permanents


def compound(M, k):
    """k-th compound: all k x k minors, index sets in lexicographic order."""
    M = np.asarray(M)
    r, c = M.shape
    if not 1 <= k <= min(r, c):
        raise ValueError(f"compound order {k} out of range for a {r}x{c} matrix")
    rows = list(combinations(range(r), k))
    cols = list(combinations(range(c), k))
    if M.dtype == object:
        out = np.empty((len(rows), len(cols)), dtype=object)
        for a, I in enumerate(rows):
            for b, J in enumerate(cols):
                out[a, b] = _det_exact(M[np.ix_(I, J)])
        return out
    Mf = M.astype(complex)
    ri = np.array(rows)
    ci = np.array(cols)
    sub = Mf[ri[:, None, :, None], ci[None, :, None, :]]
    return np.linalg.det(sub)


def permanent(M):
    """Permanent by Ryser's formula with Gray-code row-sum updates."""
    M = np.asarray(M)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("permanent of a non-square matrix")
    if n > MAX_PERMANENT_SIDE:
        raise ValueError(f"permanent side {n} exceeds {MAX_PERMANENT_SIDE}")
    if n == 0:
        return QQi(1) if M.dtype == object else 1.0 + 0j
    exact = M.dtype == object
    if exact:
        rows = [list(r) for r in M]
        sums = [QQi(0)] * n
        total = QQi(0)
    else:
        A = M.astype(complex)
        sums = np.zeros(n, dtype=complex)
        total = 0j
    gray = 0
    for i in range(1, 1 << n):
        g = i ^ (i >> 1)
        j = (g ^ gray).bit_length() - 1
        add = g > gray
        gray = g
        if exact:
            if add:
                sums = [s + r[j] for s, r in zip(sums, rows)]
            else:
                sums = [s - r[j] for s, r in zip(sums, rows)]
            prod = QQi(1)
            for s in sums:
                prod = prod * s
        else:
            sums = sums + A[:, j] if add else sums - A[:, j]
            prod = np.prod(sums)
        if bin(g).count("1") % 2:
            total = total - prod
        else:
            total = total + prod
    return total if n % 2 == 0 else -total


def _multiplicity_factorial(idx):
    out = 1
    for v in set(idx):
        out *= factorial(idx.count(v))
    return out


def permanental_compound(M, k):
    """Matrix of the k-th symmetric power in the orthonormal multiset basis.

    Entry ``(a, b)`` is ``per(M[a, b]) / sqrt(mu(a)! mu(b)!)`` where ``a, b``
    run over nondecreasing index k-tuples (multisets) in lexicographic order
    and ``mu(a)!`` is the product of factorials of the multiplicities.
    """
    M = as_float(M)
    r, c = M.shape
    if k < 1:
        raise ValueError("permanental compound order must be positive")
    if k > MAX_PERMANENT_SIDE:
        raise ValueError(f"order {k} exceeds {MAX_PERMANENT_SIDE}")
    rows = list(combinations_with_replacement(range(r), k))
    cols = list(combinations_with_replacement(range(c), k))
    out = np.empty((len(rows), len(cols)), dtype=complex)
    for a, I in enumerate(rows):
        for b, J in enumerate(cols):
            norm = sqrt(_multiplicity_factorial(I) * _multiplicity_factorial(J))
            out[a, b] = permanent(M[np.ix_(I, J)]) / norm
    return out


# ---------------------------------------------------------------------------
# JSON


def matrix_to_json(M):
    M = np.asarray(M)
    rows, cols = M.shape
    if M.dtype == object:
        entries = [[_q(x.re), _q(x.im)] for x in M.flat]
        return {"rows": rows, "cols": cols, "mode": "exact", "entries": entries}
    entries = [[float(x.real), float(x.imag)] for x in M.astype(complex).flat]
    return {"rows": rows, "cols": cols, "entries": entries}


def matrix_from_json(data):
    rows, cols = int(data["rows"]), int(data["cols"])
    entries = data["entries"]
    if len(entries) != rows * cols:
        raise ValueError(f"matrix JSON has {len(entries)} entries, expected {rows * cols}")
    exact = data.get("mode") == "exact" or (
        entries and all(isinstance(v, (str, int)) for e in entries for v in e)
        and any(isinstance(v, str) for e in entries for v in e)
    )
    if exact:
        out = np.empty((rows, cols), dtype=object)
        for i, (re, im) in enumerate(entries):
            out.flat[i] = QQi(str(re), str(im))
        return out
    arr = np.array([complex(float(re), float(im)) for re, im in entries], dtype=complex)
    return arr.reshape(rows, cols)


def _q(q):
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
