"""Expansion of ``det(I - K Z_n)`` and numerical checks on polynomials.

``det_expand`` sums signed principal minors of K grouped by how many
indices each minor takes from every variable block.  ``pmrp_check`` does
the same bookkeeping the slow way (one determinant per block-compatible
index set) so the two can be compared.  ``stability_radius`` and
``sup_norm_torus`` are grid-plus-refinement estimators on the polydisk.
"""

from dataclasses import dataclass, field
from itertools import combinations, product
from math import pi, sqrt

import numpy as np
from scipy.optimize import minimize

from .gaussian import QQi
from .linalg import as_float, det, is_exact, op_norm
from .poly import CompiledPoly, MultiPoly, poly_degrees, poly_eval

MAX_EXPAND_SIZE = 24

# shifts tried in turn for the exact principal-minor sweep
_SHIFTS = ("7/5", "-11/6", "13/17", "-19/23", "29/31", "3/37")


# ---------------------------------------------------------------------------
# principal minors


def _sweep_minors(A, N):
    """All principal minors by nested Schur complements, or None on a zero pivot.

    Subsets are visited depth first with increasing largest element; the
    state carried down is the Schur complement of the current subset on the
    indices above it, so each child minor is its parent times one pivot.
    """
    minors = [None] * (1 << N)
    minors[0] = QQi(1)

    def visit(mask, dv, S, idx):
        m = len(idx)
        for p in range(m):
            piv = S[p][p]
            child = mask | (1 << idx[p])
            if not piv:
                return False
            cd = dv * piv
            minors[child] = cd
            if p + 1 < m:
                inv = QQi(1) / piv
                Sp = S[p]
                newS = []
                for a in range(p + 1, m):
                    row = S[a]
                    f = row[p]
                    if f:
                        f = f * inv
                        newS.append([row[b] - f * Sp[b] for b in range(p + 1, m)])
                    else:
                        newS.append(row[p + 1:m])
                if not visit(child, cd, newS, idx[p + 1:]):
                    return False
        return True

    ok = visit(0, QQi(1), [list(r) for r in A], list(range(N)))
    return minors if ok else None


def _principal_minors_exact(K):
    """Exact principal minors of K indexed by bitmask.

    The sweep runs on ``K - cI`` for a rational shift ``c`` (a zero pivot of
    the unshifted matrix is common in structured K, a zero pivot of the
    shifted one forces the next shift).  The minors of K are recovered by a
    subset-sum transform: ``det K[a] = sum_{b <= a} c^{|a|-|b|} det (K-cI)[b]``.
    """
    N = K.shape[0]
    for cs in _SHIFTS:
        c = QQi(cs)
        A = [[K[i, j] - c if i == j else K[i, j] for j in range(N)] for i in range(N)]
        shifted = _sweep_minors(A, N)
        if shifted is not None:
            break
    else:
        raise ArithmeticError("no pivot-free shift found for the principal-minor sweep")
    inv_c = QQi(1) / c
    pw = [QQi(1)]
    for _ in range(N):
        pw.append(pw[-1] * inv_c)
    g = [shifted[m] * pw[bin(m).count("1")] for m in range(1 << N)]
    for i in range(N):
        bit = 1 << i
        for m in range(1 << N):
            if m & bit:
                g[m] = g[m] + g[m ^ bit]
    cpw = [QQi(1)]
    for _ in range(N):
        cpw.append(cpw[-1] * c)
    return [g[m] * cpw[bin(m).count("1")] for m in range(1 << N)]


def _principal_minors_float(K, chunk=20000):
    K = as_float(K)
    N = K.shape[0]
    out = np.zeros(1 << N, dtype=complex)
    out[0] = 1.0
    for r in range(1, N + 1):
        subsets = list(combinations(range(N), r))
        for start in range(0, len(subsets), chunk):
            idx = np.array(subsets[start:start + chunk])
            sub = K[idx[:, :, None], idx[:, None, :]]
            dets = np.linalg.det(sub)
            masks = (1 << idx).sum(axis=1)
            out[masks] = dets
    return out


def principal_minors(K):
    """Principal minors of K as a list/array indexed by bitmask of the index set."""
    K = np.asarray(K)
    N = K.shape[0]
    if N > MAX_EXPAND_SIZE:
        raise ValueError(f"matrix side {N} exceeds the expansion cap {MAX_EXPAND_SIZE}")
    if N == 0:
        return [QQi(1)] if is_exact(K) else np.ones(1, dtype=complex)
    return _principal_minors_exact(K) if is_exact(K) else _principal_minors_float(K)


def _block_masks(n):
    masks, start = [], 0
    for ni in n:
        masks.append(((1 << ni) - 1) << start)
        start += ni
    return masks


def det_expand(K, n):
    """The polynomial ``det(I - K Z_n)`` via signed principal minors."""
    n = tuple(int(v) for v in n)
    K = np.asarray(K)
    N = sum(n)
    if K.shape != (N, N):
        raise ValueError(f"K has shape {K.shape}, expected {(N, N)} for n = {n}")
    d = len(n)
    exact = is_exact(K)
    minors = principal_minors(K)
    bms = _block_masks(n)
    terms = {}
    if exact:
        for mask, m in enumerate(minors):
            if not m:
                continue
            k = tuple(bin(mask & b).count("1") for b in bms)
            v = -m if sum(k) % 2 else m
            terms[k] = terms[k] + v if k in terms else v
        return MultiPoly(d, terms, exact=True)
    masks = np.arange(1 << N, dtype=np.int64)
    counts = np.stack([np.bitwise_count(masks & b) for b in bms], axis=1).astype(int)
    signs = np.where(counts.sum(axis=1) % 2, -1.0, 1.0)
    vals = signs * minors
    keys = counts @ np.cumprod((1,) + tuple(v + 1 for v in n[:-1]))
    uniq, inv = np.unique(keys, return_inverse=True)
    sums = np.zeros(len(uniq), dtype=complex)
    np.add.at(sums, inv, vals)
    first = np.zeros(len(uniq), dtype=int)
    first[inv[::-1]] = np.arange(len(inv))[::-1]
    for u, s, f in zip(uniq, sums, first):
        if s != 0:
            terms[tuple(counts[f])] = s
    return MultiPoly(d, terms, exact=False)


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    max_abs_residual: float
    residuals: dict
    norm_of_K: float
    tolerance: float
    bound_checked: bool = None
    stability_upper: float = None

    @property
    def passed(self):
        return self.max_abs_residual <= self.tolerance

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"

    def to_json(self):
        res = [{"exp": list(k), "residual": float(v)} for k, v in sorted(self.residuals.items())]
        out = {
            "verdict": self.verdict,
            "max_abs_residual": float(self.max_abs_residual),
            "tolerance": self.tolerance,
            "norm_of_K": self.norm_of_K,
            "residuals": res,
        }
        if self.bound_checked is not None:
            out["bound_checked"] = self.bound_checked
            out["stability_upper"] = self.stability_upper
        return out


def verify_representation(p, rep, tol=1e-9, semistable=False, stability_upper=None):
    """Compare ``det(I - K Z_n)`` with ``p`` coefficient by coefficient.

    With ``semistable=True`` the report also checks the necessary condition
    ``||K|| >= 1/s(p)`` against an upper estimate of the stability radius.
    """
    if len(rep.n) != p.nvars:
        raise ValueError("representation and polynomial disagree on the number of variables")
    expanded = det_expand(rep.K, rep.n)
    if expanded.exact and p.exact:
        diff = expanded - p
        residuals = {k: abs(complex(c)) for k, c in diff.terms.items()}
        for k in set(p.terms) | set(expanded.terms):
            residuals.setdefault(k, 0.0)
    else:
        e, q = expanded.to_float(), p.to_float()
        keys = set(e.terms) | set(q.terms)
        residuals = {k: abs(complex(e.coeff(k)) - complex(q.coeff(k))) for k in keys}
    worst = max(residuals.values(), default=0.0)
    nk = op_norm(rep.K) if rep.size else 0.0
    report = VerificationReport(worst, residuals, nk, tol)
    if semistable:
        if stability_upper is None:
            stability_upper = stability_radius(p).upper
        report.stability_upper = stability_upper
        report.bound_checked = bool(np.isinf(stability_upper) or nk >= 1.0 / stability_upper - tol)
    return report


@dataclass
class PmrpResult:
    ok: bool
    residuals: dict
    sums: dict = field(repr=False)


def pmrp_check(K, n, target, m, tol=0.0):
    """Check the principal-minor relations for every ``k <= m``.

    ``target`` maps exponent tuples to the wanted coefficients ``p_k``
    (missing entries mean 0).  Each relation is evaluated directly as a sum
    of determinants over the block-compatible index sets.
    """
    n = tuple(int(v) for v in n)
    m = tuple(int(v) for v in m)
    if any(mi > ni for mi, ni in zip(m, n)):
        raise ValueError(f"m = {m} must not exceed n = {n}")
    K = np.asarray(K)
    if sum(n) > MAX_EXPAND_SIZE:
        raise ValueError(f"size {sum(n)} exceeds the expansion cap {MAX_EXPAND_SIZE}")
    exact = is_exact(K)
    target = dict(target.items() if hasattr(target, "items") else target)
    starts = np.cumsum((0,) + n)
    sums, residuals = {}, {}
    for k in product(*(range(mi + 1) for mi in m)):
        total = QQi(0) if exact else 0j
        for parts in product(*(combinations(range(starts[i], starts[i + 1]), k[i])
                               for i in range(len(n)))):
            idx = [j for part in parts for j in part]
            total = total + det(K[np.ix_(idx, idx)])
        if sum(k) % 2:
            total = -total
        sums[k] = total
        want = target.get(k, 0)
        if exact and not isinstance(want, (complex, float)):
            residuals[k] = abs(complex(total - QQi.coerce(want)))
        else:
            residuals[k] = abs(complex(total) - complex(want))
    ok = all(r <= tol for r in residuals.values())
    return PmrpResult(ok, residuals, sums)


# ---------------------------------------------------------------------------
# stability radius


@dataclass
class RadiusEstimate:
    lower: float
    upper: float
    witness: tuple = None
    certified_radius_method: str = "coefficient"

    def to_json(self):
        w = None if self.witness is None else [[z.real, z.imag] for z in self.witness]
        return {
            "lower": self.lower,
            "upper": None if np.isinf(self.upper) else self.upper,
            "witness": w,
            "lower_method": self.certified_radius_method,
        }


def _coefficient_radius(p):
    """Largest r with sum |p_k| r^|k| <= 1 over the nonconstant terms."""
    terms = [(sum(k), abs(complex(c))) for k, c in p.terms.items() if any(k)]
    if not terms:
        return np.inf

    def f(r):
        return sum(a * r ** e for e, a in terms)

    lo, hi = 0.0, 1.0
    while f(hi) < 1:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if f(mid) < 1:
            lo = mid
        else:
            hi = mid
    return lo


def _slice_coefficients(p, thetas):
    """Coefficients in lambda of ``p(lambda*w)``, ``w = (1, e^{i th_2}, ...)``.

    ``thetas`` has shape ``(M, d-1)``; returns ``(M, D+1)`` ascending.
    """
    D = poly_degrees(p)[1]
    out = np.zeros((thetas.shape[0], D + 1), dtype=complex)
    for k, c in p.terms.items():
        phase = np.exp(1j * (thetas @ np.array(k[1:], dtype=float))) if len(k) > 1 else 1.0
        out[:, sum(k)] += complex(c) * phase
    return out


def _min_root_modulus(coeffs):
    """Smallest root modulus of each row polynomial (constant term 1 assumed).

    Roots are taken from the reversed polynomial, which is monic because the
    constant term is 1, so its companion matrix always exists.
    """
    M, D1 = coeffs.shape
    D = D1 - 1
    if D == 0:
        return np.full(M, np.inf)
    c0 = coeffs[:, :1]
    rev = coeffs / c0  # monic reversed: mu^D + c1 mu^(D-1) + ... + cD
    comp = np.zeros((M, D, D), dtype=complex)
    comp[:, 0, :] = -rev[:, 1:]
    if D > 1:
        comp[:, np.arange(1, D), np.arange(D - 1)] = 1.0
    mu = np.linalg.eigvals(comp)
    big = np.abs(mu).max(axis=1)
    with np.errstate(divide="ignore"):
        return np.where(big > 0, 1.0 / big, np.inf)


def _polish_zero(p, coeffs, theta):
    """Newton-polish the smallest root of one slice; return the zero point."""
    poly = np.polynomial.Polynomial(coeffs)
    roots = poly.roots()
    if len(roots) == 0:
        return None
    lam = roots[np.argmin(np.abs(roots))]
    dpoly = poly.deriv()
    for _ in range(20):
        f = poly(lam)
        df = dpoly(lam)
        if df == 0:
            break
        step = f / df
        lam = lam - step
        if abs(step) <= 1e-17 * max(1.0, abs(lam)):
            break
    w = np.concatenate([[1.0], np.exp(1j * np.asarray(theta))])
    return tuple(lam * w)


def _upper_radius(p, budget):
    d = p.nvars
    cp = CompiledPoly(p.to_float())
    scale_terms = [(np.array(k), abs(complex(c))) for k, c in p.terms.items()]
    if d == 1:
        thetas = np.zeros((1, 0))
    else:
        G = max(4, int(budget ** (1.0 / (d - 1))))
        G = min(G, 256)
        axes = [np.linspace(0, 2 * pi, G, endpoint=False)] * (d - 1)
        thetas = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d - 1)
    F = _min_root_modulus(_slice_coefficients(p, thetas))
    if not np.isfinite(F).any():
        return np.inf, None
    best = np.argsort(F)[:4]
    candidates = [(F[i], thetas[i]) for i in best if np.isfinite(F[i])]
    if d > 1:
        def obj(th):
            v = _min_root_modulus(_slice_coefficients(p, np.atleast_2d(th)))[0]
            return v if np.isfinite(v) else 1e300

        refined = []
        for _, th in candidates:
            res = minimize(obj, th, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 400})
            refined.append((res.fun, res.x))
        candidates += refined
    best_r, best_z = np.inf, None
    for _, th in candidates:
        coeffs = _slice_coefficients(p, np.atleast_2d(th))[0]
        z = _polish_zero(p, coeffs, th)
        if z is None:
            continue
        zv = np.array(z)
        val = abs(cp(zv))
        scale = max(1.0, sum(a * np.prod(np.abs(zv) ** k) for k, a in scale_terms))
        if val <= 1e-12 * scale:
            r = float(np.abs(zv).max())
            if r < best_r:
                best_r, best_z = r, z
    return best_r, best_z


def _torus_zero_free(p, rho, budget, start=8):
    """Branch and bound: is ``|p| > 0`` on the torus of radius rho?

    A cell of half-width h around angle vector c is cleared when
    ``|p(c)| > min(L*rho*h, h*sum_i|dp/dth_i(c)| + M2*h^2/2)`` with the
    global Lipschitz constant ``L = sum |p_k| |k| rho^(|k|-1)`` and the
    second-order bound ``M2 = sum |p_k| |k|^2 rho^|k|``.
    """
    d = p.nvars
    items = [(np.array(k, dtype=float), complex(c)) for k, c in p.terms.items()]
    exps = np.array([k for k, _ in items])
    coeffs = np.array([c for _, c in items])
    absk = exps.sum(axis=1)
    mags = np.abs(coeffs)
    L = float(np.sum(mags * absk * rho ** np.maximum(absk - 1, 0)))
    M2 = float(np.sum(mags * absk ** 2 * rho ** absk))
    slack = 1e-13 * float(np.sum(mags * rho ** absk))
    h = pi / start
    axes = [np.linspace(0, 2 * pi, start, endpoint=False) + h] * d
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    spent = 0
    offsets = np.array(list(product((-0.5, 0.5), repeat=d)))
    while len(centers):
        spent += len(centers)
        if spent > budget:
            return False
        mon = coeffs * (rho ** absk) * np.exp(1j * centers @ exps.T)
        val = np.abs(mon.sum(axis=1))
        grad = np.abs(mon @ exps).sum(axis=1)
        bound = np.minimum(L * rho * h, h * grad + 0.5 * M2 * h * h) + slack
        if np.any(val <= slack * 10):
            return False
        bad = centers[val <= bound]
        h /= 2
        centers = (bad[:, None, :] + offsets[None, :, :] * 2 * h).reshape(-1, d)
    return True


def _diagonal_zero_count(p, rho):
    coeffs = np.zeros(poly_degrees(p)[1] + 1, dtype=complex)
    for k, c in p.terms.items():
        coeffs[sum(k)] += complex(c)
    roots = np.polynomial.Polynomial(coeffs).roots() if len(coeffs) > 1 else []
    return int(np.sum(np.abs(roots) <= rho))


def certify_zero_free(p, rho, budget=2_000_000):
    """True when ``p`` provably has no zero in the closed polydisk of radius rho.

    The torus of radius rho is cleared by branch and bound; then the zero
    count of the diagonal slice ``lambda -> p(lambda, ..., lambda)`` inside
    ``|lambda| <= rho`` is taken.  Zero-freeness on the torus keeps that count
    constant over all slices ``lambda*w``, ``|w_i| = 1``, and a zero of
    smallest polyradius always lies on such a slice.
    """
    if not _torus_zero_free(p, rho, budget):
        return False
    return _diagonal_zero_count(p, rho) == 0


def stability_radius(p, budget=2_000_000, gap=1e-3, max_rounds=30):
    """Bracket ``s(p) = sup{r : p has no zero in r*D^d}``.

    The upper bound is the polyradius of an actual zero, found by searching
    slices ``lambda -> p(lambda*w)`` over a torus grid of directions and
    refining.  The lower bound starts from the coefficient bound and is
    raised by bisection with :func:`certify_zero_free`.
    """
    if p.constant_term() == 0:
        raise ValueError("stability radius needs p(0) != 0")
    if p.constant_term() != 1:
        p = p * (1 / (p.constant_term() if not p.exact else p.constant_term()))
    upper, witness = _upper_radius(p, min(budget, 20000))
    lower = _coefficient_radius(p)
    method = "coefficient"
    if np.isinf(lower):
        return RadiusEstimate(np.inf, np.inf, None, method)
    lower = min(lower, upper)
    hi = upper if np.isfinite(upper) else max(2 * lower, 1.0)
    spent = 0
    rounds = 0
    while hi - lower > gap and rounds < max_rounds and spent < budget:
        rounds += 1
        mid = (lower + hi) / 2
        if certify_zero_free(p, mid, budget=budget - spent):
            lower = mid
            method = "torus-certificate"
        else:
            hi = mid
        spent += budget // max_rounds
    return RadiusEstimate(float(lower), float(upper), witness, method)


# ---------------------------------------------------------------------------
# sup norm on the torus


@dataclass
class SupNormEstimate:
    lower: float
    upper_heuristic: float
    argmax: tuple
    grid_max: float
    grid_pad: float

    def to_json(self):
        return {
            "lower": self.lower,
            "upper_heuristic": self.upper_heuristic,
            "argmax": [[z.real, z.imag] for z in self.argmax],
            "grid_max": self.grid_max,
            "grid_pad": self.grid_pad,
        }


def _is_homogeneous(p):
    return len({sum(k) for k in p.terms}) <= 1


def sup_norm_torus(p, grid_per_dim=64, refine_steps=20, max_candidates=4096, chunk=1 << 18):
    """Estimate ``max |p|`` over the unit torus.

    A uniform angle grid is scanned; every grid point within the
    second-order grid pad ``M2*(h/2)^2/2`` of the grid maximum
    (``M2 = sum |p_k| |k|^2``) seeds a coordinate ascent.  ``lower`` is the
    best value found at an actual point.  ``upper_heuristic`` adds to each
    refined value the same second-order pad at its final step size, which
    is valid when every ascent ended in the basin it started in.
    Homogeneous polynomials have the first angle fixed to 0.
    """
    if grid_per_dim < 8:
        raise ValueError("grid_per_dim must be at least 8")
    d = p.nvars
    pf = p.to_float()
    if pf.is_zero():
        return SupNormEstimate(0.0, 0.0, (1.0 + 0j,) * d, 0.0, 0.0)
    cp = CompiledPoly(pf)
    M2 = float(sum(abs(complex(c)) * sum(k) ** 2 for k, c in pf.terms.items()))
    free = d - 1 if _is_homogeneous(pf) else d
    h = 2 * pi / grid_per_dim
    pad = 0.5 * M2 * (h / 2) ** 2

    def full(th):
        if free == d:
            return th
        return np.concatenate([np.zeros(th.shape[:-1] + (1,)), th], axis=-1)

    if free == 0:
        v = abs(cp(np.ones(d)))
        return SupNormEstimate(float(v), float(v), (1.0 + 0j,) * d, float(v), 0.0)
    G = grid_per_dim
    total = G ** free
    axis = np.arange(G) * h
    vals = np.empty(total)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        th = np.stack(np.unravel_index(idx, (G,) * free), axis=-1) * h
        vals[start:start + len(idx)] = np.abs(cp.on_torus(full(th)))
    gmax = float(vals.max())
    cand = np.nonzero(vals >= gmax - pad)[0]
    if len(cand) > max_candidates:
        cand = cand[np.argsort(-vals[cand])[:max_candidates]]
    pts = np.stack(np.unravel_index(cand, (G,) * free), axis=-1) * h
    cur = vals[cand].copy()
    step = np.full(len(cand), h / 2)
    for _ in range(refine_steps):
        moved = np.zeros(len(cand), dtype=bool)
        for i in range(free):
            for sgn in (1.0, -1.0):
                trial = pts.copy()
                trial[:, i] += sgn * step
                tv = np.abs(cp.on_torus(full(trial)))
                better = tv > cur
                pts[better] = trial[better]
                cur[better] = tv[better]
                moved |= better
        step = np.where(moved, step, step / 2)
    best = int(np.argmax(cur))
    lower = float(cur[best])
    upper = float(np.max(cur + 0.5 * M2 * step ** 2))
    z = tuple(np.exp(1j * full(pts[best])))
    return SupNormEstimate(lower, max(upper, lower), z, gmax, pad)
