"""Command-line front end.

Every verb reads JSON (``--input`` path or ``-`` for stdin) and writes one
JSON document to stdout or ``--out``.  Output is wrapped as
``{"verb", "mode", "tolerances", "result"}``; verbs that consume a type
accept either the wrapped document or the bare ``result`` object.

Exit codes: 0 success or pass, 1 usage or input error, 2 a check failed.
"""

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import agler, kvh, represent, verify
from .gaussian import QQi, parse_exact
from .linalg import matrix_from_json
from .poly import CommutingTuple, MultiPoly

VERBS = (
    "expand", "represent", "represent-bounded", "represent-affine", "verify", "pmrp",
    "stability", "supnorm", "inner-check", "extract-k", "agler-bound", "cd-psd",
    "kvh", "kvh-example",
)

# construction verbs default to exact arithmetic, spectral ones to floats
EXACT_VERBS = {"expand", "represent", "represent-bounded", "represent-affine", "verify", "pmrp", "cd-psd"}

DEFAULT_TOL = {"verify": 1e-9, "pmrp": 1e-9, "inner-check": 1e-8, "extract-k": 1e-8,
               "cd-psd": 1e-9, "agler-bound": 1e-10}


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, payload):
        super().__init__("check failed")
        self.payload = payload


# ---------------------------------------------------------------------------
# deterministic JSON


def _encode(obj):
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        if x == int(x) and abs(x) < 1e16:
            return f"{int(x)}.0"
        return format(x, ".17g")
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj):
    return _encode(obj) + "\n"


# ---------------------------------------------------------------------------
# input helpers


def _read_input(path):
    if path is None:
        return None
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read input: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON: {exc}") from exc
    if isinstance(data, dict) and "result" in data and "verb" in data:
        data = data["result"]
    return data


def _need(data, key=None):
    if data is None:
        raise UsageError("this verb needs --input")
    if key is None:
        return data
    if not isinstance(data, dict) or key not in data:
        raise UsageError(f"input JSON lacks the field {key!r}")
    value = data[key]
    if isinstance(value, dict) and "result" in value and "verb" in value:
        value = value["result"]
    return value


def _poly(data, mode):
    try:
        p = MultiPoly.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad polynomial JSON: {exc}") from exc
    if mode == "float":
        return p.to_float()
    if mode == "exact" and not p.exact:
        return p.to_exact()
    return p


def _matrix(data, mode):
    try:
        M = matrix_from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad matrix JSON: {exc}") from exc
    if mode == "float" and M.dtype == object:
        M = M.astype(complex)
    return M


def _rep(data, mode):
    try:
        n = tuple(int(v) for v in data["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad representation JSON: {exc}") from exc
    return represent.Representation(n, _matrix(data["K"], mode))


def _poly_from_input(data, mode):
    data = _need(data)
    return _poly(data["p"] if isinstance(data, dict) and "p" in data else data, mode)


def _scalar_list(text, exact):
    items = [s for s in text.split(",") if s.strip()]
    if exact:
        return [parse_exact(s) for s in items]
    return [complex(s.strip().replace("i", "j")) for s in items]


def _scalar(text, exact):
    return parse_exact(text) if exact else complex(text.replace("i", "j"))


def _points(data, d, count, seed):
    if isinstance(data, dict) and "points" in data:
        return [np.array([complex(a, b) for a, b in pt]) for pt in data["points"]]
    rng = np.random.default_rng(seed)
    r = 0.9 * np.sqrt(rng.uniform(0, 1, (count, d)))
    return list(r * np.exp(2j * np.pi * rng.uniform(0, 1, (count, d))))


# ---------------------------------------------------------------------------
# verbs


def _cmd_expand(args, data):
    d = _need(data)
    rep = _rep(d, args.mode)
    return verify.det_expand(rep.K, rep.n).to_json()


def _cmd_represent(args, data):
    p = _poly_from_input(data, args.mode)
    return represent.represent_unconstrained(p, prune=not args.literal).to_json()


def _cmd_represent_bounded(args, data):
    p = _poly_from_input(data, args.mode)
    return represent.represent_bounded(p).to_json()


def _cmd_represent_affine(args, data):
    exact = args.mode != "float"
    if args.a is not None:
        a = _scalar_list(args.a, exact)
    else:
        raw = _need(data, "a")
        a = [_scalar(str(v), exact) for v in raw]
    return represent.represent_affine(a, exact=None if exact else False).to_json()


def _cmd_verify(args, data):
    d = _need(data)
    p = _poly(_need(d, "p"), args.mode)
    rep = _rep(_need(d, "rep"), args.mode)
    report = verify.verify_representation(p, rep, tol=args.tol,
                                          semistable=bool(d.get("semistable", False)))
    out = report.to_json()
    if not report.passed:
        raise CheckFailed(out)
    return out


def _cmd_pmrp(args, data):
    d = _need(data)
    rep = _rep(d, args.mode)
    m = tuple(int(v) for v in d.get("m", rep.n))
    if "target" in d:
        target = _poly(d["target"], args.mode).terms
    else:
        target = verify.det_expand(rep.K, rep.n).terms
    res = verify.pmrp_check(rep.K, rep.n, target, m, tol=args.tol)
    out = {
        "ok": res.ok,
        "m": list(m),
        "relations": [
            {"exp": list(k), "sum": _value(res.sums[k]), "residual": float(res.residuals[k])}
            for k in sorted(res.sums)
        ],
    }
    if not res.ok:
        raise CheckFailed(out)
    return out


def _value(c):
    if isinstance(c, QQi):
        return str(c)
    return [complex(c).real, complex(c).imag]


def _cmd_stability(args, data):
    p = _poly_from_input(data, args.mode)
    return verify.stability_radius(p, budget=args.budget).to_json()


def _cmd_supnorm(args, data):
    p = _poly_from_input(data, args.mode)
    return verify.sup_norm_torus(p, grid_per_dim=args.grid, refine_steps=args.refine).to_json()


def _cmd_inner_check(args, data):
    d = _need(data)
    p = _poly(_need(d, "p"), "float")
    rep = _rep(d["rep"], "float") if "rep" in d else None
    n = tuple(int(v) for v in d.get("n", rep.n if rep is not None else
                                     [max((k[i] for k in p.terms), default=0) for i in range(p.nvars)]))
    worst, rows, skipped = 0.0, [], 0
    for z in _points(d, p.nvars, args.points, args.seed):
        try:
            rat = agler.inner_eval_rational(p, n, z)
        except agler.InnerEvalError:
            skipped += 1
            continue
        row = {"rational": rat}
        if rep is not None:
            jul = agler.inner_eval_julia(rep.K, n, z)
            err = abs(jul - rat) / (1 + abs(rat))
            worst = max(worst, err)
            row.update({"julia": jul, "relative_error": err})
        rows.append(row)
    out = {"n": list(n), "max_relative_error": worst, "skipped_points": skipped,
           "max_modulus": max((abs(r["rational"]) for r in rows), default=0.0), "samples": rows}
    if rep is not None and worst > args.tol:
        raise CheckFailed(out)
    return out


def _cmd_extract_k(args, data):
    d = _need(data)
    p = _poly(_need(d, "p"), "float")
    try:
        R = agler.Realization.from_json(_need(d, "realization"))
        rep = agler.extract_K_from_realization(p, R, tol=args.tol)
    except agler.RealizationError as exc:
        raise CheckFailed({"error": str(exc)}) from exc
    return rep.to_json()


def _cmd_agler_bound(args, data):
    d = _need(data)
    p = _poly(_need(d, "p"), "float")
    try:
        tuples = [CommutingTuple.from_json(t) for t in _need(d, "tuples")]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad tuple JSON: {exc}") from exc
    value, idx = agler.agler_lower_bound(p, tuples, tol=args.tol, return_index=True)
    return {"value": value, "tuple_index": idx}


def _cmd_cd_psd(args, data):
    exact = args.mode != "float"
    t = _scalar(args.t, exact)
    if exact and not t.im:
        t = Fraction(int(t.re.numerator), int(t.re.denominator))
    res = agler.cd_matrix(t, args.d, exact=exact)
    out = res.to_json()
    out["psd"] = res.min_eigenvalue >= -args.tol
    if not out["psd"]:
        raise CheckFailed(out)
    return out


def _cmd_kvh(args, data):
    s = float(Fraction(args.s)) if args.s is not None else 1.0
    rep = kvh.kvh_report(args.d, s, grid=args.grid, refine_steps=args.refine)
    out = rep.to_json()
    out["form_norm"] = kvh.kvh_form_norm(args.d, s)
    if args.d == 3:
        s_star, ratio = kvh.kvh_optimal_s()
        out["optimal_s"] = s_star
        out["optimal_ratio"] = ratio
    return out


def _cmd_kvh_example(args, data):
    r = Fraction(args.r) if args.mode == "exact" else float(Fraction(args.r))
    try:
        ex = kvh.kvh_section5_example(r, budget=args.budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return ex.to_json()


COMMANDS = {
    "expand": _cmd_expand,
    "represent": _cmd_represent,
    "represent-bounded": _cmd_represent_bounded,
    "represent-affine": _cmd_represent_affine,
    "verify": _cmd_verify,
    "pmrp": _cmd_pmrp,
    "stability": _cmd_stability,
    "supnorm": _cmd_supnorm,
    "inner-check": _cmd_inner_check,
    "extract-k": _cmd_extract_k,
    "agler-bound": _cmd_agler_bound,
    "cd-psd": _cmd_cd_psd,
    "kvh": _cmd_kvh,
    "kvh-example": _cmd_kvh_example,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="detrep", description="Determinantal representations of polynomials.")
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("--input", help="JSON input file, or - for stdin")
    parser.add_argument("--mode", choices=("exact", "float"))
    parser.add_argument("--tol", type=float)
    parser.add_argument("--grid", type=int, default=64)
    parser.add_argument("--out")
    parser.add_argument("--refine", type=int, default=20, help="coordinate-ascent steps for supnorm/kvh")
    parser.add_argument("--budget", type=int, default=2_000_000, help="cell budget for stability")
    parser.add_argument("--literal", action="store_true", help="represent: skip chain pruning")
    parser.add_argument("--a", help="represent-affine: comma-separated coefficients")
    parser.add_argument("--d", type=int, default=3)
    parser.add_argument("--s", help="kvh: parameter s (rational or decimal)")
    parser.add_argument("--r", default="9/10", help="kvh-example: parameter r")
    parser.add_argument("--t", default="1", help="cd-psd: parameter t")
    parser.add_argument("--points", type=int, default=100, help="inner-check: random sample count")
    parser.add_argument("--seed", type=int, default=0)
    return parser


def run(argv=None, stdout=None):
    """Run one command; returns the exit code."""
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.mode is None:
            args.mode = "exact" if args.verb in EXACT_VERBS else "float"
        if args.tol is None:
            args.tol = DEFAULT_TOL.get(args.verb, 1e-9)
        if args.grid < 8:
            raise UsageError("--grid must be at least 8")
        data = _read_input(args.input)
        code = 0
        try:
            result = COMMANDS[args.verb](args, data)
        except CheckFailed as exc:
            result, code = exc.payload, 2
        except (KeyError, TypeError, ValueError, ArithmeticError) as exc:
            raise UsageError(f"{type(exc).__name__}: {exc}") from exc
        doc = {"verb": args.verb, "mode": args.mode,
               "tolerances": {"tol": args.tol, "grid": args.grid}, "result": result}
        text = dumps(doc)
        if args.out:
            try:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            except OSError as exc:
                raise UsageError(f"cannot write output: {exc}") from exc
        else:
            stdout.write(text)
        return code
    except UsageError as exc:
        sys.stderr.write(f"detrep: {exc}\n")
        return 1


def main():
    sys.exit(run())
