"""Batch verifier: read a JSON configuration, run every check, write text and JSON reports.

Exit codes: 0 when nothing failed, 1 on any FAIL or ERROR record, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any

from . import __version__
from .algebra import CanonicalBasis, axiom_suite, check_basis_relations
from .arrangement import Arrangement, plucker_check
from .connection import check_partial_fractions, e_coefficients, e_tilde_invertible, flatness_check
from .errors import ConfigError, FrobeniusLikeError, InputError, ParameterError
from .exact import format_scalar, parse_scalar
from .periods import bounded_segments, check_kappa, check_sections, parse_cycle, shift_check
from .potentials import calibrate_epsilon, check_homogeneity, check_invariance, check_ll_der, check_pp_der
from .report import ERROR, FAIL, PASS, SKIP, VerificationReport, jsonable

CHECKS = ("plucker", "basis_relations", "dimension", "invariance", "homogeneity", "calibration",
          "axioms", "pp_der", "ll_der", "flatness", "e_operator", "sections", "shift")

DEFAULT_TOLERANCES = {
    "quadrature": 1e-10,
    "section_residual": 1e-8,
    "shift": 1e-6,
    "independence": 1e-3,
    "step": 1e-4,
    "invariance_numeric": 1e-12,
}

# The eight axioms of a Frobenius-like structure, and the records that test each.
AXIOMS = (
    ("A1", "Invariance", ("calibration", "pp_der", "ll_der", "ll_reconstruction", "invariance_reduced",
                          "invariance_numeric", "frobenius", "epsilon_consistency")),
    ("A2", "Unit element", ("unit", "unit_i0_independence")),
    ("A3", "Commutativity", ("commutativity",)),
    ("A4", "Relation between p_j and P_I", ("p_relation", "pp_relation")),
    ("A5", "Associativity", ("associativity", "spanning")),
    ("A6", "Homogeneity", ("homogeneity_symbolic", "homogeneity_polynomial", "homogeneity_point")),
    ("A7", "Lifting", ("flatness", "period_convergence", "section_residual", "section_independence",
                       "sections")),
    ("A8", "Differential operator e", ("e_partial_fractions", "e_tilde_invertible", "e_tilde_product",
                                       "shift_identity", "shift_section", "shift")),
)


@dataclass
class Config:
    n: int
    k: int
    b: list
    a: list
    z_samples: list = field(default_factory=list)
    num_random_z: int = 0
    seed: int = 0
    j0: int | None = None
    kappa: list = field(default_factory=list)
    cycles: list | None = None
    checks: list = field(default_factory=lambda: list(CHECKS))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    minor_overrides: list = field(default_factory=list)

    def canonical(self) -> dict:
        d = asdict(self)
        d["b"] = [[format_scalar(x) for x in row] for row in self.b]
        d["a"] = [format_scalar(x) for x in self.a]
        d["z_samples"] = [[format_scalar(x) for x in z] for z in self.z_samples]
        d["kappa"] = [format_scalar(x) for x in self.kappa]
        d["minor_overrides"] = [[list(idx), format_scalar(v)] for idx, v in self.minor_overrides]
        return d

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def arrangement(self) -> Arrangement:
        return Arrangement(self.b, self.a, minor_overrides={tuple(i): v for i, v in self.minor_overrides})


def _line_of(text: str | None, name: str) -> int | None:
    if text is None:
        return None
    needle = f'"{name}"'
    for lineno, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return lineno
    return None


def parse_config(source: str | dict) -> Config:
    """Parse a JSON document (text or already-decoded dict) into a Config."""
    text = source if isinstance(source, str) else None
    if text is not None:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, line=exc.lineno) from exc
    else:
        raw = source
    if not isinstance(raw, dict):
        raise ConfigError("the configuration must be a JSON object")

    def fail(name, msg):
        raise ConfigError(msg, field=name, line=_line_of(text, name.split(".")[0].split("[")[0]))

    known = {f for f in Config.__dataclass_fields__}
    for key in raw:
        if key not in known:
            fail(key, "unknown field")

    def integer(name, default=None, lo=None):
        v = raw.get(name, default)
        if v is None and default is None and name in ("n", "k"):
            fail(name, "required")
        if v is not None and (not isinstance(v, int) or isinstance(v, bool) or (lo is not None and v < lo)):
            fail(name, f"expected an integer{'' if lo is None else f' >= {lo}'}")
        return v

    def scalar(name, v):
        try:
            return parse_scalar(v)
        except InputError as exc:
            fail(name, str(exc))

    n, k = integer("n", lo=1), integer("k", lo=1)
    if not n > k:
        fail("k", f"need n > k >= 1, got n={n}, k={k}")
    b = raw.get("b")
    if not isinstance(b, list) or len(b) != n or any(not isinstance(r, list) or len(r) != k for r in b):
        fail("b", f"expected an {n}x{k} array")
    b = [[scalar(f"b[{i}][{j}]", x) for j, x in enumerate(r)] for i, r in enumerate(b)]
    a = raw.get("a", ["1"] * n)
    if not isinstance(a, list) or len(a) != n:
        fail("a", f"expected {n} weights")
    a = [scalar(f"a[{i}]", x) for i, x in enumerate(a)]
    zs = raw.get("z_samples", [])
    if not isinstance(zs, list) or any(not isinstance(z, list) or len(z) != n for z in zs):
        fail("z_samples", f"expected a list of {n}-vectors")
    zs = [[scalar(f"z_samples[{s}][{i}]", x) for i, x in enumerate(z)] for s, z in enumerate(zs)]
    num_random = integer("num_random_z", 0 if zs else 3, lo=0)
    seed = integer("seed", 0, lo=0)
    j0 = integer("j0", None, lo=0)
    if j0 is not None and j0 >= n:
        fail("j0", f"index out of range 0..{n - 1}")
    kappa = raw.get("kappa", [])
    if not isinstance(kappa, list):
        kappa = [kappa]
    kappa = [scalar(f"kappa[{i}]", x) for i, x in enumerate(kappa)]
    cycles = raw.get("cycles")
    if cycles is not None:
        if not isinstance(cycles, list):
            fail("cycles", "expected a list of cycle specifications")
        for i, c in enumerate(cycles):
            try:
                parse_cycle(c)
            except (InputError, ValueError, TypeError) as exc:
                fail(f"cycles[{i}]", str(exc))
    checks = raw.get("checks", list(CHECKS))
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        fail("checks", f"expected a subset of {', '.join(CHECKS)}")
    tol = dict(DEFAULT_TOLERANCES)
    given = raw.get("tolerances", {})
    if not isinstance(given, dict):
        fail("tolerances", "expected an object")
    for key, v in given.items():
        if key not in tol:
            fail(f"tolerances.{key}", "unknown tolerance")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            fail(f"tolerances.{key}", "expected a positive number")
        tol[key] = float(v)
    overrides = raw.get("minor_overrides", [])
    if not isinstance(overrides, list) or any(not isinstance(o, list) or len(o) != 2 or not isinstance(o[0], list)
                                               for o in overrides):
        fail("minor_overrides", "expected a list of [[indices], value] pairs")
    overrides = [(tuple(o[0]), scalar("minor_overrides", o[1])) for o in overrides]
    return Config(n, k, b, a, zs, num_random, seed, j0, kappa, cycles, list(checks), tol, overrides)


def load_config(path: str) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text)


# -- running -------------------------------------------------------------------------

def _samples(cfg: Config, arr: Arrangement, report: VerificationReport) -> list[tuple[str, Any]]:
    out = [(f"z{i}", tuple(z)) for i, z in enumerate(cfg.z_samples)]
    rng = random.Random(cfg.seed)
    for i in range(cfg.num_random_z):
        label = f"r{i}"
        with report.timed("random_point", sample=label) as res:
            out.append((label, arr.random_point(rng)))
            res["ok"] = True
        if report.records[-1].status != PASS:
            continue
        report.records.pop()
    return out


def _run_sample(cfg: Config, label: str, z: tuple, first: bool) -> tuple[VerificationReport, int | None]:
    """Every per-point check at one z; returns the report and the calibrated sign."""
    arr = cfg.arrangement()
    basis = CanonicalBasis(arr, cfg.j0)
    report = VerificationReport()
    on = set(cfg.checks)
    with report.timed("sample", sample=label) as out:
        arr.require_generic(z)
        out["ok"] = True
        out["witness"] = {"z": list(z)}
    if report.records[-1].status != PASS:
        return report, None
    report.records.pop()
    eps, cal = calibrate_epsilon(basis, z, sample=label)
    if "calibration" in on:
        report.merge(cal)
    sign = eps if eps is not None else (-1) ** arr.k
    if "axioms" in on:
        report.merge(axiom_suite(basis, z, sample=label))
    if "pp_der" in on:
        report.merge(check_pp_der(arr, basis, z, sign, sample=label))
    if "ll_der" in on:
        report.merge(check_ll_der(arr, basis, z, sign, sample=label))
    if "homogeneity" in on:
        hom = check_homogeneity(arr, basis, z, sign, sample=label)
        if not first:
            hom.records = [r for r in hom.records if r.sample is not None]
        report.merge(hom)
    if "flatness" in on:
        report.merge(flatness_check(basis, z, sample=label))
    if "dimension" in on and arr.k == 1:
        with report.timed("segment_count", sample=label) as out:
            segs = len(bounded_segments(arr, z))
            out["ok"] = segs == arr.n - 1
            out["witness"] = {"segments": segs, "expected": arr.n - 1}
    if "e_operator" in on and arr.unit_weights:
        e = None
        with report.timed("e_coefficients", sample=label) as out:
            e = e_coefficients(arr, z)
            out["ok"] = True
        if report.records[-1].status == PASS:
            report.records.pop()
            report.merge(check_partial_fractions(e, seed=cfg.seed, sample=label),
                         e_tilde_invertible(basis, z, e, sample=label))
    report.epsilon = None
    return report, eps


def _run_numerics(cfg: Config, label: str, z: tuple) -> VerificationReport:
    arr = cfg.arrangement()
    basis = CanonicalBasis(arr, cfg.j0)
    report = VerificationReport()
    on = set(cfg.checks)
    tol = cfg.tolerances
    zf = tuple(float(x) for x in z)
    if not arr.unit_weights:
        for name in ("sections", "shift"):
            if name in on:
                report.add(name, SKIP, sample=label, mode="numeric",
                           witness={"reason": "twisted periods need every weight a_j = 1"})
        return report
    if arr.k == 1 and cfg.cycles is None:
        cycles = bounded_segments(arr, z)
    elif cfg.cycles is None:
        for name in ("sections", "shift"):
            if name in on:
                report.add(name, SKIP, sample=label, mode="numeric",
                           witness={"reason": "k >= 2 needs user-supplied simplices"})
        return report
    else:
        cycles = [parse_cycle(c, arr, z) for c in cfg.cycles]
    for kappa in cfg.kappa:
        tag = f"{label}/kappa={format_scalar(kappa)}"
        try:
            check_kappa(arr, kappa)
        except ParameterError as exc:
            report.add("kappa", ERROR, sample=tag, mode="numeric", witness={"message": str(exc)})
            continue
        if "sections" in on:
            report.merge(check_sections(basis, zf, kappa, cycles, tol=tol["quadrature"], step=tol["step"],
                                        residual_tol=tol["section_residual"],
                                        independence_tol=tol["independence"], sample=tag))
        if "shift" in on:
            if kappa > 1:
                report.merge(shift_check(arr, basis, zf, kappa, cycles[0], tol=tol["quadrature"],
                                         step=tol["step"], rel_tol=tol["shift"], residual_tol=tol["shift"],
                                         sample=tag))
            else:
                report.add("shift", SKIP, sample=tag, mode="numeric",
                           witness={"reason": "the shift to kappa - 1 needs kappa > 1"})
    return report


def _task(args):
    kind, cfg, label, z, first = args
    try:
        if kind == "sample":
            return _run_sample(cfg, label, z, first)
        return _run_numerics(cfg, label, z), None
    except Exception as exc:  # noqa: BLE001 - a crash in one sample must not hide the others
        report = VerificationReport()
        report.add(kind, ERROR, sample=label, witness={"error": type(exc).__name__, "message": str(exc)})
        return report, None


def run(cfg: Config, *, jobs: int = 1) -> tuple[VerificationReport, int]:
    """Run the whole suite; returns the report and the process exit code."""
    arr = cfg.arrangement()
    basis = CanonicalBasis(arr, cfg.j0)
    report = VerificationReport()
    on = set(cfg.checks)
    if "plucker" in on:
        report.merge(plucker_check(arr, seed=cfg.seed))
    if "basis_relations" in on:
        report.merge(check_basis_relations(basis))
    if "dimension" in on:
        expected = math.comb(arr.n - 1, arr.k)
        report.check("dimension", basis.dim == expected, witness={"dimension": basis.dim, "expected": expected})
    if "invariance" in on:
        report.merge(check_invariance(arr, tol=cfg.tolerances["invariance_numeric"]))

    samples = _samples(cfg, arr, report)
    tasks = [("sample", cfg, label, z, i == 0) for i, (label, z) in enumerate(samples)]
    if samples and cfg.kappa and ({"sections", "shift"} & on):
        tasks.append(("numerics", cfg, samples[0][0], samples[0][1], False))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]

    signs = []
    for sub, eps in results:
        report.merge(sub)
        if eps is not None:
            signs.append(eps)
    if "calibration" in on and samples:
        consistent = len(set(signs)) == 1
        report.check("epsilon_consistency", consistent,
                     witness={"epsilons": signs, "expected": (-1) ** arr.k})
    report.epsilon = signs[0] if signs and len(set(signs)) == 1 else None
    report.meta = {
        "samples": {label: [format_scalar(x) for x in z] for label, z in samples},
        "arrangement": arr.to_dict(),
        "warnings": ["the weight sum |a| equals 1"] if arr.a_sum == 1 else [],
    }
    return report, 0 if report.passed else 1


# -- output ---------------------------------------------------------------------------

def to_json(report: VerificationReport, cfg: Config, *, timings: bool = False) -> str:
    counts = report.counts
    doc = {
        "tool_version": __version__,
        "config_digest": cfg.digest(),
        "epsilon": None if report.epsilon is None else str(report.epsilon),
        "meta": jsonable(report.meta),
        "records": [r.to_dict(timings=timings) for r in report.records],
        "summary": {**counts, "total": len(report.records), "passed": report.passed,
                    "exit_code": 0 if report.passed else 1},
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def _fmt_residual(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return format_scalar(x) if len(format_scalar(x)) <= 14 else f"{float(x):.3e}"
    if isinstance(x, float):
        return f"{x:.3e}"
    return str(jsonable(x))


def to_text(report: VerificationReport, cfg: Config) -> str:
    lines = [f"frobenius-like {__version__}  n={cfg.n} k={cfg.k}  config {cfg.digest()[:12]}",
             f"calibration epsilon: {report.epsilon if report.epsilon is not None else 'undetermined'}"]
    lines += [f"warning: {w}" for w in report.meta.get("warnings", [])] + [""]
    width = max([len(r.name) for r in report.records] + [10])
    placed = set()

    def table(records):
        for r in records:
            lines.append(f"    {r.name:<{width}}  {r.sample or '-':<18}  {r.status:<5}  {_fmt_residual(r.residual)}")

    for tag, title, names in AXIOMS:
        recs = [r for r in report.records if r.name in names]
        placed.update(id(r) for r in recs)
        lines.append(f"[{tag}] {title}")
        if recs:
            table(recs)
        else:
            lines.append("    (not exercised)")
    rest = [r for r in report.records if id(r) not in placed]
    if rest:
        lines.append("[--] Structure and inputs")
        table(rest)
    c = report.counts
    lines += ["", "summary: " + "  ".join(f"{k}={v}" for k, v in c.items())
              + f"  -> {'OK' if report.passed else 'FAILED'}"]
    for r in report.failures():
        lines.append(f"  {r.status} {r.name} [{r.sample or '-'}]: {json.dumps(jsonable(r.witness), sort_keys=True)}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="frobenius-like",
                                     description="Verify Frobenius-like structures of hyperplane arrangements.")
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run the verification suite on a JSON configuration")
    v.add_argument("config")
    v.add_argument("--json", metavar="PATH", help="write the JSON report here ('-' for stdout)")
    v.add_argument("--text", action="store_true", help="print the text table (default when --json is absent)")
    v.add_argument("--seed", type=int, help="override the configuration seed")
    v.add_argument("--checks", help=f"comma-separated subset of: {','.join(CHECKS)}")
    v.add_argument("--jobs", type=int, default=1, help="worker processes for per-sample checks")
    v.add_argument("--timings", action="store_true", help="include elapsed times in the JSON report")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative", field="seed")
            cfg.seed = args.seed
        if args.checks:
            chosen = [c.strip() for c in args.checks.split(",") if c.strip()]
            bad = [c for c in chosen if c not in CHECKS]
            if bad:
                raise ConfigError(f"unknown checks {bad}", field="checks")
            cfg.checks = chosen
        report, code = run(cfg, jobs=max(1, args.jobs))
    except FrobeniusLikeError as exc:
        if not isinstance(exc, ConfigError):
            exc = ConfigError(str(exc))
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.json:
        payload = to_json(report, cfg, timings=args.timings)
        if args.json == "-":
            sys.stdout.write(payload)
        else:
            try:
                with open(args.json, "w", encoding="utf-8") as fh:
                    fh.write(payload)
            except OSError as exc:
                print(f"cannot write {args.json}: {exc.strerror}", file=sys.stderr)
                return 2
    if args.text or not args.json:
        sys.stdout.write(to_text(report, cfg))
    return code
