"""Scenario runner.

    fmtwist run --scenario elliptic_ckas [--scenario FILE ...] [--emit json|text]
                [--preset NAME] [--jobs N] [--golden DIR [--update-golden]] [--timing]
    fmtwist list-presets
    fmtwist list-scenarios
    fmtwist export-preset NAME
    fmtwist schema KIND

Exit codes: 0 every check passed, 1 a check failed, 2 input or schema error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from .serialize import SCHEMA_VERSION, SCHEMAS, SchemaError, dumps, encode, preset_to_json, validate

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

ALGEBRA_PRESETS = {"p1_beilinson": 1, "p2_beilinson": 2}


class InputError(ValueError):
    """Bad scenario input; maps to exit code 2."""


# ----------------------------------------------------------------------
# helpers

def _check(name: str, ok: bool, evidence, shadow: bool = False) -> dict:
    verdict = ("shadow-pass" if shadow else "pass") if ok else "fail"
    return {"name": name, "verdict": verdict, "evidence": encode(evidence)}


def _geometry(doc: dict, override: str | None):
    from .presets import PresetError, get_preset
    name = override or doc.get("preset")
    try:
        return get_preset(name)
    except PresetError as exc:
        raise InputError(str(exc)) from None


def _algebra(doc: dict, override: str | None):
    from .algebra import beilinson
    name = override or doc.get("preset")
    if name not in ALGEBRA_PRESETS:
        raise InputError(f"preset {name!r} has no algebra model "
                         f"(choose from {sorted(ALGEBRA_PRESETS)})")
    return name, beilinson(ALGEBRA_PRESETS[name])


def _with_gram(geom, gram):
    """The preset with its Gram matrix replaced; spherical twists follow
    the new pairing while line twists keep their geometric definition."""
    from .lattice import EulerLattice, is_unit_upper_triangular
    from .serialize import _decode_matrix
    lat = geom.lattice
    g = _decode_matrix(gram)
    if len(g) != lat.rank or any(len(r) != lat.rank for r in g):
        raise InputError(f"gram override must be {lat.rank}x{lat.rank}")
    new = EulerLattice(g, lat.labels, lat.exceptional_basis and is_unit_upper_triangular(g),
                       lat.name)
    return dataclasses.replace(geom, lattice=new)


# ----------------------------------------------------------------------
# scenario kinds

def run_lattice_check(doc, preset):
    from .lattice import LatticeOp, check_relation
    from .rewriter import RewriteError, parse_word, shadow_check
    geom = _geometry(doc, preset)
    if "gram" in doc:
        geom = _with_gram(geom, doc["gram"])
    checks = []
    for rel in doc["relations"]:
        try:
            word = [shadow_check(geom, parse_word(geom, [g])) for g in rel["word"]]
            if "expected_word" in rel:
                expected = shadow_check(geom, parse_word(geom, rel["expected_word"]))
            else:
                from .serialize import _decode_matrix
                expected = LatticeOp(_decode_matrix(rel["expected_matrix"]), geom.lattice)
        except (RewriteError, ValueError) as exc:
            raise InputError(f"relation {rel['name']}: {exc}") from None
        rep = check_relation(word, expected)
        ev = {"product": rep.product, "expected": rep.expected}
        if rep.residual is not None:
            ev["residual"] = rep.residual
        ev["isometries"] = all(op.is_isometry() for op in word)
        checks.append(_check(rel["name"], rep.passed, ev, shadow=True))
    notes = ["K-level verdicts are necessary conditions (shadow-verified), "
             "not functor isomorphisms"] + list(geom.notes)
    if "gram" in doc:
        notes.append("Gram matrix overridden by the scenario")
    return checks, notes


def run_dual_seq(doc, preset):
    from .complexes import dual_sequence, homology_table, hom_complex, left_mutation, projective
    from .lattice import dual_basis, mutate_class
    from .presets import get_preset
    name, alg = _algebra(doc, preset)
    lat = get_preset(name).lattice
    P = [projective(alg, i) for i in range(alg.n)]
    duals = dual_sequence(P)
    table, ok = [], True
    for i in range(alg.n):
        row = []
        for j in range(alg.n):
            dims = hom_complex(P[i], duals[j]).homology_dims()
            want = {0: 1} if i == j else {}
            ok = ok and dims == want
            row.append({str(k): v for k, v in sorted(dims.items())})
        table.append(row)
    checks = [_check("orthogonality", ok, {"hom_dims": table})]
    got = [list(D.k_class()) for D in duals]
    want = [list(d.coords) for d in dual_basis(lat)]
    ev = {"complexes": got, "lattice_dual_basis": want}
    ok = got == want
    if "expected_duals" in doc:
        from .serialize import _decode_matrix
        exp = [list(r) for r in _decode_matrix(doc["expected_duals"])]
        ev["expected"] = exp
        ok = ok and got == exp
    checks.append(_check("dual_classes", ok, ev))
    simple = []
    for k, D in enumerate(duals):
        t = homology_table(D)
        simple.append(all(t[v] == ({0: 1} if v == k else {}) for v in range(alg.n)))
    checks.append(_check("duals_are_simple_modules", all(simple), {"per_index": simple}))
    rows, ok = [], True
    for i in range(alg.n):
        for j in range(i + 1, alg.n):
            C, _ = left_mutation(P[i], P[j])
            a = list(C.k_class())
            b = list(mutate_class(lat.basis(i), lat.basis(j)).coords)
            rows.append({"pair": [i, j], "complex": a, "lattice": b})
            ok = ok and a == b
    checks.append(_check("mutation_classes", ok, {"pairs": rows}))
    return checks, ["dual object for vertex i is listed at index i"]


def run_diag_res(doc, preset):
    from .kernels import DiagonalResolution, check_EL
    _, alg = _algebra(doc, preset)
    dres = DiagonalResolution(alg)
    checks = [_check("augmentation_quasi_iso", dres.augmentation_ok(),
                     {"terms": {n: len(t) for n, t in sorted(dres.D.terms.items())}})]
    found = [dres.piece_iso(k, seed=int(doc.get("seed", 0))) is not None
             for k in range(alg.n)]
    checks.append(_check("graded_pieces", all(found), {"iso_found": found}))
    lhs, rhs = dres.k_identity()
    checks.append(_check("k_identity", lhs == rhs, {"diagonal": lhs, "sum_of_pieces": rhs}))
    for k in range(1, alg.n):
        r = check_EL(dres, k, seed=int(doc.get("seed", 0)))
        checks.append(_check(f"image_and_connecting_map_{k}", r["pass"], r))
    return checks, ["filtration by the index of the second factor"]


def run_convolve_test(doc, preset):
    from .algebra import tensor_op
    from .complexes import is_quasi_iso, projective, random_complex
    from .kernels import (Adjunction, adjoint_kernel, adjunction_tables,
                          is_literally_associative, left_unitor, right_unitor)
    _, alg = _algebra(doc, preset)
    rng = random.Random(int(doc.get("seed", 0)))
    T = tensor_op(alg, alg)
    P = [projective(alg, i) for i in range(alg.n)]
    rows = []
    triangles = bool(doc.get("triangles", True))
    totals = {"associative": True, "unit": True, "adjunction_dims": True}
    if triangles:
        totals["triangles"] = True
    for _ in range(int(doc.get("count", 20))):
        K = random_complex(T, rng, 3)
        L = random_complex(T, rng, 2)
        M = random_complex(T, rng, 2)
        assoc = is_literally_associative(K, L, M)
        unit = is_quasi_iso(left_unitor(K)) and is_quasi_iso(right_unitor(K))
        row = {"size": K.size(), "associative": assoc, "unit": unit}
        if triangles:
            adj = Adjunction(K)
            Kt = adj.Kt
            row["triangles"] = all(adj.triangle_identities())
        else:
            Kt = adjoint_kernel(K)
        row["adjunction_dims"] = all(a == b for a, b in adjunction_tables(K, Kt, P, P))
        rows.append(row)
        for key in totals:
            totals[key] = totals[key] and row[key]
    checks = [_check(key, ok, {"kernels": [r[key] for r in rows]}) for key, ok in totals.items()]
    checks.append(_check("kernel_sizes", True, {"sizes": [r["size"] for r in rows]}))
    notes = [f"{len(rows)} random kernels"]
    if not triangles:
        notes.append("triangle identities skipped for this scenario")
    return checks, notes


def run_theorem(doc, preset):
    from .kernels import diagonal_kernel, serre_kernel, theorem_pipeline
    _, alg = _algebra(doc, preset)
    K = diagonal_kernel(alg) if doc.get("kernel", "identity") == "identity" else serre_kernel(alg)
    res = theorem_pipeline(K, certify=bool(doc.get("certify", True)))
    checks = [_check("maincond", res["maincond"], {})]
    for st in res["stages"]:
        checks.append(_check(f"stage_{st['k']}", st["pass"], st))
    notes = ["stage verdicts compare K-matrices and image homology tables; "
             "key composites are checked as quasi-isomorphisms"]
    return checks, notes


def _script_from_json(d):
    from .rewriter import DerivationScript, Step
    steps = tuple(Step(s["rule"], int(s["position"]), int(s.get("q_len", 1)), s.get("lemma"))
                  for s in d["steps"])
    return DerivationScript(d["name"], d["preset"], tuple(d["start"]), tuple(d["target"]),
                            steps, d.get("description", ""))


def run_rewrite(doc, preset):
    from .derivations import bundled_scripts
    from .presets import PresetError
    from .rewriter import RewriteError, check_derivation, rule_table
    scripts = bundled_scripts()
    todo = []
    for name in doc.get("scripts", []):
        if name not in scripts:
            raise InputError(f"unknown script {name!r}")
        todo.append(scripts[name])
    todo += [_script_from_json(d) for d in doc.get("inline_scripts", [])]
    if not todo:
        raise InputError("rewrite scenario lists no scripts")
    checks, notes = [], set()
    try:
        with rule_table(doc.get("rule_bases")):
            for sc in todo:
                cert = check_derivation(sc)
                ev = {"start": cert.start, "final": cert.final, "target": cert.target,
                      "steps": [{"rule": c.rule, "position": c.position, "after": c.after,
                                 "evidence": c.evidence} for c in cert.steps],
                      "assumptions": list(cert.assumptions), "shadow_agree": cert.shadow_agree}
                if cert.error:
                    ev["error"] = cert.error
                    ev["failing_step"] = cert.failing_step
                checks.append(_check(sc.name, cert.passed and bool(cert.shadow_agree), ev))
                notes.update(f"assumption: {a}" for a in cert.assumptions)
    except (RewriteError, PresetError) as exc:
        raise InputError(str(exc)) from None
    if "rule_bases" in doc:
        notes.add("rule table overridden by the scenario")
    return checks, sorted(notes)


RUNNERS = {"lattice-check": run_lattice_check, "dual-seq": run_dual_seq,
           "diag-res": run_diag_res, "convolve-test": run_convolve_test,
           "theorem": run_theorem, "rewrite": run_rewrite}


# ----------------------------------------------------------------------
# scenarios and reports

def bundled_dir() -> Path:
    return Path(str(resources.files("fmtwist") / "scenarios"))


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in bundled_dir().glob("*.json"))


def load_scenario(ref: str) -> dict:
    path = Path(ref)
    if not path.exists() and not ref.endswith(".json"):
        path = bundled_dir() / f"{ref}.json"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read scenario {ref!r}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{ref}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    try:
        validate(doc, "scenario")
    except SchemaError as exc:
        raise InputError(f"{ref}: {exc}") from None
    return doc


def run_scenario(doc: dict, preset: str | None = None, timing: bool = False) -> dict:
    """Run a validated scenario document; InputError for bad references."""
    t0 = time.perf_counter()
    checks, notes = RUNNERS[doc["kind"]](doc, preset)
    if any(c["verdict"] == "fail" for c in checks):
        verdict = "fail"
    elif any(c["verdict"] == "shadow-pass" for c in checks):
        verdict = "shadow-pass"
    else:
        verdict = "pass"
    report = {"schema": SCHEMA_VERSION, "scenario": doc["id"], "kind": doc["kind"],
              "verdict": verdict, "checks": checks, "notes": list(notes)}
    if timing:
        report["timing"] = {"seconds": round(time.perf_counter() - t0, 3)}
    return report


def _job(args):
    ref, preset, timing = args
    try:
        doc = load_scenario(ref)
        return run_scenario(doc, preset, timing), None
    except InputError as exc:
        return None, str(exc)


def format_text(report: dict) -> str:
    lines = [f"{report['scenario']} [{report['kind']}]: {report['verdict']}"]
    for c in report["checks"]:
        lines.append(f"  {c['verdict']:<11} {c['name']}")
        if c["verdict"] == "fail":
            lines.append("    evidence: " + json.dumps(c["evidence"], sort_keys=True))
    for n in report["notes"]:
        lines.append(f"  note: {n}")
    if "timing" in report:
        lines.append(f"  time: {report['timing']['seconds']}s")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# commands

def cmd_run(args) -> int:
    refs = []
    for ref in args.scenario:
        p = Path(ref)
        refs.extend(sorted(str(q) for q in p.glob("*.json")) if p.is_dir() else [ref])
    jobs = [(r, args.preset, args.timing or args.emit == "text") for r in refs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    code = EXIT_PASS
    reports = []
    for (ref, _, _), (report, err) in zip(jobs, results):
        if err is not None:
            print(f"error: {err}", file=sys.stderr)
            code = EXIT_INPUT
            continue
        if report["verdict"] == "fail" and code == EXIT_PASS:
            code = EXIT_FAIL
        if args.golden:
            gcode = _golden(report, Path(args.golden), args.update_golden)
            if gcode and code == EXIT_PASS:
                code = gcode
        reports.append(report)
    if reports and args.emit == "json":
        if len(reports) == 1 and len(refs) == 1:
            sys.stdout.write(dumps(reports[0]))
        else:
            sys.stdout.write(dumps({"schema": SCHEMA_VERSION, "reports": reports}))
    elif reports:
        for r in reports:
            sys.stdout.write(format_text(r))
    return code


def _golden(report: dict, directory: Path, update: bool) -> int:
    body = {k: v for k, v in report.items() if k != "timing"}
    path = directory / f"{report['scenario']}.json"
    text = dumps(body)
    if update:
        directory.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return EXIT_PASS
    if not path.exists():
        print(f"golden: no reference report {path}", file=sys.stderr)
        return EXIT_FAIL
    if path.read_text(encoding="utf-8") != text:
        print(f"golden: report for {report['scenario']} differs from {path}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


def cmd_list_presets(args) -> int:
    from .presets import PRESETS
    sys.stdout.write(dumps({"schema": SCHEMA_VERSION, "presets": sorted(PRESETS)}))
    return EXIT_PASS


def cmd_list_scenarios(args) -> int:
    sys.stdout.write(dumps({"schema": SCHEMA_VERSION, "scenarios": bundled_scenarios()}))
    return EXIT_PASS


def cmd_export_preset(args) -> int:
    from .presets import PresetError, get_preset
    try:
        geom = get_preset(args.name)
    except PresetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(dumps(preset_to_json(geom)))
    return EXIT_PASS


def cmd_schema(args) -> int:
    if args.kind not in SCHEMAS:
        print(f"error: unknown schema {args.kind!r}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(json.dumps(SCHEMAS[args.kind], sort_keys=True, indent=2) + "\n")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fmtwist", description="Run twist-relation scenarios.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run scenarios")
    run.add_argument("--scenario", action="append", required=True,
                     help="scenario file, directory or bundled scenario name")
    run.add_argument("--preset", help="override the preset named by the scenario")
    run.add_argument("--emit", choices=("json", "text"), default="json")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--golden", help="directory of reference reports")
    run.add_argument("--update-golden", action="store_true",
                     help="write reports into the golden directory instead of comparing")
    run.add_argument("--timing", action="store_true", help="include wall time in JSON reports")
    run.set_defaults(func=cmd_run)
    sub.add_parser("list-presets").set_defaults(func=cmd_list_presets)
    sub.add_parser("list-scenarios").set_defaults(func=cmd_list_scenarios)
    ex = sub.add_parser("export-preset")
    ex.add_argument("name")
    ex.set_defaults(func=cmd_export_preset)
    sc = sub.add_parser("schema", help="print a JSON schema")
    sc.add_argument("kind", choices=sorted(SCHEMAS))
    sc.set_defaults(func=cmd_schema)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("--") and argv[0] != "--help":
        argv.insert(0, "run")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
