"""Command-line driver: resonance -> normal form -> holonomy -> integrals -> traces.

Usage::

    foliation-lab --input field.json --cap 8 --tasks resonance,normalform --out out/

The report (``report.json``) is deterministic for a given input and seed;
wall-clock timings go to ``timing.json`` next to it.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .holonomy import (
    HolonomyError,
    HolonomyGroup,
    OrderNotCertified,
    conjugacy_defect,
    holonomy_map,
    invariant_polynomials_average,
    invariant_polynomials_product,
    is_invariant,
    linearize_finite,
    order_of,
    zero_locus_check,
)
from .integrals import (
    FirstIntegralSet,
    ReconstructionError,
    first_integral_kernel,
    form_vanishes_on_line,
    greedy_independent,
    nonsingular_fraction,
    reconstruct_coordinates,
    transported_integrals,
)
from .leaftracer import (
    SEPARATRIX,
    TraceConfig,
    integral_deviation,
    integrate_leaf,
    monotone_functional,
    numeric_holonomy,
    sphere_transversality,
    trace_directions,
    transversal_seeds,
    write_trace_csv,
)
from .normalform import (
    ResonanceObstruction,
    ShapeError,
    TypeRS,
    UnsupportedError,
    is_of_type,
    poincare_dulac,
    reduce_type,
    surviving_terms_resonant,
)
from .resonance import (
    SpectrumError,
    classify_spectrum,
    holonomy_order,
    invariant_monomials,
    resonance_lattice,
    resonant_monomials,
)
from .scalars import EXACT, FLOAT
from .series import TruncatedSeries
from .vectorfields import VectorField, apply_derivation, is_diagonal, linear_part

log = logging.getLogger("foliation_lab")

SCHEMA_VERSION = 1
TASKS = ("resonance", "normalform", "holonomy", "integrals", "trace")
EXIT_OK, EXIT_VALIDATION, EXIT_OBSTRUCTED, EXIT_INTERNAL = 0, 2, 3, 4
CAP_RANGE = (2, 16)

CI_CERTIFIED = "CI-certified-at-cap"
TCI_EVIDENCE = "TCI-consistent-evidence"
OBSTRUCTED = "obstructed"


class ValidationError(ValueError):
    pass


class Skipped(Exception):
    """Task does not apply to this input (not an obstruction)."""


# --------------------------------------------------------------------------
# input
# --------------------------------------------------------------------------


def load_spec(path) -> dict:
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            with open(path, "rb") as fh:
                return tomllib.load(fh)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def _series_from_terms(terms, nvars: int, cap: int, mode: str) -> TruncatedSeries:
    if isinstance(terms, dict):
        terms = terms.get("terms", [])
    for t in terms:
        if len(t["k"]) != nvars:
            raise ValidationError(f"exponent {t['k']} has the wrong length")
    numeric = any(isinstance(t.get("re", 0), float) or isinstance(t.get("im", 0), float) for t in terms)
    if numeric and mode == EXACT:
        raise ValidationError("float coefficients in exact mode; write them as 'p/q' strings")
    smode = FLOAT if numeric else EXACT
    return TruncatedSeries.from_json({"nvars": nvars, "cap": cap, "terms": list(terms)}, mode=smode)


@dataclass
class AnalysisRequest:
    name: str
    nvars: int
    cap: int
    tasks: tuple[str, ...]
    mode: str = FLOAT
    seed: int = 0
    field: VectorField | None = None
    integrals: list[TruncatedSeries] = dc_field(default_factory=list)
    singular_lines: list[list[int]] = dc_field(default_factory=list)
    trace: TraceConfig = dc_field(default_factory=TraceConfig)

    @classmethod
    def from_spec(cls, spec: dict, cap=None, tasks=None, mode=FLOAT, seed=0, trace=None) -> "AnalysisRequest":
        if mode not in (EXACT, FLOAT):
            raise ValidationError(f"unknown mode {mode!r}")
        try:
            nvars = int(spec["nvars"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("input must give nvars") from exc
        cap = int(cap if cap is not None else spec.get("cap", 8))
        if not CAP_RANGE[0] <= cap <= CAP_RANGE[1]:
            raise ValidationError(f"cap {cap} outside {list(CAP_RANGE)}")
        if tasks is None:
            tasks = TASKS
        unknown = set(tasks) - set(TASKS)
        if unknown:
            raise ValidationError(f"unknown tasks {sorted(unknown)}")
        tasks = tuple(t for t in TASKS if t in set(tasks))
        if not tasks:
            raise ValidationError("no tasks requested")
        if mode == EXACT and "trace" in tasks:
            raise ValidationError("the trace task is numerical; use --mode float")
        fld = None
        if spec.get("field"):
            comps = spec["field"]
            if len(comps) != nvars:
                raise ValidationError("field needs one component per variable")
            series = [_series_from_terms(c, nvars, cap, mode) for c in comps]
            if len({s.mode for s in series}) > 1:
                series = [s.to_float() for s in series]
            try:
                fld = VectorField(series)
            except ValueError as exc:
                raise ValidationError(str(exc)) from exc
        ints = [_series_from_terms(c, nvars, cap, mode) for c in spec.get("integrals", [])]
        if fld is None and not ints:
            raise ValidationError("input has neither a field nor integrals")
        return cls(
            name=str(spec.get("name", "field")),
            nvars=nvars,
            cap=cap,
            tasks=tasks,
            mode=mode,
            seed=int(seed),
            field=fld,
            integrals=ints,
            singular_lines=[list(map(int, v)) for v in spec.get("singular_lines", [])],
            trace=trace or TraceConfig(),
        )


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------


def _mdeg(k) -> list[int]:
    return [int(e) for e in k]


def _fmt_float(x: float) -> float:
    # rounding keeps the report stable against last-bit noise in summaries
    return float(f"{x:.6e}")


@dataclass
class Oriented:
    """Field rearranged to the normal-form profile: sign flip and separatrix axis last."""

    field: VectorField
    sign: int
    perm: list[int]  # new variable i is old variable perm[i]
    lam: tuple[int, ...]


def _permute(X: VectorField, perm: list[int]) -> VectorField:
    n = X.nvars
    comps = []
    for i in range(n):
        src = X[perm[i]]
        terms = {tuple(k[perm[j]] for j in range(n)): c for k, c in src.terms.items()}
        comps.append(TruncatedSeries(n, X.cap, terms, X.mode))
    return VectorField(comps)


def orient(X: VectorField) -> Oriented | None:
    lin = linear_part(X)
    if not is_diagonal(lin):
        return None
    diag = [lin[i][i] for i in range(X.nvars)]
    try:
        cls = classify_spectrum([complex(v).real if X.mode == FLOAT else v for v in diag])
    except SpectrumError:
        return None
    if not cls.isolated_separatrix:
        return None
    n = X.nvars
    axis = cls.separatrix_axis
    perm = [i for i in range(n) if i != axis] + [axis]
    Y = -X if cls.sign_flip else X
    if perm != list(range(n)):
        Y = _permute(Y, perm)
    lam = tuple(cls.oriented().lam[p] for p in perm)
    return Oriented(Y, -1 if cls.sign_flip else 1, perm, lam)


class Pipeline:
    def __init__(self, req: AnalysisRequest, out_dir: Path | None = None):
        self.req = req
        self.out_dir = out_dir
        self.results: dict[str, Any] = {}
        self.verdicts: list[dict] = []
        self.timing: dict[str, float] = {}
        self.oriented: Oriented | None = None
        self.certificate = None
        self.theta = None
        self.integral_set: FirstIntegralSet | None = None
        self.exact_integrals: list[TruncatedSeries] = []
        self.notes: list[str] = []

    # helpers --------------------------------------------------------------

    def _timed(self, name, fn):
        t0 = time.perf_counter()
        try:
            self.results[name] = fn()
        except Skipped as exc:
            self.results[name] = {"status": "skipped", "reason": str(exc)}
        except (ResonanceObstruction, ShapeError, UnsupportedError, HolonomyError, OrderNotCertified,
                ReconstructionError, SpectrumError) as exc:
            self.results[name] = {"status": "obstructed", "error": type(exc).__name__, "message": str(exc)}
            self.verdicts.append({"verdict": OBSTRUCTED, "task": name,
                                  "witness": getattr(exc, "witness", None) or self._exc_witness(exc)})
        self.timing[name] = time.perf_counter() - t0

    @staticmethod
    def _exc_witness(exc) -> dict:
        if isinstance(exc, ResonanceObstruction):
            return {"resonant_terms": [{"component": j + 1, "k": list(k)} for j, k in exc.terms]}
        return {"message": str(exc)}

    def _need_field(self):
        if self.req.field is None:
            raise Skipped("no vector field in the input")
        return self.req.field

    # tasks ----------------------------------------------------------------

    def resonance(self) -> dict:
        X = self._need_field()
        lin = linear_part(X)
        out: dict[str, Any] = {"linear_part_diagonal": is_diagonal(lin)}
        if not is_diagonal(lin):
            raise ShapeError("resonance diagnostics need a diagonal linear part")
        diag = [lin[i][i] for i in range(X.nvars)]
        cls = classify_spectrum([complex(v).real if X.mode == FLOAT else v for v in diag])
        lam = cls.spectrum
        out["lambda"] = lam.to_json()
        out["classification"] = cls.to_json()
        lat = resonance_lattice(lam, max(2, self.req.cap))
        out["lattice"] = lat.to_json()
        out["resonant_monomials"] = {
            str(j + 1): [_mdeg(k) for k in resonant_monomials(lam, j, self.req.cap) if sum(k) >= 2]
            for j in range(lam.n)
        }
        self.oriented = orient(X)
        if self.oriented is not None:
            out["oriented"] = {"sign": self.oriented.sign, "permutation": [p + 1 for p in self.oriented.perm],
                               "lambda": list(self.oriented.lam)}
        return out

    def normalform(self) -> dict:
        X = self._need_field()
        if X.mode != EXACT:
            raise UnsupportedError("normal forms need exact coefficients")
        ori = self.oriented or orient(X)
        target = X if ori is None else ori.field
        out: dict[str, Any] = {}
        if ori is not None and is_of_type(target, 1, 2):
            tgt = TypeRS(max(1, self.req.cap // 2), max(2, self.req.cap // 2))
            cert = reduce_type(target, tgt)
            out["reduce_type"] = {
                "target": [tgt.r, tgt.s],
                "residual_zero": cert.residual_zero,
                "steps": cert.steps,
                "normal": str(cert.normal),
            }
        pd = poincare_dulac(target)
        self.certificate = pd
        out["poincare_dulac"] = {
            "residual_zero": pd.residual_zero,
            "all_terms_resonant": surviving_terms_resonant(pd.normal),
            "normal": str(pd.normal),
            "steps": pd.steps,
            "unit_factor": None if pd.unit_factor is None else str(pd.unit_factor),
            "certificate": pd.to_json(),
        }
        return out

    def holonomy(self) -> dict:
        X = self._need_field()
        ori = self.oriented or orient(X)
        if ori is None:
            raise HolonomyError("no isolated separatrix: holonomy loop undefined")
        Y = ori.field.to_float()
        c0 = self.req.trace.c0
        theta = holonomy_map(Y, c0)
        self.theta = theta
        lam = ori.lam
        expected = holonomy_order(lam)
        res = order_of(theta, max(2 * expected, 12), lambda_n=lam[-1])
        out: dict[str, Any] = {
            "c0": [complex(c0).real, complex(c0).imag],
            "order": res.to_json(),
            "closed_form_order": expected,
            "orders_agree": res.order == expected,
        }
        group = HolonomyGroup.from_generator(theta, max(2 * expected, 12), lam)
        out["group"] = {"order": group.to_json()["order"], "phases": group.phases()}
        if not res.certified:
            raise OrderNotCertified(f"holonomy order not certified <= {res.max_order}")
        G = linearize_finite(theta, res.order)
        defect = conjugacy_defect(G, theta)
        seeds = invariant_polynomials_average(G, lam, c0)
        out["linearization"] = {"conjugacy_defect": _fmt_float(defect), "within_1e-10": defect <= 1e-10}
        out["average_invariants"] = [
            {"j": s.index + 1, "r": s.r, "s": s.s, "invariant": is_invariant(s.series, theta)} for s in seeds
        ]
        model = HolonomyGroup.linear_model(lam, theta.cap)
        polys, forms = invariant_polynomials_product(model, seed=self.req.seed)
        out["product_invariants"] = {
            "forms": forms,
            "invariant": all(is_invariant(f, h) for f in polys for h in model.elements),
            "zero_locus": zero_locus_check(polys, radius=1.0, seed=self.req.seed),
        }
        return out

    def integrals(self) -> dict:
        req = self.req
        out: dict[str, Any] = {}
        if req.field is None:
            iset = FirstIntegralSet(list(req.integrals), ["monomial"] * len(req.integrals))
            verdict = iset.check_independence()
            out["supplied"] = iset.to_json()
            if req.singular_lines:
                form = verdict.form
                on_lines = [form_vanishes_on_line(form, v) for v in req.singular_lines]
                rng = np.random.default_rng(req.seed)
                pts = rng.normal(size=(100, req.nvars)) + 1j * rng.normal(size=(100, req.nvars))
                out["singular_lines"] = {
                    "count": len(req.singular_lines),
                    "all_in_singular_locus": all(on_lines),
                    "random_points_nonsingular_fraction": nonsingular_fraction(form, pts),
                }
            return out
        X = req.field
        n = X.nvars
        kernel = first_integral_kernel(X, req.cap)
        chosen = greedy_independent(kernel, n - 1)
        found = [kernel[i] for i in chosen]
        if found:
            out["kernel"] = {"dimension": len(kernel),
                             "chosen": FirstIntegralSet(found, ["kernel-solve"] * len(found)).to_json()}
        iset = None
        if len(found) == n - 1:
            iset = FirstIntegralSet(found, ["kernel-solve"] * len(found))
        elif self.certificate is not None and self.certificate.unit_factor is not None and self.oriented:
            ori = self.oriented
            members = invariant_monomials(ori.lam, req.cap)
            cands = transported_integrals(ori.lam, self.certificate.transform, members)
            picked = greedy_independent(list(cands), n - 1)
            tset = FirstIntegralSet([cands[i] for i in picked], ["transported"] * len(picked))
            try:
                rec = reconstruct_coordinates(ori.field, transported_integrals(ori.lam, self.certificate.transform))
                out["reconstruction"] = rec.to_json()
            except ReconstructionError as exc:
                out["reconstruction"] = {"error": str(exc), "witness": exc.witness}
            iset = FirstIntegralSet([_unpermute_series(f, ori.perm) for f in tset], list(tset.provenance))
        if iset is None or len(iset) < n - 1:
            raise ShapeError(f"found {len(found)} of {n - 1} independent integrals at cap")
        verdict = iset.check_independence()
        annihilated = iset.annihilated_by(X)
        self.integral_set = iset
        self.exact_integrals = [f for f in iset if _exact_polynomial_integral(X, f)]
        out["integrals"] = iset.to_json()
        out["annihilated_at_cap"] = annihilated
        out["exact_polynomial_integrals"] = len(self.exact_integrals)
        if annihilated and verdict.independent and len(iset) == n - 1:
            self.verdicts.append({"verdict": CI_CERTIFIED, "task": "integrals", "witness": {
                "independence": verdict.to_json()["witness"], "annihilation": "X(F_j) = 0 at cap " + str(X.cap)}})
        return out

    def trace(self) -> dict:
        X = self._need_field()
        cfg = self.req.trace
        n = X.nvars
        ori = self.oriented or orient(X)
        seeds: dict[str, list[complex]] = {}
        c0 = complex(cfg.c0)
        if ori is not None:
            axis = ori.perm[-1]
            s_axis = [0j] * n
            s_axis[axis] = c0
            seeds["separatrix_axis"] = s_axis
            s_plane = [0j] * n
            others = [i for i in range(n) if i != axis]
            for j, i in enumerate(others):
                s_plane[i] = 0.3 / (j + 1)
            seeds["transverse_plane"] = s_plane
            gen = list(s_plane)
            gen[axis] = 0.4
            seeds["generic"] = gen
        else:
            seeds["generic"] = [0.3 / (j + 1) for j in range(n)]
        ints = list(self.exact_integrals)
        jobs = [(name, s, th) for name, s in seeds.items() for th in trace_directions()]
        threads = max(1, int(os.environ.get("FOLIATION_LAB_THREADS", "1")))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(lambda job: integrate_leaf(X, job[1], job[2], cfg), jobs))
        rows = []
        worst_rel = 0.0
        for (name, s, th), tr in zip(jobs, traces):
            entry = tr.to_json() | {"seed_name": name}
            if ints:
                dev = integral_deviation(tr, ints)
                scale = np.asarray([1 + abs(F.evaluate(tr.seed)) for F in ints])
                rel = float(np.max(dev / scale)) if dev.size else 0.0
                worst_rel = max(worst_rel, rel)
                entry["integral_max_rel_deviation"] = _fmt_float(rel)
            rows.append(entry)
            if self.out_dir is not None:
                tdir = self.out_dir / "traces"
                tdir.mkdir(parents=True, exist_ok=True)
                k = trace_directions().index(th)
                write_trace_csv(tdir / f"{self.req.name}_{name}_dir{k}.csv", tr, ints)
        out: dict[str, Any] = {"config": cfg.to_json(), "directions": len(trace_directions()), "traces": rows,
                               "thresholds": {"origin_fraction": 1e-3, "exit_margin": 1e-6}}
        if ints:
            out["integral_conservation"] = {"integrals_checked": len(ints), "max_rel_deviation": _fmt_float(worst_rel),
                                            "within_1e-7": worst_rel <= 1e-7}
        elif self.integral_set is not None:
            out["integral_conservation"] = {"integrals_checked": 0,
                                            "reason": "integrals are exact only up to the cap"}
        if ori is not None:
            axis = ori.perm[-1]
            p = [0j] * n
            p[axis] = cfg.epsilon
            out["axis_transversality"] = sphere_transversality(X.to_float(), p, cfg.epsilon).to_json()
            out["monotone_functional"] = self._monotone(ori, cfg)
            if self.theta is not None:
                seeds_t = transversal_seeds(n - 1, 32, 0.1, self.req.seed)
                nh = numeric_holonomy(ori.field.to_float(), cfg, seeds_t, self.theta)
                out["numeric_holonomy"] = nh.to_json() | {
                    "max_deviation": None if nh.deviation is None else _fmt_float(nh.deviation),
                    "within_1e-6": nh.deviation is not None and nh.deviation <= 1e-6,
                }
        return out

    def _monotone(self, ori: Oriented, cfg: TraceConfig) -> dict:
        n = ori.field.nvars
        lams = list(ori.lam)
        seed = [0.2 / (j + 1) + 0.1j for j in range(n - 1)] + [0.3]
        tr = integrate_leaf(ori.field.to_float(), seed, 0.0, cfg)
        fwd = tr.samples[tr.times >= 0]
        vals = [monotone_functional(p, lams) for p in fwd]
        worst = max((b - a for a, b in zip(vals, vals[1:])), default=0.0)
        return {"samples": len(vals), "max_increase": _fmt_float(worst), "monotone_1e-9": worst <= 1e-9}

    # ----------------------------------------------------------------------

    def run(self) -> dict:
        order = [t for t in TASKS if t in self.req.tasks]
        if self.req.field is not None and "resonance" not in order:
            self.oriented = orient(self.req.field)
        for task in order:
            if task == "integrals" and self.req.field is not None and self.certificate is None \
                    and self.req.field.mode == EXACT and self.oriented is not None:
                # transported integrals need a normal-form certificate
                try:
                    self.certificate = poincare_dulac(self.oriented.field)
                except (UnsupportedError, SpectrumError, ShapeError):
                    pass
            self._timed(task, getattr(self, task))
        self._tci_verdict()
        return self.report()

    def _tci_verdict(self):
        hol = self.results.get("holonomy")
        tr = self.results.get("trace")
        if not isinstance(hol, dict) or "status" in hol or not isinstance(tr, dict) or "status" in tr:
            return
        classes = [t["classification"] for t in tr["traces"] if t["seed_name"] == "separatrix_axis"]
        axis = tr.get("axis_transversality", {})
        nh = tr.get("numeric_holonomy", {})
        evidence = {
            "holonomy_order": hol["order"]["order"],
            "axis_trace_separatrix_candidate": SEPARATRIX in classes,
            "axis_radial_margin": _fmt_float(axis.get("radial", 0.0)),
            "numeric_holonomy_deviation": nh.get("max_deviation"),
        }
        ok = (hol["order"]["certified"] and SEPARATRIX in classes and axis.get("radial", 0.0) != 0.0
              and nh.get("within_1e-6", False))
        self.verdicts.append({"verdict": TCI_EVIDENCE if ok else OBSTRUCTED, "task": "holonomy+trace",
                              "witness": evidence})

    def report(self) -> dict:
        req = self.req
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "request": {"name": req.name, "nvars": req.nvars, "cap": req.cap, "mode": req.mode,
                        "tasks": list(req.tasks), "seed": req.seed, "trace": req.trace.to_json()},
            "results": self.results,
            "verdicts": self.verdicts,
        }


def _exact_polynomial_integral(X: VectorField, f: TruncatedSeries) -> bool:
    """``X(f) = 0`` as polynomials (no truncation), for polynomial ``X`` and ``f``."""
    big = X.cap + f.degree()
    Xb = VectorField([c.with_cap(big) for c in X])
    d = apply_derivation(Xb, f.with_cap(big))
    return d.is_zero() if d.mode == EXACT else d.max_abs() <= 1e-12


def _unpermute_series(f: TruncatedSeries, perm: list[int]) -> TruncatedSeries:
    n = f.nvars
    terms = {}
    for k, c in f.terms.items():
        old = [0] * n
        for i in range(n):
            old[perm[i]] = k[i]
        terms[tuple(old)] = c
    return TruncatedSeries(n, f.cap, terms, f.mode)


def run(request: AnalysisRequest, out_dir: Path | None = None) -> tuple[dict, dict]:
    """Execute the requested tasks; returns ``(report, timing)``."""
    pipe = Pipeline(request, out_dir)
    report = pipe.run()
    return report, pipe.timing


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(f"not serializable: {type(obj).__name__}")


def exit_code_for(report: dict) -> int:
    return EXIT_OBSTRUCTED if any(v["verdict"] == OBSTRUCTED for v in report["verdicts"]) else EXIT_OK


# --------------------------------------------------------------------------


def _parse_c0(text: str) -> complex:
    try:
        re_, im_ = (float(p) for p in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected RE,IM") from exc
    return complex(re_, im_)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="foliation-lab", description=__doc__.splitlines()[0])
    p.add_argument("--input", required=True, help="field spec (JSON or TOML)")
    p.add_argument("--cap", type=int, default=None, help="truncation degree (2..16)")
    p.add_argument("--mode", choices=(EXACT, FLOAT), default=FLOAT)
    p.add_argument("--tasks", default=",".join(TASKS), help="comma-separated subset of " + ",".join(TASKS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--trace-epsilon", type=float, default=1.0)
    p.add_argument("--trace-c0", type=_parse_c0, default=None, help="transversal height as RE,IM")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        spec = load_spec(args.input)
        tasks = [t.strip() for t in args.tasks.split(",") if t.strip()]
        bad = [t for t in tasks if t not in TASKS]
        if bad:
            raise ValidationError(f"unknown tasks {bad}")
        c0 = args.trace_c0 if args.trace_c0 is not None else complex(args.trace_epsilon / 2)
        try:
            cfg = TraceConfig(epsilon=args.trace_epsilon, c0=c0)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
        req = AnalysisRequest.from_spec(spec, cap=args.cap, tasks=tasks, mode=args.mode, seed=args.seed, trace=cfg)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        report, timing = run(req, out)
        (out / "report.json").write_text(dumps_report(report))
        (out / "timing.json").write_text(json.dumps({k: round(v, 6) for k, v in timing.items()}, indent=2) + "\n")
    except Exception as exc:  # noqa: BLE001 - reported as an internal failure
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    for v in report["verdicts"]:
        log.info("%s (%s)", v["verdict"], v["task"])
    return exit_code_for(report)


if __name__ == "__main__":
    sys.exit(main())
