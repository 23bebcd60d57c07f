"""Command-line experiment driver.

Every run is described by an :class:`ExperimentSpec` (command, parameters,
seed, output directory), built from flags or read from ``--spec file.json``.
Outputs are JSON with sorted keys and a ``format_version`` field, plus CSV
and SVG where they make sense.  Nothing time-dependent is written, so the
same spec and seed give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import NoncompLabError, SchemaError

FORMAT_VERSION = 1


@dataclass
class ExperimentSpec:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    out: str | None = None

    def to_json(self) -> dict:
        return {"command": self.command, "params": self.params, "seed": self.seed, "out": self.out}


# ---------------------------------------------------------------------------
# Parameter parsing
# ---------------------------------------------------------------------------


def parse_scale(text, alpha: Fraction) -> Fraction:
    """``"0.9invalpha"`` means ``0.9 / alpha``; anything else is a rational literal."""
    s = str(text).strip()
    if s.endswith("invalpha"):
        head = s[: -len("invalpha")] or "1"
        return Fraction(head) / alpha
    return Fraction(s)


def _frac(v) -> Fraction:
    return Fraction(str(v))


# name -> (type converter, default)
SCHEMAS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "enumerate": {"family": (str, "standard"), "budget": (int, 128), "length": (int, None)},
    "derivative": {
        "trials": (int, 100), "scale": (str, "0.9invalpha"), "alpha": (_frac, Fraction(5, 2)),
        "budget": (int, 128), "nonmembers": (int, 20), "adversarial": (float, 0.5),
    },
    "removable": {"x": (list, ["0", "1", "1/2", "1/3", "3/8", "1/4", "1/5"]), "budget": (int, 128)},
    "embed": {
        "harness": (str, "all"), "delta": (_frac, Fraction(1, 10)), "epsilon": (_frac, Fraction(1, 5)),
        "trials": (int, 100), "j_max": (int, 50), "theta": (_frac, Fraction(1, 5)), "samples": (int, 200),
        "maps": (int, 20), "looper_horizon": (int, 10_000),
    },
    "flow": {
        "M": (int, 6), "n": (int, 5), "budget": (int, 128), "t_end": (float, 20.0),
        "starts": (list, ["0.1", "0.3", "0.5", "0.6", "1.2", "2.5"]), "samples": (int, 64),
    },
    "classify": {
        "field": (str, "radial"), "k": (int, 16), "level": (int, None), "sink": (int, 1),
        "t_budget": (int, 40), "mode": (str, "fast"), "points": (list, []),
    },
    "report": {"inputs": (list, [])},
}


def validate(spec: ExperimentSpec) -> dict[str, Any]:
    """Fill defaults and convert types; unknown keys or bad values raise :class:`SchemaError`."""
    if spec.command not in SCHEMAS:
        raise SchemaError(f"unknown command {spec.command!r}; expected one of {sorted(SCHEMAS)}")
    schema = SCHEMAS[spec.command]
    unknown = set(spec.params) - set(schema)
    if unknown:
        raise SchemaError(f"unknown parameters for {spec.command}: {sorted(unknown)}")
    out = {}
    for name, (conv, default) in schema.items():
        v = spec.params.get(name, default)
        if v is None:
            out[name] = None
            continue
        try:
            if conv is list:
                out[name] = [str(x) for x in v] if isinstance(v, (list, tuple)) else [x for x in str(v).split(",") if x]
            else:
                out[name] = conv(v)
        except (TypeError, ValueError, ZeroDivisionError) as ex:
            raise SchemaError(f"parameter {name}={v!r}: {ex}") from ex
    return out


def load_spec(path: str) -> ExperimentSpec:
    text = Path(path).read_text()
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as ex:
        raise SchemaError(f"spec is not valid JSON: {ex}") from ex
    if not isinstance(data, dict) or not data:
        raise SchemaError("empty spec: a 'command' is required")
    if "command" not in data:
        raise SchemaError("spec has no 'command'")
    extra = set(data) - {"command", "params", "seed", "out", "format_version"}
    if extra:
        raise SchemaError(f"unknown spec fields {sorted(extra)}")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError("'params' must be an object")
    try:
        seed = int(data.get("seed", 0))
    except (TypeError, ValueError) as ex:
        raise SchemaError(f"bad seed: {ex}") from ex
    return ExperimentSpec(str(data["command"]), params, seed, data.get("out"))


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _clean(obj):
    """Make a report JSON-serialisable (fractions and dyadics become strings)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


@dataclass
class Artifacts:
    report: dict
    files: dict[str, str] = field(default_factory=dict)  # extra name -> text


def _threads() -> int:
    from .classifier import thread_count

    return thread_count()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_enumerate(p, seed) -> Artifacts:
    from .recursion import FAMILIES, dovetail_enumerate, enumerate_at_least

    if p["family"] not in FAMILIES:
        raise SchemaError(f"unknown family {p['family']!r}")
    fam = FAMILIES[p["family"]]()
    prefix = enumerate_at_least(fam, p["length"]) if p["length"] else dovetail_enumerate(fam, p["budget"])
    rep = {"format_version": FORMAT_VERSION, "kind": "enumeration", **prefix.to_json()}
    rows = [("index", "value")] + list(enumerate(prefix.values))
    return Artifacts(rep, {"enumerate.csv": csv_text(rows)})


def cmd_derivative(p, seed) -> Artifacts:
    from .constructions import robust_derivative_harness
    from .exactnum import Dyadic
    from .planarflow import default_prefix

    alpha = p["alpha"]
    scale = parse_scale(p["scale"], alpha)
    prefix = default_prefix(p["budget"])
    alpha_d = Dyadic.coerce(alpha) if alpha.denominator & (alpha.denominator - 1) == 0 else None
    if alpha_d is None:
        raise SchemaError("alpha must be dyadic")
    ids = list(range(p["trials"]))
    nt = _threads()
    chunks = [ids[i::nt] for i in range(nt)] if nt > 1 else [ids]

    def run(sub):
        return robust_derivative_harness(
            p["trials"], scale, prefix, seed, alpha_d, p["nonmembers"], p["adversarial"], trial_ids=sub
        )

    if nt > 1:
        with ThreadPoolExecutor(nt) as ex:
            parts = list(ex.map(run, chunks))
    else:
        parts = [run(ids)]
    report = parts[0]
    for extra in parts[1:]:
        report.records.extend(extra.records)
        report.misclassifications += extra.misclassifications
        report.gap_violations += extra.gap_violations
    report.records.sort(key=lambda r: (r["trial"], r["n"]))
    rep = report.to_json()
    rep["scale_spec"] = p["scale"]
    keys = ["trial", "n", "k", "truth", "verdict", "mu_lo", "mu_hi"]
    rows = [keys] + [[r.get(k, "") for k in keys] for r in rep["records"]]
    return Artifacts(rep, {"derivative.csv": csv_text(rows)})


def cmd_removable(p, seed) -> Artifacts:
    from .constructions import removable_phi_eval
    from .exactnum import LowerBound
    from .planarflow import default_prefix

    prefix = default_prefix(p["budget"])
    rows = []
    for x in p["x"]:
        v = removable_phi_eval(Fraction(x), prefix)
        if isinstance(v, LowerBound):
            rows.append({"x": x, "kind": "lower_bound", "lo": str(v.lo), "hi": None, "float_lo": float(v.lo)})
        else:
            rows.append({"x": x, "kind": "point" if v.is_point() else "interval", "lo": str(v.lo), "hi": str(v.hi),
                         "float_lo": float(v.lo)})
    rep = {"format_version": FORMAT_VERSION, "kind": "removable-table", "prefix_length": len(prefix), "rows": rows}
    table = [("x", "kind", "lo", "hi", "float_lo")] + [(r["x"], r["kind"], r["lo"], r["hi"] or "", r["float_lo"]) for r in rows]
    return Artifacts(rep, {"removable.csv": csv_text(table)})


def cmd_embed(p, seed) -> Artifacts:
    from . import embedding as emb
    from .constructions import make_rng
    from .machines import unary_increment

    which = p["harness"]
    if which not in ("all", "tracking", "contraction", "halting"):
        raise SchemaError("harness must be one of all, tracking, contraction, halting")
    rep: dict[str, Any] = {"format_version": FORMAT_VERSION, "kind": "embedding"}
    if which in ("all", "tracking"):
        rep["tracking"] = emb.proposition1_harness(p["delta"], p["epsilon"], p["trials"], p["j_max"], seed)
    if which in ("all", "contraction"):
        rng = make_rng(seed, 6)
        q = emb.random_tanh_perturbation(rng, c1_bound=p["theta"])
        g = emb.PerturbedMap(emb.ExtendedMap(unary_increment()), q)
        rep["contraction"] = emb.contraction_check(g, p["samples"], seed)
    if which in ("all", "halting"):
        rep["halting"] = emb.halting_basin_harness(p["epsilon"], p["maps"], seed, looper_horizon=p["looper_horizon"])
    return Artifacts(rep)


def cmd_flow(p, seed) -> Artifacts:
    from .exactnum import Dyadic
    from .planarflow import (
        basin_radius_estimate, default_prefix, field_distance_check, inward_check, modulus_theta,
        planar_field, profile_build, radial_reference, shift_profile,
    )
    from .integrate import integrate_trajectory
    from .svg import line_chart

    prof = profile_build(default_prefix(p["budget"]), p["M"])
    F = planar_field(prof)
    G = planar_field(shift_profile(prof, p["n"]))
    est = basin_radius_estimate(F, Dyadic(1, -40))
    est_g = basin_radius_estimate(G, Dyadic(1, -40))
    theta = modulus_theta(prof, p["n"])
    rep: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "kind": "plateau-flow",
        "profile": prof.describe(),
        "alpha_M": str(prof.alpha_M),
        "alpha_M_float": float(prof.alpha_M),
        "basin_sq_radius": [str(est.lo), str(est.hi)],
        "theta_n": theta,
        "shifted_basin_sq_radius": [str(est_g.lo), str(est_g.hi)],
        "expected_shift": str(Dyadic(1, -theta)),
        "inward": inward_check(F)["inward"],
        "field_distance": field_distance_check(F, G, p["samples"], seed),
        "epsilon": 2.0 ** -(p["n"] - 1),
    }
    rows = [("w0", "t", "x1", "x2", "sq_radius", "error_bound", "reference_sq_radius")]
    series = {}
    traj = []
    for w0 in p["starts"]:
        w = float(Fraction(w0))
        tr = integrate_trajectory(F, [math.sqrt(w), 0.0], p["t_end"], tol=1e-10, amplification="lognorm", sample_dt=0.25)
        _, ref = radial_reference(F, w, p["t_end"], t_eval=tr.t)
        for (t, x1, x2, sw, e), r in zip(tr.rows(), ref):
            rows.append((w0, repr(t), repr(x1), repr(x2), repr(sw), repr(e), repr(float(r))))
        series[f"w0={w0}"] = (tr.t, tr.sq_radius)
        traj.append({"w0": w0, "final_sq_radius": float(tr.sq_radius[-1]), "max_error_bound": float(tr.error_bound.max()),
                     "max_reference_gap": float(np.max(np.abs(tr.sq_radius - ref)))})
    rep["trajectories"] = traj
    svg = line_chart(series, title=f"squared radius along trajectories, M={p['M']}")
    return Artifacts(rep, {"flow.csv": csv_text(rows), "flow.svg": svg})


def cmd_classify(p, seed) -> Artifacts:
    from .classifier import classify_point, compute_basin, phase_portrait
    from .errors import CycleCertificationFailed, ManifoldEscape, NotStructurallyStable
    from .fields import build_field
    from .svg import basin_svg

    F = build_field(p["field"])
    if p["mode"] not in ("fast", "certified"):
        raise SchemaError("mode must be fast or certified")
    try:
        portrait = phase_portrait(F, p["k"])
    except (CycleCertificationFailed, ManifoldEscape) as ex:
        raise NotStructurallyStable(str(ex)) from ex
    grid = compute_basin(F, p["sink"], p["k"], p["level"], p["t_budget"], portrait=portrait, workers=_threads())
    rep = grid.to_json()
    rep["field"] = F.describe()
    rep["field_spec"] = p["field"]
    if p["points"]:
        verdicts = []
        for s in p["points"]:
            x = [float(Fraction(v)) for v in s.split(":")]
            verdicts.append({"point": s, **classify_point(x, F, portrait, None, p["t_budget"], max(p["sink"], 1),
                                                           mode=p["mode"]).to_json()})
        rep["points"] = verdicts
    return Artifacts(rep, {"classify.csv": csv_text(grid.csv_rows()), "classify.svg": basin_svg(grid)})


def cmd_report(p, seed) -> Artifacts:
    from .svg import line_chart

    if not p["inputs"]:
        raise SchemaError("report needs at least one input JSON file")
    summary = []
    series = {}
    for path in p["inputs"]:
        data = json.loads(Path(path).read_text())
        kind = data.get("kind", "unknown")
        row = {"input": Path(path).name, "kind": kind}
        for key in ("misclassifications", "gap_violations", "violations", "failures", "unresolved_fraction",
                    "alpha_M_float", "cells"):
            if key in data:
                row[key] = data[key]
        for sub in ("tracking", "contraction", "halting"):
            if sub in data:
                row[f"{sub}_violations"] = data[sub].get("violations", data[sub].get("failures"))
        if "exclusivity" in data:
            row["exclusivity_violations"] = data["exclusivity"]["violations"]
        if "counts" in data:
            for name, c in sorted(data["counts"].items()):
                row[f"count_{name}"] = c
        if kind == "plateau-flow":
            for tr in data.get("trajectories", []):
                series.setdefault("final sq_radius", ([], []))
                series["final sq_radius"][0].append(float(Fraction(tr["w0"])))
                series["final sq_radius"][1].append(tr["final_sq_radius"])
        summary.append(row)
    keys = sorted({k for r in summary for k in r} - {"input", "kind"})
    rows = [["input", "kind"] + keys] + [[r["input"], r["kind"]] + [r.get(k, "") for k in keys] for r in summary]
    files = {"report.csv": csv_text(rows)}
    if series:
        files["report.svg"] = line_chart(series, title="final squared radius against start")
    return Artifacts({"format_version": FORMAT_VERSION, "kind": "report", "rows": summary}, files)


HELP = {
    "enumerate": "dump a dovetailed enumeration prefix",
    "derivative": "robust derivative-threshold harness",
    "removable": "table of the removable piecewise-affine map",
    "embed": "orbit tracking, contraction and halting-basin harnesses",
    "flow": "planar flow with a left-computable basin radius",
    "classify": "basin of a sink for a structurally stable field",
    "report": "aggregate JSON reports into CSV and SVG",
}

COMMANDS = {
    "enumerate": cmd_enumerate,
    "derivative": cmd_derivative,
    "removable": cmd_removable,
    "embed": cmd_embed,
    "flow": cmd_flow,
    "classify": cmd_classify,
    "report": cmd_report,
}


def run(spec: ExperimentSpec) -> Artifacts:
    """Validate and execute a spec; write artifacts when ``spec.out`` is set."""
    params = validate(spec)
    art = COMMANDS[spec.command](params, spec.seed)
    art.report.setdefault("format_version", FORMAT_VERSION)
    art.report["spec"] = {"command": spec.command, "params": params, "seed": spec.seed}
    if spec.out:
        out = Path(spec.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{spec.command}.json").write_text(dumps(art.report))
        for name, text in art.files.items():
            (out / name).write_text(text)
    return art


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="noncomp-lab", description="Experiments with computable and non-computable dynamics.")
    ap.add_argument("--spec", help="JSON experiment spec; flags after the command override its params")
    sub = ap.add_subparsers(dest="command")
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="directory for JSON/CSV/SVG artifacts (default: JSON to stdout)")
        for key, (conv, default) in schema.items():
            flag = "--" + key.replace("_", "-")
            if conv is list:
                sp.add_argument(flag, dest=key, default=None, help=f"comma-separated (default {default})")
            else:
                sp.add_argument(flag, dest=key, default=None, help=f"default {default}")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    try:
        if args.spec:
            spec = load_spec(args.spec)
            if args.command and args.command != spec.command:
                raise SchemaError(f"spec command {spec.command!r} differs from {args.command!r}")
        elif args.command:
            spec = ExperimentSpec(args.command)
        else:
            raise SchemaError("no command given (and no --spec)")
        if args.command:
            for key in SCHEMAS[spec.command]:
                v = getattr(args, key, None)
                if v is not None:
                    spec.params[key] = v
            if args.seed is not None:
                spec.seed = args.seed
            if args.out is not None:
                spec.out = args.out
        art = run(spec)
    except SchemaError as ex:
        print(f"schema error: {ex}", file=sys.stderr)
        return 2
    except NoncompLabError as ex:
        print(f"{type(ex).__name__}: {ex}", file=sys.stderr)
        return 3
    if not spec.out:
        sys.stdout.write(dumps(art.report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
