"""Batch front end: ``nari <command> --scenario FILE --out DIR``.

Exit codes: 0 success, 1 input or numeric error, 2 assumption violation.
Diagnostics are written to standard error as one JSON object per line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from .equilibrium import (
    ConfigKind,
    ConfigurationError,
    HalfTie,
    NewsConfiguration,
    brute_force_equilibrium,
    build_canonical_configuration,
    equilibrium_set,
    policy_latitude,
)
from .model import ModelError, ModelSpec, Technology
from .optimizer import (
    AssumptionViolation,
    NumericFailure,
    Tolerances,
    assumption2_check,
    signal_profile,
    skewness_report,
)
from .statics import (
    compare_personalization,
    competitive_comparison,
    lambda_sweep,
    mass_polarization_effect,
    random_consistent_configuration,
    region_scan,
)

EXIT_OK, EXIT_INPUT, EXIT_ASSUMPTION = 0, 1, 2


class ScenarioError(ValueError):
    pass


# --------------------------------------------------------------------------
# output helpers


def _clean(x: Any) -> Any:
    """Make a result JSON-safe: sets become sorted lists, non-finite floats become null."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_clean(v) for v in x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _diag(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps(_clean({"error": kind, "message": message, **extra}), sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# scenario parsing


def load_scenario(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ScenarioError("scenario not found")
    try:
        sc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(sc, dict):
        raise ScenarioError("scenario must be a JSON object")
    if "seed" not in sc or not isinstance(sc["seed"], int):
        raise ScenarioError("scenario needs an integer 'seed'")
    if "model" not in sc:
        raise ScenarioError("scenario needs a 'model'")
    return sc


def _spec(sc: dict) -> ModelSpec:
    spec = ModelSpec.from_dict(sc["model"])
    if "q" in sc:
        spec = spec.with_(q=tuple(sc["q"]))
    return spec


def _tol(sc: dict) -> Tolerances:
    src = {**sc.get("tolerances", {}), **{k: sc[k] for k in ("tol_root", "tol_bind", "max_iter") if k in sc}}
    return Tolerances(
        float(src.get("tol_root", 1e-10)), float(src.get("tol_bind", 1e-9)), int(src.get("max_iter", 100))
    )


def _technology(sc: dict) -> Technology:
    return Technology(sc.get("technology", "personalized"))


def _configuration(sc: dict, spec: ModelSpec, tech: Technology, tol: Tolerances) -> NewsConfiguration:
    cfg = sc.get("configuration")
    anchor = float(sc.get("policy", spec.bliss(spec.K)))
    if cfg is None:
        cfg = "broadcast_star" if tech is Technology.BROADCAST else "independent_star_star"
    if isinstance(cfg, str):
        return build_canonical_configuration(ConfigKind(cfg), spec, tech, anchor, tol)
    if isinstance(cfg, dict) and cfg.get("random"):
        out = random_consistent_configuration(spec, tech, anchor, seed=int(sc["seed"]))
        if out is None:
            raise ConfigurationError("no consistent random configuration found")
        return out
    return NewsConfiguration.from_dict(cfg)


# --------------------------------------------------------------------------
# commands


def cmd_solve(sc: dict, out: Path) -> int:
    spec, tol, tech = _spec(sc), _tol(sc), _technology(sc)
    if "policy" not in sc:
        raise ScenarioError("solve needs 'policy'")
    a = float(sc["policy"])
    if not 0.0 <= a <= spec.a_bar:
        raise ScenarioError("policy outside [0, a_bar]")
    rep = assumption2_check(spec, tech, tol=tol)
    prof = signal_profile(spec, tech, a, tol)
    doc = {
        "technology": tech.value,
        "policy": a,
        "signals": {str(k): prof[k].to_dict() for k in spec.types},
        "assumption2": {"passed": rep.passed, "failures": [list(f) for f in rep.failures[:50]]},
    }
    if a > 0 and rep.passed:
        try:
            doc["skewness"] = skewness_report(spec, a, tol)
        except (NumericFailure, AssumptionViolation) as exc:
            doc["skewness"] = {"error": str(exc)}
    _write(out / "solve.json", dumps(doc))
    if not rep.passed:
        reasons = sorted(rep.reasons)
        _diag("assumption2", "; ".join(reasons), reasons=reasons)
        return EXIT_ASSUMPTION
    return EXIT_OK


def cmd_latitude(sc: dict, out: Path) -> int:
    spec, tol, tech = _spec(sc), _tol(sc), _technology(sc)
    coalitions = sc.get("coalitions") or [[k] for k in spec.types]
    reports = [policy_latitude(spec, tech, c, tol).to_dict() for c in coalitions]
    _write(out / "latitude.json", dumps({"technology": tech.value, "latitudes": reports}))
    return EXIT_OK


def cmd_equilibrium(sc: dict, out: Path, verify: bool = False, step: float | None = None) -> int:
    spec, tol, tech = _spec(sc), _tol(sc), _technology(sc)
    cfg = _configuration(sc, spec, tech, tol)
    eq = equilibrium_set(spec, tech, cfg, tol=tol)
    doc = eq.to_dict()
    verify = verify or bool(sc.get("verify", False))
    if verify:
        step = float(step if step is not None else sc.get("step", 1e-3))
        bf = brute_force_equilibrium(spec, tech, cfg, grid_step=step, tol=tol)
        delta = abs(eq.a_star - bf.a_star)
        doc["verification"] = {"brute_force": bf.to_dict(), "delta": delta, "agree": delta <= step + 1e-12}
    _write(out / "equilibrium.json", dumps(doc))
    return EXIT_OK


def cmd_sweep(sc: dict, out: Path) -> int:
    spec, tol = _spec(sc), _tol(sc)
    lambdas = sc.get("lambdas")
    if not lambdas:
        raise ScenarioError("sweep needs a nonempty 'lambdas' list")
    techs = sc.get("technologies", ["broadcast", "personalized"])
    res = lambda_sweep(spec, [float(x) for x in lambdas], techs, tol)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["technology", "lambda", "a_star", "assumption2"])
    for r in res["rows"]:
        a = "" if r["a_star"] is None else repr(float(r["a_star"]))
        w.writerow([r["technology"], repr(float(r["lambda"])), a, "true" if r["assumption2"] else "false"])
    _write(out / "sweep.csv", buf.getvalue())
    _write(out / "sweep.json", dumps(res))
    return EXIT_OK


def cmd_region(sc: dict, out: Path) -> int:
    spec, tol = _spec(sc), _tol(sc)
    try:
        xa, ya = sc["x_axis"], sc["y_axis"]
    except KeyError as exc:
        raise ScenarioError("region needs 'x_axis' and 'y_axis'") from exc
    checks = sc.get("checks", ["assumption2", "star", "doublestar"])
    grid = region_scan(spec, xa, ya, checks, tol)
    _write(out / "region.csv", grid.to_csv())
    _write(out / "region.json", dumps(grid.to_dict()))
    return EXIT_OK


def cmd_compare(sc: dict, out: Path) -> int:
    spec, tol = _spec(sc), _tol(sc)
    what = sc.get("compare", {"kind": "personalization"})
    kind = what.get("kind", "personalization")
    if kind == "personalization":
        res = compare_personalization(spec, tol=tol)
    elif kind == "competitive":
        res = competitive_comparison(
            spec, what.get("chi_c", "independent_star_star"), what.get("chi_p", "independent_star_star"), tol=tol
        )
    elif kind == "mass_polarization":
        res = mass_polarization_effect(
            spec, what.get("chi", "independent_star_star"), what.get("q", list(spec.q)), what["q_prime"], tol=tol
        )
    else:
        raise ScenarioError(f"unknown comparison {kind!r}")
    _write(out / "compare.json", dumps({"kind": kind, **res}))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "latitude": cmd_latitude,
    "equilibrium": cmd_equilibrium,
    "sweep": cmd_sweep,
    "region": cmd_region,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nari", description="Optimal news signals and equilibrium polarization.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", required=True, help="output directory")
        if name == "equilibrium":
            p.add_argument("--verify", action="store_true", help="cross-check against a brute-force scan")
            p.add_argument("--step", type=float, default=None, help="brute-force grid step")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "equilibrium":
            return cmd_equilibrium(sc, out, args.verify, args.step)
        return COMMANDS[args.command](sc, out)
    except AssumptionViolation as exc:
        rep = exc.report
        reasons = sorted(rep.reasons) if hasattr(rep, "reasons") else []
        _diag("assumption", str(exc), reasons=reasons)
        return EXIT_ASSUMPTION
    except NumericFailure as exc:
        _diag("numeric", str(exc))
        return EXIT_INPUT
    except (ScenarioError, ModelError, ConfigurationError, HalfTie, ValueError, KeyError, TypeError) as exc:
        _diag("input", str(exc) if not isinstance(exc, KeyError) else f"missing field {exc}")
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
