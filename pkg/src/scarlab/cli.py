"""Command-line entry point: ``scarlab run | verify-tl | solve-annihilators | entropy-scaling | plot-data``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .annihilators import (
    projector_from_json,
    solve_annihilators,
    verify_extensive_annihilation,
    verify_temperley_lieb,
)
from .entanglement import entropy_scaling, parse_fractions, scaling_lengths, write_scaling_csv
from .fragmentation import (
    INTEGRABLE,
    invariance_violations,
    krylov_components,
    label_sets,
    verify_xxz_reduction,
)
from .hilbert import BasisIndex, DenseCapExceeded, dense_cap, residual
from .models import (
    ModelSpec,
    PerturbationSpec,
    SplittingSpec,
    build_clock_hamiltonian,
    build_hamiltonian,
    fermionic_fields,
    fermionic_perturbation,
    fermionic_spec,
    tl_generator,
    total_sz,
)
from .scars import (
    TOWER_NAMES,
    clock_tower,
    scar_dimension,
    scar_tower,
    supplementary_operator,
    supplementary_tower,
)
from .spectral import (
    annotate_sectors,
    decile_atypicality,
    spectral_report,
    write_eigenstates_csv,
    write_pofs_csv,
    write_rstat_json,
    write_spectrum_csv,
)

EXIT_OK, EXIT_CHECK, EXIT_SCHEMA, EXIT_CAP = 0, 1, 2, 3

ANALYSES = (
    "verify_tl",
    "verify_scars",
    "fragmentation",
    "spectrum",
    "levelstats",
    "entanglement_scatter",
    "entropy_scaling",
    "solve_annihilators",
    "supplementary_suite",
)

_RATIONAL = {
    "type": "object",
    "properties": {"num": {"type": "integer"}, "den": {"type": "integer", "minimum": 1}},
    "required": ["num", "den"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "properties": {
                "family": {"enum": ["xxc", "fermionic", "clock"]},
                "N": {"type": "integer", "minimum": 2},
                "A": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "B": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "twists": {"type": "object", "additionalProperties": {"enum": [1, -1]}},
                "gamma": _RATIONAL,
                "L": {"type": "integer", "minimum": 2},
                "M": {"type": "integer", "minimum": 2},
            },
            "required": ["L"],
            "additionalProperties": False,
        },
        "perturbation": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["random_sx_neighbor", "fermionic_block", "none"]},
                "seed": {"type": "integer"},
                "low": {"type": "number"},
                "high": {"type": "number"},
                "coefficients": {"type": "array", "items": {"type": "number"}},
            },
            "additionalProperties": False,
        },
        "splitting": {
            "type": "object",
            "properties": {
                "J1": {"type": "number"},
                "J2": {"type": "number"},
                "fields": {"type": "array", "items": {"type": "number"}},
                "enabled": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "analysis": {"type": "array", "items": {"enum": list(ANALYSES)}, "uniqueItems": True},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer"},
        "dense_cap": {"type": "integer", "minimum": 1},
        "options": {
            "type": "object",
            "properties": {
                "window": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "unfolding_degree": {"type": "integer", "minimum": 1},
                "bins": {"type": "integer", "minimum": 1},
                "L_A": {"type": "integer", "minimum": 1},
                "r_band": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "ks_max": {"type": "number"},
                "fractions": {"type": "array", "items": {"type": "string"}},
                "lmax": {"type": "integer", "minimum": 12},
                "projector": {"type": "object"},
                "supplementary_L": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
    },
    "required": ["model", "analysis"],
    "additionalProperties": False,
}

DEFAULT_OPTIONS = {
    "window": 0.8,
    "unfolding_degree": 7,
    "bins": 40,
    "r_band": [0.50, 0.55],
    "ks_max": 0.1,
    "fractions": ["1/3,1/3,1/3", "1/2,0,1/2"],
    "lmax": 3072,
    "projector": {"named": "singlet"},
    "supplementary_L": 6,
}

# on-site energies used when a non-spin-1 model is given no explicit fields;
# clock fields must be linear in the clock label
DEFAULT_FIELDS = {
    "fermionic": lambda N: list(fermionic_fields(0.23, 0.41, 0.37)),
    "clock": lambda M: [0.31 * a for a in range(M)],
}

RESIDUAL_TOL = 1e-10
ORTHO_TOL = 1e-10
XXZ_TOL = 1e-12


class ConfigError(ValueError):
    """Configuration is valid JSON but violates the schema or its preconditions."""


class CheckFailed(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def parse_gamma(text: str) -> Fraction:
    """``"p/q"`` (a rational multiple of pi) -> Fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"gamma must be p/q, got {text!r}") from exc


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


class Pipeline:
    """Resolved configuration plus cached intermediate results."""

    def __init__(self, cfg: dict, base_dir: Path):
        self.cfg = cfg
        self.seed = int(cfg.get("seed", 42))
        self.options = {**DEFAULT_OPTIONS, **cfg.get("options", {})}
        out = Path(cfg.get("output_dir", "scarlab_out"))
        self.out = out if out.is_absolute() else base_dir / out
        self.analyses = [a for a in ANALYSES if a in cfg["analysis"]]
        self._cache = {}
        self._resolve_model()

    # -- model ---------------------------------------------------------
    def _resolve_model(self):
        m = self.cfg["model"]
        family = m.get("family", "xxc")
        self.family = family
        self.L = int(m["L"])
        pert = dict(self.cfg.get("perturbation", {}))
        pert.setdefault("seed", self.seed)
        split = dict(self.cfg.get("splitting", {}))
        self.split_on = split.pop("enabled", True)
        kind = pert.pop("kind", "fermionic_block" if family == "fermionic" else "random_sx_neighbor")
        if family == "clock":
            if "M" not in m:
                raise ConfigError("clock model needs M")
            self.M = int(m["M"])
            self.N = self.M
            self.gamma = Fraction(1, self.M)
            self.spec = None
            for a in ("verify_tl", "fragmentation", "spectrum", "levelstats", "entanglement_scatter"):
                if a in self.analyses:
                    raise ConfigError(f"analysis {a} is not defined for the clock family")
        else:
            if "gamma" not in m:
                raise ConfigError("model.gamma is required")
            self.gamma = Fraction(m["gamma"]["num"], m["gamma"]["den"])
            g = float(self.gamma) * math.pi
            if family == "fermionic":
                self.spec = fermionic_spec(g, self.L, self.gamma)
            else:
                for key in ("N", "A", "B"):
                    if key not in m:
                        raise ConfigError(f"model.{key} is required for the xxc family")
                twists = {int(k): int(v) for k, v in m.get("twists", {}).items()}
                try:
                    self.spec = ModelSpec(int(m["N"]), tuple(m["A"]), tuple(m["B"]), g, self.L, twists, self.gamma)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
            self.N = self.spec.N
            if "verify_scars" in self.analyses and not self.spec.helix_compatible:
                raise ConfigError("verify_scars needs gamma L / 2pi to be an integer")
        if kind == "none":
            self.perturbation = None
        elif kind == "fermionic_block":
            if family != "fermionic":
                raise ConfigError("fermionic_block perturbation needs the fermionic family")
            self.perturbation = fermionic_perturbation(float(self.gamma) * math.pi, self.L)
        else:
            coeffs = pert.pop("coefficients", None)
            self.perturbation = PerturbationSpec(kind, coefficients=None if coeffs is None else tuple(coeffs), **pert)
        if "fields" not in split and family != "xxc":
            split["fields"] = DEFAULT_FIELDS[family](self.N)
        try:
            self.splitting = SplittingSpec(**{k: (tuple(v) if k == "fields" else v) for k, v in split.items()})
            self.fields = self.splitting.label_fields(self.N) if self.split_on else None
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def hamiltonian(self):
        if "H" not in self._cache:
            if self.family == "clock":
                H = build_clock_hamiltonian(self.M, self.L, self.perturbation, self.fields)
            else:
                H = build_hamiltonian(self.spec, self.perturbation, self.splitting if self.split_on else None)
            self._cache["H"] = H
        return self._cache["H"]

    def tower(self):
        if "tower" not in self._cache:
            if self.family == "clock":
                self._cache["tower"] = clock_tower(self.M, self.L, self.fields)
            else:
                self._cache["tower"] = scar_tower(self.spec, self.splitting if self.split_on else None)
        return self._cache["tower"]

    def expected_scar_count(self) -> int:
        if self.family == "clock":
            return self.L * (self.M - 1) + 1
        return scar_dimension(self.N, self.L)

    def components(self):
        if "K" not in self._cache:
            if self.family == "clock":
                raise ConfigError("the spectrum stage needs an XXC-family model")
            self._cache["K"] = krylov_components(self.hamiltonian(), self.N, self.L, self.spec.A, self.spec.B)
        return self._cache["K"]

    # -- stages --------------------------------------------------------
    def stage_verify_tl(self) -> dict:
        rep = verify_temperley_lieb(tl_generator(self.spec), self.spec.gamma)
        return {"checks": {"tl_relations": {"value": rep.max_deviation, "tol": rep.tol, "passed": rep.passed}},
                "deviations": rep.as_dict()}

    def stage_verify_scars(self) -> dict:
        H, T = self.hamiltonian(), self.tower()
        energies = T.energies or [0.0] * len(T)
        worst = max(residual(H, s, e) for s, e in zip(T.states, energies))
        ortho = T.orthonormality_error()
        T.to_json(self.out / "tower.json")
        T.dump_amplitudes(self.out / "tower.c64")
        count, expect = len(T), self.expected_scar_count()
        return {"checks": {
            "scar_residual": {"value": worst, "tol": RESIDUAL_TOL, "passed": worst < RESIDUAL_TOL},
            "tower_orthonormality": {"value": ortho, "tol": ORTHO_TOL, "passed": ortho < ORTHO_TOL},
            "scar_count": {"value": count, "expected": expect, "passed": count == expect},
        }}

    def stage_fragmentation(self) -> dict:
        H, spec = self.hamiltonian(), self.spec
        static = label_sets(BasisIndex(self.N, self.L), spec.A, spec.B)
        K = self.components()
        K.to_json(self.out / "sectors.json")
        worst, gauge_ok = 0.0, True
        f = self.fields if self.fields is not None else np.zeros(self.N)
        for sec in static.of_kind(INTEGRABLE):
            a, b = sec.labels
            eta = spec.eta(b)
            if eta == -1 and self.L % 2:
                gauge_ok = False
                continue
            rep = verify_xxz_reduction(H, sec, spec.gamma, eta, (f[a - 1], f[b - 1]))
            worst = max(worst, rep.max_deviation)
        leaks = invariance_violations(H, static)
        mixed = sum(1 for s in K.sectors if s.kind == "mixed")
        return {"checks": {
            "partition": {"value": K.total_dim, "expected": self.N**self.L,
                          "passed": K.is_partition() and static.is_partition()},
            "xxz_reduction": {"value": worst, "tol": XXZ_TOL, "passed": worst < XXZ_TOL and gauge_ok},
            "sector_invariance": {"value": leaks + mixed, "passed": leaks + mixed == 0},
        }, "n_components": len(K.sectors),
            "target_dim": None if K.target is None else K.target_sector.size}

    def _spectrum(self):
        if "records" not in self._cache:
            K = self.components()
            H = self.hamiltonian()
            sz = np.real(total_sz(self.L, self.N).matrix.diagonal()) if self.N == 3 else None
            L_A = self.options.get("L_A")
            self._cache["records"] = annotate_sectors(H, K.sectors, self.N, self.L, self.tower().matrix(), sz, L_A)
        return self._cache["records"]

    def stage_spectrum(self) -> dict:
        records, spectra = self._spectrum()
        write_spectrum_csv([r.energy for r in records], self.out / "spectrum.csv")
        write_eigenstates_csv(records, self.out / "eigenstates.csv")
        flagged = sum(r.scar_flag for r in records)
        expect = self.expected_scar_count()
        return {"checks": {"scar_flags": {"value": flagged, "expected": expect, "passed": flagged == expect}},
                "n_states": len(records)}

    def stage_levelstats(self) -> dict:
        _, spectra = self._spectrum()
        K = self.components()
        if K.target is None:
            raise CheckFailed("no non-integrable component for level statistics")
        name = K.target_sector.name
        o = self.options
        rep = spectral_report(spectra[name], o["window"], o["unfolding_degree"], o["bins"])
        write_rstat_json(rep, self.out / "rstat.json", {"sector": name})
        write_pofs_csv(rep.histogram, self.out / "pofs.csv")
        lo, hi = o["r_band"]
        return {"checks": {
            "r_mean": {"value": rep.r_mean, "band": [lo, hi], "passed": lo <= rep.r_mean <= hi},
            "ks_goe": {"value": rep.ks_distance, "tol": o["ks_max"], "passed": rep.ks_distance < o["ks_max"]},
        }}

    def stage_entanglement_scatter(self) -> dict:
        records, _ = self._spectrum()
        K = self.components()
        rows = decile_atypicality(records, K.target_sector.name)
        bad = [r for r in rows if not r[1] < r[3]]
        with open(self.out / "scar_entropy.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["energy", "entropy", "decile", "thermal_median"])
            for row in rows:
                w.writerow([f"{row[0]:.12g}", f"{row[1]:.12g}", row[2], f"{row[3]:.12g}"])
        return {"checks": {"scar_atypicality": {"value": len(bad), "passed": not bad}}}

    def stage_entropy_scaling(self) -> dict:
        lengths = scaling_lengths(int(self.options["lmax"]))
        curves = [entropy_scaling(fr, lengths) for fr in self.options["fractions"]]
        write_scaling_csv(curves, self.out / "scaling.csv")
        return {"slopes": {" ".join(map(str, c.fractions)): c.slope for c in curves}, "checks": {}}

    def stage_solve_annihilators(self) -> dict:
        sol = solve_annihilators(projector_from_json(self.options["projector"]))
        sol.to_json(self.out / "annihilators.json")
        herm = max(sol.checks["hermiticity"].values(), default=0.0)
        return {"solution_dim": sol.dim, "checks": {
            "solution_hermiticity": {"value": herm, "tol": 1e-10, "passed": herm < 1e-10}}}

    def stage_supplementary_suite(self) -> dict:
        L = int(self.options["supplementary_L"])
        checks, out = {}, {}
        for name in TOWER_NAMES:
            tol = 1e-8 if name == "aklt" else 1e-10
            rep = verify_extensive_annihilation(supplementary_operator(name, L), supplementary_tower(name, L), tol)
            out[name] = rep.max_residual
            checks[f"tower_{name}"] = {"value": rep.max_residual, "tol": tol, "passed": rep.passed}
        with open(self.out / "supplementary.json", "w") as fh:
            json.dump({"L": L, "residuals": out}, fh, indent=1)
        return {"checks": checks}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"schema violation at {list(exc.absolute_path)}: {exc.message}") from exc
    return cfg


def run(config_path, stream=sys.stdout) -> int:
    """Execute the analyses requested in ``config_path``; returns the exit status."""
    try:
        cfg = load_config(config_path)
        pipe = Pipeline(cfg, Path(config_path).resolve().parent)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    # the environment variable takes precedence over the config value
    saved = os.environ.get("SCARLAB_DENSE_CAP")
    if "dense_cap" in cfg and saved is None:
        os.environ["SCARLAB_DENSE_CAP"] = str(cfg["dense_cap"])
    try:
        return _execute(pipe, cfg, stream)
    finally:
        if saved is None:
            os.environ.pop("SCARLAB_DENSE_CAP", None)


def _execute(pipe: Pipeline, cfg: dict, stream) -> int:
    pipe.out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config_hash": config_hash(cfg),
        "seed": pipe.seed,
        "version": __version__,
        "dense_cap": dense_cap(),
        "stages": [],
        "failing_checks": [],
        "failing_stage": None,
    }
    status = EXIT_OK
    for name in pipe.analyses:
        t0 = time.perf_counter()
        entry = {"name": name}
        try:
            result = getattr(pipe, f"stage_{name}")()
            entry.update(result)
            entry["status"] = "ok"
            for cname, c in result.get("checks", {}).items():
                if not c["passed"]:
                    manifest["failing_checks"].append(f"{name}.{cname}")
                    entry["status"] = "failed"
                    status = max(status, EXIT_CHECK)
        except DenseCapExceeded as exc:
            entry.update(status="cap_exceeded", error=str(exc))
            status = EXIT_CAP
        except (CheckFailed, ConfigError, ValueError, ArithmeticError) as exc:
            entry.update(status="error", error=f"{type(exc).__name__}: {exc}")
            manifest["failing_checks"].append(name)
            status = max(status, EXIT_CHECK)
        entry["seconds"] = round(time.perf_counter() - t0, 3)
        manifest["stages"].append(entry)
        print(f"{name}: {entry['status']} ({entry['seconds']:.2f}s)", file=stream)
        if entry["status"] in ("cap_exceeded", "error"):
            manifest["failing_stage"] = name
            break
        if entry["status"] == "failed" and manifest["failing_stage"] is None:
            manifest["failing_stage"] = name
    manifest["exit_code"] = status
    with open(pipe.out / "manifest.json", "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=1)
    for c in manifest["failing_checks"]:
        print(f"FAILED: {c}", file=sys.stderr)
    return status


# ---------------------------------------------------------------------------
# standalone subcommands
# ---------------------------------------------------------------------------


def default_spec(N: int, gamma: Fraction, L: int = 4) -> ModelSpec:
    """Partition used by ``verify-tl``: A = {1} for N <= 3, the fermionic partition for N = 4."""
    g = float(gamma) * math.pi
    if N == 4:
        return fermionic_spec(g, L, gamma)
    return ModelSpec(N, (1,), tuple(range(2, N + 1)), g, L, {}, gamma)


def cmd_verify_tl(args) -> int:
    gamma = parse_gamma(args.gamma)
    if args.n < 2:
        raise ConfigError("N must be at least 2")
    spec = default_spec(args.n, gamma)
    rep = verify_temperley_lieb(tl_generator(spec), spec.gamma)
    print(json.dumps(_jsonable({"N": args.n, "gamma_over_pi": str(gamma), **rep.as_dict()}), indent=1))
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_solve(args) -> int:
    try:
        with open(args.projector) as fh:
            payload = json.load(fh)
        P = projector_from_json(payload)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad projector file: {exc}") from exc
    sol = solve_annihilators(P)
    out = sol.to_json(args.out)
    print(json.dumps({"d": sol.d, "solution_dim": sol.dim, "checks": out["checks"]}, indent=1))
    herm = max(sol.checks["hermiticity"].values(), default=0.0)
    return EXIT_OK if herm < 1e-10 else EXIT_CHECK


def cmd_entropy_scaling(args) -> int:
    try:
        fr = parse_fractions(args.fractions)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    curve = entropy_scaling(fr, scaling_lengths(args.lmax))
    if args.out:
        write_scaling_csv([curve], args.out)
    w = csv.writer(sys.stdout)
    w.writerow(["L", "S_ent"])
    for L, S in curve.points:
        w.writerow([L, f"{S:.12g}"])
    print(f"# slope {curve.slope:.6f} intercept {curve.intercept:.6f} rms {curve.residual:.2e}")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    """Rewrite CSV columns as a whitespace-separated gnuplot data file."""
    try:
        with open(args.csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    if not rows:
        raise ConfigError("empty CSV")
    cols = args.columns.split(",") if args.columns else list(rows[0].keys())
    missing = [c for c in cols if c not in rows[0]]
    if missing:
        raise ConfigError(f"unknown columns {missing}")
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write("# " + " ".join(cols) + "\n")
        for r in rows:
            out.write(" ".join(r[c] for c in cols) + "\n")
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scarlab", description="Scar-state toolkit for XXC-type chains.")
    p.add_argument("--version", action="version", version=f"scarlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the analyses listed in a JSON config")
    r.add_argument("config")

    t = sub.add_parser("verify-tl", help="check the Temperley-Lieb relations")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--gamma", required=True, help="gamma / pi as p/q")

    s = sub.add_parser("solve-annihilators", help="solve for local annihilators of a two-site projector")
    s.add_argument("--projector", required=True)
    s.add_argument("--out", default="annihilators.json")

    e = sub.add_parser("entropy-scaling", help="analytic scar entropy against system size")
    e.add_argument("--fractions", default="1/3,1/3,1/3")
    e.add_argument("--lmax", type=int, default=3072)
    e.add_argument("--out")

    g = sub.add_parser("plot-data", help="emit gnuplot column files from a CSV output")
    g.add_argument("csv")
    g.add_argument("--columns")
    g.add_argument("--out")
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "verify-tl": cmd_verify_tl,
        "solve-annihilators": cmd_solve,
        "entropy-scaling": cmd_entropy_scaling,
        "plot-data": cmd_plot_data,
    }
    if args.command == "run":
        return run(args.config)
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except DenseCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
