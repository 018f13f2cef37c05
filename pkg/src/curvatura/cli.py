"""Scenario runner.

    curvatura run CONFIG.json [--out DIR] [--no-timestamp]
    curvatura list-scenarios [--dump DIR]
    curvatura export-mesh CONFIG.json FILE.off

A scenario names a space form, a geometry and a list of analyses.  Each
analysis adds results and checks to ``report.json``; the exit status is 0
when every check passes, 1 when one fails, 2 for configuration errors,
3 for geometry errors and 4 when a solver does not converge.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, is_dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

ANALYSES = ("jets", "assemble", "spectrum", "stability", "variation-audit", "topology", "theorem-check")
SCENARIO_FIELDS = ("name", "c", "geometry", "resolution", "analyses", "tolerances", "output_dir")
REQUIRED_FIELDS = ("name", "c", "geometry", "resolution", "analyses")
GEOMETRY_FIELDS = {
    "cap-in-ball": (("R", "r"), ("theta",)),
    "rotational-slab": (("H2",), ("seed",)),
    "ellipsoid": (("a", "b", "c"), ("margin",)),
    "custom": (("file",), ()),
}
CUSTOM_FIELDS = (("expressions", "domain"), ("support", "theta"))
DOMAIN_FIELDS = {
    "disk": (("radius",), ()),
    "annulus": (("r_in", "r_out"), ()),
    "rectangle": (("u0", "u1", "v0", "v1"), ()),
}
DEFAULT_TOLERANCES = {
    "newton": 1e-9,
    "gauss": 1e-8,
    "principal": 1e-8,
    "gauss_bonnet": 1e-3,
    "gauss_bonnet_partition": 1e-2,
    "rotation_zero": 1e-8,
    "robin": 1e-3,
    "snap": 0.1,
    "second_variation": 1e-2,
    "volume_derivative": 1e-4,
    "h2_derivative": 1e-3,
}
TILT = 0.7  # radians between the symmetry axis and the tilted rotation axis

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_GEOMETRY, EXIT_SOLVER = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class Scenario:
    name: str
    c: float
    geometry: dict
    resolution: int
    analyses: tuple[str, ...]
    tolerances: dict = field(default_factory=dict)
    output_dir: str | None = None
    base_dir: Path = Path(".")


# ---------------------------------------------------------------------------
# configuration


def _check_fields(obj: dict, required, optional, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    for k in required:
        if k not in obj:
            raise ConfigError(f"missing field '{k}' in {where}")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"unknown field '{unknown[0]}' in {where}")


def _number(obj: dict, key: str, where: str) -> float:
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"field '{key}' in {where} must be a finite number")
    return float(val)


def parse_scenario(data: dict, base_dir: Path = Path(".")) -> Scenario:
    """Validate a decoded config (exact field names, unknown fields rejected)."""
    _check_fields(data, REQUIRED_FIELDS, [f for f in SCENARIO_FIELDS if f not in REQUIRED_FIELDS], "scenario")
    if not isinstance(data["name"], str) or not data["name"]:
        raise ConfigError("field 'name' must be a nonempty string")
    c = _number(data, "c", "scenario")
    res = data["resolution"]
    if isinstance(res, bool) or not isinstance(res, int) or res < 4:
        raise ConfigError("field 'resolution' must be an integer >= 4")
    an = data["analyses"]
    if not isinstance(an, list) or not an:
        raise ConfigError("field 'analyses' must be a nonempty list")
    for a in an:
        if a not in ANALYSES:
            raise ConfigError(f"unknown analysis '{a}' in field 'analyses'")
    geo = data["geometry"]
    if not isinstance(geo, dict) or "type" not in geo:
        raise ConfigError("missing field 'type' in geometry")
    kind = geo["type"]
    if kind not in GEOMETRY_FIELDS:
        raise ConfigError(f"unknown geometry type '{kind}'")
    req, opt = GEOMETRY_FIELDS[kind]
    _check_fields(geo, ("type", *req), opt, f"geometry '{kind}'")
    for k in req + opt:
        if k in geo and k not in ("file", "seed"):
            _number(geo, k, f"geometry '{kind}'")
    if kind == "rotational-slab" and c != 0:
        raise ConfigError("geometry 'rotational-slab' requires c = 0")
    tol = data.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("field 'tolerances' must be an object")
    for k in tol:
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance '{k}' in field 'tolerances'")
        _number(tol, k, "tolerances")
    out = data.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError("field 'output_dir' must be a string")
    return Scenario(
        name=data["name"],
        c=c,
        geometry=dict(geo),
        resolution=int(res),
        analyses=tuple(an),
        tolerances=dict(tol),
        output_dir=out,
        base_dir=base_dir,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_scenario(data, path.parent)


# ---------------------------------------------------------------------------
# geometry


@dataclass
class Geometry:
    patch: object
    support: object | None
    theta: float
    kind: str | None  # "ball", "slab" or None
    radius: float | None = None


def _custom_domain(spec: dict):
    from curvatura.surface.domains import Annulus, Disk, Rectangle

    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("missing field 'type' in custom domain")
    kind = spec["type"]
    if kind not in DOMAIN_FIELDS:
        raise ConfigError(f"unknown domain type '{kind}'")
    req, opt = DOMAIN_FIELDS[kind]
    _check_fields(spec, ("type", *req), opt, f"domain '{kind}'")
    v = {k: _number(spec, k, f"domain '{kind}'") for k in req}
    if kind == "disk":
        return Disk(v["radius"])
    if kind == "annulus":
        return Annulus(v["r_in"], v["r_out"])
    return Rectangle(v["u0"], v["u1"], v["v0"], v["v1"])


def build_geometry(sc: Scenario) -> Geometry:
    from curvatura.discretize import SlabGeometry
    from curvatura.spaceform import SpaceForm, ball_geometry
    from curvatura.surface.catalog import cap_in_ball, ellipsoid, patch_from_expressions
    from curvatura.surface.rotational import rotational_h2_profile, shoot_slab

    sf = SpaceForm(sc.c)
    g = sc.geometry
    kind = g["type"]
    if kind == "cap-in-ball":
        theta = float(g.get("theta", math.pi / 2))
        patch = cap_in_ball(sf, g["R"], g["r"], theta)
        return Geometry(patch, ball_geometry(sf, g["R"]), theta, "ball", float(g["R"]))
    if kind == "ellipsoid":
        patch = ellipsoid((g["a"], g["b"], g["c"]), sf, margin=float(g.get("margin", 0.25)))
        return Geometry(patch, None, math.pi / 2, None)
    if kind == "rotational-slab":
        shot = shoot_slab(float(g["H2"]))
        seed = g.get("seed", [0.8, 1.2])
        if not (isinstance(seed, list) and len(seed) == 2):
            raise ConfigError("field 'seed' in geometry 'rotational-slab' must be [r0, psi0]")
        prof = rotational_h2_profile(sf, float(g["H2"]), seed=tuple(seed))
        lo, hi = sorted(shot.heights)
        return Geometry(prof.patch, SlabGeometry(lo, hi), math.pi / 2, "slab")
    # custom patch file
    path = Path(g["file"])
    if not path.is_absolute():
        path = sc.base_dir / path
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"patch file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"patch file is not valid JSON: {exc}") from exc
    _check_fields(spec, *CUSTOM_FIELDS, "custom patch file")
    if not isinstance(spec["expressions"], list) or not all(isinstance(e, str) for e in spec["expressions"]):
        raise ConfigError("field 'expressions' must be a list of strings")
    patch = patch_from_expressions(sf, spec["expressions"], _custom_domain(spec["domain"]), name=sc.name)
    theta = float(spec.get("theta", math.pi / 2))
    sup = spec.get("support")
    if sup is None:
        return Geometry(patch, None, theta, None)
    _check_fields(sup, ("type",), ("R", "lower", "upper"), "custom support")
    if sup["type"] == "ball":
        R = _number(sup, "R", "custom support")
        return Geometry(patch, ball_geometry(sf, R), theta, "ball", R)
    if sup["type"] == "slab":
        if sc.c != 0:
            raise ConfigError("slab supports require c = 0")
        return Geometry(
            patch, SlabGeometry(float(sup.get("lower", 0.0)), float(sup.get("upper", 1.0))), theta, "slab"
        )
    raise ConfigError(f"unknown support type '{sup['type']}'")


# ---------------------------------------------------------------------------
# analyses


class _Run:
    def __init__(self, sc: Scenario, out: Path):
        self.sc = sc
        self.out = out
        self.tol = dict(DEFAULT_TOLERANCES, **sc.tolerances)
        self.results: dict = {}
        self.checks: list[dict] = []
        self.files: list[str] = []
        self._mesh = None
        self._ops = None
        self.geo = build_geometry(sc)

    def check(self, name: str, value: float, tol: float, passed: bool | None = None) -> None:
        ok = bool(value < tol) if passed is None else bool(passed)
        self.checks.append(dict(name=name, value=value, tolerance=tol, passed=ok))

    def file(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    @property
    def mesh(self):
        if self._mesh is None:
            from curvatura.discretize import export_off, mesh_patch

            self._mesh = mesh_patch(self.geo.patch, self.sc.resolution)
            export_off(self._mesh, self.file("mesh.off"))
        return self._mesh

    @property
    def ops(self):
        if self._ops is None:
            from curvatura.discretize import AssemblyConfig, assemble

            cfg = AssemblyConfig(theta=self.geo.theta, support=self.geo.support)
            self._ops = assemble(self.mesh, self.geo.patch.sf, cfg)
        return self._ops

    # individual analyses -------------------------------------------------

    def jets(self) -> dict:
        from curvatura.surface.jets import (
            evaluate_jets,
            gauss_relation_residual,
            sample_points,
            verify_newton_identities,
        )

        pts = sample_points(self.geo.patch, 8)
        newton = max(float(np.max(r)) for r in verify_newton_identities(evaluate_jets(self.geo.patch, pts)))
        gauss = float(np.max(gauss_relation_residual(self.geo.patch, pts)))
        self.check("jets.newton_identities", newton, self.tol["newton"])
        self.check("jets.gauss_relation", gauss, self.tol["gauss"])
        return dict(n_points=len(pts), newton_residual=newton, gauss_residual=gauss)

    def assemble(self) -> dict:
        from curvatura.discretize import export_coo

        ops = self.ops
        for key in ("K", "M", "Q", "B"):
            export_coo(getattr(ops, key), self.file(f"{key}.coo"))
        m = ops.mesh
        return dict(
            n_vertices=m.n_vertices,
            n_triangles=m.n_triangles,
            euler_characteristic=m.euler_characteristic,
            boundary_components=m.n_boundary_components,
            max_edge_length=m.max_edge_length,
            area=float(ops.M.sum()),
            p1_definite=ops.p1_definite,
            principal_boundary_defect=ops.principal_boundary_defect,
            notes=list(ops.notes),
        )

    def spectrum(self) -> dict:
        from curvatura.stability import export_spectrum_csv, solve_spectrum

        out = {}
        for label, constrained in (("full", False), ("constrained", True)):
            spec = solve_spectrum(self.ops, k=4, constrained=constrained)
            export_spectrum_csv(spec, self.file(f"spectrum_{label}.csv"))
            out[label] = dict(
                eigenvalues=spec.eigenvalues.tolist(),
                residuals=spec.residuals.tolist(),
                iterations=spec.iterations,
            )
        return out

    def stability(self) -> dict:
        from curvatura.stability import stability_verdict

        if not self.ops.p1_definite:
            return dict(refused="P1 is not definite on the mesh")
        return asdict(stability_verdict(self.ops))

    def variation_audit(self) -> dict:
        from curvatura.variations import (
            admissible_variation,
            h2_derivative_audit,
            mean_zero,
            polynomial_variation,
            second_variation_audit,
            volume_derivative_audit,
        )

        if self.geo.kind is None:
            return dict(skipped="needs a ball or slab support")
        patch = self.geo.patch
        families = [{(1, 0): 1.0}, {(2, 0): 1.0, (0, 2): 0.5}, {(1, 1): 1.0, (0, 1): 0.5, (2, 0): 0.7}]
        rows = []
        for k, terms in enumerate(families):
            base = polynomial_variation(patch, terms)
            h2 = h2_derivative_audit(base)
            vol = volume_derivative_audit(polynomial_variation(patch, {**terms, (0, 0): 1.0}))
            var = admissible_variation(mean_zero(base), self.geo.support)
            aud = second_variation_audit(var, self.ops)
            self.check(f"variation.h2_derivative[{k}]", h2, self.tol["h2_derivative"])
            self.check(f"variation.volume_derivative[{k}]", vol["relative_error"], self.tol["volume_derivative"])
            self.check(f"variation.second_variation[{k}]", aud.relative_error, self.tol["second_variation"])
            rows.append(
                dict(
                    terms=[[list(m), v] for m, v in sorted(terms.items())],
                    h2_derivative_error=h2,
                    volume_derivative_error=vol["relative_error"],
                    **asdict(aud),
                )
            )
        return dict(functions=rows)

    def topology(self) -> dict:
        from curvatura.topology import (
            DegenerateLocusError,
            NodalError,
            balanced_cutoff,
            boundary_principal_direction_check,
            boundary_sign_changes,
            export_audit_json,
            export_graph_json,
            export_polylines_csv,
            export_umbilics_json,
            gauss_bonnet_audit,
            nodal_graph,
            rotation_test_function,
            test_function_pde_residual,
            umbilic_locus,
        )

        out: dict = {}
        try:
            rep = umbilic_locus(self.geo.patch)
            export_umbilics_json(rep, self.file("umbilics.json"))
            out["umbilics"] = rep.to_json()
            if "closed_euler_characteristic" in self.geo.patch.params:
                self.check("topology.umbilic_snap", rep.max_snap_distance, self.tol["snap"])
                err = abs(rep.sum_of_indices - rep.euler_characteristic)
                self.check("topology.poincare_hopf", err, 1e-12)
        except DegenerateLocusError as exc:
            out["umbilics"] = dict(degenerate=str(exc))
        mesh = self.mesh
        if len(mesh.boundary_vertices):
            val = boundary_principal_direction_check(mesh)
            out["boundary_principal_check"] = val
            if self.geo.kind is not None:
                self.check("topology.boundary_principal_direction", val, self.tol["principal"])
        if not mesh.patch.domain.has_corners:
            ball = self.geo.support if self.geo.kind == "ball" else None
            gb = gauss_bonnet_audit(mesh, ball=ball)
            export_audit_json(gb, self.file("gauss_bonnet.json"))
            out["gauss_bonnet"] = dict(residual=gb.global_residual, genus_inequality=gb.genus_inequality)
            self.check("topology.gauss_bonnet", abs(gb.global_residual), self.tol["gauss_bonnet"])
        if self.geo.kind == "ball":
            out["rotation"] = self._rotation_block(
                nodal_graph,
                NodalError,
                balanced_cutoff,
                boundary_sign_changes,
                export_graph_json,
                export_polylines_csv,
                gauss_bonnet_audit,
                rotation_test_function,
                test_function_pde_residual,
            )
        return out

    def _rotation_block(
        self,
        nodal_graph,
        NodalError,
        balanced_cutoff,
        boundary_sign_changes,
        export_graph_json,
        export_polylines_csv,
        gauss_bonnet_audit,
        rotation_test_function,
        test_function_pde_residual,
    ) -> dict:
        mesh, ops, sf = self.mesh, self.ops, self.geo.patch.sf
        f0 = rotation_test_function(mesh, sf)
        zero = float(np.max(np.abs(f0)))
        self.check("topology.rotation_symmetric_axis", zero, self.tol["rotation_zero"])
        try:
            nodal_graph(mesh, f0)
            verdict = "nonzero"
        except NodalError:
            verdict = "identically zero"
        d = np.linalg.norm(mesh.positions[:, :3], axis=1)
        a0 = np.asarray(mesh.jets.normal[int(np.argmin(d))], dtype=float)[:3]
        a0 = a0 / np.linalg.norm(a0)
        e = np.eye(3)[int(np.argmin(np.abs(a0)))]
        e = e - (e @ a0) * a0
        axis = math.cos(TILT) * a0 + math.sin(TILT) * e / np.linalg.norm(e)
        f = rotation_test_function(mesh, sf, axis=axis)
        pde = test_function_pde_residual(ops, f)
        self.check("topology.robin_residual", pde.boundary, self.tol["robin"])
        graph = nodal_graph(mesh, f)
        export_graph_json(graph, self.file("nodal_graph.json"))
        export_polylines_csv(graph, self.file("nodal_polylines.csv"))
        block = dict(
            symmetric_axis_sup=zero,
            symmetric_axis_verdict=verdict,
            tilted_axis=axis.tolist(),
            pde=asdict(pde),
            nodal=graph.to_json(),
            boundary_sign_changes=boundary_sign_changes(mesh, f),
        )
        if graph.n_domains >= 2:
            cut = balanced_cutoff(graph, (0, 1), ops, ops)
            block["cutoff"] = dict(
                alpha=cut.alpha,
                integral=cut.integral,
                index_value=cut.index_value,
                relative_index=cut.index_value / float(cut.values @ (ops.M @ cut.values)),
            )
            gb = gauss_bonnet_audit(mesh, graph)
            block["gauss_bonnet_partition"] = dict(
                global_residual=gb.global_residual,
                region_residuals=[r.residual for r in gb.regions],
                external_angles=[r.external_angles for r in gb.regions],
            )
            self.check(
                "topology.gauss_bonnet_partition", abs(gb.global_residual), self.tol["gauss_bonnet_partition"]
            )
        return block

    def theorem_check(self) -> dict:
        from curvatura.topology import theorem2_hypothesis_check

        if self.geo.kind != "ball":
            return dict(skipped="needs a ball support")
        return theorem2_hypothesis_check(self.mesh, self.geo.patch.sf, self.geo.radius).to_json()

    def execute(self) -> dict:
        dispatch = {
            "jets": self.jets,
            "assemble": self.assemble,
            "spectrum": self.spectrum,
            "stability": self.stability,
            "variation-audit": self.variation_audit,
            "topology": self.topology,
            "theorem-check": self.theorem_check,
        }
        for a in self.sc.analyses:
            self.results[a] = dispatch[a]()
        return self.results


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _thread_limit():
    env = os.environ.get("CURVATURA_THREADS")
    if env is None or env == "":
        return contextlib.nullcontext()
    try:
        n = int(env)
    except ValueError as exc:
        raise ConfigError("CURVATURA_THREADS must be a positive integer") from exc
    if n < 1:
        raise ConfigError("CURVATURA_THREADS must be a positive integer")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def run_scenario(sc: Scenario, out: Path, timestamp: bool = True) -> tuple[int, dict]:
    """Run every analysis and write ``report.json``; returns (exit status, report)."""
    with _thread_limit():
        run = _Run(sc, out)
        # created only once the geometry is valid, so failed configs leave nothing behind
        out.mkdir(parents=True, exist_ok=True)
        run.execute()
    passed = all(c["passed"] for c in run.checks)
    scen = {k: getattr(sc, k) for k in SCENARIO_FIELDS}
    scen["analyses"] = list(sc.analyses)
    report = {
        "schema_version": SCHEMA_VERSION,
        "scenario": scen,
        "results": run.results,
        "checks": run.checks,
        "passed": passed,
        "files": sorted(set(run.files)),
    }
    if timestamp:
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
    report = _clean(report)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return (EXIT_OK if passed else EXIT_CHECK), report


# ---------------------------------------------------------------------------
# built-in scenarios

BUILTIN_SCENARIOS = {
    "cap-free-boundary": dict(
        name="cap-free-boundary",
        c=0.0,
        geometry={"type": "cap-in-ball", "R": 1.0, "r": 1.0},
        resolution=32,
        analyses=["stability", "topology"],
    ),
    "cap-capillary": dict(
        name="cap-capillary",
        c=0.0,
        geometry={"type": "cap-in-ball", "R": 1.0, "r": 1.0, "theta": 1.2},
        resolution=32,
        analyses=["assemble", "topology"],
    ),
    "cap-hyperbolic": dict(
        name="cap-hyperbolic",
        c=-1.0,
        geometry={"type": "cap-in-ball", "R": 1.0, "r": 0.8},
        resolution=32,
        analyses=["jets", "spectrum", "stability", "theorem-check"],
    ),
    "cap-spherical": dict(
        name="cap-spherical",
        c=1.0,
        geometry={"type": "cap-in-ball", "R": 1.0, "r": 0.8},
        resolution=32,
        analyses=["stability", "theorem-check"],
    ),
    "ellipsoid-umbilics": dict(
        name="ellipsoid-umbilics",
        c=0.0,
        geometry={"type": "ellipsoid", "a": 2.0, "b": 1.5, "c": 1.0},
        resolution=24,
        analyses=["jets", "topology"],
    ),
    "cap-variation": dict(
        name="cap-variation",
        c=0.0,
        geometry={"type": "cap-in-ball", "R": 1.0, "r": 1.0},
        resolution=64,
        analyses=["variation-audit"],
    ),
    "rotational-slab": dict(
        name="rotational-slab",
        c=0.0,
        geometry={"type": "rotational-slab", "H2": 1.0},
        resolution=16,
        analyses=["jets"],
    ),
}


# ---------------------------------------------------------------------------
# entry point


def _status_for(exc: BaseException) -> int | None:
    from curvatura.discretize import AssemblyError
    from curvatura.spaceform import GeometryError
    from curvatura.stability import IndefiniteError, SolverError
    from curvatura.surface.patch import PatchError
    from curvatura.surface.rotational import ShootingError
    from curvatura.variations import VariationError

    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (SolverError, ShootingError)):
        return EXIT_SOLVER
    if isinstance(exc, (GeometryError, PatchError, AssemblyError, IndefiniteError, VariationError)):
        return EXIT_GEOMETRY
    return None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvatura", description="Capillary-surface stability and rigidity audits.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (overrides the config)")
    r.add_argument("--no-timestamp", action="store_true", help="omit the generation time from report.json")
    ls = sub.add_parser("list-scenarios", help="list the built-in scenarios")
    ls.add_argument("--dump", default=None, metavar="DIR", help="write each built-in config to DIR/NAME.json")
    ex = sub.add_parser("export-mesh", help="mesh a scenario's geometry and write it as OFF")
    ex.add_argument("config")
    ex.add_argument("output")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            for name, cfg in BUILTIN_SCENARIOS.items():
                print(f"{name}: {cfg['geometry']['type']} c={cfg['c']:g} analyses={','.join(cfg['analyses'])}")
            if args.dump:
                d = Path(args.dump)
                d.mkdir(parents=True, exist_ok=True)
                for name, cfg in BUILTIN_SCENARIOS.items():
                    with open(d / f"{name}.json", "w", encoding="utf-8") as fh:
                        json.dump(cfg, fh, indent=2, sort_keys=True)
                        fh.write("\n")
            return EXIT_OK
        sc = load_scenario(args.config)
        if args.command == "export-mesh":
            from curvatura.discretize import export_off, mesh_patch

            with _thread_limit():
                geo = build_geometry(sc)
                export_off(mesh_patch(geo.patch, sc.resolution), args.output)
            return EXIT_OK
        out = Path(args.out) if args.out else Path(sc.output_dir or Path("out") / sc.name)
        status, report = run_scenario(sc, out, timestamp=not args.no_timestamp)
        for chk in report["checks"]:
            print(f"{'PASS' if chk['passed'] else 'FAIL'} {chk['name']} = {chk['value']!r} (tol {chk['tolerance']!r})")
        print(f"report: {out / 'report.json'}")
        return status
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        status = _status_for(exc)
        if status is None:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return status


if __name__ == "__main__":
    sys.exit(main())
