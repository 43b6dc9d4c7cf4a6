"""Configuration-driven experiment harness.

A run is described by a JSON-compatible config (domain, wavenumber, node
and direction counts, grid, noise, methods).  Outputs are written into a
directory addressed by the config hash, with a manifest recording the
hash, version, stage timings, and a SHA-256 inventory of every written
file.  With the seed fixed, all data outputs are byte-identical across
reruns at any worker count; wall-clock timings live only in the manifest.
"""

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from . import forward as fwd
from . import inverse as inv
from . import operator as op
from .geometry import cavity_curve, circle_curve, discretize, star_curve, translate

__all__ = [
    "ExperimentConfig",
    "config_from_dict",
    "config_hash",
    "curves_from_config",
    "preset_config",
    "preset_names",
    "cmd_forward_test",
    "cmd_synthesize",
    "cmd_reconstruct",
    "cmd_experiment",
]

_DEFAULT_METHODS = (
    {"name": "lsm", "alphas": [1e-4]},
    {"name": "dsm1", "rho": 2.0},
    {"name": "dsm2", "rho": 1.0},
)


@dataclass(frozen=True)
class ExperimentConfig:
    domain: dict
    k: float
    nu: float = 0.3
    boundary_nodes: int = 288
    num_incident: int = 128
    num_receivers: int = 128
    grid: dict = field(default_factory=lambda: {"box": [-3, 3, -3, 3],
                                                "nx": 300, "ny": 300})
    noise: dict = None
    methods: tuple = _DEFAULT_METHODS
    label: str = "run"
    gate_threshold: float = 1e-6

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = [dict(m) for m in self.methods]
        return d

    def validate(self) -> None:
        """Check every numeric field against the module preconditions."""
        curves_from_config(self.domain)
        if self.k <= 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if not -1.0 < self.nu <= 0.5:
            raise ValueError(f"Poisson ratio must lie in (-1, 0.5], got {self.nu}")
        if self.boundary_nodes < 16 or self.boundary_nodes % 2:
            raise ValueError("boundary_nodes must be even and >= 16")
        if self.num_incident < 2 or self.num_receivers < 2:
            raise ValueError("need at least two incident and receiver directions")
        inv.SamplingGrid(box=tuple(self.grid["box"]), nx=int(self.grid["nx"]),
                         ny=int(self.grid["ny"]))
        if self.noise is not None:
            if self.noise.get("kind") not in ("additive", "multiplicative"):
                raise ValueError(f"unknown noise kind {self.noise.get('kind')!r}")
            if float(self.noise.get("level", -1)) < 0:
                raise ValueError("noise level must be nonnegative")
        for m in self.methods:
            if m["name"] == "lsm":
                if not m.get("alphas") or any(a <= 0 for a in m["alphas"]):
                    raise ValueError("lsm needs positive regularization parameters")
            elif m["name"] in ("dsm1", "dsm2"):
                if float(m.get("rho", 0)) <= 0:
                    raise ValueError(f"{m['name']} needs a positive exponent")
            else:
                raise ValueError(f"unknown method {m['name']!r}")


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    extra = set(data) - known
    if extra:
        raise ValueError(f"unknown config fields: {sorted(extra)}")
    data = dict(data)
    if "methods" in data:
        data["methods"] = tuple(dict(m) for m in data["methods"])
    cfg = ExperimentConfig(**data)
    cfg.validate()
    return cfg


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def curves_from_config(domain: dict):
    kind = domain.get("kind")
    if kind == "star":
        base = star_curve(domain.get("amplitude", 0.3), domain.get("arms", 5),
                          scale=domain.get("radius", 1.0))
    elif kind == "circle":
        base = circle_curve(domain.get("radius", 1.0))
    elif kind == "cavity":
        base = cavity_curve(domain.get("scale"))
    else:
        raise ValueError(f"unknown domain kind {kind!r}")
    centers = domain.get("centers")
    if not centers:
        return [base]
    return [translate(base, c) for c in centers]


# --- output helpers ---------------------------------------------------------


def _write_json_atomic(payload: dict, path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _run_dir(out_dir: str, cfg: ExperimentConfig) -> str:
    d = os.path.join(out_dir, f"{cfg.label}-{config_hash(cfg)}")
    os.makedirs(d, exist_ok=True)
    return d


def _finish_manifest(run_dir: str, cfg: ExperimentConfig, timings: dict,
                     metrics: dict, files: list) -> str:
    manifest = {
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg),
        "version": __version__,
        "timings_s": {k: round(v, 4) for k, v in timings.items()},
        "metrics": metrics,
        "files": {os.path.basename(f): _sha256(f) for f in files},
    }
    path = os.path.join(run_dir, "manifest.json")
    _write_json_atomic(manifest, path)
    return path


def _export_field(fieldobj: inv.IndicatorField, base: str) -> list:
    csv_path = base + ".csv"
    pgm_path = base + ".pgm"
    inv.field_to_csv(fieldobj, csv_path)
    if fieldobj.method == "lsm":
        inv.field_to_pgm(inv.log_rescale(fieldobj), pgm_path)
    else:
        inv.field_to_pgm(fieldobj.rescale(), pgm_path)
    return [csv_path, pgm_path]


# --- commands ---------------------------------------------------------------


def cmd_forward_test(cfg: ExperimentConfig, out_dir: str = None,
                     quiet: bool = False) -> dict:
    """Analytic point-source accuracy protocol for the configured domain."""
    cfg.validate()
    params = fwd.PlateParams(k=cfg.k, nu=cfg.nu)
    meshes = [discretize(c, cfg.boundary_nodes) for c in curves_from_config(cfg.domain)]
    t0 = time.perf_counter()
    result = fwd.point_source_test(meshes, params)
    result["elapsed_s"] = round(time.perf_counter() - t0, 4)
    result["k"] = cfg.k
    result["nu"] = cfg.nu
    if not quiet:
        print(f"N={result['n_nodes']:6d}  relative error = {result['relative_error']:.3e}"
              f"  ({result['elapsed_s']:.2f} s)")
    if out_dir is not None:
        run_dir = _run_dir(out_dir, cfg)
        metrics_path = os.path.join(run_dir, "metrics.json")
        _write_json_atomic({"forward_test": result}, metrics_path)
        _finish_manifest(run_dir, cfg, {"forward_test": result["elapsed_s"]},
                         {"forward_test": result}, [metrics_path])
    return result


def synthesize_matrix(cfg: ExperimentConfig, seed=None, workers: int = 1):
    """Far-field matrix for the config (noise applied when configured)."""
    params = fwd.PlateParams(k=cfg.k, nu=cfg.nu)
    meshes = [discretize(c, cfg.boundary_nodes) for c in curves_from_config(cfg.domain)]
    sysmat = fwd.assemble(meshes, params)
    dirs = op.DirectionSet.uniform(cfg.num_incident)
    recv = op.DirectionSet.uniform(cfg.num_receivers)
    ff = op.synthesize(meshes, params, dirs, recv, sysmat=sysmat, workers=workers)
    if cfg.noise is not None:
        use_seed = int(cfg.noise.get("seed", 0)) if seed is None else int(seed)
        ff = op.add_noise(ff, cfg.noise["kind"], float(cfg.noise["level"]), use_seed)
    return ff, meshes, params


def cmd_synthesize(cfg: ExperimentConfig, out_dir: str, seed=None,
                   workers: int = 1) -> dict:
    """Write the far-field matrix (BHFF + CSV) and its manifest."""
    cfg.validate()
    run_dir = _run_dir(out_dir, cfg)
    t0 = time.perf_counter()
    ff, _, _ = synthesize_matrix(cfg, seed=seed, workers=workers)
    elapsed = time.perf_counter() - t0
    bhff = os.path.join(run_dir, "farfield.bhff")
    csv = os.path.join(run_dir, "farfield.csv")
    try:
        op.save_bhff(ff, bhff)
        op.save_csv(ff, csv)
    except OSError as exc:
        raise OSError(f"writing far-field outputs under {run_dir}: {exc}") from exc
    metrics = {"provenance": asdict(ff.provenance), "shape": list(ff.shape)}
    if ff.dirs.n == ff.recv.n and ff.provenance.kind == "clean":
        metrics["reciprocity_residual"] = op.reciprocity_residual(ff)
    _finish_manifest(run_dir, cfg, {"synthesize": elapsed}, metrics, [bhff, csv])
    return {"run_dir": run_dir, "bhff": bhff, "metrics": metrics}


def cmd_reconstruct(cfg: ExperimentConfig, matrix_path: str, out_dir: str,
                    workers: int = 1) -> dict:
    """Run the configured methods against a stored far-field matrix."""
    cfg.validate()
    ff = op.load_bhff(matrix_path)
    if abs(ff.k - cfg.k) > 1e-12 or abs(ff.nu - cfg.nu) > 1e-12:
        raise ValueError(
            f"matrix file {matrix_path} has (k, nu) = ({ff.k}, {ff.nu}), "
            f"config wants ({cfg.k}, {cfg.nu})"
        )
    if ff.dirs.n != cfg.num_incident or ff.recv.n != cfg.num_receivers:
        raise ValueError("matrix direction counts do not match the config")
    run_dir = _run_dir(out_dir, cfg)
    grid = inv.SamplingGrid(box=tuple(cfg.grid["box"]), nx=int(cfg.grid["nx"]),
                            ny=int(cfg.grid["ny"]))
    truth = curves_from_config(cfg.domain)
    timings, metrics, files = {}, {}, []
    solver = None
    for method in cfg.methods:
        t0 = time.perf_counter()
        if method["name"] == "lsm":
            if solver is None:
                solver = inv.TikhonovSolver(ff)
            for alpha in method["alphas"]:
                fieldobj = inv.lsm_indicator(grid, ff, alpha, solver=solver,
                                             workers=workers)
                tag = f"lsm_alpha{alpha:g}"
                files += _export_field(fieldobj, os.path.join(run_dir, tag))
                metrics[tag] = inv.localization_metrics(fieldobj, truth)
                metrics[tag]["alpha"] = alpha
        else:
            rho = float(method.get("rho", 2.0 if method["name"] == "dsm1" else 1.0))
            d1, d2 = inv.dsm_indicators(grid, ff, rho1=rho, rho2=rho, workers=workers)
            fieldobj = d1 if method["name"] == "dsm1" else d2
            fieldobj = replace(fieldobj, parameter=rho)
            files += _export_field(fieldobj, os.path.join(run_dir, method["name"]))
            metrics[method["name"]] = inv.localization_metrics(fieldobj, truth)
            metrics[method["name"]]["rho"] = rho
        timings[method["name"]] = time.perf_counter() - t0
    metrics_path = os.path.join(run_dir, "metrics.json")
    _write_json_atomic(metrics, metrics_path)
    files.append(metrics_path)
    _finish_manifest(run_dir, cfg, timings, metrics, files)
    return {"run_dir": run_dir, "metrics": metrics}


# --- canned experiments -----------------------------------------------------

_STAR = {"kind": "star", "amplitude": 0.3, "arms": 5}
_THREE_STARS = {"kind": "star", "amplitude": 0.3, "arms": 5,
                "centers": [[2.0, 2.5], [2.0, -2.5], [-2.0, 0.0]]}
_GRID3 = {"box": [-3, 3, -3, 3], "nx": 300, "ny": 300}
_GRID10 = {"box": [-10, 10, -10, 10], "nx": 500, "ny": 500}

TWO_PI = 2 * np.pi


def _methods(alpha):
    return (
        {"name": "lsm", "alphas": [alpha]},
        {"name": "dsm1", "rho": 2.0},
        {"name": "dsm2", "rho": 1.0},
    )


def preset_names():
    return ["example1", "example2", "example3", "example4", "example5"]


def preset_config(name: str):
    """Desk-scale versions of the five published experiments (k capped at 10 pi)."""
    if name == "example1":
        return [
            ExperimentConfig(domain=_STAR, k=TWO_PI, boundary_nodes=288,
                             grid=_GRID3, methods=_methods(1e-4),
                             label="ex1-5arms"),
            ExperimentConfig(domain={"kind": "cavity"}, k=TWO_PI,
                             boundary_nodes=768, grid=_GRID3,
                             methods=_methods(1e-4), label="ex1-cavity"),
        ]
    if name == "example2":
        runs = []
        for kind in ("additive", "multiplicative"):
            for level in (0.05, 0.5, 1.0):
                runs.append(ExperimentConfig(
                    domain=_STAR, k=TWO_PI, boundary_nodes=288, grid=_GRID3,
                    noise={"kind": kind, "level": level, "seed": 7},
                    methods=_methods(1e-1),
                    label=f"ex2-{kind}-{level:g}"))
        return runs
    if name == "example3":
        return [
            ExperimentConfig(domain=_STAR, k=TWO_PI, nu=nu, boundary_nodes=288,
                             grid=_GRID3,
                             noise={"kind": "additive", "level": 0.05, "seed": 7},
                             methods=_methods(1e-1), label=f"ex3-nu{nu:g}")
            for nu in (-0.5, 0.0, 0.3, 0.5)
        ]
    if name == "example4":
        return [ExperimentConfig(domain=_THREE_STARS, k=TWO_PI,
                                 boundary_nodes=416, grid=_GRID10,
                                 noise={"kind": "additive", "level": 0.05, "seed": 7},
                                 methods=_methods(1e-1), label="ex4-three")]
    if name == "example5":
        return [
            ExperimentConfig(domain=_STAR, k=10 * np.pi, boundary_nodes=512,
                             num_incident=128, num_receivers=128, grid=_GRID3,
                             noise={"kind": "additive", "level": 0.05, "seed": 7},
                             methods=_methods(1e-1), label="ex5-single"),
            ExperimentConfig(domain=_THREE_STARS, k=10 * np.pi, boundary_nodes=512,
                             num_incident=128, num_receivers=128, grid=_GRID10,
                             noise={"kind": "additive", "level": 0.05, "seed": 7},
                             methods=_methods(1e-1), label="ex5-three"),
        ]
    raise ValueError(f"unknown experiment {name!r}; choose from {preset_names()}")


def cmd_experiment(name: str, out_dir: str, seed=None, workers: int = 1) -> list:
    """Run a canned experiment end to end: synthesize, then reconstruct."""
    results = []
    for cfg in preset_config(name):
        synth = cmd_synthesize(cfg, out_dir, seed=seed, workers=workers)
        recon = cmd_reconstruct(cfg, synth["bhff"], out_dir, workers=workers)
        results.append({"label": cfg.label, **recon})
    return results
