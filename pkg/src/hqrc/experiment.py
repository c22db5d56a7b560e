"""Configuration-driven experiment runner.

A single run generates the ground truth, normalizes it on the training
segment, drives the hybrid (or classical ESN baseline) reservoir, fits the
readout, forecasts autoregressively, and scores the forecast.  Sweeps fan a
base configuration out over axes (seeds, feature maps, layer presets, leak
rate, regularization, shot counts, ...) and aggregate box-plot statistics
per cell.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from itertools import product
from pathlib import Path

import numpy as np

from .ansatz import preset_circuit, ring_graph
from .dynamics import (
    Trajectory,
    double_scroll,
    fit_normalizer,
    integrate_rk4,
    lorenz63,
    trajectory_to_csv,
)
from .errors import ConfigError
from .measurement import MeasurementScheme, measurement_context
from .metrics import VptConfig, attractor_overlap, poincare_return_map, rmse_series, vpt
from .readout import TrainingConfig, fit_ridge, forecast, run_training
from .reservoir import (
    ActivationSet,
    ReservoirState,
    WeightDims,
    assemble_learning_vector,
    generate_weights,
    spectral_normalize,
    update_classical,
)
from .statevector import ShotConfig


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemConfig:
    name: str = "lorenz63"
    ic: tuple[float, ...] | None = None  # None: system default initial condition
    dt: float | None = None              # None: system default sampling step
    train_steps: int = 1500
    test_steps: int = 1200
    prune_steps: int = 100
    substeps: int | None = None          # None: system default integrator substeps
    v1_sign: float = 1.0                 # double-scroll only


@dataclass(frozen=True)
class CircuitConfig:
    preset: str = "enc5cx2"
    n_qubits: int = 8
    n_layers: int = 1
    feature_map: str = "tanh"


@dataclass(frozen=True)
class SchemeConfig:
    axes: tuple[str, ...] = ("X", "Y", "Z")
    max_order: int = 2
    connectivity: str = "all-to-all"  # or "ring"


@dataclass(frozen=True)
class ReservoirConfig:
    alpha: float = 0.7
    f_r: str = "identity"
    f_M: str = "identity"
    f_X: str = "identity"
    g: str = "identity"
    f_R: str = "tanh"
    h_X: str = "tanh"
    n_res: int | None = None  # None: measurement-vector size (W_M = identity)
    w_in_dist: str = "normal"
    w_r_dist: str = "normal"
    w_m_dist: str = "identity"
    w_x_dist: str = "normal"


@dataclass(frozen=True)
class ReadoutConfig:
    beta: float = 1e-8


@dataclass(frozen=True)
class NoiseConfig:
    shots: int | None = None  # None: exact expectation values
    coherent_sigma: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    circuit: CircuitConfig = field(default_factory=CircuitConfig)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    reservoir: ReservoirConfig = field(default_factory=ReservoirConfig)
    readout: ReadoutConfig = field(default_factory=ReadoutConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    mode: str = "hqrc"  # or "classical-esn"
    seeds: tuple[int, ...] = (0,)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        def build(dc_type, sub):
            known = {f.name for f in fields(dc_type)}
            unknown = set(sub) - known
            if unknown:
                raise ConfigError(f"unknown {dc_type.__name__} keys: {sorted(unknown)}")
            sub = dict(sub)
            for key in ("ic", "axes", "seeds"):
                if key in sub and isinstance(sub[key], list):
                    sub[key] = tuple(sub[key])
            return dc_type(**sub)

        return cls(
            system=build(SystemConfig, d.get("system", {})),
            circuit=build(CircuitConfig, d.get("circuit", {})),
            scheme=build(SchemeConfig, d.get("scheme", {})),
            reservoir=build(ReservoirConfig, d.get("reservoir", {})),
            readout=build(ReadoutConfig, d.get("readout", {})),
            noise=build(NoiseConfig, d.get("noise", {})),
            mode=d.get("mode", "hqrc"),
            seeds=tuple(d.get("seeds", (0,))),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]

    def with_field(self, path: str, value) -> "ExperimentConfig":
        """Return a copy with one dotted field replaced, e.g. ("readout.beta", 1e-6)."""
        if "." not in path:
            return replace(self, **{path: value})
        section, name = path.split(".", 1)
        sub = getattr(self, section)
        return replace(self, **{section: replace(sub, **{name: value})})


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a JSON or TOML file."""
    raw = _load_config_dict(path)
    raw.pop("sweep", None)
    return ExperimentConfig.from_dict(raw)


def _load_config_dict(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".toml":
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def load_sweep_axes(path) -> tuple[dict, list[int]]:
    """Read the optional "sweep" section: {"axes": {dotted.path: [...]},
    "seeds": [...]}."""
    raw = _load_config_dict(path)
    sweep = raw.get("sweep", {})
    axes = sweep.get("axes", {})
    seeds = [int(s) for s in sweep.get("seeds", raw.get("seeds", [0]))]
    return axes, seeds


# --------------------------------------------------------------------------
# single run
# --------------------------------------------------------------------------


@dataclass
class RunSummary:
    config_hash: str
    seed: int
    mode: str
    vpt: float
    vpt_censored: bool
    overlap_fraction: float
    wall_clock: float
    rmse: list[float]
    return_map_pred: list[list[float]]
    return_map_truth: list[list[float]]
    overlap_report: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    error: str | None = None
    truth: np.ndarray | None = None       # de-normalized, forecast window
    prediction: np.ndarray | None = None  # de-normalized forecast
    dt: float = 0.0

    def to_dict(self, include_trajectories: bool = False) -> dict:
        d = {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "mode": self.mode,
            "vpt": self.vpt,
            "censored": self.vpt_censored,
            "overlap_fraction": self.overlap_fraction,
            "overlap_report": self.overlap_report,
            "wall_clock": self.wall_clock,
            "rmse": self.rmse,
            "return_map_pred": self.return_map_pred,
            "return_map_truth": self.return_map_truth,
            "params": self.params,
            "error": self.error,
            "dt": self.dt,
        }
        if include_trajectories and self.prediction is not None:
            d["truth"] = self.truth.tolist()
            d["prediction"] = self.prediction.tolist()
        return d


def _build_system(sys_cfg: SystemConfig):
    factory = {"lorenz63": lorenz63, "double_scroll": double_scroll}.get(sys_cfg.name)
    if factory is None:
        raise ConfigError(f"unknown system {sys_cfg.name!r}")
    kwargs = {}
    if sys_cfg.dt is not None:
        kwargs["dt"] = sys_cfg.dt
    if sys_cfg.name == "double_scroll":
        kwargs["v1_sign"] = sys_cfg.v1_sign
        if sys_cfg.substeps is not None:
            kwargs["substeps"] = sys_cfg.substeps
    elif sys_cfg.substeps is not None:
        system = factory(**kwargs)
        return replace(system, substeps=sys_cfg.substeps)
    return factory(**kwargs)


def generate_truth(sys_cfg: SystemConfig, extra_steps: int = 0) -> Trajectory:
    system = _build_system(sys_cfg)
    ic = sys_cfg.ic if sys_cfg.ic is not None else system.default_ic
    steps = sys_cfg.train_steps + sys_cfg.test_steps + extra_steps
    return integrate_rk4(system, ic, steps)


def _summary_params(cfg: ExperimentConfig) -> dict:
    return {
        "system": cfg.system.name,
        "preset": cfg.circuit.preset,
        "n_qubits": cfg.circuit.n_qubits,
        "n_layers": cfg.circuit.n_layers,
        "feature_map": cfg.circuit.feature_map,
        "max_order": cfg.scheme.max_order,
        "alpha": cfg.reservoir.alpha,
        "beta": cfg.readout.beta,
        "shots": cfg.noise.shots,
        "coherent_sigma": cfg.noise.coherent_sigma,
        "train_steps": cfg.system.train_steps,
        "prune_steps": cfg.system.prune_steps,
        "test_steps": cfg.system.test_steps,
    }


def _run_esn(cfg, data: Trajectory, train_cfg: TrainingConfig, seed: int, scale: float):
    """Classical leaky-tanh ESN baseline sharing the readout machinery."""
    rng = np.random.default_rng([seed, 0])
    n_res = cfg.reservoir.n_res or 108
    d_in = data.points.shape[1]
    W_r = spectral_normalize(rng.standard_normal((n_res, n_res)))
    W_X = spectral_normalize(rng.standard_normal((n_res, d_in)))
    acts = ActivationSet(
        f_R=cfg.reservoir.f_R, h_X=cfg.reservoir.h_X, alpha=cfg.reservoir.alpha
    )
    alpha = cfg.reservoir.alpha
    state = ReservoirState(r=np.zeros(n_res))
    cols, targets = [], []
    for t in range(train_cfg.train_steps):
        state = update_classical(state, data.points[t], alpha, "tanh", W_r, W_X)
        if t >= train_cfg.prune_steps:
            cols.append(assemble_learning_vector(state, data.points[t], acts))
            targets.append(data.points[t + 1])
    R = np.array(cols).T
    Y = np.array(targets).T
    model = fit_ridge(
        R,
        Y,
        train_cfg.beta,
        train_steps=train_cfg.train_steps,
        prune_steps=train_cfg.prune_steps,
        scale=scale,
        config_hash=cfg.config_hash(),
    )
    X = data.points[train_cfg.train_steps - 1]
    preds = np.empty((cfg.system.test_steps, d_in))
    y = model.predict(assemble_learning_vector(state, X, acts))
    preds[0] = y
    for k in range(1, cfg.system.test_steps):
        state = update_classical(state, y, alpha, "tanh", W_r, W_X)
        y = model.predict(assemble_learning_vector(state, y, acts))
        preds[k] = y
    return preds, model


def run_experiment(
    cfg: ExperimentConfig,
    seed: int,
    truth: Trajectory | None = None,
    keep_trajectories: bool = False,
    model_path=None,
) -> RunSummary:
    """Full pipeline for one (config, seed): truth, normalize, train,
    forecast, score.  Deterministic in exact-expectation mode.  When
    ``model_path`` is given the fitted readout record is saved there."""
    t0 = time.perf_counter()
    sys_cfg = cfg.system
    if truth is None:
        truth = generate_truth(sys_cfg)
    train_cfg = TrainingConfig(
        train_steps=sys_cfg.train_steps,
        prune_steps=sys_cfg.prune_steps,
        beta=cfg.readout.beta,
        dt=truth.dt,
    )
    normalizer = fit_normalizer(truth.points[: sys_cfg.train_steps + 1])
    data = normalizer.apply(truth)

    if cfg.mode == "classical-esn":
        preds_norm, model = _run_esn(cfg, data, train_cfg, seed, normalizer.scale)
    elif cfg.mode == "hqrc":
        rng_struct = np.random.default_rng([seed, 1])
        spec = preset_circuit(
            cfg.circuit.preset,
            cfg.circuit.n_qubits,
            cfg.circuit.n_layers,
            cfg.circuit.feature_map,
            rng=rng_struct,
        )
        if cfg.scheme.connectivity == "all-to-all":
            connectivity = None
        elif cfg.scheme.connectivity == "ring":
            connectivity = ring_graph(cfg.circuit.n_qubits)
        else:
            raise ConfigError(f"unknown connectivity {cfg.scheme.connectivity!r}")
        scheme = MeasurementScheme(
            axes=cfg.scheme.axes, max_order=cfg.scheme.max_order, connectivity=connectivity
        )
        ctx = measurement_context(cfg.circuit.n_qubits, scheme)
        dims = WeightDims(
            enc_dims=spec.encoding_dims,
            d_input=truth.points.shape[1],
            n_meas=ctx.size,
            n_res=cfg.reservoir.n_res,
        )
        weights = generate_weights(
            dims,
            seed,
            w_in_dist=cfg.reservoir.w_in_dist,
            w_r_dist=cfg.reservoir.w_r_dist,
            w_m_dist=cfg.reservoir.w_m_dist,
            w_x_dist=cfg.reservoir.w_x_dist,
        )
        acts = ActivationSet(
            f_r=cfg.reservoir.f_r,
            f_M=cfg.reservoir.f_M,
            f_X=cfg.reservoir.f_X,
            g=cfg.reservoir.g,
            f_R=cfg.reservoir.f_R,
            h_X=cfg.reservoir.h_X,
            alpha=cfg.reservoir.alpha,
        )
        shot_cfg = ShotConfig(
            shots=cfg.noise.shots, coherent_sigma=cfg.noise.coherent_sigma, seed=seed
        )
        noise_rng = np.random.default_rng([seed, 2])
        model, stepper, _ = run_training(
            data,
            spec,
            scheme,
            weights,
            acts,
            train_cfg,
            shot_cfg,
            rng=noise_rng,
            config_hash=cfg.config_hash(),
            scale=normalizer.scale,
        )
        preds_norm = forecast(model, stepper, sys_cfg.test_steps)
    else:
        raise ConfigError(f"unknown mode {cfg.mode!r}")

    if model_path is not None:
        model.save(model_path)

    truth_norm = data.points[sys_cfg.train_steps : sys_cfg.train_steps + sys_cfg.test_steps]
    sigma = truth_norm.std(axis=0)
    vpt_cfg = VptConfig(sigma=sigma, dt=truth.dt)
    vres = vpt(preds_norm, truth_norm, vpt_cfg)
    err = rmse_series(preds_norm, truth_norm, sigma)

    pred_raw = normalizer.invert_points(preds_norm)
    truth_raw = normalizer.invert_points(truth_norm)
    overlap = attractor_overlap(pred_raw, truth_raw)
    rm_pred = poincare_return_map(pred_raw[:, 2])
    rm_truth = poincare_return_map(truth_raw[:, 2])

    return RunSummary(
        config_hash=cfg.config_hash(),
        seed=seed,
        mode=cfg.mode,
        vpt=vres.time,
        vpt_censored=vres.censored,
        overlap_fraction=overlap.fraction,
        overlap_report={
            "box_lo": overlap.box_lo.tolist(),
            "box_hi": overlap.box_hi.tolist(),
            "pred_mean": overlap.pred_mean.tolist(),
            "pred_std": overlap.pred_std.tolist(),
            "truth_mean": overlap.truth_mean.tolist(),
            "truth_std": overlap.truth_std.tolist(),
        },
        wall_clock=time.perf_counter() - t0,
        rmse=[float(v) for v in err],
        return_map_pred=rm_pred.tolist(),
        return_map_truth=rm_truth.tolist(),
        params=_summary_params(cfg),
        truth=truth_raw if keep_trajectories else None,
        prediction=pred_raw if keep_trajectories else None,
        dt=truth.dt,
    )


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------


@dataclass
class SweepCell:
    config: ExperimentConfig
    overrides: dict
    summaries: list[RunSummary]

    def vpt_values(self) -> np.ndarray:
        return np.array([s.vpt for s in self.summaries if s.error is None])

    def aggregates(self) -> dict:
        v = self.vpt_values()
        if v.size == 0:
            return {"n": 0}
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        return {
            "n": int(v.size),
            "median": float(med),
            "q1": float(q1),
            "q3": float(q3),
            "iqr": float(q3 - q1),
            "mean": float(v.mean()),
            "min": float(v.min()),
            "max": float(v.max()),
        }


def _run_cell_task(args):
    cfg_dict, seed, keep = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    try:
        return run_experiment(cfg, seed, keep_trajectories=keep)
    except Exception as exc:  # cell failures are recorded, the sweep continues
        return RunSummary(
            config_hash=cfg.config_hash(),
            seed=seed,
            mode=cfg.mode,
            vpt=float("nan"),
            vpt_censored=False,
            overlap_fraction=float("nan"),
            wall_clock=0.0,
            rmse=[],
            return_map_pred=[],
            return_map_truth=[],
            params=_summary_params(cfg),
            error=f"{type(exc).__name__}: {exc}",
        )


def run_sweep(
    base: ExperimentConfig,
    axes: dict,
    seeds: list[int],
    workers: int = 1,
    keep_trajectories: bool = False,
    progress=None,
) -> list[SweepCell]:
    """Cartesian sweep over {dotted.path: [values]} axes, one run per
    (cell, seed).  Failures are recorded per run and do not stop the sweep."""
    names = list(axes)
    cells: list[SweepCell] = []
    for combo in product(*(axes[n] for n in names)):
        cfg = base
        overrides = {}
        for name, value in zip(names, combo):
            if isinstance(value, list):
                value = tuple(value)
            cfg = cfg.with_field(name, value)
            overrides[name] = value
        cells.append(SweepCell(config=cfg, overrides=overrides, summaries=[]))

    tasks = [
        (ci, seed, (cell.config.to_dict(), seed, keep_trajectories))
        for ci, cell in enumerate(cells)
        for seed in seeds
    ]
    done = 0
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (ci, seed, _), summary in zip(
                tasks, pool.map(_run_cell_task, [t[2] for t in tasks])
            ):
                cells[ci].summaries.append(summary)
                done += 1
                if progress:
                    progress(done, len(tasks), summary)
    else:
        for ci, seed, task in tasks:
            summary = _run_cell_task(task)
            cells[ci].summaries.append(summary)
            done += 1
            if progress:
                progress(done, len(tasks), summary)
    return cells


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

_CSV_FIELDS = [
    "config_hash",
    "seed",
    "mode",
    "system",
    "preset",
    "n_qubits",
    "n_layers",
    "feature_map",
    "max_order",
    "alpha",
    "beta",
    "shots",
    "coherent_sigma",
    "train_steps",
    "prune_steps",
    "test_steps",
    "vpt",
    "censored",
    "overlap_fraction",
    "wall_clock",
    "error",
]


def emit_report(
    summaries: list[RunSummary],
    out_dir,
    formats: tuple[str, ...] = ("csv", "json"),
    trajectories: bool = False,
) -> list[Path]:
    """Write runs.csv (one row per run) and/or runs.json (full summaries);
    optionally one trajectory CSV per run with truth and forecast columns."""
    if not summaries:
        raise ConfigError("nothing to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out_dir / "runs.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
            writer.writeheader()
            for s in summaries:
                row = {
                    "config_hash": s.config_hash,
                    "seed": s.seed,
                    "mode": s.mode,
                    "vpt": s.vpt,
                    "censored": s.vpt_censored,
                    "overlap_fraction": s.overlap_fraction,
                    "wall_clock": f"{s.wall_clock:.3f}",
                    "error": s.error or "",
                }
                row.update({k: s.params.get(k, "") for k in _CSV_FIELDS if k in s.params})
                writer.writerow(row)
        written.append(path)
    if "json" in formats:
        path = out_dir / "runs.json"
        with open(path, "w") as fh:
            json.dump([s.to_dict() for s in summaries], fh)
        written.append(path)
    if trajectories:
        for s in summaries:
            if s.prediction is None:
                continue
            path = out_dir / f"trajectory_{s.config_hash}_{s.seed}.csv"
            n = s.prediction.shape[0]
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                d = s.prediction.shape[1]
                writer.writerow(
                    ["t"]
                    + [f"truth_{i}" for i in range(d)]
                    + [f"pred_{i}" for i in range(d)]
                )
                for k in range(n):
                    writer.writerow(
                        [f"{k * s.dt:.10g}", *s.truth[k], *s.prediction[k]]
                    )
            written.append(path)
    return written


def load_summaries(path) -> list[RunSummary]:
    """Re-read a runs.json report into RunSummary records."""
    with open(path) as fh:
        records = json.load(fh)
    out = []
    for d in records:
        out.append(
            RunSummary(
                config_hash=d["config_hash"],
                seed=d["seed"],
                mode=d["mode"],
                vpt=d["vpt"],
                vpt_censored=d["censored"],
                overlap_fraction=d["overlap_fraction"],
                overlap_report=d.get("overlap_report", {}),
                wall_clock=d["wall_clock"],
                rmse=d.get("rmse", []),
                return_map_pred=d.get("return_map_pred", []),
                return_map_truth=d.get("return_map_truth", []),
                params=d.get("params", {}),
                error=d.get("error"),
                dt=d.get("dt", 0.0),
                truth=np.asarray(d["truth"]) if "truth" in d else None,
                prediction=np.asarray(d["prediction"]) if "prediction" in d else None,
            )
        )
    return out
