"""Experiment drivers: phantom/projection generation and the three studies.

Every driver works out of one output directory (which must already exist)
and is deterministic: rerunning a command with the same configuration
produces bit-identical files.  Volumes and projections are cached as files;
drivers that need them generate missing files first and then always read
the data back from disk, so results do not depend on whether the cache was
warm.

Study 1 trains the dense bilinear model and the volume PCA model on the
full data and reports weights, explained-variance curves and eigenimages.
Study 2 removes one phase and every ``holdout_stride``-th angle, re-trains,
estimates the held-out projections and reports gray-value errors against
the dense-model floor.  Study 3 drives the volume model from the estimated
respiratory weights through a regression map and reports voxel-value errors
of the rebuilt volumes against a nearest-phase baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .bilinear import (
    angle_model,
    solve_respiratory,
    synthesize,
    train_bilinear,
)
from .bspline import eval_spline
from .config import ExperimentConfig
from .errors import InputError
from .phantom import generate, phase_label
from .projector import ProjectionImage, Volume, project
from .regression import fit_regression, predict
from .ssm import explained_variance, reconstruct, train_ssm
from .tensor3 import Tensor3, mode_svd


@dataclass(frozen=True)
class ErrorReport:
    """Per-cell error rows plus aggregate figures for one study."""

    rows: list
    summary: dict


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    if not out.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {out}")
    return out


def volume_path(out: Path, j: int) -> Path:
    return out / f"phantom_phase{j:02d}.mvol"


def stack_path(out: Path, j: int) -> Path:
    return out / f"projections_phase{j:02d}.mprj"


def run_phantom(cfg: ExperimentConfig) -> dict:
    """Write one volume file per phase plus a manifest."""
    out = _out_dir(cfg)
    spec = cfg.phantom_spec()
    paths = []
    for j, t in enumerate(spec.phases):
        vol = generate(spec, t)
        path = volume_path(out, j)
        io.write_volume(path, vol)
        paths.append(path)
    manifest = [f"seed {cfg.seed}", f"grid {cfg.grid_n} {cfg.voxel_mm}"]
    for j, t in enumerate(spec.phases):
        manifest.append(f"phase {j} {t!r} {phase_label(t)} {volume_path(out, j).name}")
    (out / "phantom_manifest.txt").write_text("\n".join(manifest) + "\n")
    return {"volumes": paths, "manifest": out / "phantom_manifest.txt"}


def run_project(cfg: ExperimentConfig) -> dict:
    """Forward-project existing volume files at every trajectory angle."""
    out = _out_dir(cfg)
    spec = cfg.phantom_spec()
    missing = [volume_path(out, j) for j in range(cfg.num_phases)
               if not volume_path(out, j).exists()]
    if missing:
        raise FileNotFoundError(f"volume files missing, run the phantom step first: {missing[0]}")
    geometry = cfg.geometry()
    angles = cfg.angles()
    paths = []
    for j in range(cfg.num_phases):
        vol = io.read_volume(volume_path(out, j))
        images = [project(vol, a, geometry) for a in angles]
        path = stack_path(out, j)
        io.write_projection_stack(path, angles, images)
        paths.append(path)
    manifest = [
        "angles_rad " + " ".join(repr(a) for a in angles),
        f"detector {geometry.nu} {geometry.nv} {geometry.su!r} {geometry.sv!r}",
        f"phases {cfg.num_phases}",
        f"seed {cfg.seed}",
    ]
    (out / "trajectory.txt").write_text("\n".join(manifest) + "\n")
    return {"stacks": paths, "manifest": out / "trajectory.txt"}


def _ensure_inputs(cfg: ExperimentConfig):
    """Load cached volumes/projections, generating files where missing."""
    out = _out_dir(cfg)
    if any(not volume_path(out, j).exists() for j in range(cfg.num_phases)):
        run_phantom(cfg)
    if any(not stack_path(out, j).exists() for j in range(cfg.num_phases)):
        run_project(cfg)
    volumes = [io.read_volume(volume_path(out, j)) for j in range(cfg.num_phases)]
    stacks = []
    angles_ref = None
    for j in range(cfg.num_phases):
        angles, images = io.read_projection_stack(stack_path(out, j))
        if angles_ref is None:
            angles_ref = angles
        elif not np.array_equal(angles, angles_ref):
            raise InputError(f"projection stacks disagree on angles in {out}")
        stacks.append(images)
    stacks = np.stack(stacks)  # (F, G, nv, nu)
    if stacks.shape[1] != cfg.num_angles:
        raise InputError(
            f"cached projections have {stacks.shape[1]} angles, config wants {cfg.num_angles}"
        )
    return out, volumes, tuple(float(a) for a in angles_ref), stacks


def _tensor_from_stacks(stacks: np.ndarray) -> Tensor3:
    n_phase, n_angle = stacks.shape[:2]
    flat = stacks.reshape(n_phase, n_angle, -1)
    return Tensor3(np.transpose(flat, (2, 0, 1)))


def _image(cfg: ExperimentConfig, pixels: np.ndarray) -> ProjectionImage:
    geom = cfg.geometry()
    return ProjectionImage(pixels, (geom.su, geom.sv))


def run_experiment1(cfg: ExperimentConfig) -> dict:
    """Dense model study: weights, variance curves, eigenimages, model file."""
    out, volumes, angles, stacks = _ensure_inputs(cfg)
    exp_dir = out / "exp1"
    exp_dir.mkdir(exist_ok=True)
    spec = cfg.phantom_spec()
    labels = [phase_label(t) for t in spec.phases]

    # Volume PCA side.
    ssm = train_ssm(volumes, cfg.num_phases - 1)
    ev_linear = explained_variance(ssm)
    io.write_csv(
        exp_dir / "ssm_weights.csv",
        ["phase", "label"] + [f"w{k + 1}" for k in range(ssm.n_modes)],
        [[j, labels[j]] + list(ssm.training_weights[j]) for j in range(cfg.num_phases)],
    )
    io.write_csv(
        exp_dir / "variance_linear.csv",
        ["mode", "cumulative_ratio"],
        [[k + 1, ev_linear[k]] for k in range(ev_linear.size)],
    )

    # Bilinear side.
    tensor = _tensor_from_stacks(stacks)
    model = train_bilinear(tensor, cfg.rank_f, cfg.rank_g, angles, spec.phases, cfg.geometry())
    resp_sv = mode_svd(tensor, 1).s
    ev_bilinear = np.cumsum(resp_sv**2) / np.sum(resp_sv**2)
    io.write_csv(
        exp_dir / "variance_bilinear.csv",
        ["mode", "cumulative_ratio"],
        [[k + 1, ev_bilinear[k]] for k in range(ev_bilinear.size)],
    )
    io.write_csv(
        exp_dir / "weights_A.csv",
        ["phase", "label"] + [f"a{k + 1}" for k in range(cfg.rank_f)],
        [[j, labels[j]] + list(model.resp_weights[j]) for j in range(cfg.num_phases)],
    )
    io.write_csv(
        exp_dir / "weights_B.csv",
        ["angle_deg"] + [f"b{k + 1}" for k in range(cfg.rank_g)],
        [[math.degrees(angles[i])] + list(model.rot_weights[i]) for i in range(cfg.num_angles)],
    )

    geom = cfg.geometry()
    for k in range(min(4, cfg.rank_f)):
        io.write_pgm(
            exp_dir / f"eigenimage_resp_{k}.pgm",
            model.core.data[:, k, 0].reshape(geom.nv, geom.nu),
        )
    for k in range(min(4, cfg.rank_g)):
        io.write_pgm(
            exp_dir / f"eigenimage_rot_{k}.pgm",
            model.core.data[:, 0, k].reshape(geom.nv, geom.nu),
        )
    io.write_model(exp_dir / "dense_model.blm", model)

    return {
        "dir": exp_dir,
        "model": model,
        "ssm": ssm,
        "variance_linear": ev_linear,
        "variance_bilinear": ev_bilinear,
    }


def _loo_bilinear(cfg, tensor_data, angles, phases, geometry, held_phase):
    keep_ph = [k for k in range(len(phases)) if k != held_phase]
    keep_ang = cfg.retained_angle_indices
    sub = Tensor3(tensor_data[:, keep_ph][:, :, keep_ang])
    model = train_bilinear(
        sub,
        cfg.rank_f,
        cfg.rank_g,
        [angles[i] for i in keep_ang],
        [phases[k] for k in keep_ph],
        geometry,
    )
    return model, keep_ph


def _estimate_cell(model, pixels, angle):
    """Respiratory weights and rebuilt image for one held-out projection."""
    matrix = angle_model(model, angle)
    weights = solve_respiratory(matrix, pixels.ravel())
    rebuilt = synthesize(model, weights, eval_spline(model.rot_spline, angle))
    return weights, rebuilt


def run_experiment2(cfg: ExperimentConfig) -> dict:
    """Leave-one-phase-out, every ``holdout_stride``-th angle out gray study."""
    out, volumes, angles, stacks = _ensure_inputs(cfg)
    exp_dir = out / "exp2"
    exp_dir.mkdir(exist_ok=True)
    diff_dir = exp_dir / "diff"
    diff_dir.mkdir(exist_ok=True)
    spec = cfg.phantom_spec()
    labels = [phase_label(t) for t in spec.phases]
    geometry = cfg.geometry()
    tensor = _tensor_from_stacks(stacks)
    dense = train_bilinear(tensor, cfg.rank_f, cfg.rank_g, angles, spec.phases, geometry)
    test_idx = cfg.test_angle_indices

    rows = []
    for j in cfg.holdout_phases:
        model, _ = _loo_bilinear(cfg, tensor.data, angles, spec.phases, geometry, j)
        for i in test_idx:
            truth = stacks[j, i]
            _, rebuilt = _estimate_cell(model, truth, angles[i])
            diff = rebuilt.data - truth
            mean_abs = float(np.mean(np.abs(diff)))
            std_abs = float(np.std(np.abs(diff)))
            ref_mean = float(np.mean(truth))
            dense_img = synthesize(dense, dense.resp_weights[j], dense.rot_weights[i])
            dense_abs = float(np.mean(np.abs(dense_img.data - truth)))
            rows.append({
                "phase": j,
                "label": labels[j],
                "angle_deg": math.degrees(angles[i]),
                "mean_abs_err": mean_abs,
                "std_abs_err": std_abs,
                "ref_mean": ref_mean,
                "err_pct": 100.0 * mean_abs / ref_mean,
                "dense_mean_abs_err": dense_abs,
                "dense_err_pct": 100.0 * dense_abs / ref_mean,
            })
            amp = float(np.max(np.abs(diff))) or 1.0
            io.write_pgm(
                diff_dir / f"diff_phase{j:02d}_angle{round(math.degrees(angles[i])):03d}.pgm",
                diff,
                window=(-amp, amp),
            )

    header = ["phase", "label", "angle_deg", "mean_abs_err", "std_abs_err",
              "ref_mean", "err_pct", "dense_mean_abs_err", "dense_err_pct"]
    io.write_csv(exp_dir / "gray_error.csv", header, [[r[h] for h in header] for r in rows])

    by_angle = []
    for i in test_idx:
        deg = math.degrees(angles[i])
        cell = [r for r in rows if r["angle_deg"] == deg]
        pcts = np.array([r["err_pct"] for r in cell])
        by_angle.append([deg, float(pcts.mean()), float(pcts.std())])
    io.write_csv(
        exp_dir / "gray_error_by_angle.csv",
        ["angle_deg", "mean_pct", "std_pct"],
        by_angle,
    )

    mean_abs = float(np.mean([r["mean_abs_err"] for r in rows]))
    ref_mean = float(np.mean([r["ref_mean"] for r in rows]))
    dense_abs = float(np.mean([r["dense_mean_abs_err"] for r in rows]))
    summary = {
        "mean_abs_err": mean_abs,
        "ref_mean": ref_mean,
        "err_pct": 100.0 * mean_abs / ref_mean,
        "dense_mean_abs_err": dense_abs,
        "dense_err_pct": 100.0 * dense_abs / ref_mean,
        "loo_over_dense": mean_abs / dense_abs if dense_abs > 0 else math.inf,
    }
    io.write_csv(
        exp_dir / "summary.csv",
        sorted(summary),
        [[summary[k] for k in sorted(summary)]],
    )
    return {"dir": exp_dir, "report": ErrorReport(rows=rows, summary=summary)}


def run_experiment3(cfg: ExperimentConfig) -> dict:
    """Volume estimation study driven by the estimated respiratory weights."""
    out, volumes, angles, stacks = _ensure_inputs(cfg)
    exp_dir = out / "exp3"
    exp_dir.mkdir(exist_ok=True)
    spec = cfg.phantom_spec()
    labels = [phase_label(t) for t in spec.phases]
    geometry = cfg.geometry()
    tensor = _tensor_from_stacks(stacks)
    test_idx = cfg.test_angle_indices
    phases = spec.phases

    rows = []
    by_phase = []
    for j in cfg.holdout_phases:
        model, keep_ph = _loo_bilinear(cfg, tensor.data, angles, phases, geometry, j)
        ssm = train_ssm([volumes[k] for k in keep_ph], cfg.modes_e)
        mapping = fit_regression(model.resp_weights, ssm.training_weights, cfg.ridge)

        distances = [
            min(abs(phases[k] - phases[j]), 1.0 - abs(phases[k] - phases[j]))
            for k in keep_ph
        ]
        nearest = keep_ph[int(np.argmin(distances))]
        baseline = float(np.mean(np.abs(volumes[nearest].data - volumes[j].data)))

        phase_errs = []
        first_estimate = None
        for i in test_idx:
            weights, _ = _estimate_cell(model, stacks[j, i], angles[i])
            volume_weights = predict(mapping, weights)
            estimate = reconstruct(ssm, volume_weights)
            if first_estimate is None:
                first_estimate = estimate
            diff = estimate.data - volumes[j].data
            mean_abs = float(np.mean(np.abs(diff)))
            std_abs = float(np.std(np.abs(diff)))
            phase_errs.append(mean_abs)
            rows.append({
                "phase": j,
                "label": labels[j],
                "angle_deg": math.degrees(angles[i]),
                "mean_abs_hu": mean_abs,
                "std_abs_hu": std_abs,
            })

        phase_errs = np.array(phase_errs)
        by_phase.append({
            "phase": j,
            "label": labels[j],
            "mean_abs_hu": float(phase_errs.mean()),
            "std_across_angles": float(phase_errs.std()),
            "baseline_mean_abs_hu": baseline,
            "beats_baseline": int(phase_errs.mean() < baseline),
        })
        io.write_volume(exp_dir / f"est_volume_phase{j:02d}.mvol", first_estimate)
        mid = first_estimate.dims[1] // 2
        io.write_pgm(
            exp_dir / f"overlay_phase{j:02d}.pgm",
            (first_estimate.data[:, mid, :] - volumes[j].data[:, mid, :]).T,
        )
        io.write_model(exp_dir / f"model_phase{j:02d}.blm", model, ssm, mapping)

    header = ["phase", "label", "angle_deg", "mean_abs_hu", "std_abs_hu"]
    io.write_csv(exp_dir / "hu_error.csv", header, [[r[h] for h in header] for r in rows])
    pheader = ["phase", "label", "mean_abs_hu", "std_across_angles",
               "baseline_mean_abs_hu", "beats_baseline"]
    io.write_csv(
        exp_dir / "hu_error_by_phase.csv", pheader,
        [[r[h] for h in pheader] for r in by_phase],
    )
    summary = {
        "phases_beating_baseline": sum(r["beats_baseline"] for r in by_phase),
        "phases_total": len(by_phase),
        "max_std_over_mean": max(
            (r["std_across_angles"] / r["mean_abs_hu"]) for r in by_phase
        ),
        "mean_abs_hu": float(np.mean([r["mean_abs_hu"] for r in rows])),
    }
    io.write_csv(
        exp_dir / "summary.csv",
        sorted(summary),
        [[summary[k] for k in sorted(summary)]],
    )
    return {"dir": exp_dir, "report": ErrorReport(rows=rows, summary=summary), "by_phase": by_phase}
