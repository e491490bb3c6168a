use std::path::Path;
use std::sync::Arc;

use gibc_fem::experiments::{infsup_study, poincare_study, poincare_table, refinement_study, StudyConfig};
use gibc_fem::fem::{solve_problem, FeSpace};
use gibc_fem::io::{write_atomic, VtkData};
use gibc_fem::mesh::{build_rect_mesh, BoundaryTag, Mesh};
use gibc_fem::reduction::{
    dtn_eigen_table, solve_reduced, spectral_dtn, trace_table, BoundaryGrid, Reduced1dProblem, DEFAULT_MODES,
};
use gibc_fem::singular::{
    dispersion_residual, n_max, solve_tanh_dispersion, weyl_boundary_energy, weyl_diagnostic, weyl_table,
    DispersionCase,
};
use gibc_fem::{Result, C64};
use serde_json::{json, Value};

use crate::config::{DtnKind, RunConfig};

/// Summary fields of a finished command, plus a numerical failure that did
/// not prevent the remaining artifacts from being written.
pub struct Finished {
    pub summary: Value,
    pub failure: Option<String>,
}

impl Finished {
    fn ok(summary: Value) -> Finished {
        Finished { summary, failure: None }
    }
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn base_mesh(cfg: &RunConfig) -> Result<Mesh> {
    Ok(build_rect_mesh(cfg.nx, cfg.ny)?.refined_times(cfg.refine))
}

fn study_config(cfg: &RunConfig) -> StudyConfig {
    StudyConfig {
        spec: cfg.spec,
        nx: cfg.nx,
        ny: cfg.ny,
        degree: cfg.degree,
        levels: cfg.levels,
        infsup: cfg.infsup,
        thresholds: cfg.thresholds,
        timing: cfg.timing,
    }
}

fn max_rel(a: &[C64], b: &[C64]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn mesh(cfg: &RunConfig) -> Result<Finished> {
    let mesh = base_mesh(cfg)?;
    VtkData::from_mesh(&mesh).write(&cfg.out.join("mesh.vtk"), "mesh")?;
    let count = |tag| mesh.boundary_edges.iter().filter(|e| e.tag == tag).count();
    Ok(Finished::ok(json!({
        "level": mesh.level,
        "h": mesh.max_edge_length(),
        "nodes": mesh.nodes.len(),
        "triangles": mesh.triangles.len(),
        "boundary_edges": {
            "gamma_minus": count(BoundaryTag::GammaMinus),
            "gamma_plus": count(BoundaryTag::GammaPlus),
            "gamma_0": count(BoundaryTag::Gamma0),
        },
        "files": ["mesh.vtk"],
    })))
}

pub fn solve(cfg: &RunConfig) -> Result<Finished> {
    let mesh = base_mesh(cfg)?;
    let space = Arc::new(FeSpace::new(&mesh, cfg.degree)?);
    let sol = solve_problem(&cfg.spec, space.clone())?;
    VtkData::from_solution(&space, &sol.values)?.write(&cfg.out.join("solution.vtk"), "solution")?;
    let norms = json!({
        "spec": cfg.spec,
        "degree": cfg.degree,
        "level": mesh.level,
        "h": mesh.max_edge_length(),
        "ndof": space.ndof(),
        "l2": sol.norms.l2,
        "h1": sol.norms.h1,
        "valpha": sol.norms.valpha,
    });
    write_json(&cfg.out.join("norms.json"), &norms)?;
    Ok(Finished::ok(
        json!({ "norms": norms, "files": ["solution.vtk", "norms.json"] }),
    ))
}

pub fn refine_study(cfg: &RunConfig) -> Result<Finished> {
    let study = study_config(cfg);
    let report = refinement_study(&study)?;
    report.table().write(&cfg.out.join("refinement.csv"))?;
    let report_json = serde_json::to_value(&report).expect("report serializes");
    write_json(&cfg.out.join("refinement.json"), &report_json)?;
    let mut files = vec!["refinement.csv".to_string(), "refinement.json".to_string()];
    if cfg.vtk {
        for mesh in study.meshes()? {
            let space = Arc::new(FeSpace::new(&mesh, cfg.degree)?);
            if let Ok(sol) = solve_problem(&cfg.spec, space.clone()) {
                let name = format!("solution_l{}.vtk", mesh.level);
                VtkData::from_solution(&space, &sol.values)?.write(&cfg.out.join(&name), "solution")?;
                files.push(name);
            }
        }
    }
    let failures: Vec<String> = report
        .records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("level {}: {e}", r.level)))
        .collect();
    Ok(Finished {
        summary: json!({
            "study": report.study,
            "config_hash": report.config_hash,
            "verdict": report.verdict,
            "d": report.d_values(),
            "beta": report.betas(),
            "files": files,
        }),
        failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

pub fn infsup(cfg: &RunConfig) -> Result<Finished> {
    let report = infsup_study(&study_config(cfg))?;
    report.table().write(&cfg.out.join("infsup.csv"))?;
    write_json(
        &cfg.out.join("infsup.json"),
        &serde_json::to_value(&report).expect("report serializes"),
    )?;
    Ok(Finished::ok(json!({
        "study": report.study,
        "config_hash": report.config_hash,
        "beta": report.betas(),
        "files": ["infsup.csv", "infsup.json"],
    })))
}

pub fn reduce(cfg: &RunConfig) -> Result<Finished> {
    let mesh = base_mesh(cfg)?;
    let space = Arc::new(FeSpace::new(&mesh, cfg.degree)?);
    let mut files = vec!["trace.csv".to_string()];
    let (problem, modes) = match cfg.dtn {
        DtnKind::Algebraic => (Reduced1dProblem::algebraic(&cfg.spec, &space)?, None),
        DtnKind::Spectral => {
            // fewer modes than grid points leave the reduced matrix singular where the weight vanishes
            let grid = BoundaryGrid::full(&space)?;
            let modes = cfg.modes.unwrap_or(DEFAULT_MODES.max(grid.len()));
            let dtn = spectral_dtn(modes)?;
            dtn_eigen_table(&dtn)?.write(&cfg.out.join("dtn_modes.csv"))?;
            files.push("dtn_modes.csv".into());
            (Reduced1dProblem::new(&cfg.spec, &space, grid, &dtn)?, Some(modes))
        }
    };
    let phi = solve_reduced(&problem)?;
    trace_table(&problem.grid.x, &phi).write(&cfg.out.join("trace.csv"))?;
    let full = solve_problem(&cfg.spec, space.clone())?;
    let diff = max_rel(&phi, &problem.grid.restrict(&full.values));
    if cfg.vtk {
        let u = problem.extend(&phi);
        VtkData::from_solution(&space, &u)?.write(&cfg.out.join("reduced_solution.vtk"), "reduced solution")?;
        files.push("reduced_solution.vtk".into());
    }
    Ok(Finished::ok(json!({
        "dtn": match cfg.dtn { DtnKind::Algebraic => "algebraic", DtnKind::Spectral => "spectral" },
        "modes": modes,
        "grid_points": problem.grid.len(),
        "max_rel_diff_to_monolithic": diff,
        "files": files,
    })))
}

pub fn singular(_cfg: &RunConfig) -> Result<Finished> {
    let tau = solve_tanh_dispersion();
    let tanh_residual = (tau * std::f64::consts::PI).tanh() - tau;
    let gp = dispersion_residual(C64::new(0.0, tau), DispersionCase::GammaPlusCase);
    let sc = dispersion_residual(C64::new(0.0, 1.0), DispersionCase::SignChangingCase);
    println!("tau = {tau:.17e}");
    println!("tanh(tau pi) - tau = {tanh_residual:.3e}");
    println!("gamma-plus residual at i tau = {:.3e}", gp.norm());
    println!("sign-changing residual at i = {:.3e}", sc.norm());
    Ok(Finished::ok(json!({
        "tau": tau,
        "tanh_residual": tanh_residual,
        "gamma_plus_residual": gp.norm(),
        "sign_changing_residual": sc.norm(),
    })))
}

pub fn weyl(cfg: &RunConfig) -> Result<Finished> {
    let study = study_config(cfg);
    let meshes = study.meshes()?;
    let finest = meshes.last().expect("at least one level");
    let ns = match &cfg.weyl_n {
        Some(n) => n.clone(),
        None => (1..=n_max(finest.max_edge_length()).max(1)).collect(),
    };
    let rows = weyl_diagnostic(&meshes, cfg.degree, &ns)?;
    weyl_table(&rows).write(&cfg.out.join("weyl.csv"))?;
    let tau = solve_tanh_dispersion();
    let energies = ns
        .iter()
        .map(|&n| {
            let e = weyl_boundary_energy(n, tau)?;
            Ok(json!({ "n": n, "closed_form": e.closed_form, "quadrature": e.quadrature, "lower_bound": e.lower_bound }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(Finished::ok(json!({
        "tau": tau,
        "n": ns,
        "n_max": n_max(finest.max_edge_length()),
        "boundary_energy": energies,
        "files": ["weyl.csv"],
    })))
}

pub fn poincare(cfg: &RunConfig) -> Result<Finished> {
    let rows = poincare_study(cfg.spec.alpha, cfg.levels)?;
    poincare_table(&rows).write(&cfg.out.join("poincare.csv"))?;
    Ok(Finished::ok(json!({
        "alpha": cfg.spec.alpha,
        "mu": rows.iter().map(|r| r.mu).collect::<Vec<f64>>(),
        "cells": rows.iter().map(|r| r.cells).collect::<Vec<usize>>(),
        "files": ["poincare.csv"],
    })))
}
