//! Refinement, inf-sup, Poincaré and equivalence studies.
//!
//! Every report carries the hash of the configuration that produced it. Wall
//! times are recorded only on request, so reports are otherwise bit-identical
//! between runs.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_mass, assemble_system, interpolate, prolongate, relative_difference, solve_problem, FeSpace,
    Norms, ProblemSpec, WeightKind,
};
use crate::io::{fmt_f64, Table};
use crate::mesh::{build_rect_mesh, BoundaryTag, Mesh};
use crate::quadrature::{edge_rule, gauss_jacobi_unit, EDGE_POINTS};
use crate::reduction::{
    algebraic_dtn_on, cosine_mode, solve_reduced, spectral_dtn, BoundaryGrid, DtnOperator, Reduced1dProblem,
};
use crate::sparse::{lu_factor, smallest_generalized_eigenvalue, smallest_infsup, smallest_infsup_factored, CsrMatrix};
use crate::C64;

/// Verdict thresholds for refinement studies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Largest accepted d_{ℓ+1}/d_ℓ for a converging study.
    pub max_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { max_ratio: 0.7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub spec: ProblemSpec,
    pub nx: usize,
    pub ny: usize,
    pub degree: usize,
    /// Number of meshes: the base mesh and levels − 1 refinements.
    pub levels: usize,
    pub infsup: bool,
    pub thresholds: Thresholds,
    pub timing: bool,
}

impl StudyConfig {
    /// Base mesh 8×4, P2, five levels.
    pub fn new(spec: ProblemSpec) -> StudyConfig {
        StudyConfig {
            spec,
            nx: 8,
            ny: 4,
            degree: 2,
            levels: 5,
            infsup: false,
            thresholds: Thresholds::default(),
            timing: false,
        }
    }

    pub fn with_infsup(mut self, on: bool) -> Self {
        self.infsup = on;
        self
    }

    /// First 16 hex digits of the SHA-256 of the JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn meshes(&self) -> Result<Vec<Mesh>> {
        let mut m = build_rect_mesh(self.nx, self.ny)?;
        let mut out = Vec::with_capacity(self.levels);
        for l in 0..self.levels {
            if l > 0 {
                m = m.refined();
            }
            out.push(m.clone());
        }
        Ok(out)
    }

    fn validate(&self, min_levels: usize) -> Result<()> {
        self.spec.validate()?;
        if self.levels < min_levels {
            return Err(Error::invalid(format!("a study needs at least {min_levels} levels")));
        }
        if self.degree != 1 && self.degree != 2 {
            return Err(Error::invalid("degree must be 1 or 2"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub config_hash: String,
    pub level: usize,
    pub h: f64,
    pub ndof: usize,
    pub l2: Option<f64>,
    pub valpha: Option<f64>,
    /// ‖u_ℓ − P u_{ℓ−1}‖ / ‖u_ℓ‖ in L², from level 1 on.
    pub d: Option<f64>,
    pub beta: Option<f64>,
    pub infsup_iterations: Option<usize>,
    /// Failure of this level, if any.
    pub error: Option<String>,
    pub wall_time: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converging,
    NonConverging,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub study: String,
    pub config_hash: String,
    pub config: StudyConfig,
    pub records: Vec<LevelRecord>,
    pub verdict: Verdict,
}

impl RefinementReport {
    pub fn d_values(&self) -> Vec<Option<f64>> {
        self.records.iter().skip(1).map(|r| r.d).collect()
    }

    pub fn betas(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.beta).collect()
    }

    pub fn table(&self) -> Table {
        let mut header = vec![
            "config_hash",
            "level",
            "h",
            "ndof",
            "l2",
            "valpha",
            "d",
            "beta",
            "iterations",
            "status",
        ];
        if self.config.timing {
            header.push("wall_time");
        }
        let mut t = Table::new(&header);
        let opt = |v: Option<f64>| v.map_or(String::new(), fmt_f64);
        for r in &self.records {
            let mut row = vec![
                r.config_hash.clone(),
                r.level.to_string(),
                fmt_f64(r.h),
                r.ndof.to_string(),
                opt(r.l2),
                opt(r.valpha),
                opt(r.d),
                opt(r.beta),
                r.infsup_iterations.map_or(String::new(), |i| i.to_string()),
                r.error.clone().unwrap_or_else(|| "ok".into()),
            ];
            if self.config.timing {
                row.push(opt(r.wall_time));
            }
            t.push(row);
        }
        t
    }
}

/// Converging when every d_ℓ exists and d_{ℓ+1} ≤ max_ratio · d_ℓ.
pub fn verdict(d: &[Option<f64>], thresholds: &Thresholds) -> Verdict {
    let Some(vals) = d.iter().copied().collect::<Option<Vec<f64>>>() else {
        return Verdict::NonConverging;
    };
    let ok = !vals.is_empty()
        && vals.iter().all(|v| v.is_finite())
        && vals
            .windows(2)
            .all(|w| w[1] < w[0] && w[1] <= thresholds.max_ratio * w[0]);
    if ok {
        Verdict::Converging
    } else {
        Verdict::NonConverging
    }
}

pub fn refinement_study(cfg: &StudyConfig) -> Result<RefinementReport> {
    cfg.validate(2)?;
    let hash = cfg.hash();
    let mut records = Vec::with_capacity(cfg.levels);
    let mut prev: Option<(Arc<FeSpace>, Vec<C64>)> = None;
    for mesh in cfg.meshes()? {
        let start = Instant::now();
        let space = Arc::new(FeSpace::new(&mesh, cfg.degree)?);
        let sys = assemble_system(&space, &cfg.spec)?;
        let mut rec = LevelRecord {
            config_hash: hash.clone(),
            level: mesh.level,
            h: mesh.max_edge_length(),
            ndof: space.ndof(),
            l2: None,
            valpha: None,
            d: None,
            beta: None,
            infsup_iterations: None,
            error: None,
            wall_time: None,
        };
        let outcome = lu_factor(&sys.system).and_then(|lu| {
            let u = lu.solve(&sys.rhs);
            if let Some(dof) = u.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::NonFinite { dof });
            }
            let beta = if cfg.infsup {
                Some(smallest_infsup_factored(&lu, &sys.gram)?)
            } else {
                None
            };
            Ok((u, beta))
        });
        match outcome {
            Ok((u, beta)) => {
                let norms = Norms::compute(&sys, &u);
                rec.l2 = Some(norms.l2);
                rec.valpha = Some(norms.valpha);
                if let Some((pspace, pu)) = &prev {
                    let p = prolongate(pspace, &space, pu)?;
                    rec.d = Some(relative_difference(&sys.mass, &p, &u));
                }
                if let Some((b, it)) = beta {
                    rec.beta = Some(b);
                    rec.infsup_iterations = Some(it);
                }
                prev = Some((space, u));
            }
            Err(e) if e.is_numerical() => {
                if cfg.infsup && matches!(e, Error::NumericallySingular { .. }) {
                    rec.beta = Some(0.0);
                }
                rec.error = Some(e.to_string());
                prev = None;
            }
            Err(e) => return Err(e),
        }
        if cfg.timing {
            rec.wall_time = Some(start.elapsed().as_secs_f64());
        }
        records.push(rec);
    }
    let d: Vec<Option<f64>> = records.iter().skip(1).map(|r| r.d).collect();
    Ok(RefinementReport {
        study: "refinement".into(),
        config_hash: hash,
        verdict: verdict(&d, &cfg.thresholds),
        config: cfg.clone(),
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfsupRow {
    pub config_hash: String,
    pub level: usize,
    pub h: f64,
    pub ndof: usize,
    pub beta: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfsupReport {
    pub study: String,
    pub config_hash: String,
    pub config: StudyConfig,
    pub rows: Vec<InfsupRow>,
}

impl InfsupReport {
    pub fn betas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.beta).collect()
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.betas().windows(2).all(|w| w[1] < w[0])
    }

    /// β_first / β_last.
    pub fn decay_factor(&self) -> f64 {
        let b = self.betas();
        b[0] / b[b.len() - 1]
    }

    /// |β_L − β_{L−1}| / β_{L−1}.
    pub fn last_change(&self) -> f64 {
        let b = self.betas();
        let n = b.len();
        (b[n - 1] - b[n - 2]).abs() / b[n - 2]
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["config_hash", "level", "h", "ndof", "beta", "iterations"]);
        for r in &self.rows {
            t.push(vec![
                r.config_hash.clone(),
                r.level.to_string(),
                fmt_f64(r.h),
                r.ndof.to_string(),
                fmt_f64(r.beta),
                r.iterations.to_string(),
            ]);
        }
        t
    }
}

pub fn infsup_study(cfg: &StudyConfig) -> Result<InfsupReport> {
    cfg.validate(2)?;
    let hash = cfg.hash();
    let mut rows = Vec::new();
    for mesh in cfg.meshes()? {
        let space = FeSpace::new(&mesh, cfg.degree)?;
        let sys = assemble_system(&space, &cfg.spec)?;
        let (beta, iterations) = smallest_infsup(&sys.system, &sys.gram)?;
        rows.push(InfsupRow {
            config_hash: hash.clone(),
            level: mesh.level,
            h: mesh.max_edge_length(),
            ndof: space.ndof(),
            beta,
            iterations,
        });
    }
    Ok(InfsupReport {
        study: "infsup".into(),
        config_hash: hash,
        config: cfg.clone(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareRow {
    pub level: usize,
    pub cells: usize,
    pub mu: f64,
    pub iterations: usize,
}

/// Weighted stiffness and mass of P1 on (0, 1) with `cells` cells and φ(1) = 0.
pub fn weighted_1d_system(alpha: f64, cells: usize) -> Result<(CsrMatrix, CsrMatrix)> {
    let h = 1.0 / cells as f64;
    let first = gauss_jacobi_unit(EDGE_POINTS, alpha, 0.0);
    let plain = edge_rule();
    let mut k = Vec::new();
    let mut m = Vec::new();
    for c in 0..cells {
        let a = c as f64 * h;
        // ∫ x^α dx over the cell; the first cell carries the weight in its rule
        let wint: f64 = if c == 0 {
            first.weights.iter().sum::<f64>() * h.powf(1.0 + alpha)
        } else {
            plain
                .nodes
                .iter()
                .zip(&plain.weights)
                .map(|(t, w)| w * h * (a + t * h).powf(alpha))
                .sum()
        };
        let kl = wint / (h * h);
        let local = [[kl, -kl], [-kl, kl]];
        let mass = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        for (p, i) in [c, c + 1].into_iter().enumerate() {
            for (q, j) in [c, c + 1].into_iter().enumerate() {
                if i < cells && j < cells {
                    k.push((i, j, C64::new(local[p][q], 0.0)));
                    m.push((i, j, C64::new(mass[p][q], 0.0)));
                }
            }
        }
    }
    Ok((
        CsrMatrix::from_triplets(cells, cells, &k)?,
        CsrMatrix::from_triplets(cells, cells, &m)?,
    ))
}

/// Smallest eigenvalue μ of the weighted 1D problem on 8·2^ℓ cells, ℓ < levels.
pub fn poincare_study(alpha: f64, levels: usize) -> Result<Vec<PoincareRow>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("alpha must lie in [0, 1]"));
    }
    if levels == 0 {
        return Err(Error::invalid("at least one level is needed"));
    }
    (0..levels)
        .map(|level| {
            let cells = 8usize << level;
            let (k, m) = weighted_1d_system(alpha, cells)?;
            let est = smallest_generalized_eigenvalue(&k, &m)?;
            Ok(PoincareRow {
                level,
                cells,
                mu: est.value,
                iterations: est.iterations,
            })
        })
        .collect()
}

pub fn poincare_table(rows: &[PoincareRow]) -> Table {
    let mut t = Table::new(&["level", "cells", "mu", "iterations"]);
    for r in rows {
        t.push(vec![
            r.level.to_string(),
            r.cells.to_string(),
            fmt_f64(r.mu),
            r.iterations.to_string(),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub weight: WeightKind,
    pub alpha: f64,
    pub grid_points: usize,
    /// max |φ_reduced − u|_Γ| / max |u|_Γ|
    pub max_rel_diff: f64,
}

fn max_rel(a: &[C64], b: &[C64]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / scale
    }
}

/// Monolithic trace against the Schur-reduced 1D solve.
pub fn equivalence_check(spec: &ProblemSpec, mesh: &Mesh, degree: usize) -> Result<EquivalenceReport> {
    let space = Arc::new(FeSpace::new(mesh, degree)?);
    let full = solve_problem(spec, space.clone())?;
    let prob = Reduced1dProblem::algebraic(spec, &space)?;
    let phi = solve_reduced(&prob)?;
    Ok(EquivalenceReport {
        weight: spec.weight,
        alpha: spec.alpha,
        grid_points: prob.grid.len(),
        max_rel_diff: max_rel(&phi, &prob.grid.restrict(&full.values)),
    })
}

/// Monolithic trace on Γ against the reduced solve with the spectral DtN.
pub fn spectral_equivalence_check(spec: &ProblemSpec, mesh: &Mesh, degree: usize, modes: usize) -> Result<f64> {
    let space = Arc::new(FeSpace::new(mesh, degree)?);
    let full = solve_problem(spec, space.clone())?;
    let grid = BoundaryGrid::full(&space)?;
    let prob = Reduced1dProblem::new(spec, &space, grid, &spectral_dtn(modes)?)?;
    let phi = solve_reduced(&prob)?;
    Ok(max_rel(&phi, &prob.grid.restrict(&full.values)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtnModeRow {
    pub level: usize,
    pub mode: usize,
    pub rayleigh: f64,
    pub exact: f64,
    pub rel_error: f64,
}

/// Rayleigh quotient φᴴDφ / φᴴM_Γφ of the algebraic DtN on Γ for the
/// interpolated cosine mode k, against the spectral eigenvalue d_k.
pub fn dtn_mode_study(nx: usize, ny: usize, degree: usize, levels: usize, mode: usize) -> Result<Vec<DtnModeRow>> {
    let DtnOperator::SpectralDiagonal { d, .. } = spectral_dtn(mode + 1)? else {
        unreachable!("spectral_dtn returns the diagonal form")
    };
    let exact = d[mode];
    let spec = ProblemSpec::new(0.0, 1, WeightKind::SignChanging)?;
    let mut mesh = build_rect_mesh(nx, ny)?;
    let mut rows = Vec::new();
    for level in 0..levels {
        if level > 0 {
            mesh = mesh.refined();
        }
        let space = FeSpace::new(&mesh, degree)?;
        let grid = BoundaryGrid::full(&space)?;
        let DtnOperator::AlgebraicDense { matrix, .. } = algebraic_dtn_on(&spec, &space, &grid)? else {
            unreachable!("algebraic_dtn_on returns the dense form")
        };
        let u = interpolate(|x, _| C64::new(cosine_mode(mode, x), 0.0), &space)?;
        let phi = DVector::from_vec(grid.restrict(&u));
        let num = (phi.adjoint() * &matrix * &phi)[(0, 0)].re;
        let mass = assemble_boundary_mass(&space, &[BoundaryTag::GammaMinus, BoundaryTag::GammaPlus]);
        let den = mass.form(&u, &u).re;
        let rayleigh = num / den;
        rows.push(DtnModeRow {
            level,
            mode,
            rayleigh,
            exact,
            rel_error: (rayleigh - exact).abs() / exact,
        });
    }
    Ok(rows)
}
