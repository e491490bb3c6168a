//! Strongly oscillating singularities at the origin for α = 1.
//!
//! Separation of variables near O gives modes r^λ φ(θ). With θ measured from
//! Γ+, the Γ+ problem has profile cos(λ(θ−π)) and exponents solving
//! sin(λπ) = λ cos(λπ); the purely imaginary root λ = iτ satisfies
//! tanh(τπ) = τ. The sign-changing problem has profile cos(λθ) − λ sin(λθ)
//! and exponents solving (1+λ²) sin(λπ) = 0.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_system, interpolate, FeSpace, ProblemSpec, WeightKind};
use crate::io::{fmt_f64, Table};
use crate::mesh::Mesh;
use crate::quadrature::adaptive_integrate;
use crate::sparse::lu_factor;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DispersionCase {
    GammaPlusCase,
    SignChangingCase,
}

fn tanh_gap(t: f64) -> f64 {
    (t * PI).tanh() - t
}

/// The positive root of tanh(τπ) = τ.
pub fn solve_tanh_dispersion() -> f64 {
    // f > 0 at 1/2, f < 0 at 1
    let (mut lo, mut hi) = (0.5, 1.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if tanh_gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..8 {
        let sech2 = 1.0 / (t * PI).cosh().powi(2);
        let step = tanh_gap(t) / (PI * sech2 - 1.0);
        let next = t - step;
        if !(lo..=hi).contains(&next) || step == 0.0 {
            break;
        }
        t = next;
    }
    t
}

pub fn dispersion_residual(lambda: C64, case: DispersionCase) -> C64 {
    let z = lambda * PI;
    match case {
        DispersionCase::GammaPlusCase => z.sin() - lambda * z.cos(),
        DispersionCase::SignChangingCase => (lambda * lambda + 1.0) * z.sin(),
    }
}

/// cos(λ(θ−π)).
pub fn gamma_plus_profile(lambda: C64, theta: f64) -> C64 {
    (lambda * (theta - PI)).cos()
}

/// cos(λθ) − λ sin(λθ).
pub fn sign_changing_profile(lambda: C64, theta: f64) -> C64 {
    (lambda * theta).cos() - lambda * (lambda * theta).sin()
}

/// s_n = r^{iτ+1/n} cosh(τ(θ−π)), with s_n(O) = 0.
pub fn eval_weyl(n: u32, tau: f64, x: f64, y: f64) -> Result<C64> {
    const SLACK: f64 = 1e-12;
    if n == 0 {
        return Err(Error::invalid("Weyl index must be positive"));
    }
    if !(x.is_finite() && y.is_finite()) || x.abs() > 1.0 + SLACK || !(-SLACK..=1.0 + SLACK).contains(&y) {
        return Err(Error::OutsideDomain { x, y });
    }
    let r = x.hypot(y);
    if r == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let theta = y.max(0.0).atan2(x);
    let ln_r = r.ln();
    let radial = C64::from_polar((ln_r / f64::from(n)).exp(), tau * ln_r);
    Ok(radial * (tau * (theta - PI)).cosh())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylEnergy {
    /// cosh²(τπ)(τ² + 1/n²) n/2
    pub closed_form: f64,
    /// The same integral by adaptive quadrature.
    pub quadrature: f64,
    /// cosh²(τπ) τ² n/2
    pub lower_bound: f64,
}

/// ∫_{Γ+} x |∂_x s_n|² dx.
pub fn weyl_boundary_energy(n: u32, tau: f64) -> Result<WeylEnergy> {
    if n == 0 {
        return Err(Error::invalid("Weyl index must be positive"));
    }
    let nf = f64::from(n);
    let c2 = (tau * PI).cosh().powi(2);
    let closed_form = c2 * (tau * tau + 1.0 / (nf * nf)) * nf / 2.0;
    // x = e^{−t}: x|∂_x s_n|² dx = |x ∂_x s_n|² dt
    let expo = C64::new(1.0 / nf, tau);
    let integrand = |t: f64| {
        let x_dsdx = expo * (expo * -t).exp() * (tau * PI).cosh();
        x_dsdx.norm_sqr()
    };
    let upper = 40.0 * nf;
    let quadrature =
        adaptive_integrate(integrand, 0.0, upper, 1e-11, 4000).ok_or(Error::NonConvergence { iterations: 4000 })?;
    Ok(WeylEnergy {
        closed_form,
        quadrature,
        lower_bound: c2 * tau * tau * nf / 2.0,
    })
}

/// Largest Weyl index resolvable at mesh size h: n ≤ ln(1/h).
pub fn n_max(h: f64) -> u32 {
    (1.0 / h).ln().floor().max(0.0) as u32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylRow {
    /// Weyl index; `None` for the constant control function.
    pub n: Option<u32>,
    pub level: usize,
    pub h: f64,
    pub norm_v1h: f64,
    pub rho: f64,
    pub ratio: f64,
    /// Closed-form boundary energy of s_n.
    pub closed_form: Option<f64>,
}

/// Discrete dual norm of Ã x_n for interpolated Weyl functions.
///
/// On each level the problem is half-power, s = −1, α = 1 with volume
/// coefficient 1 + i. For each n, x_n interpolates s_n, f = S x_n and
/// ρ_n = sqrt(fᴴ G⁻¹ f) with G the V₁ Gram matrix. A row for the constant
/// function is appended per level as a control.
pub fn weyl_diagnostic(meshes: &[Mesh], degree: usize, ns: &[u32]) -> Result<Vec<WeylRow>> {
    let tau = solve_tanh_dispersion();
    let spec = ProblemSpec::new(1.0, -1, WeightKind::HalfPower)?.with_shift(C64::new(1.0, 1.0));
    let mut rows = Vec::new();
    for mesh in meshes {
        let space = Arc::new(FeSpace::new(mesh, degree)?);
        let sys = assemble_system(&space, &spec)?;
        let g_lu = lu_factor(&sys.gram)?;
        let h = mesh.max_edge_length();
        let mut measure = |x: Vec<C64>, n: Option<u32>, closed: Option<f64>| {
            let norm = sys.gram.form(&x, &x).re.max(0.0).sqrt();
            let f = sys.system.matvec(&x);
            let z = g_lu.solve(&f);
            let rho = f
                .iter()
                .zip(&z)
                .map(|(a, b)| a.conj() * b)
                .sum::<C64>()
                .re
                .max(0.0)
                .sqrt();
            rows.push(WeylRow {
                n,
                level: mesh.level,
                h,
                norm_v1h: norm,
                rho,
                ratio: rho / norm,
                closed_form: closed,
            });
        };
        for &n in ns {
            let x = interpolate(
                |px, py| eval_weyl(n, tau, px, py).unwrap_or(C64::new(f64::NAN, 0.0)),
                &space,
            )?;
            measure(x, Some(n), Some(weyl_boundary_energy(n, tau)?.closed_form));
        }
        measure(vec![C64::new(1.0, 0.0); space.ndof()], None, None);
    }
    Ok(rows)
}

pub fn weyl_table(rows: &[WeylRow]) -> Table {
    let mut t = Table::new(&["n", "level", "h", "norm_V1h", "rho_n", "ratio", "closed_form"]);
    for r in rows {
        t.push(vec![
            r.n.map_or("const".into(), |n| n.to_string()),
            r.level.to_string(),
            fmt_f64(r.h),
            fmt_f64(r.norm_v1h),
            fmt_f64(r.rho),
            fmt_f64(r.ratio),
            r.closed_form.map_or(String::new(), fmt_f64),
        ]);
    }
    t
}
