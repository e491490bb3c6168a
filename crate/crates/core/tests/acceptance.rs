//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p gibc-fem --test acceptance`. The process exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gibc_fem::experiments::{
    dtn_mode_study, equivalence_check, infsup_study, poincare_study, poincare_table, refinement_study,
    RefinementReport, StudyConfig, Verdict,
};
use gibc_fem::fem::{assemble_system, solve_problem, FeSpace, ProblemSpec, WeightKind};
use gibc_fem::io::{matrix_market, parse_matrix_market, Table, VtkData};
use gibc_fem::mesh::{build_rect_mesh, BoundaryTag};
use gibc_fem::reduction::{holder_modulus, x_alpha_norm, BoundaryGrid};
use gibc_fem::singular::{
    dispersion_residual, n_max, solve_tanh_dispersion, weyl_boundary_energy, weyl_diagnostic, DispersionCase,
};
use gibc_fem::sparse::smallest_infsup;
use gibc_fem::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAM_ENTRY_TOL: f64 = 1e-12;
const IDENTITY_BETA_TOL: f64 = 1e-8;
const CONVERGING_RATIO: f64 = 0.7;
const STABLE_BETA_CHANGE: f64 = 0.10;
const MIN_BETA_DECAY: f64 = 2.0;
const MIN_NONCONVERGING_D: f64 = 0.1;
const TANH_RESIDUAL_TOL: f64 = 1e-14;
const TANH_ORACLE_TOL: f64 = 1e-10;
const ENERGY_QUADRATURE_TOL: f64 = 1e-8;
const EQUIVALENCE_TOL: f64 = 1e-10;
const DTN_MODE0_TOL: f64 = 0.01;
const POINCARE_ALPHA0_TOL: f64 = 0.005;
const POINCARE_ALPHA1_CHANGE: f64 = 0.01;
const HOLDER_SLACK: f64 = 1e-9;
const HOLDER_TRACES: usize = 1000;

/// First zero of J₀.
const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn study(alpha: f64, weight: WeightKind) -> RefinementReport {
    let spec = ProblemSpec::new(alpha, -1, weight).unwrap();
    refinement_study(&StudyConfig::new(spec).with_infsup(true)).unwrap()
}

fn fmt_list(v: &[Option<f64>]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.map_or("-".into(), |x| format!("{x:.3e}"))).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_vals(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn criterion_1() -> Outcome {
    let mesh = build_rect_mesh(8, 4).unwrap().refined();
    let space = FeSpace::new(&mesh, 2).unwrap();
    let mut worst_entry = 0.0f64;
    let mut worst_beta = 0.0f64;
    for alpha in [0.0, 0.5, 1.0, 1.5] {
        let spec = ProblemSpec::new(alpha, 1, WeightKind::HalfPower).unwrap();
        let sys = assemble_system(&space, &spec).unwrap();
        assert_eq!(sys.system.col_idx, sys.gram.col_idx);
        for (a, g) in sys.system.values.iter().zip(&sys.gram.values) {
            worst_entry = worst_entry.max((a - g).norm());
        }
        let (beta, _) = smallest_infsup(&sys.system, &sys.gram).unwrap();
        worst_beta = worst_beta.max((beta - 1.0).abs());
    }
    outcome(
        worst_entry <= GRAM_ENTRY_TOL && worst_beta <= IDENTITY_BETA_TOL,
        format!("max |S-G| = {worst_entry:.1e}, max |beta-1| = {worst_beta:.1e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for alpha in [0.5, 0.95] {
        let rep = study(alpha, WeightKind::HalfPower);
        let b = rep.betas();
        let n = b.len();
        let change = match (b[n - 2], b[n - 1]) {
            (Some(p), Some(q)) => (q - p).abs() / p,
            _ => f64::INFINITY,
        };
        let ok = rep.verdict == Verdict::Converging && change < STABLE_BETA_CHANGE;
        assert_eq!(rep.config.thresholds.max_ratio, CONVERGING_RATIO);
        pass &= ok;
        detail.push(format!(
            "alpha={alpha}: d={} beta={} last change {:.1}%",
            fmt_list(&rep.d_values()),
            fmt_list(&b),
            100.0 * change
        ));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for weight in [WeightKind::HalfPower, WeightKind::SignChanging] {
        let rep = study(1.0, weight);
        let b: Option<Vec<f64>> = rep.betas().into_iter().collect();
        let (monotone, decay) = match &b {
            Some(b) => (b.windows(2).all(|w| w[1] < w[0]), b[0] / b[b.len() - 1]),
            None => (false, f64::NAN),
        };
        let d_floor = rep
            .d_values()
            .iter()
            .all(|d| d.is_none_or(|d| d >= MIN_NONCONVERGING_D));
        let ok = monotone && decay >= MIN_BETA_DECAY && d_floor;
        pass &= ok;
        detail.push(format!(
            "{}: beta={} monotone={monotone} decay={decay:.2} d={}",
            weight.name(),
            fmt_list(&rep.betas()),
            fmt_list(&rep.d_values())
        ));
    }
    outcome(pass, detail.join("; "))
}

fn bisect_tanh() -> f64 {
    let f = |t: f64| (PI * t).tanh() - t;
    let (mut a, mut b) = (0.5, 1.0);
    while b - a > 1e-15 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn criterion_4() -> Outcome {
    let tau = solve_tanh_dispersion();
    let residual = ((PI * tau).tanh() - tau).abs();
    let oracle = bisect_tanh();
    let sc = dispersion_residual(C64::new(0.0, 1.0), DispersionCase::SignChangingCase);
    let pass = residual <= TANH_RESIDUAL_TOL
        && (tau - oracle).abs() <= TANH_ORACLE_TOL
        && tau > 0.9
        && tau < 1.0
        && sc == C64::new(0.0, 0.0);
    outcome(
        pass,
        format!(
            "tau = {tau:.15}, residual {residual:.1e}, |tau-oracle| {:.1e}, sign-changing residual {sc}",
            (tau - oracle).abs()
        ),
    )
}

fn criterion_5() -> Outcome {
    let tau = solve_tanh_dispersion();
    let c2 = (tau * PI).cosh().powi(2);
    let mut pass = true;
    let mut worst = 0.0f64;
    for n in [1u32, 10, 100] {
        let e = weyl_boundary_energy(n, tau).unwrap();
        let nf = f64::from(n);
        let expected = c2 * (tau * tau + 1.0 / (nf * nf)) * nf / 2.0;
        let rel = (e.quadrature - expected).abs() / expected;
        worst = worst.max(rel);
        let bound = (tau * C64::new(0.0, tau * PI).cos()).norm().powi(2) * nf / 2.0;
        pass &= rel <= ENERGY_QUADRATURE_TOL && (e.closed_form - expected).abs() <= 1e-14 * expected;
        pass &= e.closed_form >= bound;
    }
    let fine = build_rect_mesh(8, 4).unwrap().refined_times(4);
    let top = n_max(fine.max_edge_length());
    let ns: Vec<u32> = (1..=top).collect();
    let rows = weyl_diagnostic(std::slice::from_ref(&fine), 2, &ns).unwrap();
    let ratios: Vec<f64> = rows.iter().filter(|r| r.n.is_some()).map(|r| r.ratio).collect();
    let decreasing = ratios.len() >= 2 && ratios.windows(2).all(|w| w[1] < w[0]);
    pass &= decreasing;
    outcome(
        pass,
        format!(
            "energy rel err {worst:.1e}; n_max = {top}, rho/norm = {}",
            fmt_vals(&ratios)
        ),
    )
}

fn criterion_6() -> Outcome {
    let mesh = build_rect_mesh(8, 4).unwrap().refined();
    let mut worst = 0.0f64;
    for weight in [WeightKind::HalfPower, WeightKind::SignChanging, WeightKind::Bridge] {
        for alpha in [0.0, 0.5, 1.0] {
            let spec = ProblemSpec::new(alpha, -1, weight).unwrap();
            worst = worst.max(equivalence_check(&spec, &mesh, 2).unwrap().max_rel_diff);
        }
    }
    outcome(
        worst <= EQUIVALENCE_TOL,
        format!("max relative trace difference {worst:.1e}"),
    )
}

fn criterion_7() -> Outcome {
    let rows = dtn_mode_study(8, 4, 2, 5, 0).unwrap();
    assert!((rows[0].exact - 1f64.tanh()).abs() < 1e-15);
    let errs: Vec<f64> = rows.iter().map(|r| r.rel_error).collect();
    let pass = errs[4] < DTN_MODE0_TOL && errs.windows(2).all(|w| w[1] < w[0]);
    outcome(pass, format!("relative errors {}", fmt_vals(&errs)))
}

fn criterion_8() -> Outcome {
    let zero = poincare_study(0.0, 7).unwrap();
    let one = poincare_study(1.0, 7).unwrap();
    assert_eq!(zero[6].cells, 512);
    let exact0 = (PI / 2.0).powi(2);
    let err0 = (zero[6].mu - exact0).abs() / exact0;
    let change1 = (one[6].mu - one[5].mu).abs() / one[5].mu;
    let oracle1 = J0_FIRST_ZERO * J0_FIRST_ZERO / 4.0;
    let pass = err0 <= POINCARE_ALPHA0_TOL && one[6].mu > 0.0 && change1 < POINCARE_ALPHA1_CHANGE;
    outcome(
        pass,
        format!(
            "alpha=0: mu={:.6} err {:.2e}; alpha=1: mu={:.6} last change {:.2e} (Bessel value {oracle1:.6})",
            zero[6].mu, err0, one[6].mu, change1
        ),
    )
}

fn criterion_9() -> Outcome {
    let mesh = build_rect_mesh(8, 4).unwrap().refined();
    let space = FeSpace::new(&mesh, 2).unwrap();
    let grid = BoundaryGrid::new(&space, &[BoundaryTag::GammaPlus]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut violations = 0usize;
    let mut checks = 0usize;
    let mut worst = 0.0f64;
    for alpha in [0.0, 0.3, 0.5, 0.9] {
        for _ in 0..HOLDER_TRACES / 4 {
            let mut u = vec![C64::new(0.0, 0.0); space.ndof()];
            for &d in &grid.dofs {
                u[d] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let norm = x_alpha_norm(&space, alpha, &u).unwrap();
            for (i, &xi) in grid.x.iter().enumerate() {
                for (j, &xj) in grid.x.iter().enumerate() {
                    if !(0.0 < xi && xi < xj) {
                        continue;
                    }
                    let lhs = (u[grid.dofs[j]] - u[grid.dofs[i]]).norm();
                    let rhs = holder_modulus(alpha, xi, xj) * norm;
                    checks += 1;
                    worst = worst.max(lhs / rhs);
                    if lhs > rhs * (1.0 + HOLDER_SLACK) {
                        violations += 1;
                    }
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{HOLDER_TRACES} traces, {checks} pairs, {violations} violations, max lhs/rhs {worst:.3}"),
    )
}

fn criterion_10() -> Outcome {
    let spec = ProblemSpec::new(0.5, -1, WeightKind::HalfPower).unwrap();
    let mut cfg = StudyConfig::new(spec).with_infsup(true);
    cfg.levels = 3;
    let a = refinement_study(&cfg).unwrap();
    let b = refinement_study(&cfg).unwrap();
    let mut pass = a == b;
    let inf_a = infsup_study(&cfg).unwrap();
    pass &= inf_a == infsup_study(&cfg).unwrap();

    let json = serde_json::to_string(&a).unwrap();
    pass &= serde_json::from_str::<RefinementReport>(&json).unwrap() == a;

    for table in [
        a.table(),
        inf_a.table(),
        poincare_table(&poincare_study(1.0, 3).unwrap()),
    ] {
        let csv = table.to_csv().unwrap();
        let back = Table::from_csv(&csv).unwrap();
        pass &= back == table;
    }
    let parsed = Table::from_csv(&a.table().to_csv().unwrap()).unwrap();
    let l2: Vec<f64> = parsed.column_f64("l2").unwrap();
    pass &= l2
        .iter()
        .zip(&a.records)
        .all(|(v, r)| v.to_bits() == r.l2.unwrap().to_bits());

    let mesh = build_rect_mesh(8, 4).unwrap();
    let space = Arc::new(FeSpace::new(&mesh, 2).unwrap());
    let sol = solve_problem(&spec, space.clone()).unwrap();
    let vtk = VtkData::from_solution(&space, &sol.values).unwrap();
    pass &= VtkData::parse(&vtk.to_vtk("solution")).unwrap() == vtk;
    let re = vtk.scalar("real").unwrap();
    pass &= (0..space.ndof()).all(|d| re[d].to_bits() == sol.values[d].re.to_bits());

    let sys = assemble_system(&space, &spec).unwrap();
    let mm = parse_matrix_market(&matrix_market(&sys.system)).unwrap();
    pass &= mm.row_ptr == sys.system.row_ptr && mm.col_idx == sys.system.col_idx;
    pass &= mm
        .values
        .iter()
        .zip(&sys.system.values)
        .all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits());

    outcome(
        pass,
        format!(
            "config {} reproduced; JSON, CSV, VTK, Matrix Market exact",
            a.config_hash
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("identity case", criterion_1, Duration::from_secs(10)),
        ("Fredholm regime", criterion_2, Duration::from_secs(120)),
        ("non-Fredholm regime", criterion_3, Duration::from_secs(120)),
        ("singular exponents", criterion_4, Duration::from_secs(1)),
        ("Weyl growth", criterion_5, Duration::from_secs(120)),
        ("reduction equivalence", criterion_6, Duration::from_secs(60)),
        ("spectral DtN", criterion_7, Duration::from_secs(60)),
        ("Poincaré", criterion_8, Duration::from_secs(10)),
        ("Hölder suite", criterion_9, Duration::from_secs(30)),
        ("determinism and round trip", criterion_10, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<27} {}  ({:.2} s / {} s) {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time {
                out.detail
            } else {
                format!("time limit exceeded; {}", out.detail)
            }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
