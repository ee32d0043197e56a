//! End-to-end acceptance checks, one line per criterion. Grid N = 2048
//! wherever a surface is involved.

use std::f64::consts::{E, PI};
use std::io::Write as _;
use std::process::Command;

use rayon::prelude::*;

use rflow_core::determinant::{
    barnes_g, det_from_selberg, det_hyperbolic, gamma_log, integrate_polyakov_along_flow, logdet_from_heat_trace,
    renormalized_zeta, renormalized_zeta_derivative_at_zero, selberg_zeta, CuspPrefactor, HeatCoefficients,
    HeatTraceModel, LengthSpectrum, SelbergParams,
};
use rflow_core::flow::{asymptotic_curvature, predicted_renormalized_area, run_flow, FlowConfig, Trajectory};
use rflow_core::numerics::simpson;
use rflow_core::potential::{monitor_entropy, solve_potential, BoundaryCondition};
use rflow_core::renorm::{
    construct_area_prescribing_factor, finite_part_hadamard, finite_part_riesz, renormalized_area,
    renormalized_area_geodesic, renormalized_curvature_integral, AreaOptions, EndChart, HadamardOptions, Integrand,
    Order, RieszOptions,
};
use rflow_core::surface::{
    balanced_bump, build_model_surface, bump, random_bumps, scalar_curvature, BumpSpec, ConformalFactor,
    ConformalSurface, EndKind, Side,
};
use statrs::function::gamma::gamma;

const N: usize = 2048;

type Outcome = Result<String, String>;

fn horn() -> ConformalSurface {
    build_model_surface(EndKind::Funnel, EndKind::Cusp, N).unwrap()
}

fn balanced(s: &ConformalSurface, amplitude: f64, c1: f64, c2: f64) -> ConformalFactor {
    balanced_bump(
        s,
        &BumpSpec { amplitude, center: c1, width: 0.15 },
        &BumpSpec { amplitude: 1.0, center: c2, width: 0.15 },
    )
    .unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gauss_bonnet() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (ends, offsets) in [
        ((EndKind::Funnel, EndKind::Cusp), &[0.0, 0.3, -0.2, 0.5][..]),
        ((EndKind::Funnel, EndKind::Funnel), &[0.0, -0.4, 0.25][..]),
        ((EndKind::Cusp, EndKind::Cusp), &[0.0, 0.2, -0.3, 0.6][..]),
    ] {
        let s = build_model_surface(ends.0, ends.1, N).unwrap();
        for (k, off) in offsets.iter().enumerate() {
            let mut w = random_bumps(&s, 3, 0.4, 11 + k as u64);
            for v in &mut w.omega {
                *v += off;
            }
            let r = renormalized_curvature_integral(&s, &w).map_err(|e| e.to_string())?;
            if !r.warnings.is_empty() {
                return Err(format!("{ends:?}: factor flagged as not totally geodesic"));
            }
            // Per unit angle: 4 pi chi becomes 2 chi.
            worst = worst.max((r.value.finite_part - 2.0 * s.euler_characteristic as f64).abs());
            count += 1;
        }
    }
    check(count >= 10 && worst <= 1e-4, format!("{count} factors, max |defect| = {worst:.2e}"))
}

fn unit_interval(f: impl Fn(f64) -> f64) -> Integrand {
    let n = N;
    let x: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let basis = [(-2.0, 0), (-1.0, 0), (-1.0, 1), (0.0, 0), (1.0, 0), (2.0, 0)]
        .iter()
        .map(|&(s, p)| Order::new(s, p))
        .collect();
    Integrand {
        density: x.iter().map(|&x| if x > 0.0 { f(x) } else { f64::NAN }).collect(),
        total_bdf: x.clone(),
        left: Some(EndChart { x, dx: vec![1.0; n + 1], basis }),
        right: None,
    }
}

fn finite_parts() -> Outcome {
    let family: [(&str, fn(f64) -> f64, f64); 4] = [
        ("x^-2", |x| x.powi(-2), -1.0),
        ("x^-1", |x| 1.0 / x, 0.0),
        ("x^-1 log x", |x| x.ln() / x, 0.0),
        ("exp(1 + x)", |x| (1.0 + x).exp(), E * (E - 1.0)),
    ];
    let mut agree = 0.0f64;
    let mut exact = 0.0f64;
    for (name, f, value) in family {
        let g = unit_interval(f);
        let h = finite_part_hadamard(&g, &HadamardOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        let r = finite_part_riesz(&g, &RieszOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        agree = agree.max((h.finite_part - r.finite_part).abs());
        exact = exact.max((h.finite_part - value).abs()).max((r.finite_part - value).abs());
    }
    check(
        agree <= 1e-6 && exact <= 1e-8,
        format!("max |Hadamard - Riesz| = {agree:.2e}, max |value - exact| = {exact:.2e}"),
    )
}

fn area_law_error(s: &ConformalSurface, traj: &Trajectory, t_max: f64) -> f64 {
    let a0 = traj.states[0].area.finite_part;
    traj.states
        .iter()
        .filter(|st| st.t <= t_max + 1e-12)
        .map(|st| (st.area.finite_part - predicted_renormalized_area(st.t, a0, s.euler_characteristic, -2.0).unwrap()).abs())
        .fold(0.0, f64::max)
}

fn area_law() -> Outcome {
    let s = horn();
    let mut details = Vec::new();
    let mut ok = true;
    for target in [3.0, -5.0] {
        let opts = AreaOptions { eps: 0.125, ..AreaOptions::default() };
        let w = construct_area_prescribing_factor(&s, target, &opts).map_err(|e| e.to_string())?.factor;
        let cfg = FlowConfig { dt: 1.25e-3, t_end: 5.0, convergence_threshold: 0.0, ..FlowConfig::default() };
        let (traj, _) = run_flow(&s, &w, &cfg).map_err(|e| e.to_string())?;
        let a0 = traj.states[0].area.finite_part;
        let err = area_law_error(&s, &traj, 5.0);
        ok &= err <= 1e-3 && (a0 - target).abs() <= 1e-6;
        details.push(format!("A0 = {target}: {err:.2e}"));
    }
    // Zero area: the balanced bump, run to convergence.
    let w = balanced(&s, 0.2, 0.35, 0.65);
    let cfg = FlowConfig { t_end: 20.0, convergence_threshold: 1e-9, ..FlowConfig::default() };
    let (traj, _) = run_flow(&s, &w, &cfg).map_err(|e| e.to_string())?;
    let err = area_law_error(&s, &traj, 5.0);
    let sup = traj.states.iter().map(|st| st.area.finite_part.abs()).fold(0.0, f64::max);
    ok &= err <= 1e-3 && sup <= 1e-3;
    details.push(format!("A0 = 0: {err:.2e}, sup |A_t| = {sup:.2e} to t = {:.2}", traj.states.last().unwrap().t));
    check(ok, details.join("; "))
}

fn boundary_asymptotics() -> Outcome {
    let mut worst = 0.0f64;
    for ends in [(EndKind::Funnel, EndKind::Cusp), (EndKind::Funnel, EndKind::Funnel)] {
        let s = build_model_surface(ends.0, ends.1, N).unwrap();
        for r0 in [-1.0f64, -2.0, -4.0] {
            // e^{-omega} (-2) = r0 at both ends.
            let mut w = bump(&s, &BumpSpec { amplitude: 0.3, center: 0.5, width: 0.2 }).unwrap();
            for v in &mut w.omega {
                *v += -(-r0 / 2.0).ln();
            }
            let cfg = FlowConfig { t_end: 5.0, dt: 2.5e-3, convergence_threshold: 0.0, ..FlowConfig::default() };
            let (traj, _) = run_flow(&s, &w, &cfg).map_err(|e| e.to_string())?;
            for st in &traj.states {
                for side in [Side::Left, Side::Right] {
                    let r = asymptotic_curvature(st.t, r0, -2.0).map_err(|e| e.to_string())?;
                    worst = worst.max((st.end_curvature(side) - r).abs());
                }
            }
        }
    }
    check(worst <= 1e-4, format!("max |r_i(t) - law| = {worst:.2e}"))
}

fn convergence_rate() -> Outcome {
    let s = horn();
    let mut rates = Vec::new();
    for w in [
        balanced(&s, 0.2, 0.35, 0.65),
        bump(&s, &BumpSpec { amplitude: 0.2, center: 0.35, width: 0.15 }).unwrap(),
    ] {
        let cfg = FlowConfig { t_end: 40.0, ..FlowConfig::default() };
        let (_, report) = run_flow(&s, &w, &cfg).map_err(|e| e.to_string())?;
        if !report.converged {
            return Err("run did not converge".into());
        }
        rates.push(report.fitted_rate.ok_or("no fitted rate")?);
    }
    let ok = rates.iter().all(|r| (r + 2.0).abs() <= 0.2);
    check(ok, format!("fitted rates {rates:.3?} against -2"))
}

/// Zero-area horn runs with `C = -2` to convergence, with their ledgers.
fn qualifying_runs() -> Result<Vec<(Trajectory, rflow_core::determinant::PolyakovLedger)>, String> {
    let s = horn();
    [(0.2, 0.35, 0.65), (0.3, 0.6, 0.3), (-0.25, 0.4, 0.7)]
        .into_iter()
        .map(|(a, c1, c2)| {
            let w = balanced(&s, a, c1, c2);
            let cfg = FlowConfig { t_end: 20.0, convergence_threshold: 1e-9, ..FlowConfig::default() };
            let (traj, report) = run_flow(&s, &w, &cfg).map_err(|e| e.to_string())?;
            if !report.converged {
                return Err(format!("run ({a}, {c1}, {c2}) did not converge"));
            }
            let ledger = integrate_polyakov_along_flow(&s, &traj).map_err(|e| e.to_string())?;
            Ok((traj, ledger))
        })
        .collect()
}

fn monotonicity() -> Outcome {
    let runs = qualifying_runs()?;
    let min = runs
        .iter()
        .map(|(_, l)| l.min_increment().unwrap().1)
        .fold(f64::INFINITY, f64::min);
    let totals: Vec<f64> = runs.iter().map(|(_, l)| l.accumulated).collect();
    check(
        min >= -1e-10 && totals.iter().all(|t| *t > 0.0),
        format!("{} runs, min increment {min:.2e}, totals {totals:.4?}", runs.len()),
    )
}

fn closed_form_consistency() -> Outcome {
    let runs = qualifying_runs()?;
    let mut worst = 0.0f64;
    for (_, l) in &runs {
        let target = l.closed_form_target.ok_or("closed form unavailable")?;
        worst = worst.max((l.accumulated - target).abs() / target.abs().max(1.0));
    }
    check(worst <= 1e-3, format!("{} runs, max relative gap {worst:.2e}", runs.len()))
}

fn glaisher_log() -> f64 {
    let partial = |n: usize| {
        let s: f64 = (1..=n).map(|k| k as f64 * (k as f64).ln()).sum();
        let x = n as f64;
        s - (x * x / 2.0 + x / 2.0 + 1.0 / 12.0) * x.ln() + x * x / 4.0
    };
    let (a, b, c) = (partial(100), partial(200), partial(400));
    let r1 = (4.0 * b - a) / 3.0;
    let r2 = (4.0 * c - b) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

fn gamma_log_quadrature(z: f64) -> f64 {
    let n = 40_000;
    let h = 80.0 / n as f64;
    let near: Vec<f64> = (0..=n)
        .map(|i| {
            let v = i as f64 * h;
            let t = (-v).exp();
            t.powf(z) * (-t).exp_m1() * -v
        })
        .collect();
    let hf = 60.0 / n as f64;
    let far: Vec<f64> = (0..=n)
        .map(|i| {
            let t = 1.0 + i as f64 * hf;
            t.powf(z - 1.0) * (-t).exp() * t.ln()
        })
        .collect();
    simpson(&near, h) - 1.0 / (z * z) + simpson(&far, hf)
}

fn special_functions() -> Outcome {
    let mut recursion = 0.0f64;
    for z in [0.5, 0.75, 1.0, 1.5, 2.25, 3.0, 4.5] {
        let ratio = barnes_g(z + 1.0).unwrap() / barnes_g(z).unwrap();
        recursion = recursion.max((ratio - gamma(z)).abs());
    }
    let g_half = (2f64.ln() / 24.0 + 0.125 - 0.25 * PI.ln() - 1.5 * glaisher_log()).exp();
    let half = (barnes_g(0.5).unwrap() - g_half).abs();
    let glog = (gamma_log(-0.5).unwrap() - gamma_log_quadrature(-0.5)).abs();
    let mut heat = 0.0f64;
    let mut zeta = 0.0f64;
    for lambda in [0.3, 1.0, 2.5] {
        let c = HeatCoefficients { a_zero: 1.0, ..HeatCoefficients::default() };
        let m = HeatTraceModel::from_fn(c, 0, move |t| (-t * lambda).exp(), -40, 8, 128);
        for w in [0.5, 1.0, 2.0] {
            let d = logdet_from_heat_trace(&m, w).map_err(|e| e.to_string())?;
            heat = heat.max((d.value.exp() - (lambda + w)).abs());
        }
        let d = renormalized_zeta_derivative_at_zero(&m).map_err(|e| e.to_string())?;
        zeta = zeta.max(((-d.value).exp() - lambda).abs());
        let z1 = renormalized_zeta(&m, 1.5).map_err(|e| e.to_string())?;
        zeta = zeta.max((z1.value - lambda.powf(-1.5)).abs());
    }
    check(
        recursion <= 1e-12 && half <= 1e-9 && glog <= 1e-8 && heat <= 1e-8 && zeta <= 1e-8,
        format!(
            "recursion {recursion:.1e}, G(1/2) {half:.1e}, Gamma_log {glog:.1e}, det {heat:.1e}, zeta {zeta:.1e}"
        ),
    )
}

/// `log Z(s)` as `-sum_m e^{-m s l} / (m (1 - e^{-m l}))`.
fn log_zeta_series(l: f64, s: f64) -> f64 {
    (1..400)
        .map(|m| {
            let m = m as f64;
            -(-m * s * l).exp() / (m * -(-m * l).exp_m1())
        })
        .sum()
}

fn selberg_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let run = || Command::new(env!("CARGO_BIN_EXE_rflow")).args(args).output().map_err(|e| e.to_string());
    let (a, b) = (run()?, run()?);
    if !a.status.success() {
        return Err(String::from_utf8_lossy(&a.stderr).into_owned());
    }
    if a.stdout != b.stdout {
        return Err("selberg output differs between runs".into());
    }
    Ok(a.stdout)
}

fn selberg_baselines() -> Outcome {
    let empty = LengthSpectrum::empty();
    let horn = det_hyperbolic(&empty, &SelbergParams::new(0, 1), false, CuspPrefactor::default())
        .map_err(|e| e.to_string())?;
    let horn_err = (horn.value - 1.0 / (2f64.sqrt() * PI)).abs();
    let mut cyl_err = 0.0f64;
    let mut oracle_err = 0.0f64;
    let mut tail = 0.0f64;
    for l in [1.0, 2.0] {
        let spec = LengthSpectrum::new(vec![(l, 1)]).map_err(|e| e.to_string())?;
        for s in [1.5, 2.0, 3.0] {
            let d = det_from_selberg(&spec, &SelbergParams::new(0, 0), s).map_err(|e| e.to_string())?;
            let z = selberg_zeta(&spec, s).map_err(|e| e.to_string())?;
            cyl_err = cyl_err.max((d.value - z.value).abs());
            oracle_err = oracle_err.max((z.value - log_zeta_series(l, s).exp()).abs());
            tail = tail.max(z.tail_bound);
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let horn_file = dir.path().join("horn.txt");
    let cyl_file = dir.path().join("cylinder.txt");
    std::fs::write(&horn_file, "# no closed geodesics\n").map_err(|e| e.to_string())?;
    std::fs::write(&cyl_file, "2.0 1\n").map_err(|e| e.to_string())?;
    let out = selberg_cli(&["selberg", horn_file.to_str().unwrap(), "--chi", "0", "--ncusps", "1"])?;
    let text = String::from_utf8_lossy(&out);
    let printed: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("det Delta = "))
        .and_then(|l| l.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .ok_or("no det Delta line")?;
    let cli_err = (printed - 1.0 / (2f64.sqrt() * PI)).abs();
    selberg_cli(&["selberg", cyl_file.to_str().unwrap(), "--chi", "0", "--s", "2"])?;
    check(
        horn_err <= 1e-12 && cyl_err <= 1e-15 && tail < 1e-12 && oracle_err <= tail + 1e-15 && cli_err <= 1e-14,
        format!(
            "horn {horn_err:.1e}, cylinder {cyl_err:.1e}, series oracle {oracle_err:.1e}, tail {tail:.1e}, CLI byte-identical"
        ),
    )
}

fn potential_solve() -> Outcome {
    let s = horn();
    let w = balanced(&s, 0.2, 0.35, 0.65);
    let cfg = FlowConfig { t_end: 20.0, convergence_threshold: 1e-9, ..FlowConfig::default() };
    let (traj, report) = run_flow(&s, &w, &cfg).map_err(|e| e.to_string())?;
    if !report.converged {
        return Err("run did not converge".into());
    }
    let bc = BoundaryCondition::DirichletAtFirstFunnel;
    let mut worst = 0.0f64;
    for st in traj.states.iter().step_by(25) {
        let p = solve_potential(&s, &st.omega, -2.0, bc).map_err(|e| e.to_string())?;
        let r = scalar_curvature(&s, &st.omega);
        let scale = r[1..N].iter().map(|v| (v + 2.0).abs()).fold(0.0, f64::max);
        worst = worst.max(p.residual_norm / (1e-6 * scale + 1e-8));
    }
    let m = monitor_entropy(&s, &traj, bc).map_err(|e| e.to_string())?;
    check(
        worst <= 1.0 && m.non_increasing(0.01),
        format!("residual / bound <= {worst:.2e}, entropy drift {:.2e}", m.max_drift),
    )
}

fn area_prescription() -> Outcome {
    let s = horn();
    let mut worst = 0.0f64;
    for target in [-5.0, 10.0] {
        let p = construct_area_prescribing_factor(&s, target, &AreaOptions::default()).map_err(|e| e.to_string())?;
        let fitted = renormalized_area(&s, &p.factor).map_err(|e| e.to_string())?.finite_part;
        let geodesic = renormalized_area_geodesic(&s, &p.factor).map_err(|e| e.to_string())?.finite_part;
        worst = worst.max((fitted - target).abs()).max((geodesic - target).abs());
    }
    check(worst <= 1e-6, format!("max |area - target| = {worst:.2e}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("renormalized Gauss-Bonnet", gauss_bonnet),
        ("finite-part equivalence", finite_parts),
        ("area law", area_law),
        ("boundary asymptotics", boundary_asymptotics),
        ("exponential convergence", convergence_rate),
        ("determinant monotonicity", monotonicity),
        ("flow/closed-form determinant consistency", closed_form_consistency),
        ("special functions", special_functions),
        ("Selberg baselines", selberg_baselines),
        ("potential solve", potential_solve),
        ("area prescription", area_prescription),
    ];
    let results: Vec<Outcome> = criteria.par_iter().map(|(_, f)| f()).collect();
    // Written to the real stdout so the lines show without --nocapture.
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for (k, ((name, _), r)) in criteria.iter().zip(&results).enumerate() {
        match r {
            Ok(d) => writeln!(out, "criterion {:>2} PASS  {name}: {d}", k + 1).unwrap(),
            Err(d) => {
                failed += 1;
                writeln!(out, "criterion {:>2} FAIL  {name}: {d}", k + 1).unwrap();
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
