//! Scenario pipeline: build the surface and initial factor, run the flow,
//! evaluate the requested monitors and emit the trajectory, summary and
//! plots.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use rflow_core::determinant::{
    det_hyperbolic, integrate_polyakov_along_flow, CuspPrefactor, DeterminantError, LengthSpectrum,
    PolyakovLedger, SelbergParams,
};
use rflow_core::flow::{
    asymptotic_curvature, predicted_renormalized_area, run_flow, ConvergenceReport, FlowConfig, FlowError,
    Trajectory,
};
use rflow_core::potential::{monitor_entropy, BoundaryCondition, EntropyMonitor};
use rflow_core::renorm::{construct_area_prescribing_factor, AreaOptions};
use rflow_core::surface::{
    balanced_bump, bump, random_bumps, Chart, ConformalFactor, ConformalSurface, EndKind, Side, SurfaceDocument,
};

use crate::scenario::{InitialSpec, Scenario, SurfaceSpec};
use crate::svg;

pub const FORMAT_VERSION: u32 = 1;

pub const CSV_COLUMNS: &str = "t,sup_dev,renorm_area,omega_left,omega_right,r_left,r_right,logdet_increment,h_max";

#[derive(Debug)]
pub enum RunError {
    /// Unreadable or inconsistent input.
    Input(String),
    /// A checked property of the run failed.
    Invariant(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 1,
            RunError::Invariant(_) => 2,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Input(m) => write!(f, "input error: {m}"),
            RunError::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

fn input(e: impl std::fmt::Display) -> RunError {
    RunError::Input(e.to_string())
}

fn flow_error(e: FlowError) -> RunError {
    match e {
        FlowError::BlowUp { t, .. } => RunError::Invariant(format!("curvature blew up at t = {t}")),
        e => input(e),
    }
}

fn ledger_error(e: DeterminantError) -> RunError {
    match e {
        DeterminantError::NegativeIncrement { .. } => RunError::Invariant(e.to_string()),
        e => RunError::Input(format!("Polyakov ledger: {e}")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropySummary {
    pub fitted_rate: Option<f64>,
    pub max_drift: f64,
    pub final_h_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerSummary {
    /// Time integral of the increments.
    pub accumulated: Estimate,
    pub closed_form_target: Option<f64>,
    pub min_increment: f64,
    pub identity_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelbergSummary {
    pub spectrum: PathBuf,
    /// Determinant of the hyperbolic metric in the conformal class.
    pub det: Estimate,
    pub log_det: f64,
    /// `log det` of the initial metric: the hyperbolic value minus the
    /// ledger's closed-form change, when the run converged.
    pub initial_log_det: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub format_version: u32,
    pub name: String,
    pub seed: u64,
    pub surface: SurfaceSpec,
    pub grid_size: usize,
    pub euler_characteristic: i32,
    pub n_cusps: u32,
    pub initial: InitialSpec,
    pub flow: FlowConfig,
    pub normalization: f64,
    pub recorded_states: usize,
    pub final_time: f64,
    pub convergence: ConvergenceReport,
    pub initial_area: Estimate,
    pub final_area: Estimate,
    /// Largest deviation of the renormalized area from its closed-form law.
    pub area_law_max_error: Option<f64>,
    /// Largest deviation of the end curvatures from the asymptotic law.
    pub end_curvature_max_error: Option<f64>,
    pub entropy: Option<EntropySummary>,
    pub ledger: Option<LedgerSummary>,
    pub selberg: Option<SelbergSummary>,
}

/// Everything one scenario run produces.
pub struct Simulation {
    pub surface: ConformalSurface,
    pub trajectory: Trajectory,
    pub entropy: Option<EntropyMonitor>,
    pub ledger: Option<PolyakovLedger>,
    pub summary: Summary,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn build_surface(
    scenario: &Scenario,
    base: &Path,
    grid: Option<usize>,
) -> Result<(ConformalSurface, Option<ConformalFactor>), RunError> {
    match &scenario.surface {
        SurfaceSpec::Model { left, right, grid: n, length } => {
            let chart = match (left, right) {
                (EndKind::Funnel, EndKind::Cusp) => Chart::Horn,
                (EndKind::Cusp, EndKind::Funnel) => Chart::MirroredHorn,
                (EndKind::Funnel, EndKind::Funnel) => Chart::HyperbolicCylinder { length: *length },
                (EndKind::Cusp, EndKind::Cusp) => Chart::CuspCusp,
            };
            Ok((ConformalSurface::new(chart, grid.unwrap_or(*n), None).map_err(input)?, None))
        }
        SurfaceSpec::File(p) => {
            if grid.is_some() {
                return Err(input("refinement needs a model surface, not a surface document"));
            }
            let path = resolve(base, p);
            let text = fs::read_to_string(&path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            SurfaceDocument::from_json(&text)
                .and_then(|d| d.build())
                .map_err(|e| input(format!("{}: {e}", path.display())))
        }
    }
}

fn initial_factor(
    scenario: &Scenario,
    surface: &ConformalSurface,
    from_file: Option<ConformalFactor>,
    seed: u64,
) -> Result<ConformalFactor, RunError> {
    match &scenario.initial {
        InitialSpec::Zero => Ok(ConformalFactor::zero(surface)),
        InitialSpec::File => Ok(from_file.unwrap_or_else(|| ConformalFactor::zero(surface))),
        InitialSpec::Bump(b) => bump(surface, b).map_err(input),
        InitialSpec::BalancedBump { first, second } => balanced_bump(surface, first, second).map_err(input),
        InitialSpec::RandomBumps { count, max_amplitude, .. } => {
            Ok(random_bumps(surface, *count, *max_amplitude, seed))
        }
        InitialSpec::Area(target) => construct_area_prescribing_factor(surface, *target, &AreaOptions::default())
            .map(|p| p.factor)
            .map_err(input),
    }
}

fn estimate(v: &rflow_core::renorm::RenormalizedValue) -> Estimate {
    Estimate { value: v.finite_part, error_estimate: v.estimated_error }
}

fn area_law_error(surface: &ConformalSurface, traj: &Trajectory) -> Option<f64> {
    let a0 = traj.states.first()?.area.finite_part;
    let c = traj.normalization;
    let mut worst = 0.0f64;
    for s in &traj.states {
        let p = predicted_renormalized_area(s.t, a0, surface.euler_characteristic, c).ok()?;
        worst = worst.max((s.area.finite_part - p).abs());
    }
    Some(worst)
}

fn end_curvature_error(traj: &Trajectory) -> Option<f64> {
    let first = traj.states.first()?;
    let c = traj.normalization;
    let mut worst = 0.0f64;
    for side in [Side::Left, Side::Right] {
        let r0 = first.end_curvature(side);
        for s in &traj.states {
            let r = asymptotic_curvature(s.t, r0, c).ok()?;
            worst = worst.max((s.end_curvature(side) - r).abs());
        }
    }
    Some(worst)
}

/// Runs the scenario without writing anything. `grid` overrides the
/// scenario's grid size; `seed` overrides its seed.
pub fn simulate(
    scenario: &Scenario,
    base: &Path,
    seed: Option<u64>,
    grid: Option<usize>,
) -> Result<Simulation, RunError> {
    let seed = seed
        .or(match scenario.initial {
            InitialSpec::RandomBumps { seed, .. } => seed,
            _ => None,
        })
        .unwrap_or(0);
    let (surface, from_file) = build_surface(scenario, base, grid)?;
    let omega0 = initial_factor(scenario, &surface, from_file, seed)?;
    let (trajectory, convergence) = run_flow(&surface, &omega0, &scenario.flow).map_err(flow_error)?;

    let entropy = if scenario.potential {
        let bc = if surface.has_funnel() {
            BoundaryCondition::DirichletAtFirstFunnel
        } else {
            BoundaryCondition::NeumannAll
        };
        Some(monitor_entropy(&surface, &trajectory, bc).map_err(|e| input(format!("potential monitor: {e}")))?)
    } else {
        None
    };

    let ledger = if scenario.polyakov {
        let mut ledger = integrate_polyakov_along_flow(&surface, &trajectory).map_err(ledger_error)?;
        if scenario.corrupt_ledger {
            // Test hook: flips one increment so the guard below must fire.
            let k = ledger.increments.len() / 2;
            ledger.increments[k].1 = -ledger.increments[k].1.abs() - 1e-6;
        }
        ledger.check_monotone().map_err(ledger_error)?;
        Some(ledger)
    } else {
        None
    };

    let selberg = match &scenario.selberg {
        None => None,
        Some(p) => {
            let path = resolve(base, p);
            let text = fs::read_to_string(&path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            let spectrum = LengthSpectrum::parse(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
            let params = SelbergParams::new(surface.euler_characteristic, surface.n_cusps);
            let det = det_hyperbolic(&spectrum, &params, surface.finite_area(), CuspPrefactor::default())
                .map_err(input)?;
            let log_det = det.value.ln();
            let initial_log_det = match &ledger {
                Some(l) if convergence.converged => l.closed_form_target.map(|f| log_det - f),
                _ => None,
            };
            Some(SelbergSummary {
                spectrum: p.clone(),
                det: Estimate { value: det.value, error_estimate: det.tail_bound },
                log_det,
                initial_log_det,
            })
        }
    };

    let first = trajectory.states.first().expect("a run records its initial state");
    let last = trajectory.states.last().expect("a run records its final state");
    let summary = Summary {
        format_version: FORMAT_VERSION,
        name: scenario.name.clone(),
        seed,
        surface: scenario.surface.clone(),
        grid_size: surface.intervals(),
        euler_characteristic: surface.euler_characteristic,
        n_cusps: surface.n_cusps,
        initial: scenario.initial.clone(),
        flow: scenario.flow.clone(),
        normalization: trajectory.normalization,
        recorded_states: trajectory.states.len(),
        final_time: last.t,
        convergence,
        initial_area: estimate(&first.area),
        final_area: estimate(&last.area),
        area_law_max_error: area_law_error(&surface, &trajectory),
        end_curvature_max_error: end_curvature_error(&trajectory),
        entropy: entropy.as_ref().map(|m| EntropySummary {
            fitted_rate: m.fitted_rate,
            max_drift: m.max_drift,
            final_h_max: m.h_max.last().copied().unwrap_or(f64::NAN),
        }),
        ledger: ledger.as_ref().map(|l| LedgerSummary {
            accumulated: Estimate {
                value: l.accumulated,
                error_estimate: l.closed_form_target.map_or(f64::NAN, |f| (l.accumulated - f).abs()),
            },
            closed_form_target: l.closed_form_target,
            min_increment: l.min_increment().map_or(f64::NAN, |m| m.1),
            identity_defect: l.identity_defect,
        }),
        selberg,
    };
    Ok(Simulation { surface, trajectory, entropy, ledger, summary })
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.12e}"))
}

pub fn trajectory_csv(sim: &Simulation) -> String {
    let mut out = format!("# format_version={FORMAT_VERSION}\n{CSV_COLUMNS}\n");
    for (k, s) in sim.trajectory.states.iter().enumerate() {
        let (wl, wr) = s.omega.boundary_values();
        let inc = sim.ledger.as_ref().map(|l| l.increments[k].1);
        let h = sim.entropy.as_ref().map(|m| m.h_max[k]);
        writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
            s.t,
            s.sup_deviation,
            s.area.finite_part,
            wl,
            wr,
            s.end_curvature(Side::Left),
            s.end_curvature(Side::Right),
            opt(inc),
            opt(h)
        )
        .expect("writing to a string");
    }
    out
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes()).map_err(input)?;
    tmp.persist(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn plots(sim: &Simulation) -> Vec<(&'static str, String)> {
    let states = &sim.trajectory.states;
    let mut out = vec![(
        "sup_dev.svg",
        svg::line_plot(
            "sup |R - C|",
            &[("sup_dev", states.iter().map(|s| (s.t, s.sup_deviation)).collect())],
            true,
        ),
    )];
    let a0 = states[0].area.finite_part;
    let chi = sim.surface.euler_characteristic;
    let c = sim.trajectory.normalization;
    let law: Vec<(f64, f64)> = states
        .iter()
        .filter_map(|s| predicted_renormalized_area(s.t, a0, chi, c).ok().map(|a| (s.t, a)))
        .collect();
    out.push((
        "renorm_area.svg",
        svg::line_plot(
            "renormalized area",
            &[
                ("measured", states.iter().map(|s| (s.t, s.area.finite_part)).collect()),
                ("closed form", law),
            ],
            false,
        ),
    ));
    if let Some(l) = &sim.ledger {
        out.push((
            "ledger.svg",
            svg::line_plot("d/dt log det", &[("increment", l.increments.clone())], false),
        ));
    }
    out
}

/// Runs a scenario and writes `<name>.csv`, `<name>.json` and plots into
/// `out_dir`.
pub fn run_scenario(
    scenario: &Scenario,
    base: &Path,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<Summary, RunError> {
    let sim = simulate(scenario, base, seed, None)?;
    fs::create_dir_all(out_dir).map_err(|e| input(format!("{}: {e}", out_dir.display())))?;
    let name = &scenario.name;
    if scenario.write_csv {
        write_atomic(&out_dir.join(format!("{name}.csv")), &trajectory_csv(&sim))?;
    }
    let json = serde_json::to_string_pretty(&sim.summary).expect("summary serializes") + "\n";
    write_atomic(&out_dir.join(format!("{name}.json")), &json)?;
    if scenario.write_svg {
        for (file, body) in plots(&sim) {
            write_atomic(&out_dir.join(format!("{name}_{file}")), &body)?;
        }
    }
    Ok(sim.summary)
}

/// Loads and parses a scenario file; relative paths inside it resolve
/// against its directory.
pub fn load_scenario(path: &Path) -> Result<(Scenario, PathBuf), RunError> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let scenario = Scenario::parse(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((scenario, base))
}

/// Runs several scenario files concurrently; results keep the input order.
pub fn run_batch(paths: &[PathBuf], out_dir: &Path, seed: Option<u64>) -> Vec<Result<Summary, RunError>> {
    paths
        .par_iter()
        .map(|p| {
            let (scenario, base) = load_scenario(p)?;
            run_scenario(&scenario, &base, out_dir, seed)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefineRow {
    pub grid_size: usize,
    /// Differences to the next finer level; absent on the finest.
    pub curvature_error: Option<f64>,
    pub area_error: Option<f64>,
    pub ledger_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefineTable {
    pub format_version: u32,
    pub rows: Vec<RefineRow>,
    /// `log2` of successive error ratios.
    pub curvature_orders: Vec<f64>,
    pub area_orders: Vec<f64>,
    pub ledger_orders: Vec<f64>,
    pub ledger_totals: Vec<f64>,
}

fn orders(errors: &[Option<f64>]) -> Vec<f64> {
    errors
        .windows(2)
        .filter_map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) if b > 0.0 => Some((a / b).log2()),
            _ => None,
        })
        .collect()
}

/// Runs the scenario on grids `N, 2N, ..., 2^{levels-1} N` to `t_end` and
/// compares each level with the next finer one at the final time.
pub fn refine_study(scenario: &Scenario, base: &Path, levels: usize, seed: Option<u64>) -> Result<RefineTable, RunError> {
    if levels < 2 {
        return Err(input("a refinement study needs at least two levels"));
    }
    let n0 = match &scenario.surface {
        SurfaceSpec::Model { grid, .. } => *grid,
        SurfaceSpec::File(_) => return Err(input("refinement needs a model surface, not a surface document")),
    };
    let mut sc = scenario.clone();
    sc.flow.convergence_threshold = 0.0;
    sc.potential = false;
    sc.selberg = None;
    let sims: Vec<Simulation> = (0..levels)
        .into_par_iter()
        .map(|j| simulate(&sc, base, seed, Some(n0 << j)))
        .collect::<Result<_, _>>()?;
    let finals: Vec<_> = sims.iter().map(|s| s.trajectory.states.last().unwrap()).collect();
    let totals: Vec<Option<f64>> = sims.iter().map(|s| s.ledger.as_ref().map(|l| l.accumulated)).collect();
    let mut rows = Vec::with_capacity(levels);
    for j in 0..levels {
        let n = sims[j].surface.intervals();
        let next = (j + 1 < levels).then(|| j + 1);
        let curvature_error = next.map(|k| {
            (1..n)
                .map(|i| (finals[j].curvature[i] - finals[k].curvature[2 * i]).abs())
                .fold(0.0, f64::max)
        });
        let area_error = next.map(|k| (finals[j].area.finite_part - finals[k].area.finite_part).abs());
        let ledger_error = next.and_then(|k| Some((totals[j]? - totals[k]?).abs()));
        rows.push(RefineRow { grid_size: n, curvature_error, area_error, ledger_error });
    }
    let col = |f: fn(&RefineRow) -> Option<f64>| rows.iter().map(f).collect::<Vec<_>>();
    Ok(RefineTable {
        format_version: FORMAT_VERSION,
        curvature_orders: orders(&col(|r| r.curvature_error)),
        area_orders: orders(&col(|r| r.area_error)),
        ledger_orders: orders(&col(|r| r.ledger_error)),
        ledger_totals: totals.into_iter().flatten().collect(),
        rows,
    })
}

impl RefineTable {
    pub fn render(&self) -> String {
        let mut out = String::from("grid      curvature     area          ledger\n");
        let cell = |v: Option<f64>| v.map_or(format!("{:>14}", "-"), |x| format!("{x:>14.6e}"));
        for r in &self.rows {
            writeln!(
                out,
                "{:<8}{}{}{}",
                r.grid_size,
                cell(r.curvature_error),
                cell(r.area_error),
                cell(r.ledger_error)
            )
            .expect("writing to a string");
        }
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
        writeln!(out, "observed order (curvature): {}", list(&self.curvature_orders)).unwrap();
        writeln!(out, "observed order (area): {}", list(&self.area_orders)).unwrap();
        writeln!(out, "observed order (ledger): {}", list(&self.ledger_orders)).unwrap();
        out
    }
}
