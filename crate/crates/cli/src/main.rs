use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use rflow_cli::runner::{self, write_atomic, RunError};
use rflow_core::determinant::{
    det_from_selberg, det_hyperbolic, selberg_zeta, CuspPrefactor, LengthSpectrum, SelbergParams,
};

#[derive(Parser)]
#[command(name = "rflow", version, about = "Normalized Ricci flow and determinant experiments")]
struct Cli {
    /// Directory for outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Seed for random initial data, overriding the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenarios (concurrently).
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
    /// Grid refinement study of a scenario.
    Refine {
        scenario: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Selberg zeta and the hyperbolic determinant from a length spectrum.
    Selberg {
        spectrum: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        chi: i32,
        #[arg(long, default_value_t = 0)]
        ncusps: u32,
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        /// The surface has no funnel ends (det Delta then uses Z'(1)).
        #[arg(long)]
        finite_area: bool,
    },
}

#[derive(Serialize)]
struct SelbergReport {
    format_version: u32,
    s: f64,
    zeta: f64,
    zeta_tail_bound: f64,
    det: f64,
    det_tail_bound: f64,
    /// `det Delta` of the hyperbolic metric.
    det_laplacian: f64,
    det_laplacian_tail_bound: f64,
}

fn selberg(path: &PathBuf, chi: i32, ncusps: u32, s: f64, finite_area: bool) -> Result<SelbergReport, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    let spectrum = LengthSpectrum::parse(&text).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    let z = selberg_zeta(&spectrum, s).map_err(|e| RunError::Input(e.to_string()))?;
    let params = SelbergParams::new(chi, ncusps);
    let d = det_from_selberg(&spectrum, &params, s).map_err(|e| RunError::Input(e.to_string()))?;
    let l = det_hyperbolic(&spectrum, &params, finite_area, CuspPrefactor::default())
        .map_err(|e| RunError::Input(e.to_string()))?;
    Ok(SelbergReport {
        format_version: runner::FORMAT_VERSION,
        s,
        zeta: z.value,
        zeta_tail_bound: z.tail_bound,
        det: d.value,
        det_tail_bound: d.tail_bound,
        det_laplacian: l.value,
        det_laplacian_tail_bound: l.tail_bound,
    })
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match &cli.command {
        Command::Run { scenarios } => {
            let out = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            let results = runner::run_batch(scenarios, &out, cli.seed);
            let mut worst: Option<RunError> = None;
            for (path, r) in scenarios.iter().zip(results) {
                match r {
                    Ok(s) => println!(
                        "{}: {} states to t = {:.4}, sup|R - C| = {:.3e}, converged = {}",
                        path.display(),
                        s.recorded_states,
                        s.final_time,
                        s.convergence.final_sup_deviation,
                        s.convergence.converged
                    ),
                    Err(e) => {
                        if scenarios.len() > 1 {
                            eprintln!("{}: {e}", path.display());
                        }
                        if worst.as_ref().map_or(true, |w| e.exit_code() > w.exit_code()) {
                            worst = Some(e);
                        }
                    }
                }
            }
            worst.map_or(Ok(()), Err)
        }
        Command::Refine { scenario, levels } => {
            let (sc, base) = runner::load_scenario(scenario)?;
            let table = runner::refine_study(&sc, &base, *levels, cli.seed)?;
            print!("{}", table.render());
            if let Some(dir) = &cli.out_dir {
                fs::create_dir_all(dir).map_err(|e| RunError::Input(format!("{}: {e}", dir.display())))?;
                let json = serde_json::to_string_pretty(&table).expect("table serializes") + "\n";
                write_atomic(&dir.join(format!("{}_refine.json", sc.name)), &json)?;
            }
            Ok(())
        }
        Command::Selberg { spectrum, chi, ncusps, s, finite_area } => {
            let r = selberg(spectrum, *chi, *ncusps, *s, *finite_area)?;
            println!("Z({}) = {:.15e} (tail bound {:.3e})", r.s, r.zeta, r.zeta_tail_bound);
            println!("det(Delta + s(s-1)) = {:.15e} (tail bound {:.3e})", r.det, r.det_tail_bound);
            println!("det Delta = {:.15e} (tail bound {:.3e})", r.det_laplacian, r.det_laplacian_tail_bound);
            if let Some(dir) = &cli.out_dir {
                fs::create_dir_all(dir).map_err(|e| RunError::Input(format!("{}: {e}", dir.display())))?;
                let json = serde_json::to_string_pretty(&r).expect("report serializes") + "\n";
                write_atomic(&dir.join("selberg.json"), &json)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
