//! Command-line front end for the cnoidal headway-wave library.
//!
//! Every subcommand reads its parameters from flags, optionally layered
//! over a flat TOML file given with `--config` (flags win). CSV output is
//! long-format with 17 significant digits; when written to a file it gets a
//! JSON sidecar `<file>.json` echoing the resolved configuration.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use cnoidal_core::family::{family_curves, modulus_grid, solve_m_report, FamilySolution};
use cnoidal_core::ode::{uniform_grid, IntegratorConfig};
use cnoidal_core::ov::{OvParams, RingState, DEFAULT_H_C, DEFAULT_V_MAX};
use cnoidal_core::ring::{
    asymptotic_trajectory, compare_metrics, initial_from_family, integrate_ring,
    integrate_ring_streaming,
};
use cnoidal_core::{EllipticModulus, Error};

pub const DEFAULT_CARS: usize = 100;
pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const INVALID_INPUT: i32 = 2;
    pub const NO_SOLUTION: i32 = 3;
    pub const PRECISION_LIMIT: i32 = 4;
    pub const INTEGRATOR: i32 = 5;
}

#[derive(Debug, Parser)]
#[command(
    name = "cnoidal",
    version,
    about = "Periodic cnoidal headway waves on a ring road"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the family member with the given sensitivity and count.
    Family(Flags),
    /// Tabulate sensitivity and wave speed against the modulus.
    Curves(Flags),
    /// Evaluate the asymptotic headway field on a time grid.
    Profile(Flags),
    /// Integrate the ring from the asymptotic (or uniform) initial state.
    Simulate(Flags),
    /// Simulate and compare against the asymptotic field.
    Compare(Flags),
}

/// Flags shared by all subcommands; each may also come from `--config`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Flat TOML file with any of the keys below (underscored names).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Uniform headway h.
    #[arg(long)]
    pub h: Option<f64>,
    /// Driver sensitivity â = 1/τ.
    #[arg(long = "a-sens")]
    pub a_sens: Option<f64>,
    /// Number of oscillations around the ring.
    #[arg(long)]
    pub n: Option<u32>,
    /// Number of cars N [default: 100].
    #[arg(long)]
    pub cars: Option<usize>,
    /// Maximal velocity [default: 2].
    #[arg(long)]
    pub vmax: Option<f64>,
    /// Safety distance [default: 4].
    #[arg(long)]
    pub hc: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// First sample time [default: 0].
    #[arg(long = "t-start")]
    pub t_start: Option<f64>,
    /// Last sample time.
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Sampling interval.
    #[arg(long = "t-step")]
    pub t_step: Option<f64>,
    /// Relative tolerance [default: 1e-8].
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance [default: 1e-10].
    #[arg(long)]
    pub atol: Option<f64>,
    /// Comma-separated oscillation counts, e.g. `1,3,5`.
    #[arg(long = "n-list")]
    pub n_list: Option<String>,
    /// Modulus grid `lo:hi:count`; logarithmic in 1 - m when hi > 0.999.
    #[arg(long = "m-grid")]
    pub m_grid: Option<String>,
    /// Only write this car's headway.
    #[arg(long)]
    pub car: Option<usize>,
    /// Start the simulation from the uniform state.
    #[arg(long)]
    pub uniform: Option<bool>,
    /// Compare the asymptotic field with itself instead of simulating.
    #[arg(long = "self-check")]
    pub self_check: Option<bool>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: exit::INVALID_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoSolution { .. } => exit::NO_SOLUTION,
            Error::PrecisionLimit { .. } => exit::PRECISION_LIMIT,
            Error::StepSizeUnderflow { .. }
            | Error::NonFinite { .. }
            | Error::TooManySteps { .. } => exit::INTEGRATOR,
            _ => exit::INVALID_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self {
            code: exit::IO,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

macro_rules! merge {
    ($flags:expr, $file:expr, $($field:ident),+ $(,)?) => {
        Flags { config: None, $($field: $flags.$field.clone().or($file.$field.clone())),+ }
    };
}

impl Flags {
    /// Fills unset flags from the `--config` file.
    pub fn resolve(&self) -> CliResult<Flags> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
        let file: Flags = toml::from_str(&text)
            .map_err(|e| CliError::invalid(format!("bad config {}: {e}", path.display())))?;
        Ok(merge!(
            self, file, h, a_sens, n, cars, vmax, hc, out, t_start, t_end, t_step, rtol, atol,
            n_list, m_grid, car, uniform, self_check,
        ))
    }

    fn require<T: Copy>(value: Option<T>, name: &str) -> CliResult<T> {
        value.ok_or_else(|| CliError::invalid(format!("missing required parameter --{name}")))
    }

    fn cars(&self) -> usize {
        self.cars.unwrap_or(DEFAULT_CARS)
    }

    fn road(&self, sensitivity: f64) -> CliResult<OvParams> {
        let h = Self::require(self.h, "h")?;
        Ok(OvParams::new(
            self.vmax.unwrap_or(DEFAULT_V_MAX),
            self.hc.unwrap_or(DEFAULT_H_C),
            h,
            self.cars(),
            sensitivity,
        )?)
    }

    fn solution(&self) -> CliResult<FamilySolution> {
        let a = Self::require(self.a_sens, "a-sens")?;
        let n = Self::require(self.n, "n")?;
        let road = self.road(a)?;
        let report = solve_m_report(a, n, self.cars(), &road)?;
        warn_precision(&report.solution);
        Ok(report.solution)
    }

    fn time_grid(&self) -> CliResult<Vec<f64>> {
        let t_end = Self::require(self.t_end, "t-end")?;
        let step = Self::require(self.t_step, "t-step")?;
        let start = self.t_start.unwrap_or(0.0);
        Ok(uniform_grid(start, t_end, step)?)
    }

    fn integrator(&self) -> CliResult<IntegratorConfig> {
        let mut t_samples = self.time_grid()?;
        if t_samples[0] > 0.0 {
            t_samples.insert(0, 0.0);
        }
        let cfg = IntegratorConfig {
            rtol: self.rtol.unwrap_or(DEFAULT_RTOL),
            atol: self.atol.unwrap_or(DEFAULT_ATOL),
            t_samples,
            ..IntegratorConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn warn_precision(sol: &FamilySolution) {
    if sol.precision_warning {
        eprintln!(
            "warning: 1 - m = {:e} is below 1e-13; m carries only a few significant digits",
            sol.modulus.complement()
        );
    }
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Family(f) => cmd_family(&f.resolve()?),
        Command::Curves(f) => cmd_curves(&f.resolve()?),
        Command::Profile(f) => cmd_profile(&f.resolve()?),
        Command::Simulate(f) => cmd_simulate(&f.resolve()?),
        Command::Compare(f) => cmd_compare(&f.resolve()?),
    }
}

/// 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_sidecar(flags: &Flags, command: &str, extra: serde_json::Value) -> CliResult<()> {
    let Some(out) = &flags.out else {
        return Ok(());
    };
    let mut path = out.clone().into_os_string();
    path.push(".json");
    let doc = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": flags,
        "result": extra,
    });
    let mut file = BufWriter::new(File::create(PathBuf::from(path))?);
    serde_json::to_writer_pretty(&mut file, &doc).map_err(io::Error::from)?;
    writeln!(file)?;
    Ok(())
}

fn write_json(flags: &Flags, doc: &serde_json::Value) -> CliResult<()> {
    let mut out = open_output(flags.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, doc).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// JSON record of a family member.
pub fn family_json(sol: &FamilySolution, roots: &[EllipticModulus]) -> serde_json::Value {
    json!({
        "n": sol.n,
        "N": sol.n_cars,
        "h": sol.h,
        "m": sol.modulus.modulus(),
        "m_comp": sol.modulus.complement(),
        "tau": sol.tau,
        "sensitivity": sol.sensitivity,
        "epsilon": sol.epsilon,
        "s1": sol.s1,
        "kappa": sol.kappa,
        "P": sol.half_period,
        "wave_speed": sol.wave_speed,
        "precision_warning": sol.precision_warning,
        "roots_m_comp": roots.iter().map(|r| r.complement()).collect::<Vec<_>>(),
    })
}

fn cmd_family(flags: &Flags) -> CliResult<()> {
    let a = Flags::require(flags.a_sens, "a-sens")?;
    let n = Flags::require(flags.n, "n")?;
    let road = flags.road(a)?;
    let report = solve_m_report(a, n, flags.cars(), &road)?;
    warn_precision(&report.solution);
    write_json(flags, &family_json(&report.solution, &report.roots))
}

fn parse_n_list(text: &str) -> CliResult<Vec<u32>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|e| CliError::invalid(format!("bad n-list entry '{s}': {e}")))
        })
        .collect()
}

fn parse_m_grid(text: &str) -> CliResult<Vec<EllipticModulus>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::invalid(format!("m-grid must be lo:hi:count, got '{text}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(modulus_grid(lo, hi, count)?)
}

fn cmd_curves(flags: &Flags) -> CliResult<()> {
    let n_list = parse_n_list(flags.n_list.as_deref().unwrap_or("1,3,5,10,20"))?;
    let grid = parse_m_grid(flags.m_grid.as_deref().unwrap_or("0.5:0.99999999:400"))?;
    let road = flags.road(1.0)?;
    let rows = family_curves(&n_list, &grid, flags.cars(), &road)?;

    let mut out = open_output(flags.out.as_deref())?;
    writeln!(out, "n,m,m_comp,a_sens,wave_speed,valid")?;
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            fmt_real(r.modulus.modulus()),
            fmt_real(r.modulus.complement()),
            fmt_real(r.sensitivity),
            fmt_real(r.wave_speed),
            u8::from(r.valid)
        )?;
    }
    out.flush()?;
    let valid = rows.iter().filter(|r| r.valid).count();
    write_sidecar(
        flags,
        "curves",
        json!({ "rows": rows.len(), "valid_rows": valid }),
    )
}

fn cmd_profile(flags: &Flags) -> CliResult<()> {
    let sol = flags.solution()?;
    let times = flags.time_grid()?;
    let cars = car_selection(flags, sol.n_cars)?;
    let mut out = open_output(flags.out.as_deref())?;
    writeln!(out, "t,j,headway_asym")?;
    for &t in &times {
        for &j in &cars {
            writeln!(
                out,
                "{},{j},{}",
                fmt_real(t),
                fmt_real(sol.headway_at(j as f64, t))
            )?;
        }
    }
    out.flush()?;
    write_sidecar(flags, "profile", family_json(&sol, &[]))
}

fn car_selection(flags: &Flags, n_cars: usize) -> CliResult<Vec<usize>> {
    match flags.car {
        Some(j) if j >= n_cars => Err(CliError::invalid(format!(
            "car {j} out of range for {n_cars} cars"
        ))),
        Some(j) => Ok(vec![j]),
        None => Ok((0..n_cars).collect()),
    }
}

fn cmd_simulate(flags: &Flags) -> CliResult<()> {
    let cfg = flags.integrator()?;
    let (initial, road, family) = if flags.uniform.unwrap_or(false) {
        let a = Flags::require(flags.a_sens, "a-sens")?;
        let road = flags.road(a)?;
        (RingState::uniform(0.0, road.h, road.n_cars), road, None)
    } else {
        let sol = flags.solution()?;
        (initial_from_family(&sol), sol.ov, Some(sol))
    };
    let cars = car_selection(flags, road.n_cars)?;
    let first_sample = flags.t_start.unwrap_or(0.0);

    let mut out = open_output(flags.out.as_deref())?;
    writeln!(out, "t,j,headway_num")?;
    let stats = integrate_ring_streaming(&initial, &road, &cfg, |t, headway, _| {
        if t >= first_sample {
            for &j in &cars {
                writeln!(out, "{},{j},{}", fmt_real(t), fmt_real(headway[j]))
                    .map_err(|e| Error::Degenerate(format!("write failed: {e}")))?;
            }
        }
        Ok(())
    })?;
    out.flush()?;

    let doc = json!({
        "stats": stats,
        "rtol": cfg.rtol,
        "atol": cfg.atol,
        "family": family.map(|s| family_json(&s, &[])),
    });
    if flags.out.is_some() {
        write_sidecar(flags, "simulate", doc)
    } else {
        eprintln!("{}", serde_json::to_string(&doc).map_err(io::Error::from)?);
        Ok(())
    }
}

fn cmd_compare(flags: &Flags) -> CliResult<()> {
    let sol = flags.solution()?;
    let cfg = flags.integrator()?;
    let first_sample = flags.t_start.unwrap_or(0.0);
    let mut traj = if flags.self_check.unwrap_or(false) {
        asymptotic_trajectory(&sol, &cfg)
    } else {
        integrate_ring(&initial_from_family(&sol), &sol.ov, &cfg)?
    };
    traj.samples.retain(|s| s.t >= first_sample);
    let m = compare_metrics(&traj, &sol)?;
    let doc = json!({
        "l2_rel_error": m.l2_rel_error,
        "linf_error": m.linf_error,
        "amplitude_ratio": m.amplitude_ratio,
        "phase_shift": m.phase_shift,
        "window": [m.window.0, m.window.1],
        "stats": traj.stats,
        "family": family_json(&sol, &[]),
    });
    write_json(flags, &doc)
}
