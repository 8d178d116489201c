//! The five subcommands, callable without going through the binary.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;

use qtbm_core::inverse::{
    draw_starts, finite_difference_gradient_by_residuals, loss_gradient, run_starts, Observations,
    RunResult, Simulation,
};
use qtbm_core::observables::{currents, iv_curve, transmission_spectrum};
use qtbm_core::physics::sample_potential;
use qtbm_core::scalar::TANGENT_WIDTH;
use qtbm_core::solver::scattering_state;
use qtbm_core::DesignVector;

use crate::config::{ConfigError, RunConfig};
use crate::output::{number, write_atomic, Csv};

/// Failure of a command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(ConfigError),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<qtbm_core::Error> for CliError {
    fn from(e: qtbm_core::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn write_file(path: &Path, csv: &Csv) -> Result<(), CliError> {
    write_atomic(path, csv.as_str())
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn check_nonnegative(name: &str, value: f64) -> Result<(), CliError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{name} must be a nonnegative number, got {value}"
        )))
    }
}

/// Wavefunction, potential and density at every node.
pub fn wavefunction(
    config: &RunConfig,
    energy: f64,
    bias: f64,
    out: &Path,
) -> Result<(), CliError> {
    check_nonnegative("--energy", energy)?;
    check_nonnegative("--bias", bias)?;
    let pot = &config.design.potential;
    let state = scattering_state(energy, bias, pot, &config.device)?;
    let potential = sample_potential(pot, energy, bias, &config.device);
    let mut csv = Csv::new(&["x_nm", "potential_ev", "psi_re", "psi_im", "density"]);
    for (i, (psi, u)) in state.psi.iter().zip(&potential).enumerate() {
        csv.row(&[
            config.device.geometry.node(i),
            *u,
            psi.re,
            psi.im,
            psi.abs2(),
        ]);
    }
    write_file(out, &csv)
}

/// Transmission on the current-integration energy grid `[0, mu]`.
pub fn transmission(config: &RunConfig, bias: f64, out: &Path) -> Result<(), CliError> {
    check_nonnegative("--bias", bias)?;
    let spectrum = transmission_spectrum(
        bias,
        &config.design.potential,
        config.design.fermi,
        &config.device,
        config.grids.energy_points,
    )?;
    let mut csv = Csv::new(&["energy_ev", "transmission"]);
    for (e, t) in spectrum.energies.iter().zip(&spectrum.transmission) {
        csv.row(&[*e, *t]);
    }
    write_file(out, &csv)
}

/// Current at each bias, in the order given (which must be nondecreasing).
pub fn iv(config: &RunConfig, biases: &[f64], out: &Path) -> Result<(), CliError> {
    if biases.is_empty() {
        return Err(CliError::Usage("iv needs at least one --bias".into()));
    }
    for &v in biases {
        check_nonnegative("--bias", v)?;
    }
    if biases.windows(2).any(|w| w[1] < w[0]) {
        return Err(CliError::Usage(
            "--bias values must be in nondecreasing order".into(),
        ));
    }
    let curve = iv_curve(
        biases,
        &config.design.potential,
        config.design.fermi,
        &config.device,
        &config.grids,
    )?;
    let mut csv = Csv::new(&["bias_ev", "current"]);
    for (v, i) in curve.biases.iter().zip(&curve.currents) {
        csv.row(&[*v, *i]);
    }
    write_file(out, &csv)
}

fn observations(config: &RunConfig) -> Result<Observations, CliError> {
    if config.invert.targets.is_empty() {
        return Err(CliError::Config(ConfigError {
            line: None,
            message: "`invert.targets` must list at least one bias:current pair".into(),
        }));
    }
    let (biases, targets) = config.invert.targets.iter().copied().unzip();
    Observations::new(biases, targets).map_err(|e| {
        CliError::Config(ConfigError {
            line: None,
            message: e.to_string(),
        })
    })
}

/// Initial designs for `invert`: optionally the configured design, then
/// random draws.
pub fn invert_starts(config: &RunConfig, seed: u64) -> Vec<DesignVector> {
    let options = config.optimize_options();
    let inv = &config.invert;
    if inv.config_start {
        let mut starts = vec![config.design];
        starts.extend(draw_starts(inv.starts - 1, seed, &options));
        starts
    } else {
        draw_starts(inv.starts, seed, &options)
    }
}

/// Multi-start fit of the design to `invert.targets`.
///
/// Writes `result.csv`, `history.csv` and `fit_iv.csv` into `out_dir`.
pub fn invert(
    config: &RunConfig,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<RunResult, CliError> {
    let obs = observations(config)?;
    let seed = seed.unwrap_or(config.invert.seed);
    let sim = config.simulation();
    let starts = invert_starts(config, seed);
    let run = run_starts(&starts, seed, &obs, &sim, &config.optimize_options())?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut header: Vec<&str> = DesignVector::NAMES.to_vec();
    header.extend(["best_loss", "seed", "start_index"]);
    let mut result = Csv::new(&header);
    let mut cells: Vec<String> = run
        .best_params
        .to_array()
        .iter()
        .map(|&v| number(v))
        .collect();
    cells.extend([
        number(run.best_loss),
        run.seed.to_string(),
        run.start_index.to_string(),
    ]);
    result.raw_row(cells);

    let mut history = Csv::new(&["start", "iteration", "loss"]);
    for (s, outcome) in run.starts.iter().enumerate() {
        for (it, loss) in outcome.history.iter().enumerate() {
            history.raw_row([s.to_string(), it.to_string(), number(*loss)]);
        }
    }

    let best = &run.best_params;
    let fitted = currents(
        obs.biases(),
        &best.potential,
        best.fermi,
        &sim.device,
        &sim.grids,
    )?;
    let mut fit = Csv::new(&["bias_ev", "target_current", "fitted_current"]);
    for ((v, target), i) in obs.biases().iter().zip(obs.currents()).zip(&fitted) {
        fit.row(&[*v, *target, *i]);
    }

    write_file(&out_dir.join("result.csv"), &result)?;
    write_file(&out_dir.join("history.csv"), &history)?;
    write_file(&out_dir.join("fit_iv.csv"), &fit)?;
    Ok(run)
}

/// Step of the finite-difference oracle, scaled by `max(1, |phi_i|)`.
pub const GRADCHECK_STEP: f64 = 1e-7;
/// Largest accepted componentwise relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Signature of a loss-gradient implementation under test.
pub type GradientFn =
    dyn Fn(&DesignVector, &Observations, &Simulation) -> qtbm_core::Result<[f64; TANGENT_WIDTH]>;

/// Compares `gradient` at the configured design against central differences
/// of the current residuals and prints one line per component.
pub fn gradcheck_with(
    config: &RunConfig,
    gradient: &GradientFn,
    report: &mut dyn Write,
) -> Result<f64, CliError> {
    let obs = observations(config)?;
    let sim = config.simulation();
    let ad = gradient(&config.design, &obs, &sim)?;
    let fd = finite_difference_gradient_by_residuals(&config.design, &obs, &sim, GRADCHECK_STEP)?;
    let mut worst = 0.0f64;
    let io = |e: io::Error| CliError::Usage(format!("cannot write report: {e}"));
    writeln!(report, "component,ad,fd,relative_error").map_err(io)?;
    for i in 0..TANGENT_WIDTH {
        let err = relative_error(ad[i], fd[i]);
        worst = worst.max(err);
        writeln!(
            report,
            "{},{},{},{}",
            DesignVector::NAMES[i],
            number(ad[i]),
            number(fd[i]),
            number(err)
        )
        .map_err(io)?;
    }
    let verdict = if worst < GRADCHECK_TOLERANCE {
        "PASS"
    } else {
        "FAIL"
    };
    writeln!(
        report,
        "{verdict} max_relative_error={} tolerance={GRADCHECK_TOLERANCE:e}",
        number(worst)
    )
    .map_err(io)?;
    if worst < GRADCHECK_TOLERANCE {
        Ok(worst)
    } else {
        Err(CliError::Numerical(format!(
            "gradient check failed: max relative error {worst:e} >= {GRADCHECK_TOLERANCE:e}"
        )))
    }
}

/// [`gradcheck_with`] on the forward-mode loss gradient.
pub fn gradcheck(config: &RunConfig, report: &mut dyn Write) -> Result<f64, CliError> {
    gradcheck_with(config, &loss_gradient, report)
}
