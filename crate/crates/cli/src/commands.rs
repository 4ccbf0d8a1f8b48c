use std::fmt::Write as _;
use std::path::PathBuf;

use robcal_core::estimator::{irls, ols_estimate, robust_weights, wls_estimate, EstimationResult, IrlsOptions};
use robcal_core::io::{bundled_model, read_measurements, read_model, read_noise, write_measurements, write_noise, ModelFile, UM_PER_M};
use robcal_core::noise::NoiseModel;
use robcal_core::regressor::{stack_system, Mode, StackedSystem};
use robcal_core::simulator::{
    monte_carlo_compare, simulate_measurements, sigma_from_ols_residuals, CompareOptions, StudyDesign,
};
use robcal_core::{Error, Result};

use crate::args::{CalibrateArgs, CompareArgs, DesignArgs, EstimatorArgs, MethodArg, ModelArgs, SimulateArgs};
use crate::output::{write_all, OutputFile};
use crate::report::{render_compare, render_report, render_residuals, render_trace};

fn load_model(args: &ModelArgs) -> Result<ModelFile> {
    match &args.model {
        Some(p) => read_model(p),
        None => Ok(bundled_model()),
    }
}

fn irls_options(e: &EstimatorArgs) -> Result<IrlsOptions> {
    if !(e.sigma0 > 0.0) || !e.sigma0.is_finite() {
        return Err(Error::InvalidArgument("--sigma0 must be positive".into()));
    }
    if !(e.lambda >= 0.0) || !e.lambda.is_finite() {
        return Err(Error::InvalidArgument("--lambda must be non-negative".into()));
    }
    if e.max_iter < 1 {
        return Err(Error::InvalidArgument("--max-iter must be at least 1".into()));
    }
    if !(e.rel_tol >= 0.0) {
        return Err(Error::InvalidArgument("--rel-tol must be non-negative".into()));
    }
    Ok(IrlsOptions {
        sigma0: e.sigma0 / UM_PER_M,
        lambda: e.lambda,
        max_iter: e.max_iter,
        rel_tol: e.rel_tol,
    })
}

/// Stacked system for the model's identification targets: compliances
/// only, geometric parameters only, or both.
fn stack(mf: &ModelFile, records: &[robcal_core::ExperimentRecord], noise: &NoiseModel, floor: f64) -> Result<StackedSystem> {
    let mode = match (&mf.compliance, mf.geometric.is_empty()) {
        (Some(_), true) => Mode::Elastostatic,
        (Some(_), false) => Mode::Combined,
        (None, false) => Mode::Geometric,
        (None, true) => {
            return Err(Error::InvalidModel(
                "model declares neither [compliance] nor [identify] geometric parameters".into(),
            ))
        }
    };
    stack_system(records, &mf.model, mf.compliance.as_ref(), &mf.geometric, noise, mode, floor)
}

/// Everything `calibrate` computed, before it is written.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub system: StackedSystem,
    pub ols: EstimationResult,
    pub weighted: Option<EstimationResult>,
}

/// Runs the estimators requested by `args` on already-loaded data.
pub fn calibrate(
    mf: &ModelFile,
    records: &[robcal_core::ExperimentRecord],
    noise: Option<&NoiseModel>,
    method: MethodArg,
    opts: &IrlsOptions,
) -> Result<Calibration> {
    let system = match noise {
        Some(n) => stack(mf, records, n, opts.sigma0)?,
        None => {
            let configs = records.iter().map(|r| r.config);
            let placeholder = NoiseModel::uniform(configs, opts.sigma0);
            let sys = stack(mf, records, &placeholder, opts.sigma0)?;
            sigma_from_ols_residuals(&sys, opts.sigma0)?
        }
    };
    let ols = ols_estimate(&system)?;
    let weighted = match method {
        MethodArg::Ols => None,
        MethodArg::Wls => Some(wls_estimate(&system, &robust_weights(&system.sigma, opts.sigma0, opts.lambda)?)?),
        MethodArg::Irls => Some(irls(&system, opts)?),
    };
    Ok(Calibration { system, ols, weighted })
}

pub fn render_calibration(c: &Calibration) -> Result<Vec<OutputFile>> {
    let mut results = vec![&c.ols];
    results.extend(c.weighted.as_ref());
    let mut files = render_report(&results)?;
    let last = c.weighted.as_ref().unwrap_or(&c.ols);
    files.push(render_residuals(&c.system, last));
    if let Some(r) = c.weighted.as_ref().filter(|r| !r.iterations.is_empty()) {
        files.push(render_trace(r));
    }
    Ok(files)
}

pub fn run_calibrate(args: &CalibrateArgs) -> Result<Vec<PathBuf>> {
    let opts = irls_options(&args.estimator)?;
    let mf = load_model(&args.model)?;
    let records = read_measurements(&args.measurements, mf.model.n_joints())?;
    let noise = args.noise.as_deref().map(read_noise).transpose()?;
    let cal = calibrate(&mf, &records, noise.as_ref(), args.method, &opts)?;
    Ok(write_all(&args.out.out, &render_calibration(&cal)?)?)
}

fn design(args: &DesignArgs, mf: &ModelFile) -> Result<StudyDesign> {
    let compliance = mf
        .compliance
        .clone()
        .ok_or_else(|| Error::InvalidModel("simulation needs a [compliance] section".into()))?;
    let load_marker = mf
        .load_marker
        .ok_or_else(|| Error::InvalidModel("simulation needs `load_marker`".into()))?;
    let mut d = StudyDesign::kr270(compliance, load_marker);
    if let Some(p) = &args.noise {
        d.noise = read_noise(p)?;
    }
    d.seed = args.seed;
    d.markers = args.markers;
    d.repetitions = args.repetitions;
    if !(args.mass >= 0.0) || !args.mass.is_finite() {
        return Err(Error::InvalidArgument("--mass must be non-negative".into()));
    }
    d.load.mass_min_kg = args.mass;
    d.load.mass_max_kg = args.mass;
    d.validate(&mf.model)?;
    Ok(d)
}

/// Measurement file, the dispersions it was drawn with, and the ground truth.
pub fn render_simulation(args: &DesignArgs) -> Result<Vec<OutputFile>> {
    let mf = load_model(&args.model)?;
    let d = design(args, &mf)?;
    let records = simulate_measurements(&d, &mf.model)?;
    let mut meas = Vec::new();
    write_measurements(&mut meas, &records, mf.model.n_joints())?;
    let mut noise = Vec::new();
    write_noise(&mut noise, &d.noise)?;
    let mut truth = String::from("parameter,value\n");
    for (name, v) in d.compliance.param_names().iter().zip(d.ground_truth.values().iter()) {
        writeln!(truth, "{name},{v:e}").unwrap();
    }
    Ok(vec![
        OutputFile::new("measurements.csv", String::from_utf8(meas).expect("ASCII output")),
        OutputFile::new("noise.csv", String::from_utf8(noise).expect("ASCII output")),
        OutputFile::new("truth.csv", truth),
    ])
}

pub fn run_simulate(args: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let files = render_simulation(&args.design)?;
    Ok(write_all(&args.out.out, &files)?)
}

pub fn run_compare(args: &CompareArgs) -> Result<Vec<PathBuf>> {
    let opts = irls_options(&args.estimator)?;
    let mf = load_model(&args.design.model)?;
    let d = design(&args.design, &mf)?;
    let report = monte_carlo_compare(
        &d,
        &mf.model,
        &CompareOptions {
            trials: args.trials,
            irls: opts,
        },
    )?;
    Ok(write_all(&args.out.out, &render_compare(&report))?)
}
