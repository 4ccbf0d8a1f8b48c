//! Synthetic elastostatic calibration experiments with known ground truth.
//!
//! The default study mirrors the KR-270 experiment: fifteen measurement
//! configurations in five groups sharing the same q2, three markers, six
//! repetitions and a 265 kg hanging load, with per-configuration noise
//! dispersions taken from the measured laser-tracker data.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::estimator::{
    irls, ols_estimate, optimal_weights, robust_weights, wls_estimate, EstimationResult, IrlsOptions,
};
use crate::kinematics::{forward_kinematics, parameter_jacobian, JointVector, ManipulatorModel, ParamId};
use crate::noise::{build_sigma, dispersions_by_config, NoiseModel};
use crate::regressor::{
    elastostatic_regressor, stack_system, ComplianceParameterMap, ExperimentRecord, Mode, StackedSystem, Wrench,
};

/// Measurement configurations, joint angles in degrees.
pub const KR270_CONFIGURATIONS_DEG: [[f64; 6]; 15] = [
    [79.20, -0.01, -5.57, 51.00, -97.52, -91.67],
    [63.00, -0.01, -12.22, -56.49, 41.42, 150.55],
    [63.00, -0.01, -47.98, -70.04, -61.55, 177.16],
    [95.00, -25.24, 33.00, 129.69, -98.10, 90.57],
    [95.00, -25.24, -107.01, 109.95, -61.19, 174.21],
    [105.00, -25.24, 14.30, 55.21, 41.26, -152.97],
    [56.60, -56.9, 44.54, -55.11, 41.90, 152.06],
    [56.60, -56.9, 64.73, -129.65, -98.260, -90.55],
    [144.80, -56.9, 104.49, -69.41, 61.67, -6.33],
    [-41.00, -99.85, -91.68, 55.12, 41.53, -152.48],
    [-143.00, -99.85, -32.64, 110.31, -61.47, -6.29],
    [-143.00, -99.85, -72.01, 129.65, -98.09, 90.82],
    [133.00, -140.0, 147.68, 129.64, -97.90, 90.99],
    [-60.00, -140.0, 7.59, -110.09, -61.36, -174.09],
    [-60.00, -140.0, -52.00, -124.89, -41.62, 27.78],
];

/// Deflection noise per configuration, micrometers:
/// `[σx, std(σx), σy, std(σy), σz, std(σz)]`.
pub const KR270_NOISE_UM: [[f64; 6]; 15] = [
    [150.0, 1.0, 64.0, 1.0, 33.0, 1.0],
    [57.0, 4.0, 86.0, 8.0, 118.0, 15.0],
    [97.0, 9.0, 70.0, 5.0, 44.0, 8.0],
    [28.0, 1.0, 19.0, 1.0, 35.0, 1.0],
    [72.0, 3.0, 48.0, 4.0, 17.0, 1.0],
    [153.0, 8.0, 46.0, 3.0, 22.0, 1.0],
    [112.0, 6.0, 66.0, 3.0, 53.0, 4.0],
    [74.0, 5.0, 55.0, 3.0, 59.0, 1.0],
    [80.0, 9.0, 63.0, 7.0, 102.0, 15.0],
    [69.0, 2.0, 73.0, 1.0, 79.0, 1.0],
    [80.0, 3.0, 36.0, 1.0, 26.0, 3.0],
    [53.0, 4.0, 39.0, 1.0, 29.0, 1.0],
    [26.0, 1.0, 29.0, 1.0, 29.0, 1.0],
    [88.0, 4.0, 121.0, 1.0, 42.0, 1.0],
    [90.0, 6.0, 52.0, 3.0, 50.0, 1.0],
];

/// Reference compliances `k2_1..k2_5, k3..k6` in 1e-6 rad/(N·m).
pub const KR270_COMPLIANCES: [f64; 9] = [0.287, 0.277, 0.302, 0.293, 0.246, 0.416, 2.786, 3.483, 2.074];

/// Compliances are reported in 1e-6 rad/(N·m); this many report units make
/// one rad/(N·m). Conversions divide or multiply by it so they stay exact.
pub const REPORT_UNITS_PER_COMPLIANCE: f64 = 1e6;

pub fn kr270_configurations() -> Vec<JointVector> {
    KR270_CONFIGURATIONS_DEG
        .iter()
        .map(|row| JointVector::from_degrees(row))
        .collect()
}

pub fn kr270_noise() -> NoiseModel {
    let mut m = NoiseModel::new();
    for (i, r) in KR270_NOISE_UM.iter().enumerate() {
        m.insert(
            i as u32 + 1,
            Vector3::new(r[0], r[2], r[4]) / 1e6,
            Some(Vector3::new(r[1], r[3], r[5]) / 1e6),
        );
    }
    m
}

/// Joint compliances in rad/(N·m); all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceVector(DVector<f64>);

impl ComplianceVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("compliances must be positive and finite".into()));
        }
        Ok(Self(values))
    }

    pub fn from_report_units(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_iterator(
            values.len(),
            values.iter().map(|v| v / REPORT_UNITS_PER_COMPLIANCE),
        ))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn to_report_units(&self) -> DVector<f64> {
        &self.0 * REPORT_UNITS_PER_COMPLIANCE
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Hanging load; the mass of each (configuration, repetition) is drawn
/// uniformly from `[mass_min_kg, mass_max_kg]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSpec {
    pub mass_min_kg: f64,
    pub mass_max_kg: f64,
    pub attachment_marker: usize,
}

/// Gross-error injection: with probability `fraction` a loaded measurement
/// gets its noise multiplied by `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contamination {
    pub fraction: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyDesign {
    pub configurations: Vec<JointVector>,
    /// Number of model markers observed (markers `0..markers`).
    pub markers: usize,
    pub repetitions: usize,
    pub load: LoadSpec,
    /// Dispersion of the measured deflection `p - p0`, keyed by 1-based
    /// configuration index.
    pub noise: NoiseModel,
    pub compliance: ComplianceParameterMap,
    pub ground_truth: ComplianceVector,
    /// Geometric errors added to the nominal model (linearized).
    pub geometric_errors: Vec<(ParamId, f64)>,
    pub contamination: Option<Contamination>,
    pub seed: u64,
}

impl StudyDesign {
    /// The KR-270 study: 15 configurations, 3 markers, 6 repetitions, 265 kg
    /// hanging from `load_marker`.
    pub fn kr270(compliance: ComplianceParameterMap, load_marker: usize) -> Self {
        Self {
            configurations: kr270_configurations(),
            markers: 3,
            repetitions: 6,
            load: LoadSpec {
                mass_min_kg: 265.0,
                mass_max_kg: 265.0,
                attachment_marker: load_marker,
            },
            noise: kr270_noise(),
            compliance,
            ground_truth: ComplianceVector::from_report_units(&KR270_COMPLIANCES).expect("positive"),
            geometric_errors: Vec::new(),
            contamination: None,
            seed: 0,
        }
    }

    pub fn config_ids(&self) -> impl Iterator<Item = u32> {
        1..=self.configurations.len() as u32
    }

    pub fn n_records(&self) -> usize {
        self.configurations.len() * self.markers * self.repetitions
    }

    pub fn validate(&self, model: &ManipulatorModel) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.configurations.is_empty() || self.markers == 0 || self.repetitions == 0 {
            return bad("configuration, marker and repetition counts must be at least 1");
        }
        if self.markers > model.n_markers() {
            return bad("design observes more markers than the model defines");
        }
        if self.load.attachment_marker >= model.n_markers() {
            return bad("load attachment marker is not defined by the model");
        }
        let LoadSpec {
            mass_min_kg: lo,
            mass_max_kg: hi,
            ..
        } = self.load;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return bad("load mass range must satisfy 0 <= min <= max");
        }
        if self.ground_truth.len() != self.compliance.n_params() {
            return bad("ground truth length differs from the compliance map");
        }
        for c in self.config_ids() {
            if !self.noise.contains(c) {
                return Err(Error::MissingNoise(c));
            }
        }
        if let Some(c) = self.contamination {
            if !(0.0..=1.0).contains(&c.fraction) || !(c.scale >= 0.0) {
                return bad("contamination fraction must be in [0, 1] and scale non-negative");
            }
        }
        for &(p, v) in &self.geometric_errors {
            model.check_param(p)?;
            if !v.is_finite() {
                return Err(Error::NonFinite("geometric error"));
            }
        }
        for q in &self.configurations {
            self.compliance.bucket_of(q)?;
        }
        Ok(())
    }
}

/// Simulated records for `design`; deterministic in `design.seed`.
pub fn simulate_measurements(design: &StudyDesign, model: &ManipulatorModel) -> Result<Vec<ExperimentRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    simulate_with_rng(design, model, &mut rng)
}

/// Random stream used for Monte Carlo trial `trial`: the design seed selects
/// the key and the trial index selects the ChaCha stream.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Loaded and unloaded positions each carry independent Gaussian noise of
/// dispersion `σ / √2`, so the observed deflection `p - p0` has dispersion `σ`.
pub fn simulate_with_rng<R: Rng>(
    design: &StudyDesign,
    model: &ManipulatorModel,
    rng: &mut R,
) -> Result<Vec<ExperimentRecord>> {
    design.validate(model)?;
    let k = design.ground_truth.values();
    let (geo_ids, geo_vals): (Vec<ParamId>, Vec<f64>) = design.geometric_errors.iter().copied().unzip();
    let geo_vals = DVector::from_vec(geo_vals);
    let load = design.load;
    let mut out = Vec::with_capacity(design.n_records());

    for (ci, q) in design.configurations.iter().enumerate() {
        let config = ci as u32 + 1;
        let noise = design.noise.get(config).ok_or(Error::MissingNoise(config))?;
        let half = noise.sigma / std::f64::consts::SQRT_2;
        // deflection per kilogram and nominal position of each marker
        let unit = Wrench::hanging_mass(1.0, load.attachment_marker);
        let per_marker = (0..design.markers)
            .map(|m| -> Result<(Vector3<f64>, Vector3<f64>)> {
                let mut nominal = forward_kinematics(model, q, m)?.position;
                if !geo_ids.is_empty() {
                    let j: DMatrix<f64> = parameter_jacobian(model, q, m, &geo_ids)?;
                    nominal += j * &geo_vals;
                }
                let a = elastostatic_regressor(model, q, &unit, &design.compliance, m)?;
                Ok((nominal, Vector3::from_iterator((a * k).iter().copied())))
            })
            .collect::<Result<Vec<_>>>()?;

        for rep in 1..=design.repetitions as u32 {
            let mass = if load.mass_max_kg > load.mass_min_kg {
                rng.random_range(load.mass_min_kg..=load.mass_max_kg)
            } else {
                load.mass_min_kg
            };
            for (m, (nominal, defl_per_kg)) in per_marker.iter().enumerate() {
                let n0 = gaussian3(rng).component_mul(&half);
                let mut n1 = gaussian3(rng).component_mul(&half);
                if let Some(c) = design.contamination {
                    if rng.random::<f64>() < c.fraction {
                        n1 *= c.scale;
                    }
                }
                out.push(ExperimentRecord {
                    config,
                    marker: m,
                    repetition: rep,
                    q: q.clone(),
                    wrench: Wrench::hanging_mass(mass, load.attachment_marker),
                    p0: nominal + n0,
                    p: nominal + defl_per_kg * mass + n1,
                });
            }
        }
    }
    Ok(out)
}

fn gaussian3<R: Rng>(rng: &mut R) -> Vector3<f64> {
    Vector3::new(
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    )
}

/// Elastostatic system for simulated records, with `Σ` from the design noise.
pub fn stack_design(design: &StudyDesign, model: &ManipulatorModel, records: &[ExperimentRecord], sigma_floor: f64) -> Result<StackedSystem> {
    stack_system(
        records,
        model,
        Some(&design.compliance),
        &[],
        &design.noise,
        Mode::Elastostatic,
        sigma_floor,
    )
}

/// Replaces the system's dispersions by (configuration, axis) dispersions of
/// the unweighted fit's residuals, floored at `sigma0`.
pub fn sigma_from_ols_residuals(sys: &StackedSystem, sigma0: f64) -> Result<StackedSystem> {
    let ols = ols_estimate(sys)?;
    let noise = dispersions_by_config(&sys.row_tags, &ols.residuals)?;
    sys.with_sigma(build_sigma(&noise, &sys.row_tags, sigma0)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub trials: usize,
    pub irls: IrlsOptions,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            irls: IrlsOptions::default(),
        }
    }
}

/// Estimate and analytic ±3σ half-widths of one method in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub x_hat: DVector<f64>,
    pub ci3: DVector<f64>,
    pub cov_trace: f64,
}

impl From<&EstimationResult> for MethodOutcome {
    fn from(r: &EstimationResult) -> Self {
        Self {
            x_hat: r.x_hat.clone(),
            ci3: r.ci3.clone(),
            cov_trace: r.covariance.trace(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub ols: MethodOutcome,
    /// Single pass with robust weights from the design dispersions.
    pub wls: MethodOutcome,
    /// Single pass with `W Σ = I` (up to scale) from the design dispersions.
    pub wls_optimal: MethodOutcome,
    /// Reweighting loop started from the unweighted fit's residual dispersions.
    pub irls: MethodOutcome,
    /// Per-pass `(x̂, ci3)` of the reweighting loop.
    pub irls_trace: Vec<(DVector<f64>, DVector<f64>)>,
    pub irls_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    pub mean: DVector<f64>,
    pub empirical_std: DVector<f64>,
    pub empirical_cov: DMatrix<f64>,
    pub mean_ci3: DVector<f64>,
    pub mean_analytic_cov_trace: f64,
}

impl MethodStats {
    fn collect<'a>(outcomes: impl Iterator<Item = &'a MethodOutcome> + Clone) -> Self {
        let n = outcomes.clone().count() as f64;
        let dim = outcomes.clone().next().map_or(0, |o| o.x_hat.len());
        let mut mean = DVector::zeros(dim);
        let mut mean_ci3 = DVector::zeros(dim);
        let mut trace = 0.0;
        for o in outcomes.clone() {
            mean += &o.x_hat;
            mean_ci3 += &o.ci3;
            trace += o.cov_trace;
        }
        mean /= n;
        mean_ci3 /= n;
        let mut cov = DMatrix::zeros(dim, dim);
        for o in outcomes {
            let d = &o.x_hat - &mean;
            cov += &d * d.transpose();
        }
        cov /= n - 1.0;
        Self {
            empirical_std: cov.diagonal().map(f64::sqrt),
            empirical_cov: cov,
            mean,
            mean_ci3,
            mean_analytic_cov_trace: trace / n,
        }
    }

    pub fn empirical_cov_trace(&self) -> f64 {
        self.empirical_cov.trace()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub param_names: Vec<String>,
    pub truth: DVector<f64>,
    pub trials: usize,
    pub failures: Vec<(usize, String)>,
    pub ols: MethodStats,
    pub wls: MethodStats,
    pub wls_optimal: MethodStats,
    pub irls: MethodStats,
    /// Mean OLS ±3σ over mean WLS ±3σ, per parameter.
    pub ci_ratio_wls: DVector<f64>,
    pub ci_ratio_irls: DVector<f64>,
    /// Fraction of trials whose WLS interval lies inside the OLS interval.
    pub nested_fraction_wls: DVector<f64>,
    pub nested_fraction_irls: DVector<f64>,
    /// Per pass: mean x̂ and mean ±3σ over trials (trials that stopped
    /// earlier contribute their final pass).
    pub irls_mean_trace: Vec<(DVector<f64>, DVector<f64>)>,
    pub outcomes: Vec<TrialOutcome>,
}

fn run_trial(
    design: &StudyDesign,
    model: &ManipulatorModel,
    opts: &CompareOptions,
    trial: usize,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(design.seed, trial);
    let records = simulate_with_rng(design, model, &mut rng)?;
    let sigma0 = opts.irls.sigma0;
    let sys = stack_design(design, model, &records, sigma0)?;
    let ols = ols_estimate(&sys)?;
    let wls = wls_estimate(&sys, &robust_weights(&sys.sigma, sigma0, opts.irls.lambda)?)?;
    let wls_opt = wls_estimate(&sys, &optimal_weights(&sys.sigma, sigma0)?)?;
    let noise = dispersions_by_config(&sys.row_tags, &ols.residuals)?;
    let start = sys.with_sigma(build_sigma(&noise, &sys.row_tags, sigma0)?)?;
    let rw = irls(&start, &opts.irls)?;
    Ok(TrialOutcome {
        trial,
        ols: (&ols).into(),
        wls: (&wls).into(),
        wls_optimal: (&wls_opt).into(),
        irls: (&rw).into(),
        irls_trace: rw.iterations.iter().map(|it| (it.x_hat.clone(), it.ci3.clone())).collect(),
        irls_converged: rw.converged,
    })
}

fn nested(inner: &MethodOutcome, outer: &MethodOutcome, i: usize) -> bool {
    inner.x_hat[i] - inner.ci3[i] >= outer.x_hat[i] - outer.ci3[i]
        && inner.x_hat[i] + inner.ci3[i] <= outer.x_hat[i] + outer.ci3[i]
}

/// Runs OLS, single-pass WLS and IRLS on `opts.trials` independent noise
/// draws of the study and summarizes their spread against the analytic
/// covariances. Individual trial failures are recorded; more than 5% fails
/// the whole comparison.
pub fn monte_carlo_compare(design: &StudyDesign, model: &ManipulatorModel, opts: &CompareOptions) -> Result<CompareReport> {
    if opts.trials < 100 {
        return Err(Error::InvalidArgument("at least 100 trials are required".into()));
    }
    design.validate(model)?;

    #[cfg(feature = "parallel")]
    let results: Vec<Result<TrialOutcome>> = {
        use rayon::prelude::*;
        (0..opts.trials)
            .into_par_iter()
            .map(|t| run_trial(design, model, opts, t))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<TrialOutcome>> = (0..opts.trials).map(|t| run_trial(design, model, opts, t)).collect();

    let mut outcomes = Vec::with_capacity(opts.trials);
    let mut failures = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push((t, e.to_string())),
        }
    }
    if failures.len() * 20 > opts.trials {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            trials: opts.trials,
            first: failures[0].1.clone(),
        });
    }

    let ols = MethodStats::collect(outcomes.iter().map(|o| &o.ols));
    let wls = MethodStats::collect(outcomes.iter().map(|o| &o.wls));
    let wls_optimal = MethodStats::collect(outcomes.iter().map(|o| &o.wls_optimal));
    let irls_stats = MethodStats::collect(outcomes.iter().map(|o| &o.irls));
    let n = design.compliance.n_params();
    let frac = |pick: fn(&TrialOutcome) -> &MethodOutcome| {
        DVector::from_fn(n, |i, _| {
            outcomes.iter().filter(|o| nested(pick(o), &o.ols, i)).count() as f64 / outcomes.len() as f64
        })
    };
    let nested_fraction_wls = frac(|o| &o.wls);
    let nested_fraction_irls = frac(|o| &o.irls);

    let passes = outcomes.iter().map(|o| o.irls_trace.len()).max().unwrap_or(0);
    let irls_mean_trace = (0..passes)
        .map(|k| {
            let mut x = DVector::zeros(n);
            let mut ci = DVector::zeros(n);
            for o in &outcomes {
                let (xk, cik) = &o.irls_trace[k.min(o.irls_trace.len() - 1)];
                x += xk;
                ci += cik;
            }
            let m = outcomes.len() as f64;
            (x / m, ci / m)
        })
        .collect();

    Ok(CompareReport {
        param_names: design.compliance.param_names(),
        truth: design.ground_truth.values().clone(),
        trials: opts.trials,
        failures,
        ci_ratio_wls: ols.mean_ci3.component_div(&wls.mean_ci3),
        ci_ratio_irls: ols.mean_ci3.component_div(&irls_stats.mean_ci3),
        ols,
        wls,
        wls_optimal,
        irls: irls_stats,
        nested_fraction_wls,
        nested_fraction_irls,
        irls_mean_trace,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::bundled_model;

    fn setup() -> (ManipulatorModel, StudyDesign) {
        let mf = bundled_model();
        let design = StudyDesign::kr270(mf.compliance.unwrap(), mf.load_marker.unwrap());
        (mf.model, design)
    }

    #[test]
    fn default_design_counts() {
        let (model, design) = setup();
        let recs = simulate_measurements(&design, &model).unwrap();
        assert_eq!(recs.len(), 270);
        let sys = stack_design(&design, &model, &recs, 10e-6).unwrap();
        assert_eq!((sys.n_rows(), sys.n_params()), (810, 9));
    }

    #[test]
    fn zero_noise_zero_load() {
        let (model, mut design) = setup();
        design.noise = design.noise.scaled(0.0);
        design.load.mass_min_kg = 0.0;
        design.load.mass_max_kg = 0.0;
        for r in simulate_measurements(&design, &model).unwrap() {
            assert_eq!(r.p, r.p0);
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        let (model, mut design) = setup();
        design.seed = 7;
        let a = simulate_measurements(&design, &model).unwrap();
        let b = simulate_measurements(&design, &model).unwrap();
        assert_eq!(a, b);
        design.seed = 8;
        assert_ne!(a, simulate_measurements(&design, &model).unwrap());
    }

    #[test]
    fn design_validation() {
        let (model, design) = setup();
        let mut d = design.clone();
        d.markers = 5;
        assert!(d.validate(&model).is_err());
        let mut d = design.clone();
        d.repetitions = 0;
        assert!(d.validate(&model).is_err());
        let mut d = design.clone();
        d.noise = NoiseModel::uniform(1..=14, 1e-5);
        assert!(matches!(d.validate(&model), Err(Error::MissingNoise(15))));
        let mut d = design;
        d.configurations[0] = JointVector::from_degrees(&[0.0, 10.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(d.validate(&model), Err(Error::NoBucket { .. })));
        assert!(ComplianceVector::from_report_units(&[0.1, 0.0]).is_err());
    }

    #[test]
    fn too_few_trials() {
        let (model, design) = setup();
        let opts = CompareOptions {
            trials: 10,
            ..Default::default()
        };
        assert!(monte_carlo_compare(&design, &model, &opts).is_err());
    }
}
