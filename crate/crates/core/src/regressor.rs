//! Per-configuration regressors and the stacked linear identification system.

use nalgebra::{DMatrix, DVector, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::kinematics::{
    forward_kinematics, joint_jacobian, parameter_jacobian, Axis, JointVector, ManipulatorModel,
    ParamId,
};
use crate::noise::{build_sigma, NoiseModel};

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Tolerance for matching a configuration's bucketed joint angle to a level, rad.
pub const BUCKET_TOLERANCE: f64 = 1e-6;

/// External load applied at one of the model's markers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    /// Force in newtons, base frame.
    pub force: Vector3<f64>,
    /// Torque in newton-meters, base frame.
    pub torque: Vector3<f64>,
    pub application_marker: usize,
}

impl Wrench {
    pub fn force(force: Vector3<f64>, application_marker: usize) -> Self {
        Self {
            force,
            torque: Vector3::zeros(),
            application_marker,
        }
    }

    /// Pure force `(0, 0, -m g)` of a hanging mass.
    pub fn hanging_mass(mass_kg: f64, application_marker: usize) -> Self {
        Self::force(Vector3::new(0.0, 0.0, -mass_kg * STANDARD_GRAVITY), application_marker)
    }

    pub fn zero(application_marker: usize) -> Self {
        Self::force(Vector3::zeros(), application_marker)
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            force: self.force * factor,
            torque: self.torque * factor,
            application_marker: self.application_marker,
        }
    }
}

/// Assignment of compliance parameters to joints.
///
/// One joint (the second one for the KR-270 study) is modeled with a
/// separate compliance for every discrete angle it takes in the experiments;
/// each of the remaining `tail_joints` owns a single compliance.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceParameterMap {
    bucketed_joint: usize,
    levels: Vec<f64>,
    tail_joints: Vec<usize>,
}

impl ComplianceParameterMap {
    /// `bucketed_joint` and `tail_joints` are 0-based; `levels` in radians.
    pub fn new(bucketed_joint: usize, levels: Vec<f64>, tail_joints: Vec<usize>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("at least one bucket level is required".into()));
        }
        if levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("bucket levels"));
        }
        let strictly_ordered = levels.windows(2).all(|w| w[0] < w[1]) || levels.windows(2).all(|w| w[0] > w[1]);
        let distinct = levels
            .windows(2)
            .all(|w| (w[0] - w[1]).abs() > 2.0 * BUCKET_TOLERANCE);
        if !strictly_ordered || !distinct {
            return Err(Error::InvalidArgument(
                "bucket levels must be strictly ordered and pairwise distinct".into(),
            ));
        }
        if tail_joints.contains(&bucketed_joint) {
            return Err(Error::InvalidArgument(
                "bucketed joint cannot also be a tail joint".into(),
            ));
        }
        let mut seen = tail_joints.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != tail_joints.len() {
            return Err(Error::InvalidArgument("duplicate tail joint".into()));
        }
        Ok(Self {
            bucketed_joint,
            levels,
            tail_joints,
        })
    }

    pub fn bucketed_joint(&self) -> usize {
        self.bucketed_joint
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn tail_joints(&self) -> &[usize] {
        &self.tail_joints
    }

    pub fn n_params(&self) -> usize {
        self.levels.len() + self.tail_joints.len()
    }

    /// Parameter names: `k2_1`, `k2_2`, ... for the buckets, then `k3`, `k4`, ...
    pub fn param_names(&self) -> Vec<String> {
        let b = self.bucketed_joint + 1;
        (1..=self.levels.len())
            .map(|i| format!("k{b}_{i}"))
            .chain(self.tail_joints.iter().map(|j| format!("k{}", j + 1)))
            .collect()
    }

    /// Index of the bucket owning the configuration's bucketed-joint angle.
    pub fn bucket_of(&self, q: &JointVector) -> Result<usize> {
        let angle = q
            .get(self.bucketed_joint)
            .ok_or_else(|| Error::Dimension(format!("joint vector lacks joint {}", self.bucketed_joint + 1)))?;
        self.levels
            .iter()
            .position(|l| (angle - l).abs() <= BUCKET_TOLERANCE)
            .ok_or(Error::NoBucket {
                q2_deg: angle.to_degrees(),
            })
    }

    fn check_model(&self, model: &ManipulatorModel) -> Result<()> {
        let n = model.n_joints();
        if self.bucketed_joint >= n || self.tail_joints.iter().any(|&j| j >= n) {
            return Err(Error::Dimension(format!(
                "compliance map refers to joints beyond the model's {n}"
            )));
        }
        Ok(())
    }
}

/// One measurement of one marker at one configuration and repetition.
/// Positions are in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub config: u32,
    pub marker: usize,
    pub repetition: u32,
    pub q: JointVector,
    pub wrench: Wrench,
    /// Unloaded position.
    pub p0: Vector3<f64>,
    /// Loaded position.
    pub p: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowTag {
    pub config: u32,
    pub marker: usize,
    pub repetition: u32,
    pub axis: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Observation `p0 - FK(q)`, unknowns are geometric errors.
    Geometric,
    /// Observation `p - p0`, unknowns are compliances.
    Elastostatic,
    /// Observation `p - FK(q)`, unknowns are `[geometric errors, compliances]`.
    Combined,
}

/// The aggregated linear system `dp = B X + noise`, one row per scalar equation.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSystem {
    pub b: DMatrix<f64>,
    pub dp: DVector<f64>,
    pub sigma: DVector<f64>,
    pub row_tags: Vec<RowTag>,
    pub param_names: Vec<String>,
}

impl StackedSystem {
    pub fn new(
        b: DMatrix<f64>,
        dp: DVector<f64>,
        sigma: DVector<f64>,
        row_tags: Vec<RowTag>,
        param_names: Vec<String>,
    ) -> Result<Self> {
        let rows = b.nrows();
        if dp.len() != rows || sigma.len() != rows || row_tags.len() != rows {
            return Err(Error::Dimension(format!(
                "B has {rows} rows, dp {}, sigma {}, tags {}",
                dp.len(),
                sigma.len(),
                row_tags.len()
            )));
        }
        if param_names.len() != b.ncols() {
            return Err(Error::Dimension(format!(
                "B has {} columns but {} parameter names",
                b.ncols(),
                param_names.len()
            )));
        }
        if sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("sigma entries must be positive and finite".into()));
        }
        Ok(Self {
            b,
            dp,
            sigma,
            row_tags,
            param_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.b.ncols()
    }

    /// Same system with the given per-row dispersions.
    pub fn with_sigma(&self, sigma: DVector<f64>) -> Result<Self> {
        Self::new(
            self.b.clone(),
            self.dp.clone(),
            sigma,
            self.row_tags.clone(),
            self.param_names.clone(),
        )
    }

    /// Rows reordered so that row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_rows() {
            return Err(Error::Dimension("permutation length".into()));
        }
        let b = DMatrix::from_fn(self.n_rows(), self.n_params(), |r, c| self.b[(order[r], c)]);
        let dp = DVector::from_fn(self.n_rows(), |r, _| self.dp[order[r]]);
        let sigma = DVector::from_fn(self.n_rows(), |r, _| self.sigma[order[r]]);
        let tags = order.iter().map(|&i| self.row_tags[i]).collect();
        Self::new(b, dp, sigma, tags, self.param_names.clone())
    }
}

/// 3×n_k compliance regressor: `A k` is the deflection of `marker` under `wrench`.
///
/// The column of a compliant joint `j` is `Jp_j (J_j · w)`, where `J_j · w` is
/// the torque about joint `j` produced by the wrench at its application
/// marker and `Jp_j` the position rows of the measured marker's Jacobian.
pub fn elastostatic_regressor(
    model: &ManipulatorModel,
    q: &JointVector,
    wrench: &Wrench,
    cmap: &ComplianceParameterMap,
    marker: usize,
) -> Result<DMatrix<f64>> {
    cmap.check_model(model)?;
    let bucket = cmap.bucket_of(q)?;
    if !wrench.as_vector().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("wrench"));
    }
    let j_meas = joint_jacobian(model, q, marker)?;
    let j_app = if wrench.application_marker == marker {
        j_meas.clone()
    } else {
        joint_jacobian(model, q, wrench.application_marker)?
    };
    let w = wrench.as_vector();
    let column = |joint: usize| -> Vector3<f64> {
        let torque = j_app.fixed_view::<6, 1>(0, joint).dot(&w);
        j_meas.fixed_view::<3, 1>(0, joint) * torque
    };
    let mut a = DMatrix::zeros(3, cmap.n_params());
    a.fixed_view_mut::<3, 1>(0, bucket)
        .copy_from(&column(cmap.bucketed_joint));
    let offset = cmap.levels.len();
    for (i, &joint) in cmap.tail_joints.iter().enumerate() {
        a.fixed_view_mut::<3, 1>(0, offset + i).copy_from(&column(joint));
    }
    Ok(a)
}

/// 3×|selection| geometric regressor; rows are x, y, z of the base frame.
pub fn geometric_regressor(
    model: &ManipulatorModel,
    q: &JointVector,
    marker: usize,
    selection: &[ParamId],
) -> Result<DMatrix<f64>> {
    parameter_jacobian(model, q, marker, selection)
}

/// Stacks all records into one linear system. Rows follow the input record
/// order, three per record (x, y, z). `sigma_floor` is applied to the noise
/// dispersions (see [`build_sigma`]).
pub fn stack_system(
    records: &[ExperimentRecord],
    model: &ManipulatorModel,
    cmap: Option<&ComplianceParameterMap>,
    geometric: &[ParamId],
    noise: &NoiseModel,
    mode: Mode,
    sigma_floor: f64,
) -> Result<StackedSystem> {
    let use_geo = matches!(mode, Mode::Geometric | Mode::Combined);
    let use_k = matches!(mode, Mode::Elastostatic | Mode::Combined);
    if use_geo && geometric.is_empty() {
        return Err(Error::EmptySelection);
    }
    let cmap = match (use_k, cmap) {
        (true, None) => {
            return Err(Error::InvalidArgument(
                "elastostatic identification requires a compliance map".into(),
            ))
        }
        (_, c) => c,
    };
    let n_geo = if use_geo { geometric.len() } else { 0 };
    let n_k = if use_k { cmap.map_or(0, |c| c.n_params()) } else { 0 };
    let n_params = n_geo + n_k;
    let n_rows = 3 * records.len();
    if records.is_empty() || n_rows < n_params {
        return Err(Error::Underdetermined {
            rows: n_rows,
            params: n_params,
        });
    }

    let mut b = DMatrix::zeros(n_rows, n_params);
    let mut dp = DVector::zeros(n_rows);
    let mut tags = Vec::with_capacity(n_rows);
    for (i, rec) in records.iter().enumerate() {
        if rec.q.len() != model.n_joints() {
            return Err(Error::Dimension(format!(
                "record {} (config {}) has {} joint values, model has {}",
                i + 1,
                rec.config,
                rec.q.len(),
                model.n_joints()
            )));
        }
        if !noise.contains(rec.config) {
            return Err(Error::MissingNoise(rec.config));
        }
        let row = 3 * i;
        let obs = match mode {
            Mode::Elastostatic => rec.p - rec.p0,
            Mode::Geometric => rec.p0 - forward_kinematics(model, &rec.q, rec.marker)?.position,
            Mode::Combined => rec.p - forward_kinematics(model, &rec.q, rec.marker)?.position,
        };
        if !obs.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        dp.fixed_rows_mut::<3>(row).copy_from(&obs);
        if use_geo {
            let g = geometric_regressor(model, &rec.q, rec.marker, geometric)?;
            b.view_mut((row, 0), (3, n_geo)).copy_from(&g);
        }
        if let (true, Some(cmap)) = (use_k, cmap) {
            let a = elastostatic_regressor(model, &rec.q, &rec.wrench, cmap, rec.marker)?;
            b.view_mut((row, n_geo), (3, n_k)).copy_from(&a);
        }
        for axis in Axis::ALL {
            tags.push(RowTag {
                config: rec.config,
                marker: rec.marker,
                repetition: rec.repetition,
                axis,
            });
        }
    }
    let sigma = build_sigma(noise, &tags, sigma_floor)?;
    let mut names: Vec<String> = if use_geo {
        geometric.iter().map(|p| p.to_string()).collect()
    } else {
        Vec::new()
    };
    if let (true, Some(cmap)) = (use_k, cmap) {
        names.extend(cmap.param_names());
    }
    StackedSystem::new(b, dp, sigma, tags, names)
}
