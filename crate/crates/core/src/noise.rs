//! Per-configuration, per-axis measurement-noise dispersions.

use std::collections::BTreeMap;

use nalgebra::{DVector, Vector3};

use crate::error::{Error, Result};
use crate::regressor::RowTag;

/// Dispersions for one configuration, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEntry {
    pub sigma: Vector3<f64>,
    /// Standard error of `sigma` itself, when known.
    pub uncertainty: Option<Vector3<f64>>,
}

/// Diagonal noise model keyed by configuration id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoiseModel {
    entries: BTreeMap<u32, NoiseEntry>,
}

impl NoiseModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same `sigma` on every axis of every listed configuration.
    pub fn uniform(configs: impl IntoIterator<Item = u32>, sigma: f64) -> Self {
        let mut m = Self::new();
        for c in configs {
            m.insert(c, Vector3::repeat(sigma), None);
        }
        m
    }

    pub fn insert(&mut self, config: u32, sigma: Vector3<f64>, uncertainty: Option<Vector3<f64>>) {
        self.entries.insert(config, NoiseEntry { sigma, uncertainty });
    }

    pub fn get(&self, config: u32) -> Option<&NoiseEntry> {
        self.entries.get(&config)
    }

    pub fn contains(&self, config: u32) -> bool {
        self.entries.contains_key(&config)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &NoiseEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiplies every dispersion by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(k, e)| {
                    (
                        *k,
                        NoiseEntry {
                            sigma: e.sigma * factor,
                            uncertainty: e.uncertainty.map(|u| u * factor),
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Unbiased sample standard deviation (divisor `n - 1`) about the mean.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Estimates per-axis dispersions from replicated 3-D measurements grouped
/// by configuration. Each group is differenced about its own mean; the
/// reported uncertainty is the standard error `sigma / sqrt(2 (n - 1))`.
pub fn estimate_dispersions(groups: &BTreeMap<u32, Vec<Vector3<f64>>>) -> Result<NoiseModel> {
    let mut model = NoiseModel::new();
    for (&config, reps) in groups {
        if reps.len() < 2 {
            return Err(Error::TooFewReplicates {
                group: config.to_string(),
                count: reps.len(),
            });
        }
        let mut sigma = Vector3::zeros();
        for axis in 0..3 {
            let vals: Vec<f64> = reps.iter().map(|r| r[axis]).collect();
            sigma[axis] = sample_std(&vals);
        }
        let se = sigma / (2.0 * (reps.len() as f64 - 1.0)).sqrt();
        model.insert(config, sigma, Some(se));
    }
    Ok(model)
}

/// Dispersions of per-row values (typically residuals) grouped by
/// (configuration, axis), each group pooling all markers and repetitions.
pub fn dispersions_by_config(tags: &[RowTag], values: &DVector<f64>) -> Result<NoiseModel> {
    if tags.len() != values.len() {
        return Err(Error::Dimension("row tags and values differ in length".into()));
    }
    let mut groups: BTreeMap<u32, [Vec<f64>; 3]> = BTreeMap::new();
    for (tag, v) in tags.iter().zip(values.iter()) {
        groups.entry(tag.config).or_default()[tag.axis.index()].push(*v);
    }
    let mut model = NoiseModel::new();
    for (config, axes) in groups {
        let mut sigma = Vector3::zeros();
        let mut se = Vector3::zeros();
        for (axis, vals) in axes.iter().enumerate() {
            if vals.len() < 2 {
                return Err(Error::TooFewReplicates {
                    group: format!("{config}/{}", ["x", "y", "z"][axis]),
                    count: vals.len(),
                });
            }
            sigma[axis] = sample_std(vals);
            se[axis] = sigma[axis] / (2.0 * (vals.len() as f64 - 1.0)).sqrt();
        }
        model.insert(config, sigma, Some(se));
    }
    Ok(model)
}

/// Per-row dispersion vector for the given row tags, each entry floored at
/// `floor` (the claimed instrument precision) so that it is strictly positive.
pub fn build_sigma(noise: &NoiseModel, tags: &[RowTag], floor: f64) -> Result<DVector<f64>> {
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument("sigma floor must be positive".into()));
    }
    let mut out = DVector::zeros(tags.len());
    for (i, tag) in tags.iter().enumerate() {
        let entry = noise.get(tag.config).ok_or(Error::MissingNoise(tag.config))?;
        let s = entry.sigma[tag.axis.index()];
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "dispersion for configuration {} is not a finite non-negative number",
                tag.config
            )));
        }
        out[i] = s.max(floor);
    }
    Ok(out)
}
