//! Text file formats.
//!
//! * Model files are TOML (see `data/kr270_like.toml` for a complete example).
//!   Lengths are meters and angles are degrees.
//! * Measurement files are CSV with a header line. Columns, in order:
//!   `config,marker,repetition,q1_deg..qN_deg,fx_n,fy_n,fz_n,load_marker,
//!   p0x_um,p0y_um,p0z_um,px_um,py_um,pz_um`. Markers are 1-based.
//! * Noise files are CSV: `config,sigma_x_um,sigma_y_um,sigma_z_um`, with
//!   optional `std_x_um,std_y_um,std_z_um` uncertainty columns.
//!
//! Every reader converts to SI on ingestion and every writer converts back.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kinematics::{Joint, JointKind, JointVector, ManipulatorModel, ParamId};
use crate::noise::NoiseModel;
use crate::regressor::{ComplianceParameterMap, ExperimentRecord, Wrench};

/// Micrometers per meter. Conversions multiply or divide by this exact
/// constant so that each is a single correctly rounded operation.
pub const UM_PER_M: f64 = 1e6;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    #[serde(default)]
    translation: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}

impl RawFrame {
    fn to_isometry(&self) -> Isometry3<f64> {
        let [r, p, y] = self.rpy.map(f64::to_radians);
        Isometry3::from_parts(
            Translation3::new(self.translation[0], self.translation[1], self.translation[2]),
            UnitQuaternion::from_euler_angles(r, p, y),
        )
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    #[serde(rename = "type")]
    kind: String,
    a: f64,
    alpha: f64,
    d: f64,
    theta_offset: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompliance {
    bucketed_joint: usize,
    levels: Vec<f64>,
    tail_joints: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIdentify {
    #[serde(default)]
    geometric: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    name: Option<String>,
    base: Option<RawFrame>,
    tool: Option<RawFrame>,
    joints: Vec<RawJoint>,
    markers: Vec<[f64; 3]>,
    #[serde(default)]
    load_marker: Option<usize>,
    compliance: Option<RawCompliance>,
    identify: Option<RawIdentify>,
}

/// Contents of a model file.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub name: Option<String>,
    pub model: ManipulatorModel,
    pub compliance: Option<ComplianceParameterMap>,
    pub geometric: Vec<ParamId>,
    /// 0-based marker index where the load hangs, if declared.
    pub load_marker: Option<usize>,
}

/// The bundled KR-270-like model.
pub const BUNDLED_MODEL: &str = include_str!("../data/kr270_like.toml");

pub fn parse_model(text: &str, origin: &str) -> Result<ModelFile> {
    let raw: RawModel = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start].lines().count().max(1) as u64)
            .unwrap_or(0);
        Error::Parse {
            path: origin.to_string(),
            line,
            message: e.message().to_string(),
        }
    })?;
    let invalid = |msg: String| Error::InvalidModel(format!("{origin}: {msg}"));
    let joints = raw
        .joints
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let kind = match j.kind.as_str() {
                "revolute" => JointKind::Revolute,
                "prismatic" => JointKind::Prismatic,
                other => return Err(invalid(format!("joint {}: unknown type `{other}`", i + 1))),
            };
            Ok(Joint {
                kind,
                a: j.a,
                alpha: j.alpha.to_radians(),
                d: j.d,
                theta_offset: j.theta_offset.to_radians(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let base = raw.base.as_ref().map_or(Isometry3::identity(), RawFrame::to_isometry);
    let tool = raw.tool.as_ref().map_or(Isometry3::identity(), RawFrame::to_isometry);
    let markers = raw.markers.iter().map(|m| Vector3::from(*m)).collect();
    let model = ManipulatorModel::new(joints, base, tool, markers)?;

    let one_based = |i: usize, what: &str, count: usize| -> Result<usize> {
        if i == 0 || i > count {
            Err(invalid(format!("{what} index {i} out of range 1..={count}")))
        } else {
            Ok(i - 1)
        }
    };
    let compliance = raw
        .compliance
        .map(|c| -> Result<ComplianceParameterMap> {
            let n = model.n_joints();
            let bucketed = one_based(c.bucketed_joint, "bucketed joint", n)?;
            let tail = c
                .tail_joints
                .iter()
                .map(|&j| one_based(j, "tail joint", n))
                .collect::<Result<Vec<_>>>()?;
            let levels = c.levels.iter().map(|l| l.to_radians()).collect();
            ComplianceParameterMap::new(bucketed, levels, tail)
        })
        .transpose()?;
    let geometric = raw
        .identify
        .map(|i| i.geometric)
        .unwrap_or_default()
        .iter()
        .map(|s| {
            let p: ParamId = s.parse()?;
            model.check_param(p)?;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    let load_marker = raw
        .load_marker
        .map(|m| one_based(m, "load marker", model.n_markers()))
        .transpose()?;
    Ok(ModelFile {
        name: raw.name,
        model,
        compliance,
        geometric,
        load_marker,
    })
}

/// Attaches the path to an I/O failure.
fn located(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(located(path))?;
    parse_model(&text, &path.display().to_string())
}

pub fn bundled_model() -> ModelFile {
    parse_model(BUNDLED_MODEL, "kr270_like.toml").expect("bundled model is valid")
}

fn parse_err(origin: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line,
        message: message.into(),
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, origin: &str, line: u64) -> Result<T> {
    let raw = rec
        .get(idx)
        .ok_or_else(|| parse_err(origin, line, format!("missing column `{name}`")))?;
    raw.parse::<T>()
        .map_err(|_| parse_err(origin, line, format!("column `{name}`: cannot parse `{raw}`")))
}

fn finite(v: f64, name: &str, origin: &str, line: u64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(origin, line, format!("column `{name}` is not finite")))
    }
}

fn measurement_header(n_joints: usize) -> Vec<String> {
    let mut h: Vec<String> = ["config", "marker", "repetition"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=n_joints).map(|i| format!("q{i}_deg")));
    h.extend(
        [
            "fx_n", "fy_n", "fz_n", "load_marker", "p0x_um", "p0y_um", "p0z_um", "px_um", "py_um", "pz_um",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

/// Reads measurement records; `n_joints` fixes the expected q columns.
pub fn parse_measurements<R: Read>(reader: R, n_joints: usize, origin: &str) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv_reader(reader);
    let expected = measurement_header(n_joints);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(origin, 1, e.to_string()))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(parse_err(
            origin,
            1,
            format!("header must be `{}`", expected.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(origin, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != expected.len() {
            return Err(parse_err(
                origin,
                line,
                format!("expected {} fields, found {}", expected.len(), rec.len()),
            ));
        }
        let config: u32 = field(&rec, 0, "config", origin, line)?;
        let marker: usize = field(&rec, 1, "marker", origin, line)?;
        let repetition: u32 = field(&rec, 2, "repetition", origin, line)?;
        if marker == 0 {
            return Err(parse_err(origin, line, "marker indices are 1-based"));
        }
        let mut q = Vec::with_capacity(n_joints);
        for i in 0..n_joints {
            let name = &expected[3 + i];
            let deg: f64 = field(&rec, 3 + i, name, origin, line)?;
            q.push(finite(deg, name, origin, line)?.to_radians());
        }
        let mut vals = [0.0; 9];
        let base = 3 + n_joints;
        let idx = |k: usize| if k < 3 { base + k } else { base + k + 1 };
        for (k, v) in vals.iter_mut().enumerate() {
            let name = &expected[idx(k)];
            *v = finite(field(&rec, idx(k), name, origin, line)?, name, origin, line)?;
        }
        let load_marker: usize = field(&rec, base + 3, "load_marker", origin, line)?;
        if load_marker == 0 {
            return Err(parse_err(origin, line, "marker indices are 1-based"));
        }
        out.push(ExperimentRecord {
            config,
            marker: marker - 1,
            repetition,
            q: JointVector::new(q),
            wrench: Wrench::force(Vector3::new(vals[0], vals[1], vals[2]), load_marker - 1),
            p0: Vector3::new(vals[3], vals[4], vals[5]) / UM_PER_M,
            p: Vector3::new(vals[6], vals[7], vals[8]) / UM_PER_M,
        });
    }
    Ok(out)
}

pub fn read_measurements(path: &Path, n_joints: usize) -> Result<Vec<ExperimentRecord>> {
    let file = std::fs::File::open(path).map_err(located(path))?;
    parse_measurements(file, n_joints, &path.display().to_string())
}

/// Writes records in the measurement format. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_measurements<W: Write>(mut w: W, records: &[ExperimentRecord], n_joints: usize) -> Result<()> {
    writeln!(w, "{}", measurement_header(n_joints).join(","))?;
    for r in records {
        if r.q.len() != n_joints {
            return Err(Error::Dimension("record joint count".into()));
        }
        if r.wrench.torque != Vector3::zeros() {
            return Err(Error::InvalidArgument(
                "the measurement format carries forces only".into(),
            ));
        }
        let mut cols: Vec<String> = vec![r.config.to_string(), (r.marker + 1).to_string(), r.repetition.to_string()];
        cols.extend(r.q.as_slice().iter().map(|q| format!("{:?}", q.to_degrees())));
        cols.extend(r.wrench.force.iter().map(|f| format!("{f:?}")));
        cols.push((r.wrench.application_marker + 1).to_string());
        cols.extend(r.p0.iter().chain(r.p.iter()).map(|p| format!("{:?}", p * UM_PER_M)));
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}

pub fn parse_noise<R: Read>(reader: R, origin: &str) -> Result<NoiseModel> {
    let mut rdr = csv_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(origin, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let base = ["config", "sigma_x_um", "sigma_y_um", "sigma_z_um"];
    let with_std = ["std_x_um", "std_y_um", "std_z_um"];
    let has_std = headers.len() == 7 && headers[4..] == with_std;
    if headers.len() < 4 || headers[..4] != base || !(headers.len() == 4 || has_std) {
        return Err(parse_err(
            origin,
            1,
            "header must be `config,sigma_x_um,sigma_y_um,sigma_z_um[,std_x_um,std_y_um,std_z_um]`",
        ));
    }
    let mut model = NoiseModel::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(origin, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != headers.len() {
            return Err(parse_err(
                origin,
                line,
                format!("expected {} fields, found {}", headers.len(), rec.len()),
            ));
        }
        let config: u32 = field(&rec, 0, "config", origin, line)?;
        let mut v = [0.0; 6];
        for (k, slot) in v.iter_mut().enumerate().take(headers.len() - 1) {
            let name = &headers[k + 1];
            let x: f64 = finite(field(&rec, k + 1, name, origin, line)?, name, origin, line)?;
            if x < 0.0 {
                return Err(parse_err(origin, line, format!("column `{name}` is negative")));
            }
            *slot = x;
        }
        if model.contains(config) {
            return Err(parse_err(origin, line, format!("duplicate configuration {config}")));
        }
        let sigma = Vector3::new(v[0], v[1], v[2]) / UM_PER_M;
        let std = has_std.then(|| Vector3::new(v[3], v[4], v[5]) / UM_PER_M);
        model.insert(config, sigma, std);
    }
    Ok(model)
}

pub fn read_noise(path: &Path) -> Result<NoiseModel> {
    let file = std::fs::File::open(path).map_err(located(path))?;
    parse_noise(file, &path.display().to_string())
}

pub fn write_noise<W: Write>(mut w: W, noise: &NoiseModel) -> Result<()> {
    let with_std = noise.iter().all(|(_, e)| e.uncertainty.is_some()) && !noise.is_empty();
    if with_std {
        writeln!(w, "config,sigma_x_um,sigma_y_um,sigma_z_um,std_x_um,std_y_um,std_z_um")?;
    } else {
        writeln!(w, "config,sigma_x_um,sigma_y_um,sigma_z_um")?;
    }
    for (c, e) in noise.iter() {
        let s = e.sigma * UM_PER_M;
        write!(w, "{c},{:?},{:?},{:?}", s.x, s.y, s.z)?;
        if let (true, Some(u)) = (with_std, e.uncertainty) {
            let u = u * UM_PER_M;
            write!(w, ",{:?},{:?},{:?}", u.x, u.y, u.z)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_model_parses() {
        let m = bundled_model();
        assert_eq!(m.model.n_joints(), 6);
        assert_eq!(m.model.n_markers(), 4);
        let c = m.compliance.unwrap();
        assert_eq!(c.n_params(), 9);
        assert_eq!(m.load_marker, Some(3));
    }

    #[test]
    fn model_errors_are_located() {
        let bad = "joints = [\n  { type = \"revolute\", a = 0.0 }\n]\nmarkers = [[0,0,0]]\n";
        match parse_model(bad, "m.toml") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let kind = "joints = [{ type = \"screw\", a = 0.0, alpha = 0.0, d = 0.0, theta_offset = 0.0 }]\nmarkers = [[0.0,0.0,0.0]]\n";
        assert!(matches!(parse_model(kind, "m.toml"), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn measurement_round_trip() {
        let recs = vec![ExperimentRecord {
            config: 3,
            marker: 1,
            repetition: 2,
            q: JointVector::new(vec![0.1, -0.2]),
            wrench: Wrench::hanging_mass(265.0, 0),
            p0: Vector3::new(1.2, -0.3, 0.7),
            p: Vector3::new(1.2001, -0.3002, 0.6995),
        }];
        let mut buf = Vec::new();
        write_measurements(&mut buf, &recs, 2).unwrap();
        let back = parse_measurements(buf.as_slice(), 2, "mem").unwrap();
        assert_eq!(back.len(), 1);
        let (a, b) = (&recs[0], &back[0]);
        assert_eq!((a.config, a.marker, a.repetition), (b.config, b.marker, b.repetition));
        assert!((a.p - b.p).norm() < 1e-15 && (a.p0 - b.p0).norm() < 1e-15);
        assert!((a.wrench.force - b.wrench.force).norm() < 1e-12);
    }

    #[test]
    fn malformed_row_names_line() {
        let text = "config,marker,repetition,q1_deg,fx_n,fy_n,fz_n,load_marker,p0x_um,p0y_um,p0z_um,px_um,py_um,pz_um\n\
                    1,1,1,0.0,0,0,-100,1,0,0,0,1,1,1\n\
                    1,1,2,abc,0,0,-100,1,0,0,0,1,1,1\n";
        match parse_measurements(text.as_bytes(), 1, "meas.csv") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("q1_deg"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let short = "config,marker,repetition,q1_deg,fx_n,fy_n,fz_n,load_marker,p0x_um,p0y_um,p0z_um,px_um,py_um,pz_um\n1,1,1\n";
        assert!(matches!(
            parse_measurements(short.as_bytes(), 1, "meas.csv"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn noise_file_round_trip() {
        let text = "config,sigma_x_um,sigma_y_um,sigma_z_um,std_x_um,std_y_um,std_z_um\n1,150,64,33,1,1,1\n2,57,86,118,4,8,15\n";
        let m = parse_noise(text.as_bytes(), "n.csv").unwrap();
        assert!((m.get(2).unwrap().sigma.z - 118e-6).abs() < 1e-18);
        let mut buf = Vec::new();
        write_noise(&mut buf, &m).unwrap();
        assert_eq!(parse_noise(buf.as_slice(), "n.csv").unwrap(), m);
        let dup = "config,sigma_x_um,sigma_y_um,sigma_z_um\n1,1,1,1\n1,2,2,2\n";
        assert!(matches!(parse_noise(dup.as_bytes(), "n.csv"), Err(Error::Parse { line: 3, .. })));
    }
}
