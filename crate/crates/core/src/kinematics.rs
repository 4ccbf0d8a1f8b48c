//! Forward kinematics and Jacobians for serial chains described with
//! modified Denavit-Hartenberg parameters.
//!
//! Each joint record carries the parameters of the link that precedes it,
//! so the transform from frame `i-1` to frame `i` is
//! `RotX(alpha) * TransX(a) * RotZ(theta) * TransZ(d)`, with `theta` or `d`
//! shifted by the joint variable depending on the joint type. The chain is
//! framed by a fixed base transform and a fixed tool transform; marker
//! offsets are expressed in the tool frame.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One modified-DH joint. Lengths in meters, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
}

impl Joint {
    pub fn revolute(a: f64, alpha: f64, d: f64, theta_offset: f64) -> Self {
        Self {
            kind: JointKind::Revolute,
            a,
            alpha,
            d,
            theta_offset,
        }
    }

    pub fn prismatic(a: f64, alpha: f64, d: f64, theta_offset: f64) -> Self {
        Self {
            kind: JointKind::Prismatic,
            a,
            alpha,
            d,
            theta_offset,
        }
    }

    /// A revolute joint with all parameters zero: contributes an identity
    /// transform at zero joint angle.
    pub fn identity() -> Self {
        Self::revolute(0.0, 0.0, 0.0, 0.0)
    }

    fn link_transforms(&self, q: f64) -> (Isometry3<f64>, Isometry3<f64>) {
        let (theta, d) = match self.kind {
            JointKind::Revolute => (q + self.theta_offset, self.d),
            JointKind::Prismatic => (self.theta_offset, self.d + q),
        };
        let pre = Isometry3::from_parts(
            Translation3::new(self.a, 0.0, 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.alpha),
        );
        let post = Isometry3::from_parts(
            Translation3::new(0.0, 0.0, d),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta),
        );
        (pre, post)
    }
}

/// Geometric description of a serial manipulator plus its measurement markers.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulatorModel {
    joints: Vec<Joint>,
    base: Isometry3<f64>,
    tool: Isometry3<f64>,
    markers: Vec<Vector3<f64>>,
}

impl ManipulatorModel {
    pub fn new(
        joints: Vec<Joint>,
        base: Isometry3<f64>,
        tool: Isometry3<f64>,
        markers: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidModel("at least one joint is required".into()));
        }
        for (i, j) in joints.iter().enumerate() {
            if ![j.a, j.alpha, j.d, j.theta_offset]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::InvalidModel(format!("joint {} has non-finite parameters", i + 1)));
            }
        }
        if markers.is_empty() {
            return Err(Error::InvalidModel("at least one marker is required".into()));
        }
        if markers.iter().any(|m| !m.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidModel("marker offsets must be finite".into()));
        }
        for (name, iso) in [("base", &base), ("tool", &tool)] {
            if !iso.translation.vector.iter().all(|v| v.is_finite())
                || !iso.rotation.coords.iter().all(|v| v.is_finite())
            {
                return Err(Error::InvalidModel(format!("{name} transform is not finite")));
            }
        }
        Ok(Self {
            joints,
            base,
            tool,
            markers,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn base(&self) -> &Isometry3<f64> {
        &self.base
    }

    pub fn tool(&self) -> &Isometry3<f64> {
        &self.tool
    }

    pub fn markers(&self) -> &[Vector3<f64>] {
        &self.markers
    }

    pub fn n_markers(&self) -> usize {
        self.markers.len()
    }

    /// Returns a copy with one more joint appended after the last one.
    pub fn with_appended_joint(&self, joint: Joint) -> Self {
        let mut out = self.clone();
        out.joints.push(joint);
        out
    }

    /// Returns a copy with `param` shifted by `delta` (SI units).
    pub fn perturbed(&self, param: ParamId, delta: f64) -> Result<Self> {
        self.check_param(param)?;
        let mut out = self.clone();
        match param {
            ParamId::Joint { joint, field } => {
                let j = &mut out.joints[joint];
                match field {
                    DhField::A => j.a += delta,
                    DhField::Alpha => j.alpha += delta,
                    DhField::D => j.d += delta,
                    DhField::Theta => j.theta_offset += delta,
                }
            }
            ParamId::BaseTranslation(axis) => out.base.translation.vector[axis.index()] += delta,
            ParamId::BaseRotation(axis) => {
                let rot = UnitQuaternion::from_axis_angle(&axis.unit(), delta);
                out.base = Isometry3::from_parts(Translation3::identity(), rot) * out.base;
            }
            ParamId::ToolTranslation(axis) => out.tool.translation.vector[axis.index()] += delta,
            ParamId::MarkerOffset { marker, axis } => out.markers[marker][axis.index()] += delta,
        }
        Ok(out)
    }

    /// Every geometric parameter of the model: the four link parameters of
    /// each joint, then base translation, base rotation, tool translation and
    /// marker offsets per axis.
    pub fn all_params(&self) -> Vec<ParamId> {
        let mut v = Vec::new();
        for joint in 0..self.joints.len() {
            for field in [DhField::A, DhField::Alpha, DhField::D, DhField::Theta] {
                v.push(ParamId::Joint { joint, field });
            }
        }
        for axis in Axis::ALL {
            v.push(ParamId::BaseTranslation(axis));
            v.push(ParamId::BaseRotation(axis));
            v.push(ParamId::ToolTranslation(axis));
            for marker in 0..self.markers.len() {
                v.push(ParamId::MarkerOffset { marker, axis });
            }
        }
        v
    }

    /// Checks that `param` refers to an existing joint or marker.
    pub fn check_param(&self, param: ParamId) -> Result<()> {
        match param {
            ParamId::Joint { joint, .. } if joint >= self.joints.len() => {
                Err(Error::UnknownParameter(param.to_string()))
            }
            ParamId::MarkerOffset { marker, .. } if marker >= self.markers.len() => {
                Err(Error::UnknownParameter(param.to_string()))
            }
            _ => Ok(()),
        }
    }

    fn check_inputs(&self, q: &JointVector, marker: usize) -> Result<()> {
        if q.len() != self.joints.len() {
            return Err(Error::JointCount {
                expected: self.joints.len(),
                got: q.len(),
            });
        }
        if !q.as_slice().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("joint vector"));
        }
        if marker >= self.markers.len() {
            return Err(Error::InvalidMarker {
                index: marker,
                count: self.markers.len(),
            });
        }
        Ok(())
    }

    fn chain(&self, q: &JointVector, marker: usize) -> Chain {
        let mut t = self.base;
        let mut links = Vec::with_capacity(self.joints.len());
        for (joint, &qi) in self.joints.iter().zip(q.as_slice()) {
            let (pre, post) = joint.link_transforms(qi);
            let x_pre = t.rotation * Vector3::x();
            let o_pre = t.translation.vector;
            t *= pre;
            links.push(LinkFrame {
                kind: joint.kind,
                x_pre,
                o_pre,
                z_axis: t.rotation * Vector3::z(),
                o_axis: t.translation.vector,
            });
            t *= post;
        }
        let flange = t;
        let tool = flange * self.tool;
        let p = tool * nalgebra::Point3::from(self.markers[marker]);
        Chain {
            links,
            flange_rotation: flange.rotation.to_rotation_matrix().into_inner(),
            tool,
            position: p.coords,
        }
    }
}

struct LinkFrame {
    kind: JointKind,
    x_pre: Vector3<f64>,
    o_pre: Vector3<f64>,
    z_axis: Vector3<f64>,
    o_axis: Vector3<f64>,
}

struct Chain {
    links: Vec<LinkFrame>,
    flange_rotation: Matrix3<f64>,
    tool: Isometry3<f64>,
    position: Vector3<f64>,
}

/// Actuated coordinates: radians for revolute joints, meters for prismatic.
#[derive(Debug, Clone, PartialEq)]
pub struct JointVector(Vec<f64>);

impl JointVector {
    pub fn new(q: Vec<f64>) -> Self {
        Self(q)
    }

    pub fn from_degrees(deg: &[f64]) -> Self {
        Self(deg.iter().map(|d| d.to_radians()).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.0.get(i).copied()
    }
}

impl From<Vec<f64>> for JointVector {
    fn from(q: Vec<f64>) -> Self {
        Self(q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: Rotation3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> nalgebra::Unit<Vector3<f64>> {
        match self {
            Axis::X => Vector3::x_axis(),
            Axis::Y => Vector3::y_axis(),
            Axis::Z => Vector3::z_axis(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DhField {
    A,
    Alpha,
    D,
    Theta,
}

/// Identifier of one geometric parameter of a [`ManipulatorModel`].
///
/// Textual form (1-based indices): `joint3.a`, `joint3.alpha`, `joint3.d`,
/// `joint3.theta`, `base.x`, `base.rz`, `tool.y`, `marker2.z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamId {
    Joint { joint: usize, field: DhField },
    BaseTranslation(Axis),
    BaseRotation(Axis),
    /// Translation of the tool transform, expressed in the flange frame.
    ToolTranslation(Axis),
    /// Marker offset, expressed in the tool frame.
    MarkerOffset { marker: usize, axis: Axis },
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamId::Joint { joint, field } => {
                let name = match field {
                    DhField::A => "a",
                    DhField::Alpha => "alpha",
                    DhField::D => "d",
                    DhField::Theta => "theta",
                };
                write!(f, "joint{}.{name}", joint + 1)
            }
            ParamId::BaseTranslation(a) => write!(f, "base.{}", a.name()),
            ParamId::BaseRotation(a) => write!(f, "base.r{}", a.name()),
            ParamId::ToolTranslation(a) => write!(f, "tool.{}", a.name()),
            ParamId::MarkerOffset { marker, axis } => {
                write!(f, "marker{}.{}", marker + 1, axis.name())
            }
        }
    }
}

impl FromStr for ParamId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownParameter(s.to_string());
        let (head, tail) = s.split_once('.').ok_or_else(unknown)?;
        let index = |prefix: &str| -> Result<usize> {
            head.strip_prefix(prefix)
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(|n| n - 1)
                .ok_or_else(unknown)
        };
        if head == "base" {
            if let Some(axis) = Axis::parse(tail) {
                return Ok(ParamId::BaseTranslation(axis));
            }
            let axis = tail.strip_prefix('r').and_then(Axis::parse).ok_or_else(unknown)?;
            return Ok(ParamId::BaseRotation(axis));
        }
        if head == "tool" {
            return Axis::parse(tail)
                .map(ParamId::ToolTranslation)
                .ok_or_else(unknown);
        }
        if head.starts_with("joint") {
            let joint = index("joint")?;
            let field = match tail {
                "a" => DhField::A,
                "alpha" => DhField::Alpha,
                "d" => DhField::D,
                "theta" => DhField::Theta,
                _ => return Err(unknown()),
            };
            return Ok(ParamId::Joint { joint, field });
        }
        if head.starts_with("marker") {
            let marker = index("marker")?;
            let axis = Axis::parse(tail).ok_or_else(unknown)?;
            return Ok(ParamId::MarkerOffset { marker, axis });
        }
        Err(unknown())
    }
}

/// Pose of `marker` at configuration `q`.
pub fn forward_kinematics(model: &ManipulatorModel, q: &JointVector, marker: usize) -> Result<Pose> {
    model.check_inputs(q, marker)?;
    let chain = model.chain(q, marker);
    Ok(Pose {
        position: chain.position,
        orientation: chain.tool.rotation.to_rotation_matrix(),
    })
}

/// 6×n Jacobian of the marker twist: rows 0..3 linear velocity of the marker
/// point, rows 3..6 angular velocity, both in the base frame.
pub fn joint_jacobian(model: &ManipulatorModel, q: &JointVector, marker: usize) -> Result<DMatrix<f64>> {
    model.check_inputs(q, marker)?;
    let chain = model.chain(q, marker);
    let mut jac = DMatrix::zeros(6, model.n_joints());
    for (j, link) in chain.links.iter().enumerate() {
        match link.kind {
            JointKind::Revolute => {
                let v = link.z_axis.cross(&(chain.position - link.o_axis));
                jac.fixed_view_mut::<3, 1>(0, j).copy_from(&v);
                jac.fixed_view_mut::<3, 1>(3, j).copy_from(&link.z_axis);
            }
            JointKind::Prismatic => {
                jac.fixed_view_mut::<3, 1>(0, j).copy_from(&link.z_axis);
            }
        }
    }
    Ok(jac)
}

/// 3×|selection| Jacobian of the marker position with respect to the
/// selected geometric parameters, computed analytically.
pub fn parameter_jacobian(
    model: &ManipulatorModel,
    q: &JointVector,
    marker: usize,
    selection: &[ParamId],
) -> Result<DMatrix<f64>> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    for &p in selection {
        model.check_param(p)?;
    }
    model.check_inputs(q, marker)?;
    let chain = model.chain(q, marker);
    let p = chain.position;
    let mut jac = DMatrix::zeros(3, selection.len());
    for (col, &param) in selection.iter().enumerate() {
        let d = match param {
            ParamId::Joint { joint, field } => {
                let link = &chain.links[joint];
                match field {
                    DhField::Alpha => link.x_pre.cross(&(p - link.o_pre)),
                    DhField::A => link.x_pre,
                    DhField::Theta => link.z_axis.cross(&(p - link.o_axis)),
                    DhField::D => link.z_axis,
                }
            }
            ParamId::BaseTranslation(axis) => axis.unit().into_inner(),
            ParamId::BaseRotation(axis) => axis.unit().cross(&p),
            ParamId::ToolTranslation(axis) => chain.flange_rotation * axis.unit().into_inner(),
            ParamId::MarkerOffset { marker: m, axis } => {
                if m == marker {
                    chain.tool.rotation * axis.unit().into_inner()
                } else {
                    Vector3::zeros()
                }
            }
        };
        jac.fixed_view_mut::<3, 1>(0, col).copy_from(&d);
    }
    Ok(jac)
}
