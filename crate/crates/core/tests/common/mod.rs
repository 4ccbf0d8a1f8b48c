#![allow(dead_code)]

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robcal_core::kinematics::{Joint, JointKind, JointVector, ManipulatorModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random serial chain with `n` joints (mostly revolute), arbitrary base,
/// tool and three markers.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize) -> ManipulatorModel {
    let joints = (0..n)
        .map(|_| {
            let kind = if rng.random::<f64>() < 0.2 {
                JointKind::Prismatic
            } else {
                JointKind::Revolute
            };
            Joint {
                kind,
                a: rng.random_range(-0.8..0.8),
                alpha: rng.random_range(-3.0..3.0),
                d: rng.random_range(-0.8..0.8),
                theta_offset: rng.random_range(-3.0..3.0),
            }
        })
        .collect();
    let iso = |rng: &mut ChaCha8Rng| {
        Isometry3::from_parts(
            Translation3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            UnitQuaternion::from_euler_angles(
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(-3.0..3.0),
            ),
        )
    };
    let base = iso(rng);
    let tool = iso(rng);
    let markers = (0..3)
        .map(|_| Vector3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)))
        .collect();
    ManipulatorModel::new(joints, base, tool, markers).unwrap()
}

pub fn random_q(rng: &mut ChaCha8Rng, n: usize) -> JointVector {
    JointVector::new((0..n).map(|_| rng.random_range(-3.0..3.0)).collect())
}

type M4 = [[f64; 4]; 4];

fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn rot_x(t: f64) -> M4 {
    let (s, c) = t.sin_cos();
    [[1.0, 0.0, 0.0, 0.0], [0.0, c, -s, 0.0], [0.0, s, c, 0.0], [0.0, 0.0, 0.0, 1.0]]
}

fn rot_z(t: f64) -> M4 {
    let (s, c) = t.sin_cos();
    [[c, -s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
}

fn trans(x: f64, y: f64, z: f64) -> M4 {
    [[1.0, 0.0, 0.0, x], [0.0, 1.0, 0.0, y], [0.0, 0.0, 1.0, z], [0.0, 0.0, 0.0, 1.0]]
}

fn from_iso(iso: &Isometry3<f64>) -> M4 {
    let m = iso.to_homogeneous();
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

/// Marker position by explicit product of homogeneous matrices.
pub fn oracle_position(model: &ManipulatorModel, q: &JointVector, marker: usize) -> Vector3<f64> {
    let mut t = from_iso(model.base());
    for (j, &qi) in model.joints().iter().zip(q.as_slice()) {
        let (theta, d) = match j.kind {
            JointKind::Revolute => (qi + j.theta_offset, j.d),
            JointKind::Prismatic => (j.theta_offset, j.d + qi),
        };
        t = mul(&t, &rot_x(j.alpha));
        t = mul(&t, &trans(j.a, 0.0, 0.0));
        t = mul(&t, &rot_z(theta));
        t = mul(&t, &trans(0.0, 0.0, d));
    }
    t = mul(&t, &from_iso(model.tool()));
    let m = model.markers()[marker];
    let p = [m.x, m.y, m.z, 1.0];
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|k| t[i][k] * p[k]).sum();
    }
    Vector3::from(out)
}
