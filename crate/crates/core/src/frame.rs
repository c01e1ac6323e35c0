//! Orthonormal local frames, the `axis` construction, angle rotation and
//! quaternion-based bidirectional interpolation (bislerp).

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};

/// Threshold below which `axis` inputs are treated as degenerate.
pub const AXIS_EPS: f64 = 1e-8;

/// Right-handed orthonormal triad. After rotation `e_l` is the fiber, `e_n`
/// the cross-fiber and `e_t` the sheet direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub e_l: Vector3<f64>,
    pub e_n: Vector3<f64>,
    pub e_t: Vector3<f64>,
}

impl Frame {
    pub fn identity() -> Self {
        Frame { e_l: Vector3::x(), e_n: Vector3::y(), e_t: Vector3::z() }
    }

    /// Columns are [e_l, e_n, e_t].
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.e_l, self.e_n, self.e_t])
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Frame { e_l: m.column(0).into(), e_n: m.column(1).into(), e_t: m.column(2).into() }
    }

    pub fn fiber(&self) -> Vector3<f64> {
        self.e_l
    }

    pub fn sheet(&self) -> Vector3<f64> {
        self.e_t
    }

    pub fn crossfiber(&self) -> Vector3<f64> {
        self.e_n
    }

    /// ‖QᵀQ − I‖∞ (max abs entry).
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.matrix();
        (m.transpose() * m - Matrix3::identity()).abs().max()
    }

    /// Largest deviation from e_l = e_n × e_t.
    pub fn handedness_error(&self) -> f64 {
        (self.e_l - self.e_n.cross(&self.e_t)).abs().max()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.orthonormality_error() < tol && self.handedness_error() < tol
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.matrix()))
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        Frame::from_matrix(q.to_rotation_matrix().matrix())
    }
}

/// Per-node frames.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameField(pub Vec<Frame>);

impl FrameField {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Worst ‖QᵀQ − I‖∞ over all frames.
    pub fn max_orthonormality_error(&self) -> f64 {
        self.0.iter().map(|f| f.orthonormality_error()).fold(0.0, f64::max)
    }

    pub fn fibers(&self) -> Vec<Vector3<f64>> {
        self.0.iter().map(|f| f.e_l).collect()
    }
}

/// Builds the local frame from a normal direction `k` and a transmural
/// direction `gamma`. Fails when either is degenerate.
pub fn axis(k: &Vector3<f64>, gamma: &Vector3<f64>) -> Result<Frame> {
    let gn = gamma.norm();
    if !(gn > AXIS_EPS) {
        return Err(Error::Degenerate { node: usize::MAX });
    }
    let e_t = gamma / gn;
    let kp = k - e_t * k.dot(&e_t);
    let kn = kp.norm();
    if !(kn > AXIS_EPS) {
        return Err(Error::Degenerate { node: usize::MAX });
    }
    let e_n = kp / kn;
    let e_l = e_n.cross(&e_t);
    Ok(Frame { e_l, e_n, e_t })
}

/// Rotates e_l counter-clockwise about e_t by `alpha`, then e_t
/// counter-clockwise about the rotated fiber by `beta` (degrees).
pub fn rotate_frame(frame: &Frame, alpha: f64, beta: f64) -> Frame {
    let (sa, ca) = alpha.to_radians().sin_cos();
    let (sb, cb) = beta.to_radians().sin_cos();
    let f = frame.e_l * ca + frame.e_n * sa;
    let n1 = frame.e_n * ca - frame.e_l * sa;
    let s = frame.e_t * cb - n1 * sb;
    let n = n1 * cb + frame.e_t * sb;
    Frame { e_l: f, e_n: n, e_t: s }
}

/// Linear transmural angle law: `epi` at d = 0, `endo` at d = 1.
pub fn angle_at(d: f64, endo: f64, epi: f64) -> f64 {
    epi * (1.0 - d) + endo * d
}

fn slerp(a: &Quaternion<f64>, b: &Quaternion<f64>, t: f64) -> Quaternion<f64> {
    let d = a.coords.dot(&b.coords).clamp(-1.0, 1.0);
    if d > 1.0 - 1e-12 {
        let q = a * (1.0 - t) + b * t;
        return q / q.norm();
    }
    let th = d.acos();
    let s = th.sin();
    a * (((1.0 - t) * th).sin() / s) + b * ((t * th).sin() / s)
}

/// Interpolates between the axis lines of two frames. Among the eight
/// sign and half-turn equivalents of `pa` the one closest to `pb` is used.
pub fn bislerp(pa: &Frame, pb: &Frame, t: f64) -> Frame {
    let qa = *pa.to_quaternion().quaternion();
    let qb = *pb.to_quaternion().quaternion();
    let flips = [
        Quaternion::new(1.0, 0.0, 0.0, 0.0),
        Quaternion::new(0.0, 1.0, 0.0, 0.0),
        Quaternion::new(0.0, 0.0, 1.0, 0.0),
        Quaternion::new(0.0, 0.0, 0.0, 1.0),
    ];
    let mut best = qa;
    let mut best_dot = -1.0;
    for fl in &flips {
        let c = qa * fl;
        let d = c.coords.dot(&qb.coords).abs();
        if d > best_dot + 1e-14 {
            best_dot = d;
            best = c;
        }
    }
    if best.coords.dot(&qb.coords) < 0.0 {
        best = -best;
    }
    let q = slerp(&best, &qb, t);
    Frame::from_quaternion(&UnitQuaternion::new_normalize(q))
}
