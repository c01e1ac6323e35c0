use ldrbm::frame::{angle_at, axis, bislerp, rotate_frame};
use ldrbm::Frame;
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-1.0f64..1.0).prop_map(Vector3::from)
}

fn frame() -> impl Strategy<Value = Frame> {
    prop::array::uniform3(-3.2f64..3.2)
        .prop_map(|a| Frame::from_matrix(Rotation3::from_euler_angles(a[0], a[1], a[2]).matrix()))
}

fn same_lines(a: &Frame, b: &Frame, tol: f64) -> bool {
    (a.e_l.dot(&b.e_l).abs() - 1.0).abs() < tol
        && (a.e_n.dot(&b.e_n).abs() - 1.0).abs() < tol
        && (a.e_t.dot(&b.e_t).abs() - 1.0).abs() < tol
}

proptest! {
    #[test]
    fn axis_is_orthonormal(k in vec3(), g in vec3()) {
        prop_assume!(g.norm() > 1e-3 && k.cross(&g).norm() > 1e-3 * k.norm() * g.norm() + 1e-6);
        let f = axis(&k, &g).unwrap();
        prop_assert!(f.is_valid(1e-10));
        prop_assert!((f.e_t - g.normalize()).norm() < 1e-12);
        prop_assert!(f.e_n.dot(&k) > 0.0);
    }

    #[test]
    fn rotation_keeps_invariants(f in frame(), a in -180.0f64..180.0, b in -180.0f64..180.0) {
        let r = rotate_frame(&f, a, b);
        prop_assert!(r.is_valid(1e-10));
        // the fiber stays orthogonal to the transmural direction
        prop_assert!(r.e_l.dot(&f.e_t).abs() < 1e-12);
    }

    #[test]
    fn bislerp_output_is_a_frame(a in frame(), b in frame(), t in 0.0f64..1.0) {
        prop_assert!(bislerp(&a, &b, t).is_valid(1e-9));
    }

    #[test]
    fn bislerp_endpoints(a in frame(), b in frame()) {
        prop_assert!(same_lines(&bislerp(&a, &b, 0.0), &a, 1e-9));
        prop_assert!(same_lines(&bislerp(&a, &b, 1.0), &b, 1e-9));
    }

    #[test]
    fn bislerp_idempotent(a in frame(), t in 0.0f64..1.0) {
        prop_assert!(same_lines(&bislerp(&a, &a, t), &a, 1e-9));
    }

    #[test]
    fn bislerp_ignores_axis_signs(a in frame(), b in frame(), t in 0.0f64..1.0, pick in 0usize..3) {
        // negate two axes: the right-handed equivalents of a line triad
        let mut a2 = a;
        match pick {
            0 => { a2.e_l = -a2.e_l; a2.e_n = -a2.e_n; }
            1 => { a2.e_n = -a2.e_n; a2.e_t = -a2.e_t; }
            _ => { a2.e_l = -a2.e_l; a2.e_t = -a2.e_t; }
        }
        let x = bislerp(&a, &b, t);
        let y = bislerp(&a2, &b, t);
        prop_assert!(same_lines(&x, &y, 1e-7), "{x:?} vs {y:?}");
    }

    #[test]
    fn angle_law_is_affine(d in 0.0f64..1.0, endo in -90.0f64..90.0, epi in -90.0f64..90.0) {
        let a = angle_at(d, endo, epi);
        prop_assert!((a - (epi + d * (endo - epi))).abs() < 1e-12);
    }
}

#[test]
fn axis_examples() {
    let f = axis(&Vector3::z(), &Vector3::x()).unwrap();
    assert!((f.e_t - Vector3::x()).norm() < 1e-15);
    assert!((f.e_n - Vector3::z()).norm() < 1e-15);
    assert!((f.e_l - Vector3::y()).norm() < 1e-15);

    let f = axis(&Vector3::new(0.0, 1.0, 1.0), &Vector3::new(2.0, 0.0, 0.0)).unwrap();
    let s = 0.5f64.sqrt();
    assert!((f.e_t - Vector3::x()).norm() < 1e-15);
    assert!((f.e_n - Vector3::new(0.0, s, s)).norm() < 1e-15);
    assert!((f.e_l - f.e_n.cross(&f.e_t)).norm() < 1e-15);

    assert!(axis(&Vector3::x(), &Vector3::new(3.0, 0.0, 0.0)).is_err());
    assert!(axis(&Vector3::x(), &Vector3::zeros()).is_err());
}

#[test]
fn rotation_examples() {
    let f = Frame::identity();
    assert_eq!(rotate_frame(&f, 0.0, 0.0), f);
    let r = rotate_frame(&f, 90.0, 0.0);
    assert!((r.e_l - Vector3::y()).norm() < 1e-15);
}

#[test]
fn septal_angle_law_midpoint() {
    assert_eq!(angle_at(0.5, 60.0, -60.0), 0.0);
    assert_eq!(angle_at(0.0, 60.0, -60.0), -60.0);
    assert_eq!(angle_at(1.0, 60.0, -60.0), 60.0);
    // alpha_endo (1 - 2d)
    let septal = |d: f64| 60.0 * (1.0 - 2.0 * d);
    assert_eq!(septal(0.5), 0.0);
}

#[test]
fn bislerp_quarter_turn_midpoint() {
    let a = Frame::identity();
    let b = rotate_frame(&a, 90.0, 0.0);
    let m = bislerp(&a, &b, 0.5);
    let s = 0.5f64.sqrt();
    assert!((m.e_l.dot(&Vector3::new(s, s, 0.0)).abs() - 1.0).abs() < 1e-12);
    assert!((m.e_t.dot(&Vector3::z()).abs() - 1.0).abs() < 1e-12);
}
