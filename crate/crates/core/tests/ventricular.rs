use ldrbm::laplace::nodal_gradient;
use ldrbm::mesh::*;
use ldrbm::metrics::fiber_diff;
use ldrbm::ventricular::*;
use ldrbm::Error;
use nalgebra::Vector3;
use std::sync::OnceLock;

fn mesh() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| generate_ideal_biventricle(&BiventricleParams::default()).unwrap())
}

fn fibers(method: VentricularMethod) -> &'static VentricularFibers {
    static F: OnceLock<[VentricularFibers; 3]> = OnceLock::new();
    let all = F.get_or_init(|| {
        let a = VentricularAngles { ot: Some(OtAngles::histology()), ..VentricularAngles::histology() };
        let o = VentricularOptions::default();
        [VentricularMethod::R, VentricularMethod::B, VentricularMethod::D]
            .map(|m| generate_ventricular_fibers(mesh(), m, &a, &o).unwrap())
    });
    &all[method as usize]
}

/// Nodes carrying `tag` away from the apex and base of that surface (10% of
/// its axial extent at each end).
fn mid_nodes(tag: &str) -> Vec<usize> {
    let m = mesh();
    let ids = m.nodes_tagged(tag).unwrap();
    let zmin = ids.iter().map(|&i| m.nodes()[i][2]).fold(f64::INFINITY, f64::min);
    let (lo, hi) = (zmin * 0.9, zmin * 0.1);
    ids.into_iter().filter(|&i| (lo..=hi).contains(&m.nodes()[i][2])).collect()
}

const ALL: [VentricularMethod; 3] = [VentricularMethod::R, VentricularMethod::B, VentricularMethod::D];

#[test]
fn frames_are_orthonormal_and_right_handed() {
    for m in ALL {
        let f = fibers(m);
        assert_eq!(f.frames.len(), mesh().num_nodes());
        assert!(f.frames.max_orthonormality_error() < 1e-8, "{m:?}");
        assert!(f.frames.0.iter().all(|q| q.handedness_error() < 1e-8), "{m:?}");
    }
}

#[test]
fn fibers_are_orthogonal_to_transmural_direction() {
    for m in ALL {
        let f = fibers(m);
        let worst = f
            .frames
            .0
            .iter()
            .zip(&f.transmural.0)
            .map(|(q, t)| q.e_l.dot(t).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{m:?}: {worst:e}");
    }
}

#[test]
fn r_rbm_transmural_is_grad_phi() {
    let f = fibers(VentricularMethod::R);
    let g = nodal_gradient(mesh(), f.field("phi").unwrap());
    for (q, gi) in f.frames.0.iter().zip(&g.0) {
        if gi.norm() > 1e-6 {
            assert!(q.e_l.dot(gi).abs() / gi.norm() < 1e-6);
        }
    }
}

#[test]
fn r_rbm_recovers_helix_angles() {
    let f = fibers(VentricularMethod::R);
    let g = nodal_gradient(mesh(), f.field("phi").unwrap());
    for (tag, want) in [("lv", 60.0), ("epi", -60.0)] {
        let nodes: Vec<usize> = mid_nodes(tag).into_iter().filter(|&i| f.left[i]).collect();
        // elements whose nodes all sit on one boundary give a zero gradient
        let usable: Vec<usize> = nodes.iter().copied().filter(|&i| g.0[i].norm() > 1e-8).collect();
        assert!(usable.len() > 50 && usable.len() * 10 > nodes.len() * 9);
        for i in usable {
            let a = helix_angle(&f.frames.0[i].e_l, &g.0[i], &Vector3::z()).unwrap();
            assert!((a - want).abs() < 3.0, "{tag} node {i}: {a}");
        }
    }
}

#[test]
fn zero_angles_leave_axis_frame() {
    let m = mesh();
    let f = generate_ventricular_fibers(m, VentricularMethod::R, &VentricularAngles::zero(), &Default::default())
        .unwrap();
    let k = base_normal(m).unwrap();
    for (q, t) in f.frames.0.iter().zip(&f.transmural.0) {
        assert!(q.e_l.dot(t).abs() < 1e-10);
        assert!(q.e_l.dot(&k).abs() < 1e-10);
        assert!((q.e_t - t).norm() < 1e-10);
    }
}

#[test]
fn sides_follow_xi_sign() {
    for m in ALL {
        let f = fibers(m);
        let xi = f.field("xi").unwrap();
        for (l, x) in f.left.iter().zip(&xi.0) {
            assert_eq!(*l, *x > 0.0);
        }
        let n_left = f.left.iter().filter(|&&l| l).count();
        assert!(n_left > 0 && n_left < f.left.len());
    }
}

#[test]
fn intermediate_fields_are_bounded() {
    let b = fibers(VentricularMethod::B);
    for name in ["phi_l", "phi_r", "phi_epi", "psi"] {
        let s = b.field(name).unwrap();
        assert!(s.min() >= -1e-9 && s.max() <= 1.0 + 1e-9, "{name}");
    }
    let d = fibers(VentricularMethod::D);
    let phi = d.field("phi").unwrap();
    assert!(phi.min() >= -1.0 - 1e-9 && phi.max() <= 2.0 + 1e-9);
    for name in ["w_l", "w_r", "psi_ab_l", "psi_ot_r"] {
        let s = d.field(name).unwrap();
        assert!(s.min() >= -1e-9 && s.max() <= 1.0 + 1e-9, "{name}");
    }
}

#[test]
fn b_and_d_agree_on_left_free_wall() {
    let p = BiventricleParams::default();
    let region = biventricle_regions(mesh(), &p);
    let d = fiber_diff(&fibers(VentricularMethod::B).frames, &fibers(VentricularMethod::D).frames).unwrap();
    let mut free: Vec<f64> =
        d.iter().zip(&region).filter(|(_, &r)| r == REGION_LV_FREE).map(|(v, _)| *v).collect();
    free.sort_by(f64::total_cmp);
    let median = free[free.len() / 2];
    assert!(median < 0.1, "median {median}");
}

#[test]
fn generation_is_deterministic() {
    let m = generate_ideal_biventricle(&BiventricleParams { h: 0.2, ..Default::default() }).unwrap();
    let a = VentricularAngles::histology();
    let o = VentricularOptions::default();
    for meth in ALL {
        let x = generate_ventricular_fibers(&m, meth, &a, &o).unwrap();
        let y = generate_ventricular_fibers(&m, meth, &a, &o).unwrap();
        assert_eq!(x.frames, y.frames);
    }
}

#[test]
fn missing_tags_are_reported() {
    let slab = generate_slab([1.0, 1.0, 1.0], 0.25).unwrap();
    for meth in ALL {
        let r = generate_ventricular_fibers(&slab, meth, &VentricularAngles::histology(), &Default::default());
        let e = r.unwrap_err();
        assert!(matches!(e, Error::Tag(_)), "{e}");
        assert!(e.to_string().contains("TagSchema"));
    }
}

#[test]
fn angles_out_of_range_rejected() {
    let a = VentricularAngles { alpha_epi_l: 200.0, ..VentricularAngles::histology() };
    assert!(a.validate().is_err());
    let r = generate_ventricular_fibers(mesh(), VentricularMethod::R, &a, &Default::default());
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn method_names_parse() {
    assert_eq!("d-rbm".parse::<VentricularMethod>().unwrap(), VentricularMethod::D);
    assert_eq!("R".parse::<VentricularMethod>().unwrap(), VentricularMethod::R);
    assert!("Q".parse::<VentricularMethod>().is_err());
}

#[test]
fn helix_angle_of_axis_frames() {
    let n = Vector3::x();
    assert!((helix_angle(&Vector3::y(), &n, &Vector3::z()).unwrap()).abs() < 1e-12);
    let f = Vector3::new(0.0, 0.5, 0.75f64.sqrt());
    assert!((helix_angle(&f, &n, &Vector3::z()).unwrap().abs() - 60.0).abs() < 1e-9);
    assert!(helix_angle(&Vector3::y(), &Vector3::z(), &Vector3::z()).is_none());
}
