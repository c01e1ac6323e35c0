use ldrbm::atrial::*;
use ldrbm::mesh::*;
use ldrbm::Error;
use std::collections::BTreeSet;
use std::sync::OnceLock;

const TOL: f64 = 1e-10;

fn atrium(side: AtriumSide) -> &'static (Mesh, AtrialFibers) {
    static L: OnceLock<(Mesh, AtrialFibers)> = OnceLock::new();
    static R: OnceLock<(Mesh, AtrialFibers)> = OnceLock::new();
    let cell = match side {
        AtriumSide::Left => &L,
        AtriumSide::Right => &R,
    };
    cell.get_or_init(|| {
        let m = generate_ideal_atrium(&AtriumParams::for_side(side)).unwrap();
        let f = generate_atrial_fibers(&m, side, &AtrialTaus::ideal(), TOL).unwrap();
        (m, f)
    })
}

/// Edge-connected node pairs of the hexahedral mesh.
fn edges(m: &Mesh) -> BTreeSet<(usize, usize)> {
    const E: [(usize, usize); 12] =
        [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)];
    let mut s = BTreeSet::new();
    for el in m.elements() {
        for (a, b) in E {
            let (i, j) = (el[a], el[b]);
            s.insert((i.min(j), i.max(j)));
        }
    }
    s
}

#[test]
fn ra_selection_examples() {
    let t = AtrialTaus::ideal();
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.95, 0.0, &t), (BundleLabel::Tv, Psi::R));
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.3, -0.14, &t), (BundleLabel::Ct, Psi::W));
    assert_eq!(select_bundle_ra(0.0, 0.95, 0.3, -0.5, &t), (BundleLabel::Icv, Psi::V));
    assert_eq!(select_bundle_ra(0.0, 0.05, 0.3, -0.5, &t), (BundleLabel::Scv, Psi::V));
    // the inter-caval bundle sits in the psi_r < tau_raw branch
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.3, 0.2, &t), (BundleLabel::Ib, Psi::V));
    // with psi_r above tau_raw the same psi_v, psi_w fall into the lower septum
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.6, 0.2, &t), (BundleLabel::RasBottom, Psi::R));
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.6, -0.2, &t), (BundleLabel::IstRaaRaw, Psi::Ab));
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.3, -0.5, &t), (BundleLabel::Raw, Psi::Ab));
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.3, 0.5, &t), (BundleLabel::RasCentre, Psi::R));
}

#[test]
fn ras_top_needs_ordered_thresholds() {
    // tau_ib < psi_w < tau_ras
    let t = AtrialTaus { tau_ib: 0.1, tau_ras: 0.3, ..AtrialTaus::ideal() };
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.3, 0.2, &t), (BundleLabel::RasTop, Psi::W));
    let ideal = AtrialTaus::ideal();
    for k in 0..=200 {
        let w = -1.0 + k as f64 * 0.01;
        assert_ne!(select_bundle_ra(0.0, 0.5, 0.3, w, &ideal).0, BundleLabel::RasTop, "w = {w}");
    }
}

#[test]
fn threshold_equality_follows_comparison_sense() {
    let t = AtrialTaus::ideal();
    assert_eq!(select_bundle_ra(0.0, 0.5, t.tau_tv, 0.0, &t).0, BundleLabel::Tv);
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.3, t.tau_ct_plus, &t).0, BundleLabel::Ct);
    assert_eq!(select_bundle_ra(0.0, 0.5, 0.3, t.tau_ct_minus, &t).0, BundleLabel::Ct);
    assert_eq!(select_bundle_la(0.0, 0.5, t.tau_mv, &t).0, BundleLabel::Mv);
    assert_eq!(select_bundle_la(0.0, t.tau_rpv, 0.2, &t).0, BundleLabel::LpvRpv);
}

#[test]
fn la_selection_examples() {
    let t = AtrialTaus::ideal();
    assert_eq!(select_bundle_la(0.0, 0.5, 0.9, &t), (BundleLabel::Mv, Psi::R));
    assert_eq!(select_bundle_la(0.0, 0.05, 0.2, &t), (BundleLabel::LpvRpv, Psi::V));
    assert_eq!(select_bundle_la(0.0, 0.9, 0.2, &t), (BundleLabel::LpvRpv, Psi::V));
    assert_eq!(select_bundle_la(0.0, 0.4, 0.2, &t), (BundleLabel::LaBody, Psi::Ab));
}

#[test]
fn labels_partition_nodes() {
    for side in [AtriumSide::Left, AtriumSide::Right] {
        let (m, f) = atrium(side);
        assert_eq!(f.labels.len(), m.num_nodes());
        assert_eq!(f.label_counts().values().sum::<usize>(), m.num_nodes());
        let allowed = BundleLabel::for_side(side);
        assert!(f.labels.iter().all(|l| allowed.contains(l)));
    }
}

#[test]
fn la_labels_all_present() {
    let (_, f) = atrium(AtriumSide::Left);
    let c = f.label_counts();
    for l in BundleLabel::LA {
        assert!(c.get(&l).copied().unwrap_or(0) > 0, "{}", l.name());
    }
}

#[test]
fn ra_labels_present_except_ras_top() {
    let (_, f) = atrium(AtriumSide::Right);
    let c = f.label_counts();
    for l in BundleLabel::RA {
        if l != BundleLabel::RasTop {
            assert!(c.get(&l).copied().unwrap_or(0) > 0, "{}", l.name());
        }
    }
}

#[test]
fn frames_are_orthonormal() {
    for side in [AtriumSide::Left, AtriumSide::Right] {
        let (_, f) = atrium(side);
        assert!(f.frames.max_orthonormality_error() < 1e-8);
        assert!(f.frames.0.iter().all(|q| q.handedness_error() < 1e-8));
    }
}

#[test]
fn fibers_run_along_rings() {
    for side in [AtriumSide::Left, AtriumSide::Right] {
        let (m, f) = atrium(side);
        for ring in rings_of(side) {
            let a = ring_alignment(m, &f.frames, ring, 0.9).unwrap();
            assert!(a >= 0.9, "{side:?} {ring}: {a}");
        }
    }
}

#[test]
fn distances_are_bounded() {
    for side in [AtriumSide::Left, AtriumSide::Right] {
        let (_, f) = atrium(side);
        let d = &f.distances;
        let eps = 1e-9;
        for (name, s) in [("phi", &d.phi), ("psi_v", &d.psi_v), ("psi_r", &d.psi_r)] {
            assert!(s.min() >= -eps && s.max() <= 1.0 + eps, "{name}");
        }
        assert!(d.psi_ab.min() >= -1.0 - eps && d.psi_ab.max() <= 2.0 + eps);
        match side {
            AtriumSide::Right => {
                let w = d.psi_w.as_ref().unwrap();
                assert!(w.min() >= -1.0 - eps && w.max() <= 1.0 + eps);
            }
            AtriumSide::Left => assert!(d.psi_w.is_none()),
        }
    }
}

#[test]
fn mv_set_shrinks_as_threshold_grows() {
    let (_, f) = atrium(AtriumSide::Left);
    let d = &f.distances;
    let mut prev: Option<BTreeSet<usize>> = None;
    for k in 0..=10 {
        let t = AtrialTaus { tau_mv: 0.5 + 0.05 * k as f64, ..AtrialTaus::ideal() };
        let set: BTreeSet<usize> = (0..f.labels.len())
            .filter(|&i| select_bundle_la(d.psi_ab.0[i], d.psi_v.0[i], d.psi_r.0[i], &t).0 == BundleLabel::Mv)
            .collect();
        if let Some(p) = &prev {
            assert!(set.is_subset(p));
        }
        prev = Some(set);
    }
}

#[test]
fn crista_terminalis_is_smooth() {
    let (m, f) = atrium(AtriumSide::Right);
    let mut pairs = 0;
    for (i, j) in edges(m) {
        if f.labels[i] == BundleLabel::Ct && f.labels[j] == BundleLabel::Ct {
            pairs += 1;
            let c = f.frames.0[i].fiber().dot(&f.frames.0[j].fiber()).abs();
            assert!(c > 0.8, "nodes {i},{j}: {c}");
        }
    }
    assert!(pairs > 100);
}

#[test]
fn generation_is_deterministic() {
    let (m, _) = atrium(AtriumSide::Right);
    let a = generate_atrial_fibers(m, AtriumSide::Right, &AtrialTaus::ideal(), TOL).unwrap();
    let b = generate_atrial_fibers(m, AtriumSide::Right, &AtrialTaus::ideal(), TOL).unwrap();
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.labels, b.labels);
}

#[test]
fn taus_validation() {
    for t in [AtrialTaus::ideal(), AtrialTaus::zygote(), AtrialTaus::riunet()] {
        t.validate().unwrap();
    }
    let bad = AtrialTaus { tau_ct_minus: 0.0, tau_ct_plus: -0.1, ..AtrialTaus::ideal() };
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let bad = AtrialTaus { tau_scv: 0.95, ..AtrialTaus::ideal() };
    assert!(bad.validate().is_err());
    let bad = AtrialTaus { tau_ib: f64::NAN, ..AtrialTaus::ideal() };
    assert!(bad.validate().is_err());
    assert!(AtrialTaus::preset("Zygote").is_ok());
    assert!(AtrialTaus::preset("nope").is_err());
}

#[test]
fn wrong_side_is_tag_error() {
    let (m, _) = atrium(AtriumSide::Left);
    let e = generate_atrial_fibers(m, AtriumSide::Right, &AtrialTaus::ideal(), TOL).unwrap_err();
    assert!(matches!(e, Error::Tag(_)), "{e}");
}

#[test]
fn label_codes_are_stable() {
    assert_eq!(BundleLabel::Tv.code(), 0);
    assert_eq!(BundleLabel::LaBody.code(), 12);
    assert_eq!(BundleLabel::RasTop.name(), "RAS_TOP");
}
