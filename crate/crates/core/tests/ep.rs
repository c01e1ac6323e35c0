use ldrbm::ep::*;
use ldrbm::frame::{Frame, FrameField};
use ldrbm::mesh::*;
use ldrbm::Error;
use nalgebra::{Matrix3, Rotation3, Vector3};

fn slab(l: [f64; 3], h: f64) -> Mesh {
    generate_slab(l, h).unwrap()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn resting_state_is_kept() {
    let m = slab([0.5, 0.3, 0.2], 0.05);
    let ms = MitchellSchaeffer::ventricular();
    let p = EpParams { t_end: 100.0, ..EpParams::default() };
    let r = run_simulation(&m, &Conductivity::Isotropic(1.0), &ms, &[], &p).unwrap();
    let u0 = ms.resting().0;
    let dev = r.final_state.u().iter().map(|u| (u - u0).abs()).fold(0.0, f64::max);
    assert!(dev < 0.01, "{dev}");
    assert!(r.log.iter().all(|l| (l.u_min - u0).abs() < 0.01 && (l.u_max - u0).abs() < 0.01));
    assert!(r.activation.never().len() == m.num_nodes());
}

#[test]
fn ionic_resting_states_are_fixed_points() {
    let models: [&dyn IonicModel; 3] = [&MitchellSchaeffer::ventricular(), &Courtemanche1998, &TenTusscher2006];
    for model in models {
        let (u0, w0) = model.resting();
        assert_eq!(w0.len(), model.num_states(), "{}", model.name());
        let mut dw = vec![0.0; w0.len()];
        model.rates(u0, &w0, &mut dw);
        for (k, d) in dw.iter().enumerate() {
            assert!(d.abs() < 1e-9, "{} state {k}: {d:e}", model.name());
        }
        let i = model.current(u0, &w0);
        assert!(i.abs() < 1e-9, "{}: I_ion = {i}", model.name());
    }
    assert_eq!(TenTusscher2006.num_states(), 18);
    assert_eq!(Courtemanche1998.num_states(), 20);
}

#[test]
fn detailed_models_stay_at_rest() {
    let m = slab([0.2, 0.2, 0.1], 0.05);
    let p = EpParams { t_end: 100.0, ..EpParams::default() };
    for model in [&TenTusscher2006 as &dyn IonicModel, &Courtemanche1998] {
        let r = run_simulation(&m, &Conductivity::Isotropic(1.0), model, &[], &p).unwrap();
        let u0 = model.resting().0;
        let dev = r.final_state.u().iter().map(|u| (u - u0).abs()).fold(0.0, f64::max);
        assert!(dev < 0.01, "{}: {dev}", model.name());
    }
}

#[test]
fn pure_diffusion_conserves_mass() {
    let m = slab([1.0, 0.5, 0.3], 0.1);
    let p = EpParams { t_end: 5.0, dt: 0.1, tol: 1e-13, ..EpParams::default() };
    let mut model = Monodomain::new(&m, &Conductivity::Isotropic(2.0), &Passive, &[], &p).unwrap();
    let mut s = model.resting_state();
    s.history[0] = m.nodes().iter().map(|q| (3.0 * q[0]).sin() + q[1] * q[2] * 10.0).collect();
    let vol: Vec<f64> = {
        // nodal volume shares equal the lumped mass
        let mut v = vec![0.0; m.num_nodes()];
        for (e, ve) in m.element_volumes().iter().enumerate() {
            for &i in &m.elements()[e] {
                v[i] += ve / 8.0;
            }
        }
        v
    };
    let mean = |u: &[f64]| u.iter().zip(&vol).map(|(a, b)| a * b).sum::<f64>() / vol.iter().sum::<f64>();
    let m0 = mean(s.u());
    let spread0 = s.u().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..50 {
        model.step(&mut s).unwrap();
    }
    let m1 = mean(s.u());
    assert!(((m1 - m0) / m0).abs() < 1e-8, "{m0} -> {m1}");
    // and it did diffuse
    assert!(s.u().iter().copied().fold(f64::NEG_INFINITY, f64::max) < spread0);
}

/// Uniform potential under a linear membrane: u' = -(lambda/cm)(u - u0).
fn linear_decay_error(order: usize, dt: f64) -> f64 {
    let m = slab([0.2, 0.2, 0.2], 0.1);
    let lm = LinearMembrane { lambda: 0.5, u0: 0.0 };
    let p = EpParams { dt, bdf_order: order, tol: 1e-14, t_end: 2.0, ..EpParams::default() };
    let mut model = Monodomain::new(&m, &Conductivity::Isotropic(1.0), &lm, &[], &p).unwrap();
    let exact = |t: f64| (-0.5 * t).exp();
    let n = m.num_nodes();
    let mut s = model.resting_state();
    s.history = (0..order).map(|j| vec![exact(-(j as f64) * dt); n]).collect();
    let steps = (2.0 / dt).round() as usize;
    for _ in 0..steps {
        model.step(&mut s).unwrap();
    }
    s.u().iter().map(|u| (u - exact(s.time)).abs()).fold(0.0, f64::max)
}

#[test]
fn bdf3_is_third_order() {
    let e: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&dt| linear_decay_error(3, dt)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 2.5, "order {order} from {e:?}");
    }
    let e1: Vec<f64> = [0.2, 0.1].iter().map(|&dt| linear_decay_error(1, dt)).collect();
    let o1 = (e1[0] / e1[1]).log2();
    assert!((o1 - 1.0).abs() < 0.2, "BDF1 order {o1}");
}

#[test]
fn bdf_coefficients_are_consistent() {
    for q in 1..=3 {
        let (a0, beta, ext) = bdf_coefficients(q);
        assert!((beta.iter().sum::<f64>() - a0).abs() < 1e-14);
        assert!((ext.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}

fn cable_cv(frame: Frame, spec: &ConductivitySpec) -> f64 {
    let h = 0.05;
    let m = cable_mesh(2.0, h).unwrap();
    let frames = FrameField(vec![frame; m.num_nodes()]);
    let d = assemble_conductivity(&m, &frames, spec).unwrap();
    let stim = Stimulus { radius: 0.25, ..Stimulus::at([0.0, 0.5 * h, 0.5 * h], 0.0) };
    let p = EpParams { t_end: 400.0, stop_margin: Some(5.0), ..EpParams::default() };
    let r = run_simulation(&m, &d, &MitchellSchaeffer::ventricular(), &[stim], &p).unwrap();
    measure_cv(&m, &r.activation, &Vector3::x()).unwrap()
}

#[test]
fn cv_follows_conductivity_ordering() {
    let spec = ConductivitySpec::new(1.334, 0.5, 0.176).unwrap();
    let along_f = Frame::identity();
    let along_s = Frame { e_l: -Vector3::z(), e_n: Vector3::y(), e_t: Vector3::x() };
    let along_n = Frame { e_l: Vector3::z(), e_n: Vector3::x(), e_t: Vector3::y() };
    for f in [along_f, along_s, along_n] {
        assert!(f.is_valid(1e-12));
    }
    let (vf, vs, vn) = (cable_cv(along_f, &spec), cable_cv(along_s, &spec), cable_cv(along_n, &spec));
    assert!(vf > vs && vs > vn, "{vf} {vs} {vn}");
}

#[test]
fn doubling_sigma_scales_cv_by_sqrt2() {
    let ms = MitchellSchaeffer::ventricular();
    let setup = FitSetup { length: 2.0, ..FitSetup::new(&ms, 0.02, 0.02) };
    let v1 = cv_along(&setup, 0.5).unwrap();
    let v2 = cv_along(&setup, 1.0).unwrap();
    let ratio = v2 / v1;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn activation_grows_with_distance() {
    let m = slab([1.0, 0.5, 0.2], 0.05);
    let stim = Stimulus { radius: 0.1, ..Stimulus::at([0.0, 0.0, 0.0], 0.0) };
    let p = EpParams { t_end: 200.0, stop_margin: Some(2.0), ..EpParams::default() };
    let r = run_simulation(&m, &Conductivity::Isotropic(1.0), &MitchellSchaeffer::ventricular(), &[stim], &p).unwrap();
    r.activation.require_complete().unwrap();
    let dist: Vec<f64> = m.nodes().iter().map(|q| Vector3::from(*q).norm()).collect();
    let rho = spearman(&dist, &r.activation.to_vec());
    assert!(rho > 0.99, "rho {rho}");
    assert!(r.activation.max().unwrap() <= r.final_state.time);
}

#[test]
fn snapshot_cadence_does_not_change_activation() {
    let m = slab([0.6, 0.3, 0.2], 0.05);
    let stim = Stimulus { radius: 0.1, ..Stimulus::at([0.0, 0.0, 0.0], 0.0) };
    let ms = MitchellSchaeffer::ventricular();
    let run = |snap: Option<f64>| {
        let p = EpParams { t_end: 40.0, snapshot_interval: snap, ..EpParams::default() };
        run_simulation(&m, &Conductivity::Isotropic(1.0), &ms, &[stim], &p).unwrap()
    };
    let a = run(None);
    let b = run(Some(1.0));
    let c = run(Some(0.35));
    assert_eq!(a.activation, b.activation);
    assert_eq!(a.activation, c.activation);
    assert!(a.snapshots.is_empty());
    assert_eq!(b.snapshots.len(), 41);
    assert!((b.snapshots[10].0 - 10.0).abs() < 1e-9);
}

#[test]
fn no_conduction_confines_upstroke() {
    let m = slab([1.0, 0.5, 0.5], 0.05);
    let stim = Stimulus { radius: 0.15, ..Stimulus::at([0.5, 0.25, 0.25], 0.0) };
    let p = EpParams { t_end: 30.0, ..EpParams::default() };
    let r = run_simulation(&m, &Conductivity::Isotropic(0.0), &MitchellSchaeffer::ventricular(), &[stim], &p).unwrap();
    let mut inside = 0;
    for i in 0..m.num_nodes() {
        let hit = r.activation.times[i].is_some();
        assert_eq!(hit, stim.contains(&m.node(i)), "node {i}");
        inside += hit as usize;
    }
    assert!(inside > 0);
}

#[test]
fn conductivity_tensor_properties() {
    let iso = ConductivitySpec::isotropic(2.5);
    let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
    let frame = Frame::from_matrix(rot.matrix());
    assert!((iso.tensor(&frame) - Matrix3::identity() * 2.5).abs().max() < 1e-14);

    let v = ConductivitySpec::ventricular();
    let mut ev: Vec<f64> = v.tensor(&frame).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    for (a, b) in ev.iter().zip([0.16, 0.49, 1.07]) {
        assert!((a - b).abs() < 1e-12);
    }

    let base = Frame::identity();
    let r = rot.matrix();
    let turned = Frame::from_matrix(&(r * base.matrix()));
    let lhs = v.tensor(&turned);
    let rhs = r * v.tensor(&base) * r.transpose();
    assert!((lhs - rhs).abs().max() < 1e-13);

    assert!(ConductivitySpec::new(1.0, 0.0, 1.0).is_err());
    assert!(ConductivitySpec::new(1.0, 1.0, f64::INFINITY).is_err());
}

#[test]
fn conductivity_assembly_checks_frames() {
    let m = slab([0.3, 0.3, 0.3], 0.1);
    let spec = ConductivitySpec::ventricular();
    let short = FrameField(vec![Frame::identity(); 3]);
    assert!(matches!(assemble_conductivity(&m, &short, &spec), Err(Error::Dimension(_))));
    let mut bad = FrameField(vec![Frame::identity(); m.num_nodes()]);
    bad.0[5].e_l *= 2.0;
    assert!(matches!(assemble_conductivity(&m, &bad, &spec), Err(Error::Tensor(_))));
}

#[test]
fn default_schedule_times() {
    let all = vec![Chamber::Ra, Chamber::La, Chamber::Ventricles];
    let s = whole_heart_schedule(&ScheduleConfig::new(default_sites(), all)).unwrap();
    assert!(s.len() >= 5);
    let at = |n: &str| s.iter().find(|x| x.name == n).unwrap().stimulus.start;
    assert_eq!(at("SAN"), 0.0);
    assert_eq!(at("BB"), 28.0);
    assert_eq!(at("FO"), 42.0);
    assert_eq!(at("CSM"), 80.0);
    assert_eq!(at("AL"), 160.0);
    assert_eq!(at("SR"), 165.0);
    assert!(s.iter().all(|x| x.stimulus.radius == 0.25 && x.stimulus.duration == 3.0));
}

#[test]
fn single_chamber_schedule() {
    let s = whole_heart_schedule(&ScheduleConfig::new(default_sites(), vec![Chamber::Ventricles])).unwrap();
    assert!(!s.is_empty() && s.iter().all(|x| x.chamber == Chamber::Ventricles));

    let la = whole_heart_schedule(&ScheduleConfig::new(default_sites(), vec![Chamber::La])).unwrap();
    let times: Vec<(&str, f64)> = la.iter().map(|x| (x.name.as_str(), x.stimulus.start)).collect();
    assert_eq!(times, vec![("BB", 0.0), ("FO", 14.0), ("CSM", 52.0)]);
}

#[test]
fn schedule_missing_site_is_config_error() {
    let sites: Vec<Site> = default_sites().into_iter().filter(|s| s.name != "FO").collect();
    let r = whole_heart_schedule(&ScheduleConfig::new(sites, vec![Chamber::La]));
    assert!(matches!(r, Err(Error::Config(_))));
    assert!(whole_heart_schedule(&ScheduleConfig::new(default_sites(), vec![])).is_err());
    assert_eq!("LA".parse::<Chamber>().unwrap(), Chamber::La);
    assert!("atrium".parse::<Chamber>().is_err());
}

#[test]
fn synthetic_plane_wave_measures_exactly() {
    let m = slab([2.0, 0.3, 0.3], 0.05);
    let times: Vec<f64> = m.nodes().iter().map(|q| q[0] / 0.06).collect();
    let v = measure_cv(&m, &ActivationMap::from_vec(&times), &Vector3::x()).unwrap();
    assert!((v - 60.0).abs() < 1e-9, "{v}");

    let reversed: Vec<f64> = m.nodes().iter().map(|q| (2.0 - q[0]) / 0.06).collect();
    let r = measure_cv(&m, &ActivationMap::from_vec(&reversed), &Vector3::x());
    assert!(matches!(r, Err(Error::Measurement(_))));
    let r = measure_cv(&m, &ActivationMap::from_vec(&times), &Vector3::zeros());
    assert!(matches!(r, Err(Error::Measurement(_))));
}

#[test]
fn fit_stops_at_once_when_matched() {
    let ms = MitchellSchaeffer::ventricular();
    let setup = FitSetup::new(&ms, 0.05, 0.05);
    let v = cv_along(&setup, 1.0).unwrap();
    let f = fit_conductivity(v, &setup).unwrap();
    assert_eq!(f.iterations, 1);
    assert_eq!(f.sigma, 1.0);
    assert!(matches!(fit_conductivity(-1.0, &setup), Err(Error::Config(_))));
}

#[test]
fn fit_reports_trace_on_failure() {
    let ms = MitchellSchaeffer::ventricular();
    let setup = FitSetup { max_iter: 2, tol: 1e-9, ..FitSetup::new(&ms, 0.05, 0.05) };
    match fit_conductivity(55.0, &setup) {
        Err(Error::Fit { trace }) => assert_eq!(trace.len(), 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn parameter_and_stimulus_validation() {
    let m = slab([0.3, 0.3, 0.3], 0.1);
    let ms = MitchellSchaeffer::ventricular();
    let c = Conductivity::Isotropic(1.0);
    let bad = EpParams { bdf_order: 4, ..EpParams::default() };
    assert!(matches!(Monodomain::new(&m, &c, &ms, &[], &bad), Err(Error::Config(_))));
    let bad = EpParams { dt: 0.0, ..EpParams::default() };
    assert!(bad.validate().is_err());
    let s = Stimulus { radius: 0.0, ..Stimulus::at([0.0; 3], 0.0) };
    assert!(s.validate().is_err());
    let s = Stimulus { duration: -1.0, ..Stimulus::at([0.0; 3], 0.0) };
    assert!(s.validate().is_err());
    let far = Stimulus::at([10.0, 10.0, 10.0], 0.0);
    assert!(matches!(Monodomain::new(&m, &c, &ms, &[far], &EpParams::default()), Err(Error::Config(_))));
    let d = Stimulus::at([0.0; 3], 1.0);
    assert_eq!((d.radius, d.duration, d.amplitude), (0.25, 3.0, 50000.0));
    assert!(!d.active(0.5) && d.active(1.0) && d.active(3.9) && !d.active(4.0));
}

#[test]
fn activation_map_round_trip() {
    let a = ActivationMap { times: vec![Some(1.5), None, Some(0.0)] };
    assert_eq!(ActivationMap::from_vec(&a.to_vec()), a);
    assert_eq!(a.never(), vec![1]);
    assert_eq!((a.min(), a.max()), (Some(0.0), Some(1.5)));
    match a.require_complete() {
        Err(Error::Coverage { nodes }) => assert_eq!(nodes, vec![1]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ttp_cable_conducts() {
    let setup = FitSetup { mass: MassKind::Consistent, length: 1.0, ..FitSetup::new(&TenTusscher2006, 0.035, 0.05) };
    let v = cv_along(&setup, 1.07).unwrap();
    assert!(v > 30.0 && v < 90.0, "{v}");
}
