use ldrbm::ep::ActivationMap;
use ldrbm::frame::{rotate_frame, Frame, FrameField};
use ldrbm::metrics::*;
use ldrbm::Error;
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

fn field(fs: &[Vector3<f64>]) -> FrameField {
    FrameField(
        fs.iter()
            .map(|f| {
                let f = f.normalize();
                let helper = if f.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
                let n = f.cross(&helper).normalize();
                Frame { e_l: f, e_n: n, e_t: f.cross(&n) }
            })
            .collect(),
    )
}

fn unit() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-1.0f64..1.0).prop_filter_map("nonzero", |a| Vector3::from(a).try_normalize(1e-3))
}

#[test]
fn fiber_diff_examples() {
    let x = Vector3::x();
    let a = field(&[x, x, x]);
    let s = 0.5f64.sqrt();
    let b = field(&[x, -x, Vector3::new(s, s, 0.0)]);
    let d = fiber_diff(&a, &b).unwrap();
    assert_eq!(d[0], 0.0);
    assert_eq!(d[1], 0.0);
    assert!((d[2] - (1.0 - s)).abs() < 1e-12 && (d[2] - 0.2929).abs() < 1e-4);
    let d = fiber_diff(&field(&[x]), &field(&[Vector3::y()])).unwrap();
    assert!((d[0] - 1.0).abs() < 1e-15);
}

#[test]
fn fiber_diff_only_compares_fibers() {
    let f = Frame::identity();
    let g = rotate_frame(&f, 0.0, 40.0);
    assert_eq!(g.e_l, f.e_l);
    let d = fiber_diff(&FrameField(vec![f]), &FrameField(vec![g])).unwrap();
    assert!(d[0].abs() < 1e-15);
}

#[test]
fn fiber_diff_length_mismatch() {
    let a = field(&[Vector3::x()]);
    let b = field(&[Vector3::x(), Vector3::y()]);
    assert!(matches!(fiber_diff(&a, &b), Err(Error::Dimension(_))));
}

#[test]
fn fiber_diff_is_not_a_metric() {
    // 1 - |cos| fails the triangle inequality: 0 -> 45 -> 90 degrees
    let s = 0.5f64.sqrt();
    let (a, b, c) = (Vector3::x(), Vector3::new(s, s, 0.0), Vector3::y());
    let d = |p: Vector3<f64>, q: Vector3<f64>| fiber_diff(&field(&[p]), &field(&[q])).unwrap()[0];
    assert!(d(a, c) > d(a, b) + d(b, c));
}

proptest! {
    #[test]
    fn fiber_diff_symmetric_and_bounded(p in unit(), q in unit()) {
        let (a, b) = (field(&[p]), field(&[q]));
        let x = fiber_diff(&a, &b).unwrap()[0];
        let y = fiber_diff(&b, &a).unwrap()[0];
        prop_assert_eq!(x, y);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!(fiber_diff(&a, &a).unwrap()[0] < 1e-15);
    }

    #[test]
    fn chord_of_fiber_diff_is_a_metric(p in unit(), q in unit(), r in unit()) {
        // sqrt(2 diff) is the chord between the lines through p and q
        let d = |u: Vector3<f64>, v: Vector3<f64>| (2.0 * fiber_diff(&field(&[u]), &field(&[v])).unwrap()[0]).sqrt();
        prop_assert!(d(p, r) <= d(p, q) + d(q, r) + 1e-12);
    }

    #[test]
    fn fiber_diff_rotation_invariant(p in unit(), q in unit(), e in prop::array::uniform3(-3.0f64..3.0)) {
        let r = Rotation3::from_euler_angles(e[0], e[1], e[2]);
        let x = fiber_diff(&field(&[p]), &field(&[q])).unwrap()[0];
        let y = fiber_diff(&field(&[r * p]), &field(&[r * q])).unwrap()[0];
        prop_assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn activation_shift_is_uniform(t in prop::collection::vec(0.0f64..300.0, 1..50), s in 0.0f64..100.0) {
        let a = ActivationMap::from_vec(&t);
        let shifted: Vec<f64> = t.iter().map(|v| v + s).collect();
        let r = activation_diff(&a, &ActivationMap::from_vec(&shifted)).unwrap();
        prop_assert!(r.delta.iter().all(|d| (d - s).abs() < 1e-9));
        prop_assert!((r.max - s).abs() < 1e-9);
    }
}

#[test]
fn activation_diff_values() {
    let a = ActivationMap::from_vec(&[0.0, 10.0, 20.0]);
    let b = ActivationMap::from_vec(&[0.0, 15.0, 18.0]);
    let r = activation_diff(&a, &b).unwrap();
    assert_eq!(r.delta, vec![0.0, 5.0, 2.0]);
    assert_eq!(r.max, 5.0);
    assert!((r.relative - 0.25).abs() < 1e-15);
    let same = activation_diff(&a, &a).unwrap();
    assert_eq!((same.max, same.relative), (0.0, 0.0));
}

#[test]
fn activation_diff_requires_coverage() {
    let a = ActivationMap::from_vec(&[0.0, -1.0, 2.0, 3.0]);
    let b = ActivationMap::from_vec(&[0.0, 1.0, 2.0, -1.0]);
    match activation_diff(&a, &b) {
        Err(Error::Coverage { nodes }) => assert_eq!(nodes, vec![1, 3]),
        other => panic!("{other:?}"),
    }
    let c = ActivationMap::from_vec(&[0.0]);
    assert!(matches!(activation_diff(&a, &c), Err(Error::Dimension(_))));
}

#[test]
fn summary_quantiles() {
    let v: Vec<f64> = (0..=100).map(f64::from).collect();
    let s = summarize(&v).unwrap();
    assert_eq!(s.count, 101);
    assert_eq!((s.min, s.max, s.mean), (0.0, 100.0, 50.0));
    assert_eq!((s.q05, s.q25, s.q50, s.q75, s.q95), (5.0, 25.0, 50.0, 75.0, 95.0));
    assert_eq!(quantile_sorted(&[1.0, 2.0], 0.5), 1.5);
    let with_nan = summarize(&[1.0, f64::NAN, 3.0]).unwrap();
    assert_eq!((with_nan.count, with_nan.mean), (2, 2.0));
    assert!(matches!(summarize(&[]), Err(Error::Measurement(_))));
}

#[test]
fn masked_mean_and_display_mask() {
    let v = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(masked_mean(&v, &[true, false, true, false]), Some(2.0));
    assert_eq!(masked_mean(&v, &[false; 4]), None);
    assert_eq!(display_mask(&[0.1, 0.25, 0.3], 0.25), vec![0, 1, 1]);
}

#[test]
fn histogram_bins() {
    let v = [0.0, 0.1, 0.5, 0.99, 1.0, 1.5, -0.2];
    let h = histogram(&v, 0.0, 1.0, 4);
    assert_eq!(h.counts, vec![2, 0, 1, 2]);
    assert_eq!(h.counts.iter().sum::<usize>(), 5);
    let flat = histogram(&[2.0, 2.0], 2.0, 2.0, HISTOGRAM_BINS);
    assert_eq!(flat.counts.len(), HISTOGRAM_BINS);
    assert_eq!(flat.counts[0], 2);
}

#[test]
fn csv_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
    let p = dir.path().join("summary.csv");
    write_summary_csv(&p, &[("all".to_string(), s)]).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "name,count,min,max,mean,q05,q25,q50,q75,q95");
    assert!(lines.next().unwrap().starts_with("all,3,1,3,2,"));

    let p = dir.path().join("hist.csv");
    write_histogram_csv(&p, &histogram(&[0.0, 1.0], 0.0, 1.0, 2)).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), vec!["bin_lo,bin_hi,count", "0,0.5,1", "0.5,1,1"]);
}
