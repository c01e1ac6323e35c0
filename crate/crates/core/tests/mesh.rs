use approx::assert_relative_eq;
use ldrbm::fem::{hex_jacobian, GAUSS_POINTS};
use ldrbm::mesh::*;
use ldrbm::{Error, Frame, FrameField};
use std::path::Path;

const CUBE: &str = "# vtk DataFile Version 3.0
cube
ASCII
DATASET UNSTRUCTURED_GRID
POINTS 8 double
0 0 0
1 0 0
0 1 0
1 1 0
0 0 1
1 0 1
0 1 1
1 1 1
CELLS 7 39
8 0 1 3 2 4 5 7 6
4 0 4 6 2
4 1 3 7 5
4 0 1 5 4
4 3 2 6 7
4 0 2 3 1
4 4 5 7 6
CELL_TYPES 7
12
9
9
9
9
9
9
CELL_DATA 7
SCALARS boundary_tag int 1
LOOKUP_TABLE default
-1
0
1
2
3
4
5
";

const CUBE_TAGS: &str = "# faces\nleft = 0\nright = 1\nfront = 2\nback = 3\nbottom = 4\nlid = 5\n";

fn write_cube(dir: &Path, vtk: &str) -> std::path::PathBuf {
    let p = dir.join("cube.vtk");
    std::fs::write(&p, vtk).unwrap();
    std::fs::write(dir.join("cube.tags"), CUBE_TAGS).unwrap();
    p
}

fn tag_area_sum(m: &Mesh) -> f64 {
    m.tag_areas().values().sum()
}

#[test]
fn single_hex_cube_loads() {
    let dir = tempfile::tempdir().unwrap();
    let m = load_mesh(&write_cube(dir.path(), CUBE)).unwrap();
    assert_eq!(m.num_nodes(), 8);
    assert_eq!(m.num_elements(), 1);
    assert_eq!(m.facets().len(), 6);
    assert_eq!(m.tags().len(), 6);
    assert_eq!(m.nodes_tagged("lid").unwrap().len(), 4);
}

#[test]
fn untagged_face_is_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    // drop the last quad (z = 1 face)
    let text = CUBE
        .replace("CELLS 7 39", "CELLS 6 34")
        .replace("4 4 5 7 6\n", "")
        .replace("CELL_TYPES 7\n12\n9\n9\n9\n9\n9\n9", "CELL_TYPES 6\n12\n9\n9\n9\n9\n9")
        .replace("CELL_DATA 7", "CELL_DATA 6")
        .replace("4\n5\n", "4\n");
    let err = load_mesh(&write_cube(dir.path(), &text)).unwrap_err();
    assert!(matches!(err, Error::Schema(_)), "{err}");
}

#[test]
fn missing_sidecar_is_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("lonely.vtk");
    std::fs::write(&p, CUBE).unwrap();
    assert!(matches!(load_mesh(&p), Err(Error::Schema(_))));
}

#[test]
fn garbage_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cube(dir.path(), "not a vtk file\n");
    assert!(matches!(load_mesh(&p), Err(Error::Parse { .. })));
}

#[test]
fn slab_round_trip_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_slab([1.0, 0.5, 0.3], 0.1).unwrap();
    let p = dir.path().join("slab.vtk");
    save_fields(&m, &FieldSet::new(), &p).unwrap();
    let back = load_mesh(&p).unwrap();
    assert_eq!(back, m);
}

#[test]
fn field_round_trip_preserves_values() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_slab([1.0, 0.5, 0.3], 0.1).unwrap();
    let n = m.num_nodes();
    let scal: Vec<f64> = (0..n).map(|i| (i as f64 * 0.731).sin() / 3.0).collect();
    let vecs: Vec<[f64; 3]> = (0..n).map(|i| [i as f64 * 1e-7, -1.0 / 7.0, 1e300]).collect();
    let labels: Vec<i32> = (0..n as i32).map(|i| i % 5 - 2).collect();
    let frames = FrameField(
        (0..n)
            .map(|i| {
                let t = i as f64 * 0.01;
                Frame::from_matrix(&nalgebra::Rotation3::from_euler_angles(t, 2.0 * t, -t).into_inner())
            })
            .collect(),
    );
    let mut fs = FieldSet::new();
    fs.push("s", Field::Scalar(scal.clone()))
        .push("v", Field::Vector(vecs.clone()))
        .push("lab", Field::Labels(labels.clone()))
        .push("frames", Field::Frames(frames.clone()));
    let p = dir.path().join("f.vtk");
    save_fields(&m, &fs, &p).unwrap();
    let (back, got) = load_fields(&p).unwrap();
    assert_eq!(back, m);
    for (a, b) in got.scalar("s").unwrap().iter().zip(&scal) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
    assert_eq!(got.vector("v").unwrap(), &vecs[..]);
    assert_eq!(got.labels("lab").unwrap(), &labels[..]);
    let f2 = got.frames().unwrap();
    for (a, b) in f2.0.iter().zip(&frames.0) {
        assert!((a.matrix() - b.matrix()).abs().max() < 1e-12);
    }
}

#[test]
fn constant_scalar_written_as_ones() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_slab([0.2, 0.2, 0.2], 0.1).unwrap();
    let mut fs = FieldSet::new();
    fs.push("one", Field::Scalar(vec![1.0; m.num_nodes()]));
    let p = dir.path().join("one.vtk");
    save_fields(&m, &fs, &p).unwrap();
    let (_, got) = load_fields(&p).unwrap();
    assert!(got.scalar("one").unwrap().iter().all(|&x| x == 1.0));
}

#[test]
fn frame_field_written_as_three_unit_arrays() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_slab([0.2, 0.2, 0.2], 0.1).unwrap();
    let mut fs = FieldSet::new();
    fs.push("frames", Field::Frames(FrameField(vec![Frame::identity(); m.num_nodes()])));
    let p = dir.path().join("fr.vtk");
    save_fields(&m, &fs, &p).unwrap();
    let (_, got) = load_fields(&p).unwrap();
    for name in ["fiber", "sheet", "crossfiber"] {
        let v = got.vector(name).unwrap();
        assert!(v.iter().all(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - 1.0).abs() < 1e-14));
    }
}

#[test]
fn wrong_length_field_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_slab([0.2, 0.2, 0.2], 0.1).unwrap();
    let mut fs = FieldSet::new();
    fs.push("x", Field::Scalar(vec![0.0; 3]));
    assert!(matches!(save_fields(&m, &fs, &dir.path().join("x.vtk")), Err(Error::Dimension(_))));
}

#[test]
fn benchmark_slab_counts() {
    let m = generate_slab([2.0, 0.7, 0.3], 0.035).unwrap();
    // 57 x 20 x 9 elements; the z spacing is stretched to 0.3 / 9
    assert_eq!(m.num_elements(), 57 * 20 * 9);
    assert_eq!(m.num_nodes(), 58 * 21 * 10);
}

#[test]
fn one_element_slab() {
    let m = generate_slab([0.1, 0.1, 0.1], 0.1).unwrap();
    assert_eq!(m.num_nodes(), 8);
    assert_eq!(m.num_elements(), 1);
}

#[test]
fn slab_face_tags() {
    let m = generate_slab([1.0, 0.4, 0.2], 0.1).unwrap();
    let x0 = m.tags().id("x0").unwrap();
    for f in m.facets() {
        let on_x0 = f.nodes.iter().all(|&i| m.nodes()[i][0] == 0.0);
        assert_eq!(on_x0, f.tag == x0);
    }
    assert_relative_eq!(tag_area_sum(&m), m.boundary_area(), max_relative = 1e-10);
    assert_relative_eq!(m.boundary_area(), 2.0 * (0.4 + 0.2 + 0.08), max_relative = 1e-12);
}

#[test]
fn invalid_slab_rejected() {
    assert!(matches!(generate_slab([1.0, 0.0, 1.0], 0.1), Err(Error::Geometry(_))));
    assert!(matches!(generate_slab([1.0, 1.0, 1.0], -0.1), Err(Error::Geometry(_))));
}

#[test]
fn inverted_element_rejected() {
    let mut nodes: Vec<Point> = vec![
        [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0],
        [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 1.0],
    ];
    nodes.swap(0, 7);
    let r = Mesh::new(nodes, vec![[0, 1, 3, 2, 4, 5, 7, 6]], vec![], TagRegistry::new());
    assert!(matches!(r, Err(Error::Geometry(_))));
}

fn assert_positive_jacobians(m: &Mesh) {
    for e in 0..m.num_elements() {
        let x = m.element_coords(e);
        for gp in GAUSS_POINTS.iter() {
            assert!(hex_jacobian(&x, gp).1 > 0.0);
        }
    }
}

#[test]
fn biventricle_defaults() {
    let p = BiventricleParams::default();
    let m = generate_ideal_biventricle(&p).unwrap();
    for t in TagSchema::for_method(Method::Rrbm).required_tags {
        resolve_tags(&m, t).unwrap();
    }
    TagSchema::for_method(Method::Brbm).check(&m).unwrap();
    TagSchema::for_method(Method::Drbm).check(&m).unwrap();
    assert_relative_eq!(tag_area_sum(&m), m.boundary_area(), max_relative = 1e-10);
    // base facets lie on z = 0
    let rings = resolve_tags(&m, "rings").unwrap();
    for f in m.facets().iter().filter(|f| rings.contains(&f.tag)) {
        assert!(f.nodes.iter().all(|&i| m.nodes()[i][2].abs() < 1e-12));
    }
    // lv and epi are disjoint facet sets
    let lv = m.tags().id("lv").unwrap();
    let epi = m.tags().id("epi").unwrap();
    assert!(m.facets().iter().all(|f| !(f.tag == lv && f.tag == epi)));
    assert_positive_jacobians(&m);
}

#[test]
fn biventricle_septum_patch_near_left_cavity() {
    let p = BiventricleParams::default();
    let m = generate_ideal_biventricle(&p).unwrap();
    let rs = m.tags().id("rs").unwrap();
    let rvs = m.tags().id("rv-s").unwrap();
    let thr = p.septum_threshold();
    let lv_nodes: Vec<_> = m.nodes_tagged("lv").unwrap().into_iter().map(|i| m.node(i)).collect();
    let dist = |c: nalgebra::Vector3<f64>| lv_nodes.iter().map(|q| (q - c).norm()).fold(f64::INFINITY, f64::min);
    let mut n_rs = 0;
    for (i, f) in m.facets().iter().enumerate() {
        if f.tag == rs {
            n_rs += 1;
            assert!(dist(m.facet_centroid(i)) < thr, "rs facet too far from the left cavity");
        } else if f.tag == rvs {
            assert!(dist(m.facet_centroid(i)) >= thr);
        }
    }
    assert!(n_rs > 0);
}

#[test]
fn biventricle_regions_cover_both_walls() {
    let p = BiventricleParams::default();
    let m = generate_ideal_biventricle(&p).unwrap();
    let r = biventricle_regions(&m, &p);
    for code in [REGION_SEPTUM, REGION_LV_FREE, REGION_RV_FREE] {
        assert!(r.iter().filter(|&&c| c == code).count() > 100);
    }
}

#[test]
fn generators_are_deterministic() {
    let p = BiventricleParams { h: 0.15, ..Default::default() };
    assert_eq!(generate_ideal_biventricle(&p).unwrap(), generate_ideal_biventricle(&p).unwrap());
    let a = AtriumParams::left();
    assert_eq!(generate_ideal_atrium(&a).unwrap(), generate_ideal_atrium(&a).unwrap());
}

#[test]
fn atria_carry_their_schemas() {
    let ra = generate_ideal_atrium(&AtriumParams::right()).unwrap();
    TagSchema::for_method(Method::AtrialRa).check(&ra).unwrap();
    assert_relative_eq!(tag_area_sum(&ra), ra.boundary_area(), max_relative = 1e-10);
    assert_positive_jacobians(&ra);
    let la = generate_ideal_atrium(&AtriumParams::left()).unwrap();
    TagSchema::for_method(Method::AtrialLa).check(&la).unwrap();
    assert_relative_eq!(tag_area_sum(&la), la.boundary_area(), max_relative = 1e-10);
}

#[test]
fn atrium_wall_thickness() {
    let p = AtriumParams::right();
    let m = generate_ideal_atrium(&p).unwrap();
    let r = |name: &str| -> f64 {
        let ids = m.nodes_tagged(name).unwrap();
        ids.iter().map(|&i| m.node(i).norm()).sum::<f64>() / ids.len() as f64
    };
    let t = r("epi") - r("endo");
    assert!((t - p.thickness).abs() <= p.h, "wall thickness {t}");
}

#[test]
fn tricuspid_rim_halves_are_disjoint() {
    let m = generate_ideal_atrium(&AtriumParams::right()).unwrap();
    let s = m.tags().id("tv-s").unwrap();
    let f = m.tags().id("tv-f").unwrap();
    let ns = m.facets().iter().filter(|x| x.tag == s).count();
    let nf = m.facets().iter().filter(|x| x.tag == f).count();
    assert!(ns > 0 && nf > 0);
    // every tv facet is in exactly one half
    assert_eq!(resolve_tags(&m, "tv").unwrap().len(), 2);
    let ratio = ns as f64 / (ns + nf) as f64;
    assert!((0.3..0.7).contains(&ratio), "tv split {ratio}");
}

#[test]
fn missing_tag_names_schema() {
    let m = generate_slab([0.3, 0.3, 0.3], 0.1).unwrap();
    let err = TagSchema::for_method(Method::AtrialRa).check(&m).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Tag(_)));
    assert!(msg.contains("TagSchema") && msg.contains("tv-s"), "{msg}");
}

#[test]
fn tag_registry_rejects_duplicates() {
    assert!(TagRegistry::from_pairs([("a", 1), ("a", 2)]).is_err());
    assert!(TagRegistry::from_pairs([("a", 1), ("b", 1)]).is_err());
}
