//! Ventricular rule-based fibers: R-RBM, B-RBM and D-RBM.

use crate::error::{Error, Result};
use crate::frame::{angle_at, axis, bislerp, rotate_frame, Frame, FrameField};
use crate::laplace::{nodal_gradient, DirichletSpec, LaplaceSolver, ScalarField, VectorField};
use crate::mesh::{resolve_tags, Method, Mesh, TagSchema};
use nalgebra::Vector3;
use rayon::prelude::*;

/// Ventricular method variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VentricularMethod {
    R,
    B,
    D,
}

impl VentricularMethod {
    pub fn schema_method(self) -> Method {
        match self {
            VentricularMethod::R => Method::Rrbm,
            VentricularMethod::B => Method::Brbm,
            VentricularMethod::D => Method::Drbm,
        }
    }
}

impl std::str::FromStr for VentricularMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R" | "R-RBM" | "RRBM" => Ok(VentricularMethod::R),
            "B" | "B-RBM" | "BRBM" => Ok(VentricularMethod::B),
            "D" | "D-RBM" | "DRBM" => Ok(VentricularMethod::D),
            _ => Err(Error::Config(format!("unknown ventricular method '{s}'"))),
        }
    }
}

/// Helix (alpha) and sheet (beta) angles for the outflow tracts (degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtAngles {
    pub alpha_epi: f64,
    pub alpha_endo: f64,
    pub beta_epi: f64,
    pub beta_endo: f64,
}

impl OtAngles {
    pub fn histology() -> Self {
        OtAngles { alpha_epi: 0.0, alpha_endo: 90.0, beta_epi: 0.0, beta_endo: 0.0 }
    }
}

/// Rotation angles in degrees for the left (`_l`) and right (`_r`) ventricle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VentricularAngles {
    pub alpha_epi_l: f64,
    pub alpha_endo_l: f64,
    pub alpha_epi_r: f64,
    pub alpha_endo_r: f64,
    pub beta_epi_l: f64,
    pub beta_endo_l: f64,
    pub beta_epi_r: f64,
    pub beta_endo_r: f64,
    pub ot: Option<OtAngles>,
}

impl VentricularAngles {
    /// Histology-based defaults.
    pub fn histology() -> Self {
        VentricularAngles {
            alpha_epi_l: -60.0,
            alpha_endo_l: 60.0,
            alpha_epi_r: -25.0,
            alpha_endo_r: 90.0,
            beta_epi_l: 20.0,
            beta_endo_l: -20.0,
            beta_epi_r: 20.0,
            beta_endo_r: 0.0,
            ot: None,
        }
    }

    pub fn zero() -> Self {
        VentricularAngles {
            alpha_epi_l: 0.0,
            alpha_endo_l: 0.0,
            alpha_epi_r: 0.0,
            alpha_endo_r: 0.0,
            beta_epi_l: 0.0,
            beta_endo_l: 0.0,
            beta_epi_r: 0.0,
            beta_endo_r: 0.0,
            ot: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut all = vec![
            self.alpha_epi_l, self.alpha_endo_l, self.alpha_epi_r, self.alpha_endo_r,
            self.beta_epi_l, self.beta_endo_l, self.beta_epi_r, self.beta_endo_r,
        ];
        if let Some(o) = self.ot {
            all.extend([o.alpha_epi, o.alpha_endo, o.beta_epi, o.beta_endo]);
        }
        match all.iter().find(|a| !(-180.0..=180.0).contains(*a)) {
            Some(a) => Err(Error::Config(format!("angle {a} outside [-180, 180] degrees"))),
            None => Ok(()),
        }
    }
}

/// Numerical options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VentricularOptions {
    /// Relative residual of every Laplace solve.
    pub tol: f64,
    /// B-RBM: nodes with min(phi_l, phi_r) above this get septal angles.
    pub septum_threshold: f64,
    /// D-RBM: nodes with w_i below this use the outflow-tract angles.
    pub ot_threshold: f64,
}

impl Default for VentricularOptions {
    fn default() -> Self {
        VentricularOptions { tol: crate::laplace::DEFAULT_TOL, septum_threshold: 0.05, ot_threshold: 0.5 }
    }
}

/// Result of a ventricular fiber generation.
#[derive(Debug, Clone)]
pub struct VentricularFibers {
    pub frames: FrameField,
    /// Unit transmural direction of each unrotated frame (its e_t).
    pub transmural: VectorField,
    /// Intermediate Laplace solutions by name.
    pub fields: Vec<(String, ScalarField)>,
    /// True where the node is attributed to the left ventricle.
    pub left: Vec<bool>,
}

impl VentricularFibers {
    pub fn field(&self, name: &str) -> Option<&ScalarField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

/// Builds frames with `axis(k_i, gamma_i)` at every node where `needed` is
/// set. Degenerate nodes borrow the inputs of the nearest regular node.
pub(crate) fn frames_with_fallback(
    mesh: &Mesh,
    needed: &[bool],
    k: &[Vector3<f64>],
    gamma: &[Vector3<f64>],
) -> Result<Vec<Option<Frame>>> {
    let n = mesh.num_nodes();
    let mut out: Vec<Option<Frame>> = (0..n)
        .into_par_iter()
        .map(|i| if needed[i] { axis(&k[i], &gamma[i]).ok() } else { None })
        .collect();
    let bad: Vec<usize> = (0..n).filter(|&i| needed[i] && out[i].is_none()).collect();
    if bad.is_empty() {
        return Ok(out);
    }
    let good: Vec<usize> = (0..n).filter(|&i| needed[i] && out[i].is_some()).collect();
    let mut failed = Vec::new();
    for &i in &bad {
        let p = mesh.node(i);
        let near = good
            .iter()
            .min_by(|&&a, &&b| (mesh.node(a) - p).norm_squared().total_cmp(&(mesh.node(b) - p).norm_squared()));
        let fr = near.and_then(|&j| {
            axis(&k[j], &gamma[i]).or_else(|_| axis(&k[j], &gamma[j])).ok()
        });
        match fr {
            Some(f) => out[i] = Some(f),
            None => failed.push(i),
        }
    }
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(Error::Fiber { nodes: failed })
    }
}

fn spec(entries: &[(&str, f64)]) -> Result<DirichletSpec> {
    DirichletSpec::new(entries.iter().map(|(n, v)| (n.to_string(), *v)))
}

/// Area-weighted mean outward normal of the base.
pub fn base_normal(mesh: &Mesh) -> Result<Vector3<f64>> {
    let ids = resolve_tags(mesh, "base")?;
    let s: Vector3<f64> = mesh.facets_with(&ids).iter().map(|&f| mesh.facet_area_vector(f)).sum();
    let n = s.norm();
    if n == 0.0 {
        return Err(Error::Geometry("base normals cancel out".into()));
    }
    Ok(s / n)
}

/// Generates the ventricular frame field.
pub fn generate_ventricular_fibers(
    mesh: &Mesh,
    method: VentricularMethod,
    angles: &VentricularAngles,
    opts: &VentricularOptions,
) -> Result<VentricularFibers> {
    TagSchema::for_method(method.schema_method()).check(mesh)?;
    angles.validate()?;
    let solver = LaplaceSolver::new(mesh);
    let solve = |entries: &[(&str, f64)]| solver.solve(&spec(entries)?, opts.tol);
    let n = mesh.num_nodes();
    match method {
        VentricularMethod::R => {
            let phi = solve(&[("lv", 1.0), ("rv-s", 1.0), ("epi", 0.0), ("rs", 0.0)])?;
            let xi = solve(&[("lv", 1.0), ("rv", -1.0)])?;
            let k = base_normal(mesh)?;
            let g = nodal_gradient(mesh, &phi);
            let q = frames_with_fallback(mesh, &vec![true; n], &vec![k; n], &g.0)?;
            let left: Vec<bool> = xi.0.iter().map(|&x| x > 0.0).collect();
            let frames: Vec<Frame> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let d = phi.0[i].clamp(0.0, 1.0);
                    let (a, b) = side_angles(angles, left[i], d);
                    rotate_frame(q[i].as_ref().expect("frame"), a, b)
                })
                .collect();
            let transmural = VectorField(q.iter().map(|f| f.expect("frame").e_t).collect());
            Ok(VentricularFibers {
                frames: FrameField(frames),
                transmural,
                fields: vec![("phi".into(), phi), ("xi".into(), xi)],
                left,
            })
        }
        VentricularMethod::B => brbm(mesh, &solve, angles, opts),
        VentricularMethod::D => drbm(mesh, &solve, angles, opts),
    }
}

fn side_angles(angles: &VentricularAngles, left: bool, d: f64) -> (f64, f64) {
    if left {
        (angle_at(d, angles.alpha_endo_l, angles.alpha_epi_l), angle_at(d, angles.beta_endo_l, angles.beta_epi_l))
    } else {
        (angle_at(d, angles.alpha_endo_r, angles.alpha_epi_r), angle_at(d, angles.beta_endo_r, angles.beta_epi_r))
    }
}

fn brbm(
    mesh: &Mesh,
    solve: &dyn Fn(&[(&str, f64)]) -> Result<ScalarField>,
    angles: &VentricularAngles,
    opts: &VentricularOptions,
) -> Result<VentricularFibers> {
    let n = mesh.num_nodes();
    let phi_l = solve(&[("lv", 1.0), ("epi", 0.0), ("rv", 0.0)])?;
    let phi_r = solve(&[("rv", 1.0), ("epi", 0.0), ("lv", 0.0)])?;
    let phi_epi = solve(&[("epi", 1.0), ("lv", 0.0), ("rv", 0.0)])?;
    let psi = solve(&[("rings", 1.0), ("la-apex", 0.0)])?;
    let xi = solve(&[("lv", 1.0), ("rv", -1.0)])?;
    let g_l = nodal_gradient(mesh, &phi_l);
    let g_r = nodal_gradient(mesh, &phi_r);
    let g_epi = nodal_gradient(mesh, &phi_epi);
    let k = nodal_gradient(mesh, &psi);
    let t_endo: Vec<f64> = (0..n)
        .map(|i| {
            let s = phi_l.0[i] + phi_r.0[i];
            if s > 1e-12 { (phi_r.0[i] / s).clamp(0.0, 1.0) } else { 0.0 }
        })
        .collect();
    let t_epi: Vec<f64> = phi_epi.0.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    const W: f64 = 1e-12;
    let need_l: Vec<bool> = (0..n).map(|i| t_epi[i] < 1.0 - W && t_endo[i] < 1.0 - W).collect();
    let need_r: Vec<bool> = (0..n).map(|i| t_epi[i] < 1.0 - W && t_endo[i] > W).collect();
    let need_e: Vec<bool> = (0..n).map(|i| t_epi[i] > W).collect();
    // Transmural directions all point towards an endocardium.
    let neg_epi: Vec<Vector3<f64>> = g_epi.0.iter().map(|v| -v).collect();
    let p_l = frames_with_fallback(mesh, &need_l, &k.0, &g_l.0)?;
    let p_r = frames_with_fallback(mesh, &need_r, &k.0, &g_r.0)?;
    let p_e = frames_with_fallback(mesh, &need_e, &k.0, &neg_epi)?;
    let left: Vec<bool> = xi.0.iter().map(|&x| x > 0.0).collect();
    let q: Vec<Frame> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p_endo = match (p_l[i], p_r[i]) {
                (Some(a), Some(b)) => bislerp(&a, &b, t_endo[i]),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => p_e[i].expect("frame"),
            };
            let mut q = match p_e[i] {
                Some(e) if t_epi[i] < 1.0 - W => bislerp(&p_endo, &e, t_epi[i]),
                Some(e) => e,
                None => p_endo,
            };
            let reference = if left[i] { g_l.0[i] } else { g_r.0[i] };
            if q.e_t.dot(&reference) < 0.0 {
                q = Frame { e_l: -q.e_l, e_n: q.e_n, e_t: -q.e_t };
            }
            q
        })
        .collect();
    let frames: Vec<Frame> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (pl, pr) = (phi_l.0[i].clamp(0.0, 1.0), phi_r.0[i].clamp(0.0, 1.0));
            let (a, b) = if pl.min(pr) > opts.septum_threshold {
                let (d, ae, be) = if left[i] {
                    (pr / (pl + pr), angles.alpha_endo_l, angles.beta_endo_l)
                } else {
                    (pl / (pl + pr), angles.alpha_endo_r, angles.beta_endo_r)
                };
                (ae * (1.0 - 2.0 * d), be * (1.0 - 2.0 * d))
            } else {
                side_angles(angles, left[i], if left[i] { pl } else { pr })
            };
            rotate_frame(&q[i], a, b)
        })
        .collect();
    Ok(VentricularFibers {
        frames: FrameField(frames),
        transmural: VectorField(q.iter().map(|f| f.e_t).collect()),
        fields: vec![
            ("phi_l".into(), phi_l),
            ("phi_r".into(), phi_r),
            ("phi_epi".into(), phi_epi),
            ("psi".into(), psi),
            ("xi".into(), xi),
        ],
        left,
    })
}

fn drbm(
    mesh: &Mesh,
    solve: &dyn Fn(&[(&str, f64)]) -> Result<ScalarField>,
    angles: &VentricularAngles,
    opts: &VentricularOptions,
) -> Result<VentricularFibers> {
    let n = mesh.num_nodes();
    let phi = solve(&[("lv", 2.0), ("rv", -1.0), ("epi", 0.0)])?;
    let ab_l = solve(&[("mv", 1.0), ("la-apex", 0.0)])?;
    let ab_r = solve(&[("tv", 1.0), ("ra-apex", 0.0)])?;
    let ot_l = solve(&[("av", 1.0), ("la-apex", 0.0)])?;
    let ot_r = solve(&[("pv", 1.0), ("ra-apex", 0.0)])?;
    let w_l = solve(&[("mv", 1.0), ("la-apex", 1.0), ("av", 0.0)])?;
    let w_r = solve(&[("tv", 1.0), ("ra-apex", 1.0), ("pv", 0.0)])?;
    let xi = solve(&[("lv", 2.0), ("rv", -1.0)])?;
    let g = nodal_gradient(mesh, &phi);
    let (gab_l, gab_r) = (nodal_gradient(mesh, &ab_l), nodal_gradient(mesh, &ab_r));
    let (got_l, got_r) = (nodal_gradient(mesh, &ot_l), nodal_gradient(mesh, &ot_r));
    let left: Vec<bool> = xi.0.iter().map(|&x| x > 0.0).collect();
    let k: Vec<Vector3<f64>> = (0..n)
        .map(|i| {
            if left[i] {
                gab_l.0[i] * w_l.0[i] + got_l.0[i] * (1.0 - w_l.0[i])
            } else {
                gab_r.0[i] * w_r.0[i] + got_r.0[i] * (1.0 - w_r.0[i])
            }
        })
        .collect();
    // Right-attributed frames use -grad(phi) so that e_t points to the right endocardium.
    let gamma: Vec<Vector3<f64>> = (0..n).map(|i| if left[i] { g.0[i] } else { -g.0[i] }).collect();
    let q = frames_with_fallback(mesh, &vec![true; n], &k, &gamma)?;
    let frames: Vec<Frame> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (d, w) = if left[i] {
                ((phi.0[i] / 2.0).clamp(0.0, 1.0), w_l.0[i])
            } else {
                (phi.0[i].abs().clamp(0.0, 1.0), w_r.0[i])
            };
            let (a, b) = match angles.ot {
                Some(o) if w < opts.ot_threshold => {
                    (angle_at(d, o.alpha_endo, o.alpha_epi), angle_at(d, o.beta_endo, o.beta_epi))
                }
                _ => side_angles(angles, left[i], d),
            };
            rotate_frame(q[i].as_ref().expect("frame"), a, b)
        })
        .collect();
    Ok(VentricularFibers {
        frames: FrameField(frames),
        transmural: VectorField(q.iter().map(|f| f.expect("frame").e_t).collect()),
        fields: vec![
            ("phi".into(), phi),
            ("psi_ab_l".into(), ab_l),
            ("psi_ab_r".into(), ab_r),
            ("psi_ot_l".into(), ot_l),
            ("psi_ot_r".into(), ot_r),
            ("w_l".into(), w_l),
            ("w_r".into(), w_r),
            ("xi".into(), xi),
        ],
        left,
    })
}

/// Helix angle (degrees) of fiber `f` relative to a wall with normal
/// `normal` and long axis `long_axis`: the angle from the circumferential
/// direction towards the projected long axis, folded into (-90, 90].
/// `None` when the normal is (nearly) parallel to the long axis.
pub fn helix_angle(f: &Vector3<f64>, normal: &Vector3<f64>, long_axis: &Vector3<f64>) -> Option<f64> {
    let t = normal.try_normalize(1e-300)?;
    let n_ref = (long_axis - t * long_axis.dot(&t)).try_normalize(1e-6 * long_axis.norm())?;
    let l_ref = n_ref.cross(&t);
    let mut a = f.dot(&n_ref).atan2(f.dot(&l_ref)).to_degrees();
    if a > 90.0 {
        a -= 180.0;
    } else if a <= -90.0 {
        a += 180.0;
    }
    Some(a)
}
