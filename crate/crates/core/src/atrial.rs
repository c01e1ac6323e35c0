//! Atrial rule-based fibers: intra-atrial distances, bundle selection and
//! the resulting frame field.

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameField};
use crate::laplace::{nodal_gradient, DirichletSpec, LaplaceSolver, ScalarField};
use crate::mesh::{resolve_tags, AtriumSide, Method, Mesh, TagSchema};
use crate::ventricular::frames_with_fallback;
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Bundle thresholds on the intra-atrial distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtrialTaus {
    pub tau_mv: f64,
    pub tau_lpv: f64,
    pub tau_rpv: f64,
    pub tau_tv: f64,
    pub tau_icv: f64,
    pub tau_scv: f64,
    pub tau_ct_plus: f64,
    pub tau_ct_minus: f64,
    pub tau_ib: f64,
    pub tau_ras: f64,
    pub tau_raw: f64,
}

impl AtrialTaus {
    /// Values for the idealized atria.
    pub fn ideal() -> Self {
        AtrialTaus {
            tau_mv: 0.65,
            tau_lpv: 0.65,
            tau_rpv: 0.10,
            tau_tv: 0.90,
            tau_icv: 0.90,
            tau_scv: 0.10,
            tau_ct_plus: -0.10,
            tau_ct_minus: -0.18,
            tau_ib: 0.35,
            tau_ras: 0.135,
            tau_raw: 0.55,
        }
    }

    pub fn zygote() -> Self {
        AtrialTaus {
            tau_mv: 0.85,
            tau_lpv: 0.85,
            tau_rpv: 0.20,
            tau_tv: 0.90,
            tau_icv: 0.85,
            tau_scv: 0.30,
            tau_ct_plus: -0.55,
            tau_ct_minus: -0.60,
            tau_ib: -0.25,
            tau_ras: -0.10,
            tau_raw: 0.60,
        }
    }

    pub fn riunet() -> Self {
        AtrialTaus {
            tau_mv: 0.85,
            tau_lpv: 0.85,
            tau_rpv: 0.20,
            tau_tv: 0.89,
            tau_icv: 0.90,
            tau_scv: 0.20,
            tau_ct_plus: -0.10,
            tau_ct_minus: -0.13,
            tau_ib: 0.06,
            tau_ras: 0.13,
            tau_raw: 0.55,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ideal" => Ok(Self::ideal()),
            "zygote" => Ok(Self::zygote()),
            "riunet" => Ok(Self::riunet()),
            _ => Err(Error::Config(format!("unknown atrial tau preset '{name}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.tau_mv, self.tau_lpv, self.tau_rpv, self.tau_tv, self.tau_icv, self.tau_scv,
            self.tau_ct_plus, self.tau_ct_minus, self.tau_ib, self.tau_ras, self.tau_raw,
        ];
        if all.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("atrial thresholds must be finite".into()));
        }
        if self.tau_ct_minus >= self.tau_ct_plus {
            return Err(Error::Config(format!(
                "tau_ct_minus ({}) must be below tau_ct_plus ({})",
                self.tau_ct_minus, self.tau_ct_plus
            )));
        }
        if self.tau_scv >= self.tau_icv {
            return Err(Error::Config(format!(
                "tau_scv ({}) must be below tau_icv ({})",
                self.tau_scv, self.tau_icv
            )));
        }
        Ok(())
    }
}

/// Anatomical bundle of a node. The integer codes are what gets exported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BundleLabel {
    Tv = 0,
    Ct = 1,
    Icv = 2,
    Scv = 3,
    Raw = 4,
    Ib = 5,
    RasTop = 6,
    RasCentre = 7,
    RasBottom = 8,
    IstRaaRaw = 9,
    Mv = 10,
    LpvRpv = 11,
    LaBody = 12,
}

impl BundleLabel {
    pub const RA: [BundleLabel; 10] = [
        BundleLabel::Tv,
        BundleLabel::Ct,
        BundleLabel::Icv,
        BundleLabel::Scv,
        BundleLabel::Raw,
        BundleLabel::Ib,
        BundleLabel::RasTop,
        BundleLabel::RasCentre,
        BundleLabel::RasBottom,
        BundleLabel::IstRaaRaw,
    ];
    pub const LA: [BundleLabel; 3] = [BundleLabel::Mv, BundleLabel::LpvRpv, BundleLabel::LaBody];

    pub fn for_side(side: AtriumSide) -> &'static [BundleLabel] {
        match side {
            AtriumSide::Left => &Self::LA,
            AtriumSide::Right => &Self::RA,
        }
    }

    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn name(self) -> &'static str {
        match self {
            BundleLabel::Tv => "TV",
            BundleLabel::Ct => "CT",
            BundleLabel::Icv => "ICV",
            BundleLabel::Scv => "SCV",
            BundleLabel::Raw => "RAW",
            BundleLabel::Ib => "IB",
            BundleLabel::RasTop => "RAS_TOP",
            BundleLabel::RasCentre => "RAS_CENTRE",
            BundleLabel::RasBottom => "RAS_BOTTOM",
            BundleLabel::IstRaaRaw => "IST_RAA_RAW",
            BundleLabel::Mv => "MV",
            BundleLabel::LpvRpv => "LPV_RPV",
            BundleLabel::LaBody => "LA_BODY",
        }
    }
}

/// Which distance supplies k = grad(psi).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Psi {
    Ab,
    V,
    R,
    W,
}

/// Right atrium bundle selection.
pub fn select_bundle_ra(ab: f64, v: f64, r: f64, w: f64, t: &AtrialTaus) -> (BundleLabel, Psi) {
    let _ = ab;
    let vein = v >= t.tau_icv || v <= t.tau_scv;
    // Both caval veins share a branch; the high end of psi_v is the ICV.
    let cava = || if v >= t.tau_icv { BundleLabel::Icv } else { BundleLabel::Scv };
    if r >= t.tau_tv {
        (BundleLabel::Tv, Psi::R)
    } else if r < t.tau_raw {
        if w >= t.tau_ct_minus && w <= t.tau_ct_plus {
            (BundleLabel::Ct, Psi::W)
        } else if w < t.tau_ct_minus {
            if vein {
                (cava(), Psi::V)
            } else {
                (BundleLabel::Raw, Psi::Ab)
            }
        } else if vein {
            (cava(), Psi::V)
        } else if w <= t.tau_ib {
            (BundleLabel::Ib, Psi::V)
        } else if w >= t.tau_ras {
            (BundleLabel::RasCentre, Psi::R)
        } else {
            (BundleLabel::RasTop, Psi::W)
        }
    } else if vein {
        (cava(), Psi::V)
    } else if w >= 0.0 {
        (BundleLabel::RasBottom, Psi::R)
    } else {
        (BundleLabel::IstRaaRaw, Psi::Ab)
    }
}

/// Left atrium bundle selection.
pub fn select_bundle_la(ab: f64, v: f64, r: f64, t: &AtrialTaus) -> (BundleLabel, Psi) {
    let _ = ab;
    if r >= t.tau_mv {
        (BundleLabel::Mv, Psi::R)
    } else if v >= t.tau_lpv || v <= t.tau_rpv {
        (BundleLabel::LpvRpv, Psi::V)
    } else {
        (BundleLabel::LaBody, Psi::Ab)
    }
}

/// Named intra-atrial distances.
#[derive(Debug, Clone)]
pub struct AtrialDistances {
    pub phi: ScalarField,
    pub psi_ab: ScalarField,
    pub psi_v: ScalarField,
    pub psi_r: ScalarField,
    /// Right atrium only.
    pub psi_w: Option<ScalarField>,
}

impl AtrialDistances {
    pub fn named(&self) -> Vec<(&'static str, &ScalarField)> {
        let mut v = vec![
            ("phi", &self.phi),
            ("psi_ab", &self.psi_ab),
            ("psi_v", &self.psi_v),
            ("psi_r", &self.psi_r),
        ];
        if let Some(w) = &self.psi_w {
            v.push(("psi_w", w));
        }
        v
    }
}

fn schema(side: AtriumSide) -> TagSchema {
    TagSchema::for_method(match side {
        AtriumSide::Left => Method::AtrialLa,
        AtriumSide::Right => Method::AtrialRa,
    })
}

/// Solves the intra-atrial Laplace problems of one atrium.
pub fn solve_atrial_distances(mesh: &Mesh, side: AtriumSide, tol: f64) -> Result<AtrialDistances> {
    schema(side).check(mesh)?;
    let solver = LaplaceSolver::new(mesh);
    let solve = |e: &[(&str, f64)]| {
        solver.solve(&DirichletSpec::new(e.iter().map(|(n, v)| (n.to_string(), *v)))?, tol)
    };
    Ok(match side {
        AtriumSide::Left => AtrialDistances {
            phi: solve(&[("epi", 1.0), ("endo", 0.0)])?,
            psi_ab: solve(&[("rpv", 2.0), ("mv", 1.0), ("lpv", 0.0), ("appendage", -1.0)])?,
            psi_v: solve(&[("rpv", 1.0), ("lpv", 0.0)])?,
            psi_r: solve(&[("mv", 1.0), ("lpv", 0.0), ("rpv", 0.0), ("appendage", 0.0)])?,
            psi_w: None,
        },
        AtriumSide::Right => AtrialDistances {
            phi: solve(&[("epi", 1.0), ("top-epi", 1.0), ("endo", 0.0), ("top-endo", 0.0)])?,
            psi_ab: solve(&[("icv", 2.0), ("tv", 1.0), ("scv", 0.0), ("appendage", -1.0)])?,
            psi_v: solve(&[("icv", 1.0), ("scv", 0.0), ("appendage", 0.0)])?,
            psi_r: solve(&[("tv", 1.0), ("top", 0.0)])?,
            psi_w: Some(solve(&[("tv-s", 1.0), ("tv-f", -1.0)])?),
        },
    })
}

/// Atrial fiber field with per-node bundle labels.
#[derive(Debug, Clone)]
pub struct AtrialFibers {
    pub frames: FrameField,
    pub labels: Vec<BundleLabel>,
    pub distances: AtrialDistances,
}

impl AtrialFibers {
    pub fn label_codes(&self) -> Vec<i32> {
        self.labels.iter().map(|l| l.code()).collect()
    }

    pub fn label_counts(&self) -> BTreeMap<BundleLabel, usize> {
        let mut m = BTreeMap::new();
        for &l in &self.labels {
            *m.entry(l).or_insert(0) += 1;
        }
        m
    }
}

/// Labels every node by bundle, then builds `axis(grad psi_i, grad phi)`.
pub fn generate_atrial_fibers(mesh: &Mesh, side: AtriumSide, taus: &AtrialTaus, tol: f64) -> Result<AtrialFibers> {
    taus.validate()?;
    let d = solve_atrial_distances(mesh, side, tol)?;
    let n = mesh.num_nodes();
    let sel: Vec<(BundleLabel, Psi)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (ab, v, r) = (d.psi_ab.0[i], d.psi_v.0[i], d.psi_r.0[i]);
            match &d.psi_w {
                Some(w) => select_bundle_ra(ab, v, r, w.0[i], taus),
                None => select_bundle_la(ab, v, r, taus),
            }
        })
        .collect();
    let g_phi = nodal_gradient(mesh, &d.phi);
    let g_ab = nodal_gradient(mesh, &d.psi_ab);
    let g_v = nodal_gradient(mesh, &d.psi_v);
    let g_r = nodal_gradient(mesh, &d.psi_r);
    let g_w = d.psi_w.as_ref().map(|w| nodal_gradient(mesh, w));
    let k: Vec<Vector3<f64>> = (0..n)
        .map(|i| match sel[i].1 {
            Psi::Ab => g_ab.0[i],
            Psi::V => g_v.0[i],
            Psi::R => g_r.0[i],
            Psi::W => g_w.as_ref().expect("psi_w on right atrium").0[i],
        })
        .collect();
    let frames = frames_with_fallback(mesh, &vec![true; n], &k, &g_phi.0)?;
    Ok(AtrialFibers {
        frames: FrameField(frames.into_iter().map(|f| f.expect("frame")).collect::<Vec<Frame>>()),
        labels: sel.into_iter().map(|s| s.0).collect(),
        distances: d,
    })
}

/// Unit tangents of a ring boundary at its nodes: the ring axis is the
/// direction of least spread of the ring nodes, and the tangent is
/// axis x (p - centre).
pub fn ring_tangents(mesh: &Mesh, ring: &str) -> Result<BTreeMap<usize, Vector3<f64>>> {
    let ids = resolve_tags(mesh, ring)?;
    let nodes = mesh.nodes_with(&ids);
    let c: Vector3<f64> = nodes.iter().map(|&i| mesh.node(i)).sum::<Vector3<f64>>() / nodes.len() as f64;
    let mut cov = Matrix3::zeros();
    for &i in &nodes {
        let d = mesh.node(i) - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let imin = eig.eigenvalues.imin();
    let a: Vector3<f64> = eig.eigenvectors.column(imin).into();
    Ok(nodes
        .into_iter()
        .filter_map(|i| a.cross(&(mesh.node(i) - c)).try_normalize(1e-12).map(|t| (i, t)))
        .collect())
}

/// Fraction of ring nodes whose fiber satisfies |f . tangent| > `threshold`.
pub fn ring_alignment(mesh: &Mesh, frames: &FrameField, ring: &str, threshold: f64) -> Result<f64> {
    let t = ring_tangents(mesh, ring)?;
    if t.is_empty() {
        return Err(Error::Geometry(format!("ring '{ring}' has no usable nodes")));
    }
    let hits = t.iter().filter(|(&i, tan)| frames.0[i].fiber().dot(tan).abs() > threshold).count();
    Ok(hits as f64 / t.len() as f64)
}

/// Vein and valve rings of a side.
pub fn rings_of(side: AtriumSide) -> &'static [&'static str] {
    match side {
        AtriumSide::Left => &["mv", "lpv", "rpv"],
        AtriumSide::Right => &["tv", "icv", "scv"],
    }
}
