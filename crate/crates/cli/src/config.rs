//! TOML run configuration. Units: cm, ms, mV, mS/cm, μA/cm³, degrees.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory.
    pub output: Option<PathBuf>,
    /// Worker threads; absent means one per core.
    pub threads: Option<usize>,
    pub geometry: Option<GeometryConfig>,
    pub fibers: Option<FiberConfig>,
    pub ep: Option<EpConfig>,
    pub compare: Option<CompareConfig>,
    pub fit: Option<FitConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Slab,
    Biventricle,
    Atrium,
    File,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
    /// Mesh file for `kind = "file"`.
    pub path: Option<PathBuf>,
    /// Target edge length (cm).
    pub h: Option<f64>,
    /// Slab extents (cm).
    pub lengths: Option<[f64; 3]>,
    /// "left" or "right" for atria.
    pub side: Option<String>,
}

/// Either a named preset or explicit values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Named<T> {
    Name(String),
    Value(T),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnglesConfig {
    pub alpha_epi_l: f64,
    pub alpha_endo_l: f64,
    pub alpha_epi_r: f64,
    pub alpha_endo_r: f64,
    pub beta_epi_l: f64,
    pub beta_endo_l: f64,
    pub beta_epi_r: f64,
    pub beta_endo_r: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtAnglesConfig {
    pub alpha_epi: f64,
    pub alpha_endo: f64,
    pub beta_epi: f64,
    pub beta_endo: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TausConfig {
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

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    /// "R", "B", "D" or "atrial"; absent picks atrial or D from the mesh tags.
    pub method: Option<String>,
    pub angles: Option<Named<AnglesConfig>>,
    /// D-RBM outflow-tract angles.
    pub ot_angles: Option<Named<OtAnglesConfig>>,
    pub taus: Option<Named<TausConfig>>,
    /// Atrial side; inferred from the geometry or tags when absent.
    pub side: Option<String>,
    pub tol: Option<f64>,
    pub septum_threshold: Option<f64>,
    pub ot_threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusConfig {
    pub center: [f64; 3],
    pub start: f64,
    pub radius: Option<f64>,
    pub duration: Option<f64>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleCfg {
    /// Any of "ra", "la", "ventricles".
    pub chambers: Vec<String>,
    pub radius: Option<f64>,
    pub duration: Option<f64>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpConfig {
    /// "ms-ventricular", "ms-atrial", "ttp" or "crn".
    pub ionic: Option<String>,
    /// "ventricular", "atrial" or [sigma_f, sigma_s, sigma_n].
    pub conductivity: Option<Named<[f64; 3]>>,
    /// Isotropic conductivity; fibers are ignored when set.
    pub isotropic: Option<f64>,
    /// VTK file holding fiber/sheet/crossfiber arrays on the same mesh.
    pub fibers_file: Option<PathBuf>,
    pub dt: Option<f64>,
    pub bdf_order: Option<usize>,
    pub t_end: Option<f64>,
    /// "lumped" or "consistent".
    pub mass: Option<String>,
    pub tol: Option<f64>,
    pub cm: Option<f64>,
    pub chi: Option<f64>,
    pub activation_threshold: Option<f64>,
    pub snapshot_interval: Option<f64>,
    pub stop_margin: Option<f64>,
    #[serde(default)]
    pub stimuli: Vec<StimulusConfig>,
    pub schedule: Option<ScheduleCfg>,
    /// Direction along which to report a conduction velocity.
    pub cv_axis: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub a: PathBuf,
    pub b: PathBuf,
    /// "auto", "fibers" or "activation".
    pub field: Option<String>,
    /// Activation array name for activation comparisons.
    pub activation_name: Option<String>,
    /// Display mask threshold on the fiber difference.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub ionic: String,
    /// Target velocities (cm/s).
    pub targets: Vec<f64>,
    pub h: f64,
    pub dt: f64,
    pub bdf_order: Option<usize>,
    pub mass: Option<String>,
    pub length: Option<f64>,
    pub sigma0: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// Recursively overlays `top` onto `base`.
pub fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}
