//! Conduction velocity measurement and conductivity fitting.

use super::{run_simulation, ActivationMap, Conductivity, EpParams, IonicModel, MassKind, Stimulus};
use crate::error::{Error, Result};
use crate::mesh::{generate_slab, Mesh};
use nalgebra::Vector3;

/// Velocity (cm/s) of a planar wave travelling along `axis`: the inverse
/// slope of a least-squares fit of activation time against position over
/// the central half of the extent.
pub fn measure_cv(mesh: &Mesh, activation: &ActivationMap, axis: &Vector3<f64>) -> Result<f64> {
    let a = axis
        .try_normalize(1e-12)
        .ok_or_else(|| Error::Measurement("zero measurement axis".into()))?;
    if activation.len() != mesh.num_nodes() {
        return Err(Error::Dimension(format!(
            "activation map has {} entries for {} nodes",
            activation.len(),
            mesh.num_nodes()
        )));
    }
    let s: Vec<f64> = (0..mesh.num_nodes()).map(|i| mesh.node(i).dot(&a)).collect();
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let len = hi - lo;
    let (s0, s1) = (lo + 0.25 * len, lo + 0.75 * len);
    let mut pts = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        if si >= s0 - 1e-12 && si <= s1 + 1e-12 {
            match activation.times[i] {
                Some(t) => pts.push((si, t)),
                None => return Err(Error::Measurement(format!("node {i} in the measurement window never activated"))),
            }
        }
    }
    if pts.len() < 2 {
        return Err(Error::Measurement("too few nodes in the measurement window".into()));
    }
    // Mean activation per tenth of the window must increase.
    const BINS: usize = 10;
    let mut sum = [0.0; BINS];
    let mut cnt = [0usize; BINS];
    for &(x, t) in &pts {
        let b = (((x - s0) / (s1 - s0)) * BINS as f64).floor().clamp(0.0, (BINS - 1) as f64) as usize;
        sum[b] += t;
        cnt[b] += 1;
    }
    let means: Vec<f64> = (0..BINS).filter(|&b| cnt[b] > 0).map(|b| sum[b] / cnt[b] as f64).collect();
    if means.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Measurement("activation is not monotone along the axis".into()));
    }
    let n = pts.len() as f64;
    let (mx, mt) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxt: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - mt)).sum();
    let slope = sxt / sxx;
    if !(slope > 0.0) {
        return Err(Error::Measurement(format!("non-positive slope {slope} ms/cm")));
    }
    Ok(1000.0 / slope)
}

/// Cable of length `length` along x with a single element across.
pub fn cable_mesh(length: f64, h: f64) -> Result<Mesh> {
    generate_slab([length, h, h], h)
}

/// Setup of a cable conduction-velocity run.
#[derive(Clone, Copy)]
pub struct FitSetup<'a> {
    pub ionic: &'a dyn IonicModel,
    /// Element size (cm).
    pub h: f64,
    pub dt: f64,
    pub bdf_order: usize,
    pub mass: MassKind,
    /// Cable length (cm).
    pub length: f64,
    /// Initial conductivity (mS/cm).
    pub sigma0: f64,
    /// Relative tolerance on the velocity.
    pub tol: f64,
    pub max_iter: usize,
}

impl<'a> FitSetup<'a> {
    pub fn new(ionic: &'a dyn IonicModel, h: f64, dt: f64) -> Self {
        FitSetup { ionic, h, dt, bdf_order: 3, mass: MassKind::Lumped, length: 2.0, sigma0: 1.0, tol: 0.01, max_iter: 20 }
    }
}

/// Velocity (cm/s) of a planar wave on a cable with conductivity `sigma`.
/// The whole x = 0 end is stimulated, so the wave is planar by symmetry.
pub fn cv_along(setup: &FitSetup<'_>, sigma: f64) -> Result<f64> {
    let mesh = cable_mesh(setup.length, setup.h)?;
    let r = (2.0f64.sqrt() * setup.h).max(Stimulus::DEFAULT_RADIUS);
    let stim = Stimulus::at([0.0, 0.5 * setup.h, 0.5 * setup.h], 0.0);
    let stim = Stimulus { radius: r, ..stim };
    let params = EpParams {
        dt: setup.dt,
        bdf_order: setup.bdf_order,
        mass: setup.mass,
        t_end: 400.0,
        stop_margin: Some(5.0),
        ..EpParams::default()
    };
    let res = run_simulation(&mesh, &Conductivity::Isotropic(sigma), setup.ionic, &[stim], &params)?;
    measure_cv(&mesh, &res.activation, &Vector3::x())
}

/// Outcome of a conductivity fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub sigma: f64,
    pub cv: f64,
    pub iterations: usize,
    /// (sigma, measured velocity) per iteration; NaN where the wave failed.
    pub trace: Vec<(f64, f64)>,
}

/// Iterates sigma <- sigma (target / measured)² until the measured velocity
/// is within `setup.tol` of `target` (cm/s). A run in which the wave fails
/// to cross the cable quadruples sigma instead.
pub fn fit_conductivity(target: f64, setup: &FitSetup<'_>) -> Result<FitResult> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Config(format!("target velocity {target} must be positive")));
    }
    if !(setup.sigma0 > 0.0) {
        return Err(Error::Config("initial conductivity must be positive".into()));
    }
    let mut sigma = setup.sigma0;
    let mut trace = Vec::new();
    for it in 1..=setup.max_iter {
        match cv_along(setup, sigma) {
            Ok(v) => {
                trace.push((sigma, v));
                if ((v - target) / target).abs() < setup.tol {
                    return Ok(FitResult { sigma, cv: v, iterations: it, trace });
                }
                sigma *= (target / v).powi(2);
            }
            Err(Error::Measurement(_)) => {
                trace.push((sigma, f64::NAN));
                sigma *= 4.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Fit { trace })
}
