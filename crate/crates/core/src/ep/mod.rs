//! Monodomain electrophysiology.
//!
//! chi Cm du/dt - div(D grad u) + chi I_ion(u, w) = I_app, dw/dt = G(u, w),
//! with u in mV, t in ms, D in mS/cm, I_app in μA/cm³.

mod crn;
mod cv;
pub mod ionic;
mod schedule;
mod ttp;

pub use crn::Courtemanche1998;
pub use cv::{cable_mesh, cv_along, fit_conductivity, measure_cv, FitResult, FitSetup};
pub use ionic::{IonicModel, LinearMembrane, MitchellSchaeffer, Passive};
pub use schedule::{
    default_sites, whole_heart_schedule, Chamber, ScheduleConfig, ScheduledStimulus, Site,
    AVN_DELAY, WHOLE_HEART_TIMES,
};
pub use ttp::TenTusscher2006;

use crate::error::{Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness, lumped_mass, pcg, CgStats, CsrMatrix, ElementTensor};
use crate::frame::{Frame, FrameField};
use crate::mesh::Mesh;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

/// Conductivities along fiber, sheet and normal directions (mS/cm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConductivitySpec {
    pub sigma_f: f64,
    pub sigma_s: f64,
    pub sigma_n: f64,
}

impl ConductivitySpec {
    pub fn new(sigma_f: f64, sigma_s: f64, sigma_n: f64) -> Result<Self> {
        let c = ConductivitySpec { sigma_f, sigma_s, sigma_n };
        c.validate()?;
        Ok(c)
    }

    pub fn isotropic(sigma: f64) -> Self {
        ConductivitySpec { sigma_f: sigma, sigma_s: sigma, sigma_n: sigma }
    }

    /// Fitted ventricular values (TTP, 60/40/20 cm/s).
    pub fn ventricular() -> Self {
        ConductivitySpec { sigma_f: 1.07, sigma_s: 0.49, sigma_n: 0.16 }
    }

    /// Fitted atrial values (CRN, 120/40/40 cm/s).
    pub fn atrial() -> Self {
        ConductivitySpec { sigma_f: 7.0, sigma_s: 0.77, sigma_n: 0.77 }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, s) in [("sigma_f", self.sigma_f), ("sigma_s", self.sigma_s), ("sigma_n", self.sigma_n)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("{n} = {s} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// D = sigma_f f f^T + sigma_s s s^T + sigma_n n n^T.
    pub fn tensor(&self, frame: &Frame) -> Matrix3<f64> {
        let (f, s, n) = (frame.fiber(), frame.sheet(), frame.crossfiber());
        f * f.transpose() * self.sigma_f + s * s.transpose() * self.sigma_s + n * n.transpose() * self.sigma_n
    }
}

/// Conductivity field of a mesh.
#[derive(Debug, Clone)]
pub enum Conductivity {
    Isotropic(f64),
    /// One tensor per node, interpolated inside elements.
    Nodal(Vec<Matrix3<f64>>),
}

impl Conductivity {
    pub fn element_tensor(&self) -> ElementTensor<'_> {
        match self {
            Conductivity::Isotropic(s) => ElementTensor::Scalar(*s),
            Conductivity::Nodal(d) => ElementTensor::Nodal(d),
        }
    }
}

/// Nodal conductivity tensors from a frame field.
pub fn assemble_conductivity(mesh: &Mesh, frames: &FrameField, spec: &ConductivitySpec) -> Result<Conductivity> {
    spec.validate()?;
    if frames.len() != mesh.num_nodes() {
        return Err(Error::Dimension(format!(
            "{} frames for {} nodes",
            frames.len(),
            mesh.num_nodes()
        )));
    }
    if let Some(i) = frames.0.iter().position(|f| !f.is_valid(1e-6)) {
        return Err(Error::Tensor(format!("frame at node {i} is not orthonormal")));
    }
    Ok(Conductivity::Nodal(frames.0.par_iter().map(|f| spec.tensor(f)).collect()))
}

/// Spherical applied current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stimulus {
    pub center: [f64; 3],
    /// cm
    pub radius: f64,
    /// ms
    pub start: f64,
    /// ms
    pub duration: f64,
    /// μA/cm³
    pub amplitude: f64,
}

impl Stimulus {
    pub const DEFAULT_RADIUS: f64 = 0.25;
    pub const DEFAULT_DURATION: f64 = 3.0;
    pub const DEFAULT_AMPLITUDE: f64 = 50000.0;

    pub fn at(center: [f64; 3], start: f64) -> Self {
        Stimulus {
            center,
            radius: Self::DEFAULT_RADIUS,
            start,
            duration: Self::DEFAULT_DURATION,
            amplitude: Self::DEFAULT_AMPLITUDE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.duration > 0.0) || !self.start.is_finite() || !self.amplitude.is_finite() {
            return Err(Error::Config(format!("invalid stimulus {self:?}")));
        }
        Ok(())
    }

    pub fn active(&self, t: f64) -> bool {
        t >= self.start && t < self.start + self.duration
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (p - Vector3::from(self.center)).norm() <= self.radius
    }
}

/// Mass matrix used for the time derivative and the reaction terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassKind {
    #[default]
    Lumped,
    Consistent,
}

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EpParams {
    /// μF/cm²
    pub cm: f64,
    /// cm⁻¹
    pub chi: f64,
    /// ms
    pub dt: f64,
    pub bdf_order: usize,
    /// ms
    pub t_end: f64,
    pub mass: MassKind,
    /// Relative residual of the per-step linear solve.
    pub tol: f64,
    /// A node counts as activated once u exceeds this (mV).
    pub activation_threshold: f64,
    /// Keep u every this many ms.
    pub snapshot_interval: Option<f64>,
    /// Stop this many ms after every node has activated and all stimuli
    /// have started.
    pub stop_margin: Option<f64>,
}

impl Default for EpParams {
    fn default() -> Self {
        EpParams {
            cm: 1.0,
            chi: 1400.0,
            dt: 0.05,
            bdf_order: 3,
            t_end: 500.0,
            mass: MassKind::Lumped,
            tol: 1e-8,
            activation_threshold: -40.0,
            snapshot_interval: None,
            stop_margin: None,
        }
    }
}

impl EpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(1..=3).contains(&self.bdf_order) {
            return Err(Error::Config(format!("bdf_order = {} not in 1..=3", self.bdf_order)));
        }
        if !(self.cm > 0.0 && self.chi > 0.0) {
            return Err(Error::Config("cm and chi must be positive".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end = {} must be non-negative", self.t_end)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol = {} not in (0, 1)", self.tol)));
        }
        Ok(())
    }
}

/// BDF coefficients: alpha0, history weights, extrapolation weights.
pub fn bdf_coefficients(order: usize) -> (f64, &'static [f64], &'static [f64]) {
    match order {
        1 => (1.0, &[1.0], &[1.0]),
        2 => (1.5, &[2.0, -0.5], &[2.0, -1.0]),
        3 => (11.0 / 6.0, &[3.0, -1.5, 1.0 / 3.0], &[3.0, -3.0, 1.0]),
        _ => panic!("unsupported BDF order {order}"),
    }
}

/// Potential history (most recent first), ionic state and time.
#[derive(Debug, Clone, PartialEq)]
pub struct EpState {
    pub history: Vec<Vec<f64>>,
    /// Node-major ionic state, `num_states` entries per node.
    pub w: Vec<f64>,
    pub time: f64,
}

impl EpState {
    pub fn u(&self) -> &[f64] {
        &self.history[0]
    }
}

enum Mass {
    Lumped(Vec<f64>),
    Consistent(CsrMatrix),
}

impl Mass {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Mass::Lumped(m) => y.iter_mut().zip(m).zip(x).for_each(|((y, m), x)| *y = m * x),
            Mass::Consistent(m) => m.matvec(x, y),
        }
    }
}

/// Semi-implicit monodomain stepper: implicit diffusion, explicit
/// extrapolated reaction, nodal ionic currents.
pub struct Monodomain<'a> {
    mesh: &'a Mesh,
    ionic: &'a dyn IonicModel,
    params: EpParams,
    stiffness: CsrMatrix,
    mass: Mass,
    systems: [Option<CsrMatrix>; 3],
    stimuli: Vec<(Stimulus, Vec<usize>)>,
}

impl<'a> Monodomain<'a> {
    pub fn new(
        mesh: &'a Mesh,
        conductivity: &Conductivity,
        ionic: &'a dyn IonicModel,
        stimuli: &[Stimulus],
        params: &EpParams,
    ) -> Result<Self> {
        params.validate()?;
        if let Conductivity::Nodal(d) = conductivity {
            if d.len() != mesh.num_nodes() {
                return Err(Error::Dimension(format!("{} tensors for {} nodes", d.len(), mesh.num_nodes())));
            }
        }
        let stiffness = assemble_stiffness(mesh, conductivity.element_tensor());
        let mass = match params.mass {
            MassKind::Lumped => Mass::Lumped(lumped_mass(mesh)),
            MassKind::Consistent => Mass::Consistent(assemble_mass(mesh)),
        };
        let mut stim = Vec::with_capacity(stimuli.len());
        for s in stimuli {
            s.validate()?;
            let nodes: Vec<usize> = (0..mesh.num_nodes()).filter(|&i| s.contains(&mesh.node(i))).collect();
            if nodes.is_empty() {
                return Err(Error::Config(format!("stimulus at {:?} covers no mesh node", s.center)));
            }
            stim.push((*s, nodes));
        }
        Ok(Monodomain { mesh, ionic, params: params.clone(), stiffness, mass, systems: [None, None, None], stimuli: stim })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn params(&self) -> &EpParams {
        &self.params
    }

    pub fn stimuli(&self) -> impl Iterator<Item = &Stimulus> {
        self.stimuli.iter().map(|(s, _)| s)
    }

    /// Uniform resting state.
    pub fn resting_state(&self) -> EpState {
        let (u0, w0) = self.ionic.resting();
        let n = self.mesh.num_nodes();
        EpState { history: vec![vec![u0; n]], w: w0.repeat(n), time: 0.0 }
    }

    fn system(&mut self, q: usize) -> &CsrMatrix {
        if self.systems[q - 1].is_none() {
            let c = self.params.chi * self.params.cm * bdf_coefficients(q).0 / self.params.dt;
            let a = match &self.mass {
                Mass::Lumped(m) => {
                    let mut a = self.stiffness.clone();
                    for (i, mi) in m.iter().enumerate() {
                        a.add(i, i, c * mi);
                    }
                    a
                }
                Mass::Consistent(m) => self.stiffness.linear_combination(1.0, m, c),
            };
            self.systems[q - 1] = Some(a);
        }
        self.systems[q - 1].as_ref().expect("system")
    }

    /// Applied current density at every node at time `t`.
    pub fn applied_current(&self, t: f64) -> Vec<f64> {
        let mut iapp = vec![0.0; self.mesh.num_nodes()];
        for (s, nodes) in &self.stimuli {
            if s.active(t) {
                for &i in nodes {
                    iapp[i] += s.amplitude;
                }
            }
        }
        iapp
    }

    /// Advances `state` by one time step. The order is limited by the
    /// available history, so the first steps bootstrap with BDF1 and BDF2.
    pub fn step(&mut self, state: &mut EpState) -> Result<CgStats> {
        let n = self.mesh.num_nodes();
        let q = self.params.bdf_order.min(state.history.len());
        let (_, beta, ext) = bdf_coefficients(q);
        let (dt, chi, cm) = (self.params.dt, self.params.chi, self.params.cm);
        let t_new = state.time + dt;
        let ns = self.ionic.num_states();
        let ionic = self.ionic;
        let hist = &state.history;
        let u_star: Vec<f64> = (0..n).map(|i| ext.iter().enumerate().map(|(j, e)| e * hist[j][i]).sum()).collect();
        // Gates and currents both see the extrapolated potential.
        if ns > 0 {
            state.w.par_chunks_mut(ns).zip(u_star.par_iter()).with_min_len(256).for_each(|(w, &u)| ionic.advance(u, w, dt));
        }
        let hist = &state.history;
        let iapp = self.applied_current(t_new);
        let w = &state.w;
        let c = chi * cm / dt;
        let load: Vec<f64> = (0..n)
            .into_par_iter()
            .with_min_len(256)
            .map(|i| {
                let ws = if ns > 0 { &w[i * ns..(i + 1) * ns] } else { &[][..] };
                let past: f64 = beta.iter().enumerate().map(|(j, b)| b * hist[j][i]).sum();
                c * past - chi * ionic.current(u_star[i], ws) + iapp[i]
            })
            .collect();
        let mut rhs = vec![0.0; n];
        self.mass.apply(&load, &mut rhs);
        let tol = self.params.tol;
        let mut x = u_star;
        let a = self.system(q);
        let stats = pcg(a, &rhs, &mut x, tol, 10 * n + 1000)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t_new });
        }
        state.history.insert(0, x);
        state.history.truncate(self.params.bdf_order);
        state.time = t_new;
        Ok(stats)
    }
}

/// Per-node activation time (ms), `None` if never activated.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMap {
    pub times: Vec<Option<f64>>,
}

impl ActivationMap {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn never(&self) -> Vec<usize> {
        (0..self.times.len()).filter(|&i| self.times[i].is_none()).collect()
    }

    pub fn all_activated(&self) -> bool {
        self.times.iter().all(Option::is_some)
    }

    pub fn min(&self) -> Option<f64> {
        self.times.iter().flatten().copied().reduce(f64::min)
    }

    pub fn max(&self) -> Option<f64> {
        self.times.iter().flatten().copied().reduce(f64::max)
    }

    /// Times as a scalar array with -1 for nodes that never activated.
    pub fn to_vec(&self) -> Vec<f64> {
        self.times.iter().map(|t| t.unwrap_or(-1.0)).collect()
    }

    /// Inverse of [`ActivationMap::to_vec`].
    pub fn from_vec(v: &[f64]) -> Self {
        ActivationMap { times: v.iter().map(|&t| if t < 0.0 { None } else { Some(t) }).collect() }
    }

    /// Fails with the list of nodes that never activated.
    pub fn require_complete(&self) -> Result<()> {
        let never = self.never();
        if never.is_empty() {
            Ok(())
        } else {
            Err(Error::Coverage { nodes: never })
        }
    }
}

/// One row of the simulation log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub time: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub activation: ActivationMap,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub log: Vec<LogRow>,
    pub final_state: EpState,
    /// Steps whose potential left [-100, 60] mV.
    pub out_of_range_steps: usize,
}

impl SimulationResult {
    pub fn write_log_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "time,u_min,u_max,iterations")?;
        for r in &self.log {
            writeln!(f, "{},{},{},{}", r.time, r.u_min, r.u_max, r.iterations)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Runs the time loop from the resting state. The activation time of a
/// node is the time of its largest backward-difference du/dt, counted only
/// for nodes whose potential crossed the activation threshold.
pub fn run_simulation(
    mesh: &Mesh,
    conductivity: &Conductivity,
    ionic: &dyn IonicModel,
    stimuli: &[Stimulus],
    params: &EpParams,
) -> Result<SimulationResult> {
    let mut model = Monodomain::new(mesh, conductivity, ionic, stimuli, params)?;
    let state = model.resting_state();
    run_from(&mut model, state)
}

/// Runs the time loop of `model` from `state` until `t_end`.
pub fn run_from(model: &mut Monodomain<'_>, mut state: EpState) -> Result<SimulationResult> {
    let p = model.params().clone();
    let n = model.mesh().num_nodes();
    let steps = ((p.t_end - state.time) / p.dt).round().max(0.0) as usize;
    let snap_every = p.snapshot_interval.map(|s| ((s / p.dt).round() as usize).max(1));
    let last_start = model.stimuli().map(|s| s.start).fold(0.0, f64::max);
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut at = vec![0.0; n];
    let mut crossed = vec![false; n];
    let mut remaining = n;
    let mut all_crossed_at: Option<f64> = None;
    let mut snapshots = Vec::new();
    let mut log = Vec::with_capacity(steps);
    let mut out_of_range = 0;
    if snap_every.is_some() {
        snapshots.push((state.time, state.u().to_vec()));
    }
    let mut u_prev = state.u().to_vec();
    for k in 1..=steps {
        let stats = model.step(&mut state)?;
        let t = state.time;
        let u = &state.history[0];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let du = (u[i] - u_prev[i]) / p.dt;
            if du > best[i] {
                best[i] = du;
                at[i] = t;
            }
            if !crossed[i] && u[i] > p.activation_threshold {
                crossed[i] = true;
                remaining -= 1;
            }
            lo = lo.min(u[i]);
            hi = hi.max(u[i]);
        }
        if lo < -100.0 || hi > 60.0 {
            out_of_range += 1;
        }
        log.push(LogRow { time: t, u_min: lo, u_max: hi, iterations: stats.iterations });
        if let Some(e) = snap_every {
            if k % e == 0 {
                snapshots.push((t, u.clone()));
            }
        }
        u_prev.copy_from_slice(u);
        if remaining == 0 && all_crossed_at.is_none() {
            all_crossed_at = Some(t);
        }
        if let (Some(m), Some(tc)) = (p.stop_margin, all_crossed_at) {
            if t >= tc + m && t >= last_start + m {
                break;
            }
        }
    }
    let times = (0..n).map(|i| if crossed[i] { Some(at[i]) } else { None }).collect();
    Ok(SimulationResult {
        activation: ActivationMap { times },
        snapshots,
        log,
        final_state: state,
        out_of_range_steps: out_of_range,
    })
}
