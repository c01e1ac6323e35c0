//! Ionic model interface and the two-variable surrogate.

use nalgebra::{DMatrix, DVector};

/// Membrane model. Potentials in mV, time in ms, currents in μA/cm² for a
/// membrane capacitance of 1 μF/cm².
pub trait IonicModel: Send + Sync {
    fn name(&self) -> &str;
    /// Number of state variables besides the potential.
    fn num_states(&self) -> usize;
    /// Resting potential and state.
    fn resting(&self) -> (f64, Vec<f64>);
    /// Total ionic current I_ion(u, w).
    fn current(&self, u: f64, w: &[f64]) -> f64;
    /// State rates G(u, w).
    fn rates(&self, u: f64, w: &[f64], dw: &mut [f64]);
    /// Advances the state by `dt` at fixed `u`. Forward Euler by default;
    /// models with gating variables override this with Rush-Larsen steps.
    fn advance(&self, u: f64, w: &mut [f64], dt: f64) {
        let mut dw = vec![0.0; w.len()];
        self.rates(u, w, &mut dw);
        for (x, d) in w.iter_mut().zip(&dw) {
            *x += dt * d;
        }
    }
}

/// Rush-Larsen update of a gate towards `inf` with time constant `tau`.
#[inline]
pub(crate) fn rush_larsen(x: f64, inf: f64, tau: f64, dt: f64) -> f64 {
    inf - (inf - x) * (-dt / tau).exp()
}

/// Mitchell-Schaeffer model rescaled to millivolts.
///
/// With v = (u - u_rest)/(u_peak - u_rest):
/// dv/dt = h v²(1 - v)/tau_in - v/tau_out,
/// dh/dt = (1 - h)/tau_open below v_gate, -h/tau_close above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MitchellSchaeffer {
    pub tau_in: f64,
    pub tau_out: f64,
    pub tau_open: f64,
    pub tau_close: f64,
    pub v_gate: f64,
    pub u_rest: f64,
    pub u_peak: f64,
}

impl MitchellSchaeffer {
    /// Action potential of roughly 300 ms.
    pub fn ventricular() -> Self {
        MitchellSchaeffer {
            tau_in: 0.3,
            tau_out: 6.0,
            tau_open: 120.0,
            tau_close: 150.0,
            v_gate: 0.13,
            u_rest: -85.0,
            u_peak: 40.0,
        }
    }

    /// Shorter plateau, roughly 200 ms.
    pub fn atrial() -> Self {
        MitchellSchaeffer { tau_close: 100.0, tau_open: 100.0, u_rest: -81.0, u_peak: 30.0, ..Self::ventricular() }
    }

    fn range(&self) -> f64 {
        self.u_peak - self.u_rest
    }
}

impl IonicModel for MitchellSchaeffer {
    fn name(&self) -> &str {
        "mitchell-schaeffer"
    }

    fn num_states(&self) -> usize {
        1
    }

    fn resting(&self) -> (f64, Vec<f64>) {
        (self.u_rest, vec![1.0])
    }

    fn current(&self, u: f64, w: &[f64]) -> f64 {
        let v = (u - self.u_rest) / self.range();
        -self.range() * (w[0] * v * v * (1.0 - v) / self.tau_in - v / self.tau_out)
    }

    fn rates(&self, u: f64, w: &[f64], dw: &mut [f64]) {
        let v = (u - self.u_rest) / self.range();
        dw[0] = if v < self.v_gate { (1.0 - w[0]) / self.tau_open } else { -w[0] / self.tau_close };
    }

    fn advance(&self, u: f64, w: &mut [f64], dt: f64) {
        let v = (u - self.u_rest) / self.range();
        w[0] = if v < self.v_gate {
            rush_larsen(w[0], 1.0, self.tau_open, dt)
        } else {
            rush_larsen(w[0], 0.0, self.tau_close, dt)
        };
    }
}

/// Linear membrane I_ion = lambda (u - u0), without state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMembrane {
    pub lambda: f64,
    pub u0: f64,
}

impl IonicModel for LinearMembrane {
    fn name(&self) -> &str {
        "linear"
    }
    fn num_states(&self) -> usize {
        0
    }
    fn resting(&self) -> (f64, Vec<f64>) {
        (self.u0, Vec::new())
    }
    fn current(&self, u: f64, _w: &[f64]) -> f64 {
        self.lambda * (u - self.u0)
    }
    fn rates(&self, _u: f64, _w: &[f64], _dw: &mut [f64]) {}
}

/// No ionic current; pure diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Passive;

impl IonicModel for Passive {
    fn name(&self) -> &str {
        "passive"
    }
    fn num_states(&self) -> usize {
        0
    }
    fn resting(&self) -> (f64, Vec<f64>) {
        (0.0, Vec::new())
    }
    fn current(&self, _u: f64, _w: &[f64]) -> f64 {
        0.0
    }
    fn rates(&self, _u: f64, _w: &[f64], _dw: &mut [f64]) {}
}

/// Refines a resting state with Newton iterations on
/// (-I_ion, G) = 0. Only `u` and the states listed in `free` move; the
/// rest act as parameters. The Jacobian is formed by central differences
/// in relative coordinates and inverted through a truncated SVD, which
/// handles the conserved charge direction of full models.
pub fn refine_resting(model: &dyn IonicModel, u: f64, w: &[f64], free: &[usize]) -> (f64, Vec<f64>) {
    let eval = |x: &[f64]| {
        let mut w = w.to_vec();
        for (k, &i) in free.iter().enumerate() {
            w[i] = x[k + 1];
        }
        let mut dw = vec![0.0; w.len()];
        model.rates(x[0], &w, &mut dw);
        let mut r = DVector::zeros(free.len() + 1);
        r[0] = -model.current(x[0], &w);
        for (k, &i) in free.iter().enumerate() {
            r[k + 1] = dw[i];
        }
        (r, w)
    };
    let mut x: Vec<f64> = std::iter::once(u).chain(free.iter().map(|&i| w[i])).collect();
    let scale: Vec<f64> = x.iter().map(|v| v.abs().max(1e-12)).collect();
    let n = x.len();
    let mut best = (eval(&x).0.amax(), x.clone());
    for _ in 0..50 {
        let (r, _) = eval(&x);
        let norm = r.amax();
        if norm < best.0 {
            best = (norm, x.clone());
        }
        if norm < 1e-14 {
            break;
        }
        let mut jac = DMatrix::zeros(n, n);
        for c in 0..n {
            let h = 1e-7 * scale[c];
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[c] += h;
            xm[c] -= h;
            jac.set_column(c, &((eval(&xp).0 - eval(&xm).0) * (scale[c] / (2.0 * h))));
        }
        let svd = jac.svd(true, true);
        let eps = 1e-10 * svd.singular_values.max();
        let Ok(dz) = svd.solve(&(-r), eps) else { break };
        for c in 0..n {
            x[c] += dz[c] * scale[c];
        }
    }
    let (_, w) = eval(&best.1);
    (best.1[0], w)
}
