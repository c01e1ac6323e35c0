//! ten Tusscher-Panfilov 2006 human ventricular model (epicardial cell).

use super::ionic::{refine_resting, rush_larsen, IonicModel};
use std::sync::OnceLock;

const R: f64 = 8314.472;
const T: f64 = 310.0;
const F: f64 = 96485.3415;
const RTF: f64 = R * T / F;
const CM: f64 = 0.185;
const V_C: f64 = 0.016404;
const V_SR: f64 = 0.001094;
const V_SS: f64 = 0.00005468;
const KO: f64 = 5.4;
const NAO: f64 = 140.0;
const CAO: f64 = 2.0;
const G_K1: f64 = 5.405;
const G_KR: f64 = 0.153;
const G_KS: f64 = 0.392;
const P_KNA: f64 = 0.03;
const G_NA: f64 = 14.838;
const G_BNA: f64 = 0.00029;
const P_NAK: f64 = 2.724;
const K_MK: f64 = 1.0;
const K_MNA: f64 = 40.0;
const K_NACA: f64 = 1000.0;
const K_MCA: f64 = 1.38;
const K_MNAI: f64 = 87.5;
const K_SAT: f64 = 0.1;
const GAMMA: f64 = 0.35;
const ALPHA: f64 = 2.5;
const G_CAL: f64 = 0.0000398;
const G_BCA: f64 = 0.000592;
const G_PCA: f64 = 0.1238;
const K_PCA: f64 = 0.0005;
const G_PK: f64 = 0.0146;
const G_TO: f64 = 0.294;
const K1P: f64 = 0.15;
const K2P: f64 = 0.045;
const K3: f64 = 0.06;
const K4: f64 = 0.005;
const EC: f64 = 1.5;
const MAX_SR: f64 = 2.5;
const MIN_SR: f64 = 1.0;
const V_REL: f64 = 0.102;
const V_XFER: f64 = 0.0038;
const K_UP: f64 = 0.00025;
const V_LEAK: f64 = 0.00036;
const V_MAXUP: f64 = 0.006375;
const BUF_C: f64 = 0.2;
const K_BUFC: f64 = 0.001;
const BUF_SR: f64 = 10.0;
const K_BUFSR: f64 = 0.3;
const BUF_SS: f64 = 0.4;
const K_BUFSS: f64 = 0.00025;

// State layout.
const KI: usize = 0;
const NAI: usize = 1;
const CAI: usize = 2;
const CASS: usize = 3;
const CASR: usize = 4;
const RBAR: usize = 5;
const XR1: usize = 6;
const XR2: usize = 7;
const XS: usize = 8;
const M: usize = 9;
const H: usize = 10;
const J: usize = 11;
const D: usize = 12;
const FF: usize = 13;
const F2: usize = 14;
const FCASS: usize = 15;
const S: usize = 16;
const RR: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TenTusscher2006;

struct Currents {
    na: f64,
    k1: f64,
    to: f64,
    kr: f64,
    ks: f64,
    cal: f64,
    naca: f64,
    nak: f64,
    pca: f64,
    pk: f64,
    bna: f64,
    bca: f64,
}

impl Currents {
    fn total(&self) -> f64 {
        self.na + self.k1 + self.to + self.kr + self.ks + self.cal + self.naca + self.nak + self.pca + self.pk + self.bna + self.bca
    }
}

fn currents(v: f64, w: &[f64]) -> Currents {
    let e_na = RTF * (NAO / w[NAI]).ln();
    let e_k = RTF * (KO / w[KI]).ln();
    let e_ks = RTF * ((KO + P_KNA * NAO) / (w[KI] + P_KNA * w[NAI])).ln();
    let e_ca = 0.5 * RTF * (CAO / w[CAI]).ln();
    let a_k1 = 0.1 / (1.0 + (0.06 * (v - e_k - 200.0)).exp());
    let b_k1 = (3.0 * (0.0002 * (v - e_k + 100.0)).exp() + (0.1 * (v - e_k - 10.0)).exp())
        / (1.0 + (-0.5 * (v - e_k)).exp());
    let xk1 = a_k1 / (a_k1 + b_k1);
    let vf = v / RTF;
    let v15 = 2.0 * (v - 15.0) / RTF;
    let cal_drive = if v15.abs() < 1e-9 {
        // Limit of x/(e^x - 1) at x -> 0.
        2.0 * F * (0.25 * w[CASS] - CAO)
    } else {
        4.0 * (v - 15.0) * F / RTF * (0.25 * w[CASS] * v15.exp() - CAO) / (v15.exp() - 1.0)
    };
    Currents {
        na: G_NA * w[M].powi(3) * w[H] * w[J] * (v - e_na),
        k1: G_K1 * (KO / 5.4).sqrt() * xk1 * (v - e_k),
        to: G_TO * w[RR] * w[S] * (v - e_k),
        kr: G_KR * (KO / 5.4).sqrt() * w[XR1] * w[XR2] * (v - e_k),
        ks: G_KS * w[XS] * w[XS] * (v - e_ks),
        cal: G_CAL * w[D] * w[FF] * w[F2] * w[FCASS] * cal_drive,
        naca: K_NACA
            * ((GAMMA * vf).exp() * w[NAI].powi(3) * CAO - ((GAMMA - 1.0) * vf).exp() * NAO.powi(3) * w[CAI] * ALPHA)
            / ((K_MNAI.powi(3) + NAO.powi(3)) * (K_MCA + CAO) * (1.0 + K_SAT * ((GAMMA - 1.0) * vf).exp())),
        nak: P_NAK * KO / (KO + K_MK) * w[NAI] / (w[NAI] + K_MNA)
            / (1.0 + 0.1245 * (-0.1 * vf).exp() + 0.0353 * (-vf).exp()),
        pca: G_PCA * w[CAI] / (K_PCA + w[CAI]),
        pk: G_PK * (v - e_k) / (1.0 + ((25.0 - v) / 5.98).exp()),
        bna: G_BNA * (v - e_na),
        bca: G_BCA * (v - e_ca),
    }
}

/// Gate steady states and time constants at potential `v`.
fn gates(v: f64, cass: f64) -> [(usize, f64, f64); 12] {
    let m_inf = 1.0 / (1.0 + ((-56.86 - v) / 9.03).exp()).powi(2);
    let a_m = 1.0 / (1.0 + ((-60.0 - v) / 5.0).exp());
    let b_m = 0.1 / (1.0 + ((v + 35.0) / 5.0).exp()) + 0.1 / (1.0 + ((v - 50.0) / 200.0).exp());
    let h_inf = 1.0 / (1.0 + ((v + 71.55) / 7.43).exp()).powi(2);
    let (a_h, b_h, a_j, b_j) = if v >= -40.0 {
        (
            0.0,
            0.77 / (0.13 * (1.0 + (-(v + 10.66) / 11.1).exp())),
            0.0,
            0.6 * (0.057 * v).exp() / (1.0 + (-0.1 * (v + 32.0)).exp()),
        )
    } else {
        (
            0.057 * (-(v + 80.0) / 6.8).exp(),
            2.7 * (0.079 * v).exp() + 3.1e5 * (0.3485 * v).exp(),
            (-25428.0 * (0.2444 * v).exp() - 6.948e-6 * (-0.04391 * v).exp()) * (v + 37.78)
                / (1.0 + (0.311 * (v + 79.23)).exp()),
            0.02424 * (-0.01052 * v).exp() / (1.0 + (-0.1378 * (v + 40.14)).exp()),
        )
    };
    let xr1_inf = 1.0 / (1.0 + ((-26.0 - v) / 7.0).exp());
    let tau_xr1 = 450.0 / (1.0 + ((-45.0 - v) / 10.0).exp()) * 6.0 / (1.0 + ((v + 30.0) / 11.5).exp());
    let xr2_inf = 1.0 / (1.0 + ((v + 88.0) / 24.0).exp());
    let tau_xr2 = 3.0 / (1.0 + ((-60.0 - v) / 20.0).exp()) * 1.12 / (1.0 + ((v - 60.0) / 20.0).exp());
    let xs_inf = 1.0 / (1.0 + ((-5.0 - v) / 14.0).exp());
    let tau_xs = 1400.0 / (1.0 + ((5.0 - v) / 6.0).exp()).sqrt() / (1.0 + ((v - 35.0) / 15.0).exp()) + 80.0;
    let d_inf = 1.0 / (1.0 + ((-8.0 - v) / 7.5).exp());
    let tau_d = (1.4 / (1.0 + ((-35.0 - v) / 13.0).exp()) + 0.25) * 1.4 / (1.0 + ((v + 5.0) / 5.0).exp())
        + 1.0 / (1.0 + ((50.0 - v) / 20.0).exp());
    let f_inf = 1.0 / (1.0 + ((v + 20.0) / 7.0).exp());
    let tau_f = 1102.5 * (-(v + 27.0).powi(2) / 225.0).exp()
        + 200.0 / (1.0 + ((13.0 - v) / 10.0).exp())
        + 180.0 / (1.0 + ((v + 30.0) / 10.0).exp())
        + 20.0;
    let f2_inf = 0.67 / (1.0 + ((v + 35.0) / 7.0).exp()) + 0.33;
    let tau_f2 = 562.0 * (-(v + 27.0).powi(2) / 240.0).exp()
        + 31.0 / (1.0 + ((25.0 - v) / 10.0).exp())
        + 80.0 / (1.0 + ((v + 30.0) / 10.0).exp());
    let c = (cass / 0.05).powi(2);
    let fcass_inf = 0.6 / (1.0 + c) + 0.4;
    let tau_fcass = 80.0 / (1.0 + c) + 2.0;
    let s_inf = 1.0 / (1.0 + ((v + 20.0) / 5.0).exp());
    let tau_s = 85.0 * (-(v + 45.0).powi(2) / 320.0).exp() + 5.0 / (1.0 + ((v - 20.0) / 5.0).exp()) + 3.0;
    let r_inf = 1.0 / (1.0 + ((20.0 - v) / 6.0).exp());
    let tau_r = 9.5 * (-(v + 40.0).powi(2) / 1800.0).exp() + 0.8;
    [
        (M, m_inf, a_m * b_m),
        (H, h_inf, 1.0 / (a_h + b_h)),
        (J, h_inf, 1.0 / (a_j + b_j)),
        (XR1, xr1_inf, tau_xr1),
        (XR2, xr2_inf, tau_xr2),
        (XS, xs_inf, tau_xs),
        (D, d_inf, tau_d),
        (FF, f_inf, tau_f),
        (F2, f2_inf, tau_f2),
        (FCASS, fcass_inf, tau_fcass),
        (S, s_inf, tau_s),
        (RR, r_inf, tau_r),
    ]
}

/// Rates of the non-gate variables (concentrations and RyR state).
fn concentration_rates(w: &[f64], c: &Currents, dw: &mut [f64]) {
    let k_casr = MAX_SR - (MAX_SR - MIN_SR) / (1.0 + (EC / w[CASR]).powi(2));
    let k1 = K1P / k_casr;
    let k2 = K2P * k_casr;
    let o = k1 * w[CASS].powi(2) * w[RBAR] / (K3 + k1 * w[CASS].powi(2));
    let i_rel = V_REL * o * (w[CASR] - w[CASS]);
    let i_up = V_MAXUP / (1.0 + K_UP * K_UP / (w[CAI] * w[CAI]));
    let i_leak = V_LEAK * (w[CASR] - w[CAI]);
    let i_xfer = V_XFER * (w[CASS] - w[CAI]);
    let buf_c = 1.0 / (1.0 + BUF_C * K_BUFC / (w[CAI] + K_BUFC).powi(2));
    let buf_sr = 1.0 / (1.0 + BUF_SR * K_BUFSR / (w[CASR] + K_BUFSR).powi(2));
    let buf_ss = 1.0 / (1.0 + BUF_SS * K_BUFSS / (w[CASS] + K_BUFSS).powi(2));
    dw[RBAR] = -k2 * w[CASS] * w[RBAR] + K4 * (1.0 - w[RBAR]);
    dw[CAI] = buf_c
        * ((i_leak - i_up) * V_SR / V_C + i_xfer - (c.bca + c.pca - 2.0 * c.naca) * CM / (2.0 * V_C * F));
    dw[CASR] = buf_sr * (i_up - i_rel - i_leak);
    dw[CASS] = buf_ss * (-c.cal * CM / (2.0 * V_SS * F) + i_rel * V_SR / V_SS - i_xfer * V_C / V_SS);
    dw[NAI] = -(c.na + c.bna + 3.0 * c.nak + 3.0 * c.naca) * CM / (V_C * F);
    dw[KI] = -(c.k1 + c.to + c.kr + c.ks - 2.0 * c.nak + c.pk) * CM / (V_C * F);
}

/// Unpaced rest: the published initial conditions relaxed for ten minutes
/// without stimulation. The concentrations settle well below their paced
/// values.
fn initial_state() -> (f64, Vec<f64>) {
    let mut w = vec![0.0; 18];
    w[KI] = 143.272260177314;
    w[NAI] = 3.4162918913801383;
    w[CAI] = 2.596651627871552e-05;
    w[CASS] = 7.463045862145897e-05;
    w[CASR] = 0.18902701349951095;
    w[RBAR] = 0.9983393268104758;
    w[XR1] = 0.00016662675050859439;
    w[XR2] = 0.4885136195319762;
    w[XS] = 0.002872219598228712;
    w[M] = 0.0012025337189021197;
    w[H] = 0.7876748674066882;
    w[J] = 0.7876748674066882;
    w[D] = 2.7000852306666513e-05;
    w[FF] = 0.9999292813487497;
    w[F2] = 0.9995963464363724;
    w[FCASS] = 0.999998663273693;
    w[S] = 0.9999984533576973;
    w[RR] = 1.8303279410769526e-08;
    (-86.89711343245818, w)
}

impl IonicModel for TenTusscher2006 {
    fn name(&self) -> &str {
        "ten-tusscher-2006"
    }

    fn num_states(&self) -> usize {
        18
    }

    fn resting(&self) -> (f64, Vec<f64>) {
        static REST: OnceLock<(f64, Vec<f64>)> = OnceLock::new();
        REST.get_or_init(|| {
            let (u, w) = initial_state();
            refine_resting(self, u, &w, &(0..18).collect::<Vec<_>>())
        })
        .clone()
    }

    fn current(&self, u: f64, w: &[f64]) -> f64 {
        currents(u, w).total()
    }

    fn rates(&self, u: f64, w: &[f64], dw: &mut [f64]) {
        let c = currents(u, w);
        concentration_rates(w, &c, dw);
        for (k, inf, tau) in gates(u, w[CASS]) {
            dw[k] = (inf - w[k]) / tau;
        }
    }

    fn advance(&self, u: f64, w: &mut [f64], dt: f64) {
        let c = currents(u, w);
        let mut dw = [0.0; 18];
        concentration_rates(w, &c, &mut dw);
        for k in [KI, NAI, CAI, CASS, CASR, RBAR] {
            w[k] += dt * dw[k];
        }
        for (k, inf, tau) in gates(u, w[CASS]) {
            w[k] = rush_larsen(w[k], inf, tau, dt);
        }
    }
}
