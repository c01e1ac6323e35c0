//! Courtemanche-Ramirez-Nattel 1998 human atrial model.

use super::ionic::{refine_resting, rush_larsen, IonicModel};
use std::sync::OnceLock;

const R: f64 = 8.3143;
const T: f64 = 310.0;
const F: f64 = 96.4867;
const RTF: f64 = R * T / F;
const CM: f64 = 100.0;
const V_I: f64 = 13668.0;
const V_UP: f64 = 1109.52;
const V_REL: f64 = 96.48;
const KO: f64 = 5.4;
const NAO: f64 = 140.0;
const CAO: f64 = 1.8;
const G_NA: f64 = 7.8;
const G_K1: f64 = 0.09;
const G_TO: f64 = 0.1652;
const G_KR: f64 = 0.029411765;
const G_KS: f64 = 0.12941176;
const G_CAL: f64 = 0.12375;
const G_BCA: f64 = 0.001131;
const G_BNA: f64 = 0.0006744375;
const I_NAK_MAX: f64 = 0.59933874;
const I_NACA_MAX: f64 = 1600.0;
const I_PCA_MAX: f64 = 0.275;
const I_UP_MAX: f64 = 0.005;
const K_Q10: f64 = 3.0;
const GAMMA: f64 = 0.35;
const KM_NAI: f64 = 10.0;
const KM_KO: f64 = 1.5;
const KM_NA: f64 = 87.5;
const KM_CA: f64 = 1.38;
const K_SAT: f64 = 0.1;
const K_REL: f64 = 30.0;
const K_UP: f64 = 0.00092;
const CA_UP_MAX: f64 = 15.0;
const CMDN_MAX: f64 = 0.05;
const TRPN_MAX: f64 = 0.07;
const CSQN_MAX: f64 = 10.0;
const KM_CMDN: f64 = 0.00238;
const KM_TRPN: f64 = 0.0005;
const KM_CSQN: f64 = 0.8;
const TAU_TR: f64 = 180.0;
const TAU_U: f64 = 8.0;

const M: usize = 0;
const H: usize = 1;
const J: usize = 2;
const OA: usize = 3;
const OI: usize = 4;
const UA: usize = 5;
const UI: usize = 6;
const XR: usize = 7;
const XS: usize = 8;
const D: usize = 9;
const FF: usize = 10;
const FCA: usize = 11;
const U: usize = 12;
const V: usize = 13;
const W: usize = 14;
const NAI: usize = 15;
const KI: usize = 16;
const CAI: usize = 17;
const CAUP: usize = 18;
const CAREL: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Courtemanche1998;

struct Currents {
    na: f64,
    k1: f64,
    to: f64,
    kur: f64,
    kr: f64,
    ks: f64,
    cal: f64,
    nak: f64,
    naca: f64,
    bca: f64,
    bna: f64,
    pca: f64,
}

impl Currents {
    fn total(&self) -> f64 {
        self.na + self.k1 + self.to + self.kur + self.kr + self.ks + self.cal + self.nak + self.naca + self.bca + self.bna + self.pca
    }
}

fn currents(v: f64, w: &[f64]) -> Currents {
    let e_na = RTF * (NAO / w[NAI]).ln();
    let e_k = RTF * (KO / w[KI]).ln();
    let e_ca = 0.5 * RTF * (CAO / w[CAI]).ln();
    let vf = v / RTF;
    let sigma = ((NAO / 67.3).exp() - 1.0) / 7.0;
    let f_nak = 1.0 / (1.0 + 0.1245 * (-0.1 * vf).exp() + 0.0365 * sigma * (-vf).exp());
    let g_kur = 0.005 + 0.05 / (1.0 + (-(v - 15.0) / 13.0).exp());
    Currents {
        na: G_NA * w[M].powi(3) * w[H] * w[J] * (v - e_na),
        k1: G_K1 * (v - e_k) / (1.0 + (0.07 * (v + 80.0)).exp()),
        to: G_TO * w[OA].powi(3) * w[OI] * (v - e_k),
        kur: g_kur * w[UA].powi(3) * w[UI] * (v - e_k),
        kr: G_KR * w[XR] * (v - e_k) / (1.0 + ((v + 15.0) / 22.4).exp()),
        ks: G_KS * w[XS] * w[XS] * (v - e_k),
        cal: G_CAL * w[D] * w[FF] * w[FCA] * (v - 65.0),
        nak: I_NAK_MAX * f_nak / (1.0 + (KM_NAI / w[NAI]).powf(1.5)) * KO / (KO + KM_KO),
        naca: I_NACA_MAX
            * ((GAMMA * vf).exp() * w[NAI].powi(3) * CAO - ((GAMMA - 1.0) * vf).exp() * NAO.powi(3) * w[CAI])
            / ((KM_NA.powi(3) + NAO.powi(3)) * (KM_CA + CAO) * (1.0 + K_SAT * ((GAMMA - 1.0) * vf).exp())),
        bca: G_BCA * (v - e_ca),
        bna: G_BNA * (v - e_na),
        pca: I_PCA_MAX * w[CAI] / (0.0005 + w[CAI]),
    }
}

/// x / (1 - exp(-x / k)) with its limit at x = 0.
fn xexp(x: f64, k: f64) -> f64 {
    if x.abs() < 1e-7 {
        k
    } else {
        x / (1.0 - (-x / k).exp())
    }
}

fn gates(v: f64, w: &[f64], fn_: f64) -> [(usize, f64, f64); 15] {
    let a_m = 0.32 * xexp(v + 47.13, 10.0);
    let b_m = 0.08 * (-v / 11.0).exp();
    let (a_h, b_h, a_j, b_j) = if v < -40.0 {
        (
            0.135 * ((v + 80.0) / -6.8).exp(),
            3.56 * (0.079 * v).exp() + 3.1e5 * (0.35 * v).exp(),
            (-127140.0 * (0.2444 * v).exp() - 3.474e-5 * (-0.04391 * v).exp()) * (v + 37.78)
                / (1.0 + (0.311 * (v + 79.23)).exp()),
            0.1212 * (-0.01052 * v).exp() / (1.0 + (-0.1378 * (v + 40.14)).exp()),
        )
    } else {
        (
            0.0,
            1.0 / (0.13 * (1.0 + ((v + 10.66) / -11.1).exp())),
            0.0,
            0.3 * (-2.535e-7 * v).exp() / (1.0 + (-0.1 * (v + 32.0)).exp()),
        )
    };
    let ab = |a: f64, b: f64| (a / (a + b), 1.0 / (a + b));
    let (m_inf, tau_m) = ab(a_m, b_m);
    let (h_inf, tau_h) = ab(a_h, b_h);
    let (j_inf, tau_j) = ab(a_j, b_j);
    let a_oa = 0.65 / ((-(v + 10.0) / 8.5).exp() + (-(v - 30.0) / 59.0).exp());
    let b_oa = 0.65 / (2.5 + ((v + 82.0) / 17.0).exp());
    let tau_oa = 1.0 / (a_oa + b_oa) / K_Q10;
    let oa_inf = 1.0 / (1.0 + (-(v + 20.47) / 17.54).exp());
    let a_oi = 1.0 / (18.53 + ((v + 113.7) / 10.95).exp());
    let b_oi = 1.0 / (35.56 + (-(v + 1.26) / 7.44).exp());
    let tau_oi = 1.0 / (a_oi + b_oi) / K_Q10;
    let oi_inf = 1.0 / (1.0 + ((v + 43.1) / 5.3).exp());
    let tau_ua = tau_oa;
    let ua_inf = 1.0 / (1.0 + (-(v + 30.3) / 9.6).exp());
    let a_ui = 1.0 / (21.0 + (-(v - 185.0) / 28.0).exp());
    let b_ui = ((v - 158.0) / 16.0).exp();
    let tau_ui = 1.0 / (a_ui + b_ui) / K_Q10;
    let ui_inf = 1.0 / (1.0 + ((v - 99.45) / 27.48).exp());
    let a_xr = 0.0003 * xexp(v + 14.1, 5.0);
    let b_xr = -7.3898e-5 * xexp(v - 3.3328, -5.1237);
    let tau_xr = 1.0 / (a_xr + b_xr);
    let xr_inf = 1.0 / (1.0 + (-(v + 14.1) / 6.5).exp());
    let a_xs = 4e-5 * xexp(v - 19.9, 17.0);
    let b_xs = -3.5e-5 * xexp(v - 19.9, -9.0);
    let tau_xs = 0.5 / (a_xs + b_xs);
    let xs_inf = (1.0 + (-(v - 19.9) / 12.7).exp()).powf(-0.5);
    let tau_d = if (v + 10.0).abs() < 1e-7 {
        4.579 / (1.0 + (-(v + 10.0) / 6.24).exp())
    } else {
        (1.0 - (-(v + 10.0) / 6.24).exp()) / (0.035 * (v + 10.0) * (1.0 + (-(v + 10.0) / 6.24).exp()))
    };
    let d_inf = 1.0 / (1.0 + (-(v + 10.0) / 8.0).exp());
    let tau_f = 9.0 / (0.0197 * (-(0.0337f64).powi(2) * (v + 10.0).powi(2)).exp() + 0.02);
    let f_inf = 1.0 / (1.0 + ((v + 28.0) / 6.9).exp());
    let fca_inf = 1.0 / (1.0 + w[CAI] / 0.00035);
    let u_inf = 1.0 / (1.0 + (-(fn_ - 3.4175e-13) / 13.67e-16).exp());
    let tau_v = 1.91 + 2.09 * u_inf;
    let v_inf = 1.0 - 1.0 / (1.0 + (-(fn_ - 6.835e-14) / 13.67e-16).exp());
    let tau_w = if (v - 7.9).abs() < 1e-7 {
        6.0 * 0.2 / 1.3
    } else {
        6.0 * (1.0 - (-(v - 7.9) / 5.0).exp()) / ((1.0 + 0.3 * (-(v - 7.9) / 5.0).exp()) * (v - 7.9))
    };
    let w_inf = 1.0 - 1.0 / (1.0 + (-(v - 40.0) / 17.0).exp());
    [
        (M, m_inf, tau_m),
        (H, h_inf, tau_h),
        (J, j_inf, tau_j),
        (OA, oa_inf, tau_oa),
        (OI, oi_inf, tau_oi),
        (UA, ua_inf, tau_ua),
        (UI, ui_inf, tau_ui),
        (XR, xr_inf, tau_xr),
        (XS, xs_inf, tau_xs),
        (D, d_inf, tau_d),
        (FF, f_inf, tau_f),
        (FCA, fca_inf, 2.0),
        (U, u_inf, TAU_U),
        (V, v_inf, tau_v),
        (W, w_inf, tau_w),
    ]
}

/// Release flux, its trigger signal Fn and the concentration rates.
fn concentration_rates(w: &[f64], c: &Currents, dw: &mut [f64]) -> f64 {
    let i_rel = K_REL * w[U] * w[U] * w[V] * w[W] * (w[CAREL] - w[CAI]);
    let i_tr = (w[CAUP] - w[CAREL]) / TAU_TR;
    let i_up = I_UP_MAX / (1.0 + K_UP / w[CAI]);
    let i_leak = I_UP_MAX * w[CAUP] / CA_UP_MAX;
    let fn_ = 1e3 * (1e-15 * V_REL * i_rel - 1e-15 / (2.0 * F) * (0.5 * c.cal * CM - 0.2 * c.naca * CM));
    dw[NAI] = (-3.0 * c.nak - 3.0 * c.naca - c.bna - c.na) * CM / (V_I * F);
    dw[KI] = (2.0 * c.nak - c.k1 - c.to - c.kur - c.kr - c.ks) * CM / (V_I * F);
    let b1 = (2.0 * c.naca - c.pca - c.cal - c.bca) * CM / (2.0 * V_I * F)
        + (V_UP * (i_leak - i_up) + i_rel * V_REL) / V_I;
    let b2 = 1.0
        + TRPN_MAX * KM_TRPN / (w[CAI] + KM_TRPN).powi(2)
        + CMDN_MAX * KM_CMDN / (w[CAI] + KM_CMDN).powi(2);
    dw[CAI] = b1 / b2;
    dw[CAUP] = i_up - i_leak - i_tr * V_REL / V_UP;
    dw[CAREL] = (i_tr - i_rel) / (1.0 + CSQN_MAX * KM_CSQN / (w[CAREL] + KM_CSQN).powi(2));
    fn_
}

/// Published initial conditions; refined into an exact rest state on first use.
fn initial_state() -> (f64, Vec<f64>) {
    let mut w = vec![0.0; 20];
    w[M] = 2.908e-3;
    w[H] = 0.9649;
    w[J] = 0.9775;
    w[OA] = 3.043e-2;
    w[OI] = 0.9992;
    w[UA] = 4.966e-3;
    w[UI] = 0.9986;
    w[XR] = 3.296e-5;
    w[XS] = 1.869e-2;
    w[D] = 1.367e-4;
    w[FF] = 0.9996;
    w[FCA] = 0.7755;
    w[U] = 0.0;
    w[V] = 1.0;
    w[W] = 0.9992;
    w[NAI] = 11.17;
    w[KI] = 139.0;
    w[CAI] = 1.013e-4;
    w[CAUP] = 1.488;
    w[CAREL] = 1.488;
    (-81.18, w)
}

impl IonicModel for Courtemanche1998 {
    fn name(&self) -> &str {
        "courtemanche-1998"
    }

    fn num_states(&self) -> usize {
        20
    }

    fn resting(&self) -> (f64, Vec<f64>) {
        static REST: OnceLock<(f64, Vec<f64>)> = OnceLock::new();
        REST.get_or_init(|| {
            let (u, w) = initial_state();
            refine_resting(self, u, &w, &(0..20).collect::<Vec<_>>())
        })
        .clone()
    }

    fn current(&self, u: f64, w: &[f64]) -> f64 {
        currents(u, w).total()
    }

    fn rates(&self, u: f64, w: &[f64], dw: &mut [f64]) {
        let c = currents(u, w);
        let fn_ = concentration_rates(w, &c, dw);
        for (k, inf, tau) in gates(u, w, fn_) {
            dw[k] = (inf - w[k]) / tau;
        }
    }

    fn advance(&self, u: f64, w: &mut [f64], dt: f64) {
        let c = currents(u, w);
        let mut dw = [0.0; 20];
        let fn_ = concentration_rates(w, &c, &mut dw);
        let g = gates(u, w, fn_);
        for k in [NAI, KI, CAI, CAUP, CAREL] {
            w[k] += dt * dw[k];
        }
        for (k, inf, tau) in g {
            w[k] = rush_larsen(w[k], inf, tau, dt);
        }
    }
}
