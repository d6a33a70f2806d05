//! Right-hand sides of the network models and of the closed-loop cascade.
//!
//! Every 2n-vector stores the d-components of all nodes first, then the
//! q-components: `[x_d(0..n), x_q(0..n)]`. Line currents use the same layout
//! over the m edges.

use serde::{Deserialize, Serialize};

use crate::control::{self, GainSet};
use crate::error::{Error, Result};
use crate::netmodel::Network;

/// Below this squared voltage magnitude (V²) the constant power load model is
/// rejected.
pub const CPL_SINGULARITY_THRESHOLD: f64 = 1e-6;

/// Tolerance on `|σ_d| ≤ 1` before the cascade reports a broken invariant.
pub const SIGMA_TOLERANCE: f64 = 1e-9;

/// Current drawn by a constant power load at voltage `v = (v_d, v_q)`.
pub fn cpl_current(node: usize, v: [f64; 2], p: f64, q: f64) -> Result<[f64; 2]> {
    let [vd, vq] = v;
    let norm_sq = vd * vd + vq * vq;
    if !(norm_sq > CPL_SINGULARITY_THRESHOLD) {
        return Err(Error::CplSingularity { node, norm_sq });
    }
    Ok([
        2.0 / 3.0 * (vd * p + vq * q) / norm_sq,
        2.0 / 3.0 * (vq * p - vd * q) / norm_sq,
    ])
}

/// Per-node active and reactive power (W, var). Used both for total demand
/// and for deviations from the nominal demand.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerDemand {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Deviation of the load from its nominal value.
pub type LoadDisturbance = PowerDemand;

impl PowerDemand {
    pub fn zeros(n: usize) -> Self {
        Self {
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    pub fn nominal(net: &Network) -> Self {
        Self {
            p: net.model.load_p.clone(),
            q: net.model.load_q.clone(),
        }
    }

    /// Nominal demand of `net` plus this deviation.
    pub fn on_top_of_nominal(&self, net: &Network) -> Self {
        Self {
            p: net.model.load_p.iter().zip(&self.p).map(|(a, b)| a + b).collect(),
            q: net.model.load_q.iter().zip(&self.q).map(|(a, b)| a + b).collect(),
        }
    }

    /// True when every deviation respects the bounds of `net`.
    pub fn within_bounds(&self, net: &Network) -> bool {
        let m = &net.model;
        self.p.iter().zip(&m.dp_max).all(|(d, b)| d.abs() <= *b)
            && self.q.iter().zip(&m.dq_max).all(|(d, b)| d.abs() <= *b)
    }
}

/// State of the full model: node voltages and line currents.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueState {
    pub v: Vec<f64>,
    pub i_line: Vec<f64>,
}

fn check_len(what: &'static str, x: &[f64], expected: usize) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Dimension {
            what,
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Full model with dynamic line currents.
pub fn full_rhs(
    net: &Network,
    state: &TrueState,
    i_inj: &[f64],
    load: &PowerDemand,
) -> Result<TrueState> {
    let n = net.n();
    let m = net.m();
    check_len("voltage", &state.v, 2 * n)?;
    check_len("line current", &state.i_line, 2 * m)?;
    check_len("injection", i_inj, 2 * n)?;
    let model = &net.model;
    let w = model.grid_frequency;
    let (vd, vq) = state.v.split_at(n);
    let (id, iq) = state.i_line.split_at(m);
    let bt_id = net.incidence.apply_transpose(id);
    let bt_iq = net.incidence.apply_transpose(iq);

    let mut dv = vec![0.0; 2 * n];
    for i in 0..n {
        let c = model.capacitance[i];
        let g = cpl_current(i, [vd[i], vq[i]], load.p[i], load.q[i])?;
        dv[i] = (i_inj[i] + w * c * vq[i] - bt_id[i] - g[0]) / c;
        dv[n + i] = (i_inj[n + i] - w * c * vd[i] - bt_iq[i] - g[1]) / c;
    }

    let b_vd = net.incidence.apply(vd);
    let b_vq = net.incidence.apply(vq);
    let mut di = vec![0.0; 2 * m];
    for e in 0..m {
        let r = model.line_resistance[e];
        let l = model.line_inductance[e];
        di[e] = (-r * id[e] + w * l * iq[e] + b_vd[e]) / l;
        di[m + e] = (-r * iq[e] - w * l * id[e] + b_vq[e]) / l;
    }
    Ok(TrueState { v: dv, i_line: di })
}

/// Line currents `(ω_g L - r)⁻¹ B v`, channel by channel. This is the
/// substitution that turns the line coupling into the network Laplacian.
pub fn laplacian_line_currents(net: &Network, v: &[f64]) -> Vec<f64> {
    let n = net.n();
    let (vd, vq) = v.split_at(n);
    let w = &net.laplacian.weights;
    let mut out: Vec<f64> = net
        .incidence
        .apply(vd)
        .iter()
        .zip(w)
        .map(|(x, w)| x * w)
        .collect();
    out.extend(net.incidence.apply(vq).iter().zip(w).map(|(x, w)| x * w));
    out
}

/// Fixed point of the line-current block of the full model for fixed node
/// voltages.
pub fn line_equilibrium(net: &Network, v: &[f64]) -> Vec<f64> {
    let n = net.n();
    let m = net.m();
    let (vd, vq) = v.split_at(n);
    let bd = net.incidence.apply(vd);
    let bq = net.incidence.apply(vq);
    let mut out = vec![0.0; 2 * m];
    for e in 0..m {
        let r = net.model.line_resistance[e];
        let x = net.model.grid_frequency * net.model.line_inductance[e];
        let z2 = r * r + x * x;
        out[e] = (r * bd[e] + x * bq[e]) / z2;
        out[m + e] = (r * bq[e] - x * bd[e]) / z2;
    }
    out
}

/// Reduced model: line currents replaced by the Laplacian coupling.
pub fn reduced_rhs(net: &Network, v: &[f64], i_inj: &[f64], load: &PowerDemand) -> Result<Vec<f64>> {
    let n = net.n();
    check_len("voltage", v, 2 * n)?;
    check_len("injection", i_inj, 2 * n)?;
    let model = &net.model;
    let w = model.grid_frequency;
    let (vd, vq) = v.split_at(n);
    let lvd = net.laplacian.apply(vd);
    let lvq = net.laplacian.apply(vq);
    let mut dv = vec![0.0; 2 * n];
    for i in 0..n {
        let c = model.capacitance[i];
        let g = cpl_current(i, [vd[i], vq[i]], load.p[i], load.q[i])?;
        dv[i] = (i_inj[i] + w * c * vq[i] - lvd[i] - g[0]) / c;
        dv[n + i] = (i_inj[n + i] - w * c * vd[i] - lvq[i] - g[1]) / c;
    }
    Ok(dv)
}

/// Rated vector `z^o` (d-components rated voltage, q-components zero).
pub fn rated_vector(net: &Network) -> Vec<f64> {
    let n = net.n();
    let mut z = net.model.rated_voltage.clone();
    z.resize(2 * n, 0.0);
    z
}

/// Nominal model in coordinates shifted by the rated voltage, under nominal
/// load.
pub fn shifted_nominal_rhs(net: &Network, z_tilde: &[f64], i_tilde: &[f64]) -> Result<Vec<f64>> {
    let n = net.n();
    check_len("shifted nominal", z_tilde, 2 * n)?;
    check_len("injection", i_tilde, 2 * n)?;
    let model = &net.model;
    let w = model.grid_frequency;
    let (zd, zq) = z_tilde.split_at(n);
    let lzd = net.laplacian.apply(zd);
    let lzq = net.laplacian.apply(zq);
    let mut dz = vec![0.0; 2 * n];
    for i in 0..n {
        let c = model.capacitance[i];
        let abs_d = zd[i] + model.rated_voltage[i];
        let abs_q = zq[i];
        let g = cpl_current(i, [abs_d, abs_q], model.load_p[i], model.load_q[i])?;
        dz[i] = (i_tilde[i] + w * c * abs_q - lzd[i] - g[0]) / c;
        dz[n + i] = (i_tilde[n + i] - w * c * abs_d - lzq[i] - g[1]) / c;
    }
    Ok(dz)
}

/// Error dynamics `ė = v̇ - ż` under the feedback `I_inj = -K e + Ī`.
///
/// Evaluated as the difference between the reduced model at `v = e + z` with
/// the disturbed load and the same model at `z` with the nominal load. The
/// nominal injection `Ī` enters both terms identically and is omitted.
pub fn error_rhs(
    net: &Network,
    e: &[f64],
    z: &[f64],
    disturbance: &LoadDisturbance,
    k: &[f64],
) -> Result<Vec<f64>> {
    let n = net.n();
    check_len("error", e, 2 * n)?;
    check_len("nominal", z, 2 * n)?;
    check_len("error gain", k, n)?;
    let v: Vec<f64> = e.iter().zip(z).map(|(a, b)| a + b).collect();
    let i_inj: Vec<f64> = (0..2 * n).map(|j| -k[j % n] * e[j]).collect();
    let zero = vec![0.0; 2 * n];
    let true_load = disturbance.on_top_of_nominal(net);
    let dv = reduced_rhs(net, &v, &i_inj, &true_load)?;
    let dz = reduced_rhs(net, z, &zero, &PowerDemand::nominal(net))?;
    Ok(dv.iter().zip(&dz).map(|(a, b)| a - b).collect())
}

/// The error dynamics written out as one rational expression per axis, for
/// `z_q = 0`. Kept only as a cross-check against
/// [`error_rhs`]; the two are known to disagree on the sign of some load
/// terms.
pub fn expanded_error_rhs(
    net: &Network,
    e: &[f64],
    z_d: &[f64],
    disturbance: &LoadDisturbance,
    k: &[f64],
) -> Vec<f64> {
    let n = net.n();
    let model = &net.model;
    let w = model.grid_frequency;
    let (ed, eq) = e.split_at(n);
    let led = net.laplacian.apply(ed);
    let leq = net.laplacian.apply(eq);
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        let c = model.capacitance[i];
        let (p, q) = (model.load_p[i], model.load_q[i]);
        let (dp, dq) = (disturbance.p[i], disturbance.q[i]);
        let (edi, eqi, zdi) = (ed[i], eq[i], z_d[i]);
        let vd = edi + zdi;
        let den = vd * vd + eqi * eqi;
        let zden = zdi * vd * vd + zdi * eqi * eqi;
        let d_frac = p * (edi * vd + eqi * eqi) / zden + (dp * vd + dq * eqi - q * eqi) / den;
        let q_frac = -q * (edi * (edi - zdi) - eqi * eqi) / zden + (-dq * vd + dp * eqi + p * eqi) / den;
        out[i] = (-k[i] * edi + w * c * eqi - led[i] - 2.0 / 3.0 * d_frac) / c;
        out[n + i] = (-k[i] * eqi - w * c * edi - leq[i] - 2.0 / 3.0 * q_frac) / c;
    }
    out
}

/// Full state of the closed-loop cascade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeState {
    /// Shifted nominal voltage (2n).
    pub z_tilde: Vec<f64>,
    /// Error between true and nominal voltage (2n).
    pub e: Vec<f64>,
    /// d-channel saturating integrators (n).
    pub sigma_d: Vec<f64>,
    /// q-channel integrators (n).
    pub sigma_q: Vec<f64>,
}

impl CascadeState {
    /// Rated voltage, zero error, zero integrators.
    pub fn rest(n: usize) -> Self {
        Self {
            z_tilde: vec![0.0; 2 * n],
            e: vec![0.0; 2 * n],
            sigma_d: vec![0.0; n],
            sigma_q: vec![0.0; n],
        }
    }

    pub fn node_count(&self) -> usize {
        self.sigma_d.len()
    }

    /// Flat layout `[e, z̃, σ_d, σ_q]`, length 6n.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(6 * self.node_count());
        x.extend_from_slice(&self.e);
        x.extend_from_slice(&self.z_tilde);
        x.extend_from_slice(&self.sigma_d);
        x.extend_from_slice(&self.sigma_q);
        x
    }

    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(6) {
            return Err(Error::Dimension {
                what: "cascade state",
                expected: 6 * (x.len() / 6),
                got: x.len(),
            });
        }
        let n = x.len() / 6;
        Ok(Self {
            e: x[..2 * n].to_vec(),
            z_tilde: x[2 * n..4 * n].to_vec(),
            sigma_d: x[4 * n..5 * n].to_vec(),
            sigma_q: x[5 * n..].to_vec(),
        })
    }

    /// Absolute nominal voltage `z = z̃ + z^o`.
    pub fn nominal(&self, z_o: &[f64]) -> Vec<f64> {
        self.z_tilde.iter().zip(z_o).map(|(a, b)| a + b).collect()
    }
}

/// Time derivative of the closed-loop cascade.
///
/// `refs` holds the shifted d-axis references per node.
pub fn cascade_rhs(
    net: &Network,
    state: &CascadeState,
    gains: &GainSet,
    refs: &[f64],
    disturbance: &LoadDisturbance,
) -> Result<CascadeState> {
    let n = net.n();
    check_len("references", refs, n)?;
    check_len("sigma_d", &state.sigma_d, n)?;
    check_len("sigma_q", &state.sigma_q, n)?;
    for (i, &s) in state.sigma_d.iter().enumerate() {
        if !(s.abs() <= 1.0 + SIGMA_TOLERANCE) {
            return Err(Error::IntegratorInvariance { node: i, value: s });
        }
    }
    let i_nominal = control::nominal_injection(net, gains, &state.z_tilde, &state.sigma_d, &state.sigma_q)?;
    let dz = shifted_nominal_rhs(net, &state.z_tilde, &i_nominal)?;

    let mut dsd = vec![0.0; n];
    let mut dsq = vec![0.0; n];
    for i in 0..n {
        let [a, b] = control::integrator_rhs(
            [state.z_tilde[i], state.z_tilde[n + i]],
            state.sigma_d[i],
            refs[i],
            gains,
            i,
        );
        dsd[i] = a;
        dsq[i] = b;
    }

    let z = state.nominal(&rated_vector(net));
    let de = error_rhs(net, &state.e, &z, disturbance, &gains.k)?;
    Ok(CascadeState {
        z_tilde: dz,
        e: de,
        sigma_d: dsd,
        sigma_q: dsq,
    })
}

/// True node voltages `v = e + z̃ + z^o`.
pub fn reconstruct_true(state: &CascadeState, z_o: &[f64]) -> Vec<f64> {
    state
        .e
        .iter()
        .zip(&state.z_tilde)
        .zip(z_o)
        .map(|((e, z), o)| e + z + o)
        .collect()
}
