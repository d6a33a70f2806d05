//! Control laws and the gain design procedure.
//!
//! The injected current of every inverter is `I_inj = -K e + Ī`, where the
//! nominal part `Ī` regulates a disturbance-free copy of the network with a
//! saturating PI law on the d-channel and a decoupling PI law on the
//! q-channel.

use serde::{Deserialize, Serialize};

use crate::certify::{self, Certificate};
use crate::dynamics::cpl_current;
use crate::error::{Error, Result};
use crate::netmodel::{Disk, Network, NodeSets};

/// Controller tuning, one entry per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSet {
    /// Error feedback gain (S).
    pub k: Vec<f64>,
    /// Nominal d-channel proportional gain (S).
    pub k_d: Vec<f64>,
    /// Nominal q-channel proportional gain (S).
    pub k_q: Vec<f64>,
    /// d-channel integrator gain (1/(V s)).
    pub k_id: Vec<f64>,
    /// q-channel integrator gain (A/(V s)).
    pub k_iq: Vec<f64>,
    /// Saturated integrator scaling (A).
    pub m: Vec<f64>,
    /// Safe-set level ē (V²).
    pub e_bar: Vec<f64>,
    /// Lower nominal margin δ (V).
    pub delta: Vec<f64>,
    /// Upper nominal excursion z̃_m = M / K_d (V).
    pub z_tilde_m: Vec<f64>,
}

impl GainSet {
    /// Same gains on every node; `k_q = k_d`, integrator gains 50.
    pub fn uniform(n: usize, k: f64, k_d: f64, m: f64, e_bar: f64, delta: f64) -> Self {
        Self {
            k: vec![k; n],
            k_d: vec![k_d; n],
            k_q: vec![k_d; n],
            k_id: vec![DEFAULT_K_ID; n],
            k_iq: vec![DEFAULT_K_IQ; n],
            m: vec![m; n],
            e_bar: vec![e_bar; n],
            delta: vec![delta; n],
            z_tilde_m: vec![m / k_d; n],
        }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Checks lengths, positivity and `z̃_m = M / K_d`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let fields: [(&'static str, &Vec<f64>); 9] = [
            ("k", &self.k),
            ("k_d", &self.k_d),
            ("k_q", &self.k_q),
            ("k_id", &self.k_id),
            ("k_iq", &self.k_iq),
            ("m", &self.m),
            ("e_bar", &self.e_bar),
            ("delta", &self.delta),
            ("z_tilde_m", &self.z_tilde_m),
        ];
        for (name, values) in fields {
            if values.len() != n {
                return Err(Error::Dimension {
                    what: name,
                    expected: n,
                    got: values.len(),
                });
            }
            for (node, &value) in values.iter().enumerate() {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(Error::InvalidParameter {
                        name,
                        node,
                        value,
                        reason: "must be strictly positive",
                    });
                }
            }
        }
        for node in 0..n {
            let ratio = self.m[node] / self.k_d[node];
            if (ratio - self.z_tilde_m[node]).abs() > 1e-12 * ratio.abs() {
                return Err(Error::InvalidParameter {
                    name: "z_tilde_m",
                    node,
                    value: self.z_tilde_m[node],
                    reason: "must equal m / k_d",
                });
            }
        }
        Ok(())
    }
}

pub const DEFAULT_K_ID: f64 = 50.0;
pub const DEFAULT_K_IQ: f64 = 50.0;

/// Piecewise-constant schedule of shifted d-axis references.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSchedule {
    pub breakpoints: Vec<Breakpoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    /// Shifted references `ẑ_d` per node (V).
    pub z_hat: Vec<f64>,
}

impl ReferenceSchedule {
    pub fn constant(z_hat: Vec<f64>) -> Self {
        Self {
            breakpoints: vec![Breakpoint { t: 0.0, z_hat }],
        }
    }

    pub fn new(breakpoints: Vec<Breakpoint>, n: usize) -> Result<Self> {
        let first = breakpoints
            .first()
            .ok_or_else(|| Error::Config("reference schedule is empty".into()))?;
        if first.t != 0.0 {
            return Err(Error::Config(format!(
                "first reference breakpoint must be at t = 0, got {}",
                first.t
            )));
        }
        for pair in breakpoints.windows(2) {
            if !(pair[1].t > pair[0].t) {
                return Err(Error::Config(format!(
                    "reference times must increase strictly ({} then {})",
                    pair[0].t, pair[1].t
                )));
            }
        }
        for b in &breakpoints {
            if b.z_hat.len() != n {
                return Err(Error::Dimension {
                    what: "reference vector",
                    expected: n,
                    got: b.z_hat.len(),
                });
            }
        }
        Ok(Self { breakpoints })
    }

    /// References active at time `t`.
    pub fn at(&self, t: f64) -> &[f64] {
        let idx = self
            .breakpoints
            .iter()
            .rposition(|b| b.t <= t)
            .unwrap_or(0);
        &self.breakpoints[idx].z_hat
    }

    /// Change times after the initial breakpoint.
    pub fn change_times(&self) -> Vec<f64> {
        self.breakpoints.iter().skip(1).map(|b| b.t).collect()
    }
}

/// `I_inj = -K e + Ī`, node by node on both channels.
pub fn error_feedback(e: &[f64], i_inj_nominal: &[f64], k: &[f64]) -> Vec<f64> {
    let n = k.len();
    e.iter()
        .zip(i_inj_nominal)
        .enumerate()
        .map(|(j, (e, i))| -k[j % n] * e + i)
        .collect()
}

/// Nominal control law for one node.
///
/// The q-channel carries a compensation term that cancels the frame
/// cross-coupling and the reactive load current, leaving the closed loop
/// `C ż̃_q = -(K_q + ℒ) z̃_q + σ_q`.
pub fn nominal_feedback(
    net: &Network,
    gains: &GainSet,
    node: usize,
    z_tilde: [f64; 2],
    sigma: [f64; 2],
) -> Result<[f64; 2]> {
    let model = &net.model;
    let c = model.capacitance[node];
    let abs = [z_tilde[0] + model.rated_voltage[node], z_tilde[1]];
    let g = cpl_current(node, abs, model.load_p[node], model.load_q[node])?;
    let d = -gains.k_d[node] * z_tilde[0] + gains.m[node] * sigma[0];
    let q = -gains.k_q[node] * z_tilde[1] + sigma[1] + model.grid_frequency * c * abs[0] + g[1];
    Ok([d, q])
}

/// Nominal injection for the whole network, 2n layout.
pub fn nominal_injection(
    net: &Network,
    gains: &GainSet,
    z_tilde: &[f64],
    sigma_d: &[f64],
    sigma_q: &[f64],
) -> Result<Vec<f64>> {
    let n = net.n();
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        let [d, q] = nominal_feedback(net, gains, i, [z_tilde[i], z_tilde[n + i]], [sigma_d[i], sigma_q[i]])?;
        out[i] = d;
        out[n + i] = q;
    }
    Ok(out)
}

/// Integrator dynamics `(σ̇_d, σ̇_q)` for one node.
pub fn integrator_rhs(z_tilde: [f64; 2], sigma_d: f64, z_hat: f64, gains: &GainSet, node: usize) -> [f64; 2] {
    [
        gains.k_id[node] * (1.0 - sigma_d * sigma_d) * (z_hat - z_tilde[0]),
        -gains.k_iq[node] * z_tilde[1],
    ]
}

/// Load data entering the error gain bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeLoad {
    pub p: f64,
    pub q: f64,
    pub dp_max: f64,
    pub dq_max: f64,
}

impl NodeLoad {
    pub fn of(net: &Network, node: usize) -> Self {
        let m = &net.model;
        Self {
            p: m.load_p[node],
            q: m.load_q[node],
            dp_max: m.dp_max[node],
            dq_max: m.dq_max[node],
        }
    }
}

/// Denominator `(ē - z_d)² - ē` of the error gain bound.
pub fn error_gain_denominator(e_bar: f64, z_d: f64) -> f64 {
    (e_bar - z_d).powi(2) - e_bar
}

/// Lower bound β on the error feedback gain at nominal voltage `z_d`.
pub fn error_gain_bound(e_bar: f64, z_d: f64, load: NodeLoad) -> f64 {
    let numerator = (1.0 + z_d) / z_d * load.p
        + 2.0 * load.q
        + (e_bar + z_d) / e_bar * load.dp_max
        + z_d / e_bar * load.dq_max;
    numerator / (3.0 * error_gain_denominator(e_bar, z_d))
}

/// `n` evenly spaced points over `[lo, hi]`, endpoints included.
pub fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorGainDesign {
    /// Designed gain.
    pub k: f64,
    /// Largest bound found on the grid.
    pub beta_max: f64,
    /// Nominal voltage attaining `beta_max`.
    pub z_at_max: f64,
    /// `k - beta_max`.
    pub margin: f64,
}

/// Designs the error gain of every node as the worst case of the bound over
/// the admissible nominal voltage range, times a safety factor.
pub fn design_error_gain(
    net: &Network,
    e_bar: &[f64],
    z_range: &[(f64, f64)],
    safety_factor: f64,
    k_min: f64,
    grid_points: usize,
) -> Result<Vec<ErrorGainDesign>> {
    let n = net.n();
    (0..n)
        .map(|i| {
            let load = NodeLoad::of(net, i);
            let (lo, hi) = z_range[i];
            let mut worst = (f64::NEG_INFINITY, lo);
            for z in grid(lo, hi, grid_points) {
                let den = error_gain_denominator(e_bar[i], z);
                if !(den > 0.0) {
                    return Err(Error::BoundDenominator {
                        node: i,
                        z_d: z,
                        denominator: den,
                    });
                }
                let beta = error_gain_bound(e_bar[i], z, load);
                if beta > worst.0 {
                    worst = (beta, z);
                }
            }
            let k = (safety_factor * worst.0).max(k_min);
            Ok(ErrorGainDesign {
                k,
                beta_max: worst.0,
                z_at_max: worst.1,
                margin: k - worst.0,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NominalGainDesign {
    pub k_d: f64,
    pub m: f64,
    pub k_q: f64,
    pub k_id: f64,
    pub k_iq: f64,
    /// `(2/3) P̄ / (z̃_m + δ)²`, the first term of the combined bound.
    pub combined_first_term: f64,
    /// `(2/3) P̄ / (δ (z^o - z̃_m - δ))`, keeps the nominal interval invariant.
    pub boundedness_bound: f64,
    /// `(2/3) P̄ / (z^o - z̃_m - δ)²`, local stability at the lowest
    /// admissible nominal voltage.
    pub stability_bound: f64,
}

/// Local stability condition `K_d > (2/3) P̄ / ẑ_d²` at absolute voltage `z_d`.
pub fn stability_gain_bound(p: f64, z_d: f64) -> f64 {
    2.0 / 3.0 * p / (z_d * z_d)
}

/// Gain keeping the lower edge of the nominal interval invariant.
pub fn boundedness_gain_bound(p: f64, delta: f64, z_o: f64, z_tilde_m: f64) -> f64 {
    2.0 / 3.0 * p / (delta * (z_o - z_tilde_m - delta))
}

pub fn design_nominal_gains(
    net: &Network,
    z_tilde_m: &[f64],
    delta: &[f64],
    opts: &DesignOptions,
) -> Result<Vec<NominalGainDesign>> {
    let n = net.n();
    (0..n)
        .map(|i| {
            let p = net.model.load_p[i];
            let z_o = net.model.rated_voltage[i];
            if !(delta[i] > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "delta",
                    node: i,
                    value: delta[i],
                    reason: "must be strictly positive",
                });
            }
            let floor = z_o - z_tilde_m[i] - delta[i];
            if !(floor > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "z_tilde_m",
                    node: i,
                    value: z_tilde_m[i],
                    reason: "rated voltage minus z_tilde_m minus delta must be positive",
                });
            }
            let first = 2.0 / 3.0 * p / (-z_tilde_m[i] - delta[i]).powi(2);
            let bounded = boundedness_gain_bound(p, delta[i], z_o, z_tilde_m[i]);
            let k_d = (opts.safety_factor_kd * first.max(bounded)).max(opts.k_d_min);
            Ok(NominalGainDesign {
                k_d,
                m: z_tilde_m[i] * k_d,
                k_q: opts.k_q.as_ref().map_or(k_d, |k| k[i]),
                k_id: opts.k_id[i],
                k_iq: opts.k_iq[i],
                combined_first_term: first,
                boundedness_bound: bounded,
                stability_bound: stability_gain_bound(p, floor),
            })
        })
        .collect()
}

/// Inputs of the design procedure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignOptions {
    pub e_bar: Vec<f64>,
    pub z_tilde_m: Vec<f64>,
    pub delta: Vec<f64>,
    /// Multiplier on the error gain bound.
    pub safety_factor: f64,
    /// Multiplier on the nominal gain bound.
    pub safety_factor_kd: f64,
    /// Floor on the error gain, used when the bound vanishes.
    pub k_min: f64,
    /// Floor on the nominal d-gain.
    pub k_d_min: f64,
    /// q-channel gain; defaults to `k_d`.
    pub k_q: Option<Vec<f64>>,
    pub k_id: Vec<f64>,
    pub k_iq: Vec<f64>,
    /// Samples of the nominal voltage range used for the error gain.
    pub grid_points: usize,
}

impl DesignOptions {
    pub fn uniform(n: usize, e_bar: f64, z_tilde_m: f64, delta: f64) -> Self {
        Self {
            e_bar: vec![e_bar; n],
            z_tilde_m: vec![z_tilde_m; n],
            delta: vec![delta; n],
            safety_factor: 1.05,
            safety_factor_kd: 1.05,
            k_min: 1.0,
            k_d_min: 1.0,
            k_q: None,
            k_id: vec![DEFAULT_K_ID; n],
            k_iq: vec![DEFAULT_K_IQ; n],
            grid_points: 1000,
        }
    }

    /// Admissible nominal range `[z^o - z̃_m - δ, z^o + z̃_m]` per node, in
    /// absolute volts.
    pub fn nominal_range(&self, net: &Network) -> Vec<(f64, f64)> {
        (0..net.n())
            .map(|i| {
                let z_o = net.model.rated_voltage[i];
                (z_o - self.z_tilde_m[i] - self.delta[i], z_o + self.z_tilde_m[i])
            })
            .collect()
    }
}

/// Outcome of the design procedure. `gains` is `None` whenever one of the
/// certificates fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignOutcome {
    pub gains: Option<GainSet>,
    pub certificates: Vec<Certificate>,
    pub error_gain: Vec<ErrorGainDesign>,
    pub nominal: Vec<NominalGainDesign>,
}

impl DesignOutcome {
    pub fn feasible(&self) -> bool {
        self.gains.is_some()
    }
}

/// Runs the full design procedure: error gain, set inclusion and nominal
/// voltage checks, then the nominal gains.
pub fn design_all(net: &Network, opts: &DesignOptions) -> Result<DesignOutcome> {
    let n = net.n();
    for (name, values) in [
        ("e_bar", &opts.e_bar),
        ("z_tilde_m", &opts.z_tilde_m),
        ("delta", &opts.delta),
        ("k_id", &opts.k_id),
        ("k_iq", &opts.k_iq),
    ] {
        if values.len() != n {
            return Err(Error::Dimension {
                what: name,
                expected: n,
                got: values.len(),
            });
        }
        for (node, &value) in values.iter().enumerate() {
            if !(value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    node,
                    value,
                    reason: "must be strictly positive",
                });
            }
        }
    }

    let ranges = opts.nominal_range(net);
    let sets: Vec<NodeSets> = (0..n)
        .map(|i| NodeSets {
            voltage: Disk {
                center_d: net.model.constraint_center[i],
                radius: net.model.v_max[i],
            },
            safe: Disk {
                center_d: 0.0,
                radius: opts.e_bar[i].sqrt(),
            },
            nominal_lo: -opts.z_tilde_m[i] - opts.delta[i],
            nominal_hi: opts.z_tilde_m[i],
            rated: net.model.rated_voltage[i],
        })
        .collect();
    let denominator = certify::denominator_network(&opts.e_bar, &ranges);
    let inclusion = certify::inclusion_check(&sets);
    let mut certificates = vec![denominator.clone(), inclusion.clone()];
    if !denominator.pass {
        return Ok(DesignOutcome {
            gains: None,
            certificates,
            error_gain: vec![],
            nominal: vec![],
        });
    }

    let error_gain = design_error_gain(
        net,
        &opts.e_bar,
        &ranges,
        opts.safety_factor,
        opts.k_min,
        opts.grid_points,
    )?;
    let nominal = design_nominal_gains(net, &opts.z_tilde_m, &opts.delta, opts)?;

    let gain_margin = error_gain
        .iter()
        .enumerate()
        .map(|(i, d)| (d.margin, i))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
    certificates.push(Certificate::from_margin(
        "error_gain_bound",
        gain_margin.0,
        Some(certify::Witness::node(gain_margin.1).with("z_d", error_gain[gain_margin.1].z_at_max)),
    ));

    let gains = GainSet {
        k: error_gain.iter().map(|d| d.k).collect(),
        k_d: nominal.iter().map(|d| d.k_d).collect(),
        k_q: nominal.iter().map(|d| d.k_q).collect(),
        k_id: nominal.iter().map(|d| d.k_id).collect(),
        k_iq: nominal.iter().map(|d| d.k_iq).collect(),
        m: nominal.iter().map(|d| d.m).collect(),
        e_bar: opts.e_bar.clone(),
        delta: opts.delta.clone(),
        z_tilde_m: nominal.iter().map(|d| d.m / d.k_d).collect(),
    };
    let all_pass = certificates.iter().all(|c| c.pass);
    Ok(DesignOutcome {
        gains: all_pass.then_some(gains),
        certificates,
        error_gain,
        nominal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::NetworkModel;

    fn sec7_load() -> NodeLoad {
        NodeLoad {
            p: 500.0,
            q: 400.0,
            dp_max: 500.0,
            dq_max: 400.0,
        }
    }

    #[test]
    fn error_feedback_examples() {
        assert_eq!(error_feedback(&[0.0, 0.0], &[1.5, -2.0], &[6.0]), vec![1.5, -2.0]);
        assert_eq!(error_feedback(&[1.0, -1.0], &[0.0, 0.0], &[6.0]), vec![-6.0, 6.0]);
    }

    #[test]
    fn nominal_feedback_cancels_cross_coupling() {
        let net = Network::new(NetworkModel::uniform(1, vec![])).unwrap();
        let gains = GainSet::uniform(1, 10.0, 8.0, 40.0, 0.2, 1.0);
        let [d, q] = nominal_feedback(&net, &gains, 0, [0.0, 0.0], [0.0, 0.0]).unwrap();
        assert_eq!(d, 0.0);
        let want = net.model.grid_frequency * net.model.capacitance[0] * 110.0;
        assert!((q - want).abs() < 1e-12 * want);

        let [d, _] = nominal_feedback(&net, &gains, 0, [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert_eq!(d, 40.0);
        let [d, _] = nominal_feedback(&net, &gains, 0, [2.0, 0.0], [0.5, 0.0]).unwrap();
        assert!((d - (-8.0 * 2.0 + 40.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn integrator_examples() {
        let mut gains = GainSet::uniform(1, 1.0, 1.0, 1.0, 0.2, 1.0);
        gains.k_id = vec![2.0];
        assert_eq!(integrator_rhs([0.0, 0.0], 1.0, 5.0, &gains, 0)[0], 0.0);
        assert_eq!(integrator_rhs([0.0, 0.0], -1.0, 5.0, &gains, 0)[0], 0.0);
        assert_eq!(integrator_rhs([-1.0, 0.0], 0.0, 2.0, &gains, 0)[0], 6.0);
        assert_eq!(integrator_rhs([-1.0, 0.0], 0.0, 2.0, &gains, 0)[1], 0.0);
    }

    #[test]
    fn zero_load_bound_vanishes() {
        let load = NodeLoad {
            p: 0.0,
            q: 0.0,
            dp_max: 0.0,
            dq_max: 0.0,
        };
        assert_eq!(error_gain_bound(0.2, 110.0, load), 0.0);
    }

    #[test]
    fn nominal_bounds_hand_values() {
        assert!((boundedness_gain_bound(500.0, 0.5, 110.0, 5.0) - 6.3796).abs() < 1e-3);
        assert!((stability_gain_bound(500.0, 110.0) - 0.027548).abs() < 1e-5);
    }

    #[test]
    fn schedule_lookup() {
        let s = ReferenceSchedule::new(
            vec![
                Breakpoint { t: 0.0, z_hat: vec![1.0] },
                Breakpoint { t: 0.2, z_hat: vec![2.0] },
            ],
            1,
        )
        .unwrap();
        assert_eq!(s.at(0.0), &[1.0]);
        assert_eq!(s.at(0.1999), &[1.0]);
        assert_eq!(s.at(0.2), &[2.0]);
        assert_eq!(s.change_times(), vec![0.2]);
        assert!(ReferenceSchedule::new(vec![Breakpoint { t: 0.1, z_hat: vec![0.0] }], 1).is_err());
    }

    #[test]
    fn design_keeps_ratio_and_bounds() {
        let mut model = NetworkModel::uniform(2, vec![(0, 1)]).with_loads(500.0, 400.0, 500.0, 400.0);
        model.constraint_center = vec![109.5; 2];
        let net = Network::new(model).unwrap();
        let opts = DesignOptions::uniform(2, 0.2, 5.0, 1.0);
        let out = design_all(&net, &opts).unwrap();
        let gains = out.gains.expect("feasible");
        gains.validate(2).unwrap();
        for i in 0..2 {
            assert!((gains.m[i] / gains.k_d[i] - 5.0).abs() < 5e-12);
            let nd = &out.nominal[i];
            assert!(gains.k_d[i] > nd.boundedness_bound);
            assert!(gains.k_d[i] > nd.stability_bound);
            // post-hoc check on a ten times finer grid
            for z in grid(104.0, 115.0, 10_000) {
                assert!(gains.k[i] >= error_gain_bound(0.2, z, NodeLoad::of(&net, i)));
            }
        }
    }

    #[test]
    fn zero_load_design_uses_floors() {
        let mut model = NetworkModel::uniform(2, vec![(0, 1)]);
        model.constraint_center = vec![109.5; 2];
        let net = Network::new(model).unwrap();
        let out = design_all(&net, &DesignOptions::uniform(2, 0.2, 5.0, 1.0)).unwrap();
        let g = out.gains.unwrap();
        assert_eq!(g.k, vec![1.0, 1.0]);
        assert_eq!(g.k_d, vec![1.0, 1.0]);
        assert!(out.error_gain.iter().all(|d| d.beta_max == 0.0));
    }

    #[test]
    fn oversized_safe_set_is_infeasible() {
        let model = NetworkModel::uniform(1, vec![]).with_loads(500.0, 400.0, 500.0, 400.0);
        let net = Network::new(model).unwrap();
        let out = design_all(&net, &DesignOptions::uniform(1, 30.0, 5.0, 1.0)).unwrap();
        assert!(out.gains.is_none());
        let inc = out.certificates.iter().find(|c| c.name == "set_inclusion").unwrap();
        assert!(!inc.pass);
        assert!(inc.margin < 0.0);
    }

    proptest::proptest! {
        #[test]
        fn bound_is_monotone_in_loads(z in 10.0f64..200.0, base in 0.0f64..1000.0, bump in 0.0f64..500.0, which in 0usize..4) {
            let mut a = NodeLoad { p: base, q: base * 0.8, dp_max: base, dq_max: base * 0.8 };
            let before = error_gain_bound(0.2, z, a);
            match which {
                0 => a.p += bump,
                1 => a.q += bump,
                2 => a.dp_max += bump,
                _ => a.dq_max += bump,
            }
            proptest::prop_assert!(error_gain_bound(0.2, z, a) >= before);
        }
    }

    #[test]
    fn sec7_bound_reference_point() {
        let beta = error_gain_bound(0.2, 110.0, sec7_load());
        assert!((beta - 13.74).abs() / 13.74 < 1e-2);
    }
}
