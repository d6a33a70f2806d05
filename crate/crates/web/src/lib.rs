//! Browser demo. The functions here take and return JSON strings; on wasm32
//! they are exported to JavaScript under camelCase names.

use meshtube::certify::{boundary_derivative, coupling_bound, Certificate};
use meshtube::config::{parse_config, RunConfig};
use meshtube::control::GainSet;
use meshtube::sim::{run_scenario, SimReport};
use serde::Serialize;

#[cfg(target_arch = "wasm32")]
mod wasm;

/// The six-node example scenario.
pub const BUNDLED_CONFIG: &str = include_str!("../../core/examples/paper_sec7.json");

#[derive(Debug, Serialize)]
pub struct DesignView {
    pub feasible: bool,
    pub gains: Option<GainSet>,
    pub certificates: Vec<Certificate>,
}

#[derive(Debug, Serialize)]
pub struct SimulationView {
    pub t: Vec<f64>,
    /// RMS true voltage per node.
    pub v: Vec<Vec<f64>>,
    /// RMS nominal voltage per node.
    pub z: Vec<Vec<f64>>,
    pub barrier: Vec<Vec<f64>>,
    pub sigma_d: Vec<Vec<f64>>,
    /// Constraint band per node.
    pub bounds: Vec<[f64; 2]>,
    pub report: SimReport,
}

#[derive(Debug, Serialize)]
pub struct BoundaryView {
    pub theta: Vec<f64>,
    /// Largest `d|e|²/dt` over the corner load deviations, coupling included.
    pub worst: Vec<f64>,
    /// Same without load deviation.
    pub nominal: Vec<f64>,
    pub radius: f64,
    pub coupling: f64,
}

fn load(config: &str) -> Result<(RunConfig, GainSet), String> {
    let cfg = parse_config(config).map_err(|e| e.to_string())?;
    let (gains, outcome) = cfg.resolve_gains().map_err(|e| e.to_string())?;
    match gains {
        Some(g) => Ok((cfg, g)),
        None => {
            let failed: Vec<String> = outcome
                .map(|o| o.certificates.into_iter().filter(|c| !c.pass).map(|c| c.name).collect())
                .unwrap_or_default();
            Err(format!("design infeasible: {}", failed.join(", ")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Designs gains for a configuration.
pub fn design(config: &str) -> Result<String, String> {
    let cfg = parse_config(config).map_err(|e| e.to_string())?;
    let (gains, outcome) = cfg.resolve_gains().map_err(|e| e.to_string())?;
    to_json(&DesignView {
        feasible: gains.is_some(),
        gains,
        certificates: outcome.map(|o| o.certificates).unwrap_or_default(),
    })
}

/// Runs the closed loop up to `t_end`, keeping about `points` samples.
pub fn simulate(config: &str, t_end: f64, points: usize) -> Result<String, String> {
    let (mut cfg, gains) = load(config)?;
    cfg.sim.t_end = t_end;
    let steps = (t_end / cfg.sim.dt).round().max(1.0) as usize;
    cfg.sim.record_stride = (steps / points.max(1)).max(1);
    let (traj, report) = run_scenario(&cfg.scenario(gains)).map_err(|e| e.to_string())?;
    let model = &cfg.network.model;
    let n = model.node_count;
    let per_node = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..traj.len()).map(|k| f(k, i)).collect()).collect()
    };
    to_json(&SimulationView {
        v: per_node(&|k, i| traj.v[k][i].hypot(traj.v[k][n + i])),
        z: per_node(&|k, i| {
            let s = &traj.states[k];
            (s.z_tilde[i] + model.rated_voltage[i]).hypot(s.z_tilde[n + i])
        }),
        barrier: per_node(&|k, i| traj.b[k][i]),
        sigma_d: per_node(&|k, i| traj.states[k].sigma_d[i]),
        bounds: (0..n)
            .map(|i| [model.constraint_center[i] - model.v_max[i], model.constraint_center[i] + model.v_max[i]])
            .collect(),
        t: traj.times,
        report,
    })
}

/// Samples `d|e|²/dt` around the safe-set boundary of `node` (1-based) at
/// nominal d-voltage `z_d`.
pub fn boundary_field(config: &str, node: usize, z_d: f64, angles: usize) -> Result<String, String> {
    let (cfg, gains) = load(config)?;
    let net = &cfg.network;
    if node == 0 || node > net.n() {
        return Err(format!("node must lie in 1..={}", net.n()));
    }
    let i = node - 1;
    let (dp, dq) = (net.model.dp_max[i], net.model.dq_max[i]);
    let coupling = coupling_bound(net, &gains, i);
    let mut view = BoundaryView {
        theta: Vec::with_capacity(angles),
        worst: Vec::with_capacity(angles),
        nominal: Vec::with_capacity(angles),
        radius: gains.e_bar[i].sqrt(),
        coupling,
    };
    for k in 0..angles {
        let th = std::f64::consts::TAU * k as f64 / angles as f64;
        let eval = |d: [f64; 2]| boundary_derivative(net, &gains, i, th, z_d, d).map_err(|e| e.to_string());
        let mut worst = f64::NEG_INFINITY;
        for d in [[dp, dq], [dp, -dq], [-dp, dq], [-dp, -dq]] {
            worst = worst.max(eval(d)?);
        }
        view.theta.push(th);
        view.worst.push(worst + coupling);
        view.nominal.push(eval([0.0, 0.0])?);
    }
    to_json(&view)
}
