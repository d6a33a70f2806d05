//! Graph and electrical description of the microgrid.
//!
//! Nodes are indexed from zero. Every edge `(i, j)` is oriented from `i` to
//! `j`; the orientation only fixes the sign convention of the line currents.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::control::GainSet;
use crate::error::{Error, Result};

/// Default filter capacitance (F).
pub const DEFAULT_CAPACITANCE: f64 = 500e-6;
/// Default line resistance (Ω).
pub const DEFAULT_LINE_RESISTANCE: f64 = 0.05;
/// Default line inductance (H).
pub const DEFAULT_LINE_INDUCTANCE: f64 = 5e-4;
/// Default grid frequency, 50 Hz in rad/s.
pub const DEFAULT_GRID_FREQUENCY: f64 = 2.0 * PI * 50.0;

/// Electrical network: topology, per-node and per-line parameters, load
/// data and the nodal voltage constraint disks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
    /// Filter capacitance per node (F).
    pub capacitance: Vec<f64>,
    /// Resistance per edge (Ω).
    pub line_resistance: Vec<f64>,
    /// Inductance per edge (H).
    pub line_inductance: Vec<f64>,
    /// Common d-q frame frequency (rad/s).
    pub grid_frequency: f64,
    /// Rated d-axis voltage per node (V). The q-component is zero.
    pub rated_voltage: Vec<f64>,
    /// Centre of the constraint disk on the d-axis (V). Usually equal to the
    /// rated voltage; an offset centre expresses asymmetric RMS bands.
    pub constraint_center: Vec<f64>,
    /// Radius of the constraint disk (V).
    pub v_max: Vec<f64>,
    /// Nominal active power demand (W).
    pub load_p: Vec<f64>,
    /// Nominal reactive power demand (var).
    pub load_q: Vec<f64>,
    /// Bound on active power deviations (W).
    pub dp_max: Vec<f64>,
    /// Bound on reactive power deviations (var).
    pub dq_max: Vec<f64>,
}

impl NetworkModel {
    /// Network with identical parameters everywhere and no load.
    pub fn uniform(node_count: usize, edges: Vec<(usize, usize)>) -> Self {
        let m = edges.len();
        Self {
            node_count,
            edges,
            capacitance: vec![DEFAULT_CAPACITANCE; node_count],
            line_resistance: vec![DEFAULT_LINE_RESISTANCE; m],
            line_inductance: vec![DEFAULT_LINE_INDUCTANCE; m],
            grid_frequency: DEFAULT_GRID_FREQUENCY,
            rated_voltage: vec![110.0; node_count],
            constraint_center: vec![110.0; node_count],
            v_max: vec![6.0; node_count],
            load_p: vec![0.0; node_count],
            load_q: vec![0.0; node_count],
            dp_max: vec![0.0; node_count],
            dq_max: vec![0.0; node_count],
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sets the same nominal load and disturbance bounds on every node.
    pub fn with_loads(mut self, p: f64, q: f64, dp_max: f64, dq_max: f64) -> Self {
        let n = self.node_count;
        self.load_p = vec![p; n];
        self.load_q = vec![q; n];
        self.dp_max = vec![dp_max; n];
        self.dq_max = vec![dq_max; n];
        self
    }

    fn check_lengths(&self) -> Result<()> {
        let n = self.node_count;
        let m = self.edges.len();
        let node_fields: [(&'static str, usize); 8] = [
            ("capacitance", self.capacitance.len()),
            ("rated_voltage", self.rated_voltage.len()),
            ("constraint_center", self.constraint_center.len()),
            ("v_max", self.v_max.len()),
            ("load_p", self.load_p.len()),
            ("load_q", self.load_q.len()),
            ("dp_max", self.dp_max.len()),
            ("dq_max", self.dq_max.len()),
        ];
        for (what, got) in node_fields {
            if got != n {
                return Err(Error::Dimension {
                    what,
                    expected: n,
                    got,
                });
            }
        }
        for (what, got) in [
            ("line_resistance", self.line_resistance.len()),
            ("line_inductance", self.line_inductance.len()),
        ] {
            if got != m {
                return Err(Error::Dimension {
                    what,
                    expected: m,
                    got,
                });
            }
        }
        Ok(())
    }
}

/// Oriented edge-node incidence matrix, `m × n`, entries in {-1, 0, +1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i8>,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, edge: usize, node: usize) -> i8 {
        self.entries[edge * self.cols + node]
    }

    pub fn row(&self, edge: usize) -> &[i8] {
        &self.entries[edge * self.cols..(edge + 1) * self.cols]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| f64::from(self.get(r, c)))
    }

    /// `B x`, one entry per edge.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|e| {
                self.row(e)
                    .iter()
                    .zip(x)
                    .map(|(&b, &v)| f64::from(b) * v)
                    .sum()
            })
            .collect()
    }

    /// `Bᵀ y`, one entry per node.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (e, &ye) in y.iter().enumerate().take(self.rows) {
            for (o, &b) in out.iter_mut().zip(self.row(e)) {
                *o += f64::from(b) * ye;
            }
        }
        out
    }
}

pub fn build_incidence(edges: &[(usize, usize)], n: usize) -> Result<IncidenceMatrix> {
    let mut entries = vec![0i8; edges.len() * n];
    for (k, &(i, j)) in edges.iter().enumerate() {
        for node in [i, j] {
            if node >= n {
                return Err(Error::NodeOutOfRange { edge: k, node, n });
            }
        }
        if i == j {
            return Err(Error::SelfLoop { edge: k, node: i });
        }
        entries[k * n + i] = 1;
        entries[k * n + j] = -1;
    }
    Ok(IncidenceMatrix {
        rows: edges.len(),
        cols: n,
        entries,
    })
}

/// Weighted network Laplacian `Bᵀ W B` with `W = diag(1 / (ω_g L - r))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian {
    pub matrix: DMatrix<f64>,
    /// Edge weights (S).
    pub weights: Vec<f64>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// `ℒ x` for one channel.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

pub fn build_laplacian(
    b: &IncidenceMatrix,
    resistance: &[f64],
    inductance: &[f64],
    grid_frequency: f64,
) -> Result<Laplacian> {
    let m = b.rows();
    for (what, got) in [("line_resistance", resistance.len()), ("line_inductance", inductance.len())] {
        if got != m {
            return Err(Error::Dimension {
                what,
                expected: m,
                got,
            });
        }
    }
    let mut weights = Vec::with_capacity(m);
    for e in 0..m {
        let reactance = grid_frequency * inductance[e];
        if !(reactance > resistance[e]) {
            return Err(Error::NonInductiveLine {
                edge: e,
                reactance,
                resistance: resistance[e],
            });
        }
        weights.push(1.0 / (reactance - resistance[e]));
    }
    let n = b.cols();
    let mut matrix = DMatrix::zeros(n, n);
    for (e, &w) in weights.iter().enumerate() {
        let row = b.row(e);
        for i in 0..n {
            if row[i] == 0 {
                continue;
            }
            for j in 0..n {
                if row[j] != 0 {
                    matrix[(i, j)] += w * f64::from(row[i]) * f64::from(row[j]);
                }
            }
        }
    }
    Ok(Laplacian { matrix, weights })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Dimension,
    EdgeIndex,
    Connectivity,
    Positivity,
    InductiveLine,
    RatedVoltage,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

/// Checks every modelling invariant. An empty report means the model is valid.
pub fn validate_network(model: &NetworkModel) -> Vec<Violation> {
    let mut report = Vec::new();
    let mut push = |kind, message: String| report.push(Violation { kind, message });

    if model.node_count == 0 {
        push(ViolationKind::Dimension, "network has no nodes".into());
        return report;
    }
    if let Err(e) = model.check_lengths() {
        push(ViolationKind::Dimension, e.to_string());
        return report;
    }
    let n = model.node_count;
    let mut edges_ok = true;
    for (k, &(i, j)) in model.edges.iter().enumerate() {
        if i >= n || j >= n {
            push(
                ViolationKind::EdgeIndex,
                format!("edge {k} ({i}, {j}) references a node outside 0..{n}"),
            );
            edges_ok = false;
        } else if i == j {
            push(ViolationKind::EdgeIndex, format!("edge {k} is a self-loop on node {i}"));
            edges_ok = false;
        }
    }
    if edges_ok && !is_connected(n, &model.edges) {
        push(ViolationKind::Connectivity, "graph is not connected".into());
    }

    let positive: [(&str, &[f64]); 5] = [
        ("capacitance", &model.capacitance),
        ("rated_voltage", &model.rated_voltage),
        ("v_max", &model.v_max),
        ("line_resistance", &model.line_resistance),
        ("line_inductance", &model.line_inductance),
    ];
    for (name, values) in positive {
        for (k, &v) in values.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                push(ViolationKind::Positivity, format!("{name}[{k}] = {v} must be > 0"));
            }
        }
    }
    if !(model.grid_frequency > 0.0) || !model.grid_frequency.is_finite() {
        push(
            ViolationKind::Positivity,
            format!("grid_frequency = {} must be > 0", model.grid_frequency),
        );
    }
    for (name, values) in [("dp_max", &model.dp_max), ("dq_max", &model.dq_max)] {
        for (k, &v) in values.iter().enumerate() {
            if !(v >= 0.0) {
                push(ViolationKind::Positivity, format!("{name}[{k}] = {v} must be >= 0"));
            }
        }
    }
    for (k, (&r, &l)) in model
        .line_resistance
        .iter()
        .zip(&model.line_inductance)
        .enumerate()
    {
        let x = model.grid_frequency * l;
        if !(x > r) {
            push(
                ViolationKind::InductiveLine,
                format!("non-inductive line: edge {k} has omega_g*L = {x} <= r = {r}"),
            );
        }
    }
    if edges_ok {
        for (k, &(i, j)) in model.edges.iter().enumerate() {
            if model.rated_voltage[i] != model.rated_voltage[j] {
                push(
                    ViolationKind::RatedVoltage,
                    format!(
                        "edge {k} joins nodes with different rated voltages ({} vs {})",
                        model.rated_voltage[i], model.rated_voltage[j]
                    ),
                );
            }
        }
    }
    report
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adjacency = vec![Vec::new(); n];
    for &(i, j) in edges {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// A validated network with its incidence matrix and Laplacian precomputed.
/// All dynamics and certification routines work on this type.
#[derive(Clone, Debug)]
pub struct Network {
    pub model: NetworkModel,
    pub incidence: IncidenceMatrix,
    pub laplacian: Laplacian,
}

impl Network {
    pub fn new(model: NetworkModel) -> Result<Self> {
        let report = validate_network(&model);
        if let Some(v) = report.first() {
            return Err(match v.kind {
                ViolationKind::InductiveLine => {
                    // Re-run the Laplacian build for the structured error.
                    let b = build_incidence(&model.edges, model.node_count)?;
                    build_laplacian(
                        &b,
                        &model.line_resistance,
                        &model.line_inductance,
                        model.grid_frequency,
                    )
                    .err()
                    .unwrap_or_else(|| Error::Config(v.message.clone()))
                }
                _ => Error::Config(v.message.clone()),
            });
        }
        let incidence = build_incidence(&model.edges, model.node_count)?;
        let laplacian = build_laplacian(
            &incidence,
            &model.line_resistance,
            &model.line_inductance,
            model.grid_frequency,
        )?;
        Ok(Self {
            model,
            incidence,
            laplacian,
        })
    }

    pub fn n(&self) -> usize {
        self.model.node_count
    }

    pub fn m(&self) -> usize {
        self.model.edges.len()
    }

    /// Neighbours of `node` together with the connecting edge weight.
    pub fn neighbours(&self, node: usize) -> Vec<(usize, f64)> {
        self.model
            .edges
            .iter()
            .zip(&self.laplacian.weights)
            .filter_map(|(&(i, j), &w)| match node {
                _ if i == node => Some((j, w)),
                _ if j == node => Some((i, w)),
                _ => None,
            })
            .collect()
    }
}

/// Closed disk in the d-q plane centred on the d-axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center_d: f64,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, d: f64, q: f64) -> bool {
        self.excursion(d, q) <= 0.0
    }

    /// Distance outside the disk; negative inside.
    pub fn excursion(&self, d: f64, q: f64) -> f64 {
        (d - self.center_d).hypot(q) - self.radius
    }
}

/// Per-node set descriptors: constraint disk, safe set and nominal interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSets {
    /// Voltage constraint set on the true voltage.
    pub voltage: Disk,
    /// Safe set for the error, centred at the origin with radius √ē.
    pub safe: Disk,
    /// Nominal constraint interval on the shifted d-axis, `[-z̃_m - δ, z̃_m]`.
    pub nominal_lo: f64,
    pub nominal_hi: f64,
    /// Rated voltage used as the shift.
    pub rated: f64,
}

impl NodeSets {
    /// Nominal interval in absolute volts.
    pub fn nominal_abs(&self) -> (f64, f64) {
        (self.rated + self.nominal_lo, self.rated + self.nominal_hi)
    }
}

pub fn node_sets(model: &NetworkModel, gains: &GainSet) -> Result<Vec<NodeSets>> {
    let n = model.node_count;
    if gains.len() != n {
        return Err(Error::Dimension {
            what: "gain set",
            expected: n,
            got: gains.len(),
        });
    }
    (0..n)
        .map(|i| {
            for (name, value) in [
                ("e_bar", gains.e_bar[i]),
                ("delta", gains.delta[i]),
                ("z_tilde_m", gains.z_tilde_m[i]),
            ] {
                if !(value > 0.0) {
                    return Err(Error::InvalidParameter {
                        name,
                        node: i,
                        value,
                        reason: "must be strictly positive",
                    });
                }
            }
            let z_m = gains.m[i] / gains.k_d[i];
            Ok(NodeSets {
                voltage: Disk {
                    center_d: model.constraint_center[i],
                    radius: model.v_max[i],
                },
                safe: Disk {
                    center_d: 0.0,
                    radius: gains.e_bar[i].sqrt(),
                },
                nominal_lo: -z_m - gains.delta[i],
                nominal_hi: z_m,
                rated: model.rated_voltage[i],
            })
        })
        .collect()
}
