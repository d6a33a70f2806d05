//! Numerical certificates for the conditions that make the closed loop safe:
//! positivity of the barrier denominator, invariance of the safe set, set
//! inclusion, the nominal equilibrium and its local stability.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{grid, GainSet, ReferenceSchedule};
use crate::dynamics::{cpl_current, error_rhs, LoadDisturbance};
use crate::error::{Error, Result};
use crate::netmodel::{node_sets, Disk, Network, NodeSets};

/// Outcome of one numerical check. `pass` holds exactly when `margin > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    /// Supporting checks. They are reported but do not change `pass`.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sub: Vec<Certificate>,
}

impl Certificate {
    pub fn from_margin(name: &str, margin: f64, witness: Option<Witness>) -> Self {
        Self {
            name: name.to_string(),
            pass: margin > 0.0,
            margin,
            witness,
            sub: vec![],
        }
    }

    /// A failed check that could not be evaluated.
    pub fn skipped(name: &str, reason: &str) -> Self {
        Self {
            name: name.to_string(),
            pass: false,
            margin: 0.0,
            witness: Some(Witness::default().note(reason)),
            sub: vec![],
        }
    }

    pub fn with_sub(mut self, sub: Vec<Certificate>) -> Self {
        self.sub = sub;
        self
    }
}

/// Where a certificate attains its margin.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub node: Option<usize>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl Witness {
    pub fn node(node: usize) -> Self {
        Self {
            node: Some(node),
            ..Self::default()
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

/// Smallest value of `f(i)` over the nodes, with the attaining node.
fn min_over_nodes(n: usize, f: impl Fn(usize) -> f64) -> (f64, usize) {
    (0..n)
        .map(|i| (f(i), i))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

/// Barrier denominator positivity for one node over a range of absolute
/// nominal voltages: margin `z_lo - (ē + √ē)`.
pub fn denominator_margin(e_bar: f64, z_range: (f64, f64)) -> Certificate {
    let threshold = e_bar + e_bar.sqrt();
    let margin = z_range.0.min(z_range.1) - threshold;
    Certificate::from_margin(
        "denominator_positivity",
        margin,
        Some(Witness::default().with("z_d", z_range.0).with("threshold", threshold)),
    )
}

/// [`denominator_margin`] over all nodes, with two supporting checks: the expanded
/// barrier denominator sampled over the safe set, and the distance of the tube from
/// the load singularity.
pub fn denominator_network(e_bar: &[f64], z_range: &[(f64, f64)]) -> Certificate {
    let n = e_bar.len();
    let (margin, node) = min_over_nodes(n, |i| denominator_margin(e_bar[i], z_range[i]).margin);
    let witness = (n > 0).then(|| {
        Witness::node(node)
            .with("z_d", z_range[node].0)
            .with("threshold", e_bar[node] + e_bar[node].sqrt())
    });

    let mut den = (f64::INFINITY, 0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let r = e_bar[i].sqrt();
        for z in grid(z_range[i].0, z_range[i].1, 16) {
            for rk in 0..=8 {
                let rad = r * rk as f64 / 8.0;
                for a in 0..64 {
                    let th = 2.0 * PI * a as f64 / 64.0;
                    let e = [rad * th.cos(), rad * th.sin()];
                    let (_, d) = alpha_eval(e, z, [0.0, 0.0], 0.0, 0.0, 0.0);
                    if d < den.0 {
                        den = (d, i, z, e[0], e[1]);
                    }
                }
            }
        }
    }
    let den_cert = Certificate::from_margin(
        "expanded_denominator_sampled",
        den.0,
        Some(
            Witness::node(den.1)
                .with("z_d", den.2)
                .with("e_d", den.3)
                .with("e_q", den.4),
        ),
    );
    let (sing, sing_node) = min_over_nodes(n, |i| z_range[i].0 - e_bar[i].sqrt());
    let sing_cert = Certificate::from_margin("singularity_distance", sing, Some(Witness::node(sing_node)));
    Certificate::from_margin("denominator_positivity", margin, witness).with_sub(vec![den_cert, sing_cert])
}

/// The barrier numerator and denominator polynomials in expanded form.
/// Diagnostic only.
///
/// `disturbance` is `(δP, δQ)`.
pub fn alpha_eval(e: [f64; 2], z_d: f64, disturbance: [f64; 2], k: f64, p: f64, q: f64) -> (f64, f64) {
    let [ed, eq] = e;
    let [dp, dq] = disturbance;
    let z = z_d;
    let nom = ed.powi(4) * (-3.0 * k * z)
        + ed.powi(3) * (-6.0 * k * z * z + 2.0 * p)
        + ed * ed * eq * eq * (-3.0 * k * z)
        + ed * ed * eq * (-3.0 * k * z + 2.0 * q)
        + ed * ed * (-3.0 * k * z.powi(3) + 2.0 * p * z - 2.0 * dp * z)
        + ed * eq * eq * (-6.0 * k * z * z + 2.0 * p)
        + ed * eq * (-4.0 * q * z)
        + eq * eq * (-3.0 * k * z.powi(3) - 2.0 * p * z - 2.0 * dp * z)
        + eq.powi(3) * (-3.0 * k * z - 2.0 * q)
        + ed * (-2.0 * dp * z * z)
        + eq * (2.0 * dq * z * z);
    let den = z * ((ed + z).powi(2) + ed);
    (nom, den)
}

/// Sampling density of the boundary invariance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOptions {
    /// Points on each safe-set boundary circle.
    pub n_boundary: usize,
    /// Random interior disturbances on top of the sign corners.
    pub n_disturbance: usize,
    /// Samples of the nominal d-voltage over its admissible range.
    pub z_samples: usize,
    pub seed: u64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self {
            n_boundary: 720,
            n_disturbance: 32,
            z_samples: 9,
            seed: 0,
        }
    }
}

/// Worst-case growth of `|e_i|²` caused by neighbours whose errors sit on
/// their own safe-set boundaries.
pub fn coupling_bound(net: &Network, gains: &GainSet, i: usize) -> f64 {
    let c = net.model.capacitance[i];
    net.neighbours(i)
        .iter()
        .map(|&(j, w)| 2.0 * w * ((gains.e_bar[i] * gains.e_bar[j]).sqrt() - gains.e_bar[i]) / c)
        .sum()
}

/// `d|e_i|²/dt` at the point of angle `theta` on the boundary of node `i`'s
/// safe set, with the same error at every node, nominal d-voltage `z_d`
/// (absolute) everywhere and load deviation `[dP, dQ]` at every node.
pub fn boundary_derivative(
    net: &Network,
    gains: &GainSet,
    i: usize,
    theta: f64,
    z_d: f64,
    disturbance: [f64; 2],
) -> Result<f64> {
    let n = net.n();
    let r = gains.e_bar[i].sqrt();
    let (ed, eq) = (r * theta.cos(), r * theta.sin());
    let mut e = vec![ed; n];
    e.resize(2 * n, eq);
    let mut z = vec![z_d; n];
    z.resize(2 * n, 0.0);
    let dist = LoadDisturbance {
        p: vec![disturbance[0]; n],
        q: vec![disturbance[1]; n],
    };
    let de = error_rhs(net, &e, &z, &dist, &gains.k)?;
    Ok(2.0 * (ed * de[i] + eq * de[n + i]))
}

/// Checks that the error vector field points into the safe set on its
/// boundary.
///
/// For node `i` the error is placed on the circle `|e_i| = √ē_i` and copied to
/// every node, which cancels the line coupling; the coupling is then bounded
/// separately by its worst case `2 Σ_j w_ij (√(ē_i ē_j) - ē_i) / C_i`, attained
/// when every neighbour error sits at its own boundary in the same direction.
pub fn boundary_invariance_check(net: &Network, gains: &GainSet, opts: &BoundaryOptions) -> Result<Certificate> {
    let n = net.n();
    gains.validate(n)?;
    let model = &net.model;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = (f64::NEG_INFINITY, Witness::default());
    let mut passive = f64::INFINITY;

    for i in 0..n {
        let c = model.capacitance[i];
        let coupling = coupling_bound(net, gains, i);
        passive = passive.min(2.0 * gains.k[i] * gains.e_bar[i] / c);

        let (dp, dq) = (model.dp_max[i], model.dq_max[i]);
        let mut disturbances = vec![[dp, dq], [dp, -dq], [-dp, dq], [-dp, -dq]];
        for _ in 0..opts.n_disturbance {
            let a = if dp > 0.0 { rng.random_range(-dp..=dp) } else { 0.0 };
            let b = if dq > 0.0 { rng.random_range(-dq..=dq) } else { 0.0 };
            disturbances.push([a, b]);
        }

        let z_o = model.rated_voltage[i];
        let lo = z_o - gains.z_tilde_m[i] - gains.delta[i];
        let hi = z_o + gains.z_tilde_m[i];
        for z_d in grid(lo, hi, opts.z_samples) {
            for &[a, b] in &disturbances {
                for kth in 0..opts.n_boundary {
                    let th = 2.0 * PI * kth as f64 / opts.n_boundary as f64;
                    let ip = boundary_derivative(net, gains, i, th, z_d, [a, b])? + coupling;
                    if ip > worst.0 {
                        worst = (
                            ip,
                            Witness::node(i)
                                .with("theta", th)
                                .with("z_d", z_d)
                                .with("dP", a)
                                .with("dQ", b)
                                .with("coupling", coupling),
                        );
                    }
                }
            }
        }
    }
    let passive_cert = Certificate::from_margin("error_gain_dissipation", passive, None);
    Ok(Certificate::from_margin("boundary_invariance", -worst.0, Some(worst.1)).with_sub(vec![passive_cert]))
}

/// `Z ⊕ S ⊆ V` for every node. The margin is the smallest slack of the two
/// extreme points on the d-axis.
pub fn inclusion_check(sets: &[NodeSets]) -> Certificate {
    let slack = |s: &NodeSets| {
        let (lo, hi) = s.nominal_abs();
        let r = s.safe.radius;
        let upper = s.voltage.center_d + s.voltage.radius - (hi + r);
        let lower = lo - r - (s.voltage.center_d - s.voltage.radius);
        (upper, lower)
    };
    let (margin, node) = min_over_nodes(sets.len(), |i| {
        let (u, l) = slack(&sets[i]);
        u.min(l)
    });
    let witness = (!sets.is_empty()).then(|| {
        let (u, l) = slack(&sets[node]);
        Witness::node(node).with("upper_slack", u).with("lower_slack", l)
    });
    Certificate::from_margin("set_inclusion", margin, witness)
}

/// Nominal equilibrium of the d-channel. The q-channel equilibrium is always
/// `z̃_q = 0`, `σ_q = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    /// Shifted nominal d-voltage at equilibrium.
    pub z_hat_d: Vec<f64>,
    pub sigma_hat_d: Vec<f64>,
    /// Infinity norm of the equilibrium conditions at the returned point.
    pub residual: f64,
    /// Nodes whose integrator sits at ±1.
    pub saturated: Vec<usize>,
}

pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-8;
const EQUILIBRIUM_MAX_ITER: usize = 100;

/// Integrator value that makes `ż̃_d = 0` at the given d-voltages.
fn holding_sigma(net: &Network, gains: &GainSet, z: &[f64]) -> Result<Vec<f64>> {
    let lz = net.laplacian.apply(z);
    let model = &net.model;
    (0..net.n())
        .map(|i| {
            let g = cpl_current(i, [z[i] + model.rated_voltage[i], 0.0], model.load_p[i], model.load_q[i])?;
            Ok((gains.k_d[i] * z[i] + lz[i] + g[0]) / gains.m[i])
        })
        .collect()
}

fn mid(a: f64, b: f64, c: f64) -> (f64, usize) {
    let mut v = [(a, 0), (b, 1), (c, 2)];
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    v[1]
}

/// Equilibrium conditions: for each node either `z̃_d = ẑ` with
/// `|σ| ≤ 1`, or `σ = ±1` with the voltage on the matching side of the
/// reference. Encoded as `mid(z̃ - ẑ, σ(z̃) - 1, σ(z̃) + 1) = 0`.
fn equilibrium_residual(net: &Network, gains: &GainSet, refs: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    let s = holding_sigma(net, gains, z)?;
    Ok((0..net.n())
        .map(|i| mid(z[i] - refs[i], s[i] - 1.0, s[i] + 1.0))
        .unzip())
}

/// Solves for the nominal equilibrium with a damped semismooth Newton method
/// started at the references. Returns [`Error::SaturatedEquilibrium`] when
/// some integrator ends at ±1.
pub fn solve_equilibrium(net: &Network, gains: &GainSet, refs: &[f64]) -> Result<EquilibriumPoint> {
    let n = net.n();
    gains.validate(n)?;
    if refs.len() != n {
        return Err(Error::Dimension {
            what: "references",
            expected: n,
            got: refs.len(),
        });
    }
    let model = &net.model;
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut z = refs.to_vec();
    let (mut f, mut branch) = equilibrium_residual(net, gains, refs, &z)?;
    let mut res = norm(&f);
    let mut iter = 0;
    while res > EQUILIBRIUM_TOLERANCE {
        if iter == EQUILIBRIUM_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: res,
            });
        }
        iter += 1;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            if branch[i] == 0 {
                jac[(i, i)] = 1.0;
            } else {
                let abs = z[i] + model.rated_voltage[i];
                // ∂g_d/∂v_d at v_q = 0
                let dg = -2.0 / 3.0 * model.load_p[i] / (abs * abs);
                for j in 0..n {
                    jac[(i, j)] = net.laplacian.matrix[(i, j)] / gains.m[i];
                }
                jac[(i, i)] += (gains.k_d[i] + dg) / gains.m[i];
            }
        }
        let step = jac
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&f))
            .ok_or(Error::NoConvergence {
                iterations: iter,
                residual: res,
            })?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, d)| a - lambda * d).collect();
            let ok = equilibrium_residual(net, gains, refs, &trial);
            if let Ok((tf, tb)) = ok {
                let tr = norm(&tf);
                if tr < res || lambda < 1e-6 {
                    z = trial;
                    f = tf;
                    branch = tb;
                    res = tr;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    residual: res,
                });
            }
        }
    }
    let sigma: Vec<f64> = holding_sigma(net, gains, &z)?
        .into_iter()
        .map(|s| s.clamp(-1.0, 1.0))
        .collect();
    let saturated: Vec<usize> = (0..n).filter(|&i| branch[i] != 0).collect();
    let point = EquilibriumPoint {
        z_hat_d: z,
        sigma_hat_d: sigma,
        residual: res,
        saturated: saturated.clone(),
    };
    if saturated.is_empty() {
        Ok(point)
    } else {
        Err(Error::SaturatedEquilibrium {
            nodes: saturated,
            point: Box::new(point),
        })
    }
}

/// Jacobian of the nominal closed loop at an equilibrium, state order
/// `[z̃_d, σ_d, z̃_q, σ_q]`, each block n wide.
pub fn build_jacobian(net: &Network, gains: &GainSet, eq: &EquilibriumPoint) -> Result<DMatrix<f64>> {
    let n = net.n();
    gains.validate(n)?;
    let boundary: Vec<usize> = (0..n).filter(|&i| eq.sigma_hat_d[i].abs() >= 1.0).collect();
    if !boundary.is_empty() {
        return Err(Error::SaturatedEquilibrium {
            nodes: boundary,
            point: Box::new(eq.clone()),
        });
    }
    let model = &net.model;
    let w = model.grid_frequency;
    let l = &net.laplacian.matrix;
    let mut j = DMatrix::<f64>::zeros(4 * n, 4 * n);
    let (zd, sd, zq, sq) = (0, n, 2 * n, 3 * n);
    for i in 0..n {
        let c = model.capacitance[i];
        let abs = eq.z_hat_d[i] + model.rated_voltage[i];
        for k in 0..n {
            j[(zd + i, zd + k)] = -l[(i, k)] / c;
            j[(zq + i, zq + k)] = -l[(i, k)] / c;
        }
        j[(zd + i, zd + i)] += (-gains.k_d[i] + 2.0 * model.load_p[i] / (3.0 * abs * abs)) / c;
        j[(zd + i, sd + i)] = gains.m[i] / c;
        j[(zd + i, zq + i)] = w - 2.0 * model.load_q[i] / (3.0 * c * abs * abs);
        j[(sd + i, zd + i)] = -gains.k_id[i] * (1.0 - eq.sigma_hat_d[i].powi(2));
        j[(zq + i, zq + i)] -= gains.k_q[i] / c;
        j[(zq + i, sq + i)] = 1.0 / c;
        j[(sq + i, zq + i)] = -gains.k_iq[i];
    }
    Ok(j)
}

/// Eigenvalues of a real square matrix as `(re, im)` pairs.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let schur = Schur::try_new(m.clone(), 1e-14, 10_000).ok_or(Error::EigenSolver)?;
    Ok(schur.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect())
}

/// Margin `-max Re λ(J)`.
pub fn hurwitz_check(jacobian: &DMatrix<f64>) -> Result<Certificate> {
    let eig = eigenvalues(jacobian)?;
    let lead = eig
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    Ok(Certificate::from_margin(
        "hurwitz",
        -lead.0,
        Some(Witness::default().with("re", lead.0).with("im", lead.1)),
    ))
}

/// Hurwitz certificate at an equilibrium, with the per-node gain condition
/// and the definiteness of the two matrices of the quadratic eigenvalue
/// problem as supporting checks.
pub fn stability_certificate(net: &Network, gains: &GainSet, eq: &EquilibriumPoint) -> Result<Certificate> {
    let n = net.n();
    let model = &net.model;
    let jac = build_jacobian(net, gains, eq)?;
    let main = hurwitz_check(&jac)?;

    let abs = |i: usize| eq.z_hat_d[i] + model.rated_voltage[i];
    let (node_margin, node) = min_over_nodes(n, |i| {
        gains.k_d[i] - 2.0 * model.load_p[i] / (3.0 * abs(i) * abs(i))
    });
    let per_node = Certificate::from_margin("nominal_gain_condition", node_margin, Some(Witness::node(node)));

    let mut a = net.laplacian.matrix.clone();
    for i in 0..n {
        a[(i, i)] += gains.k_d[i] - 2.0 * model.load_p[i] / (3.0 * abs(i) * abs(i));
    }
    let a = 0.5 * (&a + a.transpose());
    let a_min = SymmetricEigen::new(a).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let a_cert = Certificate::from_margin("quadratic_damping_definite", a_min, None);

    let (b_min, b_node) = min_over_nodes(n, |i| gains.m[i] * gains.k_id[i] * (1.0 - eq.sigma_hat_d[i].powi(2)));
    let b_cert = Certificate::from_margin("quadratic_stiffness_definite", b_min, Some(Witness::node(b_node)));

    Ok(main.with_sub(vec![per_node, a_cert, b_cert]))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub boundary: BoundaryOptions,
}

/// All certificates for a gain set and reference schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateBundle {
    pub pass: bool,
    pub certificates: Vec<Certificate>,
    /// Equilibria per reference breakpoint; `None` where none was found.
    pub equilibria: Vec<Option<EquilibriumPoint>>,
    /// Per-node voltage disks whose interior contains every trajectory that
    /// starts inside the tube, reported when all certificates pass.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub region_of_attraction: Option<Vec<Disk>>,
}

/// Certificates reported by [`certify_all`] that do not count towards the
/// overall verdict.
pub const INFORMATIONAL: &[&str] = &["later_references"];

/// Runs every check. The equilibrium and stability certificates refer to the
/// first breakpoint of the schedule; later breakpoints are reported as
/// supporting checks.
pub fn certify_all(
    net: &Network,
    gains: &GainSet,
    schedule: &ReferenceSchedule,
    opts: &CertifyOptions,
) -> Result<CertificateBundle> {
    let n = net.n();
    gains.validate(n)?;
    let sets = node_sets(&net.model, gains)?;
    let ranges: Vec<(f64, f64)> = sets.iter().map(|s| s.nominal_abs()).collect();
    let denominator = denominator_network(&gains.e_bar, &ranges);
    let inclusion = inclusion_check(&sets);
    let boundary = if denominator.pass {
        boundary_invariance_check(net, gains, &opts.boundary)?
    } else {
        Certificate::skipped("boundary_invariance", "denominator positivity failed")
    };

    let mut equilibria = Vec::new();
    let mut stability = Vec::new();
    for (k, b) in schedule.breakpoints.iter().enumerate() {
        let name = format!("equilibrium_t{k}");
        match solve_equilibrium(net, gains, &b.z_hat) {
            Ok(eq) => {
                let cert = stability_certificate(net, gains, &eq)?;
                let refs_ok = Certificate::from_margin(
                    &name,
                    EQUILIBRIUM_TOLERANCE - eq.residual + f64::MIN_POSITIVE,
                    Some(Witness::default().with("t", b.t).with("residual", eq.residual)),
                );
                stability.push((refs_ok, cert));
                equilibria.push(Some(eq));
            }
            Err(Error::SaturatedEquilibrium { nodes, point }) => {
                let w = Witness::node(nodes[0]).with("t", b.t).with("sigma", point.sigma_hat_d[nodes[0]]);
                stability.push((
                    Certificate::from_margin(&name, -1.0, Some(w.note("saturated integrator"))),
                    Certificate::skipped("hurwitz", "no interior equilibrium"),
                ));
                equilibria.push(Some(*point));
            }
            Err(Error::NoConvergence { residual, .. }) => {
                stability.push((
                    Certificate::from_margin(&name, -residual, Some(Witness::default().note("no convergence"))),
                    Certificate::skipped("hurwitz", "no equilibrium"),
                ));
                equilibria.push(None);
            }
            Err(e) => return Err(e),
        }
    }

    let mut certificates = vec![denominator, inclusion, boundary];
    let mut rest = stability.into_iter();
    if let Some((eq, hurwitz)) = rest.next() {
        certificates.push(eq);
        certificates.push(hurwitz);
    }
    let later: Vec<Certificate> = rest
        .flat_map(|(e, h)| {
            let name = format!("{}_hurwitz", e.name);
            let mut h = h;
            h.name = name;
            [e, h]
        })
        .collect();
    if !later.is_empty() {
        let margin = later.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
        certificates.push(Certificate::from_margin("later_references", margin, None).with_sub(later));
    }
    let pass = certificates
        .iter()
        .filter(|c| !INFORMATIONAL.contains(&c.name.as_str()))
        .all(|c| c.pass);
    Ok(CertificateBundle {
        pass,
        certificates,
        equilibria,
        region_of_attraction: pass.then(|| sets.iter().map(|s| s.voltage).collect()),
    })
}
