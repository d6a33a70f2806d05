//! Fixed-step simulation of the closed loop, load disturbance generation and
//! scenario execution.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::solve_equilibrium;
use crate::control::{nominal_injection, GainSet, ReferenceSchedule};
use crate::dynamics::{
    cascade_rhs, full_rhs, line_equilibrium, rated_vector, reconstruct_true, CascadeState,
    LoadDisturbance, PowerDemand, TrueState,
};
use crate::error::{Error, Result};
use crate::netmodel::{Disk, Network};

/// Uniform time grid `t_k = t0 + k dt`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::TimeGrid(format!("step must be positive, got {dt}")));
        }
        if !(t_end >= t0) || !t_end.is_finite() || !t0.is_finite() {
            return Err(Error::TimeGrid(format!("invalid span [{t0}, {t_end}]")));
        }
        Ok(Self {
            t0,
            dt,
            steps: ((t_end - t0) / dt).round() as usize,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Index of the grid point nearest to `t`.
    pub fn snap(&self, t: f64) -> usize {
        ((t - self.t0) / self.dt).round().max(0.0) as usize
    }
}

/// A system advanced by [`integrate`]. Inputs are latched at the start of each
/// step and held over it.
pub trait System {
    fn begin_step(&mut self, _k: usize, _t: f64) -> Result<()> {
        Ok(())
    }

    fn rhs(&self, t: f64, x: &[f64]) -> Result<Vec<f64>>;

    /// Called after each step with the new state.
    fn end_step(&mut self, _k: usize, _x: &mut [f64]) -> Result<()> {
        Ok(())
    }
}

/// Wraps a plain function `f(t, x)` as a [`System`].
pub struct FnSystem<F>(pub F);

impl<F: Fn(f64, &[f64]) -> Result<Vec<f64>>> System for FnSystem<F> {
    fn rhs(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        (self.0)(t, x)
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(x, k)| x + a * k).collect()
}

/// One classical Runge-Kutta step.
pub fn rk4_step<S: System + ?Sized>(sys: &S, t: f64, x: &[f64], dt: f64) -> Result<Vec<f64>> {
    let k1 = sys.rhs(t, x)?;
    let k2 = sys.rhs(t + 0.5 * dt, &axpy(x, 0.5 * dt, &k1))?;
    let k3 = sys.rhs(t + 0.5 * dt, &axpy(x, 0.5 * dt, &k2))?;
    let k4 = sys.rhs(t + dt, &axpy(x, dt, &k3))?;
    Ok((0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates over `grid`, calling `observe(k, t_k, x_k)` at every grid point
/// including the initial one. Returns the final state. A step whose stages
/// leave the domain of the vector field is reported as divergence.
pub fn integrate<S: System + ?Sized>(
    sys: &mut S,
    x0: &[f64],
    grid: &TimeGrid,
    mut observe: impl FnMut(usize, f64, &[f64]) -> Result<()>,
) -> Result<Vec<f64>> {
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            t: grid.t0,
            last_state: x0.to_vec(),
        });
    }
    let mut x = x0.to_vec();
    observe(0, grid.t0, &x)?;
    for k in 0..grid.steps {
        let t = grid.time(k);
        sys.begin_step(k, t)?;
        let mut next = match rk4_step(sys, t, &x, grid.dt) {
            Err(Error::IntegratorInvariance { .. } | Error::CplSingularity { .. }) => {
                return Err(Error::Divergence { t, last_state: x });
            }
            r => r?,
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { t, last_state: x });
        }
        sys.end_step(k + 1, &mut next)?;
        x = next;
        observe(k + 1, grid.time(k + 1), &x)?;
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceKind {
    Zero,
    PiecewiseRandom,
    SquareWave,
    Sinusoid,
}

/// Load deviation generator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceProfile {
    pub kind: DisturbanceKind,
    #[serde(default)]
    pub seed: u64,
    /// Hold time of random levels, half period of the square wave, period of
    /// the sinusoid (s).
    #[serde(default = "default_dwell")]
    pub dwell: f64,
    /// Fraction of the deviation bounds used, in `[0, 1]`.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_dwell() -> f64 {
    0.05
}

fn default_amplitude() -> f64 {
    1.0
}

impl DisturbanceProfile {
    pub fn zero() -> Self {
        Self {
            kind: DisturbanceKind::Zero,
            seed: 0,
            dwell: default_dwell(),
            amplitude: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(Error::Config(format!(
                "disturbance amplitude must lie in [0, 1], got {}",
                self.amplitude
            )));
        }
        if self.kind != DisturbanceKind::Zero && !(self.dwell > 0.0) {
            return Err(Error::Config(format!("disturbance dwell must be positive, got {}", self.dwell)));
        }
        Ok(())
    }
}

/// Deterministic load deviation signal built from a profile.
#[derive(Clone, Debug)]
pub struct Disturbance {
    profile: DisturbanceProfile,
    dp_max: Vec<f64>,
    dq_max: Vec<f64>,
}

pub fn make_disturbance(profile: &DisturbanceProfile, net: &Network) -> Result<Disturbance> {
    profile.validate()?;
    Ok(Disturbance {
        profile: profile.clone(),
        dp_max: net.model.dp_max.clone(),
        dq_max: net.model.dq_max.clone(),
    })
}

impl Disturbance {
    pub fn at(&self, t: f64) -> LoadDisturbance {
        let n = self.dp_max.len();
        let a = self.profile.amplitude;
        let dwell = self.profile.dwell;
        let mut out = PowerDemand::zeros(n);
        match self.profile.kind {
            DisturbanceKind::Zero => {}
            DisturbanceKind::SquareWave => {
                for i in 0..n {
                    let phase = i as f64 * dwell / n as f64;
                    let s = if ((t + phase) / dwell).floor() as i64 % 2 == 0 { 1.0 } else { -1.0 };
                    out.p[i] = s * a * self.dp_max[i];
                    out.q[i] = s * a * self.dq_max[i];
                }
            }
            DisturbanceKind::Sinusoid => {
                for i in 0..n {
                    let phase = 2.0 * PI * i as f64 / n as f64;
                    let s = (2.0 * PI * t / dwell + phase).sin();
                    out.p[i] = s * a * self.dp_max[i];
                    out.q[i] = s * a * self.dq_max[i];
                }
            }
            DisturbanceKind::PiecewiseRandom => {
                let slot = (t / dwell).floor().max(0.0) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(self.profile.seed);
                rng.set_stream(slot);
                for i in 0..n {
                    let u: f64 = rng.random_range(-1.0..=1.0);
                    let w: f64 = rng.random_range(-1.0..=1.0);
                    out.p[i] = u * a * self.dp_max[i];
                    out.q[i] = w * a * self.dq_max[i];
                }
            }
        }
        for i in 0..n {
            out.p[i] = out.p[i].clamp(-self.dp_max[i], self.dp_max[i]);
            out.q[i] = out.q[i].clamp(-self.dq_max[i], self.dq_max[i]);
        }
        out
    }
}

/// Initial state of a scenario.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    /// Rated voltage, zero error, zero integrators.
    #[default]
    Rated,
    /// Nominal equilibrium of the first reference, zero error.
    Equilibrium,
}

/// Integration settings of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `record_stride`-th grid point in the trajectory. Report
    /// metrics always use every step.
    pub record_stride: usize,
    pub initial: InitialCondition,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 1e-5,
            t_end: 0.6,
            record_stride: 1,
            initial: InitialCondition::Rated,
        }
    }
}

/// Everything needed to run the closed loop.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub net: Network,
    pub gains: GainSet,
    pub schedule: ReferenceSchedule,
    pub disturbance: DisturbanceProfile,
    pub sim: SimSettings,
}

/// Recorded closed-loop run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CascadeState>,
    /// True node voltages, 2n layout.
    pub v: Vec<Vec<f64>>,
    /// Barrier values `ē - |e_i|²` per node.
    pub b: Vec<Vec<f64>>,
    pub disturbances: Vec<LoadDisturbance>,
    /// Reference change times.
    pub events: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintViolations {
    /// Number of (step, node) pairs outside the voltage constraint set.
    pub count: usize,
    /// Largest distance outside the set (V); negative when never violated.
    pub worst_excursion: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub steps: usize,
    pub dt: f64,
    pub min_barrier: Vec<f64>,
    /// Number of (step, node) pairs with a negative barrier value.
    pub safe_set_exits: usize,
    pub constraint_violations: ConstraintViolations,
    /// Largest `|v_i - z_i|` per node.
    pub tube_width_max: Vec<f64>,
    /// Time after the last reference change at which the nominal d-voltage
    /// entered the settling band for good; `None` if it never did.
    pub settling: Vec<Option<f64>>,
    /// Equilibrium of the last reference, shifted d-voltage.
    pub final_equilibrium: Vec<f64>,
    pub final_nominal: Vec<f64>,
    pub final_sigma_d: Vec<f64>,
    /// `∫ |e|² dt` over the run.
    pub error_energy: f64,
    /// Capacitor energy `Σ C |v|² / 2` at the end (J).
    pub final_stored_energy: f64,
    pub max_sigma_clamp: f64,
    pub max_abs_q_channel: f64,
}

/// Half-width of the band used for settling times (V).
pub const SETTLING_BAND: f64 = 0.01;

struct CascadeSystem<'a> {
    net: &'a Network,
    gains: &'a GainSet,
    schedule: &'a ReferenceSchedule,
    event_steps: Vec<usize>,
    disturbance: Disturbance,
    grid: TimeGrid,
    refs: Vec<f64>,
    load: LoadDisturbance,
    max_clamp: f64,
}

impl System for CascadeSystem<'_> {
    fn begin_step(&mut self, k: usize, t: f64) -> Result<()> {
        let idx = self.event_steps.iter().rposition(|&s| s <= k).unwrap_or(0);
        self.refs.clone_from(&self.schedule.breakpoints[idx].z_hat);
        self.load = self.disturbance.at(t + 0.5 * self.grid.dt);
        Ok(())
    }

    fn rhs(&self, _t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let state = CascadeState::from_flat(x)?;
        Ok(cascade_rhs(self.net, &state, self.gains, &self.refs, &self.load)?.to_flat())
    }

    fn end_step(&mut self, _k: usize, x: &mut [f64]) -> Result<()> {
        let n = self.net.n();
        for s in &mut x[4 * n..5 * n] {
            let c = s.clamp(-1.0, 1.0);
            self.max_clamp = self.max_clamp.max((*s - c).abs());
            *s = c;
        }
        Ok(())
    }
}

fn initial_state(scenario: &Scenario) -> Result<CascadeState> {
    let n = scenario.net.n();
    let mut x = CascadeState::rest(n);
    if scenario.sim.initial == InitialCondition::Equilibrium {
        let eq = match solve_equilibrium(&scenario.net, &scenario.gains, scenario.schedule.at(0.0)) {
            Ok(eq) => eq,
            Err(Error::SaturatedEquilibrium { point, .. }) => *point,
            Err(e) => return Err(e),
        };
        x.z_tilde[..n].copy_from_slice(&eq.z_hat_d);
        x.sigma_d = eq.sigma_hat_d;
    }
    Ok(x)
}

fn final_equilibrium(scenario: &Scenario) -> Result<Vec<f64>> {
    let refs = &scenario.schedule.breakpoints.last().expect("non-empty schedule").z_hat;
    match solve_equilibrium(&scenario.net, &scenario.gains, refs) {
        Ok(eq) => Ok(eq.z_hat_d),
        Err(Error::SaturatedEquilibrium { point, .. }) => Ok(point.z_hat_d),
        Err(e) => Err(e),
    }
}

/// Runs the closed-loop cascade and summarises it.
pub fn run_scenario(scenario: &Scenario) -> Result<(Trajectory, SimReport)> {
    let net = &scenario.net;
    let n = net.n();
    scenario.gains.validate(n)?;
    let grid = TimeGrid::new(0.0, scenario.sim.t_end, scenario.sim.dt)?;
    let stride = scenario.sim.record_stride.max(1);
    let disturbance = make_disturbance(&scenario.disturbance, net)?;
    let event_steps: Vec<usize> = scenario.schedule.breakpoints.iter().map(|b| grid.snap(b.t)).collect();
    let events: Vec<f64> = event_steps.iter().skip(1).map(|&k| grid.time(k)).collect();
    let last_event = events.last().copied().unwrap_or(0.0);
    let z_eq = final_equilibrium(scenario)?;
    let z_o = rated_vector(net);
    let model = &net.model;
    let sets: Vec<Disk> = (0..n)
        .map(|i| Disk {
            center_d: model.constraint_center[i],
            radius: model.v_max[i],
        })
        .collect();

    let recorder = disturbance.clone();
    let mut sys = CascadeSystem {
        net,
        gains: &scenario.gains,
        schedule: &scenario.schedule,
        event_steps,
        disturbance,
        grid,
        refs: scenario.schedule.at(0.0).to_vec(),
        load: PowerDemand::zeros(n),
        max_clamp: 0.0,
    };

    let mut traj = Trajectory {
        events,
        ..Trajectory::default()
    };
    let mut report = SimReport {
        steps: grid.steps,
        dt: grid.dt,
        min_barrier: vec![f64::INFINITY; n],
        constraint_violations: ConstraintViolations {
            count: 0,
            worst_excursion: f64::NEG_INFINITY,
        },
        tube_width_max: vec![0.0; n],
        settling: vec![None; n],
        final_equilibrium: z_eq.clone(),
        ..SimReport::default()
    };

    let x0 = initial_state(scenario)?.to_flat();
    let mut last_outside = vec![Some(last_event); n];
    let mut prev_e2 = 0.0;
    let final_x = integrate(&mut sys, &x0, &grid, |k, t, x| {
        let state = CascadeState::from_flat(x)?;
        let v = reconstruct_true(&state, &z_o);
        let mut b = vec![0.0; n];
        let mut e2_total = 0.0;
        for i in 0..n {
            let e2 = state.e[i].powi(2) + state.e[n + i].powi(2);
            e2_total += e2;
            b[i] = scenario.gains.e_bar[i] - e2;
            report.min_barrier[i] = report.min_barrier[i].min(b[i]);
            if b[i] < 0.0 {
                report.safe_set_exits += 1;
            }
            report.tube_width_max[i] = report.tube_width_max[i].max(e2.sqrt());
            let exc = sets[i].excursion(v[i], v[n + i]);
            let cv = &mut report.constraint_violations;
            cv.worst_excursion = cv.worst_excursion.max(exc);
            if exc > 0.0 {
                cv.count += 1;
            }
            report.max_abs_q_channel = report
                .max_abs_q_channel
                .max(state.z_tilde[n + i].abs())
                .max(state.sigma_q[i].abs());
            if t >= last_event && (state.z_tilde[i] - z_eq[i]).abs() > SETTLING_BAND {
                last_outside[i] = None;
            } else if t >= last_event && last_outside[i].is_none() {
                last_outside[i] = Some(t);
            }
        }
        if k > 0 {
            report.error_energy += 0.5 * (prev_e2 + e2_total) * grid.dt;
        }
        prev_e2 = e2_total;
        if grid.steps > 0 && (k % stride == 0 || k == grid.steps) {
            // load applied over the step that starts here
            let load = if k < grid.steps {
                recorder.at(t + 0.5 * grid.dt)
            } else {
                recorder.at(t - 0.5 * grid.dt)
            };
            traj.times.push(t);
            traj.v.push(v);
            traj.b.push(b);
            traj.disturbances.push(load);
            traj.states.push(state);
        }
        Ok(())
    })?;

    let state = CascadeState::from_flat(&final_x)?;
    report.settling = last_outside.iter().map(|s| s.map(|t| t - last_event)).collect();
    report.final_nominal = state.z_tilde[..n].to_vec();
    report.final_sigma_d = state.sigma_d.clone();
    let v = reconstruct_true(&state, &z_o);
    report.final_stored_energy = (0..n)
        .map(|i| 0.5 * model.capacitance[i] * (v[i].powi(2) + v[n + i].powi(2)))
        .sum();
    report.max_sigma_clamp = sys.max_clamp;
    Ok((traj, report))
}

/// Full model closed loop: node voltages and line currents as states, with the
/// controller running its own nominal model. State layout
/// `[v (2n), I (2m), z̃ (2n), σ_d (n), σ_q (n)]`.
struct FullSystem<'a> {
    inner: CascadeSystem<'a>,
}

impl System for FullSystem<'_> {
    fn begin_step(&mut self, k: usize, t: f64) -> Result<()> {
        self.inner.begin_step(k, t)
    }

    fn rhs(&self, _t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let net = self.inner.net;
        let gains = self.inner.gains;
        let (n, m) = (net.n(), net.m());
        let v = &x[..2 * n];
        let i_line = &x[2 * n..2 * n + 2 * m];
        let rest = &x[2 * n + 2 * m..];
        let z_tilde = &rest[..2 * n];
        let sigma_d = &rest[2 * n..3 * n];
        let sigma_q = &rest[3 * n..];

        let nominal = CascadeState {
            z_tilde: z_tilde.to_vec(),
            e: vec![0.0; 2 * n],
            sigma_d: sigma_d.to_vec(),
            sigma_q: sigma_q.to_vec(),
        };
        let zero = PowerDemand::zeros(n);
        let d_nominal = cascade_rhs(net, &nominal, gains, &self.inner.refs, &zero)?;

        let i_bar = nominal_injection(net, gains, z_tilde, sigma_d, sigma_q)?;
        let z = nominal.nominal(&rated_vector(net));
        let i_inj: Vec<f64> = (0..2 * n).map(|j| -gains.k[j % n] * (v[j] - z[j]) + i_bar[j]).collect();
        let load = self.inner.load.on_top_of_nominal(net);
        let d_true = full_rhs(
            net,
            &TrueState {
                v: v.to_vec(),
                i_line: i_line.to_vec(),
            },
            &i_inj,
            &load,
        )?;

        let mut out = d_true.v;
        out.extend(d_true.i_line);
        out.extend(d_nominal.z_tilde);
        out.extend(d_nominal.sigma_d);
        out.extend(d_nominal.sigma_q);
        Ok(out)
    }

    fn end_step(&mut self, _k: usize, x: &mut [f64]) -> Result<()> {
        let (n, m) = (self.inner.net.n(), self.inner.net.m());
        let off = 4 * n + 2 * m;
        for s in &mut x[off..off + n] {
            let c = s.clamp(-1.0, 1.0);
            self.inner.max_clamp = self.inner.max_clamp.max((*s - c).abs());
            *s = c;
        }
        Ok(())
    }
}

/// Agreement between the reduced and the full line model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `|v_full - v_reduced|` per node at the final time (V).
    pub steady_state_discrepancy: Vec<f64>,
    /// Largest `|v_full - v_reduced|` per node over the run (V).
    pub transient_max_discrepancy: Vec<f64>,
    /// Largest distance of the full-model line currents from their exact
    /// equilibrium for the current voltages, over the run (A).
    pub line_state_drift: f64,
    /// Distance between the exact line equilibrium and the Laplacian line
    /// currents at the final reduced-model voltages (A).
    pub laplacian_current_gap: f64,
    /// Largest voltage derivative of the reduced closed loop at the end (V/s).
    pub reduced_final_rate: f64,
}

fn node_distance(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| (a[i] - b[i]).hypot(a[n + i] - b[n + i])).collect()
}

/// Simulates the reduced cascade and the full line model side by side under
/// the same references and disturbances.
pub fn compare_models(scenario: &Scenario) -> Result<ComparisonReport> {
    let net = &scenario.net;
    let (n, m) = (net.n(), net.m());
    scenario.gains.validate(n)?;
    let grid = TimeGrid::new(0.0, scenario.sim.t_end, scenario.sim.dt)?;
    let event_steps: Vec<usize> = scenario.schedule.breakpoints.iter().map(|b| grid.snap(b.t)).collect();
    let z_o = rated_vector(net);
    let make = || -> Result<CascadeSystem> {
        Ok(CascadeSystem {
            net,
            gains: &scenario.gains,
            schedule: &scenario.schedule,
            event_steps: event_steps.clone(),
            disturbance: make_disturbance(&scenario.disturbance, net)?,
            grid,
            refs: scenario.schedule.at(0.0).to_vec(),
            load: PowerDemand::zeros(n),
            max_clamp: 0.0,
        })
    };

    let x0 = initial_state(scenario)?;
    let v0 = reconstruct_true(&x0, &z_o);
    let mut reduced_v = Vec::with_capacity(grid.steps + 1);
    let mut reduced = make()?;
    let red_final = integrate(&mut reduced, &x0.to_flat(), &grid, |_, _, x| {
        let s = CascadeState::from_flat(x)?;
        reduced_v.push(reconstruct_true(&s, &z_o));
        Ok(())
    })?;

    let mut full = FullSystem { inner: make()? };
    let mut f0 = v0.clone();
    f0.extend(line_equilibrium(net, &v0));
    f0.extend_from_slice(&x0.z_tilde);
    f0.extend_from_slice(&x0.sigma_d);
    f0.extend_from_slice(&x0.sigma_q);
    let mut transient = vec![0.0f64; n];
    let mut drift = 0.0f64;
    let full_final = integrate(&mut full, &f0, &grid, |k, _, x| {
        let v = &x[..2 * n];
        let d = node_distance(v, &reduced_v[k], n);
        for i in 0..n {
            transient[i] = transient[i].max(d[i]);
        }
        let eq = line_equilibrium(net, v);
        for (a, b) in x[2 * n..2 * n + 2 * m].iter().zip(&eq) {
            drift = drift.max((a - b).abs());
        }
        Ok(())
    })?;

    let v_red = reduced_v.last().expect("at least the initial point");
    let steady = node_distance(&full_final[..2 * n], v_red, n);
    let exact = line_equilibrium(net, v_red);
    let lap = crate::dynamics::laplacian_line_currents(net, v_red);
    let gap = exact.iter().zip(&lap).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    let state = CascadeState::from_flat(&red_final)?;
    let last_refs = scenario.schedule.at(grid.time(grid.steps)).to_vec();
    let rate = cascade_rhs(net, &state, &scenario.gains, &last_refs, &reduced.disturbance.at(grid.time(grid.steps)))?;
    let rate = rate.z_tilde.iter().chain(&rate.e).fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(ComparisonReport {
        steady_state_discrepancy: steady,
        transient_max_discrepancy: transient,
        line_state_drift: drift,
        laplacian_current_gap: gap,
        reduced_final_rate: rate,
    })
}
