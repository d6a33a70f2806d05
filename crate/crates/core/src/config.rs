//! Run configuration: a strict JSON document describing the network, the
//! gains (designed or given), the reference schedule, the disturbance and the
//! integration settings.
//!
//! Edges and node indices in the document are 1-based; everything inside the
//! crate is 0-based. References are absolute RMS voltages.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certify::{BoundaryOptions, CertifyOptions};
use crate::control::{design_all, Breakpoint, DesignOptions, DesignOutcome, GainSet, ReferenceSchedule};
use crate::control::{DEFAULT_K_ID, DEFAULT_K_IQ};
use crate::error::{Error, Result};
use crate::netmodel::{
    Network, NetworkModel, DEFAULT_CAPACITANCE, DEFAULT_GRID_FREQUENCY, DEFAULT_LINE_INDUCTANCE,
    DEFAULT_LINE_RESISTANCE,
};
use crate::sim::{DisturbanceKind, DisturbanceProfile, InitialCondition, Scenario, SimSettings};

pub const SCHEMA_VERSION: u32 = 1;

const REQUIRED_KEYS: [&str; 4] = ["schema_version", "network", "gains", "references"];

/// A scalar applied to every entry, or one value per entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerEntry {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerEntry {
    fn expand(&self, what: &'static str, n: usize) -> Result<Vec<f64>> {
        match self {
            PerEntry::Scalar(v) => Ok(vec![*v; n]),
            PerEntry::List(v) if v.len() == n => Ok(v.clone()),
            PerEntry::List(v) => Err(Error::Dimension {
                what,
                expected: n,
                got: v.len(),
            }),
        }
    }
}

fn expand_or(value: &Option<PerEntry>, what: &'static str, n: usize, default: f64) -> Result<Vec<f64>> {
    value.as_ref().map_or(Ok(vec![default; n]), |v| v.expand(what, n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub v_min: PerEntry,
    pub v_max: PerEntry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub nodes: usize,
    /// 1-based node pairs, tail first.
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub capacitance: Option<PerEntry>,
    #[serde(default)]
    pub line_resistance: Option<PerEntry>,
    #[serde(default)]
    pub line_inductance: Option<PerEntry>,
    #[serde(default)]
    pub grid_frequency: Option<f64>,
    #[serde(default)]
    pub rated_voltage: Option<PerEntry>,
    /// RMS voltage band per node. Defaults to rated ± 6 V.
    #[serde(default)]
    pub constraint: Option<ConstraintDoc>,
    #[serde(default)]
    pub load_p: Option<PerEntry>,
    #[serde(default)]
    pub load_q: Option<PerEntry>,
    #[serde(default)]
    pub dp_max: Option<PerEntry>,
    #[serde(default)]
    pub dq_max: Option<PerEntry>,
}

impl NetworkDoc {
    pub fn to_model(&self) -> Result<NetworkModel> {
        let n = self.nodes;
        let m = self.edges.len();
        let mut edges = Vec::with_capacity(m);
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::Config(format!(
                    "network.edges[{k}] = [{i}, {j}]: node numbers run from 1 to {n}"
                )));
            }
            edges.push((i - 1, j - 1));
        }
        let rated = expand_or(&self.rated_voltage, "network.rated_voltage", n, 110.0)?;
        let (center, radius) = match &self.constraint {
            Some(c) => {
                let lo = c.v_min.expand("network.constraint.v_min", n)?;
                let hi = c.v_max.expand("network.constraint.v_max", n)?;
                for i in 0..n {
                    if !(hi[i] > lo[i]) {
                        return Err(Error::Config(format!(
                            "network.constraint: node {} has v_max {} <= v_min {}",
                            i + 1,
                            hi[i],
                            lo[i]
                        )));
                    }
                }
                (
                    lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect(),
                    lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect(),
                )
            }
            None => (rated.clone(), vec![6.0; n]),
        };
        Ok(NetworkModel {
            node_count: n,
            edges,
            capacitance: expand_or(&self.capacitance, "network.capacitance", n, DEFAULT_CAPACITANCE)?,
            line_resistance: expand_or(&self.line_resistance, "network.line_resistance", m, DEFAULT_LINE_RESISTANCE)?,
            line_inductance: expand_or(&self.line_inductance, "network.line_inductance", m, DEFAULT_LINE_INDUCTANCE)?,
            grid_frequency: self.grid_frequency.unwrap_or(DEFAULT_GRID_FREQUENCY),
            rated_voltage: rated,
            constraint_center: center,
            v_max: radius,
            load_p: expand_or(&self.load_p, "network.load_p", n, 0.0)?,
            load_q: expand_or(&self.load_q, "network.load_q", n, 0.0)?,
            dp_max: expand_or(&self.dp_max, "network.dp_max", n, 0.0)?,
            dq_max: expand_or(&self.dq_max, "network.dq_max", n, 0.0)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoGainsDoc {
    pub e_bar: PerEntry,
    pub z_tilde_m: PerEntry,
    pub delta: PerEntry,
    #[serde(default)]
    pub safety_factor: Option<f64>,
    #[serde(default)]
    pub safety_factor_kd: Option<f64>,
    #[serde(default)]
    pub k_min: Option<f64>,
    #[serde(default)]
    pub k_d_min: Option<f64>,
    #[serde(default)]
    pub k_q: Option<PerEntry>,
    #[serde(default)]
    pub k_id: Option<PerEntry>,
    #[serde(default)]
    pub k_iq: Option<PerEntry>,
    #[serde(default)]
    pub grid_points: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitGainsDoc {
    pub k: PerEntry,
    pub k_d: PerEntry,
    #[serde(default)]
    pub k_q: Option<PerEntry>,
    #[serde(default)]
    pub k_id: Option<PerEntry>,
    #[serde(default)]
    pub k_iq: Option<PerEntry>,
    pub z_tilde_m: PerEntry,
    pub e_bar: PerEntry,
    pub delta: PerEntry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsDoc {
    #[serde(default)]
    pub auto: Option<AutoGainsDoc>,
    #[serde(default)]
    pub explicit: Option<ExplicitGainsDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDoc {
    pub t: f64,
    pub v_rms: PerEntry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceDoc {
    pub kind: DisturbanceKind,
    #[serde(default)]
    pub dwell: Option<f64>,
    #[serde(default)]
    pub amplitude: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDoc {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub record_stride: Option<usize>,
    #[serde(default)]
    pub initial: Option<InitialCondition>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeDoc {
    #[serde(default)]
    pub compare: bool,
    #[serde(default)]
    pub allow_uncertified: bool,
    #[serde(default)]
    pub boundary_samples: Option<usize>,
    #[serde(default)]
    pub random_disturbances: Option<usize>,
}

/// The document as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub schema_version: u32,
    pub network: NetworkDoc,
    pub gains: GainsDoc,
    pub references: Vec<ReferenceDoc>,
    #[serde(default)]
    pub disturbance: Option<DisturbanceDoc>,
    #[serde(default)]
    pub sim: SimDoc,
    #[serde(default)]
    pub mode: ModeDoc,
}

/// How the gains are obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum GainSource {
    Auto(DesignOptions),
    Explicit(GainSet),
}

/// Validated configuration with every default applied.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub network: Network,
    pub gains: GainSource,
    /// Shifted references.
    pub schedule: ReferenceSchedule,
    pub disturbance: DisturbanceProfile,
    pub sim: SimSettings,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub compare: bool,
    pub allow_uncertified: bool,
    pub certify: CertifyOptions,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if let Some(obj) = value.as_object() {
        let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !obj.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing required keys: {}", missing.join(", "))));
        }
    }
    let doc: ConfigDoc = serde_path_to_error::deserialize(value)
        .map_err(|e| Error::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
    from_doc(&doc)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn from_doc(doc: &ConfigDoc) -> Result<RunConfig> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    let model = doc.network.to_model()?;
    let violations = crate::netmodel::validate_network(&model);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| v.message.clone()).collect();
        return Err(Error::Config(format!("invalid network: {}", lines.join("; "))));
    }
    let network = Network::new(model)?;
    let n = network.n();

    let gains = match (&doc.gains.auto, &doc.gains.explicit) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("gains: give either `auto` or `explicit`, not both".into()));
        }
        (None, None) => return Err(Error::Config("gains: one of `auto` or `explicit` is required".into())),
        (Some(a), None) => GainSource::Auto(auto_options(a, n)?),
        (None, Some(x)) => GainSource::Explicit(explicit_gains(x, n)?),
    };

    let rated = &network.model.rated_voltage;
    let breakpoints = doc
        .references
        .iter()
        .map(|r| {
            let v = r.v_rms.expand("references.v_rms", n)?;
            Ok(Breakpoint {
                t: r.t,
                z_hat: v.iter().zip(rated).map(|(v, o)| v - o).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let schedule = ReferenceSchedule::new(breakpoints, n)?;

    let seed = doc.sim.seed.unwrap_or(0);
    let disturbance = match &doc.disturbance {
        None => DisturbanceProfile::zero(),
        Some(d) => DisturbanceProfile {
            kind: d.kind,
            seed,
            dwell: d.dwell.unwrap_or(0.05),
            amplitude: d.amplitude.unwrap_or(1.0),
        },
    };
    disturbance.validate()?;

    let defaults = SimSettings::default();
    let sim = SimSettings {
        dt: doc.sim.dt.unwrap_or(defaults.dt),
        t_end: doc.sim.t_end.unwrap_or(defaults.t_end),
        record_stride: doc.sim.record_stride.unwrap_or(1).max(1),
        initial: doc.sim.initial.unwrap_or_default(),
    };
    if !(sim.dt > 0.0) || !(sim.t_end >= 0.0) {
        return Err(Error::Config(format!("sim: need dt > 0 and t_end >= 0 (got {}, {})", sim.dt, sim.t_end)));
    }

    let mut boundary = BoundaryOptions {
        seed,
        ..BoundaryOptions::default()
    };
    if let Some(b) = doc.mode.boundary_samples {
        boundary.n_boundary = b;
    }
    if let Some(r) = doc.mode.random_disturbances {
        boundary.n_disturbance = r;
    }

    Ok(RunConfig {
        network,
        gains,
        schedule,
        disturbance,
        sim,
        out_dir: doc.sim.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
        seed,
        compare: doc.mode.compare,
        allow_uncertified: doc.mode.allow_uncertified,
        certify: CertifyOptions { boundary },
    })
}

fn auto_options(a: &AutoGainsDoc, n: usize) -> Result<DesignOptions> {
    let mut o = DesignOptions::uniform(n, 1.0, 1.0, 1.0);
    o.e_bar = a.e_bar.expand("gains.auto.e_bar", n)?;
    o.z_tilde_m = a.z_tilde_m.expand("gains.auto.z_tilde_m", n)?;
    o.delta = a.delta.expand("gains.auto.delta", n)?;
    if let Some(v) = a.safety_factor {
        o.safety_factor = v;
    }
    if let Some(v) = a.safety_factor_kd {
        o.safety_factor_kd = v;
    }
    if let Some(v) = a.k_min {
        o.k_min = v;
    }
    if let Some(v) = a.k_d_min {
        o.k_d_min = v;
    }
    if let Some(v) = &a.k_q {
        o.k_q = Some(v.expand("gains.auto.k_q", n)?);
    }
    o.k_id = expand_or(&a.k_id, "gains.auto.k_id", n, DEFAULT_K_ID)?;
    o.k_iq = expand_or(&a.k_iq, "gains.auto.k_iq", n, DEFAULT_K_IQ)?;
    if let Some(v) = a.grid_points {
        o.grid_points = v;
    }
    if !(o.safety_factor >= 1.0) || !(o.safety_factor_kd >= 1.0) {
        return Err(Error::Config("gains.auto: safety factors must be >= 1".into()));
    }
    Ok(o)
}

fn explicit_gains(x: &ExplicitGainsDoc, n: usize) -> Result<GainSet> {
    let k_d = x.k_d.expand("gains.explicit.k_d", n)?;
    let z_tilde_m = x.z_tilde_m.expand("gains.explicit.z_tilde_m", n)?;
    let gains = GainSet {
        k: x.k.expand("gains.explicit.k", n)?,
        k_q: match &x.k_q {
            Some(v) => v.expand("gains.explicit.k_q", n)?,
            None => k_d.clone(),
        },
        k_id: expand_or(&x.k_id, "gains.explicit.k_id", n, DEFAULT_K_ID)?,
        k_iq: expand_or(&x.k_iq, "gains.explicit.k_iq", n, DEFAULT_K_IQ)?,
        m: k_d.iter().zip(&z_tilde_m).map(|(k, z)| k * z).collect(),
        k_d,
        e_bar: x.e_bar.expand("gains.explicit.e_bar", n)?,
        delta: x.delta.expand("gains.explicit.delta", n)?,
        z_tilde_m,
    };
    gains.validate(n)?;
    Ok(gains)
}

impl RunConfig {
    /// Designs the gains in auto mode; returns the given gains otherwise.
    pub fn resolve_gains(&self) -> Result<(Option<GainSet>, Option<DesignOutcome>)> {
        match &self.gains {
            GainSource::Explicit(g) => Ok((Some(g.clone()), None)),
            GainSource::Auto(opts) => {
                let out = design_all(&self.network, opts)?;
                Ok((out.gains.clone(), Some(out)))
            }
        }
    }

    pub fn scenario(&self, gains: GainSet) -> Scenario {
        Scenario {
            net: self.network.clone(),
            gains,
            schedule: self.schedule.clone(),
            disturbance: self.disturbance.clone(),
            sim: self.sim.clone(),
        }
    }
}

/// Reads a gain set written by the design step.
pub fn load_gains(path: &Path) -> Result<GainSet> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    serde_path_to_error::deserialize(value).map_err(|e| Error::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "network": { "nodes": 2, "edges": [[1, 2]] },
            "gains": { "explicit": { "k": 5, "k_d": 10, "z_tilde_m": 5, "e_bar": 0.2, "delta": 1 } },
            "references": [ { "t": 0, "v_rms": 110 } ]
        })
    }

    #[test]
    fn minimal_document_parses() {
        let cfg = parse_config(&minimal().to_string()).unwrap();
        assert_eq!(cfg.network.n(), 2);
        assert_eq!(cfg.network.model.edges, vec![(0, 1)]);
        assert_eq!(cfg.schedule.at(0.0), &[0.0, 0.0]);
        match cfg.gains {
            GainSource::Explicit(g) => assert_eq!(g.m, vec![50.0, 50.0]),
            _ => panic!(),
        }
    }

    #[test]
    fn empty_document_lists_required_keys() {
        let err = parse_config("{}").unwrap_err().to_string();
        for k in REQUIRED_KEYS {
            assert!(err.contains(k), "{err}");
        }
    }

    #[test]
    fn unknown_key_reports_path() {
        let mut doc = minimal();
        doc["network"]["capacitence"] = serde_json::json!(1e-3);
        let err = parse_config(&doc.to_string()).unwrap_err().to_string();
        assert!(err.contains("network"), "{err}");
        assert!(err.contains("capacitence"), "{err}");
    }

    #[test]
    fn both_gain_modes_rejected() {
        let mut doc = minimal();
        doc["gains"]["auto"] = serde_json::json!({ "e_bar": 0.2, "z_tilde_m": 5, "delta": 1 });
        let err = parse_config(&doc.to_string()).unwrap_err().to_string();
        assert!(err.contains("not both"), "{err}");
    }

    #[test]
    fn zero_based_edge_rejected() {
        let mut doc = minimal();
        doc["network"]["edges"] = serde_json::json!([[0, 1]]);
        assert!(parse_config(&doc.to_string()).is_err());
    }

    #[test]
    fn constraint_band_becomes_disk() {
        let mut doc = minimal();
        doc["network"]["constraint"] = serde_json::json!({ "v_min": 103.5, "v_max": 115.5 });
        let cfg = parse_config(&doc.to_string()).unwrap();
        assert_eq!(cfg.network.model.constraint_center, vec![109.5, 109.5]);
        assert_eq!(cfg.network.model.v_max, vec![6.0, 6.0]);
    }
}
