//! Run configuration and the experiment file schema.
//!
//! Experiment files are flat `key = value` TOML. Network keys:
//!
//! | key               | type            | default                 |
//! |-------------------|-----------------|-------------------------|
//! | `node_count`      | integer ≥ 2     | required                |
//! | `erasure_rates`   | list of floats  | required, one per hop   |
//! | `rtt_per_hop`     | list of ints    | required, even          |
//! | `horizon`         | integer         | 5000                    |
//! | `arrival_rate`    | float or "auto" | "auto" (1 − max ε − 0.1)|
//! | `alpha`           | float           | see [`DEFAULT_ALPHA`]   |
//! | `threshold`       | float           | 0                       |
//! | `max_window`      | integer         | 2 × Σ RTT               |
//! | `delivery_window` | integer         | 500                     |
//! | `payload_len`     | integer         | 8                       |
//! | `bs_log`          | "ln"/"log2"/"log10" | "ln"                |
//! | `seed`            | integer         | 1                       |
//!
//! Experiment keys (ignored by single runs): `sweep_parameter`,
//! `sweep_values`, `protocols`, `seeds`, `output_dir`, `emit_traces`,
//! `verification_mode`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::types::Protocol;

/// Blank-space duration scale used unless the experiment overrides it.
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_DELIVERY_WINDOW: u64 = 500;
pub const DEFAULT_PAYLOAD_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRate", into = "RawRate")]
pub enum ArrivalRate {
    /// One below the bottleneck rate: `1 − max ε − 0.1`, clamped to [0, 1].
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawRate {
    Num(f64),
    Str(String),
}

impl TryFrom<RawRate> for ArrivalRate {
    type Error = String;

    fn try_from(raw: RawRate) -> Result<Self, Self::Error> {
        match raw {
            RawRate::Num(x) => Ok(ArrivalRate::Fixed(x)),
            RawRate::Str(s) if s == "auto" => Ok(ArrivalRate::Auto),
            RawRate::Str(s) => Err(format!(
                "arrival_rate must be a number or \"auto\", got {s:?}"
            )),
        }
    }
}

impl From<ArrivalRate> for RawRate {
    fn from(r: ArrivalRate) -> Self {
        match r {
            ArrivalRate::Auto => RawRate::Str("auto".into()),
            ArrivalRate::Fixed(x) => RawRate::Num(x),
        }
    }
}

/// Logarithm used inside the blank-space DoF rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Ln,
    Log2,
    Log10,
}

impl LogBase {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            LogBase::Ln => x.ln(),
            LogBase::Log2 => x.log2(),
            LogBase::Log10 => x.log10(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub node_count: usize,
    pub erasure_rates: Vec<f64>,
    pub rtt_per_hop: Vec<u64>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_arrival")]
    pub arrival_rate: ArrivalRate,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub threshold: f64,
    /// End-of-window cap in symbols; `None` means twice the path RTT.
    #[serde(default)]
    pub max_window: Option<u64>,
    #[serde(default = "default_delivery_window")]
    pub delivery_window: u64,
    #[serde(default = "default_payload_len")]
    pub payload_len: usize,
    #[serde(default)]
    pub bs_log: LogBase,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_horizon() -> u64 {
    5000
}
fn default_arrival() -> ArrivalRate {
    ArrivalRate::Auto
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_delivery_window() -> u64 {
    DEFAULT_DELIVERY_WINDOW
}
fn default_payload_len() -> usize {
    DEFAULT_PAYLOAD_LEN
}
fn default_seed() -> u64 {
    1
}

impl NetworkConfig {
    /// Chain with identical hop RTTs and default tuning.
    pub fn chain(erasure_rates: Vec<f64>, rtt: u64, horizon: u64) -> Self {
        let hops = erasure_rates.len();
        NetworkConfig {
            node_count: hops + 1,
            erasure_rates,
            rtt_per_hop: vec![rtt; hops],
            horizon,
            arrival_rate: ArrivalRate::Auto,
            alpha: DEFAULT_ALPHA,
            threshold: 0.0,
            max_window: None,
            delivery_window: DEFAULT_DELIVERY_WINDOW.min(horizon.saturating_sub(1).max(1)),
            payload_len: DEFAULT_PAYLOAD_LEN,
            bs_log: LogBase::Ln,
            seed: 1,
        }
    }

    /// The six-node evaluation chain with the middle link set to `eps2`.
    pub fn six_node(eps2: f64) -> Self {
        NetworkConfig::chain(vec![0.1, 0.4, eps2, 0.3, 0.1], 20, 5000)
    }

    pub fn hops(&self) -> usize {
        self.node_count.saturating_sub(1)
    }

    pub fn one_way(&self, hop: usize) -> u64 {
        self.rtt_per_hop[hop] / 2
    }

    /// Σ RTTₙ over the path.
    pub fn global_rtt(&self) -> u64 {
        self.rtt_per_hop.iter().sum()
    }

    /// Slot at which node `n` may first act: Σ_{i<n} RTTᵢ/2.
    pub fn start_slot(&self, node: usize) -> u64 {
        self.rtt_per_hop[..node].iter().map(|r| r / 2).sum()
    }

    pub fn window_cap(&self) -> u64 {
        self.max_window.unwrap_or(2 * self.global_rtt())
    }

    pub fn lambda(&self) -> f64 {
        match self.arrival_rate {
            ArrivalRate::Fixed(x) => x,
            ArrivalRate::Auto => {
                let worst = self.erasure_rates.iter().copied().fold(0.0, f64::max);
                (1.0 - worst - 0.1).clamp(0.0, 1.0)
            }
        }
    }

    /// Every violated invariant, or `Ok` when the config is runnable.
    pub fn validate(&self) -> Result<(), Vec<ConfigError>> {
        let mut errs = Vec::new();
        if self.node_count < 2 {
            errs.push(ConfigError::TooFewNodes);
        }
        let hops = self.hops();
        if self.erasure_rates.len() != hops {
            errs.push(ConfigError::ErasureCount {
                expected: hops,
                got: self.erasure_rates.len(),
            });
        }
        for (hop, &e) in self.erasure_rates.iter().enumerate() {
            if !(0.0..=1.0).contains(&e) {
                errs.push(ConfigError::ErasureRange { hop, value: e });
            }
        }
        if self.rtt_per_hop.len() != hops {
            errs.push(ConfigError::RttCount {
                expected: hops,
                got: self.rtt_per_hop.len(),
            });
        }
        for (hop, &r) in self.rtt_per_hop.iter().enumerate() {
            if r == 0 {
                errs.push(ConfigError::ZeroRtt { hop });
            } else if r % 2 == 1 {
                errs.push(ConfigError::OddRtt { hop, value: r });
            }
        }
        if self.horizon == 0 {
            errs.push(ConfigError::ZeroHorizon);
        }
        if let ArrivalRate::Fixed(x) = self.arrival_rate {
            if !(0.0..=1.0).contains(&x) {
                errs.push(ConfigError::ArrivalRange(x));
            }
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            errs.push(ConfigError::Alpha(self.alpha));
        }
        if !self.threshold.is_finite() {
            errs.push(ConfigError::Threshold(self.threshold));
        }
        if self.max_window == Some(0) {
            errs.push(ConfigError::ZeroWindow);
        }
        if self.delivery_window == 0 || self.delivery_window >= self.horizon {
            errs.push(ConfigError::DeliveryWindow {
                window: self.delivery_window,
                horizon: self.horizon,
            });
        }
        if self.payload_len == 0 {
            errs.push(ConfigError::ZeroPayload);
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Set a named field from a sweep value.
    ///
    /// Recognised names: `eps<i>`, `rtt` (all hops), `rtt<i>`, `alpha`,
    /// `threshold`, `max_window`, `arrival_rate`, `horizon`,
    /// `delivery_window`.
    pub fn apply_parameter(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        let hop_index = |prefix: &str| -> Option<usize> {
            name.strip_prefix(prefix)
                .filter(|rest| !rest.is_empty())
                .and_then(|rest| rest.parse::<usize>().ok())
        };
        match name {
            "alpha" => self.alpha = value,
            "threshold" => self.threshold = value,
            "max_window" => self.max_window = Some(value as u64),
            "arrival_rate" => self.arrival_rate = ArrivalRate::Fixed(value),
            "horizon" => self.horizon = value as u64,
            "delivery_window" => self.delivery_window = value as u64,
            "rtt" => self.rtt_per_hop.iter_mut().for_each(|r| *r = value as u64),
            _ => {
                if let Some(i) = hop_index("eps").filter(|&i| i < self.erasure_rates.len()) {
                    self.erasure_rates[i] = value;
                } else if let Some(i) = hop_index("rtt").filter(|&i| i < self.rtt_per_hop.len()) {
                    self.rtt_per_hop[i] = value as u64;
                } else {
                    return Err(ConfigError::UnknownParameter(name.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let (_, net) = split_experiment_keys(table);
        network_from_table(net)
    }
}

/// A whole sweep: base network, swept field, protocols and seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub network: NetworkConfig,
    pub sweep_parameter: Option<String>,
    pub sweep_values: Vec<f64>,
    pub protocols: Vec<Protocol>,
    pub seeds: u64,
    pub output_dir: Option<PathBuf>,
    pub emit_traces: bool,
    pub verification_mode: bool,
}

const EXPERIMENT_KEYS: [&str; 7] = [
    "sweep_parameter",
    "sweep_values",
    "protocols",
    "seeds",
    "output_dir",
    "emit_traces",
    "verification_mode",
];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentKeys {
    sweep_parameter: Option<String>,
    #[serde(default)]
    sweep_values: Vec<f64>,
    #[serde(default)]
    protocols: Vec<String>,
    #[serde(default = "one")]
    seeds: u64,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    emit_traces: bool,
    #[serde(default)]
    verification_mode: bool,
}

fn one() -> u64 {
    1
}

fn split_experiment_keys(mut table: toml::Table) -> (toml::Table, toml::Table) {
    let mut exp = toml::Table::new();
    for key in EXPERIMENT_KEYS {
        if let Some(v) = table.remove(key) {
            exp.insert(key.to_string(), v);
        }
    }
    (exp, table)
}

fn network_from_table(table: toml::Table) -> Result<NetworkConfig, ConfigError> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let (exp, net) = split_experiment_keys(table);
        let network = network_from_table(net)?;
        let keys: ExperimentKeys = toml::Value::Table(exp)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let protocols = if keys.protocols.is_empty() {
            Protocol::ALL.to_vec()
        } else {
            keys.protocols
                .iter()
                .map(|p| p.parse::<Protocol>().map_err(ConfigError::Parse))
                .collect::<Result<Vec<_>, _>>()?
        };
        if let Some(param) = &keys.sweep_parameter {
            network.clone().apply_parameter(param, 0.0)?;
        }
        Ok(ExperimentSpec {
            network,
            sweep_parameter: keys.sweep_parameter,
            sweep_values: keys.sweep_values,
            protocols,
            seeds: keys.seeds,
            output_dir: keys.output_dir,
            emit_traces: keys.emit_traces,
            verification_mode: keys.verification_mode,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

impl fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} eps={:?} rtt={:?} T={} lambda={:.3} alpha={} th={} w={} seed={}",
            self.node_count,
            self.erasure_rates,
            self.rtt_per_hop,
            self.horizon,
            self.lambda(),
            self.alpha,
            self.threshold,
            self.window_cap(),
            self.seed
        )
    }
}
