//! Efficiency, rate and delay figures computed from a [`RunLedger`].

use serde::Serialize;

use crate::config::NetworkConfig;
use crate::error::SimError;
use crate::ledger::RunLedger;

/// `d / (T − O₀ − RTT/2)` with the path RTT.
pub fn goodput_from(
    decoded: u64,
    horizon: u64,
    source_idles: u64,
    half_rtt: u64,
) -> Result<f64, SimError> {
    let den = horizon as f64 - source_idles as f64 - half_rtt as f64;
    if den <= 0.0 {
        return Err(SimError::Degenerate(format!(
            "goodput denominator {den} is not positive (T={horizon}, O0={source_idles}, RTT/2={half_rtt})"
        )));
    }
    Ok(decoded as f64 / den)
}

pub fn goodput(ledger: &RunLedger) -> Result<f64, SimError> {
    if ledger.actions.is_empty() {
        return Err(SimError::Degenerate("no source in ledger".into()));
    }
    goodput_from(
        ledger.decoded(),
        ledger.slots(),
        ledger.idle_count(0),
        ledger.config.global_rtt() / 2,
    )
}

/// Decoded count per window of `window` slots, divided by `window`.
/// `delivered[t]` is the cumulative count at the end of slot `t`; a trailing
/// partial window is dropped.
pub fn delivery_rate_series(delivered: &[u64], window: u64) -> Result<Vec<f64>, SimError> {
    let horizon = delivered.len() as u64;
    if window == 0 || window >= horizon {
        return Err(SimError::Degenerate(format!(
            "delivery window {window} must be positive and below the horizon {horizon}"
        )));
    }
    let at = |t: u64| {
        if t == 0 {
            0
        } else {
            delivered[(t - 1) as usize]
        }
    };
    Ok((0..horizon / window)
        .map(|k| (at((k + 1) * window) - at(k * window)) as f64 / window as f64)
        .collect())
}

/// Mean of the windowed delivery-rate series.
pub fn delivery_rate(ledger: &RunLedger) -> Result<f64, SimError> {
    let s = delivery_rate_series(&ledger.delivered, ledger.config.delivery_window)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Channel usage, end to end and per transmitting node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Usage {
    pub total: f64,
    pub per_node: Vec<f64>,
}

/// `Uₙ = 1 − Oₙ / (T − Σ_{i<n} RTTᵢ/2)` and
/// `U = 1 − Σ Oₙ / Σ_{i=0}^{N−2} (T − (N−2−i)·RTTᵢ/2)`.
pub fn usage_from(idles: &[u64], cfg: &NetworkConfig, horizon: u64) -> Usage {
    let hops = cfg.hops();
    let per_node = idles
        .iter()
        .enumerate()
        .map(|(n, &o)| {
            let opp = horizon.saturating_sub(cfg.start_slot(n));
            if opp == 0 {
                1.0
            } else {
                1.0 - o as f64 / opp as f64
            }
        })
        .collect();
    let den: f64 = (0..hops)
        .map(|i| horizon as f64 - ((hops - 1 - i) as u64 * cfg.one_way(i)) as f64)
        .sum();
    let total = if den <= 0.0 {
        1.0
    } else {
        1.0 - idles.iter().sum::<u64>() as f64 / den
    };
    Usage { total, per_node }
}

pub fn channel_usage(ledger: &RunLedger) -> Usage {
    let idles: Vec<u64> = (0..ledger.actions.len())
        .map(|n| ledger.idle_count(n))
        .collect();
    usage_from(&idles, &ledger.config, ledger.slots())
}

/// Mean and max of `T_d − T₁` over decoded packets.
pub fn delays_from(arrivals: &[u64], decode_times: &[u64]) -> Result<(f64, f64), SimError> {
    if decode_times.is_empty() {
        return Err(SimError::Degenerate(
            "no packet decoded: delay undefined".into(),
        ));
    }
    let mut sum = 0.0;
    let mut max = 0u64;
    for (a, d) in arrivals.iter().zip(decode_times) {
        let delay = d - a;
        sum += delay as f64;
        max = max.max(delay);
    }
    Ok((sum / decode_times.len() as f64, max as f64))
}

pub fn delays(ledger: &RunLedger) -> Result<(f64, f64), SimError> {
    delays_from(&ledger.arrivals, &ledger.decode_times)
}

/// Every headline figure for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub usage: f64,
    pub node_usage: Vec<f64>,
    pub goodput: f64,
    pub delivery_rate: f64,
    pub delay_mean: Option<f64>,
    pub delay_max: Option<f64>,
    pub decoded: u64,
    pub undelivered: u64,
}

impl RunMetrics {
    pub fn from_ledger(ledger: &RunLedger) -> Result<Self, SimError> {
        let usage = channel_usage(ledger);
        let (mean, max) = match delays(ledger) {
            Ok((m, x)) => (Some(m), Some(x)),
            Err(_) => (None, None),
        };
        Ok(RunMetrics {
            usage: usage.total,
            node_usage: usage.per_node,
            goodput: goodput(ledger)?,
            delivery_rate: delivery_rate(ledger)?,
            delay_mean: mean,
            delay_max: max,
            decoded: ledger.decoded(),
            undelivered: ledger.undelivered(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goodput_substitution() {
        assert_eq!(goodput_from(100, 200, 20, 50).unwrap(), 100.0 / 130.0);
        assert!(matches!(
            goodput_from(1, 100, 60, 50),
            Err(SimError::Degenerate(_))
        ));
    }

    #[test]
    fn constant_decoding_rate_is_one() {
        let delivered: Vec<u64> = (1..=1000).collect();
        let s = delivery_rate_series(&delivered, 100).unwrap();
        assert_eq!(s, vec![1.0; 10]);
        let none = vec![0u64; 1000];
        assert_eq!(delivery_rate_series(&none, 100).unwrap(), vec![0.0; 10]);
        assert!(delivery_rate_series(&none, 1000).is_err());
    }

    #[test]
    fn usage_denominators() {
        let cfg = NetworkConfig::six_node(0.3);
        let u = usage_from(&[0, 0, 50, 0, 0], &cfg, 5000);
        assert_eq!(u.per_node[2], 1.0 - 50.0 / 4980.0);
        assert_eq!(u.total, 1.0 - 50.0 / 24900.0);
        let all = usage_from(&[0; 5], &cfg, 5000);
        assert_eq!(all.total, 1.0);
        assert!(all.per_node.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn delay_statistics() {
        assert_eq!(delays_from(&[3], &[10]).unwrap(), (7.0, 7.0));
        assert_eq!(
            delays_from(&[0, 1, 2], &[50, 52, 60]).unwrap(),
            (53.0, 58.0)
        );
        assert!(delays_from(&[1, 2], &[]).is_err());
    }
}
