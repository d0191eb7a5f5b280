//! Fast DoF decoding against GF(2^8) elimination on random short chains.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use bsnc::engine::run_verified;
use bsnc::{NetworkConfig, Protocol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Options {
    pub nodes: usize,
    pub slots: u64,
    pub instances: u64,
    pub seed: u64,
    pub protocols: Vec<Protocol>,
}

#[derive(Debug, Default)]
pub struct Summary {
    pub runs: u64,
    pub opportunities: u64,
    pub disagreements: u64,
    pub episodes: usize,
    pub unattributed: usize,
    pub payload_mismatches: u64,
}

impl Summary {
    pub fn rate(&self) -> f64 {
        self.disagreements as f64 / self.opportunities.max(1) as f64
    }

    pub fn passed(&self) -> bool {
        self.rate() <= 1e-2 && self.unattributed == 0 && self.payload_mismatches == 0
    }
}

/// Erasure rates in `[0.05, 0.45)` per hop, hop RTT even in `[8, 24]`.
/// Instance `k` runs with simulation seed `100 + k`.
pub fn run(opts: &Options, csv_path: &Path) -> Result<Summary> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut file = fs::File::create(csv_path)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    writeln!(
        file,
        "instance,protocol,eps,rtt,opportunities,disagreements,episodes,unattributed,rank_events"
    )?;
    let mut s = Summary::default();
    for k in 0..opts.instances {
        let eps: Vec<f64> = (1..opts.nodes)
            .map(|_| rng.random_range(0.05..0.45))
            .collect();
        let rtt = 2 * rng.random_range(4..13u64);
        for &p in &opts.protocols {
            let mut cfg = NetworkConfig::chain(eps.clone(), rtt, opts.slots);
            cfg.delivery_window = (opts.slots / 5).max(1);
            cfg.seed = 100 + k;
            let ledger = run_verified(&cfg, p)?;
            let v = ledger.verification.context("verification report missing")?;
            let orphans = v.unexplained_episodes(2 * cfg.global_rtt());
            let eps_text: Vec<String> = eps.iter().map(|e| format!("{e:.4}")).collect();
            writeln!(
                file,
                "{k},{p},{},{rtt},{},{},{},{},{}",
                eps_text.join(";"),
                v.opportunities,
                v.disagreements,
                v.episode_starts.len(),
                orphans.len(),
                v.rank_event_slots().len()
            )?;
            s.runs += 1;
            s.opportunities += v.opportunities;
            s.disagreements += v.disagreements;
            s.episodes += v.episode_starts.len();
            s.unattributed += orphans.len();
            s.payload_mismatches += v.payload_mismatches;
        }
    }
    Ok(s)
}
