//! Run metrics: change/inconsistency counters, message accounting, and the
//! amortized ratio (max over prefixes of inconsistent rounds per change).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::graph::Round;

/// An exact non-negative ratio, kept as integers so metric files are
/// byte-identical across runs and platforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Self {
        Ratio { num, den: den.max(1) }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn gt(self, other: Ratio) -> bool {
        (self.num as u128) * (other.den as u128) > (other.num as u128) * (self.den as u128)
    }

    /// Compares against an integer bound.
    pub fn le_int(self, bound: u64) -> bool {
        self.num as u128 <= (bound as u128) * (self.den as u128)
    }
}

pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// Counters collected over one run. `ratio_series[i]` is the cumulative
/// (inconsistent rounds, topology changes) pair after round `i+1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub schema_version: u32,
    pub algorithm: String,
    pub scenario: String,
    pub n: usize,
    pub seed: u64,
    pub rounds: Round,
    pub topology_changes: u64,
    pub inconsistent_rounds: u64,
    pub messages: u64,
    pub bits: u64,
    pub max_message_bits: u64,
    pub max_ratio: Ratio,
    pub max_ratio_value: f64,
    pub ratio_series: Vec<(u64, u64)>,
}

impl Metrics {
    pub fn new(algorithm: &str, scenario: &str, n: usize, seed: u64) -> Self {
        Metrics {
            schema_version: METRICS_SCHEMA_VERSION,
            algorithm: algorithm.to_string(),
            scenario: scenario.to_string(),
            n,
            seed,
            rounds: 0,
            topology_changes: 0,
            inconsistent_rounds: 0,
            messages: 0,
            bits: 0,
            max_message_bits: 0,
            max_ratio: Ratio::ZERO,
            max_ratio_value: 0.0,
            ratio_series: Vec::new(),
        }
    }

    pub fn record_round(
        &mut self,
        changes: u64,
        any_inconsistent: bool,
        messages: u64,
        bits: u64,
        max_payload_bits: u64,
    ) {
        self.rounds += 1;
        self.topology_changes += changes;
        if any_inconsistent {
            self.inconsistent_rounds += 1;
        }
        self.messages += messages;
        self.bits += bits;
        self.max_message_bits = self.max_message_bits.max(max_payload_bits);
        let here = Ratio::new(self.inconsistent_rounds, self.topology_changes.max(1));
        if here.gt(self.max_ratio) {
            self.max_ratio = here;
            self.max_ratio_value = here.as_f64();
        }
        self.ratio_series
            .push((self.inconsistent_rounds, self.topology_changes));
    }

    /// Max over prefixes of inconsistent rounds divided by changes; zero
    /// when no changes ever occurred.
    pub fn amortized_ratio(&self) -> Ratio {
        if self.topology_changes == 0 && self.inconsistent_rounds == 0 {
            return Ratio::ZERO;
        }
        self.max_ratio
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// One CSV row per round with cumulative counters.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "round,inconsistent_rounds,topology_changes,ratio")?;
        for (i, (inc, chg)) in self.ratio_series.iter().enumerate() {
            let ratio = *inc as f64 / (*chg).max(1) as f64;
            writeln!(w, "{},{},{},{}", i + 1, inc, chg, ratio)?;
        }
        Ok(())
    }
}
