//! Run configuration: search target, branching bounds, floors, thresholds
//! and effort limits, with desk- and paper-scale presets and a stable digest
//! for checkpoint/replay validation.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use crate::factordb::EffortBudget;
use crate::nonfermat::CongruenceSearchConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    /// exactly-k distinct prime factors hypothesis under refutation
    pub k: u32,
    /// component bound for primes below 1000
    pub b1: BigUint,
    /// component bound for primes of at least 1000
    pub b2: BigUint,
    /// assume 3 does not divide N
    pub no_three: bool,
    /// avoid prior computational results: positional floors zeroed,
    /// P-interval contradictions off, first prime from the empty-state
    /// interval instead of the small-factor bound
    pub bootstrap: bool,
    /// largest u explored in the upper-bound minimization
    pub max_u: u32,
    /// positional floors on the largest primes (strongest first)
    pub floors: [BigUint; 3],
    /// congruence-search certification threshold
    pub threshold: BigUint,
    pub q_max: u64,
    pub effort: EffortBudget,
    /// experimental: count minimal-exponent contributions of unresolved
    /// components into the forcing baseline (off = literal reading)
    pub include_forced_minimums: bool,
    /// fail a branch closed instead of enumerating a wider interval
    pub max_interval_candidates: u64,
    /// write a checkpoint every this many nodes (0 = never)
    pub checkpoint_every: u64,
    /// stop after this many nodes, writing a checkpoint (None = run out)
    pub max_nodes: Option<u64>,
    /// parallel subtree workers
    pub jobs: u32,
}

fn pow10(e: u32) -> BigUint {
    BigUint::from(10u32).pow(e)
}

impl RunConfig {
    /// Desk-scale preset: finishes k ≤ 4 in minutes on one core.
    pub fn desk(k: u32) -> Self {
        RunConfig {
            k,
            b1: pow10(20),
            b2: pow10(12),
            no_three: false,
            bootstrap: false,
            max_u: 3,
            floors: [pow10(7), pow10(4), pow10(2)],
            threshold: pow10(12),
            q_max: 1000,
            effort: EffortBudget::default(),
            include_forced_minimums: false,
            max_interval_candidates: 1_000_000,
            checkpoint_every: 0,
            max_nodes: None,
            jobs: 1,
        }
    }

    /// Paper-scale preset (stretch configuration, not a desk target). The
    /// larger bounds surface σ(p^a) values whose smallest prime factors run
    /// to 10^15 and beyond, so the cycle-finding budget rises with them.
    pub fn paper(k: u32) -> Self {
        let mut cfg = RunConfig::desk(k);
        cfg.b1 = pow10(50);
        cfg.b2 = pow10(30);
        cfg.threshold = pow10(50);
        cfg.effort.rho_iterations = 400_000_000;
        cfg
    }

    pub fn search_config(&self) -> CongruenceSearchConfig {
        CongruenceSearchConfig {
            threshold: self.threshold.clone(),
            q_max: self.q_max,
        }
    }

    /// Per-prime component bound.
    pub fn component_bound(&self, p: &BigUint) -> &BigUint {
        if *p < BigUint::from(1000u32) {
            &self.b1
        } else {
            &self.b2
        }
    }

    /// Positional floors as used by this run (zeroed under bootstrap).
    pub fn effective_floors(&self) -> Vec<BigUint> {
        if self.bootstrap {
            Vec::new()
        } else {
            self.floors.to_vec()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let nine = BigUint::from(9u32);
        if self.b1 < nine || self.b2 < nine {
            return Err(Error::Config("B1 and B2 must fit at least one component".into()));
        }
        if self.max_u > 3 {
            return Err(Error::Config("max-u must be between 0 and 3".into()));
        }
        if self.threshold < BigUint::from(1_000_000u32) {
            return Err(Error::Config("threshold must be at least 10^6".into()));
        }
        if self.effort.trial_limit == 0 || self.effort.rho_iterations == 0 {
            return Err(Error::Config("effort limits must be positive".into()));
        }
        if self.jobs < 1 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical one-line rendering of every search-relevant field; the
    /// digest and the log trailer both derive from it.
    pub fn canonical(&self) -> String {
        format!(
            "k={} B1={} B2={} no_three={} bootstrap={} max_u={} floors={},{},{} threshold={} q_max={} trial={} rho={} forced_min={} cand_cap={}",
            self.k,
            self.b1,
            self.b2,
            self.no_three as u8,
            self.bootstrap as u8,
            self.max_u,
            self.floors[0],
            self.floors[1],
            self.floors[2],
            self.threshold,
            self.q_max,
            self.effort.trial_limit,
            self.effort.rho_iterations,
            self.include_forced_minimums as u8,
            self.max_interval_candidates,
        )
    }

    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let out = hasher.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Rebuild a config from its canonical line (unlisted fields default).
    pub fn parse_canonical(line: &str) -> Option<RunConfig> {
        let mut cfg = RunConfig::desk(1);
        for token in line.split_whitespace() {
            let (key, value) = token.split_once('=')?;
            match key {
                "k" => cfg.k = value.parse().ok()?,
                "B1" => cfg.b1 = value.parse().ok()?,
                "B2" => cfg.b2 = value.parse().ok()?,
                "no_three" => cfg.no_three = value == "1",
                "bootstrap" => cfg.bootstrap = value == "1",
                "max_u" => cfg.max_u = value.parse().ok()?,
                "floors" => {
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() != 3 {
                        return None;
                    }
                    for (i, p) in parts.iter().enumerate() {
                        cfg.floors[i] = p.parse().ok()?;
                    }
                }
                "threshold" => cfg.threshold = value.parse().ok()?,
                "q_max" => cfg.q_max = value.parse().ok()?,
                "trial" => cfg.effort.trial_limit = value.parse().ok()?,
                "rho" => cfg.effort.rho_iterations = value.parse().ok()?,
                "forced_min" => cfg.include_forced_minimums = value == "1",
                "cand_cap" => cfg.max_interval_candidates = value.parse().ok()?,
                _ => return None,
            }
        }
        Some(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let mut cfg = RunConfig::desk(5);
        cfg.b1 = BigUint::from(50u32);
        cfg.b2 = BigUint::from(50u32);
        cfg.max_u = 0;
        let parsed = RunConfig::parse_canonical(&cfg.canonical()).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.digest(), cfg.digest());
    }

    #[test]
    fn digest_is_stable() {
        let cfg = RunConfig::desk(5);
        assert_eq!(cfg.digest(), RunConfig::desk(5).digest());
        let mut other = RunConfig::desk(5);
        other.max_u = 0;
        assert_ne!(cfg.digest(), other.digest());
    }

    #[test]
    fn validation_rejects_bad_configs() {
        assert!(RunConfig::desk(0).validate().is_err());
        let mut cfg = RunConfig::desk(3);
        cfg.b1 = BigUint::from(8u32);
        assert!(cfg.validate().is_err());
        cfg.b1 = BigUint::from(50u32);
        assert!(cfg.validate().is_ok());
        let mut cfg = RunConfig::desk(3);
        cfg.max_u = 5;
        assert!(cfg.validate().is_err());
        assert!(RunConfig::desk(3).validate().is_ok());
        assert!(RunConfig::paper(8).validate().is_ok());
    }

    #[test]
    fn bootstrap_disables_floors() {
        let mut cfg = RunConfig::desk(4);
        cfg.bootstrap = true;
        assert!(cfg.effective_floors().is_empty());
        assert_eq!(RunConfig::desk(4).effective_floors().len(), 3);
    }
}
