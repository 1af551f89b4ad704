//! Bounded probe of the k = 8 desk tree: how far does the exhaustion get in
//! 150k nodes, and which contradictions carry it?

use opn_core::chain::{self, RunOutcome};
use opn_core::config::RunConfig;
use opn_core::factordb::FactorDb;
use opn_core::nonfermat::CertStore;
use std::time::Instant;

fn main() {
    let mut cfg = RunConfig::desk(8);
    cfg.max_nodes = Some(150_000);
    let db = FactorDb::in_memory();
    let certs = CertStore::in_memory();
    let t0 = Instant::now();
    let mut out = Vec::new();
    let outcome = chain::run(&cfg, &db, &certs, &mut out, None, None).unwrap();
    let log = String::from_utf8(out).unwrap();
    let mut codes: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();
    for line in log.lines().filter(|l| !l.starts_with('#')) {
        if let Some(tok) = line.rsplit(' ').next() {
            if tok.parse::<chain::Contradiction>().is_ok() {
                *codes.entry(tok.to_string()).or_default() += 1;
            }
        }
    }
    let verdict = match outcome {
        RunOutcome::Interrupted { .. } => "interrupted at the node budget".to_string(),
        RunOutcome::TheoremHolds { nodes, leaves } => {
            format!("THEOREM_HOLDS nodes={nodes} leaves={leaves}")
        }
        RunOutcome::Unresolved { nodes, details } => {
            format!("UNRESOLVED nodes={nodes} open={}", details.len())
        }
        RunOutcome::OpnFound(w) => format!("witness {w}"),
    };
    eprintln!("{verdict} in {:?}; codes: {codes:?}", t0.elapsed());
}
