//! Depth-first exhaustion of the factor-chain tree: branching, logging,
//! checkpointing, and the run verdict.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use num_bigint::BigUint;

use crate::arith::{sieve, ExtExp};
use crate::chain::analysis::{analyze, Analysis, Contradiction};
use crate::chain::checkpoint::Checkpoint;
use crate::chain::logfmt;
use crate::chain::state::{Component, ComponentStatus, SearchState};
use crate::config::RunConfig;
use crate::factordb::{FactorDb, Factorization};
use crate::nonfermat::CertStore;
use crate::Result;

/// One branching decision: assign prime^exp (or the infinite marker).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub prime: BigUint,
    pub exp: ExtExp,
    /// the prime enters as "the smallest unknown" (interval or root pick)
    pub via_interval: bool,
}

/// Why a branch could not be closed or extended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StuckReason {
    /// every Δ_u was at least 2: no upper bound on the next prime
    NoUpperBound,
    /// interval wider than the candidate cap
    IntervalTooWide,
    /// all primes known, neither abundant nor provably deficient
    ExponentBoundTooSmall,
    /// σ(p^a) resisted the factoring budget
    FactoringGaveOut,
}

impl std::fmt::Display for StuckReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StuckReason::NoUpperBound => write!(f, "no interval upper bound; increase B"),
            StuckReason::IntervalTooWide => write!(f, "interval exceeds candidate cap; increase B"),
            StuckReason::ExponentBoundTooSmall => {
                write!(f, "all primes known without verdict; increase B")
            }
            StuckReason::FactoringGaveOut => write!(f, "factorization incomplete; raise effort"),
        }
    }
}

/// Verdict of a full run.
#[derive(Debug, Clone)]
pub enum RunOutcome {
    /// every leaf closed with a catalogued contradiction
    TheoremHolds { nodes: u64, leaves: u64 },
    /// an odd perfect number witness was constructed (never expected)
    OpnFound(BigUint),
    /// some branches could not be closed; the claim fails closed
    Unresolved { nodes: u64, details: Vec<String> },
    /// stopped at the node budget; checkpoint carries the frontier
    Interrupted { checkpoint: Checkpoint },
}

/// Borrowed run context.
pub struct Session<'a> {
    pub cfg: &'a RunConfig,
    pub db: &'a FactorDb,
    pub certs: &'a CertStore,
}

/// Admissible exponent assignments for p, ascending, infinite last.
pub fn exponent_moves(
    state: &SearchState,
    cfg: &RunConfig,
    p: &BigUint,
    via_interval: bool,
) -> Vec<Move> {
    let bound = cfg.component_bound(p);
    let mut moves = Vec::new();
    let mut power = p.clone();
    let mut a = 1u64;
    while &power <= bound {
        if state.exponent_admissible(p, a) {
            moves.push(Move {
                prime: p.clone(),
                exp: ExtExp::Finite(a),
                via_interval,
            });
        }
        power *= p;
        a += 1;
    }
    moves.push(Move {
        prime: p.clone(),
        exp: ExtExp::Inf,
        via_interval,
    });
    moves
}

/// First-prime candidates: the small-factor bound 3p < 2k+6, or the
/// empty-state interval p ≤ k+1 under bootstrap.
fn root_primes(cfg: &RunConfig) -> Vec<u64> {
    let limit = if cfg.bootstrap {
        u64::from(cfg.k) + 1
    } else {
        // strict 3p < 2k + 6
        (2 * u64::from(cfg.k) + 5) / 3
    };
    sieve(limit)
        .into_iter()
        .filter(|&p| p >= 3 && !(cfg.no_three && p == 3))
        .collect()
}

/// Branching moves of a state, or the reason there are none.
pub fn children(
    state: &SearchState,
    analysis: &Analysis,
    cfg: &RunConfig,
) -> std::result::Result<Vec<Move>, StuckReason> {
    if state.known_count() == 0 {
        let mut moves = Vec::new();
        for p in root_primes(cfg) {
            moves.extend(exponent_moves(state, cfg, &BigUint::from(p), true));
        }
        return Ok(moves);
    }
    if let Some(p) = state.smallest_off() {
        return Ok(exponent_moves(state, cfg, &p.clone(), false));
    }
    if state.unknown_count() >= 1 {
        if analysis.candidates_overflowed {
            return Err(StuckReason::IntervalTooWide);
        }
        match &analysis.candidates {
            Some(cands) => {
                let mut moves = Vec::new();
                for c in cands {
                    moves.extend(exponent_moves(state, cfg, c, true));
                }
                Ok(moves)
            }
            None => Err(StuckReason::NoUpperBound),
        }
    } else {
        Err(StuckReason::ExponentBoundTooSmall)
    }
}

/// Apply one move: set the component, ingest σ(p^a) factors into the ledger
/// and the off set (factors of 2 are logged in the line but discarded).
pub fn apply_move(
    state: &SearchState,
    mv: &Move,
    session: &Session,
) -> (SearchState, Option<Factorization>, bool) {
    let mut st = state.clone();
    if mv.via_interval {
        debug_assert!(!st.is_known(&mv.prime));
        st.components.push(Component {
            prime: mv.prime.clone(),
            status: ComponentStatus::Off,
        });
        st.interval_floor = Some(mv.prime.clone());
    }
    let idx = st
        .components
        .iter()
        .position(|c| c.prime == mv.prime)
        .expect("move must target a known prime");
    match mv.exp {
        ExtExp::Finite(a) => {
            let f = session
                .db
                .factor_sigma_pp(&mv.prime, a, &session.cfg.effort);
            let roadblock = !f.is_complete();
            st.components[idx].status = ComponentStatus::Known {
                exp: a,
                special: a % 2 == 1,
            };
            if !roadblock {
                let two = BigUint::from(2u32);
                for fac in &f.factors {
                    if fac.prime == two {
                        continue;
                    }
                    *st.ledger.entry(fac.prime.clone()).or_insert(0) += u64::from(fac.exp);
                    if !st.is_known(&fac.prime) {
                        st.components.push(Component {
                            prime: fac.prime.clone(),
                            status: ComponentStatus::Off,
                        });
                    }
                }
            }
            st.check_invariants();
            (st, Some(f), roadblock)
        }
        ExtExp::Inf => {
            st.components[idx].status = ComponentStatus::Infinite;
            st.check_invariants();
            (st, None, false)
        }
    }
}

struct Driver<'a> {
    session: Session<'a>,
    nodes: AtomicU64,
    leaves: AtomicU64,
    stop: AtomicBool,
    opn: Mutex<Option<BigUint>>,
    unresolved: Mutex<Vec<String>>,
    interrupted_at: Mutex<Option<Vec<u32>>>,
    checkpoint_file: Option<std::path::PathBuf>,
    error: Mutex<Option<crate::Error>>,
}

impl<'a> Driver<'a> {
    fn record_unresolved(&self, path: &[u32], mv: &Move, reason: &StuckReason) {
        let path_s = path
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.unresolved
            .lock()
            .unwrap()
            .push(format!("path={path_s} at {}^{}: {reason}", mv.prime, mv.exp));
    }

    fn maybe_checkpoint(&self, path: &[u32], force: bool) {
        let every = self.session.cfg.checkpoint_every;
        let due = force || (every > 0 && self.nodes.load(Ordering::Relaxed).is_multiple_of(every));
        if !due {
            return;
        }
        if let Some(file) = &self.checkpoint_file {
            let cp = Checkpoint {
                digest: self.session.cfg.digest(),
                path: path.to_vec(),
            };
            let _ = cp.save(file);
        }
    }

    /// Visit the node reached by `mv` from `parent`. Appends this node's
    /// line (and its subtree's) to `out`.
    fn visit(
        &self,
        parent: &SearchState,
        mv: &Move,
        depth: usize,
        path: &[u32],
        out: &mut String,
        resume: Option<&[u32]>,
    ) {
        if self.stop.load(Ordering::Relaxed) {
            return;
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if let Some(max) = self.session.cfg.max_nodes {
            if n > max {
                let mut slot = self.interrupted_at.lock().unwrap();
                if slot.is_none() {
                    *slot = Some(path.to_vec());
                    self.maybe_checkpoint(path, true);
                }
                self.stop.store(true, Ordering::Relaxed);
                return;
            }
        }
        self.maybe_checkpoint(path, false);

        let (state, factors, roadblock) = apply_move(parent, mv, &self.session);
        let analysis = match analyze(&state, self.session.cfg, self.session.db, self.session.certs)
        {
            Ok(a) => a,
            Err(e) => {
                *self.error.lock().unwrap() = Some(e);
                self.stop.store(true, Ordering::Relaxed);
                return;
            }
        };

        let mut code = if roadblock {
            Some(Contradiction::Roadblock)
        } else {
            analysis.code
        };
        let mut kids = Vec::new();
        if code.is_none() && analysis.perfect_witness.is_none() {
            match children(&state, &analysis, self.session.cfg) {
                Ok(k) => kids = k,
                Err(reason) => {
                    code = Some(Contradiction::Roadblock);
                    self.record_unresolved(path, mv, &reason);
                }
            }
        }
        if roadblock {
            self.record_unresolved(path, mv, &StuckReason::FactoringGaveOut);
        }

        let line = match mv.exp {
            ExtExp::Finite(a) => logfmt::render_finite_line(
                depth,
                &mv.prime,
                a,
                factors.as_ref().expect("finite moves factor"),
                code,
            ),
            ExtExp::Inf => {
                let interval = analysis.lower.as_ref().map(|lo| {
                    logfmt::render_interval(
                        lo,
                        analysis.upper.as_ref().map(|u| &u.value),
                        analysis.k1 + 1,
                    )
                });
                logfmt::render_inf_line(depth, &mv.prime, interval.as_ref(), code)
            }
        };
        out.push_str(&line);
        out.push('\n');

        if let Some(w) = &analysis.perfect_witness {
            *self.opn.lock().unwrap() = Some(w.clone());
            self.stop.store(true, Ordering::Relaxed);
            self.leaves.fetch_add(1, Ordering::Relaxed);
            return;
        }
        if code.is_some() {
            self.leaves.fetch_add(1, Ordering::Relaxed);
            return;
        }

        self.visit_children(&state, &kids, depth + 1, path, out, resume);
    }

    fn visit_children(
        &self,
        state: &SearchState,
        kids: &[Move],
        child_depth: usize,
        path: &[u32],
        out: &mut String,
        resume: Option<&[u32]>,
    ) {
        let skip_to = resume.and_then(|r| r.first().copied()).unwrap_or(0);
        let tail = resume.map(|r| &r[1.min(r.len())..]);
        let parallel = self.session.cfg.jobs > 1 && child_depth <= 2 && resume.is_none();
        if parallel {
            let buffers: Vec<String> = std::thread::scope(|scope| {
                let mut handles = Vec::new();
                let workers = self.session.cfg.jobs as usize;
                let chunks: Vec<Vec<(usize, &Move)>> = {
                    let mut cs: Vec<Vec<(usize, &Move)>> = vec![Vec::new(); workers];
                    for (i, mv) in kids.iter().enumerate() {
                        cs[i % workers].push((i, mv));
                    }
                    cs
                };
                for chunk in chunks {
                    handles.push(scope.spawn(move || {
                        let mut parts = Vec::new();
                        for (i, mv) in chunk {
                            let mut buf = String::new();
                            let mut child_path = path.to_vec();
                            child_path.push(i as u32);
                            self.visit(state, mv, child_depth, &child_path, &mut buf, None);
                            parts.push((i, buf));
                        }
                        parts
                    }));
                }
                let mut all: Vec<(usize, String)> = Vec::new();
                for h in handles {
                    all.extend(h.join().expect("worker panicked"));
                }
                all.sort_by_key(|(i, _)| *i);
                all.into_iter().map(|(_, s)| s).collect()
            });
            for b in buffers {
                out.push_str(&b);
            }
        } else {
            for (i, mv) in kids.iter().enumerate() {
                if (i as u32) < skip_to {
                    continue;
                }
                let child_resume = if resume.is_some() && i as u32 == skip_to {
                    tail.filter(|t| !t.is_empty())
                } else {
                    None
                };
                let mut child_path = path.to_vec();
                child_path.push(i as u32);
                self.visit(state, mv, child_depth, &child_path, out, child_resume);
                if self.stop.load(Ordering::Relaxed) {
                    return;
                }
            }
        }
    }
}

/// Run the search to exhaustion (or the node budget), writing branch-log
/// lines plus a trailer to `sink`.
pub fn run(
    cfg: &RunConfig,
    db: &FactorDb,
    certs: &CertStore,
    sink: &mut dyn std::io::Write,
    resume: Option<&Checkpoint>,
    checkpoint_file: Option<&std::path::Path>,
) -> Result<RunOutcome> {
    cfg.validate()?;
    if let Some(cp) = resume {
        let expected = cfg.digest();
        if cp.digest != expected {
            return Err(crate::Error::CheckpointMismatch {
                found: cp.digest.clone(),
                expected,
            });
        }
    }
    // checkpoints encode a pre-order frontier; parallel visit order is not
    // pre-order, so node budgets and checkpoint writes require jobs = 1
    let mut cfg_local;
    let mut cfg = cfg;
    let mut checkpoint_file = checkpoint_file;
    if cfg.jobs > 1 && (checkpoint_file.is_some() || cfg.max_nodes.is_some()) {
        eprintln!("warning: checkpointing and node budgets are ignored with --jobs > 1");
        cfg_local = cfg.clone();
        cfg_local.max_nodes = None;
        cfg = &cfg_local;
        checkpoint_file = None;
    }
    let session = Session { cfg, db, certs };
    let driver = Driver {
        session,
        nodes: AtomicU64::new(0),
        leaves: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        opn: Mutex::new(None),
        unresolved: Mutex::new(Vec::new()),
        interrupted_at: Mutex::new(None),
        checkpoint_file: checkpoint_file.map(|p| p.to_path_buf()),
        error: Mutex::new(None),
    };

    let root = SearchState::root(cfg.k);
    let root_analysis = analyze(&root, cfg, db, certs)?;
    // no admissible first prime means vacuous exhaustion
    let kids = children(&root, &root_analysis, cfg).unwrap_or_default();
    let mut out = String::new();
    driver.visit_children(
        &root,
        &kids,
        0,
        &[],
        &mut out,
        resume.map(|cp| cp.path.as_slice()),
    );
    if let Some(e) = driver.error.lock().unwrap().take() {
        return Err(e);
    }

    sink.write_all(out.as_bytes())?;
    let nodes = driver.nodes.load(Ordering::Relaxed);
    let leaves = driver.leaves.load(Ordering::Relaxed);

    let outcome = if let Some(w) = driver.opn.lock().unwrap().clone() {
        RunOutcome::OpnFound(w)
    } else if let Some(path) = driver.interrupted_at.lock().unwrap().clone() {
        RunOutcome::Interrupted {
            checkpoint: Checkpoint {
                digest: cfg.digest(),
                path,
            },
        }
    } else {
        let unresolved = driver.unresolved.lock().unwrap().clone();
        if unresolved.is_empty() {
            RunOutcome::TheoremHolds { nodes, leaves }
        } else {
            RunOutcome::Unresolved {
                nodes,
                details: unresolved,
            }
        }
    };

    writeln!(sink, "# config {}", cfg.canonical())?;
    match &outcome {
        RunOutcome::TheoremHolds { nodes, leaves } => {
            writeln!(sink, "# result THEOREM_HOLDS nodes={nodes} leaves={leaves}")?
        }
        RunOutcome::OpnFound(w) => writeln!(sink, "# result OPN_FOUND witness={w}")?,
        RunOutcome::Unresolved { nodes, details } => {
            writeln!(sink, "# result UNRESOLVED nodes={nodes} open={}", details.len())?
        }
        RunOutcome::Interrupted { checkpoint } => writeln!(
            sink,
            "# result INTERRUPTED path={}",
            checkpoint
                .path
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        )?,
    }
    let probables = db.probable_log();
    if !probables.is_empty() {
        let rendered: Vec<String> = probables.iter().map(|p| p.to_string()).collect();
        writeln!(sink, "# probable-primes {}", rendered.join(" "))?;
    }
    Ok(outcome)
}
