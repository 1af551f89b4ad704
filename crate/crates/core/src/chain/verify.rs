//! Audit mode: replay a branch log line by line, re-deriving every σ
//! factorization, interval, and contradiction claim with the same machinery
//! that produced it, and rejecting any deviation.


use crate::arith::ExtExp;
use crate::chain::analysis::{analyze, Contradiction};
use crate::chain::logfmt::{self, parse_line};
use crate::chain::search::{apply_move, children, Move, Session};
use crate::chain::state::SearchState;
use crate::config::RunConfig;
use crate::factordb::FactorDb;
use crate::nonfermat::CertStore;
use crate::{Error, Result};

struct Frame {
    state: SearchState,
    moves: Vec<Move>,
    next: usize,
}

fn mismatch(line: usize, reason: impl Into<String>) -> Error {
    Error::LogMismatch {
        line,
        reason: reason.into(),
    }
}

/// Replay the log under `cfg`; Ok means every line re-derived exactly and
/// the tree is complete.
pub fn verify_log(
    text: &str,
    cfg: &RunConfig,
    db: &FactorDb,
    certs: &CertStore,
) -> Result<()> {
    cfg.validate()?;
    let session = Session { cfg, db, certs };
    let root = SearchState::root(cfg.k);
    let root_analysis = analyze(&root, cfg, db, certs)?;
    let root_moves = children(&root, &root_analysis, cfg).unwrap_or_default();
    let mut stack = vec![Frame {
        state: root,
        moves: root_moves,
        next: 0,
    }];
    let mut saw_any = false;
    let mut opn_stop = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(rest) = raw.strip_prefix("# ") {
            if let Some(canon) = rest.strip_prefix("config ") {
                match RunConfig::parse_canonical(canon.trim()) {
                    Some(logged) if logged.canonical() == cfg.canonical() => {}
                    Some(_) => {
                        return Err(mismatch(lineno, "log config differs from verify config"))
                    }
                    None => return Err(mismatch(lineno, "unparseable config trailer")),
                }
            }
            continue;
        }
        if opn_stop {
            return Err(mismatch(lineno, "lines after a perfect-number witness"));
        }
        let parsed =
            parse_line(raw).ok_or_else(|| mismatch(lineno, "line does not match the grammar"))?;
        let depth = parsed.depth;
        if depth + 1 > stack.len() {
            return Err(mismatch(lineno, "indentation skips a level"));
        }
        // climbing back up: every abandoned frame must have exhausted its moves
        while stack.len() > depth + 1 {
            let frame = stack.pop().unwrap();
            if frame.next != frame.moves.len() {
                return Err(mismatch(
                    lineno,
                    format!(
                        "missing sibling branches: expected {} more under the previous node",
                        frame.moves.len() - frame.next
                    ),
                ));
            }
        }
        let frame = stack.last_mut().unwrap();
        let mv = match frame.moves.get(frame.next) {
            Some(m) => m.clone(),
            None => return Err(mismatch(lineno, "extra branch beyond the expected children")),
        };
        frame.next += 1;
        if mv.prime != parsed.prime || mv.exp != parsed.exp {
            return Err(mismatch(
                lineno,
                format!(
                    "expected branch {}^{}, log has {}^{}",
                    mv.prime, mv.exp, parsed.prime, parsed.exp
                ),
            ));
        }
        let parent_state = frame.state.clone();
        let (state, factors, roadblock) = apply_move(&parent_state, &mv, &session);
        let analysis = analyze(&state, cfg, db, certs)?;
        let mut code = if roadblock {
            Some(Contradiction::Roadblock)
        } else {
            analysis.code
        };
        let mut moves = Vec::new();
        if code.is_none() && analysis.perfect_witness.is_none() {
            match children(&state, &analysis, cfg) {
                Ok(k) => moves = k,
                Err(_) => code = Some(Contradiction::Roadblock),
            }
        }
        let expected = match mv.exp {
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
        if expected != raw {
            return Err(mismatch(
                lineno,
                format!("re-derived `{expected}`, log has `{raw}`"),
            ));
        }
        saw_any = true;
        if analysis.perfect_witness.is_some() {
            opn_stop = true;
            continue;
        }
        if code.is_none() {
            stack.push(Frame {
                state,
                moves,
                next: 0,
            });
        }
    }
    if !saw_any {
        eprintln!("warning: log contains no branch lines; vacuously verified");
        return Ok(());
    }
    if !opn_stop {
        while let Some(frame) = stack.pop() {
            if frame.next != frame.moves.len() {
                return Err(mismatch(
                    text.lines().count(),
                    "log ends before the tree is exhausted",
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::run;

    fn fixture() -> (RunConfig, FactorDb, CertStore, String) {
        let cfg = RunConfig::desk(3);
        let db = FactorDb::in_memory();
        let certs = CertStore::in_memory();
        let mut out = Vec::new();
        run(&cfg, &db, &certs, &mut out, None, None).unwrap();
        (cfg, db, certs, String::from_utf8(out).unwrap())
    }

    #[test]
    fn accepts_genuine_log() {
        let (cfg, db, certs, log) = fixture();
        verify_log(&log, &cfg, &db, &certs).unwrap();
    }

    #[test]
    fn rejects_missing_sibling() {
        let (cfg, db, certs, log) = fixture();
        // drop one interior branch line
        let victim = log
            .lines()
            .position(|l| !l.starts_with('#') && l.starts_with(' '))
            .unwrap();
        let pruned: String = log
            .lines()
            .enumerate()
            .filter(|(i, _)| *i != victim)
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        assert!(verify_log(&pruned, &cfg, &db, &certs).is_err());
    }

    #[test]
    fn rejects_truncation() {
        let (cfg, db, certs, log) = fixture();
        let lines: Vec<&str> = log.lines().filter(|l| !l.starts_with('#')).collect();
        let truncated: String = lines[..lines.len() - 2]
            .iter()
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(verify_log(&truncated, &cfg, &db, &certs).is_err());
    }

    #[test]
    fn rejects_wrong_config() {
        let (_, db, certs, log) = fixture();
        let other = RunConfig::desk(4);
        assert!(verify_log(&log, &other, &db, &certs).is_err());
    }

    #[test]
    fn empty_log_is_vacuously_fine() {
        let (cfg, db, certs, _) = fixture();
        verify_log("", &cfg, &db, &certs).unwrap();
    }
}
