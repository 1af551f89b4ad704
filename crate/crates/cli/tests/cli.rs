//! End-to-end runs of the `opn` binary: exit codes, log output, cache
//! behavior, recomputation and audit.

use std::path::Path;
use std::process::{Command, Output};

fn opn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opn"))
        .args(args)
        .current_dir(dir)
        .env_remove("OPN_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn theorem_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = opn(&["run", "--k", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("# result THEOREM_HOLDS"));
}

#[test]
fn unresolved_run_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = opn(
        &["run", "--k", "5", "--B1", "50", "--B2", "50", "--max-u", "0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    let expected = "\
3^2 => 13^1
   13^1 => 2^1 7^1
      7^2 => 3^1 19^1
         19^oo : 21 < p_5 < 23 N
      7^oo : 9 < p_4 < 21
         11^oo : 374 < p_5 < 540";
    let prefix: Vec<&str> = text.lines().take(6).collect();
    assert_eq!(prefix.join("\n"), expected);
    assert!(text.contains("# result UNRESOLVED"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run"],                                    // missing --k
        vec!["run", "--k", "3", "--preset", "mainframe"],
        vec!["run", "--k", "0"],
        vec!["run", "--k", "3", "--max-u", "9"],
        vec!["run", "--k", "3", "--floors", "1,2"],
        vec!["verify", "/nonexistent/log.txt"],
    ] {
        let out = opn(&args, dir.path());
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
    }
}

#[test]
fn verify_round_trip_and_tamper_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("run.log");
    let out = opn(
        &["run", "--k", "3", "--log", log.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let out = opn(&["verify", log.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&log).unwrap();
    let line = text.lines().nth(1).unwrap().to_string();
    let tampered_line = line.replace("2^1 7^1", "2^1 5^1");
    assert_ne!(line, tampered_line, "fixture line must contain the factors");
    let tampered = text.replacen(&line, &tampered_line, 1);
    let bad = dir.path().join("tampered.log");
    std::fs::write(&bad, tampered).unwrap();
    let out = opn(&["verify", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn recompute_writes_certifications() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = opn(
        &[
            "recompute",
            "--q-min",
            "3",
            "--q-max",
            "20",
            "--threshold",
            "10000000000",
            "--cache",
            cache.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("q=3: certified"));
    assert!(text.contains("exceptional pair re-verified: v_7(p^6 - 1) = 43"));
    for q in [3, 5, 7, 11, 13, 17, 19] {
        assert!(cache.join("certs").join(format!("cert_q{q}.txt")).exists());
    }
    // idempotent: a second run reloads the same certifications
    let again = opn(
        &[
            "recompute",
            "--q-min",
            "3",
            "--q-max",
            "20",
            "--threshold",
            "10000000000",
            "--cache",
            cache.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(stdout(&again), text);
}

#[test]
fn runs_are_deterministic_and_cache_backed() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let a = opn(
        &["run", "--k", "4", "--cache", cache.to_str().unwrap()],
        dir.path(),
    );
    let b = opn(
        &["run", "--k", "4", "--cache", cache.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b), "warm cache must not change the log");
    assert!(cache.join("factors.cache").exists());
}

#[test]
fn cache_stats_and_merge() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = dir.path().join("a.cache");
    let f2 = dir.path().join("b.cache");
    std::fs::write(&f1, "781 = 11^1 * 71^1\nnot a line\n").unwrap();
    std::fs::write(&f2, "57 = 3^1 * 19^1\n781 = 11^1 * 71^1\n").unwrap();
    let out = opn(&["cache", "stats", f1.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("1 entries"));
    let merged = dir.path().join("merged.cache");
    let out = opn(
        &[
            "cache",
            "merge",
            merged.to_str().unwrap(),
            f1.to_str().unwrap(),
            f2.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&merged).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn jobs_flag_keeps_output_stable() {
    let dir = tempfile::tempdir().unwrap();
    let seq = opn(&["run", "--k", "4"], dir.path());
    let par = opn(&["run", "--k", "4", "--jobs", "4"], dir.path());
    assert_eq!(stdout(&seq), stdout(&par));
}

#[test]
fn checkpoint_flags_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("run.checkpoint");
    let out = opn(
        &[
            "run", "--k", "5", "--B1", "50", "--B2", "50", "--max-u", "0",
            "--checkpoint", cp.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(cp.exists(), "periodic checkpoint must be written");
    // resuming under the same config replays the recorded frontier
    let out = opn(
        &[
            "run", "--k", "5", "--B1", "50", "--B2", "50", "--max-u", "0",
            "--resume", cp.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    // a different config is refused outright
    let out = opn(
        &["run", "--k", "4", "--resume", cp.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cache_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("envcache");
    let out = Command::new(env!("CARGO_BIN_EXE_opn"))
        .args(["run", "--k", "3"])
        .current_dir(dir.path())
        .env("OPN_CACHE_DIR", &cache)
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0));
    assert!(cache.join("factors.cache").exists());
}
