//! Command-line driver: run the exhaustion, recompute congruence
//! certifications, verify logs, and manage the factor cache.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;

use opn_core::chain::{self, RunOutcome};
use opn_core::config::RunConfig;
use opn_core::factordb::{parse_cache_line, render_cache_line, FactorDb};
use opn_core::nonfermat::{self, CertStore};
use opn_core::{fermat, Checkpoint};

/// Factor-chain search for lower bounds on the distinct prime factors of an
/// odd perfect number.
#[derive(Parser)]
#[command(name = "opn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaust the factor-chain tree for exactly k distinct prime factors.
    Run(RunArgs),
    /// Recompute the congruence-search certifications for a range of q.
    Recompute(RecomputeArgs),
    /// Re-derive every line of a branch log and report the first deviation.
    Verify(VerifyArgs),
    /// Inspect or merge factor-cache files.
    Cache(CacheArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Distinct-prime-factor count under refutation
    #[arg(long)]
    k: u32,
    /// Preset defaults: "desk" or "paper"
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Component bound for primes below 1000
    #[arg(long = "B1")]
    b1: Option<BigUint>,
    /// Component bound for primes of at least 1000
    #[arg(long = "B2")]
    b2: Option<BigUint>,
    /// Assume 3 does not divide N
    #[arg(long = "no-three")]
    no_three: bool,
    /// Avoid prior computational results (floors zeroed, P-contradictions off)
    #[arg(long)]
    bootstrap: bool,
    /// Largest u in the interval upper-bound minimization (0..3)
    #[arg(long = "max-u")]
    max_u: Option<u32>,
    /// Positional floors P1,P2,P3
    #[arg(long, value_delimiter = ',')]
    floors: Option<Vec<BigUint>>,
    /// Congruence-search certification threshold
    #[arg(long)]
    threshold: Option<BigUint>,
    /// Parallel subtree workers
    #[arg(long, default_value_t = 1)]
    jobs: u32,
    /// Cache directory (factor cache + certifications);
    /// falls back to $OPN_CACHE_DIR, else in-memory only
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl ConfigArgs {
    fn build(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match self.preset.as_str() {
            "desk" => RunConfig::desk(self.k),
            "paper" => RunConfig::paper(self.k),
            other => bail!("unknown preset `{other}` (expected desk or paper)"),
        };
        if let Some(b1) = &self.b1 {
            cfg.b1 = b1.clone();
        }
        if let Some(b2) = &self.b2 {
            cfg.b2 = b2.clone();
        }
        cfg.no_three = self.no_three;
        cfg.bootstrap = self.bootstrap;
        if let Some(u) = self.max_u {
            cfg.max_u = u;
        }
        if let Some(floors) = &self.floors {
            if floors.len() != 3 {
                bail!("--floors takes exactly three values P1,P2,P3");
            }
            for (i, f) in floors.iter().enumerate() {
                cfg.floors[i] = f.clone();
            }
        }
        if let Some(t) = &self.threshold {
            cfg.threshold = t.clone();
        }
        if cfg.bootstrap {
            cfg.floors = [0u32.into(), 0u32.into(), 0u32.into()];
        }
        cfg.jobs = self.jobs;
        Ok(cfg)
    }

    fn cache_dir(&self) -> Option<PathBuf> {
        self.cache
            .clone()
            .or_else(|| std::env::var_os("OPN_CACHE_DIR").map(PathBuf::from))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Write the branch log here as well as to stdout
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write checkpoints to this file
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Resume from a checkpoint file
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct RecomputeArgs {
    /// Smallest q to certify
    #[arg(long, default_value_t = 3)]
    q_min: u64,
    /// Largest q to certify (exclusive)
    #[arg(long, default_value_t = 1000)]
    q_max: u64,
    /// Certification threshold
    #[arg(long)]
    threshold: Option<BigUint>,
    /// Cache directory for certification files
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Branch log to verify
    log: PathBuf,
    #[command(flatten)]
    config: VerifyConfigArgs,
}

#[derive(Args)]
struct VerifyConfigArgs {
    /// Override the config recorded in the log trailer
    #[arg(long)]
    k: Option<u32>,
    #[arg(long = "B1")]
    b1: Option<BigUint>,
    #[arg(long = "B2")]
    b2: Option<BigUint>,
    #[arg(long = "no-three")]
    no_three: bool,
    #[arg(long)]
    bootstrap: bool,
    #[arg(long = "max-u")]
    max_u: Option<u32>,
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct CacheArgs {
    #[command(subcommand)]
    action: CacheAction,
}

#[derive(Subcommand)]
enum CacheAction {
    /// Entry counts and probable-prime statistics of a cache file
    Stats { file: PathBuf },
    /// Merge cache files into one, dropping duplicates and corrupt lines
    Merge {
        output: PathBuf,
        inputs: Vec<PathBuf>,
    },
}

fn open_db(cache_dir: Option<&Path>) -> anyhow::Result<FactorDb> {
    let db = match cache_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            FactorDb::open(&dir.join("factors.cache"))?
        }
        None => FactorDb::in_memory(),
    };
    db.load_seed_str(include_str!("../../core/data/sigma_factors.cache"));
    Ok(db)
}

fn open_certs(cache_dir: Option<&Path>) -> anyhow::Result<CertStore> {
    Ok(match cache_dir {
        Some(dir) => CertStore::open(&dir.join("certs"))?,
        None => CertStore::in_memory(),
    })
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = args.config.build()?;
    cfg.validate()?;
    let cache_dir = args.config.cache_dir();
    let db = open_db(cache_dir.as_deref())?;
    let certs = open_certs(cache_dir.as_deref())?;
    fermat::verify_wieferich_table(&db).context("startup table verification")?;
    nonfermat::verify_square_table(&db).context("startup table verification")?;

    if args.checkpoint.is_some() && cfg.checkpoint_every == 0 {
        cfg.checkpoint_every = 1000;
    }
    let resume = match &args.resume {
        Some(path) => Some(Checkpoint::load(path)?),
        None => None,
    };
    let mut out: Vec<u8> = Vec::new();
    let outcome = chain::run(
        &cfg,
        &db,
        &certs,
        &mut out,
        resume.as_ref(),
        args.checkpoint.as_deref(),
    )?;
    std::io::stdout().write_all(&out)?;
    if let Some(path) = &args.log {
        fs::write(path, &out)?;
    }
    Ok(match outcome {
        RunOutcome::TheoremHolds { nodes, leaves } => {
            eprintln!("theorem holds for k = {}: {nodes} nodes, {leaves} leaves", cfg.k);
            ExitCode::SUCCESS
        }
        RunOutcome::Unresolved { nodes, details } => {
            eprintln!(
                "unresolved after {nodes} nodes: {} open branches (first: {})",
                details.len(),
                details.first().map(String::as_str).unwrap_or("-")
            );
            ExitCode::from(2)
        }
        RunOutcome::OpnFound(witness) => {
            println!("ODD PERFECT NUMBER WITNESS: {witness}");
            ExitCode::from(3)
        }
        RunOutcome::Interrupted { checkpoint } => {
            eprintln!(
                "interrupted at node budget; checkpoint path {:?} written",
                checkpoint.path
            );
            ExitCode::from(2)
        }
    })
}

fn cmd_recompute(args: &RecomputeArgs) -> anyhow::Result<ExitCode> {
    let cache_dir = args
        .cache
        .clone()
        .or_else(|| std::env::var_os("OPN_CACHE_DIR").map(PathBuf::from));
    let db = open_db(cache_dir.as_deref())?;
    let certs = open_certs(cache_dir.as_deref())?;
    let mut cfg = nonfermat::CongruenceSearchConfig::default();
    if let Some(t) = &args.threshold {
        cfg.threshold = t.clone();
    }
    cfg.q_max = args.q_max;
    let mut total_exceptions = 0;
    for q in opn_core::arith::sieve(args.q_max.saturating_sub(1)) {
        if q < args.q_min.max(3) || q == 2 {
            continue;
        }
        let cert = certs.ensure(q, &cfg, &db)?;
        let ex = cert.prime_exceptions.len() + cert.divisible_exceptions.len();
        total_exceptions += ex;
        println!(
            "q={q}: certified to level {} at threshold {} ({} exceptions)",
            cert.level, cert.threshold, ex
        );
        for (n, x) in &cert.prime_exceptions {
            println!("  prime exception at level {n}: {x}");
        }
        for (n, x) in &cert.divisible_exceptions {
            println!("  divisible exception at level {n}: {x}");
        }
    }
    // the known failure case: re-verify its defining property directly
    let p = &*nonfermat::EXCEPTIONAL_PRIME_Q7;
    let lvl = nonfermat::EXCEPTIONAL_PRIME_Q7_LEVEL as u32;
    let seven = BigUint::from(7u32);
    let ok = p.modpow(&BigUint::from(6u32), &seven.pow(lvl)) == BigUint::from(1u32)
        && p.modpow(&BigUint::from(6u32), &seven.pow(lvl + 1)) != BigUint::from(1u32);
    if !ok {
        bail!("exceptional-pair re-verification failed");
    }
    println!(
        "exceptional pair re-verified: v_7(p^6 - 1) = {} for p = {p}",
        nonfermat::EXCEPTIONAL_PRIME_Q7_LEVEL
    );
    let _ = total_exceptions;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(&args.log)
        .with_context(|| format!("reading {}", args.log.display()))?;
    // config comes from the trailer, with flag overrides
    let mut cfg = text
        .lines()
        .find_map(|l| l.strip_prefix("# config "))
        .and_then(RunConfig::parse_canonical)
        .ok_or_else(|| anyhow::anyhow!("log carries no config trailer; cannot verify"))?;
    let mut cache_dir = std::env::var_os("OPN_CACHE_DIR").map(PathBuf::from);
    let over = &args.config;
    if let Some(k) = over.k {
        cfg.k = k;
    }
    if let Some(b1) = &over.b1 {
        cfg.b1 = b1.clone();
    }
    if let Some(b2) = &over.b2 {
        cfg.b2 = b2.clone();
    }
    if over.no_three {
        cfg.no_three = true;
    }
    if over.bootstrap {
        cfg.bootstrap = true;
    }
    if let Some(u) = over.max_u {
        cfg.max_u = u;
    }
    if let Some(c) = &over.cache {
        cache_dir = Some(c.clone());
    }
    let db = open_db(cache_dir.as_deref())?;
    let certs = open_certs(cache_dir.as_deref())?;
    match chain::verify_log(&text, &cfg, &db, &certs) {
        Ok(()) => {
            println!("log verified: every line re-derived");
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("verification failed: {e}");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn cmd_cache(args: &CacheArgs) -> anyhow::Result<ExitCode> {
    match &args.action {
        CacheAction::Stats { file } => {
            let text = fs::read_to_string(file)?;
            let mut entries = 0u64;
            let mut probable = 0u64;
            let mut corrupt = 0u64;
            for line in text.lines() {
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                match parse_cache_line(line) {
                    Some((_, f)) => {
                        entries += 1;
                        if f.any_probable() {
                            probable += 1;
                        }
                    }
                    None => corrupt += 1,
                }
            }
            println!("{entries} entries ({probable} with probable primes, {corrupt} corrupt lines)");
            Ok(ExitCode::SUCCESS)
        }
        CacheAction::Merge { output, inputs } => {
            let mut map = std::collections::BTreeMap::new();
            for input in inputs {
                let text = fs::read_to_string(input)?;
                for line in text.lines() {
                    if let Some((n, f)) = parse_cache_line(line) {
                        map.entry(n).or_insert(f);
                    }
                }
            }
            let mut out = fs::File::create(output)?;
            for (n, f) in &map {
                writeln!(out, "{}", render_cache_line(n, f))?;
            }
            println!("merged {} entries into {}", map.len(), output.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    // usage errors exit 1; 2 is reserved for unresolved runs
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Recompute(args) => cmd_recompute(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Cache(args) => cmd_cache(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
