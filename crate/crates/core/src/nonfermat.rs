//! Arbitrary-prime analogues of the Fermat-prime machinery: lifted solution
//! sets of x^(q−1) ≡ 1 (mod q^r), recomputed congruence-search floors, the
//! q ∈ {7,11,13} Wieferich-square table, and forcing of large unknown primes
//! not congruent to 1 mod q.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;

use crate::arith::nth_root_floor;
use crate::factordb::{FactorDb, Primality};
use crate::{Error, Result};

/// Threshold and scope of the congruence searches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceSearchConfig {
    pub threshold: BigUint,
    pub q_max: u64,
}

impl Default for CongruenceSearchConfig {
    fn default() -> Self {
        CongruenceSearchConfig {
            threshold: BigUint::from(10u32).pow(12),
            q_max: 1000,
        }
    }
}

/// Smallest positive primitive root modulo an odd prime q.
pub fn smallest_primitive_root(q: u64) -> u64 {
    assert!(q >= 3 && q % 2 == 1);
    let qb = BigUint::from(q);
    let group = q - 1;
    let mut rest = group;
    let mut prime_parts = Vec::new();
    let mut d = 2;
    while d * d <= rest {
        if rest.is_multiple_of(d) {
            prime_parts.push(d);
            while rest.is_multiple_of(d) {
                rest /= d;
            }
        }
        d += 1;
    }
    if rest > 1 {
        prime_parts.push(rest);
    }
    'outer: for g in 2..q {
        let gb = BigUint::from(g);
        for &r in &prime_parts {
            if gb.modpow(&BigUint::from(group / r), &qb).is_one() {
                continue 'outer;
            }
        }
        return g;
    }
    unreachable!("every odd prime has a primitive root");
}

/// Complete sorted set of incongruent solutions to x^(q−1) ≡ 1 (mod q^r),
/// generated as powers of a_r = a₁^(q^(r−1)) mod q^r for the smallest
/// primitive root a₁ mod q.
pub fn lift_solutions(q: u64, r: u32) -> Vec<BigUint> {
    assert!(r >= 1);
    let modulus = BigUint::from(q).pow(r);
    let a1 = BigUint::from(smallest_primitive_root(q));
    let a_r = a1.modpow(&BigUint::from(q).pow(r - 1), &modulus);
    let mut out = Vec::with_capacity(q as usize - 1);
    let mut x = BigUint::one();
    for _ in 0..q - 1 {
        out.push(x.clone());
        x = (&x * &a_r) % &modulus;
    }
    debug_assert!(x.is_one(), "generator order must be q-1");
    out.sort();
    out
}

/// The one known failure of the prime-solution floor for q < 1000: a
/// 35-digit prime p with v₇(p⁶ − 1) = 43.
pub static EXCEPTIONAL_PRIME_Q7: Lazy<BigUint> =
    Lazy::new(|| "40663372766570611389846294355914421".parse().unwrap());
pub const EXCEPTIONAL_PRIME_Q7_LEVEL: u64 = 43;

/// Recomputed certification that every solution below the claimed floors is
/// absent, per modulus level up to the threshold-covering level m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certification {
    pub q: u64,
    pub threshold: BigUint,
    pub level: u32,
    /// (level n, prime solution x) with x below min(q^(n−2), threshold)
    pub prime_exceptions: Vec<(u32, BigUint)>,
    /// (level n, x divisible by q−1) with x below the divisible-solution floor
    pub divisible_exceptions: Vec<(u32, BigUint)>,
}

/// Exponent shift of the divisible-solution floor: q = 7 loses one more
/// power than q ≥ 11.
fn divisible_shift(q: u64) -> u64 {
    if q == 7 {
        3
    } else {
        2
    }
}

/// The independent search pass: fix minimal m with q^(m−2) > threshold,
/// enumerate the lifted solution sets for every level n ≤ m, and record any
/// prime (or (q−1)-divisible) solution below the claimed floor. Level m
/// covers all higher levels, since a solution mod q^n reduces to one mod q^m.
pub fn congruence_search(q: u64, cfg: &CongruenceSearchConfig, db: &FactorDb) -> Certification {
    assert!(q >= 3 && q % 2 == 1 && q < cfg.q_max);
    assert!(cfg.threshold >= BigUint::from(1_000_000u64));
    let qb = BigUint::from(q);
    let mut m = 3u32;
    while qb.pow(m - 2) <= cfg.threshold {
        m += 1;
    }
    let mut prime_exceptions = Vec::new();
    let mut divisible_exceptions = Vec::new();
    let qm1 = BigUint::from(q - 1);
    for n in 1..=m {
        let claim12 = if n > 2 {
            qb.pow(n - 2).min(cfg.threshold.clone())
        } else {
            BigUint::one()
        };
        // the divisible-solution floor is only claimed for q >= 7; smaller q
        // genuinely admit small (q-1)-divisible solutions
        let shift = divisible_shift(q) as u32;
        let claim15 = if q >= 7 && n > shift {
            qb.pow(n - shift).min(cfg.threshold.clone())
        } else {
            BigUint::one()
        };
        let modulus = qb.pow(n);
        for x in lift_solutions(q, n) {
            if x.is_one() {
                continue;
            }
            debug_assert!(x.modpow(&qm1, &modulus).is_one());
            if x < claim12 && db.is_prime(&x) != Primality::Composite {
                prime_exceptions.push((n, x.clone()));
            }
            if x < claim15 && (&x % &qm1).is_zero() {
                divisible_exceptions.push((n, x));
            }
        }
    }
    Certification {
        q,
        threshold: cfg.threshold.clone(),
        level: m,
        prime_exceptions,
        divisible_exceptions,
    }
}

/// Certified floor on any odd prime p with p^(q−1) ≡ 1 (mod q^n).
pub struct PrimeSolutionFloor {
    pub floor: BigUint,
    /// exception that clamped the floor, if any
    pub exception: Option<BigUint>,
}

/// min(q^(n−2), threshold), clamped by certified exceptions. An exception
/// recorded at level l is a solution modulo q^l and no further, so it
/// applies to the query level n exactly when l = n; queries above the
/// certified level m fall back to the level-m solution set and take every
/// level-m exception.
pub fn prime_solution_floor(q: u64, n: u64, cert: &Certification) -> Result<PrimeSolutionFloor> {
    if cert.q != q {
        return Err(Error::MissingCertification(q, cert.threshold.to_string()));
    }
    let qb = BigUint::from(q);
    let mut floor = if n > 2 {
        qb.pow((n - 2).min(u32::MAX as u64) as u32)
            .min(cert.threshold.clone())
    } else {
        BigUint::one()
    };
    let mut exception = None;
    let effective = n.min(cert.level as u64);
    for (lvl, x) in &cert.prime_exceptions {
        if u64::from(*lvl) == effective && *x < floor {
            floor = x.clone();
            exception = Some(x.clone());
        }
    }
    Ok(PrimeSolutionFloor { floor, exception })
}

/// Certified floor on integers a divisible by q−1 with a^(q−1) ≡ 1 (mod q^n).
pub fn divisible_solution_floor(q: u64, n: u64, cert: &Certification) -> Result<BigUint> {
    assert!(q >= 7);
    if cert.q != q {
        return Err(Error::MissingCertification(q, cert.threshold.to_string()));
    }
    let shift = divisible_shift(q);
    let qb = BigUint::from(q);
    let mut floor = if n > shift {
        qb.pow((n - shift) as u32).min(cert.threshold.clone())
    } else {
        BigUint::one()
    };
    let effective = n.min(cert.level as u64);
    for (lvl, x) in &cert.divisible_exceptions {
        if u64::from(*lvl) == effective && *x < floor {
            floor = x.clone();
        }
    }
    Ok(floor)
}

/// One Wieferich-square witness: an exponent e with witness | q^e − 1.
pub type SquareWitness = (u64, BigUint);

/// Wieferich-square pairs for q ∈ {7, 11, 13} inside (10², 10¹¹), each with
/// two certified prime witnesses > 10¹¹ dividing σ(q^(o_p(q)−1)). The second
/// witness for (13, 863) is the 469-digit prime (13^431+1)/(2·7·863²·68099),
/// reconstructed at load.
pub static WIEFERICH_SQUARE_TABLE: Lazy<Vec<(u64, BigUint, Vec<SquareWitness>)>> =
    Lazy::new(|| {
        let big_witness = {
            let num = BigUint::from(13u32).pow(431) + 1u32;
            let den = BigUint::from(2u32)
                * BigUint::from(7u32)
                * BigUint::from(863u32).pow(2)
                * BigUint::from(68099u32);
            let (w, r) = num.div_rem(&den);
            assert!(r.is_zero());
            w
        };
        vec![
            (
                7,
                BigUint::from(491531u64),
                vec![
                    (65, "4446437759531".parse().unwrap()),
                    (65, "434502978835771".parse().unwrap()),
                ],
            ),
            (
                13,
                BigUint::from(863u64),
                vec![
                    (862, "16002623839393".parse().unwrap()),
                    (862, big_witness),
                ],
            ),
            (
                13,
                BigUint::from(1747591u64),
                vec![
                    (39, "57745124662681".parse().unwrap()),
                    (65, "71442881968439190301".parse().unwrap()),
                ],
            ),
        ]
    });

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WieferichSquareEntry {
    /// q^(p−1) ≡ 1 (mod p²) with the certified witness factors
    Pair(Vec<BigUint>),
    /// q^(p−1) ≢ 1 (mod p²): square-freeness reasoning applies
    Clear,
}

pub fn wieferich_square_lookup(q: u64, p: &BigUint) -> WieferichSquareEntry {
    debug_assert!(matches!(q, 7 | 11 | 13));
    for (tq, tp, ws) in WIEFERICH_SQUARE_TABLE.iter() {
        if *tq == q && tp == p {
            return WieferichSquareEntry::Pair(ws.iter().map(|(_, w)| w.clone()).collect());
        }
    }
    WieferichSquareEntry::Clear
}

/// Startup verification of the square table: the pair condition holds, each
/// witness is (probable) prime, exceeds 10¹¹, divides q^e − 1 for its stored
/// exponent e, and e divides o_p(q) computed by factoring p − 1.
pub fn verify_square_table(db: &FactorDb) -> Result<()> {
    let floor = BigUint::from(10u32).pow(11);
    for (q, p, witnesses) in WIEFERICH_SQUARE_TABLE.iter() {
        let qb = BigUint::from(*q);
        if qb.modpow(&(p - 1u32), &(p * p)) != BigUint::one() {
            return Err(Error::TableVerification(format!(
                "{q}^(p-1) != 1 mod p^2 for p={p}"
            )));
        }
        let order = crate::arith::mult_order(&qb, p, db)?;
        for (e, w) in witnesses {
            if db.is_prime(w) == Primality::Composite {
                return Err(Error::TableVerification(format!("witness {w} is not prime")));
            }
            if w <= &floor {
                return Err(Error::TableVerification(format!(
                    "witness {w} for (q={q}, p={p}) is under 10^11"
                )));
            }
            if !(&order % BigUint::from(*e)).is_zero() {
                return Err(Error::TableVerification(format!(
                    "stored exponent {e} does not divide o_p(q) = {order}"
                )));
            }
            if qb.modpow(&BigUint::from(*e), w) != BigUint::one() {
                return Err(Error::TableVerification(format!(
                    "witness {w} does not divide {q}^{e} - 1"
                )));
            }
        }
    }
    // the exceptional prime's defining properties, by direct modular
    // arithmetic: order 6 modulo 7 and valuation exactly 43
    let p = &*EXCEPTIONAL_PRIME_Q7;
    if crate::arith::mult_order_mod_prime_big(p, 7) != 6 {
        return Err(Error::TableVerification(
            "exceptional prime order is not 6".into(),
        ));
    }
    let seven = BigUint::from(7u32);
    let level = EXCEPTIONAL_PRIME_Q7_LEVEL as u32;
    if p.modpow(&BigUint::from(6u32), &seven.pow(level)) != BigUint::one()
        || p.modpow(&BigUint::from(6u32), &seven.pow(level + 1)) == BigUint::one()
    {
        return Err(Error::TableVerification(
            "exceptional prime valuation is not 43".into(),
        ));
    }
    Ok(())
}

/// One member of the forcing sum: a known prime with unknown component,
/// not q and not ≡ 1 (mod q), whose order data is admissible.
#[derive(Debug, Clone)]
pub struct TMember {
    pub prime: BigUint,
    /// o_q(p)
    pub order: u64,
    /// v_q(p^(o_q(p)) − 1)
    pub valuation: u64,
    /// σ₀(o_q(p))
    pub order_sigma0: u64,
}

/// Inputs to the unknown-prime forcing computation for an odd prime q < 1000
/// with q^n | N on the branch.
#[derive(Debug, Clone)]
pub struct ForcingContext {
    pub q: u64,
    pub n: u64,
    pub b: u64,
    pub known_congruent: u32,
    pub component_congruent: u32,
    pub unknown_count: u32,
    pub t_members: Vec<TMember>,
}

#[derive(Debug, Clone)]
pub struct ForcingReport {
    /// unaccounted copies of q if every unknown prime were ≡ 1 (mod q)
    pub excess: i64,
    /// refined minimum over the count m of unknown primes ≢ 1 (mod q)
    pub refined: i64,
    /// the m achieving the refined minimum
    pub m_at_min: u32,
    /// certified floor on some unknown prime ≢ 1 (mod q)
    pub floor: BigUint,
    /// exception that clamped the floor
    pub exception: Option<BigUint>,
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b) + if a.rem_euclid(b) != 0 { 1 } else { 0 }
}

/// Bracketed excess at a hypothetical count m of unknown primes ≢ 1 (mod q).
fn excess_at_m(ctx: &ForcingContext, m: i64) -> i64 {
    let k1p = ctx.known_congruent as i64;
    let l1p = ctx.component_congruent as i64;
    let k2 = ctx.unknown_count as i64;
    let mut total = ctx.n as i64 - ctx.b as i64;
    for t in &ctx.t_members {
        total -= t.valuation as i64 + (k1p + k2 - m).div_euclid(t.order_sigma0 as i64);
    }
    total -= (k1p - l1p + k2 - m) * (k1p + k2 - m - 1);
    total -= m * (k1p + k2 - m).div_euclid(2);
    total
}

/// When the plain excess is positive, some unknown prime is not ≡ 1 (mod q)
/// and is at least min(q^(τ'−2), threshold), τ' minimized over the possible
/// counts of such primes.
pub fn unknown_prime_forcing(
    ctx: &ForcingContext,
    cert: &Certification,
) -> Result<Option<ForcingReport>> {
    assert!(ctx.unknown_count >= 1);
    // m = 0 in the bracketed form reduces to the plain excess
    let tau = excess_at_m(ctx, 0);
    if tau <= 0 {
        return Ok(None);
    }
    let mut refined = i64::MAX;
    let mut m_at_min = 1;
    for m in 1..=ctx.unknown_count as i64 {
        let val = ceil_div(excess_at_m(ctx, m), m);
        if val < refined {
            refined = val;
            m_at_min = m as u32;
        }
    }
    let fl = if refined >= 1 {
        prime_solution_floor(ctx.q, refined as u64, cert)?
    } else {
        PrimeSolutionFloor {
            floor: BigUint::one(),
            exception: None,
        }
    };
    Ok(Some(ForcingReport {
        excess: tau,
        refined,
        m_at_min,
        floor: fl.floor,
        exception: fl.exception,
    }))
}

/// Lower bound on a second unknown prime dividing σ(q^n), distinct from the
/// forced one, for q ∈ {7, 11, 13}: the forced prime's congruence pushes
/// the (q−1)-divisible part of q^d − 1 above the certified floor, and the
/// remaining unknown part is square-free. `p_cap` enables the sharper
/// (k₂−2)-root variant when the smallest unknown prime is capped.
pub fn large_divisor_bound(
    q: u64,
    tau_prime: i64,
    v_product: &BigUint,
    k2: u32,
    cert: &Certification,
    p_cap: Option<&BigUint>,
) -> Option<BigUint> {
    debug_assert!(matches!(q, 7 | 11 | 13));
    assert!(k2 > 1);
    let root_k = match p_cap {
        Some(_) => {
            assert!(k2 > 2);
            k2 - 2
        }
        None => k2 - 1,
    };
    let shift = divisible_shift(q) as i64;
    if tau_prime <= shift {
        return None;
    }
    // the divisor σ(q^(d−1)) in play has d > 100, so the congruence on the
    // (q−1)-divisible part only holds to level min(τ', 100)
    let level = tau_prime.min(100) - shift;
    let qb = BigUint::from(q);
    let numerator = qb.pow(level as u32).min(cert.threshold.clone());
    let mut denom = BigUint::from(q - 1) * v_product;
    if let Some(p) = p_cap {
        denom *= p;
    }
    let quotient = numerator / denom;
    if quotient <= BigUint::one() {
        return None;
    }
    let bound = nth_root_floor(&quotient, root_k).min(BigUint::from(10u32).pow(11));
    if bound <= BigUint::one() {
        None
    } else {
        Some(bound)
    }
}

/// On-disk store of certifications, one file per q, computed on demand.
pub struct CertStore {
    dir: Option<PathBuf>,
    map: Mutex<HashMap<u64, Certification>>,
}

impl CertStore {
    pub fn in_memory() -> Self {
        CertStore {
            dir: None,
            map: Mutex::new(HashMap::new()),
        }
    }

    /// Store rooted at a directory; existing certification files are loaded.
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut map = HashMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path
                .file_name()
                .and_then(|s| s.to_str())
                .map(|s| s.starts_with("cert_q") && s.ends_with(".txt"))
                .unwrap_or(false)
            {
                if let Some(cert) = parse_certification(&fs::read_to_string(&path)?) {
                    map.insert(cert.q, cert);
                } else {
                    eprintln!("warning: ignoring malformed certification {}", path.display());
                }
            }
        }
        Ok(CertStore {
            dir: Some(dir.to_path_buf()),
            map: Mutex::new(map),
        })
    }

    pub fn get(&self, q: u64) -> Option<Certification> {
        self.map.lock().unwrap().get(&q).cloned()
    }

    /// Certification for q at (at least) the configured threshold, running
    /// the search pass if none is on record.
    pub fn ensure(
        &self,
        q: u64,
        cfg: &CongruenceSearchConfig,
        db: &FactorDb,
    ) -> Result<Certification> {
        if let Some(c) = self.get(q) {
            if c.threshold >= cfg.threshold {
                return Ok(c);
            }
        }
        let cert = congruence_search(q, cfg, db);
        self.map.lock().unwrap().insert(q, cert.clone());
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("cert_q{q}.txt"));
            let mut f = fs::File::create(&path)?;
            write!(f, "{}", render_certification(&cert))?;
        }
        Ok(cert)
    }
}

pub fn render_certification(c: &Certification) -> String {
    let mut s = format!("q {} threshold {} level {}\n", c.q, c.threshold, c.level);
    for (n, x) in &c.prime_exceptions {
        s.push_str(&format!("exception12 {n} {x}\n"));
    }
    for (n, x) in &c.divisible_exceptions {
        s.push_str(&format!("exception15 {n} {x}\n"));
    }
    s
}

pub fn parse_certification(text: &str) -> Option<Certification> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next()?.split_whitespace().collect();
    if header.len() != 6 || header[0] != "q" || header[2] != "threshold" || header[4] != "level" {
        return None;
    }
    let mut cert = Certification {
        q: header[1].parse().ok()?,
        threshold: header[3].parse().ok()?,
        level: header[5].parse().ok()?,
        prime_exceptions: Vec::new(),
        divisible_exceptions: Vec::new(),
    };
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        match parts[0] {
            "exception12" if parts.len() == 3 => cert
                .prime_exceptions
                .push((parts[1].parse().ok()?, parts[2].parse().ok()?)),
            "exception15" if parts.len() == 3 => cert
                .divisible_exceptions
                .push((parts[1].parse().ok()?, parts[2].parse().ok()?)),
            _ => return None,
        }
    }
    Some(cert)
}
