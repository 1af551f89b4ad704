//! Effort-bounded integer factorization with a persistent factor cache.
//!
//! Primality policy: deterministic Miller-Rabin witnesses below a fixed
//! threshold, strong-probable-prime rounds plus a strong Lucas round above
//! it. Every probable-prime verdict is recorded so a run can report exactly
//! which primality claims are not deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{jacobi, sieve};
use crate::Result;

/// Verdict of the primality policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primality {
    ProvenPrime,
    ProbablePrime,
    Composite,
}

/// One prime power of a factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub prime: BigUint,
    pub exp: u32,
    /// false when the primality of `prime` rests on a probable test only
    pub proven: bool,
}

/// Multiset of prime powers plus an unresolved cofactor (1 when complete).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub factors: Vec<Factor>,
    pub cofactor: BigUint,
}

impl Factorization {
    pub fn is_complete(&self) -> bool {
        self.cofactor.is_one()
    }

    /// Product of all prime powers times the cofactor.
    pub fn reconstruct(&self) -> BigUint {
        let mut n = self.cofactor.clone();
        for f in &self.factors {
            n *= f.prime.pow(f.exp);
        }
        n
    }

    pub fn any_probable(&self) -> bool {
        self.factors.iter().any(|f| !f.proven)
    }
}

/// Per-call effort limits for `factor`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffortBudget {
    pub trial_limit: u64,
    pub rho_iterations: u64,
    pub time_cap: Duration,
}

impl Default for EffortBudget {
    fn default() -> Self {
        EffortBudget {
            trial_limit: 100_000,
            rho_iterations: 10_000_000,
            time_cap: Duration::from_secs(86_400),
        }
    }
}

/// Largest bound for which the fixed witness set below is deterministic.
pub fn default_deterministic_limit() -> BigUint {
    "3317044064679887385961981".parse().unwrap()
}

const DETERMINISTIC_WITNESSES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
const PROBABLE_WITNESSES: [u64; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Factorization service with memoization and an optional on-disk cache.
pub struct FactorDb {
    deterministic_limit: BigUint,
    small_primes: Vec<u64>,
    cache: Mutex<HashMap<BigUint, Factorization>>,
    file: Mutex<Option<File>>,
    cache_path: Option<PathBuf>,
    probable: Mutex<BTreeSet<BigUint>>,
    order_memo: Mutex<HashMap<(u64, BigUint), (u64, u64)>>,
}

impl FactorDb {
    /// Cache kept purely in memory.
    pub fn in_memory() -> Self {
        FactorDb {
            deterministic_limit: default_deterministic_limit(),
            small_primes: sieve(100_000),
            cache: Mutex::new(HashMap::new()),
            file: Mutex::new(None),
            cache_path: None,
            probable: Mutex::new(BTreeSet::new()),
            order_memo: Mutex::new(HashMap::new()),
        }
    }

    /// Memoized (o_q(p), v_q(p^(o_q(p)) − 1)) for an odd prime q and a prime
    /// p coprime to it: the forcing contexts query these for every known
    /// prime pair at every node.
    pub fn order_and_valuation(&self, q: u64, p: &BigUint) -> (u64, u64) {
        if let Some(hit) = self.order_memo.lock().unwrap().get(&(q, p.clone())) {
            return *hit;
        }
        let order = crate::arith::mult_order_mod_prime_big(p, q);
        let valuation = crate::arith::valuation_of_pow_minus_one(p, order, q);
        let result = (order, valuation);
        self.order_memo
            .lock()
            .unwrap()
            .insert((q, p.clone()), result);
        result
    }

    /// Cache backed by an append-only text file; existing entries are loaded,
    /// corrupt lines skipped with a warning.
    pub fn open(path: &Path) -> Result<Self> {
        let mut db = FactorDb::in_memory();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            let mut map = HashMap::new();
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                match parse_cache_line(&line) {
                    Some((n, f)) => {
                        map.insert(n, f);
                    }
                    None if line.trim().is_empty() || line.starts_with('#') => {}
                    None => {
                        eprintln!(
                            "warning: skipping corrupt cache line {} in {}",
                            idx + 1,
                            path.display()
                        );
                    }
                }
            }
            db.cache = Mutex::new(map);
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        db.file = Mutex::new(Some(file));
        db.cache_path = Some(path.to_path_buf());
        Ok(db)
    }

    /// Merge entries from another cache file into this one.
    pub fn load_seed(&self, path: &Path) -> Result<usize> {
        let reader = BufReader::new(File::open(path)?);
        let mut added = 0;
        for line in reader.lines() {
            let line = line?;
            if let Some((n, f)) = parse_cache_line(&line) {
                if self.cache.lock().unwrap().insert(n, f).is_none() {
                    added += 1;
                }
            }
        }
        Ok(added)
    }

    /// Seed from in-memory cache-grammar text (shipped tables).
    pub fn load_seed_str(&self, text: &str) {
        for line in text.lines() {
            if let Some((n, f)) = parse_cache_line(line) {
                self.cache.lock().unwrap().insert(n, f);
            }
        }
    }

    pub fn deterministic_limit(&self) -> &BigUint {
        &self.deterministic_limit
    }

    pub fn set_deterministic_limit(&mut self, limit: BigUint) {
        self.deterministic_limit = limit;
    }

    /// Probable-prime verdicts issued so far.
    pub fn probable_log(&self) -> Vec<BigUint> {
        self.probable.lock().unwrap().iter().cloned().collect()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    /// Primality policy entry point.
    pub fn is_prime(&self, n: &BigUint) -> Primality {
        let two = BigUint::from(2u32);
        assert!(n >= &two, "is_prime requires n >= 2");
        if let Some(v) = n.to_u64() {
            if v <= *self.small_primes.last().unwrap() {
                return if self.small_primes.binary_search(&v).is_ok() {
                    Primality::ProvenPrime
                } else {
                    Primality::Composite
                };
            }
            return if miller_rabin_u64(v) {
                Primality::ProvenPrime
            } else {
                Primality::Composite
            };
        }
        for &p in self.small_primes.iter().take(64) {
            if (n % BigUint::from(p)).is_zero() {
                return Primality::Composite;
            }
        }
        if n <= &self.deterministic_limit {
            for &a in &DETERMINISTIC_WITNESSES {
                if !miller_rabin_round(n, a) {
                    return Primality::Composite;
                }
            }
            return Primality::ProvenPrime;
        }
        for &a in &PROBABLE_WITNESSES {
            if !miller_rabin_round(n, a) {
                return Primality::Composite;
            }
        }
        if !strong_lucas_round(n) {
            return Primality::Composite;
        }
        self.probable.lock().unwrap().insert(n.clone());
        Primality::ProbablePrime
    }

    pub fn cache_get(&self, n: &BigUint) -> Option<Factorization> {
        self.cache.lock().unwrap().get(n).cloned()
    }

    /// Record a complete factorization, in memory and on disk.
    pub fn cache_put(&self, n: &BigUint, f: &Factorization) {
        debug_assert!(f.is_complete());
        debug_assert_eq!(&f.reconstruct(), n);
        let fresh = self
            .cache
            .lock()
            .unwrap()
            .insert(n.clone(), f.clone())
            .is_none();
        if fresh {
            if let Some(file) = self.file.lock().unwrap().as_mut() {
                let _ = writeln!(file, "{}", render_cache_line(n, f));
            }
        }
    }

    /// Factor n within the budget: trial division, then a Brent-cycle stage
    /// on each remaining composite. Incomplete results carry the unresolved
    /// cofactor; they are never cached.
    pub fn factor(&self, n: &BigUint, budget: &EffortBudget) -> Factorization {
        if n.is_zero() {
            panic!("factor requires n >= 1");
        }
        if n.is_one() {
            return Factorization {
                factors: Vec::new(),
                cofactor: BigUint::one(),
            };
        }
        if let Some(hit) = self.cache_get(n) {
            return hit;
        }
        let started = Instant::now();
        let mut counts: BTreeMap<BigUint, (u32, bool)> = BTreeMap::new();
        let mut rest = n.clone();

        for &p in &self.small_primes {
            if p > budget.trial_limit {
                break;
            }
            let pb = BigUint::from(p);
            if &pb * &pb > rest {
                break;
            }
            loop {
                let (q, r) = rest.div_rem(&pb);
                if !r.is_zero() {
                    break;
                }
                counts.entry(pb.clone()).and_modify(|e| e.0 += 1).or_insert((1, true));
                rest = q;
            }
        }

        let mut pending = vec![rest];
        let mut stuck: Vec<BigUint> = Vec::new();
        while let Some(m) = pending.pop() {
            if m.is_one() {
                continue;
            }
            match self.is_prime(&m) {
                Primality::ProvenPrime => {
                    counts.entry(m).and_modify(|e| e.0 += 1).or_insert((1, true));
                    continue;
                }
                Primality::ProbablePrime => {
                    counts
                        .entry(m)
                        .and_modify(|e| e.0 += 1)
                        .or_insert((1, false));
                    continue;
                }
                Primality::Composite => {}
            }
            if let Some(hit) = self.cache_get(&m) {
                for f in hit.factors {
                    counts
                        .entry(f.prime)
                        .and_modify(|e| {
                            e.0 += f.exp;
                            e.1 &= f.proven;
                        })
                        .or_insert((f.exp, f.proven));
                }
                continue;
            }
            if started.elapsed() > budget.time_cap {
                stuck.push(m);
                continue;
            }
            match brent_stage(&m, budget.rho_iterations) {
                Some(d) => {
                    pending.push(&m / &d);
                    pending.push(d);
                }
                None => stuck.push(m),
            }
        }

        let cofactor = stuck
            .into_iter()
            .fold(BigUint::one(), |acc, m| acc * m);
        let factors: Vec<Factor> = counts
            .into_iter()
            .map(|(prime, (exp, proven))| Factor { prime, exp, proven })
            .collect();
        let result = Factorization { factors, cofactor };
        debug_assert_eq!(result.reconstruct(), *n);
        if result.is_complete() {
            self.cache_put(n, &result);
        }
        result
    }

    /// Factor with escalating effort; panics only if a supposedly easy input
    /// resists a budget 64x the default. Used for moduli and table
    /// verification where completeness is part of the contract.
    pub fn factor_unbounded(&self, n: &BigUint) -> Factorization {
        let mut budget = EffortBudget::default();
        for _ in 0..4 {
            let f = self.factor(n, &budget);
            if f.is_complete() {
                return f;
            }
            budget.rho_iterations *= 4;
        }
        panic!("factor_unbounded: {n} resisted escalated effort");
    }

    /// Factor σ(p^a) through its cyclotomic pieces Φ_d(p), d | a+1, d > 1.
    /// The pieces are far smaller than the product and cache individually.
    pub fn factor_sigma_pp(
        &self,
        p: &BigUint,
        a: u64,
        budget: &EffortBudget,
    ) -> Factorization {
        let mut counts: BTreeMap<BigUint, (u32, bool)> = BTreeMap::new();
        let mut cofactor = BigUint::one();
        for d in crate::arith::divisors(a + 1).into_iter().filter(|&d| d > 1) {
            let piece = crate::arith::cyclotomic_eval(d, p);
            let f = self.factor(&piece, budget);
            for fac in f.factors {
                counts
                    .entry(fac.prime)
                    .and_modify(|e| {
                        e.0 += fac.exp;
                        e.1 &= fac.proven;
                    })
                    .or_insert((fac.exp, fac.proven));
            }
            cofactor *= f.cofactor;
        }
        let factors = counts
            .into_iter()
            .map(|(prime, (exp, proven))| Factor { prime, exp, proven })
            .collect();
        let result = Factorization { factors, cofactor };
        debug_assert_eq!(result.reconstruct(), crate::arith::sigma_pp(p, a));
        result
    }
}

/// Deterministic Miller-Rabin for odd u64 beyond the sieve: the first twelve
/// prime witnesses decide everything below 2^64.
fn miller_rabin_u64(n: u64) -> bool {
    if n.is_multiple_of(2) {
        return false;
    }
    let modmul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let modpow = |mut base: u64, mut e: u64| {
        let mut acc = 1u64;
        base %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = modmul(acc, base);
            }
            base = modmul(base, base);
            e >>= 1;
        }
        acc
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in DETERMINISTIC_WITNESSES[..12].iter() {
        if a % n == 0 {
            continue;
        }
        let mut x = modpow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = modmul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// One strong-probable-prime round to base a. True = passes (possibly prime).
fn miller_rabin_round(n: &BigUint, a: u64) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let a = BigUint::from(a) % n;
    if a.is_zero() {
        return true;
    }
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let mut x = a.modpow(&d, n);
    if x.is_one() || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == nm1 {
            return true;
        }
        if x.is_one() {
            return false;
        }
    }
    false
}

/// Strong Lucas probable-prime round with Selfridge parameter selection.
fn strong_lucas_round(n: &BigUint) -> bool {
    // a perfect square can never find jacobi(D/n) = -1
    let root = n.sqrt();
    if &root * &root == *n {
        return false;
    }
    let mut d = BigInt::from(5);
    loop {
        match jacobi(&d, n) {
            -1 => break,
            0 => {
                // shares a factor with n
                let g = d.magnitude().gcd(n);
                if !g.is_one() && &g != n {
                    return false;
                }
            }
            _ => {}
        }
        d = if d.sign() == num_bigint::Sign::Plus {
            -(d + BigInt::from(2))
        } else {
            -(d - BigInt::from(2))
        };
    }
    let p = BigInt::one();
    let q = (BigInt::one() - &d) / BigInt::from(4);
    let n_int = BigInt::from(n.clone());

    let np1 = n + 1u32;
    let s = np1.trailing_zeros().unwrap_or(0);
    let odd = &np1 >> s;

    // binary Lucas chain for U_odd, V_odd
    let mut u = BigInt::zero();
    let mut v = BigInt::from(2);
    let mut qk = BigInt::one();
    let bits = odd.bits();
    let modn = |x: &BigInt| x.mod_floor(&n_int);
    let half = |x: &BigInt| {
        let x = modn(x);
        if x.is_even() {
            modn(&(&x / 2))
        } else {
            modn(&((&x + &n_int) / 2))
        }
    };
    for i in (0..bits).rev() {
        // double
        u = modn(&(&u * &v));
        v = modn(&(&v * &v - 2 * &qk));
        qk = modn(&(&qk * &qk));
        if odd.bit(i) {
            // add one step
            let tu = half(&(&p * &u + &v));
            let tv = half(&(&d * &u + &p * &v));
            u = tu;
            v = tv;
            qk = modn(&(&qk * &q));
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = modn(&(&v * &v - 2 * &qk));
        if v.is_zero() {
            return true;
        }
        qk = modn(&(&qk * &qk));
    }
    false
}

/// Brent-cycle factor stage: deterministic parameters, iteration-capped.
/// Returns a nontrivial divisor (not necessarily prime).
fn brent_stage(n: &BigUint, max_iterations: u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    let per_attempt = (max_iterations / 4).max(1 << 14);
    for c in 1u64..=4 {
        if let Some(d) = brent_attempt(n, c, per_attempt) {
            return Some(d);
        }
    }
    None
}

fn brent_attempt(n: &BigUint, c: u64, max_iterations: u64) -> Option<BigUint> {
    if let Some(nv) = n.to_u64() {
        return brent_u64(nv, c, max_iterations).map(BigUint::from);
    }
    let c = BigUint::from(c);
    let step = |x: &BigUint| (x * x + &c) % n;
    let mut y = BigUint::from(2u32);
    let mut r: u64 = 1;
    let mut q = BigUint::one();
    let mut iterations = 0u64;
    let batch = 128u64;
    let mut x;
    let mut ys;
    loop {
        x = y.clone();
        for _ in 0..r {
            y = step(&y);
        }
        let mut k = 0u64;
        while k < r {
            ys = y.clone();
            let lim = batch.min(r - k);
            for _ in 0..lim {
                y = step(&y);
                let diff = if x > y { &x - &y } else { &y - &x };
                q = (q * diff) % n;
            }
            let g = q.gcd(n);
            if !g.is_one() {
                if &g == n {
                    // backtrack one step at a time
                    loop {
                        ys = step(&ys);
                        let diff = if x > ys { &x - &ys } else { &ys - &x };
                        let g = diff.gcd(n);
                        if !g.is_one() {
                            return if &g == n { None } else { Some(g) };
                        }
                    }
                }
                return Some(g);
            }
            k += lim;
            iterations += lim;
            if iterations >= max_iterations {
                return None;
            }
        }
        r *= 2;
    }
}

fn brent_u64(n: u64, c: u64, max_iterations: u64) -> Option<u64> {
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let step = |x: u64| {
        let v = mulmod(x, x);
        let s = v.wrapping_add(c % n);
        if s >= n || s < v {
            (v as u128 + c as u128).rem_euclid(n as u128) as u64
        } else {
            s
        }
    };
    let mut y = 2u64 % n;
    let mut r: u64 = 1;
    let mut q = 1u64;
    let mut iterations = 0u64;
    let batch = 128u64;
    let mut x;
    let mut ys;
    loop {
        x = y;
        for _ in 0..r {
            y = step(y);
        }
        let mut k = 0u64;
        while k < r {
            ys = y;
            let lim = batch.min(r - k);
            for _ in 0..lim {
                y = step(y);
                q = mulmod(q, x.abs_diff(y));
            }
            let g = gcd_u64(q, n);
            if g != 1 {
                if g == n {
                    let mut z = ys;
                    loop {
                        z = step(z);
                        let g = gcd_u64(x.abs_diff(z), n);
                        if g != 1 {
                            return if g == n { None } else { Some(g) };
                        }
                    }
                }
                return Some(g);
            }
            k += lim;
            iterations += lim;
            if iterations >= max_iterations {
                return None;
            }
        }
        r *= 2;
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

/// Render `n = p1^e1 * p2^e2 [!]`, `!` marking any probable prime.
pub fn render_cache_line(n: &BigUint, f: &Factorization) -> String {
    let parts: Vec<String> = f
        .factors
        .iter()
        .map(|fac| format!("{}^{}", fac.prime, fac.exp))
        .collect();
    let mut line = format!("{} = {}", n, parts.join(" * "));
    if f.any_probable() {
        line.push_str(" !");
    }
    line
}

/// Parse a cache line; None for anything that does not match the grammar.
pub fn parse_cache_line(line: &str) -> Option<(BigUint, Factorization)> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return None;
    }
    let (lhs, rhs) = line.split_once(" = ")?;
    let n: BigUint = lhs.trim().parse().ok()?;
    let mut rhs = rhs.trim();
    let mut probable = false;
    if let Some(stripped) = rhs.strip_suffix('!') {
        probable = true;
        rhs = stripped.trim_end();
    }
    let mut factors = Vec::new();
    for part in rhs.split('*') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (p, e) = part.split_once('^')?;
        let prime: BigUint = p.trim().parse().ok()?;
        let exp: u32 = e.trim().parse().ok()?;
        if exp == 0 {
            return None;
        }
        factors.push(Factor {
            prime,
            exp,
            proven: !probable,
        });
    }
    let f = Factorization {
        factors,
        cofactor: BigUint::one(),
    };
    if f.reconstruct() != n {
        return None;
    }
    Some((n, f))
}


#[cfg(test)]
mod seed_tests {
    use super::*;
    use crate::arith::sigma_pp;

    #[test]
    fn shipped_seed_entries_parse_and_reconstruct() {
        let db = FactorDb::in_memory();
        db.load_seed_str(include_str!("../data/sigma_factors.cache"));
        for (base, exp) in [(7u64, 64u64), (13, 38), (13, 64)] {
            let n = sigma_pp(&BigUint::from(base), exp);
            let f = db
                .cache_get(&n)
                .unwrap_or_else(|| panic!("seed missing sigma({base}^{exp})"));
            assert_eq!(f.reconstruct(), n);
            assert!(f.is_complete());
            for fac in &f.factors {
                assert_ne!(db.is_prime(&fac.prime), Primality::Composite);
            }
        }
    }
}
