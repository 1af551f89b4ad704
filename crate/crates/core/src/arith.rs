//! Exact number-theoretic primitives: valuations, multiplicative orders,
//! divisor sums, cyclotomic values and abundancy rationals.
//!
//! Everything here is arbitrary precision. Abundancy comparisons are exact
//! cross-multiplications on `BigRational`; no operation ever rounds.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::factordb::FactorDb;
use crate::{Error, Result};

/// Exponent of a prime component: a concrete positive integer, or "infinite"
/// for a component known only to exceed the branching bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtExp {
    Finite(u64),
    Inf,
}

impl std::fmt::Display for ExtExp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtExp::Finite(a) => write!(f, "{a}"),
            ExtExp::Inf => write!(f, "oo"),
        }
    }
}

/// v_p(n): the largest e with p^e | n. Returns 0 for n = 1.
pub fn vp(p: &BigUint, n: &BigUint) -> u64 {
    debug_assert!(!n.is_zero());
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        v += 1;
        m = q;
    }
}

/// v_p(n) for machine-sized inputs.
pub fn vp_u64(p: u64, mut n: u64) -> u64 {
    debug_assert!(n > 0);
    let mut v = 0;
    while n.is_multiple_of(p) {
        v += 1;
        n /= p;
    }
    v
}

/// σ(p^a) = (p^(a+1) − 1)/(p − 1), the sum of divisors of a prime power.
pub fn sigma_pp(p: &BigUint, a: u64) -> BigUint {
    let num = p.pow(a as u32 + 1) - 1u32;
    num / (p - 1u32)
}

/// σ₀(n): the number of divisors of n.
pub fn sigma0(n: u64) -> u64 {
    assert!(n >= 1);
    let mut count = 1;
    let mut m = n;
    let mut d = 2;
    while d * d <= m {
        if m.is_multiple_of(d) {
            let mut e = 0;
            while m.is_multiple_of(d) {
                m /= d;
                e += 1;
            }
            count *= e + 1;
        }
        d += 1;
    }
    if m > 1 {
        count *= 2;
    }
    count
}

/// All divisors of n, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Möbius function of n.
pub fn moebius(n: u64) -> i8 {
    assert!(n >= 1);
    let mut m = n;
    let mut factors = 0;
    let mut d = 2;
    while d * d <= m {
        if m.is_multiple_of(d) {
            m /= d;
            if m.is_multiple_of(d) {
                return 0;
            }
            factors += 1;
        }
        d += 1;
    }
    if m > 1 {
        factors += 1;
    }
    if factors % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Φ_d(p): value of the d-th cyclotomic polynomial at p, computed as the
/// Möbius product ∏_{e|d} (p^e − 1)^{μ(d/e)} with exact division.
pub fn cyclotomic_eval(d: u64, p: &BigUint) -> BigUint {
    assert!(d >= 2, "cyclotomic_eval requires d >= 2");
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for e in divisors(d) {
        let term = p.pow(e as u32) - 1u32;
        match moebius(d / e) {
            1 => num *= term,
            -1 => den *= term,
            _ => {}
        }
    }
    let (q, r) = num.div_rem(&den);
    debug_assert!(r.is_zero(), "cyclotomic product must divide exactly");
    q
}

/// Carmichael function λ(d) from a factored d.
fn carmichael(factors: &[(BigUint, u32)]) -> BigUint {
    let mut lambda = BigUint::one();
    for (p, e) in factors {
        let part = if *p == BigUint::from(2u32) {
            match e {
                1 => BigUint::one(),
                2 => BigUint::from(2u32),
                _ => BigUint::from(2u32).pow(e - 2),
            }
        } else {
            (p - 1u32) * p.pow(e - 1)
        };
        lambda = lambda.lcm(&part);
    }
    lambda
}

/// Multiplicative order of c modulo d: the least m ≥ 1 with c^m ≡ 1 (mod d).
///
/// Computed by factoring λ(d) and stripping prime factors, never by
/// iterating powers of c.
pub fn mult_order(c: &BigUint, d: &BigUint, db: &FactorDb) -> Result<BigUint> {
    if d <= &BigUint::one() || c.gcd(d) != BigUint::one() {
        return Err(Error::NotCoprime(c.to_string(), d.to_string()));
    }
    let d_fact = db.factor_unbounded(d);
    let pairs: Vec<(BigUint, u32)> = d_fact
        .factors
        .iter()
        .map(|f| (f.prime.clone(), f.exp))
        .collect();
    let lambda = carmichael(&pairs);
    let lam_fact = db.factor_unbounded(&lambda);
    let mut m = lambda;
    for f in &lam_fact.factors {
        loop {
            let (q, r) = m.div_rem(&f.prime);
            if !r.is_zero() {
                break;
            }
            if c.modpow(&q, d).is_one() {
                m = q;
            } else {
                break;
            }
        }
    }
    debug_assert!(c.modpow(&m, d).is_one());
    Ok(m)
}

/// Multiplicative order of c modulo an odd prime q, both machine sized.
pub fn mult_order_mod_prime(c: u64, q: u64) -> u64 {
    assert!(q > 1 && !c.is_multiple_of(q));
    let cb = BigUint::from(c % q);
    let qb = BigUint::from(q);
    let mut m = q - 1;
    let group = q - 1;
    let mut d = 2;
    let mut rest = group;
    let mut primes = Vec::new();
    while d * d <= rest {
        if rest.is_multiple_of(d) {
            primes.push(d);
            while rest.is_multiple_of(d) {
                rest /= d;
            }
        }
        d += 1;
    }
    if rest > 1 {
        primes.push(rest);
    }
    for r in primes {
        while m.is_multiple_of(r) && cb.modpow(&BigUint::from(m / r), &qb).is_one() {
            m /= r;
        }
    }
    m
}

/// v_q(p^o − 1) computed by lifting: the largest j with p^o ≡ 1 (mod q^j).
/// Requires q^1 | p^o − 1 to begin with.
pub fn valuation_of_pow_minus_one(p: &BigUint, o: u64, q: u64) -> u64 {
    let ob = BigUint::from(o);
    let mut j = 1u64;
    let mut modulus = BigUint::from(q) * BigUint::from(q);
    debug_assert!(p.modpow(&ob, &BigUint::from(q)).is_one());
    while p.modpow(&ob, &modulus).is_one() {
        j += 1;
        modulus *= BigUint::from(q);
    }
    j
}

/// v_q(σ(p^a)) for an odd prime q ≠ p, via the multiplicative-order
/// trichotomy — σ(p^a) itself is never materialized.
pub fn sigma_valuation(q: u64, p: &BigUint, a: u64) -> Result<u64> {
    assert!(q >= 3 && q % 2 == 1);
    let qb = BigUint::from(q);
    if p == &qb {
        return Err(Error::NotCoprime(p.to_string(), q.to_string()));
    }
    let o = mult_order_mod_prime_big(p, q);
    Ok(if o == 1 {
        vp_u64(q, a + 1)
    } else if (a + 1).is_multiple_of(o) {
        valuation_of_pow_minus_one(p, o, q) + vp_u64(q, a + 1)
    } else {
        0
    })
}

/// Order of a big p modulo a machine-sized odd prime q.
pub fn mult_order_mod_prime_big(p: &BigUint, q: u64) -> u64 {
    let r = (p % BigUint::from(q))
        .to_u64_digits()
        .first()
        .copied()
        .unwrap_or(0);
    assert!(r != 0, "p must be coprime to q");
    mult_order_mod_prime(r, q)
}

/// Guaranteed count of distinct primes dividing σ(p^a): one per divisor
/// d > 1 of a + 1.
pub fn forced_distinct_factors(_p: &BigUint, a: u64) -> u64 {
    sigma0(a + 1) - 1
}

/// σ₋₁(p^a) = σ(p^a)/p^a in lowest terms; the infinite exponent takes the
/// limit value p/(p−1).
pub fn sigma_minus_one(p: &BigUint, a: ExtExp) -> BigRational {
    match a {
        ExtExp::Finite(a) => {
            assert!(a >= 1);
            BigRational::new(sigma_pp(p, a).into(), p.pow(a as u32).into())
        }
        ExtExp::Inf => BigRational::new(
            BigInt::from(p.clone()),
            BigInt::from(p - 1u32),
        ),
    }
}

/// Jacobi symbol (a/n) for odd n ≥ 1.
pub fn jacobi(a: &BigInt, n: &BigUint) -> i32 {
    debug_assert!(n.is_odd());
    let n_int = BigInt::from(n.clone());
    let mut a = a.mod_floor(&n_int);
    let mut n = n_int;
    let mut t = 1i32;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    let four = BigInt::from(4);
    while !a.is_zero() {
        while a.is_even() {
            a /= 2;
            let r = n.mod_floor(&eight);
            if r == three || r == five {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&four) == three && n.mod_floor(&four) == three {
            t = -t;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        t
    } else {
        0
    }
}

/// Floor of the k-th root of n.
pub fn nth_root_floor(n: &BigUint, k: u32) -> BigUint {
    assert!(k >= 1);
    n.nth_root(k)
}

/// Simple sieve of odd-inclusive primes up to `limit`.
pub fn sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}
