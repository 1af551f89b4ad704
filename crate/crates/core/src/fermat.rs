//! Fermat-prime machinery: valuation trichotomy, special-prime forcing from
//! high powers of a Fermat prime, the base-q Wieferich table, and large
//! unknown-divisor bounds for σ(q^n).

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;

use crate::arith::{nth_root_floor, sigma_pp, vp, vp_u64, ExtExp};
use crate::factordb::{FactorDb, Primality};
use crate::{Error, Result};

pub const FERMAT_PRIMES: [u64; 5] = [3, 5, 17, 257, 65537];

pub fn is_fermat_prime(q: u64) -> bool {
    FERMAT_PRIMES.contains(&q)
}

/// v_q(σ(p^a)) for a Fermat prime q, using only congruence data. The first
/// case applies only to the special prime: a non-special exponent is even,
/// so a+1 is odd and no even order can divide it.
pub fn fermat_valuation(q: u64, p: &BigUint, a: u64, p_is_special: bool) -> u64 {
    debug_assert!(is_fermat_prime(q));
    let qb = BigUint::from(q);
    let r = p % &qb;
    if r.is_one() {
        vp_u64(q, a + 1)
    } else if p_is_special && r == &qb - 1u32 {
        vp(&qb, &(p + 1u32)) + vp_u64(q, a + 1)
    } else {
        0
    }
}

/// Inputs to the special-prime forcing computation for one prime q with
/// q^n | N established on the branch.
#[derive(Debug, Clone)]
pub struct ForcingContext {
    pub q: u64,
    /// exponent with q^n | N (the known exponent, or the minimal admissible
    /// exponent for an off/infinite component)
    pub n: u64,
    /// v_q of σ over the known prime components
    pub b: u64,
    /// known primes congruent to 1 mod q
    pub known_congruent: u32,
    /// known components whose prime is congruent to 1 mod q
    pub component_congruent: u32,
    /// unknown prime count
    pub unknown_count: u32,
}

/// Conclusions forced by unaccounted copies of q in σ(N).
#[derive(Debug, Clone)]
pub struct ForcingReport {
    /// copies of q that σ of the unknown components must absorb beyond what
    /// exponent-counting can supply
    pub excess: i64,
    /// the special prime must lie in an unknown component
    pub special_in_unknown_component: bool,
    /// the special prime is itself unknown, with the valuation floor below
    pub special_is_unknown_prime: bool,
    /// v_q(special + 1) is at least this
    pub valuation_floor: u64,
    /// hence the special prime is at least q^valuation_floor − 1
    pub special_floor: BigUint,
}

/// Count the copies of q that the unknown components must account for; when
/// positive, the special prime is forced out of the known components, and
/// under the congruence side condition it is forced to be an unknown prime
/// with q^τ' | special + 1.
pub fn special_forcing(
    ctx: &ForcingContext,
    knowns_with_unknown_component: &[BigUint],
) -> Option<ForcingReport> {
    debug_assert!(is_fermat_prime(ctx.q));
    let k1p = ctx.known_congruent as i64;
    let l1p = ctx.component_congruent as i64;
    let k2 = ctx.unknown_count as i64;
    let tau = ctx.n as i64 - ctx.b as i64 - (k1p - l1p + k2) * (k1p + k2 - 1);
    if tau <= 0 {
        return None;
    }
    let qb = BigUint::from(ctx.q);
    let q_tau = qb.pow(tau.min(1 << 20) as u32);
    let side_condition = knowns_with_unknown_component.iter().all(|p| {
        if (p % 4u32) != BigUint::from(1u32) {
            return true;
        }
        (p + 1u32) % &q_tau != BigUint::zero()
    });
    let mut report = ForcingReport {
        excess: tau,
        special_in_unknown_component: true,
        special_is_unknown_prime: false,
        valuation_floor: 0,
        special_floor: BigUint::zero(),
    };
    if side_condition {
        let tau_prime = ctx.n as i64
            - ctx.b as i64
            - (k1p - l1p + k2 - 1) * (k1p + k2 - 2)
            - (k1p + k2 - 1).div_euclid(2);
        let floor = tau_prime.max(1) as u64;
        report.special_is_unknown_prime = true;
        report.valuation_floor = floor;
        report.special_floor = qb.pow(floor as u32) - 1u32;
    }
    Some(report)
}

/// p | σ(q^k) together with q^m | p+1 forces k ≥ 3m; true means p cannot
/// divide σ(q^k).
pub fn excluded_by_valuation(k: u64, m: u64) -> bool {
    k < 3 * m
}

/// Base-q Wieferich pairs with q = 3, 5, 17 and a certified large prime
/// factor of q^(o_p(q)) − 1; pairs outside the table imply p beyond the
/// published search bound (10^13 for q = 3, 5; 10^11 for q = 17).
pub static WIEFERICH_TABLE: Lazy<Vec<(u64, BigUint, BigUint)>> = Lazy::new(|| {
    [
        (3u64, "1006003", "154680726732318637"),
        (5, "20771", "625552508473588471"),
        (5, "40487", "625552508473588471"),
        (5, "53471161", "60081451169922001"),
        (5, "1645333507", "52082118058261"),
        (5, "6692367337", "8930008316757509"),
        (5, "188748146801", "40093613041379"),
        (17, "46021", "1365581260423071390161"),
        (17, "48947", "63895279579889"),
    ]
    .into_iter()
    .map(|(q, p, f)| (q, p.parse().unwrap(), f.parse().unwrap()))
    .collect()
});

/// Wieferich pairs excluded from the table's large-factor guarantee.
pub const WIEFERICH_EXCEPTIONS: [(u64, u64); 2] = [(3, 11), (17, 3)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WieferichEntry {
    Exception,
    LargeFactor(BigUint),
    NotInTable,
}

pub fn wieferich_lookup(q: u64, p: &BigUint) -> WieferichEntry {
    debug_assert!(matches!(q, 3 | 5 | 17));
    for (eq, ep) in WIEFERICH_EXCEPTIONS {
        if eq == q && BigUint::from(ep) == *p {
            return WieferichEntry::Exception;
        }
    }
    for (tq, tp, f) in WIEFERICH_TABLE.iter() {
        if *tq == q && tp == p {
            return WieferichEntry::LargeFactor(f.clone());
        }
    }
    WieferichEntry::NotInTable
}

/// Can `order` divide a+1 for the component of `base`? Odd orders always
/// can; orders ≡ 2 (mod 4) only if base can carry the special exponent;
/// orders divisible by 4 never can.
pub fn admissible_order(
    order_is_even: bool,
    order_div4: bool,
    base_is_special: bool,
    base_mod4_is_1: bool,
    special_claimed_elsewhere: bool,
) -> bool {
    if !order_is_even {
        return true;
    }
    if order_div4 {
        return false;
    }
    base_is_special || (base_mod4_is_1 && !special_claimed_elsewhere)
}

/// v_base(x^e − 1) by lifting, for a big prime modulus.
fn valuation_big(x: &BigUint, e: &BigUint, base: &BigUint) -> u64 {
    debug_assert!(x.modpow(e, base).is_one());
    let mut j = 1;
    let mut modulus = base * base;
    while x.modpow(e, &modulus).is_one() {
        j += 1;
        modulus *= base;
    }
    j
}

/// Cap ε on v_p(σ(q^d)) over the exponents d admissible for q's component:
/// 0 when no admissible multiple of the order exists, else max(s+t−1, 1)
/// with s = v_p(σ(q^(o−1))) and t minimal with p^t > 100.
#[allow(clippy::too_many_arguments)]
pub fn known_divisor_cap(
    p: &BigUint,
    q: u64,
    q_is_special: bool,
    q_mod4_is_1: bool,
    special_claimed_elsewhere: bool,
    db: &FactorDb,
) -> Result<u64> {
    let qb = BigUint::from(q);
    if (&qb % p).is_zero() {
        return Ok(0);
    }
    let order = crate::arith::mult_order(&qb, p, db)?;
    let even = order.is_even();
    let div4 = (&order % 4u32).is_zero();
    if !admissible_order(even, div4, q_is_special, q_mod4_is_1, special_claimed_elsewhere) {
        return Ok(0);
    }
    let v_total = valuation_big(&qb, &order, p);
    let v_qm1 = vp(p, &BigUint::from(q - 1));
    let s = v_total.saturating_sub(v_qm1);
    let hundred = BigUint::from(100u32);
    let mut t = 1u64;
    let mut pw = p.clone();
    while pw <= hundred {
        t += 1;
        pw *= p;
    }
    Ok(((s + t) as i64 - 1).max(1) as u64)
}

fn divisor_cap_value(q: u64) -> BigUint {
    if q == 17 {
        BigUint::from(10u32).pow(11)
    } else {
        BigUint::from(10u32).pow(13)
    }
}

/// Lower bound on some unknown prime dividing σ(q^n), once the special prime
/// is excluded from σ(q^n) and unknown primes exceed 100. `n` may be
/// infinite with minimal admissible value `n_min`; the σ term then uses
/// min(n_min, 100), the smallest exponent the true component can have.
pub fn large_divisor_bound(
    q: u64,
    n: ExtExp,
    n_min: u64,
    v_product: &BigUint,
    k2: u32,
) -> Option<BigUint> {
    debug_assert!(matches!(q, 3 | 5 | 17));
    assert!(k2 > 1);
    let e = match n {
        ExtExp::Finite(n) => n.min(100),
        ExtExp::Inf => n_min.min(100),
    };
    let sigma = sigma_pp(&BigUint::from(q), e);
    let quotient = &sigma / v_product;
    if quotient <= BigUint::one() {
        return None;
    }
    let root = nth_root_floor(&quotient, k2 - 1);
    let bound = root.min(divisor_cap_value(q));
    if bound <= BigUint::one() {
        None
    } else {
        Some(bound)
    }
}

/// Sharper variant available once the smallest unknown prime is capped by P
/// and k₂ > 2: divide P out and take the (k₂−2)-th root.
pub fn large_divisor_bound_improved(
    q: u64,
    n: ExtExp,
    n_min: u64,
    v_product: &BigUint,
    k2: u32,
    p_cap: &BigUint,
) -> Option<BigUint> {
    debug_assert!(matches!(q, 3 | 5 | 17));
    assert!(k2 > 2);
    let e = match n {
        ExtExp::Finite(n) => n.min(100),
        ExtExp::Inf => n_min.min(100),
    };
    let sigma = sigma_pp(&BigUint::from(q), e);
    let quotient = &sigma / (v_product * p_cap);
    if quotient <= BigUint::one() {
        return None;
    }
    let root = nth_root_floor(&quotient, k2 - 2);
    let bound = root.min(divisor_cap_value(q));
    if bound <= BigUint::one() {
        None
    } else {
        Some(bound)
    }
}

/// Startup verification: every table row's factor is (probable) prime,
/// divides q^(o_p(q)) − 1 with the order computed by factoring p − 1, and
/// the pair really satisfies q^(p−1) ≡ 1 (mod p²).
pub fn verify_wieferich_table(db: &FactorDb) -> Result<()> {
    for (q, p, f) in WIEFERICH_TABLE.iter() {
        let qb = BigUint::from(*q);
        if db.is_prime(p) == Primality::Composite {
            return Err(Error::TableVerification(format!("{p} is not prime")));
        }
        if qb.modpow(&(p - 1u32), &(p * p)) != BigUint::one() {
            return Err(Error::TableVerification(format!(
                "{q}^(p-1) != 1 mod p^2 for p={p}"
            )));
        }
        if db.is_prime(f) == Primality::Composite {
            return Err(Error::TableVerification(format!(
                "large factor {f} for (q={q}, p={p}) is not prime"
            )));
        }
        let order = crate::arith::mult_order(&qb, p, db)?;
        if qb.modpow(&order, f) != BigUint::one() {
            return Err(Error::TableVerification(format!(
                "{f} does not divide {q}^{order} - 1"
            )));
        }
        let floor = if *q == 17 {
            BigUint::from(10u32).pow(11)
        } else {
            BigUint::from(10u32).pow(13)
        };
        if f <= &floor {
            return Err(Error::TableVerification(format!(
                "large factor {f} for (q={q}, p={p}) is under the advertised floor"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{sieve, sigma_valuation};

    fn b(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn fermat_valuation_examples() {
        assert_eq!(fermat_valuation(5, &b(13), 1, true), 0);
        assert_eq!(fermat_valuation(3, &b(5), 1, true), 1);
        assert_eq!(fermat_valuation(5, &b(11), 4, false), 1);
    }

    #[test]
    fn fermat_valuation_matches_order_trichotomy() {
        for q in [3u64, 5, 17] {
            for p in sieve(200).into_iter().filter(|&p| p >= 3 && p != q) {
                let pb = b(p);
                for a in 1..=30u64 {
                    let special = a % 4 == 1;
                    if !special && a % 2 == 1 {
                        continue; // inadmissible parity
                    }
                    assert_eq!(
                        fermat_valuation(q, &pb, a, special),
                        sigma_valuation(q, &pb, a).unwrap(),
                        "q={q} p={p} a={a}"
                    );
                }
            }
        }
    }

    #[test]
    fn forcing_examples() {
        let ctx = ForcingContext {
            q: 3,
            n: 12,
            b: 0,
            known_congruent: 1,
            component_congruent: 1,
            unknown_count: 2,
        };
        let rep = special_forcing(&ctx, &[]).unwrap();
        assert_eq!(rep.excess, 8);
        assert!(rep.special_in_unknown_component);
        assert!(rep.special_is_unknown_prime);
        assert_eq!(rep.valuation_floor, 10);

        let ctx = ForcingContext {
            q: 3,
            n: 5,
            b: 0,
            known_congruent: 2,
            component_congruent: 0,
            unknown_count: 3,
        };
        assert!(special_forcing(&ctx, &[]).is_none());
    }

    #[test]
    fn forcing_side_condition_blocks_prime_level() {
        // a known prime ≡ 1 (mod 4) that is ≡ −1 (mod q^τ) blocks the
        // prime-level conclusion but not the component-level one
        let ctx = ForcingContext {
            q: 3,
            n: 7,
            b: 0,
            known_congruent: 0,
            component_congruent: 0,
            unknown_count: 1,
        };
        // τ = 7 - (0-0+1)(0+1-1) = 7
        let blocker = b(3u64.pow(7) - 1); // ≡ −1 mod 3^7, and ≡ 1 mod 4? 2186 is even
        // pick p ≡ 1 mod 4 with p ≡ −1 mod 3^7: 3^7·k − 1 ≡ 1 (mod 4)
        let mut p = 3u64.pow(7) - 1;
        while p % 4 != 1 {
            p += 3u64.pow(7);
        }
        let _ = blocker;
        let rep = special_forcing(&ctx, &[b(p)]).unwrap();
        assert!(rep.special_in_unknown_component);
        assert!(!rep.special_is_unknown_prime);
        let rep = special_forcing(&ctx, &[b(13)]).unwrap();
        assert!(rep.special_is_unknown_prime);
        assert_eq!(rep.valuation_floor, 7);
    }

    #[test]
    fn tau_prime_formula_regression() {
        // recompute τ' from the raw formula across a small grid
        for n in 3..40i64 {
            for k1p in 0..3i64 {
                for l1p in 0..=k1p {
                    for k2 in 1..4i64 {
                        let ctx = ForcingContext {
                            q: 5,
                            n: n as u64,
                            b: 1,
                            known_congruent: k1p as u32,
                            component_congruent: l1p as u32,
                            unknown_count: k2 as u32,
                        };
                        if let Some(rep) = special_forcing(&ctx, &[]) {
                            let tau = n - 1 - (k1p - l1p + k2) * (k1p + k2 - 1);
                            assert_eq!(rep.excess, tau);
                            let tp = n - 1
                                - (k1p - l1p + k2 - 1) * (k1p + k2 - 2)
                                - (k1p + k2 - 1).div_euclid(2);
                            assert_eq!(rep.valuation_floor, tp.max(1) as u64);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn exclusion_boundary() {
        assert!(excluded_by_valuation(8, 3));
        assert!(!excluded_by_valuation(9, 3));
        assert!(!excluded_by_valuation(100, 10));
    }

    #[test]
    fn wieferich_lookup_examples() {
        assert_eq!(
            wieferich_lookup(3, &b(1006003)),
            WieferichEntry::LargeFactor("154680726732318637".parse().unwrap())
        );
        assert_eq!(wieferich_lookup(3, &b(11)), WieferichEntry::Exception);
        assert_eq!(
            wieferich_lookup(17, &b(46021)),
            WieferichEntry::LargeFactor("1365581260423071390161".parse().unwrap())
        );
        assert_eq!(wieferich_lookup(5, &b(7)), WieferichEntry::NotInTable);
    }

    #[test]
    fn wieferich_table_verifies() {
        let db = FactorDb::in_memory();
        verify_wieferich_table(&db).unwrap();
    }

    #[test]
    fn divisor_cap_examples() {
        let db = FactorDb::in_memory();
        // order of 3 mod 11 is 5 (odd, admissible); 3^5−1 = 242 = 2·11^2
        let cap = known_divisor_cap(&b(11), 3, false, false, false, &db).unwrap();
        assert_eq!(cap, 3);
        // an even order that is not ≡ 2 mod 4 is never admissible: o_5(3)=4
        let cap = known_divisor_cap(&b(5), 3, false, false, false, &db).unwrap();
        assert_eq!(cap, 0);
        // order 1 gives s = 0 and the floor of the formula kicks in:
        // 13 ≡ 1 (mod 3), so s = v_3(12) - v_3(12) = 0, t = 5, cap = 4
        let cap = known_divisor_cap(&b(3), 13, false, true, false, &db).unwrap();
        assert_eq!(cap, 4);
    }

    #[test]
    fn large_divisor_bound_examples() {
        // huge exponent, V = 1, k2 = 2: the published cap dominates
        let v = BigUint::one();
        let bound = large_divisor_bound(3, ExtExp::Finite(500), 0, &v, 2).unwrap();
        assert_eq!(bound, BigUint::from(10u32).pow(13));
        let bound = large_divisor_bound(17, ExtExp::Finite(500), 0, &v, 2).unwrap();
        assert_eq!(bound, BigUint::from(10u32).pow(11));
        // quotient below 1: no bound
        let huge = BigUint::from(10u32).pow(60);
        assert!(large_divisor_bound(3, ExtExp::Finite(10), 0, &huge, 2).is_none());
        // monotone non-increasing in V
        let b1 = large_divisor_bound(3, ExtExp::Finite(40), 0, &BigUint::one(), 3).unwrap();
        let b2 = large_divisor_bound(3, ExtExp::Finite(40), 0, &b(1000), 3).unwrap();
        assert!(b2 <= b1);
    }

    #[test]
    fn improved_bound_examples() {
        let v = BigUint::one();
        // k2 = 3: exponent 1/(k2-2) = 1, so the bound is σ/(V·P) capped
        let p_cap = b(1000);
        let got = large_divisor_bound_improved(3, ExtExp::Finite(30), 0, &v, 3, &p_cap).unwrap();
        let direct = sigma_pp(&b(3), 30) / &p_cap;
        assert_eq!(got, direct.min(BigUint::from(10u32).pow(13)));
        // degenerate V = P = 1 is at least the plain bound
        let plain = large_divisor_bound(3, ExtExp::Finite(30), 0, &v, 3).unwrap();
        let improved =
            large_divisor_bound_improved(3, ExtExp::Finite(30), 0, &v, 3, &BigUint::one())
                .unwrap();
        assert!(improved >= plain);
        // σ term uses the smaller of n and 100
        let b_n = large_divisor_bound_improved(3, ExtExp::Finite(500), 0, &v, 4, &p_cap);
        let b_100 = large_divisor_bound_improved(3, ExtExp::Finite(100), 0, &v, 4, &p_cap);
        assert_eq!(b_n, b_100);
    }

    #[test]
    fn bounds_never_exceed_caps() {
        let v = BigUint::one();
        for q in [3u64, 5, 17] {
            for n in [10u64, 50, 200] {
                if let Some(bd) = large_divisor_bound(q, ExtExp::Finite(n), 0, &v, 2) {
                    assert!(bd <= divisor_cap_value(q));
                }
            }
        }
    }
}
