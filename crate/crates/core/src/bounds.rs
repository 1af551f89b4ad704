//! Abundance and deficiency bounds on the smallest unknown prime.
//!
//! The lower bound inverts Π/(2−Π) from the exact abundancy product of the
//! known part; the upper bound minimizes Δ_u(k₂−u)/(2−Δ_u)+1 over the
//! admissible large-prime floors. Everything is exact rational arithmetic.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;

use crate::arith::{sigma_minus_one, ExtExp};

/// One known prime as the bound machinery sees it.
///
/// `exp` is the known exponent when `component_known`, otherwise the minimal
/// admissible exponent for an off or infinite prime (a certified lower bound
/// on the true exponent).
#[derive(Debug, Clone)]
pub struct BoundsComponent {
    pub prime: BigUint,
    pub exp: u64,
    pub component_known: bool,
}

/// Strict lower bounds on the largest unknown primes, strongest first.
#[derive(Debug, Clone, Default)]
pub struct LargePrimeFloors {
    pub floors: Vec<BigUint>,
}

impl LargePrimeFloors {
    /// Build from the configured positional floors, discounting positions
    /// that could already be occupied by a known prime. Known primes are
    /// consumed greedily from the largest down: a known prime exceeding a
    /// positional floor may sit in that position, so the guarantee no longer
    /// applies to an unknown prime.
    pub fn from_config(config_floors: &[BigUint], knowns: &[BigUint]) -> Self {
        let mut sorted: Vec<&BigUint> = knowns.iter().collect();
        sorted.sort();
        sorted.reverse();
        let mut ki = 0;
        let mut floors = Vec::new();
        for g in config_floors {
            if g <= &BigUint::one() {
                continue;
            }
            if ki < sorted.len() && sorted[ki] > g {
                ki += 1;
            } else {
                floors.push(g.clone());
            }
        }
        LargePrimeFloors { floors }
    }

    /// Fold in lower bounds on pairwise-distinct unknown primes derived from
    /// the forcing machinery; position j keeps the larger of the two claims.
    pub fn supersede(&mut self, guarantees: &[BigUint]) {
        let mut g: Vec<&BigUint> = guarantees.iter().filter(|v| **v > BigUint::one()).collect();
        g.sort();
        g.reverse();
        for (j, val) in g.iter().enumerate().take(3) {
            if j < self.floors.len() {
                if *val > &self.floors[j] {
                    self.floors[j] = (*val).clone();
                }
            } else {
                self.floors.push((*val).clone());
            }
        }
        // keep the list non-increasing
        for j in 1..self.floors.len() {
            if self.floors[j] > self.floors[j - 1] {
                self.floors[j] = self.floors[j - 1].clone();
            }
        }
    }

    pub fn len(&self) -> usize {
        self.floors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.floors.is_empty()
    }
}

fn two() -> BigRational {
    BigRational::from_integer(2.into())
}

/// Π: certified lower bound on σ₋₁ of the known part of N.
pub fn pi_product(comps: &[BoundsComponent]) -> BigRational {
    comps
        .iter()
        .fold(BigRational::one(), |acc, c| {
            acc * sigma_minus_one(&c.prime, ExtExp::Finite(c.exp))
        })
}

/// Verdict of the lower-bound computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LowerBound {
    /// Π > 2: the known part alone is abundant.
    Abundant,
    /// Π = 2 exactly: the minimal-exponent completion is perfect.
    Perfect,
    /// The smallest unknown prime is ≥ this value.
    Bound(BigRational),
}

/// Lower bound on the smallest unknown prime from the deficiency of the
/// known part.
pub fn lower_bound_smallest_unknown(comps: &[BoundsComponent]) -> LowerBound {
    let pi = pi_product(comps);
    let two = two();
    match pi.cmp(&two) {
        std::cmp::Ordering::Greater => LowerBound::Abundant,
        std::cmp::Ordering::Equal => LowerBound::Perfect,
        std::cmp::Ordering::Less => LowerBound::Bound(&pi / (two - &pi)),
    }
}

/// Δ_u: upper estimate of σ₋₁ over known components, limit values for known
/// primes without known component, and the top u large-prime floors.
pub fn delta_u(comps: &[BoundsComponent], floors: &LargePrimeFloors, u: usize) -> BigRational {
    assert!(u <= floors.len());
    let mut d = comps.iter().fold(BigRational::one(), |acc, c| {
        if c.component_known {
            acc * sigma_minus_one(&c.prime, ExtExp::Finite(c.exp))
        } else {
            acc * sigma_minus_one(&c.prime, ExtExp::Inf)
        }
    });
    for p in floors.floors.iter().take(u) {
        d *= BigRational::new(
            BigInt::from(p.clone()),
            BigInt::from(p - 1u32),
        );
    }
    d
}

/// Outcome of the upper-bound minimization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpperBound {
    pub value: BigRational,
    pub u_used: usize,
}

/// Upper bound on the smallest unknown prime: the minimum over u of
/// Δ_u(k₂−u)/(2−Δ_u) + 1, restricted to Δ_u < 2 (strict). None when no u
/// yields a bound.
pub fn upper_bound_smallest_unknown(
    comps: &[BoundsComponent],
    floors: &LargePrimeFloors,
    k2: u32,
    max_u: u32,
) -> Option<UpperBound> {
    assert!(k2 >= 1);
    let two = two();
    let v_cap = floors.len().min(max_u as usize).min(k2 as usize - 1);
    let mut best: Option<UpperBound> = None;
    for u in 0..=v_cap {
        let d = delta_u(comps, floors, u);
        if d >= two {
            continue;
        }
        let val = &d * BigRational::from_integer((k2 as i64 - u as i64).into())
            / (&two - &d)
            + BigRational::one();
        if best.as_ref().map(|b| val < b.value).unwrap_or(true) {
            best = Some(UpperBound { value: val, u_used: u });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn comp(p: u64, e: u64, known: bool) -> BoundsComponent {
        BoundsComponent {
            prime: b(p),
            exp: e,
            component_known: known,
        }
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn pi_product_examples() {
        let s = [comp(3, 2, true), comp(13, 1, true)];
        assert_eq!(pi_product(&s), rat(14, 9));
        let s = [comp(3, 2, true), comp(13, 1, true), comp(7, 4, false)];
        assert_eq!(pi_product(&s), rat(14, 9) * rat(2801, 2401));
        let s = [comp(3, 2, true)];
        assert_eq!(pi_product(&s), rat(13, 9));
    }

    #[test]
    fn lower_bound_print_out_values() {
        // {3^2, 13^1, 7^inf min 4}, k = 5: floor 9
        let s = [comp(3, 2, true), comp(13, 1, true), comp(7, 4, false)];
        match lower_bound_smallest_unknown(&s) {
            LowerBound::Bound(v) => {
                assert_eq!(v, rat(39214, 4004));
                assert_eq!(v.floor(), rat(9, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
        // + 11^inf min 2: floor 374
        let s = [
            comp(3, 2, true),
            comp(13, 1, true),
            comp(7, 4, false),
            comp(11, 2, false),
        ];
        match lower_bound_smallest_unknown(&s) {
            LowerBound::Bound(v) => assert_eq!(v.floor(), rat(374, 1)),
            other => panic!("unexpected {other:?}"),
        }
        // abundant state
        let s = [comp(3, 2, true), comp(5, 2, true), comp(7, 2, true)];
        assert_eq!(pi_product(&s), rat(22971, 11025));
        assert_eq!(lower_bound_smallest_unknown(&s), LowerBound::Abundant);
    }

    #[test]
    fn delta_print_out_values() {
        let floors = LargePrimeFloors::default();
        let s = [comp(3, 2, true), comp(13, 1, true), comp(7, 0, false)];
        // exp on a non-known component is ignored by delta
        assert_eq!(delta_u(&s, &floors, 0), rat(49, 27));
        let s = [
            comp(3, 2, true),
            comp(13, 1, true),
            comp(7, 0, false),
            comp(11, 0, false),
        ];
        assert_eq!(delta_u(&s, &floors, 0), rat(539, 270));
        // all components known, u = 0: equals pi
        let s = [comp(3, 2, true), comp(13, 1, true)];
        assert_eq!(delta_u(&s, &floors, 0), pi_product(&s));
    }

    #[test]
    fn upper_bound_print_out_values() {
        let floors = LargePrimeFloors::default();
        // {3^2,13^1,7^inf}, k=5 -> k2=2: 98/5 + 1 = 20.6 -> ceil 21
        let s = [comp(3, 2, true), comp(13, 1, true), comp(7, 4, false)];
        let ub = upper_bound_smallest_unknown(&s, &floors, 2, 0).unwrap();
        assert_eq!(ub.value, rat(98, 5) + BigRational::one());
        assert_eq!(ub.value.ceil(), rat(21, 1));
        // {3^2,13^1,7^2,19^inf}, k=5 -> k2=1: 2527/119 + 1 -> ceil 23
        let s = [
            comp(3, 2, true),
            comp(13, 1, true),
            comp(7, 2, true),
            comp(19, 2, false),
        ];
        let ub = upper_bound_smallest_unknown(&s, &floors, 1, 0).unwrap();
        assert_eq!(ub.value, rat(2527, 119) + BigRational::one());
        assert_eq!(ub.value.ceil(), rat(23, 1));
        // {3^2,13^1,7^inf,11^inf}, k2=1: 539 + 1 = 540
        let s = [
            comp(3, 2, true),
            comp(13, 1, true),
            comp(7, 4, false),
            comp(11, 2, false),
        ];
        let ub = upper_bound_smallest_unknown(&s, &floors, 1, 0).unwrap();
        assert_eq!(ub.value, rat(540, 1));
    }

    #[test]
    fn upper_bound_none_when_all_delta_abundant() {
        let floors = LargePrimeFloors::default();
        let s = [comp(3, 2, true), comp(5, 2, true), comp(7, 2, true)];
        assert!(upper_bound_smallest_unknown(&s, &floors, 1, 3).is_none());
    }

    #[test]
    fn inverting_the_lower_bound_is_exact() {
        // at L = Π/(2−Π) exactly, Π·(L+1)/L = 2
        let states: Vec<Vec<BoundsComponent>> = vec![
            vec![comp(3, 2, true)],
            vec![comp(3, 2, true), comp(13, 1, true), comp(7, 4, false)],
            vec![comp(5, 1, true), comp(7, 2, false), comp(11, 2, false)],
            vec![comp(3, 42, false), comp(13, 18, false)],
        ];
        for s in states {
            if let LowerBound::Bound(l) = lower_bound_smallest_unknown(&s) {
                let pi = pi_product(&s);
                let lhs = pi * (&l + BigRational::one()) / &l;
                assert_eq!(lhs, two());
            }
        }
    }

    #[test]
    fn pi_is_monotone_in_primes_and_exponents() {
        let base = vec![comp(3, 2, true), comp(13, 1, true)];
        let pi0 = pi_product(&base);
        assert!(pi0 < two());
        let mut more = base.clone();
        more.push(comp(7, 2, false));
        assert!(pi_product(&more) > pi0);
        let mut raised = base.clone();
        raised[0].exp = 4;
        assert!(pi_product(&raised) > pi0);
    }

    #[test]
    fn floors_absorption_matches_known_primes() {
        let cfg = [b(10_000_000), b(10_000), b(100)];
        // no large knowns: all three floors stand
        let f = LargePrimeFloors::from_config(&cfg, &[b(3), b(13)]);
        assert_eq!(f.floors, vec![b(10_000_000), b(10_000), b(100)]);
        // a known above 1e7 absorbs the first position
        let f = LargePrimeFloors::from_config(&cfg, &[b(20_000_000), b(3)]);
        assert_eq!(f.floors, vec![b(10_000), b(100)]);
        // knowns above 1e7 and above 1e4 leave only the 100 floor
        let f = LargePrimeFloors::from_config(&cfg, &[b(20_000_000), b(65537)]);
        assert_eq!(f.floors, vec![b(100)]);
    }

    #[test]
    fn floors_superseding_keeps_order() {
        let cfg = [b(10_000_000), b(10_000), b(100)];
        let mut f = LargePrimeFloors::from_config(&cfg, &[]);
        f.supersede(&[b(500), b(1_000_000_000_000)]);
        assert_eq!(f.floors, vec![b(1_000_000_000_000), b(10_000), b(100)]);
    }

    #[test]
    fn extra_floor_weakly_improves_bound_when_large() {
        // adding a floor P ≥ current bound value never worsens the bound
        let s = [comp(3, 2, true), comp(13, 1, true), comp(7, 4, false)];
        let empty = LargePrimeFloors::default();
        let ub0 = upper_bound_smallest_unknown(&s, &empty, 3, 0).unwrap();
        let big = LargePrimeFloors {
            floors: vec![b(10_000_000)],
        };
        let ub1 = upper_bound_smallest_unknown(&s, &big, 3, 3).unwrap();
        assert!(ub1.value <= ub0.value);
    }

    #[test]
    fn bootstrap_empty_state_gives_k_plus_one() {
        let floors = LargePrimeFloors::default();
        for k in 1u32..=12 {
            let ub = upper_bound_smallest_unknown(&[], &floors, k, 0).unwrap();
            assert_eq!(ub.value, BigRational::from_integer((k as i64 + 1).into()));
        }
        match lower_bound_smallest_unknown(&[]) {
            LowerBound::Bound(v) => assert!(v.is_one()),
            other => panic!("unexpected {other:?}"),
        }
    }
}
