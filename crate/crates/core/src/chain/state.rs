//! One node of the factor-chain tree: the known components, their status,
//! the forced-multiplicity ledger, and the interval-selection floor.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;

use crate::bounds::BoundsComponent;
use crate::config::RunConfig;

/// Status of a known prime on the current branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComponentStatus {
    /// component pinned: p^exp || N; `special` marks the odd exponent slot
    Known { exp: u64, special: bool },
    /// component exceeds the branching bound; exact exponent open
    Infinite,
    /// prime known to divide N, branching not yet started
    Off,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub prime: BigUint,
    pub status: ComponentStatus,
}

/// Search node. States are values: branching clones and mutates, sibling
/// subtrees never share.
#[derive(Debug, Clone)]
pub struct SearchState {
    /// target count of distinct prime factors
    pub target_k: u32,
    /// known primes in discovery order
    pub components: Vec<Component>,
    /// prime → copies forced into σ(N) by σ of the known components
    pub ledger: BTreeMap<BigUint, u64>,
    /// largest prime selected as "the smallest unknown"; later unknowns and
    /// σ-produced primes must exceed it
    pub interval_floor: Option<BigUint>,
}

impl SearchState {
    pub fn root(target_k: u32) -> Self {
        SearchState {
            target_k,
            components: Vec::new(),
            ledger: BTreeMap::new(),
            interval_floor: None,
        }
    }

    /// k₁: distinct known primes.
    pub fn known_count(&self) -> u32 {
        self.components.len() as u32
    }

    /// ℓ₁: known prime components.
    pub fn component_count(&self) -> u32 {
        self.components
            .iter()
            .filter(|c| matches!(c.status, ComponentStatus::Known { .. }))
            .count() as u32
    }

    /// k₂ = k − k₁ (zero once the known primes overflow the target).
    pub fn unknown_count(&self) -> u32 {
        self.target_k.saturating_sub(self.known_count())
    }

    pub fn find(&self, p: &BigUint) -> Option<&Component> {
        self.components.iter().find(|c| &c.prime == p)
    }

    pub fn is_known(&self, p: &BigUint) -> bool {
        self.find(p).is_some()
    }

    pub fn special_claimed(&self) -> Option<&BigUint> {
        self.components.iter().find_map(|c| match c.status {
            ComponentStatus::Known { special: true, .. } => Some(&c.prime),
            _ => None,
        })
    }

    pub fn off_primes(&self) -> impl Iterator<Item = &BigUint> {
        self.components.iter().filter_map(|c| {
            matches!(c.status, ComponentStatus::Off).then_some(&c.prime)
        })
    }

    pub fn smallest_off(&self) -> Option<&BigUint> {
        self.off_primes().min()
    }

    pub fn ledger_count(&self, p: &BigUint) -> u64 {
        self.ledger.get(p).copied().unwrap_or(0)
    }

    /// May prime p still claim the special slot on this branch?
    pub fn special_slot_open_for(&self, p: &BigUint) -> bool {
        self.special_claimed().is_none() && (p % 4u32) == BigUint::one()
    }

    /// Is the exponent a admissible for p's component here? Even always;
    /// odd only as the special exponent, which must be ≡ 1 (mod 4).
    pub fn exponent_admissible(&self, p: &BigUint, a: u64) -> bool {
        if a == 0 {
            return false;
        }
        if a.is_multiple_of(2) {
            true
        } else {
            a % 4 == 1 && self.special_slot_open_for(p)
        }
    }

    /// Minimal exponent the component of p can have, given its status: the
    /// certified lower bound used by the Π product.
    pub fn min_exponent(&self, comp: &Component, cfg: &RunConfig) -> u64 {
        match comp.status {
            ComponentStatus::Known { exp, .. } => exp,
            ComponentStatus::Off => {
                if self.special_slot_open_for(&comp.prime) {
                    1
                } else {
                    2
                }
            }
            ComponentStatus::Infinite => {
                let bound = cfg.component_bound(&comp.prime);
                let mut a = 0u64;
                let mut power = BigUint::one();
                while &power <= bound {
                    power *= &comp.prime;
                    a += 1;
                }
                // smallest admissible exponent at or above a
                while !self.exponent_admissible(&comp.prime, a) {
                    a += 1;
                }
                a
            }
        }
    }

    /// The view the bound machinery works on.
    pub fn bounds_view(&self, cfg: &RunConfig) -> Vec<BoundsComponent> {
        self.components
            .iter()
            .map(|c| BoundsComponent {
                prime: c.prime.clone(),
                exp: self.min_exponent(c, cfg),
                component_known: matches!(c.status, ComponentStatus::Known { .. }),
            })
            .collect()
    }

    pub fn known_values(&self) -> Vec<BigUint> {
        self.components.iter().map(|c| c.prime.clone()).collect()
    }

    /// Structural invariants; cheap enough to assert after every transition.
    pub fn check_invariants(&self) {
        let k1 = self.known_count();
        let l1 = self.component_count();
        assert!(l1 <= k1);
        let specials = self
            .components
            .iter()
            .filter(|c| matches!(c.status, ComponentStatus::Known { special: true, .. }))
            .count();
        assert!(specials <= 1, "at most one special component");
        for c in &self.components {
            if let ComponentStatus::Known { exp, special } = c.status {
                if special {
                    assert!(exp % 4 == 1, "special exponent must be 1 mod 4");
                    assert!((&c.prime % 4u32).is_one(), "special prime must be 1 mod 4");
                } else {
                    assert!(exp % 2 == 0, "non-special exponents are even");
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn state_with(comps: Vec<(u64, ComponentStatus)>) -> SearchState {
        SearchState {
            target_k: 5,
            components: comps
                .into_iter()
                .map(|(p, status)| Component {
                    prime: b(p),
                    status,
                })
                .collect(),
            ledger: BTreeMap::new(),
            interval_floor: None,
        }
    }

    #[test]
    fn counters() {
        let s = state_with(vec![
            (3, ComponentStatus::Known { exp: 2, special: false }),
            (13, ComponentStatus::Known { exp: 1, special: true }),
            (7, ComponentStatus::Infinite),
            (19, ComponentStatus::Off),
        ]);
        assert_eq!(s.known_count(), 4);
        assert_eq!(s.component_count(), 2);
        assert_eq!(s.unknown_count(), 1);
        assert_eq!(s.special_claimed(), Some(&b(13)));
        assert_eq!(s.smallest_off(), Some(&b(19)));
        s.check_invariants();
    }

    #[test]
    fn min_exponent_rules() {
        let cfg = {
            let mut c = RunConfig::desk(5);
            c.b1 = b(50);
            c.b2 = b(50);
            c
        };
        // off prime, slot claimed: even minimum
        let s = state_with(vec![
            (13, ComponentStatus::Known { exp: 1, special: true }),
            (19, ComponentStatus::Off),
            (5, ComponentStatus::Off),
        ]);
        let c19 = s.find(&b(19)).unwrap();
        assert_eq!(s.min_exponent(c19, &cfg), 2);
        let c5 = s.find(&b(5)).unwrap();
        assert_eq!(s.min_exponent(c5, &cfg), 2);
        // slot open: a 1 mod 4 off prime may sit at exponent 1
        let s = state_with(vec![(5, ComponentStatus::Off)]);
        let c5 = s.find(&b(5)).unwrap();
        assert_eq!(s.min_exponent(c5, &cfg), 1);
        // infinite prime: smallest admissible exponent beyond the bound
        let s = state_with(vec![
            (13, ComponentStatus::Known { exp: 1, special: true }),
            (7, ComponentStatus::Infinite),
        ]);
        let c7 = s.find(&b(7)).unwrap();
        assert_eq!(s.min_exponent(c7, &cfg), 4); // 7^2 = 49 <= 50 < 7^4
        let s = state_with(vec![(19, ComponentStatus::Infinite)]);
        let c19 = s.find(&b(19)).unwrap();
        assert_eq!(s.min_exponent(c19, &cfg), 2); // 19^2 > 50 already
    }

    #[test]
    fn infinite_min_exponent_respects_special_slot() {
        let mut cfg = RunConfig::desk(8);
        cfg.b2 = BigUint::from(10u32).pow(30);
        // 65537 ≡ 1 mod 4 with slot open: 65537^7 > B but 7 ≡ 3 mod 4,
        // so the minimum admissible is 8
        let s = state_with(vec![(65537, ComponentStatus::Infinite)]);
        let c = s.find(&b(65537)).unwrap();
        assert_eq!(s.min_exponent(c, &cfg), 8);
        // 257 ≡ 1 mod 4, B1 = 10^20: 257^9 > 10^20 and 9 ≡ 1 mod 4
        let s = state_with(vec![(257, ComponentStatus::Infinite)]);
        let c = s.find(&b(257)).unwrap();
        assert_eq!(s.min_exponent(c, &cfg), 9);
    }

    #[test]
    fn exponent_admissibility() {
        let s = state_with(vec![]);
        assert!(s.exponent_admissible(&b(5), 1));
        assert!(s.exponent_admissible(&b(5), 2));
        assert!(!s.exponent_admissible(&b(5), 3));
        assert!(s.exponent_admissible(&b(5), 5));
        assert!(!s.exponent_admissible(&b(7), 1)); // 7 ≡ 3 mod 4
        assert!(s.exponent_admissible(&b(7), 2));
        let s = state_with(vec![(13, ComponentStatus::Known { exp: 1, special: true })]);
        assert!(!s.exponent_admissible(&b(5), 1)); // slot taken
    }
}
