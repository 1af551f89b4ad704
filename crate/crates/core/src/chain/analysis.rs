//! Per-node analysis: exact interval for the smallest unknown prime, forcing
//! facts from high prime powers, and the contradiction verdict, evaluated in
//! a fixed order.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{self, ExtExp};
use crate::bounds::{self, LargePrimeFloors, LowerBound, UpperBound};
use crate::chain::state::{ComponentStatus, SearchState};
use crate::config::RunConfig;
use crate::factordb::{FactorDb, Primality};
use crate::nonfermat::CertStore;
use crate::{fermat, nonfermat, Result};

/// Catalogue of branch-closing contradictions, plus the fail-closed marker
/// for branches the run could not resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contradiction {
    /// too many distinct known primes
    MT,
    /// too many forced copies of a prime with known component
    MS,
    /// an off prime undercuts an interval-selected prime
    S,
    /// the known part is already abundant
    A,
    /// all primes known and the limit product is deficient
    D,
    /// the special prime is claimed but forced into an unknown component
    F,
    /// no admissible prime in the interval
    N,
    /// interval upper bound beaten by the forced special prime
    SF1,
    /// interval upper bound beaten by a forced σ(q^n) divisor, Fermat q
    SF2,
    /// interval upper bound beaten by a forced non-congruent prime
    SNF1,
    /// interval upper bound beaten by a second forced divisor, q in {7,11,13}
    SNF2,
    P1Int,
    P2Int,
    P3Int,
    /// factorization or enumeration gave out; branch unresolved, run fails closed
    Roadblock,
}

impl std::fmt::Display for Contradiction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Contradiction::MT => "MT",
            Contradiction::MS => "MS",
            Contradiction::S => "S",
            Contradiction::A => "A",
            Contradiction::D => "D",
            Contradiction::F => "F",
            Contradiction::N => "N",
            Contradiction::SF1 => "SF1",
            Contradiction::SF2 => "SF2",
            Contradiction::SNF1 => "SNF1",
            Contradiction::SNF2 => "SNF2",
            Contradiction::P1Int => "P1Int",
            Contradiction::P2Int => "P2Int",
            Contradiction::P3Int => "P3Int",
            Contradiction::Roadblock => "ROADBLOCK",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Contradiction {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Ok(match s {
            "MT" => Contradiction::MT,
            "MS" => Contradiction::MS,
            "S" => Contradiction::S,
            "A" => Contradiction::A,
            "D" => Contradiction::D,
            "F" => Contradiction::F,
            "N" => Contradiction::N,
            "SF1" => Contradiction::SF1,
            "SF2" => Contradiction::SF2,
            "SNF1" => Contradiction::SNF1,
            "SNF2" => Contradiction::SNF2,
            "P1Int" => Contradiction::P1Int,
            "P2Int" => Contradiction::P2Int,
            "P3Int" => Contradiction::P3Int,
            "ROADBLOCK" => Contradiction::Roadblock,
            _ => return Err(()),
        })
    }
}

/// Forcing facts derived for one Fermat prime q on the branch.
#[derive(Debug, Clone)]
pub struct FermatFacts {
    pub q: u64,
    pub report: fermat::ForcingReport,
    /// lower bound on an unknown σ(q^n) divisor distinct from the special
    pub divisor_bound: Option<BigUint>,
}

/// Forcing facts for one odd prime q < 1000 on the branch.
#[derive(Debug, Clone)]
pub struct NonFermatFacts {
    pub q: u64,
    pub report: nonfermat::ForcingReport,
    /// lower bound on a second unknown divisor, distinct from the forced one
    pub divisor_bound: Option<BigUint>,
}

/// Everything the search driver needs to know about one state.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub k1: u32,
    pub l1: u32,
    pub k2: u32,
    pub pi: BigRational,
    pub lower: Option<BigRational>,
    pub upper: Option<UpperBound>,
    /// enumerated only when the state has no off primes and k₂ ≥ 1
    pub candidates: Option<Vec<BigUint>>,
    pub candidates_overflowed: bool,
    pub fermat_facts: Vec<FermatFacts>,
    pub nonfermat_facts: Vec<NonFermatFacts>,
    pub perfect_witness: Option<BigUint>,
    pub code: Option<Contradiction>,
}

/// σ(N') = 2N' verified exactly on a fully known state.
pub fn perfect_check(state: &SearchState) -> bool {
    let mut n = BigUint::one();
    let mut sigma = BigUint::one();
    for c in &state.components {
        match c.status {
            ComponentStatus::Known { exp, .. } => {
                n *= c.prime.pow(exp as u32);
                sigma *= arith::sigma_pp(&c.prime, exp);
            }
            _ => panic!("perfect_check requires all components known"),
        }
    }
    sigma == BigUint::from(2u32) * n
}

fn rational_of(n: &BigUint) -> BigRational {
    BigRational::from_integer(n.clone().into())
}

/// Exponent facts for q's component: the established divisor q^n | N.
fn established_exponent(state: &SearchState, cfg: &RunConfig, q: &BigUint) -> (ExtExp, u64) {
    let comp = state.find(q).expect("established_exponent on a known prime");
    match comp.status {
        ComponentStatus::Known { exp, .. } => (ExtExp::Finite(exp), exp),
        ComponentStatus::Infinite => (ExtExp::Inf, state.min_exponent(comp, cfg)),
        ComponentStatus::Off => {
            let m = state.min_exponent(comp, cfg);
            (ExtExp::Finite(m), m)
        }
    }
}

/// Forcing baseline b: copies of q issued by σ of the known components,
/// optionally (experimental) plus minimal-exponent contributions of the
/// unresolved components.
fn forcing_baseline(state: &SearchState, cfg: &RunConfig, q: u64) -> u64 {
    let mut b = state.ledger_count(&BigUint::from(q));
    if cfg.include_forced_minimums {
        // heuristic alternative: evaluate the unresolved components at their
        // minimal exponents (the valuation is not monotone in the exponent,
        // so this may overprune; off by default)
        for c in &state.components {
            if matches!(c.status, ComponentStatus::Known { .. }) || c.prime == BigUint::from(q) {
                continue;
            }
            let a = state.min_exponent(c, cfg);
            b += arith::sigma_valuation(q, &c.prime, a).unwrap_or(0);
        }
    }
    b
}

fn congruent_counts(state: &SearchState, q: u64) -> (u32, u32) {
    let qb = BigUint::from(q);
    let mut k1p = 0;
    let mut l1p = 0;
    for c in &state.components {
        if (&c.prime % &qb).is_one() {
            k1p += 1;
            if matches!(c.status, ComponentStatus::Known { .. }) {
                l1p += 1;
            }
        }
    }
    (k1p, l1p)
}

fn knowns_with_unknown_component(state: &SearchState) -> Vec<BigUint> {
    state
        .components
        .iter()
        .filter(|c| !matches!(c.status, ComponentStatus::Known { .. }))
        .map(|c| c.prime.clone())
        .collect()
}

/// Product of the per-known-prime caps on how many copies can divide σ(q^d).
fn divisor_cap_product(
    state: &SearchState,
    q: u64,
    db: &FactorDb,
) -> Result<BigUint> {
    let qb = BigUint::from(q);
    let q_comp = state.find(&qb);
    let q_is_special = matches!(
        q_comp.map(|c| &c.status),
        Some(ComponentStatus::Known { special: true, .. })
    );
    let q_mod4_is_1 = (&qb % 4u32).is_one();
    let claimed = state.special_claimed().is_some();
    let mut v = BigUint::one();
    for c in &state.components {
        if c.prime == qb {
            continue;
        }
        let cap = fermat::known_divisor_cap(&c.prime, q, q_is_special, q_mod4_is_1, claimed, db)?;
        if cap > 0 {
            v *= c.prime.pow(cap.min(u32::MAX as u64) as u32);
        }
    }
    Ok(v)
}

fn fermat_analysis(
    state: &SearchState,
    cfg: &RunConfig,
    db: &FactorDb,
    lower: Option<&BigRational>,
    upper_cap: Option<&BigUint>,
) -> Result<Vec<FermatFacts>> {
    let mut out = Vec::new();
    let k2 = state.unknown_count();
    for &q in fermat::FERMAT_PRIMES.iter() {
        let qb = BigUint::from(q);
        if !state.is_known(&qb) {
            continue;
        }
        let (n_ext, n_min) = established_exponent(state, cfg, &qb);
        let (k1p, l1p) = congruent_counts(state, q);
        let ctx = fermat::ForcingContext {
            q,
            n: n_min,
            b: forcing_baseline(state, cfg, q),
            known_congruent: k1p,
            component_congruent: l1p,
            unknown_count: k2,
        };
        let report = match fermat::special_forcing(&ctx, &knowns_with_unknown_component(state)) {
            Some(r) => r,
            None => continue,
        };
        let mut divisor_bound = None;
        // the σ(q^n) divisor bound needs: the special prime unknown and
        // excluded from σ(q^n), at least two unknowns, all of them > 100
        let unknowns_over_100 = lower
            .map(|l| *l >= BigRational::from_integer(100.into()))
            .unwrap_or(false);
        if matches!(q, 3 | 5 | 17)
            && report.special_is_unknown_prime
            && fermat::excluded_by_valuation(n_min, report.valuation_floor)
            && k2 > 1
            && unknowns_over_100
        {
            let v = divisor_cap_product(state, q, db)?;
            divisor_bound = fermat::large_divisor_bound(q, n_ext, n_min, &v, k2);
            if let (Some(p_cap), true) = (upper_cap, k2 > 2) {
                let improved =
                    fermat::large_divisor_bound_improved(q, n_ext, n_min, &v, k2, p_cap);
                divisor_bound = match (divisor_bound, improved) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            }
        }
        out.push(FermatFacts {
            q,
            report,
            divisor_bound,
        });
    }
    Ok(out)
}

fn nonfermat_analysis(
    state: &SearchState,
    cfg: &RunConfig,
    db: &FactorDb,
    certs: &CertStore,
    lower: Option<&BigRational>,
    upper_cap: Option<&BigUint>,
) -> Result<Vec<NonFermatFacts>> {
    let mut out = Vec::new();
    let k2 = state.unknown_count();
    if k2 == 0 {
        return Ok(out);
    }
    let claimed = state.special_claimed().is_some();
    let search_cfg = cfg.search_config();
    for c in &state.components {
        let q = match c.prime.to_u64() {
            Some(q) if q >= 3 && q < cfg.q_max => q,
            _ => continue,
        };
        let qb = BigUint::from(q);
        let (_, n_min) = established_exponent(state, cfg, &qb);
        let (k1p, l1p) = congruent_counts(state, q);
        let mut t_members = Vec::new();
        for other in &state.components {
            if other.prime == qb || matches!(other.status, ComponentStatus::Known { .. }) {
                continue;
            }
            let residue = &other.prime % &qb;
            if residue.is_one() || residue.is_zero() {
                continue;
            }
            let (order, valuation) = db.order_and_valuation(q, &other.prime);
            let even = order % 2 == 0;
            let div4 = order % 4 == 0;
            let base_mod4_is_1 = (&other.prime % 4u32).is_one();
            if !fermat::admissible_order(even, div4, false, base_mod4_is_1, claimed) {
                continue;
            }
            t_members.push(nonfermat::TMember {
                prime: other.prime.clone(),
                order,
                valuation,
                order_sigma0: arith::sigma0(order),
            });
        }
        let ctx = nonfermat::ForcingContext {
            q,
            n: n_min,
            b: forcing_baseline(state, cfg, q),
            known_congruent: k1p,
            component_congruent: l1p,
            unknown_count: k2,
            t_members,
        };
        let cert = certs.ensure(q, &search_cfg, db)?;
        let report = match nonfermat::unknown_prime_forcing(&ctx, &cert)? {
            Some(r) => r,
            None => continue,
        };
        let mut divisor_bound = None;
        let unknowns_over_100 = lower
            .map(|l| *l >= BigRational::from_integer(100.into()))
            .unwrap_or(false);
        if matches!(q, 7 | 11 | 13) && k2 > 1 && unknowns_over_100 && report.refined > 0 {
            let v = divisor_cap_product(state, q, db)?;
            divisor_bound =
                nonfermat::large_divisor_bound(q, report.refined, &v, k2, &cert, None);
            if let (Some(p_cap), true) = (upper_cap, k2 > 2) {
                let improved = nonfermat::large_divisor_bound(
                    q,
                    report.refined,
                    &v,
                    k2,
                    &cert,
                    Some(p_cap),
                );
                divisor_bound = match (divisor_bound, improved) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            }
        }
        out.push(NonFermatFacts {
            q,
            report,
            divisor_bound,
        });
    }
    Ok(out)
}

/// Distinct-prime guarantees usable as positional floors: the strongest
/// single fact bounds the largest unknown; a same-q (special, divisor) or
/// (forced, second-divisor) pair bounds the two largest.
fn guarantees(fermat_facts: &[FermatFacts], nonfermat_facts: &[NonFermatFacts]) -> Vec<BigUint> {
    let mut best_single = BigUint::zero();
    let mut best_pair_min = BigUint::zero();
    for f in fermat_facts {
        if f.report.special_is_unknown_prime {
            best_single = best_single.max(f.report.special_floor.clone());
            if let Some(d) = &f.divisor_bound {
                best_single = best_single.max(d.clone());
                best_pair_min = best_pair_min.max(f.report.special_floor.clone().min(d.clone()));
            }
        }
    }
    for f in nonfermat_facts {
        best_single = best_single.max(f.report.floor.clone());
        if let Some(d) = &f.divisor_bound {
            best_single = best_single.max(d.clone());
            best_pair_min = best_pair_min.max(f.report.floor.clone().min(d.clone()));
        }
    }
    let mut g = Vec::new();
    if best_single > BigUint::one() {
        g.push(best_single);
    }
    if best_pair_min > BigUint::one() {
        g.push(best_pair_min);
    }
    g
}

/// Enumerate unknown-prime candidates in [lower, upper], excluding known
/// primes and anything at or below the interval floor.
fn enumerate_candidates(
    state: &SearchState,
    lower: &BigRational,
    upper: &BigRational,
    cap: u64,
    db: &FactorDb,
) -> (Vec<BigUint>, bool) {
    let mut lo = lower.ceil().to_integer().to_biguint().unwrap_or_default();
    if lo < BigUint::from(3u32) {
        lo = BigUint::from(3u32);
    }
    if let Some(fl) = &state.interval_floor {
        if lo <= *fl {
            lo = fl + 1u32;
        }
    }
    if upper.is_negative() {
        return (Vec::new(), false);
    }
    let hi = upper.floor().to_integer().to_biguint().unwrap_or_default();
    let mut out = Vec::new();
    if lo > hi {
        return (out, false);
    }
    // keep the scan odd
    if (&lo % 2u32).is_zero() {
        lo += 1u32;
    }
    let mut n = lo;
    let mut scanned = 0u64;
    while n <= hi {
        scanned += 1;
        if scanned > cap {
            return (out, true);
        }
        if !state.is_known(&n) && db.is_prime(&n) != Primality::Composite {
            out.push(n.clone());
        }
        n += 2u32;
    }
    (out, false)
}

fn exceeds_upper(bound: &BigUint, upper: &BigRational) -> bool {
    rational_of(bound) > *upper
}

/// Positional-floor contradiction conditions on the known-prime multiset.
fn positional_contradiction(
    state: &SearchState,
    upper: &BigRational,
    cfg: &RunConfig,
) -> Option<Contradiction> {
    // max_u = 0 reproduces the early implementation: intervals from Δ₀ only,
    // no positional-floor reasoning at all
    if cfg.bootstrap || cfg.max_u == 0 {
        return None;
    }
    let k = state.target_k;
    let k1 = state.known_count();
    let knowns = state.known_values();
    let p1 = &cfg.floors[0];
    let p2 = &cfg.floors[1];
    let p3 = &cfg.floors[2];
    let count_above = |bound: &BigUint| knowns.iter().filter(|p| *p > bound).count() as u32;
    let all_below = |bound: &BigUint| knowns.iter().all(|p| *p < *bound);
    let million = BigUint::from(10u32).pow(6);

    if k1 + 1 == k && all_below(p1) && exceeds_upper(p1, upper) {
        return Some(Contradiction::P1Int);
    }
    let p2_cond = (k1 + 2 == k && all_below(p2))
        || (k1 + 1 == k && count_above(p1) == 1 && count_above(p2) == 1);
    if p2_cond && exceeds_upper(p2, upper) {
        return Some(Contradiction::P2Int);
    }
    let p3_cond = (k1 + 3 == k && all_below(p3))
        || (k1 + 2 == k && count_above(p2) == 1 && count_above(p3) == 1)
        || (k1 + 1 == k
            && count_above(&million) >= 1
            && count_above(p2) >= 2
            && count_above(p3) == 2);
    if p3_cond && exceeds_upper(p3, upper) {
        return Some(Contradiction::P3Int);
    }
    None
}

/// Full analysis of one state, with the contradiction checks applied in the
/// catalogue order.
pub fn analyze(
    state: &SearchState,
    cfg: &RunConfig,
    db: &FactorDb,
    certs: &CertStore,
) -> Result<Analysis> {
    let k1 = state.known_count();
    let l1 = state.component_count();
    let k2 = state.unknown_count();
    let view = state.bounds_view(cfg);
    let pi = bounds::pi_product(&view);
    let two = BigRational::from_integer(2.into());

    let mut analysis = Analysis {
        k1,
        l1,
        k2,
        pi: pi.clone(),
        lower: None,
        upper: None,
        candidates: None,
        candidates_overflowed: false,
        fermat_facts: Vec::new(),
        nonfermat_facts: Vec::new(),
        perfect_witness: None,
        code: None,
    };

    // perfect-number check before any contradiction
    if k1 == state.target_k && l1 == k1 && perfect_check(state) {
        let witness = state
            .components
            .iter()
            .map(|c| match c.status {
                ComponentStatus::Known { exp, .. } => c.prime.pow(exp as u32),
                _ => unreachable!(),
            })
            .product::<BigUint>();
        analysis.perfect_witness = Some(witness);
        return Ok(analysis);
    }
    if pi == two {
        // the minimal-exponent completion is itself perfect
        let witness = view
            .iter()
            .map(|c| c.prime.pow(c.exp as u32))
            .product::<BigUint>();
        analysis.perfect_witness = Some(witness);
        return Ok(analysis);
    }

    if k1 > state.target_k {
        analysis.code = Some(Contradiction::MT);
        return Ok(analysis);
    }

    for c in &state.components {
        if let ComponentStatus::Known { exp, .. } = c.status {
            if state.ledger_count(&c.prime) > exp {
                analysis.code = Some(Contradiction::MS);
                return Ok(analysis);
            }
        }
    }

    if pi > two {
        analysis.code = Some(Contradiction::A);
        return Ok(analysis);
    }

    let floors_static = LargePrimeFloors::from_config(&cfg.effective_floors(), &state.known_values());
    if k2 == 0 {
        let delta0 = bounds::delta_u(&view, &floors_static, 0);
        if delta0 < two {
            analysis.code = Some(Contradiction::D);
            return Ok(analysis);
        }
        // the special slot can still conflict with forcing when every prime
        // is known but some components are not
        analysis.fermat_facts = fermat_analysis(state, cfg, db, None, None)?;
        if state.special_claimed().is_some()
            && analysis
                .fermat_facts
                .iter()
                .any(|f| f.report.special_in_unknown_component)
        {
            analysis.code = Some(Contradiction::F);
            return Ok(analysis);
        }
        // otherwise the exponent bound is too small to close this branch
        return Ok(analysis);
    }

    // lower bound (needed both for the interval and the forcing hypotheses)
    let lower = match bounds::lower_bound_smallest_unknown(&view) {
        LowerBound::Abundant => unreachable!("abundance already detected"),
        LowerBound::Perfect => unreachable!("perfection already detected"),
        LowerBound::Bound(l) => l,
    };
    analysis.lower = Some(lower.clone());

    // first-pass facts and floors, then one refinement pass with the upper
    // bound feeding the capped divisor variants
    let fermat_facts = fermat_analysis(state, cfg, db, Some(&lower), None)?;
    let nonfermat_facts = nonfermat_analysis(state, cfg, db, certs, Some(&lower), None)?;
    let mut floors = floors_static.clone();
    floors.supersede(&guarantees(&fermat_facts, &nonfermat_facts));
    let mut upper = bounds::upper_bound_smallest_unknown(&view, &floors, k2, cfg.max_u);

    if let Some(ub) = &upper {
        if k2 > 2 {
            let p_cap = ub.value.floor().to_integer().to_biguint().unwrap_or_default() + 1u32;
            let fermat_facts2 = fermat_analysis(state, cfg, db, Some(&lower), Some(&p_cap))?;
            let nonfermat_facts2 =
                nonfermat_analysis(state, cfg, db, certs, Some(&lower), Some(&p_cap))?;
            let mut floors2 = floors_static.clone();
            floors2.supersede(&guarantees(&fermat_facts2, &nonfermat_facts2));
            if let Some(ub2) = bounds::upper_bound_smallest_unknown(&view, &floors2, k2, cfg.max_u)
            {
                if ub2.value < ub.value {
                    upper = Some(ub2);
                }
            }
            analysis.fermat_facts = fermat_facts2;
            analysis.nonfermat_facts = nonfermat_facts2;
        } else {
            analysis.fermat_facts = fermat_facts;
            analysis.nonfermat_facts = nonfermat_facts;
        }
    } else {
        analysis.fermat_facts = fermat_facts;
        analysis.nonfermat_facts = nonfermat_facts;
    }
    analysis.upper = upper;

    // F: the special slot is claimed, yet some Fermat prime forces the
    // special into an unknown component
    if state.special_claimed().is_some()
        && analysis
            .fermat_facts
            .iter()
            .any(|f| f.report.special_in_unknown_component)
    {
        analysis.code = Some(Contradiction::F);
        return Ok(analysis);
    }

    // S: a factor-chain prime undercut an interval selection
    if let Some(floor) = &state.interval_floor {
        if state.off_primes().any(|p| p < floor) {
            analysis.code = Some(Contradiction::S);
            return Ok(analysis);
        }
    }

    // interval-based contradictions only apply once every known prime has
    // been branched (no off primes)
    let no_off = state.smallest_off().is_none();
    if no_off {
        if let Some(ub) = &analysis.upper {
            let (cands, overflowed) =
                enumerate_candidates(state, &lower, &ub.value, cfg.max_interval_candidates, db);
            analysis.candidates_overflowed = overflowed;
            if !overflowed {
                analysis.candidates = Some(cands);
            }
            if analysis
                .candidates
                .as_ref()
                .map(|c| c.is_empty())
                .unwrap_or(false)
            {
                analysis.code = Some(Contradiction::N);
                return Ok(analysis);
            }

            let upper_val = &ub.value;
            if k2 == 1 {
                for f in &analysis.fermat_facts {
                    if f.report.special_is_unknown_prime
                        && exceeds_upper(&f.report.special_floor, upper_val)
                    {
                        analysis.code = Some(Contradiction::SF1);
                        return Ok(analysis);
                    }
                }
            }
            if k2 == 2 {
                for f in &analysis.fermat_facts {
                    if let Some(d) = &f.divisor_bound {
                        let pair_min = f.report.special_floor.clone().min(d.clone());
                        if f.report.special_is_unknown_prime && exceeds_upper(&pair_min, upper_val)
                        {
                            analysis.code = Some(Contradiction::SF2);
                            return Ok(analysis);
                        }
                    }
                }
            }
            if k2 == 1 {
                for f in &analysis.nonfermat_facts {
                    if exceeds_upper(&f.report.floor, upper_val) {
                        analysis.code = Some(Contradiction::SNF1);
                        return Ok(analysis);
                    }
                }
            }
            if k2 == 2 {
                for f in &analysis.nonfermat_facts {
                    if let Some(d) = &f.divisor_bound {
                        let pair_min = f.report.floor.clone().min(d.clone());
                        if exceeds_upper(&pair_min, upper_val) {
                            analysis.code = Some(Contradiction::SNF2);
                            return Ok(analysis);
                        }
                    }
                }
            }
            if let Some(code) = positional_contradiction(state, upper_val, cfg) {
                analysis.code = Some(code);
                return Ok(analysis);
            }
        }
    }

    Ok(analysis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::state::{Component, ComponentStatus};

    fn b(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn known(p: u64, exp: u64) -> Component {
        Component {
            prime: b(p),
            status: ComponentStatus::Known {
                exp,
                special: exp % 2 == 1,
            },
        }
    }

    fn state(k: u32, comps: Vec<Component>) -> SearchState {
        let mut s = SearchState::root(k);
        s.components = comps;
        s
    }

    fn ctx() -> (RunConfig, FactorDb, CertStore) {
        (RunConfig::desk(5), FactorDb::in_memory(), CertStore::in_memory())
    }

    #[test]
    fn perfect_check_examples() {
        // σ(117) = 182 ≠ 234
        let s = state(2, vec![known(3, 2), known(13, 1)]);
        assert!(!perfect_check(&s));
        // the even perfect number 28 exercises the σ identity itself
        let s = state(
            2,
            vec![
                Component {
                    prime: b(2),
                    status: ComponentStatus::Known { exp: 2, special: false },
                },
                Component {
                    prime: b(7),
                    status: ComponentStatus::Known { exp: 1, special: false },
                },
            ],
        );
        assert!(perfect_check(&s));
    }

    #[test]
    fn perfect_witness_surfaces_through_analysis() {
        // the even perfect number 28 drives the detection wiring end to end
        let (cfg, db, certs) = ctx();
        let s = state(
            2,
            vec![
                Component {
                    prime: b(2),
                    status: ComponentStatus::Known { exp: 2, special: false },
                },
                Component {
                    prime: b(7),
                    status: ComponentStatus::Known { exp: 1, special: false },
                },
            ],
        );
        let a = analyze(&s, &cfg, &db, &certs).unwrap();
        assert_eq!(a.perfect_witness, Some(b(28)));
        assert_eq!(a.code, None);
    }

    #[test]
    #[should_panic(expected = "perfect_check requires all components known")]
    fn perfect_check_rejects_unresolved_components() {
        let s = state(
            2,
            vec![
                known(3, 2),
                Component {
                    prime: b(13),
                    status: ComponentStatus::Infinite,
                },
            ],
        );
        perfect_check(&s);
    }

    #[test]
    fn abundant_state_detected() {
        let (cfg, db, certs) = ctx();
        let s = state(5, vec![known(3, 2), known(5, 2), known(7, 2)]);
        let a = analyze(&s, &cfg, &db, &certs).unwrap();
        assert_eq!(a.code, Some(Contradiction::A));
    }

    #[test]
    fn overflow_and_multiplicity_detected() {
        let (cfg, db, certs) = ctx();
        let mut comps = vec![known(3, 2), known(13, 1), known(7, 2)];
        comps.push(Component { prime: b(19), status: ComponentStatus::Off });
        comps.push(Component { prime: b(23), status: ComponentStatus::Off });
        comps.push(Component { prime: b(29), status: ComponentStatus::Off });
        let s = state(5, comps);
        let a = analyze(&s, &cfg, &db, &certs).unwrap();
        assert_eq!(a.code, Some(Contradiction::MT));

        // forced copies beyond a pinned exponent
        let mut s = state(5, vec![known(3, 2), known(13, 1)]);
        s.ledger.insert(b(3), 4);
        let a = analyze(&s, &cfg, &db, &certs).unwrap();
        assert_eq!(a.code, Some(Contradiction::MS));
    }

    #[test]
    fn deficient_all_known_detected() {
        let (cfg, db, certs) = ctx();
        let s = state(2, vec![known(3, 2), known(13, 1)]);
        let a = analyze(&s, &cfg, &db, &certs).unwrap();
        assert_eq!(a.code, Some(Contradiction::D));
    }

    #[test]
    fn undercut_interval_selection_detected() {
        let (cfg, db, certs) = ctx();
        let mut s = state(
            5,
            vec![
                known(3, 2),
                Component { prime: b(13), status: ComponentStatus::Infinite },
                known(17, 2),
                Component { prime: b(7), status: ComponentStatus::Off },
            ],
        );
        s.interval_floor = Some(b(17));
        let a = analyze(&s, &cfg, &db, &certs).unwrap();
        assert_eq!(a.code, Some(Contradiction::S));
    }

    #[test]
    fn interval_candidates_match_print_out() {
        let (mut cfg, db, certs) = ctx();
        cfg.b1 = b(50);
        cfg.b2 = b(50);
        cfg.max_u = 0;
        let s = state(
            5,
            vec![
                known(3, 2),
                known(13, 1),
                Component { prime: b(7), status: ComponentStatus::Infinite },
            ],
        );
        let a = analyze(&s, &cfg, &db, &certs).unwrap();
        assert_eq!(a.code, None);
        assert_eq!(
            a.candidates,
            Some(vec![b(11), b(17), b(19)]),
            "known 13 must be excluded from the interval"
        );
        // empty interval after 19 goes infinite
        let s = state(
            5,
            vec![
                known(3, 2),
                known(13, 1),
                known(7, 2),
                Component { prime: b(19), status: ComponentStatus::Infinite },
            ],
        );
        let a = analyze(&s, &cfg, &db, &certs).unwrap();
        assert_eq!(a.code, Some(Contradiction::N));
    }

    #[test]
    fn special_claim_against_forcing_detected() {
        let (cfg, db, certs) = ctx();
        // a claimed special alongside a high power of 3 whose copies cannot
        // be absorbed: τ = n − b − (k₁'−ℓ₁'+k₂)(k₁'+k₂−1) with one unknown
        let s = state(
            3,
            vec![
                known(3, 20),
                known(13, 1), // claims the special slot; 13 ≡ 1 (mod 3) and (mod 4)
            ],
        );
        // ledger: σ(3^20) contributes no 3s; σ(13) = 14 contributes none
        let a = analyze(&s, &cfg, &db, &certs).unwrap();
        assert_eq!(a.code, Some(Contradiction::F));
    }
}
