//! Branch-log line grammar.
//!
//! Finite component:  `<indent><p>^<a> => <f1>^<e1> <f2>^<e2> ... [CODE]`
//! Infinite component: `<indent><p>^oo : <lo> < p_<i> < <hi> [CODE]`
//! Indent is three spaces per depth level. Interval endpoints render as
//! floor(lower) and ceil(upper) with strict inequalities; enumeration uses
//! the exact rationals, never the rendered integers.

use num_bigint::BigUint;
use num_rational::BigRational;

use crate::arith::ExtExp;
use crate::chain::analysis::Contradiction;
use crate::factordb::Factorization;

pub const INDENT: usize = 3;

/// Interval part of an infinite-component line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalRender {
    pub lower_floor: BigUint,
    pub subscript: u32,
    pub upper_ceil: Option<BigUint>,
}

pub fn render_interval(
    lower: &BigRational,
    upper: Option<&BigRational>,
    subscript: u32,
) -> IntervalRender {
    IntervalRender {
        lower_floor: lower.floor().to_integer().to_biguint().unwrap_or_default(),
        subscript,
        upper_ceil: upper.map(|u| u.ceil().to_integer().to_biguint().unwrap_or_default()),
    }
}

pub fn render_finite_line(
    depth: usize,
    p: &BigUint,
    a: u64,
    factors: &Factorization,
    code: Option<Contradiction>,
) -> String {
    let mut line = format!("{}{}^{} =>", " ".repeat(INDENT * depth), p, a);
    for f in &factors.factors {
        line.push_str(&format!(" {}^{}", f.prime, f.exp));
    }
    if !factors.is_complete() {
        line.push_str(&format!(" {}^1", factors.cofactor));
    }
    if let Some(c) = code {
        line.push_str(&format!(" {c}"));
    }
    line
}

pub fn render_inf_line(
    depth: usize,
    p: &BigUint,
    interval: Option<&IntervalRender>,
    code: Option<Contradiction>,
) -> String {
    let mut line = format!("{}{}^oo", " ".repeat(INDENT * depth), p);
    if let Some(iv) = interval {
        line.push_str(&format!(" : {} < p_{}", iv.lower_floor, iv.subscript));
        if let Some(hi) = &iv.upper_ceil {
            line.push_str(&format!(" < {hi}"));
        }
    }
    if let Some(c) = code {
        line.push_str(&format!(" {c}"));
    }
    line
}

/// A parsed branch-log line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLine {
    pub depth: usize,
    pub prime: BigUint,
    pub exp: ExtExp,
    pub body: ParsedBody,
    pub code: Option<Contradiction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedBody {
    Factors(Vec<(BigUint, u32)>),
    Interval(Option<IntervalRender>),
}

pub fn parse_line(line: &str) -> Option<ParsedLine> {
    let trimmed = line.trim_start_matches(' ');
    let spaces = line.len() - trimmed.len();
    if !spaces.is_multiple_of(INDENT) {
        return None;
    }
    let depth = spaces / INDENT;
    let (head, rest) = match trimmed.split_once(" => ") {
        Some((h, r)) => (h, Some((r, true))),
        None => match trimmed.split_once(" : ") {
            Some((h, r)) => (h, Some((r, false))),
            None => (trimmed, None),
        },
    };
    let parse_head = |head: &str| -> Option<(BigUint, ExtExp)> {
        let (p_str, a_str) = head.split_once('^')?;
        let prime: BigUint = p_str.parse().ok()?;
        let exp = if a_str == "oo" {
            ExtExp::Inf
        } else {
            ExtExp::Finite(a_str.parse().ok()?)
        };
        Some((prime, exp))
    };
    let mut code = None;
    let mut take_code = |tokens: &mut Vec<&str>| {
        if let Some(last) = tokens.last() {
            if let Ok(c) = last.parse::<Contradiction>() {
                code = Some(c);
                tokens.pop();
            }
        }
    };
    match rest {
        Some((body, true)) => {
            let (prime, exp) = parse_head(head)?;
            let mut tokens: Vec<&str> = body.split_whitespace().collect();
            take_code(&mut tokens);
            let mut factors = Vec::new();
            for t in tokens {
                let (f, e) = t.split_once('^')?;
                factors.push((f.parse().ok()?, e.parse().ok()?));
            }
            Some(ParsedLine {
                depth,
                prime,
                exp,
                body: ParsedBody::Factors(factors),
                code,
            })
        }
        Some((body, false)) => {
            let (prime, exp) = parse_head(head)?;
            let mut tokens: Vec<&str> = body.split_whitespace().collect();
            take_code(&mut tokens);
            // `<lo> < p_<i>` or `<lo> < p_<i> < <hi>`
            if tokens.len() != 3 && tokens.len() != 5 {
                return None;
            }
            if tokens[1] != "<" {
                return None;
            }
            let lower_floor: BigUint = tokens[0].parse().ok()?;
            let subscript: u32 = tokens[2].strip_prefix("p_")?.parse().ok()?;
            let upper_ceil = if tokens.len() == 5 {
                if tokens[3] != "<" {
                    return None;
                }
                Some(tokens[4].parse().ok()?)
            } else {
                None
            };
            Some(ParsedLine {
                depth,
                prime,
                exp,
                body: ParsedBody::Interval(Some(IntervalRender {
                    lower_floor,
                    subscript,
                    upper_ceil,
                })),
                code,
            })
        }
        None => {
            let mut tokens: Vec<&str> = trimmed.split_whitespace().collect();
            take_code(&mut tokens);
            if tokens.len() != 1 {
                return None;
            }
            let (prime, exp) = parse_head(tokens[0])?;
            Some(ParsedLine {
                depth,
                prime,
                exp,
                body: ParsedBody::Interval(None),
                code,
            })
        }
    }
}
