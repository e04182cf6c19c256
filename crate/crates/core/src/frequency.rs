//! Rotation numbers: exact rationals and irrationals carried with their
//! continued-fraction convergents.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Depth to which decimal literals are expanded.
pub const DECIMAL_CF_DEPTH: usize = 40;

#[derive(Clone, Debug, PartialEq)]
pub enum Frequency {
    Rational { p: u64, q: u64 },
    Irrational { value: f64, convergents: Vec<(u64, u64)>, name: Option<String> },
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Convergents `p_n / q_n` of the continued fraction `[a0; a1, a2, ...]`.
pub fn convergents_of(terms: &[u64]) -> Vec<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let mut out = Vec::with_capacity(terms.len());
    for &a in terms {
        let p = a as u128 * p1 + p0;
        let q = a as u128 * q1 + q0;
        if p > u64::MAX as u128 || q > u64::MAX as u128 {
            break;
        }
        out.push((p as u64, q as u64));
        (p0, q0, p1, q1) = (p1, q1, p, q);
    }
    out
}

impl Frequency {
    /// `p/q` reduced, with `p` taken mod `q`.
    pub fn rational(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("frequency denominator must be positive".into()));
        }
        let p = p.rem_euclid(q as i64) as u64;
        let g = gcd(p, q);
        Ok(Frequency::Rational { p: p / g, q: q / g })
    }

    /// `(sqrt 5 - 1)/2` with Fibonacci convergents `F_n / F_{n+1}`.
    pub fn golden() -> Self {
        let value = (5f64.sqrt() - 1.0) / 2.0;
        let mut terms = vec![0u64];
        terms.extend(std::iter::repeat_n(1, 60));
        let convergents = convergents_of(&terms).into_iter().skip(1).collect();
        Frequency::Irrational { value, convergents, name: Some("golden".into()) }
    }

    /// `sqrt 2 - 1 = [0; 2, 2, 2, ...]`.
    pub fn sqrt2m1() -> Self {
        let value = 2f64.sqrt() - 1.0;
        let mut terms = vec![0u64];
        terms.extend(std::iter::repeat_n(2, 40));
        let convergents = convergents_of(&terms).into_iter().skip(1).collect();
        Frequency::Irrational { value, convergents, name: Some("sqrt2m1".into()) }
    }

    /// A decimal literal, expanded exactly as a continued fraction of
    /// `digits / 10^k` to at most [`DECIMAL_CF_DEPTH`] terms. The value is
    /// reduced mod 1.
    pub fn from_decimal(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse frequency '{s}'"));
        let t = s.trim();
        let (neg, t) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = t.split_once('.').unwrap_or((t, ""));
        if int_part.is_empty() && frac_part.is_empty()
            || !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.len() > 30 {
            return Err(Error::InvalidInput(format!("frequency '{s}' has more than 30 decimals")));
        }
        let den = 10u128.pow(frac_part.len() as u32);
        let mut num: u128 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
        if neg && num != 0 {
            num = den - num;
        }
        if num == 0 {
            return Ok(Frequency::Rational { p: 0, q: 1 });
        }
        let value = num as f64 / den as f64;
        let (mut a, mut b) = (num, den);
        // value = a / b with 0 < a < b
        let mut terms = vec![0u64];
        while a != 0 && terms.len() < DECIMAL_CF_DEPTH {
            let t = b / a;
            terms.push(t as u64);
            (a, b) = (b % a, a);
        }
        let convergents = convergents_of(&terms).into_iter().skip(1).collect();
        Ok(Frequency::Irrational { value, convergents, name: None })
    }

    pub fn value(&self) -> f64 {
        match self {
            Frequency::Rational { p, q } => *p as f64 / *q as f64,
            Frequency::Irrational { value, .. } => *value,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Frequency::Rational { .. })
    }

    pub fn period(&self) -> Option<u64> {
        match self {
            Frequency::Rational { q, .. } => Some(*q),
            Frequency::Irrational { .. } => None,
        }
    }

    /// Continued-fraction convergents. For a rational this is the single pair `(p, q)`.
    pub fn convergents(&self) -> Vec<(u64, u64)> {
        match self {
            Frequency::Rational { p, q } => vec![(*p, *q)],
            Frequency::Irrational { convergents, .. } => convergents.clone(),
        }
    }

    /// Rational approximants with denominators in `[q_min, q_max]`.
    pub fn approximants(&self, q_min: u64, q_max: u64) -> Vec<Frequency> {
        self.convergents()
            .into_iter()
            .filter(|&(_, q)| q >= q_min && q <= q_max)
            .map(|(p, q)| Frequency::rational(p as i64, q).expect("q > 0"))
            .collect()
    }

    /// `x + k beta` reduced mod 1. Exact in the step count for rationals.
    #[inline]
    pub fn orbit(&self, x: f64, k: u64) -> f64 {
        match self {
            Frequency::Rational { p, q } => {
                let r = ((k as u128 * *p as u128) % *q as u128) as f64 / *q as f64;
                (x + r).rem_euclid(1.0)
            }
            Frequency::Irrational { value, .. } => {
                let r = (k as f64 * value).rem_euclid(1.0);
                (x + r).rem_euclid(1.0)
            }
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Rational { p, q } => write!(f, "{p}/{q}"),
            Frequency::Irrational { name: Some(n), .. } => f.write_str(n),
            Frequency::Irrational { value, .. } => write!(f, "{value}"),
        }
    }
}

impl FromStr for Frequency {
    type Err = Error;

    /// Accepts `p/q`, `golden`, `sqrt2m1` or a decimal literal.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "golden" => return Ok(Frequency::golden()),
            "sqrt2m1" => return Ok(Frequency::sqrt2m1()),
            _ => {}
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| Error::InvalidInput(format!("bad numerator in '{s}'")))?;
            let q: u64 = q.trim().parse().map_err(|_| Error::InvalidInput(format!("bad denominator in '{s}'")))?;
            return Frequency::rational(p, q);
        }
        Frequency::from_decimal(t)
    }
}
