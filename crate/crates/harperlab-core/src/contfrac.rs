//! Continued fractions with an optional periodic tail.
//!
//! `[a1,...,aj;(b1,...,bm)]` denotes `1/(a1 + 1/(a2 + ...))` where the block
//! `b1..bm` repeats forever. Convergent numerators and denominators are kept
//! as arbitrary precision integers.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CfError {
    #[error("expansion has {available} quotients, {needed} required")]
    InsufficientExpansion { needed: usize, available: usize },
    #[error("partial quotients must be positive integers")]
    ZeroQuotient,
    #[error("empty expansion")]
    Empty,
    #[error("cannot parse continued fraction: {0}")]
    Parse(String),
    #[error("invalid family parameters: {0}")]
    InvalidFamily(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContinuedFraction {
    prefix: Vec<u64>,
    tail: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub n: usize,
    pub p: BigUint,
    pub q: BigUint,
}

impl Convergent {
    pub fn to_f64(&self) -> f64 {
        ratio_f64(&self.p, &self.q)
    }
}

/// `p/q` rounded through the leading 64 bits of each operand.
pub fn ratio_f64(p: &BigUint, q: &BigUint) -> f64 {
    let shift = q.bits().max(p.bits()).saturating_sub(64);
    let ps = (p >> shift).to_f64().unwrap_or(f64::INFINITY);
    let qs = (q >> shift).to_f64().unwrap_or(f64::INFINITY);
    ps / qs
}

/// Natural log of a big integer, exact to f64 precision for any size.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 900 {
        x.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 64;
        (x >> shift).to_f64().unwrap_or(1.0).ln() + shift as f64 * core::f64::consts::LN_2
    }
}

impl ContinuedFraction {
    pub fn new(prefix: Vec<u64>, tail: Vec<u64>) -> Result<Self, CfError> {
        if prefix.is_empty() && tail.is_empty() {
            return Err(CfError::Empty);
        }
        if prefix.iter().chain(tail.iter()).any(|&a| a == 0) {
            return Err(CfError::ZeroQuotient);
        }
        Ok(Self { prefix, tail })
    }

    pub fn finite(quotients: Vec<u64>) -> Result<Self, CfError> {
        Self::new(quotients, Vec::new())
    }

    pub fn periodic(prefix: Vec<u64>, block: Vec<u64>) -> Result<Self, CfError> {
        if block.is_empty() {
            return Err(CfError::Empty);
        }
        Self::new(prefix, block)
    }

    /// `[a, a, a, ...]`.
    pub fn constant(a: u64) -> Result<Self, CfError> {
        Self::periodic(Vec::new(), alloc::vec![a])
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn tail(&self) -> &[u64] {
        &self.tail
    }

    pub fn is_infinite(&self) -> bool {
        !self.tail.is_empty()
    }

    /// Number of quotients, `None` when the expansion is infinite.
    pub fn len(&self) -> Option<usize> {
        if self.is_infinite() {
            None
        } else {
            Some(self.prefix.len())
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The 1-based quotient `a_n`.
    pub fn quotient(&self, n: usize) -> Option<u64> {
        if n == 0 {
            return None;
        }
        let i = n - 1;
        if i < self.prefix.len() {
            Some(self.prefix[i])
        } else if self.tail.is_empty() {
            None
        } else {
            Some(self.tail[(i - self.prefix.len()) % self.tail.len()])
        }
    }

    fn available(&self) -> usize {
        if self.is_infinite() {
            usize::MAX
        } else {
            self.prefix.len()
        }
    }

    fn require(&self, n: usize) -> Result<(), CfError> {
        if n > self.available() {
            Err(CfError::InsufficientExpansion { needed: n, available: self.prefix.len() })
        } else {
            Ok(())
        }
    }

    pub fn quotients(&self) -> impl Iterator<Item = u64> + '_ {
        let mut n = 0usize;
        core::iter::from_fn(move || {
            n += 1;
            self.quotient(n)
        })
    }

    /// `p_1/q_1, ..., p_n/q_n`.
    pub fn convergents(&self, n: usize) -> Result<Vec<Convergent>, CfError> {
        if n == 0 {
            return Err(CfError::InsufficientExpansion { needed: 1, available: 0 });
        }
        self.require(n)?;
        let mut out = Vec::with_capacity(n);
        let (mut p0, mut p1) = (BigUint::one(), BigUint::zero());
        let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
        for (i, a) in self.quotients().take(n).enumerate() {
            let p2 = &p1 * a + &p0;
            let q2 = &q1 * a + &q0;
            p0 = core::mem::replace(&mut p1, p2);
            q0 = core::mem::replace(&mut q1, q2);
            out.push(Convergent { n: i + 1, p: p1.clone(), q: q1.clone() });
        }
        Ok(out)
    }

    /// Denominators `q_0 = 1, q_1, ..., q_n`.
    pub fn denominators(&self, n: usize) -> Result<Vec<BigUint>, CfError> {
        self.require(n)?;
        let mut out = Vec::with_capacity(n + 1);
        let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
        out.push(q1.clone());
        for a in self.quotients().take(n) {
            let q2 = &q1 * a + &q0;
            q0 = core::mem::replace(&mut q1, q2);
            out.push(q1.clone());
        }
        Ok(out)
    }

    /// Numeric value of the expansion.
    pub fn value(&self) -> f64 {
        let (mut p0, mut p1) = (BigUint::one(), BigUint::zero());
        let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
        for a in self.quotients() {
            let p2 = &p1 * a + &p0;
            let q2 = &q1 * a + &q0;
            p0 = core::mem::replace(&mut p1, p2);
            q0 = core::mem::replace(&mut q1, q2);
            // |alpha - p/q| < 1/q^2, far below f64 resolution
            if q1.bits() > 72 && q0.bits() > 72 {
                break;
            }
        }
        ratio_f64(&p1, &q1)
    }

    /// `[a_{k+1}, a_{k+2}, ...]`, the k-th iterate of the Gauss map.
    pub fn gauss_shift(&self, k: usize) -> Result<Self, CfError> {
        if k == 0 {
            return Ok(self.clone());
        }
        if k < self.prefix.len() {
            return Ok(Self { prefix: self.prefix[k..].to_vec(), tail: self.tail.clone() });
        }
        if self.tail.is_empty() {
            return Err(CfError::InsufficientExpansion { needed: k + 1, available: self.prefix.len() });
        }
        let r = (k - self.prefix.len()) % self.tail.len();
        let mut tail = self.tail[r..].to_vec();
        tail.extend_from_slice(&self.tail[..r]);
        Ok(Self { prefix: Vec::new(), tail })
    }

    /// `|alpha - p_n/q_n|`, computed from the shifted expansion rather than by
    /// subtracting nearby floats. Zero when the expansion terminates at `n`.
    pub fn approximation_distance(&self, n: usize) -> Result<f64, CfError> {
        let qs = self.denominators(n)?;
        if n == 0 {
            return Ok(self.value());
        }
        let t = match self.gauss_shift(n) {
            Ok(s) => s.value(),
            Err(_) => return Ok(0.0),
        };
        let qn = qs[n].to_f64().unwrap_or(f64::INFINITY);
        let qm = qs[n - 1].to_f64().unwrap_or(f64::INFINITY);
        Ok(1.0 / (qn * (qn / t + qm)))
    }

    /// `2 pi [a_n, a_{n+1}, ...]`.
    pub fn h_n(&self, n: usize) -> Result<f64, CfError> {
        if n == 0 {
            return Err(CfError::InsufficientExpansion { needed: 1, available: 0 });
        }
        self.require(n)?;
        Ok(2.0 * core::f64::consts::PI * self.gauss_shift(n - 1)?.value())
    }

    /// Running maximum of `log q_{k+1} / q_k` over `1 <= k < n`.
    pub fn beta_estimate(&self, n: usize) -> Result<f64, CfError> {
        if n < 2 {
            return Err(CfError::InsufficientExpansion { needed: 2, available: n });
        }
        let qs = self.denominators(n)?;
        let mut best = 0.0f64;
        for k in 1..n {
            let qk = qs[k].to_f64().unwrap_or(f64::INFINITY);
            best = best.max(ln_big(&qs[k + 1]) / qk);
        }
        Ok(best)
    }

    /// The single ratio `log q_{k+1} / q_k` whose running maximum is
    /// [`Self::beta_estimate`].
    pub fn beta_term(&self, k: usize) -> Result<f64, CfError> {
        if k == 0 {
            return Err(CfError::InsufficientExpansion { needed: 1, available: 0 });
        }
        let qs = self.denominators(k + 1)?;
        Ok(ln_big(&qs[k + 1]) / qs[k].to_f64().unwrap_or(f64::INFINITY))
    }

    /// Returns `(self, m)` when `q_m` is odd, otherwise the expansion with a
    /// quotient 1 inserted at position `m + 1` together with `m + 1`.
    pub fn ensure_odd_anchor(&self, m: usize) -> Result<(Self, usize), CfError> {
        let qs = self.denominators(m)?;
        if qs[m].is_odd() {
            return Ok((self.clone(), m));
        }
        Ok((self.insert_quotient(m + 1, 1), m + 1))
    }

    /// Expansion with `a` inserted so that it becomes quotient number `pos`.
    fn insert_quotient(&self, pos: usize, a: u64) -> Self {
        let idx = pos - 1;
        let mut prefix = self.prefix.clone();
        let mut tail = self.tail.clone();
        if idx > prefix.len() && !tail.is_empty() {
            let extra = idx - prefix.len();
            for j in 0..extra {
                prefix.push(tail[j % tail.len()]);
            }
            let r = extra % tail.len();
            tail.rotate_left(r);
        }
        let idx = idx.min(prefix.len());
        prefix.insert(idx, a);
        Self { prefix, tail }
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.prefix.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        if !self.tail.is_empty() {
            if !self.prefix.is_empty() {
                f.write_str(";")?;
            }
            f.write_str("(")?;
            for (i, b) in self.tail.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{b}")?;
            }
            f.write_str(")")?;
        }
        f.write_str("]")
    }
}

fn parse_list(s: &str) -> Result<Vec<u64>, CfError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<u64>().map_err(|_| CfError::Parse(alloc::format!("bad quotient {t:?}")))
        })
        .collect()
}

impl FromStr for ContinuedFraction {
    type Err = CfError;

    fn from_str(s: &str) -> Result<Self, CfError> {
        let s = s.trim();
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| CfError::Parse(alloc::format!("expected [...], got {s:?}")))?;
        let (head, tail) = match inner.find('(') {
            None => (inner, None),
            Some(open) => {
                let rest = &inner[open + 1..];
                let close = rest
                    .find(')')
                    .ok_or_else(|| CfError::Parse(String::from("unclosed period")))?;
                if !rest[close + 1..].trim().is_empty() {
                    return Err(CfError::Parse(String::from("text after period")));
                }
                let mut head = inner[..open].trim_end();
                if let Some(h) = head.strip_suffix(';') {
                    head = h;
                } else if !head.trim().is_empty() {
                    return Err(CfError::Parse(String::from("expected ';' before period")));
                }
                let block = parse_list(&rest[..close])?;
                if block.is_empty() {
                    return Err(CfError::Parse(String::from("empty period")));
                }
                (head, Some(block))
            }
        };
        if head.contains(';') || head.contains(')') {
            return Err(CfError::Parse(String::from("misplaced separator")));
        }
        let prefix = parse_list(head)?;
        Self::new(prefix, tail.unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// `[1, 2, a_3, a_4, ...]` with `L <= a_n <= 10 L`.
    F,
    /// `a_n <= N` for `n <= N`, `q_N` odd, then constant `L_hat`.
    FNOdd,
    /// `a_n <= N` for `n <= N`, `q_N` even, `a_{N+1} = 1`, then constant `L_hat`.
    FNEven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilyParams {
    pub l: u64,
    pub n: usize,
    pub l_hat: u64,
    /// Number of quotients materialized for members of `F`.
    pub len: usize,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self { l: 2, n: 2, l_hat: 2, len: 12 }
    }
}

/// Endless stream of partial quotients.
pub trait QuotientStream {
    fn next_quotient(&mut self) -> u64;

    fn take_cf(&mut self, len: usize) -> Result<ContinuedFraction, CfError>
    where
        Self: Sized,
    {
        let q: Vec<u64> = (0..len).map(|_| self.next_quotient()).collect();
        ContinuedFraction::finite(q)
    }
}

/// Quotients of one member of `F`: 1, 2, then uniform in `[L, 10L]`.
#[derive(Debug, Clone)]
pub struct FStream {
    l: u64,
    pos: usize,
    rng: ChaCha8Rng,
}

impl FStream {
    pub fn new(l: u64, seed: u64) -> Self {
        Self { l, pos: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl QuotientStream for FStream {
    fn next_quotient(&mut self) -> u64 {
        self.pos += 1;
        match self.pos {
            1 => 1,
            2 => 2,
            _ => self.rng.gen_range(self.l..=10 * self.l),
        }
    }
}

/// Deterministic generator of family members.
#[derive(Debug, Clone)]
pub struct FamilyGenerator {
    kind: FamilyKind,
    params: FamilyParams,
    rng: ChaCha8Rng,
}

pub fn frequency_family(kind: FamilyKind, params: FamilyParams, seed: u64) -> Result<FamilyGenerator, CfError> {
    if params.l < 2 && kind == FamilyKind::F {
        return Err(CfError::InvalidFamily(String::from("L must be at least 2")));
    }
    if kind != FamilyKind::F {
        if params.n < 2 {
            return Err(CfError::InvalidFamily(String::from("N must be at least 2")));
        }
        if params.l_hat < 1 {
            return Err(CfError::InvalidFamily(String::from("L_hat must be positive")));
        }
    }
    if kind == FamilyKind::F && params.len < 3 {
        return Err(CfError::InvalidFamily(String::from("F members need at least 3 quotients")));
    }
    Ok(FamilyGenerator { kind, params, rng: ChaCha8Rng::seed_from_u64(seed) })
}

impl Iterator for FamilyGenerator {
    type Item = ContinuedFraction;

    fn next(&mut self) -> Option<ContinuedFraction> {
        let p = self.params;
        match self.kind {
            FamilyKind::F => {
                let mut s = FStream::new(p.l, self.rng.gen());
                s.take_cf(p.len).ok()
            }
            FamilyKind::FNOdd | FamilyKind::FNEven => {
                let want_odd = self.kind == FamilyKind::FNOdd;
                let n = p.n as u64;
                loop {
                    let prefix: Vec<u64> = (0..p.n).map(|_| self.rng.gen_range(1..=n)).collect();
                    let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
                    for &a in &prefix {
                        let q2 = &q1 * a + &q0;
                        q0 = core::mem::replace(&mut q1, q2);
                    }
                    if q1.is_odd() != want_odd {
                        continue;
                    }
                    let mut prefix = prefix;
                    if !want_odd {
                        prefix.push(1);
                    }
                    return ContinuedFraction::periodic(prefix, alloc::vec![p.l_hat]).ok();
                }
            }
        }
    }
}
