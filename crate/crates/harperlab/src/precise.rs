//! Extended-precision transfer traces and band-edge counts.
//!
//! Double precision cannot separate the exponentially small gaps of `p/q`
//! near `0` or `1` once `q` passes ~35, nor evaluate `Delta` to absolute
//! accuracy when the transfer products are large. Both are redone here with
//! binary floating point of configurable width.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use harperlab_core::chambers::{extremal_setups, reflection_centre, reflection_layouts, RationalFrequency};

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, thiserror::Error)]
pub enum PreciseError {
    #[error("precision {0} bits is below 128")]
    Precision(usize),
    #[error("constant cache: {0}")]
    Consts(String),
    #[error("no bracket for gap {gap} of {p}/{q}")]
    Bracket { p: u64, q: u64, gap: usize },
    #[error(transparent)]
    Chambers(#[from] harperlab_core::chambers::ChambersError),
}

/// Nearest `f64` to `x` (truncating the mantissa below 64 bits).
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    match x.as_raw_parts() {
        None => f64::NAN,
        Some((m, _, s, e, _)) => {
            if m.iter().all(|&w| w == 0) {
                return 0.0;
            }
            // value = 0.m * 2^e with the top word most significant
            let top = m[m.len() - 1] as f64 / 2f64.powi(64);
            let next = if m.len() > 1 { m[m.len() - 2] as f64 / 2f64.powi(128) } else { 0.0 };
            let v = (top + next) * 2f64.powi(e.clamp(-1100, 1100));
            if s == Sign::Neg {
                -v
            } else {
                v
            }
        }
    }
}

pub struct Precise {
    prec: usize,
    cc: Consts,
    // 2 cos(pi k / q) for k = 0..2q, keyed by q
    table: Option<(u64, Vec<BigFloat>)>,
}

impl Precise {
    pub fn new(prec: usize) -> Result<Self, PreciseError> {
        if prec < 128 {
            return Err(PreciseError::Precision(prec));
        }
        let cc = Consts::new().map_err(|e| PreciseError::Consts(format!("{e:?}")))?;
        Ok(Self { prec, cc, table: None })
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    pub fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.prec)
    }

    /// `2 cos(pi num / den)`.
    fn two_cos_pi_frac(&mut self, num: u64, den: u64) -> BigFloat {
        let p = self.prec;
        let pi = self.cc.pi(p, RM);
        let x = pi.mul(&BigFloat::from_u64(num, p), p, RM).div(&BigFloat::from_u64(den, p), p, RM);
        x.cos(p, RM, &mut self.cc).mul(&BigFloat::from_u8(2, p), p, RM)
    }

    /// `2 cos(2 pi (theta + m / q))` for `theta` read exactly from its `f64`.
    fn two_cos_phase(&mut self, theta: f64, m: u64, q: u64) -> BigFloat {
        let p = self.prec;
        let pi = self.cc.pi(p, RM);
        let frac = BigFloat::from_u64(m, p).div(&BigFloat::from_u64(q, p), p, RM);
        let x = self.num(theta).add(&frac, p, RM);
        let two_pi = pi.mul(&BigFloat::from_u8(2, p), p, RM);
        x.mul(&two_pi, p, RM).cos(p, RM, &mut self.cc).mul(&BigFloat::from_u8(2, p), p, RM)
    }

    /// Diagonal `2 cos(pi (2 (j p mod q) + h) / q)`, the potential at the
    /// phase `h / (2q)`.
    pub fn potential(&mut self, freq: RationalFrequency, half_steps: u8) -> Vec<BigFloat> {
        let q = freq.q();
        if self.table.as_ref().map(|t| t.0) != Some(q) {
            let t = (0..2 * q).map(|k| self.two_cos_pi_frac(k, q)).collect();
            self.table = Some((q, t));
        }
        let t = &self.table.as_ref().expect("table just filled").1;
        (0..q)
            .map(|j| {
                let m = ((j as u128 * freq.p() as u128) % q as u128) as u64;
                t[((2 * m + half_steps as u64) % (2 * q)) as usize].clone()
            })
            .collect()
    }

    fn trace_of(&self, e: f64, pot: &[BigFloat]) -> BigFloat {
        let p = self.prec;
        let e = self.num(e);
        let one = BigFloat::from_u8(1, p);
        let zero = BigFloat::from_u8(0, p);
        let (mut a, mut b, mut c, mut d) = (one.clone(), zero.clone(), zero, one);
        for v in pot {
            let v = e.sub(v, p, RM);
            let na = v.mul(&a, p, RM).sub(&c, p, RM);
            let nb = v.mul(&b, p, RM).sub(&d, p, RM);
            c = a;
            d = b;
            a = na;
            b = nb;
        }
        a.add(&d, p, RM)
    }

    /// `tr prod_{j=1..q} T_j(E, theta)` with `T_j = [[E - V_j, -1], [1, 0]]`.
    pub fn trace(&mut self, freq: RationalFrequency, e: f64, theta: f64) -> BigFloat {
        let q = freq.q();
        let pot: Vec<BigFloat> = (1..=q)
            .map(|j| {
                let m = ((j as u128 * freq.p() as u128) % q as u128) as u64;
                self.two_cos_phase(theta, m, q)
            })
            .collect();
        self.trace_of(e, &pot)
    }

    /// `2 cos(2 pi q theta)`.
    pub fn phase_term(&mut self, q: u64, theta: f64) -> BigFloat {
        let p = self.prec;
        let x = self.num(theta).mul(&BigFloat::from_u64(q, p), p, RM);
        let two_pi = self.cc.pi(p, RM).mul(&BigFloat::from_u8(2, p), p, RM);
        x.mul(&two_pi, p, RM).cos(p, RM, &mut self.cc).mul(&BigFloat::from_u8(2, p), p, RM)
    }

    /// `Delta(E)`, evaluated at `theta = 0` where the phase term is exactly 2.
    pub fn discriminant(&mut self, freq: RationalFrequency, e: f64) -> BigFloat {
        let pot = self.potential(freq, 0);
        let p = self.prec;
        self.trace_of(e, &pot).add(&BigFloat::from_u8(2, p), p, RM)
    }

    /// `|tr prod T(E, theta) + 2 cos(2 pi q theta) - Delta(E)|`.
    pub fn theta_defect(&mut self, freq: RationalFrequency, e: f64, theta: f64) -> f64 {
        let p = self.prec;
        let lhs = self.trace(freq, e, theta).add(&self.phase_term(freq.q(), theta), p, RM);
        let d = self.discriminant(freq, e);
        to_f64(&lhs.sub(&d, p, RM)).abs()
    }
}

/// One symmetric tridiagonal block: diagonal and squared couplings.
struct Block {
    diag: Vec<BigFloat>,
    diag64: Vec<f64>,
    off2: Vec<u8>,
}

/// Counts band edges below a point: the sum of Sturm counts of the even and
/// odd halves of both extremal Bloch matrices.
pub struct EdgeCounter {
    prec: usize,
    blocks: Vec<Block>,
    q: u64,
}

impl EdgeCounter {
    /// Needs `q >= 3`, where both Bloch matrices split.
    pub fn new(px: &mut Precise, freq: RationalFrequency) -> Result<Self, PreciseError> {
        let q = freq.q();
        assert!(q >= 3, "edge counter needs q >= 3");
        let p = px.prec;
        let mut blocks = Vec::with_capacity(4);
        for (h, corner) in extremal_setups(freq)? {
            let pot = px.potential(freq, h);
            let s = reflection_centre(freq, h);
            for l in reflection_layouts(q as usize, s, corner) {
                let mut diag: Vec<BigFloat> = l.sites.iter().map(|&j| pot[j].clone()).collect();
                let n = diag.len();
                diag[0] = diag[0].add(&BigFloat::from_f64(l.shift[0], p), p, RM);
                diag[n - 1] = diag[n - 1].add(&BigFloat::from_f64(l.shift[1], p), p, RM);
                let mut off2 = vec![1u8; n.saturating_sub(1)];
                if n > 1 {
                    if l.wide[0] {
                        off2[0] = 2;
                    }
                    if l.wide[1] {
                        off2[n - 2] = 2;
                    }
                }
                let diag64 = diag.iter().map(to_f64).collect();
                blocks.push(Block { diag, diag64, off2 });
            }
        }
        Ok(Self { prec: p, blocks, q })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// The same count in double precision; exact whenever `x` is farther
    /// than a few thousand ulps of `4` from every edge.
    pub fn count_f64(&self, x: f64) -> usize {
        let mut neg = 0;
        for b in &self.blocks {
            let mut piv = 1.0f64;
            for (k, &dk) in b.diag64.iter().enumerate() {
                let mut t = dk - x;
                if k > 0 {
                    t -= b.off2[k - 1] as f64 / piv;
                }
                if t == 0.0 {
                    t = -f64::MIN_POSITIVE;
                }
                if t < 0.0 {
                    neg += 1;
                }
                piv = t;
            }
        }
        neg
    }

    /// Number of band edges strictly below `x`.
    pub fn count(&self, x: &BigFloat) -> usize {
        self.count_in(x, 0) + self.count_in(x, 1)
    }

    /// Eigenvalues below `x` of extremal Bloch matrix `which` (0 or 1).
    pub fn count_in(&self, x: &BigFloat, which: usize) -> usize {
        let p = self.prec;
        let tiny = BigFloat::from_f64(2f64.powi(-900), p).neg();
        let mut neg = 0;
        for b in &self.blocks[2 * which..2 * which + 2] {
            let mut piv = BigFloat::from_u8(1, p);
            for (k, dk) in b.diag.iter().enumerate() {
                let mut t = dk.sub(x, p, RM);
                if k > 0 {
                    let o = BigFloat::from_u8(b.off2[k - 1], p);
                    t = t.sub(&o.div(&piv, p, RM), p, RM);
                }
                if t.is_zero() {
                    t = tiny.clone();
                }
                if t.is_negative() {
                    neg += 1;
                }
                piv = t;
            }
        }
        neg
    }
}

/// State of the gap between bands `index - 1` and `index` (0-based bands).
#[derive(Debug, Clone, PartialEq)]
pub enum GapState {
    /// A point with exactly `2 index` edges below it.
    Open { witness: f64 },
    /// No such point down to the resolution `width`.
    Closed { width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    pub index: usize,
    /// Bits used; `53` when double-precision counts sufficed.
    pub bits: usize,
    /// Gap between the `f64` edges.
    pub f64_gap: f64,
    pub state: GapState,
}

/// Gaps wider than this in `f64` are certified with double-precision counts.
pub const F64_RESOLVED: f64 = 1e-9;

/// Certifies every gap of `p/q` from the `f64` edges `edges` (ascending,
/// length `2q`). A gap is open when two distinct points both have exactly
/// `2 index` edges below them. Gaps wider than [`F64_RESOLVED`] are checked
/// at their midpoint in double precision; the rest are bisected in extended
/// precision until such a pair turns up or the bracket shrinks to
/// `2^-(prec - 56)`.
pub fn certify_gaps(px: &mut Precise, freq: RationalFrequency, edges: &[f64]) -> Result<Vec<GapCertificate>, PreciseError> {
    let q = freq.q() as usize;
    assert_eq!(edges.len(), 2 * q);
    if q == 2 {
        // Delta = E^2 - 4: the edges -sqrt 8, 0, 0, sqrt 8
        return Ok(vec![GapCertificate {
            index: 1,
            bits: 0,
            f64_gap: edges[2] - edges[1],
            state: GapState::Closed { width: 0.0 },
        }]);
    }
    if q < 2 {
        return Ok(Vec::new());
    }
    let counter = EdgeCounter::new(px, freq)?;
    let p = px.prec;
    let half = BigFloat::from_f64(0.5, p);
    let floor = 2f64.powi(-(p as i32 - 56));
    let mut out = Vec::with_capacity(q - 1);
    for g in 1..q {
        let target = 2 * g;
        let (lo_e, hi_e) = (edges[2 * g - 1], edges[2 * g]);
        let f64_gap = hi_e - lo_e;
        if f64_gap > F64_RESOLVED {
            let (a, b) = (lo_e + 0.25 * f64_gap, hi_e - 0.25 * f64_gap);
            if counter.count_f64(a) == target && counter.count_f64(b) == target {
                out.push(GapCertificate { index: g, bits: 53, f64_gap, state: GapState::Open { witness: 0.5 * (a + b) } });
                continue;
            }
        }
        let mut pad = 1e-13;
        let (mut a, mut b) = loop {
            let a = px.num(lo_e - pad);
            let b = px.num(hi_e + pad);
            if counter.count(&a) < target && counter.count(&b) > target {
                break (a, b);
            }
            pad *= 16.0;
            if pad > 16.0 {
                return Err(PreciseError::Bracket { p: freq.p(), q: freq.q(), gap: g });
            }
        };
        // usually only one Bloch matrix has eigenvalues inside the bracket
        let moves = [0, 1].map(|i| counter.count_in(&a, i) != counter.count_in(&b, i));
        let fixed = [counter.count_in(&a, 0), counter.count_in(&a, 1)];
        let n_at = |x: &BigFloat| match moves {
            [true, false] => counter.count_in(x, 0) + fixed[1],
            [false, true] => fixed[0] + counter.count_in(x, 1),
            _ => counter.count(x),
        };
        let eps_at = |px: &Precise, m: &BigFloat| px.num(floor * (1.0 + to_f64(m).abs()));
        // the spectrum is symmetric, so the middle gap of even q sits on 0
        if 2 * g == q {
            let z = px.num(0.0);
            let eps = eps_at(px, &z);
            if n_at(&z.sub(&eps, p, RM)) == target - 1 && n_at(&z.add(&eps, p, RM)) == target + 1 {
                out.push(GapCertificate {
                    index: g,
                    bits: p,
                    f64_gap,
                    state: GapState::Closed { width: 2.0 * to_f64(&eps) },
                });
                continue;
            }
        }
        let state = loop {
            let m = a.add(&b, p, RM).mul(&half, p, RM);
            let w = to_f64(&b.sub(&a, p, RM));
            let eps = eps_at(px, &m);
            let n_right = n_at(&m.add(&eps, p, RM));
            if n_right == target && n_at(&m.sub(&eps, p, RM)) == target {
                break GapState::Open { witness: to_f64(&m) };
            }
            if n_right <= target {
                a = m;
            } else {
                b = m;
            }
            if w <= 4.0 * floor * (1.0 + to_f64(&a).abs()) {
                break GapState::Closed { width: w };
            }
        };
        out.push(GapCertificate { index: g, bits: p, f64_gap, state });
    }
    Ok(out)
}
