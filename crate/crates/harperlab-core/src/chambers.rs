//! Rational-frequency spectra of the critical almost Mathieu operator.
//!
//! For `alpha = p/q` the spectrum is `{E : |Delta(E)| <= 4}` where `Delta` is
//! the trace of the transfer-matrix product at the phase `1/(4q)`. Band
//! edges are the eigenvalues of two real symmetric periodic Jacobi matrices
//! (the Bloch matrices at the extremal phase pairs), found by bisection on
//! Sylvester inertia counts.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::sync::atomic::{AtomicU8, Ordering};

use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::bandset::{BandSet, Interval};
use crate::contfrac::{CfError, ContinuedFraction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChambersError {
    #[error("invalid frequency {p}/{q}")]
    InvalidFrequency { p: u64, q: u64 },
    #[error("eigenvalue computation failed for {p}/{q}")]
    NumericalFailure { p: u64, q: u64 },
    #[error("denominator {0} does not fit the solver")]
    DenominatorTooLarge(alloc::string::String),
    #[error(transparent)]
    Cf(#[from] CfError),
}

/// Reduced fraction `p/q` with `0 <= p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalFrequency {
    p: u64,
    q: u64,
}

impl RationalFrequency {
    pub fn new(p: u64, q: u64) -> Result<Self, ChambersError> {
        if q == 0 || p >= q || p.gcd(&q) != 1 {
            return Err(ChambersError::InvalidFrequency { p, q });
        }
        Ok(Self { p, q })
    }

    /// Reduces `p/q` modulo 1 first, so `1/1` becomes `0/1`.
    pub fn reduced(p: u64, q: u64) -> Result<Self, ChambersError> {
        if q == 0 {
            return Err(ChambersError::InvalidFrequency { p, q });
        }
        let p = p % q;
        let g = p.gcd(&q);
        Self::new(p / g, q / g)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// `2 cos(2 pi (theta + j p / q))` for `j = 0..q`, the diagonal of the
    /// Bloch matrix. The rational part is reduced exactly before scaling.
    pub fn potential(&self, theta: f64) -> Vec<f64> {
        (0..self.q)
            .map(|j| {
                let m = ((j as u128 * self.p as u128) % self.q as u128) as f64;
                2.0 * (2.0 * PI * (theta + m / self.q as f64)).cos()
            })
            .collect()
    }
}

/// `prod_{j=1..q} T_j(E, theta)` trace as `(mantissa, exponent)` with value
/// `mantissa * 2^exponent`; rescaling by exact powers of two keeps large `q`
/// and `|E|` finite.
pub fn transfer_trace_scaled(freq: RationalFrequency, e: f64, theta: f64) -> (f64, i64) {
    let q = freq.q;
    let (mut a, mut b, mut c, mut d) = (1.0f64, 0.0f64, 0.0f64, 1.0f64);
    let mut exp = 0i64;
    for j in 1..=q {
        let m = ((j as u128 * freq.p as u128) % q as u128) as f64;
        let v = e - 2.0 * (2.0 * PI * (theta + m / q as f64)).cos();
        let (na, nb) = (v * a - c, v * b - d);
        c = a;
        d = b;
        a = na;
        b = nb;
        let big = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
        if big > 1e150 {
            let s = 2f64.powi(-500);
            a *= s;
            b *= s;
            c *= s;
            d *= s;
            exp += 500;
        }
    }
    (a + d, exp)
}

fn unscale(m: f64, exp: i64) -> f64 {
    let mut v = m;
    let mut e = exp;
    while e > 0 && v.is_finite() {
        let step = e.min(500);
        v *= 2f64.powi(step as i32);
        e -= step;
    }
    v
}

/// `tr prod T_j(E, theta)`.
pub fn transfer_trace(freq: RationalFrequency, e: f64, theta: f64) -> f64 {
    let (m, exp) = transfer_trace_scaled(freq, e, theta);
    unscale(m, exp)
}

/// The distinguished phase `1/(4q)` at which the phase term vanishes.
pub fn theta_star(freq: RationalFrequency) -> f64 {
    0.25 / freq.q as f64
}

/// `Delta_{p,q}(E) = tr prod T_j(E, theta) + 2 cos(2 pi q theta)` at `theta = 1/(4q)`.
pub fn discriminant_eval(freq: RationalFrequency, e: f64) -> f64 {
    let t = theta_star(freq);
    transfer_trace(freq, e, t) + 2.0 * (2.0 * PI * freq.q as f64 * t).cos()
}

/// Sites and boundary terms of one reflection half-block.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLayout {
    /// Sites (already reduced mod `n`) along the block.
    pub sites: Vec<usize>,
    /// Added to the first and last diagonal entries.
    pub shift: [f64; 2],
    /// First and last couplings are `sqrt 2` instead of 1.
    pub wide: [bool; 2],
}

/// Block on the sites between the centres `s/2` and `(s+n)/2` for
/// eigenvectors with `psi_{s-j} = sigma1 psi_j`, `psi_{s+n-j} = sigma2 psi_j`.
pub fn half_layout(n: usize, s: usize, sigma1: f64, sigma2: f64) -> HalfLayout {
    let (a1, a2) = (s, s + n);
    let mut lo = a1.div_ceil(2);
    let mut hi = a2 / 2;
    let mut shift = [0.0, 0.0];
    let mut wide = [false, false];
    if a1 % 2 == 0 {
        if sigma1 < 0.0 {
            lo += 1;
        } else {
            wide[0] = true;
        }
    } else {
        shift[0] = sigma1;
    }
    if a2 % 2 == 0 {
        if sigma2 < 0.0 {
            hi -= 1;
        } else {
            wide[1] = true;
        }
    } else {
        shift[1] = sigma2;
    }
    HalfLayout { sites: (lo..=hi).map(|j| j % n).collect(), shift, wide }
}

/// Even and odd layouts for the reflection `j -> s - j` of an `n`-periodic
/// matrix with corner `c = +-1`.
pub fn reflection_layouts(n: usize, s: usize, c: f64) -> [HalfLayout; 2] {
    [half_layout(n, s % n, 1.0, c), half_layout(n, s % n, -1.0, -c)]
}

/// Real symmetric periodic Jacobi matrix: diagonal `d`, unit off-diagonal,
/// corner `c` coupling the first and last site.
#[derive(Debug, Clone)]
pub struct PeriodicJacobi {
    pub diag: Vec<f64>,
    pub corner: f64,
    halves: Option<[Tridiagonal; 2]>,
}

/// Symmetric tridiagonal matrix; `off[k]` couples sites `k` and `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

const PIVMIN: f64 = 1e-290;

fn guard(p: f64) -> f64 {
    if p.abs() < PIVMIN {
        -PIVMIN
    } else {
        p
    }
}

impl Tridiagonal {
    /// Sturm count of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut neg = 0;
        let mut p = 1.0;
        for (k, &dk) in self.diag.iter().enumerate() {
            let b = if k == 0 { 0.0 } else { self.off[k - 1] };
            p = guard((dk - x) - b * b / p);
            if p < 0.0 {
                neg += 1;
            }
        }
        neg
    }
}

impl PeriodicJacobi {
    pub fn new(diag: Vec<f64>, corner: f64) -> Self {
        Self { diag, corner, halves: None }
    }

    /// The Bloch matrix `H(theta, k)` for a `k` with `e^{iqk}` real. At the
    /// two extremal phases the potential is reflection symmetric and the
    /// matrix splits into even and odd halves.
    pub fn bloch(freq: RationalFrequency, theta: f64, corner: f64) -> Self {
        let m = Self::new(freq.potential(theta), corner);
        let q = freq.q;
        let centre = if theta == 0.0 {
            Some(0)
        } else if theta == 0.5 / q as f64 && q > 1 {
            Some(reflection_centre(freq, 1))
        } else {
            None
        };
        match centre {
            Some(s) => m.with_reflection(s),
            None => m,
        }
    }

    /// Uses the reflection `j -> s - j` (which must fix the potential) to
    /// split the matrix into two irreducible tridiagonal blocks. Returns the
    /// matrix unchanged when the symmetry does not hold or `n < 3`.
    pub fn with_reflection(mut self, s: usize) -> Self {
        let n = self.diag.len();
        if n < 3 || self.corner.abs() != 1.0 {
            return self;
        }
        let scale = self.diag.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let symmetric =
            (0..n).all(|j| (self.diag[(s + n - j % n) % n] - self.diag[j]).abs() <= 1e-12 * scale);
        if !symmetric {
            return self;
        }
        let c = self.corner;
        let even = self.half(s % n, 1.0, c);
        let odd = self.half(s % n, -1.0, -c);
        debug_assert_eq!(even.diag.len() + odd.diag.len(), n);
        self.halves = Some([even, odd]);
        self
    }

    fn half(&self, s: usize, sigma1: f64, sigma2: f64) -> Tridiagonal {
        let l = half_layout(self.diag.len(), s, sigma1, sigma2);
        let mut diag: Vec<f64> = l.sites.iter().map(|&j| self.diag[j]).collect();
        let len = diag.len();
        diag[0] += l.shift[0];
        diag[len - 1] += l.shift[1];
        let mut off = alloc::vec![1.0; len - 1];
        if len > 1 {
            if l.wide[0] {
                off[0] *= core::f64::consts::SQRT_2;
            }
            if l.wide[1] {
                off[len - 2] *= core::f64::consts::SQRT_2;
            }
        }
        Tridiagonal { diag, off }
    }

    /// The even and odd blocks, when a reflection split is in use.
    pub fn halves(&self) -> Option<&[Tridiagonal; 2]> {
        self.halves.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`, by Sylvester inertia.
    ///
    /// With a reflection split this is the sum of two Sturm counts. Otherwise
    /// the leading `(n-1)`-block `T` is counted with Sturm pivots and the
    /// Schur complement of the last entry is
    /// `d - x - c^2 (T^-1)_{00} - 2c (T^-1)_{0m} - (T^-1)_{mm}`, the three
    /// inverse entries coming from the first backward pivot, the determinant
    /// (a rescaled pivot product) and the last forward pivot. Near a double
    /// eigenvalue that complement loses about half the digits.
    pub fn count_below(&self, x: f64) -> usize {
        if let Some([a, b]) = &self.halves {
            return a.count_below(x) + b.count_below(x);
        }
        let d = &self.diag;
        let n = d.len();
        match n {
            0 => 0,
            1 => usize::from(d[0] + 2.0 * self.corner < x),
            2 => {
                let off = 1.0 + self.corner;
                let (lo, hi) = eig2(d[0], d[1], off);
                usize::from(lo < x) + usize::from(hi < x)
            }
            _ => {
                const BIG: f64 = 1e150;
                let m = n - 2;
                let mut neg = 0usize;
                let mut p = guard(d[0] - x);
                let mut mant = p;
                let mut exp2 = 0i32;
                if p < 0.0 {
                    neg += 1;
                }
                for &dj in &d[1..=m] {
                    p = guard((dj - x) - 1.0 / p);
                    if p < 0.0 {
                        neg += 1;
                    }
                    mant *= p;
                    if mant.abs() > BIG {
                        mant *= 2f64.powi(-500);
                        exp2 += 500;
                    } else if mant.abs() < 1.0 / BIG {
                        mant *= 2f64.powi(500);
                        exp2 -= 500;
                    }
                }
                let mut b = guard(d[m] - x);
                for &dj in d[..m].iter().rev() {
                    b = guard((dj - x) - 1.0 / b);
                }
                let c = self.corner;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let inv_det = (1.0 / mant) * 2f64.powi(-exp2.clamp(-1000, 1000));
                let schur = (d[n - 1] - x) - c * c / b - 2.0 * c * sign * inv_det - 1.0 / p;
                neg + usize::from(schur < 0.0)
            }
        }
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        match n {
            0 => return Vec::new(),
            1 => return alloc::vec![self.diag[0] + 2.0 * self.corner],
            2 => {
                let (lo, hi) = eig2(self.diag[0], self.diag[1], 1.0 + self.corner);
                return alloc::vec![lo, hi];
            }
            _ => {}
        }
        let bound = self.diag.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 2.0 + self.corner.abs();
        let mut out = Vec::with_capacity(n);
        let lo = -bound - 1e-9;
        let hi = bound + 1e-9;
        self.isolate(lo, hi, self.count_below(lo), self.count_below(hi), &mut out);
        out
    }

    fn isolate(&self, a: f64, b: f64, ca: usize, cb: usize, out: &mut Vec<f64>) {
        if cb <= ca {
            return;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b || b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            for _ in ca..cb {
                out.push(m);
            }
            return;
        }
        let cm = self.count_below(m);
        self.isolate(a, m, ca, cm.clamp(ca, cb), out);
        self.isolate(m, b, cm.clamp(ca, cb), cb, out);
    }
}

fn eig2(a: f64, d: f64, b: f64) -> (f64, f64) {
    let m = 0.5 * (a + d);
    let r = (0.5 * (a - d)).hypot(b);
    (m - r, m + r)
}

/// Centre `s` with `V_{s-j} = V_j` at the phase `half_steps / (2q)`,
/// `half_steps` in `{0, 1}`.
pub fn reflection_centre(freq: RationalFrequency, half_steps: u8) -> usize {
    let q = freq.q as i128;
    if half_steps == 0 || q == 1 {
        return 0;
    }
    // V_{s-j} = V_j needs p (s mod q) = -1 mod q
    let inv = (freq.p as i128).extended_gcd(&q).x.rem_euclid(q);
    ((q - inv) % q) as usize
}

/// Phases (in half steps `theta = h / (2q)`) and corners of the extremal
/// Bloch matrices, the first solving `Delta = +4` and the second `-4`.
pub fn extremal_setups(_freq: RationalFrequency) -> Result<[(u8, f64); 2], ChambersError> {
    let pairs = [(0u8, 1.0), (1u8, -1.0)];
    Ok(if convention()? { [pairs[1], pairs[0]] } else { pairs })
}

/// The two extremal parameter pairs: `(theta = 0, e^{iqk} = 1)` and
/// `(theta = 1/(2q), e^{iqk} = -1)`.
fn extremal_pairs(freq: RationalFrequency) -> [(f64, f64); 2] {
    [(0.0, 1.0), (0.5 / freq.q as f64, -1.0)]
}

// 0 = untested, 1 = first pair gives Delta = +4, 2 = swapped, 3 = failed
static CONVENTION: AtomicU8 = AtomicU8::new(0);

/// Checks at `q = 1, 2, 3` which extremal pair carries `Delta = +4`.
fn convention() -> Result<bool, ChambersError> {
    match CONVENTION.load(Ordering::Relaxed) {
        1 => return Ok(false),
        2 => return Ok(true),
        3 => return Err(ChambersError::NumericalFailure { p: 0, q: 1 }),
        _ => {}
    }
    let mut votes = [0usize; 2];
    for (p, q) in [(0u64, 1u64), (1, 2), (1, 3)] {
        let f = RationalFrequency { p, q };
        let (theta, corner) = extremal_pairs(f)[0];
        let ev = PeriodicJacobi::bloch(f, theta, corner).eigenvalues();
        if ev.iter().all(|&e| (discriminant_eval(f, e) - 4.0).abs() < 1e-8) {
            votes[0] += 1;
        } else if ev.iter().all(|&e| (discriminant_eval(f, e) + 4.0).abs() < 1e-8) {
            votes[1] += 1;
        }
    }
    let state = if votes[0] == 3 {
        1
    } else if votes[1] == 3 {
        2
    } else {
        3
    };
    CONVENTION.store(state, Ordering::Relaxed);
    match state {
        1 => Ok(false),
        2 => Ok(true),
        _ => Err(ChambersError::NumericalFailure { p: 0, q: 1 }),
    }
}

/// Edges solving `Delta = +4` and `Delta = -4`, each ascending.
pub fn edges_by_sign(freq: RationalFrequency) -> Result<(Vec<f64>, Vec<f64>), ChambersError> {
    let swapped = convention()?;
    let [a, b] = extremal_pairs(freq);
    let ea = PeriodicJacobi::bloch(freq, a.0, a.1).eigenvalues();
    let eb = PeriodicJacobi::bloch(freq, b.0, b.1).eigenvalues();
    let q = freq.q as usize;
    if ea.len() != q || eb.len() != q || ea.iter().chain(&eb).any(|e| !e.is_finite()) {
        return Err(ChambersError::NumericalFailure { p: freq.p, q: freq.q });
    }
    Ok(if swapped { (eb, ea) } else { (ea, eb) })
}

/// The `2q` band edges, ascending; band `l` is `[e_{2l}, e_{2l+1}]` (0-based).
pub fn band_edges(freq: RationalFrequency) -> Result<Vec<f64>, ChambersError> {
    let (mut plus, minus) = edges_by_sign(freq)?;
    plus.extend(minus);
    plus.sort_by(f64::total_cmp);
    Ok(plus)
}

/// The `q` bands as listed intervals, before any merging.
pub fn bands(freq: RationalFrequency) -> Result<Vec<Interval>, ChambersError> {
    let e = band_edges(freq)?;
    Ok(e.chunks(2).map(|w| Interval { lo: w[0], hi: w[1] }).collect())
}

/// `Sigma_{p/q}` with touching bands merged.
pub fn spectrum_rational(freq: RationalFrequency) -> Result<BandSet, ChambersError> {
    BandSet::normalize(&bands(freq)?).map_err(|_| ChambersError::NumericalFailure { p: freq.p, q: freq.q })
}

/// Spectrum at the convergent `p_n/q_n` of `cf`.
#[derive(Debug, Clone)]
pub struct SpectrumApprox {
    pub freq: RationalFrequency,
    pub bands: BandSet,
    /// `6 (2 |alpha - p_n/q_n|)^{1/2}`; a heuristic Hausdorff radius.
    pub error_radius: f64,
}

pub fn error_radius(distance: f64) -> f64 {
    6.0 * (2.0 * distance).sqrt()
}

/// Convergent `p_n/q_n` of `cf` as a reduced frequency.
pub fn convergent_frequency(cf: &ContinuedFraction, n: usize) -> Result<RationalFrequency, ChambersError> {
    let c = cf.convergents(n)?;
    let c = &c[n - 1];
    let (p, q) = match (c.p.to_u64(), c.q.to_u64()) {
        (Some(p), Some(q)) => (p, q),
        _ => return Err(ChambersError::DenominatorTooLarge(alloc::format!("{}", c.q))),
    };
    RationalFrequency::reduced(p, q)
}

pub fn spectrum_approx(cf: &ContinuedFraction, n: usize) -> Result<SpectrumApprox, ChambersError> {
    let freq = convergent_frequency(cf, n)?;
    let bands = spectrum_rational(freq)?;
    let distance = cf.approximation_distance(n)?;
    Ok(SpectrumApprox { freq, bands, error_radius: error_radius(distance) })
}

/// Reduced fractions `p/q`, `q <= q_max`, ordered by `q` then `p`.
pub fn farey_fractions(q_max: u64) -> Vec<RationalFrequency> {
    let mut v = Vec::new();
    for q in 1..=q_max {
        for p in 0..q {
            if p.gcd(&q) == 1 {
                v.push(RationalFrequency { p, q });
            }
        }
    }
    v
}

/// `(p/q, Sigma_{p/q})` for every reduced `p/q` with `q <= q_max`.
pub fn butterfly(q_max: u64) -> Result<Vec<(RationalFrequency, BandSet)>, ChambersError> {
    farey_fractions(q_max).into_iter().map(|f| Ok((f, spectrum_rational(f)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rf(p: u64, q: u64) -> RationalFrequency {
        RationalFrequency::new(p, q).unwrap()
    }

    #[test]
    fn frequency_validation() {
        assert!(RationalFrequency::new(2, 4).is_err());
        assert!(RationalFrequency::new(3, 3).is_err());
        assert!(RationalFrequency::new(0, 0).is_err());
        assert_eq!(RationalFrequency::reduced(1, 1).unwrap(), rf(0, 1));
        assert_eq!(RationalFrequency::reduced(6, 4).unwrap(), rf(1, 2));
    }

    #[test]
    fn closed_forms() {
        for i in 0..100 {
            let e = -5.0 + 10.0 * i as f64 / 99.0;
            assert!((discriminant_eval(rf(0, 1), e) - e).abs() < 1e-10);
            assert!((discriminant_eval(rf(1, 2), e) - (e * e - 4.0)).abs() < 1e-10);
            let c = e * e * e - 6.0 * e;
            assert!((discriminant_eval(rf(1, 3), e) - c).abs() < 1e-10);
            assert!((discriminant_eval(rf(2, 3), e) - c).abs() < 1e-10);
        }
        assert_eq!(discriminant_eval(rf(0, 1), 3.0), 3.0);
        assert!((discriminant_eval(rf(1, 2), 0.0) + 4.0).abs() < 1e-14);
        assert!((discriminant_eval(rf(1, 3), 2.0) + 4.0).abs() < 1e-13);
    }

    #[test]
    fn edges_small_q() {
        let s2 = 2f64.sqrt();
        let s3 = 3f64.sqrt();
        let cases: [(RationalFrequency, Vec<f64>); 3] = [
            (rf(0, 1), vec![-4.0, 4.0]),
            (rf(1, 2), vec![-2.0 * s2, 0.0, 0.0, 2.0 * s2]),
            (rf(1, 3), vec![-1.0 - s3, -2.0, 1.0 - s3, s3 - 1.0, 2.0, 1.0 + s3]),
        ];
        for (f, want) in cases {
            let got = band_edges(f).unwrap();
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{f:?}: {got:?}");
            }
        }
        let s = spectrum_rational(rf(1, 2)).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.intervals()[0].lo + 2.0 * s2).abs() < 1e-12);
        let s = spectrum_rational(rf(1, 3)).unwrap();
        assert_eq!(s.len(), 3);
        let gap = s.intervals()[1].lo - s.intervals()[0].hi;
        assert!((gap - (3.0 - s3)).abs() < 1e-12);
        assert_eq!(spectrum_rational(rf(0, 1)).unwrap().intervals(), &[Interval { lo: -4.0, hi: 4.0 }]);
    }

    #[test]
    fn sign_convention_is_fixed() {
        let (plus, minus) = edges_by_sign(rf(1, 3)).unwrap();
        for e in plus {
            assert!((discriminant_eval(rf(1, 3), e) - 4.0).abs() < 1e-10);
        }
        for e in minus {
            assert!((discriminant_eval(rf(1, 3), e) + 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn monic_degree_q() {
        for (p, q) in [(1, 5), (2, 7), (3, 8), (5, 13)] {
            let f = rf(p, q);
            let e = 1e4;
            let r = discriminant_eval(f, e) / e.powi(q as i32);
            assert!((r - 1.0).abs() < 1e-6, "{p}/{q}: {r}");
        }
    }

    #[test]
    fn edge_consistency_and_interior() {
        for f in farey_fractions(12) {
            let e = band_edges(f).unwrap();
            for &x in &e {
                assert!((discriminant_eval(f, x).abs() - 4.0).abs() < 1e-8, "{f:?} {x}");
            }
            for w in e.chunks(2) {
                if w[1] > w[0] {
                    assert!(discriminant_eval(f, 0.5 * (w[0] + w[1])).abs() < 4.0);
                }
            }
        }
    }

    #[test]
    fn inertia_matches_closed_form_for_free_chain() {
        // zero potential: eigenvalues 2 cos(2 pi j / n) (corner +1) or
        // 2 cos(pi (2j + 1) / n) (corner -1)
        for n in [3usize, 4, 7, 16, 33] {
            for (corner, shift) in [(1.0, 0.0), (-1.0, 0.5)] {
                let m = PeriodicJacobi::new(vec![0.0; n], corner).with_reflection(0);
                let plain = PeriodicJacobi::new(vec![0.0; n], corner);
                let mut want: Vec<f64> =
                    (0..n).map(|j| 2.0 * (2.0 * PI * (j as f64 + shift) / n as f64).cos()).collect();
                want.sort_by(f64::total_cmp);
                let got = m.eigenvalues();
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-12, "n={n} corner={corner}");
                }
                // unsplit route: half the digits at the double eigenvalues
                for (g, w) in plain.eigenvalues().iter().zip(&want) {
                    assert!((g - w).abs() < 1e-6, "n={n} corner={corner}");
                }
            }
        }
    }

    #[test]
    fn symmetry_under_reflection() {
        for f in farey_fractions(10) {
            let s = spectrum_rational(f).unwrap();
            assert!(s.hausdorff_distance(&s.reflect()).unwrap() < 1e-10);
            let g = RationalFrequency::reduced(f.q - f.p, f.q).unwrap();
            assert!(s.hausdorff_distance(&spectrum_rational(g).unwrap()).unwrap() < 1e-10);
        }
    }

    #[test]
    fn approx_examples() {
        let golden = ContinuedFraction::constant(1).unwrap();
        let a = spectrum_approx(&golden, 1).unwrap();
        assert_eq!(a.freq, rf(0, 1));
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        assert!((a.error_radius - 6.0 * (2.0 * (1.0 - phi)).sqrt()).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for n in 1..=12 {
            let cur = spectrum_approx(&golden, n).unwrap();
            assert!(cur.error_radius < prev);
            prev = cur.error_radius;
            let next = spectrum_approx(&golden, n + 1).unwrap();
            let d = cur.bands.hausdorff_distance(&next.bands).unwrap();
            assert!(d <= cur.error_radius + next.error_radius);
        }
    }

    #[test]
    fn butterfly_rows() {
        let b = butterfly(1).unwrap();
        assert_eq!(b.len(), 1);
        let b = butterfly(2).unwrap();
        assert_eq!(b[1].0, rf(1, 2));
        assert!((b[1].1.intervals()[0].hi - 8f64.sqrt()).abs() < 1e-12);
        let total: usize = (1..=8u64).map(|q| (0..q).filter(|p| p.gcd(&q) == 1).count()).sum();
        assert_eq!(butterfly(8).unwrap().len(), total);
    }

    fn dense(m: &PeriodicJacobi) -> Vec<f64> {
        let n = m.dim();
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            a[(j, j)] = m.diag[j];
            if j + 1 < n {
                a[(j, j + 1)] = 1.0;
                a[(j + 1, j)] = 1.0;
            }
        }
        a[(0, n - 1)] += m.corner;
        a[(n - 1, 0)] += m.corner;
        let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn bloch_eigenvalues_match_dense_solver() {
        for f in farey_fractions(13).into_iter().filter(|f| f.q >= 3) {
            for (theta, corner) in extremal_pairs(f) {
                let m = PeriodicJacobi::bloch(f, theta, corner);
                assert!(m.halves().is_some(), "{f:?} {theta}");
                let want = dense(&m);
                for (g, w) in m.eigenvalues().iter().zip(&want) {
                    assert!((g - w).abs() < 1e-11, "{f:?}");
                }
            }
        }
    }

    #[test]
    fn unsplit_counts_match_dense_solver() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 3..20 {
            let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for corner in [1.0, -1.0] {
                let m = PeriodicJacobi::new(diag.clone(), corner);
                let want = dense(&m);
                for (g, w) in m.eigenvalues().iter().zip(&want) {
                    assert!((g - w).abs() < 1e-9, "n={n}");
                }
            }
        }
    }
}
