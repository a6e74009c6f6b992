//! Configurations: an interval `I` with an ordered family of disjoint
//! subintervals, their zone classification, the scale-law audit, the
//! `delta`-sum and generators for standard and `(k, rho)` configurations.
//!
//! Bands are stored as runs of equally long, equally spaced members and
//! band lengths are kept as natural logarithms: outer bands can be as short
//! as `exp(-C/h)` and small `h` means billions of bands.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{E, LN_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bandset::{BandSet, Interval};
use crate::chambers;
use crate::contfrac::ContinuedFraction;
use crate::numeric::{log_add_exp, Neumaier};

/// Relative slack allowed when comparing a required constant against `C`.
const AUDIT_TOL: f64 = 1e-9;
/// Zone segments up to this size are audited member by member.
const EXHAUSTIVE: u64 = 64;
/// Relative margin kept by tiling pieces (gaps, counts).
const TIGHT: f64 = 1e-6;
/// Upper limit on runs used for the outer zone of a generated side.
const OUTER_RUNS: u64 = 512;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("configuration is not standardizable: {0}")]
    NotStandardizable(String),
    #[error("delta must lie in (0,1), got {0}")]
    InvalidDelta(f64),
    #[error("no feasible h; binding majorant {0:?}")]
    Infeasible(Majorant),
    #[error("generation infeasible: {0}")]
    GenerationInfeasible(String),
    #[error("block inference is ambiguous; supply an explicit grouping")]
    RequiresExplicitGrouping,
    #[error("spectrum: {0}")]
    Spectrum(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Parameters `(varsigma, epsilon, M, C, h)` of a standard configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigParams {
    pub varsigma: f64,
    pub epsilon: f64,
    pub m: f64,
    pub c: f64,
    pub h: f64,
}

impl ConfigParams {
    pub fn new(varsigma: f64, epsilon: f64, m: f64, c: f64, h: f64) -> Result<Self, ConfigError> {
        let p = Self { varsigma, epsilon, m, c, h };
        p.validate()?;
        Ok(p)
    }

    /// Checks everything except `h`.
    pub fn validate_shape(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::InvalidParams(m.into()));
        if ![self.varsigma, self.epsilon, self.m, self.c].iter().all(|v| v.is_finite()) {
            return bad("non-finite parameter");
        }
        if !(self.varsigma > 0.0 && self.varsigma < 4.0) {
            return bad("varsigma must lie in (0,4)");
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.varsigma / 100.0) {
            return bad("epsilon must lie in (0, varsigma/100)");
        }
        if !(self.c > 1.0 && self.m > self.c) {
            return bad("need M > C > 1");
        }
        Ok(())
    }

    /// `min(1/C, epsilon/M, exp(-1/C))`; `h` must lie strictly below it.
    pub fn h_bound(&self) -> f64 {
        (1.0 / self.c).min(self.epsilon / self.m).min((-1.0 / self.c).exp())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_shape()?;
        if !(self.h > 0.0 && self.h < self.h_bound()) {
            return Err(ConfigError::InvalidParams(format!(
                "h = {} must lie in (0, {})",
                self.h,
                self.h_bound()
            )));
        }
        Ok(())
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..*self }
    }

    pub fn h_hat(&self) -> f64 {
        h_hat(self.c)
    }

    /// `min(h_hat, 2 rho varsigma / (10 C))`.
    pub fn h_tilde(&self, rho: f64) -> f64 {
        self.h_hat().min(2.0 * rho * self.varsigma / (10.0 * self.c))
    }
}

/// `x -> scale * x + shift`, `scale > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub scale: f64,
    pub shift: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { scale: 1.0, shift: 0.0 };

    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }

    pub fn inverse(&self) -> Affine {
        Affine { scale: 1.0 / self.scale, shift: -self.shift / self.scale }
    }

    /// `self` after `first`.
    pub fn after(&self, first: &Affine) -> Affine {
        Affine { scale: self.scale * first.scale, shift: self.scale * first.shift + self.shift }
    }
}

/// `count` bands of length `exp(log_len)` spaced by `gap`, the first one
/// starting at `lo`. `lead` is the gap between the previous band and the
/// first member; gaps are read from `gap`/`lead`, not from differences of
/// endpoints, so tiny gaps far from the origin keep their precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRun {
    pub lo: f64,
    pub log_len: f64,
    pub gap: f64,
    pub lead: f64,
    pub count: u64,
}

impl BandRun {
    pub fn single(lo: f64, hi: f64, lead: f64) -> Self {
        Self { lo, log_len: (hi - lo).ln(), gap: 0.0, lead, count: 1 }
    }

    pub fn len(&self) -> f64 {
        self.log_len.exp()
    }

    pub fn pitch(&self) -> f64 {
        self.gap + self.len()
    }

    pub fn member_lo(&self, j: u64) -> f64 {
        if j == 0 {
            self.lo
        } else {
            self.lo + j as f64 * self.pitch()
        }
    }

    pub fn member_hi(&self, j: u64) -> f64 {
        self.member_lo(j) + self.len()
    }

    pub fn last_hi(&self) -> f64 {
        self.member_hi(self.count - 1)
    }

    fn affine(&self, a: f64, b: f64) -> Self {
        Self { lo: a * self.lo + b, log_len: self.log_len + a.ln(), gap: a * self.gap, lead: a * self.lead, count: self.count }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    hull: Interval,
    runs: Vec<BandRun>,
    starts: Vec<u64>,
    total: u64,
    central: Option<u64>,
    frame: Option<Affine>,
}

impl Configuration {
    /// Validates ordering, containment and `#J >= 3`. A run containing the
    /// central band is split so the central band is a run of its own.
    pub fn new(hull: Interval, runs: Vec<BandRun>, central: Option<u64>) -> Result<Self, ConfigError> {
        let cfg = Self::family(hull, runs)?;
        if cfg.total < 3 {
            return Err(invalid(format!("need at least 3 bands, got {}", cfg.total)));
        }
        match central {
            Some(c) => cfg.with_central(c),
            None => Ok(cfg),
        }
    }

    /// Ordered disjoint bands inside `hull` without the three-band minimum,
    /// e.g. the child family of a Moran node.
    pub fn family(hull: Interval, runs: Vec<BandRun>) -> Result<Self, ConfigError> {
        if !(hull.len() > 0.0) || !hull.lo.is_finite() || !hull.hi.is_finite() {
            return Err(invalid("hull must have positive length"));
        }
        let tol = 1e-12 * hull.len();
        let mut prev_hi = f64::NEG_INFINITY;
        for (k, r) in runs.iter().enumerate() {
            if r.count == 0 || !r.lo.is_finite() || !(r.log_len < f64::INFINITY) || r.log_len.is_nan() {
                return Err(invalid(format!("run {k} is malformed")));
            }
            if r.count > 1 && !(r.gap > 0.0) {
                return Err(invalid(format!("run {k} has members that are not disjoint")));
            }
            if k > 0 && !(r.lead > 0.0 && r.lo >= prev_hi) {
                return Err(invalid(format!("run {k} does not lie strictly right of its predecessor")));
            }
            prev_hi = r.last_hi();
        }
        let (first, last) = match (runs.first(), runs.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(invalid("no bands")),
        };
        if first.lo < hull.lo - tol || last.last_hi() > hull.hi + tol {
            return Err(invalid("bands leave the hull"));
        }
        let mut cfg = Self { hull, runs, starts: Vec::new(), total: 0, central: None, frame: None };
        cfg.reindex();
        Ok(cfg)
    }

    /// One run per interval; `central` indexes into `bands`.
    pub fn from_intervals(hull: Interval, bands: &[Interval], central: Option<u64>) -> Result<Self, ConfigError> {
        let mut runs = Vec::with_capacity(bands.len());
        let mut prev_hi = hull.lo;
        for b in bands {
            if !(b.hi > b.lo) {
                return Err(invalid(format!("band [{}, {}] has no length", b.lo, b.hi)));
            }
            runs.push(BandRun::single(b.lo, b.hi, b.lo - prev_hi));
            prev_hi = b.hi;
        }
        Self::new(hull, runs, central)
    }

    pub fn from_bandset(hull: Interval, bands: &BandSet, central: Option<u64>) -> Result<Self, ConfigError> {
        Self::from_intervals(hull, bands.intervals(), central)
    }

    fn reindex(&mut self) {
        self.starts.clear();
        let mut acc = 0u64;
        for r in &self.runs {
            self.starts.push(acc);
            acc += r.count;
        }
        self.total = acc;
    }

    fn set_central(&mut self, c: u64) -> Result<(), ConfigError> {
        if c >= self.total {
            return Err(invalid(format!("central index {c} out of range")));
        }
        let (ri, j) = self.locate(c);
        let r = self.runs[ri];
        if r.count > 1 {
            let mut parts = Vec::new();
            if j > 0 {
                parts.push(BandRun { count: j, ..r });
            }
            let lo = r.member_lo(j);
            let lead = if j > 0 { r.gap } else { r.lead };
            parts.push(BandRun { lo, log_len: r.log_len, gap: 0.0, lead, count: 1 });
            if j + 1 < r.count {
                parts.push(BandRun { lo: r.member_lo(j + 1), lead: r.gap, count: r.count - j - 1, ..r });
            }
            self.runs.splice(ri..=ri, parts);
            self.reindex();
        }
        self.central = Some(c);
        Ok(())
    }

    pub fn with_central(mut self, c: u64) -> Result<Self, ConfigError> {
        self.set_central(c)?;
        Ok(self)
    }

    /// Records the affine map taking this configuration to its standard frame.
    pub fn with_frame(mut self, frame: Affine) -> Self {
        self.frame = Some(frame);
        self
    }

    pub fn hull(&self) -> Interval {
        self.hull
    }

    pub fn runs(&self) -> &[BandRun] {
        &self.runs
    }

    pub fn band_count(&self) -> u64 {
        self.total
    }

    pub fn central(&self) -> Option<u64> {
        self.central
    }

    pub fn frame(&self) -> Option<Affine> {
        self.frame
    }

    /// Global index of member `j` of run `ri`.
    pub fn global_index(&self, ri: usize, j: u64) -> u64 {
        self.starts[ri] + j
    }

    /// `(run, member)` of global band `i`.
    pub fn locate(&self, i: u64) -> (usize, u64) {
        let ri = self.starts.partition_point(|&s| s <= i) - 1;
        (ri, i - self.starts[ri])
    }

    pub fn band(&self, i: u64) -> Interval {
        let (ri, j) = self.locate(i);
        let r = &self.runs[ri];
        Interval { lo: r.member_lo(j), hi: r.member_hi(j) }
    }

    pub fn log_len(&self, i: u64) -> f64 {
        self.runs[self.locate(i).0].log_len
    }

    pub fn band_center(&self, i: u64) -> f64 {
        let (ri, j) = self.locate(i);
        let r = &self.runs[ri];
        r.member_lo(j) + 0.5 * r.len()
    }

    /// Length and center of the gap on the side of band `i` facing the
    /// central band. `None` for the central band.
    pub fn inward_gap(&self, i: u64) -> Option<(f64, f64)> {
        let c = self.central?;
        let (ri, j) = self.locate(i);
        let r = &self.runs[ri];
        if i > c {
            let g = if j > 0 { r.gap } else { r.lead };
            Some((g, r.member_lo(j) - 0.5 * g))
        } else if i < c {
            let g = if j + 1 < r.count { r.gap } else { self.runs[ri + 1].lead };
            Some((g, r.member_hi(j) + 0.5 * g))
        } else {
            None
        }
    }

    /// Smallest band index whose right endpoint exceeds `x`.
    pub fn first_ending_after(&self, x: f64) -> Option<u64> {
        let ri = self.runs.partition_point(|r| r.last_hi() <= x);
        let r = self.runs.get(ri)?;
        let j = if r.member_hi(0) > x {
            0
        } else {
            let mut j = (((x - r.lo - r.len()) / r.pitch()).floor().max(0.0) as u64).min(r.count - 1);
            while j > 0 && r.member_hi(j - 1) > x {
                j -= 1;
            }
            while r.member_hi(j) <= x {
                j += 1;
            }
            j
        };
        Some(self.starts[ri] + j)
    }

    /// `(min, max)` of the log band lengths.
    pub fn log_len_range(&self) -> (f64, f64) {
        self.runs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.log_len), b.max(r.log_len)))
    }

    /// All bands as intervals; refuses beyond `limit` bands.
    pub fn intervals(&self, limit: u64) -> Result<Vec<Interval>, ConfigError> {
        if self.total > limit {
            return Err(invalid(format!("{} bands exceed the limit {limit}", self.total)));
        }
        let mut v = Vec::with_capacity(self.total as usize);
        for r in &self.runs {
            for j in 0..r.count {
                v.push(Interval { lo: r.member_lo(j), hi: r.member_hi(j) });
            }
        }
        Ok(v)
    }

    /// Image under `x -> a x + b`; a recorded frame is carried along.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self, ConfigError> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(invalid("affine scale must be positive and finite"));
        }
        let inv = Affine { scale: a, shift: b }.inverse();
        Ok(Self {
            hull: Interval { lo: a * self.hull.lo + b, hi: a * self.hull.hi + b },
            runs: self.runs.iter().map(|r| r.affine(a, b)).collect(),
            starts: self.starts.clone(),
            total: self.total,
            central: self.central,
            frame: self.frame.map(|f| f.after(&inv)),
        })
    }

    /// Bands `first..=last` with the given hull and central band (a global
    /// index inside the range).
    pub fn sub_configuration(
        &self,
        first: u64,
        last: u64,
        hull: Interval,
        central: Option<u64>,
    ) -> Result<Self, ConfigError> {
        if first > last || last >= self.total {
            return Err(invalid("empty or out of range band selection"));
        }
        let (r0, j0) = self.locate(first);
        let (r1, j1) = self.locate(last);
        let mut runs = Vec::with_capacity(r1 - r0 + 1);
        for ri in r0..=r1 {
            let r = self.runs[ri];
            let a = if ri == r0 { j0 } else { 0 };
            let b = if ri == r1 { j1 } else { r.count - 1 };
            let lead = if a > 0 { r.gap } else { r.lead };
            runs.push(BandRun { lo: r.member_lo(a), lead, count: b - a + 1, ..r });
        }
        Self::new(hull, runs, central.map(|c| c - first))
    }
}

/// Zone of a band in a standard frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Zone {
    Inner,
    OuterMinus,
    OuterPlus,
    Middle,
}

/// Members `from..to` of run `run`, all in `zone`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneSegment {
    pub run: usize,
    pub from: u64,
    pub to: u64,
    pub zone: Zone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ZoneCounts {
    pub inner: u64,
    pub outer_minus: u64,
    pub outer_plus: u64,
    pub middle: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneClassification {
    pub segments: Vec<ZoneSegment>,
    pub counts: ZoneCounts,
    /// Bands left and right of the central band.
    pub r: u64,
    pub s: u64,
    /// Inner bands left and right of the central band.
    pub r1: u64,
    pub s1: u64,
}

impl ZoneClassification {
    pub fn zone_of(&self, cfg: &Configuration, i: u64) -> Zone {
        let (ri, j) = cfg.locate(i);
        let k = self.segments.partition_point(|s| (s.run, s.to) <= (ri, j));
        self.segments[k].zone
    }
}

/// First index in `0..n` where the monotone predicate turns true.
fn first_true(n: u64, pred: impl Fn(u64) -> bool) -> u64 {
    let (mut lo, mut hi) = (0u64, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

fn central_checked(cfg: &Configuration) -> Result<u64, ConfigError> {
    let c = cfg
        .central
        .ok_or_else(|| ConfigError::NotStandardizable("no central band designated".into()))?;
    let b = cfg.band(c);
    if !(b.lo <= 0.0 && 0.0 <= b.hi) {
        return Err(ConfigError::NotStandardizable(format!("central band [{}, {}] does not contain 0", b.lo, b.hi)));
    }
    Ok(c)
}

/// Inner bands meet `[-Mh, Mh]`; outer bands meet `[eta, -epsilon]` or
/// `[epsilon, xi]`; the rest are middle. Inner wins over outer when both
/// apply.
pub fn classify(cfg: &Configuration, params: &ConfigParams) -> Result<ZoneClassification, ConfigError> {
    let c = central_checked(cfg)?;
    let mh = params.m * params.h;
    let eps = params.epsilon;
    let zone_at = |lo: f64, hi: f64| {
        if lo <= mh && hi >= -mh {
            Zone::Inner
        } else if lo <= -eps {
            Zone::OuterMinus
        } else if hi >= eps {
            Zone::OuterPlus
        } else {
            Zone::Middle
        }
    };
    let mut segments: Vec<ZoneSegment> = Vec::new();
    let mut counts = ZoneCounts::default();
    let mut inner_min = u64::MAX;
    let mut inner_max = 0u64;
    for (ri, r) in cfg.runs.iter().enumerate() {
        let n = r.count;
        let mut cuts = [
            0,
            n,
            first_true(n, |j| r.member_hi(j) >= -mh),
            first_true(n, |j| r.member_lo(j) > mh),
            first_true(n, |j| r.member_lo(j) > -eps),
            first_true(n, |j| r.member_hi(j) >= eps),
        ];
        cuts.sort_unstable();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == b {
                continue;
            }
            let zone = zone_at(r.member_lo(a), r.member_hi(a));
            match zone {
                Zone::Inner => {
                    counts.inner += b - a;
                    inner_min = inner_min.min(cfg.global_index(ri, a));
                    inner_max = inner_max.max(cfg.global_index(ri, b - 1));
                }
                Zone::OuterMinus => counts.outer_minus += b - a,
                Zone::OuterPlus => counts.outer_plus += b - a,
                Zone::Middle => counts.middle += b - a,
            }
            match segments.last_mut() {
                Some(s) if s.run == ri && s.zone == zone && s.to == a => s.to = b,
                _ => segments.push(ZoneSegment { run: ri, from: a, to: b, zone }),
            }
        }
    }
    Ok(ZoneClassification {
        segments,
        counts,
        r: c,
        s: cfg.total - 1 - c,
        r1: c - inner_min,
        s1: inner_max - c,
    })
}

/// Per-zone `sum (|J|/|I|)^delta`. `total` is summed independently over
/// all bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSum {
    pub total: f64,
    pub inner: f64,
    pub outer: f64,
    pub middle: f64,
}

fn check_delta(delta: f64) -> Result<(), ConfigError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::InvalidDelta(delta))
    }
}

pub fn delta_sum(cfg: &Configuration, zones: &ZoneClassification, delta: f64) -> Result<DeltaSum, ConfigError> {
    check_delta(delta)?;
    let ln_i = cfg.hull.len().ln();
    let term = |r: &BandRun, n: u64| n as f64 * (delta * (r.log_len - ln_i)).exp();
    let mut total = Neumaier::new();
    for r in &cfg.runs {
        total.add(term(r, r.count));
    }
    let (mut inner, mut outer, mut middle) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for s in &zones.segments {
        let t = term(&cfg.runs[s.run], s.to - s.from);
        match s.zone {
            Zone::Inner => inner.add(t),
            Zone::OuterMinus | Zone::OuterPlus => outer.add(t),
            Zone::Middle => middle.add(t),
        }
    }
    Ok(DeltaSum { total: total.total(), inner: inner.total(), outer: outer.total(), middle: middle.total() })
}

/// `sum (|J|/|I|)^delta` over arbitrary bands of `hull`.
pub fn delta_sum_intervals(hull: Interval, bands: &[Interval], delta: f64) -> Result<f64, ConfigError> {
    check_delta(delta)?;
    let mut s = Neumaier::new();
    for b in bands {
        s.add((b.len() / hull.len()).powf(delta));
    }
    Ok(s.total())
}

/// Maps `cfg` into its standard frame. A recorded frame is used as is;
/// otherwise an already standard configuration is left alone and anything
/// else is sent by the map taking the central midpoint to 0 and the farther
/// hull endpoint to `+-4`.
pub fn normalize_to_standard(cfg: &Configuration) -> Result<(Configuration, Affine), ConfigError> {
    let c = cfg
        .central
        .ok_or_else(|| ConfigError::NotStandardizable("no central band designated".into()))?;
    let t = match cfg.frame {
        Some(f) => f,
        None => {
            let b = cfg.band(c);
            let hull = cfg.hull;
            if b.lo <= 0.0 && 0.0 <= b.hi && hull.lo >= -4.0 && hull.hi <= 4.0 {
                Affine::IDENTITY
            } else {
                let m = b.mid();
                let reach = (m - hull.lo).max(hull.hi - m);
                let scale = 4.0 / reach;
                Affine { scale, shift: -scale * m }
            }
        }
    };
    let mut out = if t == Affine::IDENTITY { cfg.clone() } else { cfg.affine(t.scale, t.shift)? };
    out.frame = Some(Affine::IDENTITY);
    Ok((out, t))
}

/// Item of the standard-configuration audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuditItem {
    /// `[-varsigma, varsigma] in I in [-4, 4]`.
    HullBounds,
    /// `1/(Ch) <= r, s <= C/h`.
    Counts,
    /// Central band length in `[h/C, Ch]`.
    CentralSize,
    /// Extremal bands touch the hull.
    HullCoincidence,
    Inner,
    Outer,
    Middle,
}

impl AuditItem {
    pub const ALL: [AuditItem; 7] = [
        AuditItem::HullBounds,
        AuditItem::Counts,
        AuditItem::CentralSize,
        AuditItem::HullCoincidence,
        AuditItem::Inner,
        AuditItem::Outer,
        AuditItem::Middle,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            AuditItem::HullBounds => "i",
            AuditItem::Counts => "ii",
            AuditItem::CentralSize => "iii-a",
            AuditItem::HullCoincidence => "iii-b",
            AuditItem::Inner => "iv",
            AuditItem::Outer => "v",
            AuditItem::Middle => "vi",
        }
    }

    /// Whether enlarging `C` can repair the item.
    pub fn depends_on_c(&self) -> bool {
        !matches!(self, AuditItem::HullBounds | AuditItem::HullCoincidence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemReport {
    pub item: AuditItem,
    pub pass: bool,
    /// For `C`-dependent items `ln(C / required)`; otherwise a distance
    /// (relative to `|I|` for the hull coincidence). Nonnegative passes.
    pub slack: f64,
    /// Smallest constant satisfying the item, when it depends on `C`.
    pub required_c: Option<f64>,
    /// Number of inequalities evaluated.
    pub checked: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub items: Vec<ItemReport>,
    pub pass: bool,
    /// Smallest `C' >= C` passing every `C`-dependent item.
    pub effective_constant: f64,
    /// Whether the parameters themselves satisfy the admissible chain.
    pub params_valid: bool,
    pub r: u64,
    pub s: u64,
    pub r1: u64,
    pub s1: u64,
    pub zones: ZoneCounts,
    pub log_j_min: f64,
    pub log_j_max: f64,
}

impl AuditReport {
    pub fn item(&self, item: AuditItem) -> &ItemReport {
        self.items.iter().find(|r| r.item == item).expect("every item is reported")
    }
}

#[derive(Default)]
struct Need {
    req: f64,
    checked: u64,
}

impl Need {
    fn push(&mut self, req: f64) {
        self.checked += 1;
        if req > self.req || req.is_nan() {
            self.req = if req.is_nan() { f64::INFINITY } else { req };
        }
    }

    /// `x >= a / C`.
    fn ge(&mut self, x: f64, a: f64) {
        self.push(if a <= 0.0 {
            0.0
        } else if x <= 0.0 {
            f64::INFINITY
        } else {
            a / x
        });
    }

    /// `x <= C b`.
    fn le(&mut self, x: f64, b: f64) {
        self.push(if x <= 0.0 {
            0.0
        } else if b <= 0.0 {
            f64::INFINITY
        } else {
            x / b
        });
    }

    /// `ln x >= ln a - ln C`.
    fn ge_log(&mut self, ln_x: f64, ln_a: f64) {
        self.push((ln_a - ln_x).exp());
    }

    /// `ln x <= ln C + ln b`.
    fn le_log(&mut self, ln_x: f64, ln_b: f64) {
        self.push((ln_x - ln_b).exp());
    }

    fn report(&self, item: AuditItem, c: f64) -> ItemReport {
        let slack = if self.req <= 0.0 { f64::INFINITY } else { (c / self.req).ln() };
        ItemReport { item, pass: self.req <= c * (1.0 + AUDIT_TOL), slack, required_c: Some(self.req), checked: self.checked }
    }
}

/// Smallest `C > 0` with `f(C) <= target` for `f` decreasing in `C`.
fn solve_decreasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    if f(lo.exp()) <= target {
        return 0.0;
    }
    if !(f(hi.exp()) <= target) {
        return f64::INFINITY;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp()) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    hi.exp()
}

/// Middle band laws at center `|c|`:
/// `exp(-|c| C/h) h/(-C ln|c|) <= |J| <= exp(-|c|/(Ch)) C h/(-ln|c|)`.
fn need_middle_band(need: &mut Need, ln_j: f64, c: f64, h: f64) {
    if !(c < 1.0 && c > 0.0) {
        need.push(f64::INFINITY);
        need.push(f64::INFINITY);
        return;
    }
    let ll = (-c.ln()).ln();
    let lower = |cc: f64| -c * cc / h + h.ln() - cc.ln() - ll;
    need.push(solve_decreasing(lower, ln_j));
    let upper = |cc: f64| -(-c / (cc * h) + cc.ln() + h.ln() - ll);
    need.push(solve_decreasing(upper, -ln_j));
}

/// Audits the items of a standard configuration. `cfg` must already be in
/// its standard frame; failures of individual items are data.
pub fn audit_standard(cfg: &Configuration, params: &ConfigParams) -> Result<AuditReport, ConfigError> {
    let zones = classify(cfg, params)?;
    let central = cfg.central.expect("checked by classify");
    let h = params.h;
    let ln_h = h.ln();
    let ell = -ln_h;
    let ln_ell = ell.ln();
    let c = params.c;
    let hull = cfg.hull;

    let hull_slack = (-params.varsigma - hull.lo)
        .min(hull.hi - params.varsigma)
        .min(hull.lo + 4.0)
        .min(4.0 - hull.hi);
    let item_i = ItemReport {
        item: AuditItem::HullBounds,
        pass: hull_slack >= -1e-12,
        slack: hull_slack,
        required_c: None,
        checked: 4,
    };

    let mut counts = Need::default();
    for n in [zones.r, zones.s] {
        counts.ge(n as f64, 1.0 / h);
        counts.le(n as f64, 1.0 / h);
    }

    let mut central_need = Need::default();
    let ln_j0 = cfg.log_len(central);
    central_need.ge_log(ln_j0, ln_h);
    central_need.le_log(ln_j0, ln_h);

    let first = cfg.band(0);
    let last = cfg.band(cfg.total - 1);
    let dev = (first.lo - hull.lo).abs().max((last.hi - hull.hi).abs()) / hull.len();
    let item_iiib = ItemReport {
        item: AuditItem::HullCoincidence,
        pass: dev <= 1e-12,
        slack: -dev,
        required_c: None,
        checked: 2,
    };

    let mut inner = Need::default();
    for n in [zones.r1, zones.s1] {
        inner.ge(n as f64, ell);
        inner.le(n as f64, ell);
    }
    let mut outer = Need::default();
    let mut middle = Need::default();

    let mut reps: Vec<u64> = Vec::new();
    for seg in &zones.segments {
        reps.clear();
        if seg.to - seg.from <= EXHAUSTIVE {
            reps.extend(seg.from..seg.to);
        } else {
            reps.extend([seg.from, seg.from + 1, seg.to - 2, seg.to - 1]);
        }
        let run = &cfg.runs[seg.run];
        for &j in &reps {
            let i = cfg.global_index(seg.run, j);
            if i == central {
                continue;
            }
            let (g, gc) = cfg.inward_gap(i).expect("not central");
            let ln_j = run.log_len;
            match seg.zone {
                Zone::Inner => {
                    inner.ge_log(ln_j, ln_h - ln_ell);
                    inner.le_log(ln_j, ln_h - ln_ell);
                    inner.ge(g, h / ell);
                    inner.le(g, h);
                }
                Zone::OuterMinus | Zone::OuterPlus => {
                    outer.push(if ln_j >= 0.0 { 0.0 } else { -h * ln_j });
                    outer.push(if ln_j < 0.0 { 1.0 / (h * -ln_j) } else { f64::INFINITY });
                    outer.ge(g, h);
                    outer.le(g, h);
                }
                Zone::Middle => {
                    let cc = (run.member_lo(j) + 0.5 * run.len()).abs();
                    need_middle_band(&mut middle, ln_j, cc, h);
                    let ga = gc.abs();
                    if ga > 0.0 && ga < 1.0 {
                        let lg = -ga.ln();
                        middle.ge(g, h / lg);
                        middle.le(g, h / lg);
                    } else {
                        middle.push(f64::INFINITY);
                    }
                }
            }
        }
    }

    let items = alloc::vec![
        item_i,
        counts.report(AuditItem::Counts, c),
        central_need.report(AuditItem::CentralSize, c),
        item_iiib,
        inner.report(AuditItem::Inner, c),
        outer.report(AuditItem::Outer, c),
        middle.report(AuditItem::Middle, c),
    ];
    let effective_constant = items.iter().filter_map(|r| r.required_c).fold(c, f64::max);
    let pass = items.iter().all(|r| r.pass);
    let (log_j_min, log_j_max) = cfg.log_len_range();
    Ok(AuditReport {
        items,
        pass,
        effective_constant,
        params_valid: params.validate().is_ok(),
        r: zones.r,
        s: zones.s,
        r1: zones.r1,
        s1: zones.s1,
        zones: zones.counts,
        log_j_min,
        log_j_max,
    })
}

/// Largest `h` in `[h_min, h_max]` reachable from `h_min` through points
/// where `ok` holds, located on a log grid then bisected to relative
/// precision `rel`. `None` when `ok(h_min)` fails; the flag reports that
/// the scan reached `h_max`.
fn scan_largest(ok: impl Fn(f64) -> bool, h_min: f64, h_max: f64, rel: f64) -> Option<(f64, bool)> {
    if !ok(h_min) {
        return None;
    }
    let step = 10f64.powf(0.02);
    let mut lo = h_min;
    loop {
        let next = lo * step;
        if next >= h_max {
            if ok(h_max) {
                return Some((h_max, true));
            }
            return Some((bisect_log(&ok, lo, h_max, rel), false));
        }
        if !ok(next) {
            return Some((bisect_log(&ok, lo, next, rel), false));
        }
        lo = next;
    }
}

fn bisect_log(ok: &impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, rel: f64) -> f64 {
    while hi / lo > 1.0 + rel {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest `h` such that every smaller scale satisfies
/// `exp(-1/(Ch)) <= Ch` and `exp(-C/h) <= exp(-C/(10h)) h/(-C ln h)`.
pub fn h_hat(c: f64) -> f64 {
    let ok = |h: f64| {
        let ell = -h.ln();
        let a = -1.0 / (c * h) - (c * h).ln();
        let b = -c / h + c / (10.0 * h) - h.ln() + c.ln() + ell.ln();
        ell > 0.0 && a <= 0.0 && b <= 0.0
    };
    scan_largest(ok, 1e-300, 1.0 - 1e-12, 1e-9).map(|(h, _)| h).unwrap_or(0.0)
}

/// Which zone majorant bounds `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Majorant {
    Inner,
    Outer,
    Middle,
    /// The search reached `min(h_tilde, parameter bound)`.
    Cap,
}

/// Logarithms of the three worst-case zone sums of `sum |J|^delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneMajorants {
    pub ln_inner: f64,
    pub ln_outer: f64,
    pub ln_middle: f64,
}

impl ZoneMajorants {
    pub fn at(h: f64, delta: f64, c: f64) -> Self {
        let ln_h = h.ln();
        let ell = -ln_h;
        let ln_inner = log_add_exp(delta * (c * h).ln(), (2.0 * c * ell).ln() + delta * (c.ln() + ln_h - ell.ln()));
        let ln_outer = (2.0 * c).ln() - ln_h - delta / (c * h);
        // e^{-L-1} < h <= e^{-L}; level l holds centers in (e^{-l-1}, e^{-l}].
        let big_l = ell.floor() as i64;
        let ln_frac = (1.0 - (-1.0f64).exp()).ln();
        let mut ln_middle = f64::NEG_INFINITY;
        for l in 1..=big_l {
            let lf = l as f64;
            let ln_a = c.ln() + (lf + 1.0).ln() + ln_frac - lf - ln_h;
            let ln_count = log_add_exp(ln_a, LN_2);
            let ln_len = c.ln() - ((big_l - l) as f64).exp() / (E * c) + ln_h - lf.ln();
            ln_middle = log_add_exp(ln_middle, ln_count + delta * ln_len);
        }
        Self { ln_inner, ln_outer, ln_middle }
    }

    /// First majorant above `ln_target`, if any.
    pub fn exceeding(&self, ln_target: f64) -> Option<Majorant> {
        if self.ln_inner > ln_target {
            Some(Majorant::Inner)
        } else if self.ln_outer > ln_target {
            Some(Majorant::Outer)
        } else if self.ln_middle > ln_target {
            Some(Majorant::Middle)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HThreshold {
    pub h: f64,
    pub binding: Majorant,
    /// `ln((2 varsigma rho)^delta / (3 kappa))`.
    pub ln_target: f64,
    pub majorants: ZoneMajorants,
    /// Upper end of the search range.
    pub cap: f64,
}

/// Largest `h <= min(h_tilde, h bound)` with all three zone majorants at
/// most `(2 varsigma rho)^delta / (3 kappa)`. `params.h` is ignored.
pub fn h_threshold(delta: f64, kappa: u32, rho: f64, params: &ConfigParams) -> Result<HThreshold, ConfigError> {
    check_delta(delta)?;
    params.validate_shape()?;
    if kappa == 0 || !(rho > 0.0 && rho < 1.0) {
        return Err(ConfigError::InvalidParams("need kappa >= 1 and rho in (0,1)".into()));
    }
    let c = params.c;
    let ln_target = delta * (2.0 * params.varsigma * rho).ln() - (3.0 * kappa as f64).ln();
    let cap = params.h_tilde(rho).min(params.h_bound() * (1.0 - 1e-12));
    let ok = |h: f64| ZoneMajorants::at(h, delta, c).exceeding(ln_target).is_none();
    let h_min = 1e-300;
    match scan_largest(ok, h_min, cap, 1e-3) {
        None => {
            let b = ZoneMajorants::at(h_min, delta, c).exceeding(ln_target).unwrap_or(Majorant::Cap);
            Err(ConfigError::Infeasible(b))
        }
        Some((h, capped)) => {
            let binding = if capped {
                Majorant::Cap
            } else {
                ZoneMajorants::at(h * (1.0 + 1e-3), delta, c).exceeding(ln_target).unwrap_or(Majorant::Middle)
            };
            Ok(HThreshold { h, binding, ln_target, majorants: ZoneMajorants::at(h, delta, c), cap })
        }
    }
}

// ---------------------------------------------------------------------------
// Generation

/// A log window shrunk by `min(ln 2, width/4)` at both ends.
fn interior(ln_lo: f64, ln_hi: f64) -> (f64, f64) {
    let m = LN_2.min((ln_hi - ln_lo) / 4.0);
    (ln_lo + m, ln_hi - m)
}

/// A log window shrunk by the tiling margin.
fn tight(ln_lo: f64, ln_hi: f64) -> (f64, f64) {
    let m = TIGHT.min((ln_hi - ln_lo) / 4.0);
    (ln_lo + m, ln_hi - m)
}

fn log_uniform(rng: &mut ChaCha8Rng, w: (f64, f64)) -> f64 {
    w.0 + (w.1 - w.0) * rng.gen::<f64>()
}

/// A length to be fitted: log window, a random position in it and the
/// number of copies.
struct Piece {
    ln_lo: f64,
    ln_hi: f64,
    logit: f64,
    weight: f64,
}

impl Piece {
    fn new(w: (f64, f64), rng: &mut ChaCha8Rng, weight: f64) -> Self {
        let u: f64 = rng.gen_range(0.02..0.98);
        Self { ln_lo: w.0, ln_hi: w.1, logit: (u / (1.0 - u)).ln(), weight }
    }

    fn ln_value(&self, theta: f64) -> f64 {
        let s = 1.0 / (1.0 + (-(self.logit + theta)).exp());
        self.ln_lo + (self.ln_hi - self.ln_lo) * s
    }
}

/// Moves every piece inside its window by a common shift in logit space so
/// the weighted lengths add up to `d`. Returns the log lengths.
fn tile(pieces: &[Piece], d: f64) -> Option<Vec<f64>> {
    let total = |theta: f64| {
        let mut s = Neumaier::new();
        for p in pieces {
            s.add(p.weight * p.ln_value(theta).exp());
        }
        s.total()
    };
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    if total(lo) > d || total(hi) < d {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) < d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    Some(pieces.iter().map(|p| p.ln_value(theta)).collect())
}

/// A run in outward order: each member is preceded (toward the center) by
/// a gap `gap`.
#[derive(Debug, Clone, Copy)]
struct SideRun {
    gap: f64,
    log_len: f64,
    count: u64,
}

fn infeasible(msg: impl Into<String>) -> ConfigError {
    ConfigError::GenerationInfeasible(msg.into())
}

/// One side of a standard configuration, starting at distance `x0` from 0.
fn gen_side(p: &ConfigParams, x0: f64, rng: &mut ChaCha8Rng) -> Result<Vec<SideRun>, ConfigError> {
    let (h, c, mh, eps) = (p.h, p.c, p.m * p.h, p.epsilon);
    let ln_h = h.ln();
    let ell = -ln_h;
    let mut runs = Vec::new();

    // inner zone: s1 gap/band pairs, the last band straddling Mh
    let ib = interior(ln_h - c.ln() - ell.ln(), c.ln() + ln_h - ell.ln());
    let ig = tight(ln_h - c.ln() - ell.ln(), c.ln() + ln_h);
    let ln_last = log_uniform(rng, ib);
    let t = mh - rng.gen_range(0.25..0.75) * ln_last.exp();
    let d = t - x0;
    if !(d > 0.0) {
        return Err(infeasible("central band reaches past Mh"));
    }
    let n_lo = ((ell / c) * (1.0 + TIGHT)).ceil().max(1.0) as u64;
    let n_hi = ((c * ell) / (1.0 + TIGHT)).floor() as u64;
    let fits = |n: u64| {
        let n = n as f64;
        n * ig.0.exp() + (n - 1.0) * ib.0.exp() <= d && d <= n * ig.1.exp() + (n - 1.0) * ib.1.exp()
    };
    let options: Vec<u64> = (n_lo..=n_hi).filter(|&n| fits(n)).collect();
    if options.is_empty() {
        return Err(infeasible("no admissible number of inner bands"));
    }
    let s1 = options[rng.gen_range(0..options.len())];
    let mut pieces = Vec::new();
    for k in 0..s1 {
        pieces.push(Piece::new(ig, rng, 1.0));
        if k + 1 < s1 {
            pieces.push(Piece::new(ib, rng, 1.0));
        }
    }
    let vals = tile(&pieces, d).ok_or_else(|| infeasible("inner zone does not tile"))?;
    for k in 0..s1 as usize {
        let log_len = if k + 1 < s1 as usize { vals[2 * k + 1] } else { ln_last };
        runs.push(SideRun { gap: vals[2 * k].exp(), log_len, count: 1 });
    }
    let mut x = t + ln_last.exp();
    let mut n_done = s1;

    // middle zone: runs over which the center moves by about 1%
    let g_out = (h / c * (1.0 + TIGHT), c * h / (1.0 + TIGHT));
    let lnl = |cc: f64| -cc * c / h + ln_h - c.ln() - (-cc.ln()).ln();
    let lnu = |cc: f64| -cc / (c * h) + c.ln() + ln_h - (-cc.ln()).ln();
    while eps - x > g_out.1 * (1.0 - TIGHT) {
        let mut span = 0.01 * x;
        let mut chosen = None;
        for _ in 0..64 {
            let x_end = (x + span).min(eps);
            let bw = (lnl(x).max(lnl(x_end)), lnu(x).min(lnu(x_end)));
            let gw = (
                (h / (c * -x.ln())).max(h / (c * -x_end.ln())).ln(),
                (c * h / -x.ln()).min(c * h / -x_end.ln()).ln(),
            );
            if !(bw.0 < bw.1 && gw.0 < gw.1) {
                return Err(infeasible("empty middle-zone window"));
            }
            let ln_b = log_uniform(rng, interior(bw.0, bw.1));
            let g = log_uniform(rng, tight(gw.0, gw.1)).exp();
            let pitch = g + ln_b.exp();
            if pitch <= span {
                let room = ((eps - x) * (1.0 - 1e-9) / pitch).floor() as u64;
                let n = ((span / pitch).floor() as u64).min(room);
                chosen = Some((g, ln_b, n, pitch));
                break;
            }
            span = 1.5 * pitch;
        }
        let (g, ln_b, n, pitch) = chosen.ok_or_else(|| infeasible("middle zone does not advance"))?;
        if n == 0 {
            break;
        }
        runs.push(SideRun { gap: g, log_len: ln_b, count: n });
        x += n as f64 * pitch;
        n_done += n;
    }

    // outer zone: first band at or beyond epsilon, last band ending at xi
    let ob = interior(-c / h, -1.0 / (c * h));
    let (ob_lo, ob_hi) = (ob.0.exp(), ob.1.exp());
    let g1 = ((g_out.0).max((eps - x) * (1.0 + 1e-9) + 1e-12 * eps), g_out.1);
    if !(g1.0 < g1.1) {
        return Err(infeasible("no room for the first outer gap"));
    }
    let s_lo = ((1.0 / (c * h)) * (1.0 + TIGHT)).ceil() as u64;
    let s_hi = ((c / h) / (1.0 + TIGHT)).floor() as u64;
    let n_lo = s_lo.saturating_sub(n_done).max(1);
    let n_hi = s_hi.saturating_sub(n_done);
    if n_lo > n_hi {
        return Err(infeasible("band count window exhausted before the outer zone"));
    }
    let min_total = |n: u64| g1.0 + (n - 1) as f64 * g_out.0 + n as f64 * ob_lo;
    let max_total = |n: u64| g1.1 + (n - 1) as f64 * g_out.1 + n as f64 * ob_hi;
    let xi_lo = (p.varsigma * (1.0 + 1e-9)).max(x + min_total(n_lo));
    let xi_hi = (4.0f64 * (1.0 - 1e-9)).min(x + max_total(n_hi));
    if !(xi_lo < xi_hi) {
        return Err(infeasible("outer zone cannot reach [varsigma, 4]"));
    }
    let xi = rng.gen_range(xi_lo..xi_hi);
    let d = xi - x;
    let n_min = ((d - g1.1 + g_out.1) / (g_out.1 + ob_hi)).ceil().max(n_lo as f64) as u64;
    let n_max = (((d - g1.0 + g_out.0) / (g_out.0 + ob_lo)).floor() as u64).min(n_hi);
    if n_min > n_max {
        return Err(infeasible("no admissible number of outer bands"));
    }
    let n_out = rng.gen_range(n_min..=n_max);
    let rest = n_out - 1;
    let k_runs = rest.min(OUTER_RUNS);
    let mut counts: Vec<u64> = Vec::with_capacity(k_runs as usize);
    if k_runs > 0 {
        let w: Vec<f64> = (0..k_runs).map(|_| rng.gen_range(0.5..1.5)).collect();
        let sw: f64 = w.iter().sum();
        let spare = rest - k_runs;
        let mut used = 0u64;
        for wi in &w {
            let extra = ((wi / sw) * spare as f64).floor() as u64;
            counts.push(1 + extra);
            used += extra;
        }
        let mut left = spare - used;
        let mut k = 0usize;
        while left > 0 {
            let m = counts.len();
            counts[k % m] += 1;
            left -= 1;
            k += 1;
        }
    }
    let gw = (g_out.0.ln(), g_out.1.ln());
    let mut pieces = alloc::vec![Piece::new((g1.0.ln(), g1.1.ln()), rng, 1.0), Piece::new(ob, rng, 1.0)];
    for &n in &counts {
        pieces.push(Piece::new(gw, rng, n as f64));
        pieces.push(Piece::new(ob, rng, n as f64));
    }
    let vals = tile(&pieces, d).ok_or_else(|| infeasible("outer zone does not tile"))?;
    runs.push(SideRun { gap: vals[0].exp(), log_len: vals[1], count: 1 });
    for (k, &n) in counts.iter().enumerate() {
        runs.push(SideRun { gap: vals[2 + 2 * k].exp(), log_len: vals[3 + 2 * k], count: n });
    }
    Ok(runs)
}

/// A random standard configuration in its standard frame, deterministic in
/// `seed`.
pub fn gen_standard(params: &ConfigParams, seed: u64) -> Result<Configuration, ConfigError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = params.h;
    let ln_l0 = log_uniform(&mut rng, interior(h.ln() - params.c.ln(), params.c.ln() + h.ln()));
    let l0 = ln_l0.exp();
    let v: f64 = rng.gen_range(0.25..0.75);
    let right = gen_side(params, (1.0 - v) * l0, &mut rng)?;
    let left = gen_side(params, v * l0, &mut rng)?;

    let mut runs = Vec::with_capacity(left.len() + right.len() + 1);
    let mut dist = v * l0;
    for (k, sr) in left.iter().enumerate() {
        let len = sr.log_len.exp();
        let start = dist + sr.gap;
        let end = start + (sr.count - 1) as f64 * (sr.gap + len) + len;
        let lead = left.get(k + 1).map(|n| n.gap).unwrap_or(0.0);
        runs.push(BandRun { lo: -end, log_len: sr.log_len, gap: sr.gap, lead, count: sr.count });
        dist = end;
    }
    runs.reverse();
    let central = runs.iter().map(|r| r.count).sum::<u64>();
    runs.push(BandRun { lo: -v * l0, log_len: ln_l0, gap: 0.0, lead: left[0].gap, count: 1 });
    let mut dist = (1.0 - v) * l0;
    for sr in &right {
        let len = sr.log_len.exp();
        let lo = dist + sr.gap;
        runs.push(BandRun { lo, log_len: sr.log_len, gap: sr.gap, lead: sr.gap, count: sr.count });
        dist = lo + (sr.count - 1) as f64 * (sr.gap + len) + len;
    }
    let hull = Interval { lo: runs[0].lo, hi: runs[runs.len() - 1].last_hi() };
    Ok(Configuration::new(hull, runs, Some(central))?.with_frame(Affine::IDENTITY))
}

// ---------------------------------------------------------------------------
// (k, rho) configurations

/// A block of a grouped configuration: bands `first..=last` with hull
/// `hull` and central band `central` (global indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub hull: Interval,
    pub first: u64,
    pub last: u64,
    pub central: u64,
    pub frame: Option<Affine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KRhoConfiguration {
    pub config: Configuration,
    pub blocks: Vec<Block>,
}

fn mix(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `k` generated standard configurations placed left to right in `hull`
/// with hull ratios in `[rho/k, 1/(rho k)]`; for `k = 1` the block is the
/// whole hull.
pub fn gen_k_rho(params: &ConfigParams, k: u32, rho: f64, hull: Interval, seed: u64) -> Result<KRhoConfiguration, ConfigError> {
    if k == 0 || !(rho > 0.0 && rho < 1.0) {
        return Err(ConfigError::InvalidParams("need k >= 1 and rho in (0,1)".into()));
    }
    if !(hull.len() > 0.0) {
        return Err(invalid("hull must have positive length"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, u64::MAX));
    let kf = k as f64;
    let weights: Vec<f64> = if k == 1 {
        alloc::vec![1.0]
    } else {
        (0..k).map(|_| rho.powf(rng.gen_range(0.05..0.5)) / kf).collect()
    };
    let spare = 1.0 - weights.iter().sum::<f64>();
    let split: Vec<f64> = (1..k).map(|_| rng.gen_range(0.5..1.5)).collect();
    let ssum: f64 = split.iter().sum();
    let len = hull.len();

    let mut runs: Vec<BandRun> = Vec::new();
    let mut blocks = Vec::with_capacity(k as usize);
    let mut pos = hull.lo;
    let mut offset = 0u64;
    for b in 0..k as usize {
        let std_cfg = gen_standard(params, mix(seed, b as u64))?;
        let lo = pos;
        let hi = if b + 1 == k as usize { hull.hi } else { lo + weights[b] * len };
        let sh = std_cfg.hull();
        let a = (hi - lo) / sh.len();
        let placed = std_cfg.affine(a, lo - a * sh.lo)?;
        let gap_before = if b == 0 { 0.0 } else { spare * len * split[b - 1] / ssum };
        let mut pr = placed.runs().to_vec();
        if b > 0 {
            pr[0].lead = gap_before;
        }
        let count = placed.band_count();
        blocks.push(Block {
            hull: Interval { lo, hi },
            first: offset,
            last: offset + count - 1,
            central: offset + placed.central().expect("generated"),
            frame: placed.frame(),
        });
        runs.extend(pr);
        offset += count;
        if b + 1 < k as usize {
            pos = hi + spare * len * split[b] / ssum;
        }
    }
    let central = if k == 1 { Some(blocks[0].central) } else { None };
    let mut config = Configuration::new(hull, runs, central)?;
    if k == 1 {
        config = config.with_frame(blocks[0].frame.expect("generated"));
    }
    Ok(KRhoConfiguration { config, blocks })
}

/// Groups the bands into `k` blocks by cutting at the `k - 1` widest gaps.
/// Each block's central band is its longest band.
pub fn infer_blocks(cfg: &Configuration, k: u32) -> Result<Vec<Block>, ConfigError> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    let mut groups: Vec<(f64, usize, bool)> = Vec::new();
    for (ri, r) in cfg.runs.iter().enumerate() {
        if ri > 0 {
            groups.push((r.lead, ri, false));
        }
        if r.count > 1 {
            groups.push((r.gap, ri, true));
        }
    }
    groups.sort_by(|a, b| b.0.total_cmp(&a.0));
    let need = (k - 1) as u64;
    let mut cuts: Vec<u64> = Vec::new();
    let mut taken = 0u64;
    let mut last_val = f64::INFINITY;
    let mut idx = 0;
    while taken < need {
        let (v, ri, intra) = *groups.get(idx).ok_or(ConfigError::RequiresExplicitGrouping)?;
        let r = &cfg.runs[ri];
        let mult = if intra { r.count - 1 } else { 1 };
        if taken + mult > need {
            return Err(ConfigError::RequiresExplicitGrouping);
        }
        if intra {
            cuts.extend((0..r.count - 1).map(|j| cfg.global_index(ri, j)));
        } else {
            cuts.push(cfg.global_index(ri, 0) - 1);
        }
        taken += mult;
        last_val = v;
        idx += 1;
    }
    if let Some(&(v, _, _)) = groups.get(idx) {
        if need > 0 && (last_val - v).abs() <= 1e-9 * last_val {
            return Err(ConfigError::RequiresExplicitGrouping);
        }
    }
    cuts.sort_unstable();
    let mut blocks = Vec::with_capacity(k as usize);
    let mut first = 0u64;
    for end in cuts.into_iter().chain(core::iter::once(cfg.total - 1)) {
        let hull = if k == 1 {
            cfg.hull
        } else {
            Interval { lo: cfg.band(first).lo, hi: cfg.band(end).hi }
        };
        let central = if k == 1 && cfg.central.is_some() {
            cfg.central.expect("checked")
        } else {
            longest_band(cfg, first, end)
        };
        let frame = if k == 1 { cfg.frame } else { None };
        blocks.push(Block { hull, first, last: end, central, frame });
        first = end + 1;
    }
    Ok(blocks)
}

fn longest_band(cfg: &Configuration, first: u64, last: u64) -> u64 {
    let (r0, _) = cfg.locate(first);
    let (r1, _) = cfg.locate(last);
    let mut best = (f64::NEG_INFINITY, first);
    for ri in r0..=r1 {
        let idx = cfg.starts[ri].max(first);
        if cfg.runs[ri].log_len > best.0 {
            best = (cfg.runs[ri].log_len, idx);
        }
    }
    best.1
}

#[derive(Debug, Clone, PartialEq)]
pub struct KRhoReport {
    /// `|I_i| / |I|` per block.
    pub ratios: Vec<f64>,
    pub ratio_pass: bool,
    pub blocks: Vec<AuditReport>,
    pub pass: bool,
    pub effective_constant: f64,
}

/// Checks the block hull ratios and audits every block after mapping it to
/// its standard frame. Without `grouping` the blocks are inferred.
pub fn audit_k_rho(
    cfg: &Configuration,
    grouping: Option<&[Block]>,
    k: u32,
    rho: f64,
    params: &ConfigParams,
) -> Result<KRhoReport, ConfigError> {
    let inferred;
    let blocks = match grouping {
        Some(b) => b,
        None => {
            inferred = infer_blocks(cfg, k)?;
            &inferred
        }
    };
    if blocks.len() != k as usize {
        return Err(invalid(format!("expected {k} blocks, got {}", blocks.len())));
    }
    let kf = k as f64;
    let len = cfg.hull.len();
    let ratios: Vec<f64> = blocks.iter().map(|b| b.hull.len() / len).collect();
    let lo = rho / kf * (1.0 - 1e-12);
    let hi = 1.0 / (rho * kf) * (1.0 + 1e-12);
    let ratio_pass = ratios.iter().all(|&r| r >= lo && r <= hi);
    let mut reports = Vec::with_capacity(blocks.len());
    for b in blocks {
        let mut sub = cfg.sub_configuration(b.first, b.last, b.hull, Some(b.central))?;
        sub.frame = b.frame;
        let (std_cfg, _) = normalize_to_standard(&sub)?;
        reports.push(audit_standard(&std_cfg, params)?);
    }
    let pass = ratio_pass && reports.iter().all(|r| r.pass);
    let effective_constant = reports.iter().map(|r| r.effective_constant).fold(params.c, f64::max);
    Ok(KRhoReport { ratios, ratio_pass, blocks: reports, pass, effective_constant })
}

/// The ratio bounds `rho/(8k e^{C/h}) <= |J|/|I| <= Ch/(2 k rho varsigma) <= 1/10`
/// evaluated on a `(k, rho)` configuration, in logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBounds {
    pub ln_min_ratio: f64,
    pub ln_max_ratio: f64,
    pub ln_lower_bound: f64,
    pub upper_bound: f64,
    pub holds: bool,
}

pub fn ratio_bounds(cfg: &Configuration, k: u32, rho: f64, params: &ConfigParams) -> RatioBounds {
    let (a, b) = cfg.log_len_range();
    let ln_i = cfg.hull.len().ln();
    let kf = k as f64;
    let ln_lower_bound = (rho / (8.0 * kf)).ln() - params.c / params.h;
    let upper_bound = params.c * params.h / (2.0 * kf * rho * params.varsigma);
    let ln_min_ratio = a - ln_i;
    let ln_max_ratio = b - ln_i;
    let holds = ln_min_ratio >= ln_lower_bound - 1e-12
        && ln_max_ratio <= upper_bound.ln() + 1e-12
        && upper_bound <= 0.1 * (1.0 + 1e-12);
    RatioBounds { ln_min_ratio, ln_max_ratio, ln_lower_bound, upper_bound, holds }
}

/// `ln(16 k e^{C/h} / rho)`, the bound on `N_r(I)` for `J_min <= r < |I|`.
pub fn ln_cover_bound(k: u32, rho: f64, params: &ConfigParams) -> f64 {
    (16.0 * k as f64 / rho).ln() + params.c / params.h
}

// ---------------------------------------------------------------------------
// Spectrum-derived configurations

/// The configuration formed by the bands of `Sigma_{p_{n+1}/q_{n+1}}` inside
/// the band of `Sigma_{p_n/q_n}` closest to 0 (for `n = 0` that band is
/// `[-4, 4]`). Returns it together with `h_{n+1}(alpha)`.
pub fn spectrum_configuration(cf: &ContinuedFraction, n: usize) -> Result<(Configuration, f64), ConfigError> {
    let sp = |e: chambers::ChambersError| ConfigError::Spectrum(format!("{e}"));
    let outer = if n == 0 {
        Interval { lo: -4.0, hi: 4.0 }
    } else {
        let s = chambers::spectrum_rational(chambers::convergent_frequency(cf, n).map_err(sp)?).map_err(sp)?;
        closest_to(s.intervals(), 0.0)
    };
    let inner = chambers::spectrum_rational(chambers::convergent_frequency(cf, n + 1).map_err(sp)?).map_err(sp)?;
    let bands: Vec<Interval> = inner
        .iter()
        .filter(|b| b.meets(&outer))
        .map(|b| Interval { lo: b.lo.max(outer.lo), hi: b.hi.min(outer.hi) })
        .filter(|b| b.hi > b.lo)
        .collect();
    let c = closest_to(&bands, outer.mid());
    let central = bands.iter().position(|b| *b == c).map(|i| i as u64);
    let h = cf.h_n(n + 1).map_err(|e| ConfigError::Spectrum(format!("{e}")))?;
    Ok((Configuration::from_intervals(outer, &bands, central)?, h))
}

fn closest_to(v: &[Interval], x: f64) -> Interval {
    let mut best = v[0];
    for b in v {
        if b.dist(x) < best.dist(x) {
            best = *b;
        }
    }
    best
}
