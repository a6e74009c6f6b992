//! Box-counting slope fits and Hausdorff upper bounds from explicit covers.

use alloc::string::String;
use alloc::vec::Vec;

use crate::bandset::{BandError, BandSet, Interval};
use crate::chambers::{spectrum_approx, ChambersError, RationalFrequency};
use crate::contfrac::{CfError, ContinuedFraction};
use crate::moran::NestedCovering;
use crate::numeric::{linear_fit, Neumaier};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DimError {
    #[error("degenerate window: {0}")]
    DegenerateWindow(String),
    #[error("window too fine: r_min {r_min} is not above 10x the error radius {error_radius}")]
    WindowTooFine { r_min: f64, error_radius: f64 },
    #[error("invalid cover sequence: {0}")]
    InvalidCoverSequence(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Band(#[from] BandError),
    #[error(transparent)]
    Chambers(#[from] ChambersError),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error("nested covering: {0}")]
    Moran(String),
}

/// Log-spaced scales `r_min..=r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleWindow {
    pub r_min: f64,
    pub r_max: f64,
    pub grid: usize,
}

impl ScaleWindow {
    pub fn new(r_min: f64, r_max: f64, grid: usize) -> Result<Self, DimError> {
        if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
            return Err(DimError::DegenerateWindow(alloc::format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if grid < 4 {
            return Err(DimError::DegenerateWindow(alloc::format!("grid {grid} < 4")));
        }
        Ok(Self { r_min, r_max, grid })
    }

    /// Window `[10 max(error_radius, 1e-10 diam), diam / 10]`.
    pub fn auto(diameter: f64, error_radius: f64, grid: usize) -> Result<Self, DimError> {
        let floor = 1e-10 * diameter;
        let r_min = 10.0 * error_radius.max(floor);
        let r_max = diameter / 10.0;
        if !(r_min < r_max) {
            return Err(DimError::WindowTooFine { r_min, error_radius });
        }
        Self::new(r_min, r_max, grid)
    }

    /// Scales from `r_max` down to `r_min`.
    pub fn scales(&self) -> Vec<f64> {
        let (a, b) = (self.r_max.ln(), self.r_min.ln());
        let m = (self.grid - 1) as f64;
        (0..self.grid).map(|i| (a + (b - a) * i as f64 / m).exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    /// Least-squares slope of `ln N_r` against `ln(1/r)`.
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the fit.
    pub residual: f64,
    /// Largest and smallest slope between consecutive scales.
    pub slope_max: f64,
    pub slope_min: f64,
    pub window: ScaleWindow,
    /// `(r, N_r)`, `r` decreasing.
    pub table: Vec<(f64, u64)>,
}

/// Fits a table of box counts.
pub fn fit_table(window: ScaleWindow, table: Vec<(f64, u64)>) -> Result<DimensionEstimate, DimError> {
    if table.iter().any(|&(_, n)| n == 0) {
        return Err(DimError::InvalidArgument("box count of an empty set".into()));
    }
    let xs: Vec<f64> = table.iter().map(|&(r, _)| -r.ln()).collect();
    let ys: Vec<f64> = table.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let (slope, intercept, residual) = linear_fit(&xs, &ys);
    let mut slope_max = f64::NEG_INFINITY;
    let mut slope_min = f64::INFINITY;
    for i in 1..xs.len() {
        let s = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
        slope_max = slope_max.max(s);
        slope_min = slope_min.min(s);
    }
    Ok(DimensionEstimate { slope, intercept, residual, slope_max, slope_min, window, table })
}

/// Fits box counts supplied by `count` over the window.
pub fn fit_counts<E>(window: ScaleWindow, mut count: impl FnMut(f64) -> Result<u64, E>) -> Result<DimensionEstimate, E>
where
    E: From<DimError>,
{
    let mut table = Vec::with_capacity(window.grid);
    for r in window.scales() {
        table.push((r, count(r)?));
    }
    Ok(fit_table(window, table)?)
}

pub fn box_dim_fit(s: &BandSet, window: ScaleWindow) -> Result<DimensionEstimate, DimError> {
    if s.is_empty() {
        return Err(BandError::Empty.into());
    }
    let diam = s.diameter();
    if diam > 0.0 && window.r_max >= diam {
        return Err(DimError::DegenerateWindow(alloc::format!("r_max {} not below the diameter {diam}", window.r_max)));
    }
    if window.r_min < 1e-10 * diam {
        return Err(DimError::DegenerateWindow("r_min below the endpoint tolerance".into()));
    }
    fit_counts(window, |r| s.box_count(r).map_err(DimError::from))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverBound {
    pub delta: f64,
    /// `sum |U|^delta` per family.
    pub sums: Vec<f64>,
    /// Largest length per family.
    pub meshes: Vec<f64>,
    pub sup: f64,
    /// The constant the sums are compared with.
    pub constant: f64,
    pub bound_holds: bool,
}

/// Checks that `sum |U|^delta` stays below `constant` (default: the sum of
/// the first family) along covers whose mesh shrinks.
pub fn hausdorff_upper_from_covers(
    covers: &[Vec<Interval>],
    delta: f64,
    constant: Option<f64>,
) -> Result<CoverBound, DimError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(DimError::InvalidArgument(alloc::format!("delta must lie in (0,1], got {delta}")));
    }
    if covers.len() < 2 || covers.iter().any(|c| c.is_empty()) {
        return Err(DimError::InvalidCoverSequence("need at least two nonempty covers".into()));
    }
    let mut sums = Vec::with_capacity(covers.len());
    let mut meshes = Vec::with_capacity(covers.len());
    for c in covers {
        let mut s = Neumaier::new();
        let mut mesh = 0.0f64;
        for u in c {
            s.add(u.len().powf(delta));
            mesh = mesh.max(u.len());
        }
        sums.push(s.total());
        meshes.push(mesh);
    }
    let shrinking = meshes.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) && meshes[meshes.len() - 1] < meshes[0];
    if !shrinking {
        return Err(DimError::InvalidCoverSequence("mesh does not shrink".into()));
    }
    let constant = constant.unwrap_or(sums[0]);
    let sup = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CoverBound { delta, sums, meshes, sup, constant, bound_holds: sup <= constant * (1.0 + 1e-9) })
}

/// Box-slope of the depth-`n` prefractal of `nc` over the `decades` below the
/// largest first-level child. In that range every first-level child is
/// resolved while its own children are not yet.
pub fn moran_box_fit(nc: &NestedCovering, n: u32, decades: f64, grid: usize) -> Result<DimensionEstimate, DimError> {
    let t = nc.root_template().ok_or_else(|| DimError::InvalidArgument("structure has depth 0".into()))?;
    let r_max = (t.ln_ratio_range().1 + nc.root().len().ln()).exp();
    if !(decades > 0.0) {
        return Err(DimError::InvalidArgument(alloc::format!("decades must be positive, got {decades}")));
    }
    let window = ScaleWindow::new(r_max * 10f64.powf(-decades), r_max, grid)?;
    fit_counts(window, |r| nc.box_count(n, r).map_err(|e| DimError::Moran(alloc::format!("{e}"))))
}

/// One row of the trend experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub a: u64,
    pub q_used: u64,
    pub freq: RationalFrequency,
    pub error_radius: f64,
    pub estimate: DimensionEstimate,
}

/// Deepest convergent index with `q_n <= q_max`.
pub fn depth_for(cf: &ContinuedFraction, q_max: u64) -> Result<usize, DimError> {
    let mut n = 1;
    loop {
        let qs = match cf.denominators(n + 1) {
            Ok(qs) => qs,
            Err(_) => return Ok(n),
        };
        match num_traits::ToPrimitive::to_u64(&qs[n + 1]) {
            Some(q) if q <= q_max => n += 1,
            _ => return Ok(n),
        }
    }
}

/// Box-slope of `Sigma` at the deepest convergent of `[a, a, ...]` with
/// `q <= q_max`, over the automatic window.
pub fn trend_row(a: u64, q_max: u64, grid: usize) -> Result<TrendRow, DimError> {
    let cf = ContinuedFraction::constant(a)?;
    let n = depth_for(&cf, q_max)?;
    let approx = spectrum_approx(&cf, n)?;
    let window = ScaleWindow::auto(approx.bands.diameter(), approx.error_radius, grid)?;
    let estimate = box_dim_fit(&approx.bands, window)?;
    Ok(TrendRow { a, q_used: approx.freq.q(), freq: approx.freq, error_radius: approx.error_radius, estimate })
}

pub fn dim_trend_experiment(a_values: &[u64], q_max: u64, grid: usize) -> Result<Vec<TrendRow>, DimError> {
    if a_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DimError::InvalidArgument("a values must ascend".into()));
    }
    a_values.iter().map(|&a| trend_row(a, q_max, grid)).collect()
}
