//! Spectra of the separable operator `sum_i 2 cos 2pi(theta_i + n_i alpha_i)`
//! as Minkowski sums of one-dimensional spectra.

use alloc::vec::Vec;

use crate::bandset::BandSet;
use crate::chambers::{spectrum_approx, spectrum_rational, RationalFrequency};
use crate::contfrac::ContinuedFraction;
use crate::dimension::{box_dim_fit, depth_for, DimError, DimensionEstimate, ScaleWindow};

/// One coordinate frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Component {
    Cf(ContinuedFraction),
    Exact(RationalFrequency),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyVector {
    components: Vec<Component>,
}

impl FrequencyVector {
    pub fn new(components: Vec<Component>) -> Result<Self, DimError> {
        if components.is_empty() {
            return Err(DimError::InvalidArgument("frequency vector needs d >= 1".into()));
        }
        Ok(Self { components })
    }

    /// `d` copies of the same component.
    pub fn repeated(c: Component, d: usize) -> Result<Self, DimError> {
        Self::new(alloc::vec![c; d])
    }

    pub fn d(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }
}

/// How deep to approximate each continued-fraction component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    /// Convergent index `n` for every component.
    Fixed(usize),
    /// Deepest convergent with `q_n <= q_max`, per component.
    MaxDenominator(u64),
}

/// A component spectrum together with its Hausdorff error radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub bands: BandSet,
    pub error_radius: f64,
    pub q: u64,
}

pub fn component_spectrum(c: &Component, depth: Depth) -> Result<Part, DimError> {
    match c {
        Component::Exact(f) => Ok(Part { bands: spectrum_rational(*f)?, error_radius: 0.0, q: f.q() }),
        Component::Cf(cf) => {
            let n = match depth {
                Depth::Fixed(n) => n,
                Depth::MaxDenominator(q) => depth_for(cf, q)?,
            };
            let a = spectrum_approx(cf, n)?;
            Ok(Part { bands: a.bands, error_radius: a.error_radius, q: a.freq.q() })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdSpectrum {
    pub bands: BandSet,
    /// Sum of the component radii plus whatever coarsening added.
    pub error_radius: f64,
    /// Share of `error_radius` due to coarsening.
    pub coarsening: f64,
    pub component_q: Vec<u64>,
}

/// Left fold of `parts` under Minkowski sum.
///
/// With `coarsen`, both operands of each sum first have every gap narrower
/// than the running error radius closed. Each closure moves its operand by at
/// most half that width, so one step adds the full width to the radius.
pub fn fold_parts(parts: &[Part], coarsen: bool) -> Result<MdSpectrum, DimError> {
    let (first, rest) = parts.split_first().ok_or_else(|| DimError::InvalidArgument("no components".into()))?;
    let mut acc = first.bands.clone();
    let mut radius = first.error_radius;
    let mut coarsening = 0.0;
    for p in rest {
        radius += p.error_radius;
        acc = if coarsen && radius > 0.0 {
            coarsening += radius;
            let w = radius;
            radius += w;
            acc.coarsen(w).minkowski_sum(&p.bands.coarsen(w))?
        } else {
            acc.minkowski_sum(&p.bands)?
        };
    }
    Ok(MdSpectrum { bands: acc, error_radius: radius, coarsening, component_q: parts.iter().map(|p| p.q).collect() })
}

pub fn md_spectrum(fv: &FrequencyVector, depth: Depth, coarsen: bool) -> Result<MdSpectrum, DimError> {
    let parts: Vec<Part> = fv.components.iter().map(|c| component_spectrum(c, depth)).collect::<Result<_, _>>()?;
    fold_parts(&parts, coarsen)
}

/// One row of the collapse report for `d` equal components `[a, a, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRow {
    pub a: u64,
    pub d: usize,
    pub q_used: u64,
    pub measure: f64,
    pub md_slope: f64,
    /// `d` times the component slope, fitted on the same window.
    pub sum_slope: f64,
    pub max_interior: f64,
    pub error_radius: f64,
    pub md_estimate: DimensionEstimate,
    pub component_estimate: DimensionEstimate,
}

/// Builds one row from an already computed component spectrum.
pub fn collapse_row_from(a: u64, d: usize, part: &Part, grid: usize, coarsen: bool) -> Result<CollapseRow, DimError> {
    if d == 0 {
        return Err(DimError::InvalidArgument("d must be at least 1".into()));
    }
    let parts = alloc::vec![part.clone(); d];
    let md = fold_parts(&parts, coarsen)?;
    let window = ScaleWindow::auto(md.bands.diameter(), md.error_radius, grid)?;
    let md_estimate = box_dim_fit(&md.bands, window)?;
    let component_estimate = box_dim_fit(&part.bands, window)?;
    Ok(CollapseRow {
        a,
        d,
        q_used: part.q,
        measure: md.bands.measure(),
        md_slope: md_estimate.slope,
        sum_slope: d as f64 * component_estimate.slope,
        max_interior: md.bands.max_interval_len(),
        error_radius: md.error_radius,
        md_estimate,
        component_estimate,
    })
}

pub fn collapse_row(a: u64, d: usize, q_max: u64, grid: usize, coarsen: bool) -> Result<CollapseRow, DimError> {
    let cf = ContinuedFraction::constant(a)?;
    let part = component_spectrum(&Component::Cf(cf), Depth::MaxDenominator(q_max))?;
    collapse_row_from(a, d, &part, grid, coarsen)
}

pub fn collapse_report(
    a_values: &[u64],
    d: usize,
    q_max: u64,
    grid: usize,
    coarsen: bool,
) -> Result<Vec<CollapseRow>, DimError> {
    if a_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DimError::InvalidArgument("a values must ascend".into()));
    }
    a_values.iter().map(|&a| collapse_row(a, d, q_max, grid, coarsen)).collect()
}
