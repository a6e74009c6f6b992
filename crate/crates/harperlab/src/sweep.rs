//! Parallel sweeps over frequencies, scales and parameter values. Every
//! sweep collects in input order, so results do not depend on the thread
//! count.

use harperlab_core::bandset::BandSet;
use harperlab_core::chambers::{band_edges, farey_fractions, spectrum_rational, ChambersError, RationalFrequency};
use harperlab_core::dimension::{fit_table, trend_row, DimError, DimensionEstimate, ScaleWindow, TrendRow};
use harperlab_core::multidim::{collapse_row_from, component_spectrum, fold_parts, CollapseRow, Component, Depth, FrequencyVector, MdSpectrum, Part};
use harperlab_core::contfrac::ContinuedFraction;
use rayon::prelude::*;

use crate::precise::{certify_gaps, GapCertificate, Precise, PreciseError};

pub const JOBS_ENV: &str = "HARPERLAB_JOBS";

/// `--jobs`, else `HARPERLAB_JOBS`, else the logical core count.
pub fn resolve_jobs(flag: Option<usize>) -> Result<usize, String> {
    if let Some(j) = flag {
        return if j == 0 { Err("--jobs must be at least 1".into()) } else { Ok(j) };
    }
    match std::env::var(JOBS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(j) if j > 0 => Ok(j),
            _ => Err(format!("{JOBS_ENV}={v:?} is not a positive integer")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Runs `f` on a dedicated pool of `jobs` threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn butterfly(q_max: u64) -> Result<Vec<(RationalFrequency, BandSet)>, ChambersError> {
    farey_fractions(q_max).into_par_iter().map(|f| Ok((f, spectrum_rational(f)?))).collect()
}

/// Box counts at every scale of `window`, counted in parallel.
pub fn fit_par<E: Send>(window: ScaleWindow, count: impl Fn(f64) -> Result<u64, E> + Sync) -> Result<DimensionEstimate, E>
where
    E: From<DimError>,
{
    let table = window.scales().into_par_iter().map(|r| Ok((r, count(r)?))).collect::<Result<Vec<_>, E>>()?;
    Ok(fit_table(window, table)?)
}

pub fn box_dim_fit(s: &BandSet, window: ScaleWindow) -> Result<DimensionEstimate, DimError> {
    if s.is_empty() {
        return Err(harperlab_core::bandset::BandError::Empty.into());
    }
    let diam = s.diameter();
    if diam > 0.0 && window.r_max >= diam {
        return Err(DimError::DegenerateWindow(format!("r_max {} not below the diameter {diam}", window.r_max)));
    }
    if window.r_min < 1e-10 * diam {
        return Err(DimError::DegenerateWindow("r_min below the endpoint tolerance".into()));
    }
    fit_par(window, |r| s.box_count(r).map_err(DimError::from))
}

pub fn trend(a_values: &[u64], q_max: u64, grid: usize) -> Result<Vec<TrendRow>, DimError> {
    if a_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DimError::InvalidArgument("a values must ascend".into()));
    }
    a_values.par_iter().map(|&a| trend_row(a, q_max, grid)).collect()
}

pub fn parts(fv: &FrequencyVector, depth: Depth) -> Result<Vec<Part>, DimError> {
    fv.components().par_iter().map(|c| component_spectrum(c, depth)).collect()
}

/// Component spectra in parallel, then the sequential Minkowski fold.
pub fn md_spectrum(fv: &FrequencyVector, depth: Depth, coarsen: bool) -> Result<MdSpectrum, DimError> {
    fold_parts(&parts(fv, depth)?, coarsen)
}

pub fn collapse(a_values: &[u64], d: usize, q_max: u64, grid: usize, coarsen: bool) -> Result<Vec<CollapseRow>, DimError> {
    if a_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DimError::InvalidArgument("a values must ascend".into()));
    }
    a_values
        .par_iter()
        .map(|&a| {
            let cf = ContinuedFraction::constant(a)?;
            let part = component_spectrum(&Component::Cf(cf), Depth::MaxDenominator(q_max))?;
            collapse_row_from(a, d, &part, grid, coarsen)
        })
        .collect()
}

/// Gap certificates of every reduced `p/q` with `q_min <= q <= q_max`.
pub fn certify_all(q_min: u64, q_max: u64, bits: usize) -> Result<Vec<(RationalFrequency, Vec<GapCertificate>)>, PreciseError> {
    let fr: Vec<RationalFrequency> = farey_fractions(q_max).into_iter().filter(|f| f.q() >= q_min).collect();
    fr.into_par_iter()
        .map_init(
            || Precise::new(bits),
            |px, f| {
                let px = px.as_mut().map_err(|e| PreciseError::Consts(e.to_string()))?;
                let e = band_edges(f)?;
                Ok((f, certify_gaps(px, f, &e)?))
            },
        )
        .collect()
}
