//! The `harperlab` command line.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use harperlab_core::bandset::{BandError, BandSet, Interval};
use harperlab_core::chambers::{spectrum_approx, spectrum_rational, ChambersError, RationalFrequency};
use harperlab_core::config::{audit_standard, h_threshold, normalize_to_standard, ConfigError, ConfigParams, Configuration};
use harperlab_core::contfrac::{CfError, ContinuedFraction};
use harperlab_core::dimension::{depth_for, DimError, ScaleWindow};
use harperlab_core::moran::{build, HStream, MoranError, NodeType, StandardRule};
use harperlab_core::multidim::{Component, Depth, FrequencyVector};
use serde_json::{json, Value};

use crate::io::{self, CollapseRecord, DimsRecord, Format, IoError, Sidecar};
use crate::sweep;

/// Largest convergent denominator the subcommands accept; band edges cost
/// `O(q^2)` time.
pub const MAX_DENOMINATOR: u64 = 50_000;

/// Tree levels with more nodes than this are left out of the dump.
pub const DUMP_LEVEL_LIMIT: f64 = 1e5;

#[derive(Debug, Parser)]
#[command(name = "harperlab", version, about = "Spectra and fractal dimensions of the critical almost Mathieu operator")]
pub struct Cli {
    /// Worker threads (default: HARPERLAB_JOBS, else the logical core count).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output file; a `<out>.meta.json` sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct Approx {
    /// Convergent index.
    #[arg(long, conflicts_with = "qmax")]
    pub depth: Option<usize>,
    /// Deepest convergent with denominator at most this.
    #[arg(long)]
    pub qmax: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectra of every reduced p/q with q <= qmax.
    Butterfly {
        #[arg(long)]
        qmax: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Spectrum at p/q, or at a convergent of a continued fraction.
    Spectrum {
        #[arg(long, conflicts_with = "cf", required_unless_present = "cf")]
        pq: Option<String>,
        /// Continued fraction such as "[1,2;(3)]".
        #[arg(long)]
        cf: Option<String>,
        #[command(flatten)]
        approx: Approx,
        #[command(flatten)]
        output: Output,
    },
    /// Box-slope estimates; one row per frequency.
    Dims {
        #[arg(long, conflicts_with = "a", required_unless_present = "a")]
        cf: Option<String>,
        /// Constant expansions [(a)] for these a, ascending.
        #[arg(long, value_delimiter = ',')]
        a: Option<Vec<u64>>,
        #[command(flatten)]
        approx: Approx,
        /// `auto` or `RMIN:RMAX`.
        #[arg(long, default_value = "auto")]
        window: String,
        #[arg(long, default_value_t = 12)]
        grid: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Audits a band set as a standard configuration.
    ConfigAudit {
        #[arg(long)]
        bands: PathBuf,
        /// JSON object with varsigma, epsilon, m, c, h.
        #[arg(long)]
        params: String,
        /// Index of the central band (default: the band containing 0, else
        /// the one nearest the hull midpoint).
        #[arg(long)]
        central: Option<u64>,
        /// Hull `LO:HI` (default: the hull of the bands).
        #[arg(long)]
        hull: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Builds a nested covering from generated configurations.
    MoranSim {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        kappa: u32,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        root_type: u8,
        /// Decades of scale below the largest first-level interval for the
        /// box-slope fit; 0 skips the fit.
        #[arg(long, default_value_t = 3.0)]
        fit_decades: f64,
        #[arg(long, default_value_t = 10)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minkowski-sum spectra of separable d-dimensional operators.
    Mdsum {
        #[arg(long)]
        d: Option<usize>,
        /// Component continued fractions; a single one is repeated d times.
        #[arg(long)]
        cf: Vec<String>,
        /// Exact rational components p/q.
        #[arg(long)]
        pq: Vec<String>,
        /// Collapse report over constant expansions [(a)] instead.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["cf", "pq"])]
        a: Option<Vec<u64>>,
        #[command(flatten)]
        approx: Approx,
        /// Close gaps narrower than the running error radius before each sum.
        #[arg(long)]
        coarsen: bool,
        #[arg(long, default_value_t = 12)]
        grid: usize,
        #[command(flatten)]
        output: Output,
    },
}

/// Why a run failed; maps to exit status 1 or 2.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Validation(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

fn validation(m: impl Into<String>) -> Failure {
    Failure::Validation(m.into())
}

impl From<CfError> for Failure {
    fn from(e: CfError) -> Self {
        validation(e.to_string())
    }
}

impl From<BandError> for Failure {
    fn from(e: BandError) -> Self {
        match e {
            BandError::CountOverflow(_) => Failure::Numerical(e.to_string()),
            _ => validation(e.to_string()),
        }
    }
}

impl From<ChambersError> for Failure {
    fn from(e: ChambersError) -> Self {
        match e {
            ChambersError::NumericalFailure { .. } => Failure::Numerical(e.to_string()),
            ChambersError::Cf(c) => c.into(),
            _ => validation(e.to_string()),
        }
    }
}

impl From<DimError> for Failure {
    fn from(e: DimError) -> Self {
        match e {
            DimError::Band(b) => b.into(),
            DimError::Chambers(c) => c.into(),
            DimError::Cf(c) => c.into(),
            DimError::Moran(ref m) if m.starts_with("structure violation") => Failure::Numerical(e.to_string()),
            _ => validation(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Infeasible(_) | ConfigError::GenerationInfeasible(_) => Failure::Numerical(e.to_string()),
            _ => validation(e.to_string()),
        }
    }
}

impl From<MoranError> for Failure {
    fn from(e: MoranError) -> Self {
        match e {
            MoranError::StructureViolation { .. } => Failure::Numerical(e.to_string()),
            MoranError::Config(c) => c.into(),
            MoranError::Band(b) => b.into(),
            MoranError::Cf(c) => c.into(),
            _ => validation(e.to_string()),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        validation(e.to_string())
    }
}

pub fn parse_pq(s: &str) -> Result<RationalFrequency, Failure> {
    let bad = || validation(format!("expected p/q, got {s:?}"));
    let (p, q) = s.trim().split_once('/').ok_or_else(bad)?;
    let p: u64 = p.trim().parse().map_err(|_| bad())?;
    let q: u64 = q.trim().parse().map_err(|_| bad())?;
    Ok(RationalFrequency::reduced(p, q)?)
}

pub fn parse_cf(s: &str) -> Result<ContinuedFraction, Failure> {
    Ok(s.parse::<ContinuedFraction>()?)
}

fn parse_range(s: &str, what: &str) -> Result<(f64, f64), Failure> {
    let bad = || validation(format!("{what} must be LO:HI, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn check_qmax(q: u64) -> Result<u64, Failure> {
    if q > MAX_DENOMINATOR {
        return Err(validation(format!("--qmax {q} exceeds the limit {MAX_DENOMINATOR}")));
    }
    Ok(q)
}

/// Refuses convergents whose denominator exceeds [`MAX_DENOMINATOR`].
fn check_depth(cf: &ContinuedFraction, n: usize) -> Result<usize, Failure> {
    let q = cf.denominators(n)?[n].clone();
    if q > MAX_DENOMINATOR.into() {
        return Err(validation(format!("convergent {n} of {cf} has denominator {q}, above the limit {MAX_DENOMINATOR}")));
    }
    Ok(n)
}

fn convergent_index(cf: &ContinuedFraction, approx: &Approx) -> Result<usize, Failure> {
    match (approx.depth, approx.qmax) {
        (Some(n), _) => check_depth(cf, n),
        (None, Some(q)) => Ok(depth_for(cf, check_qmax(q)?)?),
        (None, None) => Err(validation("continued fractions need --depth or --qmax")),
    }
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

struct Product {
    out: PathBuf,
    data: Vec<u8>,
    params: Value,
    error_radii: Vec<f64>,
    summary: Value,
}

/// Runs one subcommand: computes, then writes the data file and sidecar.
/// Nothing is written unless the computation succeeds.
pub fn run(cli: Cli) -> Result<PathBuf, Failure> {
    let start = Instant::now();
    let jobs = sweep::resolve_jobs(cli.jobs).map_err(validation)?;
    let name = subcommand_name(&cli.command);
    let product = sweep::with_jobs(jobs, || compute(&cli.command))?;
    let meta = Sidecar {
        tool: "harperlab",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name.to_string(),
        params: product.params,
        error_radii: product.error_radii,
        summary: product.summary,
        jobs,
        wall_time_s: start.elapsed().as_secs_f64(),
        timestamp_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    io::write_with_sidecar(&product.out, &product.data, &meta)?;
    Ok(product.out)
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Butterfly { .. } => "butterfly",
        Command::Spectrum { .. } => "spectrum",
        Command::Dims { .. } => "dims",
        Command::ConfigAudit { .. } => "config-audit",
        Command::MoranSim { .. } => "moran-sim",
        Command::Mdsum { .. } => "mdsum",
    }
}

fn out_or(out: &Option<PathBuf>, stem: &str, extension: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(format!("{stem}.{extension}")))
}

fn compute(c: &Command) -> Result<Product, Failure> {
    match c {
        Command::Butterfly { qmax, output } => {
            if *qmax == 0 || *qmax > 1000 {
                return Err(validation("--qmax must lie in 1..=1000"));
            }
            let rows = sweep::butterfly(*qmax)?;
            Ok(Product {
                out: out_or(&output.out, "butterfly", ext(output.format)),
                data: io::butterfly_bytes(&rows, output.format)?,
                params: json!({ "qmax": qmax, "format": output.format }),
                error_radii: Vec::new(),
                summary: json!({ "fractions": rows.len(), "bands": rows.iter().map(|r| r.1.len()).sum::<usize>() }),
            })
        }
        Command::Spectrum { pq, cf, approx, output } => {
            let (bands, radius, params) = match (pq, cf) {
                (Some(pq), _) => {
                    let f = parse_pq(pq)?;
                    (spectrum_rational(f)?, 0.0, json!({ "pq": format!("{}/{}", f.p(), f.q()) }))
                }
                (None, Some(cf)) => {
                    let cf = parse_cf(cf)?;
                    let n = convergent_index(&cf, approx)?;
                    let a = spectrum_approx(&cf, n)?;
                    let params = json!({ "cf": cf.to_string(), "depth": n, "p": a.freq.p(), "q": a.freq.q() });
                    (a.bands, a.error_radius, params)
                }
                (None, None) => return Err(validation("give --pq or --cf")),
            };
            Ok(Product {
                out: out_or(&output.out, "spectrum", ext(output.format)),
                data: io::bandset_bytes(&bands, output.format)?,
                params: json!({ "frequency": params, "format": output.format }),
                error_radii: vec![radius],
                summary: json!({ "intervals": bands.len(), "measure": bands.measure() }),
            })
        }
        Command::Dims { cf, a, approx, window, grid, output } => dims(cf, a, approx, window, *grid, output),
        Command::ConfigAudit { bands, params, central, hull, out } => config_audit(bands, params, *central, hull, out),
        Command::MoranSim { delta, depth, h, seed, kappa, rho, root_type, fit_decades, grid, out } => {
            moran_sim(*delta, *depth, *h, *seed, *kappa, *rho, *root_type, *fit_decades, *grid, out)
        }
        Command::Mdsum { d, cf, pq, a, approx, coarsen, grid, output } => mdsum(*d, cf, pq, a, approx, *coarsen, *grid, output),
    }
}

fn dims(
    cf: &Option<String>,
    a: &Option<Vec<u64>>,
    approx: &Approx,
    window: &str,
    grid: usize,
    output: &Output,
) -> Result<Product, Failure> {
    let explicit = if window == "auto" { None } else { Some(parse_range(window, "--window")?) };
    let (records, tables) = if let Some(a_values) = a {
        if explicit.is_some() {
            return Err(validation("--a uses the automatic window"));
        }
        let q_max = check_qmax(approx.qmax.ok_or_else(|| validation("--a needs --qmax"))?)?;
        let rows = sweep::trend(a_values, q_max, grid)?;
        let recs: Vec<DimsRecord> = rows
            .iter()
            .map(|r| DimsRecord {
                a: r.a,
                q_used: r.q_used,
                error_radius: r.error_radius,
                slope: r.estimate.slope,
                slope_max: r.estimate.slope_max,
                slope_min: r.estimate.slope_min,
                r_min: r.estimate.window.r_min,
                r_max: r.estimate.window.r_max,
            })
            .collect();
        (recs, rows.iter().map(|r| r.estimate.table.clone()).collect::<Vec<_>>())
    } else {
        let cf = parse_cf(cf.as_deref().unwrap_or_default())?;
        let n = convergent_index(&cf, approx)?;
        let s = spectrum_approx(&cf, n)?;
        let w = match explicit {
            None => ScaleWindow::auto(s.bands.diameter(), s.error_radius, grid)?,
            Some((lo, hi)) => {
                let w = ScaleWindow::new(lo, hi, grid)?;
                if w.r_min < 10.0 * s.error_radius {
                    return Err(DimError::WindowTooFine { r_min: w.r_min, error_radius: s.error_radius }.into());
                }
                w
            }
        };
        let est = sweep::box_dim_fit(&s.bands, w)?;
        // the largest partial quotient used labels the row
        let a_label = (1..=n).filter_map(|k| cf.quotient(k)).max().unwrap_or(0);
        let rec = DimsRecord {
            a: a_label,
            q_used: s.freq.q(),
            error_radius: s.error_radius,
            slope: est.slope,
            slope_max: est.slope_max,
            slope_min: est.slope_min,
            r_min: w.r_min,
            r_max: w.r_max,
        };
        (vec![rec], vec![est.table])
    };
    Ok(Product {
        out: out_or(&output.out, "dims", ext(output.format)),
        data: io::table_bytes(&records, output.format)?,
        params: json!({ "cf": cf, "a": a, "depth": approx.depth, "qmax": approx.qmax, "window": window, "grid": grid, "format": output.format }),
        error_radii: records.iter().map(|r| r.error_radius).collect(),
        summary: json!({ "box_counts": tables }),
    })
}

fn default_central(bands: &BandSet, hull: Interval) -> u64 {
    if let Some(i) = bands.iter().position(|iv| iv.contains(0.0)) {
        return i as u64;
    }
    let m = hull.mid();
    let (mut best, mut dist) = (0, f64::INFINITY);
    for (i, iv) in bands.iter().enumerate() {
        if iv.dist(m) < dist {
            best = i;
            dist = iv.dist(m);
        }
    }
    best as u64
}

fn config_audit(bands: &Path, params: &str, central: Option<u64>, hull: &Option<String>, out: &Option<PathBuf>) -> Result<Product, Failure> {
    let set = io::read_bandset(bands)?;
    let v: Value = serde_json::from_str(params).map_err(|e| validation(format!("--params: {e}")))?;
    let field = |k: &str| {
        v.get(k).and_then(Value::as_f64).ok_or_else(|| validation(format!("--params needs a numeric {k:?}")))
    };
    let p = ConfigParams::new(field("varsigma")?, field("epsilon")?, field("m")?, field("c")?, field("h")?)?;
    let hull = match hull {
        Some(h) => {
            let (lo, hi) = parse_range(h, "--hull")?;
            Interval::new(lo, hi)?
        }
        None => set.hull().ok_or(BandError::Empty)?,
    };
    let central = central.unwrap_or_else(|| default_central(&set, hull));
    let cfg = Configuration::from_bandset(hull, &set, Some(central))?;
    let (std_cfg, frame) = normalize_to_standard(&cfg)?;
    let report = audit_standard(&std_cfg, &p)?;
    Ok(Product {
        out: out_or(out, "audit", "json"),
        data: io::audit_bytes(&report)?,
        params: json!({
            "bands": bands.display().to_string(),
            "params": { "varsigma": p.varsigma, "epsilon": p.epsilon, "m": p.m, "c": p.c, "h": p.h },
            "central": central,
            "hull": [hull.lo, hull.hi],
        }),
        error_radii: Vec::new(),
        summary: json!({ "pass": report.pass, "frame": { "scale": frame.scale, "shift": frame.shift } }),
    })
}

#[allow(clippy::too_many_arguments)]
fn moran_sim(
    delta: f64,
    depth: u32,
    h: f64,
    seed: u64,
    kappa: u32,
    rho: f64,
    root_type: u8,
    fit_decades: f64,
    grid: usize,
    out: &Option<PathBuf>,
) -> Result<Product, Failure> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(validation(format!("--delta must lie in (0,1), got {delta}")));
    }
    let params = ConfigParams::new(3.5, 0.03, 8.0, 2.0, h)?;
    let rule = StandardRule { params, kappa, rho, h: HStream::Constant(h) };
    let ty = if root_type == 1 { NodeType::One } else { NodeType::Two };
    let nc = build(&rule, Interval { lo: 0.0, hi: 1.0 }, ty, depth, seed)?;
    let cert = nc.hausdorff_certificate(delta)?;
    let threshold = h_threshold(delta, kappa, rho, &params).ok().map(|t| t.h);
    let counts = nc.level_counts();
    let dump_depth = counts.iter().take_while(|&&c| c <= DUMP_LEVEL_LIMIT).count() as u32;
    let mut data = Vec::new();
    let mut err = None;
    if dump_depth > 0 {
        nc.walk(dump_depth - 1, &mut |v| match io::node_line(v) {
            Ok(line) => {
                data.extend_from_slice(line.as_bytes());
                data.push(b'\n');
                true
            }
            Err(e) => {
                err.get_or_insert(e);
                false
            }
        });
    }
    if let Some(e) = err {
        return Err(e.into());
    }
    let fit = if fit_decades > 0.0 && depth > 0 {
        let t = nc.root_template().ok_or_else(|| validation("structure has depth 0"))?;
        let r_max = (t.ln_ratio_range().1 + nc.root().len().ln()).exp();
        let w = ScaleWindow::new(r_max * 10f64.powf(-fit_decades), r_max, grid)?;
        let est = sweep::fit_par(w, |r| nc.box_count(depth, r).map_err(Failure::from))?;
        Some(json!({ "slope": est.slope, "slope_max": est.slope_max, "slope_min": est.slope_min, "r_min": w.r_min, "r_max": w.r_max, "table": est.table }))
    } else {
        None
    };
    Ok(Product {
        out: out_or(out, "tree", "jsonl"),
        data,
        params: json!({ "delta": delta, "depth": depth, "h": h, "seed": seed, "kappa": kappa, "rho": rho, "root_type": root_type, "fit_decades": fit_decades, "grid": grid }),
        error_radii: Vec::new(),
        summary: json!({
            "certificate": {
                "holds": cert.holds,
                "max_child_sum": cert.max_child_sum,
                "worst": cert.worst.to_string(),
                "levels_bounded": cert.levels_bounded,
                "level_sums": cert.level_sums,
                "root_bound": cert.root_bound,
            },
            "h_threshold": threshold,
            "h_within_threshold": threshold.map(|t| h <= t),
            "level_counts": counts,
            "dumped_levels": dump_depth,
            "box_fit": fit,
        }),
    })
}

#[allow(clippy::too_many_arguments)]
fn mdsum(
    d: Option<usize>,
    cfs: &[String],
    pqs: &[String],
    a: &Option<Vec<u64>>,
    approx: &Approx,
    coarsen: bool,
    grid: usize,
    output: &Output,
) -> Result<Product, Failure> {
    if let Some(a_values) = a {
        let d = d.ok_or_else(|| validation("--a needs --d"))?;
        let q_max = check_qmax(approx.qmax.ok_or_else(|| validation("--a needs --qmax"))?)?;
        let rows = sweep::collapse(a_values, d, q_max, grid, coarsen)?;
        let recs: Vec<CollapseRecord> = rows
            .iter()
            .map(|r| CollapseRecord {
                a: r.a,
                d: r.d,
                measure: r.measure,
                md_slope: r.md_slope,
                sum_slope: r.sum_slope,
                max_interior: r.max_interior,
            })
            .collect();
        return Ok(Product {
            out: out_or(&output.out, "collapse", ext(output.format)),
            data: io::table_bytes(&recs, output.format)?,
            params: json!({ "d": d, "a": a_values, "qmax": q_max, "coarsen": coarsen, "grid": grid, "format": output.format }),
            error_radii: rows.iter().map(|r| r.error_radius).collect(),
            summary: json!({ "q_used": rows.iter().map(|r| r.q_used).collect::<Vec<_>>() }),
        });
    }
    let mut comps = Vec::new();
    for s in cfs {
        comps.push(Component::Cf(parse_cf(s)?));
    }
    for s in pqs {
        comps.push(Component::Exact(parse_pq(s)?));
    }
    let fv = match (comps.len(), d) {
        (0, _) => return Err(validation("give --cf, --pq or --a")),
        (1, Some(d)) => FrequencyVector::repeated(comps.remove(0), d)?,
        (n, Some(d)) if n != d => return Err(validation(format!("{n} components given but --d {d}"))),
        _ => FrequencyVector::new(comps)?,
    };
    let needs_depth = fv.components().iter().any(|c| matches!(c, Component::Cf(_)));
    let depth = match (approx.depth, approx.qmax) {
        (Some(n), _) => {
            for c in fv.components() {
                if let Component::Cf(cf) = c {
                    check_depth(cf, n)?;
                }
            }
            Depth::Fixed(n)
        }
        (None, Some(q)) => Depth::MaxDenominator(check_qmax(q)?),
        (None, None) if !needs_depth => Depth::Fixed(1),
        _ => return Err(validation("continued fractions need --depth or --qmax")),
    };
    let md = sweep::md_spectrum(&fv, depth, coarsen)?;
    Ok(Product {
        out: out_or(&output.out, "mdsum", ext(output.format)),
        data: io::bandset_bytes(&md.bands, output.format)?,
        params: json!({ "d": fv.d(), "cf": cfs, "pq": pqs, "depth": approx.depth, "qmax": approx.qmax, "coarsen": coarsen, "format": output.format }),
        error_radii: vec![md.error_radius],
        summary: json!({
            "intervals": md.bands.len(),
            "measure": md.bands.measure(),
            "max_interior": md.bands.max_interval_len(),
            "coarsening": md.coarsening,
            "component_q": md.component_q,
        }),
    })
}
