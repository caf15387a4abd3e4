//! Command bodies. Each returns a JSON result, a pass flag and the CSV/binary
//! side outputs; `main` wraps them into the report envelope.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use warpco::covering::{
    alpha_verify, besov_covering, cross_intersections, induced_covering, tightness_radius, FrequencyCovering, IndexWindow,
};
use warpco::decomp_norms::{band_limited_family, kappa_power, norm_equivalence_probe, ProbeSetup};
use warpco::embeddings::{besov_truth_table, besov_vs_warped, embed_check, KappaSpec};
use warpco::fftnd::Complex64;
use warpco::radial_warping::Family;
use warpco::transform::{FrequencyGrid, Prototype, SampledSignal, VoiceTransform};
use warpco::Error;

use crate::config::*;
use crate::signal_io::read_signal;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Verification(String),
    NonConvergence(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
            CliError::NonConvergence(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::NonConvergence(m) => write!(f, "numerical non-convergence: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::HypothesisFailed(_) => CliError::Verification(e.to_string()),
            Error::NonConvergence(_) | Error::SingularJacobian(_) => CliError::NonConvergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub struct Outcome {
    pub result: Value,
    pub pass: bool,
    pub csv: Vec<(String, String)>,
    pub signals: Vec<(String, SampledSignal)>,
}

impl Outcome {
    fn new(result: impl Serialize, pass: bool) -> Self {
        Self {
            result: serde_json::to_value(result).expect("reports serialize"),
            pass,
            csv: Vec::new(),
            signals: Vec::new(),
        }
    }
}

fn idx(k: &[i64]) -> String {
    k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

fn coords(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(";")
}

pub fn covering_report(cfg: &CoveringConfig) -> CliResult<Outcome> {
    let map = cfg.map.build()?;
    let cov = induced_covering(&map, cfg.delta, cfg.r)?;
    let window = IndexWindow::ball(map.dim(), cfg.window);
    let tight = tightness_radius(&cov, &window)?;
    let mut csv = String::from("index,center,measure,first_neighbors\n");
    let mut counts = Vec::new();
    for k in &window.indices {
        let n = cov.first_neighbors(k).len();
        counts.push(n);
        writeln!(csv, "{},{},{:.12e},{n}", idx(k), coords(&cov.center(k)), cov.element_measure(k)?).unwrap();
    }
    let origin = vec![0i64; map.dim()];
    let growth = cov.neighbor_growth_diagnostic(&origin, cfg.neighbor_order);
    let mut out_csv = vec![("measures.csv".to_string(), csv)];
    let cross = match cfg.besov_jmax {
        Some(jmax) => {
            let b = besov_covering(map.dim())?;
            let wa = if map.dim() == 1 {
                IndexWindow::range(-(cfg.window as i64), cfg.window as i64)
            } else {
                IndexWindow::from_indices("none", vec![])
            };
            let rep = cross_intersections(&cov, &b, &wa, &IndexWindow::besov(jmax))?;
            let mut c = String::from("j,count\n");
            for (j, n) in &rep.counts_for_b {
                writeln!(c, "{},{n}", idx(j)).unwrap();
            }
            out_csv.push(("besov_cross.csv".into(), c));
            Some(rep)
        }
        None => None,
    };
    let alpha = match cfg.alpha_verify {
        Some(a) => Some(alpha_verify(&cov, a, &IndexWindow::range(-cfg.alpha_window, cfg.alpha_window))?),
        None => None,
    };
    let pass = tight.verified && alpha.as_ref().is_none_or(|a| a.pass);
    let mut o = Outcome::new(
        json!({
            "covering": cov.id(),
            "window_size": window.len(),
            "first_neighbor_counts": {"min": counts.iter().min(), "max": counts.iter().max()},
            "tightness": tight,
            "growth": growth,
            "besov_cross": cross,
            "alpha": alpha,
        }),
        pass,
    );
    o.csv = out_csv;
    Ok(o)
}

pub fn embed(cfg: &EmbedConfig) -> CliResult<Outcome> {
    let v = embed_check(&cfg.space_a, &cfg.space_b)?;
    let pass = cfg.expect.is_none_or(|e| e == v.relation);
    Ok(Outcome::new(v, pass))
}

fn grid_of(dim: usize, g: GridSpec) -> CliResult<FrequencyGrid> {
    Ok(FrequencyGrid::new(dim, g.n, g.extent)?)
}

fn prototype_of(dim: usize, p: &PrototypeSpec) -> CliResult<Prototype> {
    Ok(match p.kind {
        PrototypeKindSpec::Bump => Prototype::bump(dim, p.radius)?,
        PrototypeKindSpec::UnitL2 => Prototype::unit_l2(dim, p.radius)?,
    })
}

pub fn load_signal(spec: &SignalSpec, grid: FrequencyGrid, seed: u64, base: &Path) -> CliResult<SampledSignal> {
    let one = Complex64::new(1.0, 0.0);
    let d = grid.dim;
    Ok(match spec {
        SignalSpec::Bundled => SampledSignal::gaussian(grid, &vec![0.3; d], 0.1, &vec![0.0; d], one),
        SignalSpec::Zero => SampledSignal::zero(grid),
        SignalSpec::Gaussian { center, sigma, shift } => {
            if center.len() != d || shift.as_ref().is_some_and(|s| s.len() != d) {
                return Err(CliError::Config(format!("signal center/shift must have {d} entries")));
            }
            if !(*sigma > 0.0) {
                return Err(CliError::Config(format!("signal sigma must be positive, got {sigma}")));
            }
            SampledSignal::gaussian(grid, center, *sigma, shift.as_deref().unwrap_or(&vec![0.0; d]), one)
        }
        SignalSpec::BandLimited { index } => band_limited_family(grid, index + 1, seed).pop().expect("nonempty family"),
        SignalSpec::File { path } => {
            let f = read_signal(&base.join(path)).map_err(CliError::Config)?;
            if f.grid != grid {
                return Err(CliError::Config(format!(
                    "signal grid (d={}, N={}, L={}) differs from configured grid (d={}, N={}, L={})",
                    f.grid.dim, f.grid.n, f.grid.extent, grid.dim, grid.n, grid.extent
                )));
            }
            f
        }
    })
}

pub fn transform(cfg: &TransformConfig, seed: u64, base: &Path) -> CliResult<Outcome> {
    let map = cfg.map.build()?;
    let grid = grid_of(map.dim(), cfg.grid)?;
    let f = load_signal(&cfg.signal, grid, seed, base)?;
    let vt = VoiceTransform::new(&map, &prototype_of(map.dim(), &cfg.prototype)?, cfg.delta, grid)?.with_weights(cfg.omega_weights);
    let window = vt.window_for(&f, 0.0)?;
    let parseval = vt.parseval_defect(&f, Some(&window))?;
    let coeffs = vt.analyze(&f, &window)?;
    let dy = grid.time_cell_volume();
    let mut csv = String::from("index,omega,weight,channel_energy,channel_peak\n");
    for (((k, om), mu), c) in coeffs.indices.iter().zip(&coeffs.omega).zip(&coeffs.weights).zip(&coeffs.channels) {
        let e = dy * c.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let peak = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        writeln!(csv, "{},{},{mu:.12e},{e:.12e},{peak:.12e}", idx(k), coords(om)).unwrap();
    }
    let mut signals = Vec::new();
    let round_trip = if cfg.synthesize {
        let back = vt.synthesize(&coeffs)?;
        let err = if f.energy() == 0.0 { back.energy().sqrt() } else { back.relative_error(&f) };
        signals.push(("reconstruction.bin".to_string(), back));
        Some(err)
    } else {
        None
    };
    let pass = cfg.tol.is_none_or(|t| parseval.defect <= t);
    let mut o = Outcome::new(
        json!({
            "channels": coeffs.indices.len(),
            "coefficient_energy": coeffs.energy() + 0.0,
            "parseval": parseval,
            "round_trip_error": round_trip,
            "truncation_warning": coeffs.truncation_warning,
        }),
        pass,
    );
    o.csv = vec![("coefficients.csv".into(), csv)];
    o.signals = signals;
    Ok(o)
}

pub fn parseval(cfg: &ParsevalConfig, seed: u64, base: &Path) -> CliResult<Outcome> {
    if cfg.deltas.is_empty() {
        return Err(CliError::Config("deltas must be nonempty".into()));
    }
    let map = cfg.map.build()?;
    let grid = grid_of(map.dim(), cfg.grid)?;
    let f = load_signal(&cfg.signal, grid, seed, base)?;
    let proto = prototype_of(map.dim(), &cfg.prototype)?;
    let mut rows = Vec::new();
    let mut csv = String::from("delta,defect,window_size,truncation_warning\n");
    for &delta in &cfg.deltas {
        let vt = VoiceTransform::new(&map, &proto, delta, grid)?.with_weights(cfg.omega_weights);
        let r = vt.parseval_defect(&f, None)?;
        writeln!(csv, "{delta},{:.12e},{},{}", r.defect, r.window_size, r.truncation_warning).unwrap();
        rows.push(json!({"delta": delta, "report": r}));
    }
    let defects: Vec<f64> = rows.iter().map(|r| r["report"]["defect"].as_f64().unwrap_or(f64::NAN)).collect();
    let monotone = defects.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0);
    let last = *defects.last().expect("nonempty");
    let pass = cfg.tol.is_none_or(|t| last <= t) && (!cfg.require_monotone || monotone);
    let mut o = Outcome::new(json!({"rows": rows, "monotone": monotone, "final_defect": last}), pass);
    o.csv = vec![("parseval.csv".into(), csv)];
    Ok(o)
}

pub fn alpha(cfg: &AlphaConfig) -> CliResult<Outcome> {
    if cfg.alpha > 1.0 {
        return Err(CliError::Config(format!("no α-covering exists for α > 1 (got α = {})", cfg.alpha)));
    }
    let map = warpco::catalog::map_from_id(&format!("alpha:{}", cfg.alpha), cfg.d)?;
    let cov: FrequencyCovering = induced_covering(&map, cfg.delta, cfg.r)?;
    let window = if cfg.d == 1 {
        IndexWindow::range(-cfg.window, cfg.window)
    } else {
        IndexWindow::ball(cfg.d, cfg.window as f64)
    };
    let r = alpha_verify(&cov, cfg.alpha, &window)?;
    let pass = r.pass;
    Ok(Outcome::new(json!({"covering": cov.id(), "window_size": window.len(), "report": r}), pass))
}

pub fn besov(cfg: &BesovConfig) -> CliResult<Outcome> {
    if cfg.table {
        let rows = besov_truth_table(cfg.s)?;
        let mut csv = String::from("d,p,q,besov_into_co,co_into_besov\n");
        for r in &rows {
            writeln!(csv, "{},{},{},{},{}", r.dim, r.p, r.q, r.besov_into_co, r.co_into_besov).unwrap();
        }
        let mut o = Outcome::new(json!({"rows": rows}), true);
        o.csv = vec![("truth_table.csv".into(), csv)];
        return Ok(o);
    }
    let family = Family::parse(&cfg.family)?;
    let kappa = cfg.kappa.clone().unwrap_or(KappaSpec::BesovId { s: cfg.s });
    let c = besov_vs_warped(
        family,
        cfg.d,
        &kappa,
        cfg.p,
        cfg.q,
        cfg.besov_s.unwrap_or(cfg.s),
        cfg.besov_p.unwrap_or(cfg.p),
        cfg.besov_q.unwrap_or(cfg.q),
    )?;
    Ok(Outcome::new(c, true))
}

pub fn norm_probe(cfg: &NormProbeConfig, seed: u64) -> CliResult<Outcome> {
    if cfg.maps.is_empty() || cfg.exponents.is_empty() {
        return Err(CliError::Config("maps and exponents must be nonempty".into()));
    }
    let grid = grid_of(1, cfg.grid)?;
    let signals = band_limited_family(grid, cfg.signals, seed);
    let setup = ProbeSetup {
        delta: cfg.delta,
        r: cfg.r,
        vartheta: cfg.vartheta,
        refinement: cfg.refinement,
        grid,
    };
    let exps: Vec<(f64, f64)> = cfg.exponents.iter().map(|(p, q)| (p.to_f64(), q.to_f64())).collect();
    let mut out = Vec::new();
    let mut csv = String::from("map,p,q,signal_id,coorbit,decomposition,ratio\n");
    let mut worst = 0.0f64;
    for id in &cfg.maps {
        let map = warpco::catalog::map_from_id(id, 1)?;
        let bands = norm_equivalence_probe(&signals, &map, kappa_power(cfg.kappa_s), &exps, &setup)?;
        for (band, (p, q)) in bands.iter().zip(&cfg.exponents) {
            for r in &band.records {
                writeln!(csv, "{id},{p},{q},{},{:.12e},{:.12e},{:.12e}", r.signal_id, r.coorbit, r.decomposition, r.ratio).unwrap();
            }
            if band.width.is_finite() {
                worst = worst.max(band.width);
            }
            out.push(json!({
                "map": id,
                "p": p,
                "q": q,
                "min": band.min,
                "max": band.max,
                "width": band.width,
                "signals": band.records.len(),
            }));
        }
    }
    let pass = worst <= cfg.max_width;
    let mut o = Outcome::new(json!({"bands": out, "max_width": worst}), pass);
    o.csv = vec![("norm_records.csv".into(), csv)];
    Ok(o)
}
