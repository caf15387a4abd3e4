//! Sampled warped voice transform `V_{θ,Φ}f(y, ω) = F⁻¹[ḡ_ω·f̂](y)` on periodized
//! uniform grids, with tight-frame checks, synthesis and coorbit norms.

use std::collections::BTreeSet;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bapu::Bapu;
use crate::bump::TensorBump;
use crate::covering::{cell_measure, Index};
use crate::error::{check_dim, invalid, Error, Result};
use crate::fftnd::fftn_with;
use crate::quadrature::GaussRule;
use crate::warping_core::{eval_weight, WarpingMap};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform frequency grid `ξ_j = −L/2 + jL/N` per axis with the dual time grid
/// `y_m = m/L` (signed, FFT order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
}

impl FrequencyGrid {
    pub fn new(dim: usize, n: usize, extent: f64) -> Result<Self> {
        if dim == 0 || n < 4 || !n.is_multiple_of(2) {
            return invalid(format!("grid needs d >= 1 and an even N >= 4, got d={dim}, N={n}"));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return invalid(format!("grid extent must be positive, got {extent}"));
        }
        if n.checked_pow(dim as u32).is_none_or(|t| t > 1 << 26) {
            return invalid("grid too large");
        }
        Ok(Self { dim, n, extent })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dxi(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.extent
    }

    pub fn cell_volume(&self) -> f64 {
        self.dxi().powi(self.dim as i32)
    }

    pub fn time_cell_volume(&self) -> f64 {
        self.dy().powi(self.dim as i32)
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    pub fn unravel(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        let mut rem = flat;
        for i in (0..self.dim).rev() {
            out[i] = rem % self.n;
            rem /= self.n;
        }
        out
    }

    pub fn freq_axis(&self) -> Vec<f64> {
        (0..self.n).map(|j| -0.5 * self.extent + j as f64 * self.dxi()).collect()
    }

    pub fn time_axis(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.signed(m) as f64 * self.dy()).collect()
    }

    fn signed(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    pub fn freq_point(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .into_iter()
            .map(|j| -0.5 * self.extent + j as f64 * self.dxi())
            .collect()
    }

    pub fn time_point(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat).into_iter().map(|m| self.signed(m) as f64 * self.dy()).collect()
    }

    fn parity(&self, flat: usize) -> f64 {
        let s: usize = self.unravel(flat).iter().sum();
        if s.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    fn on_boundary(&self, flat: usize) -> bool {
        let edge = (self.n / 32).max(1);
        self.unravel(flat).iter().any(|&j| j < edge || j >= self.n - edge)
    }
}

/// Frequency samples `f̂(ξ_j)` of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        check_dim(grid.len(), values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zero(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            values: vec![ZERO; grid.len()],
        }
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|j| f(&grid.freq_point(j))).collect();
        Self { grid, values }
    }

    /// `f̂(ξ) = amplitude·exp(−|ξ − center|²/(2σ²))·e^{−2πi⟨shift, ξ⟩}`.
    pub fn gaussian(grid: FrequencyGrid, center: &[f64], sigma: f64, shift: &[f64], amplitude: Complex64) -> Self {
        Self::from_fn(grid, |xi| {
            let r2: f64 = xi.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum();
            let ph: f64 = xi.iter().zip(shift).map(|(x, s)| x * s).sum();
            amplitude * (-r2 / (2.0 * sigma * sigma)).exp() * Complex64::from_polar(1.0, -std::f64::consts::TAU * ph)
        })
    }

    /// `‖f‖₂² = Σ|f̂_j|²·Δξ^d`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Fraction of the energy within `N/32` points of the grid edge.
    pub fn boundary_energy_fraction(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(j, _)| self.grid.on_boundary(*j))
            .map(|(_, v)| v.norm_sqr())
            .sum();
        edge / total
    }

    /// Relative `L²` distance to another signal on the same grid.
    pub fn relative_error(&self, other: &SampledSignal) -> f64 {
        let num: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = other.values.iter().map(|v| v.norm_sqr()).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    /// Samples of `f` on the time grid, `f(y_m) = ∫ f̂(ξ) e^{2πi y_m ξ} dξ`.
    pub fn to_time(&self) -> Vec<Complex64> {
        spectrum_to_time(&self.grid, self.values.clone())
    }
}

fn spectrum_to_time(grid: &FrequencyGrid, mut h: Vec<Complex64>) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    fftn_with(&mut planner, &mut h, &grid.dims(), true);
    let c = grid.cell_volume();
    for (m, v) in h.iter_mut().enumerate() {
        *v *= c * grid.parity(m);
    }
    h
}

fn time_to_spectrum(grid: &FrequencyGrid, mut v: Vec<Complex64>) -> Vec<Complex64> {
    let c = grid.time_cell_volume();
    for (m, x) in v.iter_mut().enumerate() {
        *x *= c * grid.parity(m);
    }
    let mut planner = FftPlanner::new();
    fftn_with(&mut planner, &mut v, &grid.dims(), false);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrototypeKind {
    /// `θ ≥ 0`, `‖θ‖₁ = 1`.
    Bump,
    /// `‖θ‖₂ = 1`.
    UnitL2,
}

/// Smooth compactly supported prototype `θ`.
#[derive(Debug, Clone)]
pub struct Prototype {
    bump: TensorBump,
    kind: PrototypeKind,
}

impl Prototype {
    pub fn new(kind: PrototypeKind, dim: usize, support_radius: f64) -> Result<Self> {
        if dim == 0 || !(support_radius > 0.0 && support_radius.is_finite()) {
            return invalid(format!("prototype needs d >= 1 and a positive radius, got {support_radius}"));
        }
        let b = TensorBump::unit_mass(dim, support_radius);
        let bump = match kind {
            PrototypeKind::Bump => b,
            PrototypeKind::UnitL2 => {
                let s = 1.0 / b.l2_norm_sq().sqrt();
                b.rescaled(s)
            }
        };
        Ok(Self { bump, kind })
    }

    pub fn bump(dim: usize, support_radius: f64) -> Result<Self> {
        Self::new(PrototypeKind::Bump, dim, support_radius)
    }

    pub fn unit_l2(dim: usize, support_radius: f64) -> Result<Self> {
        Self::new(PrototypeKind::UnitL2, dim, support_radius)
    }

    /// The mollifier of a partition of unity, used as prototype (`θ = ζ`).
    pub fn from_bapu(bapu: &Bapu) -> Self {
        Self {
            bump: bapu.mollifier().bump().clone(),
            kind: PrototypeKind::Bump,
        }
    }

    pub fn kind(&self) -> PrototypeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.bump.dim()
    }

    pub fn support_radius(&self) -> f64 {
        self.bump.support_radius()
    }

    pub fn half_width(&self) -> f64 {
        self.bump.half_width()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.bump.eval(x)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.bump.l2_norm_sq()
    }

    pub fn l1_norm(&self) -> f64 {
        self.bump.l1_norm()
    }
}

/// Measure weights `μ(M_k)` of the `ω`-quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaWeights {
    /// Exact measure of the warped cube `M_k`.
    CellMeasure,
    /// `δ^d·w(δk)`: midpoint rule in warped coordinates.
    #[default]
    Midpoint,
}

/// Channels `V(·, ω_k)` on the time grid for a window of lattice indices.
#[derive(Debug, Clone)]
pub struct WarpedCoefficients {
    pub grid: FrequencyGrid,
    pub delta: f64,
    pub indices: Vec<Index>,
    /// `ω_k = Φ⁻¹(δk)`.
    pub omega: Vec<Vec<f64>>,
    /// `μ(M_k)`.
    pub weights: Vec<f64>,
    pub channels: Vec<Vec<Complex64>>,
    /// Some atom in the window does not decay at the grid edge.
    pub truncation_warning: bool,
}

impl WarpedCoefficients {
    /// `Σ_k μ(M_k)·∫|V(y, ω_k)|² dy`.
    pub fn energy(&self) -> f64 {
        let dy = self.grid.time_cell_volume();
        self.channels
            .iter()
            .zip(&self.weights)
            .map(|(c, mu)| mu * dy * c.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn zeroed(&self) -> Self {
        let mut z = self.clone();
        for c in &mut z.channels {
            c.iter_mut().for_each(|v| *v = ZERO);
        }
        z
    }
}

/// Sampled warped voice transform for a fixed map, prototype, lattice step and grid.
#[derive(Clone)]
pub struct VoiceTransform {
    map: WarpingMap,
    prototype: Prototype,
    delta: f64,
    grid: FrequencyGrid,
    warped: Vec<Option<Vec<f64>>>,
    weights: OmegaWeights,
}

impl std::fmt::Debug for VoiceTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VoiceTransform")
            .field("map", &self.map.id())
            .field("delta", &self.delta)
            .field("grid", &self.grid)
            .field("weights", &self.weights)
            .finish()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParsevalReport {
    pub defect: f64,
    pub coefficient_energy: f64,
    pub signal_energy: f64,
    pub prototype_l2_sq: f64,
    pub window_size: usize,
    pub truncation_warning: bool,
}

impl VoiceTransform {
    pub fn new(map: &WarpingMap, prototype: &Prototype, delta: f64, grid: FrequencyGrid) -> Result<Self> {
        check_dim(map.dim(), prototype.dim())?;
        check_dim(map.dim(), grid.dim)?;
        if !(delta > 0.0 && delta.is_finite()) {
            return invalid(format!("delta must be positive, got {delta}"));
        }
        let warped = (0..grid.len())
            .into_par_iter()
            .map(|j| {
                let xi = grid.freq_point(j);
                map.domain().contains(&xi).then(|| map.forward(&xi))
            })
            .collect();
        Ok(Self {
            map: map.clone(),
            prototype: prototype.clone(),
            delta,
            grid,
            warped,
            weights: OmegaWeights::default(),
        })
    }

    pub fn with_weights(mut self, weights: OmegaWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn map(&self) -> &WarpingMap {
        &self.map
    }

    pub fn prototype(&self) -> &Prototype {
        &self.prototype
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn omega_weights(&self) -> OmegaWeights {
        self.weights
    }

    fn lattice_point(&self, k: &[i64]) -> Vec<f64> {
        k.iter().map(|&v| self.delta * v as f64).collect()
    }

    /// `g_ω` on the grid for `Φ(ω) = τ`, with a flag for non-decay at the edge.
    pub fn atom_at(&self, tau: &[f64]) -> Result<(Vec<f64>, bool)> {
        check_dim(self.map.dim(), tau.len())?;
        let s = eval_weight(&self.map, tau)?.abs().powf(-0.5);
        let a = self.prototype.half_width();
        let mut edge = false;
        let mut diff = vec![0.0; tau.len()];
        let vals = self
            .warped
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let Some(t) = t else { return 0.0 };
                for i in 0..tau.len() {
                    diff[i] = t[i] - tau[i];
                    if diff[i].abs() >= a {
                        return 0.0;
                    }
                }
                let v = s * self.prototype.eval(&diff);
                if v != 0.0 && self.grid.on_boundary(j) {
                    edge = true;
                }
                v
            })
            .collect();
        Ok((vals, edge))
    }

    /// `g_{ω_k}` with `ω_k = Φ⁻¹(δk)`.
    pub fn atom(&self, k: &[i64]) -> Result<Vec<f64>> {
        Ok(self.atom_at(&self.lattice_point(k))?.0)
    }

    /// `V(·, Φ⁻¹(τ))` on the time grid.
    pub fn channel_at(&self, f: &SampledSignal, tau: &[f64]) -> Result<Vec<Complex64>> {
        self.check_signal(f)?;
        let (g, _) = self.atom_at(tau)?;
        Ok(spectrum_to_time(&self.grid, g.iter().zip(&f.values).map(|(a, v)| a * v).collect()))
    }

    fn check_signal(&self, f: &SampledSignal) -> Result<()> {
        if f.grid != self.grid {
            return invalid("signal grid differs from the transform grid");
        }
        Ok(())
    }

    /// `μ(M_k)` according to the configured weights.
    pub fn measure(&self, k: &[i64]) -> Result<f64> {
        match self.weights {
            OmegaWeights::CellMeasure => cell_measure(&self.map, self.delta, k),
            OmegaWeights::Midpoint => {
                Ok(self.delta.powi(k.len() as i32) * eval_weight(&self.map, &self.lattice_point(k))?.abs())
            }
        }
    }

    /// All `k` whose atom meets `{|f̂| > tol·max|f̂|}`.
    pub fn window_for(&self, f: &SampledSignal, tol: f64) -> Result<Vec<Index>> {
        self.check_signal(f)?;
        let peak = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Ok(Vec::new());
        }
        let a = self.prototype.half_width();
        let mut set = BTreeSet::new();
        for (v, t) in f.values.iter().zip(&self.warped) {
            let Some(t) = t else { continue };
            if v.norm() <= tol * peak {
                continue;
            }
            let ranges: Vec<(i64, i64)> = t
                .iter()
                .map(|&ti| (((ti - a) / self.delta).ceil() as i64, ((ti + a) / self.delta).floor() as i64))
                .collect();
            let mut stack: Vec<Index> = vec![Vec::new()];
            for &(lo, hi) in &ranges {
                stack = stack
                    .into_iter()
                    .flat_map(|p| {
                        (lo..=hi).map(move |j| {
                            let mut q = p.clone();
                            q.push(j);
                            q
                        })
                    })
                    .collect();
            }
            set.extend(stack);
        }
        Ok(set.into_iter().collect())
    }

    /// `V(·, ω_k) = F⁻¹[ḡ_{ω_k}·f̂]` for every `k` in the window.
    pub fn analyze(&self, f: &SampledSignal, window: &[Index]) -> Result<WarpedCoefficients> {
        self.check_signal(f)?;
        let results: Vec<(Vec<Complex64>, bool, f64, Vec<f64>)> = window
            .par_iter()
            .map(|k| {
                check_dim(self.map.dim(), k.len())?;
                let tau = self.lattice_point(k);
                let (g, edge) = self.atom_at(&tau)?;
                let h = g.iter().zip(&f.values).map(|(a, v)| a * v).collect();
                Ok((spectrum_to_time(&self.grid, h), edge, self.measure(k)?, self.map.inverse(&tau)))
            })
            .collect::<Result<_>>()?;
        let mut coeffs = WarpedCoefficients {
            grid: self.grid,
            delta: self.delta,
            indices: window.to_vec(),
            omega: Vec::with_capacity(window.len()),
            weights: Vec::with_capacity(window.len()),
            channels: Vec::with_capacity(window.len()),
            truncation_warning: false,
        };
        for (c, edge, mu, om) in results {
            coeffs.channels.push(c);
            coeffs.truncation_warning |= edge;
            coeffs.weights.push(mu);
            coeffs.omega.push(om);
        }
        Ok(coeffs)
    }

    /// `f̃ = ‖θ‖₂^{−2}·Σ_k μ(M_k)·g_{ω_k}·F[V(·, ω_k)]`.
    pub fn synthesize(&self, coeffs: &WarpedCoefficients) -> Result<SampledSignal> {
        if coeffs.grid != self.grid || coeffs.delta != self.delta {
            return invalid("coefficients were produced with a different grid or lattice step");
        }
        let norm = self.prototype.l2_norm_sq();
        let parts: Vec<Vec<Complex64>> = coeffs
            .indices
            .par_iter()
            .zip(&coeffs.channels)
            .zip(&coeffs.weights)
            .map(|((k, c), mu)| {
                let g = self.atom(k)?;
                let spec = time_to_spectrum(&self.grid, c.clone());
                Ok(g.iter().zip(spec).map(|(a, s)| s * (a * mu / norm)).collect())
            })
            .collect::<Result<_>>()?;
        let mut out = vec![ZERO; self.grid.len()];
        for p in parts {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        SampledSignal::new(self.grid, out)
    }

    /// Relative deviation of `Σ_k μ(M_k)‖V(·, ω_k)‖₂²` from `‖θ‖₂²‖f‖₂²`.
    pub fn parseval_defect(&self, f: &SampledSignal, window: Option<&[Index]>) -> Result<ParsevalReport> {
        let owned;
        let window = match window {
            Some(w) => w,
            None => {
                owned = self.window_for(f, 0.0)?;
                &owned
            }
        };
        let theta = self.prototype.l2_norm_sq();
        let signal = f.energy();
        if signal == 0.0 {
            return Ok(ParsevalReport {
                defect: 0.0,
                coefficient_energy: 0.0,
                signal_energy: 0.0,
                prototype_l2_sq: theta,
                window_size: window.len(),
                truncation_warning: false,
            });
        }
        let coeffs = self.analyze(f, window)?;
        let e = coeffs.energy();
        Ok(ParsevalReport {
            defect: (e - theta * signal).abs() / (theta * signal),
            coefficient_energy: e,
            signal_energy: signal,
            prototype_l2_sq: theta,
            window_size: window.len(),
            truncation_warning: coeffs.truncation_warning || f.boundary_energy_fraction() > 1e-10,
        })
    }

    /// `K((z, η), (y, ω)) = ⟨g_{y,ω}, g_{z,η}⟩` with `Φ(ω) = τ`, `Φ(η) = σ`.
    pub fn kernel(&self, y: &[f64], tau: &[f64], z: &[f64], sigma: &[f64]) -> Result<Complex64> {
        let (g1, _) = self.atom_at(tau)?;
        let (g2, _) = self.atom_at(sigma)?;
        let mut s = ZERO;
        for (j, (a, b)) in g1.iter().zip(&g2).enumerate() {
            if *a == 0.0 || *b == 0.0 {
                continue;
            }
            let xi = self.grid.freq_point(j);
            let ph: f64 = xi.iter().zip(y.iter().zip(z)).map(|(x, (yy, zz))| x * (zz - yy)).sum();
            s += Complex64::from_polar(a * b, std::f64::consts::TAU * ph);
        }
        Ok(s * self.grid.cell_volume())
    }
}

/// Discrete `L^{p,q}_κ` norm: inner `L^p` over the time grid, outer `ℓ^q` over
/// the window with weights `μ(M_k)` and values `κ(ω_k)`; infinite exponents are maxima.
pub fn coorbit_norm(coeffs: &WarpedCoefficients, p: f64, q: f64, kappa: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    let dy = coeffs.grid.time_cell_volume();
    let mut acc = 0.0;
    for ((c, mu), om) in coeffs.channels.iter().zip(&coeffs.weights).zip(&coeffs.omega) {
        let inner = lp_norm(c, p, dy);
        let v = kappa(om) * inner;
        if q.is_infinite() {
            acc = f64::max(acc, v);
        } else {
            acc += mu * v.powf(q);
        }
    }
    Ok(if q.is_infinite() { acc } else { acc.powf(1.0 / q) })
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && !p.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent must lie in [1, inf], got {p}")))
    }
}

/// `(Σ|v|^p·cell)^{1/p}`, or `max|v|` for `p = ∞`.
pub fn lp_norm(v: &[Complex64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        v.iter().map(|x| x.norm()).fold(0.0, f64::max)
    } else {
        (v.iter().map(|x| x.norm().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub index: Index,
    pub relative_difference: f64,
    pub lhs_peak: f64,
    pub nodes: usize,
}

/// Compares `F⁻¹(φ_k·f̂)` with the quadrature of `∫_{M_k} w(Φ(ω))^{−1/2}·V(·, ω) dω`
/// (written in warped coordinates as `∫ w(τ)^{1/2}·V(·, Φ⁻¹(τ)) dτ` over the cube),
/// using `panels × nodes` Gauss points per axis. The transform prototype must be
/// the partition's mollifier.
pub fn localization_identity(
    bapu: &Bapu,
    vt: &VoiceTransform,
    f: &SampledSignal,
    k: &[i64],
    panels: usize,
    nodes: usize,
) -> Result<LocalizationReport> {
    let d = bapu.dim();
    check_dim(d, k.len())?;
    if !bapu.map().same_map(vt.map()) || (bapu.delta() - vt.delta()).abs() > 0.0 {
        return invalid("partition and transform must share map and lattice step");
    }
    if vt.prototype().kind() != PrototypeKind::Bump
        || (vt.prototype().half_width() - bapu.mollifier().half_width()).abs() > 1e-15
    {
        return invalid("transform prototype must equal the partition mollifier");
    }
    vt.check_signal(f)?;
    let lhs_spec: Vec<Complex64> = vt
        .warped
        .iter()
        .zip(&f.values)
        .map(|(t, v)| match t {
            Some(t) => v * bapu.eval_warped(k, t),
            None => ZERO,
        })
        .collect();
    let lhs = spectrum_to_time(&vt.grid, lhs_spec);

    let delta = bapu.delta();
    let rule = GaussRule::new(nodes);
    let mut axis: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d);
    for &ki in k {
        let a = delta * (ki as f64 - 0.5);
        let h = delta / panels as f64;
        let mut pts = Vec::with_capacity(panels * nodes);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            pts.extend(rule.on(lo, lo + h));
        }
        axis.push(pts);
    }
    let mut tensor: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for pts in &axis {
        tensor = tensor
            .into_iter()
            .flat_map(|(t, w)| {
                pts.iter().map(move |&(x, wx)| {
                    let mut t = t.clone();
                    t.push(x);
                    (t, w * wx)
                })
            })
            .collect();
    }
    let count = tensor.len();
    let rhs = tensor
        .par_iter()
        .map(|(tau, wq)| {
            let s = wq * eval_weight(vt.map(), tau)?.abs().sqrt();
            let c = vt.channel_at(f, tau)?;
            Ok(c.into_iter().map(|v| v * s).collect::<Vec<_>>())
        })
        .try_reduce(
            || vec![ZERO; vt.grid.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    let peak = lhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(LocalizationReport {
        index: k.to_vec(),
        relative_difference: if peak > 0.0 { diff / peak } else { diff },
        lhs_peak: peak,
        nodes: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(delta: f64) -> (VoiceTransform, SampledSignal) {
        let grid = FrequencyGrid::new(1, 1024, 32.0).unwrap();
        let proto = Prototype::unit_l2(1, 1.0).unwrap();
        let vt = VoiceTransform::new(&WarpingMap::identity(1), &proto, delta, grid).unwrap();
        let f = SampledSignal::gaussian(grid, &[0.5], 1.5, &[1.0], Complex64::new(1.0, 0.5));
        (vt, f)
    }

    #[test]
    fn time_samples_of_gaussian() {
        let grid = FrequencyGrid::new(1, 512, 32.0).unwrap();
        let f = SampledSignal::gaussian(grid, &[0.0], 1.0, &[0.0], Complex64::new(1.0, 0.0));
        let t = f.to_time();
        let ys = grid.time_axis();
        for (m, v) in t.iter().enumerate().step_by(7) {
            let exact = (std::f64::consts::TAU).sqrt() * (-2.0 * std::f64::consts::PI.powi(2) * ys[m].powi(2)).exp();
            assert!((v.re - exact).abs() < 1e-10 && v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn identity_atom_is_translation() {
        let (vt, _) = setup(0.25);
        let g = vt.atom(&[8]).unwrap();
        let xs = vt.grid().freq_axis();
        for (x, v) in xs.iter().zip(&g) {
            assert!((v - vt.prototype().eval(&[x - 2.0])).abs() < 1e-15);
        }
    }

    #[test]
    fn parseval_and_round_trip() {
        let (vt, f) = setup(0.125);
        let rep = vt.parseval_defect(&f, None).unwrap();
        assert!(rep.defect < 1e-3, "{rep:?}");
        let w = vt.window_for(&f, 0.0).unwrap();
        let c = vt.analyze(&f, &w).unwrap();
        let back = vt.synthesize(&c).unwrap();
        assert!(back.relative_error(&f) < 1e-3);
        let zero = vt.synthesize(&c.zeroed()).unwrap();
        assert!(zero.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn zero_signal_has_zero_defect() {
        let (vt, f) = setup(0.5);
        assert_eq!(vt.parseval_defect(&SampledSignal::zero(f.grid), None).unwrap().defect, 0.0);
    }

    #[test]
    fn coorbit_two_two_matches_energy() {
        let (vt, f) = setup(0.25);
        let w = vt.window_for(&f, 0.0).unwrap();
        let c = vt.analyze(&f, &w).unwrap();
        let n = coorbit_norm(&c, 2.0, 2.0, &|_| 1.0).unwrap();
        assert!((n * n - c.energy()).abs() < 1e-10 * c.energy());
        let ninf = coorbit_norm(&c, 2.0, f64::INFINITY, &|_| 1.0).unwrap();
        let maxslice = c.channels.iter().map(|ch| lp_norm(ch, 2.0, vt.grid().time_cell_volume())).fold(0.0, f64::max);
        assert_eq!(ninf, maxslice);
    }

    #[test]
    fn kernel_is_hermitian() {
        let (vt, _) = setup(0.25);
        let a = vt.kernel(&[0.3], &[1.0], &[-0.2], &[1.4]).unwrap();
        let b = vt.kernel(&[-0.2], &[1.4], &[0.3], &[1.0]).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
        assert!(a.norm() > 0.0);
    }
}
