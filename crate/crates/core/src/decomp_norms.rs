//! Decomposition-space norms `‖(u_k‖F⁻¹(φ_k f̂)‖_{L^p})_k‖_{ℓ^q}` for sampled
//! signals, the identification weight `u^{(q)}` and the coorbit/decomposition
//! norm-equivalence probe.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bapu::Bapu;
use crate::covering::{induced_covering, FrequencyCovering, Index};
use crate::error::{invalid, Result};
use crate::fftnd::fftn;
use crate::transform::{check_exponent, coorbit_norm, lp_norm, FrequencyGrid, Prototype, SampledSignal, VoiceTransform};
use crate::warping_core::{ScalarFn, WarpingMap};

pub type IndexFn = Arc<dyn Fn(&[i64]) -> f64 + Send + Sync>;

/// Positive weight `k ↦ u_k` tagged with the formula that produced it.
#[derive(Clone)]
pub struct WeightSequence {
    label: String,
    eval: IndexFn,
}

impl std::fmt::Debug for WeightSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightSequence").field("label", &self.label).finish()
    }
}

impl WeightSequence {
    pub fn new(label: impl Into<String>, eval: IndexFn) -> Self {
        Self {
            label: label.into(),
            eval,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const:{c}"), Arc::new(move |_| c))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, k: &[i64]) -> f64 {
        (self.eval)(k)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let e = self.eval.clone();
        Self::new(format!("{}*{c}", self.label), Arc::new(move |k| c * e(k)))
    }
}

/// `κ ≡ 1`.
pub fn kappa_one() -> ScalarFn {
    Arc::new(|_| 1.0)
}

/// `κ(ξ) = (1 + |ξ|)^s`.
pub fn kappa_power(s: f64) -> ScalarFn {
    Arc::new(move |xi| (1.0 + crate::warping_core::norm(xi)).powf(s))
}

/// `u_k = κ(Φ⁻¹(δk))·w(δk)^{1/q − 1/2}`.
pub fn weight_u(map: &WarpingMap, kappa: ScalarFn, q: f64, delta: f64) -> Result<WeightSequence> {
    check_exponent(q)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid(format!("delta must be positive, got {delta}"));
    }
    let e = 1.0 / q - 0.5;
    let m = map.clone();
    Ok(WeightSequence::new(
        format!("u[{}; q={q}, δ={delta}]", map.id()),
        Arc::new(move |k| {
            let tau: Vec<f64> = k.iter().map(|&v| delta * v as f64).collect();
            let w = m.weight().eval(&tau).abs();
            kappa(&m.inverse(&tau)) * if e == 0.0 { 1.0 } else { w.powf(e) }
        }),
    ))
}

/// Covering, partition, exponents and weight of a decomposition norm.
#[derive(Debug, Clone)]
pub struct DecompositionNormSpec {
    pub bapu: Bapu,
    pub p: f64,
    pub q: f64,
    pub weight: WeightSequence,
}

impl DecompositionNormSpec {
    pub fn new(bapu: Bapu, p: f64, q: f64, weight: WeightSequence) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        Ok(Self { bapu, p, q, weight })
    }
}

/// The pieces `F⁻¹(φ_k·f̂)` on the time grid for all `k` meeting the spectrum of `f`.
#[derive(Debug, Clone)]
pub struct Pieces {
    pub grid: FrequencyGrid,
    pub indices: Vec<Index>,
    pub pieces: Vec<Vec<Complex64>>,
}

/// Splits `f` along the partition; the index set consists of every `k` with
/// `φ_k·f̂ ≠ 0` at some grid point.
pub fn pieces(bapu: &Bapu, f: &SampledSignal) -> Result<Pieces> {
    crate::error::check_dim(bapu.dim(), f.grid.dim)?;
    let grid = f.grid;
    let entries: Vec<Vec<(Index, usize, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|j| {
            if f.values[j].norm() == 0.0 {
                return Vec::new();
            }
            let xi = grid.freq_point(j);
            if !bapu.map().domain().contains(&xi) {
                return Vec::new();
            }
            let t = bapu.map().forward(&xi);
            bapu.members_warped(&t)
                .into_iter()
                .filter_map(|k| {
                    let v = bapu.eval_warped(&k, &t);
                    (v != 0.0).then_some((k, j, v))
                })
                .collect()
        })
        .collect();
    let mut by_k: BTreeMap<Index, Vec<(usize, f64)>> = BTreeMap::new();
    for (k, j, v) in entries.into_iter().flatten() {
        by_k.entry(k).or_default().push((j, v));
    }
    let c = grid.cell_volume();
    let (indices, pieces): (Vec<Index>, Vec<Vec<Complex64>>) = by_k
        .into_par_iter()
        .map(|(k, list)| {
            let mut h = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (j, v) in list {
                h[j] = f.values[j] * v;
            }
            fftn(&mut h, &grid.dims(), true);
            for (m, x) in h.iter_mut().enumerate() {
                let s: usize = grid.unravel(m).iter().sum();
                *x *= if s.is_multiple_of(2) { c } else { -c };
            }
            (k, h)
        })
        .unzip();
    Ok(Pieces { grid, indices, pieces })
}

/// Weighted `ℓ^q` aggregate of per-piece `L^p` norms.
pub fn aggregate(pieces: &Pieces, p: f64, q: f64, weight: &WeightSequence) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    let dy = pieces.grid.time_cell_volume();
    let mut acc: f64 = 0.0;
    for (k, piece) in pieces.indices.iter().zip(&pieces.pieces) {
        let v = weight.eval(k) * lp_norm(piece, p, dy);
        if q.is_infinite() {
            acc = acc.max(v);
        } else {
            acc += v.powf(q);
        }
    }
    Ok(if q.is_infinite() { acc } else { acc.powf(1.0 / q) })
}

/// `‖f‖_{D(Q, L^p, ℓ^q_u)}` for a sampled signal.
pub fn decomposition_norm(f: &SampledSignal, spec: &DecompositionNormSpec) -> Result<f64> {
    aggregate(&pieces(&spec.bapu, f)?, spec.p, spec.q, &spec.weight)
}

/// `max_{k ∈ window, ℓ ∈ k*} u_ℓ / u_k`.
pub fn moderateness_constant(weight: &WeightSequence, covering: &FrequencyCovering, indices: &[Index]) -> f64 {
    indices
        .par_iter()
        .map(|k| {
            let uk = weight.eval(k);
            covering
                .first_neighbors(k)
                .iter()
                .map(|l| weight.eval(l) / uk)
                .fold(1.0, f64::max)
        })
        .reduce(|| 1.0, f64::max)
}

/// Sums of one to three modulated Gaussians with centers in `[−4, 4]^d`,
/// widths in `[0.3, 1]` and time shifts in `[−3, 3]^d`.
pub fn band_limited_family(grid: FrequencyGrid, count: usize, seed: u64) -> Vec<SampledSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let terms = rng.gen_range(1..=3);
            let params: Vec<(Vec<f64>, f64, Vec<f64>, Complex64)> = (0..terms)
                .map(|_| {
                    let c = (0..grid.dim).map(|_| rng.gen_range(-4.0..4.0)).collect();
                    let s = rng.gen_range(0.3..1.0);
                    let x = (0..grid.dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    (c, s, x, a)
                })
                .collect();
            SampledSignal::from_fn(grid, |xi| {
                params
                    .iter()
                    .map(|(c, s, x, a)| {
                        let r2: f64 = xi.iter().zip(c).map(|(u, v)| (u - v).powi(2)).sum();
                        let ph: f64 = xi.iter().zip(x).map(|(u, v)| u * v).sum();
                        a * (-r2 / (2.0 * s * s)).exp() * Complex64::from_polar(1.0, -std::f64::consts::TAU * ph)
                    })
                    .sum()
            })
        })
        .collect()
}

/// Discretization of the coorbit/decomposition comparison.
#[derive(Debug, Clone)]
pub struct ProbeSetup {
    pub delta: f64,
    pub r: f64,
    pub vartheta: f64,
    /// The coorbit `ω`-integral uses the lattice step `δ / refinement`.
    pub refinement: usize,
    pub grid: FrequencyGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormRecord {
    pub signal_id: usize,
    pub coorbit: f64,
    pub decomposition: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioBand {
    pub p: f64,
    pub q: f64,
    pub records: Vec<NormRecord>,
    pub min: f64,
    pub max: f64,
    pub width: f64,
}

/// Ratios `coorbit / decomposition` over a signal family for each `(p, q)`,
/// with `θ = ζ` and `u_k = κ(Φ⁻¹(δk))·w(δk)^{1/q − 1/2}`. Zero signals are skipped.
pub fn norm_equivalence_probe(
    signals: &[SampledSignal],
    map: &WarpingMap,
    kappa: ScalarFn,
    exponents: &[(f64, f64)],
    setup: &ProbeSetup,
) -> Result<Vec<RatioBand>> {
    if setup.refinement == 0 {
        return invalid("refinement must be positive");
    }
    let cov = induced_covering(map, setup.delta, setup.r)?;
    let bapu = Bapu::new(&cov, setup.vartheta)?;
    let vt = VoiceTransform::new(map, &Prototype::from_bapu(&bapu), setup.delta / setup.refinement as f64, setup.grid)?;
    let weights = exponents
        .iter()
        .map(|&(_, q)| weight_u(map, kappa.clone(), q, setup.delta))
        .collect::<Result<Vec<_>>>()?;
    let mut bands: Vec<RatioBand> = exponents
        .iter()
        .map(|&(p, q)| RatioBand {
            p,
            q,
            records: Vec::new(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            width: f64::NAN,
        })
        .collect();
    for (id, f) in signals.iter().enumerate() {
        if f.energy() == 0.0 {
            continue;
        }
        let window = vt.window_for(f, 0.0)?;
        let coeffs = vt.analyze(f, &window)?;
        let parts = pieces(&bapu, f)?;
        for ((band, &(p, q)), u) in bands.iter_mut().zip(exponents).zip(&weights) {
            let k = kappa.clone();
            let co = coorbit_norm(&coeffs, p, q, &move |w: &[f64]| k(w))?;
            let de = aggregate(&parts, p, q, u)?;
            let ratio = co / de;
            band.min = band.min.min(ratio);
            band.max = band.max.max(ratio);
            band.records.push(NormRecord {
                signal_id: id,
                coorbit: co,
                decomposition: de,
                ratio,
            });
        }
    }
    for b in &mut bands {
        b.width = b.max / b.min;
    }
    Ok(bands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::map_from_id;

    #[test]
    fn ln_weight_values() {
        let ln = map_from_id("ln", 1).unwrap();
        let u2 = weight_u(&ln, kappa_power(1.0), 2.0, 1.0).unwrap();
        assert!((u2.eval(&[5]) - (1.0 + ln.inverse(&[5.0])[0])).abs() < 1e-9);
        let u1 = weight_u(&ln, kappa_one(), 1.0, 1.0).unwrap();
        assert!((u1.eval(&[6]) - (6.0f64 / 2.0).exp()).abs() < 1e-9 * 20.0);
        let id = weight_u(&WarpingMap::identity(1), kappa_one(), 1.0, 0.5).unwrap();
        assert_eq!(id.eval(&[7]), 1.0);
    }

    #[test]
    fn single_element_and_homogeneity() {
        let grid = FrequencyGrid::new(1, 1024, 32.0).unwrap();
        let cov = induced_covering(&WarpingMap::identity(1), 1.0, 1.0).unwrap();
        let bapu = Bapu::new(&cov, 0.4).unwrap();
        let spec = DecompositionNormSpec::new(bapu, 2.0, 1.0, WeightSequence::constant(1.0)).unwrap();
        let f = SampledSignal::from_fn(grid, |xi| {
            let u = xi[0] / 0.09;
            Complex64::new(crate::bump::bump_profile(u), 0.0)
        });
        let p = pieces(&spec.bapu, &f).unwrap();
        assert_eq!(p.indices, vec![vec![0]]);
        let n = decomposition_norm(&f, &spec).unwrap();
        assert!((n - f.energy().sqrt()).abs() < 1e-10 * n);
        let c = Complex64::new(-2.0, 1.5);
        let nc = decomposition_norm(&f.scaled(c), &spec).unwrap();
        assert!((nc - c.norm() * n).abs() < 1e-12 * nc);
        assert_eq!(decomposition_norm(&SampledSignal::zero(grid), &spec).unwrap(), 0.0);
    }

    #[test]
    fn moderateness_scale_invariant() {
        let ln = map_from_id("ln", 1).unwrap();
        let cov = induced_covering(&ln, 1.0, 1.0).unwrap();
        let u = weight_u(&ln, kappa_one(), 1.0, 1.0).unwrap();
        let idx: Vec<Index> = (-10..=10).map(|k| vec![k]).collect();
        let c1 = moderateness_constant(&u, &cov, &idx);
        let c2 = moderateness_constant(&u.scaled(7.5), &cov, &idx);
        assert!((c1 - c2).abs() < 1e-12 * c1);
        assert!(c1.is_finite() && c1 >= 1.0);
        assert_eq!(moderateness_constant(&WeightSequence::constant(1.0), &cov, &idx), 1.0);
    }
}
