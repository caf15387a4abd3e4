//! Bounded admissible partitions of unity for `Φ`-induced coverings:
//! `φ_k(η) = ∫_{Φ(η) − δ(k + [−½, ½)^d)} ζ`, evaluated exactly for tensor
//! mollifiers through per-axis antiderivative differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bump::TensorBump;
use crate::covering::{sphere_directions, FrequencyCovering, Index};
use crate::error::{check_dim, invalid, Result};
use crate::fftnd::fftn;
use crate::warping_core::{random_in_ball, WarpingMap};

/// JSON form of a mollifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub support_radius: f64,
    pub kind: String,
}

/// Unit-mass tensor bump `ζ` with `supp ζ ⊂ δ·B_ϑ(0)`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    bump: TensorBump,
    delta: f64,
    vartheta: f64,
}

impl Mollifier {
    pub fn new(dim: usize, delta: f64, vartheta: f64) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return invalid(format!("delta must be positive, got {delta}"));
        }
        if !(vartheta > 0.0 && vartheta.is_finite()) {
            return invalid(format!("vartheta must be positive, got {vartheta}"));
        }
        Ok(Self {
            bump: TensorBump::unit_mass(dim, delta * vartheta),
            delta,
            vartheta,
        })
    }

    pub fn dim(&self) -> usize {
        self.bump.dim()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn vartheta(&self) -> f64 {
        self.vartheta
    }

    /// Radius `δϑ` of the ball containing the support.
    pub fn support_radius(&self) -> f64 {
        self.delta * self.vartheta
    }

    pub fn half_width(&self) -> f64 {
        self.bump.half_width()
    }

    pub fn bump(&self) -> &TensorBump {
        &self.bump
    }

    pub fn eval(&self, tau: &[f64]) -> f64 {
        self.bump.eval(tau)
    }

    pub fn axis_cdf(&self, x: f64) -> f64 {
        self.bump.axis_cdf(x)
    }

    pub fn mass(&self) -> f64 {
        self.bump.l1_norm()
    }

    pub fn spec(&self) -> MollifierSpec {
        MollifierSpec {
            support_radius: self.support_radius(),
            kind: "bump".into(),
        }
    }
}

/// Partition of unity `(φ_k)_{k ∈ ℤ^d}` subordinate to `Q_Φ^{(δ,r)}`.
#[derive(Debug, Clone)]
pub struct Bapu {
    covering: FrequencyCovering,
    map: WarpingMap,
    delta: f64,
    r: f64,
    mollifier: Mollifier,
}

impl Bapu {
    /// Requires an induced covering and `0 < ϑ < r − √d/2`.
    pub fn new(covering: &FrequencyCovering, vartheta: f64) -> Result<Self> {
        let FrequencyCovering::Induced { map, delta, r } = covering else {
            return invalid("partitions of unity are built for induced coverings only");
        };
        let d = map.dim();
        let limit = r - (d as f64).sqrt() / 2.0;
        if !(vartheta > 0.0 && vartheta < limit) {
            return invalid(format!(
                "vartheta must lie in (0, r - sqrt(d)/2) = (0, {limit}), got {vartheta}"
            ));
        }
        Ok(Self {
            covering: covering.clone(),
            map: map.clone(),
            delta: *delta,
            r: *r,
            mollifier: Mollifier::new(d, *delta, vartheta)?,
        })
    }

    pub fn covering(&self) -> &FrequencyCovering {
        &self.covering
    }

    pub fn map(&self) -> &WarpingMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    /// `φ_k(η)`.
    pub fn eval(&self, k: &[i64], eta: &[f64]) -> f64 {
        if !self.map.domain().contains(eta) {
            return 0.0;
        }
        self.eval_warped(k, &self.map.forward(eta))
    }

    /// `φ_k` as a function of warped coordinates `t = Φ(η)`.
    pub fn eval_warped(&self, k: &[i64], t: &[f64]) -> f64 {
        let mut v = 1.0;
        for (&ki, &ti) in k.iter().zip(t) {
            let f = self.axis_factor(ki, ti);
            if f == 0.0 {
                return 0.0;
            }
            v *= f;
        }
        v.clamp(0.0, 1.0)
    }

    fn edge(&self, t: f64, j: i64) -> f64 {
        t - self.delta * (j as f64 + 0.5)
    }

    fn axis_factor(&self, k: i64, t: f64) -> f64 {
        self.mollifier.axis_cdf(self.edge(t, k - 1)) - self.mollifier.axis_cdf(self.edge(t, k))
    }

    /// Per-axis range of indices whose factor can be nonzero at `t`.
    fn axis_members(&self, t: f64) -> (i64, i64) {
        let a = self.mollifier.half_width();
        let lo = ((t - a) / self.delta - 0.5).ceil() as i64;
        let hi = ((t + a) / self.delta + 0.5).floor() as i64;
        (lo, hi)
    }

    /// Indices `k` with `φ_k(η) ≠ 0` possible: the cube `δ(k + [−½,½)^d)`
    /// lies within `∞`-distance `δϑ/√d` of `Φ(η)`.
    pub fn members(&self, eta: &[f64]) -> Vec<Index> {
        if !self.map.domain().contains(eta) {
            return Vec::new();
        }
        self.members_warped(&self.map.forward(eta))
    }

    pub fn members_warped(&self, t: &[f64]) -> Vec<Index> {
        let ranges: Vec<(i64, i64)> = t.iter().map(|&ti| self.axis_members(ti)).collect();
        let mut out: Vec<Index> = vec![Vec::with_capacity(t.len())];
        for &(lo, hi) in &ranges {
            let mut next = Vec::with_capacity(out.len() * (hi - lo + 1).max(0) as usize);
            for prefix in &out {
                for j in lo..=hi {
                    let mut p = prefix.clone();
                    p.push(j);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    /// `Σ_k φ_k(η)` over the exact member set.
    pub fn sum_at(&self, eta: &[f64]) -> f64 {
        let t = self.map.forward(eta);
        self.members_warped(&t).iter().map(|k| self.eval_warped(k, &t)).sum()
    }

    /// Bounding box of `supp φ_k` in frequency coordinates.
    pub fn support_box(&self, k: &[i64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let h = self.delta / 2.0 + self.mollifier.half_width();
        let center: Vec<f64> = k.iter().map(|&v| self.delta * v as f64).collect();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut push = |t: &[f64]| {
            let x = self.map.inverse(t);
            for i in 0..d {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        };
        if d == 1 {
            push(&[center[0] - h]);
            push(&[center[0] + h]);
        } else {
            let m = 24usize;
            let nodes: Vec<f64> = (0..=m).map(|i| -h + 2.0 * h * i as f64 / m as f64).collect();
            for face_axis in 0..d {
                for side in [-h, h] {
                    let mut idx = vec![0usize; d - 1];
                    loop {
                        let mut t = Vec::with_capacity(d);
                        let mut it = idx.iter();
                        for (i, c) in center.iter().enumerate() {
                            let off = if i == face_axis { side } else { nodes[*it.next().unwrap()] };
                            t.push(c + off);
                        }
                        push(&t);
                        let mut pos = 0;
                        while pos < d - 1 {
                            idx[pos] += 1;
                            if idx[pos] <= m {
                                break;
                            }
                            idx[pos] = 0;
                            pos += 1;
                        }
                        if pos == d - 1 {
                            break;
                        }
                    }
                }
            }
        }
        (lo, hi)
    }
}

/// Uniform random probes in the ball of the given radius.
pub fn probe_points(dim: usize, radius: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_in_ball(&mut rng, dim, radius)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefectReport {
    pub max_defect: f64,
    pub witness: Option<Vec<f64>>,
    pub probes: usize,
    pub min_member: f64,
    pub max_member: f64,
    pub max_members: usize,
}

/// `max_η |Σ_k φ_k(η) − 1|` together with the observed range of member values.
pub fn partition_defect(bapu: &Bapu, probes: &[Vec<f64>]) -> Result<DefectReport> {
    let mut report = DefectReport {
        max_defect: 0.0,
        witness: None,
        probes: probes.len(),
        min_member: f64::INFINITY,
        max_member: f64::NEG_INFINITY,
        max_members: 0,
    };
    for eta in probes {
        check_dim(bapu.dim(), eta.len())?;
        let t = bapu.map.forward(eta);
        let members = bapu.members_warped(&t);
        report.max_members = report.max_members.max(members.len());
        let mut s = 0.0;
        for k in &members {
            let v = bapu.eval_warped(k, &t);
            report.min_member = report.min_member.min(v);
            report.max_member = report.max_member.max(v);
            s += v;
        }
        let defect = (s - 1.0).abs();
        if defect > report.max_defect || report.witness.is_none() {
            report.max_defect = report.max_defect.max(defect);
            if defect >= report.max_defect {
                report.witness = Some(eta.clone());
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportReport {
    pub index: Index,
    pub samples: usize,
    pub pass: bool,
    pub witness: Option<Vec<f64>>,
    pub witness_value: f64,
}

/// Probes `φ_k = 0` outside `Q_k`: on `∂Q_k` pushed outward by `1e−3` in warped
/// coordinates, and at random points of the warped annulus `δr < |t − δk| < 3δr`.
pub fn support_check(bapu: &Bapu, k: &[i64], samples: usize) -> Result<SupportReport> {
    let d = bapu.dim();
    check_dim(d, k.len())?;
    let center: Vec<f64> = k.iter().map(|&v| bapu.delta * v as f64).collect();
    let outer = bapu.delta * bapu.r;
    let mut warped: Vec<Vec<f64>> = sphere_directions(d, samples.max(2))
        .into_iter()
        .map(|u| center.iter().zip(&u).map(|(c, ui)| c + (outer + 1e-3) * ui).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(k.iter().fold(17u64, |h, &v| h.wrapping_mul(31).wrapping_add(v as u64)));
    while warped.len() < 2 * samples.max(2) {
        let p = random_in_ball(&mut rng, d, 3.0 * outer);
        if crate::warping_core::norm(&p) > outer + 1e-3 {
            warped.push(center.iter().zip(&p).map(|(c, pi)| c + pi).collect());
        }
    }
    let mut report = SupportReport {
        index: k.to_vec(),
        samples: warped.len(),
        pass: true,
        witness: None,
        witness_value: 0.0,
    };
    for t in &warped {
        let eta = bapu.map.inverse(t);
        let v = bapu.eval(k, &eta).max(bapu.eval_warped(k, t));
        if v != 0.0 {
            report.pass = false;
            if v > report.witness_value {
                report.witness_value = v;
                report.witness = Some(eta);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierL1Report {
    pub index: Index,
    pub value: f64,
    pub points_per_axis: usize,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub tail_fraction: f64,
    pub aliasing_warning: bool,
}

/// Default grid size per axis for [`fourier_l1_estimate`].
pub fn default_l1_points(dim: usize) -> usize {
    match dim {
        1 => 1 << 14,
        2 => 1 << 9,
        _ => 1 << 5,
    }
}

/// Discrete `‖F⁻¹φ_k‖_{L¹}` from samples on a grid spanning four times the
/// support box of `φ_k`. The warning flags inverse transforms that have not
/// decayed in the outer tenth of the time grid.
pub fn fourier_l1_estimate(bapu: &Bapu, k: &[i64], points_per_axis: usize) -> Result<FourierL1Report> {
    let d = bapu.dim();
    check_dim(d, k.len())?;
    let n = points_per_axis;
    if n < 8 || !n.is_multiple_of(2) {
        return invalid("points per axis must be even and at least 8");
    }
    let total = n
        .checked_pow(d as u32)
        .filter(|&t| t <= 1 << 26)
        .ok_or_else(|| crate::error::Error::InvalidParameter("grid too large".into()))?;
    let (lo, hi) = bapu.support_box(k);
    let starts: Vec<f64> = (0..d).map(|i| 0.5 * (lo[i] + hi[i]) - 2.0 * (hi[i] - lo[i])).collect();
    let steps: Vec<f64> = (0..d).map(|i| 4.0 * (hi[i] - lo[i]) / n as f64).collect();
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let mut xi = vec![0.0; d];
    for (flat, v) in data.iter_mut().enumerate() {
        let mut rem = flat;
        for i in (0..d).rev() {
            xi[i] = starts[i] + steps[i] * (rem % n) as f64;
            rem /= n;
        }
        *v = Complex64::new(bapu.eval(k, &xi), 0.0);
    }
    fftn(&mut data, &vec![n; d], true);
    let scale = (n as f64).powi(d as i32);
    let mut sum = 0.0;
    let mut tail = 0.0;
    for (flat, v) in data.iter().enumerate() {
        let a = v.norm();
        sum += a;
        let mut rem = flat;
        let mut far = false;
        for _ in 0..d {
            let m = rem % n;
            rem /= n;
            let signed = if m < n / 2 { m } else { n - m };
            far |= signed * 10 > 4 * n;
        }
        if far {
            tail += a;
        }
    }
    let tail_fraction = if sum > 0.0 { tail / sum } else { 0.0 };
    Ok(FourierL1Report {
        index: k.to_vec(),
        value: sum / scale,
        points_per_axis: n,
        box_lo: lo,
        box_hi: hi,
        tail_fraction,
        aliasing_warning: tail_fraction > 1e-3,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierL1Sweep {
    pub reports: Vec<FourierL1Report>,
    pub min: f64,
    pub max: f64,
}

pub fn fourier_l1_sweep(bapu: &Bapu, indices: &[Index], points_per_axis: usize) -> Result<FourierL1Sweep> {
    use rayon::prelude::*;
    let reports = indices
        .par_iter()
        .map(|k| fourier_l1_estimate(bapu, k, points_per_axis))
        .collect::<Result<Vec<_>>>()?;
    let min = reports.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let max = reports.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    Ok(FourierL1Sweep { reports, min, max })
}
