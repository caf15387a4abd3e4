//! Frequency coverings: `Φ`-induced `(δ, r)`-fine coverings, their structured
//! (ellipsoidal) variant, Besov annuli and product coverings, with neighbor
//! sets, cross-intersection counts, tightness radii, measures and α-checks.

use std::collections::{BTreeSet, HashSet};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::quadrature::GaussRule;
use crate::radial_warping::RadialComponent;
use crate::warping_core::{norm, WarpingMap, Witness};

pub type Index = Vec<i64>;

/// Number of quasi-Monte-Carlo points per element in approximate intersection tests.
pub const MC_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringKind {
    Induced,
    Structured,
    Besov,
    BesovProduct,
    Uniform,
    Custom,
}

#[derive(Clone, Debug)]
pub enum FrequencyCovering {
    /// `Q_k = Φ⁻¹(δ·B_r(k))`, `k ∈ ℤ^d`.
    Induced { map: WarpingMap, delta: f64, r: f64 },
    /// `S_k = Φ⁻¹(δk) + A(δk)⟨B_r(0)⟩`, `k ∈ ℤ^d`.
    Structured { map: WarpingMap, delta: f64, r: f64 },
    /// Dyadic annuli `B_0 = B_2(0)`, `B_j = {2^{j-1} < |ξ| < 2^{j+1}}`.
    Besov { dim: usize },
    /// Cartesian product of coverings of the factor spaces.
    Product { parts: Vec<FrequencyCovering> },
}

/// Finite index window with the rule that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexWindow {
    pub rule: String,
    pub indices: Vec<Index>,
}

impl IndexWindow {
    pub fn from_indices(rule: impl Into<String>, indices: Vec<Index>) -> Self {
        Self {
            rule: rule.into(),
            indices,
        }
    }

    /// `{k ∈ ℤ^d : |k| ≤ radius}`.
    pub fn ball(dim: usize, radius: f64) -> Self {
        let m = radius.floor() as i64;
        let indices = lattice_cube(dim, m)
            .into_iter()
            .filter(|k| index_norm(k) <= radius + 1e-12)
            .collect();
        Self::from_indices(format!("ball(d={dim}, radius={radius})"), indices)
    }

    /// `{k ∈ ℤ^d : |k|_∞ ≤ m}`.
    pub fn cube(dim: usize, m: i64) -> Self {
        Self::from_indices(format!("cube(d={dim}, m={m})"), lattice_cube(dim, m))
    }

    /// `{lo, …, hi} ⊂ ℤ`.
    pub fn range(lo: i64, hi: i64) -> Self {
        Self::from_indices(format!("range({lo}..={hi})"), (lo..=hi).map(|k| vec![k]).collect())
    }

    /// Besov indices `j = 0, …, jmax`.
    pub fn besov(jmax: i64) -> Self {
        Self::from_indices(format!("besov(j<={jmax})"), (0..=jmax).map(|j| vec![j]).collect())
    }

    /// Product-Besov indices `ℓ ∈ {0, …, jmax}^d`.
    pub fn besov_product(dim: usize, jmax: i64) -> Self {
        let idx = lattice_cube(dim, jmax)
            .into_iter()
            .map(|k| k.into_iter().map(|v| v + jmax).collect::<Index>())
            .filter(|k| k.iter().all(|&v| v <= jmax))
            .collect();
        Self::from_indices(format!("besov_product(d={dim}, j<={jmax})"), idx)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn index_norm(k: &[i64]) -> f64 {
    k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
}

fn lattice_cube(dim: usize, m: i64) -> Vec<Index> {
    let side = (2 * m + 1).max(0) as usize;
    let total = side.pow(dim as u32);
    (0..total)
        .map(|mut i| {
            (0..dim)
                .map(|_| {
                    let v = (i % side) as i64 - m;
                    i /= side;
                    v
                })
                .collect()
        })
        .collect()
}

/// Lattice points `k` with `|k - center| < radius`.
fn lattice_ball(center: &[f64], radius: f64) -> Vec<Index> {
    let lo: Vec<i64> = center.iter().map(|c| (c - radius).floor() as i64).collect();
    let hi: Vec<i64> = center.iter().map(|c| (c + radius).ceil() as i64).collect();
    let mut out = Vec::new();
    let mut k = lo.clone();
    loop {
        let d2: f64 = k
            .iter()
            .zip(center)
            .map(|(&a, c)| (a as f64 - c).powi(2))
            .sum();
        if d2 < radius * radius {
            out.push(k.clone());
        }
        let mut axis = 0;
        loop {
            if axis == k.len() {
                return out;
            }
            k[axis] += 1;
            if k[axis] <= hi[axis] {
                break;
            }
            k[axis] = lo[axis];
            axis += 1;
        }
    }
}

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// `n` Halton points in the open unit ball of `ℝ^d` (rejection from the cube),
/// using prime bases starting at `PRIMES[offset]`.
pub fn halton_ball(dim: usize, n: usize, offset: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut i = 1u64;
    while out.len() < n {
        let p: Vec<f64> = (0..dim)
            .map(|a| 2.0 * radical_inverse(i, PRIMES[(offset + a) % PRIMES.len()]) - 1.0)
            .collect();
        i += 1;
        if norm(&p) < 1.0 {
            out.push(p);
        }
    }
    out
}

/// Unit vectors: `n` angles for d = 2, ± axes for d = 1, Halton-normalized otherwise.
pub fn sphere_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => halton_ball(dim, n, 0)
            .into_iter()
            .filter(|p| norm(p) > 1e-3)
            .map(|p| {
                let l = norm(&p);
                p.into_iter().map(|x| x / l).collect()
            })
            .collect(),
    }
}

/// Volume of the unit ball in `ℝ^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / dim as f64 * unit_ball_volume(dim - 2),
    }
}

/// Whether the warped-coordinate point `τ` lies in some `δ·B_r(k)`.
pub fn lattice_cover_probe(dim: usize, delta: f64, r: f64, tau: &[f64]) -> Result<bool> {
    check_dim(dim, tau.len())?;
    let t: Vec<f64> = tau.iter().map(|x| x / delta).collect();
    let nearest: f64 = t.iter().map(|x| (x - x.round()).powi(2)).sum::<f64>().sqrt();
    Ok(nearest < r)
}

/// `Q^{(δ,r)}_Φ`; requires `r > √d/2` (otherwise the lattice balls miss the
/// cube corners) and `δ > 0`.
pub fn induced_covering(map: &WarpingMap, delta: f64, r: f64) -> Result<FrequencyCovering> {
    let d = map.dim() as f64;
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid(format!("δ must be positive, got {delta}"));
    }
    if !(r > d.sqrt() / 2.0) {
        return invalid(format!(
            "r = {r} does not exceed √d/2 = {} (d = {}); the balls B_r(k) then leave the corner δ·(1/2,…,1/2) uncovered",
            d.sqrt() / 2.0,
            map.dim()
        ));
    }
    Ok(FrequencyCovering::Induced {
        map: map.clone(),
        delta,
        r,
    })
}

/// `θ₀ = (2d·v₀(1))⁻¹`.
pub fn theta0(map: &WarpingMap) -> f64 {
    1.0 / (2.0 * map.dim() as f64 * map.control().eval_radius(1.0))
}

/// Structured covering `S^{(δ,r)}_Φ`; requires `r ∈ (0, θ₀/4)` and
/// `δ ∈ (0, min{1, 4r} / (2√d·v₀(1/2)))`.
pub fn structured_covering(map: &WarpingMap, delta: f64, r: f64) -> Result<FrequencyCovering> {
    let d = map.dim() as f64;
    let t0 = theta0(map);
    if !(r > 0.0 && r < t0 / 4.0) {
        return invalid(format!("structured covering needs r ∈ (0, θ₀/4) = (0, {}), got {r}", t0 / 4.0));
    }
    let dmax = (1f64).min(4.0 * r) / (2.0 * d.sqrt() * map.control().eval_radius(0.5));
    if !(delta > 0.0 && delta < dmax) {
        return invalid(format!("structured covering needs δ ∈ (0, {dmax}), got {delta}"));
    }
    Ok(FrequencyCovering::Structured {
        map: map.clone(),
        delta,
        r,
    })
}

pub fn besov_covering(dim: usize) -> Result<FrequencyCovering> {
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    Ok(FrequencyCovering::Besov { dim })
}

pub fn product_covering(parts: &[FrequencyCovering]) -> Result<FrequencyCovering> {
    if parts.is_empty() {
        return invalid("product covering needs at least one factor");
    }
    Ok(FrequencyCovering::Product {
        parts: parts.to_vec(),
    })
}

/// Open-ellipsoid intersection test for `{c_i + L_i u : |u| < 1}` via the
/// convex separation function `K(s) = 1 - Δᵀ(M₁/(1-s) + M₂/s)⁻¹Δ`, `M_i = L_i L_iᵀ`:
/// the sets meet iff `min_s K(s) > 0`.
fn ellipsoids_intersect(c1: &[f64], m1: &DMatrix<f64>, c2: &[f64], m2: &DMatrix<f64>) -> bool {
    let delta = DVector::from_iterator(c1.len(), c1.iter().zip(c2).map(|(a, b)| b - a));
    if delta.norm() == 0.0 {
        return true;
    }
    let k = |s: f64| {
        let m = m1 / (1.0 - s) + m2 / s;
        match m.clone().cholesky() {
            Some(ch) => 1.0 - delta.dot(&ch.solve(&delta)),
            None => f64::NEG_INFINITY,
        }
    };
    let (mut a, mut b) = (1e-12, 1.0 - 1e-12);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (k(x1), k(x2));
    for _ in 0..100 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = k(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = k(x2);
        }
    }
    f1.min(f2) > 0.0
}

fn besov_bounds(j: i64) -> (f64, f64) {
    if j == 0 {
        (0.0, 2.0)
    } else {
        (2f64.powi(j as i32 - 1), 2f64.powi(j as i32 + 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborReport {
    pub index: Index,
    pub n: usize,
    pub neighbors: Vec<Index>,
    pub count: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    pub a: String,
    pub b: String,
    pub exact: bool,
    /// For `j` in the B-window: `|{k : A_k ∩ B_j ≠ ∅}|`.
    pub counts_for_b: Vec<(Index, usize)>,
    /// For `k` in the A-window: `|{j : A_k ∩ B_j ≠ ∅}|`.
    pub counts_for_a: Vec<(Index, usize)>,
    pub sup_for_b: usize,
    pub sup_for_a: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub theta0: f64,
    pub theta: f64,
    pub radius: f64,
    pub verified: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub alpha: f64,
    pub measure_band: [f64; 2],
    pub measure_band_ratio: f64,
    pub roundness_band: [f64; 2],
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub index: Index,
    pub counts: Vec<usize>,
    /// `(1+2n)^d`.
    pub lower_reference: Vec<usize>,
    /// `1+2n`.
    pub linear_reference: Vec<usize>,
}

impl FrequencyCovering {
    pub fn kind(&self) -> CoveringKind {
        match self {
            FrequencyCovering::Induced { map, .. } if map.radial_component().is_some_and(|r| r.is_identity()) => {
                CoveringKind::Uniform
            }
            FrequencyCovering::Induced { .. } => CoveringKind::Induced,
            FrequencyCovering::Structured { .. } => CoveringKind::Structured,
            FrequencyCovering::Besov { .. } => CoveringKind::Besov,
            FrequencyCovering::Product { parts }
                if parts.iter().all(|p| matches!(p, FrequencyCovering::Besov { dim: 1 })) =>
            {
                CoveringKind::BesovProduct
            }
            FrequencyCovering::Product { .. } => CoveringKind::Custom,
        }
    }

    pub fn id(&self) -> String {
        match self {
            FrequencyCovering::Induced { map, delta, r } => format!("induced[{}; d={}, δ={delta}, r={r}]", map.id(), map.dim()),
            FrequencyCovering::Structured { map, delta, r } => {
                format!("structured[{}; d={}, δ={delta}, r={r}]", map.id(), map.dim())
            }
            FrequencyCovering::Besov { dim } => format!("besov[d={dim}]"),
            FrequencyCovering::Product { parts } => {
                format!("product[{}]", parts.iter().map(|p| p.id()).collect::<Vec<_>>().join(" x "))
            }
        }
    }

    /// Dimension of the frequency space.
    pub fn dim(&self) -> usize {
        match self {
            FrequencyCovering::Induced { map, .. } | FrequencyCovering::Structured { map, .. } => map.dim(),
            FrequencyCovering::Besov { dim } => *dim,
            FrequencyCovering::Product { parts } => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// Length of an index vector.
    pub fn index_dim(&self) -> usize {
        match self {
            FrequencyCovering::Induced { map, .. } | FrequencyCovering::Structured { map, .. } => map.dim(),
            FrequencyCovering::Besov { .. } => 1,
            FrequencyCovering::Product { parts } => parts.iter().map(|p| p.index_dim()).sum(),
        }
    }

    pub fn map(&self) -> Option<&WarpingMap> {
        match self {
            FrequencyCovering::Induced { map, .. } | FrequencyCovering::Structured { map, .. } => Some(map),
            _ => None,
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match self {
            FrequencyCovering::Induced { delta, .. } | FrequencyCovering::Structured { delta, .. } => Some(*delta),
            _ => None,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            FrequencyCovering::Induced { r, .. } | FrequencyCovering::Structured { r, .. } => Some(*r),
            _ => None,
        }
    }

    /// Default window: `|k| ≤ 64` for lattice-indexed coverings, `j ≤ 20` for Besov.
    pub fn default_window(&self) -> IndexWindow {
        match self {
            FrequencyCovering::Induced { map, .. } | FrequencyCovering::Structured { map, .. } => {
                if map.dim() == 1 {
                    IndexWindow::range(-64, 64)
                } else {
                    IndexWindow::ball(map.dim(), 64.0)
                }
            }
            FrequencyCovering::Besov { .. } => IndexWindow::besov(20),
            FrequencyCovering::Product { parts } => {
                let windows: Vec<IndexWindow> = parts.iter().map(|p| p.default_window()).collect();
                let mut idx: Vec<Index> = vec![vec![]];
                for w in &windows {
                    idx = idx
                        .into_iter()
                        .flat_map(|a| {
                            w.indices.iter().map(move |b| {
                                let mut c = a.clone();
                                c.extend(b);
                                c
                            })
                        })
                        .collect();
                }
                IndexWindow::from_indices("product of default windows", idx)
            }
        }
    }

    fn split_parts<'a, T: Clone>(parts: &[FrequencyCovering], v: &'a [T], by_index: bool) -> Vec<&'a [T]> {
        let mut out = Vec::with_capacity(parts.len());
        let mut o = 0;
        for p in parts {
            let n = if by_index { p.index_dim() } else { p.dim() };
            out.push(&v[o..o + n]);
            o += n;
        }
        out
    }

    /// Center `b_k` of element `k` (origin for `B_0`, a point of radius `3·2^{j-1}` on
    /// the first axis for Besov annuli).
    pub fn center(&self, k: &[i64]) -> Vec<f64> {
        match self {
            FrequencyCovering::Induced { map, delta, .. } | FrequencyCovering::Structured { map, delta, .. } => {
                let t: Vec<f64> = k.iter().map(|&v| delta * v as f64).collect();
                map.inverse(&t)
            }
            FrequencyCovering::Besov { dim } => {
                let mut c = vec![0.0; *dim];
                if k[0] > 0 {
                    c[0] = 1.5 * 2f64.powi(k[0] as i32);
                }
                c
            }
            FrequencyCovering::Product { parts } => {
                let ks = Self::split_parts(parts, k, true);
                parts.iter().zip(ks).flat_map(|(p, kk)| p.center(kk)).collect()
            }
        }
    }

    /// `T_k = A(δk)` for lattice-indexed coverings.
    pub fn affine_matrix(&self, k: &[i64]) -> Option<DMatrix<f64>> {
        match self {
            FrequencyCovering::Induced { map, delta, .. } | FrequencyCovering::Structured { map, delta, .. } => {
                let t: Vec<f64> = k.iter().map(|&v| delta * v as f64).collect();
                Some(map.jac_inverse(&t))
            }
            _ => None,
        }
    }

    pub fn contains(&self, k: &[i64], xi: &[f64]) -> bool {
        match self {
            FrequencyCovering::Induced { map, delta, r } => {
                if !map.domain().contains(xi) {
                    return false;
                }
                let t = map.forward(xi);
                let d2: f64 = t
                    .iter()
                    .zip(k)
                    .map(|(a, &b)| (a / delta - b as f64).powi(2))
                    .sum();
                d2 < r * r
            }
            FrequencyCovering::Structured { r, .. } => {
                let c = self.center(k);
                let t = self.affine_matrix(k).expect("lattice covering");
                let diff = DVector::from_iterator(c.len(), xi.iter().zip(&c).map(|(a, b)| a - b));
                match t.lu().solve(&diff) {
                    Some(u) => u.norm() < *r,
                    None => false,
                }
            }
            FrequencyCovering::Besov { .. } => {
                let (lo, hi) = besov_bounds(k[0]);
                let n = norm(xi);
                (k[0] == 0 || n > lo) && n < hi
            }
            FrequencyCovering::Product { parts } => {
                let ks = Self::split_parts(parts, k, true);
                let xs = Self::split_parts(parts, xi, false);
                parts.iter().zip(ks.into_iter().zip(xs)).all(|(p, (kk, xx))| p.contains(kk, xx))
            }
        }
    }

    /// All indices whose element contains `ξ`.
    pub fn locate(&self, xi: &[f64]) -> Vec<Index> {
        match self {
            FrequencyCovering::Induced { map, delta, r } => {
                if !map.domain().contains(xi) {
                    return Vec::new();
                }
                let t: Vec<f64> = map.forward(xi).iter().map(|x| x / delta).collect();
                lattice_ball(&t, *r)
            }
            FrequencyCovering::Structured { map, delta, r } => {
                let t: Vec<f64> = map.forward(xi).iter().map(|x| x / delta).collect();
                let m = (2.0 * r / delta).ceil() + 2.0;
                lattice_ball(&t, m)
                    .into_iter()
                    .filter(|k| self.contains(k, xi))
                    .collect()
            }
            FrequencyCovering::Besov { .. } => {
                let n = norm(xi);
                let mut out = Vec::new();
                if n < 2.0 {
                    out.push(vec![0]);
                }
                let j0 = if n > 0.0 { n.log2().floor() as i64 } else { 0 };
                for j in (j0 - 1).max(1)..=(j0 + 2) {
                    let (lo, hi) = besov_bounds(j);
                    if n > lo && n < hi {
                        out.push(vec![j]);
                    }
                }
                out
            }
            FrequencyCovering::Product { parts } => {
                let xs = Self::split_parts(parts, xi, false);
                let mut out: Vec<Index> = vec![vec![]];
                for (p, x) in parts.iter().zip(xs) {
                    let loc = p.locate(x);
                    out = out
                        .into_iter()
                        .flat_map(|a| {
                            loc.iter().map(move |b| {
                                let mut c = a.clone();
                                c.extend(b);
                                c
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }

    /// `n` quasi-Monte-Carlo points inside element `k`.
    pub fn sample_element(&self, k: &[i64], n: usize) -> Vec<Vec<f64>> {
        self.sample_with_offset(k, n, 0)
    }

    fn sample_with_offset(&self, k: &[i64], n: usize, offset: usize) -> Vec<Vec<f64>> {
        match self {
            FrequencyCovering::Induced { map, delta, r } => halton_ball(map.dim(), n, offset)
                .into_iter()
                .map(|u| {
                    let t: Vec<f64> = u.iter().zip(k).map(|(x, &kk)| delta * (kk as f64 + r * x)).collect();
                    map.inverse(&t)
                })
                .collect(),
            FrequencyCovering::Structured { r, .. } => {
                let c = self.center(k);
                let t = self.affine_matrix(k).expect("lattice covering");
                halton_ball(c.len(), n, offset)
                    .into_iter()
                    .map(|u| {
                        let v = &t * DVector::from_iterator(u.len(), u.iter().map(|x| r * x));
                        c.iter().zip(v.iter()).map(|(a, b)| a + b).collect()
                    })
                    .collect()
            }
            FrequencyCovering::Besov { dim } => {
                let (lo, hi) = besov_bounds(k[0]);
                let mut out = Vec::with_capacity(n);
                let mut batch = n;
                while out.len() < n {
                    out.clear();
                    for u in halton_ball(*dim, batch, offset) {
                        let x: Vec<f64> = u.iter().map(|v| v * hi).collect();
                        let nx = norm(&x);
                        if (k[0] == 0 || nx > lo) && nx < hi {
                            out.push(x);
                            if out.len() == n {
                                break;
                            }
                        }
                    }
                    batch *= 2;
                }
                out
            }
            FrequencyCovering::Product { parts } => {
                let ks = Self::split_parts(parts, k, true);
                let mut off = offset;
                let samples: Vec<Vec<Vec<f64>>> = parts
                    .iter()
                    .zip(ks)
                    .map(|(p, kk)| {
                        let s = p.sample_with_offset(kk, n, off);
                        off += p.dim();
                        s
                    })
                    .collect();
                (0..n)
                    .map(|i| samples.iter().flat_map(|s| s[i].iter().copied()).collect())
                    .collect()
            }
        }
    }

    /// Offsets `o` with `k + o ∈ k*` for translation-invariant coverings.
    fn induced_offsets(dim: usize, r: f64) -> Vec<Index> {
        lattice_ball(&vec![0.0; dim], 2.0 * r)
    }

    /// `k* = {ℓ : Q_ℓ ∩ Q_k ≠ ∅}`.
    pub fn first_neighbors(&self, k: &[i64]) -> Vec<Index> {
        match self {
            FrequencyCovering::Induced { map, r, .. } => Self::induced_offsets(map.dim(), *r)
                .into_iter()
                .map(|o| o.iter().zip(k).map(|(a, b)| a + b).collect())
                .collect(),
            FrequencyCovering::Structured { map, delta, r } => {
                let ck = self.center(k);
                let tk = self.affine_matrix(k).expect("lattice covering");
                let mk = &tk * tk.transpose() * (r * r);
                let kc: Vec<f64> = k.iter().map(|&v| v as f64).collect();
                let m = (4.0 * r / delta).ceil() + 2.0;
                let _ = map;
                lattice_ball(&kc, m)
                    .into_iter()
                    .filter(|l| {
                        let cl = self.center(l);
                        let tl = self.affine_matrix(l).expect("lattice covering");
                        let ml = &tl * tl.transpose() * (r * r);
                        ellipsoids_intersect(&ck, &mk, &cl, &ml)
                    })
                    .collect()
            }
            FrequencyCovering::Besov { .. } => ((k[0] - 1).max(0)..=k[0] + 1).map(|j| vec![j]).collect(),
            FrequencyCovering::Product { parts } => {
                let ks = Self::split_parts(parts, k, true);
                let mut out: Vec<Index> = vec![vec![]];
                for (p, kk) in parts.iter().zip(ks) {
                    let nb = p.first_neighbors(kk);
                    out = out
                        .into_iter()
                        .flat_map(|a| {
                            nb.iter().map(move |b| {
                                let mut c = a.clone();
                                c.extend(b);
                                c
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }

    /// `k^{n*}` (with `k^{0*} = {k}`), sorted.
    pub fn neighbors(&self, k: &[i64], n: usize) -> Vec<Index> {
        let mut set: BTreeSet<Index> = BTreeSet::new();
        set.insert(k.to_vec());
        let mut frontier: Vec<Index> = vec![k.to_vec()];
        for _ in 0..n {
            let mut next = Vec::new();
            for f in &frontier {
                for l in self.first_neighbors(f) {
                    if set.insert(l.clone()) {
                        next.push(l);
                    }
                }
            }
            frontier = next;
        }
        set.into_iter().collect()
    }

    pub fn neighbor_report(&self, k: &[i64], n: usize) -> NeighborReport {
        let neighbors = self.neighbors(k, n);
        NeighborReport {
            index: k.to_vec(),
            n,
            count: neighbors.len(),
            neighbors,
            exact: !matches!(self, FrequencyCovering::Structured { .. }),
        }
    }

    /// `|k^{n*}|` for `n = 0..=n_max`, with the `(1+2n)^d` and `1+2n` reference curves.
    pub fn neighbor_growth_diagnostic(&self, k: &[i64], n_max: usize) -> GrowthReport {
        let d = self.index_dim() as u32;
        GrowthReport {
            index: k.to_vec(),
            counts: (0..=n_max).map(|n| self.neighbors(k, n).len()).collect(),
            lower_reference: (0..=n_max).map(|n| (1 + 2 * n).pow(d)).collect(),
            linear_reference: (0..=n_max).map(|n| 1 + 2 * n).collect(),
        }
    }

    /// `μ(Q_k)`.
    pub fn element_measure(&self, k: &[i64]) -> Result<f64> {
        match self {
            FrequencyCovering::Induced { map, delta, r } => induced_measure(map, *delta, *r, k),
            FrequencyCovering::Structured { r, .. } => {
                let t = self.affine_matrix(k).expect("lattice covering");
                Ok(t.determinant().abs() * unit_ball_volume(t.nrows()) * r.powi(t.nrows() as i32))
            }
            FrequencyCovering::Besov { dim } => {
                let (lo, hi) = besov_bounds(k[0]);
                Ok(unit_ball_volume(*dim) * (hi.powi(*dim as i32) - lo.powi(*dim as i32)))
            }
            FrequencyCovering::Product { parts } => {
                let ks = Self::split_parts(parts, k, true);
                parts.iter().zip(ks).map(|(p, kk)| p.element_measure(kk)).product()
            }
        }
    }

    /// Whether every probe lies in at least one element; returns the first miss.
    pub fn covers(&self, probes: &[Vec<f64>]) -> Option<Vec<f64>> {
        probes.iter().find(|p| self.locate(p).is_empty()).cloned()
    }
}

fn induced_measure(map: &WarpingMap, delta: f64, r: f64, k: &[i64]) -> Result<f64> {
    let d = map.dim();
    check_dim(d, k.len())?;
    let center: Vec<f64> = k.iter().map(|&v| delta * v as f64).collect();
    let rad = delta * r;
    if let Some(rho) = map.radial_component() {
        if rho.is_identity() {
            return Ok(unit_ball_volume(d) * rad.powi(d as i32));
        }
    }
    if d == 1 {
        let a = map.inverse(&[center[0] - rad])[0];
        let b = map.inverse(&[center[0] + rad])[0];
        return Ok((b - a).abs());
    }
    let w = |t: &[f64]| map.weight().eval(t);
    let g = GaussRule::new(24);
    match d {
        2 => {
            let v = g.integrate(0.0, rad, |s| {
                s * g.integrate(0.0, std::f64::consts::TAU, |a| {
                    w(&[center[0] + s * a.cos(), center[1] + s * a.sin()])
                })
            });
            Ok(v)
        }
        3 => {
            let v = g.integrate(0.0, rad, |s| {
                s * s
                    * g.integrate(0.0, std::f64::consts::PI, |th| {
                        th.sin()
                            * g.integrate(0.0, std::f64::consts::TAU, |ph| {
                                w(&[
                                    center[0] + s * th.sin() * ph.cos(),
                                    center[1] + s * th.sin() * ph.sin(),
                                    center[2] + s * th.cos(),
                                ])
                            })
                    })
            });
            Ok(v)
        }
        _ => {
            let pts = halton_ball(d, 20_000, 0);
            let mean = pts
                .iter()
                .map(|u| {
                    let t: Vec<f64> = u.iter().zip(&center).map(|(x, c)| c + rad * x).collect();
                    w(&t)
                })
                .sum::<f64>()
                / pts.len() as f64;
            Ok(mean * unit_ball_volume(d) * rad.powi(d as i32))
        }
    }
}

/// `μ(M_k)` for the warped cube `M_k = Φ⁻¹(δ·(k + [-1/2, 1/2)^d))`.
pub fn cell_measure(map: &WarpingMap, delta: f64, k: &[i64]) -> Result<f64> {
    let d = map.dim();
    check_dim(d, k.len())?;
    if let Some(rho) = map.radial_component() {
        if rho.is_identity() {
            return Ok(delta.powi(d as i32));
        }
    }
    if d == 1 {
        let c = delta * k[0] as f64;
        return Ok(map.inverse(&[c + 0.5 * delta])[0] - map.inverse(&[c - 0.5 * delta])[0]);
    }
    if let crate::warping_core::MapStructure::Tensor(parts) = map.structure() {
        if parts.iter().all(|p| p.dim() == 1) {
            return k
                .iter()
                .zip(parts)
                .map(|(&kk, p)| cell_measure(p, delta, &[kk]))
                .product();
        }
    }
    let g = GaussRule::new(12);
    let nodes: Vec<(f64, f64)> = g.on(-0.5 * delta, 0.5 * delta).collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    let mut t = vec![0.0; d];
    loop {
        let mut wgt = 1.0;
        for a in 0..d {
            t[a] = delta * k[a] as f64 + nodes[idx[a]].0;
            wgt *= nodes[idx[a]].1;
        }
        total += wgt * map.weight().eval(&t);
        let mut a = 0;
        loop {
            if a == d {
                return Ok(total);
            }
            idx[a] += 1;
            if idx[a] < nodes.len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Norm range of `Q_k = Φ_ρ⁻¹(δ·B_r(k))`: `(ρ_*(max(0, δ|k| - δr)), ρ_*(δ|k| + δr))`.
fn radial_norm_range(rho: &RadialComponent, delta: f64, r: f64, k: &[i64]) -> (f64, f64) {
    let nk = index_norm(k);
    (rho.inverse((delta * (nk - r)).max(0.0)), rho.inverse(delta * (nk + r)))
}

fn intervals_meet(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Whether a norm range meets `B_j` (`B_0` contains the origin).
fn norm_range_meets_besov(range: (f64, f64), j: i64) -> bool {
    if j == 0 {
        range.0 < 2.0
    } else {
        intervals_meet(range, besov_bounds(j))
    }
}

/// Exact `|{k : A_k ∩ B_j ≠ ∅}|` where the geometry permits.
fn exact_count(a: &FrequencyCovering, b: &FrequencyCovering, j: &[i64]) -> Option<usize> {
    use FrequencyCovering::*;
    match (a, b) {
        (Induced { map: ma, delta: da, r: ra }, Induced { map: mb, delta: db, r: rb }) if ma.same_map(mb) => {
            let c: Vec<f64> = j.iter().map(|&v| db * v as f64 / da).collect();
            Some(lattice_ball(&c, (da * ra + db * rb) / da).len())
        }
        (Induced { map, delta, r }, Besov { dim }) if map.dim() == *dim => {
            let rho = map.radial_component()?;
            let outer = rho.value(besov_bounds(j[0]).1) / delta + r;
            let count = lattice_ball(&vec![0.0; *dim], outer)
                .into_iter()
                .filter(|k| norm_range_meets_besov(radial_norm_range(&rho, *delta, *r, k), j[0]))
                .count();
            Some(count)
        }
        (Besov { dim }, Induced { map, delta, r }) if map.dim() == *dim => {
            let rho = map.radial_component()?;
            let range = radial_norm_range(&rho, *delta, *r, j);
            let jmax = (range.1.max(1.0).log2().ceil() as i64) + 2;
            Some((0..=jmax).filter(|&l| norm_range_meets_besov(range, l)).count())
        }
        (Besov { dim: da }, Besov { dim: db }) if da == db => Some(((j[0] - 1).max(0)..=j[0] + 1).count()),
        (Product { parts: pa }, Product { parts: pb })
            if pa.len() == pb.len() && pa.iter().zip(pb).all(|(x, y)| x.dim() == y.dim()) =>
        {
            let js = FrequencyCovering::split_parts(pb, j, true);
            pa.iter()
                .zip(pb)
                .zip(js)
                .map(|((x, y), jj)| exact_count(x, y, jj))
                .product()
        }
        _ => None,
    }
}

fn mc_count(a: &FrequencyCovering, b: &FrequencyCovering, j: &[i64]) -> usize {
    let mut set: HashSet<Index> = HashSet::new();
    for p in b.sample_element(j, MC_POINTS) {
        set.extend(a.locate(&p));
    }
    set.len()
}

/// Intersection counts in both directions; exact for same-map induced pairs,
/// radial-induced vs Besov pairs and componentwise products thereof, otherwise
/// quasi-Monte-Carlo sampling with `MC_POINTS` points per element (`exact = false`).
pub fn cross_intersections(
    a: &FrequencyCovering,
    b: &FrequencyCovering,
    window_a: &IndexWindow,
    window_b: &IndexWindow,
) -> Result<CrossReport> {
    check_dim(a.dim(), b.dim())?;
    let exact_b: Vec<Option<usize>> = window_b.indices.par_iter().map(|j| exact_count(a, b, j)).collect();
    let exact_a: Vec<Option<usize>> = window_a.indices.par_iter().map(|k| exact_count(b, a, k)).collect();
    let exact = exact_b.iter().chain(&exact_a).all(|c| c.is_some());
    let counts_for_b: Vec<(Index, usize)> = window_b
        .indices
        .par_iter()
        .zip(exact_b)
        .map(|(j, c)| (j.clone(), c.unwrap_or_else(|| mc_count(a, b, j))))
        .collect();
    let counts_for_a: Vec<(Index, usize)> = window_a
        .indices
        .par_iter()
        .zip(exact_a)
        .map(|(k, c)| (k.clone(), c.unwrap_or_else(|| mc_count(b, a, k))))
        .collect();
    Ok(CrossReport {
        a: a.id(),
        b: b.id(),
        exact,
        sup_for_b: counts_for_b.iter().map(|c| c.1).max().unwrap_or(0),
        sup_for_a: counts_for_a.iter().map(|c| c.1).max().unwrap_or(0),
        counts_for_b,
        counts_for_a,
    })
}

/// Tightness radius `θ/4` with `θ = min{δr, θ₀}`, verified by checking that
/// `b_k + T_k⟨B_{θ/4}(0)⟩ ⊂ Q_k` on sampled points for each `k` in the window.
pub fn tightness_radius(cov: &FrequencyCovering, window: &IndexWindow) -> Result<TightnessReport> {
    let FrequencyCovering::Induced { map, delta, r } = cov else {
        return Err(Error::Unsupported("tightness radius needs an induced covering".into()));
    };
    let t0 = theta0(map);
    let theta = (delta * r).min(t0);
    let radius = theta / 4.0;
    let d = map.dim();
    let mut dirs: Vec<Vec<f64>> = sphere_directions(d, 64).into_iter().map(|u| u.iter().map(|x| 0.999 * x).collect()).collect();
    dirs.extend(halton_ball(d, 64, 3));
    let mut witness = None;
    'outer: for k in &window.indices {
        let c = cov.center(k);
        let t = cov.affine_matrix(k).expect("lattice covering");
        for u in &dirs {
            let v = &t * DVector::from_iterator(d, u.iter().map(|x| radius * x));
            let x: Vec<f64> = c.iter().zip(v.iter()).map(|(a, b)| a + b).collect();
            if !cov.contains(k, &x) {
                witness = Some(Witness {
                    tau: k.iter().map(|&v| delta * v as f64).collect(),
                    upsilon: u.clone(),
                    alpha: None,
                });
                break 'outer;
            }
        }
    }
    Ok(TightnessReport {
        theta0: t0,
        theta,
        radius,
        verified: witness.is_none(),
        witness,
    })
}

/// Outer radius of `Q′_k = T_k⁻¹(Q_k - b_k)` from sampled boundary preimages.
pub fn normalized_outer_radius(cov: &FrequencyCovering, k: &[i64], samples: usize) -> Result<f64> {
    let FrequencyCovering::Induced { map, delta, r } = cov else {
        return Err(Error::Unsupported("normalized outer radius needs an induced covering".into()));
    };
    let c = cov.center(k);
    let lu = cov.affine_matrix(k).expect("lattice covering").lu();
    let mut best = 0.0f64;
    for u in sphere_directions(map.dim(), samples) {
        let t: Vec<f64> = k.iter().zip(&u).map(|(&kk, x)| delta * (kk as f64 + r * x)).collect();
        let x = map.inverse(&t);
        let diff = DVector::from_iterator(c.len(), x.iter().zip(&c).map(|(a, b)| a - b));
        let q = lu.solve(&diff).ok_or_else(|| Error::SingularJacobian(t.clone()))?;
        best = best.max(q.norm());
    }
    Ok(best)
}

/// Measure band of `μ(Q_k)/(1+|b_k|)^{αd}` over the window and the roundness band
/// `R_Q/r_Q ≈ σ_max(T_k)·R′_k / (σ_min(T_k)·θ/4)`; passes iff the measure band ratio
/// is at most 10 and the roundness band is finite.
pub fn alpha_verify(cov: &FrequencyCovering, alpha: f64, window: &IndexWindow) -> Result<AlphaReport> {
    if alpha > 1.0 {
        return invalid(format!("no α-covering exists for α > 1 (got α = {alpha})"));
    }
    let FrequencyCovering::Induced { map, .. } = cov else {
        return Err(Error::Unsupported("alpha_verify needs an induced covering".into()));
    };
    let d = map.dim() as f64;
    let tight = tightness_radius(cov, &IndexWindow::from_indices("origin", vec![vec![0; map.dim()]]))?;
    let rows: Vec<(f64, f64)> = window
        .indices
        .par_iter()
        .map(|k| {
            let mu = cov.element_measure(k)?;
            let b = cov.center(k);
            let ratio = mu / (1.0 + norm(&b)).powf(alpha * d);
            let sv = cov.affine_matrix(k).expect("lattice covering").singular_values();
            let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
            let smin = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let outer = normalized_outer_radius(cov, k, 32)?;
            Ok((ratio, smax * outer / (smin * tight.radius)))
        })
        .collect::<Result<Vec<_>>>()?;
    let band = |f: fn(&(f64, f64)) -> f64| {
        rows.iter().map(f).fold([f64::INFINITY, 0.0f64], |[lo, hi], v| [lo.min(v), hi.max(v)])
    };
    let measure_band = band(|r| r.0);
    let roundness_band = band(|r| r.1);
    let ratio = measure_band[1] / measure_band[0];
    Ok(AlphaReport {
        alpha,
        measure_band,
        measure_band_ratio: ratio,
        roundness_band,
        pass: ratio.is_finite() && ratio <= 10.0 && roundness_band[1].is_finite(),
    })
}
