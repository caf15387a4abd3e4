//! Warping maps `Φ`, their inverse Jacobians `A = DΦ⁻¹`, associated weights
//! `w = det A`, control weights `v₀`, and grid-based admissibility checks.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numdiff::{jacobian, multi_indices, partial, spectral_norm};
use crate::radial_warping::RadialComponent;

pub type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smallest determinant accepted as nonsingular.
pub const DET_FLOOR: f64 = 1e-300;

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Full,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Full => true,
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| l < v && v < h),
            Domain::Ball { center, radius } => {
                let d: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d.sqrt() < *radius
            }
        }
    }
}

/// Radial control weight `v₀(τ) = constant · shape(|τ|)`.
#[derive(Clone)]
pub struct ControlWeight {
    label: String,
    constant: f64,
    shape: RadialFn,
}

impl fmt::Debug for ControlWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlWeight")
            .field("label", &self.label)
            .field("constant", &self.constant)
            .finish()
    }
}

impl ControlWeight {
    pub fn one() -> Self {
        Self::radial("1", 1.0, Arc::new(|_| 1.0))
    }

    pub fn radial(label: impl Into<String>, constant: f64, shape: RadialFn) -> Self {
        Self {
            label: label.into(),
            constant,
            shape,
        }
    }

    /// Pointwise maximum of radial weights.
    pub fn max_of(parts: &[ControlWeight]) -> Self {
        let parts: Vec<ControlWeight> = parts.to_vec();
        let label = format!(
            "max({})",
            parts.iter().map(|p| p.label.as_str()).collect::<Vec<_>>().join(", ")
        );
        Self::radial(
            label,
            1.0,
            Arc::new(move |t| parts.iter().map(|p| p.eval_radius(t)).fold(1.0, f64::max)),
        )
    }

    pub fn eval(&self, tau: &[f64]) -> f64 {
        self.eval_radius(norm(tau))
    }

    pub fn eval_radius(&self, t: f64) -> f64 {
        self.constant * (self.shape)(t)
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_constant(&self, constant: f64) -> Self {
        Self {
            constant,
            ..self.clone()
        }
    }
}

/// The weight `w(τ) = det A(τ)`, with an optional closed-form tag.
#[derive(Clone)]
pub struct AssociatedWeight {
    eval: ScalarFn,
    closed_form: Option<String>,
}

impl AssociatedWeight {
    pub fn new(eval: ScalarFn, closed_form: Option<String>) -> Self {
        Self { eval, closed_form }
    }

    pub fn eval(&self, tau: &[f64]) -> f64 {
        (self.eval)(tau)
    }

    pub fn closed_form(&self) -> Option<&str> {
        self.closed_form.as_deref()
    }
}

#[derive(Clone)]
pub enum MapStructure {
    Identity,
    Radial(RadialComponent),
    Tensor(Vec<WarpingMap>),
    General,
}

/// A diffeomorphism `Φ: D → ℝ^d` given by pure evaluators.
#[derive(Clone)]
pub struct WarpingMap {
    id: String,
    dim: usize,
    forward: VecFn,
    inverse: VecFn,
    jac_inverse: MatFn,
    jac_synthesized: bool,
    weight: AssociatedWeight,
    domain: Domain,
    smoothness: usize,
    control: ControlWeight,
    structure: MapStructure,
}

impl fmt::Debug for WarpingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpingMap")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("jac_synthesized", &self.jac_synthesized)
            .field("control", &self.control)
            .finish()
    }
}

impl WarpingMap {
    /// Builds a map from `(forward, inverse, jac_inverse)`; a missing
    /// `jac_inverse` is synthesized by finite differences of `inverse`.
    pub fn from_evaluators(
        id: impl Into<String>,
        dim: usize,
        forward: VecFn,
        inverse: VecFn,
        jac_inverse: Option<MatFn>,
    ) -> Self {
        let jac_synthesized = jac_inverse.is_none();
        let jac_inverse = jac_inverse.unwrap_or_else(|| {
            let inv = inverse.clone();
            Arc::new(move |tau: &[f64]| {
                let h = 1e-4 * (1.0 + norm(tau));
                jacobian(&|x: &[f64]| inv(x), tau, h)
            })
        });
        let jac = jac_inverse.clone();
        let weight = AssociatedWeight::new(Arc::new(move |tau: &[f64]| jac(tau).determinant()), None);
        Self {
            id: id.into(),
            dim,
            forward,
            inverse,
            jac_inverse,
            jac_synthesized,
            weight,
            domain: Domain::Full,
            smoothness: 0,
            control: ControlWeight::one(),
            structure: MapStructure::General,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut map = Self::from_evaluators(
            "identity",
            dim,
            Arc::new(|x: &[f64]| x.to_vec()),
            Arc::new(|x: &[f64]| x.to_vec()),
            Some(Arc::new(move |_: &[f64]| DMatrix::identity(dim, dim))),
        );
        map.weight = AssociatedWeight::new(Arc::new(|_: &[f64]| 1.0), Some("1".into()));
        map.smoothness = usize::MAX;
        map.structure = MapStructure::Identity;
        map
    }

    pub fn with_weight(mut self, weight: AssociatedWeight) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_control(mut self, control: ControlWeight) -> Self {
        self.control = control;
        self
    }

    pub fn with_smoothness(mut self, k: usize) -> Self {
        self.smoothness = k;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub(crate) fn with_structure(mut self, structure: MapStructure) -> Self {
        self.structure = structure;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn control(&self) -> &ControlWeight {
        &self.control
    }

    pub fn structure(&self) -> &MapStructure {
        &self.structure
    }

    pub fn jac_synthesized(&self) -> bool {
        self.jac_synthesized
    }

    pub fn weight(&self) -> &AssociatedWeight {
        &self.weight
    }

    pub fn forward(&self, xi: &[f64]) -> Vec<f64> {
        (self.forward)(xi)
    }

    pub fn inverse(&self, tau: &[f64]) -> Vec<f64> {
        (self.inverse)(tau)
    }

    pub fn jac_inverse(&self, tau: &[f64]) -> DMatrix<f64> {
        (self.jac_inverse)(tau)
    }

    /// `DΦ(ξ) = A(Φ(ξ))⁻¹`.
    pub fn jac_forward(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        let tau = self.forward(xi);
        self.jac_inverse(&tau)
            .try_inverse()
            .ok_or(Error::SingularJacobian(tau))
    }

    /// The radial component when the map is radial (identity counts as radial).
    pub fn radial_component(&self) -> Option<RadialComponent> {
        match &self.structure {
            MapStructure::Identity => Some(RadialComponent::linear(1.0)),
            MapStructure::Radial(rho) => Some(rho.clone()),
            _ => None,
        }
    }

    /// Two maps are treated as the same map when their ids and dimensions agree.
    pub fn same_map(&self, other: &WarpingMap) -> bool {
        self.id == other.id && self.dim == other.dim
    }
}

/// `w(τ) = det A(τ)`.
pub fn eval_weight(map: &WarpingMap, tau: &[f64]) -> Result<f64> {
    check_dim(map.dim(), tau.len())?;
    let w = map.weight().eval(tau);
    if !w.is_finite() || w.abs() < DET_FLOOR {
        return Err(Error::SingularJacobian(tau.to_vec()));
    }
    Ok(w)
}

#[derive(Debug, Clone)]
pub struct PhiTauMatrix {
    pub tau: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub value: DMatrix<f64>,
}

fn inverse_transpose(map: &WarpingMap, tau: &[f64]) -> Result<DMatrix<f64>> {
    let a = map.jac_inverse(tau);
    if a.determinant().abs() < DET_FLOOR {
        return Err(Error::SingularJacobian(tau.to_vec()));
    }
    a.try_inverse()
        .map(|inv| inv.transpose())
        .ok_or_else(|| Error::SingularJacobian(tau.to_vec()))
}

fn phi_with(map: &WarpingMap, a_inv_t: &DMatrix<f64>, tau: &[f64], upsilon: &[f64]) -> DMatrix<f64> {
    let shifted: Vec<f64> = tau.iter().zip(upsilon).map(|(t, u)| t + u).collect();
    map.jac_inverse(&shifted).transpose() * a_inv_t
}

/// `φ_τ(υ) = Aᵀ(υ+τ)·A⁻ᵀ(τ)`.
pub fn phi_tau(map: &WarpingMap, tau: &[f64], upsilon: &[f64]) -> Result<PhiTauMatrix> {
    check_dim(map.dim(), tau.len())?;
    check_dim(map.dim(), upsilon.len())?;
    let a_inv_t = inverse_transpose(map, tau)?;
    let value = phi_with(map, &a_inv_t, tau, upsilon);
    Ok(PhiTauMatrix {
        tau: tau.to_vec(),
        upsilon: upsilon.to_vec(),
        value,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Witness {
    pub tau: Vec<f64>,
    pub upsilon: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<usize>>,
}

/// JSON record `{check, max_ratio, witness, pass}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub check: String,
    pub max_ratio: f64,
    pub witness: Option<Witness>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Sample pairs `(τ, υ)` used by the admissibility sweep.
pub type PairGrid = Vec<(Vec<f64>, Vec<f64>)>;

/// Pairs on a tensor grid in `[-radius, radius]` (d = 1) or seeded random
/// pairs in the ball of the given radius plus axis-aligned pairs (d ≥ 2).
pub fn pair_grid(dim: usize, radius: f64, points: usize, seed: u64) -> PairGrid {
    if dim == 1 {
        let n = points.max(2);
        let axis: Vec<f64> = (0..n)
            .map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64)
            .collect();
        let mut out = Vec::with_capacity(n * n);
        for &t in &axis {
            for &u in &axis {
                out.push((vec![t], vec![u]));
            }
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let steps = 5;
    for i in 0..=steps {
        for j in 0..=steps {
            let t = radius * i as f64 / steps as f64;
            let u = radius * (2.0 * j as f64 / steps as f64 - 1.0);
            let mut tau = vec![0.0; dim];
            let mut ups = vec![0.0; dim];
            tau[0] = t;
            ups[0] = u;
            out.push((tau.clone(), ups.clone()));
            ups[0] = 0.0;
            ups[1 % dim] = u;
            out.push((tau, ups));
        }
    }
    while out.len() < points {
        let tau = random_in_ball(&mut rng, dim, radius);
        let ups = random_in_ball(&mut rng, dim, radius);
        out.push((tau, ups));
    }
    out
}

pub fn random_in_ball(rng: &mut impl Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if norm(&v) <= 1.0 {
            return v.into_iter().map(|x| x * radius).collect();
        }
    }
}

/// Standard verification grid: radius 10, 41×41 pairs for d = 1 and 300
/// pairs otherwise.
pub fn standard_pair_grid(dim: usize) -> PairGrid {
    if dim == 1 {
        pair_grid(1, 10.0, 41, 0)
    } else {
        pair_grid(dim, 10.0, 300, 0)
    }
}

struct PairRatio {
    ratio: f64,
    alpha: Vec<usize>,
}

fn admissibility_ratio(
    map: &WarpingMap,
    shape: &dyn Fn(&[f64]) -> f64,
    order: usize,
    tau: &[f64],
    upsilon: &[f64],
) -> Result<PairRatio> {
    let d = map.dim();
    let a_inv_t = inverse_transpose(map, tau)?;
    let f = |u: &[f64]| phi_with(map, &a_inv_t, tau, u).as_slice().to_vec();
    let h = 1e-3 * (1.0 + norm(upsilon));
    let denom = shape(upsilon);
    let mut best = PairRatio {
        ratio: 0.0,
        alpha: vec![0; d],
    };
    for alpha in multi_indices(d, order) {
        let v = if alpha.iter().all(|&a| a == 0) {
            f(upsilon)
        } else {
            partial(&f, upsilon, &alpha, h)
        };
        let m = DMatrix::from_column_slice(d, d, &v);
        let r = spectral_norm(&m) / denom;
        if r > best.ratio || !r.is_finite() {
            best = PairRatio { ratio: r, alpha };
            if !best.ratio.is_finite() {
                break;
            }
        }
    }
    Ok(best)
}

/// Max over the grid and over `|α| ≤ order` of `‖∂^α φ_τ(υ)‖ / v₀(υ)`; passes
/// iff the maximum is at most `1 + tol`.
pub fn verify_admissibility(
    map: &WarpingMap,
    v0: &ControlWeight,
    order: usize,
    grid: &PairGrid,
    tol: f64,
) -> Result<CheckReport> {
    if order > map.smoothness() {
        return Err(Error::InvalidParameter(format!(
            "order {order} exceeds smoothness {} of map {}",
            map.smoothness(),
            map.id()
        )));
    }
    let shape = |u: &[f64]| v0.eval(u);
    let results: Vec<(f64, Witness)> = grid
        .par_iter()
        .map(|(tau, ups)| {
            admissibility_ratio(map, &shape, order, tau, ups).map(|r| {
                (
                    r.ratio,
                    Witness {
                        tau: tau.clone(),
                        upsilon: ups.clone(),
                        alpha: Some(r.alpha),
                    },
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (max_ratio, witness) = results
        .into_iter()
        .fold((0.0f64, None), |(m, w), (r, wit)| {
            if r > m || (!r.is_finite() && m.is_finite()) {
                (r, Some(wit))
            } else {
                (m, w)
            }
        });
    let mut notes = vec![format!("control weight: {}", v0.label())];
    if map.jac_synthesized() {
        notes.push("jac_inverse synthesized by finite differences".into());
    }
    Ok(CheckReport {
        check: format!("admissibility(order={order})"),
        max_ratio,
        witness,
        pass: max_ratio.is_finite() && max_ratio <= 1.0 + tol,
        notes,
    })
}

/// Smallest constant `C ≥ 1` such that `C·shape` dominates the admissibility
/// ratios on `grid`, inflated by `margin`.
pub fn calibrate_control_constant(
    map: &WarpingMap,
    shape: &RadialFn,
    order: usize,
    grid: &PairGrid,
    margin: f64,
) -> Result<f64> {
    let s = |u: &[f64]| shape(norm(u));
    let worst = grid
        .par_iter()
        .map(|(tau, ups)| admissibility_ratio(map, &s, order, tau, ups).map(|r| r.ratio))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0f64, f64::max);
    Ok(worst * margin)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JacobianReport {
    /// `max |w(Φ(ξ))·det DΦ(ξ) − 1|` with `DΦ` finite-differenced.
    pub forward_det_residual: f64,
    /// `max |Φ(Φ⁻¹(τ)) − τ|`.
    pub roundtrip_residual: f64,
    /// `max |w(τ) − det(DΦ⁻¹ by finite differences)| / w(τ)`.
    pub weight_vs_fd_det: f64,
    pub pass: bool,
}

/// Relative step of the finite-difference Jacobians in [`jacobian_consistency`].
pub const JACOBIAN_STEP: f64 = 1e-5;

/// Jacobian and round-trip consistency on the probes; `tol` applies to every residual.
pub fn jacobian_consistency(map: &WarpingMap, probes: &[Vec<f64>], tol: f64) -> Result<JacobianReport> {
    let fwd = |x: &[f64]| map.forward(x);
    let inv = |x: &[f64]| map.inverse(x);
    let mut forward_det_residual = 0.0f64;
    let mut roundtrip_residual = 0.0f64;
    let mut weight_vs_fd_det = 0.0f64;
    for p in probes {
        check_dim(map.dim(), p.len())?;
        let h = JACOBIAN_STEP * (1.0 + norm(p));
        let det_fwd = jacobian(&fwd, p, h).determinant();
        let w = eval_weight(map, &map.forward(p))?;
        forward_det_residual = forward_det_residual.max((w * det_fwd - 1.0).abs());

        let back = map.forward(&map.inverse(p));
        let rt = back.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        roundtrip_residual = roundtrip_residual.max(rt);

        let w_tau = eval_weight(map, p)?;
        let det_inv = jacobian(&inv, p, h).determinant();
        weight_vs_fd_det = weight_vs_fd_det.max((w_tau - det_inv).abs() / w_tau);
    }
    let pass = forward_det_residual <= tol && roundtrip_residual <= tol && weight_vs_fd_det <= tol;
    Ok(JacobianReport {
        forward_det_residual,
        roundtrip_residual,
        weight_vs_fd_det,
        pass,
    })
}

/// Max of `f(τ+υ) / (f(υ)·v(τ))` over the sampled pairs.
pub fn check_moderate(
    f: &dyn Fn(&[f64]) -> f64,
    v: &dyn Fn(&[f64]) -> f64,
    pairs: &PairGrid,
    tol: f64,
) -> CheckReport {
    let mut max_ratio = 0.0f64;
    let mut witness = None;
    for (tau, ups) in pairs {
        let shifted: Vec<f64> = tau.iter().zip(ups).map(|(a, b)| a + b).collect();
        let r = f(&shifted) / (f(ups) * v(tau));
        if r > max_ratio || (!r.is_finite() && max_ratio.is_finite()) {
            max_ratio = r;
            witness = Some(Witness {
                tau: tau.clone(),
                upsilon: ups.clone(),
                alpha: None,
            });
        }
    }
    CheckReport {
        check: "moderateness".into(),
        max_ratio,
        witness,
        pass: max_ratio.is_finite() && max_ratio <= 1.0 + tol,
        notes: Vec::new(),
    }
}

/// Max `|Φ(Φ⁻¹(τ)) − τ|` over the probes.
pub fn roundtrip_residual(map: &WarpingMap, probes: &[Vec<f64>]) -> f64 {
    probes
        .iter()
        .map(|p| {
            map.forward(&map.inverse(p))
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weight_and_phi() {
        let m = WarpingMap::identity(2);
        assert_eq!(eval_weight(&m, &[3.0, -1.0]).unwrap(), 1.0);
        let p = phi_tau(&m, &[1.0, 2.0], &[0.5, -0.25]).unwrap();
        assert_eq!(p.value, DMatrix::identity(2, 2));
    }

    #[test]
    fn synthesized_jacobian_is_flagged() {
        let m = WarpingMap::from_evaluators(
            "cubic",
            1,
            Arc::new(|x: &[f64]| vec![x[0].cbrt()]),
            Arc::new(|t: &[f64]| vec![t[0].powi(3) + t[0]]),
            None,
        );
        assert!(m.jac_synthesized());
        let w = eval_weight(&m, &[2.0]).unwrap();
        assert!((w - 13.0).abs() < 1e-9);
    }

    #[test]
    fn moderateness_examples() {
        let pairs = pair_grid(1, 10.0, 21, 0);
        let one = check_moderate(&|_| 1.0, &|_| 1.0, &pairs, 1e-12);
        assert!(one.pass && one.max_ratio == 1.0);
        let poly = check_moderate(
            &|x| (1.0 + norm(x)).powi(2),
            &|x| (1.0 + norm(x)).powi(2),
            &pairs,
            1e-12,
        );
        assert!(poly.pass);
        let gauss = check_moderate(&|x| (x[0] * x[0]).exp(), &|x| norm(x).exp(), &pairs, 1e-2);
        assert!(!gauss.pass && gauss.witness.is_some());
    }

    #[test]
    fn domain_membership() {
        let b = Domain::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 2.0],
        };
        assert!(b.contains(&[0.5, 1.5]));
        assert!(!b.contains(&[1.5, 1.5]));
        let ball = Domain::Ball {
            center: vec![0.0],
            radius: 1.0,
        };
        assert!(!ball.contains(&[1.0]));
    }
}
