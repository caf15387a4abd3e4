//! Radial components `ρ`, the slow-start regularization of weakly admissible
//! components `ς`, radial warpings `Φ_ρ(ξ) = ρ̃(|ξ|)·ξ` and tensor products.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::warping_core::{
    calibrate_control_constant, norm, pair_grid, AssociatedWeight, ControlWeight, MapStructure,
    PairGrid, RadialFn, WarpingMap,
};

/// Smoothness order used for `C^∞` components.
pub const SMOOTH: usize = usize::MAX;

/// Named families of weakly admissible components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `ς_α(ξ) = (1+ξ)^{1-α} - 1`, `α < 1`.
    Alpha { alpha: f64 },
    /// `ς₁(ξ) = ln(1+ξ)`.
    Ln,
}

impl Family {
    pub fn parse(id: &str) -> Result<Family> {
        let id = id.trim();
        if id == "ln" {
            return Ok(Family::Ln);
        }
        if let Some(rest) = id.strip_prefix("alpha:") {
            let alpha: f64 = parse_number(rest)?;
            if !(alpha < 1.0) {
                return invalid(format!(
                    "alpha family requires α < 1 (no α-covering exists for α > 1), got {alpha}"
                ));
            }
            return Ok(Family::Alpha { alpha });
        }
        Err(Error::UnknownMap(id.to_string()))
    }

    pub fn id(&self) -> String {
        match self {
            Family::Alpha { alpha } => format!("alpha:{alpha}"),
            Family::Ln => "ln".into(),
        }
    }

    /// `β = 1/(1-α)` for the alpha family.
    pub fn beta(&self) -> Option<f64> {
        match self {
            Family::Alpha { alpha } => Some(1.0 / (1.0 - alpha)),
            Family::Ln => None,
        }
    }
}

/// Parses a decimal or `a/b` fraction.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| Error::InvalidParameter(s.into()))?;
        let b: f64 = b.trim().parse().map_err(|_| Error::InvalidParameter(s.into()))?;
        if b == 0.0 {
            return invalid(format!("zero denominator in {s}"));
        }
        return Ok(a / b);
    }
    s.parse().map_err(|_| Error::InvalidParameter(format!("not a number: {s}")))
}

/// Weakly admissible component `ς: [0,∞) → [0,∞)` with inverse and control `u`.
#[derive(Clone)]
pub struct WeaklyAdmissibleComponent {
    family: Family,
    value: RadialFn,
    derivative: RadialFn,
    inverse: RadialFn,
    inverse_derivative: RadialFn,
    control: RadialFn,
}

impl fmt::Debug for WeaklyAdmissibleComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeaklyAdmissibleComponent({})", self.family.id())
    }
}

impl WeaklyAdmissibleComponent {
    pub fn new(family: Family) -> Result<Self> {
        match family {
            Family::Alpha { alpha } => {
                if !(alpha < 1.0) {
                    return invalid(format!("alpha family requires α < 1, got {alpha}"));
                }
                let e = 1.0 - alpha;
                let beta = 1.0 / e;
                let u_exp = (beta - 1.0).abs();
                Ok(Self {
                    family,
                    value: Arc::new(move |x| (1.0 + x).powf(e) - 1.0),
                    derivative: Arc::new(move |x| e * (1.0 + x).powf(-alpha)),
                    inverse: Arc::new(move |g| (1.0 + g).powf(beta) - 1.0),
                    inverse_derivative: Arc::new(move |g| beta * (1.0 + g).powf(beta - 1.0)),
                    control: Arc::new(move |x| (1.0 + x).powf(u_exp)),
                })
            }
            Family::Ln => Ok(Self {
                family,
                value: Arc::new(|x| x.ln_1p()),
                derivative: Arc::new(|x| 1.0 / (1.0 + x)),
                inverse: Arc::new(|g| g.exp_m1()),
                inverse_derivative: Arc::new(|g| g.exp()),
                control: Arc::new(|x| x.exp()),
            }),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    pub fn inverse(&self, g: f64) -> f64 {
        (self.inverse)(g)
    }

    pub fn inverse_derivative(&self, g: f64) -> f64 {
        (self.inverse_derivative)(g)
    }

    pub fn control(&self, x: f64) -> f64 {
        (self.control)(x)
    }

    pub(crate) fn control_fn(&self) -> RadialFn {
        self.control.clone()
    }

    /// Upper end of the admitted slope interval `ς(ε)/(2ε)`.
    pub fn max_slope(&self, eps: f64) -> f64 {
        self.value(eps) / (2.0 * eps)
    }
}

fn glue(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Slow-start parameters `(ε, c)`; the bump `Ω` is the fixed `e^{-1/t}` transition
/// from 1 on `[0, ε]` to 0 on `[2ε, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowStartParams {
    pub epsilon: f64,
    pub c: f64,
}

impl SlowStartParams {
    /// Defaults `ε = 1`, `c = 0.9·ς(ε)/(2ε)`.
    pub fn default_for(sigma: &WeaklyAdmissibleComponent) -> Self {
        Self::with_epsilon(sigma, 1.0)
    }

    pub fn with_epsilon(sigma: &WeaklyAdmissibleComponent, epsilon: f64) -> Self {
        Self {
            epsilon,
            c: 0.9 * sigma.max_slope(epsilon),
        }
    }

    pub fn validate(&self, sigma: &WeaklyAdmissibleComponent) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        let hi = sigma.max_slope(self.epsilon);
        if !(self.c > 0.0 && self.c < hi) {
            return invalid(format!(
                "slow-start slope c = {} outside (0, {hi}) for ε = {}",
                self.c, self.epsilon
            ));
        }
        Ok(())
    }

    /// `Ω(ξ)`, even in `ξ`.
    pub fn omega(&self, xi: f64) -> f64 {
        let x = xi.abs();
        let eps = self.epsilon;
        if x <= eps {
            return 1.0;
        }
        if x >= 2.0 * eps {
            return 0.0;
        }
        let s = (x - eps) / eps;
        let a = glue(1.0 - s);
        let b = glue(s);
        a / (a + b)
    }

    /// `Ω′(ξ)` for `ξ ≥ 0`.
    pub fn omega_prime(&self, xi: f64) -> f64 {
        let x = xi.abs();
        let eps = self.epsilon;
        if x <= eps || x >= 2.0 * eps {
            return 0.0;
        }
        let s = (x - eps) / eps;
        let a = glue(1.0 - s);
        let b = glue(s);
        let ds = -a * b * (1.0 / (1.0 - s).powi(2) + 1.0 / (s * s)) / (a + b).powi(2);
        let v = ds / eps;
        if xi < 0.0 {
            -v
        } else {
            v
        }
    }
}

#[derive(Clone)]
enum RadialKind {
    Linear { c: f64 },
    SlowStart { sigma: WeaklyAdmissibleComponent, params: SlowStartParams },
}

/// Odd, strictly increasing radial component `ρ` with inverse `ρ_*`.
#[derive(Clone)]
pub struct RadialComponent {
    kind: RadialKind,
}

impl fmt::Debug for RadialComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialComponent({})", self.id())
    }
}

fn odd(x: f64, f: impl Fn(f64) -> f64) -> f64 {
    if x < 0.0 {
        -f(-x)
    } else {
        f(x)
    }
}

impl RadialComponent {
    /// `ρ(ξ) = cξ`; `c = 1` is the identity.
    pub fn linear(c: f64) -> Self {
        Self {
            kind: RadialKind::Linear { c },
        }
    }

    pub fn id(&self) -> String {
        match &self.kind {
            RadialKind::Linear { c } if *c == 1.0 => "identity".into(),
            RadialKind::Linear { c } => format!("linear:{c}"),
            RadialKind::SlowStart { sigma, params } => format!(
                "{}@eps={},c={}",
                sigma.family().id(),
                params.epsilon,
                params.c
            ),
        }
    }

    pub fn family(&self) -> Option<Family> {
        match &self.kind {
            RadialKind::Linear { .. } => None,
            RadialKind::SlowStart { sigma, .. } => Some(sigma.family()),
        }
    }

    pub fn params(&self) -> Option<SlowStartParams> {
        match &self.kind {
            RadialKind::Linear { .. } => None,
            RadialKind::SlowStart { params, .. } => Some(*params),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, RadialKind::Linear { c } if c == 1.0)
    }

    /// Slope `c` of the linear zone.
    pub fn slope(&self) -> f64 {
        match &self.kind {
            RadialKind::Linear { c } => *c,
            RadialKind::SlowStart { params, .. } => params.c,
        }
    }

    /// Beyond this value of `|γ|` the inverse is the closed form `ς_*`.
    pub fn closed_form_threshold(&self) -> f64 {
        match &self.kind {
            RadialKind::Linear { .. } => 0.0,
            RadialKind::SlowStart { sigma, params } => sigma.value(2.0 * params.epsilon),
        }
    }

    /// Radial control profile `u` (`1` for linear components).
    pub fn control_profile(&self) -> RadialFn {
        match &self.kind {
            RadialKind::Linear { .. } => Arc::new(|_| 1.0),
            RadialKind::SlowStart { sigma, .. } => sigma.control_fn(),
        }
    }

    fn value_pos(&self, x: f64) -> f64 {
        match &self.kind {
            RadialKind::Linear { c } => c * x,
            RadialKind::SlowStart { sigma, params } => {
                let om = params.omega(x);
                if om == 1.0 {
                    params.c * x
                } else if om == 0.0 {
                    sigma.value(x)
                } else {
                    params.c * x * om + (1.0 - om) * sigma.value(x)
                }
            }
        }
    }

    fn derivative_pos(&self, x: f64) -> f64 {
        match &self.kind {
            RadialKind::Linear { c } => *c,
            RadialKind::SlowStart { sigma, params } => {
                let eps = params.epsilon;
                if x <= eps {
                    params.c
                } else if x >= 2.0 * eps {
                    sigma.derivative(x)
                } else {
                    let om = params.omega(x);
                    params.c * om
                        + (1.0 - om) * sigma.derivative(x)
                        + params.omega_prime(x) * (params.c * x - sigma.value(x))
                }
            }
        }
    }

    fn inverse_pos(&self, g: f64) -> f64 {
        match &self.kind {
            RadialKind::Linear { c } => g / c,
            RadialKind::SlowStart { sigma, params } => {
                let eps = params.epsilon;
                let lo_val = params.c * eps;
                let hi_val = sigma.value(2.0 * eps);
                if g <= lo_val {
                    return g / params.c;
                }
                if g >= hi_val {
                    return sigma.inverse(g);
                }
                let (mut lo, mut hi) = (eps, 2.0 * eps);
                while hi - lo > 1e-12 * (1.0 + hi) {
                    let mid = 0.5 * (lo + hi);
                    if self.value_pos(mid) < g {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let mut x = 0.5 * (lo + hi);
                for _ in 0..2 {
                    let step = (self.value_pos(x) - g) / self.derivative_pos(x);
                    let next = x - step;
                    if next > eps && next < 2.0 * eps {
                        x = next;
                    }
                }
                x
            }
        }
    }

    fn inverse_derivative_pos(&self, g: f64) -> f64 {
        match &self.kind {
            RadialKind::Linear { c } => 1.0 / c,
            RadialKind::SlowStart { sigma, params } => {
                if g <= params.c * params.epsilon {
                    1.0 / params.c
                } else if g >= sigma.value(2.0 * params.epsilon) {
                    sigma.inverse_derivative(g)
                } else {
                    1.0 / self.derivative_pos(self.inverse_pos(g))
                }
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        odd(x, |v| self.value_pos(v))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.derivative_pos(x.abs())
    }

    pub fn inverse(&self, g: f64) -> f64 {
        odd(g, |v| self.inverse_pos(v))
    }

    pub fn inverse_derivative(&self, g: f64) -> f64 {
        self.inverse_derivative_pos(g.abs())
    }

    /// `ρ_*″` by central differences with `h = 1e-4·(1+|γ|)`.
    pub fn inverse_second_derivative(&self, g: f64) -> f64 {
        let h = 1e-4 * (1.0 + g.abs());
        (self.inverse_derivative(g + h) - self.inverse_derivative(g - h)) / (2.0 * h)
    }

    /// `ρ̃(ξ) = ρ(ξ)/ξ`, continuous at 0.
    pub fn tilde(&self, x: f64) -> f64 {
        if x == 0.0 {
            self.derivative(0.0)
        } else {
            self.value(x) / x
        }
    }

    /// `ρ̃_*(γ) = ρ_*(γ)/γ`, continuous at 0.
    pub fn tilde_inverse(&self, g: f64) -> f64 {
        if g == 0.0 {
            self.inverse_derivative(0.0)
        } else {
            self.inverse(g) / g
        }
    }
}

/// Regularizes `ς` into a radial component, linear on `(-ε, ε)` and equal to
/// `±ς(|ξ|)` for `|ξ| ≥ 2ε`.
pub fn slow_start(sigma: &WeaklyAdmissibleComponent, params: SlowStartParams) -> Result<RadialComponent> {
    params.validate(sigma)?;
    Ok(RadialComponent {
        kind: RadialKind::SlowStart {
            sigma: sigma.clone(),
            params,
        },
    })
}

/// Slow-start component of a named family; `None` selects the default parameters.
pub fn family_component(family: Family, params: Option<SlowStartParams>) -> Result<RadialComponent> {
    let sigma = WeaklyAdmissibleComponent::new(family)?;
    let params = params.unwrap_or_else(|| SlowStartParams::default_for(&sigma));
    slow_start(&sigma, params)
}

fn control_cache() -> &'static Mutex<HashMap<(String, usize), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(String, usize), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Calibration pairs: a fine lattice offset from the standard grid (d = 1), or
/// a polar grid plus seeded random pairs (d ≥ 2), all of radius at most 10.
pub fn calibration_grid(dim: usize) -> PairGrid {
    if dim == 1 {
        let n = 160;
        let axis: Vec<f64> = (0..n).map(|i| -10.0 + 20.0 * (i as f64 + 0.5) / n as f64).collect();
        let mut out = Vec::with_capacity(n * n);
        for &t in &axis {
            for &u in &axis {
                out.push((vec![t], vec![u]));
            }
        }
        return out;
    }
    let (nt, ns, na, nr) = if dim == 2 { (41, 21, 12, 600) } else { (16, 9, 4, 200) };
    let mut out = Vec::new();
    for i in 0..nt {
        let t = 10.0 * i as f64 / (nt - 1) as f64;
        for j in 1..ns {
            let r = 10.0 * j as f64 / (ns - 1) as f64;
            for a in 0..na {
                let ang = std::f64::consts::TAU * a as f64 / na as f64;
                let mut tau = vec![0.0; dim];
                let mut ups = vec![0.0; dim];
                tau[0] = t;
                ups[0] = r * ang.cos();
                ups[1] = r * ang.sin();
                out.push((tau, ups));
            }
        }
    }
    out.extend(pair_grid(dim, 10.0, nr, 1));
    out
}

/// Empirical constant `C ≥ 1` with `‖∂^α φ_τ(υ)‖ ≤ C·shape(|υ|)` for `|α| ≤ d+1`
/// on [`calibration_grid`], inflated by 5 %; cached per map id and dimension.
pub fn calibrated_constant(map: &WarpingMap, shape: &RadialFn) -> Result<f64> {
    let key = (map.id().to_string(), map.dim());
    if let Some(c) = control_cache().lock().expect("cache lock").get(&key) {
        return Ok(*c);
    }
    let order = (map.dim() + 1).min(map.smoothness());
    let c = calibrate_control_constant(map, shape, order, &calibration_grid(map.dim()), 1.05)?;
    control_cache().lock().expect("cache lock").insert(key, c);
    Ok(c)
}

fn radial_shape(rho: &RadialComponent) -> RadialFn {
    let u = rho.control_profile();
    Arc::new(move |t| (1.0 + t) * u(t))
}

fn bare_radial_map(rho: &RadialComponent, dim: usize) -> WarpingMap {
    if rho.is_identity() {
        return WarpingMap::identity(dim);
    }
    let r1 = rho.clone();
    let r2 = rho.clone();
    let r3 = rho.clone();
    let r4 = rho.clone();
    let forward = Arc::new(move |xi: &[f64]| {
        let t = r1.tilde(norm(xi));
        xi.iter().map(|x| t * x).collect::<Vec<f64>>()
    });
    let inverse = Arc::new(move |tau: &[f64]| {
        let t = r2.tilde_inverse(norm(tau));
        tau.iter().map(|x| t * x).collect::<Vec<f64>>()
    });
    let jac = Arc::new(move |tau: &[f64]| {
        let d = tau.len();
        let t = norm(tau);
        let tl = r3.tilde_inverse(t);
        let mut a = DMatrix::identity(d, d) * tl;
        if t > 0.0 {
            let coef = (r3.inverse_derivative(t) - tl) / (t * t);
            for i in 0..d {
                for j in 0..d {
                    a[(i, j)] += coef * tau[i] * tau[j];
                }
            }
        }
        a
    });
    let weight = AssociatedWeight::new(
        Arc::new(move |tau: &[f64]| {
            let t = norm(tau);
            r4.inverse_derivative(t) * r4.tilde_inverse(t).powi(tau.len() as i32 - 1)
        }),
        Some("rho_*'(|t|) * (rho_*(|t|)/|t|)^(d-1)".into()),
    );
    WarpingMap::from_evaluators(rho.id(), dim, forward, inverse, Some(jac))
        .with_weight(weight)
        .with_smoothness(SMOOTH)
        .with_structure(MapStructure::Radial(rho.clone()))
}

/// Radial warping `Φ_ρ(ξ) = ρ̃(|ξ|)·ξ` with `w(τ) = ρ_*′(|τ|)·ρ̃_*(|τ|)^{d-1}` and
/// calibrated control weight `v₀(τ) = C·(1+|τ|)·u(|τ|)`.
pub fn radial_map(rho: &RadialComponent, dim: usize) -> Result<WarpingMap> {
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    if rho.is_identity() {
        return Ok(WarpingMap::identity(dim));
    }
    let shape = radial_shape(rho);
    let bare = bare_radial_map(rho, dim);
    let c = calibrated_constant(&bare, &shape)?;
    let label = match rho.family() {
        Some(Family::Ln) => format!("{c:.4}*(1+|t|)*exp(|t|)"),
        Some(Family::Alpha { alpha }) => {
            format!("{c:.4}*(1+|t|)^(1+{})", (1.0 / (1.0 - alpha) - 1.0).abs())
        }
        None => format!("{c:.4}*(1+|t|)"),
    };
    Ok(bare.with_control(ControlWeight::radial(label, c, shape)))
}

/// Tensor product `Φ₁ ⊗ … ⊗ Φ_N` with block-diagonal `A` and product weight.
pub fn tensor_map(parts: &[WarpingMap]) -> Result<WarpingMap> {
    if parts.is_empty() {
        return invalid("tensor_map needs at least one part");
    }
    let dims: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
    let dim: usize = dims.iter().sum();
    let mut ranges = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for d in &dims {
        ranges.push((acc, acc + d));
        acc += d;
    }
    let id = format!(
        "tensor:{}",
        parts.iter().map(|p| p.id().to_string()).collect::<Vec<_>>().join(",")
    );
    let (pf, sf) = (parts.to_vec(), ranges.clone());
    let forward = Arc::new(move |x: &[f64]| {
        let mut out = Vec::with_capacity(x.len());
        for (p, (a, b)) in pf.iter().zip(sf.iter().copied()) {
            out.extend(p.forward(&x[a..b]));
        }
        out
    });
    let (pi, si) = (parts.to_vec(), ranges.clone());
    let inverse = Arc::new(move |t: &[f64]| {
        let mut out = Vec::with_capacity(t.len());
        for (p, (a, b)) in pi.iter().zip(si.iter().copied()) {
            out.extend(p.inverse(&t[a..b]));
        }
        out
    });
    let (pj, sj) = (parts.to_vec(), ranges.clone());
    let jac = Arc::new(move |t: &[f64]| {
        let mut m = DMatrix::zeros(t.len(), t.len());
        for (p, (a, b)) in pj.iter().zip(sj.iter().copied()) {
            let block = p.jac_inverse(&t[a..b]);
            m.view_mut((a, a), (b - a, b - a)).copy_from(&block);
        }
        m
    });
    let (pw, sw) = (parts.to_vec(), ranges);
    let weight = AssociatedWeight::new(
        Arc::new(move |t: &[f64]| {
            pw.iter()
                .zip(sw.iter().copied())
                .map(|(p, (a, b))| p.weight().eval(&t[a..b]))
                .product()
        }),
        Some("prod_i w_i(t_i)".into()),
    );
    let controls: Vec<ControlWeight> = parts.iter().map(|p| p.control().clone()).collect();
    let smoothness = parts.iter().map(|p| p.smoothness()).min().unwrap_or(0);
    let map = WarpingMap::from_evaluators(id, dim, forward, inverse, Some(jac))
        .with_weight(weight)
        .with_smoothness(smoothness)
        .with_structure(MapStructure::Tensor(parts.to_vec()));
    let max = ControlWeight::max_of(&controls);
    let shape: RadialFn = {
        let max = max.clone();
        Arc::new(move |t| max.eval_radius(t))
    };
    let c = calibrated_constant(&map, &shape)?;
    let label = format!("{c:.4}*{}", max.label());
    Ok(map.with_control(ControlWeight::radial(label, c, shape)))
}

/// `|ρ_*(γ)·ρ_*″(γ) / ρ_*′(γ)²|`.
pub fn besov_curvature_ratio(rho: &RadialComponent, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return invalid(format!("curvature ratio needs γ ≥ 0, got {gamma}"));
    }
    let d1 = rho.inverse_derivative(gamma);
    Ok((rho.inverse(gamma) * rho.inverse_second_derivative(gamma) / (d1 * d1)).abs())
}

/// Max over `ξ ∈ [0, upper]` of `max(ρ₁′/ρ₂′, ρ₂′/ρ₁′)`.
pub fn derivative_ratio_bound(r1: &RadialComponent, r2: &RadialComponent, upper: f64, samples: usize) -> f64 {
    (0..=samples)
        .map(|i| {
            let x = upper * i as f64 / samples as f64;
            let q = r1.derivative(x) / r2.derivative(x);
            q.max(1.0 / q)
        })
        .fold(1.0, f64::max)
}

/// Max over `ξ > 0` and `a ∈ scales` of `max(ρ′(aξ)/ρ′(ξ), ρ′(ξ)/ρ′(aξ))`.
pub fn two_point_scaling(rho: &RadialComponent, scales: &[f64], upper: f64, samples: usize) -> f64 {
    let mut worst = 1.0f64;
    for &a in scales {
        for i in 1..=samples {
            let x = upper * i as f64 / samples as f64;
            let q = rho.derivative(a * x) / rho.derivative(x);
            worst = worst.max(q.max(1.0 / q));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_c02() -> RadialComponent {
        let sigma = WeaklyAdmissibleComponent::new(Family::Ln).unwrap();
        slow_start(&sigma, SlowStartParams { epsilon: 1.0, c: 0.2 }).unwrap()
    }

    #[test]
    fn slow_start_zones() {
        let rho = ln_c02();
        assert!((rho.value(3.0) - 4f64.ln()).abs() < 1e-15);
        assert!((rho.value(0.5) - 0.1).abs() < 1e-15);
        assert!(rho.value(1.0) < rho.value(1.5) && rho.value(1.5) < rho.value(2.0));
        assert_eq!(rho.value(-3.0), -rho.value(3.0));
    }

    #[test]
    fn slope_out_of_range_is_rejected() {
        let sigma = WeaklyAdmissibleComponent::new(Family::Ln).unwrap();
        assert!(slow_start(&sigma, SlowStartParams { epsilon: 1.0, c: 0.35 }).is_err());
        assert!(slow_start(&sigma, SlowStartParams { epsilon: 1.0, c: 0.0 }).is_err());
        assert!(WeaklyAdmissibleComponent::new(Family::Alpha { alpha: 1.0 }).is_err());
    }

    #[test]
    fn inverse_round_trip_in_blend_zone() {
        let rho = ln_c02();
        for i in 0..200 {
            let x = 0.9 + 1.2 * i as f64 / 200.0;
            let back = rho.inverse(rho.value(x));
            assert!((back - x).abs() < 1e-11, "x={x} back={back}");
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let rho = family_component(Family::Alpha { alpha: 0.5 }, None).unwrap();
        for x in [0.3, 1.1, 1.5, 1.9, 4.0] {
            let h = 1e-6;
            let fd = (rho.value(x + h) - rho.value(x - h)) / (2.0 * h);
            assert!((fd - rho.derivative(x)).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn family_closed_forms() {
        let a = WeaklyAdmissibleComponent::new(Family::Alpha { alpha: 0.5 }).unwrap();
        assert!((a.value(3.0) - 1.0).abs() < 1e-15);
        let l = WeaklyAdmissibleComponent::new(Family::Ln).unwrap();
        assert!((l.inverse(4f64.ln()) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn curvature_ratio_limits() {
        let ln = family_component(Family::Ln, None).unwrap();
        let g = ln.closed_form_threshold() + 5.0;
        let r = besov_curvature_ratio(&ln, g).unwrap();
        assert!((r - (1.0 - (-g).exp())).abs() < 1e-6);
        let al = family_component(Family::Alpha { alpha: 0.5 }, None).unwrap();
        let r = besov_curvature_ratio(&al, 1e4).unwrap();
        assert!((r - 0.5).abs() < 1e-3);
    }

    #[test]
    fn omega_is_a_monotone_bump() {
        let p = SlowStartParams { epsilon: 0.7, c: 0.1 };
        let mut prev = 1.0;
        for i in 0..=400 {
            let x = 2.0 * i as f64 / 400.0;
            let o = p.omega(x);
            assert!(o <= prev + 1e-15 && (0.0..=1.0).contains(&o));
            assert!(p.omega_prime(x) <= 0.0);
            assert_eq!(o, p.omega(-x));
            prev = o;
        }
    }
}
