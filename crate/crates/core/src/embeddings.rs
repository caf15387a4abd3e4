//! Decision procedures for embeddings and equalities between decomposition-type
//! spaces: the `K_t` criteria, same-covering embeddings, warped-vs-warped
//! equality, Besov/α-modulation/mixed-smoothness identifications.
//!
//! Structural hypotheses (tightness, relative moderateness) are probed on
//! finite windows only; verdicts are labeled accordingly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::map_from_id;
use crate::error::{check_dim, invalid, Error, Result};
use crate::exponent::{half, mixed_conjugate, one, t_exponents, to_f64, to_rational, zero, Exponent, Rational};
use crate::radial_warping::{
    besov_curvature_ratio, family_component, radial_map, two_point_scaling, Family, RadialComponent,
};
use crate::warping_core::{norm, ScalarFn, WarpingMap};

pub const HYPOTHESES_NOTE: &str = "hypotheses probed on finite windows, not proven";

/// Thresholds of the numeric summability mode.
pub const RATE_TOL: f64 = 1e-3;
pub const BOUNDARY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Finite,
    Infinite,
    Undetermined,
}

/// Nonnegative sequence whose `ℓ^s` membership is decided.
#[derive(Debug, Clone, PartialEq)]
pub enum AsymptoticSequence {
    /// `2^{a·|k|}·(1 + |k|)^b` over `k ∈ ℤ^dim` (over `ℕ₀` when `dim = 1`).
    PowerLog { a: Rational, b: Rational, dim: usize },
    /// Samples `x_0, x_1, …` of a one-parameter sequence.
    Sampled { values: Vec<f64> },
}

impl AsymptoticSequence {
    pub fn power_log(a: Rational, b: Rational) -> Self {
        AsymptoticSequence::PowerLog { a, b, dim: 1 }
    }

    /// Samples `x_j = 2^{aj}(1+j)^b`, `j = 0..len`.
    pub fn sample_power_log(a: f64, b: f64, len: usize) -> Self {
        AsymptoticSequence::Sampled {
            values: (0..len).map(|j| (a * j as f64).exp2() * (1.0 + j as f64).powf(b)).collect(),
        }
    }
}

/// Least-squares fit of `log₂ x_j = a·j + b·log₂(1 + j) + c` over the upper
/// three quarters of the positive samples.
pub fn fit_power_log(values: &[f64]) -> Option<(f64, f64)> {
    let start = values.len() / 4;
    let pts: Vec<(f64, f64, f64)> = values
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(j, v)| (j as f64, (1.0 + j as f64).log2(), v.log2()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let mut m = nalgebra::DMatrix::<f64>::zeros(pts.len(), 3);
    let mut y = nalgebra::DVector::<f64>::zeros(pts.len());
    for (i, (j, l, v)) in pts.iter().enumerate() {
        m[(i, 0)] = *j;
        m[(i, 1)] = *l;
        m[(i, 2)] = 1.0;
        y[i] = *v;
    }
    let sol = m.svd(true, true).solve(&y, 1e-12).ok()?;
    Some((sol[0], sol[1]))
}

/// Decides `seq ∈ ℓ^s`. Closed forms are exact; sampled sequences are fitted to
/// the power-log form and reported undetermined near the summability boundary.
pub fn ellq_membership(seq: &AsymptoticSequence, s: Exponent) -> Membership {
    match seq {
        AsymptoticSequence::PowerLog { a, b, dim } => {
            let finite = if *a != zero() {
                *a < zero()
            } else {
                match s {
                    Exponent::Infinite => *b <= zero(),
                    Exponent::Finite(s) => *b * s < Rational::from_integer(-(*dim as i64)),
                }
            };
            if finite {
                Membership::Finite
            } else {
                Membership::Infinite
            }
        }
        AsymptoticSequence::Sampled { values } => {
            if values.iter().all(|v| *v == 0.0) {
                return Membership::Finite;
            }
            let Some((a, b)) = fit_power_log(values) else {
                return Membership::Undetermined;
            };
            if a.abs() >= RATE_TOL {
                return if a < 0.0 { Membership::Finite } else { Membership::Infinite };
            }
            match s {
                Exponent::Infinite => {
                    if b.abs() < 1e-6 || b < -BOUNDARY_TOL {
                        Membership::Finite
                    } else if b > BOUNDARY_TOL {
                        Membership::Infinite
                    } else {
                        Membership::Undetermined
                    }
                }
                Exponent::Finite(s) => {
                    let bs = b * to_f64(s);
                    if (bs + 1.0).abs() < BOUNDARY_TOL {
                        Membership::Undetermined
                    } else if bs < -1.0 {
                        Membership::Finite
                    } else {
                        Membership::Infinite
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Embeds,
    Fails,
    Equal,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSummary {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub exponent: Exponent,
    pub membership: Membership,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVerdict {
    pub space_a: String,
    pub space_b: String,
    pub relation: Relation,
    pub direction: String,
    pub t: Option<f64>,
    pub t_tilde: Option<f64>,
    pub sequence: Option<SequenceSummary>,
    pub citation: String,
    pub note: String,
}

impl EmbeddingVerdict {
    pub fn holds(&self) -> bool {
        matches!(self.relation, Relation::Embeds | Relation::Equal)
    }
}

fn summarize(seq: &AsymptoticSequence, exponent: Exponent, membership: Membership) -> SequenceSummary {
    let (a, b) = match seq {
        AsymptoticSequence::PowerLog { a, b, .. } => (Some(to_f64(*a)), Some(to_f64(*b))),
        AsymptoticSequence::Sampled { values } => match fit_power_log(values) {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        },
    };
    SequenceSummary {
        a,
        b,
        exponent,
        membership,
    }
}

fn relation_of(m: Membership) -> Relation {
    match m {
        Membership::Finite => Relation::Embeds,
        Membership::Infinite => Relation::Fails,
        Membership::Undetermined => Relation::Undetermined,
    }
}

/// `D(Q, L^{p₁}, ℓ^{q₁}_u) ↪ D(Q, L^{p₂}, ℓ^{q₂}_v)` iff `p₁ ≤ p₂` and the
/// sequence `(v_i/u_i)·|det T_i|^{1/p₁ − 1/p₂}` lies in `ℓ^{q₂·(q₁/q₂)′}`.
pub fn embed_same_covering(k_seq: &AsymptoticSequence, p1: Exponent, p2: Exponent, q1: Exponent, q2: Exponent) -> EmbeddingVerdict {
    let exponent = mixed_conjugate(q2, q1);
    let mut v = EmbeddingVerdict {
        space_a: format!("D(Q, L^{p1}, l^{q1}_u)"),
        space_b: format!("D(Q, L^{p2}, l^{q2}_v)"),
        relation: Relation::Fails,
        direction: "a into b".into(),
        t: None,
        t_tilde: None,
        sequence: None,
        citation: "same-covering-embedding".into(),
        note: HYPOTHESES_NOTE.into(),
    };
    if p1.recip() < p2.recip() {
        v.note = format!("p1 = {p1} > p2 = {p2}; {HYPOTHESES_NOTE}");
        return v;
    }
    let m = ellq_membership(k_seq, exponent);
    v.relation = relation_of(m);
    v.sequence = Some(summarize(k_seq, exponent, m));
    v
}

/// Shell aggregates `S_n = ‖(x_k)_{|k|_∞ = n}‖_{ℓ^s}` for `n ≤ radius`; the
/// shell sequence lies in `ℓ^s` iff `x` does.
pub fn shell_sequence(dim: usize, radius: i64, s: Exponent, x: &dyn Fn(&[i64]) -> f64) -> AsymptoticSequence {
    let mut shells = vec![0.0f64; radius as usize + 1];
    let mut k = vec![-radius; dim];
    loop {
        let n = k.iter().map(|v| v.abs()).max().unwrap_or(0) as usize;
        let v = x(&k).abs();
        match s {
            Exponent::Infinite => shells[n] = shells[n].max(v),
            Exponent::Finite(r) => shells[n] += v.powf(to_f64(r)),
        }
        let mut pos = 0;
        while pos < dim {
            k[pos] += 1;
            if k[pos] <= radius {
                break;
            }
            k[pos] = -radius;
            pos += 1;
        }
        if pos == dim {
            break;
        }
    }
    if let Exponent::Finite(r) = s {
        let e = 1.0 / to_f64(r);
        shells.iter_mut().for_each(|v| *v = v.powf(e));
    }
    AsymptoticSequence::Sampled { values: shells }
}

/// Same-map warped embedding `Co(Φ, L^{p₁,q₁}_{κ₁}) ↪ Co(Φ, L^{p₂,q₂}_{κ₂})` via
/// `K_k = κ₂/κ₁(Φ⁻¹(δk))·w(δk)^{(1/p₁ − 1/p₂) − (1/q₁ − 1/q₂)}` sampled on shells.
#[allow(clippy::too_many_arguments)]
pub fn warped_same_map(
    map: &WarpingMap,
    kappa1: ScalarFn,
    kappa2: ScalarFn,
    p1: Exponent,
    p2: Exponent,
    q1: Exponent,
    q2: Exponent,
    delta: f64,
    radius: i64,
) -> EmbeddingVerdict {
    let e = to_f64((p1.recip() - p2.recip()) - (q1.recip() - q2.recip()));
    let exponent = mixed_conjugate(q2, q1);
    let seq = shell_sequence(map.dim(), radius, exponent, &|k| {
        let tau: Vec<f64> = k.iter().map(|&v| delta * v as f64).collect();
        let xi = map.inverse(&tau);
        kappa2(&xi) / kappa1(&xi) * map.weight().eval(&tau).abs().powf(e)
    });
    let mut v = embed_same_covering(&seq, p1, p2, q1, q2);
    v.space_a = format!("Co({}, L^({p1},{q1})_k1)", map.id());
    v.space_b = format!("Co({}, L^({p2},{q2})_k2)", map.id());
    v
}

/// Result of comparing two warping maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    pub map1: String,
    pub map2: String,
    /// `sup ‖DΦ₂(Φ₁⁻¹(τ))·DΦ₁⁻¹(τ)‖` on the probe range (radial: `sup ρ₂′/ρ₁′`).
    pub sup_12: f64,
    pub sup_21: f64,
    pub bounded_12: bool,
    pub bounded_21: bool,
    pub equal: bool,
    /// Which covering is almost subordinate to which, when exactly one direction is bounded.
    pub subordinate: Option<String>,
    pub method: String,
    pub citation: String,
}

/// Least-squares slope of `ln y` against `ln(1 + x)`.
fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (u, v) = ((1.0 + x).ln(), y.ln());
        sx += u;
        sy += v;
        sxx += u * u;
        sxy += u * v;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Growth-slope threshold above which a sampled ratio counts as unbounded.
pub const GROWTH_SLOPE: f64 = 0.05;

/// Radial shortcut: `ρ₁′ ≍ ρ₂′` on `[0, upper]`, with boundedness of each
/// ratio decided by its log-log slope over the upper decade.
pub fn radial_equality(r1: &RadialComponent, r2: &RadialComponent, upper: f64, samples: usize) -> (f64, f64, bool, bool) {
    let xs: Vec<f64> = (0..=samples).map(|i| upper * i as f64 / samples as f64).collect();
    let r21: Vec<(f64, f64)> = xs.iter().map(|&x| (x, r2.derivative(x) / r1.derivative(x))).collect();
    let sup21 = r21.iter().map(|p| p.1).fold(0.0, f64::max);
    let sup12 = r21.iter().map(|p| 1.0 / p.1).fold(0.0, f64::max);
    let tail: Vec<(f64, f64)> = r21.iter().copied().filter(|p| p.0 >= upper / 10.0).collect();
    let slope = log_slope(&tail);
    (sup21, sup12, slope <= GROWTH_SLOPE, -slope <= GROWTH_SLOPE)
}

/// Decides `Co(Φ₁, ·) = Co(Φ₂, ·)` through boundedness of
/// `‖DΦ_{3−j}(Φ_j⁻¹(τ))·DΦ_j⁻¹(τ)‖`, `j = 1, 2`.
pub fn equality_check(map1: &WarpingMap, map2: &WarpingMap) -> Result<EqualityReport> {
    check_dim(map1.dim(), map2.dim())?;
    let mut rep = EqualityReport {
        map1: map1.id().to_string(),
        map2: map2.id().to_string(),
        sup_12: 1.0,
        sup_21: 1.0,
        bounded_12: true,
        bounded_21: true,
        equal: true,
        subordinate: None,
        method: "identical".into(),
        citation: "warped-equality".into(),
    };
    if map1.same_map(map2) {
        return Ok(rep);
    }
    if let (Some(r1), Some(r2)) = (map1.radial_component(), map2.radial_component()) {
        let (s12, s21, b12, b21) = radial_equality(&r1, &r2, 100.0, 2000);
        rep.sup_12 = s12;
        rep.sup_21 = s21;
        rep.bounded_12 = b12;
        rep.bounded_21 = b21;
        rep.method = "radial-derivative-ratio".into();
    } else {
        let d = map1.dim();
        let probe = |a: &WarpingMap, b: &WarpingMap, lo: f64, hi: f64| -> Result<f64> {
            let mut worst = 0.0f64;
            for u in crate::covering::sphere_directions(d, 24) {
                for i in 0..=20 {
                    let r = lo + (hi - lo) * i as f64 / 20.0;
                    let tau: Vec<f64> = u.iter().map(|x| x * r).collect();
                    let m = b.jac_forward(&a.inverse(&tau))? * a.jac_inverse(&tau);
                    worst = worst.max(crate::numdiff::spectral_norm(&m));
                }
            }
            Ok(worst)
        };
        for (a, b, sup, bounded) in [
            (map1, map2, &mut rep.sup_12, &mut rep.bounded_12),
            (map2, map1, &mut rep.sup_21, &mut rep.bounded_21),
        ] {
            let inner = probe(a, b, 0.0, 5.0)?;
            let outer = probe(a, b, 5.0, 10.0)?;
            *sup = inner.max(outer);
            *bounded = outer <= 1.5 * inner;
        }
        rep.method = "jacobian-product".into();
    }
    rep.equal = rep.bounded_12 && rep.bounded_21;
    rep.subordinate = match (rep.bounded_12, rep.bounded_21) {
        (true, false) => Some(format!("covering of {} is almost subordinate to covering of {}", rep.map1, rep.map2)),
        (false, true) => Some(format!("covering of {} is almost subordinate to covering of {}", rep.map2, rep.map1)),
        _ => None,
    };
    Ok(rep)
}

/// Evaluable weight with a descriptive label.
#[derive(Clone)]
pub struct LabeledWeight {
    pub label: String,
    pub eval: ScalarFn,
}

impl fmt::Debug for LabeledWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Two-sided sandwich between warped coorbit spaces of two radial maps.
#[derive(Debug, Clone)]
pub struct RadialSandwich {
    pub t: Rational,
    pub t_tilde: Rational,
    pub derivative_bound: f64,
    pub scaling_bound: f64,
    /// `κ_{ρ₁,ρ₂,−t̃}`.
    pub lower: LabeledWeight,
    /// `κ_{ρ₁,ρ₂,t}`.
    pub upper: LabeledWeight,
    pub chain: Vec<String>,
}

/// `Co(Φ_{ρ₁}, L^{p,q}_{κ_{−t̃}}) ↪ Co(Φ_{ρ₂}, L^{p,q}_κ) ↪ Co(Φ_{ρ₁}, L^{p,q}_{κ_t})` with
/// `κ_{ρ₁,ρ₂,t} = κ·[(w₂∘Φ_{ρ₂}) / (w₁∘Φ_{ρ₁})]^{1/q − 1/2 − t}`. Requires `ρ₂′ ≤ Cρ₁′`
/// and the two-point scaling bound for `ρ₁`, both probed.
pub fn radial_embedding(
    r1: &RadialComponent,
    r2: &RadialComponent,
    dim: usize,
    kappa: LabeledWeight,
    p: Exponent,
    q: Exponent,
) -> Result<RadialSandwich> {
    let (sup21, _, bounded21, _) = radial_equality(r1, r2, 100.0, 2000);
    if !bounded21 {
        return Err(Error::HypothesisFailed(format!(
            "derivative of {} is not dominated by derivative of {}",
            r2.id(),
            r1.id()
        )));
    }
    let scaling = two_point_scaling(r1, &[2.0, 4.0], 100.0, 400);
    if !(scaling.is_finite() && scaling < 1e6) {
        return Err(Error::HypothesisFailed(format!("two-point scaling bound for {} is {scaling}", r1.id())));
    }
    let (t, tt) = t_exponents(p, p, q, q);
    let m1 = radial_map(r1, dim)?;
    let m2 = radial_map(r2, dim)?;
    let base = q.recip() - half();
    let make = |shift: Rational, name: &str| {
        let e = to_f64(base - shift);
        let (m1, m2, k) = (m1.clone(), m2.clone(), kappa.eval.clone());
        LabeledWeight {
            label: format!("{}*[w2(P2)/w1(P1)]^({})[{name}]", kappa.label, base - shift),
            eval: Arc::new(move |xi: &[f64]| {
                let ratio = m2.weight().eval(&m2.forward(xi)) / m1.weight().eval(&m1.forward(xi));
                k(xi) * if e == 0.0 { 1.0 } else { ratio.abs().powf(e) }
            }),
        }
    };
    let lower = make(-tt, "-t~");
    let upper = make(t, "t");
    let chain = vec![
        format!("Co({}, L^({p},{q})_{})", r1.id(), lower.label),
        format!("Co({}, L^({p},{q})_{})", r2.id(), kappa.label),
        format!("Co({}, L^({p},{q})_{})", r1.id(), upper.label),
    ];
    Ok(RadialSandwich {
        t,
        t_tilde: tt,
        derivative_bound: sup21,
        scaling_bound: scaling,
        lower,
        upper,
        chain,
    })
}

/// Weight families for warped spaces, described by their power-log growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KappaSpec {
    One,
    /// `(1 + |ξ|)^s`.
    Power { s: f64 },
    /// `(1 + |ξ|)^{s + d(1/2 − 1/q)}`.
    BesovId { s: f64 },
    /// `(1 + |ξ|)^{s + d(1/2 − 1/q)}·(1 + ln(1 + |ξ|))^{(1−d)(1/2 − 1/q)}`.
    BesovIdLog { s: f64 },
    /// `∏(1 + |ξ_i|)^{e_i}`.
    Product { exponents: Vec<f64> },
}

impl KappaSpec {
    /// `(a, b)` with `κ(ξ) ≍ 2^{aj}(1+j)^b` on `|ξ| ≍ 2^j`.
    pub fn growth(&self, dim: usize, q: Exponent) -> Result<(Rational, Rational)> {
        let d = Rational::from_integer(dim as i64);
        let h = half() - q.recip();
        Ok(match self {
            KappaSpec::One => (zero(), zero()),
            KappaSpec::Power { s } => (to_rational(*s)?, zero()),
            KappaSpec::BesovId { s } => (to_rational(*s)? + d * h, zero()),
            KappaSpec::BesovIdLog { s } => (to_rational(*s)? + d * h, (one() - d) * h),
            KappaSpec::Product { .. } => {
                return Err(Error::Unsupported("product weights have no radial growth rate".into()));
            }
        })
    }

    pub fn evaluator(&self, dim: usize, q: Exponent) -> ScalarFn {
        let h = 0.5 - q.recip_f64();
        let d = dim as f64;
        match self.clone() {
            KappaSpec::One => Arc::new(|_| 1.0),
            KappaSpec::Power { s } => Arc::new(move |xi| (1.0 + norm(xi)).powf(s)),
            KappaSpec::BesovId { s } => Arc::new(move |xi| (1.0 + norm(xi)).powf(s + d * h)),
            KappaSpec::BesovIdLog { s } => Arc::new(move |xi| {
                let r = norm(xi);
                (1.0 + r).powf(s + d * h) * (1.0 + (1.0 + r).ln()).powf((1.0 - d) * h)
            }),
            KappaSpec::Product { exponents } => {
                Arc::new(move |xi| xi.iter().zip(&exponents).map(|(x, e)| (1.0 + x.abs()).powf(*e)).product())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            KappaSpec::One => "1".into(),
            KappaSpec::Power { s } => format!("(1+|xi|)^{s}"),
            KappaSpec::BesovId { s } => format!("kappa^({s},q)"),
            KappaSpec::BesovIdLog { s } => format!("kappa^(1,{s},q)"),
            KappaSpec::Product { exponents } => format!("prod(1+|xi_i|)^{exponents:?}"),
        }
    }
}

trait RecipF64 {
    fn recip_f64(&self) -> f64;
}

impl RecipF64 for Exponent {
    fn recip_f64(&self) -> f64 {
        to_f64(self.recip())
    }
}

/// Space descriptors accepted by [`embed_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceDescriptor {
    Warped {
        map: String,
        dim: usize,
        kappa: KappaSpec,
        p: Exponent,
        q: Exponent,
    },
    Besov {
        s: f64,
        p: Exponent,
        q: Exponent,
        dim: usize,
    },
    AlphaMod {
        alpha: f64,
        s: f64,
        p: Exponent,
        q: Exponent,
        dim: usize,
    },
    Mixed {
        s: Vec<f64>,
        p: Exponent,
        q: Exponent,
    },
}

impl SpaceDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            SpaceDescriptor::Warped { dim, .. }
            | SpaceDescriptor::Besov { dim, .. }
            | SpaceDescriptor::AlphaMod { dim, .. } => *dim,
            SpaceDescriptor::Mixed { s, .. } => s.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return invalid("space dimension must be positive");
        }
        if let SpaceDescriptor::AlphaMod { alpha, .. } = self {
            if !(*alpha <= 1.0) {
                return invalid(format!("alpha must be at most 1, got {alpha}"));
            }
        }
        if let SpaceDescriptor::Warped { map, dim, .. } = self {
            map_from_id(map, *dim)?;
        }
        Ok(())
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceDescriptor::Warped { map, dim, kappa, p, q } => {
                write!(f, "Co({map}, d={dim}, L^({p},{q})_{})", kappa.label())
            }
            SpaceDescriptor::Besov { s, p, q, dim } => write!(f, "B^({p},{q})_{s}(R^{dim})"),
            SpaceDescriptor::AlphaMod { alpha, s, p, q, dim } => write!(f, "M^({s},{alpha})_({p},{q})(R^{dim})"),
            SpaceDescriptor::Mixed { s, p, q } => write!(f, "S^{s:?}_({p},{q})B(R^{})", s.len()),
        }
    }
}

/// `(a, b)` with `γ_j = ρ_*′(ρ(2^j))·(2^j/ρ(2^j))^{d−1} ≍ 2^{aj}(1+j)^b`.
pub fn gamma_rate(family: Family, dim: usize) -> Result<(Rational, Rational)> {
    let d = Rational::from_integer(dim as i64);
    Ok(match family {
        Family::Ln => (d, one() - d),
        Family::Alpha { alpha } => (to_rational(alpha)? * d, zero()),
    })
}

/// Both directions between a radially warped coorbit space and a Besov space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovComparison {
    pub co_into_besov: EmbeddingVerdict,
    pub besov_into_co: EmbeddingVerdict,
    pub relation: Relation,
    pub curvature_bound: f64,
}

/// Compares `Co(Φ_ρ, L^{p₁,q₁}_κ)` with `B^{p₂,q₂}_{s₂}(ℝ^d)` for a catalog family.
#[allow(clippy::too_many_arguments)]
pub fn besov_vs_warped(
    family: Family,
    dim: usize,
    kappa: &KappaSpec,
    p1: Exponent,
    q1: Exponent,
    s2: f64,
    p2: Exponent,
    q2: Exponent,
) -> Result<BesovComparison> {
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    let rho = family_component(family, None)?;
    let r = rho.closed_form_threshold().max(1.0);
    let curvature = (0..=40)
        .map(|i| besov_curvature_ratio(&rho, r + 0.5 * i as f64))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if !(curvature.is_finite() && curvature <= 10.0) {
        return Err(Error::HypothesisFailed(format!("curvature ratio of {} reaches {curvature}", rho.id())));
    }
    let (ga, gb) = gamma_rate(family, dim)?;
    let (ka, kb) = kappa.growth(dim, q1)?;
    let s2r = to_rational(s2)?;
    let d = Rational::from_integer(dim as i64);
    let co = SpaceDescriptor::Warped {
        map: family.id(),
        dim,
        kappa: kappa.clone(),
        p: p1,
        q: q1,
    }
    .to_string();
    let be = SpaceDescriptor::Besov { s: s2, p: p2, q: q2, dim }.to_string();

    let (t, tt) = t_exponents(p2, p2, q1, q1);
    let tt_into = t_exponents(p1, p2, q1, q2).1;
    let t_from = t_exponents(p2, p1, q2, q1).0;
    let _ = (t, tt);

    let e = p1.recip() - p2.recip() - tt_into + half() - q1.recip();
    let seq1 = AsymptoticSequence::power_log(s2r - ka + d * tt_into + ga * e, -kb + gb * e);
    let x1 = mixed_conjugate(q2, q1);
    let m1 = ellq_membership(&seq1, x1);
    let co_into_besov = EmbeddingVerdict {
        space_a: co.clone(),
        space_b: be.clone(),
        relation: if p1.recip() < p2.recip() { Relation::Fails } else { relation_of(m1) },
        direction: "warped into besov".into(),
        t: None,
        t_tilde: Some(to_f64(tt_into)),
        sequence: Some(summarize(&seq1, x1, m1)),
        citation: "besov-radial-embedding".into(),
        note: HYPOTHESES_NOTE.into(),
    };

    let e2 = p2.recip() - p1.recip() - t_from + q1.recip() - half();
    let seq2 = AsymptoticSequence::power_log(ka - s2r + d * t_from + ga * e2, kb + gb * e2);
    let x2 = mixed_conjugate(q1, q2);
    let m2 = ellq_membership(&seq2, x2);
    let besov_into_co = EmbeddingVerdict {
        space_a: be,
        space_b: co,
        relation: if p2.recip() < p1.recip() { Relation::Fails } else { relation_of(m2) },
        direction: "besov into warped".into(),
        t: Some(to_f64(t_from)),
        t_tilde: None,
        sequence: Some(summarize(&seq2, x2, m2)),
        citation: "besov-radial-embedding".into(),
        note: HYPOTHESES_NOTE.into(),
    };
    let relation = match (co_into_besov.relation, besov_into_co.relation) {
        (Relation::Embeds, Relation::Embeds) => Relation::Equal,
        (Relation::Undetermined, _) | (_, Relation::Undetermined) => Relation::Undetermined,
        (Relation::Embeds, _) | (_, Relation::Embeds) => Relation::Embeds,
        _ => Relation::Fails,
    };
    Ok(BesovComparison {
        co_into_besov,
        besov_into_co,
        relation,
        curvature_bound: curvature,
    })
}

/// `Co(Φ_{ρ₁}, L^{p,q}_{κ^{(s,q)}})` against `B^{p,q}_s(ℝ^d)` with the ln family.
pub fn besov_identification(dim: usize, s: f64, p: Exponent, q: Exponent) -> Result<BesovComparison> {
    besov_vs_warped(Family::Ln, dim, &KappaSpec::BesovId { s }, p, q, s, p, q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub dim: usize,
    pub p: Exponent,
    pub q: Exponent,
    pub besov_into_co: bool,
    pub co_into_besov: bool,
}

/// Verdicts of [`besov_identification`] over `d ∈ {1, 2}`, `p ∈ {1, 2, 3}`, `q ∈ {1, 2, ∞}`.
pub fn besov_truth_table(s: f64) -> Result<Vec<TruthRow>> {
    let mut rows = Vec::new();
    for dim in [1, 2] {
        for p in [Exponent::int(1), Exponent::int(2), Exponent::int(3)] {
            for q in [Exponent::int(1), Exponent::int(2), Exponent::Infinite] {
                let c = besov_identification(dim, s, p, q)?;
                rows.push(TruthRow {
                    dim,
                    p,
                    q,
                    besov_into_co: c.besov_into_co.holds(),
                    co_into_besov: c.co_into_besov.holds(),
                });
            }
        }
    }
    Ok(rows)
}

/// Warped form of `M^{s,α}_{p,q}(ℝ^d)`.
#[derive(Clone)]
pub struct AlphaIdentification {
    pub map_id: String,
    /// `γ = s − dα(1/q − 1/2)`.
    pub gamma: f64,
    pub descriptor: SpaceDescriptor,
    pub kappa: ScalarFn,
}

pub fn identify_alpha_modulation(alpha: f64, s: f64, p: Exponent, q: Exponent, dim: usize) -> Result<AlphaIdentification> {
    if !(alpha < 1.0) {
        return invalid(format!(
            "alpha must be below 1 for warped identification, got {alpha} (alpha = 1 is the Besov case)"
        ));
    }
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    let gamma = s - dim as f64 * alpha * (q.recip_f64() - 0.5);
    let map_id = format!("alpha:{alpha}");
    map_from_id(&map_id, dim)?;
    Ok(AlphaIdentification {
        descriptor: SpaceDescriptor::Warped {
            map: map_id.clone(),
            dim,
            kappa: KappaSpec::Power { s: gamma },
            p,
            q,
        },
        map_id,
        gamma,
        kappa: Arc::new(move |xi| (1.0 + norm(xi)).powf(gamma)),
    })
}

/// Warped form of `S^s_{p,q}B(ℝ^d)`: tensor ln map and `κ(ξ) = ∏(1 + |ξ_i|)^{s_i + 1/2 − 1/q}`.
#[derive(Clone)]
pub struct MixedIdentification {
    pub map_id: String,
    pub exponents: Vec<f64>,
    pub descriptor: SpaceDescriptor,
    pub kappa: ScalarFn,
}

pub fn identify_mixed_smoothness(s: &[f64], p: Exponent, q: Exponent) -> Result<MixedIdentification> {
    if s.is_empty() {
        return invalid("smoothness vector must be nonempty");
    }
    let h = 0.5 - q.recip_f64();
    let exponents: Vec<f64> = s.iter().map(|si| si + h).collect();
    let map_id = if s.len() == 1 {
        "ln".to_string()
    } else {
        format!("tensor:{}", vec!["ln"; s.len()].join(","))
    };
    let kappa = KappaSpec::Product {
        exponents: exponents.clone(),
    };
    Ok(MixedIdentification {
        descriptor: SpaceDescriptor::Warped {
            map: map_id.clone(),
            dim: s.len(),
            kappa: kappa.clone(),
            p,
            q,
        },
        map_id,
        exponents,
        kappa: kappa.evaluator(s.len(), q),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummabilityStatus {
    Finite,
    ConditionViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub status: SummabilityStatus,
    pub window: usize,
    pub partial_sum: f64,
    /// Upper bound for the sum over `‖ℓ‖_∞ > window`.
    pub tail_bound: f64,
    /// Geometric extrapolation from the last two shells.
    pub extrapolated_tail: f64,
    pub shells: Vec<f64>,
}

/// Partial sums of `w_ℓ = |det S_ℓ|^{1/p}·[inf_{ξ ∈ B_{d,ℓ*}} (1 + |ξ|)]^{−N}` over
/// `ℓ ∈ ℕ₀^d` with `‖ℓ‖_∞ ≤ window`, where `S_ℓ = diag(2^{ℓ_i})` and the infimum
/// over the product of neighboring dyadic annuli is `1 + |(m_i)|` with
/// `m_i = 2^{ℓ_i − 2}` for `ℓ_i ≥ 2` and `0` otherwise.
pub fn mixed_weight_summability(n: f64, p: Exponent, dim: usize, window: usize) -> Result<SummabilityReport> {
    if dim == 0 || window < 2 {
        return invalid("need d >= 1 and a window of at least 2");
    }
    let dp = dim as f64 * p.recip_f64();
    let mut rep = SummabilityReport {
        status: SummabilityStatus::ConditionViolated,
        window,
        partial_sum: f64::NAN,
        tail_bound: f64::INFINITY,
        extrapolated_tail: f64::INFINITY,
        shells: Vec::new(),
    };
    if n <= dp {
        return Ok(rep);
    }
    let ip = p.recip_f64();
    let m = |l: i64| if l >= 2 { (l as f64 - 2.0).exp2() } else { 0.0 };
    let mut shells = vec![0.0f64; window + 1];
    let mut l = vec![0i64; dim];
    loop {
        let sum1: i64 = l.iter().sum();
        let inf = 1.0 + l.iter().map(|&v| m(v).powi(2)).sum::<f64>().sqrt();
        let w = (sum1 as f64 * ip).exp2() * inf.powf(-n);
        shells[*l.iter().max().unwrap() as usize] += w;
        let mut pos = 0;
        while pos < dim {
            l[pos] += 1;
            if l[pos] <= window as i64 {
                break;
            }
            l[pos] = 0;
            pos += 1;
        }
        if pos == dim {
            break;
        }
    }
    rep.partial_sum = shells.iter().sum();
    // Shell k > window: at most d(k+1)^{d−1} terms, each ≤ 2^{k·d/p}·(1 + 2^{k−2})^{−N} ≤ 2^{2N}·2^{(d/p − N)k}.
    let rate = dp - n;
    rep.tail_bound = (window + 1..window + 2000)
        .map(|k| dim as f64 * (k as f64 + 1.0).powi(dim as i32 - 1) * (2.0 * n + rate * k as f64).exp2())
        .sum();
    let ratio = shells[window] / shells[window - 1];
    rep.extrapolated_tail = if ratio < 1.0 {
        shells[window] * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    rep.shells = shells;
    rep.status = SummabilityStatus::Finite;
    Ok(rep)
}

/// Closeness chains between the ln-warped coorbit spaces, Besov and α-modulation spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovAlphaSandwich {
    pub t: f64,
    pub t_tilde: f64,
    /// `T = t·d(1 − α)`.
    pub big_t: f64,
    /// `T̃ = t̃·d(1 − α) ≥ 0`.
    pub big_t_tilde: f64,
    pub besov_chain: Vec<String>,
    pub besov_equal: bool,
    pub alpha_chain: Vec<String>,
    pub weight: String,
}

pub fn besov_alpha_sandwich(alpha: f64, s: f64, p: Exponent, q: Exponent, dim: usize, epsilon: f64) -> Result<BesovAlphaSandwich> {
    if !(epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    if !(alpha < 1.0) {
        return invalid(format!("alpha must be below 1, got {alpha}"));
    }
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    let (t, tt) = t_exponents(p, p, q, q);
    let (t, tt) = (to_f64(t), to_f64(tt));
    let f = dim as f64 * (1.0 - alpha);
    let (big_t, big_tt) = (t * f, tt * f);
    let besov_equal = dim == 1 || (p == Exponent::int(2) && q == Exponent::int(2));
    let co = |s: f64| format!("Co(ln, L^({p},{q})_kappa^({s},q))");
    let besov = format!("B^({p},{q})_{s}(R^{dim})");
    let besov_chain = if besov_equal {
        vec![co(s), "=".into(), besov]
    } else {
        vec![co(s + epsilon), "<-".into(), besov, "<-".into(), co(s - epsilon)]
    };
    let weight = format!("kappa^(1,{s},{dim},q)");
    let alpha_chain = vec![
        format!("M^({},{alpha})_({p},{q})(R^{dim})", s + big_tt),
        "<-".into(),
        format!("Co(ln, L^({p},{q})_{weight})"),
        "<-".into(),
        format!("M^({},{alpha})_({p},{q})(R^{dim})", s - big_t),
    ];
    Ok(BesovAlphaSandwich {
        t,
        t_tilde: tt,
        big_t,
        big_t_tilde: big_tt,
        besov_chain,
        besov_equal,
        alpha_chain,
        weight,
    })
}

/// Dispatches a pair of space descriptors to the matching decision procedure
/// and reports whether `a ↪ b`, `b ↪ a` or both.
pub fn embed_check(a: &SpaceDescriptor, b: &SpaceDescriptor) -> Result<EmbeddingVerdict> {
    a.validate()?;
    b.validate()?;
    check_dim(a.dim(), b.dim())?;
    match (a, b) {
        (SpaceDescriptor::Besov { .. }, SpaceDescriptor::Warped { .. }) => {
            let mut v = embed_check(b, a)?;
            std::mem::swap(&mut v.space_a, &mut v.space_b);
            v.direction = match v.direction.as_str() {
                "a into b" => "b into a".into(),
                "b into a" => "a into b".into(),
                other => other.into(),
            };
            Ok(v)
        }
        (SpaceDescriptor::Warped { map, dim, kappa, p, q }, SpaceDescriptor::Besov { s, p: p2, q: q2, .. }) => {
            let family = match map_from_id(map, *dim)?.radial_component().and_then(|r| r.family()) {
                Some(f) => f,
                None => return Err(Error::Unsupported(format!("Besov comparison needs a radial catalog map, got {map}"))),
            };
            let c = besov_vs_warped(family, *dim, kappa, *p, *q, *s, *p2, *q2)?;
            Ok(combine(a, b, c.co_into_besov, c.besov_into_co, "besov-radial-embedding"))
        }
        (
            SpaceDescriptor::Warped { map: m1, dim, kappa: k1, p: p1, q: q1 },
            SpaceDescriptor::Warped { map: m2, kappa: k2, p: p2, q: q2, .. },
        ) => {
            let map1 = map_from_id(m1, *dim)?;
            let map2 = map_from_id(m2, *dim)?;
            if !map1.same_map(&map2) {
                let eq = equality_check(&map1, &map2)?;
                if !eq.equal {
                    return Err(Error::Unsupported(format!(
                        "warped spaces over inequivalent maps {m1} and {m2} are compared by radial_embedding"
                    )));
                }
            }
            let (e1, e2) = (k1.evaluator(*dim, *q1), k2.evaluator(*dim, *q2));
            let ab = warped_same_map(&map1, e1.clone(), e2.clone(), *p1, *p2, *q1, *q2, 1.0, if *dim == 1 { 400 } else { 40 });
            let ba = warped_same_map(&map1, e2, e1, *p2, *p1, *q2, *q1, 1.0, if *dim == 1 { 400 } else { 40 });
            Ok(combine(a, b, ab, ba, "same-covering-embedding"))
        }
        (SpaceDescriptor::AlphaMod { alpha, s, p, q, dim }, other) | (other, SpaceDescriptor::AlphaMod { alpha, s, p, q, dim }) => {
            if *alpha == 1.0 {
                let besov = SpaceDescriptor::Besov { s: *s, p: *p, q: *q, dim: *dim };
                return embed_check(&besov, other);
            }
            let id = identify_alpha_modulation(*alpha, *s, *p, *q, *dim)?;
            let (x, y) = if matches!(a, SpaceDescriptor::AlphaMod { .. }) {
                (id.descriptor, other.clone())
            } else {
                (other.clone(), id.descriptor)
            };
            let mut v = embed_check(&x, &y)?;
            v.space_a = a.to_string();
            v.space_b = b.to_string();
            v.citation = format!("alpha-identification+{}", v.citation);
            Ok(v)
        }
        (SpaceDescriptor::Mixed { s, p, q }, other) | (other, SpaceDescriptor::Mixed { s, p, q }) => {
            let id = identify_mixed_smoothness(s, *p, *q)?;
            let (x, y) = if matches!(a, SpaceDescriptor::Mixed { .. }) {
                (id.descriptor, other.clone())
            } else {
                (other.clone(), id.descriptor)
            };
            let mut v = embed_check(&x, &y)?;
            v.space_a = a.to_string();
            v.space_b = b.to_string();
            v.citation = format!("mixed-identification+{}", v.citation);
            Ok(v)
        }
        (SpaceDescriptor::Besov { .. }, SpaceDescriptor::Besov { .. }) => {
            Err(Error::Unsupported("Besov-to-Besov embeddings are outside this checker".into()))
        }
    }
}

fn combine(a: &SpaceDescriptor, b: &SpaceDescriptor, ab: EmbeddingVerdict, ba: EmbeddingVerdict, citation: &str) -> EmbeddingVerdict {
    let (relation, direction, pick) = match (ab.relation, ba.relation) {
        (Relation::Embeds, Relation::Embeds) => (Relation::Equal, "both", &ab),
        (Relation::Embeds, _) => (Relation::Embeds, "a into b", &ab),
        (_, Relation::Embeds) => (Relation::Embeds, "b into a", &ba),
        (Relation::Undetermined, _) | (_, Relation::Undetermined) => (Relation::Undetermined, "none decided", &ab),
        _ => (Relation::Fails, "neither", &ab),
    };
    EmbeddingVerdict {
        space_a: a.to_string(),
        space_b: b.to_string(),
        relation,
        direction: direction.into(),
        t: ab.t.or(ba.t),
        t_tilde: ab.t_tilde.or(ba.t_tilde),
        sequence: pick.sequence.clone(),
        citation: citation.into(),
        note: HYPOTHESES_NOTE.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::rat;

    #[test]
    fn power_log_membership() {
        let inf = Exponent::Infinite;
        assert_eq!(ellq_membership(&AsymptoticSequence::power_log(rat(-1, 1), zero()), Exponent::int(1)), Membership::Finite);
        assert_eq!(ellq_membership(&AsymptoticSequence::power_log(zero(), zero()), inf), Membership::Finite);
        assert_eq!(ellq_membership(&AsymptoticSequence::power_log(zero(), half()), inf), Membership::Infinite);
        assert_eq!(ellq_membership(&AsymptoticSequence::power_log(zero(), rat(-1, 1)), Exponent::int(1)), Membership::Infinite);
        let two_d = AsymptoticSequence::PowerLog { a: zero(), b: rat(-3, 2), dim: 2 };
        assert_eq!(ellq_membership(&two_d, Exponent::int(2)), Membership::Finite);
    }

    #[test]
    fn numeric_boundary_is_undetermined() {
        let s = AsymptoticSequence::sample_power_log(0.0, -1.0, 400);
        assert_eq!(ellq_membership(&s, Exponent::int(1)), Membership::Undetermined);
        let s = AsymptoticSequence::sample_power_log(0.0, -1.5, 400);
        assert_eq!(ellq_membership(&s, Exponent::int(1)), Membership::Finite);
    }

    #[test]
    fn same_covering_reflexive_and_p_order() {
        let one_seq = AsymptoticSequence::power_log(zero(), zero());
        let (p, q) = (Exponent::int(2), Exponent::int(3));
        assert_eq!(embed_same_covering(&one_seq, p, p, q, q).relation, Relation::Embeds);
        assert_eq!(embed_same_covering(&one_seq, Exponent::int(3), Exponent::int(2), q, q).relation, Relation::Fails);
    }

    #[test]
    fn alpha_and_mixed_weights() {
        let a = identify_alpha_modulation(0.5, 1.0, Exponent::int(2), Exponent::int(1), 2).unwrap();
        assert!((a.gamma - 0.5).abs() < 1e-15);
        assert!(identify_alpha_modulation(1.2, 1.0, Exponent::int(2), Exponent::int(1), 2).is_err());
        let m = identify_mixed_smoothness(&[1.0, 2.0], Exponent::int(2), Exponent::int(1)).unwrap();
        assert!(((m.kappa)(&[1.0, 3.0]) - 2f64.powf(0.5) * 4f64.powf(1.5)).abs() < 1e-10);
        let m = identify_mixed_smoothness(&[1.0, 2.0], Exponent::int(2), Exponent::Infinite).unwrap();
        assert!(((m.kappa)(&[1.0, 3.0]) - 90.50966799187809).abs() < 1e-10);
        assert_eq!(m.map_id, "tensor:ln,ln");
    }

    #[test]
    fn sandwich_shifts() {
        let sw = besov_alpha_sandwich(0.5, 0.0, Exponent::int(1), Exponent::Infinite, 2, 0.1).unwrap();
        assert_eq!(sw.t_tilde, 1.0);
        assert_eq!(sw.big_t_tilde, 1.0);
        let sw = besov_alpha_sandwich(0.5, 0.0, Exponent::int(2), Exponent::int(2), 2, 0.1).unwrap();
        assert_eq!((sw.big_t, sw.big_t_tilde), (0.0, 0.0));
        assert!(sw.besov_equal);
    }
}
