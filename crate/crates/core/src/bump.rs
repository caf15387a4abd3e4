//! Smooth compactly supported bump profiles with tabulated antiderivatives.

use std::sync::Arc;

use crate::error::Result;
use crate::quadrature::{integrate_adaptive, GaussRule};

/// Unnormalized profile `exp(-1/(1-u^2))` on `(-1, 1)`.
pub fn bump_profile(u: f64) -> f64 {
    let s = 1.0 - u * u;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Unit-mass 1-d bump on `[-1, 1]` with a cubic-Hermite antiderivative table.
#[derive(Debug)]
pub struct BumpTable {
    mass: f64,
    l2_sq: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    h: f64,
}

impl BumpTable {
    const INTERVALS: usize = 4096;

    fn build() -> Result<Self> {
        let n = Self::INTERVALS;
        let h = 2.0 / n as f64;
        let mass = integrate_adaptive(bump_profile, -1.0, 1.0, 1e-14)?;
        let l2_sq = integrate_adaptive(|u| bump_profile(u).powi(2), -1.0, 1.0, 1e-14)?;
        let nodes: Vec<f64> = (0..=n).map(|i| -1.0 + h * i as f64).collect();
        let rule = GaussRule::new(16);
        let mut raw = vec![0.0; n + 1];
        for i in 0..n {
            let piece = rule.integrate(nodes[i], nodes[i + 1], bump_profile);
            raw[i + 1] = raw[i] + piece;
        }
        let total = raw[n];
        let mut values: Vec<f64> = raw.iter().map(|v| v / total).collect();
        for i in 0..=n / 2 {
            let j = n - i;
            let sym = 0.5 * (values[i] + 1.0 - values[j]);
            values[i] = sym;
            values[j] = 1.0 - sym;
        }
        values[0] = 0.0;
        values[n] = 1.0;
        values[n / 2] = 0.5;
        Ok(Self {
            mass,
            l2_sq,
            nodes,
            values,
            h,
        })
    }

    /// Shared table (built once).
    pub fn shared() -> Arc<BumpTable> {
        use std::sync::OnceLock;
        static TABLE: OnceLock<Arc<BumpTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| Arc::new(Self::build().expect("bump table quadrature converges")))
            .clone()
    }

    /// `∫_{-1}^{1} profile`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `∫_{-1}^{1} profile^2`.
    pub fn l2_sq(&self) -> f64 {
        self.l2_sq
    }

    /// Normalized density on `[-1, 1]`.
    pub fn density(&self, u: f64) -> f64 {
        bump_profile(u) / self.mass
    }

    /// Cumulative distribution of the normalized density.
    pub fn cdf(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let pos = (u + 1.0) / self.h;
        let i = (pos.floor() as usize).min(self.nodes.len() - 2);
        let s = pos - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let m0 = self.density(self.nodes[i]) * self.h;
        let m1 = self.density(self.nodes[i + 1]) * self.h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1
    }
}

/// Tensor-product bump `scale · ∏ profile(x_i / a)` whose support lies in the
/// closed cube of half-width `a` (hence in the ball of radius `a·√d`).
#[derive(Debug, Clone)]
pub struct TensorBump {
    dim: usize,
    half_width: f64,
    scale: f64,
    table: Arc<BumpTable>,
}

impl TensorBump {
    /// Unit-mass tensor bump supported in the ball of radius `support_radius`.
    pub fn unit_mass(dim: usize, support_radius: f64) -> Self {
        let table = BumpTable::shared();
        let half_width = support_radius / (dim as f64).sqrt();
        let scale = 1.0 / (table.mass() * half_width).powi(dim as i32);
        Self {
            dim,
            half_width,
            scale,
            table,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Per-axis half-width of the support cube.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Radius of a ball containing the support.
    pub fn support_radius(&self) -> f64 {
        self.half_width * (self.dim as f64).sqrt()
    }

    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            scale: self.scale * factor,
            ..self.clone()
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.scale;
        for &xi in x {
            let u = xi / self.half_width;
            if u.abs() >= 1.0 {
                return 0.0;
            }
            v *= bump_profile(u);
        }
        v
    }

    pub fn l1_norm(&self) -> f64 {
        self.scale * (self.table.mass() * self.half_width).powi(self.dim as i32)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.scale.powi(2) * (self.table.l2_sq() * self.half_width).powi(self.dim as i32)
    }

    /// Integral of the unit-mass axis factor over `(-inf, x]`.
    pub fn axis_cdf(&self, x: f64) -> f64 {
        self.table.cdf(x / self.half_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_is_monotone_and_symmetric() {
        let t = BumpTable::shared();
        let mut prev = 0.0;
        for i in 0..=2000 {
            let u = -1.0 + 2.0 * i as f64 / 2000.0;
            let c = t.cdf(u);
            assert!(c >= prev - 1e-15);
            assert!((c + t.cdf(-u) - 1.0).abs() < 1e-12);
            prev = c;
        }
        assert_eq!(t.cdf(0.0), 0.5);
    }

    #[test]
    fn cdf_matches_direct_quadrature() {
        let t = BumpTable::shared();
        for u in [-0.9, -0.31, 0.123, 0.77] {
            let direct = integrate_adaptive(bump_profile, -1.0, u, 1e-14).unwrap() / t.mass();
            assert!((t.cdf(u) - direct).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn tensor_bump_norms() {
        let b = TensorBump::unit_mass(2, 0.5);
        assert!((b.l1_norm() - 1.0).abs() < 1e-14);
        assert!(b.l2_norm_sq() > 0.0);
        assert_eq!(b.eval(&[0.5, 0.0]), 0.0);
    }
}
