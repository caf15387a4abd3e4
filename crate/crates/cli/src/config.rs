//! Per-command JSON configurations. Missing fields take the defaults below;
//! unknown fields are rejected.

use serde::{Deserialize, Serialize};
use warpco::embeddings::{KappaSpec, Relation, SpaceDescriptor};
use warpco::exponent::Exponent;
use warpco::transform::OmegaWeights;
use warpco::SlowStartParams;

fn one() -> f64 {
    1.0
}

fn default_dim() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub map: String,
    #[serde(default = "default_dim", alias = "dim")]
    pub d: usize,
    #[serde(default)]
    pub slow_start: Option<SlowStartParams>,
}

impl MapSpec {
    pub fn build(&self) -> warpco::Result<warpco::WarpingMap> {
        warpco::catalog::map_with_params(&self.map, self.d, self.slow_start)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub extent: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 2048, extent: 32.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrototypeKindSpec {
    Bump,
    UnitL2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrototypeSpec {
    pub kind: PrototypeKindSpec,
    pub radius: f64,
}

impl Default for PrototypeSpec {
    fn default() -> Self {
        Self {
            kind: PrototypeKindSpec::Bump,
            radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum SignalSpec {
    /// Narrow Gaussian spectrum centered at 0.3 with width 0.1.
    #[default]
    Bundled,
    Zero,
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        #[serde(default)]
        shift: Option<Vec<f64>>,
    },
    /// Member `index` of the seeded band-limited family.
    BandLimited { index: usize },
    /// Binary signal file: JSON header line, then little-endian `(re, im)` pairs.
    File { path: String },
}


#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    #[serde(flatten)]
    pub map: MapSpec,
    #[serde(default = "one")]
    pub delta: f64,
    pub r: f64,
    /// Radius of the lattice index window.
    #[serde(default = "default_window")]
    pub window: f64,
    /// Neighbor order for the growth diagnostic.
    #[serde(default = "default_order")]
    pub neighbor_order: usize,
    /// Largest Besov index for cross-intersection counts; omitted skips them.
    #[serde(default)]
    pub besov_jmax: Option<i64>,
    #[serde(default)]
    pub alpha_verify: Option<f64>,
    #[serde(default = "default_alpha_window")]
    pub alpha_window: i64,
}

fn default_window() -> f64 {
    5.0
}

fn default_order() -> usize {
    3
}

fn default_alpha_window() -> i64 {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    pub space_a: SpaceDescriptor,
    pub space_b: SpaceDescriptor,
    /// Expected relation; a mismatch is a verification failure.
    #[serde(default)]
    pub expect: Option<Relation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(flatten)]
    pub map: MapSpec,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub prototype: PrototypeSpec,
    #[serde(default)]
    pub signal: SignalSpec,
    #[serde(default)]
    pub omega_weights: OmegaWeights,
    #[serde(default)]
    pub synthesize: bool,
    /// Parseval defect threshold; omitted means report only.
    #[serde(default)]
    pub tol: Option<f64>,
}

fn default_delta() -> f64 {
    0.125
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParsevalConfig {
    #[serde(flatten)]
    pub map: MapSpec,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub prototype: PrototypeSpec,
    #[serde(default)]
    pub signal: SignalSpec,
    #[serde(default)]
    pub omega_weights: OmegaWeights,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub require_monotone: bool,
}

fn default_deltas() -> Vec<f64> {
    vec![0.5, 0.25, 0.125]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    pub alpha: f64,
    #[serde(default = "default_dim", alias = "dim")]
    pub d: usize,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "default_alpha_r")]
    pub r: f64,
    #[serde(default = "default_alpha_window")]
    pub window: i64,
}

fn default_alpha_r() -> f64 {
    0.6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovConfig {
    /// Emit the 18-row identification table instead of a single comparison.
    #[serde(default)]
    pub table: bool,
    #[serde(default = "default_dim", alias = "dim")]
    pub d: usize,
    #[serde(default)]
    pub s: f64,
    #[serde(default = "two")]
    pub p: Exponent,
    #[serde(default = "two")]
    pub q: Exponent,
    #[serde(default = "default_family")]
    pub family: String,
    /// Warped-space weight; defaults to the Besov identification weight.
    #[serde(default)]
    pub kappa: Option<KappaSpec>,
    #[serde(default)]
    pub besov_s: Option<f64>,
    #[serde(default)]
    pub besov_p: Option<Exponent>,
    #[serde(default)]
    pub besov_q: Option<Exponent>,
}

fn two() -> Exponent {
    Exponent::int(2)
}

fn default_family() -> String {
    "ln".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormProbeConfig {
    #[serde(default = "default_maps")]
    pub maps: Vec<String>,
    #[serde(default = "default_signals")]
    pub signals: usize,
    #[serde(default = "default_probe_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_probe_delta")]
    pub delta: f64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "default_vartheta")]
    pub vartheta: f64,
    #[serde(default = "default_refinement")]
    pub refinement: usize,
    #[serde(default = "default_exponents")]
    pub exponents: Vec<(Exponent, Exponent)>,
    /// `κ(ξ) = (1 + |ξ|)^s`.
    #[serde(default)]
    pub kappa_s: f64,
    #[serde(default = "default_max_width")]
    pub max_width: f64,
}

fn default_maps() -> Vec<String> {
    vec!["identity".into(), "ln".into()]
}

fn default_signals() -> usize {
    10
}

fn default_probe_grid() -> GridSpec {
    GridSpec { n: 4096, extent: 32.0 }
}

fn default_probe_delta() -> f64 {
    0.25
}

fn default_vartheta() -> f64 {
    0.4
}

fn default_refinement() -> usize {
    8
}

fn default_exponents() -> Vec<(Exponent, Exponent)> {
    vec![
        (Exponent::int(2), Exponent::int(2)),
        (Exponent::int(1), Exponent::Infinite),
        (Exponent::Infinite, Exponent::int(1)),
    ]
}

fn default_max_width() -> f64 {
    16.0
}
