//! Built-in compact manifolds with explicit atlases and partitions of unity.
//!
//! Points are stored in ambient coordinates: `S^1 ⊂ R^2`, `S^2 ⊂ R^3`, and
//! for the tori any real lift of a point of `R^n / Z^n`. Functions on a torus
//! must therefore be given by periodic ambient expressions.
//!
//! A partition of unity is built from seeds `eta_a` with values in `[0, 1]`,
//! each compactly supported in its chart, whose plateaus `{eta_a = 1}` cover
//! the manifold:
//!
//! ```text
//! psi_1 = eta_1,   psi_a = eta_a (1 - eta_1) ... (1 - eta_{a-1})
//! 1 - sum_a psi_a = (1 - eta_1) ... (1 - eta_m)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funcexpr::{diff_expr, CompiledExpr, EvalError, Expr};
use crate::linalg::{matmul, Matrix};
use crate::quadrature::BoxDomain;
use crate::sampling::halton;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtlasError {
    #[error("unknown manifold '{0}'")]
    UnknownManifold(String),
    #[error("chart index {0} out of range")]
    UnknownChart(usize),
    #[error("charts {from} and {to} do not overlap")]
    EmptyOverlap { from: usize, to: usize },
    #[error("point {point:?} is outside the overlap")]
    OutsideOverlap { point: Vec<f64> },
    #[error("plateaus do not cover the manifold: sum of psi is {sum} at {point:?}")]
    CoverViolated { point: Vec<f64>, sum: f64 },
    #[error("seed {chart} takes value {value} outside [0, 1] at {point:?}")]
    SeedOutOfRange {
        chart: usize,
        point: Vec<f64>,
        value: f64,
    },
    #[error("seed {chart} is {value:e} at {point:?}, outside its chart's truncation box")]
    SupportOutsideChart {
        chart: usize,
        point: Vec<f64>,
        value: f64,
    },
    #[error("invalid atlas config: {0}")]
    InvalidConfig(String),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldId {
    S1Stereo,
    S2Stereo,
    Torus1,
    Torus2,
}

impl ManifoldId {
    pub const ALL: [ManifoldId; 4] = [
        ManifoldId::S1Stereo,
        ManifoldId::S2Stereo,
        ManifoldId::Torus1,
        ManifoldId::Torus2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ManifoldId::S1Stereo => "s1-stereo",
            ManifoldId::S2Stereo => "s2-stereo",
            ManifoldId::Torus1 => "torus1",
            ManifoldId::Torus2 => "torus2",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ManifoldId::S1Stereo | ManifoldId::Torus1 => 1,
            ManifoldId::S2Stereo | ManifoldId::Torus2 => 2,
        }
    }

    pub fn ambient_dim(self) -> usize {
        match self {
            ManifoldId::S1Stereo => 2,
            ManifoldId::S2Stereo => 3,
            ManifoldId::Torus1 => 1,
            ManifoldId::Torus2 => 2,
        }
    }

    pub fn is_torus(self) -> bool {
        matches!(self, ManifoldId::Torus1 | ManifoldId::Torus2)
    }

    /// Riemannian volume of the built-in metric.
    pub fn volume(self) -> f64 {
        match self {
            ManifoldId::S1Stereo => 2.0 * std::f64::consts::PI,
            ManifoldId::S2Stereo => 4.0 * std::f64::consts::PI,
            ManifoldId::Torus1 | ManifoldId::Torus2 => 1.0,
        }
    }

    /// `count` quasirandom points, uniform for the built-in metric.
    pub fn sample_points(self, count: usize) -> Vec<Vec<f64>> {
        let tau = 2.0 * std::f64::consts::PI;
        halton(count, self.dim())
            .into_iter()
            .map(|h| match self {
                ManifoldId::S1Stereo => vec![(tau * h[0]).cos(), (tau * h[0]).sin()],
                ManifoldId::S2Stereo => {
                    let z = 2.0 * h[0] - 1.0;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    vec![r * (tau * h[1]).cos(), r * (tau * h[1]).sin(), z]
                }
                ManifoldId::Torus1 | ManifoldId::Torus2 => h,
            })
            .collect()
    }
}

impl fmt::Display for ManifoldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ManifoldId {
    type Err = AtlasError;
    fn from_str(s: &str) -> Result<Self, AtlasError> {
        ManifoldId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| AtlasError::UnknownManifold(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChartImage {
    FullSpace,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// every chart image is a ball
    Nice,
    /// every chart image is all of R^n
    SuperNice,
    /// every chart image is bounded Lipschitz
    Gl,
    /// every chart image is bounded Lipschitz or all of R^n
    Ggl,
}

impl Classification {
    fn admits(self, image: &ChartImage) -> bool {
        matches!(
            (self, image),
            (Classification::Nice, ChartImage::Ball { .. })
                | (Classification::SuperNice, ChartImage::FullSpace)
                | (Classification::Gl, ChartImage::Box { .. } | ChartImage::Ball { .. })
                | (Classification::Ggl, _)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChartKind {
    /// Projection from the pole `z = sign`: `x' / (1 - sign * z)`.
    Stereographic { sign: f64 },
    /// Lift into `(offset, offset + 1)^n`.
    Periodic { offset: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BumpSpec {
    /// Stereographic chart: 1 on `|u| <= plateau_radius`, 0 on `|u| >= support_radius`.
    Radial {
        plateau_radius: f64,
        support_radius: f64,
    },
    /// Periodic chart, per axis in `s = t - offset`: 1 on `plateau`, 0
    /// outside the open interval `support`.
    Periodic { plateau: [f64; 2], support: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub name: String,
    pub map: ChartKind,
    pub truncation: BoxDomain,
    pub bump: BumpSpec,
}

/// Reproducible description of an atlas and its partition-of-unity seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasConfig {
    pub schema: String,
    pub manifold: ManifoldId,
    pub id: String,
    pub charts: Vec<ChartConfig>,
    pub classification: Classification,
    pub self_gl_compatible: bool,
}

impl AtlasConfig {
    pub fn builtin(id: ManifoldId) -> AtlasConfig {
        AtlasConfig::builtin_with(id, 1.5, 3.0)
    }

    /// Built-in charts with custom radial bump radii (ignored for tori).
    pub fn builtin_with(id: ManifoldId, plateau_radius: f64, support_radius: f64) -> AtlasConfig {
        let n = id.dim();
        let charts = if id.is_torus() {
            let offsets: Vec<Vec<f64>> = match id {
                ManifoldId::Torus1 => vec![vec![0.0], vec![-0.5]],
                _ => vec![vec![0.0, 0.0], vec![0.0, -0.5], vec![-0.5, 0.0], vec![-0.5, -0.5]],
            };
            offsets
                .into_iter()
                .enumerate()
                .map(|(i, o)| ChartConfig {
                    name: format!("periodic-{}", i + 1),
                    truncation: BoxDomain::new(
                        o.iter().map(|v| v + 1.0 / 32.0).collect(),
                        o.iter().map(|v| v + 31.0 / 32.0).collect(),
                    )
                    .expect("nonempty"),
                    map: ChartKind::Periodic { offset: o },
                    bump: BumpSpec::Periodic {
                        plateau: [0.2, 0.8],
                        support: [0.05, 0.95],
                    },
                })
                .collect()
        } else {
            [("north-excluded", 1.0), ("south-excluded", -1.0)]
                .into_iter()
                .map(|(name, sign)| ChartConfig {
                    name: name.to_string(),
                    map: ChartKind::Stereographic { sign },
                    truncation: BoxDomain::cube(n, -4.0, 4.0).expect("nonempty"),
                    bump: BumpSpec::Radial {
                        plateau_radius,
                        support_radius,
                    },
                })
                .collect()
        };
        let default = plateau_radius == 1.5 && support_radius == 3.0;
        AtlasConfig {
            schema: crate::SCHEMA_VERSION.to_string(),
            manifold: id,
            id: if default || id.is_torus() {
                format!("{}-default", id.name())
            } else {
                format!("{}-r{}-R{}", id.name(), plateau_radius, support_radius)
            },
            charts,
            classification: if id.is_torus() {
                Classification::Gl
            } else {
                Classification::SuperNice
            },
            self_gl_compatible: id.is_torus(),
        }
    }
}

/// `phi_a : U_a -> R^n` with its inverse.
#[derive(Debug, Clone)]
pub struct Chart {
    name: String,
    kind: ChartKind,
    dim: usize,
    ambient_dim: usize,
    inverse: Vec<Expr>,
    inverse_jacobian: Vec<Vec<Expr>>,
    forward_expr: Vec<Expr>,
    forward_jacobian: Vec<Vec<Expr>>,
    image: ChartImage,
    truncation: BoxDomain,
}

impl Chart {
    fn new(kind: ChartKind, name: &str, dim: usize, ambient_dim: usize, truncation: BoxDomain) -> Chart {
        let (inverse, forward_expr, image) = match &kind {
            ChartKind::Stereographic { sign } => {
                let q = Expr::sum((0..dim).map(|i| Expr::var(i).powi(2)));
                let denom = Expr::one().add(&q);
                let mut inv: Vec<Expr> = (0..dim)
                    .map(|i| Expr::var(i).scale(2.0).div(&denom))
                    .collect();
                inv.push(q.sub(&Expr::one()).div(&denom).scale(*sign));
                let z = Expr::var(dim);
                let fwd_denom = Expr::one().sub(&z.scale(*sign));
                let fwd = (0..dim).map(|i| Expr::var(i).div(&fwd_denom)).collect();
                (inv, fwd, ChartImage::FullSpace)
            }
            ChartKind::Periodic { offset } => {
                let inv: Vec<Expr> = (0..dim).map(Expr::var).collect();
                let image = ChartImage::Box {
                    lo: offset.clone(),
                    hi: offset.iter().map(|o| o + 1.0).collect(),
                };
                (inv.clone(), inv, image)
            }
        };
        let inverse_jacobian = inverse
            .iter()
            .map(|e| (0..dim).map(|j| diff_expr(e, j)).collect())
            .collect();
        let forward_jacobian = forward_expr
            .iter()
            .map(|e| (0..ambient_dim).map(|j| diff_expr(e, j)).collect())
            .collect();
        Chart {
            name: name.to_string(),
            kind,
            dim,
            ambient_dim,
            inverse,
            inverse_jacobian,
            forward_expr,
            forward_jacobian,
            image,
            truncation,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ChartKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn image(&self) -> &ChartImage {
        &self.image
    }

    pub fn truncation(&self) -> &BoxDomain {
        &self.truncation
    }

    /// `phi_a^{-1}` as ambient-coordinate expressions in the chart variables.
    pub fn inverse_exprs(&self) -> &[Expr] {
        &self.inverse
    }

    /// `phi_a` as expressions in ambient variables, valid near any point of
    /// `U_a` (for periodic charts: on the branch containing the lift).
    pub fn forward_exprs(&self) -> &[Expr] {
        &self.forward_expr
    }

    /// `phi_a(x)`, or `None` when `x` is outside `U_a`.
    pub fn forward(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.kind {
            ChartKind::Stereographic { sign } => {
                let denom = 1.0 - sign * x[self.dim];
                if denom <= 1e-300 {
                    return None;
                }
                Some(x[..self.dim].iter().map(|v| v / denom).collect())
            }
            ChartKind::Periodic { offset } => x
                .iter()
                .zip(offset)
                .map(|(v, o)| {
                    let r = v - o;
                    let f = r - r.floor();
                    (f > 0.0).then_some(o + f)
                })
                .collect(),
        }
    }

    /// `phi_a^{-1}(t)` in ambient coordinates.
    pub fn inverse_point(&self, t: &[f64]) -> Vec<f64> {
        match &self.kind {
            ChartKind::Stereographic { sign } => {
                let q: f64 = t.iter().map(|v| v * v).sum();
                let mut x: Vec<f64> = t.iter().map(|v| 2.0 * v / (1.0 + q)).collect();
                x.push(sign * (q - 1.0) / (q + 1.0));
                x
            }
            ChartKind::Periodic { .. } => t.to_vec(),
        }
    }

    /// `d(phi_a^{-1})` at `t`: ambient_dim x dim.
    pub fn inverse_jacobian(&self, t: &[f64]) -> Result<Matrix, EvalError> {
        eval_matrix(&self.inverse_jacobian, t)
    }

    /// `d(phi_a)` at the ambient point `x`: dim x ambient_dim.
    pub fn forward_jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError> {
        eval_matrix(&self.forward_jacobian, x)
    }
}

fn eval_matrix(m: &[Vec<Expr>], x: &[f64]) -> Result<Matrix, EvalError> {
    m.iter()
        .map(|row| row.iter().map(|e| crate::eval_expr(e, x)).collect())
        .collect()
}

#[derive(Debug, Clone)]
pub struct Atlas {
    manifold: ManifoldId,
    charts: Vec<Chart>,
    config: AtlasConfig,
}

fn invalid(msg: impl Into<String>) -> AtlasError {
    AtlasError::InvalidConfig(msg.into())
}

impl Atlas {
    pub fn builtin(id: ManifoldId) -> Atlas {
        Atlas::from_config(AtlasConfig::builtin(id)).expect("built-in atlas config is valid")
    }

    pub fn from_config(config: AtlasConfig) -> Result<Atlas, AtlasError> {
        if config.schema != crate::SCHEMA_VERSION {
            return Err(invalid(format!("unsupported schema '{}'", config.schema)));
        }
        let id = config.manifold;
        let n = id.dim();
        if config.charts.is_empty() {
            return Err(invalid("no charts"));
        }
        let mut charts = Vec::new();
        for c in &config.charts {
            if c.truncation.dim() != n {
                return Err(invalid(format!("chart '{}': truncation box must be {n}-dimensional", c.name)));
            }
            match (&c.map, &c.bump, id.is_torus()) {
                (ChartKind::Stereographic { sign }, BumpSpec::Radial { plateau_radius, support_radius }, false) => {
                    if *sign != 1.0 && *sign != -1.0 {
                        return Err(invalid(format!("chart '{}': sign must be 1 or -1", c.name)));
                    }
                    if !(0.0 < *plateau_radius && plateau_radius < support_radius) {
                        return Err(invalid(format!("chart '{}': need 0 < plateau_radius < support_radius", c.name)));
                    }
                    let ball = BoxDomain::cube(n, -support_radius, *support_radius).expect("positive radius");
                    if !c.truncation.contains_box(&ball) {
                        return Err(invalid(format!("chart '{}': bump support exceeds truncation box", c.name)));
                    }
                }
                (ChartKind::Periodic { offset }, BumpSpec::Periodic { plateau, support }, true) => {
                    if offset.len() != n || offset.iter().any(|o| !(-0.5..=0.5).contains(o)) {
                        return Err(invalid(format!("chart '{}': need {n} offsets in [-1/2, 1/2]", c.name)));
                    }
                    let [a, b] = *support;
                    let [lo, hi] = *plateau;
                    if !(0.0 < a && a < lo && lo <= hi && hi < b && b < 1.0) {
                        return Err(invalid(format!(
                            "chart '{}': need 0 < support.0 < plateau.0 <= plateau.1 < support.1 < 1",
                            c.name
                        )));
                    }
                    let sbox = BoxDomain::new(
                        offset.iter().map(|o| o + a).collect(),
                        offset.iter().map(|o| o + b).collect(),
                    )
                    .expect("nonempty");
                    let image = BoxDomain::new(offset.clone(), offset.iter().map(|o| o + 1.0).collect())
                        .expect("nonempty");
                    if !c.truncation.contains_box(&sbox) || !image.contains_box(&c.truncation) {
                        return Err(invalid(format!(
                            "chart '{}': truncation box must contain the bump support and lie in the image",
                            c.name
                        )));
                    }
                }
                _ => {
                    return Err(invalid(format!(
                        "chart '{}': map and bump kinds do not fit manifold {id}",
                        c.name
                    )))
                }
            }
            let chart = Chart::new(c.map.clone(), &c.name, n, id.ambient_dim(), c.truncation.clone());
            if !config.classification.admits(&chart.image) {
                return Err(invalid(format!(
                    "chart '{}' image {:?} is inconsistent with classification {:?}",
                    c.name, chart.image, config.classification
                )));
            }
            charts.push(chart);
        }
        Ok(Atlas {
            manifold: id,
            charts,
            config,
        })
    }

    pub fn manifold(&self) -> ManifoldId {
        self.manifold
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, index: usize) -> Result<&Chart, AtlasError> {
        self.charts.get(index).ok_or(AtlasError::UnknownChart(index))
    }

    pub fn config(&self) -> &AtlasConfig {
        &self.config
    }

    pub fn classification(&self) -> Classification {
        self.config.classification
    }

    /// Declared from the chart geometry, not computed.
    pub fn self_gl_compatible(&self) -> bool {
        self.config.self_gl_compatible
    }

    /// Seed `eta_a` as an ambient-coordinate expression.
    pub fn seed(&self, index: usize) -> Result<Expr, AtlasError> {
        let chart = self.chart(index)?;
        let spec = &self.config.charts[index].bump;
        Ok(match (&chart.kind, spec) {
            (ChartKind::Stereographic { sign }, BumpSpec::Radial { plateau_radius, support_radius }) => {
                let level = |r: f64| (r * r - 1.0) / (r * r + 1.0);
                let w = Expr::var(chart.dim).scale(*sign);
                smooth_step_down(&w, level(*plateau_radius), level(*support_radius))
            }
            (ChartKind::Periodic { offset }, BumpSpec::Periodic { plateau, support }) => {
                Expr::product(offset.iter().enumerate().map(|(axis, o)| {
                    Expr::sum([-1.0, 0.0, 1.0].into_iter().map(|k| {
                        let s = Expr::var(axis).add(&Expr::constant(k - o));
                        plateau_bump(&s, *support, *plateau)
                    }))
                }))
            }
            _ => unreachable!("validated in from_config"),
        })
    }

    pub fn seeds(&self) -> Result<Vec<Expr>, AtlasError> {
        (0..self.charts.len()).map(|i| self.seed(i)).collect()
    }

    /// Partition of unity built from the configured seeds.
    pub fn default_partition(&self) -> Result<PartitionOfUnity, AtlasError> {
        build_partition_of_unity(self, self.seeds()?, DEFAULT_POU_SAMPLES)
    }
}

/// 1 for `w <= a`, 0 for `w >= b`, smooth in between: `F(b-w) / (F(b-w) + F(w-a))`
/// with `F(t) = exp(-1/t)` for `t > 0` and 0 otherwise.
pub fn smooth_step_down(w: &Expr, a: f64, b: f64) -> Expr {
    let left = Expr::constant(b).sub(w).flat(0);
    let right = w.sub(&Expr::constant(a)).flat(0);
    left.div(&left.add(&right))
}

/// 1 on `[plateau.0, plateau.1]`, 0 outside `(support.0, support.1)`.
pub fn plateau_bump(s: &Expr, support: [f64; 2], plateau: [f64; 2]) -> Expr {
    let up = Expr::one().sub(&smooth_step_down(s, support[0], plateau[0]));
    let down = smooth_step_down(s, plateau[1], support[1]);
    up.mul(&down)
}

/// Samples used to validate a partition of unity.
pub const DEFAULT_POU_SAMPLES: usize = 2000;

/// `phi_b o phi_a^{-1}` restricted to `phi_a(U_a ∩ U_b)`.
#[derive(Debug, Clone, Copy)]
pub struct TransitionMap<'a> {
    from: &'a Chart,
    to: &'a Chart,
}

impl TransitionMap<'_> {
    pub fn in_domain(&self, t: &[f64]) -> bool {
        self.to.forward(&self.from.inverse_point(t)).is_some()
    }

    pub fn apply(&self, t: &[f64]) -> Result<Vec<f64>, AtlasError> {
        self.to
            .forward(&self.from.inverse_point(t))
            .ok_or_else(|| AtlasError::OutsideOverlap { point: t.to_vec() })
    }

    /// Jacobian of the transition at `t`: `d(phi_b) . d(phi_a^{-1})`.
    pub fn jacobian(&self, t: &[f64]) -> Result<Matrix, AtlasError> {
        let x = self.from.inverse_point(t);
        if self.to.forward(&x).is_none() {
            return Err(AtlasError::OutsideOverlap { point: t.to_vec() });
        }
        Ok(matmul(&self.to.forward_jacobian(&x)?, &self.from.inverse_jacobian(t)?))
    }
}

/// Transition map from chart `from` to chart `to`; errors when no sample of
/// the truncation box of `from` lands in the overlap.
pub fn transition_map(atlas: &Atlas, from: usize, to: usize) -> Result<TransitionMap<'_>, AtlasError> {
    let map = TransitionMap {
        from: atlas.chart(from)?,
        to: atlas.chart(to)?,
    };
    let tb = map.from.truncation();
    let hit = halton(512, atlas.dim()).into_iter().any(|h| {
        let t: Vec<f64> = h
            .iter()
            .enumerate()
            .map(|(a, v)| tb.lo()[a] + v * tb.width(a))
            .collect();
        map.in_domain(&t)
    });
    if hit {
        Ok(map)
    } else {
        Err(AtlasError::EmptyOverlap { from, to })
    }
}

#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    id: String,
    seeds: Vec<Expr>,
    ambient: Vec<Expr>,
    local: Vec<Expr>,
}

impl PartitionOfUnity {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.ambient.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ambient.is_empty()
    }

    pub fn seeds(&self) -> &[Expr] {
        &self.seeds
    }

    /// `psi_a` in ambient coordinates.
    pub fn ambient(&self, index: usize) -> &Expr {
        &self.ambient[index]
    }

    /// `psi_a o phi_a^{-1}` in chart coordinates.
    pub fn local(&self, index: usize) -> &Expr {
        &self.local[index]
    }

    /// Every `psi_a` at an ambient point.
    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        CompiledExpr::new(&self.ambient).eval(x)
    }
}

/// `psi_a = eta_a prod_{b<a} (1 - eta_b)`, validated at `samples`
/// quasirandom points: seeds in `[0,1]`, zero off their chart's truncation
/// box, and `sum psi >= 1 - 1e-9`.
pub fn build_partition_of_unity(
    atlas: &Atlas,
    seeds: Vec<Expr>,
    samples: usize,
) -> Result<PartitionOfUnity, AtlasError> {
    if seeds.len() != atlas.charts.len() {
        return Err(invalid(format!(
            "{} seeds for {} charts",
            seeds.len(),
            atlas.charts.len()
        )));
    }
    let mut ambient = Vec::with_capacity(seeds.len());
    let mut remainder = Expr::one();
    for eta in &seeds {
        ambient.push(eta.mul(&remainder));
        remainder = remainder.mul(&Expr::one().sub(eta));
    }
    let local = ambient
        .iter()
        .zip(&atlas.charts)
        .map(|(psi, chart)| psi.substitute(&chart.inverse))
        .collect();

    let seed_tape = CompiledExpr::new(&seeds);
    let psi_tape = CompiledExpr::new(&ambient);
    let mut scratch = Vec::new();
    let mut eta = vec![0.0; seeds.len()];
    let mut psi = vec![0.0; seeds.len()];
    for x in atlas.manifold.sample_points(samples) {
        seed_tape.eval_into(&x, &mut scratch, &mut eta)?;
        for (a, (v, chart)) in eta.iter().zip(&atlas.charts).enumerate() {
            if !(-1e-12..=1.0 + 1e-12).contains(v) {
                return Err(AtlasError::SeedOutOfRange {
                    chart: a,
                    point: x.clone(),
                    value: *v,
                });
            }
            let inside = chart
                .forward(&x)
                .is_some_and(|t| chart.truncation.contains_interior(&t));
            if !inside && v.abs() > 1e-14 {
                return Err(AtlasError::SupportOutsideChart {
                    chart: a,
                    point: x.clone(),
                    value: *v,
                });
            }
        }
        psi_tape.eval_into(&x, &mut scratch, &mut psi)?;
        let sum: f64 = psi.iter().sum();
        if sum < 1.0 - 1e-9 {
            return Err(AtlasError::CoverViolated { point: x, sum });
        }
    }
    Ok(PartitionOfUnity {
        id: format!("{}-pou", atlas.config.id),
        seeds,
        ambient,
        local,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval_expr;

    #[test]
    fn circle_chart_matches_the_classical_formula() {
        let atlas = Atlas::builtin(ManifoldId::S1Stereo);
        let c = &atlas.charts()[0];
        for theta in [0.3f64, 1.1, 2.5, -2.0] {
            let (x, y) = (theta.cos(), theta.sin());
            let t = c.forward(&[x, y]).unwrap();
            assert!((t[0] - x / (1.0 - y)).abs() < 1e-15);
            let back = c.inverse_point(&t);
            assert!((back[0] - x).abs() < 1e-12 && (back[1] - y).abs() < 1e-12);
        }
        assert!(c.forward(&[0.0, 1.0]).is_none());
    }

    #[test]
    fn stereographic_transition_is_inversion() {
        let atlas = Atlas::builtin(ManifoldId::S1Stereo);
        let tr = transition_map(&atlas, 0, 1).unwrap();
        for t in [0.5, -2.0, 3.7] {
            assert!((tr.apply(&[t]).unwrap()[0] - 1.0 / t).abs() < 1e-12);
            let j = tr.jacobian(&[t]).unwrap();
            assert!((j[0][0] + 1.0 / (t * t)).abs() < 1e-10);
        }
        assert!(tr.apply(&[0.0]).is_err());
    }

    #[test]
    fn torus_transition_is_translation() {
        let atlas = Atlas::builtin(ManifoldId::Torus1);
        let tr = transition_map(&atlas, 0, 1).unwrap();
        assert!((tr.apply(&[0.75]).unwrap()[0] + 0.25).abs() < 1e-15);
        assert!((tr.apply(&[0.25]).unwrap()[0] - 0.25).abs() < 1e-15);
        assert!(tr.apply(&[0.5]).is_err());
    }

    #[test]
    fn classification_matches_images() {
        for id in ManifoldId::ALL {
            let a = Atlas::builtin(id);
            for c in a.charts() {
                match a.classification() {
                    Classification::SuperNice => assert_eq!(c.image(), &ChartImage::FullSpace),
                    Classification::Gl => assert!(matches!(c.image(), ChartImage::Box { .. })),
                    other => panic!("unexpected {other:?}"),
                }
            }
        }
    }

    #[test]
    fn pou_is_one_where_first_seed_is_one() {
        let atlas = Atlas::builtin(ManifoldId::S1Stereo);
        let pou = atlas.default_partition().unwrap();
        // south pole: inside the first plateau
        let v = pou.values(&[0.0, -1.0]).unwrap();
        assert_eq!(v, vec![1.0, 0.0]);
    }

    #[test]
    fn shrunken_plateaus_fail_the_cover_check() {
        let mut cfg = AtlasConfig::builtin(ManifoldId::Torus1);
        for c in &mut cfg.charts {
            c.bump = BumpSpec::Periodic {
                plateau: [0.45, 0.55],
                support: [0.4, 0.6],
            };
        }
        let atlas = Atlas::from_config(cfg).unwrap();
        match atlas.default_partition() {
            Err(AtlasError::CoverViolated { point, sum }) => {
                assert_eq!(point.len(), 1);
                assert!(sum < 1.0);
            }
            other => panic!("expected cover violation, got {other:?}"),
        }
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let cfg = AtlasConfig::builtin(ManifoldId::Torus2);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: AtlasConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(serde_json::from_value::<AtlasConfig>(v).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = AtlasConfig::builtin(ManifoldId::S2Stereo);
        cfg.charts[0].truncation = BoxDomain::cube(2, -2.0, 2.0).unwrap();
        assert!(Atlas::from_config(cfg).is_err());
        let mut cfg = AtlasConfig::builtin(ManifoldId::Torus1);
        cfg.classification = Classification::SuperNice;
        assert!(Atlas::from_config(cfg).is_err());
        assert!("klein-bottle".parse::<ManifoldId>().is_err());
    }

    #[test]
    fn local_pou_agrees_with_ambient() {
        let atlas = Atlas::builtin(ManifoldId::S2Stereo);
        let pou = atlas.default_partition().unwrap();
        let t = [0.7, -1.2];
        let x = atlas.charts()[1].inverse_point(&t);
        let a = eval_expr(pou.ambient(1), &x).unwrap();
        let l = eval_expr(pou.local(1), &t).unwrap();
        assert!((a - l).abs() < 1e-14);
    }
}
