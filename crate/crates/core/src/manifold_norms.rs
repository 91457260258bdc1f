//! Lebesgue and Sobolev norms on compact manifolds.
//!
//! Three constructions are provided:
//!
//! * the intrinsic `L^q` norm `(int_M |u|^q dV_g)^{1/q}`, assembled as
//!   `sum_a int psi_a |u|^q sqrt(det g)` over chart truncation boxes, and the
//!   chart-sum norm `sum_a sum_l ||(psi_a u)_l o phi_a^{-1}||_{L^q}`;
//! * the chart Sobolev norm `sum_a sum_l ||(psi_a u)_l o phi_a^{-1}||_{W^{e,q}}`
//!   with Euclidean norms from [`crate::quadrature`];
//! * the connection norm built from `|nabla^i u|_{L^q}`, `i = 0..k`.
//!
//! Chart terms are computed independently and combined in chart order, so
//! reports do not depend on thread scheduling. For fractional `e` on charts
//! with image `R^n` the Gagliardo double integral only runs over the
//! truncation box, which omits the far-field part of the seminorm.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::atlas::{Atlas, AtlasConfig, AtlasError, ManifoldId, PartitionOfUnity};
use crate::funcexpr::{CompiledExpr, EvalError, Expr};
use crate::geometry::{covariant_derivative, FiberNormEvaluator, GeometryError, MetricField, TensorField, Valence};
use crate::quadrature::{self, default_grid, midpoints, Field, QuadratureError, QuadratureOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("integrability exponent must be finite and > 1, got {0}")]
    InvalidExponent(f64),
    #[error("smoothness order must be finite and >= 0, got {0}")]
    InvalidOrder(f64),
    #[error("function family is empty")]
    EmptyFamily,
    #[error("{got} chart blocks given for an atlas with {expected} charts")]
    ChartCount { expected: usize, got: usize },
    #[error("ambient field has {got} components, manifold ambient dimension is {expected}")]
    AmbientDimension { expected: usize, got: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Atlas, partition of unity and metric.
#[derive(Debug, Clone)]
pub struct Manifold {
    atlas: Atlas,
    pou: PartitionOfUnity,
    metric: MetricField,
}

impl Manifold {
    pub fn builtin(id: ManifoldId) -> Manifold {
        Manifold::from_config(AtlasConfig::builtin(id)).expect("built-in manifold is valid")
    }

    pub fn from_config(config: AtlasConfig) -> Result<Manifold, ManifoldError> {
        let atlas = Atlas::from_config(config)?;
        let pou = atlas.default_partition()?;
        let metric = MetricField::builtin(&atlas);
        Ok(Manifold { atlas, pou, metric })
    }

    pub fn with_partition(atlas: Atlas, pou: PartitionOfUnity) -> Result<Manifold, ManifoldError> {
        if pou.len() != atlas.charts().len() {
            return Err(ManifoldError::ChartCount {
                expected: atlas.charts().len(),
                got: pou.len(),
            });
        }
        let metric = MetricField::builtin(&atlas);
        Ok(Manifold { atlas, pou, metric })
    }

    pub fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    pub fn pou(&self) -> &PartitionOfUnity {
        &self.pou
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn id(&self) -> ManifoldId {
        self.atlas.manifold()
    }

    pub fn dim(&self) -> usize {
        self.atlas.dim()
    }
}

/// Looks up a built-in manifold by name.
pub fn builtin_manifold(name: &str) -> Result<Manifold, ManifoldError> {
    Ok(Manifold::builtin(name.parse()?))
}

/// A function or tensor field on a manifold.
#[derive(Debug, Clone)]
pub enum ManifoldFunction {
    /// Scalar function in ambient coordinates.
    Scalar(Expr),
    /// Ambient vector field; its tangential part is used.
    AmbientVector(Vec<Expr>),
    /// Ambient covector field, pulled back.
    AmbientCovector(Vec<Expr>),
    /// Chart components, tied to one atlas.
    Local(TensorField),
}

impl ManifoldFunction {
    pub fn scalar(ambient: Expr) -> Self {
        ManifoldFunction::Scalar(ambient)
    }

    /// Chart components on `manifold`'s atlas.
    pub fn realize(&self, manifold: &Manifold) -> Result<TensorField, ManifoldError> {
        let atlas = manifold.atlas();
        let check = |v: &[Expr]| {
            if v.len() == atlas.manifold().ambient_dim() {
                Ok(())
            } else {
                Err(ManifoldError::AmbientDimension {
                    expected: atlas.manifold().ambient_dim(),
                    got: v.len(),
                })
            }
        };
        Ok(match self {
            ManifoldFunction::Scalar(e) => TensorField::function(atlas, e),
            ManifoldFunction::AmbientVector(v) => {
                check(v)?;
                TensorField::vector_from_ambient(atlas, manifold.metric(), v)
            }
            ManifoldFunction::AmbientCovector(v) => {
                check(v)?;
                TensorField::covector_from_ambient(atlas, v)
            }
            ManifoldFunction::Local(t) => {
                if t.chart_count() != atlas.charts().len() {
                    return Err(ManifoldError::ChartCount {
                        expected: atlas.charts().len(),
                        got: t.chart_count(),
                    });
                }
                t.clone()
            }
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &[Expr]| v.iter().map(|e| e.scale(c)).collect();
        match self {
            ManifoldFunction::Scalar(e) => ManifoldFunction::Scalar(e.scale(c)),
            ManifoldFunction::AmbientVector(v) => ManifoldFunction::AmbientVector(s(v)),
            ManifoldFunction::AmbientCovector(v) => ManifoldFunction::AmbientCovector(s(v)),
            ManifoldFunction::Local(t) => ManifoldFunction::Local(t.scale(c)),
        }
    }
}

/// Largest disagreement between chart representations on overlaps, over
/// `samples` quasirandom manifold points (tensor transformation law).
pub fn overlap_consistency(field: &TensorField, manifold: &Manifold, samples: usize) -> Result<f64, ManifoldError> {
    let atlas = manifold.atlas();
    let mut worst: f64 = 0.0;
    for x in atlas.manifold().sample_points(samples) {
        let inside: Vec<(usize, Vec<f64>)> = atlas
            .charts()
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.forward(&x).filter(|t| c.truncation().contains_interior(t)).map(|t| (i, t)))
            .collect();
        for (a, ta) in &inside {
            for (b, _) in &inside {
                if a != b {
                    let (pushed, direct) = crate::geometry::transform_components(field, atlas, *a, *b, ta)?;
                    for (p, d) in pushed.iter().zip(&direct) {
                        worst = worst.max((p - d).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// How a report's `value` is obtained from its breakdown values `t_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Combination {
    /// `sum t_i`
    Sum,
    /// `(sum t_i^q)^{1/q}`
    LqSum { q: f64 },
    /// `(sum t_i)^{1/q}`
    RootOfSum { q: f64 },
}

impl Combination {
    pub fn apply(self, terms: &[f64]) -> f64 {
        match self {
            Combination::Sum => terms.iter().sum(),
            Combination::LqSum { q } => terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q),
            Combination::RootOfSum { q } => terms.iter().sum::<f64>().powf(1.0 / q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartTerm {
    pub chart: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub value: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldGrid {
    pub cells_per_axis: usize,
    pub coarse_cells_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldNormReport {
    pub schema: &'static str,
    pub definition: &'static str,
    pub manifold: ManifoldId,
    pub atlas_id: String,
    pub pou_id: String,
    pub e: f64,
    pub q: f64,
    pub value: f64,
    pub combination: Combination,
    pub breakdown: Vec<ChartTerm>,
    pub grid: ManifoldGrid,
    pub error_estimate: f64,
}

impl ManifoldNormReport {
    /// Recomputes the value from the breakdown.
    pub fn combined_breakdown(&self) -> f64 {
        let t: Vec<f64> = self.breakdown.iter().map(|b| b.value).collect();
        self.combination.apply(&t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LqReport {
    pub schema: &'static str,
    /// Chart-sum definition.
    pub def1: ManifoldNormReport,
    /// Intrinsic definition.
    pub def2: ManifoldNormReport,
    /// `def1 / def2`.
    pub ratio: f64,
}

fn check_q(q: f64) -> Result<(), ManifoldError> {
    if q.is_finite() && q > 1.0 {
        Ok(())
    } else {
        Err(ManifoldError::InvalidExponent(q))
    }
}

fn resolve_grid(manifold: &Manifold, n: Option<usize>) -> Result<usize, ManifoldError> {
    let n = n.unwrap_or_else(|| default_grid(manifold.dim()));
    if n < 2 {
        return Err(QuadratureError::InvalidGrid.into());
    }
    Ok(n)
}

/// `int psi_a |u|^q sqrt(det g)` over chart `a`'s truncation box.
fn weighted_chart_integral(
    field: &TensorField,
    manifold: &Manifold,
    chart: usize,
    q: f64,
    n: usize,
) -> Result<f64, ManifoldError> {
    let tb = manifold.atlas().chart(chart)?.truncation().clone();
    let dim = tb.dim();
    let coords: Vec<Vec<f64>> = (0..dim).map(|a| midpoints(tb.lo()[a], tb.hi()[a], n)).collect();
    let weight = CompiledExpr::new(&[
        manifold.pou().local(chart).clone(),
        manifold.metric().chart(chart).sqrt_det().clone(),
    ]);
    let norm = FiberNormEvaluator::new(field, manifold.metric(), chart);
    let total = n.pow(dim as u32);
    let cell: f64 = (0..dim).map(|a| tb.width(a) / n as f64).product();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map_init(
            || (vec![0.0; dim], Vec::new(), vec![0.0; 2], Vec::new()),
            |(x, scratch, w, out), idx| -> Result<f64, EvalError> {
                let mut rem = idx;
                for a in (0..dim).rev() {
                    x[a] = coords[a][rem % n];
                    rem /= n;
                }
                weight.eval_into(x, scratch, w)?;
                if w[0] == 0.0 {
                    return Ok(0.0);
                }
                let u = norm.eval(x, scratch, out)?;
                Ok(w[0] * u.powf(q) * w[1])
            },
        )
        .collect::<Result<_, _>>()?;
    Ok(values.iter().sum::<f64>() * cell)
}

/// Intrinsic `L^q` norm `(int_M |u|_g^q dV_g)^{1/q}` of a realized field.
pub fn intrinsic_lq_norm(field: &TensorField, manifold: &Manifold, q: f64, grid: Option<usize>) -> Result<ManifoldNormReport, ManifoldError> {
    check_q(q)?;
    let n = resolve_grid(manifold, grid)?;
    let mut breakdown = Vec::new();
    for chart in 0..manifold.atlas().charts().len() {
        let fine = weighted_chart_integral(field, manifold, chart, q, n)?;
        let coarse = weighted_chart_integral(field, manifold, chart, q, n / 2)?;
        breakdown.push(ChartTerm {
            chart,
            component: None,
            order: None,
            value: fine,
            error_estimate: (fine - coarse).abs() + 64.0 * f64::EPSILON * fine.abs(),
        });
    }
    let combination = Combination::RootOfSum { q };
    let sum: f64 = breakdown.iter().map(|b| b.value).sum();
    let err_sum: f64 = breakdown.iter().map(|b| b.error_estimate).sum();
    let value = combination.apply(&breakdown.iter().map(|b| b.value).collect::<Vec<_>>());
    let error_estimate = (sum + err_sum).powf(1.0 / q) - value;
    Ok(ManifoldNormReport {
        schema: crate::SCHEMA_VERSION,
        definition: "lq-intrinsic",
        manifold: manifold.id(),
        atlas_id: manifold.atlas().id().to_string(),
        pou_id: manifold.pou().id().to_string(),
        e: 0.0,
        q,
        value,
        combination,
        breakdown,
        grid: ManifoldGrid {
            cells_per_axis: n,
            coarse_cells_per_axis: n / 2,
        },
        error_estimate,
    })
}

/// Both `L^q` definitions and their ratio.
pub fn manifold_lq_norm(u: &ManifoldFunction, manifold: &Manifold, q: f64, grid: Option<usize>) -> Result<LqReport, ManifoldError> {
    let field = u.realize(manifold)?;
    let def2 = intrinsic_lq_norm(&field, manifold, q, grid)?;
    let mut def1 = chart_norm_of_field(&field, manifold, 0.0, q, grid)?;
    def1.definition = "lq-chart-sum";
    let ratio = if def2.value == 0.0 { 1.0 } else { def1.value / def2.value };
    Ok(LqReport {
        schema: crate::SCHEMA_VERSION,
        def1,
        def2,
        ratio,
    })
}

fn chart_norm_of_field(field: &TensorField, manifold: &Manifold, e: f64, q: f64, grid: Option<usize>) -> Result<ManifoldNormReport, ManifoldError> {
    check_q(q)?;
    if !(e.is_finite() && e >= 0.0) {
        return Err(ManifoldError::InvalidOrder(e));
    }
    let n = resolve_grid(manifold, grid)?;
    let opts = QuadratureOptions::with_grid(n);
    let mut breakdown = Vec::new();
    for (chart, c) in manifold.atlas().charts().iter().enumerate() {
        let psi = manifold.pou().local(chart);
        for (component, comp) in field.components(chart).iter().enumerate() {
            let local = Field::new(psi.mul(comp));
            let r = quadrature::sobolev_norm(&local, c.truncation(), e, q, opts)?;
            breakdown.push(ChartTerm {
                chart,
                component: Some(component),
                order: None,
                value: r.value,
                error_estimate: r.error_estimate,
            });
        }
    }
    let combination = Combination::Sum;
    Ok(ManifoldNormReport {
        schema: crate::SCHEMA_VERSION,
        definition: "chart-sobolev",
        manifold: manifold.id(),
        atlas_id: manifold.atlas().id().to_string(),
        pou_id: manifold.pou().id().to_string(),
        e,
        q,
        value: combination.apply(&breakdown.iter().map(|b| b.value).collect::<Vec<_>>()),
        combination,
        error_estimate: breakdown.iter().map(|b| b.error_estimate).sum(),
        breakdown,
        grid: ManifoldGrid {
            cells_per_axis: n,
            coarse_cells_per_axis: n / 2,
        },
    })
}

/// `sum_a sum_l ||(psi_a u)_l o phi_a^{-1}||_{W^{e,q}}` over truncation boxes.
pub fn chart_sobolev_norm(u: &ManifoldFunction, manifold: &Manifold, e: f64, q: f64, grid: Option<usize>) -> Result<ManifoldNormReport, ManifoldError> {
    chart_norm_of_field(&u.realize(manifold)?, manifold, e, q, grid)
}

/// Norm from `|nabla^i u|_{L^q}`, `i = 0..=k`, combined by `combination`
/// (`LqSum` is the standard choice; `Sum` is an equivalent norm).
pub fn connection_sobolev_norm(
    u: &ManifoldFunction,
    manifold: &Manifold,
    k: usize,
    q: f64,
    grid: Option<usize>,
    combination: ConnectionCombination,
) -> Result<ManifoldNormReport, ManifoldError> {
    let field = u.realize(manifold)?;
    connection_norm_of_field(&field, manifold, k, q, grid, combination)
}

pub(crate) fn connection_norm_of_field(
    field: &TensorField,
    manifold: &Manifold,
    k: usize,
    q: f64,
    grid: Option<usize>,
    combination: ConnectionCombination,
) -> Result<ManifoldNormReport, ManifoldError> {
    check_q(q)?;
    let n = resolve_grid(manifold, grid)?;
    let mut breakdown = Vec::new();
    for order in 0..=k {
        let d = covariant_derivative(field, manifold.metric(), order)?;
        let r = intrinsic_lq_norm(&d, manifold, q, Some(n))?;
        breakdown.push(ChartTerm {
            chart: 0,
            component: None,
            order: Some(order),
            value: r.value,
            error_estimate: r.error_estimate,
        });
    }
    let combination = match combination {
        ConnectionCombination::LqSum => Combination::LqSum { q },
        ConnectionCombination::Sum => Combination::Sum,
    };
    let value = combination.apply(&breakdown.iter().map(|b| b.value).collect::<Vec<_>>());
    let error_estimate = breakdown.iter().map(|b| b.error_estimate).sum();
    Ok(ManifoldNormReport {
        schema: crate::SCHEMA_VERSION,
        definition: "connection",
        manifold: manifold.id(),
        atlas_id: manifold.atlas().id().to_string(),
        pou_id: manifold.pou().id().to_string(),
        e: k as f64,
        q,
        value,
        combination,
        breakdown,
        grid: ManifoldGrid {
            cells_per_axis: n,
            coarse_cells_per_axis: n / 2,
        },
        error_estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionCombination {
    #[default]
    LqSum,
    Sum,
}

/// A norm to compare.
#[derive(Debug, Clone, Copy)]
pub enum NormChoice<'a> {
    Chart {
        manifold: &'a Manifold,
        e: f64,
    },
    Connection {
        manifold: &'a Manifold,
        k: usize,
        combination: ConnectionCombination,
    },
}

impl NormChoice<'_> {
    pub fn evaluate(&self, u: &ManifoldFunction, q: f64, grid: Option<usize>) -> Result<ManifoldNormReport, ManifoldError> {
        match *self {
            NormChoice::Chart { manifold, e } => chart_sobolev_norm(u, manifold, e, q, grid),
            NormChoice::Connection {
                manifold,
                k,
                combination,
            } => connection_sobolev_norm(u, manifold, k, q, grid, combination),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            NormChoice::Chart { manifold, e } => format!("chart(e={e}, pou={})", manifold.pou().id()),
            NormChoice::Connection { manifold, k, combination } => {
                format!("connection(k={k}, {combination:?}, atlas={})", manifold.atlas().id())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub schema: &'static str,
    pub variant_a: String,
    pub variant_b: String,
    pub q: f64,
    pub grid: usize,
    pub values_a: Vec<f64>,
    pub values_b: Vec<f64>,
    /// `a / b` per function.
    pub ratios: Vec<f64>,
    /// `[min, max]` of the ratios.
    pub bracket: [f64; 2],
    /// `|ratio(5u) - ratio(u)| / ratio(u)` per function.
    pub scale_deviation: Vec<f64>,
}

/// Per-function ratios `A(u) / B(u)`, their bracket, and the ratio change
/// under `u -> 5u`.
pub fn compare_norms(
    family: &[ManifoldFunction],
    a: NormChoice<'_>,
    b: NormChoice<'_>,
    q: f64,
    grid: Option<usize>,
) -> Result<ComparisonReport, ManifoldError> {
    if family.is_empty() {
        return Err(ManifoldError::EmptyFamily);
    }
    let mut values_a = Vec::new();
    let mut values_b = Vec::new();
    let mut ratios = Vec::new();
    let mut scale_deviation = Vec::new();
    for u in family {
        let va = a.evaluate(u, q, grid)?.value;
        let vb = b.evaluate(u, q, grid)?.value;
        let r = va / vb;
        let u5 = u.scaled(5.0);
        let r5 = a.evaluate(&u5, q, grid)?.value / b.evaluate(&u5, q, grid)?.value;
        values_a.push(va);
        values_b.push(vb);
        ratios.push(r);
        scale_deviation.push(((r5 - r) / r).abs());
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid = match a {
        NormChoice::Chart { manifold, .. } | NormChoice::Connection { manifold, .. } => {
            grid.unwrap_or_else(|| default_grid(manifold.dim()))
        }
    };
    Ok(ComparisonReport {
        schema: crate::SCHEMA_VERSION,
        variant_a: a.describe(),
        variant_b: b.describe(),
        q,
        grid,
        values_a,
        values_b,
        ratios,
        bracket: [lo, hi],
        scale_deviation,
    })
}

/// `int_M f dV_g` for a scalar field, by the partition of unity, with an
/// error estimate (two-grid difference plus a roundoff floor).
pub fn manifold_integral(field: &TensorField, manifold: &Manifold, grid: Option<usize>) -> Result<(f64, f64), ManifoldError> {
    if field.valence() != Valence::SCALAR {
        return Err(GeometryError::ValenceMismatch {
            expected: Valence::SCALAR,
            got: field.valence(),
        }
        .into());
    }
    let n = resolve_grid(manifold, grid)?;
    let integrate = |n: usize| -> Result<(f64, f64), ManifoldError> {
        let (mut total, mut magnitude) = (0.0, 0.0);
        for (chart, c) in manifold.atlas().charts().iter().enumerate() {
            let integrand = manifold
                .pou()
                .local(chart)
                .mul(manifold.metric().chart(chart).sqrt_det())
                .mul(&field.components(chart)[0]);
            let g = quadrature::GridFunction::sample(&Field::new(integrand), c.truncation(), n)?;
            total += g.values().iter().sum::<f64>() * g.cell_volume();
            magnitude += g.values().iter().map(|v| v.abs()).sum::<f64>() * g.cell_volume();
        }
        Ok((total, magnitude))
    };
    let (fine, magnitude) = integrate(n)?;
    let (coarse, _) = integrate(n / 2)?;
    Ok((fine, (fine - coarse).abs() + 64.0 * f64::EPSILON * magnitude))
}
