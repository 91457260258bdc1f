//! Differential operators on built-in manifolds through their chart local
//! representations, and empirical operator norms between Sobolev spaces.
//!
//! `div` uses the coordinate formula `|g|^{-1/2} d_j(|g|^{1/2} Y^j)`.

use std::fmt;
use std::str::FromStr;

use num::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::ChartImage;
use crate::exponents::{check_derivative, DomainClass, Exponent, ExponentError, SpaceSpec, Verdict};
use crate::funcexpr::{diff_expr, Expr};
use crate::geometry::{ChartMetric, GeometryError, MetricField, TensorField, Valence};
use crate::manifold_norms::{
    chart_sobolev_norm, connection_sobolev_norm, ConnectionCombination, Manifold, ManifoldError, ManifoldFunction,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("unknown operator '{0}' (expected d, grad, div or laplace)")]
    UnknownOperator(String),
    #[error("{op} acts on {expected:?} fields, got {got:?}")]
    ValenceMismatch {
        op: OperatorId,
        expected: Valence,
        got: Valence,
    },
    #[error("function family is empty")]
    EmptyFamily,
    #[error("numerical norms need finite exponents with s >= 0, got {0}")]
    UnsupportedExponent(String),
    #[error("connection norms need integer smoothness, got {0}")]
    FractionalConnection(String),
    #[error("norm of u vanishes for family member {0}")]
    ZeroNorm(usize),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorId {
    D,
    Grad,
    Div,
    Laplace,
}

impl OperatorId {
    pub const ALL: [OperatorId; 4] = [OperatorId::D, OperatorId::Grad, OperatorId::Div, OperatorId::Laplace];

    pub fn name(self) -> &'static str {
        match self {
            OperatorId::D => "d",
            OperatorId::Grad => "grad",
            OperatorId::Div => "div",
            OperatorId::Laplace => "laplace",
        }
    }

    pub fn order(self) -> u32 {
        match self {
            OperatorId::Laplace => 2,
            _ => 1,
        }
    }

    pub fn source(self) -> Valence {
        match self {
            OperatorId::Div => Valence::VECTOR,
            _ => Valence::SCALAR,
        }
    }

    pub fn target(self) -> Valence {
        match self {
            OperatorId::D => Valence::COVECTOR,
            OperatorId::Grad => Valence::VECTOR,
            _ => Valence::SCALAR,
        }
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorId {
    type Err = OperatorError;
    fn from_str(s: &str) -> Result<Self, OperatorError> {
        OperatorId::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| OperatorError::UnknownOperator(s.to_string()))
    }
}

/// Local representation `Q^a` of an operator on one chart.
#[derive(Debug, Clone)]
pub struct ChartBlock {
    op: OperatorId,
    chart: usize,
    metric: ChartMetric,
}

impl ChartBlock {
    pub fn op(&self) -> OperatorId {
        self.op
    }

    pub fn chart(&self) -> usize {
        self.chart
    }

    /// Applies `Q^a` to the chart components of a field of the source valence.
    pub fn apply(&self, comps: &[Expr]) -> Vec<Expr> {
        let n = self.metric.dim();
        match self.op {
            OperatorId::D => (0..n).map(|i| diff_expr(&comps[0], i)).collect(),
            OperatorId::Grad => self.grad(&comps[0]),
            OperatorId::Div => vec![self.div(comps)],
            OperatorId::Laplace => vec![self.div(&self.grad(&comps[0]))],
        }
    }

    fn grad(&self, f: &Expr) -> Vec<Expr> {
        let n = self.metric.dim();
        let df: Vec<Expr> = (0..n).map(|j| diff_expr(f, j)).collect();
        (0..n)
            .map(|i| Expr::sum((0..n).map(|j| self.metric.inverse(i, j).mul(&df[j]))))
            .collect()
    }

    fn div(&self, y: &[Expr]) -> Expr {
        let root = self.metric.sqrt_det();
        let flux = Expr::sum(y.iter().enumerate().map(|(j, yj)| diff_expr(&root.mul(yj), j)));
        flux.div(root)
    }
}

/// Chart block of `op` for `metric` on chart `chart`.
pub fn local_representation(op: OperatorId, metric: &MetricField, chart: usize) -> ChartBlock {
    ChartBlock {
        op,
        chart,
        metric: metric.chart(chart).clone(),
    }
}

/// An operator with one chart block per chart.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    id: OperatorId,
    blocks: Vec<ChartBlock>,
}

impl LocalOperator {
    pub fn new(id: OperatorId, metric: &MetricField) -> Self {
        LocalOperator {
            id,
            blocks: (0..metric.charts().len())
                .map(|c| local_representation(id, metric, c))
                .collect(),
        }
    }

    pub fn id(&self) -> OperatorId {
        self.id
    }

    pub fn blocks(&self) -> &[ChartBlock] {
        &self.blocks
    }
}

/// Chartwise `(Pu)|_U = Q(u|_U)`.
pub fn apply_operator(op: &LocalOperator, u: &TensorField) -> Result<TensorField, OperatorError> {
    if u.valence() != op.id.source() {
        return Err(OperatorError::ValenceMismatch {
            op: op.id,
            expected: op.id.source(),
            got: u.valence(),
        });
    }
    if u.chart_count() != op.blocks.len() {
        return Err(GeometryError::ChartCount {
            expected: op.blocks.len(),
            got: u.chart_count(),
        }
        .into());
    }
    let charts = op
        .blocks
        .iter()
        .enumerate()
        .map(|(c, b)| b.apply(u.components(c)))
        .collect();
    Ok(TensorField::new(op.id.target(), u.dim(), charts)?)
}

/// Manifold norm used on both sides of an operator bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundNorm {
    #[default]
    Chart,
    ConnectionLqSum,
    ConnectionSum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub schema: &'static str,
    pub operator: OperatorId,
    pub from: Exponent,
    pub to: Exponent,
    pub norm: BoundNorm,
    pub atlas_id: String,
    pub pou_id: String,
    /// Derivative-order screening; `None` when the exponent pair is not of
    /// the form `(e, q) -> (e - order, q)` or lower.
    pub screening: Option<Verdict>,
    pub grid: usize,
    pub coarse_grid: usize,
    pub ratios: Vec<f64>,
    pub coarse_ratios: Vec<f64>,
    pub sup: f64,
    pub coarse_sup: f64,
    /// `|sup - coarse_sup| / sup`.
    pub relative_change: f64,
    /// `|ratio(5u) - ratio(u)| / ratio(u)` per function.
    pub scale_deviation: Vec<f64>,
}

fn numeric(e: &Exponent) -> Result<(f64, f64), OperatorError> {
    let bad = || OperatorError::UnsupportedExponent(e.to_string());
    let p = e.finite_p().map_err(|_| bad())?;
    let s = e.s().to_f64().ok_or_else(bad)?;
    let p = p.to_f64().ok_or_else(bad)?;
    if s < 0.0 {
        return Err(bad());
    }
    Ok((s, p))
}

fn image_class(manifold: &Manifold) -> DomainClass {
    match manifold.atlas().charts()[0].image() {
        ChartImage::FullSpace => DomainClass::FullSpace,
        _ => DomainClass::BoundedLipschitz,
    }
}

fn screen(op: OperatorId, manifold: &Manifold, from: &Exponent, to: &Exponent) -> Result<Option<Verdict>, OperatorError> {
    let shifted = from.s() - num::BigRational::from_integer(op.order().into());
    if from.p() != to.p() || *to.s() > shifted {
        return Ok(None);
    }
    let spec = SpaceSpec::new(from.clone(), manifold.dim() as u32, image_class(manifold))?;
    Ok(Some(check_derivative(&spec, op.order())?))
}

fn norm_of(
    u: &ManifoldFunction,
    manifold: &Manifold,
    s: f64,
    q: f64,
    grid: usize,
    norm: BoundNorm,
) -> Result<f64, OperatorError> {
    let combination = match norm {
        BoundNorm::Chart => return Ok(chart_sobolev_norm(u, manifold, s, q, Some(grid))?.value),
        BoundNorm::ConnectionLqSum => ConnectionCombination::LqSum,
        BoundNorm::ConnectionSum => ConnectionCombination::Sum,
    };
    if s.fract() != 0.0 {
        return Err(OperatorError::FractionalConnection(s.to_string()));
    }
    Ok(connection_sobolev_norm(u, manifold, s as usize, q, Some(grid), combination)?.value)
}

fn ratios(
    op: &LocalOperator,
    family: &[ManifoldFunction],
    manifold: &Manifold,
    (e, q): (f64, f64),
    (te, tq): (f64, f64),
    grid: usize,
    norm: BoundNorm,
) -> Result<Vec<f64>, OperatorError> {
    family
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let image = ManifoldFunction::Local(apply_operator(op, &u.realize(manifold)?)?);
            let below = norm_of(u, manifold, e, q, grid, norm)?;
            if below == 0.0 {
                return Err(OperatorError::ZeroNorm(i));
            }
            Ok(norm_of(&image, manifold, te, tq, grid, norm)? / below)
        })
        .collect()
}

/// `sup_u ||P u||_to / ||u||_from` over `family` at grids `N` and `N/2`.
pub fn empirical_bound(
    op: OperatorId,
    manifold: &Manifold,
    from: &Exponent,
    to: &Exponent,
    family: &[ManifoldFunction],
    grid: usize,
    norm: BoundNorm,
) -> Result<BoundReport, OperatorError> {
    if family.is_empty() {
        return Err(OperatorError::EmptyFamily);
    }
    let (fs, ft) = (numeric(from)?, numeric(to)?);
    let screening = screen(op, manifold, from, to)?;
    let local = LocalOperator::new(op, manifold.metric());
    let fine = ratios(&local, family, manifold, fs, ft, grid, norm)?;
    let coarse = ratios(&local, family, manifold, fs, ft, grid / 2, norm)?;
    let scaled: Vec<ManifoldFunction> = family.iter().map(|u| u.scaled(5.0)).collect();
    let fine5 = ratios(&local, &scaled, manifold, fs, ft, grid, norm)?;
    let sup = fine.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let coarse_sup = coarse.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundReport {
        schema: crate::SCHEMA_VERSION,
        operator: op,
        from: from.clone(),
        to: to.clone(),
        norm,
        atlas_id: manifold.atlas().id().to_string(),
        pou_id: manifold.pou().id().to_string(),
        screening,
        grid,
        coarse_grid: grid / 2,
        scale_deviation: fine.iter().zip(&fine5).map(|(a, b)| ((b - a) / a).abs()).collect(),
        ratios: fine,
        coarse_ratios: coarse,
        relative_change: if sup == 0.0 { 0.0 } else { (sup - coarse_sup).abs() / sup },
        sup,
        coarse_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::ManifoldId;
    use crate::parse_expr;

    fn at(field: &TensorField, chart: usize, t: &[f64]) -> Vec<f64> {
        field.eval(chart, t).unwrap()
    }

    #[test]
    fn laplacian_of_sine_on_circle_torus() {
        let m = Manifold::builtin(ManifoldId::Torus1);
        let u = TensorField::function(m.atlas(), &parse_expr("sin(2*pi*x1)", 1).unwrap());
        let lap = apply_operator(&LocalOperator::new(OperatorId::Laplace, m.metric()), &u).unwrap();
        let t = 0.3;
        let expected = -(2.0 * std::f64::consts::PI).powi(2) * (2.0 * std::f64::consts::PI * t).sin();
        assert!((at(&lap, 0, &[t])[0] - expected).abs() < 1e-9);
    }

    #[test]
    fn divergence_on_sphere_chart() {
        let m = Manifold::builtin(ManifoldId::S2Stereo);
        let x = parse_expr("x1", 2).unwrap();
        let y = TensorField::new(Valence::VECTOR, 2, vec![vec![x.clone(), Expr::zero()]; 2]).unwrap();
        let div = apply_operator(&LocalOperator::new(OperatorId::Div, m.metric()), &y).unwrap();
        for t in [[0.3, -0.7], [1.2, 0.4], [-2.0, 1.5]] {
            let r2 = t[0] * t[0] + t[1] * t[1];
            let expected = 1.0 - 4.0 * t[0] * t[0] / (1.0 + r2);
            assert!((at(&div, 0, &t)[0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn valence_is_checked() {
        let m = Manifold::builtin(ManifoldId::Torus1);
        let u = TensorField::function(m.atlas(), &Expr::one());
        let err = apply_operator(&LocalOperator::new(OperatorId::Div, m.metric()), &u).unwrap_err();
        assert!(matches!(err, OperatorError::ValenceMismatch { .. }));
    }

    #[test]
    fn names_round_trip() {
        for op in OperatorId::ALL {
            assert_eq!(op.name().parse::<OperatorId>().unwrap(), op);
        }
        assert!("curl".parse::<OperatorId>().is_err());
    }
}
