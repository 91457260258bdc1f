//! Metrics, Levi-Civita connections and tensor fields in chart components.
//!
//! Components of a tensor field of valence `(l, k)` (`l` contravariant, `k`
//! covariant) are stored per chart as a flat row-major array indexed by
//! `(a_1, ..., a_l, b_1, ..., b_k)`, upper indices first. The covariant
//! derivative appends one lower index at the end:
//!
//! ```text
//! (nabla T)^{a..}_{b.. i} = d_i T^{a..}_{b..} + sum_r G^{a_r}_{i c} T^{..c..}_{b..}
//!                                             - sum_s G^{c}_{i b_s} T^{a..}_{..c..}
//! G^k_{ij} = 1/2 g^{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij})
//! ```

use serde::Serialize;
use thiserror::Error;

use crate::atlas::{Atlas, AtlasError, ManifoldId};
use crate::funcexpr::{diff_expr, CompiledExpr, EvalError, Expr};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("metric must be a square matrix of size 1, 2 or 3 (got {0})")]
    BadShape(usize),
    #[error("metric components g_{i}{j} and g_{j}{i} differ")]
    Asymmetric { i: usize, j: usize },
    #[error("metric determinant is symbolically zero")]
    SingularMetric,
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("{got} chart blocks given for {expected} charts")]
    ChartCount { expected: usize, got: usize },
    #[error("component count {got} does not match valence ({expected} expected)")]
    ComponentCount { expected: usize, got: usize },
    #[error("no slot {slot} of the requested kind (valence {upper} upper, {lower} lower)")]
    SlotMismatch {
        slot: usize,
        upper: usize,
        lower: usize,
    },
    #[error("valence mismatch: expected {expected:?}, got {got:?}")]
    ValenceMismatch { expected: Valence, got: Valence },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
}

/// `upper` contravariant and `lower` covariant slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Valence {
    pub upper: usize,
    pub lower: usize,
}

impl Valence {
    pub const SCALAR: Valence = Valence { upper: 0, lower: 0 };
    pub const VECTOR: Valence = Valence { upper: 1, lower: 0 };
    pub const COVECTOR: Valence = Valence { upper: 0, lower: 1 };

    pub fn new(upper: usize, lower: usize) -> Self {
        Valence { upper, lower }
    }

    pub fn rank(self) -> usize {
        self.upper + self.lower
    }
}

/// Symbolic metric data on one chart.
#[derive(Debug, Clone)]
pub struct ChartMetric {
    dim: usize,
    g: Vec<Vec<Expr>>,
    g_inv: Vec<Vec<Expr>>,
    det: Expr,
    sqrt_det: Expr,
    christoffel: ChristoffelField,
}

/// `G^k_{ij}` on one chart; `G^k_{ij}` and `G^k_{ji}` share one expression.
#[derive(Debug, Clone)]
pub struct ChristoffelField {
    dim: usize,
    components: Vec<Expr>,
}

impl ChristoffelField {
    pub fn get(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.components[(k * self.dim + i) * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_identically_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    /// Every component at `t`, in `(k, i, j)` row-major order.
    pub fn eval(&self, t: &[f64]) -> Result<Vec<f64>, EvalError> {
        CompiledExpr::new(&self.components).eval(t)
    }
}

fn symbolic_det(g: &[Vec<Expr>]) -> Expr {
    match g.len() {
        1 => g[0][0].clone(),
        2 => g[0][0].mul(&g[1][1]).sub(&g[0][1].mul(&g[1][0])),
        _ => {
            let minor = |r: usize, c: usize| cofactor_minor(g, r, c);
            g[0][0]
                .mul(&minor(0, 0))
                .sub(&g[0][1].mul(&minor(0, 1)))
                .add(&g[0][2].mul(&minor(0, 2)))
        }
    }
}

/// Determinant of the 2x2 minor of a 3x3 matrix omitting row `r`, column `c`.
fn cofactor_minor(g: &[Vec<Expr>], r: usize, c: usize) -> Expr {
    let rows: Vec<usize> = (0..3).filter(|i| *i != r).collect();
    let cols: Vec<usize> = (0..3).filter(|j| *j != c).collect();
    g[rows[0]][cols[0]]
        .mul(&g[rows[1]][cols[1]])
        .sub(&g[rows[0]][cols[1]].mul(&g[rows[1]][cols[0]]))
}

/// Inverse by the adjugate formula.
fn symbolic_inverse(g: &[Vec<Expr>], det: &Expr) -> Vec<Vec<Expr>> {
    let n = g.len();
    match n {
        1 => vec![vec![Expr::one().div(det)]],
        2 => vec![
            vec![g[1][1].div(det), g[0][1].neg().div(det)],
            vec![g[1][0].neg().div(det), g[0][0].div(det)],
        ],
        _ => (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| {
                        // adj(g)_{ij} = (-1)^{i+j} M_{ji}
                        let m = cofactor_minor(g, j, i);
                        let signed = if (i + j) % 2 == 0 { m } else { m.neg() };
                        signed.div(det)
                    })
                    .collect()
            })
            .collect(),
    }
}

impl ChartMetric {
    pub fn new(g: Vec<Vec<Expr>>) -> Result<Self, GeometryError> {
        let n = g.len();
        if !(1..=3).contains(&n) || g.iter().any(|r| r.len() != n) {
            return Err(GeometryError::BadShape(n));
        }
        for i in 0..n {
            for j in i + 1..n {
                if g[i][j].to_string() != g[j][i].to_string() {
                    return Err(GeometryError::Asymmetric { i, j });
                }
            }
        }
        let det = symbolic_det(&g);
        if det.is_zero() {
            return Err(GeometryError::SingularMetric);
        }
        let g_inv = symbolic_inverse(&g, &det);
        let sqrt_det = det.sqrt();

        // d_l g_ij
        let dg: Vec<Vec<Vec<Expr>>> = (0..n)
            .map(|l| {
                (0..n)
                    .map(|i| (0..n).map(|j| diff_expr(&g[i][j], l)).collect())
                    .collect()
            })
            .collect();
        let mut components = vec![Expr::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let gamma = Expr::sum((0..n).map(|l| {
                        let bracket = dg[i][j][l].add(&dg[j][i][l]).sub(&dg[l][i][j]);
                        g_inv[k][l].mul(&bracket)
                    }))
                    .scale(0.5);
                    components[(k * n + i) * n + j] = gamma.clone();
                    components[(k * n + j) * n + i] = gamma;
                }
            }
        }
        Ok(ChartMetric {
            dim: n,
            g,
            g_inv,
            det,
            sqrt_det,
            christoffel: ChristoffelField { dim: n, components },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self, i: usize, j: usize) -> &Expr {
        &self.g[i][j]
    }

    pub fn inverse(&self, i: usize, j: usize) -> &Expr {
        &self.g_inv[i][j]
    }

    pub fn det(&self) -> &Expr {
        &self.det
    }

    /// Volume density `sqrt(det g)`.
    pub fn sqrt_det(&self) -> &Expr {
        &self.sqrt_det
    }

    pub fn christoffel(&self) -> &ChristoffelField {
        &self.christoffel
    }

    pub fn eval_metric(&self, t: &[f64]) -> Result<Matrix, EvalError> {
        eval_square(&self.g, t)
    }

    pub fn eval_inverse(&self, t: &[f64]) -> Result<Matrix, EvalError> {
        eval_square(&self.g_inv, t)
    }

    pub fn check_positive_definite(&self, t: &[f64]) -> Result<(), GeometryError> {
        if linalg::is_positive_definite(&self.eval_metric(t)?) {
            Ok(())
        } else {
            Err(GeometryError::NotPositiveDefinite(t.to_vec()))
        }
    }

    fn metric_exprs(&self) -> Vec<Expr> {
        self.g.iter().flatten().cloned().collect()
    }

    fn inverse_exprs(&self) -> Vec<Expr> {
        self.g_inv.iter().flatten().cloned().collect()
    }
}

fn eval_square(m: &[Vec<Expr>], t: &[f64]) -> Result<Matrix, EvalError> {
    let flat: Vec<Expr> = m.iter().flatten().cloned().collect();
    let v = CompiledExpr::new(&flat).eval(t)?;
    Ok(v.chunks(m.len()).map(<[f64]>::to_vec).collect())
}

/// A Riemannian metric given chartwise.
#[derive(Debug, Clone)]
pub struct MetricField {
    charts: Vec<ChartMetric>,
}

impl MetricField {
    /// The round metric on the spheres (stereographic conformal factor
    /// `4 / (1 + |u|^2)^2`) and the flat metric on the tori.
    pub fn builtin(atlas: &Atlas) -> MetricField {
        let n = atlas.dim();
        let charts = atlas
            .charts()
            .iter()
            .map(|_| {
                let factor = match atlas.manifold() {
                    ManifoldId::S1Stereo | ManifoldId::S2Stereo => {
                        let q = Expr::sum((0..n).map(|i| Expr::var(i).powi(2)));
                        Expr::constant(4.0).div(&Expr::one().add(&q).powi(2))
                    }
                    ManifoldId::Torus1 | ManifoldId::Torus2 => Expr::one(),
                };
                ChartMetric::new(conformal(n, &factor)).expect("built-in metric is valid")
            })
            .collect();
        MetricField { charts }
    }

    /// `g_ij = sum_A d_i X^A d_j X^A`, the metric induced by the ambient
    /// Euclidean space through each chart inverse.
    pub fn pullback(atlas: &Atlas) -> Result<MetricField, GeometryError> {
        let n = atlas.dim();
        let charts = atlas
            .charts()
            .iter()
            .map(|c| {
                let jac: Vec<Vec<Expr>> = c
                    .inverse_exprs()
                    .iter()
                    .map(|x| (0..n).map(|i| diff_expr(x, i)).collect())
                    .collect();
                let g = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| Expr::sum(jac.iter().map(|row| row[i].mul(&row[j]))))
                            .collect()
                    })
                    .collect();
                ChartMetric::new(g)
            })
            .collect::<Result<_, _>>()?;
        Ok(MetricField { charts })
    }

    /// One `n x n` block of component expressions per chart.
    pub fn from_components(blocks: Vec<Vec<Vec<Expr>>>) -> Result<MetricField, GeometryError> {
        Ok(MetricField {
            charts: blocks.into_iter().map(ChartMetric::new).collect::<Result<_, _>>()?,
        })
    }

    pub fn chart(&self, index: usize) -> &ChartMetric {
        &self.charts[index]
    }

    pub fn charts(&self) -> &[ChartMetric] {
        &self.charts
    }

    pub fn dim(&self) -> usize {
        self.charts.first().map_or(0, |c| c.dim)
    }

    /// Inverse components and volume density on one chart.
    pub fn metric_aux(&self, chart: usize) -> (Vec<Vec<Expr>>, Expr) {
        let c = &self.charts[chart];
        (c.g_inv.clone(), c.sqrt_det.clone())
    }

    /// Christoffel symbols on one chart.
    pub fn christoffel(&self, chart: usize) -> &ChristoffelField {
        &self.charts[chart].christoffel
    }

    /// The metric as a `(0, 2)` tensor field.
    pub fn as_tensor(&self) -> TensorField {
        TensorField {
            valence: Valence::new(0, 2),
            dim: self.dim(),
            charts: self.charts.iter().map(ChartMetric::metric_exprs).collect(),
        }
    }
}

/// `factor * delta_ij`.
pub fn conformal(n: usize, factor: &Expr) -> Vec<Vec<Expr>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { factor.clone() } else { Expr::zero() })
                .collect()
        })
        .collect()
}

/// Chart components of a tensor field.
#[derive(Debug, Clone)]
pub struct TensorField {
    valence: Valence,
    dim: usize,
    charts: Vec<Vec<Expr>>,
}

fn component_count(dim: usize, valence: Valence) -> usize {
    dim.pow(valence.rank() as u32)
}

fn unflatten(mut idx: usize, rank: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; rank];
    for slot in (0..rank).rev() {
        out[slot] = idx % n;
        idx /= n;
    }
    out
}

fn flatten(indices: &[usize], n: usize) -> usize {
    indices.iter().fold(0, |acc, i| acc * n + i)
}

impl TensorField {
    pub fn new(valence: Valence, dim: usize, charts: Vec<Vec<Expr>>) -> Result<Self, GeometryError> {
        let expected = component_count(dim, valence);
        for c in &charts {
            if c.len() != expected {
                return Err(GeometryError::ComponentCount {
                    expected,
                    got: c.len(),
                });
            }
        }
        Ok(TensorField {
            valence,
            dim,
            charts,
        })
    }

    /// A function given in ambient coordinates, pulled back to every chart.
    pub fn function(atlas: &Atlas, ambient: &Expr) -> TensorField {
        TensorField {
            valence: Valence::SCALAR,
            dim: atlas.dim(),
            charts: atlas
                .charts()
                .iter()
                .map(|c| vec![ambient.substitute(c.inverse_exprs())])
                .collect(),
        }
    }

    /// Vector field from an ambient vector field `V`: `X = g^{-1} J^T V`
    /// with `J = d(phi^{-1})`, i.e. the tangential part of `V` in chart
    /// components (exact when `V` is tangent and `g` is the induced metric).
    pub fn vector_from_ambient(atlas: &Atlas, metric: &MetricField, ambient: &[Expr]) -> TensorField {
        let n = atlas.dim();
        let charts = atlas
            .charts()
            .iter()
            .zip(metric.charts())
            .map(|(c, m)| {
                let w = pulled_covector(c.inverse_exprs(), ambient, n);
                (0..n)
                    .map(|a| Expr::sum((0..n).map(|b| m.inverse(a, b).mul(&w[b]))))
                    .collect()
            })
            .collect();
        TensorField {
            valence: Valence::VECTOR,
            dim: n,
            charts,
        }
    }

    /// One-form from an ambient covector field `W`: `omega_i = sum_A d_i X^A W_A`.
    pub fn covector_from_ambient(atlas: &Atlas, ambient: &[Expr]) -> TensorField {
        let n = atlas.dim();
        TensorField {
            valence: Valence::COVECTOR,
            dim: n,
            charts: atlas
                .charts()
                .iter()
                .map(|c| pulled_covector(c.inverse_exprs(), ambient, n))
                .collect(),
        }
    }

    pub fn valence(&self) -> Valence {
        self.valence
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chart_count(&self) -> usize {
        self.charts.len()
    }

    pub fn components(&self, chart: usize) -> &[Expr] {
        &self.charts[chart]
    }

    pub fn component(&self, chart: usize, indices: &[usize]) -> &Expr {
        &self.charts[chart][flatten(indices, self.dim)]
    }

    pub fn eval(&self, chart: usize, t: &[f64]) -> Result<Vec<f64>, EvalError> {
        CompiledExpr::new(&self.charts[chart]).eval(t)
    }

    pub fn scale(&self, c: f64) -> TensorField {
        self.map(|e| e.scale(c))
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> TensorField {
        TensorField {
            valence: self.valence,
            dim: self.dim,
            charts: self
                .charts
                .iter()
                .map(|c| c.iter().map(&f).collect())
                .collect(),
        }
    }

    /// Componentwise product with a per-chart scalar expression.
    pub fn multiply_local(&self, scalars: &[Expr]) -> TensorField {
        TensorField {
            valence: self.valence,
            dim: self.dim,
            charts: self
                .charts
                .iter()
                .zip(scalars)
                .map(|(c, s)| c.iter().map(|e| s.mul(e)).collect())
                .collect(),
        }
    }
}

fn pulled_covector(inverse: &[Expr], ambient: &[Expr], n: usize) -> Vec<Expr> {
    let at_chart: Vec<Expr> = ambient.iter().map(|w| w.substitute(inverse)).collect();
    (0..n)
        .map(|i| {
            Expr::sum(
                inverse
                    .iter()
                    .zip(&at_chart)
                    .map(|(x, w)| diff_expr(x, i).mul(w)),
            )
        })
        .collect()
}

fn check_charts(field: &TensorField, metric: &MetricField) -> Result<(), GeometryError> {
    if field.charts.len() != metric.charts.len() {
        return Err(GeometryError::ChartCount {
            expected: metric.charts.len(),
            got: field.charts.len(),
        });
    }
    Ok(())
}

/// One application of the Levi-Civita connection on every chart.
fn nabla_once(field: &TensorField, metric: &MetricField) -> TensorField {
    let n = field.dim;
    let v = field.valence;
    let rank = v.rank();
    let out_valence = Valence::new(v.upper, v.lower + 1);
    let charts = field
        .charts
        .iter()
        .zip(metric.charts())
        .map(|(comps, m)| {
            let gamma = m.christoffel();
            (0..component_count(n, out_valence))
                .map(|flat| {
                    let idx = unflatten(flat, rank + 1, n);
                    let (base, i) = (&idx[..rank], idx[rank]);
                    let mut terms = vec![diff_expr(&comps[flatten(base, n)], i)];
                    for slot in 0..rank {
                        for c in 0..n {
                            let mut moved = base.to_vec();
                            moved[slot] = c;
                            let t = &comps[flatten(&moved, n)];
                            if slot < v.upper {
                                terms.push(gamma.get(base[slot], i, c).mul(t));
                            } else {
                                terms.push(gamma.get(c, i, base[slot]).mul(t).neg());
                            }
                        }
                    }
                    Expr::sum(terms)
                })
                .collect()
        })
        .collect();
    TensorField {
        valence: out_valence,
        dim: n,
        charts,
    }
}

/// `nabla^order field`, adding `order` covariant slots at the end.
pub fn covariant_derivative(
    field: &TensorField,
    metric: &MetricField,
    order: usize,
) -> Result<TensorField, GeometryError> {
    check_charts(field, metric)?;
    let mut cur = field.clone();
    for _ in 0..order {
        cur = nabla_once(&cur, metric);
    }
    Ok(cur)
}

/// Applies the matrix `m` to slot `slot` of a rank-`rank` component array.
pub fn contract_slot(values: &[f64], rank: usize, n: usize, slot: usize, m: &Matrix) -> Vec<f64> {
    (0..values.len())
        .map(|flat| {
            let mut idx = unflatten(flat, rank, n);
            let i = idx[slot];
            (0..n)
                .map(|j| {
                    idx[slot] = j;
                    m[i][j] * values[flatten(&idx, n)]
                })
                .sum()
        })
        .collect()
}

/// Fiber inner product of two component arrays of the same valence given
/// `g` and `g^{-1}` at a point: upper slots contract with `g`, lower with
/// `g^{-1}`.
pub fn fiber_inner(a: &[f64], b: &[f64], valence: Valence, g: &Matrix, g_inv: &Matrix) -> f64 {
    let n = g.len();
    let rank = valence.rank();
    let mut t = b.to_vec();
    for slot in 0..rank {
        let m = if slot < valence.upper { g } else { g_inv };
        t = contract_slot(&t, rank, n, slot, m);
    }
    a.iter().zip(&t).map(|(x, y)| x * y).sum()
}

/// `|A|` at chart point `t`.
pub fn fiber_norm(field: &TensorField, metric: &MetricField, chart: usize, t: &[f64]) -> Result<f64, GeometryError> {
    check_charts(field, metric)?;
    let m = metric.chart(chart);
    m.check_positive_definite(t)?;
    let a = field.eval(chart, t)?;
    let g = m.eval_metric(t)?;
    let g_inv = m.eval_inverse(t)?;
    Ok(fiber_inner(&a, &a, field.valence, &g, &g_inv).max(0.0).sqrt())
}

/// Compiled evaluator of `|A|` on one chart for bulk sampling.
#[derive(Debug, Clone)]
pub struct FiberNormEvaluator {
    tape: CompiledExpr,
    valence: Valence,
    dim: usize,
    components: usize,
}

impl FiberNormEvaluator {
    pub fn new(field: &TensorField, metric: &MetricField, chart: usize) -> Self {
        let m = metric.chart(chart);
        let mut exprs = field.charts[chart].clone();
        let components = exprs.len();
        if field.valence.rank() > 0 {
            exprs.extend(m.metric_exprs());
            exprs.extend(m.inverse_exprs());
        }
        FiberNormEvaluator {
            tape: CompiledExpr::new(&exprs),
            valence: field.valence,
            dim: field.dim,
            components,
        }
    }

    pub fn eval(&self, t: &[f64], scratch: &mut Vec<f64>, out: &mut Vec<f64>) -> Result<f64, EvalError> {
        out.resize(self.tape.outputs(), 0.0);
        self.tape.eval_into(t, scratch, out)?;
        if self.valence.rank() == 0 {
            return Ok(out[0].abs());
        }
        let n = self.dim;
        let (a, rest) = out.split_at(self.components);
        let g: Matrix = rest[..n * n].chunks(n).map(<[f64]>::to_vec).collect();
        let g_inv: Matrix = rest[n * n..].chunks(n).map(<[f64]>::to_vec).collect();
        Ok(fiber_inner(a, a, self.valence, &g, &g_inv).max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Musical {
    /// Lower upper slot `slot`; it becomes the first lower slot.
    Flat,
    /// Raise lower slot `slot` (counted among lower slots); it becomes the
    /// last upper slot.
    Sharp,
}

/// Index lowering `X_i = g_ij X^j` or raising `w^i = g^ij w_j` on one slot.
pub fn musical(
    field: &TensorField,
    metric: &MetricField,
    direction: Musical,
    slot: usize,
) -> Result<TensorField, GeometryError> {
    check_charts(field, metric)?;
    let v = field.valence;
    let n = field.dim;
    let mismatch = GeometryError::SlotMismatch {
        slot,
        upper: v.upper,
        lower: v.lower,
    };
    let (source_pos, target_valence, target_pos) = match direction {
        Musical::Flat if slot < v.upper => (slot, Valence::new(v.upper - 1, v.lower + 1), v.upper - 1),
        Musical::Sharp if slot < v.lower => (v.upper + slot, Valence::new(v.upper + 1, v.lower - 1), v.upper),
        _ => return Err(mismatch),
    };
    let rank = v.rank();
    let charts = field
        .charts
        .iter()
        .zip(metric.charts())
        .map(|(comps, m)| {
            (0..component_count(n, target_valence))
                .map(|flat| {
                    let out_idx = unflatten(flat, rank, n);
                    // remove the moved index from the output position, reinsert it at the source
                    let mut rest = out_idx.clone();
                    let i = rest.remove(target_pos);
                    Expr::sum((0..n).map(|j| {
                        let mut src = rest.clone();
                        src.insert(source_pos, j);
                        let coeff = match direction {
                            Musical::Flat => m.metric(i, j),
                            Musical::Sharp => m.inverse(i, j),
                        };
                        coeff.mul(&comps[flatten(&src, n)])
                    }))
                })
                .collect()
        })
        .collect();
    Ok(TensorField {
        valence: target_valence,
        dim: n,
        charts,
    })
}

/// Components of `field` at chart-`from` point `t`, pushed to chart `to`
/// by the tensor transformation law, next to the components evaluated
/// directly in chart `to`.
pub fn transform_components(
    field: &TensorField,
    atlas: &Atlas,
    from: usize,
    to: usize,
    t: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let tr = crate::atlas::transition_map(atlas, from, to)?;
    let s = tr.apply(t)?;
    let j = tr.jacobian(t)?;
    let j_inv = linalg::inverse(&j).ok_or(GeometryError::SingularMetric)?;
    let j_inv_t = linalg::transpose(&j_inv);
    let v = field.valence;
    let rank = v.rank();
    let mut pushed = field.eval(from, t)?;
    for slot in 0..rank {
        let m = if slot < v.upper { &j } else { &j_inv_t };
        pushed = contract_slot(&pushed, rank, field.dim, slot, m);
    }
    Ok((pushed, field.eval(to, &s)?))
}
