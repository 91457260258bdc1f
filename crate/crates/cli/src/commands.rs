use std::fs;
use std::path::Path;

use num::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};
use sobolev::atlas::{transition_map, AtlasConfig, ManifoldId};
use sobolev::exponents::{
    check_derivative, check_embedding, check_extension, check_multiplication, check_pointwise, parse_rational,
    DomainClass, Exponent, SpaceSpec, Verdict,
};
use sobolev::geometry::Valence;
use sobolev::manifold_norms::{
    chart_sobolev_norm, compare_norms, connection_sobolev_norm, manifold_lq_norm, overlap_consistency, Manifold,
    ManifoldFunction, NormChoice,
};
use sobolev::operators::{apply_operator, empirical_bound, LocalOperator, OperatorId};
use sobolev::quadrature::{default_grid, sobolev_norm, sobolev_seminorm, BoxDomain, Field, NormVariant, QuadratureOptions};
use sobolev::{parse_expr, Expr};

use crate::args::{AtlasCommand, CheckCommand, Command, CompareArgs, NormCommand, OpCommand, TargetArgs, VariantArg};
use crate::config::{Definition, FieldKind, Quantity, RunConfig, VariantConfig, VariantKind};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Computed,
    NotGuaranteed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Computed => 0,
            Status::NotGuaranteed => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Output {
    pub report: Value,
    pub status: Status,
    /// Certificate conditions in the order the candidates were tried.
    pub trace: Option<Vec<String>>,
}

fn to_value(v: &impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::numerical(format!("cannot serialise report: {e}")))
}

fn read_atlas(path: &Path) -> Result<AtlasConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid atlas config {}: {e}", path.display())))
}

fn target(t: TargetArgs) -> Result<(Option<ManifoldId>, Option<AtlasConfig>), CliError> {
    let atlas = t.atlas_config.as_deref().map(read_atlas).transpose()?;
    Ok((t.manifold, atlas))
}

/// Reads a `run --config` file: either a bare configuration or a whole report.
pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid JSON in {}: {e}", path.display())))?;
    if value.get("report").is_some() {
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::usage(format!("invalid run config: {e}")))
}

/// Converts parsed arguments into a configuration with every default filled in.
pub fn resolve(command: Command) -> Result<RunConfig, CliError> {
    let config = match command {
        Command::Check(c) => match c {
            CheckCommand::Embed { space, from, to } => RunConfig::CheckEmbed {
                n: space.n,
                domain: space.domain,
                from,
                to,
            },
            CheckCommand::Multiply { space, a, b, target } => RunConfig::CheckMultiply {
                n: space.n,
                domain: space.domain,
                a,
                b,
                target,
            },
            CheckCommand::Pointwise {
                space,
                space_exponent,
                mode,
            } => RunConfig::CheckPointwise {
                n: space.n,
                domain: space.domain,
                space: space_exponent,
                mode,
            },
            CheckCommand::Derivative {
                space,
                space_exponent,
                order,
            } => RunConfig::CheckDerivative {
                n: space.n,
                domain: space.domain,
                space: space_exponent,
                order,
            },
            CheckCommand::Extend {
                n,
                space_exponent,
                enclosing,
            } => RunConfig::CheckExtend {
                n,
                space: space_exponent,
                enclosing,
            },
        },
        Command::Norm(c) => match c {
            NormCommand::Euclid {
                expr,
                bounds,
                s,
                p,
                grid,
                quantity,
                variant,
            } => RunConfig::NormEuclid {
                expr,
                bounds: parse_bounds(&bounds)?,
                s,
                p,
                grid,
                quantity,
                variant: match variant {
                    VariantArg::Seminorm => NormVariant::Seminorm,
                    VariantArg::FullNorm => NormVariant::FullNorm,
                },
            },
            NormCommand::Manifold {
                target: t,
                field,
                q,
                grid,
                definition,
                e,
            } => {
                let (manifold, atlas) = target(t)?;
                RunConfig::NormManifold {
                    manifold,
                    atlas,
                    field: field.field,
                    expr: field.expr,
                    q,
                    grid,
                    definition,
                    e,
                }
            }
            NormCommand::Connection {
                target: t,
                field,
                k,
                q,
                grid,
                combination,
            } => {
                let (manifold, atlas) = target(t)?;
                RunConfig::NormConnection {
                    manifold,
                    atlas,
                    field: field.field,
                    expr: field.expr,
                    k,
                    q,
                    grid,
                    combination: combination.into(),
                }
            }
        },
        Command::Compare(c) => compare_config(c)?,
        Command::Op(c) => match c {
            OpCommand::Apply {
                op,
                target: t,
                expr,
                samples,
            } => {
                let (manifold, atlas) = target(t)?;
                RunConfig::OpApply {
                    op,
                    manifold,
                    atlas,
                    expr,
                    samples,
                }
            }
            OpCommand::Bound {
                op,
                target: t,
                from,
                to,
                expr,
                grid,
                norm,
            } => {
                let (manifold, atlas) = target(t)?;
                RunConfig::OpBound {
                    op,
                    manifold,
                    atlas,
                    from,
                    to,
                    expr,
                    grid,
                    norm: norm.into(),
                }
            }
        },
        Command::Atlas(AtlasCommand::Show { target: t }) => {
            let (manifold, atlas) = target(t)?;
            RunConfig::AtlasShow { manifold, atlas }
        }
        Command::Run(r) => read_config(&r.config)?,
    };
    Ok(fill_defaults(config))
}

fn compare_config(c: CompareArgs) -> Result<RunConfig, CliError> {
    let side = |kind, path: Option<&Path>| -> Result<VariantConfig, CliError> {
        let atlas = path.map(read_atlas).transpose()?;
        Ok(VariantConfig {
            kind,
            manifold: if atlas.is_some() { None } else { c.manifold },
            atlas,
            combination: c.combination.into(),
        })
    };
    Ok(RunConfig::Compare {
        a: side(c.a, c.atlas_config_a.as_deref())?,
        b: side(c.b, c.atlas_config_b.as_deref())?,
        expr: c.expr.clone(),
        e: c.e.clone(),
        q: c.q.clone(),
        grid: c.grid,
    })
}

fn parse_bounds(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("invalid box bound '{t}'")))
        })
        .collect()
}

fn target_dim(manifold: Option<ManifoldId>, atlas: &Option<AtlasConfig>) -> Option<usize> {
    manifold.or(atlas.as_ref().map(|a| a.manifold)).map(ManifoldId::dim)
}

fn infer_field(expr: &str) -> FieldKind {
    if expr.contains(';') {
        FieldKind::Vector
    } else {
        FieldKind::Scalar
    }
}

/// Fills grids and field kinds that depend on other settings.
pub fn fill_defaults(mut config: RunConfig) -> RunConfig {
    match &mut config {
        RunConfig::NormEuclid { bounds, grid, .. } => {
            grid.get_or_insert(default_grid((bounds.len() / 2).max(1)));
        }
        RunConfig::NormManifold {
            manifold,
            atlas,
            field,
            expr,
            grid,
            ..
        }
        | RunConfig::NormConnection {
            manifold,
            atlas,
            field,
            expr,
            grid,
            ..
        } => {
            field.get_or_insert(infer_field(expr));
            if let Some(d) = target_dim(*manifold, atlas) {
                grid.get_or_insert(default_grid(d));
            }
        }
        RunConfig::Compare { a, grid, .. } => {
            if let Some(d) = target_dim(a.manifold, &a.atlas) {
                grid.get_or_insert(default_grid(d));
            }
        }
        RunConfig::OpBound {
            manifold, atlas, grid, ..
        } => {
            if let Some(d) = target_dim(*manifold, atlas) {
                grid.get_or_insert(default_grid(d));
            }
        }
        _ => {}
    }
    config
}

fn exponent(text: &str) -> Result<Exponent, CliError> {
    let (s, p) = text
        .split_once(',')
        .ok_or_else(|| CliError::usage(format!("expected exponents as \"s,p\", got '{text}'")))?;
    Ok(Exponent::parse(s.trim(), p.trim())?)
}

fn space(text: &str, n: u32, domain: DomainClass) -> Result<SpaceSpec, CliError> {
    Ok(SpaceSpec::new(exponent(text)?, n, domain)?)
}

fn number(text: &str) -> Result<f64, CliError> {
    parse_rational(text)?
        .to_f64()
        .ok_or_else(|| CliError::usage(format!("'{text}' is out of range")))
}

fn verdict_output(verdict: Verdict) -> Result<Output, CliError> {
    let conditions = to_value(&verdict.conditions)?;
    let mut trace = Vec::new();
    for tag in &verdict.tried {
        trace.push(tag.clone());
        for c in conditions.as_array().into_iter().flatten() {
            if c["theorem"].as_str() == Some(tag) {
                let mark = if c["satisfied"].as_bool() == Some(true) { "holds" } else { "fails" };
                trace.push(format!(
                    "  {}: {} {} {} ({mark})",
                    c["text"].as_str().unwrap_or_default(),
                    c["lhs"].as_str().unwrap_or_default(),
                    c["relation"].as_str().unwrap_or_default(),
                    c["rhs"].as_str().unwrap_or_default(),
                ));
            }
        }
    }
    let status = if verdict.is_admissible() {
        Status::Computed
    } else {
        Status::NotGuaranteed
    };
    Ok(Output {
        report: to_value(&verdict)?,
        status,
        trace: Some(trace),
    })
}

fn computed(report: &impl Serialize) -> Result<Output, CliError> {
    Ok(Output {
        report: to_value(report)?,
        status: Status::Computed,
        trace: None,
    })
}

fn load_manifold(manifold: Option<ManifoldId>, atlas: &Option<AtlasConfig>) -> Result<Manifold, CliError> {
    match (manifold, atlas) {
        (Some(id), None) => Ok(Manifold::builtin(id)),
        (None, Some(cfg)) => Ok(Manifold::from_config(cfg.clone())?),
        (Some(_), Some(_)) => Err(CliError::usage("give either a built-in manifold or an atlas config, not both")),
        (None, None) => Err(CliError::usage("a built-in manifold or an atlas config is required")),
    }
}

/// Parses `;`-separated components, reporting parse positions in the full string.
fn components(text: &str, n: usize) -> Result<Vec<Expr>, CliError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in text.split(';') {
        out.push(parse_expr(part, n).map_err(|e| CliError::from(e).offset(offset))?);
        offset += part.chars().count() + 1;
    }
    Ok(out)
}

fn manifold_function(text: &str, kind: FieldKind, manifold: &Manifold) -> Result<ManifoldFunction, CliError> {
    let mut comps = components(text, manifold.id().ambient_dim())?;
    Ok(match kind {
        FieldKind::Scalar => {
            if comps.len() != 1 {
                return Err(CliError::usage(format!("a scalar field has one component, got {}", comps.len())));
            }
            ManifoldFunction::Scalar(comps.remove(0))
        }
        FieldKind::Vector => ManifoldFunction::AmbientVector(comps),
        FieldKind::Covector => ManifoldFunction::AmbientCovector(comps),
    })
}

fn source_kind(op: OperatorId) -> FieldKind {
    if op.source() == Valence::VECTOR {
        FieldKind::Vector
    } else {
        FieldKind::Scalar
    }
}

fn resolved<T: Copy>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(format!("{what} could not be resolved")))
}

/// Runs a resolved configuration.
pub fn run(config: &RunConfig) -> Result<Output, CliError> {
    match config {
        RunConfig::CheckEmbed { n, domain, from, to } => {
            verdict_output(check_embedding(&space(from, *n, *domain)?, &space(to, *n, *domain)?)?)
        }
        RunConfig::CheckMultiply {
            n,
            domain,
            a,
            b,
            target,
        } => verdict_output(check_multiplication(
            &space(a, *n, *domain)?,
            &space(b, *n, *domain)?,
            &space(target, *n, *domain)?,
        )?),
        RunConfig::CheckPointwise { n, domain, space: s, mode } => {
            verdict_output(check_pointwise(&space(s, *n, *domain)?, *mode)?)
        }
        RunConfig::CheckDerivative {
            n,
            domain,
            space: s,
            order,
        } => verdict_output(check_derivative(&space(s, *n, *domain)?, *order)?),
        RunConfig::CheckExtend { n, space: s, enclosing } => verdict_output(check_extension(
            &space(s, *n, DomainClass::CompactSupportInOpen)?,
            *enclosing,
        )?),
        RunConfig::NormEuclid {
            expr,
            bounds,
            s,
            p,
            grid,
            quantity,
            variant,
        } => {
            if bounds.is_empty() || bounds.len() % 2 != 0 {
                return Err(CliError::usage("box bounds must be pairs lo,hi per axis"));
            }
            let lo = bounds.iter().step_by(2).copied().collect();
            let hi = bounds.iter().skip(1).step_by(2).copied().collect();
            let domain = BoxDomain::new(lo, hi)?;
            let u = Field::new(parse_expr(expr, domain.dim())?);
            let opts = QuadratureOptions {
                grid: *grid,
                variant: *variant,
                two_grid: true,
            };
            let (s, p) = (number(s)?, number(p)?);
            let report = match quantity {
                Quantity::Seminorm => sobolev_seminorm(&u, &domain, s, p, opts)?,
                Quantity::Norm => sobolev_norm(&u, &domain, s, p, opts)?,
            };
            computed(&report)
        }
        RunConfig::NormManifold {
            manifold,
            atlas,
            field,
            expr,
            q,
            grid,
            definition,
            e,
        } => {
            let m = load_manifold(*manifold, atlas)?;
            let u = manifold_function(expr, resolved(*field, "field kind")?, &m)?;
            let q = number(q)?;
            match definition {
                Definition::Lq => computed(&manifold_lq_norm(&u, &m, q, *grid)?),
                Definition::Chart => computed(&chart_sobolev_norm(&u, &m, number(e)?, q, *grid)?),
            }
        }
        RunConfig::NormConnection {
            manifold,
            atlas,
            field,
            expr,
            k,
            q,
            grid,
            combination,
        } => {
            let m = load_manifold(*manifold, atlas)?;
            let u = manifold_function(expr, resolved(*field, "field kind")?, &m)?;
            computed(&connection_sobolev_norm(&u, &m, *k, number(q)?, *grid, *combination)?)
        }
        RunConfig::Compare { a, b, expr, e, q, grid } => {
            let ma = load_manifold(a.manifold, &a.atlas)?;
            let mb = load_manifold(b.manifold, &b.atlas)?;
            let e = number(e)?;
            let choice = |v: &VariantConfig, m| -> Result<NormChoice<'_>, CliError> {
                Ok(match v.kind {
                    VariantKind::Chart => NormChoice::Chart { manifold: m, e },
                    VariantKind::Connection => {
                        if e < 0.0 || e.fract() != 0.0 {
                            return Err(CliError::usage(format!("connection norms need an integer order, got {e}")));
                        }
                        NormChoice::Connection {
                            manifold: m,
                            k: e as usize,
                            combination: v.combination,
                        }
                    }
                })
            };
            let family = expr
                .iter()
                .map(|t| manifold_function(t, FieldKind::Scalar, &ma))
                .collect::<Result<Vec<_>, _>>()?;
            computed(&compare_norms(&family, choice(a, &ma)?, choice(b, &mb)?, number(q)?, *grid)?)
        }
        RunConfig::OpApply {
            op,
            manifold,
            atlas,
            expr,
            samples,
        } => {
            let m = load_manifold(*manifold, atlas)?;
            let u = manifold_function(expr, source_kind(*op), &m)?.realize(&m)?;
            let v = apply_operator(&LocalOperator::new(*op, m.metric()), &u)?;
            let charts: Vec<Value> = m
                .atlas()
                .charts()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    json!({
                        "chart": i,
                        "name": c.name(),
                        "input": u.components(i).iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                        "output": v.components(i).iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let deviation = overlap_consistency(&v, &m, *samples)?;
            Ok(Output {
                report: json!({
                    "schema": sobolev::SCHEMA_VERSION,
                    "operator": op,
                    "source": op.source(),
                    "target": op.target(),
                    "atlas_id": m.atlas().id(),
                    "charts": charts,
                    "overlap_samples": samples,
                    "overlap_max_deviation": deviation,
                }),
                status: Status::Computed,
                trace: None,
            })
        }
        RunConfig::OpBound {
            op,
            manifold,
            atlas,
            from,
            to,
            expr,
            grid,
            norm,
        } => {
            let m = load_manifold(*manifold, atlas)?;
            let family = expr
                .iter()
                .map(|t| manifold_function(t, source_kind(*op), &m))
                .collect::<Result<Vec<_>, _>>()?;
            let grid = grid.unwrap_or_else(|| default_grid(m.dim()));
            computed(&empirical_bound(*op, &m, &exponent(from)?, &exponent(to)?, &family, grid, *norm)?)
        }
        RunConfig::AtlasShow { manifold, atlas } => {
            let m = load_manifold(*manifold, atlas)?;
            let a = m.atlas();
            let charts: Vec<Value> = a
                .charts()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    json!({
                        "index": i,
                        "name": c.name(),
                        "map": c.kind(),
                        "image": c.image(),
                        "truncation": c.truncation(),
                    })
                })
                .collect();
            let count = a.charts().len();
            let overlaps: Vec<[usize; 2]> = (0..count)
                .flat_map(|i| (0..count).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j && transition_map(a, i, j).is_ok())
                .map(|(i, j)| [i, j])
                .collect();
            Ok(Output {
                report: json!({
                    "schema": sobolev::SCHEMA_VERSION,
                    "atlas_id": a.id(),
                    "manifold": a.manifold(),
                    "dim": a.dim(),
                    "ambient_dim": a.manifold().ambient_dim(),
                    "classification": a.classification(),
                    "self_gl_compatible": a.self_gl_compatible(),
                    "pou_id": m.pou().id(),
                    "charts": charts,
                    "overlaps": overlaps,
                    "config": a.config(),
                }),
                status: Status::Computed,
                trace: None,
            })
        }
    }
}
