//! Fully resolved run configurations.
//!
//! Every command line is converted into a [`RunConfig`] before anything is
//! computed, and the resolved value is echoed in the report, so feeding a
//! report's `config` back through `sobolev run --config` repeats the run.

use serde::{Deserialize, Serialize};
use sobolev::atlas::{AtlasConfig, ManifoldId};
use sobolev::exponents::{DomainClass, EnclosingDomain, PointwiseMode};
use sobolev::manifold_norms::ConnectionCombination;
use sobolev::operators::{BoundNorm, OperatorId};
use sobolev::quadrature::NormVariant;

fn full_space() -> DomainClass {
    DomainClass::FullSpace
}

fn zero() -> String {
    "0".to_string()
}

fn overlap_samples() -> usize {
    200
}

/// What `norm euclid` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Top-order part only.
    #[default]
    Seminorm,
    /// Full `W^{s,p}` norm.
    Norm,
}

/// Which manifold `L^q`/Sobolev construction `norm manifold` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Definition {
    /// Intrinsic and chart-sum `L^q` norms with their ratio.
    #[default]
    Lq,
    /// Chart Sobolev norm of order `e`.
    Chart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Scalar,
    Vector,
    Covector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VariantKind {
    Chart,
    Connection,
}

/// One side of a norm comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub kind: VariantKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atlas: Option<AtlasConfig>,
    #[serde(default)]
    pub combination: ConnectionCombination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", deny_unknown_fields)]
pub enum RunConfig {
    #[serde(rename = "check embed")]
    CheckEmbed {
        n: u32,
        #[serde(default = "full_space")]
        domain: DomainClass,
        from: String,
        to: String,
    },
    #[serde(rename = "check multiply")]
    CheckMultiply {
        n: u32,
        #[serde(default = "full_space")]
        domain: DomainClass,
        a: String,
        b: String,
        target: String,
    },
    #[serde(rename = "check pointwise")]
    CheckPointwise {
        n: u32,
        #[serde(default = "full_space")]
        domain: DomainClass,
        space: String,
        mode: PointwiseMode,
    },
    #[serde(rename = "check derivative")]
    CheckDerivative {
        n: u32,
        #[serde(default = "full_space")]
        domain: DomainClass,
        space: String,
        order: u32,
    },
    #[serde(rename = "check extend")]
    CheckExtend {
        n: u32,
        space: String,
        enclosing: EnclosingDomain,
    },
    #[serde(rename = "norm euclid")]
    NormEuclid {
        expr: String,
        #[serde(rename = "box")]
        bounds: Vec<f64>,
        s: String,
        p: String,
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default)]
        quantity: Quantity,
        #[serde(default)]
        variant: NormVariant,
    },
    #[serde(rename = "norm manifold")]
    NormManifold {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        manifold: Option<ManifoldId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atlas: Option<AtlasConfig>,
        #[serde(default)]
        field: Option<FieldKind>,
        expr: String,
        q: String,
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default)]
        definition: Definition,
        #[serde(default = "zero")]
        e: String,
    },
    #[serde(rename = "norm connection")]
    NormConnection {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        manifold: Option<ManifoldId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atlas: Option<AtlasConfig>,
        #[serde(default)]
        field: Option<FieldKind>,
        expr: String,
        k: usize,
        q: String,
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default)]
        combination: ConnectionCombination,
    },
    #[serde(rename = "compare")]
    Compare {
        a: VariantConfig,
        b: VariantConfig,
        expr: Vec<String>,
        e: String,
        q: String,
        #[serde(default)]
        grid: Option<usize>,
    },
    #[serde(rename = "op apply")]
    OpApply {
        op: OperatorId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        manifold: Option<ManifoldId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atlas: Option<AtlasConfig>,
        expr: String,
        #[serde(default = "overlap_samples")]
        samples: usize,
    },
    #[serde(rename = "op bound")]
    OpBound {
        op: OperatorId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        manifold: Option<ManifoldId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atlas: Option<AtlasConfig>,
        from: String,
        to: String,
        expr: Vec<String>,
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default)]
        norm: BoundNorm,
    },
    #[serde(rename = "atlas show")]
    AtlasShow {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        manifold: Option<ManifoldId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atlas: Option<AtlasConfig>,
    },
}

impl RunConfig {
    pub fn command_name(&self) -> &'static str {
        match self {
            RunConfig::CheckEmbed { .. } => "check embed",
            RunConfig::CheckMultiply { .. } => "check multiply",
            RunConfig::CheckPointwise { .. } => "check pointwise",
            RunConfig::CheckDerivative { .. } => "check derivative",
            RunConfig::CheckExtend { .. } => "check extend",
            RunConfig::NormEuclid { .. } => "norm euclid",
            RunConfig::NormManifold { .. } => "norm manifold",
            RunConfig::NormConnection { .. } => "norm connection",
            RunConfig::Compare { .. } => "compare",
            RunConfig::OpApply { .. } => "op apply",
            RunConfig::OpBound { .. } => "op bound",
            RunConfig::AtlasShow { .. } => "atlas show",
        }
    }
}
