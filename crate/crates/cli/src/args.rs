use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sobolev::atlas::ManifoldId;
use sobolev::exponents::{DomainClass, EnclosingDomain, PointwiseMode};
use sobolev::manifold_norms::ConnectionCombination;
use sobolev::operators::{BoundNorm, OperatorId};

use crate::config::{Definition, FieldKind, Quantity, VariantKind};

#[derive(Debug, Parser)]
#[command(name = "sobolev", version, about = "Sobolev space checks, norms and operators on Euclidean boxes and compact manifolds")]
pub struct Cli {
    /// Pretty-print the JSON report and include the certificate trace.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Also write the JSON report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact hypothesis checks for Sobolev space operations.
    #[command(subcommand)]
    Check(CheckCommand),
    /// Numerical norms.
    #[command(subcommand)]
    Norm(NormCommand),
    /// Empirical equivalence constants between two manifold norms.
    Compare(CompareArgs),
    /// Differential operators on manifolds.
    #[command(subcommand)]
    Op(OpCommand),
    /// Atlas inspection.
    #[command(subcommand)]
    Atlas(AtlasCommand),
    /// Re-run a resolved configuration taken from an earlier report.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct SpaceArgs {
    /// Dimension of the underlying domain.
    #[arg(long)]
    pub n: u32,
    /// Domain class.
    #[arg(long, default_value = "full-space")]
    pub domain: DomainClass,
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// Embedding W^{s,p} into W^{t,q}.
    Embed {
        #[command(flatten)]
        space: SpaceArgs,
        /// Source exponents "s,p".
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        /// Target exponents "t,q".
        #[arg(long, allow_hyphen_values = true)]
        to: String,
    },
    /// Pointwise multiplication W^{s1,p1} x W^{s2,p2} -> W^{s,p}.
    Multiply {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
    },
    /// Banach algebra, L-infinity embedding and composition.
    Pointwise {
        #[command(flatten)]
        space: SpaceArgs,
        /// Exponents "s,p".
        #[arg(long = "space", allow_hyphen_values = true)]
        space_exponent: String,
        #[arg(long)]
        mode: PointwiseMode,
    },
    /// Differentiation of a given order.
    Derivative {
        #[command(flatten)]
        space: SpaceArgs,
        /// Exponents "s,p".
        #[arg(long = "space", allow_hyphen_values = true)]
        space_exponent: String,
        #[arg(long)]
        order: u32,
    },
    /// Extension by zero of compactly supported elements.
    Extend {
        #[arg(long)]
        n: u32,
        /// Exponents "s,p".
        #[arg(long = "space", allow_hyphen_values = true)]
        space_exponent: String,
        #[arg(long)]
        enclosing: EnclosingDomain,
    },
}

#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Built-in manifold.
    #[arg(long, conflicts_with = "atlas_config")]
    pub manifold: Option<ManifoldId>,
    /// Atlas configuration file (JSON).
    #[arg(long, value_name = "PATH")]
    pub atlas_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Ambient expression; vector and covector components are separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    pub expr: String,
    /// Field type; defaults to scalar, or vector when the expression has several components.
    #[arg(long)]
    pub field: Option<FieldKind>,
}

#[derive(Debug, Subcommand)]
pub enum NormCommand {
    /// W^{s,p} norm of a function on a box.
    Euclid {
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        /// Box bounds "lo1,hi1[,lo2,hi2,...]".
        #[arg(long = "box", default_value = "0,1", allow_hyphen_values = true)]
        bounds: String,
        #[arg(long, default_value = "1/2")]
        s: String,
        #[arg(long, default_value = "2")]
        p: String,
        /// Cells per axis.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_enum, default_value = "seminorm")]
        quantity: Quantity,
        /// Equivalent-norm convention for the full norm.
        #[arg(long, value_enum, default_value = "seminorm")]
        variant: VariantArg,
    },
    /// L^q and chart Sobolev norms on a manifold.
    Manifold {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value = "2")]
        q: String,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_enum, default_value = "lq")]
        definition: Definition,
        /// Smoothness order for the chart definition.
        #[arg(long, default_value = "0")]
        e: String,
    },
    /// Levi-Civita connection norm W^{k,q}.
    Connection {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "2")]
        q: String,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_enum, default_value = "lq-sum")]
        combination: CombinationArg,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum VariantArg {
    Seminorm,
    FullNorm,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum CombinationArg {
    LqSum,
    Sum,
}

impl From<CombinationArg> for ConnectionCombination {
    fn from(c: CombinationArg) -> Self {
        match c {
            CombinationArg::LqSum => ConnectionCombination::LqSum,
            CombinationArg::Sum => ConnectionCombination::Sum,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum BoundNormArg {
    Chart,
    ConnectionLqSum,
    ConnectionSum,
}

impl From<BoundNormArg> for BoundNorm {
    fn from(b: BoundNormArg) -> Self {
        match b {
            BoundNormArg::Chart => BoundNorm::Chart,
            BoundNormArg::ConnectionLqSum => BoundNorm::ConnectionLqSum,
            BoundNormArg::ConnectionSum => BoundNorm::ConnectionSum,
        }
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Kind of the first norm.
    #[arg(long, value_enum)]
    pub a: VariantKind,
    /// Kind of the second norm.
    #[arg(long, value_enum)]
    pub b: VariantKind,
    /// Built-in manifold shared by both norms unless overridden.
    #[arg(long)]
    pub manifold: Option<ManifoldId>,
    #[arg(long, value_name = "PATH")]
    pub atlas_config_a: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub atlas_config_b: Option<PathBuf>,
    /// Ambient scalar expressions, one per family member.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub expr: Vec<String>,
    /// Smoothness order (an integer for connection norms).
    #[arg(long, default_value = "1")]
    pub e: String,
    #[arg(long, default_value = "2")]
    pub q: String,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_enum, default_value = "lq-sum")]
    pub combination: CombinationArg,
}

#[derive(Debug, Subcommand)]
pub enum OpCommand {
    /// Local representation of an operator applied to a field.
    Apply {
        #[arg(long)]
        op: OperatorId,
        #[command(flatten)]
        target: TargetArgs,
        /// Ambient expression; the components of a vector field are separated by ';'.
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        /// Quasirandom points for the overlap consistency check.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Empirical operator norm over a function family.
    Bound {
        #[arg(long)]
        op: OperatorId,
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        /// Family members; components separated by ';' for vector fields.
        #[arg(long, required = true, allow_hyphen_values = true)]
        expr: Vec<String>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_enum, default_value = "chart")]
        norm: BoundNormArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum AtlasCommand {
    /// Charts, classification and partition of unity of an atlas.
    Show {
        #[command(flatten)]
        target: TargetArgs,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Resolved configuration (a report's "config" object, or a whole report).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
}
