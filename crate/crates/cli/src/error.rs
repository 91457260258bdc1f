use serde::Serialize;
use sobolev::atlas::AtlasError;
use sobolev::exponents::ExponentError;
use sobolev::funcexpr::ParseError;
use sobolev::geometry::GeometryError;
use sobolev::manifold_norms::ManifoldError;
use sobolev::operators::OperatorError;
use sobolev::quadrature::QuadratureError;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Usage,
    Parse,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage | ErrorKind::Parse => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Usage,
            message: message.into(),
            position: None,
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Numerical,
            message: message.into(),
            position: None,
        }
    }

    fn with_kind(kind: ErrorKind, e: &impl std::fmt::Display) -> Self {
        CliError {
            kind,
            message: e.to_string(),
            position: None,
        }
    }

    /// Shifts a parse position by the offset of the segment it came from.
    pub fn offset(mut self, by: usize) -> Self {
        if let Some(p) = self.position.as_mut() {
            *p += by;
        }
        self
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError {
            kind: ErrorKind::Parse,
            message: e.to_string(),
            position: Some(e.position),
        }
    }
}

impl From<ExponentError> for CliError {
    fn from(e: ExponentError) -> Self {
        let kind = match e {
            ExponentError::Parse(_) => ErrorKind::Parse,
            _ => ErrorKind::Usage,
        };
        CliError::with_kind(kind, &e)
    }
}

fn quadrature_kind(e: &QuadratureError) -> ErrorKind {
    match e {
        QuadratureError::Eval { .. } | QuadratureError::SupportViolation { .. } | QuadratureError::NoSource => {
            ErrorKind::Numerical
        }
        _ => ErrorKind::Usage,
    }
}

fn atlas_kind(e: &AtlasError) -> ErrorKind {
    match e {
        AtlasError::Eval(_) | AtlasError::OutsideOverlap { .. } => ErrorKind::Numerical,
        _ => ErrorKind::Usage,
    }
}

fn geometry_kind(e: &GeometryError) -> ErrorKind {
    match e {
        GeometryError::SingularMetric | GeometryError::NotPositiveDefinite(_) | GeometryError::Eval(_) => {
            ErrorKind::Numerical
        }
        GeometryError::Atlas(a) => atlas_kind(a),
        _ => ErrorKind::Usage,
    }
}

fn manifold_kind(e: &ManifoldError) -> ErrorKind {
    match e {
        ManifoldError::Quadrature(q) => quadrature_kind(q),
        ManifoldError::Geometry(g) => geometry_kind(g),
        ManifoldError::Atlas(a) => atlas_kind(a),
        ManifoldError::Eval(_) => ErrorKind::Numerical,
        _ => ErrorKind::Usage,
    }
}

fn operator_kind(e: &OperatorError) -> ErrorKind {
    match e {
        OperatorError::ZeroNorm(_) => ErrorKind::Numerical,
        OperatorError::Manifold(m) => manifold_kind(m),
        OperatorError::Geometry(g) => geometry_kind(g),
        OperatorError::Exponent(ExponentError::Parse(_)) => ErrorKind::Parse,
        _ => ErrorKind::Usage,
    }
}

impl From<QuadratureError> for CliError {
    fn from(e: QuadratureError) -> Self {
        CliError::with_kind(quadrature_kind(&e), &e)
    }
}

impl From<AtlasError> for CliError {
    fn from(e: AtlasError) -> Self {
        CliError::with_kind(atlas_kind(&e), &e)
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::with_kind(geometry_kind(&e), &e)
    }
}

impl From<ManifoldError> for CliError {
    fn from(e: ManifoldError) -> Self {
        CliError::with_kind(manifold_kind(&e), &e)
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        CliError::with_kind(operator_kind(&e), &e)
    }
}
