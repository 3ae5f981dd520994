use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("at least one variable is required")]
    NoVariables,
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("identifier `{0}` is declared twice")]
    DuplicateIdentifier(String),
    #[error("expected a point of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("column {column}: unknown identifier `{name}`")]
    UnknownIdentifier { name: String, column: usize },
    #[error("column {column}: exponent must be a non-negative integer")]
    MalformedExponent { column: usize },
    #[error("column {column}: division is only allowed by a non-zero constant")]
    NonConstantDivision { column: usize },
    #[error("empty expression")]
    Empty,
    #[error("column {column}: {message}")]
    Syntax { message: String, column: usize },
}

impl PolyError {
    /// 1-based column of the offending token, when known.
    pub fn column(&self) -> Option<usize> {
        match self {
            PolyError::UnknownIdentifier { column, .. }
            | PolyError::MalformedExponent { column }
            | PolyError::NonConstantDivision { column }
            | PolyError::Syntax { column, .. } => Some(*column),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("line {line}: {source}")]
    Expression {
        line: usize,
        #[source]
        source: PolyError,
    },
    #[error("line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Poly(#[from] PolyError),
    #[error("need at least as many parameters as equations ({n} equations, {m} parameters)")]
    TooFewParameters { n: usize, m: usize },
    #[error("expected {expected} equations, one per variable, got {got}")]
    EquationCount { expected: usize, got: usize },
    #[error("interval for `{name}` is empty or invalid")]
    BadInterval { name: String },
    #[error("parameter box for `{name}` must be bounded with lower < upper")]
    BadParamBox { name: String },
    #[error("{0}")]
    Invalid(String),
}

impl SystemError {
    pub fn line(&self) -> Option<usize> {
        match self {
            SystemError::Expression { line, .. } | SystemError::Format { line, .. } => Some(*line),
            _ => None,
        }
    }

    pub fn column(&self) -> Option<usize> {
        match self {
            SystemError::Expression { source, .. } => source.column(),
            SystemError::Format { column, .. } => Some(*column),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecomposeError {
    #[error("equation {equation} is not linear in parameter `{param}`")]
    NotLinearInChosenParam { equation: usize, param: String },
    #[error("parameter `{param}` appears in equation {equation}, which is assigned to another linear parameter")]
    CrossLinearParam { equation: usize, param: String },
    #[error("no admissible choice of linear parameters: {0}")]
    NoLinearChoice(String),
    #[error("parameter index {0} is out of range")]
    BadParamIndex(usize),
    #[error("linear parameter `{0}` chosen twice")]
    DuplicateParam(String),
    #[error("coefficient of `{param}` in equation {equation} is identically zero")]
    ZeroCoefficient { equation: usize, param: String },
}
