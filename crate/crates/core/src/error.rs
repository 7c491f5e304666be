use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("face {face} is not a quad: {reason}")]
    QuadOnly { face: usize, reason: String },
    #[error("non-manifold topology at edge ({0}, {1})")]
    NonManifold(usize, usize),
    #[error("vertex index {index} out of range (mesh has {len} vertices)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),
    #[error("extraordinary vertices still not isolated after {0} subdivisions")]
    IsolationFailed(usize),
    #[error("invalid geometry: {0}")]
    BadGeometry(String),
    #[error("least-squares fit is rank deficient (null space of size {null_space})")]
    FitSingular { null_space: usize },
    #[error("parameter {0} outside of [0, 1]")]
    DomainError(f64),
    #[error("curvature requested at the extraordinary corner of an irregular patch")]
    EvCornerSingular,
    #[error("patch evaluation did not resolve within {0} subdivision levels")]
    NoConvergence(usize),
    #[error("degenerate tangent plane (|a1 x a2| = {0:e})")]
    DegenerateElement(f64),
    #[error("stress relaxation requires C3333 > 0, got {0:e}")]
    IllConditionedRelaxation(f64),
    #[error("element {element}: {source}")]
    Element {
        element: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("constraint references vertex {0} which does not exist")]
    BadConstraint(usize),
    #[error("dielectric block is not positive definite (pivot {pivot} = {value:e})")]
    SingularDielectric { pivot: usize, value: f64 },
    #[error("stiffness is singular on the free dofs (about {null_space} zero pivots)")]
    SingularStiffness { null_space: usize },
    #[error("eigensolver did not converge; worst residual {worst_residual:e} after {iterations} iterations")]
    EigenNoConvergence {
        worst_residual: f64,
        iterations: usize,
        residuals: Vec<f64>,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn in_element(self, element: usize) -> Self {
        match self {
            e @ Error::Element { .. } => e,
            e => Error::Element {
                element,
                source: Box::new(e),
            },
        }
    }

    /// Short machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::QuadOnly { .. } => "QuadOnly",
            Error::NonManifold(..) => "NonManifold",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::UnsupportedTopology(_) => "UnsupportedTopology",
            Error::IsolationFailed(_) => "IsolationFailed",
            Error::BadGeometry(_) => "BadGeometry",
            Error::FitSingular { .. } => "FitSingular",
            Error::DomainError(_) => "DomainError",
            Error::EvCornerSingular => "EvCornerSingular",
            Error::NoConvergence(_) => "NoConvergence",
            Error::DegenerateElement(_) => "DegenerateElement",
            Error::IllConditionedRelaxation(_) => "IllConditionedRelaxation",
            Error::Element { source, .. } => source.kind(),
            Error::Assembly(_) => "AssemblyError",
            Error::BadConstraint(_) => "BadConstraint",
            Error::SingularDielectric { .. } => "SingularDielectric",
            Error::SingularStiffness { .. } => "SingularStiffness",
            Error::EigenNoConvergence { .. } => "EigenNoConvergence",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
