use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },

    #[error("degenerate triangle {triangle} (vertices {vertices:?})")]
    DegenerateTriangle { triangle: usize, vertices: [usize; 3] },

    #[error("non-manifold edge ({0}, {1}) has {2} incident triangles")]
    NonManifoldEdge(usize, usize, usize),

    #[error("inconsistent orientation: triangles {0} and {1} traverse edge ({2}, {3}) in the same direction")]
    InconsistentOrientation(usize, usize, usize, usize),

    #[error("projection undefined at {0:?}")]
    UndefinedProjection([f64; 3]),

    #[error("vanishing level-set gradient at {0:?}")]
    VanishingGradient([f64; 3]),

    #[error("local function used while not bound to an element")]
    Unbound,

    #[error("grid function is not differentiable")]
    NotDifferentiable,

    #[error("degenerate geometry: relative Gram determinant {0:e}")]
    DegenerateGeometry(f64),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unsupported polynomial order {order} (supported {min}..={max})")]
    UnsupportedOrder { order: usize, min: usize, max: usize },

    #[error("no quadrature rule of degree {requested}; maximum is {max}")]
    QuadratureDegree { requested: usize, max: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("element {element}: {source}")]
    Element {
        element: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub(crate) fn at_element(self, element: usize) -> Self {
        Error::Element { element, source: Box::new(self) }
    }
}
