use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh has no vertices or no faces")]
    EmptyMesh,

    #[error("face {face} references vertex {index}, but mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("face {face} is degenerate (area {area:e} below tolerance)")]
    DegenerateFace { face: usize, area: f64 },

    #[error("vertex {vertex} is not referenced by any face")]
    IsolatedVertex { vertex: usize },

    #[error("open boundary: edge ({a}, {b}) belongs to a single face")]
    BoundaryEdge { a: usize, b: usize },

    #[error("non-manifold edge ({a}, {b}) shared by {count} faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("inconsistent orientation across edge ({a}, {b})")]
    InconsistentOrientation { a: usize, b: usize },

    #[error("faces are oriented inward (signed volume {volume:e})")]
    InwardOrientation { volume: f64 },

    #[error("mesh has {components} connected components (vertex {vertex} is not reachable from vertex 0)")]
    Disconnected { components: usize, vertex: usize },

    #[error("averaged normal vanishes at vertex {vertex}")]
    ZeroNormal { vertex: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("resolution {resolution} would produce {vertices} vertices (cap {cap})")]
    ResolutionTooLarge {
        resolution: usize,
        vertices: usize,
        cap: usize,
    },

    #[error("point ({x}, {y}, {z}) is off the surface (implicit residual {residual:e})")]
    OffSurface {
        x: f64,
        y: f64,
        z: f64,
        residual: f64,
    },

    #[error("no closed-form curvature for {0}")]
    UnsupportedShape(String),

    #[error("vertex {vertex} has only {count} distinct neighbors in its 2-ring (need 5)")]
    SparseNeighborhood { vertex: usize, count: usize },

    #[error("quadric fit failed at {flagged} of {total} vertices (limit 1%)")]
    TooManyFlagged { flagged: usize, total: usize },

    #[error("order r = {r} out of range 0..={n}")]
    OrderOutOfRange { r: usize, n: usize },

    #[error("eigensolver did not converge in {iterations} iterations (lambda {lambda:e}, residual {residual:e})")]
    NotConverged {
        iterations: usize,
        lambda: f64,
        residual: f64,
    },

    #[error("vanishing denominator: integral of H_{order} is {value:e}")]
    VanishingDenominator { order: usize, value: f64 },

    #[error("degenerate sphere fit: {0}")]
    DegenerateFit(String),

    #[error("mesh is not star-shaped about the fitted center ({} offending vertices, first {:?})", .vertices.len(), .vertices.first())]
    NotStarShaped { vertices: Vec<usize> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Name of the pipeline stage that failed, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
