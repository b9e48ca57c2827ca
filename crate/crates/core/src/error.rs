use thiserror::Error;

/// Crate-wide error type.
///
/// Numerical routines that can fail for a *specific* input (an unreachable
/// target, an infeasible design) report that through their normal return
/// value, not through `Error`.  `Error` is reserved for contract violations:
/// malformed geometry, inconsistent dimensions, bad parameters, broken files.
#[derive(Debug, Error)]
pub enum Error {
    /// A frame or design failed its orthonormality / finiteness checks.
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    /// A design violates its structural constraints (non-positive segment
    /// lengths, non-positive minimum bend radius, ...).
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    /// A configuration does not match the design it is applied to, or its
    /// values are out of the admissible state range.
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// A load model is inconsistent with the design (wrong number of joint
    /// masses, negative mass, non-finite gravity).
    #[error("invalid load model: {0}")]
    InvalidLoad(String),

    /// A scalar or structured parameter is out of range (tolerances,
    /// fractions, population sizes, voxel sizes, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An STL file could not be parsed.  `offset` is the byte offset of the
    /// first input byte that made the parse fail.
    #[error("STL parse error at byte {offset}: {message}")]
    StlParse { offset: usize, message: String },

    /// A triangle mesh is not watertight enough to voxelize: parity of
    /// ray crossings is inconsistent on at least 1 % of grid cells.
    #[error("mesh is not closed: inconsistent ray-crossing parity on {bad_cells} of {total_cells} cells")]
    OpenMesh { bad_cells: usize, total_cells: usize },

    /// A target list or voxel grid turned out empty where points are needed.
    #[error("empty workspace: {0}")]
    EmptyWorkspace(String),

    /// A problem description (TOML config or builtin) is malformed.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// Underlying I/O failure when reading meshes, point lists or configs.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// TOML config could not be parsed; the message carries line/column.
    #[error("config parse error: {0}")]
    ConfigParse(String),
}

impl Error {
    /// Helper for I/O errors that keeps the offending path in the message.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
