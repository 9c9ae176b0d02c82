use crate::protocols::Station;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A vector with non-finite components was supplied.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// A direction cannot be built from the zero vector.
    #[error("cannot normalize a (near-)zero vector, norm = {norm}")]
    ZeroVector { norm: f64 },

    /// An atomic distribution needs at least one atom.
    #[error("atomic distribution has no atoms")]
    EmptyDistribution,

    /// Atom weights must be strictly positive.
    #[error("atom weight {weight} is not strictly positive")]
    NonPositiveWeight { weight: f64 },

    /// The atom weights of a normalized distribution must sum to one.
    #[error("atom weights sum to {total}, expected 1 within {tolerance}")]
    NotNormalized { total: f64, tolerance: f64 },

    /// Hypothesis checks and grid maxima need at least one point.
    #[error("evaluation grid is empty")]
    EmptyGrid,

    /// Converting an empty tally to frequencies is undefined.
    #[error("tally has zero trials")]
    ZeroTrials,

    /// Only the station a pair is anchored to may rotate its setting.
    #[error("station {station:?} is not the anchor of this pair")]
    NotAnchorStation { station: Station },

    /// The signaling protocol needs distinguishable agreed settings.
    #[error("agreed settings are collinear (|a.b| = {abs_dot}); anchor is unidentifiable")]
    CollinearSettings { abs_dot: f64 },

    /// The CHSH grid search needs a minimum angular resolution.
    #[error("grid resolution {resolution} is below the minimum of {minimum}")]
    ResolutionTooCoarse { resolution: usize, minimum: usize },
}
