use core::fmt;

use crate::lattice::{Edge, Vertex};
use crate::rng::SeedSpec;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// `∂B(0)` is not defined.
    EmptyBoundary,
    RadiusTooLarge(u32),
    InvalidAnnulus {
        inner: u32,
        outer: u32,
    },
    NotAdjacent(Vertex, Vertex),
    VertexOutsideRegion(Vertex),
    EdgeOutsideRegion(Edge),
    RectangleOutsideRegion {
        width: u32,
        height: u32,
    },
    EmptyVertexSet,
    NotInCluster(Vertex),
    DisconnectedCluster,
    InvalidProbability(f64),
    InvalidParameter(&'static str),
    ZeroTrials,
    TooManySuccesses {
        successes: u64,
        trials: u64,
    },
    DenominatorTouchesZero,
    NoStopRule,
    /// The invasion touched the horizon boundary; no further steps.
    Censored,
    FrontierEmpty,
    BurnInTooLarge {
        burn_in: usize,
        steps: usize,
    },
    AttemptCapExceeded {
        attempts: u64,
    },
    ReplicaPanicked {
        index: u64,
        seed: SeedSpec,
    },
    /// A field satisfied the certificate conditions but the invasion failed
    /// to cover the target window. Indicates an implementation defect.
    CertificateViolation {
        n: u32,
        p: f64,
        replica: u64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyBoundary => f.write_str("internal boundary of B(0) is undefined"),
            Error::RadiusTooLarge(r) => write!(f, "radius {r} exceeds the coordinate bound"),
            Error::InvalidAnnulus { inner, outer } => {
                write!(f, "annulus needs inner < outer, got ({inner}, {outer})")
            }
            Error::NotAdjacent(u, v) => write!(f, "{u} and {v} are not nearest neighbours"),
            Error::VertexOutsideRegion(v) => write!(f, "vertex {v} lies outside the region"),
            Error::EdgeOutsideRegion(e) => write!(f, "edge {e} lies outside the region"),
            Error::RectangleOutsideRegion { width, height } => {
                write!(f, "rectangle [0,{width}]x[0,{height}] exceeds the region")
            }
            Error::EmptyVertexSet => f.write_str("vertex set is empty"),
            Error::NotInCluster(v) => write!(f, "vertex {v} is not in the cluster"),
            Error::DisconnectedCluster => f.write_str("edge set is not connected"),
            Error::InvalidProbability(p) => write!(f, "probability {p} outside [0, 1]"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::ZeroTrials => f.write_str("zero trials"),
            Error::TooManySuccesses { successes, trials } => {
                write!(f, "{successes} successes out of {trials} trials")
            }
            Error::DenominatorTouchesZero => f.write_str("denominator interval touches zero"),
            Error::NoStopRule => f.write_str("stop rule has no condition"),
            Error::Censored => f.write_str("invasion reached the horizon boundary"),
            Error::FrontierEmpty => f.write_str("invasion frontier is empty"),
            Error::BurnInTooLarge { burn_in, steps } => {
                write!(f, "burn-in {burn_in} not below step count {steps}")
            }
            Error::AttemptCapExceeded { attempts } => {
                write!(f, "no accepted sample after {attempts} attempts")
            }
            Error::ReplicaPanicked { index, seed } => {
                write!(f, "replica {index} panicked (seed {seed})")
            }
            Error::CertificateViolation { n, p, replica } => {
                write!(f, "certificate held but invasion missed the window (n={n}, p={p}, replica {replica})")
            }
        }
    }
}

impl core::error::Error for Error {}
