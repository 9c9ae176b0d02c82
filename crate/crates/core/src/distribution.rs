//! The atomic hidden-variable distribution conditioned on the detector
//! settings, its marginals, and measurement-dependence metrics.
//!
//! For settings `{a, b}` the hidden pair `(u, v)` is drawn from four point
//! masses of weight 1/4 at `(p, -p)` for `p` in `{+a, -a, +b, -b}`. The
//! support tracks the settings, which is exactly the Measurement
//! Independence violation the rest of the crate quantifies; everything else
//! about the model is local and factorized.

use rand::Rng;
use serde::ser::SerializeSeq;
use serde::Serialize;

use crate::geometry::{Settings, UnitVec3};
use crate::model::HiddenPair;
use crate::{Error, Result};

/// Coincident atoms closer than this (Euclidean, chord metric) merge into
/// one point mass with summed weight. Far above arithmetic noise, far below
/// any physical distinction between directions.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Tolerance on the total weight of a normalized distribution.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// A location that can carry a point mass.
pub trait Point: Copy {
    /// Euclidean distance used by the atom merge rule.
    fn distance(&self, other: &Self) -> f64;
}

impl Point for UnitVec3 {
    fn distance(&self, other: &Self) -> f64 {
        UnitVec3::distance(self, other)
    }
}

impl Point for HiddenPair {
    /// Distance in R^6 over both slots.
    fn distance(&self, other: &Self) -> f64 {
        let du = self.u.distance(&other.u);
        let dv = self.v.distance(&other.v);
        (du * du + dv * dv).sqrt()
    }
}

/// One point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<P> {
    pub weight: f64,
    pub point: P,
}

/// A finite weighted set of point masses, with coincident points merged.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDist<P: Point> {
    atoms: Vec<Atom<P>>,
}

/// Distribution over hidden pairs `(u, v)`.
pub type PairDist = AtomicDist<HiddenPair>;

/// Distribution over a single hidden vector (a marginal).
pub type VectorDist = AtomicDist<UnitVec3>;

impl<P: Point> AtomicDist<P> {
    /// Builds a normalized distribution: merges coincident atoms, then
    /// requires strictly positive weights summing to 1 within
    /// [`WEIGHT_TOLERANCE`].
    pub fn normalized(atoms: Vec<Atom<P>>) -> Result<Self> {
        let d = Self::raw(atoms)?;
        let total = d.total_weight();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::NotNormalized { total, tolerance: WEIGHT_TOLERANCE });
        }
        Ok(d)
    }

    /// Builds a distribution without the normalization check. Merging and
    /// positivity still apply. This is how deliberately unnormalized
    /// variants (regression targets) are represented.
    pub fn raw(atoms: Vec<Atom<P>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let mut merged: Vec<Atom<P>> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            if !(atom.weight > 0.0) {
                return Err(Error::NonPositiveWeight { weight: atom.weight });
            }
            match merged.iter_mut().find(|m| m.point.distance(&atom.point) <= MERGE_TOLERANCE) {
                Some(m) => m.weight += atom.weight,
                None => merged.push(atom),
            }
        }
        Ok(AtomicDist { atoms: merged })
    }

    pub fn atoms(&self) -> &[Atom<P>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Weight carried at `point`, matching within the merge tolerance.
    pub fn weight_at(&self, point: &P) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.point.distance(point) <= MERGE_TOLERANCE)
            .map(|a| a.weight)
            .sum()
    }

    /// Draws an atom with probability proportional to its weight.
    ///
    /// One uniform variate in `[0, total)` walks the cumulative weights, so
    /// the draw is deterministic given the stream state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> P {
        let total = self.total_weight();
        let mut ticket: f64 = rng.random::<f64>() * total;
        for atom in &self.atoms {
            ticket -= atom.weight;
            if ticket < 0.0 {
                return atom.point;
            }
        }
        // Rounding pushed the ticket past the last cumulative step.
        self.atoms[self.atoms.len() - 1].point
    }
}

/// Total-variation distance between two atomic distributions over the same
/// space: half the summed absolute weight difference over the union of atom
/// points, absent atoms counting as weight zero.
pub fn tv_distance<P: Point>(d1: &AtomicDist<P>, d2: &AtomicDist<P>) -> f64 {
    let mut sum = 0.0;
    for atom in d1.atoms() {
        sum += (atom.weight - d2.weight_at(&atom.point)).abs();
    }
    // Points of d2 with no partner in d1.
    for atom in d2.atoms() {
        if d1.weight_at(&atom.point) == 0.0 {
            sum += atom.weight;
        }
    }
    0.5 * sum
}

/// The hidden-pair distribution for settings `{a, b}`: anticorrelated atoms
/// `(p, -p)` of weight 1/4 at `p = +a, -a, +b, -b`, coincident atoms merged
/// (collinear settings leave two atoms of weight 1/2).
pub fn build_distribution(s: Settings) -> PairDist {
    PairDist::normalized(axis_atoms(s, 0.25)).expect("four quarter-weight atoms are normalized")
}

/// The same support with every weight cut to 1/16 (total weight 1/4).
///
/// Represents the known-broken variant that skips normalization; its
/// correlator comes out `-a.b/4`, four times smaller than the singlet's.
/// Kept as a regression target, not used by the model itself.
pub fn build_unnormalized_distribution(s: Settings) -> PairDist {
    PairDist::raw(axis_atoms(s, 0.0625)).expect("atoms are valid")
}

fn axis_atoms(s: Settings, weight: f64) -> Vec<Atom<HiddenPair>> {
    [s.a, -s.a, s.b, -s.b]
        .into_iter()
        .map(|p| Atom { weight, point: HiddenPair::anticorrelated(p) })
        .collect()
}

/// Marginal distribution of the first hidden vector `u`: projects each pair
/// atom onto its `u` slot and re-merges. For generic settings this leaves
/// atoms of weight 1/4 at `+a, -a, +b, -b`.
pub fn marginal_u(d: &PairDist) -> VectorDist {
    let atoms = d
        .atoms()
        .iter()
        .map(|a| Atom { weight: a.weight, point: a.point.u })
        .collect();
    VectorDist::raw(atoms).expect("projection preserves valid atoms")
}

/// How strongly the hidden-variable distribution depends on the settings:
/// the total-variation distance between the distributions conditioned on
/// `s1` and on `s2`. Zero exactly when the unordered axis sets coincide.
pub fn measurement_dependence(s1: Settings, s2: Settings) -> f64 {
    tv_distance(&build_distribution(s1), &build_distribution(s2))
}

impl Serialize for PairDist {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row {
            w: f64,
            u: [f64; 3],
            v: [f64; 3],
        }
        let mut seq = ser.serialize_seq(Some(self.atoms.len()))?;
        for a in &self.atoms {
            seq.serialize_element(&Row {
                w: a.weight,
                u: a.point.u.components(),
                v: a.point.v.components(),
            })?;
        }
        seq.end()
    }
}

impl Serialize for VectorDist {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row {
            w: f64,
            u: [f64; 3],
        }
        let mut seq = ser.serialize_seq(Some(self.atoms.len()))?;
        for a in &self.atoms {
            seq.serialize_element(&Row { w: a.weight, u: a.point.components() })?;
        }
        seq.end()
    }
}
