//! Constraint pools: the shared set of sampled realizations that nodes exchange.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The parametric form `f(x, δ) ≤ 0` a pool's realizations plug into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `δ = [u v]`, constraint `u·x + v ≤ 0`.
    LinearHalfspace,
    /// `δ = y ∈ ℝ^q`, constraint `(y − ŷ)ᵀ W (y − ŷ) ≤ 1` on the ellipsoid `(ŷ, W)`.
    EllipsoidMembership,
    /// `δ = [b; l]` with label `l = ±1`, margin constraint `l (bᵀθ + ρ) ≥ 1 − ν`.
    ClassificationMargin,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::LinearHalfspace => "linear_halfspace",
            Family::EllipsoidMembership => "ellipsoid_membership",
            Family::ClassificationMargin => "classification_margin",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "linear_halfspace" => Ok(Family::LinearHalfspace),
            "ellipsoid_membership" => Ok(Family::EllipsoidMembership),
            "classification_margin" => Ok(Family::ClassificationMargin),
            other => Err(Error::InvalidInput(format!("unknown constraint family {other:?}"))),
        }
    }

    /// Dimension `d` of the decision vector for realizations of length `delta_dim`.
    ///
    /// Ellipsoids use `q(q+3)/2 + 1` (center, upper triangle of `W`, epigraph
    /// slack); the classifier uses `p + 3` (`θ`, `ρ`, `ν`, `φ`).
    pub fn decision_dim(self, delta_dim: usize) -> usize {
        match self {
            Family::LinearHalfspace => delta_dim.saturating_sub(1),
            Family::EllipsoidMembership => delta_dim * (delta_dim + 3) / 2 + 1,
            Family::ClassificationMargin => delta_dim.saturating_sub(1) + 3,
        }
    }

    /// Length of the point used for convex-hull computations.
    pub fn hull_dim(self, delta_dim: usize) -> usize {
        delta_dim
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Content-derived constraint identifier.
///
/// Ids hash the (normalized) realization, so any reordering of the input
/// yields the same ids; the k-th exact duplicate of a realization hashes with
/// occurrence counter k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConstraintId(pub u64);

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: ConstraintId,
    pub family: Family,
    /// Realization as stored (linear rows are scaled to unit infinity norm).
    pub delta: Vec<f64>,
    /// Factor that maps `delta` back to the ingested realization.
    pub scale: f64,
}

impl Constraint {
    pub fn raw_delta(&self) -> Vec<f64> {
        self.delta.iter().map(|v| v * self.scale).collect()
    }
}

/// An immutable pool of realizations, ordered by [`ConstraintId`].
///
/// Index sets used throughout the crate are positions in this order, so
/// sorting an index set sorts it by id.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintPool {
    family: Family,
    dim: usize,
    constraints: Vec<Constraint>,
    hull_points: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoolFile {
    family: String,
    dim: usize,
    deltas: Vec<Vec<f64>>,
}

impl ConstraintPool {
    pub fn new(family: Family, deltas: Vec<Vec<f64>>) -> Result<Self> {
        let dim = deltas.first().map_or(0, Vec::len);
        Self::with_dim(family, dim, deltas)
    }

    /// Like [`ConstraintPool::new`] but with an explicit realization length,
    /// which also allows an empty pool.
    pub fn with_dim(family: Family, dim: usize, deltas: Vec<Vec<f64>>) -> Result<Self> {
        let min_dim = match family {
            Family::LinearHalfspace | Family::ClassificationMargin => 2,
            Family::EllipsoidMembership => 1,
        };
        if dim < min_dim {
            return Err(Error::InvalidInput(format!(
                "{family} realizations need length >= {min_dim}, got {dim}"
            )));
        }
        let mut seen: HashMap<Vec<u64>, u64> = HashMap::new();
        let mut constraints = Vec::with_capacity(deltas.len());
        for (pos, raw) in deltas.into_iter().enumerate() {
            if raw.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "realization {pos} has length {}, expected {dim}",
                    raw.len()
                )));
            }
            if raw.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("realization {pos} is not finite")));
            }
            let (delta, scale) = match family {
                Family::LinearHalfspace => {
                    let norm = raw.iter().fold(0f64, |m, v| m.max(v.abs()));
                    if norm == 0.0 {
                        return Err(Error::InvalidInput(format!("realization {pos} is the zero row")));
                    }
                    (raw.iter().map(|v| v / norm).collect::<Vec<_>>(), norm)
                }
                Family::ClassificationMargin => {
                    let label = raw[dim - 1];
                    if label != 1.0 && label != -1.0 {
                        return Err(Error::InvalidInput(format!(
                            "realization {pos} has label {label}, expected +1 or -1"
                        )));
                    }
                    (raw, 1.0)
                }
                Family::EllipsoidMembership => (raw, 1.0),
            };
            let key: Vec<u64> = delta.iter().map(|v| canonical_bits(*v)).collect();
            let occurrence = seen.entry(key.clone()).or_insert(0);
            let id = content_id(family, &key, *occurrence);
            *occurrence += 1;
            constraints.push(Constraint {
                id,
                family,
                delta,
                scale,
            });
        }
        constraints.sort_by_key(|c| c.id);
        let hull_points = constraints
            .iter()
            .flat_map(|c| hull_embedding(family, &c.delta))
            .collect();
        Ok(Self {
            family,
            dim,
            constraints,
            hull_points,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Length of each realization.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn decision_dim(&self) -> usize {
        self.family.decision_dim(self.dim)
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn get(&self, index: usize) -> &Constraint {
        &self.constraints[index]
    }

    pub fn delta(&self, index: usize) -> &[f64] {
        &self.constraints[index].delta
    }

    pub fn id(&self, index: usize) -> ConstraintId {
        self.constraints[index].id
    }

    pub fn index_of(&self, id: ConstraintId) -> Option<usize> {
        self.constraints.binary_search_by_key(&id, |c| c.id).ok()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Point of realization `index` in the space where the constraint is
    /// convex (linear) in the realization; vertex sets are computed here.
    pub fn hull_point(&self, index: usize) -> &[f64] {
        let l = self.dim;
        &self.hull_points[index * l..(index + 1) * l]
    }

    /// Constraint function `f_j(x)`; `x` is laid out as documented on
    /// [`Family::decision_dim`].
    pub fn eval(&self, index: usize, x: &[f64]) -> f64 {
        let delta = self.delta(index);
        match self.family {
            Family::LinearHalfspace => {
                let d = delta.len() - 1;
                dot(&delta[..d], &x[..d]) + delta[d]
            }
            Family::EllipsoidMembership => {
                let q = delta.len();
                let center = &x[..q];
                let vech = &x[q..q + q * (q + 1) / 2];
                ellipsoid_form(delta, center, vech) - 1.0
            }
            Family::ClassificationMargin => {
                let p = delta.len() - 1;
                let label = delta[p];
                let theta = &x[..p];
                let (rho, nu) = (x[p], x[p + 1]);
                1.0 - nu - label * (dot(&delta[..p], theta) + rho)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = PoolFile {
            family: self.family.tag().to_string(),
            dim: self.dim,
            deltas: self.constraints.iter().map(Constraint::raw_delta).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PoolFile = serde_json::from_str(text)?;
        Self::with_dim(Family::from_tag(&file.family)?, file.dim, file.deltas)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn canonical_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

fn content_id(family: Family, bits: &[u64], occurrence: u64) -> ConstraintId {
    let mut hasher = Sha256::new();
    hasher.update(family.tag().as_bytes());
    hasher.update(occurrence.to_le_bytes());
    for b in bits {
        hasher.update(b.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    ConstraintId(u64::from_le_bytes(head))
}

fn hull_embedding(family: Family, delta: &[f64]) -> Vec<f64> {
    match family {
        // f is linear in (l·b, l) for fixed (θ, ρ, ν)
        Family::ClassificationMargin => {
            let p = delta.len() - 1;
            let label = delta[p];
            delta[..p].iter().map(|b| label * b).chain([label]).collect()
        }
        _ => delta.to_vec(),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Number of entries in the upper triangle of a `q × q` matrix.
pub(crate) fn vech_len(q: usize) -> usize {
    q * (q + 1) / 2
}

/// `(y − c)ᵀ W (y − c)` with `W` given by its row-major upper triangle.
pub(crate) fn ellipsoid_form(y: &[f64], center: &[f64], vech: &[f64]) -> f64 {
    let q = y.len();
    let mut k = 0;
    let mut acc = 0.0;
    for i in 0..q {
        let di = y[i] - center[i];
        for j in i..q {
            let dj = y[j] - center[j];
            let w = vech[k];
            k += 1;
            acc += if i == j { w * di * dj } else { 2.0 * w * di * dj };
        }
    }
    acc
}
