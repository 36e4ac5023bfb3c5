use serde::{Deserialize, Serialize};

use super::{GridSpec, Point};
use crate::operator_algebra::{Projector, ProjectorPartition};
use crate::{Error, Result};

/// Label reported for positions outside every box.
pub const EXTERIOR_LABEL: &str = "ex";

/// Axis-aligned detector box `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionBox {
    pub label: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl RegionBox {
    pub fn interval(label: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self { label: label.into(), lower: vec![lower], upper: vec![upper] }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.lower.iter().zip(&self.upper).enumerate().all(|(a, (lo, hi))| p[a] >= *lo && p[a] < *hi)
    }
}

/// Pairwise disjoint detector boxes `D_k` with labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RegionBox>", into = "Vec<RegionBox>")]
pub struct Region {
    boxes: Vec<RegionBox>,
}

impl TryFrom<Vec<RegionBox>> for Region {
    type Error = Error;
    fn try_from(boxes: Vec<RegionBox>) -> Result<Self> {
        Region::new(boxes)
    }
}

impl From<Region> for Vec<RegionBox> {
    fn from(region: Region) -> Self {
        region.boxes
    }
}

/// Index ranges `[lo, hi)` per axis.
pub(crate) type IndexBox = [(usize, usize); 2];

impl Region {
    pub fn new(boxes: Vec<RegionBox>) -> Result<Self> {
        for (i, b) in boxes.iter().enumerate() {
            if b.label.is_empty() || b.label == EXTERIOR_LABEL {
                return Err(Error::InvalidRegion(format!("box {i} has reserved or empty label '{}'", b.label)));
            }
            if b.lower.len() != b.upper.len() || b.lower.is_empty() || b.lower.len() > 2 {
                return Err(Error::InvalidRegion(format!("box {i} ('{}') has inconsistent dimensions", b.label)));
            }
            let ordered = b.lower.iter().zip(&b.upper).all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo < hi);
            if !ordered {
                return Err(Error::InvalidRegion(format!("box {i} ('{}') must have finite lower < upper", b.label)));
            }
            if boxes[..i].iter().any(|o| o.label == b.label) {
                return Err(Error::InvalidRegion(format!("duplicate label '{}'", b.label)));
            }
        }
        for (i, a) in boxes.iter().enumerate() {
            for (j, b) in boxes.iter().enumerate().skip(i + 1) {
                if a.lower.len() != b.lower.len() {
                    return Err(Error::InvalidRegion("boxes of different dimension".into()));
                }
                let intersect = (0..a.lower.len()).all(|ax| a.lower[ax].max(b.lower[ax]) < a.upper[ax].min(b.upper[ax]));
                if intersect {
                    return Err(Error::OverlappingRegions {
                        first: i,
                        first_label: a.label.clone(),
                        second: j,
                        second_label: b.label.clone(),
                    });
                }
            }
        }
        Ok(Self { boxes })
    }

    /// Contiguous 1D intervals split at the given edges, labelled in order.
    pub fn intervals<S: Into<String>>(edges: &[f64], labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() + 1 != edges.len() {
            return Err(Error::LengthMismatch { what: "interval labels", expected: edges.len().saturating_sub(1), found: labels.len() });
        }
        Self::new(labels.into_iter().enumerate().map(|(i, l)| RegionBox::interval(l, edges[i], edges[i + 1])).collect())
    }

    pub fn boxes(&self) -> &[RegionBox] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.boxes.iter().map(|b| b.label.as_str())
    }

    pub fn locate(&self, p: &Point) -> Option<usize> {
        self.boxes.iter().position(|b| b.contains(p))
    }

    pub fn label_at(&self, p: &Point) -> &str {
        self.locate(p).map_or(EXTERIOR_LABEL, |k| self.boxes[k].label.as_str())
    }

    /// Snaps every box edge to a grid node.
    pub(crate) fn index_boxes(&self, grid: &GridSpec) -> Result<Vec<IndexBox>> {
        self.boxes
            .iter()
            .enumerate()
            .map(|(index, b)| {
                if b.lower.len() != grid.dims() {
                    return Err(Error::InvalidRegion(format!(
                        "box {index} ('{}') is {}D on a {}D grid",
                        b.label,
                        b.lower.len(),
                        grid.dims()
                    )));
                }
                let mut out = [(0, 1); 2];
                for (axis, ax) in grid.axes().iter().enumerate() {
                    let snap = |x: f64| -> Result<usize> {
                        let s = (x - ax.lower) / ax.dx();
                        let r = s.round();
                        if (s - r).abs() > 1e-9 {
                            return Err(Error::MisalignedRegion { index, axis });
                        }
                        if r < 0.0 || r > ax.points as f64 {
                            return Err(Error::InvalidRegion(format!("box {index} ('{}') leaves the grid", b.label)));
                        }
                        Ok(r as usize)
                    };
                    out[axis] = (snap(b.lower[axis])?, snap(b.upper[axis])?);
                }
                Ok(out)
            })
            .collect()
    }

    /// Box index per grid node, `None` for the exterior.
    pub fn assign(&self, grid: &GridSpec) -> Result<Vec<Option<usize>>> {
        let boxes = self.index_boxes(grid)?;
        Ok((0..grid.len())
            .map(|flat| {
                let idx = grid.unflatten(flat);
                boxes.iter().position(|b| (0..grid.dims()).all(|a| idx[a] >= b[a].0 && idx[a] < b[a].1))
            })
            .collect())
    }

    /// Position-space partition `{χ_{D_k}} ∪ {χ_ex}` as dense diagonal
    /// projectors. Only sensible on small grids.
    pub fn to_partition(&self, grid: &GridSpec) -> Result<ProjectorPartition> {
        let owner = self.assign(grid)?;
        let members = (0..self.len())
            .map(|k| Projector::from_indices(grid.len(), owner.iter().enumerate().filter(|(_, o)| **o == Some(k)).map(|(i, _)| i)))
            .collect::<Result<Vec<_>>>()?;
        ProjectorPartition::with_complement(members)
    }
}
