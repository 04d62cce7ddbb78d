//! One-dimensional domains and the boundary-fitted computational grid.

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Points closer than this to ∂Ω are treated as lying on it by the set predicates.
pub const GEOM_TOL: f64 = 1e-10;

/// A bounded open set: a finite union of disjoint open intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Domain {
    intervals: Vec<(f64, f64)>,
    diameter: f64,
}

impl TryFrom<Vec<[f64; 2]>> for Domain {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Domain::new(v.into_iter().map(|p| (p[0], p[1])).collect())
    }
}

impl From<Domain> for Vec<[f64; 2]> {
    fn from(d: Domain) -> Self {
        d.intervals.iter().map(|&(a, b)| [a, b]).collect()
    }
}

impl Domain {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return config("domain needs at least one interval");
        }
        if intervals
            .iter()
            .any(|&(a, b)| !a.is_finite() || !b.is_finite())
        {
            return config("domain endpoints must be finite");
        }
        intervals.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        for &(a, b) in &intervals {
            if !(b > a) {
                return config(format!("interval ({a}, {b}) has nonpositive length"));
            }
        }
        for w in intervals.windows(2) {
            if !(w[1].0 > w[0].1) {
                return config(format!(
                    "intervals ({}, {}) and ({}, {}) overlap or touch",
                    w[0].0, w[0].1, w[1].0, w[1].1
                ));
            }
        }
        let diameter = intervals.last().unwrap().1 - intervals[0].0;
        Ok(Self {
            intervals,
            diameter,
        })
    }

    /// The interval (-r, r).
    pub fn symmetric(r: f64) -> Result<Self> {
        Self::new(vec![(-r, r)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn lower(&self) -> f64 {
        self.intervals[0].0
    }

    pub fn upper(&self) -> f64 {
        self.intervals.last().unwrap().1
    }

    pub fn endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.iter().flat_map(|&(a, b)| [a, b])
    }

    /// Distance to ∂Ω, positive inside Ω and nonpositive outside.
    pub fn signed_distance(&self, x: f64) -> f64 {
        for &(a, b) in &self.intervals {
            if x > a && x < b {
                return (x - a).min(b - x);
            }
        }
        -self
            .endpoints()
            .map(|e| (x - e).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.signed_distance(x) > GEOM_TOL
    }

    pub fn contains_closure(&self, x: f64) -> bool {
        self.signed_distance(x) >= -GEOM_TOL
    }

    /// Membership in the boundary strip `Ω_r = {x ∈ Ω : d(x) < r}`.
    pub fn boundary_strip(&self, r: f64) -> Result<impl Fn(f64) -> bool + '_> {
        if !(r > 0.0) {
            return config(format!("strip width r = {r} must be positive"));
        }
        Ok(move |x: f64| {
            let d = self.signed_distance(x);
            d > GEOM_TOL && d < r
        })
    }

    /// The domain with every interval widened by `r` on both sides.
    pub fn dilated(&self, r: f64) -> Result<Self> {
        Self::new(
            self.intervals
                .iter()
                .map(|&(a, b)| (a - r, b + r))
                .collect(),
        )
    }
}

/// Classification of a grid node relative to Ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

/// Uniform grid over the padded bounding box of Ω with every endpoint on a node.
#[derive(Clone, Debug)]
pub struct Grid {
    h: f64,
    x_start: f64,
    classes: Vec<NodeClass>,
    /// Ω with endpoints replaced by their node coordinates.
    domain: Domain,
    pad_nodes: usize,
}

impl Grid {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_start + i as f64 * self.h
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn class(&self, i: usize) -> NodeClass {
        self.classes[i]
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn pad(&self) -> f64 {
        self.pad_nodes as f64 * self.h
    }

    pub fn pad_nodes(&self) -> usize {
        self.pad_nodes
    }

    /// Signed distance of node `i` (exactly 0 on boundary nodes).
    pub fn distance(&self, i: usize) -> f64 {
        match self.classes[i] {
            NodeClass::Boundary => 0.0,
            _ => self.domain.signed_distance(self.x(i)),
        }
    }

    pub fn in_closure(&self, i: usize) -> bool {
        self.classes[i] != NodeClass::Exterior
    }

    /// Indices of nodes in Ω̄.
    pub fn closure_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.in_closure(i)).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.classes[i] == NodeClass::Interior)
            .collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.classes[i] == NodeClass::Boundary)
            .collect()
    }

    /// Index of the node closest to `x`, if it lies on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = ((x - self.x_start) / self.h).round();
        if t < 0.0 || t >= self.len() as f64 {
            return None;
        }
        let i = t as usize;
        ((self.x(i) - x).abs() <= 1e-9 * self.h.max(1.0)).then_some(i)
    }
}

/// Builds the boundary-fitted grid.
///
/// The spacing is the largest `h ≤ h_target` dividing every interval length and
/// every gap; the grid extends `truncation_radius` (rounded up to whole cells)
/// beyond Ω on both sides.
pub fn build_grid(domain: &Domain, h_target: f64, truncation_radius: f64) -> Result<Grid> {
    if !(h_target > 0.0 && h_target.is_finite()) {
        return config(format!("h_target = {h_target} must be positive"));
    }
    if !(truncation_radius >= 0.0 && truncation_radius.is_finite()) {
        return config(format!(
            "truncation radius {truncation_radius} must be nonnegative"
        ));
    }
    let ends: Vec<f64> = domain.endpoints().collect();
    let diffs: Vec<f64> = ends.windows(2).map(|w| w[1] - w[0]).collect();
    let total = domain.diameter();
    let n_min = (total / h_target * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let n_max = n_min.saturating_mul(1000).max(n_min + 100_000);
    let mut cells = None;
    for n in n_min..=n_max {
        let h = total / n as f64;
        let fits = diffs.iter().all(|&d| {
            let q = d / h;
            (q - q.round()).abs() <= 1e-9 * q.max(1.0) && q.round() >= 1.0
        });
        if fits {
            cells = Some(n);
            break;
        }
    }
    let n_cells = cells.ok_or_else(|| {
        Error::Config(format!(
            "domain endpoints {ends:?} are incommensurable at spacing <= {h_target}; snap the endpoints to a common lattice"
        ))
    })?;
    let h = total / n_cells as f64;
    let pad_nodes = (truncation_radius / h * (1.0 - 1e-12)).ceil() as usize;
    let x_start = domain.lower() - pad_nodes as f64 * h;
    let len = n_cells + 1 + 2 * pad_nodes;
    let end_idx: Vec<usize> = ends
        .iter()
        .map(|&e| pad_nodes + ((e - domain.lower()) / h).round() as usize)
        .collect();

    let mut classes = vec![NodeClass::Exterior; len];
    let mut snapped = Vec::new();
    for pair in end_idx.chunks(2) {
        let (ia, ib) = (pair[0], pair[1]);
        classes[ia] = NodeClass::Boundary;
        classes[ib] = NodeClass::Boundary;
        for c in classes.iter_mut().take(ib).skip(ia + 1) {
            *c = NodeClass::Interior;
        }
        snapped.push((x_start + ia as f64 * h, x_start + ib as f64 * h));
    }
    Ok(Grid {
        h,
        x_start,
        classes,
        domain: Domain::new(snapped)?,
        pad_nodes,
    })
}
