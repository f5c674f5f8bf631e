//! Wave-speed models, boundary tags and sensor arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCondition {
    /// Homogeneous Neumann: the accessible boundary.
    SoundHard,
    /// Homogeneous Dirichlet.
    SoundSoft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Top,
    Bottom,
    Left,
    Right,
}

/// One condition per edge. Sound-hard edges are cell faces half a spacing
/// outside the outermost nodes; sound-soft walls sit one full spacing beyond.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    pub top: EdgeCondition,
    pub bottom: EdgeCondition,
    pub left: EdgeCondition,
    pub right: EdgeCondition,
}

impl Boundary {
    /// Sound-hard top, sound-soft elsewhere.
    pub fn accessible_top() -> Self {
        Self {
            top: EdgeCondition::SoundHard,
            bottom: EdgeCondition::SoundSoft,
            left: EdgeCondition::SoundSoft,
            right: EdgeCondition::SoundSoft,
        }
    }

    pub fn get(&self, edge: Edge) -> EdgeCondition {
        match edge {
            Edge::Top => self.top,
            Edge::Bottom => self.bottom,
            Edge::Left => self.left,
            Edge::Right => self.right,
        }
    }

    fn accessible(&self) -> Result<Edge> {
        let hard: Vec<Edge> = [Edge::Top, Edge::Bottom, Edge::Left, Edge::Right]
            .into_iter()
            .filter(|&e| self.get(e) == EdgeCondition::SoundHard)
            .collect();
        match hard.as_slice() {
            [e] => Ok(*e),
            _ => Err(Error::config(format!(
                "exactly one sound-hard edge required, found {}",
                hard.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Medium<T> {
    pub grid: Grid<T>,
    pub c: Vec<T>,
    pub c_ref: Vec<T>,
    pub boundary: Boundary,
    accessible: Edge,
    /// Width of the strip along the accessible edge where `c == c_ref`.
    pub strip: T,
}

impl<T: Real> Medium<T> {
    pub fn new(grid: Grid<T>, c: Vec<T>, c_ref: Vec<T>, boundary: Boundary, strip: T) -> Result<Self> {
        if c.len() != grid.len() || c_ref.len() != grid.len() {
            return Err(Error::dim("wave speed arrays do not match the grid"));
        }
        if c.iter().chain(&c_ref).any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::config("wave speeds must be positive and finite"));
        }
        let accessible = boundary.accessible()?;
        let m = Self { grid, c, c_ref, boundary, accessible, strip };
        for idx in 0..grid.len() {
            if m.edge_distance(idx) <= strip && m.c[idx] != m.c_ref[idx] {
                let (x, z) = grid.coords(idx);
                return Err(Error::config(format!(
                    "c differs from c_ref inside the sensor strip at ({}, {})",
                    x.f64(),
                    z.f64()
                )));
            }
        }
        Ok(m)
    }

    pub fn homogeneous(grid: Grid<T>, speed: T, boundary: Boundary, strip: T) -> Result<Self> {
        let c = vec![speed; grid.len()];
        Self::new(grid, c.clone(), c, boundary, strip)
    }

    pub fn accessible_edge(&self) -> Edge {
        self.accessible
    }

    /// Distance of a node from the accessible boundary face.
    pub fn edge_distance(&self, idx: usize) -> T {
        let g = &self.grid;
        let (i, k) = g.node(idx);
        let half = T::lit(0.5) * g.h;
        let last = |n: usize, j: usize| T::from_usize_lossy(n - 1 - j) * g.h;
        match self.accessible {
            Edge::Top => T::from_usize_lossy(k) * g.h + half,
            Edge::Bottom => last(g.nz, k) + half,
            Edge::Left => T::from_usize_lossy(i) * g.h + half,
            Edge::Right => last(g.nx, i) + half,
        }
    }

    /// The background medium `c ≡ c_ref` with the same grid and boundary.
    pub fn reference(&self) -> Self {
        Self { c: self.c_ref.clone(), ..self.clone() }
    }

    pub fn is_reference(&self) -> bool {
        self.c == self.c_ref
    }

    pub fn c_max(&self) -> T {
        self.c.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    /// Speed used to normalize pressure at the sensors.
    pub fn c_bar(&self) -> T {
        self.c_ref[0]
    }

    pub fn with_speed(&self, c: Vec<T>) -> Result<Self> {
        Self::new(self.grid, c, self.c_ref.clone(), self.boundary, self.strip)
    }
}

/// Equidistant line of point sensors, each snapped to its nearest grid node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry<T> {
    pub positions: Vec<(T, T)>,
    pub nodes: Vec<usize>,
    pub aperture: T,
}

impl<T: Real> ArrayGeometry<T> {
    /// `m` sensors spread uniformly over `[x_start, x_start + aperture]` at depth `z`.
    pub fn linear(medium: &Medium<T>, m: usize, x_start: T, aperture: T, z: T) -> Result<Self> {
        if m == 0 {
            return Err(Error::config("array needs at least one sensor"));
        }
        if m > 1 && !(aperture > T::zero()) {
            return Err(Error::config("aperture must be positive"));
        }
        let step = if m > 1 { aperture / T::from_usize_lossy(m - 1) } else { T::zero() };
        let positions: Vec<(T, T)> =
            (0..m).map(|s| (x_start + T::from_usize_lossy(s) * step, z)).collect();
        Self::from_positions(medium, positions, aperture)
    }

    pub fn from_positions(medium: &Medium<T>, positions: Vec<(T, T)>, aperture: T) -> Result<Self> {
        let g = &medium.grid;
        let mut nodes = Vec::with_capacity(positions.len());
        for &(x, z) in &positions {
            let (i, k) = g.nearest(x, z).ok_or_else(|| {
                Error::config(format!("sensor at ({}, {}) is off the grid", x.f64(), z.f64()))
            })?;
            let idx = g.index(i, k);
            if medium.edge_distance(idx) > medium.strip {
                return Err(Error::config("sensor outside the reference strip"));
            }
            if nodes.contains(&idx) {
                return Err(Error::config("two sensors share a grid node"));
            }
            nodes.push(idx);
        }
        Ok(Self { positions, nodes, aperture })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    /// Sensor subset `keep`, preserving order.
    pub fn subset(&self, keep: &[usize]) -> Self {
        Self {
            positions: keep.iter().map(|&s| self.positions[s]).collect(),
            nodes: keep.iter().map(|&s| self.nodes[s]).collect(),
            aperture: self.aperture,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid<f64> {
        Grid::new(20, 10, 0.25, 0.25, 0.0).unwrap()
    }

    #[test]
    fn one_hard_edge_required() {
        let mut b = Boundary::accessible_top();
        assert!(Medium::homogeneous(grid(), 1.0, b, 0.5).is_ok());
        b.bottom = EdgeCondition::SoundHard;
        assert!(Medium::homogeneous(grid(), 1.0, b, 0.5).is_err());
    }

    #[test]
    fn strip_must_match_reference() {
        let g = grid();
        let mut c = vec![1.0; g.len()];
        c[g.index(3, 1)] = 0.5;
        assert!(Medium::new(g, c.clone(), vec![1.0; g.len()], Boundary::accessible_top(), 0.5).is_err());
        assert!(Medium::new(g, c, vec![1.0; g.len()], Boundary::accessible_top(), 0.2).is_ok());
    }

    #[test]
    fn array_snaps_to_nodes() {
        let med = Medium::homogeneous(grid(), 1.0, Boundary::accessible_top(), 0.5).unwrap();
        let arr = ArrayGeometry::linear(&med, 4, 1.0, 3.0, 0.0).unwrap();
        assert_eq!(arr.m(), 4);
        assert_eq!(med.grid.coords(arr.nodes[3]), (4.0, 0.0));
        assert!(ArrayGeometry::linear(&med, 2, 1.0, 1.0, 2.0).is_err());
    }
}
