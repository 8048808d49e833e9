//! Structured triangulation of the unit trait square.
//!
//! Conventions, relied on throughout the crate:
//! - Nodes live on a uniform `nx` x `ny` grid over `[0,1]^2`, numbered
//!   row-major: node `(i, j)` has index `j * nx + i` and coordinates
//!   `(i * h1, j * h2)` with `h1 = 1/(nx-1)`, `h2 = 1/(ny-1)`.
//! - Each grid cell is split into two right triangles by the diagonal
//!   from `(i, j)` to `(i+1, j+1)`. This diagonal choice is invariant
//!   under swapping the two axes, which the symmetry checks depend on.
//! - Triangle vertices are listed counterclockwise.

use crate::error::{Error, Result};

/// Whether a node lies on the faces orthogonal to each trait axis.
///
/// `on_x1_boundary` means `x1` is exactly 0 or 1 (faces `{0,1} x [0,1]`).
/// Grid coordinates make the comparison exact, so the flags are computed
/// from indices, never from floating-point coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundaryClass {
    pub on_x1_boundary: bool,
    pub on_x2_boundary: bool,
}

impl BoundaryClass {
    /// True if the node lies anywhere on the boundary of the square.
    pub fn on_boundary(&self) -> bool {
        self.on_x1_boundary || self.on_x2_boundary
    }
}

/// Triangulated unit square with row-major structured nodes.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// Grid points along the `x1` axis (>= 2).
    pub nx: usize,
    /// Grid points along the `x2` axis (>= 2).
    pub ny: usize,
    /// Node coordinates, row-major.
    pub coords: Vec<(f64, f64)>,
    /// Triangles as node-index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Per-node boundary flags, same order as `coords`.
    pub boundary: Vec<BoundaryClass>,
}

/// Builds the structured right-triangle mesh on `[0,1]^2`.
///
/// Fails when either direction has fewer than two grid points.
pub fn build_structured_mesh(nx: usize, ny: usize) -> Result<Mesh> {
    if nx < 2 {
        return Err(Error::invalid("nx", format!("need at least 2 grid points, got {nx}")));
    }
    if ny < 2 {
        return Err(Error::invalid("ny", format!("need at least 2 grid points, got {ny}")));
    }

    let h1 = 1.0 / (nx - 1) as f64;
    let h2 = 1.0 / (ny - 1) as f64;

    let mut coords = Vec::with_capacity(nx * ny);
    let mut boundary = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            coords.push((i as f64 * h1, j as f64 * h2));
            boundary.push(BoundaryClass {
                on_x1_boundary: i == 0 || i == nx - 1,
                on_x2_boundary: j == 0 || j == ny - 1,
            });
        }
    }

    let idx = |i: usize, j: usize| j * nx + i;
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // Cell diagonal runs (i,j) -> (i+1,j+1); both triangles CCW.
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }

    Ok(Mesh { nx, ny, coords, triangles, boundary })
}

/// Boundary flags for one node.
pub fn classify_node(mesh: &Mesh, index: usize) -> BoundaryClass {
    mesh.boundary[index]
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Grid spacing along `x1`.
    pub fn h1(&self) -> f64 {
        1.0 / (self.nx - 1) as f64
    }

    /// Grid spacing along `x2`.
    pub fn h2(&self) -> f64 {
        1.0 / (self.ny - 1) as f64
    }

    /// Row-major index of grid point `(i, j)`.
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Inverse of [`Mesh::node_index`].
    pub fn node_ij(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    /// Signed area of a triangle; positive for counterclockwise vertices.
    pub fn triangle_area(&self, tri: &[usize; 3]) -> f64 {
        let (x0, y0) = self.coords[tri[0]];
        let (x1, y1) = self.coords[tri[1]];
        let (x2, y2) = self.coords[tri[2]];
        0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
    }

    /// Node permutation induced by swapping the two trait axes.
    ///
    /// Entry `p[k]` is the index of the mirror node of `k`. Requires a
    /// square grid; the triangulation maps onto itself under this map.
    pub fn swap_permutation(&self) -> Result<Vec<usize>> {
        if self.nx != self.ny {
            return Err(Error::invalid(
                "mesh",
                format!("axis swap needs a square grid, got {}x{}", self.nx, self.ny),
            ));
        }
        let n = self.node_count();
        let mut perm = vec![0usize; n];
        for k in 0..n {
            let (i, j) = self.node_ij(k);
            perm[k] = self.node_index(j, i);
        }
        Ok(perm)
    }

    /// Evaluates the piecewise-linear interpolant of nodal values at `(x, y)`.
    ///
    /// The point must lie in `[0,1]^2`; values are taken from the triangle
    /// containing it (faces shared between triangles agree by continuity).
    pub fn interpolate(&self, nodal: &[f64], x: f64, y: f64) -> f64 {
        assert_eq!(nodal.len(), self.node_count(), "field length must match node count");
        assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y), "point outside unit square");

        let h1 = self.h1();
        let h2 = self.h2();
        let i = ((x / h1).floor() as usize).min(self.nx - 2);
        let j = ((y / h2).floor() as usize).min(self.ny - 2);
        // Local cell coordinates in [0,1]; the diagonal is s = t.
        let s = (x - i as f64 * h1) / h1;
        let t = (y - j as f64 * h2) / h2;

        let v00 = nodal[self.node_index(i, j)];
        let v10 = nodal[self.node_index(i + 1, j)];
        let v11 = nodal[self.node_index(i + 1, j + 1)];
        let v01 = nodal[self.node_index(i, j + 1)];
        if s >= t {
            // Lower triangle (i,j), (i+1,j), (i+1,j+1).
            v00 + (v10 - v00) * s + (v11 - v10) * t
        } else {
            // Upper triangle (i,j), (i+1,j+1), (i,j+1).
            v00 + (v11 - v01) * s + (v01 - v00) * t
        }
    }

    /// Distance from `(x, y)` to the boundary of the unit square.
    pub fn boundary_distance(x: f64, y: f64) -> f64 {
        x.min(1.0 - x).min(y).min(1.0 - y)
    }
}
