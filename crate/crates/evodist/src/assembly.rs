//! Finite-element operators: lumped mass, anisotropic stiffness, and
//! homogeneous Dirichlet elimination.
//!
//! The discrete bilinear forms target piecewise-linear elements on the
//! structured triangulation from [`crate::mesh`]:
//! - mass is lumped, `m_a = sum over triangles at a of |K| / 3`, so the
//!   time-derivative and reaction terms act nodewise through a diagonal;
//! - stiffness is diagonal-anisotropic, `K_ab = |K| * (d1 * dx phi_a *
//!   dx phi_b + d2 * dy phi_a * dy phi_b)`, with per-equation weights
//!   `(d1, d2)` supplied by the caller. `d2 = 0` (or `d1 = 0`) yields the
//!   degenerate single-axis operator and is fully supported;
//! - Dirichlet conditions are applied by symmetric elimination: the value
//!   is zero, so constrained rows and columns are simply dropped and the
//!   reduced system stays symmetric positive definite once the lumped
//!   mass diagonal is added.

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Symmetric sparse matrix in compressed-row form.
///
/// Both triangles are stored so the matrix-vector product is a plain CSR
/// walk; symmetry is an invariant of the assembly path, checkable with
/// [`SymSparseMatrix::symmetry_defect`].
#[derive(Debug, Clone)]
pub struct SymSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymSparseMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries `(column, value)` of one row, sorted by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// Stored value at `(r, c)`, zero if the position is not stored.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Main diagonal as a dense vector (zeros where not stored).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.entry(r, r)).collect()
    }

    /// Returns a copy with `extra[r]` added to each diagonal entry.
    ///
    /// Every row is given a diagonal slot even if the original had none,
    /// so mass-plus-stiffness systems are well formed for isolated nodes.
    pub fn plus_diagonal(&self, extra: &[f64]) -> SymSparseMatrix {
        assert_eq!(extra.len(), self.n);
        let mut builder = SparseBuilder::new(self.n);
        for r in 0..self.n {
            builder.add(r, r, extra[r]);
            for (c, v) in self.row(r) {
                builder.add(r, c, v);
            }
        }
        builder.build()
    }

    /// Largest absolute difference between `A` and its transpose.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.entry(c, r)).abs());
            }
        }
        worst
    }
}

/// Accumulates triplet contributions, then compresses to CSR.
///
/// Duplicate positions are summed in insertion order, so assembly output
/// is bit-deterministic for a fixed triangle ordering.
pub struct SparseBuilder {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        SparseBuilder { n, rows: vec![Vec::new(); n] }
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.n && c < self.n);
        self.rows[r].push((c, v));
    }

    pub fn build(mut self) -> SymSparseMatrix {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut self.rows {
            // Stable sort keeps insertion order within one column, so the
            // duplicate sum below is order-deterministic.
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == col {
                    acc += row[k].1;
                    k += 1;
                }
                col_idx.push(col);
                values.push(acc);
            }
            row_ptr.push(col_idx.len());
        }
        SymSparseMatrix { n: self.n, row_ptr, col_idx, values }
    }
}

/// Diagonal of the lumped mass form, one positive weight per node.
#[derive(Debug, Clone)]
pub struct LumpedMass {
    pub weights: Vec<f64>,
}

impl LumpedMass {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Mass-weighted squared norm `sum_a m_a v_a^2`.
    pub fn norm_sq(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.weights.len());
        v.iter().zip(&self.weights).map(|(x, m)| m * x * x).sum()
    }

    /// Mass-weighted integral `sum_a m_a v_a` (total population mass).
    pub fn integral(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.weights.len());
        v.iter().zip(&self.weights).map(|(x, m)| m * x).sum()
    }
}

/// Lumped mass weights: each triangle spreads a third of its area onto
/// each vertex. Weights are positive and sum to the domain area 1.
pub fn assemble_lumped_mass(mesh: &Mesh) -> LumpedMass {
    let mut weights = vec![0.0; mesh.node_count()];
    for tri in &mesh.triangles {
        let share = mesh.triangle_area(tri) / 3.0;
        for &a in tri {
            weights[a] += share;
        }
    }
    LumpedMass { weights }
}

/// Element stiffness for one counterclockwise triangle under the
/// diagonal diffusion tensor `diag(d1, d2)`.
///
/// Rows sum to zero and the matrix is symmetric by construction.
pub fn local_stiffness(coords: [(f64, f64); 3], d1: f64, d2: f64) -> [[f64; 3]; 3] {
    let (x0, y0) = coords[0];
    let (x1, y1) = coords[1];
    let (x2, y2) = coords[2];
    let two_area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    assert!(two_area > 0.0, "triangle must be counterclockwise and nondegenerate");

    // Gradient of basis function a is (b_a, c_a) / (2 |K|).
    let b = [y1 - y2, y2 - y0, y0 - y1];
    let c = [x2 - x1, x0 - x2, x1 - x0];

    let scale = 1.0 / (2.0 * two_area);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for bb in 0..3 {
            k[a][bb] = scale * (d1 * b[a] * b[bb] + d2 * c[a] * c[bb]);
        }
    }
    k
}

/// Assembles the global stiffness matrix for `diag(d1, d2)` diffusion.
///
/// Degenerate weights (`d1 = 0` or `d2 = 0`) are allowed; negative
/// weights are rejected.
pub fn assemble_stiffness(mesh: &Mesh, d1: f64, d2: f64) -> Result<SymSparseMatrix> {
    if !(d1 >= 0.0) {
        return Err(Error::invalid("d1", format!("diffusion weight must be >= 0, got {d1}")));
    }
    if !(d2 >= 0.0) {
        return Err(Error::invalid("d2", format!("diffusion weight must be >= 0, got {d2}")));
    }
    let mut builder = SparseBuilder::new(mesh.node_count());
    for tri in &mesh.triangles {
        let coords = [mesh.coords[tri[0]], mesh.coords[tri[1]], mesh.coords[tri[2]]];
        let k = local_stiffness(coords, d1, d2);
        for a in 0..3 {
            for b in 0..3 {
                builder.add(tri[a], tri[b], k[a][b]);
            }
        }
    }
    Ok(builder.build())
}

/// Index bookkeeping for symmetric elimination of constrained nodes.
#[derive(Debug, Clone)]
pub struct DirichletMap {
    n_full: usize,
    free: Vec<usize>,
    full_to_free: Vec<Option<usize>>,
}

impl DirichletMap {
    pub fn new(constrained: &[bool]) -> Result<Self> {
        let n_full = constrained.len();
        let mut free = Vec::new();
        let mut full_to_free = vec![None; n_full];
        for (k, &fixed) in constrained.iter().enumerate() {
            if !fixed {
                full_to_free[k] = Some(free.len());
                free.push(k);
            }
        }
        if free.is_empty() {
            return Err(Error::AllNodesConstrained { n: n_full });
        }
        Ok(DirichletMap { n_full, free, full_to_free })
    }

    pub fn full_dim(&self) -> usize {
        self.n_full
    }

    pub fn free_dim(&self) -> usize {
        self.free.len()
    }

    pub fn is_constrained(&self, k: usize) -> bool {
        self.full_to_free[k].is_none()
    }

    /// Free-node indices in increasing full-index order.
    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    /// Drops constrained entries from a full-length vector.
    pub fn reduce_vec(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.n_full);
        self.free.iter().map(|&k| full[k]).collect()
    }

    /// Scatters a reduced vector back, writing exact zeros at
    /// constrained positions.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.free.len());
        let mut full = vec![0.0; self.n_full];
        for (r, &k) in self.free.iter().enumerate() {
            full[k] = reduced[r];
        }
        full
    }

    /// Symmetric elimination of constrained rows and columns.
    pub fn reduce_matrix(&self, a: &SymSparseMatrix) -> SymSparseMatrix {
        assert_eq!(a.dim(), self.n_full);
        let mut builder = SparseBuilder::new(self.free.len());
        for (r, &k) in self.free.iter().enumerate() {
            for (c, v) in a.row(k) {
                if let Some(rc) = self.full_to_free[c] {
                    builder.add(r, rc, v);
                }
            }
        }
        builder.build()
    }
}

/// Applies homogeneous Dirichlet conditions by symmetric elimination.
///
/// Returns the reduced matrix, the reduced right-hand side, and the
/// recovery map; fails when every node is constrained.
pub fn apply_dirichlet(
    a: &SymSparseMatrix,
    rhs: &[f64],
    constrained: &[bool],
) -> Result<(SymSparseMatrix, Vec<f64>, DirichletMap)> {
    assert_eq!(a.dim(), constrained.len());
    assert_eq!(rhs.len(), constrained.len());
    let map = DirichletMap::new(constrained)?;
    let reduced_a = map.reduce_matrix(a);
    let reduced_rhs = map.reduce_vec(rhs);
    Ok((reduced_a, reduced_rhs, map))
}
