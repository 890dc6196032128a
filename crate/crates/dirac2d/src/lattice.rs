//! Finite truncations of the lattice cochain complex and the operator H±.
//!
//! A box of side L carries L² vertices and, per boundary condition, E = 2L²
//! (periodic) or 2L(L−1) (open) canonically oriented edges, each pointing in
//! the +δ₁ or +δ₂ direction. Cochains store one value per vertex and one
//! value per oriented edge of A⁺; the value on a reversed edge is the
//! negation by convention and never stored, which turns the ½-weighted
//! inner product over both orientations into a plain Euclidean product.
//!
//! The assembled operator is the symmetric matrix
//!
//! ```text
//!        ⎛ m·I ± v₁   dᵀ      ⎞   vertex block first,
//!   H± = ⎜                    ⎟   edge block second,
//!        ⎝ d         −m·I ± v ⎠   d = coboundary (incidence) matrix,
//! ```
//!
//! with the diagonal potential V ≥ 0 split into a vertex component v₁ and
//! edge components v₂ (horizontal) and v₃ (vertical).

use ndarray::Array2;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("box side length must be at least 2, got {0}")]
    InvalidSize(usize),
    #[error("vector length {got} does not match {expected} ({what})")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("potential component {component} is negative at offset ({mu1}, {mu2}): {value}")]
    NegativePotential { component: &'static str, mu1: i64, mu2: i64, value: f64 },
    #[error("plaquette at ({x}, {y}) crosses the open boundary of an L = {l} box")]
    PlaquetteOutsideBox { x: usize, y: usize, l: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Open,
}

/// Sign of the perturbation in H± = H₀ ± V.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Horizontal,
    Vertical,
}

/// One canonically oriented edge, tail → head, pointing in +δ₁ or +δ₂.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub kind: EdgeKind,
    /// lattice coordinates of the tail vertex, indexing edge potentials
    pub tail_xy: (usize, usize),
}

/// An L×L truncation of the lattice with its index maps.
///
/// Vertex (x, y) has index x·L + y; edges follow in a fixed scan order
/// (per vertex: horizontal then vertical) and occupy indices L² .. L²+E in
/// the assembled operator.
pub struct LatticeBox {
    pub side_length: usize,
    pub boundary: Boundary,
    edges: Vec<Edge>,
}

pub fn build_lattice(l: usize, boundary: Boundary) -> Result<LatticeBox, LatticeError> {
    if l < 2 {
        return Err(LatticeError::InvalidSize(l));
    }
    let mut edges = Vec::with_capacity(2 * l * l);
    for x in 0..l {
        for y in 0..l {
            let tail = x * l + y;
            if boundary == Boundary::Periodic || x + 1 < l {
                let head = ((x + 1) % l) * l + y;
                edges.push(Edge { tail, head, kind: EdgeKind::Horizontal, tail_xy: (x, y) });
            }
            if boundary == Boundary::Periodic || y + 1 < l {
                let head = x * l + (y + 1) % l;
                edges.push(Edge { tail, head, kind: EdgeKind::Vertical, tail_xy: (x, y) });
            }
        }
    }
    Ok(LatticeBox { side_length: l, boundary, edges })
}

impl LatticeBox {
    pub fn num_vertices(&self) -> usize {
        self.side_length * self.side_length
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_dim(&self) -> usize {
        self.num_vertices() + self.num_edges()
    }

    #[inline]
    pub fn vertex_index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.side_length && y < self.side_length);
        x * self.side_length + y
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Box center used to pin μ = 0 of a potential.
    pub fn center(&self) -> (usize, usize) {
        (self.side_length / 2, self.side_length / 2)
    }
}

/// Vertex and A⁺-edge values of a cochain pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub vertex_values: Vec<f64>,
    pub edge_values: Vec<f64>,
}

impl Cochain {
    /// The lattice inner product: the ½ Σ over both edge orientations
    /// collapses to a plain sum over A⁺.
    pub fn inner(&self, other: &Cochain) -> f64 {
        let v: f64 = self
            .vertex_values
            .iter()
            .zip(&other.vertex_values)
            .map(|(a, b)| a * b)
            .sum();
        let e: f64 = self
            .edge_values
            .iter()
            .zip(&other.edge_values)
            .map(|(a, b)| a * b)
            .sum();
        v + e
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self)
    }
}

/// One component of the potential: a nonnegative function of the offset
/// μ ∈ Z² from the potential center.
#[derive(Debug, Clone)]
pub enum ComponentSpec {
    Zero,
    /// Γ⟨μ⟩^{−γ} with ⟨μ⟩ = (1 + |μ|²)^{1/2}
    PowerDecay { amplitude: f64, decay: f64 },
    /// finitely supported table of (μ₁, μ₂) → value
    Table(BTreeMap<(i64, i64), f64>),
}

impl ComponentSpec {
    pub fn eval(&self, mu: (i64, i64)) -> f64 {
        match self {
            ComponentSpec::Zero => 0.0,
            ComponentSpec::PowerDecay { amplitude, decay } => {
                let q = 1.0 + (mu.0 * mu.0 + mu.1 * mu.1) as f64;
                amplitude * q.powf(-decay / 2.0)
            }
            ComponentSpec::Table(t) => t.get(&mu).copied().unwrap_or(0.0),
        }
    }

    fn check_nonnegative(&self, name: &'static str) -> Result<(), LatticeError> {
        match self {
            ComponentSpec::Zero => Ok(()),
            ComponentSpec::PowerDecay { amplitude, .. } => {
                if *amplitude < 0.0 {
                    Err(LatticeError::NegativePotential {
                        component: name,
                        mu1: 0,
                        mu2: 0,
                        value: *amplitude,
                    })
                } else {
                    Ok(())
                }
            }
            ComponentSpec::Table(t) => {
                for (&(m1, m2), &v) in t {
                    if v < 0.0 {
                        return Err(LatticeError::NegativePotential {
                            component: name,
                            mu1: m1,
                            mu2: m2,
                            value: v,
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// The diagonal perturbation (v₁ on vertices, v₂ on horizontal edges, v₃ on
/// vertical edges), each a function of the offset from `center`.
///
/// Edge components are indexed by the tail vertex of the canonical edge,
/// matching v₂(μ) = V on the edge (μ, μ+δ₁) and likewise for v₃. With
/// `center: None` the origin is pinned at (⌊L/2⌋, ⌊L/2⌋) of whatever box
/// the potential is applied to, keeping it maximally far from an open
/// boundary at every box size.
#[derive(Debug, Clone)]
pub struct Potential {
    pub v1: ComponentSpec,
    pub v2: ComponentSpec,
    pub v3: ComponentSpec,
    pub center: Option<(usize, usize)>,
}

impl Potential {
    pub fn new(v1: ComponentSpec, v2: ComponentSpec, v3: ComponentSpec) -> Self {
        Potential { v1, v2, v3, center: None }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        self.v1.check_nonnegative("v1")?;
        self.v2.check_nonnegative("v2")?;
        self.v3.check_nonnegative("v3")
    }

    fn resolved_center(&self, boxx: &LatticeBox) -> (i64, i64) {
        let c = self.center.unwrap_or_else(|| boxx.center());
        (c.0 as i64, c.1 as i64)
    }

    fn offset(&self, xy: (usize, usize), center: (i64, i64)) -> (i64, i64) {
        (xy.0 as i64 - center.0, xy.1 as i64 - center.1)
    }
}

/// Symmetric sparse matrix in CSR form with both triangles stored.
///
/// Assembly happens in a fixed scan order and duplicate entries are summed
/// during compression, so the stored bytes are identical across runs.
pub struct SymmetricSparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SymmetricSparseMatrix {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for &(i, j, v) in triplets {
            debug_assert!(i < n && j < n);
            *rows[i].entry(j).or_insert(0.0) += v;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SymmetricSparseMatrix { n, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.n).map(|i| self.row_ptr[i + 1] - self.row_ptr[i]).max().unwrap_or(0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
        y
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[[i, self.col_idx[k]]] = self.values[k];
            }
        }
        a
    }

    /// Exact numeric symmetry of the stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let vt = self.get(j, i);
                worst = worst.max((self.values[k] - vt).abs());
            }
        }
        worst
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }
}

/// df(e) = f(head) − f(tail) over the canonical edges.
pub fn apply_coboundary(boxx: &LatticeBox, f: &[f64]) -> Result<Vec<f64>, LatticeError> {
    if f.len() != boxx.num_vertices() {
        return Err(LatticeError::LengthMismatch {
            what: "vertex vector",
            expected: boxx.num_vertices(),
            got: f.len(),
        });
    }
    Ok(boxx.edges.iter().map(|e| f[e.head] - f[e.tail]).collect())
}

/// The adjoint of the coboundary under the cochain inner product; equals
/// the matrix transpose of `apply_coboundary` on the A⁺ representation,
/// which in turn equals the signed sum −Σ_{e ∈ A_x} g(e) over the four
/// edges leaving x (the two reversed edges contribute negated values).
pub fn apply_coboundary_adjoint(boxx: &LatticeBox, g: &[f64]) -> Result<Vec<f64>, LatticeError> {
    if g.len() != boxx.num_edges() {
        return Err(LatticeError::LengthMismatch {
            what: "edge vector",
            expected: boxx.num_edges(),
            got: g.len(),
        });
    }
    let mut out = vec![0.0; boxx.num_vertices()];
    for (e, &ge) in boxx.edges.iter().zip(g) {
        out[e.tail] -= ge;
        out[e.head] += ge;
    }
    Ok(out)
}

/// Assembles H₀ (no potential) or H± = H₀ ± V as a sparse symmetric matrix,
/// vertex block first. `sign` defaults to `Plus` when a potential is given.
pub fn assemble_hamiltonian(
    boxx: &LatticeBox,
    m: f64,
    potential: Option<&Potential>,
    sign: Option<Sign>,
) -> Result<SymmetricSparseMatrix, LatticeError> {
    assert!(m >= 0.0, "mass must be nonnegative");
    if let Some(p) = potential {
        p.validate()?;
    }
    let nv = boxx.num_vertices();
    let n = boxx.total_dim();
    let s = sign.unwrap_or(Sign::Plus).factor();
    let center = potential.map(|p| p.resolved_center(boxx));
    let l = boxx.side_length;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(n + 4 * boxx.num_edges());
    for x in 0..l {
        for y in 0..l {
            let i = boxx.vertex_index(x, y);
            let mut d = m;
            if let (Some(p), Some(c)) = (potential, center) {
                d += s * p.v1.eval(p.offset((x, y), c));
            }
            triplets.push((i, i, d));
        }
    }
    for (ei, e) in boxx.edges.iter().enumerate() {
        let row = nv + ei;
        let mut d = -m;
        if let (Some(p), Some(c)) = (potential, center) {
            let comp = match e.kind {
                EdgeKind::Horizontal => &p.v2,
                EdgeKind::Vertical => &p.v3,
            };
            d += s * comp.eval(p.offset(e.tail_xy, c));
        }
        triplets.push((row, row, d));
        // incidence entries of d and its transpose
        triplets.push((row, e.tail, -1.0));
        triplets.push((e.tail, row, -1.0));
        triplets.push((row, e.head, 1.0));
        triplets.push((e.head, row, 1.0));
    }
    Ok(SymmetricSparseMatrix::from_triplets(n, &triplets))
}

/// The circulation cochain of the unit plaquette with lower-left corner x′.
///
/// Vertex values vanish and the four boundary edges carry ±1 according to
/// whether the loop traverses them with or against the canonical
/// orientation, so d* annihilates it and (H₀ + m) maps it to zero exactly.
pub fn loop_state(boxx: &LatticeBox, x_prime: (usize, usize)) -> Result<Cochain, LatticeError> {
    let l = boxx.side_length;
    let (x, y) = x_prime;
    if boxx.boundary == Boundary::Open && (x + 1 >= l || y + 1 >= l) {
        return Err(LatticeError::PlaquetteOutsideBox { x, y, l });
    }
    let xr = (x + 1) % l;
    let yu = (y + 1) % l;
    let mut edge_values = vec![0.0; boxx.num_edges()];
    // counterclockwise traversal: (x,y) → (x+1,y) → (x+1,y+1) → (x,y+1) → (x,y)
    for (ei, e) in boxx.edges.iter().enumerate() {
        let (tx, ty) = e.tail_xy;
        match e.kind {
            EdgeKind::Horizontal => {
                if (tx, ty) == (x, y) {
                    edge_values[ei] = 1.0; // bottom, along orientation
                } else if (tx, ty) == (x, yu) {
                    edge_values[ei] = -1.0; // top, against orientation
                }
            }
            EdgeKind::Vertical => {
                if (tx, ty) == (xr, y) {
                    edge_values[ei] = 1.0; // right side, along
                } else if (tx, ty) == (x, y) {
                    edge_values[ei] = -1.0; // left side, against
                }
            }
        }
    }
    Ok(Cochain { vertex_values: vec![0.0; boxx.num_vertices()], edge_values })
}

/// Tr V on the box: Σ_x v₁(x) + Σ_{e ∈ A⁺} v(e). A ½-sum over all
/// oriented edges collapses to this because V takes one value per
/// unoriented edge.
pub fn potential_trace_norm(boxx: &LatticeBox, potential: &Potential) -> f64 {
    let c = potential.resolved_center(boxx);
    let l = boxx.side_length;
    let mut total = 0.0;
    for x in 0..l {
        for y in 0..l {
            total += potential.v1.eval(potential.offset((x, y), c));
        }
    }
    for e in &boxx.edges {
        let comp = match e.kind {
            EdgeKind::Horizontal => &potential.v2,
            EdgeKind::Vertical => &potential.v3,
        };
        total += comp.eval(potential.offset(e.tail_xy, c));
    }
    total
}
