//! Finite-dimensional C*-algebras `⊕ᵢ M_{dᵢ}(ℂ)`, their elements, and the
//! matrix algebras `M_t(A)` over them.
//!
//! The linear basis is the set of matrix units ordered block-major then
//! row-major. With this basis the structure constants are `{0, 1}`-valued,
//! the product of two basis elements is either zero or another basis element,
//! and the involution is a plain index permutation.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ONE, ZERO};

/// Hermiticity tolerance relative to `max(1, ‖x‖)`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalue tolerance relative to `max(1, ‖x‖)` for positivity tests.
pub const PSD_TOL: f64 = 1e-9;

/// Matrix unit `E_{row,col}` inside one block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatrixUnit {
    pub block: usize,
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for MatrixUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{},{}", self.block, self.row, self.col)
    }
}

struct Inner {
    block_dims: Vec<usize>,
    offsets: Vec<usize>,
    basis: Vec<MatrixUnit>,
    star: Vec<usize>,
    identity: Vec<usize>,
}

/// A finite direct sum of full matrix algebras. Cheap to clone.
#[derive(Clone)]
pub struct Algebra {
    inner: Arc<Inner>,
}

impl PartialEq for Algebra {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.block_dims == other.inner.block_dims
    }
}

impl Eq for Algebra {}

impl fmt::Debug for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Algebra{:?}", self.inner.block_dims)
    }
}

impl Algebra {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidAlgebra("at least one block is required".into()));
        }
        if block_dims.contains(&0) {
            return Err(Error::InvalidAlgebra("block dimensions must be positive".into()));
        }
        let mut offsets = Vec::with_capacity(block_dims.len());
        let mut basis = Vec::new();
        for (block, &d) in block_dims.iter().enumerate() {
            offsets.push(basis.len());
            for row in 0..d {
                for col in 0..d {
                    basis.push(MatrixUnit { block, row, col });
                }
            }
        }
        let index = |u: MatrixUnit| offsets[u.block] + u.row * block_dims[u.block] + u.col;
        let star = basis.iter().map(|u| index(MatrixUnit { block: u.block, row: u.col, col: u.row })).collect();
        let identity = basis.iter().enumerate().filter(|(_, u)| u.row == u.col).map(|(i, _)| i).collect();
        Ok(Self { inner: Arc::new(Inner { block_dims, offsets, basis, star, identity }) })
    }

    /// `ℂ^d`, i.e. functions on a `d`-point space.
    pub fn commutative(d: usize) -> Result<Self> {
        Self::new(vec![1; d])
    }

    /// `M_n(ℂ)`.
    pub fn matrix(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.inner.block_dims
    }

    /// Linear dimension `Σ dᵢ²`.
    pub fn dim(&self) -> usize {
        self.inner.basis.len()
    }

    pub fn is_commutative(&self) -> bool {
        self.inner.block_dims.iter().all(|&d| d == 1)
    }

    pub fn basis(&self) -> &[MatrixUnit] {
        &self.inner.basis
    }

    pub fn unit(&self, index: usize) -> MatrixUnit {
        self.inner.basis[index]
    }

    pub fn index_of(&self, block: usize, row: usize, col: usize) -> usize {
        self.inner.offsets[block] + row * self.inner.block_dims[block] + col
    }

    /// `e_p e_q` as a basis index, or `None` when the product vanishes.
    #[inline]
    pub fn unit_product(&self, p: usize, q: usize) -> Option<usize> {
        let a = self.inner.basis[p];
        let b = self.inner.basis[q];
        (a.block == b.block && a.col == b.row).then(|| self.index_of(a.block, a.row, b.col))
    }

    /// Structure constant `c_{pq}^r` in `e_p e_q = Σ_r c_{pq}^r e_r`.
    pub fn structure_constant(&self, p: usize, q: usize, r: usize) -> f64 {
        if self.unit_product(p, q) == Some(r) {
            1.0
        } else {
            0.0
        }
    }

    /// Non-zero structure constants as `(p, q, r, c_{pq}^r)`.
    pub fn mult_table(&self) -> Vec<(usize, usize, usize, f64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for p in 0..d {
            for q in 0..d {
                if let Some(r) = self.unit_product(p, q) {
                    out.push((p, q, r, 1.0));
                }
            }
        }
        out
    }

    /// Index of `e_p*`. Matrix units are mapped to matrix units without any
    /// conjugation factor.
    #[inline]
    pub fn star_index(&self, p: usize) -> usize {
        self.inner.star[p]
    }

    pub fn star_table(&self) -> &[usize] {
        &self.inner.star
    }

    /// Basis indices carrying coefficient 1 in the unit.
    pub fn identity_support(&self) -> &[usize] {
        &self.inner.identity
    }

    pub fn identity_coords(&self) -> Vec<Complex64> {
        let mut v = vec![ZERO; self.dim()];
        for &i in self.identity_support() {
            v[i] = ONE;
        }
        v
    }

    /// Associativity of the structure constants, checked on every basis triple.
    pub fn check_associative(&self) -> bool {
        let d = self.dim();
        let table = self.mult_table();
        let mut product: Vec<Option<usize>> = vec![None; d * d];
        for &(p, q, r, _) in &table {
            product[p * d + q] = Some(r);
        }
        for p in 0..d {
            for q in 0..d {
                for r in 0..d {
                    let left = product[p * d + q].and_then(|s| product[s * d + r]);
                    let right = product[q * d + r].and_then(|s| product[p * d + s]);
                    if left != right {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Two-sided unit law for `identity_coords` on every basis element.
    pub fn check_unit(&self) -> bool {
        let d = self.dim();
        (0..d).all(|q| {
            let left: Vec<usize> = self.identity_support().iter().filter_map(|&p| self.unit_product(p, q)).collect();
            let right: Vec<usize> = self.identity_support().iter().filter_map(|&p| self.unit_product(q, p)).collect();
            left == [q] && right == [q]
        })
    }

    /// `star ∘ star = id` and `(e_p e_q)* = e_q* e_p*`.
    pub fn check_involution(&self) -> bool {
        let d = self.dim();
        (0..d).all(|p| self.star_index(self.star_index(p)) == p)
            && (0..d).all(|p| {
                (0..d).all(|q| {
                    self.unit_product(p, q).map(|r| self.star_index(r))
                        == self.unit_product(self.star_index(q), self.star_index(p))
                })
            })
    }

    /// `M_t(A) ≅ ⊕ᵢ M_{t·dᵢ}(ℂ)` with the canonical embedding.
    pub fn amplified(&self, t: usize) -> Result<Amplification> {
        if t < 1 {
            return Err(Error::InvalidLevel);
        }
        let dims = self.block_dims().iter().map(|&d| d * t).collect();
        Ok(Amplification { base: self.clone(), t, algebra: Algebra::new(dims)? })
    }

    pub(crate) fn ensure_same(&self, other: &Algebra) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch { left: self.block_dims().to_vec(), right: other.block_dims().to_vec() })
        }
    }
}

/// The algebra `M_t(A)` together with its identification with block matrices.
#[derive(Clone, Debug)]
pub struct Amplification {
    pub base: Algebra,
    pub t: usize,
    pub algebra: Algebra,
}

impl Amplification {
    pub fn embed(&self, x: &MatrixOverAlgebra) -> Result<AlgebraElement> {
        self.base.ensure_same(x.algebra())?;
        if x.size() != self.t {
            return Err(Error::Shape(format!("expected a {}×{} matrix, got size {}", self.t, self.t, x.size())));
        }
        AlgebraElement::from_blocks(&self.algebra, x.block_matrices())
    }

    pub fn extract(&self, x: &AlgebraElement) -> Result<MatrixOverAlgebra> {
        self.algebra.ensure_same(x.algebra())?;
        MatrixOverAlgebra::from_block_matrices(&self.base, self.t, x.blocks().to_vec())
    }

    /// Basis index of `M_t(A)` → `(i, j, base index)` meaning `e_{ij} ⊗ e_b`.
    pub fn split_index(&self, idx: usize) -> (usize, usize, usize) {
        let u = self.algebra.unit(idx);
        let d = self.base.block_dims()[u.block];
        let (i, r) = (u.row / d, u.row % d);
        let (j, c) = (u.col / d, u.col % d);
        (i, j, self.base.index_of(u.block, r, c))
    }

    pub fn join_index(&self, i: usize, j: usize, base_idx: usize) -> usize {
        let u = self.base.unit(base_idx);
        let d = self.base.block_dims()[u.block];
        self.algebra.index_of(u.block, i * d + u.row, j * d + u.col)
    }
}

/// An element of an [`Algebra`], stored block by block.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    algebra: Algebra,
    blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn zero(algebra: &Algebra) -> Self {
        let blocks = algebra.block_dims().iter().map(|&d| linalg::zeros(d, d)).collect();
        Self { algebra: algebra.clone(), blocks }
    }

    pub fn identity(algebra: &Algebra) -> Self {
        let blocks = algebra.block_dims().iter().map(|&d| linalg::identity(d)).collect();
        Self { algebra: algebra.clone(), blocks }
    }

    /// The basis element `e_idx`.
    pub fn unit(algebra: &Algebra, idx: usize) -> Self {
        let mut x = Self::zero(algebra);
        let u = algebra.unit(idx);
        x.blocks[u.block][(u.row, u.col)] = ONE;
        x
    }

    pub fn from_blocks(algebra: &Algebra, blocks: Vec<CMat>) -> Result<Self> {
        let dims = algebra.block_dims();
        if blocks.len() != dims.len() || blocks.iter().zip(dims).any(|(b, &d)| b.shape() != (d, d)) {
            return Err(Error::Shape(format!(
                "block shapes {:?} do not match algebra {:?}",
                blocks.iter().map(|b| b.shape()).collect::<Vec<_>>(),
                dims
            )));
        }
        Ok(Self { algebra: algebra.clone(), blocks })
    }

    pub fn from_coords(algebra: &Algebra, coords: &[Complex64]) -> Result<Self> {
        if coords.len() != algebra.dim() {
            return Err(Error::Shape(format!("expected {} coordinates, got {}", algebra.dim(), coords.len())));
        }
        let mut x = Self::zero(algebra);
        for (idx, &z) in coords.iter().enumerate() {
            let u = algebra.unit(idx);
            x.blocks[u.block][(u.row, u.col)] = z;
        }
        Ok(x)
    }

    /// Element of `ℂ^d` from its point values.
    pub fn from_values(algebra: &Algebra, values: &[f64]) -> Result<Self> {
        let coords: Vec<Complex64> = values.iter().map(|&v| Complex64::from(v)).collect();
        Self::from_coords(algebra, &coords)
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn coords(&self) -> Vec<Complex64> {
        self.algebra.basis().iter().map(|u| self.blocks[u.block][(u.row, u.col)]).collect()
    }

    pub fn coord(&self, idx: usize) -> Complex64 {
        let u = self.algebra.unit(idx);
        self.blocks[u.block][(u.row, u.col)]
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.algebra.ensure_same(&other.algebra)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect();
        Ok(Self { algebra: self.algebra.clone(), blocks })
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.algebra.ensure_same(&other.algebra)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect();
        Ok(Self { algebra: self.algebra.clone(), blocks })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.algebra.ensure_same(&other.algebra)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect();
        Ok(Self { algebra: self.algebra.clone(), blocks })
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(|b| b * z).collect() }
    }

    /// Blockwise conjugate transpose.
    pub fn star(&self) -> Self {
        Self { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(|b| b.adjoint()).collect() }
    }

    /// C*-norm: the largest block operator norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.norm().max(1.0);
        self.blocks.iter().all(|b| linalg::hermitian_defect(b) <= tol * scale)
    }

    /// Hermitian within `tol·max(1,‖x‖)` and no block eigenvalue below
    /// `-tol·max(1,‖x‖)`.
    pub fn is_positive(&self, tol: f64) -> bool {
        let scale = self.norm().max(1.0);
        self.is_hermitian(tol) && self.blocks.iter().all(|b| linalg::min_eigenpair(b).0 >= -tol * scale)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(|b| linalg::min_eigenpair(b).0).fold(f64::INFINITY, f64::min)
    }

    pub fn random<R: Rng + ?Sized>(algebra: &Algebra, rng: &mut R) -> Self {
        let blocks = algebra.block_dims().iter().map(|&d| linalg::random_gaussian(rng, d, d)).collect();
        Self { algebra: algebra.clone(), blocks }
    }

    /// `y* y` for a Gaussian `y`.
    pub fn random_psd<R: Rng + ?Sized>(algebra: &Algebra, rng: &mut R) -> Self {
        let y = Self::random(algebra, rng);
        y.star().multiply(&y).expect("same algebra")
    }

    /// Nearest point of the unit ball in operator norm: each block's singular
    /// values are clipped at 1.
    pub fn project_unit_ball(&self) -> Self {
        Self {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| linalg::clip_singular_values(b, 1.0)).collect(),
        }
    }
}

/// A `t×t` matrix with entries in `A`, i.e. an element of `M_t(A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOverAlgebra {
    algebra: Algebra,
    size: usize,
    entries: Vec<AlgebraElement>,
}

impl MatrixOverAlgebra {
    pub fn new(algebra: &Algebra, size: usize, entries: Vec<AlgebraElement>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::Shape(format!("expected {} entries, got {}", size * size, entries.len())));
        }
        for e in &entries {
            algebra.ensure_same(e.algebra())?;
        }
        Ok(Self { algebra: algebra.clone(), size, entries })
    }

    pub fn from_fn<F>(algebra: &Algebra, size: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> AlgebraElement,
    {
        let mut entries = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let e = f(i, j);
                assert_eq!(e.algebra(), algebra, "entry from a different algebra");
                entries.push(e);
            }
        }
        Self { algebra: algebra.clone(), size, entries }
    }

    /// Matrix whose `(i, j)` entry has the given basis coordinates.
    pub fn from_coordinate_grid(algebra: &Algebra, grid: &[Vec<Vec<Complex64>>]) -> Result<Self> {
        let size = grid.len();
        let mut entries = Vec::with_capacity(size * size);
        for row in grid {
            if row.len() != size {
                return Err(Error::Shape("coordinate grid must be square".into()));
            }
            for coords in row {
                entries.push(AlgebraElement::from_coords(algebra, coords)?);
            }
        }
        Self::new(algebra, size, entries)
    }

    pub fn identity(algebra: &Algebra, size: usize) -> Self {
        Self::from_fn(algebra, size, |i, j| {
            if i == j {
                AlgebraElement::identity(algebra)
            } else {
                AlgebraElement::zero(algebra)
            }
        })
    }

    pub fn zero(algebra: &Algebra, size: usize) -> Self {
        Self::from_fn(algebra, size, |_, _| AlgebraElement::zero(algebra))
    }

    /// `e_{ij} ⊗ a`.
    pub fn single(algebra: &Algebra, size: usize, i: usize, j: usize, a: AlgebraElement) -> Self {
        let mut x = Self::zero(algebra, size);
        x.entries[i * size + j] = a;
        x
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> &AlgebraElement {
        &self.entries[i * self.size + j]
    }

    pub fn entries(&self) -> &[AlgebraElement] {
        &self.entries
    }

    /// Images in `⊕ᵢ M_{t·dᵢ}(ℂ)`: block `b` has `(i, j)` sub-block equal to
    /// block `b` of entry `(i, j)`.
    pub fn block_matrices(&self) -> Vec<CMat> {
        let t = self.size;
        self.algebra
            .block_dims()
            .iter()
            .enumerate()
            .map(|(b, &d)| {
                let mut m = linalg::zeros(t * d, t * d);
                for i in 0..t {
                    for j in 0..t {
                        m.view_mut((i * d, j * d), (d, d)).copy_from(&self.get(i, j).blocks()[b]);
                    }
                }
                m
            })
            .collect()
    }

    pub fn from_block_matrices(algebra: &Algebra, size: usize, blocks: Vec<CMat>) -> Result<Self> {
        let dims = algebra.block_dims();
        if blocks.len() != dims.len() || blocks.iter().zip(dims).any(|(m, &d)| m.shape() != (size * d, size * d)) {
            return Err(Error::Shape("block matrices do not match the amplified algebra".into()));
        }
        let mut entries = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let parts =
                    blocks.iter().zip(dims).map(|(m, &d)| m.view((i * d, j * d), (d, d)).into_owned()).collect();
                entries.push(AlgebraElement { algebra: algebra.clone(), blocks: parts });
            }
        }
        Ok(Self { algebra: algebra.clone(), size, entries })
    }

    /// For each basis index `b`, the `t×t` matrix of `b`-coordinates.
    pub fn coordinate_slices(&self) -> Vec<CMat> {
        let t = self.size;
        let mut out = vec![linalg::zeros(t, t); self.algebra.dim()];
        for i in 0..t {
            for j in 0..t {
                let e = self.get(i, j);
                for (idx, u) in self.algebra.basis().iter().enumerate() {
                    out[idx][(i, j)] = e.blocks()[u.block][(u.row, u.col)];
                }
            }
        }
        out
    }

    pub fn from_coordinate_slices(algebra: &Algebra, size: usize, slices: &[CMat]) -> Result<Self> {
        if slices.len() != algebra.dim() || slices.iter().any(|s| s.shape() != (size, size)) {
            return Err(Error::Shape("coordinate slices do not match".into()));
        }
        let mut x = Self::zero(algebra, size);
        for i in 0..size {
            for j in 0..size {
                let e = &mut x.entries[i * size + j];
                for (idx, u) in algebra.basis().iter().enumerate() {
                    e.blocks[u.block][(u.row, u.col)] = slices[idx][(i, j)];
                }
            }
        }
        Ok(x)
    }

    /// `[a_ij]* = [a_ji*]`.
    pub fn star(&self) -> Self {
        Self::from_fn(&self.algebra, self.size, |i, j| self.get(j, i).star())
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.algebra.ensure_same(&other.algebra)?;
        if self.size != other.size {
            return Err(Error::Shape(format!("sizes {} and {}", self.size, other.size)));
        }
        let products: Vec<CMat> =
            self.block_matrices().iter().zip(other.block_matrices()).map(|(a, b)| a * b).collect();
        Self::from_block_matrices(&self.algebra, self.size, products)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.algebra.ensure_same(&other.algebra)?;
        if self.size != other.size {
            return Err(Error::Shape(format!("sizes {} and {}", self.size, other.size)));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.checked_add(b)).collect::<Result<_>>()?;
        Ok(Self { algebra: self.algebra.clone(), size: self.size, entries })
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            algebra: self.algebra.clone(),
            size: self.size,
            entries: self.entries.iter().map(|e| e.scale(z)).collect(),
        }
    }

    /// Norm in `M_t(A)`, the operator norm of the block-diagonal image.
    pub fn norm(&self) -> f64 {
        self.block_matrices().iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        let scale = self.norm().max(1.0);
        self.block_matrices()
            .iter()
            .all(|m| linalg::hermitian_defect(m) <= tol * scale && linalg::min_eigenpair(m).0 >= -tol * scale)
    }

    pub fn project_unit_ball(&self) -> Self {
        let blocks = self.block_matrices().iter().map(|m| linalg::clip_singular_values(m, 1.0)).collect();
        Self::from_block_matrices(&self.algebra, self.size, blocks).expect("shapes preserved")
    }

    pub fn random<R: Rng + ?Sized>(algebra: &Algebra, size: usize, rng: &mut R) -> Self {
        Self::from_fn(algebra, size, |_, _| AlgebraElement::random(algebra, rng))
    }

    pub fn random_psd<R: Rng + ?Sized>(algebra: &Algebra, size: usize, rng: &mut R) -> Self {
        let y = Self::random(algebra, size, rng);
        y.star().multiply(&y).expect("same algebra")
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.block_matrices()
            .iter()
            .zip(other.block_matrices())
            .map(|(a, b)| linalg::max_abs(&(a - b)))
            .fold(0.0, f64::max)
    }
}
