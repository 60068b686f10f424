//! Stinespring-type dilations of invariant block CP maps.
//!
//! The dilation space is the quotient of `A^{⊗m} ⊗ H^n` by the null space of
//! the Gram kernel, realized through a truncated eigendecomposition
//! `G = W†W`. Left multiplication on the `p`-th tensor factor descends to the
//! quotient and gives `π_p`; the unit vectors of `H` in slot `j` give `V_j`.

use serde::Serialize;

use crate::algebra::{Algebra, AlgebraElement};
use crate::blockmap::{BlockMultilinearMap, BlockView};
use crate::error::{Error, Result};
use crate::gram::{build_gram, gram_is_psd};
use crate::linalg::{self, CMat, CVec, ZERO};
use crate::multimap::{unravel, MultilinearMap};

/// A linear map `A → M_κ(ℂ)` given by its values on the matrix units.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    algebra: Algebra,
    dim: usize,
    images: Vec<CMat>,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RepResiduals {
    pub multiplicative: f64,
    pub star: f64,
    pub unit: f64,
}

impl RepResiduals {
    pub fn max(&self) -> f64 {
        self.multiplicative.max(self.star).max(self.unit)
    }
}

impl Representation {
    pub fn new(algebra: &Algebra, images: Vec<CMat>) -> Result<Self> {
        if images.len() != algebra.dim() {
            return Err(Error::Shape(format!("expected {} basis images, got {}", algebra.dim(), images.len())));
        }
        let dim = images[0].nrows();
        if images.iter().any(|m| m.shape() != (dim, dim)) {
            return Err(Error::Shape("basis images must share one square shape".into()));
        }
        Ok(Self { algebra: algebra.clone(), dim, images })
    }

    /// The irreducible representation on block `block`.
    pub fn irreducible(algebra: &Algebra, block: usize) -> Result<Self> {
        let d = *algebra.block_dims().get(block).ok_or_else(|| Error::Shape(format!("no block {block}")))?;
        let images = algebra
            .basis()
            .iter()
            .map(|u| {
                let mut m = linalg::zeros(d, d);
                if u.block == block {
                    m[(u.row, u.col)] = linalg::ONE;
                }
                m
            })
            .collect();
        Self::new(algebra, images)
    }

    /// Evaluation at a point of a commutative algebra.
    pub fn evaluation(algebra: &Algebra, point: usize) -> Result<Self> {
        if !algebra.is_commutative() {
            return Err(Error::Unsupported("evaluation needs a commutative algebra".into()));
        }
        Self::irreducible(algebra, point)
    }

    /// The defining block-diagonal representation on `ℂ^{Σ dᵢ}`.
    pub fn identity(algebra: &Algebra) -> Self {
        let parts: Vec<_> =
            (0..algebra.block_dims().len()).map(|b| Self::irreducible(algebra, b).expect("block exists")).collect();
        Self::direct_sum(&parts).expect("same algebra")
    }

    /// Direct sum of the irreducibles with the given multiplicities.
    pub fn with_multiplicities(algebra: &Algebra, mult: &[usize]) -> Result<Self> {
        if mult.len() != algebra.block_dims().len() || mult.iter().all(|&x| x == 0) {
            return Err(Error::Shape("one multiplicity per block, not all zero".into()));
        }
        let mut parts = Vec::new();
        for (b, &k) in mult.iter().enumerate() {
            for _ in 0..k {
                parts.push(Self::irreducible(algebra, b)?);
            }
        }
        Self::direct_sum(&parts)
    }

    pub fn direct_sum(parts: &[Representation]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Shape("empty direct sum".into()))?;
        let alg = first.algebra.clone();
        let total: usize = parts.iter().map(|p| p.dim).sum();
        let mut images = vec![linalg::zeros(total, total); alg.dim()];
        let mut off = 0;
        for p in parts {
            alg.ensure_same(&p.algebra)?;
            for (dst, src) in images.iter_mut().zip(&p.images) {
                dst.view_mut((off, off), (p.dim, p.dim)).copy_from(src);
            }
            off += p.dim;
        }
        Self::new(&alg, images)
    }

    /// `I_left ⊗ π ⊗ I_right`.
    pub fn ampliate(&self, left: usize, right: usize) -> Self {
        let (l, r) = (linalg::identity(left), linalg::identity(right));
        let images = self.images.iter().map(|m| linalg::kron(&linalg::kron(&l, m), &r)).collect();
        Self { algebra: self.algebra.clone(), dim: left * self.dim * right, images }
    }

    /// `U π U†`.
    pub fn conjugate(&self, u: &CMat) -> Self {
        let ud = u.adjoint();
        let images = self.images.iter().map(|m| u * m * &ud).collect();
        Self { algebra: self.algebra.clone(), dim: u.nrows(), images }
    }

    /// `Q† π Q` for an isometry `Q`.
    pub fn compress(&self, q: &CMat) -> Self {
        let qd = q.adjoint();
        let images = self.images.iter().map(|m| &qd * m * q).collect();
        Self { algebra: self.algebra.clone(), dim: q.ncols(), images }
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn images(&self) -> &[CMat] {
        &self.images
    }

    pub fn image(&self, b: usize) -> &CMat {
        &self.images[b]
    }

    pub fn apply(&self, x: &AlgebraElement) -> CMat {
        let mut out = linalg::zeros(self.dim, self.dim);
        for (b, z) in x.coords().into_iter().enumerate() {
            if z != ZERO {
                out += &self.images[b] * z;
            }
        }
        out
    }

    pub fn residuals(&self) -> RepResiduals {
        let alg = &self.algebra;
        let d = alg.dim();
        let mut res = RepResiduals::default();
        for a in 0..d {
            for b in 0..d {
                let mut diff = &self.images[a] * &self.images[b];
                if let Some(r) = alg.unit_product(a, b) {
                    diff -= &self.images[r];
                }
                res.multiplicative = res.multiplicative.max(linalg::frobenius(&diff));
            }
            let star = &self.images[alg.star_index(a)] - self.images[a].adjoint();
            res.star = res.star.max(linalg::frobenius(&star));
        }
        let mut unit = -linalg::identity(self.dim);
        for &i in alg.identity_support() {
            unit += &self.images[i];
        }
        res.unit = linalg::frobenius(&unit);
        res
    }

    /// Errors unless this is a unital *-homomorphism within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let r = self.residuals();
        if r.max() > tol {
            return Err(Error::NotRepresentation(format!(
                "multiplicative {:.3e}, star {:.3e}, unit {:.3e}",
                r.multiplicative, r.star, r.unit
            )));
        }
        Ok(())
    }
}

/// Largest `‖[π_p(e_a), π_q(e_b)]‖` over `p < q` and basis pairs.
pub fn commutation_residual(reps: &[Representation]) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..reps.len() {
        for q in p + 1..reps.len() {
            for x in reps[p].images() {
                for y in reps[q].images() {
                    worst = worst.max(linalg::frobenius(&(x * y - y * x)));
                }
            }
        }
    }
    worst
}

/// Dilation data `(K, π_1..π_m, V_1..V_n)`.
#[derive(Clone, Debug)]
pub struct DilationTriple {
    k: usize,
    h: usize,
    kappa: usize,
    reps: Vec<Representation>,
    v: Vec<CMat>,
    /// `W` with `G = W†W` when produced by [`dilate`].
    pub quotient: Option<CMat>,
    /// Relative eigenvalue cut-off used for the quotient.
    pub rank_tol: Option<f64>,
}

impl DilationTriple {
    pub fn new(reps: Vec<Representation>, v: Vec<CMat>, k: usize) -> Result<Self> {
        let m = k.div_ceil(2);
        if k == 0 || reps.len() != m {
            return Err(Error::Shape(format!("arity {k} needs {m} representations, got {}", reps.len())));
        }
        let kappa = reps[0].dim();
        let alg = reps[0].algebra().clone();
        for r in &reps {
            alg.ensure_same(r.algebra())?;
            if r.dim() != kappa {
                return Err(Error::Shape("representations act on different spaces".into()));
            }
        }
        let h = v.first().map(|x| x.ncols()).ok_or_else(|| Error::Shape("at least one V".into()))?;
        if h == 0 || v.iter().any(|x| x.shape() != (kappa, h)) {
            return Err(Error::Shape(format!("each V must be {kappa}×{h}")));
        }
        Ok(Self { k, h, kappa, reps, v, quotient: None, rank_tol: None })
    }

    pub fn algebra(&self) -> &Algebra {
        self.reps[0].algebra()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.reps.len()
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn reps(&self) -> &[Representation] {
        &self.reps
    }

    pub fn v(&self) -> &[CMat] {
        &self.v
    }

    /// `[V_1 ⋯ V_n]`, a `κ×(n·h)` matrix.
    pub fn v_row(&self) -> CMat {
        let mut out = linalg::zeros(self.kappa, self.n() * self.h);
        for (j, vj) in self.v.iter().enumerate() {
            out.view_mut((0, j * self.h), (self.kappa, self.h)).copy_from(vj);
        }
        out
    }

    /// `max_j ‖V_j‖`, the norm of `diag(V_1, …, V_n)`.
    pub fn v_norm(&self) -> f64 {
        self.v.iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    /// `π_1(e_{α_1}) ⋯ π_m(e_{α_m})`.
    pub fn product(&self, alpha: &[usize]) -> CMat {
        let mut out = linalg::identity(self.kappa);
        for (p, &b) in alpha.iter().enumerate() {
            out *= self.reps[p].image(b);
        }
        out
    }

    /// Columns `π_1(e_{α_1})⋯π_m(e_{α_m}) V_j e_s` indexed like the Gram
    /// kernel.
    pub fn spanning_family(&self) -> CMat {
        let d = self.algebra().dim();
        let m = self.m();
        let width = self.n() * self.h;
        let count = d.pow(m as u32);
        let vrow = self.v_row();
        let mut out = linalg::zeros(self.kappa, count * width);
        let mut alpha = vec![0; m];
        for a in 0..count {
            unravel(a, d, &mut alpha);
            let block = self.product(&alpha) * &vrow;
            out.view_mut((0, a * width), (self.kappa, width)).copy_from(&block);
        }
        out
    }

    /// The block map `φ_ij = V_i† π_1(…) ⋯ π_m(…) V_j` defined by the triple.
    pub fn reconstruct(&self) -> BlockMultilinearMap {
        let alg = self.algebra().clone();
        let (k, h, n, m) = (self.k, self.h, self.n(), self.m());
        let d = alg.dim();
        let vrow = self.v_row();
        let vrow_adj = vrow.adjoint();
        let total = d.pow(k as u32);
        let mut idx = vec![0; k];
        let mut values: Vec<Vec<CMat>> = vec![Vec::with_capacity(total); n * n];
        for lin in 0..total {
            unravel(lin, d, &mut idx);
            let full = match factor_arguments(&alg, &idx, m) {
                Some(xs) => {
                    let mut y = vrow.clone();
                    for p in (0..m).rev() {
                        y = self.reps[p].image(xs[p]) * y;
                    }
                    &vrow_adj * y
                }
                None => linalg::zeros(n * h, n * h),
            };
            for i in 0..n {
                for j in 0..n {
                    values[i * n + j].push(full.view((i * h, j * h), (h, h)).into_owned());
                }
            }
        }
        let entries = values
            .into_iter()
            .map(|coeffs| MultilinearMap::new(&alg, k, h, coeffs).expect("consistent shapes"))
            .collect();
        BlockMultilinearMap::new(n, entries).expect("consistent entries")
    }

    pub fn rep_residuals(&self) -> RepResiduals {
        self.reps.iter().map(|r| r.residuals()).fold(RepResiduals::default(), |a, b| RepResiduals {
            multiplicative: a.multiplicative.max(b.multiplicative),
            star: a.star.max(b.star),
            unit: a.unit.max(b.unit),
        })
    }

    pub fn commutation_residual(&self) -> f64 {
        commutation_residual(&self.reps)
    }
}

/// Arguments of `π_1, …, π_m` on a basis tuple: `a_m, a_{m-1}a_{m+1}, …` for
/// odd `k`, `a_m a_{m+1}, …` for even `k`. `None` if a product vanishes.
pub(crate) fn factor_arguments(alg: &Algebra, idx: &[usize], m: usize) -> Option<Vec<usize>> {
    let k = idx.len();
    let mut xs = Vec::with_capacity(m);
    for p in 0..m {
        let x = if k % 2 == 1 {
            if p == 0 {
                idx[m - 1]
            } else {
                alg.unit_product(idx[m - 1 - p], idx[m - 1 + p])?
            }
        } else {
            alg.unit_product(idx[m - 1 - p], idx[m + p])?
        };
        xs.push(x);
    }
    Some(xs)
}

#[derive(Clone, Copy, Debug)]
pub struct DilateOptions {
    /// Eigenvalues at or below `rank_tol·λ_max` span the null space.
    pub rank_tol: f64,
    /// Descent tolerance relative to `‖G‖^{1/2}`.
    pub descent_tol: f64,
    /// Gram PSD tolerance; `None` uses the default.
    pub psd_tol: Option<f64>,
}

impl Default for DilateOptions {
    fn default() -> Self {
        Self { rank_tol: 1e-10, descent_tol: 1e-8, psd_tol: None }
    }
}

/// Builds the dilation triple from the Gram kernel. The result is minimal by
/// construction: its spanning family is `W`.
pub fn dilate<V: BlockView + ?Sized>(map: &V, opts: &DilateOptions) -> Result<DilationTriple> {
    let alg = map.algebra().clone();
    let (d, k, n, h, m) = (alg.dim(), map.arity(), map.block_size(), map.dim_h(), map.m());
    let g = build_gram(map)?;
    let psd = gram_is_psd(&g, opts.psd_tol)?;
    if !psd.psd {
        return Err(Error::NotCompletelyPositive { min_eigenvalue: psd.min_eigenvalue, tol: psd.tol });
    }
    let big = g.size();
    let (values, vectors) = linalg::hermitian_eigen(&g.matrix);
    let lmax = values.last().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..big).filter(|&i| lmax > 0.0 && values[i] > opts.rank_tol * lmax).collect();
    let null: Vec<usize> = (0..big).filter(|i| !kept.contains(i)).collect();
    let kappa = kept.len();
    let mut w = linalg::zeros(kappa, big);
    let mut w_pinv = linalg::zeros(big, kappa);
    for (r, &i) in kept.iter().enumerate() {
        let s = values[i].sqrt();
        for c in 0..big {
            w[(r, c)] = vectors[(c, i)].conj() * s;
            w_pinv[(c, r)] = vectors[(c, i)] / s;
        }
    }
    let z = vectors.select_columns(null.iter());
    let descent_bound = opts.descent_tol * g.norm().sqrt().max(1.0);

    let mut reps = Vec::with_capacity(m);
    let mut alpha = vec![0; m];
    for p in 0..m {
        let mut images = Vec::with_capacity(d);
        for b in 0..d {
            let mut wp = linalg::zeros(kappa, big);
            for col in 0..big {
                let (a, slot, comp) = g.decode(col);
                alpha.copy_from_slice(&a);
                if let Some(t) = alg.unit_product(b, alpha[p]) {
                    alpha[p] = t;
                    wp.set_column(col, &w.column(g.index(&alpha, slot, comp)));
                }
            }
            if z.ncols() > 0 && kappa > 0 {
                let residual = linalg::frobenius(&(&wp * &z));
                if residual > descent_bound {
                    return Err(Error::DescentFailure { factor: p + 1, basis: b, residual });
                }
            }
            images.push(&wp * &w_pinv);
        }
        reps.push(Representation::new(&alg, images)?);
    }

    let support = alg.identity_support();
    let mut v = vec![linalg::zeros(kappa, h); n];
    let mut choice = vec![0; m];
    let count = support.len().pow(m as u32);
    for (j, vj) in v.iter_mut().enumerate() {
        for c in 0..count {
            unravel(c, support.len(), &mut choice);
            let a: Vec<usize> = choice.iter().map(|&x| support[x]).collect();
            for s in 0..h {
                let col = w.column(g.index(&a, j, s)).into_owned();
                let mut dst = vj.column_mut(s);
                dst += col;
            }
        }
    }
    let mut triple = DilationTriple::new(reps, v, k)?;
    triple.quotient = Some(w);
    triple.rank_tol = Some(opts.rank_tol);
    Ok(triple)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DilationResiduals {
    /// Largest coefficient deviation of the reconstructed map.
    pub reconstruction: f64,
    pub multiplicative: f64,
    pub star: f64,
    pub unit: f64,
    pub commutation: f64,
}

impl DilationResiduals {
    pub fn structural(&self) -> f64 {
        self.multiplicative.max(self.star).max(self.unit).max(self.commutation)
    }
}

/// Checks the reconstruction identity on every basis tuple together with the
/// representation and commutation laws.
pub fn verify_dilation<V: BlockView + ?Sized>(map: &V, triple: &DilationTriple) -> Result<DilationResiduals> {
    map.algebra().ensure_same(triple.algebra())?;
    if (map.arity(), map.block_size(), map.dim_h()) != (triple.k(), triple.n(), triple.h()) {
        return Err(Error::Shape(format!(
            "map (k {}, n {}, h {}) vs triple (k {}, n {}, h {})",
            map.arity(),
            map.block_size(),
            map.dim_h(),
            triple.k(),
            triple.n(),
            triple.h()
        )));
    }
    let rebuilt = triple.reconstruct();
    let n = map.block_size();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for (a, b) in map.entry(i, j).coeffs().iter().zip(rebuilt.entry(i, j).coeffs()) {
                worst = worst.max(linalg::frobenius(&(a - b)));
            }
        }
    }
    let rep = triple.rep_residuals();
    Ok(DilationResiduals {
        reconstruction: worst,
        multiplicative: rep.multiplicative,
        star: rep.star,
        unit: rep.unit,
        commutation: triple.commutation_residual(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimalityReport {
    pub spanning_rank: usize,
    pub kappa: usize,
    pub is_minimal: bool,
    /// Dimension before compression.
    pub original_kappa: usize,
    /// Largest coefficient change of the reconstructed map.
    pub drift: f64,
}

/// Rank of the spanning family with the relative threshold `1e-10`.
pub fn spanning_rank(triple: &DilationTriple) -> usize {
    linalg::rank(&triple.spanning_family(), SPAN_TOL)
}

const SPAN_TOL: f64 = 1e-10;

/// Restricts the triple to the span of `π_1(A)⋯π_m(A)(Σ V_j H)`.
pub fn minimal_compress(triple: &DilationTriple) -> (DilationTriple, MinimalityReport) {
    let q = linalg::orthonormal_range(&triple.spanning_family(), SPAN_TOL);
    let reps: Vec<Representation> = triple.reps().iter().map(|r| r.compress(&q)).collect();
    let qd = q.adjoint();
    let v: Vec<CMat> = triple.v().iter().map(|x| &qd * x).collect();
    let compressed = if q.ncols() == 0 {
        empty_triple(triple)
    } else {
        DilationTriple::new(reps, v, triple.k()).expect("compression keeps shapes")
    };
    let before = triple.reconstruct();
    let after = compressed.reconstruct();
    let drift = before
        .entries()
        .iter()
        .zip(after.entries())
        .flat_map(|(a, b)| a.coeffs().iter().zip(b.coeffs()))
        .map(|(x, y)| linalg::frobenius(&(x - y)))
        .fold(0.0, f64::max);
    let rank = spanning_rank(&compressed);
    let report = MinimalityReport {
        spanning_rank: rank,
        kappa: compressed.kappa(),
        is_minimal: rank == compressed.kappa(),
        original_kappa: triple.kappa(),
        drift,
    };
    (compressed, report)
}

fn empty_triple(like: &DilationTriple) -> DilationTriple {
    let alg = like.algebra();
    let reps = (0..like.m())
        .map(|_| Representation::new(alg, vec![linalg::zeros(0, 0); alg.dim()]).expect("shapes"))
        .collect();
    let v = vec![linalg::zeros(0, like.h()); like.n()];
    DilationTriple::new(reps, v, like.k()).expect("shapes")
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    #[serde(skip)]
    pub u: CMat,
    pub kappa: usize,
    /// `‖U†U − I‖`.
    pub unitarity: f64,
    /// Largest `‖Π₂(α)U − UΠ₁(α)‖` over basis tuples `α`.
    pub intertwining: f64,
    /// Largest `‖UV⁽¹⁾_j − V⁽²⁾_j‖`.
    pub v_matching: f64,
    /// Reconstruction residuals of the two triples against the map.
    pub reconstruction: (f64, f64),
}

/// Builds `U` mapping the spanning family of `t1` onto that of `t2` by least
/// squares and measures how far it is from a unitary intertwiner.
pub fn unitary_equivalence<V: BlockView + ?Sized>(
    t1: &DilationTriple,
    t2: &DilationTriple,
    map: &V,
) -> Result<EquivalenceReport> {
    for t in [t1, t2] {
        let rank = spanning_rank(t);
        if rank != t.kappa() {
            return Err(Error::NotMinimal { rank, kappa: t.kappa() });
        }
    }
    if t1.kappa() != t2.kappa() {
        return Err(Error::DimensionMismatch(t1.kappa(), t2.kappa()));
    }
    let r1 = verify_dilation(map, t1)?.reconstruction;
    let r2 = verify_dilation(map, t2)?.reconstruction;
    let f1 = t1.spanning_family();
    let f2 = t2.spanning_family();
    let u = &f2 * linalg::pseudo_inverse(&f1, SPAN_TOL);
    let kappa = t1.kappa();
    let unitarity = linalg::frobenius(&(u.adjoint() * &u - linalg::identity(kappa)));
    let d = t1.algebra().dim();
    let m = t1.m();
    let mut alpha = vec![0; m];
    let mut intertwining = 0.0f64;
    for a in 0..d.pow(m as u32) {
        unravel(a, d, &mut alpha);
        let lhs = t2.product(&alpha) * &u;
        let rhs = &u * t1.product(&alpha);
        intertwining = intertwining.max(linalg::frobenius(&(lhs - rhs)));
    }
    let v_matching = t1.v().iter().zip(t2.v()).map(|(a, b)| linalg::frobenius(&(&u * a - b))).fold(0.0, f64::max);
    Ok(EquivalenceReport { u, kappa, unitarity, intertwining, v_matching, reconstruction: (r1, r2) })
}

/// Vector state form for scalar-valued maps: `φ_ij(…) = ⟨π_1(…)⋯π_m(…) f_j, f_i⟩`.
#[derive(Clone, Debug)]
pub struct BlockState {
    pub triple: DilationTriple,
    pub vectors: Vec<CVec>,
    pub residual: f64,
}

pub fn block_state<V: BlockView + ?Sized>(map: &V, opts: &DilateOptions) -> Result<BlockState> {
    if map.dim_h() != 1 {
        return Err(Error::Unsupported(format!("block states need h = 1, got h = {}", map.dim_h())));
    }
    let triple = dilate(map, opts)?;
    let vectors = triple.v().iter().map(|v| v.column(0).into_owned()).collect();
    let residual = verify_dilation(map, &triple)?.reconstruction;
    Ok(BlockState { triple, vectors, residual })
}
