//! Positivity evidence: the admissible-tuple falsifier and the Gram kernel of
//! the semi-inner product on `A^{⊗m} ⊗ H^n`.
//!
//! Convention: rows are indexed by `(β, i, u)` and columns by `(α, j, s)`, so
//! that `x† G x ≥ 0` expresses positivity of the form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{Algebra, MatrixOverAlgebra, PSD_TOL};
use crate::blockmap::BlockView;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::multimap::unravel;

/// Relative eigenvalue tolerance of the falsifier.
pub const FALSIFY_TOL: f64 = 1e-8;
/// Hermiticity tolerance for the Gram kernel, relative to `max(1, ‖G‖)`.
pub const GRAM_HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalue tolerance for the Gram kernel, relative to `max(1, ‖G‖)`.
pub const GRAM_PSD_TOL: f64 = PSD_TOL;

const MAX_GRAM: usize = 6000;

/// How a value failed to be positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleKind {
    NegativeEigenvalue,
    NonHermitian,
}

/// An admissible tuple whose value is not positive semidefinite.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub kind: CounterexampleKind,
    pub level: usize,
    pub trial: usize,
    pub tuple: Vec<MatrixOverAlgebra>,
    pub value: CMat,
    pub min_eigenvalue: f64,
    pub hermitian_defect: f64,
}

#[derive(Clone, Debug)]
pub struct FalsifyOptions {
    pub levels: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Relative to `1 + ‖value‖`.
    pub tol: f64,
}

impl Default for FalsifyOptions {
    fn default() -> Self {
        Self { levels: vec![1, 2], trials: 500, seed: 0, tol: FALSIFY_TOL }
    }
}

/// Palindromic tuple `(b_1,…,b_{m-1}, p, b_{m-1}*,…,b_1*)` for odd `k` with
/// `p = y*y`, or `(b_1,…,b_m, b_m*,…,b_1*)` for even `k`, of `size×size`
/// matrices over `A`.
pub fn sample_admissible_tuple<R: Rng + ?Sized>(
    algebra: &Algebra,
    k: usize,
    size: usize,
    rng: &mut R,
) -> Vec<MatrixOverAlgebra> {
    let half = k / 2;
    let bs: Vec<MatrixOverAlgebra> = (0..half).map(|_| MatrixOverAlgebra::random(algebra, size, rng)).collect();
    let mut out = bs.clone();
    if k % 2 == 1 {
        out.push(MatrixOverAlgebra::random_psd(algebra, size, rng));
    }
    out.extend(bs.iter().rev().map(|b| b.star()));
    out
}

/// `(a_1,…,a_k) = (a_k*,…,a_1*)` within `tol`, with the middle element
/// positive when `k` is odd.
pub fn is_admissible(tuple: &[MatrixOverAlgebra], tol: f64) -> bool {
    let k = tuple.len();
    let palindromic = (0..k).all(|l| tuple[l].max_deviation(&tuple[k - 1 - l].star()) <= tol);
    palindromic && (k.is_multiple_of(2) || tuple[k / 2].is_positive(PSD_TOL))
}

/// Samples admissible tuples at each level and returns the first whose value
/// is not positive. A returned tuple proves the map is not completely
/// positive (not positive when found at level 1).
pub fn positivity_falsify<V: BlockView + ?Sized>(map: &V, opts: &FalsifyOptions) -> Option<Counterexample> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for &t in &opts.levels {
        if t == 0 {
            continue;
        }
        let size = t * map.block_size();
        for trial in 0..opts.trials {
            let tuple = sample_admissible_tuple(map.algebra(), map.arity(), size, &mut rng);
            let value = map.evaluate_level(&tuple).expect("sampled tuples are well formed");
            let scale = 1.0 + linalg::op_norm(&value);
            let defect = linalg::hermitian_defect(&value);
            let min = linalg::min_eigenpair(&value).0;
            let kind = if defect > opts.tol * scale {
                Some(CounterexampleKind::NonHermitian)
            } else if min < -opts.tol * scale {
                Some(CounterexampleKind::NegativeEigenvalue)
            } else {
                None
            };
            if let Some(kind) = kind {
                return Some(Counterexample {
                    kind,
                    level: t,
                    trial,
                    tuple,
                    value,
                    min_eigenvalue: min,
                    hermitian_defect: defect,
                });
            }
        }
    }
    None
}

/// Matrix of the semi-inner product with its index legend.
#[derive(Clone, Debug)]
pub struct GramKernel {
    pub matrix: CMat,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub h: usize,
}

impl GramKernel {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Row of `(α, slot, component)`, `α` being `m` basis indices.
    pub fn index(&self, alpha: &[usize], slot: usize, comp: usize) -> usize {
        let a = alpha.iter().fold(0, |acc, &p| acc * self.d + p);
        (a * self.n + slot) * self.h + comp
    }

    pub fn decode(&self, row: usize) -> (Vec<usize>, usize, usize) {
        let comp = row % self.h;
        let slot = (row / self.h) % self.n;
        let mut alpha = vec![0; self.m];
        unravel(row / (self.h * self.n), self.d, &mut alpha);
        (alpha, slot, comp)
    }

    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.matrix)
    }
}

/// Basis arguments of the kernel entry at `(β, α)`; `None` when a product of
/// matrix units vanishes.
pub(crate) fn kernel_arguments(alg: &Algebra, k: usize, beta: &[usize], alpha: &[usize]) -> Option<Vec<usize>> {
    let m = beta.len();
    let mut args = Vec::with_capacity(k);
    for p in (1..m).rev() {
        args.push(alg.star_index(beta[p]));
    }
    if k % 2 == 1 {
        args.push(alg.unit_product(alg.star_index(beta[0]), alpha[0])?);
    } else {
        args.push(alg.star_index(beta[0]));
        args.push(alpha[0]);
    }
    args.extend_from_slice(&alpha[1..]);
    Some(args)
}

pub fn build_gram<V: BlockView + ?Sized>(map: &V) -> Result<GramKernel> {
    let alg = map.algebra();
    let (d, k, n, h) = (alg.dim(), map.arity(), map.block_size(), map.dim_h());
    let m = map.m();
    let big = d
        .checked_pow(m as u32)
        .and_then(|x| x.checked_mul(n * h))
        .filter(|&x| x <= MAX_GRAM)
        .ok_or_else(|| Error::TooLarge(format!("Gram kernel for dim {d}, m {m}, n {n}, h {h}")))?;
    let mut g = GramKernel { matrix: linalg::zeros(big, big), d, m, n, h };
    let dm = d.pow(m as u32);
    let mut beta = vec![0; m];
    let mut alpha = vec![0; m];
    for bl in 0..dm {
        unravel(bl, d, &mut beta);
        for al in 0..dm {
            unravel(al, d, &mut alpha);
            let Some(args) = kernel_arguments(alg, k, &beta, &alpha) else { continue };
            for i in 0..n {
                for j in 0..n {
                    let c = map.entry(i, j).coeff(&args);
                    let (r0, c0) = (g.index(&beta, i, 0), g.index(&alpha, j, 0));
                    g.matrix.view_mut((r0, c0), (h, h)).copy_from(c);
                }
            }
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, Serialize)]
pub struct PsdReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
    pub hermitian_defect: f64,
    pub tol: f64,
}

/// Eigenvalue test with `tol·max(1, ‖G‖)`; `tol = None` uses
/// [`GRAM_PSD_TOL`]. A Gram matrix that is not Hermitian signals an
/// asymmetric source map and is an error.
pub fn gram_is_psd(g: &GramKernel, tol: Option<f64>) -> Result<PsdReport> {
    let scale = g.norm().max(1.0);
    let defect = linalg::hermitian_defect(&g.matrix);
    if defect > GRAM_HERMITIAN_TOL * scale {
        return Err(Error::NonHermitianGram { defect, tol: GRAM_HERMITIAN_TOL * scale });
    }
    let tol = tol.unwrap_or(GRAM_PSD_TOL) * scale;
    let min = linalg::min_eigenpair(&g.matrix).0;
    Ok(PsdReport { psd: min >= -tol, min_eigenvalue: min, hermitian_defect: defect, tol })
}

/// Certificate that an invariant map is not completely positive.
#[derive(Clone, Debug)]
pub struct Refutation {
    pub kind: CounterexampleKind,
    pub min_eigenvalue: f64,
    pub hermitian_defect: f64,
    /// Unit vector `x` with `x† G x < 0`, empty for the non-Hermitian kind.
    pub witness: CVec,
}

/// Refutes complete positivity of an invariant map from its Gram kernel.
/// Returns `None` when the kernel is positive semidefinite, which by itself
/// is inconclusive.
pub fn cp_refute<V: BlockView + ?Sized>(map: &V) -> Result<Option<Refutation>> {
    let g = build_gram(map)?;
    match gram_is_psd(&g, None) {
        Ok(report) if report.psd => Ok(None),
        Ok(report) => {
            let (min, vec) = linalg::min_eigenpair(&g.matrix);
            Ok(Some(Refutation {
                kind: CounterexampleKind::NegativeEigenvalue,
                min_eigenvalue: min,
                hermitian_defect: report.hermitian_defect,
                witness: vec,
            }))
        }
        Err(Error::NonHermitianGram { defect, .. }) => Ok(Some(Refutation {
            kind: CounterexampleKind::NonHermitian,
            min_eigenvalue: linalg::min_eigenpair(&g.matrix).0,
            hermitian_defect: defect,
            witness: CVec::zeros(0),
        })),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ONE, ZERO};
    use crate::multimap::MultilinearMap;

    fn ex1(sign: f64) -> MultilinearMap {
        let alg = Algebra::commutative(2).unwrap();
        MultilinearMap::from_fn(&alg, 3, 1, |idx| {
            CMat::from_element(1, 1, if idx == [0, 0, 0] { c(sign, 0.0) } else { ZERO })
        })
    }

    #[test]
    fn ex1_gram_brute_force() {
        let phi = ex1(1.0);
        let g = build_gram(&phi).unwrap();
        assert_eq!(g.size(), 4);
        // oracle: entry (q, p) = φ(e_{q2}*, e_{q1}* e_{p1}, e_{p2}) = [all indices 0]
        for r in 0..4 {
            for col in 0..4 {
                let (q, _, _) = g.decode(r);
                let (p, _, _) = g.decode(col);
                let x = [q[1], q[0], p[0], p[1]];
                let expect = if x.iter().all(|&i| i == 0) { ONE } else { ZERO };
                assert_eq!(g.matrix[(r, col)], expect);
            }
        }
        let rep = gram_is_psd(&g, None).unwrap();
        assert!(rep.psd && rep.min_eigenvalue.abs() < 1e-14);
    }

    #[test]
    fn index_round_trip() {
        let g = GramKernel { matrix: linalg::zeros(0, 0), d: 3, m: 2, n: 2, h: 2 };
        for row in 0..36 {
            let (a, s, u) = g.decode(row);
            assert_eq!(g.index(&a, s, u), row);
        }
    }

    #[test]
    fn k1_is_choi_type() {
        let alg = Algebra::matrix(2).unwrap();
        let phi = MultilinearMap::from_fn(&alg, 1, 1, |idx| CMat::from_element(1, 1, c(idx[0] as f64 + 1.0, 0.5)));
        let g = build_gram(&phi).unwrap();
        for q in 0..4 {
            for p in 0..4 {
                let expect = alg.unit_product(alg.star_index(q), p).map(|r| phi.coeff(&[r])[(0, 0)]).unwrap_or(ZERO);
                assert_eq!(g.matrix[(q, p)], expect);
            }
        }
    }

    #[test]
    fn zero_map_and_negative_unit() {
        let alg = Algebra::commutative(2).unwrap();
        let zero = MultilinearMap::zero(&alg, 2, 2);
        assert!(linalg::is_zero(&build_gram(&zero).unwrap().matrix));
        assert!(cp_refute(&zero).unwrap().is_none());
        let neg = ex1(-1.0);
        let refutation = cp_refute(&neg).unwrap().unwrap();
        assert_eq!(refutation.kind, CounterexampleKind::NegativeEigenvalue);
        assert!(refutation.min_eigenvalue < -0.5);
    }

    #[test]
    fn admissible_tuples_have_the_right_shape() {
        let alg = Algebra::new(vec![2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t3 = sample_admissible_tuple(&alg, 3, 2, &mut rng);
        assert_eq!(t3.len(), 3);
        assert_eq!(t3[2], t3[0].star());
        assert!(t3[1].is_positive(PSD_TOL));
        assert!(is_admissible(&t3, 0.0));
        let t4 = sample_admissible_tuple(&alg, 4, 1, &mut rng);
        assert_eq!(t4[3], t4[0].star());
        assert_eq!(t4[2], t4[1].star());
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(sample_admissible_tuple(&alg, 3, 2, &mut a), sample_admissible_tuple(&alg, 3, 2, &mut b));
    }

    #[test]
    fn falsifier_finds_sign_flip() {
        let cx = positivity_falsify(&ex1(-1.0), &FalsifyOptions { levels: vec![1], ..Default::default() }).unwrap();
        assert_eq!(cx.level, 1);
        assert!(cx.min_eigenvalue < 0.0);
        assert!(is_admissible(&cx.tuple, 1e-12));
        // value = -p_1 |b_1|^2
        let b = cx.tuple[0].get(0, 0).coord(0);
        let p = cx.tuple[1].get(0, 0).coord(0);
        assert!((cx.value[(0, 0)] + p * b.norm_sqr()).norm() < 1e-12);
    }

    #[test]
    fn falsifier_silent_on_ex1() {
        assert!(positivity_falsify(
            &ex1(1.0),
            &FalsifyOptions { levels: vec![1, 2, 3], trials: 300, ..Default::default() }
        )
        .is_none());
    }
}
