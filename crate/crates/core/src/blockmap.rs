//! Block multilinear maps `[φ_ij]: M_n(A)^k → M_n(M_h(ℂ))`.

use num_complex::Complex64;

use crate::algebra::{Algebra, MatrixOverAlgebra};
use crate::error::{Error, Result};
use crate::invariance::{self, InvarianceOptions, InvarianceReport};
use crate::linalg::{self, CMat};
use crate::multimap::{evaluate_level, MultilinearMap, MAP_TOL};

/// Read access shared by plain maps (`n = 1`) and block maps.
pub trait BlockView {
    fn algebra(&self) -> &Algebra;
    fn arity(&self) -> usize;
    fn dim_h(&self) -> usize;
    fn block_size(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> &MultilinearMap;

    fn m(&self) -> usize {
        self.arity().div_ceil(2)
    }

    fn max_coeff_norm(&self) -> f64 {
        let n = self.block_size();
        (0..n * n).map(|p| self.entry(p / n, p % n).max_coeff_norm()).fold(0.0, f64::max)
    }

    /// `MAP_TOL·(1 + max coefficient norm)`.
    fn default_tol(&self) -> f64 {
        MAP_TOL * (1.0 + self.max_coeff_norm())
    }

    /// Value at level `t`, read off from the argument size `t·n`.
    fn evaluate_level(&self, args: &[MatrixOverAlgebra]) -> Result<CMat> {
        evaluate_level(self, args)
    }

    /// `Φ(1, …, 1) = diag(φ_ii(1, …, 1))`.
    fn unit_value(&self) -> CMat {
        let (n, h) = (self.block_size(), self.dim_h());
        let mut out = linalg::zeros(n * h, n * h);
        for i in 0..n {
            out.view_mut((i * h, i * h), (h, h)).copy_from(&self.entry(i, i).unit_value());
        }
        out
    }
}

impl BlockView for MultilinearMap {
    fn algebra(&self) -> &Algebra {
        MultilinearMap::algebra(self)
    }
    fn arity(&self) -> usize {
        self.k()
    }
    fn dim_h(&self) -> usize {
        self.h()
    }
    fn block_size(&self) -> usize {
        1
    }
    fn entry(&self, _i: usize, _j: usize) -> &MultilinearMap {
        self
    }
}

/// An `n×n` grid of multilinear maps over a common `(A, k, h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMultilinearMap {
    n: usize,
    entries: Vec<MultilinearMap>,
}

impl BlockView for BlockMultilinearMap {
    fn algebra(&self) -> &Algebra {
        self.entries[0].algebra()
    }
    fn arity(&self) -> usize {
        self.entries[0].k()
    }
    fn dim_h(&self) -> usize {
        self.entries[0].h()
    }
    fn block_size(&self) -> usize {
        self.n
    }
    fn entry(&self, i: usize, j: usize) -> &MultilinearMap {
        &self.entries[i * self.n + j]
    }
}

impl BlockMultilinearMap {
    /// `entries` in row-major order.
    pub fn new(n: usize, entries: Vec<MultilinearMap>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::Shape(format!("expected {} entries for n = {n}", n * n)));
        }
        let first = &entries[0];
        for e in &entries[1..] {
            first.algebra().ensure_same(e.algebra())?;
            if (e.k(), e.h()) != (first.k(), first.h()) {
                return Err(Error::Shape("block entries differ in arity or codomain".into()));
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_single(map: MultilinearMap) -> Self {
        Self { n: 1, entries: vec![map] }
    }

    /// Every entry equal to `map`.
    pub fn uniform(n: usize, map: &MultilinearMap) -> Self {
        Self { n, entries: vec![map.clone(); n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.arity()
    }

    pub fn h(&self) -> usize {
        self.dim_h()
    }

    pub fn entries(&self) -> &[MultilinearMap] {
        &self.entries
    }

    /// The defining row-chain-column action on `n×n` arguments.
    pub fn evaluate(&self, args: &[MatrixOverAlgebra]) -> Result<CMat> {
        if let Some(a) = args.iter().find(|a| a.size() != self.n) {
            return Err(Error::Shape(format!("expected {}×{} arguments, got size {}", self.n, self.n, a.size())));
        }
        evaluate_level(self, args)
    }

    /// `Φ` viewed as one multilinear map over the algebra `M_n(A)`.
    pub fn as_multilinear(&self) -> Result<MultilinearMap> {
        let amp = self.algebra().amplified(self.n)?;
        let (n, h) = (self.n, self.h());
        let k = self.k();
        let mut base = vec![0usize; k];
        if amp.algebra.dim().checked_pow(k as u32).is_none_or(|t| t > 50_000_000) {
            return Err(Error::TooLarge("block tensor".into()));
        }
        Ok(MultilinearMap::from_fn(&amp.algebra, k, n * h, |idx| {
            let mut out = linalg::zeros(n * h, n * h);
            let mut row = None;
            let mut col = 0;
            for (l, &x) in idx.iter().enumerate() {
                let (i, j, b) = amp.split_index(x);
                match row {
                    None => row = Some(i),
                    Some(_) if i != col => return out,
                    _ => {}
                }
                col = j;
                base[l] = b;
            }
            let r = row.expect("k >= 1");
            out.view_mut((r * h, col * h), (h, h)).copy_from(self.entry(r, col).coeff(&base));
            out
        }))
    }

    /// `Φ_t` on `M_t(M_n(A))^k` as a multilinear map.
    pub fn amplify(&self, t: usize) -> Result<MultilinearMap> {
        if t < 1 {
            return Err(Error::InvalidLevel);
        }
        self.as_multilinear()?.amplify(t)
    }

    /// `Φ*(A_1,…,A_k) = Φ(A_k*,…,A_1*)*`, whose `(i, j)` entry is `φ_ji*`.
    pub fn adjoint(&self) -> BlockMultilinearMap {
        let n = self.n;
        let entries = (0..n * n).map(|p| self.entry(p % n, p / n).adjoint()).collect();
        Self { n, entries }
    }

    pub fn symmetry_defect(&self) -> f64 {
        let adj = self.adjoint();
        self.entries
            .iter()
            .zip(adj.entries())
            .flat_map(|(a, b)| a.coeffs().iter().zip(b.coeffs()))
            .map(|(x, y)| linalg::max_abs(&(x - y)))
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_defect() <= tol
    }

    pub fn is_invariant(&self, tol: f64) -> bool {
        self.invariance_report(&InvarianceOptions { tol: Some(tol), ..Default::default() }).invariant
    }

    pub fn invariance_report(&self, opts: &InvarianceOptions) -> InvarianceReport {
        invariance::check(self, opts)
    }

    /// Invariance of each entry on its own, row-major.
    pub fn entries_invariant(&self, tol: f64) -> Vec<bool> {
        self.entries.iter().map(|e| e.is_invariant(tol)).collect()
    }

    pub fn scale(&self, z: Complex64) -> BlockMultilinearMap {
        Self { n: self.n, entries: self.entries.iter().map(|e| e.scale(z)).collect() }
    }

    pub fn with_entry(&self, i: usize, j: usize, map: MultilinearMap) -> Result<BlockMultilinearMap> {
        let mut entries = self.entries.clone();
        entries[i * self.n + j] = map;
        Self::new(self.n, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraElement;
    use crate::linalg::c;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_map(alg: &Algebra, k: usize, h: usize, seed: u64) -> MultilinearMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MultilinearMap::from_fn(alg, k, h, |_| linalg::random_gaussian(&mut rng, h, h))
    }

    fn scalar(alg: &Algebra) -> impl Fn(f64) -> AlgebraElement + '_ {
        move |x| AlgebraElement::identity(alg).scale(c(x, 0.0))
    }

    #[test]
    fn n1_matches_plain_evaluate() {
        let alg = Algebra::new(vec![2, 1]).unwrap();
        let phi = random_map(&alg, 3, 2, 3);
        let block = BlockMultilinearMap::from_single(phi.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<AlgebraElement> = (0..3).map(|_| AlgebraElement::random(&alg, &mut rng)).collect();
        let ms: Vec<MatrixOverAlgebra> =
            xs.iter().map(|x| MatrixOverAlgebra::from_fn(&alg, 1, |_, _| x.clone())).collect();
        assert_eq!(block.evaluate(&ms).unwrap(), phi.evaluate(&xs).unwrap());
    }

    #[test]
    fn schur_action() {
        let alg = Algebra::commutative(1).unwrap();
        let lam = [[1.0, 0.5], [0.5, 1.0]];
        let entries = (0..4)
            .map(|p| MultilinearMap::from_fn(&alg, 1, 1, |_| CMat::from_element(1, 1, c(lam[p / 2][p % 2], 0.0))))
            .collect();
        let phi = BlockMultilinearMap::new(2, entries).unwrap();
        let a = [[2.0, -1.0], [3.0, 5.0]];
        let x = MatrixOverAlgebra::from_fn(&alg, 2, |i, j| scalar(&alg)(a[i][j]));
        let v = phi.evaluate(&[x]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(v[(i, j)], c(lam[i][j] * a[i][j], 0.0));
            }
        }
        let z = MatrixOverAlgebra::zero(&alg, 2);
        assert!(linalg::is_zero(&phi.evaluate(&[z]).unwrap()));
    }

    #[test]
    fn brute_force_summation_oracle() {
        let alg = Algebra::matrix(2).unwrap();
        let entries: Vec<MultilinearMap> = (0..4).map(|s| random_map(&alg, 2, 2, 20 + s)).collect();
        let phi = BlockMultilinearMap::new(2, entries.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = MatrixOverAlgebra::random(&alg, 2, &mut rng);
        let y = MatrixOverAlgebra::random(&alg, 2, &mut rng);
        let v = phi.evaluate(&[x.clone(), y.clone()]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut expect = linalg::zeros(2, 2);
                for r in 0..2 {
                    expect += entries[i * 2 + j].evaluate(&[x.get(i, r).clone(), y.get(r, j).clone()]).unwrap();
                }
                let got = v.view((i * 2, j * 2), (2, 2)).into_owned();
                assert!(linalg::max_abs(&(got - expect)) < 1e-12);
            }
        }
    }

    #[test]
    fn as_multilinear_matches_evaluate() {
        let alg = Algebra::commutative(2).unwrap();
        let entries = (0..4).map(|s| random_map(&alg, 3, 1, 40 + s)).collect();
        let phi = BlockMultilinearMap::new(2, entries).unwrap();
        let whole = phi.as_multilinear().unwrap();
        let amp = alg.amplified(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<MatrixOverAlgebra> = (0..3).map(|_| MatrixOverAlgebra::random(&alg, 2, &mut rng)).collect();
        let emb: Vec<AlgebraElement> = xs.iter().map(|x| amp.embed(x).unwrap()).collect();
        let a = phi.evaluate(&xs).unwrap();
        let b = whole.evaluate(&emb).unwrap();
        assert!(linalg::max_abs(&(a - b)) < 1e-12);
        assert_eq!(phi.amplify(1).unwrap(), whole);
    }

    #[test]
    fn schur_amplified_is_pattern_product() {
        // level 2: entry ((i',p),(j',q)) = λ_pq · a
        let alg = Algebra::commutative(1).unwrap();
        let lam = [[1.0, 0.25], [0.25, 2.0]];
        let entries = (0..4)
            .map(|p| MultilinearMap::from_fn(&alg, 1, 1, |_| CMat::from_element(1, 1, c(lam[p / 2][p % 2], 0.0))))
            .collect();
        let phi = BlockMultilinearMap::new(2, entries).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = MatrixOverAlgebra::random(&alg, 4, &mut rng);
        let v = phi.evaluate_level(std::slice::from_ref(&x)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = x.get(i, j).coord(0) * lam[i % 2][j % 2];
                assert!((v[(i, j)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn adjoint_involutive_and_hermitian_schur_symmetric() {
        let alg = Algebra::new(vec![1, 2]).unwrap();
        let entries = (0..4).map(|s| random_map(&alg, 2, 1, 60 + s)).collect();
        let phi = BlockMultilinearMap::new(2, entries).unwrap();
        assert_eq!(phi.adjoint().adjoint(), phi);
        let one = Algebra::commutative(1).unwrap();
        let lam = [[c(1.0, 0.0), c(0.2, 0.3)], [c(0.2, -0.3), c(2.0, 0.0)]];
        let schur = BlockMultilinearMap::new(
            2,
            (0..4)
                .map(|p| MultilinearMap::from_fn(&one, 1, 1, |_| CMat::from_element(1, 1, lam[p / 2][p % 2])))
                .collect(),
        )
        .unwrap();
        assert!(schur.is_symmetric(1e-15));
    }

    #[test]
    fn unit_value_is_diagonal() {
        let alg = Algebra::commutative(2).unwrap();
        let entries = (0..4).map(|s| random_map(&alg, 2, 1, 80 + s)).collect();
        let phi = BlockMultilinearMap::new(2, entries).unwrap();
        let id = MatrixOverAlgebra::identity(&alg, 2);
        let v = phi.evaluate(&[id.clone(), id]).unwrap();
        assert!(linalg::max_abs(&(v - phi.unit_value())) < 1e-14);
        assert_eq!(phi.unit_value()[(0, 1)], linalg::ZERO);
    }

    #[test]
    fn rejects_mixed_entries() {
        let alg = Algebra::commutative(2).unwrap();
        let a = random_map(&alg, 2, 1, 1);
        let b = random_map(&alg, 3, 1, 2);
        assert!(BlockMultilinearMap::new(2, vec![a.clone(), a.clone(), a, b]).is_err());
    }
}
