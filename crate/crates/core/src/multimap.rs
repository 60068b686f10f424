//! `k`-linear maps `φ: A^k → M_h(ℂ)` stored as dense coefficient tensors.

use num_complex::Complex64;

use crate::algebra::{Algebra, AlgebraElement, MatrixOverAlgebra};
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::invariance::{self, InvarianceOptions, InvarianceReport};
use crate::linalg::{self, CMat};

/// Relative tolerance used by the map identity checks.
pub const MAP_TOL: f64 = 1e-9;

/// A multilinear map with `coeffs[i_1,…,i_k] = φ(e_{i_1},…,e_{i_k})`, the
/// first index being the most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearMap {
    algebra: Algebra,
    k: usize,
    h: usize,
    coeffs: Vec<CMat>,
}

impl MultilinearMap {
    pub fn new(algebra: &Algebra, k: usize, h: usize, coeffs: Vec<CMat>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Shape("arity must be at least 1".into()));
        }
        if h == 0 {
            return Err(Error::Shape("codomain dimension must be at least 1".into()));
        }
        let expected = checked_len(algebra.dim(), k)?;
        if coeffs.len() != expected {
            return Err(Error::Shape(format!("expected {expected} coefficients, got {}", coeffs.len())));
        }
        if let Some(bad) = coeffs.iter().find(|c| c.shape() != (h, h)) {
            return Err(Error::Shape(format!("coefficient of shape {:?}, expected {h}×{h}", bad.shape())));
        }
        Ok(Self { algebra: algebra.clone(), k, h, coeffs })
    }

    /// Builds the tensor from a function of basis index tuples.
    pub fn from_fn<F>(algebra: &Algebra, k: usize, h: usize, mut f: F) -> Self
    where
        F: FnMut(&[usize]) -> CMat,
    {
        let d = algebra.dim();
        let total = d.pow(k as u32);
        let mut idx = vec![0usize; k];
        let mut coeffs = Vec::with_capacity(total);
        for lin in 0..total {
            unravel(lin, d, &mut idx);
            coeffs.push(f(&idx));
        }
        Self::new(algebra, k, h, coeffs).expect("from_fn shapes")
    }

    pub fn zero(algebra: &Algebra, k: usize, h: usize) -> Self {
        Self::from_fn(algebra, k, h, |_| linalg::zeros(h, h))
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn h(&self) -> usize {
        self.h
    }

    /// `m = ⌊(k+1)/2⌋`.
    pub fn m(&self) -> usize {
        self.k.div_ceil(2)
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff_index(&self, idx: &[usize]) -> usize {
        let d = self.algebra.dim();
        idx.iter().fold(0, |acc, &i| acc * d + i)
    }

    pub fn coeff(&self, idx: &[usize]) -> &CMat {
        &self.coeffs[self.coeff_index(idx)]
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(linalg::frobenius).fold(0.0, f64::max)
    }

    /// `MAP_TOL·(1 + max coefficient norm)`.
    pub fn default_tol(&self) -> f64 {
        MAP_TOL * (1.0 + self.max_coeff_norm())
    }

    pub fn evaluate(&self, args: &[AlgebraElement]) -> Result<CMat> {
        if args.len() != self.k {
            return Err(Error::Arity { expected: self.k, got: args.len() });
        }
        let mut slots = Vec::with_capacity(self.k);
        for a in args {
            self.algebra.ensure_same(a.algebra())?;
            slots.push(a.coords().into_iter().map(|z| CMat::from_element(1, 1, z)).collect());
        }
        Chain::new(self).value(&slots)
    }

    /// `φ_t` evaluated directly on `t×t` matrices over `A`; the result is the
    /// `(t·h)×(t·h)` matrix whose `(i, j)` block is the chain sum.
    pub fn evaluate_amplified(&self, args: &[MatrixOverAlgebra]) -> Result<CMat> {
        evaluate_level(self, args)
    }

    /// `φ(1, …, 1)`.
    pub fn unit_value(&self) -> CMat {
        let one = AlgebraElement::identity(&self.algebra);
        self.evaluate(&vec![one; self.k]).expect("unit arguments are well formed")
    }

    /// `φ_t` as a multilinear map over `M_t(A)` with codomain `M_{t·h}`.
    pub fn amplify(&self, t: usize) -> Result<MultilinearMap> {
        let amp = self.algebra.amplified(t)?;
        checked_len(amp.algebra.dim(), self.k)?;
        let (h, k) = (self.h, self.k);
        let mut base = vec![0usize; k];
        Ok(Self::from_fn(&amp.algebra, k, t * h, |idx| {
            let mut out = linalg::zeros(t * h, t * h);
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
            out.view_mut((r * h, col * h), (h, h)).copy_from(self.coeff(&base));
            out
        }))
    }

    /// `φ*(a_1,…,a_k) = φ(a_k*,…,a_1*)*`.
    pub fn adjoint(&self) -> MultilinearMap {
        let star = self.algebra.star_table();
        let mut rev = vec![0usize; self.k];
        Self::from_fn(&self.algebra, self.k, self.h, |idx| {
            for (dst, &src) in rev.iter_mut().zip(idx.iter().rev()) {
                *dst = star[src];
            }
            self.coeff(&rev).adjoint()
        })
    }

    /// Largest coefficient deviation between `φ` and `φ*`.
    pub fn symmetry_defect(&self) -> f64 {
        let adj = self.adjoint();
        self.coeffs.iter().zip(adj.coeffs()).map(|(a, b)| linalg::max_abs(&(a - b))).fold(0.0, f64::max)
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

    pub fn scale(&self, z: Complex64) -> MultilinearMap {
        Self {
            algebra: self.algebra.clone(),
            k: self.k,
            h: self.h,
            coeffs: self.coeffs.iter().map(|c| c * z).collect(),
        }
    }

    pub fn checked_add(&self, other: &MultilinearMap) -> Result<MultilinearMap> {
        self.algebra.ensure_same(&other.algebra)?;
        if (self.k, self.h) != (other.k, other.h) {
            return Err(Error::Shape("maps differ in arity or codomain".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { coeffs, ..self.clone() })
    }

    /// Copy with one coefficient replaced.
    pub fn with_coeff(&self, idx: &[usize], value: CMat) -> Result<MultilinearMap> {
        if value.shape() != (self.h, self.h) || idx.len() != self.k {
            return Err(Error::Shape("replacement coefficient does not fit".into()));
        }
        let mut out = self.clone();
        let pos = self.coeff_index(idx);
        out.coeffs[pos] = value;
        Ok(out)
    }
}

/// Evaluates any block view at the level fixed by the argument size.
pub(crate) fn evaluate_level<V: crate::blockmap::BlockView + ?Sized>(
    map: &V,
    args: &[MatrixOverAlgebra],
) -> Result<CMat> {
    if args.len() != map.arity() {
        return Err(Error::Arity { expected: map.arity(), got: args.len() });
    }
    let size = args[0].size();
    for a in args {
        map.algebra().ensure_same(a.algebra())?;
        if a.size() != size {
            return Err(Error::Shape("arguments differ in size".into()));
        }
    }
    let slots: Vec<Vec<CMat>> = args.iter().map(|a| a.coordinate_slices()).collect();
    Chain::new(map).value(&slots)
}

pub(crate) fn unravel(mut lin: usize, d: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = lin % d;
        lin /= d;
    }
}

fn checked_len(d: usize, k: usize) -> Result<usize> {
    d.checked_pow(k as u32).filter(|&n| n <= 50_000_000).ok_or_else(|| Error::TooLarge(format!("{d}^{k} coefficients")))
}
