//! Invariance checking for (block) multilinear maps.
//!
//! For `k = 2m-1` there are `m-1` shifting factors and for `k = 2m` there are
//! `m`. Factor `c_q` multiplies slot `q` on the right on one side and slot
//! `k+1-q` on the left on the other. Both sides are multilinear in every `a`
//! and every `c`, so equality on all basis assignments is equivalent to
//! invariance. Block maps are checked over the matrix-unit basis of `M_n(A)`,
//! whose products are again basis elements or zero.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{Algebra, MatrixOverAlgebra};
use crate::blockmap::BlockView;
use crate::linalg::{self, CMat};
use crate::multimap::unravel;

#[derive(Clone, Debug)]
pub struct InvarianceOptions {
    /// Absolute tolerance on basis tuples; `None` uses the map's default.
    pub tol: Option<f64>,
    /// Largest tuple count checked exhaustively.
    pub exhaustive_limit: u64,
    /// Dense random tuples used above the limit.
    pub random_trials: usize,
    pub seed: u64,
}

impl Default for InvarianceOptions {
    fn default() -> Self {
        Self { tol: None, exhaustive_limit: 1_000_000, random_trials: 2000, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceWitness {
    pub description: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub exhaustive: bool,
    pub tuples_checked: u64,
    pub max_residual: f64,
    pub tol: f64,
    pub witness: Option<InvarianceWitness>,
    /// Set when only random tuples were checked.
    pub warning: Option<String>,
}

/// Number of shifting factors `c_q`.
pub fn shift_count(k: usize) -> usize {
    k / 2
}

pub(crate) fn check<V: BlockView + ?Sized>(map: &V, opts: &InvarianceOptions) -> InvarianceReport {
    let tol = opts.tol.unwrap_or_else(|| map.default_tol());
    let k = map.arity();
    let nc = shift_count(k);
    let dim = (map.block_size() * map.block_size() * map.algebra().dim()) as u64;
    let total = dim.checked_pow((k + nc) as u32);
    match total {
        Some(total) if total <= opts.exhaustive_limit => exhaustive(map, tol, total),
        _ => randomized(map, tol, opts),
    }
}

struct BlockBasis<'a, V: ?Sized> {
    map: &'a V,
    d: usize,
    n: usize,
    product: Vec<Option<usize>>,
}

impl<'a, V: BlockView + ?Sized> BlockBasis<'a, V> {
    fn new(map: &'a V) -> Self {
        let alg = map.algebra();
        let d = alg.dim();
        let n = map.block_size();
        let dim = n * n * d;
        let mut product = vec![None; dim * dim];
        for p in 0..dim {
            for q in 0..dim {
                let (i, j, a) = (p / (n * d), (p / d) % n, p % d);
                let (i2, j2, b) = (q / (n * d), (q / d) % n, q % d);
                if j == i2 {
                    product[p * dim + q] = alg.unit_product(a, b).map(|r| (i * n + j2) * d + r);
                }
            }
        }
        Self { map, d, n, product }
    }

    fn dim(&self) -> usize {
        self.n * self.n * self.d
    }

    fn mul(&self, p: usize, q: usize) -> Option<usize> {
        self.product[p * self.dim() + q]
    }

    /// Value on a basis tuple: the only non-zero block and its position.
    fn value(&self, idx: &[usize], scratch: &mut [usize]) -> Option<(usize, usize, &'a CMat)> {
        let (n, d) = (self.n, self.d);
        let row = idx[0] / (n * d);
        let mut col = row;
        for (l, &x) in idx.iter().enumerate() {
            let (i, j) = (x / (n * d), (x / d) % n);
            if l > 0 && i != col {
                return None;
            }
            col = j;
            scratch[l] = x % d;
        }
        let c = self.map.entry(row, col).coeff(scratch);
        (!linalg::is_zero(c)).then_some((row, col, c))
    }

    fn label(&self, x: usize) -> String {
        let (n, d) = (self.n, self.d);
        let u = self.map.algebra().unit(x % d);
        if n == 1 {
            format!("e[{u}]")
        } else {
            format!("E({},{})⊗e[{u}]", x / (n * d), (x / d) % n)
        }
    }
}

fn residual(lhs: Option<(usize, usize, &CMat)>, rhs: Option<(usize, usize, &CMat)>) -> f64 {
    match (lhs, rhs) {
        (None, None) => 0.0,
        (Some((_, _, a)), None) | (None, Some((_, _, a))) => linalg::frobenius(a),
        (Some((r1, c1, a)), Some((r2, c2, b))) => {
            if (r1, c1) == (r2, c2) {
                linalg::frobenius(&(a - b))
            } else {
                linalg::frobenius(a).hypot(linalg::frobenius(b))
            }
        }
    }
}

fn exhaustive<V: BlockView + ?Sized>(map: &V, tol: f64, total: u64) -> InvarianceReport {
    let basis = BlockBasis::new(map);
    let k = map.arity();
    let nc = shift_count(k);
    let dim = basis.dim();
    let mut cs = vec![0usize; nc];
    let mut a = vec![0usize; k];
    let mut left = vec![0usize; k];
    let mut right = vec![0usize; k];
    let mut scratch = vec![0usize; k];
    let mut worst = 0.0f64;
    let mut witness = None;
    let c_total = dim.pow(nc as u32);
    let a_total = dim.pow(k as u32);
    'outer: for cl in 0..c_total {
        unravel(cl, dim, &mut cs);
        for al in 0..a_total {
            unravel(al, dim, &mut a);
            left.copy_from_slice(&a);
            right.copy_from_slice(&a);
            let mut lzero = false;
            let mut rzero = false;
            for (q, &c) in cs.iter().enumerate() {
                match basis.mul(a[q], c) {
                    Some(x) => left[q] = x,
                    None => lzero = true,
                }
                match basis.mul(c, a[k - 1 - q]) {
                    Some(x) => right[k - 1 - q] = x,
                    None => rzero = true,
                }
            }
            if lzero && rzero {
                continue;
            }
            let lv = if lzero { None } else { basis.value(&left, &mut scratch) };
            let rv = if rzero { None } else { basis.value(&right, &mut scratch) };
            let r = residual(lv, rv);
            if r > worst {
                worst = r;
                if r > tol {
                    let names = |v: &[usize]| v.iter().map(|&x| basis.label(x)).collect::<Vec<_>>().join(", ");
                    witness = Some(InvarianceWitness {
                        description: format!("a = ({}), c = ({})", names(&a), names(&cs)),
                        residual: r,
                    });
                    break 'outer;
                }
            }
        }
    }
    InvarianceReport {
        invariant: witness.is_none(),
        exhaustive: true,
        tuples_checked: total,
        max_residual: worst,
        tol,
        witness,
        warning: None,
    }
}

fn randomized<V: BlockView + ?Sized>(map: &V, tol: f64, opts: &InvarianceOptions) -> InvarianceReport {
    let alg: &Algebra = map.algebra();
    let n = map.block_size();
    let k = map.arity();
    let nc = shift_count(k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut checked = 0u64;
    for trial in 0..opts.random_trials {
        let a: Vec<MatrixOverAlgebra> = (0..k).map(|_| MatrixOverAlgebra::random(alg, n, &mut rng)).collect();
        let c: Vec<MatrixOverAlgebra> = (0..nc).map(|_| MatrixOverAlgebra::random(alg, n, &mut rng)).collect();
        let mut left = a.clone();
        let mut right = a.clone();
        for q in 0..nc {
            left[q] = a[q].multiply(&c[q]).expect("same algebra");
            right[k - 1 - q] = c[q].multiply(&a[k - 1 - q]).expect("same algebra");
        }
        let lv = map.evaluate_level(&left).expect("well-formed arguments");
        let rv = map.evaluate_level(&right).expect("well-formed arguments");
        let scale = 1f64.max(linalg::frobenius(&lv)).max(linalg::frobenius(&rv));
        let r = linalg::frobenius(&(&lv - &rv)) / scale;
        checked += 1;
        worst = worst.max(r);
        if r > tol {
            witness = Some(InvarianceWitness {
                description: format!("random tuple {trial} (seed {})", opts.seed),
                residual: r,
            });
            break;
        }
    }
    InvarianceReport {
        invariant: witness.is_none(),
        exhaustive: false,
        tuples_checked: checked,
        max_residual: worst,
        tol,
        witness,
        warning: Some(format!(
            "basis tuple count exceeds {}; checked {} seeded random tuples (relative residuals)",
            opts.exhaustive_limit, checked
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::multimap::MultilinearMap;

    #[test]
    fn shift_counts_follow_parity() {
        assert_eq!(shift_count(1), 0);
        assert_eq!(shift_count(2), 1);
        assert_eq!(shift_count(3), 1);
        assert_eq!(shift_count(4), 2);
        assert_eq!(shift_count(5), 2);
    }

    #[test]
    fn random_mode_agrees_with_exhaustive() {
        let alg = Algebra::commutative(2).unwrap();
        let bad = MultilinearMap::from_fn(&alg, 3, 1, |idx| {
            CMat::from_element(1, 1, if idx == [0, 0, 1] { ONE } else { linalg::ZERO })
        });
        let forced = InvarianceOptions { tol: Some(1e-9), exhaustive_limit: 0, ..Default::default() };
        let r = bad.invariance_report(&forced);
        assert!(!r.exhaustive && !r.invariant && r.warning.is_some());
        let ex = bad.invariance_report(&InvarianceOptions { tol: Some(1e-9), ..Default::default() });
        assert!(ex.exhaustive && !ex.invariant);
        assert!(ex.witness.unwrap().description.contains("e["));
    }

    #[test]
    fn arity_one_is_trivially_invariant() {
        let alg = Algebra::matrix(2).unwrap();
        let phi = MultilinearMap::from_fn(&alg, 1, 1, |idx| CMat::from_element(1, 1, linalg::c(idx[0] as f64, 1.0)));
        let r = phi.invariance_report(&InvarianceOptions::default());
        assert!(r.invariant && r.tuples_checked == 4);
    }
}
