//! Constructors: maps from dilation data, commuting representations, random
//! invariant CP maps, and the named examples.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, AlgebraElement, MatrixOverAlgebra};
use crate::blockmap::BlockMultilinearMap;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, ONE, ZERO};
use crate::multimap::MultilinearMap;
use crate::stinespring::{commutation_residual, DilationTriple, Representation};

/// Tolerance for the representation checks on dilation data.
pub const DATA_TOL: f64 = 1e-10;

/// `φ_ij(a_1,…,a_k) = V_i† π_1(…) ⋯ π_m(…) V_j` with the parity-dependent
/// argument pattern.
pub fn from_dilation_data(reps: &[Representation], v: &[CMat], k: usize) -> Result<BlockMultilinearMap> {
    for r in reps {
        r.check(DATA_TOL)?;
    }
    let comm = commutation_residual(reps);
    if comm > DATA_TOL {
        return Err(Error::NonCommuting(comm));
    }
    Ok(DilationTriple::new(reps.to_vec(), v.to_vec(), k)?.reconstruct())
}

/// `π_p = I ⊗ ⋯ ⊗ ρ_p ⊗ ⋯ ⊗ I` on `⊗_p ℂ^{κ_p}`.
pub fn tensor_commuting_reps(factors: &[Representation]) -> Result<Vec<Representation>> {
    for f in factors {
        f.check(DATA_TOL)?;
    }
    let dims: Vec<usize> = factors.iter().map(|f| f.dim()).collect();
    Ok(factors
        .iter()
        .enumerate()
        .map(|(p, f)| {
            let left: usize = dims[..p].iter().product();
            let right: usize = dims[p + 1..].iter().product();
            f.ampliate(left, right)
        })
        .collect())
}

/// Direct sum of irreducibles with multiplicities in `0..=max_mult` (at least
/// one summand, dimension at most `max_dim` when possible), conjugated by a
/// Haar unitary.
pub fn random_representation<R: Rng + ?Sized>(
    algebra: &Algebra,
    max_mult: usize,
    max_dim: usize,
    rng: &mut R,
) -> Representation {
    let dims = algebra.block_dims();
    let mut mult: Vec<usize> = dims.iter().map(|_| rng.random_range(0..=max_mult)).collect();
    while mult.iter().zip(dims).map(|(m, d)| m * d).sum::<usize>() > max_dim {
        let i = mult.iter().rposition(|&m| m > 0).expect("non-empty");
        mult[i] -= 1;
    }
    if mult.iter().all(|&m| m == 0) {
        let smallest = (0..dims.len()).min_by_key(|&i| dims[i]).expect("blocks");
        mult[smallest] = 1;
    }
    let rep = Representation::with_multiplicities(algebra, &mult).expect("valid multiplicities");
    let u = linalg::random_unitary(rng, rep.dim());
    rep.conjugate(&u)
}

/// `φ(A_1, A_2, A_3) = tr(A_1 A_3) tr(A_2) I` on `M_n` with the normalized
/// trace.
pub fn trace_example(n: usize) -> Result<MultilinearMap> {
    let alg = Algebra::matrix(n)?;
    let inv = 1.0 / n as f64;
    let tr = |p: usize| {
        let u = alg.unit(p);
        if u.row == u.col {
            inv
        } else {
            0.0
        }
    };
    let tr2 = |p: usize, q: usize| alg.unit_product(p, q).map(tr).unwrap_or(0.0);
    Ok(MultilinearMap::from_fn(&alg, 3, n, |idx| linalg::identity(n) * c(tr2(idx[0], idx[2]) * tr(idx[1]), 0.0)))
}

/// `φ(f, g, h) = f(x) g(x) h(x)` on `ℂ^points` with marked point `x`.
pub fn eval_family(points: usize, marked: usize) -> Result<MultilinearMap> {
    if marked >= points {
        return Err(Error::Shape(format!("marked point {marked} outside 0..{points}")));
    }
    let alg = Algebra::commutative(points)?;
    Ok(MultilinearMap::from_fn(&alg, 3, 1, |idx| {
        CMat::from_element(1, 1, if idx.iter().all(|&i| i == marked) { ONE } else { ZERO })
    }))
}

/// `φ((a_1,a_2),(b_1,b_2),(c_1,c_2)) = a_1 b_1 c_1` on `(ℂ²)³`.
pub fn eval_example() -> MultilinearMap {
    eval_family(2, 0).expect("valid parameters")
}

/// The three `2×2` matrices over `ℂ²` whose level-2 value has `(1,1)` entry
/// `-φ(e_1, e_1, e_1)`.
pub fn ex1_level2_tuple() -> Vec<MatrixOverAlgebra> {
    let alg = Algebra::commutative(2).expect("valid");
    let grid = |g: [[(f64, f64); 2]; 2]| {
        MatrixOverAlgebra::from_fn(&alg, 2, |i, j| {
            AlgebraElement::from_values(&alg, &[g[i][j].0, g[i][j].1]).expect("two coordinates")
        })
    };
    vec![
        grid([[(1.0, 1.0), (0.0, 0.0)], [(0.0, 0.0), (0.0, 0.0)]]),
        grid([[(1.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (1.0, 0.0)]]),
        grid([[(1.0, 0.0), (-2.0, 0.0)], [(-2.0, 0.0), (4.0, 0.0)]]),
    ]
}

/// `Ψ(a, b, c) = π_1(b) π_2(ac)` on `M_2` with both `π` the identity
/// representation on `ℂ²`.
pub fn psi_map() -> MultilinearMap {
    let alg = Algebra::matrix(2).expect("valid");
    let id = Representation::identity(&alg);
    MultilinearMap::from_fn(&alg, 3, 2, |idx| match alg.unit_product(idx[0], idx[2]) {
        Some(ac) => id.image(idx[1]) * id.image(ac),
        None => linalg::zeros(2, 2),
    })
}

/// The `2×2` grid with every entry `Ψ`: each entry is invariant, the block
/// map is not.
pub fn noninvariant_block_example() -> BlockMultilinearMap {
    BlockMultilinearMap::uniform(2, &psi_map())
}

/// Both sides of the invariance instance
/// `Φ(E_11 B, A_2, A_3) = Φ(E_11, A_2, B A_3)` with `B = [[0,b],[b,c]]`,
/// `A_2 = [[1,1],[2,1]]`, `A_3 = [[1,3],[0,4]]`.
#[derive(Clone, Debug)]
pub struct PsiInstance {
    pub lhs: CMat,
    pub rhs: CMat,
    pub psi_unit: CMat,
}

pub fn psi_displayed_identity(b: &AlgebraElement, cc: &AlgebraElement) -> Result<PsiInstance> {
    let phi = noninvariant_block_example();
    let alg = phi.entries()[0].algebra().clone();
    alg.ensure_same(b.algebra())?;
    alg.ensure_same(cc.algebra())?;
    let s = |x: f64| AlgebraElement::identity(&alg).scale(c(x, 0.0));
    let grid = |g: [[f64; 2]; 2]| MatrixOverAlgebra::from_fn(&alg, 2, |i, j| s(g[i][j]));
    let e11 = grid([[1.0, 0.0], [0.0, 0.0]]);
    let a2 = grid([[1.0, 1.0], [2.0, 1.0]]);
    let a3 = grid([[1.0, 3.0], [0.0, 4.0]]);
    let zero = AlgebraElement::zero(&alg);
    let bm = MatrixOverAlgebra::new(&alg, 2, vec![zero, b.clone(), b.clone(), cc.clone()])?;
    let lhs = phi.evaluate(&[e11.multiply(&bm)?, a2.clone(), a3.clone()])?;
    let rhs = phi.evaluate(&[e11, a2, bm.multiply(&a3)?])?;
    Ok(PsiInstance { lhs, rhs, psi_unit: psi_map().unit_value() })
}

/// `[a_ij] ↦ [λ_ij a_ij]` on `M_n(ℂ)`.
pub fn schur_block_map(lambda: &CMat) -> Result<BlockMultilinearMap> {
    let n = lambda.nrows();
    if n == 0 || lambda.ncols() != n {
        return Err(Error::Shape("λ must be a non-empty square matrix".into()));
    }
    let alg = Algebra::commutative(1)?;
    let entries = (0..n * n)
        .map(|p| MultilinearMap::from_fn(&alg, 1, 1, |_| CMat::from_element(1, 1, lambda[(p / n, p % n)])))
        .collect();
    BlockMultilinearMap::new(n, entries)
}

/// Parameters of a random invariant CP map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcpSpec {
    pub block_dims: Vec<usize>,
    pub k: usize,
    pub n: usize,
    pub h: usize,
    /// Draw each `V_j` as an isometry when `κ ≥ h`.
    #[serde(default)]
    pub isometric: bool,
    #[serde(default = "default_mult")]
    pub max_multiplicity: usize,
    #[serde(default = "default_rep_dim")]
    pub max_rep_dim: usize,
}

fn default_mult() -> usize {
    2
}

fn default_rep_dim() -> usize {
    4
}

impl IcpSpec {
    pub fn new(block_dims: Vec<usize>, k: usize, n: usize, h: usize) -> Self {
        Self { block_dims, k, n, h, isometric: false, max_multiplicity: default_mult(), max_rep_dim: default_rep_dim() }
    }
}

/// A random invariant CP block map together with the data it was built from.
pub fn random_icp(seed: u64, spec: &IcpSpec) -> Result<(BlockMultilinearMap, DilationTriple)> {
    if spec.k == 0 || spec.n == 0 || spec.h == 0 {
        return Err(Error::Shape("k, n and h must be positive".into()));
    }
    let alg = Algebra::new(spec.block_dims.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = spec.k.div_ceil(2);
    let factors: Vec<Representation> =
        (0..m).map(|_| random_representation(&alg, spec.max_multiplicity, spec.max_rep_dim, &mut rng)).collect();
    let reps = tensor_commuting_reps(&factors)?;
    let kappa = reps[0].dim();
    let v: Vec<CMat> = (0..spec.n)
        .map(|_| {
            if spec.isometric && kappa >= spec.h {
                linalg::random_unitary(&mut rng, kappa).columns(0, spec.h).into_owned()
            } else {
                linalg::random_gaussian(&mut rng, kappa, spec.h) * Complex64::from(1.0 / (kappa as f64).sqrt())
            }
        })
        .collect();
    let map = from_dilation_data(&reps, &v, spec.k)?;
    let triple = DilationTriple::new(reps, v, spec.k)?;
    Ok((map, triple))
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub seed: u64,
    pub spec: IcpSpec,
    pub map: BlockMultilinearMap,
    pub triple: DilationTriple,
}

/// 64 seeded instances over `k ∈ {1,2,3,4}`, `n ∈ {1,2}`, `h ∈ {1,2}` and
/// algebras of dimension 2 (`ℂ²`) and 4 (`M_2` or `ℂ⁴`), two seeds each.
/// The second seed draws isometric `V_j`.
pub fn standard_corpus() -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for k in 1..=4 {
        for n in 1..=2 {
            for h in 1..=2 {
                for d in [2, 4] {
                    for rep in 0..2u64 {
                        let (blocks, label) = match (d, rep) {
                            (2, _) => (vec![1, 1], "C2"),
                            (_, 0) => (vec![2], "M2"),
                            _ => (vec![1, 1, 1, 1], "C4"),
                        };
                        let mut spec = IcpSpec::new(blocks, k, n, h);
                        spec.isometric = rep == 1;
                        let seed = 10_000 * k as u64 + 1000 * n as u64 + 100 * h as u64 + 10 * d as u64 + rep;
                        let (map, triple) = random_icp(seed, &spec).expect("corpus parameters are valid");
                        out.push(CorpusEntry {
                            name: format!("icp-k{k}-n{n}-h{h}-{label}-s{rep}"),
                            seed,
                            spec,
                            map,
                            triple,
                        });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockmap::BlockView;
    use crate::gram::{build_gram, cp_refute, gram_is_psd};

    #[test]
    fn ex1_from_dilation_data() {
        let alg = Algebra::commutative(2).unwrap();
        let ev = Representation::evaluation(&alg, 0).unwrap();
        let phi = from_dilation_data(&[ev.clone(), ev], &[CMat::from_element(1, 1, ONE)], 3).unwrap();
        assert_eq!(phi.entries()[0], eval_example());
    }

    #[test]
    fn k1_is_classical_stinespring() {
        let alg = Algebra::matrix(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pi = random_representation(&alg, 2, 4, &mut rng);
        let v = linalg::random_gaussian(&mut rng, pi.dim(), 1);
        let phi = from_dilation_data(std::slice::from_ref(&pi), std::slice::from_ref(&v), 1).unwrap();
        let x = AlgebraElement::random(&alg, &mut rng);
        let direct = v.adjoint() * pi.apply(&x) * &v;
        let via = phi.entries()[0].evaluate(&[x]).unwrap();
        assert!(linalg::max_abs(&(direct - via)) < 1e-12);
    }

    #[test]
    fn zero_v_gives_zero_map() {
        let alg = Algebra::commutative(2).unwrap();
        let id = Representation::identity(&alg);
        let phi = from_dilation_data(&[id.clone(), id], &[linalg::zeros(2, 1)], 4).unwrap();
        assert!(phi.entries()[0].coeffs().iter().all(linalg::is_zero));
    }

    #[test]
    fn non_commuting_data_is_rejected() {
        let alg = Algebra::matrix(2).unwrap();
        let id = Representation::identity(&alg);
        let v = CMat::from_element(2, 1, ONE);
        assert!(matches!(from_dilation_data(&[id.clone(), id], &[v], 3), Err(Error::NonCommuting(_))));
    }

    #[test]
    fn tensor_reps_commute_exactly() {
        let alg = Algebra::matrix(2).unwrap();
        let id = Representation::identity(&alg);
        let reps = tensor_commuting_reps(&[id.clone(), id]).unwrap();
        assert_eq!(reps[0].dim(), 4);
        assert_eq!(commutation_residual(&reps), 0.0);
        let c2 = Algebra::commutative(2).unwrap();
        let diag = tensor_commuting_reps(&[Representation::identity(&c2), Representation::identity(&c2)]).unwrap();
        for r in &diag {
            for m in r.images() {
                assert!(linalg::max_abs(&(m - CMat::from_diagonal(&m.diagonal()))) == 0.0);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f1 = random_representation(&alg, 2, 4, &mut rng);
        let f2 = random_representation(&alg, 2, 4, &mut rng);
        assert!(commutation_residual(&tensor_commuting_reps(&[f1, f2]).unwrap()) < 1e-14);
    }

    #[test]
    fn trace_example_values() {
        let phi = trace_example(2).unwrap();
        assert!(linalg::max_abs(&(phi.unit_value() - linalg::identity(2))) < 1e-15);
        let e11 = phi.coeff(&[0, 0, 0]);
        assert!(linalg::max_abs(&(e11 - linalg::identity(2) * c(0.25, 0.0))) < 1e-15);
        assert!(phi.is_invariant(1e-12));
    }

    #[test]
    fn ex1_level2_entry_is_minus_one() {
        let v = eval_example().evaluate_amplified(&ex1_level2_tuple()).unwrap();
        assert_eq!(v[(0, 0)], c(-1.0, 0.0));
    }

    #[test]
    fn psi_example() {
        let phi = noninvariant_block_example();
        assert!(phi.entries_invariant(1e-12).iter().all(|&x| x));
        assert!(!phi.is_invariant(1e-9));
        let alg = Algebra::matrix(2).unwrap();
        let one = AlgebraElement::identity(&alg);
        let inst = psi_displayed_identity(&one, &AlgebraElement::zero(&alg)).unwrap();
        let diff = (&inst.lhs - &inst.rhs).view((0, 0), (2, 2)).into_owned();
        assert!(linalg::max_abs(&(diff - &inst.psi_unit)) < 1e-14);
        // (1,1) sides are 2bΨ(1,1,1) and bΨ(1,1,1); (1,2) of the left is 10bΨ(1,1,1)
        let l12 = inst.lhs.view((0, 2), (2, 2)).into_owned();
        assert!(linalg::max_abs(&(l12 - &inst.psi_unit * c(10.0, 0.0))) < 1e-14);
    }

    #[test]
    fn schur_cp_iff_psd() {
        let good = CMat::from_row_slice(2, 2, &[ONE, c(0.5, 0.0), c(0.5, 0.0), ONE]);
        assert!(cp_refute(&schur_block_map(&good).unwrap()).unwrap().is_none());
        let bad = CMat::from_row_slice(2, 2, &[ONE, c(2.0, 0.0), c(2.0, 0.0), ONE]);
        let r = cp_refute(&schur_block_map(&bad).unwrap()).unwrap().unwrap();
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
        let id = schur_block_map(&linalg::identity(3)).unwrap();
        assert!(gram_is_psd(&build_gram(&id).unwrap(), None).unwrap().psd);
    }

    #[test]
    fn random_icp_is_deterministic_and_invariant() {
        let spec = IcpSpec::new(vec![2], 3, 2, 1);
        let (a, _) = random_icp(5, &spec).unwrap();
        let (b, _) = random_icp(5, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.entries_invariant(a.default_tol()).iter().all(|&x| x));
        // n ≥ 2 with k ≥ 3: block invariance only admits the zero map
        assert!(!a.is_invariant(a.default_tol()));
        assert!(a.is_symmetric(1e-12), "{}", a.symmetry_defect());
        for (k, n) in [(3, 1), (4, 1), (2, 2), (1, 2)] {
            let (c, _) = random_icp(7, &IcpSpec::new(vec![2], k, n, 2)).unwrap();
            assert!(c.is_invariant(c.default_tol()), "k={k} n={n}");
        }
        let (lin, _) = random_icp(6, &IcpSpec::new(vec![1, 1], 1, 1, 1)).unwrap();
        assert!(cp_refute(&lin).unwrap().is_none());
    }

    #[test]
    fn corpus_shape() {
        let corpus = standard_corpus();
        assert_eq!(corpus.len(), 64);
        for k in 1..=4 {
            assert!(corpus.iter().any(|e| e.spec.k == k && e.spec.n == 2 && e.map.algebra().dim() == 4));
        }
    }
}
