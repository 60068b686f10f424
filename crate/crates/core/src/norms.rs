//! Norm and cb-norm estimation, and the Russo-Dye type checks.
//!
//! Estimates are lower bounds: every reported value is the norm of the map at
//! a stored witness inside the unit ball.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{Algebra, MatrixOverAlgebra};
use crate::blockmap::BlockView;
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::gram::{positivity_falsify, Counterexample, FalsifyOptions};
use crate::invariance::{InvarianceOptions, InvarianceReport};
use crate::linalg::{self, CMat};
use crate::stinespring::{dilate, DilateOptions, DilationTriple};

/// Relative slack in the one-sided norm inequalities.
pub const NORM_SLACK: f64 = 1e-6;
/// Agreement required between `‖Φ(1,…,1)‖` and `‖V‖²`.
pub const UNIT_V_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct NormOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    /// Slots held at the identity during the search.
    pub frozen_identity: Vec<usize>,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { restarts: 16, iters: 30, seed: 0, frozen_identity: Vec::new() }
    }
}

#[derive(Clone, Debug)]
pub struct NormEstimate {
    pub value: f64,
    pub level: usize,
    pub witness: Vec<MatrixOverAlgebra>,
    pub seed: u64,
    pub restarts: usize,
    pub best_restart: usize,
    /// Sweeps over the free slots, summed over restarts.
    pub iterations: usize,
}

impl NormEstimate {
    /// `‖Φ_t(witness)‖`, recomputed.
    pub fn reevaluate<V: BlockView + ?Sized>(&self, map: &V) -> Result<f64> {
        Ok(linalg::op_norm(&map.evaluate_level(&self.witness)?))
    }

    pub fn witness_norm(&self) -> f64 {
        self.witness.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

fn slots_of(args: &[MatrixOverAlgebra]) -> Vec<Vec<CMat>> {
    args.iter().map(|a| a.coordinate_slices()).collect()
}

/// `U V†` per block of the amplified algebra, on the non-zero singular part.
fn polar(x: &MatrixOverAlgebra) -> MatrixOverAlgebra {
    let blocks = x
        .block_matrices()
        .into_iter()
        .map(|m| {
            let d = linalg::svd(&m);
            let top = d.sigma.first().copied().unwrap_or(0.0);
            let mut out = linalg::zeros(m.nrows(), m.ncols());
            for (i, &s) in d.sigma.iter().enumerate() {
                if s > 1e-13 * top {
                    out += d.u.column(i) * d.v.column(i).adjoint();
                }
            }
            out
        })
        .collect();
    MatrixOverAlgebra::from_block_matrices(x.algebra(), x.size(), blocks).expect("shapes preserved")
}

fn unit_ball_start(alg: &Algebra, size: usize, rng: &mut ChaCha8Rng) -> MatrixOverAlgebra {
    let x = MatrixOverAlgebra::random(alg, size, rng);
    let nrm = x.norm();
    if nrm > 0.0 {
        x.scale(Complex64::from(1.0 / nrm))
    } else {
        x
    }
}

/// Lower bound for `‖Φ_t‖` by alternating ascent over the free slots.
///
/// Restart 0 starts at `(1, …, 1)`; restart `r > 0` draws from stream `r` of
/// the seed, so raising `restarts` never lowers the result.
pub fn norm_estimate<V: BlockView + ?Sized>(map: &V, t: usize, opts: &NormOptions) -> Result<NormEstimate> {
    if t == 0 {
        return Err(Error::InvalidLevel);
    }
    let k = map.arity();
    if let Some(&bad) = opts.frozen_identity.iter().find(|&&l| l >= k) {
        return Err(Error::Shape(format!("frozen slot {bad} outside 0..{k}")));
    }
    let alg = map.algebra().clone();
    let size = t * map.block_size();
    let chain = Chain::new(map);
    let free: Vec<usize> = (0..k).filter(|l| !opts.frozen_identity.contains(l)).collect();

    let mut best: Option<(f64, Vec<MatrixOverAlgebra>, usize)> = None;
    let mut iterations = 0;
    for r in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let mut args: Vec<MatrixOverAlgebra> = (0..k)
            .map(|l| {
                if r == 0 || !free.contains(&l) {
                    MatrixOverAlgebra::identity(&alg, size)
                } else {
                    unit_ball_start(&alg, size, &mut rng)
                }
            })
            .collect();
        let mut slots = slots_of(&args);
        let mut value = linalg::op_norm(&chain.value(&slots)?);
        for _ in 0..opts.iters {
            iterations += 1;
            let before = value;
            for &l in &free {
                let (sigma, u, v) = linalg::top_singular_pair(&chain.value(&slots)?);
                let grads = chain.slot_gradient(&slots, l, &u, &v)?;
                let conj: Vec<CMat> = grads.iter().map(|g| g.map(|z| z.conj())).collect();
                let dir = MatrixOverAlgebra::from_coordinate_slices(&alg, size, &conj)?;
                let dnorm = dir.norm();
                if dnorm <= 1e-300 {
                    continue;
                }
                let dir = dir.scale(Complex64::from(1.0 / dnorm));
                let mut candidates = vec![polar(&dir)];
                let mut eta = 1.0;
                for _ in 0..8 {
                    candidates.push(args[l].checked_add(&dir.scale(Complex64::from(eta)))?.project_unit_ball());
                    eta *= 0.5;
                }
                let mut improved = None;
                for (i, cand) in candidates.into_iter().enumerate() {
                    let mut trial = slots.clone();
                    trial[l] = cand.coordinate_slices();
                    let val = linalg::op_norm(&chain.value(&trial)?);
                    let current = improved.as_ref().map(|(v, _, _)| *v).unwrap_or(sigma);
                    if val > current {
                        improved = Some((val, cand, trial));
                    } else if i > 0 && improved.is_some() {
                        break;
                    }
                }
                if let Some((val, cand, trial)) = improved {
                    args[l] = cand;
                    slots = trial;
                    value = val;
                }
            }
            if value - before <= 1e-12 * (1.0 + value) {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _, _)| value > *b) {
            best = Some((value, args, r));
        }
    }
    let (_, witness, best_restart) = best.expect("at least one restart");
    let value = linalg::op_norm(&chain.value(&slots_of(&witness))?);
    Ok(NormEstimate {
        value,
        level: t,
        witness,
        seed: opts.seed,
        restarts: opts.restarts.max(1),
        best_restart,
        iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Violation,
    /// The map failed the invariance or positivity pre-check.
    HypothesisFailure,
}

#[derive(Clone, Debug)]
pub struct RussoDyeReport {
    pub status: CheckStatus,
    pub estimate: NormEstimate,
    pub unit_norm: f64,
    /// `|‖Φ(1,…,1)‖ − ‖unit_value‖|` through the evaluation path.
    pub unit_attainment: f64,
    /// `‖unit_value‖·(1+slack) − estimate`; negative on violation.
    pub margin: f64,
    pub invariance: InvarianceReport,
    pub positivity: Option<Counterexample>,
}

/// `‖φ‖ = ‖φ(1,…,1)‖` for invariant positive maps, tested at level 1.
pub fn russo_dye_check<V: BlockView + ?Sized>(map: &V, opts: &NormOptions) -> Result<RussoDyeReport> {
    let invariance = crate::invariance::check(map, &InvarianceOptions { seed: opts.seed, ..Default::default() });
    let positivity =
        positivity_falsify(map, &FalsifyOptions { levels: vec![1], seed: opts.seed, ..Default::default() });
    let estimate = norm_estimate(map, 1, opts)?;
    let unit_norm = linalg::op_norm(&map.unit_value());
    let ones: Vec<MatrixOverAlgebra> =
        (0..map.arity()).map(|_| MatrixOverAlgebra::identity(map.algebra(), map.block_size())).collect();
    let unit_attainment = (linalg::op_norm(&map.evaluate_level(&ones)?) - unit_norm).abs();
    let bound = unit_norm * (1.0 + NORM_SLACK);
    let status = if !invariance.invariant || positivity.is_some() {
        CheckStatus::HypothesisFailure
    } else if estimate.value <= bound {
        CheckStatus::Pass
    } else {
        CheckStatus::Violation
    };
    Ok(RussoDyeReport {
        status,
        margin: bound - estimate.value,
        estimate,
        unit_norm,
        unit_attainment,
        invariance,
        positivity,
    })
}

#[derive(Clone, Debug)]
pub struct LevelCheck {
    pub estimate: NormEstimate,
    pub bound: f64,
    pub within: bool,
}

#[derive(Clone, Debug)]
pub struct CbReport {
    pub pass: bool,
    pub unit_norm: f64,
    /// `max_j ‖V_j‖²` from the dilation.
    pub v_norm_sq: f64,
    pub unit_v_gap: f64,
    pub levels: Vec<LevelCheck>,
}

/// `‖Φ_t‖ ≤ ‖Φ(1,…,1)‖ = ‖V‖²` for `t = 1..=t_max`. Without a triple one is
/// computed with [`dilate`], which fails for maps that are not CP.
pub fn cb_russo_dye_check<V: BlockView + ?Sized>(
    map: &V,
    triple: Option<&DilationTriple>,
    t_max: usize,
    opts: &NormOptions,
) -> Result<CbReport> {
    let owned;
    let triple = match triple {
        Some(t) => t,
        None => {
            owned = dilate(map, &DilateOptions::default())?;
            &owned
        }
    };
    let unit_norm = linalg::op_norm(&map.unit_value());
    let v_norm_sq = triple.v_norm().powi(2);
    let unit_v_gap = (unit_norm - v_norm_sq).abs();
    let bound = unit_norm.min(v_norm_sq) * (1.0 + NORM_SLACK);
    let levels = (1..=t_max)
        .map(|t| {
            let estimate = norm_estimate(map, t, opts)?;
            Ok(LevelCheck { within: estimate.value <= bound, estimate, bound })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CbReport {
        pass: unit_v_gap <= UNIT_V_TOL && levels.iter().all(|l| l.within),
        unit_norm,
        v_norm_sq,
        unit_v_gap,
        levels,
    })
}

#[derive(Clone, Debug)]
pub struct Cb16Report {
    pub pass: bool,
    pub unit_norm: f64,
    pub levels: Vec<LevelCheck>,
}

/// `‖Φ_t‖ ≤ 2⁴‖Φ(1,…,1)‖` for `k ∈ {3, 4}`.
pub fn cb_16_bound_check<V: BlockView + ?Sized>(map: &V, t_max: usize, opts: &NormOptions) -> Result<Cb16Report> {
    if !(3..=4).contains(&map.arity()) {
        return Err(Error::Unsupported(format!("the 2⁴ bound is stated for k ∈ {{3, 4}}, got k = {}", map.arity())));
    }
    let unit_norm = linalg::op_norm(&map.unit_value());
    let bound = 16.0 * unit_norm * (1.0 + NORM_SLACK);
    let levels = (1..=t_max)
        .map(|t| {
            let estimate = norm_estimate(map, t, opts)?;
            Ok(LevelCheck { within: estimate.value <= bound, estimate, bound })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Cb16Report { pass: levels.iter().all(|l| l.within), unit_norm, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{eval_example, random_icp, trace_example, IcpSpec};
    use crate::linalg::c;
    use crate::multimap::MultilinearMap;

    fn quick() -> NormOptions {
        NormOptions { restarts: 4, iters: 15, ..Default::default() }
    }

    #[test]
    fn trace_example_norm_is_one() {
        let phi = trace_example(2).unwrap();
        let est = norm_estimate(&phi, 1, &quick()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);
        assert!((est.reevaluate(&phi).unwrap() - est.value).abs() < 1e-12);
    }

    #[test]
    fn ex1_norm_is_one() {
        let est = norm_estimate(&eval_example(), 1, &quick()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);
        assert!(est.witness_norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn zero_map_norm_is_zero() {
        let alg = Algebra::matrix(2).unwrap();
        let est = norm_estimate(&MultilinearMap::zero(&alg, 3, 2), 2, &quick()).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn ascent_finds_norm_away_from_identity() {
        // φ(a) = a_{12}: ‖φ(1)‖ = 0 while ‖φ‖ = 1
        let alg = Algebra::matrix(2).unwrap();
        let phi = MultilinearMap::from_fn(&alg, 1, 1, |idx| {
            CMat::from_element(1, 1, if idx[0] == 1 { c(1.0, 0.0) } else { linalg::ZERO })
        });
        let est = norm_estimate(&phi, 1, &quick()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-8, "{}", est.value);
    }

    #[test]
    fn more_restarts_never_lower() {
        let (phi, _) = random_icp(3, &IcpSpec::new(vec![1, 1], 3, 1, 2)).unwrap();
        let a = norm_estimate(&phi, 2, &NormOptions { restarts: 3, iters: 10, ..Default::default() }).unwrap();
        let b = norm_estimate(&phi, 2, &NormOptions { restarts: 6, iters: 10, ..Default::default() }).unwrap();
        assert!(b.value >= a.value);
    }

    #[test]
    fn russo_dye_statuses() {
        let ok = russo_dye_check(&trace_example(2).unwrap(), &quick()).unwrap();
        assert_eq!(ok.status, CheckStatus::Pass);
        assert!(ok.margin >= 0.0 && ok.unit_attainment < 1e-9);
        let neg = eval_example().scale(c(-1.0, 0.0));
        let bad = russo_dye_check(&neg, &quick()).unwrap();
        assert_eq!(bad.status, CheckStatus::HypothesisFailure);
        assert!(bad.positivity.is_some());
    }

    #[test]
    fn cb_checks_on_generated_map() {
        let (phi, triple) = random_icp(11, &IcpSpec::new(vec![2], 3, 2, 1)).unwrap();
        let rep = cb_russo_dye_check(&phi, Some(&triple), 2, &quick()).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep16 = cb_16_bound_check(&phi, 2, &quick()).unwrap();
        assert!(rep16.pass);
        assert!(cb_16_bound_check(&MultilinearMap::zero(&Algebra::commutative(2).unwrap(), 2, 1), 1, &quick()).is_err());
    }

    #[test]
    fn frozen_slots_stay_at_identity() {
        let phi = eval_example();
        let opts = NormOptions { frozen_identity: vec![0], ..quick() };
        let est = norm_estimate(&phi, 1, &opts).unwrap();
        assert_eq!(est.witness[0], MatrixOverAlgebra::identity(phi.algebra(), 1));
        assert!((est.value - 1.0).abs() < 1e-9);
    }
}
