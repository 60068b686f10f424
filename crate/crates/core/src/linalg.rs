//! Dense complex linear-algebra helpers shared by every module.
//!
//! Everything is built on `nalgebra` dynamic matrices over `Complex64`.
//! Empty (0×0) inputs are handled explicitly because the dilation space of the
//! zero map has dimension zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_zero(m: &CMat) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

/// Singular triples of an `r×c` matrix for the `min(r, c)` largest singular
/// values, in descending order, with `m v_i = σ_i u_i`.
///
/// Computed from the Hermitian eigenproblem of `[[0, m], [m†, 0]]`, whose
/// eigenvalues are `±σ_i`; nalgebra's complex SVD loses several digits on
/// some well-conditioned inputs. Vectors belonging to `σ_i ≈ 0` are not
/// meaningful and are only ever used with weight `σ_i`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub sigma: Vec<f64>,
    pub u: CMat,
    pub v: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    let (r, c) = m.shape();
    let p = r.min(c);
    if p == 0 {
        return Svd { sigma: Vec::new(), u: zeros(r, 0), v: zeros(c, 0) };
    }
    let mut jw = zeros(r + c, r + c);
    jw.view_mut((0, r), (r, c)).copy_from(m);
    jw.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    let (values, vectors) = hermitian_eigen(&jw);
    let scale = Complex64::from(std::f64::consts::SQRT_2);
    let mut sigma = Vec::with_capacity(p);
    let mut u = zeros(r, p);
    let mut v = zeros(c, p);
    for i in 0..p {
        let src = r + c - 1 - i;
        sigma.push(values[src].max(0.0));
        u.column_mut(i).copy_from(&(vectors.column(src).rows(0, r) * scale));
        v.column_mut(i).copy_from(&(vectors.column(src).rows(r, c) * scale));
    }
    Svd { sigma, u, v }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    svd(m).sigma
}

/// Operator (spectral) norm.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return frobenius(m);
    }
    singular_values(m)[0]
}

fn unit_or_first(x: CVec) -> CVec {
    let n = x.norm();
    if n > 1e-8 {
        x / Complex64::from(n)
    } else {
        let mut e = CVec::zeros(x.len());
        e[0] = ONE;
        e
    }
}

/// Largest singular value with a left/right singular vector pair `(u, v)`,
/// so that `u† m v = σ`.
pub fn top_singular_pair(m: &CMat) -> (f64, CVec, CVec) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (0.0, CVec::zeros(r), CVec::zeros(c));
    }
    let d = svd(m);
    let u = unit_or_first(d.u.column(0).into_owned());
    let v = unit_or_first(d.v.column(0).into_owned());
    (d.sigma[0], u, v)
}

/// Replaces every singular value above `cap` by `cap`. This is the metric
/// projection onto the operator-norm ball of radius `cap`.
pub fn clip_singular_values(m: &CMat, cap: f64) -> CMat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return m.clone();
    }
    let d = svd(m);
    if d.sigma.iter().all(|&s| s <= cap) {
        return m.clone();
    }
    let mut out = m.clone();
    for (i, &s) in d.sigma.iter().enumerate() {
        if s > cap {
            out -= d.u.column(i) * d.v.column(i).adjoint() * Complex64::from(s - cap);
        }
    }
    out
}

/// Largest entry of `m - m†`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending
/// order. Each eigenvector is rotated so its largest component is real and
/// positive, which makes downstream constructions independent of the
/// solver's phase choices.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ONE);
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { ONE };
        for i in 0..n {
            vectors[(i, dst)] = col[i] * phase;
        }
    }
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part and a unit eigenvector.
pub fn min_eigenpair(m: &CMat) -> (f64, CVec) {
    let (values, vectors) = hermitian_eigen(m);
    match values.first() {
        Some(&v) => (v, vectors.column(0).into_owned()),
        None => (0.0, CVec::zeros(0)),
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Orthonormal basis (as columns) of the column span of `m`, keeping singular
/// values above `rel_tol · σ_max`.
pub fn orthonormal_range(m: &CMat, rel_tol: f64) -> CMat {
    let d = svd(m);
    let keep = kept(&d.sigma, rel_tol);
    d.u.columns(0, keep).into_owned()
}

fn kept(sigma: &[f64], rel_tol: f64) -> usize {
    let smax = sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Numerical rank with a relative singular-value threshold.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    kept(&singular_values(m), rel_tol)
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cut-off.
pub fn pseudo_inverse(m: &CMat, rel_tol: f64) -> CMat {
    let (r, c) = m.shape();
    let d = svd(m);
    let mut out = zeros(c, r);
    for i in 0..kept(&d.sigma, rel_tol) {
        out += d.v.column(i) * d.u.column(i).adjoint() * Complex64::from(1.0 / d.sigma[i]);
    }
    out
}

pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the diagonal
/// phase correction.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    if n == 0 {
        return zeros(0, 0);
    }
    let qr = random_gaussian(rng, n, n).qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            out[(i, j)] = q[(i, j)] * phase;
        }
    }
    out
}
