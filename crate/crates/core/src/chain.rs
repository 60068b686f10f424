//! Evaluation engine for amplified (block) multilinear maps.
//!
//! A level-`s` argument is held as `D` coordinate matrices of size `s×s`, one
//! per basis unit of `A`. The value of the map is
//!
//! ```text
//! Σ_idx (M_1(idx_1) ⋯ M_k(idx_k)) ⊗ C_{I mod n, J mod n}[idx]
//! ```
//!
//! where the `(I, J)` entry of the scalar chain product selects the `h×h`
//! output block. Prefix products are shared through a depth-first walk, and
//! branches whose coefficients all vanish are pruned.

use num_complex::Complex64;

use crate::blockmap::BlockView;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, ZERO};

pub(crate) struct Chain<'a> {
    d: usize,
    k: usize,
    h: usize,
    n: usize,
    coeffs: Vec<&'a [CMat]>,
    /// `live[l][p]`: some completion of the length-`l` prefix `p` has a
    /// non-zero coefficient in some entry.
    live: Vec<Vec<bool>>,
}

impl<'a> Chain<'a> {
    pub fn new<V: BlockView + ?Sized>(map: &'a V) -> Self {
        let d = map.algebra().dim();
        let k = map.arity();
        let n = map.block_size();
        let mut coeffs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                coeffs.push(map.entry(i, j).coeffs());
            }
        }
        let total = d.pow(k as u32);
        let mut last = vec![false; total];
        for (idx, flag) in last.iter_mut().enumerate() {
            *flag = coeffs.iter().any(|c| !linalg::is_zero(&c[idx]));
        }
        let mut live = vec![Vec::new(); k + 1];
        live[k] = last;
        for l in (0..k).rev() {
            let below = &live[l + 1];
            live[l] = (0..d.pow(l as u32)).map(|p| (0..d).any(|b| below[p * d + b])).collect();
        }
        Self { d, k, h: map.dim_h(), n, coeffs, live }
    }

    fn check_slots(&self, slots: &[Vec<CMat>]) -> Result<usize> {
        if slots.len() != self.k {
            return Err(Error::Arity { expected: self.k, got: slots.len() });
        }
        let s = slots[0].first().map(|m| m.nrows()).unwrap_or(0);
        if s == 0 || !s.is_multiple_of(self.n) {
            return Err(Error::Shape(format!("argument size {s} is not a positive multiple of {}", self.n)));
        }
        for slot in slots {
            if slot.len() != self.d || slot.iter().any(|m| m.shape() != (s, s)) {
                return Err(Error::Shape("inconsistent coordinate slices".into()));
            }
        }
        Ok(s)
    }

    /// Value of the map at level `s`, an `(s·h)×(s·h)` matrix.
    pub fn value(&self, slots: &[Vec<CMat>]) -> Result<CMat> {
        let s = self.check_slots(slots)?;
        let mut out = linalg::zeros(s * self.h, s * self.h);
        let nonzero = nonzero_flags(slots);
        let prefixes = self.products(slots, &nonzero, 0, self.k);
        for (idx, p) in &prefixes {
            self.accumulate(&mut out, *idx, p);
        }
        Ok(out)
    }

    fn accumulate(&self, out: &mut CMat, idx: usize, p: &CMat) {
        let (h, n) = (self.h, self.n);
        let s = p.nrows();
        for jj in 0..s {
            for ii in 0..s {
                let z = p[(ii, jj)];
                if z == ZERO {
                    continue;
                }
                let c = &self.coeffs[(ii % n) * n + jj % n][idx];
                for v in 0..h {
                    for u in 0..h {
                        out[(ii * h + u, jj * h + v)] += z * c[(u, v)];
                    }
                }
            }
        }
    }

    /// All non-vanishing products `M_from(b_from) ⋯ M_{to-1}(b_{to-1})`,
    /// keyed by the linear index of `(b_from, …, b_{to-1})`. When `from = 0`
    /// the branches are pruned by the coefficient support.
    fn products(&self, slots: &[Vec<CMat>], nonzero: &[Vec<bool>], from: usize, to: usize) -> Vec<(usize, CMat)> {
        let s = slots[0][0].nrows();
        let mut out = Vec::new();
        if from == to {
            out.push((0, linalg::identity(s)));
            return out;
        }
        let mut stack: Vec<(usize, usize, CMat)> = Vec::new();
        for b in (0..self.d).rev() {
            if nonzero[from][b] && (from != 0 || self.live[1][b]) {
                stack.push((from + 1, b, slots[from][b].clone()));
            }
        }
        while let Some((depth, idx, p)) = stack.pop() {
            if depth == to {
                out.push((idx, p));
                continue;
            }
            for b in (0..self.d).rev() {
                if !nonzero[depth][b] {
                    continue;
                }
                let next = idx * self.d + b;
                if from == 0 && !self.live[depth + 1][next] {
                    continue;
                }
                let q = &p * &slots[depth][b];
                if !linalg::is_zero(&q) {
                    stack.push((depth + 1, next, q));
                }
            }
        }
        out
    }

    /// Derivative of `Re u† F v` with respect to the coordinates of slot `l`:
    /// returns `G_b` with `d(u† F v) = Σ_b Σ_{a,c} G_b[a,c] dM_l(b)[a,c]`.
    /// The steepest-ascent direction is the entrywise conjugate.
    pub fn slot_gradient(&self, slots: &[Vec<CMat>], l: usize, u: &CVec, v: &CVec) -> Result<Vec<CMat>> {
        let s = self.check_slots(slots)?;
        let (h, n, d) = (self.h, self.n, self.d);
        let nonzero = nonzero_flags(slots);
        let prefixes = self.products(slots, &nonzero, 0, l);
        let suffixes = self.products(slots, &nonzero, l + 1, self.k);
        let stride = d.pow((self.k - l - 1) as u32);
        let mut grads = vec![linalg::zeros(s, s); d];
        let mut kmat = linalg::zeros(s, s);
        for (pi, left) in &prefixes {
            for (b, grad) in grads.iter_mut().enumerate() {
                let mut acc = linalg::zeros(s, s);
                let mut any = false;
                for (si, right) in &suffixes {
                    let idx = (pi * d + b) * stride + si;
                    if !self.live[self.k][idx] {
                        continue;
                    }
                    for jj in 0..s {
                        for ii in 0..s {
                            let c = &self.coeffs[(ii % n) * n + jj % n][idx];
                            let mut z = ZERO;
                            for w in 0..h {
                                let cv: Complex64 = (0..h).map(|x| c[(w, x)] * v[jj * h + x]).sum();
                                z += u[ii * h + w].conj() * cv;
                            }
                            kmat[(ii, jj)] = z;
                        }
                    }
                    acc += &kmat * right.transpose();
                    any = true;
                }
                if any {
                    *grad += left.transpose() * acc;
                }
            }
        }
        Ok(grads)
    }
}

fn nonzero_flags(slots: &[Vec<CMat>]) -> Vec<Vec<bool>> {
    slots.iter().map(|slot| slot.iter().map(|m| !linalg::is_zero(m)).collect()).collect()
}
