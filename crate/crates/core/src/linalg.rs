//! Complex vector/matrix primitives shared by every beamformer.
//!
//! Storage is `nalgebra` dense (column-major). The recursive inverse update
//! runs on raw slices because it sits in the innermost loop of the online
//! segmenter.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `aᴴ b`.
#[inline]
pub fn dot_h(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(ZERO, |acc, (ai, bi)| acc + ai.conj() * bi)
}

#[inline]
pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

pub fn all_finite(a: &[C64]) -> bool {
    a.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// `y = A x` for a square column-major matrix stored in `a`.
#[inline]
pub(crate) fn matvec_into(a: &[C64], dim: usize, x: &[C64], y: &mut [C64]) {
    y.iter_mut().for_each(|v| *v = ZERO);
    for (j, xj) in x.iter().enumerate() {
        if xj.re == 0.0 && xj.im == 0.0 {
            continue;
        }
        let col = &a[j * dim..(j + 1) * dim];
        for (yi, aij) in y.iter_mut().zip(col) {
            *yi += aij * xj;
        }
    }
}

/// `xᴴ A x` for Hermitian `A`; the imaginary rounding residue is dropped.
pub fn hermitian_form(a: &CMatrix, x: &[C64]) -> f64 {
    let dim = a.nrows();
    let mut ax = vec![ZERO; dim];
    matvec_into(a.as_slice(), dim, x, &mut ax);
    dot_h(x, &ax).re
}

/// Unnormalized Gram matrix `X Xᴴ` of a `p × n` snapshot block.
pub fn gram(x: &CMatrix) -> CMatrix {
    x * x.adjoint()
}

/// Adds `x xᴴ` (scaled by `sign`) to a Hermitian accumulator in place.
pub(crate) fn accumulate_outer(acc: &mut CMatrix, x: &[C64], sign: f64) {
    let dim = acc.nrows();
    let data = acc.as_mut_slice();
    for (j, xj) in x.iter().enumerate() {
        let cj = xj.conj() * sign;
        let col = &mut data[j * dim..(j + 1) * dim];
        for (entry, xi) in col.iter_mut().zip(x) {
            *entry += xi * cj;
        }
    }
}

/// Inverse of a loaded Gram matrix `δI + Σ x xᴴ`, maintained by rank-1 updates.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianState {
    inv: CMatrix,
    loading: f64,
}

/// Byproducts of one rank-1 inverse update.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Step {
    /// `u = S⁻¹ x` computed with the inverse before the update.
    pub gain: CVector,
    /// `γ = 1 + Re(xᴴ u)`, always ≥ 1.
    pub gamma: f64,
    /// Largest absolute entry change made by the Hermitian re-symmetrization.
    pub asymmetry: f64,
}

impl HermitianState {
    /// Starts from `δ⁻¹ I`, the inverse of the loading alone.
    pub fn new(dim: usize, loading: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::contract("dimension must be positive"));
        }
        if !(loading.is_finite() && loading > 0.0) {
            return Err(Error::contract(format!(
                "diagonal loading must be positive and finite, got {loading}"
            )));
        }
        Ok(Self {
            inv: CMatrix::from_diagonal_element(dim, dim, C64::new(1.0 / loading, 0.0)),
            loading,
        })
    }

    pub fn dim(&self) -> usize {
        self.inv.nrows()
    }

    pub fn loading(&self) -> f64 {
        self.loading
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.inv
    }

    /// `S⁻¹ v`.
    pub fn apply(&self, v: &[C64]) -> CVector {
        let dim = self.dim();
        let mut out = CVector::zeros(dim);
        matvec_into(self.inv.as_slice(), dim, v, out.as_mut_slice());
        out
    }

    /// Folds one snapshot into the inverse with the Woodbury identity:
    /// `S⁻¹ ← S⁻¹ − u uᴴ / γ`, `u = S⁻¹x`, `γ = 1 + xᴴu`.
    pub fn rank1_update(&mut self, x: &[C64]) -> Result<Rank1Step> {
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::contract(format!(
                "snapshot has {} entries, state dimension is {dim}",
                x.len()
            )));
        }
        if !all_finite(x) {
            return Err(Error::numeric("non-finite snapshot entry"));
        }

        let mut u = CVector::zeros(dim);
        matvec_into(self.inv.as_slice(), dim, x, u.as_mut_slice());
        let gamma = 1.0 + dot_h(x, u.as_slice()).re;
        if !gamma.is_finite() {
            return Err(Error::numeric("non-finite Woodbury normalizer"));
        }
        let asymmetry = self.subtract_outer_symmetrized(u.as_slice(), gamma);
        Ok(Rank1Step {
            gain: u,
            gamma,
            asymmetry,
        })
    }

    /// `inv ← inv − u uᴴ/γ` followed by `inv ← (inv + invᴴ)/2`, fused into one pass.
    fn subtract_outer_symmetrized(&mut self, u: &[C64], gamma: f64) -> f64 {
        let dim = self.dim();
        let scale = 1.0 / gamma;
        let data = self.inv.as_mut_slice();
        let mut asymmetry = 0.0f64;
        for j in 0..dim {
            let uj = u[j] * scale;
            for i in 0..j {
                let ui = u[i] * scale;
                // (i, j) lives at i + j*dim, (j, i) at j + i*dim.
                let a = data[i + j * dim] - u[i] * uj.conj();
                let b = data[j + i * dim] - u[j] * ui.conj();
                let mean = (a + b.conj()) * 0.5;
                asymmetry = asymmetry.max((a - mean).norm());
                data[i + j * dim] = mean;
                data[j + i * dim] = mean.conj();
            }
            let d = data[j + j * dim] - u[j] * uj.conj();
            asymmetry = asymmetry.max(d.im.abs());
            data[j + j * dim] = C64::new(d.re, 0.0);
        }
        asymmetry
    }
}

/// Solves `A w = b` for Hermitian positive definite `A` by Cholesky factorization.
pub fn hermitian_solve(matrix: CMatrix, b: &[C64]) -> Result<CVector> {
    let dim = matrix.nrows();
    if matrix.ncols() != dim || b.len() != dim {
        return Err(Error::contract(format!(
            "expected a square {dim}x{dim} system with matching rhs, got {}x{} and {}",
            matrix.nrows(),
            matrix.ncols(),
            b.len()
        )));
    }
    if !all_finite(matrix.as_slice()) || !all_finite(b) {
        return Err(Error::numeric("non-finite entry in Hermitian solve"));
    }
    let chol = Cholesky::new(matrix)
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    Ok(chol.solve(&CVector::from_column_slice(b)))
}

/// Solves `(G + δI) w = b` for a Hermitian Gram matrix `G` and `δ > 0`.
pub fn solve_loaded(gram: &CMatrix, b: &[C64], delta: f64) -> Result<CVector> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::contract(format!(
            "diagonal loading must be positive and finite, got {delta}"
        )));
    }
    let mut loaded = gram.clone();
    let dim = loaded.nrows().min(loaded.ncols());
    for k in 0..dim {
        loaded[(k, k)] += delta;
    }
    hermitian_solve(loaded, b)
}

/// Returns `(X Xᴴ + δI)⁻¹ b` for a `p × n` data block (`n` may be zero).
pub fn regularized_gram_solve(x: &CMatrix, b: &[C64], delta: f64) -> Result<CVector> {
    if x.nrows() != b.len() {
        return Err(Error::contract(format!(
            "data has {} rows, rhs has {} entries",
            x.nrows(),
            b.len()
        )));
    }
    solve_loaded(&gram(x), b, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn zero_snapshot_leaves_state_unchanged() {
        let mut state = HermitianState::new(4, 0.5).unwrap();
        let before = state.clone();
        let step = state.rank1_update(&[ZERO; 4]).unwrap();
        assert_eq!(step.gamma, 1.0);
        assert_eq!(state, before);
    }

    #[test]
    fn unit_basis_update_from_identity() {
        let mut state = HermitianState::new(3, 1.0).unwrap();
        let step = state.rank1_update(&[ONE, ZERO, ZERO]).unwrap();
        assert_eq!(step.gamma, 2.0);
        let mut expected = CMatrix::identity(3, 3);
        expected[(0, 0)] = C64::new(0.5, 0.0);
        assert_eq!(state.inverse(), &expected);
    }

    #[test]
    fn fifty_updates_match_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = 6;
        let delta = 0.3;
        let mut state = HermitianState::new(p, delta).unwrap();
        let mut direct = CMatrix::from_diagonal_element(p, p, C64::new(delta, 0.0));
        for _ in 0..50 {
            let x = random_vec(&mut rng, p);
            state.rank1_update(&x).unwrap();
            accumulate_outer(&mut direct, &x, 1.0);
        }
        let oracle = direct.try_inverse().unwrap();
        assert!(rel_frobenius(state.inverse(), &oracle) < 1e-8);
    }

    #[test]
    fn dimension_mismatch_is_contract_error() {
        let mut state = HermitianState::new(3, 1.0).unwrap();
        assert!(matches!(
            state.rank1_update(&[ONE; 2]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn non_finite_snapshot_is_numeric_error() {
        let mut state = HermitianState::new(2, 1.0).unwrap();
        let bad = [C64::new(f64::NAN, 0.0), ONE];
        assert!(matches!(state.rank1_update(&bad), Err(Error::Numeric(_))));
    }

    #[test]
    fn bad_loading_rejected() {
        assert!(HermitianState::new(2, 0.0).is_err());
        assert!(HermitianState::new(2, f64::INFINITY).is_err());
        assert!(HermitianState::new(0, 1.0).is_err());
    }

    #[test]
    fn empty_block_solve_scales_rhs() {
        let nu = vec![ONE, C64::new(0.0, 2.0), C64::new(-1.0, 0.5)];
        let x = CMatrix::zeros(3, 0);
        let w = regularized_gram_solve(&x, &nu, 4.0).unwrap();
        for (wi, ni) in w.iter().zip(&nu) {
            assert!((wi - ni / 4.0).norm() < 1e-15);
        }
    }

    #[test]
    fn all_zero_columns_scale_rhs() {
        let b = vec![ONE, C64::new(3.0, -1.0)];
        let x = CMatrix::zeros(2, 7);
        let w = regularized_gram_solve(&x, &b, 0.5).unwrap();
        for (wi, bi) in w.iter().zip(&b) {
            assert!((wi - bi / 0.5).norm() < 1e-15);
        }
    }

    #[test]
    fn gram_solve_matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (p, n) = (5, 20);
        let x = CMatrix::from_column_slice(p, n, &random_vec(&mut rng, p * n));
        let b = random_vec(&mut rng, p);
        let w = regularized_gram_solve(&x, &b, 0.1).unwrap();
        let mut loaded = &x * x.adjoint();
        for k in 0..p {
            loaded[(k, k)] += C64::new(0.1, 0.0);
        }
        let oracle = loaded.try_inverse().unwrap() * CVector::from_column_slice(&b);
        assert!((&w - &oracle).norm() / oracle.norm() < 1e-10);
    }

    #[test]
    fn gram_solve_rejects_non_finite() {
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 1)] = C64::new(f64::INFINITY, 0.0);
        assert!(matches!(
            regularized_gram_solve(&x, &[ONE, ONE], 1.0),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn symmetrization_changes_entries_negligibly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = 12;
        let mut state = HermitianState::new(p, 1e-2).unwrap();
        for _ in 0..2000 {
            let x = random_vec(&mut rng, p);
            let scale = state.inverse().norm();
            let step = state.rank1_update(&x).unwrap();
            assert!(step.gamma >= 1.0);
            assert!(step.asymmetry <= 1e-9 * scale);
        }
    }
}
