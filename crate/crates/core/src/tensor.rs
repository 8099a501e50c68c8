//! Dense complex linear algebra over composite Hilbert spaces.
//!
//! Tensor factors are ordered leftmost-first and flattened big-endian: the
//! leftmost factor carries the most significant digit of a basis index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Tolerance for Hermiticity, unit trace and eigenvalue negativity.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Subsystem dimensions plus the mask of factors that belong to `S`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorStructure {
    dims: Vec<usize>,
    s_mask: Vec<bool>,
}

impl TensorStructure {
    pub fn new(dims: Vec<usize>, s_mask: Vec<bool>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::MalformedStructure("no tensor factors".into()));
        }
        if dims.len() != s_mask.len() {
            return Err(Error::MalformedStructure(format!(
                "{} dims but {} mask entries",
                dims.len(),
                s_mask.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::MalformedStructure("zero-dimensional factor".into()));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Overflow("total dimension exceeds usize".into()))?;
        Ok(Self { dims, s_mask })
    }

    /// Two factors, `S` first.
    pub fn bipartite(d_s: usize, d_a: usize) -> Result<Self> {
        Self::new(vec![d_s, d_a], vec![true, false])
    }

    /// A single factor entirely in `S`.
    pub fn single(d: usize) -> Result<Self> {
        Self::new(vec![d], vec![true])
    }

    /// `n` identical constituents of dimension `d_loc`; `s_sites` lists the
    /// constituents that form `S`.
    pub fn uniform(d_loc: usize, n: usize, s_sites: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &s in s_sites {
            if s >= n {
                return Err(Error::MalformedStructure(format!("site {s} outside chain of {n}")));
            }
            mask[s] = true;
        }
        Self::new(vec![d_loc; n], mask)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn s_mask(&self) -> &[bool] {
        &self.s_mask
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn s_factors(&self) -> Vec<usize> {
        (0..self.dims.len()).filter(|&k| self.s_mask[k]).collect()
    }

    pub fn a_factors(&self) -> Vec<usize> {
        (0..self.dims.len()).filter(|&k| !self.s_mask[k]).collect()
    }

    pub fn d_s(&self) -> usize {
        self.s_factors().iter().map(|&k| self.dims[k]).product()
    }

    pub fn d_a(&self) -> usize {
        self.a_factors().iter().map(|&k| self.dims[k]).product()
    }

    /// `S` nonempty and a proper subset of the factors.
    pub fn is_proper_bipartition(&self) -> bool {
        let ns = self.s_mask.iter().filter(|&&b| b).count();
        ns > 0 && ns < self.dims.len()
    }

    /// Factor ordering with all `S` factors first, each group in original order.
    pub fn s_first_order(&self) -> Vec<usize> {
        let mut order = self.s_factors();
        order.extend(self.a_factors());
        order
    }

    pub fn flatten(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            digits[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        digits
    }

    /// Structure of the listed factors, in the given order.
    pub fn select(&self, factors: &[usize]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyKeep);
        }
        Self::new(
            factors.iter().map(|&k| self.dims[k]).collect(),
            factors.iter().map(|&k| self.s_mask[k]).collect(),
        )
    }

    /// Same dims with every factor assigned to `S`.
    pub fn all_system(&self) -> Self {
        Self { dims: self.dims.clone(), s_mask: vec![true; self.dims.len()] }
    }

    /// Same dims with a new `S` mask.
    pub fn with_mask(&self, s_mask: Vec<bool>) -> Result<Self> {
        Self::new(self.dims.clone(), s_mask)
    }
}

/// `map[i]` is the index of basis state `i` after reordering the factors so
/// that new factor `j` is old factor `order[j]`.
pub fn permutation_map(dims: &[usize], order: &[usize]) -> Result<Vec<usize>> {
    let n = dims.len();
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::MalformedStructure("factor order has wrong length".into()));
    }
    for &k in order {
        if k >= n || seen[k] {
            return Err(Error::MalformedStructure("factor order is not a permutation".into()));
        }
        seen[k] = true;
    }
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let mut digits = vec![0usize; n];
    let mut map = Vec::with_capacity(total);
    for i in 0..total {
        let mut rest = i;
        for k in (0..n).rev() {
            digits[k] = rest % dims[k];
            rest /= dims[k];
        }
        let j = order
            .iter()
            .zip(&new_dims)
            .fold(0, |acc, (&k, &d)| acc * d + digits[k]);
        map.push(j);
    }
    Ok(map)
}

/// Reorders the tensor factors of a square operator.
pub fn permute_factors(mat: &ComplexMatrix, dims: &[usize], order: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if mat.nrows() != total || mat.ncols() != total {
        return Err(Error::DimensionMismatch { expected: total, found: mat.nrows() });
    }
    let map = permutation_map(dims, order)?;
    let mut out = ComplexMatrix::zeros(total, total);
    for j in 0..total {
        for i in 0..total {
            out[(map[i], map[j])] = mat[(i, j)];
        }
    }
    Ok(out)
}

/// Reorders the tensor factors of a state vector.
pub fn permute_vector(v: &ComplexVector, dims: &[usize], order: &[usize]) -> Result<ComplexVector> {
    let total: usize = dims.iter().product();
    if v.len() != total {
        return Err(Error::DimensionMismatch { expected: total, found: v.len() });
    }
    let map = permutation_map(dims, order)?;
    let mut out = ComplexVector::zeros(total);
    for (i, &j) in map.iter().enumerate() {
        out[j] = v[i];
    }
    Ok(out)
}

/// Inverse of a factor permutation.
pub fn inverse_order(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (j, &k) in order.iter().enumerate() {
        inv[k] = j;
    }
    inv
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

pub fn adjoint(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// Squared Schatten-2 norm, `Tr(X†X)`.
pub fn frobenius_sq(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Hermitian, unit-trace, positive semidefinite operator on a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    structure: TensorStructure,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and spectrum within [`HERMITIAN_TOL`].
    pub fn new(mat: ComplexMatrix, structure: TensorStructure) -> Result<Self> {
        let rho = Self::from_parts(mat, structure)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Checks shapes only. Used on outputs of trace- and positivity-preserving maps.
    pub(crate) fn from_parts(mat: ComplexMatrix, structure: TensorStructure) -> Result<Self> {
        let d = structure.total_dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: mat.nrows() });
        }
        Ok(Self { mat, structure })
    }

    /// `|ψ⟩⟨ψ|` for a normalized `ψ`.
    pub fn from_pure(psi: &ComplexVector, structure: TensorStructure) -> Result<Self> {
        let d = structure.total_dim();
        if psi.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: psi.len() });
        }
        let norm = psi.norm_squared();
        if (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::Unnormalized(norm));
        }
        Ok(Self { mat: psi * psi.adjoint(), structure })
    }

    pub fn maximally_mixed(structure: TensorStructure) -> Self {
        let d = structure.total_dim();
        let mat = ComplexMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        Self { mat, structure }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let mut herm = 0.0f64;
        for i in 0..d {
            for j in i..d {
                herm = herm.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:.3e})")));
        }
        let tr = self.mat.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = self.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn structure(&self) -> &TensorStructure {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Same operator, different `S` assignment.
    pub fn with_structure(&self, structure: TensorStructure) -> Result<Self> {
        Self::from_parts(self.mat.clone(), structure)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_part(&self.mat).symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&e| e > tol).count()
    }

    /// Reorders the tensor factors (and the mask with them).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mat = permute_factors(&self.mat, self.structure.dims(), order)?;
        let structure = self.structure.select(order)?;
        Ok(Self { mat, structure })
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }
}

pub(crate) fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Reduced state on the factors in `keep`, which stay in their original order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let st = rho.structure();
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&k) = keep.iter().find(|&&k| k >= st.n_factors()) {
        return Err(Error::MalformedStructure(format!("factor {k} does not exist")));
    }
    let traced: Vec<usize> = (0..st.n_factors()).filter(|k| !keep.contains(k)).collect();
    let mut order = keep.clone();
    order.extend(&traced);
    let m = permute_factors(rho.matrix(), st.dims(), &order)?;
    let dk: usize = keep.iter().map(|&k| st.dims()[k]).product();
    let dt: usize = traced.iter().map(|&k| st.dims()[k]).product();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                acc += m[(i * dt + t, j * dt + t)];
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix::from_parts(out, st.select(&keep)?)
}

/// Reduced state on the `S` factors.
pub fn reduce_to_system(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let s = rho.structure().s_factors();
    if s.is_empty() {
        return Err(Error::MissingBipartition);
    }
    partial_trace(rho, &s)
}

/// `Tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    frobenius_sq(rho.matrix())
}

/// Schatten-2 distance `‖a − b‖₂`.
pub fn hs_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(frobenius_sq(&(a.matrix() - b.matrix())).sqrt())
}

/// Tensor product of two density matrices; `S` masks are concatenated.
pub fn kron_states(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let mut dims = a.structure().dims().to_vec();
    dims.extend(b.structure().dims());
    let mut mask = a.structure().s_mask().to_vec();
    mask.extend(b.structure().s_mask());
    DensityMatrix::from_parts(kron(a.matrix(), b.matrix()), TensorStructure::new(dims, mask)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_density;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ket(d: usize, k: usize) -> ComplexVector {
        let mut v = ComplexVector::zeros(d);
        v[k] = c(1.0, 0.0);
        v
    }

    fn proj(d: usize, k: usize) -> ComplexMatrix {
        let v = ket(d, k);
        &v * v.adjoint()
    }

    fn bell() -> DensityMatrix {
        let s = 1.0 / 2f64.sqrt();
        let psi = ComplexVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        DensityMatrix::from_pure(&psi, TensorStructure::bipartite(2, 2).unwrap()).unwrap()
    }

    /// Element-wise `(a⊗b)_{(i,k),(j,l)} = a_ij b_kl`.
    fn kron_oracle(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
        ComplexMatrix::from_fn(ar * br, ac * bc, |r, col| {
            a[(r / br, col / bc)] * b[(r % br, col % bc)]
        })
    }

    /// Explicit double-index sum for a two-factor state.
    fn ptrace_oracle(m: &ComplexMatrix, d1: usize, d2: usize, keep_first: bool) -> ComplexMatrix {
        if keep_first {
            ComplexMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|t| m[(i * d2 + t, j * d2 + t)]).sum())
        } else {
            ComplexMatrix::from_fn(d2, d2, |i, j| (0..d1).map(|t| m[(t * d2 + i, t * d2 + j)]).sum())
        }
    }

    fn max_abs(m: &ComplexMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4, 4));
        assert_eq!(kron(&proj(2, 0), &proj(2, 1)), proj(4, 1));
    }

    #[test]
    fn kron_matches_index_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_density(2, 2, &mut rng).into_matrix();
            let b = random_density(2, 2, &mut rng).into_matrix() * c(0.3, -1.1);
            assert!(max_abs(&(kron(&a, &b) - kron_oracle(&a, &b))) == 0.0);
        }
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rs = random_density(2, 2, &mut rng);
        let ra = random_density(3, 3, &mut rng);
        let prod = kron_states(&rs, &ra).unwrap();
        let back = partial_trace(&prod, &[0]).unwrap();
        assert!(max_abs(&(back.matrix() - rs.matrix())) < 1e-12);

        let red = partial_trace(&bell(), &[0]).unwrap();
        assert!(max_abs(&(red.matrix() - ComplexMatrix::identity(2, 2) * c(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_index_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let st = TensorStructure::bipartite(2, 2).unwrap();
        for _ in 0..50 {
            let rho = random_density(4, 4, &mut rng).with_structure(st.clone()).unwrap();
            let first = partial_trace(&rho, &[0]).unwrap();
            let second = partial_trace(&rho, &[1]).unwrap();
            assert!(max_abs(&(first.matrix() - ptrace_oracle(rho.matrix(), 2, 2, true))) < 1e-12);
            assert!(max_abs(&(second.matrix() - ptrace_oracle(rho.matrix(), 2, 2, false))) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_errors() {
        assert_eq!(partial_trace(&bell(), &[]), Err(Error::EmptyKeep));
        assert!(matches!(partial_trace(&bell(), &[5]), Err(Error::MalformedStructure(_))));
    }

    #[test]
    fn purity_examples() {
        assert_abs_diff_eq!(purity(&bell()), 1.0, epsilon = 1e-14);
        let mm = DensityMatrix::maximally_mixed(TensorStructure::single(6).unwrap());
        assert_abs_diff_eq!(purity(&mm), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn purity_bounds_and_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for rank in 1..=5 {
            let rho = random_density(5, rank, &mut rng);
            let p = purity(&rho);
            assert!(p >= 1.0 / 5.0 - 1e-12 && p <= 1.0 + 1e-12);
            assert_eq!((p - 1.0).abs() < 1e-10, rank == 1);
            assert_eq!(rho.rank(1e-10), rank);
        }
    }

    #[test]
    fn hs_distance_examples() {
        let st = TensorStructure::single(2).unwrap();
        let zero = DensityMatrix::new(proj(2, 0), st.clone()).unwrap();
        let one = DensityMatrix::new(proj(2, 1), st).unwrap();
        assert_eq!(hs_distance(&zero, &zero).unwrap(), 0.0);
        assert_abs_diff_eq!(hs_distance(&zero, &one).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(hs_distance(&zero, &bell()), Err(Error::DimensionMismatch { .. })));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_density(4, 2, &mut rng);
            let b = random_density(4, 3, &mut rng);
            let mut acc = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    acc += (a.matrix()[(i, j)] - b.matrix()[(i, j)]).norm_sqr();
                }
            }
            assert_abs_diff_eq!(hs_distance(&a, &b).unwrap(), acc.sqrt(), epsilon = 1e-14);
            assert_abs_diff_eq!(hs_distance(&a, &b).unwrap(), hs_distance(&b, &a).unwrap(), epsilon = 0.0);
        }
    }

    #[test]
    fn validation_rejects_bad_states() {
        let st = TensorStructure::single(2).unwrap();
        let not_herm = ComplexMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(not_herm, st.clone()).is_err());
        let neg = ComplexMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(neg, st.clone()).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(2, 2), st).is_err());
        assert!(TensorStructure::new(vec![2, 0], vec![true, false]).is_err());
        assert!(TensorStructure::new(vec![2], vec![true, false]).is_err());
    }

    #[test]
    fn three_factor_trace_keeps_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(3, 2, &mut rng);
        let cc = random_density(2, 1, &mut rng);
        let abc = kron_states(&kron_states(&a, &b).unwrap(), &cc).unwrap();
        let ac = partial_trace(&abc, &[2, 0]).unwrap();
        let expected = kron(a.matrix(), cc.matrix());
        assert!(max_abs(&(ac.matrix() - expected)) < 1e-12);
        assert_eq!(ac.structure().dims(), &[2, 2]);
    }

    proptest! {
        #[test]
        fn flatten_round_trip(dims in prop::collection::vec(1usize..5, 1..5)) {
            let total: usize = dims.iter().product();
            prop_assume!(total <= 64);
            let st = TensorStructure::new(dims.clone(), vec![true; dims.len()]).unwrap();
            for i in 0..total {
                prop_assert_eq!(st.flatten(&st.unflatten(i)), i);
            }
        }

        #[test]
        fn permutation_round_trip(dims in prop::collection::vec(1usize..4, 1..5), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<usize> = (0..dims.len()).collect();
            order.shuffle(&mut rng);
            let total: usize = dims.iter().product();
            let rho = random_density(total, 2, &mut rng).into_matrix();
            let there = permute_factors(&rho, &dims, &order).unwrap();
            let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
            let back = permute_factors(&there, &new_dims, &inverse_order(&order)).unwrap();
            prop_assert!(max_abs(&(back - rho)) == 0.0);
        }

        #[test]
        fn partial_trace_preserves_trace_and_positivity(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let st = TensorStructure::new(vec![da, db], vec![true, false]).unwrap();
            let rho = random_density(da * db, 1 + (seed as usize % (da * db)), &mut rng)
                .with_structure(st).unwrap();
            for keep in [[0usize], [1usize]] {
                let red = partial_trace(&rho, &keep).unwrap();
                prop_assert!(red.validate().is_ok());
            }
        }
    }

    #[test]
    fn kron_then_trace_recovers_first_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..1000 {
            let a = random_density(2 + k % 2, 2, &mut rng);
            let b = random_density(3, 3, &mut rng).into_matrix() * c(0.7, 0.0);
            let st = TensorStructure::new(vec![a.dim(), 3], vec![true, false]).unwrap();
            let joint = DensityMatrix::from_parts(kron(a.matrix(), &b), st).unwrap();
            let red = partial_trace(&joint, &[0]).unwrap();
            let expected = a.matrix() * b.trace();
            assert!(max_abs(&(red.matrix() - expected)) < 1e-10);
        }
    }
}
