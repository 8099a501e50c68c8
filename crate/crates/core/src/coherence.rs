//! Bases, dephasing and the `c1` / `c2` coherence quantifiers.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    frobenius_sq, inverse_order, kron, permute_factors, ComplexMatrix, DensityMatrix, C64,
};

/// Column orthonormality tolerance for [`Basis::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-9;
/// Default tolerance on overlap moduli in [`mub_check`].
pub const MUB_TOL: f64 = 1e-8;

/// Which coherence quantifier to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Sum of moduli of off-diagonal entries.
    C1,
    /// Squared 2-norm of the off-diagonal part.
    C2,
}

impl Measure {
    pub fn eval(self, rho: &DensityMatrix, basis: &Basis) -> Result<f64> {
        match self {
            Measure::C1 => c1(rho, basis),
            Measure::C2 => c2(rho, basis),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::C1 => "c1",
            Measure::C2 => "c2",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c1" => Ok(Measure::C1),
            "c2" => Ok(Measure::C2),
            other => Err(Error::InvalidArgument(format!("unknown measure '{other}'"))),
        }
    }
}

/// Orthonormal basis stored as a unitary whose columns are the basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    vectors: ComplexMatrix,
    label: String,
}

impl Basis {
    pub fn new(vectors: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        let d = vectors.nrows();
        if d == 0 || vectors.ncols() != d {
            return Err(Error::InvalidBasis(format!(
                "expected a square matrix, got {}x{}",
                vectors.nrows(),
                vectors.ncols()
            )));
        }
        let gram = vectors.adjoint() * &vectors;
        let residual = (gram - ComplexMatrix::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if residual > ORTHONORMAL_TOL {
            return Err(Error::InvalidBasis(format!("columns not orthonormal (residual {residual:.3e})")));
        }
        Ok(Self { vectors, label: label.into() })
    }

    pub fn computational(dim: usize) -> Self {
        Self { vectors: ComplexMatrix::identity(dim, dim), label: "z".into() }
    }

    /// Discrete Fourier vectors `F_{jk} = ω^{jk}/√d`.
    pub fn fourier(dim: usize) -> Self {
        Self { vectors: dft_matrix(dim), label: "fourier".into() }
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn projector(&self, k: usize) -> ComplexMatrix {
        let v = self.vectors.column(k);
        v * v.adjoint()
    }

    /// `U† X U`: the operator expressed in this basis.
    pub fn to_frame(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.vectors.adjoint() * x * &self.vectors
    }

    /// `U X U†`: back from this basis to the computational frame.
    pub fn from_frame(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &self.vectors * x * self.vectors.adjoint()
    }

    /// Product basis, `self` as the leftmost factor.
    pub fn tensor(&self, other: &Basis) -> Basis {
        Basis {
            vectors: kron(&self.vectors, &other.vectors),
            label: format!("{}⊗{}", self.label, other.label),
        }
    }

    /// Rotates the basis by its own Fourier transform; the result is unbiased
    /// to `self`.
    pub fn fourier_rotated(&self) -> Basis {
        Basis {
            vectors: &self.vectors * dft_matrix(self.dim()),
            label: format!("fourier({})", self.label),
        }
    }

    pub(crate) fn is_identity(&self) -> bool {
        self.label == "z" && self.vectors == ComplexMatrix::identity(self.dim(), self.dim())
    }

    pub fn to_record(&self) -> BasisRecord {
        BasisRecord {
            dim: self.dim(),
            label: self.label.clone(),
            vectors: self.vectors.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_record(rec: &BasisRecord) -> Result<Self> {
        if rec.vectors.len() != rec.dim * rec.dim {
            return Err(Error::InvalidBasis(format!(
                "expected {} entries, found {}",
                rec.dim * rec.dim,
                rec.vectors.len()
            )));
        }
        let m = ComplexMatrix::from_iterator(
            rec.dim,
            rec.dim,
            rec.vectors.iter().map(|&[re, im]| C64::new(re, im)),
        );
        Basis::new(m, rec.label.clone())
    }
}

/// JSON form of a basis: column entries flattened column by column as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub dim: usize,
    pub label: String,
    pub vectors: Vec<[f64; 2]>,
}

impl Serialize for Basis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Basis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = BasisRecord::deserialize(d)?;
        Basis::from_record(&rec).map_err(serde::de::Error::custom)
    }
}

/// `B = B_S ⊗ B_A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizedBasis {
    pub bs: Basis,
    pub ba: Basis,
}

impl FactorizedBasis {
    pub fn new(bs: Basis, ba: Basis) -> Self {
        Self { bs, ba }
    }

    pub fn computational(d_s: usize, d_a: usize) -> Self {
        Self::new(Basis::computational(d_s), Basis::computational(d_a))
    }

    pub fn full(&self) -> Basis {
        self.bs.tensor(&self.ba)
    }

    pub fn dim(&self) -> usize {
        self.bs.dim() * self.ba.dim()
    }
}

pub fn dft_matrix(dim: usize) -> ComplexMatrix {
    let norm = 1.0 / (dim as f64).sqrt();
    ComplexMatrix::from_fn(dim, dim, |j, k| {
        let phase = 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
        C64::from_polar(norm, phase)
    })
}

pub fn fourier_basis(dim: usize) -> Result<Basis> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Ok(Basis::fourier(dim))
}

fn check_dim(rho: &DensityMatrix, basis: &Basis) -> Result<()> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: rho.dim() });
    }
    Ok(())
}

/// `Σ_k χ_k ρ χ_k`.
pub fn dephase(rho: &DensityMatrix, basis: &Basis) -> Result<DensityMatrix> {
    check_dim(rho, basis)?;
    let framed = basis.to_frame(rho.matrix());
    let diag = ComplexMatrix::from_diagonal(&framed.diagonal());
    DensityMatrix::from_parts(basis.from_frame(&diag), rho.structure().clone())
}

/// `Σ_i (I_S ⊗ ω_i) ρ (I_S ⊗ ω_i)` for the `A` factors of `rho`'s structure.
pub fn partial_dephase(rho: &DensityMatrix, basis_a: &Basis) -> Result<DensityMatrix> {
    let st = rho.structure();
    if st.s_factors().is_empty() {
        return Err(Error::MissingBipartition);
    }
    let (d_s, d_a) = (st.d_s(), st.d_a());
    if basis_a.dim() != d_a {
        return Err(Error::DimensionMismatch { expected: d_a, found: basis_a.dim() });
    }
    let order = st.s_first_order();
    let m = permute_factors(rho.matrix(), st.dims(), &order)?;
    let back = dephase_ancilla(&m, d_s, basis_a);
    let new_dims: Vec<usize> = order.iter().map(|&k| st.dims()[k]).collect();
    let restored = permute_factors(&back, &new_dims, &inverse_order(&order))?;
    DensityMatrix::from_parts(restored, st.clone())
}

/// Partial dephasing of an operator already ordered `S` first.
pub(crate) fn dephase_ancilla(m: &ComplexMatrix, d_s: usize, basis_a: &Basis) -> ComplexMatrix {
    let d_a = basis_a.dim();
    let frame = kron(&ComplexMatrix::identity(d_s, d_s), basis_a.vectors());
    let mut framed = if basis_a.is_identity() { m.clone() } else { frame.adjoint() * m * &frame };
    for col in 0..framed.ncols() {
        for r in 0..framed.nrows() {
            if r % d_a != col % d_a {
                framed[(r, col)] = C64::new(0.0, 0.0);
            }
        }
    }
    if basis_a.is_identity() {
        framed
    } else {
        &frame * framed * frame.adjoint()
    }
}

/// Off-diagonal squared 2-norm of an arbitrary operator in `basis`.
pub(crate) fn c2_operator(x: &ComplexMatrix, basis: &Basis) -> f64 {
    let m = if basis.is_identity() { x.clone() } else { basis.to_frame(x) };
    let diag: f64 = m.diagonal().iter().map(|z| z.norm_sqr()).sum();
    (frobenius_sq(&m) - diag).max(0.0)
}

pub(crate) fn c1_operator(x: &ComplexMatrix, basis: &Basis) -> f64 {
    let m = if basis.is_identity() { x.clone() } else { basis.to_frame(x) };
    let mut acc = 0.0;
    for col in 0..m.ncols() {
        for r in 0..m.nrows() {
            if r != col {
                acc += m[(r, col)].norm();
            }
        }
    }
    acc
}

/// `Pur(ρ) − Pur(D_B ρ)`.
pub fn c2(rho: &DensityMatrix, basis: &Basis) -> Result<f64> {
    check_dim(rho, basis)?;
    Ok(c2_operator(rho.matrix(), basis))
}

/// `l1` norm of the off-diagonal part of `ρ` written in `basis`.
pub fn c1(rho: &DensityMatrix, basis: &Basis) -> Result<f64> {
    check_dim(rho, basis)?;
    Ok(c1_operator(rho.matrix(), basis))
}

/// True iff every overlap modulus `|⟨b1_j|b2_k⟩|` equals `d^{-1/2}` within `tol`.
pub fn mub_check(b1: &Basis, b2: &Basis, tol: f64) -> Result<bool> {
    if b1.dim() != b2.dim() {
        return Err(Error::DimensionMismatch { expected: b1.dim(), found: b2.dim() });
    }
    let target = 1.0 / (b1.dim() as f64).sqrt();
    let overlaps = b1.vectors().adjoint() * b2.vectors();
    Ok(overlaps.iter().all(|z| (z.norm() - target).abs() <= tol))
}

/// Coherence of `ρ_S = Σ_a |c_a|² |ξ_a⟩⟨ξ_a|` evaluated directly from Schmidt
/// data; `coeffs[a]` pairs with column `a` of `xi`.
pub fn schmidt_coherence(coeffs: &[C64], xi: &Basis, target: &Basis, measure: Measure) -> Result<f64> {
    if xi.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: xi.dim(), found: target.dim() });
    }
    if coeffs.is_empty() || coeffs.len() > xi.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} Schmidt coefficients for dimension {}",
            coeffs.len(),
            xi.dim()
        )));
    }
    let weights: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized(total));
    }
    let d = xi.dim();
    // overlap[(a, k)] = ⟨ξ_a|k⟩
    let overlap = xi.vectors().adjoint() * target.vectors();
    match measure {
        Measure::C2 => {
            let first: f64 = weights.iter().map(|w| w * w).sum();
            let second: f64 = (0..d)
                .map(|k| {
                    let pk: f64 = weights.iter().enumerate().map(|(a, w)| w * overlap[(a, k)].norm_sqr()).sum();
                    pk * pk
                })
                .sum();
            Ok((first - second).max(0.0))
        }
        Measure::C1 => {
            let mut acc = 0.0;
            for k in 0..d {
                for kp in 0..d {
                    if k == kp {
                        continue;
                    }
                    let s: C64 = weights
                        .iter()
                        .enumerate()
                        .map(|(a, w)| overlap[(a, k)] * overlap[(a, kp)].conj() * *w)
                        .sum();
                    acc += s.norm();
                }
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, random_basis, random_density};
    use crate::tensor::{hs_distance, purity, ComplexVector, TensorStructure};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn plus() -> DensityMatrix {
        let s = 1.0 / 2f64.sqrt();
        DensityMatrix::from_pure(
            &ComplexVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]),
            TensorStructure::single(2).unwrap(),
        )
        .unwrap()
    }

    fn bell() -> DensityMatrix {
        let s = 1.0 / 2f64.sqrt();
        let psi = ComplexVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        DensityMatrix::from_pure(&psi, TensorStructure::bipartite(2, 2).unwrap()).unwrap()
    }

    fn max_abs(m: &ComplexMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn projector_sum(rho: &DensityMatrix, basis: &Basis) -> ComplexMatrix {
        (0..basis.dim())
            .map(|k| {
                let p = basis.projector(k);
                &p * rho.matrix() * &p
            })
            .fold(ComplexMatrix::zeros(rho.dim(), rho.dim()), |acc, x| acc + x)
    }

    #[test]
    fn dephase_examples() {
        let z = Basis::computational(2);
        let mixed = plus();
        let out = dephase(&mixed, &z).unwrap();
        assert!(max_abs(&(out.matrix() - ComplexMatrix::identity(2, 2) * c(0.5, 0.0))) < 1e-15);
        let diag = dephase(&out, &z).unwrap();
        assert_eq!(diag.matrix(), out.matrix());

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let rho = random_density(4, 3, &mut rng);
            let b = random_basis(4, &mut rng);
            let fast = dephase(&rho, &b).unwrap();
            assert!(max_abs(&(fast.matrix() - projector_sum(&rho, &b))) < 1e-12);
        }
    }

    #[test]
    fn dephase_is_idempotent_and_purity_decreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let rho = random_density(5, 2, &mut rng);
            let b = random_basis(5, &mut rng);
            let once = dephase(&rho, &b).unwrap();
            let twice = dephase(&once, &b).unwrap();
            assert!(max_abs(&(once.matrix() - twice.matrix())) < 1e-10);
            assert_abs_diff_eq!(once.trace().re, 1.0, epsilon = 1e-10);
            assert!(purity(&once) <= purity(&rho) + 1e-10);
        }
    }

    #[test]
    fn partial_dephase_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rs = random_density(2, 2, &mut rng);
        let zero = DensityMatrix::from_pure(
            &ComplexVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            TensorStructure::single(2).unwrap(),
        )
        .unwrap();
        let prod = crate::tensor::kron_states(&rs, &zero.with_structure(TensorStructure::new(vec![2], vec![false]).unwrap()).unwrap()).unwrap();
        let out = partial_dephase(&prod, &Basis::computational(2)).unwrap();
        assert!(max_abs(&(out.matrix() - prod.matrix())) < 1e-15);

        let out = partial_dephase(&bell(), &Basis::computational(2)).unwrap();
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 0)] = c(0.5, 0.0);
        expected[(3, 3)] = c(0.5, 0.0);
        assert!(max_abs(&(out.matrix() - expected)) < 1e-15);

        let no_split = bell().with_structure(TensorStructure::new(vec![2, 2], vec![false, false]).unwrap()).unwrap();
        assert_eq!(partial_dephase(&no_split, &Basis::computational(4)), Err(Error::MissingBipartition));
    }

    #[test]
    fn partial_dephase_matches_conditional_blocks() {
        // Σ_i Tr_A(ρ I⊗ω_i) ⊗ ω_i
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let st = TensorStructure::bipartite(2, 3).unwrap();
        for _ in 0..30 {
            let rho = random_density(6, 4, &mut rng).with_structure(st.clone()).unwrap();
            let ba = random_basis(3, &mut rng);
            let mut expected = ComplexMatrix::zeros(6, 6);
            for i in 0..3 {
                let omega = ba.projector(i);
                let proj = kron(&ComplexMatrix::identity(2, 2), &omega);
                let block = DensityMatrix::from_parts(rho.matrix() * &proj, st.clone()).unwrap();
                let red = crate::tensor::partial_trace(&block, &[0]).unwrap();
                expected += kron(red.matrix(), &omega);
            }
            let got = partial_dephase(&rho, &ba).unwrap();
            assert!(max_abs(&(got.matrix() - expected)) < 1e-12);
        }
    }

    #[test]
    fn total_dephasing_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let st = TensorStructure::bipartite(3, 2).unwrap();
        for _ in 0..100 {
            let rho = random_density(6, 3, &mut rng).with_structure(st.clone()).unwrap();
            let fb = FactorizedBasis::new(random_basis(3, &mut rng), random_basis(2, &mut rng));
            let total = dephase(&rho, &fb.full()).unwrap();
            let partial = partial_dephase(&rho, &fb.ba).unwrap();
            // D_{B_S} acting on S only: dephase S blocks in B_S, keeping A indices.
            let s_only = {
                let frame = kron(fb.bs.vectors(), &ComplexMatrix::identity(2, 2));
                let mut m = frame.adjoint() * partial.matrix() * &frame;
                for r in 0..6 {
                    for col in 0..6 {
                        if r / 2 != col / 2 {
                            m[(r, col)] = c(0.0, 0.0);
                        }
                    }
                }
                &frame * m * frame.adjoint()
            };
            assert!(max_abs(&(total.matrix() - s_only)) < 1e-12);
        }
    }

    #[test]
    fn c2_examples() {
        assert_abs_diff_eq!(c2(&plus(), &Basis::computational(2)).unwrap(), 0.5, epsilon = 1e-15);
        let z = Basis::computational(2);
        let diag = dephase(&plus(), &z).unwrap();
        assert_eq!(c2(&diag, &z).unwrap(), 0.0);
        assert!(matches!(c2(&bell(), &z), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn c2_zero_iff_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let rho = random_density(4, 2, &mut rng);
            let b = random_basis(4, &mut rng);
            let fixed = dephase(&rho, &b).unwrap();
            assert!(c2(&fixed, &b).unwrap() < 1e-14);
            let moved = hs_distance(&fixed, &rho).unwrap();
            assert!(moved > 1e-6);
            assert!(c2(&rho, &b).unwrap() > 1e-12);
            assert_abs_diff_eq!(c2(&rho, &b).unwrap(), moved * moved, epsilon = 1e-12);
        }
    }

    #[test]
    fn c1_examples() {
        assert_abs_diff_eq!(c1(&plus(), &Basis::computational(2)).unwrap(), 1.0, epsilon = 1e-15);
        for d in 2..7 {
            let amp = c(1.0 / (d as f64).sqrt(), 0.0);
            let psi = ComplexVector::from_element(d, amp);
            let rho = DensityMatrix::from_pure(&psi, TensorStructure::single(d).unwrap()).unwrap();
            assert_abs_diff_eq!(c1(&rho, &Basis::computational(d)).unwrap(), (d - 1) as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn c1_matches_off_diagonal_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..50 {
            let rho = random_density(4, 3, &mut rng);
            let b = random_basis(4, &mut rng);
            let mut acc = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        let bi = b.vectors().column(i);
                        let bj = b.vectors().column(j);
                        acc += (bi.adjoint() * rho.matrix() * bj)[(0, 0)].norm();
                    }
                }
            }
            assert_abs_diff_eq!(c1(&rho, &b).unwrap(), acc, epsilon = 1e-12);
        }
    }

    #[test]
    fn fourier_examples() {
        let h = fourier_basis(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let expected = ComplexMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        assert!(max_abs(&(h.vectors() - expected)) < 1e-15);
        for d in [2, 3, 4, 5, 8] {
            let f = fourier_basis(d).unwrap();
            for z in f.vectors().iter() {
                assert_abs_diff_eq!(z.norm_sqr(), 1.0 / d as f64, epsilon = 1e-14);
            }
        }
        for d in [2, 3, 4, 8] {
            assert!(mub_check(&Basis::computational(d), &fourier_basis(d).unwrap(), MUB_TOL).unwrap());
        }
        assert!(fourier_basis(0).is_err());
    }

    #[test]
    fn mub_examples() {
        let z = Basis::computational(2);
        assert!(!mub_check(&z, &z, MUB_TOL).unwrap());
        assert!(mub_check(&z, &Basis::fourier(2), MUB_TOL).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            assert!(!mub_check(&Basis::computational(3), &random_basis(3, &mut rng), MUB_TOL).unwrap());
        }
        assert!(mub_check(&z, &Basis::computational(3), MUB_TOL).is_err());
    }

    fn assemble(coeffs: &[C64], xi: &Basis) -> DensityMatrix {
        let d = xi.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (a, c) in coeffs.iter().enumerate() {
            m += xi.projector(a) * C64::new(c.norm_sqr(), 0.0);
        }
        DensityMatrix::new(m, TensorStructure::single(d).unwrap()).unwrap()
    }

    #[test]
    fn schmidt_coherence_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for d in [2, 3, 4] {
            let xi = random_basis(d, &mut rng);
            let target = xi.fourier_rotated();
            let single = schmidt_coherence(&[c(1.0, 0.0)], &xi, &target, Measure::C2).unwrap();
            assert_abs_diff_eq!(single, 1.0 - 1.0 / d as f64, epsilon = 1e-12);
            for r in 1..=d {
                let flat = vec![c(1.0 / (r as f64).sqrt(), 0.0); r];
                let v = schmidt_coherence(&flat, &xi, &target, Measure::C2).unwrap();
                assert_abs_diff_eq!(v, 1.0 / r as f64 - 1.0 / d as f64, epsilon = 1e-12);
            }
        }
        assert!(matches!(
            schmidt_coherence(&[c(0.5, 0.0)], &Basis::computational(2), &Basis::fourier(2), Measure::C2),
            Err(Error::Unnormalized(_))
        ));
    }

    #[test]
    fn schmidt_coherence_matches_assembled_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let d = 4;
            let xi = random_basis(d, &mut rng);
            let target = random_basis(d, &mut rng);
            let u = haar_unitary(d, &mut rng);
            let mut coeffs: Vec<C64> = (0..3).map(|a| u[(a, 0)]).collect();
            let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            coeffs.iter_mut().for_each(|c| *c /= norm);
            let rho = assemble(&coeffs, &xi);
            for m in [Measure::C1, Measure::C2] {
                let direct = schmidt_coherence(&coeffs, &xi, &target, m).unwrap();
                assert_abs_diff_eq!(direct, m.eval(&rho, &target).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lipschitz_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for k in 0..1000 {
            let a = random_density(4, 1 + k % 4, &mut rng);
            let b = random_density(4, 1 + (k / 4) % 4, &mut rng);
            let basis = random_basis(4, &mut rng);
            let lhs = (c2(&a, &basis).unwrap() - c2(&b, &basis).unwrap()).abs();
            assert!(lhs <= 2.0 * hs_distance(&a, &b).unwrap() + 1e-12);
        }
    }

    #[test]
    fn unbiased_to_eigenbasis_is_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let rho = random_density(3, 3, &mut rng);
            let eig = nalgebra::SymmetricEigen::new(rho.matrix().clone());
            let eigbasis = Basis::new(eig.eigenvectors.clone(), "eig").unwrap();
            let best = c2(&rho, &eigbasis.fourier_rotated()).unwrap();
            for _ in 0..200 {
                assert!(c2(&rho, &random_basis(3, &mut rng)).unwrap() <= best + 1e-12);
            }
        }
    }

    #[test]
    fn basis_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let b = random_basis(3, &mut rng);
        let json = serde_json::to_string(&b).unwrap();
        let back: Basis = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
        let rec: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(rec["dim"], 3);
        assert_eq!(rec["vectors"].as_array().unwrap().len(), 9);
    }
}
