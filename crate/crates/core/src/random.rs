//! Random states, seeded Monte Carlo averages and their closed forms.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{Basis, FactorizedBasis, Measure};
use crate::error::{Error, Result};
use crate::localization::{c_nonselective, c_postselected, c_trace, full_coherence};
use crate::tensor::{
    inverse_order, kron_vec, permute_vector, ComplexMatrix, ComplexVector, DensityMatrix, TensorStructure, C64,
};

/// Smallest sample count accepted by [`mc_estimate`].
pub const MIN_SAMPLES: usize = 100;

/// Independent generator for sample `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
///
/// Each column of `Q` is multiplied by the phase of the matching diagonal
/// entry of `R`, which makes the factorization unique and the result Haar.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let (mut q, r) = ginibre(dim, dim, rng).qr().unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random pure state vector.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector {
    let g = ginibre(dim, 1, rng).column(0).into_owned();
    let norm = g.norm();
    g / C64::new(norm, 0.0)
}

/// Haar-random orthonormal basis.
pub fn random_basis<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Basis {
    Basis::new(haar_unitary(dim, rng), "haar").expect("Haar unitary is orthonormal")
}

/// Random mixed state `G G† / tr(G G†)` with `G` a `dim × rank` Ginibre matrix.
///
/// The structure is a single system factor of dimension `dim`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m / C64::new(tr, 0.0);
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::from_parts(m, TensorStructure::single(dim).expect("dim ≥ 1")).expect("square matrix")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum SamplerKind {
    /// One Haar unitary on the whole space.
    GlobalHaar,
    /// Independent Haar unitaries on `S` and on `A`.
    FactorizedSA,
    /// Independent Haar unitaries on every factor.
    FullyFactorized,
    /// Independent Haar unitaries on contiguous blocks of `xi` factors.
    Bubbles { xi: usize },
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerKind::GlobalHaar => f.write_str("global-haar"),
            SamplerKind::FactorizedSA => f.write_str("factorized-sa"),
            SamplerKind::FullyFactorized => f.write_str("fully-factorized"),
            SamplerKind::Bubbles { xi } => write!(f, "bubbles(xi={xi})"),
        }
    }
}

/// Which random pure states to draw and from which seed.
///
/// States are `U |ref⟩` where `ref` is a computational basis index (zero by
/// default) and `U` has the independence pattern of `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub structure: TensorStructure,
    pub seed: u64,
    #[serde(default)]
    pub reference: usize,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind, structure: TensorStructure, seed: u64) -> Result<Self> {
        let spec = Self { kind, structure, seed, reference: 0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn global_haar(d_s: usize, d_a: usize, seed: u64) -> Result<Self> {
        Self::new(SamplerKind::GlobalHaar, TensorStructure::bipartite(d_s, d_a)?, seed)
    }

    pub fn factorized(d_s: usize, d_a: usize, seed: u64) -> Result<Self> {
        Self::new(SamplerKind::FactorizedSA, TensorStructure::bipartite(d_s, d_a)?, seed)
    }

    /// `n_s + n_a` factors of dimension `d_loc`, the first `n_s` in `S`.
    pub fn fully_factorized(n_s: usize, n_a: usize, d_loc: usize, seed: u64) -> Result<Self> {
        let s: Vec<usize> = (0..n_s).collect();
        Self::new(SamplerKind::FullyFactorized, TensorStructure::uniform(d_loc, n_s + n_a, &s)?, seed)
    }

    pub fn bubbles(case: BubbleCase, n: usize, xi: usize, d_loc: usize, seed: u64) -> Result<Self> {
        Self::new(SamplerKind::Bubbles { xi }, bubble_structure(case, n, xi, d_loc)?, seed)
    }

    pub fn with_reference(mut self, reference: usize) -> Result<Self> {
        self.reference = reference;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.structure.total_dim();
        if self.reference >= total {
            return Err(Error::InvalidArgument(format!("reference index {} outside dimension {total}", self.reference)));
        }
        if let SamplerKind::Bubbles { xi } = self.kind {
            let dims = self.structure.dims();
            if xi == 0 || dims.len() % xi != 0 {
                return Err(Error::MalformedStructure(format!(
                    "{} factors cannot be split into bubbles of length {xi}",
                    dims.len()
                )));
            }
            if dims.iter().any(|&d| d != dims[0]) {
                return Err(Error::MalformedStructure("bubble constituents must share one dimension".into()));
            }
        }
        Ok(())
    }

    /// Groups of factors that receive independent unitaries.
    fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.structure.n_factors();
        match self.kind {
            SamplerKind::GlobalHaar => vec![(0..n).collect()],
            SamplerKind::FactorizedSA => {
                let (s, a) = (self.structure.s_factors(), self.structure.a_factors());
                [s, a].into_iter().filter(|b| !b.is_empty()).collect()
            }
            SamplerKind::FullyFactorized => (0..n).map(|k| vec![k]).collect(),
            SamplerKind::Bubbles { xi } => (0..n / xi).map(|b| (b * xi..(b + 1) * xi).collect()).collect(),
        }
    }

    /// Draws one pure state vector in the factor order of `structure`.
    pub fn sample_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexVector {
        let dims = self.structure.dims();
        let digits = self.structure.unflatten(self.reference);
        let blocks = self.blocks();
        let mut psi = ComplexVector::from_element(1, C64::new(1.0, 0.0));
        for block in &blocks {
            let d: usize = block.iter().map(|&k| dims[k]).product();
            let r = block.iter().fold(0, |acc, &k| acc * dims[k] + digits[k]);
            let u = haar_unitary(d, rng);
            psi = kron_vec(&psi, &u.column(r).into_owned());
        }
        let order: Vec<usize> = blocks.concat();
        if order.iter().enumerate().all(|(i, &k)| i == k) {
            return psi;
        }
        let grouped_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
        permute_vector(&psi, &grouped_dims, &inverse_order(&order)).expect("consistent block order")
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> DensityMatrix {
        DensityMatrix::from_pure(&self.sample_vector(rng), self.structure.clone()).expect("unit vector")
    }
}

/// Quantity averaged by [`mc_estimate`], always with the `c2` measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    TraceOut,
    NonSelective,
    PostSelected,
    /// Coherence of the whole state in `B_S ⊗ B_A`.
    Full,
}

impl Functional {
    pub fn eval(self, rho: &DensityMatrix, fb: &FactorizedBasis) -> Result<f64> {
        match self {
            Functional::TraceOut => c_trace(rho, &fb.bs, Measure::C2),
            Functional::NonSelective => c_nonselective(rho, fb, Measure::C2),
            Functional::PostSelected => c_postselected(rho, fb, Measure::C2),
            Functional::Full => full_coherence(rho, fb, Measure::C2),
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Functional::TraceOut => "trace-out",
            Functional::NonSelective => "non-selective",
            Functional::PostSelected => "post-selected",
            Functional::Full => "full",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Mean and standard error of the mean of `values`.
    ///
    /// Sums are pairwise over the values in index order, so the result only
    /// depends on the values themselves.
    pub fn from_values(values: &[f64], seed: u64) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least two samples, got {n}")));
        }
        let mean = pairwise_sum(values) / n as f64;
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        Ok(Self { mean, stderr: (var / n as f64).sqrt(), samples: n, seed })
    }

    /// `|mean − target| / stderr`; zero when both sides agree exactly.
    pub fn sigma_distance(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            diff / self.stderr
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.sigma_distance(target) <= sigmas
    }
}

/// Serialized form of one Monte Carlo comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    pub kind: SamplerKind,
    pub functional: Functional,
    pub dims: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    pub analytic: Option<f64>,
    pub sigma_distance: Option<f64>,
}

impl McRecord {
    pub fn new(spec: &SamplerSpec, functional: Functional, est: &McEstimate, analytic: Option<f64>) -> Self {
        Self {
            kind: spec.kind,
            functional,
            dims: spec.structure.dims().to_vec(),
            samples: est.samples,
            seed: est.seed,
            mean: est.mean,
            stderr: est.stderr,
            analytic,
            sigma_distance: analytic.map(|a| est.sigma_distance(a)),
        }
    }
}

/// Compensation-free pairwise summation with a fixed split pattern.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Per-sample values of `functional`, sample `i` drawn from stream `i`.
pub fn mc_values(spec: &SamplerSpec, functional: Functional, fb: &FactorizedBasis, samples: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let rho = spec.sample_state(&mut stream_rng(spec.seed, i as u64));
            functional.eval(&rho, fb)
        })
        .collect()
}

/// Seeded Monte Carlo average of `functional` over states drawn from `spec`.
///
/// The estimate is bit-identical for a given spec and sample count whatever
/// the size of the rayon pool.
pub fn mc_estimate(spec: &SamplerSpec, functional: Functional, fb: &FactorizedBasis, samples: usize) -> Result<McEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("samples must be at least {MIN_SAMPLES}, got {samples}")));
    }
    McEstimate::from_values(&mc_values(spec, functional, fb, samples)?, spec.seed)
}

/// Closed-form averages over global Haar (and `S`/`A` factorized) states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyticProtocol {
    /// Reduced-state coherence, global Haar.
    TraceOut,
    /// Non-selective measurement, global Haar.
    NonSelective,
    /// Post-selected average in the mean-field approximation.
    PostSelectedMeanField,
    /// Post-selected average, exact for global Haar states.
    PostSelectedExact,
    /// Non-selective measurement over `U_S ⊗ U_A` states.
    FactorizedNonSelective,
    /// Coherence of the whole state, global Haar.
    Full,
    /// Reduced-state purity, global Haar.
    Purity,
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn dim_i64(d: usize) -> Result<i64> {
    i64::try_from(d).map_err(|_| Error::Overflow(format!("dimension {d} does not fit")))
}

/// Exact rational value of the closed form for `protocol`.
pub fn analytic_average(protocol: AnalyticProtocol, d_s: usize, d_a: usize) -> Result<BigRational> {
    if d_s == 0 || d_a == 0 {
        return Err(Error::InvalidArgument("dimensions must be at least 1".into()));
    }
    let (s, a) = (dim_i64(d_s)?, dim_i64(d_a)?);
    let d = s.checked_mul(a).ok_or_else(|| Error::Overflow("d_s·d_a".into()))?;
    Ok(match protocol {
        AnalyticProtocol::TraceOut | AnalyticProtocol::NonSelective => ratio(s - 1, d + 1),
        AnalyticProtocol::PostSelectedMeanField => ratio(a * (s - 1), s * a + 1),
        AnalyticProtocol::PostSelectedExact => ratio(s - 1, s + 1),
        AnalyticProtocol::FactorizedNonSelective => ratio(2 * (s - 1), (s + 1) * (a + 1)),
        AnalyticProtocol::Full => ratio(d - 1, d + 1),
        AnalyticProtocol::Purity => ratio(s + a, d + 1),
    })
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Number of ways to pick `k` constituents with exactly `l` of them in `S`.
pub fn q_coefficient(n_s: usize, n_a: usize, k: usize, l: usize) -> BigInt {
    if l > k {
        return BigInt::zero();
    }
    binomial(n_s, l) * binomial(n_a, k - l)
}

/// Largest constituent count accepted by [`fully_factorized_average`].
pub const MAX_CONSTITUENTS: usize = 64;

/// Average non-selective `c2` coherence over fully factorized states with
/// `n_s` constituents in `S`, `n_a` in `A`, all of dimension `d_loc`.
pub fn fully_factorized_average(n_s: usize, n_a: usize, d_loc: usize) -> Result<BigRational> {
    if n_s == 0 || d_loc == 0 {
        return Err(Error::InvalidArgument("need n_s ≥ 1 and d_loc ≥ 1".into()));
    }
    let n = n_s + n_a;
    if n > MAX_CONSTITUENTS {
        return Err(Error::Overflow(format!("{n} constituents exceeds the limit of {MAX_CONSTITUENTS}")));
    }
    let d = BigInt::from(d_loc);
    let mut sum = BigInt::zero();
    for k in 0..=n {
        for l in 0..=k.min(n_s) {
            sum += q_coefficient(n_s, n_a, k, l) * num_traits::pow(d.clone(), l);
        }
    }
    let num = sum - num_traits::pow(BigInt::from(2), n);
    let den = num_traits::pow(d + 1, n);
    Ok(BigRational::new(num, den))
}

/// Placement of the two `S` constituents in a bubble state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BubbleCase {
    /// Both in the first bubble.
    A,
    /// In the first two bubbles, one each.
    B,
}

fn check_bubble(case: BubbleCase, n: usize, xi: usize, d_loc: usize) -> Result<()> {
    if n == 0 || xi == 0 || d_loc == 0 {
        return Err(Error::InvalidArgument("n, xi and d_loc must be positive".into()));
    }
    match case {
        BubbleCase::A if xi < 2 => Err(Error::InvalidArgument("case a needs bubbles of length at least 2".into())),
        BubbleCase::B if n < 2 => Err(Error::InvalidArgument("case b needs at least two bubbles".into())),
        _ => Ok(()),
    }
}

/// `n·xi` constituents of dimension `d_loc` with `S` placed per `case`.
pub fn bubble_structure(case: BubbleCase, n: usize, xi: usize, d_loc: usize) -> Result<TensorStructure> {
    check_bubble(case, n, xi, d_loc)?;
    let s = match case {
        BubbleCase::A => [0, 1],
        BubbleCase::B => [0, xi],
    };
    TensorStructure::uniform(d_loc, n * xi, &s)
}

/// Average non-selective `c2` coherence of a two-constituent `S` in a bubble state.
pub fn bubble_average(case: BubbleCase, n: usize, xi: usize, d_loc: usize) -> Result<BigRational> {
    check_bubble(case, n, xi, d_loc)?;
    let d = BigInt::from(d_loc);
    let block = num_traits::pow(d.clone(), xi) + 1;
    let prefactor = BigRational::new(num_traits::pow(BigInt::from(2), n), num_traits::pow(block, n));
    let tail = match case {
        BubbleCase::A => BigRational::new(&d * &d - 1, BigInt::from(2)),
        BubbleCase::B => BigRational::new(&d * &d + BigInt::from(2) * &d - 3, BigInt::from(4)),
    };
    Ok(prefactor * tail)
}

/// Exact ratio of the case a and case b averages, which depends on `d_loc` only.
pub fn bubble_ratio(d_loc: usize) -> Result<BigRational> {
    Ok(bubble_average(BubbleCase::A, 2, 2, d_loc)? / bubble_average(BubbleCase::B, 2, 2, d_loc)?)
}

/// Statistics of the outcome probability `p_0` of a computational-basis
/// measurement on `A` for global Haar states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationProbe {
    pub d_s: usize,
    pub d_a: usize,
    pub mean: f64,
    pub stderr: f64,
    pub variance: f64,
    pub samples: usize,
    pub seed: u64,
}

pub fn concentration_probe(d_s: usize, d_a: usize, samples: usize, seed: u64) -> Result<ConcentrationProbe> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("samples must be at least {MIN_SAMPLES}, got {samples}")));
    }
    let spec = SamplerSpec::global_haar(d_s, d_a, seed)?;
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let psi = spec.sample_vector(&mut stream_rng(seed, i as u64));
            // S is the leading factor, so outcome 0 on A picks every d_a-th amplitude.
            (0..d_s).map(|s| psi[s * d_a].norm_sqr()).sum()
        })
        .collect();
    let est = McEstimate::from_values(&values, seed)?;
    Ok(ConcentrationProbe {
        d_s,
        d_a,
        mean: est.mean,
        stderr: est.stderr,
        variance: est.stderr * est.stderr * samples as f64,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{partial_trace, purity};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        ratio(n, d)
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(1, &mut rng);
        assert_abs_diff_eq!(u[(0, 0)].norm(), 1.0, epsilon = 1e-12);
        for d in 2..=64 {
            let u = haar_unitary(d, &mut rng);
            let res = (u.adjoint() * &u - ComplexMatrix::identity(d, d)).norm();
            assert!(res < 1e-10, "d={d} residual {res}");
        }
    }

    #[test]
    fn haar_first_moment() {
        let values: Vec<f64> = (0..100_000u64)
            .into_par_iter()
            .map(|i| haar_unitary(4, &mut stream_rng(2, i))[(0, 0)].norm_sqr())
            .collect();
        let est = McEstimate::from_values(&values, 2).unwrap();
        assert!(est.within(0.25, 3.0), "{est:?}");
    }

    #[test]
    fn fully_factorized_marginals_are_pure() {
        let spec = SamplerSpec::fully_factorized(2, 1, 3, 5).unwrap();
        let mut rng = stream_rng(5, 0);
        let rho = spec.sample_state(&mut rng);
        for k in 0..3 {
            assert_abs_diff_eq!(purity(&partial_trace(&rho, &[k]).unwrap()), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bubbles_are_uncorrelated_across_boundaries() {
        let spec = SamplerSpec::bubbles(BubbleCase::B, 2, 2, 2, 6).unwrap();
        let rho = spec.sample_state(&mut stream_rng(6, 0));
        let first = partial_trace(&rho, &[0, 1]).unwrap();
        let second = partial_trace(&rho, &[2, 3]).unwrap();
        assert_abs_diff_eq!(purity(&first), 1.0, epsilon = 1e-12);
        let cross = partial_trace(&rho, &[1, 2]).unwrap();
        let m1 = partial_trace(&first, &[1]).unwrap();
        let m2 = partial_trace(&second, &[0]).unwrap();
        let prod = crate::tensor::kron(m1.matrix(), m2.matrix());
        assert!((cross.matrix() - prod).norm() < 1e-12);
    }

    #[test]
    fn factorized_sa_places_blocks_back_in_order() {
        let st = TensorStructure::new(vec![2, 3, 2], vec![true, false, true]).unwrap();
        let spec = SamplerSpec::new(SamplerKind::FactorizedSA, st, 7).unwrap();
        let rho = spec.sample_state(&mut stream_rng(7, 0));
        assert_abs_diff_eq!(purity(&partial_trace(&rho, &[0, 2]).unwrap()), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(purity(&partial_trace(&rho, &[1]).unwrap()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bad_bubble_specs_are_rejected() {
        let st = TensorStructure::uniform(2, 3, &[0]).unwrap();
        assert!(SamplerSpec::new(SamplerKind::Bubbles { xi: 2 }, st, 0).is_err());
        assert!(bubble_structure(BubbleCase::A, 2, 1, 2).is_err());
        assert!(bubble_structure(BubbleCase::B, 1, 2, 2).is_err());
    }

    #[test]
    fn global_haar_mean_purity() {
        let spec = SamplerSpec::global_haar(2, 2, 8).unwrap();
        let values: Vec<f64> = (0..10_000u64)
            .into_par_iter()
            .map(|i| purity(&crate::tensor::reduce_to_system(&spec.sample_state(&mut stream_rng(8, i))).unwrap()))
            .collect();
        let est = McEstimate::from_values(&values, 8).unwrap();
        assert!(est.within(0.8, 3.0), "{est:?}");
        assert_eq!(analytic_average(AnalyticProtocol::Purity, 2, 2).unwrap(), rat(4, 5));
    }

    #[test]
    fn mc_examples() {
        let z = FactorizedBasis::computational(2, 2);
        let g = SamplerSpec::global_haar(2, 2, 11).unwrap();
        for f in [Functional::TraceOut, Functional::NonSelective] {
            let est = mc_estimate(&g, f, &z, 10_000).unwrap();
            assert!(est.within(0.2, 3.0), "{f}: {est:?}");
        }
        let fs = SamplerSpec::factorized(2, 2, 12).unwrap();
        let est = mc_estimate(&fs, Functional::NonSelective, &z, 10_000).unwrap();
        assert!(est.within(2.0 / 9.0, 3.0), "{est:?}");
    }

    #[test]
    fn reference_state_does_not_matter() {
        let z = FactorizedBasis::computational(2, 3);
        let a = SamplerSpec::global_haar(2, 3, 13).unwrap();
        let b = a.clone().with_reference(4).unwrap();
        let target = to_f64(&analytic_average(AnalyticProtocol::NonSelective, 2, 3).unwrap());
        for spec in [a, b] {
            let est = mc_estimate(&spec, Functional::NonSelective, &z, 5_000).unwrap();
            assert!(est.within(target, 3.0), "{est:?}");
        }
    }

    #[test]
    fn mc_rejects_small_sample_counts() {
        let spec = SamplerSpec::global_haar(2, 2, 0).unwrap();
        let z = FactorizedBasis::computational(2, 2);
        assert!(matches!(mc_estimate(&spec, Functional::TraceOut, &z, 99), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn mc_is_thread_count_independent() {
        let spec = SamplerSpec::global_haar(2, 3, 14).unwrap();
        let z = FactorizedBasis::computational(2, 3);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_estimate(&spec, Functional::PostSelected, &z, 500).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn analytic_examples() {
        assert_eq!(analytic_average(AnalyticProtocol::TraceOut, 2, 2).unwrap(), rat(1, 5));
        for d in 2..10 {
            assert_eq!(analytic_average(AnalyticProtocol::NonSelective, d, 1).unwrap(), rat(d as i64 - 1, d as i64 + 1));
        }
        let far = to_f64(&analytic_average(AnalyticProtocol::PostSelectedMeanField, 2, 1_000_000).unwrap());
        assert_abs_diff_eq!(far, 0.5, epsilon = 1e-6);
        for p in [
            AnalyticProtocol::TraceOut,
            AnalyticProtocol::PostSelectedMeanField,
            AnalyticProtocol::PostSelectedExact,
            AnalyticProtocol::FactorizedNonSelective,
            AnalyticProtocol::Full,
        ] {
            for (s, a) in [(1, 1), (2, 3), (7, 5)] {
                let v = analytic_average(p, s, a).unwrap();
                assert!(v >= BigRational::zero() && v < BigRational::one());
            }
        }
    }

    #[test]
    fn fully_factorized_examples() {
        for d in 1..20 {
            assert_eq!(fully_factorized_average(1, 0, d).unwrap(), rat(d as i64 - 1, d as i64 + 1));
        }
        assert_eq!(fully_factorized_average(1, 1, 2).unwrap(), rat(2, 9));
        assert_eq!(fully_factorized_average(2, 0, 2).unwrap(), rat(5, 9));
        assert_eq!(fully_factorized_average(2, 0, 2).unwrap(), bubble_average(BubbleCase::B, 2, 1, 2).unwrap());
        assert!(matches!(fully_factorized_average(40, 25, 2), Err(Error::Overflow(_))));
        assert!(fully_factorized_average(40, 24, 7).is_ok());
    }

    #[test]
    fn fully_factorized_matches_product_formula() {
        // Independent oracle: the double sum collapses to a product of binomial sums.
        for n_s in 1..6usize {
            for n_a in 0..5usize {
                for d in 2..5i64 {
                    let n = (n_s + n_a) as u32;
                    let num = 2i64.pow(n_a as u32) * (d + 1).pow(n_s as u32) - 2i64.pow(n);
                    assert_eq!(fully_factorized_average(n_s, n_a, d as usize).unwrap(), rat(num, (d + 1).pow(n)));
                }
            }
        }
    }

    #[test]
    fn bubble_examples() {
        assert_eq!(bubble_average(BubbleCase::A, 1, 2, 2).unwrap(), rat(3, 5));
        assert_eq!(bubble_average(BubbleCase::A, 1, 2, 2).unwrap(), analytic_average(AnalyticProtocol::Full, 4, 1).unwrap());
        assert_eq!(bubble_average(BubbleCase::A, 2, 2, 2).unwrap(), rat(6, 25));
        assert_eq!(bubble_average(BubbleCase::B, 2, 2, 2).unwrap(), rat(1, 5));
        assert_eq!(bubble_ratio(2).unwrap(), rat(6, 5));
        for d in [3usize, 10, 50, 1000] {
            let r = to_f64(&bubble_ratio(d).unwrap());
            assert_abs_diff_eq!(r, 2.0 * (d as f64 + 1.0) / (d as f64 + 3.0), epsilon = 1e-12);
        }
        assert!(to_f64(&bubble_ratio(100_000).unwrap()) > 1.9999);
    }

    #[test]
    fn concentration_examples() {
        let p = concentration_probe(2, 4, 4_000, 15).unwrap();
        assert!((p.mean - 0.25).abs() <= 3.0 * p.stderr, "{p:?}");
        let small = concentration_probe(2, 2, 2_000, 16).unwrap();
        let large = concentration_probe(2, 16, 2_000, 16).unwrap();
        assert!(large.variance < small.variance);
        let trivial = concentration_probe(4, 1, 200, 17).unwrap();
        assert_abs_diff_eq!(trivial.mean, 1.0, epsilon = 1e-12);
        assert!(trivial.variance < 1e-20);
    }

    #[test]
    fn record_json_fields() {
        let spec = SamplerSpec::global_haar(2, 2, 3).unwrap();
        let est = mc_estimate(&spec, Functional::TraceOut, &FactorizedBasis::computational(2, 2), 100).unwrap();
        let rec = McRecord::new(&spec, Functional::TraceOut, &est, Some(0.2));
        let v = serde_json::to_value(&rec).unwrap();
        for key in ["kind", "functional", "dims", "samples", "seed", "mean", "stderr", "analytic", "sigma_distance"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn seeded_sampling_is_deterministic(seed in any::<u64>(), stream in 0u64..1000) {
            let spec = SamplerSpec::fully_factorized(1, 2, 2, seed).unwrap();
            let a = spec.sample_vector(&mut stream_rng(seed, stream));
            let b = spec.sample_vector(&mut stream_rng(seed, stream));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn pairwise_sum_matches_naive(values in proptest::collection::vec(-1.0f64..1.0, 0..300)) {
            let naive: f64 = values.iter().sum();
            prop_assert!((pairwise_sum(&values) - naive).abs() < 1e-10);
        }

        #[test]
        fn analytic_values_in_unit_interval(s in 1usize..50, a in 1usize..50) {
            for p in [AnalyticProtocol::TraceOut, AnalyticProtocol::PostSelectedMeanField, AnalyticProtocol::FactorizedNonSelective] {
                let v = to_f64(&analytic_average(p, s, a).unwrap());
                prop_assert!((0.0..1.0).contains(&v));
            }
        }
    }
}
