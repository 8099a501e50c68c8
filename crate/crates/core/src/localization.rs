//! The three localizable-coherence protocols.
//!
//! Every function here reads the `S`/`A` split from the state's
//! [`TensorStructure`](crate::TensorStructure). Internally the operator is
//! reordered so that all `S` factors come first; the factorized basis
//! `B = B_S ⊗ B_A` is interpreted in that order.
//!
//! * [`c_trace`]: coherence of `Tr_A ρ` in `B_S`.
//! * [`c_nonselective`]: coherence of `D_{B_A} ρ` in `B`.
//! * [`c_postselected`]: `Σ_i p_i c(ρ'_{S,i})` over the outcomes of a
//!   `B_A` measurement.
//!
//! Outcomes with probability below [`P_CUT`] are dropped and the remaining
//! mass is renormalized.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{c1_operator, c2_operator, mub_check, Basis, FactorizedBasis, Measure, MUB_TOL};
use crate::error::{Error, Result};
use crate::random::{random_basis, stream_rng};
use crate::tensor::{
    frobenius_sq, hermitian_part, permute_factors, reduce_to_system, ComplexMatrix, ComplexVector, DensityMatrix,
    TensorStructure, C64,
};

/// Outcomes with Born probability below this are discarded.
pub const P_CUT: f64 = 1e-12;
/// Maximum `‖[ρ'_i, ρ'_j]‖₂` for an ensemble to count as commuting.
pub const COMMUTE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    TraceOut,
    NonSelective,
    PostSelected,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::TraceOut => "trace-out",
            Protocol::NonSelective => "non-selective",
            Protocol::PostSelected => "post-selected",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub protocol: Protocol,
    pub measure: Measure,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub bases: FactorizedBasis,
}

/// One measurement outcome: Born probability and the normalized state left on `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub label: usize,
    pub probability: f64,
    pub state: DensityMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEnsemble {
    outcomes: Vec<Outcome>,
    discarded: f64,
}

impl MeasurementEnsemble {
    /// Builds an ensemble from raw `(p_i, ρ'_{S,i})` pairs, dropping outcomes
    /// below [`P_CUT`] and renormalizing.
    pub fn new(raw: Vec<(usize, f64, DensityMatrix)>) -> Result<Self> {
        let total: f64 = raw.iter().map(|(_, p, _)| *p).sum();
        let kept: Vec<_> = raw.into_iter().filter(|(_, p, _)| *p >= P_CUT).collect();
        let kept_mass: f64 = kept.iter().map(|(_, p, _)| *p).sum();
        if kept.is_empty() || kept_mass <= 0.0 {
            return Err(Error::Degenerate("every outcome has probability below p_cut".into()));
        }
        let outcomes = kept
            .into_iter()
            .map(|(label, p, state)| Outcome { label, probability: p / kept_mass, state })
            .collect();
        Ok(Self { outcomes, discarded: (total - kept_mass).max(0.0) })
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Probability mass removed by the `p_cut` filter, before renormalization.
    pub fn discarded_mass(&self) -> f64 {
        self.discarded
    }

    /// `Σ_i p_i ρ'_{S,i}`.
    pub fn average_state(&self) -> ComplexMatrix {
        let d = self.outcomes[0].state.dim();
        self.outcomes
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, o| acc + o.state.matrix() * C64::new(o.probability, 0.0))
    }

    /// Largest `‖[ρ'_i, ρ'_j]‖₂` over all pairs.
    pub fn max_commutator_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.outcomes.iter().enumerate() {
            for b in &self.outcomes[i + 1..] {
                let (x, y) = (a.state.matrix(), b.state.matrix());
                worst = worst.max(frobenius_sq(&(x * y - y * x)).sqrt());
            }
        }
        worst
    }
}

/// The state reordered with `S` factors first.
struct SystemFirst {
    mat: ComplexMatrix,
    d_s: usize,
    d_a: usize,
    s_structure: TensorStructure,
}

fn system_first(rho: &DensityMatrix) -> Result<SystemFirst> {
    let st = rho.structure();
    let s = st.s_factors();
    if s.is_empty() {
        return Err(Error::MissingBipartition);
    }
    let order = st.s_first_order();
    let mat = permute_factors(rho.matrix(), st.dims(), &order)?;
    Ok(SystemFirst { mat, d_s: st.d_s(), d_a: st.d_a(), s_structure: st.select(&s)?.all_system() })
}

fn check_basis(fb: &FactorizedBasis, d_s: usize, d_a: usize) -> Result<()> {
    if fb.bs.dim() != d_s {
        return Err(Error::DimensionMismatch { expected: d_s, found: fb.bs.dim() });
    }
    if fb.ba.dim() != d_a {
        return Err(Error::DimensionMismatch { expected: d_a, found: fb.ba.dim() });
    }
    Ok(())
}

fn eval_operator(measure: Measure, x: &ComplexMatrix, basis: &Basis) -> f64 {
    match measure {
        Measure::C1 => c1_operator(x, basis),
        Measure::C2 => c2_operator(x, basis),
    }
}

/// Coherence of the reduced state `Tr_A ρ` in `bs`.
pub fn c_trace(rho: &DensityMatrix, bs: &Basis, measure: Measure) -> Result<f64> {
    let reduced = reduce_to_system(rho)?;
    measure.eval(&reduced, bs)
}

/// Unnormalized conditional blocks `⟨a_i|ρ|a_i⟩` for each vector of `ba`.
fn ancilla_blocks(sf: &SystemFirst, ba: &Basis) -> Vec<ComplexMatrix> {
    let (d_s, d_a) = (sf.d_s, sf.d_a);
    let framed = if ba.is_identity() {
        sf.mat.clone()
    } else {
        let frame = crate::tensor::kron(&ComplexMatrix::identity(d_s, d_s), ba.vectors());
        frame.adjoint() * &sf.mat * &frame
    };
    (0..d_a)
        .map(|i| ComplexMatrix::from_fn(d_s, d_s, |s, sp| framed[(s * d_a + i, sp * d_a + i)]))
        .collect()
}

/// Measures the ancilla in `ba` and returns the conditional states on `S`.
pub fn measure_outcomes(rho: &DensityMatrix, ba: &Basis) -> Result<MeasurementEnsemble> {
    let sf = system_first(rho)?;
    if ba.dim() != sf.d_a {
        return Err(Error::DimensionMismatch { expected: sf.d_a, found: ba.dim() });
    }
    let mut raw = Vec::with_capacity(sf.d_a);
    for (i, block) in ancilla_blocks(&sf, ba).into_iter().enumerate() {
        let p = block.trace().re;
        if p < P_CUT {
            raw.push((i, p.max(0.0), DensityMatrix::maximally_mixed(sf.s_structure.clone())));
            continue;
        }
        let state = hermitian_part(&(block / C64::new(p, 0.0)));
        raw.push((i, p, DensityMatrix::from_parts(state, sf.s_structure.clone())?));
    }
    MeasurementEnsemble::new(raw)
}

/// Coherence of the post-measurement state `D_{B_A} ρ` in `B = B_S ⊗ B_A`.
///
/// `D_{B_A} ρ` is block diagonal in `B_A`, so its off-diagonal part in `B`
/// is the sum of the off-diagonal parts of the unnormalized blocks in `B_S`.
pub fn c_nonselective(rho: &DensityMatrix, fb: &FactorizedBasis, measure: Measure) -> Result<f64> {
    let sf = system_first(rho)?;
    check_basis(fb, sf.d_s, sf.d_a)?;
    Ok(ancilla_blocks(&sf, &fb.ba).iter().map(|b| eval_operator(measure, b, &fb.bs)).sum())
}

/// `Σ_i p_i c_{B_S}(ρ'_{S,i})`.
pub fn c_postselected(rho: &DensityMatrix, fb: &FactorizedBasis, measure: Measure) -> Result<f64> {
    let ens = measure_outcomes(rho, &fb.ba)?;
    if fb.bs.dim() != ens.outcomes[0].state.dim() {
        return Err(Error::DimensionMismatch { expected: ens.outcomes[0].state.dim(), found: fb.bs.dim() });
    }
    ensemble_average(&ens, &fb.bs, measure)
}

/// `Σ_i p_i c(ρ'_{S,i})` for a precomputed ensemble.
pub fn ensemble_average(ens: &MeasurementEnsemble, bs: &Basis, measure: Measure) -> Result<f64> {
    ens.outcomes
        .iter()
        .map(|o| Ok(o.probability * measure.eval(&o.state, bs)?))
        .sum()
}

/// `Σ_i p_i² c2(ρ'_{S,i})`, which equals the non-selective `c2` coherence.
pub fn weighted_square_sum(ens: &MeasurementEnsemble, bs: &Basis) -> Result<f64> {
    ens.outcomes
        .iter()
        .map(|o| Ok(o.probability * o.probability * crate::coherence::c2(&o.state, bs)?))
        .sum()
}

/// Both sides of `C_B = Σ_i p_i² c2(ρ'_{S,i})` for the `c2` measure.
pub fn main_identity(rho: &DensityMatrix, fb: &FactorizedBasis) -> Result<(f64, f64)> {
    let lhs = c_nonselective(rho, fb, Measure::C2)?;
    let ens = measure_outcomes(rho, &fb.ba)?;
    Ok((lhs, weighted_square_sum(&ens, &fb.bs)?))
}

/// Coherence of the whole state in `B = B_S ⊗ B_A` (the `c_B(ρ)` bound).
pub fn full_coherence(rho: &DensityMatrix, fb: &FactorizedBasis, measure: Measure) -> Result<f64> {
    let sf = system_first(rho)?;
    check_basis(fb, sf.d_s, sf.d_a)?;
    Ok(eval_operator(measure, &sf.mat, &fb.full()))
}

pub fn evaluate(protocol: Protocol, rho: &DensityMatrix, fb: &FactorizedBasis, measure: Measure) -> Result<ProtocolResult> {
    let value = match protocol {
        Protocol::TraceOut => c_trace(rho, &fb.bs, measure)?,
        Protocol::NonSelective => c_nonselective(rho, fb, measure)?,
        Protocol::PostSelected => c_postselected(rho, fb, measure)?,
    };
    Ok(ProtocolResult { protocol, measure, value, seed: None, bases: fb.clone() })
}

/// A basis that diagonalizes every member of a commuting ensemble.
pub fn common_eigenbasis(ens: &MeasurementEnsemble) -> Result<Basis> {
    let worst = ens.max_commutator_norm();
    if worst > COMMUTE_TOL {
        return Err(Error::NonCommuting { max_norm: worst });
    }
    // Fixed-seed generic weights; eigenvectors of the mixture are common
    // eigenvectors of every member unless the weights are non-generic.
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c0ffee);
    let d = ens.outcomes[0].state.dim();
    let mut mix = ComplexMatrix::zeros(d, d);
    for o in &ens.outcomes {
        mix += o.state.matrix() * C64::new(rng.random_range(0.5..1.5), 0.0);
    }
    let eig = SymmetricEigen::new(hermitian_part(&mix));
    let basis = Basis::new(eig.eigenvectors, "common-eigenbasis")?;
    for o in &ens.outcomes {
        let m = basis.to_frame(o.state.matrix());
        let off = (frobenius_sq(&m) - m.diagonal().iter().map(|z| z.norm_sqr()).sum::<f64>()).max(0.0).sqrt();
        if off > COMMUTE_TOL.sqrt() {
            return Err(Error::NonCommuting { max_norm: off });
        }
    }
    Ok(basis)
}

/// Basis on `S` unbiased to the common eigenbasis of a commuting ensemble.
///
/// The computational basis is returned when it already is unbiased to the
/// common eigenbasis; otherwise the Fourier rotation of the eigenbasis.
pub fn optimal_basis_commuting(ens: &MeasurementEnsemble) -> Result<Basis> {
    let eig = common_eigenbasis(ens)?;
    let z = Basis::computational(eig.dim());
    if mub_check(&z, &eig, MUB_TOL)? {
        return Ok(z.with_label("optimal(z)"));
    }
    Ok(eig.fourier_rotated().with_label("optimal(fourier(common-eigenbasis))"))
}

/// Best of `candidates` Haar-random bases on `S` for the given protocol.
///
/// Candidates are drawn from per-index streams of `seed`, so the result does
/// not depend on the number of worker threads. Ties go to the lowest index.
pub fn best_random_basis(
    rho: &DensityMatrix,
    ba: &Basis,
    protocol: Protocol,
    measure: Measure,
    candidates: usize,
    seed: u64,
) -> Result<(usize, Basis, f64)> {
    if candidates == 0 {
        return Err(Error::InvalidArgument("need at least one candidate basis".into()));
    }
    let d_s = rho.structure().d_s();
    let scored: Vec<(usize, f64)> = (0..candidates)
        .into_par_iter()
        .map(|k| {
            let bs = random_basis(d_s, &mut stream_rng(seed, k as u64));
            let fb = FactorizedBasis::new(bs, ba.clone());
            Ok((k, evaluate(protocol, rho, &fb, measure)?.value))
        })
        .collect::<Result<_>>()?;
    let (best, value) = scored
        .into_iter()
        .fold((0usize, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let basis = random_basis(d_s, &mut stream_rng(seed, best as u64));
    Ok((best, basis, value))
}

/// One outcome of a computational-basis measurement of a pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureOutcome {
    pub label: usize,
    pub probability: f64,
    pub coherence: f64,
}

/// Measures the `A` factors of a pure state in the computational basis and
/// reports the coherence of each conditional `S` state, also in the
/// computational basis. Works on the nonzero amplitudes only, so it scales
/// to state vectors far too large for a density matrix.
pub fn postselect_pure_computational(
    psi: &ComplexVector,
    structure: &TensorStructure,
    measure: Measure,
) -> Result<Vec<PureOutcome>> {
    let total = structure.total_dim();
    if psi.len() != total {
        return Err(Error::DimensionMismatch { expected: total, found: psi.len() });
    }
    let s = structure.s_factors();
    if s.is_empty() {
        return Err(Error::MissingBipartition);
    }
    let a = structure.a_factors();
    let dims = structure.dims();
    let mut groups: BTreeMap<usize, Vec<C64>> = BTreeMap::new();
    for (idx, amp) in psi.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let digits = structure.unflatten(idx);
        let a_idx = a.iter().fold(0, |acc, &k| acc * dims[k] + digits[k]);
        groups.entry(a_idx).or_default().push(*amp);
    }
    let mut raw = Vec::with_capacity(groups.len());
    for (label, amps) in groups {
        let p: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if p < P_CUT {
            continue;
        }
        let coherence = match measure {
            Measure::C2 => (1.0 - amps.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / (p * p)).max(0.0),
            Measure::C1 => {
                let l1: f64 = amps.iter().map(|z| z.norm()).sum();
                (l1 * l1 / p - 1.0).max(0.0)
            }
        };
        raw.push(PureOutcome { label, probability: p, coherence });
    }
    let mass: f64 = raw.iter().map(|o| o.probability).sum();
    if raw.is_empty() || mass <= 0.0 {
        return Err(Error::Degenerate("every outcome has probability below p_cut".into()));
    }
    for o in &mut raw {
        o.probability /= mass;
    }
    Ok(raw)
}

/// Post-selected coherence of a pure state with computational `B_S` and `B_A`.
pub fn c_postselected_pure(psi: &ComplexVector, structure: &TensorStructure, measure: Measure) -> Result<f64> {
    Ok(postselect_pure_computational(psi, structure, measure)?
        .iter()
        .map(|o| o.probability * o.coherence)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_state, random_density};
    use crate::tensor::{kron_states, partial_trace};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bell() -> DensityMatrix {
        let s = 1.0 / 2f64.sqrt();
        let psi = ComplexVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        DensityMatrix::from_pure(&psi, TensorStructure::bipartite(2, 2).unwrap()).unwrap()
    }

    fn plus_zero() -> DensityMatrix {
        let s = 1.0 / 2f64.sqrt();
        let psi = ComplexVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0)]);
        DensityMatrix::from_pure(&psi, TensorStructure::bipartite(2, 2).unwrap()).unwrap()
    }

    fn hadamard_z() -> FactorizedBasis {
        FactorizedBasis::new(Basis::fourier(2), Basis::computational(2))
    }

    fn product(rs: &DensityMatrix, ra: &DensityMatrix) -> DensityMatrix {
        let ra = ra.with_structure(TensorStructure::new(ra.structure().dims().to_vec(), vec![false; ra.structure().n_factors()]).unwrap()).unwrap();
        kron_states(rs, &ra).unwrap()
    }

    #[test]
    fn c_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..5 {
            let bs = random_basis(2, &mut rng);
            assert!(c_trace(&bell(), &bs, Measure::C2).unwrap() < 1e-15);
        }
        assert_abs_diff_eq!(c_trace(&plus_zero(), &Basis::computational(2), Measure::C2).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(
            c_trace(&plus_zero(), &Basis::computational(3), Measure::C2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn measure_outcomes_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rs = random_density(2, 2, &mut rng);
        let zero = DensityMatrix::from_pure(
            &ComplexVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            TensorStructure::single(2).unwrap(),
        )
        .unwrap();
        let ens = measure_outcomes(&product(&rs, &zero), &Basis::computational(2)).unwrap();
        assert_eq!(ens.len(), 1);
        assert_abs_diff_eq!(ens.outcomes()[0].probability, 1.0, epsilon = 1e-15);
        assert!((ens.outcomes()[0].state.matrix() - rs.matrix()).norm() < 1e-14);

        let ens = measure_outcomes(&bell(), &Basis::computational(2)).unwrap();
        assert_eq!(ens.len(), 2);
        for (i, o) in ens.outcomes().iter().enumerate() {
            assert_abs_diff_eq!(o.probability, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(o.state.matrix()[(i, i)].re, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn marginal_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let st = TensorStructure::new(vec![2, 3, 2], vec![false, true, false]).unwrap();
        for _ in 0..50 {
            let rho = random_density(12, 5, &mut rng).with_structure(st.clone()).unwrap();
            let ba = random_basis(4, &mut rng);
            let ens = measure_outcomes(&rho, &ba).unwrap();
            let total: f64 = ens.outcomes().iter().map(|o| o.probability).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            let marginal = partial_trace(&rho, &[1]).unwrap();
            assert!((ens.average_state() - marginal.matrix()).norm() < 1e-10);
            for o in ens.outcomes() {
                assert!(o.state.validate().is_ok());
            }
        }
    }

    #[test]
    fn degenerate_ensemble_is_rejected() {
        let st = TensorStructure::single(2).unwrap();
        let raw = vec![(0, 0.0, DensityMatrix::maximally_mixed(st.clone())), (1, 1e-14, DensityMatrix::maximally_mixed(st))];
        assert!(matches!(MeasurementEnsemble::new(raw), Err(Error::Degenerate(_))));
    }

    #[test]
    fn nonselective_examples() {
        let z = FactorizedBasis::computational(2, 2);
        let diag = crate::coherence::dephase(&bell(), &z.full()).unwrap();
        for m in [Measure::C1, Measure::C2] {
            assert_eq!(c_nonselective(&diag, &z, m).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(c_nonselective(&bell(), &hadamard_z(), Measure::C2).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn postselected_examples() {
        assert_abs_diff_eq!(c_postselected(&bell(), &hadamard_z(), Measure::C2).unwrap(), 0.5, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let rs = random_density(3, 2, &mut rng);
            let ra = random_density(2, 2, &mut rng);
            let fb = FactorizedBasis::new(random_basis(3, &mut rng), random_basis(2, &mut rng));
            for m in [Measure::C1, Measure::C2] {
                let direct = m.eval(&rs, &fb.bs).unwrap();
                assert_abs_diff_eq!(c_postselected(&product(&rs, &ra), &fb, m).unwrap(), direct, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn main_identity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let rs = random_density(2, 2, &mut rng);
        let ra = random_density(2, 1, &mut rng);
        let fb = FactorizedBasis::new(random_basis(2, &mut rng), Basis::computational(2));
        let rho = product(&rs, &ra);
        let (lhs, rhs) = main_identity(&rho, &fb).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        let (lhs, rhs) = main_identity(&bell(), &hadamard_z()).unwrap();
        assert_abs_diff_eq!(lhs, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(rhs, 0.25, epsilon = 1e-15);

        let st = TensorStructure::bipartite(2, 4).unwrap();
        let mut worst = 0.0f64;
        for k in 0..500 {
            let rho = random_density(8, 1 + k % 8, &mut rng).with_structure(st.clone()).unwrap();
            let fb = FactorizedBasis::new(random_basis(2, &mut rng), random_basis(4, &mut rng));
            let (l, r) = main_identity(&rho, &fb).unwrap();
            worst = worst.max((l - r).abs());
        }
        assert!(worst < 1e-10, "max deviation {worst}");
    }

    #[test]
    fn protocol_inequalities() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let st = TensorStructure::bipartite(2, 2).unwrap();
        for k in 0..300 {
            let rho = random_density(4, 1 + k % 4, &mut rng).with_structure(st.clone()).unwrap();
            let fb = FactorizedBasis::new(random_basis(2, &mut rng), random_basis(2, &mut rng));
            for m in [Measure::C1, Measure::C2] {
                assert!(c_nonselective(&rho, &fb, m).unwrap() <= c_postselected(&rho, &fb, m).unwrap() + 1e-10);
            }
            let ctr = c_trace(&rho, &fb.bs, Measure::C1).unwrap();
            let cb = c_nonselective(&rho, &fb, Measure::C1).unwrap();
            assert!(ctr <= cb + 1e-10);
            assert!(cb <= full_coherence(&rho, &fb, Measure::C1).unwrap() + 1e-10);
            let red = reduce_to_system(&rho).unwrap();
            assert!(c_trace(&rho, &fb.bs, Measure::C2).unwrap() <= crate::tensor::purity(&red) - 0.5 + 1e-10);
        }
    }

    #[test]
    fn optimal_basis_separable_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for _ in 0..10 {
            let xi = haar_state(3, &mut rng);
            let eta = haar_state(2, &mut rng);
            let psi = xi.kronecker(&eta);
            let rho = DensityMatrix::from_pure(&psi, TensorStructure::bipartite(3, 2).unwrap()).unwrap();
            let ens = measure_outcomes(&rho, &random_basis(2, &mut rng)).unwrap();
            let best = optimal_basis_commuting(&ens).unwrap();
            let target = 1.0 / 3f64.sqrt();
            for k in 0..3 {
                let ov = (xi.adjoint() * best.vectors().column(k))[(0, 0)].norm();
                assert_abs_diff_eq!(ov, target, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn optimal_basis_maximally_entangled_is_schmidt_basis() {
        for d in [2, 3, 4] {
            let amp = c(1.0 / (d as f64).sqrt(), 0.0);
            let mut psi = ComplexVector::zeros(d * d);
            for a in 0..d {
                psi[a * d + a] = amp;
            }
            let rho = DensityMatrix::from_pure(&psi, TensorStructure::bipartite(d, d).unwrap()).unwrap();
            let ens = measure_outcomes(&rho, &Basis::fourier(d)).unwrap();
            let best = optimal_basis_commuting(&ens).unwrap();
            assert_eq!(best.vectors(), Basis::computational(d).vectors());
        }
    }

    #[test]
    fn non_commuting_ensemble_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let rho = random_density(6, 6, &mut rng).with_structure(TensorStructure::bipartite(3, 2).unwrap()).unwrap();
        let ens = measure_outcomes(&rho, &Basis::computational(2)).unwrap();
        match optimal_basis_commuting(&ens) {
            Err(Error::NonCommuting { max_norm }) => assert!(max_norm > COMMUTE_TOL),
            other => panic!("expected NonCommuting, got {other:?}"),
        }
    }

    #[test]
    fn best_random_basis_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let rho = random_density(4, 2, &mut rng).with_structure(TensorStructure::bipartite(2, 2).unwrap()).unwrap();
        let ba = Basis::computational(2);
        let a = best_random_basis(&rho, &ba, Protocol::NonSelective, Measure::C2, 64, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| best_random_basis(&rho, &ba, Protocol::NonSelective, Measure::C2, 64, 9).unwrap());
        assert_eq!(a.0, b.0);
        assert_eq!(a.2.to_bits(), b.2.to_bits());
        let fb = FactorizedBasis::new(a.1, ba);
        assert_eq!(c_nonselective(&rho, &fb, Measure::C2).unwrap().to_bits(), a.2.to_bits());
    }

    #[test]
    fn pure_postselection_matches_density_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let st = TensorStructure::new(vec![2, 2, 3], vec![true, false, true]).unwrap();
        let fb = FactorizedBasis::computational(6, 2);
        for _ in 0..30 {
            let psi = haar_state(12, &mut rng);
            let rho = DensityMatrix::from_pure(&psi, st.clone()).unwrap();
            for m in [Measure::C1, Measure::C2] {
                let dense = c_postselected(&rho, &fb, m).unwrap();
                let sparse = c_postselected_pure(&psi, &st, m).unwrap();
                assert_abs_diff_eq!(dense, sparse, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn protocol_result_json_shape() {
        let r = evaluate(Protocol::PostSelected, &bell(), &hadamard_z(), Measure::C2).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["protocol"], "post-selected");
        assert_eq!(v["measure"], "c2");
        assert_eq!(v["bases"]["bs"]["dim"], 2);
    }
}
