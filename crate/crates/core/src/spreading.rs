//! Spin chains, exact evolution and the spreading of local perturbations.
//!
//! A local channel acts on the ancilla region at distance `l` from a single
//! system site; the state is then evolved exactly under a local chain
//! Hamiltonian. The change of each localizable coherence on `S` is
//! tabulated against `(l, t)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{Basis, FactorizedBasis, Measure};
use crate::error::{Error, Result};
use crate::localization::{c_nonselective, c_postselected, c_trace};
use crate::random::haar_unitary;
use crate::tensor::{
    frobenius_sq, hermitian_part, hs_distance, inverse_order, kron, partial_trace, permute_factors, ComplexMatrix,
    DensityMatrix, TensorStructure, C64, HERMITIAN_TOL,
};

/// Deltas below this are treated as zero.
pub const NOISE_FLOOR: f64 = 1e-12;
/// Largest chain handled by dense exact diagonalization.
pub const MAX_SITES: usize = 12;
/// Tolerance on `Σ K†K = I`.
pub const TP_TOL: f64 = 1e-9;

/// Embeds an operator on `sites` into the full space with factor dims `dims`.
pub fn embed(op: &ComplexMatrix, sites: &[usize], dims: &[usize]) -> Result<ComplexMatrix> {
    let mut seen = vec![false; dims.len()];
    for &s in sites {
        if s >= dims.len() || seen[s] {
            return Err(Error::InvalidArgument(format!("bad support site {s} for {} factors", dims.len())));
        }
        seen[s] = true;
    }
    let d_op: usize = sites.iter().map(|&s| dims[s]).product();
    if op.nrows() != d_op || op.ncols() != d_op {
        return Err(Error::DimensionMismatch { expected: d_op, found: op.nrows() });
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !seen[*k]).collect();
    let d_rest: usize = rest.iter().map(|&k| dims[k]).product();
    let big = kron(op, &ComplexMatrix::identity(d_rest, d_rest));
    let layout: Vec<usize> = sites.iter().chain(rest.iter()).copied().collect();
    if layout.iter().enumerate().all(|(i, &k)| i == k) {
        return Ok(big);
    }
    let layout_dims: Vec<usize> = layout.iter().map(|&k| dims[k]).collect();
    permute_factors(&big, &layout_dims, &inverse_order(&layout))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalTerm {
    pub sites: Vec<usize>,
    pub op: ComplexMatrix,
}

/// `H = Σ_X Φ_X` on a chain of `n_sites` sites of dimension `d_loc`.
///
/// Every term acts on at most `max_support` sites spanning at most
/// `max_range` bonds.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainHamiltonian {
    n_sites: usize,
    d_loc: usize,
    max_support: usize,
    max_range: usize,
    terms: Vec<LocalTerm>,
}

impl ChainHamiltonian {
    pub fn new(n_sites: usize, d_loc: usize, max_support: usize, max_range: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES || d_loc < 2 {
            return Err(Error::InvalidArgument(format!(
                "need 1 ≤ n_sites ≤ {MAX_SITES} and d_loc ≥ 2, got {n_sites} and {d_loc}"
            )));
        }
        Ok(Self { n_sites, d_loc, max_support, max_range, terms: Vec::new() })
    }

    pub fn add_term(&mut self, mut sites: Vec<usize>, op: ComplexMatrix) -> Result<()> {
        sites.sort_unstable();
        sites.dedup();
        if sites.is_empty() || sites.len() > self.max_support {
            return Err(Error::InvalidArgument(format!("term support {} exceeds bound {}", sites.len(), self.max_support)));
        }
        if sites[sites.len() - 1] - sites[0] > self.max_range {
            return Err(Error::InvalidArgument(format!("term range exceeds bound {}", self.max_range)));
        }
        if sites[sites.len() - 1] >= self.n_sites {
            return Err(Error::InvalidArgument(format!("site outside chain of {}", self.n_sites)));
        }
        let d = self.d_loc.pow(sites.len() as u32);
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.nrows() });
        }
        if (&op - op.adjoint()).norm() > HERMITIAN_TOL {
            return Err(Error::InvalidArgument("term is not Hermitian".into()));
        }
        self.terms.push(LocalTerm { sites, op });
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn d_loc(&self) -> usize {
        self.d_loc
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.d_loc; self.n_sites]
    }

    pub fn dim(&self) -> usize {
        self.d_loc.pow(self.n_sites as u32)
    }

    /// Dense matrix of `H`.
    pub fn matrix(&self) -> Result<ComplexMatrix> {
        let dims = self.dims();
        let d = self.dim();
        let mut h = ComplexMatrix::zeros(d, d);
        for term in &self.terms {
            h += embed(&term.op, &term.sites, &dims)?;
        }
        Ok(h)
    }

    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::new(&self.matrix()?)
    }
}

fn pauli(which: char) -> ComplexMatrix {
    let (o, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    match which {
        'x' => DMatrix::from_row_slice(2, 2, &[o, i, i, o]),
        'z' => DMatrix::from_row_slice(2, 2, &[i, o, o, -i]),
        _ => DMatrix::identity(2, 2),
    }
}

/// `H = −J Σ Z_i Z_{i+1} − g Σ X_i − h Σ Z_i` on an open chain of qubits.
pub fn build_tfim(n_sites: usize, j: f64, g: f64, h: f64) -> Result<ChainHamiltonian> {
    if n_sites < 2 {
        return Err(Error::InvalidArgument(format!("chain needs at least 2 sites, got {n_sites}")));
    }
    let mut ham = ChainHamiltonian::new(n_sites, 2, 2, 1)?;
    let zz = kron(&pauli('z'), &pauli('z'));
    for i in 0..n_sites - 1 {
        ham.add_term(vec![i, i + 1], zz.clone() * C64::new(-j, 0.0))?;
    }
    for i in 0..n_sites {
        ham.add_term(vec![i], pauli('x') * C64::new(-g, 0.0) + pauli('z') * C64::new(-h, 0.0))?;
    }
    Ok(ham)
}

/// Spectral decomposition of a Hamiltonian, reused across times.
#[derive(Clone, Debug)]
pub struct Propagator {
    energies: DVector<f64>,
    vectors: ComplexMatrix,
}

impl Propagator {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
        }
        let eig = SymmetricEigen::new(hermitian_part(h));
        Ok(Self { energies: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `e^{−iHt}`.
    pub fn unitary(&self, t: f64) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (k, e) in self.energies.iter().enumerate() {
            let phase = C64::from_polar(1.0, -e * t);
            scaled.column_mut(k).apply(|z| *z *= phase);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn evolve(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rho.dim() });
        }
        Ok(conjugate(rho, &self.unitary(t)))
    }
}

fn conjugate(rho: &DensityMatrix, u: &ComplexMatrix) -> DensityMatrix {
    let m = hermitian_part(&(u * rho.matrix() * u.adjoint()));
    DensityMatrix::from_parts(m, rho.structure().clone()).expect("shape preserved")
}

/// `e^{−iHt} ρ e^{iHt}`.
pub fn evolve(rho: &DensityMatrix, ham: &ChainHamiltonian, t: f64) -> Result<DensityMatrix> {
    ham.propagator()?.evolve(rho, t)
}

/// CPTP map given by Kraus operators on a set of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalChannel {
    support: Vec<usize>,
    kraus: Vec<ComplexMatrix>,
    label: String,
}

impl LocalChannel {
    pub fn new(support: Vec<usize>, kraus: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::InvalidArgument("channel needs at least one Kraus operator".into()));
        };
        let d = first.nrows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: k.nrows() });
            }
            sum += k.adjoint() * k;
        }
        let residual = (sum - ComplexMatrix::identity(d, d)).norm();
        if residual > TP_TOL {
            return Err(Error::NotTracePreserving(residual));
        }
        Ok(Self { support, kraus, label: label.into() })
    }

    pub fn identity(support: Vec<usize>, d: usize) -> Self {
        Self { support, kraus: vec![ComplexMatrix::identity(d, d)], label: "identity".into() }
    }

    pub fn unitary(support: Vec<usize>, u: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        Self::new(support, vec![u], label)
    }

    /// `ρ ↦ (1 − p) ρ + p tr(ρ) I/d` on one site.
    pub fn depolarizing(site: usize, d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("depolarizing strength {p} outside [0, 1]")));
        }
        let mut kraus = vec![ComplexMatrix::identity(d, d) * C64::new((1.0 - p).sqrt(), 0.0)];
        let amp = C64::new((p / d as f64).sqrt(), 0.0);
        for i in 0..d {
            for j in 0..d {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(i, j)] = amp;
                kraus.push(k);
            }
        }
        Self::new(vec![site], kraus, format!("depolarizing(p={p})"))
    }

    /// Replaces the state of one site by the normalized vector `target`.
    pub fn reset_to(site: usize, target: &[C64]) -> Result<Self> {
        let norm = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("reset target is the zero vector".into()));
        }
        let d = target.len();
        let kraus = (0..d)
            .map(|j| ComplexMatrix::from_fn(d, d, |r, c| if c == j { target[r] / norm } else { C64::new(0.0, 0.0) }))
            .collect();
        Self::new(vec![site], kraus, "reset")
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The same channel translated so that its first support site is `site`.
    pub fn moved_to(&self, site: usize) -> Self {
        let base = self.support.iter().copied().min().unwrap_or(0);
        let support = self.support.iter().map(|&s| s - base + site).collect();
        Self { support, kraus: self.kraus.clone(), label: self.label.clone() }
    }
}

/// `Σ_k (K_k ⊗ I) ρ (K_k ⊗ I)†`, applied block by block on the support.
pub fn apply_channel(rho: &DensityMatrix, ch: &LocalChannel) -> Result<DensityMatrix> {
    let dims = rho.structure().dims();
    let n = dims.len();
    if let Some(&bad) = ch.support.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidArgument(format!("bad support site {bad} for {n} factors")));
    }
    let rest: Vec<usize> = (0..n).filter(|k| !ch.support.contains(k)).collect();
    let order: Vec<usize> = ch.support.iter().chain(rest.iter()).copied().collect();
    let m = permute_factors(rho.matrix(), dims, &order)?;
    let d = rho.dim();
    let d_op: usize = ch.support.iter().map(|&s| dims[s]).product();
    let r = d / d_op;
    let zero = C64::new(0.0, 0.0);
    let mut out = ComplexMatrix::zeros(d, d);
    for k in &ch.kraus {
        if k.nrows() != d_op {
            return Err(Error::DimensionMismatch { expected: d_op, found: k.nrows() });
        }
        let mut left = ComplexMatrix::zeros(d, d);
        for a in 0..d_op {
            for c in 0..d_op {
                if k[(a, c)] != zero {
                    let mut rows = left.rows_mut(a * r, r);
                    rows += m.rows(c * r, r) * k[(a, c)];
                }
            }
        }
        for b in 0..d_op {
            for e in 0..d_op {
                if k[(b, e)] != zero {
                    let mut cols = out.columns_mut(b * r, r);
                    cols += left.columns(e * r, r) * k[(b, e)].conj();
                }
            }
        }
    }
    let layout_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let back = permute_factors(&out, &layout_dims, &inverse_order(&order))?;
    DensityMatrix::from_parts(hermitian_part(&back), rho.structure().clone())
}

/// Change of the three localizable coherences caused by a perturbation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolDeltas {
    pub delta_ctr: f64,
    pub delta_cb: f64,
    pub delta_cave: f64,
}

/// One `(l, t)` point of a spreading profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadRow {
    pub l: usize,
    pub t: f64,
    pub delta_ctr: f64,
    pub delta_cb: f64,
    pub delta_cave: f64,
    /// Reduced-state coherence of the perturbed state alone.
    pub ctr_perturbed: f64,
    /// `2 ‖Tr_{S̄} ρ_t − Tr_{S̄} ρ′_t‖₂`, an upper bound on `delta_ctr`.
    pub lipschitz_cap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadProfile {
    pub rows: Vec<SpreadRow>,
}

impl SpreadProfile {
    /// Rows at time `t`, ordered by distance.
    pub fn at_time(&self, t: f64) -> Vec<SpreadRow> {
        self.rows.iter().filter(|r| r.t == t).copied().collect()
    }

    pub fn times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.rows.iter().map(|r| r.t).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadFit {
    pub mu: f64,
    pub s: f64,
    pub c: f64,
    pub n_points: usize,
}

fn with_single_system(rho: &DensityMatrix, s_site: usize) -> Result<DensityMatrix> {
    let n = rho.structure().n_factors();
    if s_site >= n {
        return Err(Error::InvalidArgument(format!("system site {s_site} outside chain of {n}")));
    }
    let mask = (0..n).map(|k| k == s_site).collect();
    rho.with_structure(rho.structure().with_mask(mask)?)
}

fn deltas(before: &DensityMatrix, after: &DensityMatrix, fb: &FactorizedBasis) -> Result<ProtocolDeltas> {
    Ok(ProtocolDeltas {
        delta_ctr: (c_trace(before, &fb.bs, Measure::C2)? - c_trace(after, &fb.bs, Measure::C2)?).abs(),
        delta_cb: (c_nonselective(before, fb, Measure::C2)? - c_nonselective(after, fb, Measure::C2)?).abs(),
        delta_cave: (c_postselected(before, fb, Measure::C2)? - c_postselected(after, fb, Measure::C2)?).abs(),
    })
}

fn protocol_basis(rho: &DensityMatrix, bs: &Basis) -> FactorizedBasis {
    FactorizedBasis::new(bs.clone(), Basis::computational(rho.structure().d_a()))
}

/// Tabulates the effect of `ch`, placed at each of `a_sites`, on the single
/// site `s_site` after evolution under `ham` for each of `times`.
///
/// The ancilla of every protocol is the whole complement of `s_site`, read
/// out in the computational basis. Rows are ordered by `(l, t)`.
pub fn spreading_profile(
    rho0: &DensityMatrix,
    ch: &LocalChannel,
    ham: &ChainHamiltonian,
    bs: &Basis,
    s_site: usize,
    a_sites: &[usize],
    times: &[f64],
) -> Result<SpreadProfile> {
    if rho0.structure().dims() != ham.dims().as_slice() {
        return Err(Error::DimensionMismatch { expected: ham.dim(), found: rho0.dim() });
    }
    let rho0 = with_single_system(rho0, s_site)?;
    let fb = protocol_basis(&rho0, bs);
    let mut perturbed = Vec::with_capacity(a_sites.len());
    for &a in a_sites {
        let moved = ch.moved_to(a);
        if moved.support.contains(&s_site) {
            return Err(Error::InvalidArgument(format!("channel at site {a} overlaps the system site")));
        }
        if moved.support.iter().any(|&k| k >= ham.n_sites()) {
            return Err(Error::InvalidArgument(format!("channel at site {a} runs off the chain")));
        }
        let l = moved.support.iter().map(|&k| k.abs_diff(s_site)).min().unwrap_or(0);
        perturbed.push((l, apply_channel(&rho0, &moved)?));
    }
    let prop = ham.propagator()?;
    let mut rows: Vec<SpreadRow> = times
        .par_iter()
        .map(|&t| {
            let u = prop.unitary(t);
            let rho_t = conjugate(&rho0, &u);
            let red_t = partial_trace(&rho_t, &[s_site])?;
            perturbed
                .iter()
                .map(|(l, p0)| {
                    let p_t = conjugate(p0, &u);
                    let d = deltas(&rho_t, &p_t, &fb)?;
                    let red_p = partial_trace(&p_t, &[s_site])?;
                    Ok(SpreadRow {
                        l: *l,
                        t,
                        delta_ctr: d.delta_ctr,
                        delta_cb: d.delta_cb,
                        delta_cave: d.delta_cave,
                        ctr_perturbed: c_trace(&p_t, bs, Measure::C2)?,
                        lipschitz_cap: 2.0 * hs_distance(&red_t, &red_p)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| a.l.cmp(&b.l).then(a.t.total_cmp(&b.t)));
    Ok(SpreadProfile { rows })
}

/// Least-squares fit of `log delta_ctr ≈ log c − μ l + s t`.
///
/// Only points with `delta_ctr` above [`NOISE_FLOOR`] and outside the cone
/// `l ≤ velocity · t` enter the fit.
pub fn fit_light_cone(profile: &SpreadProfile, velocity: f64) -> Result<SpreadFit> {
    let pts: Vec<&SpreadRow> = profile
        .rows
        .iter()
        .filter(|r| r.delta_ctr > NOISE_FLOOR && r.l as f64 > velocity * r.t.abs())
        .collect();
    if pts.len() < 4 {
        return Err(Error::FitUnderdetermined(pts.len()));
    }
    let a = DMatrix::from_fn(pts.len(), 3, |i, k| match k {
        0 => 1.0,
        1 => -(pts[i].l as f64),
        _ => pts[i].t.abs(),
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|r| r.delta_ctr.ln()));
    let x = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Degenerate(format!("least squares failed: {e}")))?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Degenerate("fit produced non-finite parameters".into()));
    }
    Ok(SpreadFit { c: x[0].exp(), mu: x[1], s: x[2], n_points: pts.len() })
}

/// Protocol deltas at `t = 0` for `ch` applied to `rho0`, with `S = {s_site}`.
pub fn deltas_at_zero(rho0: &DensityMatrix, s_site: usize, ch: &LocalChannel, bs: &Basis) -> Result<ProtocolDeltas> {
    if ch.support.contains(&s_site) {
        return Err(Error::InvalidArgument("channel overlaps the system site".into()));
    }
    let rho0 = with_single_system(rho0, s_site)?;
    let after = apply_channel(&rho0, ch)?;
    deltas(&rho0, &after, &protocol_basis(&rho0, bs))
}

/// Channel found by [`counterexample_measure_protocols`] and its effect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub channel: String,
    pub l: usize,
    pub deltas: ProtocolDeltas,
}

/// Candidate channels on one site used by the counterexample search.
pub fn channel_family(site: usize, d: usize, random: usize, seed: u64) -> Result<Vec<LocalChannel>> {
    let mut out = vec![
        LocalChannel::unitary(vec![site], crate::coherence::dft_matrix(d), "fourier")?,
        LocalChannel::depolarizing(site, d, 1.0)?,
        LocalChannel::reset_to(site, &vec![C64::new(1.0, 0.0); d])?,
        LocalChannel::reset_to(site, &(0..d).map(|k| C64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0)).collect::<Vec<_>>())?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..random {
        out.push(LocalChannel::unitary(vec![site], haar_unitary(d, &mut rng), format!("haar#{k}"))?);
    }
    Ok(out)
}

fn above_floor(x: f64) -> f64 {
    if x > NOISE_FLOOR {
        x
    } else {
        0.0
    }
}

fn search_key(d: &ProtocolDeltas) -> (f64, f64) {
    (above_floor(d.delta_cb.min(d.delta_cave)), above_floor(d.delta_cb))
}

/// Searches single-site channels on `a_site` for one that changes the
/// measurement-based coherences of `S = {s_site}` at `t = 0`.
///
/// `rho0` must factorize between `s_site` and the rest of the chain. The
/// candidate maximizing `min(delta_cb, delta_cave)` is returned, ties broken
/// by `delta_cb` and then by position in the family.
pub fn counterexample_measure_protocols(
    rho0: &DensityMatrix,
    s_site: usize,
    a_site: usize,
    bs: &Basis,
) -> Result<Counterexample> {
    if a_site == s_site {
        return Err(Error::InvalidArgument("ancilla site equals the system site".into()));
    }
    let n = rho0.structure().n_factors();
    if a_site >= n || s_site >= n {
        return Err(Error::InvalidArgument("site outside chain".into()));
    }
    let rest: Vec<usize> = (0..n).filter(|&k| k != s_site).collect();
    let rs = partial_trace(rho0, &[s_site])?;
    let rr = partial_trace(rho0, &rest)?;
    let order: Vec<usize> = std::iter::once(s_site).chain(rest.iter().copied()).collect();
    let product = permute_factors(
        &kron(rs.matrix(), rr.matrix()),
        &order.iter().map(|&k| rho0.structure().dims()[k]).collect::<Vec<_>>(),
        &inverse_order(&order),
    )?;
    let gap = frobenius_sq(&(product - rho0.matrix())).sqrt();
    if gap > HERMITIAN_TOL {
        return Err(Error::InvalidState(format!("state is not a product across the system site (gap {gap:.3e})")));
    }
    let d = rho0.structure().dims()[a_site];
    let mut best: Option<Counterexample> = None;
    for ch in channel_family(a_site, d, 32, 0x5eed)? {
        let deltas = deltas_at_zero(rho0, s_site, &ch, bs)?;
        let better = match &best {
            None => true,
            Some(b) => search_key(&deltas) > search_key(&b.deltas),
        };
        if better {
            best = Some(Counterexample { channel: ch.label.clone(), l: a_site.abs_diff(s_site), deltas });
        }
    }
    Ok(best.expect("family is non-empty"))
}

/// Product state of single-site pure states given as amplitude lists.
pub fn product_state(sites: &[Vec<C64>]) -> Result<DensityMatrix> {
    let dims: Vec<usize> = sites.iter().map(Vec::len).collect();
    let mut psi = crate::tensor::ComplexVector::from_element(1, C64::new(1.0, 0.0));
    for amps in sites {
        psi = crate::tensor::kron_vec(&psi, &crate::tensor::ComplexVector::from_column_slice(amps));
    }
    let norm = psi.norm();
    let n = dims.len();
    DensityMatrix::from_pure(&(psi / C64::new(norm, 0.0)), TensorStructure::new(dims, vec![true; n])?)
}
