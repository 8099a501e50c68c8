//! Toric-code ground states and their post-selected coherence.
//!
//! Spins live on the `2N²` edges of an `N × N` periodic square lattice.
//! Horizontal edge `h(x, y)` joins vertex `(x, y)` to `(x+1, y)` and has
//! index `y·N + x`; vertical edge `v(x, y)` joins `(x, y)` to `(x, y+1)` and
//! has index `N² + y·N + x`.
//!
//! Subsets of edges are `u64` bit masks in *state-index* convention: edge `e`
//! is bit `E − 1 − e`, so the mask of a z-basis configuration is also its
//! index in the big-endian state vector.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coherence::{Basis, Measure};
use crate::error::{Error, Result};
use crate::localization::postselect_pure_computational;
use crate::tensor::{ComplexMatrix, ComplexVector, DensityMatrix, TensorStructure, C64};

/// Linear sizes supported by the dense state-vector simulation.
pub const SUPPORTED_SIZES: [usize; 2] = [2, 3];
/// Largest region whose reduced density matrix is built densely.
pub const MAX_REDUCED_EDGES: usize = 12;
const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusLattice {
    n: usize,
}

impl TorusLattice {
    pub fn new(n: usize) -> Result<Self> {
        if !SUPPORTED_SIZES.contains(&n) {
            return Err(Error::Overflow(format!("torus size {n} outside the supported sizes {SUPPORTED_SIZES:?}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        2 * self.n * self.n
    }

    pub fn h(&self, x: usize, y: usize) -> usize {
        (y % self.n) * self.n + x % self.n
    }

    pub fn v(&self, x: usize, y: usize) -> usize {
        self.n * self.n + (y % self.n) * self.n + x % self.n
    }

    pub fn bit(&self, edge: usize) -> u64 {
        1u64 << (self.n_edges() - 1 - edge)
    }

    pub fn mask(&self, edges: &[usize]) -> u64 {
        edges.iter().fold(0, |m, &e| m | self.bit(e))
    }

    pub fn edges_of(&self, mask: u64) -> Vec<usize> {
        (0..self.n_edges()).filter(|&e| mask & self.bit(e) != 0).collect()
    }

    /// Edges meeting vertex `(x, y)`.
    pub fn star(&self, x: usize, y: usize) -> [usize; 4] {
        let n = self.n;
        [self.h(x, y), self.h(x + n - 1, y), self.v(x, y), self.v(x, y + n - 1)]
    }

    /// Edges bounding the face with lower-left corner `(x, y)`.
    pub fn plaquette(&self, x: usize, y: usize) -> [usize; 4] {
        [self.h(x, y), self.h(x, y + 1), self.v(x, y), self.v(x + 1, y)]
    }

    pub fn stars(&self) -> Vec<u64> {
        self.sites().map(|(x, y)| self.mask(&self.star(x, y))).collect()
    }

    pub fn plaquettes(&self) -> Vec<u64> {
        self.sites().map(|(x, y)| self.mask(&self.plaquette(x, y))).collect()
    }

    fn sites(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |y| (0..self.n).map(move |x| (x, y)))
    }

    /// `σˣ` loop on the vertical edges of row zero.
    pub fn loop_w1(&self) -> u64 {
        self.mask(&(0..self.n).map(|x| self.v(x, 0)).collect::<Vec<_>>())
    }

    /// `σˣ` loop on the horizontal edges of column zero.
    pub fn loop_w2(&self) -> u64 {
        self.mask(&(0..self.n).map(|y| self.h(0, y)).collect::<Vec<_>>())
    }

    /// `W₁^i W₂^j`.
    pub fn loop_word(&self, i: usize, j: usize) -> u64 {
        (if i & 1 == 1 { self.loop_w1() } else { 0 }) ^ (if j & 1 == 1 { self.loop_w2() } else { 0 })
    }
}

/// Subgroup of `GF(2)^E` spanned by a set of bit vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GF2Group {
    /// Echelon basis with distinct leading bits, sorted by leading bit descending.
    basis: Vec<u64>,
}

impl GF2Group {
    pub fn generated_by(generators: &[u64]) -> Self {
        let mut basis: Vec<u64> = Vec::new();
        for &g in generators {
            let r = reduce(&basis, g);
            if r != 0 {
                basis.push(r);
                basis.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        Self { basis }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// `|G| = 2^rank`.
    pub fn order(&self) -> u64 {
        1u64 << self.rank()
    }

    pub fn contains(&self, v: u64) -> bool {
        reduce(&self.basis, v) == 0
    }

    /// All elements, in Gray-code order starting from the identity.
    pub fn elements(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(1 << self.rank());
        let mut cur = 0u64;
        out.push(cur);
        for step in 1u64..(1 << self.rank()) {
            cur ^= self.basis[step.trailing_zeros() as usize];
            out.push(cur);
        }
        out
    }

    /// `{g & mask : g ∈ G}`.
    pub fn restricted(&self, mask: u64) -> GF2Group {
        GF2Group::generated_by(&self.basis.iter().map(|b| b & mask).collect::<Vec<_>>())
    }
}

fn reduce(basis: &[u64], mut v: u64) -> u64 {
    for &b in basis {
        let lead = 63 - b.leading_zeros();
        if v >> lead & 1 == 1 {
            v ^= b;
        }
    }
    v
}

/// Group generated by the star operators of the lattice.
pub fn star_group(lattice: &TorusLattice) -> GF2Group {
    GF2Group::generated_by(&lattice.stars())
}

/// Elements of `group` supported inside `region`.
pub fn subgroup_gs(group: &GF2Group, region: &Region) -> GF2Group {
    let lattice = TorusLattice { n: region.n };
    let outside = !lattice.mask(&region.s_edges);
    let inside: Vec<u64> = group.elements().into_iter().filter(|g| g & outside == 0).collect();
    GF2Group::generated_by(&inside)
}

/// How a region sits relative to the two non-contractible loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// Outcomes on `A` fix both loop parities.
    Contractible,
    /// Outcomes on `A` fix neither loop parity.
    NonContractibleBoth,
    /// Outcomes on `A` fix the `W₂` parity only; the `W₁` index stays in superposition.
    NonContractibleH,
    /// Outcomes on `A` fix the `W₁` parity only; the `W₂` index stays in superposition.
    NonContractibleV,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Contractible => "contractible",
            Topology::NonContractibleBoth => "non-contractible-both",
            Topology::NonContractibleH => "non-contractible-h",
            Topology::NonContractibleV => "non-contractible-v",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contractible" => Ok(Topology::Contractible),
            "non-contractible-both" | "non-contractible" => Ok(Topology::NonContractibleBoth),
            "non-contractible-h" => Ok(Topology::NonContractibleH),
            "non-contractible-v" => Ok(Topology::NonContractibleV),
            other => Err(Error::InvalidArgument(format!("unknown topology '{other}'"))),
        }
    }
}

/// Edge subset `S` with its declared topology. This is also the region-file format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub n: usize,
    pub s_edges: Vec<usize>,
    pub declared_topology: Topology,
}

impl Region {
    pub fn new(n: usize, s_edges: Vec<usize>, declared_topology: Topology) -> Result<Self> {
        let region = Self { n, s_edges, declared_topology };
        region.validate()?;
        Ok(region.normalized())
    }

    fn normalized(mut self) -> Self {
        self.s_edges = self.s_edges.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let lattice = TorusLattice::new(self.n)?;
        let e = lattice.n_edges();
        if let Some(&bad) = self.s_edges.iter().find(|&&k| k >= e) {
            return Err(Error::InvalidArgument(format!("edge {bad} outside the {e} edges of the torus")));
        }
        let distinct = self.s_edges.iter().collect::<BTreeSet<_>>().len();
        if distinct == 0 || distinct == e {
            return Err(Error::InvalidArgument("region must be a nonempty proper subset of the edges".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let region: Region =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad region file: {e}")))?;
        region.validate()?;
        Ok(region.normalized())
    }

    pub fn structure(&self) -> Result<TensorStructure> {
        TensorStructure::uniform(2, 2 * self.n * self.n, &self.s_edges)
    }
}

/// Ground-state amplitudes `α_{ij}` ordered `(0,0), (0,1), (1,0), (1,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[C64; 4]", into = "[C64; 4]")]
pub struct Alpha([C64; 4]);

impl Alpha {
    pub fn new(coeffs: [C64; 4]) -> Result<Self> {
        let norm: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(norm));
        }
        Ok(Self(coeffs))
    }

    pub fn one_hot(i: usize, j: usize) -> Result<Self> {
        if i > 1 || j > 1 {
            return Err(Error::InvalidArgument(format!("sector ({i}, {j}) out of range")));
        }
        let mut c = [C64::new(0.0, 0.0); 4];
        c[2 * i + j] = C64::new(1.0, 0.0);
        Ok(Self(c))
    }

    pub fn uniform() -> Self {
        Self([C64::new(0.5, 0.0); 4])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[2 * i + j]
    }

    pub fn coeffs(&self) -> &[C64; 4] {
        &self.0
    }

    /// `Σ_{ij} |α_{ij}|⁴`.
    pub fn quartic_sum(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr().powi(2)).sum()
    }
}

impl TryFrom<[C64; 4]> for Alpha {
    type Error = Error;

    fn try_from(c: [C64; 4]) -> Result<Self> {
        Alpha::new(c)
    }
}

impl From<Alpha> for [C64; 4] {
    fn from(a: Alpha) -> Self {
        a.0
    }
}

impl FromStr for Alpha {
    type Err = Error;

    /// `uniform`, `one-hot:ij`, or four comma-separated real amplitudes.
    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(Alpha::uniform());
        }
        if let Some(idx) = s.strip_prefix("one-hot:") {
            let digits: Vec<usize> = idx.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect();
            if digits.len() != 2 {
                return Err(Error::InvalidArgument(format!("bad sector '{idx}'")));
            }
            return Alpha::one_hot(digits[0], digits[1]);
        }
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad alpha '{s}': {e}")))?;
        let coeffs: [f64; 4] =
            parts.try_into().map_err(|_| Error::InvalidArgument(format!("alpha needs four amplitudes, got '{s}'")))?;
        Alpha::new(coeffs.map(|x| C64::new(x, 0.0)))
    }
}

/// `Σ_{ij} α_{ij} W₁^i W₂^j |G|^{−1/2} Σ_g |g⟩` as a dense state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ToricGroundState {
    lattice: TorusLattice,
    group: GF2Group,
    alpha: Alpha,
    amplitudes: ComplexVector,
}

pub fn build_ground_state(n: usize, alpha: Alpha) -> Result<ToricGroundState> {
    Alpha::new(alpha.0)?;
    let lattice = TorusLattice::new(n)?;
    let group = star_group(&lattice);
    let elements = group.elements();
    let scale = 1.0 / (elements.len() as f64).sqrt();
    let mut amplitudes = ComplexVector::zeros(1usize << lattice.n_edges());
    for i in 0..2 {
        for j in 0..2 {
            let a = alpha.get(i, j);
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let w = lattice.loop_word(i, j);
            for &g in &elements {
                amplitudes[(w ^ g) as usize] += a * scale;
            }
        }
    }
    Ok(ToricGroundState { lattice, group, alpha, amplitudes })
}

impl ToricGroundState {
    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn group(&self) -> &GF2Group {
        &self.group
    }

    pub fn alpha(&self) -> &Alpha {
        &self.alpha
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// Largest `‖(O − I)|ψ⟩‖` over all star and plaquette operators.
    pub fn stabilizer_residual(&self) -> f64 {
        let psi = &self.amplitudes;
        let mut worst = 0.0f64;
        for star in self.lattice.stars() {
            let r: f64 = (0..psi.len()).map(|k| (psi[k ^ star as usize] - psi[k]).norm_sqr()).sum();
            worst = worst.max(r.sqrt());
        }
        for plaq in self.lattice.plaquettes() {
            let r: f64 = (0..psi.len())
                .map(|k| if (k as u64 & plaq).count_ones() % 2 == 1 { 4.0 * psi[k].norm_sqr() } else { 0.0 })
                .sum();
            worst = worst.max(r.sqrt());
        }
        worst
    }

    /// The ground state as a density matrix; only feasible at `n = 2`.
    pub fn density(&self, region: &Region) -> Result<DensityMatrix> {
        if self.lattice.n_edges() > MAX_REDUCED_EDGES {
            return Err(Error::Overflow(format!("{} edges is too many for a dense density matrix", self.lattice.n_edges())));
        }
        DensityMatrix::from_pure(&self.amplitudes, region.structure()?)
    }

    fn check_region(&self, region: &Region) -> Result<()> {
        region.validate()?;
        if region.n != self.lattice.n {
            return Err(Error::DimensionMismatch { expected: self.lattice.n, found: region.n });
        }
        Ok(())
    }
}

/// Partition of the four loop sectors into classes that no outcome on `A`
/// can distinguish, with the topology it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorPartition {
    pub classes: Vec<Vec<(usize, usize)>>,
    pub topology: Result<Topology>,
}

/// Sectors `k`, `k'` are merged when `(W^k W^{k'})` restricted to `A` is the
/// restriction of some star product, i.e. an outcome on `A` cannot tell them apart.
pub fn sector_partition(lattice: &TorusLattice, group: &GF2Group, region: &Region) -> SectorPartition {
    let a_mask = !lattice.mask(&region.s_edges) & ((1u64 << lattice.n_edges()) - 1);
    let on_a = group.restricted(a_mask);
    let merged = |i: usize, j: usize| on_a.contains(lattice.loop_word(i, j) & a_mask);
    let sectors = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let mut classes: Vec<Vec<(usize, usize)>> = Vec::new();
    for k in sectors {
        match classes.iter_mut().find(|c| merged(c[0].0 ^ k.0, c[0].1 ^ k.1)) {
            Some(c) => c.push(k),
            None => classes.push(vec![k]),
        }
    }
    let (w1, w2, both) = (merged(1, 0), merged(0, 1), merged(1, 1));
    let topology = match (w1, w2, both) {
        (false, false, false) => Ok(Topology::Contractible),
        (true, true, _) => Ok(Topology::NonContractibleBoth),
        (true, false, _) => Ok(Topology::NonContractibleH),
        (false, true, _) => Ok(Topology::NonContractibleV),
        (false, false, true) => Err(Error::TopologyMismatch {
            declared: region.declared_topology.to_string(),
            found: "only the product of both loops is hidden".into(),
        }),
    };
    SectorPartition { classes, topology }
}

/// Post-selected `c2` coherence with z-product bases on `S` and `A`, by simulation.
pub fn toric_cave(gs: &ToricGroundState, region: &Region) -> Result<f64> {
    Ok(toric_outcomes(gs, region)?.0)
}

/// Simulated average and the variance of the per-outcome coherence.
pub fn toric_outcomes(gs: &ToricGroundState, region: &Region) -> Result<(f64, f64)> {
    gs.check_region(region)?;
    let outcomes = postselect_pure_computational(&gs.amplitudes, &region.structure()?, Measure::C2)?;
    let mean: f64 = outcomes.iter().map(|o| o.probability * o.coherence).sum();
    let variance: f64 = outcomes.iter().map(|o| o.probability * (o.coherence - mean).powi(2)).sum();
    Ok((mean, variance))
}

/// Closed-form post-selected coherence after verifying the declared topology.
///
/// With `π_K = Σ_{k∈K} |α_k|²` for each class `K` of indistinguishable
/// sectors, the value is `1 − Σ_K (Σ_{k∈K} |α_k|⁴ / π_K) / |G_S|`.
pub fn toric_prediction(gs: &ToricGroundState, region: &Region) -> Result<f64> {
    gs.check_region(region)?;
    let partition = sector_partition(&gs.lattice, &gs.group, region);
    let found = partition.topology?;
    if found != region.declared_topology {
        return Err(Error::TopologyMismatch { declared: region.declared_topology.to_string(), found: found.to_string() });
    }
    let gs_order = subgroup_gs(&gs.group, region).order() as f64;
    let mut penalty = 0.0;
    for class in &partition.classes {
        let weights: Vec<f64> = class.iter().map(|&(i, j)| gs.alpha.get(i, j).norm_sqr()).collect();
        let pi: f64 = weights.iter().sum();
        if pi > 0.0 {
            penalty += weights.iter().map(|w| w * w).sum::<f64>() / pi;
        }
    }
    Ok(1.0 - penalty / gs_order)
}

/// Reduced state on the region, built from the sparse amplitudes.
pub fn reduced_state(gs: &ToricGroundState, region: &Region) -> Result<DensityMatrix> {
    gs.check_region(region)?;
    if region.s_edges.len() > MAX_REDUCED_EDGES {
        return Err(Error::Overflow(format!("{} region edges is too many for a dense reduced state", region.s_edges.len())));
    }
    let st = region.structure()?;
    let s = st.s_factors();
    let a = st.a_factors();
    let d_s = 1usize << s.len();
    let mut by_a: std::collections::BTreeMap<usize, Vec<(usize, C64)>> = Default::default();
    for (idx, amp) in gs.amplitudes.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let bits = st.unflatten(idx);
        let si = s.iter().fold(0, |acc, &k| acc * 2 + bits[k]);
        let ai = a.iter().fold(0, |acc, &k| acc * 2 + bits[k]);
        by_a.entry(ai).or_default().push((si, *amp));
    }
    let mut rho = ComplexMatrix::zeros(d_s, d_s);
    for group in by_a.values() {
        for &(s1, a1) in group {
            for &(s2, a2) in group {
                rho[(s1, s2)] += a1 * a2.conj();
            }
        }
    }
    DensityMatrix::new(rho, TensorStructure::single(d_s)?)
}

/// Target basis for [`flat_spectrum_c2`].
#[derive(Clone, Debug, PartialEq)]
pub enum FlatTarget {
    /// Any basis unbiased to the eigenbasis.
    Mub,
    /// Explicit eigenbasis, whose first `rank` vectors span the support, and target basis.
    Given { eigenbasis: Basis, target: Basis },
}

/// `c2` of a state with `rank` equal nonzero eigenvalues on a `d_s`-dimensional space.
pub fn flat_spectrum_c2(rank: usize, d_s: usize, target: &FlatTarget) -> Result<f64> {
    if rank == 0 || rank > d_s {
        return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={d_s}")));
    }
    match target {
        FlatTarget::Mub => Ok(1.0 / rank as f64 - 1.0 / d_s as f64),
        FlatTarget::Given { eigenbasis, target } => {
            if eigenbasis.dim() != d_s || target.dim() != d_s {
                return Err(Error::DimensionMismatch { expected: d_s, found: eigenbasis.dim().max(target.dim()) });
            }
            let overlaps = target.vectors().adjoint() * eigenbasis.vectors();
            let diag: f64 = (0..d_s)
                .map(|k| ((0..rank).map(|a| overlaps[(k, a)].norm_sqr()).sum::<f64>() / rank as f64).powi(2))
                .sum();
            Ok(1.0 / rank as f64 - diag)
        }
    }
}

/// Machine-readable outcome of one toric experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToricResult {
    pub n: usize,
    pub s_edges: Vec<usize>,
    pub topology: Topology,
    pub cave_simulated: f64,
    pub cave_predicted: f64,
    pub outcome_variance: f64,
    pub g_order: u64,
    pub gs_order: u64,
    pub alpha: Alpha,
}

pub fn run_toric(n: usize, alpha: Alpha, region: &Region) -> Result<ToricResult> {
    let gs = build_ground_state(n, alpha)?;
    let (cave_simulated, outcome_variance) = toric_outcomes(&gs, region)?;
    let cave_predicted = toric_prediction(&gs, region)?;
    Ok(ToricResult {
        n,
        s_edges: region.s_edges.clone(),
        topology: region.declared_topology,
        cave_simulated,
        cave_predicted,
        outcome_variance,
        g_order: gs.group.order(),
        gs_order: subgroup_gs(&gs.group, region).order(),
        alpha,
    })
}
