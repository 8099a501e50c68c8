//! Experiment implementations behind each subcommand.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::args::*;
use super::CliError;
use crate::coherence::{Basis, FactorizedBasis, Measure};
use crate::localization::{self, Protocol};
use crate::random::{
    analytic_average, bubble_average, bubble_ratio, fully_factorized_average, mc_estimate, to_f64, AnalyticProtocol,
    BubbleCase, Functional, McRecord, SamplerSpec,
};
use crate::spreading::{build_tfim, fit_light_cone, product_state, spreading_profile, LocalChannel};
use crate::tensor::{ComplexMatrix, ComplexVector, DensityMatrix, TensorStructure, C64};
use crate::toric::{run_toric, Alpha, Region};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "LOCOH_SEED";
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Resolved arguments and numeric payload of one run.
pub struct Outcome {
    pub config: Value,
    pub seed: Option<u64>,
    pub payload: Value,
}

pub fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Config(format!("{SEED_ENV}='{s}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn seed_or_default(seed: Option<u64>) -> Result<u64, CliError> {
    seed.map_or_else(default_seed, Ok)
}

fn functional(p: ProtocolArg) -> Functional {
    match p {
        ProtocolArg::Trace => Functional::TraceOut,
        ProtocolArg::Nonselective => Functional::NonSelective,
        ProtocolArg::Postselected => Functional::PostSelected,
        ProtocolArg::Full => Functional::Full,
    }
}

fn basis(arg: BasisArg, dim: usize) -> Basis {
    match arg {
        BasisArg::Z => Basis::computational(dim),
        BasisArg::Fourier => Basis::fourier(dim),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result types serialize")
}

fn with_fields(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

pub fn run(exp: &Experiment) -> Result<Outcome, CliError> {
    match exp {
        Experiment::Haar(a) => haar(a.clone()),
        Experiment::Bubbles(a) => bubbles(a.clone()),
        Experiment::Factorized(a) => factorized(a.clone()),
        Experiment::Spread(a) => spread(a.clone()),
        Experiment::Toric(a) => toric(a.clone()),
        Experiment::Coherence(a) => coherence(a.clone()),
        Experiment::OptimalBasis(a) => optimal_basis(a.clone()),
    }
}

fn haar(mut a: HaarArgs) -> Result<Outcome, CliError> {
    let protocol = *a.protocol.get_or_insert(ProtocolArg::Trace);
    let ds = *a.ds.get_or_insert(2);
    let da = *a.da.get_or_insert(2);
    let samples = *a.samples.get_or_insert(DEFAULT_SAMPLES);
    let seed = seed_or_default(a.seed)?;
    a.seed = Some(seed);
    let spec = SamplerSpec::global_haar(ds, da, seed)?;
    let f = functional(protocol);
    let est = mc_estimate(&spec, f, &FactorizedBasis::computational(ds, da), samples)?;
    let exact = match protocol {
        ProtocolArg::Trace => AnalyticProtocol::TraceOut,
        ProtocolArg::Nonselective => AnalyticProtocol::NonSelective,
        ProtocolArg::Postselected => AnalyticProtocol::PostSelectedExact,
        ProtocolArg::Full => AnalyticProtocol::Full,
    };
    let analytic = to_f64(&analytic_average(exact, ds, da)?);
    let mut payload = to_value(&McRecord::new(&spec, f, &est, Some(analytic)));
    if protocol == ProtocolArg::Postselected {
        let mf = to_f64(&analytic_average(AnalyticProtocol::PostSelectedMeanField, ds, da)?);
        payload = with_fields(payload, json!({ "mean_field": mf, "mean_field_deviation": (est.mean - mf).abs() }));
    }
    Ok(Outcome { config: to_value(&a), seed: Some(seed), payload })
}

fn bubbles(mut a: BubbleArgs) -> Result<Outcome, CliError> {
    let case = *a.case.get_or_insert(CaseArg::A);
    let n = *a.n.get_or_insert(if case == CaseArg::A { 1 } else { 2 });
    let xi = *a.xi.get_or_insert(2);
    let dloc = *a.dloc.get_or_insert(2);
    let samples = *a.samples.get_or_insert(DEFAULT_SAMPLES);
    let seed = seed_or_default(a.seed)?;
    a.seed = Some(seed);
    let case = match case {
        CaseArg::A => BubbleCase::A,
        CaseArg::B => BubbleCase::B,
    };
    let spec = SamplerSpec::bubbles(case, n, xi, dloc, seed)?;
    let exact = bubble_average(case, n, xi, dloc)?;
    let d_a = spec.structure.d_a();
    let est = mc_estimate(&spec, Functional::NonSelective, &FactorizedBasis::computational(dloc * dloc, d_a), samples)?;
    let payload = with_fields(
        to_value(&McRecord::new(&spec, Functional::NonSelective, &est, Some(to_f64(&exact)))),
        json!({ "analytic_exact": exact.to_string(), "ratio_ab": to_f64(&bubble_ratio(dloc)?) }),
    );
    Ok(Outcome { config: to_value(&a), seed: Some(seed), payload })
}

fn factorized(mut a: FactorizedArgs) -> Result<Outcome, CliError> {
    let mode = *a.mode.get_or_insert(FactorMode::Sa);
    let protocol = *a.protocol.get_or_insert(ProtocolArg::Nonselective);
    let samples = *a.samples.get_or_insert(DEFAULT_SAMPLES);
    let seed = seed_or_default(a.seed)?;
    a.seed = Some(seed);
    let (spec, analytic) = match mode {
        FactorMode::Sa => {
            let ds = *a.ds.get_or_insert(2);
            let da = *a.da.get_or_insert(2);
            let analytic = (protocol == ProtocolArg::Nonselective)
                .then(|| analytic_average(AnalyticProtocol::FactorizedNonSelective, ds, da))
                .transpose()?;
            (SamplerSpec::factorized(ds, da, seed)?, analytic)
        }
        FactorMode::Full => {
            let ns = *a.ns.get_or_insert(1);
            let na = *a.na.get_or_insert(1);
            let dloc = *a.dloc.get_or_insert(2);
            let analytic = matches!(protocol, ProtocolArg::Nonselective | ProtocolArg::Full)
                .then(|| fully_factorized_average(ns, na, dloc))
                .transpose()?;
            (SamplerSpec::fully_factorized(ns, na, dloc, seed)?, analytic)
        }
    };
    let st = &spec.structure;
    let f = functional(protocol);
    let est = mc_estimate(&spec, f, &FactorizedBasis::computational(st.d_s(), st.d_a()), samples)?;
    let mut payload = to_value(&McRecord::new(&spec, f, &est, analytic.as_ref().map(to_f64)));
    if let Some(x) = analytic {
        payload = with_fields(payload, json!({ "analytic_exact": x.to_string() }));
    }
    Ok(Outcome { config: to_value(&a), seed: Some(seed), payload })
}

fn spread(mut a: SpreadArgs) -> Result<Outcome, CliError> {
    let sites = *a.sites.get_or_insert(8);
    let j = *a.j.get_or_insert(1.0);
    let g = *a.g.get_or_insert(1.05);
    let h = *a.h.get_or_insert(0.25);
    let s_site = *a.s_site.get_or_insert(0);
    let a_sites = a.a_sites.get_or_insert_with(|| (0..sites).filter(|&k| k != s_site).collect()).clone();
    let times = a.times.get_or_insert_with(|| vec![0.1, 0.2, 0.3, 0.4, 0.5]).clone();
    let channel = *a.channel.get_or_insert(ChannelArg::Depolarizing);
    let p = *a.p.get_or_insert(1.0);
    let basis_arg = *a.basis.get_or_insert(BasisArg::Fourier);
    let initial = *a.initial.get_or_insert(InitialArg::Product);
    let velocity = *a.velocity.get_or_insert(0.0);
    let seed = seed_or_default(a.seed)?;
    a.seed = Some(seed);
    if a_sites.is_empty() || times.is_empty() {
        return Err(CliError::Config("a-sites and times must be nonempty".into()));
    }
    let ham = build_tfim(sites, j, g, h)?;
    let rho0 = match initial {
        InitialArg::Product => chain_product_state(sites, s_site, seed)?,
        InitialArg::Mixed => DensityMatrix::maximally_mixed(TensorStructure::uniform(2, sites, &[s_site])?),
    };
    let plus = vec![C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2];
    let ch = match channel {
        ChannelArg::Depolarizing => LocalChannel::depolarizing(0, 2, p)?,
        ChannelArg::ResetPlus => LocalChannel::reset_to(0, &plus)?,
        ChannelArg::Hadamard => LocalChannel::unitary(vec![0], crate::coherence::dft_matrix(2), "hadamard")?,
    };
    let profile = spreading_profile(&rho0, &ch, &ham, &basis(basis_arg, 2), s_site, &a_sites, &times)?;
    let fit = match fit_light_cone(&profile, velocity) {
        Ok(f) => json!({ "fit": to_value(&f) }),
        Err(e) => json!({ "fit": Value::Null, "fit_error": e.to_string() }),
    };
    let payload = with_fields(json!({ "rows": to_value(&profile.rows) }), fit);
    Ok(Outcome { config: to_value(&a), seed: Some(seed), payload })
}

/// `|+⟩` on `s_site`, one seeded Haar-random qubit state on every other site.
pub fn chain_product_state(sites: usize, s_site: usize, seed: u64) -> Result<DensityMatrix, CliError> {
    let mut rng = crate::random::stream_rng(seed, 0);
    let other: Vec<C64> = crate::random::haar_state(2, &mut rng).iter().copied().collect();
    let plus = vec![C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2];
    let states: Vec<Vec<C64>> = (0..sites).map(|k| if k == s_site { plus.clone() } else { other.clone() }).collect();
    let rho = product_state(&states)?;
    Ok(rho.with_structure(TensorStructure::uniform(2, sites, &[s_site])?)?)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn toric(mut a: ToricArgs) -> Result<Outcome, CliError> {
    let n = *a.n.get_or_insert(2);
    let alpha: Alpha = a.alpha.get_or_insert_with(|| "uniform".into()).parse()?;
    let path = a.region.clone().ok_or_else(|| CliError::Config("toric needs --region".into()))?;
    let region = Region::from_json(&read_file(&path)?)?;
    if region.n != n {
        return Err(CliError::Config(format!("region file is for n = {}, run asks for n = {n}", region.n)));
    }
    let result = run_toric(n, alpha, &region)?;
    Ok(Outcome { config: to_value(&a), seed: None, payload: to_value(&result) })
}

/// State file: factor dimensions, system mask, and either a pure vector or
/// a density matrix (rows of `[re, im]` pairs).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub s_mask: Vec<bool>,
    #[serde(default)]
    pub vector: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

impl StateFile {
    pub fn load(path: &Path) -> Result<DensityMatrix, CliError> {
        let file: StateFile = serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Config(format!("bad state file {}: {e}", path.display())))?;
        file.into_state()
    }

    pub fn into_state(self) -> Result<DensityMatrix, CliError> {
        let st = TensorStructure::new(self.dims, self.s_mask)?;
        let c = |p: &[f64; 2]| C64::new(p[0], p[1]);
        match (self.vector, self.matrix) {
            (Some(v), None) => {
                let psi = ComplexVector::from_iterator(v.len(), v.iter().map(c));
                Ok(DensityMatrix::from_pure(&psi, st)?)
            }
            (None, Some(rows)) => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(CliError::Config("density matrix rows must all have the same length".into()));
                }
                let m = ComplexMatrix::from_fn(d, d, |i, j| c(&rows[i][j]));
                Ok(DensityMatrix::new(m, st)?)
            }
            _ => Err(CliError::Config("state file needs exactly one of 'vector' or 'matrix'".into())),
        }
    }
}

#[derive(Serialize)]
struct MeasureValues {
    full: f64,
    trace_out: Option<f64>,
    non_selective: Option<f64>,
    post_selected: Option<f64>,
}

fn coherence(mut a: CoherenceArgs) -> Result<Outcome, CliError> {
    let path = a.state.clone().ok_or_else(|| CliError::Config("coherence needs --state".into()))?;
    let bs_arg = *a.basis_s.get_or_insert(BasisArg::Z);
    let ba_arg = *a.basis_a.get_or_insert(BasisArg::Z);
    let rho = StateFile::load(&path)?;
    let st = rho.structure().clone();
    let fb = FactorizedBasis::new(basis(bs_arg, st.d_s()), basis(ba_arg, st.d_a()));
    let mut out = serde_json::Map::new();
    for m in [Measure::C1, Measure::C2] {
        let full = localization::full_coherence(&rho, &fb, m)?;
        let values = if st.is_proper_bipartition() {
            MeasureValues {
                full,
                trace_out: Some(localization::c_trace(&rho, &fb.bs, m)?),
                non_selective: Some(localization::c_nonselective(&rho, &fb, m)?),
                post_selected: Some(localization::c_postselected(&rho, &fb, m)?),
            }
        } else {
            MeasureValues { full, trace_out: None, non_selective: None, post_selected: None }
        };
        out.insert(m.name().to_string(), to_value(&values));
    }
    Ok(Outcome { config: to_value(&a), seed: None, payload: Value::Object(out) })
}

fn optimal_basis(mut a: OptimalBasisArgs) -> Result<Outcome, CliError> {
    let path = a.state.clone().ok_or_else(|| CliError::Config("optimal-basis needs --state".into()))?;
    let ba_arg = *a.basis_a.get_or_insert(BasisArg::Z);
    let candidates = *a.candidates.get_or_insert(500);
    let seed = seed_or_default(a.seed)?;
    a.seed = Some(seed);
    let rho = StateFile::load(&path)?;
    let ba = basis(ba_arg, rho.structure().d_a());
    let ens = localization::measure_outcomes(&rho, &ba)?;
    let best = localization::optimal_basis_commuting(&ens)?;
    let fb = FactorizedBasis::new(best.clone(), ba.clone());
    let mut payload = json!({
        "basis": to_value(&best),
        "max_commutator_norm": ens.max_commutator_norm(),
        "c_nonselective": localization::c_nonselective(&rho, &fb, Measure::C2)?,
        "c_postselected": localization::c_postselected(&rho, &fb, Measure::C2)?,
    });
    if candidates > 0 {
        let (_, _, cb) = localization::best_random_basis(&rho, &ba, Protocol::NonSelective, Measure::C2, candidates, seed)?;
        let (_, _, cave) = localization::best_random_basis(&rho, &ba, Protocol::PostSelected, Measure::C2, candidates, seed)?;
        payload = with_fields(payload, json!({ "best_random_nonselective": cb, "best_random_postselected": cave }));
    }
    Ok(Outcome { config: to_value(&a), seed: Some(seed), payload })
}
