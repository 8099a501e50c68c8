//! Command-line and config-file arguments.
//!
//! Every experiment flag has a config key of the same (kebab-case) name.
//! Fields are optional so that a flag can override a file value; defaults
//! are applied when the experiment runs.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Parser, Debug, Clone)]
#[command(name = "locoh", version, about = "Localizable coherence experiments", args_override_self = true)]
pub struct Cli {
    /// JSON config; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    #[command(flatten)]
    Experiment(Experiment),
    /// Run one experiment for each value of a single ranged parameter.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Ranged parameter as `key=v1,v2,...`; exactly one is required.
    #[arg(long = "range", value_name = "KEY=VALUES")]
    pub ranges: Vec<String>,
    #[command(subcommand)]
    pub experiment: Option<Experiment>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Experiment {
    /// Monte Carlo over global Haar states against the closed forms.
    Haar(HaarArgs),
    /// Monte Carlo over bubble states against the closed forms.
    Bubbles(BubbleArgs),
    /// Monte Carlo over factorized states against the closed forms.
    Factorized(FactorizedArgs),
    /// Spreading of a local perturbation along a spin chain.
    Spread(SpreadArgs),
    /// Post-selected coherence of a toric-code ground state.
    Toric(ToricArgs),
    /// Coherence and localizable coherence of a state from a file.
    Coherence(CoherenceArgs),
    /// Optimal system basis for a commuting post-selected ensemble.
    OptimalBasis(OptimalBasisArgs),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Haar(_) => "haar",
            Experiment::Bubbles(_) => "bubbles",
            Experiment::Factorized(_) => "factorized",
            Experiment::Spread(_) => "spread",
            Experiment::Toric(_) => "toric",
            Experiment::Coherence(_) => "coherence",
            Experiment::OptimalBasis(_) => "optimal-basis",
        }
    }

    pub fn to_value(&self) -> serde_json::Value {
        let v = match self {
            Experiment::Haar(a) => serde_json::to_value(a),
            Experiment::Bubbles(a) => serde_json::to_value(a),
            Experiment::Factorized(a) => serde_json::to_value(a),
            Experiment::Spread(a) => serde_json::to_value(a),
            Experiment::Toric(a) => serde_json::to_value(a),
            Experiment::Coherence(a) => serde_json::to_value(a),
            Experiment::OptimalBasis(a) => serde_json::to_value(a),
        };
        v.expect("argument structs serialize")
    }

    pub fn from_value(name: &str, value: serde_json::Value) -> Result<Self, String> {
        fn de<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T, String> {
            serde_json::from_value(v).map_err(|e| e.to_string())
        }
        Ok(match name {
            "haar" => Experiment::Haar(de(value)?),
            "bubbles" => Experiment::Bubbles(de(value)?),
            "factorized" => Experiment::Factorized(de(value)?),
            "spread" => Experiment::Spread(de(value)?),
            "toric" => Experiment::Toric(de(value)?),
            "coherence" => Experiment::Coherence(de(value)?),
            "optimal-basis" => Experiment::OptimalBasis(de(value)?),
            other => return Err(format!("unknown subcommand '{other}'")),
        })
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Experiment::Haar(a) => a.seed,
            Experiment::Bubbles(a) => a.seed,
            Experiment::Factorized(a) => a.seed,
            Experiment::Spread(a) => a.seed,
            Experiment::OptimalBasis(a) => a.seed,
            Experiment::Toric(_) | Experiment::Coherence(_) => None,
        }
    }
}

/// Accepts either a single value or a list.
fn one_or_many<'de, D, T>(d: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(Option::<OneOrMany<T>>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolArg {
    #[value(alias = "trace-out", alias = "ctr")]
    Trace,
    #[value(alias = "non-selective", alias = "cb")]
    Nonselective,
    #[value(alias = "post-selected", alias = "cave")]
    Postselected,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisArg {
    Z,
    Fourier,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct HaarArgs {
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    #[arg(long)]
    pub ds: Option<usize>,
    #[arg(long)]
    pub da: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseArg {
    A,
    B,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct BubbleArgs {
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
    /// Number of bubbles.
    #[arg(long)]
    pub n: Option<usize>,
    /// Constituents per bubble.
    #[arg(long)]
    pub xi: Option<usize>,
    #[arg(long)]
    pub dloc: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorMode {
    /// Independent unitaries on `S` and `A`.
    Sa,
    /// Independent unitaries on every constituent.
    Full,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FactorizedArgs {
    #[arg(long, value_enum)]
    pub mode: Option<FactorMode>,
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    #[arg(long)]
    pub ds: Option<usize>,
    #[arg(long)]
    pub da: Option<usize>,
    /// Constituents in `S` (mode full).
    #[arg(long)]
    pub ns: Option<usize>,
    /// Constituents in `A` (mode full).
    #[arg(long)]
    pub na: Option<usize>,
    #[arg(long)]
    pub dloc: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelArg {
    Depolarizing,
    ResetPlus,
    Hadamard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialArg {
    /// `|+⟩` on the system site, one shared random state elsewhere.
    Product,
    /// Maximally mixed.
    Mixed,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SpreadArgs {
    #[arg(long)]
    pub sites: Option<usize>,
    #[arg(long)]
    pub j: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub s_site: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "one_or_many")]
    pub a_sites: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(deserialize_with = "one_or_many")]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    /// Depolarizing strength.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,
    #[arg(long, value_enum)]
    pub initial: Option<InitialArg>,
    /// Cone velocity; points with `l ≤ v·t` are left out of the fit.
    #[arg(long)]
    pub velocity: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ToricArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// `uniform`, `one-hot:ij` or four comma-separated amplitudes.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Region file `{n, s_edges, declared_topology}`.
    #[arg(long)]
    pub region: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct CoherenceArgs {
    /// State file `{dims, s_mask, vector | matrix}`.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub basis_s: Option<BasisArg>,
    #[arg(long, value_enum)]
    pub basis_a: Option<BasisArg>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct OptimalBasisArgs {
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub basis_a: Option<BasisArg>,
    /// Random system bases to compare against.
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}
