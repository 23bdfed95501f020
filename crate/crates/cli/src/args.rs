use std::path::PathBuf;

use bsft::circuits::EcStyle;
use bsft::faultsim::DescriptorSet;
use bsft::malignancy::{DEFAULT_DESCRIPTOR_BUDGET, DEFAULT_EVAL_CAP};
use bsft::threshold::{ToffoliVariant, DEFAULT_K_TERMS};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "bsft", version, about = "Bacon-Shor fault-tolerance analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count malignant location sets of a CNOT exRec.
    Count(CountArgs),
    /// Estimate the exRec failure rate under i.i.d. location faults.
    DirectSim(DirectSimArgs),
    /// Solve the threshold recursion.
    Threshold(ThresholdArgs),
    /// Evaluate a distillation map.
    #[command(subcommand)]
    Distill(DistillCommand),
    /// Bound the error of injected ancillas.
    AncBound(AncBoundArgs),
    /// Summarize result files as a markdown table.
    Report(ReportArgs),
    /// Print a gadget circuit in text form.
    Circuit(CircuitArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeArg {
    Bs3,
    Bs5,
}

impl CodeArg {
    pub fn size(self) -> usize {
        match self {
            CodeArg::Bs3 => 3,
            CodeArg::Bs5 => 5,
        }
    }

    pub fn parameters(self) -> &'static str {
        match self {
            CodeArg::Bs3 => "[[9,1,3]]",
            CodeArg::Bs5 => "[[25,1,5]]",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EcArg {
    Gauge,
    Steane,
    Knill,
}

impl From<EcArg> for EcStyle {
    fn from(e: EcArg) -> EcStyle {
        match e {
            EcArg::Gauge => EcStyle::Gauge,
            EcArg::Steane => EcStyle::Steane,
            EcArg::Knill => EcStyle::Knill,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorArg {
    Full,
    Separated,
}

impl From<DescriptorArg> for DescriptorSet {
    fn from(d: DescriptorArg) -> DescriptorSet {
        match d {
            DescriptorArg::Full => DescriptorSet::Full,
            DescriptorArg::Separated => DescriptorSet::Separated,
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize)]
pub struct GadgetArgs {
    #[arg(long, value_enum)]
    pub code: CodeArg,
    #[arg(long = "ec", value_enum)]
    pub ec_style: EcArg,
    /// Omit the ECs next to preparations and measurements.
    #[arg(long)]
    pub contracted: bool,
    /// Treat the Bell measurements of the leading Knill gadgets as ideal.
    #[arg(long)]
    pub ideal_bell: bool,
    #[arg(long, value_enum, default_value = "full")]
    pub descriptors: DescriptorArg,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct OutArgs {
    /// Write the result here instead of standard output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct CountArgs {
    #[command(flatten)]
    pub gadget: GadgetArgs,
    /// Exhaustive sweep over all location pairs.
    #[arg(long, conflicts_with = "mc", required_unless_present = "mc")]
    pub exact_pairs: bool,
    /// Uniform sampling of location sets.
    #[arg(long)]
    pub mc: bool,
    #[arg(long, default_value_t = 2)]
    pub set_size: usize,
    #[arg(long, short = 'n', default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; defaults to BSFT_WORKERS, then the core count.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Descriptor assignments tried per sampled set before falling back to sampling.
    #[arg(long, default_value_t = DEFAULT_DESCRIPTOR_BUDGET)]
    pub budget: u64,
    /// Upper limit on assignment evaluations for an exact sweep.
    #[arg(long, default_value_t = DEFAULT_EVAL_CAP)]
    pub eval_cap: u64,
    /// Monte-Carlo progress file; an existing compatible file is resumed.
    #[arg(long)]
    #[serde(skip)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    #[serde(skip)]
    pub checkpoint_every: u64,
    /// Also write the alpha matrix as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write every malignant witness as JSON.
    #[arg(long)]
    pub witnesses: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct DirectSimArgs {
    #[command(flatten)]
    pub gadget: GadgetArgs,
    /// Fault probability per location.
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Bs3Steane,
    Bs3Knill,
    Bs5Steane,
}

/// Recursion coefficients; each flag overrides the preset value.
#[derive(Args, Clone, Debug, Default, Serialize)]
pub struct ModelArgs {
    #[arg(long)]
    pub t: Option<u32>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub a_str: Option<f64>,
    #[arg(long)]
    pub b_str: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub c0_str: Option<f64>,
    /// Divide by the acceptance probability of verified ancillas.
    #[arg(long)]
    pub conditioned: bool,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct ThresholdArgs {
    #[arg(long, value_enum, required_unless_present = "a")]
    pub preset: Option<Preset>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Subcommand, Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistillCommand {
    /// |+i> purification rounds.
    PlusI {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        rounds: u32,
        #[command(flatten)]
        #[serde(skip)]
        out: OutArgs,
    },
    /// Toffoli-state distillation rounds.
    Toffoli {
        #[arg(long, value_enum, default_value = "improved")]
        variant: VariantArg,
        /// Error components a,b,c.
        #[arg(long, value_delimiter = ',', required = true)]
        state: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        rounds: u32,
        #[command(flatten)]
        #[serde(skip)]
        out: OutArgs,
    },
    /// Threshold of recursive Toffoli preparation.
    ToffoliPrep {
        #[arg(long)]
        nc: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        t: u32,
        #[command(flatten)]
        #[serde(skip)]
        out: OutArgs,
    },
}

impl DistillCommand {
    pub fn out(&self) -> &OutArgs {
        match self {
            DistillCommand::PlusI { out, .. } | DistillCommand::Toffoli { out, .. } | DistillCommand::ToffoliPrep { out, .. } => out,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Crude,
    Improved,
}

impl From<VariantArg> for ToffoliVariant {
    fn from(v: VariantArg) -> ToffoliVariant {
        match v {
            VariantArg::Crude => ToffoliVariant::Crude,
            VariantArg::Improved => ToffoliVariant::Improved,
        }
    }
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct AncBoundArgs {
    #[arg(long, value_enum, required_unless_present = "a")]
    pub preset: Option<Preset>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Noise strength; defaults to the preset's threshold reference value.
    #[arg(long)]
    pub p: Option<f64>,
    /// Decoder location count.
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_K_TERMS)]
    pub k_terms: usize,
    /// Extra injection locations: 1 for single-qubit states, 4 for Toffoli states.
    #[arg(long, default_value_t = 1)]
    pub extra_prep_locs: u32,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Args, Clone, Debug)]
pub struct ReportArgs {
    /// Result files written by `count` or `threshold`.
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitKind {
    Ec,
    Exrec,
    Decoder,
}

#[derive(Args, Clone, Debug)]
pub struct CircuitArgs {
    #[arg(long, value_enum)]
    pub kind: CircuitKind,
    #[arg(long, value_enum)]
    pub code: CodeArg,
    #[arg(long = "ec", value_enum, default_value = "steane")]
    pub ec_style: EcArg,
    #[arg(long)]
    pub contracted: bool,
    #[arg(long)]
    pub ideal_bell: bool,
    #[command(flatten)]
    pub out: OutArgs,
}
