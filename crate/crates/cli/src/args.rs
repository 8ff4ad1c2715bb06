use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "rhomix", version, about = "Maximal correlation, tensorization bounds and spectral-gap tools")]
pub struct Cli {
    /// Worker threads; falls back to RHOMIX_THREADS, then to the number of cores.
    #[arg(long, global = true, env = "RHOMIX_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Master seed for every randomized computation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output format; JSON unless the command has a plain-text table.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Validate inputs and stop before computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Slack tolerance for soundness checks.
    #[arg(long, global = true, default_value_t = 1e-9, allow_negative_numbers = true)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximal correlation of a finite pair or of two blocks of a finite system.
    Maxcorr(MaxcorrArgs),
    /// Supremum of conditional maximal correlations over a conditioning pool.
    Subjective(SubjectiveArgs),
    /// Mixing coefficients of a pair, or lagged correlations of a Markov chain.
    Mixing(MixingArgs),
    /// Tensorization bounds from decorrelation coefficients.
    TensorBound(TensorBoundArgs),
    /// Event-based criteria for maximal correlation.
    EventBound(EventBoundArgs),
    /// The extremal law with maximal correlation ε and its discretizations.
    Chogosov(ChogosovArgs),
    /// Spectral gap of heat-bath Glauber dynamics and its lower bounds.
    GlauberGap(GlauberGapArgs),
    /// Continuous-time Glauber simulation with relaxation-rate fit.
    GlauberSim(GlauberSimArgs),
    /// Ising torus: constants, exact laws, decorrelation kernels and snapshots.
    Ising(IsingArgs),
    /// Gaussian lattice model with attractive quadratic couplings.
    Quadratic(QuadraticArgs),
    /// Convolution inverse of a lattice kernel, or banded-matrix inverse decay.
    ConvInverse(ConvInverseArgs),
    /// Block-sum central limit experiment.
    Clt(CltArgs),
    /// Joint law of a ring of damped oscillators at two times.
    OuChain(OuChainArgs),
    /// Apparent angles between three lines in three-space.
    ThreeLines(ThreeLinesArgs),
    /// Run the acceptance criteria and print a pass/fail table.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct MaxcorrArgs {
    /// FinitePair JSON.
    #[arg(long, group = "input", required_unless_present_any = ["system", "gaussian"])]
    pub pair: Option<PathBuf>,
    /// FiniteSystem JSON; needs --x and --y.
    #[arg(long, group = "input", requires_all = ["x", "y"])]
    pub system: Option<PathBuf>,
    /// Gaussian covariance JSON; needs --x and --y.
    #[arg(long, group = "input", requires_all = ["x", "y"])]
    pub gaussian: Option<PathBuf>,
    /// Variable indices of the first block.
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub y: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct SubjectiveArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub y: Vec<usize>,
    /// Conditioning pool; defaults to every other variable.
    #[arg(long, value_delimiter = ',')]
    pub pool: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct MixingArgs {
    #[arg(long, conflicts_with = "chain", required_unless_present = "chain")]
    pub pair: Option<PathBuf>,
    /// Column-stochastic transition matrix as a JSON array of rows.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct TensorBoundArgs {
    #[command(subcommand)]
    pub which: TensorBound,
}

#[derive(Debug, Subcommand)]
pub enum TensorBound {
    /// Sequential bound √(1 − Π(1 − ε_i²)).
    Simple {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        eps: Vec<f64>,
    },
    /// Operator-norm bound from an ε matrix (JSON array of rows).
    Nm {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// sin(Σ arcsin ε ∧ π/2) for a list of coefficients.
    Zz {
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
    },
    /// Lattice bounds (Z^n, distance, sublattice) from a kernel JSON.
    Lattice {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0, 8.0])]
        distance: Vec<f64>,
    },
    /// Positive vector certifying a spectral-radius bound of a nonnegative matrix.
    Pf {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
    },
    /// Random soundness sweep of the bounds against exact correlations.
    Sweep {
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[arg(long, default_value_t = 3)]
        max_vars: usize,
        #[arg(long, default_value_t = 3)]
        max_alphabet: usize,
    },
}

#[derive(Debug, Args)]
pub struct EventBoundArgs {
    #[command(subcommand)]
    pub which: EventBound,
}

#[derive(Debug, Subcommand)]
pub enum EventBound {
    /// Worst normalized event covariance of a pair against its maximal correlation.
    Pair {
        #[arg(long)]
        pair: PathBuf,
    },
    /// ‖ζ‖‖θ‖ from sampled profiles on a uniform grid of [0, 1].
    Weak {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        zeta: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        theta: Vec<f64>,
    },
    /// Event ratio of the two-scale construction on an m-grid.
    Nu {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 512)]
        m: usize,
    },
}

#[derive(Debug, Args)]
pub struct ChogosovArgs {
    #[arg(long)]
    pub eps: f64,
    #[command(subcommand)]
    pub which: Chogosov,
}

#[derive(Debug, Subcommand)]
pub enum Chogosov {
    /// Operator norm of the m-cell discretization.
    Opnorm {
        #[arg(long, default_value_t = 1024)]
        m: usize,
    },
    /// Point cloud (p, q, branch).
    Sample {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Integral identity reproducing Λ(ε) at each p.
    Identity {
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 0.9])]
        p: Vec<f64>,
    },
    /// Relative residual of the adjoint eigen-identity for p^{-1/2}.
    Lstar {
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.5, 1.0, 10.0])]
        points: Vec<f64>,
    },
    /// Worst interval-event ratio on a g-grid.
    EventRatio {
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
}

#[derive(Debug, Args)]
pub struct GlauberGapArgs {
    /// Binary or general FiniteSystem: exact gap plus bounds from measured ε̂.
    #[arg(long, group = "input")]
    pub system: Option<PathBuf>,
    /// ε matrix (JSON array of rows): bounds only.
    #[arg(long, group = "input")]
    pub eps_matrix: Option<PathBuf>,
    /// Translation-invariant kernel: sublattice block-dynamics bound.
    #[arg(long, group = "input")]
    pub kernel: Option<PathBuf>,
    /// Sweep this many random spin systems.
    #[arg(long, group = "input")]
    pub sweep: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub max_spins: usize,
}

#[derive(Debug, Args)]
pub struct GlauberSimArgs {
    #[arg(long, group = "model", required_unless_present = "ising")]
    pub system: Option<PathBuf>,
    /// Ising torus as n,side,temperature.
    #[arg(long, group = "model", value_delimiter = ',')]
    pub ising: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1_000_000)]
    pub events: usize,
    #[arg(long, default_value_t = 0.05)]
    pub sample_dt: f64,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Emit the transition list (CSV: time, site, new_state) instead of the fit.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Debug, Args)]
pub struct IsingArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub side: usize,
    #[arg(long, short = 'T')]
    pub temperature: f64,
    #[command(subcommand)]
    pub which: Ising,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EpsMethodArg {
    Exact,
    Subjective,
    Mcmc,
}

#[derive(Debug, Subcommand)]
pub enum Ising {
    /// c₀, k₀ and the single/pair probability floors.
    Constants,
    /// Exact Gibbs law of a small torus as FiniteSystem JSON.
    Exact,
    /// Decorrelation kernel ε(z) of the torus.
    Epsilon {
        #[arg(long, value_enum, default_value_t = EpsMethodArg::Exact)]
        method: EpsMethodArg,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 200)]
        burn_in_sweeps: usize,
        #[arg(long, default_value_t = 2)]
        thin_sweeps: usize,
    },
    /// Heat-bath configuration after some sweeps, as a PGM-style text grid.
    Snapshot {
        #[arg(long, default_value_t = 200)]
        sweeps: usize,
    },
}

#[derive(Debug, Args)]
pub struct QuadraticArgs {
    /// Model JSON; otherwise nearest-neighbour couplings from --n and --gamma.
    #[arg(long, conflicts_with = "gamma")]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, required_unless_present = "model")]
    pub gamma: Option<f64>,
    /// Include the covariance kernel in the output.
    #[arg(long)]
    pub covariance: bool,
}

#[derive(Debug, Args)]
pub struct ConvInverseArgs {
    /// Kernel JSON (lattice-kernel shape, values may be signed).
    #[arg(long, group = "input", required_unless_present_any = ["banded", "constants"])]
    pub kernel: Option<PathBuf>,
    /// Symmetric matrix (JSON array of rows) to check against the banded inverse bound.
    #[arg(long, group = "input", requires = "gamma")]
    pub banded: Option<PathBuf>,
    /// Banded constants from r,R,A,gamma.
    #[arg(long, group = "input", value_delimiter = ',')]
    pub constants: Option<Vec<f64>>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CltModelArg {
    Independent,
    Ising,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Cube,
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObservableArg {
    Identity,
    Tanh,
}

#[derive(Debug, Args)]
pub struct CltArgs {
    #[arg(long, value_enum)]
    pub model: CltModelArg,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, short = 'T', default_value_t = 3.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_up: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32])]
    pub ell: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    #[arg(long, value_enum, default_value_t = ShapeArg::Cube)]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 200)]
    pub burn_in_sweeps: usize,
    #[arg(long, value_enum, default_value_t = ObservableArg::Identity)]
    pub observable: ObservableArg,
}

#[derive(Debug, Args)]
pub struct OuChainArgs {
    /// Parameter JSON {"m", "omega", "c", "T", "lambda", "t", "K"}; flags override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, short = 'T')]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, short = 'K')]
    pub k: Option<usize>,
    /// Small-time expansion from t0 halved `levels` times instead of the joint law.
    #[arg(long)]
    pub expansion: bool,
    #[arg(long, default_value_t = 0.05)]
    pub t0: f64,
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
}

#[derive(Debug, Args)]
pub struct ThreeLinesArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires_all = ["u2", "u3"])]
    pub u1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u3: Option<Vec<f64>>,
    /// Pairwise angles a23,a31,a12 in degrees.
    #[arg(long, value_delimiter = ',', conflicts_with = "u1", required_unless_present = "u1")]
    pub angles: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}
