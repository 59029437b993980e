use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ctmc-envelope", version, about = "Price bounds for Markov chains with uncertain generators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the rate matrices and the maximum principle of the generator family.
    Validate(ExperimentArgs),
    /// Upper and lower price bounds as CSV.
    Price(ExperimentArgs),
    /// Run two methods on the same problem and compare their bounds.
    Compare(ExperimentArgs),
    /// Matrix exponential of a built-in or file matrix as CSV.
    Expm(ExpmArgs),
}

#[derive(Args, Debug, Default)]
pub struct ExperimentArgs {
    /// `key = value` experiment file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub t: Option<String>,
    /// laplacian[:d:delta], drift[:d:delta], zero or file:<path>
    #[arg(long)]
    pub q0: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_low: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_high: Option<String>,
    /// butterfly, bull or file:<path>
    #[arg(long)]
    pub payoff: Option<String>,
    #[arg(long = "K")]
    pub strike_k: Option<String>,
    #[arg(long = "L")]
    pub strike_l: Option<String>,
    /// ode-euler, ode-rk4 or nisio
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    /// Dyadic refinement level of the envelope.
    #[arg(long)]
    pub n: Option<String>,
    /// Euler-product factors per envelope step, 0 for exact exponentials.
    #[arg(long)]
    pub k: Option<String>,
    /// Comma-separated parameters of linear reference models.
    #[arg(long, allow_hyphen_values = true)]
    pub refs: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    /// Second method for `compare`, e.g. ode-rk4:5000 or nisio:12:0.
    #[arg(long)]
    pub against: Option<String>,
}

impl ExperimentArgs {
    /// Flags in config-key form, in a fixed order.
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        let fields: [(&'static str, &Option<String>); 20] = [
            ("d", &self.d),
            ("delta", &self.delta),
            ("t", &self.t),
            ("q0", &self.q0),
            ("q", &self.q),
            ("lambda-low", &self.lambda_low),
            ("lambda-high", &self.lambda_high),
            ("payoff", &self.payoff),
            ("K", &self.strike_k),
            ("L", &self.strike_l),
            ("method", &self.method),
            ("steps", &self.steps),
            ("n", &self.n),
            ("k", &self.k),
            ("refs", &self.refs),
            ("out", &self.out),
            ("seed", &self.seed),
            ("tol", &self.tol),
            ("trials", &self.trials),
            ("against", &self.against),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect()
    }
}

#[derive(Args, Debug)]
pub struct ExpmArgs {
    /// laplacian[:d:delta], drift[:d:delta], zero or file:<path>
    #[arg(long)]
    pub matrix: String,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Use the Euler product (I + t/k A)^k instead of the exact exponential.
    #[arg(long)]
    pub k: Option<u64>,
    /// Grid size for built-in matrices given without parameters.
    #[arg(long, default_value_t = 101)]
    pub d: usize,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
