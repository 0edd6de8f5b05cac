//! Network checkpoints as JSON text.
//!
//! Parameters are written with shortest round-trip formatting, so a reload
//! reproduces every bit.

use std::path::Path;

use anyhow::{bail, Context};
use fpinn_core::{Network, NetworkConfig, Problem, ProblemKind};
use serde::{Deserialize, Serialize};

const FORMAT: &str = "fpinn-network";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemMeta {
    pub kind: ProblemKind,
    pub alpha: f64,
    pub t_final: f64,
}

impl ProblemMeta {
    pub fn of(problem: &Problem) -> Self {
        ProblemMeta { kind: problem.kind(), alpha: problem.alpha(), t_final: problem.domain().t_final() }
    }

    pub fn build(&self) -> fpinn_core::Result<Problem> {
        Problem::with_time_window(self.kind, self.alpha, self.t_final)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub network: NetworkConfig,
    #[serde(default)]
    pub problem: Option<ProblemMeta>,
    /// Updates applied when written.
    #[serde(default)]
    pub iteration: Option<u64>,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(network: &Network, problem: Option<&Problem>, iteration: Option<u64>) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            network: *network.config(),
            problem: problem.map(ProblemMeta::of),
            iteration,
            params: network.params().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).context("malformed checkpoint")?;
        if ck.format != FORMAT {
            bail!("not a network checkpoint (format '{}')", ck.format);
        }
        if ck.version != VERSION {
            bail!("unsupported checkpoint version {}", ck.version);
        }
        if let Some(p) = &ck.problem {
            if p.kind.input_dim() != ck.network.input_dim {
                bail!("checkpoint network takes {} inputs but {} needs {}", ck.network.input_dim, p.kind.name(), p.kind.input_dim());
            }
        }
        Ok(ck)
    }

    pub fn network(&self) -> anyhow::Result<Network> {
        Network::from_params(self.network, self.params.clone()).context("checkpoint parameters do not match its network config")
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_json()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Checkpoint::from_json(&text).with_context(|| path.display().to_string())
    }
}
