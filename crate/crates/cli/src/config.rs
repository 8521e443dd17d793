//! Experiment configuration (TOML) and the code builder it drives.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use qldpc::complex::{Factor, FactorKind, ProductComplex};
use qldpc::expander::{gen_biregular, BipartiteGraph};
use qldpc::experiments::{array_graph, projective_plane, trial_rng};
use qldpc::gadgets::{star_product, DecoratedCode};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Seed streams split off the root seed, one per consumer.
pub mod stream {
    pub const GRAPH: u64 = 1;
    pub const EXPANDER: u64 = 2;
    pub const DECODE: u64 = 3;
    pub const MEMORY: u64 = 4;
    pub const GADGETS: u64 = 5;
    pub const PERCOLATION: u64 = 6;
}

/// Seed for consumer `stream`, index `i`, derived from the root seed.
pub fn derive(root: u64, stream: u64, i: u64) -> u64 {
    trial_rng(trial_rng(root, stream).gen(), i).gen()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root seed: every random choice is derived from it.
    #[serde(default)]
    pub seed: u64,
    /// Trials or shots per data point.
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeSpec>,
    #[serde(default)]
    pub expander: ExpanderSection,
    #[serde(default)]
    pub decode: DecodeSection,
    #[serde(default)]
    pub memory: MemorySection,
    #[serde(default)]
    pub threshold: ThresholdSection,
    #[serde(default)]
    pub gadgets: GadgetSection,
    #[serde(default)]
    pub percolation: PercolationSection,
}

fn default_shots() -> u64 {
    1000
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Product of `r` length-`m` cycles.
    Toric,
    /// Point-line incidence graph of PG(2, q).
    Projective,
    /// Array code graph with `rows` × `cols` blocks of size `l`.
    Array,
    /// Independent random biregular graphs per factor.
    Random,
    /// Star graphs with explicit message sizes.
    Stars,
    /// Graph read from a text file.
    File,
}

/// A product code: `r` factors at a given level. Fields beyond `family`,
/// `r` and `level` apply to the families named in their comments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub family: Family,
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default = "default_level")]
    pub level: usize,
    /// Message set `{0, …, message − 1}` on every factor (not stars).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<usize>,
    /// toric
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// projective
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// array
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// random
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deg_left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deg_right: Option<usize>,
    /// stars: star degree and message size per factor
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degrees: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<usize>,
    /// file
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Search budget for exact distances in code reports.
    #[serde(default = "default_budget")]
    pub distance_budget: u64,
}

fn default_r() -> usize {
    2
}

fn default_level() -> usize {
    1
}

fn default_budget() -> u64 {
    1_000_000
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpanderMode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpanderSection {
    pub mu: f64,
    pub eps: f64,
    pub mode: ExpanderMode,
    /// Exhaustive: set budget. Sampled: sets per side and size.
    pub budget: u64,
}

impl Default for ExpanderSection {
    fn default() -> Self {
        ExpanderSection { mu: 0.25, eps: 0.25, mode: ExpanderMode::Exhaustive, budget: 10_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSection {
    pub weights: Vec<usize>,
    /// Syndrome noise as a fraction of the syndrome weight.
    pub noise: f64,
    /// Largest weight swept exhaustively (0 to skip, at most 3).
    pub exhaustive: usize,
}

impl Default for DecodeSection {
    fn default() -> Self {
        DecodeSection { weights: vec![0, 1, 2, 3], noise: 0.0, exhaustive: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemorySection {
    pub p: Vec<f64>,
    pub rounds: usize,
}

impl Default for MemorySection {
    fn default() -> Self {
        MemorySection { p: vec![1e-3], rounds: 3 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    /// Codes compared; the top-level code when empty.
    pub codes: Vec<CodeSpec>,
    /// Noise grid; `memory.p` when empty.
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GadgetSection {
    /// Gadgets to verify; all when empty.
    pub names: Vec<String>,
    /// Gadget given a stray logical X (test fixture).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Cycle,
    Path,
    Grid,
    Petersen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PercolationSection {
    pub graph: GraphKind,
    /// Vertex count (cycle, path) or grid rows.
    pub n: usize,
    /// Grid columns.
    pub cols: usize,
    pub eta: f64,
    pub gamma: f64,
    /// Per-vertex rates; the largest admissible one when empty.
    pub eps: Vec<f64>,
}

impl Default for PercolationSection {
    fn default() -> Self {
        PercolationSection { graph: GraphKind::Cycle, n: 12, cols: 0, eta: 3.0, gamma: 1.0, eps: Vec::new() }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn code(&self) -> Result<&CodeSpec, CliError> {
        self.code.as_ref().ok_or_else(|| CliError::Config("missing [code] table".into()))
    }
}

fn need(v: Option<usize>, name: &str, family: Family) -> Result<usize, CliError> {
    v.ok_or_else(|| CliError::Config(format!("{family:?} code needs `{name}`")))
}

impl CodeSpec {
    /// Short identifier used in output rows.
    pub fn tag(&self) -> String {
        let o = |v: Option<usize>| v.map_or("?".to_string(), |x| x.to_string());
        let base = match self.family {
            Family::Toric => format!("toric-m{}", o(self.m)),
            Family::Projective => format!("pg2-q{}", o(self.q)),
            Family::Array => format!("array-{}x{}-l{}", o(self.rows), o(self.cols), o(self.l)),
            Family::Random => format!("random-{}-{}-{}", o(self.n_left), o(self.deg_left), o(self.deg_right)),
            Family::Stars => format!("stars-{:?}-{:?}", self.degrees, self.messages),
            Family::File => format!("file-{}", self.path.as_ref().map_or("?".into(), |p| p.display().to_string())),
        };
        format!("{base}-r{}-i{}", self.r, self.level)
    }

    /// Factor graphs, one per direction.
    pub fn graphs(&self, root: u64) -> Result<Vec<BipartiteGraph>, CliError> {
        let f = self.family;
        if self.r == 0 {
            return Err(CliError::Config("r must be at least 1".into()));
        }
        let same = |g: BipartiteGraph| vec![g; self.r];
        Ok(match f {
            Family::Toric => {
                let m = need(self.m, "m", f)?;
                if m < 2 {
                    return Err(CliError::Config(format!("toric m must be at least 2, got {m}")));
                }
                same(BipartiteGraph::cycle(m))
            }
            Family::Projective => {
                let q = need(self.q, "q", f)?;
                if q < 2 || (2..q).any(|d| q % d == 0) {
                    return Err(CliError::Config(format!("projective q must be prime, got {q}")));
                }
                same(projective_plane(q))
            }
            Family::Array => {
                let (rows, cols, l) = (need(self.rows, "rows", f)?, need(self.cols, "cols", f)?, need(self.l, "l", f)?);
                if rows == 0 || cols == 0 || l == 0 {
                    return Err(CliError::Config("array sizes must be positive".into()));
                }
                same(array_graph(rows, cols, l))
            }
            Family::Random => {
                let (n, dl, dr) = (need(self.n_left, "n_left", f)?, need(self.deg_left, "deg_left", f)?, need(self.deg_right, "deg_right", f)?);
                if dr == 0 || n * dl % dr != 0 {
                    return Err(CliError::Config(format!("n_left * deg_left = {} is not divisible by deg_right = {dr}", n * dl)));
                }
                (0..self.r)
                    .map(|h| gen_biregular(n, n * dl / dr, dl, dr, derive(root, stream::GRAPH, h as u64)))
                    .collect::<Result<_, _>>()?
            }
            Family::Stars => {
                if self.degrees.len() != self.messages.len() || self.degrees.is_empty() {
                    return Err(CliError::Config("stars needs equal-length nonempty `degrees` and `messages`".into()));
                }
                self.degrees.iter().map(|&d| BipartiteGraph::stars(1, d)).collect()
            }
            Family::File => {
                let path = self.path.as_ref().ok_or_else(|| CliError::Config("file code needs `path`".into()))?;
                let text =
                    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
                same(BipartiteGraph::from_text(&text)?)
            }
        })
    }

    /// Factors with kinds cochain, chain, chain, ...
    pub fn factors(&self, root: u64) -> Result<Vec<Factor>, CliError> {
        let kinds: Vec<FactorKind> =
            (0..self.r).map(|h| if h == 0 { FactorKind::Cochain } else { FactorKind::Chain }).collect();
        if self.family == Family::Stars {
            if self.degrees.len() != self.r {
                return Err(CliError::Config(format!("stars lists {} factors but r = {}", self.degrees.len(), self.r)));
            }
            return Ok(star_product(&self.degrees, &self.messages, &kinds)?);
        }
        self.graphs(root)?
            .into_iter()
            .zip(kinds)
            .map(|(g, k)| {
                let g = Arc::new(g);
                match self.message {
                    Some(m) => Factor::with_message(g, k, &(0..m).collect::<Vec<_>>()).map_err(CliError::from),
                    None => Ok(Factor::new(g, k)),
                }
            })
            .collect()
    }

    pub fn product(&self, root: u64) -> Result<ProductComplex, CliError> {
        Ok(ProductComplex::new(self.factors(root)?))
    }

    pub fn build(&self, root: u64) -> Result<Arc<DecoratedCode>, CliError> {
        if self.level > self.r {
            return Err(CliError::Config(format!("level {} above dimension {}", self.level, self.r)));
        }
        Ok(Arc::new(DecoratedCode::new(self.product(root)?, self.level)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 17
shots = 250

[code]
family = "array"
r = 2
level = 1
rows = 4
cols = 4
l = 5

[expander]
mu = 0.2
eps = 0.3
mode = "sampled"
budget = 500

[decode]
weights = [0, 1, 2]
noise = 0.1
exhaustive = 2

[memory]
p = [0.0002, 0.0004, 0.001]
rounds = 2

[threshold]
codes = [{ family = "toric", m = 3 }, { family = "projective", q = 2, message = 1 }]

[gadgets]
names = ["err_corr", "measure_logical"]
corrupt = "err_corr"

[percolation]
graph = "grid"
n = 3
cols = 4
eta = 4.0
gamma = 0.5
eps = [1e-5, 0.0003333333333333333]
"#;

    #[test]
    fn round_trips_exactly() {
        let c = ExperimentConfig::from_toml(FULL).unwrap();
        let text = c.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
        assert_eq!(back.percolation.eps[1].to_bits(), 0.0003333333333333333f64.to_bits());
    }

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml("[code]\nfamily = \"toric\"\nm = 4\n").unwrap();
        assert_eq!((c.seed, c.shots), (0, 1000));
        let code = c.code().unwrap();
        assert_eq!((code.r, code.level), (2, 1));
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_malformed() {
        assert!(ExperimentConfig::from_toml("seed = \"x\"").is_err());
        assert!(ExperimentConfig::from_toml("[code]\nfamily = \"toric\"\nmm = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("[code]\nfamily = \"moebius\"\n").is_err());
        let c = ExperimentConfig::from_toml("[code]\nfamily = \"toric\"\n").unwrap();
        assert!(matches!(c.code().unwrap().build(0), Err(CliError::Config(_))));
    }

    #[test]
    fn toric_code_parameters() {
        for m in 3..=5 {
            let c = ExperimentConfig::from_toml(&format!("[code]\nfamily = \"toric\"\nm = {m}\n")).unwrap();
            let code = c.code().unwrap().build(c.seed).unwrap();
            assert_eq!((code.n(), code.k()), (2 * m * m, 2));
        }
    }

    #[test]
    fn random_graphs_follow_the_root_seed() {
        let spec = CodeSpec {
            family: Family::Random,
            n_left: Some(12),
            deg_left: Some(3),
            deg_right: Some(4),
            ..ExperimentConfig::from_toml("[code]\nfamily = \"toric\"\n").unwrap().code.unwrap()
        };
        let a = spec.graphs(5).unwrap();
        assert_eq!(a, spec.graphs(5).unwrap());
        assert_ne!(a, spec.graphs(6).unwrap());
        assert_ne!(a[0], a[1]);
    }
}
