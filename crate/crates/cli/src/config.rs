//! Job configuration: a TOML file with one table per concern, overlaid by command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// toral automorphism [[2,1],[1,1]]
    Cat,
    /// toral automorphism [[1,1],[1,0]] (orientation-reversing)
    Fib,
    /// toral automorphism given by --matrix
    Toral,
    /// subshift of finite type
    Sft,
    /// once-punctured torus
    Ptorus,
    /// genus-2 Bolza surface
    Bolza,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    /// const:C | mixing | trig:C;k1,k2,a,b;... | symbols:r0,r1,... | table:r00,r01;r10,r11
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roof: Option<String>,
    /// toral matrix entries a,b,c,d (row major)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<i64>>,
    /// largest return-map period (toral, sft)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmax: Option<u32>,
    /// largest reduced word length (ptorus, bolza)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmax: Option<u32>,
    /// length bound for the length-complete punctured-torus enumeration
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,
    /// sft alphabet size
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<usize>,
    /// forbidden sft transitions, e.g. 11,20
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forbid: Option<Vec<String>>,
    /// sft expansion rate of the diagonal cocycle
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion: Option<f64>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    /// orbit length cutoff (default: the catalog's certified length)
    #[arg(long = "tmax")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// series depth of mock determinants
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_depth: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    /// allow a cutoff beyond the certified length
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub partial: bool,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re_steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im_steps: Option<usize>,
    /// ruelle_log, det_log_<l>, mock_log_<l>, flat_trace_<n>, selberg_log (comma separated)
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantities: Option<Vec<String>>,
    /// expansion point of mock determinants, re,im
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<f64>>,
    /// Selberg product depth
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonanceConfig {
    /// probe point re,im (default: entropy + 0.5)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<Vec<f64>>,
    /// largest ratio order (default: largest feasible)
    #[arg(long = "order")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// exterior degree
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    /// entropy (default: fitted from the catalog)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// rectangle re_min,re_max,im_min,im_max; repeatable
    #[arg(long = "rect", allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rects: Option<Vec<String>>,
    /// mock expansion point re,im (default: entropy + 1)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<f64>>,
    /// mock polynomial degree (default: largest feasible)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    /// contour samples per rectangle side
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountConfig {
    /// entropy used in li(e^{hT}) (default: fitted from the catalog)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_from: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_to: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_step: Option<f64>,
    /// tabulate lattice (non-mixing) catalogs anyway
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub allow_non_mixing: bool,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    /// catalog JSON (written by `orbits`, read by the other commands)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    /// CSV output (default: stdout)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// JSON report
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JobConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub policy: PolicyConfig,
    pub grid: GridConfig,
    pub resonances: ResonanceConfig,
    pub count: CountConfig,
    pub files: FileConfig,
}

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Fields set in `top` replace those of `base`.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, top: &T) -> T {
    let mut merged = serde_json::to_value(base).expect("config serializes");
    if let (Value::Object(m), Value::Object(t)) = (&mut merged, serde_json::to_value(top).expect("config serializes")) {
        for (k, v) in t {
            if !v.is_null() {
                m.insert(k, v);
            }
        }
    }
    serde_json::from_value(merged).expect("merged config deserializes")
}

pub const CONFIG_HELP: &str = "\
CONFIG FILE (--config PATH)
  TOML with optional top-level keys `threads` and `seed` and one table per concern.
  Keys match the long flags with '-' written as '_'; flags given on the command line win.
  Unknown keys are rejected. ZETAWB_THREADS overrides `threads`.

    threads = 4
    seed = 7

    [model]       # orbits
    model = \"cat\"
    roof = \"mixing\"
    nmax = 12

    [policy]      # zeta-grid, resonances, verify
    t_max = 12.0
    partial = false

    [grid]        # zeta-grid; rows run over re fastest, then im
    re_min = 1.2
    re_max = 2.0
    re_steps = 5
    im_min = 0.0
    im_max = 0.0
    im_steps = 1
    quantities = [\"ruelle_log\", \"det_log_1\", \"flat_trace_3\"]

    [resonances]
    probe = [1.46, 0.0]
    rects = [\"0.86,1.06,-0.1,0.1\"]

    [count]
    t_from = 4.0
    t_to = 12.0
    t_step = 0.25

    [files]
    catalog = \"cat.json\"
    csv = \"out.csv\"
    json = \"report.json\"

EXIT CODES
  0 success, 1 verification failure, 2 model or input error,
  3 partial evaluation failure, 4 non-convergence
";

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> JobConfig {
        let mut c = JobConfig { threads: Some(3), seed: Some(11), ..Default::default() };
        c.model.model = Some(ModelKind::Sft);
        c.model.forbid = Some(vec!["11".into()]);
        c.model.expansion = Some(2.5);
        c.policy.t_max = Some(0.1 + 0.2);
        c.policy.partial = true;
        c.grid.quantities = Some(vec!["ruelle_log".into(), "mock_log_1".into()]);
        c.grid.xi = Some(vec![1.9624237, -0.0]);
        c.resonances.rects = Some(vec!["0.8,1.1,-0.1,0.1".into()]);
        c.count.allow_non_mixing = true;
        c.files.catalog = Some("a/b.json".into());
        c
    }

    #[test]
    fn toml_round_trip() {
        let c = sample();
        let back = JobConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.policy.t_max.unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(JobConfig::from_toml("").unwrap(), JobConfig::default());
    }

    #[test]
    fn unknown_keys() {
        assert!(JobConfig::from_toml("thread = 2").is_err());
        assert!(JobConfig::from_toml("[model]\nnmx = 3").is_err());
        assert!(JobConfig::from_toml("[modle]\nnmax = 3").is_err());
    }

    #[test]
    fn flags_win() {
        let file = sample();
        let flags = PolicyConfig { t_max: Some(9.0), ..Default::default() };
        let merged = overlay(&file.policy, &flags);
        assert_eq!(merged.t_max, Some(9.0));
        assert!(merged.partial);
        assert_eq!(overlay(&file.model, &ModelConfig::default()), file.model);
    }
}
