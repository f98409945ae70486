//! Library half of the `opsplit` command: resolved run configurations,
//! class-spec parsing and the runners behind each subcommand.
//!
//! Every run is described by a [`RunConfig`] that is echoed into its output.
//! Feeding that echo back through [`run`] reproduces the output byte for byte.

use opsplit_core::{ClassLabel, Error as CoreError, InParams, ScaledConic};
use serde::{Deserialize, Serialize};

pub mod run;

pub use run::{run, Outcome, Outputs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_GUARD: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
/// A verification suite or figure check found a disagreement.
pub const EXIT_DISAGREE: i32 = 4;

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "OPSPLIT_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => EXIT_PARSE,
            CliError::Core(e) if e.is_guard_rejection() => EXIT_GUARD,
            CliError::Core(CoreError::Numeric(_)) => EXIT_NUMERIC,
            CliError::Core(_) => EXIT_PARSE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn number(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::Parse(format!("bad {what} `{s}`")))
}

/// A parsed class spec: its identity-nonexpansive parameters and, when the
/// class is a positively scaled conic one, that form too.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSpec {
    pub params: InParams,
    pub conic: Option<ScaledConic>,
}

/// Parses `averaged:0.5`, `conic:1.7`, `cocoercive:1.4`, `lipschitz:0.8`,
/// `nonexpansive`, `scaled-conic:2:0.75` and `in:alpha:beta`.
pub fn parse_class(spec: &str) -> CliResult<ClassSpec> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let arity = |n: usize| {
        if parts.len() == n + 1 {
            Ok(())
        } else {
            Err(CliError::Parse(format!("class `{spec}` takes {n} parameter(s)")))
        }
    };
    let label = match parts[0].to_ascii_lowercase().as_str() {
        "averaged" => {
            arity(1)?;
            ClassLabel::Averaged { alpha: number(parts[1], "alpha")? }
        }
        "conic" => {
            arity(1)?;
            ClassLabel::Conic { alpha: number(parts[1], "alpha")? }
        }
        "cocoercive" => {
            arity(1)?;
            ClassLabel::Cocoercive { constant: number(parts[1], "cocoercivity")? }
        }
        "lipschitz" => {
            arity(1)?;
            ClassLabel::Lipschitz { constant: number(parts[1], "Lipschitz constant")? }
        }
        "contraction" => {
            arity(1)?;
            ClassLabel::Contraction { constant: number(parts[1], "contraction factor")? }
        }
        "nonexpansive" => {
            arity(0)?;
            ClassLabel::Nonexpansive
        }
        "scaled-conic" => {
            arity(2)?;
            ClassLabel::ScaledConic { delta: number(parts[1], "delta")?, alpha: number(parts[2], "alpha")? }
        }
        "in" => {
            arity(2)?;
            let p = InParams::new(number(parts[1], "alpha")?, number(parts[2], "beta")?)?;
            return Ok(ClassSpec { params: p, conic: p.to_scaled_conic().filter(|c| c.delta > 0.0) });
        }
        other => return Err(CliError::Parse(format!("unknown class `{other}`"))),
    };
    let params = opsplit_core::from_label(label).map_err(|e| CliError::Parse(format!("class `{spec}`: {e}")))?;
    let conic = match label {
        ClassLabel::Averaged { alpha } | ClassLabel::Conic { alpha } => Some(ScaledConic::conic(alpha)?),
        ClassLabel::ScaledConic { delta, alpha } => Some(ScaledConic::new(delta, alpha)?),
        _ => params.to_scaled_conic().filter(|c| c.delta > 0.0),
    };
    Ok(ClassSpec { params, conic })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Named,
    Random,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "named" => Ok(Suite::Named),
            "random" => Ok(Suite::Random),
            _ => Err(format!("unknown suite `{s}` (named, random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposeConfig {
    pub class1: String,
    pub class2: String,
    /// Class specs of a longer chain, applied first to last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub class: String,
}

/// A splitting problem after merging the instance file with the flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub a: opsplit_core::operators::OperatorJson,
    pub b: opsplit_core::operators::OperatorJson,
    pub mu: f64,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_bar: Option<f64>,
    pub gamma: f64,
    /// DR relaxation; 0.5 is plain DR.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<opsplit_core::splitting::DrOrder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<opsplit_core::splitting::FbCase>,
    pub x0: Vec<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub suite: Suite,
    pub seed: u64,
    pub count: usize,
    pub pairs: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureConfig {
    pub preset: String,
    pub resolution: usize,
}

/// Fully resolved configuration of one run. Output paths are not part of
/// it: they do not change the content produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Compose(ComposeConfig),
    Classify(ClassifyConfig),
    SolveDr(SolveConfig),
    SolveFb(SolveConfig),
    Verify(VerifyConfig),
    Figure(FigureConfig),
}

/// Instance file for `solve-dr` / `solve-fb`. Every field except the two
/// operators may also come from the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub a: opsplit_core::operators::OperatorJson,
    pub b: opsplit_core::operators::OperatorJson,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub beta_bar: Option<f64>,
    #[serde(default)]
    pub case: Option<String>,
    #[serde(default)]
    pub order: Option<opsplit_core::splitting::DrOrder>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

const METADATA_OPEN: &str = "<metadata id=\"opsplit-config\">";
const METADATA_CLOSE: &str = "</metadata>";

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn xml_unescape(s: &str) -> String {
    s.replace("&lt;", "<").replace("&gt;", ">").replace("&amp;", "&")
}

/// Inserts the configuration as a metadata element right after the root tag.
pub fn embed_config_in_svg(svg: &str, config: &RunConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let Some(root) = svg.find("<svg") else { return svg.to_string() };
    let end = root + svg[root..].find('>').expect("closed root tag") + 1;
    format!("{}\n{}{}{}{}", &svg[..end], METADATA_OPEN, xml_escape(&json), METADATA_CLOSE, &svg[end..])
}

/// Extracts the echoed configuration from a JSON summary, a bare config or
/// an SVG produced by `figure`.
pub fn extract_config(text: &str) -> CliResult<RunConfig> {
    if let Some(start) = text.find(METADATA_OPEN) {
        let body = &text[start + METADATA_OPEN.len()..];
        let end = body.find(METADATA_CLOSE).ok_or_else(|| CliError::Parse("unterminated metadata".into()))?;
        return serde_json::from_str(&xml_unescape(&body[..end])).map_err(|e| CliError::Parse(format!("config: {e}")));
    }
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("config file is not JSON: {e}")))?;
    let inner = value.get("config").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| CliError::Parse(format!("config: {e}")))
}

/// `OPSPLIT_SEED` when set and valid, else `seed`.
pub fn resolve_seed(seed: u64) -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Parse(format!("{SEED_ENV}=`{v}` is not a u64"))),
        Err(_) => Ok(seed),
    }
}
