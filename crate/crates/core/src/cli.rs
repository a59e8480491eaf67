//! Run configuration and the `cvue` command-line front end.
//!
//! A run is described by one TOML file plus flag overrides. Every table the
//! commands write starts with a `# config_hash=<sha256>` comment row computed
//! over the resolved configuration (output path excluded), followed by a
//! header row. Identical configuration and seed give byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::adversary::{check_against_bound, run_cloning_game, AttackStrategy};
use crate::bits::BitString;
use crate::bounds::{emit_figure_data, eps_df_from_ber, security_report, Axis, FigureId, GridSpec, Table};
use crate::channel::{noisy_ber, ChannelParams};
use crate::codec::CodecScheme;
use crate::eb::{game_equivalence_test, rejection_oracle_check, RestrictedEprSpec};
use crate::error::{invalid, Error, Result};
use crate::gaussian::Quadrature;
use crate::protocol::{key_gen, rank_balanced, run_round_trip_with, ProtocolParams, QecmKey};
use crate::rng::master_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Protocol section of the configuration file. `pad_len` defaults to
/// `message_len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub message_len: usize,
    pub codeword_len: usize,
    pub correctable: usize,
    pub alpha: f64,
    pub squeezing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pad_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub security_param: Option<u32>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            message_len: 800,
            codeword_len: 1000,
            correctable: 35,
            alpha: 0.4,
            squeezing: 3.4,
            pad_len: None,
            security_param: None,
        }
    }
}

impl ProtocolConfig {
    pub fn params(&self) -> Result<ProtocolParams> {
        let p = ProtocolParams {
            security_param: self.security_param.unwrap_or(1),
            message_len: self.message_len,
            codeword_len: self.codeword_len,
            correctable: self.correctable,
            pad_len: self.pad_len.unwrap_or(self.message_len),
            alpha: self.alpha,
            squeezing: self.squeezing,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodecConfig {
    #[serde(default)]
    pub scheme: CodecScheme,
}

/// Per-axis replacements for a figure's default grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezing: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmittance: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_noise: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message_len: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correctable_fraction: Option<f64>,
}

impl GridOverride {
    pub fn apply(&self, figure: FigureId) -> GridSpec {
        let mut g = GridSpec::default_for(figure);
        let pick = |slot: &mut Axis, v: &Option<Axis>| {
            if let Some(v) = v {
                *slot = v.clone();
            }
        };
        pick(&mut g.alpha, &self.alpha);
        pick(&mut g.squeezing, &self.squeezing);
        pick(&mut g.transmittance, &self.transmittance);
        pick(&mut g.excess_noise, &self.excess_noise);
        pick(&mut g.message_len, &self.message_len);
        if let Some(f) = self.correctable_fraction {
            g.correctable_fraction = f;
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Without a figure the command reports the security summary of the
    /// protocol parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<FigureId>,
    #[serde(default)]
    pub grid: GridOverride,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub strategy: AttackStrategy,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            strategy: AttackStrategy::HeterodyneSplit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EbCheckConfig {
    /// Accepted samples drawn from the rejection oracle.
    pub accepted: u64,
    pub direction: Quadrature,
    /// Codeword bit the oracle's displacement encodes.
    pub bit: bool,
}

impl Default for EbCheckConfig {
    fn default() -> Self {
        Self {
            accepted: 10_000,
            direction: Quadrature::Q,
            bit: false,
        }
    }
}

fn default_trials() -> u64 {
    1000
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelParams>,
    #[serde(default)]
    pub codec: CodecConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub ebcheck: EbCheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: default_trials(),
            format: OutputFormat::default(),
            out: None,
            protocol: ProtocolConfig::default(),
            channel: None,
            codec: CodecConfig::default(),
            bounds: BoundsConfig::default(),
            attack: AttackConfig::default(),
            ebcheck: EbCheckConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        RunConfig::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Re-checks every module invariant the configuration touches.
    pub fn validate(&self) -> Result<()> {
        let params = self.protocol.params()?;
        params.codec_spec(self.codec.scheme).validate()?;
        if self.codec.scheme == CodecScheme::Concrete {
            crate::codec::Codec::from_spec(params.codec_spec(CodecScheme::Concrete))?;
        }
        if let Some(ch) = &self.channel {
            ch.validate()?;
        }
        if let Some(fig) = self.bounds.figure {
            let grid = self.bounds.grid.apply(fig);
            for axis in [&grid.alpha, &grid.squeezing, &grid.transmittance, &grid.excess_noise, &grid.message_len] {
                axis.values()?;
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, ignoring the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let canonical = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Key file contents. `label` holds the rank of `phi` among balanced strings
/// as a decimal string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyFile {
    pub s: String,
    pub phi: String,
    pub k: Vec<f64>,
    pub label: String,
    pub params: ProtocolParams,
}

impl KeyFile {
    pub fn from_key(key: &QecmKey, params: &ProtocolParams) -> Self {
        Self {
            s: key.s.to_hex(),
            phi: key.phi.to_hex(),
            k: key.k.clone(),
            label: key.label().to_string(),
            params: *params,
        }
    }

    pub fn to_key(&self) -> Result<(QecmKey, ProtocolParams)> {
        self.params.validate()?;
        let key = QecmKey {
            s: BitString::from_hex(&self.s, self.params.pad_len)?,
            phi: BitString::from_hex(&self.phi, self.params.codeword_len)?,
            k: self.k.clone(),
        };
        key.validate(&self.params)?;
        if rank_balanced(&key.phi).to_string() != self.label {
            return Err(invalid(format!("label {} does not match phi", self.label)));
        }
        Ok((key, self.params))
    }
}

pub fn save_key(path: &Path, key: &QecmKey, params: &ProtocolParams) -> anyhow::Result<()> {
    let text = key_json(key, params);
    fs::write(path, text).with_context(|| format!("writing key {}", path.display()))
}

pub fn load_key(path: &Path) -> anyhow::Result<(QecmKey, ProtocolParams)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading key {}", path.display()))?;
    let file = parse_key_file(&text).with_context(|| format!("parsing key {}", path.display()))?;
    Ok(file.to_key()?)
}

pub fn parse_key_file(text: &str) -> Result<KeyFile> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub fn key_json(key: &QecmKey, params: &ProtocolParams) -> String {
    let mut text = serde_json::to_string_pretty(&KeyFile::from_key(key, params)).expect("key serializes");
    text.push('\n');
    text
}

/// Flattens nested objects into `a.b` keys; arrays are kept as JSON text.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, Value)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => u.to_string(),
            (None, Some(i), _) => i.to_string(),
            (_, _, Some(f)) => float_cell(f),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Array(_) => format!("\"{}\"", v.to_string().replace('"', "\"\"")),
        Value::Object(_) => unreachable!("objects are flattened"),
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn float_cell(f: f64) -> String {
    format!("{f:?}")
}

fn csv_header(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

/// Renders one record as a two-row CSV (header, values).
pub fn record_csv(hash: &str, record: &Value) -> String {
    let mut cells = Vec::new();
    flatten("", record, &mut cells);
    let mut text = csv_header(hash);
    let names: Vec<&str> = cells.iter().map(|(k, _)| k.as_str()).collect();
    text.push_str(&names.join(","));
    text.push('\n');
    let values: Vec<String> = cells.iter().map(|(_, v)| csv_cell(v)).collect();
    text.push_str(&values.join(","));
    text.push('\n');
    text
}

pub fn table_csv(hash: &str, table: &Table) -> String {
    let mut text = csv_header(hash);
    text.push_str(&table.columns.join(","));
    text.push('\n');
    for row in &table.rows {
        let mut first = true;
        for v in row {
            if !first {
                text.push(',');
            }
            first = false;
            let _ = write!(text, "{}", float_cell(*v));
        }
        text.push('\n');
    }
    text
}

fn json_doc(hash: &str, body: Value) -> String {
    let mut doc = Map::new();
    doc.insert("config_hash".into(), Value::String(hash.to_string()));
    match body {
        Value::Object(m) => doc.extend(m),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
    text.push('\n');
    text
}

fn render(cfg: &RunConfig, record: Value) -> String {
    let hash = cfg.hash();
    match cfg.format {
        OutputFormat::Csv => record_csv(&hash, &record),
        OutputFormat::Json => json_doc(&hash, record),
    }
}

/// Generates a key; the output is the key file regardless of `format`.
pub fn cmd_keygen(cfg: &RunConfig) -> Result<String> {
    let params = cfg.protocol.params()?;
    let key = key_gen(&params, &mut master_rng(cfg.seed))?;
    Ok(key_json(&key, &params))
}

pub fn cmd_roundtrip(cfg: &RunConfig) -> Result<String> {
    let params = cfg.protocol.params()?;
    let report = run_round_trip_with(&params, cfg.codec.scheme, cfg.trials, cfg.seed, cfg.channel.as_ref())?;
    let beta = crate::bounds::ber_analytic(params.alpha, params.squeezing);
    let mut record = json!({
        "trials": report.trials,
        "failures": report.failures,
        "failure_rate": report.failure_rate,
        "failure_ci_lower": report.interval.lower,
        "failure_ci_upper": report.interval.upper,
        "modes": report.modes,
        "flip_rate": report.flip_rate,
        "beta": beta,
        "eps_df": eps_df_from_ber(params.codeword_len, params.correctable, beta),
    });
    if let Some(ch) = &cfg.channel {
        let noisy = noisy_ber(params.alpha, params.squeezing, ch);
        record["beta_noisy"] = json!(noisy);
        record["eps_df_noisy"] = json!(eps_df_from_ber(params.codeword_len, params.correctable, noisy));
    }
    Ok(render(cfg, record))
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<String> {
    let hash = cfg.hash();
    match cfg.bounds.figure {
        Some(fig) => {
            let table = emit_figure_data(fig, &cfg.bounds.grid.apply(fig))?;
            Ok(match cfg.format {
                OutputFormat::Csv => table_csv(&hash, &table),
                OutputFormat::Json => json_doc(
                    &hash,
                    json!({ "figure": fig.name(), "columns": table.columns, "rows": table.rows }),
                ),
            })
        }
        None => {
            let params = cfg.protocol.params()?;
            let report = security_report(&params)?;
            Ok(render(cfg, serde_json::to_value(report).expect("report serializes")))
        }
    }
}

pub fn cmd_attack(cfg: &RunConfig) -> Result<String> {
    let params = cfg.protocol.params()?;
    let outcome = run_cloning_game(&params, cfg.attack.strategy, cfg.trials, cfg.seed)?;
    let check = check_against_bound(&outcome, &params)?;
    Ok(render(
        cfg,
        json!({
            "outcome": serde_json::to_value(&outcome).expect("outcome serializes"),
            "bound": serde_json::to_value(&check).expect("check serializes"),
        }),
    ))
}

pub fn cmd_ebcheck(cfg: &RunConfig) -> Result<String> {
    let params = cfg.protocol.params()?;
    let equivalence = game_equivalence_test(&params, cfg.trials, cfg.seed)?;
    let spec = RestrictedEprSpec::new(params.squeezing, params.alpha, cfg.ebcheck.bit)?;
    let rejection = rejection_oracle_check(&spec, cfg.ebcheck.direction, cfg.ebcheck.accepted, cfg.seed)?;
    Ok(render(
        cfg,
        json!({
            "equivalence": serde_json::to_value(&equivalence).expect("report serializes"),
            "rejection": serde_json::to_value(&rejection).expect("report serializes"),
        }),
    ))
}

#[derive(Debug, Parser)]
#[command(name = "cvue", version, about = "Squeezed-state unclonable encryption simulator")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a key and write it as JSON: s and phi as hex, k, label, params.
    Keygen,
    /// Encrypt and decrypt random messages; compare the failure rate with the
    /// analytic BER and decryption-failure bound.
    Roundtrip,
    /// Security summary, or figure data with --figure.
    ///
    /// Figure columns:
    ///   margin:        alpha, r, margin
    ///   ber_squeezing: r, transmittance, excess_noise, ber_noisy
    ///   ber_channel:   transmittance, excess_noise, ber_noisy
    ///   win_length:    n, codeword_len, ideal, conjugate_coding, cv_bound
    #[command(verbatim_doc_comment)]
    Bounds {
        #[arg(long, value_parser = parse_figure)]
        figure: Option<FigureId>,
    },
    /// Play the cloning game with a concrete splitting strategy.
    Attack {
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<AttackStrategy>,
    },
    /// Compare entanglement-based and prepare-and-send statistics.
    Ebcheck,
}

fn parse_figure(s: &str) -> std::result::Result<FigureId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_strategy(s: &str) -> std::result::Result<AttackStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Cli {
    /// Loads the configuration file (or defaults) and applies flag overrides.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        match &self.command {
            Command::Bounds { figure: Some(f) } => cfg.bounds.figure = Some(*f),
            Command::Attack { strategy: Some(s) } => cfg.attack.strategy = *s,
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the command and returns its output text.
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<String> {
    match command {
        Command::Keygen => cmd_keygen(cfg),
        Command::Roundtrip => cmd_roundtrip(cfg),
        Command::Bounds { .. } => cmd_bounds(cfg),
        Command::Attack { .. } => cmd_attack(cfg),
        Command::Ebcheck => cmd_ebcheck(cfg),
    }
}

/// Entry point of the binary.
pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = cli.resolve()?;
    if cfg.protocol.squeezing == 0.0 {
        eprintln!("warning: squeezing r = 0 gives all-zero thresholds and no hiding");
    }
    let text = execute(&cli.command, &cfg)?;
    match &cfg.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other.context("writing to stdout")?,
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs.
pub fn main_with_args<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    run(&cli)
}
