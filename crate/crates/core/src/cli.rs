//! Command-line front end: flag and config-file handling, the seven
//! experiment commands, and their CSV/text/SVG artifacts.
//!
//! Every flag `--name` can also be given as `name = value` in a file passed
//! with `--config`; flags win. Each run writes `<command>-<stamp>.manifest`
//! holding the effective configuration in the same format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::crypto::{
    self, attacker_by_name, cca_experiment, CcaOptions, EncryptOptions, GermCatalog, KeyRange,
    Scheme,
};
use crate::error::{Error, Result};
use crate::fiber::{self, FiberSign, MilnorData, MilnorSearch, DEFAULT_SEED};
use crate::gaussmanin::{self, CheckOptions};
use crate::germ::{parse_germ_text, PolynomialGerm, WeightVector};
use crate::morse::{self, fmt_num, CriticalPoint, MorseOptions, Morsification, SearchBox};

#[derive(Debug, Parser)]
#[command(
    name = "milnor",
    version,
    about = "Morse data, Milnor fibers, Gauss-Manin periods and a toy cipher"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Germ summary: weights, Milnor data and Morse data of a morsification
    Analyze,
    /// Critical points of f_s in a box, with Morse indices
    Morsify,
    /// Sample a Milnor fiber and optionally count its components
    Fiber,
    /// Run every Gauss-Manin engine check and write the comparison table
    GmCheck,
    /// Fit the eta-exponent of the quadratic period
    EtaScaling,
    /// Key generation, encryption and decryption over a catalog
    CryptoDemo,
    /// Chosen-ciphertext game against a built-in attacker
    CcaRun,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Morsify => "morsify",
            Command::Fiber => "fiber",
            Command::GmCheck => "gm-check",
            Command::EtaScaling => "eta-scaling",
            Command::CryptoDemo => "crypto-demo",
            Command::CcaRun => "cca-run",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// `key = value` file supplying defaults for any flag
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Germ file (`vars m`, then `coeff e1 .. em` lines)
    #[arg(long, global = true)]
    pub germ: Option<String>,
    /// Morsification parameter
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Search box, `lo:hi` or `lo:hi,lo:hi,..`
    #[arg(long = "box", global = true, allow_hyphen_values = true)]
    pub region: Option<String>,
    /// Newton seeds per axis
    #[arg(long, global = true)]
    pub grid: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Fiber points or Monte Carlo samples
    #[arg(long, global = true)]
    pub samples: Option<String>,
    /// Regular value (fiber) or level of the vanishing cycle (gm-check)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta: Option<String>,
    /// Fixed gap t - eta for eta-scaling
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t: Option<String>,
    #[arg(long, global = true)]
    pub catalog: Option<String>,
    /// 1 or 2
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// guess, reencrypt or oracle
    #[arg(long, global = true)]
    pub attacker: Option<String>,
    #[arg(long, global = true)]
    pub trials: Option<String>,
    /// Keep only index-zero critical points with positive critical value
    #[arg(long, global = true)]
    pub filter_positive_critical_value: bool,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Quadratic morsification coefficients, comma separated
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub quad: Option<String>,
    /// Linear morsification coefficients, comma separated
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub linear: Option<String>,
    /// Count fiber components
    #[arg(long, global = true)]
    pub components: bool,
    /// Use the negative Milnor fibration
    #[arg(long, global = true)]
    pub negative: bool,
    /// Plaintext weights, e.g. 1/4,1/2
    #[arg(long, global = true)]
    pub message: Option<String>,
    /// Number of variables of the quadratic form (eta-scaling)
    #[arg(long, global = true)]
    pub m: Option<String>,
    /// Number of negative squares (eta-scaling)
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    /// Monte Carlo samples per t-grid point (gm-check)
    #[arg(long, global = true)]
    pub grid_samples: Option<String>,
    #[arg(long, global = true)]
    pub grad_tol: Option<String>,
    #[arg(long, global = true)]
    pub degeneracy_tol: Option<String>,
}

/// Configuration keys in manifest order; each is also a `--flag`.
pub const KEYS: [&str; 24] = [
    "germ",
    "s",
    "box",
    "grid",
    "seed",
    "samples",
    "eta",
    "t",
    "catalog",
    "scheme",
    "attacker",
    "trials",
    "filter-positive-critical-value",
    "out",
    "quad",
    "linear",
    "components",
    "negative",
    "message",
    "m",
    "lambda",
    "grid-samples",
    "grad-tol",
    "degeneracy-tol",
];

impl Flags {
    /// The flags that were given, keyed like the config file.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        };
        put("germ", &self.germ);
        put("s", &self.s);
        put("box", &self.region);
        put("grid", &self.grid);
        put("seed", &self.seed);
        put("samples", &self.samples);
        put("eta", &self.eta);
        put("t", &self.t);
        put("catalog", &self.catalog);
        put("scheme", &self.scheme);
        put("attacker", &self.attacker);
        put("trials", &self.trials);
        put("out", &self.out);
        put("quad", &self.quad);
        put("linear", &self.linear);
        put("message", &self.message);
        put("m", &self.m);
        put("lambda", &self.lambda);
        put("grid-samples", &self.grid_samples);
        put("grad-tol", &self.grad_tol);
        put("degeneracy-tol", &self.degeneracy_tol);
        for (k, on) in [
            (
                "filter-positive-critical-value",
                self.filter_positive_critical_value,
            ),
            ("components", self.components),
            ("negative", self.negative),
        ] {
            if on {
                map.insert(k.to_string(), "true".to_string());
            }
        }
        map
    }
}

/// Parses `key = value` lines; `#` starts a comment. A `command` key is
/// accepted and ignored so manifests can be fed back in.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {:?}", line)))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "command" {
            continue;
        }
        if !KEYS.contains(&k) {
            return Err(err(format!("unknown key {:?}", k)));
        }
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub germ_path: Option<PathBuf>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub s: f64,
    pub region: Option<String>,
    pub grid: usize,
    pub samples: Option<usize>,
    pub eta: Option<f64>,
    pub t: Option<f64>,
    pub catalog: Option<PathBuf>,
    pub scheme: Scheme,
    pub attacker: String,
    pub trials: usize,
    pub filter_positive_critical_value: bool,
    pub quad: Option<Vec<f64>>,
    pub linear: Option<Vec<f64>>,
    pub components: bool,
    pub negative: bool,
    pub message: Option<String>,
    pub m: usize,
    pub lambda: usize,
    pub grid_samples: usize,
    pub morse: MorseOptions,
}

fn parse_err(key: &str, value: &str, what: &str) -> Error {
    Error::Parse {
        line: 0,
        message: format!("--{}: {:?} is not {}", key, value, what),
    }
}

fn get<'a>(map: &'a BTreeMap<String, String>, key: &str) -> Option<&'a str> {
    map.get(key).map(String::as_str).filter(|v| !v.is_empty())
}

fn num<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
    what: &str,
) -> Result<Option<T>> {
    get(map, key)
        .map(|v| v.parse::<T>().map_err(|_| parse_err(key, v, what)))
        .transpose()
}

fn list(map: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<f64>>> {
    get(map, key)
        .map(|v| {
            v.split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| parse_err(key, v, "a list of numbers"))
                })
                .collect()
        })
        .transpose()
}

fn flag(map: &BTreeMap<String, String>, key: &str) -> Result<bool> {
    match get(map, key) {
        None | Some("false") => Ok(false),
        Some("true") => Ok(true),
        Some(v) => Err(parse_err(key, v, "true or false")),
    }
}

fn parse_seed(v: &str) -> Option<u64> {
    match v.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16).ok(),
        None => v.replace('_', "").parse().ok(),
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    pub fn from_map(command: Command, map: &BTreeMap<String, String>) -> Result<Self> {
        let defaults = MorseOptions::default();
        let seed = match get(map, "seed") {
            Some(v) => parse_seed(v).ok_or_else(|| parse_err("seed", v, "a 64-bit integer"))?,
            None => DEFAULT_SEED,
        };
        let scheme = Scheme::from_number(num(map, "scheme", "1 or 2")?.unwrap_or(1))
            .map_err(|_| parse_err("scheme", get(map, "scheme").unwrap_or(""), "1 or 2"))?;
        Ok(RunConfig {
            command,
            germ_path: get(map, "germ").map(PathBuf::from),
            seed,
            output_dir: PathBuf::from(get(map, "out").unwrap_or(".")),
            s: num(map, "s", "a number")?.unwrap_or(1.0),
            region: get(map, "box").map(str::to_string),
            grid: num(map, "grid", "a count")?.unwrap_or(16),
            samples: num(map, "samples", "a count")?,
            eta: num(map, "eta", "a number")?,
            t: num(map, "t", "a number")?,
            catalog: get(map, "catalog").map(PathBuf::from),
            scheme,
            attacker: get(map, "attacker").unwrap_or("guess").to_string(),
            trials: num(map, "trials", "a count")?.unwrap_or(1000),
            filter_positive_critical_value: flag(map, "filter-positive-critical-value")?,
            quad: list(map, "quad")?,
            linear: list(map, "linear")?,
            components: flag(map, "components")?,
            negative: flag(map, "negative")?,
            message: get(map, "message").map(str::to_string),
            m: num(map, "m", "a count")?.unwrap_or(3),
            lambda: num(map, "lambda", "a count")?.unwrap_or(0),
            grid_samples: num(map, "grid-samples", "a count")?.unwrap_or(2000),
            morse: MorseOptions {
                grad_tol: num(map, "grad-tol", "a number")?.unwrap_or(defaults.grad_tol),
                degeneracy_tol: num(map, "degeneracy-tol", "a number")?
                    .unwrap_or(defaults.degeneracy_tol),
                ..defaults
            },
        })
    }

    /// Flags over config file over defaults.
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let mut map = match &cli.flags.config {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        map.extend(cli.flags.to_map());
        Self::from_map(cli.command, &map)
    }

    fn default_samples(&self) -> usize {
        match self.command {
            Command::Fiber => 10_000,
            _ => 1_000_000,
        }
    }

    /// The effective configuration as `key = value` lines.
    pub fn to_config_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let path = |p: &Option<PathBuf>| opt(p.as_ref().map(|p| p.display().to_string()));
        let mut out = format!("command = {}\n", self.command.name());
        for key in KEYS {
            let value = match key {
                "germ" => path(&self.germ_path),
                "s" => self.s.to_string(),
                "box" => opt(self.region.clone()),
                "grid" => self.grid.to_string(),
                "seed" => self.seed.to_string(),
                "samples" => self
                    .samples
                    .unwrap_or_else(|| self.default_samples())
                    .to_string(),
                "eta" => opt(self.eta.map(|v| v.to_string())),
                "t" => opt(self.t.map(|v| v.to_string())),
                "catalog" => path(&self.catalog),
                "scheme" => self.scheme.number().to_string(),
                "attacker" => self.attacker.clone(),
                "trials" => self.trials.to_string(),
                "filter-positive-critical-value" => self.filter_positive_critical_value.to_string(),
                "out" => self.output_dir.display().to_string(),
                "quad" => opt(self.quad.as_deref().map(join)),
                "linear" => opt(self.linear.as_deref().map(join)),
                "components" => self.components.to_string(),
                "negative" => self.negative.to_string(),
                "message" => opt(self.message.clone()),
                "m" => self.m.to_string(),
                "lambda" => self.lambda.to_string(),
                "grid-samples" => self.grid_samples.to_string(),
                "grad-tol" => self.morse.grad_tol.to_string(),
                "degeneracy-tol" => self.morse.degeneracy_tol.to_string(),
                _ => unreachable!("every key is listed"),
            };
            let _ = writeln!(out, "{} = {}", key, value);
        }
        out
    }
}

/// Files written by a run and the text meant for stdout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub stdout: String,
    pub stderr: String,
}

impl RunOutcome {
    /// The first written file with the given extension.
    pub fn file(&self, ext: &str) -> Option<&PathBuf> {
        self.files
            .iter()
            .find(|p| p.extension().is_some_and(|e| e == ext))
    }
}

struct Artifacts {
    dir: PathBuf,
    stem: String,
    files: Vec<PathBuf>,
}

impl Artifacts {
    /// Claims `<command>-<millis>` by creating its manifest.
    fn claim(dir: &Path, command: Command, manifest_body: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        loop {
            let stem = format!("{}-{}", command.name(), stamp);
            let path = dir.join(format!("{}.manifest", stem));
            match fs::OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
            {
                Ok(mut f) => {
                    use std::io::Write;
                    write!(f, "# written at unix time {} ms\n{}", stamp, manifest_body)?;
                    return Ok(Artifacts {
                        dir: dir.to_path_buf(),
                        stem,
                        files: vec![path],
                    });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => stamp += 1,
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn write(&mut self, ext: &str, body: &str) -> Result<()> {
        let path = self.dir.join(format!("{}.{}", self.stem, ext));
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }
}

fn load_germ(cfg: &RunConfig) -> Result<(PolynomialGerm, Option<WeightVector>)> {
    let path = cfg
        .germ_path
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("{} needs --germ", cfg.command.name())))?;
    parse_germ_text(&fs::read_to_string(path)?)
}

fn morsification(cfg: &RunConfig, f: &PolynomialGerm) -> Result<Morsification> {
    let m = f.n_vars();
    Morsification::with_linear(
        f.clone(),
        cfg.quad.clone().unwrap_or_else(|| vec![1.0; m]),
        cfg.linear.clone().unwrap_or_else(|| vec![0.0; m]),
    )
}

fn region(cfg: &RunConfig, m: usize) -> Result<SearchBox> {
    SearchBox::parse(cfg.region.as_deref().unwrap_or("-2:2"), m)
}

fn load_catalog(cfg: &RunConfig) -> Result<GermCatalog> {
    match &cfg.catalog {
        Some(p) => GermCatalog::load(p),
        None => Ok(GermCatalog::shipped()),
    }
}

fn critical_table(points: &[CriticalPoint]) -> String {
    let mut s = String::new();
    if points.is_empty() {
        s.push_str("no critical points\n");
    }
    for p in points {
        let loc: Vec<String> = p
            .location
            .iter()
            .map(|v| format!("{:.6}", v + 0.0))
            .collect();
        let _ = writeln!(
            s,
            "({})  value {:.6e}  index {}",
            loc.join(", "),
            p.value,
            p.morse_index
        );
    }
    s
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// SVG of the critical points in the first two coordinates of `region`,
/// colored by Morse index.
pub fn plot_critical_points(points: &[CriticalPoint], region: &SearchBox) -> String {
    const SIZE: f64 = 400.0;
    const MARGIN: f64 = 40.0;
    let (lo, hi) = (region.lower(), region.upper());
    let span = SIZE - 2.0 * MARGIN;
    let px = |v: f64| MARGIN + (v - lo[0]) / (hi[0] - lo[0]) * span;
    let py = |v: Option<f64>| match v {
        Some(v) if lo.len() > 1 => SIZE - MARGIN - (v - lo[1]) / (hi[1] - lo[1]) * span,
        _ => SIZE / 2.0,
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        SIZE
    );
    let _ = writeln!(
        s,
        r#"<rect x="{0}" y="{0}" width="{1}" height="{1}" fill="none" stroke="black"/>"#,
        MARGIN, span
    );
    if points.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">no critical points</text>"#,
            SIZE / 2.0,
            SIZE / 2.0
        );
    }
    for p in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{}"/>"#,
            px(p.location[0]),
            py(p.location.get(1).copied()),
            PALETTE[p.morse_index % PALETTE.len()]
        );
    }
    let mut indices: Vec<usize> = points.iter().map(|p| p.morse_index).collect();
    indices.sort_unstable();
    indices.dedup();
    for (row, idx) in indices.iter().enumerate() {
        let y = 16.0 + 14.0 * row as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="4" fill="{}"/><text x="{}" y="{}" font-size="11">index {}</text>"#,
            SIZE - 90.0,
            y - 4.0,
            PALETTE[idx % PALETTE.len()],
            SIZE - 80.0,
            y,
            idx
        );
    }
    s.push_str("</svg>\n");
    s
}

fn run_morsify(cfg: &RunConfig, out: &mut Artifacts, res: &mut RunOutcome) -> Result<()> {
    let (f, _) = load_germ(cfg)?;
    let fs_ = morsification(cfg, &f)?.realize(cfg.s)?;
    let region = region(cfg, f.n_vars())?;
    let points = morse::find_critical_points(&fs_, &region, cfg.grid, &cfg.morse)?;
    out.write("csv", &morse::critical_points_csv(&points, f.n_vars()))?;
    out.write("svg", &plot_critical_points(&points, &region))?;
    let (all, zeros) = morse::morse_vectors(&points);
    res.stdout = format!(
        "f_s = {} (s = {})\n{}lambda_s = {}  lambda_0,s = {}\n",
        fs_,
        cfg.s,
        critical_table(&points),
        all,
        zeros
    );
    Ok(())
}

fn run_analyze(cfg: &RunConfig, out: &mut Artifacts, res: &mut RunOutcome) -> Result<()> {
    let (f, weights) = load_germ(cfg)?;
    let m = f.n_vars();
    let mut r = format!("germ: {}\nvariables: {}\ndegree: {}\n", f, m, f.degree());
    match &weights {
        Some(w) => {
            let q = f.is_quasi_homogeneous(w)?;
            let _ = writeln!(
                r,
                "weights: {} quasi-homogeneous: {}",
                w,
                if q { "yes" } else { "no" }
            );
        }
        None => r.push_str("weights: none given\n"),
    }
    let search = MilnorSearch {
        seed: cfg.seed,
        ..MilnorSearch::default()
    };
    for sign in [FiberSign::Positive, FiberSign::Negative] {
        let md = fiber::choose_milnor_data(&f, sign, &search)?;
        let _ = writeln!(
            r,
            "milnor data ({}): delta {} epsilon {} eta {}",
            if sign == FiberSign::Positive {
                "+"
            } else {
                "-"
            },
            fmt_num(md.delta),
            fmt_num(md.epsilon),
            fmt_num(md.eta)
        );
    }
    let family = morsification(cfg, &f)?;
    let region = region(cfg, m)?;
    let points =
        morse::find_critical_points(&family.realize(cfg.s)?, &region, cfg.grid, &cfg.morse)?;
    let (all, zeros) = morse::morse_vectors(&points);
    let _ = writeln!(
        r,
        "morsification s = {}: lambda_s = {} lambda_0,s = {} top homology rank {}",
        cfg.s,
        all,
        zeros,
        zeros.len()
    );
    out.write("txt", &r)?;
    out.write("csv", &morse::critical_points_csv(&points, m))?;
    out.write("svg", &plot_critical_points(&points, &region))?;
    res.stdout = r;
    Ok(())
}

fn run_fiber(cfg: &RunConfig, out: &mut Artifacts, res: &mut RunOutcome) -> Result<()> {
    let (f, _) = load_germ(cfg)?;
    let sign = if cfg.negative {
        FiberSign::Negative
    } else {
        FiberSign::Positive
    };
    let search = MilnorSearch {
        seed: cfg.seed,
        ..MilnorSearch::default()
    };
    let mut md = fiber::choose_milnor_data(&f, sign, &search)?;
    if let Some(eta) = cfg.eta {
        md = MilnorData::new(md.delta, md.epsilon, eta, sign)?;
    }
    let n = cfg.samples.unwrap_or_else(|| cfg.default_samples());
    let sample = fiber::sample_fiber(&f, &md, n, cfg.seed);
    out.write("csv", &sample.to_csv(f.n_vars()))?;
    let mut r = format!(
        "germ: {}\nlevel: {}\ndelta: {}\nepsilon: {}\npoints: {}\n",
        f,
        fmt_num(md.level()),
        fmt_num(md.delta),
        fmt_num(md.epsilon),
        sample.len()
    );
    if cfg.components {
        let rep = fiber::components_with_plateau(&sample);
        let _ = writeln!(r, "components: {}", rep.components);
        let _ = writeln!(r, "link radius: {}", fmt_num(rep.link_radius));
        for (radius, count) in &rep.plateau {
            let _ = writeln!(r, "plateau: radius {} count {}", fmt_num(*radius), count);
        }
        let _ = writeln!(r, "stable: {}", rep.stable);
    }
    out.write("txt", &r)?;
    res.stdout = r;
    Ok(())
}

fn run_gm_check(cfg: &RunConfig, out: &mut Artifacts, res: &mut RunOutcome) -> Result<()> {
    let opts = CheckOptions {
        samples: cfg.samples.unwrap_or_else(|| cfg.default_samples()),
        grid_samples: cfg.grid_samples,
        eta: cfg.eta.unwrap_or(1.0),
        seed: cfg.seed,
    };
    let rows = gaussmanin::run_checks(&opts)?;
    out.write("csv", &gaussmanin::checks_to_csv(&rows))?;
    let asserted = rows.iter().filter(|r| r.passed().is_some()).count();
    let failed: Vec<_> = rows.iter().filter(|r| r.passed() == Some(false)).collect();
    for r in &failed {
        let _ = writeln!(res.stderr, "failed: {}", r.csv_line());
    }
    res.stdout = format!(
        "rows: {} asserted: {} failed: {}\n",
        rows.len(),
        asserted,
        failed.len()
    );
    Ok(())
}

fn run_eta_scaling(cfg: &RunConfig, out: &mut Artifacts, res: &mut RunOutcome) -> Result<()> {
    let n = cfg.samples.unwrap_or_else(|| cfg.default_samples());
    let report = gaussmanin::eta_scaling(
        cfg.m,
        cfg.lambda,
        &[0.25, 0.5, 1.0, 2.0],
        cfg.t.unwrap_or(1.0),
        n,
        cfg.seed,
    )?;
    out.write("csv", &report.to_csv())?;
    res.stdout = format!(
        "alpha = {:.6} (95% CI width {:.2e}); |alpha - {}| = {:.6}, |alpha - {}| = {:.6}\n",
        report.alpha,
        report.ci_width(),
        report.printed_exponent,
        report.distance_to_printed(),
        report.geometric_exponent,
        report.distance_to_geometric()
    );
    Ok(())
}

fn run_crypto_demo(cfg: &RunConfig, out: &mut Artifacts, res: &mut RunOutcome) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let opts = EncryptOptions {
        filter_positive_critical_value: cfg.filter_positive_critical_value,
    };
    let messages: Vec<WeightVector> = match &cfg.message {
        Some(m) => vec![m.parse()?],
        None => catalog
            .entries()
            .iter()
            .map(|e| e.message.clone())
            .collect(),
    };
    let mut csv = String::from("message,pk,sk,ciphertext,decrypted\n");
    for m in &messages {
        let entry = catalog.entry_for(m)?;
        let kp = crypto::keygen(&catalog, entry, KeyRange::Positive, cfg.seed)?;
        let c = crypto::encrypt(cfg.scheme, &catalog, kp.pk, m, &opts)?;
        let d = crypto::decrypt(&catalog, &kp.sk, &c)?;
        let _ = writeln!(
            csv,
            "\"{}\",{},\"{}\",\"{}\",\"{}\"",
            m,
            fmt_num(kp.pk),
            kp.sk,
            c,
            d
        );
        let _ = writeln!(
            res.stdout,
            "message {} pk {:.6} sk {} ciphertext {} -> {}",
            m, kp.pk, kp.sk, c, d
        );
    }
    out.write("csv", &csv)?;
    Ok(())
}

fn run_cca(cfg: &RunConfig, out: &mut Artifacts, res: &mut RunOutcome) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let attacker = attacker_by_name(&cfg.attacker)?;
    let opts = CcaOptions {
        scheme: cfg.scheme,
        trials: cfg.trials,
        seed: cfg.seed,
        key_range: KeyRange::Positive,
        encrypt_options: EncryptOptions {
            filter_positive_critical_value: cfg.filter_positive_critical_value,
        },
    };
    let report = cca_experiment(attacker.as_ref(), &catalog, &opts)?;
    out.write("csv", &report.to_csv())?;
    out.write("log", &report.transcript())?;
    let summary = report.summary() + "\n";
    out.write("txt", &summary)?;
    res.stdout = summary;
    Ok(())
}

/// Runs one command, writing its artifacts into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let mut out = Artifacts::claim(&cfg.output_dir, cfg.command, &cfg.to_config_text())?;
    let mut res = RunOutcome::default();
    match cfg.command {
        Command::Analyze => run_analyze(cfg, &mut out, &mut res)?,
        Command::Morsify => run_morsify(cfg, &mut out, &mut res)?,
        Command::Fiber => run_fiber(cfg, &mut out, &mut res)?,
        Command::GmCheck => run_gm_check(cfg, &mut out, &mut res)?,
        Command::EtaScaling => run_eta_scaling(cfg, &mut out, &mut res)?,
        Command::CryptoDemo => run_crypto_demo(cfg, &mut out, &mut res)?,
        Command::CcaRun => run_cca(cfg, &mut out, &mut res)?,
    }
    res.files = out.files;
    Ok(res)
}

/// Parses `args`, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match RunConfig::from_cli(&cli).and_then(|cfg| run(&cfg)) {
        Ok(res) => {
            print!("{}", res.stdout);
            eprint!("{}", res.stderr);
            0
        }
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(loc: &[f64], index: usize) -> CriticalPoint {
        CriticalPoint {
            location: loc.to_vec(),
            value: 0.0,
            hessian_eigenvalues: vec![1.0; loc.len()],
            morse_index: index,
        }
    }

    #[test]
    fn config_file_and_flags_merge() {
        let file = parse_config("# comment\nseed = 7\ngrid = 10\ns = -1 # trailing\n").unwrap();
        let cli = Cli::try_parse_from(["milnor", "morsify", "--grid", "12"]).unwrap();
        let mut map = file;
        map.extend(cli.flags.to_map());
        let cfg = RunConfig::from_map(Command::Morsify, &map).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.grid, 12);
        assert_eq!(cfg.s, -1.0);
    }

    #[test]
    fn every_key_is_a_flag() {
        for key in KEYS {
            let args: Vec<String> = match key {
                "filter-positive-critical-value" | "components" | "negative" => {
                    vec!["milnor".into(), "fiber".into(), format!("--{}", key)]
                }
                _ => vec![
                    "milnor".into(),
                    "fiber".into(),
                    format!("--{}", key),
                    "1".into(),
                ],
            };
            let cli = Cli::try_parse_from(&args).unwrap_or_else(|e| panic!("{}: {}", key, e));
            assert!(cli.flags.to_map().contains_key(key), "{}", key);
        }
    }

    #[test]
    fn manifest_round_trips() {
        let cfg = RunConfig::from_map(
            Command::CcaRun,
            &parse_config("seed = 0x10\ntrials = 5").unwrap(),
        )
        .unwrap();
        assert_eq!(cfg.seed, 16);
        let again = RunConfig::from_map(
            Command::CcaRun,
            &parse_config(&cfg.to_config_text()).unwrap(),
        )
        .unwrap();
        assert_eq!(again.trials, 5);
        assert_eq!(again.seed, 16);
        assert_eq!(again.to_config_text(), cfg.to_config_text());
    }

    #[test]
    fn bad_config_lines() {
        assert!(matches!(
            parse_config("colour = red"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("\nseed"),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad = parse_config("grid = many").unwrap();
        assert!(RunConfig::from_map(Command::Morsify, &bad).is_err());
        let bad = parse_config("scheme = 3").unwrap();
        assert!(RunConfig::from_map(Command::CryptoDemo, &bad).is_err());
    }

    #[test]
    fn svg_single_point_is_centered() {
        let region = SearchBox::cube(2, -2.0, 2.0).unwrap();
        let svg = plot_critical_points(&[point(&[0.0, 0.0], 1)], &region);
        assert!(
            svg.contains(r#"<circle cx="200.00" cy="200.00" r="5""#),
            "{}",
            svg
        );
        assert_eq!(svg.matches("r=\"5\"").count(), 1);
        assert!(svg.contains("index 1"));
    }

    #[test]
    fn svg_empty_has_caption() {
        let region = SearchBox::cube(2, -2.0, 2.0).unwrap();
        let svg = plot_critical_points(&[], &region);
        assert!(svg.contains("<rect"));
        assert!(svg.contains("no critical points"));
        assert!(!svg.contains("<circle"));
    }

    #[test]
    fn svg_three_points_two_colors() {
        let region = SearchBox::cube(2, -2.0, 2.0).unwrap();
        let pts = [
            point(&[-1.0, 0.0], 1),
            point(&[0.0, 0.0], 2),
            point(&[1.0, 0.0], 1),
        ];
        let svg = plot_critical_points(&pts, &region);
        assert_eq!(svg.matches("r=\"5\"").count(), 3);
        assert_eq!(svg.matches(PALETTE[1]).count(), 3);
        assert_eq!(svg.matches(PALETTE[2]).count(), 2);
    }
}
