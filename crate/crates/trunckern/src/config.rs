//! `key = value` experiment configurations with dotted sections.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use trunckern_core::{DtPolicy, KernelParams, Profile};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("`{key}`: expected {expected}, found `{value}`")]
    Type {
        key: &'static str,
        expected: &'static str,
        value: String,
    },
    #[error("`{key}`: {reason}")]
    Constraint { key: &'static str, reason: String },
    #[error("{file}, line {line}: {reason}")]
    Family { file: PathBuf, line: usize, reason: String },
}

fn constraint(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Constraint {
        key,
        reason: reason.into(),
    }
}

const KEYS: &[&str] = &[
    "name",
    "seed",
    "kernel.family",
    "kernel.s",
    "kernel.rho",
    "kernel.lambda",
    "kernel.Lambda",
    "kernel.scale",
    "kernel.asymmetry",
    "grid.d",
    "grid.L",
    "grid.n",
    "grid.extension",
    "grid.extension_value",
    "op.kind",
    "op.drift_Lambda",
    "op.isaac_family",
    "time.T",
    "time.dt",
    "time.cfl_fraction",
    "time.snapshot_stride",
    "problem.kind",
    "problem.initial",
    "problem.forcing",
    "problem.rho_list",
    "metrics.R",
    "metrics.alpha",
    "metrics.levels",
    "metrics.harnack_a",
    "out.dir",
    "out.format",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    TruncatedFractional,
    /// The same formula evaluated through the generic quadrature path.
    User,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBlock {
    pub family: KernelFamily,
    pub s: f64,
    pub rho: f64,
    pub lambda: f64,
    pub lambda_upper: f64,
    pub scale: f64,
    /// User family only: the kernel is multiplied by `1 + asymmetry` on `y_1 > 0`.
    pub asymmetry: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtensionKind {
    Constant(f64),
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBlock {
    pub d: usize,
    pub half_width: f64,
    pub n: usize,
    pub extension: ExtensionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Linear,
    PucciPlus,
    PucciMinus,
    Isaac,
}

impl OpKind {
    fn name(self) -> &'static str {
        match self {
            OpKind::Linear => "linear",
            OpKind::PucciPlus => "pucci_plus",
            OpKind::PucciMinus => "pucci_minus",
            OpKind::Isaac => "isaac",
        }
    }
}

/// One line of an Isaac family file: `alpha beta scale b_1 [b_2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsaacSpec {
    pub alpha: usize,
    pub beta: usize,
    pub scale: f64,
    pub drift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpBlock {
    pub kind: OpKind,
    pub drift_lambda: Option<f64>,
    pub isaac_family: Option<PathBuf>,
    pub members: Vec<IsaacSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBlock {
    pub horizon: f64,
    pub dt_policy: DtPolicy,
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Cauchy,
    TruncationSweep,
    Elliptic,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Cauchy => "cauchy",
            ProblemKind::TruncationSweep => "truncation_sweep",
            ProblemKind::Elliptic => "elliptic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemBlock {
    pub kind: ProblemKind,
    pub initial: Profile,
    pub forcing: Profile,
    pub rho_list: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsBlock {
    pub radius: f64,
    pub alpha: Option<f64>,
    pub levels: usize,
    pub harnack_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub kernel: KernelBlock,
    pub grid: GridBlock,
    pub op: OpBlock,
    pub time: TimeBlock,
    pub problem: ProblemBlock,
    pub metrics: MetricsBlock,
    pub out_dir: PathBuf,
    /// SHA-256 of the canonical rendering.
    pub digest: String,
    /// SHA-256 of the raw input files (config plus family file).
    pub input_hash: String,
}

struct Entries {
    map: BTreeMap<&'static str, String>,
}

impl Entries {
    fn raw(&self, key: &'static str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn has(&self, key: &'static str) -> bool {
        self.map.contains_key(key)
    }

    fn required(&self, key: &'static str) -> Result<&str, ConfigError> {
        self.raw(key).ok_or(ConfigError::Missing(key))
    }

    fn parse<T: std::str::FromStr>(&self, key: &'static str, expected: &'static str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::Type {
                key,
                expected,
                value: v.to_string(),
            }),
        }
    }

    fn number(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        match self.parse::<f64>(key, "a number")? {
            Some(v) if !v.is_finite() => Err(ConfigError::Type {
                key,
                expected: "a finite number",
                value: self.raw(key).unwrap_or_default().to_string(),
            }),
            other => Ok(other),
        }
    }

    fn number_or(&self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn required_number(&self, key: &'static str) -> Result<f64, ConfigError> {
        self.required(key)?;
        Ok(self.number(key)?.expect("present"))
    }

    fn integer_or(&self, key: &'static str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.parse::<usize>(key, "a nonnegative integer")?.unwrap_or(default))
    }

    fn profile(&self, key: &'static str, default: &str, seed: u64) -> Result<Profile, ConfigError> {
        let text = self.raw(key).unwrap_or(default);
        Profile::parse(text, seed).map_err(|_| ConfigError::Type {
            key,
            expected: "a named profile (constant, constant(c), zero, box, cosine, rough_seeded(n))",
            value: text.to_string(),
        })
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: line_no,
                text: line.trim().to_string(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax {
                line: line_no,
                text: line.trim().to_string(),
            });
        }
        let Some(key) = KEYS.iter().find(|known| **known == k) else {
            return Err(ConfigError::UnknownKey {
                line: line_no,
                key: k.to_string(),
            });
        };
        if map.insert(*key, v.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey {
                line: line_no,
                key: k.to_string(),
            });
        }
    }
    Ok(Entries { map })
}

/// Parses `0.5,0.25,0` into a list.
pub fn parse_rho_list(text: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = || ConfigError::Type {
        key: "problem.rho_list",
        expected: "a comma-separated list of numbers",
        value: text.to_string(),
    };
    let list = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    check_rho_list(&list)?;
    Ok(list)
}

pub fn check_rho_list(list: &[f64]) -> Result<(), ConfigError> {
    if list.is_empty() {
        return Err(constraint("problem.rho_list", "empty list"));
    }
    if list.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(constraint("problem.rho_list", "entries must be nonnegative"));
    }
    if list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(constraint("problem.rho_list", "entries must decrease strictly"));
    }
    Ok(())
}

fn parse_family(path: &Path, d: usize) -> Result<(Vec<IsaacSpec>, Vec<u8>), ConfigError> {
    let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let fail = |line: usize, reason: String| ConfigError::Family {
        file: path.to_path_buf(),
        line,
        reason,
    };
    let mut members = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 + d {
            return Err(fail(
                i + 1,
                format!("expected `alpha beta scale` and {d} drift components"),
            ));
        }
        let index = |t: &str| t.parse::<usize>().map_err(|_| fail(i + 1, format!("bad index `{t}`")));
        let num = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fail(i + 1, format!("bad number `{t}`")))
        };
        members.push(IsaacSpec {
            alpha: index(fields[0])?,
            beta: index(fields[1])?,
            scale: num(fields[2])?,
            drift: fields[3..].iter().map(|t| num(t)).collect::<Result<_, _>>()?,
        });
    }
    if members.is_empty() {
        return Err(fail(0, "the family is empty".into()));
    }
    Ok((members, bytes))
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| ConfigError::Syntax {
        line: 0,
        text: "file is not UTF-8".into(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_str(&text, base, &bytes)
}

/// Parses config text; relative file references resolve against `base`.
pub fn parse_str(text: &str, base: &Path, raw: &[u8]) -> Result<ExperimentConfig, ConfigError> {
    let e = tokenize(text)?;
    let name = e.required("name")?.to_string();
    if !name
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
    {
        return Err(constraint("name", "use letters, digits, `_`, `-` and `.` only"));
    }
    let seed = e.parse::<u64>("seed", "a nonnegative integer")?.unwrap_or(0);

    // grid
    let d = e.integer_or("grid.d", 1)?;
    if !(1..=2).contains(&d) {
        return Err(constraint("grid.d", format!("{d} is not 1 or 2")));
    }
    let half_width = e.required_number("grid.L")?;
    if !(half_width > 0.0) {
        return Err(constraint("grid.L", "must be positive"));
    }
    let n = e
        .parse::<usize>("grid.n", "a positive integer")?
        .ok_or(ConfigError::Missing("grid.n"))?;
    if n < 8 {
        return Err(constraint("grid.n", format!("{n} < 8")));
    }
    let extension = match e.raw("grid.extension").unwrap_or("constant") {
        "constant" => ExtensionKind::Constant(e.number_or("grid.extension_value", 0.0)?),
        "periodic" => {
            if e.has("grid.extension_value") {
                return Err(constraint("grid.extension_value", "not used by a periodic grid"));
            }
            ExtensionKind::Periodic
        }
        other => {
            return Err(ConfigError::Type {
                key: "grid.extension",
                expected: "constant or periodic",
                value: other.to_string(),
            })
        }
    };
    let grid = GridBlock {
        d,
        half_width,
        n,
        extension,
    };

    // kernel
    let family = match e.raw("kernel.family").unwrap_or("truncated_fractional") {
        "truncated_fractional" => KernelFamily::TruncatedFractional,
        "user" => KernelFamily::User,
        other => {
            return Err(ConfigError::Type {
                key: "kernel.family",
                expected: "truncated_fractional or user",
                value: other.to_string(),
            })
        }
    };
    let s = e.required_number("kernel.s")?;
    if !(s > 0.0 && s < 1.0) {
        return Err(constraint("kernel.s", format!("{s} is not in (0, 1)")));
    }
    let rho = e.number_or("kernel.rho", 0.0)?;
    if rho < 0.0 {
        return Err(constraint("kernel.rho", "must be nonnegative"));
    }
    let lambda = e.number_or("kernel.lambda", 1.0)?;
    if !(lambda > 0.0) {
        return Err(constraint("kernel.lambda", "must be positive"));
    }
    let annulus = KernelParams::new(d, s, lambda, f64::MAX, 0.0)
        .map_err(|err| constraint("kernel", err.to_string()))?
        .pure_annulus_constant();
    let scale = e.number_or("kernel.scale", lambda)?;
    let lambda_upper = e.number_or("kernel.Lambda", 2.0 * lambda * annulus)?;
    if !(lambda_upper >= lambda) {
        return Err(constraint(
            "kernel.Lambda",
            format!("{lambda_upper} < lambda = {lambda}"),
        ));
    }
    if !(scale >= lambda) {
        return Err(constraint("kernel.scale", format!("{scale} < lambda = {lambda}")));
    }
    let asymmetry = e.number_or("kernel.asymmetry", 0.0)?;
    if asymmetry != 0.0 && family != KernelFamily::User {
        return Err(constraint(
            "kernel.asymmetry",
            "only the user family takes an asymmetry",
        ));
    }
    if asymmetry < 0.0 {
        return Err(constraint("kernel.asymmetry", "must be nonnegative"));
    }
    let kernel = KernelBlock {
        family,
        s,
        rho,
        lambda,
        lambda_upper,
        scale,
        asymmetry,
    };

    // operator
    let kind = match e.raw("op.kind").unwrap_or("linear") {
        "linear" => OpKind::Linear,
        "pucci_plus" => OpKind::PucciPlus,
        "pucci_minus" => OpKind::PucciMinus,
        "isaac" => OpKind::Isaac,
        other => {
            return Err(ConfigError::Type {
                key: "op.kind",
                expected: "linear, pucci_plus, pucci_minus or isaac",
                value: other.to_string(),
            })
        }
    };
    let drift_lambda = e.number("op.drift_Lambda")?;
    if let Some(b) = drift_lambda {
        if b < 0.0 {
            return Err(constraint("op.drift_Lambda", "must be nonnegative"));
        }
        if b > 0.0 && s < 0.5 {
            return Err(constraint("op.drift_Lambda", "drift requires s ≥ 1/2"));
        }
        if b > lambda_upper {
            return Err(constraint(
                "op.drift_Lambda",
                format!("{b} exceeds Lambda = {lambda_upper}"),
            ));
        }
        if kind == OpKind::Isaac {
            return Err(constraint("op.drift_Lambda", "Isaac drifts come from the family file"));
        }
    }
    let mut hashed = raw.to_vec();
    let (isaac_family, members) = match (kind, e.raw("op.isaac_family")) {
        (OpKind::Isaac, None) => return Err(ConfigError::Missing("op.isaac_family")),
        (OpKind::Isaac, Some(p)) => {
            let path = base.join(p);
            let (members, bytes) = parse_family(&path, d)?;
            hashed.extend_from_slice(&bytes);
            for m in &members {
                if !(m.scale >= lambda) {
                    return Err(constraint(
                        "op.isaac_family",
                        format!("member scale {} < lambda", m.scale),
                    ));
                }
                let b = m.drift.iter().map(|x| x * x).sum::<f64>().sqrt();
                if b > 0.0 && s < 0.5 {
                    return Err(constraint("op.isaac_family", "drift requires s ≥ 1/2"));
                }
                if b > lambda_upper {
                    return Err(constraint("op.isaac_family", format!("|b| = {b} exceeds Lambda")));
                }
            }
            (Some(PathBuf::from(p)), members)
        }
        (_, Some(_)) => return Err(constraint("op.isaac_family", "only used with op.kind = isaac")),
        (_, None) => (None, Vec::new()),
    };
    let op = OpBlock {
        kind,
        drift_lambda,
        isaac_family,
        members,
    };

    // problem
    let problem_kind = match e.raw("problem.kind").unwrap_or("cauchy") {
        "cauchy" => ProblemKind::Cauchy,
        "truncation_sweep" => ProblemKind::TruncationSweep,
        "elliptic" => ProblemKind::Elliptic,
        other => {
            return Err(ConfigError::Type {
                key: "problem.kind",
                expected: "cauchy, truncation_sweep or elliptic",
                value: other.to_string(),
            })
        }
    };
    let initial = e.profile("problem.initial", "box", seed)?;
    let forcing = e.profile("problem.forcing", "zero", seed)?;
    let rho_list = match (problem_kind, e.raw("problem.rho_list")) {
        (ProblemKind::TruncationSweep, None) => return Err(ConfigError::Missing("problem.rho_list")),
        (ProblemKind::TruncationSweep, Some(t)) => parse_rho_list(t)?,
        (_, Some(_)) => return Err(constraint("problem.rho_list", "only used by truncation_sweep")),
        (_, None) => Vec::new(),
    };
    if problem_kind == ProblemKind::TruncationSweep && e.has("kernel.rho") {
        return Err(constraint(
            "kernel.rho",
            "a truncation sweep takes its cutoffs from problem.rho_list",
        ));
    }
    let problem = ProblemBlock {
        kind: problem_kind,
        initial,
        forcing,
        rho_list,
    };

    // time
    let horizon = e.number_or("time.T", 1.0)?;
    if !(horizon > 0.0) {
        return Err(constraint("time.T", "must be positive"));
    }
    let dt_policy = match (e.number("time.dt")?, e.number("time.cfl_fraction")?) {
        (Some(_), Some(_)) => return Err(constraint("time.dt", "give either time.dt or time.cfl_fraction")),
        (Some(dt), None) if dt > 0.0 => DtPolicy::Fixed(dt),
        (Some(_), None) => return Err(constraint("time.dt", "must be positive")),
        (None, c) => {
            let c = c.unwrap_or(0.9);
            if !(c > 0.0 && c <= 1.0) {
                return Err(constraint("time.cfl_fraction", format!("{c} is not in (0, 1]")));
            }
            DtPolicy::Auto { cfl_fraction: c }
        }
    };
    let snapshot_stride = e.integer_or("time.snapshot_stride", 1)?;
    if snapshot_stride == 0 {
        return Err(constraint("time.snapshot_stride", "must be at least 1"));
    }
    let time = TimeBlock {
        horizon,
        dt_policy,
        snapshot_stride,
    };

    // metrics
    let radius = e.number_or("metrics.R", 1.0)?;
    if !(radius > 0.0) {
        return Err(constraint("metrics.R", "must be positive"));
    }
    if extension != ExtensionKind::Periodic && radius > half_width {
        return Err(constraint(
            "metrics.R",
            format!("B_R leaves the box [-{half_width}, {half_width}]"),
        ));
    }
    if problem_kind != ProblemKind::Elliptic && radius.powf(2.0 * s) > horizon {
        return Err(constraint("metrics.R", "the cylinder Q_R starts before t = -T"));
    }
    let alpha = e.number("metrics.alpha")?;
    if let Some(a) = alpha {
        if !(a > 0.0 && a < 2.0 * s) {
            return Err(constraint("metrics.alpha", format!("{a} is not in (0, 2s)")));
        }
    }
    let levels = e.integer_or("metrics.levels", 4)?;
    if levels == 0 {
        return Err(constraint("metrics.levels", "must be at least 1"));
    }
    let harnack_a = e.number_or("metrics.harnack_a", forcing.sup_bound())?;
    if harnack_a < 0.0 {
        return Err(constraint("metrics.harnack_a", "must be nonnegative"));
    }
    let metrics = MetricsBlock {
        radius,
        alpha,
        levels,
        harnack_a,
    };

    let out_dir = PathBuf::from(e.raw("out.dir").unwrap_or("out"));
    match e.raw("out.format").unwrap_or("csv") {
        "csv" => {}
        other => {
            return Err(ConfigError::Type {
                key: "out.format",
                expected: "csv",
                value: other.to_string(),
            })
        }
    }

    let mut cfg = ExperimentConfig {
        name,
        seed,
        kernel,
        grid,
        op,
        time,
        problem,
        metrics,
        out_dir,
        digest: String::new(),
        input_hash: hex::encode(Sha256::digest(&hashed)),
    };
    cfg.digest = hex::encode(Sha256::digest(cfg.canonical().as_bytes()));
    Ok(cfg)
}

impl ExperimentConfig {
    /// Every setting, defaults included, one `key = value` per line in a
    /// fixed order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let k = &self.kernel;
        put("name", self.name.clone());
        put("seed", self.seed.to_string());
        put(
            "kernel.family",
            match k.family {
                KernelFamily::TruncatedFractional => "truncated_fractional",
                KernelFamily::User => "user",
            }
            .into(),
        );
        put("kernel.s", k.s.to_string());
        if self.problem.kind != ProblemKind::TruncationSweep {
            put("kernel.rho", k.rho.to_string());
        }
        put("kernel.lambda", k.lambda.to_string());
        put("kernel.Lambda", k.lambda_upper.to_string());
        put("kernel.scale", k.scale.to_string());
        if k.family == KernelFamily::User {
            put("kernel.asymmetry", k.asymmetry.to_string());
        }
        let g = &self.grid;
        put("grid.d", g.d.to_string());
        put("grid.L", g.half_width.to_string());
        put("grid.n", g.n.to_string());
        match g.extension {
            ExtensionKind::Constant(c) => {
                put("grid.extension", "constant".into());
                put("grid.extension_value", c.to_string());
            }
            ExtensionKind::Periodic => put("grid.extension", "periodic".into()),
        }
        put("op.kind", self.op.kind.name().into());
        if let Some(b) = self.op.drift_lambda {
            put("op.drift_Lambda", b.to_string());
        }
        if self.op.kind == OpKind::Isaac {
            for (i, m) in self.op.members.iter().enumerate() {
                let drift: Vec<String> = m.drift.iter().map(|b| b.to_string()).collect();
                put(
                    &format!("op.isaac_family[{i}]"),
                    format!("{} {} {} {}", m.alpha, m.beta, m.scale, drift.join(" ")),
                );
            }
        }
        put("time.T", self.time.horizon.to_string());
        match self.time.dt_policy {
            DtPolicy::Fixed(dt) => put("time.dt", dt.to_string()),
            DtPolicy::Auto { cfl_fraction } => put("time.cfl_fraction", cfl_fraction.to_string()),
        }
        put("time.snapshot_stride", self.time.snapshot_stride.to_string());
        put("problem.kind", self.problem.kind.name().into());
        put("problem.initial", self.problem.initial.name());
        put("problem.forcing", self.problem.forcing.name());
        if !self.problem.rho_list.is_empty() {
            let l: Vec<String> = self.problem.rho_list.iter().map(|r| r.to_string()).collect();
            put("problem.rho_list", l.join(","));
        }
        let m = &self.metrics;
        put("metrics.R", m.radius.to_string());
        if let Some(a) = m.alpha {
            put("metrics.alpha", a.to_string());
        }
        put("metrics.levels", m.levels.to_string());
        put("metrics.harnack_a", m.harnack_a.to_string());
        put("out.format", "csv".into());
        out
    }

    /// Turns the config into a truncation sweep over `rho_list`.
    pub fn into_sweep(mut self, rho_list: Vec<f64>) -> Result<Self, ConfigError> {
        check_rho_list(&rho_list)?;
        if self.problem.kind == ProblemKind::Elliptic {
            return Err(constraint("problem.kind", "an elliptic problem cannot be swept in rho"));
        }
        self.problem.kind = ProblemKind::TruncationSweep;
        self.problem.rho_list = rho_list;
        self.kernel.rho = 0.0;
        self.digest = hex::encode(Sha256::digest(self.canonical().as_bytes()));
        Ok(self)
    }
}
