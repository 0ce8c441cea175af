//! Run configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! file    = { line }
//! line    = [ entry ] [ "#" comment ] newline
//! entry   = key "=" value
//! key     = ident "." ident
//! ident   = lower { lower | digit | "_" }
//! value   = any characters except "#" and newline, trimmed, non-empty
//! list    = value { "," value }
//! ```
//!
//! Whitespace around keys, `=` and values is ignored. Keys may appear once.
//! Unknown keys, and keys that do not apply to the chosen problem kind, are
//! errors. Numbers use Rust float syntax (`1e-10`, `inf`, `-inf`).
//!
//! | key | values | default |
//! |---|---|---|
//! | `problem.kind` | `quadratic`, `lasso`, `tv1d`, `three_term`, `feasibility` | required |
//! | `problem.seed` | integer | `1` |
//! | `problem.dim`, `problem.mu`, `problem.l_smooth` | quadratic size and spectrum | `50`, `1`, `10` |
//! | `problem.m`, `problem.n` | data sizes | `40`, `100` (tv1d: `n = 200`; feasibility: `n = 20`) |
//! | `problem.sparsity` | lasso planted density | `0.1` |
//! | `problem.mu_reg` | regularization weight | `0.1` (tv1d: `0.5`) |
//! | `problem.lo`, `problem.hi` | three-term box | `-0.5`, `0.5` |
//! | `algorithm.scheme` | `gradient`, `proximal`, `fb`, `dr`, `pd`, `sdr`, `dy` | required |
//! | `algorithm.rho`, `algorithm.tau`, `algorithm.sigma` | step sizes | instance defaults |
//! | `algorithm.force` | `true`/`false`: run even if the precheck fails | `false` |
//! | `schedule.alpha_kind`, `schedule.lambda_kind` | `constant`, `ramp`, `table` | `constant` |
//! | `schedule.alpha_value`, `schedule.lambda_value` | constant value | `0`, `1` |
//! | `schedule.alpha_values`, `schedule.lambda_values` | ramp `start, end, len` or a table | none |
//! | `schedule.xi` | contraction weight in `[0, 1]` | `1` |
//! | `schedule.q` | quasi-contraction factor override | operator's own |
//! | `stopping.max_iters` | integer | `10000` |
//! | `stopping.residual_tol` | float | `1e-10` |
//! | `stopping.stall_tol` | float | none |
//! | `outputs.trace_path` | CSV path, relative to the working directory | stdout |
//! | `outputs.report_path` | sweep report path | stdout |
//! | `outputs.checks` | list of `lemma1`, `ck_monotone`, `small_o`, `rate`, `contraction` | none |
//! | `sweep.schedules` | list of `alpha:lambda` pairs | none |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::engine::{Schedule, Sequence, StoppingRule};
use crate::problems::{
    make_feasibility, make_lasso, make_quadratic, make_three_term, make_tv1d, BenchmarkInstance, Scheme,
    StepParams, DEFAULT_LASSO_MU, DEFAULT_SPARSITY, DEFAULT_TV_MU,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parsed `key = value` entries in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigMap {
    pub entries: Vec<Entry>,
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

pub fn parse_config(text: &str) -> Result<ConfigMap, ConfigError> {
    let mut map = ConfigMap::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::at(line, "expected `section.key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        let valid_key = key
            .split_once('.')
            .is_some_and(|(s, k)| valid_ident(s) && valid_ident(k));
        if !valid_key {
            return Err(ConfigError::at(line, format!("malformed key `{key}`")));
        }
        if value.is_empty() {
            return Err(ConfigError::at(line, format!("empty value for `{key}`")));
        }
        if value.chars().any(char::is_control) {
            return Err(ConfigError::at(line, "control character in value"));
        }
        if let Some(prev) = map.entries.iter().find(|e| e.key == key) {
            return Err(ConfigError::at(
                line,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        map.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    Ok(map)
}

/// Typed access that records which keys were consumed.
struct Reader<'a> {
    map: &'a ConfigMap,
    used: Vec<bool>,
}

impl<'a> Reader<'a> {
    fn new(map: &'a ConfigMap) -> Self {
        Self {
            map,
            used: vec![false; map.entries.len()],
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Entry> {
        let i = self.map.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.map.entries[i])
    }

    fn parse<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(e.line, format!("`{key}`: expected {what}, got `{}`", e.value))),
        }
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let line = self.line_of(key);
        match self.parse::<f64>(key, "a number")? {
            Some(v) if v.is_nan() => Err(ConfigError::at(line, format!("`{key}` is NaN"))),
            v => Ok(v),
        }
    }

    fn finite(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let line = self.line_of(key);
        match self.float(key)? {
            Some(v) if !v.is_finite() => Err(ConfigError::at(line, format!("`{key}` must be finite"))),
            v => Ok(v),
        }
    }

    fn list(&mut self, key: &str) -> Option<(Vec<String>, usize)> {
        self.raw(key).map(|e| {
            (
                e.value.split(',').map(|s| s.trim().to_string()).collect(),
                e.line,
            )
        })
    }

    fn line_of(&self, key: &str) -> usize {
        self.map
            .entries
            .iter()
            .find(|e| e.key == key)
            .map_or(0, |e| e.line)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.used.iter().position(|u| !u) {
            Some(i) => {
                let e = &self.map.entries[i];
                Err(ConfigError::at(e.line, format!("unknown or inapplicable key `{}`", e.key)))
            }
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Quadratic { dim: usize, mu: f64, l_smooth: f64, seed: u64 },
    Lasso { m: usize, n: usize, sparsity: f64, mu_reg: f64, seed: u64 },
    Tv1d { n: usize, mu_reg: f64, seed: u64 },
    ThreeTerm { m: usize, n: usize, mu_reg: f64, lo: f64, hi: f64, seed: u64 },
    Feasibility { n: usize, seed: u64 },
}

impl ProblemSpec {
    pub fn build(&self) -> crate::Result<BenchmarkInstance> {
        match *self {
            ProblemSpec::Quadratic { dim, mu, l_smooth, seed } => make_quadratic(dim, mu, l_smooth, seed),
            ProblemSpec::Lasso {
                m,
                n,
                sparsity,
                mu_reg,
                seed,
            } => make_lasso(m, n, sparsity, mu_reg, seed),
            ProblemSpec::Tv1d { n, mu_reg, seed } => make_tv1d(n, mu_reg, seed),
            ProblemSpec::ThreeTerm {
                m,
                n,
                mu_reg,
                lo,
                hi,
                seed,
            } => make_three_term(m, n, mu_reg, (lo, hi), seed),
            ProblemSpec::Feasibility { n, seed } => make_feasibility(n, seed),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::Lasso { .. } => "lasso",
            ProblemSpec::Tv1d { .. } => "tv1d",
            ProblemSpec::ThreeTerm { .. } => "three_term",
            ProblemSpec::Feasibility { .. } => "feasibility",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SequenceSpec {
    Constant(f64),
    Ramp { start: f64, end: f64, len: usize },
    Table(Vec<f64>),
}

impl SequenceSpec {
    pub fn to_sequence(&self) -> Sequence {
        match self {
            SequenceSpec::Constant(v) => Sequence::Constant(*v),
            SequenceSpec::Ramp { start, end, len } => Sequence::Ramp {
                start: *start,
                end: *end,
                len: *len,
            },
            SequenceSpec::Table(t) => Sequence::Table(t.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Lemma1,
    CkMonotone,
    SmallO,
    Rate,
    Contraction,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] = [
        CheckKind::Lemma1,
        CheckKind::CkMonotone,
        CheckKind::SmallO,
        CheckKind::Rate,
        CheckKind::Contraction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Lemma1 => "lemma1",
            CheckKind::CkMonotone => "ck_monotone",
            CheckKind::SmallO => "small_o",
            CheckKind::Rate => "rate",
            CheckKind::Contraction => "contraction",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub scheme: Scheme,
    pub steps: StepParams,
    pub force: bool,
    pub alpha: SequenceSpec,
    pub lambda: SequenceSpec,
    pub xi: f64,
    pub q: Option<f64>,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub stall_tol: Option<f64>,
    pub trace_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub checks: Vec<CheckKind>,
    /// `(alpha, lambda)` pairs for `sweep`.
    pub sweep: Vec<(f64, f64)>,
}

fn read_sequence(r: &mut Reader<'_>, name: &str, default: f64) -> Result<SequenceSpec, ConfigError> {
    let kind_key = format!("schedule.{name}_kind");
    let value_key = format!("schedule.{name}_value");
    let values_key = format!("schedule.{name}_values");
    let kind_line = r.line_of(&kind_key);
    let kind = r.raw(&kind_key).map_or("constant", |e| e.value.as_str());
    let numbers = |r: &mut Reader<'_>| -> Result<Option<(Vec<f64>, usize)>, ConfigError> {
        let Some((items, line)) = r.list(&values_key) else {
            return Ok(None);
        };
        let vals = items
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ConfigError::at(line, format!("`{values_key}`: bad number `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some((vals, line)))
    };
    match kind {
        "constant" => Ok(SequenceSpec::Constant(r.finite(&value_key)?.unwrap_or(default))),
        "ramp" => {
            let Some((v, line)) = numbers(r)? else {
                return Err(ConfigError::at(kind_line, format!("ramp needs `{values_key} = start, end, len`")));
            };
            let bad = || ConfigError::at(line, format!("`{values_key}`: expected `start, end, len`"));
            if v.len() != 3 || v[2] < 1.0 || v[2].fract() != 0.0 {
                return Err(bad());
            }
            Ok(SequenceSpec::Ramp {
                start: v[0],
                end: v[1],
                len: v[2] as usize,
            })
        }
        "table" => {
            let Some((v, _)) = numbers(r)? else {
                return Err(ConfigError::at(kind_line, format!("table needs `{values_key}`")));
            };
            Ok(SequenceSpec::Table(v))
        }
        other => Err(ConfigError::at(kind_line, format!("unknown sequence kind `{other}`"))),
    }
}

fn positive(v: Option<f64>, key: &str, line: usize) -> Result<Option<f64>, ConfigError> {
    match v {
        Some(x) if x <= 0.0 => Err(ConfigError::at(line, format!("`{key}` must be > 0"))),
        v => Ok(v),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_map(&parse_config(text)?)
    }

    pub fn from_map(map: &ConfigMap) -> Result<Self, ConfigError> {
        let mut r = Reader::new(map);
        let kind_line = r.line_of("problem.kind");
        let kind = r
            .raw("problem.kind")
            .map(|e| e.value.clone())
            .ok_or_else(|| ConfigError::general("missing `problem.kind`"))?;
        let seed = r.parse::<u64>("problem.seed", "an unsigned integer")?.unwrap_or(1);
        let size = |r: &mut Reader<'_>, key: &str, d: usize| {
            r.parse::<usize>(key, "an unsigned integer").map(|v| v.unwrap_or(d))
        };
        let problem = match kind.as_str() {
            "quadratic" => ProblemSpec::Quadratic {
                dim: size(&mut r, "problem.dim", 50)?,
                mu: r.finite("problem.mu")?.unwrap_or(1.0),
                l_smooth: r.finite("problem.l_smooth")?.unwrap_or(10.0),
                seed,
            },
            "lasso" => ProblemSpec::Lasso {
                m: size(&mut r, "problem.m", 40)?,
                n: size(&mut r, "problem.n", 100)?,
                sparsity: r.finite("problem.sparsity")?.unwrap_or(DEFAULT_SPARSITY),
                mu_reg: r.finite("problem.mu_reg")?.unwrap_or(DEFAULT_LASSO_MU),
                seed,
            },
            "tv1d" => ProblemSpec::Tv1d {
                n: size(&mut r, "problem.n", 200)?,
                mu_reg: r.finite("problem.mu_reg")?.unwrap_or(DEFAULT_TV_MU),
                seed,
            },
            "three_term" => ProblemSpec::ThreeTerm {
                m: size(&mut r, "problem.m", 40)?,
                n: size(&mut r, "problem.n", 100)?,
                mu_reg: r.finite("problem.mu_reg")?.unwrap_or(DEFAULT_LASSO_MU),
                lo: r.float("problem.lo")?.unwrap_or(-0.5),
                hi: r.float("problem.hi")?.unwrap_or(0.5),
                seed,
            },
            "feasibility" => ProblemSpec::Feasibility {
                n: size(&mut r, "problem.n", 20)?,
                seed,
            },
            other => return Err(ConfigError::at(kind_line, format!("unknown problem kind `{other}`"))),
        };

        let scheme_line = r.line_of("algorithm.scheme");
        let scheme = r
            .raw("algorithm.scheme")
            .ok_or_else(|| ConfigError::general("missing `algorithm.scheme`"))?
            .value
            .parse::<Scheme>()
            .map_err(|e| ConfigError::at(scheme_line, e.to_string()))?;
        let step = |r: &mut Reader<'_>, key: &str| {
            let line = r.line_of(key);
            r.finite(key).and_then(|v| positive(v, key, line))
        };
        let steps = StepParams {
            rho: step(&mut r, "algorithm.rho")?,
            tau: step(&mut r, "algorithm.tau")?,
            sigma: step(&mut r, "algorithm.sigma")?,
        };
        let force = r.parse::<bool>("algorithm.force", "`true` or `false`")?.unwrap_or(false);

        let alpha = read_sequence(&mut r, "alpha", 0.0)?;
        let lambda = read_sequence(&mut r, "lambda", 1.0)?;
        let xi_line = r.line_of("schedule.xi");
        let xi = r.finite("schedule.xi")?.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&xi) {
            return Err(ConfigError::at(xi_line, "`schedule.xi` must lie in [0, 1]"));
        }
        let q_line = r.line_of("schedule.q");
        let q = r.finite("schedule.q")?;
        if q.is_some_and(|q| !(q > 0.0 && q <= 1.0)) {
            return Err(ConfigError::at(q_line, "`schedule.q` must lie in (0, 1]"));
        }

        let max_iters = r.parse::<usize>("stopping.max_iters", "an unsigned integer")?.unwrap_or(10_000);
        let tol_line = r.line_of("stopping.residual_tol");
        let residual_tol = r.finite("stopping.residual_tol")?.unwrap_or(1e-10);
        if residual_tol < 0.0 {
            return Err(ConfigError::at(tol_line, "`stopping.residual_tol` must be >= 0"));
        }
        let stall_line = r.line_of("stopping.stall_tol");
        let stall_tol = r.finite("stopping.stall_tol")?;
        let stall_tol = positive(stall_tol, "stopping.stall_tol", stall_line)?;

        let trace_path = r.raw("outputs.trace_path").map(|e| PathBuf::from(&e.value));
        let report_path = r.raw("outputs.report_path").map(|e| PathBuf::from(&e.value));
        let checks = match r.list("outputs.checks") {
            None => Vec::new(),
            Some((items, line)) => items
                .iter()
                .map(|s| {
                    CheckKind::ALL
                        .into_iter()
                        .find(|c| c.as_str() == s)
                        .ok_or_else(|| ConfigError::at(line, format!("unknown check `{s}`")))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let sweep = match r.list("sweep.schedules") {
            None => Vec::new(),
            Some((items, line)) => items
                .iter()
                .map(|s| {
                    let bad = || ConfigError::at(line, format!("`sweep.schedules`: expected `alpha:lambda`, got `{s}`"));
                    let (a, l) = s.split_once(':').ok_or_else(bad)?;
                    let a: f64 = a.trim().parse().map_err(|_| bad())?;
                    let l: f64 = l.trim().parse().map_err(|_| bad())?;
                    if !(a.is_finite() && l.is_finite()) {
                        return Err(bad());
                    }
                    Ok((a, l))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        r.finish()?;
        let cfg = RunConfig {
            problem,
            scheme,
            steps,
            force,
            alpha,
            lambda,
            xi,
            q,
            max_iters,
            residual_tol,
            stall_tol,
            trace_path,
            report_path,
            checks,
            sweep,
        };
        cfg.schedule().map_err(|e| ConfigError::general(e.to_string()))?;
        cfg.stopping().map_err(|e| ConfigError::general(e.to_string()))?;
        Ok(cfg)
    }

    pub fn schedule(&self) -> crate::Result<Schedule> {
        Schedule::new(self.alpha.to_sequence(), self.lambda.to_sequence())
    }

    pub fn stopping(&self) -> crate::Result<StoppingRule> {
        let rule = StoppingRule::new(self.max_iters, self.residual_tol)?;
        match self.stall_tol {
            Some(t) => rule.with_stall_tol(t),
            None => Ok(rule),
        }
    }

    /// The fully resolved configuration in canonical form; parsing it back
    /// yields an identical `RunConfig`.
    pub fn render(&self) -> String {
        let mut out = Vec::new();
        let mut put = |k: &str, v: String| out.push(format!("{k} = {v}"));
        put("problem.kind", self.problem.kind().to_string());
        match &self.problem {
            ProblemSpec::Quadratic { dim, mu, l_smooth, seed } => {
                put("problem.seed", seed.to_string());
                put("problem.dim", dim.to_string());
                put("problem.mu", num(*mu));
                put("problem.l_smooth", num(*l_smooth));
            }
            ProblemSpec::Lasso {
                m,
                n,
                sparsity,
                mu_reg,
                seed,
            } => {
                put("problem.seed", seed.to_string());
                put("problem.m", m.to_string());
                put("problem.n", n.to_string());
                put("problem.sparsity", num(*sparsity));
                put("problem.mu_reg", num(*mu_reg));
            }
            ProblemSpec::Tv1d { n, mu_reg, seed } => {
                put("problem.seed", seed.to_string());
                put("problem.n", n.to_string());
                put("problem.mu_reg", num(*mu_reg));
            }
            ProblemSpec::ThreeTerm {
                m,
                n,
                mu_reg,
                lo,
                hi,
                seed,
            } => {
                put("problem.seed", seed.to_string());
                put("problem.m", m.to_string());
                put("problem.n", n.to_string());
                put("problem.mu_reg", num(*mu_reg));
                put("problem.lo", num(*lo));
                put("problem.hi", num(*hi));
            }
            ProblemSpec::Feasibility { n, seed } => {
                put("problem.seed", seed.to_string());
                put("problem.n", n.to_string());
            }
        }
        put("algorithm.scheme", self.scheme.to_string());
        for (k, v) in [
            ("algorithm.rho", self.steps.rho),
            ("algorithm.tau", self.steps.tau),
            ("algorithm.sigma", self.steps.sigma),
        ] {
            if let Some(v) = v {
                put(k, num(v));
            }
        }
        put("algorithm.force", self.force.to_string());
        for (name, seq) in [("alpha", &self.alpha), ("lambda", &self.lambda)] {
            match seq {
                SequenceSpec::Constant(v) => {
                    put(&format!("schedule.{name}_kind"), "constant".into());
                    put(&format!("schedule.{name}_value"), num(*v));
                }
                SequenceSpec::Ramp { start, end, len } => {
                    put(&format!("schedule.{name}_kind"), "ramp".into());
                    put(
                        &format!("schedule.{name}_values"),
                        format!("{}, {}, {len}", num(*start), num(*end)),
                    );
                }
                SequenceSpec::Table(t) => {
                    put(&format!("schedule.{name}_kind"), "table".into());
                    put(
                        &format!("schedule.{name}_values"),
                        t.iter().map(|v| num(*v)).collect::<Vec<_>>().join(", "),
                    );
                }
            }
        }
        put("schedule.xi", num(self.xi));
        if let Some(q) = self.q {
            put("schedule.q", num(q));
        }
        put("stopping.max_iters", self.max_iters.to_string());
        put("stopping.residual_tol", num(self.residual_tol));
        if let Some(t) = self.stall_tol {
            put("stopping.stall_tol", num(t));
        }
        if let Some(p) = &self.trace_path {
            put("outputs.trace_path", p.display().to_string());
        }
        if let Some(p) = &self.report_path {
            put("outputs.report_path", p.display().to_string());
        }
        if !self.checks.is_empty() {
            put(
                "outputs.checks",
                self.checks.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", "),
            );
        }
        if !self.sweep.is_empty() {
            put(
                "sweep.schedules",
                self.sweep
                    .iter()
                    .map(|(a, l)| format!("{}:{}", num(*a), num(*l)))
                    .collect::<Vec<_>>()
                    .join(", "),
            );
        }
        out.join("\n")
    }
}

/// Shortest round-trip representation.
fn num(v: f64) -> String {
    format!("{v:?}")
}
