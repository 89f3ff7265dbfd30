//! `key = value` experiment files with `[section]` headers and `#` comments.
//!
//! Parsing never stops at the first problem: every syntax error, unknown
//! key, duplicate and semantic violation is collected into one
//! [`ConfigErrors`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use kgz_core::diagnostics::FoliationConfig;
use kgz_core::evolve::SolverConfig;
use kgz_core::picard::PicardConfig;
use kgz_core::radial::{DataFamily, InitialDataSpec, RadialGrid};
use serde::Serialize;

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    /// Radial nodes; the smallest causal grid when absent.
    pub nr: Option<usize>,
    pub dr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSection {
    pub cfl: f64,
    pub t0: f64,
    pub t_max: f64,
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataSection {
    pub family: String,
    pub eps: f64,
    pub sigma: f64,
    pub center: f64,
    /// Multipliers of `E0, E1, n0, n1`.
    pub amplitudes: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhostSection {
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardSection {
    pub k_max: usize,
    /// Derivative tier `K` of the X-norm.
    pub tier: usize,
    pub eps_list: Vec<f64>,
    pub norm_stride: usize,
    pub t0: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub dir: String,
    pub formats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub time: TimeSection,
    pub data: DataSection,
    pub ghost: GhostSection,
    pub picard: PicardSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = PicardConfig::default();
        let d = InitialDataSpec::default();
        Self {
            grid: GridSection { nr: None, dr: 0.02 },
            time: TimeSection {
                cfl: SolverConfig::DEFAULT_CFL,
                t0: 0.0,
                t_max: 100.0,
                snapshot_stride: 4,
            },
            data: DataSection {
                family: d.family.name().to_string(),
                eps: d.eps,
                sigma: d.sigma,
                center: d.center,
                amplitudes: d.amplitudes,
            },
            ghost: GhostSection { delta: 0.05 },
            picard: PicardSection {
                k_max: p.k_max,
                tier: p.tier,
                eps_list: vec![0.04, 0.02, 0.01, 0.005],
                norm_stride: p.norm_stride,
                t0: p.t0,
                t_max: p.t_max,
            },
            output: OutputSection {
                dir: "out".to_string(),
                formats: vec!["csv".to_string(), "json".to_string()],
            },
        }
    }
}

/// One problem found in a configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "`{k}`: ")?;
        }
        f.write_str(&self.message)
    }
}

/// All problems of one configuration, in line order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigErrors {
    pub issues: Vec<ConfigIssue>,
}

impl ConfigErrors {
    fn push(&mut self, line: Option<usize>, key: Option<&str>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            key: key.map(str::to_string),
            message: message.into(),
        });
    }

    pub fn mentions(&self, key: &str) -> bool {
        self.issues.iter().any(|i| i.key.as_deref() == Some(key))
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration error(s)", self.issues.len())?;
        for i in &self.issues {
            write!(f, "\n  {i}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Clone, Copy)]
enum Kind {
    Float,
    Int,
    Str,
    FloatList,
    StrList,
}

const SECTIONS: [&str; 6] = ["grid", "time", "data", "ghost", "picard", "output"];
const REQUIRED: [&str; 3] = ["grid", "time", "data"];

const KEYS: [(&str, &str, Kind); 20] = [
    ("grid", "nr", Kind::Int),
    ("grid", "dr", Kind::Float),
    ("time", "cfl", Kind::Float),
    ("time", "t0", Kind::Float),
    ("time", "t_max", Kind::Float),
    ("time", "snapshot_stride", Kind::Int),
    ("data", "family", Kind::Str),
    ("data", "eps", Kind::Float),
    ("data", "sigma", Kind::Float),
    ("data", "center", Kind::Float),
    ("data", "amplitudes", Kind::FloatList),
    ("ghost", "delta", Kind::Float),
    ("picard", "k_max", Kind::Int),
    ("picard", "K", Kind::Int),
    ("picard", "eps_list", Kind::FloatList),
    ("picard", "norm_stride", Kind::Int),
    ("picard", "t0", Kind::Float),
    ("picard", "t_max", Kind::Float),
    ("output", "dir", Kind::Str),
    ("output", "formats", Kind::StrList),
];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Float(f64),
    Int(usize),
    Str(String),
    FloatList(Vec<f64>),
    StrList(Vec<String>),
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn list_items(raw: &str) -> Vec<&str> {
    let s = raw.trim();
    let s = s.strip_prefix('[').and_then(|x| x.strip_suffix(']')).unwrap_or(s);
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

fn parse_value(kind: Kind, raw: &str) -> Result<Value, String> {
    let float = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("`{s}` is not a finite number"))
    };
    match kind {
        Kind::Float => float(raw.trim()).map(Value::Float),
        Kind::Int => raw
            .trim()
            .parse::<usize>()
            .map(Value::Int)
            .map_err(|_| format!("`{}` is not a non-negative integer", raw.trim())),
        Kind::Str => Ok(Value::Str(unquote(raw).to_string())),
        Kind::FloatList => list_items(raw)
            .into_iter()
            .map(float)
            .collect::<Result<_, _>>()
            .map(Value::FloatList),
        Kind::StrList => Ok(Value::StrList(
            list_items(raw).into_iter().map(|s| unquote(s).to_string()).collect(),
        )),
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> LabResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    Ok(parse_str(&text)?)
}

/// Parses and validates configuration text, reporting every problem.
pub fn parse_str(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut errs = ConfigErrors::default();
    let mut seen: BTreeMap<String, (usize, Value)> = BTreeMap::new();
    let mut sections: BTreeMap<String, usize> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']').map(str::trim) else {
                errs.push(Some(ln), None, "unterminated section header");
                section = None;
                continue;
            };
            if !SECTIONS.contains(&name) {
                errs.push(Some(ln), None, format!("unknown section [{name}]"));
                section = None;
                continue;
            }
            if let Some(first) = sections.get(name) {
                errs.push(
                    Some(ln),
                    None,
                    format!("section [{name}] repeated (first on line {first})"),
                );
            } else {
                sections.insert(name.to_string(), ln);
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errs.push(Some(ln), None, "expected `key = value`");
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            errs.push(Some(ln), None, "expected `key = value`");
            continue;
        }
        let Some(sec) = section.as_deref() else {
            errs.push(Some(ln), Some(k), "key outside any known section");
            continue;
        };
        let full = format!("{sec}.{k}");
        let Some(&(_, _, kind)) = KEYS.iter().find(|(s, key, _)| *s == sec && *key == k) else {
            errs.push(Some(ln), Some(&full), "unknown key");
            continue;
        };
        if let Some((first, _)) = seen.get(&full) {
            errs.push(Some(ln), Some(&full), format!("duplicate key (lines {first} and {ln})"));
            continue;
        }
        match parse_value(kind, v) {
            Ok(val) => {
                seen.insert(full, (ln, val));
            }
            Err(m) => errs.push(Some(ln), Some(&full), m),
        }
    }
    for s in REQUIRED {
        if !sections.contains_key(s) {
            errs.push(None, None, format!("missing section [{s}]"));
        }
    }
    let cfg = assemble(&seen, &mut errs);
    validate(&cfg, &seen, &mut errs);
    if errs.issues.is_empty() {
        Ok(cfg)
    } else {
        errs.issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        Err(errs)
    }
}

fn assemble(seen: &BTreeMap<String, (usize, Value)>, errs: &mut ConfigErrors) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    for (key, (ln, v)) in seen {
        match (key.as_str(), v) {
            ("grid.nr", Value::Int(x)) => c.grid.nr = Some(*x),
            ("grid.dr", Value::Float(x)) => c.grid.dr = *x,
            ("time.cfl", Value::Float(x)) => c.time.cfl = *x,
            ("time.t0", Value::Float(x)) => c.time.t0 = *x,
            ("time.t_max", Value::Float(x)) => c.time.t_max = *x,
            ("time.snapshot_stride", Value::Int(x)) => c.time.snapshot_stride = *x,
            ("data.family", Value::Str(x)) => c.data.family = x.clone(),
            ("data.eps", Value::Float(x)) => c.data.eps = *x,
            ("data.sigma", Value::Float(x)) => c.data.sigma = *x,
            ("data.center", Value::Float(x)) => c.data.center = *x,
            ("data.amplitudes", Value::FloatList(x)) => match <[f64; 4]>::try_from(x.as_slice()) {
                Ok(a) => c.data.amplitudes = a,
                Err(_) => errs.push(Some(*ln), Some(key), "expected four values (E0, E1, n0, n1)"),
            },
            ("ghost.delta", Value::Float(x)) => c.ghost.delta = *x,
            ("picard.k_max", Value::Int(x)) => c.picard.k_max = *x,
            ("picard.K", Value::Int(x)) => c.picard.tier = *x,
            ("picard.eps_list", Value::FloatList(x)) => c.picard.eps_list = x.clone(),
            ("picard.norm_stride", Value::Int(x)) => c.picard.norm_stride = *x,
            ("picard.t0", Value::Float(x)) => c.picard.t0 = *x,
            ("picard.t_max", Value::Float(x)) => c.picard.t_max = *x,
            ("output.dir", Value::Str(x)) => c.output.dir = x.clone(),
            ("output.formats", Value::StrList(x)) => c.output.formats = x.clone(),
            _ => errs.push(Some(*ln), Some(key), "value has the wrong type"),
        }
    }
    c
}

fn validate(c: &ExperimentConfig, seen: &BTreeMap<String, (usize, Value)>, errs: &mut ConfigErrors) {
    let bad = |errs: &mut ConfigErrors, key: &str, ok: bool, msg: &str| {
        if !ok {
            let line = seen.get(key).map(|(l, _)| *l);
            errs.push(line, Some(key), msg);
        }
    };
    bad(errs, "grid.dr", c.grid.dr > 0.0, "grid spacing must be positive");
    bad(
        errs,
        "grid.nr",
        c.grid.nr.is_none_or(|n| n >= 8),
        "at least 8 radial nodes are required",
    );
    bad(
        errs,
        "time.cfl",
        c.time.cfl > 0.0 && c.time.cfl <= 1.0,
        "CFL number must lie in (0, 1]",
    );
    bad(errs, "time.t0", c.time.t0 >= 0.0, "start time must be non-negative");
    bad(
        errs,
        "time.t_max",
        c.time.t_max > c.time.t0,
        "final time must exceed the start time",
    );
    bad(
        errs,
        "time.snapshot_stride",
        c.time.snapshot_stride >= 1,
        "stride must be at least 1",
    );
    bad(
        errs,
        "data.family",
        DataFamily::from_name(&c.data.family).is_some(),
        "family must be `gaussian` or `bump`",
    );
    bad(errs, "data.eps", c.data.eps >= 0.0, "amplitude must be non-negative");
    bad(errs, "data.sigma", c.data.sigma > 0.0, "width must be positive");
    bad(errs, "data.center", c.data.center >= 0.0, "center must be non-negative");
    bad(
        errs,
        "ghost.delta",
        c.ghost.delta > 0.0 && c.ghost.delta <= 0.1,
        "delta must lie in (0, 0.1]",
    );
    bad(
        errs,
        "picard.k_max",
        c.picard.k_max >= 3,
        "at least three iterations are required",
    );
    bad(
        errs,
        "picard.K",
        c.picard.tier <= 2,
        "derivative tier K must be 0, 1 or 2",
    );
    bad(
        errs,
        "picard.eps_list",
        !c.picard.eps_list.is_empty() && c.picard.eps_list.iter().all(|e| *e > 0.0),
        "needs at least one positive size",
    );
    bad(
        errs,
        "picard.norm_stride",
        c.picard.norm_stride >= 1,
        "stride must be at least 1",
    );
    bad(errs, "picard.t0", c.picard.t0 >= 0.0, "start time must be non-negative");
    bad(
        errs,
        "picard.t_max",
        c.picard.t_max > c.picard.t0,
        "final time must exceed the start time",
    );
    bad(
        errs,
        "output.formats",
        c.output.formats.iter().all(|f| f == "csv" || f == "json") && c.output.formats.iter().any(|f| f == "csv"),
        "formats are `csv` (required) and `json`",
    );
    bad(
        errs,
        "output.dir",
        !c.output.dir.is_empty(),
        "output directory must be named",
    );
    // checks that need a grid only make sense once the basics hold
    if errs.issues.iter().any(|i| i.key.is_some()) {
        return;
    }
    let data = c.data_spec();
    match c.solver_config() {
        Ok(sc) => {
            if let Err(kgz_core::Error::Config { key, reason }) = data.validate(&sc.grid) {
                bad(errs, key, false, &reason);
            }
            if c.grid.nr.is_some() {
                if let Err(kgz_core::Error::Config { reason, .. }) = sc.check_causal(data.support_radius()) {
                    bad(errs, "grid.nr", false, &reason);
                }
            }
        }
        Err(e) => bad(errs, "grid.nr", false, &e.to_string()),
    }
}

impl ExperimentConfig {
    pub fn data_spec(&self) -> InitialDataSpec {
        InitialDataSpec {
            family: DataFamily::from_name(&self.data.family).unwrap_or(DataFamily::Gaussian),
            eps: self.data.eps,
            sigma: self.data.sigma,
            center: self.data.center,
            amplitudes: self.data.amplitudes,
        }
    }

    /// Solver settings over `[time.t0, time.t_max]`; the causal grid unless
    /// `grid.nr` is set.
    pub fn solver_config(&self) -> kgz_core::Result<SolverConfig> {
        let duration = self.time.t_max - self.time.t0;
        let grid = match self.grid.nr {
            Some(n) => RadialGrid::new(n, self.grid.dr)?,
            None => {
                SolverConfig::causal_grid(self.data_spec().support_radius(), duration, self.grid.dr, self.time.cfl)?
            }
        };
        let mut sc = SolverConfig::new(grid, self.time.t0, self.time.t_max);
        sc.cfl = self.time.cfl;
        sc.snapshot_stride = self.time.snapshot_stride;
        Ok(sc)
    }

    pub fn picard_config(&self) -> PicardConfig {
        PicardConfig {
            dr: self.grid.dr,
            cfl: self.time.cfl,
            t0: self.picard.t0,
            t_max: self.picard.t_max,
            snapshot_stride: self.time.snapshot_stride,
            data: self.data_spec(),
            k_max: self.picard.k_max,
            tier: self.picard.tier,
            delta: self.ghost.delta,
            norm_stride: self.picard.norm_stride,
        }
    }

    /// The two-field comparison keeps its own cone-supported data and start
    /// time; spacing, CFL number and horizon come from this configuration.
    pub fn foliation_config(&self) -> FoliationConfig {
        FoliationConfig {
            dr: self.grid.dr,
            cfl: self.time.cfl,
            t_max: self.time.t_max,
            ..FoliationConfig::default()
        }
    }

    pub fn wants_json(&self) -> bool {
        self.output.formats.iter().any(|f| f == "json")
    }

    /// Canonical JSON rendering, the input of the manifest hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\ndr = 0.05\n[time]\nt_max = 10\n[data]\nfamily = gaussian\neps = 0.01\n";

    #[test]
    fn minimal_file_fills_defaults() {
        let c = parse_str(MINIMAL).unwrap();
        assert_eq!(c.ghost.delta, 0.05);
        assert_eq!(c.time.cfl, 0.9);
        assert_eq!(c.grid.dr, 0.05);
        assert_eq!(c.picard.k_max, 7);
        assert_eq!(c.data.amplitudes, [1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn negative_spacing_names_the_key() {
        let text = MINIMAL.replace("dr = 0.05", "dr = -1");
        let e = parse_str(&text).unwrap_err();
        assert!(e.mentions("grid.dr"), "{e}");
        assert_eq!(e.issues[0].line, Some(2));
    }

    #[test]
    fn semantic_errors_are_aggregated() {
        let text = MINIMAL
            .replace("dr = 0.05", "dr = -1")
            .replace("[time]", "[time]\ncfl = 2")
            .replace("eps = 0.01", "eps = -3");
        let e = parse_str(&text).unwrap_err();
        for k in ["grid.dr", "time.cfl", "data.eps"] {
            assert!(e.mentions(k), "{k} missing from {e}");
        }
    }

    #[test]
    fn duplicate_key_cites_both_lines() {
        let text = format!("{MINIMAL}[ghost]\ndelta = 0.05\n# again\ndelta = 0.07\n");
        let e = parse_str(&text).unwrap_err();
        assert_eq!(e.issues.len(), 1);
        let m = e.issues[0].to_string();
        assert!(m.contains("lines 9 and 11"), "{m}");
    }

    #[test]
    fn syntax_and_unknown_keys_are_reported_with_lines() {
        let text = format!("{MINIMAL}[ghost]\ndelta 0.05\nwidth = 3\n[extra]\n");
        let e = parse_str(&text).unwrap_err();
        let lines: Vec<_> = e.issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![Some(9), Some(10), Some(11)]);
        assert!(e.mentions("ghost.width"));
    }

    #[test]
    fn missing_sections_are_errors() {
        let e = parse_str("[grid]\ndr = 0.05\n").unwrap_err();
        assert_eq!(e.issues.len(), 2);
    }

    #[test]
    fn lists_comments_and_quotes() {
        let text = format!(
            "{MINIMAL}amplitudes = [1, 0.5, 0, 0] # trailing\n[picard]\neps_list = 0.1, 0.05\n[output]\ndir = \"a#b\"\nformats = csv\n"
        );
        let c = parse_str(&text).unwrap();
        assert_eq!(c.data.amplitudes, [1.0, 0.5, 0.0, 0.0]);
        assert_eq!(c.picard.eps_list, vec![0.1, 0.05]);
        assert_eq!(c.output.dir, "a#b");
        assert!(!c.wants_json());
    }

    #[test]
    fn grid_dependent_checks_run_last() {
        let text = MINIMAL.replace("dr = 0.05", "dr = 0.2");
        let e = parse_str(&text).unwrap_err();
        assert!(e.mentions("data.sigma"), "{e}");
        let text = MINIMAL.replace("dr = 0.05", "dr = 0.05\nnr = 100");
        assert!(parse_str(&text).unwrap_err().mentions("grid.nr"));
    }
}
