//! Run configuration: a `[section]` / `key = value` text format.
//!
//! Values are booleans (`true`/`false`), reals, comma-separated vectors,
//! bare words, or built-in calls `name(arg, ...)`. `#` starts a comment.
//! [`RunConfig`]'s `Display` prints a canonical form that parses back to the
//! same value.

use std::collections::BTreeMap;
use std::fmt;

use crate::builtins::{self, Registry};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based; 0 when the error concerns the file as a whole.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// `name(args)`; a bare word has no arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Builtin {
    pub name: String,
    pub args: Vec<f64>,
}

impl Builtin {
    pub fn new(name: &str, args: &[f64]) -> Self {
        Self {
            name: name.to_string(),
            args: args.to_vec(),
        }
    }

    pub fn arg(&self, i: usize, default: f64) -> f64 {
        self.args.get(i).copied().unwrap_or(default)
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return write!(f, "{}", self.name);
        }
        write!(f, "{}(", self.name)?;
        write_list(f, &self.args)?;
        write!(f, ")")
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, values: &[T]) -> fmt::Result {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{v}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Semilinear,
    Quasilinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub dimension: usize,
    pub extents: Vec<f64>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientsConfig {
    pub beta: f64,
    pub a: Builtin,
    pub c: Builtin,
    pub b: Builtin,
    pub mode: RunMode,
    /// Multiplies the amplitudes of `a` and `c`.
    pub scale: f64,
}

impl Default for CoefficientsConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            a: Builtin::new("zero", &[]),
            c: Builtin::new("zero", &[]),
            b: Builtin::new("constant", &[1.0]),
            mode: RunMode::Semilinear,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub kind: Builtin,
    /// Shift `ψ₀` by its mean and the potential accordingly.
    pub mean_zero: bool,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: Builtin::new("constant", &[0.0]),
            mean_zero: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    pub kind: Builtin,
    pub stabilization: Option<f64>,
    pub scan_range: f64,
    pub eta: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            kind: Builtin::new("double_well", &[]),
            stabilization: None,
            scan_range: 10.0,
            eta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    pub tau: f64,
    pub steps: usize,
    pub tol_rate: f64,
    pub tol_station: f64,
    pub picard: usize,
    pub stop_on_steady: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub f: Builtin,
    pub g: Builtin,
    pub h1: Builtin,
    pub h2: Builtin,
}

impl Default for DataConfig {
    fn default() -> Self {
        let zero = Builtin::new("zero", &[]);
        Self {
            f: zero.clone(),
            g: zero.clone(),
            h1: zero.clone(),
            h2: zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    pub snapshot_every: usize,
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".to_string(),
            snapshot_every: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolConfig {
    pub dimension: usize,
    pub beta: f64,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    /// Isotropic mobility: `B = bI`.
    pub b: f64,
    /// Sector half-angle in units of `π`.
    pub phi: f64,
    pub c_floor: f64,
    pub mikhlin: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendConfig {
    pub dimension: usize,
    pub radius: f64,
    pub field: Builtin,
    pub scalar: Builtin,
    pub r_out: f64,
    pub spacing: f64,
    pub refinements: usize,
    /// Radii for the deviation table.
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// `section.key` of a real-valued entry.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Option<GridConfig>,
    pub coefficients: CoefficientsConfig,
    pub initial: InitialConfig,
    pub potential: PotentialConfig,
    pub time: Option<TimeConfig>,
    pub data: DataConfig,
    pub output: OutputConfig,
    pub symbol: Option<SymbolConfig>,
    pub extend: Option<ExtendConfig>,
    pub sweep: Option<SweepConfig>,
}

pub const SECTIONS: [&str; 10] = [
    "grid",
    "coefficients",
    "initial",
    "potential",
    "time",
    "data",
    "output",
    "symbol",
    "extend",
    "sweep",
];

/// One `key = value` entry with its source line.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

type Sections = BTreeMap<String, (usize, BTreeMap<String, Entry>)>;

fn lex(text: &str, errors: &mut Vec<ConfigError>) -> Sections {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push(ConfigError {
                    line,
                    message: format!("malformed section header `{content}`"),
                });
                continue;
            };
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                errors.push(ConfigError {
                    line,
                    message: format!(
                        "unknown section [{name}]; expected one of {}",
                        SECTIONS.join(", ")
                    ),
                });
                current = None;
                continue;
            }
            if sections.contains_key(&name) {
                errors.push(ConfigError {
                    line,
                    message: format!("duplicate section [{name}]"),
                });
            }
            sections
                .entry(name.clone())
                .or_insert((line, BTreeMap::new()));
            current = Some(name);
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
            continue;
        };
        let key = key.trim().to_string();
        let Some(section) = &current else {
            errors.push(ConfigError {
                line,
                message: format!("key `{key}` outside of a known section"),
            });
            continue;
        };
        let table = &mut sections.get_mut(section).expect("section exists").1;
        if table.contains_key(&key) {
            errors.push(ConfigError {
                line,
                message: format!("duplicate key {section}.{key}"),
            });
            continue;
        }
        table.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line,
            },
        );
    }
    sections
}

/// Typed reads from one section, collecting errors.
struct Reader<'a> {
    section: &'a str,
    header_line: usize,
    entries: BTreeMap<String, Entry>,
    /// Keys present but malformed; not reported again as missing.
    malformed: Vec<String>,
    errors: &'a mut Vec<ConfigError>,
}

impl<'a> Reader<'a> {
    fn new(
        section: &'a str,
        sections: &mut Sections,
        errors: &'a mut Vec<ConfigError>,
    ) -> Option<Self> {
        let (header_line, entries) = sections.remove(section)?;
        Some(Self {
            section,
            header_line,
            entries,
            malformed: Vec::new(),
            errors,
        })
    }

    fn error(&mut self, line: usize, message: String) {
        self.errors.push(ConfigError { line, message });
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parsed<T>(
        &mut self,
        key: &str,
        kind: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Option<(T, usize)> {
        let entry = self.take(key)?;
        match parse(&entry.value) {
            Some(v) => Some((v, entry.line)),
            None => {
                let msg = format!(
                    "{}.{key} expects {kind}, found `{}`",
                    self.section, entry.value
                );
                self.error(entry.line, msg);
                self.malformed.push(key.to_string());
                None
            }
        }
    }

    fn real(&mut self, key: &str) -> Option<(f64, usize)> {
        self.parsed(key, "a real number", parse_real)
    }

    fn real_or(&mut self, key: &str, default: f64) -> f64 {
        self.real(key).map_or(default, |v| v.0)
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        match self.real(key) {
            Some((v, line)) if v <= 0.0 => {
                let msg = format!("{}.{key} must be positive", self.section);
                self.error(line, msg);
                default
            }
            Some((v, _)) => v,
            None => default,
        }
    }

    fn count(&mut self, key: &str) -> Option<(usize, usize)> {
        self.parsed(key, "a nonnegative integer", |s| s.parse::<usize>().ok())
    }

    fn count_or(&mut self, key: &str, default: usize) -> usize {
        self.count(key).map_or(default, |v| v.0)
    }

    fn boolean_or(&mut self, key: &str, default: bool) -> bool {
        self.parsed(key, "true or false", |s| match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        })
        .map_or(default, |v| v.0)
    }

    fn vector(&mut self, key: &str) -> Option<(Vec<f64>, usize)> {
        self.parsed(key, "a comma-separated list of reals", parse_vector)
    }

    fn counts(&mut self, key: &str) -> Option<(Vec<usize>, usize)> {
        self.parsed(key, "a comma-separated list of integers", |s| {
            s.split(',')
                .map(|p| p.trim().parse::<usize>().ok())
                .collect()
        })
    }

    fn builtin(&mut self, key: &str, registry: Registry, default: Builtin) -> Builtin {
        let Some((b, line)) = self.parsed(key, "a built-in `name(args)`", parse_builtin) else {
            return default;
        };
        match builtins::check(registry, &b) {
            Ok(()) => b,
            Err(msg) => {
                let msg = format!("{}.{key}: {msg}", self.section);
                self.error(line, msg);
                default
            }
        }
    }

    fn word(&mut self, key: &str) -> Option<(String, usize)> {
        self.parsed(key, "a word", |s| {
            (!s.is_empty() && !s.contains(char::is_whitespace)).then(|| s.to_string())
        })
    }

    fn require(&mut self, key: &str) {
        if self.malformed.iter().any(|k| k == key) {
            return;
        }
        let msg = format!("missing mandatory key {}.{key}", self.section);
        let line = self.header_line;
        self.error(line, msg);
    }

    fn finish(self) {
        for (key, entry) in self.entries {
            self.errors.push(ConfigError {
                line: entry.line,
                message: format!("unknown key {}.{key}", self.section),
            });
        }
    }
}

pub fn parse_real(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse_vector(s: &str) -> Option<Vec<f64>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(parse_real).collect()
}

fn parse_builtin(s: &str) -> Option<Builtin> {
    let s = s.trim();
    let (name, args) = match s.split_once('(') {
        Some((name, rest)) => {
            let inner = rest.strip_suffix(')')?;
            (name.trim(), parse_vector(inner)?)
        }
        None => (s, Vec::new()),
    };
    let valid = !name.is_empty()
        && name.chars().next().is_some_and(|c| c.is_ascii_lowercase())
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    valid.then(|| Builtin {
        name: name.to_string(),
        args,
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut sections = lex(text, &mut errors);

    let grid = Reader::new("grid", &mut sections, &mut errors).map(|mut r| {
        let dimension = match r.count("dimension") {
            Some((d, line)) if d != 1 && d != 2 => {
                r.error(line, format!("grid.dimension must be 1 or 2, got {d}"));
                1
            }
            Some((d, _)) => d,
            None => {
                r.require("dimension");
                1
            }
        };
        let mut extents = Vec::new();
        match r.vector("extents") {
            Some((v, line)) => {
                if v.len() != dimension {
                    r.error(line, format!("grid.extents needs {dimension} entries"));
                } else if v.iter().any(|&x| x <= 0.0) {
                    r.error(line, "grid.extents must be positive".to_string());
                }
                extents = v;
            }
            None => r.require("extents"),
        }
        let mut cells = Vec::new();
        match r.counts("cells") {
            Some((v, line)) => {
                if v.len() != dimension {
                    r.error(line, format!("grid.cells needs {dimension} entries"));
                } else if v.iter().any(|&n| n < chg_core::grid::MIN_CELLS) {
                    r.error(
                        line,
                        format!("grid.cells must be at least {}", chg_core::grid::MIN_CELLS),
                    );
                }
                cells = v;
            }
            None => r.require("cells"),
        }
        r.finish();
        GridConfig {
            dimension,
            extents,
            cells,
        }
    });

    let coefficients = match Reader::new("coefficients", &mut sections, &mut errors) {
        Some(mut r) => {
            let d = CoefficientsConfig::default();
            let beta = r.positive("beta", d.beta);
            let a = r.builtin("a", Registry::Vector, d.a);
            let c = r.builtin("c", Registry::Vector, d.c);
            let b = r.builtin("b", Registry::Scalar, d.b);
            let mode = match r.word("mode") {
                Some((w, _)) if w == "semilinear" => RunMode::Semilinear,
                Some((w, _)) if w == "quasilinear" => RunMode::Quasilinear,
                Some((w, line)) => {
                    r.error(
                        line,
                        format!("coefficients.mode must be semilinear or quasilinear, got `{w}`"),
                    );
                    d.mode
                }
                None => d.mode,
            };
            let scale = r.real_or("scale", d.scale);
            r.finish();
            CoefficientsConfig {
                beta,
                a,
                c,
                b,
                mode,
                scale,
            }
        }
        None => CoefficientsConfig::default(),
    };

    let initial = match Reader::new("initial", &mut sections, &mut errors) {
        Some(mut r) => {
            let d = InitialConfig::default();
            let kind = r.builtin("kind", Registry::Initial, d.kind);
            let mean_zero = r.boolean_or("mean_zero", d.mean_zero);
            r.finish();
            InitialConfig { kind, mean_zero }
        }
        None => InitialConfig::default(),
    };

    let potential = match Reader::new("potential", &mut sections, &mut errors) {
        Some(mut r) => {
            let d = PotentialConfig::default();
            let kind = r.builtin("kind", Registry::Potential, d.kind);
            let stabilization = match r.real("stabilization") {
                Some((v, line)) if v < 0.0 => {
                    r.error(
                        line,
                        "potential.stabilization must be nonnegative".to_string(),
                    );
                    None
                }
                other => other.map(|v| v.0),
            };
            let scan_range = match r.real("scan_range") {
                Some((v, line)) if v < 10.0 => {
                    r.error(line, "potential.scan_range must be at least 10".to_string());
                    d.scan_range
                }
                other => other.map_or(d.scan_range, |v| v.0),
            };
            let eta = match r.real("eta") {
                Some((v, line)) if v <= 0.0 => {
                    r.error(line, "potential.eta must be positive".to_string());
                    None
                }
                other => other.map(|v| v.0),
            };
            r.finish();
            PotentialConfig {
                kind,
                stabilization,
                scan_range,
                eta,
            }
        }
        None => PotentialConfig::default(),
    };

    let time = Reader::new("time", &mut sections, &mut errors).map(|mut r| {
        let tau = match r.real("tau") {
            Some((v, line)) if v <= 0.0 => {
                r.error(line, "time.tau must be positive".to_string());
                1.0
            }
            Some((v, _)) => v,
            None => {
                r.require("tau");
                1.0
            }
        };
        let steps = match r.count("steps") {
            Some((0, line)) => {
                r.error(line, "time.steps must be at least 1".to_string());
                1
            }
            Some((v, _)) => v,
            None => {
                r.require("steps");
                1
            }
        };
        let tol_rate = r.positive("tol_rate", 1e-8);
        let tol_station = r.positive("tol_station", 1e-6);
        let picard = r.count_or("picard", 0);
        let stop_on_steady = r.boolean_or("stop_on_steady", true);
        r.finish();
        TimeConfig {
            tau,
            steps,
            tol_rate,
            tol_station,
            picard,
            stop_on_steady,
        }
    });

    let data = match Reader::new("data", &mut sections, &mut errors) {
        Some(mut r) => {
            let d = DataConfig::default();
            let f = r.builtin("f", Registry::Source, d.f);
            let g = r.builtin("g", Registry::Source, d.g);
            let h1 = r.builtin("h1", Registry::Source, d.h1);
            let h2 = r.builtin("h2", Registry::Source, d.h2);
            r.finish();
            DataConfig { f, g, h1, h2 }
        }
        None => DataConfig::default(),
    };

    let output = match Reader::new("output", &mut sections, &mut errors) {
        Some(mut r) => {
            let d = OutputConfig::default();
            let dir = r.word("dir").map_or(d.dir, |v| v.0);
            let snapshot_every = r.count_or("snapshot_every", d.snapshot_every);
            let seed = r
                .parsed("seed", "a 64-bit unsigned integer", |s| {
                    s.parse::<u64>().ok()
                })
                .map_or(d.seed, |v| v.0);
            r.finish();
            OutputConfig {
                dir,
                snapshot_every,
                seed,
            }
        }
        None => OutputConfig::default(),
    };

    let symbol = Reader::new("symbol", &mut sections, &mut errors).map(|mut r| {
        let dimension = match r.count("dimension") {
            Some((d, line)) if !(1..=3).contains(&d) => {
                r.error(line, format!("symbol.dimension must be 1, 2 or 3, got {d}"));
                2
            }
            Some((d, _)) => d,
            None => 2,
        };
        let vec_or_zero = |r: &mut Reader<'_>, key: &str| match r.vector(key) {
            Some((v, line)) if v.len() != dimension => {
                r.error(line, format!("symbol.{key} needs {dimension} entries"));
                vec![0.0; dimension]
            }
            Some((v, _)) => v,
            None => vec![0.0; dimension],
        };
        let a = vec_or_zero(&mut r, "a");
        let c = vec_or_zero(&mut r, "c");
        let beta = r.positive("beta", 1.0);
        let b = r.positive("b", 1.0);
        let phi = match r.real("phi") {
            Some((v, line)) if !(v > 0.5 && v < 1.0) => {
                r.error(
                    line,
                    "symbol.phi (units of pi) must lie in (0.5, 1)".to_string(),
                );
                0.55
            }
            other => other.map_or(0.55, |v| v.0),
        };
        let c_floor = r.positive("c_floor", 1e-3);
        let mikhlin = r.boolean_or("mikhlin", true);
        r.finish();
        SymbolConfig {
            dimension,
            beta,
            a,
            c,
            b,
            phi,
            c_floor,
            mikhlin,
        }
    });

    let extend = Reader::new("extend", &mut sections, &mut errors).map(|mut r| {
        let dimension = match r.count("dimension") {
            Some((d, line)) if d != 2 && d != 3 => {
                r.error(line, format!("extend.dimension must be 2 or 3, got {d}"));
                2
            }
            Some((d, _)) => d,
            None => 2,
        };
        let radius = r.positive("radius", 1.0);
        let field = r.builtin("field", Registry::BallField, Builtin::new("rotation", &[]));
        let scalar = r.builtin(
            "scalar",
            Registry::BallScalar,
            Builtin::new("constant", &[1.0]),
        );
        let r_out = r.positive("r_out", 3.0 * radius);
        let spacing = r.positive("spacing", 0.1);
        let refinements = r.count_or("refinements", 3).max(1);
        let radii = match r.vector("radii") {
            Some((v, line)) if v.iter().any(|&x| x <= 0.0) => {
                r.error(line, "extend.radii must be positive".to_string());
                Vec::new()
            }
            other => other.map_or_else(Vec::new, |v| v.0),
        };
        r.finish();
        ExtendConfig {
            dimension,
            radius,
            field,
            scalar,
            r_out,
            spacing,
            refinements,
            radii,
        }
    });

    let sweep = Reader::new("sweep", &mut sections, &mut errors).map(|mut r| {
        let parameter = match r.word("parameter") {
            Some((p, line)) => {
                if !SWEEPABLE.contains(&p.as_str()) {
                    r.error(
                        line,
                        format!(
                            "sweep.parameter `{p}` is not sweepable; choose one of {}",
                            SWEEPABLE.join(", ")
                        ),
                    );
                }
                p
            }
            None => {
                r.require("parameter");
                String::new()
            }
        };
        let values = match r.vector("values") {
            Some((v, line)) if v.is_empty() => {
                r.error(line, "sweep.values must not be empty".to_string());
                v
            }
            Some((v, _)) => v,
            None => {
                r.require("values");
                Vec::new()
            }
        };
        r.finish();
        SweepConfig { parameter, values }
    });

    if grid.is_some() && time.is_none() {
        errors.push(ConfigError {
            line: 0,
            message: "missing mandatory section [time]".to_string(),
        });
    }
    if time.is_some() && grid.is_none() {
        errors.push(ConfigError {
            line: 0,
            message: "missing mandatory section [grid]".to_string(),
        });
    }
    if grid.is_none() && symbol.is_none() && extend.is_none() {
        errors.push(ConfigError {
            line: 0,
            message: "missing mandatory section: need [grid] (with [time]), [symbol] or [extend]"
                .to_string(),
        });
    }
    if let Some(g) = &grid {
        if g.dimension == 1 {
            for (name, b) in [("a", &coefficients.a), ("c", &coefficients.c)] {
                if b.name != "zero" && !(b.name == "constant" && b.args.iter().all(|&v| v == 0.0)) {
                    errors.push(ConfigError {
                        line: 0,
                        message: format!("coefficients.{name} must vanish in 1D: a nonzero field cannot be tangential at the endpoints"),
                    });
                }
            }
        }
    }

    errors.sort_by_key(|e| e.line);
    if errors.is_empty() {
        Ok(RunConfig {
            grid,
            coefficients,
            initial,
            potential,
            time,
            data,
            output,
            symbol,
            extend,
            sweep,
        })
    } else {
        Err(ConfigErrors(errors))
    }
}

/// Real-valued entries a sweep may vary.
pub const SWEEPABLE: [&str; 8] = [
    "coefficients.scale",
    "coefficients.beta",
    "time.tau",
    "time.steps",
    "potential.stabilization",
    "output.seed",
    "initial.amplitude",
    "grid.cells",
];

impl RunConfig {
    /// Copy with one sweepable parameter replaced.
    pub fn with_parameter(&self, parameter: &str, value: f64) -> Result<RunConfig, String> {
        let mut c = self.clone();
        let whole = |v: f64| -> Result<usize, String> {
            (v >= 0.0 && v.fract() == 0.0)
                .then_some(v as usize)
                .ok_or_else(|| format!("{parameter} needs a whole number, got {v}"))
        };
        match parameter {
            "coefficients.scale" => c.coefficients.scale = value,
            "coefficients.beta" if value > 0.0 => c.coefficients.beta = value,
            "time.tau" if value > 0.0 => c.time.as_mut().ok_or("no [time] section")?.tau = value,
            "time.steps" if value >= 1.0 => {
                c.time.as_mut().ok_or("no [time] section")?.steps = whole(value)?
            }
            "potential.stabilization" if value >= 0.0 => c.potential.stabilization = Some(value),
            "output.seed" => c.output.seed = whole(value)? as u64,
            "initial.amplitude" => {
                if c.initial.kind.args.is_empty() {
                    return Err("initial.kind has no amplitude argument".to_string());
                }
                c.initial.kind.args[0] = value;
            }
            "grid.cells" => {
                let n = whole(value)?;
                let g = c.grid.as_mut().ok_or("no [grid] section")?;
                g.cells.iter_mut().for_each(|x| *x = n);
            }
            _ => return Err(format!("cannot set {parameter} to {value}")),
        }
        Ok(c)
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(g) = &self.grid {
            writeln!(f, "[grid]")?;
            writeln!(f, "dimension = {}", g.dimension)?;
            write!(f, "extents = ")?;
            write_list(f, &g.extents)?;
            write!(f, "\ncells = ")?;
            write_list(f, &g.cells)?;
            writeln!(f, "\n")?;
        }
        let c = &self.coefficients;
        writeln!(f, "[coefficients]")?;
        writeln!(f, "beta = {}", c.beta)?;
        writeln!(f, "a = {}", c.a)?;
        writeln!(f, "c = {}", c.c)?;
        writeln!(f, "b = {}", c.b)?;
        let mode = match c.mode {
            RunMode::Semilinear => "semilinear",
            RunMode::Quasilinear => "quasilinear",
        };
        writeln!(f, "mode = {mode}")?;
        writeln!(f, "scale = {}\n", c.scale)?;

        writeln!(f, "[initial]")?;
        writeln!(f, "kind = {}", self.initial.kind)?;
        writeln!(f, "mean_zero = {}\n", self.initial.mean_zero)?;

        let p = &self.potential;
        writeln!(f, "[potential]")?;
        writeln!(f, "kind = {}", p.kind)?;
        if let Some(s) = p.stabilization {
            writeln!(f, "stabilization = {s}")?;
        }
        writeln!(f, "scan_range = {}", p.scan_range)?;
        if let Some(e) = p.eta {
            writeln!(f, "eta = {e}")?;
        }
        writeln!(f)?;

        if let Some(t) = &self.time {
            writeln!(f, "[time]")?;
            writeln!(f, "tau = {}", t.tau)?;
            writeln!(f, "steps = {}", t.steps)?;
            writeln!(f, "tol_rate = {}", t.tol_rate)?;
            writeln!(f, "tol_station = {}", t.tol_station)?;
            writeln!(f, "picard = {}", t.picard)?;
            writeln!(f, "stop_on_steady = {}\n", t.stop_on_steady)?;
        }

        let d = &self.data;
        writeln!(f, "[data]")?;
        writeln!(f, "f = {}", d.f)?;
        writeln!(f, "g = {}", d.g)?;
        writeln!(f, "h1 = {}", d.h1)?;
        writeln!(f, "h2 = {}\n", d.h2)?;

        let o = &self.output;
        writeln!(f, "[output]")?;
        writeln!(f, "dir = {}", o.dir)?;
        writeln!(f, "snapshot_every = {}", o.snapshot_every)?;
        writeln!(f, "seed = {}", o.seed)?;

        if let Some(s) = &self.symbol {
            writeln!(f, "\n[symbol]")?;
            writeln!(f, "dimension = {}", s.dimension)?;
            writeln!(f, "beta = {}", s.beta)?;
            write!(f, "a = ")?;
            write_list(f, &s.a)?;
            write!(f, "\nc = ")?;
            write_list(f, &s.c)?;
            writeln!(f, "\nb = {}", s.b)?;
            writeln!(f, "phi = {}", s.phi)?;
            writeln!(f, "c_floor = {}", s.c_floor)?;
            writeln!(f, "mikhlin = {}", s.mikhlin)?;
        }
        if let Some(e) = &self.extend {
            writeln!(f, "\n[extend]")?;
            writeln!(f, "dimension = {}", e.dimension)?;
            writeln!(f, "radius = {}", e.radius)?;
            writeln!(f, "field = {}", e.field)?;
            writeln!(f, "scalar = {}", e.scalar)?;
            writeln!(f, "r_out = {}", e.r_out)?;
            writeln!(f, "spacing = {}", e.spacing)?;
            writeln!(f, "refinements = {}", e.refinements)?;
            if !e.radii.is_empty() {
                write!(f, "radii = ")?;
                write_list(f, &e.radii)?;
                writeln!(f)?;
            }
        }
        if let Some(s) = &self.sweep {
            writeln!(f, "\n[sweep]")?;
            writeln!(f, "parameter = {}", s.parameter)?;
            write!(f, "values = ")?;
            write_list(f, &s.values)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        "[grid]\ndimension = 1\nextents = 1\ncells = 32\n[time]\ntau = 1e-3\nsteps = 10\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.coefficients, CoefficientsConfig::default());
        assert_eq!(c.potential.kind.name, "double_well");
        assert_eq!(c.time.as_ref().unwrap().tol_rate, 1e-8);
        assert_eq!(c.output.seed, 0);
    }

    #[test]
    fn negative_tau_is_reported_with_line() {
        let text = MINIMAL.replace("tau = 1e-3", "tau = -0.1");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].line, 6);
        assert!(err.0[0].message.contains("time.tau must be positive"));
    }

    #[test]
    fn unknown_builtin_names_the_registry() {
        let text = "[grid]\ndimension = 2\nextents = 1, 1\ncells = 8, 8\n[time]\ntau = 1\nsteps = 1\n[coefficients]\na = vortex99(1)\n";
        let err = parse_config(text).unwrap_err();
        let msg = &err.0[0].message;
        assert_eq!(err.0[0].line, 9);
        assert!(
            msg.contains("vortex99") && msg.contains("rotational"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_keys_and_sections() {
        let text = format!("{MINIMAL}[time2]\nx = 1\n[output]\nsed = 3\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err
            .0
            .iter()
            .any(|e| e.line == 8 && e.message.contains("unknown section")));
        assert!(err
            .0
            .iter()
            .any(|e| e.line == 9 && e.message.contains("outside")));
        assert!(err
            .0
            .iter()
            .any(|e| e.line == 11 && e.message.contains("unknown key output.sed")));
    }

    #[test]
    fn missing_sections() {
        let err = parse_config("[grid]\ndimension = 1\nextents = 1\ncells = 8\n").unwrap_err();
        assert!(err.0[0].message.contains("[time]"));
        let err = parse_config("# nothing\n").unwrap_err();
        assert!(err.0[0].message.contains("missing mandatory section"));
        assert!(parse_config("[symbol]\na = 0.1, 0\n").is_ok());
    }

    #[test]
    fn type_mismatch() {
        let text = MINIMAL.replace("steps = 10", "steps = ten");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0[0].message.contains("nonnegative integer"));
    }

    #[test]
    fn one_dimensional_drift_is_rejected() {
        let text = format!("{MINIMAL}[coefficients]\na = constant(0.5)\n");
        assert!(parse_config(&text).unwrap_err().0[0]
            .message
            .contains("must vanish in 1D"));
    }

    #[test]
    fn print_parses_back() {
        let text = format!(
            "{MINIMAL}[potential]\nkind = polynomial(0, 0, -1)\neta = 2\n[symbol]\na = 0.3, 0\nc = 0, 0.2\n[sweep]\nparameter = time.tau\nvalues = 1e-3, 5e-4\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(parse_config(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn sweep_parameter_override() {
        let c = parse_config(MINIMAL).unwrap();
        let d = c.with_parameter("time.tau", 0.5).unwrap();
        assert_eq!(d.time.unwrap().tau, 0.5);
        assert!(c.with_parameter("time.steps", 1.5).is_err());
        assert!(c.with_parameter("grid.dimension", 2.0).is_err());
    }
}
