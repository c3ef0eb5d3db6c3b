//! Experiment configuration: a flat `key = value` format with `[section]`
//! headers and `#` comments.
//!
//! ```text
//! preset = heat-asymptotics
//!
//! [grid]
//! half_width = 40
//! n_cells = 4096
//!
//! [kernel]
//! type = zero
//!
//! [datum]
//! type = gaussian
//! mass = 1
//! sigma = 1
//! ```
//!
//! Sections and keys (defaults in parentheses):
//!
//! * top level: `preset` (custom), `seed` (0, reserved)
//! * `[grid]`: `half_width` (40), `n_cells` (4096)
//! * `[kernel]`: `type` (required): `zero`, `chemotaxis`,
//!   `gaussian-mollifier`, `odd-gaussian`, `tabulated`, `local-burgers`;
//!   `amplitude` and `width` for the two Gaussian kernels, `file` for
//!   `tabulated`, `a` for `local-burgers`
//! * `[datum]`: `type` (required): `gaussian` (`mass`, `sigma`, `center`),
//!   `scaled-bump` (`scale`, `base` = gaussian | cosine, `base_mass`,
//!   `base_width`), `file` (`file`), `burgers-wave` (`mass`, `a`, `time`)
//! * `[time]`: `t_end` (100), `dt_max` (0.05), `dt_min` (1e-12), `cfl` (0.5)
//! * `[output]`: `count` (40), `spacing` (log), `t_first` (t_end / 1000 for
//!   log spacing, t_end / count for linear), `norms` (extra indices beyond
//!   1, 2, inf), `directory` (out), `snapshots` (t_end)
//! * `[analysis]`: `fit_window` (1, 100), `tolerance` (0.01, the error bound
//!   of the burgers-oracle preset)
//! * `[audit]`: `delta` (1), `gamma` (e^-1 / 2)

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Parse failure pinned to a line (0 when the problem is a missing entry).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: `{key}`: {message}")]
pub struct ParseError {
    pub line: usize,
    pub key: String,
    pub message: String,
}

fn perr<T>(line: usize, key: &str, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        key: key.to_string(),
        message: message.into(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    HeatAsymptotics,
    WaveAsymptotics,
    Concentration,
    ChemoEquivalence,
    BurgersOracle,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::HeatAsymptotics,
        Preset::WaveAsymptotics,
        Preset::Concentration,
        Preset::ChemoEquivalence,
        Preset::BurgersOracle,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::HeatAsymptotics => "heat-asymptotics",
            Preset::WaveAsymptotics => "wave-asymptotics",
            Preset::Concentration => "concentration",
            Preset::ChemoEquivalence => "chemo-equivalence",
            Preset::BurgersOracle => "burgers-oracle",
            Preset::Custom => "custom",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub half_width: f64,
    pub n_cells: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelConfig {
    Zero,
    Chemotaxis,
    GaussianMollifier {
        amplitude: f64,
        width: f64,
    },
    OddGaussian {
        amplitude: f64,
        width: f64,
    },
    Tabulated {
        file: PathBuf,
    },
    /// Local velocity `A u` (viscous Burgers).
    LocalBurgers {
        a: f64,
    },
}

impl KernelConfig {
    fn type_name(&self) -> &'static str {
        match self {
            KernelConfig::Zero => "zero",
            KernelConfig::Chemotaxis => "chemotaxis",
            KernelConfig::GaussianMollifier { .. } => "gaussian-mollifier",
            KernelConfig::OddGaussian { .. } => "odd-gaussian",
            KernelConfig::Tabulated { .. } => "tabulated",
            KernelConfig::LocalBurgers { .. } => "local-burgers",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseShape {
    Gaussian,
    Cosine,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DatumConfig {
    Gaussian {
        mass: f64,
        sigma: f64,
        center: f64,
    },
    /// `P^3 u_0(P x)` for an even base bump `u_0`.
    ScaledBump {
        scale: f64,
        base: BaseShape,
        base_mass: f64,
        base_width: f64,
    },
    /// Two columns `x u`, linearly interpolated onto the cell centres.
    File {
        file: PathBuf,
    },
    /// The diffusion wave `U_{M,A}(., time)`.
    BurgersWave {
        mass: f64,
        a: f64,
        time: f64,
    },
}

impl DatumConfig {
    fn type_name(&self) -> &'static str {
        match self {
            DatumConfig::Gaussian { .. } => "gaussian",
            DatumConfig::ScaledBump { .. } => "scaled-bump",
            DatumConfig::File { .. } => "file",
            DatumConfig::BurgersWave { .. } => "burgers-wave",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub cfl: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub count: usize,
    pub spacing: Spacing,
    pub t_first: Option<f64>,
    /// Norm indices recorded in addition to 1, 2 and inf.
    pub norms: Vec<f64>,
    pub directory: PathBuf,
    /// Times at which profile snapshots are written; added to the schedule.
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub fit_window: (f64, f64),
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditConfig {
    pub delta: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub seed: u64,
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub datum: DatumConfig,
    pub time: TimeConfig,
    pub output: OutputConfig,
    pub analysis: AnalysisConfig,
    pub audit: AuditConfig,
}

const SECTIONS: [&str; 8] = [
    "", "grid", "kernel", "datum", "time", "output", "analysis", "audit",
];

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
}

/// Config text split into sections, before interpretation.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut raw = RawConfig::default();
        raw.sections.insert(String::new(), (0, BTreeMap::new()));
        let mut current = String::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return perr(lineno, line, "unterminated section header");
                };
                let name = name.trim();
                if !SECTIONS.contains(&name) || name.is_empty() {
                    return perr(lineno, name, "unknown section");
                }
                if raw.sections.contains_key(name) {
                    return perr(lineno, name, "section appears twice");
                }
                raw.sections
                    .insert(name.to_string(), (lineno, BTreeMap::new()));
                current = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return perr(lineno, line, "expected `key = value`");
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return perr(lineno, key, "empty key");
            }
            let entries = &mut raw.sections.get_mut(&current).expect("inserted above").1;
            if entries.contains_key(key) {
                return perr(lineno, key, "key appears twice");
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line: lineno,
                },
            );
        }
        Ok(raw)
    }

    /// Sets `section.key` (or a top-level `key`) to `value`, as if written
    /// in the file. Used by parameter sweeps.
    pub fn set(&mut self, path: &str, value: &str) -> Result<(), ParseError> {
        let (section, key) = path.split_once('.').unwrap_or(("", path));
        if !SECTIONS.contains(&section) {
            return perr(0, path, "unknown section");
        }
        let entries = &mut self
            .sections
            .entry(section.to_string())
            .or_insert((0, BTreeMap::new()))
            .1;
        entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: 0,
            },
        );
        Ok(())
    }

    pub fn build(&self, base_dir: Option<&Path>) -> Result<ExperimentConfig, ParseError> {
        Builder::new(self, base_dir).build()
    }
}

/// Parses and validates config text. Relative file paths stay as written.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ParseError> {
    RawConfig::parse(text)?.build(None)
}

/// As [`parse_config`], resolving relative file paths against `base_dir`.
pub fn parse_config_in(text: &str, base_dir: &Path) -> Result<ExperimentConfig, ParseError> {
    RawConfig::parse(text)?.build(Some(base_dir))
}

/// Section view that tracks which keys were consumed.
struct Section<'a> {
    name: &'a str,
    header_line: usize,
    entries: Option<&'a BTreeMap<String, Entry>>,
    used: Vec<&'a str>,
}

impl<'a> Section<'a> {
    fn qualified(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn exists(&self) -> bool {
        self.entries.is_some()
    }

    fn raw(&mut self, key: &'a str) -> Option<(&'a str, usize)> {
        let e = self.entries?.get(key)?;
        self.used.push(key);
        Some((e.value.as_str(), e.line))
    }

    fn required(&mut self, key: &'a str) -> Result<(&'a str, usize), ParseError> {
        match self.raw(key) {
            Some(v) => Ok(v),
            None => perr(
                self.header_line,
                &self.qualified(key),
                "missing required key",
            ),
        }
    }

    fn parse<T: std::str::FromStr>(
        &self,
        key: &str,
        v: (&str, usize),
        what: &str,
    ) -> Result<T, ParseError> {
        v.0.parse().or_else(|_| {
            perr(
                v.1,
                &self.qualified(key),
                format!("expected {what}, got `{}`", v.0),
            )
        })
    }

    fn real(&mut self, key: &'a str, default: f64) -> Result<f64, ParseError> {
        match self.raw(key) {
            Some(v) => self.real_value(key, v),
            None => Ok(default),
        }
    }

    fn real_value(&self, key: &str, v: (&str, usize)) -> Result<f64, ParseError> {
        let x: f64 = self.parse(key, v, "a number")?;
        if !x.is_finite() {
            return perr(v.1, &self.qualified(key), "value must be finite");
        }
        Ok(x)
    }

    fn required_real(&mut self, key: &'a str) -> Result<f64, ParseError> {
        let v = self.required(key)?;
        self.real_value(key, v)
    }

    fn positive(&mut self, key: &'a str, default: f64) -> Result<f64, ParseError> {
        let line = self
            .entries
            .and_then(|e| e.get(key))
            .map_or(self.header_line, |e| e.line);
        let x = self.real(key, default)?;
        if x <= 0.0 {
            return perr(
                line,
                &self.qualified(key),
                format!("must be positive, got {x}"),
            );
        }
        Ok(x)
    }

    fn real_list(&mut self, key: &'a str) -> Result<Option<Vec<f64>>, ParseError> {
        let Some((text, line)) = self.raw(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let x = match item {
                "inf" | "infinity" => f64::INFINITY,
                _ => self.real_value(key, (item, line))?,
            };
            out.push(x);
        }
        Ok(Some(out))
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries
            .and_then(|e| e.get(key))
            .map_or(self.header_line, |e| e.line)
    }

    /// Fails on the first key that was never consumed.
    fn finish(self) -> Result<(), ParseError> {
        if let Some(entries) = self.entries {
            for (k, e) in entries {
                if !self.used.contains(&k.as_str()) {
                    return perr(e.line, &self.qualified(k), "unknown key");
                }
            }
        }
        Ok(())
    }
}

struct Builder<'a> {
    raw: &'a RawConfig,
    base_dir: Option<&'a Path>,
}

impl<'a> Builder<'a> {
    fn new(raw: &'a RawConfig, base_dir: Option<&'a Path>) -> Self {
        Self { raw, base_dir }
    }

    fn section(&self, name: &'a str) -> Section<'a> {
        let found = self.raw.sections.get(name);
        Section {
            name,
            header_line: found.map_or(0, |s| s.0),
            entries: found.map(|s| &s.1),
            used: Vec::new(),
        }
    }

    fn path(&self, text: &str) -> PathBuf {
        let p = PathBuf::from(text);
        match self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        }
    }

    fn build(&self) -> Result<ExperimentConfig, ParseError> {
        let mut top = self.section("");
        let (preset, preset_line) = match top.raw("preset") {
            Some((name, line)) => match Preset::from_name(name) {
                Some(p) => (p, line),
                None => return perr(line, "preset", format!("unknown preset `{name}`")),
            },
            None => (Preset::Custom, 0),
        };
        let seed = match top.raw("seed") {
            Some(v) => top.parse("seed", v, "a nonnegative integer")?,
            None => 0,
        };
        top.finish()?;

        let mut s = self.section("grid");
        let half_width = s.positive("half_width", 40.0)?;
        let n_cells = match s.raw("n_cells") {
            Some(v) => s.parse::<usize>("n_cells", v, "a positive integer")?,
            None => 4096,
        };
        if n_cells < 4 || n_cells % 2 != 0 {
            return perr(
                s.line_of("n_cells"),
                "grid.n_cells",
                format!("must be even and >= 4, got {n_cells}"),
            );
        }
        s.finish()?;
        let grid = GridConfig {
            half_width,
            n_cells,
        };

        let kernel = self.kernel()?;
        let datum = self.datum()?;

        let mut s = self.section("time");
        let t_end = s.real("t_end", 100.0)?;
        if t_end < 0.0 {
            return perr(s.line_of("t_end"), "time.t_end", "must be >= 0");
        }
        let dt_max = s.positive("dt_max", 0.05)?;
        let dt_min = s.positive("dt_min", 1e-12)?;
        if dt_min >= dt_max {
            return perr(
                s.line_of("dt_min"),
                "time.dt_min",
                format!("must be below dt_max = {dt_max}"),
            );
        }
        let cfl = s.positive("cfl", 0.5)?;
        if cfl > 1.0 {
            return perr(
                s.line_of("cfl"),
                "time.cfl",
                format!("must lie in (0, 1], got {cfl}"),
            );
        }
        s.finish()?;
        let time = TimeConfig {
            t_end,
            dt_max,
            dt_min,
            cfl,
        };

        let output = self.output(t_end)?;

        let mut s = self.section("analysis");
        let fit_window = match s.real_list("fit_window")? {
            None => (1.0, 100.0),
            Some(v) if v.len() == 2 && v[0] > 0.0 && v[1] > v[0] => (v[0], v[1]),
            Some(_) => {
                return perr(
                    s.line_of("fit_window"),
                    "analysis.fit_window",
                    "expected `t_lo, t_hi` with 0 < t_lo < t_hi",
                )
            }
        };
        let tolerance = s.positive("tolerance", 1e-2)?;
        s.finish()?;
        let analysis = AnalysisConfig {
            fit_window,
            tolerance,
        };

        let mut s = self.section("audit");
        let delta = s.positive("delta", 1.0)?;
        let gamma = s.positive("gamma", 0.5 * (-1.0f64).exp())?;
        s.finish()?;
        let audit = AuditConfig { delta, gamma };

        let cfg = ExperimentConfig {
            preset,
            seed,
            grid,
            kernel,
            datum,
            time,
            output,
            analysis,
            audit,
        };
        check_preset(&cfg, preset_line)?;
        Ok(cfg)
    }

    fn kernel(&self) -> Result<KernelConfig, ParseError> {
        let mut s = self.section("kernel");
        if !s.exists() {
            return perr(0, "kernel", "missing required section [kernel]");
        }
        let (ty, line) = s.required("type")?;
        let kernel = match ty {
            "zero" => KernelConfig::Zero,
            "chemotaxis" => KernelConfig::Chemotaxis,
            "gaussian-mollifier" | "odd-gaussian" => {
                let amplitude = s.required_real("amplitude")?;
                let width = s.positive("width", 1.0)?;
                if ty == "odd-gaussian" {
                    KernelConfig::OddGaussian { amplitude, width }
                } else {
                    KernelConfig::GaussianMollifier { amplitude, width }
                }
            }
            "tabulated" => KernelConfig::Tabulated {
                file: self.path(s.required("file")?.0),
            },
            "local-burgers" => KernelConfig::LocalBurgers {
                a: s.required_real("a")?,
            },
            other => {
                return perr(
                    line,
                    "kernel.type",
                    format!("unknown kernel type `{other}`"),
                )
            }
        };
        s.finish()?;
        Ok(kernel)
    }

    fn datum(&self) -> Result<DatumConfig, ParseError> {
        let mut s = self.section("datum");
        if !s.exists() {
            return perr(0, "datum", "missing required section [datum]");
        }
        let (ty, line) = s.required("type")?;
        let datum = match ty {
            "gaussian" => {
                let mass = s.real("mass", 1.0)?;
                if mass < 0.0 {
                    return perr(s.line_of("mass"), "datum.mass", "must be >= 0");
                }
                DatumConfig::Gaussian {
                    mass,
                    sigma: s.positive("sigma", 1.0)?,
                    center: s.real("center", 0.0)?,
                }
            }
            "scaled-bump" => {
                let scale = s.positive("scale", 1.0)?;
                let base = match s.raw("base") {
                    None | Some(("gaussian", _)) => BaseShape::Gaussian,
                    Some(("cosine", _)) => BaseShape::Cosine,
                    Some((other, l)) => {
                        return perr(
                            l,
                            "datum.base",
                            format!("expected gaussian or cosine, got `{other}`"),
                        )
                    }
                };
                let base_mass = s.real("base_mass", 1.0)?;
                if base_mass < 0.0 {
                    return perr(s.line_of("base_mass"), "datum.base_mass", "must be >= 0");
                }
                DatumConfig::ScaledBump {
                    scale,
                    base,
                    base_mass,
                    base_width: s.positive("base_width", 1.0)?,
                }
            }
            "file" => DatumConfig::File {
                file: self.path(s.required("file")?.0),
            },
            "burgers-wave" => {
                let mass = s.required_real("mass")?;
                let a = s.required_real("a")?;
                if mass == 0.0 || a == 0.0 {
                    return perr(line, "datum.type", "burgers-wave needs nonzero mass and a");
                }
                DatumConfig::BurgersWave {
                    mass,
                    a,
                    time: s.positive("time", 1.0)?,
                }
            }
            other => return perr(line, "datum.type", format!("unknown datum type `{other}`")),
        };
        s.finish()?;
        Ok(datum)
    }

    fn output(&self, t_end: f64) -> Result<OutputConfig, ParseError> {
        let mut s = self.section("output");
        let count = match s.raw("count") {
            Some(v) => s.parse::<usize>("count", v, "a positive integer")?,
            None => 40,
        };
        if count < 1 {
            return perr(s.line_of("count"), "output.count", "must be at least 1");
        }
        let spacing = match s.raw("spacing") {
            None | Some(("log", _)) | Some(("logarithmic", _)) => Spacing::Log,
            Some(("linear", _)) => Spacing::Linear,
            Some((other, l)) => {
                return perr(
                    l,
                    "output.spacing",
                    format!("expected linear or log, got `{other}`"),
                )
            }
        };
        let t_first = match s.raw("t_first") {
            Some(v) => {
                let t = s.real_value("t_first", v)?;
                if !(t > 0.0 && t <= t_end) {
                    return perr(
                        v.1,
                        "output.t_first",
                        format!("must lie in (0, t_end = {t_end}]"),
                    );
                }
                Some(t)
            }
            None => None,
        };
        let norms = s.real_list("norms")?.unwrap_or_default();
        if let Some(p) = norms.iter().find(|p| !(**p >= 1.0)) {
            return perr(
                s.line_of("norms"),
                "output.norms",
                format!("norm index must be >= 1, got {p}"),
            );
        }
        let directory = s
            .raw("directory")
            .map_or_else(|| PathBuf::from("out"), |v| self.path(v.0));
        let snapshots = s.real_list("snapshots")?;
        if let Some(snaps) = &snapshots {
            if let Some(t) = snaps.iter().find(|t| !(**t >= 0.0 && **t <= t_end)) {
                return perr(
                    s.line_of("snapshots"),
                    "output.snapshots",
                    format!("snapshot time {t} outside [0, {t_end}]"),
                );
            }
        }
        s.finish()?;
        Ok(OutputConfig {
            count,
            spacing,
            t_first,
            norms,
            directory,
            snapshots,
        })
    }
}

fn check_preset(cfg: &ExperimentConfig, line: usize) -> Result<(), ParseError> {
    use KernelConfig as K;
    let fail = |msg: String| perr(line, "preset", msg);
    let k = &cfg.kernel;
    match cfg.preset {
        Preset::HeatAsymptotics => {
            if !matches!(
                k,
                K::Zero | K::Chemotaxis | K::OddGaussian { .. } | K::Tabulated { .. }
            ) {
                return fail(format!(
                    "heat-asymptotics requires a kernel with zero integral (zero, chemotaxis, odd-gaussian or tabulated), got {}",
                    k.type_name()
                ));
            }
        }
        Preset::WaveAsymptotics => {
            if !matches!(
                k,
                K::GaussianMollifier { .. } | K::LocalBurgers { .. } | K::Tabulated { .. }
            ) {
                return fail(format!(
                    "wave-asymptotics requires a kernel with nonzero integral (gaussian-mollifier, local-burgers or tabulated), got {}",
                    k.type_name()
                ));
            }
        }
        Preset::Concentration => {
            if !matches!(cfg.datum, DatumConfig::ScaledBump { .. }) {
                return fail(format!(
                    "concentration requires a scaled-bump datum, got {}",
                    cfg.datum.type_name()
                ));
            }
            if !matches!(
                k,
                K::Chemotaxis | K::OddGaussian { .. } | K::Tabulated { .. }
            ) {
                return fail(format!(
                    "concentration requires an odd kernel (chemotaxis, odd-gaussian or tabulated), got {}",
                    k.type_name()
                ));
            }
        }
        Preset::ChemoEquivalence => {
            if *k != K::Chemotaxis {
                return fail(format!(
                    "chemo-equivalence requires the chemotaxis kernel, got {}",
                    k.type_name()
                ));
            }
        }
        Preset::BurgersOracle => {
            if !matches!(k, K::LocalBurgers { .. })
                || !matches!(cfg.datum, DatumConfig::BurgersWave { .. })
            {
                return fail(format!(
                    "burgers-oracle requires a local-burgers kernel and a burgers-wave datum, got {} and {}",
                    k.type_name(),
                    cfg.datum.type_name()
                ));
            }
            if let (K::LocalBurgers { a }, DatumConfig::BurgersWave { a: wave_a, .. }) =
                (k, &cfg.datum)
            {
                if a != wave_a {
                    return fail(format!(
                        "burgers-oracle needs kernel.a = datum.a, got {a} and {wave_a}"
                    ));
                }
            }
        }
        Preset::Custom => {}
    }
    Ok(())
}

fn fmt_real(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| fmt_real(*x))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text of a config: every key present, fixed order. Parsing the
/// result gives back an equal config.
pub fn serialize(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "preset = {}", cfg.preset);
    let _ = writeln!(w, "seed = {}", cfg.seed);
    let _ = writeln!(
        w,
        "\n[grid]\nhalf_width = {}\nn_cells = {}",
        fmt_real(cfg.grid.half_width),
        cfg.grid.n_cells
    );
    let _ = writeln!(w, "\n[kernel]\ntype = {}", cfg.kernel.type_name());
    match &cfg.kernel {
        KernelConfig::Zero | KernelConfig::Chemotaxis => {}
        KernelConfig::GaussianMollifier { amplitude, width }
        | KernelConfig::OddGaussian { amplitude, width } => {
            let _ = writeln!(
                w,
                "amplitude = {}\nwidth = {}",
                fmt_real(*amplitude),
                fmt_real(*width)
            );
        }
        KernelConfig::Tabulated { file } => {
            let _ = writeln!(w, "file = {}", file.display());
        }
        KernelConfig::LocalBurgers { a } => {
            let _ = writeln!(w, "a = {}", fmt_real(*a));
        }
    }
    let _ = writeln!(w, "\n[datum]\ntype = {}", cfg.datum.type_name());
    match &cfg.datum {
        DatumConfig::Gaussian {
            mass,
            sigma,
            center,
        } => {
            let _ = writeln!(
                w,
                "mass = {}\nsigma = {}\ncenter = {}",
                fmt_real(*mass),
                fmt_real(*sigma),
                fmt_real(*center)
            );
        }
        DatumConfig::ScaledBump {
            scale,
            base,
            base_mass,
            base_width,
        } => {
            let base = match base {
                BaseShape::Gaussian => "gaussian",
                BaseShape::Cosine => "cosine",
            };
            let _ = writeln!(
                w,
                "scale = {}\nbase = {base}\nbase_mass = {}\nbase_width = {}",
                fmt_real(*scale),
                fmt_real(*base_mass),
                fmt_real(*base_width)
            );
        }
        DatumConfig::File { file } => {
            let _ = writeln!(w, "file = {}", file.display());
        }
        DatumConfig::BurgersWave { mass, a, time } => {
            let _ = writeln!(
                w,
                "mass = {}\na = {}\ntime = {}",
                fmt_real(*mass),
                fmt_real(*a),
                fmt_real(*time)
            );
        }
    }
    let t = &cfg.time;
    let _ = writeln!(
        w,
        "\n[time]\nt_end = {}\ndt_max = {}\ndt_min = {}\ncfl = {}",
        fmt_real(t.t_end),
        fmt_real(t.dt_max),
        fmt_real(t.dt_min),
        fmt_real(t.cfl)
    );
    let o = &cfg.output;
    let _ = writeln!(
        w,
        "\n[output]\ncount = {}\nspacing = {}",
        o.count,
        match o.spacing {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    );
    if let Some(t) = o.t_first {
        let _ = writeln!(w, "t_first = {}", fmt_real(t));
    }
    let _ = writeln!(
        w,
        "norms = {}\ndirectory = {}",
        fmt_list(&o.norms),
        o.directory.display()
    );
    if let Some(snaps) = &o.snapshots {
        let _ = writeln!(w, "snapshots = {}", fmt_list(snaps));
    }
    let a = &cfg.analysis;
    let _ = writeln!(
        w,
        "\n[analysis]\nfit_window = {}, {}\ntolerance = {}",
        fmt_real(a.fit_window.0),
        fmt_real(a.fit_window.1),
        fmt_real(a.tolerance)
    );
    let _ = writeln!(
        w,
        "\n[audit]\ndelta = {}\ngamma = {}",
        fmt_real(cfg.audit.delta),
        fmt_real(cfg.audit.gamma)
    );
    s
}

/// `serialize(parse_config(text))`.
pub fn normalize(text: &str) -> Result<String, ParseError> {
    Ok(serialize(&parse_config(text)?))
}

impl ExperimentConfig {
    /// Output times: `t = 0`, then `count` times up to `t_end`, plus snapshots.
    pub fn output_times(&self) -> Vec<f64> {
        let t_end = self.time.t_end;
        let mut times = vec![0.0];
        if t_end > 0.0 {
            let n = self.output.count;
            match self.output.spacing {
                Spacing::Linear => {
                    let first = self.output.t_first.unwrap_or(t_end / n as f64);
                    if n == 1 {
                        times.push(t_end);
                    } else {
                        let h = (t_end - first) / (n - 1) as f64;
                        times.extend((0..n).map(|k| first + h * k as f64));
                    }
                }
                Spacing::Log => {
                    let first = self.output.t_first.unwrap_or(t_end * 1e-3);
                    if n == 1 {
                        times.push(t_end);
                    } else {
                        let r = (t_end / first).ln() / (n - 1) as f64;
                        times.extend((0..n).map(|k| first * (r * k as f64).exp()));
                    }
                }
            }
            let last = times.len() - 1;
            times[last] = t_end;
        }
        times.extend(self.snapshot_times());
        times.retain(|t| *t <= t_end);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.output
            .snapshots
            .clone()
            .unwrap_or_else(|| vec![self.time.t_end])
    }
}
