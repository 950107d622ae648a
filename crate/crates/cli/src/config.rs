//! Sectioned `key = value` experiment configuration.
//!
//! ```text
//! [grid]
//! N = 32
//! L = 6.283185307179586
//! ```
//!
//! Every key has a default, so an empty file is a valid config. Unknown
//! sections or keys are rejected.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted field name, e.g. `grid.N`; empty for syntax errors.
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config field `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriumKind {
    Maxwellian,
    TwoBump,
    Tabulated,
}

impl EquilibriumKind {
    fn name(&self) -> &'static str {
        match self {
            EquilibriumKind::Maxwellian => "maxwellian",
            EquilibriumKind::TwoBump => "two_bump",
            EquilibriumKind::Tabulated => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSection {
    pub kind: EquilibriumKind,
    pub width: f64,
    pub u0: [f64; 2],
    pub table: Option<PathBuf>,
    pub v_max: f64,
    pub decay_order: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    /// Spatial points per axis.
    pub n: usize,
    /// Half-width of the periodic box.
    pub l: f64,
    /// Velocity points per axis.
    pub nv: usize,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSection {
    pub horizon: f64,
    pub dt: f64,
    pub slab: f64,
    /// Keep every `output_stride`-th node in linear-run output.
    pub output_stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySection {
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataSection {
    pub epsilon: f64,
    pub sigma_x: f64,
    pub sigma_v: f64,
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    /// Relative Picard tolerance of the density fixed point.
    pub tol: f64,
    pub max_picard: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub field_tol: f64,
    pub field_gate: f64,
    pub flow_points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormsSection {
    pub a: f64,
    /// Shift set is `h0 = shift_scale/4` with `shift_levels` octaves.
    pub shift_scale: f64,
    pub shift_levels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub snapshots: bool,
    pub per_mode_csv: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub equilibrium: EquilibriumSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub nonlinearity: NonlinearitySection,
    pub initial_data: InitialDataSection,
    pub solver: SolverSection,
    pub norms: NormsSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            equilibrium: EquilibriumSection {
                kind: EquilibriumKind::Maxwellian,
                width: 1.0,
                u0: [0.0, 0.0],
                table: None,
                v_max: 8.0,
                decay_order: 64,
            },
            grid: GridSection { n: 32, l: std::f64::consts::TAU, nv: 32, v_max: 8.0 },
            time: TimeSection { horizon: 20.0, dt: 0.5, slab: 1.0, output_stride: 1 },
            nonlinearity: NonlinearitySection { kind: "massless-electron".into() },
            initial_data: InitialDataSection { epsilon: 1e-3, sigma_x: 1.0, sigma_v: 1.0, center: [0.0, 0.0] },
            solver: SolverSection {
                tol: 1e-8,
                max_picard: 20,
                eps1: 0.5,
                eps2: 0.1,
                field_tol: 1e-10,
                field_gate: 0.1,
                flow_points: 16,
                seed: 0,
            },
            norms: NormsSection { a: 0.5, shift_scale: 2.0, shift_levels: 10 },
            output: OutputSection { snapshots: true, per_mode_csv: 4 },
        }
    }
}

const SECTIONS: [&str; 8] = ["equilibrium", "grid", "time", "nonlinearity", "initial_data", "solver", "norms", "output"];

type Raw = BTreeMap<String, (String, usize)>;

fn parse_raw(text: &str) -> Result<Raw, ConfigError> {
    let mut out = Raw::new();
    let mut section: Option<String> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(err(name, format!("unknown section on line {}", lineno + 1)));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| err("", format!("line {}: expected `key = value`", lineno + 1)))?;
        let sec = section.as_ref().ok_or_else(|| err("", format!("line {}: key outside a section", lineno + 1)))?;
        let key = format!("{sec}.{}", k.trim());
        if out.insert(key.clone(), (v.trim().to_string(), lineno + 1)).is_some() {
            return Err(err(&key, "given twice"));
        }
    }
    Ok(out)
}

struct Reader {
    raw: Raw,
}

impl Reader {
    fn take<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>) -> Result<T, ConfigError> {
        match self.raw.remove(key) {
            None => Ok(default),
            Some((v, line)) => parse(&v).ok_or_else(|| err(key, format!("cannot parse `{v}` (line {line})"))),
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.take(key, default, |s| s.parse().ok())
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        // signed parse first so that `-4` gets a range message, not a syntax one
        match self.raw.get(key).and_then(|(v, _)| v.parse::<i64>().ok()) {
            Some(n) if n < 0 => Err(err(key, format!("must be non-negative, got {n}"))),
            _ => self.take(key, default, |s| s.parse().ok()),
        }
    }

    fn pair(&mut self, key: &str, default: [f64; 2]) -> Result<[f64; 2], ConfigError> {
        self.take(key, default, |s| {
            let (a, b) = s.split_once(',')?;
            Some([a.trim().parse().ok()?, b.trim().parse().ok()?])
        })
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        self.take(key, default, |s| s.parse().ok())
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.raw.remove(key).map_or_else(|| default.to_string(), |(v, _)| v)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        Ok(Self::parse(&text)?)
    }

    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let d = ExperimentConfig::default();
        let mut r = Reader { raw: parse_raw(text)? };
        let kind = match r.string("equilibrium.kind", d.equilibrium.kind.name()).as_str() {
            "maxwellian" => EquilibriumKind::Maxwellian,
            "two_bump" => EquilibriumKind::TwoBump,
            "tabulated" => EquilibriumKind::Tabulated,
            other => return Err(err("equilibrium.kind", format!("unknown kind `{other}`"))),
        };
        let table = r.raw.remove("equilibrium.table").map(|(v, _)| PathBuf::from(v));
        let cfg = ExperimentConfig {
            equilibrium: EquilibriumSection {
                kind,
                width: r.f64("equilibrium.width", d.equilibrium.width)?,
                u0: r.pair("equilibrium.u0", d.equilibrium.u0)?,
                table,
                v_max: r.f64("equilibrium.v_max", d.equilibrium.v_max)?,
                decay_order: r.usize("equilibrium.decay_order", d.equilibrium.decay_order as usize)? as u32,
            },
            grid: GridSection {
                n: r.usize("grid.N", d.grid.n)?,
                l: r.f64("grid.L", d.grid.l)?,
                nv: r.usize("grid.Nv", d.grid.nv)?,
                v_max: r.f64("grid.v_max", d.grid.v_max)?,
            },
            time: TimeSection {
                horizon: r.f64("time.T", d.time.horizon)?,
                dt: r.f64("time.dt", d.time.dt)?,
                slab: r.f64("time.slab", d.time.slab)?,
                output_stride: r.usize("time.output_stride", d.time.output_stride)?,
            },
            nonlinearity: NonlinearitySection { kind: r.string("nonlinearity.kind", &d.nonlinearity.kind) },
            initial_data: InitialDataSection {
                epsilon: r.f64("initial_data.epsilon", d.initial_data.epsilon)?,
                sigma_x: r.f64("initial_data.sigma_x", d.initial_data.sigma_x)?,
                sigma_v: r.f64("initial_data.sigma_v", d.initial_data.sigma_v)?,
                center: r.pair("initial_data.center", d.initial_data.center)?,
            },
            solver: SolverSection {
                tol: r.f64("solver.tol", d.solver.tol)?,
                max_picard: r.usize("solver.max_picard", d.solver.max_picard)?,
                eps1: r.f64("solver.eps1", d.solver.eps1)?,
                eps2: r.f64("solver.eps2", d.solver.eps2)?,
                field_tol: r.f64("solver.field_tol", d.solver.field_tol)?,
                field_gate: r.f64("solver.field_gate", d.solver.field_gate)?,
                flow_points: r.usize("solver.flow_points", d.solver.flow_points)?,
                seed: r.take("solver.seed", d.solver.seed, |s| s.parse().ok())?,
            },
            norms: NormsSection {
                a: r.f64("norms.a", d.norms.a)?,
                shift_scale: r.f64("norms.shift_scale", d.norms.shift_scale)?,
                shift_levels: r.usize("norms.shift_levels", d.norms.shift_levels)?,
            },
            output: OutputSection {
                snapshots: r.bool("output.snapshots", d.output.snapshots)?,
                per_mode_csv: r.usize("output.per_mode_csv", d.output.per_mode_csv)?,
            },
        };
        if let Some(key) = r.raw.keys().next() {
            return Err(err(key, "unknown key"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field-level checks; returns the first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() { Ok(()) } else { Err(err(key, format!("must be positive, got {v}"))) }
        };
        if self.grid.n < 8 || !self.grid.n.is_power_of_two() {
            return Err(err("grid.N", format!("must be a power of two >= 8, got {}", self.grid.n)));
        }
        if self.grid.nv < 2 {
            return Err(err("grid.Nv", format!("must be >= 2, got {}", self.grid.nv)));
        }
        positive("grid.L", self.grid.l)?;
        positive("grid.v_max", self.grid.v_max)?;
        positive("equilibrium.width", self.equilibrium.width)?;
        positive("equilibrium.v_max", self.equilibrium.v_max)?;
        if self.equilibrium.kind == EquilibriumKind::Tabulated && self.equilibrium.table.is_none() {
            return Err(err("equilibrium.table", "required for kind = tabulated"));
        }
        positive("time.T", self.time.horizon)?;
        positive("time.dt", self.time.dt)?;
        positive("time.slab", self.time.slab)?;
        let steps = self.time.horizon / self.time.dt;
        if (steps - steps.round()).abs() > 1e-9 || steps.round() < 2.0 {
            return Err(err("time.dt", "must divide time.T into at least two steps"));
        }
        let slab = self.time.slab / self.time.dt;
        if (slab - slab.round()).abs() > 1e-9 || slab.round() < 2.0 {
            return Err(err("time.slab", "must be a whole number of steps, at least two"));
        }
        if self.time.output_stride == 0 || (steps.round() as usize) % self.time.output_stride != 0 {
            return Err(err("time.output_stride", "must divide the number of steps"));
        }
        if landau_core::NonlinearityA::from_name(&self.nonlinearity.kind).is_err() {
            return Err(err("nonlinearity.kind", format!("unknown kind `{}`", self.nonlinearity.kind)));
        }
        if !(self.initial_data.epsilon >= 0.0) {
            return Err(err("initial_data.epsilon", "must be non-negative"));
        }
        positive("initial_data.sigma_x", self.initial_data.sigma_x)?;
        positive("initial_data.sigma_v", self.initial_data.sigma_v)?;
        positive("solver.tol", self.solver.tol)?;
        positive("solver.eps1", self.solver.eps1)?;
        positive("solver.eps2", self.solver.eps2)?;
        positive("solver.field_tol", self.solver.field_tol)?;
        positive("solver.field_gate", self.solver.field_gate)?;
        if self.solver.max_picard == 0 {
            return Err(err("solver.max_picard", "must be positive"));
        }
        if !(self.norms.a > 0.0 && self.norms.a < 1.0) {
            return Err(err("norms.a", format!("must lie in (0, 1), got {}", self.norms.a)));
        }
        positive("norms.shift_scale", self.norms.shift_scale)?;
        Ok(())
    }

    /// Non-fatal remarks, e.g. a box too small for the dispersive window.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let needed = self.grid.v_max * self.time.horizon;
        if self.grid.l < needed {
            w.push(format!(
                "grid.L = {} is below v_max*T = {needed}; periodic images reach the box within the horizon",
                self.grid.l
            ));
        }
        w
    }

    /// Canonical text; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let e = &self.equilibrium;
        let _ = writeln!(s, "[equilibrium]\nkind = {}\nwidth = {:?}\nu0 = {:?}, {:?}", e.kind.name(), e.width, e.u0[0], e.u0[1]);
        if let Some(t) = &e.table {
            let _ = writeln!(s, "table = {}", t.display());
        }
        let _ = writeln!(s, "v_max = {:?}\ndecay_order = {}\n", e.v_max, e.decay_order);
        let g = &self.grid;
        let _ = writeln!(s, "[grid]\nN = {}\nL = {:?}\nNv = {}\nv_max = {:?}\n", g.n, g.l, g.nv, g.v_max);
        let t = &self.time;
        let _ = writeln!(s, "[time]\nT = {:?}\ndt = {:?}\nslab = {:?}\noutput_stride = {}\n", t.horizon, t.dt, t.slab, t.output_stride);
        let _ = writeln!(s, "[nonlinearity]\nkind = {}\n", self.nonlinearity.kind);
        let i = &self.initial_data;
        let _ = writeln!(
            s,
            "[initial_data]\nepsilon = {:?}\nsigma_x = {:?}\nsigma_v = {:?}\ncenter = {:?}, {:?}\n",
            i.epsilon, i.sigma_x, i.sigma_v, i.center[0], i.center[1]
        );
        let v = &self.solver;
        let _ = writeln!(
            s,
            "[solver]\ntol = {:?}\nmax_picard = {}\neps1 = {:?}\neps2 = {:?}\nfield_tol = {:?}\nfield_gate = {:?}\nflow_points = {}\nseed = {}\n",
            v.tol, v.max_picard, v.eps1, v.eps2, v.field_tol, v.field_gate, v.flow_points, v.seed
        );
        let n = &self.norms;
        let _ = writeln!(s, "[norms]\na = {:?}\nshift_scale = {:?}\nshift_levels = {}\n", n.a, n.shift_scale, n.shift_levels);
        let _ = write!(s, "[output]\nsnapshots = {}\nper_mode_csv = {}\n", self.output.snapshots, self.output.per_mode_csv);
        s
    }

    /// Hash of the canonical text, stable for a given build.
    pub fn hash(&self) -> String {
        let mut h = DefaultHasher::new();
        self.to_text().hash(&mut h);
        format!("{:016x}", h.finish())
    }
}
