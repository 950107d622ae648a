use std::fmt::Write as _;
use std::time::Duration;

/// A measured constant with the computation that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub source: String,
}

/// Plain-text summary written to `report.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub constants: Vec<Constant>,
    pub status: String,
    pub warnings: Vec<String>,
    pub notes: Vec<(String, String)>,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn new(command: &str, config_hash: String) -> Self {
        RunReport {
            command: command.to_string(),
            config_hash,
            constants: Vec::new(),
            status: "ok".into(),
            warnings: Vec::new(),
            notes: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn constant(&mut self, name: &str, value: f64, source: &str) {
        self.constants.push(Constant { name: name.into(), value, source: source.into() });
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.value)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "status = {}", self.status);
        for (k, v) in &self.notes {
            let _ = writeln!(s, "{k} = {v}");
        }
        for c in &self.constants {
            let _ = writeln!(s, "{} = {:.9e}  [{}]", c.name, c.value, c.source);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning = {w}");
        }
        let _ = writeln!(s, "wall_time_s = {:.3}", self.wall_time.as_secs_f64());
        s
    }
}
