use std::fmt::Write as _;

use super::ShiftSet;

/// Itemized norm: each weighted term plus their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub components: Vec<(String, f64)>,
    pub total: f64,
    pub a: f64,
    pub p_set: Vec<f64>,
    pub horizon: Option<f64>,
    pub shifts: Option<ShiftSet>,
}

impl NormReport {
    pub fn new(components: Vec<(String, f64)>, a: f64) -> Self {
        let total = components.iter().map(|c| c.1).sum();
        NormReport { components, total, a, p_set: vec![1.0, f64::INFINITY], horizon: None, shifts: None }
    }

    pub fn with_horizon(mut self, t: f64) -> Self {
        self.horizon = Some(t);
        self
    }

    pub fn with_shifts(mut self, shifts: ShiftSet) -> Self {
        self.shifts = Some(shifts);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|c| c.0 == name).map(|c| c.1)
    }

    /// Aligned `key = value` lines.
    pub fn to_text(&self) -> String {
        let width = self.components.iter().map(|c| c.0.len()).max().unwrap_or(0).max(5);
        let mut s = String::new();
        for (k, v) in &self.components {
            let _ = writeln!(s, "{k:<width$} = {v:.6e}");
        }
        let _ = writeln!(s, "{:<width$} = {:.6e}", "total", self.total);
        let _ = writeln!(s, "{:<width$} = {}", "a", self.a);
        if let Some(t) = self.horizon {
            let _ = writeln!(s, "{:<width$} = {}", "T", t);
        }
        if let Some(sh) = &self.shifts {
            let _ = writeln!(s, "{:<width$} = h0 {} x {} levels x {} directions", "shifts", sh.h0, sh.levels + 1, sh.directions.len());
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# landau-lab v1\ncomponent,value\n");
        for (k, v) in &self.components {
            let _ = writeln!(s, "{k},{v}");
        }
        let _ = writeln!(s, "total,{}", self.total);
        s
    }
}
