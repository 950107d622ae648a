use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Evaluator returning `[A(r), A'(r), A''(r), A'''(r)]`.
pub type DerivativeFn = Arc<dyn Fn(f64) -> [f64; 4] + Send + Sync>;

#[derive(Clone)]
pub enum NonlinearityKind {
    Zero,
    /// `A(r) = r + 1 - e^r`.
    MasslessElectron,
    Custom(DerivativeFn),
}

impl fmt::Debug for NonlinearityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonlinearityKind::Zero => write!(f, "Zero"),
            NonlinearityKind::MasslessElectron => write!(f, "MasslessElectron"),
            NonlinearityKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// The potential nonlinearity `A` in `-ΔU + U = ρ + A(U)`, with its
/// sampled bound `C_A` on `|r| ≤ 1`.
#[derive(Debug, Clone)]
pub struct NonlinearityA {
    pub kind: NonlinearityKind,
    pub c_a: f64,
}

const SAMPLES: usize = 10_000;

impl NonlinearityA {
    pub fn zero() -> Self {
        NonlinearityA { kind: NonlinearityKind::Zero, c_a: 0.0 }
    }

    pub fn massless_electron() -> Self {
        let mut a = NonlinearityA { kind: NonlinearityKind::MasslessElectron, c_a: 0.0 };
        a.c_a = a.sample_bound();
        a
    }

    pub fn custom(f: DerivativeFn) -> Result<Self> {
        let [a0, d0, _, _] = f(0.0);
        if a0.abs() > 1e-12 || d0.abs() > 1e-12 {
            return Err(Error::InvalidNonlinearity(format!("A(0) = {a0}, A'(0) = {d0}; both must vanish")));
        }
        let mut a = NonlinearityA { kind: NonlinearityKind::Custom(f), c_a: 0.0 };
        a.c_a = a.sample_bound();
        if !a.c_a.is_finite() {
            return Err(Error::InvalidNonlinearity("C_A bound is not finite on |r| <= 1".into()));
        }
        Ok(a)
    }

    /// Parses the `nonlinearity.kind` config value.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Self::zero()),
            "massless-electron" => Ok(Self::massless_electron()),
            other => Err(Error::InvalidNonlinearity(format!("unknown nonlinearity kind '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            NonlinearityKind::Zero => "zero",
            NonlinearityKind::MasslessElectron => "massless-electron",
            NonlinearityKind::Custom(_) => "custom",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, NonlinearityKind::Zero)
    }

    /// `[A, A', A'', A''']` at `r`.
    pub fn derivatives(&self, r: f64) -> [f64; 4] {
        match &self.kind {
            NonlinearityKind::Zero => [0.0; 4],
            NonlinearityKind::MasslessElectron => {
                let e = r.exp();
                // r + 1 - e^r and 1 - e^r both cancel badly near 0
                let em1 = r.exp_m1();
                let a = if r.abs() < 1e-3 {
                    -r * r * (0.5 + r / 6.0 + r * r / 24.0 + r * r * r / 120.0)
                } else {
                    r - em1
                };
                [a, -em1, -e, -e]
            }
            NonlinearityKind::Custom(f) => f(r),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.derivatives(r)[0]
    }

    /// `sup_{|r|≤1} (|A/r²| + |A'/r| + |A''| + |A'''|)` over a uniform sample.
    pub fn sample_bound(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..SAMPLES {
            let r = -1.0 + 2.0 * (i as f64 + 0.5) / SAMPLES as f64;
            let [a, d1, d2, d3] = self.derivatives(r);
            let v = (a / (r * r)).abs() + (d1 / r).abs() + d2.abs() + d3.abs();
            if v.is_nan() {
                return f64::INFINITY;
            }
            best = best.max(v);
        }
        best
    }
}
