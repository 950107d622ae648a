use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Square 2-D complex FFT built from 1-D plans (rows, transpose, rows).
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({})", self.n)
    }
}

static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();

impl Fft2 {
    /// Shared plan for size `n`; plans are immutable once built.
    pub fn cached(n: usize) -> Arc<Fft2> {
        let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = plans.lock().expect("fft plan cache poisoned");
        map.entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft2 { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) })
            })
            .clone()
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        plan.process(data);
        transpose(data, n);
        plan.process(data);
        transpose(data, n);
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward.clone());
    }

    /// Normalized inverse (divides by `n²`).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse.clone());
        let s = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut data = spectrum.to_vec();
        self.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}
