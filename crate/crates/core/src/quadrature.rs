//! One-dimensional quadrature used by the equilibrium and kernel code:
//! adaptive Gauss–Kronrod for smooth integrands and a composite Filon rule
//! for integrands carrying a fast phase `e^{-iωs}`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Adaptive 7/15-point Gauss–Kronrod integration of a complex integrand.
pub fn gauss_kronrod<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut stack = vec![(a, b, 0usize)];
    let mut total = Complex64::new(0.0, 0.0);
    let mut evaluations = 0usize;
    let (whole, _) = kronrod15(&f, a, b);
    let scale = whole.norm().max(abs_tol);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = kronrod15(&f, lo, hi);
        evaluations += 15;
        let local_tol = (abs_tol.max(rel_tol * scale)) * (hi - lo) / (b - a);
        if err <= local_tol || depth >= 40 {
            if depth >= 40 && err > 1e3 * local_tol {
                return Err(Error::QuadratureFailure(format!(
                    "Gauss-Kronrod did not converge on [{lo}, {hi}] (error {err:.3e})"
                )));
            }
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
        if evaluations > 2_000_000 {
            return Err(Error::QuadratureFailure("evaluation budget exhausted".into()));
        }
    }
    Ok(total)
}

fn filon_coefficients(theta: f64) -> (f64, f64, f64) {
    if theta.abs() < 1.0 / 6.0 {
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let alpha = 2.0 * t3 / 45.0 - 2.0 * t3 * t2 / 315.0 + 2.0 * t3 * t2 * t2 / 4725.0;
        let beta = 2.0 / 3.0 + 2.0 * t2 / 15.0 - 4.0 * t2 * t2 / 105.0 + 2.0 * t2 * t2 * t2 / 567.0;
        let gamma = 4.0 / 3.0 - 2.0 * t2 / 15.0 + t2 * t2 / 210.0 - t2 * t2 * t2 / 11340.0;
        (alpha, beta, gamma)
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let alpha = 1.0 / theta + s * c / t2 - 2.0 * s * s / t3;
        let beta = 2.0 * ((1.0 + c * c) / t2 - 2.0 * s * c / t3);
        let gamma = 4.0 * (s / t3 - c / t2);
        (alpha, beta, gamma)
    }
}

/// Filon-type rule for `∫_a^b f(s) e^{-iωs} ds` on `panels` uniform
/// subintervals. `f` is real; the phase is integrated exactly against a
/// piecewise-polynomial interpolant of `f`, so accuracy does not degrade as
/// `ω` grows. Per-panel phases `ωh ≥ 1` use a clamped cubic spline
/// interpolant (integrated in closed form by parts); smaller phases use
/// Filon–Simpson with one Richardson step.
pub fn filon<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, omega: f64, panels: usize) -> Complex64 {
    let n = (panels + 3) / 4 * 4;
    let h = (b - a) / n as f64;
    if (omega * h).abs() >= 1.0 {
        let samples: Vec<f64> = (0..=n).map(|i| f(a + i as f64 * h)).collect();
        return filon_spline(&samples, a, h, omega);
    }
    let fine = filon_simpson(&f, a, b, omega, n);
    let coarse = filon_simpson(&f, a, b, omega, n / 2);
    (fine * 16.0 - coarse) / 15.0
}

/// Exact integral of the clamped cubic spline through `samples` times
/// `e^{-iωs}`. End slopes come from fourth-order one-sided differences.
fn filon_spline(samples: &[f64], a: f64, h: f64, omega: f64) -> Complex64 {
    let n = samples.len() - 1;
    let f = samples;
    let d0 = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    let dn = (25.0 * f[n] - 48.0 * f[n - 1] + 36.0 * f[n - 2] - 16.0 * f[n - 3] + 3.0 * f[n - 4]) / (12.0 * h);
    // second derivatives M_j of the clamped spline (uniform knots)
    let mut diag = vec![4.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    diag[0] = 2.0;
    diag[n] = 2.0;
    rhs[0] = 6.0 * ((f[1] - f[0]) / h - d0) / h;
    rhs[n] = 6.0 * (dn - (f[n] - f[n - 1]) / h) / h;
    for j in 1..n {
        rhs[j] = 6.0 * (f[j + 1] - 2.0 * f[j] + f[j - 1]) / (h * h);
    }
    // Thomas algorithm, off-diagonals all 1
    for j in 1..=n {
        let m = 1.0 / diag[j - 1];
        diag[j] -= m;
        rhs[j] -= m * rhs[j - 1];
    }
    let mut second = vec![0.0; n + 1];
    second[n] = rhs[n] / diag[n];
    for j in (0..n).rev() {
        second[j] = (rhs[j] - second[j + 1]) / diag[j];
    }
    let b = a + n as f64 * h;
    let phase = |s: f64| Complex64::from_polar(1.0, -omega * s);
    let miw = Complex64::new(0.0, -omega);
    let (ea, eb) = (phase(a), phase(b));
    let mut total = (eb * f[n] - ea * f[0]) / miw;
    total -= (eb * dn - ea * d0) / (miw * miw);
    total += (eb * second[n] - ea * second[0]) / (miw * miw * miw);
    let w4 = omega.powi(4);
    let mut jumps = Complex64::new(0.0, 0.0);
    let mut e_lo = ea;
    for j in 0..n {
        let e_hi = phase(a + (j + 1) as f64 * h);
        let third = (second[j + 1] - second[j]) / h;
        jumps += (e_hi - e_lo) * third;
        e_lo = e_hi;
    }
    total - jumps / w4
}

fn filon_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, omega: f64, n: usize) -> Complex64 {
    let h = (b - a) / n as f64;
    let theta = omega * h;
    let (alpha, beta, gamma) = filon_coefficients(theta);
    let (mut c_even, mut s_even, mut c_odd, mut s_odd) = (0.0, 0.0, 0.0, 0.0);
    let fa = f(a);
    let fb = f(b);
    for i in 0..=n {
        let x = a + i as f64 * h;
        let fx = if i == 0 {
            fa
        } else if i == n {
            fb
        } else {
            f(x)
        };
        let (s, c) = (omega * x).sin_cos();
        if i % 2 == 0 {
            c_even += fx * c;
            s_even += fx * s;
        } else {
            c_odd += fx * c;
            s_odd += fx * s;
        }
    }
    let (sa, ca) = (omega * a).sin_cos();
    let (sb, cb) = (omega * b).sin_cos();
    c_even -= 0.5 * (fa * ca + fb * cb);
    s_even -= 0.5 * (fa * sa + fb * sb);
    let cos_part = h * (alpha * (fb * sb - fa * sa) + beta * c_even + gamma * c_odd);
    let sin_part = h * (-alpha * (fb * cb - fa * ca) + beta * s_even + gamma * s_odd);
    Complex64::new(cos_part, -sin_part)
}

/// Bessel function of the first kind of order zero, from the periodic
/// integral `J0(x) = (1/π)∫_0^π cos(x sin θ) dθ` (trapezoid rule, which
/// converges geometrically for periodic analytic integrands).
pub fn bessel_j0(x: f64) -> f64 {
    let n = (1.5 * x.abs()).ceil() as usize + 40;
    let h = std::f64::consts::PI / n as f64;
    let sum: f64 = (0..n).map(|k| (x * (k as f64 * h).sin()).cos()).sum();
    sum / n as f64
}

/// Uniform trapezoid weights for `n` nodes with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    if n == 1 {
        w[0] = 0.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_polynomial_exact() {
        let v = gauss_kronrod(|x| Complex64::new(x * x * x, x), 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((v.re - 4.0).abs() < 1e-13);
        assert!((v.im - 2.0).abs() < 1e-13);
    }

    #[test]
    fn filon_matches_gaussian_fourier_transform() {
        // ∫_{-L}^{L} e^{-s²/2} e^{-iωs} ds = √(2π) e^{-ω²/2}
        for &omega in &[0.0, 0.3, 2.0, 5.0] {
            let v = filon(|s| (-0.5 * s * s).exp(), -12.0, 12.0, omega, 2000);
            let exact = (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * omega * omega).exp();
            assert!((v.re - exact).abs() < 1e-10, "omega {omega}: {} vs {exact}", v.re);
            assert!(v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn filon_stays_accurate_at_high_frequency() {
        // ∫_0^1 e^{-iωs} ds = (1 - e^{-iω}) / (iω)
        let omega = 4000.0;
        let v = filon(|_| 1.0, 0.0, 1.0, omega, 64);
        let exact = (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -omega).exp())
            / Complex64::new(0.0, omega);
        assert!((v - exact).norm() < 1e-12);
    }

    #[test]
    fn j0_reference_values() {
        // J0 values from standard tables.
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        assert!((bessel_j0(2.404_825_557_695_773)).abs() < 1e-14);
    }
}
