//! Numeric oracles holding the closed forms to the defining integrals:
//! 2D Simpson quadrature for the coincidence rate and an FFT for the
//! joint temporal intensity.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use franson_core::{
    coincidence_rate, jsa_after, jti_after, FransonSettings, GaussianBiphoton, InterferometerArm,
};

fn random_case(rng: &mut ChaCha8Rng) -> (GaussianBiphoton, FransonSettings) {
    let sigma_s = rng.random_range(5.0..15.0);
    let sigma_i = rng.random_range(5.0..15.0);
    let rho = rng.random_range(-0.995..0.995);
    let omega_s0 = rng.random_range(2000.0..3000.0);
    let omega_i0 = rng.random_range(2000.0..3000.0);
    let state = GaussianBiphoton::new(omega_s0, omega_i0, sigma_s, sigma_i, rho).unwrap();
    let settings = FransonSettings::new(
        InterferometerArm::new(
            rng.random_range(0.0..1.2),
            rng.random_range(0.0..std::f64::consts::TAU),
        )
        .unwrap(),
        InterferometerArm::new(
            rng.random_range(0.0..1.2),
            rng.random_range(0.0..std::f64::consts::TAU),
        )
        .unwrap(),
    );
    (state, settings)
}

/// Simpson weights for n+1 points (n even).
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n % 2 == 0);
    let mut w = vec![0.0; n + 1];
    for (j, wj) in w.iter_mut().enumerate() {
        *wj = if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
    }
    w
}

#[test]
fn coincidence_rate_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_823);
    let n = 768;
    for case in 0..20 {
        let (state, settings) = random_case(&mut rng);
        let half_s = 8.0 * state.sigma_s();
        let half_i = 8.0 * state.sigma_i();
        let hs = 2.0 * half_s / n as f64;
        let hi = 2.0 * half_i / n as f64;
        let ws = simpson_weights(n, hs);
        let wi = simpson_weights(n, hi);
        let mut total = 0.0;
        for (j, wsj) in ws.iter().enumerate() {
            let omega_s = state.omega_s0() - half_s + j as f64 * hs;
            let mut row = 0.0;
            for (k, wik) in wi.iter().enumerate() {
                let omega_i = state.omega_i0() - half_i + k as f64 * hi;
                row += wik * jsa_after(&settings, &state, omega_s, omega_i).norm_sqr();
            }
            total += wsj * row;
        }
        let closed = coincidence_rate(&settings, &state);
        let rel = (closed - total).abs() / closed.abs().max(1e-6);
        assert!(
            rel < 1e-5,
            "case {case}: closed {closed} vs quadrature {total} (rel {rel:.2e})"
        );
    }
}

/// Inverse-DFT the post-interferometer JSA to the time domain and compare
/// the squared modulus against `jti_after` across the central region.
#[test]
fn jti_matches_fft_of_jsa() {
    let mut rng = ChaCha8Rng::seed_from_u64(77_001);
    let n = 512usize;
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n);
    for case in 0..20 {
        let (state, settings) = random_case(&mut rng);
        // +-8 sigma: window truncation, not N, limits the FFT accuracy.
        let half_s = 8.0 * state.sigma_s();
        let half_i = 8.0 * state.sigma_i();
        let dws = 2.0 * half_s / n as f64;
        let dwi = 2.0 * half_i / n as f64;

        // Sample the JSA with the (-1)^(j+k) factor so the inverse DFT lands
        // fftshifted; per-row phases drop out in the modulus.
        let mut grid: Vec<Complex64> = Vec::with_capacity(n * n);
        for j in 0..n {
            let omega_s = state.omega_s0() - half_s + j as f64 * dws;
            for k in 0..n {
                let omega_i = state.omega_i0() - half_i + k as f64 * dwi;
                let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
                grid.push(sign * jsa_after(&settings, &state, omega_s, omega_i));
            }
        }
        // 2D inverse FFT: rows (idler axis), then columns (signal axis).
        for row in grid.chunks_exact_mut(n) {
            ifft.process(row);
        }
        let mut col = vec![Complex64::ZERO; n];
        for k in 0..n {
            for j in 0..n {
                col[j] = grid[j * n + k];
            }
            ifft.process(&mut col);
            for j in 0..n {
                grid[j * n + k] = col[j];
            }
        }

        let dt_s = std::f64::consts::TAU / (n as f64 * dws);
        let dt_i = std::f64::consts::TAU / (n as f64 * dwi);
        let scale = dws * dwi;
        let peak = jti_after(&settings, &state, 0.0, 0.0)
            .max(jti_after(&settings, &state, -settings.arm_s.tau(), -settings.arm_i.tau()));
        let mut worst = 0.0_f64;
        // Central half of the time grid, decimated for speed.
        for j in (n / 4..3 * n / 4).step_by(3) {
            let t_s = (j as f64 - n as f64 / 2.0) * dt_s;
            for k in (n / 4..3 * n / 4).step_by(3) {
                let t_i = (k as f64 - n as f64 / 2.0) * dt_i;
                let fft_val = (scale * grid[j * n + k].norm()).powi(2);
                let model = jti_after(&settings, &state, t_s, t_i);
                worst = worst.max((fft_val - model).abs());
            }
        }
        assert!(
            worst < 1e-5 * peak,
            "case {case}: max |FFT - model| = {worst:.3e} vs peak {peak:.3e}"
        );
    }
}
