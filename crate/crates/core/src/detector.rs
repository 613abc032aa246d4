//! Instrument model: Gaussian response convolution, absolute rates with a
//! flat background, deterministic Poisson sampling, and the scan drivers
//! that produce maps, phase fringes, and Bell count tables.

use std::io::{BufRead, Write};

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::biphoton::GaussianBiphoton;
use crate::error::{Error, Result};
use crate::franson::{jsi_after, jti_after, FransonSettings, InterferometerArm, PathTerm, Side};
use crate::grid::{Axis, Histogram2D};

/// Gaussian instrument response: temporal gate width and spectrometer
/// resolution per photon, as standard deviations. Zero means ideal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseModel {
    pub gate_sigma_s: f64,
    pub gate_sigma_i: f64,
    pub spec_sigma_s: f64,
    pub spec_sigma_i: f64,
}

impl ResponseModel {
    pub fn new(gate_sigma_s: f64, gate_sigma_i: f64, spec_sigma_s: f64, spec_sigma_i: f64) -> Result<Self> {
        for (name, v) in [
            ("gate_sigma_s", gate_sigma_s),
            ("gate_sigma_i", gate_sigma_i),
            ("spec_sigma_s", spec_sigma_s),
            ("spec_sigma_i", spec_sigma_i),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Self { gate_sigma_s, gate_sigma_i, spec_sigma_s, spec_sigma_i })
    }

    /// Ideal detector: no blurring anywhere.
    pub fn ideal() -> Self {
        Self { gate_sigma_s: 0.0, gate_sigma_i: 0.0, spec_sigma_s: 0.0, spec_sigma_i: 0.0 }
    }

    /// The reference instrument: 0.120 ps gate pulse on both photons, and
    /// spectral responses calibrated from the measured/deconvolved width
    /// pairs (0.65 rad/ps signal, 0.44 rad/ps idler).
    pub fn reference() -> Self {
        Self { gate_sigma_s: 0.120, gate_sigma_i: 0.120, spec_sigma_s: 0.65, spec_sigma_i: 0.44 }
    }
}

/// Absolute-rate model: peak pair rate, flat background, singles rates, and
/// the counting dwell / RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountModel {
    /// Peak coincidence rate of the gated source map (identity
    /// interferometer), Hz. Sets the overall scale of expected rates.
    pub pair_rate_peak: f64,
    /// Flat, phase-independent background coincidence rate, Hz.
    pub background_rate: f64,
    /// Mean singles rates (signal, idler), Hz.
    pub singles_rates: (f64, f64),
    /// Flat background on the singles channels (signal, idler), Hz.
    pub singles_background: (f64, f64),
    /// Counting time per setting, s.
    pub dwell: f64,
    pub seed: u64,
}

impl CountModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pair_rate_peak", self.pair_rate_peak),
            ("background_rate", self.background_rate),
            ("singles_rate_s", self.singles_rates.0),
            ("singles_rate_i", self.singles_rates.1),
            ("singles_background_s", self.singles_background.0),
            ("singles_background_i", self.singles_background.1),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.dwell > 0.0 && self.dwell.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dwell must be > 0, got {}",
                self.dwell
            )));
        }
        Ok(())
    }
}

/// One measured setting: phases, gate delays, and expected/sampled counts
/// for the coincidence and both singles channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub phi_s: f64,
    pub phi_i: f64,
    pub gate_s: f64,
    pub gate_i: f64,
    pub expected_cc: f64,
    pub counts_cc: u64,
    pub expected_ss: f64,
    pub counts_ss: u64,
    pub expected_si: f64,
    pub counts_si: u64,
    pub dwell_s: f64,
}

pub const COUNT_RECORD_HEADER: &str =
    "phi_s,phi_i,gate_s,gate_i,expected_cc,counts_cc,expected_ss,counts_ss,expected_si,counts_si,dwell_s";

pub fn write_count_records(records: &[CountRecord], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{COUNT_RECORD_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.phi_s,
            r.phi_i,
            r.gate_s,
            r.gate_i,
            r.expected_cc,
            r.counts_cc,
            r.expected_ss,
            r.counts_ss,
            r.expected_si,
            r.counts_si,
            r.dwell_s
        )?;
    }
    Ok(())
}

pub fn read_count_records(reader: impl BufRead) -> Result<Vec<CountRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let row = lineno + 1;
        let line = line.map_err(|e| Error::CsvParse { row, message: e.to_string() })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("phi_s") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 11 {
            return Err(Error::CsvParse {
                row,
                message: format!("expected 11 fields, got {}", parts.len()),
            });
        }
        let f = |k: usize, name: &str| -> Result<f64> {
            parts[k].trim().parse::<f64>().map_err(|e| Error::CsvParse {
                row,
                message: format!("bad {name}: {e}"),
            })
        };
        let u = |k: usize, name: &str| -> Result<u64> {
            parts[k].trim().parse::<u64>().map_err(|e| Error::CsvParse {
                row,
                message: format!("bad {name}: {e}"),
            })
        };
        records.push(CountRecord {
            phi_s: f(0, "phi_s")?,
            phi_i: f(1, "phi_i")?,
            gate_s: f(2, "gate_s")?,
            gate_i: f(3, "gate_i")?,
            expected_cc: f(4, "expected_cc")?,
            counts_cc: u(5, "counts_cc")?,
            expected_ss: f(6, "expected_ss")?,
            counts_ss: u(7, "counts_ss")?,
            expected_si: f(8, "expected_si")?,
            counts_si: u(9, "counts_si")?,
            dwell_s: f(10, "dwell_s")?,
        });
    }
    Ok(records)
}

fn gaussian_kernel(sigma: f64, step: f64) -> Result<Vec<f64>> {
    if sigma == 0.0 {
        return Ok(vec![1.0]);
    }
    if step >= sigma / 2.0 {
        return Err(Error::GridTooCoarse { sigma, step });
    }
    let radius = (5.0 * sigma / step).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|j| {
            let x = j as f64 * step / sigma;
            (-0.5 * x * x).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    Ok(k)
}

/// Separable Gaussian blur of a map; the kernel is sum-normalized so the
/// total integral is preserved (up to mass lost off the grid edges).
pub fn convolve_map(map: &Histogram2D, sigma_x: f64, sigma_y: f64) -> Result<Histogram2D> {
    if !(sigma_x >= 0.0 && sigma_y >= 0.0 && sigma_x.is_finite() && sigma_y.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "blur widths must be finite and >= 0, got ({sigma_x}, {sigma_y})"
        )));
    }
    let kx = gaussian_kernel(sigma_x, map.axis_x.step)?;
    let ky = gaussian_kernel(sigma_y, map.axis_y.step)?;
    let (nx, ny) = (map.axis_x.count, map.axis_y.count);
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;

    // Blur along x, then along y (zero padding outside the grid).
    let mut mid = Histogram2D::zeros(map.axis_x.clone(), map.axis_y.clone());
    for ix in 0..nx as isize {
        for iy in 0..ny {
            let mut acc = 0.0;
            for (j, w) in kx.iter().enumerate() {
                let src = ix + j as isize - rx;
                if src >= 0 && src < nx as isize {
                    acc += w * map.get(src as usize, iy);
                }
            }
            mid.set(ix as usize, iy, acc);
        }
    }
    let mut out = Histogram2D::zeros(map.axis_x.clone(), map.axis_y.clone());
    for ix in 0..nx {
        for iy in 0..ny as isize {
            let mut acc = 0.0;
            for (j, w) in ky.iter().enumerate() {
                let src = iy + j as isize - ry;
                if src >= 0 && src < ny as isize {
                    acc += w * mid.get(ix, src as usize);
                }
            }
            out.set(ix, iy as usize, acc);
        }
    }
    Ok(out)
}

/// Which joint intensity a scan renders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    Jsi,
    Jti,
}

/// Evaluates the post-interferometer joint intensity on a grid, applies the
/// instrument response, and (optionally) rescales so the peak of the
/// equivalent source map equals `peak_rate` Hz. With `peak_rate = None` the
/// values are raw model intensities.
pub fn expected_scan(
    kind: ScanKind,
    state: &GaussianBiphoton,
    settings: &FransonSettings,
    response: &ResponseModel,
    axis_x: Axis,
    axis_y: Axis,
    peak_rate: Option<f64>,
) -> Result<Histogram2D> {
    let raw = match kind {
        ScanKind::Jsi => Histogram2D::from_fn(axis_x, axis_y, |ws, wi| {
            jsi_after(settings, state, ws, wi)
        }),
        ScanKind::Jti => Histogram2D::from_fn(axis_x, axis_y, |ts, ti| {
            jti_after(settings, state, ts, ti)
        }),
    };
    let (sx, sy) = match kind {
        ScanKind::Jsi => (response.spec_sigma_s, response.spec_sigma_i),
        ScanKind::Jti => (response.gate_sigma_s, response.gate_sigma_i),
    };
    let mut blurred = convolve_map(&raw, sx, sy)?;
    if let Some(peak) = peak_rate {
        if !(peak >= 0.0 && peak.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "peak rate must be finite and >= 0, got {peak}"
            )));
        }
        let scale = peak / source_peak_rate(kind, state, response)?;
        for v in blurred.values_mut() {
            *v *= scale;
        }
    }
    Ok(blurred)
}

/// Peak of the blurred source (identity interferometer) intensity; the
/// calibration point that `pair_rate_peak` refers to.
pub fn source_peak_rate(
    kind: ScanKind,
    state: &GaussianBiphoton,
    response: &ResponseModel,
) -> Result<f64> {
    match kind {
        ScanKind::Jti => {
            // Analytic: blur of the source JTI at its center t = 0.
            let r = Vector2::new(
                response.gate_sigma_s * response.gate_sigma_s,
                response.gate_sigma_i * response.gate_sigma_i,
            );
            let k = state.jta_prefactor();
            Ok(k * k
                * blurred_pair_term(
                    state,
                    Vector2::zeros(),
                    Vector2::zeros(),
                    &r,
                    Vector2::zeros(),
                ))
        }
        ScanKind::Jsi => {
            // Peak of the blurred spectral Gaussian: amplitude shrinks by
            // sqrt(det Sigma / det(Sigma + R)).
            let cov = state.spectral_covariance();
            let blurred = cov
                + Matrix2::from_diagonal(&Vector2::new(
                    response.spec_sigma_s * response.spec_sigma_s,
                    response.spec_sigma_i * response.spec_sigma_i,
                ));
            let peak = state.jsi_value(state.omega_s0(), state.omega_i0());
            Ok(peak * (cov.determinant() / blurred.determinant()).sqrt())
        }
    }
}

/// Observed fringe visibility over a flat background:
/// V' = V / (1 + B / C0).
pub fn background_visibility(v_ideal: f64, mean_rate_c0: f64, background_b: f64) -> Result<f64> {
    if !(mean_rate_c0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean rate C0 must be > 0, got {mean_rate_c0}"
        )));
    }
    if !(background_b >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "background must be >= 0, got {background_b}"
        )));
    }
    Ok(v_ideal / (1.0 + background_b / mean_rate_c0))
}

/// Deterministic Poisson draw with mean `expected * dwell`. The value
/// depends only on (seed, stream_index), never on evaluation order.
pub fn sample_counts(expected: f64, dwell: f64, seed: u64, stream_index: u64) -> Result<u64> {
    if !(expected >= 0.0 && expected.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "expected rate must be finite and >= 0, got {expected}"
        )));
    }
    if !(dwell >= 0.0 && dwell.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dwell must be finite and >= 0, got {dwell}"
        )));
    }
    let mean = expected * dwell;
    if mean == 0.0 {
        return Ok(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_index);
    let poisson = Poisson::new(mean)
        .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?;
    Ok(poisson.sample(&mut rng) as u64)
}

fn path_offset(term: PathTerm, settings: &FransonSettings) -> Vector2<f64> {
    let (long_s, long_i) = term.long_flags();
    Vector2::new(
        if long_s { settings.arm_s.tau() } else { 0.0 },
        if long_i { settings.arm_i.tau() } else { 0.0 },
    )
}

/// Gaussian-gate blur of one pair of path envelopes, evaluated at gate
/// point `t`. `r` holds the per-axis gate variances. With r = 0 this is
/// exactly g_p(t) g_q(t).
fn blurred_pair_term(
    state: &GaussianBiphoton,
    m_p: Vector2<f64>,
    m_q: Vector2<f64>,
    r: &Vector2<f64>,
    t: Vector2<f64>,
) -> f64 {
    let a = state.spectral_covariance();
    let d = m_p - m_q;
    let static_damp = (-0.5 * (d.transpose() * a * d)[(0, 0)]).exp();
    // Each product of envelopes is exp(-2 (t+m)' A (t+m)) about the midpoint
    // m of the two path offsets; blurring adds the gate covariance to its
    // intensity covariance C = A^{-1}/4.
    let c = a.try_inverse().expect("covariance is positive definite") / 4.0;
    let cr = c + Matrix2::from_diagonal(r);
    let u = t + (m_p + m_q) * 0.5;
    let amp = (c.determinant() / cr.determinant()).sqrt();
    let quad = (u.transpose() * cr.try_inverse().expect("blurred covariance invertible") * u)
        [(0, 0)];
    static_damp * amp * (-0.5 * quad).exp()
}

/// Coincidence rate with Gaussian temporal gates of the instrument response
/// centered at (gate_s, gate_i). With an ideal response this equals
/// `jti_after` at the gate point.
pub fn gated_coincidence_rate(
    settings: &FransonSettings,
    state: &GaussianBiphoton,
    response: &ResponseModel,
    gate_s: f64,
    gate_i: f64,
) -> f64 {
    let r = Vector2::new(
        response.gate_sigma_s * response.gate_sigma_s,
        response.gate_sigma_i * response.gate_sigma_i,
    );
    let t = Vector2::new(gate_s, gate_i);
    let cap_s = settings.arm_s.fringe_phase(state.omega_s0());
    let cap_i = settings.arm_i.fringe_phase(state.omega_i0());
    let m: Vec<Vector2<f64>> = PathTerm::ALL
        .iter()
        .map(|&p| path_offset(p, settings))
        .collect();
    let pair = |p: usize, q: usize| blurred_pair_term(state, m[p], m[q], &r, t);
    // Index order mirrors PathTerm::ALL: ss, ls, sl, ll.
    let quad = pair(0, 0) + pair(1, 1) + pair(2, 2) + pair(3, 3);
    let single_s = 2.0 * (pair(0, 1) + pair(2, 3)) * cap_s.cos();
    let single_i = 2.0 * (pair(0, 2) + pair(1, 3)) * cap_i.cos();
    let diff = 2.0 * pair(1, 2) * (cap_s - cap_i).cos();
    let sum = 2.0 * pair(0, 3) * (cap_s + cap_i).cos();
    let k = state.jta_prefactor() / 4.0;
    k * k * (quad + single_s + single_i + diff + sum)
}

/// Gated singles rate after one arm, split into the phase-independent level
/// and the fringe amplitude multiplying cos(fringe phase). Normalized like
/// `temporal_marginal_after` (identity arm: unit peak, zero fringe).
pub fn gated_singles_parts(
    state: &GaussianBiphoton,
    side: Side,
    arm: &InterferometerArm,
    gate_sigma: f64,
    t: f64,
) -> (f64, f64) {
    let sigma = match side {
        Side::Signal => state.sigma_s(),
        Side::Idler => state.sigma_i(),
    };
    let one_m_r2 = 1.0 - state.rho() * state.rho();
    let var = 1.0 / (4.0 * sigma * sigma * one_m_r2); // marginal intensity variance
    let tau = arm.tau();
    let blur = |center: f64| -> f64 {
        let v = var + gate_sigma * gate_sigma;
        (var / v).sqrt() * (-(t - center) * (t - center) / (2.0 * v)).exp()
    };
    let dc = 0.25 * (blur(0.0) + blur(-tau));
    let fringe = 0.5 * blur(-0.5 * tau) * (-0.5 * sigma * sigma * tau * tau).exp();
    (dc, fringe)
}

/// One evaluated setting of a phase scan.
fn scan_record(
    state: &GaussianBiphoton,
    tau_s: f64,
    tau_i: f64,
    phi_s: f64,
    phi_i: f64,
    gate_s: f64,
    gate_i: f64,
    count_model: &CountModel,
    response: &ResponseModel,
    pair_scale: f64,
    record_index: u64,
) -> Result<CountRecord> {
    let settings = FransonSettings::new(
        InterferometerArm::with_fringe_phase(tau_s, phi_s, state.omega_s0())?,
        InterferometerArm::with_fringe_phase(tau_i, phi_i, state.omega_i0())?,
    );
    let cc_model = gated_coincidence_rate(&settings, state, response, gate_s, gate_i);
    let expected_cc = pair_scale * cc_model + count_model.background_rate;

    let singles = |side: Side, arm: &InterferometerArm, gate_sigma: f64, gate: f64, rate: f64, bg: f64| {
        let (dc, fringe) = gated_singles_parts(state, side, arm, gate_sigma, gate);
        let omega0 = match side {
            Side::Signal => state.omega_s0(),
            Side::Idler => state.omega_i0(),
        };
        // Normalize the mean level to the configured singles rate; the
        // fringe term carries the (vanishing) interferometric modulation.
        let modulation = if dc > 0.0 {
            1.0 + fringe * arm.fringe_phase(omega0).cos() / dc
        } else {
            1.0
        };
        rate * modulation + bg
    };
    let expected_ss = singles(
        Side::Signal,
        &settings.arm_s,
        response.gate_sigma_s,
        gate_s,
        count_model.singles_rates.0,
        count_model.singles_background.0,
    );
    let expected_si = singles(
        Side::Idler,
        &settings.arm_i,
        response.gate_sigma_i,
        gate_i,
        count_model.singles_rates.1,
        count_model.singles_background.1,
    );

    let base = record_index * 3;
    Ok(CountRecord {
        phi_s,
        phi_i,
        gate_s,
        gate_i,
        expected_cc,
        counts_cc: sample_counts(expected_cc, count_model.dwell, count_model.seed, base)?,
        expected_ss,
        counts_ss: sample_counts(expected_ss, count_model.dwell, count_model.seed, base + 1)?,
        expected_si,
        counts_si: sample_counts(expected_si, count_model.dwell, count_model.seed, base + 2)?,
        dwell_s: count_model.dwell,
    })
}

/// Scale factor mapping model coincidence intensity to Hz, anchored so the
/// blurred source-map peak equals `pair_rate_peak`.
pub fn pair_rate_scale(
    state: &GaussianBiphoton,
    response: &ResponseModel,
    count_model: &CountModel,
) -> Result<f64> {
    Ok(count_model.pair_rate_peak / source_peak_rate(ScanKind::Jti, state, response)?)
}

/// Runs a (phi_s, phi_i) phase scan with midpoint gate selection. Gate
/// delays default to (-tau_s/2, -tau_i/2) when not given explicitly.
#[allow(clippy::too_many_arguments)]
pub fn phase_fringe_scan(
    state: &GaussianBiphoton,
    tau_s: f64,
    tau_i: f64,
    phases: &[(f64, f64)],
    gates: Option<(f64, f64)>,
    count_model: &CountModel,
    response: &ResponseModel,
) -> Result<Vec<CountRecord>> {
    count_model.validate()?;
    let (gate_s, gate_i) = gates.unwrap_or((-0.5 * tau_s, -0.5 * tau_i));
    let pair_scale = pair_rate_scale(state, response, count_model)?;
    let mut records = Vec::with_capacity(phases.len());
    for (idx, &(phi_s, phi_i)) in phases.iter().enumerate() {
        records.push(scan_record(
            state,
            tau_s,
            tau_i,
            phi_s,
            phi_i,
            gate_s,
            gate_i,
            count_model,
            response,
            pair_scale,
            idx as u64,
        )?);
    }
    Ok(records)
}

/// The four signal phase settings of the Bell measurement, in table order:
/// a+, a'+, a-, a'- (the minus outcome is the plus phase shifted by pi).
pub const BELL_PHASES_S: [f64; 4] = [
    7.0 * std::f64::consts::PI / 4.0,
    3.0 * std::f64::consts::PI / 4.0,
    std::f64::consts::PI / 4.0,
    5.0 * std::f64::consts::PI / 4.0,
];

/// The four idler phase settings, in table order: b+, b-, b'+, b'-.
pub const BELL_PHASES_I: [f64; 4] = [
    0.0,
    std::f64::consts::PI,
    std::f64::consts::PI / 2.0,
    3.0 * std::f64::consts::PI / 2.0,
];

/// Simulates the 16-setting Bell measurement. Records are emitted row-major
/// in the table layout: signal phase varies over rows, idler over columns.
pub fn bell_experiment(
    state: &GaussianBiphoton,
    tau_s: f64,
    tau_i: f64,
    count_model: &CountModel,
    response: &ResponseModel,
) -> Result<Vec<CountRecord>> {
    let mut phases = Vec::with_capacity(16);
    for &ps in &BELL_PHASES_S {
        for &pi in &BELL_PHASES_I {
            phases.push((ps, pi));
        }
    }
    phase_fringe_scan(state, tau_s, tau_i, &phases, None, count_model, response)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::table1_spectral_state;
    use crate::franson::selected_rates;

    fn test_count_model() -> CountModel {
        CountModel {
            pair_rate_peak: 44.0,
            background_rate: 0.8,
            singles_rates: (60.0, 105.0),
            singles_background: (0.0, 0.0),
            dwell: 10.0,
            seed: 42,
        }
    }

    #[test]
    fn zero_sigma_convolution_is_identity() {
        let ax = Axis::centered("x", 0.0, 2.0, 41, "ps").unwrap();
        let ay = Axis::centered("y", 0.0, 2.0, 41, "ps").unwrap();
        let h = Histogram2D::from_fn(ax, ay, |x, y| (-(x * x + y * y)).exp());
        let out = convolve_map(&h, 0.0, 0.0).unwrap();
        assert_eq!(h, out);
    }

    #[test]
    fn convolution_preserves_integral_and_widens() {
        let ax = Axis::centered("x", 0.0, 3.0, 201, "ps").unwrap();
        let ay = Axis::centered("y", 0.0, 3.0, 201, "ps").unwrap();
        let h = Histogram2D::from_fn(ax, ay, |x, y| {
            (-(x * x / (2.0 * 0.455 * 0.455) + y * y / (2.0 * 0.488 * 0.488))).exp()
        });
        let out = convolve_map(&h, 0.120, 0.120).unwrap();
        let rel = (out.integral() - h.integral()).abs() / h.integral();
        assert!(rel < 1e-6, "integral drift {rel}");
        let (_, _, sx, sy, _) = out.moments().unwrap();
        let want_x = (0.455_f64.powi(2) + 0.120_f64.powi(2)).sqrt();
        let want_y = (0.488_f64.powi(2) + 0.120_f64.powi(2)).sqrt();
        assert!((sx - want_x).abs() < 2e-3, "sx {sx} want {want_x}");
        assert!((sy - want_y).abs() < 2e-3, "sy {sy} want {want_y}");
        // The quoted 0.502 is rounded from 0.50254; allow the third decimal.
        assert!((want_x - 0.471).abs() < 6e-4 && (want_y - 0.502).abs() < 6e-4);
    }

    #[test]
    fn coarse_grid_rejected() {
        let ax = Axis::centered("x", 0.0, 2.0, 11, "ps").unwrap();
        let ay = Axis::centered("y", 0.0, 2.0, 11, "ps").unwrap();
        let h = Histogram2D::from_fn(ax, ay, |_, _| 1.0);
        match convolve_map(&h, 0.1, 0.0) {
            Err(Error::GridTooCoarse { .. }) => {}
            other => panic!("expected GridTooCoarse, got {other:?}"),
        }
    }

    #[test]
    fn expected_scan_ideal_response_is_raw_model() {
        let st = table1_spectral_state();
        let settings = FransonSettings::identity();
        let ax = Axis::centered("w_s", st.omega_s0(), 30.0, 32, "rad/ps").unwrap();
        let ay = Axis::centered("w_i", st.omega_i0(), 30.0, 32, "rad/ps").unwrap();
        let h = expected_scan(
            ScanKind::Jsi,
            &st,
            &settings,
            &ResponseModel::ideal(),
            ax.clone(),
            ay.clone(),
            None,
        )
        .unwrap();
        for ix in [0, 7, 19, 31] {
            for iy in [0, 11, 23, 31] {
                let want = st.jsi_value(ax.value(ix), ay.value(iy));
                assert!((h.get(ix, iy) - want).abs() <= 1e-15 + 1e-12 * want);
            }
        }
    }

    #[test]
    fn expected_scan_peak_calibration() {
        let st = table1_spectral_state();
        let resp = ResponseModel::reference();
        let ax = Axis::centered("t_s", 0.0, 2.0, 401, "ps").unwrap();
        let ay = Axis::centered("t_i", 0.0, 2.0, 401, "ps").unwrap();
        let h = expected_scan(
            ScanKind::Jti,
            &st,
            &FransonSettings::identity(),
            &resp,
            ax,
            ay,
            Some(44.0),
        )
        .unwrap();
        // The grid peak matches the analytic blurred-source peak.
        assert!((h.max_value() - 44.0).abs() < 0.02, "peak {}", h.max_value());
    }

    #[test]
    fn spectral_scan_stays_anticorrelated_after_blur() {
        let st = table1_spectral_state();
        let resp = ResponseModel::reference();
        let ax = Axis::centered("w_s", st.omega_s0(), 45.0, 641, "rad/ps").unwrap();
        let ay = Axis::centered("w_i", st.omega_i0(), 45.0, 641, "rad/ps").unwrap();
        let h = expected_scan(
            ScanKind::Jsi,
            &st,
            &FransonSettings::identity(),
            &resp,
            ax,
            ay,
            None,
        )
        .unwrap();
        let (_, _, sx, sy, rho) = h.moments().unwrap();
        // Blur widens marginals to the measured values and dilutes rho
        // toward the measured -0.993.
        assert!((sx - 10.65).abs() < 0.03, "sx {sx}");
        assert!((sy - 9.57).abs() < 0.03, "sy {sy}");
        assert!(rho < -0.99, "rho {rho}");
    }

    #[test]
    fn background_visibility_examples() {
        let v = background_visibility(1.0, 5.5, 0.8).unwrap();
        assert!((v - 0.873).abs() < 5e-4, "v {v}");
        assert!((background_visibility(0.7, 5.5, 0.0).unwrap() - 0.7).abs() < 1e-15);
        assert!(background_visibility(1.0, 0.0, 0.8).is_err());
        // Monotone decreasing in B.
        let mut prev = 1.0;
        for k in 1..20 {
            let v = background_visibility(1.0, 5.5, 0.1 * k as f64).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let a = sample_counts(129.2, 10.0, 7, 3).unwrap();
        let b = sample_counts(129.2, 10.0, 7, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(
            sample_counts(129.2, 10.0, 7, 3).unwrap(),
            sample_counts(129.2, 10.0, 8, 3).unwrap()
        );
        assert_eq!(sample_counts(0.0, 100.0, 1, 0).unwrap(), 0);
        // Mean 1292: every draw within +-5 sigma, ensemble mean within 1%.
        let mean = 1292.0_f64;
        let sd = mean.sqrt();
        let n = 2000;
        let mut sum = 0.0;
        for seed in 0..n {
            let c = sample_counts(mean, 1.0, seed, 0).unwrap() as f64;
            assert!((c - mean).abs() < 5.0 * sd, "seed {seed}: {c}");
            sum += c;
        }
        let avg = sum / n as f64;
        assert!((avg - mean).abs() / mean < 0.01, "ensemble mean {avg}");
    }

    #[test]
    fn gated_rate_matches_jti_for_ideal_response() {
        let st = table1_spectral_state();
        let settings = FransonSettings::new(
            InterferometerArm::new(0.82, 0.4).unwrap(),
            InterferometerArm::new(0.91, 1.3).unwrap(),
        );
        let resp = ResponseModel::ideal();
        for (ts, ti) in [(-0.41, -0.455), (0.0, 0.0), (-0.82, -0.91), (0.3, -0.2)] {
            let g = gated_coincidence_rate(&settings, &st, &resp, ts, ti);
            let j = jti_after(&settings, &st, ts, ti);
            assert!((g - j).abs() <= 1e-10 * j.abs().max(1e-12), "{g} vs {j}");
        }
    }

    #[test]
    fn gate_blur_slightly_reduces_selected_visibility() {
        let st = table1_spectral_state();
        let resp = ResponseModel::reference();
        let rate = |sum_phase: f64| {
            let settings = FransonSettings::new(
                InterferometerArm::with_fringe_phase(0.82, sum_phase, st.omega_s0()).unwrap(),
                InterferometerArm::with_fringe_phase(0.91, 0.0, st.omega_i0()).unwrap(),
            );
            gated_coincidence_rate(&settings, &st, &resp, -0.41, -0.455)
        };
        let bright = rate(0.0);
        let dim = rate(std::f64::consts::PI);
        let v = (bright - dim) / (bright + dim);
        assert!(v < 1.0 && v > 0.97, "blurred visibility {v}");
        // Ideal response recovers essentially unit visibility.
        let ideal = ResponseModel::ideal();
        let settings0 = FransonSettings::new(
            InterferometerArm::with_fringe_phase(0.82, 0.0, st.omega_s0()).unwrap(),
            InterferometerArm::with_fringe_phase(0.91, 0.0, st.omega_i0()).unwrap(),
        );
        let settings_pi = FransonSettings::new(
            InterferometerArm::with_fringe_phase(0.82, std::f64::consts::PI, st.omega_s0())
                .unwrap(),
            InterferometerArm::with_fringe_phase(0.91, 0.0, st.omega_i0()).unwrap(),
        );
        let b0 = gated_coincidence_rate(&settings0, &st, &ideal, -0.41, -0.455);
        let d0 = gated_coincidence_rate(&settings_pi, &st, &ideal, -0.41, -0.455);
        let v0 = (b0 - d0) / (b0 + d0);
        assert!(v0 > v, "ideal {v0} <= blurred {v}");
        // Cross-check the ideal values against the closed-form selected rates.
        let sel = selected_rates(&settings0, &st);
        assert!((b0 - sel.coincidence).abs() < 1e-10 * b0);
    }

    #[test]
    fn fringe_scan_records_and_csv_round_trip() {
        let st = table1_spectral_state();
        let cm = test_count_model();
        let resp = ResponseModel::reference();
        let phases: Vec<(f64, f64)> = (0..12)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / 12.0, 0.0))
            .collect();
        let recs = phase_fringe_scan(&st, 0.82, 0.91, &phases, None, &cm, &resp).unwrap();
        assert_eq!(recs.len(), 12);
        for r in &recs {
            assert!(r.expected_cc >= cm.background_rate);
            assert!((r.gate_s + 0.41).abs() < 1e-12 && (r.gate_i + 0.455).abs() < 1e-12);
        }
        // Determinism: a second run is bit-identical.
        let recs2 = phase_fringe_scan(&st, 0.82, 0.91, &phases, None, &cm, &resp).unwrap();
        assert_eq!(recs, recs2);
        let mut buf = Vec::new();
        write_count_records(&recs, &mut buf).unwrap();
        let back = read_count_records(&buf[..]).unwrap();
        assert_eq!(recs.len(), back.len());
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.counts_cc, b.counts_cc);
            assert!((a.expected_cc - b.expected_cc).abs() < 1e-9 * a.expected_cc.max(1.0));
        }
    }

    #[test]
    fn singles_are_flat_at_reference_delays() {
        let st = table1_spectral_state();
        let cm = test_count_model();
        let resp = ResponseModel::reference();
        let phases: Vec<(f64, f64)> = (0..24)
            .map(|k| {
                let p = 2.0 * std::f64::consts::PI * k as f64 / 24.0;
                (p, p / 2.0)
            })
            .collect();
        let recs = phase_fringe_scan(&st, 0.82, 0.91, &phases, None, &cm, &resp).unwrap();
        let mean_s: f64 = recs.iter().map(|r| r.expected_ss).sum::<f64>() / recs.len() as f64;
        let amp_s = recs
            .iter()
            .map(|r| (r.expected_ss - mean_s).abs())
            .fold(0.0_f64, f64::max);
        assert!(amp_s < 1e-12 * mean_s, "signal singles swing {amp_s} of {mean_s}");
        let mean_i: f64 = recs.iter().map(|r| r.expected_si).sum::<f64>() / recs.len() as f64;
        let amp_i = recs
            .iter()
            .map(|r| (r.expected_si - mean_i).abs())
            .fold(0.0_f64, f64::max);
        assert!(amp_i < 1e-12 * mean_i, "idler singles swing {amp_i} of {mean_i}");
    }

    #[test]
    fn fringe_runs_along_phase_sum() {
        let st = table1_spectral_state();
        let cm = CountModel { background_rate: 0.0, ..test_count_model() };
        let resp = ResponseModel::reference();
        // Along constant phase sum the expected rate is flat; along the sum
        // it swings.
        let along: Vec<(f64, f64)> = (0..8)
            .map(|k| {
                let p = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
                (p, -p)
            })
            .collect();
        let across: Vec<(f64, f64)> = (0..8)
            .map(|k| {
                let p = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
                (p, p)
            })
            .collect();
        let ra = phase_fringe_scan(&st, 0.82, 0.91, &along, None, &cm, &resp).unwrap();
        let rb = phase_fringe_scan(&st, 0.82, 0.91, &across, None, &cm, &resp).unwrap();
        let spread = |rs: &[CountRecord]| {
            let vals: Vec<f64> = rs.iter().map(|r| r.expected_cc).collect();
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            (max - min) / (max + min)
        };
        assert!(spread(&ra) < 1e-9, "constant-sum spread {}", spread(&ra));
        assert!(spread(&rb) > 0.9, "varying-sum spread {}", spread(&rb));
    }

    #[test]
    fn bell_experiment_layout_and_zero_rate() {
        let st = table1_spectral_state();
        let resp = ResponseModel::reference();
        let cm = CountModel {
            pair_rate_peak: 0.0,
            background_rate: 0.0,
            singles_rates: (0.0, 0.0),
            singles_background: (0.0, 0.0),
            dwell: 200.0,
            seed: 5,
        };
        let recs = bell_experiment(&st, 0.82, 0.91, &cm, &resp).unwrap();
        assert_eq!(recs.len(), 16);
        assert!(recs.iter().all(|r| r.counts_cc == 0 && r.counts_ss == 0));
        assert!((recs[0].phi_s - BELL_PHASES_S[0]).abs() < 1e-15);
        assert!((recs[3].phi_i - BELL_PHASES_I[3]).abs() < 1e-15);
        assert!((recs[4].phi_s - BELL_PHASES_S[1]).abs() < 1e-15);
    }
}
