//! Parameter recovery: 1D/2D Gaussian least squares, diagonal projections,
//! heralded widths, response deconvolution, and fringe visibility fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Histogram2D;

/// Result of a 1D Gaussian fit: off + A exp(-(x-mu)^2 / (2 sigma^2)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1DFit {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
    pub offset: f64,
    pub amplitude_err: f64,
    pub center_err: f64,
    pub sigma_err: f64,
    pub offset_err: f64,
}

/// Two-dimensional Gaussian parameters with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit2D {
    pub center_x: f64,
    pub center_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub center_x_err: f64,
    pub center_y_err: f64,
    pub sigma_x_err: f64,
    pub sigma_y_err: f64,
    pub rho_err: f64,
    /// Pre-clamp correlation when deconvolution pushed |rho| past 1.
    pub rho_unclamped: Option<f64>,
}

/// Sinusoidal fringe fit C0 (1 + V cos(phi - phi0)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub mean_level: f64,
    pub visibility: f64,
    pub phase_offset: f64,
    pub mean_level_err: f64,
    pub visibility_err: f64,
    pub phase_offset_err: f64,
}

fn weighted_moments(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let min = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let total: f64 = y.iter().map(|v| v - min).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData("no mass above baseline".into()));
    }
    let mean = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| xi * (yi - min))
        .sum::<f64>()
        / total;
    let var = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (xi - mean) * (xi - mean) * (yi - min))
        .sum::<f64>()
        / total;
    let max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((max - min, mean, var.max(1e-300).sqrt(), min))
}

/// Weighted 1D Gaussian least squares (Levenberg-Marquardt, moment-seeded).
/// `weights` are inverse variances; pass `None` for uniform weighting.
pub fn fit_gaussian_1d(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<Gaussian1DFit> {
    if x.len() != y.len() || x.len() < 5 {
        return Err(Error::DegenerateData(format!(
            "need >= 5 matching points, got {}/{}",
            x.len(),
            y.len()
        )));
    }
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != x.len() {
                return Err(Error::DegenerateData("weights length mismatch".into()));
            }
            w.to_vec()
        }
        None => vec![1.0; x.len()],
    };
    let (a0, mu0, s0, off0) = weighted_moments(x, y)?;
    let mut p = [a0, mu0, s0, off0];

    let model = |p: &[f64; 4], xi: f64| -> (f64, [f64; 4]) {
        let z = (xi - p[1]) / p[2];
        let e = (-0.5 * z * z).exp();
        let m = p[3] + p[0] * e;
        let d_a = e;
        let d_mu = p[0] * e * z / p[2];
        let d_s = p[0] * e * z * z / p[2];
        (m, [d_a, d_mu, d_s, 1.0])
    };

    let chi2 = |p: &[f64; 4]| -> f64 {
        x.iter()
            .zip(y)
            .zip(&w)
            .map(|((xi, yi), wi)| {
                let (m, _) = model(p, *xi);
                wi * (yi - m) * (yi - m)
            })
            .sum()
    };

    let mut lambda = 1e-3;
    let mut best = chi2(&p);
    for _ in 0..200 {
        let mut jtj = DMatrix::<f64>::zeros(4, 4);
        let mut jtr = DVector::<f64>::zeros(4);
        for ((xi, yi), wi) in x.iter().zip(y).zip(&w) {
            let (m, grad) = model(&p, *xi);
            let r = yi - m;
            for a in 0..4 {
                jtr[a] += wi * grad[a] * r;
                for b in 0..4 {
                    jtj[(a, b)] += wi * grad[a] * grad[b];
                }
            }
        }
        let mut damped = jtj.clone();
        for a in 0..4 {
            damped[(a, a)] *= 1.0 + lambda;
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            continue;
        };
        let mut trial = p;
        for a in 0..4 {
            trial[a] += step[a];
        }
        trial[2] = trial[2].abs().max(1e-12);
        let c = chi2(&trial);
        if c < best {
            let converged = (best - c) < 1e-12 * (best + 1e-30);
            p = trial;
            best = c;
            lambda = (lambda * 0.3).max(1e-12);
            if converged {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }

    // Covariance from the final normal matrix, scaled by reduced chi-square
    // for uniform weights (variance unknown), unscaled for supplied weights.
    let mut jtj = DMatrix::<f64>::zeros(4, 4);
    for (xi, wi) in x.iter().zip(&w) {
        let (_, grad) = model(&p, *xi);
        for a in 0..4 {
            for b in 0..4 {
                jtj[(a, b)] += wi * grad[a] * grad[b];
            }
        }
    }
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::FitFailure("singular normal matrix".into()))?;
    let dof = (x.len().saturating_sub(4)).max(1) as f64;
    let scale = if weights.is_some() { 1.0 } else { best / dof };
    let err = |k: usize| (cov[(k, k)] * scale).max(0.0).sqrt();

    if !p.iter().all(|v| v.is_finite()) || p[2] <= 0.0 {
        return Err(Error::FitFailure(format!("non-finite 1D fit parameters {p:?}")));
    }
    Ok(Gaussian1DFit {
        amplitude: p[0],
        center: p[1],
        sigma: p[2].abs(),
        offset: p[3],
        amplitude_err: err(0),
        center_err: err(1),
        sigma_err: err(2),
        offset_err: err(3),
    })
}

fn marginal_fit(h: &Histogram2D, along_x: bool) -> Result<Gaussian1DFit> {
    let (axis, m) = if along_x {
        (&h.axis_x, h.marginal_x())
    } else {
        (&h.axis_y, h.marginal_y())
    };
    let xs: Vec<f64> = axis.values().collect();
    fit_gaussian_1d(&xs, &m, None)
}

/// Two-stage 2D Gaussian fit: 1D fits to both marginals fix the centers and
/// widths, then the correlation is fit on the full map with the marginals
/// held (amplitude re-solved linearly at each candidate rho).
pub fn fit_gaussian_2d(map: &Histogram2D) -> Result<GaussianFit2D> {
    if map.axis_x.count < 5 || map.axis_y.count < 5 {
        return Err(Error::DegenerateData("need at least a 5x5 grid".into()));
    }
    if !(map.values().iter().sum::<f64>() > 0.0) {
        return Err(Error::DegenerateData("map has no positive mass".into()));
    }
    let fx = marginal_fit(map, true)?;
    let fy = marginal_fit(map, false)?;

    // Residual objective in rho with the amplitude solved linearly.
    let sse_amp = |rho: f64| -> (f64, f64) {
        let omr = 1.0 - rho * rho;
        let mut st = 0.0; // sum template^2
        let mut sd = 0.0; // sum template * data
        for ix in 0..map.axis_x.count {
            let dx = (map.axis_x.value(ix) - fx.center) / fx.sigma;
            for iy in 0..map.axis_y.count {
                let dy = (map.axis_y.value(iy) - fy.center) / fy.sigma;
                let t = (-(dx * dx - 2.0 * rho * dx * dy + dy * dy) / (2.0 * omr)).exp();
                st += t * t;
                sd += t * map.get(ix, iy);
            }
        }
        let amp = if st > 0.0 { sd / st } else { 0.0 };
        let mut sse = 0.0;
        for ix in 0..map.axis_x.count {
            let dx = (map.axis_x.value(ix) - fx.center) / fx.sigma;
            for iy in 0..map.axis_y.count {
                let dy = (map.axis_y.value(iy) - fy.center) / fy.sigma;
                let t = (-(dx * dx - 2.0 * rho * dx * dy + dy * dy) / (2.0 * omr)).exp();
                let r = map.get(ix, iy) - amp * t;
                sse += r * r;
            }
        }
        (sse, amp)
    };

    // Coarse bracket, then golden-section refinement.
    const RHO_LIM: f64 = 0.99995;
    let mut best_rho = 0.0;
    let mut best_sse = f64::INFINITY;
    let coarse = 81;
    for k in 0..coarse {
        let rho = -RHO_LIM + 2.0 * RHO_LIM * (k as f64) / ((coarse - 1) as f64);
        let (sse, _) = sse_amp(rho);
        if sse < best_sse {
            best_sse = sse;
            best_rho = rho;
        }
    }
    let span = 2.0 * RHO_LIM / ((coarse - 1) as f64);
    let (mut lo, mut hi) = (
        (best_rho - span).max(-RHO_LIM),
        (best_rho + span).min(RHO_LIM),
    );
    let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - gr * (hi - lo);
    let mut d = lo + gr * (hi - lo);
    let (mut fc, _) = sse_amp(c);
    let (mut fd, _) = sse_amp(d);
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = sse_amp(c).0;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = sse_amp(d).0;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let rho = 0.5 * (lo + hi);
    let (sse, amp) = sse_amp(rho);

    // Error on rho from the curvature of the SSE profile.
    let h = 1e-4;
    let rl = (rho - h).max(-RHO_LIM);
    let rh = (rho + h).min(RHO_LIM);
    let curv = (sse_amp(rl).0 + sse_amp(rh).0 - 2.0 * sse) / ((0.5 * (rh - rl)).powi(2));
    let n = (map.axis_x.count * map.axis_y.count) as f64;
    let s2 = sse / (n - 6.0).max(1.0);
    let rho_err = if curv > 0.0 { (2.0 * s2 / curv).sqrt() } else { f64::NAN };

    Ok(GaussianFit2D {
        center_x: fx.center,
        center_y: fy.center,
        sigma_x: fx.sigma,
        sigma_y: fy.sigma,
        rho,
        amplitude: amp,
        offset: 0.0,
        center_x_err: fx.center_err,
        center_y_err: fy.center_err,
        sigma_x_err: fx.sigma_err,
        sigma_y_err: fy.sigma_err,
        rho_err,
        rho_unclamped: None,
    })
}

/// Projects the map onto the +-45 degree diagonals (x + y and x - y),
/// fits 1D Gaussians, and returns their standard deviations
/// (Delta(x+y), Delta(x-y)).
pub fn diagonal_widths(map: &Histogram2D) -> Result<(f64, f64)> {
    let project = |sign: f64| -> Result<f64> {
        let step = map.axis_x.step.max(map.axis_y.step);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in map.axis_x.values() {
            for y in [map.axis_y.value(0), map.axis_y.value(map.axis_y.count - 1)] {
                let u = x + sign * y;
                lo = lo.min(u);
                hi = hi.max(u);
            }
        }
        let nbins = (((hi - lo) / step).ceil() as usize + 1).max(5);
        let mut bins = vec![0.0; nbins];
        for ix in 0..map.axis_x.count {
            let x = map.axis_x.value(ix);
            for iy in 0..map.axis_y.count {
                let u = x + sign * map.axis_y.value(iy);
                let k = (((u - lo) / step).floor() as usize).min(nbins - 1);
                bins[k] += map.get(ix, iy);
            }
        }
        let xs: Vec<f64> = (0..nbins).map(|k| lo + (k as f64 + 0.5) * step).collect();
        Ok(fit_gaussian_1d(&xs, &bins, None)?.sigma)
    };
    Ok((project(1.0)?, project(-1.0)?))
}

/// Heralded (conditional) widths: the mean sigma of 1D Gaussian fits to
/// `slices` conditional cuts taken within +-1 marginal sigma of center.
/// Returns (heralded_x, heralded_y).
pub fn heralded_widths(map: &Histogram2D, slices: usize) -> Result<(f64, f64)> {
    if slices == 0 {
        return Err(Error::InvalidParameter("slice count must be >= 1".into()));
    }
    let fx = marginal_fit(map, true)?;
    let fy = marginal_fit(map, false)?;

    let along_x = |cond_center: f64, cond_sigma: f64, x_axis: bool| -> Result<f64> {
        let mut sum = 0.0;
        let mut used = 0;
        for k in 0..slices {
            let frac = if slices == 1 {
                0.0
            } else {
                -1.0 + 2.0 * (k as f64) / ((slices - 1) as f64)
            };
            let target = cond_center + frac * cond_sigma;
            // Nearest grid line to the requested conditioning value.
            let (axis_cond, axis_fit) = if x_axis {
                (&map.axis_y, &map.axis_x)
            } else {
                (&map.axis_x, &map.axis_y)
            };
            let idx = (((target - axis_cond.start) / axis_cond.step).round() as isize)
                .clamp(0, axis_cond.count as isize - 1) as usize;
            let xs: Vec<f64> = axis_fit.values().collect();
            let ys: Vec<f64> = (0..axis_fit.count)
                .map(|j| if x_axis { map.get(j, idx) } else { map.get(idx, j) })
                .collect();
            if ys.iter().sum::<f64>() <= 0.0 {
                continue;
            }
            sum += fit_gaussian_1d(&xs, &ys, None)?.sigma;
            used += 1;
        }
        if used == 0 {
            return Err(Error::DegenerateData("no usable conditional slices".into()));
        }
        Ok(sum / used as f64)
    };

    let hx = along_x(fy.center, fy.sigma, true)?;
    let hy = along_x(fx.center, fx.sigma, false)?;
    Ok((hx, hy))
}

/// Removes a Gaussian response from a measured width: sqrt(m^2 - r^2).
pub fn deconvolve_width(sigma_meas: f64, sigma_resp: f64) -> Result<f64> {
    if !(sigma_resp >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "response width must be >= 0, got {sigma_resp}"
        )));
    }
    if sigma_resp >= sigma_meas {
        return Err(Error::ResponseExceedsMeasurement {
            measured: sigma_meas,
            response: sigma_resp,
        });
    }
    Ok((sigma_meas * sigma_meas - sigma_resp * sigma_resp).sqrt())
}

/// Covariance-level deconvolution: subtracts the response variance from each
/// marginal, leaves the off-diagonal covariance untouched, and rescales the
/// correlation accordingly. If |rho| lands outside (-1, 1) it is clamped and
/// the pre-clamp value is recorded in `rho_unclamped`.
pub fn deconvolve_covariance(
    fit: &GaussianFit2D,
    resp_x: f64,
    resp_y: f64,
) -> Result<GaussianFit2D> {
    let sx = deconvolve_width(fit.sigma_x, resp_x)?;
    let sy = deconvolve_width(fit.sigma_y, resp_y)?;
    let raw_rho = fit.rho * (fit.sigma_x * fit.sigma_y) / (sx * sy);
    let clamp = 1.0 - 1e-9;
    let (rho, unclamped) = if raw_rho.abs() < 1.0 {
        (raw_rho, None)
    } else {
        (raw_rho.clamp(-clamp, clamp), Some(raw_rho))
    };
    // First-order error propagation on the width rescaling.
    let rho_err = fit.rho_err * (fit.sigma_x * fit.sigma_y) / (sx * sy);
    Ok(GaussianFit2D {
        sigma_x: sx,
        sigma_y: sy,
        rho,
        rho_err,
        rho_unclamped: unclamped,
        ..*fit
    })
}

/// Weighted sinusoid fit of phase-binned counts (phi, counts). The model is
/// linearized as C0 + a cos(phi) + b sin(phi) with Poisson weights
/// 1/max(counts, 1); V and the phase offset come from (a, b).
pub fn fit_fringe(points: &[(f64, f64)]) -> Result<FringeFit> {
    if points.len() < 5 {
        return Err(Error::DegenerateData(format!(
            "need >= 5 phase bins, got {}",
            points.len()
        )));
    }
    let span = points
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if span < 0.9 * 2.0 * std::f64::consts::PI {
        return Err(Error::DegenerateData(format!(
            "phase span {span:.3} rad covers less than one period"
        )));
    }
    if points.iter().all(|p| p.1 <= 0.0) {
        return Err(Error::DegenerateData("all counts are zero".into()));
    }

    let mut xtx = DMatrix::<f64>::zeros(3, 3);
    let mut xty = DVector::<f64>::zeros(3);
    for &(phi, c) in points {
        let w = 1.0 / c.max(1.0);
        let row = [1.0, phi.cos(), phi.sin()];
        for a in 0..3 {
            xty[a] += w * row[a] * c;
            for b in 0..3 {
                xtx[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    let cov = xtx
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::FitFailure("singular fringe design matrix".into()))?;
    let beta = &cov * &xty;
    let (c0, a, b) = (beta[0], beta[1], beta[2]);
    if !(c0 > 0.0) {
        return Err(Error::FitFailure(format!("non-positive mean level {c0}")));
    }
    let r = (a * a + b * b).sqrt();
    let visibility = (r / c0).min(1.0);
    let phase_offset = b.atan2(a);

    // Propagate the parameter covariance through V = r / c0 and
    // phi0 = atan2(b, a).
    let (dv_dc0, dv_da, dv_db) = (-r / (c0 * c0), a / (r.max(1e-300) * c0), b / (r.max(1e-300) * c0));
    let grad_v = [dv_dc0, dv_da, dv_db];
    let mut var_v = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var_v += grad_v[i] * grad_v[j] * cov[(i, j)];
        }
    }
    let r2 = (r * r).max(1e-300);
    let grad_p = [0.0, -b / r2, a / r2];
    let mut var_p = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var_p += grad_p[i] * grad_p[j] * cov[(i, j)];
        }
    }

    Ok(FringeFit {
        mean_level: c0,
        visibility,
        phase_offset,
        mean_level_err: cov[(0, 0)].max(0.0).sqrt(),
        visibility_err: var_v.max(0.0).sqrt(),
        phase_offset_err: var_p.max(0.0).sqrt(),
    })
}
