//! Unbalanced-interferometer pair applied to the biphoton state, with the
//! closed-form spectral, temporal, and rate expressions.
//!
//! Every quantity here derives from the transformed joint spectral amplitude
//! F_src(w_s, w_i) * (1/4)(1 + e^{i(w_s tau_s + phi_s)})(1 + e^{i(w_i tau_i + phi_i)}),
//! so closed forms and numeric oracles (quadrature, FFT) agree exactly.

use num_complex::Complex64;

use crate::biphoton::GaussianBiphoton;
use crate::error::{Error, Result};

const TAU_2PI: f64 = 2.0 * std::f64::consts::PI;

/// One unbalanced interferometer: long-short delay `tau` (ps) and applied
/// phase `phi`, stored wrapped to [0, 2pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerArm {
    tau: f64,
    phi: f64,
}

/// Which photon a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Signal,
    Idler,
}

/// The four path combinations through the two interferometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathTerm {
    ShortShort,
    LongShort,
    ShortLong,
    LongLong,
}

impl PathTerm {
    pub const ALL: [PathTerm; 4] = [
        PathTerm::ShortShort,
        PathTerm::LongShort,
        PathTerm::ShortLong,
        PathTerm::LongLong,
    ];

    /// (signal, idler) long-path indicator.
    pub fn long_flags(self) -> (bool, bool) {
        match self {
            PathTerm::ShortShort => (false, false),
            PathTerm::LongShort => (true, false),
            PathTerm::ShortLong => (false, true),
            PathTerm::LongLong => (true, true),
        }
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi % TAU_2PI;
    if w < 0.0 {
        w + TAU_2PI
    } else {
        w
    }
}

impl InterferometerArm {
    pub fn new(tau: f64, phi: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "arm delay must be finite and >= 0, got {tau}"
            )));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter("arm phase must be finite".into()));
        }
        Ok(Self { tau, phi: wrap_phase(phi) })
    }

    /// Arm whose fringe phase (the argument of the interference cosine,
    /// carrier included) equals `fringe_phi` for a photon centered at
    /// `omega0`. Scan drivers use this so phase settings are referenced to
    /// the fringe rather than to the raw carrier omega0 * tau.
    pub fn with_fringe_phase(tau: f64, fringe_phi: f64, omega0: f64) -> Result<Self> {
        Self::new(tau, fringe_phi - omega0 * tau)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// One arm's factor of the transformed JSA: (1 + e^{i(w tau + phi)}) / 2.
    pub fn transfer(&self, omega: f64) -> Complex64 {
        0.5 * (Complex64::ONE + Complex64::from_polar(1.0, omega * self.tau + self.phi))
    }

    /// Fringe-cosine argument at the carrier: omega0 tau + phi.
    pub fn fringe_phase(&self, omega0: f64) -> f64 {
        omega0 * self.tau + self.phi
    }
}

/// Settings of the full Franson interferometer (one arm per photon).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FransonSettings {
    pub arm_s: InterferometerArm,
    pub arm_i: InterferometerArm,
}

impl FransonSettings {
    pub fn new(arm_s: InterferometerArm, arm_i: InterferometerArm) -> Self {
        Self { arm_s, arm_i }
    }

    /// Identity interferometer: zero delay, zero phase on both arms.
    pub fn identity() -> Self {
        let arm = InterferometerArm::new(0.0, 0.0).unwrap();
        Self { arm_s: arm, arm_i: arm }
    }

    /// The arm acting on the given photon.
    pub fn arm(&self, side: Side) -> &InterferometerArm {
        match side {
            Side::Signal => &self.arm_s,
            Side::Idler => &self.arm_i,
        }
    }
}

/// Joint spectral amplitude after the interferometer.
pub fn jsa_after(
    settings: &FransonSettings,
    state: &GaussianBiphoton,
    omega_s: f64,
    omega_i: f64,
) -> Complex64 {
    state.jsa_value(omega_s, omega_i)
        * settings.arm_s.transfer(omega_s)
        * settings.arm_i.transfer(omega_i)
}

/// Joint spectral intensity after the interferometer:
/// |F_src|^2 cos^2((w_s tau_s + phi_s)/2) cos^2((w_i tau_i + phi_i)/2),
/// with the running frequencies in the cosines.
pub fn jsi_after(
    settings: &FransonSettings,
    state: &GaussianBiphoton,
    omega_s: f64,
    omega_i: f64,
) -> f64 {
    let cs = (0.5 * (omega_s * settings.arm_s.tau + settings.arm_s.phi)).cos();
    let ci = (0.5 * (omega_i * settings.arm_i.tau + settings.arm_i.phi)).cos();
    state.jsi_value(omega_s, omega_i) * cs * cs * ci * ci
}

/// Gaussian envelope of one path combination, evaluated at (t_s, t_i).
/// Long arms shift the argument by the corresponding delay.
pub fn path_term(
    term: PathTerm,
    settings: &FransonSettings,
    state: &GaussianBiphoton,
    t_s: f64,
    t_i: f64,
) -> f64 {
    let (long_s, long_i) = term.long_flags();
    let ts = t_s + if long_s { settings.arm_s.tau } else { 0.0 };
    let ti = t_i + if long_i { settings.arm_i.tau } else { 0.0 };
    state.jta_envelope(ts, ti)
}

/// Joint temporal intensity after the interferometer: the four path
/// envelopes, two single-photon cross terms, and the phase-difference and
/// phase-sum two-photon terms.
pub fn jti_after(
    settings: &FransonSettings,
    state: &GaussianBiphoton,
    t_s: f64,
    t_i: f64,
) -> f64 {
    let f_ss = path_term(PathTerm::ShortShort, settings, state, t_s, t_i);
    let f_ls = path_term(PathTerm::LongShort, settings, state, t_s, t_i);
    let f_sl = path_term(PathTerm::ShortLong, settings, state, t_s, t_i);
    let f_ll = path_term(PathTerm::LongLong, settings, state, t_s, t_i);
    let cap_s = settings.arm_s.fringe_phase(state.omega_s0());
    let cap_i = settings.arm_i.fringe_phase(state.omega_i0());

    let quad = f_ss * f_ss + f_ls * f_ls + f_sl * f_sl + f_ll * f_ll;
    let single_s = 2.0 * (f_ss * f_ls + f_sl * f_ll) * cap_s.cos();
    let single_i = 2.0 * (f_ss * f_sl + f_ls * f_ll) * cap_i.cos();
    let diff = 2.0 * f_ls * f_sl * (cap_s - cap_i).cos();
    let sum = 2.0 * f_ss * f_ll * (cap_s + cap_i).cos();

    let k = state.jta_prefactor() / 4.0;
    k * k * (quad + single_s + single_i + diff + sum)
}

/// Gaussian damping factors of the phase-sum and phase-difference
/// coincidence fringes.
pub fn damping_factors(settings: &FransonSettings, state: &GaussianBiphoton) -> (f64, f64) {
    let a = state.sigma_s() * settings.arm_s.tau;
    let b = state.sigma_i() * settings.arm_i.tau;
    let base = -0.5 * (a - b) * (a - b);
    let d_plus = (base - (1.0 + state.rho()) * a * b).exp();
    let d_minus = (base - (1.0 - state.rho()) * a * b).exp();
    (d_plus, d_minus)
}

/// Overall coincidence rate after the interferometer: the integral of
/// |jsa_after|^2 over the plane, in closed form. Normalized to 1/4 of the
/// bracketed four-term expansion so it matches the quadrature exactly.
pub fn coincidence_rate(settings: &FransonSettings, state: &GaussianBiphoton) -> f64 {
    let cap_s = settings.arm_s.fringe_phase(state.omega_s0());
    let cap_i = settings.arm_i.fringe_phase(state.omega_i0());
    let es = (-0.5 * (state.sigma_s() * settings.arm_s.tau).powi(2)).exp();
    let ei = (-0.5 * (state.sigma_i() * settings.arm_i.tau).powi(2)).exp();
    let (d_plus, d_minus) = damping_factors(settings, state);
    0.25 * (1.0
        + es * cap_s.cos()
        + ei * cap_i.cos()
        + 0.5 * d_plus * (cap_s + cap_i).cos()
        + 0.5 * d_minus * (cap_s - cap_i).cos())
}

/// Single-photon detection rate after one arm, normalized to mean 1:
/// 1 + exp(-sigma^2 tau^2 / 2) cos(omega0 tau + phi).
pub fn singles_rate(arm: &InterferometerArm, sigma: f64, omega0: f64) -> f64 {
    let damp = (-0.5 * (sigma * arm.tau).powi(2)).exp();
    1.0 + damp * arm.fringe_phase(omega0).cos()
}

/// Single-photon temporal marginal after one arm, normalized so the identity
/// arm gives a unit peak at t = 0. Terms sit at t = 0, -tau, and -tau/2.
pub fn temporal_marginal_after(
    state: &GaussianBiphoton,
    side: Side,
    arm: &InterferometerArm,
    t: f64,
) -> f64 {
    let (sigma, omega0) = match side {
        Side::Signal => (state.sigma_s(), state.omega_s0()),
        Side::Idler => (state.sigma_i(), state.omega_i0()),
    };
    let one_m_r2 = 1.0 - state.rho() * state.rho();
    let k = 2.0 * sigma * sigma * one_m_r2; // 1 / (2 marginal variance)
    let tau = arm.tau;
    let short = (-k * t * t).exp();
    let long = (-k * (t + tau) * (t + tau)).exp();
    let mid = t + 0.5 * tau;
    let cross = 2.0
        * (-k * mid * mid - 0.5 * sigma * sigma * tau * tau).exp()
        * arm.fringe_phase(omega0).cos();
    0.25 * (short + long + cross)
}

/// Rates with ideal temporal selection at the midpoint
/// (t_s, t_i) = (-tau_s/2, -tau_i/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedRates {
    pub coincidence: f64,
    pub singles_s: f64,
    pub singles_i: f64,
}

/// Closed-form selected rates at the midpoint between short- and long-path
/// arrivals. The coincidence equals `jti_after` at that point.
pub fn selected_rates(settings: &FransonSettings, state: &GaussianBiphoton) -> SelectedRates {
    let ts = -0.5 * settings.arm_s.tau;
    let ti = -0.5 * settings.arm_i.tau;
    let cap_s = settings.arm_s.fringe_phase(state.omega_s0());
    let cap_i = settings.arm_i.fringe_phase(state.omega_i0());
    let (d_plus, d_minus) = damping_factors(settings, state);
    // At the midpoint f_ss = f_ll = d_plus^(1/2) and f_ls = f_sl = d_minus^(1/2).
    let root = (d_plus * d_minus).sqrt();
    let bracket = 2.0 * d_plus * (1.0 + (cap_s + cap_i).cos())
        + 2.0 * d_minus * (1.0 + (cap_s - cap_i).cos())
        + 4.0 * root * (cap_s.cos() + cap_i.cos());
    let k = state.jta_prefactor() / 4.0;
    SelectedRates {
        coincidence: k * k * bracket,
        singles_s: temporal_marginal_after(state, Side::Signal, &settings.arm_s, ts),
        singles_i: temporal_marginal_after(state, Side::Idler, &settings.arm_i, ti),
    }
}

/// Predicted fringe visibility of the phase-sum coincidence fringe.
///
/// Without temporal selection the non-interfering paths cap it at 1/2; with
/// ideal midpoint selection it is the ratio of the phase-sum fringe amplitude
/// to the phase-averaged selected rate.
pub fn predicted_visibility(
    settings: &FransonSettings,
    state: &GaussianBiphoton,
    selected: bool,
) -> f64 {
    let (d_plus, d_minus) = damping_factors(settings, state);
    if selected {
        d_plus / (d_plus + d_minus)
    } else {
        0.5 * d_plus
    }
}
