//! Jones-calculus model of the birefringent interferometer arm
//! (alpha-BBO split -> QWP -> HWP -> PBS), equivalent to the abstract
//! (tau, phi) arm with phi = 4 theta.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::biphoton::GaussianBiphoton;
use crate::error::{Error, Result};
use crate::franson::{InterferometerArm, Side};

type C = Complex64;

/// Complex amplitudes of horizontal/vertical polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub h: C,
    pub v: C,
}

impl JonesVector {
    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }
}

/// Photon state over (polarization, time bin), with the early/late bin
/// separation in ps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinPolState {
    /// Amplitudes indexed by bin: [early, late].
    pub early: JonesVector,
    pub late: JonesVector,
    pub bin_delay: f64,
}

impl TimeBinPolState {
    pub fn norm_sqr(&self) -> f64 {
        self.early.norm_sqr() + self.late.norm_sqr()
    }
}

/// Half-wave plate at angle theta: i [[cos 2t, sin 2t], [sin 2t, -cos 2t]].
pub fn hwp_unitary(theta: f64) -> Matrix2<C> {
    let c = (2.0 * theta).cos();
    let s = (2.0 * theta).sin();
    Matrix2::new(C::i() * c, C::i() * s, C::i() * s, -C::i() * c)
}

/// Quarter-wave plate mapping diagonal -> left-circular and
/// anti-diagonal -> right-circular. In the H/V basis, with the fast axis
/// horizontal, this is diag(1, -i).
pub fn qwp_matrix() -> Matrix2<C> {
    Matrix2::new(C::ONE, C::ZERO, C::ZERO, -C::i())
}

fn apply(m: &Matrix2<C>, j: &JonesVector) -> JonesVector {
    JonesVector {
        h: m[(0, 0)] * j.h + m[(0, 1)] * j.v,
        v: m[(1, 0)] * j.h + m[(1, 1)] * j.v,
    }
}

/// Simulates the full birefringent arm on a vertically polarized input.
///
/// alpha-BBO splits |V> into (|D>|early> + |A>|late>)/sqrt(2); the QWP maps
/// D/A to circular polarizations; the HWP applies the theta-dependent phase;
/// the PBS keeps the horizontal component of each bin. The output is
/// (i/2)|H>(e^{-i2t}|early> + e^{i2t}|late>) up to global phase, with norm
/// squared 1/2.
pub fn simulate_arm(theta_hwp: f64, bin_delay: f64) -> Result<TimeBinPolState> {
    if !(bin_delay > 0.0 && bin_delay.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bin delay must be > 0, got {bin_delay}"
        )));
    }
    // |D>/sqrt(2) in the early bin, |A>/sqrt(2) in the late bin.
    let mut early = JonesVector { h: C::from(0.5), v: C::from(0.5) };
    let mut late = JonesVector { h: C::from(0.5), v: C::from(-0.5) };

    let qwp = qwp_matrix();
    let hwp = hwp_unitary(theta_hwp);
    early = apply(&hwp, &apply(&qwp, &early));
    late = apply(&hwp, &apply(&qwp, &late));

    // PBS: project onto |H>.
    early.v = C::ZERO;
    late.v = C::ZERO;
    Ok(TimeBinPolState { early, late, bin_delay })
}

/// Spectral fringe of the simulated arm: |a_early + a_late e^{i omega tau}|^2.
pub fn simulated_fringe(state: &TimeBinPolState, omega: f64) -> f64 {
    (state.early.h + state.late.h * C::from_polar(1.0, omega * state.bin_delay)).norm_sqr()
}

/// Compares single-photon fringes from the Jones pipeline against the
/// abstract arm with phi = 4 theta, over a frequency scan around the chosen
/// photon's center. Returns the maximum absolute deviation of the
/// peak-normalized fringe patterns.
pub fn arm_equivalence_check(
    theta: f64,
    state: &GaussianBiphoton,
    side: Side,
    bin_delay: f64,
) -> Result<f64> {
    let (omega0, sigma) = match side {
        Side::Signal => (state.omega_s0(), state.sigma_s()),
        Side::Idler => (state.omega_i0(), state.sigma_i()),
    };
    let sim = simulate_arm(theta, bin_delay)?;
    let arm = InterferometerArm::new(bin_delay, 4.0 * theta)?;
    let n = 501;
    let mut sim_vals = Vec::with_capacity(n);
    let mut abs_vals = Vec::with_capacity(n);
    for k in 0..n {
        let omega = omega0 + sigma * (-4.0 + 8.0 * (k as f64) / ((n - 1) as f64));
        sim_vals.push(simulated_fringe(&sim, omega));
        abs_vals.push(arm.transfer(omega).norm_sqr());
    }
    let sim_max = sim_vals.iter().cloned().fold(0.0_f64, f64::max).max(1e-300);
    let abs_max = abs_vals.iter().cloned().fold(0.0_f64, f64::max).max(1e-300);
    let dev = sim_vals
        .iter()
        .zip(&abs_vals)
        .map(|(s, a)| (s / sim_max - a / abs_max).abs())
        .fold(0.0_f64, f64::max);
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::table1_spectral_state;

    fn mat_approx_eq(a: &Matrix2<C>, b: &Matrix2<C>, tol: f64) -> bool {
        (0..2).all(|r| (0..2).all(|c| (a[(r, c)] - b[(r, c)]).norm() < tol))
    }

    #[test]
    fn hwp_circular_basis_action() {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let r = JonesVector { h: C::from(inv_sqrt2), v: C::i() * inv_sqrt2 };
        let l = JonesVector { h: C::from(inv_sqrt2), v: -C::i() * inv_sqrt2 };
        for theta in [0.0, std::f64::consts::FRAC_PI_8, std::f64::consts::FRAC_PI_4, 1.234] {
            let u = hwp_unitary(theta);
            let ur = apply(&u, &r);
            let want_l = C::i() * C::from_polar(1.0, 2.0 * theta);
            assert!((ur.h - want_l * l.h).norm() < 1e-14);
            assert!((ur.v - want_l * l.v).norm() < 1e-14);
            let ul = apply(&u, &l);
            let want_r = C::i() * C::from_polar(1.0, -2.0 * theta);
            assert!((ul.h - want_r * r.h).norm() < 1e-14);
            assert!((ul.v - want_r * r.v).norm() < 1e-14);
        }
    }

    #[test]
    fn hwp_zero_angle() {
        let u = hwp_unitary(0.0);
        let h = apply(&u, &JonesVector { h: C::ONE, v: C::ZERO });
        assert!((h.h - C::i()).norm() < 1e-15 && h.v.norm() < 1e-15);
        let v = apply(&u, &JonesVector { h: C::ZERO, v: C::ONE });
        assert!((v.v + C::i()).norm() < 1e-15 && v.h.norm() < 1e-15);
    }

    #[test]
    fn waveplates_are_unitary() {
        let id = Matrix2::identity();
        for k in 0..50 {
            let theta = (k as f64) * 0.1234 + 0.01;
            let u = hwp_unitary(theta);
            assert!(mat_approx_eq(&(u.adjoint() * u), &id, 1e-15));
        }
        let q = qwp_matrix();
        assert!(mat_approx_eq(&(q.adjoint() * q), &id, 1e-15));
    }

    #[test]
    fn simulated_arm_matches_closed_form() {
        for theta in [0.0, 0.3, std::f64::consts::FRAC_PI_8, 1.9, -0.7] {
            let st = simulate_arm(theta, 0.82).unwrap();
            assert!((st.norm_sqr() - 0.5).abs() < 1e-14, "transmission {}", st.norm_sqr());
            // Expected: (i/2)(e^{-i2t}|e> + e^{i2t}|l>), compare up to global phase.
            let expect_e = C::i() * 0.5 * C::from_polar(1.0, -2.0 * theta);
            let expect_l = C::i() * 0.5 * C::from_polar(1.0, 2.0 * theta);
            let phase = st.early.h / expect_e;
            assert!((phase.norm() - 1.0).abs() < 1e-13);
            assert!((st.late.h - phase * expect_l).norm() < 1e-13);
            assert!(st.early.v.norm() < 1e-15 && st.late.v.norm() < 1e-15);
        }
    }

    #[test]
    fn relative_bin_phase_is_4theta() {
        let theta = std::f64::consts::FRAC_PI_8;
        let st = simulate_arm(theta, 0.82).unwrap();
        let rel = (st.late.h / st.early.h).arg();
        assert!((rel - std::f64::consts::FRAC_PI_2).abs() < 1e-13, "phase {rel}");
        // theta = 0: equal amplitudes, zero relative phase.
        let st0 = simulate_arm(0.0, 0.82).unwrap();
        assert!((st0.late.h - st0.early.h).norm() < 1e-15);
    }

    #[test]
    fn equivalence_with_abstract_arm() {
        let bi = table1_spectral_state();
        for k in 0..20 {
            let theta = -1.5 + 0.157 * (k as f64);
            let dev = arm_equivalence_check(theta, &bi, Side::Signal, 0.82).unwrap();
            assert!(dev < 1e-12, "theta {theta}: deviation {dev}");
        }
    }

    #[test]
    fn theta_periodicity_and_pi_shift() {
        let st = table1_spectral_state();
        let theta = 0.37;
        // theta and theta + pi/2 give identical fringes (phi advances by 2 pi).
        let a = simulate_arm(theta, 0.91).unwrap();
        let b = simulate_arm(theta + std::f64::consts::FRAC_PI_2, 0.91).unwrap();
        let c = simulate_arm(theta + std::f64::consts::FRAC_PI_4, 0.91).unwrap();
        let omega0 = st.omega_i0();
        for k in 0..100 {
            let w = omega0 + 0.2 * (k as f64 - 50.0);
            let fa = simulated_fringe(&a, w);
            assert!((fa - simulated_fringe(&b, w)).abs() < 1e-13);
            // pi/4 offset inverts the fringe: the -1 outcome setting.
            assert!((fa + simulated_fringe(&c, w) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_nonpositive_bin_delay() {
        assert!(simulate_arm(0.1, 0.0).is_err());
        assert!(simulate_arm(0.1, -1.0).is_err());
    }
}
