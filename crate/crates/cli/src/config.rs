//! Flat `[section]` / `key = value` experiment configuration with
//! rational-pi angle literals and strict unknown-key rejection.

use std::collections::BTreeMap;
use std::fmt;

use franson_core::{wavelength_to_angfreq, CountModel, GaussianBiphoton, ResponseModel};

#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "config line {}: {}", self.line, self.message)
        } else {
            write!(f, "config: {}", self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    consumed: bool,
}

/// Parsed but untyped configuration: section -> key -> value.
#[derive(Debug, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    section_lines: BTreeMap<String, usize>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RawConfig::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line_no, format!("unterminated section header {line:?}")))?
                    .trim()
                    .to_string();
                if name.is_empty() {
                    return Err(err(line_no, "empty section name"));
                }
                cfg.section_lines.entry(name.clone()).or_insert(line_no);
                cfg.sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(line_no, format!("expected `key = value`, got {line:?}")));
            };
            let section = current
                .clone()
                .ok_or_else(|| err(line_no, "key outside any [section]"))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(err(line_no, "empty key"));
            }
            let prev = cfg.sections.get_mut(&section).unwrap().insert(
                key.clone(),
                Entry { value: value.trim().to_string(), line: line_no, consumed: false },
            );
            if prev.is_some() {
                return Err(err(line_no, format!("duplicate key `{key}` in [{section}]")));
            }
        }
        Ok(cfg)
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    fn entry(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(section)?.get_mut(key)?;
        e.consumed = true;
        Some((e.value.clone(), e.line))
    }

    pub fn get_str(&mut self, section: &str, key: &str) -> Option<String> {
        self.entry(section, key).map(|(v, _)| v)
    }

    pub fn get_f64(&mut self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entry(section, key) {
            None => Ok(None),
            Some((v, line)) => parse_angle_or_number(&v)
                .map(Some)
                .map_err(|m| err(line, format!("key `{key}`: {m}"))),
        }
    }

    pub fn require_f64(&mut self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.get_f64(section, key)?.ok_or_else(|| {
            err(
                self.section_lines.get(section).copied().unwrap_or(0),
                format!("missing key `{key}` in [{section}]"),
            )
        })
    }

    pub fn get_u64(&mut self, section: &str, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.entry(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|e| err(line, format!("key `{key}`: {e}"))),
        }
    }

    pub fn get_usize(&mut self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.entry(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|e| err(line, format!("key `{key}`: {e}"))),
        }
    }

    pub fn require_section(&self, name: &str) -> Result<(), ConfigError> {
        if self.has_section(name) {
            Ok(())
        } else {
            Err(err(0, format!("missing required [{name}] block")))
        }
    }

    /// Fails if any key was never consumed by the command's schema.
    pub fn reject_unknown(&self) -> Result<(), ConfigError> {
        for (section, keys) in &self.sections {
            for (key, entry) in keys {
                if !entry.consumed {
                    return Err(err(
                        entry.line,
                        format!("unknown key `{key}` in [{section}]"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Parses a plain float or a rational-pi literal: `pi`, `-pi/4`, `3pi/2`,
/// `2pi`, `0.5pi`.
pub fn parse_angle_or_number(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let lower = t.to_ascii_lowercase();
    let Some(pos) = lower.find("pi") else {
        return Err(format!("cannot parse number {t:?}"));
    };
    let (coef_str, rest) = (lower[..pos].trim(), lower[pos + 2..].trim());
    let coef = match coef_str {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| format!("bad pi coefficient {c:?}"))?,
    };
    let denom = if rest.is_empty() {
        1.0
    } else if let Some(d) = rest.strip_prefix('/') {
        let d: f64 = d.trim().parse().map_err(|_| format!("bad pi denominator {d:?}"))?;
        if d == 0.0 {
            return Err("zero denominator".into());
        }
        d
    } else {
        return Err(format!("trailing junk after pi: {rest:?}"));
    };
    Ok(coef * std::f64::consts::PI / denom)
}

/// Source block -> biphoton state. Accepts either angular-frequency centers
/// or wavelengths in nm.
pub fn parse_source(cfg: &mut RawConfig) -> Result<GaussianBiphoton, ConfigError> {
    cfg.require_section("source")?;
    let omega_s0 = match cfg.get_f64("source", "omega_s0")? {
        Some(v) => v,
        None => {
            let lambda = cfg.require_f64("source", "lambda_s_nm")?;
            wavelength_to_angfreq(lambda).map_err(|e| err(0, e.to_string()))?
        }
    };
    let omega_i0 = match cfg.get_f64("source", "omega_i0")? {
        Some(v) => v,
        None => {
            let lambda = cfg.require_f64("source", "lambda_i_nm")?;
            wavelength_to_angfreq(lambda).map_err(|e| err(0, e.to_string()))?
        }
    };
    let sigma_s = cfg.require_f64("source", "sigma_s")?;
    let sigma_i = cfg.require_f64("source", "sigma_i")?;
    let rho = cfg.require_f64("source", "rho")?;
    GaussianBiphoton::new(omega_s0, omega_i0, sigma_s, sigma_i, rho)
        .map_err(|e| err(0, format!("[source]: {e}")))
}

/// Franson block -> (tau_s, tau_i, phi_s, phi_i). Phases are fringe
/// referenced; HWP angles may be given instead (phi = 4 theta).
pub fn parse_franson(cfg: &mut RawConfig) -> Result<(f64, f64, f64, f64), ConfigError> {
    cfg.require_section("franson")?;
    let tau_s = cfg.require_f64("franson", "tau_s")?;
    let tau_i = cfg.require_f64("franson", "tau_i")?;
    let phi = |cfg: &mut RawConfig, phi_key: &str, theta_key: &str| -> Result<f64, ConfigError> {
        if let Some(p) = cfg.get_f64("franson", phi_key)? {
            if cfg.get_f64("franson", theta_key)?.is_some() {
                return Err(err(0, format!("give either `{phi_key}` or `{theta_key}`, not both")));
            }
            return Ok(p);
        }
        Ok(cfg.get_f64("franson", theta_key)?.map(|t| 4.0 * t).unwrap_or(0.0))
    };
    let phi_s = phi(cfg, "phi_s", "theta_s")?;
    let phi_i = phi(cfg, "phi_i", "theta_i")?;
    Ok((tau_s, tau_i, phi_s, phi_i))
}

/// Detector block -> instrument response + absolute-rate model. All keys are
/// optional with ideal/zero defaults except dwell (defaults to 1 s).
pub fn parse_detector(cfg: &mut RawConfig) -> Result<(ResponseModel, CountModel), ConfigError> {
    let g = |cfg: &mut RawConfig, key: &str, default: f64| -> Result<f64, ConfigError> {
        Ok(cfg.get_f64("detector", key)?.unwrap_or(default))
    };
    let response = ResponseModel::new(
        g(cfg, "gate_sigma_s", 0.0)?,
        g(cfg, "gate_sigma_i", 0.0)?,
        g(cfg, "spec_sigma_s", 0.0)?,
        g(cfg, "spec_sigma_i", 0.0)?,
    )
    .map_err(|e| err(0, format!("[detector]: {e}")))?;
    let count_model = CountModel {
        pair_rate_peak: g(cfg, "pair_rate_peak", 0.0)?,
        background_rate: g(cfg, "background_rate", 0.0)?,
        singles_rates: (g(cfg, "singles_rate_s", 0.0)?, g(cfg, "singles_rate_i", 0.0)?),
        singles_background: (
            g(cfg, "singles_background_s", 0.0)?,
            g(cfg, "singles_background_i", 0.0)?,
        ),
        dwell: g(cfg, "dwell", 1.0)?,
        seed: cfg.get_u64("detector", "seed")?.unwrap_or(0),
    };
    count_model.validate().map_err(|e| err(0, format!("[detector]: {e}")))?;
    Ok((response, count_model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_literals() {
        assert!((parse_angle_or_number("pi").unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!(
            (parse_angle_or_number("-pi/4").unwrap() + std::f64::consts::FRAC_PI_4).abs() < 1e-15
        );
        assert!(
            (parse_angle_or_number("3pi/2").unwrap() - 4.712388980384690).abs() < 1e-12
        );
        assert!((parse_angle_or_number("7pi/4").unwrap() - 5.497787143782138).abs() < 1e-12);
        assert!((parse_angle_or_number("0.25").unwrap() - 0.25).abs() < 1e-15);
        assert!(parse_angle_or_number("pie").is_err());
        assert!(parse_angle_or_number("pi/0").is_err());
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let text = "[source]\nsigma_s = 10.63\nsigma_i = 9.56\nrho = -0.9942\nomega_s0 = 2584.6\nomega_i0 = 2276.7\nbogus = 1\n";
        let mut cfg = RawConfig::parse(text).unwrap();
        parse_source(&mut cfg).unwrap();
        let e = cfg.reject_unknown().unwrap_err();
        assert_eq!(e.line, 7);
        assert!(e.message.contains("bogus"));
    }

    #[test]
    fn missing_block_named() {
        let cfg = RawConfig::parse("[franson]\ntau_s = 0.82\n").unwrap();
        let e = cfg.require_section("source").unwrap_err();
        assert!(e.message.contains("[source]"));
    }

    #[test]
    fn wavelength_source_and_hwp_angles() {
        let text = "[source]\nlambda_s_nm = 728.8\nlambda_i_nm = 827.4\nsigma_s = 10.63\nsigma_i = 9.56\nrho = -0.9942\n[franson]\ntau_s = 0.82\ntau_i = 0.91\ntheta_s = pi/16\ntheta_i = 0\n";
        let mut cfg = RawConfig::parse(text).unwrap();
        let st = parse_source(&mut cfg).unwrap();
        assert!((st.omega_s0() - 2584.6).abs() < 0.5);
        let (ts, ti, ps, pi_) = parse_franson(&mut cfg).unwrap();
        assert_eq!((ts, ti), (0.82, 0.91));
        assert!((ps - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert_eq!(pi_, 0.0);
        cfg.reject_unknown().unwrap();
    }

    #[test]
    fn comments_and_duplicates() {
        let ok = RawConfig::parse("# top\n[a]\nx = 1 # trailing\n").unwrap();
        assert!(ok.has_section("a"));
        assert!(RawConfig::parse("[a]\nx = 1\nx = 2\n").is_err());
        assert!(RawConfig::parse("x = 1\n").is_err());
    }
}
