//! Command implementations: simulate, fringe, bell, fit, reproduce.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use franson_core::{
    bell_experiment, bell_result_from_counts, bell_result_from_records, deconvolve_covariance,
    deconvolve_width, diagonal_widths, expected_scan, fit_fringe, fit_gaussian_2d,
    heralded_widths, phase_fringe_scan, table2_counts, write_count_records, Axis, BellResult,
    CountModel, CountRecord,
    FransonSettings, GaussianBiphoton, Histogram2D, InterferometerArm, ResponseModel, ScanKind,
};

use crate::config::{parse_detector, parse_franson, parse_source, ConfigError, RawConfig};

/// Command failure with the process exit code it maps to.
#[derive(Debug)]
pub enum CmdError {
    /// Usage or configuration problem (exit 2).
    Usage(String),
    /// A reproduce comparison failed (exit 1).
    Comparison(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Usage(m) | CmdError::Comparison(m) => write!(f, "{m}"),
        }
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Usage(e.to_string())
    }
}

impl From<franson_core::Error> for CmdError {
    fn from(e: franson_core::Error) -> Self {
        CmdError::Usage(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CmdError {
    CmdError::Usage(format!("{}: {e}", path.display()))
}

pub type CmdResult = Result<(), CmdError>;

fn read_config(path: &Path) -> Result<RawConfig, CmdError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(RawConfig::parse(&text)?)
}

fn ensure_out_dir(out: &Path) -> Result<(), CmdError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CmdError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn check_format(format: &str) -> Result<(), CmdError> {
    if format == "csv" {
        Ok(())
    } else {
        Err(CmdError::Usage(format!(
            "unsupported output format `{format}` (only `csv` is available)"
        )))
    }
}

/// Everything a scan command needs from a parsed config.
struct Experiment {
    state: GaussianBiphoton,
    tau_s: f64,
    tau_i: f64,
    phi_s: f64,
    phi_i: f64,
    response: ResponseModel,
    count_model: CountModel,
}

fn parse_experiment(cfg: &mut RawConfig, seed: Option<u64>) -> Result<Experiment, CmdError> {
    let state = parse_source(cfg)?;
    let (tau_s, tau_i, phi_s, phi_i) = parse_franson(cfg)?;
    let (response, mut count_model) = parse_detector(cfg)?;
    if let Some(s) = seed {
        count_model.seed = s;
    }
    Ok(Experiment { state, tau_s, tau_i, phi_s, phi_i, response, count_model })
}

// ---------------------------------------------------------------------------
// simulate

struct MapGrids {
    spec_half_span: f64,
    spec_count: usize,
    time_half_span: f64,
    time_count: usize,
    maps: String,
    settings: Vec<(f64, f64)>,
}

fn parse_scan_maps(cfg: &mut RawConfig, default_setting: (f64, f64)) -> Result<MapGrids, CmdError> {
    let maps = cfg.get_str("scan", "map").unwrap_or_else(|| "both".into());
    if !["jsi", "jti", "both"].contains(&maps.as_str()) {
        return Err(CmdError::Usage(format!(
            "[scan] map must be jsi, jti, or both; got `{maps}`"
        )));
    }
    let settings = match cfg.get_str("scan", "settings") {
        None => vec![default_setting],
        Some(list) => {
            let mut out = Vec::new();
            for part in list.split(',') {
                let fields: Vec<&str> = part.split_whitespace().collect();
                if fields.len() != 2 {
                    return Err(CmdError::Usage(format!(
                        "[scan] settings entry `{part}` must be `phi_s phi_i`"
                    )));
                }
                let ps = crate::config::parse_angle_or_number(fields[0])
                    .map_err(CmdError::Usage)?;
                let pi = crate::config::parse_angle_or_number(fields[1])
                    .map_err(CmdError::Usage)?;
                out.push((ps, pi));
            }
            out
        }
    };
    Ok(MapGrids {
        spec_half_span: cfg.get_f64("scan", "spec_half_span")?.unwrap_or(45.0),
        spec_count: cfg.get_usize("scan", "spec_count")?.unwrap_or(161),
        time_half_span: cfg.get_f64("scan", "time_half_span")?.unwrap_or(1.6),
        time_count: cfg.get_usize("scan", "time_count")?.unwrap_or(161),
        maps,
        settings,
    })
}

fn write_map(out: &Path, name: &str, map: &Histogram2D) -> Result<PathBuf, CmdError> {
    let path = out.join(format!("{name}.csv"));
    let mut buf = Vec::new();
    map.write_csv(&mut buf).map_err(|e| io_err(&path, e))?;
    write_file(&path, &buf)?;
    Ok(path)
}

fn render_maps(
    exp: &Experiment,
    grids: &MapGrids,
    out: &Path,
) -> Result<Vec<(String, Histogram2D)>, CmdError> {
    let st = &exp.state;
    let peak = if exp.count_model.pair_rate_peak > 0.0 {
        Some(exp.count_model.pair_rate_peak)
    } else {
        None
    };
    let mut produced = Vec::new();
    let mut emit = |name: &str, map: Histogram2D| -> Result<(), CmdError> {
        write_map(out, name, &map)?;
        produced.push((name.to_string(), map));
        Ok(())
    };

    let spec_axes = |half: f64, n: usize| -> Result<(Axis, Axis), CmdError> {
        Ok((
            Axis::centered("omega_s", st.omega_s0(), half, n, "rad/ps")?,
            Axis::centered("omega_i", st.omega_i0(), half, n, "rad/ps")?,
        ))
    };
    let time_axes = |cs: f64, ci: f64, half: f64, n: usize| -> Result<(Axis, Axis), CmdError> {
        Ok((
            Axis::centered("t_s", cs, half, n, "ps")?,
            Axis::centered("t_i", ci, half, n, "ps")?,
        ))
    };

    if grids.maps != "jti" {
        let (ax, ay) = spec_axes(grids.spec_half_span, grids.spec_count)?;
        let before = expected_scan(
            ScanKind::Jsi,
            st,
            &FransonSettings::identity(),
            &exp.response,
            ax,
            ay,
            peak,
        )?;
        emit("jsi_before", before)?;
        for (k, &(ps, pi)) in grids.settings.iter().enumerate() {
            let settings = FransonSettings::new(
                InterferometerArm::with_fringe_phase(exp.tau_s, ps, st.omega_s0())?,
                InterferometerArm::with_fringe_phase(exp.tau_i, pi, st.omega_i0())?,
            );
            let (ax, ay) = spec_axes(grids.spec_half_span, grids.spec_count)?;
            let map = expected_scan(ScanKind::Jsi, st, &settings, &exp.response, ax, ay, peak)?;
            emit(&format!("jsi_after_{}", k + 1), map)?;
        }
    }
    if grids.maps != "jsi" {
        let (ax, ay) = time_axes(0.0, 0.0, grids.time_half_span, grids.time_count)?;
        let before = expected_scan(
            ScanKind::Jti,
            st,
            &FransonSettings::identity(),
            &exp.response,
            ax,
            ay,
            peak,
        )?;
        emit("jti_before", before)?;
        for (k, &(ps, pi)) in grids.settings.iter().enumerate() {
            let settings = FransonSettings::new(
                InterferometerArm::with_fringe_phase(exp.tau_s, ps, st.omega_s0())?,
                InterferometerArm::with_fringe_phase(exp.tau_i, pi, st.omega_i0())?,
            );
            let (ax, ay) = time_axes(
                -0.5 * exp.tau_s,
                -0.5 * exp.tau_i,
                grids.time_half_span,
                grids.time_count,
            )?;
            let map = expected_scan(ScanKind::Jti, st, &settings, &exp.response, ax, ay, peak)?;
            emit(&format!("jti_after_{}", k + 1), map)?;
        }
    }
    Ok(produced)
}

pub fn cmd_simulate(config: &Path, seed: Option<u64>, out: &Path) -> CmdResult {
    let mut cfg = read_config(config)?;
    let exp = parse_experiment(&mut cfg, seed)?;
    let grids = parse_scan_maps(&mut cfg, (exp.phi_s, exp.phi_i))?;
    cfg.reject_unknown()?;
    ensure_out_dir(out)?;
    let produced = render_maps(&exp, &grids, out)?;
    for (name, _) in &produced {
        println!("wrote {}", out.join(format!("{name}.csv")).display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// fringe

struct FringeScan {
    phase_count_s: usize,
    phase_count_i: usize,
    gates: Option<(f64, f64)>,
}

fn parse_scan_fringe(cfg: &mut RawConfig) -> Result<FringeScan, CmdError> {
    let gs = cfg.get_f64("scan", "gate_s")?;
    let gi = cfg.get_f64("scan", "gate_i")?;
    let gates = match (gs, gi) {
        (None, None) => None,
        (Some(a), Some(b)) => Some((a, b)),
        _ => {
            return Err(CmdError::Usage(
                "[scan] gate_s and gate_i must be given together".into(),
            ))
        }
    };
    Ok(FringeScan {
        phase_count_s: cfg.get_usize("scan", "phase_count_s")?.unwrap_or(12),
        phase_count_i: cfg.get_usize("scan", "phase_count_i")?.unwrap_or(12),
        gates,
    })
}

fn phase_grid(n_s: usize, n_i: usize) -> Vec<(f64, f64)> {
    let mut phases = Vec::with_capacity(n_s * n_i);
    for a in 0..n_s {
        let ps = std::f64::consts::TAU * a as f64 / n_s as f64;
        for b in 0..n_i {
            let pi = std::f64::consts::TAU * b as f64 / n_i as f64;
            phases.push((ps, pi));
        }
    }
    phases
}

fn run_fringe(
    exp: &Experiment,
    scan: &FringeScan,
) -> Result<(Vec<CountRecord>, franson_core::FringeFit), CmdError> {
    let phases = phase_grid(scan.phase_count_s, scan.phase_count_i);
    let records = phase_fringe_scan(
        &exp.state,
        exp.tau_s,
        exp.tau_i,
        &phases,
        scan.gates,
        &exp.count_model,
        &exp.response,
    )?;
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| ((r.phi_s + r.phi_i).rem_euclid(std::f64::consts::TAU), r.counts_cc as f64))
        .collect();
    let fit = fit_fringe(&points)?;
    Ok((records, fit))
}

fn fringe_report(fit: &franson_core::FringeFit, n_records: usize, dwell: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n_settings = {n_records}");
    let _ = writeln!(s, "dwell_s = {dwell}");
    let _ = writeln!(s, "mean_level_counts = {}", fit.mean_level);
    let _ = writeln!(s, "mean_level_err = {}", fit.mean_level_err);
    let _ = writeln!(s, "visibility = {}", fit.visibility);
    let _ = writeln!(s, "visibility_err = {}", fit.visibility_err);
    let _ = writeln!(s, "phase_offset_rad = {}", fit.phase_offset);
    let _ = writeln!(s, "phase_offset_err = {}", fit.phase_offset_err);
    s
}

pub fn cmd_fringe(config: &Path, seed: Option<u64>, out: &Path) -> CmdResult {
    let mut cfg = read_config(config)?;
    let exp = parse_experiment(&mut cfg, seed)?;
    let scan = parse_scan_fringe(&mut cfg)?;
    cfg.reject_unknown()?;
    ensure_out_dir(out)?;
    let (records, fit) = run_fringe(&exp, &scan)?;
    let mut buf = Vec::new();
    let rec_path = out.join("fringe_records.csv");
    write_count_records(&records, &mut buf).map_err(|e| io_err(&rec_path, e))?;
    write_file(&rec_path, &buf)?;
    let report = fringe_report(&fit, records.len(), exp.count_model.dwell);
    write_file(&out.join("fringe_report.txt"), report.as_bytes())?;
    print!("{report}");
    println!("wrote {}", rec_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// bell

fn bell_report(res: &BellResult, note: Option<&str>) -> String {
    let labels = ["E_ab", "E_ab_prime", "E_aprime_b", "E_aprime_bprime"];
    let mut s = String::new();
    for (k, &(e, sigma)) in res.correlators.iter().enumerate() {
        let _ = writeln!(s, "{} = {}", labels[k], e);
        let _ = writeln!(s, "{}_err = {}", labels[k], sigma);
    }
    let _ = writeln!(s, "S = {}", res.s);
    let _ = writeln!(s, "S_err = {}", res.sigma_s);
    let _ = writeln!(s, "violation_sigmas = {}", res.violation_sigmas());
    if let Some(n) = note {
        let _ = writeln!(s, "note = {n}");
    }
    s
}

const TABLE2_NOTE: &str = "direct evaluation of the correlation formulas on the published \
count table gives S = 2.459 +- 0.027, not the headline 2.42 +- 0.02; the direct value is \
reported unchanged";

pub fn cmd_bell(config: Option<&Path>, table2: bool, seed: Option<u64>, out: &Path) -> CmdResult {
    ensure_out_dir(out)?;
    if table2 {
        let res = bell_result_from_counts(&table2_counts())?;
        let report = bell_report(&res, Some(TABLE2_NOTE));
        write_file(&out.join("bell_table2_report.txt"), report.as_bytes())?;
        print!("{report}");
        return Ok(());
    }
    let Some(config) = config else {
        return Err(CmdError::Usage(
            "bell requires --config (or --table2 to replay the published counts)".into(),
        ));
    };
    let mut cfg = read_config(config)?;
    let mut exp = parse_experiment(&mut cfg, seed)?;
    cfg.reject_unknown()?;
    if exp.count_model.dwell <= 0.0 {
        exp.count_model.dwell = 200.0;
    }
    let records = bell_experiment(
        &exp.state,
        exp.tau_s,
        exp.tau_i,
        &exp.count_model,
        &exp.response,
    )?;
    let res = bell_result_from_records(&records)?;
    let mut buf = Vec::new();
    let tbl_path = out.join("bell_counts.csv");
    write_count_records(&records, &mut buf).map_err(|e| io_err(&tbl_path, e))?;
    write_file(&tbl_path, &buf)?;
    let report = bell_report(&res, None);
    write_file(&out.join("bell_report.txt"), report.as_bytes())?;
    print!("{report}");
    println!("wrote {}", tbl_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fit

pub fn cmd_fit(input: &Path, config: &Path, out: &Path) -> CmdResult {
    let mut cfg = read_config(config)?;
    let (response, _) = parse_detector(&mut cfg)?;
    let kind = cfg.get_str("scan", "kind").unwrap_or_else(|| "jti".into());
    // Fit only needs the response; configs shared with the scan commands
    // may also carry [source]/[franson] sections, which are validated but
    // otherwise unused here.
    if cfg.has_section("source") {
        parse_source(&mut cfg)?;
    }
    if cfg.has_section("franson") {
        parse_franson(&mut cfg)?;
    }
    cfg.reject_unknown()?;
    let (resp_x, resp_y) = match kind.as_str() {
        "jti" => (response.gate_sigma_s, response.gate_sigma_i),
        "jsi" => (response.spec_sigma_s, response.spec_sigma_i),
        other => {
            return Err(CmdError::Usage(format!(
                "[scan] kind must be jsi or jti for fit, got `{other}`"
            )))
        }
    };

    let file = fs::File::open(input).map_err(|e| io_err(input, e))?;
    let map = Histogram2D::read_csv(BufReader::new(file))?;
    let fit = fit_gaussian_2d(&map)?;
    let (diag_plus, diag_minus) = diagonal_widths(&map)?;
    let (her_x, her_y) = heralded_widths(&map, 5)?;
    let dec = if resp_x > 0.0 || resp_y > 0.0 {
        Some(deconvolve_covariance(&fit, resp_x, resp_y)?)
    } else {
        None
    };

    let mut s = String::new();
    let _ = writeln!(s, "input = {}", input.display());
    let _ = writeln!(s, "kind = {kind}");
    let _ = writeln!(s, "center_x = {}", fit.center_x);
    let _ = writeln!(s, "center_y = {}", fit.center_y);
    let _ = writeln!(s, "sigma_x = {}", fit.sigma_x);
    let _ = writeln!(s, "sigma_x_err = {}", fit.sigma_x_err);
    let _ = writeln!(s, "sigma_y = {}", fit.sigma_y);
    let _ = writeln!(s, "sigma_y_err = {}", fit.sigma_y_err);
    let _ = writeln!(s, "rho = {}", fit.rho);
    let _ = writeln!(s, "rho_err = {}", fit.rho_err);
    let _ = writeln!(s, "diag_plus = {diag_plus}");
    let _ = writeln!(s, "diag_minus = {diag_minus}");
    let _ = writeln!(s, "heralded_x = {her_x}");
    let _ = writeln!(s, "heralded_y = {her_y}");
    if let Some(d) = &dec {
        let _ = writeln!(s, "deconvolved_sigma_x = {}", d.sigma_x);
        let _ = writeln!(s, "deconvolved_sigma_y = {}", d.sigma_y);
        let _ = writeln!(s, "deconvolved_rho = {}", d.rho);
        if let Some(raw) = d.rho_unclamped {
            let _ = writeln!(s, "deconvolved_rho_unclamped = {raw}");
            let _ = writeln!(s, "warning = correlation clamped to the physical range");
        }
    }
    ensure_out_dir(out)?;
    write_file(&out.join("fit_report.txt"), s.as_bytes())?;

    // Machine-readable single row.
    let mut csv = String::from(
        "center_x,center_y,sigma_x,sigma_y,rho,diag_plus,diag_minus,heralded_x,heralded_y,dec_sigma_x,dec_sigma_y,dec_rho\n",
    );
    let (dx, dy, dr) = match &dec {
        Some(d) => (d.sigma_x, d.sigma_y, d.rho),
        None => (fit.sigma_x, fit.sigma_y, fit.rho),
    };
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        fit.center_x,
        fit.center_y,
        fit.sigma_x,
        fit.sigma_y,
        fit.rho,
        diag_plus,
        diag_minus,
        her_x,
        her_y,
        dx,
        dy,
        dr
    );
    write_file(&out.join("fit_report.csv"), csv.as_bytes())?;
    print!("{s}");
    Ok(())
}

// ---------------------------------------------------------------------------
// reproduce

const FIG3_CFG: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../paper/fig3.cfg"));
const FIG4_CFG: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../paper/fig4.cfg"));
const BELL_CFG: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../paper/bell.cfg"));
const TABLE1_CFG: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../paper/table1.cfg"));

struct Checker {
    lines: Vec<String>,
    failures: usize,
}

impl Checker {
    fn new() -> Self {
        Self { lines: Vec::new(), failures: 0 }
    }

    fn check(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        let pass = (got - want).abs() <= tol;
        if !pass {
            self.failures += 1;
        }
        self.lines.push(format!(
            "{} {label}: got {got:.6}, want {want:.6} +- {tol:.6}",
            if pass { "PASS" } else { "FAIL" },
        ));
    }

    fn check_range(&mut self, label: &str, got: f64, lo: f64, hi: f64) {
        let pass = got >= lo && got <= hi;
        if !pass {
            self.failures += 1;
        }
        self.lines.push(format!(
            "{} {label}: got {got:.6}, want in [{lo}, {hi}]",
            if pass { "PASS" } else { "FAIL" },
        ));
    }

    fn check_bool(&mut self, label: &str, pass: bool) {
        if !pass {
            self.failures += 1;
        }
        self.lines
            .push(format!("{} {label}", if pass { "PASS" } else { "FAIL" }));
    }

    fn note(&mut self, text: &str) {
        self.lines.push(format!("NOTE {text}"));
    }

    fn finish(self, out: &Path, name: &str) -> CmdResult {
        let mut text = self.lines.join("\n");
        text.push('\n');
        print!("{text}");
        write_file(&out.join(format!("{name}_checks.txt")), text.as_bytes())?;
        if self.failures == 0 {
            Ok(())
        } else {
            Err(CmdError::Comparison(format!(
                "{name}: {} comparison(s) failed",
                self.failures
            )))
        }
    }
}

fn reproduce_table1(out: &Path) -> CmdResult {
    let mut cfg = RawConfig::parse(TABLE1_CFG)?;
    let exp = parse_experiment(&mut cfg, None)?;
    cfg.reject_unknown()?;
    let st = &exp.state;
    let resp = &exp.response;
    let mut ck = Checker::new();

    // Scalar deconvolution identities for the temporal widths.
    ck.check("deconvolve 0.471 ps", deconvolve_width(0.471, 0.120)?, 0.455, 5e-4);
    ck.check("deconvolve 0.502 ps", deconvolve_width(0.502, 0.120)?, 0.488, 6e-4);

    // Full pipeline on the temporal side: render, blur, fit, deconvolve.
    let tw = st.temporal_widths();
    let ax = Axis::centered("t_s", 0.0, 2.4, 241, "ps")?;
    let ay = Axis::centered("t_i", 0.0, 2.4, 241, "ps")?;
    let jti = expected_scan(
        ScanKind::Jti,
        st,
        &FransonSettings::identity(),
        resp,
        ax,
        ay,
        None,
    )?;
    write_map(out, "table1_jti_blurred", &jti)?;
    let fit_t = fit_gaussian_2d(&jti)?;
    let blur_s = (tw.marginal_s.powi(2) + resp.gate_sigma_s.powi(2)).sqrt();
    let blur_i = (tw.marginal_i.powi(2) + resp.gate_sigma_i.powi(2)).sqrt();
    let blur_rho =
        tw.correlation * tw.marginal_s * tw.marginal_i / (blur_s * blur_i);
    ck.check("gated temporal sigma_s", fit_t.sigma_x, blur_s, 4e-3);
    ck.check("gated temporal sigma_i", fit_t.sigma_y, blur_i, 4e-3);
    ck.check("gated temporal rho", fit_t.rho, blur_rho, 4e-3);
    let dec_t = deconvolve_covariance(&fit_t, resp.gate_sigma_s, resp.gate_sigma_i)?;
    ck.check("deconvolved temporal sigma_s", dec_t.sigma_x, tw.marginal_s, 4e-3);
    ck.check("deconvolved temporal sigma_i", dec_t.sigma_y, tw.marginal_i, 4e-3);
    ck.check("deconvolved temporal rho", dec_t.rho, tw.correlation, 4e-3);
    ck.note(&format!(
        "model arrival-time widths after the gate: ({:.3}, {:.3}) ps with rho {:.3}; \
the quoted measurements were (0.471, 0.502) ps with rho 0.920 -- the published \
spectral and temporal fits are not exactly Fourier-consistent, so the gated map is \
checked as a round trip and the quoted numbers are checked as identities below",
        fit_t.sigma_x, fit_t.sigma_y, fit_t.rho
    ));

    // Covariance deconvolution identity on the quoted temporal fit.
    let published = franson_core::GaussianFit2D {
        center_x: 0.0,
        center_y: 0.0,
        sigma_x: 0.471,
        sigma_y: 0.502,
        rho: 0.920,
        amplitude: 1.0,
        offset: 0.0,
        center_x_err: 0.0,
        center_y_err: 0.0,
        sigma_x_err: 0.0,
        sigma_y_err: 0.0,
        rho_err: 0.0,
        rho_unclamped: None,
    };
    let dec_pub = deconvolve_covariance(&published, 0.120, 0.120)?;
    ck.check_range("quoted temporal rho deconvolved", dec_pub.rho, 0.975, 0.984);

    // Spectral side. The grid must resolve the spectrometer response
    // (step < sigma/2 with sigma_i = 0.44 rad/ps).
    let ax = Axis::centered("omega_s", st.omega_s0(), 48.0, 641, "rad/ps")?;
    let ay = Axis::centered("omega_i", st.omega_i0(), 48.0, 641, "rad/ps")?;
    let jsi = expected_scan(
        ScanKind::Jsi,
        st,
        &FransonSettings::identity(),
        resp,
        ax,
        ay,
        None,
    )?;
    write_map(out, "table1_jsi_blurred", &jsi)?;
    let fit_w = fit_gaussian_2d(&jsi)?;
    ck.check("measured spectral sigma_s", fit_w.sigma_x, 10.65, 0.03);
    ck.check("measured spectral sigma_i", fit_w.sigma_y, 9.57, 0.03);
    ck.check("measured spectral rho", fit_w.rho, -0.9929, 2e-3);
    let dec_w = deconvolve_covariance(&fit_w, resp.spec_sigma_s, resp.spec_sigma_i)?;
    ck.check("deconvolved spectral sigma_s", dec_w.sigma_x, 10.63, 0.03);
    ck.check("deconvolved spectral sigma_i", dec_w.sigma_y, 9.56, 0.03);
    ck.note(&format!(
        "covariance-rule deconvolved spectral rho = {:.4}; the published deconvolved value \
is -0.9942 (different deconvolution procedure, see docs)",
        dec_w.rho
    ));

    // Diagonal and heralded widths of the unblurred model JSI.
    let ax = Axis::centered("omega_s", st.omega_s0(), 48.0, 241, "rad/ps")?;
    let ay = Axis::centered("omega_i", st.omega_i0(), 48.0, 241, "rad/ps")?;
    let raw = expected_scan(
        ScanKind::Jsi,
        st,
        &FransonSettings::identity(),
        &ResponseModel::ideal(),
        ax,
        ay,
        None,
    )?;
    let (dp, _) = diagonal_widths(&raw)?;
    ck.check_range("Delta(omega_s + omega_i)", dp, 1.51, 1.54);
    let (hs, hi) = heralded_widths(&raw, 5)?;
    ck.check("heralded signal width", hs, 1.14, 0.05);
    ck.check("heralded idler width", hi, 1.03, 0.02);

    // Coherence times quoted alongside the table.
    ck.check("signal coherence time", 1.0 / 10.65, 0.094, 5e-4);
    ck.check("idler coherence time", 1.0 / 9.57, 0.105, 6e-4);
    ck.check("two-photon coherence time", 1.0 / 1.531, 0.653, 5e-4);

    ck.finish(out, "table1")
}

fn reproduce_table2(out: &Path) -> CmdResult {
    let res = bell_result_from_counts(&table2_counts())?;
    let mut ck = Checker::new();
    let want = [0.587, 0.659, 0.618, -0.596];
    let labels = ["E(a,b)", "E(a,b')", "E(a',b)", "E(a',b')"];
    for k in 0..4 {
        ck.check(labels[k], res.correlators[k].0, want[k], 1e-3);
    }
    ck.check("S", res.s, 2.459, 1e-3);
    ck.check("sigma_S", res.sigma_s, 0.027, 1e-3);
    ck.check_bool("S > 2 by more than 15 sigma", res.violation_sigmas() > 15.0);
    ck.note(TABLE2_NOTE);
    write_file(&out.join("bell_table2_report.txt"), bell_report(&res, Some(TABLE2_NOTE)).as_bytes())?;
    ck.finish(out, "table2")
}

fn reproduce_fig3(out: &Path) -> CmdResult {
    let mut cfg = RawConfig::parse(FIG3_CFG)?;
    let exp = parse_experiment(&mut cfg, None)?;
    let grids = parse_scan_maps(&mut cfg, (exp.phi_s, exp.phi_i))?;
    cfg.reject_unknown()?;
    ensure_out_dir(out)?;
    let produced = render_maps(&exp, &grids, out)?;
    let get = |name: &str| -> &Histogram2D {
        &produced.iter().find(|(n, _)| n == name).expect("map rendered").1
    };
    let mut ck = Checker::new();

    let (_, _, _, _, rho_w) = get("jsi_before").moments().map_err(CmdError::from)?;
    ck.check_bool("spectral ridge anti-correlated (rho < -0.98)", rho_w < -0.98);
    // The gate blur (0.120 ps on 0.437 ps widths) relaxes the arrival-time
    // correlation from 0.994 to about 0.93.
    let (_, _, _, _, rho_t) = get("jti_before").moments().map_err(CmdError::from)?;
    ck.check_bool("temporal ridge positively correlated (rho > 0.9)", rho_t > 0.9);

    // Phase-sum 0 map: bright center between the two side lobes; phase-sum
    // pi map: dark center.
    let center_val = |m: &Histogram2D| {
        let ix = m.axis_x.count / 2;
        let iy = m.axis_y.count / 2;
        m.get(ix, iy)
    };
    let bright = get("jti_after_1");
    let dark = get("jti_after_2");
    ck.check_bool(
        "sum-phase 0: central lobe is the map maximum",
        (center_val(bright) - bright.max_value()).abs() < 1e-9 * bright.max_value(),
    );
    ck.check_bool(
        "sum-phase pi: central lobe suppressed below 5% of bright",
        center_val(dark) < 0.05 * center_val(bright),
    );
    ck.check_bool(
        "spectral fringes present after the interferometer",
        {
            // Along the anti-diagonal ridge the after-map oscillates.
            let m = get("jsi_after_1");
            let n = m.axis_x.count;
            let mut minv = f64::INFINITY;
            let mut maxv = f64::NEG_INFINITY;
            for k in n / 4..3 * n / 4 {
                let v = m.get(k, n - 1 - k);
                minv = minv.min(v);
                maxv = maxv.max(v);
            }
            maxv > 4.0 * minv.max(1e-300)
        },
    );
    ck.finish(out, "fig3")
}

fn reproduce_fig4(out: &Path, seed: Option<u64>) -> CmdResult {
    let mut cfg = RawConfig::parse(FIG4_CFG)?;
    let exp = parse_experiment(&mut cfg, seed)?;
    let scan = parse_scan_fringe(&mut cfg)?;
    cfg.reject_unknown()?;
    ensure_out_dir(out)?;
    let (records, fit) = run_fringe(&exp, &scan)?;
    let mut buf = Vec::new();
    let rec_path = out.join("fig4_records.csv");
    write_count_records(&records, &mut buf).map_err(|e| io_err(&rec_path, e))?;
    write_file(&rec_path, &buf)?;
    write_file(
        &out.join("fig4_report.txt"),
        fringe_report(&fit, records.len(), exp.count_model.dwell).as_bytes(),
    )?;

    let mut ck = Checker::new();
    ck.check_range("coincidence fringe visibility", fit.visibility, 0.83, 0.89);
    // Singles stay flat: fringe swing below 1e-12 of the mean.
    let mean_s: f64 =
        records.iter().map(|r| r.expected_ss).sum::<f64>() / records.len() as f64;
    let swing_s = records
        .iter()
        .map(|r| (r.expected_ss - mean_s).abs())
        .fold(0.0_f64, f64::max);
    ck.check_bool("signal singles flat (< 1e-12 of mean)", swing_s < 1e-12 * mean_s);
    let mean_i: f64 =
        records.iter().map(|r| r.expected_si).sum::<f64>() / records.len() as f64;
    let swing_i = records
        .iter()
        .map(|r| (r.expected_si - mean_i).abs())
        .fold(0.0_f64, f64::max);
    ck.check_bool("idler singles flat (< 1e-12 of mean)", swing_i < 1e-12 * mean_i);
    // Expected (pre-noise) fringe is an R^2 > 0.999 sinusoid in the sum.
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| ((r.phi_s + r.phi_i).rem_euclid(std::f64::consts::TAU), r.expected_cc))
        .collect();
    let expected_fit = fit_fringe(&pts)?;
    let mean: f64 = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let model = expected_fit.mean_level
                * (1.0
                    + expected_fit.visibility
                        * (p.0 - expected_fit.phase_offset).cos());
            (p.1 - model).powi(2)
        })
        .sum();
    ck.check_bool("expected fringe sinusoidal (R^2 > 0.999)", 1.0 - ss_res / ss_tot > 0.999);
    ck.finish(out, "fig4")
}

fn reproduce_bell_sim(out: &Path, seed: Option<u64>) -> CmdResult {
    let mut cfg = RawConfig::parse(BELL_CFG)?;
    let mut exp = parse_experiment(&mut cfg, seed)?;
    cfg.reject_unknown()?;
    if exp.count_model.dwell <= 0.0 {
        exp.count_model.dwell = 200.0;
    }
    let records = bell_experiment(
        &exp.state,
        exp.tau_s,
        exp.tau_i,
        &exp.count_model,
        &exp.response,
    )?;
    let res = bell_result_from_records(&records)?;
    let mut buf = Vec::new();
    let tbl_path = out.join("bell_sim_counts.csv");
    write_count_records(&records, &mut buf).map_err(|e| io_err(&tbl_path, e))?;
    write_file(&tbl_path, &buf)?;
    write_file(&out.join("bell_sim_report.txt"), bell_report(&res, None).as_bytes())?;
    let mut ck = Checker::new();
    ck.check_bool("simulated S > 2 by >= 10 sigma", res.violation_sigmas() >= 10.0);
    ck.check_range("simulated S", res.s, 2.2, 2.7);
    ck.finish(out, "bell_sim")
}

pub fn cmd_reproduce(target: &str, seed: Option<u64>, out: &Path) -> CmdResult {
    ensure_out_dir(out)?;
    match target {
        "table1" => reproduce_table1(out),
        "table2" => reproduce_table2(out),
        "fig3" => reproduce_fig3(out),
        "fig4" => reproduce_fig4(out, seed),
        "bell-sim" => reproduce_bell_sim(out, seed),
        other => Err(CmdError::Usage(format!(
            "unknown reproduce target `{other}`; valid targets: table1, table2, fig3, fig4, bell-sim"
        ))),
    }
}

// Re-exported for integration tests.

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        for text in [FIG3_CFG, FIG4_CFG, BELL_CFG, TABLE1_CFG] {
            let mut cfg = RawConfig::parse(text).unwrap();
            parse_experiment(&mut cfg, None).unwrap();
        }
    }
}
