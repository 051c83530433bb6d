//! One function per subcommand: resolve the config, run, and return the
//! files to write.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use snv_core::device::{BField, DeviceParams};
use snv_core::fitting::{self, models, Dataset, FitError, FitOptions, FitResult};
use snv_core::levels::{self, JahnTellerStrain, StrainPlacement};
use snv_core::protocols::{self, noise, NoiseModel, NuclearSpinModel, QubitContext};
use snv_core::raman::{self, RamanDriveParams};
use snv_core::units;

use crate::config::{Config, ConfigError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] snv_core::Error),
    #[error("fit failed: {0}")]
    Fit(#[from] FitError),
    #[error("{0}")]
    Input(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    /// 1 for bad configuration or input, 2 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        use snv_core::Error as E;
        let fit_input = |e: &FitError| {
            matches!(
                e,
                FitError::TooFewPoints { .. }
                    | FitError::BadInitial { .. }
                    | FitError::Shape(_)
                    | FitError::UnknownModel(_)
                    | FitError::UnknownParameter(_)
            )
        };
        match self {
            RunError::Config(_) | RunError::Input(_) | RunError::Io { .. } => 1,
            RunError::Core(E::InvalidParameter { .. } | E::ZeroDetuning | E::InvalidSequence(_)) => 1,
            RunError::Core(E::Fit(e)) | RunError::Fit(e) if fit_input(e) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, RunError>;

pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Self { name: name.into(), contents: contents.into() }
    }
}

/// Files produced by a run plus a short report for the terminal (also
/// saved as `<command>.txt`).
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| clean(lo + (hi - lo) * k as f64 / (n - 1) as f64)).collect(),
    }
}

fn stepped(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || hi < lo {
        return Err(RunError::Input(format!("empty grid {lo}..{hi} in steps of {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| clean(lo + step * k as f64)).collect())
}

/// Rounds away binary noise so grids print as typed (0.025, not
/// 0.025000000000000001).
fn clean(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// n phases over [0, max) without the endpoint.
fn phases(max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| max * k as f64 / n as f64).collect()
}

pub fn device(cfg: &Config) -> Result<DeviceParams> {
    let s = "device";
    let dev = DeviceParams {
        lambda_so_ground_ghz: cfg.f64(s, "lambda_so_ground_ghz")?,
        lambda_so_excited_ghz: cfg.f64(s, "lambda_so_excited_ghz")?,
        gamma_mhz: cfg.f64(s, "gamma_mhz")?,
        p_sat_nw: cfg.f64(s, "p_sat_nw")?,
        eta: cfg.f64(s, "eta")?,
        gyro_e_ghz_per_t: cfg.f64(s, "gyro_e_ghz_per_t")?,
        t2_star_us: cfg.f64(s, "t2_star_us")?,
        hyperfine_a_mhz: cfg.f64(s, "hyperfine_a_mhz")?,
        b_field: BField::new(cfg.f64(s, "b_field_t")?, cfg.f64(s, "b_polar_deg")?),
    };
    dev.validate()?;
    Ok(dev)
}

pub fn noise_model(cfg: &Config, dev: &DeviceParams) -> Result<NoiseModel> {
    let s = "noise";
    let drift = cfg.f64(s, "drift_time_us")?;
    let leak_power = cfg.f64(s, "leak_power_nw")?;
    let model = NoiseModel {
        quasi_static_sigma: if cfg.bool(s, "quasi_static")? { noise::quasi_static_sigma(dev.t2_star_us) } else { 0.0 },
        drift_sigma: if drift.is_finite() && drift > 0.0 { noise::drift_sigma(units::us(drift)) } else { 0.0 },
        ou_sigma: units::mhz(cfg.f64(s, "ou_sigma_mhz")?),
        ou_tau_c: units::us(cfg.f64(s, "ou_tau_c_us")?),
        leak_dephasing: if leak_power > 0.0 {
            noise::leak_dephasing(&RamanDriveParams::new(cfg.f64(s, "leak_delta_mhz")?, leak_power), dev)?
        } else {
            0.0
        },
        gamma1: units::per_us(cfg.f64(s, "gamma1_per_us")?),
    };
    model.validate()?;
    Ok(model)
}

pub fn context(cfg: &Config) -> Result<QubitContext> {
    let dev = device(cfg)?;
    let noise = noise_model(cfg, &dev)?;
    let mut ctx = QubitContext::new(dev, noise);
    ctx.init_fidelity = cfg.f64("noise", "init_fidelity")?;
    if !(0.0..=1.0).contains(&ctx.init_fidelity) {
        return Err(RunError::Input(format!("noise.init_fidelity = {} must lie in [0, 1]", ctx.init_fidelity)));
    }
    Ok(ctx)
}

fn nuclear(cfg: &Config, dev: &DeviceParams) -> Result<NuclearSpinModel> {
    Ok(if cfg.bool("noise", "nuclear_spin")? { NuclearSpinModel::new(dev.hyperfine_a_mhz) } else { NuclearSpinModel::none() })
}

fn drive(cfg: &Config, section: &str) -> Result<RamanDriveParams> {
    Ok(RamanDriveParams::new(cfg.f64(section, "delta_mhz")?, cfg.f64(section, "power_nw")?))
}

fn fit_text(fit: &FitResult) -> String {
    fit.to_text()
}

pub fn levels(cfg: &Config) -> Result<RunOutput> {
    let dev = device(cfg)?;
    let c = match cfg.auto_f64("levels", "strain_ghz")? {
        Some(c) => c,
        None => levels::calibrate_strain(&dev, dev.eta, StrainPlacement::Ground)?,
    };
    let strain = JahnTellerStrain::symmetric(c);
    let ground = levels::diagonalize(&levels::build_ground_hamiltonian(&dev, &strain)?)?;
    let excited = levels::diagonalize(&levels::build_excited_hamiltonian(&dev, &JahnTellerStrain::default())?)?;
    let mut csv = String::from("manifold,label,energy_GHz\n");
    for es in [&ground, &excited] {
        for (label, e) in es.labels.iter().zip(es.eigenvalues) {
            let _ = writeln!(csv, "{:?},{label},{:.9}", es.manifold, units::to_ghz(e));
        }
    }
    let table = levels::transition_strengths(&ground, &excited, &levels::DipoleOperators::snv());
    let eta = levels::branching_ratio(&dev, &strain, StrainPlacement::Ground)?;
    let qubit = units::to_ghz(levels::qubit_frequency(&dev, &strain)?);
    let mw = levels::mw_rabi_element(&strain, dev.lambda_so_ground_ghz);
    let summary = format!(
        "strain_c_GHz = {c:.6}\neta = {eta:.4}\nqubit_frequency_GHz = {qubit:.6}\nmw_element = {:.6e} (small-strain {:.6e})\n",
        mw.exact, mw.approx
    );
    Ok(RunOutput { artifacts: vec![Artifact::new("levels.csv", csv), Artifact::new("transitions.csv", table.to_csv())], summary })
}

pub fn cpt(cfg: &Config) -> Result<RunOutput> {
    let dev = device(cfg)?;
    let s = "cpt";
    let cpt = protocols::CptConfig {
        scale_mhz: cfg.f64(s, "scale_mhz")?,
        gamma_mhz: dev.gamma_mhz,
        delta_mhz: cfg.f64(s, "single_photon_mhz")?,
        dephasing_mhz: cfg.f64(s, "dephasing_mhz")?,
        relaxation_mhz: cfg.f64(s, "relaxation_mhz")?,
        eta: dev.eta,
    };
    let x = linspace(cfg.f64(s, "scan_min_mhz")?, cfg.f64(s, "scan_max_mhz")?, cfg.usize(s, "points")?);
    let scan = protocols::run_cpt(&x, &cpt, &dev, &nuclear(cfg, &dev)?)?;
    let dips = protocols::dark_dips(&x, &scan.values);
    let mut summary = format!("dark_dips_MHz = {}\n", dips.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>().join(", "));
    if let [a, b] = dips[..] {
        let _ = writeln!(summary, "dip_separation_MHz = {:.4}", b - a);
    }
    Ok(RunOutput { artifacts: vec![Artifact::new("cpt.csv", scan.to_csv())], summary })
}

pub fn odmr(cfg: &Config) -> Result<RunOutput> {
    let ctx = context(cfg)?;
    let s = "odmr";
    let odmr = protocols::OdmrConfig {
        drive: RamanDriveParams { duration_us: cfg.f64(s, "duration_us")?, ..drive(cfg, s)? },
        nodes: cfg.usize(s, "nodes")?,
    };
    let x = linspace(cfg.f64(s, "scan_min_mhz")?, cfg.f64(s, "scan_max_mhz")?, cfg.usize(s, "points")?);
    let scan = protocols::run_odmr(&x, &odmr, &ctx, &nuclear(cfg, &ctx.dev)?)?;
    let pair = fitting::fit_lorentzian_pair(&x, &scan.values, None)?;
    let summary = format!(
        "splitting_MHz = {:.4} +/- {:.4}\nmean_fwhm_MHz = {:.4} +/- {:.4}\n",
        pair.splitting, pair.splitting_err, pair.average_width, pair.average_width_err
    );
    Ok(RunOutput { artifacts: vec![Artifact::new("odmr.csv", scan.to_csv()), Artifact::new("odmr_fit.txt", fit_text(&pair.fit))], summary })
}

fn rabi_setup(cfg: &Config, section: &str) -> Result<(protocols::RabiConfig, QubitContext)> {
    let mut ctx = context(cfg)?;
    if section == "rabi" {
        ctx.calibration.rabi_mhz = cfg.auto_f64(section, "rabi_mhz")?;
        ctx.calibration.gamma_os_per_us = cfg.auto_f64(section, "gamma_os_per_us")?;
    }
    Ok((protocols::RabiConfig { drive: drive(cfg, section)?, nodes: cfg.usize(section, "nodes")? }, ctx))
}

pub fn rabi(cfg: &Config) -> Result<RunOutput> {
    let (rabi, ctx) = rabi_setup(cfg, "rabi")?;
    let t = linspace(0.0, cfg.f64("rabi", "t_max_us")?, cfg.usize("rabi", "points")?);
    let scan = protocols::run_rabi(&t, &rabi, &ctx)?;
    let eff = raman::effective_two_level(&rabi.drive, &ctx.dev, 0.0)?;
    let summary = format!(
        "closed_form_rabi_MHz = {:.4}\nclosed_form_gamma_os_per_us = {:.4}\npi_half_us = {:.5}\n",
        eff.rabi_mhz,
        eff.scatter_per_us,
        protocols::pi_half_duration_us(&rabi.drive, &ctx)?
    );
    Ok(RunOutput { artifacts: vec![Artifact::new("rabi.csv", scan.to_csv())], summary })
}

pub fn phase_sweep(cfg: &Config) -> Result<RunOutput> {
    let s = "phase_sweep";
    let (rabi, ctx) = rabi_setup(cfg, s)?;
    let phi = linspace(0.0, cfg.f64(s, "phase_max_pi")? * PI, cfg.usize(s, "points")?);
    let scan = protocols::run_phase_sweep(&phi, &rabi, &ctx)?;
    let v = fitting::extract_visibility(&phi, &scan.values, None)?;
    let summary = format!("visibility = {:.5} +/- {:.2e}\n", v.value, v.error);
    Ok(RunOutput { artifacts: vec![Artifact::new("phase_sweep.csv", scan.to_csv())], summary })
}

fn ramsey_config(cfg: &Config) -> Result<protocols::RamseyConfig> {
    let s = "ramsey";
    Ok(protocols::RamseyConfig {
        drive: drive(cfg, s)?,
        t_pi2_us: cfg.f64(s, "t_pi2_us")?,
        serrodyne_mhz: cfg.f64(s, "serrodyne_mhz")?,
        ac_stark_mhz: cfg.f64(s, "ac_stark_mhz")?,
        nodes: cfg.usize(s, "nodes")?,
    })
}

pub fn ramsey(cfg: &Config) -> Result<RunOutput> {
    let s = "ramsey";
    let ctx = context(cfg)?;
    let ramsey = ramsey_config(cfg)?;
    let taus = stepped(0.0, cfg.f64(s, "tau_max_us")?, cfg.f64(s, "tau_step_us")?)?;
    let deltas = stepped(cfg.f64(s, "detuning_min_mhz")?, cfg.f64(s, "detuning_max_mhz")?, cfg.f64(s, "detuning_step_mhz")?)?;
    let scan = protocols::run_ramsey(&taus, &deltas, &ramsey, &ctx)?;

    let mut rows = String::from("delta_MHz,freq_MHz,freq_err,t2_star_us,t2_star_err,ac_stark_MHz\n");
    for (j, d) in deltas.iter().enumerate() {
        let y: Vec<f64> = (0..taus.len()).map(|i| scan.values[i * deltas.len() + j]).collect();
        let fit = fitting::fit_ramsey_trace(&taus, &y, None)?;
        let f = fit.get("freq");
        let _ = writeln!(
            rows,
            "{d},{f:.6},{:.3e},{:.6},{:.3e},{:.6}",
            fit.uncertainty("freq").unwrap_or(f64::NAN),
            fit.get("t2_star"),
            fit.uncertainty("t2_star").unwrap_or(f64::NAN),
            f - ramsey.serrodyne_mhz - d
        );
    }
    let summary = rows.clone();
    Ok(RunOutput { artifacts: vec![Artifact::new("ramsey.csv", scan.to_csv()), Artifact::new("ramsey_fits.csv", rows)], summary })
}

fn decoupling(cfg: &Config, section: &str, kind: protocols::DecouplingKind) -> Result<RunOutput> {
    let ctx = context(cfg)?;
    let dd = protocols::DecouplingConfig {
        kind,
        drive: drive(cfg, section)?,
        shots: cfg.usize(section, "shots")?,
        seed: cfg.u64("run", "seed")?,
    };
    let taus = linspace(cfg.f64(section, "tau_min_us")?, cfg.f64(section, "tau_max_us")?, cfg.usize(section, "points")?);
    let phi = phases(cfg.f64(section, "phase_max_pi")? * PI, cfg.usize(section, "phases")?);
    let result = protocols::run_decoupling(&taus, &phi, &dd, &ctx)?;
    let fit = fitting::fit_decay_trace(&taus, &result.visibility_values(), None)?;
    let summary = format!(
        "t2_us = {:.3} +/- {:.3}\nn = {:.3} +/- {:.3}\n",
        fit.get("t2"),
        fit.uncertainty("t2").unwrap_or(f64::NAN),
        fit.get("n"),
        fit.uncertainty("n").unwrap_or(f64::NAN)
    );
    Ok(RunOutput {
        artifacts: vec![
            Artifact::new(format!("{section}.csv"), result.scan.to_csv()),
            Artifact::new(format!("{section}_visibility.csv"), result.trace.to_csv()),
            Artifact::new(format!("{section}_fit.txt"), fit_text(&fit)),
        ],
        summary,
    })
}

pub fn echo(cfg: &Config) -> Result<RunOutput> {
    decoupling(cfg, "echo", protocols::DecouplingKind::Hahn)
}

pub fn cpmg(cfg: &Config) -> Result<RunOutput> {
    decoupling(cfg, "cpmg", protocols::DecouplingKind::Cpmg2)
}

pub fn t1(cfg: &Config) -> Result<RunOutput> {
    let ctx = context(cfg)?;
    let delays = linspace(0.0, cfg.f64("t1", "delay_max_ms")?, cfg.usize("t1", "points")?);
    let scan = protocols::run_t1(&delays, &ctx)?;
    let start = (delays.last().copied().unwrap_or(1.0) / 4.0).max(1e-6);
    let fit = fitting::least_squares(&models::t1_recovery().with_initials(&[start]), &Dataset::new(delays, scan.values.clone()))?;
    let summary = format!("t1_ms = {:.4} +/- {:.2e}\n", fit.get("t1"), fit.uncertainty("t1").unwrap_or(f64::NAN));
    Ok(RunOutput { artifacts: vec![Artifact::new("t1.csv", scan.to_csv()), Artifact::new("t1_fit.txt", fit_text(&fit))], summary })
}

pub fn init_rate(cfg: &Config) -> Result<RunOutput> {
    let dev = device(cfg)?;
    let s = "init_rate";
    let trace_cfg = protocols::InitTraceConfig {
        t_max_us: cfg.f64(s, "t_max_us")?,
        points: cfg.usize(s, "points")?,
        amplitude: cfg.f64(s, "amplitude")?,
        background: cfg.f64(s, "background")?,
        shot_noise: cfg.bool(s, "shot_noise")?,
        seed: cfg.u64("run", "seed")?,
    };
    let traces = protocols::run_init_trace(&cfg.f64_list(s, "powers_nw")?, &trace_cfg, &dev)?;
    let (decays, sat) = traces.fit_saturation(dev.gamma_mhz)?;
    let mut rates = String::from("power_nW,tau_us,tau_err\n");
    for (p, f) in traces.powers().iter().zip(&decays) {
        let _ = writeln!(rates, "{p},{:.6},{:.3e}", f.get("tau"), f.uncertainty("tau").unwrap_or(f64::NAN));
    }
    let summary = format!(
        "p_sat_nW = {:.4} +/- {:.3}\neta = {:.3} +/- {:.3}\n",
        sat.get("p_sat"),
        sat.uncertainty("p_sat").unwrap_or(f64::NAN),
        sat.get("eta"),
        sat.uncertainty("eta").unwrap_or(f64::NAN)
    );
    Ok(RunOutput {
        artifacts: vec![
            Artifact::new("init_rate.csv", traces.scan.to_csv()),
            Artifact::new("init_rate_decays.csv", rates),
            Artifact::new("init_rate_fit.txt", fit_text(&sat)),
        ],
        summary,
    })
}

pub fn fidelity_map(cfg: &Config) -> Result<RunOutput> {
    let dev = device(cfg)?;
    let s = "fidelity_map";
    let (lo, hi, n) = (cfg.f64(s, "s_min")?, cfg.f64(s, "s_max")?, cfg.usize(s, "s_points")?);
    if !(lo > 0.0 && hi >= lo) {
        return Err(RunError::Input(format!("fidelity_map.s_min/s_max must satisfy 0 < {lo} <= {hi}")));
    }
    let sats: Vec<f64> = linspace(lo.ln(), hi.ln(), n).into_iter().map(|v| format!("{:.9e}", v.exp()).parse().unwrap_or(v.exp())).collect();
    let deltas = linspace(cfg.f64(s, "delta_min_mhz")?, cfg.f64(s, "delta_max_mhz")?, cfg.usize(s, "delta_points")?);
    let map = raman::fidelity_map(&sats, &deltas, &dev)?;
    let mut summary = String::from("s,best_delta_MHz,optimal_delta_MHz,fidelity\n");
    for (i, sv) in sats.iter().enumerate() {
        let j = map.argmax_delta(i);
        let _ = writeln!(summary, "{sv},{},{:.3},{:.6}", deltas[j], raman::optimal_detuning_mhz(*sv, &dev), map.at(i, j));
    }
    Ok(RunOutput { artifacts: vec![Artifact::new("fidelity_map.csv", map.to_csv())], summary })
}

/// Reads the named (or positional) columns of a CSV file.
fn read_columns(path: &Path, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let bad = |m: String| RunError::Input(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let index: Vec<usize> =
        names.iter().map(|n| headers.iter().position(|h| h == n).ok_or_else(|| bad(format!("no column `{n}`")))).collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); index.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        for (col, &i) in cols.iter_mut().zip(&index) {
            let field = record.get(i).unwrap_or("");
            col.push(field.trim().parse().map_err(|_| bad(format!("row {}: `{field}` is not a number", row + 2)))?);
        }
    }
    Ok(cols)
}

fn csv_headers(path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    Ok(headers.iter().map(str::to_string).collect())
}

fn parse_initials(raw: &str) -> Result<Vec<(String, f64)>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (k, v) = pair.split_once('=').ok_or_else(|| RunError::Input(format!("fit.initial: `{pair}` is not name=value")))?;
            let v = v.trim().parse().map_err(|_| RunError::Input(format!("fit.initial: `{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

pub fn fit(cfg: &Config) -> Result<RunOutput> {
    let s = "fit";
    let model_name = cfg.raw(s, "model").to_string();
    let input = cfg.raw(s, "input");
    if input.is_empty() {
        return Err(RunError::Input("fit needs an input CSV (fit.input or --input)".into()));
    }
    let path = Path::new(input);
    let headers = csv_headers(path)?;
    let dim = if model_name == "ramsey-2d" { 2 } else { 1 };
    let x_names: Vec<String> = match cfg.raw(s, "x") {
        "auto" => headers.iter().take(dim).cloned().collect(),
        list => list.split(',').map(|v| v.trim().to_string()).collect(),
    };
    if x_names.len() != dim {
        return Err(RunError::Input(format!("model `{model_name}` needs {dim} x column(s), got {}", x_names.len())));
    }
    let y_name = match cfg.raw(s, "y") {
        "auto" => headers.get(dim).cloned().ok_or_else(|| RunError::Input(format!("{input}: no value column")))?,
        name => name.to_string(),
    };
    let sigma_name = match cfg.raw(s, "sigma") {
        "none" | "" => None,
        name => Some(name.to_string()),
    };
    let mut names = x_names.clone();
    names.push(y_name);
    names.extend(sigma_name.clone());
    let cols = read_columns(path, &names)?;
    let y = cols[dim].clone();
    let sigma = sigma_name.map(|_| cols[dim + 1].clone());
    let x: Vec<f64> = if dim == 1 { cols[0].clone() } else { (0..y.len()).flat_map(|i| [cols[0][i], cols[1][i]]).collect() };
    let initials = parse_initials(cfg.raw(s, "initial"))?;

    let fit = if model_name == "rabi-master" {
        let mut rabi = fitting::RabiFitConfig::new(context(cfg)?);
        rabi.rabi = rabi_setup(cfg, "rabi")?.0;
        for (k, v) in &initials {
            match k.as_str() {
                "rabi" => rabi.initial_rabi_mhz = *v,
                "gamma1" => rabi.initial_gamma1_per_us = *v,
                "gamma2" => rabi.initial_gamma2_per_us = *v,
                other => return Err(FitError::UnknownParameter(other.into()).into()),
            }
        }
        fitting::fit_rabi_master(&x, &y, sigma.as_deref(), &rabi)?
    } else {
        let dev = device(cfg)?;
        let model = models::from_name(&model_name, &dev, cfg.f64(s, "t_pi2_us")?, cfg.f64(s, "serrodyne_mhz")?)?;
        let mut data = Dataset::multi(x, dim, y);
        if let Some(sig) = sigma {
            data = data.with_sigma(sig);
        }
        let opts = FitOptions { overrides: initials, ..FitOptions::default() };
        fitting::least_squares_with(&model, &data, &opts)?
    };
    Ok(RunOutput {
        artifacts: vec![Artifact::new("fit.txt", fit.to_text()), Artifact::new("fit.kv", fit.to_key_values())],
        summary: fit.to_text(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_clean() {
        assert_eq!(stepped(0.0, 0.1, 0.025).unwrap(), vec![0.0, 0.025, 0.05, 0.075, 0.1]);
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        assert_eq!(phases(4.0, 4), vec![0.0, 1.0, 2.0, 3.0]);
        assert!(stepped(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn defaults_build_physical_context() {
        let ctx = context(&Config::defaults()).unwrap();
        assert!((ctx.noise.leak_dephasing - 5083.0).abs() < 10.0);
        assert_eq!(ctx.init_fidelity, 0.996);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(RunError::Input("x".into()).exit_code(), 1);
        assert_eq!(RunError::Core(snv_core::Error::ZeroDetuning).exit_code(), 1);
        assert_eq!(RunError::Core(snv_core::Error::NoDissipation).exit_code(), 2);
        assert_eq!(RunError::Fit(FitError::Singular { direction: "a".into() }).exit_code(), 2);
        assert_eq!(RunError::Fit(FitError::UnknownModel("a".into())).exit_code(), 1);
    }
}
