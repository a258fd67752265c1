//! Scenario configuration and artifact generation for the `sagnac` binary.
//!
//! Every command writes into `<output_dir>/<command>/` and finishes with a
//! `manifest.txt` holding the effective configuration, seed, crate version
//! and the SHA-256 of every file it emitted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detection::{self, DetectorModel, PairStreamSimulation};
use crate::error::{invalid, Error, Result};
use crate::franson::{self, FransonConfig, FringeModel};
use crate::qkd::{self, DriftEvent, LinkConfig, SessionConfig};
use crate::spectral::{self, ChannelPlan, NoiseSpectrum, SourceParams};
use crate::state::{self, DensityMatrix, SagnacState};
use crate::tomography::{self, MleOptions, TomographySchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Plan,
    Tomography,
    Franson,
    Qkd,
    Timetags,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Plan,
        Command::Tomography,
        Command::Franson,
        Command::Qkd,
        Command::Timetags,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Plan => "plan",
            Command::Tomography => "tomography",
            Command::Franson => "franson",
            Command::Qkd => "qkd",
            Command::Timetags => "timetags",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid("command", format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub pump_channel: i32,
    pub n_pairs: usize,
    pub excluded: BTreeSet<i32>,
    /// Explicit pairs; replaces the nearest-pairs rule when non-empty.
    pub pairs: Vec<(i32, i32)>,
    pub channel_bandwidth_nm: f64,
    /// Two-column CSV of wavelength_nm, counts/s/nm/mW.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_spectrum: Option<PathBuf>,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self {
            pump_channel: 21,
            n_pairs: 20,
            excluded: BTreeSet::from([20, 22]),
            pairs: Vec::new(),
            channel_bandwidth_nm: spectral::DEFAULT_CHANNEL_BANDWIDTH_NM,
            noise_spectrum: None,
        }
    }
}

impl PlanSection {
    pub fn build(&self) -> Result<ChannelPlan> {
        if self.pairs.is_empty() {
            spectral::build_channel_plan(self.pump_channel, self.n_pairs, &self.excluded)
        } else {
            ChannelPlan::from_pairs(self.pump_channel, &self.pairs, &self.excluded)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorsSection {
    pub a: DetectorModel,
    pub b: DetectorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySection {
    /// Werner mixing weight of the emulated channel states.
    pub werner_p: f64,
    /// Coincidence rate for a perfectly transmitting setting.
    pub rate_hz: f64,
    pub integration_s: f64,
    /// Extra relative phase φ per channel step away from the pump.
    pub phase_per_channel_rad: f64,
    pub max_iterations: usize,
    pub bootstrap_replicas: usize,
    /// Write the 16 count records of each pair.
    pub write_counts: bool,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            werner_p: 0.96,
            rate_hz: 1e4,
            integration_s: 100.0,
            phase_per_channel_rad: 0.0,
            max_iterations: 5000,
            bootstrap_replicas: 100,
            write_counts: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FransonSection {
    pub interferometer: FransonConfig,
    pub visibility: f64,
    /// Phase-averaged coincidences per scan point.
    pub mean_counts: f64,
    pub points: usize,
    pub integration_s: f64,
}

impl Default for FransonSection {
    fn default() -> Self {
        Self {
            interferometer: FransonConfig::default(),
            visibility: 0.99,
            mean_counts: 250e3,
            points: 50,
            integration_s: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QkdSection {
    pub link: LinkConfig,
    pub session: SessionConfig,
    /// Replace the session sifted rate with the link-budget prediction.
    pub sifted_rate_from_budget: bool,
    pub events: Vec<DriftEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimetagsSection {
    pub pair_rate_hz: f64,
    pub noise_hz: [f64; 2],
    pub duration_s: f64,
    pub window_ps: u64,
    pub histogram_range_ps: u64,
    pub histogram_bin_ps: u64,
}

impl Default for TimetagsSection {
    fn default() -> Self {
        Self {
            pair_rate_hz: 1e5,
            noise_hz: [0.0, 0.0],
            duration_s: 0.1,
            window_ps: detection::DEFAULT_WINDOW_PS,
            histogram_range_ps: 1000,
            histogram_bin_ps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub pump_power_mw: f64,
    pub source: SourceParams,
    pub plan: PlanSection,
    pub detectors: DetectorsSection,
    pub tomography: TomographySection,
    pub franson: FransonSection,
    pub qkd: QkdSection,
    pub timetags: TimetagsSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: PathBuf::from("out"),
            pump_power_mw: 15.0,
            source: SourceParams::default(),
            plan: PlanSection::default(),
            detectors: DetectorsSection::default(),
            tomography: TomographySection::default(),
            franson: FransonSection::default(),
            qkd: QkdSection::default(),
            timetags: TimetagsSection::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parse and validate; diagnostics carry the offending line.
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|e| {
            let line = match &e {
                Error::InvalidParameter { name, .. } => key_line(text, name),
                _ => None,
            };
            Error::Config {
                path: path.to_path_buf(),
                line: line.unwrap_or(1),
                message: e.to_string(),
            }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        if !(self.pump_power_mw >= 0.0 && self.pump_power_mw.is_finite()) {
            return Err(invalid("pump_power_mw", "must be >= 0"));
        }
        self.plan.build()?;
        if !(self.plan.channel_bandwidth_nm > 0.0) {
            return Err(invalid("channel_bandwidth_nm", "must be > 0"));
        }
        self.detectors.a.validate()?;
        self.detectors.b.validate()?;
        let t = &self.tomography;
        if !(0.0..=1.0).contains(&t.werner_p) {
            return Err(invalid("werner_p", "must lie in [0, 1]"));
        }
        if !(t.rate_hz > 0.0 && t.integration_s > 0.0) {
            return Err(invalid("rate_hz", "rate and integration must be > 0"));
        }
        if !t.phase_per_channel_rad.is_finite() {
            return Err(invalid("phase_per_channel_rad", "must be finite"));
        }
        if t.max_iterations == 0 {
            return Err(invalid("max_iterations", "must be > 0"));
        }
        let f = &self.franson;
        f.interferometer.validate()?;
        if !(0.0..=1.0).contains(&f.visibility) {
            return Err(invalid("visibility", "must lie in [0, 1]"));
        }
        if !(f.mean_counts > 0.0) {
            return Err(invalid("mean_counts", "must be > 0"));
        }
        if f.points < 5 {
            return Err(invalid("points", "at least 5 scan points"));
        }
        if !(f.integration_s > 0.0) {
            return Err(invalid("integration_s", "must be > 0"));
        }
        self.qkd.link.validate()?;
        self.qkd.session.validate()?;
        for e in &self.qkd.events {
            e.validate()?;
        }
        let tt = &self.timetags;
        if !(tt.pair_rate_hz >= 0.0 && tt.duration_s > 0.0) {
            return Err(invalid("duration_s", "timetag duration must be > 0"));
        }
        if tt.noise_hz.iter().any(|n| !(*n >= 0.0)) {
            return Err(invalid("noise_hz", "must be >= 0"));
        }
        if tt.window_ps == 0 || tt.histogram_bin_ps == 0 {
            return Err(invalid("window_ps", "window and histogram bin must be > 0"));
        }
        Ok(())
    }

    /// Replace the plan with explicit `a:b` pairs.
    pub fn override_channels(&mut self, spec: &str) -> Result<()> {
        let pairs = parse_channels(spec)?;
        self.plan.pairs = pairs;
        self.plan.build()?;
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }
}

/// `"19:23,18:24"` → pairs.
pub fn parse_channels(spec: &str) -> Result<Vec<(i32, i32)>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (a, b) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| invalid("channels", format!("`{item}` is not of the form a:b")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<i32>()
                    .map_err(|_| invalid("channels", format!("`{s}` is not a channel number")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub directory: PathBuf,
    /// File name → SHA-256, including nothing for the manifest itself.
    pub files: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

struct Artifacts {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            files: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        out.write_all(&buf)?;
        out.flush()?;
        self.files.insert(name.to_string(), hex::encode(Sha256::digest(&buf)));
        info!("wrote {}", path.display());
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        self.write(name, |buf| {
            buf.extend_from_slice(body.as_bytes());
            Ok(())
        })
    }
}

/// Execute `command` and write its artifacts plus the manifest.
pub fn run_scenario(command: Command, cfg: &ScenarioConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut art = Artifacts::new(cfg.output_dir.join(command.name()))?;
    let warnings = match command {
        Command::Plan => run_plan(cfg, &mut art)?,
        Command::Tomography => run_tomography(cfg, &mut art)?,
        Command::Franson => run_franson(cfg, &mut art)?,
        Command::Qkd => run_qkd(cfg, &mut art)?,
        Command::Timetags => run_timetags(cfg, &mut art)?,
    };
    for w in &warnings {
        warn!("{w}");
    }
    let manifest = manifest_text(command, cfg, &art.files, &warnings);
    fs::write(art.dir.join("manifest.txt"), manifest)?;
    Ok(RunOutcome {
        directory: art.dir,
        files: art.files,
        warnings,
    })
}

fn manifest_text(
    command: Command,
    cfg: &ScenarioConfig,
    files: &BTreeMap<String, String>,
    warnings: &[String],
) -> String {
    let mut s = String::new();
    writeln!(s, "command = \"{}\"", command.name()).unwrap();
    writeln!(s, "version = \"{}\"", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(s, "seed = {}", cfg.seed).unwrap();
    writeln!(s, "warnings = {}", warnings.len()).unwrap();
    writeln!(s, "\n[checksums]").unwrap();
    for (name, sum) in files {
        writeln!(s, "\"{name}\" = \"sha256:{sum}\"").unwrap();
    }
    writeln!(s, "\n# effective configuration").unwrap();
    for line in cfg.to_toml_string().lines() {
        writeln!(s, "# {line}").unwrap();
    }
    s
}

fn load_noise(cfg: &ScenarioConfig) -> Result<Option<NoiseSpectrum>> {
    cfg.plan
        .noise_spectrum
        .as_ref()
        .map(|p| NoiseSpectrum::from_csv(File::open(p)?))
        .transpose()
}

fn run_plan(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let plan = cfg.plan.build()?;
    let noise = load_noise(cfg)?;
    let bw = cfg.plan.channel_bandwidth_nm;
    art.write("plan.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec![
            "signal", "idler", "signal_thz", "idler_thz", "signal_nm", "idler_nm", "pair_rate_hz",
        ];
        if noise.is_some() {
            header.extend(["noise_signal_hz", "noise_idler_hz"]);
        }
        w.write_record(&header)?;
        for p in &plan.pairs {
            let (ls, li) = (
                spectral::itu_channel_wavelength_nm(p.signal),
                spectral::itu_channel_wavelength_nm(p.idler),
            );
            let rate = spectral::pair_rate(cfg.pump_power_mw, bw, ls, &cfg.source)?;
            let mut row = vec![
                p.signal.to_string(),
                p.idler.to_string(),
                format!("{:.1}", spectral::itu_channel_frequency(p.signal)),
                format!("{:.1}", spectral::itu_channel_frequency(p.idler)),
                format!("{ls:.3}"),
                format!("{li:.3}"),
                format!("{rate:.3}"),
            ];
            if let Some(n) = &noise {
                row.push(format!("{:.3}", n.channel_noise_rate(ls, bw, cfg.pump_power_mw)));
                row.push(format!("{:.3}", n.channel_noise_rate(li, bw, cfg.pump_power_mw)));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    })?;

    // emission envelope over the plan's span
    let (lo, hi) = (
        spectral::itu_channel_wavelength_nm(plan.pairs.iter().map(|p| p.idler).max().unwrap() + 2),
        spectral::itu_channel_wavelength_nm(plan.pairs.iter().map(|p| p.signal).min().unwrap() - 2),
    );
    art.write("spectrum.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["wavelength_nm", "relative_density", "pair_rate_per_nm_hz"])?;
        let n = 401;
        for k in 0..n {
            let l = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let d = spectral::spdc_spectral_density(l, &cfg.source);
            let r = spectral::pair_rate(cfg.pump_power_mw, 1.0, l, &cfg.source)?;
            w.write_record([format!("{l:.4}"), format!("{d:.6}"), format!("{r:.3}")])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(Vec::new())
}

fn channel_states(cfg: &ScenarioConfig, plan: &ChannelPlan) -> Result<Vec<DensityMatrix>> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    plan.pairs
        .iter()
        .map(|p| {
            let phi = cfg.tomography.phase_per_channel_rad * p.distance_from(plan.pump_channel) as f64;
            let pure = state::sagnac_state(&SagnacState::new(a, a, phi)?)?;
            state::werner_mix(cfg.tomography.werner_p, &pure)
        })
        .collect()
}

fn run_tomography(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let plan = cfg.plan.build()?;
    let schedule = TomographySchedule::canonical();
    let states = channel_states(cfg, &plan)?;
    let t = &cfg.tomography;
    let opts = MleOptions {
        max_iterations: t.max_iterations,
        bootstrap_replicas: t.bootstrap_replicas,
        bootstrap_seed: 0,
    };
    let sweep = tomography::run_channel_sweep(&states, &plan, &schedule, t.rate_hz, t.integration_s, cfg.seed, &opts)?;

    let mut warnings = Vec::new();
    let mut report = String::new();
    art.write("fidelity.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            "signal", "idler", "fidelity", "fidelity_sigma", "purity", "purity_sigma", "iterations", "status",
        ])?;
        for (pair, outcome) in &sweep.results {
            let (res, status) = match outcome {
                Ok(r) => (Some(r), "ok".to_string()),
                Err(Error::NotConverged { best, .. }) => (Some(best.as_ref()), "not_converged".to_string()),
                Err(e) => (None, format!("failed: {e}")),
            };
            if status != "ok" {
                warnings.push(format!("channel pair {pair}: {status}"));
            }
            let num = |f: fn(&tomography::TomographyResult) -> f64| res.map_or(String::new(), |r| format!("{:.6}", f(r)));
            w.write_record([
                pair.signal.to_string(),
                pair.idler.to_string(),
                num(|r| r.fidelity),
                num(|r| r.fidelity_sigma),
                num(|r| r.purity),
                num(|r| r.purity_sigma),
                res.map_or(String::new(), |r| r.iterations.to_string()),
                status.clone(),
            ])?;
            writeln!(report, "[[channel]]\nsignal = {}\nidler = {}\nstatus = \"{status}\"", pair.signal, pair.idler)
                .unwrap();
            if let Some(r) = res {
                report.push_str(&r.to_report_string());
            }
            report.push('\n');
        }
        w.flush()?;
        Ok(())
    })?;

    let s = sweep.summary();
    let head = format!(
        "[summary]\npairs = {}\nsucceeded = {}\nfailed = {}\nmin_fidelity = {:.6}\nmean_fidelity = {:.6}\n\
         min_purity = {:.6}\nmean_purity = {:.6}\n\n",
        plan.len(),
        s.succeeded,
        s.failed,
        s.min_fidelity,
        s.mean_fidelity,
        s.min_purity,
        s.mean_purity
    );
    art.text("tomography_report.txt", &(head + &report))?;

    if t.write_counts {
        for (k, (pair, rho)) in plan.pairs.iter().zip(&states).enumerate() {
            // same stream the sweep used for this pair
            let seed = cfg.seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let counts = tomography::simulate_tomography_counts(rho, &schedule, t.rate_hz, t.integration_s, seed)?;
            art.write(&format!("counts_{}_{}.csv", pair.signal, pair.idler), |buf| {
                tomography::write_counts_csv(buf, &counts, &schedule)
            })?;
        }
    }
    Ok(warnings)
}

fn run_franson(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let f = &cfg.franson;
    let check = franson::validate_fsr(&f.interferometer);
    let mut warnings = Vec::new();
    if check.jitter_warning {
        warnings.push(check.diagnostic.clone());
    }
    let mut report = format!(
        "[interferometer]\nadmissible = {}\ndelay_ps = {:.3}\njitter_warning = {}\ndiagnostic = \"{}\"\n",
        check.admissible, check.delay_ps, check.jitter_warning, check.diagnostic
    );
    if !check.admissible {
        art.text("franson_report.txt", &report)?;
        return Err(invalid("fsr_hz", check.diagnostic));
    }
    // a full period sampled without repeating the endpoint
    let phases = franson::uniform_phases(f.points);
    let model = FringeModel {
        integration_s: f.integration_s,
        ..FringeModel::new(f.visibility, f.mean_counts)
    };
    let scan = model.sample(&phases, cfg.seed)?;
    art.write("fringe.csv", |buf| franson::write_scan_csv(buf, &scan))?;
    let fit = franson::fit_visibility(&scan)?;
    let qber = franson::visibility_to_qber(fit.visibility.clamp(0.0, 1.0))?;
    write!(
        report,
        "\n[fit]\nmethod = \"{:?}\"\nvisibility = {:.6}\nvisibility_sigma = {:.6}\nphase0_rad = {:.6}\nqber_x = {:.6}\n",
        fit.method, fit.visibility, fit.visibility_sigma, fit.phase0, qber
    )
    .unwrap();
    art.text("franson_report.txt", &report)?;
    Ok(warnings)
}

fn run_qkd(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let q = &cfg.qkd;
    let (s, _) = q.link.channel_pair;
    let center = spectral::itu_channel_wavelength_nm(s);
    let generated = spectral::pair_rate(cfg.pump_power_mw, cfg.plan.channel_bandwidth_nm, center, &cfg.source)?;
    let coupled = generated * cfg.source.smf_coupling * cfg.source.smf_coupling;
    let budget = qkd::link_budget(&q.link, coupled, &cfg.detectors.a)?;

    let mut session = q.session;
    if q.sifted_rate_from_budget {
        session.sifted_rate_hz = budget.sifted_rate_hz;
    }
    let report = qkd::simulate_session(&session, &q.events, cfg.seed)?;
    art.write("session.csv", |buf| report.write_csv(buf))?;
    let expected = qkd::secret_key_rate(
        session.sifted_rate_hz,
        (1.0 - session.base_visibility_x) / 2.0,
        session.base_error_z,
        session.f_ec,
    )?;
    let text = format!(
        "[link]\nchannel_pair = [{}, {}]\ngenerated_pair_rate_hz = {:.3}\ncoupled_pair_rate_hz = {:.3}\n\
         transmittance = [{:.6}, {:.6}]\ncoincidence_rate_hz = {:.3}\nsifted_rate_hz = {:.3}\n\
         singles_hz = [{:.3}, {:.3}]\n\n[session]\nsifted_rate_hz = {:.3}\nexpected_skr_bps = {:.3}\n\n{}",
        q.link.channel_pair.0,
        q.link.channel_pair.1,
        generated,
        coupled,
        budget.transmittance[0],
        budget.transmittance[1],
        budget.coincidence_rate_hz,
        budget.sifted_rate_hz,
        budget.singles_hz[0],
        budget.singles_hz[1],
        session.sifted_rate_hz,
        expected,
        report.summary_string()
    );
    art.text("qkd_report.txt", &text)?;
    let mut warnings = Vec::new();
    if report.summary.zero_skr_bins > 0 {
        warnings.push(format!("{} session bins produced no key", report.summary.zero_skr_bins));
    }
    Ok(warnings)
}

fn run_timetags(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let tt = &cfg.timetags;
    let mut sim = PairStreamSimulation::new(tt.pair_rate_hz, tt.duration_s, [cfg.detectors.a, cfg.detectors.b]);
    sim.noise_hz = tt.noise_hz;
    let (a, b) = sim.run(cfg.seed)?;
    art.write("timetags.bin", |buf| detection::write_timetags(buf, &[&a, &b]))?;
    art.write("timetags.csv", |buf| detection::write_timetags_csv(buf, &[&a, &b]))?;
    let hist = detection::delay_histogram(&a, &b, tt.histogram_range_ps, tt.histogram_bin_ps)?;
    art.write("delay_histogram.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["delay_ps", "counts"])?;
        for (d, n) in hist {
            w.write_record([d.to_string(), n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let c = detection::count_coincidences(&a, &b, tt.window_ps, 0)?;
    let predicted = detection::accidental_rate(a.rate_hz(), b.rate_hz(), tt.window_ps as f64 * 1e-12) * tt.duration_s;
    let text = format!(
        "[coincidences]\nsingles_a = {}\nsingles_b = {}\nwindow_ps = {}\ncoincidences = {}\n\
         accidental_estimate = {:.3}\naccidental_predicted = {:.3}\ncar = {:.3}\n",
        a.len(),
        b.len(),
        c.window_ps,
        c.true_window_counts,
        c.accidental_estimate,
        predicted,
        c.car()
    );
    art.text("coincidence_report.txt", &text)?;
    Ok(Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::from_toml_str(&text, Path::new("echo.toml")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn syntax_errors_report_line() {
        let text = "seed = 3\n\n[source]\nspdc_fwhm_nm = = 2\n";
        match ScenarioConfig::from_toml_str(text, Path::new("bad.toml")) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_report_line() {
        let text = "seed = 3\n[tomography]\nwerner_p = 0.9\nwerner_q = 0.1\n";
        match ScenarioConfig::from_toml_str(text, Path::new("bad.toml")) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors_report_line() {
        let text = "seed = 3\n[tomography]\nrate_hz = 10.0\nwerner_p = 1.5\n";
        match ScenarioConfig::from_toml_str(text, Path::new("bad.toml")) {
            Err(Error::Config { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("werner_p"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn channel_override() {
        assert_eq!(parse_channels("19:23, 0:42").unwrap(), vec![(19, 23), (0, 42)]);
        assert!(parse_channels("19-23").is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.override_channels("0:42,19:23").unwrap();
        let plan = cfg.plan.build().unwrap();
        assert_eq!(plan.pairs[0].signal, 19);
        assert!(cfg.override_channels("20:22").is_err());
        assert!(cfg.override_channels("19:24").is_err());
    }

    #[test]
    fn commands_parse() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("sweep".parse::<Command>().is_err());
    }

    #[test]
    fn drift_events_in_config() {
        let text = "[[qkd.events]]\nkind = \"outage\"\nstart_s = 10.0\nduration_s = 5.0\n";
        let cfg = ScenarioConfig::from_toml_str(text, Path::new("e.toml")).unwrap();
        assert_eq!(cfg.qkd.events.len(), 1);
        let bad = "[[qkd.events]]\nkind = \"outage\"\nstart_s = 10.0\nduration_s = -5.0\n";
        assert!(ScenarioConfig::from_toml_str(bad, Path::new("e.toml")).is_err());
    }
}
