//! Energy-time analysis with an unbalanced (Franson) interferometer pair.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FransonConfig {
    /// Pair (pump) coherence bandwidth Δν_p.
    pub pump_linewidth_hz: f64,
    pub fsr_hz: f64,
    /// Single-photon bandwidth Δν_s.
    pub photon_bandwidth_hz: f64,
    pub detector_jitter_ps: f64,
    /// Fraction of coincidences in the interfering central peak.
    pub postselection_factor: f64,
}

impl Default for FransonConfig {
    fn default() -> Self {
        Self {
            pump_linewidth_hz: 1e3,
            fsr_hz: 1e9,
            photon_bandwidth_hz: 100e9,
            detector_jitter_ps: 50.0,
            postselection_factor: 0.5,
        }
    }
}

impl FransonConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pump_linewidth_hz", self.pump_linewidth_hz),
            ("fsr_hz", self.fsr_hz),
            ("photon_bandwidth_hz", self.photon_bandwidth_hz),
            ("detector_jitter_ps", self.detector_jitter_ps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be > 0"));
            }
        }
        if !(self.postselection_factor > 0.0 && self.postselection_factor <= 1.0) {
            return Err(invalid("postselection_factor", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FsrCheck {
    pub admissible: bool,
    /// Interferometer imbalance 1/FSR.
    pub delay_ps: f64,
    /// Set when the imbalance is under ten detector jitters.
    pub jitter_warning: bool,
    pub diagnostic: String,
}

/// `Δν_p < FSR < Δν_s`, strict on both sides.
pub fn validate_fsr(cfg: &FransonConfig) -> FsrCheck {
    let admissible = cfg.pump_linewidth_hz < cfg.fsr_hz && cfg.fsr_hz < cfg.photon_bandwidth_hz;
    let delay_ps = 1e12 / cfg.fsr_hz;
    let jitter_warning = delay_ps < 10.0 * cfg.detector_jitter_ps;
    let mut diagnostic = if admissible {
        format!(
            "ok: {:.3e} Hz < FSR {:.3e} Hz < {:.3e} Hz",
            cfg.pump_linewidth_hz, cfg.fsr_hz, cfg.photon_bandwidth_hz
        )
    } else if cfg.fsr_hz <= cfg.pump_linewidth_hz {
        format!(
            "FSR {:.3e} Hz does not exceed the pair coherence bandwidth {:.3e} Hz",
            cfg.fsr_hz, cfg.pump_linewidth_hz
        )
    } else {
        format!(
            "FSR {:.3e} Hz is not below the single-photon bandwidth {:.3e} Hz",
            cfg.fsr_hz, cfg.photon_bandwidth_hz
        )
    };
    if jitter_warning {
        diagnostic.push_str(&format!(
            "; warning: delay {delay_ps:.1} ps is under 10x the {:.1} ps detector jitter",
            cfg.detector_jitter_ps
        ));
    }
    FsrCheck {
        admissible,
        delay_ps,
        jitter_warning,
        diagnostic,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    pub phases_rad: Vec<f64>,
    pub coincidences: Vec<u64>,
    pub integration_s: f64,
}

/// `n` phases evenly covering one period, `2πk/n`.
pub fn uniform_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// Generator settings for a fringe scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeModel {
    pub visibility: f64,
    /// Phase-averaged mean coincidences per point.
    pub mean_counts: f64,
    pub phase0: f64,
    pub integration_s: f64,
}

impl FringeModel {
    pub fn new(visibility: f64, mean_counts: f64) -> Self {
        Self {
            visibility,
            mean_counts,
            phase0: 0.0,
            integration_s: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(invalid("visibility", "must lie in [0, 1]"));
        }
        if !(self.mean_counts > 0.0 && self.mean_counts.is_finite()) {
            return Err(invalid("mean_counts", "must be > 0"));
        }
        if !(self.integration_s > 0.0) {
            return Err(invalid("integration_s", "must be > 0"));
        }
        Ok(())
    }

    pub fn mean_at(&self, phase: f64) -> f64 {
        self.mean_counts * (1.0 + self.visibility * (phase + self.phase0).cos())
    }

    /// Poisson counts at each phase.
    pub fn sample(&self, phases: &[f64], seed: u64) -> Result<FringeScan> {
        self.validate()?;
        let mut rng = sampling::rng_for(seed, 0);
        Ok(FringeScan {
            phases_rad: phases.to_vec(),
            coincidences: phases
                .iter()
                .map(|&p| sampling::poisson(&mut rng, self.mean_at(p)))
                .collect(),
            integration_s: self.integration_s,
        })
    }

    /// Counts equal to the rounded means.
    pub fn noiseless(&self, phases: &[f64]) -> Result<FringeScan> {
        self.validate()?;
        Ok(FringeScan {
            phases_rad: phases.to_vec(),
            coincidences: phases.iter().map(|&p| self.mean_at(p).round() as u64).collect(),
            integration_s: self.integration_s,
        })
    }
}

pub fn simulate_fringe_scan(
    true_visibility: f64,
    mean_counts: f64,
    phases: &[f64],
    seed: u64,
) -> Result<FringeScan> {
    FringeModel::new(true_visibility, mean_counts).sample(phases, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitMethod {
    LeastSquares,
    /// `(max − min)/(max + min)` used when the sinusoid fit is unusable.
    MaxMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityFit {
    pub visibility: f64,
    pub visibility_sigma: f64,
    pub phase0: f64,
    pub method: FitMethod,
}

/// Least-squares fit of `a + b cos(φ + φ0)`, visibility `b/a`.
pub fn fit_visibility(scan: &FringeScan) -> Result<VisibilityFit> {
    let n = scan.phases_rad.len();
    if n != scan.coincidences.len() {
        return Err(invalid("scan", "phase and count lengths differ"));
    }
    if n < 5 {
        return Err(Error::InsufficientCoverage(format!("{n} points, need at least 5")));
    }
    let (lo, hi) = scan
        .phases_rad
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &p| (l.min(p), h.max(p)));
    // an evenly sampled period [0, 2π) spans 2π(n−1)/n
    let span = (hi - lo) * n as f64 / (n - 1) as f64;
    if span < 2.0 * PI * (1.0 - 1e-9) {
        return Err(Error::InsufficientCoverage(format!(
            "phases span {span:.3} rad, need one period"
        )));
    }
    if scan.coincidences.iter().all(|&c| c == 0) {
        return Err(Error::DegenerateScan("all counts are zero".into()));
    }

    match least_squares(scan) {
        Some(fit) => Ok(fit),
        None => Ok(max_min(scan)),
    }
}

fn least_squares(scan: &FringeScan) -> Option<VisibilityFit> {
    let n = scan.phases_rad.len();
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Vector3::<f64>::zeros();
    for (&p, &c) in scan.phases_rad.iter().zip(&scan.coincidences) {
        let row = Vector3::new(1.0, p.cos(), p.sin());
        xtx += row * row.transpose();
        xty += row * c as f64;
    }
    if xtx.determinant().abs() < 1e-9 * (n as f64).powi(3) {
        return None;
    }
    let inv = xtx.try_inverse()?;
    let beta = inv * xty;
    let (a, cc, ss) = (beta[0], beta[1], beta[2]);
    if !(a > 0.0) || !beta.iter().all(|v| v.is_finite()) {
        return None;
    }
    let b = cc.hypot(ss);
    let visibility = b / a;
    let phase0 = (-ss).atan2(cc);

    let rss: f64 = scan
        .phases_rad
        .iter()
        .zip(&scan.coincidences)
        .map(|(&p, &c)| {
            let r = c as f64 - (a + cc * p.cos() + ss * p.sin());
            r * r
        })
        .sum();
    let dof = n.saturating_sub(3).max(1) as f64;
    let cov = inv * (rss / dof);
    let grad = if b > 0.0 {
        Vector3::new(-b / (a * a), cc / (a * b), ss / (a * b))
    } else {
        Vector3::new(0.0, 1.0 / a, 1.0 / a) / std::f64::consts::SQRT_2
    };
    let var = (grad.transpose() * cov * grad)[(0, 0)];
    Some(VisibilityFit {
        visibility,
        visibility_sigma: var.max(0.0).sqrt(),
        phase0,
        method: FitMethod::LeastSquares,
    })
}

fn max_min(scan: &FringeScan) -> VisibilityFit {
    let (mut kmax, mut kmin) = (0, 0);
    for (k, &c) in scan.coincidences.iter().enumerate() {
        if c > scan.coincidences[kmax] {
            kmax = k;
        }
        if c < scan.coincidences[kmin] {
            kmin = k;
        }
    }
    let (hi, lo) = (scan.coincidences[kmax] as f64, scan.coincidences[kmin] as f64);
    let visibility = (hi - lo) / (hi + lo);
    // Poisson propagation through (hi − lo)/(hi + lo)
    let sigma = 2.0 * (hi * lo * lo + lo * hi * hi).sqrt() / (hi + lo).powi(2);
    let phase0 = -scan.phases_rad[kmax];
    VisibilityFit {
        visibility,
        visibility_sigma: sigma,
        phase0: phase0.sin().atan2(phase0.cos()),
        method: FitMethod::MaxMin,
    }
}

/// X-basis error rate implied by a fringe visibility, `(1 − V)/2`.
pub fn visibility_to_qber(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid("visibility", format!("must lie in [0, 1], got {v}")));
    }
    Ok((1.0 - v) / 2.0)
}

/// `# integration_s=<t>` then `phase_rad,counts` rows.
pub fn write_scan_csv<W: Write>(mut w: W, scan: &FringeScan) -> Result<()> {
    writeln!(w, "# integration_s={}", scan.integration_s)?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["phase_rad", "counts"])?;
    for (p, c) in scan.phases_rad.iter().zip(&scan.coincidences) {
        wtr.write_record([format!("{p:.12}"), c.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_scan_csv<R: Read>(r: R) -> Result<FringeScan> {
    let mut reader = BufReader::new(r);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let integration_s = first
        .trim()
        .strip_prefix("# integration_s=")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| Error::Format {
            what: "fringe scan",
            reason: "first line must be `# integration_s=<seconds>`".into(),
        })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut phases = Vec::new();
    let mut counts = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let bad = |e: String| Error::Format {
            what: "fringe scan",
            reason: e,
        };
        phases.push(rec[0].parse::<f64>().map_err(|e| bad(e.to_string()))?);
        counts.push(rec[1].parse::<u64>().map_err(|e| bad(e.to_string()))?);
    }
    Ok(FringeScan {
        phases_rad: phases,
        coincidences: counts,
        integration_s,
    })
}
