//! Energy-time entanglement-based QKD accounting.
//!
//! Each party routes photons to a Z (time-bin arrival) or X (Franson
//! interferometer) analysis. The key rate is the asymptotic bound
//! `R = R_sift (1 − f·h(Q_Z) − h(Q_X))`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detection::{self, DetectorModel, TimeTagStream};
use crate::error::{invalid, Error, Result};
use crate::sampling;

/// Default error-correction inefficiency.
pub const DEFAULT_F_EC: f64 = 1.1;

/// `h(x) = −x log₂x − (1−x) log₂(1−x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid("x", format!("must lie in [0, 1], got {x}")));
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Asymptotic secret key rate in bits/s, clamped at zero.
pub fn secret_key_rate(sifted_rate_hz: f64, qx: f64, qz: f64, f_ec: f64) -> Result<f64> {
    if !(sifted_rate_hz >= 0.0 && sifted_rate_hz.is_finite()) {
        return Err(invalid("sifted_rate_hz", "must be >= 0"));
    }
    for (name, q) in [("qx", qx), ("qz", qz)] {
        if !(0.0..=0.5).contains(&q) {
            return Err(invalid(name, format!("QBER must lie in [0, 0.5], got {q}")));
        }
    }
    if !(f_ec >= 1.0) {
        return Err(invalid("f_ec", "must be >= 1"));
    }
    let fraction = 1.0 - f_ec * binary_entropy(qz)? - binary_entropy(qx)?;
    Ok((sifted_rate_hz * fraction).max(0.0))
}

/// Largest X error rate with a positive key at the given Z error rate.
pub fn qber_x_threshold(qz: f64, f_ec: f64) -> Result<f64> {
    let budget = 1.0 - f_ec * binary_entropy(qz)?;
    if budget <= 0.0 {
        return Ok(0.0);
    }
    if budget >= 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid)? < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Total fiber between the two users.
    pub fiber_length_km: f64,
    /// Share of the fiber on Alice's side.
    pub alice_fraction: f64,
    pub loss_db_per_km: f64,
    /// Analyzer insertion loss, per party.
    pub insertion_loss_db: f64,
    /// Probability of routing to the Z basis.
    pub basis_split: f64,
    /// Fraction of X-basis coincidences kept by the central-peak selection.
    pub x_postselection: f64,
    pub channel_pair: (i32, i32),
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            fiber_length_km: 50.0,
            alice_fraction: 0.5,
            loss_db_per_km: 0.2,
            insertion_loss_db: 3.0,
            basis_split: 0.5,
            x_postselection: 1.0,
            channel_pair: (19, 23),
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fiber_length_km", self.fiber_length_km),
            ("loss_db_per_km", self.loss_db_per_km),
            ("insertion_loss_db", self.insertion_loss_db),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be >= 0"));
            }
        }
        if !(self.basis_split > 0.0 && self.basis_split < 1.0) {
            return Err(invalid("basis_split", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.alice_fraction) {
            return Err(invalid("alice_fraction", "must lie in [0, 1]"));
        }
        if !(self.x_postselection > 0.0 && self.x_postselection <= 1.0) {
            return Err(invalid("x_postselection", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Power transmittance of each arm (fiber plus analyzer).
    pub fn transmittance(&self) -> [f64; 2] {
        let arm = |km: f64| db_to_linear(km * self.loss_db_per_km + self.insertion_loss_db);
        [
            arm(self.fiber_length_km * self.alice_fraction),
            arm(self.fiber_length_km * (1.0 - self.alice_fraction)),
        ]
    }

    /// Probability that both parties pick the same basis, weighted by the
    /// X-basis post-selection.
    pub fn sifting_factor(&self) -> f64 {
        let z = self.basis_split;
        let x = 1.0 - z;
        z * z + x * x * self.x_postselection
    }

    /// Fraction of sifted events that are X-basis events.
    pub fn x_fraction(&self) -> f64 {
        let x = 1.0 - self.basis_split;
        x * x * self.x_postselection / self.sifting_factor()
    }
}

pub fn db_to_linear(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub transmittance: [f64; 2],
    pub coincidence_rate_hz: f64,
    pub sifted_rate_hz: f64,
    pub singles_hz: [f64; 2],
}

/// Rates delivered to the two users for a source pair rate (already
/// including fiber-coupling loss).
pub fn link_budget(cfg: &LinkConfig, source_pair_rate_hz: f64, det: &DetectorModel) -> Result<LinkBudget> {
    cfg.validate()?;
    det.validate()?;
    if !(source_pair_rate_hz >= 0.0 && source_pair_rate_hz.is_finite()) {
        return Err(invalid("source_pair_rate_hz", "must be >= 0"));
    }
    let t = cfg.transmittance();
    let eta = det.efficiency;
    let coincidence = source_pair_rate_hz * t[0] * t[1] * eta * eta;
    Ok(LinkBudget {
        transmittance: t,
        coincidence_rate_hz: coincidence,
        sifted_rate_hz: coincidence * cfg.sifting_factor(),
        singles_hz: [
            source_pair_rate_hz * t[0] * eta + det.dark_rate_hz,
            source_pair_rate_hz * t[1] * eta + det.dark_rate_hz,
        ],
    })
}

/// Something that happens during a long session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftEvent {
    /// Interferometer phase excursion: X visibility drops by `depth`, holds
    /// for `hold_s`, then recovers exponentially with `recovery_s`.
    PhaseDrift {
        start_s: f64,
        depth: f64,
        hold_s: f64,
        recovery_s: f64,
    },
    /// No key output for `duration_s`.
    Outage { start_s: f64, duration_s: f64 },
}

impl DriftEvent {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DriftEvent::PhaseDrift {
                start_s,
                depth,
                hold_s,
                recovery_s,
            } => {
                if !(start_s >= 0.0 && hold_s >= 0.0 && recovery_s >= 0.0) {
                    return Err(invalid("events", "times must be >= 0"));
                }
                if !(0.0..=1.0).contains(&depth) {
                    return Err(invalid("events", "depth must lie in [0, 1]"));
                }
            }
            DriftEvent::Outage { start_s, duration_s } => {
                if !(start_s >= 0.0 && duration_s >= 0.0) {
                    return Err(invalid("events", "times must be >= 0"));
                }
            }
        }
        Ok(())
    }

    fn visibility_depression(&self, t: f64) -> f64 {
        match *self {
            DriftEvent::PhaseDrift {
                start_s,
                depth,
                hold_s,
                recovery_s,
            } => {
                if t < start_s {
                    0.0
                } else if t < start_s + hold_s {
                    depth
                } else if recovery_s > 0.0 {
                    depth * (-(t - start_s - hold_s) / recovery_s).exp()
                } else {
                    0.0
                }
            }
            DriftEvent::Outage { .. } => 0.0,
        }
    }

    fn outage_overlap(&self, t0: f64, t1: f64) -> f64 {
        match *self {
            DriftEvent::Outage { start_s, duration_s } => {
                (t1.min(start_s + duration_s) - t0.max(start_s)).max(0.0)
            }
            DriftEvent::PhaseDrift { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventFile {
    #[serde(default)]
    events: Vec<DriftEvent>,
}

/// Parse a TOML list of `[[events]]` tables.
pub fn parse_events(text: &str) -> Result<Vec<DriftEvent>> {
    let file: EventFile = toml::from_str(text).map_err(|e| Error::Format {
        what: "event list",
        reason: e.to_string(),
    })?;
    for e in &file.events {
        e.validate()?;
    }
    Ok(file.events)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub sifted_rate_hz: f64,
    pub duration_s: f64,
    pub bin_s: f64,
    /// Franson visibility setting Q_X = (1 − V)/2 away from drift events.
    pub base_visibility_x: f64,
    pub base_error_z: f64,
    pub f_ec: f64,
    pub x_fraction: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            sifted_rate_hz: 5540.0,
            duration_s: 3600.0,
            bin_s: 10.0,
            base_visibility_x: 0.87,
            base_error_z: 0.047,
            f_ec: DEFAULT_F_EC,
            x_fraction: 0.5,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sifted_rate_hz >= 0.0 && self.sifted_rate_hz.is_finite()) {
            return Err(invalid("sifted_rate_hz", "must be >= 0"));
        }
        if !(self.duration_s > 0.0 && self.bin_s > 0.0) {
            return Err(invalid("duration_s/bin_s", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.base_visibility_x) {
            return Err(invalid("base_visibility_x", "must lie in [0, 1]"));
        }
        if !(0.0..=0.5).contains(&self.base_error_z) {
            return Err(invalid("base_error_z", "must lie in [0, 0.5]"));
        }
        if !(self.f_ec >= 1.0) {
            return Err(invalid("f_ec", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.x_fraction) {
            return Err(invalid("x_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionBin {
    pub t_s: f64,
    pub sifted_rate_hz: f64,
    pub qber_x: f64,
    pub qber_z: f64,
    pub skr_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionSummary {
    pub mean_skr_bps: f64,
    pub mean_sifted_hz: f64,
    pub mean_qber_x: f64,
    pub mean_qber_z: f64,
    pub zero_skr_bins: usize,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionReport {
    pub bins: Vec<SessionBin>,
    pub summary: SessionSummary,
}

/// Bin-by-bin Poisson simulation of sifted counts and basis errors.
pub fn simulate_session(cfg: &SessionConfig, events: &[DriftEvent], seed: u64) -> Result<SessionReport> {
    cfg.validate()?;
    for e in events {
        e.validate()?;
    }
    let n_bins = (cfg.duration_s / cfg.bin_s).ceil() as usize;
    let mut rng = sampling::rng_for(seed, 0);
    let mut bins = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let t0 = k as f64 * cfg.bin_s;
        let t1 = (t0 + cfg.bin_s).min(cfg.duration_s);
        let width = t1 - t0;
        let mid = 0.5 * (t0 + t1);
        let dark: f64 = events.iter().map(|e| e.outage_overlap(t0, t1)).sum();
        let live = (width - dark).max(0.0);

        let depression: f64 = events.iter().map(|e| e.visibility_depression(mid)).sum();
        let visibility = (cfg.base_visibility_x - depression).clamp(0.0, 1.0);
        let qx_true = (1.0 - visibility) / 2.0;

        let n = sampling::poisson(&mut rng, cfg.sifted_rate_hz * live);
        let nx = sampling::binomial(&mut rng, n, cfg.x_fraction);
        let nz = n - nx;
        let ex = sampling::binomial(&mut rng, nx, qx_true);
        let ez = sampling::binomial(&mut rng, nz, cfg.base_error_z);
        let ratio = |e: u64, m: u64| if m > 0 { (e as f64 / m as f64).min(0.5) } else { 0.0 };
        let (qber_x, qber_z) = (ratio(ex, nx), ratio(ez, nz));
        let sifted_rate_hz = n as f64 / width;
        bins.push(SessionBin {
            t_s: t0,
            sifted_rate_hz,
            qber_x,
            qber_z,
            skr_bps: secret_key_rate(sifted_rate_hz, qber_x, qber_z, cfg.f_ec)?,
        });
    }
    let summary = summarize(&bins);
    Ok(SessionReport { bins, summary })
}

fn summarize(bins: &[SessionBin]) -> SessionSummary {
    let n = bins.len().max(1) as f64;
    let live: Vec<&SessionBin> = bins.iter().filter(|b| b.sifted_rate_hz > 0.0).collect();
    let m = live.len().max(1) as f64;
    SessionSummary {
        mean_skr_bps: bins.iter().map(|b| b.skr_bps).sum::<f64>() / n,
        mean_sifted_hz: bins.iter().map(|b| b.sifted_rate_hz).sum::<f64>() / n,
        mean_qber_x: live.iter().map(|b| b.qber_x).sum::<f64>() / m,
        mean_qber_z: live.iter().map(|b| b.qber_z).sum::<f64>() / m,
        zero_skr_bins: bins.iter().filter(|b| b.skr_bps == 0.0).count(),
        bins: bins.len(),
    }
}

impl SessionReport {
    /// `t_s,sifted_hz,qber_x,qber_z,skr_bps` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t_s", "sifted_hz", "qber_x", "qber_z", "skr_bps"])?;
        for b in &self.bins {
            wtr.write_record([
                format!("{:.3}", b.t_s),
                format!("{:.6}", b.sifted_rate_hz),
                format!("{:.6}", b.qber_x),
                format!("{:.6}", b.qber_z),
                format!("{:.6}", b.skr_bps),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn summary_string(&self) -> String {
        let s = &self.summary;
        format!(
            "[summary]\nbins = {}\nmean_skr_bps = {:.6}\nmean_sifted_hz = {:.6}\nmean_qber_x = {:.6}\nmean_qber_z = {:.6}\nzero_skr_bins = {}\n",
            s.bins, s.mean_skr_bps, s.mean_sifted_hz, s.mean_qber_x, s.mean_qber_z, s.zero_skr_bins
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// Measurement basis and outcome attached to a detection. Z bits are the
/// arrival time bin (0 early, 1 late); X bits are the interferometer output
/// port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLabel {
    pub basis: Basis,
    pub bit: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub stream: TimeTagStream,
    pub labels: Vec<Option<BasisLabel>>,
}

impl LabeledStream {
    fn check(&self) -> Result<()> {
        if self.labels.len() != self.stream.tags_ps.len() {
            return Err(invalid("labels", "one label per tag required"));
        }
        match self.labels.iter().position(Option::is_none) {
            Some(k) => Err(Error::UnlabeledTag(k)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SiftedKey {
    pub bases: Vec<Basis>,
    pub alice_bits: Vec<u8>,
    pub bob_bits: Vec<u8>,
    /// Coincidences before basis reconciliation.
    pub coincidences: usize,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn keep_fraction(&self) -> f64 {
        if self.coincidences == 0 {
            0.0
        } else {
            self.len() as f64 / self.coincidences as f64
        }
    }

    /// Mismatch fraction among sifted bits of `basis`.
    pub fn qber(&self, basis: Basis) -> Option<f64> {
        let (mut n, mut e) = (0usize, 0usize);
        for k in 0..self.len() {
            if self.bases[k] == basis {
                n += 1;
                e += (self.alice_bits[k] != self.bob_bits[k]) as usize;
            }
        }
        (n > 0).then(|| e as f64 / n as f64)
    }
}

/// Match coincidences and keep those measured in the same basis.
pub fn sift(alice: &LabeledStream, bob: &LabeledStream, window_ps: u64, delay_ps: i64) -> Result<SiftedKey> {
    alice.check()?;
    bob.check()?;
    let pairs = detection::match_coincidences(&alice.stream, &bob.stream, window_ps, delay_ps)?;
    let mut key = SiftedKey {
        coincidences: pairs.len(),
        ..Default::default()
    };
    for (i, j) in pairs {
        let (a, b) = (alice.labels[i].unwrap(), bob.labels[j].unwrap());
        if a.basis == b.basis {
            key.bases.push(a.basis);
            key.alice_bits.push(a.bit);
            key.bob_bits.push(b.bit);
        }
    }
    Ok(key)
}

/// Labeled two-party streams from an ideal-detection pair source with
/// injected basis error rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPairSimulation {
    pub pair_rate_hz: f64,
    pub duration_s: f64,
    /// Probability of choosing Z, per party.
    pub basis_split: f64,
    pub qber_x: f64,
    pub qber_z: f64,
    pub jitter_sigma_ps: f64,
}

impl LabeledPairSimulation {
    pub fn run(&self, seed: u64) -> Result<(LabeledStream, LabeledStream)> {
        if !(self.pair_rate_hz >= 0.0 && self.duration_s > 0.0) {
            return Err(invalid("pair_rate_hz/duration_s", "rate >= 0 and duration > 0"));
        }
        if !(0.0..=1.0).contains(&self.basis_split)
            || !(0.0..=0.5).contains(&self.qber_x)
            || !(0.0..=0.5).contains(&self.qber_z)
        {
            return Err(invalid("basis_split/qber", "out of range"));
        }
        let duration_ps = (self.duration_s * 1e12).round() as u64;
        let mut rng = sampling::rng_for(seed, 0);
        let emissions = detection::poisson_arrivals(&mut rng, self.pair_rate_hz, duration_ps);
        let jitter = detection::gaussian(self.jitter_sigma_ps);
        let mut a: Vec<(u64, BasisLabel)> = Vec::with_capacity(emissions.len());
        let mut b: Vec<(u64, BasisLabel)> = Vec::with_capacity(emissions.len());
        for &t in &emissions {
            let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
                if rng.random::<f64>() < self.basis_split {
                    Basis::Z
                } else {
                    Basis::X
                }
            };
            let (ba, bb) = (pick(&mut rng), pick(&mut rng));
            let bit_a = rng.random::<bool>() as u8;
            let bit_b = if ba == bb {
                let q = match ba {
                    Basis::Z => self.qber_z,
                    Basis::X => self.qber_x,
                };
                bit_a ^ (rng.random::<f64>() < q) as u8
            } else {
                rng.random::<bool>() as u8
            };
            let ta = detection::jittered(&mut rng, t, jitter.as_ref(), duration_ps);
            let tb = detection::jittered(&mut rng, t, jitter.as_ref(), duration_ps);
            if let (Some(ta), Some(tb)) = (ta, tb) {
                a.push((ta, BasisLabel { basis: ba, bit: bit_a }));
                b.push((tb, BasisLabel { basis: bb, bit: bit_b }));
            }
        }
        let build = |mut v: Vec<(u64, BasisLabel)>, id: u8| {
            v.sort_by_key(|x| x.0);
            v.dedup_by_key(|x| x.0);
            LabeledStream {
                stream: TimeTagStream {
                    detector_id: id,
                    tags_ps: v.iter().map(|x| x.0).collect(),
                    duration_ps,
                },
                labels: v.iter().map(|x| Some(x.1)).collect(),
            }
        };
        Ok((build(a, 0), build(b, 1)))
    }
}
