//! Single-photon detection: Monte-Carlo time-tag generation and windowed
//! coincidence analysis.
//!
//! Timestamps are integer picoseconds. Coincidences are matched greedily in
//! time order so no tag is counted twice.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sampling;

/// Per-detector Gaussian σ giving a 50 ps FWHM coincidence peak.
pub const DEFAULT_JITTER_SIGMA_PS: f64 = 50.0 / (2.354_820_045_030_949 * std::f64::consts::SQRT_2);
pub const DEFAULT_WINDOW_PS: u64 = 100;
pub const DEFAULT_ACCIDENTAL_OFFSET_PS: i64 = 50_000;
pub const DEFAULT_MAX_EVENTS: u64 = 200_000_000;

pub const TIMETAG_MAGIC: &[u8; 4] = b"TTAG";
pub const TIMETAG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub jitter_sigma_ps: f64,
    pub dead_time_ns: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.80,
            dark_rate_hz: 50.0,
            jitter_sigma_ps: DEFAULT_JITTER_SIGMA_PS,
            dead_time_ns: 0.0,
        }
    }
}

impl DetectorModel {
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_rate_hz: 0.0,
            jitter_sigma_ps: 0.0,
            dead_time_ns: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid("efficiency", "must lie in [0, 1]"));
        }
        for (name, v) in [
            ("dark_rate_hz", self.dark_rate_hz),
            ("jitter_sigma_ps", self.jitter_sigma_ps),
            ("dead_time_ns", self.dead_time_ns),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTagStream {
    pub detector_id: u8,
    pub tags_ps: Vec<u64>,
    pub duration_ps: u64,
}

impl TimeTagStream {
    pub fn new(detector_id: u8, tags_ps: Vec<u64>, duration_ps: u64) -> Result<Self> {
        let s = Self {
            detector_id,
            tags_ps,
            duration_ps,
        };
        s.check_sorted()?;
        if s.tags_ps.last().is_some_and(|&t| t > duration_ps) {
            return Err(invalid("tags_ps", "tag beyond stream duration"));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tags_ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags_ps.is_empty()
    }

    pub fn rate_hz(&self) -> f64 {
        if self.duration_ps == 0 {
            0.0
        } else {
            self.tags_ps.len() as f64 / (self.duration_ps as f64 * 1e-12)
        }
    }

    fn check_sorted(&self) -> Result<()> {
        if self.tags_ps.windows(2).all(|w| w[0] < w[1]) {
            Ok(())
        } else {
            Err(Error::UnsortedStream(self.detector_id))
        }
    }
}

/// Monte-Carlo realization of a two-arm pair source.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStreamSimulation {
    pub pair_rate_hz: f64,
    /// Uncorrelated counts per arm (Raman, leakage) before detector dark counts.
    pub noise_hz: [f64; 2],
    pub duration_s: f64,
    pub detectors: [DetectorModel; 2],
    pub max_events: u64,
}

impl PairStreamSimulation {
    pub fn new(pair_rate_hz: f64, duration_s: f64, detectors: [DetectorModel; 2]) -> Self {
        Self {
            pair_rate_hz,
            noise_hz: [0.0, 0.0],
            duration_s,
            detectors,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    pub fn duration_ps(&self) -> u64 {
        (self.duration_s * 1e12).round() as u64
    }

    fn validate(&self) -> Result<()> {
        if !(self.pair_rate_hz >= 0.0 && self.pair_rate_hz.is_finite()) {
            return Err(invalid("pair_rate_hz", "must be >= 0"));
        }
        if self.noise_hz.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
            return Err(invalid("noise_hz", "must be >= 0"));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(invalid("duration_s", "must be > 0"));
        }
        for d in &self.detectors {
            d.validate()?;
        }
        let expected = self.duration_s
            * (self.pair_rate_hz
                + self.noise_hz.iter().sum::<f64>()
                + self.detectors.iter().map(|d| d.dark_rate_hz).sum::<f64>());
        if expected > self.max_events as f64 {
            return Err(Error::EventBudget {
                expected,
                bound: self.max_events,
            });
        }
        Ok(())
    }

    /// Streams for detector ids 0 (arm a) and 1 (arm b).
    pub fn run(&self, seed: u64) -> Result<(TimeTagStream, TimeTagStream)> {
        self.validate()?;
        let duration_ps = self.duration_ps();
        let mut rng = sampling::rng_for(seed, 0);
        let emissions = poisson_arrivals(&mut rng, self.pair_rate_hz, duration_ps);

        let mut streams = Vec::with_capacity(2);
        for arm in 0..2 {
            let det = &self.detectors[arm];
            let mut rng = sampling::rng_for(seed, 1 + arm as u64);
            let mut tags = Vec::with_capacity(emissions.len());
            let jitter = gaussian(det.jitter_sigma_ps);
            for &t in &emissions {
                if rng.random::<f64>() < det.efficiency {
                    if let Some(tag) = jittered(&mut rng, t, jitter.as_ref(), duration_ps) {
                        tags.push(tag);
                    }
                }
            }
            let background = self.noise_hz[arm] + det.dark_rate_hz;
            tags.extend(
                poisson_arrivals(&mut rng, background, duration_ps)
                    .into_iter()
                    .map(|t| t.round() as u64),
            );
            tags.sort_unstable();
            let tags = apply_dead_time(tags, det.dead_time_ns);
            streams.push(TimeTagStream {
                detector_id: arm as u8,
                tags_ps: tags,
                duration_ps,
            });
        }
        let b = streams.pop().unwrap();
        let a = streams.pop().unwrap();
        Ok((a, b))
    }
}

/// Two detector streams from a pair source plus independent noise.
pub fn simulate_pair_streams(
    pair_rate_hz: f64,
    noise_hz: [f64; 2],
    duration_s: f64,
    det_a: &DetectorModel,
    det_b: &DetectorModel,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream)> {
    let mut sim = PairStreamSimulation::new(pair_rate_hz, duration_s, [*det_a, *det_b]);
    sim.noise_hz = noise_hz;
    sim.run(seed)
}

pub(crate) fn gaussian(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma > 0"))
}

pub(crate) fn jittered<R: Rng + ?Sized>(
    rng: &mut R,
    t: f64,
    jitter: Option<&Normal<f64>>,
    duration_ps: u64,
) -> Option<u64> {
    let t = match jitter {
        Some(n) => t + n.sample(rng),
        None => t,
    };
    let t = t.round();
    (t >= 0.0 && t <= duration_ps as f64).then_some(t as u64)
}

/// Sorted arrival times of a homogeneous Poisson process on `[0, duration)`.
pub(crate) fn poisson_arrivals<R: Rng + ?Sized>(rng: &mut R, rate_hz: f64, duration_ps: u64) -> Vec<f64> {
    let n = sampling::poisson(rng, rate_hz * duration_ps as f64 * 1e-12);
    let span = duration_ps as f64;
    let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * span).collect();
    times.sort_unstable_by(f64::total_cmp);
    times
}

/// Drop tags arriving within `dead_time_ns` of the previous registered tag.
/// Coincident timestamps always collapse to one.
pub fn apply_dead_time<I: IntoIterator<Item = u64>>(tags: I, dead_time_ns: f64) -> Vec<u64> {
    let gap = ((dead_time_ns * 1e3).round() as u64).max(1);
    let mut out: Vec<u64> = Vec::new();
    for t in tags {
        match out.last() {
            Some(&last) if t < last + gap => {}
            _ => out.push(t),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoincidenceResult {
    pub true_window_counts: u64,
    pub accidental_estimate: f64,
    pub window_ps: u64,
    pub relative_delay_ps: i64,
}

impl CoincidenceResult {
    /// Coincidence-to-accidental ratio.
    pub fn car(&self) -> f64 {
        if self.accidental_estimate > 0.0 {
            self.true_window_counts as f64 / self.accidental_estimate
        } else {
            f64::INFINITY
        }
    }
}

/// Index pairs `(i, j)` with `|a[i] − b[j] − delay| ≤ window/2`, matched
/// greedily in time order. Each tag appears in at most one pair.
pub fn match_coincidences(
    a: &TimeTagStream,
    b: &TimeTagStream,
    window_ps: u64,
    delay_ps: i64,
) -> Result<Vec<(usize, usize)>> {
    if window_ps == 0 {
        return Err(invalid("window_ps", "must be > 0"));
    }
    a.check_sorted()?;
    b.check_sorted()?;
    Ok(greedy_matches(&a.tags_ps, &b.tags_ps, window_ps, delay_ps))
}

fn greedy_matches(a: &[u64], b: &[u64], window_ps: u64, delay_ps: i64) -> Vec<(usize, usize)> {
    let window = window_ps as i128;
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let d = 2 * (a[i] as i128 - b[j] as i128 - delay_ps as i128);
        if d > window {
            j += 1;
        } else if d < -window {
            i += 1;
        } else {
            out.push((i, j));
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn count_coincidences(
    a: &TimeTagStream,
    b: &TimeTagStream,
    window_ps: u64,
    delay_ps: i64,
) -> Result<CoincidenceResult> {
    count_coincidences_with_offset(a, b, window_ps, delay_ps, DEFAULT_ACCIDENTAL_OFFSET_PS)
}

/// Windowed count plus an accidental estimate averaged over the two
/// side windows at `delay ± offset`.
pub fn count_coincidences_with_offset(
    a: &TimeTagStream,
    b: &TimeTagStream,
    window_ps: u64,
    delay_ps: i64,
    accidental_offset_ps: i64,
) -> Result<CoincidenceResult> {
    if accidental_offset_ps.unsigned_abs() <= window_ps {
        return Err(invalid(
            "accidental_offset_ps",
            "offset must be much larger than the window",
        ));
    }
    let matched = match_coincidences(a, b, window_ps, delay_ps)?.len() as u64;
    let side = |offset: i64| greedy_matches(&a.tags_ps, &b.tags_ps, window_ps, delay_ps + offset).len();
    let accidental =
        0.5 * (side(accidental_offset_ps) + side(-accidental_offset_ps)) as f64;
    Ok(CoincidenceResult {
        true_window_counts: matched,
        accidental_estimate: accidental,
        window_ps,
        relative_delay_ps: delay_ps,
    })
}

/// Expected accidental coincidence rate `r1·r2·τ`.
pub fn accidental_rate(r1_hz: f64, r2_hz: f64, window_s: f64) -> f64 {
    r1_hz * r2_hz * window_s
}

/// Start-multistop histogram of `t_a − t_b` over `[-max_delay, max_delay]`.
/// Returns `(bin_center_ps, count)`.
pub fn delay_histogram(
    a: &TimeTagStream,
    b: &TimeTagStream,
    max_delay_ps: u64,
    bin_ps: u64,
) -> Result<Vec<(i64, u64)>> {
    if bin_ps == 0 {
        return Err(invalid("bin_ps", "must be > 0"));
    }
    a.check_sorted()?;
    b.check_sorted()?;
    let max = max_delay_ps as i64;
    let bin = bin_ps as i64;
    let nbins = (2 * max / bin + 1) as usize;
    let mut hist = vec![0u64; nbins];
    let mut start = 0;
    for &ta in &a.tags_ps {
        while start < b.tags_ps.len() && (b.tags_ps[start] as i64) < ta as i64 - max {
            start += 1;
        }
        for &tb in &b.tags_ps[start..] {
            let d = ta as i64 - tb as i64;
            if d < -max {
                break;
            }
            let k = ((d + max) / bin) as usize;
            if k < nbins {
                hist[k] += 1;
            }
        }
    }
    Ok(hist
        .into_iter()
        .enumerate()
        .map(|(k, n)| (-max + k as i64 * bin + bin / 2, n))
        .collect())
}

/// Write streams as a time-ordered little-endian record file.
pub fn write_timetags<W: Write>(mut w: W, streams: &[&TimeTagStream]) -> Result<()> {
    let duration = streams.iter().map(|s| s.duration_ps).max().unwrap_or(0);
    w.write_all(TIMETAG_MAGIC)?;
    w.write_all(&TIMETAG_VERSION.to_le_bytes())?;
    w.write_all(&duration.to_le_bytes())?;
    let mut cursors = vec![0usize; streams.len()];
    loop {
        let next = streams
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.tags_ps.get(cursors[k]).map(|&t| (t, k)))
            .min();
        let Some((t, k)) = next else { break };
        let mut rec = [0u8; 9];
        rec[0] = streams[k].detector_id;
        rec[1..].copy_from_slice(&t.to_le_bytes());
        w.write_all(&rec)?;
        cursors[k] += 1;
    }
    w.flush()?;
    Ok(())
}

/// Read a record file back into one stream per detector id, ascending by id.
pub fn read_timetags<R: Read>(mut r: R) -> Result<Vec<TimeTagStream>> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != TIMETAG_MAGIC {
        return Err(Error::Format {
            what: "time-tag file",
            reason: "bad magic".into(),
        });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != TIMETAG_VERSION {
        return Err(Error::Format {
            what: "time-tag file",
            reason: format!("unsupported version {version}"),
        });
    }
    let duration = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() % 9 != 0 {
        return Err(Error::Format {
            what: "time-tag file",
            reason: "truncated record".into(),
        });
    }
    let mut per_detector: std::collections::BTreeMap<u8, Vec<u64>> = Default::default();
    for rec in body.chunks_exact(9) {
        let t = u64::from_le_bytes(rec[1..].try_into().unwrap());
        per_detector.entry(rec[0]).or_default().push(t);
    }
    per_detector
        .into_iter()
        .map(|(id, tags)| TimeTagStream::new(id, tags, duration))
        .collect()
}

/// `detector_id,timestamp_ps` text export, time-ordered.
pub fn write_timetags_csv<W: Write>(w: W, streams: &[&TimeTagStream]) -> Result<()> {
    let mut merged: Vec<(u64, u8)> = streams
        .iter()
        .flat_map(|s| s.tags_ps.iter().map(move |&t| (t, s.detector_id)))
        .collect();
    merged.sort_unstable();
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["detector_id", "timestamp_ps"])?;
    for (t, id) in merged {
        wtr.write_record([id.to_string(), t.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
