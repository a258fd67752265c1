//! Source emission model: the 100 GHz ITU grid, symmetric channel-pair
//! planning around the pump, the SPDC spectral envelope, pair-generation
//! rates and an optional user-supplied Raman noise spectrum.

use std::collections::BTreeSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Grid origin (channel 0) in GHz.
pub const ITU_GRID_ORIGIN_GHZ: i64 = 190_000;
/// Grid spacing in GHz.
pub const ITU_GRID_SPACING_GHZ: i64 = 100;

/// Channel width used for the brightness formula (100 GHz at 1560 nm).
pub const DEFAULT_CHANNEL_BANDWIDTH_NM: f64 = 0.8;

/// Largest |n| a channel plan may reach on the extrapolated grid.
pub const DEFAULT_GRID_BOUND: i32 = 60;

/// Channel frequency in integer GHz. Exact, so symmetric pairs sum exactly.
pub fn itu_channel_frequency_ghz(n: i32) -> i64 {
    ITU_GRID_ORIGIN_GHZ + ITU_GRID_SPACING_GHZ * n as i64
}

/// Channel frequency in THz on the 100 GHz grid, `190.0 + 0.1 n`.
pub fn itu_channel_frequency(n: i32) -> f64 {
    itu_channel_frequency_ghz(n) as f64 / 1000.0
}

/// Vacuum wavelength of channel `n` in nm.
pub fn itu_channel_wavelength_nm(n: i32) -> f64 {
    frequency_thz_to_wavelength_nm(itu_channel_frequency(n))
}

pub fn frequency_thz_to_wavelength_nm(f_thz: f64) -> f64 {
    SPEED_OF_LIGHT / (f_thz * 1e12) * 1e9
}

/// Energy-conserving partner of channel `n` around `pump`.
pub fn conjugate_channel(n: i32, pump: i32) -> i32 {
    2 * pump - n
}

/// Optical bandwidth in nm of a frequency slot: `λ² Δν / c`.
pub fn channel_bandwidth_nm(spacing_ghz: f64, center_nm: f64) -> f64 {
    let lambda_m = center_nm * 1e-9;
    lambda_m * lambda_m * spacing_ghz * 1e9 / SPEED_OF_LIGHT * 1e9
}

/// Measured source figures for one PPLN configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceParams {
    pub pump_wavelength_nm: f64,
    pub pump_linewidth_hz: f64,
    pub spdc_fwhm_nm: f64,
    pub normalized_brightness_pairs_per_s_nm_mw2: f64,
    pub shg_efficiency_per_w: f64,
    pub smf_coupling: f64,
}

impl SourceParams {
    /// PPLN 1 figures.
    pub fn crystal1() -> Self {
        Self {
            spdc_fwhm_nm: 91.0,
            shg_efficiency_per_w: 0.34,
            smf_coupling: 0.655,
            ..Self::crystal2()
        }
    }

    /// PPLN 2 figures.
    pub fn crystal2() -> Self {
        Self {
            pump_wavelength_nm: 1560.6,
            pump_linewidth_hz: 1e3,
            spdc_fwhm_nm: 92.0,
            normalized_brightness_pairs_per_s_nm_mw2: 10.3e3,
            shg_efficiency_per_w: 0.392,
            smf_coupling: 0.62,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pump_wavelength_nm", self.pump_wavelength_nm),
            ("pump_linewidth_hz", self.pump_linewidth_hz),
            ("spdc_fwhm_nm", self.spdc_fwhm_nm),
            (
                "normalized_brightness_pairs_per_s_nm_mw2",
                self.normalized_brightness_pairs_per_s_nm_mw2,
            ),
            ("shg_efficiency_per_w", self.shg_efficiency_per_w),
            ("smf_coupling", self.smf_coupling),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(name, format!("must be > 0, got {value}")));
            }
        }
        if self.smf_coupling > 1.0 {
            return Err(invalid("smf_coupling", "must be <= 1"));
        }
        Ok(())
    }
}

impl Default for SourceParams {
    fn default() -> Self {
        Self::crystal2()
    }
}

/// Relative SPDC emission density at `wavelength_nm`.
///
/// Gaussian envelope centred on the pump wavelength (degenerate type-0
/// emission), normalised to 1 at the centre and 1/2 at ± FWHM/2.
pub fn spdc_spectral_density(wavelength_nm: f64, params: &SourceParams) -> f64 {
    let x = (wavelength_nm - params.pump_wavelength_nm) / params.spdc_fwhm_nm;
    (-4.0 * std::f64::consts::LN_2 * x * x).exp()
}

/// Pair rate (pairs/s) collected in a channel of `channel_bandwidth_nm`
/// centred at `channel_center_nm`, for `pump_power_mw` of telecom pump.
///
/// Quadratic in pump power because of the SHG → SPDC cascade.
pub fn pair_rate(
    pump_power_mw: f64,
    channel_bandwidth_nm: f64,
    channel_center_nm: f64,
    params: &SourceParams,
) -> Result<f64> {
    if !(pump_power_mw >= 0.0 && pump_power_mw.is_finite()) {
        return Err(invalid("pump_power_mw", "must be >= 0"));
    }
    if !(channel_bandwidth_nm > 0.0 && channel_bandwidth_nm.is_finite()) {
        return Err(invalid("channel_bandwidth_nm", "must be > 0"));
    }
    Ok(params.normalized_brightness_pairs_per_s_nm_mw2
        * channel_bandwidth_nm
        * pump_power_mw
        * pump_power_mw
        * spdc_spectral_density(channel_center_nm, params))
}

/// One signal/idler channel assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelPair {
    /// Lower channel number (longer wavelength).
    pub signal: i32,
    pub idler: i32,
}

impl ChannelPair {
    pub fn distance_from(&self, pump: i32) -> i32 {
        (pump - self.signal).abs().max((self.idler - pump).abs())
    }
}

impl std::fmt::Display for ChannelPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.signal, self.idler)
    }
}

/// Ordered symmetric channel pairs around the pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub pump_channel: i32,
    pub pairs: Vec<ChannelPair>,
    pub excluded: BTreeSet<i32>,
    pub channel_spacing_ghz: f64,
}

/// Select the `n_pairs` nearest symmetric pairs around `pump`, skipping any
/// pair that touches an excluded channel.
pub fn build_channel_plan(
    pump: i32,
    n_pairs: usize,
    excluded: &BTreeSet<i32>,
) -> Result<ChannelPlan> {
    build_channel_plan_bounded(pump, n_pairs, excluded, DEFAULT_GRID_BOUND)
}

pub fn build_channel_plan_bounded(
    pump: i32,
    n_pairs: usize,
    excluded: &BTreeSet<i32>,
    grid_bound: i32,
) -> Result<ChannelPlan> {
    if n_pairs == 0 {
        return Err(Error::EmptyPlan);
    }
    let mut pairs = Vec::with_capacity(n_pairs);
    let mut offset = 0;
    while pairs.len() < n_pairs {
        offset += 1;
        let (signal, idler) = (pump - offset, pump + offset);
        for channel in [signal, idler] {
            if channel.abs() > grid_bound {
                return Err(Error::GridBound {
                    channel,
                    bound: grid_bound,
                });
            }
        }
        if excluded.contains(&signal) || excluded.contains(&idler) {
            continue;
        }
        pairs.push(ChannelPair { signal, idler });
    }
    Ok(ChannelPlan {
        pump_channel: pump,
        pairs,
        excluded: excluded.clone(),
        channel_spacing_ghz: ITU_GRID_SPACING_GHZ as f64,
    })
}

impl ChannelPlan {
    /// 20 pairs around ITU 21 with channels 20 and 22 excluded.
    pub fn default_plan() -> Self {
        build_channel_plan(21, 20, &BTreeSet::from([20, 22])).expect("default plan is valid")
    }

    /// Plan from an explicit pair list. Pairs are re-sorted by distance
    /// from the pump; each must be symmetric and avoid excluded channels.
    pub fn from_pairs(
        pump: i32,
        pairs: &[(i32, i32)],
        excluded: &BTreeSet<i32>,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyPlan);
        }
        let mut out = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a + b != 2 * pump {
                return Err(invalid(
                    "channels",
                    format!("pair ({a}, {b}) is not symmetric around pump channel {pump}"),
                ));
            }
            if a == pump || excluded.contains(&a) || excluded.contains(&b) {
                return Err(invalid(
                    "channels",
                    format!("pair ({a}, {b}) uses the pump or an excluded channel"),
                ));
            }
            out.push(ChannelPair {
                signal: a.min(b),
                idler: a.max(b),
            });
        }
        out.sort_by_key(|p| p.distance_from(pump));
        out.dedup();
        Ok(Self {
            pump_channel: pump,
            pairs: out,
            excluded: excluded.clone(),
            channel_spacing_ghz: ITU_GRID_SPACING_GHZ as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Piecewise-linear noise spectrum in counts/s/nm/mW. Zero outside the
/// sampled range.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoiseSpectrum {
    samples: Vec<(f64, f64)>,
}

/// Validate `(wavelength_nm, rate)` rows into a spectrum.
pub fn load_noise_spectrum(rows: &[(f64, f64)]) -> Result<NoiseSpectrum> {
    for (row, &(wavelength, rate)) in rows.iter().enumerate() {
        if !wavelength.is_finite() || !rate.is_finite() {
            return Err(Error::NoiseSpectrum {
                row,
                reason: "non-finite value".into(),
            });
        }
        if rate < 0.0 {
            return Err(Error::NoiseSpectrum {
                row,
                reason: format!("negative rate {rate}"),
            });
        }
        if row > 0 && wavelength <= rows[row - 1].0 {
            return Err(Error::NoiseSpectrum {
                row,
                reason: "wavelengths must be strictly increasing".into(),
            });
        }
    }
    Ok(NoiseSpectrum {
        samples: rows.to_vec(),
    })
}

impl NoiseSpectrum {
    /// Read a two-column `wavelength_nm,rate` file. A non-numeric first
    /// line is treated as a header; `#` starts a comment.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (index, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::NoiseSpectrum {
                    row: rows.len(),
                    reason: format!("expected 2 columns, found {}", record.len()),
                });
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(w), Ok(r)) => rows.push((w, r)),
                _ if index == 0 => continue,
                _ => {
                    return Err(Error::NoiseSpectrum {
                        row: rows.len(),
                        reason: format!("unparseable row {:?}", record.as_slice()),
                    })
                }
            }
        }
        load_noise_spectrum(&rows)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Interpolated rate at `wavelength_nm`.
    pub fn rate_at(&self, wavelength_nm: f64) -> f64 {
        let s = &self.samples;
        match s.len() {
            0 => 0.0,
            1 => {
                if wavelength_nm == s[0].0 {
                    s[0].1
                } else {
                    0.0
                }
            }
            _ => {
                if wavelength_nm < s[0].0 || wavelength_nm > s[s.len() - 1].0 {
                    return 0.0;
                }
                let k = s.partition_point(|&(w, _)| w <= wavelength_nm);
                if k == s.len() {
                    return s[k - 1].1;
                }
                let (x0, y0) = s[k - 1];
                let (x1, y1) = s[k];
                y0 + (y1 - y0) * (wavelength_nm - x0) / (x1 - x0)
            }
        }
    }

    /// Exact integral of the interpolant over `[lo, hi]` (counts/s/mW).
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for w in self.samples.windows(2) {
            let (x0, x1) = (w[0].0.max(lo), w[1].0.min(hi));
            if x1 > x0 {
                total += 0.5 * (self.rate_at(x0) + self.rate_at(x1)) * (x1 - x0);
            }
        }
        total
    }

    /// Noise counts/s falling into a channel for a given pump power.
    pub fn channel_noise_rate(&self, center_nm: f64, bandwidth_nm: f64, pump_power_mw: f64) -> f64 {
        let half = 0.5 * bandwidth_nm;
        self.integrate(center_nm - half, center_nm + half) * pump_power_mw
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_examples() {
        assert_abs_diff_eq!(itu_channel_frequency(21), 192.1, epsilon = 1e-12);
        assert_abs_diff_eq!(itu_channel_frequency(19), 191.9, epsilon = 1e-12);
        assert_abs_diff_eq!(itu_channel_frequency(0), 190.0, epsilon = 1e-12);
        assert_abs_diff_eq!(itu_channel_wavelength_nm(21), 1560.61, epsilon = 0.01);
        assert_abs_diff_eq!(itu_channel_wavelength_nm(19), 1562.24, epsilon = 0.01);
        assert_abs_diff_eq!(itu_channel_frequency(-3), 189.7, epsilon = 1e-12);
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_channel(19, 21), 23);
        assert_eq!(conjugate_channel(21, 21), 21);
        assert_eq!(conjugate_channel(3, 21), 39);
    }

    #[test]
    fn default_plan_endpoints() {
        let plan = build_channel_plan(21, 20, &BTreeSet::from([20, 22])).unwrap();
        assert_eq!(plan.len(), 20);
        assert_eq!(plan.pairs[0], ChannelPair { signal: 19, idler: 23 });
        assert_eq!(plan.pairs[19], ChannelPair { signal: 0, idler: 42 });
        assert_eq!(plan, ChannelPlan::default_plan());
    }

    #[test]
    fn plan_without_exclusions() {
        let plan = build_channel_plan(21, 1, &BTreeSet::new()).unwrap();
        assert_eq!(plan.pairs, vec![ChannelPair { signal: 20, idler: 22 }]);
    }

    #[test]
    fn plan_rejects_zero_pairs_and_grid_overflow() {
        assert!(matches!(
            build_channel_plan(21, 0, &BTreeSet::new()),
            Err(Error::EmptyPlan)
        ));
        assert!(matches!(
            build_channel_plan(21, 45, &BTreeSet::new()),
            Err(Error::GridBound { .. })
        ));
        assert!(build_channel_plan_bounded(21, 45, &BTreeSet::new(), 80).is_ok());
    }

    #[test]
    fn plan_from_pairs_sorts_and_validates() {
        let excl = BTreeSet::from([20, 22]);
        let plan = ChannelPlan::from_pairs(21, &[(17, 25), (23, 19)], &excl).unwrap();
        assert_eq!(plan.pairs[0], ChannelPair { signal: 19, idler: 23 });
        assert!(ChannelPlan::from_pairs(21, &[(18, 25)], &excl).is_err());
        assert!(ChannelPlan::from_pairs(21, &[(20, 22)], &excl).is_err());
    }

    #[test]
    fn spectral_density_shape() {
        let p = SourceParams::crystal1();
        assert_abs_diff_eq!(spdc_spectral_density(1560.6, &p), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spdc_spectral_density(1560.6 + 45.5, &p), 0.5, epsilon = 1e-12);
        for x in [10.0, 30.0, 60.0] {
            assert_abs_diff_eq!(
                spdc_spectral_density(1560.6 + x, &p),
                spdc_spectral_density(1560.6 - x, &p),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn pair_rate_examples() {
        let p = SourceParams::crystal1();
        let r = pair_rate(1.0, 0.8, p.pump_wavelength_nm, &p).unwrap();
        assert_abs_diff_eq!(r, 8240.0, epsilon = 1e-9);
        assert_eq!(pair_rate(0.0, 0.8, 1560.6, &p).unwrap(), 0.0);
        for power in [0.5, 1.0, 2.0] {
            let ratio = pair_rate(2.0 * power, 0.8, 1562.2, &p).unwrap()
                / pair_rate(power, 0.8, 1562.2, &p).unwrap();
            assert_abs_diff_eq!(ratio, 4.0, epsilon = 1e-12);
        }
        assert!(pair_rate(-1.0, 0.8, 1560.6, &p).is_err());
        assert!(pair_rate(1.0, 0.0, 1560.6, &p).is_err());
    }

    #[test]
    fn hundred_ghz_is_about_point_eight_nm() {
        assert_abs_diff_eq!(channel_bandwidth_nm(100.0, 1560.6), 0.8, epsilon = 0.02);
    }

    #[test]
    fn source_validation() {
        assert!(SourceParams::default().validate().is_ok());
        let mut p = SourceParams { smf_coupling: 1.2, ..SourceParams::default() };
        assert!(p.validate().is_err());
        p.smf_coupling = 0.5;
        p.spdc_fwhm_nm = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn noise_spectrum_examples() {
        let empty = load_noise_spectrum(&[]).unwrap();
        assert_eq!(empty.rate_at(1560.0), 0.0);

        let single = load_noise_spectrum(&[(1560.0, 100.0)]).unwrap();
        assert_eq!(single.rate_at(1560.0), 100.0);
        assert_eq!(single.rate_at(1550.0), 0.0);

        let two = load_noise_spectrum(&[(1550.0, 0.0), (1570.0, 200.0)]).unwrap();
        assert_abs_diff_eq!(two.rate_at(1560.0), 100.0, epsilon = 1e-12);
        assert_eq!(two.rate_at(1571.0), 0.0);
        assert_abs_diff_eq!(two.rate_at(1570.0), 200.0, epsilon = 1e-12);
        assert_abs_diff_eq!(two.integrate(1540.0, 1580.0), 2000.0, epsilon = 1e-9);
        assert_abs_diff_eq!(two.channel_noise_rate(1560.0, 0.8, 2.0), 160.0, epsilon = 1e-9);
    }

    #[test]
    fn noise_spectrum_rejects_bad_rows() {
        assert!(load_noise_spectrum(&[(1560.0, 1.0), (1550.0, 1.0)]).is_err());
        assert!(load_noise_spectrum(&[(1560.0, 1.0), (1560.0, 1.0)]).is_err());
        assert!(load_noise_spectrum(&[(1560.0, -1.0)]).is_err());
    }

    #[test]
    fn noise_spectrum_csv() {
        let text = "wavelength_nm,rate\n# comment\n1550, 0\n1570,200\n";
        let s = NoiseSpectrum::from_csv(text.as_bytes()).unwrap();
        assert_eq!(s.samples().len(), 2);
        assert!(NoiseSpectrum::from_csv("1550,0\nfoo,bar\n".as_bytes()).is_err());
    }
}
