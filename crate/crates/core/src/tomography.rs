//! Two-qubit polarization tomography.
//!
//! Sixteen joint projections over `{H, V, D, R}` per photon. Linear
//! inversion solves the projector system directly and is kept as an
//! unconstrained oracle; the maximum-likelihood reconstruction searches over
//! `ρ = T†T / Tr(T†T)` with `T` lower triangular, which is positive
//! semidefinite for every parameter value.

use std::io::{Read, Write};

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::optimize::{self, LbfgsOptions};
use crate::sampling;
use crate::spectral::{ChannelPair, ChannelPlan};
use crate::state::{
    fidelity_to_phi_plus, hermitize, kron2, purity, DensityMatrix, Matrix4c, Polarization, C64,
};

type Matrix16 = SMatrix<f64, 16, 16>;
type Vector16 = SVector<f64, 16>;

/// Admixture of `I/4` added to the clamped linear-inversion estimate so
/// the search starts in the interior of the state space.
const INIT_MIXING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TomographySchedule {
    settings: Vec<(Polarization, Polarization)>,
}

impl TomographySchedule {
    /// `{H, V, D, R} × {H, V, D, R}`, row-major.
    pub fn canonical() -> Self {
        use Polarization::*;
        let basis = [H, V, D, R];
        let settings = basis
            .iter()
            .flat_map(|&a| basis.iter().map(move |&b| (a, b)))
            .collect();
        Self { settings }
    }

    pub fn new(settings: Vec<(Polarization, Polarization)>) -> Result<Self> {
        if settings.len() != 16 {
            return Err(invalid(
                "schedule",
                format!("expected 16 settings, got {}", settings.len()),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        if !settings.iter().all(|s| seen.insert(*s)) {
            return Err(invalid("schedule", "duplicate setting"));
        }
        Ok(Self { settings })
    }

    pub fn settings(&self) -> &[(Polarization, Polarization)] {
        &self.settings
    }

    pub fn index_of(&self, a: Polarization, b: Polarization) -> Option<usize> {
        self.settings.iter().position(|&s| s == (a, b))
    }

    fn projector(&self, k: usize) -> Matrix4c {
        let (a, b) = self.settings[k];
        let v = kron2(&a.jones(), &b.jones());
        v * v.adjoint()
    }

    /// Sum of all 16 projectors.
    fn projector_sum(&self) -> Matrix4c {
        (0..16).map(|k| self.projector(k)).sum()
    }
}

impl Default for TomographySchedule {
    fn default() -> Self {
        Self::canonical()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountRecord {
    pub setting_index: usize,
    pub coincidences: u64,
    pub singles_a: u64,
    pub singles_b: u64,
    pub integration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    pub rho: DensityMatrix,
    pub fidelity: f64,
    pub purity: f64,
    pub log_likelihood: f64,
    pub fidelity_sigma: f64,
    pub purity_sigma: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl TomographyResult {
    pub fn to_report_string(&self) -> String {
        format!(
            "fidelity = {:.6}\nfidelity_sigma = {:.6}\npurity = {:.6}\npurity_sigma = {:.6}\n\
             log_likelihood = {:.6}\niterations = {}\nconverged = {}\n{}",
            self.fidelity,
            self.fidelity_sigma,
            self.purity,
            self.purity_sigma,
            self.log_likelihood,
            self.iterations,
            self.converged,
            self.rho.to_report_string()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Parametric bootstrap replicas for the error bars; 0 disables.
    pub bootstrap_replicas: usize,
    pub bootstrap_seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            bootstrap_replicas: 100,
            bootstrap_seed: 0,
        }
    }
}

/// Poisson-sampled coincidences (and singles) for every setting.
pub fn simulate_tomography_counts(
    rho: &DensityMatrix,
    schedule: &TomographySchedule,
    rate_hz: f64,
    integration_s: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(invalid("rate_hz", "must be > 0"));
    }
    if !(integration_s > 0.0 && integration_s.is_finite()) {
        return Err(invalid("integration_s", "must be > 0"));
    }
    let mut rng = sampling::rng_for(seed, 0);
    let m = rho.matrix();
    let total = rate_hz * integration_s;
    Ok(schedule
        .settings
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let p = crate::state::coincidence_probability(rho, a, b);
            let pa = marginal(m, &a.jones(), true);
            let pb = marginal(m, &b.jones(), false);
            CountRecord {
                setting_index: k,
                coincidences: sampling::poisson(&mut rng, total * p),
                singles_a: sampling::poisson(&mut rng, total * pa),
                singles_b: sampling::poisson(&mut rng, total * pb),
                integration_s,
            }
        })
        .collect())
}

fn marginal(m: &Matrix4c, v: &crate::state::Jones, first: bool) -> f64 {
    use crate::state::Polarization::{H, V};
    [H, V]
        .iter()
        .map(|o| {
            let (a, b) = if first { (*v, o.jones()) } else { (o.jones(), *v) };
            crate::state::projection_probability(m, &a, &b)
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

fn check_records(counts: &[CountRecord]) -> Result<Vector16> {
    if counts.len() != 16 {
        return Err(invalid(
            "counts",
            format!("expected 16 records, got {}", counts.len()),
        ));
    }
    let mut n = Vector16::zeros();
    let mut seen = [false; 16];
    for r in counts {
        if r.setting_index >= 16 || seen[r.setting_index] {
            return Err(invalid("counts", "setting indices must cover 0..16 exactly once"));
        }
        if !(r.integration_s > 0.0) {
            return Err(invalid("integration_s", "must be > 0"));
        }
        seen[r.setting_index] = true;
        n[r.setting_index] = r.coincidences as f64;
    }
    if n.sum() <= 0.0 {
        return Err(Error::DegenerateCounts("all coincidence counts are zero".into()));
    }
    Ok(n)
}

/// Pauli products `σ_i ⊗ σ_j` indexed by `4 i + j`.
fn pauli_basis() -> [Matrix4c; 16] {
    use crate::state::{kron_matrix, Matrix2c};
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let paulis = [
        Matrix2c::new(one, z, z, one),
        Matrix2c::new(z, one, one, z),
        Matrix2c::new(z, -i, i, z),
        Matrix2c::new(one, z, z, -one),
    ];
    std::array::from_fn(|k| kron_matrix(&paulis[k / 4], &paulis[k % 4]))
}

/// Unconstrained reconstruction `ρ = Σ s_ij σ_i⊗σ_j / 4` from the linear
/// system `Tr[ρ P_k] ∝ n_k`. Hermitian with unit trace; eigenvalues are not
/// clamped.
pub fn linear_inversion(counts: &[CountRecord], schedule: &TomographySchedule) -> Result<Matrix4c> {
    let n = check_records(counts)?;
    let paulis = pauli_basis();
    let design = Matrix16::from_fn(|k, mu| {
        (schedule.projector(k) * paulis[mu]).trace().re / 4.0
    });
    let lu = design.lu();
    if lu.determinant().abs() < 1e-12 {
        return Err(Error::SingularDesign);
    }
    let s = lu.solve(&n).ok_or(Error::SingularDesign)?;
    let mut rho = Matrix4c::zeros();
    for (mu, p) in paulis.iter().enumerate() {
        rho += p * C64::new(s[mu] / 4.0, 0.0);
    }
    let tr = rho.trace().re;
    if !(tr > 0.0) {
        return Err(Error::DegenerateCounts(
            "counts give a non-positive normalization".into(),
        ));
    }
    Ok(hermitize(&(rho / C64::new(tr, 0.0))))
}

/// Project a Hermitian matrix onto the state space by zeroing negative
/// eigenvalues and renormalizing.
pub fn clamp_to_physical(m: &Matrix4c) -> Result<DensityMatrix> {
    let eig = hermitize(m).symmetric_eigen();
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    let total: f64 = clamped.sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateCounts("no positive eigenvalue".into()));
    }
    let mut out = Matrix4c::zeros();
    for k in 0..4 {
        let v = eig.eigenvectors.column(k);
        out += v * v.adjoint() * C64::new(clamped[k] / total, 0.0);
    }
    DensityMatrix::new(hermitize(&out))
}

/// Lower-triangular parameterization: 4 real diagonal entries followed by
/// the real and imaginary parts of the 6 strictly lower entries.
pub mod cholesky {
    use super::*;

    pub const N_PARAMS: usize = 16;

    pub(crate) const LOWER: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

    pub fn params_to_t(t: &[f64]) -> Matrix4c {
        let mut m = Matrix4c::zeros();
        for k in 0..4 {
            m[(k, k)] = C64::new(t[k], 0.0);
        }
        for (idx, &(r, c)) in LOWER.iter().enumerate() {
            m[(r, c)] = C64::new(t[4 + 2 * idx], t[5 + 2 * idx]);
        }
        m
    }

    pub fn t_to_params(m: &Matrix4c) -> [f64; N_PARAMS] {
        let mut out = [0.0; N_PARAMS];
        for k in 0..4 {
            out[k] = m[(k, k)].re;
        }
        for (idx, &(r, c)) in LOWER.iter().enumerate() {
            out[4 + 2 * idx] = m[(r, c)].re;
            out[5 + 2 * idx] = m[(r, c)].im;
        }
        out
    }

    /// `T†T / Tr(T†T)`.
    pub fn params_to_rho(t: &[f64]) -> Matrix4c {
        let tm = params_to_t(t);
        let m = tm.adjoint() * tm;
        let tr = m.trace().re;
        m / C64::new(tr, 0.0)
    }

    /// Lower-triangular `T` with real non-negative diagonal and `T†T = ρ`,
    /// from a QL factorization of `√D V†`.
    pub fn rho_to_t(rho: &Matrix4c) -> Matrix4c {
        let eig = hermitize(rho).symmetric_eigen();
        let mut a = Matrix4c::zeros();
        for k in 0..4 {
            let w = eig.eigenvalues[k].max(0.0).sqrt();
            let v = eig.eigenvectors.column(k);
            for c in 0..4 {
                a[(k, c)] = v[c].conj() * w;
            }
        }
        // QL through QR of the index-reversed matrix.
        let rev = Matrix4c::from_fn(|r, c| a[(3 - r, 3 - c)]);
        let r_upper = rev.qr().r();
        let mut t = Matrix4c::from_fn(|r, c| r_upper[(3 - r, 3 - c)]);
        for r in 0..4 {
            let d = t[(r, r)];
            if d.norm() > 0.0 {
                let phase = d.conj() / d.norm();
                for c in 0..4 {
                    t[(r, c)] *= phase;
                }
            }
        }
        t
    }
}

/// Negative profile log-likelihood per count and its gradient.
///
/// With an unknown overall intensity the Poisson likelihood maximized over
/// that intensity is `Σ n_k ln m_k − N ln Σ m_k` (up to constants), where
/// `m_k = Tr[M P_k]` for the unnormalized `M = T†T`.
struct Likelihood {
    projectors: [Matrix4c; 16],
    projector_sum: Matrix4c,
    freqs: [f64; 16],
}

impl Likelihood {
    fn new(n: &Vector16, schedule: &TomographySchedule) -> Self {
        let total = n.sum();
        Self {
            projectors: std::array::from_fn(|k| schedule.projector(k)),
            projector_sum: schedule.projector_sum(),
            freqs: std::array::from_fn(|k| n[k] / total),
        }
    }

    fn value(&self, m: &Matrix4c) -> f64 {
        let mut f = 0.0;
        for k in 0..16 {
            if self.freqs[k] > 0.0 {
                let mk = (m * self.projectors[k]).trace().re;
                if !(mk > 0.0) {
                    return f64::INFINITY;
                }
                f -= self.freqs[k] * mk.ln();
            }
        }
        f + (m * self.projector_sum).trace().re.ln()
    }

    fn value_and_gradient(&self, t: &[f64], grad: &mut [f64]) -> f64 {
        let tm = cholesky::params_to_t(t);
        let m = tm.adjoint() * tm;
        let total = (m * self.projector_sum).trace().re;
        let mut f = total.ln();
        let mut g = self.projector_sum / C64::new(total, 0.0);
        for k in 0..16 {
            if self.freqs[k] > 0.0 {
                let mk = (m * self.projectors[k]).trace().re;
                if !(mk > 0.0) {
                    grad.iter_mut().for_each(|v| *v = 0.0);
                    return f64::INFINITY;
                }
                f -= self.freqs[k] * mk.ln();
                g -= self.projectors[k] * C64::new(self.freqs[k] / mk, 0.0);
            }
        }
        // df = 2 Re Tr[G T† dT]
        let a = g * tm.adjoint();
        for k in 0..4 {
            grad[k] = 2.0 * a[(k, k)].re;
        }
        for (idx, &(r, c)) in cholesky::LOWER.iter().enumerate() {
            grad[4 + 2 * idx] = 2.0 * a[(c, r)].re;
            grad[5 + 2 * idx] = -2.0 * a[(c, r)].im;
        }
        f
    }
}

/// Objective used by the MLE search, exposed for gradient validation.
pub fn negative_log_likelihood(
    counts: &[CountRecord],
    schedule: &TomographySchedule,
    params: &[f64],
    grad: &mut [f64],
) -> Result<f64> {
    let n = check_records(counts)?;
    Ok(Likelihood::new(&n, schedule).value_and_gradient(params, grad))
}

/// Poisson log-likelihood `Σ n_k ln λ_k − λ_k` of `rho` with the intensity
/// set to its best-fit value.
pub fn log_likelihood(
    counts: &[CountRecord],
    schedule: &TomographySchedule,
    rho: &Matrix4c,
) -> Result<f64> {
    let n = check_records(counts)?;
    let total = n.sum();
    let probs: Vec<f64> = (0..16)
        .map(|k| (rho * schedule.projector(k)).trace().re)
        .collect();
    let scale = total / probs.iter().sum::<f64>();
    let mut ll = 0.0;
    for k in 0..16 {
        let lambda = scale * probs[k];
        if n[k] > 0.0 {
            if !(lambda > 0.0) {
                return Ok(f64::NEG_INFINITY);
            }
            ll += n[k] * lambda.ln();
        }
        ll -= lambda;
    }
    Ok(ll)
}

/// Starting state: clamped linear inversion mixed with a little white noise.
pub fn initial_state(counts: &[CountRecord], schedule: &TomographySchedule) -> Result<DensityMatrix> {
    let lin = linear_inversion(counts, schedule)?;
    clamp_to_physical(&lin)
}

struct Fit {
    rho: DensityMatrix,
    iterations: usize,
    converged: bool,
}

fn fit(n: &Vector16, counts: &[CountRecord], schedule: &TomographySchedule, max_iterations: usize) -> Result<Fit> {
    let clamped = initial_state(counts, schedule)?;
    let start = clamped.matrix() * C64::new(1.0 - INIT_MIXING, 0.0)
        + Matrix4c::identity() * C64::new(INIT_MIXING / 4.0, 0.0);
    let t0 = cholesky::t_to_params(&cholesky::rho_to_t(&start));
    let lik = Likelihood::new(n, schedule);
    let opts = LbfgsOptions {
        max_iterations,
        ..Default::default()
    };
    let min = optimize::minimize(|t, g| lik.value_and_gradient(t, g), &t0, &opts);
    let mut rho = cholesky::params_to_rho(&min.x);
    // never return something less likely than the physical starting point
    if lik.value(clamped.matrix()) < lik.value(&rho) {
        rho = *clamped.matrix();
    }
    Ok(Fit {
        rho: DensityMatrix::new(hermitize(&rho))?,
        iterations: min.iterations,
        converged: min.converged,
    })
}

pub fn mle_reconstruct(counts: &[CountRecord], schedule: &TomographySchedule) -> Result<TomographyResult> {
    mle_reconstruct_with(counts, schedule, &MleOptions::default())
}

/// Maximum-likelihood physical state with parametric-bootstrap error bars.
pub fn mle_reconstruct_with(
    counts: &[CountRecord],
    schedule: &TomographySchedule,
    options: &MleOptions,
) -> Result<TomographyResult> {
    let n = check_records(counts)?;
    let best = fit(&n, counts, schedule, options.max_iterations)?;
    let log_likelihood = log_likelihood(counts, schedule, best.rho.matrix())?;

    let (fidelity_sigma, purity_sigma) = if options.bootstrap_replicas > 1 {
        bootstrap(&best.rho, counts, schedule, options)
    } else {
        (0.0, 0.0)
    };

    let result = TomographyResult {
        fidelity: fidelity_to_phi_plus(&best.rho),
        purity: purity(&best.rho),
        rho: best.rho,
        log_likelihood,
        fidelity_sigma,
        purity_sigma,
        iterations: best.iterations,
        converged: best.converged,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NotConverged {
            iterations: result.iterations,
            best: Box::new(result),
        })
    }
}

fn bootstrap(
    fitted: &DensityMatrix,
    counts: &[CountRecord],
    schedule: &TomographySchedule,
    options: &MleOptions,
) -> (f64, f64) {
    let total: f64 = counts.iter().map(|r| r.coincidences as f64).sum();
    let probs: Vec<f64> = (0..16)
        .map(|k| (fitted.matrix() * schedule.projector(k)).trace().re.max(0.0))
        .collect();
    let scale = total / probs.iter().sum::<f64>();

    let samples: Vec<(f64, f64)> = (0..options.bootstrap_replicas)
        .into_par_iter()
        .filter_map(|replica| {
            let mut rng = sampling::rng_for(options.bootstrap_seed, replica as u64 + 1);
            let resampled: Vec<CountRecord> = counts
                .iter()
                .map(|r| CountRecord {
                    coincidences: sampling::poisson(&mut rng, scale * probs[r.setting_index]),
                    ..*r
                })
                .collect();
            let n = check_records(&resampled).ok()?;
            let f = fit(&n, &resampled, schedule, options.max_iterations).ok()?;
            Some((fidelity_to_phi_plus(&f.rho), purity(&f.rho)))
        })
        .collect();

    let sd = |xs: Vec<f64>| {
        let m = xs.len() as f64;
        if m < 2.0 {
            return 0.0;
        }
        let mean = xs.iter().sum::<f64>() / m;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    };
    (
        sd(samples.iter().map(|s| s.0).collect()),
        sd(samples.iter().map(|s| s.1).collect()),
    )
}

/// Per-pair tomography results in plan order. Failures are kept in place.
#[derive(Debug)]
pub struct ChannelSweep {
    pub results: Vec<(ChannelPair, Result<TomographyResult>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub succeeded: usize,
    pub failed: usize,
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    pub min_purity: f64,
    pub mean_purity: f64,
}

impl ChannelSweep {
    pub fn summary(&self) -> SweepSummary {
        let ok: Vec<&TomographyResult> = self.results.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
        let n = ok.len() as f64;
        let mean = |f: fn(&TomographyResult) -> f64| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| f(r)).sum::<f64>() / n
            }
        };
        let min = |f: fn(&TomographyResult) -> f64| ok.iter().map(|r| f(r)).fold(f64::NAN, f64::min);
        SweepSummary {
            succeeded: ok.len(),
            failed: self.results.len() - ok.len(),
            min_fidelity: min(|r| r.fidelity),
            mean_fidelity: mean(|r| r.fidelity),
            min_purity: min(|r| r.purity),
            mean_purity: mean(|r| r.purity),
        }
    }
}

/// Independent simulated tomography for each plan pair. Each pair gets its
/// own count and bootstrap streams derived from `seed`.
pub fn run_channel_sweep(
    states: &[DensityMatrix],
    plan: &ChannelPlan,
    schedule: &TomographySchedule,
    rate_hz: f64,
    integration_s: f64,
    seed: u64,
    options: &MleOptions,
) -> Result<ChannelSweep> {
    if states.len() != plan.pairs.len() {
        return Err(invalid(
            "states",
            format!("{} states for {} channel pairs", states.len(), plan.pairs.len()),
        ));
    }
    let results = plan
        .pairs
        .par_iter()
        .zip(states.par_iter())
        .enumerate()
        .map(|(k, (pair, rho))| {
            let channel_seed = seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let outcome = simulate_tomography_counts(rho, schedule, rate_hz, integration_s, channel_seed)
                .and_then(|counts| {
                    let opts = MleOptions {
                        bootstrap_seed: channel_seed ^ 0xB007,
                        ..*options
                    };
                    mle_reconstruct_with(&counts, schedule, &opts)
                });
            (*pair, outcome)
        })
        .collect();
    Ok(ChannelSweep { results })
}

/// `setting_a,setting_b,coincidences,singles_a,singles_b,integration_s`.
pub fn write_counts_csv<W: Write>(w: W, counts: &[CountRecord], schedule: &TomographySchedule) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["setting_a", "setting_b", "coincidences", "singles_a", "singles_b", "integration_s"])?;
    for r in counts {
        let (a, b) = schedule.settings[r.setting_index];
        wtr.write_record([
            a.to_string(),
            b.to_string(),
            r.coincidences.to_string(),
            r.singles_a.to_string(),
            r.singles_b.to_string(),
            r.integration_s.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_counts_csv<R: Read>(r: R, schedule: &TomographySchedule) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let expected = ["setting_a", "setting_b", "coincidences", "singles_a", "singles_b", "integration_s"];
    if rdr.headers()?.iter().ne(expected.iter().copied()) {
        return Err(Error::Format {
            what: "count records",
            reason: format!("header must be {}", expected.join(",")),
        });
    }
    let bad = |line: usize, reason: String| Error::Format {
        what: "count records",
        reason: format!("record {line}: {reason}"),
    };
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let a: Polarization = rec[0].parse()?;
        let b: Polarization = rec[1].parse()?;
        let setting_index = schedule
            .index_of(a, b)
            .ok_or_else(|| bad(line, format!("setting ({a}, {b}) not in schedule")))?;
        let int = |i: usize| rec[i].parse::<u64>().map_err(|e| bad(line, e.to_string()));
        out.push(CountRecord {
            setting_index,
            coincidences: int(2)?,
            singles_a: int(3)?,
            singles_b: int(4)?,
            integration_s: rec[5].parse::<f64>().map_err(|e| bad(line, e.to_string()))?,
        });
    }
    Ok(out)
}

/// Noise-free counts `round(total · p_k)`.
pub fn expected_counts(rho: &Matrix4c, schedule: &TomographySchedule, total: f64) -> Vec<CountRecord> {
    (0..16)
        .map(|k| CountRecord {
            setting_index: k,
            coincidences: (total * (rho * schedule.projector(k)).trace().re.max(0.0)).round() as u64,
            singles_a: 0,
            singles_b: 0,
            integration_s: 1.0,
        })
        .collect()
}
