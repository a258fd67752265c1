//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sagnac_core::detection::{self, DetectorModel, PairStreamSimulation, TimeTagStream};
use sagnac_core::franson::{self, FransonConfig};
use sagnac_core::qkd::{self, DriftEvent, SessionConfig};
use sagnac_core::scenario::{run_scenario, Command, ScenarioConfig};
use sagnac_core::spectral::{self, ChannelPlan};
use sagnac_core::state::{self, DensityMatrix, Matrix4c, Polarization, WaveplateKind};
use sagnac_core::tomography::{self, MleOptions, TomographySchedule};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> Matrix4c {
    let t = Matrix4c::from_fn(|_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let m = t.adjoint() * t;
    let tr = m.trace();
    m / tr
}

fn grid() -> Outcome {
    let cases = [(21, 1560.6), (19, 1562.23), (23, 1558.98)];
    let mut worst: f64 = 0.0;
    for (n, nm) in cases {
        let got = spectral::itu_channel_wavelength_nm(n);
        worst = worst.max((got - nm).abs());
        check((got - nm).abs() <= 0.01, format!("ITU {n}: {got:.4} nm vs {nm} nm"))?;
    }
    Ok(format!("max deviation {worst:.4} nm"))
}

fn tomography_oracle() -> Outcome {
    let schedule = TomographySchedule::canonical();
    let opts = MleOptions {
        bootstrap_replicas: 0,
        ..MleOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for k in 0..50 {
        let rho = random_state(&mut rng);
        let counts = tomography::expected_counts(&rho, &schedule, 4e12);
        let lin = tomography::linear_inversion(&counts, &schedule).map_err(|e| e.to_string())?;
        let mle = tomography::mle_reconstruct_with(&counts, &schedule, &opts).map_err(|e| format!("state {k}: {e}"))?;
        let d = state::trace_distance(&lin, mle.rho.matrix());
        worst = worst.max(d);
        let e = mle.rho.eigenvalues()[0];
        min_eig = min_eig.min(e);
        check(d < 1e-6, format!("state {k}: trace distance {d:.3e}"))?;
        check(e >= 0.0, format!("state {k}: eigenvalue {e:.3e}"))?;
    }
    Ok(format!("max trace distance {worst:.2e}, min eigenvalue {min_eig:.2e}"))
}

fn fidelity_band() -> Outcome {
    let p = 0.96;
    let plan = ChannelPlan::default_plan();
    let states = vec![DensityMatrix::werner(p).unwrap(); plan.len()];
    let sweep = tomography::run_channel_sweep(
        &states,
        &plan,
        &TomographySchedule::canonical(),
        1e4,
        100.0,
        96,
        &MleOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let target = (3.0 * p * p + 1.0) / 4.0;
    let mut worst_z: f64 = 0.0;
    for (pair, r) in &sweep.results {
        let r = r.as_ref().map_err(|e| format!("{pair}: {e}"))?;
        check(
            (0.955..=0.985).contains(&r.fidelity),
            format!("{pair}: fidelity {:.4}", r.fidelity),
        )?;
        let z = (r.purity - target).abs() / r.purity_sigma;
        worst_z = worst_z.max(z);
        check(
            z <= 3.0,
            format!("{pair}: purity {:.5} ± {:.5} vs {target:.5}", r.purity, r.purity_sigma),
        )?;
    }
    let s = sweep.summary();
    check(sweep.results.len() == 20, "plan is not 20 pairs".into())?;
    Ok(format!(
        "20 pairs, fidelity {:.4}..{:.4}, purity within {worst_z:.2} sigma of {target:.5}",
        s.min_fidelity,
        sweep
            .results
            .iter()
            .map(|(_, r)| r.as_ref().unwrap().fidelity)
            .fold(0.0, f64::max)
    ))
}

fn franson_visibility() -> Outcome {
    let phases = franson::uniform_phases(50);
    let mut lo: f64 = 1.0;
    let mut hi: f64 = 0.0;
    for seed in 0..64 {
        let scan = franson::simulate_fringe_scan(0.99, 250e3, &phases, seed).map_err(|e| e.to_string())?;
        let fit = franson::fit_visibility(&scan).map_err(|e| e.to_string())?;
        lo = lo.min(fit.visibility);
        hi = hi.max(fit.visibility);
        check(
            (fit.visibility - 0.99).abs() <= 0.01,
            format!("seed {seed}: V = {:.5}", fit.visibility),
        )?;
    }
    Ok(format!("64 seeds, V in [{lo:.5}, {hi:.5}]"))
}

fn fsr_gate() -> Outcome {
    let cfg = |lw: f64, fsr: f64, bw: f64| FransonConfig {
        pump_linewidth_hz: lw,
        fsr_hz: fsr,
        photon_bandwidth_hz: bw,
        ..FransonConfig::default()
    };
    let table = [
        ((1e3, 1e9, 100e9), true),
        ((1e3, 200e9, 100e9), false),
        ((1e3, 1e3, 100e9), false),
        ((1e3, 100e9, 100e9), false),
        ((1e3, 500.0, 100e9), false),
        ((1e3, 1e3 + 1.0, 100e9), true),
        ((1e3, 100e9 - 1.0, 100e9), true),
    ];
    for ((lw, fsr, bw), want) in table {
        let got = franson::validate_fsr(&cfg(lw, fsr, bw)).admissible;
        check(got == want, format!("({lw}, {fsr}, {bw}) gave {got}"))?;
    }
    Ok(format!("{} cases", table.len()))
}

fn skr() -> Outcome {
    let rate = qkd::secret_key_rate(5540.0, 0.065, 0.047, 1.1).map_err(|e| e.to_string())?;
    check((rate - 1950.0).abs() / 1950.0 <= 0.02, format!("SKR {rate:.1} bps"))?;

    let cfg = SessionConfig {
        sifted_rate_hz: 5540.0,
        duration_s: 3600.0,
        bin_s: 10.0,
        base_visibility_x: 1.0 - 2.0 * 0.065,
        base_error_z: 0.047,
        f_ec: 1.1,
        x_fraction: 0.5,
    };
    let session = qkd::simulate_session(&cfg, &[], 7).map_err(|e| e.to_string())?;
    let mean = session.summary.mean_skr_bps;
    check((mean - 1950.0).abs() / 1950.0 <= 0.05, format!("session mean {mean:.1} bps"))?;

    let events = [
        DriftEvent::PhaseDrift {
            start_s: 1200.0,
            depth: 0.15,
            hold_s: 60.0,
            recovery_s: 120.0,
        },
        DriftEvent::Outage {
            start_s: 2400.0,
            duration_s: 300.0,
        },
    ];
    let drifted = qkd::simulate_session(&cfg, &events, 7).map_err(|e| e.to_string())?;
    let qx = |from: f64, to: f64| {
        let bins: Vec<f64> = drifted
            .bins
            .iter()
            .filter(|b| b.t_s >= from && b.t_s < to)
            .map(|b| b.qber_x)
            .collect();
        bins.iter().cloned().fold(0.0, f64::max)
    };
    let baseline = qx(0.0, 1200.0);
    let peak = qx(1200.0, 1260.0);
    check(peak > baseline + 0.05, format!("QBER_X peak {peak:.4} vs baseline max {baseline:.4}"))?;
    let outage_zero = drifted
        .bins
        .iter()
        .filter(|b| b.t_s >= 2400.0 && b.t_s < 2700.0)
        .all(|b| b.skr_bps == 0.0);
    check(outage_zero, "outage bins carry key".into())?;
    let after = drifted.bins.iter().filter(|b| b.t_s >= 2700.0).all(|b| b.skr_bps > 0.0);
    check(after, "key does not resume after the outage".into())?;
    Ok(format!(
        "SKR {rate:.1} bps, session mean {mean:.1} bps, drift peak QBER_X {peak:.3}, {} zero-key bins",
        drifted.summary.zero_skr_bins
    ))
}

/// Maximum bipartite matching by augmenting paths over the full O(n²)
/// compatibility relation.
fn brute_force_matching(a: &[u64], b: &[u64], window_ps: u64) -> usize {
    let adj: Vec<Vec<usize>> = a
        .iter()
        .map(|&ta| (0..b.len()).filter(|&j| 2 * ta.abs_diff(b[j]) <= window_ps).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; b.len()];
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    (0..a.len())
        .filter(|&i| augment(i, &adj, &mut vec![false; b.len()], &mut owner))
        .count()
}

fn coincidences() -> Outcome {
    let det = DetectorModel::default();
    let sim = PairStreamSimulation::new(1e5, 10.0, [det, det]);
    let (a, b) = sim.run(77).map_err(|e| e.to_string())?;
    let expected: f64 = 1e5 * 0.8 * 0.8 * 10.0;
    let tol = 3.0 * expected.sqrt();

    // wide window: all true coincidences are captured
    let wide = detection::count_coincidences(&a, &b, 200, 0).map_err(|e| e.to_string())?;
    let n = wide.true_window_counts as f64;
    check((n - expected).abs() <= tol, format!("{n} coincidences vs {expected} ± {tol:.0}"))?;

    // default window: capture follows the Gaussian of width √2σ
    let narrow = detection::count_coincidences(&a, &b, detection::DEFAULT_WINDOW_PS, 0).map_err(|e| e.to_string())?;
    let sigma = det.jitter_sigma_ps * 2f64.sqrt();
    let capture = erf(50.5 / (sigma * 2f64.sqrt()));
    let m = narrow.true_window_counts as f64;
    let want = expected * capture;
    check(
        (m - want).abs() <= 3.0 * want.sqrt(),
        format!("100 ps window: {m} vs {want:.0} (capture {capture:.4})"),
    )?;

    let t = 10.0;
    let tau = 100e-12;
    let acc_pred = detection::accidental_rate(a.rate_hz(), b.rate_hz(), tau) * t;
    let acc = narrow.accidental_estimate;
    check(
        (acc - acc_pred).abs() <= 3.0 * acc_pred.sqrt(),
        format!("offset-window accidentals {acc:.2} vs {acc_pred:.2}"),
    )?;

    let mut noise = PairStreamSimulation::new(0.0, 10.0, [DetectorModel::ideal(); 2]);
    noise.noise_hz = [1e5, 1e5];
    let (x, y) = noise.run(78).map_err(|e| e.to_string())?;
    let indep = detection::count_coincidences(&x, &y, 100, 0).map_err(|e| e.to_string())?;
    let pred = detection::accidental_rate(x.rate_hz(), y.rate_hz(), tau) * t;
    let got = indep.true_window_counts as f64;
    check(
        (got - pred).abs() <= 3.0 * pred.sqrt(),
        format!("independent streams: {got} vs {pred:.2}"),
    )?;

    // greedy against brute force per 1 ms slice
    let slice = 1_000_000_000u64;
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut slices = 0;
    let mut total = 0;
    let mut start = 0;
    while start < a.duration_ps {
        let end = start + slice;
        let ja = ia + a.tags_ps[ia..].partition_point(|&t| t < end);
        let jb = ib + b.tags_ps[ib..].partition_point(|&t| t < end);
        let sa = TimeTagStream::new(0, a.tags_ps[ia..ja].to_vec(), a.duration_ps).unwrap();
        let sb = TimeTagStream::new(1, b.tags_ps[ib..jb].to_vec(), b.duration_ps).unwrap();
        let greedy = detection::match_coincidences(&sa, &sb, 100, 0).map_err(|e| e.to_string())?.len();
        let brute = brute_force_matching(&sa.tags_ps, &sb.tags_ps, 100);
        check(greedy == brute, format!("slice at {start} ps: greedy {greedy} vs brute force {brute}"))?;
        total += greedy;
        slices += 1;
        (ia, ib, start) = (ja, jb, end);
    }
    Ok(format!(
        "{n} coincidences (expected {expected} ± {tol:.0}), accidentals {acc:.1} vs {acc_pred:.1}, \
         independent {got} vs {pred:.1}, {slices} slices / {total} matches agree"
    ))
}

fn erf(x: f64) -> f64 {
    // Abramowitz-Stegun 7.1.26 is too coarse here; integrate the density instead
    let n = 20_000;
    let h = x / n as f64;
    let f = |t: f64| (-t * t).exp();
    let mut s = f(0.0) + f(x);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 * 2.0 / PI.sqrt()
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checks = 0;

    for _ in 0..100 {
        let rho = DensityMatrix::new(random_state(&mut rng)).map_err(|e| e.to_string())?;
        for a in Polarization::ALL {
            for b in Polarization::ALL {
                let sum: f64 = [a, a.orthogonal()]
                    .iter()
                    .flat_map(|&x| [b, b.orthogonal()].map(|y| state::coincidence_probability(&rho, x, y)))
                    .sum();
                check((sum - 1.0).abs() < 1e-10, format!("Born sum {sum}"))?;
                checks += 1;
            }
        }
        let e = rho.eigenvalues();
        check(e[0] >= -1e-9 && (e.iter().sum::<f64>() - 1.0).abs() < 1e-10, "physicality".into())?;
        checks += 1;
    }

    for _ in 0..100 {
        let angle = rng.random::<f64>() * 2.0 * PI;
        for kind in [WaveplateKind::Quarter, WaveplateKind::Half] {
            let u = state::waveplate_unitary(kind, angle);
            let dev = (u.adjoint() * u - state::Matrix2c::identity()).norm();
            check(dev < 1e-12, format!("waveplate unitarity {dev:.2e}"))?;
            checks += 1;
        }
    }

    for k in 0..100 {
        let x = k as f64 / 99.0;
        for j in 0..100 {
            let y = j as f64 / 99.0;
            let h = |v: f64| qkd::binary_entropy(v).unwrap();
            check(h((x + y) / 2.0) >= (h(x) + h(y)) / 2.0 - 1e-15, format!("concavity at {x}, {y}"))?;
            checks += 1;
        }
    }

    let mut last = f64::INFINITY;
    for k in 0..=100 {
        let q = 0.5 * k as f64 / 100.0;
        let r = qkd::secret_key_rate(1000.0, q, 0.047, 1.1).unwrap();
        check(r <= last && r >= 0.0, format!("SKR not monotone at qx = {q}"))?;
        last = r;
        checks += 1;
    }
    let qstar = qkd::qber_x_threshold(0.047, 1.1).unwrap();
    for q in [qstar, qstar + 0.01, 0.3, 0.5] {
        check(qkd::secret_key_rate(1000.0, q.min(0.5), 0.047, 1.1).unwrap() < 1e-6, format!("SKR not clamped at {q}"))?;
        checks += 1;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ScenarioConfig {
        seed: 11,
        output_dir: dir.path().to_path_buf(),
        ..ScenarioConfig::default()
    };
    cfg.plan.n_pairs = 4;
    cfg.tomography.bootstrap_replicas = 20;
    for command in Command::ALL {
        let first = run_scenario(command, &cfg).map_err(|e| e.to_string())?;
        let before = read_dir(&first.directory);
        let listed: Vec<&String> = first.files.keys().collect();
        let on_disk: Vec<&String> = before.keys().filter(|k| *k != "manifest.txt").collect();
        check(listed == on_disk, format!("{}: manifest does not cover every file", command.name()))?;
        std::fs::remove_dir_all(&first.directory).map_err(|e| e.to_string())?;
        let second = run_scenario(command, &cfg).map_err(|e| e.to_string())?;
        check(before == read_dir(&second.directory), format!("{}: rerun differs", command.name()))?;
        checks += 1;
    }
    Ok(format!("{checks} checks"))
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("1 grid fidelity", grid),
        ("2 tomography oracle equivalence", tomography_oracle),
        ("3 fidelity band emulation", fidelity_band),
        ("4 Franson visibility", franson_visibility),
        ("5 FSR gate", fsr_gate),
        ("6 secret key rate", skr),
        ("7 coincidence statistics", coincidences),
        ("8 invariant suites", invariants),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1} s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
