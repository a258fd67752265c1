"""Quick end-to-end check of the `sagnac` extension module.

Build first (see README), then: python python/smoke_test.py
"""

import math
import tempfile

import sagnac


def main():
    assert abs(sagnac.itu_channel_wavelength_nm(21) - 1560.606) < 1e-3
    plan = sagnac.build_channel_plan()
    assert plan[0] == (19, 23) and plan[-1] == (0, 42) and len(plan) == 20

    rho = sagnac.DensityMatrix.werner(0.96)
    assert abs(rho.fidelity() - 0.97) < 1e-12
    counts = sagnac.simulate_tomography_counts(rho, 1e4, 100.0, 7)
    assert len(counts) == 16
    result = sagnac.mle_reconstruct(counts, bootstrap_replicas=20, seed=1)
    assert abs(result.fidelity - 0.97) < 0.01, result
    assert min(result.rho.eigenvalues()) >= -1e-12

    a, b, duration = sagnac.simulate_pair_streams(1e5, 0.1, seed=3)
    n, acc = sagnac.count_coincidences(a, b, duration, window_ps=200)
    assert abs(n - 6400) < 5 * math.sqrt(6400), n

    assert sagnac.validate_fsr(1e3, 1e9, 100e9)[0]
    assert not sagnac.validate_fsr(1e3, 100e9, 100e9)[0]
    phases = [2 * math.pi * k / 41 for k in range(41)]
    scan = sagnac.simulate_fringe_scan(0.99, 250e3, phases, 5)
    v, sigma, _ = sagnac.fit_visibility(phases, scan)
    assert abs(v - 0.99) < 0.01

    skr = sagnac.secret_key_rate(5540.0, 0.065, 0.047)
    assert abs(skr - 1950) / 1950 < 0.02, skr
    rows = sagnac.simulate_session(5540.0, 600.0, seed=2)
    assert len(rows) == 60

    with tempfile.TemporaryDirectory() as tmp:
        out, warnings = sagnac.run_scenario("plan", out=tmp)
        with open(f"{out}/plan.csv") as f:
            assert f.readline().startswith("signal,idler")
        assert warnings == 0

    print("smoke test ok:", result)


if __name__ == "__main__":
    main()
