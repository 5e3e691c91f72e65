"""Smoke test for the beamguard extension module.

Build and run from the repository root:

    cargo build --release -p beamguard-py
    cp target/release/libbeamguard_py.so python/beamguard.so
    python3 python/smoke_test.py
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import beamguard as bg


def main():
    arr = bg.ArrayConfig()
    assert abs(arr.peak_gain_db() - 38.103) < 1e-3
    az, _ = arr.level_offset(3.0)
    assert abs(2 * az - 3.17) < 0.1

    coarse = bg.Codebook(3.0)
    fine = bg.Codebook(0.5)
    assert len(fine) > len(coarse)
    m, n = 4, 5
    steer = coarse.steering_direction(m, n)
    assert coarse.nearest_beam(*steer) == ((m, n), False)

    row = bg.Codebook(3.0, sector=(0.0, 3.17 * 7 + 0.01, 0.0, 0.0))
    assert row.disabled_set((3, 0), 2.0) == [(2, 0), (3, 0), (4, 0)]
    decision = row.select_beam((4, 0), (3, 0), 2.0)
    assert decision["selected"] == {"m": 5, "n": 0} and decision["triggered"]
    try:
        row.select_beam((3, 0), (3, 0), 10.0)
    except bg.ExposureLimitedError:
        pass
    else:
        raise AssertionError("expected ExposureLimitedError")

    assert abs(bg.pathloss_db(10.0) - 82.344) < 1e-3
    assert bg.beam_distance((0, 0), (3, 4)) == 5.0
    s1 = bg.power_density(20.0, 30.0, 2.0)
    s2 = bg.power_density(20.0, 30.0, 4.0)
    assert math.isclose(s1 / s2, 4.0)

    cfg = bg.ScenarioConfig("trials_per_point = 3\n")
    cfg.set_grid((1.5, 3.0), (-0.5, 0.5), 0.5)
    res = bg.run_scenario(cfg, workers=2)
    assert res.codebooks == ["3db", "0p5db"]
    summary = res.summary()
    assert summary["seed"] == 42 and summary["nx"] == 4 and summary["ny"] == 3
    on = res.exposure_samples("0p5db", True)
    assert on == sorted(on) and len(on) == 4 * 3 * 3
    assert len(res.exposure_map("3db")) == 12

    again = bg.run_scenario(bg.ScenarioConfig(cfg.to_toml()))
    assert again.snr_samples("3db", False) == res.snr_samples("3db", False)

    rows = bg.sweep_d0(cfg, [0.0, 2.0])
    assert len(rows) == 4

    with tempfile.TemporaryDirectory() as d:
        files = res.write(d)
        assert "summary.json" in files and "snr_cdf_0p5db_on.csv" in files

    print("beamguard", bg.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
