//! Acceptance gate. Runs each criterion at its stated tolerance and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use beamguard::array::{array_gain, conjugate_weights, half_power_offset, ArrayConfig};
use beamguard::avoidance::{disabled_set, select_beam, AvoidancePolicy};
use beamguard::channel::{pathloss_los, sample_shadow, ChannelParams};
use beamguard::codebook::{beam_distance, build_codebook, BeamId, Codebook, Sector};
use beamguard::exposure::{power_density_from_gain, ExposureParams};
use beamguard::geometry::Direction;
use beamguard::scenario::{
    run_scenario, run_scenario_with_workers, sweep_d0, CodebookSpec, GridSpec, PoseKind, Scenario, ScenarioConfig,
};
use beamguard::stats::{mean, spearman};
use beamguard::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Codebook with exactly `az x tilt` beams on a fine angular grid.
fn grid(az: usize, tilt: usize) -> Codebook {
    let cfg = ArrayConfig::default();
    let crossover = 0.1;
    let probe = build_codebook(&cfg, &Sector::default(), crossover).unwrap();
    let (sa, st) = (probe.spacing_az(), probe.spacing_tilt());
    let sector = Sector {
        az_min: 0.0,
        az_max: sa * (az as f64 - 1.0 + 0.01),
        tilt_min: 0.0,
        tilt_max: st * (tilt as f64 - 1.0 + 0.01),
    };
    let cb = build_codebook(&cfg, &sector, crossover).unwrap();
    assert_eq!((cb.az_count(), cb.tilt_count()), (az, tilt));
    cb
}

/// Feasibility-filtered argmin over every beam, ties to the beam farthest
/// from the head and then the smallest `(m, n)`.
fn exhaustive(cb: &Codebook, initial: &BeamId, head: &BeamId, d0: f64) -> Option<BeamId> {
    cb.beams().filter(|b| beam_distance(head, b) >= d0).min_by(|a, b| {
        beam_distance(initial, a)
            .total_cmp(&beam_distance(initial, b))
            .then(beam_distance(head, b).total_cmp(&beam_distance(head, a)))
            .then(a.cmp(b))
    })
}

fn single_row_example() -> Outcome {
    let cb = grid(8, 1);
    let b = |m| BeamId::new(m, 0);
    let start = Instant::now();
    let disabled = disabled_set(&cb, &b(3), 2.0);
    let d = select_beam(&cb, &b(4), &b(3), 2.0).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(
        disabled == vec![b(2), b(3), b(4)] && d.selected == b(5) && took < Duration::from_millis(1),
        format!(
            "disabled {:?}, selected {}, {:?}",
            disabled.iter().map(|x| x.m).collect::<Vec<_>>(),
            d.selected.m,
            took
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let mut mismatches = 0;
    let mut limited = 0;
    for _ in 0..1000 {
        let (az, tilt) = (rng.random_range(1..=64), rng.random_range(1..=64));
        let cb = grid(az, tilt);
        let initial = BeamId::new(rng.random_range(0..az), rng.random_range(0..tilt));
        let head = BeamId::new(rng.random_range(0..az), rng.random_range(0..tilt));
        let d0 = rng.random_range(0.0..=5.0);
        let got = select_beam(&cb, &initial, &head, d0);
        match (exhaustive(&cb, &initial, &head, d0), got) {
            (Some(want), Ok(d)) if d.selected == want => {}
            (None, Err(Error::ExposureLimited)) => limited += 1,
            _ => mismatches += 1,
        }
    }
    let took = start.elapsed();
    check(
        mismatches == 0 && took < Duration::from_secs(10),
        format!("1000 instances, {mismatches} mismatches, {limited} exposure-limited, {took:.2?}"),
    )
}

fn peak_gain() -> Outcome {
    let cfg = ArrayConfig::default();
    let w = conjugate_weights(&cfg, &Direction::BORESIGHT);
    let g = array_gain(&cfg, &w, &Direction::BORESIGHT).map_err(|e| e.to_string())?;
    check((g - 38.103).abs() <= 0.001, format!("{g:.4} dB"))
}

fn beamwidth() -> Outcome {
    let cfg = ArrayConfig::default();
    let bw = 2.0 * half_power_offset(&cfg, 3.0).map_err(|e| e.to_string())?.azimuth;
    let sector = Sector::default();
    let c3 = build_codebook(&cfg, &sector, 3.0).map_err(|e| e.to_string())?;
    let c05 = build_codebook(&cfg, &sector, 0.5).map_err(|e| e.to_string())?;
    check(
        (bw - 3.17).abs() <= 0.1 && c05.spacing_az() < c3.spacing_az() && c05.len() > c3.len(),
        format!(
            "3 dB width {bw:.3} deg, spacing {:.3} vs {:.3} deg, {} vs {} beams",
            c05.spacing_az(),
            c3.spacing_az(),
            c05.len(),
            c3.len()
        ),
    )
}

fn pathloss_anchor() -> Outcome {
    let pl = pathloss_los(&ChannelParams::default(), 10.0, None).map_err(|e| e.to_string())?;
    check((pl.db - 82.344).abs() <= 0.001, format!("{:.4} dB", pl.db))
}

fn fine_only(pose: PoseKind) -> ScenarioConfig {
    ScenarioConfig {
        pose,
        codebooks: vec![CodebookSpec::new(0.5)],
        ..ScenarioConfig::default()
    }
}

fn exposure_threshold() -> Outcome {
    let cfg = fine_only(PoseKind::A);
    let start = Instant::now();
    let res = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let cb = &res.codebooks[0];
    let (on, off) = (cb.on.exposure.p95, cb.off.exposure.p95);
    check(
        on <= 0.3 && off > 0.3 && took < Duration::from_secs(300),
        format!("p95 exposure with avoidance {on:.4}, without {off:.4} mW/cm2, {took:.2?}"),
    )
}

fn d0_trend() -> Outcome {
    let cfg = ScenarioConfig {
        grid: GridSpec {
            x: [1.0, 2.8],
            y: [-1.0, 1.0],
            step: 0.1,
        },
        ..fine_only(PoseKind::A)
    };
    let d0s = [0.0, 1.0, 2.0, 3.0];
    let rows = sweep_d0(&cfg, &d0s).map_err(|e| e.to_string())?;
    let exposure: Vec<f64> = rows.iter().map(|r| r.mean_exposure).collect();
    let dist: Vec<f64> = rows.iter().map(|r| r.mean_head_beam_distance).collect();
    let rho = spearman(&d0s, &exposure);
    let increasing = dist.windows(2).all(|w| w[1] > w[0]);
    check(
        rho <= -0.8 && increasing,
        format!("spearman {rho:.3}, mean exposure {exposure:.4?}, head-beam distance {dist:.3?}"),
    )
}

fn granularity_tradeoff() -> Outcome {
    let a = run_scenario(&ScenarioConfig::default()).map_err(|e| e.to_string())?;
    let b = run_scenario(&ScenarioConfig {
        pose: PoseKind::B,
        ..ScenarioConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let loss = |label: &str| a.codebook(label).unwrap().median_snr_loss();
    let (l05, l3) = (loss("0p5db"), loss("3db"));
    let fine_on = b.codebook("0p5db").unwrap().on.snr.p50;
    let coarse_off = b.codebook("3db").unwrap().off.snr.p50;
    check(
        l05 < l3 && fine_on >= coarse_off - 0.5,
        format!(
            "pose A median loss 0.5 dB {l05:.3} vs 3 dB {l3:.3}; pose B 0.5 dB on {fine_on:.3} vs 3 dB off {coarse_off:.3} dB"
        ),
    )
}

fn property_suites() -> Outcome {
    let mut failures = Vec::new();

    // metric axioms over every triple of a 6x6 grid
    let ids: Vec<BeamId> = (0..6).flat_map(|m| (0..6).map(move |n| BeamId::new(m, n))).collect();
    let mut metric_ok = true;
    for a in &ids {
        metric_ok &= beam_distance(a, a) == 0.0;
        for b in &ids {
            let d = beam_distance(a, b);
            metric_ok &= d == beam_distance(b, a) && (d > 0.0 || a == b);
            for c in &ids {
                metric_ok &= beam_distance(a, c) <= d + beam_distance(b, c) + 1e-12;
            }
        }
    }
    if !metric_ok {
        failures.push("metric axioms");
    }

    // constraint satisfaction on random decisions
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cb = grid(20, 20);
    let mut satisfied = true;
    for _ in 0..5000 {
        let initial = BeamId::new(rng.random_range(0..20), rng.random_range(0..20));
        let head = BeamId::new(rng.random_range(0..20), rng.random_range(0..20));
        let d0 = rng.random_range(0.0..=6.0);
        if let Ok(d) = select_beam(&cb, &initial, &head, d0) {
            satisfied &= beam_distance(&head, &d.selected) >= d0;
        }
    }
    let small = ScenarioConfig {
        grid: GridSpec {
            x: [1.0, 4.0],
            y: [-1.0, 1.0],
            step: 0.25,
        },
        trials_per_point: 5,
        ..ScenarioConfig::default()
    };
    let records = Scenario::new(small.clone())
        .and_then(|s| s.run_records())
        .map_err(|e| e.to_string())?;
    for r in &records {
        for o in &r.outcomes {
            if let Some(d) = o.decision {
                satisfied &= beam_distance(&d.head_beam, &d.selected) >= d.d0_applied;
            }
        }
    }
    if !satisfied {
        failures.push("constraint satisfaction");
    }

    // d0 = 0 everywhere reproduces the baseline bit for bit
    let mut zero = small.clone();
    for cb in &mut zero.codebooks {
        cb.policy = Some(AvoidancePolicy::constant(0.0));
    }
    let z = run_scenario(&zero).map_err(|e| e.to_string())?;
    let identical = z.codebooks.iter().all(|c| {
        c.exposure_on
            .iter()
            .map(|v| v.to_bits())
            .eq(c.exposure_off.iter().map(|v| v.to_bits()))
            && c.snr_on
                .iter()
                .map(|v| v.to_bits())
                .eq(c.snr_off.iter().map(|v| v.to_bits()))
    });
    if !identical {
        failures.push("zero d0 baseline");
    }

    // worker count does not change the result
    let one = run_scenario_with_workers(&small, 1).map_err(|e| e.to_string())?;
    let many = run_scenario_with_workers(&small, 8).map_err(|e| e.to_string())?;
    if format!("{one:?}") != format!("{many:?}") {
        failures.push("determinism across workers");
    }

    // shadow-fading moments
    let sigma = ChannelParams::default().shadow_sigma_db;
    let draws: Vec<f64> = (0..100_000).map(|_| sigma * sample_shadow(&mut rng)).collect();
    let m = mean(&draws);
    let sd = (draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
    let sd_ok = (sd / sigma - 1.0).abs() <= 0.02;
    if !sd_ok {
        failures.push("shadow sigma");
    }

    // power density: inverse square in range, linear in transmit power
    let ep = ExposureParams::default();
    let pd = |tx: f64, r: f64| power_density_from_gain(tx, 30.0, r, &ep).unwrap();
    let inv_sq = ((pd(20.0, 2.0) / pd(20.0, 4.0)) - 4.0).abs() < 1e-12;
    let linear = ((pd(23.0, 3.0) / pd(20.0, 3.0)) - 10f64.powf(0.3)).abs() < 1e-12;
    if !(inv_sq && linear) {
        failures.push("power density scaling");
    }

    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("metric, constraint, zero-d0, workers, shadow sd {sd:.4} dB, power-density scaling")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("single-row avoidance example", single_row_example),
        ("oracle equivalence", oracle_equivalence),
        ("peak gain", peak_gain),
        ("beamwidth numerics", beamwidth),
        ("pathloss anchor", pathloss_anchor),
        ("exposure threshold", exposure_threshold),
        ("d0 monotonic trend", d0_trend),
        ("granularity trade-off", granularity_tradeoff),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {tag} {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
