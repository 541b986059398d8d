use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use parmel_core::melnikov::melnikov_direct;
use parmel_core::simulator::{cross_validate, find_limit_cycles, return_map, SimConfig};
use parmel_core::zeros::{count_zeros, realize_max_zeros};
use parmel_core::{melnikov::reduce, Curve, EnergyLevel, Mode, PerturbationSpec, Table};

fn lvl(h: f64) -> EnergyLevel {
    EnergyLevel::new(h).unwrap()
}

#[test]
fn displacement_is_first_order_in_eps() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for mode in Mode::ALL {
        let spec = PerturbationSpec::random(2, mode, &mut rng);
        let h = lvl(1.5);
        let m = melnikov_direct(&spec, h).unwrap();
        assert!(m.abs() > 1e-3, "pick a level where M ≠ 0");
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&eps| return_map(&spec, &SimConfig::with_eps(eps), h).unwrap().displacement / eps)
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
        assert!((hi - lo) / hi.abs() < 0.1, "{mode}: {ratios:?}");
        assert!(ratios.iter().all(|r| (r > &0.0) == (m > 0.0)));
    }
}

#[test]
fn crossings_are_transversal_and_ordered() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mode in Mode::ALL {
        let spec = PerturbationSpec::random(3, mode, &mut rng);
        let cfg = SimConfig::with_eps(1e-2);
        for h in [0.05, 1.0, 8.0] {
            let s = return_map(&spec, &cfg, lvl(h)).unwrap();
            assert!(s.crossings.iter().all(|c| c.normal_speed.abs() > cfg.event_tol));
            for c in &s.crossings {
                assert!(c.curve.level(c.x, c.y).abs() < 1e-9);
            }
            let pattern: Vec<(Curve, bool)> = s.crossings.iter().map(|c| (c.curve, c.x > 0.0)).collect();
            let want = match mode {
                Mode::FourZone => vec![(Curve::Lower, true), (Curve::Lower, false), (Curve::Upper, false), (Curve::Upper, true)],
                Mode::TwoZoneUpper => vec![(Curve::Upper, false), (Curve::Upper, true)],
                Mode::TwoZoneLower => vec![(Curve::Lower, true), (Curve::Lower, false)],
            };
            assert_eq!(pattern, want);
        }
    }
}

#[test]
fn unperturbed_and_zero_specs_close() {
    let zero = PerturbationSpec::zero(2, Mode::FourZone);
    for h in [0.5, 2.0, 10.0] {
        let d = return_map(&zero, &SimConfig::with_eps(1e-3), lvl(h)).unwrap().displacement;
        assert!(d.abs() < 1e-9 * h);
    }
}

#[test]
fn sign_of_displacement_follows_melnikov_between_zeros() {
    let spec = realize_max_zeros(&[0.1, 0.2, 0.3, 0.4], Mode::FourZone).unwrap();
    let (_, uf) = reduce(&spec).unwrap();
    let zeros = count_zeros(&uf, 10.0, 1e-12).unwrap().zeros;
    for eps in [1e-3, -1e-3] {
        for w in zeros.windows(2) {
            let h = lvl((w[0].h * w[1].h).sqrt());
            let m = melnikov_direct(&spec, h).unwrap();
            let d = return_map(&spec, &SimConfig::with_eps(eps), h).unwrap().displacement;
            assert_eq!(d > 0.0, eps * m > 0.0, "eps={eps} h={h:?}");
        }
    }
}

#[test]
fn cycles_alternate_in_stability() {
    let spec = realize_max_zeros(&[0.1, 0.2, 0.3], Mode::TwoZoneUpper).unwrap();
    let scan = find_limit_cycles(&spec, &SimConfig::with_eps(1e-3), lvl(0.005), lvl(0.3)).unwrap();
    assert_eq!(scan.cycles.len(), 3);
    assert!(scan.failures.is_empty());
    for w in scan.cycles.windows(2) {
        assert_ne!(w[0].stability, w[1].stability);
    }
}

#[test]
fn cross_validation_counts_match_melnikov() {
    let zero = PerturbationSpec::zero(1, Mode::TwoZoneLower);
    let r = cross_validate(&zero, &[1e-2, 1e-3]).unwrap();
    assert_eq!(r.runs.iter().map(|x| x.count).collect::<Vec<_>>(), vec![0, 0]);

    let single = PerturbationSpec::zero(1, Mode::FourZone).with(Table::B, 1, 0, 1, 1.0).unwrap();
    let (_, uf) = reduce(&single).unwrap();
    let want = count_zeros(&uf, 10.0, 1e-12).unwrap().count;
    let r = cross_validate(&single, &[1e-2, 1e-3]).unwrap();
    assert!(r.runs.iter().all(|x| x.count == want), "{r:?}");
}
