use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use parmel_core::melnikov::{melnikov_canonical, reduce};
use parmel_core::zeros::{count_zeros, realize_with, Multiplicity, RealizeOptions};
use parmel_core::{EnergyLevel, Error, Mode, PerturbationSpec, Table};

fn dense_sign_changes(spec: &PerturbationSpec, u_max: f64, n: usize) -> usize {
    let (_, uf) = reduce(spec).unwrap();
    let mut prev = 0.0;
    let mut count = 0;
    for k in 1..=n {
        let v = uf.eval_u(u_max * k as f64 / n as f64);
        if v != 0.0 {
            if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
                count += 1;
            }
            prev = v;
        }
    }
    count
}

#[test]
fn single_coefficient_spec_matches_dense_scan() {
    // M(u) = (π/2)(u⁴ + u²) - 2(u⁴ + u²)W(u)
    let spec = PerturbationSpec::zero(1, Mode::FourZone).with(Table::B, 1, 0, 1, 1.0).unwrap();
    let (_, uf) = reduce(&spec).unwrap();
    let report = count_zeros(&uf, 10.0, 1e-12).unwrap();
    assert_eq!(report.count, dense_sign_changes(&spec, 10.0, 1_000_000));
    assert!(report.bound_satisfied);
}

#[test]
fn reports_are_consistent_over_random_specs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for mode in Mode::ALL {
        for n in 1..=4 {
            for _ in 0..20 {
                let spec = PerturbationSpec::random(n, mode, &mut rng);
                let (_, uf) = reduce(&spec).unwrap();
                let r = count_zeros(&uf, 10.0, 1e-12).unwrap();
                assert_eq!(r.count, r.zeros.len());
                for w in r.zeros.windows(2) {
                    assert!(w[0].u + 0.5 * w[0].width < w[1].u - 0.5 * w[1].width, "overlapping brackets");
                }
                for z in &r.zeros {
                    assert!((z.h - (z.u.powi(4) + z.u.powi(2))).abs() <= 1e-15 * z.h.max(1.0));
                    if z.multiplicity == Multiplicity::OddSimple && z.width > 0.0 {
                        // the zero maps across h = u⁴ + u²: M(h) changes sign around h*
                        let at = |u: f64| melnikov_canonical(&uf, EnergyLevel::new(u.powi(4) + u * u).unwrap());
                        let d = (1e-6 * z.u).max(z.width);
                        let (a, b) = (at(z.u - d), at(z.u + d));
                        if a.abs() > 1e-12 * uf.magnitude_u(z.u) && b.abs() > 1e-12 * uf.magnitude_u(z.u) {
                            assert!((a > 0.0) != (b > 0.0), "{mode} n={n} u={}", z.u);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn two_zone_derivative_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for mode in [Mode::TwoZoneUpper, Mode::TwoZoneLower] {
        let spec = PerturbationSpec::random(1, mode, &mut rng);
        let upper = if mode == Mode::TwoZoneLower { spec.rotated_half_turn() } else { spec.clone() };
        let (_, uf) = reduce(&spec).unwrap();
        let g = |t, z, i, j| upper.get(t, z, i, j);
        let (b100, b400) = (g(Table::B, 1, 0, 0), g(Table::B, 4, 0, 0));
        let (b101, b401) = (g(Table::B, 1, 0, 1), g(Table::B, 4, 0, 1));
        let (a110, a410) = (g(Table::A, 1, 1, 0), g(Table::A, 4, 1, 0));
        let ratio = |u: f64| uf.eval_u(u) / (u * u + u.powi(4));
        for u in [0.3, 0.7, 1.5] {
            let step = 1e-5;
            let fd = (ratio(u + step) - ratio(u - step)) / (2.0 * step);
            let closed = -2.0 / (u + u.powi(3)).powi(2)
                * ((b401 - b101) * u.powi(4) - (a110 - a410 - 3.0 * b400 + 3.0 * b100) * u * u + b400 - b100);
            assert!((fd - closed).abs() < 1e-7, "{mode} u={u}: {fd} vs {closed}");
        }
    }
}

#[test]
fn rolle_between_consecutive_zeros() {
    let r = realize_with(&[0.1, 0.2, 0.3, 0.4], Mode::FourZone, &RealizeOptions::default()).unwrap();
    let (_, uf) = reduce(&r.spec).unwrap();
    let qc = uf.qc_coeffs()[0];
    assert!(qc != 0.0);
    let g = |u: f64| uf.eval_u(u) / ((u.powi(4) + u * u) * qc);
    let dg = |u: f64| (g(u * (1.0 + 1e-6)) - g(u * (1.0 - 1e-6))) / (2e-6 * u);
    for w in r.report.zeros.windows(2) {
        let (a, b) = (w[0].u, w[1].u);
        let n = 400;
        let signs: Vec<bool> = (1..n).map(|k| dg(a + (b - a) * k as f64 / n as f64) > 0.0).collect();
        assert!(signs.windows(2).any(|s| s[0] != s[1]), "no critical point of M/((u⁴+u²)Qc) in ({a}, {b})");
    }
}

#[test]
fn series_inversion_alone_misses_four_zone_targets() {
    let opts = RealizeOptions {
        collocation: false,
        max_retries: 0,
        ..RealizeOptions::default()
    };
    match realize_with(&[0.1, 0.2, 0.3, 0.4], Mode::FourZone, &opts) {
        Err(Error::Realization { attempts, last }) => {
            assert_eq!(attempts, 1);
            assert!(last.is_some());
        }
        other => panic!("expected a realization failure, got {other:?}"),
    }
    // halving the targets brings them into the regime where the truncated series is accurate
    let opts = RealizeOptions {
        collocation: false,
        ..RealizeOptions::default()
    };
    let r = realize_with(&[0.1, 0.2, 0.3, 0.4], Mode::FourZone, &opts).unwrap();
    assert!(r.attempts > 1);
    assert_eq!(r.report.count, 4);
}

#[test]
fn realize_rejects_bad_targets() {
    let opts = RealizeOptions::default();
    assert!(realize_with(&[0.1, 0.2, 0.3], Mode::FourZone, &opts).is_err());
    assert!(realize_with(&[0.1, 0.2, 0.6], Mode::TwoZoneUpper, &opts).is_err());
    assert!(realize_with(&[0.1, 0.2, 0.2], Mode::TwoZoneUpper, &opts).is_err());
    assert!(realize_with(&[-0.1, 0.2, 0.3], Mode::TwoZoneUpper, &opts).is_err());
}

#[test]
fn lambda_series_reproduces_melnikov_near_zero() {
    use parmel_core::zeros::lambda_coeffs;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spec = PerturbationSpec::random(1, Mode::FourZone, &mut rng);
    let (_, uf) = reduce(&spec).unwrap();
    let s = lambda_coeffs(&spec).unwrap().series();
    let u: f64 = 1e-2;
    let series = s[0] * u + s[1] * u * u + s[2] * u.powi(3) + s[3] * u.powi(4) + s[4] * u.powi(5);
    // remainder is O(u⁷)
    assert!((uf.eval_u(u) - series).abs() < 1e-13, "{} vs {series}", uf.eval_u(u));
}
