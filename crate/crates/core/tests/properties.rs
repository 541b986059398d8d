use proptest::prelude::*;

use parmel_core::melnikov::{canonical_form, melnikov_canonical, melnikov_direct, reduce};
use parmel_core::{EnergyLevel, Mode, PerturbationSpec, SpecFile, Table};

fn positions(n: u32, mode: Mode) -> Vec<(Table, u8, u32, u32)> {
    let mut out = Vec::new();
    for &zone in mode.zones() {
        for table in [Table::A, Table::B] {
            for d in 0..=n {
                for i in 0..=d {
                    out.push((table, zone, i, d - i));
                }
            }
        }
    }
    out
}

fn spec_strategy(max_n: u32) -> impl Strategy<Value = PerturbationSpec> {
    (0..=max_n, 0..3usize).prop_flat_map(|(n, m)| {
        let mode = Mode::ALL[m];
        let len = positions(n, mode).len();
        prop::collection::vec(-1.0..1.0f64, len).prop_map(move |values| {
            let mut spec = PerturbationSpec::zero(n, mode);
            for (&(t, z, i, j), v) in positions(n, mode).iter().zip(values) {
                spec.set(t, z, i, j, v).unwrap();
            }
            spec
        })
    })
}

fn level_strategy() -> impl Strategy<Value = EnergyLevel> {
    (-1.3..1.7f64).prop_map(|e| EnergyLevel::new(10f64.powf(e)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_and_direct_agree(spec in spec_strategy(5), h in level_strategy()) {
        let (_, uf) = reduce(&spec).unwrap();
        let d = melnikov_direct(&spec, h).unwrap();
        let c = melnikov_canonical(&uf, h);
        prop_assert!((c - d).abs() <= 1e-8 * (1.0 + d.abs()), "{c} vs {d}");
    }

    #[test]
    fn degree_bounds_hold(spec in spec_strategy(6)) {
        let cf = canonical_form(&spec).unwrap();
        prop_assert!(cf.degree_violations().is_empty(), "{:?}", cf.degree_violations());
    }

    #[test]
    fn reduction_is_exactly_linear(seed in any::<u64>(), n in 0..4u32, m in 0..3usize, h in level_strategy()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let s1 = PerturbationSpec::random(n, Mode::ALL[m], &mut rng);
        let s2 = PerturbationSpec::random(n, Mode::ALL[m], &mut rng);
        let sum = s1.add(&s2).unwrap();
        let (a, b, c) = (canonical_form(&s1).unwrap(), canonical_form(&s2).unwrap(), canonical_form(&sum).unwrap());
        // coefficients are binary fractions, so the sum is exact
        let exact = |x: &parmel_core::poly::Poly, y: &parmel_core::poly::Poly, z: &parmel_core::poly::Poly| &(x + y) == z;
        let halves_exact = s1.zones().zip(s2.zones()).all(|((_, p), (_, q))| {
            p.a.iter().zip(q.a.iter()).chain(p.b.iter().zip(q.b.iter())).all(|((_, _, x), (_, _, y))| {
                (x + y) - x == y
            })
        });
        if halves_exact {
            prop_assert!(exact(&a.alpha, &b.alpha, &c.alpha) && exact(&a.delta, &b.delta, &c.delta));
            prop_assert!(exact(&a.phi, &b.phi, &c.phi));
        }
        let lhs = melnikov_direct(&sum, h).unwrap();
        let rhs = melnikov_direct(&s1, h).unwrap() + melnikov_direct(&s2, h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn spec_file_round_trip_is_bit_exact(spec in spec_strategy(4)) {
        let text = SpecFile::from_spec(&spec).to_json();
        let back = SpecFile::from_json(&text).unwrap().to_spec().unwrap();
        prop_assert_eq!(back.mode(), spec.mode());
        for ((_, p), (_, q)) in spec.zones().zip(back.zones()) {
            for ((_, _, x), (_, _, y)) in p.a.iter().zip(q.a.iter()).chain(p.b.iter().zip(q.b.iter())) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn half_turn_preserves_melnikov(spec in spec_strategy(4), h in level_strategy()) {
        let rotated = spec.rotated_half_turn();
        prop_assert_eq!(rotated.rotated_half_turn(), spec.clone());
        let a = melnikov_direct(&spec, h).unwrap();
        let b = melnikov_direct(&rotated, h).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn zero_coefficients_in_unused_zones_are_rejected(n in 0..3u32) {
        let mut spec = PerturbationSpec::zero(n, Mode::TwoZoneUpper);
        prop_assert!(spec.set(Table::A, 2, 0, 0, 1.0).is_err());
        prop_assert!(spec.set(Table::B, 1, n + 1, 0, 1.0).is_err());
    }
}
