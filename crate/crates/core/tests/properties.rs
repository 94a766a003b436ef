//! Spec invariants as property tests.

use std::sync::OnceLock;

use proptest::prelude::*;
use simdive::correction::{corrected_div_outcome, corrected_mul_outcome, normalized_error_div, normalized_error_mul};
use simdive::metrics::{characterize_with, heatmap, Sampling, SweepSpec};
use simdive::mitchell::mitchell_div_fixed;
use simdive::simd::{pack, simdive_exec, unpack, LaneConfig, Layout, PackedWord};
use simdive::{
    exact_mul, leading_one, log_approx, mitchell_mul, Arith, OpMode, Operator, TablePair, UIntWord, Unit, Width,
};

fn tables() -> &'static TablePair {
    static TABLES: OnceLock<TablePair> = OnceLock::new();
    TABLES.get_or_init(|| TablePair::build(3, 6).unwrap())
}

fn word() -> impl Strategy<Value = UIntWord> {
    prop_oneof![
        any::<u8>().prop_map(UIntWord::u8),
        any::<u16>().prop_map(UIntWord::u16),
        any::<u32>().prop_map(UIntWord::u32),
    ]
}

fn same_width_pair() -> impl Strategy<Value = (UIntWord, UIntWord)> {
    prop_oneof![
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| (UIntWord::u8(a), UIntWord::u8(b))),
        (any::<u16>(), any::<u16>()).prop_map(|(a, b)| (UIntWord::u16(a), UIntWord::u16(b))),
        (any::<u32>(), any::<u32>()).prop_map(|(a, b)| (UIntWord::u32(a), UIntWord::u32(b))),
    ]
}

proptest! {
    #[test]
    fn leading_one_brackets_value(a in word()) {
        match leading_one(a) {
            None => prop_assert!(a.is_zero()),
            Some(k) => {
                let v = a.value() as u64;
                prop_assert!(1u64 << k <= v && v < 1u64 << (k + 1));
                prop_assert_eq!(k, 31 - a.value().leading_zeros());
            }
        }
    }

    #[test]
    fn log_approx_invariants(a in word()) {
        let l = log_approx(a);
        prop_assert!(l.frac < 1u64 << l.frac_len);
        prop_assert_eq!(l.frac_len, a.width().frac_bits());
        if l.is_zero {
            prop_assert_eq!((l.k, l.frac), (0, 0));
        } else {
            prop_assert_eq!(l.reconstruct(), a.value() as u64);
        }
    }

    #[test]
    fn mitchell_mul_is_commutative_and_underestimates((a, b) in same_width_pair()) {
        let p = mitchell_mul(a, b);
        prop_assert_eq!(p, mitchell_mul(b, a));
        let e = exact_mul(a, b);
        prop_assert!(p <= e);
        if e > 0 {
            prop_assert!((e - p) as f64 / e as f64 <= 0.1112);
        }
    }

    #[test]
    fn powers_of_two_are_exact(i in 0u32..16, j in 0u32..16, q in 0u32..=16) {
        let (a, b) = (UIntWord::u16(1 << i), UIntWord::u16(1 << j));
        prop_assert_eq!(mitchell_mul(a, b), exact_mul(a, b));
        prop_assert_eq!(
            mitchell_div_fixed(a, b, q).unwrap(),
            simdive::mitchell::exact_div_fixed(a, b, q).unwrap()
        );
    }

    #[test]
    fn corrected_results_stay_in_range((a, b) in same_width_pair()) {
        let w = a.width().bits();
        let m = corrected_mul_outcome(a, b, &tables().mul).unwrap();
        prop_assert!((m.value as u128) < (1u128 << (2 * w)));
        if !b.is_zero() {
            let d = corrected_div_outcome(a, b, &tables().div, 0).unwrap();
            prop_assert!(d.value <= a.width().max_value() as u64);
        }
    }

    #[test]
    fn corrected_mul_scales_with_operand(a in 1u8..128, b in 1u8..=255) {
        // Doubling an operand keeps its fraction, so only the final floor
        // can differ.
        let t = &tables().mul;
        let base = corrected_mul_outcome(UIntWord::u8(a), UIntWord::u8(b), t).unwrap();
        let twice = corrected_mul_outcome(UIntWord::u8(2 * a), UIntWord::u8(b), t).unwrap();
        prop_assume!(!base.clamped && !twice.clamped);
        prop_assert!(twice.value == 2 * base.value || twice.value == 2 * base.value + 1);
    }

    #[test]
    fn normalized_errors_are_scale_free(x1 in 0.0f64..1.0, x2 in 0.0f64..1.0) {
        let m = normalized_error_mul(x1, x2).value;
        prop_assert!((0.0..1.0).contains(&m));
        let k = normalized_error_div(x1, x1).value;
        prop_assert!(k.abs() < 1e-15);
        let f = normalized_error_mul(x1 as f32, x2 as f32).value as f64;
        prop_assert!((f - m).abs() < 1e-5);
    }

    #[test]
    fn uncorrected_heatmap_k_invariance(k1 in -10i32..10, k2 in -10i32..10, mode in prop::sample::select(vec!["mitchell-mul", "mitchell-div"])) {
        let op: Operator = mode.parse().unwrap();
        let base = heatmap::<f64>(op, tables(), 16, 0, 0).unwrap();
        let moved = heatmap::<f64>(op, tables(), 16, k1, k2).unwrap();
        for (a, b) in base.cells.iter().zip(&moved.cells) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let base32 = heatmap::<f32>(op, tables(), 16, 0, 0).unwrap();
        let moved32 = heatmap::<f32>(op, tables(), 16, k1, k2).unwrap();
        prop_assert_eq!(base32.cells, moved32.cells);
    }

    #[test]
    fn packed_lanes_round_trip(bits in any::<u32>()) {
        for layout in Layout::ALL {
            let p = PackedWord::new(bits, layout);
            let lanes = unpack(&p);
            prop_assert_eq!(lanes.iter().map(|l| l.width().bits()).sum::<u32>(), 32);
            prop_assert_eq!(pack(&lanes, layout).unwrap(), p);
        }
    }

    #[test]
    fn every_config_matches_scalar_lanes(a in any::<u32>(), b in any::<u32>(), cfg in 0usize..30) {
        let t = tables();
        let cfg = LaneConfig::all()[cfg];
        let (pa, pb) = (PackedWord::new(a, cfg.layout()), PackedWord::new(b, cfg.layout()));
        let out = simdive_exec(&pa, &pb, &cfg, t).unwrap();
        let arith = Arith::new(Unit::Corrected, t);
        for (i, &mode) in cfg.modes().iter().enumerate() {
            let (x, y) = (pa.lane(i), pb.lane(i));
            match mode {
                OpMode::Mul => prop_assert_eq!(out.lanes[i].unwrap().value, arith.mul(x, y).value),
                OpMode::Div if y.is_zero() => prop_assert!(out.lanes[i].is_err()),
                OpMode::Div => prop_assert_eq!(out.lanes[i].unwrap().value, arith.div(x, y, 0).unwrap().value),
            }
        }
    }
}

#[test]
fn lod_segment_examples() {
    use simdive::lod_segment;
    assert!(lod_segment(0).zero_flag);
    assert_eq!((lod_segment(0b1011).zero_flag, lod_segment(0b1011).position), (false, 3));
    assert_eq!(lod_segment(0b0010).position, 1);
    assert_eq!(leading_one(UIntWord::u8(43)), Some(5));
    assert_eq!(leading_one(UIntWord::u8(10)), Some(3));
    assert_eq!(leading_one(UIntWord::u32(1)), Some(0));
}

#[test]
fn segmented_lod_matches_scan_on_all_16_bit_values() {
    for v in 1..=u16::MAX {
        assert_eq!(leading_one(UIntWord::u16(v)), Some(15 - v.leading_zeros()));
    }
}

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

#[test]
fn sweeps_do_not_depend_on_thread_count() {
    let specs = [
        SweepSpec::new("corrected-mul".parse().unwrap(), Width::W16, Sampling::Uniform { count: 300_000, seed: 11 }),
        SweepSpec::new("corrected-div".parse().unwrap(), Width::W8, Sampling::Exhaustive),
        SweepSpec::new("mitchell-div".parse().unwrap(), Width::W16, Sampling::Uniform { count: 200_000, seed: 3 })
            .with_divisor_width(Width::W8),
    ];
    for spec in specs {
        let one = with_threads(1, || characterize_with(&spec, tables()).unwrap());
        let many = with_threads(5, || characterize_with(&spec, tables()).unwrap());
        assert_eq!(one, many);
    }
}

#[test]
fn tunability_and_granularity_are_monotone_for_division() {
    let are = |m, n| {
        let t = TablePair::build(m, n).unwrap();
        let spec = SweepSpec::new("corrected-div".parse().unwrap(), Width::W8, Sampling::Exhaustive).with_tables(m, n);
        characterize_with(&spec, &t).unwrap().stats.are
    };
    let plain = {
        let spec = SweepSpec::new("mitchell-div".parse().unwrap(), Width::W8, Sampling::Exhaustive);
        characterize_with(&spec, tables()).unwrap().stats.are
    };
    let (n4, n6, n8) = (are(3, 4), are(3, 6), are(3, 8));
    assert!(plain > n4 && n4 > n6 && n6 >= n8, "{plain} {n4} {n6} {n8}");
    assert!(are(4, 8) <= n8);
}
