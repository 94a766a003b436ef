//! Application-level checks on the committed fixtures.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use simdive::apps::ann::{AnnModel, FloatMlp, TrainConfig};
use simdive::apps::image::{add_gaussian_noise, blend, gaussian_smooth, load_pgm, psnr, save_pgm, GrayImage, Kernel, SmoothArith};
use simdive::apps::Mnist;
use simdive::{Arith, TablePair, Unit};

fn tables() -> &'static TablePair {
    static TABLES: OnceLock<TablePair> = OnceLock::new();
    TABLES.get_or_init(|| TablePair::build(3, 6).unwrap())
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn images() -> Vec<GrayImage> {
    ["rings", "discs", "waves"].iter().map(|n| load_pgm(fixture(&format!("images/{n}.pgm"))).unwrap()).collect()
}

fn mnist_test() -> Mnist {
    Mnist::load(fixture("mnist/t10k-images-idx3-ubyte"), fixture("mnist/t10k-labels-idx1-ubyte")).unwrap()
}

#[test]
fn apps_keep_shapes_across_units() {
    let imgs = images();
    for unit in Unit::ALL {
        let arith = Arith::new(unit, tables());
        let b = blend(&imgs[0], &imgs[1], &arith).unwrap();
        assert_eq!((b.width(), b.height()), (imgs[0].width(), imgs[0].height()));
        let s = gaussian_smooth(&imgs[2], Kernel::Gauss5, SmoothArith::hybrid(unit), tables()).unwrap();
        assert_eq!((s.width(), s.height()), (imgs[2].width(), imgs[2].height()));
    }
}

#[test]
fn corrected_blend_beats_mitchell_on_each_image_with_itself() {
    for img in images() {
        let exact = blend(&img, &img, &Arith::new(Unit::Exact, tables())).unwrap();
        let corr = psnr(&exact, &blend(&img, &img, &Arith::new(Unit::Corrected, tables())).unwrap()).unwrap();
        let mitch = psnr(&exact, &blend(&img, &img, &Arith::new(Unit::Mitchell, tables())).unwrap()).unwrap();
        assert!(corr >= mitch, "{corr} {mitch}");
    }
}

#[test]
fn approximate_divider_changes_gauss5_output() {
    let img = images().remove(1);
    let noisy = add_gaussian_noise(&img, 20.0, 3);
    let exact = gaussian_smooth(&noisy, Kernel::Gauss5, SmoothArith::EXACT, tables()).unwrap();
    let div = gaussian_smooth(&noisy, Kernel::Gauss5, SmoothArith::div_only(Unit::Mitchell), tables()).unwrap();
    assert_ne!(exact, div);
    // The 3x3 kernel and its divisor are powers of two, which Mitchell
    // arithmetic handles exactly.
    let exact3 = gaussian_smooth(&noisy, Kernel::Binomial3, SmoothArith::EXACT, tables()).unwrap();
    let hybrid3 = gaussian_smooth(&noisy, Kernel::Binomial3, SmoothArith::hybrid(Unit::Mitchell), tables()).unwrap();
    assert_eq!(exact3, hybrid3);
}

#[test]
fn pgm_fixture_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    for (i, img) in images().iter().enumerate() {
        let path = dir.path().join(format!("{i}.pgm"));
        save_pgm(&path, img).unwrap();
        assert_eq!(&load_pgm(&path).unwrap(), img);
    }
}

#[test]
fn ann_accuracy_is_thread_count_independent() {
    let model = AnnModel::load(fixture("ann/mlp-784-100-10.json")).unwrap();
    let data = mnist_test().take(300);
    let arith = Arith::new(Unit::Corrected, tables());
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| model.accuracy(&data, &arith, None).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn committed_model_has_expected_shape() {
    let model = AnnModel::load(fixture("ann/mlp-784-100-10.json")).unwrap();
    let dims: Vec<(usize, usize)> = model.layers.iter().map(|l| (l.inputs, l.outputs)).collect();
    assert_eq!(dims, vec![(784, 100), (100, 10)]);
}

#[test]
fn quantization_costs_little_against_float() {
    // Small, fast training run: quantized exact inference tracks the float net.
    let train = Mnist::load(fixture("mnist/train-images-idx3-ubyte"), fixture("mnist/train-labels-idx1-ubyte"))
        .unwrap()
        .take(1000);
    let cfg = TrainConfig {
        hidden: vec![32],
        epochs: 3,
        ..TrainConfig::default()
    };
    let float = FloatMlp::<f32>::train(&train, &cfg).unwrap();
    let model = AnnModel::quantize(&float, &train).unwrap();
    let test = mnist_test();
    let f = float.accuracy(&test);
    let q = model.accuracy(&test, &Arith::new(Unit::Exact, tables()), None).unwrap().accuracy;
    assert!(f > 0.75, "float accuracy {f}");
    assert!((f - q).abs() < 0.02, "float {f} quantized {q}");
    let again = FloatMlp::<f32>::train(&train, &cfg).unwrap();
    assert_eq!(again, float);
}
