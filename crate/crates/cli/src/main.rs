//! `simdive` command-line front end.
//!
//! Every subcommand prints one JSON run report on stdout. Exit codes:
//! 0 success, 1 domain error (bad files, invalid combinations), 2 usage error.

mod report;

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use simdive::apps::ann::{AnnModel, FloatMlp, TrainConfig};
use simdive::apps::image::{add_gaussian_noise, blend, gaussian_smooth, load_pgm, psnr, save_pgm, Kernel, SmoothArith};
use simdive::apps::Mnist;
use simdive::correction::build_table_with_grid;
use simdive::metrics::{characterize_with, heatmap, heatmap_bits, write_stats_csv, Sampling, SweepSpec};
use simdive::{Arith, OpMode, Operator, TablePair, Unit, Width};

use crate::report::{RunReport, Timer};

#[derive(Debug, Parser)]
#[command(name = "simdive", version, about = "Approximate log multiplier-divider model and benchmarks")]
struct Cli {
    /// Worker threads (default: all cores). Never changes numeric output.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct TableArgs {
    /// Fraction MSBs per operand used to index the correction table.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=4))]
    region_bits: u32,
    /// Fractional bits of each correction coefficient.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=16))]
    coeff_bits: u32,
}

impl TableArgs {
    fn build(&self) -> simdive::Result<TablePair> {
        TablePair::build(self.region_bits, self.coeff_bits)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Mul,
    Div,
}

impl From<ModeArg> for OpMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mul => OpMode::Mul,
            ModeArg::Div => OpMode::Div,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum UnitArg {
    Exact,
    Mitchell,
    Corrected,
}

impl From<UnitArg> for Unit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Exact => Unit::Exact,
            UnitArg::Mitchell => Unit::Mitchell,
            UnitArg::Corrected => Unit::Corrected,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SmoothMode {
    Exact,
    Div,
    Hybrid,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KernelArg {
    Binomial3,
    Gauss5,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Binomial3 => Kernel::Binomial3,
            KernelArg::Gauss5 => Kernel::Gauss5,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Precision {
    F32,
    F64,
}

fn parse_width(s: &str) -> Result<Width, String> {
    let bits: u32 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    Width::from_bits(bits).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a correction table and write it as CSV
    /// (columns: mode,region_bits,i,j,coefficient,scale_bits).
    GenTable {
        #[arg(long, value_enum, default_value_t = ModeArg::Mul)]
        mode: ModeArg,
        #[command(flatten)]
        table: TableArgs,
        /// Sample points per region axis for the numerical mean.
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Error sweep. CSV columns: op,width,divisor_width,sampling,seed,
    /// region_bits,coeff_bits,quot_bits,subset,are,pre,ned,mean_signed,
    /// count,zero_exact,clamp_events.
    Characterize {
        /// <exact|mitchell|corrected>-<mul|div>
        #[arg(long)]
        op: Operator,
        #[arg(long, value_parser = parse_width, default_value = "8")]
        width: Width,
        /// Narrower second operand width (e.g. 8 for 16/8 division).
        #[arg(long, value_parser = parse_width)]
        divisor_width: Option<Width>,
        /// Uniform random samples; the whole space is swept when omitted.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Fractional quotient bits (division only; default: dividend width).
        #[arg(long)]
        quot_bits: Option<u32>,
        #[command(flatten)]
        table: TableArgs,
        /// Also write the stats rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Relative-error heatmap over the fraction plane, written as a CSV matrix.
    Heatmap {
        #[arg(long)]
        op: Operator,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        k1: u32,
        #[arg(long, default_value_t = 0)]
        k2: u32,
        /// Evaluate the integer unit at this width instead of the analytic model.
        #[arg(long, value_parser = parse_width)]
        bits: Option<Width>,
        #[arg(long, value_enum, default_value_t = Precision::F64)]
        precision: Precision,
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Multiply-blend two PGM images and compare against the exact blend.
    Blend {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = UnitArg::Corrected)]
        mul: UnitArg,
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add seeded Gaussian noise to a clean PGM, smooth it, and report PSNR
    /// of the noisy, exact-filtered and approximate-filtered images.
    Smooth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SmoothMode::Hybrid)]
        arith: SmoothMode,
        #[arg(long, value_enum, default_value_t = UnitArg::Corrected)]
        unit: UnitArg,
        #[arg(long, value_enum, default_value_t = KernelArg::Binomial3)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 20.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quantized MLP accuracy with the chosen multiplier.
    Ann {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value_t = UnitArg::Corrected)]
        mul: UnitArg,
        #[arg(long)]
        limit: Option<usize>,
        #[command(flatten)]
        table: TableArgs,
    },
    /// Train the float MLP, quantize it, and write the model JSON.
    AnnTrain {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "100")]
        hidden: Vec<usize>,
        #[arg(long, default_value_t = 15)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        #[arg(long, default_value_t = 16)]
        batch: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Held-out set for reporting float and quantized accuracy.
        #[arg(long, requires = "test_labels")]
        test_images: Option<PathBuf>,
        #[arg(long, requires = "test_images")]
        test_labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> simdive::Result<RunReport> {
    match command {
        Command::GenTable { mode, table, grid, out } => {
            let timer = Timer::start("gen-table");
            let t = build_table_with_grid(mode.into(), table.region_bits, table.coeff_bits, grid)?;
            t.save(&out)?;
            Ok(timer.finish(
                json!({ "mode": mode, "region_bits": table.region_bits, "coeff_bits": table.coeff_bits, "grid": grid, "out": out }),
                json!({ "rows": t.entries().len(), "min": t.entries().iter().min(), "max": t.entries().iter().max() }),
            ))
        }
        Command::Characterize {
            op,
            width,
            divisor_width,
            samples,
            seed,
            quot_bits,
            table,
            csv,
        } => {
            let timer = Timer::start("characterize");
            let sampling = match samples {
                Some(count) => Sampling::Uniform { count, seed },
                None => Sampling::Exhaustive,
            };
            let spec = SweepSpec {
                divisor_width,
                quot_bits,
                ..SweepSpec::new(op, width, sampling).with_tables(table.region_bits, table.coeff_bits)
            };
            spec.validate()?;
            let result = characterize_with(&spec, &table.build()?)?;
            if let Some(path) = &csv {
                write_stats_csv(BufWriter::new(File::create(path)?), std::slice::from_ref(&result))?;
            }
            Ok(timer.finish(
                json!({ "spec": spec, "quot_bits": spec.effective_quot_bits(), "csv": csv }),
                json!({ "all": result.stats, "dividend_ge_divisor": result.filtered }),
            ))
        }
        Command::Heatmap {
            op,
            grid,
            k1,
            k2,
            bits,
            precision,
            table,
            out,
        } => {
            let timer = Timer::start("heatmap");
            let tables = table.build()?;
            let file = BufWriter::new(File::create(&out)?);
            let (max_abs, mean_abs) = match (bits, precision) {
                (Some(width), _) => {
                    let h = heatmap_bits(op, &tables, width, grid, k1, k2)?;
                    h.write_csv(file)?;
                    (h.max_abs(), h.mean_abs())
                }
                (None, Precision::F64) => {
                    let h = heatmap::<f64>(op, &tables, grid, k1 as i32, k2 as i32)?;
                    h.write_csv(file)?;
                    (h.max_abs(), h.mean_abs())
                }
                (None, Precision::F32) => {
                    let h = heatmap::<f32>(op, &tables, grid, k1 as i32, k2 as i32)?;
                    h.write_csv(file)?;
                    (h.max_abs() as f64, h.mean_abs() as f64)
                }
            };
            Ok(timer.finish(
                json!({ "op": op, "grid": grid, "k1": k1, "k2": k2, "bits": bits.map(Width::bits), "precision": precision, "table": table, "out": out }),
                json!({ "max_abs": max_abs, "mean_abs": mean_abs }),
            ))
        }
        Command::Blend { a, b, mul, table, out } => {
            let timer = Timer::start("blend");
            let tables = table.build()?;
            let (ia, ib) = (load_pgm(&a)?, load_pgm(&b)?);
            let exact = blend(&ia, &ib, &Arith::new(Unit::Exact, &tables))?;
            let approx = blend(&ia, &ib, &Arith::new(mul.into(), &tables))?;
            if let Some(path) = &out {
                save_pgm(path, &approx)?;
            }
            Ok(timer.finish(
                json!({ "a": a, "b": b, "mul": mul, "table": table, "out": out }),
                json!({ "psnr_vs_exact_db": db(psnr(&exact, &approx)?) }),
            ))
        }
        Command::Smooth {
            input,
            arith,
            unit,
            kernel,
            sigma,
            seed,
            table,
            out,
        } => {
            let timer = Timer::start("smooth");
            let tables = table.build()?;
            let clean = load_pgm(&input)?;
            let noisy = add_gaussian_noise(&clean, sigma, seed);
            let chosen = match arith {
                SmoothMode::Exact => SmoothArith::EXACT,
                SmoothMode::Div => SmoothArith::div_only(unit.into()),
                SmoothMode::Hybrid => SmoothArith::hybrid(unit.into()),
            };
            let exact = gaussian_smooth(&noisy, kernel.into(), SmoothArith::EXACT, &tables)?;
            let approx = gaussian_smooth(&noisy, kernel.into(), chosen, &tables)?;
            if let Some(path) = &out {
                save_pgm(path, &approx)?;
            }
            Ok(timer.finish(
                json!({ "input": input, "arith": arith, "unit": unit, "kernel": kernel, "sigma": sigma, "seed": seed, "table": table, "out": out }),
                json!([
                    { "image": "noisy", "psnr_db": db(psnr(&clean, &noisy)?) },
                    { "image": "exact", "psnr_db": db(psnr(&clean, &exact)?) },
                    { "image": "approx", "psnr_db": db(psnr(&clean, &approx)?) },
                ]),
            ))
        }
        Command::Ann {
            model,
            images,
            labels,
            mul,
            limit,
            table,
        } => {
            let timer = Timer::start("ann");
            let tables = table.build()?;
            let m = AnnModel::load(&model)?;
            let data = Mnist::load(&images, &labels)?;
            let eval = m.accuracy(&data, &Arith::new(mul.into(), &tables), limit)?;
            Ok(timer.finish(
                json!({ "model": model, "images": images, "labels": labels, "mul": mul, "limit": limit, "table": table }),
                eval,
            ))
        }
        Command::AnnTrain {
            images,
            labels,
            hidden,
            epochs,
            learning_rate,
            batch,
            seed,
            test_images,
            test_labels,
            out,
        } => {
            let timer = Timer::start("ann-train");
            let train = Mnist::load(&images, &labels)?;
            let cfg = TrainConfig {
                hidden,
                epochs,
                learning_rate,
                batch,
                seed,
            };
            let float = FloatMlp::<f32>::train(&train, &cfg)?;
            let model = AnnModel::quantize(&float, &train)?;
            model.save(&out)?;
            let mut results = json!({ "train_float_accuracy": float.accuracy(&train) });
            if let (Some(ti), Some(tl)) = (&test_images, &test_labels) {
                let test = Mnist::load(ti, tl)?;
                let tables = TablePair::build(simdive::DEFAULT_REGION_BITS, simdive::DEFAULT_COEFF_BITS)?;
                results["test_float_accuracy"] = json!(float.accuracy(&test));
                for unit in Unit::ALL {
                    let eval = model.accuracy(&test, &Arith::new(unit, &tables), None)?;
                    results[format!("test_{unit}_accuracy")] = json!(eval.accuracy);
                }
            }
            Ok(timer.finish(
                json!({ "images": images, "labels": labels, "config": cfg, "test_images": test_images, "test_labels": test_labels, "out": out }),
                results,
            ))
        }
    }
}

/// JSON has no infinity; identical images report `null`.
fn db(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
