//! Experiment harness: BER sweeps, EXIT charts, and density-evolution
//! thresholds from a TOML config, with reproducible seeding and atomic
//! CSV/JSON outputs.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::{parse_component, Config, ExitComponent};
use isi2d::analysis::{
    find_threshold, j_function, j_inverse, phi, trace_exit_equalizer, trace_exit_ldpc, DeOptions,
    ExitTraceOptions,
};
use isi2d::equalizer::Scheme;
use isi2d::grid::{snr_to_sigma, PsfKernel};
use isi2d::ldpc::LdpcCode;
use isi2d::seed::derive_seed;
use isi2d::turbo::{ber_point, HybridTables, ReceiverConfig, ReceiverScheme};
use output::{fmt_f64, write_csv, write_json, Manifest, TaskSeed};

#[derive(Parser)]
#[command(name = "isi2d", version, about = "2D ISI turbo-equalization experiments")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, env = "ISI2D_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "ISI2D_OUT", default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: detected parallelism).
    #[arg(long, global = true, env = "ISI2D_WORKERS")]
    workers: Option<usize>,

    /// Base seed; all task seeds derive from it.
    #[arg(long, global = true, env = "ISI2D_SEED", default_value_t = 1)]
    seed: u64,

    #[arg(long, global = true, env = "ISI2D_VERBOSE")]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER sweep of the iterative receiver over the configured SNR grid.
    Ber,
    /// EXIT curves for the configured components and SNRs.
    Exit,
    /// Density-evolution thresholds over the configured (s, scheme) matrix.
    Threshold,
    /// Quick brute-force oracle checks of the core algorithms.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(2);
        }
    }

    // Config problems exit 1; runtime problems exit 2.
    let config = match &cli.command {
        Command::Selftest => None,
        _ => {
            let Some(path) = cli.config.as_deref() else {
                eprintln!("error: --config is required for this command");
                return ExitCode::from(1);
            };
            match Config::load(path) {
                Ok(c) => Some(c),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(1);
                }
            }
        }
    };

    let started = Instant::now();
    let result = match &cli.command {
        Command::Ber => cmd_ber(&cli, config.as_ref().unwrap(), started),
        Command::Exit => cmd_exit(&cli, config.as_ref().unwrap(), started),
        Command::Threshold => cmd_threshold(&cli, config.as_ref().unwrap(), started),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn workers_in_use() -> usize {
    rayon::current_num_threads()
}

/// EXIT tables for the hybrid's scheme switch at one noise level.
fn hybrid_tables(psf: &PsfKernel, sigma_w: f64, n_half: usize, seed: u64) -> anyhow::Result<HybridTables> {
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let options = ExitTraceOptions {
        page_side: 200,
        repeats: 2,
        n_half,
    };
    let a1 = trace_exit_equalizer(Scheme::Approx1, psf, sigma_w, &grid, &options, derive_seed(seed, &[1]))?;
    let a2 = trace_exit_equalizer(Scheme::Approx2, psf, sigma_w, &grid, &options, derive_seed(seed, &[2]))?;
    Ok(HybridTables {
        approx1: a1.table(),
        approx2: a2.table(),
    })
}

fn cmd_ber(cli: &Cli, config: &Config, started: Instant) -> anyhow::Result<()> {
    let sweep = config
        .sweep
        .as_ref()
        .context("config has no [sweep] section")?;
    let psf = PsfKernel::make_psf(config.psf.s)?;
    let code = LdpcCode::build_regular(
        config.code.n,
        config.code.dv,
        config.code.dc,
        config.code.seed,
    )?;
    let receiver = ReceiverConfig {
        scheme: config.receiver.scheme,
        n_half: config.receiver.n_half,
        outer_iters: config.receiver.outer_iters,
        inner_iters: config.receiver.inner_iters,
        crossover: config.receiver.crossover,
    };

    let mut rows = Vec::new();
    let mut task_seeds = Vec::new();
    for (k, &snr) in sweep.snr_db.iter().enumerate() {
        let seed = derive_seed(cli.seed, &[1, k as u64]);
        task_seeds.push(TaskSeed {
            task: format!("ber snr={snr}"),
            seed,
        });
        let tables = if receiver.scheme == ReceiverScheme::Hybrid {
            let sigma = snr_to_sigma(snr, &psf, Some(code.rate()))?;
            Some(hybrid_tables(&psf, sigma, receiver.n_half, derive_seed(seed, &[7]))?)
        } else {
            None
        };
        let point = ber_point(
            &code,
            &psf,
            &receiver,
            snr,
            sweep.trials,
            sweep.min_errors,
            tables.as_ref(),
            seed,
        )?;
        if cli.verbose {
            eprintln!(
                "snr {snr} dB: ber {:.3e} ({} errors / {} bits, {} trials)",
                point.ber, point.bit_errors, point.bits, point.trials
            );
        }
        rows.push(
            [
                fmt_f64(point.snr_db),
                fmt_f64(point.ber),
                fmt_f64(point.ber_lo),
                fmt_f64(point.ber_hi),
                point.trials.to_string(),
                fmt_f64(point.avg_iters),
                point.bit_errors.to_string(),
                point.bits.to_string(),
                point.frame_errors.to_string(),
            ]
            .join(","),
        );
    }

    write_csv(
        &cli.out.join("ber.csv"),
        "snr_db,ber,ci_low,ci_high,trials,avg_iters,bit_errors,bits,frame_errors",
        &rows,
    )?;
    write_manifest(cli, config, "ber", task_seeds, started)?;
    Ok(())
}

fn cmd_exit(cli: &Cli, config: &Config, started: Instant) -> anyhow::Result<()> {
    let exit = config
        .exit
        .as_ref()
        .context("config has no [exit] section")?;
    let psf = PsfKernel::make_psf(config.psf.s)?;
    let rate = if exit.rate_adjusted {
        Some(config.rate())
    } else {
        None
    };

    let mut rows = Vec::new();
    let mut task_seeds = Vec::new();
    let mut decoder_done = false;
    for (ci, name) in exit.components.iter().enumerate() {
        match parse_component(name)? {
            ExitComponent::Equalizer(scheme) => {
                for (si, &snr) in exit.snr_db.iter().enumerate() {
                    let seed = derive_seed(cli.seed, &[2, ci as u64, si as u64]);
                    task_seeds.push(TaskSeed {
                        task: format!("exit {name} snr={snr}"),
                        seed,
                    });
                    let sigma = snr_to_sigma(snr, &psf, rate)?;
                    let options = ExitTraceOptions {
                        page_side: exit.page_side,
                        repeats: exit.repeats,
                        n_half: config.receiver.n_half,
                    };
                    let curve =
                        trace_exit_equalizer(scheme, &psf, sigma, &exit.i_grid, &options, seed)?;
                    for p in &curve.points {
                        rows.push(format!(
                            "{name},{},{},{},{}",
                            fmt_f64(snr),
                            fmt_f64(p.i_i),
                            fmt_f64(p.i_o),
                            fmt_f64(p.i_o_stderr)
                        ));
                    }
                }
            }
            ExitComponent::Decoder => {
                // The decoder curve is channel-independent; trace it once.
                if decoder_done {
                    continue;
                }
                decoder_done = true;
                let seed = derive_seed(cli.seed, &[2, ci as u64, u64::MAX]);
                task_seeds.push(TaskSeed {
                    task: "exit decoder".into(),
                    seed,
                });
                let curve = trace_exit_ldpc(
                    config.code.n,
                    config.code.dv,
                    config.code.dc,
                    config.code.seed,
                    config.receiver.inner_iters,
                    &exit.i_grid,
                    exit.repeats,
                    seed,
                )?;
                for p in &curve.points {
                    rows.push(format!(
                        "decoder,,{},{},{}",
                        fmt_f64(p.i_i),
                        fmt_f64(p.i_o),
                        fmt_f64(p.i_o_stderr)
                    ));
                }
            }
        }
    }

    write_csv(
        &cli.out.join("exit.csv"),
        "component,snr_db,i_i,i_o,i_o_stderr",
        &rows,
    )?;
    write_manifest(cli, config, "exit", task_seeds, started)?;
    Ok(())
}

#[derive(serde::Serialize)]
struct ThresholdRecord {
    s: f64,
    scheme: ReceiverScheme,
    threshold_snr_db: f64,
    tolerance_db: f64,
    probes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn cmd_threshold(cli: &Cli, config: &Config, started: Instant) -> anyhow::Result<()> {
    let th = config
        .threshold
        .as_ref()
        .context("config has no [threshold] section")?;

    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut task_seeds = Vec::new();
    for (si, &s) in th.s_values.iter().enumerate() {
        let psf = PsfKernel::make_psf(s)?;
        for (ki, &scheme) in th.schemes.iter().enumerate() {
            let seed = derive_seed(cli.seed, &[3, si as u64, ki as u64]);
            task_seeds.push(TaskSeed {
                task: format!("threshold s={s} scheme={scheme:?}"),
                seed,
            });
            let options = DeOptions {
                page_side: th.page_side,
                repeats: th.repeats,
                n_half: config.receiver.n_half,
                dv: config.code.dv,
                dc: config.code.dc,
                inner_iters: config.receiver.inner_iters,
                tol_db: th.tol_db,
                ..DeOptions::default()
            };
            let result = find_threshold(scheme, &psf, &options, seed)?;
            if cli.verbose {
                eprintln!(
                    "s={s} {scheme:?}: {:.3} dB ({} probes)",
                    result.threshold_snr_db,
                    result.trace.len()
                );
            }
            rows.push(format!(
                "{},{:?},{},{},{}",
                fmt_f64(s),
                scheme,
                fmt_f64(result.threshold_snr_db),
                fmt_f64(result.tolerance_db),
                result.trace.len()
            ));
            records.push(ThresholdRecord {
                s,
                scheme,
                threshold_snr_db: result.threshold_snr_db,
                tolerance_db: result.tolerance_db,
                probes: result.trace.len(),
                note: (scheme == ReceiverScheme::Approx2)
                    .then(|| "matched-filter scheme: expected very high".into()),
            });
        }
    }

    write_json(&cli.out.join("thresholds.json"), &records)?;
    write_csv(
        &cli.out.join("thresholds.csv"),
        "s,scheme,threshold_snr_db,tolerance_db,probes",
        &rows,
    )?;
    write_manifest(cli, config, "threshold", task_seeds, started)?;
    Ok(())
}

fn write_manifest(
    cli: &Cli,
    config: &Config,
    command: &str,
    task_seeds: Vec<TaskSeed>,
    started: Instant,
) -> anyhow::Result<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        base_seed: cli.seed,
        workers: workers_in_use(),
        config,
        task_seeds,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&cli.out.join(format!("{command}.manifest.json")), &manifest)
}

fn cmd_selftest() -> anyhow::Result<()> {
    use isi2d::equalizer::{equalize_page, llr_to_stats, solve_exact, EqualizerWindow};
    use isi2d::grid::{add_awgn, convolve2d, NoiseSpec, SymbolPage};
    use isi2d::llr::LlrGrid;
    use isi2d::oracle::{exhaustive_posterior_llrs, phi_curve_fit};

    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // Sum-product equals enumeration on a forest.
    {
        let code =
            LdpcCode::from_edge_list(9, 1, 3, vec![0, 0, 0, 1, 1, 1, 2, 2, 2])?;
        let prior: Vec<f64> = (0..9).map(|k| ((k * 7 % 11) as f64 - 5.0) / 2.0).collect();
        let want = exhaustive_posterior_llrs(&code, &prior)?;
        let (out, _) = code.decode_iterations(&prior, 3, None)?;
        let ok = out
            .posterior
            .iter()
            .zip(&want)
            .all(|(a, b)| (a - b).abs() < 1e-9);
        check("sum-product matches exhaustive marginals on trees", ok);
    }

    // Perfect-neighbor closed form and the sigma2 identity.
    {
        let psf = PsfKernel::make_psf(0.4)?;
        let window = EqualizerWindow::build(&psf, 2);
        let page = SymbolPage::random(16, 16, 5);
        let rec = convolve2d(&page, &psf);
        let mut prior = LlrGrid::zeros(16, 16);
        for i in 0..16 {
            for j in 0..16 {
                prior.set(i, j, f64::from(page.get(i, j)) * 40.0);
            }
        }
        let stats = llr_to_stats(&prior);
        let (_, sol) = solve_exact(&window, &stats, (8, 8), 0.7, &rec)?;
        let mu_want = 1.0 / (1.0 + 0.49);
        check(
            "perfect-prior filter gain matches the closed form",
            (sol.mu - mu_want).abs() < 1e-10,
        );
        check(
            "output variance identity sigma2 = mu(1-mu)",
            (sol.sigma2 - sol.mu * (1.0 - sol.mu)).abs() < 1e-10,
        );
    }

    // First-iteration equality of exact and approximate-I.
    {
        let psf = PsfKernel::make_psf(0.4)?;
        let window = EqualizerWindow::build(&psf, 2);
        let page = SymbolPage::random(12, 12, 6);
        let clean = convolve2d(&page, &psf);
        let noise = NoiseSpec {
            sigma_w: 0.6,
            snr_db: 0.0,
            rate_adjusted: false,
        };
        let rec = add_awgn(&clean, &noise, 7)?;
        let zero = LlrGrid::zeros(12, 12);
        let a = equalize_page(&rec, &zero, Scheme::Exact, &window, 0.6)?;
        let b = equalize_page(&rec, &zero, Scheme::Approx1, &window, 0.6)?;
        check("exact and approximate-I agree bit-for-bit at zero priors", a == b);
    }

    // Information-transform sanity.
    {
        let sigma = j_inverse(0.5)?;
        check(
            "J-function round trip at I = 0.5",
            (j_function(sigma) - 0.5).abs() < 1e-6,
        );
        let ok = (1..=9).all(|k| {
            let x = k as f64;
            let fit = phi_curve_fit(x);
            ((phi(x) - fit) / fit).abs() < 0.02
        });
        check("check-node transform matches the published fit", ok);
    }

    if failures > 0 {
        anyhow::bail!("{failures} selftest check(s) failed");
    }
    Ok(())
}
