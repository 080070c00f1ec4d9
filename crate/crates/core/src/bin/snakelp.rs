use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use snakelp::edgemap::{EdgePack, Roi};
use snakelp::evaluate::report;
use snakelp::imagecore::{add_gaussian_noise, generate_shape, load_pgm, save_pfm, save_pgm, ShapeKind};
use snakelp::ipsolve::{auto_backend, phase_one, solve_with, SolveOptions};
use snakelp::lp::LpDump;
use snakelp::segment::{overlay, region_start, roi_lp, run_timed, SegmentConfig, DEFAULT_K};

#[derive(Parser)]
#[command(name = "snakelp", version, about = "Snake segmentation as a linear program")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a synthetic shape, optionally with Gaussian noise.
    Synth {
        #[arg(long)]
        shape: ShapeKind,
        #[arg(long, default_value_t = 400)]
        width: usize,
        #[arg(long, default_value_t = 320)]
        height: usize,
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        /// Noise-free filled mask of the shape.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Write the continuous (PFM) and binary (PGM) edge maps.
    Edgemap {
        #[arg(long = "in")]
        input: PathBuf,
        /// Fixed threshold in (0, 1]; adaptive when omitted.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        cont_out: Option<PathBuf>,
        #[arg(long)]
        bin_out: Option<PathBuf>,
    },
    /// Segment an image.
    Segment {
        #[arg(long = "in")]
        input: PathBuf,
        /// Region as `row,col,height,width`.
        #[arg(long, value_parser = parse_roi)]
        roi: Option<Roi>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        t_budget: usize,
        /// Tile size; `--tile` alone uses 64.
        #[arg(long, num_args = 0..=1, default_missing_value = "64")]
        tile: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        theta: Option<f64>,
        /// Value-match tolerance for contour extraction; `0.1·R` when omitted.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        mask_out: Option<PathBuf>,
        #[arg(long)]
        overlay_out: Option<PathBuf>,
        /// Write the (untiled) LP with its warm start as JSON.
        #[arg(long)]
        lp_dump: Option<PathBuf>,
    },
    /// Dice overlap of a predicted mask against a reference mask.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// `.csv` for CSV, anything else for JSON; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an LP given as JSON.
    SolveLp {
        #[arg(long)]
        lp_json: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_roi(s: &str) -> Result<Roi, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [row, col, height, width] if height > 0 && width > 0 => Ok(Roi {
            row,
            col,
            height,
            width,
        }),
        _ => Err("expected row,col,height,width with positive size".into()),
    }
}

/// Failure with its exit code: 2 for invalid input, 1 for runtime errors.
struct Failure(u8, String);

fn usage(msg: impl ToString) -> Failure {
    Failure(2, msg.to_string())
}

fn runtime(msg: impl ToString) -> Failure {
    Failure(1, msg.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| runtime(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(runtime)
        }
    }
}

fn check_theta(theta: Option<f64>) -> Result<(), Failure> {
    match theta {
        Some(t) if !(t > 0.0 && t <= 1.0) => Err(usage(format!("--theta must lie in (0, 1], got {t}"))),
        _ => Ok(()),
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Synth {
            shape,
            width,
            height,
            noise_sigma,
            seed,
            out,
            truth,
        } => {
            if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
                return Err(usage("--noise-sigma must be finite and non-negative"));
            }
            let clean = generate_shape(shape, width, height).map_err(usage)?;
            let img = add_gaussian_noise(&clean, noise_sigma, seed).map_err(usage)?;
            save_pgm(&img, &out).map_err(runtime)?;
            if let Some(t) = truth {
                save_pgm(&clean, &t).map_err(runtime)?;
            }
            info!("wrote {shape} {width}x{height}, sigma {noise_sigma}");
            Ok(())
        }
        Command::Edgemap {
            input,
            theta,
            cont_out,
            bin_out,
        } => {
            check_theta(theta)?;
            let img = load_pgm(&input).map_err(runtime)?;
            let pack = EdgePack::from_image(&img, theta).map_err(runtime)?;
            if let Some(p) = cont_out {
                save_pfm(&pack.continuous, &p).map_err(runtime)?;
            }
            if let Some(p) = bin_out {
                save_pgm(&pack.binary, &p).map_err(runtime)?;
            }
            info!("theta {:.4}, {} edge pixels", pack.theta, pack.edge_count);
            Ok(())
        }
        Command::Segment {
            input,
            roi,
            k,
            t_budget,
            tile,
            seed,
            theta,
            tau,
            out_json,
            mask_out,
            overlay_out,
            lp_dump,
        } => {
            if lp_dump.is_some() && tile.is_some() {
                return Err(usage("--lp-dump needs an untiled run"));
            }
            let cfg = SegmentConfig {
                k,
                t_budget,
                theta,
                tile,
                roi,
                seed,
                tau_match: tau,
                ..SegmentConfig::default()
            };
            cfg.validate().map_err(usage)?;
            let img = load_pgm(&input).map_err(runtime)?;
            let (result, timings) = run_timed(&img, &cfg).map_err(runtime)?;
            if let Some(p) = &mask_out {
                save_pgm(&result.mask, p).map_err(runtime)?;
            }
            if let Some(p) = &overlay_out {
                save_pgm(&overlay(&img, &result.contour), p).map_err(runtime)?;
            }
            if let Some(p) = &lp_dump {
                let pack = EdgePack::from_image(&img, cfg.theta).map_err(runtime)?;
                let area = roi.unwrap_or(Roi::full(img.width(), img.height()));
                let k = k.unwrap_or(DEFAULT_K.min(pack.edges_in(&area)));
                let (sample, form) = roi_lp(&pack, area, k, &cfg, seed).map_err(runtime)?;
                let mut dump = form.dump();
                dump.x0 = Some(region_start(&form, &sample, &cfg, seed).map_err(runtime)?);
                let text = serde_json::to_string(&dump).map_err(runtime)?;
                emit(Some(p), &text)?;
            }
            let json = serde_json::to_string_pretty(&result.to_json(Some(timings))).map_err(runtime)?;
            if out_json.is_some() || (mask_out.is_none() && overlay_out.is_none()) {
                emit(out_json.as_deref(), &json)?;
            }
            info!(
                "{} contour pixels, mask area {}",
                result.contour.len(),
                result.mask.count_nonzero()
            );
            Ok(())
        }
        Command::Evaluate { pred, truth, out } => {
            let p = load_pgm(&pred).map_err(runtime)?;
            let t = load_pgm(&truth).map_err(runtime)?;
            let name = pred
                .file_stem()
                .map_or("pred".into(), |s| s.to_string_lossy().into_owned());
            let rep = report([(name.as_str(), &p, &t)]).map_err(usage)?;
            let csv = out
                .as_ref()
                .and_then(|o| o.extension())
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            let text = if csv { rep.to_csv() } else { rep.to_json() };
            emit(out.as_deref(), text.trim_end())
        }
        Command::SolveLp { lp_json, out } => {
            let text = fs::read_to_string(&lp_json).map_err(|e| runtime(format!("{}: {e}", lp_json.display())))?;
            let dump: LpDump = serde_json::from_str(&text).map_err(|e| usage(format!("malformed LP JSON: {e}")))?;
            let lp = dump.to_lp().map_err(usage)?;
            let opts = SolveOptions::default();
            let x0 = match dump.x0 {
                Some(x) => x,
                None => phase_one(&lp, &opts).map_err(runtime)?,
            };
            let hint = dump.constants.as_ref().map(|c| (c.k, c.t));
            let mut backend = auto_backend(&lp, hint);
            info!("solving {}x{} with {}", lp.m(), lp.n(), backend.name());
            let outcome = solve_with(&lp, &x0, &opts, backend.as_mut()).map_err(runtime)?;
            let json = serde_json::to_string_pretty(&outcome).map_err(runtime)?;
            emit(out.as_deref(), &json)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SNAKELP_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
