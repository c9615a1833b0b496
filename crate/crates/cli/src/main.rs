//! `dsm` — dynamics of the double standard map family from the command line.
//!
//! Every run writes its primary output (CSV or JSON) to stdout or `--out`,
//! and a JSON run manifest (inputs, solver config, version) alongside: to
//! `<out>.manifest.json` when writing files, to stderr when writing stdout.
//! Exit codes: 0 success, 1 domain errors, 2 usage errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use dsm_core::atlas::{
    classify_param, connectivity_check, cross_section, path_to_superattracting,
    superattracting_atlas, tip_exponent_estimate, tongue_tip, TongueOutcome,
};
use dsm_core::circle::{CircleParams, SolverConfig};
use dsm_core::complex::{distinguished_point, ComplexParams};
use dsm_core::cycle::find_attracting_cycle;
use dsm_core::koenigs::{koenigs_derivative_fd, koenigs_eval, koenigs_residual, KoenigsChart};
use dsm_core::raster::Window;
use dsm_core::render::{
    atlas_csv, path_csv, render_complex_plane, render_tongue_plane, section_csv,
    RenderManifest, RenderMode, TOOL_VERSION,
};
use dsm_core::BinaryType;

#[derive(Parser)]
#[command(name = "dsm", version, about = "Double standard maps: tongues, cycles, deformations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    solver: SolverArgs,
}

/// Overrides for the solver configuration shared by all subcommands.
#[derive(Args, Clone)]
struct SolverArgs {
    /// Iteration budget for cycle detection transients
    #[arg(long, global = true)]
    max_transient: Option<usize>,
    /// Cells in a cross-section scan of the a-circle
    #[arg(long, global = true)]
    section_grid: Option<usize>,
    /// Iteration budget for complex orbit classification
    #[arg(long, global = true)]
    complex_budget: Option<usize>,
    /// Largest cycle period searched for
    #[arg(long, global = true)]
    max_period: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(v) = self.max_transient {
            cfg.max_transient = v;
        }
        if let Some(v) = self.section_grid {
            cfg.section_grid = v;
        }
        if let Some(v) = self.complex_budget {
            cfg.complex_budget = v;
        }
        if let Some(v) = self.max_period {
            cfg.max_period = v;
        }
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Superattracting parameters at b = 1 with period dividing P (CSV)
    Atlas {
        #[arg(long)]
        period: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify one parameter: tongue membership, type, cycle (JSON)
    Classify {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-section intervals of a tongue at height b (CSV)
    Section {
        #[arg(long = "type", value_name = "K/M")]
        ty: String,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal b of a nonempty cross-section (JSON)
    Tip {
        #[arg(long = "type", value_name = "K/M")]
        ty: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Raster the tongue and flood-fill it for connectedness (JSON report)
    Connect {
        #[arg(long = "type", value_name = "K/M")]
        ty: String,
        #[arg(long, default_value_t = 1024)]
        width: usize,
        #[arg(long, default_value_t = 512)]
        height: usize,
        /// Window as a_min,a_max,b_min,b_max
        #[arg(long, value_name = "A0,A1,B0,B1", default_value = "0,1,0.5,1")]
        window: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// In-tongue path from (a, b) to the superattracting anchor (CSV)
    Path {
        #[arg(long = "type", value_name = "K/M")]
        ty: String,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a parameter-plane figure to a P6 pixmap
    Render {
        /// tongues | complex_classes (ignored when --manifest is given)
        #[arg(long)]
        mode: Option<String>,
        /// Reuse a manifest emitted by a previous run
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        /// Window as a_min,a_max,b_min,b_max (defaults per mode)
        #[arg(long, value_name = "A0,A1,B0,B1")]
        window: Option<String>,
        /// Output prefix: writes <out>.ppm, <out>.legend.csv, <out>.manifest.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a Koenigs chart at (a, b) and report its residuals (JSON)
    KoenigsCheck {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least-squares contact-order estimate at a tongue tip (JSON)
    TipExponent {
        #[arg(long = "type", value_name = "K/M")]
        ty: String,
        #[arg(long, default_value_t = 12)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.solver.config();
    match run(cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn parse_type(s: &str) -> anyhow::Result<BinaryType> {
    Ok(s.parse::<BinaryType>()?)
}

fn parse_window(s: &str) -> anyhow::Result<Window> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("window must be four numbers: {e}"))?;
    if parts.len() != 4 {
        anyhow::bail!("window must be a_min,a_max,b_min,b_max");
    }
    Ok(Window::new(parts[0], parts[1], parts[2], parts[3])?)
}

/// Primary output plus the run manifest, delivered per the output rules.
fn deliver(primary: &str, out: Option<&Path>, manifest: serde_json::Value) -> anyhow::Result<()> {
    let manifest_text = {
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        s
    };
    match out {
        Some(path) => {
            std::fs::write(path, primary)?;
            std::fs::write(sibling(path, "manifest.json"), manifest_text)?;
        }
        None => {
            print!("{primary}");
            eprint!("{manifest_text}");
        }
    }
    Ok(())
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

fn run_manifest(command: &str, inputs: serde_json::Value, cfg: &SolverConfig) -> serde_json::Value {
    json!({
        "command": command,
        "inputs": inputs,
        "cfg": cfg,
        "tool_version": TOOL_VERSION,
    })
}

fn run(command: Command, cfg: &SolverConfig) -> anyhow::Result<()> {
    match command {
        Command::Atlas { period, out } => {
            anyhow::ensure!(period >= 1 && period <= 16, "period must be in 1..=16");
            let entries = superattracting_atlas(period, cfg)?;
            let csv = atlas_csv(&entries);
            let m = run_manifest("atlas", json!({ "period": period }), cfg);
            deliver(&csv, out.as_deref(), m)
        }
        Command::Classify { a, b, out } => {
            let params = CircleParams::new(a, b)?;
            let sample = classify_param(params, cfg);
            let body = match &sample.outcome {
                TongueOutcome::InTongue { ty, cycle } => json!({
                    "a": a, "b": b,
                    "outcome": "in_tongue",
                    "type": ty.to_string(),
                    "period": cycle.period,
                    "multiplier": cycle.multiplier,
                    "cycle_angles": cycle.angles().iter().map(|x| x.value()).collect::<Vec<_>>(),
                    "distinguished_index": cycle.distinguished_index,
                }),
                TongueOutcome::NoAttractor => {
                    json!({ "a": a, "b": b, "outcome": "no_attractor" })
                }
                TongueOutcome::Undecided => json!({ "a": a, "b": b, "outcome": "undecided" }),
            };
            let mut text = serde_json::to_string_pretty(&body)?;
            text.push('\n');
            let m = run_manifest("classify", json!({ "a": a, "b": b }), cfg);
            deliver(&text, out.as_deref(), m)
        }
        Command::Section { ty, b, out } => {
            let ty = parse_type(&ty)?;
            let intervals = cross_section(ty, b, cfg);
            let csv = section_csv(ty, b, &intervals);
            let m = run_manifest("section", json!({ "type": ty.to_string(), "b": b }), cfg);
            deliver(&csv, out.as_deref(), m)
        }
        Command::Tip { ty, out } => {
            let ty = parse_type(&ty)?;
            let tip = tongue_tip(ty, cfg)?;
            let body = json!({ "type": ty.to_string(), "b_tip": tip });
            let mut text = serde_json::to_string_pretty(&body)?;
            text.push('\n');
            let m = run_manifest("tip", json!({ "type": ty.to_string() }), cfg);
            deliver(&text, out.as_deref(), m)
        }
        Command::Connect { ty, width, height, window, out } => {
            let ty = parse_type(&ty)?;
            let win = parse_window(&window)?;
            let report = connectivity_check(ty, win, width, height, cfg)?;
            let mut text = serde_json::to_string_pretty(&serde_json::to_value(&report)?)?;
            text.push('\n');
            let m = run_manifest(
                "connect",
                json!({
                    "type": ty.to_string(), "width": width, "height": height,
                    "window": win,
                }),
                cfg,
            );
            deliver(&text, out.as_deref(), m)
        }
        Command::Path { ty, a, b, out } => {
            let ty = parse_type(&ty)?;
            let start = CircleParams::new(a, b)?;
            let path = path_to_superattracting(ty, start, cfg)?;
            let mut csv = path_csv(&path);
            let _ = write!(csv, "# decay_violations,{}\n", path.decay_violations);
            let m = run_manifest(
                "path",
                json!({ "type": ty.to_string(), "a": a, "b": b }),
                cfg,
            );
            deliver(&csv, out.as_deref(), m)
        }
        Command::Render { mode, manifest, width, height, window, out } => {
            let manifest = match manifest {
                Some(path) => RenderManifest::from_json(&std::fs::read_to_string(path)?)?,
                None => {
                    let mode = mode.as_deref().unwrap_or("tongues");
                    let mut m = match mode {
                        "tongues" => RenderManifest::tongues_default(width, height),
                        "complex" | "complex_classes" => {
                            RenderManifest::complex_default(width, height)
                        }
                        other => anyhow::bail!("unknown mode {other:?}"),
                    };
                    if let Some(w) = window {
                        m.window = parse_window(&w)?;
                    }
                    m.validate()?;
                    m
                }
            };
            let ppm_path = sibling(&out, "ppm");
            match manifest.mode {
                RenderMode::Tongues => {
                    let (img, legend) = render_tongue_plane(&manifest)?;
                    std::fs::write(&ppm_path, img)?;
                    std::fs::write(sibling(&out, "legend.csv"), legend)?;
                }
                RenderMode::ComplexClasses => {
                    let img = render_complex_plane(&manifest)?;
                    std::fs::write(&ppm_path, img)?;
                }
            }
            std::fs::write(sibling(&out, "manifest.json"), manifest.to_json())?;
            eprintln!("wrote {}", ppm_path.display());
            Ok(())
        }
        Command::KoenigsCheck { a, b, out } => {
            let params = CircleParams::new(a, b)?;
            let cycle = find_attracting_cycle(params, cfg)
                .ok_or_else(|| anyhow::anyhow!("no attracting cycle at ({a}, {b})"))?;
            let cparams = ComplexParams::new(a, b)?;
            let mut cycle = cycle;
            distinguished_point(&cparams, &mut cycle, cfg)?;
            let chart = KoenigsChart::build(&cparams, &cycle, cfg)?;
            let i_conj_base = Complex64::new(0.0, 1.0) * chart.base.conj();
            let deriv = koenigs_derivative_fd(&cparams, &cycle, &chart, chart.base)?;
            let mut func_max: f64 = 0.0;
            let mut sym_max: f64 = 0.0;
            for k in 0..32 {
                let t = std::f64::consts::TAU * k as f64 / 32.0;
                let z = chart.base + Complex64::from_polar(0.5 * chart.radius, t);
                func_max = func_max.max(koenigs_residual(&cparams, &cycle, &chart, z)?);
                let phi = koenigs_eval(&cparams, &cycle, &chart, z)?;
                let refl = koenigs_eval(&cparams, &cycle, &chart, z.conj().inv())?;
                sym_max = sym_max.max((refl.conj() - phi).norm());
            }
            let body = json!({
                "a": a, "b": b,
                "period": cycle.period,
                "lambda": cycle.multiplier,
                "base": [chart.base.re, chart.base.im],
                "radius": chart.radius,
                "derivative_fd": [deriv.re, deriv.im],
                "normalization_modulus": deriv.norm(),
                "normalization_direction_residual": (deriv - i_conj_base).norm(),
                "functional_residual_max": func_max,
                "symmetry_residual_max": sym_max,
            });
            let mut text = serde_json::to_string_pretty(&body)?;
            text.push('\n');
            let m = run_manifest("koenigs-check", json!({ "a": a, "b": b }), cfg);
            deliver(&text, out.as_deref(), m)
        }
        Command::TipExponent { ty, samples, out } => {
            let ty = parse_type(&ty)?;
            let est = tip_exponent_estimate(ty, samples, cfg)?;
            // stability diagnostic: double the sample density over the decade
            let dense = tip_exponent_estimate(ty, samples * 2, cfg)?;
            let body = json!({
                "type": ty.to_string(),
                "b_tip": est.b_tip,
                "exponent": est.exponent,
                "residual": est.residual,
                "points": est.points,
                "exponent_at_double_density": dense.exponent,
                "density_delta": (dense.exponent - est.exponent).abs(),
            });
            let mut text = serde_json::to_string_pretty(&body)?;
            text.push('\n');
            let m = run_manifest(
                "tip-exponent",
                json!({ "type": ty.to_string(), "samples": samples }),
                cfg,
            );
            deliver(&text, out.as_deref(), m)
        }
    }
}
