//! `mapscale`: exact finite-size laws for block-weighted planar maps at
//! their dual critical point, their universal scaling limits, and the dual
//! Liouville identities, emitted as deterministic CSV/JSON.

mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mapscale_core::laws::{self, RatioMode};
use mapscale_core::models::ModelName;
use mapscale_core::multifractal::{spectrum_curve, SpectrumKind};
use mapscale_core::scaling::{
    density_sigma, density_tau, density_wp, wright_s_airy, wright_s_integral, wright_s_series,
    ScalingParams,
};
use mapscale_core::{distance, dualmeasure};
use output::{Format, Out};

#[derive(Parser)]
#[command(
    name = "mapscale",
    version,
    about = "Block-weighted planar maps at the dual critical point: exact laws, scaling limits, dual-measure checks",
    after_help = "MAPSCALE_THREADS caps the worker threads used by mc-dual sampling."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for tabular commands
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Decimal digits for float rendering
    #[arg(long, global = true, default_value_t = 15)]
    precision: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Quad,
    Ddsw,
    Bicubic,
}

impl ModelArg {
    fn name(self) -> ModelName {
        match self {
            ModelArg::Quad => ModelName::QuadSimpleBlocks,
            ModelArg::Ddsw => ModelName::DdswQuartic,
            ModelArg::Bicubic => ModelName::BicubicThreeConnected,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SMethod {
    Series,
    Integral,
    Airy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DensityArg {
    Tau,
    Sigma,
    Wp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Rho0,
    Rhoblock,
    Conv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SpectraArg {
    Lq,
    Dim,
    QballLq,
    QballDim,
}

#[derive(Subcommand)]
enum Command {
    /// Exact critical constants of a model (t_cr, B, B', K_B, u_cr, g_cr, C, D)
    Constants {
        #[arg(value_enum)]
        model: ModelArg,
        /// Significant digits of the decimal renderings
        #[arg(long, default_value_t = 30)]
        digits: usize,
        /// Shorthand for --format json
        #[arg(long)]
        json: bool,
    },
    /// Root-block-size law Pr(X_n = k) at fixed total size n
    LawX {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        n: usize,
        /// Add rescaled columns x = k n^{-2/3}, n Pr
        #[arg(long)]
        rescale: bool,
    },
    /// Doubly-rooted root-block-size law Pr(X2_n = k)
    LawX2 {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        n: usize,
        /// Add rescaled columns x = k n^{-2/3}, n^{2/3} Pr
        #[arg(long)]
        rescale: bool,
    },
    /// Total-size law Pr(Y_k = n) at fixed root block size k
    LawY {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        k: usize,
        /// Largest total size tabulated (default 400)
        #[arg(long, default_value_t = 400)]
        nmax: usize,
        /// Add rescaled columns y = n k^{-3/2}, k^{3/2} Pr
        #[arg(long)]
        rescale: bool,
    },
    /// E[e^{-lambda Y_k}] (optionally with lambda scaled by k^{-3/2})
    Laplace {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 3.0)]
        lmax: f64,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        #[arg(long)]
        scaled: bool,
    },
    /// Partition ratio R^(p)(n,k): closed form vs exact coefficients
    Ratio {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// The scaling kernel S_{1/alpha}(x) by one evaluation method
    ScalingFn {
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, value_enum)]
        method: SMethod,
        #[arg(long, default_value_t = 0.0)]
        xmin: f64,
        #[arg(long, default_value_t = 4.0)]
        xmax: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Limit densities tau, sigma or wp at a model's (alpha, D)
    Density {
        #[arg(value_enum)]
        which: DensityArg,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, default_value_t = 0.02)]
        xmin: f64,
        #[arg(long, default_value_t = 4.0)]
        xmax: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Distance profiles rho0 / rho_block / their convolution identity
    DistanceProfile {
        #[arg(long, value_enum)]
        which: ProfileArg,
        #[arg(long, default_value_t = 0.05)]
        rmin: f64,
        #[arg(long, default_value_t = 4.0)]
        rmax: f64,
        #[arg(long, default_value_t = 120)]
        steps: usize,
    },
    /// Multifractal spectra (almost-sure closed forms)
    Spectra {
        #[arg(long)]
        gamma: f64,
        #[arg(long, value_enum)]
        which: SpectraArg,
        /// Use the dual parameter 4/gamma instead of gamma
        #[arg(long)]
        dual: bool,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Monte Carlo dual-measure report (Laplace identity, moments, KS test)
    McDual {
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long = "D", default_value_t = 1.8898815748423097)]
        d_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        area: f64,
        /// Comma-separated u values for the Laplace check
        #[arg(long, default_value = "0.5,1,2")]
        u_grid: String,
        /// Comma-separated moment orders (each must be < 1/alpha)
        #[arg(long, default_value = "-0.5,0.2,0.4")]
        q_grid: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Reproduce the data behind one of the registered figures
    Reproduce {
        /// Figure id; run `reproduce list` to enumerate
        figure: String,
        /// Output directory (one subdirectory per figure)
        #[arg(long, default_value = "reproduce-out")]
        outdir: PathBuf,
        /// Override the fixed-size list (comma-separated n values)
        #[arg(long)]
        n: Option<String>,
        /// Override the block-size list (comma-separated k values)
        #[arg(long)]
        k_list: Option<String>,
    },
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl ToString) -> CliError {
        CliError { kind, message: message.to_string() }
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::new("computation", e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // usage errors exit 2 via clap
    let format = if matches!(
        cli.command,
        Command::Constants { json: true, .. } | Command::McDual { .. }
    ) {
        Format::Json
    } else {
        cli.format
    };
    let out = Out::new(format, cli.output.clone(), cli.precision);
    match run(cli.command, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = serde_json::json!({"error": {"kind": e.kind, "message": e.message}});
            eprintln!("{doc}");
            ExitCode::from(1)
        }
    }
}

fn threads_from_env() -> usize {
    match std::env::var("MAPSCALE_THREADS") {
        Ok(v) => v.parse::<usize>().unwrap_or(1).max(1),
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::new("computation", format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn run(cmd: Command, mut out: Out) -> Result<(), CliError> {
    match cmd {
        Command::Constants { model, digits, json } => {
            let cc = model.name().critical_constants();
            out.push_meta("model", model.name().id());
            let entries: Vec<(&str, String, String)> = vec![
                ("alpha", format!("{}", cc.alpha), out.float(1.5)),
                ("t_cr", cc.t_cr.to_string(), decimal_rat(&cc.t_cr, digits)),
                ("B_at_tcr", cc.b_at_tcr.to_string(), decimal_rat(&cc.b_at_tcr, digits)),
                ("Bprime_at_tcr", cc.bprime_at_tcr.to_string(), decimal_rat(&cc.bprime_at_tcr, digits)),
                ("K_B", cc.k_b.to_symbolic_string(), cc.k_b.to_decimal(digits)),
                ("u_cr", cc.u_cr.to_string(), decimal_rat(&cc.u_cr, digits)),
                ("g_cr", cc.g_cr.to_string(), decimal_rat(&cc.g_cr, digits)),
                ("C", cc.c_const.to_symbolic_string(), cc.c_const.to_decimal(digits)),
                ("D", cc.d_const.to_symbolic_string(), cc.d_const.to_decimal(digits)),
                ("M_at_g_cr", cc.m_at_g_cr.to_string(), decimal_rat(&cc.m_at_g_cr, digits)),
            ];
            if json || out.format == Format::Json {
                let mut map = serde_json::Map::new();
                for (k, exact, dec) in entries {
                    map.insert(
                        k.to_string(),
                        serde_json::json!({"exact": exact, "decimal": dec}),
                    );
                }
                out.json(&serde_json::Value::Object(map))?;
            } else {
                let rows: Vec<Vec<String>> = entries
                    .into_iter()
                    .map(|(k, e, d)| vec![k.to_string(), e, d])
                    .collect();
                out.table(&["constant", "exact", "decimal"], &rows)?;
            }
            Ok(())
        }
        Command::LawX { model, n, rescale } => {
            let model = model.name();
            let data = laws::model_data(model, n);
            let table = laws::law_x_table(&data, n)?;
            out.push_meta("model", model.id());
            out.push_meta("n", n);
            emit_x_table(&out, &table, n, rescale, 1.0)
        }
        Command::LawX2 { model, n, rescale } => {
            let model = model.name();
            let data = laws::model_data(model, n);
            let table = laws::law_x2_table(&data, n)?;
            out.push_meta("model", model.id());
            out.push_meta("n", n);
            emit_x_table(&out, &table, n, rescale, 2.0 / 3.0)
        }
        Command::LawY { model, k, nmax, rescale } => {
            let model = model.name();
            let table = laws::law_y_table_direct(model, k, nmax)?;
            out.push_meta("model", model.id());
            out.push_meta("k", k);
            out.push_meta("nmax", nmax);
            out.push_meta("tail_bound", out.float(table.tail_bound.unwrap_or(0.0)));
            let ka = (k as f64).powf(1.5);
            let mut rows = Vec::new();
            for (n, exact, f) in &table.entries {
                let mut row = vec![n.to_string(), exact.to_exact_string(), out.float(*f)];
                if rescale {
                    row.push(out.float(*n as f64 / ka));
                    row.push(out.float(ka * f));
                }
                rows.push(row);
            }
            let header: &[&str] = if rescale {
                &["n", "prob_exact", "prob", "y", "scaled_prob"]
            } else {
                &["n", "prob_exact", "prob"]
            };
            out.table(header, &rows)?;
            Ok(())
        }
        Command::Laplace { model, k, lmax, steps, scaled } => {
            let model = model.name();
            let cc = model.critical_constants();
            let d = cc.d_f64();
            out.push_meta("model", model.id());
            out.push_meta("k", k);
            out.push_meta("scaled", scaled);
            let mut rows = Vec::new();
            for i in 0..=steps {
                let lambda = lmax * i as f64 / steps as f64;
                let v = laws::laplace_y(model, k, lambda, scaled)?;
                let limit = if scaled {
                    (-d * lambda.powf(2.0 / 3.0)).exp()
                } else {
                    (-d * lambda.powf(2.0 / 3.0) * k as f64).exp()
                };
                rows.push(vec![out.float(lambda), out.float(v), out.float(limit)]);
            }
            out.table(&["lambda", "expectation", "limit"], &rows)?;
            Ok(())
        }
        Command::Ratio { model, p, n, k } => {
            let model = model.name();
            let data = laws::model_data(model, n);
            let formula = laws::ratio_rp(&data, p, n, k, RatioMode::Formula)?;
            let coeffs = laws::ratio_rp(&data, p, n, k, RatioMode::Coefficients)?;
            out.push_meta("model", model.id());
            let rows = vec![vec![
                p.to_string(),
                n.to_string(),
                k.to_string(),
                out.float(formula),
                out.float(coeffs),
                out.float(coeffs / formula),
            ]];
            out.table(&["p", "n", "k", "formula", "coefficients", "coeff_over_formula"], &rows)?;
            Ok(())
        }
        Command::ScalingFn { alpha, method, xmin, xmax, steps } => {
            out.push_meta("alpha", alpha);
            out.push_meta("method", format!("{method:?}").to_lowercase());
            let mut rows = Vec::new();
            for i in 0..=steps {
                let x = xmin + (xmax - xmin) * i as f64 / steps as f64;
                let v = match method {
                    SMethod::Series => wright_s_series(alpha, x, 1e-16)?,
                    SMethod::Integral => wright_s_integral(alpha, x, 1e-12)?,
                    SMethod::Airy => {
                        if (alpha - 1.5).abs() > 1e-12 {
                            return Err(CliError::new(
                                "computation",
                                "the airy closed form applies at alpha = 3/2 only",
                            ));
                        }
                        wright_s_airy(x)
                    }
                };
                rows.push(vec![out.float(x), out.float(v)]);
            }
            out.table(&["x", "s"], &rows)?;
            Ok(())
        }
        Command::Density { which, model, xmin, xmax, steps } => {
            let cc = model.name().critical_constants();
            let params = cc.scaling_params();
            out.push_meta("model", model.name().id());
            out.push_meta("alpha", out.float(params.alpha));
            out.push_meta("D", out.float(params.d_scale));
            let mut rows = Vec::new();
            for i in 0..=steps {
                let x = xmin + (xmax - xmin) * i as f64 / steps as f64;
                if x <= 0.0 {
                    continue;
                }
                let v = match which {
                    DensityArg::Tau => density_tau(params, x)?,
                    DensityArg::Sigma => density_sigma(params, x)?,
                    DensityArg::Wp => density_wp(params, x)?,
                };
                rows.push(vec![out.float(x), out.float(v)]);
            }
            out.table(&["x", "density"], &rows)?;
            Ok(())
        }
        Command::DistanceProfile { which, rmin, rmax, steps } => {
            out.push_meta("which", format!("{which:?}").to_lowercase());
            let cache = match which {
                ProfileArg::Conv => Some(distance::Rho0Cache::build(600, 1e-9)?),
                _ => None,
            };
            let mut rows = Vec::new();
            for i in 0..=steps {
                let r = rmin + (rmax - rmin) * i as f64 / steps as f64;
                if r < 1e-3 {
                    continue;
                }
                let v = match which {
                    ProfileArg::Rho0 => distance::rho0(r, 1e-10)?,
                    ProfileArg::Rhoblock => distance::rho_block_closed(r, 1e-10)?,
                    ProfileArg::Conv => distance::rho_block_conv(cache.as_ref().unwrap(), r, 1e-8)?,
                };
                rows.push(vec![out.float(r), out.float(v)]);
            }
            out.table(&["r", "density"], &rows)?;
            Ok(())
        }
        Command::Spectra { gamma, which, dual, steps } => {
            let g = if dual { 4.0 / gamma } else { gamma };
            if g <= 0.0 || (g - 2.0).abs() < 1e-12 {
                return Err(CliError::new("computation", "gamma must be positive and != 2"));
            }
            let kind = match which {
                SpectraArg::Lq => SpectrumKind::LqAlmostSure,
                SpectraArg::Dim => SpectrumKind::DimAlmostSure,
                SpectraArg::QballLq => SpectrumKind::QuantumBallLq,
                SpectraArg::QballDim => SpectrumKind::QuantumBallDim,
            };
            let curve = spectrum_curve(kind, g, steps);
            out.push_meta("gamma", out.float(g));
            out.push_meta(
                "piece_boundaries",
                curve
                    .piece_boundaries
                    .iter()
                    .map(|b| out.float(*b))
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            let rows: Vec<Vec<String>> = curve
                .samples
                .iter()
                .map(|(x, v)| vec![out.float(*x), out.float(*v)])
                .collect();
            out.table(&["abscissa", "value"], &rows)?;
            Ok(())
        }
        Command::McDual { alpha, d_scale, area, u_grid, q_grid, samples, seed } => {
            if !(1.0 < alpha && alpha < 2.0) {
                return Err(CliError::new("computation", "alpha must lie in (1,2)"));
            }
            let us = parse_f64_list(&u_grid)?;
            let qs = parse_f64_list(&q_grid)?;
            let threads = threads_from_env();
            out.push_meta("seed", seed);
            out.push_meta("samples", samples);
            out.push_meta("threads", threads);
            // one shared stream for the Laplace grid, fresh derived seeds for
            // each moment order and for the KS sample
            let stream = dualmeasure::dual_mass_samples_threaded(
                area, d_scale, alpha, samples, seed, threads,
            );
            let mut laplace = Vec::new();
            for &u in &us {
                let vals: Vec<f64> = stream.iter().map(|s| (-u * s).exp()).collect();
                let (estimate, se) = dualmeasure::batch_mean_se(&vals);
                let target = (-d_scale * u.powf(1.0 / alpha) * area).exp();
                laplace.push(serde_json::json!({
                    "u": u, "estimate": estimate, "target": target,
                    "std_error": se, "z_score": (estimate - target) / se,
                }));
            }
            let mut moments = Vec::new();
            for (i, &q) in qs.iter().enumerate() {
                let rep = dualmeasure::verify_dual_moments(
                    q,
                    area,
                    d_scale,
                    alpha,
                    samples,
                    seed.wrapping_add(1 + i as u64),
                )?;
                moments.push(serde_json::to_value(&rep).unwrap());
            }
            // KS of the normalized masses against the wp law
            let params = ScalingParams::new(alpha, d_scale)?;
            let mut ks_samples = dualmeasure::dual_mass_samples_threaded(
                1.0,
                d_scale,
                alpha,
                samples.min(10_000),
                seed.wrapping_add(101),
                threads,
            );
            ks_samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let cdf = dualmeasure::wp_cdf_at_sorted(params, &ks_samples)?;
            let ks_d = dualmeasure::ks_statistic_sorted(&cdf);
            let ks_p = dualmeasure::ks_pvalue(ks_samples.len(), ks_d);
            out.json(&serde_json::json!({
                "alpha": alpha, "D": d_scale, "area": area,
                "laplace": laplace,
                "moments": moments,
                "ks": {"d": ks_d, "p": ks_p, "samples": ks_samples.len()},
            }))?;
            Ok(())
        }
        Command::Reproduce { figure, outdir, n, k_list } => {
            let n_list = n.map(|s| parse_usize_list(&s)).transpose()?;
            let k_list = k_list.map(|s| parse_usize_list(&s)).transpose()?;
            reproduce::run(&figure, &outdir, n_list, k_list, &out)
        }
    }
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| CliError::new("computation", format!("bad integer {t:?}: {e}")))
        })
        .collect()
}

fn decimal_rat(q: &mapscale_core::field::BigRational, digits: usize) -> String {
    mapscale_core::field::Radical::from_rational(q).to_decimal(digits)
}

fn emit_x_table(
    out: &Out,
    table: &laws::DistributionTable,
    n: usize,
    rescale: bool,
    scale_exp: f64,
) -> Result<(), CliError> {
    let n_pow = (n as f64).powf(2.0 / 3.0);
    let scale = (n as f64).powf(scale_exp);
    let mut rows = Vec::new();
    for (k, exact, f) in &table.entries {
        let mut row = vec![k.to_string(), exact.to_exact_string(), out.float(*f)];
        if rescale {
            row.push(out.float(*k as f64 / n_pow));
            row.push(out.float(scale * f));
        }
        rows.push(row);
    }
    let header: &[&str] = if rescale {
        &["k", "prob_exact", "prob", "x", "scaled_prob"]
    } else {
        &["k", "prob_exact", "prob"]
    };
    out.table(header, &rows)?;
    Ok(())
}
