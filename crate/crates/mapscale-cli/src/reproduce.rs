//! Reproduction harness: each figure id regenerates the plotted-quantity
//! tables plus the overlay limit curve, and writes a manifest recording the
//! parameters and the achieved collapse deviations.

use std::fs;
use std::path::{Path, PathBuf};

use mapscale_core::laws;
use mapscale_core::models::ModelName;
use mapscale_core::multifractal::{spectrum_curve, SpectrumKind};
use mapscale_core::scaling::{density_sigma, density_tau, density_wp};
use mapscale_core::distance;

use crate::output::{format_float, Out};
use crate::CliError;

const SQRT_8_3: f64 = 1.632993161855452;
const SQRT_6: f64 = 2.449489742783178;

pub const FIGURES: [(&str, &str); 10] = [
    ("fig-proba1x", "root-block law collapse, quadrangulations, n = 30,50,100,200"),
    ("fig-proba2x", "doubly-rooted block law vs sigma, quadrangulations"),
    ("fig-probay", "total-size law vs wp, quadrangulations, k = 5,10,25,40"),
    ("fig-expoflambda", "Laplace transforms vs the stretched-exponential limit"),
    ("fig-profils", "distance profiles rho0 and rho_block"),
    ("fig-tauofq", "almost-sure L^q and dimension spectra, gamma = sqrt(8/3)"),
    ("fig-tauofqdual", "dual almost-sure spectra, gamma' = sqrt(6)"),
    ("fig-ftildeofbeta", "quantum-ball dimension spectra, both branches"),
    ("fig-tautildeofq", "quantum-ball L^q spectra, both branches"),
    ("fig-probabicubic", "bicubic collapses vs sigma and wp, n <= 400"),
];

struct FigWriter {
    dir: PathBuf,
    precision: usize,
    files: Vec<String>,
}

impl FigWriter {
    fn new(outdir: &Path, id: &str, precision: usize) -> Result<FigWriter, CliError> {
        let dir = outdir.join(id);
        fs::create_dir_all(&dir).map_err(|e| CliError::new("io", e.to_string()))?;
        Ok(FigWriter { dir, precision, files: Vec::new() })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut body = String::new();
        body.push_str(&format!("# mapscale {}\n", env!("CARGO_PKG_VERSION")));
        body.push_str(&header.join(","));
        body.push('\n');
        for row in rows {
            body.push_str(&row.join(","));
            body.push('\n');
        }
        fs::write(&path, body).map_err(|e| CliError::new("io", e.to_string()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn f(&self, v: f64) -> String {
        format_float(v, self.precision)
    }

    fn manifest(&mut self, figure: &str, body: serde_json::Value) -> Result<(), CliError> {
        let mut doc = serde_json::json!({
            "figure": figure,
            "tool": format!("mapscale {}", env!("CARGO_PKG_VERSION")),
            "files": self.files,
        });
        if let (serde_json::Value::Object(d), serde_json::Value::Object(b)) = (&mut doc, body) {
            for (k, v) in b {
                d.insert(k, v);
            }
        }
        fs::write(
            self.dir.join("manifest.json"),
            serde_json::to_string_pretty(&doc).unwrap(),
        )
        .map_err(|e| CliError::new("io", e.to_string()))?;
        println!("{}", self.dir.display());
        Ok(())
    }
}

pub fn run(
    figure: &str,
    outdir: &Path,
    n_list: Option<Vec<usize>>,
    k_list: Option<Vec<usize>>,
    out: &Out,
) -> Result<(), CliError> {
    match figure {
        "list" => {
            for (id, desc) in FIGURES {
                println!("{id}: {desc}");
            }
            Ok(())
        }
        "fig-proba1x" => proba_x_figure(figure, outdir, out.precision, n_list, false),
        "fig-proba2x" => proba_x_figure(figure, outdir, out.precision, n_list, true),
        "fig-probay" => {
            proba_y_figure(figure, outdir, out.precision, ModelName::QuadSimpleBlocks,
                k_list.unwrap_or_else(|| vec![5, 10, 25, 40]), 200, (0.5, 0.75))
        }
        "fig-expoflambda" => expoflambda_figure(figure, outdir, out.precision, k_list),
        "fig-profils" => profils_figure(figure, outdir, out.precision),
        "fig-tauofq" => spectra_figure(figure, outdir, out.precision, SQRT_8_3),
        "fig-tauofqdual" | "fig-spectra-dual" => spectra_figure("fig-tauofqdual", outdir, out.precision, SQRT_6),
        "fig-ftildeofbeta" => {
            qball_figure(figure, outdir, out.precision, SpectrumKind::QuantumBallDim)
        }
        "fig-tautildeofq" => {
            qball_figure(figure, outdir, out.precision, SpectrumKind::QuantumBallLq)
        }
        "fig-probabicubic" => probabicubic_figure(figure, outdir, out.precision, n_list, k_list),
        other => Err(CliError::new(
            "usage",
            format!("unknown figure id {other:?}; try `mapscale reproduce list`"),
        )),
    }
}

/// The two root-block-law collapses for quadrangulations: rescaled exact
/// laws per n, the limit density curve, and windowed sup deviations.
fn proba_x_figure(
    id: &str,
    outdir: &Path,
    precision: usize,
    n_list: Option<Vec<usize>>,
    doubly: bool,
) -> Result<(), CliError> {
    let model = ModelName::QuadSimpleBlocks;
    let ns = n_list.unwrap_or_else(|| vec![30, 50, 100, 200]);
    let mut w = FigWriter::new(outdir, id, precision)?;
    let params = model.critical_constants().scaling_params();
    let limit = |x: f64| -> f64 {
        if doubly {
            density_sigma(params, x).unwrap_or(f64::NAN)
        } else {
            density_tau(params, x).unwrap_or(f64::NAN)
        }
    };
    let window = if doubly { (0.25, 3.0) } else { (0.5, 3.0) };
    let mut deviations = serde_json::Map::new();
    for &n in &ns {
        let data = laws::model_data(model, n);
        let table = if doubly {
            laws::law_x2_table(&data, n)?
        } else {
            laws::law_x_table(&data, n)?
        };
        let n_pow = (n as f64).powf(2.0 / 3.0);
        let scale = if doubly { n_pow } else { n as f64 };
        let mut rows = Vec::new();
        let mut sup: f64 = 0.0;
        for (k, exact, f) in &table.entries {
            let x = *k as f64 / n_pow;
            let lim = if x > 0.0 { limit(x) } else { f64::NAN };
            rows.push(vec![
                k.to_string(),
                exact.to_exact_string(),
                w.f(*f),
                w.f(x),
                w.f(scale * f),
                w.f(lim),
            ]);
            if x >= window.0 && x <= window.1 {
                sup = sup.max((scale * f - lim).abs());
            }
        }
        let which = if doubly { "law_x2" } else { "law_x" };
        w.csv(
            &format!("{which}_n{n}.csv"),
            &["k", "prob_exact", "prob", "x", "scaled_prob", "limit_density"],
            &rows,
        )?;
        deviations.insert(format!("n{n}"), serde_json::json!(sup));
    }
    // the overlay curve on its own grid
    let rows: Vec<Vec<String>> = (1..=300)
        .map(|i| {
            let x = 3.2 * i as f64 / 300.0;
            vec![w.f(x), w.f(limit(x))]
        })
        .collect();
    w.csv("limit_density.csv", &["x", "density"], &rows)?;
    w.manifest(
        id,
        serde_json::json!({
            "model": model.id(),
            "n_values": ns,
            "window": [window.0, window.1],
            "windowed_sup_deviation": deviations,
        }),
    )
}

fn proba_y_figure(
    id: &str,
    outdir: &Path,
    precision: usize,
    model: ModelName,
    ks: Vec<usize>,
    nmax: usize,
    window: (f64, f64),
) -> Result<(), CliError> {
    let mut w = FigWriter::new(outdir, id, precision)?;
    let params = model.critical_constants().scaling_params();
    let mut deviations = serde_json::Map::new();
    for &k in &ks {
        let table = laws::law_y_table_direct(model, k, nmax)?;
        let ka = (k as f64).powf(1.5);
        let mut rows = Vec::new();
        let mut sup: f64 = 0.0;
        for (n, exact, f) in &table.entries {
            let y = *n as f64 / ka;
            let lim = density_wp(params, y).unwrap_or(f64::NAN);
            rows.push(vec![
                n.to_string(),
                exact.to_exact_string(),
                w.f(*f),
                w.f(y),
                w.f(ka * f),
                w.f(lim),
            ]);
            if y >= window.0 && y <= window.1 {
                sup = sup.max((ka * f - lim).abs());
            }
        }
        w.csv(
            &format!("law_y_k{k}.csv"),
            &["n", "prob_exact", "prob", "y", "scaled_prob", "limit_density"],
            &rows,
        )?;
        deviations.insert(format!("k{k}"), serde_json::json!(sup));
    }
    let rows: Vec<Vec<String>> = (1..=300)
        .map(|i| {
            let y = 4.0 * i as f64 / 300.0;
            vec![w.f(y), w.f(density_wp(params, y).unwrap_or(f64::NAN))]
        })
        .collect();
    w.csv("limit_density.csv", &["y", "density"], &rows)?;
    w.manifest(
        id,
        serde_json::json!({
            "model": model.id(),
            "k_values": ks,
            "nmax": nmax,
            "window": [window.0, window.1],
            "windowed_sup_deviation": deviations,
        }),
    )
}

fn expoflambda_figure(
    id: &str,
    outdir: &Path,
    precision: usize,
    k_list: Option<Vec<usize>>,
) -> Result<(), CliError> {
    let model = ModelName::QuadSimpleBlocks;
    let ks = k_list.unwrap_or_else(|| vec![5, 10, 25, 40]);
    let d = model.critical_constants().d_f64();
    let mut w = FigWriter::new(outdir, id, precision)?;
    let mut sups = serde_json::Map::new();
    for &k in &ks {
        for scaled in [false, true] {
            let mut rows = Vec::new();
            let mut sup: f64 = 0.0;
            for i in 0..=60 {
                let lambda = 3.0 * i as f64 / 60.0;
                let v = laws::laplace_y(model, k, lambda, scaled)?;
                let limit = if scaled {
                    (-d * lambda.powf(2.0 / 3.0)).exp()
                } else {
                    (-d * lambda.powf(2.0 / 3.0) * k as f64).exp()
                };
                if scaled {
                    sup = sup.max((v - limit).abs());
                }
                rows.push(vec![w.f(lambda), w.f(v), w.f(limit)]);
            }
            let tag = if scaled { "scaled" } else { "unscaled" };
            w.csv(
                &format!("laplace_{tag}_k{k}.csv"),
                &["lambda", "expectation", "limit"],
                &rows,
            )?;
            if scaled {
                sups.insert(format!("k{k}"), serde_json::json!(sup));
            }
        }
    }
    w.manifest(
        id,
        serde_json::json!({
            "model": model.id(),
            "k_values": ks,
            "scaled_sup_deviation": sups,
        }),
    )
}

fn profils_figure(id: &str, outdir: &Path, precision: usize) -> Result<(), CliError> {
    let mut w = FigWriter::new(outdir, id, precision)?;
    for (name, f) in [
        ("rho0.csv", &distance::rho0 as &dyn Fn(f64, f64) -> distance::Result<f64>),
        ("rhoblock.csv", &distance::rho_block_closed),
    ] {
        let rows: Vec<Vec<String>> = (1..=200)
            .map(|i| {
                let r = 4.0 * i as f64 / 200.0;
                let v = f(r, 1e-9).unwrap_or(f64::NAN);
                vec![w.f(r), w.f(v)]
            })
            .collect();
        w.csv(name, &["r", "density"], &rows)?;
    }
    w.manifest(id, serde_json::json!({"model": "quad"}))
}

fn spectra_figure(id: &str, outdir: &Path, precision: usize, gamma: f64) -> Result<(), CliError> {
    let mut w = FigWriter::new(outdir, id, precision)?;
    for (name, kind) in [
        ("tau.csv", SpectrumKind::LqAlmostSure),
        ("f.csv", SpectrumKind::DimAlmostSure),
    ] {
        let curve = spectrum_curve(kind, gamma, 400);
        let rows: Vec<Vec<String>> = curve
            .samples
            .iter()
            .map(|(x, v)| vec![w.f(*x), w.f(*v)])
            .collect();
        w.csv(name, &["abscissa", "value"], &rows)?;
    }
    w.manifest(id, serde_json::json!({"gamma": gamma}))
}

fn qball_figure(
    id: &str,
    outdir: &Path,
    precision: usize,
    kind: SpectrumKind,
) -> Result<(), CliError> {
    let mut w = FigWriter::new(outdir, id, precision)?;
    for (name, gamma) in [("direct.csv", SQRT_8_3), ("dual.csv", SQRT_6)] {
        let curve = spectrum_curve(kind, gamma, 400);
        let rows: Vec<Vec<String>> = curve
            .samples
            .iter()
            .map(|(x, v)| vec![w.f(*x), w.f(*v)])
            .collect();
        w.csv(name, &["abscissa", "value"], &rows)?;
    }
    w.manifest(id, serde_json::json!({"gamma": SQRT_8_3, "gamma_prime": SQRT_6}))
}

fn probabicubic_figure(
    id: &str,
    outdir: &Path,
    precision: usize,
    n_list: Option<Vec<usize>>,
    k_list: Option<Vec<usize>>,
) -> Result<(), CliError> {
    let model = ModelName::BicubicThreeConnected;
    let ns = n_list.unwrap_or_else(|| vec![100, 200, 300, 400]);
    let ks = k_list.unwrap_or_else(|| vec![20, 40, 65, 80]);
    let nmax = *ns.iter().max().unwrap_or(&400);
    let mut w = FigWriter::new(outdir, id, precision)?;
    let params = model.critical_constants().scaling_params();
    // left panel: doubly-rooted collapse (needs the full power table)
    let mut dev_x2 = serde_json::Map::new();
    for &n in &ns {
        let data = laws::model_data(model, n);
        let table = laws::law_x2_table(&data, n)?;
        let n_pow = (n as f64).powf(2.0 / 3.0);
        let mut rows = Vec::new();
        let mut sup: f64 = 0.0;
        for (k, exact, f) in &table.entries {
            let x = *k as f64 / n_pow;
            let lim = density_sigma(params, x).unwrap_or(f64::NAN);
            rows.push(vec![
                k.to_string(),
                exact.to_exact_string(),
                w.f(*f),
                w.f(x),
                w.f(n_pow * f),
                w.f(lim),
            ]);
            if (0.25..=3.0).contains(&x) {
                sup = sup.max((n_pow * f - lim).abs());
            }
        }
        w.csv(
            &format!("law_x2_n{n}.csv"),
            &["k", "prob_exact", "prob", "x", "scaled_prob", "limit_density"],
            &rows,
        )?;
        dev_x2.insert(format!("n{n}"), serde_json::json!(sup));
    }
    // right panel: total-size collapse at fixed k
    let mut dev_y = serde_json::Map::new();
    for &k in &ks {
        let table = laws::law_y_table_direct(model, k, nmax)?;
        let ka = (k as f64).powf(1.5);
        let mut rows = Vec::new();
        let mut sup: f64 = 0.0;
        for (n, exact, f) in &table.entries {
            let y = *n as f64 / ka;
            let lim = density_wp(params, y).unwrap_or(f64::NAN);
            rows.push(vec![
                n.to_string(),
                exact.to_exact_string(),
                w.f(*f),
                w.f(y),
                w.f(ka * f),
                w.f(lim),
            ]);
            if (0.3..=0.55).contains(&y) {
                sup = sup.max((ka * f - lim).abs());
            }
        }
        w.csv(
            &format!("law_y_k{k}.csv"),
            &["n", "prob_exact", "prob", "y", "scaled_prob", "limit_density"],
            &rows,
        )?;
        dev_y.insert(format!("k{k}"), serde_json::json!(sup));
    }
    let rows: Vec<Vec<String>> = (1..=300)
        .map(|i| {
            let x = 3.2 * i as f64 / 300.0;
            vec![
                w.f(x),
                w.f(density_sigma(params, x).unwrap_or(f64::NAN)),
                w.f(density_wp(params, x).unwrap_or(f64::NAN)),
            ]
        })
        .collect();
    w.csv("limit_densities.csv", &["x", "sigma", "wp"], &rows)?;
    w.manifest(
        id,
        serde_json::json!({
            "model": model.id(),
            "n_values": ns,
            "k_values": ks,
            "x2_windowed_sup_deviation": dev_x2,
            "y_windowed_sup_deviation": dev_y,
        }),
    )
}
