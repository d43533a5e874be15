use std::path::{Path, PathBuf};

use serde::Serialize;
use sfbm::field::{draw_coefficients, write_realization_csv, ModalBasis};
use sfbm::io::{fmt_f64, unix_timestamp, write_atomic, write_json};
use sfbm::numerics::RandomStream;
use sfbm::slnd::{estimate_k2, write_k2_csv, write_k2_json};
use sfbm::spectrum::{build_spectrum_with, cache_file_name, load_or_build, load_spectrum, save_spectrum};
use sfbm::sphere::{fibonacci_grid, read_points_csv, SpherePoint};
use sfbm::verify::{self, Suite, VerifyOptions};
use sfbm::{Error, Execution, HurstIndex, PowerSpectrum, Result, SpectrumMethod};

use crate::{Cli, Command, SimulateArgs, SlndArgs, SpectrumArgs, VerifyArgs};

pub enum Outcome {
    Success,
    /// The run completed but an assertable check did not hold.
    ChecksFailed,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: &'static str,
    parameters: serde_json::Value,
    seed: Option<u64>,
    artifacts: Vec<PathBuf>,
    tool_version: &'static str,
    timestamp: u64,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    hurst: Option<f64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    lmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_samples: Option<usize>,
}

impl RunManifest {
    fn new(command: &'static str, parameters: &impl Serialize, seed: Option<u64>) -> Self {
        RunManifest {
            command,
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            seed,
            artifacts: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: unix_timestamp(),
            hurst: None,
            lmax: None,
            spectrum_file: None,
            n_samples: None,
        }
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("manifest_{}.json", self.command));
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Spectrum(a) => spectrum(&cli.out_dir, exec, a),
        Command::Verify(a) => verify(&cli.out_dir, exec, a),
        Command::Simulate(a) => simulate(&cli.out_dir, exec, a),
        Command::Slnd(a) => slnd(&cli.out_dir, exec, a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn spectrum_csv(s: &PowerSpectrum) -> String {
    let exponent = 2.0 * s.hurst().value() + 2.0;
    let mut out = String::from("ell,d_ell,abs_d_ell,ell_scaled\n");
    for (l, &v) in s.values().iter().enumerate() {
        let scaled = v.abs() * (l as f64).powf(exponent);
        out.push_str(&format!("{l},{},{},{}\n", fmt_f64(v), fmt_f64(v.abs()), fmt_f64(scaled)));
    }
    out
}

fn spectrum(out_dir: &Path, exec: Execution, a: SpectrumArgs) -> Result<Outcome> {
    let hurst = HurstIndex::new(a.hurst)?;
    let method = SpectrumMethod::from(a.method);
    if !(a.tol > 0.0) {
        return Err(Error::Usage(format!("--tol must be positive, got {}", a.tol)));
    }
    let json = match &a.out {
        Some(p) => p.clone(),
        None => out_dir.join(cache_file_name(hurst, a.lmax, a.tol, method)),
    };
    let dir = json.parent().map(Path::to_path_buf).unwrap_or_default();
    if !dir.as_os_str().is_empty() {
        create_dir(&dir)?;
    }
    let s = build_spectrum_with(exec, method, hurst, a.lmax, a.tol)?;
    save_spectrum(&json, &s)?;
    let csv = json.with_extension("csv");
    write_atomic(&csv, spectrum_csv(&s).as_bytes())?;

    let mut params = serde_json::to_value(&a).unwrap_or_default();
    params["method"] = serde_json::json!(method.as_str());
    let mut m = RunManifest::new("spectrum", &params, None);
    m.hurst = Some(hurst.value());
    m.lmax = Some(a.lmax);
    m.artifacts = vec![json.clone(), csv.clone()];
    let manifest = m.write(if dir.as_os_str().is_empty() { Path::new(".") } else { &dir })?;
    println!("wrote {}, {} and {}", json.display(), csv.display(), manifest.display());
    Ok(Outcome::Success)
}

fn verify(out_dir: &Path, exec: Execution, a: VerifyArgs) -> Result<Outcome> {
    let suite: Suite = a.suite.parse()?;
    let hurst_set = a.hurst_set.iter().map(|&h| HurstIndex::new(h)).collect::<Result<Vec<_>>>()?;
    let spectra = a.spectrum.iter().map(|p| load_spectrum(p)).collect::<Result<Vec<_>>>()?;
    let opts = VerifyOptions {
        hurst_set,
        exec,
        seed: a.seed,
        spectra,
    };
    let report = verify::run(suite, &opts)?;
    for c in &report.checks {
        let verdict = match c.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        let h = c.hurst.map(|h| format!(" H={h}")).unwrap_or_default();
        let tol = c.tolerance.map(|t| format!(" (tol {t:e})")).unwrap_or_default();
        println!("{verdict} {}{h}: {} = {:e}{tol}", c.suite, c.name, c.measured);
    }
    create_dir(out_dir)?;
    let path = a.report.clone().unwrap_or_else(|| out_dir.join("verify_report.json"));
    write_json(&path, &report)?;
    let mut m = RunManifest::new("verify", &a, Some(a.seed));
    m.artifacts = vec![path.clone()];
    m.write(out_dir)?;
    println!("report written to {}", path.display());
    Ok(if report.all_passed {
        Outcome::Success
    } else {
        Outcome::ChecksFailed
    })
}

fn parse_grid(spec: &str) -> Result<Vec<SpherePoint>> {
    let n = spec
        .strip_prefix("fibonacci:")
        .and_then(|n| n.parse::<usize>().ok())
        .ok_or_else(|| Error::Usage(format!("unrecognized grid `{spec}` (expected fibonacci:<n>)")))?;
    fibonacci_grid(n)
}

fn simulate(out_dir: &Path, exec: Execution, a: SimulateArgs) -> Result<Outcome> {
    let hurst = HurstIndex::new(a.hurst)?;
    if a.samples == 0 {
        return Err(Error::Usage("--samples must be at least 1".into()));
    }
    if a.lmax == 0 {
        return Err(Error::Usage("--lmax must be at least 1".into()));
    }
    let points = match (&a.grid, &a.points) {
        (Some(g), None) => parse_grid(g)?,
        (None, Some(p)) => {
            if !p.is_file() {
                return Err(Error::Usage(format!("points file {} does not exist", p.display())));
            }
            read_points_csv(p)?
        }
        _ => return Err(Error::Usage("exactly one of --grid and --points is required".into())),
    };
    let dir = a.out.clone().unwrap_or_else(|| out_dir.to_path_buf());
    create_dir(&dir)?;
    let (s, spectrum_file) = load_or_build(&dir, exec, SpectrumMethod::Quadrature, hurst, a.lmax, sfbm::spectrum::DEFAULT_TOL)?;
    let basis = ModalBasis::new(a.lmax, &points);
    let stream = RandomStream::new(a.seed, 0);
    let files = exec.try_map(a.samples, |i| -> Result<PathBuf> {
        let r = draw_coefficients(hurst, a.lmax, &s, &stream.child(i as u64))?;
        let values = r.evaluate_basis(&basis)?;
        let path = dir.join(format!("realization_{i:05}.csv"));
        write_realization_csv(&path, &points, &values)?;
        Ok(path)
    })?;
    let mut m = RunManifest::new("simulate", &a, Some(a.seed));
    m.hurst = Some(hurst.value());
    m.lmax = Some(a.lmax);
    m.spectrum_file = Some(spectrum_file);
    m.n_samples = Some(a.samples);
    m.artifacts = files;
    let manifest = m.write(&dir)?;
    println!("wrote {} realizations and {}", a.samples, manifest.display());
    Ok(Outcome::Success)
}

fn slnd(out_dir: &Path, exec: Execution, a: SlndArgs) -> Result<Outcome> {
    let hurst = HurstIndex::new(a.hurst)?;
    if !(a.eps_min > 0.0) || !(a.eps_max >= a.eps_min) {
        return Err(Error::Usage(format!(
            "need 0 < --eps-min <= --eps-max, got [{}, {}]",
            a.eps_min, a.eps_max
        )));
    }
    let dir = a.out.clone().unwrap_or_else(|| out_dir.to_path_buf());
    create_dir(&dir)?;
    let est = estimate_k2(exec, hurst, a.trials, a.nmax, (a.eps_min, a.eps_max), &RandomStream::new(a.seed, 0))?;
    let json = dir.join("slnd.json");
    let csv = dir.join("slnd.csv");
    write_k2_json(&json, &est)?;
    write_k2_csv(&csv, &est)?;
    let mut m = RunManifest::new("slnd", &a, Some(a.seed));
    m.hurst = Some(hurst.value());
    m.artifacts = vec![json, csv];
    m.write(&dir)?;
    let all_positive = est.records.iter().all(|r| r.ratio.map_or(true, |v| v > 0.0));
    println!(
        "{} trials, min ratio {} (trial {}), p1 {} p5 {} p50 {}, all positive: {all_positive}",
        est.trials, est.min_ratio, est.worst_trial, est.quantiles.p1, est.quantiles.p5, est.quantiles.p50
    );
    Ok(if all_positive {
        Outcome::Success
    } else {
        Outcome::ChecksFailed
    })
}
