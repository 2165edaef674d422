use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use slepian_qns::dpss::{compute_dpss, DpssParams};
use slepian_qns::estimate::{eigenestimate, sigma_bound, significance_test, EstimatorTag, SignalMeasurement};
use slepian_qns::filter::{passband, FilterCurve, PassbandSpec};
use slepian_qns::scenario::output::{sha256_hex, Table};
use slepian_qns::scenario::{rerun_manifest, run_to_dir, ScenarioConfig, ScenarioName};
use slepian_qns::sim::{ExperimentConfig, ExperimentResult, PreparedExperiment};
use slepian_qns::waveform::{dpss_waveform, modulate, normalize_power, Modulation};
use slepian_qns::{Error, Result};

#[derive(Parser)]
#[command(name = "slepian-qns", version, about = "Slepian quantum noise spectroscopy toolkit")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit DPSS tapers (or DPSWFs) as CSV.
    Dpss {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: f64,
        /// Number of tapers, orders 0..orders-1.
        #[arg(long, default_value_t = 1)]
        orders: usize,
        /// Emit DPSWFs on a frequency grid instead of the sequences.
        #[arg(long)]
        dpswf: bool,
        /// Sample spacing in seconds, used for DPSWF output.
        #[arg(long, default_value_t = 1e-6)]
        dt: f64,
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the filter function of a shifted, power-normalized DPSS waveform.
    Filter {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: f64,
        #[arg(long, default_value_t = 0)]
        order: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 0.0)]
        shift_hz: f64,
        #[arg(long, value_enum, default_value_t = Mode::Cos)]
        mode: Mode,
        #[arg(long, default_value_t = 900.0)]
        power: f64,
        /// Upper frequency of the grid; defaults to the Nyquist frequency.
        #[arg(long)]
        f_max_hz: Option<f64>,
        #[arg(long, default_value_t = 1001)]
        points: usize,
        /// Also write the control waveform as JSON, for `simulate --waveform`.
        #[arg(long)]
        waveform_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment, from a full experiment config or from a waveform and a PSD.
    Simulate {
        #[arg(long, conflicts_with_all = ["waveform", "psd"])]
        config: Option<PathBuf>,
        #[arg(long, requires = "psd")]
        waveform: Option<PathBuf>,
        #[arg(long, requires = "waveform")]
        psd: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        shots: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Attach a passband at this shift so that `estimate` can use the record.
        #[arg(long)]
        shift_hz: Option<f64>,
        /// Passband parameter W for --shift-hz.
        #[arg(long)]
        w: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenestimates and z-scores from stored simulation records.
    Estimate {
        #[arg(long, required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario and write its output bundle.
    Scenario {
        #[arg(long, value_parser = parse_name)]
        name: Option<ScenarioName>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Regenerate a bundle from an existing manifest.
        #[arg(long, conflicts_with_all = ["name", "config"])]
        from_manifest: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, required_unless_present = "print_config")]
        out: Option<PathBuf>,
        /// Skip Monte Carlo and emit expected values only.
        #[arg(long)]
        oracle_only: bool,
        /// Print the effective config and exit.
        #[arg(long)]
        print_config: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cos,
    Sin,
    Ssb,
}

fn parse_name(s: &str) -> std::result::Result<ScenarioName, String> {
    ScenarioName::parse(s).map_err(|e| e.to_string())
}

/// A simulated experiment as stored by `simulate`.
#[derive(Serialize, Deserialize)]
struct SimulationRecord {
    config: ExperimentConfig,
    result: ExperimentResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    passband: Option<PassbandSpec>,
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(d) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(d)?;
            }
            fs::write(p, bytes)?;
        }
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn cmd_dpss(n: usize, w: f64, orders: usize, dpswf: bool, dt: f64, points: usize, out: &Option<PathBuf>) -> Result<()> {
    if orders == 0 {
        return Err(Error::Parameter("--orders must be at least 1".into()));
    }
    let params = DpssParams::new(n, w)?;
    let tapers = compute_dpss(&params, orders - 1)?;
    let mut head = vec![if dpswf { "omega_rad_per_s".to_string() } else { "index".to_string() }];
    head.extend(tapers.iter().map(|t| format!("k{}", t.order)));
    let mut t = Table { name: "dpss".into(), header: head, rows: Vec::new() };
    if dpswf {
        let wn = PI / dt;
        for i in 0..points {
            let om = wn * i as f64 / (points.max(2) - 1) as f64;
            let mut row = vec![format!("{om}")];
            row.extend(tapers.iter().map(|k| format!("{}", k.dpswf(dt, om))));
            t.rows.push(row);
        }
    } else {
        for i in 0..n {
            let mut row = vec![i.to_string()];
            row.extend(tapers.iter().map(|k| format!("{}", k.values[i])));
            t.rows.push(row);
        }
    }
    emit(out, &t.to_csv()?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_filter(
    n: usize,
    w: f64,
    order: usize,
    dt: f64,
    shift_hz: f64,
    mode: Mode,
    power: f64,
    f_max_hz: Option<f64>,
    points: usize,
    waveform_out: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let params = DpssParams::new(n, w)?;
    let taper = compute_dpss(&params, order)?.remove(order);
    let m = match mode {
        Mode::Cos => Modulation::Cos,
        Mode::Sin => Modulation::Sin,
        Mode::Ssb => Modulation::Ssb,
    };
    let ws = 2.0 * PI * shift_hz;
    let wf = normalize_power(&modulate(&dpss_waveform(&taper, 1.0, dt)?, m, ws)?, power)?;
    let f = FilterCurve::new(&wf);
    let pb = passband(&f, ws, w, dt)?;
    let f_max = f_max_hz.unwrap_or(0.5 / dt);
    let mut t = Table::new("filter", &["frequency_hz", "omega_rad_per_s", "filter_rad2", "in_passband"]);
    for i in 0..points.max(2) {
        let hz = f_max * i as f64 / (points.max(2) - 1) as f64;
        let om = 2.0 * PI * hz;
        t.push(vec![format!("{hz}"), format!("{om}"), format!("{}", f.eval(om)), ((om >= pb.a && om <= pb.b) as u8).to_string()]);
    }
    if waveform_out.is_some() {
        emit(waveform_out, &serde_json::to_vec_pretty(&wf)?)?;
    }
    eprintln!("passband [{:.3}, {:.3}] Hz, area {:e}", pb.a / (2.0 * PI), pb.b / (2.0 * PI), pb.area);
    emit(out, &t.to_csv()?)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| Error::Config { path: format!("{}: {}", path.display(), e.path()), message: e.inner().to_string() })
}

struct SimulateArgs {
    config: Option<PathBuf>,
    waveform: Option<PathBuf>,
    psd: Option<PathBuf>,
    shots: usize,
    seed: Option<u64>,
    shift_hz: Option<f64>,
    w: Option<f64>,
}

fn cmd_simulate(a: SimulateArgs, out: &Option<PathBuf>) -> Result<()> {
    let SimulateArgs { config, waveform, psd, shots, seed, shift_hz, w } = a;
    let mut cfg: ExperimentConfig = match (config, waveform, psd) {
        (Some(c), _, _) => load_json(&c)?,
        (None, Some(wf), Some(p)) => ExperimentConfig::new(load_json(&wf)?, load_json(&p)?, shots, 0),
        _ => return Err(Error::Parameter("give --config, or --waveform with --psd".into())),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let pb = match (shift_hz, w) {
        (Some(f), Some(w)) => Some(passband(&FilterCurve::new(&cfg.waveform), 2.0 * PI * f, w, cfg.waveform.dt)?),
        (None, None) => None,
        _ => return Err(Error::Parameter("--shift-hz and --w must be given together".into())),
    };
    let result = PreparedExperiment::new(cfg.clone())?.run();
    let rec = SimulationRecord { config: cfg, result, passband: pb };
    let bytes = serde_json::to_vec_pretty(&rec)?;
    eprintln!("sha256 {}", sha256_hex(&bytes));
    emit(out, &bytes)
}

fn cmd_estimate(inputs: &[PathBuf], out: &Option<PathBuf>) -> Result<()> {
    let mut recs = Vec::new();
    for p in inputs {
        let r: SimulationRecord = serde_json::from_slice(&fs::read(p)?)?;
        let pb = r.passband.ok_or_else(|| Error::Config {
            path: format!("{}: passband", p.display()),
            message: "record has no passband; simulate with --shift-hz and --w".into(),
        })?;
        let rec = eigenestimate(&SignalMeasurement::from_result(&r.result), &pb, EstimatorTag::Taper(0))?;
        recs.push((rec, r.result.shots));
    }
    recs.sort_by(|a, b| a.0.omega_s.total_cmp(&b.0.omega_s));
    // z-scores need at least three shifts.
    let z = if recs.len() >= 3 {
        let v: Vec<f64> = recs.iter().map(|(r, _)| r.value).collect();
        let s: Vec<f64> = recs.iter().map(|(r, m)| sigma_bound(*m, r.area)).collect();
        Some(significance_test(&v, &s)?.z)
    } else {
        None
    };
    let mut t = Table::new("estimates", &["omega_rad_per_s", "frequency_hz", "estimate", "std_dev", "tag", "z"]);
    for (i, (r, _)) in recs.iter().enumerate() {
        t.push(vec![
            format!("{}", r.omega_s),
            format!("{}", r.omega_s / (2.0 * PI)),
            format!("{}", r.value),
            format!("{}", r.std_dev()),
            r.tag.to_string(),
            z.as_ref().map(|z| format!("{}", z[i])).unwrap_or_default(),
        ]);
    }
    emit(out, &t.to_csv()?)
}

fn cmd_scenario(
    name: Option<ScenarioName>,
    config: Option<PathBuf>,
    from_manifest: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    oracle_only: bool,
    print_config: bool,
) -> Result<()> {
    let out = || out.clone().ok_or_else(|| Error::Parameter("--out is required".into()));
    if let Some(m) = from_manifest {
        let p = rerun_manifest(&m, &out()?)?;
        eprintln!("wrote {}", p.display());
        return Ok(());
    }
    let mut cfg = match (&config, name) {
        (Some(p), n) => {
            let c = ScenarioConfig::load(p)?;
            if let Some(n) = n {
                if n != c.scenario {
                    return Err(Error::Config {
                        path: format!("{}: scenario", p.display()),
                        message: format!("config is for `{}`, --name asks for `{}`", c.scenario.as_str(), n.as_str()),
                    });
                }
            }
            c
        }
        (None, Some(n)) => ScenarioConfig::default_for(n),
        (None, None) => return Err(Error::Parameter("give --name or --config".into())),
    };
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    let cfg = cfg.with_defaults();
    if print_config {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(());
    }
    let p = run_to_dir(&cfg, &out()?, oracle_only)?;
    eprintln!("wrote {}", p.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    }
    match cli.cmd {
        Command::Dpss { n, w, orders, dpswf, dt, points, out } => cmd_dpss(n, w, orders, dpswf, dt, points, &out),
        Command::Filter { n, w, order, dt, shift_hz, mode, power, f_max_hz, points, waveform_out, out } => {
            cmd_filter(n, w, order, dt, shift_hz, mode, power, f_max_hz, points, &waveform_out, &out)
        }
        Command::Simulate { config, waveform, psd, shots, seed, shift_hz, w, out } => {
            cmd_simulate(SimulateArgs { config, waveform, psd, shots, seed, shift_hz, w }, &out)
        }
        Command::Estimate { inputs, out } => cmd_estimate(&inputs, &out),
        Command::Scenario { name, config, from_manifest, seed, out, oracle_only, print_config } => {
            cmd_scenario(name, config, from_manifest, seed, out, oracle_only, print_config)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::Json(_) => ExitCode::from(3),
                Error::Parameter(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
