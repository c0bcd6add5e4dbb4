use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use oqo::fock::{expectation, make_state, StateSpec};
use oqo::measurement::propensity;
use oqo::phase::{
    phase_operator, phase_propensity_window, phase_spectrum_report, phasor,
    phasor_expectation, PhaseOpConfig, Smoothing,
};
use oqo::qp::{intrinsic_from_operational, qp_filter, spreads_from_propensity, QpModel};
use serde_json::{json, Map, Value};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "oqo", version, about = "Intrinsic vs operational observables on a truncated Fock space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothingArg {
    None,
    Cesaro,
}

#[derive(Args)]
struct Common {
    /// State spec `kind:params`, e.g. fock:2, coherent:1,0, thermal:0.5,
    /// displaced_thermal:0.5,1,-1, random:8,42
    #[arg(long, conflicts_with = "state_file")]
    state: Option<String>,
    /// JSON file holding a structured state spec
    #[arg(long)]
    state_file: Option<String>,
    /// Fock cutoff; falls back to OQO_DEFAULT_DIM, then 60
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of stdout
    #[arg(long)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Joint (q,p) propensity of the thermal-reference measurement
    QpPropensity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        nbar: f64,
    },
    /// Operational moments and the recovered intrinsic moments
    QpMoments {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        nbar: f64,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
    },
    /// Operational spreads and the uncertainty bound report
    QpSpreads {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        nbar: f64,
    },
    /// Phase propensity over one 2π window
    PhasePropensity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        nphi: usize,
        #[arg(long, default_value_t = -PI)]
        phi0: f64,
    },
    /// Phasor matrices, or their expectations when a state is given
    Phasors {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
    /// Windowed phase operator: spectrum report and optional expectation
    PhaseOp {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -PI)]
        phi0: f64,
        #[arg(long, default_value_t = 400)]
        n_max: usize,
        #[arg(long, value_enum, default_value = "none")]
        smoothing: SmoothingArg,
    },
    /// Run the invariant suite; nonzero exit on any failure
    Verify {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn parse_state(s: &str) -> Result<StateSpec, String> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| format!("state `{s}` lacks `kind:params`"))?;
    let parts: Vec<&str> = rest.split(',').collect();
    let num = |i: usize| -> Result<f64, String> {
        parts
            .get(i)
            .ok_or_else(|| format!("state `{s}`: missing parameter {i}"))?
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("state `{s}`: {e}"))
    };
    match kind {
        "fock" => Ok(StateSpec::Fock { n: num(0)? as usize }),
        "coherent" => Ok(StateSpec::Coherent { alpha: Complex64::new(num(0)?, num(1)?) }),
        "thermal" => Ok(StateSpec::Thermal { nbar: num(0)? }),
        "displaced_thermal" => Ok(StateSpec::DisplacedThermal {
            nbar: num(0)?,
            q: num(1)?,
            p: num(2)?,
        }),
        "random" => Ok(StateSpec::RandomMixed {
            levels: num(0)? as usize,
            seed: num(1)? as u64,
        }),
        other => Err(format!("unknown state kind `{other}`")),
    }
}

fn resolve_dim(flag: Option<usize>) -> Result<usize, String> {
    if let Some(d) = flag {
        return Ok(d);
    }
    match std::env::var("OQO_DEFAULT_DIM") {
        Ok(v) => v.parse().map_err(|e| format!("OQO_DEFAULT_DIM: {e}")),
        Err(_) => Ok(60),
    }
}

fn resolve_state(common: &Common) -> Result<StateSpec, String> {
    if let Some(s) = &common.state {
        return parse_state(s);
    }
    if let Some(path) = &common.state_file {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        return serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"));
    }
    Err("a state is required (--state or --state-file)".into())
}

/// Round to 12 significant digits so both formats print identically
/// across runs.
fn sig(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap()
}

fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

struct Table {
    config: Vec<(String, String)>,
    config_json: Map<String, Value>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        let mut t = Table {
            config: Vec::new(),
            config_json: Map::new(),
            columns,
            rows: Vec::new(),
        };
        t.meta_str("version", env!("CARGO_PKG_VERSION"));
        t
    }

    fn meta_str(&mut self, key: &str, val: &str) {
        self.config.push((key.into(), val.into()));
        self.config_json.insert(key.into(), Value::String(val.into()));
    }

    fn meta_num(&mut self, key: &str, val: f64) {
        self.config.push((key.into(), fmt(val)));
        self.config_json.insert(key.into(), json!(sig(val)));
    }

    fn meta_int(&mut self, key: &str, val: usize) {
        self.config.push((key.into(), val.to_string()));
        self.config_json.insert(key.into(), json!(val));
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = String::new();
                for (k, v) in &self.config {
                    let _ = writeln!(s, "# {k} = {v}");
                }
                let _ = writeln!(s, "{}", self.columns.join(","));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(|&x| fmt(x)).collect();
                    let _ = writeln!(s, "{}", cells.join(","));
                }
                s
            }
            Format::Json => {
                let data: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut m = Map::new();
                        for (c, &x) in self.columns.iter().zip(row) {
                            m.insert((*c).into(), json!(sig(x)));
                        }
                        Value::Object(m)
                    })
                    .collect();
                let out = json!({
                    "config": Value::Object(self.config_json.clone()),
                    "data": data,
                });
                let mut s = serde_json::to_string_pretty(&out).unwrap();
                s.push('\n');
                s
            }
        }
    }
}

fn emit(table: &Table, common_format: Format, output: &Option<String>) -> Result<(), String> {
    let text = table.render(common_format);
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{path}: {e}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn state_label(spec: &StateSpec) -> String {
    match spec {
        StateSpec::Fock { n } => format!("fock:{n}"),
        StateSpec::Coherent { alpha } => format!("coherent:{},{}", alpha.re, alpha.im),
        StateSpec::Thermal { nbar } => format!("thermal:{nbar}"),
        StateSpec::DisplacedThermal { nbar, q, p } => {
            format!("displaced_thermal:{nbar},{q},{p}")
        }
        StateSpec::RandomMixed { levels, seed } => format!("random:{levels},{seed}"),
    }
}

fn run() -> Result<u8, String> {
    let cli = Cli::parse();
    let oqo_err = |e: oqo::error::OqoError| e.to_string();
    match cli.command {
        Command::QpPropensity { common, nbar } => {
            let dim = resolve_dim(common.dim)?;
            let spec = resolve_state(&common)?;
            let rho = make_state(&spec, dim).map_err(oqo_err)?;
            let model = QpModel::for_state(nbar, dim, &rho).map_err(oqo_err)?;
            let fam = qp_filter(&model).map_err(oqo_err)?;
            let pr = propensity(&rho, &fam).map_err(oqo_err)?;
            let mut t = Table::new(vec!["q", "p", "pr"]);
            t.meta_str("state", &state_label(&spec));
            t.meta_int("dim", dim);
            t.meta_num("nbar", nbar);
            t.meta_num("half_width", model.half_width);
            t.meta_int("points_per_axis", model.points_per_axis);
            t.meta_num("k", fam.k);
            for i in 0..pr.grid.len() {
                let pt = pr.grid.point(i);
                t.rows.push(vec![pt[0], pt[1], pr.values[i]]);
            }
            emit(&t, common.format, &common.output)?;
            Ok(0)
        }
        Command::QpMoments { common, nbar, max_n } => {
            let dim = resolve_dim(common.dim)?;
            let spec = resolve_state(&common)?;
            let rho = make_state(&spec, dim).map_err(oqo_err)?;
            let model = QpModel::for_state(nbar, dim, &rho).map_err(oqo_err)?;
            let fam = qp_filter(&model).map_err(oqo_err)?;
            let pr = propensity(&rho, &fam).map_err(oqo_err)?;
            let mq: Vec<f64> = (1..=max_n).map(|n| pr.moment(0, n as u32)).collect();
            let mp: Vec<f64> = (1..=max_n).map(|n| pr.moment(1, n as u32)).collect();
            let iq = intrinsic_from_operational(&mq, nbar).map_err(oqo_err)?;
            let ip = intrinsic_from_operational(&mp, nbar).map_err(oqo_err)?;
            let mut t = Table::new(vec![
                "n",
                "operational_q",
                "operational_p",
                "intrinsic_q",
                "intrinsic_p",
            ]);
            t.meta_str("state", &state_label(&spec));
            t.meta_int("dim", dim);
            t.meta_num("nbar", nbar);
            t.meta_num("half_width", model.half_width);
            t.meta_int("points_per_axis", model.points_per_axis);
            for n in 1..=max_n {
                t.rows.push(vec![n as f64, mq[n - 1], mp[n - 1], iq[n - 1], ip[n - 1]]);
            }
            emit(&t, common.format, &common.output)?;
            Ok(0)
        }
        Command::QpSpreads { common, nbar } => {
            let dim = resolve_dim(common.dim)?;
            let spec = resolve_state(&common)?;
            let rho = make_state(&spec, dim).map_err(oqo_err)?;
            let model = QpModel::for_state(nbar, dim, &rho).map_err(oqo_err)?;
            let fam = qp_filter(&model).map_err(oqo_err)?;
            let pr = propensity(&rho, &fam).map_err(oqo_err)?;
            let rep = spreads_from_propensity(&rho, &model, &pr).map_err(oqo_err)?;
            let mut t = Table::new(vec![
                "dq", "dp", "DQ", "DP", "lhs", "rhs", "margin", "equality_case",
            ]);
            t.meta_str("state", &state_label(&spec));
            t.meta_int("dim", dim);
            t.meta_num("nbar", nbar);
            t.meta_num("half_width", model.half_width);
            t.meta_int("points_per_axis", model.points_per_axis);
            t.rows.push(vec![
                rep.dq,
                rep.dp,
                rep.dq_intrinsic,
                rep.dp_intrinsic,
                rep.lhs,
                rep.rhs,
                rep.margin,
                rep.equality_case as u8 as f64,
            ]);
            emit(&t, common.format, &common.output)?;
            Ok(0)
        }
        Command::PhasePropensity { common, nphi, phi0 } => {
            let dim = resolve_dim(common.dim)?;
            let spec = resolve_state(&common)?;
            let rho = make_state(&spec, dim).map_err(oqo_err)?;
            let pr = phase_propensity_window(&rho, phi0, nphi).map_err(oqo_err)?;
            let mut t = Table::new(vec!["phi", "pr"]);
            t.meta_str("state", &state_label(&spec));
            t.meta_int("dim", dim);
            t.meta_int("nphi", nphi);
            t.meta_num("phi0", phi0);
            for i in 0..pr.grid.len() {
                t.rows.push(vec![pr.grid.point(i)[0], pr.values[i]]);
            }
            emit(&t, common.format, &common.output)?;
            Ok(0)
        }
        Command::Phasors { common, n_max } => {
            let dim = resolve_dim(common.dim)?;
            let has_state = common.state.is_some() || common.state_file.is_some();
            if has_state {
                let spec = resolve_state(&common)?;
                let rho = make_state(&spec, dim).map_err(oqo_err)?;
                let mut t = Table::new(vec!["n", "re", "im"]);
                t.meta_str("state", &state_label(&spec));
                t.meta_int("dim", dim);
                t.meta_int("n_max", n_max);
                for n in 0..=n_max as i64 {
                    let e = phasor_expectation(&rho, n).map_err(oqo_err)?;
                    t.rows.push(vec![n as f64, e.re, e.im]);
                }
                emit(&t, common.format, &common.output)?;
            } else {
                let mut t = Table::new(vec!["n", "row", "col", "re", "im"]);
                t.meta_int("dim", dim);
                t.meta_int("n_max", n_max);
                for n in 0..=n_max {
                    let e = phasor(n, dim).map_err(oqo_err)?;
                    for m in 0..dim - n {
                        t.rows.push(vec![
                            n as f64,
                            m as f64,
                            (m + n) as f64,
                            e[(m, m + n)].re,
                            e[(m, m + n)].im,
                        ]);
                    }
                }
                emit(&t, common.format, &common.output)?;
            }
            Ok(0)
        }
        Command::PhaseOp { common, phi0, n_max, smoothing } => {
            let dim = resolve_dim(common.dim)?;
            let cfg = PhaseOpConfig {
                phi0,
                n_max,
                smoothing: match smoothing {
                    SmoothingArg::None => Smoothing::None,
                    SmoothingArg::Cesaro => Smoothing::Cesaro,
                },
            };
            let rep = phase_spectrum_report(&cfg, dim).map_err(oqo_err)?;
            let mut t = Table::new(vec!["index", "eigenvalue"]);
            t.meta_int("dim", dim);
            t.meta_num("phi0", phi0);
            t.meta_int("n_max", n_max);
            t.meta_str(
                "smoothing",
                match cfg.smoothing {
                    Smoothing::None => "none",
                    Smoothing::Cesaro => "cesaro",
                },
            );
            t.meta_num("out_of_window_excess", rep.out_of_window_excess);
            t.meta_num("max_residual", rep.max_residual);
            if common.state.is_some() || common.state_file.is_some() {
                let spec = resolve_state(&common)?;
                let rho = make_state(&spec, dim).map_err(oqo_err)?;
                let op = phase_operator(&cfg, dim).map_err(oqo_err)?;
                let mean = expectation(&rho, &op).map_err(oqo_err)?;
                t.meta_str("state", &state_label(&spec));
                t.meta_num("expectation", mean.re);
            }
            for (i, &lam) in rep.eigenvalues.iter().enumerate() {
                t.rows.push(vec![i as f64, lam]);
            }
            emit(&t, common.format, &common.output)?;
            Ok(0)
        }
        Command::Verify { dim, seed } => {
            let dim = resolve_dim(dim)?;
            let results = oqo::verify::verify_suite(dim, seed).map_err(oqo_err)?;
            let mut failures = 0;
            println!("verification at dim = {dim}, seed = {seed}");
            for r in &results {
                println!(
                    "  {:<32} residual {:>18} tol {:>8.1e}  {}",
                    r.group,
                    fmt(r.residual),
                    r.tolerance,
                    if r.pass { "PASS" } else { "FAIL" }
                );
                if !r.pass {
                    failures += 1;
                }
            }
            if failures > 0 {
                println!("{failures} group(s) failed");
                Ok(1)
            } else {
                println!("all {} groups passed", results.len());
                Ok(0)
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
