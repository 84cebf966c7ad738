use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ducap_core::studio::{generate_instance, write_csv, GeneratorConfig};
use serde::{Deserialize, Serialize};

use crate::report::{run_method, Method, SolveSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Users,
    Scenarios,
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// File stem of the sweep's CSV; defaults to the parameter name.
    #[serde(default)]
    pub name: Option<String>,
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn file_stem(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            match self.param {
                SweepParam::Users => "users",
                SweepParam::Scenarios => "scenarios",
                SweepParam::Gamma => "gamma",
            }
            .to_string()
        })
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Generator settings shared by every point; swept fields are overwritten.
    #[serde(default)]
    pub base: GeneratorConfig,
    /// One instance per seed and point; defaults to `[base.seed]`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub settings: SolveSettings,
    /// Run each method once on the first point of a sweep before timing.
    #[serde(default = "default_true")]
    pub warmup: bool,
    #[serde(default)]
    pub sweeps: Vec<Sweep>,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: BenchConfig = serde_json::from_str(text).context("parsing bench config")?;
        if cfg.methods.is_empty() {
            bail!("bench config lists no methods");
        }
        for s in &cfg.sweeps {
            for &v in &s.values {
                let ok = match s.param {
                    SweepParam::Users | SweepParam::Scenarios => v >= 1.0 && v.fract() == 0.0,
                    SweepParam::Gamma => v.is_finite() && v >= 0.0,
                };
                if !ok {
                    bail!("sweep '{}': invalid value {v}", s.file_stem());
                }
            }
        }
        Ok(cfg)
    }

    fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.base.seed]
        } else {
            self.seeds.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub sweep: String,
    pub x: f64,
    pub seed: u64,
    pub method: Method,
    pub objective: Option<f64>,
    pub capacity_term: Option<f64>,
    pub latency_term: Option<f64>,
    pub wall_millis: Option<f64>,
    pub iterations: Option<usize>,
    pub cuts_added: Option<usize>,
    pub cuts_filtered: Option<usize>,
    /// Solve status, or `error` when generation or the solver failed.
    pub status: String,
    pub error: String,
}

impl BenchRow {
    pub const HEADER: [&'static str; 13] = [
        "sweep",
        "x",
        "seed",
        "method",
        "objective",
        "capacity_term",
        "latency_term",
        "wall_millis",
        "iterations",
        "cuts_added",
        "cuts_filtered",
        "status",
        "error",
    ];
}

fn point_config(base: &GeneratorConfig, param: SweepParam, x: f64, seed: u64) -> (GeneratorConfig, Option<f64>) {
    let mut cfg = GeneratorConfig { seed, ..base.clone() };
    let mut gamma = None;
    match param {
        SweepParam::Users => cfg.users = x as usize,
        SweepParam::Scenarios => cfg.n_scenarios = x as usize,
        SweepParam::Gamma => gamma = Some(x),
    }
    (cfg, gamma)
}

/// Rows of one sweep. Failures become `error` rows and the sweep moves on.
pub fn run_sweep(cfg: &BenchConfig, sweep: &Sweep) -> Vec<BenchRow> {
    let name = sweep.file_stem();
    let mut rows = Vec::new();
    let seeds = cfg.seeds();
    if cfg.warmup {
        if let (Some(&x), Some(&seed)) = (sweep.values.first(), seeds.first()) {
            let (gen, gamma) = point_config(&cfg.base, sweep.param, x, seed);
            if let Ok(inst) = generate_instance(&gen) {
                let settings = SolveSettings { gamma: gamma.or(cfg.settings.gamma), ..cfg.settings.clone() };
                for &m in &cfg.methods {
                    let _ = run_method(&inst, m, &settings);
                }
            }
        }
    }
    for &x in &sweep.values {
        for &seed in &seeds {
            let (gen, gamma) = point_config(&cfg.base, sweep.param, x, seed);
            let settings = SolveSettings { gamma: gamma.or(cfg.settings.gamma), ..cfg.settings.clone() };
            let inst = generate_instance(&gen);
            for &method in &cfg.methods {
                let blank = BenchRow {
                    sweep: name.clone(),
                    x,
                    seed,
                    method,
                    objective: None,
                    capacity_term: None,
                    latency_term: None,
                    wall_millis: None,
                    iterations: None,
                    cuts_added: None,
                    cuts_filtered: None,
                    status: "error".into(),
                    error: String::new(),
                };
                let outcome = match &inst {
                    Ok(inst) => run_method(inst, method, &settings).map(|(r, _)| r),
                    Err(e) => Err(anyhow::anyhow!("generating instance: {e}")),
                };
                rows.push(match outcome {
                    Ok(r) => BenchRow {
                        objective: r.objective,
                        capacity_term: r.capacity_term,
                        latency_term: r.latency_term,
                        wall_millis: Some(r.wall_millis),
                        iterations: r.iterations,
                        cuts_added: r.cuts_added,
                        cuts_filtered: r.cuts_filtered,
                        status: r.status.into(),
                        ..blank
                    },
                    Err(e) => BenchRow { error: format!("{e:#}"), ..blank },
                });
            }
        }
    }
    rows
}

/// Write one CSV per sweep into `out_dir`; with no sweeps, a header-only `bench.csv`.
pub fn run_bench(cfg: &BenchConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let write = |path: PathBuf, rows: &[BenchRow]| -> Result<PathBuf> {
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_csv(rows, &BenchRow::HEADER, BufWriter::new(f))?;
        Ok(path)
    };
    if cfg.sweeps.is_empty() {
        return Ok(vec![write(out_dir.join("bench.csv"), &[])?]);
    }
    let mut files = Vec::new();
    for sweep in &cfg.sweeps {
        let rows = run_sweep(cfg, sweep);
        files.push(write(out_dir.join(format!("{}.csv", sweep.file_stem())), &rows)?);
    }
    Ok(files)
}
