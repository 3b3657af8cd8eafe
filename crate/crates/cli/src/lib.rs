//! Experiment drivers behind the `shadowvqs` binary. Each `cmd_*` function
//! is deterministic given its seed and returns the rendered output so tests
//! can call it without spawning a process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shadowvqs::analysis::{haar_check, variance_table, GConvention, HaarReport, VarianceRow, VarianceSetup};
use shadowvqs::hamiltonians;
use shadowvqs::measure::{build_classical_shadow, build_derandomized};
use shadowvqs::vqs::run_paired;
use shadowvqs::{
    AnsatzSpec, DerandomizationParams, EvolutionConfig, EvolutionMode, EvolutionTrace, ObservableSum, PauliString,
    RandomSource, Strategy,
};

/// Version tag written as the first line of every CSV output.
pub const CSV_SCHEMA: &str = "# shadowvqs-csv v1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] shadowvqs::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                shadowvqs::Error::SingularM | shadowvqs::Error::PlanRejected(_) | shadowvqs::Error::UncoveredTerm(_),
            ) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "text" => Ok(OutputFormat::Text),
            _ => Err(CliError::Config(format!("unknown format {s:?}"))),
        }
    }
}

/// Resolves `builtin:heisenberg`, `builtin:two-family`, or a file path in
/// the Hamiltonian text format.
pub fn load_hamiltonian(source: &str) -> CliResult<ObservableSum> {
    match source {
        "builtin:heisenberg" => Ok(hamiltonians::heisenberg()),
        "builtin:two-family" => Ok(hamiltonians::two_family_example()),
        s if s.starts_with("builtin:") => Err(CliError::Config(format!("unknown builtin Hamiltonian {s:?}"))),
        path => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
            Ok(ObservableSum::parse_text(&text)?)
        }
    }
}

/// Settings shared by the evolution and variance experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub hamiltonian_source: String,
    pub mode: EvolutionMode,
    pub strategy: Strategy,
    pub dt: f64,
    pub steps: usize,
    /// Shots per `V_k` per step; `None` means five per Hamiltonian term.
    pub shots_total: Option<usize>,
    pub trials: usize,
    pub layers: usize,
    pub seed: u64,
    pub alpha: Option<f64>,
    pub svd_cutoff: f64,
    pub g_convention: GConvention,
    pub derandomization: DerandomizationParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            hamiltonian_source: "builtin:heisenberg".into(),
            mode: EvolutionMode::Ite,
            strategy: Strategy::Derandomization,
            dt: 0.01,
            steps: 5,
            shots_total: None,
            trials: 5,
            layers: 4,
            seed: 0,
            alpha: None,
            svd_cutoff: 1e-6,
            g_convention: GConvention::Half,
            derandomization: DerandomizationParams::default(),
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> CliResult<()> {
        if self.trials == 0 {
            return Err(CliError::Config("--trials must be at least 1".into()));
        }
        if self.layers == 0 {
            return Err(CliError::Config("--layers must be at least 1".into()));
        }
        if self.mode == EvolutionMode::General {
            return Err(CliError::Config("the CLI drives rte and ite only".into()));
        }
        Ok(())
    }

    fn shots_for(&self, h: &ObservableSum) -> usize {
        self.shots_total.unwrap_or(5 * h.len())
    }
}

/// Gate axes for trial `trial`, shared by every strategy.
pub fn trial_ansatz(num_qubits: usize, layers: usize, seed: u64, trial: u64) -> CliResult<AnsatzSpec> {
    let mut rng = RandomSource::stream(seed, &[0xA5, trial]);
    Ok(AnsatzSpec::random(num_qubits, layers, &mut rng)?)
}

/// Per-step aggregate over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    #[serde(rename = "D_I")]
    pub d_i: f64,
    #[serde(rename = "D_I_stderr")]
    pub d_i_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveOutput {
    pub config: ExperimentConfig,
    pub shots_total: usize,
    pub summary: Vec<SummaryRow>,
    pub trials: Vec<EvolutionTrace>,
}

/// Runs `trials` paired (strategy, exact) evolutions from all-zero
/// parameters and summarizes `D_I` as mean and standard error per step.
pub fn cmd_evolve(config: &ExperimentConfig) -> CliResult<EvolveOutput> {
    config.validate()?;
    let h = load_hamiltonian(&config.hamiltonian_source)?;
    let shots = config.shots_for(&h);
    let traces: Vec<EvolutionTrace> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| -> CliResult<EvolutionTrace> {
            let spec = trial_ansatz(h.num_qubits(), config.layers, config.seed, trial)?;
            let evo = EvolutionConfig {
                dt: config.dt,
                steps: config.steps,
                shots_total: shots,
                alpha: config.alpha,
                svd_cutoff: config.svd_cutoff,
                seed: config.seed,
                trial,
                derandomization: config.derandomization,
                ..EvolutionConfig::new(config.mode, h.clone(), config.strategy)
            };
            let initial = vec![0.0; spec.num_params()];
            Ok(run_paired(&spec, &initial, &evo)?.0)
        })
        .collect::<CliResult<_>>()?;
    let summary = summarize(&traces);
    Ok(EvolveOutput { config: config.clone(), shots_total: shots, summary, trials: traces })
}

fn summarize(traces: &[EvolutionTrace]) -> Vec<SummaryRow> {
    let m = traces.len() as f64;
    (0..traces[0].records.len())
        .map(|i| {
            let recs: Vec<_> = traces.iter().map(|t| &t.records[i]).collect();
            let d: Vec<f64> = recs.iter().map(|r| r.infidelity.unwrap_or(0.0)).collect();
            let mean = d.iter().sum::<f64>() / m;
            let stderr = if traces.len() > 1 {
                (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                step: recs[0].step,
                t: recs[0].t,
                energy: recs.iter().map(|r| r.energy).sum::<f64>() / m,
                d_i: mean,
                d_i_stderr: stderr,
            }
        })
        .collect()
}

fn csv_with_schema<S: Serialize>(rows: &[S]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Config(e.to_string()))?)
        .expect("csv output is utf-8");
    Ok(format!("{CSV_SCHEMA}\n{body}"))
}

/// Parses CSV written by this crate, skipping the schema comment.
pub fn read_csv<T: for<'de> Deserialize<'de>>(text: &str) -> CliResult<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Per-trial rows: one line per time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    #[serde(rename = "D_I")]
    pub d_i: f64,
}

pub fn trace_rows(trace: &EvolutionTrace) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow { step: r.step, t: r.t, energy: r.energy, d_i: r.infidelity.unwrap_or(0.0) })
        .collect()
}

impl EvolveOutput {
    pub fn summary_csv(&self) -> CliResult<String> {
        csv_with_schema(&self.summary)
    }

    pub fn trial_csv(&self, trial: usize) -> CliResult<String> {
        csv_with_schema(&trace_rows(&self.trials[trial]))
    }

    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary_text(&self) -> String {
        let mut s = format!("{:>5} {:>10} {:>14} {:>12} {:>12}\n", "step", "t", "energy", "D_I", "stderr");
        for r in &self.summary {
            let _ = writeln!(s, "{:>5} {:>10.4} {:>14.8} {:>12.6e} {:>12.3e}", r.step, r.t, r.energy, r.d_i, r.d_i_stderr);
        }
        s
    }

    /// Writes the summary to `out` and, for CSV, one file per trial next to
    /// it named `<stem>.trial<i>.csv`.
    pub fn write(&self, out: &Path, format: OutputFormat) -> CliResult<Vec<PathBuf>> {
        let mut written = vec![out.to_path_buf()];
        match format {
            OutputFormat::Json => write_file(out, &self.to_json()?)?,
            OutputFormat::Text => write_file(out, &self.summary_text())?,
            OutputFormat::Csv => {
                write_file(out, &self.summary_csv()?)?;
                let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
                for i in 0..self.trials.len() {
                    let p = out.with_file_name(format!("{stem}.trial{i}.csv"));
                    write_file(&p, &self.trial_csv(i)?)?;
                    written.push(p);
                }
            }
        }
        Ok(written)
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Parameter sets used by the variance tables: all zeros, then
/// `patterns` uniform draws from `[0, 2π)`.
pub fn variance_parameter_sets(num_params: usize, patterns: usize, seed: u64) -> Vec<(String, Vec<f64>)> {
    use rand::Rng;
    let mut sets = vec![("all zero".to_string(), vec![0.0; num_params])];
    for p in 0..patterns {
        let mut rng = RandomSource::stream(seed, &[0x9A, p as u64]);
        let params = (0..num_params).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        sets.push((format!("random (pattern{})", p + 1), params));
    }
    sets
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceOutput {
    pub config: ExperimentConfig,
    pub shots_total: usize,
    pub rows: Vec<VarianceRow>,
}

/// Flat CSV row for [`VarianceRow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCsvRow {
    pub parameters: String,
    pub measurement: String,
    pub variance: f64,
    pub approximation: f64,
    pub diff: f64,
}

/// Variance / Approximation / Diff for naive, classical shadow,
/// derandomization and LDF, at all-zero and five random parameter sets.
/// The ansatz gate axes come from trial 0.
pub fn cmd_variance(config: &ExperimentConfig) -> CliResult<VarianceOutput> {
    config.validate()?;
    let h = load_hamiltonian(&config.hamiltonian_source)?;
    let shots = config.shots_for(&h);
    let spec = trial_ansatz(h.num_qubits(), config.layers, config.seed, 0)?;
    let sets = variance_parameter_sets(spec.num_params(), 5, config.seed);
    let setup = VarianceSetup {
        spec: &spec,
        hamiltonian: &h,
        mode: config.mode,
        shots_total: shots,
        convention: config.g_convention,
        derandomization: config.derandomization,
        seed: config.seed,
    };
    let strategies = [Strategy::Naive, Strategy::ClassicalShadow, Strategy::Derandomization, Strategy::Ldf];
    let rows = variance_table(&setup, &sets, &strategies)?;
    Ok(VarianceOutput { config: config.clone(), shots_total: shots, rows })
}

impl VarianceOutput {
    pub fn csv_rows(&self) -> Vec<VarianceCsvRow> {
        self.rows
            .iter()
            .map(|r| VarianceCsvRow {
                parameters: r.parameters.clone(),
                measurement: r.strategy.name().to_string(),
                variance: r.variance,
                approximation: r.approximation,
                diff: r.diff,
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<20} {:<12} {:>12} {:>14} {:>10}\n",
            "Parameters", "Measurement", "Variance", "Approximation", "Diff"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<20} {:<12} {:>12.4e} {:>14.4e} {:>10.2e}",
                r.parameters,
                r.strategy.name(),
                r.variance,
                r.approximation,
                r.diff
            );
        }
        s
    }

    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        match format {
            OutputFormat::Csv => csv_with_schema(&self.csv_rows()),
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self)?),
            OutputFormat::Text => Ok(self.to_text()),
        }
    }
}

/// Derandomized plan for `source`, optionally for the `X⊗P` extension.
/// Returns the bases one per line.
pub fn cmd_derandomize(source: &str, num_shots: usize, extend: bool, params: DerandomizationParams) -> CliResult<String> {
    let h = load_hamiltonian(source)?;
    let target = if extend { h.extend_with_x(1.0)? } else { h };
    Ok(build_derandomized(&target, num_shots, params)?.to_text())
}

/// Toy observable set for the Haar check on `n` system qubits plus the
/// ancilla: a few overlapping `Z`/`X` strings on the first two qubits.
pub fn haar_toy_observable(n: usize) -> CliResult<ObservableSum> {
    if n < 2 {
        return Err(CliError::Config("haar check needs at least 2 system qubits".into()));
    }
    let pad = |s: &str| -> CliResult<PauliString> {
        let mut full = s.to_string();
        full.push_str(&"I".repeat(n - s.len()));
        Ok(PauliString::parse(&full)?)
    };
    let terms = [(0.5, "ZZ"), (0.3, "ZI"), (0.2, "IZ"), (0.4, "XX"), (0.1, "XI")];
    let sum = ObservableSum::new(terms.iter().map(|&(c, s)| pad(s).map(|p| (c, p))).collect::<CliResult<Vec<_>>>()?)?;
    Ok(sum.extend_with_x(1.0)?)
}

/// Haar average check of the shadow variance functional with uniformly
/// random bases.
pub fn cmd_haar_check(n: usize, samples: usize, seed: u64) -> CliResult<HaarReport> {
    let ext = haar_toy_observable(n)?;
    let plan = build_classical_shadow(ext.num_qubits(), 1, &mut RandomSource::new(seed))?;
    Ok(haar_check(&ext, &plan, samples, seed)?)
}

pub fn haar_report_text(r: &HaarReport) -> String {
    format!(
        "qubits (with ancilla): {}\nsamples: {}\nmean: empirical {:.6} ± {:.6}, closed form {:.6}\n\
         variance: empirical {:.6e}, closed form {:.6e}\nnaive mean: empirical {:.6}, closed form {:.6}\n",
        r.num_qubits,
        r.samples,
        r.empirical_mean,
        r.mean_stderr,
        r.closed_mean,
        r.empirical_variance,
        r.closed_variance,
        r.naive_empirical_mean,
        r.naive_closed_mean
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Core(shadowvqs::Error::SingularM).exit_code(), 3);
        assert_eq!(CliError::Core(shadowvqs::Error::PlanRejected("XX".into())).exit_code(), 3);
        assert_eq!(CliError::Config("bad".into()).exit_code(), 2);
        assert_eq!(CliError::Core(shadowvqs::Error::EmptySample).exit_code(), 2);
    }

    #[test]
    fn builtin_sources() {
        assert_eq!(load_hamiltonian("builtin:heisenberg").unwrap().len(), 24);
        assert_eq!(load_hamiltonian("builtin:two-family").unwrap().len(), 6);
        assert!(load_hamiltonian("builtin:nope").is_err());
        assert!(matches!(load_hamiltonian("/no/such/file"), Err(CliError::Io { .. })));
    }

    #[test]
    fn haar_toy_shape() {
        let o = haar_toy_observable(3).unwrap();
        assert_eq!(o.num_qubits(), 4);
        assert!(o.paulis().iter().all(|p| p.get(0) == shadowvqs::Pauli::X));
    }
}
