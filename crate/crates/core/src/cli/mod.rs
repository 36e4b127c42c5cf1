//! Command-line entry points.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{load_csv, AnalysisConfig, Dataset, Scale, Schema, StrataTerm};
use crate::effects::{
    fit_two_step, rank_treatments_with, write_plot_data, write_ranking_csv, write_ranking_json, TwoStepFit,
};
use crate::error::{Error, Result};
use crate::ipcw::write_weights_csv;
use crate::simbench::{
    example1_contrasts, example1_design, oracle_true_ate, registry_dataset, run_coverage_experiment,
    run_ranking_experiment, simulate_dataset, CoverageSpec, RankingSpec, Scheme, SimDesign,
};

#[derive(Debug, Parser)]
#[command(name = "crgrf", version, about = "Rank binary treatments by their effect on a competing-risks outcome")]
pub struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate and rank the effects of several treatments.
    Rank(RankArgs),
    /// Estimate the effect of one treatment.
    Estimate(EstimateArgs),
    /// Write a simulated dataset as CSV.
    Simulate(SimulateArgs),
    /// Interval coverage over simulated replicates.
    BenchCoverage(CoverageArgs),
    /// How often each treatment ranks first over simulated replicates.
    BenchRanking(RankingArgs),
    /// Print true effects of a simulation design.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Crude,
    Net,
    Both,
}

impl ScaleArg {
    fn scales(self) -> Vec<Scale> {
        match self {
            ScaleArg::Crude => vec![Scale::Crude],
            ScaleArg::Net => vec![Scale::Net],
            ScaleArg::Both => vec![Scale::Net, Scale::Crude],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    A,
    B,
    C,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::A => Scheme::A,
            SchemeArg::B => Scheme::B,
            SchemeArg::C => Scheme::C,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub id_col: Option<String>,
    #[arg(long, default_value = "time")]
    pub time_col: String,
    #[arg(long, default_value = "status")]
    pub status_col: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub treatment_cols: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub covariate_cols: Vec<String>,
    /// Covariates holding integer-coded categories.
    #[arg(long, value_delimiter = ',')]
    pub categorical_cols: Vec<String>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let schema = Schema {
            id_col: self.id_col.clone(),
            time_col: self.time_col.clone(),
            status_col: self.status_col.clone(),
            treatment_cols: self.treatment_cols.clone(),
            covariate_cols: self.covariate_cols.clone(),
            categorical_cols: self.categorical_cols.clone(),
        };
        load_csv(&self.input, &schema)
    }
}

#[derive(Debug, Args)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 200)]
    pub trees: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub min_node_size: usize,
    #[arg(long, default_value_t = 0.5)]
    pub subsample_fraction: f64,
    /// Grow and populate leaves on the same rows.
    #[arg(long)]
    pub no_honesty: bool,
    #[arg(long, default_value_t = 0.01)]
    pub weight_floor: f64,
    /// Trees per half-sample group.
    #[arg(long, default_value_t = 4)]
    pub group_size: usize,
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
}

impl ForestArgs {
    fn apply(&self, c: &mut AnalysisConfig) {
        c.trees = self.trees;
        c.seed = self.seed;
        c.min_node_size = self.min_node_size;
        c.subsample_fraction = self.subsample_fraction;
        c.honesty = !self.no_honesty;
        c.weight_floor = self.weight_floor;
        c.group_size = self.group_size;
        c.mtry = self.mtry;
        c.ci_level = self.ci_level;
    }
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Time horizon of the risk difference.
    #[arg(long)]
    pub horizon: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub scale: ScaleArg,
    /// Weight strata: `treatment` for the analysed treatment, or column
    /// names of treatments and categorical covariates. Pass an empty
    /// string for no strata.
    #[arg(long, value_delimiter = ',', default_value = "treatment")]
    pub strata: Vec<String>,
    /// Covariates offered to the forest; all by default.
    #[arg(long, value_delimiter = ',')]
    pub forest_covariates: Option<Vec<String>>,
    #[command(flatten)]
    pub forest: ForestArgs,
}

impl AnalysisArgs {
    fn config(&self) -> Result<AnalysisConfig> {
        let mut c = AnalysisConfig::new(self.horizon);
        c.strata = self
            .strata
            .iter()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(StrataTerm::parse)
            .collect();
        c.forest_covariates = self.forest_covariates.clone();
        self.forest.apply(&mut c);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Treatments to rank; all treatment columns by default.
    #[arg(long, value_delimiter = ',')]
    pub treatments: Option<Vec<String>>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write each forest as JSON.
    #[arg(long)]
    pub dump_model: bool,
    /// Also write the weight curves and per-record weights.
    #[arg(long)]
    pub dump_curves: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub treatment: String,
    /// Output directory; estimates are printed as JSON either way.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, requires = "out")]
    pub dump_model: bool,
    #[arg(long, requires = "out")]
    pub dump_curves: bool,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// `builtin` or a design file.
    #[arg(long, default_value = "builtin")]
    pub design: String,
}

impl DesignArgs {
    fn load(&self) -> Result<SimDesign> {
        if self.design == "builtin" {
            Ok(SimDesign::builtin())
        } else {
            SimDesign::load(&self.design)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    /// The configured simulation design.
    Design,
    /// Two treatments with constant hazards and 20% censoring.
    Example1,
    /// Registry-shaped drug data.
    Registry,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "design")]
    pub generator: Generator,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Sample size; the design's own by default.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the design as TOML next to the data.
    #[arg(long)]
    pub write_design: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Replicate datasets; `--seed` seeds the whole run.
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "a")]
    pub scheme: Vec<SchemeArg>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "a1,a2,a3")]
    pub treatments: Vec<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub scale: ScaleArg,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankingArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Replicate datasets; `--seed` seeds the whole run.
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "b")]
    pub scheme: Vec<SchemeArg>,
    /// Sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "200,1000")]
    pub n: Vec<usize>,
    #[arg(long, value_enum, default_value = "both")]
    pub scale: ScaleArg,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Closed-form contrasts of the two-treatment constant-hazard example.
    #[arg(long)]
    pub example1: bool,
    /// Time points for `--example1`.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1")]
    pub t: Vec<f64>,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Treatment of the design; all by default.
    #[arg(long)]
    pub treatment: Option<String>,
    /// Horizon; the design's own by default.
    #[arg(long)]
    pub horizon: Option<f64>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return 2;
        }
        // a second build in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut stdout = std::io::stdout().lock();
    match run(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                3
            }
        }
    }
}

pub fn run<W: Write>(command: Command, out: &mut W) -> Result<()> {
    match command {
        Command::Rank(a) => cmd_rank(&a, out),
        Command::Estimate(a) => cmd_estimate(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::BenchCoverage(a) => cmd_bench_coverage(&a, out),
        Command::BenchRanking(a) => cmd_bench_ranking(&a, out),
        Command::Oracle(a) => cmd_oracle(&a, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn treatment_index(data: &Dataset, name: &str) -> Result<usize> {
    data.treatment_index(name)
        .ok_or_else(|| Error::Config(format!("unknown treatment {name}")))
}

fn dump_fit(dir: &Path, fit: &TwoStepFit, data: &Dataset, model: bool, curves: bool) -> Result<()> {
    let stem = format!("{}_{}", fit.estimate.scale, fit.estimate.treatment);
    if model {
        let mut w = create(&dir.join(format!("model_{stem}.json")))?;
        fit.model.write_json(&mut w)?;
        w.flush()?;
    }
    if curves {
        fit.censoring.write_csv(create(&dir.join(format!("censoring_{stem}.csv")))?)?;
        if let Some(g2) = &fit.competing {
            g2.write_csv(create(&dir.join(format!("competing_{stem}.csv")))?)?;
        }
        write_weights_csv(data, &fit.outcomes, create(&dir.join(format!("weights_{stem}.csv")))?)?;
    }
    Ok(())
}

pub fn cmd_rank<W: Write>(a: &RankArgs, out: &mut W) -> Result<()> {
    let config = a.analysis.config()?;
    let data = a.data.load()?;
    let treatments: Vec<usize> = match &a.treatments {
        Some(names) => names.iter().map(|n| treatment_index(&data, n)).collect::<Result<_>>()?,
        None => (0..data.k()).collect(),
    };
    fs::create_dir_all(&a.out)?;
    for scale in a.analysis.scale.scales() {
        let table = rank_treatments_with(&data, &treatments, scale, &config, |fit| {
            if a.dump_model || a.dump_curves {
                dump_fit(&a.out, fit, &data, a.dump_model, a.dump_curves)?;
            }
            Ok(())
        })?;
        let mut w = create(&a.out.join(format!("ranking_{scale}.csv")))?;
        write_ranking_csv(&table, &mut w)?;
        w.flush()?;
        let mut w = create(&a.out.join(format!("ranking_{scale}.json")))?;
        write_ranking_json(&table, &mut w)?;
        w.flush()?;
        let mut w = create(&a.out.join(format!("plot_{scale}.csv")))?;
        write_plot_data(&table, &mut w)?;
        w.flush()?;
        writeln!(out, "{scale} scale, horizon {}", config.horizon)?;
        for e in &table.entries {
            let x = &e.estimate;
            writeln!(
                out,
                "  {:<12} {:>10.6} [{:.6}, {:.6}] {}",
                x.treatment,
                x.ate,
                x.ci_low,
                x.ci_high,
                e.direction.as_str()
            )?;
        }
        for s in &table.skipped {
            writeln!(out, "  {:<12} skipped: {}", s.treatment, s.reason)?;
        }
    }
    Ok(())
}

pub fn cmd_estimate<W: Write>(a: &EstimateArgs, out: &mut W) -> Result<()> {
    let config = a.analysis.config()?;
    let data = a.data.load()?;
    let k = treatment_index(&data, &a.treatment)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
    }
    for scale in a.analysis.scale.scales() {
        let fit = fit_two_step(&data, k, scale, &config)?;
        let json = serde_json::json!({
            "estimate": fit.estimate,
            "direction": fit.estimate.direction(),
            "floored_weights": fit.floored,
            "usable_trees": fit.model.usable_trees(),
            "fallback_points": fit.fallback_points,
        });
        writeln!(out, "{json}")?;
        if let Some(dir) = &a.out {
            let mut w = create(&dir.join(format!("estimate_{scale}_{}.json", a.treatment)))?;
            serde_json::to_writer_pretty(&mut w, &json)?;
            w.flush()?;
            dump_fit(dir, &fit, &data, a.dump_model, a.dump_curves)?;
        }
    }
    Ok(())
}

pub fn cmd_simulate<W: Write>(a: &SimulateArgs, out: &mut W) -> Result<()> {
    let data = match a.generator {
        Generator::Design => {
            let mut d = a.design.load()?;
            if let Some(n) = a.n {
                d.n = n;
            }
            if let Some(p) = &a.write_design {
                fs::write(p, d.to_toml())?;
            }
            simulate_dataset(&d, a.seed)?
        }
        Generator::Example1 => {
            let d = example1_design(a.n.unwrap_or(4000), 0.2);
            if let Some(p) = &a.write_design {
                fs::write(p, d.to_toml())?;
            }
            simulate_dataset(&d, a.seed)?
        }
        Generator::Registry => registry_dataset(a.n.unwrap_or(5000), a.seed)?,
    };
    let mut w = create(&a.out)?;
    crate::dataset::write_csv(&data, &mut w)?;
    w.flush()?;
    let c = data.event_counts();
    writeln!(
        out,
        "wrote {} records ({} events, {} competing, {} censored) to {}",
        data.n(),
        c.event,
        c.competing,
        c.censored,
        a.out.display()
    )?;
    Ok(())
}

fn bench_config(forest: &ForestArgs, horizon: f64) -> Result<AnalysisConfig> {
    let mut c = AnalysisConfig::new(horizon);
    forest.apply(&mut c);
    c.validate()?;
    Ok(c)
}

pub fn cmd_bench_coverage<W: Write>(a: &CoverageArgs, out: &mut W) -> Result<()> {
    let mut design = a.design.load()?;
    if let Some(n) = a.n {
        design.n = n;
    }
    let config = bench_config(&a.forest, design.horizon)?;
    let spec = CoverageSpec {
        replicates: a.replicates,
        schemes: a.scheme.iter().map(|&s| s.into()).collect(),
        treatments: a.treatments.clone(),
        scales: a.scale.scales(),
        seed: a.forest.seed,
    };
    let report = run_coverage_experiment(&design, &spec, &config)?;
    fs::create_dir_all(&a.out)?;
    report.write_csv(create(&a.out.join("coverage.csv"))?)?;
    let mut w = create(&a.out.join("coverage.json"))?;
    report.write_json(&mut w)?;
    w.flush()?;
    for r in &report.rows {
        writeln!(
            out,
            "scheme {} {:<4} {:<5} truth {:>9.6} mean {:>9.6} sd {:.6} se {:.6} coverage {:.3}",
            r.scheme, r.treatment, r.scale, r.truth, r.mean_estimate, r.sd_estimate, r.mean_se, r.coverage
        )?;
    }
    Ok(())
}

pub fn cmd_bench_ranking<W: Write>(a: &RankingArgs, out: &mut W) -> Result<()> {
    let design = a.design.load()?;
    let config = bench_config(&a.forest, design.horizon)?;
    let spec = RankingSpec {
        replicates: a.replicates,
        n_grid: a.n.clone(),
        schemes: a.scheme.iter().map(|&s| s.into()).collect(),
        scales: a.scale.scales(),
        seed: a.forest.seed,
    };
    let report = run_ranking_experiment(&design, &spec, &config)?;
    fs::create_dir_all(&a.out)?;
    report.write_csv(create(&a.out.join("ranking_fractions.csv"))?)?;
    let mut w = create(&a.out.join("ranking_fractions.json"))?;
    report.write_json(&mut w)?;
    w.flush()?;
    for r in &report.rows {
        writeln!(out, "n {:<6} scheme {} {:<5} {:<4} {:.3}", r.n, r.scheme, r.scale, r.treatment, r.fraction)?;
    }
    Ok(())
}

pub fn cmd_oracle<W: Write>(a: &OracleArgs, out: &mut W) -> Result<()> {
    if a.example1 {
        writeln!(out, "t,a1,a2")?;
        for &t in &a.t {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("time {t} must be non-negative")));
            }
            let (d1, d2) = example1_contrasts(t);
            writeln!(out, "{t},{d1},{d2}")?;
        }
        return Ok(());
    }
    let design = a.design.load()?;
    let horizon = a.horizon.unwrap_or(design.horizon);
    let ks: Vec<usize> = match &a.treatment {
        Some(name) => vec![design
            .treatment_index(name)
            .ok_or_else(|| Error::Config(format!("design has no treatment {name}")))?],
        None => (0..design.treatments.len()).collect(),
    };
    writeln!(out, "treatment,net,crude")?;
    for k in ks {
        let net = oracle_true_ate(&design, k, Scale::Net, horizon)?;
        let crude = oracle_true_ate(&design, k, Scale::Crude, horizon)?;
        writeln!(out, "{},{net},{crude}", design.treatments[k].name)?;
    }
    Ok(())
}
