use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use efc::construct::{ConstructConfig, FeatureKinds};
use efc::data::{load_arff, load_csv, write_arff, write_csv, Dataset};
use efc::explain::{get_explanations, select_explanation_instances, ClassChoice, ExplainConfig, ExplanationMatrix};
use efc::groups::collect_groups;
use efc::model::{train_random_forest, ClassifierKind, ForestParams};
use efc::pipeline::{
    benchmark_report, cross_validate, run_efc, run_exhaustive, BenchSpec, ConstructionMode, EfcConfig, EfcResult,
    RunStatus,
};
use efc::synth::{generate, SynthName, SyntheticSpec};
use efc::ErrorCategory;

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

#[derive(Parser)]
#[command(name = "efc", version, about = "Feature construction guided by prediction explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct features inside explanation-mined attribute groups.
    Run(RunArgs),
    /// Construct features over one group holding every attribute.
    Exhaustive {
        #[command(flatten)]
        run: RunArgs,
        /// Wall-clock budget in seconds.
        #[arg(long, default_value_t = 10800)]
        budget_secs: u64,
    },
    /// Cross-validate a classifier with per-fold feature construction.
    Cv(CvArgs),
    /// Generate a synthetic benchmark dataset.
    Synth {
        #[arg(long)]
        name: SynthName,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; `.arff` selects ARFF, anything else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Explain instances of one class with a random forest.
    Explain {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        explain: ExplainArgs,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Explanation matrix as CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine attribute groups from an explanation matrix.
    Groups {
        /// Explanation matrix written by `efc explain`.
        #[arg(long)]
        explanations: PathBuf,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// Write the groups as JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate a grid of synthetic datasets, classifiers and modes.
    Bench {
        /// Comma-separated dataset names (default: the ten benchmark concepts).
        #[arg(long, value_delimiter = ',')]
        datasets: Vec<SynthName>,
        #[arg(long, value_delimiter = ',', default_value = "dt,nb,rf")]
        classifiers: Vec<ClassifierKind>,
        #[arg(long, value_delimiter = ',', default_value = "base,log,rel,cart,drthr,all,fs")]
        modes: Vec<ConstructionMode>,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Input {
    /// Dataset file, CSV or ARFF (by extension).
    #[arg(long)]
    data: PathBuf,
    /// Class attribute name (default: last column).
    #[arg(long)]
    class: Option<String>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 0.1)]
    thr_l: f64,
    #[arg(long, default_value_t = 0.8)]
    thr_u: f64,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 0.01)]
    noise_thr: f64,
}

#[derive(Args)]
struct ExplainArgs {
    /// Class to explain, by label (default: minority class).
    #[arg(long)]
    explain_class: Option<String>,
    #[arg(long, default_value_t = 500)]
    max_explain: usize,
    #[arg(long, default_value_t = 0.1)]
    inst_thr: f64,
    /// Permutation samples per explained instance.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[command(flatten)]
    explain: ExplainArgs,
    #[arg(long, default_value_t = 0.6)]
    cf: f64,
    #[arg(long)]
    pci: Option<f64>,
    /// Equal-width cells for numeric logical operands.
    #[arg(long, default_value_t = 4)]
    bins: usize,
    /// Feature kinds: log,rel,cart,num,rule,thr or all.
    #[arg(long, default_value = "log,rel,cart,rule,thr")]
    kinds: FeatureKinds,
    /// Drop features scoring below this.
    #[arg(long, default_value_t = 0.0)]
    min_score: f64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    construct: ConstructArgs,
    #[arg(long, value_enum, default_value_t = Format::Arff)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    /// Dataset file; alternatively use --synth.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    data: Option<PathBuf>,
    #[arg(long)]
    class: Option<String>,
    /// Synthetic dataset name.
    #[arg(long)]
    synth: Option<SynthName>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value = "dt")]
    classifier: ClassifierKind,
    #[arg(long, default_value = "base")]
    construct: ConstructionMode,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[command(flatten)]
    options: ConstructArgs,
    /// Write per-fold results as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Arff,
    Csv,
}

fn load(input: &Input) -> Result<Dataset> {
    load_path(&input.data, input.class.as_deref())
}

fn load_path(path: &Path, class: Option<&str>) -> Result<Dataset> {
    let is_arff = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("arff"));
    let ds = if is_arff { load_arff(path, class) } else { load_csv(path, class, &HashMap::new()) };
    ds.with_context(|| format!("loading {}", path.display()))
}

fn explain_config(args: &ExplainArgs, ds: &Dataset) -> Result<ExplainConfig> {
    let class = match &args.explain_class {
        None => ClassChoice::Minority,
        Some(label) => match ds.class_attribute().value_index(label) {
            Some(c) => ClassChoice::Index(c),
            None => return Err(efc::Error::InvalidConfig(format!("unknown class label `{}`", label)).into()),
        },
    };
    Ok(ExplainConfig {
        class,
        max_to_explain: args.max_explain,
        inst_thr: args.inst_thr,
        samples_per_attribute: args.samples,
        seed: 0,
    })
}

fn efc_config(args: &ConstructArgs, ds: &Dataset) -> Result<EfcConfig> {
    Ok(EfcConfig {
        thr_l: args.thresholds.thr_l,
        thr_u: args.thresholds.thr_u,
        step: args.thresholds.step,
        noise_thr: args.thresholds.noise_thr,
        min_score: args.min_score,
        construct: ConstructConfig {
            kinds: args.kinds,
            cf: args.cf,
            pci: args.pci,
            bins: args.bins,
            ..Default::default()
        },
        explain: explain_config(&args.explain, ds)?,
        forest: ForestParams { tree_count: args.trees, ..Default::default() },
        seed: args.seed,
        groups_override: None,
        time_budget: None,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_outputs(res: &EfcResult, ds: &Dataset, format: Format, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let features: Vec<serde_json::Value> = res
        .features
        .iter()
        .map(|s| {
            serde_json::json!({
                "name": s.feature.render(ds.attributes()),
                "kind": s.feature.kind_name(),
                "key": s.feature.key(),
                "score": s.score,
                "group": s.feature.source_group,
                "feature": s.feature,
            })
        })
        .collect();
    let groups: Vec<serde_json::Value> = res
        .groups
        .iter()
        .map(|g| {
            let names: Vec<&str> = g.attrs.iter().map(|&a| ds.attributes()[a].name.as_str()).collect();
            serde_json::json!({ "attributes": names, "support": g.support, "threshold": g.threshold })
        })
        .collect();
    let doc = serde_json::json!({
        "status": format!("{:?}", res.status),
        "class": ds.class_attribute().values()[res.class_index],
        "explained_instances": res.explained_instances,
        "candidates": res.candidates.len(),
        "groups": groups,
        "features": features,
        "fingerprint": res.fingerprint(),
    });
    let mut w = create(&dir.join("features.json"))?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;

    match format {
        Format::Arff => write_arff(&res.enriched, create(&dir.join("enriched.arff"))?)?,
        Format::Csv => write_csv(&res.enriched, create(&dir.join("enriched.csv"))?)?,
    }

    let t = &res.timings;
    let mut w = create(&dir.join("timings.csv"))?;
    writeln!(w, "phase,ms")?;
    for (phase, ms) in [
        ("train", t.train_ms),
        ("explain", t.explain_ms),
        ("groups", t.groups_ms),
        ("construct", t.construct_ms),
        ("evaluate", t.evaluate_ms),
        ("total", t.total_ms),
    ] {
        writeln!(w, "{},{:.3}", phase, ms)?;
    }
    w.flush()?;
    Ok(())
}

fn summarize(res: &EfcResult, ds: &Dataset) {
    println!(
        "{} groups, {} candidates, {} features kept in {:.0} ms",
        res.groups.len(),
        res.candidates.len(),
        res.features.len(),
        res.timings.total_ms
    );
    for s in res.features.iter().take(10) {
        println!("{:>8.4}  {}", s.score, s.feature.render(ds.attributes()));
    }
}

fn finish(res: &EfcResult) -> u8 {
    match res.status {
        RunStatus::TimedOut => {
            log::warn!("time budget exhausted; no features were kept");
            EXIT_TIMEOUT
        }
        RunStatus::NoGroups => {
            log::warn!("no attribute groups found; dataset returned unchanged");
            0
        }
        RunStatus::Completed => 0,
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run(args) => {
            let ds = load(&args.input)?;
            let cfg = efc_config(&args.construct, &ds)?;
            let res = run_efc(&ds, &cfg)?;
            write_outputs(&res, &ds, args.format, &args.out)?;
            summarize(&res, &ds);
            Ok(finish(&res))
        }
        Command::Exhaustive { run, budget_secs } => {
            let ds = load(&run.input)?;
            let cfg =
                EfcConfig { time_budget: Some(Duration::from_secs(budget_secs)), ..efc_config(&run.construct, &ds)? };
            let res = run_exhaustive(&ds, &cfg)?;
            write_outputs(&res, &ds, run.format, &run.out)?;
            summarize(&res, &ds);
            Ok(finish(&res))
        }
        Command::Cv(args) => {
            let ds = match (&args.data, args.synth) {
                (Some(path), _) => load_path(path, args.class.as_deref())?,
                (None, Some(name)) => generate(&SyntheticSpec::new(name, args.n, args.options.seed))?,
                (None, None) => bail!(efc::Error::InvalidConfig("need --data or --synth".into())),
            };
            let cfg = efc_config(&args.options, &ds)?;
            let r = cross_validate(&ds, args.classifier, args.construct, args.folds, args.options.seed, &cfg)?;
            if let Some(path) = &args.out {
                let mut w = create(path)?;
                writeln!(w, "fold,accuracy,features,construct_ms")?;
                for k in 0..r.fold_accuracies.len() {
                    writeln!(
                        w,
                        "{},{:.6},{},{:.3}",
                        k, r.fold_accuracies[k], r.fold_feature_counts[k], r.fold_construct_ms[k]
                    )?;
                }
                w.flush()?;
            }
            println!(
                "{} {}: accuracy {:.2} +- {:.2} over {} folds{}",
                args.classifier.as_str(),
                args.construct,
                100.0 * r.mean_accuracy(),
                100.0 * r.std_accuracy(),
                args.folds,
                if r.stratified { "" } else { " (not stratified)" }
            );
            Ok(0)
        }
        Command::Synth { name, n, seed, out } => {
            let ds = generate(&SyntheticSpec::new(name, n, seed))?;
            if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("arff")) {
                write_arff(&ds, create(&out)?)?;
            } else {
                write_csv(&ds, create(&out)?)?;
            }
            println!("{} instances, {} attributes -> {}", ds.n_instances(), ds.n_attributes(), out.display());
            Ok(0)
        }
        Command::Explain { input, explain, trees, seed, out } => {
            let ds = load(&input)?;
            let cfg = ExplainConfig { seed, ..explain_config(&explain, &ds)? };
            let (class, instances) = select_explanation_instances(&ds, &cfg)?;
            let model = train_random_forest(&ds, &ForestParams { tree_count: trees, seed, ..Default::default() })?;
            let e = get_explanations(&ds, &model, class, &instances, &cfg)?;
            e.write_csv(create(&out)?)?;
            println!(
                "explained {} instances of class {} -> {}",
                e.n_rows(),
                ds.class_attribute().values()[class],
                out.display()
            );
            Ok(0)
        }
        Command::Groups { explanations, thresholds: t, out } => {
            let file = File::open(&explanations).with_context(|| format!("opening {}", explanations.display()))?;
            let e = ExplanationMatrix::read_csv(file)?;
            let groups = collect_groups(&e, t.thr_l, t.thr_u, t.step, t.noise_thr)?;
            let doc: Vec<serde_json::Value> = groups
                .iter()
                .map(|g| {
                    let names: Vec<&str> = g.attrs.iter().map(|&a| e.attribute_names[a].as_str()).collect();
                    serde_json::json!({ "attributes": names, "support": g.support, "threshold": g.threshold })
                })
                .collect();
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    serde_json::to_writer_pretty(&mut w, &doc)?;
                    writeln!(w)?;
                    w.flush()?;
                }
                None => println!("{}", serde_json::to_string_pretty(&doc)?),
            }
            Ok(0)
        }
        Command::Bench { datasets, classifiers, modes, n, folds, seed, out } => {
            let spec = BenchSpec {
                datasets: if datasets.is_empty() { SynthName::BENCHMARK.to_vec() } else { datasets },
                n,
                classifiers,
                modes,
                folds,
                seed,
                efc: EfcConfig::default(),
            };
            benchmark_report(&spec, Some(&out))?;
            print!("{}", fs::read_to_string(out.join("report.txt"))?);
            Ok(0)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<efc::Error>()) {
        Some(e) if e.category() == ErrorCategory::Config => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("EFC_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {}", e);
                }
            }
            _ => {
                eprintln!("error: EFC_THREADS must be a positive integer, got `{}`", v);
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {:#}", err);
            ExitCode::from(exit_code(&err))
        }
    }
}
