//! `relex`: the distant-supervision pipeline as file-to-file subcommands.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "relex", version, about = "Distant-supervision relation extraction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load the KB (and optionally a corpus and Brown clusters) and report problems.
    LoadCheck(LoadCheckArgs),
    /// Build a Bloom filter over every KB fact.
    BuildBloom(BuildBloomArgs),
    /// Label entity pairs in a parsed corpus for one or more relations.
    Annotate(AnnotateArgs),
    /// Turn labeled pairs into feature-token examples.
    Featurize(FeaturizeArgs),
    /// Train a classifier on featurized examples.
    Train(TrainArgs),
    /// Score featurized examples with a trained model.
    Predict(PredictArgs),
    /// Precision, recall and F of a model on featurized examples.
    Evaluate(EvaluateArgs),
    /// Run an experiment plan end to end and write report files.
    Experiment(ExperimentArgs),
    /// Write a synthetic fixture (KB, corpus, Brown clusters, gold mentions).
    GenFixture(GenFixtureArgs),
}

/// KB file locations. `--kb DIR` means `DIR/{triples,denotations,signatures,urls}.tsv`;
/// the single-file flags override it.
#[derive(Args, Debug, Clone)]
struct KbArgs {
    /// Directory holding triples.tsv, denotations.tsv, signatures.tsv and urls.tsv.
    #[arg(long, value_name = "DIR")]
    kb: Option<PathBuf>,
    /// Triples file: subject, relation, object.
    #[arg(long, value_name = "FILE")]
    triples: Option<PathBuf>,
    /// Denotations file: entity, surface string.
    #[arg(long, value_name = "FILE")]
    denotations: Option<PathBuf>,
    /// Relation signatures: relation, left class, right class, literal flag.
    #[arg(long, value_name = "FILE")]
    signatures: Option<PathBuf>,
    /// Page URL to main entity map.
    #[arg(long, value_name = "FILE")]
    urls: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LoadCheckArgs {
    #[command(flatten)]
    kb: KbArgs,
    /// CoNLL-U corpus directory to validate.
    #[arg(long, value_name = "DIR")]
    corpus: Option<PathBuf>,
    /// Brown cluster file to validate.
    #[arg(long, value_name = "FILE")]
    brown: Option<PathBuf>,
    /// Exit with a data error if any KB line is malformed.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct BuildBloomArgs {
    #[command(flatten)]
    kb: KbArgs,
    /// Target false-positive rate.
    #[arg(long, default_value_t = 0.001)]
    fpr: f64,
    /// Hash seed stored in the filter header.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AnnotateArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// Relation id; repeat or comma-separate for several.
    #[arg(long, required = true, value_delimiter = ',')]
    relation: Vec<String>,
    /// Bloom filter file; exact lookup when absent.
    #[arg(long, value_name = "FILE")]
    bloom: Option<PathBuf>,
    /// Negative groups kept per positive group.
    #[arg(long, default_value_t = 4.0)]
    negative_ratio: f64,
    /// KB hops around the page's main entity for the gazetteer.
    #[arg(long, default_value_t = 1)]
    hops: usize,
    /// Maximum interior nodes on the dependency path.
    #[arg(long, default_value_t = 5)]
    max_path_len: usize,
    /// Drop pairs whose path occurs fewer times corpus-wide.
    #[arg(long)]
    min_path_freq: Option<usize>,
    /// Negative sampling seed.
    #[arg(long)]
    seed: u64,
    /// Worker threads for page annotation (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Labeled pairs, JSON Lines.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Source {
    /// Dependency path between the entities.
    Path,
    /// All words of the sentence.
    Sentence,
    /// Only the two entity tokens.
    Entities,
}

#[derive(Args, Debug)]
struct FeaturizeArgs {
    #[command(flatten)]
    kb: KbArgs,
    /// Labeled pairs from `annotate`.
    #[arg(long, value_name = "FILE")]
    pairs: PathBuf,
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    brown: PathBuf,
    #[arg(long)]
    no_brown: bool,
    #[arg(long)]
    no_lemma: bool,
    #[arg(long)]
    no_pos: bool,
    /// Drop dependency labels and direction marks.
    #[arg(long)]
    no_dep: bool,
    /// Drop the X and Y entity tokens.
    #[arg(long)]
    no_entities: bool,
    /// Add the tokens just before X and just after Y.
    #[arg(long)]
    satellites: bool,
    #[arg(long, value_enum, default_value_t = Source::Path)]
    source: Source,
    #[arg(long, default_value_t = 5)]
    max_path_len: usize,
    #[arg(long)]
    min_path_freq: Option<usize>,
    /// Keep only the k most frequent supports of each pair.
    #[arg(long, value_name = "K")]
    top_k: Option<usize>,
    /// One example per support instead of one per pair.
    #[arg(long)]
    ungrouped: bool,
    /// Featurized examples, JSON Lines.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModelArg {
    Ngram,
    Maxent,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Featurized examples from `featurize`.
    #[arg(long, value_name = "FILE")]
    examples: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Seed for initialization and example order.
    #[arg(long)]
    seed: u64,
    /// N-gram model: hidden dimension.
    #[arg(long, default_value_t = 100)]
    dim: usize,
    /// N-gram model: hash buckets for n-grams.
    #[arg(long, default_value_t = 2_000_000)]
    buckets: u64,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    /// N-gram model: initial learning rate, decayed linearly to zero.
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    /// N-gram model: longest token n-gram.
    #[arg(long, default_value_t = 4)]
    ngram_order: usize,
    /// MaxEnt: Gaussian prior variance.
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// MaxEnt: L-BFGS iteration limit.
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// MaxEnt: gradient-norm stopping tolerance.
    #[arg(long, default_value_t = 1e-5)]
    grad_tol: f64,
    /// MaxEnt: count repeated tokens instead of binary presence.
    #[arg(long)]
    counts: bool,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    examples: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Predictions, JSON Lines.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    examples: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Also write the scores as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Plan file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    plan: PathBuf,
    /// Worker threads for grid cells; overrides the plan.
    #[arg(long)]
    jobs: Option<usize>,
    /// Report directory; overrides the plan.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FixtureKind {
    /// People, places and music with planted mixed supports.
    World,
    /// Ambiguous generic-word denotations for label-noise measurement.
    Noise,
}

#[derive(Args, Debug)]
struct GenFixtureArgs {
    #[arg(long, value_enum)]
    kind: FixtureKind,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RELEX_LOG", "info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
