//! Experiment plan files: `key = value` lines, `#` comments. Relative paths
//! are resolved against the plan file's directory.
//!
//! ```text
//! kb.triples = kb/triples.tsv
//! kb.denotations = kb/denotations.tsv
//! kb.signatures = kb/signatures.tsv
//! kb.urls = kb/urls.tsv
//! corpus = corpus/
//! brown = brown.txt
//! output = out/
//! relations = P19, P31
//! seed = 42
//! ```

use std::path::{Path, PathBuf};

use super::matrix::{MatrixSettings, Variant};
use crate::annotate::AnnotateOptions;
use crate::classify::{FeatureMode, ModelKind};
use crate::error::{Error, Result};
use crate::kb::{KbPaths, RelationId};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub kb: KbPaths,
    pub corpus: PathBuf,
    pub brown: PathBuf,
    /// Pre-labeled pairs (JSON Lines); when absent the corpus is annotated.
    pub pairs: Option<PathBuf>,
    pub output: PathBuf,
    pub relations: Vec<RelationId>,
    /// Use Bloom-filter fact lookup at this false-positive rate instead of
    /// exact lookup.
    pub bloom_fpr: Option<f64>,
    pub seed: u64,
    pub annotate: AnnotateOptions,
    pub matrix: MatrixSettings,
}

fn list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

impl ExperimentPlan {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    /// Parse plan text; `origin` names the source in errors and `base` is
    /// the directory relative paths are resolved against.
    pub fn parse(text: &str, origin: &Path, base: &Path) -> Result<Self> {
        let resolve = |v: &str| {
            let p = Path::new(v);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let mut kb = KbPaths::default();
        let mut triples = None;
        let mut corpus = None;
        let mut brown = None;
        let mut output = None;
        let mut relations = None;
        let mut seed = None;
        let mut pairs = None;
        let mut bloom_fpr = None;
        let mut annotate = AnnotateOptions::default();
        let mut matrix = MatrixSettings::default();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::parse(origin, line_no, msg);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            macro_rules! num {
                () => {
                    value
                        .parse()
                        .map_err(|_| err(format!("invalid value {value:?} for {key}")))?
                };
            }
            match key {
                "kb.triples" => triples = Some(resolve(value)),
                "kb.denotations" => kb.denotations = Some(resolve(value)),
                "kb.signatures" => kb.signatures = Some(resolve(value)),
                "kb.urls" => kb.url_map = Some(resolve(value)),
                "corpus" => corpus = Some(resolve(value)),
                "brown" => brown = Some(resolve(value)),
                "pairs" => pairs = Some(resolve(value)),
                "output" => output = Some(resolve(value)),
                "relations" => relations = Some(list(value).into_iter().map(RelationId::from).collect::<Vec<_>>()),
                "seed" => seed = Some(num!()),
                "models" => {
                    matrix.models = list(value)
                        .into_iter()
                        .map(str::parse::<ModelKind>)
                        .collect::<Result<_>>()
                        .map_err(|e| err(e.to_string()))?
                }
                "variants" => {
                    matrix.variants = list(value)
                        .into_iter()
                        .map(str::parse::<Variant>)
                        .collect::<Result<_>>()
                        .map_err(|e| err(e.to_string()))?
                }
                "train" => matrix.sizes.train = num!(),
                "val" => matrix.sizes.val = num!(),
                "test" => matrix.sizes.test = num!(),
                "trials" => matrix.trials = num!(),
                "threshold" => matrix.threshold = num!(),
                "jobs" => matrix.jobs = num!(),
                "sweep" => {
                    matrix.sweep = list(value)
                        .into_iter()
                        .map(|v| v.parse().map_err(|_| err(format!("invalid sweep point {v:?}"))))
                        .collect::<Result<_>>()?
                }
                "negative_ratio" => annotate.negative_ratio = num!(),
                "hops" => annotate.hops = num!(),
                "max_path_len" => annotate.max_path_len = num!(),
                "min_path_freq" => annotate.min_path_freq = Some(num!()),
                "bloom_fpr" => bloom_fpr = Some(num!()),
                "ngram.dim" => matrix.classifier.ngram.dim = num!(),
                "ngram.buckets" => matrix.classifier.ngram.bucket_count = num!(),
                "ngram.epochs" => matrix.classifier.ngram.epochs = num!(),
                "ngram.lr" => matrix.classifier.ngram.learning_rate = num!(),
                "ngram.order" => matrix.classifier.ngram.ngram_order = num!(),
                "maxent.sigma2" => matrix.classifier.maxent.sigma2 = num!(),
                "maxent.max_iter" => matrix.classifier.maxent.max_iter = num!(),
                "maxent.mode" => {
                    matrix.classifier.maxent.mode = match value {
                        "presence" => FeatureMode::Presence,
                        "count" => FeatureMode::Count,
                        _ => return Err(err(format!("maxent.mode must be presence or count, got {value:?}"))),
                    }
                }
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }

        let missing = |k: &str| Error::parse(origin, 0, format!("missing required key {k}"));
        kb.triples = triples.ok_or_else(|| missing("kb.triples"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;
        let relations: Vec<RelationId> = relations.ok_or_else(|| missing("relations"))?;
        if relations.is_empty() {
            return Err(missing("relations"));
        }
        annotate.seed = seed;
        matrix.seed = seed;
        matrix.classifier.ngram.seed = seed;
        matrix.base_features.max_path_len = annotate.max_path_len;
        matrix.base_features.min_path_freq = annotate.min_path_freq;
        matrix.classifier.ngram.validate()?;
        Ok(ExperimentPlan {
            kb,
            corpus: corpus.ok_or_else(|| missing("corpus"))?,
            brown: brown.ok_or_else(|| missing("brown"))?,
            pairs,
            output: output.ok_or_else(|| missing("output"))?,
            relations,
            bloom_fpr,
            seed,
            annotate,
            matrix,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "kb.triples = kb/t.tsv\ncorpus = c\nbrown = b.txt\noutput = out\nrelations = P19, P31\nseed = 7\n";

    #[test]
    fn minimal_plan_uses_defaults() {
        let p = ExperimentPlan::parse(MINIMAL, Path::new("plan.cfg"), Path::new("/data")).unwrap();
        assert_eq!(p.kb.triples, PathBuf::from("/data/kb/t.tsv"));
        assert_eq!(p.relations, vec![RelationId::from("P19"), RelationId::from("P31")]);
        assert_eq!(p.matrix.trials, 3);
        assert_eq!(p.matrix.threshold, 0.5);
        assert_eq!(p.matrix.sizes.train, 50_000);
        assert_eq!(p.matrix.variants.len(), 5);
        assert_eq!(p.annotate.seed, 7);
        assert_eq!(p.annotate.negative_ratio, 4.0);
    }

    #[test]
    fn overrides() {
        let text = format!(
            "{MINIMAL}# comment\nvariants = ablation\nmodels = maxent\ntrials = 1\nsweep = 10, 20\nngram.dim = 20\nmaxent.mode = count\noutput = /abs/out\n"
        );
        let p = ExperimentPlan::parse(&text, Path::new("plan.cfg"), Path::new("/data")).unwrap();
        assert_eq!(p.matrix.variants, vec![Variant::Ablation]);
        assert_eq!(p.matrix.models, vec![ModelKind::MaxEnt]);
        assert_eq!(p.matrix.sweep, vec![10, 20]);
        assert_eq!(p.matrix.classifier.ngram.dim, 20);
        assert_eq!(p.matrix.classifier.maxent.mode, FeatureMode::Count);
        assert_eq!(p.output, PathBuf::from("/abs/out"));
    }

    #[test]
    fn errors_name_the_line() {
        let text = format!("{MINIMAL}trials = many\n");
        let err = ExperimentPlan::parse(&text, Path::new("plan.cfg"), Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 7, .. }), "{err}");
        let err = ExperimentPlan::parse("colour = blue\n", Path::new("p"), Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = ExperimentPlan::parse("corpus = c\n", Path::new("p"), Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("kb.triples"));
    }
}
