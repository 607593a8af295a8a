//! Acceptance suite. Each check prints one `PASS` or `FAIL` line; the
//! process exits non-zero if any check fails.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relex_core::annotate::{annotate_corpus, annotate_page, group_counts, AnnotateOptions, Label, LabeledPair};
use relex_core::classify::{
    train_maxent, ClassifierConfig, FeatureMode, MaxEntConfig, MaxEntProblem, Model, ModelKind, TrainConfig,
};
use relex_core::conllu::{read_corpus_dir, Corpus, ParsedSentence, Span, Token};
use relex_core::eval::report::to_tsv_string;
use relex_core::eval::{evaluate, mean_std, run_experiment, run_trials, ExperimentPlan, KeySplit, SplitSizes};
use relex_core::fact_index::build_bloom;
use relex_core::features::{
    extract_path, featurize, group_supports, span_head, BrownClusters, Direction, FeatureConfig, FeaturizedExample,
};
use relex_core::gazetteer::Gazetteer;
use relex_core::kb::{load_kb, Fact, KbConfig, KbPaths, KnowledgeBase, RelationId};
use relex_core::synth::read_gold;

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

struct Loaded {
    kb: KnowledgeBase,
    corpus: Corpus,
    clusters: BrownClusters,
}

fn load(name: &str) -> Loaded {
    let dir = fixture(name);
    let paths = KbPaths {
        triples: dir.join("kb/triples.tsv"),
        denotations: Some(dir.join("kb/denotations.tsv")),
        signatures: Some(dir.join("kb/signatures.tsv")),
        url_map: Some(dir.join("kb/urls.tsv")),
    };
    let (kb, report) = load_kb(&paths, KbConfig::default()).expect("fixture KB loads");
    assert!(report.malformed.is_empty(), "malformed KB rows in {name}");
    Loaded {
        kb,
        corpus: Corpus::new(read_corpus_dir(&dir.join("corpus")).expect("fixture corpus loads")),
        clusters: BrownClusters::load(&dir.join("brown.txt")).expect("fixture clusters load"),
    }
}

fn annotate(w: &Loaded, relation: &str, ratio: f64) -> Vec<LabeledPair> {
    let opts = AnnotateOptions {
        negative_ratio: ratio,
        ..AnnotateOptions::default()
    };
    annotate_corpus(&w.corpus, &w.kb, &RelationId::from(relation), None, &opts)
        .expect("annotation succeeds")
        .0
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bloom_filter() -> Outcome {
    let start = Instant::now();
    let facts: Vec<Fact> = (0..100_000u64)
        .map(|i| Fact::new(format!("Q{i}"), format!("P{}", i % 97), format!("Q{}", 5_000_000 + i * 31)))
        .collect();
    let filter = build_bloom(&facts, 0.001, 17).map_err(|e| e.to_string())?;
    let false_negatives = facts.iter().filter(|f| !filter.contains_fact(f)).count();
    let absent = 1_000_000u64;
    let hits = (0..absent)
        .filter(|i| filter.contains_fact(&Fact::new(format!("Q{i}"), "P_absent", format!("Q{}", i * 7))))
        .count();
    let fpr = hits as f64 / absent as f64;
    let secs = start.elapsed().as_secs_f64();
    check(
        false_negatives == 0 && (0.0005..=0.0015).contains(&fpr) && secs < 30.0,
        format!("false negatives {false_negatives}, empirical FPR {fpr:.5} (want 0.0005..0.0015), {secs:.1}s (want < 30s)"),
    )
}

fn golden_features() -> Outcome {
    let g = load("golden");
    let expected = std::fs::read_to_string(fixture("golden/expected_features.txt")).unwrap();
    let pairs = annotate(&g, "starred_in", 4.0);
    let examples = featurize(&pairs, &g.corpus, &g.clusters, &g.kb, &FeatureConfig::default())
        .map_err(|e| e.to_string())?;
    let ex = examples
        .iter()
        .find(|e| e.x.as_str() == "Q32215" && e.y.as_str() == "Q17738")
        .ok_or("no example for (Carrie Fisher, starred in, Star Wars)")?;
    let got = ex.features.join(" ");
    check(
        got == expected.trim() && ex.label == 1 && ex.n_supports == 2,
        format!("{} tokens, {} supports, label {}: {got}", ex.features.len(), ex.n_supports, ex.label),
    )
}

fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> ParsedSentence {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n + 1];
    for k in 1..n {
        heads[order[k]] = order[rng.gen_range(0..k)];
    }
    let tokens = (1..=n)
        .map(|i| {
            let deprel = if heads[i] == 0 { "ROOT".to_owned() } else { format!("d{}", rng.gen_range(0..4)) };
            Token::new(i, &format!("w{i}"), &format!("l{i}"), "NOUN", heads[i], &deprel)
        })
        .collect();
    ParsedSentence {
        doc_url: "tree".into(),
        sent_id: "0".into(),
        tokens,
    }
}

fn random_span(rng: &mut ChaCha8Rng, n: usize) -> Span {
    let start = rng.gen_range(1..=n);
    let end = (start + rng.gen_range(0..3)).min(n);
    Span::new(start, end)
}

/// Breadth-first search over the undirected tree from X's head to Y's head;
/// directions follow depth relative to the shallowest node on the path.
fn oracle_path(s: &ParsedSentence, x: Span, y: Span) -> Option<Vec<(usize, Direction)>> {
    if x.overlaps(&y) {
        return None;
    }
    let n = s.tokens.len();
    let head_of = |sp: Span| {
        let mut h = sp.end;
        for i in sp.start..=sp.end {
            let parent = s.tokens[i - 1].head;
            if parent < sp.start || parent > sp.end {
                h = i;
            }
        }
        h
    };
    let (from, to) = (head_of(x), head_of(y));
    if from == to {
        return None;
    }
    let mut adj = vec![Vec::new(); n + 1];
    for t in &s.tokens {
        if t.head != 0 {
            adj[t.index].push(t.head);
            adj[t.head].push(t.index);
        }
    }
    let mut prev = vec![usize::MAX; n + 1];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut nodes = vec![to];
    while *nodes.last().unwrap() != from {
        nodes.push(prev[*nodes.last().unwrap()]);
    }
    nodes.reverse();
    let depth = |mut i: usize| {
        let mut d = 0;
        while s.tokens[i - 1].head != 0 {
            i = s.tokens[i - 1].head;
            d += 1;
        }
        d
    };
    let top = (0..nodes.len()).min_by_key(|&k| depth(nodes[k])).unwrap();
    Some(
        nodes
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let d = match k.cmp(&top) {
                    std::cmp::Ordering::Less => Direction::Up,
                    std::cmp::Ordering::Equal => Direction::Lca,
                    std::cmp::Ordering::Greater => Direction::Down,
                };
                (i, d)
            })
            .collect(),
    )
}

fn path_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 1000;
    let mut agree = 0;
    let mut with_path = 0;
    let mut first_mismatch = None;
    for t in 0..trials {
        let n = rng.gen_range(2..=12);
        let s = random_tree(&mut rng, n);
        let (x, y) = loop {
            let (x, y) = (random_span(&mut rng, n), random_span(&mut rng, n));
            if !x.overlaps(&y) {
                break (x, y);
            }
        };
        let got = extract_path(&s, x, y, None).map_err(|e| e.to_string())?;
        let got_nodes: Option<Vec<(usize, Direction)>> =
            got.as_ref().map(|p| p.iter().map(|node| (node.token, node.direction)).collect());
        let want = oracle_path(&s, x, y);
        let lemmas_ok = got.as_ref().map_or(true, |p| {
            let last = p.len() - 1;
            p.iter().enumerate().all(|(k, node)| match k {
                0 => node.lemma == "X" && node.token == span_head(&s, x),
                k if k == last => node.lemma == "Y" && node.token == span_head(&s, y),
                _ => node.lemma == s.token(node.token).lemma,
            })
        });
        if got_nodes == want && lemmas_ok {
            agree += 1;
            with_path += usize::from(want.is_some());
        } else if first_mismatch.is_none() {
            first_mismatch = Some(t);
        }
    }
    check(
        agree == trials,
        format!("{agree}/{trials} trees agree ({with_path} with a path){}", match first_mismatch {
            Some(t) => format!(", first mismatch at tree {t}"),
            None => String::new(),
        }),
    )
}

fn noise_direction() -> Outcome {
    let w = load("noise");
    let gold: HashSet<(String, String, Span, String)> = read_gold(&fixture("noise/gold_mentions.tsv"))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|g| (g.doc_url, g.sent_id, g.span, g.entity.to_string()))
        .collect();
    let relation = RelationId::from("P31");
    let (global, _) = Gazetteer::global_baseline(&w.kb);
    let is_gold = |p: &LabeledPair, span: Span, e: &str| {
        gold.contains(&(p.doc_url.clone(), p.sent_id.clone(), span, e.to_owned()))
    };
    let rate = |pairs: &[LabeledPair]| {
        let positives: Vec<&LabeledPair> = pairs.iter().filter(|p| p.label == Label::Positive).collect();
        let false_pos = positives
            .iter()
            .filter(|p| !is_gold(p, p.x_span, p.x.as_str()) || !is_gold(p, p.y_span, p.y.as_str()))
            .count();
        (false_pos, positives.len())
    };
    let (mut page_fp, mut page_n, mut global_fp, mut global_n) = (0, 0, 0, 0);
    for doc in w.corpus.documents() {
        let (page, _) = Gazetteer::for_page(&w.kb, &doc.url, 1).map_err(|e| e.to_string())?;
        let (fp, n) = rate(&annotate_page(&doc.sentences, &page, &relation, &w.kb, None));
        page_fp += fp;
        page_n += n;
        let (fp, n) = rate(&annotate_page(&doc.sentences, &global, &relation, &w.kb, None));
        global_fp += fp;
        global_n += n;
    }
    let page_rate = page_fp as f64 / page_n.max(1) as f64;
    let global_rate = global_fp as f64 / global_n.max(1) as f64;
    let sentences = w.corpus.num_sentences();
    check(
        sentences >= 1000 && page_n > 0 && page_rate <= 0.02 && global_rate > 0.20,
        format!(
            "{sentences} sentences; page gazetteer FP {page_fp}/{page_n} = {:.2}% (want <= 2%), global FP {global_fp}/{global_n} = {:.2}% (want > 20%)",
            100.0 * page_rate,
            100.0 * global_rate
        ),
    )
}

fn negative_ratio() -> Outcome {
    let w = load("world");
    let mut lines = Vec::new();
    let mut ok = true;
    for relation in ["P19", "P551", "P31", "P527", "P175", "P155"] {
        let available = group_counts(&annotate(&w, relation, 1e12));
        let sampled = group_counts(&annotate(&w, relation, 4.0));
        let key = RelationId::from(relation);
        let (pos_all, neg_all) = available.get(&key).copied().unwrap_or((0, 0));
        let (pos, neg) = sampled.get(&key).copied().unwrap_or((0, 0));
        let want = neg_all.min((4.0 * pos as f64).round() as usize);
        ok &= pos == pos_all && neg == want && pos > 0;
        lines.push(format!("{relation} {pos}+/{neg}- (available {neg_all}, want {want})"));
    }
    check(ok, lines.join("; "))
}

fn world_examples(relation: &str) -> Vec<FeaturizedExample> {
    let w = load("world");
    let pairs = annotate(&w, relation, 4.0);
    featurize(&pairs, &w.corpus, &w.clusters, &w.kb, &FeatureConfig::default()).expect("featurize")
}

fn maxent_checks() -> Outcome {
    let examples = world_examples("P19");
    let subset: Vec<FeaturizedExample> = examples.iter().take(120).cloned().collect();
    let (problem, _) = MaxEntProblem::new(&subset, FeatureMode::Presence, 1.0).map_err(|e| e.to_string())?;
    let dim = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut grad = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    for _ in 0..20 {
        let mut theta: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        problem.value_and_gradient(&theta, &mut grad);
        for i in 0..dim {
            let orig = theta[i];
            theta[i] = orig + h;
            let up = problem.value_and_gradient(&theta, &mut scratch);
            theta[i] = orig - h;
            let down = problem.value_and_gradient(&theta, &mut scratch);
            theta[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }

    let cfg = MaxEntConfig::default();
    let model = train_maxent(&examples, &cfg).map_err(|e| e.to_string())?;
    let trace = model.objective_trace();
    let monotone = trace.windows(2).all(|w| w[1] <= w[0]);

    let split = KeySplit::new(examples.iter().map(|e| e.key()), SplitSizes { train: 4000, val: 0, test: 1000 }, 5)
        .map_err(|e| e.to_string())?
        .apply(&examples, None);
    let classifier = ClassifierConfig {
        maxent: cfg,
        ..ClassifierConfig::default()
    };
    let trials = run_trials(ModelKind::MaxEnt, &split.train, &split.test, &classifier, 3, 7, 0.5)
        .map_err(|e| e.to_string())?;
    let f: Vec<f64> = trials.iter().map(|t| t.f_score).collect();
    let (_, std) = mean_std(&f);
    check(
        worst <= 1e-4 && monotone && trace.len() > 1 && std == 0.0,
        format!(
            "max relative gradient error {worst:.2e} over 20 points x {dim} coordinates (want <= 1e-4); objective monotone over {} iterations: {monotone}; F over 3 trials {f:?}, std {std}",
            trace.len()
        ),
    )
}

fn classifier_sanity() -> Outcome {
    let examples = world_examples("P19");
    let split = KeySplit::new(examples.iter().map(|e| e.key()), SplitSizes { train: 4000, val: 0, test: 1000 }, 5)
        .map_err(|e| e.to_string())?
        .apply(&examples, None);
    let cfg = ClassifierConfig {
        ngram: TrainConfig {
            seed: 1,
            ..TrainConfig::default()
        },
        ..ClassifierConfig::default()
    };
    let start = Instant::now();
    let ngram = Model::train(ModelKind::Ngram, &split.train, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let f_ngram = evaluate(&ngram, &split.test, 0.5).map_err(|e| e.to_string())?.f_score();
    let maxent = Model::train(ModelKind::MaxEnt, &split.train, &cfg).map_err(|e| e.to_string())?;
    let f_maxent = evaluate(&maxent, &split.test, 0.5).map_err(|e| e.to_string())?.f_score();
    check(
        f_ngram >= 0.95 && secs < 60.0 && f_maxent >= 0.90,
        format!(
            "{} examples ({} train / {} test); n-gram F {f_ngram:.4} in {} epochs, {secs:.1}s (want >= 0.95, < 60s); MaxEnt F {f_maxent:.4} (want >= 0.90)",
            examples.len(),
            split.train.len(),
            split.test.len(),
            cfg.ngram.epochs
        ),
    )
}

fn grouping_identity() -> Outcome {
    let w = load("world");
    let pairs = annotate(&w, "P19", 4.0);
    let cfg = FeatureConfig::default();
    let groups = group_supports(&pairs, &w.corpus, &w.clusters, &w.kb, &cfg).map_err(|e| e.to_string())?;
    let flat = featurize(&pairs, &w.corpus, &w.clusters, &w.kb, &cfg).map_err(|e| e.to_string())?;
    let mut structural = flat.len() == groups.len();
    for (g, f) in groups.iter().zip(&flat) {
        let mut expected = vec![format!("{}/{}", g.x_surface, g.x_brown)];
        for s in &g.supports {
            expected.extend(s.rendered.iter().cloned());
        }
        expected.push(format!("{}/{}", g.y_surface, g.y_brown));
        structural &= f.features == expected && f.n_supports == g.supports.len();
    }
    let multi = groups.iter().filter(|g| g.supports.len() > 1).count();

    let single: BTreeSet<_> = groups.iter().filter(|g| g.supports.len() == 1).map(|g| g.key()).collect();
    let single_pairs: Vec<LabeledPair> = pairs.iter().filter(|p| single.contains(&p.key())).cloned().collect();
    let grouped = featurize(&single_pairs, &w.corpus, &w.clusters, &w.kb, &cfg).map_err(|e| e.to_string())?;
    let ungrouped_cfg = FeatureConfig {
        grouped: false,
        ..cfg.clone()
    };
    let ungrouped =
        featurize(&single_pairs, &w.corpus, &w.clusters, &w.kb, &ungrouped_cfg).map_err(|e| e.to_string())?;
    let split = KeySplit::new(grouped.iter().map(|e| e.key()), SplitSizes { train: 2000, val: 0, test: 600 }, 3)
        .map_err(|e| e.to_string())?;
    let classifier = ClassifierConfig::default();
    let mut scores = BTreeMap::new();
    for (name, examples) in [("grouped", &grouped), ("ungrouped", &ungrouped)] {
        let parts = split.apply(examples, None);
        for kind in [ModelKind::Ngram, ModelKind::MaxEnt] {
            let model = Model::train(kind, &parts.train, &classifier).map_err(|e| e.to_string())?;
            let f = evaluate(&model, &parts.test, 0.5).map_err(|e| e.to_string())?.f_score();
            scores.insert((kind.as_str(), name), f);
        }
    }
    let same = ["ngram", "maxent"]
        .iter()
        .all(|k| scores[&(*k, "grouped")].to_bits() == scores[&(*k, "ungrouped")].to_bits());
    check(
        structural && multi > 0 && same,
        format!(
            "{} groups ({multi} with several supports) equal X + concatenated supports + Y: {structural}; {} single-support groups, F grouped/ungrouped n-gram {:.4}/{:.4}, MaxEnt {:.4}/{:.4}",
            groups.len(),
            single.len(),
            scores[&("ngram", "grouped")],
            scores[&("ngram", "ungrouped")],
            scores[&("maxent", "grouped")],
            scores[&("maxent", "ungrouped")],
        ),
    )
}

fn experiment_matrix() -> Outcome {
    let dir = fixture("world");
    let out = tempfile::tempdir().unwrap();
    let text = format!(
        "kb.triples = kb/triples.tsv\n\
         kb.denotations = kb/denotations.tsv\n\
         kb.signatures = kb/signatures.tsv\n\
         kb.urls = kb/urls.tsv\n\
         corpus = corpus\n\
         brown = brown.txt\n\
         output = {}\n\
         relations = P19, P31, P527\n\
         seed = 11\n\
         variants = ablation\n\
         train = 800\n\
         val = 100\n\
         test = 300\n\
         trials = 3\n\
         ngram.dim = 20\n\
         ngram.buckets = 100000\n",
        out.path().display()
    );
    let plan = ExperimentPlan::parse(&text, Path::new("acceptance.plan"), &dir).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let first = run_experiment(&plan).map_err(|e| e.to_string())?.reports;
    let mut parallel_plan = plan.clone();
    parallel_plan.matrix.jobs = 4;
    let second = run_experiment(&parallel_plan).map_err(|e| e.to_string())?.reports;
    let secs = start.elapsed().as_secs_f64();

    let mut rows: BTreeMap<(String, &str), Vec<String>> = BTreeMap::new();
    for r in &first {
        rows.entry((r.relation.to_string(), r.model.as_str())).or_default().push(r.setting.clone());
    }
    let shape_ok = rows.len() == 6
        && rows.values().all(|s| {
            s.len() == 8 && s.iter().any(|x| x == "xy-only") && s.iter().any(|x| x == "full-sentence")
        });
    let finite = first.iter().all(|r| r.f_score.is_finite() && r.trials.len() == 3);
    let reproducible = to_tsv_string(&first) == to_tsv_string(&second);
    let full: Vec<String> = first
        .iter()
        .filter(|r| r.setting == "full" || r.setting == "xy-only" || r.setting == "full-sentence")
        .map(|r| format!("{}/{}/{}={:.3}", r.relation, r.model, r.setting, r.f_score))
        .collect();
    check(
        shape_ok && finite && reproducible,
        format!(
            "{} rows ({} relation/model pairs x 8 settings: {shape_ok}); identical across runs with 1 and 4 jobs: {reproducible}; {secs:.1}s; {}",
            first.len(),
            rows.len(),
            full.join(" ")
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("bloom filter", bloom_filter),
        ("golden feature string", golden_features),
        ("path oracle", path_oracle),
        ("distant-supervision noise", noise_direction),
        ("negative ratio", negative_ratio),
        ("maxent gradient, monotonicity, trial spread", maxent_checks),
        ("classifier sanity", classifier_sanity),
        ("grouping identity", grouping_identity),
        ("experiment matrix", experiment_matrix),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
