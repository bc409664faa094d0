//! Acceptance suite: eleven end-to-end checks covering transform fidelity,
//! transform safety properties, metric correctness, training gradients,
//! ensemble structure, the ensemble-beats-individuals experiment, pipeline
//! determinism, and external-corpus ingestion. Each test prints one
//! `acceptance NN (<name>): pass` line (visible with `--nocapture`); a
//! failing criterion panics instead, so a pass line is never printed for it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mpcs::artifact::sha256_hex;
use mpcs::formats::read_corpus;
use mpcs_core::ast::parse_method;
use mpcs_core::corpus::{
    build_perspective_dataset, plain_pairs, AugmentOptions, PairExample, Perspective, Provenance,
};
use mpcs_core::encoder::{EncodedExample, EncoderModel, Optimizer, Pooling, TrainConfig};
use mpcs_core::ensemble::{EnsembleConfig, EnsembleModel};
use mpcs_core::metrics::{evaluate, mrr, rank, success_rate_at_k, RankingResult};
use mpcs_core::permute::{permute_statements, swap_candidates, PermutePolicy};
use mpcs_core::rename::{apply_rename, rename_variables, RenameOrder};
use mpcs_core::synth::random_method;
use mpcs_core::vocab::Vocab;

fn pass(number: u32, name: &str) {
    println!("acceptance {number:02} ({name}): pass");
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Byte comparison modulo whitespace.
fn squeeze(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Tiny self-contained deterministic generator for test randomness.
struct Lcg(u64);

impl Lcg {
    fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(2685821657736338717).wrapping_add(1))
    }
    fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 ^ (self.0 >> 31)
    }
    fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n.max(1)
    }
    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

// --- goldens: HTML-entity replacement method, before/after renaming ---

const RENAME_INPUT: &str = "public static String replaceHtmlEntities(String content, Map<String, Character> map) {\n    for (Entry<String, Character> entry : escapeStrings.entrySet()) {\n      if (content.indexOf(entry.getKey()) != -1) {\n        content = content.replace(entry.getKey(), String.valueOf(entry.getValue()));\n      }\n    }\n    return content;\n  }";

const RENAME_GOLDEN: &str = "public static String replaceHtmlEntities(String var0, Map<String, Character> var2) {\n    for (Entry<String, Character> var1 : escapeStrings.entrySet()) {\n      if (var0.indexOf(var1.getKey()) != -1) {\n        var0 = var0.replace(var1.getKey(), String.valueOf(var1.getValue()));\n      }\n    }\n    return var0;\n }";

// --- goldens: AES-encryption method, before/after one statement swap ---

const PERMUTE_INPUT: &str = "public void doAESEncryption() throws Exception{\n\t\tif(!initAESDone) \n\t\t\tinitAES();\n\t\tcipher = Cipher.getInstance(\"AES/CBC/PKCS5Padding\");\n\t\t//System.out.println(secretKey.getEncoded());\n\t\tcipher.init(Cipher.ENCRYPT_MODE, secretKey);\n\t\tAlgorithmParameters params = cipher.getParameters();\n\t\tiv = params.getParameterSpec(IvParameterSpec.class).getIV();\n\t\tsecretCipher = cipher.doFinal(secretPlain);\n\t\tclearPlain();\n\t}";

const PERMUTE_GOLDEN: &str = "public void doAESEncryption() throws Exception{\n\t\tif(!initAESDone)\n\t\t\tinitAES();\n\t\tcipher = Cipher.getInstance(\"AES/CBC/PKCS5Padding\");\n\t\t//System.out.println(secretKey.getEncoded());\n\t\tAlgorithmParameters params = cipher.getParameters();\n\t\tcipher.init(Cipher.ENCRYPT_MODE, secretKey);\n\t\tiv = params.getParameterSpec(IvParameterSpec.class).getIV();\n\t\tsecretCipher = cipher.doFinal(secretPlain);\n\t\tclearPlain();\n\t}";

#[test]
fn acceptance_01_rename_golden_mapping() {
    let started = Instant::now();
    let ast = parse_method(RENAME_INPUT).unwrap();
    let renamed = rename_variables(&ast, RenameOrder::default()).unwrap();

    let mapping: BTreeMap<&str, &str> = renamed
        .map
        .entries
        .iter()
        .map(|e| (e.from.as_str(), e.to.as_str()))
        .collect();
    assert_eq!(mapping.get("content"), Some(&"var0"));
    assert_eq!(mapping.get("entry"), Some(&"var1"));
    assert_eq!(mapping.get("map"), Some(&"var2"));
    assert_eq!(mapping.len(), 3, "exactly the three locals are renamed");

    assert_eq!(
        squeeze(&renamed.ast.source),
        squeeze(RENAME_GOLDEN),
        "renamed source must equal the golden output modulo whitespace"
    );
    assert!(started.elapsed().as_secs_f64() < 1.0, "must finish within 1 s");
    pass(1, "rename golden mapping");
}

#[test]
fn acceptance_02_permutation_golden_swap() {
    let started = Instant::now();
    let ast = parse_method(PERMUTE_INPUT).unwrap();
    let variants = permute_statements(&ast, PermutePolicy::All, 0, false).unwrap();
    assert!(!variants.is_empty(), "the method has swappable statements");

    let golden = squeeze(PERMUTE_GOLDEN);
    assert!(
        variants.iter().any(|v| squeeze(&v.source) == golden),
        "all-variants output must include the golden statement swap"
    );
    assert!(started.elapsed().as_secs_f64() < 1.0, "must finish within 1 s");
    pass(2, "permutation golden swap");
}

#[test]
fn acceptance_03_rename_invertibility() {
    let mut nontrivial = 0usize;
    for i in 0..1000u64 {
        let source = random_method(404, i);
        let ast = parse_method(&source).unwrap();
        let renamed = rename_variables(&ast, RenameOrder::default()).unwrap();
        if !renamed.map.is_identity() {
            nontrivial += 1;
        }
        let restored = apply_rename(&renamed.ast, &renamed.map.inverted()).unwrap();
        assert_eq!(
            restored.ast.source, source,
            "inverse rename must restore snippet {i} byte-for-byte"
        );
    }
    assert!(
        nontrivial > 500,
        "most generated snippets should rename non-trivially (got {nontrivial})"
    );
    pass(3, "rename invertibility on 1000 snippets");
}

#[test]
fn acceptance_04_permutation_safety() {
    let mut variants_checked = 0usize;
    for i in 0..1000u64 {
        let source = random_method(404, i);
        let ast = parse_method(&source).unwrap();
        let pre = swap_candidates(&ast, false);
        for variant in permute_statements(&ast, PermutePolicy::All, 0, false).unwrap() {
            // Pre-swap order: the emitted pair must be among the
            // independence-checked candidates of the input.
            assert!(
                pre.iter().any(|c| c.block == variant.candidate.block
                    && c.index == variant.candidate.index),
                "snippet {i}: emitted swap is not an independent candidate"
            );
            // Post-swap order: re-analyze the variant; the same adjacent
            // pair (now reversed) must still be independent.
            let swapped_ast = parse_method(&variant.source).unwrap();
            let post = swap_candidates(&swapped_ast, false);
            assert!(
                post.iter().any(|c| c.block == variant.candidate.block
                    && c.index == variant.candidate.index),
                "snippet {i}: swapped pair is not independent in post-swap order"
            );
            variants_checked += 1;
        }
    }
    assert!(
        variants_checked > 500,
        "expected a substantial variant population (got {variants_checked})"
    );
    pass(4, "permutation safety on 1000 snippets");
}

#[test]
fn acceptance_05_metric_oracle() {
    // Hand-checked case: ranks 1, 2, 4.
    let hand: Vec<RankingResult> = [1usize, 2, 4]
        .iter()
        .enumerate()
        .map(|(i, &frank)| RankingResult {
            query_id: format!("q{i}"),
            frank,
            ranked_ids: Vec::new(),
        })
        .collect();
    let hand_mrr = mrr(&hand);
    assert!((hand_mrr - (1.0 + 0.5 + 0.25) / 3.0).abs() < 1e-15);
    assert!((hand_mrr - 0.58333).abs() < 1e-5);
    assert!((success_rate_at_k(&hand, 1) - 1.0 / 3.0).abs() < 1e-15);
    assert!((success_rate_at_k(&hand, 1) - 0.33333).abs() < 1e-5);
    assert!((success_rate_at_k(&hand, 5) - 1.0).abs() < 1e-15);

    // 50 random instances, compared against a from-scratch recomputation.
    let mut rng = Lcg::new(17);
    for instance in 0..50u64 {
        let queries = 1 + rng.below(20) as usize;
        let distractors = rng.below(11) as usize;
        let mut results = Vec::new();
        let mut expected_franks = Vec::new();
        for q in 0..queries {
            let query = format!("query {instance} {q}");
            let mut candidates = Vec::new();
            let mut scores: BTreeMap<String, f64> = BTreeMap::new();
            for j in 0..=distractors {
                let id = format!("c{j:02}");
                let code = format!("snippet {instance} {q} {j}");
                scores.insert(format!("{query}\u{1}{code}"), rng.unit());
                candidates.push((id, code));
            }
            let correct = rng.below(candidates.len() as u64) as usize;
            let correct_id = candidates[correct].0.clone();

            let by_key = scores.clone();
            let scorer = move |q: &str, c: &str| by_key[&format!("{q}\u{1}{c}")];
            let result = rank(&scorer, &query, &correct_id, &candidates).unwrap();

            // Independent recomputation: sort score-descending, id-ascending.
            let mut order: Vec<(f64, &str)> = candidates
                .iter()
                .map(|(id, code)| (scores[&format!("{query}\u{1}{code}")], id.as_str()))
                .collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            let frank = order.iter().position(|(_, id)| *id == correct_id).unwrap() + 1;
            assert_eq!(result.frank, frank, "instance {instance} query {q}");
            expected_franks.push(frank);
            results.push(result);
        }
        for k in 1..=12usize {
            let brute = expected_franks.iter().filter(|&&f| f <= k).count() as f64
                / expected_franks.len() as f64;
            assert!(
                (success_rate_at_k(&results, k) - brute).abs() <= 1e-12,
                "instance {instance}: success@{k} diverges from brute force"
            );
        }
        let brute_mrr = expected_franks.iter().map(|&f| 1.0 / f as f64).sum::<f64>()
            / expected_franks.len() as f64;
        assert!((mrr(&results) - brute_mrr).abs() <= 1e-12);
    }
    pass(5, "metric oracle equivalence");
}

#[test]
fn acceptance_06_metric_bounds() {
    let mut rng = Lcg::new(23);
    for report in 0..1000u64 {
        let n = 1 + rng.below(40) as usize;
        let worst = 1 + rng.below(50);
        let results: Vec<RankingResult> = (0..n)
            .map(|i| RankingResult {
                query_id: format!("q{i}"),
                frank: 1 + rng.below(worst) as usize,
                ranked_ids: Vec::new(),
            })
            .collect();
        let m = mrr(&results);
        assert!((0.0..=1.0).contains(&m), "report {report}: mrr out of range");
        let mut previous = 0.0;
        for k in 1..=20usize {
            let s = success_rate_at_k(&results, k);
            assert!(
                (0.0..=1.0).contains(&s),
                "report {report}: success@{k} out of range"
            );
            assert!(
                s + 1e-15 >= previous,
                "report {report}: success@{k} not monotone"
            );
            previous = s;
        }
        assert!(
            m + 1e-15 >= success_rate_at_k(&results, 1),
            "report {report}: mrr below success@1"
        );
    }
    pass(6, "metric bounds on 1000 reports");
}

fn check_encoder_gradients(pooling: Pooling) {
    let docs = [
        vec![String::from("count"), String::from("alpha")],
        vec![String::from("omega"), String::from("count")],
        vec![String::from("beta")],
    ];
    let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), 1);
    let mut model = EncoderModel::new(vocab, 6, pooling, 16, "grad", 5).unwrap();
    let n = model.parameter_count();
    for i in 0..n {
        let bump = 0.01 * ((i % 7) as f64 - 3.0);
        model.set_param(i, model.get_param(i) + bump);
    }
    let batch = vec![
        EncodedExample {
            ids: model.encode_pair_ids("count alpha", "alpha count beta"),
            label: 1,
        },
        EncodedExample {
            ids: model.encode_pair_ids("count omega", "alpha count"),
            label: 0,
        },
        EncodedExample {
            ids: model.encode_pair_ids("omega", "omega beta omega"),
            label: 1,
        },
    ];
    let (_, analytic) = model.loss_and_flat_grad(&batch);
    let step = 1e-4;
    let mut informative = 0usize;
    for i in 0..n {
        let orig = model.get_param(i);
        model.set_param(i, orig + step);
        let (up, _) = model.loss_and_flat_grad(&batch);
        model.set_param(i, orig - step);
        let (down, _) = model.loss_and_flat_grad(&batch);
        model.set_param(i, orig);
        let numeric = (up - down) / (2.0 * step);
        let denom = analytic[i].abs().max(numeric.abs());
        if denom > 1e-8 {
            let rel = (analytic[i] - numeric).abs() / denom;
            assert!(
                rel < 1e-3,
                "{} param {i}: analytic {} vs numeric {numeric}",
                model.pooling.as_str(),
                analytic[i]
            );
            informative += 1;
        } else {
            assert!((analytic[i] - numeric).abs() < 1e-8);
        }
    }
    assert!(informative * 2 > n, "most parameters should carry gradient");
}

fn tiny_member(tag: &str, dim: usize, seed: u64) -> EncoderModel {
    let docs = [
        vec![String::from("alpha"), String::from("omega")],
        vec![String::from("count"), String::from("value")],
    ];
    let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), 1);
    EncoderModel::new(vocab, dim, Pooling::Mean, 16, tag, seed).unwrap()
}

fn check_mlp_gradients() {
    let members = vec![tiny_member("a", 3, 1), tiny_member("b", 4, 2)];
    let mut model = EnsembleModel::new(members, Some(5), 9).unwrap();
    let n = model.mlp_parameter_count();
    // Deterministic parameter pattern; hidden-layer biases sit at +0.5 so
    // every rectifier stays active and clear of its kink within the probe
    // step (a dead unit would hide its parameters from the check).
    let (w1_len, b1_len) = (5 * model.input_dim(), 5);
    for i in 0..n {
        let value = if (w1_len..w1_len + b1_len).contains(&i) {
            0.5
        } else {
            0.03 * ((i % 9) as f64 - 4.0)
        };
        model.set_mlp_param(i, value);
    }
    let mut rng = Lcg::new(31);
    let features: Vec<(Vec<f64>, u8)> = (0..12)
        .map(|i| {
            let x: Vec<f64> = (0..model.input_dim()).map(|_| rng.unit() - 0.5).collect();
            (x, (i % 2) as u8)
        })
        .collect();
    let (_, analytic) = model.mlp_loss_and_flat_grad(&features);
    let step = 1e-4;
    let mut informative = 0usize;
    for i in 0..n {
        let orig = model.get_mlp_param(i);
        model.set_mlp_param(i, orig + step);
        let (up, _) = model.mlp_loss_and_flat_grad(&features);
        model.set_mlp_param(i, orig - step);
        let (down, _) = model.mlp_loss_and_flat_grad(&features);
        model.set_mlp_param(i, orig);
        let numeric = (up - down) / (2.0 * step);
        let denom = analytic[i].abs().max(numeric.abs());
        if denom > 1e-8 {
            let rel = (analytic[i] - numeric).abs() / denom;
            assert!(
                rel < 1e-3,
                "mlp param {i}: analytic {} vs numeric {numeric}",
                analytic[i]
            );
            informative += 1;
        } else {
            assert!((analytic[i] - numeric).abs() < 1e-8);
        }
    }
    assert!(informative * 2 > n, "most parameters should carry gradient");
}

#[test]
fn acceptance_07_gradient_checks() {
    check_encoder_gradients(Pooling::Mean);
    check_encoder_gradients(Pooling::Attention);
    check_mlp_gradients();
    pass(7, "gradient checks");
}

fn member_param_hash(model: &EncoderModel) -> String {
    let mut bytes = Vec::new();
    for part in [
        model.embedding(),
        model.attn(),
        model.head_w(),
        model.head_b(),
    ] {
        for v in part {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    sha256_hex(&bytes)
}

fn balanced_toy_pairs() -> Vec<PairExample> {
    let mut out = Vec::new();
    for i in 0..24 {
        let (query, code) = if i % 2 == 0 {
            ("alpha count", "alpha value")
        } else {
            ("omega count", "omega value")
        };
        out.push(PairExample {
            query: String::from(query),
            code: String::from(code),
            label: 1,
            provenance: Provenance::Original,
            origin_id: format!("t{i}"),
        });
        out.push(PairExample {
            query: String::from(query),
            code: String::from(if i % 2 == 0 { "omega value" } else { "alpha value" }),
            label: 0,
            provenance: Provenance::Original,
            origin_id: format!("t{i}"),
        });
    }
    out
}

#[test]
fn acceptance_08_ensemble_shape_and_freezing() {
    let members = vec![
        tiny_member("a", 4, 1),
        tiny_member("b", 6, 2),
        tiny_member("c", 8, 3),
    ];
    let fresh = EnsembleModel::new(members.clone(), None, 7).unwrap();
    assert_eq!(
        fresh.input_dim(),
        4 + 6 + 8,
        "concatenated width must equal the sum of member widths"
    );
    assert_eq!(
        fresh.features("alpha count", "omega value").len(),
        4 + 6 + 8
    );

    let before: Vec<String> = members.iter().map(member_param_hash).collect();
    let outcome =
        EnsembleModel::train(members.clone(), &balanced_toy_pairs(), &EnsembleConfig::default(), 7)
            .unwrap();
    assert!(!outcome.model.finetuned);
    let after: Vec<String> = outcome.model.members.iter().map(member_param_hash).collect();
    assert_eq!(before, after, "default training must not touch member parameters");
    assert_eq!(outcome.model.members, members);
    pass(8, "ensemble shape and freezing");
}

#[test]
fn acceptance_09_ensemble_beats_individuals() {
    let started = Instant::now();
    let corpus = read_corpus(&data_dir().join("synthetic_corpus.jsonl")).unwrap();
    assert_eq!(corpus.len(), 600);
    let ks = [1usize, 5, 10];
    let seeds: Vec<u64> = (0..5).collect();

    let mut individual_sums = [0.0f64; 3];
    let mut ensemble_sum = 0.0f64;
    for &seed in &seeds {
        let opts = AugmentOptions::default();
        let mut members = Vec::new();
        for (slot, perspective) in Perspective::ALL.iter().enumerate() {
            let (dataset, _) =
                build_perspective_dataset(&corpus, *perspective, seed, &opts).unwrap();
            let config = TrainConfig {
                dim: 64,
                pooling: Pooling::Mean,
                max_len: 256,
                min_frequency: 1,
                learning_rate: 1e-3,
                optimizer: Optimizer::Adagrad,
                batch_size: 32,
                epochs: 10,
                clip_norm: 5.0,
            };
            let trained =
                EncoderModel::train(&dataset.examples, &config, perspective.as_str(), seed)
                    .unwrap();
            let report = evaluate(&trained.model, &corpus, 49, &ks, seed).unwrap();
            individual_sums[slot] += report.mrr;
            members.push(trained.model);
        }
        let original = plain_pairs(&corpus, seed).unwrap();
        let config = EnsembleConfig {
            hidden: None,
            finetune_members: false,
            learning_rate: 0.05,
            optimizer: Optimizer::Adagrad,
            batch_size: 32,
            epochs: 60,
            clip_norm: 5.0,
        };
        let trained = EnsembleModel::train(members, &original, &config, seed).unwrap();
        let report = evaluate(&trained.model, &corpus, 49, &ks, seed).unwrap();
        ensemble_sum += report.mrr;
    }

    let n = seeds.len() as f64;
    let individual: Vec<f64> = individual_sums.iter().map(|s| s / n).collect();
    let ensemble = ensemble_sum / n;
    let max_individual = individual.iter().cloned().fold(f64::MIN, f64::max);
    let mean_individual = individual.iter().sum::<f64>() / individual.len() as f64;
    println!(
        "  ensemble mrr {ensemble:.4} vs individuals {:.4}/{:.4}/{:.4} (max {max_individual:.4}, mean {mean_individual:.4}), {} seeds, {:.0?}",
        individual[0],
        individual[1],
        individual[2],
        seeds.len(),
        started.elapsed()
    );
    assert!(
        ensemble >= max_individual - 0.02,
        "ensemble {ensemble:.4} must reach the best individual {max_individual:.4} - 0.02"
    );
    assert!(
        ensemble >= mean_individual + 0.03,
        "ensemble {ensemble:.4} must clear the individual mean {mean_individual:.4} + 0.03"
    );
    assert!(
        started.elapsed().as_secs() < 600,
        "experiment must finish within 10 minutes"
    );
    pass(9, "ensemble beats individuals");
}

/// Runs the installed test binary, asserting success; returns stdout.
fn run_cli(dir: &Path, args: &[&str]) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_mpcs"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawning the pipeline binary");
    assert!(
        output.status.success(),
        "mpcs {args:?} failed with {:?}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

/// Every file under `dir` keyed by relative path, minus run manifests
/// (which carry wall-clock durations by design).
fn collect_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if !path.to_string_lossy().ends_with(".run.json") {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn run_pipeline(dir: &Path, mini_corpus: &str) -> (BTreeMap<String, Vec<u8>>, String, String) {
    run_cli(dir, &["ingest", "--input", mini_corpus, "--output", "corpus.jsonl"]);
    for perspective in ["structure", "variable", "api", "original"] {
        run_cli(
            dir,
            &[
                "augment",
                "--corpus",
                "corpus.jsonl",
                "--perspective",
                perspective,
                "--seed",
                "11",
                "--output",
                &format!("ds-{perspective}.jsonl"),
            ],
        );
    }
    for perspective in ["structure", "variable", "api"] {
        run_cli(
            dir,
            &[
                "train",
                "--dataset",
                &format!("ds-{perspective}.jsonl"),
                "--out-dir",
                &format!("enc-{perspective}"),
                "--seed",
                "3",
                "--dim",
                "32",
                "--epochs",
                "3",
            ],
        );
    }
    run_cli(
        dir,
        &[
            "train-ensemble",
            "--member",
            "enc-structure",
            "--member",
            "enc-variable",
            "--member",
            "enc-api",
            "--dataset",
            "ds-original.jsonl",
            "--out-dir",
            "ensemble",
            "--seed",
            "5",
            "--epochs",
            "5",
        ],
    );
    let eval_stdout = run_cli(
        dir,
        &[
            "eval",
            "--model",
            "ensemble",
            "--corpus",
            "corpus.jsonl",
            "--distractors",
            "20",
            "--seed",
            "9",
            "--output",
            "report.jsonl",
        ],
    );
    let search_stdout = run_cli(
        dir,
        &[
            "search",
            "--model",
            "ensemble",
            "--corpus",
            "corpus.jsonl",
            "--query",
            "encrypt the payload with a cipher",
            "--top",
            "3",
        ],
    );
    (collect_files(dir), eval_stdout, search_stdout)
}

#[test]
fn acceptance_10_pipeline_determinism() {
    let mini = data_dir().join("mini_corpus.jsonl");
    let mini = mini.to_str().unwrap();
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();

    let (files_a, eval_a, search_a) = run_pipeline(first.path(), mini);
    let (files_b, eval_b, search_b) = run_pipeline(second.path(), mini);

    assert_eq!(
        files_a.keys().collect::<Vec<_>>(),
        files_b.keys().collect::<Vec<_>>(),
        "both runs must produce the same file set"
    );
    for (name, bytes) in &files_a {
        assert_eq!(
            Some(bytes),
            files_b.get(name),
            "{name} differs between identically-seeded runs"
        );
    }
    assert!(files_a.contains_key("report.jsonl"));
    assert!(files_a.contains_key("ensemble/manifest.json"));
    assert_eq!(eval_a, eval_b, "eval output must be reproducible");
    assert_eq!(search_a, search_b, "search output must be reproducible");
    assert!(
        search_a.contains("m011"),
        "the cipher snippet should appear in the printed ranking"
    );
    pass(10, "pipeline determinism");
}

#[test]
fn acceptance_11_external_corpus_count() {
    let candidates = [
        data_dir().join("codesearchnet/java_test.jsonl"),
        data_dir().join("codesearchnet/java/test.jsonl"),
        data_dir().join("java_test.jsonl"),
    ];
    let Some(input) = candidates.iter().find(|p| p.exists()) else {
        println!(
            "  external Java test split not bundled (looked under {}); skipping the count check",
            data_dir().join("codesearchnet").display()
        );
        pass(11, "external corpus count (skipped: file not present)");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_cli(
        dir.path(),
        &[
            "ingest",
            "--input",
            input.to_str().unwrap(),
            "--output",
            "external.jsonl",
        ],
    );
    assert!(
        stdout.contains("ingested 26909 entries"),
        "expected 26909 entries, got: {stdout}"
    );
    pass(11, "external corpus count");
}
