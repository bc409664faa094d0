//! Deterministic generation of small, parseable Java methods.
//!
//! Test suites and demos need streams of realistic snippets with varied
//! control flow, literals, comments, and API calls. Every output of
//! [`random_method`] parses with [`crate::ast::parse_method`] by
//! construction, and the same `(seed, index)` always yields the same text.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::CorpusEntry;
use crate::rng::stream;

const VERBS: &[&str] = &[
    "get", "set", "find", "count", "merge", "build", "scan", "copy", "read", "write", "apply",
    "fold", "trim", "pick",
];
const NOUNS: &[&str] = &[
    "Total", "Items", "Buffer", "Index", "Name", "Width", "Value", "Entries", "Offset", "Chunk",
    "Slice", "Record",
];
const LOCALS: &[&str] = &[
    "acc", "tmp", "cur", "next", "left", "right", "count", "sum", "flag", "text", "node", "item",
    "size", "limit", "tail",
];
const WORDS: &[&str] = &[
    "alpha", "delta", "omega", "spare", "basic", "prime", "local", "inner", "outer", "solid",
];

struct Gen {
    rng: ChaCha8Rng,
    used: Vec<String>,
    numeric: Vec<String>,
    strings: Vec<String>,
    arrays: Vec<String>,
    body: String,
}

impl Gen {
    fn pick<'a>(&mut self, pool: &[&'a str]) -> &'a str {
        pool[self.rng.gen_range(0..pool.len())]
    }

    fn fresh_name(&mut self, base: &str) -> String {
        let mut name = String::from(base);
        let mut n = 2;
        while self.used.iter().any(|u| u == &name) {
            name = format!("{base}{n}");
            n += 1;
        }
        self.used.push(name.clone());
        name
    }

    fn fresh_local(&mut self) -> String {
        let base = self.pick(LOCALS);
        self.fresh_name(base)
    }

    fn numeric_var(&mut self) -> Option<String> {
        if self.numeric.is_empty() {
            None
        } else {
            let i = self.rng.gen_range(0..self.numeric.len());
            Some(self.numeric[i].clone())
        }
    }

    fn small_int(&mut self) -> i32 {
        self.rng.gen_range(0..100)
    }

    fn push_line(&mut self, line: &str) {
        self.body.push_str("    ");
        self.body.push_str(line);
        self.body.push('\n');
    }

    fn maybe_comment(&mut self) {
        if self.rng.gen_range(0..5) == 0 {
            let word = self.pick(WORDS);
            let line = if self.rng.gen_bool(0.5) {
                format!("// keep the {word} path cheap")
            } else {
                format!("/* {word} bookkeeping */")
            };
            self.push_line(&line);
        }
    }

    fn declaration(&mut self) {
        let choice = self.rng.gen_range(0..6);
        match choice {
            0 | 1 => {
                let name = self.fresh_local();
                let value = self.small_int();
                let init = match self.numeric_var() {
                    Some(v) if self.rng.gen_bool(0.4) => format!("{v} + {value}"),
                    _ => format!("{value}"),
                };
                self.push_line(&format!("int {name} = {init};"));
                self.numeric.push(name);
            }
            2 => {
                let name = self.fresh_local();
                let word = self.pick(WORDS);
                self.push_line(&format!("String {name} = \"{word}\";"));
                self.strings.push(name);
            }
            3 => {
                let name = self.fresh_local();
                let value = self.small_int();
                self.push_line(&format!("long {name} = {value}L;"));
                self.numeric.push(name);
            }
            4 => {
                let name = self.fresh_local();
                let init = match self.numeric_var() {
                    Some(v) => format!("Math.abs({v})"),
                    None => String::from("Math.max(1, 2)"),
                };
                self.push_line(&format!("int {name} = {init};"));
                self.numeric.push(name);
            }
            _ => {
                let name = self.fresh_local();
                self.push_line(&format!(
                    "java.util.List<String> {name} = new java.util.ArrayList<String>();"
                ));
                let word = self.pick(WORDS);
                if self.rng.gen_bool(0.6) {
                    self.push_line(&format!("{name}.add(\"{word}\");"));
                }
            }
        }
    }

    fn assignment(&mut self) {
        let Some(v) = self.numeric_var() else {
            self.declaration();
            return;
        };
        let value = self.small_int();
        let line = match self.rng.gen_range(0..4) {
            0 => format!("{v} = {v} + {value};"),
            1 => format!("{v} += {value};"),
            2 => format!("{v}++;"),
            _ => format!("{v} = {v} * 2 - {value};"),
        };
        self.push_line(&line);
    }

    fn branch(&mut self) {
        let Some(v) = self.numeric_var() else {
            self.declaration();
            return;
        };
        let bound = self.small_int();
        let delta = self.small_int();
        if self.rng.gen_bool(0.3) {
            self.push_line(&format!(
                "if ({v} > {bound}) {{ {v} = {v} - {delta}; }} else {{ {v} = {v} + 1; }}"
            ));
        } else {
            self.push_line(&format!("if ({v} < {bound}) {{ {v} += {delta}; }}"));
        }
    }

    fn loop_stmt(&mut self) {
        let Some(v) = self.numeric_var() else {
            self.declaration();
            return;
        };
        match self.rng.gen_range(0..3) {
            0 => {
                let i = self.fresh_name("i");
                let bound = self.small_int().max(1);
                self.push_line(&format!(
                    "for (int {i} = 0; {i} < {bound}; {i}++) {{ {v} = {v} + {i}; }}"
                ));
            }
            1 => {
                if let Some(arr) = self.arrays.first().cloned() {
                    let e = self.fresh_name("e");
                    self.push_line(&format!("for (int {e} : {arr}) {{ {v} = {v} + {e}; }}"));
                } else {
                    let bound = self.small_int();
                    self.push_line(&format!(
                        "while ({v} < {bound}) {{ {v} = {v} + 3; }}"
                    ));
                }
            }
            _ => {
                let bound = self.small_int();
                self.push_line(&format!("while ({v} < {bound}) {{ {v} += 2; }}"));
            }
        }
    }

    fn call(&mut self) {
        match self.rng.gen_range(0..4) {
            0 => {
                if let Some(arr) = self.arrays.first().cloned() {
                    self.push_line(&format!("java.util.Arrays.sort({arr});"));
                } else {
                    self.assignment();
                }
            }
            1 => {
                if let Some(s) = self.strings.first().cloned() {
                    let name = self.fresh_local();
                    self.push_line(&format!("int {name} = {s}.length();"));
                    self.numeric.push(name);
                } else {
                    self.declaration();
                }
            }
            2 => {
                let name = self.fresh_local();
                self.push_line(&format!("StringBuilder {name} = new StringBuilder();"));
                let word = self.pick(WORDS);
                self.push_line(&format!("{name}.append(\"{word}\");"));
            }
            _ => {
                if let Some(v) = self.numeric_var() {
                    self.push_line(&format!("System.out.println({v});"));
                } else {
                    self.declaration();
                }
            }
        }
    }

    fn guarded(&mut self) {
        let Some(v) = self.numeric_var() else {
            self.declaration();
            return;
        };
        self.push_line(&format!(
            "try {{ {v} = {v} / Math.max(1, {v}); }} catch (Exception issue) {{ {v} = 0; }}"
        ));
    }
}

/// Generates one parseable Java method. Same `(seed, index)` pairs always
/// produce the same text.
pub fn random_method(seed: u64, index: u64) -> String {
    let mut g = Gen {
        rng: stream(seed, "synth", &[index]),
        used: Vec::new(),
        numeric: Vec::new(),
        strings: Vec::new(),
        arrays: Vec::new(),
        body: String::new(),
    };

    let ret = *["int", "long", "boolean", "String", "void", "double"]
        .get(g.rng.gen_range(0..6))
        .expect("return pool");
    let verb = g.pick(VERBS);
    let noun = g.pick(NOUNS);
    let method = format!("{verb}{noun}");
    g.used.push(method.clone());

    let mut params: Vec<String> = Vec::new();
    for _ in 0..g.rng.gen_range(0..=2) {
        let kind = g.rng.gen_range(0..4);
        let name = g.fresh_local();
        match kind {
            0 | 1 => {
                params.push(format!("int {name}"));
                g.numeric.push(name);
            }
            2 => {
                params.push(format!("String {name}"));
                g.strings.push(name);
            }
            _ => {
                params.push(format!("int[] {name}"));
                g.arrays.push(name);
            }
        }
    }

    // Two leading declarations in most methods: adjacent independent
    // statements keep reorder transforms exercised.
    g.declaration();
    if g.rng.gen_bool(0.8) {
        g.declaration();
    }
    for _ in 0..g.rng.gen_range(1..=4) {
        g.maybe_comment();
        match g.rng.gen_range(0..6) {
            0 => g.declaration(),
            1 => g.assignment(),
            2 => g.branch(),
            3 => g.loop_stmt(),
            4 => g.call(),
            _ => g.guarded(),
        }
    }

    let tail = match ret {
        "int" | "long" | "double" => {
            let v = g.numeric_var().unwrap_or_else(|| String::from("0"));
            format!("return {v};")
        }
        "boolean" => match g.numeric_var() {
            Some(v) => format!("return {v} > 0;"),
            None => String::from("return true;"),
        },
        "String" => match g.strings.first().cloned() {
            Some(s) => format!("return {s};"),
            None => {
                let word = g.pick(WORDS);
                format!("return \"{word}\";")
            }
        },
        _ => String::new(),
    };
    if !tail.is_empty() {
        g.push_line(&tail);
    }

    format!(
        "public {ret} {method}({params}) {{\n{body}}}",
        params = params.join(", "),
        body = g.body
    )
}

/// Cue words planted in method and call names; they survive variable
/// renaming, so only code shape and naming outside locals carries them.
const STRUCTURE_CUES: [&str; 20] = [
    "ledger", "beacon", "quorum", "saddle", "tunnel", "vortex", "anchor", "bramble", "cinder",
    "dolmen", "ember", "fathom", "garnet", "harbor", "icicle", "jasper", "keel", "lumen",
    "meadow", "nectar",
];

/// Cue words planted as local variable names; renaming erases them while
/// statement reordering leaves them untouched.
const VARIABLE_CUES: [&str; 20] = [
    "orchid", "pylon", "quartz", "rivet", "sepal", "talon", "umber", "velvet", "walnut", "xenon",
    "yarrow", "zephyr", "alcove", "basalt", "cobalt", "dune", "eyrie", "fjord", "grotto",
    "heather",
];

/// Platform classes used as cues; every one is a known type in the default
/// API catalog, so exactly this third of the corpus passes the API filter.
const API_CUES: [&str; 20] = [
    "Random", "Scanner", "Pattern", "Locale", "Instant", "Duration", "Cipher", "Stack", "Vector",
    "Collections", "Arrays", "Optional", "Objects", "UUID", "Calendar", "Matcher", "Socket",
    "Connection", "Files", "Paths",
];

const SYLLABLES: [&str; 20] = [
    "ba", "ce", "di", "fo", "gu", "ha", "je", "ki", "lo", "mu", "na", "pe", "qi", "ro", "su",
    "ta", "ve", "wi", "xo", "yu",
];

/// A pronounceable nonsense word, unique per index below 8000. Used as the
/// per-entry disambiguator shared by a query and its own snippet only.
fn filler(i: usize) -> String {
    format!(
        "{}{}{}",
        SYLLABLES[(i / 400) % 20],
        SYLLABLES[(i / 20) % 20],
        SYLLABLES[i % 20]
    )
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => format!("{}{}", c.to_uppercase(), chars.as_str()),
        None => String::new(),
    }
}

/// Benchmark corpus with three planted signal families of 200 entries
/// each. Every query shares one cue with its own snippet: a name woven
/// into method/call identifiers (`s*` ids), a local variable name (`v*`),
/// or a platform API type (`a*`). Cues repeat across ten entries per
/// family; a unique filler word ties each query to its snippet.
pub fn planted_corpus() -> Vec<CorpusEntry> {
    let mut entries = Vec::with_capacity(600);
    for i in 0..200 {
        let cue = STRUCTURE_CUES[i / 10];
        let fill = filler(i);
        let k = i % 5;
        entries.push(CorpusEntry {
            id: format!("s{i:03}"),
            code: format!(
                "public int {cue}Sweep{fil}(int load) {{\n    int total = load + {a};\n    int width = {b};\n    {cue}Probe(total);\n    {cue}Mark(width);\n    return total * width;\n}}",
                fil = capitalize(&fill),
                a = k + 1,
                b = k + 2,
            ),
            query: format!("sweep the {cue} registry for {fill}"),
        });
    }
    for i in 0..200 {
        let cue = VARIABLE_CUES[i / 10];
        let fill = filler(200 + i);
        let k = i % 5;
        entries.push(CorpusEntry {
            id: format!("v{i:03}"),
            code: format!(
                "public long gather{fil}(long seed) {{\n    long {cue} = seed + {a};\n    long shim = seed - {b};\n    {cue} = {cue} + shim;\n    return {cue} * shim;\n}}",
                fil = capitalize(&fill),
                a = k + 1,
                b = k + 2,
            ),
            query: format!("gather the {cue} value beside {fill}"),
        });
    }
    for i in 0..200 {
        let class = API_CUES[i / 10];
        let fill = filler(400 + i);
        let k = i % 5;
        entries.push(CorpusEntry {
            id: format!("a{i:03}"),
            code: format!(
                "public int wire{fil}(int bound) {{\n    int base = bound + {a};\n    int gap = {b};\n    {class} pivot = new {class}(base);\n    long spark = {class}.measure(gap);\n    return base + gap;\n}}",
                fil = capitalize(&fill),
                a = k + 1,
                b = k + 2,
            ),
            query: format!("wire a {} channel toward {fill}", class.to_lowercase()),
        });
    }
    entries
}

/// Extracts the identifier directly before the first `(`.
fn method_name_of(src: &str) -> String {
    let head = match src.find('(') {
        Some(p) => &src[..p],
        None => src,
    };
    let trimmed = head.trim_end();
    let start = trimmed
        .rfind(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
        .map_or(0, |p| p + c_len(trimmed, p));
    String::from(&trimmed[start..])
}

fn c_len(s: &str, at: usize) -> usize {
    s[at..].chars().next().map_or(1, char::len_utf8)
}

/// Small mixed corpus for end-to-end runs: mostly generated methods with
/// queries echoing their names, plus a few deliberately broken snippets
/// (two of which still show platform API tokens) and degenerate methods
/// that no transform can vary.
pub fn mini_corpus(seed: u64) -> Vec<CorpusEntry> {
    let mut entries = Vec::with_capacity(200);
    for i in 0..200usize {
        let id = format!("m{i:03}");
        let fill = filler(i * 7 % 8000);
        let (code, query) = match i {
            11 => (
                String::from("Cipher.getInstance(\"AES/CBC/PKCS5Padding\") ((( broken {"),
                format!("encrypt the payload with a cipher {fill}"),
            ),
            37 => (
                String::from("public int pinConstant() { return 42; }"),
                format!("return the pinned constant {fill}"),
            ),
            73 => (
                String::from("int int int ((( mismatched"),
                format!("completely malformed snippet {fill}"),
            ),
            131 => (
                String::from("javax.crypto.spec.SecretKeySpec ... not a method body"),
                format!("build a secret key spec {fill}"),
            ),
            _ => {
                let code = random_method(seed, i as u64);
                let name = method_name_of(&code);
                let words = crate::subtoken::subtokens(&name).join(" ");
                (code, format!("{words} using plan {fill}"))
            }
        };
        entries.push(CorpusEntry { id, code, query });
    }
    entries
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_method;

    #[test]
    fn generated_methods_parse() {
        for i in 0..200 {
            let src = random_method(1234, i);
            let ast = parse_method(&src)
                .unwrap_or_else(|e| panic!("snippet {i} failed to parse: {e:?}\n{src}"));
            assert!(!ast.body.is_empty(), "snippet {i} has an empty body");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(random_method(7, 42), random_method(7, 42));
        assert_ne!(random_method(7, 42), random_method(7, 43));
        assert_ne!(random_method(7, 42), random_method(8, 42));
    }

    #[test]
    fn planted_corpus_has_the_advertised_shape() {
        let entries = planted_corpus();
        assert_eq!(entries.len(), 600);
        let corpus = crate::corpus::Corpus::from_entries(entries).expect("unique ids");
        let catalog = crate::api::ApiCatalog::default_jvm();
        for entry in corpus.entries() {
            let ast = crate::ast::parse_method(&entry.code).expect("planted code parses");
            let api = crate::api::detect_api(&ast, &catalog).matched();
            assert_eq!(
                api,
                entry.id.starts_with('a'),
                "api detection off for {}",
                entry.id
            );
            // Every entry can be varied by both rewrites.
            let renamed =
                crate::rename::rename_variables(&ast, crate::rename::RenameOrder::default())
                    .expect("renameable");
            assert!(!renamed.map.is_identity(), "{} has no locals", entry.id);
            let swaps = crate::permute::swap_candidates(&ast, false);
            assert!(!swaps.is_empty(), "{} has no safe swap", entry.id);
        }
    }

    #[test]
    fn planted_queries_share_cue_and_filler_with_their_snippet() {
        let entries = planted_corpus();
        for entry in &entries {
            let q = crate::subtoken::query_tokens(&entry.query);
            let c = crate::subtoken::code_tokens(&entry.code);
            // The filler is the last query word and appears nowhere else.
            let fill = q.last().expect("non-empty query").clone();
            assert!(c.contains(&fill), "{}: filler missing from code", entry.id);
            let elsewhere = entries
                .iter()
                .filter(|other| other.id != entry.id)
                .filter(|other| {
                    crate::subtoken::code_tokens(&other.code).contains(&fill)
                        || crate::subtoken::query_tokens(&other.query).contains(&fill)
                })
                .count();
            assert_eq!(elsewhere, 0, "{}: filler {fill} not unique", entry.id);
        }
    }

    #[test]
    fn mini_corpus_mixes_parseable_and_broken_entries() {
        let entries = mini_corpus(90210);
        assert_eq!(entries.len(), 200);
        let corpus = crate::corpus::Corpus::from_entries(entries).expect("unique ids");
        let parseable = corpus
            .entries()
            .iter()
            .filter(|e| crate::ast::parse_method(&e.code).is_ok())
            .count();
        assert!(parseable >= 190, "too many broken entries: {parseable}");
        assert!(parseable < 200, "broken entries missing");
        let queries: alloc::collections::BTreeSet<&str> =
            corpus.entries().iter().map(|e| e.query.as_str()).collect();
        assert_eq!(queries.len(), 200, "queries must be distinct");
        // Enough entries carry platform API calls to train that perspective.
        let catalog = crate::api::ApiCatalog::default_jvm();
        let api = corpus
            .entries()
            .iter()
            .filter(|e| match crate::ast::parse_method(&e.code) {
                Ok(ast) => crate::api::detect_api(&ast, &catalog).matched(),
                Err(_) => match crate::token::tokenize(&e.code) {
                    Ok(toks) => crate::api::detect_api_tokens(&toks, &catalog).matched(),
                    Err(_) => false,
                },
            })
            .count();
        assert!(api >= 20, "api-bearing entries too rare: {api}");
    }

    #[test]
    fn generator_varies_shape() {
        let mut with_loops = 0;
        let mut with_api = 0;
        let mut with_comments = 0;
        for i in 0..100 {
            let src = random_method(99, i);
            if src.contains("for (") || src.contains("while (") {
                with_loops += 1;
            }
            if src.contains("Math.") || src.contains("Arrays.sort") || src.contains("StringBuilder")
            {
                with_api += 1;
            }
            if src.contains("//") || src.contains("/*") {
                with_comments += 1;
            }
        }
        assert!(with_loops > 10, "loops too rare: {with_loops}");
        assert!(with_api > 20, "api calls too rare: {with_api}");
        assert!(with_comments > 10, "comments too rare: {with_comments}");
    }
}
