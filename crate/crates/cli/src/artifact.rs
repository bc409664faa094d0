//! Model artifact directories.
//!
//! An artifact is a directory holding `manifest.json` (shapes, settings,
//! content hashes), `tensors.bin` (all parameters as little-endian 32-bit
//! floats, in manifest order), `loss.jsonl` (per-epoch training loss), and
//! for single encoders `vocab.txt` (one token per line, index order). The
//! artifact hash covers manifest, vocabulary, and tensors; loading
//! re-verifies every recorded hash before parameters are trusted.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_at, CliError};
use mpcs_core::encoder::{EncoderModel, Pooling};
use mpcs_core::ensemble::EnsembleModel;
use mpcs_core::metrics::PairScorer;
use mpcs_core::vocab::Vocab;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const TENSORS_FILE: &str = "tensors.bin";
pub const LOSS_FILE: &str = "loss.jsonl";
pub const FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Hashes a file's bytes.
pub fn hash_file(path: &Path) -> Result<String, CliError> {
    let bytes = io_at(std::fs::read(path), "reading", path)?;
    Ok(sha256_hex(&bytes))
}

fn tensor_bytes(parts: &[&[f64]]) -> Vec<u8> {
    let total: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = Vec::with_capacity(total * 4);
    for part in parts {
        for &v in *part {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Cursor over a tensor file, enforcing exact consumption.
struct TensorReader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> TensorReader<'a> {
    fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        TensorReader { bytes, at: 0, path }
    }

    fn take(&mut self, count: usize) -> Result<Vec<f64>, CliError> {
        let need = count * 4;
        if self.at + need > self.bytes.len() {
            return Err(CliError::contract(format!(
                "{}: tensor file ends early ({} bytes, needed {})",
                self.path.display(),
                self.bytes.len(),
                self.at + need
            )));
        }
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let start = self.at + i * 4;
            let raw: [u8; 4] = self.bytes[start..start + 4].try_into().expect("4 bytes");
            out.push(f64::from(f32::from_le_bytes(raw)));
        }
        self.at += need;
        Ok(out)
    }

    fn finish(self) -> Result<(), CliError> {
        if self.at != self.bytes.len() {
            return Err(CliError::contract(format!(
                "{}: tensor file has {} trailing bytes",
                self.path.display(),
                self.bytes.len() - self.at
            )));
        }
        Ok(())
    }
}

/// Hyperparameters the training run used; carried for provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub optimizer: String,
    pub batch_size: usize,
    pub epochs: usize,
    pub clip_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_frequency: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderShapes {
    pub embedding: [usize; 2],
    pub attn: [usize; 1],
    pub head_w: [usize; 2],
    pub head_b: [usize; 1],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderManifest {
    pub kind: String,
    pub format_version: u32,
    pub tag: String,
    pub seed: u64,
    pub dim: usize,
    pub pooling: String,
    pub max_len: usize,
    pub vocab_size: usize,
    pub shapes: EncoderShapes,
    pub vocab_sha256: String,
    pub tensors_sha256: String,
    pub train: TrainSection,
}

/// Writes `epoch`/`loss` lines.
fn render_loss(curve: &[f64]) -> String {
    let mut out = String::new();
    for (i, loss) in curve.iter().enumerate() {
        out.push_str(&format!(
            "{{\"epoch\":{},\"loss\":{}}}\n",
            i + 1,
            serde_json::Number::from_f64(*loss)
                .map_or_else(|| String::from("null"), |n| n.to_string())
        ));
    }
    out
}

fn write_manifest<T: Serialize>(dir: &Path, manifest: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::io(format!("serializing manifest: {e}")))?;
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    io_at(std::fs::write(&path, &text), "writing", &path)?;
    Ok(text.into_bytes())
}

/// Saves an encoder artifact; returns its artifact hash.
pub fn save_encoder(
    dir: &Path,
    model: &EncoderModel,
    loss_curve: &[f64],
    train: &TrainSection,
) -> Result<String, CliError> {
    io_at(std::fs::create_dir_all(dir), "creating", dir)?;
    let vocab_text = {
        let mut t = model.vocab.tokens().join("\n");
        t.push('\n');
        t
    };
    let tensors = tensor_bytes(&[
        model.embedding(),
        model.attn(),
        model.head_w(),
        model.head_b(),
    ]);
    let manifest = EncoderManifest {
        kind: String::from("encoder"),
        format_version: FORMAT_VERSION,
        tag: model.tag.clone(),
        seed: model.seed,
        dim: model.dim,
        pooling: String::from(model.pooling.as_str()),
        max_len: model.max_len,
        vocab_size: model.vocab.len(),
        shapes: EncoderShapes {
            embedding: [model.vocab.len(), model.dim],
            attn: [model.dim],
            head_w: [2, model.dim],
            head_b: [2],
        },
        vocab_sha256: sha256_hex(vocab_text.as_bytes()),
        tensors_sha256: sha256_hex(&tensors),
        train: train.clone(),
    };
    let manifest_bytes = write_manifest(dir, &manifest)?;
    let vocab_path = dir.join(VOCAB_FILE);
    io_at(std::fs::write(&vocab_path, &vocab_text), "writing", &vocab_path)?;
    let tensors_path = dir.join(TENSORS_FILE);
    io_at(std::fs::write(&tensors_path, &tensors), "writing", &tensors_path)?;
    let loss_path = dir.join(LOSS_FILE);
    io_at(std::fs::write(&loss_path, render_loss(loss_curve)), "writing", &loss_path)?;
    let mut combined = manifest_bytes;
    combined.extend_from_slice(vocab_text.as_bytes());
    combined.extend_from_slice(&tensors);
    Ok(sha256_hex(&combined))
}

fn verify(path: &Path, bytes: &[u8], recorded: &str, what: &str) -> Result<(), CliError> {
    let actual = sha256_hex(bytes);
    if actual != recorded {
        return Err(CliError::contract(format!(
            "{}: {what} hash mismatch (manifest says {recorded}, file is {actual})",
            path.display()
        )));
    }
    Ok(())
}

fn read_manifest_value(dir: &Path) -> Result<(serde_json::Value, Vec<u8>), CliError> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = io_at(std::fs::read(&path), "reading", &path)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::contract(format!("{}: bad manifest: {e}", path.display())))?;
    Ok((value, bytes))
}

/// Loads an encoder artifact, verifying recorded hashes; returns the model,
/// its manifest, and the artifact hash.
pub fn load_encoder(dir: &Path) -> Result<(EncoderModel, EncoderManifest, String), CliError> {
    let (value, manifest_bytes) = read_manifest_value(dir)?;
    let manifest: EncoderManifest = serde_json::from_value(value).map_err(|e| {
        CliError::contract(format!("{}: bad encoder manifest: {e}", dir.display()))
    })?;
    if manifest.kind != "encoder" {
        return Err(CliError::contract(format!(
            "{}: expected an encoder artifact, found kind '{}'",
            dir.display(),
            manifest.kind
        )));
    }
    if manifest.format_version != FORMAT_VERSION {
        return Err(CliError::contract(format!(
            "{}: unsupported format version {}",
            dir.display(),
            manifest.format_version
        )));
    }
    let vocab_path = dir.join(VOCAB_FILE);
    let vocab_bytes = io_at(std::fs::read(&vocab_path), "reading", &vocab_path)?;
    verify(&vocab_path, &vocab_bytes, &manifest.vocab_sha256, "vocabulary")?;
    let tensors_path = dir.join(TENSORS_FILE);
    let tensors_bytes = io_at(std::fs::read(&tensors_path), "reading", &tensors_path)?;
    verify(&tensors_path, &tensors_bytes, &manifest.tensors_sha256, "tensor")?;

    let vocab_text = String::from_utf8(vocab_bytes.clone())
        .map_err(|_| CliError::contract(format!("{}: vocabulary is not UTF-8", vocab_path.display())))?;
    let tokens: Vec<String> = vocab_text.lines().map(String::from).collect();
    if tokens.len() != manifest.vocab_size {
        return Err(CliError::contract(format!(
            "{}: vocabulary holds {} tokens, manifest says {}",
            vocab_path.display(),
            tokens.len(),
            manifest.vocab_size
        )));
    }
    let vocab = Vocab::from_ordered(tokens)?;

    let pooling = Pooling::from_str(&manifest.pooling)?;
    let mut reader = TensorReader::new(&tensors_bytes, &tensors_path);
    let embedding = reader.take(manifest.shapes.embedding[0] * manifest.shapes.embedding[1])?;
    let attn = reader.take(manifest.shapes.attn[0])?;
    let head_w = reader.take(manifest.shapes.head_w[0] * manifest.shapes.head_w[1])?;
    let head_b = reader.take(manifest.shapes.head_b[0])?;
    reader.finish()?;
    let model = EncoderModel::from_parts(
        vocab,
        manifest.dim,
        pooling,
        manifest.max_len,
        &manifest.tag,
        manifest.seed,
        embedding,
        attn,
        head_w,
        head_b,
    )?;
    let mut combined = manifest_bytes;
    combined.extend_from_slice(vocab_text.as_bytes());
    combined.extend_from_slice(&tensors_bytes);
    Ok((model, manifest, sha256_hex(&combined)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberRef {
    pub tag: String,
    /// Member artifact directory; relative paths resolve against the
    /// ensemble directory.
    pub path: String,
    pub artifact_sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleShapes {
    pub mu: [usize; 1],
    pub sigma: [usize; 1],
    pub w1: [usize; 2],
    pub b1: [usize; 1],
    pub w2: [usize; 2],
    pub b2: [usize; 1],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub kind: String,
    pub format_version: u32,
    pub seed: u64,
    pub finetuned: bool,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub members: Vec<MemberRef>,
    pub shapes: EnsembleShapes,
    pub tensors_sha256: String,
    pub train: TrainSection,
}

/// Saves an ensemble artifact. `members` must pair each member's tag with
/// the path to record and that artifact's hash; fine-tuned members must
/// already be saved under the given paths. Returns the artifact hash.
pub fn save_ensemble(
    dir: &Path,
    model: &EnsembleModel,
    members: Vec<MemberRef>,
    loss_curve: &[f64],
    train: &TrainSection,
) -> Result<String, CliError> {
    io_at(std::fs::create_dir_all(dir), "creating", dir)?;
    let input_dim = model.input_dim();
    let hidden = model.hidden_dim;
    let tensors = tensor_bytes(&[
        model.mu(),
        model.sigma(),
        model.w1(),
        model.b1(),
        model.w2(),
        model.b2(),
    ]);
    let manifest = EnsembleManifest {
        kind: String::from("ensemble"),
        format_version: FORMAT_VERSION,
        seed: model.seed,
        finetuned: model.finetuned,
        input_dim,
        hidden_dim: hidden,
        members,
        shapes: EnsembleShapes {
            mu: [input_dim],
            sigma: [input_dim],
            w1: [hidden, input_dim],
            b1: [hidden],
            w2: [2, hidden],
            b2: [2],
        },
        tensors_sha256: sha256_hex(&tensors),
        train: train.clone(),
    };
    let manifest_bytes = write_manifest(dir, &manifest)?;
    let tensors_path = dir.join(TENSORS_FILE);
    io_at(std::fs::write(&tensors_path, &tensors), "writing", &tensors_path)?;
    let loss_path = dir.join(LOSS_FILE);
    io_at(std::fs::write(&loss_path, render_loss(loss_curve)), "writing", &loss_path)?;
    let mut combined = manifest_bytes;
    combined.extend_from_slice(&tensors);
    Ok(sha256_hex(&combined))
}

/// Loads an ensemble artifact and its member encoders, verifying both the
/// ensemble's own hashes and each recorded member hash.
pub fn load_ensemble(dir: &Path) -> Result<(EnsembleModel, EnsembleManifest, String), CliError> {
    let (value, manifest_bytes) = read_manifest_value(dir)?;
    let manifest: EnsembleManifest = serde_json::from_value(value).map_err(|e| {
        CliError::contract(format!("{}: bad ensemble manifest: {e}", dir.display()))
    })?;
    if manifest.kind != "ensemble" {
        return Err(CliError::contract(format!(
            "{}: expected an ensemble artifact, found kind '{}'",
            dir.display(),
            manifest.kind
        )));
    }
    if manifest.format_version != FORMAT_VERSION {
        return Err(CliError::contract(format!(
            "{}: unsupported format version {}",
            dir.display(),
            manifest.format_version
        )));
    }
    let mut members = Vec::with_capacity(manifest.members.len());
    for member in &manifest.members {
        let member_dir = resolve_member_path(dir, &member.path);
        let (model, _, hash) = load_encoder(&member_dir)?;
        if hash != member.artifact_sha256 {
            return Err(CliError::contract(format!(
                "{}: member '{}' at {} does not match its recorded hash",
                dir.display(),
                member.tag,
                member_dir.display()
            )));
        }
        members.push(model);
    }
    let tensors_path = dir.join(TENSORS_FILE);
    let tensors_bytes = io_at(std::fs::read(&tensors_path), "reading", &tensors_path)?;
    verify(&tensors_path, &tensors_bytes, &manifest.tensors_sha256, "tensor")?;
    let mut reader = TensorReader::new(&tensors_bytes, &tensors_path);
    let mu = reader.take(manifest.shapes.mu[0])?;
    let sigma = reader.take(manifest.shapes.sigma[0])?;
    let w1 = reader.take(manifest.shapes.w1[0] * manifest.shapes.w1[1])?;
    let b1 = reader.take(manifest.shapes.b1[0])?;
    let w2 = reader.take(manifest.shapes.w2[0] * manifest.shapes.w2[1])?;
    let b2 = reader.take(manifest.shapes.b2[0])?;
    reader.finish()?;
    let model = EnsembleModel::from_parts(
        members,
        manifest.hidden_dim,
        manifest.seed,
        manifest.finetuned,
        mu,
        sigma,
        w1,
        b1,
        w2,
        b2,
    )?;
    let mut combined = manifest_bytes;
    combined.extend_from_slice(&tensors_bytes);
    Ok((model, manifest, sha256_hex(&combined)))
}

pub fn resolve_member_path(ensemble_dir: &Path, recorded: &str) -> PathBuf {
    let path = Path::new(recorded);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        ensemble_dir.join(path)
    }
}

/// A scoring model of either kind, as found on disk.
#[derive(Debug)]
pub enum LoadedModel {
    Encoder(EncoderModel),
    Ensemble(EnsembleModel),
}

impl LoadedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedModel::Encoder(_) => "encoder",
            LoadedModel::Ensemble(_) => "ensemble",
        }
    }
}

impl PairScorer for LoadedModel {
    fn score(&self, query: &str, code: &str) -> f64 {
        match self {
            LoadedModel::Encoder(m) => m.score(query, code),
            LoadedModel::Ensemble(m) => m.score(query, code),
        }
    }
}

/// Loads whichever model kind the manifest declares; returns the model and
/// the artifact hash.
pub fn load_any(dir: &Path) -> Result<(LoadedModel, String), CliError> {
    let (value, _) = read_manifest_value(dir)?;
    match value.get("kind").and_then(|k| k.as_str()) {
        Some("encoder") => {
            let (model, _, hash) = load_encoder(dir)?;
            Ok((LoadedModel::Encoder(model), hash))
        }
        Some("ensemble") => {
            let (model, _, hash) = load_ensemble(dir)?;
            Ok((LoadedModel::Ensemble(model), hash))
        }
        other => Err(CliError::contract(format!(
            "{}: manifest kind {:?} is not a model",
            dir.display(),
            other
        ))),
    }
}
