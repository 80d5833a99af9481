use crate::data::{TokenSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{dot, Tensor};

/// Pairwise cosine similarities of the embeddings of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub tokens: Vec<String>,
    /// Row-major `n x n`.
    pub matrix: Vec<f64>,
    /// Positions whose embedding is the zero vector; their similarities are 0.
    pub zero_vectors: Vec<usize>,
}

fn check_ids(embeddings: &Tensor, ids: &[usize]) -> Result<()> {
    if embeddings.rank() != 2 {
        return Err(Error::Shape(format!("embedding table must be rank 2, got {:?}", embeddings.shape())));
    }
    if let Some(&bad) = ids.iter().find(|&&i| i >= embeddings.rows()) {
        return Err(Error::Index(format!("token id {bad} outside embedding table of {} rows", embeddings.rows())));
    }
    Ok(())
}

/// Cosine of two embedding rows, `None` when either is the zero vector.
pub fn cosine(embeddings: &Tensor, a: usize, b: usize) -> Option<f64> {
    let (x, y) = (embeddings.row(a), embeddings.row(b));
    let (nx, ny) = (dot(x, x).sqrt(), dot(y, y).sqrt());
    (nx > 0.0 && ny > 0.0).then(|| if a == b { 1.0 } else { (dot(x, y) / (nx * ny)).clamp(-1.0, 1.0) })
}

pub fn similarity_heatmap(embeddings: &Tensor, ids: &[usize], tokens: &[String]) -> Result<Heatmap> {
    check_ids(embeddings, ids)?;
    if tokens.len() != ids.len() {
        return Err(Error::Shape(format!("{} tokens but {} ids", tokens.len(), ids.len())));
    }
    let n = ids.len();
    let mut matrix = vec![0.0; n * n];
    let mut zero_vectors = Vec::new();
    for i in 0..n {
        if cosine(embeddings, ids[i], ids[i]).is_none() {
            zero_vectors.push(i);
        }
        for j in i..n {
            let c = cosine(embeddings, ids[i], ids[j]).unwrap_or(0.0);
            matrix[i * n + j] = c;
            matrix[j * n + i] = c;
        }
    }
    Ok(Heatmap {
        tokens: tokens.to_vec(),
        matrix,
        zero_vectors,
    })
}

impl Heatmap {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.len() + j]
    }

    /// Plain-text grid with two-decimal cells and token labels.
    pub fn to_text(&self) -> String {
        let width = self.tokens.iter().map(String::len).max().unwrap_or(0).max(5);
        let mut out = format!("{:width$}", "");
        for t in &self.tokens {
            out.push_str(&format!(" {:>width$}", t));
        }
        out.push('\n');
        for (i, t) in self.tokens.iter().enumerate() {
            out.push_str(&format!("{:width$}", t));
            for j in 0..self.len() {
                out.push_str(&format!(" {:>width$.2}", self.get(i, j)));
            }
            out.push('\n');
        }
        if !self.zero_vectors.is_empty() {
            out.push_str(&format!("zero-vector positions: {:?}\n", self.zero_vectors));
        }
        out
    }

    /// Binary PGM (P5); darker cells mean higher similarity.
    pub fn to_pgm(&self, cell: usize) -> Vec<u8> {
        let cell = cell.max(1);
        let side = self.len() * cell;
        let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
        for y in 0..side {
            for x in 0..side {
                let v = self.get(y / cell, x / cell);
                out.push((255.0 * (1.0 - v) / 2.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        out
    }
}

/// Mean cosine over aligned reparandum/repair pairs versus random token pairs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CopySimilarity {
    pub copy_mean: f64,
    pub copy_pairs: usize,
    /// Aligned pairs whose two words differ.
    pub distinct_copy_mean: f64,
    pub distinct_copy_pairs: usize,
    pub random_mean: f64,
    pub random_pairs: usize,
}

impl CopySimilarity {
    pub fn gap(&self) -> f64 {
        self.copy_mean - self.random_mean
    }
}

/// Copy pairs align reparandum word `j` with repair word `j`. Random pairs
/// are two distinct positions of the same sentence, drawn uniformly.
pub fn copy_pair_similarity(
    embeddings: &Tensor,
    vocab: &Vocabulary,
    corpus: &[TokenSequence],
    random_pairs: usize,
    rng: &mut Rng,
) -> Result<CopySimilarity> {
    let mut copy = (0.0, 0usize);
    let mut distinct = (0.0, 0usize);
    let encoded: Vec<Vec<usize>> = corpus.iter().map(|s| vocab.encode_seq(s)).collect();
    for ids in &encoded {
        check_ids(embeddings, ids)?;
    }
    for (seq, ids) in corpus.iter().zip(&encoded) {
        for span in &seq.spans {
            let Some(repair) = &span.repair else { continue };
            for (a, b) in span.reparandum.clone().zip(repair.clone()) {
                let c = cosine(embeddings, ids[a], ids[b]).unwrap_or(0.0);
                copy.0 += c;
                copy.1 += 1;
                if seq.tokens[a] != seq.tokens[b] {
                    distinct.0 += c;
                    distinct.1 += 1;
                }
            }
        }
    }
    let long: Vec<&Vec<usize>> = encoded.iter().filter(|ids| ids.len() >= 2).collect();
    let mut random = (0.0, 0usize);
    if !long.is_empty() {
        for _ in 0..random_pairs {
            let ids = long[rng.below(long.len())];
            let i = rng.below(ids.len());
            let mut j = rng.below(ids.len() - 1);
            if j >= i {
                j += 1;
            }
            random.0 += cosine(embeddings, ids[i], ids[j]).unwrap_or(0.0);
            random.1 += 1;
        }
    }
    let mean = |(s, n): (f64, usize)| if n > 0 { s / n as f64 } else { 0.0 };
    Ok(CopySimilarity {
        copy_mean: mean(copy),
        copy_pairs: copy.1,
        distinct_copy_mean: mean(distinct),
        distinct_copy_pairs: distinct.1,
        random_mean: mean(random),
        random_pairs: random.1,
    })
}
