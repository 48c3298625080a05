//! ROUGE-1/2/L/Lsum and BLEU over XML-aware tokens.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

/// Splits on whitespace after padding `<`, `>` and `/`, so XML structure
/// shows up as tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut padded = String::with_capacity(text.len() * 2);
    for ch in text.chars() {
        if matches!(ch, '<' | '>' | '/') {
            padded.push(' ');
            padded.push(ch);
            padded.push(' ');
        } else {
            padded.push(ch);
        }
    }
    padded.split_whitespace().map(str::to_string).collect()
}

/// Tokenizes each non-blank line separately (for ROUGE-Lsum).
pub fn tokenize_lines(text: &str) -> Vec<Vec<String>> {
    text.lines().map(tokenize).filter(|l| !l.is_empty()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_hits(hits: usize, cand_len: usize, ref_len: usize) -> Prf {
        if hits == 0 || cand_len == 0 || ref_len == 0 {
            return Prf {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            };
        }
        let precision = hits as f64 / cand_len as f64;
        let recall = hits as f64 / ref_len as f64;
        Prf {
            precision,
            recall,
            f1: 2.0 * precision * recall / (precision + recall),
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> Prf {
    let c = ngram_counts(candidate, n);
    let r = ngram_counts(reference, n);
    let hits = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
    Prf::from_hits(hits, c.values().sum(), r.values().sum())
}

fn lcs_table(a: &[String], b: &[String]) -> Vec<Vec<u32>> {
    let mut t = vec![vec![0u32; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    lcs_table(a, b)[a.len()][b.len()] as usize
}

pub fn rouge_l(candidate: &[String], reference: &[String]) -> Prf {
    Prf::from_hits(lcs_len(candidate, reference), candidate.len(), reference.len())
}

/// Indices into `reference` of one longest common subsequence with `candidate`.
fn lcs_ref_indices(reference: &[String], candidate: &[String]) -> Vec<usize> {
    let t = lcs_table(reference, candidate);
    let (mut i, mut j) = (reference.len(), candidate.len());
    let mut out = Vec::new();
    while i > 0 && j > 0 {
        if reference[i - 1] == candidate[j - 1] {
            out.push(i - 1);
            i -= 1;
            j -= 1;
        } else if t[i - 1][j] >= t[i][j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out
}

/// Summary-level ROUGE-L: for each reference line, the union of its LCS
/// tokens against every candidate line, with hits clipped by token counts.
pub fn rouge_lsum(cand_lines: &[Vec<String>], ref_lines: &[Vec<String>]) -> Prf {
    fn count(lines: &[Vec<String>]) -> HashMap<&str, usize> {
        let mut m = HashMap::new();
        for t in lines.iter().flatten() {
            *m.entry(t.as_str()).or_insert(0) += 1;
        }
        m
    }
    let mut cand_left = count(cand_lines);
    let mut ref_left = count(ref_lines);
    let mut hits = 0;
    for r in ref_lines {
        let mut union: Vec<usize> = cand_lines.iter().flat_map(|c| lcs_ref_indices(r, c)).collect();
        union.sort_unstable();
        union.dedup();
        for i in union {
            let tok = r[i].as_str();
            let (Some(c), Some(rr)) = (cand_left.get_mut(tok), ref_left.get_mut(tok)) else {
                continue;
            };
            if *c > 0 && *rr > 0 {
                *c -= 1;
                *rr -= 1;
                hits += 1;
            }
        }
    }
    let total = |lines: &[Vec<String>]| lines.iter().map(Vec::len).sum();
    Prf::from_hits(hits, total(cand_lines), total(ref_lines))
}

pub const BLEU_EPSILON: f64 = 1e-9;

/// Corpus-free sentence BLEU: geometric mean of clipped n-gram precisions
/// for orders 1..=min(max_n, |candidate|), zero matches replaced by
/// epsilon, times the brevity penalty against the closest reference length.
pub fn bleu(candidate: &[String], references: &[Vec<String>], max_n: usize) -> f64 {
    if candidate.is_empty() || references.is_empty() || max_n == 0 {
        return 0.0;
    }
    let orders = max_n.min(candidate.len());
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let cand = ngram_counts(candidate, n);
        let refs: Vec<_> = references.iter().map(|r| ngram_counts(r, n)).collect();
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &k)| k.min(refs.iter().map(|r| r.get(g).copied().unwrap_or(0)).max().unwrap_or(0)))
            .sum();
        let p = if matched == 0 {
            BLEU_EPSILON / total as f64
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let c = candidate.len();
    let r = references
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap_or(c);
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    bp * (log_sum / orders as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub rouge_lsum: f64,
    pub bleu: f64,
}

/// F1 scores and BLEU for one prediction/reference pair of raw texts.
pub fn score_pair(prediction: &str, reference: &str) -> PairScores {
    let c = tokenize(prediction);
    let r = tokenize(reference);
    PairScores {
        rouge1: rouge_n(&c, &r, 1).f1,
        rouge2: rouge_n(&c, &r, 2).f1,
        rouge_l: rouge_l(&c, &r).f1,
        rouge_lsum: rouge_lsum(&tokenize_lines(prediction), &tokenize_lines(reference)).f1,
        bleu: bleu(&c, &[r], 4),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(xs: &[f64]) -> MeanStd {
    if xs.is_empty() {
        return MeanStd { mean: 0.0, std: 0.0 };
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    MeanStd { mean, std: var.sqrt() }
}

/// Mean and population standard deviation of each metric over pairs,
/// scaled to 0-100.
pub fn corpus_scores(pairs: &[(String, String)]) -> BTreeMap<String, MeanStd> {
    let scores: Vec<PairScores> = pairs.iter().map(|(p, r)| score_pair(p, r)).collect();
    let pick = |f: fn(&PairScores) -> f64| {
        let v: Vec<f64> = scores.iter().map(|s| f(s) * 100.0).collect();
        mean_std(&v)
    };
    BTreeMap::from([
        ("rouge1".to_string(), pick(|s| s.rouge1)),
        ("rouge2".to_string(), pick(|s| s.rouge2)),
        ("rougeL".to_string(), pick(|s| s.rouge_l)),
        ("rougeLsum".to_string(), pick(|s| s.rouge_lsum)),
        ("bleu".to_string(), pick(|s| s.bleu)),
    ])
}
