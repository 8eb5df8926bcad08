//! Sentence translation retrieval by cosine nearest neighbour.
//!
//! Query `i` is correct when its nearest candidate is candidate `i`, the
//! line-aligned translation.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{apply_map, LinearMap};
use crate::{Error, Result};

const QUERY_BLOCK: usize = 32;
const CANDIDATE_BLOCK: usize = 256;

/// Row-major copy of a matrix with each row scaled to unit length. Zero rows
/// stay zero and are flagged.
struct UnitRows {
    width: usize,
    data: Vec<f64>,
    zero: Vec<bool>,
}

impl UnitRows {
    fn new(m: &DMatrix<f64>) -> Self {
        let width = m.ncols();
        let mut data = Vec::with_capacity(m.len());
        let mut zero = Vec::with_capacity(m.nrows());
        for row in m.row_iter() {
            let norm = row.norm();
            zero.push(norm == 0.0);
            if norm == 0.0 {
                data.extend(std::iter::repeat_n(0.0, width));
            } else {
                data.extend(row.iter().map(|v| v / norm));
            }
        }
        UnitRows { width, data, zero }
    }

    fn len(&self) -> usize {
        self.zero.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

/// Ranking score of a (query, candidate) pair. Zero-vs-nonzero pairs rank
/// below every finite cosine.
fn score(q: &UnitRows, qi: usize, c: &UnitRows, ci: usize) -> f64 {
    match (q.zero[qi], c.zero[ci]) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::NEG_INFINITY,
        (false, false) => q.row(qi).iter().zip(c.row(ci)).map(|(a, b)| a * b).sum(),
    }
}

/// Cosine similarity with the zero-norm convention: 0 for two zero vectors,
/// -1 when exactly one side is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => -1.0,
        _ => a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb),
    }
}

fn check_inputs(queries: &DMatrix<f64>, candidates: &DMatrix<f64>) -> Result<()> {
    if queries.ncols() != candidates.ncols() {
        return Err(Error::Dimension(format!(
            "queries have width {} but candidates have width {}",
            queries.ncols(),
            candidates.ncols()
        )));
    }
    if queries.nrows() == 0 || candidates.nrows() == 0 {
        return Err(Error::EmptyInput(
            "retrieval needs at least one query and candidate".into(),
        ));
    }
    Ok(())
}

/// Index of the most cosine-similar candidate for every query row. Ties go
/// to the lowest candidate index.
pub fn retrieve_top1(queries: &DMatrix<f64>, candidates: &DMatrix<f64>) -> Result<Vec<usize>> {
    check_inputs(queries, candidates)?;
    let q = UnitRows::new(queries);
    let c = UnitRows::new(candidates);
    let starts: Vec<usize> = (0..q.len()).step_by(QUERY_BLOCK).collect();
    let blocks: Vec<Vec<usize>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + QUERY_BLOCK).min(q.len());
            let mut best = vec![(f64::NEG_INFINITY, 0usize); end - start];
            let mut seen = vec![false; end - start];
            for cstart in (0..c.len()).step_by(CANDIDATE_BLOCK) {
                let cend = (cstart + CANDIDATE_BLOCK).min(c.len());
                for (slot, qi) in (start..end).enumerate() {
                    for ci in cstart..cend {
                        let s = score(&q, qi, &c, ci);
                        if !seen[slot] || s > best[slot].0 {
                            best[slot] = (s, ci);
                            seen[slot] = true;
                        }
                    }
                }
            }
            best.into_iter().map(|(_, i)| i).collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// The `k` best candidates per query, best first, ties by lowest index.
pub fn retrieve_topk(
    queries: &DMatrix<f64>,
    candidates: &DMatrix<f64>,
    k: usize,
) -> Result<Vec<Vec<usize>>> {
    check_inputs(queries, candidates)?;
    let q = UnitRows::new(queries);
    let c = UnitRows::new(candidates);
    let k = k.min(c.len());
    Ok((0..q.len())
        .into_par_iter()
        .map(|qi| {
            let mut scored: Vec<(f64, usize)> =
                (0..c.len()).map(|ci| (score(&q, qi, &c, ci), ci)).collect();
            scored.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .unwrap_or(Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });
            scored.into_iter().take(k).map(|(_, i)| i).collect()
        })
        .collect())
}

/// Provenance recorded in every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalContext {
    pub source_lang: String,
    pub target_lang: String,
    pub encoder: String,
    pub oov_policy: String,
    /// Diagnostic top-k accuracy; not part of the headline number.
    pub topk: Option<usize>,
}

impl Default for RetrievalContext {
    fn default() -> Self {
        RetrievalContext {
            source_lang: "SRC".into(),
            target_lang: "TGT".into(),
            encoder: "unspecified".into(),
            oov_policy: "unspecified".into(),
            topk: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopkScore {
    pub k: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub direction: String,
    pub n_queries: usize,
    pub correct_at_1: usize,
    pub accuracy: f64,
    pub encoder: String,
    pub solver: String,
    pub oov_policy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topk: Option<TopkScore>,
}

fn score_aligned(
    queries: &DMatrix<f64>,
    candidates: &DMatrix<f64>,
    direction: String,
    solver: String,
    ctx: &RetrievalContext,
) -> Result<RetrievalReport> {
    if queries.nrows() != candidates.nrows() {
        return Err(Error::Dimension(format!(
            "test sides are not line-aligned: {} vs {} rows",
            queries.nrows(),
            candidates.nrows()
        )));
    }
    let hits = retrieve_top1(queries, candidates)?;
    let correct_at_1 = hits.iter().enumerate().filter(|(i, j)| i == *j).count();
    let n = hits.len();
    let topk = match ctx.topk {
        Some(k) if k > 1 => {
            let ranked = retrieve_topk(queries, candidates, k)?;
            let correct = ranked
                .iter()
                .enumerate()
                .filter(|(i, r)| r.contains(i))
                .count();
            Some(TopkScore {
                k,
                correct,
                accuracy: correct as f64 / n as f64,
            })
        }
        _ => None,
    };
    Ok(RetrievalReport {
        direction,
        n_queries: n,
        correct_at_1,
        accuracy: correct_at_1 as f64 / n as f64,
        encoder: ctx.encoder.clone(),
        solver,
        oov_policy: ctx.oov_policy.clone(),
        topk,
    })
}

/// Maps the source side (when a map is given) and scores retrieval against
/// the target side.
pub fn evaluate_direction(
    source: &DMatrix<f64>,
    target: &DMatrix<f64>,
    map: Option<&LinearMap>,
    ctx: &RetrievalContext,
) -> Result<RetrievalReport> {
    let direction = format!("{}→{}", ctx.source_lang, ctx.target_lang);
    match map {
        Some(m) => {
            let mapped = apply_map(m, source)?;
            score_aligned(&mapped, target, direction, m.solver.to_string(), ctx)
        }
        None => score_aligned(source, target, direction, "none".into(), ctx),
    }
}

/// Retrieval between two non-pivot languages, each mapped into the pivot
/// space by its own map.
pub fn evaluate_zero_shot(
    lang1: &DMatrix<f64>,
    lang2: &DMatrix<f64>,
    map1: &LinearMap,
    map2: &LinearMap,
    ctx: &RetrievalContext,
) -> Result<RetrievalReport> {
    if map1.width() != map2.width() {
        return Err(Error::Dimension(format!(
            "maps have widths {} and {}",
            map1.width(),
            map2.width()
        )));
    }
    let a = apply_map(map1, lang1)?;
    let b = apply_map(map2, lang2)?;
    let solver = if map1.solver == map2.solver {
        map1.solver.to_string()
    } else {
        format!("{}+{}", map1.solver, map2.solver)
    };
    let direction = format!("{}→{}", ctx.source_lang, ctx.target_lang);
    score_aligned(&a, &b, direction, solver, ctx)
}
