//! Iterated Lie brackets and the rank checker for the parabolic Hormander
//! condition: W^0 = {V_1..V_d}, W^{k+1} = {[V, V_i] : V in W^k, 0 <= i <= d}.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::field::{lie_bracket, VectorField, VectorFieldSet};

/// Bracket expression tree over the base fields. `Base(i)` is V_i (i >= 1);
/// `Bracket(t, i)` is [t, V_i] with i in 0..=d.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BracketExpr {
    Base(usize),
    Bracket(Box<BracketExpr>, usize),
}

impl std::fmt::Display for BracketExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BracketExpr::Base(i) => write!(f, "V{i}"),
            BracketExpr::Bracket(t, i) => write!(f, "[{t},V{i}]"),
        }
    }
}

#[derive(Clone)]
pub struct BracketEntry {
    pub expr: BracketExpr,
    pub field: VectorField,
}

/// Levels W^0..W^k of bracket fields, deduplicated by expression equality.
pub struct BracketTable {
    pub dim: usize,
    pub levels: Vec<Vec<BracketEntry>>,
}

pub fn build_bracket_table(set: &VectorFieldSet, k0: usize, budget: usize) -> Result<BracketTable> {
    let d = set.dim;
    let total: usize = (0..=k0)
        .map(|k| (d + 1usize).checked_pow(k as u32).map(|p| p * d))
        .try_fold(0usize, |acc, c| c.and_then(|c| acc.checked_add(c)))
        .ok_or_else(|| Error::Resource("bracket count overflows usize".into()))?;
    if total > budget {
        return Err(Error::Resource(format!(
            "bracket table needs {total} entries, budget is {budget}"
        )));
    }
    let mut levels: Vec<Vec<BracketEntry>> = Vec::with_capacity(k0 + 1);
    let base: Vec<BracketEntry> = (1..=d)
        .map(|i| BracketEntry { expr: BracketExpr::Base(i), field: set.noise(i).clone() })
        .collect();
    levels.push(base);
    for _ in 0..k0 {
        let prev = levels.last().unwrap();
        let mut next: Vec<BracketEntry> = Vec::with_capacity(prev.len() * (d + 1));
        let mut seen: std::collections::HashSet<BracketExpr> = std::collections::HashSet::new();
        for entry in prev {
            for i in 0..=d {
                let expr = BracketExpr::Bracket(Box::new(entry.expr.clone()), i);
                if !seen.insert(expr.clone()) {
                    continue;
                }
                let with = if i == 0 { set.drift() } else { set.noise(i) };
                next.push(BracketEntry { expr, field: lie_bracket(&entry.field, with) });
            }
        }
        levels.push(next);
    }
    Ok(BracketTable { dim: d, levels })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    /// Numerical rank of span(W^0 u ... u W^k)(x) for each k.
    pub rank_by_level: Vec<usize>,
    /// First level reaching full rank, if any.
    pub satisfied_at: Option<usize>,
}

/// Numerical rank (singular values above svd_tol * largest) of the bracket
/// spans at a point, cumulatively by level.
pub fn hormander_rank(
    set: &VectorFieldSet,
    x: &[f64],
    k0: usize,
    svd_tol: f64,
    budget: usize,
) -> Result<RankReport> {
    let table = build_bracket_table(set, k0, budget)?;
    let d = set.dim;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut rank_by_level = Vec::with_capacity(k0 + 1);
    let mut satisfied_at = None;
    for (k, level) in table.levels.iter().enumerate() {
        for entry in level {
            cols.push(entry.field.value(x));
        }
        let sv = linalg::singular_values(d, &cols);
        let top = sv.first().copied().unwrap_or(0.0);
        let rank = if top <= 0.0 {
            0
        } else {
            sv.iter().filter(|&&s| s > svd_tol * top).count()
        };
        rank_by_level.push(rank);
        if rank == d && satisfied_at.is_none() {
            satisfied_at = Some(k);
        }
    }
    Ok(RankReport { rank_by_level, satisfied_at })
}
