//! Self-consistency confidence from pairwise mutual-entailment judgments.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Symmetric, reflexive boolean relation over `n` sampled generations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceMatrix {
    n: usize,
    cells: Vec<bool>,
}

impl EquivalenceMatrix {
    pub fn new(n: usize, cells: Vec<bool>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("equivalence matrix must be non-empty"));
        }
        if cells.len() != n * n {
            return Err(Error::dims("equivalence matrix cells", n * n, cells.len()));
        }
        let m = Self { n, cells };
        for i in 0..n {
            if !m.get(i, i) {
                return Err(Error::invalid(format!("equivalence matrix not reflexive at {i}")));
            }
            for j in 0..i {
                if m.get(i, j) != m.get(j, i) {
                    return Err(Error::invalid(format!(
                        "equivalence matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::dims("equivalence matrix row", n, r.len()));
        }
        Self::new(n, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let cells = (0..n * n).map(|k| k / n == k % n).collect();
        Self { n, cells }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j]
    }

    /// Parses the text form: the size `n` on the first line, then `n` rows of
    /// whitespace-separated `0`/`1` tokens.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (first_no, first) = lines
            .next()
            .ok_or_else(|| Error::at_line(1, "missing matrix size"))?;
        let n: usize = first
            .parse()
            .map_err(|_| Error::at_line(first_no, format!("invalid matrix size {first:?}")))?;
        if n == 0 {
            return Err(Error::at_line(first_no, "matrix size must be positive"));
        }
        let mut rows = Vec::with_capacity(n.min(4096));
        for (lineno, line) in lines {
            if rows.len() == n {
                return Err(Error::at_line(lineno, "more rows than the declared size"));
            }
            let row = line
                .split_whitespace()
                .map(|tok| match tok {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::at_line(lineno, format!("expected 0 or 1, got {other:?}"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            if row.len() != n {
                return Err(Error::at_line(
                    lineno,
                    format!("row has {} entries, expected {n}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::invalid(format!(
                "matrix declares {n} rows but has {}",
                rows.len()
            )));
        }
        Self::from_rows(&rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<&str> = (0..self.n).map(|j| if self.get(i, j) { "1" } else { "0" }).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for j in 0..self.n {
                    if !seen[j] && self.get(i, j) {
                        seen[j] = true;
                        comp.push(j);
                        queue.push_back(j);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Lowest member of the largest equivalence cluster, and that cluster's
/// share of the `n` answers. Ties go to the cluster containing the lowest
/// index.
pub fn consistency_confidence(matrix: &EquivalenceMatrix) -> (usize, f64) {
    let comps = matrix.components();
    // Components are ordered by smallest member, so the first maximum wins ties.
    let mut best = &comps[0];
    for c in &comps[1..] {
        if c.len() > best.len() {
            best = c;
        }
    }
    (best[0], best.len() as f64 / matrix.len() as f64)
}
