//! Enumeration of constrained permutation sets and exact maximum-score
//! assignment, both by optimal augmenting-path search and by brute force.
//!
//! The brute-force solver is the definitional oracle: it enumerates every
//! way of picking and matching `min(rows, cols)` disjoint (estimate,
//! reference) pairs. The fast solver must agree with it exactly, so both
//! report the objective through one canonical summation: pair scores are
//! sorted ascending by value and folded left from zero. That order is
//! independent of index numbering, which keeps the objective bit-stable
//! when rows or columns of the matrix are permuted.

use thiserror::Error;

use crate::grouping::Label;

/// Default cap on enumerated candidates (10!).
pub const DEFAULT_ENUMERATION_LIMIT: usize = 3_628_800;

/// Largest `min(rows, cols)` the brute-force solver accepts.
pub const BRUTEFORCE_MIN_DIM_LIMIT: usize = 7;

/// Cap on the number of matchings the brute-force solver will visit.
pub const BRUTEFORCE_COUNT_LIMIT: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignmentError {
    #[error("enumeration of {count} candidates exceeds the limit of {limit}")]
    SizeLimit { count: u128, limit: usize },
    #[error("cannot select {l} distinct indices out of {k}")]
    SelectionTooLarge { k: usize, l: usize },
    #[error("label sequence must be nonempty")]
    EmptyLabels,
    #[error("score matrix expects {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("score matrix entry ({row}, {col}) is not finite")]
    NonFiniteScore { row: usize, col: usize },
}

/// A rows x cols matrix of pairwise scores; rows index estimates and
/// columns index references. All entries must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, AssignmentError> {
        if values.len() != rows * cols {
            return Err(AssignmentError::ShapeMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            // A value can only exist when cols > 0.
            return Err(AssignmentError::NonFiniteScore {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds from nested rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, AssignmentError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for row in &rows {
            if row.len() != n_cols {
                return Err(AssignmentError::ShapeMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(n_rows, n_cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

/// A set of disjoint (estimate, reference) pairs and the canonical sum of
/// their scores. Pairs are kept sorted by estimate index.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub objective: f64,
}

impl Assignment {
    pub fn empty() -> Self {
        Self {
            pairs: vec![],
            objective: 0.0,
        }
    }
}

/// Canonical objective: scores of the given pairs, sorted ascending by
/// value, folded left from 0.0.
fn canonical_objective(m: &ScoreMatrix, pairs: &[(usize, usize)]) -> f64 {
    let mut scores: Vec<f64> = pairs.iter().map(|&(i, j)| m.get(i, j)).collect();
    scores.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    scores.iter().sum()
}

fn factorial_ratio(k: usize, l: usize) -> u128 {
    // k! / (k - l)! with saturation.
    let mut count: u128 = 1;
    for x in (k - l + 1)..=k {
        count = count.saturating_mul(x as u128);
    }
    count
}

fn binomial(k: usize, l: usize) -> u128 {
    let l = l.min(k - l);
    let mut count: u128 = 1;
    for i in 0..l {
        count = count.saturating_mul((k - i) as u128) / (i as u128 + 1);
    }
    count
}

/// All permutations of the index sequence `0..labels.len()` that keep the
/// label at every position unchanged. Output is in lexicographic order,
/// so the identity permutation always comes first.
pub fn enumerate_class_permutations(
    labels: &[Label],
    limit: usize,
) -> Result<Vec<Vec<usize>>, AssignmentError> {
    if labels.is_empty() {
        return Err(AssignmentError::EmptyLabels);
    }
    let mut count: u128 = 1;
    {
        let mut sorted: Vec<&Label> = labels.iter().collect();
        sorted.sort();
        let mut run = 1usize;
        for i in 1..=sorted.len() {
            if i < sorted.len() && sorted[i] == sorted[i - 1] {
                run += 1;
                count = count.saturating_mul(run as u128);
            } else {
                run = 1;
            }
        }
    }
    if count > limit as u128 {
        return Err(AssignmentError::SizeLimit { count, limit });
    }

    let k = labels.len();
    let mut out = Vec::with_capacity(count as usize);
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; k];
    fn rec(
        labels: &[Label],
        used: &mut [bool],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let pos = current.len();
        if pos == labels.len() {
            out.push(current.clone());
            return;
        }
        for idx in 0..labels.len() {
            if !used[idx] && labels[idx] == labels[pos] {
                used[idx] = true;
                current.push(idx);
                rec(labels, used, current, out);
                current.pop();
                used[idx] = false;
            }
        }
    }
    rec(labels, &mut used, &mut current, &mut out);
    Ok(out)
}

fn for_each_ordered_selection<F: FnMut(&[usize])>(k: usize, l: usize, f: &mut F) {
    fn rec<F: FnMut(&[usize])>(
        k: usize,
        l: usize,
        used: &mut [bool],
        current: &mut Vec<usize>,
        f: &mut F,
    ) {
        if current.len() == l {
            f(current);
            return;
        }
        for idx in 0..k {
            if !used[idx] {
                used[idx] = true;
                current.push(idx);
                rec(k, l, used, current, f);
                current.pop();
                used[idx] = false;
            }
        }
    }
    let mut used = vec![false; k];
    let mut current = Vec::with_capacity(l);
    rec(k, l, &mut used, &mut current, f);
}

fn for_each_combination<F: FnMut(&[usize])>(k: usize, l: usize, f: &mut F) {
    fn rec<F: FnMut(&[usize])>(
        k: usize,
        l: usize,
        start: usize,
        current: &mut Vec<usize>,
        f: &mut F,
    ) {
        if current.len() == l {
            f(current);
            return;
        }
        let still_needed = l - current.len();
        for idx in start..=(k - still_needed) {
            current.push(idx);
            rec(k, l, idx + 1, current, f);
            current.pop();
        }
    }
    if l == 0 {
        f(&[]);
        return;
    }
    let mut current = Vec::with_capacity(l);
    rec(k, l, 0, &mut current, f);
}

/// Index tuples of `l` distinct indices drawn from `0..k`, in
/// lexicographic order. `ordered = true` yields every arrangement
/// (size k!/(k-l)!); `ordered = false` yields combinations only
/// (size C(k, l)).
pub fn enumerate_selections(
    k: usize,
    l: usize,
    ordered: bool,
    limit: usize,
) -> Result<Vec<Vec<usize>>, AssignmentError> {
    if l > k {
        return Err(AssignmentError::SelectionTooLarge { k, l });
    }
    let count = if ordered {
        factorial_ratio(k, l)
    } else {
        binomial(k, l)
    };
    if count > limit as u128 {
        return Err(AssignmentError::SizeLimit { count, limit });
    }
    let mut out = Vec::with_capacity(count as usize);
    if ordered {
        for_each_ordered_selection(k, l, &mut |sel| out.push(sel.to_vec()));
    } else {
        for_each_combination(k, l, &mut |sel| out.push(sel.to_vec()));
    }
    Ok(out)
}

/// Min-cost assignment of every row to a distinct column (`nr <= nc`),
/// by shortest augmenting paths over dual potentials. Returns the column
/// matched to each row. O(nr^2 * nc).
fn hungarian_min<C: Fn(usize, usize) -> f64>(nr: usize, nc: usize, cost: C) -> Vec<usize> {
    debug_assert!(nr <= nc);
    // 1-based internally; column 0 is the virtual root.
    let mut u = vec![0.0f64; nr + 1];
    let mut v = vec![0.0f64; nc + 1];
    let mut matched_row = vec![0usize; nc + 1];
    let mut way = vec![0usize; nc + 1];
    for i in 1..=nr {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; nc + 1];
        let mut used = vec![false; nc + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=nc {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < min_slack[j] {
                        min_slack[j] = cur;
                        way[j] = j0;
                    }
                    if min_slack[j] < delta {
                        delta = min_slack[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=nc {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path back to the root.
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![usize::MAX; nr];
    for j in 1..=nc {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Maximum-score matching over the given row/column subsets (global
/// indices), solved exactly. Pairs come back sorted by row index.
fn optimal_pairs(m: &ScoreMatrix, rows: &[usize], cols: &[usize]) -> Vec<(usize, usize)> {
    if rows.is_empty() || cols.is_empty() {
        return vec![];
    }
    let mut pairs: Vec<(usize, usize)> = if rows.len() <= cols.len() {
        hungarian_min(rows.len(), cols.len(), |i, j| -m.get(rows[i], cols[j]))
            .into_iter()
            .enumerate()
            .map(|(i, j)| (rows[i], cols[j]))
            .collect()
    } else {
        hungarian_min(cols.len(), rows.len(), |j, i| -m.get(rows[i], cols[j]))
            .into_iter()
            .enumerate()
            .map(|(j, i)| (rows[i], cols[j]))
            .collect()
    };
    pairs.sort_unstable();
    pairs
}

/// Rebuilds the optimum as the lexicographically smallest pair sequence
/// whose canonical objective equals `target` exactly. Returns None if no
/// candidate reproduces the target bit-for-bit, which can only happen
/// when distinct optimal pair sets round differently.
fn lex_smallest_optimal(m: &ScoreMatrix, target: f64) -> Option<Vec<(usize, usize)>> {
    let n_pairs = m.rows().min(m.cols());
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(n_pairs);
    let mut free_cols: Vec<usize> = (0..m.cols()).collect();
    let mut min_row = 0usize;
    for pos in 0..n_pairs {
        let remaining = n_pairs - pos - 1;
        let mut fixed: Option<(usize, usize)> = None;
        'candidates: for row in min_row..=(m.rows() - remaining - 1) {
            for (ci, &col) in free_cols.iter().enumerate() {
                let tail_rows: Vec<usize> = ((row + 1)..m.rows()).collect();
                let mut tail_cols = free_cols.clone();
                tail_cols.remove(ci);
                let completion = optimal_pairs(m, &tail_rows, &tail_cols);
                let mut candidate = chosen.clone();
                candidate.push((row, col));
                candidate.extend(completion);
                if canonical_objective(m, &candidate) == target {
                    fixed = Some((row, col));
                    free_cols.remove(ci);
                    break 'candidates;
                }
            }
        }
        let (row, col) = fixed?;
        chosen.push((row, col));
        min_row = row + 1;
    }
    Some(chosen)
}

/// Exact maximum-score assignment of `min(rows, cols)` disjoint pairs.
///
/// Ties between equally scoring pair sets are broken toward the
/// lexicographically smallest pair sequence. An empty matrix yields the
/// empty assignment with objective 0.
pub fn solve_max_assignment(m: &ScoreMatrix) -> Assignment {
    if m.rows().min(m.cols()) == 0 {
        return Assignment::empty();
    }
    let all_rows: Vec<usize> = (0..m.rows()).collect();
    let all_cols: Vec<usize> = (0..m.cols()).collect();
    let initial = optimal_pairs(m, &all_rows, &all_cols);
    let target = canonical_objective(m, &initial);
    let pairs = lex_smallest_optimal(m, target).unwrap_or(initial);
    let objective = canonical_objective(m, &pairs);
    Assignment { pairs, objective }
}

/// Brute-force evaluation of every candidate matching; the shipping test
/// oracle for [`solve_max_assignment`].
pub fn solve_max_assignment_bruteforce(m: &ScoreMatrix) -> Result<Assignment, AssignmentError> {
    let n_pairs = m.rows().min(m.cols());
    if n_pairs == 0 {
        return Ok(Assignment::empty());
    }
    if n_pairs > BRUTEFORCE_MIN_DIM_LIMIT {
        return Err(AssignmentError::SizeLimit {
            count: factorial_ratio(m.rows().max(m.cols()), n_pairs),
            limit: BRUTEFORCE_MIN_DIM_LIMIT,
        });
    }
    let large = m.rows().max(m.cols());
    let count = factorial_ratio(large, n_pairs);
    if count > BRUTEFORCE_COUNT_LIMIT as u128 {
        return Err(AssignmentError::SizeLimit {
            count,
            limit: BRUTEFORCE_COUNT_LIMIT,
        });
    }
    let rows_are_small = m.rows() <= m.cols();
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    for_each_ordered_selection(large, n_pairs, &mut |sel| {
        let mut pairs: Vec<(usize, usize)> = if rows_are_small {
            sel.iter().enumerate().map(|(i, &j)| (i, j)).collect()
        } else {
            sel.iter().enumerate().map(|(j, &i)| (i, j)).collect()
        };
        pairs.sort_unstable();
        let objective = canonical_objective(m, &pairs);
        let better = match &best {
            None => true,
            Some((bo, bp)) => objective > *bo || (objective == *bo && pairs < *bp),
        };
        if better {
            best = Some((objective, pairs));
        }
    });
    let (objective, pairs) = best.expect("nonempty enumeration");
    Ok(Assignment { pairs, objective })
}
