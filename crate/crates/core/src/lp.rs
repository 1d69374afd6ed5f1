//! Dense two-phase primal simplex.
//!
//! Problems here have a few dozen variables, so the tableau is kept dense and
//! pivoting follows Bland's rule (smallest eligible index for both the
//! entering and the leaving variable), which rules out cycling.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const FEAS_EPS: f64 = 1e-9;
const DEGENERATE_RUN: usize = 20;
/// Largest row-scaled violation accepted in a returned optimum.
const VERIFY_TOL: f64 = 1e-7;

/// `maximize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper`.
///
/// `upper` entries may be `f64::INFINITY`; `lower` entries must be finite.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// `n` variables in `[0, inf)` with objective `c`.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        Self {
            c,
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            ..Self::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }

    /// Largest constraint violation of `x`, absolute, each row scaled by its
    /// largest coefficient.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, &b) in self.a_ub.iter().zip(&self.b_ub) {
            let s = row_scale(row);
            worst = worst.max((dot(row, x) - b) / s);
        }
        for (row, &b) in self.a_eq.iter().zip(&self.b_eq) {
            let s = row_scale(row);
            worst = worst.max((dot(row, x) - b).abs() / s);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.c.len();
        let check_len = |what, found: usize| {
            if found == n {
                Ok(())
            } else {
                Err(LpError::DimensionMismatch {
                    what,
                    expected: n,
                    found,
                })
            }
        };
        check_len("lower", self.lower.len())?;
        check_len("upper", self.upper.len())?;
        for row in &self.a_ub {
            check_len("a_ub row", row.len())?;
        }
        for row in &self.a_eq {
            check_len("a_eq row", row.len())?;
        }
        if self.b_ub.len() != self.a_ub.len() {
            return Err(LpError::DimensionMismatch {
                what: "b_ub",
                expected: self.a_ub.len(),
                found: self.b_ub.len(),
            });
        }
        if self.b_eq.len() != self.a_eq.len() {
            return Err(LpError::DimensionMismatch {
                what: "b_eq",
                expected: self.a_eq.len(),
                found: self.b_eq.len(),
            });
        }
        let all_finite = self.c.iter().all(|v| v.is_finite())
            && self.b_ub.iter().all(|v| v.is_finite())
            && self.b_eq.iter().all(|v| v.is_finite())
            && self.a_ub.iter().flatten().all(|v| v.is_finite())
            && self.a_eq.iter().flatten().all(|v| v.is_finite())
            && self.lower.iter().all(|v| v.is_finite())
            && self.upper.iter().all(|v| !v.is_nan());
        if !all_finite {
            return Err(LpError::NonFinite);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub status: LpStatus,
    /// Basic columns of the final tableau: `0..n` are the structural
    /// variables, higher indices are slacks in row order.
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("coefficients, right-hand sides and lower bounds must be finite")]
    NonFinite,
    #[error("simplex pivot budget exhausted")]
    PivotLimit,
    #[error("simplex solution failed verification against the constraints")]
    Inaccurate,
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let first = solve_with_rule(lp, DEGENERATE_RUN)?;
    if first.status != LpStatus::Optimal || lp.max_violation(&first.x) <= VERIFY_TOL {
        return Ok(first);
    }
    // Round-off drifted the tableau; retry along Bland's path.
    let second = solve_with_rule(lp, 0)?;
    if second.status == LpStatus::Optimal && lp.max_violation(&second.x) > VERIFY_TOL {
        return Err(LpError::Inaccurate);
    }
    Ok(second)
}

/// Simplex with Dantzig pricing until `degenerate_run` degenerate pivots in
/// a row, then Bland's rule.
fn solve_with_rule(lp: &LinearProgram, degenerate_run: usize) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.c.len();

    // Shift to y = x - lower >= 0 and collect rows as (coeffs, rhs, is_eq).
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (row, &b) in lp.a_ub.iter().zip(&lp.b_ub) {
        rows.push((row.clone(), b - dot(row, &lp.lower), false));
    }
    for (j, (&lo, &hi)) in lp.lower.iter().zip(&lp.upper).enumerate() {
        if hi.is_finite() {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            rows.push((row, hi - lo, false));
        }
    }
    for (row, &b) in lp.a_eq.iter().zip(&lp.b_eq) {
        rows.push((row.clone(), b - dot(row, &lp.lower), true));
    }

    // Row equilibration; empty rows are either trivially satisfied or infeasible.
    let mut kept = Vec::with_capacity(rows.len());
    for (mut row, mut b, is_eq) in rows {
        let s = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if s == 0.0 {
            let ok = if is_eq { b.abs() <= FEAS_EPS } else { b >= -FEAS_EPS };
            if !ok {
                return Ok(infeasible(n));
            }
            continue;
        }
        row.iter_mut().for_each(|v| *v /= s);
        b /= s;
        kept.push((row, b, is_eq));
    }

    // Column scaling keeps reduced costs comparable across variables with
    // very different units (seconds against bits).
    let mut col_scale = vec![1.0; n];
    for (j, cs) in col_scale.iter_mut().enumerate() {
        let s = kept.iter().fold(0.0f64, |a, (r, _, _)| a.max(r[j].abs()));
        if s > 0.0 {
            *cs = s;
        }
    }
    for (row, _, _) in kept.iter_mut() {
        for (v, &s) in row.iter_mut().zip(&col_scale) {
            *v /= s;
        }
    }
    let cost: Vec<f64> = lp.c.iter().zip(&col_scale).map(|(c, s)| c / s).collect();

    let mut tab = Tableau::build(n, &kept);
    let cost_scale = cost.iter().fold(1.0f64, |a, v| a.max(v.abs()));

    // Phase 1: maximize -(sum of artificials).
    if tab.num_art > 0 {
        let mut phase1 = vec![0.0; tab.width()];
        for j in tab.art_start()..tab.art_start() + tab.num_art {
            phase1[j] = -1.0;
        }
        tab.set_objective(&phase1);
        tab.optimize(tab.width(), 1.0, degenerate_run).ok_or(LpError::PivotLimit)?;
        if tab.objective_value() < -FEAS_EPS * (1.0 + tab.rhs_scale()) {
            return Ok(infeasible(n));
        }
        tab.expel_artificials();
    }

    // Phase 2 over structural and slack columns only.
    let mut phase2 = vec![0.0; tab.width()];
    phase2[..n].copy_from_slice(&cost);
    tab.set_objective(&phase2);
    let limit = tab.art_start();
    if !tab.optimize(limit, cost_scale, degenerate_run).ok_or(LpError::PivotLimit)? {
        return Ok(LpSolution {
            x: vec![f64::NAN; n],
            value: f64::INFINITY,
            status: LpStatus::Unbounded,
            basis: tab.basis.clone(),
        });
    }

    let mut x = lp.lower.clone();
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] += tab.rhs(i) / col_scale[bv];
        }
    }
    let value = dot(&lp.c, &x);
    Ok(LpSolution {
        x,
        value,
        status: LpStatus::Optimal,
        basis: tab.basis.clone(),
    })
}

fn infeasible(n: usize) -> LpSolution {
    LpSolution {
        x: vec![f64::NAN; n],
        value: f64::NEG_INFINITY,
        status: LpStatus::Infeasible,
        basis: Vec::new(),
    }
}

/// Rows hold `[coefficients..., rhs]`; the last row is the reduced-cost row.
struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    n: usize,
    num_slack: usize,
    num_art: usize,
}

impl Tableau {
    fn build(n: usize, kept: &[(Vec<f64>, f64, bool)]) -> Self {
        let num_slack = kept.iter().filter(|r| !r.2).count();
        let num_art = kept
            .iter()
            .filter(|(_, b, is_eq)| *is_eq || *b < 0.0)
            .count();
        let width = n + num_slack + num_art;
        let mut rows = Vec::with_capacity(kept.len());
        let mut basis = Vec::with_capacity(kept.len());
        let (mut si, mut ai) = (0, 0);
        for (coeffs, b, is_eq) in kept {
            let mut row = vec![0.0; width + 1];
            row[..n].copy_from_slice(coeffs);
            let mut slack_col = None;
            if !is_eq {
                row[n + si] = 1.0;
                slack_col = Some(n + si);
                si += 1;
            }
            row[width] = *b;
            if *b < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            if *is_eq || *b < 0.0 {
                let col = n + num_slack + ai;
                row[col] = 1.0;
                basis.push(col);
                ai += 1;
            } else {
                basis.push(slack_col.expect("inequality rows carry a slack"));
            }
            rows.push(row);
        }
        Self {
            rows,
            obj: vec![0.0; width + 1],
            basis,
            n,
            num_slack,
            num_art,
        }
    }

    fn width(&self) -> usize {
        self.n + self.num_slack + self.num_art
    }

    fn art_start(&self) -> usize {
        self.n + self.num_slack
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width()]
    }

    fn rhs_scale(&self) -> f64 {
        let w = self.width();
        self.rows.iter().fold(0.0f64, |a, r| a.max(r[w].abs()))
    }

    /// The objective row stores `c_j - c_B B^-1 A_j`; its rhs entry holds
    /// minus the current objective value.
    fn set_objective(&mut self, c: &[f64]) {
        let w = self.width();
        self.obj = vec![0.0; w + 1];
        self.obj[..w].copy_from_slice(c);
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = c[bv];
            if cb != 0.0 {
                for (o, &r) in self.obj.iter_mut().zip(&self.rows[i]) {
                    *o -= cb * r;
                }
            }
        }
    }

    fn objective_value(&self) -> f64 {
        -self.obj[self.width()]
    }

    /// Primal simplex over columns `< limit`: largest reduced cost first,
    /// switching to Bland's rule after a run of degenerate pivots so the
    /// method cannot cycle. `None` means the pivot budget ran out.
    fn optimize(&mut self, limit: usize, cost_scale: f64, degenerate_run: usize) -> Option<bool> {
        let w = self.width();
        let threshold = COST_EPS * cost_scale;
        let budget = 50 * (self.rows.len() + w) + 1000;
        let mut degenerate = 0usize;
        for _ in 0..budget {
            let enter = if degenerate < degenerate_run {
                (0..limit)
                    .filter(|&j| self.obj[j] > threshold)
                    .max_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            } else {
                (0..limit).find(|&j| self.obj[j] > threshold)
            };
            let Some(enter) = enter else {
                return Some(true);
            };
            let bland = degenerate >= degenerate_run;
            let Some((row, ratio)) = self.leaving_row(enter, bland) else {
                return Some(false);
            };
            if ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(row, enter);
        }
        None
    }

    /// Minimum-ratio row for column `enter`. Ties go to the lowest basic
    /// index under Bland's rule and to the largest pivot element otherwise,
    /// which keeps the tableau better conditioned on near-parallel rows.
    fn leaving_row(&self, enter: usize, bland: bool) -> Option<(usize, f64)> {
        let w = self.width();
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = row[enter];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = row[w].max(0.0) / a;
            let Some((li, lr)) = leave else {
                leave = Some((i, ratio));
                continue;
            };
            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
            let better = if tie {
                if bland {
                    self.basis[i] < self.basis[li]
                } else {
                    a > self.rows[li][enter]
                }
            } else {
                ratio < lr
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        leave
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, &pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Pivots zero-level artificials out of the basis and drops rows that
    /// turn out to be linearly dependent.
    fn expel_artificials(&mut self) {
        let start = self.art_start();
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= start {
                if let Some(j) = (0..start).find(|&j| self.rows[i][j].abs() > 1e-9) {
                    self.pivot(i, j);
                } else {
                    self.rows.remove(i);
                    self.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn row_scale(row: &[f64]) -> f64 {
    let s = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_box() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_le(vec![1.0], 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equality_simplex() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_eq(vec![1.0, 1.0], 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_le(vec![1.0], -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.add_le(vec![0.0, 1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bounds_and_shifted_lower() {
        let mut lp = LinearProgram::new(vec![-1.0, 2.0]);
        lp.set_bounds(0, 0.5, 3.0);
        lp.set_bounds(1, -2.0, 4.0);
        lp.add_le(vec![1.0, 1.0], 3.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 0.5).abs() < 1e-12);
        assert!((sol.x[1] - 2.5).abs() < 1e-12);
        assert!((sol.value - 4.5).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add_eq(vec![1.0, 1.0], 2.0);
        lp.add_eq(vec![2.0, 2.0], 4.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_magnitudes() {
        // max 1e7 t + r  s.t.  t + 1e-8 r = 0.1, r <= 5e6 t,  t <= 0.1
        let mut lp = LinearProgram::new(vec![1e7, 1.0]);
        lp.add_eq(vec![1.0, 1e-8], 0.1);
        lp.add_le(vec![-5e6, 1.0], 0.0);
        lp.set_bounds(0, 0.0, 0.1);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(lp.max_violation(&sol.x) < 1e-8);
        // t (1 + 5e6 * 1e-8) = 0.1 at the optimum
        let expected = 1.5e7 * 0.1 / 1.05;
        assert!((sol.value - expected).abs() / expected < 1e-10, "{}", sol.value);
    }

    #[test]
    fn dimension_mismatch() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_le(vec![1.0], 1.0);
        assert!(matches!(
            solve_lp(&lp),
            Err(LpError::DimensionMismatch { what: "a_ub row", .. })
        ));
    }
}
