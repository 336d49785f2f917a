//! Two-phase primal simplex on a dense tableau for
//! `min cᵗu  s.t.  a u = b, u >= 0`.
//!
//! Phase one starts from an all-artificial basis. The artificial block is kept
//! in the tableau because it holds the basis inverse, which lets each phase run
//! on a slightly perturbed right-hand side and then restore the exact one.
//! Perturbation breaks the massive degeneracy of moment systems (most moments
//! of an orthonormal basis vanish); the few primal infeasibilities left after
//! restoring are removed with dual simplex pivots. Pricing is Dantzig's rule,
//! falling back to Bland's rule after a run of degenerate pivots.

use log::debug;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm2, pivoted_qr, Matrix};

#[derive(Debug, Clone)]
pub struct LpOptions {
    /// Relative feasibility tolerance: equality constraints must hold to `ftol * (1 + ||b||)`.
    pub ftol: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    /// Relative tolerance on reduced costs.
    pub dual_tol: f64,
    /// Consecutive degenerate pivots after which Bland's rule takes over.
    pub stall_limit: usize,
    /// Relative size of the right-hand side perturbation; zero disables it.
    pub perturbation: f64,
    /// Defaults to `50 * (rows + cols)`.
    pub max_pivots: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            ftol: 1e-9,
            pivot_tol: 1e-11,
            dual_tol: 1e-11,
            stall_limit: 50,
            perturbation: 1e-7,
            max_pivots: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub u: Vec<f64>,
    pub objective: f64,
    /// Structural columns in the final basis, ascending.
    pub basis: Vec<usize>,
    pub status: LpStatus,
    pub pivots: usize,
    /// Sum of artificial values at the end of phase one.
    pub phase_one_objective: f64,
}

pub fn simplex_lp(a: &Matrix, b: &[f64], c: &[f64]) -> Result<LpResult> {
    simplex_lp_with(a, b, c, &LpOptions::default())
}

pub fn simplex_lp_with(a: &Matrix, b: &[f64], c: &[f64], opts: &LpOptions) -> Result<LpResult> {
    a.check_finite()?;
    let (rows, cols) = (a.rows(), a.cols());
    if b.len() != rows || c.len() != cols {
        return Err(Error::InvalidInput(format!(
            "constraint matrix is {rows}x{cols}, got b of length {} and c of length {}",
            b.len(),
            c.len()
        )));
    }
    if b.iter().chain(c).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite b or c".into()));
    }
    let max_pivots = opts.max_pivots.unwrap_or(50 * (rows + cols));
    let mut tab = Tableau::new(a, b);
    let feas_tol = opts.ftol * (1.0 + norm2(b));
    let infeasible = |tab: &Tableau, phase_one_objective: f64| {
        debug!("simplex phase one ended at {phase_one_objective:e} > {feas_tol:e}");
        Ok(LpResult {
            u: vec![0.0; cols],
            objective: f64::NAN,
            basis: tab.structural_basis(),
            status: LpStatus::Infeasible,
            pivots: tab.pivots,
            phase_one_objective,
        })
    };

    // Phase one: minimize the sum of artificials over all columns.
    let mut cost_one = vec![0.0; cols + rows];
    cost_one[cols..].iter_mut().for_each(|v| *v = 1.0);
    let eligible = cols + rows;
    tab.perturb(opts.perturbation);
    tab.price(&cost_one);
    let unbounded = tab.iterate(opts, eligible, max_pivots)?;
    debug_assert!(unbounded.is_none(), "phase one is bounded below by zero");
    tab.restore_rhs();
    tab.price(&cost_one);
    if !tab.dual_repair(opts, eligible, feas_tol, max_pivots)? {
        let p1 = tab.artificial_sum();
        return infeasible(&tab, p1.max(feas_tol * 2.0));
    }
    let phase_one_objective = tab.artificial_sum();
    if phase_one_objective > feas_tol {
        return infeasible(&tab, phase_one_objective);
    }
    tab.drive_out_artificials(opts.pivot_tol);

    // Phase two over structural columns only.
    let mut cost_two = c.to_vec();
    cost_two.resize(cols + rows, 0.0);
    tab.perturb(opts.perturbation);
    tab.price(&cost_two);
    let status = match tab.iterate(opts, cols, max_pivots)? {
        Some(column) => {
            debug!("simplex unbounded along column {column}");
            LpStatus::Unbounded
        }
        None => LpStatus::Optimal,
    };
    tab.restore_rhs();
    tab.price(&cost_two);
    if status == LpStatus::Optimal && !tab.dual_repair(opts, cols, feas_tol, max_pivots)? {
        // Phase one certified feasibility, so this only happens through rounding.
        let p1 = tab.artificial_sum();
        return infeasible(&tab, p1.max(feas_tol * 2.0));
    }

    let mut u = tab.basic_solution();
    if status == LpStatus::Optimal {
        refine_basic_solution(a, b, &tab.structural_basis(), &mut u, feas_tol);
    }
    let objective = c.iter().zip(&u).map(|(ci, ui)| ci * ui).sum();
    Ok(LpResult {
        u,
        objective,
        basis: tab.structural_basis(),
        status,
        pivots: tab.pivots,
        phase_one_objective,
    })
}

/// Recomputes the basic variables from a fresh factorization of the basis
/// columns, discarding the rounding accumulated over many pivots.
fn refine_basic_solution(a: &Matrix, b: &[f64], basis: &[usize], u: &mut [f64], feas_tol: f64) {
    if basis.is_empty() {
        return;
    }
    let ab = a.select_columns(basis);
    let Ok(qr) = pivoted_qr(&ab) else { return };
    let k = basis.len();
    let qtb = qr.q.tr_matvec(b);
    let rk = qr.r.truncate_columns(k);
    let Ok(y) = crate::linalg::solve_upper_triangular(&rk, &qtb[..k]) else {
        return;
    };
    let mut fresh = vec![0.0; k];
    for (pos, &col) in qr.perm.iter().enumerate() {
        fresh[col] = y[pos];
    }
    if fresh.iter().any(|&v| v < -feas_tol) {
        return;
    }
    for (&j, &v) in basis.iter().zip(&fresh) {
        u[j] = v.max(0.0);
    }
}

/// Deterministic, well-spread values in `[0.5, 1.5)` (golden-ratio sequence).
fn spread(i: usize) -> f64 {
    const PHI: f64 = 0.618_033_988_749_894_9;
    0.5 + ((i as f64 + 1.0) * PHI).fract()
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Number of artificial columns, fixed at the original row count.
    arts: usize,
    /// Row-major, `cols + arts + 1` entries per row: structural columns,
    /// artificial columns, right-hand side.
    t: Vec<f64>,
    /// Sign-normalized original right-hand side.
    sb: Vec<f64>,
    /// Reduced costs per column plus, in the last slot, minus the objective value.
    d: Vec<f64>,
    /// Basic variable per row; `cols + k` denotes the artificial of original row `k`.
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn new(a: &Matrix, b: &[f64]) -> Self {
        let (rows, cols) = (a.rows(), a.cols());
        let width = cols + rows + 1;
        let mut t = vec![0.0; rows * width];
        let mut sb = vec![0.0; rows];
        for i in 0..rows {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut t[i * width..(i + 1) * width];
            for j in 0..cols {
                row[j] = sign * a[(i, j)];
            }
            row[cols + i] = 1.0;
            sb[i] = sign * b[i];
            row[width - 1] = sb[i];
        }
        Self {
            rows,
            cols,
            arts: rows,
            t,
            sb,
            d: vec![0.0; width],
            basis: (cols..cols + rows).collect(),
            pivots: 0,
        }
    }

    fn width(&self) -> usize {
        self.cols + self.arts + 1
    }

    fn rhs_col(&self) -> usize {
        self.cols + self.arts
    }

    fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.t[i * w..(i + 1) * w]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width() + self.rhs_col()]
    }

    fn objective(&self) -> f64 {
        -self.d[self.rhs_col()]
    }

    fn artificial_sum(&self) -> f64 {
        (0..self.rows)
            .filter(|&i| self.basis[i] >= self.cols)
            .map(|i| self.rhs(i).max(0.0))
            .sum()
    }

    /// Adds a small positive amount to every basic value. Any such shift is the
    /// exact solution of a nearby right-hand side, and `restore_rhs` undoes it.
    fn perturb(&mut self, rel: f64) {
        if rel == 0.0 {
            return;
        }
        let rc = self.rhs_col();
        let scale = (0..self.rows).fold(1.0f64, |m, i| m.max(self.rhs(i).abs()));
        let w = self.width();
        for i in 0..self.rows {
            self.t[i * w + rc] += rel * scale * spread(i);
        }
    }

    /// Recomputes basic values for the true right-hand side from the basis
    /// inverse held in the artificial block.
    fn restore_rhs(&mut self) {
        let (cols, arts, rc, w) = (self.cols, self.arts, self.rhs_col(), self.width());
        let sb = &self.sb;
        self.t.par_chunks_mut(w).for_each(|row| {
            row[rc] = row[cols..cols + arts]
                .iter()
                .zip(sb)
                .map(|(x, y)| x * y)
                .sum();
        });
    }

    /// Sets reduced costs for the full column cost vector `cost`.
    fn price(&mut self, cost: &[f64]) {
        let rc = self.rhs_col();
        self.d[..rc].copy_from_slice(cost);
        self.d[rc] = 0.0;
        let w = self.width();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, tij) in self.d.iter_mut().zip(&self.t[i * w..(i + 1) * w]) {
                    *dj -= cb * tij;
                }
            }
        }
        for &bi in &self.basis {
            self.d[bi] = 0.0;
        }
    }

    /// Runs primal pivots until optimality, letting columns `0..eligible`
    /// enter. Returns `Some(column)` when unbounded.
    fn iterate(
        &mut self,
        opts: &LpOptions,
        eligible: usize,
        max_pivots: usize,
    ) -> Result<Option<usize>> {
        let scale = self.d[..eligible]
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let dtol = opts.dual_tol * scale;
        let mut bland = false;
        let mut degenerate_run = 0;
        loop {
            let entering = if bland {
                (0..eligible).find(|&j| self.d[j] < -dtol)
            } else {
                let mut best = None;
                let mut best_val = -dtol;
                for j in 0..eligible {
                    if self.d[j] < best_val {
                        best_val = self.d[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(q) = entering else { return Ok(None) };
            let Some(r) = self.ratio_test(q, opts.pivot_tol, bland) else {
                return Ok(Some(q));
            };
            self.check_budget(max_pivots)?;
            let before = self.objective();
            self.pivot(r, q);
            let after = self.objective();
            if after < before - 1e-14 * (1.0 + before.abs()) {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
                if !bland && degenerate_run >= opts.stall_limit {
                    debug!(
                        "simplex stalled after {} pivots, switching to Bland's rule",
                        self.pivots
                    );
                    bland = true;
                }
            }
        }
    }

    fn check_budget(&self, max_pivots: usize) -> Result<()> {
        if self.pivots >= max_pivots {
            return Err(Error::NoConvergence {
                solver: "simplex",
                iterations: self.pivots,
                residual: self.objective(),
                best: self.basic_solution(),
            });
        }
        Ok(())
    }

    /// Dual simplex pivots removing negative basic values while keeping the
    /// reduced costs of columns `0..eligible` nonnegative. Returns false when
    /// some row proves the system infeasible.
    fn dual_repair(
        &mut self,
        opts: &LpOptions,
        eligible: usize,
        feas_tol: f64,
        max_pivots: usize,
    ) -> Result<bool> {
        let tol = feas_tol * 1e-3;
        loop {
            let leaving = (0..self.rows)
                .filter(|&i| self.rhs(i) < -tol)
                .min_by(|&x, &y| self.rhs(x).total_cmp(&self.rhs(y)));
            let Some(r) = leaving else { return Ok(true) };
            let row = self.row(r);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..eligible {
                let trj = row[j];
                if trj >= -opts.pivot_tol || self.basis[r] == j {
                    continue;
                }
                let ratio = self.d[j].max(0.0) / -trj;
                if best.is_none_or(|(bj, br)| ratio < br || (ratio == br && trj < row[bj])) {
                    best = Some((j, ratio));
                }
            }
            let Some((q, _)) = best else {
                debug!(
                    "dual simplex: row {r} has no negative entry, value {:e}",
                    self.rhs(r)
                );
                return Ok(false);
            };
            self.check_budget(max_pivots)?;
            self.pivot(r, q);
        }
    }

    /// Minimum-ratio row for entering column `q`. Ties go to the larger pivot
    /// under Dantzig pricing and to the lowest basic index under Bland's rule.
    fn ratio_test(&self, q: usize, pivot_tol: f64, bland: bool) -> Option<usize> {
        let rc = self.rhs_col();
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let row = self.row(i);
            let tiq = row[q];
            if tiq <= pivot_tol {
                continue;
            }
            let ratio = row[rc].max(0.0) / tiq;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    let better = if tie {
                        if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            tiq > self.row(bi)[q]
                        }
                    } else {
                        ratio < br
                    };
                    if better {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width();
        let piv = self.t[r * w + q];
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].iter().map(|v| v / piv).collect();
        let eliminate = |(i, row): (usize, &mut [f64])| {
            if i == r {
                row.copy_from_slice(&pivot_row);
                row[q] = 1.0;
                return;
            }
            let f = row[q];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
                row[q] = 0.0;
            }
        };
        if self.rows * w > 1 << 15 {
            self.t.par_chunks_mut(w).enumerate().for_each(eliminate);
        } else {
            self.t.chunks_mut(w).enumerate().for_each(eliminate);
        }
        let f = self.d[q];
        for (x, p) in self.d.iter_mut().zip(&pivot_row) {
            *x -= f * p;
        }
        self.d[q] = 0.0;
        self.basis[r] = q;
        self.pivots += 1;
    }

    /// Replaces artificials still basic (at zero level) by structural columns;
    /// rows where no structural entry is usable are redundant and dropped.
    fn drive_out_artificials(&mut self, pivot_tol: f64) {
        let mut in_basis = vec![false; self.cols];
        for &bi in &self.basis {
            if bi < self.cols {
                in_basis[bi] = true;
            }
        }
        let mut i = 0;
        while i < self.rows {
            if self.basis[i] < self.cols {
                i += 1;
                continue;
            }
            let row = self.row(i);
            let scale = row[..self.cols].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let candidate = (0..self.cols)
                .filter(|&j| !in_basis[j])
                .max_by(|&x, &y| row[x].abs().total_cmp(&row[y].abs()).then(y.cmp(&x)));
            match candidate {
                Some(q) if row[q].abs() > pivot_tol.max(1e-9 * scale) => {
                    self.pivot(i, q);
                    in_basis[q] = true;
                    i += 1;
                }
                _ => {
                    debug!("dropping redundant constraint row {i}");
                    let w = self.width();
                    self.t.drain(i * w..(i + 1) * w);
                    self.basis.remove(i);
                    self.rows -= 1;
                }
            }
        }
    }

    fn basic_solution(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.cols];
        for i in 0..self.rows {
            let bi = self.basis[i];
            if bi < self.cols {
                u[bi] = self.rhs(i).max(0.0);
            }
        }
        u
    }

    fn structural_basis(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self
            .basis
            .iter()
            .copied()
            .filter(|&j| j < self.cols)
            .collect();
        b.sort_unstable();
        b
    }
}
