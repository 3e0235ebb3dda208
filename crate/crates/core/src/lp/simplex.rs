//! Two-phase dense primal simplex over exact rationals.
//!
//! Pivot selection follows Bland's rule throughout (lowest eligible entering
//! column, lowest basic index among tied leaving rows), which guarantees
//! termination without any perturbation bookkeeping. Bounded variables are
//! shifted to nonnegative columns; upper bounds become explicit rows, so the
//! returned solution is a vertex of the original feasible region.

use super::{BasicSolution, LinearProgram, LpError, LpResult, Relation, Sense};
use crate::rat::Rat;

#[derive(Debug, Clone)]
enum ColMap {
    /// x = lo + u
    Shifted { col: usize, lo: Rat },
    /// x = hi - u
    Negated { col: usize, hi: Rat },
    /// x = u_pos - u_neg
    Split { pos: usize, neg: usize },
}

struct Standardized {
    cols: Vec<ColMap>,
    n_structural: usize,
    /// dense rows over structural columns
    rows: Vec<(Vec<Rat>, Relation, Rat)>,
}

fn standardize(lp: &LinearProgram) -> Standardized {
    let mut cols = Vec::with_capacity(lp.vars.len());
    let mut n = 0usize;
    for v in &lp.vars {
        match (&v.lo, &v.hi) {
            (Some(lo), _) => {
                cols.push(ColMap::Shifted { col: n, lo: lo.clone() });
                n += 1;
            }
            (None, Some(hi)) => {
                cols.push(ColMap::Negated { col: n, hi: hi.clone() });
                n += 1;
            }
            (None, None) => {
                cols.push(ColMap::Split { pos: n, neg: n + 1 });
                n += 2;
            }
        }
    }

    let mut rows = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = vec![Rat::zero(); n];
        let mut rhs = c.rhs.clone();
        for (v, a) in &c.coeffs {
            match &cols[*v] {
                ColMap::Shifted { col, lo } => {
                    coeffs[*col] += a;
                    rhs -= &(a * lo);
                }
                ColMap::Negated { col, hi } => {
                    coeffs[*col] -= a;
                    rhs -= &(a * hi);
                }
                ColMap::Split { pos, neg } => {
                    coeffs[*pos] += a;
                    coeffs[*neg] -= &a.clone();
                }
            }
        }
        rows.push((coeffs, c.rel, rhs));
    }
    // upper bounds of doubly-bounded variables become rows in shifted space
    for (vi, v) in lp.vars.iter().enumerate() {
        if let (Some(lo), Some(hi)) = (&v.lo, &v.hi) {
            if let ColMap::Shifted { col, .. } = &cols[vi] {
                let mut coeffs = vec![Rat::zero(); n];
                coeffs[*col] = Rat::one();
                rows.push((coeffs, Relation::Le, hi - lo));
            }
        }
    }

    Standardized {
        cols,
        n_structural: n,
        rows,
    }
}

struct Tableau {
    /// m rows, each of length n_cols + 1 (rhs last)
    t: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    n_cols: usize,
    allowed: Vec<bool>,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rat {
        &self.t[r][self.n_cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pval = self.t[row][col].clone();
        debug_assert!(!pval.is_zero());
        if pval != Rat::one() {
            let inv = pval.recip();
            for x in self.t[row].iter_mut() {
                if !x.is_zero() {
                    *x = &*x * &inv;
                }
            }
        }
        let prow = std::mem::take(&mut self.t[row]);
        for (r, trow) in self.t.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = trow[col].clone();
            if factor.is_zero() {
                continue;
            }
            for (x, p) in trow.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x = &*x - &(&factor * p);
                }
            }
        }
        self.t[row] = prow;
        self.basis[row] = col;
    }

    /// Minimizes `cost` with Bland's rule. Returns Err(Unbounded) if a
    /// negative reduced cost column has no positive entry.
    fn optimize(&mut self, cost: &[Rat]) -> LpResult<()> {
        // reduced costs priced out against the current basis
        let mut z: Vec<Rat> = cost.to_vec();
        z.push(Rat::zero()); // objective cell (negated value), unused directly
        for r in 0..self.t.len() {
            let cb = &cost[self.basis[r]];
            if cb.is_zero() {
                continue;
            }
            let trow = &self.t[r];
            for (j, zj) in z.iter_mut().enumerate() {
                if !trow[j].is_zero() {
                    *zj = &*zj - &(cb * &trow[j]);
                }
            }
        }
        loop {
            let entering = (0..self.n_cols)
                .find(|&j| self.allowed[j] && z[j].is_negative());
            let Some(e) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, Rat)> = None;
            for r in 0..self.t.len() {
                if self.t[r][e].is_positive() {
                    let ratio = self.rhs(r) / &self.t[r][e];
                    let better = match &leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < *lratio || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, e);
            // price the pivot row out of the reduced-cost row
            let ze = z[e].clone();
            if !ze.is_zero() {
                let prow = &self.t[row];
                for (j, zj) in z.iter_mut().enumerate() {
                    if !prow[j].is_zero() {
                        *zj = &*zj - &(&ze * &prow[j]);
                    }
                }
            }
        }
    }
}

/// Solves to an optimal basic (vertex) solution, or reports
/// infeasible/unbounded.
pub fn solve_basic(lp: &LinearProgram) -> LpResult<BasicSolution> {
    lp.validate()?;
    let std_form = standardize(lp);
    let ns = std_form.n_structural;
    let m = std_form.rows.len();

    // layout: structural | slacks/surplus | artificials | rhs
    let mut n_slack = 0usize;
    for (_, rel, _) in &std_form.rows {
        if *rel != Relation::Eq {
            n_slack += 1;
        }
    }
    let mut rows_norm: Vec<(Vec<Rat>, Relation, Rat)> = Vec::with_capacity(m);
    for (coeffs, rel, rhs) in &std_form.rows {
        if rhs.is_negative() {
            let flipped = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            rows_norm.push((coeffs.iter().map(|c| -c).collect(), flipped, -rhs.clone()));
        } else {
            rows_norm.push((coeffs.clone(), *rel, rhs.clone()));
        }
    }
    let mut n_art = 0usize;
    for (_, rel, _) in &rows_norm {
        if *rel != Relation::Le {
            n_art += 1;
        }
    }

    let n_cols = ns + n_slack + n_art;
    let mut t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack_at = ns;
    let mut art_at = ns + n_slack;
    let art_start = ns + n_slack;
    for (coeffs, rel, rhs) in rows_norm {
        let mut row = vec![Rat::zero(); n_cols + 1];
        row[..ns].clone_from_slice(&coeffs);
        row[n_cols] = rhs;
        match rel {
            Relation::Le => {
                row[slack_at] = Rat::one();
                basis.push(slack_at);
                slack_at += 1;
            }
            Relation::Ge => {
                row[slack_at] = -Rat::one();
                slack_at += 1;
                row[art_at] = Rat::one();
                basis.push(art_at);
                art_at += 1;
            }
            Relation::Eq => {
                row[art_at] = Rat::one();
                basis.push(art_at);
                art_at += 1;
            }
        }
        t.push(row);
    }

    let mut tab = Tableau {
        t,
        basis,
        n_cols,
        allowed: vec![true; n_cols],
    };

    if n_art > 0 {
        let mut phase1 = vec![Rat::zero(); n_cols];
        for c in phase1.iter_mut().skip(art_start) {
            *c = Rat::one();
        }
        tab.optimize(&phase1)
            .map_err(|_| LpError::Malformed("phase 1 unbounded".into()))?;
        let infeas: Rat = (0..tab.t.len())
            .filter(|&r| tab.basis[r] >= art_start)
            .map(|r| tab.rhs(r).clone())
            .sum();
        if infeas.is_positive() {
            return Err(LpError::Infeasible);
        }
        // drive leftover zero-value artificials out of the basis
        let mut r = 0;
        while r < tab.t.len() {
            if tab.basis[r] >= art_start {
                debug_assert!(tab.rhs(r).is_zero());
                let e = (0..art_start).find(|&j| !tab.t[r][j].is_zero());
                match e {
                    Some(col) => tab.pivot(r, col),
                    None => {
                        // redundant row
                        tab.t.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for a in tab.allowed.iter_mut().skip(art_start) {
            *a = false;
        }
    }

    // phase 2 cost over standardized columns
    let mut cost = vec![Rat::zero(); n_cols];
    for (v, c) in &lp.objective {
        let signed = if lp.sense == Sense::Max { -c.clone() } else { c.clone() };
        match &std_form.cols[*v] {
            ColMap::Shifted { col, .. } => cost[*col] += &signed,
            ColMap::Negated { col, .. } => cost[*col] -= &signed,
            ColMap::Split { pos, neg } => {
                cost[*pos] += &signed;
                cost[*neg] -= &signed;
            }
        }
    }
    tab.optimize(&cost)?;

    let mut col_val = vec![Rat::zero(); n_cols];
    for r in 0..tab.t.len() {
        col_val[tab.basis[r]] = tab.rhs(r).clone();
    }
    let values: Vec<Rat> = std_form
        .cols
        .iter()
        .map(|cm| match cm {
            ColMap::Shifted { col, lo } => lo + &col_val[*col],
            ColMap::Negated { col, hi } => hi - &col_val[*col],
            ColMap::Split { pos, neg } => &col_val[*pos] - &col_val[*neg],
        })
        .collect();
    assert!(
        lp.is_feasible(&values),
        "simplex produced an infeasible point (internal error)"
    );
    let objective_value = lp.objective_value(&values);
    let in_basis = |c: usize| tab.basis.contains(&c);
    let basic_vars = std_form
        .cols
        .iter()
        .enumerate()
        .filter(|(_, cm)| match cm {
            ColMap::Shifted { col, .. } | ColMap::Negated { col, .. } => in_basis(*col),
            ColMap::Split { pos, neg } => in_basis(*pos) || in_basis(*neg),
        })
        .map(|(v, _)| v)
        .collect();

    Ok(BasicSolution {
        values,
        objective_value,
        basic_vars,
    })
}
