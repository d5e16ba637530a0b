//! Dense two-phase tableau simplex, generic over `f64` and `BigRational`,
//! plus exact certification of a proposed optimal basis.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Coef, LinearProgram, LpSolution, LpStatus, Number, Relation, SolveMode, SolveStats, VarKind};
use crate::error::{Error, Result};

/// Reduced costs and ratios within this of zero count as zero in `f64`.
const FLOAT_TOL: f64 = 1e-9;
/// Tableau entries below this are flushed to zero after each pivot.
const FLOAT_CLEAN: f64 = 1e-12;
/// Float pivots must be at least this fraction of the largest entry in
/// their column (and of 1); smaller ones are usually cancellation noise.
const FLOAT_PIVOT_REL: f64 = 1e-7;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 25;
/// Dense tableau size cap (rows × columns).
pub const MAX_TABLEAU_CELLS: u128 = 1 << 26;

pub(crate) trait Field: Clone + PartialEq + std::fmt::Debug {
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_coef(c: &Coef) -> Self;
    /// Exact zero; used for sparsity only.
    fn is_zero(&self) -> bool;
    /// Sign with the arithmetic's tolerance.
    fn sign(&self) -> i8;
    fn magnitude(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// `self -= a * b`
    fn sub_mul_assign(&mut self, a: &Self, b: &Self);
    fn clean(&mut self) {}
    fn cmp_val(&self, o: &Self) -> Ordering;
    /// Nonnegative up to a tolerance relative to `scale`.
    fn nonneg_within(&self, scale: f64) -> bool;
    fn usable_pivot(&self) -> bool;
    fn to_number(&self) -> Number;
}

impl Field for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_coef(c: &Coef) -> Self {
        c.to_f64()
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn sign(&self) -> i8 {
        if *self > FLOAT_TOL {
            1
        } else if *self < -FLOAT_TOL {
            -1
        } else {
            0
        }
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn clean(&mut self) {
        if self.abs() < FLOAT_CLEAN {
            *self = 0.0;
        }
    }
    fn cmp_val(&self, o: &Self) -> Ordering {
        if (self - o).abs() <= FLOAT_CLEAN * (1.0 + self.abs().max(o.abs())) {
            Ordering::Equal
        } else {
            self.partial_cmp(o).unwrap_or(Ordering::Equal)
        }
    }
    fn nonneg_within(&self, scale: f64) -> bool {
        *self >= -FLOAT_TOL * (1.0 + scale)
    }
    fn usable_pivot(&self) -> bool {
        self.abs() > 1e-11
    }
    fn to_number(&self) -> Number {
        Number::Float(*self)
    }
}

impl Field for BigRational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_coef(c: &Coef) -> Self {
        c.to_rational()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sign(&self) -> i8 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }
    fn magnitude(&self) -> f64 {
        super::rational_to_f64(self).abs()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn cmp_val(&self, o: &Self) -> Ordering {
        self.cmp(o)
    }
    fn nonneg_within(&self, _scale: f64) -> bool {
        !self.is_negative()
    }
    fn usable_pivot(&self) -> bool {
        !Zero::is_zero(self)
    }
    fn to_number(&self) -> Number {
        Number::Rational(self.clone())
    }
}

fn coef_sign(c: &Coef) -> i8 {
    match c {
        Coef::Rational(r) => Field::sign(r),
        Coef::Real(v) => {
            if *v > 0.0 {
                1
            } else if *v < 0.0 {
                -1
            } else {
                0
            }
        }
    }
}

/// Column kinds of the standardized program.
#[derive(Clone, Copy, Debug)]
enum Column {
    /// A variable or, for free variables, either half of its split.
    Structural(usize),
    Slack(usize),
    Artificial(usize),
}

struct StdRow {
    /// Row was multiplied by -1 so that its rhs is nonnegative.
    flipped: bool,
    slack: Option<(usize, bool)>,
    artificial: Option<usize>,
}

/// `A x = b, x >= 0` form: structural columns, then slacks, then artificials.
struct Standard {
    columns: Vec<Column>,
    var_columns: Vec<(usize, Option<usize>)>,
    rows: Vec<StdRow>,
    art_start: usize,
}

impl Standard {
    fn new(lp: &LinearProgram) -> Standard {
        let mut columns = Vec::new();
        let mut var_columns = Vec::new();
        for (v, var) in lp.variables().iter().enumerate() {
            let pos = columns.len();
            columns.push(Column::Structural(v));
            let neg = if var.kind == VarKind::Free {
                columns.push(Column::Structural(v));
                Some(pos + 1)
            } else {
                None
            };
            var_columns.push((pos, neg));
        }
        let mut rows = Vec::new();
        let mut normalized = Vec::new();
        for c in lp.constraints() {
            let s = coef_sign(&c.rhs);
            let flipped = s < 0 || (s == 0 && c.relation == Relation::Ge);
            let rel = if flipped { c.relation.flipped() } else { c.relation };
            normalized.push(rel);
            rows.push(StdRow { flipped, slack: None, artificial: None });
        }
        for (i, rel) in normalized.iter().enumerate() {
            match rel {
                Relation::Le => {
                    rows[i].slack = Some((columns.len(), true));
                    columns.push(Column::Slack(i));
                }
                Relation::Ge => {
                    rows[i].slack = Some((columns.len(), false));
                    columns.push(Column::Slack(i));
                }
                Relation::Eq => {}
            }
        }
        let art_start = columns.len();
        for (i, rel) in normalized.iter().enumerate() {
            if *rel != Relation::Le {
                rows[i].artificial = Some(columns.len());
                columns.push(Column::Artificial(i));
            }
        }
        Standard { columns, var_columns, rows, art_start }
    }

    fn n_cols(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Optimal,
    Unbounded,
}

struct Tableau<F: Field> {
    m: usize,
    width: usize,
    data: Vec<F>,
    obj: Vec<F>,
    basis: Vec<usize>,
    pivots: usize,
    max_pivots: usize,
}

impl<F: Field> Tableau<F> {
    fn new(lp: &LinearProgram, std: &Standard) -> Tableau<F> {
        let m = lp.constraints().len();
        let n = std.n_cols();
        let width = n + 1;
        let mut data = vec![F::zero(); m * width];
        let mut basis = vec![0; m];
        for (i, c) in lp.constraints().iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            let sr = &std.rows[i];
            let flip = |x: F| if sr.flipped { x.neg() } else { x };
            for (v, a) in &c.terms {
                let a = flip(F::from_coef(a));
                let (pos, neg) = std.var_columns[v.0];
                if let Some(nc) = neg {
                    row[nc] = a.neg();
                }
                row[pos] = a;
            }
            row[n] = flip(F::from_coef(&c.rhs));
            if let Some((col, plus)) = sr.slack {
                row[col] = if plus { F::one() } else { F::one().neg() };
                if plus {
                    basis[i] = col;
                }
            }
            if let Some(col) = sr.artificial {
                row[col] = F::one();
                basis[i] = col;
            }
        }
        let max_pivots = 200_000 + 50 * (m + n);
        Tableau { m, width, data, obj: vec![F::zero(); width], basis, pivots: 0, max_pivots }
    }

    fn at(&self, r: usize, c: usize) -> &F {
        &self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> &F {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = F::one().div(self.at(pr, pc));
        let mut prow: Vec<(usize, F)> = Vec::new();
        for k in 0..w {
            let e = &mut self.data[pr * w + k];
            if k == pc {
                *e = F::one();
            } else if !e.is_zero() {
                *e = e.mul(&inv);
                e.clean();
            }
            if !e.is_zero() {
                prow.push((k, e.clone()));
            }
        }
        let eliminate = |row: &mut [F]| {
            let f = row[pc].clone();
            if f.is_zero() {
                return;
            }
            for (k, v) in &prow {
                row[*k].sub_mul_assign(&f, v);
                row[*k].clean();
            }
            row[pc] = F::zero();
        };
        for r in 0..self.m {
            if r != pr {
                eliminate(&mut self.data[r * w..(r + 1) * w]);
            }
        }
        eliminate(&mut self.obj);
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Minimizes the current objective row over columns `< limit`.
    fn optimize(&mut self, limit: usize) -> Result<Phase> {
        let mut degenerate = 0usize;
        loop {
            if self.pivots > self.max_pivots {
                return Err(Error::Solver(format!(
                    "simplex exceeded {} pivots",
                    self.max_pivots
                )));
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut enter: Option<usize> = None;
            for j in 0..limit {
                if self.obj[j].sign() < 0 {
                    match enter {
                        None => enter = Some(j),
                        Some(e) if !bland => {
                            if self.obj[j].cmp_val(&self.obj[e]) == Ordering::Less {
                                enter = Some(j);
                            }
                        }
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some(pc) = enter else { return Ok(Phase::Optimal) };
            let floor = if F::EXACT {
                0.0
            } else {
                FLOAT_PIVOT_REL * (0..self.m).map(|r| self.at(r, pc).magnitude()).fold(1.0, f64::max)
            };
            let mut leave: Option<(usize, F)> = None;
            for r in 0..self.m {
                let a = self.at(r, pc);
                if a.sign() <= 0 || !a.usable_pivot() || a.magnitude() < floor {
                    continue;
                }
                let ratio = self.rhs(r).div(a);
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => match ratio.cmp_val(best) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => {
                            if bland || F::EXACT {
                                self.basis[r] < self.basis[*lr]
                            } else {
                                a.magnitude() > self.at(*lr, pc).magnitude()
                            }
                        }
                    },
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((pr, _)) = leave else { return Ok(Phase::Unbounded) };
            if self.rhs(pr).sign() == 0 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
        }
    }
}

struct Outcome {
    status: LpStatus,
    basis: Vec<usize>,
    pivots: usize,
}

fn run_tableau<F: Field>(lp: &LinearProgram, std: &Standard) -> Result<Outcome> {
    let mut t: Tableau<F> = Tableau::new(lp, std);
    let n = std.n_cols();
    // Phase one: minimize the sum of artificials.
    let art_rows: Vec<usize> = (0..t.m).filter(|&r| t.basis[r] >= std.art_start).collect();
    if !art_rows.is_empty() {
        for &r in &art_rows {
            for k in 0..t.width {
                if k >= std.art_start && k < n {
                    continue;
                }
                let v = t.at(r, k).clone();
                if !v.is_zero() {
                    t.obj[k] = t.obj[k].sub(&v);
                }
            }
        }
        if t.optimize(n)? == Phase::Unbounded {
            // Phase one is bounded below; only lost pivots get here.
            return Err(Error::Solver("phase one lost its pivots".into()));
        }
        let infeasibility = t.obj[n].neg();
        // Residual infeasibility is judged against the size of the data.
        let scale: f64 = lp.constraints().iter().map(|c| c.rhs.to_f64().abs()).sum();
        if !infeasibility.neg().nonneg_within(scale) {
            return Ok(Outcome { status: LpStatus::Infeasible, basis: t.basis, pivots: t.pivots });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..t.m {
            if t.basis[r] < std.art_start {
                continue;
            }
            let mut best: Option<usize> = None;
            for j in 0..std.art_start {
                let a = t.at(r, j);
                if a.sign() != 0
                    && a.usable_pivot()
                    && best.is_none_or(|b| a.magnitude() > t.at(r, b).magnitude())
                {
                    best = Some(j);
                    if F::EXACT {
                        break;
                    }
                }
            }
            if let Some(j) = best {
                t.pivot(r, j);
            }
        }
    }
    // Phase two.
    let costs = standard_costs::<F>(lp, std);
    t.obj = vec![F::zero(); t.width];
    t.obj[..std.art_start].clone_from_slice(&costs[..std.art_start]);
    for r in 0..t.m {
        let b = t.basis[r];
        if b >= std.art_start || costs[b].is_zero() {
            continue;
        }
        let cb = costs[b].clone();
        for k in 0..t.width {
            let v = t.at(r, k).clone();
            if !v.is_zero() {
                t.obj[k].sub_mul_assign(&cb, &v);
                t.obj[k].clean();
            }
        }
    }
    for k in std.art_start..n {
        t.obj[k] = F::zero();
    }
    let status = match t.optimize(std.art_start)? {
        Phase::Optimal => LpStatus::Optimal,
        Phase::Unbounded => LpStatus::Unbounded,
    };
    Ok(Outcome { status, basis: t.basis, pivots: t.pivots })
}

fn standard_costs<F: Field>(lp: &LinearProgram, std: &Standard) -> Vec<F> {
    let mut costs = vec![F::zero(); std.n_cols()];
    for (v, c) in lp.objective() {
        let c = F::from_coef(c);
        let (pos, neg) = std.var_columns[v.0];
        if let Some(nc) = neg {
            costs[nc] = c.neg();
        }
        costs[pos] = c;
    }
    costs
}

struct Certificate<F> {
    x: Vec<F>,
    y: Vec<F>,
    value: F,
    dual_value: F,
}

/// Solves the square system `a z = b` by Gaussian elimination with
/// partial pivoting; `None` when singular.
fn solve_square<F: Field>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = b.len();
    for k in 0..n {
        let mut p: Option<usize> = None;
        for r in k..n {
            if a[r][k].usable_pivot()
                && p.is_none_or(|q| a[r][k].magnitude() > a[q][k].magnitude())
            {
                p = Some(r);
            }
        }
        let p = p?;
        a.swap(k, p);
        b.swap(k, p);
        let inv = F::one().div(&a[k][k]);
        for r in k + 1..n {
            if a[r][k].is_zero() {
                continue;
            }
            let f = a[r][k].mul(&inv);
            let (top, bottom) = a.split_at_mut(r);
            let pivot_row = &top[k];
            for (dst, src) in bottom[0][k..].iter_mut().zip(&pivot_row[k..]) {
                if !src.is_zero() {
                    dst.sub_mul_assign(&f, src);
                }
            }
            let bk = b[k].clone();
            b[r].sub_mul_assign(&f, &bk);
        }
    }
    let mut z = vec![F::zero(); n];
    for k in (0..n).rev() {
        let mut s = b[k].clone();
        for j in k + 1..n {
            if !a[k][j].is_zero() {
                s.sub_mul_assign(&a[k][j], &z[j]);
            }
        }
        z[k] = s.div(&a[k][k]);
    }
    Some(z)
}

/// Recomputes primal and dual solutions from `basis` and checks primal
/// feasibility, dual feasibility and a zero duality gap against the
/// original program.
fn certify<F: Field>(lp: &LinearProgram, std: &Standard, basis: &[usize]) -> Option<Certificate<F>> {
    let n_vars = lp.variables().len();
    let m = lp.constraints().len();
    let mut basic_var = vec![false; n_vars];
    let mut basic_vars = Vec::new();
    let mut covered = vec![false; m];
    for &col in basis {
        match std.columns[col] {
            Column::Structural(v) => {
                if basic_var[v] {
                    return None;
                }
                basic_var[v] = true;
                basic_vars.push(v);
            }
            Column::Slack(i) | Column::Artificial(i) => covered[i] = true,
        }
    }
    basic_vars.sort_unstable();
    let tight: Vec<usize> = (0..m).filter(|&i| !covered[i]).collect();
    if tight.len() != basic_vars.len() {
        return None;
    }
    let k = tight.len();
    let mut col_of = vec![usize::MAX; n_vars];
    for (j, &v) in basic_vars.iter().enumerate() {
        col_of[v] = j;
    }
    let rows: Vec<Vec<(usize, F)>> = lp
        .constraints()
        .iter()
        .map(|c| c.terms.iter().map(|(v, a)| (v.0, F::from_coef(a))).collect())
        .collect();
    let rhs: Vec<F> = lp.constraints().iter().map(|c| F::from_coef(&c.rhs)).collect();
    let mut cost = vec![F::zero(); n_vars];
    for (v, c) in lp.objective() {
        cost[v.0] = F::from_coef(c);
    }

    let mut mat = vec![vec![F::zero(); k]; k];
    for (ti, &i) in tight.iter().enumerate() {
        for (v, a) in &rows[i] {
            if col_of[*v] != usize::MAX {
                mat[ti][col_of[*v]] = a.clone();
            }
        }
    }
    let xb = solve_square(mat.clone(), tight.iter().map(|&i| rhs[i].clone()).collect())?;
    let mut mat_t = vec![vec![F::zero(); k]; k];
    for (r, row) in mat.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            mat_t[c][r] = v.clone();
        }
    }
    let yt = solve_square(mat_t, basic_vars.iter().map(|&v| cost[v].clone()).collect())?;

    let mut x = vec![F::zero(); n_vars];
    for (j, &v) in basic_vars.iter().enumerate() {
        x[v] = xb[j].clone();
    }
    let mut y = vec![F::zero(); m];
    for (ti, &i) in tight.iter().enumerate() {
        y[i] = yt[ti].clone();
    }

    // Primal feasibility.
    for (v, var) in lp.variables().iter().enumerate() {
        if var.kind == VarKind::NonNegative && !x[v].nonneg_within(0.0) {
            return None;
        }
    }
    for (i, c) in lp.constraints().iter().enumerate() {
        let mut lhs = F::zero();
        let mut scale = rhs[i].magnitude();
        for (v, a) in &rows[i] {
            if !x[*v].is_zero() {
                lhs = lhs.add(&a.mul(&x[*v]));
                scale += a.magnitude() * x[*v].magnitude();
            }
        }
        let slack = lhs.sub(&rhs[i]);
        let ok = match c.relation {
            Relation::Ge => slack.nonneg_within(scale),
            Relation::Le => slack.neg().nonneg_within(scale),
            Relation::Eq => slack.nonneg_within(scale) && slack.neg().nonneg_within(scale),
        };
        if !ok {
            return None;
        }
    }
    // Dual feasibility.
    for (i, c) in lp.constraints().iter().enumerate() {
        let ok = match c.relation {
            Relation::Ge => y[i].nonneg_within(0.0),
            Relation::Le => y[i].neg().nonneg_within(0.0),
            Relation::Eq => true,
        };
        if !ok {
            return None;
        }
    }
    let mut reduced = cost.clone();
    let mut rscale = vec![0.0f64; n_vars];
    for (i, row) in rows.iter().enumerate() {
        if y[i].is_zero() {
            continue;
        }
        for (v, a) in row {
            reduced[*v].sub_mul_assign(a, &y[i]);
            rscale[*v] += a.magnitude() * y[i].magnitude();
        }
    }
    for (v, var) in lp.variables().iter().enumerate() {
        let s = rscale[v] + cost[v].magnitude();
        let ok = match var.kind {
            VarKind::NonNegative => reduced[v].nonneg_within(s),
            VarKind::Free => reduced[v].nonneg_within(s) && reduced[v].neg().nonneg_within(s),
        };
        if !ok {
            return None;
        }
    }
    // Objective and dual objective.
    let offset = F::from_coef(&lp.offset());
    let mut value = offset.clone();
    let mut vscale = 0.0;
    for (v, c) in cost.iter().enumerate() {
        if !c.is_zero() && !x[v].is_zero() {
            value = value.add(&c.mul(&x[v]));
            vscale += c.magnitude() * x[v].magnitude();
        }
    }
    let mut dual_value = offset;
    for (i, b) in rhs.iter().enumerate() {
        if !y[i].is_zero() && !b.is_zero() {
            dual_value = dual_value.add(&b.mul(&y[i]));
            vscale += b.magnitude() * y[i].magnitude();
        }
    }
    let gap = value.sub(&dual_value);
    if !(gap.nonneg_within(vscale) && gap.neg().nonneg_within(vscale)) {
        return None;
    }
    Some(Certificate { x, y, value, dual_value })
}

fn optimal_solution<F: Field>(cert: Certificate<F>, mode: SolveMode, stats: SolveStats) -> LpSolution {
    let conv = |v: &F| match (mode, v.to_number()) {
        (SolveMode::Float, n) => Number::Float(n.to_f64()),
        (SolveMode::Rational, n) => n,
    };
    LpSolution {
        status: LpStatus::Optimal,
        mode,
        value: Some(conv(&cert.value)),
        assignment: cert.x.iter().map(conv).collect(),
        duals: cert.y.iter().map(conv).collect(),
        dual_value: Some(conv(&cert.dual_value)),
        stats,
    }
}

fn other_solution(status: LpStatus, mode: SolveMode, stats: SolveStats) -> LpSolution {
    LpSolution {
        status,
        mode,
        value: None,
        assignment: Vec::new(),
        duals: Vec::new(),
        dual_value: None,
        stats,
    }
}

/// Exact answer, reusing a float basis when it certifies.
fn solve_exact(
    lp: &LinearProgram,
    std: &Standard,
    float: Option<&Outcome>,
    mode: SolveMode,
    mut stats: SolveStats,
) -> Result<LpSolution> {
    if let Some(out) = float {
        if out.status == LpStatus::Optimal {
            if let Some(cert) = certify::<BigRational>(lp, std, &out.basis) {
                return Ok(optimal_solution(cert, mode, stats));
            }
        }
    }
    stats.rational_fallback = true;
    let out = run_tableau::<BigRational>(lp, std)?;
    stats.pivots += out.pivots;
    match out.status {
        LpStatus::Optimal => match certify::<BigRational>(lp, std, &out.basis) {
            Some(cert) => Ok(optimal_solution(cert, mode, stats)),
            None => Err(Error::Solver(format!(
                "exact basis for `{}` failed certification",
                lp.name
            ))),
        },
        s => Ok(other_solution(s, mode, stats)),
    }
}

pub(super) fn solve(lp: &LinearProgram, mode: SolveMode) -> Result<LpSolution> {
    let std = Standard::new(lp);
    let cells = lp.constraints().len() as u128 * (std.n_cols() as u128 + 1);
    if cells > MAX_TABLEAU_CELLS {
        return Err(Error::TableTooLarge { cells, limit: MAX_TABLEAU_CELLS });
    }
    let mut stats = SolveStats {
        rows: lp.constraints().len(),
        columns: std.n_cols(),
        pivots: 0,
        rational_fallback: false,
    };
    let float = run_tableau::<f64>(lp, &std).ok();
    if let Some(out) = &float {
        stats.pivots = out.pivots;
    }
    match mode {
        SolveMode::Float => {
            if let Some(out) = &float {
                match out.status {
                    LpStatus::Optimal => {
                        if let Some(cert) = certify::<f64>(lp, &std, &out.basis) {
                            return Ok(optimal_solution(cert, mode, stats));
                        }
                    }
                    // Infeasible or unbounded verdicts are left to exact
                    // arithmetic.
                    _ => {}
                }
            }
            solve_exact(lp, &std, float.as_ref(), mode, stats)
        }
        SolveMode::Rational => solve_exact(lp, &std, float.as_ref(), mode, stats),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_solver_handles_permuted_pivots() {
        let a = vec![vec![0.0, 2.0], vec![3.0, 1.0]];
        let z = solve_square(a, vec![4.0, 5.0]).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12 && (z[1] - 2.0).abs() < 1e-12);
        assert!(solve_square(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn degenerate_program_terminates() {
        // Classic cycling example for Dantzig's rule without safeguards.
        let mut lp = LinearProgram::new("beale");
        let x: Vec<_> = (0..4)
            .map(|i| lp.add_var(format!("x{i}"), VarKind::NonNegative).unwrap())
            .collect();
        let row = |a: [(i64, i64); 4]| -> Vec<(super::super::VarId, Coef)> {
            x.iter().zip(a).map(|(v, (n, d))| (*v, Coef::ratio(n, d))).collect()
        };
        lp.add_constraint("r1", row([(1, 4), (-8, 1), (-1, 1), (9, 1)]), Relation::Le, 0).unwrap();
        lp.add_constraint("r2", row([(1, 2), (-12, 1), (-1, 2), (3, 1)]), Relation::Le, 0).unwrap();
        lp.add_constraint("r3", row([(0, 1), (0, 1), (1, 1), (0, 1)]), Relation::Le, 1).unwrap();
        lp.set_objective(row([(-3, 4), (20, 1), (-1, 2), (6, 1)])).unwrap();
        let s = solve(&lp, SolveMode::Rational).unwrap();
        assert_eq!(s.value_rational(), Some(&BigRational::new((-5).into(), 4.into())));
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new("redundant");
        let a = lp.add_var("a", VarKind::NonNegative).unwrap();
        let b = lp.add_var("b", VarKind::NonNegative).unwrap();
        let t = [(a, Coef::int(1)), (b, Coef::int(1))];
        lp.add_constraint("e1", t.clone(), Relation::Eq, 2).unwrap();
        lp.add_constraint("e2", t.clone(), Relation::Eq, 2).unwrap();
        lp.add_constraint("e3", [(a, Coef::int(2)), (b, Coef::int(2))], Relation::Eq, 4).unwrap();
        lp.set_objective([(a, Coef::int(1)), (b, Coef::int(3))]).unwrap();
        for mode in [SolveMode::Rational, SolveMode::Float] {
            let s = solve(&lp, mode).unwrap();
            assert_eq!(s.value_f64(), Some(2.0));
        }
    }
}
