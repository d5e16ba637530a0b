//! Linear programs and a self-contained dense simplex solver.
//!
//! Every bound in this crate is the optimum of a small linear program.
//! Programs are stated as minimizations over named variables with `<=`,
//! `>=` and `=` rows. [`solve`] supports two arithmetic modes:
//!
//! * [`SolveMode::Float`]: a two-phase tableau simplex in `f64`.
//! * [`SolveMode::Rational`]: the float pass proposes an optimal basis,
//!   which is then re-solved and certified in exact rational arithmetic
//!   (primal feasibility, dual feasibility and zero duality gap). When the
//!   proposed basis does not certify, the whole simplex is rerun over
//!   `BigRational`.
//!
//! Pivoting is Dantzig's rule, switching to Bland's rule during long runs
//! of degenerate pivots. It is deterministic, so repeated solves of the same
//! program follow the same pivot sequence.

mod number;
mod reduce;
mod simplex;

use std::collections::HashMap;
use std::fmt::Write as _;

pub use number::{
    format_rational, parse_rational, rational_to_f64, snap_rational, Coef, Number,
    SNAP_MAX_DENOMINATOR, SNAP_TOLERANCE,
};
pub use reduce::{merge_variables, MergedProgram};
pub use simplex::MAX_TABLEAU_CELLS;

use crate::error::{Error, Result};

/// Index of a declared variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    fn flipped(self) -> Relation {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, Coef)>,
    pub relation: Relation,
    pub rhs: Coef,
}

/// A minimization program `min c·x + offset` subject to linear rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub name: String,
    variables: Vec<Variable>,
    by_name: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    objective: Vec<(VarId, Coef)>,
    offset: Option<Coef>,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>) -> Self {
        LinearProgram { name: name.into(), ..Default::default() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind) -> Result<VarId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::DuplicateVariable(name));
        }
        let id = VarId(self.variables.len());
        self.by_name.insert(name.clone(), id);
        self.variables.push(Variable { name, kind });
        Ok(id)
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, Coef)] {
        &self.objective
    }

    pub fn offset(&self) -> Coef {
        self.offset.clone().unwrap_or_else(Coef::zero)
    }

    /// Adds a row; repeated variables are summed and zero terms dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, Coef)>,
        relation: Relation,
        rhs: impl Into<Coef>,
    ) -> Result<()> {
        let name = name.into();
        let terms = self.combine(terms, &name)?;
        let rhs = rhs.into();
        if !rhs.is_finite() {
            return Err(Error::InvalidProgram(format!("row `{name}` has non-finite rhs")));
        }
        self.constraints.push(Constraint { name, terms, relation, rhs });
        Ok(())
    }

    pub(crate) fn truncate_constraints(&mut self, len: usize) {
        self.constraints.truncate(len);
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (VarId, Coef)>) -> Result<()> {
        self.objective = self.combine(terms, "objective")?;
        Ok(())
    }

    pub fn set_offset(&mut self, offset: impl Into<Coef>) {
        self.offset = Some(offset.into());
    }

    fn combine(
        &self,
        terms: impl IntoIterator<Item = (VarId, Coef)>,
        context: &str,
    ) -> Result<Vec<(VarId, Coef)>> {
        let mut out: Vec<(VarId, Coef)> = Vec::new();
        for (v, c) in terms {
            if v.0 >= self.variables.len() {
                return Err(Error::InvalidProgram(format!(
                    "`{context}` references undeclared variable #{}",
                    v.0
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidProgram(format!(
                    "`{context}` has a non-finite coefficient on `{}`",
                    self.variables[v.0].name
                )));
            }
            match out.iter_mut().find(|(u, _)| *u == v) {
                Some((_, acc)) => *acc = acc.add(&c),
                None => out.push((v, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        out.sort_by_key(|(v, _)| *v);
        Ok(out)
    }

    /// True when every coefficient, right-hand side and the offset are exact.
    pub fn is_exact(&self) -> bool {
        self.constraints
            .iter()
            .all(|c| c.rhs.is_exact() && c.terms.iter().all(|(_, a)| a.is_exact()))
            && self.objective.iter().all(|(_, a)| a.is_exact())
            && self.offset.as_ref().is_none_or(Coef::is_exact)
    }

    /// Plain-text dump, one row per line as `name: c1 v1 + c2 v2 REL rhs`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# program: {}", self.name);
        let _ = writeln!(
            s,
            "# {} variables, {} constraints",
            self.variables.len(),
            self.constraints.len()
        );
        let mut obj = self.linear_text(&self.objective);
        if let Some(off) = &self.offset {
            if !off.is_zero() {
                let _ = write!(obj, " + {off}");
            }
        }
        let _ = writeln!(s, "minimize: {obj}");
        let _ = writeln!(s, "subject to:");
        for c in &self.constraints {
            let _ = writeln!(
                s,
                "{}: {} {} {}",
                c.name,
                self.linear_text(&c.terms),
                c.relation.symbol(),
                c.rhs
            );
        }
        let _ = writeln!(s, "bounds:");
        for v in &self.variables {
            match v.kind {
                VarKind::NonNegative => {
                    let _ = writeln!(s, "{} >= 0", v.name);
                }
                VarKind::Free => {
                    let _ = writeln!(s, "{} free", v.name);
                }
            }
        }
        s
    }

    fn linear_text(&self, terms: &[(VarId, Coef)]) -> String {
        if terms.is_empty() {
            return "0".to_string();
        }
        terms
            .iter()
            .map(|(v, c)| format!("{c} {}", self.variables[v.0].name))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Evaluates the objective (with offset) at a float point.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|(v, c)| c.to_f64() * x[v.0]).sum::<f64>()
            + self.offset.as_ref().map_or(0.0, Coef::to_f64)
    }

    /// Largest violation of any row or bound at a float point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a.to_f64() * x[v.0]).sum();
            let rhs = c.rhs.to_f64();
            let viol = match c.relation {
                Relation::Le => lhs - rhs,
                Relation::Ge => rhs - lhs,
                Relation::Eq => (lhs - rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for (v, var) in self.variables.iter().enumerate() {
            if var.kind == VarKind::NonNegative {
                worst = worst.max(-x[v]);
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveMode {
    Rational,
    Float,
}

impl SolveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMode::Rational => "rational",
            SolveMode::Float => "float",
        }
    }

    pub fn parse(s: &str) -> Option<SolveMode> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "exact" => Some(SolveMode::Rational),
            "float" => Some(SolveMode::Float),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub rows: usize,
    pub columns: usize,
    pub pivots: usize,
    /// The exact pass had to rerun the simplex instead of certifying the
    /// float basis.
    pub rational_fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub mode: SolveMode,
    /// Objective value including the offset; `None` unless optimal.
    pub value: Option<Number>,
    /// Primal values per declared variable.
    pub assignment: Vec<Number>,
    /// Dual multipliers per constraint: `>=` rows carry `y >= 0`, `<=` rows
    /// `y <= 0`, equality rows are free.
    pub duals: Vec<Number>,
    /// `b·y + offset`; equals `value` at a certified optimum.
    pub dual_value: Option<Number>,
    pub stats: SolveStats,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value_f64(&self) -> Option<f64> {
        self.value.as_ref().map(Number::to_f64)
    }

    pub fn value_rational(&self) -> Option<&num_rational::BigRational> {
        self.value.as_ref().and_then(Number::as_rational)
    }

    pub fn assignment_f64(&self) -> Vec<f64> {
        self.assignment.iter().map(Number::to_f64).collect()
    }

    /// The optimal value, or an error naming the status.
    pub fn optimal_value(&self) -> Result<f64> {
        match self.status {
            LpStatus::Optimal => Ok(self.value_f64().unwrap_or(f64::NAN)),
            LpStatus::Infeasible => Err(Error::Solver("program is infeasible".into())),
            LpStatus::Unbounded => Err(Error::Solver("program is unbounded".into())),
        }
    }
}

/// Solves `lp` in the requested arithmetic.
pub fn solve(lp: &LinearProgram, mode: SolveMode) -> Result<LpSolution> {
    if lp.variables.is_empty() {
        return Err(Error::InvalidProgram(format!("program `{}` has no variables", lp.name)));
    }
    simplex::solve(lp, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn lower_bound_row() {
        let mut lp = LinearProgram::new("t");
        let x = lp.add_var("x", VarKind::NonNegative).unwrap();
        lp.add_constraint("c", [(x, Coef::int(1))], Relation::Ge, 3).unwrap();
        lp.set_objective([(x, Coef::int(1))]).unwrap();
        for mode in [SolveMode::Rational, SolveMode::Float] {
            let s = solve(&lp, mode).unwrap();
            assert_eq!(s.status, LpStatus::Optimal);
            assert_eq!(s.value_f64(), Some(3.0));
        }
        let s = solve(&lp, SolveMode::Rational).unwrap();
        assert_eq!(s.value_rational(), Some(&r(3, 1)));
        assert_eq!(s.dual_value, s.value);
    }

    #[test]
    fn infeasible_row() {
        let mut lp = LinearProgram::new("t");
        let x = lp.add_var("x", VarKind::NonNegative).unwrap();
        lp.add_constraint("c", [(x, Coef::int(1))], Relation::Le, -1).unwrap();
        lp.set_objective([(x, Coef::int(1))]).unwrap();
        for mode in [SolveMode::Rational, SolveMode::Float] {
            assert_eq!(solve(&lp, mode).unwrap().status, LpStatus::Infeasible);
        }
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LinearProgram::new("t");
        let x = lp.add_var("x", VarKind::Free).unwrap();
        lp.add_constraint("c", [(x, Coef::int(1))], Relation::Le, 4).unwrap();
        lp.set_objective([(x, Coef::int(1))]).unwrap();
        for mode in [SolveMode::Rational, SolveMode::Float] {
            assert_eq!(solve(&lp, mode).unwrap().status, LpStatus::Unbounded);
        }
    }

    #[test]
    fn empty_program_is_an_error() {
        let lp = LinearProgram::new("empty");
        assert!(matches!(solve(&lp, SolveMode::Float), Err(Error::InvalidProgram(_))));
    }

    #[test]
    fn undeclared_variable_rejected() {
        let mut lp = LinearProgram::new("t");
        lp.add_var("x", VarKind::NonNegative).unwrap();
        let err = lp.add_constraint("bad", [(VarId(3), Coef::int(1))], Relation::Ge, 0);
        assert!(err.is_err());
        assert!(lp.add_var("x", VarKind::Free).is_err());
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x - y  s.t. x + y = 1, x - y >= -3, y <= 5 ; x free, y free
        let mut lp = LinearProgram::new("t");
        let x = lp.add_var("x", VarKind::Free).unwrap();
        let y = lp.add_var("y", VarKind::Free).unwrap();
        lp.add_constraint("sum", [(x, Coef::int(1)), (y, Coef::int(1))], Relation::Eq, 1).unwrap();
        lp.add_constraint("diff", [(x, Coef::int(1)), (y, Coef::int(-1))], Relation::Ge, -3)
            .unwrap();
        lp.add_constraint("ycap", [(y, Coef::int(1))], Relation::Le, 5).unwrap();
        lp.set_objective([(x, Coef::int(1)), (y, Coef::int(-1))]).unwrap();
        let s = solve(&lp, SolveMode::Rational).unwrap();
        assert_eq!(s.value_rational(), Some(&r(-3, 1)));
        assert_eq!(s.dual_value, s.value);
        let xs = s.assignment_f64();
        assert!((xs[0] + 1.0).abs() < 1e-12 && (xs[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dump_format_lists_rows() {
        let mut lp = LinearProgram::new("demo");
        let x = lp.add_var("x", VarKind::NonNegative).unwrap();
        let y = lp.add_var("y", VarKind::Free).unwrap();
        lp.add_constraint("c1", [(x, Coef::int(2)), (y, Coef::ratio(-1, 2))], Relation::Le, 7)
            .unwrap();
        lp.set_objective([(x, Coef::int(1))]).unwrap();
        lp.set_offset(Coef::real(-0.5));
        let text = lp.dump();
        assert!(text.contains("c1: 2 x + -1/2 y <= 7"));
        assert!(text.contains("minimize: 1 x + -0.5"));
        assert!(text.contains("y free"));
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{Signed, Zero};
    use proptest::prelude::*;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    /// `Σ a_j x_j ≥ b` rows over nonnegative variables, boxed by `x_j ≤ 10`.
    #[derive(Clone, Debug)]
    struct Boxed {
        rows: Vec<(Vec<i64>, i64)>,
        cost: Vec<i64>,
    }

    fn boxed(n: usize) -> impl Strategy<Value = Boxed> {
        let row = (prop::collection::vec(-3i64..=3, n), -6i64..=6);
        (prop::collection::vec(row, 1..6), prop::collection::vec(-3i64..=3, n))
            .prop_map(|(rows, cost)| Boxed { rows, cost })
    }

    impl Boxed {
        fn n(&self) -> usize {
            self.cost.len()
        }

        fn program(&self, scale: &Q, extra: &[(Vec<i64>, i64)]) -> LinearProgram {
            let mut lp = LinearProgram::new("p");
            let xs: Vec<VarId> = (0..self.n()).map(|j| lp.add_var(format!("x{j}"), VarKind::NonNegative).unwrap()).collect();
            for (i, (a, b)) in self.rows.iter().chain(extra).enumerate() {
                let terms = xs.iter().zip(a).map(|(&x, &c)| (x, Coef::int(c)));
                lp.add_constraint(format!("r{i}"), terms, Relation::Ge, *b).unwrap();
            }
            for &x in &xs {
                lp.add_constraint(format!("box{}", x.0), [(x, Coef::int(1))], Relation::Le, 10).unwrap();
            }
            let s = Coef::ratio(
                i64::try_from(scale.numer()).unwrap(),
                i64::try_from(scale.denom()).unwrap(),
            );
            lp.set_objective(xs.iter().zip(&self.cost).map(|(&x, &c)| (x, Coef::int(c).mul(&s)))).unwrap();
            lp
        }

        /// Every row (including bounds) as `a·x ≥ b`.
        fn halfplanes(&self) -> Vec<(Vec<Q>, Q)> {
            let n = self.n();
            let mut out: Vec<(Vec<Q>, Q)> = self.rows.iter().map(|(a, b)| (a.iter().map(|&c| q(c)).collect(), q(*b))).collect();
            for j in 0..n {
                let mut e = vec![q(0); n];
                e[j] = q(1);
                out.push((e.clone(), q(0)));
                out.push((e.iter().map(|v| -v).collect(), q(-10)));
            }
            out
        }

        /// Exact optimum by enumerating the vertices of a two-variable box.
        fn vertex_optimum(&self) -> Option<Q> {
            assert_eq!(self.n(), 2);
            let h = self.halfplanes();
            let feasible = |x: &[Q]| h.iter().all(|(a, b)| &a[0] * &x[0] + &a[1] * &x[1] >= *b);
            let mut best: Option<Q> = None;
            for i in 0..h.len() {
                for j in i + 1..h.len() {
                    let (a, b) = (&h[i], &h[j]);
                    let det = &a.0[0] * &b.0[1] - &a.0[1] * &b.0[0];
                    if det.is_zero() {
                        continue;
                    }
                    let x0 = (&a.1 * &b.0[1] - &a.0[1] * &b.1) / &det;
                    let x1 = (&a.0[0] * &b.1 - &a.1 * &b.0[0]) / &det;
                    let x = [x0, x1];
                    if feasible(&x) {
                        let v = q(self.cost[0]) * &x[0] + q(self.cost[1]) * &x[1];
                        if best.as_ref().is_none_or(|b| v < *b) {
                            best = Some(v);
                        }
                    }
                }
            }
            best
        }
    }

    fn exact(s: &LpSolution) -> Q {
        s.value_rational().cloned().expect("rational optimum")
    }

    fn rationals(v: &[Number]) -> Vec<Q> {
        v.iter().map(|n| n.as_rational().cloned().expect("rational")).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn two_variable_programs_match_vertex_enumeration(p in boxed(2)) {
            let lp = p.program(&q(1), &[]);
            let s = solve(&lp, SolveMode::Rational).unwrap();
            match p.vertex_optimum() {
                None => prop_assert_eq!(s.status, LpStatus::Infeasible),
                Some(v) => {
                    prop_assert_eq!(exact(&s), v.clone());
                    let f = solve(&lp, SolveMode::Float).unwrap();
                    prop_assert!((f.value_f64().unwrap() - rational_to_f64(&v)).abs() < 1e-9);
                }
            }
        }

        // Dual multipliers have the documented signs, are dual feasible, and
        // b·y equals the optimum exactly.
        #[test]
        fn strong_duality_certificate(p in boxed(3)) {
            let lp = p.program(&q(1), &[]);
            let s = solve(&lp, SolveMode::Rational).unwrap();
            prop_assume!(s.is_optimal());
            let y = rationals(&s.duals);
            let mut reduced: Vec<Q> = p.cost.iter().map(|&c| q(c)).collect();
            let mut by = q(0);
            for (row, yi) in lp.constraints().iter().zip(&y) {
                match row.relation {
                    Relation::Ge => prop_assert!(!yi.is_negative()),
                    Relation::Le => prop_assert!(!yi.is_positive()),
                    Relation::Eq => {}
                }
                for (v, c) in &row.terms {
                    reduced[v.0] -= yi * c.to_rational();
                }
                by += yi * row.rhs.to_rational();
            }
            prop_assert!(reduced.iter().all(|r| !r.is_negative()));
            prop_assert_eq!(by, exact(&s));
            prop_assert_eq!(s.dual_value.clone(), s.value.clone());
        }

        #[test]
        fn objective_scaling(p in boxed(3), num in 1i64..8, den in 1i64..5) {
            let lam = Q::new(num.into(), den.into());
            let base = solve(&p.program(&q(1), &[]), SolveMode::Rational).unwrap();
            let scaled = solve(&p.program(&lam, &[]), SolveMode::Rational).unwrap();
            prop_assert_eq!(base.status, scaled.status);
            prop_assume!(base.is_optimal());
            prop_assert_eq!(exact(&scaled), exact(&base) * &lam);
            // The re-solved minimizer is optimal for the unscaled objective.
            let x = rationals(&scaled.assignment);
            let v: Q = x.iter().zip(&p.cost).map(|(x, &c)| x * q(c)).sum();
            prop_assert_eq!(v, exact(&base));
        }

        #[test]
        fn implied_rows_change_nothing(p in boxed(3), w in (0i64..3, 0i64..3), slack in 0i64..4) {
            let base = solve(&p.program(&q(1), &[]), SolveMode::Rational).unwrap();
            let (a, b) = (&p.rows[0], &p.rows[p.rows.len() - 1]);
            let combo: Vec<i64> = a.0.iter().zip(&b.0).map(|(x, y)| w.0 * x + w.1 * y).collect();
            let extra = vec![
                (combo, w.0 * a.1 + w.1 * b.1 - slack),
                (a.0.clone(), a.1),
            ];
            let more = solve(&p.program(&q(1), &extra), SolveMode::Rational).unwrap();
            prop_assert_eq!(base.status, more.status);
            if base.is_optimal() {
                prop_assert_eq!(exact(&base), exact(&more));
            }
        }
    }

    #[test]
    fn oracle_sanity() {
        // x + y ≥ 3, x − y ≥ −1: min x + 2y at (2, 1)... or (3, 0) → 3.
        let p = Boxed { rows: vec![(vec![1, 1], 3), (vec![1, -1], -1)], cost: vec![1, 2] };
        assert_eq!(p.vertex_optimum(), Some(q(3)));
        let s = solve(&p.program(&q(1), &[]), SolveMode::Rational).unwrap();
        assert_eq!(exact(&s), q(3));
    }
}
