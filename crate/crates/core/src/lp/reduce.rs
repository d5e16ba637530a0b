use std::collections::HashSet;

use super::{Coef, LinearProgram, Relation, VarId, VarKind};
use crate::error::{Error, Result};

/// A program whose variables were identified into classes.
#[derive(Clone, Debug)]
pub struct MergedProgram {
    pub lp: LinearProgram,
    /// Original variable -> merged variable.
    pub map: Vec<VarId>,
}

impl MergedProgram {
    /// Lifts an assignment of the merged program back to the original one.
    pub fn expand<T: Clone>(&self, merged: &[T]) -> Vec<T> {
        self.map.iter().map(|v| merged[v.0].clone()).collect()
    }
}

/// Substitutes every variable by the representative of its class
/// (`rep[v]`, which must be a fixed point of `rep`), then drops rows that
/// became trivially true and duplicate rows.
///
/// Valid whenever the identified variables are equal at some optimum, e.g.
/// for orbits of a symmetry of a convex program or for variables tied by
/// equality rows.
pub fn merge_variables(lp: &LinearProgram, rep: &[VarId]) -> Result<MergedProgram> {
    let n = lp.variables().len();
    if rep.len() != n {
        return Err(Error::Dimension(format!(
            "class map has {} entries for {} variables",
            rep.len(),
            n
        )));
    }
    for (v, r) in rep.iter().enumerate() {
        if r.0 >= n || rep[r.0] != *r {
            return Err(Error::InvalidProgram(format!(
                "representative of `{}` is not a class representative",
                lp.variables()[v].name
            )));
        }
    }
    let mut out = LinearProgram::new(lp.name.clone());
    let mut new_id = vec![None; n];
    for (v, var) in lp.variables().iter().enumerate() {
        if rep[v].0 == v {
            let nonneg = (0..n)
                .filter(|&u| rep[u].0 == v)
                .any(|u| lp.variables()[u].kind == VarKind::NonNegative);
            let kind = if nonneg { VarKind::NonNegative } else { VarKind::Free };
            new_id[v] = Some(out.add_var(var.name.clone(), kind)?);
        }
    }
    let map: Vec<VarId> = (0..n).map(|v| new_id[rep[v].0].expect("representative")).collect();
    let mut seen = HashSet::new();
    for c in lp.constraints() {
        let terms: Vec<(VarId, Coef)> = c.terms.iter().map(|(v, a)| (map[v.0], a.clone())).collect();
        let before = out.constraints().len();
        out.add_constraint(c.name.clone(), terms, c.relation, c.rhs.clone())?;
        let row = out.constraints().last().expect("row just added").clone();
        let trivial = row.terms.is_empty() && {
            let s = row.rhs.to_f64();
            match row.relation {
                Relation::Le => row.rhs.is_zero() || s > 0.0,
                Relation::Ge => row.rhs.is_zero() || s < 0.0,
                Relation::Eq => row.rhs.is_zero(),
            }
        };
        let key = format!("{:?}|{:?}|{}", row.terms, row.relation, row.rhs);
        if trivial || !seen.insert(key) {
            out.truncate_constraints(before);
        }
    }
    let obj: Vec<(VarId, Coef)> = lp.objective().iter().map(|(v, a)| (map[v.0], a.clone())).collect();
    out.set_objective(obj)?;
    if !lp.offset().is_zero() {
        out.set_offset(lp.offset());
    }
    Ok(MergedProgram { lp: out, map })
}
