use crate::error::{Error, Result};
use crate::lp::{self, Coef, LinearProgram, Relation, SolveMode, VarKind};

/// Lower convex envelope of finitely many (distortion vector, rate) points,
/// i.e. the rates reachable by time sharing.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexEnvelope {
    points: Vec<(Vec<f64>, f64)>,
}

impl ConvexEnvelope {
    pub fn new(points: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let Some(dim) = points.first().map(|p| p.0.len()) else {
            return Err(Error::InvalidInstance("convex envelope of no points".into()));
        };
        for (d, r) in &points {
            if d.len() != dim {
                return Err(Error::Dimension("distortion vectors differ in length".into()));
            }
            if !r.is_finite() || d.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInstance("non-finite envelope point".into()));
            }
        }
        Ok(ConvexEnvelope { points })
    }

    pub fn points(&self) -> &[(Vec<f64>, f64)] {
        &self.points
    }

    /// Smallest `Σ λ_i R_i` over convex weights with `Σ λ_i D_i <= d`;
    /// `None` when no combination meets `d`.
    pub fn query(&self, d: &[f64]) -> Result<Option<f64>> {
        if d.len() != self.points[0].0.len() {
            return Err(Error::Dimension("query has the wrong dimension".into()));
        }
        let mut lp = LinearProgram::new("envelope");
        let lam: Vec<_> = (0..self.points.len())
            .map(|i| lp.add_var(format!("l{i}"), VarKind::NonNegative))
            .collect::<Result<_>>()?;
        lp.add_constraint("convex", lam.iter().map(|v| (*v, Coef::int(1))), Relation::Eq, 1)?;
        for (k, dk) in d.iter().enumerate() {
            lp.add_constraint(
                format!("d{k}"),
                lam.iter().zip(&self.points).map(|(v, p)| (*v, Coef::snap(p.0[k]))),
                Relation::Le,
                Coef::snap(*dk),
            )?;
        }
        lp.set_objective(lam.iter().zip(&self.points).map(|(v, p)| (*v, Coef::snap(p.1))))?;
        let s = lp::solve(&lp, SolveMode::Float)?;
        Ok(if s.is_optimal() { s.value_f64() } else { None })
    }

    /// Vertices of the lower hull for scalar distortions, sorted by `D`.
    pub fn hull_1d(&self) -> Result<Vec<(f64, f64)>> {
        if self.points[0].0.len() != 1 {
            return Err(Error::Dimension("hull_1d needs scalar distortions".into()));
        }
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|(d, r)| (d[0], *r)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.dedup_by(|b, a| a.0 == b.0);
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Ok(hull)
    }
}
