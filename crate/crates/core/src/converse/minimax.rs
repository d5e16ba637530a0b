//! Closed-form lower-bound and rate expressions evaluated for fixed
//! auxiliaries: the permutation (minimax) bound, the mismatched
//! side-information rate, and the conditionally-less-noisy rate.
//!
//! All three are inner values. The true bounds optimize over auxiliaries;
//! here the caller supplies them.

use crate::achievable::{check_conditions, Message, ProblemInstance, Realization, SourceModel, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::pmf::JointPmf;

/// `m!` permutations are enumerated.
pub const MAX_MINIMAX_DECODERS: usize = 8;

/// `V` shared by all decoders and one `U_{Y_i}` per decoder. Discrete
/// models take their auxiliaries from `joint`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxAuxiliaries {
    pub v: Message,
    pub u: Vec<Message>,
    pub joint: Option<JointPmf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxValue {
    /// Best permutation sum minus `ε`.
    pub value: f64,
    /// Best permutation sum.
    pub inner: f64,
    /// Maximizing decoder order (0-based).
    pub best_order: Vec<usize>,
    pub permutations: usize,
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `max_σ [ I(X; V, U_σ1 | Y_σ1) + Σ_{t≥2} I(X; U_σt | V, U_σ1..σ(t−1), Y_σ1..σt) ] − ε`.
///
/// The auxiliaries must satisfy `(Y_1..Y_m) ↔ X ↔ (V, U)` and let decoder
/// `i` meet `D_i + ε` from `(V, U_{Y_i}, Y_i)`.
pub fn minimax_bound(inst: &ProblemInstance, aux: &MinimaxAuxiliaries, eps: f64) -> Result<MinimaxValue> {
    let m = inst.m();
    if m > MAX_MINIMAX_DECODERS {
        return Err(Error::LimitExceeded(format!(
            "{m} decoders; the permutation bound is limited to {MAX_MINIMAX_DECODERS}"
        )));
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidAuxiliaries(format!("eps must be finite and nonnegative, got {eps}")));
    }
    if aux.u.len() != m {
        return Err(Error::InvalidAuxiliaries(format!("{} auxiliaries for {m} decoders", aux.u.len())));
    }
    let mut relaxed = inst.clone();
    for d in &mut relaxed.decoders {
        d.max_distortion.iter_mut().for_each(|x| *x += eps);
    }
    let mut messages: Vec<&Message> = vec![&aux.v];
    messages.extend(aux.u.iter());
    let real = Realization::from_messages(&relaxed, &messages, aux.joint.as_ref())
        .map_err(|e| Error::InvalidAuxiliaries(e.to_string()))?;
    let v = real.u[0];
    let u = &real.u[1..];
    let observed: Vec<u64> = (0..m).map(|i| v | u[i]).collect();
    let violations = check_conditions(&relaxed, &real, &messages, &observed);
    if !violations.is_empty() {
        return Err(Error::InvalidAuxiliaries(
            violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        ));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut permutations = 0;
    loop {
        permutations += 1;
        let mut seen_u = v;
        let mut seen_y = 0;
        let mut total = 0.0;
        for (t, &i) in order.iter().enumerate() {
            seen_y |= real.y[i];
            let fresh = if t == 0 { v | u[i] } else { u[i] };
            let cond = if t == 0 { seen_y } else { seen_u | seen_y };
            total += real.info(real.x, fresh, cond)?;
            seen_u |= u[i];
        }
        if best.as_ref().is_none_or(|(b, _)| total > *b + 1e-12) {
            best = Some((total, order.clone()));
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    let (inner, best_order) = best.expect("at least one permutation");
    Ok(MinimaxValue { value: inner - eps, inner, best_order, permutations })
}

/// Variable names of the two-component source with mismatched side
/// information: decoder `j` holds `(Y_j1, Y_j2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MismatchedRoles {
    pub x1: String,
    pub x2: String,
    pub y11: String,
    pub y12: String,
    pub y21: String,
    pub y22: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MismatchedAuxiliaries {
    pub w1: Vec<String>,
    pub w2: Vec<String>,
    pub u1: Vec<String>,
    pub u2: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MismatchedValue {
    pub r1: f64,
    pub r2: f64,
    /// `max(r1, r2)`.
    pub value: f64,
}

/// Checks the product and degradedness structure of a mismatched instance:
/// `(X1,Y11,Y21) ⊥ (X2,Y12,Y22)`, `X1 ↔ Y11 ↔ Y21`, `X2 ↔ Y22 ↔ Y12`.
pub fn check_mismatched_structure(joint: &JointPmf, r: &MismatchedRoles) -> Result<()> {
    let tol = FEASIBILITY_TOL;
    let first = [&r.x1, &r.y11, &r.y21];
    let second = [&r.x2, &r.y12, &r.y22];
    if !joint.is_independent(&first, &second, tol)? {
        return Err(Error::InvalidInstance("the two source halves are not independent".into()));
    }
    if !joint.is_markov_chain(&[&r.x1], &[&r.y11], &[&r.y21], tol)? {
        return Err(Error::InvalidInstance("X1 ↔ Y11 ↔ Y21 fails".into()));
    }
    if !joint.is_markov_chain(&[&r.x2], &[&r.y22], &[&r.y12], tol)? {
        return Err(Error::InvalidInstance("X2 ↔ Y22 ↔ Y12 fails".into()));
    }
    Ok(())
}

/// `max{R1, R2}` with
/// `R1 = I(X1;W1|Y11) + I(X2;W2|Y12) + I(X1;U1|Y11,W1) + I(X2;U2|Y22,W2)` and
/// `R2 = I(X1;W1|Y21) + I(X2;W2|Y22) + I(X1;U1|Y11,W1) + I(X2;U2|Y22,W2)`.
///
/// Besides the instance structure, `(W_i, U_i) ↔ X_i ↔ (Y_1i, Y_2i)` and the
/// independence of the two halves with their auxiliaries are checked.
pub fn watanabe_expression(
    joint: &JointPmf,
    roles: &MismatchedRoles,
    aux: &MismatchedAuxiliaries,
) -> Result<MismatchedValue> {
    check_mismatched_structure(joint, roles)?;
    let tol = FEASIBILITY_TOL;
    let mask = |names: &[&String]| joint.mask(names);
    let cat = |a: &[String], b: &[&String]| -> Vec<String> {
        a.iter().cloned().chain(b.iter().map(|s| s.to_string())).collect()
    };
    let half1 = cat(&aux.w1, &[&roles.x1, &roles.y11, &roles.y21]);
    let half1 = [half1, aux.u1.clone()].concat();
    let half2 = [cat(&aux.w2, &[&roles.x2, &roles.y12, &roles.y22]), aux.u2.clone()].concat();
    if !joint.is_independent(&half1, &half2, tol)? {
        return Err(Error::InvalidAuxiliaries("the two halves with their auxiliaries are dependent".into()));
    }
    for (w, u, x, ya, yb) in [
        (&aux.w1, &aux.u1, &roles.x1, &roles.y11, &roles.y21),
        (&aux.w2, &aux.u2, &roles.x2, &roles.y12, &roles.y22),
    ] {
        let wu = [w.clone(), u.clone()].concat();
        if !wu.is_empty() && !joint.is_markov_chain(&wu, &[x.clone()], &[ya.clone(), yb.clone()], tol)? {
            return Err(Error::InvalidAuxiliaries(format!("(W,U) ↔ {x} ↔ ({ya},{yb}) fails")));
        }
    }
    let w1 = joint.mask(&aux.w1)?;
    let w2 = joint.mask(&aux.w2)?;
    let u1 = joint.mask(&aux.u1)?;
    let u2 = joint.mask(&aux.u2)?;
    let [x1, x2, y11, y12, y21, y22] = [
        mask(&[&roles.x1])?,
        mask(&[&roles.x2])?,
        mask(&[&roles.y11])?,
        mask(&[&roles.y12])?,
        mask(&[&roles.y21])?,
        mask(&[&roles.y22])?,
    ];
    let i = |a: u64, b: u64, c: u64| joint.information(a, b, c);
    let refine = i(x1, u1, y11 | w1) + i(x2, u2, y22 | w2);
    let r1 = i(x1, w1, y11) + i(x2, w2, y12) + refine;
    let r2 = i(x1, w1, y21) + i(x2, w2, y22) + refine;
    Ok(MismatchedValue { r1, r2, value: r1.max(r2) })
}

/// `H(a(X) | Y_1) + I(X; W | a(X), Y_2)` for a two-decoder discrete
/// instance whose first decoder must recover `a(X)` exactly.
///
/// `joint` extends the instance pmf with the variables of `a(X)` (a function
/// of `X`) and of `W`.
pub fn less_noisy_expression(
    inst: &ProblemInstance,
    joint: &JointPmf,
    a: &[String],
    w: &[String],
) -> Result<f64> {
    if inst.m() != 2 {
        return Err(Error::InvalidInstance(format!("needs two decoders, got {}", inst.m())));
    }
    if a.is_empty() {
        return Err(Error::InvalidInstance("the map a(X) is missing".into()));
    }
    let SourceModel::Discrete { .. } = &inst.model else {
        return Err(Error::InvalidInstance("needs a discrete source".into()));
    };
    if inst.decoders[0].max_distortion.iter().any(|d| *d != 0.0) {
        return Err(Error::InvalidInstance("decoder 1 must have zero distortion".into()));
    }
    let x = joint.mask(inst.source_names())?;
    let am = joint.mask(a)?;
    if joint.entropy_mask(am | x) - joint.entropy_mask(x) > FEASIBILITY_TOL {
        return Err(Error::InvalidInstance("a(X) is not a function of X".into()));
    }
    let wm = joint.mask(w)?;
    let y1 = joint.mask(&inst.decoders[0].side_info)?;
    let y2 = joint.mask(&inst.decoders[1].side_info)?;
    if wm != 0 && joint.information(wm, am | y2 | y1, x) > FEASIBILITY_TOL {
        return Err(Error::InvalidAuxiliaries("W ↔ X ↔ (a(X), Y) fails".into()));
    }
    let h = joint.entropy_mask(am | y1) - joint.entropy_mask(y1);
    Ok(h.max(0.0) + joint.information(x, wm, am | y2))
}
