//! Upper bounds: layered binning with simultaneous decoding.
//!
//! Each message `U_S` is meant for the decoders in `S`. For a fixed encoding
//! order the achievable rate is the optimum of a small LP over bin rates
//! `R_S` and per-bin rates `R'_S`:
//!
//! * `R_S + R'_S >= I(X, U⁻_S; U_S)` where `U⁻_S` are the earlier messages;
//! * for every decoder `l` and nonempty `D' ⊆ D_l` (its messages)
//!   `Σ_{S∈D'} R'_S <= Σ_{S∈D'} I(U_S; U⁻_{S,D'}, U_{D_l∖D'}, Y_l)`;
//! * minimize `Σ R_S`.
//!
//! Degenerate (empty) messages contribute nothing and get no variables.

mod envelope;

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

pub use envelope::ConvexEnvelope;

use crate::error::{Error, Result};
use crate::gauss::{GaussianMessage, GaussianSystem};
use crate::lp::{self, Coef, LinearProgram, LpSolution, Number, Relation, SolveMode, VarId, VarKind};
use crate::pmf::{hamming, JointPmf};

/// Tolerance on the Markov and distortion conditions.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Default cap on the number of non-degenerate messages whose orderings
/// are enumerated (8! = 40320 orderings).
pub const DEFAULT_MAX_ORDERED_MESSAGES: usize = 8;
/// Cap on messages per decoder (the decoder rows enumerate subsets).
pub const MAX_MESSAGES_PER_DECODER: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub enum SourceModel {
    /// `source` names the pmf variables making up `X`.
    Discrete { pmf: JointPmf, source: Vec<String> },
    /// `source` names the blocks making up `X`.
    Gaussian { system: GaussianSystem, source: Vec<String> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Distortion {
    /// Row-major `d(x, x̂)` over joint values of the decoder's target and
    /// `reconstructions` columns.
    Table { reconstructions: usize, d: Vec<f64> },
    Hamming,
    /// Componentwise mean squared error (Gaussian models only).
    Mse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderSpec {
    /// Variables (or blocks) forming `Y_l`; may be empty.
    pub side_info: Vec<String>,
    /// Source components the decoder must reconstruct; `None` means all of `X`.
    pub target: Option<Vec<String>>,
    pub distortion: Distortion,
    /// `D_l`: one entry for discrete distortions, one per target coordinate
    /// for MSE.
    pub max_distortion: Vec<f64>,
}

impl DecoderSpec {
    pub fn new(side_info: &[&str], distortion: Distortion, max_distortion: Vec<f64>) -> Self {
        DecoderSpec {
            side_info: side_info.iter().map(|s| s.to_string()).collect(),
            target: None,
            distortion,
            max_distortion,
        }
    }

    pub fn with_target(mut self, target: &[&str]) -> Self {
        self.target = Some(target.iter().map(|s| s.to_string()).collect());
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub model: SourceModel,
    pub decoders: Vec<DecoderSpec>,
}

impl ProblemInstance {
    pub fn new(model: SourceModel, decoders: Vec<DecoderSpec>) -> Result<Self> {
        let inst = ProblemInstance { model, decoders };
        inst.validate()?;
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.decoders.len()
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.model, SourceModel::Gaussian { .. })
    }

    fn names_mask(&self, names: &[String]) -> Result<u64> {
        match &self.model {
            SourceModel::Discrete { pmf, .. } => pmf.mask(names),
            SourceModel::Gaussian { system, .. } => system.mask(names),
        }
    }

    pub(crate) fn source_names(&self) -> &[String] {
        match &self.model {
            SourceModel::Discrete { source, .. } | SourceModel::Gaussian { source, .. } => source,
        }
    }

    fn target_names<'a>(&'a self, dec: &'a DecoderSpec) -> &'a [String] {
        dec.target.as_deref().unwrap_or(self.source_names())
    }

    pub fn validate(&self) -> Result<()> {
        if self.decoders.is_empty() {
            return Err(Error::InvalidInstance("at least one decoder is required".into()));
        }
        if self.source_names().is_empty() {
            return Err(Error::InvalidInstance("the source is empty".into()));
        }
        let source = self.names_mask(self.source_names())?;
        for (l, dec) in self.decoders.iter().enumerate() {
            let l1 = l + 1;
            self.names_mask(&dec.side_info)?;
            let target = self.names_mask(self.target_names(dec))?;
            if target & !source != 0 || target == 0 {
                return Err(Error::InvalidInstance(format!(
                    "decoder {l1}: target must be a nonempty part of the source"
                )));
            }
            if dec.max_distortion.iter().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "decoder {l1}: distortion targets must be finite and nonnegative"
                )));
            }
            match (&self.model, &dec.distortion) {
                (SourceModel::Discrete { pmf, .. }, Distortion::Table { reconstructions, d }) => {
                    let n: usize = pmf.sizes_of(target).iter().product();
                    if *reconstructions == 0 || d.len() != n * reconstructions {
                        return Err(Error::InvalidInstance(format!(
                            "decoder {l1}: distortion table needs {n}×{reconstructions} entries"
                        )));
                    }
                    if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(Error::InvalidInstance(format!(
                            "decoder {l1}: distortion entries must be finite and nonnegative"
                        )));
                    }
                }
                (SourceModel::Discrete { .. }, Distortion::Hamming) => {}
                (SourceModel::Gaussian { system, .. }, Distortion::Mse) => {
                    let dims = system.coordinates(target).len();
                    if dec.max_distortion.len() != dims {
                        return Err(Error::InvalidInstance(format!(
                            "decoder {l1}: MSE target needs {dims} entries"
                        )));
                    }
                    if dec.max_distortion.iter().any(|d| *d <= 0.0) {
                        return Err(Error::InvalidInstance(format!(
                            "decoder {l1}: MSE targets must be positive"
                        )));
                    }
                    continue;
                }
                _ => {
                    return Err(Error::InvalidInstance(format!(
                        "decoder {l1}: distortion measure does not fit the source model"
                    )))
                }
            }
            if dec.max_distortion.len() != 1 {
                return Err(Error::InvalidInstance(format!(
                    "decoder {l1}: discrete distortion takes one target value"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Degenerate,
    /// Variables of the schedule's joint pmf forming the message.
    Discrete(Vec<String>),
    Gaussian(GaussianMessage),
}

impl Message {
    pub fn is_degenerate(&self) -> bool {
        match self {
            Message::Degenerate => true,
            Message::Discrete(v) => v.is_empty(),
            Message::Gaussian(_) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledMessage {
    /// Decoders (0-based) the message is meant for.
    pub subset: Vec<usize>,
    pub message: Message,
}

/// An ordered list of messages; subsets that are not listed carry the
/// degenerate message.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageSchedule {
    pub messages: Vec<ScheduledMessage>,
    /// Joint pmf of source, side information and auxiliaries (discrete
    /// models). `None` reuses the instance pmf.
    pub joint: Option<JointPmf>,
}

/// `{1,2}` with 1-based decoder labels.
pub fn subset_label(subset: &[usize]) -> String {
    let inner: Vec<String> = subset.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

impl MessageSchedule {
    pub fn new(messages: Vec<ScheduledMessage>) -> Self {
        MessageSchedule { messages, joint: None }
    }

    pub fn with_joint(mut self, joint: JointPmf) -> Self {
        self.joint = Some(joint);
        self
    }

    /// Schedule indices of the non-degenerate messages.
    pub fn active(&self) -> Vec<usize> {
        (0..self.messages.len()).filter(|&j| !self.messages[j].message.is_degenerate()).collect()
    }

    /// `D_l`: schedule indices of non-degenerate messages for decoder `l`.
    pub fn decoder_messages(&self, l: usize) -> Vec<usize> {
        self.active().into_iter().filter(|&j| self.messages[j].subset.contains(&l)).collect()
    }

    /// Same messages in a different encoding order.
    pub fn reordered(&self, order: &[usize]) -> MessageSchedule {
        MessageSchedule {
            messages: order.iter().map(|&j| self.messages[j].clone()).collect(),
            joint: self.joint.clone(),
        }
    }
}

/// A failed condition of a schedule. Condition 0 is structural (types,
/// subsets); 1–3 are marginal match, Markov chain and distortion.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub condition: u8,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition {}: {}", self.condition, self.detail)
    }
}

enum Space {
    Discrete(JointPmf),
    Gaussian(GaussianSystem),
}

/// Instance and schedule lowered to variable masks over one model.
pub(crate) struct Realization {
    space: Space,
    pub x: u64,
    pub y: Vec<u64>,
    pub target: Vec<u64>,
    /// Per schedule entry; 0 for degenerate messages.
    pub u: Vec<u64>,
    entropies: RefCell<HashMap<u64, f64>>,
    infos: RefCell<HashMap<(u64, u64, u64), f64>>,
}

impl Realization {
    pub(crate) fn new(inst: &ProblemInstance, sched: &MessageSchedule) -> Result<Self> {
        inst.validate()?;
        let m = inst.m();
        for (j, sm) in sched.messages.iter().enumerate() {
            if sm.subset.is_empty() || sm.subset.iter().any(|&l| l >= m) {
                return Err(Error::InvalidSchedule(format!(
                    "message #{} has subset {} outside decoders 1..={m}",
                    j + 1,
                    subset_label(&sm.subset)
                )));
            }
            let mut s = sm.subset.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != sm.subset.len() {
                return Err(Error::InvalidSchedule(format!(
                    "message #{} repeats a decoder",
                    j + 1
                )));
            }
            for (k, other) in sched.messages[..j].iter().enumerate() {
                let mut t = other.subset.clone();
                t.sort_unstable();
                if t == s {
                    return Err(Error::InvalidSchedule(format!(
                        "messages #{} and #{} share subset {}",
                        k + 1,
                        j + 1,
                        subset_label(&s)
                    )));
                }
            }
        }
        let messages: Vec<&Message> = sched.messages.iter().map(|s| &s.message).collect();
        Self::from_messages(inst, &messages, sched.joint.as_ref())
    }

    /// Lowers a list of messages without the schedule's subset rules.
    pub(crate) fn from_messages(
        inst: &ProblemInstance,
        messages: &[&Message],
        joint: Option<&JointPmf>,
    ) -> Result<Self> {
        inst.validate()?;
        let (space, u) = match &inst.model {
            SourceModel::Discrete { pmf, .. } => {
                let joint = joint.cloned().unwrap_or_else(|| pmf.clone());
                let mut u = Vec::new();
                for msg in messages {
                    u.push(match msg {
                        Message::Degenerate => 0,
                        Message::Discrete(names) => joint.mask(names)?,
                        Message::Gaussian(_) => {
                            return Err(Error::InvalidSchedule(
                                "Gaussian message in a discrete model".into(),
                            ))
                        }
                    });
                }
                (Space::Discrete(joint), u)
            }
            SourceModel::Gaussian { system, .. } => {
                let mut sys = system.clone();
                let mut u = Vec::new();
                for msg in messages {
                    u.push(match msg {
                        Message::Degenerate => 0,
                        Message::Gaussian(g) => {
                            sys = sys.with_message(g)?;
                            1u64 << (sys.blocks().len() - 1)
                        }
                        Message::Discrete(names) if names.is_empty() => 0,
                        Message::Discrete(_) => {
                            return Err(Error::InvalidSchedule(
                                "discrete message in a Gaussian model".into(),
                            ))
                        }
                    });
                }
                (Space::Gaussian(sys), u)
            }
        };
        let mask = |names: &[String]| match &space {
            Space::Discrete(p) => p.mask(names),
            Space::Gaussian(s) => s.mask(names),
        };
        let x = mask(inst.source_names())?;
        let y = inst.decoders.iter().map(|d| mask(&d.side_info)).collect::<Result<Vec<_>>>()?;
        let target = inst
            .decoders
            .iter()
            .map(|d| mask(inst.target_names(d)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Realization {
            space,
            x,
            y,
            target,
            u,
            entropies: RefCell::new(HashMap::new()),
            infos: RefCell::new(HashMap::new()),
        })
    }

    fn entropy(&self, pmf: &JointPmf, mask: u64) -> f64 {
        if let Some(h) = self.entropies.borrow().get(&mask) {
            return *h;
        }
        let h = pmf.entropy_mask(mask);
        self.entropies.borrow_mut().insert(mask, h);
        h
    }

    /// `I(A;B|C)` in bits over masks of the realized model.
    pub(crate) fn info(&self, a: u64, b: u64, c: u64) -> Result<f64> {
        if a & !c == 0 || b & !c == 0 {
            return Ok(0.0);
        }
        match &self.space {
            Space::Discrete(p) => {
                let v = self.entropy(p, a | c) + self.entropy(p, b | c)
                    - self.entropy(p, a | b | c)
                    - self.entropy(p, c);
                Ok(v.max(0.0))
            }
            Space::Gaussian(s) => {
                let key = (a, b, c);
                if let Some(v) = self.infos.borrow().get(&key) {
                    return Ok(*v);
                }
                let v = s.information(a, b, c)?;
                self.infos.borrow_mut().insert(key, v);
                Ok(v)
            }
        }
    }

    fn all_u(&self) -> u64 {
        self.u.iter().fold(0, |a, b| a | b)
    }
}

/// Checks the three conditions on a schedule; an empty list means valid.
pub fn check_schedule_validity(inst: &ProblemInstance, sched: &MessageSchedule) -> Vec<Violation> {
    let real = match Realization::new(inst, sched) {
        Ok(r) => r,
        Err(e) => return vec![Violation { condition: 0, detail: e.to_string() }],
    };
    let messages: Vec<&Message> = sched.messages.iter().map(|s| &s.message).collect();
    let observed: Vec<u64> = (0..inst.m())
        .map(|l| sched.decoder_messages(l).iter().fold(0, |acc, &j| acc | real.u[j]))
        .collect();
    check_conditions(inst, &real, &messages, &observed)
}

/// Marginal, Markov and distortion conditions for lowered messages;
/// `observed[l]` are the message masks decoder `l` sees besides `Y_l`.
pub(crate) fn check_conditions(
    inst: &ProblemInstance,
    real: &Realization,
    messages: &[&Message],
    observed: &[u64],
) -> Vec<Violation> {
    let mut out = Vec::new();
    match (&inst.model, &real.space) {
        (SourceModel::Discrete { pmf, .. }, Space::Discrete(joint)) => {
            // 1) the joint extends the source/side-information pmf
            let n = pmf.variables().len();
            if joint.variables().len() < n || joint.variables()[..n] != *pmf.variables() {
                out.push(Violation {
                    condition: 1,
                    detail: "joint pmf must start with the instance variables".into(),
                });
            } else {
                let marginal = joint.marginal_table((1u64 << n) - 1);
                let worst = marginal
                    .iter()
                    .zip(pmf.mass())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if worst > FEASIBILITY_TOL {
                    out.push(Violation {
                        condition: 1,
                        detail: format!("marginal differs from the instance pmf by {worst:.3e}"),
                    });
                }
            }
            // 2) U ↔ X ↔ (Y_1..Y_m)
            let ys = real.y.iter().fold(0, |a, b| a | b);
            let leak = real.info(real.all_u(), ys, real.x).unwrap_or(f64::INFINITY);
            if leak > FEASIBILITY_TOL {
                out.push(Violation {
                    condition: 2,
                    detail: format!("messages carry {leak:.3e} bits about the side information beyond X"),
                });
            }
        }
        (SourceModel::Gaussian { system, source }, Space::Gaussian(_)) => {
            let src = system.mask(source).unwrap_or(0);
            for (j, msg) in messages.iter().enumerate() {
                if let Message::Gaussian(g) = msg {
                    match system.mask(&g.source) {
                        Ok(mask) if mask & !src == 0 => {}
                        _ => out.push(Violation {
                            condition: 2,
                            detail: format!(
                                "message #{} observes blocks outside the source",
                                j + 1
                            ),
                        }),
                    }
                }
            }
        }
        _ => unreachable!("realization matches the model"),
    }
    // 3) distortion
    for (l, dec) in inst.decoders.iter().enumerate() {
        let observed = real.y[l] | observed[l];
        let achieved = match (&real.space, &dec.distortion) {
            (Space::Discrete(joint), dist) => {
                let n: usize = joint.sizes_of(real.target[l]).iter().product();
                let (table, cols) = match dist {
                    Distortion::Table { reconstructions, d } => (d.clone(), *reconstructions),
                    _ => (hamming(n), n),
                };
                joint
                    .min_expected_distortion(real.target[l], observed, &table, cols)
                    .map(|(d, _)| d <= dec.max_distortion[0] + FEASIBILITY_TOL)
            }
            (Space::Gaussian(sys), _) => {
                sys.mse_feasible_mask(real.target[l], observed, &dec.max_distortion)
            }
        };
        match achieved {
            Ok(true) => {}
            Ok(false) => out.push(Violation {
                condition: 3,
                detail: format!("decoder {} cannot meet its distortion target", l + 1),
            }),
            Err(e) => out.push(Violation { condition: 3, detail: format!("decoder {}: {e}", l + 1) }),
        }
    }
    out
}

/// Row layout of the achievable LP, shared by every encoding order.
struct Template {
    /// Schedule indices of the non-degenerate messages.
    active: Vec<usize>,
    labels: Vec<String>,
    /// Per decoder: schedule indices of its messages.
    decoder_sets: Vec<Vec<usize>>,
}

impl Template {
    fn new(sched: &MessageSchedule, m: usize) -> Result<Self> {
        let active = sched.active();
        let labels = sched.messages.iter().map(|s| subset_label(&s.subset)).collect();
        let decoder_sets: Vec<Vec<usize>> = (0..m).map(|l| sched.decoder_messages(l)).collect();
        if let Some((l, d)) = decoder_sets.iter().enumerate().find(|(_, d)| d.len() > MAX_MESSAGES_PER_DECODER) {
            return Err(Error::LimitExceeded(format!(
                "decoder {} has {} messages (at most {MAX_MESSAGES_PER_DECODER})",
                l + 1,
                d.len()
            )));
        }
        Ok(Template { active, labels, decoder_sets })
    }

    /// Right-hand sides for encoding order `order` (a permutation of
    /// `active`): rate rows first, then decoder rows.
    fn rhs(&self, real: &Realization, order: &[usize]) -> Result<Vec<f64>> {
        let mut pos = vec![usize::MAX; real.u.len()];
        for (p, &j) in order.iter().enumerate() {
            pos[j] = p;
        }
        let mut out = Vec::new();
        for &j in &self.active {
            let before = order[..pos[j]].iter().fold(0, |acc, &i| acc | real.u[i]);
            out.push(real.info(real.x | before, real.u[j], 0)?);
        }
        for (l, set) in self.decoder_sets.iter().enumerate() {
            for sub in 1u32..(1 << set.len()) {
                let chosen: Vec<usize> =
                    (0..set.len()).filter(|b| sub >> b & 1 == 1).map(|b| set[b]).collect();
                let rest = (0..set.len())
                    .filter(|b| sub >> b & 1 == 0)
                    .fold(0, |acc, b| acc | real.u[set[b]]);
                let mut total = 0.0;
                for &j in &chosen {
                    let earlier = chosen
                        .iter()
                        .filter(|&&i| pos[i] < pos[j])
                        .fold(0, |acc, &i| acc | real.u[i]);
                    total += real.info(real.u[j], earlier | rest | real.y[l], 0)?;
                }
                out.push(total);
            }
        }
        Ok(out)
    }

    fn program(&self, name: &str, rhs: &[f64]) -> Result<(LinearProgram, Vec<VarId>, Vec<VarId>)> {
        let mut lp = LinearProgram::new(name);
        let mut r = HashMap::new();
        let mut rp = HashMap::new();
        let mut rv = Vec::new();
        let mut rpv = Vec::new();
        for &j in &self.active {
            let a = lp.add_var(format!("R{}", self.labels[j]), VarKind::NonNegative)?;
            let b = lp.add_var(format!("R'{}", self.labels[j]), VarKind::NonNegative)?;
            r.insert(j, a);
            rp.insert(j, b);
            rv.push(a);
            rpv.push(b);
        }
        let mut k = 0;
        for &j in &self.active {
            lp.add_constraint(
                format!("rate{}", self.labels[j]),
                [(r[&j], Coef::int(1)), (rp[&j], Coef::int(1))],
                Relation::Ge,
                Coef::snap(rhs[k]),
            )?;
            k += 1;
        }
        for (l, set) in self.decoder_sets.iter().enumerate() {
            for sub in 1u32..(1 << set.len()) {
                let chosen: Vec<usize> =
                    (0..set.len()).filter(|b| sub >> b & 1 == 1).map(|b| set[b]).collect();
                let name = format!(
                    "dec{}[{}]",
                    l + 1,
                    chosen.iter().map(|&j| self.labels[j].as_str()).collect::<Vec<_>>().join(",")
                );
                lp.add_constraint(
                    name,
                    chosen.iter().map(|j| (rp[j], Coef::int(1))),
                    Relation::Le,
                    Coef::snap(rhs[k]),
                )?;
                k += 1;
            }
        }
        lp.set_objective(rv.iter().map(|v| (*v, Coef::int(1))))?;
        Ok((lp, rv, rpv))
    }
}

fn ensure_valid(inst: &ProblemInstance, sched: &MessageSchedule) -> Result<()> {
    let v = check_schedule_validity(inst, sched);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSchedule(
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        ))
    }
}

/// The achievable LP of a valid schedule, in its own encoding order.
///
/// Information terms are snapped to nearby small-denominator rationals
/// (within 1e-10) so that integer and half-integer instances solve exactly.
pub fn build_achievable_lp(inst: &ProblemInstance, sched: &MessageSchedule) -> Result<LinearProgram> {
    ensure_valid(inst, sched)?;
    let real = Realization::new(inst, sched)?;
    let t = Template::new(sched, inst.m())?;
    let rhs = t.rhs(&real, &t.active)?;
    Ok(t.program("achievable", &rhs)?.0)
}

/// Per-message rates of an optimal solution.
#[derive(Clone, Debug, PartialEq)]
pub struct RateAssignment {
    /// `(subset, R_S, R'_S)` for each non-degenerate message.
    pub entries: Vec<(Vec<usize>, Number, Number)>,
    pub total: Number,
}

#[derive(Clone, Debug)]
pub struct UpperBound {
    pub value: Number,
    /// Index into the schedules that were compared.
    pub schedule_index: usize,
    pub rates: RateAssignment,
    pub solution: LpSolution,
    pub lp: LinearProgram,
}

fn solve_with(
    t: &Template,
    sched: &MessageSchedule,
    rhs: &[f64],
    mode: SolveMode,
    index: usize,
) -> Result<UpperBound> {
    let (lp, rv, rpv) = t.program("achievable", rhs)?;
    let solution = lp::solve(&lp, mode)?;
    solution.optimal_value()?;
    let value = solution.value.clone().expect("optimal");
    let entries = t
        .active
        .iter()
        .zip(rv.iter().zip(&rpv))
        .map(|(&j, (a, b))| {
            (
                sched.messages[j].subset.clone(),
                solution.assignment[a.0].clone(),
                solution.assignment[b.0].clone(),
            )
        })
        .collect();
    Ok(UpperBound {
        rates: RateAssignment { entries, total: value.clone() },
        value,
        schedule_index: index,
        solution,
        lp,
    })
}

fn number_lt(a: &Number, b: &Number) -> bool {
    match (a, b) {
        (Number::Rational(x), Number::Rational(y)) => x < y,
        _ => a.to_f64() < b.to_f64(),
    }
}

/// Solves every valid schedule and keeps the smallest total rate (first
/// wins ties).
pub fn solve_upper_bound(
    inst: &ProblemInstance,
    schedules: &[MessageSchedule],
    mode: SolveMode,
) -> Result<UpperBound> {
    let mut best: Option<UpperBound> = None;
    let mut problems = Vec::new();
    for (i, sched) in schedules.iter().enumerate() {
        if let Err(e) = ensure_valid(inst, sched) {
            problems.push(format!("schedule {}: {e}", i + 1));
            continue;
        }
        let real = Realization::new(inst, sched)?;
        let t = Template::new(sched, inst.m())?;
        let rhs = t.rhs(&real, &t.active)?;
        let ub = solve_with(&t, sched, &rhs, mode, i)?;
        if best.as_ref().is_none_or(|b| number_lt(&ub.value, &b.value)) {
            best = Some(ub);
        }
    }
    best.ok_or_else(|| {
        if problems.is_empty() {
            Error::InvalidSchedule("no schedules given".into())
        } else {
            Error::InvalidSchedule(problems.join("; "))
        }
    })
}

/// Result of solving one schedule under every ordering of its messages.
#[derive(Clone, Debug)]
pub struct OrderingSweep {
    pub orderings: usize,
    /// Orderings that produced distinct programs (only right-hand sides
    /// can differ between orderings).
    pub distinct_programs: usize,
    /// Optimum per distinct program with the number of orderings sharing it
    /// and one representative order (schedule indices).
    pub values: Vec<(Number, usize, Vec<usize>)>,
    pub best: UpperBound,
    pub best_order: Vec<usize>,
}

impl OrderingSweep {
    /// Every ordering reached the same optimum (exactly, or within `tol`
    /// for floating values).
    pub fn order_insensitive(&self, tol: f64) -> bool {
        let first = &self.values[0].0;
        self.values.iter().all(|(v, _, _)| match (first, v) {
            (Number::Rational(a), Number::Rational(b)) => a == b,
            _ => (first.to_f64() - v.to_f64()).abs() <= tol,
        })
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Solves `sched` under all orderings of its non-degenerate messages.
///
/// Fails with [`Error::LimitExceeded`] when there are more than
/// `max_messages` of them; [`DEFAULT_MAX_ORDERED_MESSAGES`] is the usual cap.
pub fn sweep_orderings(
    inst: &ProblemInstance,
    sched: &MessageSchedule,
    mode: SolveMode,
    max_messages: usize,
) -> Result<OrderingSweep> {
    ensure_valid(inst, sched)?;
    let real = Realization::new(inst, sched)?;
    let t = Template::new(sched, inst.m())?;
    if t.active.len() > max_messages {
        return Err(Error::LimitExceeded(format!(
            "{} non-degenerate messages; ordering enumeration is capped at {max_messages}",
            t.active.len()
        )));
    }
    let mut order = t.active.clone();
    let mut groups: Vec<(Vec<f64>, usize, Vec<usize>)> = Vec::new();
    // Orderings are grouped by right-hand side, compared at a 1e-12 grid.
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut orderings = 0usize;
    loop {
        orderings += 1;
        let rhs = t.rhs(&real, &order)?;
        let key: Vec<i64> = rhs.iter().map(|v| (v * 1e12).round() as i64).collect();
        match index.get(&key) {
            Some(&g) => groups[g].1 += 1,
            None => {
                index.insert(key, groups.len());
                groups.push((rhs, 1, order.clone()));
            }
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    let mut values = Vec::new();
    let mut best: Option<(UpperBound, Vec<usize>)> = None;
    for (rhs, count, rep) in &groups {
        let ub = solve_with(&t, &sched.reordered(rep), rhs, mode, 0)?;
        values.push((ub.value.clone(), *count, rep.clone()));
        if best.as_ref().is_none_or(|(b, _)| number_lt(&ub.value, &b.value)) {
            best = Some((ub, rep.clone()));
        }
    }
    let (mut best, best_order) = best.expect("at least one ordering");
    // Report the message subsets in schedule order.
    best.rates.entries.iter_mut().zip(&t.active).for_each(|(e, &j)| e.0 = sched.messages[j].subset.clone());
    Ok(OrderingSweep {
        orderings,
        distinct_programs: groups.len(),
        values,
        best,
        best_order,
    })
}

/// `max_i I(X;U₁₂|Y_i) + I(X;U₁|U₁₂,Y₁) + I(X;U₂|U₁₂,Y₂)` for a
/// two-decoder schedule made of `U₁₂`, `U₁` and `U₂` (missing ones are
/// degenerate).
pub fn timo_two_decoder(inst: &ProblemInstance, sched: &MessageSchedule) -> Result<f64> {
    if inst.m() != 2 {
        return Err(Error::InvalidInstance(format!(
            "the two-decoder expression needs m = 2, got {}",
            inst.m()
        )));
    }
    let real = Realization::new(inst, sched)?;
    let find = |want: &[usize]| -> u64 {
        sched
            .messages
            .iter()
            .position(|s| {
                let mut t = s.subset.clone();
                t.sort_unstable();
                t == want
            })
            .map_or(0, |j| real.u[j])
    };
    let (u12, u1, u2) = (find(&[0, 1]), find(&[0]), find(&[1]));
    let (y1, y2) = (real.y[0], real.y[1]);
    let common = real.info(real.x, u12, y1)?.max(real.info(real.x, u12, y2)?);
    Ok(common + real.info(real.x, u1, u12 | y1)? + real.info(real.x, u2, u12 | y2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::VariableId;
    use nalgebra::DMatrix;

    fn bit(n: &str) -> VariableId {
        VariableId::new(n, 2)
    }

    fn msg(subset: &[usize], names: &[&str]) -> ScheduledMessage {
        ScheduledMessage {
            subset: subset.to_vec(),
            message: Message::Discrete(names.iter().map(|s| s.to_string()).collect()),
        }
    }

    /// Fair bit X, side information Y through a BSC(0.1), one decoder.
    fn wyner_ziv(crossover: f64) -> ProblemInstance {
        let p = JointPmf::uniform(vec![bit("X")]).unwrap();
        let p = p.attach_channel(bit("Y"), &["X"], &[1.0 - crossover, crossover, crossover, 1.0 - crossover]).unwrap();
        ProblemInstance::new(
            SourceModel::Discrete { pmf: p, source: vec!["X".into()] },
            vec![DecoderSpec::new(&["Y"], Distortion::Hamming, vec![0.5])],
        )
        .unwrap()
    }

    #[test]
    fn perfect_messages_are_valid() {
        let inst = wyner_ziv(0.1);
        let mut inst0 = inst.clone();
        inst0.decoders[0].max_distortion = vec![0.0];
        let s = MessageSchedule::new(vec![msg(&[0], &["X"])]);
        assert!(check_schedule_validity(&inst0, &s).is_empty());
        let empty = MessageSchedule::new(vec![]);
        let v = check_schedule_validity(&inst0, &empty);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].condition, 3);
    }

    #[test]
    fn wyner_ziv_reduction() {
        let inst = wyner_ziv(0.1);
        let SourceModel::Discrete { pmf, .. } = &inst.model else { unreachable!() };
        let joint = pmf.attach_channel(bit("U"), &["X"], &[0.8, 0.2, 0.2, 0.8]).unwrap();
        let s = MessageSchedule::new(vec![msg(&[0], &["U"])]).with_joint(joint.clone());
        assert!(check_schedule_validity(&inst, &s).is_empty());
        let lp = build_achievable_lp(&inst, &s).unwrap();
        let v = lp::solve(&lp, SolveMode::Float).unwrap().value_f64().unwrap();
        let oracle = joint.conditional_mutual_information(&["X"], &["U"], &["Y"]).unwrap();
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn degenerate_messages_change_nothing() {
        let inst = wyner_ziv(0.2);
        let SourceModel::Discrete { pmf, .. } = &inst.model else { unreachable!() };
        let joint = pmf.attach_channel(bit("U"), &["X"], &[0.9, 0.1, 0.3, 0.7]).unwrap();
        let a = MessageSchedule::new(vec![msg(&[0], &["U"])]).with_joint(joint.clone());
        let mut b = a.clone();
        b.messages.insert(0, ScheduledMessage { subset: vec![0], message: Message::Degenerate });
        // Duplicate subsets are rejected even when degenerate.
        assert!(!check_schedule_validity(&inst, &b).is_empty());
        let two = ProblemInstance::new(
            inst.model.clone(),
            vec![inst.decoders[0].clone(), inst.decoders[0].clone()],
        )
        .unwrap();
        let a2 = MessageSchedule::new(vec![msg(&[0, 1], &["U"])]).with_joint(joint.clone());
        let mut b2 = a2.clone();
        b2.messages.push(ScheduledMessage { subset: vec![1], message: Message::Degenerate });
        b2.messages.insert(0, ScheduledMessage { subset: vec![0], message: Message::Degenerate });
        let va = solve_upper_bound(&two, &[a2], SolveMode::Float).unwrap().value.to_f64();
        let vb = solve_upper_bound(&two, &[b2], SolveMode::Float).unwrap().value.to_f64();
        assert_eq!(va, vb);
    }

    #[test]
    fn best_schedule_wins() {
        let inst = wyner_ziv(0.1);
        let SourceModel::Discrete { pmf, .. } = &inst.model else { unreachable!() };
        let joint = pmf.attach_channel(bit("U"), &["X"], &[0.8, 0.2, 0.2, 0.8]).unwrap();
        let good = MessageSchedule::new(vec![msg(&[0], &["U"])]).with_joint(joint.clone());
        let worse = MessageSchedule::new(vec![msg(&[0], &["X"])]).with_joint(joint);
        let single = solve_upper_bound(&inst, &[good.clone()], SolveMode::Float).unwrap();
        let lp = build_achievable_lp(&inst, &good).unwrap();
        assert_eq!(single.value.to_f64(), lp::solve(&lp, SolveMode::Float).unwrap().value_f64().unwrap());
        let both = solve_upper_bound(&inst, &[worse, good], SolveMode::Float).unwrap();
        assert_eq!(both.schedule_index, 1);
    }

    #[test]
    fn invalid_schedules_are_reported() {
        let inst = wyner_ziv(0.1);
        let bad = MessageSchedule::new(vec![msg(&[3], &["X"])]);
        let v = check_schedule_validity(&inst, &bad);
        assert_eq!(v[0].condition, 0);
        assert!(matches!(build_achievable_lp(&inst, &bad), Err(Error::InvalidSchedule(_))));
        assert!(solve_upper_bound(&inst, &[bad], SolveMode::Float).is_err());
        // A message that peeks at the side information breaks the Markov chain.
        let SourceModel::Discrete { pmf, .. } = &inst.model else { unreachable!() };
        let joint = pmf.attach_function(bit("U"), &["Y"], |v| v[0]).unwrap();
        let leaky = MessageSchedule::new(vec![msg(&[0], &["U"])]).with_joint(joint);
        assert!(check_schedule_validity(&inst, &leaky).iter().any(|v| v.condition == 2));
    }

    #[test]
    fn permutations_enumerate_all() {
        let mut p = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut p) {
            n += 1;
        }
        assert_eq!(n, 24);
        assert_eq!(p, vec![3, 2, 1, 0]);
    }

    #[test]
    fn two_decoder_expression_examples() {
        // Y_i independent of X: U12 = X gives H(X).
        let p = JointPmf::uniform(vec![VariableId::new("X", 3), bit("Y1"), bit("Y2")]).unwrap();
        let dec = |y: &str| DecoderSpec::new(&[y], Distortion::Hamming, vec![0.0]);
        let inst = ProblemInstance::new(
            SourceModel::Discrete { pmf: p, source: vec!["X".into()] },
            vec![dec("Y1"), dec("Y2")],
        )
        .unwrap();
        let s = MessageSchedule::new(vec![msg(&[0, 1], &["X"])]);
        assert!((timo_two_decoder(&inst, &s).unwrap() - 3f64.log2()).abs() < 1e-12);
        let none = MessageSchedule::new(vec![]);
        assert_eq!(timo_two_decoder(&inst, &none).unwrap(), 0.0);
        assert!(timo_two_decoder(&wyner_ziv(0.1), &none).is_err());
    }

    #[test]
    fn gaussian_single_decoder() {
        // X ~ N(0,1), Y = X + Z with Var Z = 1; Wyner–Ziv optimum for MSE D
        // is ½log(K_{X|Y}/D).
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        let sys = GaussianSystem::new(&[("X", 1), ("Y", 1)], sigma).unwrap();
        let d = 0.1;
        let kxy = 0.5;
        // U = X + N with K_{X|U,Y} = D: 1/D = 1/kxy + 1/N.
        let n = 1.0 / (1.0 / d - 1.0 / kxy);
        let u = GaussianMessage::new("U", vec!["X".into()], DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, n));
        let inst = ProblemInstance::new(
            SourceModel::Gaussian { system: sys, source: vec!["X".into()] },
            vec![DecoderSpec::new(&["Y"], Distortion::Mse, vec![d])],
        )
        .unwrap();
        let s = MessageSchedule::new(vec![ScheduledMessage { subset: vec![0], message: Message::Gaussian(u) }]);
        assert!(check_schedule_validity(&inst, &s).is_empty());
        let v = solve_upper_bound(&inst, &[s], SolveMode::Float).unwrap().value.to_f64();
        assert!((v - 0.5 * (kxy / d).log2()).abs() < 1e-9);
    }
    #[test]
    fn gaussian_odd_cycle_rate_falls_with_distortion() {
        use crate::instances::{odd_cycle_instance, Flavor, OddCycleSpec};
        let mut last = f64::INFINITY;
        for d in [0.05, 0.1, 0.2, 0.3, 0.45] {
            let spec = OddCycleSpec { m: 5, flavor: Flavor::Gaussian, d };
            let (inst, sched) = odd_cycle_instance(&spec).unwrap();
            let v = solve_upper_bound(&inst, &[sched], SolveMode::Float).unwrap().value.to_f64();
            assert!(v <= last + 1e-9, "D={d}: {v} > {last}");
            assert!(v > 0.0);
            last = v;
        }
    }
}
