//! Builders for the classical special cases: one-decoder Wyner–Ziv, the
//! two-component mismatched side information product, and the lossless
//! function / lossy source pair.

use crate::achievable::{
    DecoderSpec, Distortion, Message, MessageSchedule, ProblemInstance, ScheduledMessage, SourceModel,
    FEASIBILITY_TOL,
};
use crate::converse::{check_mismatched_structure, IndexCodingInstance, MismatchedAuxiliaries, MismatchedRoles};
use crate::error::{Error, Result};
use crate::pmf::{JointPmf, VariableId};

/// Row-major binary symmetric channel.
pub fn bsc(p: f64) -> Vec<f64> {
    vec![1.0 - p, p, p, 1.0 - p]
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidInstance(format!("{what} = {p} is not a probability")))
    }
}

/// Fair bit `X`, `Y = X ⊕ Bern(p)`, Hamming distortion `D`.
pub fn wyner_ziv_binary(p: f64, d: f64) -> Result<ProblemInstance> {
    check_prob(p, "crossover")?;
    check_prob(d, "distortion")?;
    let x = JointPmf::uniform(vec![VariableId::new("X", 2)])?;
    let pmf = x.attach_channel(VariableId::new("Y", 2), &["X"], &bsc(p))?;
    ProblemInstance::new(
        SourceModel::Discrete { pmf, source: vec!["X".into()] },
        vec![DecoderSpec::new(&["Y"], Distortion::Hamming, vec![d])],
    )
}

/// One message `U = X ⊕ Bern(q)` for a binary Wyner–Ziv instance.
pub fn wyner_ziv_test_channel(inst: &ProblemInstance, q: f64) -> Result<MessageSchedule> {
    check_prob(q, "test channel crossover")?;
    let SourceModel::Discrete { pmf, .. } = &inst.model else {
        return Err(Error::InvalidInstance("needs a discrete source".into()));
    };
    let joint = pmf.attach_channel(VariableId::new("U", 2), &["X"], &bsc(q))?;
    Ok(MessageSchedule::new(vec![ScheduledMessage {
        subset: vec![0],
        message: Message::Discrete(vec!["U".into()]),
    }])
    .with_joint(joint))
}

/// Crossovers of the mismatched product: `Y11 = X1 ⊕ Z`, `Y21 = Y11 ⊕ Z'`,
/// `Y22 = X2 ⊕ Z''`, `Y12 = Y22 ⊕ Z'''`. Decoder 1 holds `(Y11, Y12)`,
/// decoder 2 `(Y21, Y22)`; both want `(X1, X2)` under Hamming distortion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MismatchedParams {
    pub p11: f64,
    pub p21: f64,
    pub p22: f64,
    pub p12: f64,
    pub d: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct MismatchedInstance {
    pub instance: ProblemInstance,
    pub roles: MismatchedRoles,
}

impl MismatchedInstance {
    /// The pmf of source and side information.
    pub fn pmf(&self) -> &JointPmf {
        match &self.instance.model {
            SourceModel::Discrete { pmf, .. } => pmf,
            SourceModel::Gaussian { .. } => unreachable!("built discrete"),
        }
    }

    /// `U_{12} = (W1, W2)`, `U_1`, `U_2` over `joint`, which extends the
    /// instance pmf with the auxiliaries.
    pub fn schedule(&self, joint: JointPmf, aux: &MismatchedAuxiliaries) -> MessageSchedule {
        let mut messages = Vec::new();
        let w: Vec<String> = aux.w1.iter().chain(&aux.w2).cloned().collect();
        for (subset, names) in [(vec![0, 1], w), (vec![0], aux.u1.clone()), (vec![1], aux.u2.clone())] {
            if !names.is_empty() {
                messages.push(ScheduledMessage { subset, message: Message::Discrete(names) });
            }
        }
        MessageSchedule::new(messages).with_joint(joint)
    }
}

pub fn mismatched_binary(p: &MismatchedParams) -> Result<MismatchedInstance> {
    for (v, what) in [(p.p11, "p11"), (p.p21, "p21"), (p.p22, "p22"), (p.p12, "p12"), (p.d[0], "D1"), (p.d[1], "D2")] {
        check_prob(v, what)?;
    }
    let x = JointPmf::uniform(vec![VariableId::new("X1", 2), VariableId::new("X2", 2)])?;
    let j = x.attach_channel(VariableId::new("Y11", 2), &["X1"], &bsc(p.p11))?;
    let j = j.attach_channel(VariableId::new("Y21", 2), &["Y11"], &bsc(p.p21))?;
    let j = j.attach_channel(VariableId::new("Y22", 2), &["X2"], &bsc(p.p22))?;
    let pmf = j.attach_channel(VariableId::new("Y12", 2), &["Y22"], &bsc(p.p12))?;
    let roles = MismatchedRoles {
        x1: "X1".into(),
        x2: "X2".into(),
        y11: "Y11".into(),
        y12: "Y12".into(),
        y21: "Y21".into(),
        y22: "Y22".into(),
    };
    check_mismatched_structure(&pmf, &roles)?;
    let instance = ProblemInstance::new(
        SourceModel::Discrete { pmf, source: vec!["X1".into(), "X2".into()] },
        vec![
            DecoderSpec::new(&["Y11", "Y12"], Distortion::Hamming, vec![p.d[0]]),
            DecoderSpec::new(&["Y21", "Y22"], Distortion::Hamming, vec![p.d[1]]),
        ],
    )?;
    Ok(MismatchedInstance { instance, roles })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LessNoisyInstance {
    pub instance: ProblemInstance,
    /// Instance pmf extended with `A = a(X)`.
    pub joint: JointPmf,
    pub a: String,
}

/// Decoder 1 wants `a(X)` exactly, decoder 2 wants `X` within Hamming
/// distortion `d2`.
///
/// `px` is the source pmf, `a[x]` the map, `y1`/`y2` row-major channels from
/// `X` with `y_sizes` outputs; `None` leaves that decoder without side
/// information.
pub fn less_noisy(
    px: &[f64],
    a: &[usize],
    y1: Option<(&[f64], usize)>,
    y2: Option<(&[f64], usize)>,
    d2: f64,
) -> Result<LessNoisyInstance> {
    let n = px.len();
    if a.len() != n {
        return Err(Error::InvalidInstance(format!("a(·) has {} entries for {n} letters", a.len())));
    }
    check_prob(d2, "D2")?;
    let a_size = a.iter().max().map_or(1, |m| m + 1);
    let mut pmf = JointPmf::new(vec![VariableId::new("X", n)], px.to_vec())?;
    let mut side = [Vec::new(), Vec::new()];
    for (i, y) in [y1, y2].into_iter().enumerate() {
        if let Some((kernel, size)) = y {
            let name = format!("Y{}", i + 1);
            pmf = pmf.attach_channel(VariableId::new(name.clone(), size), &["X"], kernel)?;
            side[i].push(name);
        }
    }
    let joint = pmf.attach_function(VariableId::new("A", a_size), &["X"], |v| a[v[0]])?;
    let table: Vec<f64> = (0..n).flat_map(|x| (0..a_size).map(move |r| if r == a[x] { 0.0 } else { 1.0 })).collect();
    let decoder = |names: &[String], dist: Distortion, d: f64| {
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        DecoderSpec::new(&refs, dist, vec![d])
    };
    let instance = ProblemInstance::new(
        SourceModel::Discrete { pmf, source: vec!["X".into()] },
        vec![
            decoder(&side[0], Distortion::Table { reconstructions: a_size, d: table }, 0.0),
            decoder(&side[1], Distortion::Hamming, d2),
        ],
    )?;
    Ok(LessNoisyInstance { instance, joint, a: "A".into() })
}

/// Sufficient conditions under which the lossless-function bound is tight:
/// `X ↔ (a(X), Y2) ↔ Y1` (degradedness implies the less-noisy order) and
/// `H(a|Y1) ≥ H(a|Y2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LessNoisyCheck {
    pub degraded: bool,
    pub entropy_order: bool,
}

impl LessNoisyInstance {
    pub fn check(&self) -> Result<LessNoisyCheck> {
        let j = &self.joint;
        let y1 = j.mask(&self.instance.decoders[0].side_info)?;
        let y2 = j.mask(&self.instance.decoders[1].side_info)?;
        let x = j.mask(&["X"])?;
        let a = j.mask(&[&self.a])?;
        let degraded = y1 == 0 || j.information(x, y1, a | y2) <= FEASIBILITY_TOL;
        let h = |c: u64| j.entropy_mask(a | c) - j.entropy_mask(c);
        Ok(LessNoisyCheck { degraded, entropy_order: h(y1) + FEASIBILITY_TOL >= h(y2) })
    }

    /// `U_{12} = a(X)`, `U_2 = W` over `joint`.
    pub fn schedule(&self, joint: JointPmf, w: &[String]) -> MessageSchedule {
        let mut messages = vec![ScheduledMessage { subset: vec![0, 1], message: Message::Discrete(vec![self.a.clone()]) }];
        if !w.is_empty() {
            messages.push(ScheduledMessage { subset: vec![1], message: Message::Discrete(w.to_vec()) });
        }
        MessageSchedule::new(messages).with_joint(joint)
    }
}

/// The lossless source coding problem behind an index coding instance:
/// fair bits `X1..Xk`, decoder `i` holds its side information bits and must
/// recover its demanded bits with zero Hamming distortion.
pub fn index_coding_problem(ic: &IndexCodingInstance) -> Result<ProblemInstance> {
    let names: Vec<String> = (0..ic.k()).map(|i| format!("X{}", i + 1)).collect();
    let pick = |mask: u64| -> Vec<&str> {
        (0..ic.k()).filter(|i| mask >> i & 1 == 1).map(|i| names[i].as_str()).collect()
    };
    let pmf = JointPmf::uniform(names.iter().map(|n| VariableId::new(n.clone(), 2)).collect())?;
    let mut decoders = Vec::new();
    for d in ic.decoders() {
        if d.demand == 0 {
            return Err(Error::InvalidInstance("a decoder demands nothing".into()));
        }
        decoders.push(DecoderSpec::new(&pick(d.side_info), Distortion::Hamming, vec![0.0]).with_target(&pick(d.demand)));
    }
    ProblemInstance::new(SourceModel::Discrete { pmf, source: names.clone() }, decoders)
}

/// Sends every demanded bit uncoded to the decoders that want it; bits
/// wanted by the same decoders share one message.
pub fn uncoded_schedule(ic: &IndexCodingInstance) -> MessageSchedule {
    let mut groups: Vec<(Vec<usize>, Vec<String>)> = Vec::new();
    for b in 0..ic.k() {
        let subset: Vec<usize> =
            ic.decoders().iter().enumerate().filter(|(_, d)| d.demand >> b & 1 == 1).map(|(i, _)| i).collect();
        if subset.is_empty() {
            continue;
        }
        let name = format!("X{}", b + 1);
        match groups.iter_mut().find(|g| g.0 == subset) {
            Some(g) => g.1.push(name),
            None => groups.push((subset, vec![name])),
        }
    }
    MessageSchedule::new(
        groups
            .into_iter()
            .map(|(subset, names)| ScheduledMessage { subset, message: Message::Discrete(names) })
            .collect(),
    )
}

/// A named builder in [`classical_instances`].
#[derive(Clone, Copy, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
}

pub fn classical_instances() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "wyner-ziv",
            summary: "one decoder, fair bit through a BSC; wyner_ziv_binary(p, D)",
        },
        CatalogEntry {
            name: "mismatched",
            summary: "two-component product with crossed degraded side information; mismatched_binary(params)",
        },
        CatalogEntry {
            name: "less-noisy",
            summary: "decoder 1 wants a(X) losslessly, decoder 2 wants X; less_noisy(px, a, y1, y2, D2)",
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::achievable::{check_schedule_validity, solve_upper_bound, timo_two_decoder};
    use crate::converse::{less_noisy_expression, watanabe_expression};
    use crate::lp::SolveMode;

    #[test]
    fn wyner_ziv_perfect_side_information() {
        let inst = wyner_ziv_binary(0.0, 0.0).unwrap();
        let s = wyner_ziv_test_channel(&inst, 0.0).unwrap();
        assert!(check_schedule_validity(&inst, &s).is_empty());
        let v = solve_upper_bound(&inst, &[s], SolveMode::Rational).unwrap().value;
        assert_eq!(v.to_string(), "0");
        assert!(wyner_ziv_binary(1.5, 0.0).is_err());
    }

    #[test]
    fn mismatched_builder_and_schedule() {
        let p = MismatchedParams { p11: 0.1, p21: 0.2, p22: 0.05, p12: 0.3, d: [1.0, 1.0] };
        let mi = mismatched_binary(&p).unwrap();
        assert!(check_mismatched_structure(mi.pmf(), &mi.roles).is_ok());
        let j = mi.pmf().attach_channel(VariableId::new("W1", 2), &["X1"], &bsc(0.2)).unwrap();
        let j = j.attach_channel(VariableId::new("W2", 2), &["X2"], &bsc(0.25)).unwrap();
        let j = j.attach_channel(VariableId::new("U1", 2), &["X1"], &bsc(0.1)).unwrap();
        let j = j.attach_channel(VariableId::new("U2", 2), &["X2"], &bsc(0.15)).unwrap();
        let aux = MismatchedAuxiliaries {
            w1: vec!["W1".into()],
            w2: vec!["W2".into()],
            u1: vec!["U1".into()],
            u2: vec!["U2".into()],
        };
        let w = watanabe_expression(&j, &mi.roles, &aux).unwrap();
        let s = mi.schedule(j, &aux);
        let t = timo_two_decoder(&mi.instance, &s).unwrap();
        // Under the product structure the two expressions coincide.
        assert!((t - w.value).abs() < 1e-9, "{t} vs {w:?}");
        let lp = solve_upper_bound(&mi.instance, &[s], SolveMode::Float).unwrap().value.to_f64();
        assert!(lp <= t + 1e-9);
    }

    #[test]
    fn less_noisy_identity_without_side_information() {
        // a = identity, Y1 = ∅: the rate is H(X) + I(X;W|X,Y2) = H(X).
        let px = [0.5, 0.25, 0.25];
        let y2 = [0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8];
        let ln = less_noisy(&px, &[0, 1, 2], None, Some((&y2, 3)), 0.2).unwrap();
        let c = ln.check().unwrap();
        assert!(c.degraded && c.entropy_order);
        let j = ln.joint.attach_function(VariableId::new("W", 3), &["X"], |v| v[0]).unwrap();
        let v = less_noisy_expression(&ln.instance, &j, &["A".into()], &["W".into()]).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
        let s = ln.schedule(j, &["W".into()]);
        assert!(check_schedule_validity(&ln.instance, &s).is_empty(), "{:?}", check_schedule_validity(&ln.instance, &s));
        let t = timo_two_decoder(&ln.instance, &s).unwrap();
        assert!((t - v).abs() < 1e-9);
        assert!(less_noisy(&px, &[0, 1], None, None, 0.2).is_err());
    }

    #[test]
    fn uncoded_index_schedule_sandwiches() {
        use crate::converse::blasiak_lp;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let ic = IndexCodingInstance::random(4, 3, &mut rng).unwrap();
            if ic.decoders().iter().any(|d| d.demand == 0) {
                assert!(index_coding_problem(&ic).is_err());
                continue;
            }
            let inst = index_coding_problem(&ic).unwrap();
            let s = uncoded_schedule(&ic);
            let v = check_schedule_validity(&inst, &s);
            assert!(v.is_empty(), "{ic:?} {v:?}");
            let up = solve_upper_bound(&inst, &[s.clone()], SolveMode::Rational).unwrap().value;
            let lo = blasiak_lp(&ic).unwrap().value.unwrap();
            assert!(lo.to_f64() <= up.to_f64() + 1e-9);
            // Uncoded transmission costs the number of demanded bits.
            let demanded = ic.decoders().iter().fold(0u64, |acc, d| acc | d.demand).count_ones();
            assert_eq!(up.to_f64(), demanded as f64, "{ic:?} {up}");
        }
    }

    #[test]
    fn catalog_names() {
        let names: Vec<_> = classical_instances().iter().map(|e| e.name).collect();
        assert_eq!(names, ["wyner-ziv", "mismatched", "less-noisy"]);
    }
}
