//! Random discrete instances with attached auxiliaries, for property checks.
//!
//! Distortion targets are set to what the attached auxiliaries achieve, so
//! every generated schedule is valid.

use rand::Rng;

use crate::achievable::{
    DecoderSpec, Distortion, Message, MessageSchedule, ProblemInstance, ScheduledMessage, SourceModel,
};
use crate::error::Result;
use crate::pmf::{hamming, JointPmf, VariableId};

/// Row-major random channel with `rows` inputs and `cols` outputs.
pub fn random_kernel<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Vec<f64> {
    let mut k = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let w: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = w.iter().sum();
        k.extend(w.iter().map(|x| x / s));
    }
    k
}

fn alphabet<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(2..=3)
}

/// Hamming distortion `X` reaches from `observed` under `joint`.
fn achieved(joint: &JointPmf, observed: &[&str]) -> Result<f64> {
    let x = joint.mask(&["X"])?;
    let n = joint.sizes_of(x)[0];
    Ok(joint.min_expected_distortion(x, joint.mask(observed)?, &hamming(n), n)?.0)
}

/// One decoder, `U` drawn from a random channel of `X`.
pub fn random_wyner_ziv<R: Rng + ?Sized>(rng: &mut R) -> Result<(ProblemInstance, MessageSchedule)> {
    let (nx, ny, nu) = (alphabet(rng), alphabet(rng), alphabet(rng));
    let x = JointPmf::random(vec![VariableId::new("X", nx)], rng, false)?;
    let pmf = x.attach_channel(VariableId::new("Y", ny), &["X"], &random_kernel(rng, nx, ny))?;
    let joint = pmf.attach_channel(VariableId::new("U", nu), &["X"], &random_kernel(rng, nx, nu))?;
    let d = achieved(&joint, &["U", "Y"])?;
    let inst = ProblemInstance::new(
        SourceModel::Discrete { pmf, source: vec!["X".into()] },
        vec![DecoderSpec::new(&["Y"], Distortion::Hamming, vec![d])],
    )?;
    let sched = MessageSchedule::new(vec![ScheduledMessage {
        subset: vec![0],
        message: Message::Discrete(vec!["U".into()]),
    }])
    .with_joint(joint);
    Ok((inst, sched))
}

/// Two decoders with `U₁₂ | X`, then `U₁` and `U₂` drawn independently given
/// `(X, U₁₂)`, so `U₁ ⊥ U₂ | (X, U₁₂)`.
pub fn random_two_decoder<R: Rng + ?Sized>(rng: &mut R) -> Result<(ProblemInstance, MessageSchedule)> {
    let (nx, n1, n2) = (alphabet(rng), alphabet(rng), alphabet(rng));
    let x = JointPmf::random(vec![VariableId::new("X", nx)], rng, false)?;
    let pmf = x.attach_channel(VariableId::new("Y1", n1), &["X"], &random_kernel(rng, nx, n1))?;
    let pmf = pmf.attach_channel(VariableId::new("Y2", n2), &["X"], &random_kernel(rng, nx, n2))?;
    let (a, b, c) = (alphabet(rng), alphabet(rng), alphabet(rng));
    let joint = pmf.attach_channel(VariableId::new("U12", a), &["X"], &random_kernel(rng, nx, a))?;
    let joint = joint.attach_channel(VariableId::new("U1", b), &["X", "U12"], &random_kernel(rng, nx * a, b))?;
    let joint = joint.attach_channel(VariableId::new("U2", c), &["X", "U12"], &random_kernel(rng, nx * a, c))?;
    let d1 = achieved(&joint, &["U12", "U1", "Y1"])?;
    let d2 = achieved(&joint, &["U12", "U2", "Y2"])?;
    let inst = ProblemInstance::new(
        SourceModel::Discrete { pmf, source: vec!["X".into()] },
        vec![
            DecoderSpec::new(&["Y1"], Distortion::Hamming, vec![d1]),
            DecoderSpec::new(&["Y2"], Distortion::Hamming, vec![d2]),
        ],
    )?;
    let msg = |subset: Vec<usize>, name: &str| ScheduledMessage { subset, message: Message::Discrete(vec![name.into()]) };
    let sched = MessageSchedule::new(vec![msg(vec![0, 1], "U12"), msg(vec![0], "U1"), msg(vec![1], "U2")]).with_joint(joint);
    Ok((inst, sched))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::achievable::{check_schedule_validity, solve_upper_bound, timo_two_decoder};
    use crate::lp::SolveMode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_schedules_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let (inst, s) = random_wyner_ziv(&mut rng).unwrap();
            assert!(check_schedule_validity(&inst, &s).is_empty());
            let (inst, s) = random_two_decoder(&mut rng).unwrap();
            assert!(check_schedule_validity(&inst, &s).is_empty());
            let j = s.joint.as_ref().unwrap();
            let ci = j.conditional_mutual_information(&["U1"], &["U2"], &["X", "U12"]).unwrap();
            assert!(ci < 1e-12);
            let lp = solve_upper_bound(&inst, &[s.clone()], SolveMode::Float).unwrap().value.to_f64();
            assert!(lp <= timo_two_decoder(&inst, &s).unwrap() + 1e-9);
        }
    }

    #[test]
    fn kernels_are_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = random_kernel(&mut rng, 3, 4);
        for row in k.chunks(4) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
