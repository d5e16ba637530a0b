//! The odd-cycle family: `m` independent components on a cycle, decoder `i`
//! sees its two neighbours and wants its own component.

use std::fmt;

use nalgebra::DMatrix;
use num_rational::BigRational;

use crate::achievable::{
    build_achievable_lp, solve_upper_bound, sweep_orderings, DecoderSpec, Distortion, Message,
    MessageSchedule, ProblemInstance, ScheduledMessage, SourceModel,
};
use crate::converse::{
    blasiak_lp, lattice_limit, minimax_bound, relaxed_index_lp, ComponentDecoder, IndexCodingInstance,
    MinimaxAuxiliaries, RdOracle, RowFamily, SideInfoLattice,
};
use crate::error::{Error, Result};
use crate::gauss::{GaussianMessage, GaussianSystem};
use crate::lp::{LpSolution, Number, SolveMode};
use crate::pmf::{JointPmf, VariableId};

/// Orderings beyond `9!` are not swept.
pub const MAX_SWEPT_CYCLE: usize = 9;
/// `ε` sequence for the Gaussian converse limit.
pub const CONVERSE_EPS: [f64; 3] = [1e-3, 1e-4, 1e-5];
/// Agreement required between the extrapolated converse and the upper bound.
pub const LIMIT_TOL: f64 = 1e-6;
pub const VALUE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Fair bits demanded losslessly.
    BinaryIndex,
    /// Unit-variance Gaussians under MSE `D`.
    Gaussian,
}

impl Flavor {
    pub fn parse(s: &str) -> Option<Flavor> {
        match s {
            "binary" | "binary-index" => Some(Flavor::BinaryIndex),
            "gaussian" => Some(Flavor::Gaussian),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::BinaryIndex => "binary",
            Flavor::Gaussian => "gaussian",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OddCycleSpec {
    pub m: usize,
    pub flavor: Flavor,
    /// Ignored for the binary flavor.
    pub d: f64,
}

impl OddCycleSpec {
    pub fn binary(m: usize) -> Self {
        OddCycleSpec { m, flavor: Flavor::BinaryIndex, d: 0.0 }
    }

    pub fn gaussian(m: usize, d: f64) -> Self {
        OddCycleSpec { m, flavor: Flavor::Gaussian, d }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 5 || self.m % 2 == 0 {
            return Err(Error::InvalidInstance(format!("odd cycle needs odd m >= 5, got {}", self.m)));
        }
        if self.flavor == Flavor::Gaussian && !(self.d > 0.0 && self.d < 1.0) {
            return Err(Error::InvalidInstance(format!("D must lie in (0, 1), got {}", self.d)));
        }
        Ok(())
    }

    /// `(m/4)·log2(1/D)` for Gaussians, `m/2` for bits.
    pub fn expected_rate(&self) -> f64 {
        match self.flavor {
            Flavor::BinaryIndex => self.m as f64 / 2.0,
            Flavor::Gaussian => self.m as f64 / 4.0 * (1.0 / self.d).log2(),
        }
    }

    fn neighbours(&self, i: usize) -> (usize, usize) {
        ((i + self.m - 1) % self.m, (i + 1) % self.m)
    }
}

pub fn component_name(i: usize) -> String {
    format!("X{}", i + 1)
}

/// Noise variance `2D/(1−D)` on each coordinate of a pair message.
pub fn pair_noise_variance(d: f64) -> f64 {
    2.0 * d / (1.0 - d)
}

/// The instance with one message per cycle edge `{j, j+1}`, in edge order;
/// every other subset is degenerate and left out.
pub fn odd_cycle_instance(spec: &OddCycleSpec) -> Result<(ProblemInstance, MessageSchedule)> {
    spec.validate()?;
    let m = spec.m;
    let names: Vec<String> = (0..m).map(component_name).collect();
    let decoder = |i: usize, dist: Distortion, d: f64| {
        let (l, r) = spec.neighbours(i);
        DecoderSpec::new(&[&names[l], &names[r]], dist, vec![d]).with_target(&[&names[i]])
    };
    let edges = (0..m).map(|j| (j, (j + 1) % m));
    match spec.flavor {
        Flavor::BinaryIndex => {
            let pmf = JointPmf::uniform(names.iter().map(|n| VariableId::new(n.clone(), 2)).collect())?;
            let decoders = (0..m).map(|i| decoder(i, Distortion::Hamming, 0.0)).collect();
            let inst = ProblemInstance::new(SourceModel::Discrete { pmf, source: names.clone() }, decoders)?;
            let messages = edges
                .map(|(j, k)| ScheduledMessage {
                    subset: vec![j, k],
                    message: Message::Discrete(vec![names[j].clone(), names[k].clone()]),
                })
                .collect();
            Ok((inst, MessageSchedule::new(messages)))
        }
        Flavor::Gaussian => {
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let system = GaussianSystem::independent_scalars(&refs, &vec![1.0; m])?;
            let decoders = (0..m).map(|i| decoder(i, Distortion::Mse, spec.d)).collect();
            let inst = ProblemInstance::new(SourceModel::Gaussian { system, source: names.clone() }, decoders)?;
            let noise = pair_noise_variance(spec.d);
            let messages = edges
                .map(|(j, k)| ScheduledMessage {
                    subset: vec![j, k],
                    message: Message::Gaussian(GaussianMessage::new(
                        format!("U{}{}", j + 1, k + 1),
                        vec![names[j].clone(), names[k].clone()],
                        DMatrix::identity(2, 2),
                        DMatrix::from_diagonal_element(2, 2, noise),
                    )),
                })
                .collect();
            Ok((inst, MessageSchedule::new(messages)))
        }
    }
}

/// Component masks of the converse node family (0-based bits).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleSets {
    pub o: u64,
    pub o_plus: u64,
    pub e: u64,
    pub e_plus: u64,
    pub m_set: u64,
    pub last: u64,
    /// `X ∖ (M ∪ X_m)`.
    pub s: u64,
}

impl CycleSets {
    pub fn new(m: usize) -> Self {
        let bits = |f: &dyn Fn(usize) -> bool| (1..=m).filter(|&i| f(i)).fold(0u64, |acc, i| acc | 1 << (i - 1));
        let o = bits(&|i| i % 2 == 1 && i != m);
        let o_plus = bits(&|i| i <= m - 2);
        let e = bits(&|i| i % 2 == 0);
        let e_plus = bits(&|i| (2..=m - 1).contains(&i));
        let m_set = bits(&|i| (2..=m - 2).contains(&i));
        let last = 1 << (m - 1);
        let full = (1u64 << m) - 1;
        CycleSets { o, o_plus, e, e_plus, m_set, last, s: full & !(m_set | last) }
    }
}

fn component_decoders(spec: &OddCycleSpec) -> Vec<ComponentDecoder> {
    (0..spec.m)
        .map(|i| {
            let (l, r) = spec.neighbours(i);
            ComponentDecoder { side_info: 1 << l | 1 << r, demand: 1 << i, max_distortion: spec.d }
        })
        .collect()
}

/// Gaussian flavor: the ten nodes `∅, O, E, X_m, O⁺, E⁺, M, O⁺∪E⁺, M∪X_m, X`
/// with the edges whose sum gives `2K(∅) ≥ m·R(D+ε)`. Binary flavor: every
/// subset, elemental rows.
pub fn odd_cycle_converse_lattice(spec: &OddCycleSpec) -> Result<SideInfoLattice> {
    spec.validate()?;
    let m = spec.m;
    let names: Vec<String> = (0..m).map(component_name).collect();
    if spec.flavor == Flavor::BinaryIndex {
        return SideInfoLattice::from_index_instance(&IndexCodingInstance::odd_cycle(m)?, RowFamily::Elemental);
    }
    let c = CycleSets::new(m);
    let mut lat = SideInfoLattice::new(names, component_decoders(spec))?;
    let (empty, full) = (lat.empty(), lat.full());
    let o = lat.add_node("O", c.o)?;
    let e = lat.add_node("E", c.e)?;
    let last = lat.add_node(format!("X{m}"), c.last)?;
    let o_plus = lat.add_node("O+", c.o_plus)?;
    let e_plus = lat.add_node("E+", c.e_plus)?;
    let mid = lat.add_node("M", c.m_set)?;
    let oe = lat.add_node("O+∪E+", c.o_plus | c.e_plus)?;
    let mx = lat.add_node(format!("M∪X{m}"), c.m_set | c.last)?;
    for a in [o, e, last] {
        lat.add_monotone(empty, a)?;
    }
    lat.add_plus(o, o_plus)?;
    lat.add_plus(e, e_plus)?;
    lat.add_submodular(o_plus, e_plus)?;
    lat.add_plus(oe, full)?;
    lat.add_submodular(mid, last)?;
    lat.add_plus(mx, full)?;
    Ok(lat)
}

/// `V = ∅` and `U_{Y_i} = X_i + N_i` with `K_{X_i|U} = D + ε`.
pub fn odd_cycle_minimax_auxiliaries(spec: &OddCycleSpec, eps: f64) -> Result<MinimaxAuxiliaries> {
    spec.validate()?;
    let u = (0..spec.m)
        .map(|i| match spec.flavor {
            Flavor::BinaryIndex => Ok(Message::Discrete(vec![component_name(i)])),
            Flavor::Gaussian => {
                let t = spec.d + eps;
                if t >= 1.0 {
                    return Err(Error::InvalidAuxiliaries(format!("D + ε = {t} leaves nothing to describe")));
                }
                Ok(Message::Gaussian(GaussianMessage::new(
                    format!("U{}", i + 1),
                    vec![component_name(i)],
                    DMatrix::identity(1, 1),
                    DMatrix::from_element(1, 1, t / (1.0 - t)),
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MinimaxAuxiliaries { v: Message::Degenerate, u, joint: None })
}

/// `(R_{jk}, R'_{jk})` of the explicit scheme: `(1/2, 3/2)` for bits and
/// `R' = ½log((1+D)/2D) + ¼log((1+D)²/4D)`, `R = log((1+D)/2D) − R'` for
/// Gaussians.
pub fn explicit_feasible_point(spec: &OddCycleSpec) -> (f64, f64) {
    match spec.flavor {
        Flavor::BinaryIndex => (0.5, 1.5),
        Flavor::Gaussian => {
            let d = spec.d;
            let a = ((1.0 + d) / (2.0 * d)).log2();
            let rp = 0.5 * a + 0.25 * ((1.0 + d).powi(2) / (4.0 * d)).log2();
            (a - rp, rp)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orderings {
    /// Every ordering of the edge messages (up to `MAX_SWEPT_CYCLE`).
    All,
    Given,
}

#[derive(Clone, Debug)]
pub struct OddCycleReport {
    pub spec: OddCycleSpec,
    pub expected: f64,
    pub upper: Number,
    /// Blasiak LP value (bits) or extrapolated lattice limit (Gaussians).
    pub lower: Number,
    /// Relaxed index-coding LP at `ε = 0` (bits only).
    pub relaxed: Option<Number>,
    /// `(ε, value)` of the lattice program (Gaussians only).
    pub converse_sequence: Vec<(f64, f64)>,
    pub orderings: usize,
    /// Orderings that produced different programs.
    pub distinct_programs: usize,
    pub order_insensitive: bool,
    /// Solution of the best achievable program.
    pub upper_solution: LpSolution,
    /// `(R_{jk}, R'_{jk})` and its worst row violation.
    pub feasible_point: (f64, f64),
    pub feasible_violation: f64,
    pub feasible_objective: f64,
    /// Inner permutation value at `ε = 0`, when `m ≤ 8`.
    pub minimax: Option<f64>,
    pub failures: Vec<String>,
}

impl OddCycleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        let verdict = if self.passed() { "MATCH" } else { "MISMATCH" };
        format!("upper={} lower={} {verdict}", format_value(&self.upper), format_value(&self.lower))
    }
}

impl fmt::Display for OddCycleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.summary())
    }
}

/// Exact values as `p/q`; floats rounded to six decimals with trailing
/// zeros dropped.
pub fn format_value(v: &Number) -> String {
    match v {
        Number::Rational(_) => v.to_string(),
        Number::Float(x) => {
            let s = format!("{x:.6}");
            let s = s.trim_end_matches('0').trim_end_matches('.');
            if s == "-0" { "0".into() } else { s.to_string() }
        }
    }
}

/// Runs the achievable program and the matching converse and compares them
/// with the closed form. Mismatches are recorded in the report.
pub fn verify_odd_cycle(spec: &OddCycleSpec, orderings: Orderings) -> Result<OddCycleReport> {
    let (inst, sched) = odd_cycle_instance(spec)?;
    let m = spec.m;
    let expected = spec.expected_rate();
    let mut failures = Vec::new();
    let mode = match spec.flavor {
        Flavor::BinaryIndex => SolveMode::Rational,
        Flavor::Gaussian => SolveMode::Float,
    };

    let (upper, count, distinct, insensitive) = match orderings {
        Orderings::All if m <= MAX_SWEPT_CYCLE => {
            let sweep = sweep_orderings(&inst, &sched, mode, MAX_SWEPT_CYCLE)?;
            let same = sweep.order_insensitive(VALUE_TOL);
            if !same {
                failures.push(format!("orderings disagree: {} distinct optima", sweep.values.len()));
            }
            (sweep.best, sweep.orderings, sweep.distinct_programs, same)
        }
        _ => (solve_upper_bound(&inst, std::slice::from_ref(&sched), mode)?, 1, 1, true),
    };
    let upper_solution = upper.solution;
    let upper = upper.value;

    let half_m = || Number::Rational(BigRational::new((m as i64).into(), 2.into()));
    let (lower, relaxed, sequence) = match spec.flavor {
        Flavor::BinaryIndex => {
            if upper != half_m() {
                failures.push(format!("upper bound {upper} is not {m}/2"));
            }
            let ic = IndexCodingInstance::odd_cycle(m)?;
            let table2 = blasiak_lp(&ic)?;
            let table3 = relaxed_index_lp(&ic, 0.0)?;
            let (t2, t3) = (table2.value.clone().expect("optimal"), table3.value.clone().expect("optimal"));
            if t2 != half_m() {
                failures.push(format!("classical index program gives {t2}, not {m}/2"));
            }
            if t3 != half_m() {
                failures.push(format!("relaxed index program gives {t3}, not {m}/2"));
            }
            (t2, Some(t3), Vec::new())
        }
        Flavor::Gaussian => {
            if (upper.to_f64() - expected).abs() > VALUE_TOL {
                failures.push(format!("upper bound {upper} differs from {expected}"));
            }
            let lat = odd_cycle_converse_lattice(spec)?;
            let oracle = RdOracle::SeparableGaussian { variance: vec![1.0; m] };
            let lim = lattice_limit(&lat, &oracle, &CONVERSE_EPS, SolveMode::Float)?;
            for &(e, v) in &lim.sequence {
                let closed = m as f64 / 4.0 * (1.0 / (spec.d + e)).log2() - e;
                if (v - closed).abs() > VALUE_TOL {
                    failures.push(format!("lattice program at ε={e:e} gives {v}, expected {closed}"));
                }
            }
            if (lim.limit - expected).abs() > LIMIT_TOL {
                failures.push(format!("converse limit {} differs from {expected}", lim.limit));
            }
            (Number::Float(lim.limit), None, lim.sequence)
        }
    };

    // The explicit rates against every generated row.
    let lp = build_achievable_lp(&inst, &sched)?;
    let point = explicit_feasible_point(spec);
    let mut x = vec![0.0; lp.variables().len()];
    for (i, v) in lp.variables().iter().enumerate() {
        x[i] = if v.name.starts_with("R'") { point.1 } else { point.0 };
    }
    let violation = lp.max_violation(&x);
    let objective = lp.objective_at(&x);
    if violation > VALUE_TOL {
        failures.push(format!("explicit rates violate a row by {violation:e}"));
    }
    if (objective - expected).abs() > VALUE_TOL {
        failures.push(format!("explicit rates sum to {objective}, not {expected}"));
    }

    let minimax = if m <= crate::converse::MAX_MINIMAX_DECODERS {
        let aux = odd_cycle_minimax_auxiliaries(spec, 0.0)?;
        let v = minimax_bound(&inst, &aux, 0.0)?.inner;
        let closed = match spec.flavor {
            Flavor::BinaryIndex => (m - 1) as f64 / 2.0,
            Flavor::Gaussian => (m - 1) as f64 / 4.0 * (1.0 / spec.d).log2(),
        };
        if (v - closed).abs() > VALUE_TOL {
            failures.push(format!("permutation bound gives {v}, expected {closed}"));
        }
        Some(v)
    } else {
        None
    };

    Ok(OddCycleReport {
        spec: *spec,
        expected,
        upper,
        lower,
        relaxed,
        converse_sequence: sequence,
        orderings: count,
        distinct_programs: distinct,
        order_insensitive: insensitive,
        upper_solution,
        feasible_point: point,
        feasible_violation: violation,
        feasible_objective: objective,
        minimax,
        failures,
    })
}
