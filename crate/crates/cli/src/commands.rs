//! Subcommand bodies. Each returns the records it computed.

use std::fmt;

use rdlp::achievable::{
    build_achievable_lp, solve_upper_bound, sweep_orderings, MessageSchedule, ProblemInstance, UpperBound, DEFAULT_MAX_ORDERED_MESSAGES,
};
use rdlp::converse::{
    blasiak_lp_with, build_blasiak_lp, build_general_lower_lp, build_relaxed_index_lp, extrapolate_to_zero, minimax_bound, relaxed_index_lp_with, solve_general_lower,
    IndexCodingInstance, IndexLp, IndexLpOptions, MinimaxAuxiliaries, RdOracle, RowFamily, SideInfoLattice,
    MAX_MINIMAX_DECODERS,
};
use rdlp::instances::{
    index_coding_problem, odd_cycle_converse_lattice, odd_cycle_instance, odd_cycle_minimax_auxiliaries,
    uncoded_schedule, verify_odd_cycle, Flavor, OddCycleReport, OddCycleSpec, Orderings, CONVERSE_EPS,
    MAX_SWEPT_CYCLE,
};
use rdlp::lp::{LinearProgram, Number, SolveMode};
use rdlp::Error;

use crate::instance::{require_schedules, Problem};
use crate::record::{fingerprint, RecordStats, RecordValue, ResultRecord};

/// Exit status 2 for `Usage`, 3 for `Solver`.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Solver(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Solver(m) => f.write_str(m),
        }
    }
}

/// Valid input that is too large to solve counts as a solver failure.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() || matches!(e, Error::LimitExceeded(_) | Error::TableTooLarge { .. }) {
            Failure::Solver(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Out<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Out<T> {
    Err(Failure::Usage(msg.into()))
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub eps: Option<f64>,
    /// `--mode`, else `RDLP_MODE`; `None` picks per instance.
    pub mode: Option<SolveMode>,
    pub orderings: Orderings,
}

impl Options {
    fn mode_or(&self, default: SolveMode) -> SolveMode {
        self.mode.unwrap_or(default)
    }
}

fn record(bound: &str, value: &Number, mode: SolveMode, eps: f64, print: &str, stats: RecordStats) -> Out<ResultRecord> {
    let value = RecordValue::from_number(value);
    if !value.is_finite() {
        return Err(Failure::Solver(format!("{bound}: non-finite value")));
    }
    Ok(ResultRecord {
        bound: bound.into(),
        value,
        mode: mode.as_str().into(),
        eps,
        fingerprint: fingerprint(print),
        heuristic: false,
        stats,
    })
}

/// Exact instances default to rational arithmetic, the rest to floats.
fn default_mode(p: &Problem) -> SolveMode {
    match p {
        Problem::Index(_) => SolveMode::Rational,
        Problem::OddCycle(s) if s.flavor == Flavor::BinaryIndex => SolveMode::Rational,
        _ => SolveMode::Float,
    }
}

/// The achievable-scheme view of a problem: instance, schedules, and the
/// ordering cap for sweeps.
fn achievable_view(p: &Problem) -> Out<(ProblemInstance, Vec<MessageSchedule>, usize)> {
    match p {
        Problem::General(g) => Ok((g.instance.clone(), require_schedules(g)?.to_vec(), DEFAULT_MAX_ORDERED_MESSAGES)),
        Problem::Index(ic) => Ok((index_coding_problem(ic)?, vec![uncoded_schedule(ic)], DEFAULT_MAX_ORDERED_MESSAGES)),
        Problem::OddCycle(spec) => {
            let (inst, sched) = odd_cycle_instance(spec)?;
            Ok((inst, vec![sched], MAX_SWEPT_CYCLE))
        }
    }
}

fn is_gaussian(p: &Problem) -> bool {
    match p {
        Problem::General(g) => g.instance.is_gaussian(),
        Problem::Index(_) => false,
        Problem::OddCycle(s) => s.flavor == Flavor::Gaussian,
    }
}

pub fn upper(p: &Problem, opts: &Options, gaussian_only: bool) -> Out<Vec<ResultRecord>> {
    if gaussian_only && !is_gaussian(p) {
        return usage("upper-gauss needs a Gaussian instance");
    }
    let mode = opts.mode_or(default_mode(p));
    let (inst, schedules, cap) = achievable_view(p)?;
    let mut stats = RecordStats::default();
    let best: UpperBound = match opts.orderings {
        Orderings::Given => {
            stats.orderings = schedules.len();
            stats.solves = schedules.len();
            solve_upper_bound(&inst, &schedules, mode)?
        }
        Orderings::All => {
            let mut best: Option<UpperBound> = None;
            for (i, s) in schedules.iter().enumerate() {
                let sweep = sweep_orderings(&inst, s, mode, cap)?;
                stats.orderings += sweep.orderings;
                stats.solves += sweep.distinct_programs;
                let mut ub = sweep.best;
                ub.schedule_index = i;
                if best.as_ref().is_none_or(|b| less(&ub.value, &b.value)) {
                    best = Some(ub);
                }
            }
            best.expect("at least one schedule")
        }
    };
    let solves = stats.solves;
    stats.absorb(&best.solution.stats);
    stats.solves = solves;
    let bound = if gaussian_only { "achievable-gauss" } else { "achievable" };
    Ok(vec![record(bound, &best.value, mode, 0.0, &best.lp.dump(), stats)?])
}

fn less(a: &Number, b: &Number) -> bool {
    match (a, b) {
        (Number::Rational(x), Number::Rational(y)) => x < y,
        _ => a.to_f64() < b.to_f64(),
    }
}

fn index_view(p: &Problem) -> Out<IndexCodingInstance> {
    match p {
        Problem::Index(ic) => Ok(ic.clone()),
        Problem::OddCycle(s) if s.flavor == Flavor::BinaryIndex => Ok(IndexCodingInstance::odd_cycle(s.m)?),
        _ => usage("lower-index needs an index-coding instance"),
    }
}

/// Fingerprinted by the program as generated, before any orbit merge.
fn index_record(bound: &str, r: &IndexLp, eps: f64, generated: &LinearProgram) -> Out<ResultRecord> {
    let mut stats = RecordStats::default();
    stats.absorb(&r.solution.stats);
    record(bound, &Number::Rational(r.value.clone()), SolveMode::Rational, eps, &generated.dump(), stats)
}

/// The classical subset program and the relaxed one at `--eps` (default 0).
/// Both are always solved exactly.
pub fn lower_index(p: &Problem, opts: &Options) -> Out<Vec<ResultRecord>> {
    let ic = index_view(p)?;
    let eps = opts.eps.unwrap_or(0.0);
    let o = IndexLpOptions::default();
    Ok(vec![
        index_record("blasiak", &blasiak_lp_with(&ic, &o)?, 0.0, &build_blasiak_lp(&ic, &o)?)?,
        index_record(
            "relaxed-index",
            &relaxed_index_lp_with(&ic, eps, &o)?,
            eps,
            &build_relaxed_index_lp(&ic, eps, o.family)?,
        )?,
    ])
}

fn lattice_view(p: &Problem) -> Out<(SideInfoLattice, RdOracle)> {
    match p {
        Problem::General(g) => Ok(g.lattice()?),
        Problem::Index(ic) => Ok((
            SideInfoLattice::from_index_instance(ic, RowFamily::Elemental)?,
            RdOracle::SeparableLossless { entropy: vec![1.0; ic.k()] },
        )),
        Problem::OddCycle(spec) => {
            let oracle = match spec.flavor {
                Flavor::BinaryIndex => RdOracle::SeparableLossless { entropy: vec![1.0; spec.m] },
                Flavor::Gaussian => RdOracle::SeparableGaussian { variance: vec![1.0; spec.m] },
            };
            Ok((odd_cycle_converse_lattice(spec)?, oracle))
        }
    }
}

/// The lattice program at `--eps`. Without `--eps`, Gaussian oracles are
/// run along a shrinking ε sequence and extrapolated to 0; the others are
/// solved at ε = 0.
pub fn lower_general(p: &Problem, opts: &Options) -> Out<Vec<ResultRecord>> {
    let (lattice, oracle) = lattice_view(p)?;
    let mode = opts.mode_or(default_mode(p));
    let solve = |eps: f64| -> Out<ResultRecord> {
        let b = solve_general_lower(&lattice, &oracle, eps, mode)?;
        let mut stats = RecordStats::default();
        stats.absorb(&b.solution.stats);
        let mut r = record("lattice", &b.value, mode, eps, &b.program.lp.dump(), stats)?;
        r.heuristic = b.heuristic;
        Ok(r)
    };
    let sequence = matches!(oracle, RdOracle::SeparableGaussian { .. }) && opts.eps.is_none();
    if !sequence {
        return Ok(vec![solve(opts.eps.unwrap_or(0.0))?]);
    }
    let mut out = Vec::new();
    for e in CONVERSE_EPS {
        out.push(solve(e)?);
    }
    let points: Vec<(f64, f64)> = out.iter().map(|r| (r.eps, r.value.to_number().expect("own value").to_f64())).collect();
    let limit = extrapolate_to_zero(&points)?;
    let mut stats = RecordStats::default();
    for r in &out {
        stats.solves += r.stats.solves;
        stats.rows = stats.rows.max(r.stats.rows);
        stats.columns = stats.columns.max(r.stats.columns);
        stats.pivots += r.stats.pivots;
        stats.rational_fallback |= r.stats.rational_fallback;
    }
    let prints: String = out.iter().map(|r| r.fingerprint.as_str()).collect::<Vec<_>>().join("\n");
    out.push(record("lattice-limit", &Number::Float(limit), mode, 0.0, &prints, stats)?);
    Ok(out)
}

fn minimax_view(p: &Problem, eps: f64) -> Out<(ProblemInstance, MinimaxAuxiliaries)> {
    match p {
        Problem::General(g) => match &g.minimax {
            Some(aux) => Ok((g.instance.clone(), aux.clone())),
            None => usage("the instance lists no minimax auxiliaries"),
        },
        Problem::Index(_) => usage("minimax needs a discrete, gaussian or odd-cycle instance"),
        Problem::OddCycle(spec) => Ok((odd_cycle_instance(spec)?.0, odd_cycle_minimax_auxiliaries(spec, eps)?)),
    }
}

/// The permutation bound: best decoder order, minus ε.
pub fn minimax(p: &Problem, opts: &Options) -> Out<Vec<ResultRecord>> {
    let eps = opts.eps.unwrap_or(0.0);
    let (inst, aux) = minimax_view(p, eps)?;
    let v = minimax_bound(&inst, &aux, eps)?;
    let stats = RecordStats { orderings: v.permutations, ..RecordStats::default() };
    let print = format!("{inst:?}\n{aux:?}");
    Ok(vec![record("minimax", &Number::Float(v.value), SolveMode::Float, eps, &print, stats)?])
}

/// Sandwich verdict between the best certified lower bound and the upper
/// bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Sandwich {
    pub upper: ResultRecord,
    pub lower: ResultRecord,
    pub gap: Number,
}

pub const MATCH_TOL: f64 = 1e-9;

impl Sandwich {
    pub fn verdict(&self) -> &'static str {
        let g = self.gap.to_f64();
        let exact = matches!(self.gap, Number::Rational(_));
        if (exact && g == 0.0) || (!exact && g.abs() <= MATCH_TOL) {
            "MATCH"
        } else if g < 0.0 {
            "VIOLATION"
        } else {
            "GAP"
        }
    }

    pub fn line(&self) -> String {
        format!("upper={} lower={} {}", self.upper.display_value(), self.lower.display_value(), self.verdict())
    }
}

fn sandwich(records: &[ResultRecord]) -> Option<Sandwich> {
    let value = |r: &ResultRecord| r.value.to_number().expect("own value");
    let upper = records.iter().find(|r| r.bound.starts_with("achievable"))?;
    // ε > 0 lattice values sit below the limit; the limit stands for them.
    // The permutation value is only a bound once minimized over auxiliaries,
    // so fixed-auxiliary evaluations stay out.
    let has_limit = records.iter().any(|r| r.bound == "lattice-limit");
    let lower = records
        .iter()
        .filter(|r| !r.bound.starts_with("achievable") && r.bound != "minimax" && !r.heuristic)
        .filter(|r| !(has_limit && r.bound == "lattice"))
        .max_by(|a, b| {
            let (x, y) = (value(a), value(b));
            if less(&x, &y) {
                std::cmp::Ordering::Less
            } else if less(&y, &x) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })?;
    let gap = match (value(upper), value(lower)) {
        (Number::Rational(u), Number::Rational(l)) => Number::Rational(u - l),
        (u, l) => Number::Float(u.to_f64() - l.to_f64()),
    };
    Some(Sandwich { upper: upper.clone(), lower: lower.clone(), gap })
}

/// Every bound that applies to the instance, and the sandwich they form.
/// Bounds that do not apply are listed in `skipped`.
pub fn compare(p: &Problem, opts: &Options) -> Out<(Vec<ResultRecord>, Option<Sandwich>, Vec<String>)> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut run = |name: &str, r: Out<Vec<ResultRecord>>| -> Out<()> {
        match r {
            Ok(v) => records.extend(v),
            Err(Failure::Usage(m)) => skipped.push(format!("{name}: {m}")),
            Err(e) => return Err(e),
        }
        Ok(())
    };
    run("upper", upper(p, opts, false))?;
    if matches!(p, Problem::Index(_)) || matches!(p, Problem::OddCycle(s) if s.flavor == Flavor::BinaryIndex) {
        run("lower-index", lower_index(p, opts))?;
    }
    run("lower-general", lower_general(p, opts))?;
    let minimax_fits = match p {
        Problem::General(g) => g.minimax.is_some() && g.instance.m() <= MAX_MINIMAX_DECODERS,
        Problem::OddCycle(s) => s.m <= MAX_MINIMAX_DECODERS,
        Problem::Index(_) => false,
    };
    if minimax_fits {
        run("minimax", minimax(p, opts))?;
    }
    let s = sandwich(&records);
    Ok((records, s, skipped))
}

pub fn odd_cycle(spec: &OddCycleSpec, opts: &Options) -> Out<(OddCycleReport, Vec<ResultRecord>)> {
    let report = verify_odd_cycle(spec, opts.orderings)?;
    let mode = if report.upper.is_exact() { SolveMode::Rational } else { SolveMode::Float };
    let mut stats = RecordStats { orderings: report.orderings, ..RecordStats::default() };
    stats.absorb(&report.upper_solution.stats);
    stats.solves = report.distinct_programs;
    let (inst, sched) = odd_cycle_instance(spec)?;
    let upper_print = build_achievable_lp(&inst, &sched)?.dump();
    let mut records = vec![record("achievable", &report.upper, mode, 0.0, &upper_print, stats)?];
    let none = RecordStats::default;
    match spec.flavor {
        Flavor::BinaryIndex => {
            let ic = IndexCodingInstance::odd_cycle(spec.m)?;
            let o = IndexLpOptions::default();
            let classical = build_blasiak_lp(&ic, &o)?.dump();
            records.push(record("blasiak", &report.lower, SolveMode::Rational, 0.0, &classical, none())?);
            if let Some(r) = &report.relaxed {
                let relaxed = build_relaxed_index_lp(&ic, 0.0, o.family)?.dump();
                records.push(record("relaxed-index", r, SolveMode::Rational, 0.0, &relaxed, none())?);
            }
        }
        Flavor::Gaussian => {
            let (lattice, oracle) = lattice_view(&Problem::OddCycle(*spec))?;
            let mut prints = Vec::new();
            for &(e, v) in &report.converse_sequence {
                let dump = build_general_lower_lp(&lattice, &oracle, e)?.lp.dump();
                let r = record("lattice", &Number::Float(v), SolveMode::Float, e, &dump, none())?;
                prints.push(r.fingerprint.clone());
                records.push(r);
            }
            records.push(record("lattice-limit", &report.lower, SolveMode::Float, 0.0, &prints.join("\n"), none())?);
        }
    }
    if let Some(v) = report.minimax {
        let aux = odd_cycle_minimax_auxiliaries(spec, 0.0)?;
        let stats = RecordStats { orderings: (1..=spec.m).product(), ..none() };
        records.push(record("minimax", &Number::Float(v), SolveMode::Float, 0.0, &format!("{inst:?}\n{aux:?}"), stats)?);
    }
    Ok((report, records))
}

/// Plain-text dumps of the programs behind a bound.
pub fn dump(p: &Problem, program: &str, opts: &Options) -> Out<String> {
    let eps = opts.eps.unwrap_or(0.0);
    match program {
        "achievable" => {
            let (inst, schedules, _) = achievable_view(p)?;
            let dumps = schedules
                .iter()
                .map(|s| Ok(build_achievable_lp(&inst, s)?.dump()))
                .collect::<Out<Vec<_>>>()?;
            Ok(dumps.join("\n"))
        }
        "blasiak" => {
            let ic = index_view(p)?;
            Ok(build_blasiak_lp(&ic, &IndexLpOptions::default())?.dump())
        }
        "relaxed-index" => {
            let ic = index_view(p)?;
            Ok(build_relaxed_index_lp(&ic, eps, RowFamily::Elemental)?.dump())
        }
        "lattice" => {
            let (lattice, oracle) = lattice_view(p)?;
            Ok(build_general_lower_lp(&lattice, &oracle, eps)?.lp.dump())
        }
        other => usage(format!("unknown program `{other}` (achievable, blasiak, relaxed-index, lattice)")),
    }
}
