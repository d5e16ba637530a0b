//! The computable lower-bound LP over a finite family of generalized side
//! information variables.
//!
//! Nodes are sets of source components. A node `A` plays the role of side
//! information that is a sub-vector of the source, so the couplings the LP
//! needs reduce to set relations:
//!
//! * `A ⊆ B` makes `B` less noisy than `A` and gives `A ↔ B ↔ X`;
//! * `A ∩ B` is a function of `A`, and with independent components
//!   `B ↔ A∩B ↔ A` holds.
//!
//! Rows: `K(X) = 0`, `K ≥ 0`, `K(A) ≥ K(B)` (monotonicity),
//! `K(A) ≥ K(B) + R(D_A + ε)` (monotonicity+), and
//! `K(A) + K(B) ≥ K(A∩B) + K(A∪B)` (submodularity), each only where declared.
//! There is no slope row. The objective is `K(∅) − ε`.

use crate::error::{Error, Result};
use crate::lp::{self, Coef, LinearProgram, LpSolution, Number, Relation, SolveMode, VarId, VarKind};
use crate::pmf::{hamming, JointPmf, VariableId};

use super::index::{IndexCodingInstance, RowFamily};

/// Cap on the auxiliary alphabet of the grid-search backend.
pub const MAX_GRID_ALPHABET: usize = 6;
/// Cap on the joint alphabet of the conditioned-on variables `B`.
pub const MAX_GRID_CELLS: usize = 1 << 16;
/// Cap on the number of candidate kernels the grid search visits.
pub const MAX_GRID_KERNELS: u128 = 1 << 20;

/// A decoder of a component-separable problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentDecoder {
    /// Component mask of `Y_i`.
    pub side_info: u64,
    /// Component mask of the reconstruction target.
    pub demand: u64,
    pub max_distortion: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeNode {
    pub label: String,
    /// Component mask of the side information this node stands for.
    pub members: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SideInfoLattice {
    components: Vec<String>,
    decoders: Vec<ComponentDecoder>,
    nodes: Vec<LatticeNode>,
    /// `K(a) ≥ K(b)`.
    monotone: Vec<(usize, usize)>,
    /// `K(a) ≥ K(b) + R(D_a + ε)`.
    plus: Vec<(usize, usize)>,
    /// `K(a) + K(b) ≥ K(meet) + K(join)` as `(a, b, meet, join)`.
    submodular: Vec<(usize, usize, usize, usize)>,
}

fn mask_label(components: &[String], mask: u64) -> String {
    let inner: Vec<&str> = (0..components.len())
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| components[i].as_str())
        .collect();
    format!("{{{}}}", inner.join(","))
}

impl SideInfoLattice {
    /// A lattice holding only `∅` and `X` (node indices 0 and 1).
    pub fn new(components: Vec<String>, decoders: Vec<ComponentDecoder>) -> Result<Self> {
        let k = components.len();
        if k == 0 || k > 63 {
            return Err(Error::InvalidInstance(format!("need 1..=63 components, got {k}")));
        }
        let full = (1u64 << k) - 1;
        for (i, d) in decoders.iter().enumerate() {
            if (d.side_info | d.demand) & !full != 0 || d.demand == 0 {
                return Err(Error::InvalidInstance(format!("decoder {} has bad component sets", i + 1)));
            }
            if !d.max_distortion.is_finite() || d.max_distortion < 0.0 {
                return Err(Error::InvalidInstance(format!("decoder {} has a bad distortion target", i + 1)));
            }
        }
        Ok(SideInfoLattice {
            components,
            decoders,
            nodes: vec![
                LatticeNode { label: "∅".into(), members: 0 },
                LatticeNode { label: "X".into(), members: full },
            ],
            monotone: Vec::new(),
            plus: Vec::new(),
            submodular: Vec::new(),
        })
    }

    /// Every subset of the components as a node, with single-step
    /// monotonicity, monotonicity+ from each `A` to `A ∪ S(A)`, and
    /// submodularity on each `(A+i, A+j)` (or all pairs for
    /// [`RowFamily::Full`]); `S(A)` are the demands of decoders whose side
    /// information lies in `A`.
    pub fn all_subsets(components: Vec<String>, decoders: Vec<ComponentDecoder>, family: RowFamily) -> Result<Self> {
        let k = components.len();
        if k > super::index::MAX_INDEX_BITS {
            return Err(Error::LimitExceeded(format!("{k} components; the full lattice is limited to 12")));
        }
        let mut lat = Self::new(components, decoders)?;
        let n = 1u64 << k;
        let mut id = vec![0usize; n as usize];
        id[(n - 1) as usize] = 1;
        for a in 1..n - 1 {
            id[a as usize] = lat.add_node(mask_label(&lat.components, a), a)?;
        }
        for a in 0..n {
            for i in 0..k {
                if a >> i & 1 == 0 {
                    lat.add_monotone(id[a as usize], id[(a | 1 << i) as usize])?;
                }
            }
        }
        for a in 0..n {
            let s = lat.closure(a);
            match family {
                RowFamily::Elemental => {
                    if s & !a != 0 {
                        lat.add_plus(id[a as usize], id[(a | s) as usize])?;
                    }
                }
                RowFamily::Full => {
                    let rest = (n - 1) & !a;
                    let mut t = rest;
                    while t != 0 {
                        lat.add_plus(id[a as usize], id[(a | t) as usize])?;
                        t = (t - 1) & rest;
                    }
                }
            }
        }
        match family {
            RowFamily::Elemental => {
                for a in 0..n {
                    for i in 0..k {
                        for j in i + 1..k {
                            if a >> i & 1 == 0 && a >> j & 1 == 0 {
                                lat.add_submodular(id[(a | 1 << i) as usize], id[(a | 1 << j) as usize])?;
                            }
                        }
                    }
                }
            }
            RowFamily::Full => {
                for a in 0..n {
                    for b in a + 1..n {
                        if a & !b != 0 && b & !a != 0 {
                            lat.add_submodular(id[a as usize], id[b as usize])?;
                        }
                    }
                }
            }
        }
        Ok(lat)
    }

    /// The full lattice of an index-coding instance (components `X1..Xk`,
    /// lossless demands).
    pub fn from_index_instance(inst: &IndexCodingInstance, family: RowFamily) -> Result<Self> {
        let names = (1..=inst.k()).map(|i| format!("X{i}")).collect();
        let decoders = inst
            .decoders()
            .iter()
            .filter(|d| d.demand != 0)
            .map(|d| ComponentDecoder { side_info: d.side_info, demand: d.demand, max_distortion: 0.0 })
            .collect();
        Self::all_subsets(names, decoders, family)
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    pub fn decoders(&self) -> &[ComponentDecoder] {
        &self.decoders
    }

    pub fn nodes(&self) -> &[LatticeNode] {
        &self.nodes
    }

    pub fn monotone_edges(&self) -> &[(usize, usize)] {
        &self.monotone
    }

    pub fn plus_edges(&self) -> &[(usize, usize)] {
        &self.plus
    }

    pub fn submodular_rows(&self) -> &[(usize, usize, usize, usize)] {
        &self.submodular
    }

    pub fn empty(&self) -> usize {
        0
    }

    pub fn full(&self) -> usize {
        1
    }

    pub fn full_mask(&self) -> u64 {
        (1u64 << self.components.len()) - 1
    }

    pub fn node(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    pub fn node_of(&self, members: u64) -> Option<usize> {
        self.nodes.iter().position(|n| n.members == members)
    }

    /// Component mask from component names.
    pub fn mask<S: AsRef<str>>(&self, names: &[S]) -> Result<u64> {
        names.iter().try_fold(0u64, |acc, n| {
            let n = n.as_ref();
            self.components
                .iter()
                .position(|c| c == n)
                .map(|i| acc | 1 << i)
                .ok_or_else(|| Error::UnknownVariable(n.to_string()))
        })
    }

    pub fn add_node(&mut self, label: impl Into<String>, members: u64) -> Result<usize> {
        let label = label.into();
        if members & !self.full_mask() != 0 {
            return Err(Error::InvalidInstance(format!("node `{label}` refers to unknown components")));
        }
        if self.node(&label).is_some() {
            return Err(Error::DuplicateVariable(label));
        }
        if let Some(other) = self.node_of(members) {
            return Err(Error::InvalidInstance(format!(
                "node `{label}` duplicates `{}`",
                self.nodes[other].label
            )));
        }
        self.nodes.push(LatticeNode { label, members });
        Ok(self.nodes.len() - 1)
    }

    fn check_node(&self, a: usize) -> Result<()> {
        if a >= self.nodes.len() {
            return Err(Error::InvalidInstance(format!("no lattice node #{a}")));
        }
        Ok(())
    }

    fn check_chain(&self, a: usize, b: usize, what: &str) -> Result<()> {
        self.check_node(a)?;
        self.check_node(b)?;
        let (ma, mb) = (self.nodes[a].members, self.nodes[b].members);
        if ma & !mb != 0 || ma == mb {
            return Err(Error::InvalidInstance(format!(
                "{what} edge `{}` → `{}` needs a strictly larger node",
                self.nodes[a].label, self.nodes[b].label
            )));
        }
        Ok(())
    }

    /// `K(a) ≥ K(b)`; `b` must strictly contain `a`, which keeps the edges
    /// acyclic and pointing towards `X`.
    pub fn add_monotone(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_chain(a, b, "monotonicity")?;
        self.monotone.push((a, b));
        Ok(())
    }

    /// `K(a) ≥ K(b) + R(D_a + ε)`; `b` must strictly contain `a`.
    pub fn add_plus(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_chain(a, b, "monotonicity+")?;
        self.plus.push((a, b));
        Ok(())
    }

    /// `K(a) + K(b) ≥ K(a∩b) + K(a∪b)`; both the meet and the join must be
    /// nodes.
    pub fn add_submodular(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_node(a)?;
        self.check_node(b)?;
        let (ma, mb) = (self.nodes[a].members, self.nodes[b].members);
        let find = |m: u64, what: &str| {
            self.node_of(m).ok_or_else(|| {
                Error::InvalidInstance(format!(
                    "submodularity on `{}`, `{}` needs the {what} {} as a node",
                    self.nodes[a].label,
                    self.nodes[b].label,
                    mask_label(&self.components, m)
                ))
            })
        };
        let meet = find(ma & mb, "meet")?;
        let join = find(ma | mb, "join")?;
        self.submodular.push((a, b, meet, join));
        Ok(())
    }

    /// Demands of the decoders whose side information lies in `members`.
    pub fn closure(&self, members: u64) -> u64 {
        self.decoders
            .iter()
            .filter(|d| d.side_info & !members == 0)
            .fold(0, |acc, d| acc | d.demand)
    }

    /// `D_A`: indices of decoders whose side information lies in node `a`.
    pub fn degraded_decoders(&self, a: usize) -> Vec<usize> {
        let m = self.nodes[a].members;
        (0..self.decoders.len()).filter(|&i| self.decoders[i].side_info & !m == 0).collect()
    }
}

/// Back ends for `R(D_A) = min I(B; V | A)` over auxiliaries `V` letting
/// every decoder in `D_A` meet its target from `(V, Y_i)`.
#[derive(Clone, Debug, PartialEq)]
pub enum RdOracle {
    /// Independent components reconstructed losslessly; per-component
    /// entropies in bits. The `ε` slack is charged as `ε·log2|S(A)|`.
    SeparableLossless { entropy: Vec<f64> },
    /// Independent Gaussian components under MSE; per-component variances.
    SeparableGaussian { variance: Vec<f64> },
    /// Grid search over kernels `p(v|b)` with probabilities in multiples of
    /// `1/resolution`, Hamming distortion on each decoder's demand. Returns
    /// the best value found, which can exceed the true minimum.
    Exhaustive { pmf: JointPmf, v_alphabet: usize, resolution: usize },
}

impl RdOracle {
    pub fn name(&self) -> &'static str {
        match self {
            RdOracle::SeparableLossless { .. } => "separable-lossless",
            RdOracle::SeparableGaussian { .. } => "separable-gaussian",
            RdOracle::Exhaustive { .. } => "exhaustive-small-alphabet",
        }
    }

    pub fn is_heuristic(&self) -> bool {
        matches!(self, RdOracle::Exhaustive { .. })
    }
}

/// A rate from an [`RdOracle`]; `heuristic` marks grid-search values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdValue {
    pub value: f64,
    pub heuristic: bool,
}

/// `R(D_A + ε)` for side information `given` (A) and variable `target` (B ⊇ A).
pub fn conditional_rate_distortion(
    oracle: &RdOracle,
    lattice: &SideInfoLattice,
    given: u64,
    target: u64,
    eps: f64,
) -> Result<RdValue> {
    if given & !target != 0 {
        return Err(Error::RateOracle("a target that does not contain the side information".into()));
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::RateOracle(format!("eps = {eps}")));
    }
    let k = lattice.components.len();
    let decoders: Vec<&ComponentDecoder> =
        lattice.decoders.iter().filter(|d| d.side_info & !given == 0).collect();
    let per_component = |v: &[f64], what: &str| -> Result<()> {
        if v.len() != k || v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::RateOracle(format!("{what} needs {k} nonnegative entries")));
        }
        Ok(())
    };
    match oracle {
        RdOracle::SeparableLossless { entropy } => {
            per_component(entropy, "separable-lossless")?;
            let s = decoders.iter().fold(0u64, |acc, d| acc | d.demand);
            let covered = target & !given & s;
            let gain: f64 = (0..k).filter(|i| covered >> i & 1 == 1).map(|i| entropy[i]).sum();
            let fano = if s.count_ones() > 1 { eps * f64::from(s.count_ones()).log2() } else { 0.0 };
            Ok(RdValue { value: (gain - fano).max(0.0), heuristic: false })
        }
        RdOracle::SeparableGaussian { variance } => {
            per_component(variance, "separable-gaussian")?;
            let mut value = 0.0;
            for i in (0..k).filter(|i| (target & !given) >> i & 1 == 1) {
                let best = decoders
                    .iter()
                    .filter(|d| d.demand >> i & 1 == 1)
                    .map(|d| d.max_distortion)
                    .fold(f64::INFINITY, f64::min);
                if best.is_finite() {
                    let d = best + eps;
                    if d <= 0.0 {
                        return Err(Error::RateOracle(format!(
                            "zero distortion on Gaussian component {}",
                            lattice.components[i]
                        )));
                    }
                    value += (0.5 * (variance[i] / d).log2()).max(0.0);
                }
            }
            Ok(RdValue { value, heuristic: false })
        }
        RdOracle::Exhaustive { pmf, v_alphabet, resolution } => {
            grid_search(pmf, lattice, &decoders, given, target, eps, *v_alphabet, *resolution)
        }
    }
}

fn binomial(n: u128, r: u128) -> u128 {
    (0..r).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All compositions of `resolution` into `parts` nonnegative parts.
fn compositions(resolution: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![resolution]];
    }
    let mut out = Vec::new();
    for first in 0..=resolution {
        for mut rest in compositions(resolution - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn grid_search(
    pmf: &JointPmf,
    lattice: &SideInfoLattice,
    decoders: &[&ComponentDecoder],
    given: u64,
    target: u64,
    eps: f64,
    v_alphabet: usize,
    resolution: usize,
) -> Result<RdValue> {
    let k = lattice.components.len();
    let names: Vec<&str> = pmf.variables().iter().map(|v| v.name.as_str()).collect();
    if names.len() != k || names.iter().zip(&lattice.components).any(|(a, b)| *a != b) {
        return Err(Error::RateOracle("grid search needs a pmf over exactly the lattice components".into()));
    }
    if decoders.is_empty() {
        return Ok(RdValue { value: 0.0, heuristic: false });
    }
    if !(2..=MAX_GRID_ALPHABET).contains(&v_alphabet) || resolution == 0 {
        return Err(Error::RateOracle(format!(
            "grid search needs 2..={MAX_GRID_ALPHABET} auxiliary letters and a positive resolution"
        )));
    }
    let cells: usize = pmf.sizes_of(target).iter().product();
    if cells > MAX_GRID_CELLS {
        return Err(Error::RateOracle(format!("{cells} target cells exceed {MAX_GRID_CELLS}")));
    }
    let per_row = binomial((resolution + v_alphabet - 1) as u128, (v_alphabet - 1) as u128);
    let total = u32::try_from(cells).ok().and_then(|c| per_row.checked_pow(c)).unwrap_or(u128::MAX);
    if total > MAX_GRID_KERNELS {
        return Err(Error::RateOracle(format!(
            "{total} candidate kernels exceed the grid limit {MAX_GRID_KERNELS}"
        )));
    }
    let rows = compositions(resolution, v_alphabet);
    let given_names: Vec<&str> = (0..k).filter(|i| target >> i & 1 == 1).map(|i| names[i]).collect();
    let v = VariableId::new("__V", v_alphabet);
    let v_bit = 1u64 << k;
    let mut choice = vec![0usize; cells];
    let mut best = f64::INFINITY;
    loop {
        let kernel: Vec<f64> = choice
            .iter()
            .flat_map(|&c| rows[c].iter().map(|&p| p as f64 / resolution as f64))
            .collect();
        let joint = pmf.attach_channel(v.clone(), &given_names, &kernel)?;
        let rate = joint.information(target & !given, v_bit, given);
        if rate < best {
            let feasible = decoders.iter().all(|d| {
                let n: usize = joint.sizes_of(d.demand).iter().product();
                joint
                    .min_expected_distortion(d.demand, v_bit | d.side_info, &hamming(n), n)
                    .map(|(dist, _)| dist <= d.max_distortion + eps + 1e-12)
                    .unwrap_or(false)
            });
            if feasible {
                best = rate;
            }
        }
        // odometer over the per-cell row choices
        let mut pos = 0;
        loop {
            if pos == cells {
                return if best.is_finite() {
                    Ok(RdValue { value: best, heuristic: true })
                } else {
                    Err(Error::RateOracle("no kernel on the grid meets the distortion targets".into()))
                };
            }
            choice[pos] += 1;
            if choice[pos] < rows.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// The built program with the rates that entered it.
#[derive(Clone, Debug)]
pub struct GeneralLowerLp {
    pub lp: LinearProgram,
    /// `(A, B, R(D_A + ε))` per monotonicity+ edge.
    pub rates: Vec<(String, String, f64)>,
    /// Some rate came from the grid-search back end.
    pub heuristic: bool,
    k_vars: Vec<VarId>,
}

impl GeneralLowerLp {
    pub fn var_of(&self, node: usize) -> VarId {
        self.k_vars[node]
    }
}

pub fn build_general_lower_lp(lattice: &SideInfoLattice, oracle: &RdOracle, eps: f64) -> Result<GeneralLowerLp> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidInstance(format!("eps must be finite and nonnegative, got {eps}")));
    }
    let mut lp = LinearProgram::new("lattice");
    let kv = lattice
        .nodes
        .iter()
        .map(|n| lp.add_var(format!("K{}", n.label), VarKind::NonNegative))
        .collect::<Result<Vec<_>>>()?;
    let label = |i: usize| lattice.nodes[i].label.as_str();
    lp.add_constraint("initialize", [(kv[lattice.full()], Coef::int(1))], Relation::Eq, 0)?;
    for &(a, b) in &lattice.monotone {
        lp.add_constraint(
            format!("mono[{}>{}]", label(a), label(b)),
            [(kv[a], Coef::int(1)), (kv[b], Coef::int(-1))],
            Relation::Ge,
            0,
        )?;
    }
    let mut rates = Vec::new();
    let mut heuristic = false;
    for &(a, b) in &lattice.plus {
        let r = conditional_rate_distortion(oracle, lattice, lattice.nodes[a].members, lattice.nodes[b].members, eps)
            .map_err(|e| Error::RateOracle(format!("edge `{}` → `{}`: {e}", label(a), label(b))))?;
        heuristic |= r.heuristic;
        rates.push((label(a).to_string(), label(b).to_string(), r.value));
        lp.add_constraint(
            format!("mono+[{}>{}]", label(a), label(b)),
            [(kv[a], Coef::int(1)), (kv[b], Coef::int(-1))],
            Relation::Ge,
            Coef::snap(r.value),
        )?;
    }
    for &(a, b, meet, join) in &lattice.submodular {
        lp.add_constraint(
            format!("submod[{},{}]", label(a), label(b)),
            [(kv[a], Coef::int(1)), (kv[b], Coef::int(1)), (kv[meet], Coef::int(-1)), (kv[join], Coef::int(-1))],
            Relation::Ge,
            0,
        )?;
    }
    lp.set_objective([(kv[lattice.empty()], Coef::int(1))])?;
    if eps > 0.0 {
        lp.set_offset(Coef::snap(eps).neg());
    }
    Ok(GeneralLowerLp { lp, rates, heuristic, k_vars: kv })
}

/// A solved lattice program.
#[derive(Clone, Debug)]
pub struct LatticeBound {
    pub value: Number,
    pub eps: f64,
    pub heuristic: bool,
    pub solution: LpSolution,
    pub program: GeneralLowerLp,
}

pub fn solve_general_lower(
    lattice: &SideInfoLattice,
    oracle: &RdOracle,
    eps: f64,
    mode: SolveMode,
) -> Result<LatticeBound> {
    let program = build_general_lower_lp(lattice, oracle, eps)?;
    let solution = lp::solve(&program.lp, mode)?;
    solution.optimal_value()?;
    Ok(LatticeBound {
        value: solution.value.clone().expect("optimal"),
        eps,
        heuristic: program.heuristic,
        solution,
        program,
    })
}

/// Value of the interpolating polynomial through `(ε, value)` at `ε = 0`
/// (Neville's scheme).
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidInstance("no points to extrapolate".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if !p.0.is_finite() || !p.1.is_finite() || points[..i].iter().any(|q| q.0 == p.0) {
            return Err(Error::InvalidInstance("extrapolation needs distinct finite abscissae".into()));
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut t: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = t.len();
    for level in 1..n {
        for i in 0..n - level {
            let j = i + level;
            t[i] = (x[j] * t[i] - x[i] * t[i + 1]) / (x[j] - x[i]);
        }
    }
    Ok(t[0])
}

/// Lattice values along a decreasing `ε` sequence and their extrapolation.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeLimit {
    pub sequence: Vec<(f64, f64)>,
    pub limit: f64,
    pub heuristic: bool,
}

pub fn lattice_limit(
    lattice: &SideInfoLattice,
    oracle: &RdOracle,
    eps: &[f64],
    mode: SolveMode,
) -> Result<LatticeLimit> {
    let mut sequence = Vec::new();
    let mut heuristic = false;
    for &e in eps {
        if e <= 0.0 {
            return Err(Error::InvalidInstance("the ε sequence must be positive".into()));
        }
        let b = solve_general_lower(lattice, oracle, e, mode)?;
        heuristic |= b.heuristic;
        sequence.push((e, b.value.to_f64()));
    }
    let limit = extrapolate_to_zero(&sequence)?;
    Ok(LatticeLimit { sequence, limit, heuristic })
}
