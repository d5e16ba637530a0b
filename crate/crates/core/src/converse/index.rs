//! Index coding: `k` independent fair bits, each decoder holding a subset
//! of them and demanding another subset.
//!
//! Two set-function LPs over all subsets of the bits: the classical bound on
//! `K̂` (initialize, slope, monotonicity, decode, submodularity) and its
//! relaxation on `K = K̂ − |A|` (non-negativity, slope, monotonicity,
//! monotonicity+, submodularity). Both are solved exactly.
//!
//! With [`RowFamily::Elemental`] every family is generated from single-bit
//! steps only, which spans the same feasible set as the literal enumeration
//! over all pairs ([`RowFamily::Full`]):
//! chains of `A → A+i` rows add up to every `A ⊆ B` row, elemental
//! submodularity implies the general inequality, decode equalities chain
//! because `S(·)` is monotone, and monotonicity+ only binds at
//! `B = A ∪ S(A)`.

use num_rational::BigRational;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lp::{self, merge_variables, Coef, LinearProgram, LpSolution, Relation, SolveMode, VarId, VarKind};

/// Largest number of bits the subset LPs accept (`2^k` variables).
pub const MAX_INDEX_BITS: usize = 12;
/// Largest `k` for the two-table comparison.
pub const MAX_EQUIVALENCE_BITS: usize = 10;
/// Largest `k` for the literal all-pairs row generator.
pub const MAX_FULL_FAMILY_BITS: usize = 6;
/// Largest `k` for the brute-force automorphism search (`k!` permutations).
pub const MAX_AUTOMORPHISM_BITS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexDecoder {
    /// Bit mask of `Y_j`.
    pub side_info: u64,
    /// Bit mask of the demanded bits.
    pub demand: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexCodingInstance {
    k: usize,
    decoders: Vec<IndexDecoder>,
    /// Declared bit permutations preserving the decoder multiset.
    symmetry: Vec<Vec<usize>>,
}

/// `{1,3}` with 1-based bit labels.
pub fn bits_label(mask: u64) -> String {
    let inner: Vec<String> = (0..64).filter(|i| mask >> i & 1 == 1).map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

fn permute_mask(mask: u64, perm: &[usize]) -> u64 {
    perm.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).fold(0, |acc, (_, &p)| acc | 1 << p)
}

fn popcount(mask: u64) -> i64 {
    i64::from(mask.count_ones())
}

impl IndexCodingInstance {
    pub fn new(k: usize, decoders: Vec<IndexDecoder>) -> Result<Self> {
        if k == 0 || k > 63 {
            return Err(Error::InvalidInstance(format!("need 1..=63 bits, got {k}")));
        }
        let full = (1u64 << k) - 1;
        for (j, d) in decoders.iter().enumerate() {
            if (d.side_info | d.demand) & !full != 0 {
                return Err(Error::InvalidInstance(format!("decoder {} refers to bits beyond {k}", j + 1)));
            }
            if d.side_info & d.demand != 0 {
                return Err(Error::InvalidInstance(format!(
                    "decoder {} demands bits {} it already holds",
                    j + 1,
                    bits_label(d.side_info & d.demand)
                )));
            }
        }
        Ok(IndexCodingInstance { k, decoders, symmetry: Vec::new() })
    }

    /// Decoders given as `(side information, demand)` lists of 0-based bits.
    pub fn from_sets(k: usize, decoders: &[(&[usize], &[usize])]) -> Result<Self> {
        let mask = |bits: &[usize]| -> Result<u64> {
            bits.iter().try_fold(0u64, |acc, &b| {
                if b >= k {
                    Err(Error::InvalidInstance(format!("bit {} out of range 1..={k}", b + 1)))
                } else {
                    Ok(acc | 1 << b)
                }
            })
        };
        let decs = decoders
            .iter()
            .map(|(y, w)| Ok(IndexDecoder { side_info: mask(y)?, demand: mask(w)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(k, decs)
    }

    /// Decoder `i` holds its two cycle neighbours and wants bit `i`; the
    /// dihedral symmetry is declared.
    pub fn odd_cycle(m: usize) -> Result<Self> {
        if m < 5 || m % 2 == 0 {
            return Err(Error::InvalidInstance(format!("odd cycle needs odd m >= 5, got {m}")));
        }
        let decs = (0..m)
            .map(|i| IndexDecoder {
                side_info: 1 << ((i + m - 1) % m) | 1 << ((i + 1) % m),
                demand: 1 << i,
            })
            .collect();
        let rotation: Vec<usize> = (0..m).map(|i| (i + 1) % m).collect();
        let reflection: Vec<usize> = (0..m).map(|i| (m - i) % m).collect();
        Self::new(m, decs)?.with_symmetry(vec![rotation, reflection])
    }

    /// Random side information and one to two demanded bits per decoder.
    pub fn random<R: Rng + ?Sized>(k: usize, decoders: usize, rng: &mut R) -> Result<Self> {
        let full = (1u64 << k) - 1;
        let mut decs = Vec::new();
        for _ in 0..decoders {
            let side = rng.random::<u64>() & full;
            let free = full & !side;
            let mut demand = 0;
            if free != 0 {
                let bits: Vec<usize> = (0..k).filter(|b| free >> b & 1 == 1).collect();
                for _ in 0..rng.random_range(1..=2) {
                    demand |= 1 << bits[rng.random_range(0..bits.len())];
                }
            }
            decs.push(IndexDecoder { side_info: side, demand });
        }
        Self::new(k, decs)
    }

    /// Declares symmetry generators; each must be an automorphism.
    pub fn with_symmetry(mut self, generators: Vec<Vec<usize>>) -> Result<Self> {
        for g in &generators {
            if !self.is_automorphism(g) {
                return Err(Error::InvalidInstance(format!("{g:?} is not an automorphism")));
            }
        }
        self.symmetry = generators;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn decoders(&self) -> &[IndexDecoder] {
        &self.decoders
    }

    pub fn symmetry(&self) -> &[Vec<usize>] {
        &self.symmetry
    }

    pub fn full_mask(&self) -> u64 {
        (1u64 << self.k) - 1
    }

    /// `S(A)`: bits demanded by decoders whose side information lies in `A`.
    pub fn closure(&self, a: u64) -> u64 {
        self.decoders
            .iter()
            .filter(|d| d.side_info & !a == 0)
            .fold(0, |acc, d| acc | d.demand)
    }

    /// `A ⇝ B`.
    pub fn decodes(&self, a: u64, b: u64) -> bool {
        a & !b == 0 && b & !a & !self.closure(a) == 0
    }

    pub fn is_automorphism(&self, perm: &[usize]) -> bool {
        if perm.len() != self.k {
            return false;
        }
        let mut seen = vec![false; self.k];
        for &p in perm {
            if p >= self.k || seen[p] {
                return false;
            }
            seen[p] = true;
        }
        let key = |d: &IndexDecoder| (d.side_info, d.demand);
        let mut orig: Vec<_> = self.decoders.iter().map(key).collect();
        let mut mapped: Vec<_> = self
            .decoders
            .iter()
            .map(|d| (permute_mask(d.side_info, perm), permute_mask(d.demand, perm)))
            .collect();
        orig.sort_unstable();
        mapped.sort_unstable();
        orig == mapped
    }

    /// Every automorphism, by enumerating all `k!` permutations.
    pub fn automorphisms(&self) -> Result<Vec<Vec<usize>>> {
        if self.k > MAX_AUTOMORPHISM_BITS {
            return Err(Error::LimitExceeded(format!(
                "automorphism search is limited to {MAX_AUTOMORPHISM_BITS} bits"
            )));
        }
        let mut perm: Vec<usize> = (0..self.k).collect();
        let mut out = Vec::new();
        loop {
            if self.is_automorphism(&perm) {
                out.push(perm.clone());
            }
            // next lexicographic permutation
            let Some(i) = (1..perm.len()).rev().find(|&i| perm[i - 1] < perm[i]) else { break };
            let j = (i..perm.len()).rev().find(|&j| perm[j] > perm[i - 1]).expect("successor");
            perm.swap(i - 1, j);
            perm[i..].reverse();
        }
        Ok(out)
    }
}

/// `S(A)` together with the decode relation out of `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeClosure {
    pub a: u64,
    pub s: u64,
}

impl DecodeClosure {
    /// `A ⇝ B`.
    pub fn leadsto(&self, b: u64) -> bool {
        self.a & !b == 0 && b & !self.a & !self.s == 0
    }

    /// Everything reachable by repeatedly adding decodable bits.
    pub fn fixpoint(&self, inst: &IndexCodingInstance) -> u64 {
        let mut a = self.a;
        loop {
            let next = a | inst.closure(a);
            if next == a {
                return a;
            }
            a = next;
        }
    }
}

pub fn decode_closure(inst: &IndexCodingInstance, a: u64) -> Result<DecodeClosure> {
    if a & !inst.full_mask() != 0 {
        return Err(Error::InvalidInstance(format!("{} is not a set of source bits", bits_label(a))));
    }
    Ok(DecodeClosure { a, s: inst.closure(a) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowFamily {
    /// Single-bit steps only.
    Elemental,
    /// Every subset pair, as literally stated (small `k` only).
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexLpOptions {
    pub family: RowFamily,
    /// Classical table only: `K̂(X) = |X|` and slope rows discounted by `S(A)`.
    pub strengthened: bool,
    /// Merge subsets in the same orbit of the instance's declared symmetry.
    pub use_symmetry: bool,
}

impl Default for IndexLpOptions {
    fn default() -> Self {
        IndexLpOptions { family: RowFamily::Elemental, strengthened: false, use_symmetry: true }
    }
}

/// A solved subset LP.
#[derive(Clone, Debug)]
pub struct IndexLp {
    pub value: BigRational,
    pub solution: LpSolution,
    /// The program actually solved (after any orbit merge).
    pub lp: LinearProgram,
    /// Size of the program before merging.
    pub full_variables: usize,
    pub full_rows: usize,
}

fn check_size(inst: &IndexCodingInstance, family: RowFamily) -> Result<()> {
    if inst.k > MAX_INDEX_BITS {
        return Err(Error::LimitExceeded(format!(
            "{} bits; the subset LPs are limited to {MAX_INDEX_BITS}",
            inst.k
        )));
    }
    if family == RowFamily::Full && inst.k > MAX_FULL_FAMILY_BITS {
        return Err(Error::LimitExceeded(format!(
            "the all-pairs generator is limited to {MAX_FULL_FAMILY_BITS} bits"
        )));
    }
    Ok(())
}

fn subset_vars(lp: &mut LinearProgram, k: usize, prefix: &str, kind: VarKind) -> Result<Vec<VarId>> {
    (0..1u64 << k).map(|a| lp.add_var(format!("{prefix}{}", bits_label(a)), kind)).collect()
}

/// `(A, B)` with `A ⊊ B`: all such pairs, or only `B = A + i`.
fn chains(k: usize, family: RowFamily) -> Vec<(u64, u64)> {
    let n = 1u64 << k;
    let mut out = Vec::new();
    for a in 0..n {
        match family {
            RowFamily::Elemental => {
                out.extend((0..k).filter(|i| a >> i & 1 == 0).map(|i| (a, a | 1 << i)));
            }
            RowFamily::Full => {
                let rest = (n - 1) & !a;
                // proper nonempty supersets of a
                let mut s = rest;
                while s != 0 {
                    out.push((a, a | s));
                    s = (s - 1) & rest;
                }
            }
        }
    }
    out
}

/// `(A, B, A∩B, A∪B)` for the submodularity rows.
fn lattice_pairs(k: usize, family: RowFamily) -> Vec<(u64, u64, u64, u64)> {
    let n = 1u64 << k;
    let mut out = Vec::new();
    match family {
        RowFamily::Elemental => {
            for a in 0..n {
                for i in 0..k {
                    for j in i + 1..k {
                        if a >> i & 1 == 0 && a >> j & 1 == 0 {
                            out.push((a | 1 << i, a | 1 << j, a, a | 1 << i | 1 << j));
                        }
                    }
                }
            }
        }
        RowFamily::Full => {
            for a in 0..n {
                for b in a + 1..n {
                    // comparable pairs give trivial rows
                    if a & !b != 0 && b & !a != 0 {
                        out.push((a, b, a & b, a | b));
                    }
                }
            }
        }
    }
    out
}

fn submodularity(lp: &mut LinearProgram, k: usize, kv: &[VarId], family: RowFamily) -> Result<()> {
    for (a, b, meet, join) in lattice_pairs(k, family) {
        lp.add_constraint(
            format!("submod{}{}", bits_label(a), bits_label(b)),
            [
                (kv[a as usize], Coef::int(1)),
                (kv[b as usize], Coef::int(1)),
                (kv[meet as usize], Coef::int(-1)),
                (kv[join as usize], Coef::int(-1)),
            ],
            Relation::Ge,
            0,
        )?;
    }
    Ok(())
}

/// The classical index-coding LP on `K̂(A)`, `A ⊆ X`.
pub fn build_blasiak_lp(inst: &IndexCodingInstance, opts: &IndexLpOptions) -> Result<LinearProgram> {
    check_size(inst, opts.family)?;
    let k = inst.k;
    let full = inst.full_mask();
    let mut lp = LinearProgram::new("index-classical");
    let kv = subset_vars(&mut lp, k, "Kh", VarKind::Free)?;
    lp.add_constraint(
        "initialize",
        [(kv[full as usize], Coef::int(1))],
        if opts.strengthened { Relation::Eq } else { Relation::Ge },
        k as i64,
    )?;
    for (a, b) in chains(k, opts.family) {
        let (va, vb) = (kv[a as usize], kv[b as usize]);
        let tag = format!("{}{}", bits_label(a), bits_label(b));
        let s = inst.closure(a);
        let slack = if opts.strengthened { b & !(s | a) } else { b & !a };
        lp.add_constraint(
            format!("slope{tag}"),
            [(vb, Coef::int(1)), (va, Coef::int(-1))],
            Relation::Le,
            popcount(slack),
        )?;
        lp.add_constraint(format!("mono{tag}"), [(vb, Coef::int(1)), (va, Coef::int(-1))], Relation::Ge, 0)?;
        if inst.decodes(a, b) {
            lp.add_constraint(
                format!("decode{tag}"),
                [(vb, Coef::int(1)), (va, Coef::int(-1))],
                Relation::Eq,
                0,
            )?;
        }
    }
    submodularity(&mut lp, k, &kv, opts.family)?;
    lp.set_objective([(kv[0], Coef::int(1))])?;
    Ok(lp)
}

fn log2_count(mask: u64) -> f64 {
    match mask.count_ones() {
        0 => 0.0,
        c => f64::from(c).log2(),
    }
}

/// The relaxed LP on `K(A)`: objective `K(∅) − ε`, and monotonicity+
/// `K(A) ≥ K(B) + |(B∖A) ∩ S(A)| − ε·log2|S(A)|` (`log2 0` read as 0).
pub fn build_relaxed_index_lp(inst: &IndexCodingInstance, eps: f64, family: RowFamily) -> Result<LinearProgram> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidInstance(format!("eps must be finite and nonnegative, got {eps}")));
    }
    check_size(inst, family)?;
    let k = inst.k;
    let full = inst.full_mask();
    let mut lp = LinearProgram::new("index-relaxed");
    let kv = subset_vars(&mut lp, k, "K", VarKind::NonNegative)?;
    lp.add_constraint("initialize", [(kv[full as usize], Coef::int(1))], Relation::Eq, 0)?;
    for (a, b) in chains(k, family) {
        let (va, vb) = (kv[a as usize], kv[b as usize]);
        let tag = format!("{}{}", bits_label(a), bits_label(b));
        lp.add_constraint(
            format!("slope{tag}"),
            [(va, Coef::int(1)), (vb, Coef::int(-1))],
            Relation::Le,
            popcount(b & !a),
        )?;
        lp.add_constraint(format!("mono{tag}"), [(va, Coef::int(1)), (vb, Coef::int(-1))], Relation::Ge, 0)?;
        if family == RowFamily::Full {
            plus_row(&mut lp, inst, &kv, a, b, eps)?;
        }
    }
    if family == RowFamily::Elemental {
        for a in 0..=full {
            let s = inst.closure(a);
            if s & !a != 0 {
                plus_row(&mut lp, inst, &kv, a, a | s, eps)?;
            }
        }
    }
    submodularity(&mut lp, k, &kv, family)?;
    lp.set_objective([(kv[0], Coef::int(1))])?;
    if eps > 0.0 {
        lp.set_offset(Coef::snap(eps).neg());
    }
    Ok(lp)
}

fn plus_row(lp: &mut LinearProgram, inst: &IndexCodingInstance, kv: &[VarId], a: u64, b: u64, eps: f64) -> Result<()> {
    let s = inst.closure(a);
    let gain = popcount(b & !a & s);
    let rhs = if eps > 0.0 {
        Coef::snap(gain as f64 - eps * log2_count(s))
    } else {
        Coef::int(gain)
    };
    lp.add_constraint(
        format!("mono+{}{}", bits_label(a), bits_label(b)),
        [(kv[a as usize], Coef::int(1)), (kv[b as usize], Coef::int(-1))],
        Relation::Ge,
        rhs,
    )
}

/// Orbit representatives of subsets under the generated group (smallest
/// mask in each orbit).
pub fn subset_orbits(k: usize, generators: &[Vec<usize>]) -> Vec<u64> {
    let n = 1usize << k;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for g in generators {
        for a in 0..n {
            let b = permute_mask(a as u64, g) as usize;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                // keep the smaller mask as root
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi] = lo;
            }
        }
    }
    (0..n).map(|a| find(&mut parent, a) as u64).collect()
}

fn solve_subset_lp(inst: &IndexCodingInstance, lp: LinearProgram, use_symmetry: bool) -> Result<IndexLp> {
    let full_variables = lp.variables().len();
    let full_rows = lp.constraints().len();
    let lp = if use_symmetry && !inst.symmetry.is_empty() {
        // Variables were created in mask order, so VarId(mask) is K(mask).
        let rep: Vec<VarId> = subset_orbits(inst.k, &inst.symmetry).into_iter().map(|r| VarId(r as usize)).collect();
        merge_variables(&lp, &rep)?.lp
    } else {
        lp
    };
    let solution = lp::solve(&lp, SolveMode::Rational)?;
    solution.optimal_value()?;
    let value = solution.value_rational().cloned().expect("rational mode");
    Ok(IndexLp { value, solution, lp, full_variables, full_rows })
}

pub fn blasiak_lp_with(inst: &IndexCodingInstance, opts: &IndexLpOptions) -> Result<IndexLp> {
    let lp = build_blasiak_lp(inst, opts)?;
    solve_subset_lp(inst, lp, opts.use_symmetry)
}

/// The classical bound with default options.
pub fn blasiak_lp(inst: &IndexCodingInstance) -> Result<LpSolution> {
    Ok(blasiak_lp_with(inst, &IndexLpOptions::default())?.solution)
}

pub fn relaxed_index_lp_with(inst: &IndexCodingInstance, eps: f64, opts: &IndexLpOptions) -> Result<IndexLp> {
    let lp = build_relaxed_index_lp(inst, eps, opts.family)?;
    solve_subset_lp(inst, lp, opts.use_symmetry)
}

pub fn relaxed_index_lp(inst: &IndexCodingInstance, eps: f64) -> Result<LpSolution> {
    Ok(relaxed_index_lp_with(inst, eps, &IndexLpOptions::default())?.solution)
}

/// Both tables (and the strengthened classical one) solved exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexEquivalence {
    pub classical: BigRational,
    pub strengthened: BigRational,
    pub relaxed: BigRational,
}

impl IndexEquivalence {
    pub fn equal(&self) -> bool {
        self.classical == self.relaxed && self.classical == self.strengthened
    }
}

/// Solves the classical LP (plain and strengthened) and the relaxed LP at
/// `ε = 0`; [`IndexEquivalence::equal`] reports exact agreement.
pub fn index_lp_equivalence(inst: &IndexCodingInstance) -> Result<IndexEquivalence> {
    if inst.k > MAX_EQUIVALENCE_BITS {
        return Err(Error::LimitExceeded(format!(
            "the comparison is limited to {MAX_EQUIVALENCE_BITS} bits"
        )));
    }
    let plain = IndexLpOptions::default();
    let strong = IndexLpOptions { strengthened: true, ..plain.clone() };
    Ok(IndexEquivalence {
        classical: blasiak_lp_with(inst, &plain)?.value,
        strengthened: blasiak_lp_with(inst, &strong)?.value,
        relaxed: relaxed_index_lp_with(inst, 0.0, &plain)?.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn closure_on_the_five_cycle() {
        let inst = IndexCodingInstance::odd_cycle(5).unwrap();
        // {X1, X3} is decoder 2's side information.
        let c = decode_closure(&inst, 0b00101).unwrap();
        assert_eq!(c.s, 0b00010);
        assert!(c.leadsto(0b00111));
        assert!(!c.leadsto(0b01101));
        assert_eq!(c.fixpoint(&inst), 0b00111);
        let all = decode_closure(&inst, inst.full_mask()).unwrap();
        assert_eq!(all.s, inst.full_mask());
        assert!(all.leadsto(inst.full_mask()));
        assert_eq!(decode_closure(&inst, 0).unwrap().s, 0);
        assert!(decode_closure(&inst, 1 << 5).is_err());
    }

    #[test]
    fn instance_validation() {
        assert!(IndexCodingInstance::from_sets(2, &[(&[0], &[0])]).is_err());
        assert!(IndexCodingInstance::from_sets(2, &[(&[0], &[2])]).is_err());
        assert!(IndexCodingInstance::odd_cycle(4).is_err());
        assert!(IndexCodingInstance::odd_cycle(3).is_err());
        let inst = IndexCodingInstance::from_sets(3, &[(&[0], &[1])]).unwrap();
        assert!(inst.clone().with_symmetry(vec![vec![1, 0, 2]]).is_err());
        assert!(inst.with_symmetry(vec![vec![0, 1, 2]]).is_ok());
    }

    #[test]
    fn dihedral_group_of_the_cycle() {
        let inst = IndexCodingInstance::odd_cycle(5).unwrap();
        assert_eq!(inst.automorphisms().unwrap().len(), 10);
        // Bracelets of length 5 over two colours.
        let reps = subset_orbits(5, inst.symmetry());
        let mut distinct = reps.clone();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 8);
        assert!(reps.iter().enumerate().all(|(a, &r)| r <= a as u64 && reps[r as usize] == r));
    }

    #[test]
    fn no_demands_gives_zero() {
        let inst = IndexCodingInstance::from_sets(3, &[(&[0], &[])]).unwrap();
        assert_eq!(blasiak_lp(&inst).unwrap().value_rational(), Some(&q(0, 1)));
        assert_eq!(relaxed_index_lp(&inst, 0.0).unwrap().value_rational(), Some(&q(0, 1)));
        assert!(index_lp_equivalence(&inst).unwrap().equal());
    }

    #[test]
    fn single_decoder_without_side_information() {
        // One decoder wants two bits and knows nothing: two bits are needed.
        let inst = IndexCodingInstance::from_sets(2, &[(&[], &[0, 1])]).unwrap();
        let eq = index_lp_equivalence(&inst).unwrap();
        assert_eq!(eq.classical, q(2, 1));
        assert!(eq.equal());
    }

    #[test]
    fn odd_cycles_give_half_m() {
        for m in [5usize, 7] {
            let inst = IndexCodingInstance::odd_cycle(m).unwrap();
            let eq = index_lp_equivalence(&inst).unwrap();
            assert_eq!(eq.classical, q(m as i64, 2), "m = {m}");
            assert!(eq.equal(), "{eq:?}");
        }
    }

    #[test]
    fn symmetry_merge_keeps_the_optimum() {
        let inst = IndexCodingInstance::odd_cycle(5).unwrap();
        let with = blasiak_lp_with(&inst, &IndexLpOptions::default()).unwrap();
        let without =
            blasiak_lp_with(&inst, &IndexLpOptions { use_symmetry: false, ..Default::default() }).unwrap();
        assert_eq!(with.value, without.value);
        assert!(with.lp.variables().len() < without.lp.variables().len());
        assert_eq!(with.full_variables, 32);
    }

    #[test]
    fn eps_perturbation_stays_in_band() {
        let inst = IndexCodingInstance::odd_cycle(5).unwrap();
        let eps = 0.01;
        let v = relaxed_index_lp(&inst, eps).unwrap().value_f64().unwrap();
        let k = 5.0f64;
        assert!(v <= 2.5 + 1e-12 && v >= 2.5 - eps * k * k.log2() - 1e-12, "{v}");
    }

    /// Literal all-pairs generation, independent of the builders above.
    fn brute_rows(inst: &IndexCodingInstance, relaxed: bool, strengthened: bool) -> Vec<(Vec<(u64, i64)>, Relation, i64)> {
        let n = 1u64 << inst.k();
        let mut rows = Vec::new();
        let full = n - 1;
        rows.push((vec![(full, 1)], if relaxed || strengthened { Relation::Eq } else { Relation::Ge }, if relaxed { 0 } else { inst.k() as i64 }));
        for a in 0..n {
            for b in 0..n {
                if a & !b != 0 {
                    continue;
                }
                let s = inst.closure(a);
                let d = (b & !a).count_ones() as i64;
                if relaxed {
                    rows.push((vec![(b, 1), (a, -1)], Relation::Ge, -d)); // slope
                    rows.push((vec![(a, 1), (b, -1)], Relation::Ge, 0)); // monotonicity
                    let plus = d - (b & !(s | a)).count_ones() as i64;
                    rows.push((vec![(a, 1), (b, -1)], Relation::Ge, plus));
                } else {
                    let sl = if strengthened { (b & !(s | a)).count_ones() as i64 } else { d };
                    rows.push((vec![(a, 1), (b, -1)], Relation::Ge, -sl));
                    rows.push((vec![(b, 1), (a, -1)], Relation::Ge, 0));
                    let decodes = (b & !a) & !s == 0;
                    if decodes {
                        rows.push((vec![(a, 1), (b, -1)], Relation::Eq, 0));
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                rows.push((vec![(a, 1), (b, 1), (a & b, -1), (a | b, -1)], Relation::Ge, 0));
            }
        }
        rows
    }

    fn satisfies(x: &[f64], rows: &[(Vec<(u64, i64)>, Relation, i64)]) -> bool {
        rows.iter().all(|(terms, rel, rhs)| {
            let lhs: f64 = terms.iter().map(|(v, c)| *c as f64 * x[*v as usize]).sum();
            let r = *rhs as f64;
            match rel {
                Relation::Ge => lhs >= r - 1e-9,
                Relation::Le => lhs <= r + 1e-9,
                Relation::Eq => (lhs - r).abs() <= 1e-9,
            }
        })
    }

    #[test]
    fn families_match_brute_force_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..12 {
            let k = 2 + trial % 4;
            let inst = IndexCodingInstance::random(k, 1 + trial % 3, &mut rng).unwrap();
            for strengthened in [false, true] {
                let opts = |family| IndexLpOptions { family, strengthened, use_symmetry: false };
                let el = blasiak_lp_with(&inst, &opts(RowFamily::Elemental)).unwrap();
                let fu = blasiak_lp_with(&inst, &opts(RowFamily::Full)).unwrap();
                assert_eq!(el.value, fu.value);
                assert!(satisfies(&el.solution.assignment_f64(), &brute_rows(&inst, false, strengthened)));
            }
            let el = relaxed_index_lp_with(&inst, 0.0, &IndexLpOptions { use_symmetry: false, ..Default::default() }).unwrap();
            let fu = relaxed_index_lp_with(
                &inst,
                0.0,
                &IndexLpOptions { family: RowFamily::Full, use_symmetry: false, ..Default::default() },
            )
            .unwrap();
            assert_eq!(el.value, fu.value);
            let x = el.solution.assignment_f64();
            assert!(x.iter().all(|v| *v >= -1e-12));
            assert!(satisfies(&x, &brute_rows(&inst, true, false)));
        }
    }

    #[test]
    fn full_family_is_size_limited() {
        let inst = IndexCodingInstance::odd_cycle(7).unwrap();
        let opts = IndexLpOptions { family: RowFamily::Full, ..Default::default() };
        assert!(matches!(build_blasiak_lp(&inst, &opts), Err(Error::LimitExceeded(_))));
        let big = IndexCodingInstance::from_sets(13, &[]).unwrap();
        assert!(build_blasiak_lp(&big, &IndexLpOptions::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn tables_agree_exactly(seed in any::<u64>(), k in 2usize..=5, m in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = IndexCodingInstance::random(k, m, &mut rng).unwrap();
            let eq = index_lp_equivalence(&inst).unwrap();
            prop_assert!(eq.equal(), "{:?}", eq);
            // between max single-decoder demand and total demand
            let total = inst.decoders().iter().fold(0u64, |a, d| a | d.demand).count_ones();
            prop_assert!(eq.classical <= BigRational::from_integer(total.into()));
        }
    }
}
