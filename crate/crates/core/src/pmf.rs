//! Finite joint distributions over named variables, and the Shannon
//! quantities the bound builders need. Logarithms are base 2.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest dense table we are willing to allocate.
pub const MAX_CELLS: u128 = 1 << 24;
/// Masses below this are treated as exact zeros.
pub const ZERO_MASS: f64 = 1e-15;
const SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VariableId {
    pub name: String,
    pub alphabet_size: usize,
}

impl VariableId {
    pub fn new(name: impl Into<String>, alphabet_size: usize) -> Self {
        VariableId { name: name.into(), alphabet_size }
    }
}

/// A dense joint pmf. Cells are laid out row-major with the last variable
/// varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    vars: Vec<VariableId>,
    mass: Vec<f64>,
}

fn table_size(vars: &[VariableId]) -> Result<usize> {
    let mut cells: u128 = 1;
    for v in vars {
        cells = cells.saturating_mul(v.alphabet_size as u128);
    }
    if cells > MAX_CELLS {
        return Err(Error::TableTooLarge { cells, limit: MAX_CELLS });
    }
    Ok(cells as usize)
}

fn validate_vars(vars: &[VariableId]) -> Result<()> {
    if vars.len() > 64 {
        return Err(Error::InvalidPmf(format!("{} variables (at most 64)", vars.len())));
    }
    let mut seen = HashSet::new();
    for v in vars {
        if v.alphabet_size == 0 {
            return Err(Error::InvalidPmf(format!("variable `{}` has an empty alphabet", v.name)));
        }
        if !seen.insert(v.name.as_str()) {
            return Err(Error::DuplicateVariable(v.name.clone()));
        }
    }
    Ok(())
}

/// Iterates all cells, tracking the offset into a marginal over `mask`.
fn for_each_marginal_offset(vars: &[VariableId], mask: u64, mut f: impl FnMut(usize, usize)) {
    let n = vars.len();
    let mut mstride = vec![0usize; n];
    let mut s = 1;
    for i in (0..n).rev() {
        if mask >> i & 1 == 1 {
            mstride[i] = s;
            s *= vars[i].alphabet_size;
        }
    }
    let total: usize = vars.iter().map(|v| v.alphabet_size).product();
    let mut digits = vec![0usize; n];
    let mut off = 0usize;
    for cell in 0..total {
        f(cell, off);
        for i in (0..n).rev() {
            digits[i] += 1;
            off += mstride[i];
            if digits[i] < vars[i].alphabet_size {
                break;
            }
            off -= mstride[i] * vars[i].alphabet_size;
            digits[i] = 0;
        }
    }
}

fn entropy_of(masses: impl IntoIterator<Item = f64>) -> f64 {
    masses
        .into_iter()
        .filter(|&p| p > ZERO_MASS)
        .map(|p| -p * p.log2())
        .sum()
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of([p, 1.0 - p])
}

impl JointPmf {
    /// Validates and wraps a dense table.
    pub fn new(vars: Vec<VariableId>, mass: Vec<f64>) -> Result<Self> {
        validate_vars(&vars)?;
        let cells = table_size(&vars)?;
        if mass.len() != cells {
            return Err(Error::InvalidPmf(format!(
                "table has {} entries, alphabets need {cells}",
                mass.len()
            )));
        }
        if let Some(bad) = mass.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPmf(format!("entry {bad} is not a probability")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {total}, not 1")));
        }
        let mass = mass.into_iter().map(|p| if p < ZERO_MASS { 0.0 } else { p }).collect();
        Ok(JointPmf { vars, mass })
    }

    /// Builds a pmf from unnormalized nonnegative weights.
    pub fn from_weights(vars: Vec<VariableId>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidPmf("weights must have a positive finite sum".into()));
        }
        Self::new(vars, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(vars: Vec<VariableId>) -> Result<Self> {
        validate_vars(&vars)?;
        let cells = table_size(&vars)?;
        Self::new(vars, vec![1.0 / cells as f64; cells])
    }

    /// Random pmf; roughly a quarter of the cells are zeroed when `sparse`.
    pub fn random<R: Rng + ?Sized>(vars: Vec<VariableId>, rng: &mut R, sparse: bool) -> Result<Self> {
        validate_vars(&vars)?;
        let cells = table_size(&vars)?;
        let mut w: Vec<f64> = (0..cells)
            .map(|_| {
                if sparse && rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random::<f64>() + 1e-3
                }
            })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        Self::from_weights(vars, w)
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.vars
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Bit mask of the named variables.
    pub fn mask<S: AsRef<str>>(&self, names: &[S]) -> Result<u64> {
        let mut m = 0u64;
        for n in names {
            m |= 1 << self.index_of(n.as_ref())?;
        }
        Ok(m)
    }

    pub fn full_mask(&self) -> u64 {
        if self.vars.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.vars.len()) - 1
        }
    }

    /// Marginal table over the variables in `mask`, in declaration order.
    pub fn marginal_table(&self, mask: u64) -> Vec<f64> {
        let size: usize = self
            .vars
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, v)| v.alphabet_size)
            .product();
        let mut out = vec![0.0; size];
        for_each_marginal_offset(&self.vars, mask, |cell, off| out[off] += self.mass[cell]);
        out
    }

    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<JointPmf> {
        let mask = self.mask(keep)?;
        let vars: Vec<VariableId> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, v)| v.clone())
            .collect();
        Ok(JointPmf { vars, mass: self.marginal_table(mask) })
    }

    /// H of the variables in `mask`.
    pub fn entropy_mask(&self, mask: u64) -> f64 {
        if mask & self.full_mask() == 0 {
            return 0.0;
        }
        entropy_of(self.marginal_table(mask))
    }

    pub fn entropy<S: AsRef<str>>(&self, set: &[S]) -> Result<f64> {
        Ok(self.entropy_mask(self.mask(set)?))
    }

    /// `I(A;B|C)` for arbitrary (possibly overlapping) variable sets, as
    /// `H(A∪C) + H(B∪C) − H(A∪B∪C) − H(C)`, before clamping.
    pub fn information_raw(&self, a: u64, b: u64, c: u64) -> f64 {
        self.entropy_mask(a | c) + self.entropy_mask(b | c)
            - self.entropy_mask(a | b | c)
            - self.entropy_mask(c)
    }

    /// Clamped version of [`JointPmf::information_raw`].
    pub fn information(&self, a: u64, b: u64, c: u64) -> f64 {
        self.information_raw(a, b, c).max(0.0)
    }

    /// `I(A;B|C)` in bits for pairwise disjoint named sets.
    pub fn conditional_mutual_information<S: AsRef<str>>(
        &self,
        a: &[S],
        b: &[S],
        c: &[S],
    ) -> Result<f64> {
        let (a, b, c) = self.disjoint_masks(a, b, c)?;
        Ok(self.information(a, b, c))
    }

    pub fn mutual_information<S: AsRef<str>>(&self, a: &[S], b: &[S]) -> Result<f64> {
        self.conditional_mutual_information(a, b, &[])
    }

    fn disjoint_masks<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S]) -> Result<(u64, u64, u64)> {
        let (ma, mb, mc) = (self.mask(a)?, self.mask(b)?, self.mask(c)?);
        let clash = (ma & mb) | (ma & mc) | (mb & mc);
        if clash != 0 {
            let names: Vec<&str> = self
                .vars
                .iter()
                .enumerate()
                .filter(|(i, _)| clash >> i & 1 == 1)
                .map(|(_, v)| v.name.as_str())
                .collect();
            return Err(Error::OverlappingSets(names.join(", ")));
        }
        Ok((ma, mb, mc))
    }

    /// `A ↔ B ↔ C`, i.e. `I(A;C|B) <= tol`.
    pub fn is_markov_chain<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S], tol: f64) -> Result<bool> {
        let (a, b, c) = self.disjoint_masks(a, b, c)?;
        Ok(self.information(a, c, b) <= tol)
    }

    pub fn is_independent<S: AsRef<str>>(&self, a: &[S], b: &[S], tol: f64) -> Result<bool> {
        Ok(self.mutual_information(a, b)? <= tol)
    }

    /// Appends `new` drawn from `kernel` given the variables `given`.
    ///
    /// `kernel` is row-major: one row of `new.alphabet_size` entries per
    /// joint value of `given` (in declaration order, last fastest).
    pub fn attach_channel<S: AsRef<str>>(
        &self,
        new: VariableId,
        given: &[S],
        kernel: &[f64],
    ) -> Result<JointPmf> {
        let mask = self.mask(given)?;
        let rows: usize = self
            .vars
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, v)| v.alphabet_size)
            .product();
        let k = new.alphabet_size;
        if kernel.len() != rows * k {
            return Err(Error::InvalidKernel(format!(
                "expected {rows} rows of {k} entries, got {} entries",
                kernel.len()
            )));
        }
        for (r, row) in kernel.chunks(k.max(1)).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidKernel(format!("row {r} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidKernel(format!("row {r} sums to {s}")));
            }
        }
        let mut vars = self.vars.clone();
        vars.push(new);
        validate_vars(&vars)?;
        let cells = table_size(&vars)?;
        let mut mass = vec![0.0; cells];
        for_each_marginal_offset(&self.vars, mask, |cell, row| {
            let p = self.mass[cell];
            if p == 0.0 {
                return;
            }
            for u in 0..k {
                mass[cell * k + u] = p * kernel[row * k + u];
            }
        });
        let mass = mass.into_iter().map(|p| if p < ZERO_MASS { 0.0 } else { p }).collect();
        Ok(JointPmf { vars, mass })
    }

    /// Appends a deterministic function of `given`; `f` receives the values
    /// of `given` in declaration order.
    pub fn attach_function<S: AsRef<str>>(
        &self,
        new: VariableId,
        given: &[S],
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<JointPmf> {
        let sizes = self.sizes_of(self.mask(given)?);
        let rows: usize = sizes.iter().product();
        let k = new.alphabet_size;
        let mut kernel = vec![0.0; rows * k];
        let mut digits = vec![0usize; sizes.len()];
        for r in 0..rows {
            let u = f(&digits);
            if u >= k {
                return Err(Error::InvalidKernel(format!(
                    "function value {u} outside alphabet of `{}`",
                    new.name
                )));
            }
            kernel[r * k + u] = 1.0;
            for i in (0..digits.len()).rev() {
                digits[i] += 1;
                if digits[i] < sizes[i] {
                    break;
                }
                digits[i] = 0;
            }
        }
        self.attach_channel(new, given, &kernel)
    }

    /// Alphabet sizes of the variables in `mask`, in declaration order.
    pub fn sizes_of(&self, mask: u64) -> Vec<usize> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, v)| v.alphabet_size)
            .collect()
    }

    /// Smallest `E[d(x, g(obs))]` over reconstruction maps `g`.
    ///
    /// `d` is row-major over (joint value of `source`, reconstruction) with
    /// `reconstructions` columns. Returns the expected distortion and the
    /// chosen reconstruction per joint value of `observed`; ties go to the
    /// lowest reconstruction index.
    pub fn min_expected_distortion(
        &self,
        source: u64,
        observed: u64,
        d: &[f64],
        reconstructions: usize,
    ) -> Result<(f64, Vec<usize>)> {
        let nsrc: usize = self.sizes_of(source).iter().product();
        if d.len() != nsrc * reconstructions || reconstructions == 0 {
            return Err(Error::Dimension(format!(
                "distortion table has {} entries, expected {nsrc}×{reconstructions}",
                d.len()
            )));
        }
        let nobs: usize = self.sizes_of(observed).iter().product();
        // joint[(obs, x)] = P(obs, x)
        let mut joint = vec![0.0; nobs * nsrc];
        let mut src_off = vec![0usize; self.mass.len()];
        for_each_marginal_offset(&self.vars, source, |cell, off| src_off[cell] = off);
        for_each_marginal_offset(&self.vars, observed, |cell, off| {
            joint[off * nsrc + src_off[cell]] += self.mass[cell];
        });
        let mut total = 0.0;
        let mut map = Vec::with_capacity(nobs);
        for o in 0..nobs {
            let row = &joint[o * nsrc..(o + 1) * nsrc];
            let mut best = (f64::INFINITY, 0usize);
            for xh in 0..reconstructions {
                let cost: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(x, p)| p * d[x * reconstructions + xh])
                    .sum();
                if cost < best.0 {
                    best = (cost, xh);
                }
            }
            total += best.0;
            map.push(best.1);
        }
        Ok((total, map))
    }
}

/// Hamming distortion on an alphabet of size `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    let mut d = vec![1.0; n * n];
    for i in 0..n {
        d[i * n + i] = 0.0;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bit(name: &str) -> VariableId {
        VariableId::new(name, 2)
    }

    #[test]
    fn marginalize_examples() {
        let p = JointPmf::uniform(vec![bit("X"), bit("Y")]).unwrap();
        assert_eq!(p.marginalize(&["X"]).unwrap().mass(), &[0.5, 0.5]);
        assert_eq!(p.marginalize(&["X", "Y"]).unwrap(), p);
        let q = JointPmf::new(vec![bit("X"), bit("Y")], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(q.marginalize(&["Y"]).unwrap().mass(), &[0.5, 0.5]);
        assert!(matches!(q.marginalize(&["Z"]), Err(Error::UnknownVariable(n)) if n == "Z"));
    }

    #[test]
    fn marginal_keeps_declaration_order() {
        let vars = vec![VariableId::new("A", 2), VariableId::new("B", 3), VariableId::new("C", 2)];
        let w: Vec<f64> = (1..=12).map(f64::from).collect();
        let p = JointPmf::from_weights(vars, w).unwrap();
        let m = p.marginalize(&["C", "A"]).unwrap();
        assert_eq!(m.variables()[0].name, "A");
        // Hand sums: A=0,C=0 -> 1+3+5 ; A=0,C=1 -> 2+4+6 ; A=1,C=0 -> 7+9+11 ; A=1,C=1 -> 8+10+12
        let expect = [9.0, 12.0, 27.0, 30.0].map(|v| v / 78.0);
        for (a, b) in m.mass().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // Idempotence.
        assert_eq!(m.marginalize(&["A", "C"]).unwrap(), m);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(JointPmf::new(vec![bit("X")], vec![0.7, 0.7]).is_err());
        assert!(JointPmf::new(vec![bit("X")], vec![1.5, -0.5]).is_err());
        assert!(JointPmf::new(vec![bit("X"), bit("X")], vec![0.25; 4]).is_err());
        let big: Vec<VariableId> = (0..25).map(|i| bit(&format!("b{i}"))).collect();
        assert!(matches!(JointPmf::uniform(big), Err(Error::TableTooLarge { .. })));
    }

    #[test]
    fn information_examples() {
        let x = JointPmf::uniform(vec![bit("X")]).unwrap();
        let xy = x.attach_function(bit("Y"), &["X"], |v| v[0]).unwrap();
        assert!((xy.mutual_information(&["X"], &["Y"]).unwrap() - 1.0).abs() < 1e-15);
        let ind = JointPmf::uniform(vec![bit("X"), bit("Y")]).unwrap();
        assert_eq!(ind.mutual_information(&["X"], &["Y"]).unwrap(), 0.0);
        assert!(matches!(
            ind.conditional_mutual_information(&["X"], &["X"], &[] as &[&str]),
            Err(Error::OverlappingSets(_))
        ));
    }

    #[test]
    fn channel_examples() {
        let x = JointPmf::uniform(vec![bit("X")]).unwrap();
        let bsc = x.attach_channel(bit("U"), &["X"], &[0.75, 0.25, 0.25, 0.75]).unwrap();
        let oracle = 1.0 - (-(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2()));
        assert!((bsc.mutual_information(&["X"], &["U"]).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 0.18872).abs() < 1e-5);
        let noise = x.attach_channel(bit("U"), &[] as &[&str], &[0.5, 0.5]).unwrap();
        assert_eq!(noise.mutual_information(&["X"], &["U"]).unwrap(), 0.0);
        assert!(x.attach_channel(bit("U"), &["X"], &[0.5, 0.6, 0.5, 0.5]).is_err());
        assert!(x.attach_channel(bit("U"), &["X"], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn markov_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = JointPmf::random(vec![bit("X"), bit("Y")], &mut rng, false).unwrap();
        let p = p.attach_function(bit("U"), &["X"], |v| v[0]).unwrap();
        assert!(p.is_markov_chain(&["U"], &["X"], &["Y"], 1e-12).unwrap());
        let q = JointPmf::uniform(vec![bit("A")]).unwrap();
        let q = q.attach_function(bit("C"), &["A"], |v| v[0]).unwrap();
        assert!(!q.is_markov_chain(&["A"], &[] as &[&str], &["C"], 1e-9).unwrap());
    }

    #[test]
    fn pair_message_carries_two_bits() {
        let xs: Vec<VariableId> = (1..=5).map(|i| bit(&format!("X{i}"))).collect();
        let p = JointPmf::uniform(xs).unwrap();
        let all = p.full_mask();
        let pair = p.mask(&["X1", "X2"]).unwrap();
        assert!((p.information(all, pair, 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_ties_go_low() {
        let p = JointPmf::uniform(vec![bit("X"), bit("Y")]).unwrap();
        let (d, map) = p.min_expected_distortion(1, 2, &hamming(2), 2).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(map, vec![0, 0]);
        let q = p.attach_function(bit("U"), &["X"], |v| v[0]).unwrap();
        let (d, map) = q.min_expected_distortion(1, 4, &hamming(2), 2).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(map, vec![0, 1]);
    }

    fn small_pmf() -> impl Strategy<Value = JointPmf> {
        (prop::collection::vec(1usize..=3, 3..=4), any::<u64>()).prop_map(|(sizes, seed)| {
            let vars = sizes
                .iter()
                .enumerate()
                .map(|(i, s)| VariableId::new(format!("V{i}"), *s))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            JointPmf::random(vars, &mut rng, seed % 2 == 0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn chain_rule(p in small_pmf()) {
            let (a, b, c) = (1u64, 2u64, 4u64);
            let lhs = p.information_raw(a | b, c, 0);
            let rhs = p.information_raw(a, c, 0) + p.information_raw(b, c, a);
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn information_is_nonnegative(p in small_pmf(), a in 1u64..16, b in 1u64..16, c in 0u64..16) {
            let (a, b, c) = (a & !c, b & !c & !a, c);
            prop_assert!(p.information_raw(a, b, c) >= -1e-10);
        }

        #[test]
        fn entropy_is_submodular(p in small_pmf(), a in 0u64..16, b in 0u64..16) {
            let lhs = p.entropy_mask(a) + p.entropy_mask(b);
            let rhs = p.entropy_mask(a & b) + p.entropy_mask(a | b);
            prop_assert!(lhs >= rhs - 1e-10);
        }

        #[test]
        fn data_processing(p in small_pmf(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = &p.variables()[0].name.clone();
            let n = p.variables()[0].alphabet_size;
            let kernel: Vec<f64> = (0..n).flat_map(|_| {
                let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                let t: f64 = w.iter().sum();
                w.into_iter().map(move |v| v / t)
            }).collect();
            let q = p.attach_channel(VariableId::new("W", 3), &[s.as_str()], &kernel).unwrap();
            let w = 1u64 << p.variables().len();
            let c = 0b110u64;
            prop_assert!(q.information(w, c, 0) <= q.information(1, c, 0) + 1e-10);
            prop_assert!(q.is_markov_chain(&["W"], &[s.as_str()], &["V1", "V2"], 1e-10).unwrap());
        }
    }
}
