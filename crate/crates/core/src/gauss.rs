//! Jointly Gaussian vectors described by a block covariance matrix.
//!
//! Messages are always linear observations of existing blocks plus
//! independent noise, so the Markov structure `U ↔ X ↔ Y` holds by
//! construction.

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
/// Added to a singular conditioning block before giving up.
pub const RIDGE: f64 = 1e-12;
/// Smallest pivot accepted by the `LDLᵀ` log-determinant.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub name: String,
    pub dim: usize,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSystem {
    blocks: Vec<Block>,
    sigma: DMatrix<f64>,
}

/// `U = A·(source blocks) + N`, with `N` independent of everything else.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMessage {
    pub name: String,
    pub source: Vec<String>,
    pub a: DMatrix<f64>,
    pub noise: DMatrix<f64>,
}

impl GaussianMessage {
    pub fn new(
        name: impl Into<String>,
        source: Vec<String>,
        a: DMatrix<f64>,
        noise: DMatrix<f64>,
    ) -> Self {
        GaussianMessage { name: name.into(), source, a, noise }
    }
}

fn check_symmetric_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{what} is {}×{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPsd(format!("{what} has non-finite entries")));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::NotPsd(format!("{what} is not symmetric at ({i},{j})")));
            }
        }
    }
    if n > 0 {
        let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
        if min < -PSD_TOL {
            return Err(Error::NotPsd(format!("{what} has eigenvalue {min:.3e}")));
        }
    }
    Ok(())
}

/// `log2 det` of a symmetric positive-definite matrix via `LDLᵀ`.
pub fn log2_det(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0; n];
    let mut total = 0.0;
    for j in 0..n {
        let mut dj = m[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if dj <= PIVOT_TOL {
            return Err(Error::NotPsd(format!(
                "pivot {dj:.3e} at position {j} is not positive (infinite information?)"
            )));
        }
        d[j] = dj;
        total += dj.log2();
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    Ok(total)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

impl GaussianSystem {
    /// `blocks` are `(name, dimension)` pairs laid out in order.
    pub fn new(blocks: &[(&str, usize)], sigma: DMatrix<f64>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut offset = 0;
        for (name, dim) in blocks {
            if *dim == 0 {
                return Err(Error::Dimension(format!("block `{name}` has dimension 0")));
            }
            if !seen.insert(*name) {
                return Err(Error::DuplicateVariable(name.to_string()));
            }
            out.push(Block { name: name.to_string(), dim: *dim, offset });
            offset += dim;
        }
        if out.len() > 64 {
            return Err(Error::Dimension("at most 64 blocks".into()));
        }
        if sigma.nrows() != offset || sigma.ncols() != offset {
            return Err(Error::Dimension(format!(
                "covariance is {}×{}, blocks need {offset}×{offset}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        check_symmetric_psd(&sigma, "covariance")?;
        Ok(GaussianSystem { blocks: out, sigma })
    }

    /// Independent scalar blocks with the given variances.
    pub fn independent_scalars(names: &[&str], variances: &[f64]) -> Result<Self> {
        if names.len() != variances.len() {
            return Err(Error::Dimension("one variance per block".into()));
        }
        let blocks: Vec<(&str, usize)> = names.iter().map(|n| (*n, 1)).collect();
        Self::new(&blocks, DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(variances)))
    }

    /// A random system with a full-rank covariance `G Gᵀ + δI`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> Result<Self> {
        let n: usize = dims.iter().sum();
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut sigma = &g * g.transpose() + DMatrix::identity(n, n) * 0.05;
        symmetrize(&mut sigma);
        let names: Vec<String> = (0..dims.len()).map(|i| format!("B{i}")).collect();
        let blocks: Vec<(&str, usize)> =
            names.iter().map(String::as_str).zip(dims.iter().copied()).collect();
        Self::new(&blocks, sigma)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn mask<S: AsRef<str>>(&self, names: &[S]) -> Result<u64> {
        let mut m = 0u64;
        for n in names {
            m |= 1 << self.index_of(n.as_ref())?;
        }
        Ok(m)
    }

    /// Scalar coordinates of the blocks in `mask`.
    pub fn coordinates(&self, mask: u64) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .flat_map(|(_, b)| b.offset..b.offset + b.dim)
            .collect()
    }

    fn sub(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.sigma[(rows[i], cols[j])])
    }

    /// Adds a message block.
    pub fn with_message(&self, msg: &GaussianMessage) -> Result<GaussianSystem> {
        let src = self.coordinates(self.mask(&msg.source)?);
        if msg.a.ncols() != src.len() {
            return Err(Error::Dimension(format!(
                "message `{}` observes {} coordinates but A has {} columns",
                msg.name,
                src.len(),
                msg.a.ncols()
            )));
        }
        let k = msg.a.nrows();
        if k == 0 || msg.noise.nrows() != k {
            return Err(Error::Dimension(format!(
                "message `{}` noise must be {k}×{k}",
                msg.name
            )));
        }
        check_symmetric_psd(&msg.noise, &format!("noise of `{}`", msg.name))?;
        let n = self.sigma.nrows();
        let all: Vec<usize> = (0..n).collect();
        let cross = &msg.a * self.sub(&src, &all); // k × n
        let mut own = &msg.a * self.sub(&src, &src) * msg.a.transpose() + &msg.noise;
        symmetrize(&mut own);
        let mut sigma = DMatrix::zeros(n + k, n + k);
        sigma.view_mut((0, 0), (n, n)).copy_from(&self.sigma);
        sigma.view_mut((n, 0), (k, n)).copy_from(&cross);
        sigma.view_mut((0, n), (n, k)).copy_from(&cross.transpose());
        sigma.view_mut((n, n), (k, k)).copy_from(&own);
        let mut blocks: Vec<(&str, usize)> =
            self.blocks.iter().map(|b| (b.name.as_str(), b.dim)).collect();
        blocks.push((&msg.name, k));
        GaussianSystem::new(&blocks, sigma)
    }

    /// `K_{T|G}` for block masks.
    pub fn conditional_covariance_mask(&self, target: u64, given: u64) -> Result<DMatrix<f64>> {
        if target & given != 0 {
            return Err(Error::OverlappingSets(self.names(target & given)));
        }
        let t = self.coordinates(target);
        let g = self.coordinates(given);
        let stt = self.sub(&t, &t);
        if g.is_empty() {
            return Ok(stt);
        }
        let sgg = self.sub(&g, &g);
        let stg = self.sub(&t, &g);
        let chol = sgg.clone().cholesky().or_else(|| {
            let n = sgg.nrows();
            (sgg.clone() + DMatrix::<f64>::identity(n, n) * RIDGE).cholesky()
        });
        let Some(chol) = chol else {
            let eig = SymmetricEigen::new(sgg).eigenvalues;
            let condition = eig.max().abs() / eig.min().abs().max(f64::MIN_POSITIVE);
            return Err(Error::SingularConditioning { condition });
        };
        let solved = chol.solve(&stg.transpose());
        let mut k = stt - stg * solved;
        symmetrize(&mut k);
        Ok(k)
    }

    pub fn conditional_covariance<S: AsRef<str>>(&self, target: &[S], given: &[S]) -> Result<DMatrix<f64>> {
        self.conditional_covariance_mask(self.mask(target)?, self.mask(given)?)
    }

    fn names(&self, mask: u64) -> String {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, b)| b.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// `I(A;B|C)` in bits for block masks. Overlap with `C` is ignored;
    /// `A` and `B` sharing a block outside `C` is an error (the value would
    /// be infinite for a nondegenerate block).
    pub fn information(&self, a: u64, b: u64, c: u64) -> Result<f64> {
        let (a, b) = (a & !c, b & !c);
        if a & b != 0 {
            return Err(Error::OverlappingSets(self.names(a & b)));
        }
        if a == 0 || b == 0 {
            return Ok(0.0);
        }
        let k1 = self.conditional_covariance_mask(a, c)?;
        let k2 = self.conditional_covariance_mask(a, b | c)?;
        let v = 0.5 * (log2_det(&k1)? - log2_det(&k2)?);
        Ok(v.max(0.0))
    }

    pub fn gaussian_mutual_information<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S]) -> Result<f64> {
        let (ma, mb, mc) = (self.mask(a)?, self.mask(b)?, self.mask(c)?);
        let clash = (ma & mb) | (ma & mc) | (mb & mc);
        if clash != 0 {
            return Err(Error::OverlappingSets(self.names(clash)));
        }
        self.information(ma, mb, mc)
    }

    /// Whether every diagonal entry of `K_{source|observed}` is within `d`
    /// (componentwise, `+1e-9`). Observed source blocks have zero error.
    pub fn mse_feasible_mask(&self, source: u64, observed: u64, d: &[f64]) -> Result<bool> {
        let coords = self.coordinates(source);
        if d.len() != coords.len() {
            return Err(Error::Dimension(format!(
                "distortion vector has {} entries for {} source coordinates",
                d.len(),
                coords.len()
            )));
        }
        let hidden = source & !observed;
        if hidden == 0 {
            return Ok(true);
        }
        let k = self.conditional_covariance_mask(hidden, observed & !source)?;
        let hidden_coords = self.coordinates(hidden);
        Ok(hidden_coords.iter().enumerate().all(|(i, c)| {
            let slot = coords.iter().position(|x| x == c).expect("hidden ⊆ source");
            k[(i, i)] <= d[slot] + 1e-9
        }))
    }

    pub fn mse_feasible<S: AsRef<str>>(
        &self,
        source: &[S],
        decoder_messages: &[S],
        side_info: &[S],
        d: &[f64],
    ) -> Result<bool> {
        if d.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Dimension("distortion targets must be positive".into()));
        }
        let obs = self.mask(decoder_messages)? | self.mask(side_info)?;
        self.mse_feasible_mask(self.mask(source)?, obs, d)
    }
}
