//! Instance files: one JSON document with a `kind` tag.
//!
//! Decoders and bits are numbered from 1 in files; everything is 0-based
//! once loaded.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use rdlp::achievable::{
    DecoderSpec, Distortion, Message, MessageSchedule, ProblemInstance, ScheduledMessage, SourceModel,
};
use rdlp::converse::{
    ComponentDecoder, IndexCodingInstance, IndexDecoder, MinimaxAuxiliaries, RdOracle, RowFamily, SideInfoLattice,
};
use rdlp::gauss::{GaussianMessage, GaussianSystem};
use rdlp::instances::{Flavor, OddCycleSpec};
use rdlp::pmf::{JointPmf, VariableId};
use rdlp::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceFile {
    Discrete(DiscreteFile),
    Gaussian(GaussianFile),
    IndexCoding(IndexFile),
    OddCycle(OddCycleFile),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDecl {
    pub name: String,
    pub size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistortionDecl {
    Hamming,
    /// Row-major `d(x, x̂)`, one row per joint target value.
    Table { reconstructions: usize, d: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteDecoder {
    #[serde(default)]
    pub side_info: Vec<String>,
    #[serde(default)]
    pub target: Option<Vec<String>>,
    pub distortion: DistortionDecl,
    pub max_distortion: f64,
}

/// An auxiliary drawn through `kernel` from the variables in `given`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDecl {
    pub name: String,
    pub size: usize,
    pub given: Vec<String>,
    pub kernel: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteMessage {
    pub subset: Vec<usize>,
    pub message: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteMinimax {
    #[serde(default)]
    pub v: Vec<String>,
    pub u: Vec<Vec<String>>,
}

/// Grid-search settings for the lattice lower bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDecl {
    pub v_alphabet: usize,
    pub resolution: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteFile {
    pub variables: Vec<VariableDecl>,
    /// Row-major, last variable fastest.
    pub pmf: Vec<f64>,
    pub source: Vec<String>,
    pub decoders: Vec<DiscreteDecoder>,
    #[serde(default)]
    pub auxiliaries: Vec<ChannelDecl>,
    #[serde(default)]
    pub schedules: Vec<Vec<DiscreteMessage>>,
    #[serde(default)]
    pub minimax: Option<DiscreteMinimax>,
    #[serde(default)]
    pub grid: Option<GridDecl>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDecl {
    pub name: String,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianDecoder {
    #[serde(default)]
    pub side_info: Vec<String>,
    #[serde(default)]
    pub target: Option<Vec<String>>,
    /// One MSE target per target coordinate.
    pub max_distortion: Vec<f64>,
}

/// `U = A·source + N` with noise covariance `noise`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMessageDecl {
    pub name: String,
    pub source: Vec<String>,
    pub a: Vec<Vec<f64>>,
    pub noise: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianScheduled {
    pub subset: Vec<usize>,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMinimax {
    #[serde(default)]
    pub v: Option<String>,
    pub u: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFile {
    pub blocks: Vec<BlockDecl>,
    pub covariance: Vec<Vec<f64>>,
    pub source: Vec<String>,
    pub decoders: Vec<GaussianDecoder>,
    #[serde(default)]
    pub messages: Vec<GaussianMessageDecl>,
    #[serde(default)]
    pub schedules: Vec<Vec<GaussianScheduled>>,
    #[serde(default)]
    pub minimax: Option<GaussianMinimax>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexDecoderDecl {
    #[serde(default)]
    pub side_info: Vec<usize>,
    pub demand: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexFile {
    pub k: usize,
    pub decoders: Vec<IndexDecoderDecl>,
    /// Bit permutations (1-based images) that map the instance to itself.
    #[serde(default)]
    pub symmetry: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddCycleFile {
    pub m: usize,
    pub flavor: String,
    #[serde(rename = "D", default)]
    pub d: Option<f64>,
}

/// A validated instance, ready for the bound builders.
#[derive(Clone, Debug)]
pub enum Problem {
    General(General),
    Index(IndexCodingInstance),
    OddCycle(OddCycleSpec),
}

#[derive(Clone, Debug)]
pub struct General {
    pub instance: ProblemInstance,
    pub schedules: Vec<MessageSchedule>,
    pub minimax: Option<MinimaxAuxiliaries>,
    grid: Option<GridDecl>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInstance(msg.into())
}

fn zero_based(subset: &[usize], m: usize, what: &str) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(subset.len());
    for &i in subset {
        if i == 0 || i > m {
            return Err(invalid(format!("{what}: decoder {i} is outside 1..={m}")));
        }
        if out.contains(&(i - 1)) {
            return Err(invalid(format!("{what}: decoder {i} is listed twice")));
        }
        out.push(i - 1);
    }
    out.sort_unstable();
    Ok(out)
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(invalid(format!("{what}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn parse(text: &str) -> std::result::Result<InstanceFile, serde_json::Error> {
    serde_json::from_str(text)
}

impl InstanceFile {
    pub fn load(&self) -> Result<Problem> {
        match self {
            InstanceFile::Discrete(f) => f.load().map(Problem::General),
            InstanceFile::Gaussian(f) => f.load().map(Problem::General),
            InstanceFile::IndexCoding(f) => f.load().map(Problem::Index),
            InstanceFile::OddCycle(f) => f.load().map(Problem::OddCycle),
        }
    }
}

impl DiscreteFile {
    fn load(&self) -> Result<General> {
        let vars = self.variables.iter().map(|v| VariableId::new(v.name.clone(), v.size)).collect();
        let pmf = JointPmf::new(vars, self.pmf.clone())?;
        let decoders = self
            .decoders
            .iter()
            .map(|d| {
                let distortion = match &d.distortion {
                    DistortionDecl::Hamming => Distortion::Hamming,
                    DistortionDecl::Table { reconstructions, d } => {
                        Distortion::Table { reconstructions: *reconstructions, d: d.clone() }
                    }
                };
                DecoderSpec {
                    side_info: d.side_info.clone(),
                    target: d.target.clone(),
                    distortion,
                    max_distortion: vec![d.max_distortion],
                }
            })
            .collect();
        let instance =
            ProblemInstance::new(SourceModel::Discrete { pmf: pmf.clone(), source: self.source.clone() }, decoders)?;
        let mut joint = pmf;
        for a in &self.auxiliaries {
            joint = joint.attach_channel(VariableId::new(a.name.clone(), a.size), &a.given, &a.kernel)?;
        }
        let m = instance.m();
        let schedules = self
            .schedules
            .iter()
            .enumerate()
            .map(|(s, msgs)| {
                let messages = msgs
                    .iter()
                    .map(|msg| {
                        Ok(ScheduledMessage {
                            subset: zero_based(&msg.subset, m, &format!("schedule {}", s + 1))?,
                            message: Message::Discrete(msg.message.clone()),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(MessageSchedule::new(messages).with_joint(joint.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let minimax = match &self.minimax {
            None => None,
            Some(mm) => {
                if mm.u.len() != m {
                    return Err(invalid(format!("minimax: {} auxiliaries for {m} decoders", mm.u.len())));
                }
                Some(MinimaxAuxiliaries {
                    v: Message::Discrete(mm.v.clone()),
                    u: mm.u.iter().map(|u| Message::Discrete(u.clone())).collect(),
                    joint: Some(joint.clone()),
                })
            }
        };
        Ok(General { instance, schedules, minimax, grid: self.grid.clone() })
    }
}

impl GaussianFile {
    fn load(&self) -> Result<General> {
        let blocks: Vec<(&str, usize)> = self.blocks.iter().map(|b| (b.name.as_str(), b.dim)).collect();
        let system = GaussianSystem::new(&blocks, matrix(&self.covariance, "covariance")?)?;
        let decoders = self
            .decoders
            .iter()
            .map(|d| DecoderSpec {
                side_info: d.side_info.clone(),
                target: d.target.clone(),
                distortion: Distortion::Mse,
                max_distortion: d.max_distortion.clone(),
            })
            .collect();
        let instance = ProblemInstance::new(SourceModel::Gaussian { system, source: self.source.clone() }, decoders)?;
        let mut messages = Vec::new();
        for msg in &self.messages {
            if messages.iter().any(|g: &GaussianMessage| g.name == msg.name) {
                return Err(Error::DuplicateVariable(msg.name.clone()));
            }
            messages.push(GaussianMessage::new(
                msg.name.clone(),
                msg.source.clone(),
                matrix(&msg.a, &format!("message {}", msg.name))?,
                matrix(&msg.noise, &format!("message {} noise", msg.name))?,
            ));
        }
        let lookup = |name: &str| -> Result<Message> {
            messages
                .iter()
                .find(|g| g.name == name)
                .map(|g| Message::Gaussian(g.clone()))
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))
        };
        let m = instance.m();
        let schedules = self
            .schedules
            .iter()
            .enumerate()
            .map(|(s, msgs)| {
                msgs.iter()
                    .map(|msg| {
                        Ok(ScheduledMessage {
                            subset: zero_based(&msg.subset, m, &format!("schedule {}", s + 1))?,
                            message: lookup(&msg.message)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(MessageSchedule::new)
            })
            .collect::<Result<Vec<_>>>()?;
        let minimax = match &self.minimax {
            None => None,
            Some(mm) => {
                if mm.u.len() != m {
                    return Err(invalid(format!("minimax: {} auxiliaries for {m} decoders", mm.u.len())));
                }
                Some(MinimaxAuxiliaries {
                    v: match &mm.v {
                        Some(v) => lookup(v)?,
                        None => Message::Degenerate,
                    },
                    u: mm.u.iter().map(|u| lookup(u)).collect::<Result<_>>()?,
                    joint: None,
                })
            }
        };
        Ok(General { instance, schedules, minimax, grid: None })
    }
}

impl IndexFile {
    fn load(&self) -> Result<IndexCodingInstance> {
        let k = self.k;
        let bits = |list: &[usize]| -> Result<u64> {
            list.iter().try_fold(0u64, |acc, &b| {
                if b == 0 || b > k || b > 63 {
                    Err(invalid(format!("bit {b} is outside 1..={k}")))
                } else {
                    Ok(acc | 1 << (b - 1))
                }
            })
        };
        let decoders = self
            .decoders
            .iter()
            .map(|d| Ok(IndexDecoder { side_info: bits(&d.side_info)?, demand: bits(&d.demand)? }))
            .collect::<Result<Vec<_>>>()?;
        if decoders.iter().any(|d| d.demand == 0) {
            return Err(invalid("every decoder must demand at least one bit"));
        }
        let symmetry = self
            .symmetry
            .iter()
            .map(|g| {
                if g.len() != k || g.iter().any(|&b| b == 0 || b > k) {
                    return Err(invalid(format!("symmetry {g:?} is not a permutation of 1..={k}")));
                }
                Ok(g.iter().map(|b| b - 1).collect())
            })
            .collect::<Result<Vec<Vec<usize>>>>()?;
        IndexCodingInstance::new(k, decoders)?.with_symmetry(symmetry)
    }
}

impl OddCycleFile {
    fn load(&self) -> Result<OddCycleSpec> {
        odd_cycle_spec(self.m, &self.flavor, self.d)
    }
}

pub fn odd_cycle_spec(m: usize, flavor: &str, d: Option<f64>) -> Result<OddCycleSpec> {
    let flavor = Flavor::parse(flavor).ok_or_else(|| invalid(format!("unknown flavor `{flavor}`")))?;
    let spec = match (flavor, d) {
        (Flavor::BinaryIndex, _) => OddCycleSpec::binary(m),
        (Flavor::Gaussian, Some(d)) => OddCycleSpec::gaussian(m, d),
        (Flavor::Gaussian, None) => return Err(invalid("the gaussian flavor needs D")),
    };
    spec.validate()?;
    Ok(spec)
}

impl General {
    /// The side-information lattice over the source components and the
    /// rate oracle that fits the model, when the instance is separable
    /// enough for one.
    pub fn lattice(&self) -> Result<(SideInfoLattice, RdOracle)> {
        let inst = &self.instance;
        let source: &[String] = match &inst.model {
            SourceModel::Discrete { source, .. } | SourceModel::Gaussian { source, .. } => source,
        };
        let pos = |name: &String| source.iter().position(|s| s == name);
        let mask = |names: &[String], what: &str| -> Result<u64> {
            names.iter().try_fold(0u64, |acc, n| match pos(n) {
                Some(i) => Ok(acc | 1 << i),
                None => Err(invalid(format!("lattice bound: {what} `{n}` is not a source component"))),
            })
        };
        let full = (1u64 << source.len()) - 1;
        let mut decoders = Vec::new();
        match &inst.model {
            SourceModel::Discrete { pmf, .. } => {
                let grid = self
                    .grid
                    .as_ref()
                    .ok_or_else(|| invalid("lattice bound on a discrete instance needs a `grid` section"))?;
                for (l, d) in inst.decoders.iter().enumerate() {
                    if d.distortion != Distortion::Hamming {
                        return Err(invalid(format!("lattice bound: decoder {} must use Hamming distortion", l + 1)));
                    }
                    let demand = match &d.target {
                        Some(t) => mask(t, "target")?,
                        None => full,
                    };
                    decoders.push(ComponentDecoder {
                        side_info: mask(&d.side_info, "side information")?,
                        demand,
                        max_distortion: d.max_distortion[0],
                    });
                }
                let marginal = pmf.marginalize(source)?;
                let lattice = SideInfoLattice::all_subsets(source.to_vec(), decoders, RowFamily::Elemental)?;
                let oracle =
                    RdOracle::Exhaustive { pmf: marginal, v_alphabet: grid.v_alphabet, resolution: grid.resolution };
                Ok((lattice, oracle))
            }
            SourceModel::Gaussian { system, .. } => {
                let mut variance = Vec::new();
                let coords: Vec<usize> = source
                    .iter()
                    .map(|s| {
                        let c = system.coordinates(system.mask(&[s])?);
                        if c.len() != 1 {
                            return Err(invalid(format!("lattice bound: source block `{s}` is not scalar")));
                        }
                        Ok(c[0])
                    })
                    .collect::<Result<_>>()?;
                let sigma = system.sigma();
                for (i, &a) in coords.iter().enumerate() {
                    variance.push(sigma[(a, a)]);
                    if coords.iter().skip(i + 1).any(|&b| sigma[(a, b)] != 0.0) {
                        return Err(invalid("lattice bound: source components must be independent"));
                    }
                }
                for d in &inst.decoders {
                    let side_info = mask(&d.side_info, "side information")?;
                    let target = d.target.clone().unwrap_or_else(|| source.to_vec());
                    // One component decoder per demanded coordinate.
                    for (t, &dist) in target.iter().zip(&d.max_distortion) {
                        decoders.push(ComponentDecoder {
                            side_info,
                            demand: mask(std::slice::from_ref(t), "target")?,
                            max_distortion: dist,
                        });
                    }
                }
                let lattice = SideInfoLattice::all_subsets(source.to_vec(), decoders, RowFamily::Elemental)?;
                Ok((lattice, RdOracle::SeparableGaussian { variance }))
            }
        }
    }
}

/// Schedules named in the file, checked for presence.
pub fn require_schedules(g: &General) -> Result<&[MessageSchedule]> {
    if g.schedules.is_empty() {
        return Err(Error::InvalidSchedule("the instance lists no schedules".into()));
    }
    Ok(&g.schedules)
}
