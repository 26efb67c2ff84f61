//! Random parametrizations and training sets with a known zero-MSE minimum.
//!
//! A problem is produced by drawing generating weights `w0`, drawing random
//! inputs `U`, and taking the network's own outputs `Y = f(U, w0)` as targets.
//! The generating network therefore fits its training set exactly.
//!
//! # Random numbers
//!
//! All draws use ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64`. Weights come from stream 0 of the seed and inputs from
//! stream 1, so both are reproducible on every platform. Independent sub-seeds
//! are derived with [`derive_seed`] (the SplitMix64 finalizer).

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{self, ArchitectureSpec, Dataset, ParameterVector};

/// Saturation factor used when a configuration does not set one.
pub const DEFAULT_SATURATION_FACTOR: f64 = 1.35;

const WEIGHT_STREAM: u64 = 0;
const INPUT_STREAM: u64 = 1;

/// Mixes `seed` with `label` into an unrelated 64-bit seed.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Half-width of the uniform interval for a layer with `fan_in` inputs.
pub fn init_bound(saturation_factor: f64, fan_in: usize) -> f64 {
    saturation_factor / ((fan_in + 1) as f64).sqrt()
}

/// Draws every weight and bias uniformly from the open interval
/// `(-w_f / sqrt(n + 1), w_f / sqrt(n + 1))`, `n` being the layer's fan-in.
pub fn init_weights(arch: &ArchitectureSpec, seed: u64) -> ParameterVector {
    let mut rng = rng_for(seed, WEIGHT_STREAM);
    let mut values = Vec::with_capacity(arch.param_count());
    for shape in arch.layer_shapes() {
        let a = init_bound(arch.saturation_factor, shape.fan_in);
        for _ in 0..shape.param_count() {
            values.push(open_uniform(&mut rng, a));
        }
    }
    ParameterVector::from_values(arch, values).expect("layout built from the same spec")
}

fn open_uniform<R: Rng>(rng: &mut R, a: f64) -> f64 {
    loop {
        let u: f64 = rng.random();
        let v = a * (2.0 * u - 1.0);
        if v > -a && v < a {
            return v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputDistribution {
    #[default]
    StandardNormal,
    UniformPm1,
}

impl fmt::Display for InputDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::StandardNormal => "normal",
            Self::UniformPm1 => "uniform",
        })
    }
}

impl FromStr for InputDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "standard_normal" => Ok(Self::StandardNormal),
            "uniform" | "uniform_pm1" => Ok(Self::UniformPm1),
            other => Err(Error::InvalidConfig(format!(
                "unknown input distribution `{other}` (expected normal or uniform)"
            ))),
        }
    }
}

/// A generated training set bundled with the parameters that fit it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub arch: ArchitectureSpec,
    pub dataset: Dataset,
    pub generating_params: ParameterVector,
    pub seed: u64,
    pub input_distribution: InputDistribution,
}

pub fn generate_problem(
    arch: &ArchitectureSpec,
    n_samples: usize,
    input_distribution: InputDistribution,
    seed: u64,
) -> Result<Problem> {
    arch.validate()?;
    if n_samples == 0 {
        return Err(Error::DatasetShape("n_samples must be at least 1".into()));
    }
    let generating_params = init_weights(arch, seed);
    let mut rng = rng_for(seed, INPUT_STREAM);
    let inputs = match input_distribution {
        InputDistribution::StandardNormal => {
            Array2::from_shape_simple_fn((n_samples, arch.input_dim), || {
                rng.sample::<f64, _>(StandardNormal)
            })
        }
        InputDistribution::UniformPm1 => {
            Array2::from_shape_simple_fn((n_samples, arch.input_dim), || {
                rng.random_range(-1.0..1.0)
            })
        }
    };
    let targets = netcore::forward(arch, &generating_params, inputs.view())?;
    Ok(Problem {
        arch: arch.clone(),
        dataset: Dataset::new(inputs, targets)?,
        generating_params,
        seed,
        input_distribution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeClass {
    A,
    B,
    C,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::A, SizeClass::B, SizeClass::C];
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for SizeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            "C" | "c" => Ok(Self::C),
            other => Err(Error::UnknownSizeClass(other.to_string())),
        }
    }
}

/// One network shape of a size class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub hidden_count: usize,
    pub hidden_width: usize,
}

/// Input/output dimensions, training-set size and network variants of a size class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeClassSpec {
    pub name: SizeClass,
    pub input_dim: usize,
    pub output_dim: usize,
    pub data_size: usize,
    /// Shallow variant first, then the deep ones by increasing depth.
    pub variants: Vec<Variant>,
}

pub fn build_size_class(name: SizeClass) -> SizeClassSpec {
    let (input_dim, output_dim, data_size, widths) = match name {
        SizeClass::A => (100, 50, 80, [20, 16, 14]),
        SizeClass::B => (300, 150, 240, [60, 49, 43]),
        SizeClass::C => (1000, 500, 800, [200, 164, 144]),
    };
    SizeClassSpec {
        name,
        input_dim,
        output_dim,
        data_size,
        variants: [1, 3, 5]
            .into_iter()
            .zip(widths)
            .map(|(hidden_count, hidden_width)| Variant {
                hidden_count,
                hidden_width,
            })
            .collect(),
    }
}

/// Looks a size class up by name (`"A"`, `"B"` or `"C"`).
pub fn size_class_by_name(name: &str) -> Result<SizeClassSpec> {
    Ok(build_size_class(name.parse()?))
}

impl SizeClassSpec {
    pub fn constraint_count(&self) -> usize {
        self.data_size * self.output_dim
    }

    pub fn shallow(&self) -> Variant {
        self.variants[0]
    }

    pub fn deep(&self) -> &[Variant] {
        &self.variants[1..]
    }

    pub fn variant(&self, hidden_count: usize) -> Option<Variant> {
        self.variants
            .iter()
            .copied()
            .find(|v| v.hidden_count == hidden_count)
    }

    pub fn arch(&self, variant: Variant, saturation_factor: f64) -> ArchitectureSpec {
        ArchitectureSpec {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            hidden_count: variant.hidden_count,
            hidden_width: variant.hidden_width,
            saturation_factor,
            output_activation: Default::default(),
        }
    }

    /// Name such as `A_3`.
    pub fn variant_name(&self, variant: Variant) -> String {
        format!("{}_{}", self.name, variant.hidden_count)
    }

    /// Resolves a variant name such as `B_5`.
    pub fn variant_by_name(&self, name: &str) -> Result<Variant> {
        let (class, depth) = name
            .split_once('_')
            .ok_or_else(|| Error::UnknownVariant(name.to_string()))?;
        let class: SizeClass = class.parse()?;
        let depth: usize = depth
            .parse()
            .map_err(|_| Error::UnknownVariant(name.to_string()))?;
        if class != self.name {
            return Err(Error::UnknownVariant(name.to_string()));
        }
        self.variant(depth)
            .ok_or_else(|| Error::UnknownVariant(name.to_string()))
    }
}

/// Parses a variant name such as `A_3` into its size class and variant.
pub fn parse_variant_name(name: &str) -> Result<(SizeClassSpec, Variant)> {
    let class = name
        .split_once('_')
        .map(|(c, _)| c)
        .ok_or_else(|| Error::UnknownVariant(name.to_string()))?;
    let spec = size_class_by_name(class)?;
    let variant = spec.variant_by_name(name)?;
    Ok((spec, variant))
}

/// Version written into problem files.
pub const PROBLEM_FORMAT_VERSION: u32 = 1;
const PROBLEM_FORMAT_NAME: &str = "repcap-problem";

#[derive(Debug, Serialize, Deserialize)]
struct ProblemFile {
    format: String,
    version: u32,
    arch: ArchitectureSpec,
    seed: u64,
    n_samples: usize,
    input_distribution: InputDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arrays: Option<ProblemArrays>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProblemArrays {
    /// Row-major `n_samples x input_dim`.
    inputs: Vec<f64>,
    /// Row-major `n_samples x output_dim`.
    targets: Vec<f64>,
    generating_params: Vec<f64>,
}

impl Problem {
    pub fn n_samples(&self) -> usize {
        self.dataset.n_samples()
    }

    /// Writes the problem as a JSON document. Without arrays only the recipe
    /// (spec, seed, size, input distribution) is stored.
    pub fn write_to<W: Write>(&self, writer: W, include_arrays: bool) -> Result<()> {
        let arrays = include_arrays.then(|| ProblemArrays {
            inputs: self.dataset.inputs().iter().copied().collect(),
            targets: self.dataset.targets().iter().copied().collect(),
            generating_params: self.generating_params.values().to_vec(),
        });
        let file = ProblemFile {
            format: PROBLEM_FORMAT_NAME.to_string(),
            version: PROBLEM_FORMAT_VERSION,
            arch: self.arch.clone(),
            seed: self.seed,
            n_samples: self.n_samples(),
            input_distribution: self.input_distribution,
            arrays,
        };
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Problem> {
        let file: ProblemFile = serde_json::from_reader(reader)?;
        if file.format != PROBLEM_FORMAT_NAME {
            return Err(Error::Corrupt(format!(
                "not a problem file (format `{}`)",
                file.format
            )));
        }
        if file.version != PROBLEM_FORMAT_VERSION {
            return Err(Error::Version {
                found: file.version,
                supported: PROBLEM_FORMAT_VERSION,
            });
        }
        let Some(arrays) = file.arrays else {
            return generate_problem(&file.arch, file.n_samples, file.input_distribution, file.seed);
        };
        let shape_err = |what: &str| Error::Corrupt(format!("{what} array has the wrong length"));
        let inputs = Array2::from_shape_vec((file.n_samples, file.arch.input_dim), arrays.inputs)
            .map_err(|_| shape_err("inputs"))?;
        let targets = Array2::from_shape_vec((file.n_samples, file.arch.output_dim), arrays.targets)
            .map_err(|_| shape_err("targets"))?;
        let generating_params = ParameterVector::from_values(&file.arch, arrays.generating_params)?;
        Ok(Problem {
            dataset: Dataset::new(inputs, targets)?,
            arch: file.arch,
            generating_params,
            seed: file.seed,
            input_distribution: file.input_distribution,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>, include_arrays: bool) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w, include_arrays)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Problem> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
