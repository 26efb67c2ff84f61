//! Fully connected networks over a flat parameter vector.
//!
//! # Parameter layout
//!
//! Parameters are stored layer-major. For each layer, in order from the input
//! side, the weight matrix comes first and the bias vector second. A weight
//! matrix of a layer with `fan_in` inputs and `fan_out` units has shape
//! `(fan_in, fan_out)` and is stored row-major, so the weight connecting input
//! `i` to unit `j` lives at `offset + i * fan_out + j`. The bias of unit `j`
//! follows at `offset + fan_in * fan_out + j`.
//!
//! Hidden layers apply the rescaled symmetric sigmoid [`activation`]; the output
//! layer is affine unless [`OutputActivation::Sigmoid`] is selected.

use std::ops::Deref;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonlinearity applied by the output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    #[default]
    Linear,
    Sigmoid,
}

/// Geometry of one network plus the weight-scale factor used to draw its
/// random parametrizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_count: usize,
    pub hidden_width: usize,
    pub saturation_factor: f64,
    #[serde(default)]
    pub output_activation: OutputActivation,
}

/// Fan-in and fan-out of one affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.fan_in * self.fan_out
    }

    pub fn param_count(&self) -> usize {
        (self.fan_in + 1) * self.fan_out
    }
}

impl ArchitectureSpec {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        hidden_count: usize,
        hidden_width: usize,
        saturation_factor: f64,
    ) -> Result<Self> {
        let spec = Self {
            input_dim,
            output_dim,
            hidden_count,
            hidden_width,
            saturation_factor,
            output_activation: OutputActivation::Linear,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_output_activation(mut self, output_activation: OutputActivation) -> Self {
        self.output_activation = output_activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_width == 0 {
            return Err(Error::InvalidArchitecture(format!(
                "dimensions must be positive (input {}, output {}, hidden width {})",
                self.input_dim, self.output_dim, self.hidden_width
            )));
        }
        if !(self.saturation_factor.is_finite() && self.saturation_factor > 0.0) {
            return Err(Error::InvalidArchitecture(format!(
                "saturation factor must be finite and > 0, got {}",
                self.saturation_factor
            )));
        }
        Ok(())
    }

    /// Shapes of all affine layers, input side first.
    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let mut widths = Vec::with_capacity(self.hidden_count + 2);
        widths.push(self.input_dim);
        widths.extend(std::iter::repeat_n(self.hidden_width, self.hidden_count));
        widths.push(self.output_dim);
        widths
            .windows(2)
            .map(|w| LayerShape {
                fan_in: w[0],
                fan_out: w[1],
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(LayerShape::param_count).sum()
    }

    /// True when both specs map the same input space to the same output space.
    pub fn same_io(&self, other: &ArchitectureSpec) -> bool {
        self.input_dim == other.input_dim && self.output_dim == other.output_dim
    }

    /// Short human-readable geometry, e.g. `100-20-50` or `100-16x3-50`.
    pub fn describe(&self) -> String {
        match self.hidden_count {
            0 => format!("{}-{}", self.input_dim, self.output_dim),
            1 => format!("{}-{}-{}", self.input_dim, self.hidden_width, self.output_dim),
            n => format!(
                "{}-{}x{}-{}",
                self.input_dim, self.hidden_width, n, self.output_dim
            ),
        }
    }
}

/// Total number of weights and biases of `arch`.
pub fn param_count(arch: &ArchitectureSpec) -> usize {
    arch.param_count()
}

/// Symmetric sigmoid `2 / (1 + exp(-2x)) - 1`, rescaled to unit slope at zero.
///
/// Evaluated as `(1 - e) / (1 + e)` with `e = exp(-2|x|)` and the sign restored
/// afterwards, which is the same expression without the cancellation near zero
/// and without overflow for large `|x|`.
#[inline]
pub fn activation(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    let y = -(-2.0 * x.abs()).exp_m1() / (1.0 + e);
    if x < 0.0 {
        -y
    } else {
        y
    }
}

/// Derivative of [`activation`] expressed through its output value.
#[inline]
pub fn activation_derivative_from_output(y: f64) -> f64 {
    1.0 - y * y
}

/// All weights and biases of one network as a flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
    layout: Vec<LayerShape>,
}

impl ParameterVector {
    pub fn from_values(arch: &ArchitectureSpec, values: Vec<f64>) -> Result<Self> {
        let layout = arch.layer_shapes();
        let expected: usize = layout.iter().map(LayerShape::param_count).sum();
        if values.len() != expected {
            return Err(Error::ParameterLength {
                expected,
                actual: values.len(),
            });
        }
        Ok(Self { values, layout })
    }

    pub fn zeros(arch: &ArchitectureSpec) -> Self {
        let layout = arch.layer_shapes();
        let n = layout.iter().map(LayerShape::param_count).sum();
        Self {
            values: vec![0.0; n],
            layout,
        }
    }

    pub fn layout(&self) -> &[LayerShape] {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Copies the flat vector into one owned weight matrix and bias per layer.
    pub fn unflatten(&self) -> Vec<DenseLayer> {
        let mut offset = 0;
        self.layout
            .iter()
            .map(|shape| {
                let (w, b) = layer_view(&self.values, offset, *shape);
                offset += shape.param_count();
                DenseLayer {
                    weights: w.to_owned(),
                    bias: b.to_owned(),
                }
            })
            .collect()
    }
}

impl Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl AsRef<[f64]> for ParameterVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Structured parameters of one affine layer; `weights` is `(fan_in, fan_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn shape(&self) -> LayerShape {
        LayerShape {
            fan_in: self.weights.nrows(),
            fan_out: self.weights.ncols(),
        }
    }
}

/// Packs structured layers into the documented flat layout.
pub fn flatten(layers: &[DenseLayer]) -> Result<ParameterVector> {
    let mut values = Vec::new();
    let mut layout = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter().enumerate() {
        let shape = layer.shape();
        if layer.bias.len() != shape.fan_out {
            return Err(Error::LayerDimension {
                layer: i,
                expected: shape.fan_out,
                actual: layer.bias.len(),
            });
        }
        if let Some(prev) = layout.last().map(|s: &LayerShape| s.fan_out) {
            if prev != shape.fan_in {
                return Err(Error::LayerDimension {
                    layer: i,
                    expected: prev,
                    actual: shape.fan_in,
                });
            }
        }
        values.extend(layer.weights.iter().copied());
        values.extend(layer.bias.iter().copied());
        layout.push(shape);
    }
    Ok(ParameterVector { values, layout })
}

/// Rebuilds structured layers from a flat vector laid out for `arch`.
pub fn unflatten(values: &[f64], arch: &ArchitectureSpec) -> Result<Vec<DenseLayer>> {
    Ok(ParameterVector::from_values(arch, values.to_vec())?.unflatten())
}

fn layer_view(params: &[f64], offset: usize, shape: LayerShape) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
    let wl = shape.weight_len();
    let w = ArrayView2::from_shape((shape.fan_in, shape.fan_out), &params[offset..offset + wl])
        .expect("weight block matches layer shape");
    let b = ArrayView1::from(&params[offset + wl..offset + wl + shape.fan_out]);
    (w, b)
}

fn layer_view_mut(
    params: &mut [f64],
    offset: usize,
    shape: LayerShape,
) -> (ArrayViewMut2<'_, f64>, ArrayViewMut1<'_, f64>) {
    let wl = shape.weight_len();
    let (w, rest) = params[offset..offset + shape.param_count()].split_at_mut(wl);
    let w = ArrayViewMut2::from_shape((shape.fan_in, shape.fan_out), w)
        .expect("weight block matches layer shape");
    (w, ArrayViewMut1::from(rest))
}

/// Training inputs and targets, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Array2<f64>,
    targets: Array2<f64>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, targets: Array2<f64>) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(Error::DatasetShape("dataset has no samples".into()));
        }
        if inputs.nrows() != targets.nrows() {
            return Err(Error::DatasetShape(format!(
                "inputs have {} rows but targets have {}",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        Ok(Self {
            inputs: inputs.as_standard_layout().into_owned(),
            targets: targets.as_standard_layout().into_owned(),
        })
    }

    pub fn inputs(&self) -> ArrayView2<'_, f64> {
        self.inputs.view()
    }

    pub fn targets(&self) -> ArrayView2<'_, f64> {
        self.targets.view()
    }

    pub fn n_samples(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.ncols()
    }

    /// Number of scalar equations the targets impose.
    pub fn constraint_count(&self) -> usize {
        self.targets.len()
    }

    /// Returns a copy with rows reordered; `order[k]` is the source row of row `k`.
    pub fn select_rows(&self, order: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select(Axis(0), order),
            targets: self.targets.select(Axis(0), order),
        }
    }
}

/// How squared residuals are combined into one objective value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Mean over every residual component.
    #[default]
    Mean,
    /// Plain sum of squared residuals.
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub objective: f64,
    pub gradient: Option<Vec<f64>>,
}

fn check_params(arch: &ArchitectureSpec, params: &[f64]) -> Result<Vec<LayerShape>> {
    arch.validate()?;
    let shapes = arch.layer_shapes();
    let expected: usize = shapes.iter().map(LayerShape::param_count).sum();
    if params.len() != expected {
        return Err(Error::ParameterLength {
            expected,
            actual: params.len(),
        });
    }
    Ok(shapes)
}

fn check_dataset(arch: &ArchitectureSpec, data: &Dataset) -> Result<()> {
    if data.input_dim() != arch.input_dim {
        return Err(Error::LayerDimension {
            layer: 0,
            expected: arch.input_dim,
            actual: data.input_dim(),
        });
    }
    if data.output_dim() != arch.output_dim {
        return Err(Error::DatasetShape(format!(
            "targets have {} columns, network {} produces {}",
            data.output_dim(),
            arch.describe(),
            arch.output_dim
        )));
    }
    Ok(())
}

/// Runs the network and keeps every hidden activation (needed by backprop).
fn forward_pass(
    arch: &ArchitectureSpec,
    shapes: &[LayerShape],
    params: &[f64],
    inputs: ArrayView2<'_, f64>,
) -> (Vec<Array2<f64>>, Array2<f64>) {
    let last = shapes.len() - 1;
    let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(last);
    let mut offset = 0;
    let mut output = None;
    for (l, shape) in shapes.iter().enumerate() {
        let (w, b) = layer_view(params, offset, *shape);
        offset += shape.param_count();
        let input = if l == 0 { inputs } else { hidden[l - 1].view() };
        let mut z = input.dot(&w);
        z += &b;
        if l < last {
            z.mapv_inplace(activation);
            hidden.push(z);
        } else {
            if arch.output_activation == OutputActivation::Sigmoid {
                z.mapv_inplace(activation);
            }
            output = Some(z);
        }
    }
    (hidden, output.expect("at least one layer"))
}

/// Network outputs for every row of `inputs`.
pub fn forward(
    arch: &ArchitectureSpec,
    params: &[f64],
    inputs: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let shapes = check_params(arch, params)?;
    if inputs.ncols() != arch.input_dim {
        return Err(Error::LayerDimension {
            layer: 0,
            expected: arch.input_dim,
            actual: inputs.ncols(),
        });
    }
    Ok(forward_pass(arch, &shapes, params, inputs).1)
}

/// Objective value and, when `grad` is given, its exact gradient written into `grad`.
pub fn evaluate(
    arch: &ArchitectureSpec,
    params: &[f64],
    data: &Dataset,
    reduction: Reduction,
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    let shapes = check_params(arch, params)?;
    check_dataset(arch, data)?;
    if let Some(g) = &grad {
        if g.len() != params.len() {
            return Err(Error::ParameterLength {
                expected: params.len(),
                actual: g.len(),
            });
        }
    }

    let (hidden, output) = forward_pass(arch, &shapes, params, data.inputs());
    let residual = &output - &data.targets();
    let scale = match reduction {
        Reduction::Mean => residual.len() as f64,
        Reduction::Sum => 1.0,
    };
    let value = residual.iter().map(|r| r * r).sum::<f64>() / scale;

    let Some(grad) = grad else {
        return Ok(value);
    };

    // d(value)/d(output), then back through the output nonlinearity if any
    let mut delta = residual;
    delta *= 2.0 / scale;
    if arch.output_activation == OutputActivation::Sigmoid {
        delta.zip_mut_with(&output, |d, &y| *d *= activation_derivative_from_output(y));
    }

    let offsets: Vec<usize> = shapes
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s.param_count();
            Some(o)
        })
        .collect();

    for l in (0..shapes.len()).rev() {
        let shape = shapes[l];
        let input = if l == 0 {
            data.inputs()
        } else {
            hidden[l - 1].view()
        };
        {
            let (mut gw, mut gb) = layer_view_mut(grad, offsets[l], shape);
            general_mat_mul(1.0, &input.t(), &delta, 0.0, &mut gw);
            gb.assign(&delta.sum_axis(Axis(0)));
        }
        if l > 0 {
            let (w, _) = layer_view(params, offsets[l], shape);
            let mut next = delta.dot(&w.t());
            next.zip_mut_with(&hidden[l - 1], |d, &a| {
                *d *= activation_derivative_from_output(a)
            });
            delta = next;
        }
    }
    Ok(value)
}

/// Mean squared error over all residual components.
pub fn objective(arch: &ArchitectureSpec, params: &[f64], data: &Dataset) -> Result<EvalResult> {
    Ok(EvalResult {
        objective: evaluate(arch, params, data, Reduction::Mean, None)?,
        gradient: None,
    })
}

/// Mean squared error together with its gradient in the flat layout.
pub fn gradient(arch: &ArchitectureSpec, params: &[f64], data: &Dataset) -> Result<EvalResult> {
    let mut g = vec![0.0; params.len()];
    let objective = evaluate(arch, params, data, Reduction::Mean, Some(&mut g))?;
    Ok(EvalResult {
        objective,
        gradient: Some(g),
    })
}
