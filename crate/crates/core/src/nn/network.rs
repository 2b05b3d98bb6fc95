use std::collections::BTreeMap;

use super::ops;
use super::{Tensor, WeightFile, WeightTensor};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    /// Weights `(out, in, k, k)`, bias `(out)`.
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    /// Weights `(c, k, k)`, bias `(c)`.
    DepthwiseConv2d {
        channels: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    MaxPool {
        kernel: usize,
        stride: usize,
        ceil_mode: bool,
    },
    /// Slopes stored as `{name}.weight` with shape `(channels)`.
    PRelu { channels: usize },
    Relu,
    /// Weights `(out, in)`, bias `(out)`.
    Dense { in_features: usize, out_features: usize },
    SoftmaxChannel,
    Sigmoid,
    /// Adds the output of layer `skip`, zero-extending its channels.
    AddResidual { skip: String },
    Pad {
        top: usize,
        bottom: usize,
        left: usize,
        right: usize,
    },
}

impl Op {
    /// `(record suffix, expected dims)` of each parameter this op reads.
    fn params(&self) -> Vec<(&'static str, Vec<usize>)> {
        match *self {
            Op::Conv2d { in_ch, out_ch, kernel, .. } => vec![
                ("weight", vec![out_ch, in_ch, kernel, kernel]),
                ("bias", vec![out_ch]),
            ],
            Op::DepthwiseConv2d { channels, kernel, .. } => vec![
                ("weight", vec![channels, kernel, kernel]),
                ("bias", vec![channels]),
            ],
            Op::PRelu { channels } => vec![("weight", vec![channels])],
            Op::Dense { in_features, out_features } => vec![
                ("weight", vec![out_features, in_features]),
                ("bias", vec![out_features]),
            ],
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec {
    pub name: String,
    pub op: Op,
    /// Source layer; `None` means the previous layer (or the network input
    /// for the first layer). The input itself is addressable as `"input"`.
    pub input: Option<String>,
}

impl LayerSpec {
    pub fn new(name: impl Into<String>, op: Op) -> Self {
        Self {
            name: name.into(),
            op,
            input: None,
        }
    }

    pub fn from(mut self, input: impl Into<String>) -> Self {
        self.input = Some(input.into());
        self
    }
}

/// Ordered layer list plus named output taps.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub name: String,
    pub layers: Vec<LayerSpec>,
    /// `(tap name, layer name)` pairs.
    pub outputs: Vec<(String, String)>,
}

pub const INPUT: &str = "input";

impl NetworkSpec {
    /// Checks names, references and taps; returns, for every layer, the
    /// index of the layer feeding it and of its skip source (`None` for the
    /// network input).
    fn wiring(&self) -> Result<Vec<(Option<usize>, Option<Option<usize>>)>> {
        let err = |m: String| Error::shape(self.name.clone(), m);
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let lookup = |index: &BTreeMap<&str, usize>, n: &str| -> Result<Option<usize>> {
            if n == INPUT {
                return Ok(None);
            }
            index
                .get(n)
                .map(|&i| Some(i))
                .ok_or_else(|| err(format!("unknown or later layer {n:?}")))
        };
        let mut wiring = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.name == INPUT || index.contains_key(layer.name.as_str()) {
                return Err(err(format!("duplicate layer name {:?}", layer.name)));
            }
            let src = match &layer.input {
                Some(n) => lookup(&index, n)?,
                None => i.checked_sub(1),
            };
            let skip = match &layer.op {
                Op::AddResidual { skip } => Some(lookup(&index, skip)?),
                _ => None,
            };
            wiring.push((src, skip));
            index.insert(&layer.name, i);
        }
        if self.outputs.is_empty() {
            return Err(err("network declares no outputs".into()));
        }
        for (tap, layer) in &self.outputs {
            if !index.contains_key(layer.as_str()) {
                return Err(err(format!("tap {tap:?} references unknown layer {layer:?}")));
            }
        }
        Ok(wiring)
    }
}

impl NetworkSpec {
    /// A weight file with every parameter this spec needs, all zeros.
    pub fn zero_weights(&self) -> WeightFile {
        let mut wf = WeightFile::default();
        for layer in &self.layers {
            for (suffix, dims) in layer.op.params() {
                let n = dims.iter().product();
                wf.insert(
                    format!("{}.{suffix}", layer.name),
                    WeightTensor { dims, data: vec![0.0; n] },
                );
            }
        }
        wf
    }
}

/// Layers executed and their output shapes, in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunTrace {
    pub layers: Vec<(String, (usize, usize, usize))>,
}

/// A network spec with its weights bound and checked.
#[derive(Clone, Debug)]
pub struct Network {
    spec: NetworkSpec,
    params: Vec<Vec<WeightTensor>>,
    wiring: Vec<(Option<usize>, Option<Option<usize>>)>,
    /// Index of the last layer reading each layer's output.
    last_use: Vec<usize>,
    taps: Vec<(String, usize)>,
}

impl Network {
    /// Binds weights to the network description. Missing, misshapen and
    /// unused records are all load errors.
    pub fn new(spec: NetworkSpec, weights: &WeightFile) -> Result<Self> {
        let wiring = spec.wiring()?;
        let mut used = vec![false; weights.records.len()];
        let mut params = Vec::with_capacity(spec.layers.len());
        let mut problems = Vec::new();
        for layer in &spec.layers {
            let mut bound = Vec::new();
            for (suffix, dims) in layer.op.params() {
                let key = format!("{}.{suffix}", layer.name);
                match weights.records.iter().position(|r| r.name == key) {
                    Some(i) => {
                        used[i] = true;
                        let t = &weights.records[i].tensor;
                        if t.dims != dims {
                            problems.push(format!("{key}: expected {dims:?}, found {:?}", t.dims));
                        }
                        bound.push(t.clone());
                    }
                    None => problems.push(format!("{key}: missing")),
                }
            }
            params.push(bound);
        }
        for (r, u) in weights.records.iter().zip(&used) {
            if !u {
                problems.push(format!("{}: unused record", r.name));
            }
        }
        if !problems.is_empty() {
            return Err(Error::WeightLoad(format!(
                "{}: {}",
                spec.name,
                problems.join("; ")
            )));
        }
        let n = spec.layers.len();
        let mut last_use: Vec<usize> = (0..n).collect();
        for (i, (src, skip)) in wiring.iter().enumerate() {
            for s in [*src, skip.flatten()].into_iter().flatten() {
                last_use[s] = last_use[s].max(i);
            }
        }
        let taps = spec
            .outputs
            .iter()
            .map(|(tap, layer)| {
                let i = spec.layers.iter().position(|l| &l.name == layer).unwrap();
                last_use[i] = usize::MAX;
                (tap.clone(), i)
            })
            .collect();
        Ok(Self {
            spec,
            params,
            wiring,
            last_use,
            taps,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Total number of bound weight values.
    pub fn parameter_count(&self) -> usize {
        self.params.iter().flatten().map(|t| t.data.len()).sum()
    }

    pub fn run(&self, input: &Tensor) -> Result<BTreeMap<String, Tensor>> {
        self.run_inner(input, None)
    }

    pub fn run_traced(&self, input: &Tensor) -> Result<(BTreeMap<String, Tensor>, RunTrace)> {
        let mut trace = RunTrace::default();
        let out = self.run_inner(input, Some(&mut trace))?;
        Ok((out, trace))
    }

    fn run_inner(
        &self,
        input: &Tensor,
        mut trace: Option<&mut RunTrace>,
    ) -> Result<BTreeMap<String, Tensor>> {
        let mut values: Vec<Option<Tensor>> = vec![None; self.spec.layers.len()];
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let (src, skip) = &self.wiring[i];
            let x = match src {
                Some(s) => values[*s].as_ref().expect("layer output freed before last use"),
                None => input,
            };
            let p = &self.params[i];
            let y = match &layer.op {
                Op::Conv2d { stride, pad, .. } => ops::conv2d(x, &p[0], &p[1].data, *stride, *pad),
                Op::DepthwiseConv2d { stride, pad, .. } => {
                    ops::depthwise_conv2d(x, &p[0], &p[1].data, *stride, *pad)
                }
                Op::MaxPool { kernel, stride, ceil_mode } => {
                    ops::max_pool(x, *kernel, *stride, *ceil_mode)
                }
                Op::PRelu { .. } => ops::prelu(x, &p[0].data),
                Op::Relu => Ok(ops::relu(x)),
                Op::Dense { .. } => ops::dense(x, &p[0], &p[1].data),
                Op::SoftmaxChannel => Ok(ops::softmax_channel(x)),
                Op::Sigmoid => Ok(ops::sigmoid(x)),
                Op::AddResidual { .. } => {
                    let s = match skip.flatten() {
                        Some(s) => values[s].as_ref().expect("skip output freed"),
                        None => input,
                    };
                    ops::add_residual(x, s)
                }
                Op::Pad { top, bottom, left, right } => Ok(ops::pad(x, *top, *bottom, *left, *right)),
            }
            .map_err(|e| match e {
                Error::Shape { detail, .. } => Error::shape(layer.name.clone(), detail),
                other => other,
            })?;
            if let Some(t) = trace.as_deref_mut() {
                t.layers.push((layer.name.clone(), y.shape()));
            }
            values[i] = Some(y);
            for (j, v) in values.iter_mut().enumerate().take(i + 1) {
                if self.last_use[j] <= i && j != i {
                    *v = None;
                }
            }
            if self.last_use[i] == i {
                // nothing reads it and it is not a tap
                values[i] = None;
            }
        }
        Ok(self
            .taps
            .iter()
            .map(|(tap, i)| (tap.clone(), values[*i].clone().expect("tap retained")))
            .collect())
    }
}

/// Binds `weights` to `spec` and runs it once.
pub fn run_network(
    spec: &NetworkSpec,
    weights: &WeightFile,
    input: &Tensor,
) -> Result<BTreeMap<String, Tensor>> {
    Network::new(spec.clone(), weights)?.run(input)
}
