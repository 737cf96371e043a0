use alloc::format;
use alloc::vec::Vec;

use super::{ParamVector, Scalar};
use crate::{Error, Result, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub(crate) fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => {
                if x.re() > 0.0 {
                    x
                } else {
                    S::zero()
                }
            }
            Activation::Sigmoid => x.sigmoid(),
            Activation::Identity => x,
        }
    }

    /// Derivative in terms of the pre-activation `x` and output `y`.
    /// ReLU uses a constant 0/1 derivative, so its second derivative is 0
    /// everywhere including the kink.
    #[inline]
    pub(crate) fn derivative<S: Scalar>(self, x: S, y: S) -> S {
        match self {
            Activation::Tanh => S::one() - y * y,
            Activation::Relu => {
                if x.re() > 0.0 {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Sigmoid => y * (S::one() - y),
            Activation::Identity => S::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl core::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::invalid("activation", format!("unknown activation `{other}`"))),
        }
    }
}

/// What the head predicts.
///
/// `Binary` is a single sigmoid logit (label 0/1), `Classification` is a
/// softmax over `classes` logits, `Regression` emits `dim` raw values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Binary,
    Classification { classes: usize },
    Regression { dim: usize },
}

impl Task {
    pub fn output_dim(self) -> usize {
        match self {
            Task::Binary => 1,
            Task::Classification { classes } => classes,
            Task::Regression { dim } => dim,
        }
    }

    pub fn is_classification(self) -> bool {
        !matches!(self, Task::Regression { .. })
    }

    pub fn num_classes(self) -> Option<usize> {
        match self {
            Task::Binary => Some(2),
            Task::Classification { classes } => Some(classes),
            Task::Regression { .. } => None,
        }
    }
}

impl core::fmt::Display for Task {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Task::Binary => write!(f, "binary"),
            Task::Classification { classes } => write!(f, "classification({classes})"),
            Task::Regression { dim } => write!(f, "regression({dim})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
    pub bias: bool,
}

impl Layer {
    pub fn param_count(&self) -> usize {
        self.input * self.output + if self.bias { self.output } else { 0 }
    }
}

/// Feature encoder (dense layers) followed by a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    encoder: Vec<Layer>,
    head: Layer,
    task: Task,
}

impl Mlp {
    /// Encoder with the given hidden widths (all sharing `activation`, all
    /// with bias) and a biased linear head sized for `task`.
    pub fn new(input: usize, hidden: &[usize], activation: Activation, task: Task) -> Result<Self> {
        let mut encoder = Vec::with_capacity(hidden.len());
        let mut prev = input;
        for &h in hidden {
            encoder.push(Layer { input: prev, output: h, activation, bias: true });
            prev = h;
        }
        let head = Layer { input: prev, output: task.output_dim(), activation: Activation::Identity, bias: true };
        Self::from_layers(encoder, head, task)
    }

    pub fn from_layers(encoder: Vec<Layer>, head: Layer, task: Task) -> Result<Self> {
        for w in encoder.windows(2) {
            if w[0].output != w[1].input {
                return Err(Error::Shape {
                    op: "Mlp::from_layers",
                    left: (w[0].output, w[0].input),
                    right: (w[1].output, w[1].input),
                });
            }
        }
        if let Some(last) = encoder.last() {
            if last.output != head.input {
                return Err(Error::Shape {
                    op: "Mlp::from_layers (head)",
                    left: (last.output, last.input),
                    right: (head.output, head.input),
                });
            }
        }
        if head.output != task.output_dim() {
            return Err(Error::invalid(
                "head",
                format!("head emits {} values but task {task} needs {}", head.output, task.output_dim()),
            ));
        }
        if head.activation != Activation::Identity {
            return Err(Error::invalid("head", "the head must be linear"));
        }
        if matches!(task, Task::Classification { classes } if classes < 2) {
            return Err(Error::invalid("task", "classification needs at least two classes"));
        }
        if encoder.iter().chain(core::iter::once(&head)).any(|l| l.input == 0 || l.output == 0) {
            return Err(Error::invalid("layers", "zero-width layer"));
        }
        Ok(Self { encoder, head, task })
    }

    /// Linear model with no encoder: `outputs = W x (+ b)`.
    pub fn linear(input: usize, task: Task, bias: bool) -> Result<Self> {
        let head = Layer { input, output: task.output_dim(), activation: Activation::Identity, bias };
        Self::from_layers(Vec::new(), head, task)
    }

    pub fn encoder(&self) -> &[Layer] {
        &self.encoder
    }

    pub fn head(&self) -> &Layer {
        &self.head
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.first().unwrap_or(&self.head).input
    }

    pub fn feature_dim(&self) -> usize {
        self.head.input
    }

    pub fn output_dim(&self) -> usize {
        self.head.output
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.encoder.iter().chain(core::iter::once(&self.head))
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(Layer::param_count).sum()
    }

    /// Index of the first head parameter in the flat vector.
    pub fn head_offset(&self) -> usize {
        self.encoder.iter().map(Layer::param_count).sum()
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let mut s = Vec::new();
        for l in self.layers() {
            s.push((l.output, l.input));
            if l.bias {
                s.push((l.output, 1));
            }
        }
        s
    }

    /// Glorot-uniform weights, `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`; zero biases.
    pub fn init_params(&self, rng: &mut RngState) -> ParamVector {
        let mut values = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            let a = libm::sqrt(6.0 / (l.input + l.output) as f64);
            for _ in 0..l.input * l.output {
                values.push(rng.uniform_range(-a, a));
            }
            if l.bias {
                values.extend(core::iter::repeat_n(0.0, l.output));
            }
        }
        ParamVector::new(values, self.shapes()).expect("init shapes")
    }

    pub fn zero_params(&self) -> ParamVector {
        ParamVector::new(alloc::vec![0.0; self.param_count()], self.shapes()).expect("shapes")
    }

    pub(crate) fn check_params(&self, len: usize) -> Result<()> {
        if len != self.param_count() {
            return Err(Error::length("model parameters", self.param_count(), len));
        }
        Ok(())
    }
}
