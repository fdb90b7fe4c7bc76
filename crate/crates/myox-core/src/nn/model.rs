//! The three model architectures and their training plumbing.
//!
//! The convolutional encoder is the stack
//! Conv(64, 7x7) -> ReLU -> Pool -> Conv(128, 5x5) -> ReLU -> Pool ->
//! Conv(256, 3x3) -> ReLU -> Pool -> Conv(512, 3x3) -> ReLU ->
//! Conv(c1x1, 1x1) -> ReLU -> Flatten, taking 96x96x1 inputs through
//! 48x48x64, 24x24x128, 12x12x256, 12x12x512 down to 144 * c1x1 flattened
//! features. Heads:
//!
//! * ConvNet: Dense(512) + ReLU + Dropout(0.2), twice, then Dense(3).
//! * TextureFcn: Dense(256) + ReLU, twice, then Dense(3) on the 355
//!   handcrafted features.
//! * Hybrid: the ConvNet head shape on [encoder output ++ 355 features],
//!   with the encoder weights loaded from a trained ConvNet and frozen.

use alloc::vec::Vec;

use super::layers::{Conv2d, Dense, Dropout, Flatten, Layer, MaxPool2, Mode, NnError, Relu};
use super::scalar::Scalar;
use super::tensor::{Act, Mat, Tensor4};
use crate::fmath as fm;
use crate::preprocess::NET_SIDE;
use crate::rng::Rng;

/// Handcrafted feature vector length consumed by TextureFcn and Hybrid.
pub const TEXTURE_FEATURES: usize = crate::texture::FEATURE_COUNT;

/// Default filter count of the trailing 1x1 convolution.
pub const DEFAULT_C1X1: usize = 64;

/// Dropout rate of the dense head.
pub const HEAD_DROPOUT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    ConvNet,
    TextureFcn,
    Hybrid,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::ConvNet, Variant::TextureFcn, Variant::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ConvNet => "convnet",
            Variant::TextureFcn => "texture",
            Variant::Hybrid => "hybrid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "convnet" => Some(Variant::ConvNet),
            "texture" => Some(Variant::TextureFcn),
            "hybrid" => Some(Variant::Hybrid),
            _ => None,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Variant::ConvNet => 1,
            Variant::TextureFcn => 2,
            Variant::Hybrid => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Variant::ConvNet),
            2 => Some(Variant::TextureFcn),
            3 => Some(Variant::Hybrid),
            _ => None,
        }
    }

    /// Whether the variant consumes the handcrafted feature vector.
    pub fn uses_features(self) -> bool {
        !matches!(self, Variant::ConvNet)
    }

    /// Whether the variant consumes 96x96 image inputs.
    pub fn uses_images(self) -> bool {
        !matches!(self, Variant::TextureFcn)
    }
}

/// A parameterized network: optional convolutional encoder plus a dense
/// head ending in 3 logits.
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    pub variant: Variant,
    pub c1x1: usize,
    pub encoder: Vec<Layer<T>>,
    pub head: Vec<Layer<T>>,
    /// Extra features concatenated after the encoder output (Hybrid) or
    /// forming the whole head input (TextureFcn).
    pub feature_len: usize,
    /// Frozen encoders are excluded from gradient updates.
    pub encoder_frozen: bool,
}

/// Mutable view of one parameter tensor and its gradient buffer.
pub struct ParamView<'a, T> {
    pub values: &'a mut Vec<T>,
    pub grads: &'a mut Vec<T>,
    /// Weight matrices get L2; biases do not.
    pub is_weight: bool,
}

fn glorot_fill<T: Scalar>(values: &mut [T], fan_in: usize, fan_out: usize, rng: &mut Rng) {
    let limit = fm::sqrt(6.0 / (fan_in + fan_out) as f64);
    for v in values.iter_mut() {
        *v = T::from_f64(rng.uniform(-limit, limit));
    }
}

fn init_conv<T: Scalar>(kh: usize, kw: usize, cin: usize, cout: usize, rng: &mut Rng) -> Conv2d<T> {
    let mut conv = Conv2d::new(kh, kw, cin, cout);
    glorot_fill(&mut conv.weights, kh * kw * cin, kh * kw * cout, rng);
    conv
}

fn init_dense<T: Scalar>(input: usize, output: usize, rng: &mut Rng) -> Dense<T> {
    let mut dense = Dense::new(input, output);
    glorot_fill(&mut dense.weights, input, output, rng);
    dense
}

/// Encoder stack shared by ConvNet and Hybrid.
fn build_encoder<T: Scalar>(c1x1: usize, rng: &mut Rng) -> Vec<Layer<T>> {
    alloc::vec![
        Layer::Conv(init_conv(7, 7, 1, 64, rng)),
        Layer::Relu(Relu::new()),
        Layer::Pool(MaxPool2::new()),
        Layer::Conv(init_conv(5, 5, 64, 128, rng)),
        Layer::Relu(Relu::new()),
        Layer::Pool(MaxPool2::new()),
        Layer::Conv(init_conv(3, 3, 128, 256, rng)),
        Layer::Relu(Relu::new()),
        Layer::Pool(MaxPool2::new()),
        Layer::Conv(init_conv(3, 3, 256, 512, rng)),
        Layer::Relu(Relu::new()),
        Layer::Conv(init_conv(1, 1, 512, c1x1, rng)),
        Layer::Relu(Relu::new()),
        Layer::Flatten(Flatten::new()),
    ]
}

fn build_fcn_head<T: Scalar>(input: usize, rng: &mut Rng) -> Vec<Layer<T>> {
    alloc::vec![
        Layer::Dense(init_dense(input, 512, rng)),
        Layer::Relu(Relu::new()),
        Layer::Dropout(Dropout::new(HEAD_DROPOUT)),
        Layer::Dense(init_dense(512, 512, rng)),
        Layer::Relu(Relu::new()),
        Layer::Dropout(Dropout::new(HEAD_DROPOUT)),
        Layer::Dense(init_dense(512, 3, rng)),
    ]
}

impl<T: Scalar> Model<T> {
    /// Flattened encoder output length: 12 * 12 * c1x1 for 96x96 inputs.
    pub fn encoder_output_len(c1x1: usize) -> usize {
        (NET_SIDE / 8) * (NET_SIDE / 8) * c1x1
    }

    pub fn build_convnet(c1x1: usize, rng: &mut Rng) -> Self {
        Self::build_convnet_for_side(NET_SIDE, c1x1, rng)
    }

    /// The same architecture sized for a different (multiple-of-8) input
    /// side; the production input is 96. Used by gradient checks on small
    /// inputs.
    pub fn build_convnet_for_side(side: usize, c1x1: usize, rng: &mut Rng) -> Self {
        assert!(side >= 8 && side.is_multiple_of(8), "input side must be a multiple of 8");
        let encoder = build_encoder(c1x1, rng);
        let head = build_fcn_head((side / 8) * (side / 8) * c1x1, rng);
        Model {
            variant: Variant::ConvNet,
            c1x1,
            encoder,
            head,
            feature_len: 0,
            encoder_frozen: false,
        }
    }

    pub fn build_texture_fcn(feature_len: usize, rng: &mut Rng) -> Self {
        let head = alloc::vec![
            Layer::Dense(init_dense(feature_len, 256, rng)),
            Layer::Relu(Relu::new()),
            Layer::Dense(init_dense(256, 256, rng)),
            Layer::Relu(Relu::new()),
            Layer::Dense(init_dense(256, 3, rng)),
        ];
        Model {
            variant: Variant::TextureFcn,
            c1x1: 0,
            encoder: Vec::new(),
            head,
            feature_len,
            encoder_frozen: false,
        }
    }

    /// Build the hybrid model around a trained ConvNet's encoder. The
    /// encoder parameters are copied and frozen; the head is freshly
    /// initialized for the concatenated input.
    pub fn build_hybrid(
        donor: &Model<T>,
        feature_len: usize,
        rng: &mut Rng,
    ) -> Result<Self, NnError> {
        if donor.variant != Variant::ConvNet || donor.encoder.is_empty() {
            return Err(NnError::MissingEncoderWeights);
        }
        let encoder = donor.encoder.clone();
        let head = build_fcn_head(Self::encoder_output_len(donor.c1x1) + feature_len, rng);
        Ok(Model {
            variant: Variant::Hybrid,
            c1x1: donor.c1x1,
            encoder,
            head,
            feature_len,
            encoder_frozen: true,
        })
    }

    /// Head input width.
    pub fn head_input_len(&self) -> usize {
        match self.variant {
            Variant::ConvNet => Self::encoder_output_len(self.c1x1),
            Variant::TextureFcn => self.feature_len,
            Variant::Hybrid => Self::encoder_output_len(self.c1x1) + self.feature_len,
        }
    }

    /// Run the encoder on a batch of images, producing the flattened
    /// representation.
    pub fn forward_encoder(&mut self, images: Tensor4<T>, mode: &mut Mode) -> Result<Mat<T>, NnError> {
        debug_assert!(!self.encoder.is_empty(), "variant has no encoder");
        let mut act = Act::Image(images);
        for layer in &mut self.encoder {
            act = layer.forward(act, mode)?;
        }
        Ok(act.expect_matrix())
    }

    /// Run the dense head on its input matrix, producing logits.
    pub fn forward_head(&mut self, input: Mat<T>, mode: &mut Mode) -> Result<Mat<T>, NnError> {
        let mut act = Act::Matrix(input);
        for layer in &mut self.head {
            act = layer.forward(act, mode)?;
        }
        Ok(act.expect_matrix())
    }

    /// Full forward pass. `images` is required for ConvNet/Hybrid,
    /// `features` for TextureFcn/Hybrid.
    pub fn forward(
        &mut self,
        images: Option<Tensor4<T>>,
        features: Option<&Mat<T>>,
        mode: &mut Mode,
    ) -> Result<Mat<T>, NnError> {
        let head_input = match self.variant {
            Variant::ConvNet => self.forward_encoder(images.expect("convnet needs images"), mode)?,
            Variant::TextureFcn => features.expect("texture fcn needs features").clone(),
            Variant::Hybrid => {
                // The frozen encoder always runs in eval mode (dropout-free
                // anyway) and caches nothing.
                let enc = self.forward_encoder(
                    images.expect("hybrid needs images"),
                    &mut Mode::Eval,
                )?;
                let features = features.expect("hybrid needs features");
                concat_columns(&enc, features)
            }
        };
        self.forward_head(head_input, mode)
    }

    /// Backpropagate from the logit gradient. Head gradients always
    /// accumulate; the encoder participates only when trainable (ConvNet).
    pub fn backward(&mut self, dlogits: Mat<T>) {
        let mut act = Act::Matrix(dlogits);
        for layer in self.head.iter_mut().rev() {
            act = layer.backward(act);
        }
        if self.variant == Variant::ConvNet {
            for layer in self.encoder.iter_mut().rev() {
                act = layer.backward(act);
            }
        }
    }

    pub fn zero_grads(&mut self) {
        for layer in self.encoder.iter_mut().chain(self.head.iter_mut()) {
            layer.zero_grads();
        }
    }

    /// Add the L2 term `2 * alpha * w` to every trainable weight-matrix
    /// gradient (biases excluded).
    pub fn apply_l2(&mut self, alpha: f64) {
        let two_alpha = T::from_f64(2.0 * alpha);
        self.visit_trainable(|view| {
            if view.is_weight {
                for (g, &w) in view.grads.iter_mut().zip(view.values.iter()) {
                    *g += two_alpha * w;
                }
            }
        });
    }

    /// Visit trainable parameter tensors in canonical order (encoder
    /// layers first when trainable, then head; weights before bias within
    /// a layer).
    pub fn visit_trainable(&mut self, mut f: impl FnMut(ParamView<'_, T>)) {
        if !self.encoder_frozen {
            for layer in self.encoder.iter_mut() {
                visit_layer(layer, &mut f);
            }
        }
        for layer in self.head.iter_mut() {
            visit_layer(layer, &mut f);
        }
    }

    /// Visit every parameter tensor including frozen ones (serialization,
    /// freeze checks).
    pub fn visit_all(&mut self, mut f: impl FnMut(ParamView<'_, T>)) {
        for layer in self.encoder.iter_mut().chain(self.head.iter_mut()) {
            visit_layer(layer, &mut f);
        }
    }

    /// Sizes of trainable tensors, for optimizer state construction.
    pub fn trainable_sizes(&mut self) -> Vec<usize> {
        let mut sizes = Vec::new();
        self.visit_trainable(|view| sizes.push(view.values.len()));
        sizes
    }

    /// Flat copy of every parameter (frozen included), in visit order.
    pub fn snapshot(&mut self) -> Vec<T> {
        let mut out = Vec::new();
        self.visit_all(|view| out.extend_from_slice(view.values));
        out
    }

    pub fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_all(|view| n += view.values.len());
        n
    }
}

fn visit_layer<T: Scalar>(layer: &mut Layer<T>, f: &mut impl FnMut(ParamView<'_, T>)) {
    match layer {
        Layer::Conv(l) => {
            f(ParamView {
                values: &mut l.weights,
                grads: &mut l.grad_weights,
                is_weight: true,
            });
            f(ParamView {
                values: &mut l.bias,
                grads: &mut l.grad_bias,
                is_weight: false,
            });
        }
        Layer::Dense(l) => {
            f(ParamView {
                values: &mut l.weights,
                grads: &mut l.grad_weights,
                is_weight: true,
            });
            f(ParamView {
                values: &mut l.bias,
                grads: &mut l.grad_bias,
                is_weight: false,
            });
        }
        _ => {}
    }
}

/// `[a | b]` columnwise concatenation of two batch matrices.
pub fn concat_columns<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    assert_eq!(a.rows, b.rows, "concat needs equal batch sizes");
    let mut out = Mat::zeros(a.rows, a.cols + b.cols);
    for r in 0..a.rows {
        out.row_mut(r)[..a.cols].copy_from_slice(a.row(r));
        out.row_mut(r)[a.cols..].copy_from_slice(b.row(r));
    }
    out
}
