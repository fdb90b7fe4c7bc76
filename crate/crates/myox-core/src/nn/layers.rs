//! Layer implementations with exact reverse-mode gradients.
//!
//! Every layer caches what its backward pass needs during `forward`;
//! gradients accumulate into per-layer buffers so a batch is one
//! `zero_grads` / `forward` / `backward` cycle.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::scalar::Scalar;
use super::tensor::{Act, Mat, Tensor4};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NnError {
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    OddSpatialDim {
        h: usize,
        w: usize,
    },
    NonFiniteLogits,
    /// Hybrid model construction without a trained convolutional encoder.
    MissingEncoderWeights,
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected:?}, got {got:?}")
            }
            NnError::OddSpatialDim { h, w } => {
                write!(f, "max pooling requires even spatial dims, got {h}x{w}")
            }
            NnError::NonFiniteLogits => write!(f, "non-finite logits"),
            NnError::MissingEncoderWeights => {
                write!(f, "hybrid model requires stored convolutional encoder weights")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NnError {}

/// Forward-pass mode. Training mode carries the RNG that drives dropout.
pub enum Mode<'a> {
    Train { rng: &'a mut Rng },
    Eval,
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train { .. })
    }
}

/// 'Same'-padded 2-D convolution (cross-correlation convention: the kernel
/// is not flipped). Weights are `[kh * kw * cin, cout]` row-major with the
/// patch axis ordered (ky, kx, cin).
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub kh: usize,
    pub kw: usize,
    pub cin: usize,
    pub cout: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub grad_weights: Vec<T>,
    pub grad_bias: Vec<T>,
    cached_input: Option<Tensor4<T>>,
    scratch: Vec<T>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(kh: usize, kw: usize, cin: usize, cout: usize) -> Self {
        assert!(kh % 2 == 1 && kw % 2 == 1, "'same' padding needs odd kernels");
        let k = kh * kw * cin;
        Conv2d {
            kh,
            kw,
            cin,
            cout,
            weights: vec![T::ZERO; k * cout],
            bias: vec![T::ZERO; cout],
            grad_weights: vec![T::ZERO; k * cout],
            grad_bias: vec![T::ZERO; cout],
            cached_input: None,
            scratch: Vec::new(),
        }
    }

    pub fn patch_len(&self) -> usize {
        self.kh * self.kw * self.cin
    }

    /// Unfold one sample into `[h*w, kh*kw*cin]`, zero-padded at borders.
    fn im2col(&self, x: &Tensor4<T>, sample: usize, col: &mut [T]) {
        let (h, w, c) = (x.h, x.w, x.c);
        let (ph, pw) = (self.kh / 2, self.kw / 2);
        let data = x.sample(sample);
        let k = self.patch_len();
        for y in 0..h {
            for xx in 0..w {
                let row = (y * w + xx) * k;
                let mut idx = row;
                for ky in 0..self.kh {
                    let sy = y as isize + ky as isize - ph as isize;
                    if sy < 0 || sy >= h as isize {
                        col[idx..idx + self.kw * c].fill(T::ZERO);
                        idx += self.kw * c;
                        continue;
                    }
                    for kx in 0..self.kw {
                        let sx = xx as isize + kx as isize - pw as isize;
                        if sx < 0 || sx >= w as isize {
                            col[idx..idx + c].fill(T::ZERO);
                        } else {
                            let src = ((sy as usize) * w + sx as usize) * c;
                            col[idx..idx + c].copy_from_slice(&data[src..src + c]);
                        }
                        idx += c;
                    }
                }
            }
        }
    }

    pub fn forward(&mut self, x: Tensor4<T>, training: bool) -> Result<Tensor4<T>, NnError> {
        if x.c != self.cin {
            return Err(NnError::ShapeMismatch {
                expected: (self.cin, 0),
                got: (x.c, 0),
            });
        }
        let (n, h, w) = (x.n, x.h, x.w);
        let k = self.patch_len();
        let hw = h * w;
        let mut out = Tensor4::zeros(n, h, w, self.cout);
        self.scratch.resize(hw * k, T::ZERO);
        for s in 0..n {
            // Split borrows: scratch is filled from x, written into out.
            let mut col = core::mem::take(&mut self.scratch);
            self.im2col(&x, s, &mut col);
            let dst = out.sample_mut(s);
            unsafe {
                T::gemm(
                    hw,
                    k,
                    self.cout,
                    T::ONE,
                    col.as_ptr(),
                    k as isize,
                    1,
                    self.weights.as_ptr(),
                    self.cout as isize,
                    1,
                    T::ZERO,
                    dst.as_mut_ptr(),
                    self.cout as isize,
                    1,
                );
            }
            for row in 0..hw {
                for (co, &b) in self.bias.iter().enumerate() {
                    dst[row * self.cout + co] += b;
                }
            }
            self.scratch = col;
        }
        if training {
            self.cached_input = Some(x);
        }
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Tensor4<T>) -> Tensor4<T> {
        let x = self
            .cached_input
            .take()
            .expect("conv backward without cached forward");
        let (n, h, w) = (x.n, x.h, x.w);
        let hw = h * w;
        let k = self.patch_len();
        let (ph, pw) = (self.kh / 2, self.kw / 2);
        let mut dx = Tensor4::zeros(n, h, w, self.cin);
        let mut dcol = vec![T::ZERO; hw * k];
        for s in 0..n {
            let mut col = core::mem::take(&mut self.scratch);
            col.resize(hw * k, T::ZERO);
            self.im2col(&x, s, &mut col);
            let dy_s = dy.sample(s);
            unsafe {
                // dW += col^T (k x hw) * dy (hw x cout)
                T::gemm(
                    k,
                    hw,
                    self.cout,
                    T::ONE,
                    col.as_ptr(),
                    1,
                    k as isize,
                    dy_s.as_ptr(),
                    self.cout as isize,
                    1,
                    T::ONE,
                    self.grad_weights.as_mut_ptr(),
                    self.cout as isize,
                    1,
                );
                // dcol = dy (hw x cout) * W^T (cout x k)
                T::gemm(
                    hw,
                    self.cout,
                    k,
                    T::ONE,
                    dy_s.as_ptr(),
                    self.cout as isize,
                    1,
                    self.weights.as_ptr(),
                    1,
                    self.cout as isize,
                    T::ZERO,
                    dcol.as_mut_ptr(),
                    k as isize,
                    1,
                );
            }
            self.scratch = col;
            // db += column sums of dy
            for row in 0..hw {
                for co in 0..self.cout {
                    self.grad_bias[co] += dy_s[row * self.cout + co];
                }
            }
            // Fold dcol back onto the padded input grid.
            let dxs = dx.sample_mut(s);
            for y in 0..h {
                for xx in 0..w {
                    let row = (y * w + xx) * k;
                    let mut idx = row;
                    for ky in 0..self.kh {
                        let sy = y as isize + ky as isize - ph as isize;
                        if sy < 0 || sy >= h as isize {
                            idx += self.kw * self.cin;
                            continue;
                        }
                        for kx in 0..self.kw {
                            let sx = xx as isize + kx as isize - pw as isize;
                            if sx >= 0 && sx < w as isize {
                                let dst = ((sy as usize) * w + sx as usize) * self.cin;
                                for ci in 0..self.cin {
                                    dxs[dst + ci] += dcol[idx + ci];
                                }
                            }
                            idx += self.cin;
                        }
                    }
                }
            }
        }
        dx
    }
}

/// 2x2, stride-2 max pooling. Ties go to the first element in row-major
/// window order. Argmax indices (into the input sample) are kept for the
/// backward routing.
#[derive(Debug, Clone, Default)]
pub struct MaxPool2 {
    argmax: Vec<u32>,
    in_shape: (usize, usize, usize, usize),
}

impl MaxPool2 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor4<T>) -> Result<Tensor4<T>, NnError> {
        if !x.h.is_multiple_of(2) || !x.w.is_multiple_of(2) {
            return Err(NnError::OddSpatialDim { h: x.h, w: x.w });
        }
        let (n, h, w, c) = (x.n, x.h, x.w, x.c);
        let (oh, ow) = (h / 2, w / 2);
        let mut out = Tensor4::zeros(n, oh, ow, c);
        self.argmax.clear();
        self.argmax.resize(n * oh * ow * c, 0);
        self.in_shape = (n, h, w, c);
        for s in 0..n {
            let xs = x.sample(s);
            let base = s * oh * ow * c;
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..c {
                        let mut best_idx = ((2 * oy) * w + 2 * ox) * c + ch;
                        let mut best = xs[best_idx];
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let idx = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                                if xs[idx] > best {
                                    best = xs[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        let o = (oy * ow + ox) * c + ch;
                        out.sample_mut(s)[o] = best;
                        self.argmax[base + o] = best_idx as u32;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn backward<T: Scalar>(&mut self, dy: &Tensor4<T>) -> Tensor4<T> {
        let (n, h, w, c) = self.in_shape;
        let mut dx = Tensor4::zeros(n, h, w, c);
        let out_len = dy.sample_len();
        for s in 0..n {
            let dys = dy.sample(s);
            let dxs = dx.sample_mut(s);
            let base = s * out_len;
            for (o, &g) in dys.iter().enumerate() {
                dxs[self.argmax[base + o] as usize] += g;
            }
        }
        dx
    }
}

/// Elementwise max(0, x); the active mask is cached for backward.
#[derive(Debug, Clone, Default)]
pub struct Relu {
    active: Vec<bool>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<T: Scalar>(&mut self, mut x: Act<T>, training: bool) -> Act<T> {
        let data = x.flat_mut();
        if training {
            self.active.clear();
            self.active.reserve(data.len());
            for v in data.iter_mut() {
                let on = *v > T::ZERO;
                self.active.push(on);
                if !on {
                    *v = T::ZERO;
                }
            }
        } else {
            for v in data.iter_mut() {
                *v = (*v).max(T::ZERO);
            }
        }
        x
    }

    pub fn backward<T: Scalar>(&mut self, mut dy: Act<T>) -> Act<T> {
        let data = dy.flat_mut();
        debug_assert_eq!(data.len(), self.active.len());
        for (v, &on) in data.iter_mut().zip(&self.active) {
            if !on {
                *v = T::ZERO;
            }
        }
        dy
    }
}

/// Inverted dropout: units are zeroed with probability `rate` during
/// training and survivors are scaled by 1/(1-rate), so inference is the
/// exact identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub rate: f64,
    kept: Vec<bool>,
}

impl Dropout {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "drop rate must be in [0, 1)");
        Dropout {
            rate,
            kept: Vec::new(),
        }
    }

    pub fn forward<T: Scalar>(&mut self, mut x: Act<T>, mode: &mut Mode) -> Act<T> {
        match mode {
            Mode::Eval => x,
            Mode::Train { rng } => {
                if self.rate == 0.0 {
                    self.kept.clear();
                    self.kept.resize(x.flat().len(), true);
                    return x;
                }
                let scale = T::from_f64(1.0 / (1.0 - self.rate));
                let data = x.flat_mut();
                self.kept.clear();
                self.kept.reserve(data.len());
                for v in data.iter_mut() {
                    let keep = rng.next_f64() >= self.rate;
                    self.kept.push(keep);
                    if keep {
                        *v *= scale;
                    } else {
                        *v = T::ZERO;
                    }
                }
                x
            }
        }
    }

    pub fn backward<T: Scalar>(&mut self, mut dy: Act<T>) -> Act<T> {
        debug_assert_eq!(dy.flat().len(), self.kept.len());
        let scale = T::from_f64(1.0 / (1.0 - self.rate));
        let data = dy.flat_mut();
        for (v, &keep) in data.iter_mut().zip(&self.kept) {
            if keep {
                *v *= scale;
            } else {
                *v = T::ZERO;
            }
        }
        dy
    }
}

/// Image-to-matrix reshape; the NHWC layout already matches, so this just
/// rewraps the buffer and remembers the spatial shape.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    shape: (usize, usize, usize),
}

impl Flatten {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<T: Scalar>(&mut self, x: Tensor4<T>) -> Mat<T> {
        self.shape = (x.h, x.w, x.c);
        let rows = x.n;
        let cols = x.sample_len();
        Mat::from_data(rows, cols, x.into_data())
    }

    pub fn backward<T: Scalar>(&mut self, dy: Mat<T>) -> Tensor4<T> {
        let (h, w, c) = self.shape;
        let n = dy.rows;
        Tensor4::from_data(n, h, w, c, dy.into_data())
    }
}

/// Fully connected layer: `y = x W + b` with weights `[in, out]`.
#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub input: usize,
    pub output: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub grad_weights: Vec<T>,
    pub grad_bias: Vec<T>,
    cached_input: Option<Mat<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(input: usize, output: usize) -> Self {
        Dense {
            input,
            output,
            weights: vec![T::ZERO; input * output],
            bias: vec![T::ZERO; output],
            grad_weights: vec![T::ZERO; input * output],
            grad_bias: vec![T::ZERO; output],
            cached_input: None,
        }
    }

    pub fn forward(&mut self, x: Mat<T>, training: bool) -> Result<Mat<T>, NnError> {
        if x.cols != self.input {
            return Err(NnError::ShapeMismatch {
                expected: (0, self.input),
                got: (x.rows, x.cols),
            });
        }
        let mut out = Mat::zeros(x.rows, self.output);
        unsafe {
            T::gemm(
                x.rows,
                self.input,
                self.output,
                T::ONE,
                x.data().as_ptr(),
                self.input as isize,
                1,
                self.weights.as_ptr(),
                self.output as isize,
                1,
                T::ZERO,
                out.data_mut().as_mut_ptr(),
                self.output as isize,
                1,
            );
        }
        for r in 0..out.rows {
            let row = out.row_mut(r);
            for (o, &b) in row.iter_mut().zip(&self.bias) {
                *o += b;
            }
        }
        if training {
            self.cached_input = Some(x);
        }
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Mat<T>) -> Mat<T> {
        let x = self
            .cached_input
            .take()
            .expect("dense backward without cached forward");
        let mut dx = Mat::zeros(x.rows, self.input);
        unsafe {
            // dW += x^T (in x b) * dy (b x out)
            T::gemm(
                self.input,
                x.rows,
                self.output,
                T::ONE,
                x.data().as_ptr(),
                1,
                self.input as isize,
                dy.data().as_ptr(),
                self.output as isize,
                1,
                T::ONE,
                self.grad_weights.as_mut_ptr(),
                self.output as isize,
                1,
            );
            // dx = dy (b x out) * W^T (out x in)
            T::gemm(
                x.rows,
                self.output,
                self.input,
                T::ONE,
                dy.data().as_ptr(),
                self.output as isize,
                1,
                self.weights.as_ptr(),
                1,
                self.output as isize,
                T::ZERO,
                dx.data_mut().as_mut_ptr(),
                self.input as isize,
                1,
            );
        }
        for r in 0..dy.rows {
            for (gb, &g) in self.grad_bias.iter_mut().zip(dy.row(r)) {
                *gb += g;
            }
        }
        dx
    }
}

/// The fixed layer vocabulary of the three architectures.
#[derive(Debug, Clone)]
pub enum Layer<T: Scalar> {
    Conv(Conv2d<T>),
    Pool(MaxPool2),
    Relu(Relu),
    Dropout(Dropout),
    Flatten(Flatten),
    Dense(Dense<T>),
}

impl<T: Scalar> Layer<T> {
    pub fn forward(&mut self, x: Act<T>, mode: &mut Mode) -> Result<Act<T>, NnError> {
        let training = mode.is_train();
        let out = match self {
            Layer::Conv(l) => Act::Image(l.forward(x.expect_image(), training)?),
            Layer::Pool(l) => Act::Image(l.forward(&x.expect_image())?),
            Layer::Relu(l) => l.forward(x, training),
            Layer::Dropout(l) => l.forward(x, mode),
            Layer::Flatten(l) => Act::Matrix(l.forward(x.expect_image())),
            Layer::Dense(l) => Act::Matrix(l.forward(x.expect_matrix(), training)?),
        };
        debug_assert!(
            out.flat().iter().all(|v| v.is_finite()),
            "non-finite activation"
        );
        Ok(out)
    }

    pub fn backward(&mut self, dy: Act<T>) -> Act<T> {
        match self {
            Layer::Conv(l) => Act::Image(l.backward(&dy.expect_image())),
            Layer::Pool(l) => Act::Image(l.backward(&dy.expect_image())),
            Layer::Relu(l) => l.backward(dy),
            Layer::Dropout(l) => l.backward(dy),
            Layer::Flatten(l) => Act::Image(l.backward(dy.expect_matrix())),
            Layer::Dense(l) => Act::Matrix(l.backward(&dy.expect_matrix())),
        }
    }

    pub fn zero_grads(&mut self) {
        match self {
            Layer::Conv(l) => {
                l.grad_weights.fill(T::ZERO);
                l.grad_bias.fill(T::ZERO);
            }
            Layer::Dense(l) => {
                l.grad_weights.fill(T::ZERO);
                l.grad_bias.fill(T::ZERO);
            }
            _ => {}
        }
    }

    /// Kind tag for the serialized layer table.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Conv(_) => "conv2d_same",
            Layer::Pool(_) => "maxpool2",
            Layer::Relu(_) => "relu",
            Layer::Dropout(_) => "dropout",
            Layer::Flatten(_) => "flatten",
            Layer::Dense(_) => "dense",
        }
    }
}
