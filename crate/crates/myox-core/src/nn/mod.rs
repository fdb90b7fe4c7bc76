//! Minimal dense/convolutional network stack with exact backpropagation.

pub mod adam;
pub mod layers;
pub mod loss;
pub mod model;
pub mod scalar;
pub mod tensor;

pub use adam::{lr_at_epoch, AdamState, EpochOutOfRange, BASE_LR};
pub use layers::{Conv2d, Dense, Dropout, Flatten, Layer, MaxPool2, Mode, NnError, Relu};
pub use loss::{softmax_rows, softmax_xent, LossOutput};
pub use model::{concat_columns, Model, ParamView, Variant, DEFAULT_C1X1, TEXTURE_FEATURES};
pub use scalar::Scalar;
pub use tensor::{Act, Mat, Tensor4};
