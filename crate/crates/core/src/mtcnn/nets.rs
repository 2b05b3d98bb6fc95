//! P-Net, R-Net and O-Net topologies. Record names follow the common
//! PyTorch port (`conv1.weight`, `prelu1.weight`, `dense4.weight`, ...);
//! dense layers read their input flattened in `(c, h, w)` order.

use crate::nn::{LayerSpec, NetworkSpec, Op};

fn conv(name: &str, in_ch: usize, out_ch: usize, kernel: usize) -> LayerSpec {
    LayerSpec::new(name, Op::Conv2d { in_ch, out_ch, kernel, stride: 1, pad: 0 })
}

fn prelu(name: &str, channels: usize) -> LayerSpec {
    LayerSpec::new(name, Op::PRelu { channels })
}

fn pool(name: &str, kernel: usize, stride: usize) -> LayerSpec {
    LayerSpec::new(name, Op::MaxPool { kernel, stride, ceil_mode: true })
}

fn dense(name: &str, in_features: usize, out_features: usize) -> LayerSpec {
    LayerSpec::new(name, Op::Dense { in_features, out_features })
}

fn taps(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(t, l)| (t.to_string(), l.to_string())).collect()
}

/// Fully convolutional proposal net: 12x12 receptive field, stride 2.
pub fn pnet_spec() -> NetworkSpec {
    NetworkSpec {
        name: "pnet".into(),
        layers: vec![
            conv("conv1", 3, 10, 3),
            prelu("prelu1", 10),
            pool("pool1", 2, 2),
            conv("conv2", 10, 16, 3),
            prelu("prelu2", 16),
            conv("conv3", 16, 32, 3),
            prelu("prelu3", 32),
            conv("conv4_1", 32, 2, 1),
            LayerSpec::new("softmax4_1", Op::SoftmaxChannel),
            conv("conv4_2", 32, 4, 1).from("prelu3"),
        ],
        outputs: taps(&[("prob", "softmax4_1"), ("reg", "conv4_2")]),
    }
}

/// Refinement net on 24x24 crops.
pub fn rnet_spec() -> NetworkSpec {
    NetworkSpec {
        name: "rnet".into(),
        layers: vec![
            conv("conv1", 3, 28, 3),
            prelu("prelu1", 28),
            pool("pool1", 3, 2),
            conv("conv2", 28, 48, 3),
            prelu("prelu2", 48),
            pool("pool2", 3, 2),
            conv("conv3", 48, 64, 2),
            prelu("prelu3", 64),
            dense("dense4", 576, 128),
            prelu("prelu4", 128),
            dense("dense5_1", 128, 2),
            LayerSpec::new("softmax5_1", Op::SoftmaxChannel),
            dense("dense5_2", 128, 4).from("prelu4"),
        ],
        outputs: taps(&[("prob", "softmax5_1"), ("reg", "dense5_2")]),
    }
}

/// Output net on 48x48 crops; `landmarks` holds five x values then five y
/// values, relative to the crop box.
pub fn onet_spec() -> NetworkSpec {
    NetworkSpec {
        name: "onet".into(),
        layers: vec![
            conv("conv1", 3, 32, 3),
            prelu("prelu1", 32),
            pool("pool1", 3, 2),
            conv("conv2", 32, 64, 3),
            prelu("prelu2", 64),
            pool("pool2", 3, 2),
            conv("conv3", 64, 64, 3),
            prelu("prelu3", 64),
            pool("pool3", 2, 2),
            conv("conv4", 64, 128, 2),
            prelu("prelu4", 128),
            dense("dense5", 1152, 256),
            prelu("prelu5", 256),
            dense("dense6_1", 256, 2),
            LayerSpec::new("softmax6_1", Op::SoftmaxChannel),
            dense("dense6_2", 256, 4).from("prelu5"),
            dense("dense6_3", 256, 10).from("prelu5"),
        ],
        outputs: taps(&[
            ("prob", "softmax6_1"),
            ("reg", "dense6_2"),
            ("landmarks", "dense6_3"),
        ]),
    }
}
