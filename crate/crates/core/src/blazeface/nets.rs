//! Front (128 px) and rear (256 px) BlazeFace backbones. Record names follow
//! the widely used PyTorch port: `backbone1.2.convs.0.weight` is the
//! depthwise kernel of the first block, `convs.1` its pointwise projection.

use super::BlazeKind;
use crate::nn::{LayerSpec, NetworkSpec, Op, INPUT};

struct Builder {
    layers: Vec<LayerSpec>,
}

impl Builder {
    fn last(&self) -> String {
        self.layers.last().map(|l| l.name.clone()).unwrap_or_else(|| INPUT.into())
    }

    fn push(&mut self, layer: LayerSpec) -> String {
        self.layers.push(layer);
        self.last()
    }

    /// Depthwise 3x3 + pointwise projection with a max-pooled, channel
    /// zero-extended skip when striding.
    fn blaze_block(&mut self, name: &str, in_ch: usize, out_ch: usize, stride: usize) -> String {
        let input = self.last();
        if stride == 2 {
            self.push(
                LayerSpec::new(format!("{name}.pad"), Op::Pad { top: 0, bottom: 2, left: 0, right: 2 })
                    .from(input.clone()),
            );
            self.push(LayerSpec::new(
                format!("{name}.convs.0"),
                Op::DepthwiseConv2d { channels: in_ch, kernel: 3, stride: 2, pad: 0 },
            ));
            self.push(LayerSpec::new(
                format!("{name}.convs.1"),
                Op::Conv2d { in_ch, out_ch, kernel: 1, stride: 1, pad: 0 },
            ));
            let main = self.last();
            self.push(
                LayerSpec::new(format!("{name}.max_pool"), Op::MaxPool { kernel: 2, stride: 2, ceil_mode: false })
                    .from(input),
            );
            let skip = self.last();
            self.push(LayerSpec::new(format!("{name}.add"), Op::AddResidual { skip }).from(main));
            return self.push(LayerSpec::new(format!("{name}.act"), Op::Relu));
        }
        let skip = input;
        self.push(LayerSpec::new(
            format!("{name}.convs.0"),
            Op::DepthwiseConv2d { channels: in_ch, kernel: 3, stride: 1, pad: 1 },
        ));
        self.push(LayerSpec::new(
            format!("{name}.convs.1"),
            Op::Conv2d { in_ch, out_ch, kernel: 1, stride: 1, pad: 0 },
        ));
        self.push(LayerSpec::new(format!("{name}.add"), Op::AddResidual { skip }));
        self.push(LayerSpec::new(format!("{name}.act"), Op::Relu))
    }

    fn stem(&mut self, prefix: &str) {
        self.push(LayerSpec::new("input_pad", Op::Pad { top: 1, bottom: 2, left: 1, right: 2 }));
        self.push(LayerSpec::new(
            format!("{prefix}.0"),
            Op::Conv2d { in_ch: 3, out_ch: 24, kernel: 5, stride: 2, pad: 0 },
        ));
        self.push(LayerSpec::new(format!("{prefix}.1"), Op::Relu));
    }

    fn head(&mut self, name: &str, from: &str, in_ch: usize, out_ch: usize) {
        self.push(
            LayerSpec::new(name, Op::Conv2d { in_ch, out_ch, kernel: 1, stride: 1, pad: 0 })
                .from(from),
        );
    }
}

/// Channel plan `(in, out, stride)` of a block list.
fn plan(blocks: &[(usize, usize, usize)], b: &mut Builder, prefix: &str, first: usize) -> String {
    let mut last = b.last();
    for (i, &(cin, cout, s)) in blocks.iter().enumerate() {
        last = b.blaze_block(&format!("{prefix}.{}", first + i), cin, cout, s);
    }
    last
}

pub fn blazeface_spec(kind: BlazeKind) -> NetworkSpec {
    let mut b = Builder { layers: Vec::new() };
    let (fine, coarse, fine_ch) = match kind {
        BlazeKind::Front => {
            b.stem("backbone1");
            let fine = plan(
                &[
                    (24, 24, 1),
                    (24, 28, 1),
                    (28, 32, 2),
                    (32, 36, 1),
                    (36, 42, 1),
                    (42, 48, 2),
                    (48, 56, 1),
                    (56, 64, 1),
                    (64, 72, 1),
                    (72, 80, 1),
                    (80, 88, 1),
                ],
                &mut b,
                "backbone1",
                2,
            );
            let coarse = plan(
                &[(88, 96, 2), (96, 96, 1), (96, 96, 1), (96, 96, 1), (96, 96, 1)],
                &mut b,
                "backbone2",
                0,
            );
            (fine, coarse, 88)
        }
        BlazeKind::Rear => {
            b.stem("backbone");
            let mut blocks = vec![(24, 24, 1); 7];
            blocks.push((24, 24, 2));
            blocks.extend([(24, 24, 1); 7]);
            blocks.push((24, 48, 2));
            blocks.extend([(48, 48, 1); 7]);
            blocks.push((48, 96, 2));
            blocks.extend([(96, 96, 1); 7]);
            let fine = plan(&blocks, &mut b, "backbone", 2);
            b.push(
                LayerSpec::new("final.pad", Op::Pad { top: 0, bottom: 2, left: 0, right: 2 })
                    .from(fine.clone()),
            );
            b.push(LayerSpec::new(
                "final.convs.0",
                Op::DepthwiseConv2d { channels: 96, kernel: 3, stride: 2, pad: 0 },
            ));
            b.push(LayerSpec::new(
                "final.convs.1",
                Op::Conv2d { in_ch: 96, out_ch: 96, kernel: 1, stride: 1, pad: 0 },
            ));
            let coarse = b.push(LayerSpec::new("final.act", Op::Relu));
            (fine, coarse, 96)
        }
    };
    b.head("classifier_8", &fine, fine_ch, 2);
    b.head("classifier_16", &coarse, 96, 6);
    b.head("regressor_8", &fine, fine_ch, 32);
    b.head("regressor_16", &coarse, 96, 96);
    NetworkSpec {
        name: match kind {
            BlazeKind::Front => "blazeface_front".into(),
            BlazeKind::Rear => "blazeface_rear".into(),
        },
        layers: b.layers,
        outputs: ["classifier_8", "classifier_16", "regressor_8", "regressor_16"]
            .iter()
            .map(|n| (n.to_string(), n.to_string()))
            .collect(),
    }
}
