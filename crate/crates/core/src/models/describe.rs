use std::fmt::Write;

use super::{
    count_flops, count_parameters, layer_costs, FlopConvention, NetworkSpec, REPORTED_FLOPS,
    REPORTED_PARAMETERS,
};
use crate::engine::{LayerSpec, Padding};
use crate::error::Result;

/// Table-style rows: each conv (with its activation and optional batchnorm)
/// collapses into one row, e.g. `("Convolution with BN", "3*3*64")`.
pub fn table_rows(spec: &NetworkSpec) -> Vec<(String, String)> {
    let mut rows = Vec::new();
    let layers = &spec.layers;
    let mut i = 0;
    while i < layers.len() {
        match &layers[i] {
            LayerSpec::Conv2d {
                kernel_h,
                kernel_w,
                out_channels,
                ..
            } => {
                let has_bn = layers[i + 1..]
                    .iter()
                    .take_while(|l| matches!(l, LayerSpec::Relu | LayerSpec::BatchNorm))
                    .any(|l| *l == LayerSpec::BatchNorm);
                let name = if has_bn { "Convolution with BN" } else { "Convolution" };
                rows.push((name.to_string(), format!("{kernel_h}*{kernel_w}*{out_channels}")));
            }
            LayerSpec::MaxPool2d { size, .. } => rows.push(("Max Pooling".into(), format!("{size}*{size}"))),
            LayerSpec::Dense { units } => rows.push((format!("Fully-connected-{units}"), String::new())),
            LayerSpec::Sigmoid => rows.push(("Sigmoid".into(), String::new())),
            LayerSpec::Dropout { rate } => rows.push(("Dropout".into(), format!("{rate}"))),
            _ => {}
        }
        i += 1;
    }
    rows
}

fn dims(d: &[usize]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x")
}

/// Stable plain-text report: layer table with shapes and costs, embedding
/// tap, parameter count and FLOPs under both conventions.
pub fn describe(spec: &NetworkSpec) -> Result<String> {
    let costs = layer_costs(spec)?;
    let mut s = String::new();
    writeln!(s, "network {}", spec.name).unwrap();
    writeln!(s, "input {}", dims(&spec.input_shape)).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "{:>3}  {:<28} {:<14} {:>12} {:>14}", "#", "layer", "output", "params", "macs").unwrap();
    for (l, c) in spec.layers.iter().zip(&costs) {
        let mark = if c.index == spec.embedding_layer { "  <- embedding" } else { "" };
        writeln!(
            s,
            "{:>3}  {:<28} {:<14} {:>12} {:>14}{mark}",
            c.index,
            l.to_string(),
            dims(&c.output_shape),
            c.params,
            c.macs
        )
        .unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "table:").unwrap();
    for (name, kernel) in table_rows(spec) {
        writeln!(s, "  {name:<24} {kernel}").unwrap();
    }
    writeln!(s).unwrap();

    let chain: Vec<String> = {
        let mut v: Vec<String> = vec![dims(&spec.input_shape[..2])];
        for (l, c) in spec.layers.iter().zip(&costs) {
            let spatial = matches!(
                l,
                LayerSpec::MaxPool2d { .. }
                    | LayerSpec::Conv2d {
                        padding: Padding::Valid,
                        ..
                    }
            );
            if spatial && c.output_shape.len() == 3 {
                let d = dims(&c.output_shape[..2]);
                if v.last() != Some(&d) {
                    v.push(d);
                }
            }
        }
        v
    };
    writeln!(s, "shape chain: {}", chain.join(" -> ")).unwrap();
    if let Ok(t) = spec.trunk_output_shape() {
        writeln!(s, "pre-bottleneck feature map: {}", dims(&t)).unwrap();
    }
    writeln!(
        s,
        "embedding: layer {} ({}) width {}",
        spec.embedding_layer,
        spec.layers[spec.embedding_layer].kind(),
        costs[spec.embedding_layer].output_shape.last().unwrap()
    )
    .unwrap();
    writeln!(s, "head width: {}", spec.head_width()).unwrap();

    let params = count_parameters(spec)?;
    writeln!(
        s,
        "parameters: {params} (reported 73.54M, {:+.3}%)",
        (params as f64 / REPORTED_PARAMETERS - 1.0) * 100.0
    )
    .unwrap();
    for conv in [FlopConvention::Mac, FlopConvention::MulPlusAdd] {
        let f = count_flops(spec, conv)?;
        writeln!(
            s,
            "flops[{conv}]: {f} ({:.2}M; {:.3}x the reported 360.72M)",
            f as f64 / 1e6,
            f as f64 / REPORTED_FLOPS
        )
        .unwrap();
    }
    writeln!(
        s,
        "note: the reported FLOP figure does not match either convention; it is shown for reference only"
    )
    .unwrap();
    Ok(s)
}
