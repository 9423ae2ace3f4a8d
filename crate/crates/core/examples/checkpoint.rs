//! Uses the engine directly: builds a small network, trains it with Adam on
//! a toy task, saves a checkpoint and reloads it.
//!
//! cargo run --release --example checkpoint -- [path]

use mmaudio::engine::{multilabel_bce, AdamConfig, AdamState, Checkpoint, LayerSpec, Network, Tensor};
use mmaudio::seed;
use rand::Rng;

fn main() -> mmaudio::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "target/example.ckpt".into());
    let layers = [
        LayerSpec::Dense { units: 16 },
        LayerSpec::Relu,
        LayerSpec::BatchNorm,
        LayerSpec::Dense { units: 2 },
        LayerSpec::Sigmoid,
    ];
    let mut net = Network::<f32>::build(&layers, &[4], Default::default(), &mut seed::rng(1, "init"))?;
    let mut adam = AdamState::new(net.params().map(|p| &p.value), AdamConfig::default());

    // label 0: first coordinate positive; label 1: sum of the rest positive
    let mut rng = seed::rng(1, "data");
    let x: Vec<f32> = (0..64 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<f32> = x
        .chunks(4)
        .flat_map(|r| [(r[0] > 0.0) as u8 as f32, (r[1] + r[2] + r[3] > 0.0) as u8 as f32])
        .collect();
    let (x, y) = (Tensor::new(vec![64, 4], x)?, Tensor::new(vec![64, 2], y)?);
    let end = net.logits_end();
    for step in 0..=300 {
        net.zero_grad();
        let (z, trace) = net.forward_train(&x, end, &mut rng)?;
        let loss = multilabel_bce(&z, &y)?;
        net.backward(trace, loss.grad)?;
        let grads: Vec<Tensor<f32>> = net.params().map(|p| p.grad.clone()).collect();
        let grefs: Vec<&Tensor<f32>> = grads.iter().collect();
        let mut values: Vec<&mut Tensor<f32>> = net.params_mut().map(|p| &mut p.value).collect();
        adam.step(&mut values, &grefs, 1e-2)?;
        if step % 100 == 0 {
            println!("step {step:3}  loss {:.4}", loss.loss);
        }
    }

    Checkpoint::capture(&net, Some(&adam), 1, "toy".into()).save(&path)?;
    let ckpt = Checkpoint::load(&path)?;
    let mut copy = Network::<f32>::build(&layers, &[4], Default::default(), &mut seed::rng(2, "init"))?;
    ckpt.restore(&mut copy)?;
    let same = copy.infer(&x)? == net.infer(&x)?;
    println!("saved {path} ({} tensors); reloaded network gives identical outputs: {same}", ckpt.tensors.len());
    Ok(())
}
