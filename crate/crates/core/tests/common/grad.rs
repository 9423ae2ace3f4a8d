//! Central finite-difference checks of every differentiable op in f64.
//! Each function panics on a failing seed and returns its worst error.

use mmaudio::engine::*;
use mmaudio::seed;
use rand::Rng;

pub const SEEDS: u64 = 20;
const H: f64 = 1e-6;
pub const TOL: f64 = 1e-4;

fn randn(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn t(dims: &[usize], data: Vec<f64>) -> Tensor<f64> {
    Tensor::new(dims.to_vec(), data).unwrap()
}

fn numeric(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + H;
            let up = f(&x);
            x[i] = orig - H;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn rel_err(a: &[f64], n: &[f64]) -> f64 {
    assert_eq!(a.len(), n.len());
    let diff: f64 = a.iter().zip(n).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt() + n.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn check(op: &str, seed: u64, what: &str, analytic: &[f64], numeric: &[f64]) -> f64 {
    let e = rel_err(analytic, numeric);
    assert!(e < TOL, "{op} seed {seed} d/d{what}: relative error {e:e}");
    e
}

fn report(op: &str, worst: f64) {
    println!("gradcheck {op:<28} {SEEDS} seeds, worst relative error {worst:.2e}");
}

pub fn conv2d() -> f64 {
    let mut worst = 0f64;
    for s in 0..SEEDS {
        let mut rng = seed::rng(s, "gradcheck/conv");
        let (n, h, w) = (2, rng.gen_range(4..8), rng.gen_range(4..7));
        let (cin, cout) = (rng.gen_range(1..4), rng.gen_range(1..4));
        // cycle through same/valid, strides, pointwise and full-extent kernels
        let (kh, kw, stride, pad) = match s % 5 {
            0 => (3, 3, 1, Padding::Same),
            1 => (3, 2, 2, Padding::Same),
            2 => (2, 3, 1, Padding::Valid),
            3 => (1, 1, 1, Padding::Same),
            _ => (h, w, 1, Padding::Valid),
        };
        let xd = [n, h, w, cin];
        let wd = [kh, kw, cin, cout];
        let x = randn(&mut rng, xd.iter().product());
        let wv = randn(&mut rng, wd.iter().product());
        let b = randn(&mut rng, cout);
        let y = conv2d_forward(&t(&xd, x.clone()), &t(&wd, wv.clone()), &t(&[cout], b.clone()), stride, pad).unwrap();
        let r = randn(&mut rng, y.len());
        let g = conv2d_backward(&t(&xd, x.clone()), &t(&wd, wv.clone()), &t(y.dims(), r.clone()), stride, pad).unwrap();
        let obj = |x: &[f64], wv: &[f64], b: &[f64]| {
            dot(conv2d_forward(&t(&xd, x.to_vec()), &t(&wd, wv.to_vec()), &t(&[cout], b.to_vec()), stride, pad).unwrap().data(), &r)
        };
        worst = worst.max(check("conv2d", s, "x", g.grad_x.data(), &numeric(&x, |v| obj(v, &wv, &b))));
        worst = worst.max(check("conv2d", s, "w", g.grad_w.data(), &numeric(&wv, |v| obj(&x, v, &b))));
        worst = worst.max(check("conv2d", s, "b", g.grad_b.data(), &numeric(&b, |v| obj(&x, &wv, v))));
    }
    report("conv2d", worst);
    worst
}

pub fn maxpool2d() -> f64 {
    let mut worst = 0f64;
    for s in 0..SEEDS {
        let mut rng = seed::rng(s, "gradcheck/pool");
        let dims = [2, rng.gen_range(2..7), rng.gen_range(2..7), rng.gen_range(1..4)];
        let x = randn(&mut rng, dims.iter().product());
        let p = maxpool2d_forward(&t(&dims, x.clone()), 2, 2).unwrap();
        let r = randn(&mut rng, p.output.len());
        let g = maxpool2d_backward(&t(p.output.dims(), r.clone()), &p.argmax, &dims).unwrap();
        let num = numeric(&x, |v| dot(maxpool2d_forward(&t(&dims, v.to_vec()), 2, 2).unwrap().output.data(), &r));
        worst = worst.max(check("maxpool2d", s, "x", g.data(), &num));
    }
    report("maxpool2d", worst);
    worst
}

pub fn batchnorm_train() -> f64 {
    let mut worst = 0f64;
    let cfg = BatchNormConfig::default();
    for s in 0..SEEDS {
        let mut rng = seed::rng(s, "gradcheck/bn");
        let c = rng.gen_range(1..4);
        let dims = [rng.gen_range(2..4), rng.gen_range(1..4), rng.gen_range(1..4), c];
        let x = randn(&mut rng, dims.iter().product());
        let gamma: Vec<f64> = randn(&mut rng, c).iter().map(|v| v + 1.5).collect();
        let beta = randn(&mut rng, c);
        let fwd = |x: &[f64], ga: &[f64], be: &[f64]| {
            let (mut rm, mut rv) = (Tensor::zeros(&[c]), Tensor::filled(&[c], 1.0));
            batchnorm_forward(&t(&dims, x.to_vec()), &t(&[c], ga.to_vec()), &t(&[c], be.to_vec()), &mut rm, &mut rv, Mode::Train, cfg)
                .unwrap()
        };
        let (y, cache) = fwd(&x, &gamma, &beta);
        let r = randn(&mut rng, y.len());
        let g = batchnorm_backward(&t(&dims, r.clone()), &t(&[c], gamma.clone()), &cache).unwrap();
        let obj = |x: &[f64], ga: &[f64], be: &[f64]| dot(fwd(x, ga, be).0.data(), &r);
        worst = worst.max(check("batchnorm", s, "x", g.grad_x.data(), &numeric(&x, |v| obj(v, &gamma, &beta))));
        worst = worst.max(check("batchnorm", s, "gamma", g.grad_gamma.data(), &numeric(&gamma, |v| obj(&x, v, &beta))));
        worst = worst.max(check("batchnorm", s, "beta", g.grad_beta.data(), &numeric(&beta, |v| obj(&x, &gamma, v))));
    }
    report("batchnorm (train mode)", worst);
    worst
}

pub fn dense() -> f64 {
    let mut worst = 0f64;
    for s in 0..SEEDS {
        let mut rng = seed::rng(s, "gradcheck/dense");
        let (n, fin, fout) = (rng.gen_range(1..4), rng.gen_range(1..6), rng.gen_range(1..6));
        let x = randn(&mut rng, n * fin);
        let w = randn(&mut rng, fin * fout);
        let b = randn(&mut rng, fout);
        let r = randn(&mut rng, n * fout);
        let obj = |x: &[f64], w: &[f64], b: &[f64]| {
            dot(dense_forward(&t(&[n, fin], x.to_vec()), &t(&[fin, fout], w.to_vec()), &t(&[fout], b.to_vec())).unwrap().data(), &r)
        };
        let g = dense_backward(&t(&[n, fin], x.clone()), &t(&[fin, fout], w.clone()), &t(&[n, fout], r.clone())).unwrap();
        worst = worst.max(check("dense", s, "x", g.grad_x.data(), &numeric(&x, |v| obj(v, &w, &b))));
        worst = worst.max(check("dense", s, "w", g.grad_w.data(), &numeric(&w, |v| obj(&x, v, &b))));
        worst = worst.max(check("dense", s, "b", g.grad_b.data(), &numeric(&b, |v| obj(&x, &w, v))));
    }
    report("dense", worst);
    worst
}

pub fn activations_and_dropout() -> f64 {
    let (mut wr, mut ws, mut wd) = (0f64, 0f64, 0f64);
    for s in 0..SEEDS {
        let mut rng = seed::rng(s, "gradcheck/act");
        let n = rng.gen_range(3..20);
        // keep relu inputs away from the kink
        let x: Vec<f64> = randn(&mut rng, n).iter().map(|v| if v.abs() < 0.05 { v + 0.1 } else { *v }).collect();
        let r = randn(&mut rng, n);
        let y = relu(&t(&[n], x.clone()));
        let g = relu_backward(&y, &t(&[n], r.clone()));
        wr = wr.max(check("relu", s, "x", g.data(), &numeric(&x, |v| dot(relu(&t(&[n], v.to_vec())).data(), &r))));
        let y = sigmoid(&t(&[n], x.clone()));
        let g = sigmoid_backward(&y, &t(&[n], r.clone()));
        ws = ws.max(check("sigmoid", s, "x", g.data(), &numeric(&x, |v| dot(sigmoid(&t(&[n], v.to_vec())).data(), &r))));
        let mask: Vec<f64> = dropout_mask(n, 0.4, &mut rng).unwrap();
        let g = apply_mask(&t(&[n], r.clone()), &mask);
        wd = wd.max(check("dropout", s, "x", g.data(), &numeric(&x, |v| dot(apply_mask(&t(&[n], v.to_vec()), &mask).data(), &r))));
    }
    report("relu", wr);
    report("sigmoid", ws);
    report("dropout (fixed mask)", wd);
    wr.max(ws).max(wd)
}

pub fn losses_and_penalty() -> f64 {
    let (mut wb, mut wc, mut wl) = (0f64, 0f64, 0f64);
    for s in 0..SEEDS {
        let mut rng = seed::rng(s, "gradcheck/loss");
        let (n, k) = (rng.gen_range(1..5), rng.gen_range(2..7));
        let z: Vec<f64> = randn(&mut rng, n * k).iter().map(|v| v * 4.0).collect();
        let y: Vec<f64> = (0..n * k).map(|_| f64::from(rng.gen_bool(0.3) as u8)).collect();
        let out = multilabel_bce(&t(&[n, k], z.clone()), &t(&[n, k], y.clone())).unwrap();
        let num = numeric(&z, |v| multilabel_bce(&t(&[n, k], v.to_vec()), &t(&[n, k], y.clone())).unwrap().loss);
        wb = wb.max(check("multilabel_bce", s, "z", out.grad.data(), &num));
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let out = softmax_cross_entropy(&t(&[n, k], z.clone()), &labels).unwrap();
        let num = numeric(&z, |v| softmax_cross_entropy(&t(&[n, k], v.to_vec()), &labels).unwrap().loss);
        wc = wc.max(check("softmax_cross_entropy", s, "z", out.grad.data(), &num));
        let w = randn(&mut rng, k);
        let lambda = rng.gen_range(0.1..2.0);
        let mut g = Tensor::zeros(&[k]);
        l2_penalty(&[&t(&[k], w.clone())], &mut [&mut g], lambda);
        let num = numeric(&w, |v| l2_penalty(&[&t(&[k], v.to_vec())], &mut [&mut Tensor::zeros(&[k])], lambda));
        wl = wl.max(check("l2_penalty", s, "w", g.data(), &num));
    }
    report("multilabel_bce", wb);
    report("softmax_cross_entropy", wc);
    report("l2_penalty", wl);
    wb.max(wc).max(wl)
}

pub fn network_end_to_end() -> f64 {
    let layers = vec![
        LayerSpec::Conv2d { kernel_h: 3, kernel_w: 3, out_channels: 3, stride: 1, padding: Padding::Same },
        LayerSpec::Relu,
        LayerSpec::BatchNorm,
        LayerSpec::MaxPool2d { size: 2, stride: 2 },
        LayerSpec::Conv2d { kernel_h: 2, kernel_w: 2, out_channels: 4, stride: 1, padding: Padding::Valid },
        LayerSpec::Relu,
        LayerSpec::Flatten,
        LayerSpec::Dense { units: 5 },
        LayerSpec::Dropout { rate: 0.25 },
        LayerSpec::Dense { units: 3 },
        LayerSpec::Sigmoid,
    ];
    let input = [6, 5, 2];
    let mut worst = 0f64;
    for s in 0..SEEDS {
        let mut rng = seed::rng(s, "gradcheck/net");
        let mut net: Network<f64> = Network::build(&layers, &input, BatchNormConfig::default(), &mut rng).unwrap();
        let n = 3;
        let x = randn(&mut rng, n * input.iter().product::<usize>());
        let y: Vec<f64> = (0..n * 3).map(|_| f64::from(rng.gen_bool(0.5) as u8)).collect();
        let end = net.logits_end();
        let loss = |net: &mut Network<f64>, x: &[f64]| {
            let mut r = seed::rng(s, "gradcheck/net/dropout");
            let xt = t(&[n, 6, 5, 2], x.to_vec());
            let (z, _) = net.forward_train(&xt, end, &mut r).unwrap();
            multilabel_bce(&z, &t(&[n, 3], y.clone())).unwrap().loss
        };
        net.zero_grad();
        let mut r = seed::rng(s, "gradcheck/net/dropout");
        let (z, trace) = net.forward_train(&t(&[n, 6, 5, 2], x.clone()), end, &mut r).unwrap();
        let out = multilabel_bce(&z, &t(&[n, 3], y.clone())).unwrap();
        let gx = net.backward(trace, out.grad).unwrap();
        worst = worst.max(check("network", s, "x", gx.data(), &numeric(&x, |v| loss(&mut net.clone(), v))));
        let names: Vec<String> = net.params().map(|p| p.name.clone()).collect();
        for name in names {
            let p = net.params().find(|p| p.name == name).unwrap();
            let (value, grad) = (p.value.data().to_vec(), p.grad.data().to_vec());
            let num = numeric(&value, |v| {
                let mut probe = net.clone();
                let q = probe.params_mut().find(|q| q.name == name).unwrap();
                q.value.data_mut().copy_from_slice(v);
                loss(&mut probe, &x)
            });
            worst = worst.max(check("network", s, &name, &grad, &num));
        }
    }
    report("network (all params)", worst);
    worst
}
