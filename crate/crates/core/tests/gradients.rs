//! Analytic gradients against finite differences and dense-expansion oracles.

use mhinr_core::models::{Model, ModelSpec, Network};
use mhinr_core::nn::{
    init_uniform, mse_loss, Activation, DenseLayer, Rng, SparseHeadLayer, Tensor,
};
use mhinr_core::signal::{HeadGrid, Image};
use proptest::prelude::*;

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn random_image(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = Rng::new(seed);
    Image::from_fn(h, w, |_, _| rng.uniform(0.0, 1.0)).unwrap()
}

fn loss_of(model: &mut Model, coords: &Tensor, targets: &Tensor) -> f64 {
    let pred = model.forward(coords).unwrap();
    mse_loss(&pred, targets).unwrap().0
}

/// Relative error, with an absolute floor for gradients that are numerically zero.
fn grad_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-7 {
        (analytic - numeric).abs() / 1e-7
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Worst error over every trainable parameter of `model` fitted to `img`.
fn worst_gradient_error(model: &mut Model, img: &Image) -> f64 {
    let grid = model
        .spec()
        .head_grid()
        .cells(img.height(), img.width())
        .unwrap();
    let coords = grid.local_coordinates();
    let targets = grid.targets(img).unwrap();

    model.zero_grad();
    let pred = model.forward(&coords).unwrap();
    let (_, g) = mse_loss(&pred, &targets).unwrap();
    model.backward(&g).unwrap();
    let analytic: Vec<Vec<f64>> = model.params().iter().map(|p| p.grad().to_vec()).collect();

    let mut worst = 0.0f64;
    for (pi, grads) in analytic.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let orig = model.params()[pi].values()[i];
            model.params_mut()[pi].values_mut()[i] = orig + H;
            let up = loss_of(model, &coords, &targets);
            model.params_mut()[pi].values_mut()[i] = orig - H;
            let down = loss_of(model, &coords, &targets);
            model.params_mut()[pi].values_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * H);
            worst = worst.max(grad_error(a, numeric));
        }
    }
    worst
}

#[test]
fn three_layer_relu_net_matches_finite_differences() {
    // 2 -> 4 -> 4 -> 1 head: 12 + 20 + 5 = 37 parameters
    for seed in 0..5 {
        let spec = ModelSpec::multi_head(HeadGrid::single(), 4)
            .with_hidden(vec![4, 4])
            .with_seed(seed);
        let mut model = Model::build(&spec).unwrap();
        assert!(model.param_count() <= 100);
        let err = worst_gradient_error(&mut model, &random_image(4, 4, seed));
        assert!(err < REL_TOL, "seed {seed}: {err}");
    }
}

#[test]
fn multi_head_net_matches_finite_differences() {
    let spec = ModelSpec::multi_head(HeadGrid::new(2, 2), 3)
        .with_hidden(vec![5, 5, 5])
        .with_seed(21);
    let mut model = Model::build(&spec).unwrap();
    let err = worst_gradient_error(&mut model, &random_image(4, 6, 1));
    assert!(err < REL_TOL, "{err}");
}

#[test]
fn siren_matches_finite_differences() {
    let mut model =
        Model::build(&ModelSpec::siren(4).with_hidden(vec![4, 4]).with_seed(2)).unwrap();
    let err = worst_gradient_error(&mut model, &random_image(3, 3, 2));
    assert!(err < REL_TOL, "{err}");
}

#[test]
fn fourier_feature_matches_finite_differences() {
    let mut model = Model::build(
        &ModelSpec::fourier_feature(4, 3)
            .with_hidden(vec![4, 4])
            .with_seed(3),
    )
    .unwrap();
    let err = worst_gradient_error(&mut model, &random_image(3, 4, 3));
    assert!(err < REL_TOL, "{err}");
}

#[test]
fn gradient_is_zero_at_the_optimum() {
    let mut rng = Rng::new(5);
    let mut layer = DenseLayer::uniform(3, 2, 1.0, 1.0, Activation::Identity, &mut rng).unwrap();
    let x = init_uniform(3, 4, -1.0, 1.0, &mut rng).unwrap();
    let y = layer.forward(&x).unwrap();
    let (loss, g) = mse_loss(&y, &y.clone()).unwrap();
    assert_eq!(loss, 0.0);
    let dx = layer.backward(&g).unwrap();
    assert!(layer.weight().grad().iter().all(|&v| v == 0.0));
    assert!(layer.bias().grad().iter().all(|&v| v == 0.0));
    assert!(dx.values().iter().all(|&v| v == 0.0));
}

/// Expands a sparse head layer into an `M × width` dense weight matrix.
fn dense_expansion(layer: &SparseHeadLayer) -> Tensor {
    let mut w = Tensor::zeros(layer.head_count(), layer.body_width());
    for m in 0..layer.head_count() {
        for (j, &idx) in layer.head_indices(m).iter().enumerate() {
            w.set(m, idx, layer.weight().get(m, j));
        }
    }
    w
}

fn naive_affine(w: &Tensor, b: &Tensor, x: &Tensor) -> Vec<f64> {
    let mut out = vec![0.0; w.rows() * x.cols()];
    for o in 0..w.rows() {
        for c in 0..x.cols() {
            let mut s = b.values()[o];
            for i in 0..w.cols() {
                s += w.get(o, i) * x.get(i, c);
            }
            out[o * x.cols() + c] = s;
        }
    }
    out
}

#[test]
fn sparse_forward_matches_dense_expansion() {
    let mut rng = Rng::new(30);
    let mut layer = SparseHeadLayer::random(8, 10, 3, 1.0, &mut rng).unwrap();
    let z = init_uniform(10, 5, -2.0, 2.0, &mut rng).unwrap();
    let out = layer.forward(&z).unwrap();
    let want = naive_affine(&dense_expansion(&layer), layer.bias(), &z);
    for (a, b) in out.values().iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn sparse_weight_gradients_match_dense_expansion_and_finite_differences() {
    let mut rng = Rng::new(31);
    let mut layer = SparseHeadLayer::random(6, 9, 4, 1.0, &mut rng).unwrap();
    let z = init_uniform(9, 7, -1.0, 1.0, &mut rng).unwrap();
    let target = init_uniform(6, 7, -1.0, 1.0, &mut rng).unwrap();

    let out = layer.forward(&z).unwrap();
    let (_, g) = mse_loss(&out, &target).unwrap();
    let dz = layer.backward(&g).unwrap();

    // dense oracle gradient: G Zᵀ for weights, Wᵀ G for inputs
    let wd = dense_expansion(&layer);
    for m in 0..6 {
        for (j, &idx) in layer.head_indices(m).iter().enumerate() {
            let mut dense = 0.0;
            for b in 0..7 {
                dense += g.get(m, b) * z.get(idx, b);
            }
            assert!((layer.weight().grad()[m * 4 + j] - dense).abs() < 1e-12);

            // finite difference through the dense expansion
            let eval = |delta: f64| {
                let mut w = wd.clone();
                w.set(m, idx, w.get(m, idx) + delta);
                let pred = Tensor::from_vec(6, 7, naive_affine(&w, layer.bias(), &z)).unwrap();
                mse_loss(&pred, &target).unwrap().0
            };
            let fd = (eval(H) - eval(-H)) / (2.0 * H);
            assert!(grad_error(layer.weight().grad()[m * 4 + j], fd) < REL_TOL);
        }
    }
    for i in 0..9 {
        for b in 0..7 {
            let mut s = 0.0;
            for m in 0..6 {
                s += wd.get(m, i) * g.get(m, b);
            }
            assert!((dz.get(i, b) - s).abs() < 1e-12);
        }
    }
}

/// Sparse layer with full sorted index rows next to the dense layer it equals.
fn full_sparse_and_dense(heads: usize, width: usize, seed: u64) -> (SparseHeadLayer, DenseLayer) {
    let mut rng = Rng::new(seed);
    let w = init_uniform(heads, width, -1.0, 1.0, &mut rng).unwrap();
    let b = init_uniform(heads, 1, -1.0, 1.0, &mut rng).unwrap();
    let indices = (0..heads).flat_map(|_| 0..width).collect();
    let sparse = SparseHeadLayer::new(width, indices, w.clone(), b.clone()).unwrap();
    let dense = DenseLayer::new(w, b, Activation::Identity).unwrap();
    (sparse, dense)
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{x} vs {y}");
    }
}

#[test]
fn single_head_full_alpha_equals_dense_identity_layer() {
    let (mut sparse, mut dense) = full_sparse_and_dense(1, 6, 40);
    let z = init_uniform(6, 3, -1.0, 1.0, &mut Rng::new(41)).unwrap();
    assert_close(
        sparse.forward(&z).unwrap().values(),
        dense.forward(&z).unwrap().values(),
        1e-12,
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sparse_with_full_alpha_equals_dense(
        heads in 1usize..6,
        width in 1usize..12,
        batch in 1usize..9,
        seed in any::<u64>(),
    ) {
        let (mut sparse, mut dense) = full_sparse_and_dense(heads, width, seed);
        let mut rng = Rng::new(seed ^ 0x5eed);
        let z = init_uniform(width, batch, -1.0, 1.0, &mut rng).unwrap();
        let target = init_uniform(heads, batch, -1.0, 1.0, &mut rng).unwrap();

        let ys = sparse.forward(&z).unwrap();
        let yd = dense.forward(&z).unwrap();
        assert_close(ys.values(), yd.values(), 1e-12);

        let (_, g) = mse_loss(&ys, &target).unwrap();
        let dzs = sparse.backward(&g).unwrap();
        let dzd = dense.backward(&g).unwrap();
        assert_close(dzs.values(), dzd.values(), 1e-12);
        assert_close(sparse.weight().grad(), dense.weight().grad(), 1e-12);
        assert_close(sparse.bias().grad(), dense.bias().grad(), 1e-12);
    }

    #[test]
    fn random_relu_nets_match_finite_differences(seed in any::<u64>()) {
        let spec = ModelSpec::multi_head(HeadGrid::new(1, 2), 2)
            .with_hidden(vec![3, 4])
            .with_seed(seed);
        let mut model = Model::build(&spec).unwrap();
        let err = worst_gradient_error(&mut model, &random_image(3, 4, seed));
        prop_assert!(err < REL_TOL, "{}", err);
    }
}

#[test]
fn head_gradients_are_local_to_their_cell() {
    let spec = ModelSpec::multi_head(HeadGrid::new(2, 3), 4)
        .with_hidden(vec![6, 6])
        .with_seed(50);
    let img = random_image(4, 6, 50);
    let grid = spec.head_grid().cells(4, 6).unwrap();

    let grads_for = |img: &Image| {
        let mut model = Model::build(&spec).unwrap();
        let pred = model.forward(&grid.local_coordinates()).unwrap();
        let (_, g) = mse_loss(&pred, &grid.targets(img).unwrap()).unwrap();
        model.backward(&g).unwrap();
        let p = model.params();
        let n = p.len();
        let body: Vec<f64> = p[..n - 2].iter().flat_map(|t| t.grad().to_vec()).collect();
        (body, p[n - 2].grad().to_vec(), p[n - 1].grad().to_vec())
    };

    let (body_a, w_a, b_a) = grads_for(&img);
    // perturb the pixels of cell (2, 2) only
    let (l, k) = (2, 2);
    let perturbed = Image::from_fn(4, 6, |r, c| {
        let in_cell = r / 2 == l - 1 && c / 2 == k - 1;
        if in_cell {
            1.0 - img.get(r, c)
        } else {
            img.get(r, c)
        }
    })
    .unwrap();
    let (body_b, w_b, b_b) = grads_for(&perturbed);

    let owner = grid.head_index(l, k);
    for m in 0..grid.head_count() {
        let same_w = w_a[m * 4..(m + 1) * 4] == w_b[m * 4..(m + 1) * 4];
        let same_b = b_a[m] == b_b[m];
        if m == owner {
            assert!(!same_b);
        } else {
            assert!(same_w && same_b, "head {m} changed");
        }
    }
    assert_ne!(body_a, body_b);
}

#[test]
fn single_head_model_is_a_plain_mlp() {
    let spec = ModelSpec::multi_head(HeadGrid::single(), 32)
        .with_hidden(vec![32; 4])
        .with_seed(60);
    let mut model = Model::build(&spec).unwrap();
    let Network::MultiHead(mh) = model.network() else {
        unreachable!()
    };

    // the same weights arranged as an ordinary dense stack
    let mut layers: Vec<DenseLayer> = mh.body.layers().to_vec();
    let order = mh.heads.head_indices(0);
    let mut w = Tensor::zeros(1, 32);
    for (j, &i) in order.iter().enumerate() {
        w.set(0, i, mh.heads.weight().get(0, j));
    }
    layers.push(DenseLayer::new(w, mh.heads.bias().clone(), Activation::Identity).unwrap());

    let coords = init_uniform(2, 17, -1.0, 1.0, &mut Rng::new(61)).unwrap();
    let mut h = coords.clone();
    for layer in &mut layers {
        h = layer.forward(&h).unwrap();
    }
    assert_close(model.forward(&coords).unwrap().values(), h.values(), 1e-12);
}

#[test]
fn cellwise_forward_matches_composite_oracle() {
    let spec = ModelSpec::multi_head(HeadGrid::new(4, 4), 7)
        .with_hidden(vec![16, 16, 16, 16])
        .with_seed(70);
    let model = Model::build(&spec).unwrap();
    let Network::MultiHead(mh) = model.network() else {
        unreachable!()
    };

    let coords = init_uniform(2, 9, -1.0, 1.0, &mut Rng::new(71)).unwrap();
    // ψ by naive loops
    let mut h = coords.clone();
    for layer in mh.body.layers() {
        let pre = naive_affine(layer.weight(), layer.bias(), &h);
        let act: Vec<f64> = pre.iter().map(|&v| v.max(0.0)).collect();
        h = Tensor::from_vec(layer.out_width(), h.cols(), act).unwrap();
    }
    // τ by dense expansion
    let want = naive_affine(&dense_expansion(&mh.heads), mh.heads.bias(), &h);
    assert_close(model.infer(&coords).unwrap().values(), &want, 1e-12);
}

#[test]
fn zero_body_emits_head_biases() {
    let spec = ModelSpec::multi_head(HeadGrid::new(3, 2), 5)
        .with_hidden(vec![8, 8])
        .with_seed(80);
    let mut model = Model::build(&spec).unwrap();
    let n = model.params().len();
    for (i, p) in model.params_mut().into_iter().enumerate() {
        let fill = if i == n - 1 { 0.375 } else { 0.0 };
        p.values_mut().fill(fill);
    }
    let coords = init_uniform(2, 11, -1.0, 1.0, &mut Rng::new(81)).unwrap();
    let out = model.forward(&coords).unwrap();
    assert!(out.values().iter().all(|&v| v == 0.375));
}
