//! Finite-difference checks of the composite and graph-specific operations.

use std::sync::Arc;

use gml_core::ndtape::{gradcheck, SparseMatrix, Tape, Tensor, Var};
use gml_core::rng::SplitMix64;
use gml_core::Result;

const TOL: f64 = 1e-5;

fn rand_tensor(rng: &mut SplitMix64, r: usize, c: usize) -> Tensor {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.uniform_range(-3.0, 3.0)).collect()).unwrap()
}

fn project(tape: &mut Tape, out: Var, seed: u64) -> Result<Var> {
    let (r, c) = tape.value(out).dims();
    let mut rng = SplitMix64::new(seed);
    let w = tape.constant(rand_tensor(&mut rng, r, c))?;
    let p = tape.hadamard(out, w)?;
    tape.sum(p)
}

/// Ring with self loops, plus one chord so degrees differ.
fn small_graph(n: usize) -> Arc<SparseMatrix> {
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, i, 1.0));
        trip.push((i, (i + 1) % n, 1.0));
        trip.push(((i + 1) % n, i, 1.0));
    }
    trip.push((0, n / 2, 1.0));
    trip.push((n / 2, 0, 1.0));
    Arc::new(SparseMatrix::from_triplets(n, n, &trip).unwrap())
}

#[test]
fn kl_gradient_in_both_arguments() {
    let mut rng = SplitMix64::new(1);
    for trial in 0..10 {
        let inputs = [rand_tensor(&mut rng, 4, 3), rand_tensor(&mut rng, 4, 3)];
        let r = gradcheck::check(&inputs, 1e-6, |t, v| {
            let p = t.softmax_rows(v[0], 1.5)?;
            let q = t.softmax_rows(v[1], 1.5)?;
            t.kl_divergence(p, q)
        })
        .unwrap();
        assert!(r.max_rel_error < TOL, "trial {}: {:?}", trial, r);
    }
}

#[test]
fn cross_entropy_gradient() {
    let mut rng = SplitMix64::new(2);
    let labels = [0, 2, 1, 1, 2];
    for trial in 0..10 {
        let inputs = [rand_tensor(&mut rng, 5, 3)];
        let r = gradcheck::check(&inputs, 1e-6, |t, v| t.cross_entropy(v[0], &labels, &[0, 1, 4])).unwrap();
        assert!(r.max_rel_error < TOL, "trial {}: {:?}", trial, r);
    }
}

#[test]
fn head_dot_gradient() {
    let mut rng = SplitMix64::new(3);
    for trial in 0..10 {
        let inputs = [rand_tensor(&mut rng, 4, 6), rand_tensor(&mut rng, 1, 6)];
        let r = gradcheck::check(&inputs, 1e-6, |t, v| {
            let o = t.head_dot(v[0], v[1], 3)?;
            project(t, o, 30 + trial)
        })
        .unwrap();
        assert!(r.max_rel_error < TOL, "trial {}: {:?}", trial, r);
    }
}

#[test]
fn graph_attention_gradient_in_features_and_scores() {
    let mut rng = SplitMix64::new(4);
    let g = small_graph(6);
    for trial in 0..10 {
        let inputs = [rand_tensor(&mut rng, 6, 4), rand_tensor(&mut rng, 6, 2), rand_tensor(&mut rng, 6, 2)];
        let r = gradcheck::check(&inputs, 1e-6, |t, v| {
            let o = t.graph_attention(v[0], v[1], v[2], &g, 2, 0.2)?;
            project(t, o, 40 + trial)
        })
        .unwrap();
        assert!(r.max_rel_error < TOL, "trial {}: {:?}", trial, r);
    }
}

#[test]
fn attention_layer_end_to_end_gradient() {
    // Projection, per-head scores, attention, ELU and a classifier loss.
    let mut rng = SplitMix64::new(5);
    let g = small_graph(5);
    let x = rand_tensor(&mut rng, 5, 3);
    let inputs = [rand_tensor(&mut rng, 3, 4), rand_tensor(&mut rng, 1, 4), rand_tensor(&mut rng, 1, 4)];
    let r = gradcheck::check(&inputs, 1e-6, |t, v| {
        let xv = t.constant(x.clone())?;
        let h = t.matmul(xv, v[0])?;
        let s = t.head_dot(h, v[1], 2)?;
        let d = t.head_dot(h, v[2], 2)?;
        let o = t.graph_attention(h, s, d, &g, 2, 0.2)?;
        let o = t.elu(o)?;
        t.cross_entropy(o, &[0, 1, 2, 3, 0], &[0, 1, 2, 3, 4])
    })
    .unwrap();
    assert!(r.max_rel_error < TOL, "{:?}", r);
}

#[test]
fn attention_coefficients_sum_to_one_per_row_and_head() {
    let mut rng = SplitMix64::new(6);
    let g = small_graph(7);
    let mut tape = Tape::new();
    let h = tape.constant(rand_tensor(&mut rng, 7, 6)).unwrap();
    let s = tape.constant(rand_tensor(&mut rng, 7, 3)).unwrap();
    let d = tape.constant(rand_tensor(&mut rng, 7, 3)).unwrap();
    let o = tape.graph_attention(h, s, d, &g, 3, 0.2).unwrap();
    let (structure, alpha, heads) = tape.attention_coefficients(o).unwrap();
    for i in 0..7 {
        for k in 0..heads {
            let total: f64 = (structure.row_ptr()[i]..structure.row_ptr()[i + 1]).map(|e| alpha[e * heads + k]).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn mutual_learning_loss_gradient() {
    // Cross entropy plus a peer term against a detached distribution plus
    // an entropy bonus and an L1 penalty, the shape of a cohort member loss.
    let mut rng = SplitMix64::new(7);
    let peer = {
        let z = rand_tensor(&mut rng, 4, 3);
        gml_core::ndtape::softmax(&z, 2.0).unwrap()
    };
    let inputs = [rand_tensor(&mut rng, 4, 3), rand_tensor(&mut rng, 2, 2)];
    let r = gradcheck::check(&inputs, 1e-6, |t, v| {
        let ce = t.cross_entropy(v[0], &[0, 1, 2, 0], &[0, 1, 2, 3])?;
        let p = t.softmax_rows(v[0], 2.0)?;
        let target = t.constant(peer.clone())?;
        let kl = t.kl_divergence(target, p)?;
        let ent = t.entropy_rows(p)?;
        let mean_ent = t.mean_rows(ent)?;
        let mean_ent = t.sum(mean_ent)?;
        let ent_term = t.scale(mean_ent, 0.3)?;
        let l1 = t.l1_norm(v[1])?;
        let l1 = t.scale(l1, 0.1)?;
        let a = t.add(ce, kl)?;
        let b = t.add(a, ent_term)?;
        t.add(b, l1)
    })
    .unwrap();
    assert!(r.max_rel_error < TOL, "{:?}", r);
}
