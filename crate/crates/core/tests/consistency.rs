use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_core::meanfield::{histogram_from_particles, spatial_histogram, DensityField, MeanFieldSolver, PhaseGrid};
use swarm_core::microsim::{agents_on_circle, micro_step, sample_initial, ModelParams, ParticleEnsemble, Rect, VelocityInit};
use swarm_core::objective::{mf_moments, micro_moments, slice_cost, CostWeights};
use swarm_core::Vec2;

type V = Vec2<f64>;

fn s3() -> CostWeights<f64> {
    CostWeights::new(5e-3, 5e-1, 1e-7, 10.0, 250.0, V::new(-40.0, -40.0))
}

#[test]
fn particles_at_cell_centers_give_the_histogram_cost() {
    let g = PhaseGrid::<f64>::new(20, 100.0, 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 500;
    let x: Vec<V> = (0..n).map(|_| g.x_center(rng.gen_range(0..20), rng.gen_range(0..20))).collect();
    let v: Vec<V> = (0..n).map(|_| g.v_center(rng.gen_range(0..20), rng.gen_range(0..20))).collect();
    let d = agents_on_circle(3, V::zero(), 60.0);
    let y = ParticleEnsemble::new(x, v, d).unwrap();
    let (h, outside) = histogram_from_particles(&y, &g);
    assert_eq!(outside, 0);
    let u = vec![V::new(1.0, 2.0), V::new(-3.0, 0.5), V::new(0.0, -4.0)];
    let (em, vm) = micro_moments(&y.x);
    let (eh, vh, mass) = mf_moments(&h);
    assert!((mass - 1.0).abs() < 1e-13);
    let jn = slice_cost(em, vm, &u, &s3(), 0.02);
    let jh = slice_cost(eh, vh, &u, &s3(), 0.02);
    for (a, b) in [(jn.total, jh.total), (jn.variance, jh.variance), (jn.destination, jh.destination)] {
        assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn initial_density_matches_particle_moments() {
    let g = PhaseGrid::<f64>::new(40, 100.0, 5.0).unwrap();
    let support = Rect::new(-10.0, 55.0, -20.0, 55.0);
    let f = DensityField::initial(g, &support, VelocityInit::Zero, vec![V::zero()]).unwrap();
    let (x, _) = sample_initial::<f64>(200_000, &support, VelocityInit::Zero, 1).unwrap();
    let (em, vm) = micro_moments(&x);
    let (ef, vf, _) = mf_moments(&f);
    assert!((em - ef).norm() < 0.2, "{em:?} vs {ef:?}");
    assert!((vm - vf).abs() / vf < 0.01, "{vm} vs {vf}");
}

#[test]
fn particle_and_grid_densities_stay_close() {
    // one second of controlled dynamics at both levels
    let n_grid = 20;
    let g = PhaseGrid::<f64>::new(n_grid, 100.0, 5.0).unwrap();
    let support = Rect::new(-10.0, 55.0, -20.0, 55.0);
    let d = agents_on_circle(3, support.center(), 60.0);
    let params = ModelParams::default();
    let w = vec![V::new(-2.0, 0.0), V::new(1.0, 1.0), V::new(0.0, 2.0)];
    let mut f = DensityField::initial(g, &support, VelocityInit::Zero, d.clone()).unwrap();
    let solver = MeanFieldSolver::new(g, params, 0.02).unwrap();
    let (x, v) = sample_initial::<f64>(3000, &support, VelocityInit::Zero, 5).unwrap();
    let mut y = ParticleEnsemble::new(x, v, d).unwrap();
    let (em0, _) = micro_moments(&y.x);
    let (ef0, _, _) = mf_moments(&f);
    for _ in 0..50 {
        f = solver.step(&f, &w).unwrap().end;
        y = micro_step(&y, &w, 0.02, &params).unwrap().end;
    }
    let rho = f.macroscopic_density();
    let (hist, _) = spatial_histogram(&y.x, n_grid, 100.0);
    let l1 = |a: &[f64]| a.iter().map(|v| v.abs()).sum::<f64>();
    let diff: Vec<f64> = rho.iter().zip(&hist).map(|(a, b)| a - b).collect();
    let rel = l1(&diff) / l1(&rho);
    assert!(rel < 0.25, "relative L1 difference {rel}");
    let (em, _) = micro_moments(&y.x);
    let (ef, _, _) = mf_moments(&f);
    // the two means start apart by sampling noise and cell-center quantization
    let (dm, df) = (em - em0, ef - ef0);
    assert!((dm - df).norm() < 0.1 * df.norm().max(0.1), "{dm:?} vs {df:?}");
}
