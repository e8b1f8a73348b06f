use swarm_core::icontrol::{Level, MeanFieldLevel, MicroLevel};
use swarm_core::meanfield::{DensityField, MeanFieldSolver, PhaseGrid};
use swarm_core::microsim::{agents_on_circle, sample_initial, ModelParams, ParticleEnsemble, Rect, VelocityInit};
use swarm_core::objective::CostWeights;
use swarm_core::{Quad, Real, Vec2};

type V = Vec2<f64>;

fn s3_weights<T: Real>() -> CostWeights<T> {
    CostWeights::new(5e-3, 5e-1, 1e-7, 10.0, 250.0, Vec2::from_f64(-40.0, -40.0))
}

fn support<T: Real>() -> Rect<T> {
    Rect::new(-10.0, 55.0, -20.0, 55.0)
}

fn controls() -> Vec<V> {
    vec![V::new(1.5, -0.5), V::new(-2.0, 1.0), V::new(0.3, 2.5)]
}

/// Reduced slice cost and its adjoint gradient at `u`.
fn reduced<T: Real, L: Level<T>>(level: &L, y: &L::State, u: &[Vec2<T>]) -> (T, Vec<Vec2<T>>) {
    let step = level.forward(y, u).unwrap();
    let g = level.gradient(&step).into_iter().map(|q| q.scale(level.dt())).collect();
    (level.cost(L::end_ref(&step), u).total, g)
}

/// Central differences of the reduced cost, one control component at a time.
fn central<T: Real, L: Level<T>>(level: &L, y: &L::State, u: &[Vec2<T>], h: T) -> Vec<Vec2<T>> {
    let cost = |u: &[Vec2<T>]| reduced(level, y, u).0;
    let mut out = vec![Vec2::zero(); u.len()];
    for m in 0..u.len() {
        for axis in 0..2 {
            let mut plus = u.to_vec();
            let mut minus = u.to_vec();
            if axis == 0 {
                plus[m].x += h;
                minus[m].x -= h;
            } else {
                plus[m].y += h;
                minus[m].y -= h;
            }
            let d = (cost(&plus) - cost(&minus)) / (T::two() * h);
            if axis == 0 {
                out[m].x = d;
            } else {
                out[m].y = d;
            }
        }
    }
    out
}

fn rel_error<T: Real>(a: &[Vec2<T>], b: &[Vec2<T>]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(p, q)| (*p - *q).norm_sq().as_f64()).sum();
    let den: f64 = b.iter().map(|q| q.norm_sq().as_f64()).sum();
    (num / den).sqrt()
}

fn micro_state<T: Real>() -> ParticleEnsemble<T> {
    let (x, v) = sample_initial::<T>(20, &support(), VelocityInit::Uniform { half_width: 1.0 }, 11).unwrap();
    let d = agents_on_circle(3, support::<T>().center(), T::cst(45.0));
    ParticleEnsemble::new(x, v, d).unwrap()
}

fn micro_quad_level() -> MicroLevel<Quad> {
    MicroLevel { params: ModelParams::default(), weights: s3_weights(), dt: Quad::cst(0.02), u_max: Quad::cst(5.0) }
}

#[test]
fn micro_gradient_matches_central_differences() {
    // one slice moves the crowd by ~1e-13 per unit control perturbation,
    // below f64 resolution of the cost; the differences run in quad precision
    let level = MicroLevel { params: ModelParams::default(), weights: s3_weights(), dt: 0.02, u_max: 5.0 };
    let u = controls();
    let (_, g) = reduced(&level, &micro_state::<f64>(), &u);
    let uq: Vec<Vec2<Quad>> = u.iter().map(|p| p.cast()).collect();
    let fd: Vec<V> = central(&micro_quad_level(), &micro_state::<Quad>(), &uq, Quad::cst(1e-5))
        .iter()
        .map(|p| p.cast())
        .collect();
    let err = rel_error(&g, &fd);
    assert!(err < 1e-4, "relative error {err:e}");
}

#[test]
fn micro_gradient_matches_quad_differences() {
    let level = micro_quad_level();
    let y = micro_state::<Quad>();
    let u: Vec<Vec2<Quad>> = controls().iter().map(|p| p.cast()).collect();
    let (_, g) = reduced(&level, &y, &u);
    let fd = central(&level, &y, &u, Quad::cst(1e-9));
    let err = rel_error(&g, &fd);
    assert!(err < 1e-12, "relative error {err:e}");
}

fn mf_level<T: Real>(n: usize) -> (MeanFieldLevel<T>, DensityField<T>) {
    let grid = PhaseGrid::<T>::new(n, 100.0, 5.0).unwrap();
    let d = agents_on_circle(3, support::<T>().center(), T::cst(45.0));
    let f = DensityField::initial(grid, &support(), VelocityInit::Uniform { half_width: 2.0 }, d).unwrap();
    let solver = MeanFieldSolver::new(grid, ModelParams::default(), T::cst(0.02)).unwrap();
    (MeanFieldLevel { solver, weights: s3_weights(), u_max: T::cst(5.0) }, f)
}

#[test]
fn meanfield_gradient_matches_differences_on_12_grid() {
    let (level, f) = mf_level::<f64>(12);
    let u = controls();
    let (_, g) = reduced(&level, &f, &u);
    let fd = central(&level, &f, &u, 1e-3);
    let err = rel_error(&g, &fd);
    assert!(err < 1e-2, "relative error {err:e}");
}

#[test]
fn meanfield_gradient_matches_quad_differences() {
    let (level, f) = mf_level::<Quad>(8);
    let u: Vec<Vec2<Quad>> = controls().iter().map(|p| p.cast()).collect();
    let (_, g) = reduced(&level, &f, &u);
    let fd = central(&level, &f, &u, Quad::cst(1e-10));
    let err = rel_error(&g, &fd);
    assert!(err < 1e-10, "relative error {err:e}");
}
