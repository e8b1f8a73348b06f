//! Nonlocal terms of the continuous adjoint equation, evaluated by
//! factorizing the velocity integral out of the spatial convolution.

use super::grid::DensityField;
use super::interaction::FieldKernels;
use crate::microsim::ModelParams;
use crate::real::Real;
use crate::vec2::Vec2;

/// `∇_v g` at every phase cell by centered differences, one-sided at the
/// velocity boundary.
pub fn velocity_gradient<T: Real>(f: &DensityField<T>, g: &[T]) -> Vec<Vec2<T>> {
    let n = f.grid.n;
    let nv = n * n;
    let dv = f.grid.dv;
    let diff = |lo: T, hi: T, span: usize| (hi - lo) / (dv * T::cst(span as f64));
    let mut out = vec![Vec2::zero(); g.len()];
    for s in 0..nv {
        let b = &g[s * nv..(s + 1) * nv];
        for j1 in 0..n {
            for j2 in 0..n {
                let (a1, c1) = (j1.saturating_sub(1), (j1 + 1).min(n - 1));
                let (a2, c2) = (j2.saturating_sub(1), (j2 + 1).min(n - 1));
                out[s * nv + j1 * n + j2] = Vec2::new(
                    diff(b[a1 * n + j2], b[c1 * n + j2], c1 - a1),
                    diff(b[j1 * n + a2], b[j1 * n + c2], c2 - a2),
                );
            }
        }
    }
    out
}

/// `W(x) = Σ_v ∇_v g(x, v) f(x, v) Δv²`.
pub fn velocity_moment<T: Real>(f: &DensityField<T>, g: &[T]) -> Vec<Vec2<T>> {
    let nv = f.grid.spatial_cells();
    let dv2 = f.grid.dv * f.grid.dv;
    let grad = velocity_gradient(f, g);
    (0..nv)
        .map(|s| {
            let mut acc = Vec2::zero();
            for q in 0..nv {
                acc += grad[s * nv + q].scale(f.f[s * nv + q]);
            }
            acc.scale(dv2)
        })
        .collect()
}

/// `D_f(x̄) = Σ_x K1(x̄ - x)·W(x) Δx²` per spatial cell.
pub fn nonlocal_df<T: Real>(f: &DensityField<T>, g: &[T], m: &ModelParams<T>) -> Vec<T> {
    FieldKernels::new(&f.grid, m).kernel_dot(&velocity_moment(f, g))
}

/// `-(1/M) Σ_x HessΦ2(x - d_m) W(x) Δx²` per agent.
pub fn nonlocal_ddog<T: Real>(f: &DensityField<T>, g: &[T], m: &ModelParams<T>) -> Vec<Vec2<T>> {
    let dx2 = f.grid.dx * f.grid.dx;
    let w: Vec<Vec2<T>> = velocity_moment(f, g).iter().map(|p| p.scale(dx2)).collect();
    FieldKernels::new(&f.grid, m).agent_hessian_sum(&w, &f.d).iter().map(|p| -*p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::PhaseGrid;
    use crate::potentials::{interaction_force, interaction_hessian};
    use rand::{Rng, SeedableRng};

    type V = Vec2<f64>;

    fn random_pair(seed: u64) -> (DensityField<f64>, Vec<f64>) {
        let g = PhaseGrid::<f64>::new(8, 20.0, 2.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = DensityField::zeros(g, vec![V::new(3.0, -4.0), V::new(-9.0, 12.0)]);
        f.f.iter_mut().for_each(|v| *v = rng.gen());
        let gg = (0..g.cells()).map(|_| rng.gen::<f64>() - 0.5).collect();
        (f, gg)
    }

    fn brute_grad(f: &DensityField<f64>, g: &[f64], idx: usize) -> V {
        // independent index arithmetic on the 4D array
        let n = f.grid.n;
        let j2 = idx % n;
        let j1 = (idx / n) % n;
        let base = idx - j1 * n - j2;
        let (l1, h1) = (if j1 == 0 { 0 } else { j1 - 1 }, if j1 == n - 1 { j1 } else { j1 + 1 });
        let (l2, h2) = (if j2 == 0 { 0 } else { j2 - 1 }, if j2 == n - 1 { j2 } else { j2 + 1 });
        let gx = (g[base + h1 * n + j2] - g[base + l1 * n + j2]) / (f.grid.dv * (h1 - l1) as f64);
        let gy = (g[base + j1 * n + h2] - g[base + j1 * n + l2]) / (f.grid.dv * (h2 - l2) as f64);
        V::new(gx, gy)
    }

    #[test]
    fn df_matches_direct_quadrature() {
        let (f, g) = random_pair(1);
        let m = ModelParams::default();
        let fast = nonlocal_df(&f, &g, &m);
        let gr = &f.grid;
        let n = gr.n;
        let w = gr.dx * gr.dx * gr.dv * gr.dv;
        for bar in 0..n * n {
            let xb = gr.x_center(bar / n, bar % n);
            let mut direct = 0.0;
            for idx in 0..gr.cells() {
                let s = idx / (n * n);
                let x = gr.x_center(s / n, s % n);
                direct += interaction_force(&m.sheep_sheep, xb, x).dot(brute_grad(&f, &g, idx)) * f.f[idx] * w;
            }
            assert!((fast[bar] - direct).abs() <= 1e-12 * direct.abs().max(1.0), "{bar}: {} vs {direct}", fast[bar]);
        }
    }

    #[test]
    fn ddog_matches_direct_quadrature() {
        let (f, g) = random_pair(2);
        let m = ModelParams::default();
        let fast = nonlocal_ddog(&f, &g, &m);
        let gr = &f.grid;
        let n = gr.n;
        let w = gr.dx * gr.dx * gr.dv * gr.dv;
        for (a, dm) in f.d.iter().enumerate() {
            let mut direct = V::zero();
            for idx in 0..gr.cells() {
                let s = idx / (n * n);
                let x = gr.x_center(s / n, s % n);
                direct -= interaction_hessian(&m.dog_sheep, x - *dm).apply(brute_grad(&f, &g, idx)).scale(f.f[idx] * w / 2.0);
            }
            assert!((fast[a] - direct).norm() <= 1e-12 * direct.norm().max(1e-3), "{a}: {:?} vs {direct:?}", fast[a]);
        }
    }

    #[test]
    fn velocity_constant_g_gives_zero() {
        let (f, _) = random_pair(3);
        let n = f.grid.n;
        let g: Vec<f64> = (0..f.grid.cells()).map(|i| (i / (n * n)) as f64).collect();
        let m = ModelParams::default();
        assert!(nonlocal_df(&f, &g, &m).iter().all(|v| *v == 0.0));
        assert!(nonlocal_ddog(&f, &g, &m).iter().all(|v| *v == V::zero()));
    }

    #[test]
    fn disabled_potentials_give_zero() {
        let (f, g) = random_pair(4);
        let m = ModelParams::default().without_interactions();
        assert!(nonlocal_df(&f, &g, &m).iter().all(|v| *v == 0.0));
        assert!(nonlocal_ddog(&f, &g, &m).iter().all(|v| *v == V::zero()));
    }
}
