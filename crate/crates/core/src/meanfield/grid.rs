use crate::error::ConfigError;
use crate::microsim::{ParticleEnsemble, Rect, VelocityInit};
use crate::real::Real;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

/// Tensor grid on `[-lx, lx]² × [-lv, lv]²` with `n` cells per direction.
///
/// Values are stored row-major over `(x1, x2, v1, v2)`: the velocity block of
/// one spatial cell is contiguous.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid<T> {
    pub n: usize,
    pub lx: T,
    pub lv: T,
    pub dx: T,
    pub dv: T,
}

impl<T: Real> PhaseGrid<T> {
    pub fn new(n: usize, lx: f64, lv: f64) -> Result<Self, ConfigError> {
        let mut errors = Vec::new();
        if n < 4 {
            errors.push(format!("grid needs at least 4 cells per direction, got {n}"));
        }
        if !(lx.is_finite() && lx > 0.0) {
            errors.push("spatial half width must be > 0".to_string());
        }
        if !(lv.is_finite() && lv > 0.0) {
            errors.push("velocity half width must be > 0".to_string());
        }
        if !errors.is_empty() {
            return Err(ConfigError::Invalid(errors));
        }
        let nn = n as f64;
        Ok(Self {
            n,
            lx: T::cst(lx),
            lv: T::cst(lv),
            dx: T::cst(2.0 * lx / nn),
            dv: T::cst(2.0 * lv / nn),
        })
    }

    pub fn cast<U: Real>(&self) -> PhaseGrid<U> {
        PhaseGrid {
            n: self.n,
            lx: U::cst(self.lx.as_f64()),
            lv: U::cst(self.lv.as_f64()),
            dx: U::cst(self.dx.as_f64()),
            dv: U::cst(self.dv.as_f64()),
        }
    }

    #[inline]
    pub fn x_coord(&self, i: usize) -> T {
        -self.lx + (T::cst(i as f64) + T::half()) * self.dx
    }

    #[inline]
    pub fn v_coord(&self, j: usize) -> T {
        -self.lv + (T::cst(j as f64) + T::half()) * self.dv
    }

    /// Velocity at the face between velocity cells `j` and `j + 1`.
    #[inline]
    pub fn v_face(&self, j: usize) -> T {
        -self.lv + T::cst((j + 1) as f64) * self.dv
    }

    pub fn x_center(&self, i1: usize, i2: usize) -> Vec2<T> {
        Vec2::new(self.x_coord(i1), self.x_coord(i2))
    }

    pub fn v_center(&self, j1: usize, j2: usize) -> Vec2<T> {
        Vec2::new(self.v_coord(j1), self.v_coord(j2))
    }

    pub fn spatial_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn cells(&self) -> usize {
        self.spatial_cells() * self.spatial_cells()
    }

    pub fn cell_volume(&self) -> T {
        self.dx * self.dx * self.dv * self.dv
    }

    /// Cell index along a spatial axis containing `x`, clamped to the grid.
    /// The flag is false when `x` was outside.
    pub fn x_index(&self, x: T) -> (usize, bool) {
        clamp_index((x + self.lx) / self.dx, self.n)
    }

    pub fn v_index(&self, v: T) -> (usize, bool) {
        clamp_index((v + self.lv) / self.dv, self.n)
    }
}

fn clamp_index<T: Real>(s: T, n: usize) -> (usize, bool) {
    let fl = s.floor();
    if !(fl >= T::zero()) {
        (0, false)
    } else if fl >= T::cst(n as f64) {
        (n - 1, false)
    } else {
        (fl.as_f64() as usize, true)
    }
}

/// Phase-space density with the agent positions it is coupled to.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField<T> {
    pub grid: PhaseGrid<T>,
    pub f: Vec<T>,
    pub d: Vec<Vec2<T>>,
}

impl<T: Real> DensityField<T> {
    pub fn zeros(grid: PhaseGrid<T>, d: Vec<Vec2<T>>) -> Self {
        Self { f: vec![T::zero(); grid.cells()], grid, d }
    }

    /// Cell averages of the uniform distribution on `support` times the
    /// velocity law, normalized to unit mass. A velocity point mass at 0
    /// is split equally over the cells touching the origin.
    pub fn initial(
        grid: PhaseGrid<T>,
        support: &Rect<T>,
        velocities: VelocityInit,
        d: Vec<Vec2<T>>,
    ) -> Result<Self, ConfigError> {
        if !support.is_proper() {
            return Err(ConfigError::single("initial support box is degenerate"));
        }
        let n = grid.n;
        let frac = |lo: T, hi: T, axis_lo: T, h: T| -> Vec<T> {
            (0..n)
                .map(|i| {
                    let a = axis_lo + T::cst(i as f64) * h;
                    let b = a + h;
                    let w = (b.min(hi) - a.max(lo)).max(T::zero());
                    w / (hi - lo)
                })
                .collect()
        };
        let wx1 = frac(support.min.x, support.max.x, -grid.lx, grid.dx);
        let wx2 = frac(support.min.y, support.max.y, -grid.lx, grid.dx);
        let wv: Vec<T> = match velocities {
            VelocityInit::Zero => {
                let mut w = vec![T::zero(); n];
                if n % 2 == 0 {
                    w[n / 2 - 1] = T::half();
                    w[n / 2] = T::half();
                } else {
                    w[n / 2] = T::one();
                }
                w
            }
            VelocityInit::Uniform { half_width } => {
                let hw = T::cst(half_width);
                if !(half_width > 0.0) || hw > grid.lv {
                    return Err(ConfigError::single("velocity half width must lie in (0, lv]"));
                }
                frac(-hw, hw, -grid.lv, grid.dv)
            }
        };
        let inv_vol = T::one() / grid.cell_volume();
        let mut f = vec![T::zero(); grid.cells()];
        let nv = n * n;
        for i1 in 0..n {
            for i2 in 0..n {
                let wx = wx1[i1] * wx2[i2];
                if wx == T::zero() {
                    continue;
                }
                let base = (i1 * n + i2) * nv;
                for j1 in 0..n {
                    for j2 in 0..n {
                        f[base + j1 * n + j2] = wx * wv[j1] * wv[j2] * inv_vol;
                    }
                }
            }
        }
        Ok(Self { grid, f, d })
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }

    /// `ρ(x) = Σ_v f(x, v) Δv²`.
    pub fn macroscopic_density(&self) -> Vec<T> {
        let nv = self.grid.spatial_cells();
        let dv2 = self.grid.dv * self.grid.dv;
        self.f
            .chunks_exact(nv)
            .map(|block| {
                let mut s = T::zero();
                for v in block {
                    s += *v;
                }
                s * dv2
            })
            .collect()
    }

    /// `Σ ρ Δx²`, summed in the same order as [`Self::macroscopic_density`].
    pub fn mass(&self) -> T {
        let dx2 = self.grid.dx * self.grid.dx;
        let mut s = T::zero();
        for r in self.macroscopic_density() {
            s += r * dx2;
        }
        s
    }

    pub fn min_value(&self) -> T {
        self.f.iter().fold(T::infinity(), |a, b| a.min(*b))
    }

    pub fn is_finite(&self) -> bool {
        self.f.iter().all(|v| v.is_finite()) && self.d.iter().all(|p| p.is_finite())
    }

    /// Spatial cells whose velocity block has a nonzero entry.
    pub fn active_cells(&self) -> Vec<bool> {
        active_cells(&self.f, self.grid.spatial_cells())
    }

    pub fn cast<U: Real>(&self) -> DensityField<U> {
        DensityField {
            grid: self.grid.cast(),
            f: self.f.iter().map(|v| U::cst(v.as_f64())).collect(),
            d: self.d.iter().map(|p| p.cast()).collect(),
        }
    }
}

pub(crate) fn active_cells<T: Real>(f: &[T], block: usize) -> Vec<bool> {
    f.chunks_exact(block).map(|b| b.iter().any(|v| *v != T::zero())).collect()
}

/// Phase-space histogram of an ensemble on `grid`, with mass exactly one up
/// to rounding. Particles outside the boxes are counted into the nearest
/// boundary cell; their number is returned.
pub fn histogram_from_particles<T: Real>(
    y: &ParticleEnsemble<T>,
    grid: &PhaseGrid<T>,
) -> (DensityField<T>, usize) {
    let n = grid.n;
    let mut counts = vec![0u64; grid.cells()];
    let mut outside = 0;
    for (x, v) in y.x.iter().zip(&y.v) {
        let (i1, a) = grid.x_index(x.x);
        let (i2, b) = grid.x_index(x.y);
        let (j1, c) = grid.v_index(v.x);
        let (j2, e) = grid.v_index(v.y);
        if !(a && b && c && e) {
            outside += 1;
        }
        counts[((i1 * n + i2) * n + j1) * n + j2] += 1;
    }
    let w = T::one() / (T::cst(y.n() as f64) * grid.cell_volume());
    let f = counts.iter().map(|&c| T::cst(c as f64) * w).collect();
    (DensityField { grid: *grid, f, d: y.d.clone() }, outside)
}

/// Spatial density histogram on an `n × n` grid over `[-lx, lx]²`,
/// as a density per unit area with unit mass. Returns the outside count.
pub fn spatial_histogram<T: Real>(x: &[Vec2<T>], n: usize, lx: T) -> (Vec<T>, usize) {
    let dx = T::two() * lx / T::cst(n as f64);
    let mut counts = vec![0u64; n * n];
    let mut outside = 0;
    for p in x {
        let (i1, a) = clamp_index((p.x + lx) / dx, n);
        let (i2, b) = clamp_index((p.y + lx) / dx, n);
        if !(a && b) {
            outside += 1;
        }
        counts[i1 * n + i2] += 1;
    }
    let w = T::one() / (T::cst(x.len() as f64) * dx * dx);
    (counts.iter().map(|&c| T::cst(c as f64) * w).collect(), outside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{micro_moments, mf_moments};

    type V = Vec2<f64>;

    #[test]
    fn grid_spacing() {
        let g = PhaseGrid::<f64>::new(25, 100.0, 5.0).unwrap();
        assert_eq!(g.dx, 8.0);
        assert_eq!(g.dv, 0.4);
        assert!(PhaseGrid::<f64>::new(3, 100.0, 5.0).is_err());
    }

    #[test]
    fn uniform_f_gives_uniform_rho() {
        let g = PhaseGrid::<f64>::new(6, 10.0, 2.0).unwrap();
        let mut f = DensityField::zeros(g, vec![V::zero()]);
        f.f.iter_mut().for_each(|v| *v = 0.25);
        let rho = f.macroscopic_density();
        assert!(rho.iter().all(|r| *r == rho[0]));
    }

    #[test]
    fn single_cell_mass() {
        let g = PhaseGrid::<f64>::new(8, 10.0, 2.0).unwrap();
        let mut f = DensityField::zeros(g, vec![V::zero()]);
        let idx = ((3 * 8 + 5) * 8 + 1) * 8 + 6;
        f.f[idx] = 1.0 / g.cell_volume();
        let rho = f.macroscopic_density();
        assert!((rho[3 * 8 + 5] - 1.0 / (g.dx * g.dx)).abs() < 1e-15);
        assert!((f.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_field_mass_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = PhaseGrid::<f64>::new(8, 10.0, 2.0).unwrap();
        let mut f = DensityField::zeros(g, vec![V::zero()]);
        f.f.iter_mut().for_each(|v| *v = rng.gen::<f64>());
        let mut direct = 0.0;
        for v in &f.f {
            direct += v * g.cell_volume();
        }
        assert!((direct - f.mass()).abs() <= 1e-14 * direct);
    }

    #[test]
    fn initial_datum_has_unit_mass() {
        for n in [12, 25, 50] {
            let g = PhaseGrid::<f64>::new(n, 100.0, 5.0).unwrap();
            let f = DensityField::initial(g, &Rect::new(-10.0, 55.0, -20.0, 55.0), VelocityInit::Zero, vec![V::zero()])
                .unwrap();
            assert!((f.mass() - 1.0).abs() < 1e-13, "n={n}");
            let (e, _, _) = mf_moments(&f);
            // partially covered edge cells carry their mass at the cell center
            assert!((e - V::new(22.5, 17.5)).norm() < 0.1 * g.dx, "n={n} E={e:?}");
        }
    }

    #[test]
    fn histogram_of_coincident_particles() {
        let g = PhaseGrid::<f64>::new(10, 10.0, 2.0).unwrap();
        let y = ParticleEnsemble::new(vec![V::new(1.1, -3.3); 7], vec![V::new(0.1, 0.1); 7], vec![V::zero()]).unwrap();
        let (h, out) = histogram_from_particles(&y, &g);
        assert_eq!(out, 0);
        let nz: Vec<_> = h.f.iter().filter(|v| **v != 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert!((nz[0] * g.cell_volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_counts_outside_particles() {
        let g = PhaseGrid::<f64>::new(10, 10.0, 2.0).unwrap();
        let y = ParticleEnsemble::new(
            vec![V::new(50.0, 0.0), V::new(0.0, 0.0), V::new(-11.0, 9.9)],
            vec![V::zero(); 3],
            vec![V::zero()],
        )
        .unwrap();
        let (h, out) = histogram_from_particles(&y, &g);
        assert_eq!(out, 2);
        assert!((h.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_moments_are_close_to_particle_moments() {
        use crate::microsim::sample_initial;
        let g = PhaseGrid::<f64>::new(50, 100.0, 5.0).unwrap();
        let (x, v) = sample_initial(1000, &Rect::new(-10.0, 55.0, -20.0, 55.0), VelocityInit::Zero, 11).unwrap();
        let y = ParticleEnsemble::new(x.clone(), v, vec![V::zero()]).unwrap();
        let (h, _) = histogram_from_particles(&y, &g);
        let (e_mf, v_mf, _) = mf_moments(&h);
        let (e_n, v_n) = micro_moments(&x);
        // binning moves each particle by at most half a cell diagonal
        assert!((e_mf - e_n).norm() <= g.dx);
        assert!((v_mf - v_n).abs() <= 2.0 * v_n.sqrt() * g.dx + g.dx * g.dx);
    }
}
