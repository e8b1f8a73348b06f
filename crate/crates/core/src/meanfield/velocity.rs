//! Conservative finite-volume update of `∂_t f + ∇_v·(S f) = 0` over half a
//! step, one velocity direction at a time, with Lax-Wendroff fluxes limited
//! by van Leer's limiter and zero flux through the velocity-box boundary.
//!
//! For a face velocity `a` and Courant number `ν = a λ`, the flux is
//! `F = a f_up + ½|a|(1 - |ν|) φ(θ) Δf`. With `θ = r / Δf` the limited
//! correction `φ(θ) Δf` equals the harmonic mean `2 r Δf / (r + Δf)` when
//! `r Δf > 0` and zero otherwise, which is the form differentiated here.

use super::grid::{DensityField, PhaseGrid};
use crate::error::NumericalError;
use crate::real::Real;
use crate::vec2::Vec2;

#[inline]
fn harmonic<T: Real>(r: T, delta: T) -> T {
    if r * delta > T::zero() {
        T::two() * r * delta / (r + delta)
    } else {
        T::zero()
    }
}

#[inline]
fn get<T: Real>(f: &[T], i: isize) -> T {
    if i < 0 || i as usize >= f.len() {
        T::zero()
    } else {
        f[i as usize]
    }
}

/// Limited flux through the face between cells `k` and `k + 1`.
#[inline]
fn face_flux<T: Real>(f: &[T], k: usize, a: T, lam: T) -> T {
    if a == T::zero() {
        return T::zero();
    }
    let ki = k as isize;
    let delta = f[k + 1] - f[k];
    let (up, r) = if a > T::zero() {
        (f[k], f[k] - get(f, ki - 1))
    } else {
        (f[k + 1], get(f, ki + 2) - f[k + 1])
    };
    let kappa = T::half() * a.abs() * (T::one() - a.abs() * lam);
    a * up + kappa * harmonic(r, delta)
}

/// One line update with face velocities `a[k]` between cells `k` and `k + 1`.
pub(crate) fn fv_line<T: Real>(f: &[T], a: &[T], lam: T, out: &mut [T]) {
    out.copy_from_slice(f);
    for k in 0..f.len() - 1 {
        let flux = lam * face_flux(f, k, a[k], lam);
        out[k] -= flux;
        out[k + 1] += flux;
    }
}

/// Reverse of [`fv_line`]: given `gout = ∂J/∂out`, adds `∂J/∂f` to `gin`
/// and `∂J/∂a[k]` to `ga[k]`.
pub(crate) fn fv_line_adjoint<T: Real>(f: &[T], a: &[T], lam: T, gout: &[T], gin: &mut [T], ga: &mut [T]) {
    let n = f.len();
    for (gi, go) in gin.iter_mut().zip(gout) {
        *gi += *go;
    }
    for k in 0..n - 1 {
        let psi = -lam * (gout[k] - gout[k + 1]);
        if psi == T::zero() {
            continue;
        }
        let ak = a[k];
        let forward = ak >= T::zero();
        let ki = k as isize;
        let delta = f[k + 1] - f[k];
        let (up, r) = if forward {
            (k, f[k] - get(f, ki - 1))
        } else {
            (k + 1, get(f, ki + 2) - f[k + 1])
        };
        let abs_a = ak.abs();
        let kappa = T::half() * abs_a * (T::one() - abs_a * lam);
        let h = harmonic(r, delta);
        let sgn = if forward { T::one() } else { -T::one() };
        let dkappa = T::half() * sgn * (T::one() - T::two() * abs_a * lam);
        ga[k] += psi * (f[up] + dkappa * h);
        gin[up] += psi * ak;
        if h != T::zero() {
            let s = r + delta;
            let hr = T::two() * delta * delta / (s * s) * kappa * psi;
            let hd = T::two() * r * r / (s * s) * kappa * psi;
            gin[k + 1] += hd;
            gin[k] -= hd;
            if forward {
                gin[k] += hr;
                if k >= 1 {
                    gin[k - 1] -= hr;
                }
            } else {
                if k + 2 < n {
                    gin[k + 2] += hr;
                }
                gin[k + 1] -= hr;
            }
        }
    }
}

/// Face velocities `A - α v_face` along one velocity axis.
pub(crate) fn face_velocities<T: Real>(grid: &PhaseGrid<T>, accel: T, alpha: T, out: &mut [T]) {
    for (k, o) in out.iter_mut().enumerate() {
        *o = accel - alpha * grid.v_face(k);
    }
}

/// Largest `|a| λ` over the faces of the active cells, for a half step `tau / 2`.
pub fn velocity_courant<T: Real>(grid: &PhaseGrid<T>, accel: &[Vec2<T>], alpha: T, tau: T, active: &[bool]) -> T {
    let lam = tau * T::half() / grid.dv;
    let edge = grid.v_face(0).abs().max(grid.v_face(grid.n - 2).abs());
    let mut worst = T::zero();
    for (a, act) in accel.iter().zip(active) {
        if *act {
            worst = worst.max(a.x.abs() + alpha * edge).max(a.y.abs() + alpha * edge);
        }
    }
    worst * lam
}

/// Half step of the velocity transport: a sweep in `v1` then one in `v2`,
/// each over `tau / 2`. `accel` is the velocity-independent part of the
/// force per spatial cell.
pub fn advect_v_half<T: Real>(
    f: &DensityField<T>,
    accel: &[Vec2<T>],
    alpha: T,
    tau: T,
) -> Result<DensityField<T>, NumericalError> {
    let mut mid = f.f.clone();
    let mut out = f.f.clone();
    let active = f.active_cells();
    check_velocity_cfl(&f.grid, accel, alpha, tau, &active)?;
    sweep(&f.grid, &f.f, accel, alpha, tau, 0, &active, &mut mid);
    sweep(&f.grid, &mid, accel, alpha, tau, 1, &active, &mut out);
    Ok(DensityField { grid: f.grid, f: out, d: f.d.clone() })
}

pub(crate) fn check_velocity_cfl<T: Real>(
    grid: &PhaseGrid<T>,
    accel: &[Vec2<T>],
    alpha: T,
    tau: T,
    active: &[bool],
) -> Result<(), NumericalError> {
    let c = velocity_courant(grid, accel, alpha, tau, active);
    if !c.is_finite() {
        return Err(NumericalError::NonFinite("velocity transport".to_string()));
    }
    if c > T::one() {
        return Err(NumericalError::Cfl { what: "velocity", ratio: c.as_f64(), limit: 1.0 });
    }
    Ok(())
}

/// Sweeps every active spatial cell along velocity axis `axis` (0 = v1, 1 = v2).
/// Inactive cells are copied (they are zero).
pub(crate) fn sweep<T: Real>(
    grid: &PhaseGrid<T>,
    f: &[T],
    accel: &[Vec2<T>],
    alpha: T,
    tau: T,
    axis: usize,
    active: &[bool],
    out: &mut [T],
) {
    let n = grid.n;
    let nv = n * n;
    let lam = tau * T::half() / grid.dv;
    let mut line = vec![T::zero(); n];
    let mut res = vec![T::zero(); n];
    let mut faces = vec![T::zero(); n - 1];
    for (s, act) in active.iter().enumerate() {
        let block = &f[s * nv..(s + 1) * nv];
        let dst = &mut out[s * nv..(s + 1) * nv];
        if !*act {
            dst.copy_from_slice(block);
            continue;
        }
        let a = if axis == 0 { accel[s].x } else { accel[s].y };
        face_velocities(grid, a, alpha, &mut faces);
        for l in 0..n {
            let (start, stride) = if axis == 0 { (l, n) } else { (l * n, 1) };
            let mut any = false;
            for k in 0..n {
                line[k] = block[start + k * stride];
                any |= line[k] != T::zero();
            }
            if !any {
                for k in 0..n {
                    dst[start + k * stride] = T::zero();
                }
                continue;
            }
            fv_line(&line, &faces, lam, &mut res);
            for k in 0..n {
                dst[start + k * stride] = res[k];
            }
        }
    }
}

/// Reverse of [`sweep`]. Writes `∂J/∂f` into `gin` on the spatial cells
/// flagged in `cells` (elsewhere `gin = gout`) and adds `∂J/∂A_axis` per
/// spatial cell to `gacc`. Zero blocks still carry the upwind part of the
/// Jacobian, so `cells` must cover every cell where `gin` is wanted.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sweep_adjoint<T: Real>(
    grid: &PhaseGrid<T>,
    f: &[T],
    accel: &[Vec2<T>],
    alpha: T,
    tau: T,
    axis: usize,
    cells: &[bool],
    gout: &[T],
    gin: &mut [T],
    gacc: &mut [Vec2<T>],
) {
    let n = grid.n;
    let nv = n * n;
    let lam = tau * T::half() / grid.dv;
    let mut line = vec![T::zero(); n];
    let mut gl = vec![T::zero(); n];
    let mut gi = vec![T::zero(); n];
    let mut ga = vec![T::zero(); n - 1];
    let mut faces = vec![T::zero(); n - 1];
    gin.copy_from_slice(gout);
    for (s, act) in cells.iter().enumerate() {
        if !*act {
            continue;
        }
        let block = &f[s * nv..(s + 1) * nv];
        let a = if axis == 0 { accel[s].x } else { accel[s].y };
        face_velocities(grid, a, alpha, &mut faces);
        let mut total = T::zero();
        for l in 0..n {
            let (start, stride) = if axis == 0 { (l, n) } else { (l * n, 1) };
            for k in 0..n {
                line[k] = block[start + k * stride];
                gl[k] = gout[s * nv + start + k * stride];
                gi[k] = T::zero();
            }
            ga.iter_mut().for_each(|v| *v = T::zero());
            fv_line_adjoint(&line, &faces, lam, &gl, &mut gi, &mut ga);
            for k in 0..n {
                gin[s * nv + start + k * stride] = gi[k];
            }
            for v in &ga {
                total += *v;
            }
        }
        if axis == 0 {
            gacc[s].x += total;
        } else {
            gacc[s].y += total;
        }
    }
}
