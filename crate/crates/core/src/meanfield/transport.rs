//! Semi-Lagrangian free transport `∂_t f + v·∇_x f = 0` over a full step.
//!
//! Each spatial direction is shifted in turn. Along a line the cumulative
//! mass `F` is known at the cell faces; it is interpolated by cubic Bezier
//! segments whose inner control points use centered slopes, and the new
//! cell value is the difference of `F` at the two feet `i - τv/Δx` and
//! `i + 1 - τv/Δx` (in cell units). The inner control points are limited so
//! each segment stays monotone, which keeps nonnegative data nonnegative.
//! Mass only leaves through the box boundary, where the inflow is zero.

use super::grid::{DensityField, PhaseGrid};
use crate::error::NumericalError;
use crate::real::Real;

/// Foot offset and Bernstein weights for one velocity column.
#[derive(Clone, Copy, Debug)]
struct Column<T> {
    offset: isize,
    b: [T; 4],
}

impl<T: Real> Column<T> {
    fn new(courant: T) -> Self {
        let xi = -courant;
        let o = xi.floor();
        let t = xi - o;
        let s = T::one() - t;
        let three = T::cst(3.0);
        Column {
            offset: o.as_f64() as isize,
            b: [s * s * s, three * s * s * t, three * s * t * t, t * t * t],
        }
    }
}

/// Inner control point increments of the segment over cell value `f0`, as
/// linear forms in `(fm, f0, fp)`: `P1 - F_left` and `F_right - P2`. Their sum
/// is kept at or below `f0`, so the segment is monotone for `f ≥ 0`.
#[inline]
fn increments<T: Real>(fm: T, f0: T, fp: T) -> [[T; 3]; 2] {
    let z = T::zero();
    let sixth = T::one() / T::cst(6.0);
    let a = (fm + f0) * sixth;
    let b = (f0 + fp) * sixth;
    let half = f0 * T::half();
    let raw_a = [sixth, sixth, z];
    let raw_b = [z, sixth, sixth];
    if a + b <= f0 {
        [raw_a, raw_b]
    } else if a <= half {
        [raw_a, [-sixth, T::one() - sixth, z]]
    } else if b <= half {
        [[z, T::one() - sixth, -sixth], raw_b]
    } else {
        [[z, T::half(), z], [z, T::half(), z]]
    }
}

/// Weights of the four cell values `v = f[j-1..=j+2]` in one output value,
/// with the limiter decisions taken at `v`.
#[inline]
fn weights<T: Real>(b: &[T; 4], v: [T; 4]) -> [T; 4] {
    // out = f_j + b1 (a'_{j+1} - a'_j) + (b2 + b3)(f_{j+1} - f_j) - b2 (b'_{j+1} - b'_j)
    let lo = increments(v[0], v[1], v[2]);
    let hi = increments(v[1], v[2], v[3]);
    let tail = b[2] + b[3];
    let mut w = [T::zero(), T::one() - tail, tail, T::zero()];
    for k in 0..3 {
        w[k] -= b[1] * lo[0][k] - b[2] * lo[1][k];
        w[k + 1] += b[1] * hi[0][k] - b[2] * hi[1][k];
    }
    w
}

#[inline]
fn interpolate<T: Real>(b: &[T; 4], v: [T; 4]) -> T {
    let w = weights(b, v);
    w[0] * v[0] + w[1] * v[1] + w[2] * v[2] + w[3] * v[3]
}

/// Largest `|τ v| / Δx` over the velocity cell centers.
pub fn position_courant<T: Real>(grid: &PhaseGrid<T>, tau: T) -> T {
    (tau * grid.v_coord(grid.n - 1)).abs().max((tau * grid.v_coord(0)).abs()) / grid.dx
}

pub(crate) fn check_position_cfl<T: Real>(grid: &PhaseGrid<T>, tau: T) -> Result<(), NumericalError> {
    let c = position_courant(grid, tau);
    if !c.is_finite() {
        return Err(NumericalError::NonFinite("free transport".to_string()));
    }
    if c > T::one() {
        return Err(NumericalError::Cfl { what: "position", ratio: c.as_f64(), limit: 1.0 });
    }
    Ok(())
}

fn columns<T: Real>(grid: &PhaseGrid<T>, tau: T) -> Vec<Column<T>> {
    (0..grid.n).map(|j| Column::new(tau * grid.v_coord(j) / grid.dx)).collect()
}

/// Flat block index of spatial cell `i` along `axis` with the other spatial index `other`.
#[inline]
fn block(n: usize, axis: usize, i: usize, other: usize) -> usize {
    if axis == 0 {
        i * n + other
    } else {
        other * n + i
    }
}

#[inline]
fn column_of(n: usize, axis: usize, q: usize) -> usize {
    if axis == 0 {
        q / n
    } else {
        q % n
    }
}

fn near<F: Fn(usize) -> bool>(n: usize, i: usize, reach: usize, pred: F) -> bool {
    let lo = i.saturating_sub(reach);
    let hi = (i + reach).min(n - 1);
    (lo..=hi).any(pred)
}

/// Shifts `f` along spatial axis `axis` (0 = x1, 1 = x2) by `τ v_axis`.
pub(crate) fn shift_axis<T: Real>(grid: &PhaseGrid<T>, f: &[T], tau: T, axis: usize) -> Vec<T> {
    let n = grid.n;
    let nv = n * n;
    let cols = columns(grid, tau);
    let active = super::grid::active_cells(f, nv);
    let mut out = vec![T::zero(); f.len()];
    let read = |i: isize, other: usize, q: usize| -> T {
        if i < 0 || i as usize >= n {
            T::zero()
        } else {
            f[block(n, axis, i as usize, other) * nv + q]
        }
    };
    for other in 0..n {
        for i in 0..n {
            if !near(n, i, 2, |k| active[block(n, axis, k, other)]) {
                continue;
            }
            let base = block(n, axis, i, other) * nv;
            for q in 0..nv {
                let col = &cols[column_of(n, axis, q)];
                let j = i as isize + col.offset;
                let v = [read(j - 1, other, q), read(j, other, q), read(j + 1, other, q), read(j + 2, other, q)];
                out[base + q] = interpolate(&col.b, v);
            }
        }
    }
    out
}

/// Transpose of [`shift_axis`] at the input `f`: returns `∂J/∂f` from
/// `gout = ∂J/∂out`. Only spatial cells flagged in `mask` are computed;
/// the rest are zero.
pub(crate) fn shift_axis_transpose<T: Real>(
    grid: &PhaseGrid<T>,
    f: &[T],
    tau: T,
    axis: usize,
    gout: &[T],
    mask: &[bool],
) -> Vec<T> {
    let n = grid.n;
    let nv = n * n;
    let cols = columns(grid, tau);
    let mut gin = vec![T::zero(); f.len()];
    let read = |i: isize, other: usize, q: usize| -> T {
        if i < 0 || i as usize >= n {
            T::zero()
        } else {
            f[block(n, axis, i as usize, other) * nv + q]
        }
    };
    for other in 0..n {
        for i in 0..n {
            if !near(n, i, 3, |k| mask[block(n, axis, k, other)]) {
                continue;
            }
            let base = block(n, axis, i, other) * nv;
            for q in 0..nv {
                let g = gout[base + q];
                if g == T::zero() {
                    continue;
                }
                let col = &cols[column_of(n, axis, q)];
                let j = i as isize + col.offset;
                let v = [read(j - 1, other, q), read(j, other, q), read(j + 1, other, q), read(j + 2, other, q)];
                let w = weights(&col.b, v);
                for (k, wk) in w.iter().enumerate() {
                    let node = j - 1 + k as isize;
                    if node >= 0 && (node as usize) < n && *wk != T::zero() {
                        gin[block(n, axis, node as usize, other) * nv + q] += g * *wk;
                    }
                }
            }
        }
    }
    for (s, m) in mask.iter().enumerate() {
        if !*m {
            gin[s * nv..(s + 1) * nv].iter_mut().for_each(|v| *v = T::zero());
        }
    }
    gin
}

/// Free transport over `τ`: a shift along `x1` followed by one along `x2`.
pub fn advect_x<T: Real>(f: &DensityField<T>, tau: T) -> Result<DensityField<T>, NumericalError> {
    check_position_cfl(&f.grid, tau)?;
    let once = shift_axis(&f.grid, &f.f, tau, 0);
    let twice = shift_axis(&f.grid, &once, tau, 1);
    Ok(DensityField { grid: f.grid, f: twice, d: f.d.clone() })
}
