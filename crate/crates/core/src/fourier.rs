//! Discrete Fourier transform with the unitary convention
//! `F f(xi) = (2 pi)^(-n/2) int e^{-i x . xi} f(x) dx`.
//!
//! The rectangle rule on `[-L, L)^n` is evaluated exactly by an FFT plus a
//! phase correction for the grid offset. Frequencies come out in increasing
//! order `xi_j = j pi / L`, `j = -N/2 .. N/2 - 1`, which are the space points
//! of [`Grid::dual`]. The inverse is the exact inverse of the forward map.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::Result;
use crate::grid::{Grid, SampledFunction, Side};

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let key = (len, direction == FftDirection::Forward);
    if let Some(p) = guard.1.get(&key) {
        return p.clone();
    }
    let p = guard.0.plan_fft(len, direction);
    guard.1.insert(key, p.clone());
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Applies the one-dimensional transform along `axis` of row-major data.
pub(crate) fn transform_axis(data: &mut [Complex64], grid: &Grid, axis: usize, direction: Direction) {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    debug_assert_eq!(data.len(), grid.len());
    let inner = n.pow((dim - 1 - axis) as u32);
    let fft = plan(
        n,
        match direction {
            Direction::Forward => FftDirection::Forward,
            Direction::Inverse => FftDirection::Inverse,
        },
    );
    let step = match direction {
        Direction::Forward => grid.spacing(),
        Direction::Inverse => grid.frequency_spacing(),
    };
    let scale = step / (2.0 * std::f64::consts::PI).sqrt();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let lines = |buf: &mut [Complex64], scratch: &mut [Complex64]| match direction {
        Direction::Forward => {
            fft.process_with_scratch(buf, scratch);
            for line in buf.chunks_exact_mut(n) {
                line.rotate_left(n / 2);
                alternate(line, scale);
            }
        }
        Direction::Inverse => {
            for line in buf.chunks_exact_mut(n) {
                line.rotate_left(n / 2);
                alternate(line, scale);
            }
            fft.process_with_scratch(buf, scratch);
        }
    };
    if inner == 1 {
        lines(data, &mut scratch);
        return;
    }
    let block = n * inner;
    let mut t = vec![Complex64::new(0.0, 0.0); block];
    for chunk in data.chunks_exact_mut(block) {
        transpose(chunk, &mut t, n, inner);
        lines(&mut t, &mut scratch);
        transpose(&t, chunk, inner, n);
    }
}

fn alternate(line: &mut [Complex64], scale: f64) {
    for (j, z) in line.iter_mut().enumerate() {
        *z *= if j % 2 == 0 { scale } else { -scale };
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Space samples to frequency samples on the same grid.
pub fn forward(f: &SampledFunction) -> Result<SampledFunction> {
    f.require_side(Side::Space)?;
    let grid = *f.grid();
    let mut data = f.samples().to_vec();
    for axis in 0..grid.dim() {
        transform_axis(&mut data, &grid, axis, Direction::Forward);
    }
    Ok(SampledFunction::from_parts(grid, Side::Frequency, data))
}

/// Frequency samples back to space samples.
pub fn inverse(f: &SampledFunction) -> Result<SampledFunction> {
    f.require_side(Side::Frequency)?;
    let grid = *f.grid();
    let mut data = f.samples().to_vec();
    for axis in 0..grid.dim() {
        transform_axis(&mut data, &grid, axis, Direction::Inverse);
    }
    Ok(SampledFunction::from_parts(grid, Side::Space, data))
}

/// Fourier transform viewed as a space function on the dual grid.
///
/// This is the form in which images are measured in function space norms.
pub fn forward_as_space(f: &SampledFunction) -> Result<SampledFunction> {
    Ok(forward(f)?.dual_view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, lp_norm, pairing};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian(grid: Grid, side: Side) -> SampledFunction {
        SampledFunction::from_fn(grid, side, |x| c((-0.5 * x.iter().map(|t| t * t).sum::<f64>()).exp(), 0.0)).unwrap()
    }

    fn direct_dft(f: &SampledFunction) -> Vec<Complex64> {
        let g = f.grid();
        let xs = g.axis(Side::Space);
        let xis = g.axis(Side::Frequency);
        let dim = g.dim();
        let norm = g.cell_volume(Side::Space) * (2.0 * PI).powf(-(dim as f64) / 2.0);
        (0..g.len())
            .map(|out| {
                let jo = g.multi_index(out);
                let mut s = c(0.0, 0.0);
                for (inp, v) in f.samples().iter().enumerate() {
                    let ji = g.multi_index(inp);
                    let phase: f64 = (0..dim).map(|a| xs[ji[a]] * xis[jo[a]]).sum();
                    s += v * Complex64::from_polar(1.0, -phase);
                }
                s * norm
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        for (dim, l, n) in [(1, 3.0, 16), (2, 2.5, 8), (3, 1.7, 8)] {
            let g = Grid::new(dim, l, n).unwrap();
            let f = SampledFunction::from_fn(g, Side::Space, |x| {
                c(x.iter().map(|t| (1.3 * t).sin() + t * t).sum(), x[0].cos() - 0.25)
            })
            .unwrap();
            let fast = forward(&f).unwrap();
            let slow = direct_dft(&f);
            for (a, b) in fast.samples().iter().zip(&slow) {
                assert!((a - b).norm() < 1e-11, "{dim}D mismatch {a} vs {b}");
            }
        }
    }

    #[test]
    fn gaussian_is_a_fixed_point() {
        for (dim, n) in [(1, 256), (2, 128)] {
            let g = Grid::new(dim, 12.0, n).unwrap();
            let f = gaussian(g, Side::Space);
            let ff = forward(&f).unwrap();
            let expected = gaussian(g, Side::Frequency);
            let err = ff.sub(&expected).unwrap().max_abs();
            assert!(err < 1e-12, "{dim}D error {err}");
        }
    }

    #[test]
    fn plancherel_and_exact_inverse() {
        let g = Grid::new(2, 6.0, 64).unwrap();
        let f = SampledFunction::from_fn(g, Side::Space, |x| {
            c((-(x[0] - 1.0).powi(2) - x[1] * x[1]).exp(), (-x[0] * x[0] - 2.0 * x[1] * x[1]).exp() * x[1])
        })
        .unwrap();
        let ff = forward(&f).unwrap();
        let n0 = lp_norm(&f, 2.0).unwrap();
        let n1 = lp_norm(&ff, 2.0).unwrap();
        assert!((n0 - n1).abs() < 1e-13 * n0);
        let back = inverse(&ff).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn double_forward_reflects() {
        let g = Grid::new(2, 8.0, 64).unwrap();
        let f = SampledFunction::from_fn(g, Side::Space, |x| c((-(x[0] - 1.5).powi(2) - (x[1] + 0.5).powi(2)).exp(), x[0] * (-x[0] * x[0] - x[1] * x[1]).exp())).unwrap();
        let twice = forward(&forward_as_space(&f).unwrap()).unwrap().dual_view();
        assert_eq!(twice.grid(), f.grid());
        assert!(twice.sub(&f.reflected()).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn self_duality_of_pairing() {
        let g = Grid::new(1, 10.0, 256).unwrap();
        let f = SampledFunction::from_fn(g, Side::Space, |x| c((-x[0] * x[0]).exp() * (1.0 + x[0]), 0.3 * (-x[0] * x[0] / 3.0).exp())).unwrap();
        let h = SampledFunction::from_fn(g.dual(), Side::Space, |x| c((x[0] * 2.0).cos() * (-(x[0] - 1.0).powi(2)).exp(), 0.0)).unwrap();
        let lhs = pairing(&forward_as_space(&f).unwrap(), &h).unwrap();
        let rhs = pairing(&f, &forward_as_space(&h).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-13 * lhs.norm().max(1.0));
        let ip = inner_product(&f, &f.scale(c(0.5, 2.0))).unwrap();
        let ff = forward(&f).unwrap();
        let ip_hat = inner_product(&ff, &ff.scale(c(0.5, 2.0))).unwrap();
        assert!((ip - ip_hat).norm() < 1e-13);
    }

    #[test]
    fn rejects_wrong_side() {
        let g = Grid::new(1, 4.0, 16).unwrap();
        let f = SampledFunction::zeros(g, Side::Frequency);
        assert!(forward(&f).is_err());
        assert!(inverse(&f.dual_view()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_random(seed in proptest::collection::vec(-1.0f64..1.0, 2 * 64)) {
            let g = Grid::new(1, 3.3, 64).unwrap();
            let s: Vec<Complex64> = seed.chunks(2).map(|p| c(p[0], p[1])).collect();
            let f = SampledFunction::new(g, Side::Space, s).unwrap();
            let ff = forward(&f).unwrap();
            let back = inverse(&ff).unwrap();
            prop_assert!(back.sub(&f).unwrap().max_abs() < 1e-13);
            let n0 = lp_norm(&f, 2.0).unwrap();
            prop_assert!((lp_norm(&ff, 2.0).unwrap() - n0).abs() <= 1e-12 * n0.max(1e-300));
        }

        #[test]
        fn linearity(a in proptest::collection::vec(-1.0f64..1.0, 64), b in proptest::collection::vec(-1.0f64..1.0, 64), s in -3.0f64..3.0) {
            let g = Grid::new(2, 2.0, 8).unwrap();
            let f = SampledFunction::new(g, Side::Space, a.iter().map(|&x| c(x, 0.0)).collect()).unwrap();
            let h = SampledFunction::new(g, Side::Space, b.iter().map(|&x| c(0.0, x)).collect()).unwrap();
            let lhs = forward(&f.scale(c(s, 0.0)).add(&h).unwrap()).unwrap();
            let rhs = forward(&f).unwrap().scale(c(s, 0.0)).add(&forward(&h).unwrap()).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-13);
        }
    }
}
