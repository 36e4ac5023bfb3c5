//! FFT plumbing: forward/inverse transforms of one component and spectral
//! derivatives.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{GridSpec, Point};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform_axis(grid: &GridSpec, data: &mut [Complex64], axis: usize, inverse: bool) {
    let n = grid.axis(axis).points;
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    if grid.dims() == 1 || axis == 1 {
        // contiguous lines
        fft.process(data);
        return;
    }
    let stride = grid.axis(1).points;
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..stride {
        for i in 0..n {
            column[i] = data[i * stride + j];
        }
        fft.process(&mut column);
        for i in 0..n {
            data[i * stride + j] = column[i];
        }
    }
}

/// Unnormalized forward DFT over all axes.
pub(crate) fn forward(grid: &GridSpec, data: &mut [Complex64]) {
    for a in 0..grid.dims() {
        transform_axis(grid, data, a, false);
    }
}

/// Inverse DFT over all axes, normalized so that `inverse(forward(x)) = x`.
pub(crate) fn inverse(grid: &GridSpec, data: &mut [Complex64]) {
    for a in 0..grid.dims() {
        transform_axis(grid, data, a, true);
    }
    let s = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|z| *z *= s);
}

/// Angular wavenumber of mode `j` on an axis of `n` points and length `extent`.
pub(crate) fn wavenumber(j: usize, n: usize, extent: f64) -> f64 {
    let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * PI * m / extent
}

pub(crate) fn wavevector(grid: &GridSpec, flat: usize) -> Point {
    let idx = grid.unflatten(flat);
    let mut k = [0.0; 2];
    for (a, axis) in grid.axes().iter().enumerate() {
        k[a] = wavenumber(idx[a], axis.points, axis.extent);
    }
    k
}

fn is_nyquist(grid: &GridSpec, flat: usize, axis: usize) -> bool {
    grid.unflatten(flat)[axis] == grid.axis(axis).points / 2
}

/// Multiplies the spectrum of `data` by `f(k)` in place.
pub(crate) fn apply_multiplier(grid: &GridSpec, data: &mut [Complex64], f: impl Fn(Point) -> Complex64) {
    forward(grid, data);
    for (flat, z) in data.iter_mut().enumerate() {
        *z *= f(wavevector(grid, flat));
    }
    inverse(grid, data);
}

/// `∂/∂x_axis` by the spectral method (Nyquist mode dropped).
pub(crate) fn derivative(grid: &GridSpec, data: &[Complex64], axis: usize) -> Vec<Complex64> {
    let mut buf = data.to_vec();
    forward(grid, &mut buf);
    for (flat, z) in buf.iter_mut().enumerate() {
        if is_nyquist(grid, flat, axis) {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= Complex64::new(0.0, wavevector(grid, flat)[axis]);
        }
    }
    inverse(grid, &mut buf);
    buf
}

/// `∇²` by the spectral method.
pub(crate) fn laplacian(grid: &GridSpec, data: &[Complex64]) -> Vec<Complex64> {
    let mut buf = data.to_vec();
    apply_multiplier(grid, &mut buf, |k| Complex64::new(-(k[0] * k[0] + k[1] * k[1]), 0.0));
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::Axis;

    #[test]
    fn round_trip_is_identity() {
        let grid = GridSpec::new(vec![Axis::centered(3.0, 8), Axis::centered(2.0, 16)]).unwrap();
        let data: Vec<Complex64> = (0..grid.len()).map(|i| Complex64::new(i as f64, -(i as f64).sqrt())).collect();
        let mut buf = data.clone();
        forward(&grid, &mut buf);
        inverse(&grid, &mut buf);
        let err = buf.iter().zip(&data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn derivative_of_resolved_mode_is_exact() {
        let grid = GridSpec::line(0.0, 2.0 * PI, 64).unwrap();
        let data: Vec<Complex64> = (0..64).map(|i| Complex64::new((3.0 * grid.point(i)[0]).sin(), 0.0)).collect();
        let d = derivative(&grid, &data, 0);
        for (i, z) in d.iter().enumerate() {
            assert!((z.re - 3.0 * (3.0 * grid.point(i)[0]).cos()).abs() < 1e-12);
        }
        let l = laplacian(&grid, &data);
        for (z, f) in l.iter().zip(&data) {
            assert!((z + 9.0 * f).norm() < 1e-11);
        }
    }

    #[test]
    fn wavenumbers_wrap_at_half() {
        assert_eq!(wavenumber(0, 8, 2.0 * PI), 0.0);
        assert_eq!(wavenumber(3, 8, 2.0 * PI), 3.0);
        assert_eq!(wavenumber(4, 8, 2.0 * PI), -4.0);
        assert_eq!(wavenumber(7, 8, 2.0 * PI), -1.0);
    }
}
