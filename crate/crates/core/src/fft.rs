//! Multi-dimensional FFT over the flat row-major buffers used by `Field`.
//!
//! Plans are cached per thread; transforms are applied axis by axis through
//! strided gather/scatter into a scratch line.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// In-place FFT along one storage axis of a row-major buffer.
pub fn transform_axis(data: &mut [Complex64], shape: &[usize], axis: usize, inverse: bool) {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let fft = plan(len, inverse);
    let mut line = vec![Complex64::new(0.0, 0.0); len];
    let norm = 1.0 / len as f64;
    for o in 0..outer {
        let base_o = o * len * stride;
        for s in 0..stride {
            let base = base_o + s;
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[base + i * stride];
            }
            fft.process(&mut line);
            if inverse {
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = v * norm;
                }
            } else {
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

/// Forward FFT over all axes (unnormalized).
pub fn forward(data: &mut [Complex64], shape: &[usize]) {
    for axis in 0..shape.len() {
        transform_axis(data, shape, axis, false);
    }
}

/// Inverse FFT over all axes (normalized so that inverse(forward(x)) == x).
pub fn inverse(data: &mut [Complex64], shape: &[usize]) {
    for axis in 0..shape.len() {
        transform_axis(data, shape, axis, true);
    }
}
