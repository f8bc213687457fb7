//! Shared FFT plan cache.
//!
//! rustfft plans are cheap to reuse and expensive to rebuild inside the time
//! stepping loop, so we keep one forward/inverse pair per transform size.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalized DFT: out[m] = sum_j buf[j] exp(-2 pi i j m / n).
pub(crate) fn dft_in_place(buf: &mut [Complex64]) {
    plans(buf.len()).0.process(buf);
}

/// Unnormalized inverse DFT: out[j] = sum_m buf[m] exp(+2 pi i j m / n).
pub(crate) fn idft_in_place(buf: &mut [Complex64]) {
    plans(buf.len()).1.process(buf);
}
