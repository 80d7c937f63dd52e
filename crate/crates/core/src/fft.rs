//! Multi-dimensional complex FFTs over row-major buffers, with a process-wide
//! plan cache.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Scalar;

type PlanKey = (TypeId, usize, bool);
type PlanMap = HashMap<PlanKey, Arc<dyn Any + Send + Sync>>;

fn plans() -> &'static Mutex<PlanMap> {
    static PLANS: OnceLock<Mutex<PlanMap>> = OnceLock::new();
    PLANS.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan<S: Scalar>(len: usize, inverse: bool) -> Arc<dyn Fft<S>> {
    let key = (TypeId::of::<S>(), len, inverse);
    let mut map = plans().lock().expect("fft plan cache poisoned");
    let entry = map.entry(key).or_insert_with(|| {
        let mut planner = FftPlanner::<S>::new();
        let p: Arc<dyn Fft<S>> = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        Arc::new(p)
    });
    entry
        .downcast_ref::<Arc<dyn Fft<S>>>()
        .expect("plan cache keyed by scalar type")
        .clone()
}

/// In-place unnormalized DFT along every axis of a `dim`-dimensional cube with
/// `n` points per axis.
pub fn fft_cube<S: Scalar>(data: &mut [Complex<S>], dim: usize, n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let fft = plan::<S>(n, inverse);
    // last axis is contiguous: rustfft batches over consecutive chunks
    fft.process(data);
    if dim == 1 {
        return;
    }
    let mut line = vec![Complex::new(S::zero(), S::zero()); n];
    for axis in 0..dim - 1 {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

/// Inverse transform including the `1/n^dim` normalization.
pub fn ifft_cube_normalized<S: Scalar>(data: &mut [Complex<S>], dim: usize, n: usize) {
    fft_cube(data, dim, n, true);
    let scale = S::one() / S::lit(data.len() as f64);
    for v in data.iter_mut() {
        *v = *v * scale;
    }
}
