//! Thin wrappers over `rustfft` with a per-thread planner cache.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized transform in place: forward uses e^{-2πijk/n}, inverse e^{+2πijk/n}.
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    if buf.len() <= 1 {
        return;
    }
    plan(buf.len(), inverse).process(buf);
}

/// Row-major 2-d transform over a `rows x cols` buffer.
pub fn fft2_in_place(buf: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), rows * cols);
    let row_plan = plan(cols, inverse);
    buf.par_chunks_mut(cols).for_each(|row| row_plan.process(row));

    let col_plan = plan(rows, inverse);
    let mut cols_buf: Vec<Vec<Complex64>> = (0..cols)
        .into_par_iter()
        .map(|c| (0..rows).map(|r| buf[r * cols + c]).collect())
        .collect();
    cols_buf.par_iter_mut().for_each(|col| col_plan.process(col));
    for (c, col) in cols_buf.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            buf[r * cols + c] = *v;
        }
    }
}

/// Transform over a d-dimensional (d = 1 or 2) row-major grid.
pub fn fftn_in_place(buf: &mut [Complex64], sizes: &[usize], inverse: bool) {
    match sizes {
        [n] => {
            debug_assert_eq!(buf.len(), *n);
            fft_in_place(buf, inverse)
        }
        [r, c] => fft2_in_place(buf, *r, *c, inverse),
        _ => unreachable!("only d = 1, 2 grids are supported"),
    }
}
