//! Physical ↔ spectral transforms.
//!
//! Both directions pair two real sequences into one complex FFT. The
//! vertical transforms are DCT-I / DST-I computed from the even / odd
//! extension of length `2·N2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::Parity;
use super::grid::SlabGrid;
use crate::par;

pub(crate) struct Plans {
    h_fwd: Arc<dyn Fft<f64>>,
    h_inv: Arc<dyn Fft<f64>>,
    v_fwd: Arc<dyn Fft<f64>>,
    v_inv: Arc<dyn Fft<f64>>,
}

type PlanCache = Mutex<HashMap<(usize, usize), Arc<Plans>>>;

fn plans(n1: usize, n2: usize) -> Arc<Plans> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((n1, n2))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                h_fwd: planner.plan_fft_forward(n1),
                h_inv: planner.plan_fft_inverse(n1),
                v_fwd: planner.plan_fft_forward(2 * n2),
                v_inv: planner.plan_fft_inverse(2 * n2),
            })
        })
        .clone()
}

/// Number of whole work units per parallel chunk, aiming at a few dozen chunks.
fn units_per_chunk(units: usize) -> usize {
    (units / 32).max(1)
}

fn transpose(src: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

/// Physical samples (row-major over `(i, j)`) to packed spectral coefficients.
pub(crate) fn forward(grid: &SlabGrid, parity: Parity, data: &[f64]) -> Vec<f64> {
    let (n1, nv) = (grid.n1(), grid.nv());
    let plans = plans(n1, grid.n2());
    // Horizontal pass on rows of constant j.
    let mut rows = transpose(data, n1, nv);
    horizontal_forward(&plans, n1, nv, &mut rows);
    let mut cols = transpose(&rows, nv, n1);
    vertical(&plans, grid, parity, &mut cols, true);
    cols
}

/// Packed spectral coefficients back to physical samples.
pub(crate) fn inverse(grid: &SlabGrid, parity: Parity, data: &[f64]) -> Vec<f64> {
    let (n1, nv) = (grid.n1(), grid.nv());
    let plans = plans(n1, grid.n2());
    let mut cols = data.to_vec();
    vertical(&plans, grid, parity, &mut cols, false);
    let mut rows = transpose(&cols, n1, nv);
    horizontal_inverse(&plans, n1, nv, &mut rows);
    transpose(&rows, nv, n1)
}

fn horizontal_forward(plans: &Plans, n1: usize, nrows: usize, rows: &mut [f64]) {
    let pairs = nrows.div_ceil(2);
    let per = units_per_chunk(pairs);
    let scale = 1.0 / n1 as f64;
    par::for_each_chunk(rows, 2 * per * n1, |_, chunk| {
        let mut buf = vec![Complex64::new(0.0, 0.0); n1];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plans.h_fwd.get_inplace_scratch_len()];
        for pair in chunk.chunks_mut(2 * n1) {
            let two = pair.len() == 2 * n1;
            for i in 0..n1 {
                let y = if two { pair[n1 + i] } else { 0.0 };
                buf[i] = Complex64::new(pair[i], y);
            }
            plans.h_fwd.process_with_scratch(&mut buf, &mut scratch);
            let (x, rest) = pair.split_at_mut(n1);
            pack(&buf, x, scale, false);
            if two {
                pack(&buf, rest, scale, true);
            }
        }
    });
}

/// Split the paired spectrum and write packed real coefficients.
fn pack(z: &[Complex64], out: &mut [f64], scale: f64, second: bool) {
    let n = z.len();
    let get = |k: usize| {
        let a = z[k];
        let b = z[(n - k) % n].conj();
        if second {
            (a - b) * Complex64::new(0.0, -0.5)
        } else {
            (a + b) * 0.5
        }
    };
    out[0] = get(0).re * scale;
    for k in 1..n / 2 {
        let c = get(k);
        out[2 * k - 1] = 2.0 * c.re * scale;
        out[2 * k] = -2.0 * c.im * scale;
    }
    out[n - 1] = get(n / 2).re * scale;
}

fn unpack(coef: &[f64], n: usize, k: usize) -> Complex64 {
    if k == 0 {
        Complex64::new(coef[0], 0.0)
    } else if k == n / 2 {
        Complex64::new(coef[n - 1], 0.0)
    } else if k < n / 2 {
        Complex64::new(coef[2 * k - 1], -coef[2 * k]) * 0.5
    } else {
        unpack(coef, n, n - k).conj()
    }
}

fn horizontal_inverse(plans: &Plans, n1: usize, nrows: usize, rows: &mut [f64]) {
    let pairs = nrows.div_ceil(2);
    let per = units_per_chunk(pairs);
    par::for_each_chunk(rows, 2 * per * n1, |_, chunk| {
        let mut buf = vec![Complex64::new(0.0, 0.0); n1];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plans.h_inv.get_inplace_scratch_len()];
        for pair in chunk.chunks_mut(2 * n1) {
            let two = pair.len() == 2 * n1;
            for (k, b) in buf.iter_mut().enumerate() {
                let x = unpack(&pair[..n1], n1, k);
                let y = if two {
                    unpack(&pair[n1..], n1, k)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                *b = x + Complex64::new(0.0, 1.0) * y;
            }
            plans.h_inv.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n1 {
                pair[i] = buf[i].re;
                if two {
                    pair[n1 + i] = buf[i].im;
                }
            }
        }
    });
}

/// In-place vertical DCT-I / DST-I on every column of length `N2 + 1`.
fn vertical(plans: &Plans, grid: &SlabGrid, parity: Parity, cols: &mut [f64], fwd: bool) {
    let m = grid.n2();
    let nv = grid.nv();
    let ncols = grid.n1();
    let per = units_per_chunk(ncols / 2);
    let fft = if fwd { &plans.v_fwd } else { &plans.v_inv };
    par::for_each_chunk(cols, 2 * per * nv, |_, chunk| {
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for pair in chunk.chunks_mut(2 * nv) {
            let (x, y) = pair.split_at_mut(nv);
            match (parity, fwd) {
                (Parity::Neumann, true) => {
                    for j in 0..=m {
                        buf[j] = Complex64::new(x[j], y[j]);
                    }
                    for j in 1..m {
                        buf[2 * m - j] = buf[j];
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    let s = 1.0 / m as f64;
                    for l in 0..=m {
                        let w = if l == 0 || l == m { 0.5 * s } else { s };
                        x[l] = buf[l].re * w;
                        y[l] = buf[l].im * w;
                    }
                }
                (Parity::Dirichlet, true) => {
                    buf[0] = Complex64::new(0.0, 0.0);
                    buf[m] = Complex64::new(0.0, 0.0);
                    for j in 1..m {
                        buf[j] = Complex64::new(x[j], y[j]);
                        buf[2 * m - j] = -buf[j];
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    // F = iG_x - G_y with G = -2 Σ f sin; s_l = -G_l / M.
                    let s = 1.0 / m as f64;
                    x[0] = 0.0;
                    y[0] = 0.0;
                    x[m] = 0.0;
                    y[m] = 0.0;
                    for l in 1..m {
                        x[l] = -buf[l].im * s;
                        y[l] = buf[l].re * s;
                    }
                }
                (Parity::Neumann, false) => {
                    buf[0] = Complex64::new(x[0], y[0]);
                    buf[m] = Complex64::new(x[m], y[m]);
                    for l in 1..m {
                        let c = Complex64::new(x[l], y[l]) * 0.5;
                        buf[l] = c;
                        buf[2 * m - l] = c;
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    for j in 0..=m {
                        x[j] = buf[j].re;
                        y[j] = buf[j].im;
                    }
                }
                (Parity::Dirichlet, false) => {
                    buf[0] = Complex64::new(0.0, 0.0);
                    buf[m] = Complex64::new(0.0, 0.0);
                    for l in 1..m {
                        // E_l = -i s/2, E_{2M-l} = i s/2, with s = s_x + i s_y.
                        let s = Complex64::new(x[l], y[l]);
                        buf[l] = Complex64::new(0.0, -0.5) * s;
                        buf[2 * m - l] = Complex64::new(0.0, 0.5) * s;
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    x[0] = 0.0;
                    y[0] = 0.0;
                    x[m] = 0.0;
                    y[m] = 0.0;
                    for j in 1..m {
                        x[j] = buf[j].re;
                        y[j] = buf[j].im;
                    }
                }
            }
        }
    });
}
