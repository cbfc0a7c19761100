//! Cosine moments of a vertical weight and the Gram matrices they generate.

use std::f64::consts::PI;

/// Eight-point Gauss–Legendre rule on `[-1, 1]`.
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// `C_p = ∫₀ʰ f(y) cos(pπy/h) dy` for `p = 0..=pmax`.
#[derive(Clone, Debug)]
pub struct VerticalMoments {
    h: f64,
    c: Vec<f64>,
}

impl VerticalMoments {
    /// `breaks` is the number of equal pieces on which `f` is smooth (the
    /// profile's sample intervals); each piece is subdivided as needed.
    pub fn new(f: impl Fn(f64) -> f64, h: f64, pmax: usize, breaks: usize) -> Self {
        let breaks = breaks.max(1);
        let sub = (2 * pmax).div_ceil(breaks).max(2);
        let cells = breaks * sub;
        let dy = h / cells as f64;
        let mut c = vec![0.0; pmax + 1];
        for cell in 0..cells {
            let mid = (cell as f64 + 0.5) * dy;
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let y = mid + 0.5 * dy * x;
                let fw = f(y) * w * 0.5 * dy;
                let theta = PI * y / h;
                let c1 = theta.cos();
                let (mut prev, mut cur) = (1.0, c1);
                c[0] += fw;
                if pmax >= 1 {
                    c[1] += fw * c1;
                }
                for cp in c.iter_mut().skip(2) {
                    let next = 2.0 * c1 * cur - prev;
                    prev = cur;
                    cur = next;
                    *cp += fw * cur;
                }
            }
        }
        Self { h, c }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn moment(&self, p: usize) -> f64 {
        self.c[p]
    }

    /// `∫ f sin(iπy/h) sin(jπy/h)`.
    pub fn sine(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.c[i.abs_diff(j)] - self.c[i + j])
    }

    /// `∫ f cos(iπy/h) cos(jπy/h)`.
    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.c[i.abs_diff(j)] + self.c[i + j])
    }
}
