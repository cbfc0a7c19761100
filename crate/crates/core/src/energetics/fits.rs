use super::{japanese_bracket, EnergyReport};
use crate::error::{Error, Result};
use crate::spectral::{Field, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateModel {
    /// `q ≈ C e^{Λt}`; the fitted value is `Λ`.
    Exponential,
    /// `q ≈ C ⟨t⟩^{−p}`; the fitted value is `p`.
    Power,
}

impl RateModel {
    pub fn name(self) -> &'static str {
        match self {
            RateModel::Exponential => "exponential",
            RateModel::Power => "power",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub quantity: String,
    pub model: RateModel,
    pub window: (f64, f64),
    pub value: f64,
    pub log_prefactor: f64,
    /// RMS of the log-space residuals.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares fit of `log q` against `t` or `log⟨t⟩` over `window`.
pub fn fit_rate(
    series: &[(f64, f64)],
    quantity: &str,
    window: (f64, f64),
    model: RateModel,
) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(Error::Fit(format!("empty window [{lo}, {hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, q) in series.iter().filter(|(t, _)| *t >= lo && *t <= hi) {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Fit(format!("{quantity} is not positive at t = {t}")));
        }
        xs.push(match model {
            RateModel::Exponential => t,
            RateModel::Power => japanese_bracket(t).ln(),
        });
        ys.push(q.ln());
    }
    if xs.len() < 2 {
        return Err(Error::Fit(format!(
            "window [{lo}, {hi}] holds {} samples of {quantity}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("window samples share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    Ok(DecayFit {
        quantity: quantity.to_string(),
        model,
        window,
        value: match model {
            RateModel::Exponential => slope,
            RateModel::Power => -slope,
        },
        log_prefactor: intercept,
        residual: (rss / n).sqrt(),
        samples: xs.len(),
    })
}

/// Named scalar from a report, as used by fits and CSV output.
pub fn report_quantity(r: &EnergyReport, name: &str) -> Option<f64> {
    let v = match name {
        "u_L2" => r.norms.u_l2,
        "eta_L2" => r.norms.eta_l2,
        "eta1_L2" => r.norms.eta1_l2,
        "E_total" => r.e_total,
        "D_total" => r.d_total,
        "frakE" => r.frak_e,
        "frakD" => r.frak_d,
        "decay_weighted" => r.decay_weighted,
        "u_H2" => r.norms.u_h2,
        "q_H1" => r.norms.q_h1,
        "ut_L2" => r.norms.ut_l2,
        _ => {
            let i = super::ESCAPE_NAMES.iter().position(|n| *n == name)?;
            *r.escape.get(i)?
        }
    };
    Some(v)
}

/// [`fit_rate`] on a named report quantity.
pub fn fit_series(
    reports: &[EnergyReport],
    quantity: &str,
    window: (f64, f64),
    model: RateModel,
) -> Result<DecayFit> {
    let series = reports
        .iter()
        .map(|r| {
            report_quantity(r, quantity)
                .map(|q| (r.t, q))
                .ok_or_else(|| Error::Fit(format!("unknown quantity {quantity}")))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_rate(&series, quantity, window, model)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyVerdict {
    pub pass: bool,
    /// `sup_t [ℰ(t) + ∫₀ᵗ𝒟] / ℰ(0)`.
    pub ratio: f64,
    pub bounded: bool,
    pub envelope_nonincreasing: bool,
    /// First report time at which either check fails.
    pub first_violation: Option<f64>,
    pub e0: f64,
    pub dissipation_integral: f64,
}

const ENVELOPE_WINDOWS: usize = 8;
const ENVELOPE_SLACK: f64 = 1e-6;

/// Boundedness of `ℰ + ∫𝒟` by `c_stab·ℰ(0)` and monotonicity of the
/// windowed maxima of `ℰ`.
pub fn monitor_energy_inequality(reports: &[EnergyReport], c_stab: f64) -> Result<EnergyVerdict> {
    if reports.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "energy monitor needs at least 10 reports, got {}",
            reports.len()
        )));
    }
    let e0 = reports[0].e_total;
    if !(e0 > 0.0) {
        return Err(Error::InvalidInput("initial energy is not positive".into()));
    }
    let mut integral = 0.0;
    let mut ratio = 1.0f64;
    let mut first_violation = None;
    for w in reports.windows(2) {
        integral += 0.5 * (w[1].t - w[0].t) * (w[0].d_total + w[1].d_total);
        let r = (w[1].e_total + integral) / e0;
        if !r.is_finite() || (r > c_stab && first_violation.is_none()) {
            first_violation = Some(w[1].t);
        }
        ratio = ratio.max(r);
    }
    let bounded = ratio.is_finite() && ratio <= c_stab;

    let t0 = reports[0].t;
    let span = reports[reports.len() - 1].t - t0;
    let mut maxima = vec![(f64::NEG_INFINITY, f64::NAN); ENVELOPE_WINDOWS];
    for r in reports {
        let w = if span > 0.0 {
            (((r.t - t0) / span) * ENVELOPE_WINDOWS as f64) as usize
        } else {
            0
        };
        let slot = &mut maxima[w.min(ENVELOPE_WINDOWS - 1)];
        if r.e_total > slot.0 {
            *slot = (r.e_total, r.t);
        }
    }
    let maxima: Vec<_> = maxima.into_iter().filter(|m| m.0.is_finite()).collect();
    let mut envelope_nonincreasing = true;
    for w in maxima.windows(2) {
        if w[1].0 > w[0].0 * (1.0 + ENVELOPE_SLACK) {
            envelope_nonincreasing = false;
            first_violation = Some(first_violation.map_or(w[1].1, |t: f64| t.min(w[1].1)));
            break;
        }
    }
    Ok(EnergyVerdict {
        pass: bounded && envelope_nonincreasing,
        ratio,
        bounded,
        envelope_nonincreasing,
        first_violation,
        e0,
        dissipation_integral: integral,
    })
}

/// First time at which every selected escape quantity reaches `epsilon`.
///
/// `indices` select entries of [`EnergyReport::escape`]; an empty slice
/// selects all of them. The crossing is located by linear interpolation of
/// `min_i log(q_i/ε)` between reports.
pub fn detect_escape_time(
    reports: &[EnergyReport],
    epsilon: f64,
    indices: &[usize],
) -> Option<f64> {
    if !(epsilon > 0.0) {
        return None;
    }
    let score = |r: &EnergyReport| -> f64 {
        let pick = |i: usize| r.escape.get(i).copied().unwrap_or(0.0);
        let all: Vec<usize> = if indices.is_empty() {
            (0..r.escape.len()).collect()
        } else {
            indices.to_vec()
        };
        all.into_iter()
            .map(|i| (pick(i) / epsilon).ln())
            .fold(f64::INFINITY, f64::min)
    };
    let mut prev: Option<(f64, f64)> = None;
    for r in reports {
        let s = score(r);
        if s.is_nan() {
            return None;
        }
        if s >= 0.0 {
            return Some(match prev {
                Some((t0, s0)) if s0.is_finite() && s > s0 => t0 + (r.t - t0) * (-s0) / (s - s0),
                _ => r.t,
            });
        }
        prev = Some((r.t, s));
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftWindow {
    pub window: (f64, f64),
    /// `max ‖η₁(t) − η₁^∞‖₀` over the window.
    pub distance: f64,
    /// `max ‖η₁(t) − (η₁(t))_{y₁}‖₀` over the window.
    pub y1_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftLimit {
    /// `η₁^∞` samples on the vertical grid.
    pub profile: Vec<f64>,
    /// `‖η₁^∞‖₀` over the slab.
    pub estimate_norm: f64,
    /// `‖·‖₀` of the `n ≠ 0` part of the late-time average of `η₁`.
    pub y1_dependence: f64,
    pub windows: Vec<DriftWindow>,
}

impl DriftLimit {
    /// Whether the y₁-dependent residual shrinks over the last two windows.
    pub fn residual_decreasing(&self) -> bool {
        let n = self.windows.len();
        n >= 2 && self.windows[n - 1].y1_residual <= self.windows[n - 2].y1_residual
    }
}

fn split_mean(f: &Field) -> (Field, Field) {
    let mean = f.horizontal_mean();
    let grid = *f.grid();
    let nv = grid.nv();
    let mut m = Field::zeros(grid, f.parity(), Space::Physical);
    for (idx, v) in m.data_mut().iter_mut().enumerate() {
        *v = mean[idx % nv];
    }
    let rest = &f.physical() - &m;
    (m, rest)
}

/// Late-time limit of `η₁` from `(t, η₁)` snapshots.
///
/// The estimate is the trapezoid time-average over `[T/2, T]` of the
/// horizontal mean; windows are `[T/8, T/4]`, `[T/4, T/2]`, `[T/2, T]`.
pub fn drift_limit(series: &[(f64, Field)]) -> Result<DriftLimit> {
    let Some((t_end, last)) = series.last() else {
        return Err(Error::InvalidInput("no snapshots".into()));
    };
    let t_end = *t_end;
    let grid = *last.grid();
    let windows = [
        (t_end / 8.0, t_end / 4.0),
        (t_end / 4.0, t_end / 2.0),
        (t_end / 2.0, t_end),
    ];
    let count = |(lo, hi): (f64, f64)| series.iter().filter(|(t, _)| *t >= lo && *t <= hi).count();
    if !(t_end > 0.0) || series[0].0 > t_end / 8.0 || windows.iter().any(|w| count(*w) < 2) {
        return Err(Error::InvalidInput(format!(
            "snapshots do not span the dyadic windows below t = {t_end}"
        )));
    }
    let late: Vec<&(f64, Field)> = series.iter().filter(|(t, _)| *t >= t_end / 2.0).collect();
    let mut avg = Field::zeros(grid, last.parity(), Space::Physical);
    let mut total = 0.0;
    for w in late.windows(2) {
        let dt = w[1].0 - w[0].0;
        avg.axpy(0.5 * dt, &w[0].1);
        avg.axpy(0.5 * dt, &w[1].1);
        total += dt;
    }
    let avg = avg.scale(1.0 / total);
    let (limit, wiggle) = split_mean(&avg);
    let windows = windows
        .iter()
        .map(|&(lo, hi)| {
            let mut distance = 0.0f64;
            let mut y1_residual = 0.0f64;
            for (_, f) in series.iter().filter(|(t, _)| *t >= lo && *t <= hi) {
                distance = distance.max((&f.physical() - &limit).norm_l2());
                y1_residual = y1_residual.max(split_mean(f).1.norm_l2());
            }
            DriftWindow {
                window: (lo, hi),
                distance,
                y1_residual,
            }
        })
        .collect();
    Ok(DriftLimit {
        profile: avg.horizontal_mean(),
        estimate_norm: limit.norm_l2(),
        y1_dependence: wiggle.norm_l2(),
        windows,
    })
}
