//! Exponential decay-rate fits on `log E(t)`.

use crate::error::{Error, Result};

/// Least-squares line through `(t, log E)` on the tail window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// `-slope`, in 1/time.
    pub beta: f64,
    pub log_intercept: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub samples: usize,
    /// Whether some sample fell to the energy floor `1e-12 E(0)`.
    pub floor_reached: bool,
}

pub const DEFAULT_TAIL_FRACTION: f64 = 0.6;
pub const MIN_FIT_SAMPLES: usize = 10;
const FLOOR_FACTOR: f64 = 1e-12;

/// Fits the last `tail_fraction` of the samples lying above the floor.
pub fn fit_decay(times: &[f64], energies: &[f64], tail_fraction: f64) -> Result<DecayFit> {
    if times.len() != energies.len() {
        return Err(Error::InvalidArgument("times and energies differ in length".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument("tail fraction must lie in (0, 1]".into()));
    }
    let e0 = energies.first().copied().unwrap_or(0.0);
    let floor = FLOOR_FACTOR * e0;
    let eligible: Vec<usize> = (0..energies.len())
        .filter(|&k| energies[k] > floor && energies[k] > 0.0 && energies[k].is_finite())
        .collect();
    let floor_reached = eligible.len() < energies.len();
    let keep = ((eligible.len() as f64) * tail_fraction).ceil() as usize;
    let window = &eligible[eligible.len() - keep.min(eligible.len())..];
    if window.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            found: window.len(),
            required: MIN_FIT_SAMPLES,
        });
    }
    let n = window.len() as f64;
    let xs: Vec<f64> = window.iter().map(|&k| times[k]).collect();
    let ys: Vec<f64> = window.iter().map(|&k| energies[k].ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit window spans a single time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot <= 1e-20 * n || ss_res == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        beta: -slope,
        log_intercept: intercept,
        window: (xs[0], xs[xs.len() - 1]),
        r_squared,
        samples: window.len(),
        floor_reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize, t_end: f64, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect();
        let e = t.iter().map(|&x| f(x)).collect();
        (t, e)
    }

    #[test]
    fn exact_exponential() {
        let (t, e) = series(200, 20.0, |t| 3.0 * (-0.7 * t).exp());
        let fit = fit_decay(&t, &e, DEFAULT_TAIL_FRACTION).unwrap();
        assert!((fit.beta - 0.7).abs() < 1e-8);
        assert!((fit.log_intercept - 3f64.ln()).abs() < 1e-8);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!(!fit.floor_reached);
        assert!((fit.window.1 - 20.0).abs() < 1e-12);
    }

    #[test]
    fn oscillating_exponential() {
        // window of the last 60% of [0, 20] spans 12 > 5 / 0.7
        let (t, e) = series(2001, 20.0, |t| (-0.7 * t).exp() * (1.0 + 0.1 * (10.0 * t).sin()));
        let fit = fit_decay(&t, &e, DEFAULT_TAIL_FRACTION).unwrap();
        assert!(fit.window.1 - fit.window.0 >= 5.0 / 0.7);
        assert!((fit.beta - 0.7).abs() < 0.02, "beta {}", fit.beta);
    }

    #[test]
    fn constant_energy() {
        let (t, e) = series(50, 5.0, |_| 2.0);
        let fit = fit_decay(&t, &e, DEFAULT_TAIL_FRACTION).unwrap();
        assert!(fit.beta.abs() < 1e-10);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn floor_and_sample_count() {
        let (t, e) = series(100, 100.0, |t| (-t).exp());
        let fit = fit_decay(&t, &e, DEFAULT_TAIL_FRACTION).unwrap();
        assert!(fit.floor_reached);
        assert!(fit.window.1 < 28.0);
        let (t, e) = series(12, 1.0, |t| (-t).exp());
        assert!(matches!(
            fit_decay(&t, &e, 0.6),
            Err(Error::TooFewSamples { found: 8, required: 10 })
        ));
        let zeros = vec![0.0; 30];
        assert!(fit_decay(&t[..1], &zeros[..1], 0.6).is_err());
    }
}
