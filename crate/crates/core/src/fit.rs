//! Least-squares fits in log space: geometric decay of iteration errors and
//! power laws `e ≈ C h^p` for discretization errors.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Ordinary least-squares line `y ≈ intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; `1` for a perfect or constant fit.
    pub r_squared: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Domain("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    // relative cutoff: a flat sequence in log space has no variance to explain
    let r_squared = if syy <= 1e-24 * (1.0 + my * my) * nf {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Per-iteration contraction ratio fitted to an error sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricRate {
    /// `exp(slope)` of `ln e_n` against `n`.
    pub rho: f64,
    pub r_squared: f64,
    /// Number of entries the fit used.
    pub used: usize,
    /// Set when the sequence reached the numerical floor and was truncated.
    pub hit_floor: bool,
}

/// Minimum number of post-burn-in entries a geometric fit needs.
pub const MIN_GEOMETRIC_POINTS: usize = 4;

/// Fits `e_n ≈ C ρ^n` for `n ≥ burn_in`.
///
/// Entries at or below `100 ε · max e` mark the numerical floor; the fit
/// then uses only the prefix above it and sets `hit_floor`.
pub fn fit_geometric_rate(errors: &[f64], burn_in: usize) -> Result<GeometricRate> {
    let scale = errors.iter().copied().fold(0.0, f64::max);
    let floor = 1e2 * f64::EPSILON * scale;
    let tail = errors.get(burn_in..).unwrap_or(&[]);
    let usable = tail
        .iter()
        .position(|&e| !(e > floor) || !e.is_finite())
        .unwrap_or(tail.len());
    let hit_floor = usable < tail.len();
    if usable < MIN_GEOMETRIC_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_GEOMETRIC_POINTS,
            got: usable,
        });
    }
    let xs: Vec<f64> = (0..usable).map(|n| (burn_in + n) as f64).collect();
    let ys: Vec<f64> = tail[..usable].iter().map(|e| libm::log(*e)).collect();
    let line = least_squares(&xs, &ys)?;
    Ok(GeometricRate {
        rho: libm::exp(line.slope),
        r_squared: line.r_squared,
        used: usable,
        hit_floor,
    })
}

/// Largest one-step ratio `e_{n+1} / e_n` for `n ≥ burn_in`, over steps
/// that start above the floor of [`fit_geometric_rate`]. `None` when no such
/// step exists.
pub fn max_step_ratio(errors: &[f64], burn_in: usize) -> Option<f64> {
    let scale = errors.iter().copied().fold(0.0, f64::max);
    let floor = 1e2 * f64::EPSILON * scale;
    errors
        .get(burn_in..)?
        .windows(2)
        .filter(|w| w[0] > floor && w[0].is_finite())
        .map(|w| w[1] / w[0])
        .reduce(f64::max)
}

/// Power law `e ≈ C h^order`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub order: f64,
    pub constant: f64,
    pub r_squared: f64,
}

pub fn fit_power_law(hs: &[f64], errors: &[f64]) -> Result<PowerLaw> {
    if hs.len() != errors.len() {
        return Err(Error::Domain("mismatched h and error lists".into()));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::Domain(alloc::format!(
            "power-law fit needs positive errors, got {e}"
        )));
    }
    let xs: Vec<f64> = hs.iter().map(|h| libm::log(*h)).collect();
    let ys: Vec<f64> = errors.iter().map(|e| libm::log(*e)).collect();
    let line = least_squares(&xs, &ys)?;
    Ok(PowerLaw {
        order: line.slope,
        constant: libm::exp(line.intercept),
        r_squared: line.r_squared,
    })
}
