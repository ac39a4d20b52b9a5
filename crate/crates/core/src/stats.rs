//! Pearson correlation and ordinary least squares.

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("{0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("non-finite value in input")]
    NonFinite,
}

struct Moments {
    sxx: f64,
    syy: f64,
    sxy: f64,
    mean_x: f64,
    mean_y: f64,
}

fn moments(xs: &[f64], ys: &[f64]) -> Result<Moments, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::TooFewPoints(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Ok(Moments {
        sxx,
        syy,
        sxy,
        mean_x,
        mean_y,
    })
}

/// Product-moment correlation coefficient of paired samples.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    let m = moments(xs, ys)?;
    if m.sxx == 0.0 {
        return Err(StatsError::ZeroVariance("xs"));
    }
    if m.syy == 0.0 {
        return Err(StatsError::ZeroVariance("ys"));
    }
    Ok(m.sxy / (libm::sqrt(m.sxx) * libm::sqrt(m.syy)))
}

/// Least-squares line `y = slope·x + intercept`; returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), StatsError> {
    let m = moments(xs, ys)?;
    if m.sxx == 0.0 {
        return Err(StatsError::ZeroVariance("xs"));
    }
    let slope = m.sxy / m.sxx;
    Ok((slope, m.mean_y - slope * m.mean_x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn perfect_linear_relations() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        let (slope, intercept) = linear_fit(&xs, &ys).unwrap();
        assert!((slope - 2.0).abs() < 1e-12 && (intercept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_point_eight() {
        // Σdx·dy = 4, Σdx² = Σdy² = 5
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12, "{r}");
    }

    #[test]
    fn errors() {
        assert_eq!(pearson(&[1.0], &[1.0]), Err(StatsError::TooFewPoints(1)));
        assert_eq!(pearson(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch(2, 1)));
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(StatsError::ZeroVariance("xs")));
        assert_eq!(pearson(&[1.0, 2.0], &[3.0, 3.0]), Err(StatsError::ZeroVariance("ys")));
        assert_eq!(pearson(&[1.0, f64::NAN], &[3.0, 3.0]), Err(StatsError::NonFinite));
        assert!(linear_fit(&[2.0, 2.0], &[1.0, 5.0]).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_symmetric(pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..40)) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(r) = pearson(&xs, &ys) {
                prop_assert!(r.abs() <= 1.0 + 1e-12);
                let r2 = pearson(&ys, &xs).unwrap();
                prop_assert!((r - r2).abs() < 1e-12);
            }
        }
    }
}
