use super::{AnalysisError, FringeCurve};

/// Parameters of `N(θ) = offset·(1 + visibility·cos(2θ − phase))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub offset: f64,
    pub visibility: f64,
    pub phase_rad: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 200;

/// Fitted fringe visibility, clamped to [0, 1].
pub fn visibility(curve: &FringeCurve) -> Result<f64, AnalysisError> {
    Ok(fit_fringe(curve)?.visibility.clamp(0.0, 1.0))
}

/// Gauss-Newton least squares, started from the discrete extremes.
pub fn fit_fringe(curve: &FringeCurve) -> Result<FringeFit, AnalysisError> {
    curve.check()?;
    let xs: Vec<f64> = curve.points.iter().map(|p| 2.0 * p.0.radians()).collect();
    let ys: Vec<f64> = curve.points.iter().map(|p| p.1 as f64).collect();

    let (mut i_max, mut i_min) = (0, 0);
    for (i, &y) in ys.iter().enumerate() {
        if y > ys[i_max] {
            i_max = i;
        }
        if y < ys[i_min] {
            i_min = i;
        }
    }
    let (hi, lo) = (ys[i_max], ys[i_min]);
    if hi <= 0.0 {
        return Err(AnalysisError::FitFailure("all counts are zero".into()));
    }
    if hi == lo {
        return Ok(FringeFit {
            offset: hi,
            visibility: 0.0,
            phase_rad: 0.0,
            iterations: 0,
        });
    }

    let mut p = [(hi + lo) / 2.0, (hi - lo) / (hi + lo), xs[i_max]];
    let sse = |p: &[f64; 3]| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - p[0] * (1.0 + p[1] * (x - p[2]).cos());
                r * r
            })
            .sum()
    };
    let mut cost = sse(&p);
    let mut iterations = 0;
    for _ in 0..MAX_ITER {
        iterations += 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (x, y) in xs.iter().zip(&ys) {
            let c = (x - p[2]).cos();
            let s = (x - p[2]).sin();
            let r = y - p[0] * (1.0 + p[1] * c);
            let j = [1.0 + p[1] * c, p[0] * c, p[0] * p[1] * s];
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        // A small ridge keeps the phase direction solvable when V → 0.
        for (a, row) in jtj.iter_mut().enumerate() {
            row[a] += 1e-12 * (1.0 + row[a]);
        }
        let Some(step) = solve3(jtj, jtr) else {
            break;
        };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = [p[0] + scale * step[0], p[1] + scale * step[1], p[2] + scale * step[2]];
            let c = sse(&trial);
            if c <= cost {
                let improvement = cost - c;
                p = trial;
                accepted = true;
                let done = improvement <= 1e-14 * cost.max(1e-300);
                cost = c;
                if done {
                    return finish(p, iterations);
                }
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    finish(p, iterations)
}

fn finish(mut p: [f64; 3], iterations: usize) -> Result<FringeFit, AnalysisError> {
    if !(p[0] > 0.0) || !p.iter().all(|v| v.is_finite()) {
        return Err(AnalysisError::FitFailure(format!("offset {} not positive", p[0])));
    }
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] += std::f64::consts::PI;
    }
    Ok(FringeFit {
        offset: p[0],
        visibility: p[1],
        phase_rad: p[2].rem_euclid(std::f64::consts::TAU),
        iterations,
    })
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - tail) / m[row][row];
    }
    Some(x)
}

/// `(max − min)/(max + min)` over the sampled points.
pub fn raw_visibility(curve: &FringeCurve) -> Result<f64, AnalysisError> {
    let hi = curve.points.iter().map(|p| p.1).max().ok_or(AnalysisError::Empty)?;
    let lo = curve.points.iter().map(|p| p.1).min().ok_or(AnalysisError::Empty)?;
    if hi == 0 {
        return Err(AnalysisError::Empty);
    }
    Ok((hi - lo) as f64 / (hi + lo) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::Angle;
    use crate::network::Basis;

    fn curve(f: impl Fn(f64) -> f64) -> FringeCurve {
        let points = (0..19)
            .map(|i| {
                let a = Angle::from_degrees(10.0 * i as f64);
                (a, f(a.radians()).round() as u64)
            })
            .collect();
        FringeCurve { basis: Basis::Z, points }
    }

    #[test]
    fn exact_fringe_has_unit_visibility() {
        let c = curve(|t| 100.0 * (1.0 + (2.0 * t).cos()));
        assert!((visibility(&c).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(raw_visibility(&c).unwrap(), 1.0);
    }

    #[test]
    fn flat_curve_has_zero_visibility() {
        let c = curve(|_| 250.0);
        assert_eq!(visibility(&c).unwrap(), 0.0);
        assert!(matches!(fit_fringe(&curve(|_| 0.0)), Err(AnalysisError::FitFailure(_))));
    }

    #[test]
    fn recovers_phase_and_partial_visibility() {
        let c = curve(|t| 1000.0 * (1.0 + 0.6 * (2.0 * t - 1.0).cos()));
        let f = fit_fringe(&c).unwrap();
        assert!((f.visibility - 0.6).abs() < 2e-3, "{f:?}");
        assert!((f.phase_rad - 1.0).abs() < 1e-2, "{f:?}");
        assert!((f.offset - 1000.0).abs() < 1.0);
    }

    #[test]
    fn short_curves_are_rejected() {
        let mut c = curve(|t| 100.0 * (1.0 + (2.0 * t).cos()));
        c.points.truncate(4);
        assert!(matches!(visibility(&c), Err(AnalysisError::ShortCurve { .. })));
        let narrow = FringeCurve {
            basis: Basis::X,
            points: (0..10).map(|i| (Angle::from_degrees(i as f64 * 5.0), 10)).collect(),
        };
        assert!(narrow.check().is_err());
    }
}
