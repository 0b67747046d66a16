use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{AnalysisError, CountTable, MIN_RESAMPLES};

/// Resamples every cell count `N` as a Poisson(`N`) draw and returns the
/// sample mean and standard deviation of `statistic` over the resamples.
pub fn poisson_bootstrap<F, R>(
    table: &CountTable,
    statistic: F,
    resamples: usize,
    rng: &mut R,
) -> Result<(f64, f64), AnalysisError>
where
    F: Fn(&CountTable) -> Result<f64, AnalysisError>,
    R: Rng + ?Sized,
{
    if resamples < MIN_RESAMPLES {
        return Err(AnalysisError::TooFewResamples(resamples));
    }
    let mut values = Vec::with_capacity(resamples);
    let mut work = table.clone();
    for _ in 0..resamples {
        for ((a, b), cell) in work.iter_mut() {
            let orig = table.get(*a, *b).expect("same keys");
            for (i, row) in cell.n.iter_mut().enumerate() {
                for (j, n) in row.iter_mut().enumerate() {
                    *n = poisson(orig.n[i][j], rng);
                }
            }
        }
        values.push(statistic(&work)?);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

fn poisson<R: Rng + ?Sized>(mean: u64, rng: &mut R) -> u64 {
    if mean == 0 {
        return 0;
    }
    let d = Poisson::new(mean as f64).expect("positive finite mean");
    d.sample(rng) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::CountMatrix;
    use crate::angle::Angle;
    use crate::rng::stream;

    fn single(n: u64) -> CountTable {
        let mut t = CountTable::new();
        t.insert(Angle::ZERO, Angle::ZERO, CountMatrix::new(n, 0, 0, 0));
        t
    }

    #[test]
    fn constant_statistic_has_no_spread() {
        let mut rng = stream(1, "test", 0);
        let (mean, std) = poisson_bootstrap(&single(500), |_| Ok(3.5), 200, &mut rng).unwrap();
        assert_eq!(mean, 3.5);
        assert_eq!(std, 0.0);
    }

    #[test]
    fn single_cell_spread_is_poissonian() {
        let mut rng = stream(2, "test", 0);
        let stat = |t: &CountTable| Ok(t.get(Angle::ZERO, Angle::ZERO).unwrap().n[0][0] as f64);
        let (mean, std) = poisson_bootstrap(&single(10_000), stat, 2000, &mut rng).unwrap();
        assert!((std - 100.0).abs() < 10.0, "std {std}");
        assert!((mean - 10_000.0).abs() < 10.0, "mean {mean}");
    }

    #[test]
    fn empty_cells_stay_empty() {
        let mut rng = stream(3, "test", 0);
        let stat = |t: &CountTable| Ok(t.get(Angle::ZERO, Angle::ZERO).unwrap().n[1][1] as f64);
        let (mean, std) = poisson_bootstrap(&single(10), stat, 100, &mut rng).unwrap();
        assert_eq!((mean, std), (0.0, 0.0));
        assert!(poisson_bootstrap(&single(10), stat, 99, &mut rng).is_err());
    }
}
