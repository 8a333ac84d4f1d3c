use rayon::prelude::*;

use super::{evaluate, Metric, MetricReport};
use crate::error::{Error, Result};
use crate::imgdata::{Mask, Sample};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuneResult {
    pub metric: Metric,
    pub threshold: f64,
    /// Mean metric over the validation images at `threshold`.
    pub score: f64,
}

/// 0.05, 0.10, ..., 0.95.
pub fn default_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 * 0.05).collect()
}

/// Picks the grid threshold with the best mean `metric` over `validation`.
pub fn tune_threshold<F>(
    segment_fn: F,
    validation: &[Sample],
    metric: Metric,
    grid: &[f64],
    keep_largest: bool,
) -> Result<TuneResult>
where
    F: Fn(&Sample, f64) -> Result<Mask> + Sync,
{
    let mut out = tune_thresholds(segment_fn, validation, &[metric], grid, keep_largest)?;
    Ok(out.remove(0))
}

/// Tunes several metrics at once; each grid point is segmented only once.
///
/// Dice and Jaccard are maximised, MSSD minimised with an undefined value
/// counting as `+inf`. Ties go to the smallest threshold.
pub fn tune_thresholds<F>(
    segment_fn: F,
    validation: &[Sample],
    metrics: &[Metric],
    grid: &[f64],
    keep_largest: bool,
) -> Result<Vec<TuneResult>>
where
    F: Fn(&Sample, f64) -> Result<Mask> + Sync,
{
    if grid.is_empty() {
        return Err(Error::param("threshold grid is empty"));
    }
    if validation.is_empty() {
        return Err(Error::param("validation set is empty"));
    }
    if let Some(t) = grid.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::param(format!("grid threshold {t} is outside (0, 1)")));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let reports: Vec<Vec<MetricReport>> = grid
        .par_iter()
        .map(|&t| {
            validation
                .iter()
                .map(|s| evaluate(&segment_fn(s, t)?, &s.gt, &s.roi, keep_largest))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    metrics
        .iter()
        .map(|&metric| {
            let mut best: Option<(f64, f64)> = None;
            for (&t, rows) in grid.iter().zip(&reports) {
                let score = rows.iter().map(|r| metric.score(r)).sum::<f64>() / rows.len() as f64;
                if !score.is_finite() {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((_, b)) if metric.higher_is_better() => score > b,
                    Some((_, b)) => score < b,
                };
                if better {
                    best = Some((t, score));
                }
            }
            let (threshold, score) = best.ok_or_else(|| {
                Error::Tuning(format!("{metric} is undefined at every grid threshold"))
            })?;
            Ok(TuneResult {
                metric,
                threshold,
                score,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grow::dense_threshold_segment;
    use crate::imgdata::{Image, ProbMap};

    fn sample(gt: Mask) -> Sample {
        let (h, w) = gt.dims();
        Sample::new("s", Image::zeros(h, w, 3), gt, Mask::ones(h, w)).unwrap()
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 19);
        assert!((g[0] - 0.05).abs() < 1e-12 && (g[18] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn singleton_grid() {
        let s = sample(Mask::from_pixels(4, 4, &[(1, 1)]).unwrap());
        let r = tune_threshold(|s, _| Ok(s.gt.clone()), &[s], Metric::Dice, &[0.42], false).unwrap();
        assert_eq!(r.threshold, 0.42);
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn threshold_independent_segmenter_picks_smallest() {
        let s = sample(Mask::from_pixels(4, 4, &[(1, 1), (1, 2)]).unwrap());
        let out = tune_thresholds(|s, _| Ok(s.gt.clone()), &[s], &Metric::ALL, &default_grid(), false)
            .unwrap();
        for r in out {
            assert!((r.threshold - 0.05).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn constructed_optimum() {
        // Truth is the left half; the map is 0.5 there, 0.4 on the right.
        let gt = Mask::from_fn(6, 6, |_, c| c < 3);
        let map = ProbMap::new(6, 6, (0..36).map(|i| if i % 6 < 3 { 0.5 } else { 0.4 }).collect()).unwrap();
        let s = sample(gt);
        let seg = |s: &Sample, t: f64| dense_threshold_segment(&map, &s.roi, t);
        let r = tune_threshold(seg, std::slice::from_ref(&s), Metric::Dice, &[0.3, 0.45, 0.7], false).unwrap();
        assert_eq!(r.threshold, 0.45);
        // Score equals a direct re-evaluation.
        let direct = evaluate(&seg(&s, r.threshold).unwrap(), &s.gt, &s.roi, false).unwrap();
        assert_eq!(r.score, direct.dice);
        let d03 = evaluate(&seg(&s, 0.3).unwrap(), &s.gt, &s.roi, false).unwrap().dice;
        let d07 = evaluate(&seg(&s, 0.7).unwrap(), &s.gt, &s.roi, false).unwrap().dice;
        assert!(d03 > d07);
        let r = tune_threshold(seg, &[s], Metric::Dice, &[0.3, 0.7], false).unwrap();
        assert_eq!(r.threshold, 0.3);
    }

    #[test]
    fn undefined_everywhere_is_an_error() {
        let s = sample(Mask::from_pixels(4, 4, &[(1, 1)]).unwrap());
        let empty = |_: &Sample, _| Ok(Mask::zeros(4, 4));
        let err = tune_threshold(empty, std::slice::from_ref(&s), Metric::Mssd, &[0.5], false);
        assert!(matches!(err, Err(Error::Tuning(_))));
        // Dice is still defined for the same segmenter.
        assert_eq!(tune_threshold(empty, &[s], Metric::Dice, &[0.5], false).unwrap().score, 0.0);
    }

    #[test]
    fn mssd_skips_undefined_thresholds() {
        let s = sample(Mask::from_pixels(4, 4, &[(1, 1)]).unwrap());
        let seg = |s: &Sample, t: f64| Ok(if t < 0.5 { Mask::zeros(4, 4) } else { s.gt.clone() });
        let r = tune_threshold(seg, &[s], Metric::Mssd, &[0.2, 0.8], false).unwrap();
        assert_eq!((r.threshold, r.score), (0.8, 0.0));
    }

    #[test]
    fn bad_grids() {
        let s = sample(Mask::zeros(2, 2));
        let seg = |s: &Sample, _| Ok(s.gt.clone());
        assert!(tune_threshold(seg, std::slice::from_ref(&s), Metric::Dice, &[], false).is_err());
        assert!(tune_threshold(seg, std::slice::from_ref(&s), Metric::Dice, &[1.0], false).is_err());
        assert!(tune_threshold(seg, &[], Metric::Dice, &[0.5], false).is_err());
    }
}
