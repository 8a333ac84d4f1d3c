//! Segmentation accuracy: Dice, Jaccard and the mean symmetric surface
//! distance (MSSD), plus largest-object post-processing and threshold tuning.
//!
//! MSSD sums nearest-foreground distances over *all* pixels of both masks:
//!
//! ```text
//! MSSD(A, B) = (Σ_{p∈A} d(p, B) + Σ_{q∈B} d(q, A)) / (|A| + |B|)
//! ```
//!
//! Two empty masks score 0; exactly one empty mask leaves MSSD undefined.

mod components;
mod edt;
mod tune;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imgdata::Mask;

pub use components::{label_components, largest_component, ComponentLabeling, Connectivity};
pub use edt::{distance_field, DistanceField};
pub use tune::{default_grid, tune_threshold, tune_thresholds, TuneResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Dice,
    Jaccard,
    Mssd,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Dice, Metric::Jaccard, Metric::Mssd];

    /// Dice and Jaccard are maximised, MSSD minimised.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Mssd)
    }

    /// Score used for ranking; an undefined MSSD ranks as `+inf`.
    pub fn score(self, report: &MetricReport) -> f64 {
        match self {
            Metric::Dice => report.dice,
            Metric::Jaccard => report.jaccard,
            Metric::Mssd => report.mssd.unwrap_or(f64::INFINITY),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Dice => "dice",
            Metric::Jaccard => "jaccard",
            Metric::Mssd => "mssd",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dice" => Ok(Metric::Dice),
            "jaccard" => Ok(Metric::Jaccard),
            "mssd" => Ok(Metric::Mssd),
            other => Err(Error::param(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub dice: f64,
    pub jaccard: f64,
    /// `None` when exactly one of the masks is empty.
    pub mssd: Option<f64>,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "image_id,method,postproc,dice,jaccard,mssd";

    pub fn csv_row(&self, image_id: &str, method: &str, postproc: &str) -> String {
        format!(
            "{image_id},{method},{postproc},{},{},{}",
            self.dice,
            self.jaccard,
            self.mssd.unwrap_or(f64::NAN)
        )
    }
}

/// `2|A∩B| / (|A| + |B|)`; 1 when both masks are empty.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    let inter = a.intersection_count(b)?;
    let total = a.count() + b.count();
    Ok(if total == 0 {
        1.0
    } else {
        2.0 * inter as f64 / total as f64
    })
}

/// `|A∩B| / |A∪B|`; 1 when both masks are empty.
pub fn jaccard(a: &Mask, b: &Mask) -> Result<f64> {
    let inter = a.intersection_count(b)?;
    let union = a.count() + b.count() - inter;
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

pub fn mssd(a: &Mask, b: &Mask) -> Result<Option<f64>> {
    a.check_same_dims(b, "mssd")?;
    let (na, nb) = (a.count(), b.count());
    match (na, nb) {
        (0, 0) => return Ok(Some(0.0)),
        (0, _) | (_, 0) => return Ok(None),
        _ => {}
    }
    let to_b = distance_field(b)?;
    let to_a = distance_field(a)?;
    let sum_a: f64 = a.ones_iter().map(|(r, c)| to_b.distance(r, c)).sum();
    let sum_b: f64 = b.ones_iter().map(|(r, c)| to_a.distance(r, c)).sum();
    Ok(Some((sum_a + sum_b) / (na + nb) as f64))
}

/// Scores `pred` against `gt` inside `roi`, optionally keeping only the
/// largest 8-connected object of the prediction.
pub fn evaluate(pred: &Mask, gt: &Mask, roi: &Mask, keep_largest: bool) -> Result<MetricReport> {
    pred.check_same_dims(gt, "prediction vs ground truth")?;
    pred.check_same_dims(roi, "prediction vs RoI")?;
    let mut pred = pred.and(roi)?;
    let gt = gt.and(roi)?;
    if keep_largest {
        pred = largest_component(&pred, Connectivity::Eight);
    }
    Ok(MetricReport {
        dice: dice(&pred, &gt)?,
        jaccard: jaccard(&pred, &gt)?,
        mssd: mssd(&pred, &gt)?,
    })
}

/// Mean and population standard deviation of each metric.
///
/// An undefined MSSD in any row makes the MSSD summary `NaN`.
pub fn summarize(reports: &[MetricReport]) -> (MetricReport, MetricReport) {
    let column = |f: &dyn Fn(&MetricReport) -> f64| -> (f64, f64) {
        if reports.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let n = reports.len() as f64;
        let mean = reports.iter().map(f).sum::<f64>() / n;
        let var = reports.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (dm, ds) = column(&|r| r.dice);
    let (jm, js) = column(&|r| r.jaccard);
    let (mm, ms) = column(&|r| r.mssd.unwrap_or(f64::NAN));
    let opt = |v: f64| (!v.is_nan()).then_some(v);
    (
        MetricReport {
            dice: dm,
            jaccard: jm,
            mssd: opt(mm),
        },
        MetricReport {
            dice: ds,
            jaccard: js,
            mssd: opt(ms),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n²) evaluation of the MSSD sum straight from pixel lists.
    fn brute_mssd(a: &Mask, b: &Mask) -> Option<f64> {
        let pa: Vec<_> = a.ones_iter().collect();
        let pb: Vec<_> = b.ones_iter().collect();
        if pa.is_empty() && pb.is_empty() {
            return Some(0.0);
        }
        if pa.is_empty() || pb.is_empty() {
            return None;
        }
        let nearest = |p: (usize, usize), set: &[(usize, usize)]| {
            let sq = set
                .iter()
                .map(|q| {
                    let (dr, dc) = (p.0.abs_diff(q.0) as u64, p.1.abs_diff(q.1) as u64);
                    dr * dr + dc * dc
                })
                .min()
                .unwrap();
            (sq as f64).sqrt()
        };
        let total: f64 = pa.iter().map(|&p| nearest(p, &pb)).sum::<f64>()
            + pb.iter().map(|&p| nearest(p, &pa)).sum::<f64>();
        Some(total / (pa.len() + pb.len()) as f64)
    }

    fn random_mask(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Mask {
        let p = rng.random_range(0.0..0.6);
        Mask::from_fn(h, w, |_, _| rng.random_bool(p))
    }

    #[test]
    fn dice_examples() {
        let a = Mask::from_pixels(3, 3, &[(0, 0), (0, 1), (0, 2)]).unwrap();
        let b = Mask::from_pixels(3, 3, &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)]).unwrap();
        assert_eq!(dice(&a, &b).unwrap(), 0.5);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        let c = Mask::from_pixels(3, 3, &[(2, 0)]).unwrap();
        assert_eq!(dice(&a, &c).unwrap(), 0.0);
        assert_eq!(dice(&Mask::zeros(2, 2), &Mask::zeros(2, 2)).unwrap(), 1.0);
        assert!(matches!(dice(&a, &Mask::zeros(2, 2)), Err(Error::Shape(_))));
    }

    #[test]
    fn jaccard_examples() {
        let a = Mask::from_pixels(2, 3, &[(0, 0), (0, 1), (0, 2), (1, 0)]).unwrap();
        let b = Mask::from_pixels(2, 3, &[(0, 0), (0, 1), (1, 1), (1, 2)]).unwrap();
        // |A∩B| = 2, |A∪B| = 6.
        assert_eq!(jaccard(&a, &b).unwrap(), 1.0 / 3.0);
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        assert_eq!(jaccard(&Mask::zeros(2, 2), &Mask::zeros(2, 2)).unwrap(), 1.0);
    }

    #[test]
    fn mssd_hand_case() {
        let a = Mask::from_pixels(2, 2, &[(0, 0)]).unwrap();
        let b = Mask::from_pixels(2, 2, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(mssd(&a, &b).unwrap(), Some(1.0 / 3.0));
        assert_eq!(mssd(&b, &b).unwrap(), Some(0.0));
    }

    #[test]
    fn mssd_degenerate_cases() {
        let empty = Mask::zeros(3, 3);
        let one = Mask::from_pixels(3, 3, &[(1, 1)]).unwrap();
        assert_eq!(mssd(&empty, &empty).unwrap(), Some(0.0));
        assert_eq!(mssd(&empty, &one).unwrap(), None);
        assert_eq!(mssd(&one, &empty).unwrap(), None);
        assert!(mssd(&one, &Mask::zeros(2, 3)).is_err());
    }

    #[test]
    fn evaluate_identity_and_artifact() {
        let gt = Mask::from_fn(20, 20, |r, c| r == 5 && (2..15).contains(&c));
        let roi = Mask::ones(20, 20);
        for keep in [false, true] {
            let rep = evaluate(&gt, &gt, &roi, keep).unwrap();
            assert_eq!(rep, MetricReport { dice: 1.0, jaccard: 1.0, mssd: Some(0.0) });
        }
        let mut pred = gt.clone();
        pred.set(18, 18, true);
        let cleaned = evaluate(&pred, &gt, &roi, true).unwrap();
        assert_eq!(cleaned, evaluate(&gt, &gt, &roi, true).unwrap());
        let raw = evaluate(&pred, &gt, &roi, false).unwrap();
        assert!(raw.mssd.unwrap() > 0.0);
    }

    #[test]
    fn evaluate_restricts_to_roi() {
        let gt = Mask::from_pixels(4, 4, &[(0, 0), (3, 3)]).unwrap();
        let pred = Mask::from_pixels(4, 4, &[(0, 0)]).unwrap();
        let roi = Mask::from_fn(4, 4, |r, _| r < 2);
        let rep = evaluate(&pred, &gt, &roi, false).unwrap();
        assert_eq!(rep.dice, 1.0);
    }

    #[test]
    fn summary_mean_and_population_std() {
        let reports = [
            MetricReport { dice: 0.5, jaccard: 0.25, mssd: Some(1.0) },
            MetricReport { dice: 1.0, jaccard: 0.75, mssd: Some(3.0) },
        ];
        let (mean, std) = summarize(&reports);
        assert_eq!(mean.dice, 0.75);
        assert_eq!(std.dice, 0.25);
        assert_eq!(mean.mssd, Some(2.0));
        assert_eq!(std.mssd, Some(1.0));
        let (mean, _) = summarize(&[reports[0], MetricReport { mssd: None, ..reports[1] }]);
        assert_eq!(mean.mssd, None);
    }

    #[test]
    fn csv_row_shape() {
        let rep = MetricReport { dice: 0.5, jaccard: 1.0 / 3.0, mssd: None };
        assert_eq!(rep.csv_row("07", "grow", "all"), format!("07,grow,all,0.5,{},NaN", 1.0 / 3.0));
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("Dice".parse::<Metric>().unwrap(), Metric::Dice);
        assert_eq!("mssd".parse::<Metric>().unwrap(), Metric::Mssd);
        assert!("auc".parse::<Metric>().is_err());
    }

    proptest! {
        #[test]
        fn identities_and_symmetry(seed in any::<u64>(), h in 1usize..24, w in 1usize..24) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_mask(&mut rng, h, w);
            let b = random_mask(&mut rng, h, w);
            let (d, j) = (dice(&a, &b).unwrap(), jaccard(&a, &b).unwrap());
            prop_assert!((d - 2.0 * j / (1.0 + j)).abs() < 1e-12);
            prop_assert!(0.0 <= j && j <= d && d <= 1.0);
            prop_assert_eq!(d, dice(&b, &a).unwrap());
            prop_assert_eq!(j, jaccard(&b, &a).unwrap());
            let m = mssd(&a, &b).unwrap();
            let brute = brute_mssd(&a, &b);
            prop_assert_eq!(m.is_some(), brute.is_some());
            if let (Some(m), Some(bf)) = (m, brute) {
                prop_assert!((m - bf).abs() < 1e-9);
                prop_assert!((m - mssd(&b, &a).unwrap().unwrap()).abs() < 1e-12);
            }
        }

        #[test]
        fn mssd_translation_invariant(seed in any::<u64>(), dr in 0usize..4, dc in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (h, w) = (12, 12);
            let a = random_mask(&mut rng, h, w);
            let b = random_mask(&mut rng, h, w);
            let shift = |m: &Mask| {
                let pixels: Vec<_> = m.ones_iter().map(|(r, c)| (r + dr, c + dc)).collect();
                Mask::from_pixels(h + 4, w + 4, &pixels).unwrap()
            };
            let pad = |m: &Mask| Mask::from_pixels(h + 4, w + 4, &m.ones_iter().collect::<Vec<_>>()).unwrap();
            let base = mssd(&pad(&a), &pad(&b)).unwrap();
            let moved = mssd(&shift(&a), &shift(&b)).unwrap();
            match (base, moved) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                (x, y) => prop_assert_eq!(x, y),
            }
        }
    }
}
