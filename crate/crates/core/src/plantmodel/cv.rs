use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;

use super::ensemble::ensemble_train_xy;
use super::mlp::MlpConfig;
use super::ModelError;

/// `1 − SS_res/SS_tot` pooled over every lead of every sample.
pub fn r2_score(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64, ModelError> {
    if pred.len() != truth.len() {
        return Err(ModelError::Shape {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.len() < 2 {
        return Err(ModelError::TooFewSamples {
            needed: 2,
            got: truth.len(),
        });
    }
    pooled_r2(pred, truth)
}

fn pooled_r2(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64, ModelError> {
    let mut count = 0usize;
    let mut sum = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        if p.len() != t.len() {
            return Err(ModelError::Shape {
                expected: t.len(),
                got: p.len(),
            });
        }
        count += t.len();
        sum += t.iter().sum::<f64>();
    }
    let mean = sum / count as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        for (a, b) in p.iter().zip(t) {
            ss_res += (b - a).powi(2);
            ss_tot += (b - mean).powi(2);
        }
    }
    if ss_tot == 0.0 {
        return Err(ModelError::UndefinedScore);
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Contiguous blocks covering `0..n`; sizes differ by at most one and the
/// larger blocks come first.
pub fn fold_ranges(n: usize, k: usize) -> Vec<Range<usize>> {
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    (0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub mean_r2: f64,
    pub fold_r2: Vec<f64>,
}

/// K-fold cross-validation over time-ordered blocks. Each fold fits its own
/// scaler and a single network on the remaining blocks.
pub fn cross_validate(
    config: &MlpConfig,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    k: usize,
) -> Result<CvResult, ModelError> {
    if k < 2 {
        return Err(ModelError::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if inputs.len() < k {
        return Err(ModelError::TooFewSamples {
            needed: k,
            got: inputs.len(),
        });
    }
    let mut fold_r2 = Vec::with_capacity(k);
    for held in fold_ranges(inputs.len(), k) {
        let keep = |v: &[Vec<f64>]| -> Vec<Vec<f64>> {
            v[..held.start].iter().chain(&v[held.end..]).cloned().collect()
        };
        let (ens, _) = ensemble_train_xy(config, 1, &keep(inputs), &keep(targets))?;
        let pred = inputs[held.clone()]
            .iter()
            .map(|x| ens.predict(x))
            .collect::<Result<Vec<_>, _>>()?;
        // A lone held-out window still pools its f leads.
        fold_r2.push(pooled_r2(&pred, &targets[held])?);
    }
    let mean_r2 = fold_r2.iter().sum::<f64>() / k as f64;
    Ok(CvResult { mean_r2, fold_r2 })
}

/// One grid-search row. `result` holds the error message of a failed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub config: MlpConfig,
    pub result: Result<CvResult, String>,
}

impl GridCell {
    pub fn mean_r2(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.mean_r2)
    }
}

/// Cross-validates every config and ranks by mean R², best first. Ties keep
/// input order; failed cells are kept and sorted last.
pub fn grid_search(space: &[MlpConfig], inputs: &[Vec<f64>], targets: &[Vec<f64>], k: usize) -> Vec<GridCell> {
    let mut cells: Vec<GridCell> = space
        .par_iter()
        .map(|c| GridCell {
            config: c.clone(),
            result: cross_validate(c, inputs, targets, k).map_err(|e| e.to_string()),
        })
        .collect();
    cells.sort_by(|a, b| match (a.mean_r2(), b.mean_r2()) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    cells
}

pub fn write_grid_csv<W: Write>(cells: &[GridCell], mut out: W) -> std::io::Result<()> {
    writeln!(out, "hidden,learning_rate,batch_size,epochs,mean_r2,fold_r2s,error")?;
    for c in cells {
        let t = &c.config.train;
        let (mean, folds, err) = match &c.result {
            Ok(r) => (
                r.mean_r2.to_string(),
                r.fold_r2.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                String::new(),
            ),
            Err(e) => (String::new(), String::new(), e.replace([',', '\n'], " ")),
        };
        writeln!(
            out,
            "{},{},{},{},{mean},{folds},{err}",
            c.config.hidden_label(),
            t.learning_rate,
            t.batch_size,
            t.epochs
        )?;
    }
    Ok(())
}

/// Widths 24 to 192 in steps of 24 plus 88, as one layer or two equal layers.
pub fn default_search_space(base: &MlpConfig) -> Vec<MlpConfig> {
    let mut widths: Vec<usize> = (1..=8).map(|i| 24 * i).collect();
    widths.push(88);
    widths.sort_unstable();
    let mut space = Vec::new();
    for depth in 1..=2 {
        for &w in &widths {
            space.push(MlpConfig {
                hidden: vec![w; depth],
                ..base.clone()
            });
        }
    }
    space
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plantmodel::TrainParams;
    use approx::assert_relative_eq;

    #[test]
    fn r2_definitions() {
        let t = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        assert_eq!(r2_score(&t, &t).unwrap(), 1.0);
        let m = vec![vec![2.5, 2.5], vec![2.5, 2.5]];
        assert_eq!(r2_score(&m, &t).unwrap(), 0.0);
        // truth (1,2,3), pred (1,2,4): SS_res 1, SS_tot 2.
        let t3 = vec![vec![1.0], vec![2.0], vec![3.0]];
        let p3 = vec![vec![1.0], vec![2.0], vec![4.0]];
        assert_relative_eq!(r2_score(&p3, &t3).unwrap(), 0.5);
        let c = vec![vec![1.0], vec![1.0]];
        assert_eq!(r2_score(&c, &c), Err(ModelError::UndefinedScore));
    }

    #[test]
    fn folds_partition() {
        for n in 1..40 {
            for k in 1..=n {
                let f = fold_ranges(n, k);
                assert_eq!(f.len(), k);
                assert_eq!(f[0].start, 0);
                assert_eq!(f.last().unwrap().end, n);
                assert!(f.windows(2).all(|w| w[0].end == w[1].start));
                let sizes: Vec<usize> = f.iter().map(|r| r.len()).collect();
                assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
        }
    }

    fn linear_data(n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let y = x.iter().map(|r| vec![0.5 * r[0] + 0.2 * r[1]]).collect();
        (x, y)
    }

    fn config(hidden: Vec<usize>) -> MlpConfig {
        MlpConfig {
            input_dim: 2,
            hidden,
            output_dim: 1,
            seed: 3,
            train: TrainParams {
                epochs: 150,
                batch_size: 16,
                learning_rate: 1e-2,
                ..TrainParams::default()
            },
            night_filter: false,
        }
    }

    #[test]
    fn learnable_task_scores_high() {
        let (x, y) = linear_data(200);
        let r = cross_validate(&config(vec![16]), &x, &y, 5).unwrap();
        assert_eq!(r.fold_r2.len(), 5);
        assert!(r.mean_r2 > 0.99, "{r:?}");
    }

    #[test]
    fn too_few_samples() {
        let (x, y) = linear_data(3);
        assert!(matches!(
            cross_validate(&config(vec![4]), &x, &y, 5),
            Err(ModelError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn leave_one_out_runs() {
        let (x, _) = linear_data(6);
        let y: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0], r[1]]).collect();
        let mut c = config(vec![4]);
        c.output_dim = 2;
        c.train.epochs = 5;
        let r = cross_validate(&c, &x, &y, 6).unwrap();
        assert_eq!(r.fold_r2.len(), 6);
    }

    #[test]
    fn grid_ranks_and_keeps_failures() {
        let (x, y) = linear_data(120);
        let mut bad = config(vec![4]);
        bad.input_dim = 7;
        let space = vec![config(vec![1]), bad, config(vec![32])];
        let cells = grid_search(&space, &x, &y, 3);
        assert_eq!(cells.len(), 3);
        assert!(cells[2].result.is_err());
        assert!(cells[0].mean_r2().unwrap() >= cells[1].mean_r2().unwrap());
        let mut buf = Vec::new();
        write_grid_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(3).unwrap().starts_with("4,"));
    }

    #[test]
    fn single_config_ranked_first() {
        let (x, y) = linear_data(40);
        let mut c = config(vec![4]);
        c.train.epochs = 3;
        let cells = grid_search(std::slice::from_ref(&c), &x, &y, 2);
        assert_eq!(cells[0].config, c);
    }

    #[test]
    fn search_space_bounds() {
        let s = default_search_space(&MlpConfig::for_windows(24, 1, 24));
        assert_eq!(s.len(), 18);
        assert!(s.iter().any(|c| c.hidden == vec![88]));
        assert!(s.iter().all(|c| c.hidden.iter().all(|w| (24..=192).contains(w))));
    }
}
