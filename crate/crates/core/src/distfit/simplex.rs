//! Nelder–Mead simplex minimization.

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    /// Initial step along each coordinate.
    pub step: Vec<f64>,
    /// Relative spread of function values at which the simplex has converged.
    pub ftol: f64,
    pub max_evals: usize,
    /// Rebuild the simplex around the optimum this many times after convergence.
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn converged(fs: &[f64], ftol: f64) -> bool {
    let (lo, hi) = (fs[0], fs[fs.len() - 1]);
    lo.is_finite() && hi.is_finite() && 2.0 * (hi - lo).abs() <= ftol * (hi.abs() + lo.abs()) + 1e-300
}

fn run<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], step: &[f64], ftol: f64, budget: usize) -> SimplexResult {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut fs: Vec<f64> = pts.iter().map(|p| eval(p, &mut evals)).collect();

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        fs = order.iter().map(|&i| fs[i]).collect();
        if converged(&fs, ftol) || evals >= budget {
            return SimplexResult {
                x: pts[0].clone(),
                f: fs[0],
                evals,
                converged: converged(&fs, ftol),
            };
        }
        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            centroid.iter_mut().zip(p).for_each(|(c, v)| *c += v / n as f64);
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < fs[0] {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                pts[n] = xe;
                fs[n] = fe;
            } else {
                pts[n] = xr;
                fs[n] = fr;
            }
            continue;
        }
        if fr < fs[n - 1] {
            pts[n] = xr;
            fs[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fs[n] {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fs[n].min(fr) {
            pts[n] = xc;
            fs[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, p)| b + 0.5 * (p - b)).collect();
            fs[i] = eval(&shrunk, &mut evals);
            pts[i] = shrunk;
        }
    }
}

/// Minimizes `f` from `x0`. NaN values count as `+∞`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult {
    assert_eq!(x0.len(), opts.step.len(), "step length must match dimension");
    let mut best = run(&mut f, x0, &opts.step, opts.ftol, opts.max_evals);
    for _ in 0..opts.restarts {
        if best.evals >= opts.max_evals {
            break;
        }
        let again = run(&mut f, &best.x, &opts.step, opts.ftol, opts.max_evals - best.evals);
        let evals = best.evals + again.evals;
        let improved = again.f < best.f;
        if improved {
            best = SimplexResult { evals, ..again };
        } else {
            best.evals = evals;
            best.converged = best.converged || again.converged;
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n: usize) -> SimplexOptions {
        SimplexOptions {
            step: vec![0.5; n],
            ftol: 1e-12,
            max_evals: 20_000,
            restarts: 1,
        }
    }

    #[test]
    fn quadratic_bowl() {
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2) + 2.0, &[0.0, 0.0], &opts(2));
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-5 && (r.x[1] + 1.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn rosenbrock() {
        let r = nelder_mead(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2) + 1.0,
            &[-1.2, 1.0],
            &opts(2),
        );
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn budget_is_respected() {
        let mut o = opts(3);
        o.max_evals = 30;
        let r = nelder_mead(|x| x.iter().map(|v| v.abs()).sum::<f64>() + 1.0, &[5.0, 5.0, 5.0], &o);
        assert!(r.evals <= 40);
        assert!(!r.converged);
    }

    #[test]
    fn nan_is_worst() {
        let r = nelder_mead(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 1.0).powi(2) + 1.0 },
            &[0.1],
            &opts(1),
        );
        assert!((r.x[0] - 1.0).abs() < 1e-5);
    }
}
