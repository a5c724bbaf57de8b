//! Bounded Nelder-Mead simplex search.

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best objective value after each iteration.
    pub history: Vec<f64>,
}

/// Minimizes `f` starting from a simplex around `x0` with per-coordinate
/// offsets `step`. Every trial point is projected into `[lower, upper]`.
/// Stops when the spread of objective values drops below `ftol` or after
/// `max_iter` iterations.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    max_iter: usize,
    ftol: f64,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let project = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    project(&mut start);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        v[i] += step[i];
        if v[i] > upper[i] {
            v[i] = start[i] - step[i];
        }
        project(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut order: Vec<usize> = (0..=n).collect();
    while iterations < max_iter {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        if (values[worst] - values[best]).abs() <= ftol {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[worst]).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p);
            p
        };

        let reflected = along(1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < values[best] {
            let expanded = along(2.0);
            let fe = eval(&expanded, &mut evals);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let (contracted, fc) = if fr < values[worst] {
                let c = along(0.5);
                let fc = eval(&c, &mut evals);
                (c, fc)
            } else {
                let c = along(-0.5);
                let fc = eval(&c, &mut evals);
                (c, fc)
            };
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                let anchor = simplex[best].clone();
                for &i in &order[1..] {
                    let mut v: Vec<f64> = anchor.iter().zip(&simplex[i]).map(|(a, x)| a + 0.5 * (x - a)).collect();
                    project(&mut v);
                    values[i] = eval(&v, &mut evals);
                    simplex[i] = v;
                }
            }
        }
        history.push(values.iter().copied().fold(f64::INFINITY, f64::min));
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    NelderMeadResult { x: simplex[best].clone(), value: values[best], iterations, evaluations: evals, history }
}
