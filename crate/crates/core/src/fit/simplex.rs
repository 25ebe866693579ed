//! Derivative-free Nelder-Mead minimization with optional box bounds.
//!
//! The objective is treated as a black box and only compared, never
//! differentiated, which suits noisy Monte-Carlo residuals evaluated under
//! common random numbers. Convergence tolerances are relative so the search
//! path is unchanged when the objective is rescaled.

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iters: usize,
    /// Stop when (f_worst - f_best) <= f_tol * max(|f_best|, |f_worst|).
    pub f_tol: f64,
    /// Stop when every vertex coordinate is within x_tol * (1 + |x_best|)
    /// of the best vertex.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iters: 400, f_tol: 1e-12, x_tol: 1e-10 }
    }
}

/// Result of one simplex run.
#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective value after each iteration; non-increasing.
    pub best_trace: Vec<f64>,
}

fn clamp_to(x: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (xi, (lo, hi)) in x.iter_mut().zip(b) {
            *xi = xi.clamp(*lo, *hi);
        }
    }
}

/// Minimizes `f` from `x0` with an initial simplex spanned by per-axis
/// `steps`. The standard reflect/expand/contract/shrink moves are used with
/// coefficients 1, 2, 1/2, 1/2; candidate points are clamped into `bounds`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    bounds: Option<&[(f64, f64)]>,
    options: &SimplexOptions,
) -> SimplexOutcome {
    let n = x0.len();
    assert!(n > 0, "need at least one parameter");
    assert_eq!(steps.len(), n, "one step per parameter");
    assert!(steps.iter().all(|s| *s != 0.0 && s.is_finite()), "steps must be finite and nonzero");
    if let Some(b) = bounds {
        assert_eq!(b.len(), n, "one bound pair per parameter");
    }

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        f(x)
    };

    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut base = x0.to_vec();
    clamp_to(&mut base, bounds);
    vertices.push(base.clone());
    for i in 0..n {
        let mut v = base.clone();
        v[i] += steps[i];
        clamp_to(&mut v, bounds);
        if v[i] == base[i] {
            // the step left the box; probe the other direction instead
            v[i] = base[i] - steps[i];
            clamp_to(&mut v, bounds);
        }
        vertices.push(v);
    }
    let mut values: Vec<f64> = vertices.iter().map(|v| eval(v)).collect();

    let mut best_trace = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;

    for _ in 0..options.max_iters {
        // ascending by objective; NaN sorts last so it is replaced first
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let f_best = values[best];
        let f_worst = values[worst];
        let f_spread_ok = (f_worst - f_best).abs() <= options.f_tol * f_best.abs().max(f_worst.abs());
        let x_spread_ok = vertices.iter().all(|v| {
            v.iter()
                .zip(&vertices[best])
                .all(|(a, b)| (a - b).abs() <= options.x_tol * (1.0 + b.abs()))
        });
        if f_spread_ok || x_spread_ok {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (idx, v) in vertices.iter().enumerate() {
            if idx != worst {
                for (c, xi) in centroid.iter_mut().zip(v) {
                    *c += xi;
                }
            }
        }
        for c in &mut centroid {
            *c /= n as f64;
        }

        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(&vertices[worst])
            .map(|(c, w)| c + (c - w))
            .collect();
        clamp_to(&mut reflected, bounds);
        let f_reflected = eval(&reflected);

        if f_reflected < values[best] {
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(&vertices[worst])
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            clamp_to(&mut expanded, bounds);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                vertices[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                vertices[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            vertices[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            // contract toward the better of (worst, reflected)
            let (anchor, f_anchor) = if f_reflected < values[worst] {
                (reflected.clone(), f_reflected)
            } else {
                (vertices[worst].clone(), values[worst])
            };
            let mut contracted: Vec<f64> = centroid
                .iter()
                .zip(&anchor)
                .map(|(c, a)| c + 0.5 * (a - c))
                .collect();
            clamp_to(&mut contracted, bounds);
            let f_contracted = eval(&contracted);
            if f_contracted < f_anchor {
                vertices[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // shrink everything toward the best vertex
                let anchor_vertex = vertices[best].clone();
                for idx in 0..=n {
                    if idx != best {
                        let mut v: Vec<f64> = anchor_vertex
                            .iter()
                            .zip(&vertices[idx])
                            .map(|(b, x)| b + 0.5 * (x - b))
                            .collect();
                        clamp_to(&mut v, bounds);
                        values[idx] = eval(&v);
                        vertices[idx] = v;
                    }
                }
            }
        }

        iterations += 1;
        let current_best = values.iter().cloned().fold(f64::INFINITY, f64::min);
        best_trace.push(current_best);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let best = order[0];
    SimplexOutcome {
        x: vertices[best].clone(),
        f: values[best],
        iterations,
        evaluations,
        converged,
        best_trace,
    }
}
