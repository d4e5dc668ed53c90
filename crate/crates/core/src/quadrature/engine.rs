//! Batch-adaptive Gauss-Kronrod integration over [0, 1] with deterministic
//! refinement and reduction.
//!
//! Values are accumulated over the leaf panels (always kept sorted by
//! position) with a pairwise tree, so the result is a pure function of the
//! integrand and the options — independent of how many threads evaluate
//! panels. Refinement is batched: every pass splits all leaves whose error
//! exceeds half the mean leaf error.
//!
//! Each node evaluation returns, besides the integrand value, an `aux`
//! error channel (inherited uncertainty: inner-integral tolerances,
//! finite-difference truncation). `aux` integrates alongside the value and
//! is added to the reported error but never drives refinement below its
//! own level, which would chase noise.

use rayon::prelude::*;

use super::gauss::{kronrod_points, pairwise_sum, rescale_error, WG7, WGK15};

/// One integrand evaluation.
#[derive(Debug, Clone, Copy)]
pub struct NodeValue {
    pub value: f64,
    /// Non-negative inherited uncertainty attached to `value`.
    pub aux: f64,
    /// Number of elementary kernel evaluations behind this value.
    pub cost: u64,
    /// False when an inner integral under this node failed to converge.
    pub ok: bool,
}

impl NodeValue {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            aux: 0.0,
            cost: 1,
            ok: true,
        }
    }
}

/// Result of one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    /// Quadrature (Gauss-Kronrod) error estimate.
    pub gk_err: f64,
    /// Integrated inherited uncertainty.
    pub aux: f64,
    pub nodes: u64,
    pub converged: bool,
}

impl Estimate {
    pub fn total_err(&self) -> f64 {
        self.gk_err + self.aux
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptOptions {
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_depth: u32,
    pub initial_panels: usize,
    pub max_panels: usize,
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    t0: f64,
    t1: f64,
    depth: u32,
    value: f64,
    gk_err: f64,
    aux: f64,
    cost: u64,
    ok: bool,
}

fn eval_panel<F>(f: &F, t0: f64, t1: f64, depth: u32) -> Panel
where
    F: Fn(f64) -> NodeValue,
{
    let half = 0.5 * (t1 - t0);
    let pts = kronrod_points(t0, t1);
    let evals: Vec<NodeValue> = pts.iter().map(|&t| f(t)).collect();

    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    let mut res_abs = 0.0;
    let mut aux = 0.0;
    let mut cost = 0;
    let mut ok = true;
    for (j, e) in evals.iter().enumerate() {
        let wk = WGK15[7 - (j as i64 - 7).unsigned_abs() as usize];
        kronrod += wk * e.value;
        res_abs += wk * e.value.abs();
        aux += wk * e.aux;
        cost += e.cost;
        ok &= e.ok;
        // Gauss points sit at the odd Kronrod indices 1,3,…,13
        if j % 2 == 1 {
            let wg = WG7[3 - ((j as i64 - 7).unsigned_abs() as usize) / 2];
            gauss += wg * e.value;
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = 0.0;
    for (j, e) in evals.iter().enumerate() {
        let wk = WGK15[7 - (j as i64 - 7).unsigned_abs() as usize];
        res_asc += wk * (e.value - mean).abs();
    }
    let gk_err = rescale_error((kronrod - gauss) * half, res_abs * half, res_asc * half);
    Panel {
        t0,
        t1,
        depth,
        value: kronrod * half,
        gk_err,
        aux: aux * half,
        cost,
        ok,
    }
}

/// Adaptively integrates `f` over [0, 1].
pub fn integrate_unit<F>(f: &F, options: &AdaptOptions) -> Estimate
where
    F: Fn(f64) -> NodeValue + Sync,
{
    let k0 = options.initial_panels.max(1);
    let specs: Vec<(f64, f64, u32)> = (0..k0)
        .map(|i| (i as f64 / k0 as f64, (i + 1) as f64 / k0 as f64, 0))
        .collect();
    let mut panels = eval_batch(f, &specs, options.parallel);

    loop {
        let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
        let value = pairwise_sum(&values);
        let gk_err: f64 = panels.iter().map(|p| p.gk_err).sum();
        let aux: f64 = panels.iter().map(|p| p.aux).sum();
        let nodes: u64 = panels.iter().map(|p| p.cost).sum();
        let inner_ok = panels.iter().all(|p| p.ok);
        let tolerance = (options.rel_tol * value.abs())
            .max(options.abs_floor)
            .max(0.5 * aux);
        if gk_err <= tolerance {
            return Estimate {
                value,
                gk_err,
                aux,
                nodes,
                converged: inner_ok,
            };
        }
        let threshold = gk_err / (2.0 * panels.len() as f64);
        let splittable: Vec<usize> = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.gk_err > threshold && p.depth < options.max_depth)
            .map(|(i, _)| i)
            .collect();
        if splittable.is_empty() || panels.len() + splittable.len() > options.max_panels {
            return Estimate {
                value,
                gk_err,
                aux,
                nodes,
                converged: false,
            };
        }

        let specs: Vec<(f64, f64, u32)> = splittable
            .iter()
            .flat_map(|&i| {
                let p = &panels[i];
                let mid = 0.5 * (p.t0 + p.t1);
                [(p.t0, mid, p.depth + 1), (mid, p.t1, p.depth + 1)]
            })
            .collect();
        let fresh = eval_batch(f, &specs, options.parallel);

        // splice the refined halves back in position order
        let mut next = Vec::with_capacity(panels.len() + splittable.len());
        let mut fresh_iter = fresh.into_iter();
        let mut split_iter = splittable.iter().copied().peekable();
        let old_cost: u64 = panels.iter().map(|p| p.cost).sum();
        for (i, p) in panels.into_iter().enumerate() {
            if split_iter.peek() == Some(&i) {
                split_iter.next();
                let mut left = fresh_iter.next().expect("split halves present");
                let mut right = fresh_iter.next().expect("split halves present");
                // keep the total evaluation count, charging parents to children
                left.cost += p.cost / 2;
                right.cost += p.cost - p.cost / 2;
                next.push(left);
                next.push(right);
            } else {
                next.push(p);
            }
        }
        debug_assert!(next.windows(2).all(|w| w[0].t0 <= w[1].t0));
        debug_assert!(next.iter().map(|p| p.cost).sum::<u64>() >= old_cost);
        panels = next;
    }
}

fn eval_batch<F>(f: &F, specs: &[(f64, f64, u32)], parallel: bool) -> Vec<Panel>
where
    F: Fn(f64) -> NodeValue + Sync,
{
    if parallel {
        specs
            .par_iter()
            .map(|&(t0, t1, depth)| eval_panel(f, t0, t1, depth))
            .collect()
    } else {
        specs
            .iter()
            .map(|&(t0, t1, depth)| eval_panel(f, t0, t1, depth))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn options() -> AdaptOptions {
        AdaptOptions {
            rel_tol: 1e-10,
            abs_floor: 1e-300,
            max_depth: 30,
            initial_panels: 4,
            max_panels: 10_000,
            parallel: false,
        }
    }

    #[test]
    fn integrates_smooth_functions() {
        let f = |t: f64| NodeValue::exact((3.0 * t).sin());
        let est = integrate_unit(&f, &options());
        let exact = (1.0 - (3.0f64).cos()) / 3.0;
        assert!(est.converged);
        assert_relative_eq!(est.value, exact, max_relative = 1e-12);
        assert!((est.value - exact).abs() <= est.total_err().max(1e-14));
    }

    #[test]
    fn refines_a_sharp_feature() {
        // narrow peak at t = 0.3123 of width 1e-4
        let f = |t: f64| {
            let z = (t - 0.3123) / 1e-4;
            NodeValue::exact((-z * z).exp())
        };
        let est = integrate_unit(&f, &options());
        let exact = 1e-4 * std::f64::consts::PI.sqrt(); // tails truncated below 1e-300
        assert!(est.converged);
        assert_relative_eq!(est.value, exact, max_relative = 1e-9);
    }

    #[test]
    fn zero_integrand_converges_immediately() {
        let f = |_: f64| NodeValue::exact(0.0);
        let est = integrate_unit(&f, &options());
        assert!(est.converged);
        assert_eq!(est.value, 0.0);
        assert_eq!(est.gk_err, 0.0);
    }

    #[test]
    fn flags_non_convergence_at_depth_limit() {
        let opts = AdaptOptions {
            rel_tol: 1e-14,
            max_depth: 0,
            initial_panels: 2,
            ..options()
        };
        let f = |t: f64| NodeValue::exact((40.0 * t).sin().abs());
        let est = integrate_unit(&f, &opts);
        assert!(!est.converged);
    }

    #[test]
    fn aux_channel_integrates_and_caps_refinement() {
        // value is noisy at the 1e-6 level, and aux says so
        let f = |t: f64| NodeValue {
            value: t + 1e-6 * (1e6 * t).sin(),
            aux: 1e-6,
            cost: 1,
            ok: true,
        };
        let est = integrate_unit(&f, &options());
        assert_relative_eq!(est.aux, 1e-6, max_relative = 1e-12);
        assert!((est.value - 0.5).abs() < 3e-6);
        // converged because gk_err dropped below the aux half-level
        assert!(est.converged);
        assert!(est.gk_err <= 0.5 * est.aux + 1e-18);
    }

    #[test]
    fn parallel_and_serial_agree_bitwise() {
        let f = |t: f64| NodeValue::exact((7.0 * t).cos() / (1.0 + t * t));
        let serial = integrate_unit(&f, &options());
        let par = integrate_unit(
            &f,
            &AdaptOptions {
                parallel: true,
                ..options()
            },
        );
        assert_eq!(serial.value.to_bits(), par.value.to_bits());
        assert_eq!(serial.gk_err.to_bits(), par.gk_err.to_bits());
    }
}
