use crate::numcore::ParameterStore;

/// Worst disagreement within one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

/// Compares the gradients currently stored in `store` against central
/// differences of `loss_fn`, entry by entry.
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-8)`. Values are restored
/// bit-exactly after each probe.
pub fn grad_check<F>(store: &mut ParameterStore, epsilon: f64, mut loss_fn: F) -> GradCheckReport
where
    F: FnMut(&ParameterStore) -> f64,
{
    let mut params = Vec::with_capacity(store.len());
    for idx in 0..store.len() {
        let (rows, cols) = store.get(idx).value.shape();
        let mut check = ParamCheck {
            name: store.get(idx).name.clone(),
            max_rel_error: 0.0,
            worst: (0, 0),
            analytic: 0.0,
            numeric: 0.0,
        };
        for r in 0..rows {
            for c in 0..cols {
                let orig = store.get(idx).value.get(r, c);
                store.get_mut(idx).value.set(r, c, orig + epsilon);
                let plus = loss_fn(store);
                store.get_mut(idx).value.set(r, c, orig - epsilon);
                let minus = loss_fn(store);
                store.get_mut(idx).value.set(r, c, orig);

                let numeric = (plus - minus) / (2.0 * epsilon);
                let analytic = store.get(idx).grad.get(r, c);
                let denom = analytic.abs().max(numeric.abs()).max(1e-8);
                let rel = (analytic - numeric).abs() / denom;
                if rel > check.max_rel_error || (r, c) == (0, 0) {
                    check.max_rel_error = check.max_rel_error.max(rel);
                    check.worst = (r, c);
                    check.analytic = analytic;
                    check.numeric = numeric;
                }
            }
        }
        params.push(check);
    }
    GradCheckReport { params }
}
