//! Plain-text estimate tables.

use std::fmt::Write;

use crate::estimator::{significance_stars, EstimationResult};

/// One table row per statistic: estimate, stars, standard error, convergence
/// ratio and `exp(estimate)`, the probability ratio for a unit increase.
/// Non-converged fits are stamped and printed without stars.
pub fn format_estimates(result: &EstimationResult, loglik: Option<(f64, f64)>) -> String {
    let names: Vec<String> = result.statistics.iter().map(|s| s.to_string()).collect();
    let width = names.iter().map(String::len).max().unwrap_or(9).max(9);
    let mut out = String::new();
    if !result.converged {
        let _ = writeln!(
            out,
            "NON-CONVERGED (max |convergence ratio| = {:.3})",
            result.max_abs_convergence_ratio()
        );
    }
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:<3}  {:>8}  {:>7}  {:>10}",
        "Statistic", "Est.", "Sig.", "S.e.", "Conv.", "exp(Est.)"
    );
    for (k, name) in names.iter().enumerate() {
        let est = result.alpha_hat[k];
        let stars = if result.converged {
            significance_stars(result.wald_ratios[k])
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.2}  {:<3}  {:>8}  {:>7.3}  {:>10}",
            name,
            est,
            stars,
            format!("({:.2})", result.standard_errors[k]),
            result.convergence_ratios[k],
            format_ratio(est)
        );
    }
    if let Some((ll, se)) = loglik {
        let _ = writeln!(out, "Log-likelihood: {ll:.2} (s.e. {se:.2})");
    }
    out
}

/// `exp(x)` with two decimals, the multiplicative change in probability.
pub fn format_ratio(x: f64) -> String {
    format!("{:.2}", x.exp())
}
