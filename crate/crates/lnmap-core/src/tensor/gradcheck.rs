//! Central-difference verification of analytic gradients.
//!
//! The checker assumes the subject's gradient accumulators already hold the
//! analytic gradient of the supplied loss (callers zero, run backward, then
//! check). Each coordinate is perturbed by `+-h` with the loss re-evaluated,
//! and the relative error `|analytic - numeric| / (1 + |numeric|)` is
//! compared against the tolerance.

use alloc::string::String;
use alloc::vec::Vec;

use super::params::{flatten_grads, flatten_params, layout, load_flat_params, Parameters};
use crate::Result;

/// One coordinate whose analytic and numeric gradients disagree.
#[derive(Debug, Clone)]
pub struct FdFailure {
    /// Tensor name plus flat offset within it.
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Outcome of a finite-difference sweep over every parameter.
#[derive(Debug, Clone)]
pub struct FdReport {
    pub checked: usize,
    pub max_rel_err: f64,
    pub failures: Vec<FdFailure>,
}

impl FdReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Sweeps every parameter coordinate of `subject` with central differences
/// of step `h` and flags coordinates whose relative error exceeds `tol`.
/// Parameters are restored to their original values afterwards.
pub fn fd_gradient_check<M, F>(subject: &mut M, loss: F, h: f64, tol: f64) -> Result<FdReport>
where
    M: Parameters,
    F: FnMut(&M) -> Result<f64>,
{
    fd_gradient_check_filtered(subject, loss, h, tol, |_| true)
}

/// [`fd_gradient_check`] restricted to tensors for which `include` returns
/// true. Losses that stop gradients (the mapping and back-translation
/// losses treat frozen encoders' codes as constants) are checked over their
/// update set only: outside it the analytic gradient is zero by design
/// while the raw loss still depends on the parameter, so a full sweep would
/// compare different functions.
pub fn fd_gradient_check_filtered<M, F, P>(
    subject: &mut M,
    mut loss: F,
    h: f64,
    tol: f64,
    mut include: P,
) -> Result<FdReport>
where
    M: Parameters,
    F: FnMut(&M) -> Result<f64>,
    P: FnMut(&str) -> bool,
{
    let analytic = flatten_grads(subject);
    let base = flatten_params(subject);
    let names = layout(subject);
    let mut mask = Vec::with_capacity(base.len());
    for (name, len) in &names {
        let keep = include(name);
        mask.extend(core::iter::repeat_n(keep, *len));
    }

    let mut report = FdReport {
        checked: mask.iter().filter(|&&k| k).count(),
        max_rel_err: 0.0,
        failures: Vec::new(),
    };
    let mut work = base.clone();
    for i in 0..base.len() {
        if !mask[i] {
            continue;
        }
        work[i] = base[i] + h;
        load_flat_params(subject, &work)?;
        let up = loss(subject)?;
        work[i] = base[i] - h;
        load_flat_params(subject, &work)?;
        let down = loss(subject)?;
        work[i] = base[i];

        let numeric = (up - down) / (2.0 * h);
        let rel_err = (analytic[i] - numeric).abs() / (1.0 + numeric.abs());
        if rel_err > report.max_rel_err {
            report.max_rel_err = rel_err;
        }
        if rel_err > tol {
            let (name, index) = locate(&names, i);
            report.failures.push(FdFailure {
                name,
                index,
                analytic: analytic[i],
                numeric,
                rel_err,
            });
        }
    }
    load_flat_params(subject, &base)?;
    Ok(report)
}

fn locate(names: &[(String, usize)], mut flat: usize) -> (String, usize) {
    for (name, len) in names {
        if flat < *len {
            return (name.clone(), flat);
        }
        flat -= len;
    }
    (String::from("<past end>"), flat)
}
