// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact fused lasso for the identity design.

use alloc::vec;
use alloc::vec::Vec;

/// Exact minimiser of `‖y - x‖² + lam ‖Dx‖₁`.
///
/// Condat's direct taut-string algorithm, applied with threshold `lam / 2`
/// because it solves the half-scaled problem. Runs in `O(p)` on typical
/// inputs; every segment of the output is written from a single value, so
/// fused neighbours are bit-for-bit equal.
pub fn prox_tv_1d(y: &[f64], lam: f64) -> Vec<f64> {
    debug_assert!(lam >= 0.0);
    let mut out = vec![0.0; y.len()];
    condat(y, &mut out, 0.5 * lam);
    out
}

fn condat(input: &[f64], output: &mut [f64], lambda: f64) {
    let width = input.len();
    if width == 0 {
        return;
    }
    if lambda <= 0.0 {
        output.copy_from_slice(input);
        return;
    }
    let last = width - 1;
    let twolambda = 2.0 * lambda;
    let minlambda = -lambda;

    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = minlambda;
    let mut vmin = input[0] - lambda;
    let mut vmax = input[0] + lambda;

    loop {
        while k == last {
            if umin < 0.0 {
                // Emit a segment at the lower bound and restart after it.
                loop {
                    output[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = input[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    output[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = input[k0];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                for o in &mut output[k0..=k] {
                    *o = vmin;
                }
                return;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < minlambda {
            loop {
                output[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmin = input[k0];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lambda {
            loop {
                output[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmax = input[k0];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        k += 1;
        if umin >= lambda {
            kminus = k;
            vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
            umin = lambda;
        }
        if umax <= minlambda {
            kplus = k;
            vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
            umax = minlambda;
        }
    }
}

/// Exact fused lasso when only the entries at `positions` are observed,
/// i.e. the design is a set of distinct rows of the identity.
///
/// Unobserved coordinates carry no loss, so they can sit anywhere between
/// their observed neighbours at zero extra variation. The observed
/// subsequence is denoised exactly and the gaps are filled by linear
/// interpolation (constant beyond the first and last observation), which is
/// one of the minimisers.
pub fn prox_tv_observed(positions: &[usize], y_obs: &[f64], p: usize, lam: f64) -> Vec<f64> {
    debug_assert_eq!(positions.len(), y_obs.len());
    debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
    if positions.is_empty() {
        return vec![0.0; p];
    }
    let fitted = prox_tv_1d(y_obs, lam);
    let mut out = vec![0.0; p];
    let first = positions[0];
    let last = *positions.last().unwrap_or(&first);
    for o in &mut out[..=first] {
        *o = fitted[0];
    }
    for (w, f) in positions.windows(2).zip(fitted.windows(2)) {
        let (l, r) = (w[0], w[1]);
        let (fl, fr) = (f[0], f[1]);
        out[l] = fl;
        if fl == fr {
            for o in &mut out[l + 1..r] {
                *o = fl;
            }
        } else {
            let span = (r - l) as f64;
            for j in l + 1..r {
                out[j] = fl + (fr - fl) * ((j - l) as f64 / span);
            }
        }
    }
    let tail = *fitted.last().unwrap_or(&0.0);
    for o in &mut out[last..] {
        *o = tail;
    }
    out
}
