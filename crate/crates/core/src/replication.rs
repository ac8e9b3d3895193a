//! Static replication of a European payoff `h(F_T)` from co-terminal calls
//! and puts:
//!
//! ```text
//! E h(F_T) = h(κ) + h'(κ)(C(κ) − P(κ)) + ∫_0^κ h''(K) P(K) dK + ∫_κ^∞ h''(K) C(K) dK
//! ```
//!
//! The integrals are trapezoid sums on the quoted strikes, with `κ` inserted
//! as an extra node whose prices are linearly interpolated.

use alloc::format;
use alloc::vec::Vec;

use crate::payoff::{Payoff, PriceSpacePayoff};
use crate::{Error, Result};

/// Fewest strikes a smile may have.
pub const MIN_ROWS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmileRow {
    pub strike: f64,
    pub call: f64,
    pub put: f64,
}

/// Call and put prices on a strictly increasing strike grid, all expiring at
/// `expiry` and written on a forward currently at `forward`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmileGrid {
    forward: f64,
    expiry: f64,
    rows: Vec<SmileRow>,
}

/// A row whose prices break the expected shape, reported without rejecting
/// the smile.
#[derive(Debug, Clone, PartialEq)]
pub struct SmileWarning {
    /// 1-based row number.
    pub row: usize,
    pub message: alloc::string::String,
}

impl SmileGrid {
    /// Validates and stores rows in the given order. Row numbers in errors
    /// are 1-based positions in `rows`.
    pub fn new(forward: f64, expiry: f64, rows: Vec<SmileRow>) -> Result<Self> {
        if !(forward > 0.0 && forward.is_finite()) {
            return Err(Error::Parameter(format!(
                "forward {forward} must be positive"
            )));
        }
        if !(expiry >= 0.0 && expiry.is_finite()) {
            return Err(Error::Parameter(format!(
                "expiry {expiry} must be non-negative"
            )));
        }
        if rows.len() < MIN_ROWS {
            return Err(Error::Format {
                row: rows.len(),
                msg: format!("need at least {MIN_ROWS} strikes, got {}", rows.len()),
            });
        }
        for (i, r) in rows.iter().enumerate() {
            let row = i + 1;
            if !(r.strike > 0.0 && r.strike.is_finite()) {
                return Err(Error::Format {
                    row,
                    msg: format!("strike {} must be positive", r.strike),
                });
            }
            if !(r.call >= 0.0 && r.call.is_finite() && r.put >= 0.0 && r.put.is_finite()) {
                return Err(Error::Format {
                    row,
                    msg: format!(
                        "negative or non-finite price (call {}, put {})",
                        r.call, r.put
                    ),
                });
            }
            if i > 0 {
                let prev = rows[i - 1].strike;
                if r.strike == prev {
                    return Err(Error::Format {
                        row,
                        msg: format!("duplicate strike {}", r.strike),
                    });
                }
                if r.strike < prev {
                    return Err(Error::Format {
                        row,
                        msg: format!("strike {} below previous strike {prev}", r.strike),
                    });
                }
            }
        }
        Ok(SmileGrid {
            forward,
            expiry,
            rows,
        })
    }

    pub fn forward(&self) -> f64 {
        self.forward
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    pub fn rows(&self) -> &[SmileRow] {
        &self.rows
    }

    pub fn strike_range(&self) -> (f64, f64) {
        (self.rows[0].strike, self.rows[self.rows.len() - 1].strike)
    }

    /// `C_i − P_i − (F0 − K_i)` per row.
    pub fn parity_residuals(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.call - r.put - (self.forward - r.strike))
            .collect()
    }

    pub fn parity_max(&self) -> f64 {
        self.parity_residuals()
            .into_iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Rows where calls fail to be convex and decreasing, or puts convex and
    /// increasing, by more than `tol` times the local price scale.
    pub fn shape_warnings(&self, tol: f64) -> Vec<SmileWarning> {
        let mut out = Vec::new();
        let r = &self.rows;
        for i in 1..r.len() {
            let scale = tol * (1.0 + r[i].call.max(r[i].put));
            if r[i].call > r[i - 1].call + scale {
                out.push(SmileWarning {
                    row: i + 1,
                    message: format!("call price rises at strike {}", r[i].strike),
                });
            }
            if r[i].put + scale < r[i - 1].put {
                out.push(SmileWarning {
                    row: i + 1,
                    message: format!("put price falls at strike {}", r[i].strike),
                });
            }
            if i + 1 < r.len() {
                let (k0, k1, k2) = (r[i - 1].strike, r[i].strike, r[i + 1].strike);
                let second =
                    |p0: f64, p1: f64, p2: f64| (p2 - p1) / (k2 - k1) - (p1 - p0) / (k1 - k0);
                if second(r[i - 1].call, r[i].call, r[i + 1].call) < -scale {
                    out.push(SmileWarning {
                        row: i + 1,
                        message: format!("calls not convex at strike {}", k1),
                    });
                }
                if second(r[i - 1].put, r[i].put, r[i + 1].put) < -scale {
                    out.push(SmileWarning {
                        row: i + 1,
                        message: format!("puts not convex at strike {}", k1),
                    });
                }
            }
        }
        out
    }

    /// Linearly interpolated `(C(K), P(K))` inside the strike range.
    pub fn interpolate(&self, k: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.strike_range();
        if !(k >= lo && k <= hi) {
            return Err(Error::Parameter(format!(
                "strike {k} outside the quoted range [{lo}, {hi}]"
            )));
        }
        let j = self.rows.partition_point(|r| r.strike < k);
        if self.rows[j].strike == k {
            return Ok((self.rows[j].call, self.rows[j].put));
        }
        let (a, b) = (&self.rows[j - 1], &self.rows[j]);
        let w = (k - a.strike) / (b.strike - a.strike);
        Ok((a.call + w * (b.call - a.call), a.put + w * (b.put - a.put)))
    }
}

/// Replicated value with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Replication {
    pub value: f64,
    pub parity_max: f64,
    /// `|h''(K_min)| P(K_min) + |h''(K_max)| C(K_max)`, a size indicator for
    /// the option mass outside the quoted strikes.
    pub tail_bound: f64,
    pub kappa: f64,
}

/// Prices `h(F_T)` from the smile, splitting puts and calls at `kappa`.
pub fn replicate_european(
    h: &PriceSpacePayoff,
    smile: &SmileGrid,
    kappa: f64,
) -> Result<Replication> {
    let (c_k, p_k) = smile.interpolate(kappa)?;
    let mut value = h.value(kappa)? + h.d1(kappa)? * (c_k - p_k);

    let rows = smile.rows();
    let mut puts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.strike < kappa)
        .map(|r| (r.strike, r.put))
        .collect();
    puts.push((kappa, p_k));
    let mut calls: Vec<(f64, f64)> = Vec::with_capacity(rows.len() + 1);
    calls.push((kappa, c_k));
    calls.extend(
        rows.iter()
            .filter(|r| r.strike > kappa)
            .map(|r| (r.strike, r.call)),
    );

    value += trapezoid(h, &puts)? + trapezoid(h, &calls)?;

    let (first, last) = (rows[0], rows[rows.len() - 1]);
    let tail_bound = h.d2(first.strike)?.abs() * first.put + h.d2(last.strike)?.abs() * last.call;
    Ok(Replication {
        value,
        parity_max: smile.parity_max(),
        tail_bound,
        kappa,
    })
}

fn trapezoid(h: &PriceSpacePayoff, nodes: &[(f64, f64)]) -> Result<f64> {
    let mut sum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &(k, price) in nodes {
        let f = h.d2(k)? * price;
        if let Some((k0, f0)) = prev {
            sum += 0.5 * (k - k0) * (f + f0);
        }
        prev = Some((k, f));
    }
    Ok(sum)
}

/// Fair variance-swap strike `E G(log F_T) − G(log F0)`, replicated at `κ = F0`.
pub fn vs_strike_from_smile(g: &Payoff, smile: &SmileGrid) -> Result<Replication> {
    let h = g.to_price_space(smile.forward(), None)?;
    replicate_european(&h, smile, smile.forward())
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Undiscounted Black call and put on a forward. The out-of-the-money side
/// is computed directly and the other from parity, so the pair is
/// parity-exact up to rounding.
pub fn black_call_put(forward: f64, strike: f64, sigma: f64, expiry: f64) -> (f64, f64) {
    let sd = sigma * expiry.sqrt();
    if sd == 0.0 {
        return ((forward - strike).max(0.0), (strike - forward).max(0.0));
    }
    let d1 = (forward / strike).ln() / sd + 0.5 * sd;
    let d2 = d1 - sd;
    if strike >= forward {
        let call = forward * norm_cdf(d1) - strike * norm_cdf(d2);
        (call, call - (forward - strike))
    } else {
        let put = strike * norm_cdf(-d2) - forward * norm_cdf(-d1);
        (put + (forward - strike), put)
    }
}

/// Black smile on `n` equispaced strikes spanning `[k_lo, k_hi]`.
pub fn synthetic_black_smile(
    forward: f64,
    sigma: f64,
    expiry: f64,
    k_lo: f64,
    k_hi: f64,
    n: usize,
) -> Result<SmileGrid> {
    if !(sigma >= 0.0 && k_lo > 0.0 && k_lo < k_hi && n >= 2) {
        return Err(Error::Parameter(format!(
            "bad synthetic smile (σ {sigma}, strikes [{k_lo}, {k_hi}], n {n})"
        )));
    }
    let rows = crate::model::linspace(k_lo, k_hi, n)
        .into_iter()
        .map(|k| {
            let (call, put) = black_call_put(forward, k, sigma, expiry);
            SmileRow {
                strike: k,
                call,
                put,
            }
        })
        .collect();
    SmileGrid::new(forward, expiry, rows)
}
