//! Econometrics and forecasting toolkit for linked commodity futures.
//!
//! The crate covers the whole analysis pipeline on a date-aligned price
//! panel:
//!
//! * [`panel`] and [`window`]: CSV ingestion, alignment, log returns,
//!   chronological splits and sliding-window datasets.
//! * [`stats`], [`adf`], [`mackinnon`]: moments, Jarque-Bera, ADF unit-root
//!   tests, correlation matrices and box-plot summaries.
//! * [`coint`]: Engle-Granger and Granger-causality p-value matrices.
//! * [`ols`] and [`var`]: regression with diagnostics, VAR(p) with
//!   stability checks, forecasts and impulse responses.
//! * [`optim`], [`egarch`], [`dcc`]: Nelder-Mead maximum likelihood for
//!   EGARCH(1,1) margins and DCC(1,1) dynamic correlations.
//! * [`nn`]: MLP, 1-D CNN and LSTM multi-step forecasters trained with Adam.
//! * [`simulate`]: seeded ground-truth processes for every estimator.

pub mod adf;
pub mod coint;
pub mod dcc;
pub mod egarch;
pub mod error;
pub mod mackinnon;
pub mod nn;
pub mod ols;
pub mod optim;
pub mod panel;
pub mod report;
pub mod simulate;
pub mod stats;
pub mod var;
pub mod window;

pub use error::{Error, Result};
pub use panel::{Panel, PanelKind};
