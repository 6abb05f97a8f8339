//! Next-day stock price forecasting from prices and per-source news sentiment.
//!
//! [`sentiment`] scores headlines, [`dataprep`] joins and windows the series
//! and adds noise, [`neural`] holds the LSTM, [`baseline`] the ARMA models and
//! [`eval`] the metrics. [`pipeline`] ties them into the commands behind the
//! `newsflow` binary. The guide in `book/` walks through each stage.

pub mod baseline;
pub mod dataprep;
pub mod eval;
mod linalg;
pub mod neural;
pub mod pipeline;
pub mod sentiment;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sentiment.md")]
    mod sentiment {}
    #[doc = include_str!("../../../book/src/windows.md")]
    mod windows {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/lstm.md")]
    mod lstm {}
    #[doc = include_str!("../../../book/src/arma.md")]
    mod arma {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
