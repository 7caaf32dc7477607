//! Day-ahead scheduling for an energy storage system shared by multiple
//! users, benchmarked against per-user distributed storage.

pub mod cost;
pub mod lp;
pub mod scenario;
pub mod storage;
