//! dB/linear conversions. Powers are carried in watts internally.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts) + 30.0
}
