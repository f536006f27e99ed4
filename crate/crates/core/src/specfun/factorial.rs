use std::sync::OnceLock;

const TABLE_LEN: usize = 2048;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0f64;
        t.push(0.0);
        for i in 1..TABLE_LEN {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`, read from a table built on first use.
///
/// Panics if `n` exceeds the table (degrees far beyond anything the
/// sensing code evaluates).
pub fn ln_factorial(n: usize) -> f64 {
    let t = table();
    assert!(n < t.len(), "ln_factorial({n}) exceeds table size {}", t.len());
    t[n]
}

/// `ln(n!)` for a signed argument that the caller has already checked is
/// non-negative.
pub(crate) fn ln_fact_i(n: i64) -> f64 {
    debug_assert!(n >= 0);
    ln_factorial(n as usize)
}
