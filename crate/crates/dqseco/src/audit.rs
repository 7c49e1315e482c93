//! Runtime record of the largest matrix block used on the solve path.
//!
//! Solve-path routines call [`record`] with the block shapes they work on;
//! tests reset the record, run a solve and read [`max_block`].

use std::cell::Cell;

/// Largest block dimension permitted on the solve path.
pub const MAX_BLOCK: usize = 15;

thread_local! {
    static LARGEST: Cell<(usize, usize)> = const { Cell::new((0, 0)) };
}

/// Notes a `rows × cols` block. Panics in debug builds above [`MAX_BLOCK`].
pub fn record(rows: usize, cols: usize) {
    debug_assert!(rows <= MAX_BLOCK && cols <= MAX_BLOCK, "{rows}x{cols} block on the solve path");
    LARGEST.with(|c| {
        let (r, k) = c.get();
        c.set((r.max(rows), k.max(cols)));
    });
}

/// Largest `(rows, cols)` recorded on this thread since the last [`reset`].
pub fn max_block() -> (usize, usize) {
    LARGEST.with(|c| c.get())
}

pub fn reset() {
    LARGEST.with(|c| c.set((0, 0)));
}
