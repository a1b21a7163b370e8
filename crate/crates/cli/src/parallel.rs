//! Rayon drivers. Each one splits work into pieces whose results are
//! merged in a fixed order, so the output does not depend on the number
//! of worker threads.

use carpetslice_core::measures::{chunk_plan, sample_chunk, sample_denominators, BernoulliSpec, Samples};
use carpetslice_core::carpets::Carpet;
use carpetslice_core::numeric::Q;
use carpetslice_core::rotation::{scan_base_point, AnglePoint, LogRatioAngle, ScanLine};
use carpetslice_core::slicer::{CellTally, CoverCount, CoverTarget, Line, LineCellCounter, Partition};
use carpetslice_core::{CoreError, Result};
use rayon::prelude::*;

/// Roots handed to each worker on average.
const ROOTS_PER_THREAD: usize = 8;

/// Parallel version of `count_line_cells`; identical counts.
pub fn count_line_cells(target: &dyn CoverTarget, line: &Line, partition: Partition, budget: u64) -> Result<CoverCount> {
    let counter = LineCellCounter::new(target, line, partition, budget)?;
    let roots = counter.roots(rayon::current_num_threads() * ROOTS_PER_THREAD)?;
    let tally = roots
        .par_iter()
        .map(|r| counter.descend(std::slice::from_ref(r)))
        .try_reduce(CellTally::default, |a, b| Ok(a.merge(b)))?;
    counter.finish(tally)
}

/// Parallel version of `sample_self_affine`; identical samples.
pub fn sample_self_affine(c: &Carpet, spec: &BernoulliSpec, n: u64, digit_depth: usize) -> Result<Samples> {
    if n == 0 || digit_depth == 0 {
        return Err(CoreError::InvalidArgument("sample size and digit depth must be at least 1".into()));
    }
    let den = sample_denominators(c, digit_depth)?;
    let chunks: Vec<_> =
        chunk_plan(n).into_par_iter().map(|(ci, cnt)| sample_chunk(c, spec, ci, cnt, digit_depth)).collect();
    Ok(Samples::from_chunks(2, den, chunks))
}

/// Scan every grid point independently; results come back in grid order.
pub fn remainder_scan(angle: &LogRatioAngle, big_k: u64, grid: &[Q]) -> Result<Vec<ScanLine>> {
    grid.par_iter()
        .map(|t| scan_base_point(&AnglePoint::rational(angle, t.clone())?, angle, big_k))
        .collect()
}
