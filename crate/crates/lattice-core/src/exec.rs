//! Execution-mode switch for data-parallel stages.
//!
//! Stages that fan out over independent units (mask classes, raster rows,
//! dataset tiles) take an [`ExecMode`]. `Parallel` uses rayon when the
//! `parallel` feature is enabled and falls back to sequential otherwise.
//! Both modes produce bit-identical results: units are pure functions of the
//! inputs and are collected in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// True when this mode will actually fan out to worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Fill a flat row-major buffer by rows: `f(row_index, row_slice)`.
pub fn fill_rows<F>(mode: ExecMode, buf: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    debug_assert_eq!(buf.len() % row_len.max(1), 0);
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        buf.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(y, row)| f(y, row));
        return;
    }
    let _ = mode;
    for (y, row) in buf.chunks_mut(row_len).enumerate() {
        f(y, row);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let seq = map_indexed(ExecMode::Sequential, 64, |i| i * i);
        let par = map_indexed(ExecMode::Parallel, 64, |i| i * i);
        assert_eq!(seq, par);

        let mut a = vec![0.0; 6 * 4];
        let mut b = vec![0.0; 6 * 4];
        fill_rows(ExecMode::Sequential, &mut a, 6, |y, row| {
            for (x, v) in row.iter_mut().enumerate() {
                *v = (y * 10 + x) as f64;
            }
        });
        fill_rows(ExecMode::Parallel, &mut b, 6, |y, row| {
            for (x, v) in row.iter_mut().enumerate() {
                *v = (y * 10 + x) as f64;
            }
        });
        assert_eq!(a, b);
    }
}
