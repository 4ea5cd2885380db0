//! Execution policy for the data-parallel kernels.
//!
//! Every hot loop in the crate (pulse synthesis, FFT rows, CFAR cells,
//! Monte Carlo sweeps) is written as an indexed map or a chunked mutation.
//! With the `parallel` feature those run on the rayon pool; without it, or
//! when [`Exec::Sequential`] is requested explicitly, they run in order on the
//! calling thread. Both paths produce bit-identical results because each
//! work item owns its output slot and no reduction crosses item boundaries.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential execution when the crate is built without
    /// the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f(i)` for `i in 0..n`, preserving index order in the output.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Calls `f(chunk_index, chunk)` for consecutive chunks of `chunk_len` items.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        assert!(chunk_len > 0, "chunk length must be positive");
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Exec::Sequential.map_indexed(1000, f);
        let b = Exec::Parallel.map_indexed(1000, f);
        assert_eq!(a, b);

        let mut x = vec![0u64; 100];
        let mut y = vec![0u64; 100];
        Exec::Sequential.for_each_chunk_mut(&mut x, 7, |k, c| {
            for (j, v) in c.iter_mut().enumerate() {
                *v = (k * 7 + j) as u64 * 3;
            }
        });
        Exec::Parallel.for_each_chunk_mut(&mut y, 7, |k, c| {
            for (j, v) in c.iter_mut().enumerate() {
                *v = (k * 7 + j) as u64 * 3;
            }
        });
        assert_eq!(x, y);
    }
}
