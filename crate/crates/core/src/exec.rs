//! Execution policy for the data-parallel loops in this crate.
//!
//! Every parallel loop maps an index range or slice to an owned `Vec` whose
//! element order is the input order, so serial and parallel runs are
//! bit-identical as long as reductions happen afterwards in index order.

/// How a data-parallel loop is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exec {
    Serial,
    /// Uses the ambient rayon pool. Falls back to serial when the crate is
    /// built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Serial
        }
    }
}

impl Exec {
    /// True when loops will actually be dispatched to rayon.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    pub fn map_slice<A, T, F>(self, items: &[A], f: F) -> Vec<T>
    where
        A: Sync,
        T: Send,
        F: Fn(&A) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_and_parallel_agree() {
        let a = Exec::Serial.map_range(1000, |i| (i as f64).sqrt());
        let b = Exec::Parallel.map_range(1000, |i| (i as f64).sqrt());
        assert_eq!(a, b);
        let xs: Vec<u32> = (0..257).collect();
        assert_eq!(
            Exec::Serial.map_slice(&xs, |x| x * 3),
            Exec::Parallel.map_slice(&xs, |x| x * 3)
        );
    }
}
