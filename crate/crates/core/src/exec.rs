//! Execution policy for the data-parallel loops (Monte Carlo sampling,
//! restarts, path points, audits).
//!
//! With the `parallel` feature the [`ExecPolicy::Parallel`] policy runs on the
//! rayon global pool; without it every policy runs sequentially. Results are
//! always collected in input order, so output never depends on the policy.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecPolicy {
    Sequential,
    #[default]
    Parallel,
}

impl ExecPolicy {
    /// Whether this policy actually runs in parallel in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }

    /// Map `f` over `0..n`, returning results in index order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Map `f` over a slice, returning results in slice order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
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
    fn policies_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = ExecPolicy::Sequential.map_range(1000, f);
        let b = ExecPolicy::Parallel.map_range(1000, f);
        assert_eq!(a, b);
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(
            ExecPolicy::Sequential.map_slice(&xs, |x| x * 2.0),
            ExecPolicy::Parallel.map_slice(&xs, |x| x * 2.0)
        );
    }
}
