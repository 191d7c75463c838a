//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! pool; without it, or with [`Execution::Sequential`], everything runs on the
//! calling thread. Results never depend on the choice: reductions are
//! associative and commutative, and collected outputs keep input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Folds `f(i)` for `i in 0..n` into an accumulator.
pub fn fold_indices<T, F, M>(exec: Execution, n: u64, f: F, merge: M) -> T
where
    T: Default + Send,
    F: Fn(&mut T, u64) + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n)
            .into_par_iter()
            .fold(T::default, |mut acc, i| {
                f(&mut acc, i);
                acc
            })
            .reduce(T::default, merge),
        _ => {
            let _ = &merge;
            let mut acc = T::default();
            for i in 0..n {
                f(&mut acc, i);
            }
            acc
        }
    }
}

/// `items.map(f)` in input order.
pub fn map_ordered<I, R, F>(exec: Execution, items: &[I], f: F) -> Vec<R>
where
    I: Sync,
    R: Send,
    F: Fn(usize, &I) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect(),
        _ => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_matches_between_modes() {
        let run = |exec| {
            fold_indices(
                exec,
                10_000,
                |acc: &mut (u64, u64), i| {
                    acc.0 += i;
                    acc.1 += i % 7;
                },
                |a, b| (a.0 + b.0, a.1 + b.1),
            )
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
        assert_eq!(run(Execution::Sequential).0, 10_000 * 9_999 / 2);
    }

    #[test]
    fn map_keeps_order() {
        let items: Vec<u32> = (0..500).collect();
        let out = map_ordered(Execution::Parallel, &items, |i, x| (i, x * 2));
        assert!(out
            .iter()
            .enumerate()
            .all(|(k, (i, v))| k == *i && *v == 2 * k as u32));
    }
}
