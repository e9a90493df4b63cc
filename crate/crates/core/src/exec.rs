//! Execution mode switch. With the `parallel` feature the heavy loops fan out
//! over rayon; without it, or when the mode is set to `Sequential`, they run
//! on the calling thread. Results are exact, so both modes agree bit for bit.

use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    Parallel,
}

static MODE: AtomicU8 = AtomicU8::new(1);

pub fn set_mode(mode: Mode) {
    MODE.store(matches!(mode, Mode::Parallel) as u8, Ordering::Relaxed);
}

pub fn mode() -> Mode {
    if cfg!(feature = "parallel") && MODE.load(Ordering::Relaxed) == 1 {
        Mode::Parallel
    } else {
        Mode::Sequential
    }
}

/// Sizes the global worker pool. Only the first call has an effect.
pub fn set_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if mode() == Mode::Parallel {
        use rayon::prelude::*;
        return items.into_par_iter().map(f).collect();
    }
    items.into_iter().map(f).collect()
}

/// Maps and folds with an associative `combine`.
pub fn map_reduce<T, R, F, I, C>(items: Vec<T>, f: F, identity: I, combine: C) -> R
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
    I: Fn() -> R + Send + Sync,
    C: Fn(R, R) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if mode() == Mode::Parallel {
        use rayon::prelude::*;
        return items.into_par_iter().map(f).reduce(&identity, &combine);
    }
    items.into_iter().map(f).fold(identity(), combine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        set_mode(Mode::Sequential);
        let a = map_reduce(xs.clone(), |x| x * x, || 0, |a, b| a + b);
        set_mode(Mode::Parallel);
        let b = map_reduce(xs.clone(), |x| x * x, || 0, |a, b| a + b);
        assert_eq!(a, b);
        assert_eq!(map(xs, |x| x + 1)[999], 1000);
    }
}
