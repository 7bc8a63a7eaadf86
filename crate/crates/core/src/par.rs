//! Minimal deterministic fan-out over a work list.

/// Map `f` over `items` using up to `jobs` scoped threads. Results come back
/// in input order regardless of scheduling, so callers stay deterministic.
pub(crate) fn map_indexed<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let mut out: Vec<Option<R>> = Vec::with_capacity(items.len());
    out.resize_with(items.len(), || None);
    let slots: Vec<(usize, &T)> = items.iter().enumerate().collect();
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for batch in slots.chunks(chunk) {
            handles.push(scope.spawn(|| {
                batch
                    .iter()
                    .map(|(i, item)| (*i, f(item)))
                    .collect::<Vec<_>>()
            }));
        }
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                out[i] = Some(r);
            }
        }
    });
    out.into_iter().map(|r| r.expect("missing slot")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..97).collect();
        let seq = map_indexed(1, &items, |x| x * x);
        let par = map_indexed(8, &items, |x| x * x);
        assert_eq!(seq, par);
    }
}
