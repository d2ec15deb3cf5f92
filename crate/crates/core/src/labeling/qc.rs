use rand::seq::index;

use super::LabelError;
use crate::rng;

/// Uniform sample of `⌈rate · n⌉` items without replacement, returned in
/// their original order.
pub fn qc_sample<T: Clone>(items: &[T], rate: f64, seed: u64) -> Result<Vec<T>, LabelError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(LabelError::Input(format!("sampling rate must lie in (0, 1], got {rate}")));
    }
    if items.is_empty() {
        return Err(LabelError::Input("nothing to sample".into()));
    }
    let k = ((rate * items.len() as f64).ceil() as usize).min(items.len());
    let mut picked = index::sample(&mut rng::seeded(seed), items.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| items[i].clone()).collect())
}
