use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::model::ContentItem;

/// Splits labeled items into `n_batches` batches whose sizes differ by at
/// most one and whose positive counts differ by at most one.
///
/// Positives and negatives are shuffled separately, dealt round-robin
/// (negatives continue where positives stopped), and each batch is then
/// shuffled. Deterministic for a given seed.
pub fn stratified_batches(items: &[ContentItem], n_batches: usize, seed: u64) -> Result<Vec<Vec<ContentItem>>, HarnessError> {
    if n_batches == 0 || n_batches > items.len() {
        return Err(HarnessError::InsufficientData(format!(
            "cannot split {} items into {n_batches} batches",
            items.len()
        )));
    }
    if let Some(item) = items.iter().find(|i| i.label.is_none()) {
        return Err(HarnessError::InsufficientData(format!("item {} has no label", item.id)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg): (Vec<&ContentItem>, Vec<&ContentItem>) =
        items.iter().partition(|i| i.label.is_some_and(|l| l.is_positive()));
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut batches: Vec<Vec<ContentItem>> = vec![Vec::new(); n_batches];
    for (i, item) in pos.iter().chain(neg.iter()).enumerate() {
        batches[i % n_batches].push((*item).clone());
    }
    for batch in &mut batches {
        batch.shuffle(&mut rng);
    }
    Ok(batches)
}

pub fn batch_name(index: usize) -> String {
    format!("B{}", index + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroundTruthLabel;

    fn items(n: usize, positives: usize) -> Vec<ContentItem> {
        (0..n)
            .map(|i| {
                let label = if i < positives { GroundTruthLabel::Risky } else { GroundTruthLabel::Safe };
                ContentItem::text_only(format!("i{i}"), "t").with_label(label)
            })
            .collect()
    }

    #[test]
    fn small_split() {
        let b = stratified_batches(&items(4, 2), 2, 1).unwrap();
        for batch in &b {
            assert_eq!(batch.len(), 2);
            assert_eq!(batch.iter().filter(|i| i.label == Some(GroundTruthLabel::Risky)).count(), 1);
        }
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(stratified_batches(&items(3, 1), 0, 1).is_err());
        assert!(stratified_batches(&items(3, 1), 4, 1).is_err());
    }

    #[test]
    fn seed_changes_assignment() {
        let all = items(40, 13);
        let a = stratified_batches(&all, 4, 1).unwrap();
        let b = stratified_batches(&all, 4, 2).unwrap();
        assert_eq!(a, stratified_batches(&all, 4, 1).unwrap());
        assert_ne!(a, b);
    }
}
