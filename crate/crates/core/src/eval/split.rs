use crate::dataset::{Dataset, Example, TestPartition, TrainPartition};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::rng::rng_for;
use rand::seq::SliceRandom;

/// Stratified split: each class contributes `round(train_frac * n_class)`
/// training examples. Both partitions keep corpus order.
pub fn train_test_split(ds: &Dataset, train_frac: f64, seed: u64) -> Result<(TrainPartition, TestPartition)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidConfig(format!("train fraction {train_frac} must be in (0, 1)")));
    }
    let mut in_train = vec![false; ds.len()];
    for label in Label::ALL {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.examples[i].label == label).collect();
        if idx.len() < 2 {
            return Err(Error::InsufficientClassExamples {
                label: label.to_string(),
                count: idx.len(),
            });
        }
        idx.shuffle(&mut rng_for(seed, &format!("split/{label}")));
        let n_train = (train_frac * idx.len() as f64).round() as usize;
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    let (train, test): (Vec<&Example>, Vec<&Example>) = ds.examples.iter().enumerate().fold(
        (Vec::new(), Vec::new()),
        |(mut a, mut b), (i, e)| {
            if in_train[i] {
                a.push(e);
            } else {
                b.push(e);
            }
            (a, b)
        },
    );
    Ok((
        TrainPartition(train.into_iter().cloned().collect()),
        TestPartition(test.into_iter().cloned().collect()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::AudioClip;

    fn ds(labels: &[Label]) -> Dataset {
        Dataset::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, &label)| Example {
                    clip: AudioClip::new(format!("c{i}"), vec![0.0; 4], 8000).unwrap(),
                    label,
                    transcript: None,
                })
                .collect(),
        )
    }

    #[test]
    fn ten_balanced() {
        let labels: Vec<Label> = (0..10).map(|i| Label::from_index(i % 2)).collect();
        let d = ds(&labels);
        let (tr, te) = train_test_split(&d, 0.8, 42).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert_eq!(te.examples().iter().filter(|e| e.label == Label::Takeoff).count(), 1);
        let (tr2, te2) = train_test_split(&d, 0.8, 42).unwrap();
        assert_eq!((tr, te), (tr2, te2));
    }

    #[test]
    fn partition_law() {
        let labels: Vec<Label> = (0..23).map(|i| Label::from_index(usize::from(i % 3 == 0))).collect();
        let d = ds(&labels);
        let (tr, te) = train_test_split(&d, 0.8, 3).unwrap();
        let mut ids: Vec<&str> = tr.examples().iter().chain(te.examples()).map(|e| e.id()).collect();
        ids.sort_unstable();
        let mut all: Vec<&str> = d.examples.iter().map(|e| e.id()).collect();
        all.sort_unstable();
        assert_eq!(ids, all);
    }

    #[test]
    fn tiny_class_rejected() {
        let d = ds(&[Label::Landing, Label::Landing, Label::Takeoff]);
        assert!(matches!(
            train_test_split(&d, 0.8, 1),
            Err(Error::InsufficientClassExamples { count: 1, .. })
        ));
    }
}
