//! CART decision-tree training (Gini impurity) and classification.
//!
//! Training is deterministic: candidate splits are midpoints of adjacent
//! sorted feature values, the best split maximizes impurity decrease
//! with ties broken by lowest feature index then lowest threshold, and
//! leaf-label ties resolve to non-fingerprinting. Classification
//! descends left on `value <= threshold`.

use crate::detect::features::FeatureVector;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Fp,
    NonFp,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Fp => write!(f, "FP"),
            Label::NonFp => write!(f, "NONFP"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        label: Label,
        /// Training sample counts at this leaf: [fp, nonfp].
        counts: [u64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub model_format_version: u32,
    pub schema_id: String,
    pub params: TrainParams,
    /// Node 0 is the root; children reference by index.
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrainError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClassifyError {
    #[error("schema mismatch: model {model}, vector {vector}")]
    SchemaMismatch { model: String, vector: String },
}

/// Greedy CART training over a labeled dataset.
pub fn train_tree(
    dataset: &[(FeatureVector, Label)],
    params: TrainParams,
) -> Result<DecisionTree, TrainError> {
    let Some((first, _)) = dataset.first() else {
        return Err(TrainError::EmptyDataset);
    };
    let schema_id = first.schema_id.clone();
    let width = first.values.len();
    for (fv, _) in dataset {
        if fv.schema_id != schema_id || fv.values.len() != width {
            return Err(TrainError::SchemaMismatch {
                expected: schema_id,
                found: fv.schema_id.clone(),
            });
        }
    }
    let mut nodes = Vec::new();
    let indices: Vec<usize> = (0..dataset.len()).collect();
    build(dataset, &indices, params, 0, &mut nodes);
    Ok(DecisionTree {
        model_format_version: MODEL_FORMAT_VERSION,
        schema_id,
        params,
        nodes,
    })
}

fn tally(dataset: &[(FeatureVector, Label)], indices: &[usize]) -> [u64; 2] {
    let mut counts = [0u64; 2];
    for &i in indices {
        match dataset[i].1 {
            Label::Fp => counts[0] += 1,
            Label::NonFp => counts[1] += 1,
        }
    }
    counts
}

fn gini(counts: [u64; 2]) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    if total == 0.0 {
        return 0.0;
    }
    let p_fp = counts[0] as f64 / total;
    let p_non = counts[1] as f64 / total;
    1.0 - p_fp * p_fp - p_non * p_non
}

fn majority(counts: [u64; 2]) -> Label {
    // Ties resolve to the benign class.
    if counts[0] > counts[1] {
        Label::Fp
    } else {
        Label::NonFp
    }
}

fn build(
    dataset: &[(FeatureVector, Label)],
    indices: &[usize],
    params: TrainParams,
    depth: usize,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let counts = tally(dataset, indices);
    let pure = counts[0] == 0 || counts[1] == 0;
    if pure || depth >= params.max_depth || indices.len() < 2 * params.min_leaf {
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf {
            label: majority(counts),
            counts,
        });
        return idx;
    }
    let parent_gini = gini(counts);
    let n = indices.len() as f64;
    let width = dataset[indices[0]].0.values.len();

    let mut best: Option<(f64, usize, f64)> = None; // (decrease, feature, threshold)
    for feature in 0..width {
        let mut values: Vec<f64> = indices
            .iter()
            .map(|&i| dataset[i].0.values[feature])
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let mut left = [0u64; 2];
            let mut right = [0u64; 2];
            for &i in indices {
                let side = if dataset[i].0.values[feature] <= threshold {
                    &mut left
                } else {
                    &mut right
                };
                match dataset[i].1 {
                    Label::Fp => side[0] += 1,
                    Label::NonFp => side[1] += 1,
                }
            }
            let nl = (left[0] + left[1]) as usize;
            let nr = (right[0] + right[1]) as usize;
            if nl < params.min_leaf || nr < params.min_leaf {
                continue;
            }
            let decrease = parent_gini
                - (nl as f64 / n) * gini(left)
                - (nr as f64 / n) * gini(right);
            // Strict improvement keeps the first (lowest feature, lowest
            // threshold) candidate on ties.
            if decrease > 1e-12 && best.map_or(true, |(d, _, _)| decrease > d + 1e-12) {
                best = Some((decrease, feature, threshold));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf {
            label: majority(counts),
            counts,
        });
        return idx;
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| dataset[i].0.values[feature] <= threshold);
    let idx = nodes.len();
    nodes.push(TreeNode::Split {
        feature,
        threshold,
        left: 0,
        right: 0,
    });
    let left = build(dataset, &left_idx, params, depth + 1, nodes);
    let right = build(dataset, &right_idx, params, depth + 1, nodes);
    if let TreeNode::Split {
        left: l, right: r, ..
    } = &mut nodes[idx]
    {
        *l = left;
        *r = right;
    }
    idx
}

/// Deterministic leaf-label lookup: left on `value <= threshold`.
pub fn classify(tree: &DecisionTree, fv: &FeatureVector) -> Result<Label, ClassifyError> {
    if fv.schema_id != tree.schema_id {
        return Err(ClassifyError::SchemaMismatch {
            model: tree.schema_id.clone(),
            vector: fv.schema_id.clone(),
        });
    }
    let mut at = 0;
    loop {
        match &tree.nodes[at] {
            TreeNode::Leaf { label, .. } => return Ok(*label),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                at = if fv.values.get(*feature).copied().unwrap_or(0.0) <= *threshold {
                    *left
                } else {
                    *right
                };
            }
        }
    }
}

impl DecisionTree {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// All internal thresholds must lie strictly between two observed
    /// training values of their feature; checked structurally here as
    /// "every split separates its subtree's leaves".
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::features::STATIC_SCHEMA_ID;

    fn fv(values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            schema_id: STATIC_SCHEMA_ID.to_string(),
            values,
        }
    }

    #[test]
    fn single_class_dataset_yields_single_leaf() {
        let data = vec![
            (fv(vec![1.0]), Label::NonFp),
            (fv(vec![2.0]), Label::NonFp),
            (fv(vec![3.0]), Label::NonFp),
        ];
        let tree = train_tree(&data, TrainParams::default()).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert!(matches!(
            tree.nodes[0],
            TreeNode::Leaf {
                label: Label::NonFp,
                counts: [0, 3]
            }
        ));
    }

    #[test]
    fn forced_split_lands_at_midpoint() {
        let data = vec![
            (fv(vec![0.0]), Label::NonFp),
            (fv(vec![1.0]), Label::Fp),
        ];
        let tree = train_tree(&data, TrainParams { max_depth: 8, min_leaf: 1 }).unwrap();
        let TreeNode::Split {
            feature, threshold, ..
        } = &tree.nodes[0]
        else {
            panic!("expected a split, got {:?}", tree.nodes[0]);
        };
        assert_eq!(*feature, 0);
        assert_eq!(*threshold, 0.5);
        assert_eq!(classify(&tree, &fv(vec![0.0])).unwrap(), Label::NonFp);
        assert_eq!(classify(&tree, &fv(vec![1.0])).unwrap(), Label::Fp);
    }

    #[test]
    fn single_leaf_tree_classifies_everything_the_same() {
        let data = vec![(fv(vec![5.0]), Label::Fp), (fv(vec![9.0]), Label::Fp)];
        let tree = train_tree(&data, TrainParams::default()).unwrap();
        assert_eq!(classify(&tree, &fv(vec![-100.0])).unwrap(), Label::Fp);
        assert_eq!(classify(&tree, &fv(vec![100.0])).unwrap(), Label::Fp);
    }

    #[test]
    fn training_is_permutation_invariant() {
        let mut data = vec![
            (fv(vec![0.0, 3.0]), Label::NonFp),
            (fv(vec![1.0, 2.0]), Label::NonFp),
            (fv(vec![5.0, 9.0]), Label::Fp),
            (fv(vec![6.0, 1.0]), Label::Fp),
            (fv(vec![2.0, 4.0]), Label::NonFp),
            (fv(vec![7.0, 7.0]), Label::Fp),
        ];
        let params = TrainParams { max_depth: 4, min_leaf: 1 };
        let base = train_tree(&data, params).unwrap().to_json();
        // Several deterministic permutations.
        for rot in 1..data.len() {
            data.rotate_left(1);
            let t = train_tree(&data, params).unwrap().to_json();
            assert_eq!(t, base, "rotation {rot} changed the tree");
        }
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert_eq!(
            train_tree(&[], TrainParams::default()).unwrap_err(),
            TrainError::EmptyDataset
        );
    }

    #[test]
    fn schema_mismatch_is_detected() {
        let data = vec![
            (fv(vec![0.0]), Label::NonFp),
            (
                FeatureVector {
                    schema_id: "other".into(),
                    values: vec![1.0],
                },
                Label::Fp,
            ),
        ];
        assert!(matches!(
            train_tree(&data, TrainParams::default()),
            Err(TrainError::SchemaMismatch { .. })
        ));

        let tree = train_tree(
            &[(fv(vec![0.0]), Label::NonFp)],
            TrainParams::default(),
        )
        .unwrap();
        let other = FeatureVector {
            schema_id: "other".into(),
            values: vec![0.0],
        };
        assert!(matches!(
            classify(&tree, &other),
            Err(ClassifyError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn max_depth_limits_the_tree() {
        // Alternating labels along one feature force deep splits.
        let data: Vec<_> = (0..32)
            .map(|i| {
                (
                    fv(vec![i as f64]),
                    if i % 2 == 0 { Label::Fp } else { Label::NonFp },
                )
            })
            .collect();
        let tree = train_tree(&data, TrainParams { max_depth: 3, min_leaf: 1 }).unwrap();
        assert!(tree.depth() <= 4); // 3 splits + leaf level
    }

    #[test]
    fn model_json_round_trips() {
        let data = vec![
            (fv(vec![0.0, 1.0]), Label::NonFp),
            (fv(vec![1.0, 0.0]), Label::Fp),
        ];
        let tree = train_tree(&data, TrainParams { max_depth: 8, min_leaf: 1 }).unwrap();
        let json = tree.to_json();
        assert!(json.contains("\"model_format_version\": 1"));
        let back = DecisionTree::from_json(&json).unwrap();
        assert_eq!(back, tree);
    }
}
