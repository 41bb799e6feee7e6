//! Fingerprinting-script detection: static AST features, dynamic trace
//! features, and decision-tree models over them. The static and dynamic
//! models are independent trees trained on the same labeled corpus.

mod features;
mod tree;

pub use features::{
    count_name_occurrences, dynamic_schema, extract_dynamic_features, extract_static_features,
    static_schema, FeatureSchema, FeatureVector, DYNAMIC_SCHEMA_ID, STATIC_API_NAMES,
    STATIC_SCHEMA_ID,
};
pub use tree::{
    classify, train_tree, ClassifyError, DecisionTree, Label, TrainError, TrainParams,
    TreeNode, MODEL_FORMAT_VERSION,
};
