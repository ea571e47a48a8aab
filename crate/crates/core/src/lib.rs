//! Tuning-free GUI grounding from multimodal LLM attention.
//!
//! This crate holds everything that is pure computation: the attention tensor
//! data model, per-token head selection, relevance propagation through the
//! visual-query compression map, region localization on the patch grid,
//! descriptive-token span matching, element-accuracy evaluation, OCG crop
//! arithmetic and the synthetic fixture generator together with its
//! independent reference implementation.
//!
//! It is `no_std` and only needs `alloc`. File formats, the command line and
//! parallel batch drivers live in the `attnground` crate.
//!
//! Pipeline for a single query:
//!
//! ```text
//! SelfAttentionSlice (N x T x Q) --select_heads--> HeadSelection
//!                                --aggregate_heads--> AggregatedAttention (T x Q)
//! AggregatedAttention x CrossAttention (Q x H*W) --propagate--> R_j (T maps)
//! average_tokens --> relevance map --localize--> GroundingPrediction
//! ```

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod eval;
pub mod grounding;
pub mod labeling;
pub mod ocg;
pub mod synth;
pub mod tensor;
pub mod token_select;

pub use error::{Error, Result};
pub use eval::{
    evaluate, parse_box, point_in_bbox, BBox, ElementType, EvalReport, GroundTruthElement,
    GroupBy, GroupStats, ParsedBox, Platform, Prediction, PredictionMeta,
};
pub use grounding::{
    aggregate_heads, average_tokens, ground, ground_detailed, localize, propagate, select_heads,
    AggregatedAttention, CenterMode, GroundingConfig, GroundingPrediction, GroundingTrace,
    HeadSelection, RelevanceMap,
};
pub use labeling::{label_components, Components, Connectivity};
pub use ocg::{crop_dims, crop_rect, crop_samples, filter_boxes, Anchor, CropSpec, OcrRecord};
pub use synth::oracle::{flood_fill_labels, oracle_ground, oracle_relevance};
pub use synth::{generate, random_instance, InstanceLimits, SynthSpec};
pub use tensor::{AttentionDump, CrossAttention, PatchGrid, SelfAttentionSlice, TokenRecord};
pub use token_select::{detokenize, select_span, TokenSpan};
