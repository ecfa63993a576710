//! Fixed predicate vocabulary shared by the description language, the scene
//! model and the fuzzy evaluators.

use serde::{Deserialize, Serialize};

/// Object type names. Every expected object asserts exactly one of these.
pub const TYPES: &[&str] = &["pipe", "floodgate", "elbow", "cistern", "supercharger", "tsquare"];
pub const COLORS: &[&str] = &["red", "blue", "green", "yellow", "grey"];
pub const ORIENTATIONS: &[&str] = &["horizontal", "vertical"];
pub const SIZES: &[&str] = &["long", "elongated", "short"];

/// Binary relation predicates.
pub const RELATIONS: &[&str] = &[
    "above",
    "below",
    "on",
    "under",
    "on_the_left_to",
    "on_the_right_to",
    "in_front_of",
    "behind",
    "connected_to",
    "near_from",
    "elbow",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Type,
    Color,
    Orientation,
    Size,
}

pub fn attribute_kind(name: &str) -> Option<AttributeKind> {
    if TYPES.contains(&name) {
        Some(AttributeKind::Type)
    } else if COLORS.contains(&name) {
        Some(AttributeKind::Color)
    } else if ORIENTATIONS.contains(&name) {
        Some(AttributeKind::Orientation)
    } else if SIZES.contains(&name) {
        Some(AttributeKind::Size)
    } else {
        None
    }
}

pub fn is_type(name: &str) -> bool {
    TYPES.contains(&name)
}

pub fn relation_arity(name: &str) -> Option<usize> {
    RELATIONS.contains(&name).then_some(2)
}

/// Lower-cases a surface word and folds spelling variants onto the
/// vocabulary entry ("super-charger" -> "supercharger").
pub fn canonical_word(word: &str) -> String {
    let lower = word.to_lowercase();
    match lower.as_str() {
        "super-charger" | "super_charger" => "supercharger".to_string(),
        "t-square" | "t_square" => "tsquare".to_string(),
        "gray" => "grey".to_string(),
        _ => lower,
    }
}
