//! The perceived map: typed, confidence-weighted bounding boxes with colour
//! degrees, plus optional relation degrees that override geometry.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::possibility::Possibility;
use crate::vocab;

/// Axis-aligned box in image pixels, y growing downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, SceneError> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min > x_max || y_min > y_max {
            return Err(SceneError::BadBox([x_min, x_max, y_min, y_max]));
        }
        Ok(BoundingBox { x_min, x_max, y_min, y_max })
    }

    /// Extents are clamped to one pixel so ratios stay finite.
    pub fn width(&self) -> f64 {
        (self.x_max - self.x_min).max(1.0)
    }

    pub fn height(&self) -> f64 {
        (self.y_max - self.y_min).max(1.0)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn thickness(&self) -> f64 {
        self.width().min(self.height())
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = SceneError;

    fn try_from(v: [f64; 4]) -> Result<Self, SceneError> {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x_min, b.x_max, b.y_min, b.y_max]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedObject {
    pub id: String,
    #[serde(rename = "type")]
    pub detected_type: String,
    #[serde(rename = "confidence")]
    pub detection_confidence: Possibility,
    pub bbox: BoundingBox,
    #[serde(rename = "colors", default)]
    pub color_degrees: BTreeMap<String, Possibility>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attribute_overrides: BTreeMap<String, Possibility>,
}

impl PerceivedObject {
    pub fn new(id: impl Into<String>, detected_type: impl Into<String>, confidence: f64, bbox: BoundingBox) -> Result<Self, SceneError> {
        Ok(PerceivedObject {
            id: id.into(),
            detected_type: detected_type.into(),
            detection_confidence: Possibility::new(confidence)?,
            bbox,
            color_degrees: BTreeMap::new(),
            attribute_overrides: BTreeMap::new(),
        })
    }

    pub fn with_color(mut self, color: &str, degree: f64) -> Result<Self, SceneError> {
        self.color_degrees.insert(color.to_string(), Possibility::new(degree)?);
        Ok(self)
    }

    pub fn with_override(mut self, predicate: &str, degree: f64) -> Result<Self, SceneError> {
        self.attribute_overrides.insert(predicate.to_string(), Possibility::new(degree)?);
        Ok(self)
    }
}

/// Key of a relation override: predicate and ordered argument ids.
pub type RelationKey = (String, Vec<String>);

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    objects: Vec<PerceivedObject>,
    relation_overrides: BTreeMap<RelationKey, Possibility>,
}

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("malformed scene document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Range(#[from] crate::possibility::OutOfRange),
    #[error("bad bounding box {0:?}")]
    BadBox([f64; 4]),
    #[error("duplicate object id '{0}'")]
    DuplicateId(String),
    #[error("object '{id}' has unregistered type '{ty}'")]
    UnknownType { id: String, ty: String },
    #[error("object '{id}' has unknown predicate '{predicate}' in {field}")]
    UnknownPredicate { id: String, predicate: String, field: &'static str },
    #[error("relation override {relation}({}) references unknown object '{missing}'", .args.join(", "))]
    DanglingOverride { relation: String, args: Vec<String>, missing: String },
    #[error("relation override uses unknown relation '{0}' or wrong arity")]
    BadOverrideRelation(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RelationOverrideDoc {
    relation: String,
    args: Vec<String>,
    degree: Possibility,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneDoc {
    objects: Vec<PerceivedObject>,
    #[serde(default)]
    relation_overrides: Vec<RelationOverrideDoc>,
}

impl Scene {
    /// Builds a scene, checking every invariant. Objects are stored sorted by
    /// id, which makes results independent of input order.
    pub fn new(
        mut objects: Vec<PerceivedObject>,
        relation_overrides: BTreeMap<RelationKey, Possibility>,
    ) -> Result<Self, SceneError> {
        let mut seen = HashSet::new();
        for o in &objects {
            if !seen.insert(o.id.clone()) {
                return Err(SceneError::DuplicateId(o.id.clone()));
            }
            if !vocab::is_type(&o.detected_type) {
                return Err(SceneError::UnknownType { id: o.id.clone(), ty: o.detected_type.clone() });
            }
            for c in o.color_degrees.keys() {
                if !vocab::COLORS.contains(&c.as_str()) {
                    return Err(SceneError::UnknownPredicate { id: o.id.clone(), predicate: c.clone(), field: "colors" });
                }
            }
            for p in o.attribute_overrides.keys() {
                if vocab::attribute_kind(p).is_none() {
                    return Err(SceneError::UnknownPredicate {
                        id: o.id.clone(),
                        predicate: p.clone(),
                        field: "attribute_overrides",
                    });
                }
            }
        }
        for (relation, args) in relation_overrides.keys() {
            if vocab::relation_arity(relation) != Some(args.len()) {
                return Err(SceneError::BadOverrideRelation(relation.clone()));
            }
            if let Some(missing) = args.iter().find(|a| !seen.contains(*a)) {
                return Err(SceneError::DanglingOverride {
                    relation: relation.clone(),
                    args: args.clone(),
                    missing: missing.clone(),
                });
            }
        }
        objects.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Scene { objects, relation_overrides })
    }

    pub fn empty() -> Self {
        Scene::default()
    }

    pub fn objects(&self) -> &[PerceivedObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn object(&self, id: &str) -> Option<&PerceivedObject> {
        self.objects
            .binary_search_by(|o| o.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.objects[i])
    }

    pub fn relation_overrides(&self) -> &BTreeMap<RelationKey, Possibility> {
        &self.relation_overrides
    }

    pub fn relation_override(&self, relation: &str, args: &[&str]) -> Option<Possibility> {
        let key = (relation.to_string(), args.iter().map(|s| s.to_string()).collect());
        self.relation_overrides.get(&key).copied()
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let doc: SceneDoc = serde_json::from_str(text)?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: SceneDoc) -> Result<Self, SceneError> {
        let overrides = doc
            .relation_overrides
            .into_iter()
            .map(|r| ((r.relation, r.args), r.degree))
            .collect();
        Scene::new(doc.objects, overrides)
    }

    fn to_doc(&self) -> SceneDoc {
        SceneDoc {
            objects: self.objects.clone(),
            relation_overrides: self
                .relation_overrides
                .iter()
                .map(|((relation, args), degree)| RelationOverrideDoc {
                    relation: relation.clone(),
                    args: args.clone(),
                    degree: *degree,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("scene serializes")
    }
}

impl Serialize for Scene {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scene {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = SceneDoc::deserialize(d)?;
        Scene::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

pub fn load_scene(mut source: impl Read) -> Result<Scene, SceneError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    Scene::from_json(&text)
}

/// Canonical document: objects sorted by id, overrides sorted by key.
pub fn save_scene(scene: &Scene) -> Vec<u8> {
    let mut out = scene.to_json().into_bytes();
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(objects: &str, overrides: &str) -> String {
        format!(r#"{{"objects": [{objects}], "relation_overrides": [{overrides}]}}"#)
    }

    const A: &str = r#"{"id": "b", "type": "pipe", "confidence": 0.5, "bbox": [0, 10, 0, 2], "colors": {"red": 0.25}}"#;
    const B: &str = r#"{"id": "a", "type": "floodgate", "confidence": 1.0, "bbox": [3, 5, 2, 6]}"#;

    #[test]
    fn empty_scene_is_valid() {
        let s = load_scene(r#"{"objects": []}"#.as_bytes()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn confidence_out_of_range() {
        let text = doc(r#"{"id": "x", "type": "pipe", "confidence": 1.2, "bbox": [0, 1, 0, 1]}"#, "");
        let err = load_scene(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("1.2"), "{err}");
    }

    #[test]
    fn invariant_violations() {
        let dup = doc(&format!("{A}, {A}"), "");
        assert!(matches!(load_scene(dup.as_bytes()), Err(SceneError::DuplicateId(_))));
        let dangling = doc(A, r#"{"relation": "on", "args": ["b", "zz"], "degree": 0.5}"#);
        let err = load_scene(dangling.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("zz"), "{err}");
        let badtype = doc(r#"{"id": "x", "type": "valve", "confidence": 0.2, "bbox": [0, 1, 0, 1]}"#, "");
        assert!(load_scene(badtype.as_bytes()).is_err());
        let badbox = doc(r#"{"id": "x", "type": "pipe", "confidence": 0.2, "bbox": [5, 1, 0, 1]}"#, "");
        assert!(load_scene(badbox.as_bytes()).is_err());
        assert!(load_scene("{not json".as_bytes()).is_err());
    }

    #[test]
    fn roundtrip_and_canonical_order() {
        let text = doc(&format!("{A}, {B}"), r#"{"relation": "in_front_of", "args": ["b", "a"], "degree": 0.3}"#);
        let s = load_scene(text.as_bytes()).unwrap();
        assert_eq!(s.objects()[0].id, "a");
        let saved = save_scene(&s);
        let again = load_scene(saved.as_slice()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.relation_override("in_front_of", &["b", "a"]).unwrap().value(), 0.3);
        let saved_text = String::from_utf8(saved).unwrap();
        assert!(saved_text.find("\"a\"").unwrap() < saved_text.find("\"b\"").unwrap());
    }
}
