//! Scene graph: workspace, obstacles and perception-annotated objects.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Obstacle;

pub const SCENE_FORMAT: u32 = 1;

/// Coincident centroids closer than this are merged.
pub const CENTROID_MERGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn size(&self) -> Vector3<f64> {
        self.max - self.min
    }
}

/// An object of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub id: String,
    #[serde(rename = "class")]
    pub class_name: String,
    pub centroid: Vector3<f64>,
    /// Preferred viewing direction, pointing out of the observed face.
    pub face_normal: Vector3<f64>,
    pub extent: Vector3<f64>,
    /// Monitoring importance; zero means present but not monitored.
    pub weight: f64,
}

impl ObjectNode {
    pub fn is_monitored(&self) -> bool {
        self.weight > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SceneFile {
    format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    workspace: Aabb,
    obstacles: Vec<Obstacle>,
    objects: Vec<ObjectNode>,
    classes: Vec<String>,
}

/// Immutable environment description.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    pub name: Option<String>,
    pub workspace: Aabb,
    pub obstacles: Vec<Obstacle>,
    pub objects: Vec<ObjectNode>,
    pub class_vocabulary: Vec<String>,
}

impl SceneGraph {
    /// Validates the invariants and normalizes face normals that are off by more than 1e-6.
    pub fn new(
        workspace: Aabb,
        obstacles: Vec<Obstacle>,
        mut objects: Vec<ObjectNode>,
        class_vocabulary: Vec<String>,
    ) -> Result<Self> {
        if (0..3).any(|i| !(workspace.min[i] < workspace.max[i])) {
            return Err(Error::scene(
                "workspace",
                "min corner must be below max corner",
            ));
        }
        for o in &obstacles {
            o.validate()?;
        }
        let mut seen = HashSet::new();
        for o in objects.iter_mut() {
            if !seen.insert(o.id.clone()) {
                return Err(Error::scene(
                    "objects.id",
                    format!("duplicate object id `{}`", o.id),
                ));
            }
            if !class_vocabulary.contains(&o.class_name) {
                return Err(Error::scene(
                    format!("objects[{}].class", o.id),
                    format!("class `{}` not in vocabulary", o.class_name),
                ));
            }
            if !workspace.contains(&o.centroid) {
                return Err(Error::scene(
                    format!("objects[{}].centroid", o.id),
                    "outside workspace bounds",
                ));
            }
            if !(o.weight >= 0.0) {
                return Err(Error::scene(
                    format!("objects[{}].weight", o.id),
                    "must be nonnegative",
                ));
            }
            if o.extent.iter().any(|e| !(*e > 0.0)) {
                return Err(Error::scene(
                    format!("objects[{}].extent", o.id),
                    "must be positive",
                ));
            }
            let n = o.face_normal.norm();
            if !(n > 1e-12) || !n.is_finite() {
                return Err(Error::scene(
                    format!("objects[{}].face_normal", o.id),
                    "zero length",
                ));
            }
            if (n - 1.0).abs() > 1e-6 {
                log::warn!("object `{}`: face normal has norm {n}, normalizing", o.id);
            }
            if n != 1.0 {
                o.face_normal /= n;
            }
        }
        Ok(Self {
            name: None,
            workspace,
            obstacles,
            objects,
            class_vocabulary,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        if file.format != SCENE_FORMAT {
            return Err(Error::Format(format!(
                "scene format {} (expected {SCENE_FORMAT})",
                file.format
            )));
        }
        let mut scene = Self::new(file.workspace, file.obstacles, file.objects, file.classes)?;
        scene.name = file.name;
        Ok(scene)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SceneFile {
            format: SCENE_FORMAT,
            name: self.name.clone(),
            workspace: self.workspace,
            obstacles: self.obstacles.clone(),
            objects: self.objects.clone(),
            classes: self.class_vocabulary.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn monitored(&self) -> impl Iterator<Item = &ObjectNode> {
        self.objects.iter().filter(|o| o.is_monitored())
    }

    pub fn monitored_count(&self) -> usize {
        self.monitored().count()
    }

    pub fn object(&self, id: &str) -> Option<&ObjectNode> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Copy of the scene with new monitoring weights; unlisted objects keep theirs.
    pub fn with_weights(&self, weights: &[(&str, f64)]) -> Result<Self> {
        let mut scene = self.clone();
        for (id, w) in weights {
            let o = scene
                .objects
                .iter_mut()
                .find(|o| o.id == *id)
                .ok_or_else(|| Error::UnknownObject(id.to_string()))?;
            if !(*w >= 0.0) {
                return Err(Error::scene(
                    format!("objects[{id}].weight"),
                    "must be nonnegative",
                ));
            }
            o.weight = *w;
        }
        Ok(scene)
    }

    /// Copy of the scene monitoring only the first `n` objects (by id) with unit weight.
    pub fn with_first_monitored(&self, n: usize) -> Self {
        let mut ids: Vec<&str> = self.objects.iter().map(|o| o.id.as_str()).collect();
        ids.sort_unstable();
        let keep: HashSet<String> = ids.into_iter().take(n).map(str::to_owned).collect();
        let mut scene = self.clone();
        for o in scene.objects.iter_mut() {
            o.weight = if keep.contains(&o.id) { 1.0 } else { 0.0 };
        }
        scene
    }
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<SceneGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SceneGraph::from_json(&text)
}

pub fn save_scene(scene: &SceneGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scene.to_json()?).map_err(|e| Error::io(path, e))
}

/// Aim points for projection: one per object, one per unordered pair, one for all.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    pub entries: Vec<(String, Vector3<f64>)>,
    /// Number of entries before coincident centroids were merged.
    pub raw_count: usize,
}

impl CentroidSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.entries.iter().map(|(_, p)| p)
    }
}

pub fn extract_centroids<'a>(
    objects: impl IntoIterator<Item = &'a ObjectNode>,
) -> Result<CentroidSet> {
    let objects: Vec<&ObjectNode> = objects.into_iter().collect();
    if objects.is_empty() {
        return Err(Error::EmptyInput("no objects to extract centroids from"));
    }
    let n = objects.len();
    let mut raw = Vec::with_capacity(n + n * (n - 1) / 2 + 1);
    for o in &objects {
        raw.push((o.id.clone(), o.centroid));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            raw.push((
                format!("{}+{}", objects[i].id, objects[j].id),
                (objects[i].centroid + objects[j].centroid) / 2.0,
            ));
        }
    }
    let sum = objects
        .iter()
        .fold(Vector3::zeros(), |acc: Vector3<f64>, o| acc + o.centroid);
    raw.push(("*".to_string(), sum / n as f64));

    let raw_count = raw.len();
    let mut entries: Vec<(String, Vector3<f64>)> = Vec::with_capacity(raw_count);
    for (label, p) in raw {
        if entries
            .iter()
            .all(|(_, q)| (p - q).norm() >= CENTROID_MERGE_TOL)
        {
            entries.push((label, p));
        }
    }
    Ok(CentroidSet { entries, raw_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obj(id: &str, c: [f64; 3]) -> ObjectNode {
        ObjectNode {
            id: id.into(),
            class_name: "monitor".into(),
            centroid: Vector3::from(c),
            face_normal: Vector3::new(0.0, -1.0, 0.0),
            extent: Vector3::new(0.5, 0.05, 0.3),
            weight: 1.0,
        }
    }

    fn workspace() -> Aabb {
        Aabb {
            min: Vector3::new(-10.0, -10.0, 0.0),
            max: Vector3::new(10.0, 10.0, 3.0),
        }
    }

    #[test]
    fn three_object_centroids() {
        let objs = [
            obj("a", [0.0, 0.0, 0.0]),
            obj("b", [2.0, 0.0, 0.0]),
            obj("c", [0.0, 2.0, 0.0]),
        ];
        let set = extract_centroids(&objs).unwrap();
        assert_eq!(set.raw_count, 7);
        assert_eq!(set.len(), 7);
        let pts: Vec<Vector3<f64>> = set.points().copied().collect();
        let expected = [
            [0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [0.0, 2.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
            [2.0 / 3.0, 2.0 / 3.0, 0.0],
        ];
        for (p, e) in pts.iter().zip(expected) {
            assert!((p - Vector3::from(e)).norm() < 1e-12, "{p:?} vs {e:?}");
        }
    }

    #[test]
    fn coincident_centroids_merge() {
        let one = extract_centroids(&[obj("a", [1.0, 2.0, 0.5])]).unwrap();
        assert_eq!((one.raw_count, one.len()), (2, 1));
        let two =
            extract_centroids(&[obj("a", [0.0, 0.0, 0.0]), obj("b", [2.0, 0.0, 0.0])]).unwrap();
        assert_eq!((two.raw_count, two.len()), (4, 3));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(extract_centroids(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn minimal_scene_parses() {
        let text = r#"{"format":1,"workspace":{"min":[0,0,0],"max":[1,1,1]},
                       "obstacles":[],"objects":[],"classes":[]}"#;
        let s = SceneGraph::from_json(text).unwrap();
        assert!(s.objects.is_empty() && s.obstacles.is_empty());
    }

    #[test]
    fn duplicate_id_is_named() {
        let text = r#"{"format":1,"workspace":{"min":[0,0,0],"max":[5,5,3]},"obstacles":[],
          "objects":[
            {"id":"m1","class":"monitor","centroid":[1,1,1],"face_normal":[0,-1,0],"extent":[0.5,0.1,0.3],"weight":1},
            {"id":"m1","class":"monitor","centroid":[2,1,1],"face_normal":[0,-1,0],"extent":[0.5,0.1,0.3],"weight":1}],
          "classes":["monitor"]}"#;
        let err = SceneGraph::from_json(text).unwrap_err();
        assert!(err.to_string().contains("m1"), "{err}");
    }

    #[test]
    fn bad_version_and_class_rejected() {
        let text = r#"{"format":2,"workspace":{"min":[0,0,0],"max":[1,1,1]},
                       "obstacles":[],"objects":[],"classes":[]}"#;
        assert!(matches!(SceneGraph::from_json(text), Err(Error::Format(_))));
        let text = r#"{"format":1,"workspace":{"min":[0,0,0],"max":[5,5,3]},"obstacles":[],
          "objects":[{"id":"m1","class":"chair","centroid":[1,1,1],"face_normal":[0,-1,0],"extent":[0.5,0.1,0.3],"weight":1}],
          "classes":["monitor"]}"#;
        assert!(SceneGraph::from_json(text)
            .unwrap_err()
            .to_string()
            .contains("class"));
    }

    #[test]
    fn face_normals_are_normalized() {
        let text = r#"{"format":1,"workspace":{"min":[0,0,0],"max":[5,5,3]},"obstacles":[],
          "objects":[{"id":"m1","class":"monitor","centroid":[1,1,1],"face_normal":[0,-2,0],"extent":[0.5,0.1,0.3],"weight":1}],
          "classes":["monitor"]}"#;
        let s = SceneGraph::from_json(text).unwrap();
        assert_eq!(s.objects[0].face_normal, Vector3::new(0.0, -1.0, 0.0));
    }

    #[test]
    fn save_load_roundtrip() {
        let scene = SceneGraph::new(
            workspace(),
            vec![Obstacle::Box {
                min: Vector3::new(1.0, 1.0, 0.0),
                max: Vector3::new(2.0, 2.5, 0.75),
            }],
            vec![obj("a", [0.1, 0.2, 1.0]), obj("b", [2.0, -1.0, 1.1])],
            vec!["monitor".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        save_scene(&scene, &path).unwrap();
        assert_eq!(load_scene(&path).unwrap(), scene);
    }

    fn arb_objects() -> impl Strategy<Value = Vec<[f64; 3]>> {
        prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 1..6)
    }

    proptest! {
        #[test]
        fn centroids_permutation_invariant(pts in arb_objects(), rot in 0usize..6) {
            let objs: Vec<ObjectNode> = pts.iter().enumerate().map(|(i, p)| obj(&format!("o{i}"), *p)).collect();
            let mut shuffled = objs.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = extract_centroids(&objs).unwrap();
            let b = extract_centroids(&shuffled).unwrap();
            prop_assert_eq!(a.raw_count, b.raw_count);
            let n = pts.len();
            prop_assert_eq!(a.raw_count, n + n * (n - 1) / 2 + 1);
            for p in a.points() {
                prop_assert!(b.points().any(|q| (p - q).norm() < 1e-9));
            }
            for q in b.points() {
                prop_assert!(a.points().any(|p| (p - q).norm() < 1e-9));
            }
        }

        #[test]
        fn centroids_inside_bounding_box(pts in arb_objects()) {
            // every aim point is a convex combination, so it lies in the bounding box
            let objs: Vec<ObjectNode> = pts.iter().enumerate().map(|(i, p)| obj(&format!("o{i}"), *p)).collect();
            let set = extract_centroids(&objs).unwrap();
            for p in set.points() {
                for k in 0..3 {
                    let lo = pts.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min);
                    let hi = pts.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(p[k] >= lo - 1e-12 && p[k] <= hi + 1e-12);
                }
            }
            for (i, (_, p)) in set.entries.iter().enumerate() {
                for (_, q) in &set.entries[i + 1..] {
                    prop_assert!((p - q).norm() >= CENTROID_MERGE_TOL);
                }
            }
        }
    }
}
