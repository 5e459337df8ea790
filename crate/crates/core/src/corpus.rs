//! Expert colormap corpus: document format, validation, and resampling to
//! nine control points.
//!
//! A corpus document looks like
//!
//! ```json
//! {"name": "starter",
//!  "colormaps": [{"id": "viridis", "source": "matplotlib",
//!                 "colors": ["#440154", [50.0, -20.0, 10.0], "..."]}]}
//! ```
//!
//! Each `colors` entry is either a hex string or an `[L, a, b]` triple. Any
//! number (≥ 2) of colors is accepted; entries are resampled to nine points
//! equidistant in ΔE2000 and stored light-to-dark.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::colorspace::{delta_e_2000, LabColor};
use crate::error::{Error, Result};

pub const CONTROL_POINTS: usize = 9;

const STARTER_CORPUS: &str = include_str!("../data/starter_corpus.json");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpertColormap {
    pub id: String,
    pub source: String,
    /// Nine control points, strictly decreasing in L*.
    pub control_points: [LabColor; CONTROL_POINTS],
}

#[derive(Clone, Debug, Serialize)]
pub struct Corpus {
    pub name: String,
    pub colormaps: Vec<ExpertColormap>,
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum ColorEntry {
    Hex(String),
    Lab([f64; 3]),
}

#[derive(Deserialize, Serialize)]
struct ColormapEntry {
    id: String,
    #[serde(default)]
    source: String,
    colors: Vec<ColorEntry>,
}

#[derive(Deserialize, Serialize)]
struct CorpusDocument {
    #[serde(default)]
    name: String,
    colormaps: Vec<ColormapEntry>,
}

impl Corpus {
    /// The corpus bundled with the crate.
    pub fn starter() -> Corpus {
        Corpus::from_json(STARTER_CORPUS).expect("bundled corpus is valid")
    }

    pub fn from_json(text: &str) -> Result<Corpus> {
        if text.trim().is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let doc: CorpusDocument = serde_json::from_str(text).map_err(Error::CorpusParse)?;
        if doc.colormaps.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = HashSet::new();
        let mut colormaps = Vec::with_capacity(doc.colormaps.len());
        for entry in doc.colormaps {
            if !seen.insert(entry.id.clone()) {
                return Err(Error::DuplicateId(entry.id));
            }
            colormaps.push(validate_entry(entry)?);
        }
        Ok(Corpus { name: doc.name, colormaps })
    }

    /// Builds a corpus from already-validated colormaps.
    pub fn from_colormaps(name: impl Into<String>, colormaps: Vec<ExpertColormap>) -> Result<Corpus> {
        if colormaps.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = HashSet::new();
        for cm in &colormaps {
            if !seen.insert(cm.id.as_str()) {
                return Err(Error::DuplicateId(cm.id.clone()));
            }
        }
        Ok(Corpus { name: name.into(), colormaps })
    }

    pub fn len(&self) -> usize {
        self.colormaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colormaps.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ExpertColormap> {
        self.colormaps.iter().find(|c| c.id == id)
    }

    /// Serializes as a corpus document with Lab triples.
    pub fn to_json(&self) -> String {
        let doc = CorpusDocument {
            name: self.name.clone(),
            colormaps: self
                .colormaps
                .iter()
                .map(|c| ColormapEntry {
                    id: c.id.clone(),
                    source: c.source.clone(),
                    colors: c.control_points.iter().map(|p| ColorEntry::Lab(p.to_array())).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("corpus serializes")
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let text = std::fs::read_to_string(path)?;
    Corpus::from_json(&text)
}

fn validate_entry(entry: ColormapEntry) -> Result<ExpertColormap> {
    let invalid = |reason: String| Error::InvalidColormap { id: entry.id.clone(), reason };
    let mut colors = Vec::with_capacity(entry.colors.len());
    for c in &entry.colors {
        let lab = match c {
            ColorEntry::Hex(s) => LabColor::from_hex(s).map_err(|e| invalid(e.to_string()))?,
            ColorEntry::Lab(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("non-finite Lab value".into()));
                }
                LabColor::from(*v)
            }
        };
        colors.push(lab);
    }
    if colors.len() < 2 {
        return Err(invalid(format!("needs at least 2 colors, has {}", colors.len())));
    }
    let mut points = if colors.len() == CONTROL_POINTS {
        colors.clone().try_into().expect("length checked")
    } else {
        resample_to_nine(&colors).map_err(|e| invalid(e.to_string()))?
    };
    if points[0].l < points[CONTROL_POINTS - 1].l {
        points.reverse();
    }
    if let Some(i) = points.windows(2).position(|w| w[1].l >= w[0].l) {
        return Err(invalid(format!(
            "lightness not strictly monotone at control point {} ({:.3} -> {:.3})",
            i + 1,
            points[i].l,
            points[i + 1].l
        )));
    }
    Ok(ExpertColormap { id: entry.id, source: entry.source, control_points: points })
}

pub fn resample_to_nine(colors: &[LabColor]) -> Result<[LabColor; CONTROL_POINTS]> {
    let v = resample_equidistant(colors, CONTROL_POINTS)?;
    Ok(v.try_into().expect("length is CONTROL_POINTS"))
}

/// Resamples a polyline to `n` points equidistant in cumulative ΔE2000
/// (segment lengths are the ΔE2000 between consecutive vertices). Endpoints
/// are preserved exactly.
pub fn resample_equidistant(colors: &[LabColor], n: usize) -> Result<Vec<LabColor>> {
    if colors.len() < 2 {
        return Err(Error::TooFewColors { needed: 2, got: colors.len() });
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("cannot resample to {n} points")));
    }
    let mut cumulative = Vec::with_capacity(colors.len());
    cumulative.push(0.0);
    for w in colors.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + delta_e_2000(w[0], w[1]));
    }
    let total = *cumulative.last().unwrap();
    if total <= 0.0 {
        return Err(Error::ZeroLengthCurve);
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        if k == 0 {
            out.push(colors[0]);
            continue;
        }
        if k == n - 1 {
            out.push(*colors.last().unwrap());
            continue;
        }
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 1 < cumulative.len() - 1 && cumulative[seg + 1] < target {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let t = if len > 0.0 { ((target - cumulative[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(colors[seg].lerp(&colors[seg + 1], t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starter_corpus_is_valid_and_large_enough() {
        let corpus = Corpus::starter();
        assert!(corpus.len() >= 50, "only {} colormaps", corpus.len());
        for cm in &corpus.colormaps {
            for w in cm.control_points.windows(2) {
                assert!(w[1].l < w[0].l, "{} not light-to-dark", cm.id);
            }
        }
    }

    #[test]
    fn empty_documents_are_rejected() {
        assert!(matches!(Corpus::from_json(""), Err(Error::EmptyCorpus)));
        assert!(matches!(Corpus::from_json("  \n"), Err(Error::EmptyCorpus)));
        assert!(matches!(Corpus::from_json(r#"{"name":"x","colormaps":[]}"#), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        assert!(matches!(Corpus::from_json("{nope"), Err(Error::CorpusParse(_))));
    }

    #[test]
    fn invalid_entry_names_its_id() {
        let doc = r##"{"name":"t","colormaps":[
            {"id":"ok","source":"","colors":["#FFFFFF","#000000"]},
            {"id":"lonely","source":"","colors":["#123456"]}]}"##;
        let err = Corpus::from_json(doc).unwrap_err();
        assert!(err.to_string().contains("lonely"), "{err}");

        let doc = r##"{"name":"t","colormaps":[
            {"id":"zigzag","source":"","colors":[[90,0,0],[30,0,0],[60,0,0],[10,0,0]]}]}"##;
        let err = Corpus::from_json(doc).unwrap_err();
        assert!(err.to_string().contains("zigzag"), "{err}");
    }

    #[test]
    fn eight_point_entry_is_resampled() {
        let colors: Vec<String> = (0..8)
            .map(|i| {
                let v = 255 - i * 30;
                format!("\"#{v:02X}{v:02X}{v:02X}\"")
            })
            .collect();
        let doc = format!(r#"{{"name":"t","colormaps":[{{"id":"eight","source":"","colors":[{}]}}]}}"#, colors.join(","));
        let corpus = Corpus::from_json(&doc).unwrap();
        assert_eq!(corpus.colormaps[0].control_points.len(), 9);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let doc = r##"{"name":"t","colormaps":[
            {"id":"a","colors":["#FFFFFF","#000000"]},
            {"id":"a","colors":["#FFFFFF","#000000"]}]}"##;
        assert!(matches!(Corpus::from_json(doc), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn dark_to_light_entries_are_flipped() {
        let doc = r##"{"name":"t","colormaps":[{"id":"up","colors":["#000000","#FFFFFF"]}]}"##;
        let corpus = Corpus::from_json(doc).unwrap();
        let cp = &corpus.colormaps[0].control_points;
        assert!((cp[0].l - 100.0).abs() < 1e-6);
        assert!(cp[8].l.abs() < 1e-6);
    }

    #[test]
    fn two_color_line_gives_evenly_spaced_points() {
        let a = LabColor::new(90.0, -10.0, 20.0);
        let b = LabColor::new(20.0, 30.0, -40.0);
        let pts = resample_to_nine(&[a, b]).unwrap();
        for (k, p) in pts.iter().enumerate() {
            let expected = a.lerp(&b, k as f64 / 8.0);
            assert!(p.distance(&expected) < 1e-9);
        }
    }

    #[test]
    fn too_few_colors_is_an_error() {
        assert!(resample_to_nine(&[LabColor::WHITE]).is_err());
        assert!(resample_to_nine(&[]).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let corpus = Corpus::starter();
        let again = Corpus::from_json(&corpus.to_json()).unwrap();
        assert_eq!(again.len(), corpus.len());
        for (x, y) in corpus.colormaps.iter().zip(&again.colormaps) {
            for (p, q) in x.control_points.iter().zip(&y.control_points) {
                assert!(p.distance(q) < 1e-6);
            }
        }
    }
}
