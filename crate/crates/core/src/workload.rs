//! Per-layer architecture profiles and the cut-layer dependent workloads derived
//! from them.
//!
//! Profiles keep the tabulated values verbatim: parameter and activation
//! columns are counted in millions of elements, the compute column in millions
//! of forward FLOPs per sample. Conversion to bytes and training FLOPs happens
//! only when a [`CutWorkload`] is derived, through `bytes_per_element` and the
//! backward multiplier `bwd_multiplier` (training compute per layer is
//! `(1 + bwd_multiplier)` times the forward compute).
//!
//! The columnar text format looks like:
//!
//! ```text
//! name = vgg19
//! bytes_per_element = 4
//! bwd_multiplier = 2
//! #layer   params   fwd_flops  activation
//! CONV1    0.0017   1.796      0.0655
//! SoftMax  \        \          \
//! ```
//!
//! A `\` (or `-`) marks a column that does not apply; it is only accepted on
//! the final layer and is read as zero. A JSON document with the same fields is
//! accepted as well.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EsflError, Result};

/// Tabulated columns are expressed in units of 10^6.
pub const TABLE_SCALE: f64 = 1e6;

pub const DEFAULT_BYTES_PER_ELEMENT: f64 = 4.0;
pub const DEFAULT_BWD_MULTIPLIER: f64 = 2.0;

const VGG13_PROFILE: &str = include_str!("../data/vgg13.profile");
const VGG16_PROFILE: &str = include_str!("../data/vgg16.profile");
const VGG19_PROFILE: &str = include_str!("../data/vgg19.profile");

/// Names accepted by [`builtin_architecture`].
pub const BUILTIN_ARCHITECTURES: [&str; 3] = ["vgg13", "vgg16", "vgg19"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    /// 1-based position in execution order.
    pub index: usize,
    pub name: String,
    pub param_count: f64,
    pub fwd_flops: f64,
    pub activation_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArchitecture {
    pub name: String,
    pub layers: Vec<LayerProfile>,
    pub bytes_per_element: f64,
    pub bwd_multiplier: f64,
}

/// Workload seen by a user whose model is cut after layer `cut`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutWorkload {
    pub cut: usize,
    /// Training FLOPs per sample executed on the user side.
    pub user_compute: f64,
    /// Bytes per sample of cut-layer activation (uploaded) and activation
    /// gradient (downloaded).
    pub act_bytes: f64,
    /// Size in bytes of the user-side model.
    pub model_bytes: f64,
    /// Memory in bytes needed to train the user-side model on one mini-batch.
    pub mem_bytes: f64,
}

impl ModelArchitecture {
    /// Builds an architecture from already-indexed layers, checking every
    /// structural invariant.
    pub fn new(
        name: impl Into<String>,
        layers: Vec<LayerProfile>,
        bytes_per_element: f64,
        bwd_multiplier: f64,
    ) -> Result<Self> {
        let arch = ModelArchitecture {
            name: name.into(),
            layers,
            bytes_per_element,
            bwd_multiplier,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(EsflError::Validation(format!(
                "architecture '{}' has no layers",
                self.name
            )));
        }
        if self.layers.len() < 2 {
            return Err(EsflError::Validation(format!(
                "architecture '{}' has a single layer; at least two are needed for a cut",
                self.name
            )));
        }
        if !(self.bytes_per_element.is_finite() && self.bytes_per_element > 0.0) {
            return Err(EsflError::Validation(format!(
                "bytes_per_element must be positive, got {}",
                self.bytes_per_element
            )));
        }
        if !(self.bwd_multiplier.is_finite() && self.bwd_multiplier >= 0.0) {
            return Err(EsflError::Validation(format!(
                "bwd_multiplier must be non-negative, got {}",
                self.bwd_multiplier
            )));
        }
        let mut prev = 0;
        for layer in &self.layers {
            if layer.index <= prev {
                return Err(EsflError::Validation(format!(
                    "layer indices must be strictly increasing (layer '{}' has index {})",
                    layer.name, layer.index
                )));
            }
            prev = layer.index;
            for (what, v) in [
                ("param_count", layer.param_count),
                ("fwd_flops", layer.fwd_flops),
                ("activation_count", layer.activation_count),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(EsflError::Validation(format!(
                        "layer '{}' has invalid {what} {v}",
                        layer.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of layers `L`; valid cuts are `1..=L`.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Training FLOPs per sample for the whole network (`D`).
    pub fn total_compute(&self) -> f64 {
        self.prefix_compute(self.layers.len())
    }

    /// Rounded to whole FLOPs so that prefixes and their differences are
    /// exact integers in `f64` and user and server shares add up to `D`
    /// without rounding.
    fn prefix_compute(&self, cut: usize) -> f64 {
        let fwd: f64 = self.layers[..cut].iter().map(|l| l.fwd_flops).sum();
        (fwd * (1.0 + self.bwd_multiplier) * TABLE_SCALE).round()
    }

    /// Server-side training FLOPs per sample when cutting after layer `cut`.
    pub fn server_compute_share(&self, cut: usize) -> Result<f64> {
        let cw = self.cut_workload(cut, 0)?;
        Ok(self.total_compute() - cw.user_compute)
    }

    /// Derives the workload of cutting after layer `cut` (1-based).
    ///
    /// `batch` is the mini-batch size used for the memory estimate; passing 0
    /// reduces `mem_bytes` to the user-side parameter bytes.
    pub fn cut_workload(&self, cut: usize, batch: usize) -> Result<CutWorkload> {
        let num_layers = self.layers.len();
        if cut == 0 || cut > num_layers {
            return Err(EsflError::Domain(format!(
                "cut layer {cut} outside 1..={num_layers} for '{}'",
                self.name
            )));
        }
        let scale = self.bytes_per_element * TABLE_SCALE;
        let user_side = &self.layers[..cut];
        let params: f64 = user_side.iter().map(|l| l.param_count).sum();
        let acts: f64 = user_side.iter().map(|l| l.activation_count).sum();
        let model_bytes = params * scale;
        Ok(CutWorkload {
            cut,
            user_compute: self.prefix_compute(cut),
            act_bytes: self.layers[cut - 1].activation_count * scale,
            model_bytes,
            mem_bytes: model_bytes + batch as f64 * acts * scale,
        })
    }

    /// Workloads for every cut `1..=L`, in order.
    pub fn cut_table(&self, batch: usize) -> Vec<CutWorkload> {
        (1..=self.layers.len())
            .map(|cut| {
                self.cut_workload(cut, batch)
                    .expect("cut index is in range by construction")
            })
            .collect()
    }

    /// Serializes to the columnar text format. Values are written with the
    /// shortest representation that parses back to the same `f64`.
    pub fn to_profile_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "bytes_per_element = {}", self.bytes_per_element);
        let _ = writeln!(out, "bwd_multiplier = {}", self.bwd_multiplier);
        let _ = writeln!(out, "#layer params fwd_flops activation");
        for layer in &self.layers {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                layer.name, layer.param_count, layer.fwd_flops, layer.activation_count
            );
        }
        out
    }
}

/// Parses a profile document, either columnar text or JSON.
pub fn parse_architecture(source: &str) -> Result<ModelArchitecture> {
    if source.trim_start().starts_with('{') {
        parse_json_profile(source)
    } else {
        parse_text_profile(source)
    }
}

/// Reads and parses a profile document from disk.
pub fn load_architecture(path: impl AsRef<Path>) -> Result<ModelArchitecture> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| EsflError::io(path.display().to_string(), e))?;
    parse_architecture(&text)
}

/// One of the shipped profiles (`vgg13`, `vgg16`, `vgg19`). Only the VGG19
/// profile carries published per-layer values; the other two are
/// reconstructions and say so in their header comments.
pub fn builtin_architecture(name: &str) -> Option<ModelArchitecture> {
    let text = match name.to_ascii_lowercase().as_str() {
        "vgg13" => VGG13_PROFILE,
        "vgg16" => VGG16_PROFILE,
        "vgg19" => VGG19_PROFILE,
        _ => return None,
    };
    Some(parse_text_profile(text).expect("shipped profiles are valid"))
}

/// Resolves a builtin name first, then falls back to a file path.
pub fn resolve_architecture(name_or_path: &str) -> Result<ModelArchitecture> {
    match builtin_architecture(name_or_path) {
        Some(arch) => Ok(arch),
        None => load_architecture(name_or_path),
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> EsflError {
    EsflError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_text_profile(source: &str) -> Result<ModelArchitecture> {
    let mut name = String::from("unnamed");
    let mut bytes_per_element = DEFAULT_BYTES_PER_ELEMENT;
    let mut bwd_multiplier = DEFAULT_BWD_MULTIPLIER;
    let mut layers = Vec::new();
    // source line of each row that used a missing-value marker
    let mut missing_rows: Vec<(usize, usize)> = Vec::new();

    for (i, raw) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            if !layers.is_empty() {
                return Err(parse_error(lineno, "header directive after layer rows"));
            }
            let value = value.trim();
            match key.trim() {
                "name" => name = value.to_string(),
                "bytes_per_element" => bytes_per_element = parse_number(value, lineno)?,
                "bwd_multiplier" => bwd_multiplier = parse_number(value, lineno)?,
                other => return Err(parse_error(lineno, format!("unknown directive '{other}'"))),
            }
            continue;
        }

        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(parse_error(
                lineno,
                format!(
                    "expected 4 columns (name params fwd_flops activation), found {}",
                    tokens.len()
                ),
            ));
        }
        let mut values = [0.0; 3];
        let mut missing = false;
        for (slot, token) in values.iter_mut().zip(&tokens[1..]) {
            match parse_cell(token, lineno)? {
                Some(v) => *slot = v,
                None => missing = true,
            }
        }
        if missing {
            missing_rows.push((layers.len(), lineno));
        }
        layers.push(LayerProfile {
            index: layers.len() + 1,
            name: tokens[0].to_string(),
            param_count: values[0],
            fwd_flops: values[1],
            activation_count: values[2],
        });
    }

    if let Some(&(_, lineno)) = missing_rows.iter().find(|(row, _)| row + 1 != layers.len()) {
        return Err(parse_error(
            lineno,
            "missing values are only allowed on the final layer",
        ));
    }

    ModelArchitecture::new(name, layers, bytes_per_element, bwd_multiplier)
}

fn parse_number(token: &str, lineno: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_error(lineno, format!("'{token}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(lineno, format!("'{token}' is not finite")));
    }
    if v < 0.0 {
        return Err(parse_error(lineno, format!("negative value {token}")));
    }
    Ok(v)
}

fn parse_cell(token: &str, lineno: usize) -> Result<Option<f64>> {
    match token {
        "\\" | "-" => Ok(None),
        _ => parse_number(token, lineno).map(Some),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonProfile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    bytes_per_element: Option<f64>,
    #[serde(default)]
    bwd_multiplier: Option<f64>,
    layers: Vec<JsonLayer>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonLayer {
    name: String,
    param_count: Option<f64>,
    fwd_flops: Option<f64>,
    activation_count: Option<f64>,
}

fn parse_json_profile(source: &str) -> Result<ModelArchitecture> {
    let doc: JsonProfile = serde_json::from_str(source).map_err(|e| parse_error(e.line(), e.to_string()))?;
    let count = doc.layers.len();
    let mut layers = Vec::with_capacity(count);
    for (i, layer) in doc.layers.into_iter().enumerate() {
        let cells = [layer.param_count, layer.fwd_flops, layer.activation_count];
        if cells.iter().any(Option::is_none) && i + 1 != count {
            return Err(EsflError::Validation(format!(
                "layer '{}': missing values are only allowed on the final layer",
                layer.name
            )));
        }
        if let Some(v) = cells.iter().flatten().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(EsflError::Validation(format!(
                "layer '{}' has invalid value {v}",
                layer.name
            )));
        }
        layers.push(LayerProfile {
            index: i + 1,
            name: layer.name,
            param_count: cells[0].unwrap_or(0.0),
            fwd_flops: cells[1].unwrap_or(0.0),
            activation_count: cells[2].unwrap_or(0.0),
        });
    }
    ModelArchitecture::new(
        doc.name.unwrap_or_else(|| "unnamed".into()),
        layers,
        doc.bytes_per_element.unwrap_or(DEFAULT_BYTES_PER_ELEMENT),
        doc.bwd_multiplier.unwrap_or(DEFAULT_BWD_MULTIPLIER),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(fwd: &[f64], kappa: f64) -> ModelArchitecture {
        let layers = fwd
            .iter()
            .enumerate()
            .map(|(i, &f)| LayerProfile {
                index: i + 1,
                name: format!("L{}", i + 1),
                param_count: 1.0,
                fwd_flops: f,
                activation_count: 0.5,
            })
            .collect();
        ModelArchitecture::new("toy", layers, 4.0, kappa).unwrap()
    }

    #[test]
    fn vgg19_has_twenty_layers_and_table_values() {
        let arch = builtin_architecture("vgg19").unwrap();
        assert_eq!(arch.num_layers(), 20);
        let conv1 = &arch.layers[0];
        assert_eq!(conv1.name, "CONV1");
        assert_eq!(conv1.param_count, 0.0017);
        assert_eq!(conv1.fwd_flops, 1.796);
        assert_eq!(conv1.activation_count, 0.0655);
        let convs = arch.layers.iter().filter(|l| l.name.starts_with("CONV")).count();
        let fcs = arch.layers.iter().filter(|l| l.name.starts_with("FC")).count();
        assert_eq!((convs, fcs), (16, 3));
        let last = arch.layers.last().unwrap();
        assert_eq!(last.name, "SoftMax");
        assert_eq!(
            (last.param_count, last.fwd_flops, last.activation_count),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn reconstructed_profiles_load() {
        assert_eq!(builtin_architecture("vgg16").unwrap().num_layers(), 17);
        assert_eq!(builtin_architecture("VGG13").unwrap().num_layers(), 14);
        assert!(builtin_architecture("resnet").is_none());
    }

    #[test]
    fn prefix_sum_at_cut_two() {
        let mut arch = builtin_architecture("vgg19").unwrap();
        arch.bwd_multiplier = 0.0;
        let cw = arch.cut_workload(2, 0).unwrap();
        let expected = (1.796 + 37.749) * 1e6;
        assert!((cw.user_compute - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn cut_one_without_backward_is_single_row() {
        let mut arch = builtin_architecture("vgg19").unwrap();
        arch.bwd_multiplier = 0.0;
        let cw = arch.cut_workload(1, 32).unwrap();
        assert_eq!(cw.user_compute, 1.796e6);
        assert_eq!(cw.act_bytes, 0.0655 * 4.0 * 1e6);
        assert_eq!(cw.model_bytes, 0.0017 * 4.0 * 1e6);
        assert_eq!(cw.mem_bytes, cw.model_bytes + 32.0 * 0.0655 * 4.0 * 1e6);
    }

    #[test]
    fn full_cut_leaves_no_server_work() {
        let arch = builtin_architecture("vgg19").unwrap();
        let l = arch.num_layers();
        assert_eq!(arch.cut_workload(l, 0).unwrap().user_compute, arch.total_compute());
        assert_eq!(arch.server_compute_share(l).unwrap(), 0.0);
    }

    #[test]
    fn total_compute_of_vgg19_is_three_times_forward_sum() {
        let arch = builtin_architecture("vgg19").unwrap();
        let fwd: f64 = [
            1.796, 37.749, 18.874, 37.749, 18.874, 37.749, 37.749, 37.749, 18.874, 37.749, 37.749, 37.749, 9.437,
            9.437, 9.437, 9.437, 2.097, 0.524, 0.131,
        ]
        .iter()
        .sum();
        let d = arch.total_compute();
        assert!((d - 3.0 * fwd * 1e6).abs() <= 1e-12 * d);
    }

    #[test]
    fn two_layer_toy_total() {
        let arch = toy(&[10.0, 20.0], 1.0);
        assert_eq!(arch.total_compute(), 60e6);
    }

    #[test]
    fn out_of_range_cut_is_domain_error() {
        let arch = toy(&[1.0, 2.0, 3.0], 2.0);
        assert!(matches!(arch.cut_workload(0, 0), Err(EsflError::Domain(_))));
        assert!(matches!(arch.cut_workload(4, 0), Err(EsflError::Domain(_))));
    }

    #[test]
    fn single_layer_document_rejected() {
        let err = parse_architecture("name = one\nA 1 2 3\n").unwrap_err();
        assert!(matches!(err, EsflError::Validation(_)), "{err}");
    }

    #[test]
    fn empty_document_rejected() {
        let err = parse_architecture("# nothing here\n").unwrap_err();
        assert!(matches!(err, EsflError::Validation(_)));
    }

    #[test]
    fn malformed_row_names_line() {
        let err = parse_architecture("A 1 2 3\nB 1 x 3\nC 1 2 3\n").unwrap_err();
        match err {
            EsflError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
        let err = parse_architecture("A 1 2 3\nB 1 2\n").unwrap_err();
        assert!(matches!(err, EsflError::Parse { line: 2, .. }));
    }

    #[test]
    fn negative_value_rejected() {
        let err = parse_architecture("A 1 2 3\nB 1 -2 3\n").unwrap_err();
        assert!(matches!(err, EsflError::Parse { line: 2, .. }));
    }

    #[test]
    fn missing_marker_only_on_final_layer() {
        assert!(parse_architecture("A 1 2 3\nB 1 2 \\\n").is_ok());
        let err = parse_architecture("A 1 2 \\\nB 1 2 3\n").unwrap_err();
        assert!(matches!(err, EsflError::Parse { line: 1, .. }));
    }

    #[test]
    fn json_profile_matches_text() {
        let json = r#"{"name":"t","layers":[
            {"name":"A","param_count":1.5,"fwd_flops":2.0,"activation_count":0.25},
            {"name":"B","param_count":0.5,"fwd_flops":1.0,"activation_count":null}]}"#;
        let a = parse_architecture(json).unwrap();
        let b = parse_architecture("name = t\nA 1.5 2 0.25\nB 0.5 1 \\\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn text_round_trip_is_exact() {
        for name in BUILTIN_ARCHITECTURES {
            let arch = builtin_architecture(name).unwrap();
            let again = parse_architecture(&arch.to_profile_string()).unwrap();
            assert_eq!(arch, again);
        }
    }
}
