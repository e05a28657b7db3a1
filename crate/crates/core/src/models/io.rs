//! Versioned plain-text model files.
//!
//! ```text
//! geex-model 1
//! input_shape 8 8
//! num_classes 2
//! capability white_box
//! input_range 0.0 1.0
//! layers 2
//! layer 0 16 64 relu
//! weights <16*64 values, row-major>
//! bias <16 values>
//! layer 1 2 16 sigmoid
//! weights ...
//! bias ...
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Values are written
//! in shortest round-trip form, so a saved model answers every query with
//! bit-identical scores after reloading.

use std::fmt::Write as _;
use std::path::Path;

use super::{
    Activation, BlackBox, Capability, DenseLayer, DenseNet, ModelError, QueryModel, Result,
};
use crate::grid::Grid;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "geex-model";

/// A parsed model file: the network plus the access level it is served at.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub net: DenseNet,
    pub capability: Capability,
}

impl ModelFile {
    pub fn into_query_model(self) -> Box<dyn QueryModel> {
        match self.capability {
            Capability::WhiteBox => Box::new(self.net),
            Capability::BlackBox => Box::new(BlackBox::new(self.net)),
        }
    }
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

pub fn model_to_text(net: &DenseNet, capability: Capability) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
    let shape: Vec<String> = net.input_shape().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "input_shape {}", shape.join(" "));
    let _ = writeln!(out, "num_classes {}", net.num_classes());
    let _ = writeln!(out, "capability {capability}");
    let (lo, hi) = net.input_range();
    let _ = writeln!(out, "input_range {lo:?} {hi:?}");
    let _ = writeln!(out, "layers {}", net.layers().len());
    for (i, layer) in net.layers().iter().enumerate() {
        let _ = writeln!(
            out,
            "layer {i} {} {} {}",
            layer.rows(),
            layer.cols(),
            layer.activation()
        );
        let _ = writeln!(out, "weights {}", join(layer.weights().data()));
        let _ = writeln!(out, "bias {}", join(layer.bias().data()));
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next meaningful line as `(line number, keyword, rest)`.
    fn next_record(&mut self, expected: &str) -> Result<(usize, Vec<&'a str>)> {
        for (idx, line) in self.inner.by_ref() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.last = idx + 1;
            let mut tokens = line.split_whitespace();
            let key = tokens.next().unwrap_or_default();
            if key != expected {
                return Err(parse_err(
                    idx + 1,
                    format!("expected '{expected}' record, found '{key}'"),
                ));
            }
            return Ok((idx + 1, tokens.collect()));
        }
        Err(parse_err(
            self.last + 1,
            format!("unexpected end of file, expected '{expected}' record"),
        ))
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_usize(line: usize, field: &str, tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| {
        parse_err(
            line,
            format!("{field}: '{tok}' is not a non-negative integer"),
        )
    })
}

fn parse_f64s(line: usize, field: &str, toks: &[&str]) -> Result<Vec<f64>> {
    toks.iter()
        .enumerate()
        .map(|(i, t)| {
            t.parse::<f64>()
                .map_err(|_| parse_err(line, format!("{field}[{i}]: '{t}' is not a number")))
        })
        .collect()
}

fn expect_len(line: usize, field: &str, toks: &[&str], n: usize) -> Result<()> {
    if toks.len() != n {
        return Err(parse_err(
            line,
            format!("{field}: expected {n} values, found {}", toks.len()),
        ));
    }
    Ok(())
}

pub fn model_from_text(text: &str) -> Result<ModelFile> {
    let mut lines = Lines::new(text);

    let (ln, header) = lines.next_record(MAGIC)?;
    expect_len(ln, "format_version", &header, 1)?;
    let found: u32 = header[0].parse().map_err(|_| {
        parse_err(
            ln,
            format!("format_version: '{}' is not a version", header[0]),
        )
    })?;
    if found != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found,
            expected: FORMAT_VERSION,
        });
    }

    let (ln, toks) = lines.next_record("input_shape")?;
    if toks.is_empty() {
        return Err(parse_err(ln, "input_shape: no dimensions"));
    }
    let input_shape = toks
        .iter()
        .map(|t| parse_usize(ln, "input_shape", t))
        .collect::<Result<Vec<_>>>()?;

    let (ln, toks) = lines.next_record("num_classes")?;
    expect_len(ln, "num_classes", &toks, 1)?;
    let num_classes = parse_usize(ln, "num_classes", toks[0])?;

    let (ln, toks) = lines.next_record("capability")?;
    expect_len(ln, "capability", &toks, 1)?;
    let capability = match toks[0] {
        "white_box" => Capability::WhiteBox,
        "black_box" => Capability::BlackBox,
        other => {
            return Err(parse_err(
                ln,
                format!("capability: unknown value '{other}'"),
            ))
        }
    };

    let (ln, toks) = lines.next_record("input_range")?;
    expect_len(ln, "input_range", &toks, 2)?;
    let range = parse_f64s(ln, "input_range", &toks)?;
    if range.iter().any(|v| v.is_nan()) || range[0] > range[1] {
        return Err(parse_err(ln, "input_range: expected lo <= hi"));
    }

    let (ln, toks) = lines.next_record("layers")?;
    expect_len(ln, "layers", &toks, 1)?;
    let count = parse_usize(ln, "layers", toks[0])?;

    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let (ln, toks) = lines.next_record("layer")?;
        expect_len(ln, "layer", &toks, 4)?;
        let index = parse_usize(ln, "layer.index", toks[0])?;
        if index != i {
            return Err(parse_err(
                ln,
                format!("layer index {index} out of order, expected {i}"),
            ));
        }
        let rows = parse_usize(ln, "layer.rows", toks[1])?;
        let cols = parse_usize(ln, "layer.cols", toks[2])?;
        if rows == 0 || cols == 0 {
            return Err(ModelError::BadLayer {
                layer: i,
                message: format!("degenerate {rows}x{cols} weights"),
            });
        }
        let activation: Activation = toks[3]
            .parse()
            .map_err(|e: String| parse_err(ln, format!("layer.activation: {e}")))?;

        let (ln, toks) = lines.next_record("weights")?;
        expect_len(ln, &format!("layer {i} weights"), &toks, rows * cols)?;
        let w = parse_f64s(ln, "weights", &toks)?;
        let w =
            Grid::new(vec![rows, cols], w).map_err(|e| parse_err(ln, format!("weights: {e}")))?;

        let (ln, toks) = lines.next_record("bias")?;
        expect_len(ln, &format!("layer {i} bias"), &toks, rows)?;
        let b = parse_f64s(ln, "bias", &toks)?;
        let b = Grid::new(vec![rows], b).map_err(|e| parse_err(ln, format!("bias: {e}")))?;

        layers.push(DenseLayer::new(w, b, activation)?);
    }

    let net = DenseNet::new(&input_shape, layers)?.with_input_range(range[0], range[1]);
    if net.num_classes() != num_classes {
        return Err(ModelError::BadLayer {
            layer: count - 1,
            message: format!(
                "produces {} outputs but header declares {num_classes} classes",
                net.num_classes()
            ),
        });
    }
    Ok(ModelFile { net, capability })
}

pub fn save_model(net: &DenseNet, capability: Capability, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_text(net, capability))
        .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    model_from_text(&text)
}
