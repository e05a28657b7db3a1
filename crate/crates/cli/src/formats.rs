//! Plain-text file formats.
//!
//! * Images: PGM `P2` (values divided by maxval on load) or CSV grids.
//!   A single-row CSV is a vector; several rows form a 2-D grid.
//! * Attributions: `index,value` CSV plus an 8-bit `P2` heatmap in which
//!   128 is zero attribution.
//! * Mask bundles: one header line, then `alpha,v0,v1,...` per mask.
//! * Datasets: a shape comment, a header, then `label,v0,v1,...` per sample.

use std::fmt::Write as _;
use std::path::Path;

use geex_core::models::{Dataset, LabeledGrid};
use geex_core::{AlphaMode, Grid, Kernel, MaskSet, SearchDistribution};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("'{}' is not a number", tok.trim())))?;
    if !v.is_finite() {
        return Err(CliError::parse(
            path,
            line,
            format!("non-finite value '{}'", tok.trim()),
        ));
    }
    Ok(v)
}

fn parse_usize(path: &Path, line: usize, tok: &str) -> Result<usize> {
    tok.trim().parse().map_err(|_| {
        CliError::parse(
            path,
            line,
            format!("'{}' is not a non-negative integer", tok.trim()),
        )
    })
}

/// Meaningful lines with their 1-based numbers; blanks and `#` comments
/// are skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn read_image(path: &Path) -> Result<Grid> {
    let text = read_text(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => parse_pgm(path, &text),
        Some("csv") => parse_csv_grid(path, &text),
        _ => Err(CliError::Usage(format!(
            "{}: unsupported input format (expected .pgm or .csv)",
            path.display()
        ))),
    }
}

pub fn parse_pgm(path: &Path, text: &str) -> Result<Grid> {
    let mut tokens = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or_default();
        tokens.extend(body.split_whitespace().map(|t| (idx + 1, t)));
    }
    let mut it = tokens.into_iter();
    let last_line = text.lines().count().max(1);
    let mut next = |what: &str| {
        it.next().ok_or_else(|| {
            CliError::parse(
                path,
                last_line,
                format!("unexpected end of file, expected {what}"),
            )
        })
    };
    let (line, magic) = next("magic number")?;
    if magic != "P2" {
        return Err(CliError::parse(
            path,
            line,
            format!("expected 'P2', found '{magic}'"),
        ));
    }
    let (line, w) = next("width")?;
    let width = parse_usize(path, line, w)?;
    let (line, h) = next("height")?;
    let height = parse_usize(path, line, h)?;
    let (line, m) = next("maxval")?;
    let maxval = parse_usize(path, line, m)?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65_535 {
        return Err(CliError::parse(
            path,
            line,
            "width, height and maxval must be positive",
        ));
    }
    let mut data = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let (line, tok) = next("pixel value")?;
        let v = parse_usize(path, line, tok)?;
        if v > maxval {
            return Err(CliError::parse(
                path,
                line,
                format!("pixel {v} exceeds maxval {maxval}"),
            ));
        }
        data.push(v as f64 / maxval as f64);
    }
    if let Ok((line, tok)) = next("") {
        return Err(CliError::parse(
            path,
            line,
            format!("trailing data '{tok}'"),
        ));
    }
    Ok(Grid::new(vec![height, width], data)?)
}

pub fn parse_csv_grid(path: &Path, text: &str) -> Result<Grid> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, l) in content_lines(text) {
        let row = l
            .split(',')
            .map(|t| parse_f64(path, line, t))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("row has {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, 1, "no values"));
    }
    let shape = if rows.len() == 1 {
        vec![rows[0].len()]
    } else {
        vec![rows.len(), rows[0].len()]
    };
    Ok(Grid::new(shape, rows.concat())?)
}

/// CSV grid text: one row per line for 2-D grids, one line for vectors.
pub fn grid_to_csv(g: &Grid) -> String {
    let cols = *g.shape().last().expect("grids have a shape");
    let mut out = String::new();
    for row in g.data().chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn attribution_to_csv(xi: &Grid) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in xi.data().iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt_f64(*v));
    }
    out
}

/// Reads `index,value` rows into a grid of `shape`.
pub fn parse_attribution_csv(path: &Path, text: &str, shape: &[usize]) -> Result<Grid> {
    let n: usize = shape.iter().product();
    let mut values = vec![None; n];
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "index,value")) => {}
        Some((line, other)) => {
            return Err(CliError::parse(
                path,
                line,
                format!("expected header 'index,value', found '{other}'"),
            ))
        }
        None => return Err(CliError::parse(path, 1, "empty attribution file")),
    }
    for (line, l) in lines {
        let (i, v) = l
            .split_once(',')
            .ok_or_else(|| CliError::parse(path, line, "expected 'index,value'"))?;
        let i = parse_usize(path, line, i)?;
        let v = parse_f64(path, line, v)?;
        let slot = values.get_mut(i).ok_or_else(|| {
            CliError::Shape(format!(
                "{}:{line}: index {i} outside {n} features",
                path.display()
            ))
        })?;
        if slot.replace(v).is_some() {
            return Err(CliError::parse(path, line, format!("duplicate index {i}")));
        }
    }
    let data = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| {
                CliError::Shape(format!("{}: missing index {i} of {n}", path.display()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Grid::new(shape.to_vec(), data)?)
}

/// 8-bit heatmap, symmetric around zero: `128 + round(127 * v / max|v|)`.
pub fn attribution_pixels(xi: &Grid) -> Vec<u8> {
    let m = xi.max_abs();
    xi.data()
        .iter()
        .map(|&v| {
            if m == 0.0 {
                128
            } else {
                (128.0 + (127.0 * v / m).round()) as u8
            }
        })
        .collect()
}

pub fn attribution_to_pgm(xi: &Grid) -> String {
    let (h, w) = match xi.shape() {
        [h, w] => (*h, *w),
        _ => (1, xi.len()),
    };
    let px = attribution_pixels(xi);
    let mut out = format!("P2\n{w} {h}\n255\n");
    for row in px.chunks(w) {
        let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

const MASK_MAGIC: &str = "geex-masks 1";

pub fn mask_set_to_text(set: &MaskSet) -> String {
    let shape: Vec<String> = set.shape().iter().map(|d| d.to_string()).collect();
    let smoothing = match set.smoothing() {
        Some(k) => format!("{}:{}", k.size(), fmt_f64(k.sigma())),
        None => "none".to_string(),
    };
    let mut out = format!(
        "{MASK_MAGIC} n_star={} sigma={} shape={} seed={} mirrored={} smoothing={} alpha={}\n",
        set.len(),
        fmt_f64(set.sigma()),
        shape.join("x"),
        set.seed(),
        set.mirrored(),
        smoothing,
        set.alpha_mode(),
    );
    for (mask, alpha) in set.masks().iter().zip(set.alphas()) {
        out.push_str(&fmt_f64(*alpha));
        for v in mask.data() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_shape(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split('x')
        .map(|d| d.parse::<usize>().map_err(|_| format!("bad shape '{s}'")))
        .collect()
}

pub fn parse_kernel(s: &str) -> std::result::Result<(usize, f64), String> {
    let (size, sigma) = s
        .split_once(':')
        .ok_or_else(|| format!("expected SIZE:SIGMA, got '{s}'"))?;
    let size = size
        .parse()
        .map_err(|_| format!("bad kernel size '{size}'"))?;
    let sigma = sigma
        .parse()
        .map_err(|_| format!("bad kernel sigma '{sigma}'"))?;
    Ok((size, sigma))
}

pub fn parse_mask_set(path: &Path, text: &str) -> Result<MaskSet> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| CliError::parse(path, 1, "empty mask bundle"))?;
    let fields = header
        .strip_prefix(MASK_MAGIC)
        .ok_or_else(|| CliError::parse(path, hline, format!("expected '{MASK_MAGIC}' header")))?;
    let mut get = std::collections::BTreeMap::new();
    for kv in fields.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::parse(path, hline, format!("bad header field '{kv}'")))?;
        get.insert(k, v);
    }
    let field = |k: &str| {
        get.get(k)
            .copied()
            .ok_or_else(|| CliError::parse(path, hline, format!("missing header field '{k}'")))
    };
    let bad = |m: String| CliError::parse(path, hline, m);
    let n_star = parse_usize(path, hline, field("n_star")?)?;
    let sigma = parse_f64(path, hline, field("sigma")?)?;
    let shape = parse_shape(field("shape")?).map_err(bad)?;
    let seed: u64 = field("seed")?
        .parse()
        .map_err(|_| CliError::parse(path, hline, "bad seed"))?;
    let mirrored: bool = field("mirrored")?
        .parse()
        .map_err(|_| CliError::parse(path, hline, "mirrored must be true or false"))?;
    let smoothing = match field("smoothing")? {
        "none" => None,
        spec => {
            let (size, s) = parse_kernel(spec).map_err(bad)?;
            Some(Kernel::gaussian(size, s)?)
        }
    };
    let alpha_mode: AlphaMode = field("alpha")?.parse().map_err(bad)?;

    let dist = SearchDistribution::new(sigma, &shape)?;
    let len: usize = shape.iter().product();
    let mut masks = Vec::with_capacity(n_star);
    let mut alphas = Vec::with_capacity(n_star);
    for (line, l) in lines {
        let vals = l
            .split(',')
            .map(|t| parse_f64(path, line, t))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != len + 1 {
            return Err(CliError::parse(
                path,
                line,
                format!("expected alpha plus {len} values, found {}", vals.len()),
            ));
        }
        alphas.push(vals[0]);
        masks.push(Grid::new(shape.clone(), vals[1..].to_vec())?);
    }
    if masks.len() != n_star {
        return Err(CliError::parse(
            path,
            text.lines().count(),
            format!("header declares {n_star} masks, found {}", masks.len()),
        ));
    }
    MaskSet::from_masks(dist, masks, alphas, seed, mirrored, smoothing, alpha_mode)
        .map_err(|e| CliError::parse(path, hline, e.to_string()))
}

pub fn dataset_to_csv(d: &Dataset) -> String {
    let shape = d.input_shape().unwrap_or(&[]);
    let dims: Vec<String> = shape.iter().map(|s| s.to_string()).collect();
    let len: usize = shape.iter().product();
    let mut out = format!("# shape={} classes={}\n", dims.join("x"), d.num_classes);
    for (c, rel) in d.relevant.iter().enumerate() {
        let idx: Vec<String> = rel.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "# relevant{c}={}", idx.join(" "));
    }
    out.push_str("label");
    for i in 0..len {
        let _ = write!(out, ",v{i}");
    }
    out.push('\n');
    for s in &d.samples {
        out.push_str(&s.label.to_string());
        for v in s.input.data() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_dataset_csv(path: &Path, text: &str) -> Result<Dataset> {
    let mut shape = None;
    let mut num_classes = None;
    let mut relevant: Vec<Vec<usize>> = Vec::new();
    for (idx, l) in text.lines().enumerate() {
        let Some(meta) = l.trim().strip_prefix('#') else {
            continue;
        };
        for kv in meta.split_whitespace() {
            match kv.split_once('=') {
                Some(("shape", v)) => {
                    shape = Some(parse_shape(v).map_err(|m| CliError::parse(path, idx + 1, m))?)
                }
                Some(("classes", v)) => num_classes = Some(parse_usize(path, idx + 1, v)?),
                Some((k, v)) if k.starts_with("relevant") => {
                    let mut list = vec![parse_usize(path, idx + 1, v)?];
                    list.extend(
                        meta.split_whitespace()
                            .skip_while(|t| !t.starts_with(k))
                            .skip(1)
                            .map(|t| parse_usize(path, idx + 1, t))
                            .collect::<Result<Vec<_>>>()?,
                    );
                    relevant.push(list);
                    break;
                }
                _ => {}
            }
        }
    }
    let shape = shape.ok_or_else(|| CliError::parse(path, 1, "missing '# shape=' line"))?;
    let num_classes =
        num_classes.ok_or_else(|| CliError::parse(path, 1, "missing 'classes=' field"))?;
    let len: usize = shape.iter().product();
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, h)) if h.starts_with("label") => {}
        Some((line, _)) => return Err(CliError::parse(path, line, "expected 'label,...' header")),
        None => return Err(CliError::parse(path, 1, "no samples")),
    }
    let mut samples = Vec::new();
    for (line, l) in lines {
        let mut parts = l.split(',');
        let label = parse_usize(path, line, parts.next().unwrap_or_default())?;
        if label >= num_classes {
            return Err(CliError::parse(
                path,
                line,
                format!("label {label} out of range"),
            ));
        }
        let vals = parts
            .map(|t| parse_f64(path, line, t))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != len {
            return Err(CliError::parse(
                path,
                line,
                format!("expected {len} values, found {}", vals.len()),
            ));
        }
        samples.push(LabeledGrid {
            input: Grid::new(shape.clone(), vals)?,
            label,
        });
    }
    if samples.is_empty() {
        return Err(CliError::parse(path, 1, "no samples"));
    }
    Ok(Dataset {
        samples,
        num_classes,
        relevant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use geex_core::generate_mask_set;
    use geex_core::models::{gen_synthetic_dataset, DatasetKind};

    fn p() -> &'static Path {
        Path::new("t")
    }

    #[test]
    fn pgm_scales_by_maxval_and_skips_comments() {
        let g = parse_pgm(p(), "P2\n# c\n2 1 # trailing\n4\n0 4\n").unwrap();
        assert_eq!(g.shape(), &[1, 2]);
        assert_eq!(g.data(), &[0.0, 1.0]);
    }

    #[test]
    fn pgm_diagnostics_name_the_line() {
        let e = parse_pgm(p(), "P2\n2 2\n255\n1 2\n3 x\n").unwrap_err();
        assert_eq!(e.to_string(), "t:5: 'x' is not a non-negative integer");
        let e = parse_pgm(p(), "P2\n2 2\n255\n1 2\n3\n").unwrap_err();
        assert!(e.to_string().contains("unexpected end of file"), "{e}");
        assert!(matches!(
            parse_pgm(p(), "P5\n"),
            Err(CliError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn csv_grid_shapes() {
        assert_eq!(parse_csv_grid(p(), "3\n").unwrap().shape(), &[1]);
        assert_eq!(parse_csv_grid(p(), "1,2\n3,4\n").unwrap().shape(), &[2, 2]);
        let e = parse_csv_grid(p(), "1,2\n3\n").unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 2, .. }));
        let g = Grid::new(vec![2, 3], vec![0.1, -2.0, 3.5, 1e-300, 0.0, 7.0]).unwrap();
        assert_eq!(parse_csv_grid(p(), &grid_to_csv(&g)).unwrap(), g);
    }

    #[test]
    fn heatmap_is_symmetric_around_128() {
        let g = Grid::from_vec(vec![-2.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(attribution_pixels(&g), vec![1, 128, 192, 255]);
        assert_eq!(
            attribution_pixels(&Grid::zeros(&[3]).unwrap()),
            vec![128; 3]
        );
    }

    #[test]
    fn attribution_csv_round_trips() {
        let g = Grid::new(vec![2, 2], vec![0.25, -1.0, 3e-17, 0.0]).unwrap();
        let text = attribution_to_csv(&g);
        assert_eq!(parse_attribution_csv(p(), &text, &[2, 2]).unwrap(), g);
        assert!(matches!(
            parse_attribution_csv(p(), &text, &[3]),
            Err(CliError::Shape(_))
        ));
    }

    #[test]
    fn mask_bundle_round_trips() {
        let dist = SearchDistribution::new(0.5, &[3, 3]).unwrap();
        let k = Kernel::gaussian(3, 0.7).unwrap();
        let set = generate_mask_set(&dist, 6, 2, true, Some(k), AlphaMode::Stratified).unwrap();
        let back = parse_mask_set(p(), &mask_set_to_text(&set)).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn mask_bundle_rejects_truncation() {
        let dist = SearchDistribution::new(1.0, &[2]).unwrap();
        let set = generate_mask_set(&dist, 4, 0, false, None, AlphaMode::IidUniform).unwrap();
        let text = mask_set_to_text(&set);
        let cut: Vec<&str> = text.lines().take(3).collect();
        assert!(matches!(
            parse_mask_set(p(), &cut.join("\n")),
            Err(CliError::Parse { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn attribution_csv_is_exact(v in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let g = Grid::from_vec(v).unwrap();
            let back = parse_attribution_csv(p(), &attribution_to_csv(&g), g.shape()).unwrap();
            proptest::prop_assert_eq!(back, g);
        }

        #[test]
        fn heatmap_never_inverts_ranking(v in proptest::collection::vec(-5.0f64..5.0, 1..40)) {
            let px = attribution_pixels(&Grid::from_vec(v.clone()).unwrap());
            for i in 0..v.len() {
                for j in 0..v.len() {
                    if v[i] < v[j] {
                        proptest::prop_assert!(px[i] <= px[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn dataset_round_trips() {
        let d = gen_synthetic_dataset(DatasetKind::TwoBlob8x8, 6, 0.1, 3).unwrap();
        assert_eq!(parse_dataset_csv(p(), &dataset_to_csv(&d)).unwrap(), d);
    }
}
