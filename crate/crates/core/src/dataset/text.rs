//! Line-oriented text formats for feature sets, scaler state and models.
//!
//! Lines starting with `#` are header lines of `key=value` pairs; records use
//! `;` between fields and `,` between values. Reals are written with 17
//! significant digits so they read back bit-for-bit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, NormalizationParams};
use crate::som::{Label, SomConfig, SomModel, GENERATOR_NAME};

use super::LabeledSample;

const FEATURES_MAGIC: &str = "# oa-som features v1";
const PARAMS_MAGIC: &str = "# oa-som minmax v1";
const MODEL_MAGIC: &str = "# oa-som model v1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn reals(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v:.16e}").expect("writing to a String cannot fail");
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Line cursor that tracks 1-based line numbers for error messages.
struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        Self {
            path: path.to_path_buf(),
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        self.inner.next().map(|(i, l)| {
            self.last = i + 1;
            (i + 1, l)
        })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::parse(&self.path, line, message)
    }

    fn expect_magic(&mut self, magic: &str) -> Result<()> {
        match self.next_line() {
            Some((_, l)) if l == magic => Ok(()),
            Some((n, l)) => Err(self.err(n, format!("expected {magic:?}, found {l:?}"))),
            None => Err(self.err(1, format!("missing {magic:?} header"))),
        }
    }

    fn header(&mut self) -> Result<(usize, HashMap<String, String>)> {
        let (n, line) = self
            .next_line()
            .ok_or_else(|| self.err(self.last + 1, "missing header line"))?;
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| self.err(n, "expected '#' header line"))?;
        let mut map = HashMap::new();
        for pair in body.split_whitespace() {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| self.err(n, format!("malformed header field {pair:?}")))?;
            map.insert(k.to_string(), v.to_string());
        }
        Ok((n, map))
    }
}

fn header_field<T: std::str::FromStr>(
    lines: &Lines<'_>,
    line: usize,
    map: &HashMap<String, String>,
    key: &str,
) -> Result<T> {
    let raw = map
        .get(key)
        .ok_or_else(|| lines.err(line, format!("header lacks {key}")))?;
    raw.parse()
        .map_err(|_| lines.err(line, format!("bad value for {key}: {raw:?}")))
}

fn parse_reals(lines: &Lines<'_>, line: usize, field: &str) -> Result<Vec<f64>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| lines.err(line, format!("bad number {v:?}")))
        })
        .collect()
}

fn parse_label(lines: &Lines<'_>, line: usize, raw: &str) -> Result<Label> {
    raw.parse().map_err(|e: String| lines.err(line, e))
}

/// Contents of a feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub bins: usize,
    pub dims: usize,
    pub samples: Vec<LabeledSample>,
}

/// Writes `label;source;v1,...,vk`, one sample per line, after a two-line header.
pub fn write_features(
    path: impl AsRef<Path>,
    bins: usize,
    samples: &[LabeledSample],
) -> Result<()> {
    let dims = bins + 2;
    let mut out = format!("{FEATURES_MAGIC}\n# k={dims} bins={bins}\n");
    for s in samples {
        if s.features.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: s.features.len(),
            });
        }
        if s.source().contains(['\n', '\r']) {
            return Err(Error::InvalidConfig(format!(
                "source id {:?} contains a line break",
                s.source()
            )));
        }
        writeln!(
            out,
            "{};{};{}",
            s.label,
            s.source(),
            reals(&s.features.values)
        )
        .expect("writing to a String cannot fail");
    }
    write_file(path.as_ref(), &out)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Lines::new(path, &text);
    lines.expect_magic(FEATURES_MAGIC)?;
    let (hline, header) = lines.header()?;
    let dims: usize = header_field(&lines, hline, &header, "k")?;
    let bins: usize = header_field(&lines, hline, &header, "bins")?;
    if dims != bins + 2 {
        return Err(lines.err(
            hline,
            format!("k={dims} does not equal bins+2 for bins={bins}"),
        ));
    }
    let mut samples = Vec::new();
    while let Some((n, line)) = lines.next_line() {
        if line.is_empty() {
            continue;
        }
        let (label, rest) = line
            .split_once(';')
            .ok_or_else(|| lines.err(n, "expected label;source;values"))?;
        let (source, values) = rest
            .rsplit_once(';')
            .ok_or_else(|| lines.err(n, "expected label;source;values"))?;
        let label = parse_label(&lines, n, label)?;
        let values = parse_reals(&lines, n, values)?;
        if values.len() != dims {
            return Err(lines.err(n, format!("expected {dims} values, found {}", values.len())));
        }
        samples.push(LabeledSample::new(
            FeatureVector::new(values, source),
            label,
        ));
    }
    Ok(FeatureFile {
        bins,
        dims,
        samples,
    })
}

pub fn write_params(path: impl AsRef<Path>, params: &NormalizationParams) -> Result<()> {
    let out = format!(
        "{PARAMS_MAGIC}\n# dims={} upper={} lower={}\nmin;{}\nmax;{}\n",
        params.dims(),
        real(params.upper),
        real(params.lower),
        reals(&params.mins),
        reals(&params.maxs),
    );
    write_file(path.as_ref(), &out)
}

pub fn read_params(path: impl AsRef<Path>) -> Result<NormalizationParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Lines::new(path, &text);
    lines.expect_magic(PARAMS_MAGIC)?;
    let (hline, header) = lines.header()?;
    let dims: usize = header_field(&lines, hline, &header, "dims")?;
    let upper: f64 = header_field(&lines, hline, &header, "upper")?;
    let lower: f64 = header_field(&lines, hline, &header, "lower")?;
    let mut row = |key: &str| -> Result<Vec<f64>> {
        let (n, line) = lines
            .next_line()
            .ok_or_else(|| lines.err(lines.last + 1, format!("missing {key} line")))?;
        let values = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(';'))
            .ok_or_else(|| lines.err(n, format!("expected {key};values")))?;
        let values = parse_reals(&lines, n, values)?;
        if values.len() != dims {
            return Err(lines.err(n, format!("expected {dims} values, found {}", values.len())));
        }
        Ok(values)
    };
    let mins = row("min")?;
    let maxs = row("max")?;
    NormalizationParams::new(mins, maxs, upper, lower)
}

/// Writes the model header, one `weights;j;...` line per row and, when the
/// model has been labelled, one `label;j;Label` line per cluster.
pub fn write_model(path: impl AsRef<Path>, model: &SomModel) -> Result<()> {
    let c = model.config();
    let mut out = format!(
        "{MODEL_MAGIC}\n# clusters={} dims={} epochs={} alpha0={} seed={} generator={} trained_epochs={}\n",
        c.clusters,
        c.dims,
        c.epochs,
        real(c.alpha0),
        c.seed,
        GENERATOR_NAME,
        model.trained_epochs()
    );
    for (j, row) in model.rows().enumerate() {
        writeln!(out, "weights;{j};{}", reals(row)).expect("writing to a String cannot fail");
    }
    if let Some(map) = model.label_map() {
        for (j, label) in map.iter().enumerate() {
            writeln!(out, "label;{j};{label}").expect("writing to a String cannot fail");
        }
    }
    write_file(path.as_ref(), &out)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<SomModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Lines::new(path, &text);
    lines.expect_magic(MODEL_MAGIC)?;
    let (hline, header) = lines.header()?;
    let clusters: usize = header_field(&lines, hline, &header, "clusters")?;
    let dims: usize = header_field(&lines, hline, &header, "dims")?;
    let generator: String = header_field(&lines, hline, &header, "generator")?;
    if generator != GENERATOR_NAME {
        return Err(lines.err(hline, format!("unsupported generator {generator:?}")));
    }
    let config = SomConfig {
        clusters,
        dims,
        epochs: header_field(&lines, hline, &header, "epochs")?,
        alpha0: header_field(&lines, hline, &header, "alpha0")?,
        seed: header_field(&lines, hline, &header, "seed")?,
    };
    config
        .validate()
        .map_err(|e| lines.err(hline, e.to_string()))?;
    let trained_epochs: usize = header_field(&lines, hline, &header, "trained_epochs")?;

    let mut weights: Vec<Option<Vec<f64>>> = vec![None; clusters];
    let mut labels: Vec<Option<Label>> = vec![None; clusters];
    while let Some((n, line)) = lines.next_line() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, ';');
        let (kind, index, body) = match (fields.next(), fields.next(), fields.next()) {
            (Some(k), Some(i), Some(b)) => (k, i, b),
            _ => return Err(lines.err(n, "expected kind;index;body")),
        };
        let j: usize = index
            .parse()
            .map_err(|_| lines.err(n, format!("bad cluster index {index:?}")))?;
        if j >= clusters {
            return Err(lines.err(
                n,
                format!("cluster {j} out of range for {clusters} clusters"),
            ));
        }
        match kind {
            "weights" => {
                let row = parse_reals(&lines, n, body)?;
                if row.len() != dims {
                    return Err(
                        lines.err(n, format!("expected {dims} weights, found {}", row.len()))
                    );
                }
                if weights[j].replace(row).is_some() {
                    return Err(lines.err(n, format!("duplicate weights for cluster {j}")));
                }
            }
            "label" => {
                if labels[j].replace(parse_label(&lines, n, body)?).is_some() {
                    return Err(lines.err(n, format!("duplicate label for cluster {j}")));
                }
            }
            other => return Err(lines.err(n, format!("unknown record {other:?}"))),
        }
    }
    let end = lines.last;
    let weights = weights
        .into_iter()
        .enumerate()
        .map(|(j, w)| w.ok_or_else(|| lines.err(end, format!("missing weights for cluster {j}"))))
        .collect::<Result<Vec<_>>>()?;
    let label_map = if labels.iter().all(Option::is_none) {
        None
    } else {
        Some(
            labels
                .into_iter()
                .enumerate()
                .map(|(j, l)| {
                    l.ok_or_else(|| lines.err(end, format!("missing label for cluster {j}")))
                })
                .collect::<Result<Vec<_>>>()?,
        )
    };
    SomModel::from_parts(config, weights, label_map, trained_epochs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::som::train;
    use proptest::prelude::*;

    fn sample(values: Vec<f64>, label: Label, source: &str) -> LabeledSample {
        LabeledSample::new(FeatureVector::new(values, source), label)
    }

    #[test]
    fn empty_feature_set_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        write_features(&path, 4, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# oa-som features v1\n# k=6 bins=4\n");
        let read = read_features(&path).unwrap();
        assert_eq!((read.bins, read.dims), (4, 6));
        assert!(read.samples.is_empty());
    }

    #[test]
    fn feature_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        let samples = vec![
            sample(vec![0.1, 0.2, 0.3], Label::Normal, "normal/a.png"),
            sample(vec![0.4, 0.5, 0.6], Label::Sick, "sick/b;odd.png"),
        ];
        write_features(&path, 1, &samples).unwrap();
        assert_eq!(read_features(&path).unwrap().samples, samples);

        let text = std::fs::read_to_string(&path).unwrap();
        let truncated = &text[..text.rfind(',').unwrap()];
        std::fs::write(&path, truncated).unwrap();
        let err = read_features(&path).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");

        let bad_label = text.replace("Sick;", "Broken;");
        std::fs::write(&path, bad_label).unwrap();
        assert!(read_features(&path)
            .unwrap_err()
            .to_string()
            .contains("line 4"));

        let bad_k = text.replace("k=3", "k=5");
        std::fs::write(&path, bad_k).unwrap();
        assert!(read_features(&path)
            .unwrap_err()
            .to_string()
            .contains("line 2"));

        assert!(matches!(
            write_features(&path, 2, &samples),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn params_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        let p = NormalizationParams::new(vec![0.1, -3.0], vec![0.7, 1.0 / 3.0], 1.0, 0.0).unwrap();
        write_params(&path, &p).unwrap();
        assert_eq!(read_params(&path).unwrap(), p);
    }

    #[test]
    fn model_round_trip_and_shape_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let xs: Vec<_> = (0..6)
            .map(|i| FeatureVector::new(vec![i as f64 / 7.0, 1.0 - i as f64 / 9.0, 0.3], "p"))
            .collect();
        let (mut model, _) = train(&xs, SomConfig::new(3).with_seed(4)).unwrap();

        write_model(&path, &model).unwrap();
        let unlabeled = read_model(&path).unwrap();
        assert_eq!(unlabeled, model);
        assert_eq!(
            unlabeled.classify(&xs[0]).unwrap_err().to_string(),
            "untrained model"
        );

        let labels = [
            Label::Normal,
            Label::Normal,
            Label::Normal,
            Label::Sick,
            Label::Sick,
            Label::Sick,
        ];
        model.assign_labels(&xs, &labels).unwrap();
        write_model(&path, &model).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back, model);

        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("dims=3", "dims=4")).unwrap();
        assert!(read_model(&path)
            .unwrap_err()
            .to_string()
            .contains("line 3"));
        std::fs::write(&path, text.replace("model v1", "model v9")).unwrap();
        assert!(read_model(&path).is_err());
        std::fs::write(&path, text.replace("clusters=2", "clusters=3")).unwrap();
        assert!(read_model(&path)
            .unwrap_err()
            .to_string()
            .contains("missing weights"));
        let one_label: String = text
            .lines()
            .filter(|l| !l.starts_with("label;1"))
            .map(|l| format!("{l}\n"))
            .collect();
        std::fs::write(&path, one_label).unwrap();
        assert!(read_model(&path)
            .unwrap_err()
            .to_string()
            .contains("missing label"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn features_round_trip_bitwise(
            rows in proptest::collection::vec(proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 5), 0..8)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("f.txt");
            let samples: Vec<_> = rows
                .into_iter()
                .enumerate()
                .map(|(i, r)| sample(r, Label::ALL[i % 2], &format!("s/{i}.png")))
                .collect();
            write_features(&path, 3, &samples).unwrap();
            let back = read_features(&path).unwrap().samples;
            prop_assert_eq!(back.len(), samples.len());
            for (a, b) in back.iter().zip(&samples) {
                let bits = |s: &LabeledSample| s.features.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
                prop_assert_eq!(bits(a), bits(b));
                prop_assert_eq!(a.label, b.label);
                prop_assert_eq!(a.source(), b.source());
            }
        }
    }
}
