//! Evaluation and training reports.

use std::fmt::Write as _;

use oa_som::dataset::LabeledSample;
use oa_som::{Label, Result, SomModel, TrainingTrace};

/// One classified sample, in the shape of the doctor-vs-system results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub source: String,
    pub truth: Label,
    pub predicted: Label,
    /// Smallest D(j) over clusters labelled Normal, if any.
    pub distance_normal: Option<f64>,
    /// Smallest D(j) over clusters labelled Sick, if any.
    pub distance_sick: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    /// `confusion[truth][predicted]`, Normal = 0, Sick = 1.
    pub confusion: [[usize; 2]; 2],
    pub accuracy: f64,
    pub sse: f64,
    pub avg: f64,
}

impl EvaluationReport {
    pub fn evaluate(model: &SomModel, samples: &[LabeledSample]) -> Result<Self> {
        let labels = model.label_map().ok_or(oa_som::Error::UntrainedModel)?;
        let mut rows = Vec::with_capacity(samples.len());
        let mut confusion = [[0usize; 2]; 2];
        for s in samples {
            let d = model.distances(&s.features)?;
            let predicted = model.classify(&s.features)?;
            let nearest = |class: Label| {
                d.iter()
                    .zip(labels)
                    .filter(|(_, &l)| l == class)
                    .map(|(&v, _)| v)
                    .reduce(f64::min)
            };
            confusion[s.label as usize][predicted as usize] += 1;
            rows.push(ReportRow {
                source: s.source().to_string(),
                truth: s.label,
                predicted,
                distance_normal: nearest(Label::Normal),
                distance_sick: nearest(Label::Sick),
            });
        }
        let features: Vec<_> = samples.iter().map(|s| s.features.clone()).collect();
        let correct = confusion[0][0] + confusion[1][1];
        Ok(Self {
            accuracy: correct as f64 / rows.len().max(1) as f64,
            sse: model.sse(&features)?,
            avg: model.avg_quantization_error(&features)?,
            rows,
            confusion,
        })
    }

    pub fn correct(&self) -> usize {
        self.confusion[0][0] + self.confusion[1][1]
    }

    pub fn total(&self) -> usize {
        self.rows.len()
    }

    pub fn render_text(&self, title: &str) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.source.len())
            .max()
            .unwrap_or(0)
            .max("Source".len());
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<5} {:<width$}  {:<8} {:<8}",
            "No.", "Source", "Doctor", "Predicted"
        );
        for (i, r) in self.rows.iter().enumerate() {
            let no = format!("{}.", i + 1);
            let _ = writeln!(
                out,
                "{:<5} {:<width$}  {:<8} {:<8}",
                no,
                r.source,
                r.truth.as_str(),
                r.predicted.as_str()
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Confusion (rows: doctor, columns: predicted)");
        let _ = writeln!(out, "{:<8} {:>8} {:>8}", "", "Normal", "Sick");
        for truth in Label::ALL {
            let c = self.confusion[truth as usize];
            let _ = writeln!(out, "{:<8} {:>8} {:>8}", truth.as_str(), c[0], c[1]);
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Accuracy: {:.2}% ({}/{})",
            100.0 * self.accuracy,
            self.correct(),
            self.total()
        );
        let _ = writeln!(out, "SSE: {:.6}", self.sse);
        let _ = writeln!(out, "AVG quantization error: {:.6}", self.avg);
        out
    }

    /// `source,true,predicted,distance_normal,distance_sick` rows.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("source,true,predicted,distance_normal,distance_sick\n");
        let dist = |d: Option<f64>| d.map(|v| format!("{v:.16e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&r.source),
                r.truth,
                r.predicted,
                dist(r.distance_normal),
                dist(r.distance_sick)
            );
        }
        out
    }

    /// Aggregate metrics at full precision.
    pub fn render_summary_csv(&self) -> String {
        format!(
            "metric,value\naccuracy,{:.16e}\ncorrect,{}\ntotal,{}\nsse,{:.16e}\navg,{:.16e}\n",
            self.accuracy,
            self.correct(),
            self.total(),
            self.sse,
            self.avg
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Plain-text summary of a training run.
pub fn render_training(model: &SomModel, trace: &TrainingTrace, fit: &EvaluationReport) -> String {
    const SHOWN: usize = 5;
    let c = model.config();
    let mut out = String::new();
    let _ = writeln!(out, "SOM training");
    let _ = writeln!(
        out,
        "clusters {}  dims {}  epochs {}  alpha0 {}  seed {}",
        c.clusters, c.dims, c.epochs, c.alpha0, c.seed
    );
    let _ = writeln!(
        out,
        "epochs run: {}{}",
        model.trained_epochs(),
        if trace.stopped_early {
            " (stopped: no weight moved by more than 1e-12)"
        } else {
            ""
        }
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>6} {:>24} {:>18}", "epoch", "alpha", "SSE");
    let n = trace.sse.len();
    for t in 0..n {
        if t == SHOWN && n > 2 * SHOWN {
            let _ = writeln!(out, "{:>6}", "...");
        }
        if t >= SHOWN && t < n.saturating_sub(SHOWN) {
            continue;
        }
        let _ = writeln!(
            out,
            "{:>6} {:>24e} {:>18.9}",
            t + 1,
            trace.alphas[t],
            trace.sse[t]
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "final AVG quantization error: {:.9}", trace.final_avg);
    if let Some(map) = model.label_map() {
        let names: Vec<_> = map
            .iter()
            .enumerate()
            .map(|(j, l)| format!("{j}={l}"))
            .collect();
        let _ = writeln!(out, "cluster labels: {}", names.join(" "));
    }
    let _ = writeln!(out);
    out.push_str(&fit.render_text("Training-set classification"));
    out
}
