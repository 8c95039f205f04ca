use std::path::Path;

use oa_som::dataset::{generate_synthetic, ingest, DatasetManifest, SyntheticSpec};
use oa_som::{Error, Label, PipelineSettings};

fn write_corpus(root: &Path, spec: &SyntheticSpec) -> DatasetManifest {
    let manifest = DatasetManifest::new(root.join("normal"), root.join("sick"));
    std::fs::create_dir_all(&manifest.normal_dir).unwrap();
    std::fs::create_dir_all(&manifest.sick_dir).unwrap();
    for (i, (img, label)) in generate_synthetic(spec).iter().enumerate() {
        img.save_png(manifest.dir(*label).join(format!("img_{i:03}.png")))
            .unwrap();
    }
    manifest
}

#[test]
fn full_corpus_keeps_label_counts() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path(), &SyntheticSpec::default());
    let report = ingest(&manifest, &PipelineSettings::default()).unwrap();
    assert_eq!(report.samples.len(), 42);
    assert_eq!(report.count(Label::Normal), 12);
    assert_eq!(report.count(Label::Sick), 30);
    assert!(report.skipped.is_empty());
    assert!(report.samples.iter().all(|s| s.features.len() == 34));
    // normal folder first, each folder in path order
    assert_eq!(report.samples[0].source(), "normal/img_000.png");
    assert_eq!(report.samples[12].source(), "sick/img_012.png");
    let sources: Vec<_> = report.samples[12..].iter().map(|s| s.source()).collect();
    let mut sorted = sources.clone();
    sorted.sort();
    assert_eq!(sources, sorted);
}

#[test]
fn corrupt_file_is_skipped_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        count_normal: 2,
        count_sick: 3,
        ..SyntheticSpec::default()
    };
    let manifest = write_corpus(dir.path(), &spec);
    let victim = manifest.sick_dir.join("img_003.png");
    let bytes = std::fs::read(&victim).unwrap();
    std::fs::write(&victim, &bytes[..bytes.len() / 3]).unwrap();
    std::fs::write(manifest.sick_dir.join("notes.txt"), "not an image").unwrap();

    let report = ingest(&manifest, &PipelineSettings::default()).unwrap();
    assert_eq!(report.samples.len(), 4);
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].path, victim);
}

#[test]
fn bmp_input_matches_png() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        count_normal: 1,
        count_sick: 0,
        ..SyntheticSpec::default()
    };
    let manifest = write_corpus(dir.path(), &spec);
    let png = manifest.normal_dir.join("img_000.png");
    let img = image::open(&png).unwrap();
    img.save(manifest.normal_dir.join("img_000.bmp")).unwrap();
    let report = ingest(&manifest, &PipelineSettings::default()).unwrap();
    assert_eq!(report.samples.len(), 2);
    assert_eq!(
        report.samples[0].features.values,
        report.samples[1].features.values
    );
}

#[test]
fn empty_and_missing_directories() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = DatasetManifest::new(dir.path().join("normal"), dir.path().join("sick"));
    let err = ingest(&manifest, &PipelineSettings::default()).unwrap_err();
    assert!(matches!(err, Error::MissingDirectory(ref p) if p.ends_with("normal")));

    std::fs::create_dir_all(&manifest.normal_dir).unwrap();
    std::fs::create_dir_all(&manifest.sick_dir).unwrap();
    let err = ingest(&manifest, &PipelineSettings::default()).unwrap_err();
    assert_eq!(err.to_string(), "empty dataset");
}
