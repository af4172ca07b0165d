//! Plain-text run outputs: CSV for per-row series, JSON for single objects.

use serde::Serialize;
use ssam_core::model::Network;
use ssam_core::training::{Evaluation, KSearch, TrainHistory};

fn csv_text<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn history_csv(history: &TrainHistory) -> String {
    csv_text(
        &["epoch", "train_loss", "train_acc", "val_loss", "val_acc"],
        history
            .records
            .iter()
            .map(|r| (r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc)),
    )
}

pub fn k_search_csv(search: &KSearch) -> String {
    csv_text(
        &["K", "val_loss", "selected"],
        search
            .candidates
            .iter()
            .map(|c| (c.segments, c.val_loss, c.segments == search.best)),
    )
}

pub fn noise_csv(rows: &[(f64, f64)]) -> String {
    csv_text(&["sigma_rel", "accuracy"], rows.iter().copied())
}

#[derive(Debug, Serialize)]
struct MaskExport<'a> {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "T_seg")]
    t_seg: usize,
    masks: Vec<&'a [f64]>,
}

/// `None` for a network without the SSAM stage.
pub fn mask_json(net: &Network) -> Option<String> {
    let ssam = net.ssam()?;
    Some(json_text(&MaskExport {
        k: ssam.segment_count(),
        t_seg: ssam.segment_len(),
        masks: net.masks(),
    }))
}

#[derive(Debug, Serialize)]
struct Metrics {
    accuracy: f64,
    loss: f64,
    /// Segment count, `null` for the base network.
    #[serde(rename = "K")]
    k: Option<usize>,
}

pub fn metrics_json(eval: &Evaluation, net: &Network) -> String {
    json_text(&Metrics {
        accuracy: eval.accuracy,
        loss: eval.loss,
        k: net.ssam().map(|s| s.segment_count()),
    })
}
