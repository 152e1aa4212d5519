//! MOT-style comma-separated ground truth and tracking results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::image::{list_frames, Image};
use crate::geometry::BBox;

/// Boxes per target id for one frame.
pub type FrameBoxes = BTreeMap<u64, BBox>;

/// Parsed ground truth, keyed by 1-based frame number.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MotGroundTruth {
    pub frames: BTreeMap<usize, FrameBoxes>,
    /// Rows skipped for non-positive extents.
    pub dropped: usize,
}

/// Parses rows `frame,id,left,top,width,height[,…]`. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_mot(text: &str) -> Result<MotGroundTruth> {
    let mut gt = MotGroundTruth::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("line {}", n + 1);
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 6 {
            return Err(Error::format(
                at,
                format!("expected at least 6 columns, got {}", cols.len()),
            ));
        }
        let frame: usize = cols[0]
            .parse()
            .map_err(|_| Error::format(&at, format!("bad frame number {:?}", cols[0])))?;
        if frame == 0 {
            return Err(Error::format(at, "frame numbers are 1-based"));
        }
        let id: u64 = cols[1]
            .parse()
            .map_err(|_| Error::format(&at, format!("bad id {:?}", cols[1])))?;
        let mut v = [0.0f64; 4];
        for (slot, s) in v.iter_mut().zip(&cols[2..6]) {
            *slot = s
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| Error::format(&at, format!("bad number {s:?}")))?;
        }
        let [left, top, w, h] = v;
        if w <= 0.0 || h <= 0.0 {
            gt.dropped += 1;
            continue;
        }
        gt.frames
            .entry(frame)
            .or_default()
            .insert(id, BBox::from_ltwh(left, top, w, h));
    }
    if gt.dropped > 0 {
        log::warn!(
            "dropped {} ground-truth rows with non-positive extents",
            gt.dropped
        );
    }
    Ok(gt)
}

/// Writes `frame,id,left,top,width,height` rows (1-based frames). Values use
/// the shortest representation that parses back exactly.
pub fn format_mot(frames: &BTreeMap<usize, FrameBoxes>) -> String {
    let mut out = String::new();
    for (f, boxes) in frames {
        for (id, b) in boxes {
            writeln!(out, "{f},{id},{},{},{},{}", b.left(), b.top(), b.w, b.h).unwrap();
        }
    }
    out
}

/// Result rows `frame,id,left,top,width,height,confidence`.
pub fn format_results(rows: &[(usize, u64, BBox, f64)]) -> String {
    let mut out = String::new();
    for (f, id, b, c) in rows {
        writeln!(out, "{f},{id},{},{},{},{},{c}", b.left(), b.top(), b.w, b.h).unwrap();
    }
    out
}

/// Frames plus per-frame ground truth (index 0 is the first frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub frames: Vec<Image>,
    pub ground_truth: Vec<FrameBoxes>,
    pub fps: f64,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_size(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| (f.width, f.height))
    }

    /// Ground truth in the 1-based map form used by the text format.
    pub fn ground_truth_map(&self) -> BTreeMap<usize, FrameBoxes> {
        self.ground_truth
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.is_empty())
            .map(|(i, b)| (i + 1, b.clone()))
            .collect()
    }

    /// Writes `dir/frames/NNNNNN.ppm` and `dir/gt.txt`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let frames = dir.join("frames");
        fs::create_dir_all(&frames)?;
        for (i, img) in self.frames.iter().enumerate() {
            img.save_ppm(frames.join(format!("{:06}.ppm", i + 1)))?;
        }
        fs::write(dir.join("gt.txt"), format_mot(&self.ground_truth_map()))?;
        Ok(())
    }
}

/// Loads ground truth and the `.ppm` frames of `frames_dir`. Ground truth
/// naming frames beyond the available images is a format error.
pub fn load_mot_sequence(
    gt_path: impl AsRef<Path>,
    frames_dir: impl AsRef<Path>,
    fps: f64,
) -> Result<Sequence> {
    let gt_path = gt_path.as_ref();
    let gt = parse_mot(&fs::read_to_string(gt_path)?)?;
    let paths = list_frames(frames_dir)?;
    if let Some((&last, _)) = gt.frames.iter().next_back() {
        if last > paths.len() {
            return Err(Error::format(
                gt_path.display().to_string(),
                format!(
                    "ground truth names frame {last}, only {} frames found",
                    paths.len()
                ),
            ));
        }
    }
    let frames = paths.iter().map(Image::load_ppm).collect::<Result<Vec<_>>>()?;
    if let Some(first) = frames.first() {
        if let Some((i, _)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| (f.width, f.height) != (first.width, first.height))
        {
            return Err(Error::dim(format!(
                "frame {} differs in size from the first frame",
                i + 1
            )));
        }
    }
    let mut ground_truth = vec![FrameBoxes::new(); frames.len()];
    for (f, boxes) in gt.frames {
        ground_truth[f - 1] = boxes;
    }
    Ok(Sequence {
        frames,
        ground_truth,
        fps,
    })
}
