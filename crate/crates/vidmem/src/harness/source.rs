//! Frame stream sources: a deterministic synthetic scene-script generator and
//! an image-directory reader.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashmix::derive_seed;
use crate::imageio;
use crate::types::Frame;

/// One scripted scene of a synthetic stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub duration_s: f64,
    pub base_color: [u8; 3],
    /// Per-pixel uniform noise amplitude as a fraction of full scale.
    #[serde(default)]
    pub noise_level: f64,
    /// Per-channel color drift in levels per second.
    #[serde(default)]
    pub drift: [f64; 3],
}

fn default_edge() -> u32 {
    64
}

/// A scripted synthetic stream. Fully deterministic for a fixed seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Frames per second; falls back to the pipeline stream fps when absent.
    #[serde(default)]
    pub fps: Option<f64>,
    #[serde(default = "default_edge")]
    pub width: u32,
    #[serde(default = "default_edge")]
    pub height: u32,
    #[serde(default)]
    pub seed: u64,
    pub scenes: Vec<SceneSpec>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.scenes.is_empty() {
            return Err(Error::Source("synthetic script needs at least one scene".into()));
        }
        for (i, scene) in self.scenes.iter().enumerate() {
            if !scene.duration_s.is_finite() || scene.duration_s <= 0.0 {
                return Err(Error::Source(format!(
                    "scene {i} duration must be positive, got {}",
                    scene.duration_s
                )));
            }
            if !(0.0..=1.0).contains(&scene.noise_level) {
                return Err(Error::Source(format!(
                    "scene {i} noise_level must be in [0, 1], got {}",
                    scene.noise_level
                )));
            }
        }
        if let Some(fps) = self.fps {
            if !fps.is_finite() || fps <= 0.0 {
                return Err(Error::Source(format!("fps must be positive, got {fps}")));
            }
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Source("frame size must be positive".into()));
        }
        Ok(())
    }

    pub fn total_duration_s(&self) -> f64 {
        self.scenes.iter().map(|s| s.duration_s).sum()
    }

    /// Scene windows as (start, end) pairs, half-open on the right.
    pub fn scene_windows(&self) -> Vec<(f64, f64)> {
        let mut windows = Vec::with_capacity(self.scenes.len());
        let mut start = 0.0;
        for scene in &self.scenes {
            windows.push((start, start + scene.duration_s));
            start += scene.duration_s;
        }
        windows
    }

    /// Index of the scene covering timestamp `t`, if any.
    pub fn scene_of(&self, t: f64) -> Option<usize> {
        self.scene_windows()
            .iter()
            .position(|&(start, end)| t >= start && t < end)
    }
}

/// Where frames come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamSourceSpec {
    Synthetic(SyntheticSpec),
    ImageDirectory {
        path: PathBuf,
        #[serde(default)]
        fps: Option<f64>,
    },
}

impl StreamSourceSpec {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let spec: StreamSourceSpec = serde_json::from_slice(bytes)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StreamSourceSpec::Synthetic(spec) => spec.validate(),
            StreamSourceSpec::ImageDirectory { fps, .. } => {
                if let Some(fps) = fps {
                    if !fps.is_finite() || *fps <= 0.0 {
                        return Err(Error::Source(format!("fps must be positive, got {fps}")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Parses the CLI `--source` argument: either `synthetic:<spec.json>` or
    /// a directory path.
    pub fn from_cli_arg(arg: &str) -> Result<Self> {
        if let Some(path) = arg.strip_prefix("synthetic:") {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let spec: SyntheticSpec = serde_json::from_slice(&bytes)?;
            spec.validate()?;
            Ok(StreamSourceSpec::Synthetic(spec))
        } else {
            let path = PathBuf::from(arg);
            if !path.is_dir() {
                return Err(Error::Source(format!(
                    "{arg:?} is not a directory (use synthetic:<spec.json> for scripted streams)"
                )));
            }
            Ok(StreamSourceSpec::ImageDirectory { path, fps: None })
        }
    }

    /// The synthetic script, when this source has one.
    pub fn synthetic(&self) -> Option<&SyntheticSpec> {
        match self {
            StreamSourceSpec::Synthetic(spec) => Some(spec),
            StreamSourceSpec::ImageDirectory { .. } => None,
        }
    }
}

/// Generates the synthetic frame for one instant of the script.
fn synthesize_frame(spec: &SyntheticSpec, frame_id: u64, t: f64) -> Frame {
    let windows = spec.scene_windows();
    let scene_idx = spec
        .scene_of(t)
        .unwrap_or(spec.scenes.len() - 1);
    let scene = &spec.scenes[scene_idx];
    let since_start = t - windows[scene_idx].0;
    let mut base = [0.0f64; 3];
    for ((b, &color), &drift) in base.iter_mut().zip(&scene.base_color).zip(&scene.drift) {
        *b = (color as f64 + drift * since_start).clamp(0.0, 255.0);
    }
    let mut pixels = Vec::with_capacity(spec.width as usize * spec.height as usize * 3);
    if scene.noise_level == 0.0 {
        let rgb = [base[0].round() as u8, base[1].round() as u8, base[2].round() as u8];
        for _ in 0..spec.width as usize * spec.height as usize {
            pixels.extend_from_slice(&rgb);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, frame_id));
        let amplitude = scene.noise_level * 255.0;
        for _ in 0..spec.width as usize * spec.height as usize {
            for &b in base.iter() {
                let delta = (rng.random::<f64>() * 2.0 - 1.0) * amplitude;
                pixels.push((b + delta).clamp(0.0, 255.0).round() as u8);
            }
        }
    }
    Frame {
        frame_id,
        timestamp: t,
        width: spec.width,
        height: spec.height,
        pixels,
    }
}

/// Opens a frame stream. `default_fps` applies when the source spec does not
/// pin its own rate.
pub fn open_stream(
    spec: &StreamSourceSpec,
    default_fps: f64,
) -> Result<Box<dyn Iterator<Item = Result<Frame>> + Send>> {
    spec.validate()?;
    match spec {
        StreamSourceSpec::Synthetic(spec) => {
            let spec = spec.clone();
            let fps = spec.fps.unwrap_or(default_fps);
            let total = spec.total_duration_s();
            let frame_count = (total * fps).ceil() as u64;
            let iter = (0..frame_count).map(move |i| {
                let t = i as f64 / fps;
                Ok(synthesize_frame(&spec, i, t))
            });
            Ok(Box::new(iter))
        }
        StreamSourceSpec::ImageDirectory { path, fps } => {
            let fps = fps.unwrap_or(default_fps);
            let files = list_image_files(path)?;
            let iter = files.into_iter().enumerate().map(move |(i, file)| {
                let timestamp = file
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|t| t.is_finite() && *t >= 0.0)
                    .unwrap_or(i as f64 / fps);
                let (width, height, pixels) = imageio::read_image_file(&file)?;
                Frame::new(i as u64, timestamp, width, height, pixels)
            });
            Ok(Box::new(iter))
        }
    }
}

/// PNG/JPEG files of a directory, ordered by filename.
fn list_image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
