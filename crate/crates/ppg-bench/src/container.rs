//! PPGV container I/O: raw RGB24 frames behind a small JSON header.
//!
//! Layout: magic `PPGV`, format version u16 LE, header length u32 LE, UTF-8
//! JSON header, then frames back-to-back as interleaved R,G,B bytes in
//! row-major order. No compression, so spatial means survive a round trip
//! bit for bit.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{FrameSpec, VideoClip};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PPGV";
const VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    width: u32,
    height: u32,
    fps: f64,
    frames: u32,
    colorspace: String,
}

/// Write a clip to a PPGV file.
pub fn write_video(clip: &VideoClip, path: impl AsRef<Path>) -> Result<()> {
    clip.validate()?;
    let header = Header {
        width: clip.spec.width,
        height: clip.spec.height,
        fps: clip.spec.fps,
        frames: clip.frames.len() as u32,
        colorspace: "RGB24".to_string(),
    };
    let header_json = serde_json::to_string(&header)?;
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header_json.len() as u32).to_le_bytes())?;
    w.write_all(header_json.as_bytes())?;
    for frame in &clip.frames {
        w.write_all(frame)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a clip from a PPGV file.
pub fn read_video(path: impl AsRef<Path>) -> Result<VideoClip> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected PPGV")));
    }
    let mut buf2 = [0u8; 2];
    r.read_exact(&mut buf2)
        .map_err(|_| Error::Format("truncated version field".into()))?;
    let version = u16::from_le_bytes(buf2);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)
        .map_err(|_| Error::Format("truncated header length".into()))?;
    let header_len = u32::from_le_bytes(buf4) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)
        .map_err(|_| Error::Format("truncated header".into()))?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Format(format!("bad header json: {e}")))?;
    if header.colorspace != "RGB24" {
        return Err(Error::Format(format!(
            "unsupported colorspace {}",
            header.colorspace
        )));
    }
    let spec = FrameSpec {
        width: header.width,
        height: header.height,
        fps: header.fps,
    };
    spec.validate()?;
    let frame_bytes = spec.pixels() * 3;
    let mut frames = Vec::with_capacity(header.frames as usize);
    for i in 0..header.frames {
        let mut frame = vec![0u8; frame_bytes];
        r.read_exact(&mut frame).map_err(|_| {
            Error::Format(format!(
                "truncated: header declares {} frames, file ends inside frame {i}",
                header.frames
            ))
        })?;
        frames.push(frame);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format(format!(
            "trailing bytes after {} declared frames",
            header.frames
        )));
    }
    let timestamps_s = (0..frames.len()).map(|i| i as f64 / spec.fps).collect();
    let clip = VideoClip {
        frames,
        spec,
        timestamps_s,
    };
    clip.validate()?;
    Ok(clip)
}

/// Dump every frame as an index-named PNG (000000.png, 000001.png, ...) for
/// eyeballing clips.
pub fn dump_frames_png(clip: &VideoClip, dir: impl AsRef<Path>) -> Result<()> {
    clip.validate()?;
    std::fs::create_dir_all(dir.as_ref())?;
    for (i, frame) in clip.frames.iter().enumerate() {
        let path = dir.as_ref().join(format!("{i:06}.png"));
        image::save_buffer(
            &path,
            frame,
            clip.spec.width,
            clip.spec.height,
            image::ColorType::Rgb8,
        )
        .map_err(|e| Error::Format(format!("png write failed: {e}")))?;
    }
    Ok(())
}
