//! 8-bit RGB frames and the binary PPM (`P6`) format used for frame files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Interleaved RGB, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height * 3 {
            return Err(Error::dim(format!(
                "image {width}x{height} needs {} bytes, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Image::new(width, height, rgb.repeat(width * height))
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// `3 × H × W` tensor with values in `[0, 1]`.
    pub fn to_tensor(&self) -> Tensor {
        let plane = self.width * self.height;
        let mut out = vec![0.0f32; 3 * plane];
        for (i, px) in self.data.chunks_exact(3).enumerate() {
            for c in 0..3 {
                out[c * plane + i] = px[c] as f32 / 255.0;
            }
        }
        Tensor::new(&[3, self.height, self.width], out).expect("non-empty image")
    }

    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn decode_ppm(bytes: &[u8], origin: &str) -> Result<Self> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::format(origin, "truncated PPM header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).unwrap_or("").to_string());
        }
        if fields[0] != "P6" {
            return Err(Error::format(origin, "not a binary PPM (P6) file"));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(origin, format!("bad PPM header field {s:?}")))
        };
        let (w, h, max) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if max != 255 {
            return Err(Error::format(origin, "only 8-bit PPM files are supported"));
        }
        // Exactly one whitespace byte separates the header from the raster.
        let raster = bytes.get(pos + 1..).unwrap_or(&[]);
        if raster.len() != w * h * 3 {
            return Err(Error::format(
                origin,
                format!("expected {} raster bytes, found {}", w * h * 3, raster.len()),
            ));
        }
        Image::new(w, h, raster.to_vec()).map_err(|e| Error::format(origin, e.to_string()))
    }

    pub fn save_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode_ppm())?;
        Ok(())
    }

    pub fn load_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Image::decode_ppm(&fs::read(path)?, &path.display().to_string())
    }
}

/// `.ppm` files of a directory in name order.
pub fn list_frames(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("ppm")))
        .collect();
    paths.sort();
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let mut img = Image::filled(3, 2, [10, 20, 30]).unwrap();
        img.set_pixel(2, 1, [255, 0, 7]);
        let back = Image::decode_ppm(&img.encode_ppm(), "mem").unwrap();
        assert_eq!(back, img);
        assert_eq!(back.pixel(2, 1), [255, 0, 7]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P6\n# made by hand\n1 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(Image::decode_ppm(&bytes, "mem").unwrap().data, vec![1, 2, 3]);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(Image::decode_ppm(b"P5\n1 1\n255\n\x00", "mem").is_err());
        assert!(Image::decode_ppm(b"P6\n2 2\n255\n\x00\x00", "mem").is_err());
        assert!(Image::decode_ppm(b"P6\n2", "mem").is_err());
    }

    #[test]
    fn tensor_is_channels_first() {
        let mut img = Image::filled(2, 1, [0, 0, 0]).unwrap();
        img.set_pixel(1, 0, [255, 51, 0]);
        let t = img.to_tensor();
        assert_eq!(t.shape(), &[3, 1, 2]);
        assert_eq!(t.at(0, 0, 1), 1.0);
        assert_eq!(t.at(1, 0, 1), 0.2);
    }
}
