use std::io::Write;

use crate::error::{Error, Result};

/// Row-major grayscale image as read from a PGM file.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayRaster {
    width: usize,
    height: usize,
    maxval: u16,
    pixels: Vec<u16>,
}

impl GrayRaster {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if maxval != 255 && maxval != 65535 {
            return Err(Error::Input(format!("maxval must be 255 or 65535, got {maxval}")));
        }
        if pixels.len() != width * height {
            return Err(Error::Input(format!(
                "expected {} pixels for {width}×{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|&&v| v > maxval) {
            return Err(Error::Input(format!("pixel value {v} exceeds maxval {maxval}")));
        }
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, maxval: u16, f: impl Fn(usize, usize) -> u16) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|v| (0..width).map(move |u| (u, v)))
            .map(|(u, v)| f(u, v))
            .collect();
        Self::new(width, height, maxval, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    /// Intensity at column `u`, row `v`.
    pub fn get(&self, u: usize, v: usize) -> u16 {
        self.pixels[v * self.width + u]
    }

    /// Parses binary (`P5`) or ASCII (`P2`) PGM. 16-bit samples are big-endian.
    pub fn read_pgm(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.token()?;
        let binary = match magic.as_str() {
            "P5" => true,
            "P2" => false,
            other => return Err(Error::Parse(format!("not a PGM file (magic {other:?})"))),
        };
        let width = cur.number()?;
        let height = cur.number()?;
        let maxval = cur.number()?;
        if maxval != 255 && maxval != 65535 {
            return Err(Error::Parse(format!("unsupported maxval {maxval}")));
        }
        let count = width
            .checked_mul(height)
            .ok_or_else(|| Error::Parse("image dimensions overflow".into()))?;

        let pixels = if binary {
            // exactly one whitespace byte separates the header from the data
            if !cur.bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
                return Err(Error::Parse("missing whitespace after PGM header".into()));
            }
            let data = &cur.bytes[cur.pos + 1..];
            let wide = maxval > 255;
            let need = if wide { 2 * count } else { count };
            if data.len() < need {
                return Err(Error::Parse(format!(
                    "PGM data truncated: need {need} bytes, got {}",
                    data.len()
                )));
            }
            if wide {
                data[..need]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]))
                    .collect()
            } else {
                data[..need].iter().map(|&b| b as u16).collect()
            }
        } else {
            (0..count)
                .map(|_| {
                    cur.number()
                        .and_then(|v| u16::try_from(v).map_err(|e| Error::Parse(e.to_string())))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Self::new(width, height, maxval as u16, pixels).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n{}\n", self.width, self.height, self.maxval)?;
        if self.maxval > 255 {
            for p in &self.pixels {
                w.write_all(&p.to_be_bytes())?;
            }
        } else {
            w.write_all(&self.pixels.iter().map(|&p| p as u8).collect::<Vec<_>>())?;
        }
        Ok(())
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse("unexpected end of PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse()
            .map_err(|_| Error::Parse(format!("expected a number in PGM, got {t:?}")))
    }
}
