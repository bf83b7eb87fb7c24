//! PGM image codec: binary "P5" and ASCII "P2", 8-bit, header comments
//! allowed. The writer always emits P5 with single-space separators and a
//! trailing newline after the maxval.

use super::IoError;
use crate::image::GrayImage;

pub fn write_pgm(image: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(image.as_slice());
    out
}

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    fn skip_separators(&mut self) {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str, IoError> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(IoError::MalformedHeader("unexpected end of header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| IoError::MalformedHeader("non-ASCII header token".into()))
    }

    fn number(&mut self, what: &str) -> Result<u32, IoError> {
        let tok = self.token()?;
        tok.parse::<u32>()
            .map_err(|_| IoError::MalformedHeader(format!("invalid {what}: {tok:?}")))
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, IoError> {
    let mut scan = HeaderScanner { bytes, pos: 0 };
    let magic = scan.token()?;
    let binary = match magic {
        "P5" => true,
        "P2" => false,
        other => {
            return Err(IoError::MalformedHeader(format!(
                "unsupported magic {other:?}"
            )))
        }
    };
    let width = scan.number("width")? as usize;
    let height = scan.number("height")? as usize;
    let maxval = scan.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(IoError::UnsupportedMaxval(maxval));
    }
    let expected = width * height;

    let data = if binary {
        // Exactly one whitespace byte separates the maxval from the raster.
        if scan.pos >= bytes.len() || !bytes[scan.pos].is_ascii_whitespace() {
            return Err(IoError::MalformedHeader(
                "missing separator after maxval".into(),
            ));
        }
        let start = scan.pos + 1;
        let body = &bytes[start.min(bytes.len())..];
        if body.len() < expected {
            return Err(IoError::TruncatedBody {
                expected,
                got: body.len(),
                unit: "bytes",
            });
        }
        body[..expected].to_vec()
    } else {
        let mut data = Vec::with_capacity(expected);
        while data.len() < expected {
            scan.skip_separators();
            if scan.pos >= bytes.len() {
                return Err(IoError::TruncatedBody {
                    expected,
                    got: data.len(),
                    unit: "samples",
                });
            }
            let tok = scan.token()?;
            let value: u32 = tok
                .parse()
                .map_err(|_| IoError::MalformedBody(format!("invalid sample {tok:?}")))?;
            if value > maxval {
                return Err(IoError::MalformedBody(format!(
                    "sample {value} exceeds maxval {maxval}"
                )));
            }
            data.push(value as u8);
        }
        data
    };

    GrayImage::from_raw(width, height, data)
        .ok_or_else(|| IoError::MalformedHeader("zero-sized image".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_one_pixel_file() {
        let img = GrayImage::constant(1, 1, 0);
        let bytes = write_pgm(&img);
        assert_eq!(&bytes, b"P5\n1 1\n255\n\x00");
        assert_eq!(read_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn round_trip_random_image() {
        let img = GrayImage::from_fn(37, 11, |c, r| ((c * 31 + r * 7) % 256) as u8);
        assert_eq!(read_pgm(&write_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn ascii_p2_matches_binary_twin() {
        let img = GrayImage::from_fn(5, 3, |c, r| (c * 50 + r * 3) as u8);
        let mut p2 = String::from("P2\n# a comment\n5 3\n255\n");
        for row in 0..3 {
            let line: Vec<String> = img.row(row).iter().map(|v| v.to_string()).collect();
            p2.push_str(&line.join(" "));
            p2.push('\n');
        }
        assert_eq!(read_pgm(p2.as_bytes()).unwrap(), img);
    }

    #[test]
    fn comments_in_binary_header() {
        let bytes = b"P5 # magic\n# size\n2 1\n255\n\x07\x09".to_vec();
        let img = read_pgm(&bytes).unwrap();
        assert_eq!(img.as_slice(), &[7, 9]);
    }

    #[test]
    fn truncated_body_is_detected() {
        let err = read_pgm(b"P5\n2 2\n255\n\x00\x01").unwrap_err();
        assert!(matches!(err, IoError::TruncatedBody { expected: 4, .. }));
    }

    #[test]
    fn oversized_maxval_is_rejected() {
        let err = read_pgm(b"P5\n1 1\n65535\n\x00").unwrap_err();
        assert!(matches!(err, IoError::UnsupportedMaxval(65535)));
    }

    #[test]
    fn garbage_magic_is_rejected() {
        assert!(matches!(
            read_pgm(b"P6\n1 1\n255\n\x00"),
            Err(IoError::MalformedHeader(_))
        ));
    }
}
