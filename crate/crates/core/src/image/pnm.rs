//! Binary PGM/PPM reading and writing (8-bit only).
//!
//! `P5` carries one gray channel, `P6` three RGB channels. Headers are the
//! usual whitespace-separated `magic width height maxval` with `#` comments;
//! exactly one whitespace byte separates the maxval from the raw samples.

use std::io::{Read, Write};

use super::{Image, ImageError};

fn pnm_err(message: impl Into<String>) -> ImageError {
    ImageError::Pnm(message.into())
}

struct HeaderReader<'a, R: Read> {
    inner: &'a mut R,
    peeked: Option<u8>,
}

impl<'a, R: Read> HeaderReader<'a, R> {
    fn new(inner: &'a mut R) -> Self {
        HeaderReader {
            inner,
            peeked: None,
        }
    }

    fn next_byte(&mut self) -> Result<Option<u8>, ImageError> {
        if let Some(b) = self.peeked.take() {
            return Ok(Some(b));
        }
        let mut buf = [0u8; 1];
        match self.inner.read(&mut buf)? {
            0 => Ok(None),
            _ => Ok(Some(buf[0])),
        }
    }

    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Result<String, ImageError> {
        let mut token = Vec::new();
        loop {
            match self.next_byte()? {
                None => {
                    if token.is_empty() {
                        return Err(pnm_err("unexpected end of header"));
                    }
                    break;
                }
                Some(b'#') if token.is_empty() => {
                    // Comment runs to end of line.
                    while let Some(b) = self.next_byte()? {
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(b) if b.is_ascii_whitespace() => {
                    if !token.is_empty() {
                        break;
                    }
                }
                Some(b) => token.push(b),
            }
        }
        String::from_utf8(token).map_err(|_| pnm_err("header is not ascii"))
    }

    fn number(&mut self, what: &str) -> Result<usize, ImageError> {
        let token = self.token()?;
        token
            .parse()
            .map_err(|_| pnm_err(format!("{what} `{token}` is not a number")))
    }
}

/// Reads a binary PGM (`P5`) or PPM (`P6`) image.
pub fn read_pnm<R: Read>(reader: &mut R) -> Result<Image, ImageError> {
    let mut header = HeaderReader::new(reader);
    let magic = header.token()?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(pnm_err(format!("unsupported magic `{other}`"))),
    };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval != 255 {
        return Err(pnm_err(format!("only maxval 255 is supported, got {maxval}")));
    }
    // The single whitespace byte after maxval was consumed as the token
    // delimiter; everything from here on is raw samples.
    let mut data = vec![0u8; width.saturating_mul(height).saturating_mul(channels)];
    reader
        .read_exact(&mut data)
        .map_err(|_| pnm_err("file ends before all pixel data"))?;
    Image::new(width, height, channels, data)
}

/// Writes `P5` for grayscale images and `P6` for RGB.
pub fn write_pnm<W: Write>(image: &Image, writer: &mut W) -> Result<(), ImageError> {
    let magic = if image.channels() == 1 { "P5" } else { "P6" };
    write!(writer, "{magic}\n{} {}\n255\n", image.width(), image.height())?;
    writer.write_all(image.data())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_gray_and_rgb() {
        for channels in [1usize, 3] {
            let data: Vec<u8> = (0..(4 * 3 * channels) as u8).collect();
            let img = Image::new(4, 3, channels, data).unwrap();
            let mut buf = Vec::new();
            write_pnm(&img, &mut buf).unwrap();
            let back = read_pnm(&mut buf.as_slice()).unwrap();
            assert_eq!(back, img);
        }
    }

    #[test]
    fn header_comments_and_whitespace_are_tolerated() {
        let mut file = b"P5 # gray\n# a comment line\n 2\t2 \n255\n".to_vec();
        file.extend_from_slice(&[1, 2, 3, 4]);
        let img = read_pnm(&mut file.as_slice()).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (2, 2, 1));
        assert_eq!(img.data(), &[1, 2, 3, 4]);
    }

    #[test]
    fn rejects_wrong_magic_maxval_and_truncation() {
        assert!(matches!(
            read_pnm(&mut &b"P3\n1 1\n255\n"[..]),
            Err(ImageError::Pnm(_))
        ));
        assert!(matches!(
            read_pnm(&mut &b"P5\n1 1\n65535\n\x00\x00"[..]),
            Err(ImageError::Pnm(_))
        ));
        let truncated = b"P6\n2 2\n255\nABC";
        assert!(matches!(
            read_pnm(&mut &truncated[..]),
            Err(ImageError::Pnm(_))
        ));
        assert!(matches!(
            read_pnm(&mut &b"P5\n2 x\n255\n"[..]),
            Err(ImageError::Pnm(_))
        ));
    }
}
