//! Fixed-width bit packing, least-significant bit first within each byte.

/// Appends values of a fixed bit width to a byte buffer.
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_pos: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        BitWriter { bytes: Vec::new(), bit_pos: 0 }
    }

    /// Writes the low `bits` bits of `value`, LSB first.
    pub fn write(&mut self, value: u32, bits: u8) {
        debug_assert!(bits >= 1 && bits <= 32);
        debug_assert!(bits == 32 || value < (1u64 << bits) as u32, "value does not fit in width");
        for b in 0..bits {
            if self.bit_pos % 8 == 0 {
                self.bytes.push(0);
            }
            let bit = (value >> b) & 1;
            let byte = self.bytes.last_mut().expect("byte pushed above");
            *byte |= (bit as u8) << (self.bit_pos % 8);
            self.bit_pos += 1;
        }
    }

    pub fn bits_written(&self) -> usize {
        self.bit_pos
    }

    /// Finishes the stream, zero-padded to a byte boundary.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

impl Default for BitWriter {
    fn default() -> Self {
        Self::new()
    }
}

/// Reads fixed-width values back out of a packed buffer.
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, bit_pos: 0 }
    }

    /// Reads `bits` bits, LSB first. Returns `None` past the end.
    pub fn read(&mut self, bits: u8) -> Option<u32> {
        if self.bit_pos + bits as usize > self.bytes.len() * 8 {
            return None;
        }
        let mut value = 0u32;
        for b in 0..bits {
            let byte = self.bytes[self.bit_pos / 8];
            let bit = (byte >> (self.bit_pos % 8)) & 1;
            value |= (bit as u32) << b;
            self.bit_pos += 1;
        }
        Some(value)
    }
}
