use crate::error::{domain, Result};

/// Formats `v` with 12 significant digits, like C's `%.12g` in the "C"
/// locale: fixed notation for exponents in `-5..12`, scientific otherwise,
/// trailing zeros removed.
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = usize::try_from(11 - exp).expect("non-negative");
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

/// A CSV table assembled in memory and rendered with LF line endings.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).map_err(csv_error)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(csv_error)
    }

    pub fn finish(self) -> Result<String> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| domain("output", e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| domain("output", e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> crate::Error {
    domain("output", e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(2.891412241312345), "2.89141224131");
        assert_eq!(sig12(0.052), "0.052");
        assert_eq!(sig12(14.0), "14");
        assert_eq!(sig12(-0.0), "0");
        assert_eq!(sig12(1e-7), "1e-7");
        assert_eq!(sig12(1.5e-12), "1.5e-12");
        assert_eq!(sig12(123456789012345.0), "1.23456789012e14");
        assert_eq!(sig12(99999999999.99999), "100000000000");
        assert_eq!(sig12(f64::NAN), "NaN");
    }

    #[test]
    fn table_uses_lf() {
        let mut t = Table::new(&["a", "b"]).unwrap();
        t.row(["1", "2"]).unwrap();
        assert_eq!(t.finish().unwrap(), "a,b\n1,2\n");
    }
}
