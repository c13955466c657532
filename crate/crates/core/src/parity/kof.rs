use std::collections::BTreeMap;
use std::path::Path;

use crate::scalar::Scalar;

use super::ParityError;

/// Region × year grid of globalization index values on the 0–100 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalizationTable<T> {
    rows: BTreeMap<String, BTreeMap<u16, T>>,
}

impl<T: Scalar> GlobalizationTable<T> {
    pub fn new(rows: BTreeMap<String, BTreeMap<u16, T>>) -> Result<Self, ParityError> {
        let lo = T::zero();
        let hi = T::from_count(100);
        for (region, years) in &rows {
            for (year, value) in years {
                if !(1000..=9999).contains(year) {
                    return Err(ParityError::InvalidIndexTable(format!(
                        "{region}: year {year} is not a 4-digit year"
                    )));
                }
                if !value.is_finite_value() || *value < lo || *value > hi {
                    return Err(ParityError::InvalidIndexTable(format!(
                        "{region} {year}: value {value} outside 0..=100"
                    )));
                }
            }
        }
        Ok(Self { rows })
    }

    /// Reads `region,1993,...,2023` CSV. Empty cells are treated as missing.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, ParityError> {
        let bad = |msg: String| ParityError::InvalidIndexTable(msg);
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv.headers().map_err(|e| bad(e.to_string()))?.clone();
        if headers.get(0) != Some("region") {
            return Err(bad("first header column must be `region`".into()));
        }
        let years = headers
            .iter()
            .skip(1)
            .map(|h| h.parse::<u16>().ok().filter(|y| (1000..=9999).contains(y)))
            .collect::<Option<Vec<u16>>>()
            .ok_or_else(|| bad("year headers must be 4-digit integers".into()))?;

        let mut rows = BTreeMap::new();
        for (line, record) in csv.records().enumerate() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            let region = record.get(0).unwrap_or_default().to_string();
            if region.is_empty() {
                return Err(bad(format!("row {}: empty region label", line + 2)));
            }
            let mut values = BTreeMap::new();
            for (year, cell) in years.iter().zip(record.iter().skip(1)) {
                if cell.is_empty() {
                    continue;
                }
                let value = T::parse_decimal(cell).ok_or_else(|| {
                    bad(format!("{region} {year}: cannot parse {cell:?} as a decimal"))
                })?;
                values.insert(*year, value);
            }
            if rows.insert(region.clone(), values).is_some() {
                return Err(bad(format!("duplicate region row {region:?}")));
            }
        }
        Self::new(rows)
    }

    pub fn from_csv_file(path: &Path) -> Result<Self, ParityError> {
        let file = std::fs::File::open(path)
            .map_err(|e| ParityError::InvalidIndexTable(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    /// The bundled "de facto interpersonal" index table, 1993–2023.
    pub fn bundled() -> Self {
        Self::from_csv_reader(crate::data::KOF_CSV.as_bytes()).expect("bundled table is valid")
    }

    pub fn get(&self, region: &str, year: u16) -> Option<&T> {
        self.rows.get(region)?.get(&year)
    }

    pub fn regions(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn years(&self, region: &str) -> Option<impl Iterator<Item = u16> + '_> {
        self.rows.get(region).map(|years| years.keys().copied())
    }
}

/// Globalization factor for `region` in `year`: the index value divided by 100.
pub fn derive_alpha<T: Scalar>(
    table: &GlobalizationTable<T>,
    region: &str,
    year: u16,
) -> Result<T, ParityError> {
    let value = table
        .get(region, year)
        .ok_or_else(|| ParityError::MissingIndex { region: region.to_string(), year })?;
    Ok(value.clone() / T::from_count(100))
}
