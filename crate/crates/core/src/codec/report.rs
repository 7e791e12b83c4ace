//! Per-section storage accounting.

use std::fmt;

use super::container::{split_container, Header, SECTIONS};
use crate::error::Result;
use crate::quant::PruneCounts;

#[derive(Clone, Debug, PartialEq)]
pub struct SectionSize {
    pub name: &'static str,
    pub bytes: usize,
    pub percent: f64,
}

/// Byte and percentage breakdown of a container.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub total_bytes: usize,
    /// Magic, header and section table.
    pub header_bytes: usize,
    pub header_percent: f64,
    pub sections: Vec<SectionSize>,
    pub counts: PruneCounts,
}

fn percent(part: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * part as f64 / total as f64
    }
}

pub(crate) fn report_from_layout(h: &Header, overhead: usize, sizes: &[usize]) -> RateReport {
    let total = overhead + sizes.iter().sum::<usize>();
    RateReport {
        total_bytes: total,
        header_bytes: overhead,
        header_percent: percent(overhead, total),
        sections: SECTIONS
            .iter()
            .zip(sizes)
            .map(|(&name, &bytes)| SectionSize {
                name,
                bytes,
                percent: percent(bytes, total),
            })
            .collect(),
        counts: PruneCounts {
            static_before: h.static_before,
            static_after: h.n_static,
            dynamic_before: h.dynamic_before,
            dynamic_after: h.n_dynamic,
        },
    }
}

/// Report for container bytes; checks framing and checksums.
pub fn size_report(data: &[u8]) -> Result<RateReport> {
    let (header, _, layout) = split_container(data)?;
    Ok(report_from_layout(&header, layout.overhead, &layout.sections))
}

impl RateReport {
    pub fn total_mb(&self) -> f64 {
        self.total_bytes as f64 / 1e6
    }

    pub fn section(&self, name: &str) -> Option<usize> {
        self.sections.iter().find(|s| s.name == name).map(|s| s.bytes)
    }
}

impl fmt::Display for RateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>10} {:>8}", "component", "bytes", "%")?;
        writeln!(f, "{:<16} {:>10} {:>8.2}", "header", self.header_bytes, self.header_percent)?;
        for s in &self.sections {
            writeln!(f, "{:<16} {:>10} {:>8.2}", s.name, s.bytes, s.percent)?;
        }
        writeln!(f, "{:<16} {:>10} {:>8.3} MB", "total", self.total_bytes, self.total_mb())?;
        let c = &self.counts;
        writeln!(
            f,
            "static  {} -> {} ({:.1}% pruned)",
            c.static_before,
            c.static_after,
            100.0 * c.static_ratio()
        )?;
        write!(
            f,
            "dynamic {} -> {} ({:.1}% pruned)",
            c.dynamic_before,
            c.dynamic_after,
            100.0 * c.dynamic_ratio()
        )
    }
}
