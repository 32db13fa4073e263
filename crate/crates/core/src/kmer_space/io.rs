//! K-mer model tables (TSV) and edge-list export.

use std::io::Write;
use std::path::Path;

use super::{ChannelMapping, KmerState, StateGraph};
use crate::error::{NncError, Result};

/// Parses a k-mer model table: one `kmer level_mean [level_stdv]` row per
/// line, tab separated. Blank lines, `#` lines and a leading `kmer` header
/// are skipped. τ is taken from the first k-mer.
pub fn parse_kmer_model(text: &str, origin: &Path) -> Result<ChannelMapping> {
    let err = |line: usize, msg: String| NncError::Parse { path: origin.to_path_buf(), line, msg };
    let mut mapping: Option<ChannelMapping> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("kmer") {
            continue;
        }
        let cols: Vec<&str> = line.split(|c| c == '\t' || c == ' ').filter(|c| !c.is_empty()).collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(err(lineno, format!("expected 2 or 3 columns, found {}", cols.len())));
        }
        let kmer: KmerState = cols[0].parse().map_err(|_| err(lineno, format!("invalid k-mer {:?}", cols[0])))?;
        let level: f64 = cols[1].parse().map_err(|_| err(lineno, format!("invalid level {:?}", cols[1])))?;
        let sd = match cols.get(2) {
            Some(s) => Some(s.parse::<f64>().map_err(|_| err(lineno, format!("invalid stdv {s:?}")))?),
            None => None,
        };
        let m = match &mut mapping {
            Some(m) => m,
            None => mapping.insert(ChannelMapping::new(kmer.tau())?),
        };
        if m.level(&kmer).is_some() {
            return Err(err(lineno, format!("duplicate k-mer {kmer}")));
        }
        m.insert(kmer, level, sd).map_err(|e| err(lineno, e.to_string()))?;
    }
    mapping.ok_or_else(|| err(0, "no k-mer rows".into()))
}

pub fn read_kmer_model(path: &Path) -> Result<ChannelMapping> {
    let text = std::fs::read_to_string(path)?;
    parse_kmer_model(&text, path)
}

/// Writes `src_kmer,dst_kmer,input_base,src_level,dst_level,jump` rows.
pub fn write_edge_csv<W: Write>(g: &StateGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "src_kmer,dst_kmer,input_base,src_level,dst_level,jump")?;
    for (i, e) in g.edges().iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            g.kmer(e.src),
            g.kmer(e.dst),
            e.input,
            g.level(e.src),
            g.level(e.dst),
            g.jump(i)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ChannelMapping> {
        parse_kmer_model(text, Path::new("test.tsv"))
    }

    #[test]
    fn header_and_optional_sd() {
        let m = parse("kmer\tlevel_mean\tlevel_stdv\nAC\t1.5\t0.2\nCA\t-0.5\t0.1\n").unwrap();
        assert_eq!(m.tau(), 2);
        assert_eq!(m.level(&"AC".parse().unwrap()), Some(1.5));
        assert_eq!(m.sd(&"CA".parse().unwrap()), Some(0.1));
        assert!(m.has_all_sds());

        let m = parse("# comment\nAAA\t0.25\n").unwrap();
        assert_eq!(m.sd(&"AAA".parse().unwrap()), None);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("kmer\tlevel\nAC\t1.0\nAX\t2.0\n") {
            Err(NncError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse("AC\t1.0\nAC\t2.0\n").is_err());
        assert!(parse("AC\t1.0\nACG\t2.0\n").is_err());
        assert!(parse("AC\tabc\n").is_err());
        assert!(parse("AC\t1.0\t-1\n").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn edge_csv_columns() {
        let g = super::super::fixtures::fig3_graph();
        let mut buf = Vec::new();
        write_edge_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 10);
        assert!(lines.contains(&"CTCGT,TCGTC,C,0.19,-1.3,1.49"));
    }
}
