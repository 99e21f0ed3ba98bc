use std::fmt;
use std::str::FromStr;

use super::SummaryRow;

pub const CSV_HEADER: [&str; 7] = ["problem", "planner", "params", "V", "Err", "t_s", "nb_d"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            _ => Err(format!("unknown table format {s:?}")),
        }
    }
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableFormat::Csv => "csv",
            TableFormat::Markdown => "markdown",
        })
    }
}

/// `x` rounded to 6 significant digits, printed without trailing zeros.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("scientific notation parses");
    if rounded == 0.0 {
        "0".into()
    } else if rounded.abs() < 1e-4 || rounded.abs() >= 1e15 {
        format!("{rounded:e}")
    } else {
        rounded.to_string()
    }
}

fn cells(row: &SummaryRow) -> [String; 7] {
    [
        row.problem.clone(),
        row.planner.clone(),
        row.params.clone(),
        format_sig(row.v),
        format_sig(row.err),
        format_sig(row.t_s),
        format_sig(row.nb_d),
    ]
}

/// Renders rows as CSV (header `problem,planner,params,V,Err,t_s,nb_d`) or
/// as a pipe-delimited markdown table.
pub fn emit_table(rows: &[SummaryRow], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("in-memory write");
            for row in rows {
                w.write_record(cells(row)).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
        }
        TableFormat::Markdown => {
            let line = |fields: &[String]| format!("| {} |\n", fields.iter().map(|f| f.replace('|', "\\|")).collect::<Vec<_>>().join(" | "));
            let mut out = line(&CSV_HEADER.map(String::from));
            out.push_str(&format!("|{}\n", "---|".repeat(CSV_HEADER.len())));
            for row in rows {
                out.push_str(&line(&cells(row)));
            }
            out
        }
    }
}

/// Parses CSV produced by [`emit_table`].
pub fn parse_csv_table(text: &str) -> Result<Vec<SummaryRow>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(CSV_HEADER) {
        return Err(format!("unexpected header {header:?}"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            Ok(SummaryRow {
                problem: rec[0].to_string(),
                planner: rec[1].to_string(),
                params: rec[2].to_string(),
                v: num(&rec[3])?,
                err: num(&rec[4])?,
                t_s: num(&rec[5])?,
                nb_d: num(&rec[6])?,
            })
        })
        .collect()
}
