use crate::error::CliError;
use rhomix_core::io::{fmt_f64, to_json_string};
use serde_json::Value;

/// One CSV column value.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    /// Figure the columns reproduce, written as a `# figure:` comment.
    pub figure: Option<&'static str>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// Result of a command before formatting.
#[derive(Debug, Clone)]
pub struct Report {
    pub value: Value,
    /// Native CSV form; without one, CSV output lists the JSON leaves as key,value rows.
    pub table: Option<Table>,
    /// Plain-text form used when no format was requested.
    pub text: Option<String>,
    /// Set when the computation ran but its checks failed.
    pub failure: Option<String>,
}

impl Report {
    pub fn json(value: Value) -> Self {
        Self { value, table: None, text: None, failure: None }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn with_text(mut self, text: String) -> Self {
        self.text = Some(text);
        self
    }

    pub fn failing_if(mut self, failed: bool, why: String) -> Self {
        if failed {
            self.failure = Some(why);
        }
        self
    }
}

fn write_csv(table: &Table) -> Result<String, CliError> {
    let mut out = Vec::new();
    if let Some(fig) = table.figure {
        out.extend_from_slice(format!("# figure: {fig}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush().map_err(|e| CliError::Invalid(e.to_string()))?;
    drop(w);
    String::from_utf8(out).map_err(|e| CliError::Invalid(e.to_string()))
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<Vec<Cell>>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&key(k), x, rows)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, rows)),
        Value::Null => rows.push(vec![Cell::Text(prefix.into()), Cell::Text(String::new())]),
        Value::Bool(b) => rows.push(vec![Cell::Text(prefix.into()), Cell::Text(b.to_string())]),
        Value::String(s) => rows.push(vec![Cell::Text(prefix.into()), Cell::Text(s.clone())]),
        Value::Number(n) => {
            let cell = match n.as_u64() {
                Some(u) if !n.is_f64() => Cell::Int(u),
                _ => n.as_f64().map_or_else(|| Cell::Text(n.to_string()), Cell::Num),
            };
            rows.push(vec![Cell::Text(prefix.into()), cell]);
        }
    }
}

pub fn render(report: &Report, format: Option<crate::args::Format>) -> Result<String, CliError> {
    use crate::args::Format;
    match (format, &report.text) {
        (None, Some(text)) => Ok(text.clone()),
        (None | Some(Format::Json), _) => Ok(to_json_string(&report.value)?),
        (Some(Format::Csv), _) => match &report.table {
            Some(t) => write_csv(t),
            None => {
                let mut rows = Vec::new();
                flatten("", &report.value, &mut rows);
                write_csv(&Table { figure: None, header: vec!["key", "value"], rows })
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::Format;
    use serde_json::json;

    #[test]
    fn leaves_flatten_to_key_value_rows() {
        let r = Report::json(json!({"a": {"b": [1, 0.5]}, "c": true}));
        let s = render(&r, Some(Format::Csv)).unwrap();
        assert_eq!(s, "key,value\na.b.0,1\na.b.1,0.5\nc,true\n");
    }

    #[test]
    fn tables_carry_the_figure_comment() {
        let t = Table { figure: Some("demo"), header: vec!["x", "y"], rows: vec![vec![1.0.into(), "up".into()]] };
        let s = render(&Report::json(json!({})).with_table(t), Some(Format::Csv)).unwrap();
        assert_eq!(s, "# figure: demo\nx,y\n1.0,up\n");
    }

    #[test]
    fn text_is_used_only_without_a_format() {
        let r = Report::json(json!({"x": 1})).with_text("hello\n".into());
        assert_eq!(render(&r, None).unwrap(), "hello\n");
        assert_eq!(render(&r, Some(Format::Json)).unwrap(), "{\n  \"x\": 1\n}\n");
    }
}
