//! Model prediction files: `sample_id,task,value,model_name`, one record per
//! line after a required header. Class tasks carry integers; speed carries a
//! real written in shortest round-trip form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub const PREDICTIONS_HEADER: &str = "sample_id,task,value,model_name";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Digit,
    Order,
    Speed,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Digit, Task::Order, Task::Speed];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Digit => "digit",
            Task::Order => "order",
            Task::Speed => "speed",
        }
    }

    pub fn class_count(self) -> Option<usize> {
        match self {
            Task::Digit => Some(10),
            Task::Order => Some(6),
            Task::Speed => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "digit" => Ok(Task::Digit),
            "order" => Ok(Task::Order),
            "speed" => Ok(Task::Speed),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionValue {
    Class(u8),
    Real(f64),
}

impl PredictionValue {
    pub fn as_f64(self) -> f64 {
        match self {
            PredictionValue::Class(c) => c as f64,
            PredictionValue::Real(x) => x,
        }
    }
}

impl fmt::Display for PredictionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionValue::Class(c) => write!(f, "{c}"),
            // `Display` for f64 is the shortest string that parses back exactly.
            PredictionValue::Real(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub sample_id: u64,
    pub task: Task,
    pub value: PredictionValue,
    pub model_name: String,
}

impl PredictionRecord {
    pub fn class(sample_id: u64, task: Task, class: u8, model: &str) -> Self {
        PredictionRecord {
            sample_id,
            task,
            value: PredictionValue::Class(class),
            model_name: model.to_string(),
        }
    }

    pub fn speed(sample_id: u64, value: f64, model: &str) -> Self {
        PredictionRecord {
            sample_id,
            task: Task::Speed,
            value: PredictionValue::Real(value),
            model_name: model.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PredictionError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: unknown task {task:?}")]
    UnknownTask { line: usize, task: String },
    #[error("invalid record for sample {sample_id}: {message}")]
    InvalidRecord { sample_id: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn validate(rec: &PredictionRecord) -> Result<(), String> {
    if rec.model_name.is_empty() {
        return Err("empty model name".into());
    }
    if rec.model_name.contains([',', '\n', '\r']) || rec.model_name.trim() != rec.model_name {
        return Err(format!("model name {:?} must not contain commas, newlines or edge whitespace", rec.model_name));
    }
    match (rec.task, rec.value) {
        (Task::Speed, PredictionValue::Real(x)) if x.is_finite() => Ok(()),
        (Task::Speed, PredictionValue::Real(_)) => Err("non-finite speed".into()),
        (Task::Speed, PredictionValue::Class(_)) => Err("speed predictions are real-valued".into()),
        (task, PredictionValue::Class(c)) => {
            let n = task.class_count().unwrap();
            if (c as usize) < n {
                Ok(())
            } else {
                Err(format!("{task} class {c} outside 0..{n}"))
            }
        }
        (task, PredictionValue::Real(_)) => Err(format!("{task} predictions are integer classes")),
    }
}

pub fn parse_predictions(text: &str) -> Result<Vec<PredictionRecord>, PredictionError> {
    let mut lines = text.lines().enumerate();
    let err = |line: usize, message: String| PredictionError::ParseError { line, message };
    match lines.next() {
        Some((_, h)) if h.trim_end() == PREDICTIONS_HEADER => {}
        Some((_, h)) => return Err(err(1, format!("expected header {PREDICTIONS_HEADER:?}, found {h:?}"))),
        None => return Err(err(1, "missing header line".into())),
    }
    let mut out = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 4 {
            return Err(err(line, format!("expected 4 fields, found {}", fields.len())));
        }
        let sample_id = fields[0]
            .trim()
            .parse::<u64>()
            .map_err(|e| err(line, format!("sample_id {:?}: {e}", fields[0])))?;
        let task: Task = fields[1].trim().parse().map_err(|task| PredictionError::UnknownTask { line, task })?;
        let value_str = fields[2].trim();
        let value = match task {
            Task::Speed => PredictionValue::Real(
                value_str
                    .parse::<f64>()
                    .map_err(|e| err(line, format!("value {value_str:?}: {e}")))?,
            ),
            _ => PredictionValue::Class(
                value_str
                    .parse::<u8>()
                    .map_err(|_| err(line, format!("{task} value {value_str:?} is not an integer class")))?,
            ),
        };
        let rec = PredictionRecord {
            sample_id,
            task,
            value,
            model_name: fields[3].trim().to_string(),
        };
        validate(&rec).map_err(|m| err(line, m))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn format_predictions(records: &[PredictionRecord]) -> Result<String, PredictionError> {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(PREDICTIONS_HEADER);
    out.push('\n');
    for r in records {
        validate(r).map_err(|message| PredictionError::InvalidRecord {
            sample_id: r.sample_id,
            message,
        })?;
        out.push_str(&format!("{},{},{},{}\n", r.sample_id, r.task, r.value, r.model_name));
    }
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, PredictionError> {
    parse_predictions(&std::fs::read_to_string(path)?)
}

pub fn write_predictions(records: &[PredictionRecord], path: &Path) -> Result<(), PredictionError> {
    std::fs::write(path, format_predictions(records)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse_one(line: &str) -> Result<Vec<PredictionRecord>, PredictionError> {
        parse_predictions(&format!("{PREDICTIONS_HEADER}\n{line}\n"))
    }

    #[test]
    fn real_speed_value() {
        let r = parse_one("7,speed,3.25,convlstm").unwrap();
        assert_eq!(r, vec![PredictionRecord::speed(7, 3.25, "convlstm")]);
    }

    #[test]
    fn fractional_class_rejected() {
        assert!(matches!(
            parse_one("7,digit,3.5,m"),
            Err(PredictionError::ParseError { line: 2, .. })
        ));
    }

    #[test]
    fn unknown_task() {
        assert!(matches!(
            parse_one("1,color,3,m"),
            Err(PredictionError::UnknownTask { line: 2, .. })
        ));
    }

    #[test]
    fn header_required() {
        assert!(matches!(
            parse_predictions("7,speed,3.25,convlstm\n"),
            Err(PredictionError::ParseError { line: 1, .. })
        ));
        assert!(parse_predictions("").is_err());
    }

    #[test]
    fn class_out_of_range_and_bad_field_count() {
        assert!(parse_one("1,order,6,m").is_err());
        assert!(parse_one("1,digit,9,m").is_ok());
        assert!(parse_one("1,digit,9").is_err());
        assert!(parse_one("1,speed,nan,m").is_err());
        let e = parse_predictions(&format!("{PREDICTIONS_HEADER}\n1,digit,1,m\n\n1,digit,x,m\n")).unwrap_err();
        assert!(matches!(e, PredictionError::ParseError { line: 4, .. }));
    }

    #[test]
    fn writer_rejects_commas_in_model_names() {
        assert!(format_predictions(&[PredictionRecord::speed(1, 1.0, "a,b")]).is_err());
    }

    fn record() -> impl Strategy<Value = PredictionRecord> {
        let model = "[a-z][a-z0-9_-]{0,11}";
        prop_oneof![
            (any::<u64>(), 0u8..10, model).prop_map(|(id, c, m)| PredictionRecord::class(id, Task::Digit, c, &m)),
            (any::<u64>(), 0u8..6, model).prop_map(|(id, c, m)| PredictionRecord::class(id, Task::Order, c, &m)),
            (any::<u64>(), -1e6f64..1e6, model).prop_map(|(id, x, m)| PredictionRecord::speed(id, x, &m)),
            (any::<u64>(), any::<f64>().prop_filter("finite", |x| x.is_finite()), model)
                .prop_map(|(id, x, m)| PredictionRecord::speed(id, x, &m)),
        ]
    }

    proptest! {
        #[test]
        fn text_round_trip(records in proptest::collection::vec(record(), 0..200)) {
            let text = format_predictions(&records).unwrap();
            let back = parse_predictions(&text).unwrap();
            prop_assert_eq!(&back, &records);
            prop_assert_eq!(format_predictions(&back).unwrap(), text);
        }
    }
}
