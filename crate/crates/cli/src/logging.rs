use std::io::Write;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogFormat {
    Json,
    Text,
}

/// Logs go to stderr at `info` unless `RUST_LOG` says otherwise. In JSON
/// mode a message that is itself a JSON object is embedded, not quoted.
pub fn init(format: LogFormat) {
    let mut b = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    if format == LogFormat::Json {
        b.format(|buf, record| {
            let msg = record.args().to_string();
            let mut line = serde_json::json!({
                "ts": buf.timestamp_millis().to_string(),
                "level": record.level().as_str().to_ascii_lowercase(),
                "target": record.target(),
            });
            match serde_json::from_str::<serde_json::Value>(&msg) {
                Ok(v @ serde_json::Value::Object(_)) => line["event"] = v,
                _ => line["msg"] = msg.into(),
            }
            writeln!(buf, "{line}")
        });
    }
    b.init();
}
