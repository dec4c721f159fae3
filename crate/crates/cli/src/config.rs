use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

/// Line-oriented `key = value` settings; `#` starts a comment.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value, got {raw:?}", i + 1))?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                return Err(format!("config line {}: empty key", i + 1));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| format!("config key {key}: cannot parse {v:?}")),
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, String> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| format!("config key {key}: cannot parse {s:?}")))
                .collect::<Result<Vec<T>, String>>()
                .map(Some),
        }
    }
}

/// CLI value if given, then the config file, then the default.
pub fn pick<T: FromStr>(cli: Option<T>, cfg: &ConfigFile, key: &str, default: T) -> Result<T, String> {
    match cli {
        Some(v) => Ok(v),
        None => Ok(cfg.get(key)?.unwrap_or(default)),
    }
}

pub fn pick_opt<T: FromStr>(cli: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, String> {
    match cli {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_lookup() {
        let c = ConfigFile::parse("# run\npreset = gevrey:1\ngrid-n=1024  # smaller\ntube = 0, 1\n").unwrap();
        assert_eq!(c.get::<String>("preset").unwrap().as_deref(), Some("gevrey:1"));
        assert_eq!(c.get::<usize>("grid_n").unwrap(), Some(1024));
        assert_eq!(c.get_list::<f64>("tube").unwrap(), Some(vec![0.0, 1.0]));
        assert_eq!(pick(Some(3usize), &c, "grid_n", 4096).unwrap(), 3);
        assert_eq!(pick(None, &c, "grid_n", 4096usize).unwrap(), 1024);
        assert!(c.get::<usize>("preset").is_err());
        assert!(ConfigFile::parse("novalue\n").is_err());
    }
}
