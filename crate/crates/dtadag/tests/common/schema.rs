//! Validator for the JSON Schema subset used by `schemas/`: `type`, `enum`,
//! `const`, `anyOf`, `required`, `properties`, `additionalProperties: false`,
//! `items`, `minItems`, `maxItems`, `minimum`, `maximum` and `$ref` (local
//! pointers and sibling files).

use std::collections::BTreeMap;
use std::fs;

use serde_json::Value;

pub struct Schemas {
    docs: BTreeMap<String, Value>,
}

impl Schemas {
    pub fn load() -> Self {
        let dir = super::manifest_dir().join("schemas");
        let mut docs = BTreeMap::new();
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().to_string();
            let doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
            docs.insert(name, doc);
        }
        Schemas { docs }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    pub fn validate(&self, file: &str, value: &Value) -> Vec<String> {
        let mut errors = Vec::new();
        self.check(file, &self.docs[file], value, "$", &mut errors);
        errors
    }

    fn resolve(&self, file: &str, reference: &str) -> (String, &Value) {
        let (target, pointer) = reference.split_once('#').unwrap_or((reference, ""));
        let target = if target.is_empty() {
            file.to_string()
        } else {
            target.to_string()
        };
        let doc = self
            .docs
            .get(&target)
            .unwrap_or_else(|| panic!("unknown schema {target}"));
        let node = doc
            .pointer(pointer)
            .unwrap_or_else(|| panic!("bad pointer {reference}"));
        (target, node)
    }

    fn check(&self, file: &str, schema: &Value, v: &Value, at: &str, errors: &mut Vec<String>) {
        let s = schema.as_object().expect("schema is an object");
        if let Some(r) = s.get("$ref").and_then(Value::as_str) {
            let (target, node) = self.resolve(file, r);
            self.check(&target, node, v, at, errors);
        }
        if let Some(t) = s.get("type").and_then(Value::as_str) {
            let ok = match t {
                "object" => v.is_object(),
                "array" => v.is_array(),
                "string" => v.is_string(),
                "number" => v.is_number(),
                "integer" => v.is_u64() || v.is_i64(),
                "boolean" => v.is_boolean(),
                "null" => v.is_null(),
                other => panic!("unsupported type {other}"),
            };
            if !ok {
                errors.push(format!("{at}: expected {t}, found {v}"));
                return;
            }
        }
        if let Some(c) = s.get("const") {
            if c != v {
                errors.push(format!("{at}: expected {c}, found {v}"));
            }
        }
        if let Some(options) = s.get("enum").and_then(Value::as_array) {
            if !options.contains(v) {
                errors.push(format!("{at}: {v} not in {options:?}"));
            }
        }
        if let Some(options) = s.get("anyOf").and_then(Value::as_array) {
            let any = options.iter().any(|o| {
                let mut e = Vec::new();
                self.check(file, o, v, at, &mut e);
                e.is_empty()
            });
            if !any {
                errors.push(format!("{at}: {v} matches no alternative"));
            }
        }
        if let Some(x) = v.as_f64() {
            if s.get("minimum").and_then(Value::as_f64).is_some_and(|m| x < m) {
                errors.push(format!("{at}: {x} below minimum"));
            }
            if s.get("maximum").and_then(Value::as_f64).is_some_and(|m| x > m) {
                errors.push(format!("{at}: {x} above maximum"));
            }
        }
        if let Some(obj) = v.as_object() {
            for key in s.get("required").and_then(Value::as_array).into_iter().flatten() {
                if !obj.contains_key(key.as_str().unwrap()) {
                    errors.push(format!("{at}: missing {key}"));
                }
            }
            let props = s.get("properties").and_then(Value::as_object);
            for (key, value) in obj {
                match props.and_then(|p| p.get(key)) {
                    Some(sub) => self.check(file, sub, value, &format!("{at}.{key}"), errors),
                    None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                        errors.push(format!("{at}: unexpected key {key}"))
                    }
                    None => {}
                }
            }
        }
        if let Some(items) = v.as_array() {
            if s.get("minItems")
                .and_then(Value::as_u64)
                .is_some_and(|m| (items.len() as u64) < m)
            {
                errors.push(format!("{at}: too few items"));
            }
            if s.get("maxItems")
                .and_then(Value::as_u64)
                .is_some_and(|m| (items.len() as u64) > m)
            {
                errors.push(format!("{at}: too many items"));
            }
            if let Some(sub) = s.get("items") {
                for (i, item) in items.iter().enumerate() {
                    self.check(file, sub, item, &format!("{at}[{i}]"), errors);
                }
            }
        }
    }
}
