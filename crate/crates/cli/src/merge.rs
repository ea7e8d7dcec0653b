use toml::Value;

/// Overlays `top` on `base`. Tables merge key by key; anything else in `top`
/// replaces the base value. A table whose variant tag (`kind` or `mode`)
/// differs from the base replaces it whole, so stale variant fields never
/// leak across.
pub fn deep_merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Table(b), Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(existing) if !tag_changes(existing, &v) => deep_merge(existing, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

fn tag_changes(base: &Value, top: &Value) -> bool {
    ["kind", "mode"].iter().any(|tag| match (base.get(tag), top.get(tag)) {
        (Some(a), Some(b)) => a != b,
        _ => false,
    })
}
