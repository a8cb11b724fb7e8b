//! Built-in scenarios, identical to the files under `presets/`.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2a", include_str!("../../../../presets/fig2a.conf")),
    ("fig2b", include_str!("../../../../presets/fig2b.conf")),
    ("fig2c", include_str!("../../../../presets/fig2c.conf")),
    ("fig2d", include_str!("../../../../presets/fig2d.conf")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// First comment line of a preset, without the `# name:` prefix.
pub fn description(name: &str) -> Option<&'static str> {
    let first = text(name)?.lines().next()?;
    let line = first.trim_start_matches('#').trim();
    Some(line.split_once(':').map_or(line, |(_, rest)| rest.trim()))
}
