//! Regenerates `presets.json` from the built-in presets:
//!
//! ```text
//! cargo run -p gridfuse-cli --example dump_presets > crates/gridfuse-cli/presets.json
//! ```

fn main() {
    let presets = gridfuse_cli::config::builtin_presets();
    println!("{}", serde_json::to_string_pretty(&presets).unwrap());
}
