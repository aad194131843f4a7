//! Command-line interface (placeholder; filled in alongside the CLI wiring).

/// Run the CLI and return the process exit code.
pub fn run() -> i32 {
    eprintln!("rgbforge: CLI not wired up yet");
    2
}
