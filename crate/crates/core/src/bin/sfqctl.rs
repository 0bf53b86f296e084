fn main() {
    // behave like a regular unix tool when stdout is closed early (| head)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(sfq_control::cli::run());
}
