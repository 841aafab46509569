"""Two-level quantum dynamics under periodic and quasiperiodic drives."""
