"""Configuration, study orchestration and artifact output."""
