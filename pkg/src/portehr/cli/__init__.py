"""Command-line front door and scenario runner."""
