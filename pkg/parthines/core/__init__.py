"""Shared plumbing: settings, errors, structured linear algebra and the system abstraction."""
