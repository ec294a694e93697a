"""Oracle and property checks run by the verify command."""
