# Integration test package