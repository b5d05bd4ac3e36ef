# E2E Tests

