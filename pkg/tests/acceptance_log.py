"""Pass/fail lines collected by test_acceptance and printed in the terminal summary."""

LINES = []
